//! Tensor-product split-simplex summation-by-parts operators.
//!
//! The crate builds one-dimensional SBP operators, lifts them to the
//! reference quadrilateral and hexahedron, maps those onto the split pieces
//! of the reference triangle and tetrahedron, and assembles simplex
//! operators. On top of that it provides affine physical elements, periodic
//! simplicial meshes and an SBP-SAT linear advection solver.

pub mod advect;
pub mod assembly;
pub mod error;
pub mod exchange;
pub mod mesh;
pub mod oned;
pub mod physmap;
pub mod poly;
pub mod sparse;
pub mod split;
pub mod tensor;
pub mod verify;

pub use assembly::{assemble, build_tpss, TpssOperator};
pub use error::{Error, Result};
pub use oned::{Family, Operator1D};
