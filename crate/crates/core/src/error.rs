use thiserror::Error;

/// Errors raised while building operators, meshes or running solves.
#[derive(Debug, Error)]
pub enum Error {
    #[error("construction error: {0}")]
    Construction(String),

    #[error("invalid dimension {0}: expected 2 or 3")]
    Dimension(usize),

    #[error("geometry error in subdomain {subdomain}, node {node}: {msg}")]
    Geometry {
        subdomain: usize,
        node: usize,
        msg: String,
    },

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("invariant `{name}` violated: residual {residual:.3e} exceeds {tolerance:.1e}")]
    Invariant {
        name: String,
        residual: f64,
        tolerance: f64,
    },

    #[error("element {element}: {msg}")]
    Element { element: usize, msg: String },

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
