//! Tensor-product SBP operators on the reference quadrilateral and hexahedron.
//!
//! Volume nodes are numbered with `eta_1` varying fastest:
//! `idx = i_1 + n1 * i_2 + n1^2 * i_3`.
//! Facet `2k - 1` is `{eta_k = -1}` and facet `2k` is `{eta_k = +1}`.

use crate::error::{Error, Result};
use crate::oned::Operator1D;
use crate::sparse::CsrMatrix;

/// A flat list of points in `dim` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize) -> Self {
        PointSet { dim, data: Vec::new() }
    }

    pub fn with_capacity(dim: usize, n: usize) -> Self {
        PointSet {
            dim,
            data: Vec::with_capacity(dim * n),
        }
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, m: usize) -> &[f64] {
        &self.data[m * self.dim..(m + 1) * self.dim]
    }

    pub fn push(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.dim);
        self.data.extend_from_slice(x);
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }
}

/// One facet of the reference quad/hex.
#[derive(Debug, Clone)]
pub struct FacetData {
    /// One-based facet id.
    pub id: usize,
    /// Zero-based coordinate direction normal to the facet.
    pub axis: usize,
    /// `-1.0` or `+1.0`.
    pub side: f64,
    /// Volume indices of the facet nodes, lexicographic in the remaining
    /// coordinates (lowest remaining axis fastest).
    pub nodes: Vec<usize>,
    /// Facet quadrature weights.
    pub b: Vec<f64>,
    pub normal: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TensorOperatorSet {
    pub dim: usize,
    pub n1: usize,
    pub degree: usize,
    pub nodes: PointSet,
    pub h: Vec<f64>,
    pub q: Vec<CsrMatrix>,
    pub d: Vec<CsrMatrix>,
    pub facets: Vec<FacetData>,
}

impl TensorOperatorSet {
    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    /// Diagonal of `Q_eta[axis] + Q_eta[axis]^T`, assembled from the facets.
    pub fn boundary_diagonal(&self, axis: usize) -> Vec<f64> {
        let mut e = vec![0.0; self.len()];
        for f in self.facets.iter().filter(|f| f.axis == axis) {
            for (&m, &b) in f.nodes.iter().zip(&f.b) {
                e[m] += f.side * b;
            }
        }
        e
    }
}

/// Multi-index of volume node `m`.
pub fn multi_index(m: usize, n1: usize, dim: usize) -> [usize; 3] {
    let mut idx = [0; 3];
    let mut r = m;
    for slot in idx.iter_mut().take(dim) {
        *slot = r % n1;
        r /= n1;
    }
    idx
}

fn flat_index(idx: &[usize], n1: usize) -> usize {
    idx.iter().rev().fold(0, |acc, &i| acc * n1 + i)
}

/// Kronecker product of `a` along `axis` with identity-weighted `w` in the
/// other directions: `A[i_k, j_k] * prod_{l != k} w[i_l] delta(i_l, j_l)`.
fn axis_operator(a: &nalgebra::DMatrix<f64>, w: &[f64], axis: usize, dim: usize) -> CsrMatrix {
    let n1 = w.len();
    let n = n1.pow(dim as u32);
    let mut t = Vec::with_capacity(n * n1);
    for r in 0..n {
        let ri = multi_index(r, n1, dim);
        let weight: f64 = (0..dim).filter(|&l| l != axis).map(|l| w[ri[l]]).product();
        let mut ci = ri;
        for j in 0..n1 {
            let v = a[(ri[axis], j)];
            if v != 0.0 {
                ci[axis] = j;
                t.push((r, flat_index(&ci[..dim], n1), v * weight));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &t)
}

/// Facet node lists, weights and normals for the `2 dim` facets.
pub fn facet_layout(dim: usize, n1: usize, weights: &[f64]) -> Result<Vec<FacetData>> {
    if !(2..=3).contains(&dim) {
        return Err(Error::Dimension(dim));
    }
    let mut facets = Vec::with_capacity(2 * dim);
    for axis in 0..dim {
        for (s, side) in [(0usize, -1.0), (1, 1.0)] {
            let fixed = if s == 0 { 0 } else { n1 - 1 };
            let others: Vec<usize> = (0..dim).filter(|&l| l != axis).collect();
            let nf = n1.pow(dim as u32 - 1);
            let mut nodes = Vec::with_capacity(nf);
            let mut b = Vec::with_capacity(nf);
            for k in 0..nf {
                let fi = multi_index(k, n1, dim - 1);
                let mut idx = [0usize; 3];
                idx[axis] = fixed;
                let mut w = 1.0;
                for (slot, &l) in others.iter().enumerate() {
                    idx[l] = fi[slot];
                    w *= weights[fi[slot]];
                }
                nodes.push(flat_index(&idx[..dim], n1));
                b.push(w);
            }
            let mut normal = vec![0.0; dim];
            normal[axis] = side;
            facets.push(FacetData {
                id: 2 * axis + 1 + s,
                axis,
                side,
                nodes,
                b,
                normal,
            });
        }
    }
    Ok(facets)
}

/// Lifts a one-dimensional operator to `[-1, 1]^dim`.
pub fn tensor_product(op: &Operator1D, dim: usize) -> Result<TensorOperatorSet> {
    if !(2..=3).contains(&dim) {
        return Err(Error::Dimension(dim));
    }
    let n1 = op.n1();
    let n = n1.pow(dim as u32);
    let mut nodes = PointSet::with_capacity(dim, n);
    let mut h = Vec::with_capacity(n);
    for m in 0..n {
        let idx = multi_index(m, n1, dim);
        let x: Vec<f64> = idx[..dim].iter().map(|&i| op.nodes[i]).collect();
        nodes.push(&x);
        h.push(idx[..dim].iter().map(|&i| op.h[i]).product());
    }
    let ones = vec![1.0; n1];
    let q = (0..dim).map(|k| axis_operator(&op.q, &op.h, k, dim)).collect();
    let d = (0..dim).map(|k| axis_operator(&op.d, &ones, k, dim)).collect();
    Ok(TensorOperatorSet {
        dim,
        n1,
        degree: op.degree,
        nodes,
        h,
        q,
        d,
        facets: facet_layout(dim, n1, &op.h)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oned::build_lgl_operator;

    fn kron(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let (na, nb) = (a.len(), b.len());
        let mut out = vec![vec![0.0; na * nb]; na * nb];
        for i in 0..na {
            for j in 0..na {
                for k in 0..nb {
                    for l in 0..nb {
                        out[i * nb + k][j * nb + l] = a[i][j] * b[k][l];
                    }
                }
            }
        }
        out
    }

    fn dense(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
    }

    fn diag(v: &[f64]) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; v.len()]; v.len()];
        for (i, x) in v.iter().enumerate() {
            d[i][i] = *x;
        }
        d
    }

    #[test]
    fn matches_explicit_kronecker_products() {
        let op = build_lgl_operator(3).unwrap();
        let t = tensor_product(&op, 2).unwrap();
        let h = diag(&op.h);
        let q = dense(&op.q);
        assert_eq!(t.q[0].to_dense(), kron(&h, &q));
        assert_eq!(t.q[1].to_dense(), kron(&q, &h));
        let t3 = tensor_product(&op, 3).unwrap();
        let expect = kron(&kron(&h, &q), &h);
        let got = t3.q[1].to_dense();
        for i in 0..27 {
            for j in 0..27 {
                assert!((got[i][j] - expect[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn two_node_boundary_pattern() {
        let t = tensor_product(&build_lgl_operator(2).unwrap(), 2).unwrap();
        assert_eq!(t.h, vec![1.0; 4]);
        let s = t.q[0].add_scaled(&t.q[0].transpose(), 1.0);
        for r in 0..4 {
            let expect = [-1.0, 1.0, -1.0, 1.0][r];
            assert!((s.get(r, r).unwrap() - expect).abs() < 1e-15);
        }
        assert_eq!(t.facets[0].nodes, vec![0, 2]);
    }

    #[test]
    fn facet_counts_and_boundary_decomposition() {
        for (dim, n1) in [(2, 4), (3, 3), (3, 4)] {
            let t = tensor_product(&build_lgl_operator(n1).unwrap(), dim).unwrap();
            assert_eq!(t.facets.len(), 2 * dim);
            for f in &t.facets {
                assert_eq!(f.nodes.len(), n1.pow(dim as u32 - 1));
                let sb: f64 = f.b.iter().sum();
                assert!((sb - 2f64.powi(dim as i32 - 1)).abs() < 1e-13);
            }
            for k in 0..dim {
                let e = t.boundary_diagonal(k);
                let s = t.q[k].add_scaled(&t.q[k].transpose(), 1.0);
                for (r, c, v) in s.triplets() {
                    let expect = if r == c { e[r] } else { 0.0 };
                    assert!((v - expect).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn quadrature_and_exactness() {
        let n1 = 4;
        let t = tensor_product(&build_lgl_operator(n1).unwrap(), 3).unwrap();
        let total: f64 = t.h.iter().sum();
        assert!((total - 8.0).abs() < 1e-13);
        let maxq = 2 * n1 - 3;
        let integral = |a: usize| if a % 2 == 1 { 0.0 } else { 2.0 / (a as f64 + 1.0) };
        for a in 0..=maxq {
            for b in 0..=maxq {
                let s: f64 = (0..t.len())
                    .map(|m| {
                        let x = t.nodes.point(m);
                        t.h[m] * x[0].powi(a as i32) * x[2].powi(b as i32)
                    })
                    .sum();
                assert!((s - integral(a) * 2.0 * integral(b)).abs() < 1e-12);
            }
        }
        let n = t.len();
        let f: Vec<f64> = (0..n).map(|m| t.nodes.point(m)[1].powi(3)).collect();
        let mut df = vec![0.0; n];
        t.d[1].matvec(&f, &mut df);
        for m in 0..n {
            assert!((df[m] - 3.0 * t.nodes.point(m)[1].powi(2)).abs() < 1e-10);
        }
        let f: Vec<f64> = (0..n).map(|m| t.nodes.point(m)[0].powi(4)).collect();
        t.d[0].matvec(&f, &mut df);
        let worst = (0..n).map(|m| (df[m] - 4.0 * t.nodes.point(m)[0].powi(3)).abs()).fold(0.0, f64::max);
        assert!(worst > 1e-6);
    }
}
