//! Splitting of the reference simplex into quadrilaterals / hexahedra and the
//! multilinear maps from `[-1, 1]^d` onto each piece.
//!
//! The reference simplex has vertices `v_0 = (-1, ..., -1)` and
//! `v_k = v_0 + 2 e_k`. Subdomain `l` (zero-based) is the piece containing
//! `v_l`. Its `eta_k` axis points along `+xi_k`, so `v_l` sits at the
//! `eta`-corner whose sign pattern equals the sign pattern of `v_l`.

use crate::error::{Error, Result};
use crate::tensor::{PointSet, TensorOperatorSet};

/// Corner sign patterns in shape-function order.
pub const SIGNS_2D: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
pub const SIGNS_3D: [[f64; 3]; 8] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, 1.0, 1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
];

/// Sign pattern of shape-function vertex `alpha`.
pub fn corner_signs(dim: usize, alpha: usize) -> &'static [f64] {
    match dim {
        2 => &SIGNS_2D[alpha],
        _ => &SIGNS_3D[alpha],
    }
}

/// Vertices of the reference simplex.
pub fn simplex_vertices(dim: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![-1.0; dim]];
    for k in 0..dim {
        let mut v = vec![-1.0; dim];
        v[k] = 1.0;
        out.push(v);
    }
    out
}

#[derive(Debug, Clone)]
pub struct SubdomainGeometry {
    pub dim: usize,
    /// Zero-based index of the simplex vertex contained in this piece.
    pub ell: usize,
    /// `2^d` vertices in shape-function order.
    pub vertices: Vec<Vec<f64>>,
}

/// Mapped coordinates, Jacobians and metric terms at the nodes of a tensor grid.
#[derive(Debug, Clone)]
pub struct NodeMetrics {
    pub xi: PointSet,
    pub jdet: Vec<f64>,
    /// `lambda[j][i][m] = |J| d eta_j / d xi_i` at node `m`.
    pub lambda: Vec<Vec<Vec<f64>>>,
}

/// The `d + 1` subdomain geometries of the split reference simplex.
pub fn split_vertices(dim: usize) -> Result<Vec<SubdomainGeometry>> {
    if !(2..=3).contains(&dim) {
        return Err(Error::Dimension(dim));
    }
    let v = simplex_vertices(dim);
    let nv = 1 << dim;
    let mut out = Vec::with_capacity(dim + 1);
    for ell in 0..=dim {
        let mut vertices = Vec::with_capacity(nv);
        for alpha in 0..nv {
            let s = corner_signs(dim, alpha);
            let mut members = vec![ell];
            for k in 0..dim {
                if ell == k + 1 {
                    if s[k] < 0.0 {
                        members.push(0);
                    }
                } else if s[k] > 0.0 {
                    members.push(k + 1);
                }
            }
            let mut p = vec![0.0; dim];
            for &mbr in &members {
                for (pi, vi) in p.iter_mut().zip(&v[mbr]) {
                    *pi += vi;
                }
            }
            let nm = members.len() as f64;
            vertices.push(p.into_iter().map(|x| x / nm).collect());
        }
        out.push(SubdomainGeometry { dim, ell, vertices });
    }
    Ok(out)
}

/// Multilinear shape functions `Psi_alpha(eta)`.
pub fn shape_functions(dim: usize, eta: &[f64]) -> Vec<f64> {
    (0..1 << dim)
        .map(|alpha| {
            let s = corner_signs(dim, alpha);
            (0..dim).map(|k| 0.5 * (1.0 + s[k] * eta[k])).product()
        })
        .collect()
}

/// `d Psi_alpha / d eta_b`, indexed `[alpha][b]`.
pub fn shape_function_gradients(dim: usize, eta: &[f64]) -> Vec<Vec<f64>> {
    (0..1 << dim)
        .map(|alpha| {
            let s = corner_signs(dim, alpha);
            (0..dim)
                .map(|b| {
                    (0..dim)
                        .map(|k| if k == b { 0.5 * s[k] } else { 0.5 * (1.0 + s[k] * eta[k]) })
                        .product()
                })
                .collect()
        })
        .collect()
}

impl SubdomainGeometry {
    pub fn map_point(&self, eta: &[f64]) -> Vec<f64> {
        let psi = shape_functions(self.dim, eta);
        let mut xi = vec![0.0; self.dim];
        for (p, w) in self.vertices.iter().zip(&psi) {
            for (x, pv) in xi.iter_mut().zip(p) {
                *x += w * pv;
            }
        }
        xi
    }

    /// `J[a][b] = d xi_a / d eta_b`.
    pub fn jacobian(&self, eta: &[f64]) -> Vec<Vec<f64>> {
        let grad = shape_function_gradients(self.dim, eta);
        let mut j = vec![vec![0.0; self.dim]; self.dim];
        for (p, g) in self.vertices.iter().zip(&grad) {
            for a in 0..self.dim {
                for b in 0..self.dim {
                    j[a][b] += p[a] * g[b];
                }
            }
        }
        j
    }

    /// Evaluates the map, `|J|` and the metric terms at every node of `tset`.
    pub fn jacobian_and_metrics(&self, tset: &TensorOperatorSet) -> Result<NodeMetrics> {
        let dim = self.dim;
        let n = tset.len();
        let mut xi = PointSet::with_capacity(dim, n);
        let mut jdet = Vec::with_capacity(n);
        let mut lambda = vec![vec![vec![0.0; n]; dim]; dim];
        for m in 0..n {
            let eta = tset.nodes.point(m);
            xi.push(&self.map_point(eta));
            let j = self.jacobian(eta);
            let (det, adj) = det_and_adjugate(&j);
            if det <= 0.0 || !det.is_finite() {
                return Err(Error::Geometry {
                    subdomain: self.ell,
                    node: m,
                    msg: format!("nonpositive Jacobian determinant {det:e}"),
                });
            }
            jdet.push(det);
            for (jj, row) in adj.iter().enumerate() {
                for (i, &v) in row.iter().enumerate() {
                    lambda[jj][i][m] = v;
                }
            }
        }
        Ok(NodeMetrics { xi, jdet, lambda })
    }
}

/// Determinant and adjugate of a 2x2 or 3x3 matrix, from cofactors.
pub fn det_and_adjugate(j: &[Vec<f64>]) -> (f64, Vec<Vec<f64>>) {
    match j.len() {
        2 => {
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            (det, vec![vec![j[1][1], -j[0][1]], vec![-j[1][0], j[0][0]]])
        }
        _ => {
            let c = |r: usize, s: usize| {
                let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
                let (s1, s2) = ((s + 1) % 3, (s + 2) % 3);
                j[r1][s1] * j[r2][s2] - j[r1][s2] * j[r2][s1]
            };
            // adj[a][b] = cofactor(b, a)
            let adj: Vec<Vec<f64>> = (0..3).map(|a| (0..3).map(|b| c(b, a)).collect()).collect();
            let det = (0..3).map(|s| j[0][s] * c(0, s)).sum();
            (det, adj)
        }
    }
}

/// Largest entry of `sum_j D_eta_j Lambda_{eta_j, xi_i}` over all nodes and `i`.
pub fn metric_identity_residual(tset: &TensorOperatorSet, metrics: &NodeMetrics) -> f64 {
    let n = tset.len();
    let dim = tset.dim;
    let mut worst = 0.0f64;
    let mut tmp = vec![0.0; n];
    for i in 0..dim {
        let mut acc = vec![0.0; n];
        for j in 0..dim {
            tset.d[j].matvec(&metrics.lambda[j][i], &mut tmp);
            for (a, t) in acc.iter_mut().zip(&tmp) {
                *a += t;
            }
        }
        worst = acc.iter().fold(worst, |w, v| w.max(v.abs()));
    }
    worst
}
