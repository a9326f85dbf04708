//! TPSS operators on physical simplices under affine maps.
//!
//! The map is `x = X_0 + sum_k (X_k - X_0) (xi_k + 1) / 2`, so reference
//! vertex `k` lands on physical vertex `X_k`. With `J` constant,
//! `D_x_i = sum_j (adj(J)_{j i} / |J|) D_xi_j` and the scaled facet normal is
//! `n~ = adj(J)^T n_xi`.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use crate::assembly::TpssOperator;
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;
use crate::split::det_and_adjugate;
use crate::tensor::PointSet;

#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub dim: usize,
    pub origin: Vec<f64>,
    /// `jac[a][b] = d x_a / d xi_b`.
    pub jac: Vec<Vec<f64>>,
    pub det: f64,
    /// Adjugate of `jac`; `adj[j][i] = |J| d xi_j / d x_i`.
    pub adj: Vec<Vec<f64>>,
}

impl AffineMap {
    /// Returns `None` for a degenerate or inverted element.
    pub fn from_vertices(vertices: &[Vec<f64>]) -> Option<AffineMap> {
        let dim = vertices.len() - 1;
        let x0 = &vertices[0];
        let jac: Vec<Vec<f64>> = (0..dim)
            .map(|a| (0..dim).map(|b| 0.5 * (vertices[b + 1][a] - x0[a])).collect())
            .collect();
        let (det, adj) = det_and_adjugate(&jac);
        if det.is_finite() && det > 0.0 {
            Some(AffineMap {
                dim,
                origin: x0.clone(),
                jac,
                det,
                adj,
            })
        } else {
            None
        }
    }

    pub fn map(&self, xi: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|a| self.origin[a] + (0..self.dim).map(|b| self.jac[a][b] * (xi[b] + 1.0)).sum::<f64>())
            .collect()
    }

    /// Coefficients `a_j` with `sum_i v_i D_x_i = sum_j a_j D_xi_j`.
    pub fn reference_coefficients(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| v[i] * self.adj[j][i]).sum::<f64>() / self.det)
            .collect()
    }

    /// Scaled outward normal for a reference facet with unit normal `n_xi`.
    pub fn scaled_normal(&self, n_xi: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| n_xi[j] * self.adj[j][i]).sum())
            .collect()
    }
}

/// Facet data of a physical element.
#[derive(Debug, Clone)]
pub struct ElementFacet {
    /// Volume indices of the facet nodes, in reference facet order.
    pub nodes: Vec<usize>,
    /// Reference facet quadrature.
    pub b: Vec<f64>,
    /// `N_x_i` on this facet; constant for affine elements.
    pub normal: Vec<f64>,
}

/// The translation-invariant part of an element's operators.
#[derive(Debug, Clone)]
pub struct ShapeOperators {
    pub dim: usize,
    pub jdet: f64,
    pub h: Vec<f64>,
    pub q: Vec<CsrMatrix>,
    pub d: Vec<CsrMatrix>,
    /// Diagonals of `E_x_i`.
    pub e: Vec<Vec<f64>>,
    pub facets: Vec<ElementFacet>,
}

#[derive(Debug, Clone)]
pub struct ElementOperators {
    pub id: usize,
    pub map: AffineMap,
    /// Physical node coordinates.
    pub nodes: PointSet,
    pub ops: Arc<ShapeOperators>,
}

impl ElementOperators {
    /// Physical coordinates of the nodes of facet `g`.
    pub fn facet_coords(&self, g: usize) -> PointSet {
        let mut p = PointSet::new(self.map.dim);
        for &m in &self.ops.facets[g].nodes {
            p.push(self.nodes.point(m));
        }
        p
    }
}

fn shape_operators(op: &TpssOperator, map: &AffineMap) -> ShapeOperators {
    let dim = op.dim;
    let n = op.n_p();
    let h: Vec<f64> = op.h.iter().map(|x| x * map.det).collect();
    let mut q = Vec::with_capacity(dim);
    let mut d = Vec::with_capacity(dim);
    let mut e = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut qt = Vec::new();
        let mut dt = Vec::new();
        let mut ei = vec![0.0; n];
        for j in 0..dim {
            let w = map.adj[j][i];
            qt.extend(op.q[j].triplets().map(|(r, c, v)| (r, c, w * v)));
            dt.extend(op.d[j].triplets().map(|(r, c, v)| (r, c, w / map.det * v)));
            for (x, ej) in ei.iter_mut().zip(&op.e[j]) {
                *x += w * ej;
            }
        }
        q.push(CsrMatrix::from_triplets(n, n, &qt));
        d.push(CsrMatrix::from_triplets(n, n, &dt));
        e.push(ei);
    }
    let facets = op
        .facets
        .iter()
        .map(|f| ElementFacet {
            nodes: f.nodes.clone(),
            b: f.b.clone(),
            normal: map.scaled_normal(&f.normal),
        })
        .collect();
    ShapeOperators {
        dim,
        jdet: map.det,
        h,
        q,
        d,
        e,
        facets,
    }
}

fn physical_nodes(op: &TpssOperator, map: &AffineMap) -> PointSet {
    let mut p = PointSet::with_capacity(op.dim, op.n_p());
    for xi in op.nodes.iter() {
        p.push(&map.map(xi));
    }
    p
}

/// Builds the operators of element `id` with the given `d + 1` vertices.
pub fn build_element_operators(op: &TpssOperator, id: usize, vertices: &[Vec<f64>]) -> Result<ElementOperators> {
    if vertices.len() != op.dim + 1 || vertices.iter().any(|v| v.len() != op.dim) {
        return Err(Error::Element {
            element: id,
            msg: format!("expected {} vertices in {}D", op.dim + 1, op.dim),
        });
    }
    let map = AffineMap::from_vertices(vertices).ok_or_else(|| Error::Element {
        element: id,
        msg: "degenerate or inverted element".into(),
    })?;
    Ok(ElementOperators {
        id,
        nodes: physical_nodes(op, &map),
        ops: Arc::new(shape_operators(op, &map)),
        map,
    })
}

type ShapeKey = Vec<i64>;

/// Shares element operators between congruent elements.
///
/// Elements are keyed by their edge vectors `X_k - X_0`, rounded to `tol`
/// times the longest edge (itself rounded up to a power of two). Lookups
/// take a read lock; a miss builds the operators and inserts them under a
/// write lock.
pub struct ShapeCache {
    op: Arc<TpssOperator>,
    tol: f64,
    shapes: RwLock<HashMap<ShapeKey, Arc<ShapeOperators>>>,
}

impl ShapeCache {
    pub fn new(op: Arc<TpssOperator>) -> Self {
        ShapeCache {
            op,
            tol: 1e-12,
            shapes: RwLock::new(HashMap::new()),
        }
    }

    pub fn operator(&self) -> &TpssOperator {
        &self.op
    }

    fn key(&self, vertices: &[Vec<f64>]) -> ShapeKey {
        let x0 = &vertices[0];
        let edges: Vec<f64> = vertices[1..]
            .iter()
            .flat_map(|v| v.iter().zip(x0).map(|(a, b)| a - b))
            .collect();
        let scale = edges.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let exponent = scale.log2().ceil() as i32;
        let quantum = self.tol * 2f64.powi(exponent);
        let mut key: Vec<i64> = edges.iter().map(|e| (e / quantum).round() as i64).collect();
        key.push(exponent as i64);
        key
    }

    pub fn len(&self) -> usize {
        self.shapes.read().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, id: usize, vertices: &[Vec<f64>]) -> Result<ElementOperators> {
        if vertices.len() != self.op.dim + 1 {
            return build_element_operators(&self.op, id, vertices);
        }
        let map = AffineMap::from_vertices(vertices).ok_or_else(|| Error::Element {
            element: id,
            msg: "degenerate or inverted element".into(),
        })?;
        let key = self.key(vertices);
        let cached = self.shapes.read().unwrap_or_else(|e| e.into_inner()).get(&key).cloned();
        let ops = match cached {
            Some(ops) => ops,
            None => {
                let built = Arc::new(shape_operators(&self.op, &map));
                let mut w = self.shapes.write().unwrap_or_else(|e| e.into_inner());
                w.entry(key).or_insert(built).clone()
            }
        };
        Ok(ElementOperators {
            id,
            nodes: physical_nodes(&self.op, &map),
            ops,
            map,
        })
    }
}

/// Element volume from its vertices.
pub fn simplex_volume(vertices: &[Vec<f64>]) -> f64 {
    let dim = vertices.len() - 1;
    let m: Vec<Vec<f64>> = (0..dim)
        .map(|a| (0..dim).map(|b| vertices[b + 1][a] - vertices[0][a]).collect())
        .collect();
    let (det, _) = det_and_adjugate(&m);
    let fact: f64 = (1..=dim).map(|k| k as f64).product();
    det / fact
}
