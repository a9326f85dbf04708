//! Assembly of tensor-product split-simplex (TPSS) operators.
//!
//! Each split subdomain receives curvilinear SBP operators built from the
//! tensor-product operators and the metric terms of its multilinear map.
//! Those are scattered into a global operator on the union of the subdomain
//! nodes, with shared interface nodes merged.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::oned::{build_csbp_operator_with_degree, build_lgl_operator, Family, Operator1D};
use crate::sparse::CsrMatrix;
use crate::split::{split_vertices, NodeMetrics, SubdomainGeometry};
use crate::tensor::{tensor_product, PointSet, TensorOperatorSet};

/// Distance below which two mapped nodes are treated as the same node.
pub const MERGE_TOL: f64 = 1e-12;

pub mod tol {
    pub const SBP_PROPERTY: f64 = 1e-12;
    pub const ROW_SUM: f64 = 1e-12;
    pub const E_DECOMPOSITION: f64 = 1e-13;
    pub const NORM_SUM: f64 = 1e-12;
    pub const NORMAL: f64 = 1e-12;
}

/// Operators of one split subdomain, in the subdomain's local node order.
#[derive(Debug, Clone)]
pub struct SubdomainOperators {
    pub geometry: SubdomainGeometry,
    pub metrics: NodeMetrics,
    pub h: Vec<f64>,
    pub q: Vec<CsrMatrix>,
    /// Diagonal of `E_xi[i]`.
    pub e: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct AssemblyMap {
    pub n_p: usize,
    pub coords: PointSet,
    pub local_to_global: Vec<Vec<usize>>,
}

/// Quadrature data on one facet of the reference simplex.
///
/// Facet `g` is the facet opposite simplex vertex `g`.
#[derive(Debug, Clone)]
pub struct SimplexFacet {
    /// Global node indices, lexicographic in the reference coordinates.
    pub nodes: Vec<usize>,
    pub b: Vec<f64>,
    /// Outward unit normal.
    pub normal: Vec<f64>,
}

/// An assembled TPSS operator on the reference triangle or tetrahedron.
#[derive(Debug, Clone)]
pub struct TpssOperator {
    pub dim: usize,
    /// Degree of exactness of `D`.
    pub degree: usize,
    pub n1: usize,
    pub family: Family,
    pub nodes: PointSet,
    pub h: Vec<f64>,
    pub q: Vec<CsrMatrix>,
    pub d: Vec<CsrMatrix>,
    pub s: Vec<CsrMatrix>,
    /// Diagonals of `E_xi[i]`.
    pub e: Vec<Vec<f64>>,
    pub facets: Vec<SimplexFacet>,
}

impl TpssOperator {
    pub fn n_p(&self) -> usize {
        self.h.len()
    }

    /// True for nodes lying on at least one facet.
    pub fn boundary_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n_p()];
        for f in &self.facets {
            for &m in &f.nodes {
                mask[m] = true;
            }
        }
        mask
    }

    /// Diagonal of `sum_g R_g^T B_g N_{xi_i, g} R_g`.
    pub fn facet_boundary_operator(&self, i: usize) -> Vec<f64> {
        let mut e = vec![0.0; self.n_p()];
        for f in &self.facets {
            for (&m, &b) in f.nodes.iter().zip(&f.b) {
                e[m] += b * f.normal[i];
            }
        }
        e
    }

    /// Rebuilds `D` and `S` from `H`, `Q` and `E`.
    pub fn from_parts(
        dim: usize,
        degree: usize,
        n1: usize,
        family: Family,
        nodes: PointSet,
        h: Vec<f64>,
        q: Vec<CsrMatrix>,
        e: Vec<Vec<f64>>,
        facets: Vec<SimplexFacet>,
    ) -> TpssOperator {
        let hinv: Vec<f64> = h.iter().map(|x| 1.0 / x).collect();
        let d = q.iter().map(|qi| qi.scale_rows(&hinv)).collect();
        let s = q
            .iter()
            .zip(&e)
            .map(|(qi, ei)| {
                let half: Vec<f64> = ei.iter().map(|x| 0.5 * x).collect();
                qi.add_scaled(&CsrMatrix::from_diagonal(&half), -1.0)
            })
            .collect();
        TpssOperator {
            dim,
            degree,
            n1,
            family,
            nodes,
            h,
            q,
            d,
            s,
            e,
            facets,
        }
    }
}

/// Node count of the TPSS operator built from `n1` nodes per direction.
pub fn expected_node_count(dim: usize, n1: usize) -> usize {
    let (d, n) = (dim as i64, n1 as i64);
    let val = (d + 1) * n.pow(dim as u32) - (d + d.pow(dim as u32 - 2)) * n.pow(dim as u32 - 1)
        + (d - 2) * ((d + 1) * n - 2)
        + 1;
    val as usize
}

/// Measure of facet `g` of the reference simplex.
pub fn reference_facet_measure(dim: usize, g: usize) -> f64 {
    match (dim, g) {
        (2, 0) => 2.0 * 2f64.sqrt(),
        (3, 0) => 2.0 * 3f64.sqrt(),
        _ => 2.0,
    }
}

/// Outward unit normal of facet `g` of the reference simplex.
pub fn reference_facet_normal(dim: usize, g: usize) -> Vec<f64> {
    if g == 0 {
        vec![1.0 / (dim as f64).sqrt(); dim]
    } else {
        let mut n = vec![0.0; dim];
        n[g - 1] = -1.0;
        n
    }
}

/// Signed distance-like level set of facet `g`; zero on the facet.
fn facet_level(dim: usize, g: usize, xi: &[f64]) -> f64 {
    if g == 0 {
        xi.iter().sum::<f64>() - (2.0 - dim as f64)
    } else {
        xi[g - 1] + 1.0
    }
}

/// Curvilinear SBP operators on one subdomain.
pub fn subdomain_operators(geom: &SubdomainGeometry, tset: &TensorOperatorSet) -> Result<SubdomainOperators> {
    let dim = tset.dim;
    let n = tset.len();
    let metrics = geom.jacobian_and_metrics(tset)?;
    let h: Vec<f64> = tset.h.iter().zip(&metrics.jdet).map(|(a, b)| a * b).collect();
    let e_eta: Vec<Vec<f64>> = (0..dim).map(|j| tset.boundary_diagonal(j)).collect();
    let mut q = Vec::with_capacity(dim);
    let mut e = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut ei = vec![0.0; n];
        let mut t = Vec::new();
        for j in 0..dim {
            let lam = &metrics.lambda[j][i];
            for m in 0..n {
                ei[m] += e_eta[j][m] * lam[m];
            }
            for (r, c, v) in tset.q[j].triplets() {
                t.push((r, c, 0.5 * lam[r] * v));
                t.push((c, r, -0.5 * lam[r] * v));
            }
        }
        for (m, &x) in ei.iter().enumerate() {
            t.push((m, m, 0.5 * x));
        }
        q.push(CsrMatrix::from_triplets(n, n, &t));
        e.push(ei);
    }
    let ones = vec![1.0; n];
    let mut out = vec![0.0; n];
    for (i, qi) in q.iter().enumerate() {
        qi.matvec(&ones, &mut out);
        let worst = out.iter().fold(0.0f64, |w, v| w.max(v.abs()));
        if worst > tol::ROW_SUM {
            return Err(Error::Invariant {
                name: format!("subdomain {} Q_xi{} row sums", geom.ell, i + 1),
                residual: worst,
                tolerance: tol::ROW_SUM,
            });
        }
    }
    Ok(SubdomainOperators {
        geometry: geom.clone(),
        metrics,
        h,
        q,
        e,
    })
}

type CellKey = [i64; 3];

fn cell_of(x: &[f64], cell: f64) -> CellKey {
    let mut k = [0i64; 3];
    for (slot, v) in k.iter_mut().zip(x) {
        *slot = (v / cell).floor() as i64;
    }
    k
}

/// Numbers unique nodes in order of first appearance, walking the subdomains
/// in order and each subdomain's nodes in local order.
pub fn global_numbering(local_coords: &[PointSet], tol: f64) -> AssemblyMap {
    let dim = local_coords.first().map_or(2, |p| p.dim);
    let cell = (tol * 1e3).max(1e-9);
    let mut buckets: HashMap<CellKey, Vec<usize>> = HashMap::new();
    let mut coords = PointSet::new(dim);
    let mut local_to_global = Vec::with_capacity(local_coords.len());
    for pts in local_coords {
        let mut l2g = Vec::with_capacity(pts.len());
        for x in pts.iter() {
            let key = cell_of(x, cell);
            let mut found = None;
            'search: for off in 0..3usize.pow(dim as u32) {
                let mut k = key;
                let mut r = off;
                for slot in k.iter_mut().take(dim) {
                    *slot += (r % 3) as i64 - 1;
                    r /= 3;
                }
                if let Some(list) = buckets.get(&k) {
                    for &g in list {
                        let y = coords.point(g);
                        let dist2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                        if dist2.sqrt() <= tol {
                            found = Some(g);
                            break 'search;
                        }
                    }
                }
            }
            let g = found.unwrap_or_else(|| {
                let g = coords.len();
                coords.push(x);
                buckets.entry(key).or_default().push(g);
                g
            });
            l2g.push(g);
        }
        local_to_global.push(l2g);
    }
    AssemblyMap {
        n_p: coords.len(),
        coords,
        local_to_global,
    }
}

/// Everything produced while assembling an operator.
#[derive(Debug, Clone)]
pub struct AssemblyDetail {
    pub operator: TpssOperator,
    pub map: AssemblyMap,
    pub tensor: TensorOperatorSet,
    pub subdomains: Vec<SubdomainOperators>,
}

/// Assembles the TPSS operator on the `dim`-simplex from a 1D operator.
pub fn assemble(dim: usize, op1d: &Operator1D) -> Result<TpssOperator> {
    assemble_detailed(dim, op1d).map(|a| a.operator)
}

pub fn assemble_detailed(dim: usize, op1d: &Operator1D) -> Result<AssemblyDetail> {
    if !(2..=3).contains(&dim) {
        return Err(Error::Dimension(dim));
    }
    if op1d.degree + 1 < dim {
        return Err(Error::Construction(format!(
            "a degree {} one-dimensional operator cannot produce a TPSS operator in {dim}D (needs degree >= {})",
            op1d.degree,
            dim - 1
        )));
    }
    let tset = tensor_product(op1d, dim)?;
    let geoms = split_vertices(dim)?;
    let subs: Vec<SubdomainOperators> = geoms
        .iter()
        .map(|g| subdomain_operators(g, &tset))
        .collect::<Result<_>>()?;
    let local_coords: Vec<PointSet> = subs.iter().map(|s| s.metrics.xi.clone()).collect();
    let map = global_numbering(&local_coords, MERGE_TOL);
    let n1 = op1d.n1();
    let expected = expected_node_count(dim, n1);
    if map.n_p != expected {
        return Err(Error::Assembly(format!(
            "merged node count {} differs from the expected {expected}",
            map.n_p
        )));
    }
    let n_p = map.n_p;

    let mut h = vec![0.0; n_p];
    let mut e = vec![vec![0.0; n_p]; dim];
    let mut q_trip: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); dim];
    for (sub, l2g) in subs.iter().zip(&map.local_to_global) {
        for (m, &g) in l2g.iter().enumerate() {
            h[g] += sub.h[m];
            for i in 0..dim {
                e[i][g] += sub.e[i][m];
            }
        }
        for i in 0..dim {
            q_trip[i].extend(sub.q[i].triplets().map(|(r, c, v)| (l2g[r], l2g[c], v)));
        }
    }
    let q: Vec<CsrMatrix> = q_trip.iter().map(|t| CsrMatrix::from_triplets(n_p, n_p, t)).collect();

    let facets = assemble_facets(dim, &tset, &subs, &map)?;
    let op = TpssOperator::from_parts(
        dim,
        op1d.degree + 1 - dim,
        n1,
        op1d.family,
        map.coords.clone(),
        h,
        q,
        e,
        facets,
    );
    check_algebraic_invariants(&op)?;
    Ok(AssemblyDetail {
        operator: op,
        map,
        tensor: tset,
        subdomains: subs,
    })
}

fn assemble_facets(
    dim: usize,
    tset: &TensorOperatorSet,
    subs: &[SubdomainOperators],
    map: &AssemblyMap,
) -> Result<Vec<SimplexFacet>> {
    let mut out = Vec::with_capacity(dim + 1);
    for g in 0..=dim {
        let normal = reference_facet_normal(dim, g);
        let mut weights: HashMap<usize, f64> = HashMap::new();
        for (sub, l2g) in subs.iter().zip(&map.local_to_global) {
            for f in &tset.facets {
                let on_facet = f
                    .nodes
                    .iter()
                    .all(|&m| facet_level(dim, g, sub.metrics.xi.point(m)).abs() < 1e3 * MERGE_TOL);
                if !on_facet {
                    continue;
                }
                for (&m, &b) in f.nodes.iter().zip(&f.b) {
                    let lam: Vec<f64> = (0..dim).map(|i| sub.metrics.lambda[f.axis][i][m]).collect();
                    let norm = lam.iter().map(|x| x * x).sum::<f64>().sqrt();
                    let dev = lam
                        .iter()
                        .zip(&normal)
                        .map(|(l, n)| (f.side * l / norm - n).abs())
                        .fold(0.0, f64::max);
                    if dev > tol::NORMAL {
                        return Err(Error::Geometry {
                            subdomain: sub.geometry.ell,
                            node: m,
                            msg: format!("facet normal disagrees with simplex facet {g} by {dev:e}"),
                        });
                    }
                    *weights.entry(l2g[m]).or_insert(0.0) += b * norm;
                }
            }
        }
        let mut nodes: Vec<usize> = weights.keys().copied().collect();
        nodes.sort_by(|&a, &b| {
            let (x, y) = (map.coords.point(a), map.coords.point(b));
            x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal)
        });
        let b = nodes.iter().map(|m| weights[m]).collect();
        out.push(SimplexFacet { nodes, b, normal });
    }
    Ok(out)
}

fn check_algebraic_invariants(op: &TpssOperator) -> Result<()> {
    let fail = |name: &str, residual: f64, tolerance: f64| -> Result<()> {
        if residual <= tolerance && residual.is_finite() {
            Ok(())
        } else {
            Err(Error::Invariant {
                name: name.to_string(),
                residual,
                tolerance,
            })
        }
    };
    let min_h = op.h.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_h <= 0.0 {
        return Err(Error::Invariant {
            name: "norm-positive".into(),
            residual: -min_h,
            tolerance: 0.0,
        });
    }
    let total: f64 = op.h.iter().sum();
    fail("norm-sum", (total - crate::verify::simplex_measure(op.dim)).abs(), tol::NORM_SUM)?;
    let n = op.n_p();
    for i in 0..op.dim {
        let sym = op.q[i].add_scaled(&op.q[i].transpose(), 1.0);
        let mut sbp = 0.0f64;
        for (r, c, v) in sym.triplets() {
            let e = if r == c { op.e[i][r] } else { 0.0 };
            sbp = sbp.max((v - e).abs());
        }
        fail("sbp-property", sbp, tol::SBP_PROPERTY)?;
        let ef = op.facet_boundary_operator(i);
        let dec = (0..n).map(|m| (ef[m] - op.e[i][m]).abs()).fold(0.0, f64::max);
        fail("e-facet-decomposition", dec, tol::E_DECOMPOSITION)?;
        let mut out = vec![0.0; n];
        op.q[i].matvec(&vec![1.0; n], &mut out);
        fail("q-annihilates-constants", out.iter().fold(0.0f64, |w, v| w.max(v.abs())), tol::ROW_SUM)?;
    }
    Ok(())
}

/// Number of 1D nodes for the TPSS operator of degree `p` in `dim`
/// dimensions. LGL needs `p + dim` nodes; CSBP (only `p = 1` in 2D, from the
/// degree-2 interior operator) takes `n1` from the caller.
pub fn build_tpss(family: Family, dim: usize, p: usize, n1: Option<usize>) -> Result<TpssOperator> {
    if !(2..=3).contains(&dim) {
        return Err(Error::Dimension(dim));
    }
    match family {
        Family::Lgl => {
            if p == 0 {
                return Err(Error::Config("TPSS degree must be at least 1".into()));
            }
            let n = p + dim;
            if let Some(n1) = n1 {
                if n1 != n {
                    return Err(Error::Config(format!("LGL TPSS degree {p} in {dim}D uses n1 = {n}, not {n1}")));
                }
            }
            assemble(dim, &build_lgl_operator(n)?)
        }
        Family::Csbp => {
            if dim != 2 || p != 1 {
                return Err(Error::Config(
                    "CSBP TPSS operators are available for degree 1 in 2D only".into(),
                ));
            }
            assemble(dim, &build_csbp_operator_with_degree(n1.unwrap_or(8), 2)?)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparsityStats {
    pub dim: usize,
    pub n1: usize,
    pub n_p: usize,
    /// Largest nonzero count over the `D_xi[i]`.
    pub nnz_actual: usize,
    pub nnz_estimate: usize,
    pub s_actual: f64,
    pub s_formula: f64,
}

pub const SPARSITY_DROP_TOL: f64 = 1e-14;

/// `1 - (n1 d - d + 1) / n_p` with `n_p` from [`expected_node_count`].
pub fn sparsity_formula(dim: usize, n1: usize) -> f64 {
    let n_p = expected_node_count(dim, n1) as f64;
    1.0 - (n1 * dim - dim + 1) as f64 / n_p
}

pub fn sparsity_stats(op: &TpssOperator) -> SparsityStats {
    let n_p = op.n_p();
    let nnz_actual = op.d.iter().map(|d| d.nnz_above(SPARSITY_DROP_TOL)).max().unwrap_or(0);
    let nnz_estimate = (op.n1 * op.dim - op.dim + 1) * n_p;
    SparsityStats {
        dim: op.dim,
        n1: op.n1,
        n_p,
        nnz_actual,
        nnz_estimate,
        s_actual: 1.0 - nnz_actual as f64 / (n_p * n_p) as f64,
        s_formula: sparsity_formula(op.dim, op.n1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oned::build_csbp_operator;

    #[test]
    fn node_count_formula() {
        assert_eq!(expected_node_count(2, 2), 7);
        assert_eq!(expected_node_count(2, 3), 19);
        assert_eq!(expected_node_count(2, 6), 91);
        assert_eq!(expected_node_count(3, 4), 175);
        assert_eq!(expected_node_count(2, 8), 169);
        assert_eq!(expected_node_count(2, 16), 721);
    }

    #[test]
    fn assembled_counts_match_formula() {
        for (dim, n1) in [(2, 2), (2, 3), (2, 7), (3, 3), (3, 4), (3, 6)] {
            let op = assemble(dim, &build_lgl_operator(n1).unwrap()).unwrap();
            assert_eq!(op.n_p(), expected_node_count(dim, n1));
        }
    }

    #[test]
    fn rejects_too_low_degree() {
        assert!(assemble(3, &build_lgl_operator(2).unwrap()).is_err());
        assert!(assemble(4, &build_lgl_operator(5).unwrap()).is_err());
        assert!(build_tpss(Family::Csbp, 3, 1, None).is_err());
        assert!(build_tpss(Family::Csbp, 2, 2, None).is_err());
    }

    #[test]
    fn degree_one_csbp_gives_constant_exact_triangle_operator() {
        let op = assemble(2, &build_csbp_operator(5).unwrap()).unwrap();
        assert_eq!(op.degree, 0);
    }

    #[test]
    fn shared_norm_entries_sum_over_subdomains() {
        let det = assemble_detailed(2, &build_lgl_operator(4).unwrap()).unwrap();
        let mut h = vec![0.0; det.map.n_p];
        for (s, l2g) in det.subdomains.iter().zip(&det.map.local_to_global) {
            for (m, &g) in l2g.iter().enumerate() {
                h[g] += s.h[m];
            }
        }
        assert_eq!(h, det.operator.h);
        let mut hits = vec![0; det.map.n_p];
        for l2g in &det.map.local_to_global {
            for &g in l2g {
                hits[g] += 1;
            }
        }
        assert!(hits.iter().all(|&c| (1..=3).contains(&c)));
        assert_eq!(hits.iter().filter(|&&c| c == 3).count(), 1);
    }

    #[test]
    fn axis_facet_boundary_entries() {
        let op = assemble(2, &build_lgl_operator(5).unwrap()).unwrap();
        let f = &op.facets[1];
        for (&m, &b) in f.nodes.iter().zip(&f.b) {
            assert!((op.nodes.point(m)[0] + 1.0).abs() < 1e-14);
            assert!((op.e[0][m] + b).abs() < 1e-13 || op.nodes.point(m)[1].abs() > 1.0 - 1e-14);
        }
    }

    #[test]
    fn sparsity_formula_values() {
        assert!((sparsity_formula(3, 4) - (1.0 - 10.0 / 175.0)).abs() < 1e-15);
        let s2 = |n: f64| 1.0 - (2.0 * n - 1.0) / (3.0 * n * n - 3.0 * n + 1.0);
        let s3 = |n: f64| 1.0 - (3.0 * n - 2.0) / (4.0 * n.powi(3) - 6.0 * n * n + 4.0 * n - 1.0);
        for n1 in 2..15 {
            assert!((sparsity_formula(2, n1) - s2(n1 as f64)).abs() < 1e-15);
            assert!((sparsity_formula(3, n1) - s3(n1 as f64)).abs() < 1e-15);
        }
        assert!(sparsity_formula(3, 13) > 0.995);
    }
}
