//! One-dimensional diagonal-norm SBP operators on the reference line [-1, 1].
//!
//! Two families are provided:
//! - Legendre-Gauss-Lobatto (LGL) collocation operators, exact for degree `n1 - 1`.
//! - Classical finite-difference (CSBP) operators on a uniform grid with the
//!   standard diagonal-norm boundary closures (degree 1 and degree 2).
//!
//! All operators here are diagonal-E: the boundary nodes are the interval end
//! points, so the extrapolation vectors `t_L`, `t_R` select the first and last
//! node.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::verify::VerificationReport;

/// Operator family of a one-dimensional SBP operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Lgl,
    Csbp,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Lgl => "lgl",
            Family::Csbp => "csbp",
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        match s.to_ascii_lowercase().as_str() {
            "lgl" => Some(Family::Lgl),
            "csbp" => Some(Family::Csbp),
            _ => None,
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A one-dimensional SBP operator bundle `{H, Q, D, E}` on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct Operator1D {
    pub family: Family,
    /// Polynomial degree for which `D` is exact.
    pub degree: usize,
    pub nodes: Vec<f64>,
    /// Diagonal of the norm matrix `H`.
    pub h: Vec<f64>,
    pub q: DMatrix<f64>,
    pub d: DMatrix<f64>,
    /// Diagonal of the boundary operator, `diag(-1, 0, ..., 0, 1)`.
    pub e: Vec<f64>,
}

impl Operator1D {
    pub fn n1(&self) -> usize {
        self.nodes.len()
    }

    /// Extrapolation vector to the left end point.
    pub fn t_left(&self) -> Vec<f64> {
        let mut t = vec![0.0; self.n1()];
        t[0] = 1.0;
        t
    }

    /// Extrapolation vector to the right end point.
    pub fn t_right(&self) -> Vec<f64> {
        let mut t = vec![0.0; self.n1()];
        t[self.n1() - 1] = 1.0;
        t
    }

    fn boundary_operator(n1: usize) -> Vec<f64> {
        let mut e = vec![0.0; n1];
        e[0] = -1.0;
        e[n1 - 1] = 1.0;
        e
    }

    /// Builds `Q = S + E/2` from the skew part of `raw_q` and recomputes
    /// `D = H^{-1} Q`, so that the SBP property holds to round-off.
    fn from_raw(family: Family, degree: usize, nodes: Vec<f64>, h: Vec<f64>, raw_q: DMatrix<f64>) -> Self {
        let n1 = nodes.len();
        let e = Self::boundary_operator(n1);
        let mut q = DMatrix::zeros(n1, n1);
        for i in 0..n1 {
            for j in 0..n1 {
                q[(i, j)] = 0.5 * (raw_q[(i, j)] - raw_q[(j, i)]);
            }
            q[(i, i)] += 0.5 * e[i];
        }
        let mut d = q.clone();
        for i in 0..n1 {
            for j in 0..n1 {
                d[(i, j)] /= h[i];
            }
        }
        Operator1D {
            family,
            degree,
            nodes,
            h,
            q,
            d,
            e,
        }
    }
}

/// Legendre polynomial `P_n(x)` and its derivative.
pub(crate) fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p_prev, mut p) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = p_next;
    }
    let nf = n as f64;
    let dp = if (1.0 - x * x).abs() < 1e-14 {
        // P'_n(+-1) = (+-1)^{n-1} n(n+1)/2
        let s = if x > 0.0 || n % 2 == 1 { 1.0 } else { -1.0 };
        s * nf * (nf + 1.0) / 2.0
    } else {
        nf * (p_prev - x * p) / (1.0 - x * x)
    };
    (p, dp)
}

const LGL_NEWTON_TOL: f64 = 1e-15;
const LGL_NEWTON_MAX_ITER: usize = 100;

/// Legendre-Gauss-Lobatto nodes and weights with `n1` points.
///
/// Interior nodes are the roots of `P'_{n1-1}`, found by Newton iteration
/// from Chebyshev-Lobatto initial guesses. Weights use the closed form
/// `2 / (n (n - 1) P_{n-1}(x_i)^2)` with `n = n1`.
pub fn lgl_nodes_weights(n1: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n1 < 2 {
        return Err(Error::Construction(format!("LGL rule needs at least 2 nodes, got {n1}")));
    }
    let n = n1 - 1;
    let nf = n as f64;
    let mut nodes: Vec<f64> = (0..n1).map(|j| -(PI * j as f64 / nf).cos()).collect();
    nodes[0] = -1.0;
    nodes[n] = 1.0;
    for x in nodes.iter_mut().take(n).skip(1) {
        let mut converged = false;
        for _ in 0..LGL_NEWTON_MAX_ITER {
            let (p, dp) = legendre_and_derivative(n, *x);
            // d/dx [(1 - x^2) P'_n] = -n (n + 1) P_n
            let update = (1.0 - *x * *x) * dp / (nf * (nf + 1.0) * p);
            *x += update;
            if update.abs() <= LGL_NEWTON_TOL {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Construction(format!(
                "LGL Newton iteration did not converge for n1 = {n1}"
            )));
        }
    }
    // exact symmetry
    for j in 0..n1 / 2 {
        let m = 0.5 * (nodes[n - j] - nodes[j]);
        nodes[j] = -m;
        nodes[n - j] = m;
    }
    if n1 % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let weights = nodes
        .iter()
        .map(|&x| {
            let (p, _) = legendre_and_derivative(n, x);
            2.0 / (nf * (nf + 1.0) * p * p)
        })
        .collect();
    Ok((nodes, weights))
}

/// Lagrange-interpolant differentiation matrix on arbitrary distinct nodes,
/// via barycentric weights.
pub(crate) fn lagrange_differentiation(nodes: &[f64]) -> DMatrix<f64> {
    let n = nodes.len();
    let w: Vec<f64> = (0..n)
        .map(|j| {
            1.0 / (0..n)
                .filter(|&k| k != j)
                .map(|k| nodes[j] - nodes[k])
                .product::<f64>()
        })
        .collect();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = (w[j] / w[i]) / (nodes[i] - nodes[j]);
                d[(i, j)] = v;
                diag -= v;
            }
        }
        d[(i, i)] = diag;
    }
    d
}

/// LGL collocation SBP operator with `n1` nodes, exact for degree `n1 - 1`.
pub fn build_lgl_operator(n1: usize) -> Result<Operator1D> {
    let (nodes, h) = lgl_nodes_weights(n1)?;
    let d = lagrange_differentiation(&nodes);
    let mut raw_q = d;
    for i in 0..n1 {
        for j in 0..n1 {
            raw_q[(i, j)] *= h[i];
        }
    }
    Ok(Operator1D::from_raw(Family::Lgl, n1 - 1, nodes, h, raw_q))
}

/// Classical second-order (degree 1) SBP operator on a uniform grid.
pub fn build_csbp_operator(n1: usize) -> Result<Operator1D> {
    build_csbp_operator_with_degree(n1, 1)
}

/// Classical diagonal-norm SBP operator of the given degree on `n1` uniform
/// nodes.
///
/// Degree 1 is the 2-1 operator (central interior, one-sided boundary rows);
/// degree 2 is the 4-2 operator with the diagonal norm
/// `dx * diag(17/48, 59/48, 43/48, 49/48, 1, ...)`, which needs `n1 >= 8`.
pub fn build_csbp_operator_with_degree(n1: usize, degree: usize) -> Result<Operator1D> {
    match degree {
        1 => csbp_2_1(n1),
        2 => csbp_4_2(n1),
        _ => Err(Error::Construction(format!(
            "CSBP operators are available for degree 1 and 2 only, got {degree}"
        ))),
    }
}

fn uniform_nodes(n1: usize) -> (Vec<f64>, f64) {
    let dx = 2.0 / (n1 - 1) as f64;
    let mut nodes: Vec<f64> = (0..n1).map(|i| -1.0 + i as f64 * dx).collect();
    nodes[n1 - 1] = 1.0;
    (nodes, dx)
}

fn csbp_2_1(n1: usize) -> Result<Operator1D> {
    if n1 < 3 {
        return Err(Error::Construction(format!(
            "degree-1 CSBP operator needs at least 3 nodes, got {n1}"
        )));
    }
    let (nodes, dx) = uniform_nodes(n1);
    let mut h = vec![dx; n1];
    h[0] = 0.5 * dx;
    h[n1 - 1] = 0.5 * dx;
    let mut q = DMatrix::zeros(n1, n1);
    for i in 0..n1 - 1 {
        q[(i, i + 1)] = 0.5;
        q[(i + 1, i)] = -0.5;
    }
    q[(0, 0)] = -0.5;
    q[(n1 - 1, n1 - 1)] = 0.5;
    Ok(Operator1D::from_raw(Family::Csbp, 1, nodes, h, q))
}

fn csbp_4_2(n1: usize) -> Result<Operator1D> {
    if n1 < 8 {
        return Err(Error::Construction(format!(
            "degree-2 CSBP operator needs at least 8 nodes, got {n1}"
        )));
    }
    let (nodes, dx) = uniform_nodes(n1);
    let closure_h = [17.0 / 48.0, 59.0 / 48.0, 43.0 / 48.0, 49.0 / 48.0];
    let mut h = vec![dx; n1];
    for (i, w) in closure_h.iter().enumerate() {
        h[i] = w * dx;
        h[n1 - 1 - i] = w * dx;
    }
    // Boundary block of Q (h-independent), rows 0..4, columns 0..6.
    let block: [[f64; 6]; 4] = [
        [-0.5, 59.0 / 96.0, -1.0 / 12.0, -1.0 / 32.0, 0.0, 0.0],
        [-59.0 / 96.0, 0.0, 59.0 / 96.0, 0.0, 0.0, 0.0],
        [1.0 / 12.0, -59.0 / 96.0, 0.0, 59.0 / 96.0, -1.0 / 12.0, 0.0],
        [1.0 / 32.0, 0.0, -59.0 / 96.0, 0.0, 2.0 / 3.0, -1.0 / 12.0],
    ];
    let interior = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
    let mut q = DMatrix::zeros(n1, n1);
    for i in 4..n1 - 4 {
        for (k, c) in interior.iter().enumerate() {
            q[(i, i + k - 2)] = *c;
        }
    }
    for (i, row) in block.iter().enumerate() {
        for (j, c) in row.iter().enumerate() {
            q[(i, j)] = *c;
            // Q_{n-1-i, n-1-j} = -Q_{i, j}
            q[(n1 - 1 - i, n1 - 1 - j)] = -*c;
        }
    }
    Ok(Operator1D::from_raw(Family::Csbp, 2, nodes, h, q))
}

/// Tolerances for the one-dimensional invariants.
pub mod tol {
    pub const NORM_SUM: f64 = 1e-13;
    pub const SBP_PROPERTY: f64 = 1e-13;
    pub const DERIVATIVE: f64 = 1e-10;
    pub const QUADRATURE: f64 = 1e-12;
    pub const EXTRAPOLATION: f64 = 1e-14;
}

fn max_derivative_error(op: &Operator1D, k: usize) -> f64 {
    let n1 = op.n1();
    let v: Vec<f64> = op.nodes.iter().map(|&x| x.powi(k as i32)).collect();
    (0..n1)
        .map(|i| {
            let dv: f64 = (0..n1).map(|j| op.d[(i, j)] * v[j]).sum();
            let exact = if k == 0 { 0.0 } else { k as f64 * op.nodes[i].powi(k as i32 - 1) };
            (dv - exact).abs()
        })
        .fold(0.0, f64::max)
}

/// Checks every `Operator1D` invariant and reports the residuals.
pub fn verify_operator_1d(op: &Operator1D) -> VerificationReport {
    let n1 = op.n1();
    let mut report = VerificationReport::new(format!("{} n1={}", op.family, n1));

    let min_h = op.h.iter().cloned().fold(f64::INFINITY, f64::min);
    report.push("norm-positive", (-min_h).max(0.0), 0.0, min_h > 0.0);
    let sum_h: f64 = op.h.iter().sum();
    report.check("norm-sum", (sum_h - 2.0).abs(), tol::NORM_SUM);

    let mut sbp = 0.0f64;
    let mut fact = 0.0f64;
    for i in 0..n1 {
        for j in 0..n1 {
            let e = if i == j { op.e[i] } else { 0.0 };
            sbp = sbp.max((op.q[(i, j)] + op.q[(j, i)] - e).abs());
            fact = fact.max((op.h[i] * op.d[(i, j)] - op.q[(i, j)]).abs());
        }
    }
    report.check("sbp-property", sbp, tol::SBP_PROPERTY);
    report.check("d-equals-hinv-q", fact, tol::SBP_PROPERTY);

    let deriv = (0..=op.degree)
        .map(|k| max_derivative_error(op, k))
        .fold(0.0, f64::max);
    report.check("derivative-exactness", deriv, tol::DERIVATIVE);

    let mut quad = 0.0f64;
    for k in 0..(2 * op.degree) {
        let approx: f64 = op.h.iter().zip(&op.nodes).map(|(w, x)| w * x.powi(k as i32)).sum();
        let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
        quad = quad.max((approx - exact).abs());
    }
    report.check("quadrature", quad, tol::QUADRATURE);

    let tl: f64 = op.t_left().iter().zip(&op.nodes).map(|(t, x)| t * x).sum();
    let tr: f64 = op.t_right().iter().zip(&op.nodes).map(|(t, x)| t * x).sum();
    report.check("extrapolation", (tl + 1.0).abs().max((tr - 1.0).abs()), tol::EXTRAPOLATION);

    // monomial sweep for the observed exactness degree
    let mut degree = None;
    for k in 0..=n1 {
        if max_derivative_error(op, k) <= tol::DERIVATIVE {
            degree = Some(k);
        } else {
            break;
        }
    }
    report.exactness_degree = degree;
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn lgl_two_points_is_trapezoid() {
        let (x, w) = lgl_nodes_weights(2).unwrap();
        assert_eq!(x, vec![-1.0, 1.0]);
        assert_eq!(w, vec![1.0, 1.0]);
    }

    #[test]
    fn lgl_three_and_four_points() {
        // moment equations solved by hand
        let (x, w) = lgl_nodes_weights(3).unwrap();
        for (a, b) in x.iter().zip([-1.0, 0.0, 1.0]) {
            assert!(close(*a, b, 1e-15));
        }
        for (a, b) in w.iter().zip([1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0]) {
            assert!(close(*a, b, 1e-15));
        }
        let (x, w) = lgl_nodes_weights(4).unwrap();
        let s = 1.0 / 5f64.sqrt();
        for (a, b) in x.iter().zip([-1.0, -s, s, 1.0]) {
            assert!(close(*a, b, 1e-15));
        }
        for (a, b) in w.iter().zip([1.0 / 6.0, 5.0 / 6.0, 5.0 / 6.0, 1.0 / 6.0]) {
            assert!(close(*a, b, 1e-15));
        }
    }

    #[test]
    fn lgl_rejects_single_node() {
        assert!(lgl_nodes_weights(1).is_err());
    }

    #[test]
    fn lgl_weights_match_moment_equations() {
        for n1 in 2..=12 {
            let (x, w) = lgl_nodes_weights(n1).unwrap();
            for k in 0..(2 * n1 - 2) {
                let approx: f64 = w.iter().zip(&x).map(|(w, x)| w * x.powi(k as i32)).sum();
                let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
                assert!(close(approx, exact, 1e-13), "n1={n1} k={k}");
            }
        }
    }

    #[test]
    fn lgl_two_point_operator() {
        let op = build_lgl_operator(2).unwrap();
        for i in 0..2 {
            assert!(close(op.d[(i, 0)], -0.5, 1e-15));
            assert!(close(op.d[(i, 1)], 0.5, 1e-15));
        }
        let e = &op.q + op.q.transpose();
        assert!(close(e[(0, 0)], -1.0, 1e-15));
        assert!(close(e[(1, 1)], 1.0, 1e-15));
        assert!(close(e[(0, 1)], 0.0, 1e-15));
    }

    #[test]
    fn lgl_three_point_derivative_of_square() {
        let op = build_lgl_operator(3).unwrap();
        let v: Vec<f64> = op.nodes.iter().map(|x| x * x).collect();
        let expected = [-2.0, 0.0, 2.0];
        for i in 0..3 {
            let dv: f64 = (0..3).map(|j| op.d[(i, j)] * v[j]).sum();
            assert!(close(dv, expected[i], 1e-14));
        }
    }

    #[test]
    fn lgl_reports_pass() {
        for n1 in 2..=12 {
            let r = verify_operator_1d(&build_lgl_operator(n1).unwrap());
            assert!(r.passed(), "{r}");
            assert_eq!(r.exactness_degree, Some(n1 - 1));
        }
        let r = verify_operator_1d(&build_lgl_operator(4).unwrap());
        assert!(r.checks.iter().all(|c| c.residual <= 1e-13), "{r}");
    }

    #[test]
    fn corrupted_q_fails_sbp_check() {
        let mut op = build_lgl_operator(4).unwrap();
        op.q[(1, 2)] += 1e-6;
        let r = verify_operator_1d(&op);
        assert!(!r.passed());
        let failed: Vec<_> = r.failures().map(|c| c.name.as_str()).collect();
        assert!(failed.contains(&"sbp-property"), "{failed:?}");
    }

    #[test]
    fn csbp_three_nodes() {
        let op = build_csbp_operator(3).unwrap();
        assert_eq!(op.h, vec![0.5, 1.0, 0.5]);
        assert!(close(op.d[(1, 0)], -0.5, 1e-15));
        assert!(close(op.d[(1, 1)], 0.0, 1e-15));
        assert!(close(op.d[(1, 2)], 0.5, 1e-15));
        assert!(close(op.d[(0, 0)], -1.0, 1e-15));
        assert!(close(op.d[(0, 1)], 1.0, 1e-15));
    }

    #[test]
    fn csbp_rejects_small_grids() {
        assert!(build_csbp_operator(2).is_err());
        assert!(build_csbp_operator_with_degree(7, 2).is_err());
        assert!(build_csbp_operator_with_degree(10, 3).is_err());
    }

    #[test]
    fn csbp_degree_is_independent_of_refinement() {
        for n1 in [3, 8, 16, 32] {
            let r = verify_operator_1d(&build_csbp_operator(n1).unwrap());
            assert!(r.passed(), "{r}");
            assert_eq!(r.exactness_degree, Some(1), "n1={n1}");
        }
        for n1 in [8, 9, 16, 32] {
            let r = verify_operator_1d(&build_csbp_operator_with_degree(n1, 2).unwrap());
            assert!(r.passed(), "{r}");
            assert_eq!(r.exactness_degree, Some(2), "n1={n1}");
        }
    }

    #[test]
    fn csbp_node_counts_for_split_triangle() {
        for (n1, np) in [(8usize, 169usize), (16, 721)] {
            assert_eq!(3 * n1 * n1 - 3 * n1 + 1, np);
            assert!(build_csbp_operator_with_degree(n1, 2).is_ok());
        }
    }

    #[test]
    fn family_parse_round_trip() {
        for f in [Family::Lgl, Family::Csbp] {
            assert_eq!(Family::parse(f.name()), Some(f));
        }
        assert_eq!(Family::parse("dense"), None);
    }
}
