//! Invariant reports and the full verification suite for assembled operators.

use std::fmt;

use crate::assembly::TpssOperator;
use crate::poly::{monomial_exponents, simplex_monomial_integral};

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Outcome of a verification run: one entry per invariant.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub subject: String,
    pub checks: Vec<Check>,
    /// Largest degree `k` such that the derivative is exact for every
    /// monomial of (total) degree up to `k`.
    pub exactness_degree: Option<usize>,
}

impl VerificationReport {
    pub fn new(subject: impl Into<String>) -> Self {
        VerificationReport {
            subject: subject.into(),
            checks: Vec::new(),
            exactness_degree: None,
        }
    }

    /// Records a residual that must not exceed `tolerance`.
    pub fn check(&mut self, name: &str, residual: f64, tolerance: f64) {
        let passed = residual <= tolerance && residual.is_finite();
        self.push(name, residual, tolerance, passed);
    }

    pub fn push(&mut self, name: &str, residual: f64, tolerance: f64, passed: bool) {
        self.checks.push(Check {
            name: name.to_string(),
            residual,
            tolerance,
            passed,
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "verification: {}", self.subject)?;
        for c in &self.checks {
            writeln!(
                f,
                "  [{}] {:<28} residual {:.3e} (tol {:.1e})",
                if c.passed { "pass" } else { "FAIL" },
                c.name,
                c.residual,
                c.tolerance
            )?;
        }
        if let Some(k) = self.exactness_degree {
            writeln!(f, "  exactness degree: {k}")?;
        }
        Ok(())
    }
}

/// Tolerances for the assembled simplex operator.
pub mod tol {
    pub const NORM_SUM: f64 = 1e-12;
    pub const SBP_PROPERTY: f64 = 1e-12;
    pub const E_DECOMPOSITION: f64 = 1e-13;
    pub const SKEW: f64 = 1e-13;
    pub const ROW_SUM: f64 = 1e-12;
    pub const DERIVATIVE: f64 = 1e-10;
    /// A derivative error above this marks a monomial as not reproduced.
    pub const INEXACT: f64 = 1e-6;
    pub const QUADRATURE: f64 = 1e-12;
}

/// Measure of the reference simplex.
pub fn simplex_measure(dim: usize) -> f64 {
    match dim {
        2 => 2.0,
        3 => 4.0 / 3.0,
        _ => f64::NAN,
    }
}

/// Max derivative error of `D_xi[dir]` over all monomials of total degree
/// exactly `degree`.
pub fn derivative_error_at_degree(op: &TpssOperator, degree: usize) -> f64 {
    let dim = op.dim;
    let n = op.n_p();
    let mut worst = 0.0f64;
    let mut v = vec![0.0; n];
    let mut dv = vec![0.0; n];
    for alpha in monomial_exponents(dim, degree).into_iter().filter(|a| a.iter().sum::<usize>() == degree) {
        for (m, x) in v.iter_mut().enumerate() {
            *x = eval_monomial(op.nodes.point(m), &alpha);
        }
        for dir in 0..dim {
            op.d[dir].matvec(&v, &mut dv);
            for m in 0..n {
                let exact = eval_monomial_derivative(op.nodes.point(m), &alpha, dir);
                worst = worst.max((dv[m] - exact).abs());
            }
        }
    }
    worst
}

pub(crate) fn eval_monomial(x: &[f64], alpha: &[usize]) -> f64 {
    x.iter().zip(alpha).map(|(x, &a)| x.powi(a as i32)).product()
}

pub(crate) fn eval_monomial_derivative(x: &[f64], alpha: &[usize], dir: usize) -> f64 {
    if alpha[dir] == 0 {
        return 0.0;
    }
    let mut val = alpha[dir] as f64;
    for (k, (&xk, &a)) in x.iter().zip(alpha).enumerate() {
        let e = if k == dir { a - 1 } else { a };
        val *= xk.powi(e as i32);
    }
    val
}

/// Runs every invariant of an assembled operator.
///
/// Besides the algebraic checks this records the sharpness of the accuracy:
/// exactness up to degree `p` and failure at degree `p + 1`.
pub fn verify_tpss(op: &TpssOperator) -> VerificationReport {
    let mut report = VerificationReport::new(format!(
        "{} TPSS d={} p={} n1={} n_p={}",
        op.family,
        op.dim,
        op.degree,
        op.n1,
        op.n_p()
    ));
    let dim = op.dim;
    let n = op.n_p();

    let min_h = op.h.iter().cloned().fold(f64::INFINITY, f64::min);
    report.push("norm-positive", (-min_h).max(0.0), 0.0, min_h > 0.0);
    let sum_h: f64 = op.h.iter().sum();
    report.check("norm-sum", (sum_h - simplex_measure(dim)).abs(), tol::NORM_SUM);

    // Q + Q^T - E, with E the facet-assembled boundary operator
    let mut sbp = 0.0f64;
    let mut e_decomp = 0.0f64;
    let mut e_interior = 0.0f64;
    let mut skew = 0.0f64;
    let mut row_sum = 0.0f64;
    let on_facet = op.boundary_mask();
    for i in 0..dim {
        let q = &op.q[i];
        let qt = q.transpose();
        let sym = q.add_scaled(&qt, 1.0);
        let e_facets = op.facet_boundary_operator(i);
        for r in 0..n {
            for (c, v) in sym.row(r) {
                let e = if c == r { op.e[i][r] } else { 0.0 };
                sbp = sbp.max((v - e).abs());
            }
            // also catch E entries on rows where Q + Q^T is structurally empty
            if sym.get(r, r).is_none() {
                sbp = sbp.max(op.e[i][r].abs());
            }
            // E assembled from the subdomains must vanish at interior nodes
            let diag = sym.get(r, r).unwrap_or(0.0);
            if !on_facet[r] {
                e_interior = e_interior.max(diag.abs());
            }
            e_decomp = e_decomp.max((diag - e_facets[r]).abs());
        }
        let st = op.s[i].transpose();
        skew = skew.max(op.s[i].add_scaled(&st, 1.0).max_abs());
        let ones = vec![1.0; n];
        let mut out = vec![0.0; n];
        op.q[i].matvec(&ones, &mut out);
        row_sum = row_sum.max(out.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    report.check("sbp-property", sbp, tol::SBP_PROPERTY);
    report.check("e-zero-at-interior-nodes", e_interior, tol::E_DECOMPOSITION);
    report.check("e-facet-decomposition", e_decomp, tol::E_DECOMPOSITION);
    report.check("s-antisymmetric", skew, tol::SKEW);
    report.check("q-annihilates-constants", row_sum, tol::ROW_SUM);

    let mut facet_measure = 0.0f64;
    for (g, f) in op.facets.iter().enumerate() {
        let sum_b: f64 = f.b.iter().sum();
        facet_measure = facet_measure.max((sum_b - crate::assembly::reference_facet_measure(dim, g)).abs());
    }
    report.check("facet-quadrature-measure", facet_measure, tol::NORM_SUM);

    let p = op.degree;
    let exact_err = (0..=p).map(|k| derivative_error_at_degree(op, k)).fold(0.0, f64::max);
    report.check("derivative-exact-to-degree-p", exact_err, tol::DERIVATIVE);
    let next_err = derivative_error_at_degree(op, p + 1);
    report.push(
        "derivative-inexact-at-degree-p+1",
        next_err,
        tol::INEXACT,
        next_err > tol::INEXACT,
    );
    report.exactness_degree = Some(if exact_err <= tol::DERIVATIVE {
        if next_err <= tol::DERIVATIVE {
            p + 1
        } else {
            p
        }
    } else {
        (0..p)
            .take_while(|&k| derivative_error_at_degree(op, k) <= tol::DERIVATIVE)
            .last()
            .unwrap_or(0)
    });

    let mut quad = 0.0f64;
    if p >= 1 {
        for alpha in monomial_exponents(dim, 2 * p - 1) {
            let approx: f64 = (0..n).map(|m| op.h[m] * eval_monomial(op.nodes.point(m), &alpha)).sum();
            let exact = simplex_monomial_integral(&alpha);
            quad = quad.max((approx - exact).abs() / exact.abs().max(1.0));
        }
    }
    report.check("norm-quadrature", quad, tol::QUADRATURE);
    report
}
