//! Reference computations shared by the integration tests. Nothing here
//! calls into the library's own quadrature or monomial helpers.

#![allow(dead_code)]

use tpss::{build_tpss, Family, TpssOperator};

/// The operator set the invariant checks sweep over.
pub fn operator_set() -> Vec<(String, TpssOperator)> {
    let mut out = Vec::new();
    for d in [2, 3] {
        for p in 1..=4 {
            out.push((format!("lgl d={d} p={p}"), build_tpss(Family::Lgl, d, p, None).unwrap()));
        }
    }
    for n1 in [8, 16] {
        out.push((format!("csbp d=2 p=1 n1={n1}"), build_tpss(Family::Csbp, 2, 1, Some(n1)).unwrap()));
    }
    out
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Integral of `f` over the reference simplex `{xi_i >= -1, sum xi <= 2 - d}`
/// by a collapsed (Duffy) tensor Gauss rule with `n` points per direction.
pub fn simplex_integral(dim: usize, n: usize, f: impl Fn(&[f64]) -> f64) -> f64 {
    let (gx, gw) = gauss_legendre(n);
    let u: Vec<f64> = gx.iter().map(|x| 0.5 * (x + 1.0)).collect();
    let w: Vec<f64> = gw.iter().map(|w| 0.5 * w).collect();
    let mut total = 0.0;
    let mut idx = vec![0usize; dim];
    loop {
        let mut y = vec![0.0; dim];
        let mut rest = 1.0;
        let mut jac = 1.0;
        let mut weight = 1.0;
        for k in 0..dim {
            y[k] = rest * u[idx[k]];
            weight *= w[idx[k]];
            jac *= rest;
            rest *= 1.0 - u[idx[k]];
        }
        let xi: Vec<f64> = y.iter().map(|v| 2.0 * v - 1.0).collect();
        total += weight * jac * f(&xi);
        let mut k = 0;
        loop {
            if k == dim {
                return total * 2f64.powi(dim as i32);
            }
            idx[k] += 1;
            if idx[k] < n {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

pub fn exponents(dim: usize, max_degree: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let bound = max_degree + 1;
    let count = bound.pow(dim as u32);
    for code in 0..count {
        let mut a = Vec::with_capacity(dim);
        let mut c = code;
        for _ in 0..dim {
            a.push(c % bound);
            c /= bound;
        }
        if a.iter().sum::<usize>() <= max_degree {
            out.push(a);
        }
    }
    out
}

pub fn monomial(x: &[f64], a: &[usize]) -> f64 {
    x.iter().zip(a).map(|(x, &k)| x.powi(k as i32)).product()
}

pub fn monomial_derivative(x: &[f64], a: &[usize], dir: usize) -> f64 {
    if a[dir] == 0 {
        return 0.0;
    }
    let mut b = a.to_vec();
    b[dir] -= 1;
    a[dir] as f64 * monomial(x, &b)
}

pub fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}
