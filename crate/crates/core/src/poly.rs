//! Monomial bookkeeping on the reference simplex.

/// All exponent tuples of length `dim` with total degree at most `max_degree`,
/// in graded order.
pub fn monomial_exponents(dim: usize, max_degree: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for total in 0..=max_degree {
        let mut cur = vec![0; dim];
        push_with_total(&mut out, &mut cur, 0, total);
    }
    out
}

fn push_with_total(out: &mut Vec<Vec<usize>>, cur: &mut Vec<usize>, k: usize, remaining: usize) {
    if k + 1 == cur.len() {
        cur[k] = remaining;
        out.push(cur.clone());
        return;
    }
    for a in (0..=remaining).rev() {
        cur[k] = a;
        push_with_total(out, cur, k + 1, remaining - a);
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Exact integral of `xi^alpha` over the reference simplex
/// `{xi_i >= -1, sum xi_i <= 2 - d}`.
///
/// Substitutes `xi = 2y - 1` and uses the Dirichlet moments of the unit
/// simplex, `int y^beta = prod(beta_i!) / (|beta| + d)!`.
pub fn simplex_monomial_integral(alpha: &[usize]) -> f64 {
    let dim = alpha.len();
    let mut total = 0.0;
    let mut beta = vec![0usize; dim];
    loop {
        let mut coef = 1.0;
        for (&a, &b) in alpha.iter().zip(&beta) {
            coef *= binomial(a, b) * 2f64.powi(b as i32) * if (a - b) % 2 == 0 { 1.0 } else { -1.0 };
        }
        let num: f64 = beta.iter().map(|&b| factorial(b)).product();
        let s: usize = beta.iter().sum();
        total += coef * num / factorial(s + dim);
        // next beta <= alpha
        let mut k = 0;
        loop {
            if k == dim {
                return total * 2f64.powi(dim as i32);
            }
            if beta[k] < alpha[k] {
                beta[k] += 1;
                break;
            }
            beta[k] = 0;
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_counts() {
        assert_eq!(monomial_exponents(2, 2).len(), 6);
        assert_eq!(monomial_exponents(3, 3).len(), 20);
        assert_eq!(monomial_exponents(2, 0), vec![vec![0, 0]]);
    }

    #[test]
    fn simplex_integrals_of_low_moments() {
        assert!((simplex_monomial_integral(&[0, 0]) - 2.0).abs() < 1e-15);
        assert!((simplex_monomial_integral(&[0, 0, 0]) - 4.0 / 3.0).abs() < 1e-15);
        // centroid (-1/3, -1/3) times area 2
        assert!((simplex_monomial_integral(&[1, 0]) + 2.0 / 3.0).abs() < 1e-15);
        // centroid (-1/2, -1/2, -1/2) times volume 4/3
        assert!((simplex_monomial_integral(&[0, 0, 1]) + 2.0 / 3.0).abs() < 1e-15);
    }
}
