use tpss::assembly::assemble_detailed;
use tpss::oned::build_lgl_operator;

/// `Q_xi1` on the second quadrilateral of the p = 1 (n1 = 2) LGL triangle,
/// as printed to four decimals.
const Q_XI1_SUB2: [[f64; 4]; 4] = [
    [-0.1667, 0.2083, -0.0417, 0.0],
    [-0.2083, 0.25, 0.0, -0.0417],
    [0.0417, 0.0, -0.25, 0.2083],
    [0.0, 0.0417, -0.2083, 0.1667],
];

/// The same block scattered into the 7 global nodes.
const Q_G_SUB2: [[f64; 7]; 7] = [
    [0.0; 7],
    [0.0, -0.1667, 0.0, -0.0417, 0.2083, 0.0, 0.0],
    [0.0; 7],
    [0.0, 0.0417, 0.0, -0.25, 0.0, 0.2083, 0.0],
    [0.0, -0.2083, 0.0, 0.0, 0.25, -0.0417, 0.0],
    [0.0, 0.0, 0.0, -0.2083, 0.0417, 0.1667, 0.0],
    [0.0; 7],
];

#[test]
fn second_subdomain_matrix_matches_printed_values() {
    let detail = assemble_detailed(2, &build_lgl_operator(2).unwrap()).unwrap();
    let q = detail.subdomains[1].q[0].to_dense();
    for r in 0..4 {
        for c in 0..4 {
            assert!((q[r][c] - Q_XI1_SUB2[r][c]).abs() < 5e-5, "({r},{c}): {}", q[r][c]);
        }
    }
}

#[test]
fn scatter_uses_printed_global_labels() {
    let detail = assemble_detailed(2, &build_lgl_operator(2).unwrap()).unwrap();
    assert_eq!(detail.operator.n_p(), 7);
    // Local nodes 1..4 go to global nodes 2, 5, 4, 6 (one-based).
    assert_eq!(detail.map.local_to_global[1], vec![1, 4, 3, 5]);
    let q = detail.subdomains[1].q[0].to_dense();
    let l2g = &detail.map.local_to_global[1];
    let mut qg = [[0.0; 7]; 7];
    for r in 0..4 {
        for c in 0..4 {
            qg[l2g[r]][l2g[c]] += q[r][c];
        }
    }
    for r in 0..7 {
        for c in 0..7 {
            assert!((qg[r][c] - Q_G_SUB2[r][c]).abs() < 5e-5, "({r},{c})");
        }
    }
}

#[test]
fn exact_fractions_behind_the_printed_digits() {
    let detail = assemble_detailed(2, &build_lgl_operator(2).unwrap()).unwrap();
    let q = detail.subdomains[1].q[0].to_dense();
    assert!((q[0][0] + 1.0 / 6.0).abs() < 1e-14);
    assert!((q[0][1] - 5.0 / 24.0).abs() < 1e-14);
    assert!((q[0][2] + 1.0 / 24.0).abs() < 1e-14);
    assert!((q[1][1] - 0.25).abs() < 1e-14);
}
