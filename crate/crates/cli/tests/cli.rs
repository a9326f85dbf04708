use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tpss(out_dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tpss"))
        .args(args)
        .env("TPSS_OUT_DIR", out_dir)
        .output()
        .expect("failed to run tpss")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn build_reports_node_counts() {
    let dir = tempfile::tempdir().unwrap();
    let o = tpss(dir.path(), &["build", "--family", "lgl", "-p", "1", "-d", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("n_p = 19"));
    assert!(dir.path().join("tpss_lgl_d2_p1.txt").exists());
    let o = tpss(dir.path(), &["build", "--family", "lgl", "-p", "4", "-d", "2"]);
    assert!(stdout(&o).contains("n_p = 91"));
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = tpss(dir.path(), &["build", "--family", "csbp", "-p", "2", "-d", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("CSBP"));
    let o = tpss(dir.path(), &["maxdt", "--dt-lo", "0.02", "--dt-hi", "0.02"]);
    assert_eq!(o.status.code(), Some(1));
    let o = tpss(dir.path(), &["solve", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(1));
    let o = tpss(dir.path(), &["converge", "--meshes", "4"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_passes_fresh_operator_and_catches_defect() {
    let dir = tempfile::tempdir().unwrap();
    let o = tpss(dir.path(), &["verify", "-d", "3", "-p", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("[pass] derivative-exact-to-degree-p"));
    assert!(text.contains("[pass] derivative-inexact-at-degree-p+1"));

    let path = dir.path().join("op.txt");
    let o = tpss(dir.path(), &["build", "-d", "2", "-p", "2", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let at = lines.iter().position(|l| l.starts_with("q 0 ")).unwrap() + 1;
    let mut f: Vec<String> = lines[at].split_whitespace().map(String::from).collect();
    let v: f64 = f[2].parse().unwrap();
    f[2] = format!("{:.17e}", v + 1e-6);
    lines[at] = f.join(" ");
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, lines.join("\n") + "\n").unwrap();
    let o = tpss(dir.path(), &["verify", "--file", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("[FAIL] sbp-property"));
    assert!(stderr(&o).contains("sbp-property"));
}

#[test]
fn sparsity_of_linear_tetrahedron() {
    let dir = tempfile::tempdir().unwrap();
    let o = tpss(dir.path(), &["sparsity", "-d", "3", "-p", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("formula 0.9429"), "{}", stdout(&o));
}

#[test]
fn mesh_writes_mesh_and_quality_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = tpss(dir.path(), &["mesh", "-d", "2", "-n", "4", "--alpha", "0.25"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("elements = 32"));
    let q = fs::read_to_string(dir.path().join("mesh_d2_n4.quality.csv")).unwrap();
    assert_eq!(q.lines().count(), 33);
    assert!(q.starts_with("element,aspect_ratio,max_angle_deg"));
}

fn energy_csv(dir: &Path, extra: &[&str]) -> String {
    let mut args = vec!["solve", "-d", "2", "-p", "2", "-n", "3", "--t-final", "0.2"];
    args.extend_from_slice(extra);
    let o = tpss(dir, &args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    fs::read_to_string(dir.join("energy_d2_p2_n3.csv")).unwrap()
}

#[test]
fn solve_output_is_deterministic_and_full_precision() {
    let dir = tempfile::tempdir().unwrap();
    let a = energy_csv(dir.path(), &["--threads", "1"]);
    let b = energy_csv(dir.path(), &["--threads", "1"]);
    assert_eq!(a, b);
    let c = energy_csv(dir.path(), &["--threads", "2"]);
    for (x, y) in a.lines().zip(c.lines()).skip(1) {
        let xs: Vec<f64> = x.split(',').map(|s| s.parse().unwrap()).collect();
        let ys: Vec<f64> = y.split(',').map(|s| s.parse().unwrap()).collect();
        for (u, v) in xs.iter().zip(&ys) {
            assert!((u - v).abs() <= 1e-14);
        }
    }
    let first = a.lines().nth(1).unwrap();
    let mantissa = first.split(',').nth(1).unwrap().split('e').next().unwrap();
    assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "d = 3\np = 1\n").unwrap();
    let o = tpss(dir.path(), &["--config", cfg.to_str().unwrap(), "build"]);
    assert!(stdout(&o).contains("n_p = 175"), "{}", stdout(&o));
    let o = tpss(dir.path(), &["--config", cfg.to_str().unwrap(), "build", "-d", "2"]);
    assert!(stdout(&o).contains("n_p = 19"));
    fs::write(&cfg, "bogus = 1\n").unwrap();
    let o = tpss(dir.path(), &["--config", cfg.to_str().unwrap(), "build"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn maxdt_writes_search_trace() {
    let dir = tempfile::tempdir().unwrap();
    let o = tpss(
        dir.path(),
        &["maxdt", "-d", "2", "-p", "1", "-n", "4", "--t-test", "5", "--dt-lo", "0.01", "--dt-hi", "0.05"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let trace = fs::read_to_string(dir.path().join("maxdt_d2_p1.csv")).unwrap();
    assert!(trace.starts_with("dt,steps,energy_change,stable"));
    let dt: f64 = stdout(&o).split("dt_max = ").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap();
    assert!((dt / 0.0312 - 1.0).abs() < 0.2, "{dt}");
}

#[test]
fn three_dimensional_quadratic_convergence_rates() {
    let dir = tempfile::tempdir().unwrap();
    let o = tpss(dir.path(), &["converge", "-d", "3", "-p", "2", "--omega", "2", "--meshes", "3,5,7"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = fs::read_to_string(dir.path().join("convergence_d3_p2.csv")).unwrap();
    let rates: Vec<f64> = table
        .lines()
        .skip(2)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(rates.len(), 2);
    for r in rates {
        assert!((2.7..=3.5).contains(&r), "rate {r}\n{table}");
    }
}
