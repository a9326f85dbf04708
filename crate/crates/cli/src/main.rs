use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use tpss::advect::{
    convergence_study, max_stable_dt, solve, AdvectionConfig, ConvergenceTable, SatKind, TimeStep,
};
use tpss::assembly::sparsity_stats;
use tpss::exchange::{read_operator, write_operator};
use tpss::mesh::{
    perturb_mesh_2d, perturb_mesh_3d, quality_report, uniform_tet_mesh, uniform_tri_mesh, write_mesh, Mesh,
};
use tpss::verify::verify_tpss;
use tpss::{build_tpss, Error, Family, TpssOperator};

const EXIT_VALIDATION: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

#[derive(Parser)]
#[command(name = "tpss", version, about = "Tensor-product split-simplex SBP operators")]
struct Cli {
    /// TOML file with default parameters; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, global = true, env = "TPSS_OUT_DIR")]
    out_dir: Option<PathBuf>,
    /// Worker threads for the advection residual (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Assemble an operator and write it in the exchange format.
    Build {
        #[command(flatten)]
        op: OpArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check SBP invariants and exactness of an operator.
    Verify {
        #[command(flatten)]
        op: OpArgs,
        /// Operator file to check instead of building one.
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Generate a periodic mesh and report its quality.
    Mesh {
        #[arg(short, long)]
        d: Option<usize>,
        #[command(flatten)]
        mesh: MeshArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the advection problem on one mesh.
    Solve {
        #[command(flatten)]
        op: OpArgs,
        #[command(flatten)]
        mesh: MeshArgs,
        #[command(flatten)]
        adv: AdvArgs,
    },
    /// Grid convergence study over a list of mesh sizes.
    Converge {
        #[command(flatten)]
        op: OpArgs,
        /// Comma-separated cells per side, e.g. `5,10,15`.
        #[arg(long, value_delimiter = ',')]
        meshes: Option<Vec<usize>>,
        #[arg(long)]
        alpha: Option<f64>,
        #[command(flatten)]
        adv: AdvArgs,
    },
    /// Golden-section search for the largest energy-stable time step.
    Maxdt {
        #[command(flatten)]
        op: OpArgs,
        #[command(flatten)]
        mesh: MeshArgs,
        #[command(flatten)]
        adv: AdvArgs,
        #[arg(long)]
        t_test: Option<f64>,
        #[arg(long)]
        dt_lo: Option<f64>,
        #[arg(long)]
        dt_hi: Option<f64>,
        #[arg(long)]
        rel_tol: Option<f64>,
    },
    /// Nonzero counts and sparsity of the derivative operators.
    Sparsity {
        #[command(flatten)]
        op: OpArgs,
    },
}

#[derive(Args, Clone, Default)]
struct OpArgs {
    #[arg(long)]
    family: Option<String>,
    #[arg(short, long)]
    p: Option<usize>,
    #[arg(short, long)]
    d: Option<usize>,
    #[arg(long)]
    n1: Option<usize>,
}

#[derive(Args, Clone, Default)]
struct MeshArgs {
    /// Cells per side of the underlying box mesh.
    #[arg(short, long)]
    n: Option<usize>,
    /// Perturbation amplitude (0 keeps the uniform mesh).
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args, Clone, Default)]
struct AdvArgs {
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long, conflicts_with = "dt")]
    cfl: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// `upwind` or `central`.
    #[arg(long)]
    sat: Option<String>,
    /// Wave speed components, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    c: Option<Vec<f64>>,
}

/// Optional defaults read from `--config`.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    out_dir: Option<PathBuf>,
    threads: Option<usize>,
    family: Option<String>,
    p: Option<usize>,
    d: Option<usize>,
    n1: Option<usize>,
    n: Option<usize>,
    alpha: Option<f64>,
    meshes: Option<Vec<usize>>,
    omega: Option<f64>,
    t_final: Option<f64>,
    cfl: Option<f64>,
    dt: Option<f64>,
    sat: Option<String>,
    c: Option<Vec<f64>>,
    t_test: Option<f64>,
    dt_lo: Option<f64>,
    dt_hi: Option<f64>,
    rel_tol: Option<f64>,
}

enum Failure {
    Validation(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Invariant { .. } | Error::Numerical(_) => Failure::Numerical(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Validation(e.to_string())
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn invalid<T>(msg: impl Into<String>) -> std::result::Result<T, Failure> {
    Err(Failure::Validation(msg.into()))
}

/// Real formatted with 17 significant digits.
fn real(x: f64) -> String {
    format!("{x:.16e}")
}

struct Ctx {
    file: FileConfig,
    out_dir: PathBuf,
}

impl Ctx {
    fn out_path(&self, explicit: Option<PathBuf>, default: &str) -> std::io::Result<PathBuf> {
        let path = explicit.unwrap_or_else(|| self.out_dir.join(default));
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)?;
            }
        }
        Ok(path)
    }

    fn op_params(&self, a: &OpArgs) -> std::result::Result<(Family, usize, usize, Option<usize>), Failure> {
        let fam = a.family.clone().or_else(|| self.file.family.clone()).unwrap_or_else(|| "lgl".into());
        let Some(family) = Family::parse(&fam) else {
            return invalid(format!("unknown operator family `{fam}`"));
        };
        let p = a.p.or(self.file.p).unwrap_or(1);
        let d = a.d.or(self.file.d).unwrap_or(2);
        if !(2..=3).contains(&d) {
            return invalid(format!("dimension must be 2 or 3, got {d}"));
        }
        if p == 0 {
            return invalid("degree must be at least 1");
        }
        if family == Family::Csbp && (p != 1 || d != 2) {
            return invalid("CSBP operators are limited to p = 1 in 2D");
        }
        Ok((family, p, d, a.n1.or(self.file.n1)))
    }

    fn operator(&self, a: &OpArgs) -> std::result::Result<TpssOperator, Failure> {
        let (family, p, d, n1) = self.op_params(a)?;
        Ok(build_tpss(family, d, p, n1)?)
    }

    fn mesh(&self, d: usize, a: &MeshArgs) -> std::result::Result<Mesh, Failure> {
        let n = a.n.or(self.file.n).unwrap_or(4);
        let alpha = a.alpha.or(self.file.alpha).unwrap_or(0.0);
        build_mesh(d, n, alpha)
    }

    fn advection(&self, d: usize, a: &AdvArgs) -> std::result::Result<AdvectionConfig, Failure> {
        let f = &self.file;
        let mut cfg = AdvectionConfig::new(d);
        cfg.omega = a.omega.or(f.omega).unwrap_or(if d == 2 { 8.0 } else { 2.0 });
        cfg.t_final = a.t_final.or(f.t_final).unwrap_or(1.0);
        // Flags override the file as a pair, so `--dt` beats a file `cfl`.
        cfg.step = match (a.cfl, a.dt, f.cfl, f.dt) {
            (Some(c), _, _, _) => TimeStep::Cfl(c),
            (None, Some(dt), _, _) => TimeStep::Dt(dt),
            (None, None, Some(c), _) => TimeStep::Cfl(c),
            (None, None, None, Some(dt)) => TimeStep::Dt(dt),
            _ => TimeStep::Cfl(0.02),
        };
        let sat = a.sat.clone().or_else(|| f.sat.clone()).unwrap_or_else(|| "upwind".into());
        cfg.sat = match SatKind::parse(&sat) {
            Some(s) => s,
            None => return invalid(format!("unknown SAT kind `{sat}`")),
        };
        if let Some(c) = a.c.clone().or_else(|| f.c.clone()) {
            cfg.c = c;
        }
        cfg.validate(d)?;
        Ok(cfg)
    }
}

fn build_mesh(d: usize, n: usize, alpha: f64) -> std::result::Result<Mesh, Failure> {
    if n == 0 {
        return invalid("mesh needs at least one cell per side");
    }
    if !alpha.is_finite() || alpha < 0.0 {
        return invalid("perturbation amplitude must be finite and nonnegative");
    }
    let mesh = match d {
        2 => {
            let m = uniform_tri_mesh(n, n, [1.0, 1.0])?;
            if alpha > 0.0 {
                perturb_mesh_2d(&m, alpha)?
            } else {
                m
            }
        }
        3 => {
            let m = uniform_tet_mesh(n, [1.0; 3])?;
            if alpha > 0.0 {
                perturb_mesh_3d(&m, alpha)?
            } else {
                m
            }
        }
        _ => return invalid(format!("dimension must be 2 or 3, got {d}")),
    };
    Ok(mesh)
}

fn cmd_build(ctx: &Ctx, a: &OpArgs, out: Option<PathBuf>) -> CmdResult {
    let (family, p, d, _) = ctx.op_params(a)?;
    let op = ctx.operator(a)?;
    let path = ctx.out_path(out, &format!("tpss_{family}_d{d}_p{p}.txt"))?;
    write_operator(&op, BufWriter::new(File::create(&path)?))?;
    let s = sparsity_stats(&op);
    println!("family {family}  d = {d}  p = {p}  n1 = {}", op.n1);
    println!("n_p = {}", op.n_p());
    println!("nnz(D) = {}  sparsity = {:.4}", s.nnz_actual, s.s_actual);
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_verify(ctx: &Ctx, a: &OpArgs, file: Option<PathBuf>) -> CmdResult {
    let op = match file {
        Some(path) => read_operator(BufReader::new(File::open(&path)?))?,
        None => ctx.operator(a)?,
    };
    let report = verify_tpss(&op);
    print!("{report}");
    if report.passed() {
        println!("all checks passed");
        Ok(())
    } else {
        let names: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
        Err(Failure::Numerical(format!("failed checks: {}", names.join(", "))))
    }
}

fn cmd_mesh(ctx: &Ctx, d: Option<usize>, a: &MeshArgs, out: Option<PathBuf>) -> CmdResult {
    let d = d.or(ctx.file.d).unwrap_or(2);
    let mesh = ctx.mesh(d, a)?;
    mesh.validate()?;
    let q = quality_report(&mesh);
    let n = a.n.or(ctx.file.n).unwrap_or(4);
    let path = ctx.out_path(out, &format!("mesh_d{d}_n{n}.txt"))?;
    write_mesh(&mesh, BufWriter::new(File::create(&path)?))?;
    let qpath = path.with_extension("quality.csv");
    let mut w = BufWriter::new(File::create(&qpath)?);
    writeln!(w, "element,aspect_ratio,max_angle_deg")?;
    for (k, ar) in q.aspect_ratio.iter().enumerate() {
        let angle = q.max_angle.get(k).map_or(String::new(), |x| real(*x));
        writeln!(w, "{k},{},{angle}", real(*ar))?;
    }
    w.flush()?;
    println!("elements = {}  vertices = {}", mesh.n_elements(), mesh.vertices.len());
    println!("h_min = {:.6}", mesh.h_min());
    println!("max aspect ratio = {:.4}", q.max_aspect_ratio());
    if let Some(angle) = q.max_interior_angle() {
        println!("max interior angle = {angle:.4} deg");
    }
    println!("wrote {} and {}", path.display(), qpath.display());
    Ok(())
}

fn cmd_solve(ctx: &Ctx, a: &OpArgs, m: &MeshArgs, adv: &AdvArgs) -> CmdResult {
    let (_, p, d, _) = ctx.op_params(a)?;
    let op = Arc::new(ctx.operator(a)?);
    let mesh = ctx.mesh(d, m)?;
    let cfg = ctx.advection(d, adv)?;
    let r = solve(&mesh, op, &cfg)?;
    let n = m.n.or(ctx.file.n).unwrap_or(4);
    let path = ctx.out_path(None, &format!("energy_d{d}_p{p}_n{n}.csv"))?;
    let mut w = BufWriter::new(File::create(&path)?);
    writeln!(w, "t,energy")?;
    for (t, e) in &r.energy {
        writeln!(w, "{},{}", real(*t), real(*e))?;
    }
    w.flush()?;
    println!("elements = {}  dof = {}  steps = {}  dt = {:.6e}", r.n_e, r.dof, r.steps, r.dt);
    println!("H-norm error = {:.4e}  max error = {:.4e}", r.h_norm_error, r.linf_error);
    println!("wall time = {:.3} s", r.wall_time);
    println!("wrote {}", path.display());
    if r.aborted {
        return Err(Failure::Numerical("solution became unstable".into()));
    }
    Ok(())
}

fn write_table(path: &Path, table: &ConvergenceTable, sizes: &[usize]) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "mesh,n_e,dof,h_norm_error,linf_error,rate")?;
    for (row, n) in table.rows.iter().zip(sizes) {
        let rate = row.rate.map_or_else(|| "nan".to_string(), real);
        writeln!(
            w,
            "{n},{},{},{},{},{rate}",
            row.n_e,
            row.dof,
            real(row.h_norm_error),
            real(row.linf_error)
        )?;
    }
    w.flush()
}

fn cmd_converge(ctx: &Ctx, a: &OpArgs, meshes: Option<Vec<usize>>, alpha: Option<f64>, adv: &AdvArgs) -> CmdResult {
    let (_, p, d, _) = ctx.op_params(a)?;
    let Some(sizes) = meshes.or_else(|| ctx.file.meshes.clone()) else {
        return invalid("converge needs --meshes");
    };
    if sizes.len() < 2 {
        return invalid("converge needs at least two meshes");
    }
    let alpha = alpha.or(ctx.file.alpha).unwrap_or(0.0);
    let op = Arc::new(ctx.operator(a)?);
    let cfg = ctx.advection(d, adv)?;
    let meshes = sizes.iter().map(|&n| build_mesh(d, n, alpha)).collect::<std::result::Result<Vec<_>, _>>()?;
    let table = convergence_study(&meshes, op, &cfg)?;
    let path = ctx.out_path(None, &format!("convergence_d{d}_p{p}.csv"))?;
    write_table(&path, &table, &sizes)?;
    println!("{:>6} {:>8} {:>10} {:>12} {:>12} {:>6}", "mesh", "n_e", "dof", "H-norm", "max", "rate");
    for (row, n) in table.rows.iter().zip(&sizes) {
        let rate = row.rate.map_or_else(|| "--".to_string(), |r| format!("{r:.2}"));
        println!(
            "{n:>6} {:>8} {:>10} {:>12.4e} {:>12.4e} {rate:>6}",
            row.n_e, row.dof, row.h_norm_error, row.linf_error
        );
    }
    match table.slope {
        Some(s) => println!("least-squares rate = {s:.3}"),
        None => println!("least-squares rate undefined"),
    }
    println!("wrote {}", path.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_maxdt(
    ctx: &Ctx,
    a: &OpArgs,
    m: &MeshArgs,
    adv: &AdvArgs,
    t_test: Option<f64>,
    dt_lo: Option<f64>,
    dt_hi: Option<f64>,
    rel_tol: Option<f64>,
) -> CmdResult {
    let f = &ctx.file;
    let (_, p, d, _) = ctx.op_params(a)?;
    let t_test = t_test.or(f.t_test).unwrap_or(5.0);
    let lo = dt_lo.or(f.dt_lo).unwrap_or(1e-3);
    let hi = dt_hi.or(f.dt_hi).unwrap_or(0.1);
    let rel_tol = rel_tol.or(f.rel_tol).unwrap_or(1e-3);
    if !(lo > 0.0 && hi > lo) {
        return invalid(format!("time-step bracket needs 0 < dt_lo < dt_hi, got [{lo}, {hi}]"));
    }
    if !(rel_tol > 0.0) || !(t_test > 0.0) {
        return invalid("rel_tol and t_test must be positive");
    }
    let op = Arc::new(ctx.operator(a)?);
    let mesh = ctx.mesh(d, m)?;
    let cfg = ctx.advection(d, adv)?;
    let r = max_stable_dt(&mesh, op, &cfg, t_test, (lo, hi), rel_tol)?;
    let path = ctx.out_path(None, &format!("maxdt_d{d}_p{p}.csv"))?;
    let mut w = BufWriter::new(File::create(&path)?);
    writeln!(w, "dt,steps,energy_change,stable")?;
    for probe in &r.trace {
        writeln!(w, "{},{},{},{}", real(probe.dt), probe.steps, real(probe.energy_change), probe.stable)?;
    }
    w.flush()?;
    println!("dt_max = {:.4e}  ({} probes)", r.dt_max, r.trace.len());
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_sparsity(ctx: &Ctx, a: &OpArgs) -> CmdResult {
    let op = ctx.operator(a)?;
    let s = sparsity_stats(&op);
    println!("d = {}  n1 = {}  n_p = {}", s.dim, s.n1, s.n_p);
    println!("nnz(D) = {}  estimate = {}", s.nnz_actual, s.nnz_estimate);
    println!("s = {:.4}  (formula {:.4})", s.s_actual, s.s_formula);
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    let file = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            toml::from_str(&text).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };
    let threads = cli.threads.or(file.threads).unwrap_or(0);
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::Validation(e.to_string()))?;
    }
    let out_dir = cli.out_dir.or_else(|| file.out_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    let ctx = Ctx { file, out_dir };
    match cli.cmd {
        Cmd::Build { op, out } => cmd_build(&ctx, &op, out),
        Cmd::Verify { op, file } => cmd_verify(&ctx, &op, file),
        Cmd::Mesh { d, mesh, out } => cmd_mesh(&ctx, d, &mesh, out),
        Cmd::Solve { op, mesh, adv } => cmd_solve(&ctx, &op, &mesh, &adv),
        Cmd::Converge { op, meshes, alpha, adv } => cmd_converge(&ctx, &op, meshes, alpha, &adv),
        Cmd::Maxdt {
            op,
            mesh,
            adv,
            t_test,
            dt_lo,
            dt_hi,
            rel_tol,
        } => cmd_maxdt(&ctx, &op, &mesh, &adv, t_test, dt_lo, dt_hi, rel_tol),
        Cmd::Sparsity { op } => cmd_sparsity(&ctx, &op),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}
