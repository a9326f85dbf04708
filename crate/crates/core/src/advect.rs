//! SBP-SAT discretization of linear advection `u_t + c . grad u = 0` on
//! periodic simplicial meshes, with RK4 time stepping and the usual studies
//! built on top: error norms, grid convergence and the largest time step
//! that does not increase the discrete energy.
//!
//! On element `k` the semi-discrete system is
//!
//! ```text
//! du/dt = -sum_i c_i D_x_i u
//!         + H_k^{-1} sum_g R_g^T tau_g (P_g u_nb - R_g u)
//! ```
//!
//! with `a = B_g (c . n~_g)` per facet node, `tau = max(-a, 0)` (upwind) or
//! `tau = -a / 2` (central). The volume term is evaluated in difference form,
//! `(D u)_r = sum_c D_rc (u_c - u_r)`, which uses `D 1 = 0` so that constant
//! states are steady to the last bit on any mesh.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::assembly::TpssOperator;
use crate::error::{Error, Result};
use crate::mesh::{facet_vertices, Mesh};
use crate::physmap::AffineMap;
use crate::sparse::StackedCsr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SatKind {
    Upwind,
    Central,
}

impl SatKind {
    pub fn parse(s: &str) -> Option<SatKind> {
        match s.to_ascii_lowercase().as_str() {
            "upwind" => Some(SatKind::Upwind),
            "central" => Some(SatKind::Central),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SatKind::Upwind => "upwind",
            SatKind::Central => "central",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    /// `dt = cfl * h_min / |c|`, with `h` the longest element edge.
    Cfl(f64),
    Dt(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdvectionConfig {
    pub c: Vec<f64>,
    pub omega: f64,
    pub t_final: f64,
    pub step: TimeStep,
    pub sat: SatKind,
}

/// Default wave speed, of magnitude `sqrt(d)`.
pub fn default_wave_speed(dim: usize) -> Vec<f64> {
    match dim {
        2 => vec![1.25, 7f64.sqrt() / 4.0],
        _ => vec![1.5, 0.5, 1.0 / 2f64.sqrt()],
    }
}

impl AdvectionConfig {
    pub fn new(dim: usize) -> Self {
        AdvectionConfig {
            c: default_wave_speed(dim),
            omega: 2.0,
            t_final: 1.0,
            step: TimeStep::Cfl(0.1),
            sat: SatKind::Upwind,
        }
    }

    pub fn speed(&self) -> f64 {
        self.c.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.c.len() != dim {
            return Err(Error::Config(format!("wave speed has {} components, expected {dim}", self.c.len())));
        }
        if !(self.t_final >= 0.0) || !self.t_final.is_finite() {
            return Err(Error::Config("final time must be finite and nonnegative".into()));
        }
        match self.step {
            TimeStep::Cfl(x) | TimeStep::Dt(x) if !(x > 0.0) || !x.is_finite() => {
                Err(Error::Config("time step and CFL must be positive".into()))
            }
            _ => Ok(()),
        }
    }
}

/// `U(x, t) = prod_i sin(omega pi (x_i - c_i t))`.
pub fn exact_solution(x: &[f64], t: f64, c: &[f64], omega: f64) -> f64 {
    x.iter().zip(c).map(|(xi, ci)| (omega * PI * (xi - ci * t)).sin()).product()
}

#[derive(Debug, Clone, Copy)]
struct FaceLink {
    nb_elem: usize,
    nb_facet: usize,
    /// `c . n~` on this facet.
    cn: f64,
    perm: usize,
}

/// Everything the residual needs, precomputed for one mesh and operator.
pub struct Discretization {
    pub dim: usize,
    pub n_p: usize,
    pub n_e: usize,
    pub op: Arc<TpssOperator>,
    pub sat: SatKind,
    pub c: Vec<f64>,
    pub h_min: f64,
    dstack: StackedCsr,
    /// `-a_j` per element, `a_j = sum_i c_i adj_{j i} / |J|`.
    coef: Vec<f64>,
    pub jdet: Vec<f64>,
    hinv: Vec<f64>,
    /// Physical node coordinates, `[(k n_p + m) d + i]`.
    pub coords: Vec<f64>,
    faces: Vec<FaceLink>,
    perms: Vec<Vec<usize>>,
}

fn barycentric(xi: &[f64]) -> Vec<f64> {
    let mut l = Vec::with_capacity(xi.len() + 1);
    l.push(0.0);
    l.extend(xi.iter().map(|x| 0.5 * (x + 1.0)));
    l[0] = 1.0 - l[1..].iter().sum::<f64>();
    l
}

/// For reference facets `a` and `b` glued with facet vertex permutation
/// `vperm`, the position on facet `b` of each node of facet `a`.
fn node_permutation(op: &TpssOperator, a: usize, b: usize, vperm: &[usize]) -> Result<Vec<usize>> {
    let dim = op.dim;
    let fa = facet_vertices(dim, a);
    let fb = facet_vertices(dim, b);
    let target = &op.facets[b].nodes;
    op.facets[a]
        .nodes
        .iter()
        .map(|&m| {
            let la = barycentric(op.nodes.point(m));
            let mut lb = vec![0.0; dim + 1];
            for (p, &q) in vperm.iter().enumerate() {
                lb[fb[q]] = la[fa[p]];
            }
            let xi: Vec<f64> = lb[1..].iter().map(|l| 2.0 * l - 1.0).collect();
            target
                .iter()
                .position(|&t| {
                    op.nodes
                        .point(t)
                        .iter()
                        .zip(&xi)
                        .all(|(y, x)| (y - x).abs() < 1e-10)
                })
                .ok_or_else(|| {
                    Error::Config(format!("facet {a} node {m} has no partner on facet {b}"))
                })
        })
        .collect()
}

impl Discretization {
    pub fn new(mesh: &Mesh, op: Arc<TpssOperator>, c: &[f64], sat: SatKind) -> Result<Self> {
        let dim = mesh.dim;
        if op.dim != dim {
            return Err(Error::Config(format!("{}D operator on a {dim}D mesh", op.dim)));
        }
        if c.len() != dim {
            return Err(Error::Config(format!("wave speed has {} components, expected {dim}", c.len())));
        }
        let n_p = op.n_p();
        let n_e = mesh.n_elements();
        let neighbors = mesh.neighbors()?;
        let mut coef = Vec::with_capacity(n_e * dim);
        let mut jdet = Vec::with_capacity(n_e);
        let mut coords = Vec::with_capacity(n_e * n_p * dim);
        let mut faces = Vec::with_capacity(n_e * (dim + 1));
        let mut perm_index: HashMap<(usize, usize, Vec<usize>), usize> = HashMap::new();
        let mut perms = Vec::new();
        for k in 0..n_e {
            let map = AffineMap::from_vertices(&mesh.element_vertices(k)).ok_or_else(|| Error::Element {
                element: k,
                msg: "degenerate or inverted element".into(),
            })?;
            coef.extend(map.reference_coefficients(c).iter().map(|a| -a));
            jdet.push(map.det);
            for xi in op.nodes.iter() {
                coords.extend(map.map(xi));
            }
            for (g, nb) in neighbors[k].iter().enumerate() {
                let n = map.scaled_normal(&op.facets[g].normal);
                let cn = n.iter().zip(c).map(|(a, b)| a * b).sum();
                let key = (g, nb.facet, nb.perm.clone());
                let perm = match perm_index.get(&key) {
                    Some(&i) => i,
                    None => {
                        perms.push(node_permutation(&op, g, nb.facet, &nb.perm)?);
                        perm_index.insert(key, perms.len() - 1);
                        perms.len() - 1
                    }
                };
                faces.push(FaceLink {
                    nb_elem: nb.elem,
                    nb_facet: nb.facet,
                    cn,
                    perm,
                });
            }
        }
        let drefs: Vec<_> = op.d.iter().collect();
        Ok(Discretization {
            dim,
            n_p,
            n_e,
            dstack: StackedCsr::new(&drefs),
            hinv: op.h.iter().map(|h| 1.0 / h).collect(),
            op,
            sat,
            c: c.to_vec(),
            h_min: mesh.h_min(),
            coef,
            jdet,
            coords,
            faces,
            perms,
        })
    }

    pub fn len(&self) -> usize {
        self.n_e * self.n_p
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn node(&self, k: usize, m: usize) -> &[f64] {
        let s = (k * self.n_p + m) * self.dim;
        &self.coords[s..s + self.dim]
    }

    /// Nodal values of the exact solution at time `t`.
    pub fn project_exact(&self, t: f64, omega: f64) -> Vec<f64> {
        self.coords
            .chunks_exact(self.dim)
            .map(|x| exact_solution(x, t, &self.c, omega))
            .collect()
    }

    fn element_residual(&self, k: usize, u: &[f64], out: &mut [f64]) {
        let n_p = self.n_p;
        let uk = &u[k * n_p..(k + 1) * n_p];
        self.dstack.combine_matvec_diff(&self.coef[k * self.dim..(k + 1) * self.dim], uk, out);
        let scale = 1.0 / self.jdet[k];
        for (g, link) in self.faces[k * (self.dim + 1)..(k + 1) * (self.dim + 1)].iter().enumerate() {
            let facet = &self.op.facets[g];
            let nb_nodes = &self.op.facets[link.nb_facet].nodes;
            let perm = &self.perms[link.perm];
            let unb = &u[link.nb_elem * n_p..(link.nb_elem + 1) * n_p];
            for (q, (&m, &b)) in facet.nodes.iter().zip(&facet.b).enumerate() {
                let a = b * link.cn;
                let tau = match self.sat {
                    SatKind::Upwind => (-a).max(0.0),
                    SatKind::Central => -0.5 * a,
                };
                if tau != 0.0 {
                    out[m] += tau * (unb[nb_nodes[perm[q]]] - uk[m]) * self.hinv[m] * scale;
                }
            }
        }
    }

    /// `out = du/dt` for the state `u`.
    pub fn residual(&self, u: &[f64], out: &mut [f64]) {
        out.par_chunks_mut(self.n_p)
            .enumerate()
            .for_each(|(k, ok)| self.element_residual(k, u, ok));
    }

    /// `sum_k v_k^T H_k w_k`.
    pub fn inner(&self, v: &[f64], w: &[f64]) -> f64 {
        let n_p = self.n_p;
        (0..self.n_e)
            .map(|k| {
                let s: f64 = (0..n_p).map(|m| self.op.h[m] * v[k * n_p + m] * w[k * n_p + m]).sum();
                self.jdet[k] * s
            })
            .sum()
    }

    pub fn energy(&self, u: &[f64]) -> f64 {
        self.inner(u, u)
    }

    /// `sum_k 1^T H_k v_k`.
    pub fn integral(&self, v: &[f64]) -> f64 {
        let n_p = self.n_p;
        (0..self.n_e)
            .map(|k| self.jdet[k] * (0..n_p).map(|m| self.op.h[m] * v[k * n_p + m]).sum::<f64>())
            .sum()
    }

    pub fn dt_from_cfl(&self, cfl: f64) -> f64 {
        let speed = self.c.iter().map(|x| x * x).sum::<f64>().sqrt();
        cfl * self.h_min / speed
    }

    /// Largest distance between matched interface nodes, accounting for the
    /// periodic shift.
    pub fn interface_node_mismatch(&self, mesh: &Mesh) -> f64 {
        let mut worst = 0.0f64;
        for itf in &mesh.interfaces {
            let link = self.faces[itf.elem_a * (self.dim + 1) + itf.facet_a];
            let perm = &self.perms[link.perm];
            let fa = &self.op.facets[itf.facet_a].nodes;
            let fb = &self.op.facets[itf.facet_b].nodes;
            for (q, &m) in fa.iter().enumerate() {
                let xa = self.node(itf.elem_a, m);
                let xb = self.node(itf.elem_b, fb[perm[q]]);
                let d: f64 = (0..self.dim)
                    .map(|i| (xa[i] + itf.shift[i] - xb[i]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                worst = worst.max(d);
            }
        }
        worst
    }
}

/// Classical four-stage Runge-Kutta with reusable stage storage.
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(n: usize) -> Self {
        Rk4 {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }

    pub fn step<F: FnMut(&[f64], &mut [f64])>(&mut self, u: &mut [f64], dt: f64, mut f: F) {
        let n = u.len();
        f(u, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = u[i] + 0.5 * dt * self.k1[i];
        }
        f(&self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = u[i] + 0.5 * dt * self.k2[i];
        }
        f(&self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = u[i] + dt * self.k3[i];
        }
        f(&self.tmp, &mut self.k4);
        for i in 0..n {
            u[i] += dt / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

/// One RK4 step of `du/dt = f(u)`.
pub fn rk4_step<F: FnMut(&[f64], &mut [f64])>(u: &[f64], dt: f64, f: F) -> Vec<f64> {
    let mut out = u.to_vec();
    Rk4::new(u.len()).step(&mut out, dt, f);
    out
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub n_e: usize,
    pub dof: usize,
    pub dt: f64,
    pub steps: usize,
    pub t_final: f64,
    pub h_norm_error: f64,
    pub linf_error: f64,
    /// `(t, E)` after every step, starting with `t = 0`.
    pub energy: Vec<(f64, f64)>,
    pub wall_time: f64,
    /// Set when the energy grew past ten times its initial value or the
    /// state stopped being finite.
    pub aborted: bool,
}

const BLOWUP_FACTOR: f64 = 10.0;

/// Runs `n` steps of size `dt` from `u`, recording the energy. Returns the
/// history and whether the run was aborted.
fn march(disc: &Discretization, u: &mut [f64], dt: f64, n: usize) -> (Vec<(f64, f64)>, bool) {
    let mut rk = Rk4::new(u.len());
    let e0 = disc.energy(u);
    let mut history = Vec::with_capacity(n + 1);
    history.push((0.0, e0));
    for s in 1..=n {
        rk.step(u, dt, |x, out| disc.residual(x, out));
        let e = disc.energy(u);
        history.push((s as f64 * dt, e));
        if !e.is_finite() || e > BLOWUP_FACTOR * e0 {
            return (history, true);
        }
    }
    (history, false)
}

/// Number of steps and step size landing exactly on `t_final`.
pub fn step_count(t_final: f64, dt: f64) -> (usize, f64) {
    if t_final == 0.0 {
        return (0, dt);
    }
    let n = (t_final / dt - 1e-12).ceil().max(1.0) as usize;
    (n, t_final / n as f64)
}

pub fn solve(mesh: &Mesh, op: Arc<TpssOperator>, cfg: &AdvectionConfig) -> Result<SolveReport> {
    cfg.validate(mesh.dim)?;
    let disc = Discretization::new(mesh, op, &cfg.c, cfg.sat)?;
    solve_with(&disc, cfg)
}

pub fn solve_with(disc: &Discretization, cfg: &AdvectionConfig) -> Result<SolveReport> {
    cfg.validate(disc.dim)?;
    let start = Instant::now();
    let dt0 = match cfg.step {
        TimeStep::Cfl(cfl) => disc.dt_from_cfl(cfl),
        TimeStep::Dt(dt) => dt,
    };
    let (n, dt) = step_count(cfg.t_final, dt0);
    let mut u = disc.project_exact(0.0, cfg.omega);
    let (energy, aborted) = march(disc, &mut u, dt, n);
    let exact = disc.project_exact(cfg.t_final, cfg.omega);
    let err: Vec<f64> = u.iter().zip(&exact).map(|(a, b)| a - b).collect();
    let linf = err.iter().fold(0.0f64, |m, e| if e.is_finite() { m.max(e.abs()) } else { f64::INFINITY });
    Ok(SolveReport {
        n_e: disc.n_e,
        dof: disc.len(),
        dt,
        steps: energy.len() - 1,
        t_final: cfg.t_final,
        h_norm_error: disc.energy(&err).sqrt(),
        linf_error: linf,
        energy,
        wall_time: start.elapsed().as_secs_f64(),
        aborted,
    })
}

#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub n_e: usize,
    pub dof: usize,
    /// Nominal size `n_e^{-1/d}`.
    pub h: f64,
    pub h_norm_error: f64,
    pub linf_error: f64,
    /// Rate against the previous row.
    pub rate: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log(error)` against `log(h)`.
    pub slope: Option<f64>,
}

/// Pairwise rates and the least-squares slope for errors on meshes of
/// nominal sizes `h`. Rates involving a zero or non-finite error are
/// undefined.
pub fn observed_rates(h: &[f64], err: &[f64]) -> (Vec<Option<f64>>, Option<f64>) {
    let ok = |e: f64| e > 0.0 && e.is_finite();
    let mut rates = vec![None];
    for i in 1..h.len() {
        rates.push(if ok(err[i]) && ok(err[i - 1]) {
            Some((err[i - 1] / err[i]).ln() / (h[i - 1] / h[i]).ln())
        } else {
            None
        });
    }
    let slope = if h.len() >= 2 && err.iter().all(|&e| ok(e)) {
        let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
        let y: Vec<f64> = err.iter().map(|v| v.ln()).collect();
        let n = x.len() as f64;
        let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
        if sxx > 0.0 {
            Some(sxy / sxx)
        } else {
            None
        }
    } else {
        None
    };
    (rates, slope)
}

/// Solves on each mesh and tabulates errors and observed rates.
pub fn convergence_study(meshes: &[Mesh], op: Arc<TpssOperator>, cfg: &AdvectionConfig) -> Result<ConvergenceTable> {
    if meshes.len() < 2 {
        return Err(Error::Config("a convergence study needs at least two meshes".into()));
    }
    let mut rows = Vec::with_capacity(meshes.len());
    for mesh in meshes {
        let r = solve(mesh, op.clone(), cfg)?;
        if r.aborted {
            return Err(Error::Numerical(format!("solve on {} elements became unstable", r.n_e)));
        }
        rows.push(ConvergenceRow {
            n_e: r.n_e,
            dof: r.dof,
            h: (r.n_e as f64).powf(-1.0 / mesh.dim as f64),
            h_norm_error: r.h_norm_error,
            linf_error: r.linf_error,
            rate: None,
        });
    }
    let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let e: Vec<f64> = rows.iter().map(|r| r.h_norm_error).collect();
    let (rates, slope) = observed_rates(&h, &e);
    for (row, rate) in rows.iter_mut().zip(rates) {
        row.rate = rate;
    }
    Ok(ConvergenceTable { rows, slope })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DtProbe {
    pub dt: f64,
    pub steps: usize,
    /// `E(T) - E(0)`, infinite when the run blew up.
    pub energy_change: f64,
    pub stable: bool,
}

#[derive(Debug, Clone)]
pub struct MaxDtReport {
    pub dt_max: f64,
    pub trace: Vec<DtProbe>,
}

/// Whether `dt` keeps `E(T) <= E(0)` when marched with `ceil(T / dt)`
/// fixed steps.
pub fn probe_dt(disc: &Discretization, omega: f64, t_test: f64, dt: f64) -> DtProbe {
    let n = (t_test / dt).ceil().max(1.0) as usize;
    let mut u = disc.project_exact(0.0, omega);
    let (hist, aborted) = march(disc, &mut u, dt, n);
    let e0 = hist[0].1;
    let change = if aborted { f64::INFINITY } else { hist.last().map_or(0.0, |h| h.1) - e0 };
    DtProbe {
        dt,
        steps: n,
        energy_change: change,
        stable: !aborted && change <= 0.0,
    }
}

const GOLDEN: f64 = 0.381_966_011_250_105_1;
const MAX_DOUBLINGS: usize = 60;

/// Golden-section search for the largest stable time step.
///
/// The bracket is widened by doubling `hi` while it is still stable, and by
/// halving `lo` while it is not. The search stops once
/// `(hi - lo) / hi <= rel_tol` and returns `lo`.
pub fn max_stable_dt(
    mesh: &Mesh,
    op: Arc<TpssOperator>,
    cfg: &AdvectionConfig,
    t_test: f64,
    bracket: (f64, f64),
    rel_tol: f64,
) -> Result<MaxDtReport> {
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && hi > lo && rel_tol > 0.0 && t_test > 0.0) {
        return Err(Error::Config("max-dt search needs 0 < dt_lo < dt_hi, rel_tol > 0 and T > 0".into()));
    }
    let disc = Discretization::new(mesh, op, &cfg.c, cfg.sat)?;
    let mut trace = Vec::new();
    let probe = |dt: f64, trace: &mut Vec<DtProbe>| {
        let p = probe_dt(&disc, cfg.omega, t_test, dt);
        let s = p.stable;
        trace.push(p);
        s
    };
    let mut tries = 0;
    while probe(hi, &mut trace) {
        lo = hi;
        hi *= 2.0;
        tries += 1;
        if tries > MAX_DOUBLINGS {
            return Err(Error::Numerical("no unstable time step found while doubling".into()));
        }
    }
    tries = 0;
    while !probe(lo, &mut trace) {
        hi = lo;
        lo *= 0.5;
        tries += 1;
        if tries > MAX_DOUBLINGS {
            return Err(Error::Numerical("no stable time step found while halving".into()));
        }
    }
    while (hi - lo) / hi > rel_tol {
        let x = lo + GOLDEN * (hi - lo);
        if probe(x, &mut trace) {
            lo = x;
        } else {
            hi = x;
        }
    }
    Ok(MaxDtReport { dt_max: lo, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::build_tpss;
    use crate::mesh::{perturb_mesh_2d, uniform_tri_mesh};
    use crate::oned::Family;

    #[test]
    fn exact_solution_values() {
        let c = default_wave_speed(2);
        assert!((exact_solution(&[0.25, 0.25], 0.0, &c, 2.0) - 1.0).abs() < 1e-15);
        assert_eq!(exact_solution(&[0.0, 0.3], 0.0, &c, 2.0), 0.0);
        let v = exact_solution(&[0.3, 0.7], 0.0, &c, 8.0);
        assert!((v - (2.4 * PI).sin() * (5.6 * PI).sin()).abs() < 1e-15);
        for d in [2, 3] {
            let s = AdvectionConfig::new(d).speed();
            assert!((s - (d as f64).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn rk4_scalar_oracle_and_order() {
        let lam = -0.7;
        let f = |u: &[f64], o: &mut [f64]| o[0] = lam * u[0];
        let dt = 0.3;
        let one = rk4_step(&[1.0], dt, f)[0];
        let z = lam * dt;
        assert!((one - (1.0 + z + z * z / 2.0 + z.powi(3) / 6.0 + z.powi(4) / 24.0)).abs() < 1e-15);
        assert_eq!(rk4_step(&[2.5], 0.0, f), vec![2.5]);
        let h = 0.02;
        let exact = (lam * h).exp();
        let full = rk4_step(&[1.0], h, f)[0];
        let two = rk4_step(&rk4_step(&[1.0], h / 2.0, f), h / 2.0, f)[0];
        let ratio = (full - exact).abs() / (two - exact).abs();
        assert!((ratio / 16.0 - 1.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn constants_are_steady_on_distorted_mesh() {
        let op = Arc::new(build_tpss(Family::Lgl, 2, 2, None).unwrap());
        let mesh = perturb_mesh_2d(&uniform_tri_mesh(3, 4, [1.0, 1.0]).unwrap(), 2.5).unwrap();
        for sat in [SatKind::Upwind, SatKind::Central] {
            let disc = Discretization::new(&mesh, op.clone(), &default_wave_speed(2), sat).unwrap();
            let u = vec![3.0; disc.len()];
            let mut r = vec![0.0; disc.len()];
            disc.residual(&u, &mut r);
            assert!(r.iter().all(|&x| x == 0.0));
            assert!(disc.interface_node_mismatch(&mesh) < 1e-12);
        }
    }

    #[test]
    fn step_count_lands_on_final_time() {
        let (n, dt) = step_count(1.0, 0.3);
        assert_eq!(n, 4);
        assert!((n as f64 * dt - 1.0).abs() < 1e-15);
        assert_eq!(step_count(1.0, 0.25).0, 4);
    }

    #[test]
    fn rates_of_synthetic_errors() {
        let h = [0.1, 0.05, 0.025];
        let e: Vec<f64> = h.iter().map(|x: &f64| 3.0 * x.powi(3)).collect();
        let (r, s) = observed_rates(&h, &e);
        assert!(r[0].is_none());
        assert!((r[2].unwrap() - 3.0).abs() < 1e-12);
        assert!((s.unwrap() - 3.0).abs() < 1e-12);
        let (r, s) = observed_rates(&h, &[0.0, 0.0, 0.0]);
        assert!(r.iter().all(Option::is_none));
        assert!(s.is_none());
    }
}
