//! Experiment orchestration behind the command-line interface: single
//! solves, convergence ladders, manufactured-solution checks and α sweeps.

pub mod config;
pub mod norms;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::adjoint::{adjoint_residual, solve_adjoint, DiscreteAdjoint};
use crate::control::DiscreteControl;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fem::{load_vector, NodeSet, Region, TriangleRule};
use crate::io;
use crate::optimizer::{alpha_zero_bound, gradient, optimality_certificate, solve_fista, Certificate, FistaOptions, OptimizerReport};
use crate::problem::{interval_loads, Discretization, ProblemData, TrackingData};
use crate::state::{solve_state, state_residual, DiscreteState};

pub use config::{AlphaSpec, Config, LadderSpec, Resolution, Vary};
use norms::{adjoint_errors, control_pairing, cross_grid_state_error, fit_slope, state_errors};

/// Environment variable holding the number of ladder workers.
pub const WORKERS_ENV: &str = "IMPULSE_CONTROL_WORKERS";

/// Everything produced by one optimal control solve.
#[derive(Debug, Clone)]
pub struct Solution {
    pub disc: Discretization,
    pub data: ProblemData,
    pub control: DiscreteControl,
    pub report: OptimizerReport,
    pub state: DiscreteState,
    pub adjoint: DiscreteAdjoint,
    pub gradient: DiscreteControl,
    /// recomputed from scratch at the returned control
    pub certificate: Certificate,
}

impl Solution {
    pub fn monitors(&self) -> Monitors {
        let d = &self.disc;
        Monitors {
            state_l2: self.state.l2_norm(d),
            state_gradient_l2: self.state.gradient_norm(d),
            state_terminal: self.state.terminal_norm(d),
            state_residual: state_residual(d, &self.data.state, Some(&self.control), &self.state),
            adjoint_residual: adjoint_residual(d, &self.data.tracking, &self.state, &self.adjoint),
        }
    }

    /// `(kind, m, t, ‖g‖)` at control nodes and midway between consecutive ones.
    pub fn gradient_curve(&self) -> Vec<(&'static str, usize, f64, f64)> {
        let d = &self.disc;
        let g = &self.gradient;
        let mut out = Vec::new();
        for (k, (&m, gm)) in g.nodes.iter().zip(&g.groups).enumerate() {
            out.push(("node", m, d.grid.node(m), d.omega_norm(gm)));
            if let Some(next) = g.groups.get(k + 1) {
                let mid: Vec<f64> = gm.iter().zip(next).map(|(a, b)| 0.5 * (a + b)).collect();
                out.push(("midpoint", m, 0.5 * (d.grid.node(m) + d.grid.node(m + 1)), d.omega_norm(&mid)));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Monitors {
    pub state_l2: f64,
    pub state_gradient_l2: f64,
    pub state_terminal: f64,
    pub state_residual: f64,
    pub adjoint_residual: f64,
}

/// Absolute `α`: relative values are taken against `α₀` on the configured discretization.
pub fn resolve_alpha(config: &Config) -> Result<f64> {
    match config.alpha {
        AlphaSpec::Absolute(a) => Ok(a),
        AlphaSpec::Relative { relative_to_alpha_zero: r } => {
            let res = config.discretization;
            let spec = config.spec(1.0)?;
            let disc = spec.discretize(res.nx, res.ny(), res.steps)?;
            let data = ProblemData::new(&spec, &disc)?;
            let a0 = alpha_zero_bound(&disc, &data)?;
            if !(a0 > 0.0) {
                return Err(Error::Config("relative alpha needs a positive alpha_zero".into()));
            }
            Ok(r * a0)
        }
    }
}

/// Solves the optimal control problem of `config` at resolution `res`.
pub fn solve_at(config: &Config, res: Resolution, alpha: f64, options: &FistaOptions) -> Result<Solution> {
    let spec = config.spec(alpha)?;
    let disc = spec.discretize(res.nx, res.ny(), res.steps)?;
    let data = ProblemData::new(&spec, &disc)?;
    let (control, report) = solve_fista(&disc, &data, options)?;
    let (state, adjoint, grad) = gradient(&disc, &data, &control)?;
    let certificate = optimality_certificate(&disc, &data, &control)?;
    Ok(Solution { disc, data, control, report, state, adjoint, gradient: grad, certificate })
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(dir.join(name), text)?;
    Ok(())
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize)]
struct Manifest {
    command: String,
    version: &'static str,
    inputs: Vec<(String, String)>,
    outputs: Vec<String>,
    timings_seconds: Vec<(String, f64)>,
    workers: usize,
}

fn write_manifest(out: &Path, command: &str, inputs: &[&Path], outputs: Vec<String>, timings: Vec<(String, f64)>) -> Result<()> {
    let mut hashes = Vec::new();
    for p in inputs {
        hashes.push((p.display().to_string(), sha256_hex(&std::fs::read(p)?)));
    }
    let manifest = Manifest {
        command: command.to_string(),
        version: env!("CARGO_PKG_VERSION"),
        inputs: hashes,
        outputs,
        timings_seconds: timings,
        workers: rayon::current_num_threads(),
    };
    write_json(out, "manifest.json", &manifest)
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub resolution: Resolution,
    pub alpha: f64,
    pub alpha_zero: f64,
    /// set when `α ≥ α₀` and the zero control is optimal
    pub zero_control_via_threshold: bool,
    pub optimizer: OptimizerReport,
    pub certificate: Certificate,
    pub monitors: Monitors,
}

/// `solve`: optimal control at the configured resolution, with all artifacts.
pub fn cmd_solve(config_path: &Path, out: &Path) -> Result<SolveReport> {
    let clock = Instant::now();
    let config = Config::load(config_path)?;
    std::fs::create_dir_all(out)?;
    let alpha = resolve_alpha(&config)?;
    let res = config.discretization;
    let sol = solve_at(&config, res, alpha, &config.options())?;
    let solve_time = clock.elapsed().as_secs_f64();
    let d = &sol.disc;

    io::write_state(d, &sol.state, create(out, "state.csv")?)?;
    io::write_adjoint(d, &sol.adjoint, create(out, "adjoint.csv")?)?;
    io::write_control(d, &sol.control, create(out, "control.csv")?)?;
    io::write_group_norms(d, &sol.control, create(out, "control_norms.csv")?)?;
    let rows: Vec<Vec<String>> = sol
        .gradient_curve()
        .into_iter()
        .map(|(kind, m, t, n)| vec![kind.to_string(), m.to_string(), io::fmt(t), io::fmt(n), io::fmt(n / alpha)])
        .collect();
    io::write_table(&["kind", "m", "t", "norm", "norm_over_alpha"], &rows, create(out, "gradient_norms.csv")?)?;
    d.mesh.write_csv(create(out, "mesh_vertices.csv")?, create(out, "mesh_triangles.csv")?)?;

    let report = SolveReport {
        resolution: res,
        alpha,
        alpha_zero: sol.report.alpha_zero,
        zero_control_via_threshold: sol.report.zero_by_threshold,
        optimizer: sol.report.clone(),
        certificate: sol.certificate,
        monitors: sol.monitors(),
    };
    write_json(out, "report.json", &report)?;
    let outputs = [
        "state.csv",
        "adjoint.csv",
        "control.csv",
        "control_norms.csv",
        "gradient_norms.csv",
        "mesh_vertices.csv",
        "mesh_triangles.csv",
        "report.json",
    ];
    write_manifest(
        out,
        "solve",
        &[config_path],
        outputs.iter().map(|s| s.to_string()).collect(),
        vec![("solve".into(), solve_time), ("total".into(), clock.elapsed().as_secs_f64())],
    )?;
    Ok(report)
}

/// Slope of one metric against `h` or `τ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeFit {
    pub metric: String,
    pub against: String,
    pub slope: Option<f64>,
    /// slope without the coarsest point
    pub slope_drop_first: Option<f64>,
}

fn fits(metric: &str, against: &str, points: &[(f64, f64)]) -> SlopeFit {
    SlopeFit {
        metric: metric.to_string(),
        against: against.to_string(),
        slope: fit_slope(points),
        slope_drop_first: if points.len() > 1 { fit_slope(&points[1..]) } else { None },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub nx: usize,
    pub ny: usize,
    #[serde(rename = "M")]
    pub steps: usize,
    pub h: f64,
    pub tau: f64,
    pub objective: f64,
    pub objective_error: f64,
    /// `‖u − u_ref‖²_{L²(I;L²)} + β ‖(u − u_ref)(T)‖²`
    pub state_error_sq: f64,
    pub terminal_error_sq: f64,
    pub pairing_error: Option<f64>,
    pub support_size: usize,
    pub iterations: usize,
    pub r_bound: f64,
    pub r_align: f64,
    pub gap: f64,
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateTable {
    pub alpha: f64,
    pub vary: Vary,
    pub reference: RateRow,
    pub rows: Vec<RateRow>,
    pub slopes: Vec<SlopeFit>,
    pub pairing_error_decreasing: Option<bool>,
}

impl RateTable {
    pub fn slope(&self, metric: &str) -> Option<f64> {
        self.slopes.iter().find(|s| s.metric == metric).and_then(|s| s.slope)
    }
}

fn x_axis(vary: Vary) -> &'static str {
    match vary {
        Vary::Tau => "tau",
        Vary::H | Vary::Both => "h",
    }
}

fn pick_x(vary: Vary, h: f64, tau: f64) -> f64 {
    match vary {
        Vary::Tau => tau,
        Vary::H | Vary::Both => h,
    }
}

/// Runs `f` over `items` on the ladder worker pool, keeping input order.
fn in_pool<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> Result<R> + Sync + Send) -> Result<Vec<R>> {
    let workers = std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse::<usize>().ok()).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| items.par_iter().map(&f).collect())
}

fn tolerances_met(sol: &Solution, options: &FistaOptions) -> bool {
    let tol_bound = options.tol_bound.unwrap_or(1e-6 * sol.data.alpha);
    sol.report.converged && sol.certificate.r_bound <= tol_bound && sol.certificate.r_align <= options.tol_align
}

fn rate_row(
    sol: &Solution,
    reference: &Solution,
    test: Option<(&Expr, f64)>,
    beta: f64,
    options: &FistaOptions,
    timings: &mut Vec<(String, f64)>,
    started: Instant,
) -> Result<RateRow> {
    let (sq, terminal) = cross_grid_state_error(&sol.disc, &sol.state, &reference.disc, &reference.state)?;
    let pairing_error = match test {
        Some((v, reference_pairing)) => Some((control_pairing(&sol.disc, &sol.control, v)? - reference_pairing).abs()),
        None => None,
    };
    let d = &sol.disc;
    timings.push((format!("nx={} M={}", d.mesh.nx, d.steps()), started.elapsed().as_secs_f64()));
    Ok(RateRow {
        nx: d.mesh.nx,
        ny: d.mesh.ny,
        steps: d.steps(),
        h: d.mesh.h,
        tau: d.grid.tau_max(),
        objective: sol.report.objective,
        objective_error: (sol.report.objective - reference.report.objective).abs(),
        state_error_sq: sq + beta * terminal,
        terminal_error_sq: terminal,
        pairing_error,
        support_size: sol.report.support.len(),
        iterations: sol.report.iterations,
        r_bound: sol.certificate.r_bound,
        r_align: sol.certificate.r_align,
        gap: sol.certificate.gap,
        certified: tolerances_met(sol, options),
    })
}

/// Rate study of the control problem against a finer reference solution.
pub fn run_rates(config: &Config, ladder: &LadderSpec) -> Result<(RateTable, Vec<(String, f64)>)> {
    let reference_res = ladder
        .reference
        .ok_or_else(|| Error::Config("rates needs a reference discretization".into()))?;
    let alpha = resolve_alpha(config)?;
    let options = config.options();
    let test = ladder.test_function()?;
    let mut timings = Vec::new();

    let clock = Instant::now();
    let reference = solve_at(config, reference_res, alpha, &options)?;
    let ref_pairing = test.as_ref().map(|v| control_pairing(&reference.disc, &reference.control, v)).transpose()?;
    let reference_row = rate_row(&reference, &reference, test.as_ref().zip(ref_pairing), config.beta, &options, &mut timings, clock)?;

    let rows = in_pool(&ladder.points, |res| {
        let started = Instant::now();
        let sol = solve_at(config, *res, alpha, &options)?;
        let mut t = Vec::new();
        let row = rate_row(&sol, &reference, test.as_ref().zip(ref_pairing), config.beta, &options, &mut t, started)?;
        Ok((row, t))
    })?;
    let (rows, row_times): (Vec<RateRow>, Vec<Vec<(String, f64)>>) = rows.into_iter().unzip();
    timings.extend(row_times.into_iter().flatten());

    let against = x_axis(ladder.vary);
    let certified: Vec<&RateRow> = rows.iter().filter(|r| r.certified).collect();
    let series = |f: &dyn Fn(&RateRow) -> f64| -> Vec<(f64, f64)> {
        certified.iter().map(|r| (pick_x(ladder.vary, r.h, r.tau), f(r))).collect()
    };
    let mut slopes = vec![
        fits("objective_error", against, &series(&|r| r.objective_error)),
        fits("state_error_sq", against, &series(&|r| r.state_error_sq)),
    ];
    if test.is_some() {
        slopes.push(fits("pairing_error", against, &series(&|r| r.pairing_error.unwrap_or(f64::NAN))));
    }
    let pairing_error_decreasing = test.is_some().then(|| {
        certified
            .windows(2)
            .all(|w| w[1].pairing_error.unwrap_or(f64::NAN) <= w[0].pairing_error.unwrap_or(f64::NAN))
    });
    Ok((RateTable { alpha, vary: ladder.vary, reference: reference_row, rows, slopes, pairing_error_decreasing }, timings))
}

fn rate_table_csv(table: &RateTable) -> Vec<Vec<String>> {
    let opt = |v: Option<f64>| v.map(io::fmt).unwrap_or_default();
    std::iter::once(("reference", &table.reference))
        .chain(table.rows.iter().map(|r| ("ladder", r)))
        .map(|(kind, r)| {
            vec![
                kind.to_string(),
                r.nx.to_string(),
                r.ny.to_string(),
                r.steps.to_string(),
                io::fmt(r.h),
                io::fmt(r.tau),
                io::fmt(r.objective),
                io::fmt(r.objective_error),
                io::fmt(r.state_error_sq),
                io::fmt(r.terminal_error_sq),
                opt(r.pairing_error),
                r.support_size.to_string(),
                r.iterations.to_string(),
                io::fmt(r.r_bound),
                io::fmt(r.r_align),
                io::fmt(r.gap),
                r.certified.to_string(),
            ]
        })
        .collect()
}

fn slopes_csv(slopes: &[SlopeFit]) -> Vec<Vec<String>> {
    let opt = |v: Option<f64>| v.map(io::fmt).unwrap_or_default();
    slopes
        .iter()
        .map(|s| vec![s.metric.clone(), s.against.clone(), opt(s.slope), opt(s.slope_drop_first)])
        .collect()
}

/// `rates`: writes `rates.csv`, `slopes.csv` and `rates.json`.
pub fn cmd_rates(config_path: &Path, ladder_path: &Path, out: &Path) -> Result<RateTable> {
    let clock = Instant::now();
    let config = Config::load(config_path)?;
    let ladder = LadderSpec::load(ladder_path)?;
    std::fs::create_dir_all(out)?;
    let (table, mut timings) = run_rates(&config, &ladder)?;
    let header = [
        "kind",
        "nx",
        "ny",
        "M",
        "h",
        "tau",
        "objective",
        "objective_error",
        "state_error_sq",
        "terminal_error_sq",
        "pairing_error",
        "support_size",
        "iterations",
        "r_bound",
        "r_align",
        "gap",
        "certified",
    ];
    io::write_table(&header, &rate_table_csv(&table), create(out, "rates.csv")?)?;
    io::write_table(&["metric", "against", "slope", "slope_drop_first"], &slopes_csv(&table.slopes), create(out, "slopes.csv")?)?;
    write_json(out, "rates.json", &table)?;
    timings.push(("total".into(), clock.elapsed().as_secs_f64()));
    write_manifest(
        out,
        "rates",
        &[config_path, ladder_path],
        vec!["rates.csv".into(), "slopes.csv".into(), "rates.json".into()],
        timings,
    )?;
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyRow {
    pub nx: usize,
    pub ny: usize,
    #[serde(rename = "M")]
    pub steps: usize,
    pub h: f64,
    pub tau: f64,
    pub state_l2: f64,
    pub state_terminal: f64,
    /// interval values against the exact solution at interval midpoints
    pub state_midpoint: f64,
    pub adjoint_nodal_max: f64,
    pub adjoint_l2: f64,
    pub state_residual: f64,
    pub adjoint_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyTable {
    pub vary: Vary,
    pub rows: Vec<VerifyRow>,
    pub slopes: Vec<SlopeFit>,
}

impl VerifyTable {
    pub fn slope(&self, metric: &str) -> Option<f64> {
        self.slopes.iter().find(|s| s.metric == metric).and_then(|s| s.slope)
    }
}

/// State with `q = 0` and the adjoint driven by the manufactured source `g`
/// and terminal value `z(T)`, both compared with the exact solutions.
pub fn verify_point(config: &Config, res: Resolution) -> Result<VerifyRow> {
    let exact = config.manufactured()?;
    let spec = config.spec(1.0)?;
    let disc = spec.discretize(res.nx, res.ny(), res.steps)?;
    let data = ProblemData::new(&spec, &disc)?;
    let u = solve_state(&disc, &data.state, None)?;
    let ue = state_errors(&disc, &u, &exact.u)?;

    // zero state: the adjoint right-hand side is -u_d = g, the terminal value -β u_T = z(T)
    let minus_g = Expr::Neg(Box::new(exact.g.clone()));
    let (target_loads, target_sq) = interval_loads(&disc.mesh, &disc.grid, &minus_g)?;
    let t_end = disc.grid.t_end();
    let terminal = load_vector(&disc.mesh, NodeSet::Interior, Region::Domain, TriangleRule::Degree5, |x, y| {
        exact.z.evaluate(x, y, t_end).map(|v| -v)
    })?;
    let tracking = TrackingData { target_loads: Some(target_loads), target_sq, terminal_load: Some(terminal), terminal_sq: 0.0, beta: 1.0 };
    let zero = DiscreteState::zeros(&disc);
    let phi = solve_adjoint(&disc, &tracking, &zero)?;
    let ze = adjoint_errors(&disc, &phi, &exact.z)?;
    Ok(VerifyRow {
        nx: res.nx,
        ny: res.ny(),
        steps: res.steps,
        h: disc.mesh.h,
        tau: disc.grid.tau_max(),
        state_l2: ue.l2,
        state_terminal: ue.terminal,
        state_midpoint: ue.midpoint,
        adjoint_nodal_max: ze.nodal_max,
        adjoint_l2: ze.l2,
        state_residual: state_residual(&disc, &data.state, None, &u),
        adjoint_residual: adjoint_residual(&disc, &tracking, &zero, &phi),
    })
}

pub fn run_verify_state(config: &Config, ladder: &LadderSpec) -> Result<(VerifyTable, Vec<(String, f64)>)> {
    config.manufactured()?;
    let results = in_pool(&ladder.points, |res| {
        let started = Instant::now();
        let row = verify_point(config, *res)?;
        Ok((row, (format!("nx={} M={}", res.nx, res.steps), started.elapsed().as_secs_f64())))
    })?;
    let (rows, timings): (Vec<VerifyRow>, Vec<(String, f64)>) = results.into_iter().unzip();
    let against = x_axis(ladder.vary);
    let series = |f: fn(&VerifyRow) -> f64| -> Vec<(f64, f64)> {
        rows.iter().map(|r| (pick_x(ladder.vary, r.h, r.tau), f(r))).collect()
    };
    let slopes = vec![
        fits("state_l2", against, &series(|r| r.state_l2)),
        fits("state_terminal", against, &series(|r| r.state_terminal)),
        fits("state_midpoint", against, &series(|r| r.state_midpoint)),
        fits("adjoint_nodal_max", against, &series(|r| r.adjoint_nodal_max)),
        fits("adjoint_l2", against, &series(|r| r.adjoint_l2)),
    ];
    Ok((VerifyTable { vary: ladder.vary, rows, slopes }, timings))
}

/// `verify-state`: writes `verify.csv`, `slopes.csv` and `verify.json`.
pub fn cmd_verify_state(config_path: &Path, ladder_path: &Path, out: &Path) -> Result<VerifyTable> {
    let clock = Instant::now();
    let config = Config::load(config_path)?;
    let ladder = LadderSpec::load(ladder_path)?;
    std::fs::create_dir_all(out)?;
    let (table, mut timings) = run_verify_state(&config, &ladder)?;
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            vec![
                r.nx.to_string(),
                r.ny.to_string(),
                r.steps.to_string(),
                io::fmt(r.h),
                io::fmt(r.tau),
                io::fmt(r.state_l2),
                io::fmt(r.state_terminal),
                io::fmt(r.state_midpoint),
                io::fmt(r.adjoint_nodal_max),
                io::fmt(r.adjoint_l2),
                io::fmt(r.state_residual),
                io::fmt(r.adjoint_residual),
            ]
        })
        .collect();
    let header = [
        "nx",
        "ny",
        "M",
        "h",
        "tau",
        "state_l2",
        "state_terminal",
        "state_midpoint",
        "adjoint_nodal_max",
        "adjoint_l2",
        "state_residual",
        "adjoint_residual",
    ];
    io::write_table(&header, &rows, create(out, "verify.csv")?)?;
    io::write_table(&["metric", "against", "slope", "slope_drop_first"], &slopes_csv(&table.slopes), create(out, "slopes.csv")?)?;
    write_json(out, "verify.json", &table)?;
    timings.push(("total".into(), clock.elapsed().as_secs_f64()));
    write_manifest(
        out,
        "verify-state",
        &[config_path, ladder_path],
        vec!["verify.csv".into(), "slopes.csv".into(), "verify.json".into()],
        timings,
    )?;
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparsityRow {
    pub alpha: f64,
    pub alpha_over_alpha_zero: f64,
    pub support_size: usize,
    pub active_nodes: Vec<usize>,
    pub r_bound: f64,
    pub r_align: f64,
    pub gap: f64,
    /// `max_active |‖g_m‖ − α| / α`
    pub active_level_deviation: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparsityReport {
    pub alpha_zero: f64,
    pub control_nodes: usize,
    pub rows: Vec<SparsityRow>,
    /// support sizes do not grow as `α` increases
    pub monotone: bool,
}

/// Optimal controls for each `α`; `relative` values are fractions of `α₀`.
pub fn run_sparsity(config: &Config, alphas: &[f64], relative: bool) -> Result<SparsityReport> {
    let res = config.discretization;
    let spec = config.spec(1.0)?;
    let disc = spec.discretize(res.nx, res.ny(), res.steps)?;
    let data = ProblemData::new(&spec, &disc)?;
    let alpha_zero = alpha_zero_bound(&disc, &data)?;
    let absolute: Vec<f64> = alphas.iter().map(|a| if relative { a * alpha_zero } else { *a }).collect();
    if let Some(bad) = absolute.iter().find(|a| !(**a > 0.0)) {
        return Err(Error::Config(format!("alpha values must be positive, got {bad}")));
    }
    let options = config.options();
    let rows = in_pool(&absolute, |&alpha| {
        let sol = solve_at(config, res, alpha, &options)?;
        let deviation = sol
            .control
            .support()
            .iter()
            .map(|&k| (sol.disc.omega_norm(&sol.gradient.groups[k]) - alpha).abs() / alpha)
            .fold(0.0, f64::max);
        Ok(SparsityRow {
            alpha,
            alpha_over_alpha_zero: alpha / alpha_zero,
            support_size: sol.report.support.len(),
            active_nodes: sol.report.support.clone(),
            r_bound: sol.certificate.r_bound,
            r_align: sol.certificate.r_align,
            gap: sol.certificate.gap,
            active_level_deviation: deviation,
            converged: sol.report.converged,
        })
    })?;
    let mut order: Vec<&SparsityRow> = rows.iter().collect();
    order.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
    let monotone = order.windows(2).all(|w| w[1].support_size <= w[0].support_size);
    Ok(SparsityReport { alpha_zero, control_nodes: disc.grid.control_nodes().len(), rows, monotone })
}

/// `sparsity`: writes `sparsity.csv` and `sparsity.json`.
pub fn cmd_sparsity(config_path: &Path, alphas: &[f64], relative: bool, out: &Path) -> Result<SparsityReport> {
    let clock = Instant::now();
    let config = Config::load(config_path)?;
    std::fs::create_dir_all(out)?;
    let report = run_sparsity(&config, alphas, relative)?;
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                io::fmt(r.alpha),
                io::fmt(r.alpha_over_alpha_zero),
                r.support_size.to_string(),
                r.active_nodes.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(" "),
                io::fmt(r.r_bound),
                io::fmt(r.r_align),
                io::fmt(r.gap),
                io::fmt(r.active_level_deviation),
                r.converged.to_string(),
            ]
        })
        .collect();
    let header = [
        "alpha",
        "alpha_over_alpha_zero",
        "support_size",
        "active_nodes",
        "r_bound",
        "r_align",
        "gap",
        "active_level_deviation",
        "converged",
    ];
    io::write_table(&header, &rows, create(out, "sparsity.csv")?)?;
    write_json(out, "sparsity.json", &report)?;
    write_manifest(
        out,
        "sparsity",
        &[config_path],
        vec!["sparsity.csv".into(), "sparsity.json".into()],
        vec![("total".into(), clock.elapsed().as_secs_f64())],
    )?;
    Ok(report)
}

/// Machine-readable error report.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub kind: String,
    pub message: String,
    pub field: Option<String>,
    pub offset: Option<usize>,
}

impl From<&Error> for ErrorReport {
    fn from(e: &Error) -> Self {
        ErrorReport { kind: e.kind().to_string(), message: e.to_string(), field: e.field().map(str::to_string), offset: e.offset() }
    }
}

/// Writes `error.json` into `out` when possible.
pub fn write_error(out: Option<&PathBuf>, e: &Error) -> String {
    let text = serde_json::json!({ "error": ErrorReport::from(e) }).to_string();
    if let Some(dir) = out {
        if std::fs::create_dir_all(dir).is_ok() {
            let _ = std::fs::write(dir.join("error.json"), format!("{text}\n"));
        }
    }
    text
}
