//! Accelerated proximal gradient for the group-sparse discrete control
//! problem, with optimality certificates.
//!
//! The smooth part `j_1(q) = ½‖u(q) − u_d‖² + β/2 ‖u(q)(T) − u_T‖²` is
//! quadratic in `q`: `∇j_1(q) = g_0 + H q` with `g_0` the gradient at zero and
//! `H = S*S` the homogeneous state-adjoint map. Iterates carry `H q` along so
//! each step needs a single application of `H`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::adjoint::{adjoint_rhs, control_gradient, solve_adjoint, sweep_back, DiscreteAdjoint};
use crate::control::DiscreteControl;
use crate::error::{Error, Result};
use crate::problem::{Discretization, ProblemData, StateData, TrackingData};
use crate::state::{check_control, solve_state, DiscreteState};

/// `Σ_m ‖q_m‖_{L²(ω)}`
pub fn m_norm(disc: &Discretization, q: &DiscreteControl) -> f64 {
    q.measure_norm(disc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Objective {
    pub total: f64,
    pub smooth: f64,
    pub sparse: f64,
}

/// `½ Σ_m ∫_{I_m} ‖u_m − u_d‖² + β/2 ‖u(T) − u_T‖²`, exact in the state and
/// using the quadrature of the tracking loads for the `u_d` terms.
pub fn tracking_cost(disc: &Discretization, tracking: &TrackingData, u: &DiscreteState) -> f64 {
    let mut j = tracking.target_sq;
    for m in 1..=disc.steps() {
        let um = u.on_interval(m);
        j += disc.grid.tau(m) * disc.mass.bilinear(um, um);
        if let Some(d) = &tracking.target_loads {
            j -= 2.0 * um.iter().zip(&d[m - 1]).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    let mut terminal = disc.mass.bilinear(&u.terminal, &u.terminal) + tracking.terminal_sq;
    if let Some(b) = &tracking.terminal_load {
        terminal -= 2.0 * u.terminal.iter().zip(b).map(|(a, c)| a * c).sum::<f64>();
    }
    0.5 * j + 0.5 * tracking.beta * terminal
}

/// `(J, j_1, α‖q‖)` at `q`, with the state solved from scratch.
pub fn objective(disc: &Discretization, data: &ProblemData, q: &DiscreteControl) -> Result<Objective> {
    let u = solve_state(disc, &data.state, Some(q))?;
    let smooth = tracking_cost(disc, &data.tracking, &u);
    let sparse = data.alpha * m_norm(disc, q);
    Ok(Objective { total: smooth + sparse, smooth, sparse })
}

/// State, adjoint and control gradient at `q`.
pub fn gradient(
    disc: &Discretization,
    data: &ProblemData,
    q: &DiscreteControl,
) -> Result<(DiscreteState, DiscreteAdjoint, DiscreteControl)> {
    let u = solve_state(disc, &data.state, Some(q))?;
    let phi = solve_adjoint(disc, &data.tracking, &u)?;
    let g = control_gradient(disc, &phi);
    Ok((u, phi, g))
}

/// `(1 − θ/‖v‖)₊ v` in the `L²(ω)` norm; zero when `‖v‖ ≤ θ`.
pub fn prox_group(disc: &Discretization, v: &[f64], theta: f64) -> Vec<f64> {
    let norm = disc.omega_norm(v);
    if norm <= theta {
        return vec![0.0; v.len()];
    }
    let s = 1.0 - theta / norm;
    v.iter().map(|x| s * x).collect()
}

/// `H p = S*S p`: homogeneous state with control `p`, homogeneous adjoint, gradient.
pub fn apply_hessian(disc: &Discretization, beta: f64, p: &DiscreteControl) -> Result<DiscreteControl> {
    check_control(disc, p)?;
    let u = solve_state(disc, &StateData::default(), Some(p))?;
    let tracking = TrackingData { beta, ..Default::default() };
    let (intervals, terminal) = adjoint_rhs(disc, &tracking, &u);
    let lowest = p.nodes.first().copied().unwrap_or(0);
    let phi = sweep_back(disc, intervals, terminal, lowest);
    Ok(control_gradient(disc, &phi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lipschitz {
    pub value: f64,
    pub rayleigh: f64,
    pub iterations: usize,
    /// set when `H` vanished and the floor was used
    pub floored: bool,
}

const LIPSCHITZ_FLOOR: f64 = f64::EPSILON;

/// Power iteration on `H` in the `L²(ω)` inner product, 50 steps or until the
/// Rayleigh quotient settles to 1e-6; returns 1.01 times the quotient.
pub fn estimate_lipschitz(disc: &Discretization, beta: f64) -> Result<Lipschitz> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x = DiscreteControl::zeros(&disc.grid, disc.n_omega());
    for g in x.groups.iter_mut() {
        g.iter_mut().for_each(|v| *v = rng.gen_range(0.5..1.5));
    }
    let norm = DiscreteControl::inner(disc, &x, &x).sqrt();
    if norm == 0.0 {
        return Ok(Lipschitz { value: LIPSCHITZ_FLOOR, rayleigh: 0.0, iterations: 0, floored: true });
    }
    x = x.scaled(1.0 / norm);
    let mut lambda = 0.0;
    let mut iterations = 0;
    for k in 1..=50 {
        iterations = k;
        let hx = apply_hessian(disc, beta, &x)?;
        let next = DiscreteControl::inner(disc, &x, &hx);
        let hn = DiscreteControl::inner(disc, &hx, &hx).sqrt();
        let settled = k > 1 && (next - lambda).abs() <= 1e-6 * next.abs();
        lambda = next;
        if hn == 0.0 || !hn.is_finite() {
            break;
        }
        x = hx.scaled(1.0 / hn);
        if settled {
            break;
        }
    }
    if !(lambda > LIPSCHITZ_FLOOR / 1.01) {
        return Ok(Lipschitz { value: LIPSCHITZ_FLOOR, rayleigh: lambda.max(0.0), iterations, floored: true });
    }
    Ok(Lipschitz { value: 1.01 * lambda, rayleigh: lambda, iterations, floored: false })
}

#[derive(Debug, Clone)]
pub struct FistaOptions {
    pub max_iter: usize,
    /// `None` means `1e-6 · α`
    pub tol_bound: Option<f64>,
    pub tol_align: f64,
    pub restart: bool,
    /// `false` gives plain proximal gradient
    pub accelerate: bool,
    pub initial: Option<DiscreteControl>,
    /// skips the power iteration when given
    pub lipschitz: Option<f64>,
    /// keep the objective of every iterate
    pub record_history: bool,
}

impl Default for FistaOptions {
    fn default() -> Self {
        FistaOptions {
            max_iter: 5000,
            tol_bound: None,
            tol_align: 1e-6,
            restart: true,
            accelerate: true,
            initial: None,
            lipschitz: None,
            record_history: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerReport {
    pub iterations: usize,
    pub objective: f64,
    pub objective_smooth: f64,
    pub objective_sparse: f64,
    pub r_bound: f64,
    pub r_align: f64,
    pub gap: f64,
    /// active time node indices
    pub support: Vec<usize>,
    pub lipschitz: Option<f64>,
    pub lipschitz_floored: bool,
    pub converged: bool,
    pub zero_by_threshold: bool,
    pub alpha: f64,
    pub alpha_zero: f64,
    pub restarts: usize,
    /// objective at each restart event
    pub restart_objectives: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub history: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certificate {
    pub r_bound: f64,
    pub r_align: f64,
    pub gap: f64,
}

/// Residuals of the discrete optimality system for `q` with gradient `g`.
pub fn certificate_from_gradient(disc: &Discretization, alpha: f64, q: &DiscreteControl, g: &DiscreteControl) -> Certificate {
    let mut r_bound: f64 = 0.0;
    let mut r_align: f64 = 0.0;
    let mut gap = alpha * m_norm(disc, q);
    for (qm, gm) in q.groups.iter().zip(&g.groups) {
        r_bound = r_bound.max(disc.omega_norm(gm) - alpha);
        gap += disc.omega_inner(qm, gm);
        let qn = disc.omega_norm(qm);
        if qn > 0.0 {
            let d: Vec<f64> = qm.iter().zip(gm).map(|(a, b)| alpha * a + qn * b).collect();
            r_align = r_align.max(disc.omega_norm(&d) / (alpha * qn));
        }
    }
    Certificate { r_bound: r_bound.max(0.0), r_align, gap: gap.abs() }
}

/// Recomputes state, adjoint and gradient at `q` and returns
/// `(r_bound, r_align, gap)`.
pub fn optimality_certificate(disc: &Discretization, data: &ProblemData, q: &DiscreteControl) -> Result<Certificate> {
    let (_, _, g) = gradient(disc, data, q)?;
    Ok(certificate_from_gradient(disc, data.alpha, q, &g))
}

/// `max_m ‖g_m(0)‖_{L²(ω)}`: zero is optimal exactly when `α` is at least this.
pub fn alpha_zero_bound(disc: &Discretization, data: &ProblemData) -> Result<f64> {
    let zero = DiscreteControl::zeros(&disc.grid, disc.n_omega());
    let (_, _, g) = gradient(disc, data, &zero)?;
    Ok(max_group_norm(disc, &g))
}

fn max_group_norm(disc: &Discretization, g: &DiscreteControl) -> f64 {
    g.groups.iter().map(|v| disc.omega_norm(v)).fold(0.0, f64::max)
}

fn prox_step(disc: &Discretization, y: &DiscreteControl, grad: &DiscreteControl, step: f64, theta: f64) -> DiscreteControl {
    let groups = y
        .groups
        .iter()
        .zip(&grad.groups)
        .map(|(a, b)| {
            let v: Vec<f64> = a.iter().zip(b).map(|(x, g)| x - step * g).collect();
            prox_group(disc, &v, theta)
        })
        .collect();
    DiscreteControl { nodes: y.nodes.clone(), groups }
}

/// Minimizes `j_1(q) + α Σ_m ‖q_m‖` over the discrete controls.
pub fn solve_fista(
    disc: &Discretization,
    data: &ProblemData,
    options: &FistaOptions,
) -> Result<(DiscreteControl, OptimizerReport)> {
    let alpha = data.alpha;
    if !(alpha > 0.0) {
        return Err(Error::Config(format!("alpha must be positive, got {alpha}")));
    }
    let beta = data.tracking.beta;
    let tol_bound = options.tol_bound.unwrap_or(1e-6 * alpha);
    let zero = DiscreteControl::zeros(&disc.grid, disc.n_omega());
    let (u0, _, g0) = gradient(disc, data, &zero)?;
    let j0 = tracking_cost(disc, &data.tracking, &u0);
    let alpha_zero = max_group_norm(disc, &g0);
    let zero_by_threshold = alpha >= alpha_zero;

    let smooth_at = |x: &DiscreteControl, hx: &DiscreteControl| {
        j0 + DiscreteControl::inner(disc, &g0, x) + 0.5 * DiscreteControl::inner(disc, x, hx)
    };
    let finish = |x: DiscreteControl,
                  hx: &DiscreteControl,
                  iterations,
                  lipschitz: Option<Lipschitz>,
                  converged,
                  restarts,
                  restart_objectives,
                  history| {
        let grad = g0.add_scaled(1.0, hx);
        let cert = certificate_from_gradient(disc, alpha, &x, &grad);
        let smooth = smooth_at(&x, hx);
        let sparse = alpha * m_norm(disc, &x);
        let report = OptimizerReport {
            iterations,
            objective: smooth + sparse,
            objective_smooth: smooth,
            objective_sparse: sparse,
            r_bound: cert.r_bound,
            r_align: cert.r_align,
            gap: cert.gap,
            support: x.support().into_iter().map(|k| x.nodes[k]).collect(),
            lipschitz: lipschitz.map(|l| l.value),
            lipschitz_floored: lipschitz.is_some_and(|l| l.floored),
            converged,
            zero_by_threshold,
            alpha,
            alpha_zero,
            restarts,
            restart_objectives,
            history,
        };
        (x, report)
    };

    let initial = match &options.initial {
        Some(q) => {
            check_control(disc, q)?;
            Some(q.clone())
        }
        None => None,
    };
    if zero_by_threshold && initial.as_ref().map_or(true, |q| q.is_zero()) {
        // the first prox step from zero returns zero
        let history = options.record_history.then(|| vec![j0]);
        return Ok(finish(zero.clone(), &zero, 1, None, true, 0, Vec::new(), history));
    }

    let lipschitz = match options.lipschitz {
        Some(l) if l > 0.0 => Lipschitz { value: l, rayleigh: l / 1.01, iterations: 0, floored: false },
        Some(l) => return Err(Error::Config(format!("Lipschitz constant must be positive, got {l}"))),
        None => estimate_lipschitz(disc, beta)?,
    };
    let step = 1.0 / lipschitz.value;
    let theta = alpha * step;

    let mut x = initial.unwrap_or_else(|| zero.clone());
    let mut hx = if x.is_zero() { zero.clone() } else { apply_hessian(disc, beta, &x)? };
    let mut y = x.clone();
    let mut hy = hx.clone();
    let mut t = 1.0f64;
    let mut best: Option<(f64, DiscreteControl, DiscreteControl)> = None;
    let mut restarts = 0;
    let mut restart_objectives = Vec::new();
    let mut history = options.record_history.then(Vec::new);

    for k in 1..=options.max_iter {
        let grad_y = g0.add_scaled(1.0, &hy);
        let x_new = prox_step(disc, &y, &grad_y, step, theta);
        let hx_new = apply_hessian(disc, beta, &x_new)?;

        let grad_x = g0.add_scaled(1.0, &hx_new);
        let cert = certificate_from_gradient(disc, alpha, &x_new, &grad_x);
        let value = smooth_at(&x_new, &hx_new) + alpha * m_norm(disc, &x_new);
        if let Some(h) = history.as_mut() {
            h.push(value);
        }
        if best.as_ref().map_or(true, |b| value < b.0) {
            best = Some((value, x_new.clone(), hx_new.clone()));
        }
        if cert.r_bound <= tol_bound && cert.r_align <= options.tol_align {
            return Ok(finish(x_new, &hx_new, k, Some(lipschitz), true, restarts, restart_objectives, history));
        }

        if options.accelerate {
            let dy = y.add_scaled(-1.0, &x_new);
            let dx = x_new.add_scaled(-1.0, &x);
            if options.restart && DiscreteControl::inner(disc, &dy, &dx) > 0.0 {
                restarts += 1;
                restart_objectives.push(value);
                t = 1.0;
                y = x_new.clone();
                hy = hx_new.clone();
            } else {
                let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
                let w = (t - 1.0) / t_next;
                y = x_new.add_scaled(w, &dx);
                hy = hx_new.add_scaled(w, &hx_new.add_scaled(-1.0, &hx));
                t = t_next;
            }
        } else {
            y = x_new.clone();
            hy = hx_new.clone();
        }
        x = x_new;
        hx = hx_new;
    }
    let (x, hx) = match best {
        Some((_, bx, bhx)) => (bx, bhx),
        None => (x, hx),
    };
    Ok(finish(x, &hx, options.max_iter, Some(lipschitz), false, restarts, restart_objectives, history))
}
