//! Forward solver for the Petrov–Galerkin state equation: trial functions
//! piecewise constant in time plus a terminal value, tests continuous and
//! piecewise linear in time. Testing with each temporal hat yields a
//! Crank–Nicolson-type sweep.

use crate::control::DiscreteControl;
use crate::error::{Error, Result};
use crate::problem::{Discretization, StateData};

/// `u_σ`: the constant value on each interval `I_1..I_M` plus `u(T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteState {
    pub intervals: Vec<Vec<f64>>,
    pub terminal: Vec<f64>,
}

impl DiscreteState {
    pub fn zeros(disc: &Discretization) -> DiscreteState {
        let n = disc.n_interior();
        DiscreteState { intervals: vec![vec![0.0; n]; disc.steps()], terminal: vec![0.0; n] }
    }

    /// Value on `I_m`, `m = 1..=M`.
    pub fn on_interval(&self, m: usize) -> &[f64] {
        &self.intervals[m - 1]
    }

    /// `u_{m}` with `u_{M+1} = u(T)`.
    fn value(&self, m: usize) -> &[f64] {
        if m <= self.intervals.len() {
            &self.intervals[m - 1]
        } else {
            &self.terminal
        }
    }

    /// Mass norms `‖u_m‖_{L²}`, `m = 1..=M`.
    pub fn energy_profile(&self, disc: &Discretization) -> Vec<f64> {
        self.intervals.iter().map(|u| disc.mass.bilinear(u, u).max(0.0).sqrt()).collect()
    }

    /// `‖u_σ‖_{L²(I;L²(Ω))}`
    pub fn l2_norm(&self, disc: &Discretization) -> f64 {
        (1..=disc.steps())
            .map(|m| disc.grid.tau(m) * disc.mass.bilinear(self.on_interval(m), self.on_interval(m)))
            .sum::<f64>()
            .max(0.0)
            .sqrt()
    }

    /// `‖∇u_σ‖_{L²(I;L²(Ω))}`
    pub fn gradient_norm(&self, disc: &Discretization) -> f64 {
        (1..=disc.steps())
            .map(|m| disc.grid.tau(m) * disc.stiffness.bilinear(self.on_interval(m), self.on_interval(m)))
            .sum::<f64>()
            .max(0.0)
            .sqrt()
    }

    /// `‖u_σ(T)‖_{L²(Ω)}`
    pub fn terminal_norm(&self, disc: &Discretization) -> f64 {
        disc.mass.bilinear(&self.terminal, &self.terminal).max(0.0).sqrt()
    }

    pub fn add_scaled(&self, s: f64, other: &DiscreteState) -> DiscreteState {
        let comb = |a: &Vec<f64>, b: &Vec<f64>| a.iter().zip(b).map(|(x, y)| x + s * y).collect::<Vec<f64>>();
        DiscreteState {
            intervals: self.intervals.iter().zip(&other.intervals).map(|(a, b)| comb(a, b)).collect(),
            terminal: comb(&self.terminal, &other.terminal),
        }
    }
}

/// `C_m = M_{ωΩ}^T q_m`, the load of `q_m δ_{t_m}` against `ψ_k e_{t_m}`.
pub fn control_load(disc: &Discretization, group: &[f64]) -> Vec<f64> {
    disc.coupling.mul_transpose_vec(group)
}

fn add(into: &mut [f64], v: &[f64]) {
    into.iter_mut().zip(v).for_each(|(a, b)| *a += b);
}

fn is_zero(v: &[f64]) -> bool {
    v.iter().all(|x| *x == 0.0)
}

/// Right-hand side `b_m` of the test with `ψ e_{t_m}`, `m = 0..=M`.
pub fn state_rhs(disc: &Discretization, data: &StateData, control: Option<&DiscreteControl>) -> Vec<Vec<f64>> {
    let n = disc.n_interior();
    let mut rhs = match &data.source_loads {
        Some(l) => l.clone(),
        None => vec![vec![0.0; n]; disc.steps() + 1],
    };
    if let Some(u0) = &data.initial_load {
        add(&mut rhs[0], u0);
    }
    if let Some(q) = control {
        for (&m, g) in q.nodes.iter().zip(&q.groups) {
            if !is_zero(g) {
                add(&mut rhs[m], &control_load(disc, g));
            }
        }
    }
    rhs
}

/// Sequential sweep:
///
/// ```text
/// (M + τ_1/2 K) u_1       = (u_0, ψ) + F_0
/// (M + τ_{m+1}/2 K) u_{m+1} = (M - τ_m/2 K) u_m + F_m + C_m,   m = 1..M-1
/// M u(T)                  = (M - τ_M/2 K) u_M + F_M
/// ```
pub fn solve_state(disc: &Discretization, data: &StateData, control: Option<&DiscreteControl>) -> Result<DiscreteState> {
    if let Some(q) = control {
        check_control(disc, q)?;
    }
    let rhs = state_rhs(disc, data, control);
    Ok(sweep(disc, rhs))
}

pub(crate) fn check_control(disc: &Discretization, q: &DiscreteControl) -> Result<()> {
    if q.nodes != disc.grid.control_nodes() {
        return Err(Error::Dimension("control groups do not match the grid's control nodes".into()));
    }
    if q.groups.iter().any(|g| g.len() != disc.n_omega()) {
        return Err(Error::Dimension(format!("control groups must have {} entries", disc.n_omega())));
    }
    Ok(())
}

fn sweep(disc: &Discretization, mut rhs: Vec<Vec<f64>>) -> DiscreteState {
    let grid = &disc.grid;
    let steps = grid.steps();
    let n = disc.n_interior();
    let mut intervals: Vec<Vec<f64>> = Vec::with_capacity(steps);
    let mut current = std::mem::take(&mut rhs[0]);
    if !is_zero(&current) {
        disc.solve_step(grid.tau(1), &mut current);
    }
    intervals.push(current);
    for m in 1..steps {
        let prev = &intervals[m - 1];
        let mut b = std::mem::take(&mut rhs[m]);
        if !is_zero(prev) {
            add(&mut b, &disc.apply_mass_plus(-0.5 * grid.tau(m), prev));
        }
        if !is_zero(&b) {
            disc.solve_step(grid.tau(m + 1), &mut b);
        }
        intervals.push(b);
    }
    let last = &intervals[steps - 1];
    let mut terminal = std::mem::take(&mut rhs[steps]);
    if !is_zero(last) {
        add(&mut terminal, &disc.apply_mass_plus(-0.5 * grid.tau(steps), last));
    }
    if !is_zero(&terminal) {
        disc.solve_mass(&mut terminal);
    }
    debug_assert_eq!(terminal.len(), n);
    DiscreteState { intervals, terminal }
}

/// Coefficients `r_m` with `A(u, v) = Σ_{m=0}^{M} r_m · v(t_m)` for every
/// `v ∈ P_σ`, from the dual representation
/// `A(u,v) = Σ_m ([u]_m, v(t_m)) + (u_1, v(0)) + ∫ (∇u, ∇v)`.
pub fn state_functional(disc: &Discretization, u: &DiscreteState) -> Vec<Vec<f64>> {
    let grid = &disc.grid;
    let steps = grid.steps();
    let mut out = Vec::with_capacity(steps + 1);
    for m in 0..=steps {
        // jump at t_m, or the initial trace (u_1, v(0)) at m = 0
        let jump: Vec<f64> = if m == 0 {
            u.value(1).to_vec()
        } else {
            u.value(m + 1).iter().zip(u.value(m)).map(|(a, b)| a - b).collect()
        };
        let mut r = disc.mass.mul_vec(&jump);
        // ∫_{I_k} e_{t_m} = τ_k / 2 for k = m, m + 1
        if m >= 1 {
            let ku = disc.stiffness.mul_vec(u.on_interval(m));
            r.iter_mut().zip(&ku).for_each(|(a, b)| *a += 0.5 * grid.tau(m) * b);
        }
        if m < steps {
            let ku = disc.stiffness.mul_vec(u.on_interval(m + 1));
            r.iter_mut().zip(&ku).for_each(|(a, b)| *a += 0.5 * grid.tau(m + 1) * b);
        }
        out.push(r);
    }
    out
}

/// `A(u, v)` for `u ∈ Y_σ` and `v ∈ P_σ` given by its nodal values `v(t_0..t_M)`.
pub fn bilinear_form(disc: &Discretization, u: &DiscreteState, v: &[Vec<f64>]) -> Result<f64> {
    if v.len() != disc.steps() + 1 || u.intervals.len() != disc.steps() {
        return Err(Error::Dimension("state and test function live on different grids".into()));
    }
    Ok(state_functional(disc, u)
        .iter()
        .zip(v)
        .map(|(r, vm)| r.iter().zip(vm).map(|(a, b)| a * b).sum::<f64>())
        .sum())
}

/// Largest Petrov–Galerkin residual over all test functions `ψ_j e_{t_m}`,
/// relative to the largest right-hand side entry.
pub fn state_residual(disc: &Discretization, data: &StateData, control: Option<&DiscreteControl>, u: &DiscreteState) -> f64 {
    let lhs = state_functional(disc, u);
    let rhs = state_rhs(disc, data, control);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (l, r) in lhs.iter().zip(&rhs) {
        for (a, b) in l.iter().zip(r) {
            worst = worst.max((a - b).abs());
            scale = scale.max(b.abs()).max(a.abs());
        }
    }
    if scale == 0.0 {
        0.0
    } else {
        worst / scale
    }
}
