//! Backward solver for the discrete adjoint and the control gradient.

use crate::control::DiscreteControl;
use crate::error::{Error, Result};
use crate::problem::{Discretization, TrackingData};
use crate::state::DiscreteState;

/// `φ_σ` by its nodal values `φ_0..φ_M`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteAdjoint {
    pub nodes: Vec<Vec<f64>>,
}

impl DiscreteAdjoint {
    pub fn zeros(disc: &Discretization) -> DiscreteAdjoint {
        DiscreteAdjoint { nodes: vec![vec![0.0; disc.n_interior()]; disc.steps() + 1] }
    }

    pub fn node(&self, m: usize) -> &[f64] {
        &self.nodes[m]
    }
}

/// Right-hand sides of the adjoint tests: `τ_m M u_m − D_m` against `χ_{I_m} ψ`
/// and `β (M u(T) − b_T)` against the terminal degree of freedom.
pub fn adjoint_rhs(disc: &Discretization, tracking: &TrackingData, u: &DiscreteState) -> (Vec<Vec<f64>>, Vec<f64>) {
    let grid = &disc.grid;
    let intervals = (1..=disc.steps())
        .map(|m| {
            let mut r = disc.mass.mul_vec(u.on_interval(m));
            let tau = grid.tau(m);
            r.iter_mut().for_each(|v| *v *= tau);
            if let Some(d) = &tracking.target_loads {
                r.iter_mut().zip(&d[m - 1]).for_each(|(v, dm)| *v -= dm);
            }
            r
        })
        .collect();
    let mut terminal = disc.mass.mul_vec(&u.terminal);
    if let Some(b) = &tracking.terminal_load {
        terminal.iter_mut().zip(b).for_each(|(v, bt)| *v -= bt);
    }
    terminal.iter_mut().for_each(|v| *v *= tracking.beta);
    (intervals, terminal)
}

/// Backward sweep:
///
/// ```text
/// M φ_M                   = β (M u(T) − b_T)
/// (M + τ_m/2 K) φ_{m-1}   = (M − τ_m/2 K) φ_m + τ_m M u_m − D_m,   m = M..1
/// ```
pub fn solve_adjoint(disc: &Discretization, tracking: &TrackingData, u: &DiscreteState) -> Result<DiscreteAdjoint> {
    if u.intervals.len() != disc.steps() || u.terminal.len() != disc.n_interior() {
        return Err(Error::Dimension("state does not match the discretization".into()));
    }
    let (intervals, terminal) = adjoint_rhs(disc, tracking, u);
    Ok(sweep_back(disc, intervals, terminal, 0))
}

/// Backward sweep stopping at node `lowest`; nodes below it are left zero.
pub(crate) fn sweep_back(disc: &Discretization, mut rhs: Vec<Vec<f64>>, mut terminal: Vec<f64>, lowest: usize) -> DiscreteAdjoint {
    let steps = disc.steps();
    let n = disc.n_interior();
    let mut nodes = vec![Vec::new(); steps + 1];
    if terminal.iter().any(|v| *v != 0.0) {
        disc.solve_mass(&mut terminal);
    }
    nodes[steps] = terminal;
    for m in (lowest.max(1)..=steps).rev() {
        let tau = disc.grid.tau(m);
        let mut b = std::mem::take(&mut rhs[m - 1]);
        let next = &nodes[m];
        if next.iter().any(|v| *v != 0.0) {
            let r = disc.apply_mass_plus(-0.5 * tau, next);
            b.iter_mut().zip(&r).for_each(|(a, c)| *a += c);
        }
        if b.iter().any(|v| *v != 0.0) {
            disc.solve_step(tau, &mut b);
        }
        nodes[m - 1] = b;
    }
    for v in nodes.iter_mut().take(lowest.max(1).min(steps + 1)) {
        if v.is_empty() {
            *v = vec![0.0; n];
        }
    }
    DiscreteAdjoint { nodes }
}

/// Coefficients with `A(w, φ) = Σ_m s_m · w_m + s_T · w(T)` for every `w ∈ Y_σ`.
pub fn adjoint_functional(disc: &Discretization, phi: &DiscreteAdjoint) -> (Vec<Vec<f64>>, Vec<f64>) {
    let intervals = (1..=disc.steps())
        .map(|m| {
            let tau = disc.grid.tau(m);
            let diff: Vec<f64> = phi.node(m - 1).iter().zip(phi.node(m)).map(|(a, b)| a - b).collect();
            let sum: Vec<f64> = phi.node(m - 1).iter().zip(phi.node(m)).map(|(a, b)| a + b).collect();
            let mut r = disc.mass.mul_vec(&diff);
            let k = disc.stiffness.mul_vec(&sum);
            r.iter_mut().zip(&k).for_each(|(a, b)| *a += 0.5 * tau * b);
            r
        })
        .collect();
    (intervals, disc.mass.mul_vec(phi.node(disc.steps())))
}

/// Largest adjoint residual over all trial basis functions, relative to the
/// largest right-hand side entry.
pub fn adjoint_residual(disc: &Discretization, tracking: &TrackingData, u: &DiscreteState, phi: &DiscreteAdjoint) -> f64 {
    let (li, lt) = adjoint_functional(disc, phi);
    let (ri, rt) = adjoint_rhs(disc, tracking, u);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (l, r) in li.iter().chain(std::iter::once(&lt)).zip(ri.iter().chain(std::iter::once(&rt))) {
        for (a, b) in l.iter().zip(r) {
            worst = worst.max((a - b).abs());
            scale = scale.max(a.abs()).max(b.abs());
        }
    }
    if scale == 0.0 {
        0.0
    } else {
        worst / scale
    }
}

/// `g_m = M_ω⁻¹ M_{ωΩ} φ_m` for every control node, so that
/// `⟨p_m δ_{t_m}, φ⟩ = (p_m, g_m)_{L²(ω)}`.
pub fn control_gradient(disc: &Discretization, phi: &DiscreteAdjoint) -> DiscreteControl {
    let nodes = disc.grid.control_nodes().to_vec();
    let groups = nodes
        .iter()
        .map(|&m| {
            let mut g = disc.coupling.mul_vec(phi.node(m));
            if g.iter().any(|v| *v != 0.0) {
                disc.solve_mass_omega(&mut g);
            }
            g
        })
        .collect();
    DiscreteControl { nodes, groups }
}

/// `⟨p, φ⟩ = Σ_m p_mᵀ M_{ωΩ} φ_m`, evaluated without the Riesz map.
pub fn pairing(disc: &Discretization, p: &DiscreteControl, phi: &DiscreteAdjoint) -> f64 {
    p.nodes
        .iter()
        .zip(&p.groups)
        .map(|(&m, g)| {
            let c = disc.coupling.mul_vec(phi.node(m));
            g.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>()
        })
        .sum()
}
