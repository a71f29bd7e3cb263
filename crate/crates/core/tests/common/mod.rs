//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use impulse_control::adjoint::DiscreteAdjoint;
use impulse_control::control::DiscreteControl;
use impulse_control::expr::Expr;
use impulse_control::fem::quadrature::gauss_on;
use impulse_control::mesh::Rect;
use impulse_control::problem::{Discretization, ProblemData, ProblemSpec, StateData, TrackingData};
use impulse_control::state::DiscreteState;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DESK_TARGET: &str = "20*sin(pi*x)*sin(pi*y)*exp(-30*(t-0.6)^2)";
pub const DESK_TERMINAL: &str = "sin(pi*x)*sin(pi*y)";

pub fn desk_spec(alpha: f64) -> ProblemSpec {
    ProblemSpec {
        domain: Rect::unit(),
        omega: Rect::new(0.25, 0.75, 0.25, 0.75),
        t_end: 1.0,
        window: (0.25, 0.75),
        source: Expr::constant(0.0),
        target: Expr::parse(DESK_TARGET).unwrap(),
        initial: Expr::constant(0.0),
        terminal_target: Expr::parse(DESK_TERMINAL).unwrap(),
        alpha,
        beta: 1.0,
    }
}

pub fn desk(nx: usize, steps: usize, alpha: f64) -> (Discretization, ProblemData) {
    let spec = desk_spec(alpha);
    let disc = spec.discretize(nx, nx, steps).unwrap();
    let data = ProblemData::new(&spec, &disc).unwrap();
    (disc, data)
}

pub fn random_control(disc: &Discretization, rng: &mut ChaCha8Rng) -> DiscreteControl {
    let mut q = DiscreteControl::zeros(&disc.grid, disc.n_omega());
    for g in q.groups.iter_mut() {
        g.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
    }
    q
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `∫_{I_k} e_{t_m}` and `∫_{I_k} ∂_t e_{t_m}` by quadrature of the hat itself.
fn hat_moments(disc: &Discretization, m: usize, k: usize) -> (f64, f64) {
    let g = &disc.grid;
    let (a, b) = (g.node(k - 1), g.node(k));
    let integral = gauss_on(a, b, 2).map(|(t, w)| w * g.hat(m, t)).sum();
    (integral, g.hat(m, b) - g.hat(m, a))
}

/// Largest entry of `A(u, ψ_j e_{t_m}) − rhs` over all test functions, relative
/// to the largest term. `A` is taken in its primal form
/// `Σ_k ∫_{I_k} [−(u_k, ∂_t v) + (∇u_k, ∇v)] + (u(T), v(T))`.
pub fn primal_state_residual(disc: &Discretization, data: &StateData, q: &DiscreteControl, u: &DiscreteState) -> f64 {
    let steps = disc.steps();
    let n = disc.n_interior();
    let mu: Vec<Vec<f64>> = u.intervals.iter().map(|v| disc.mass.mul_vec(v)).collect();
    let ku: Vec<Vec<f64>> = u.intervals.iter().map(|v| disc.stiffness.mul_vec(v)).collect();
    let mt = disc.mass.mul_vec(&u.terminal);
    let (mut worst, mut scale) = (0.0f64, 0.0f64);
    for m in 0..=steps {
        let mut lhs = vec![0.0; n];
        for k in 1..=steps {
            let (e, de) = hat_moments(disc, m, k);
            if e == 0.0 && de == 0.0 {
                continue;
            }
            for j in 0..n {
                lhs[j] += -de * mu[k - 1][j] + e * ku[k - 1][j];
            }
        }
        let end = disc.grid.hat(m, disc.grid.t_end());
        let mut rhs = vec![0.0; n];
        if let Some(f) = &data.source_loads {
            rhs.iter_mut().zip(&f[m]).for_each(|(r, v)| *r += v);
        }
        if m == 0 {
            if let Some(u0) = &data.initial_load {
                rhs.iter_mut().zip(u0).for_each(|(r, v)| *r += v);
            }
        }
        if let Some(g) = q.group_at(m) {
            // (q_m, ψ_j)_{L²(ω)} from the coupling rows
            for (i, gi) in g.iter().enumerate() {
                for (c, v) in disc.coupling.row(i) {
                    rhs[c] += gi * v;
                }
            }
        }
        for j in 0..n {
            let l = lhs[j] + end * mt[j];
            worst = worst.max((l - rhs[j]).abs());
            scale = scale.max(l.abs()).max(rhs[j].abs()).max(mu.iter().map(|v| v[j].abs()).fold(0.0, f64::max));
        }
    }
    if scale == 0.0 {
        0.0
    } else {
        worst / scale
    }
}

/// Adjoint residual over the trial basis `χ_{I_k} ψ_j` and the terminal
/// degree of freedom, with `A` in primal form and `∫_{I_k} φ` by quadrature.
pub fn primal_adjoint_residual(disc: &Discretization, tracking: &TrackingData, u: &DiscreteState, phi: &DiscreteAdjoint) -> f64 {
    let steps = disc.steps();
    let n = disc.n_interior();
    let (mut worst, mut scale) = (0.0f64, 0.0f64);
    for k in 1..=steps {
        let (a, b) = (disc.grid.node(k - 1), disc.grid.node(k));
        let mut avg = vec![0.0; n];
        for (t, w) in gauss_on(a, b, 2) {
            let s = (t - a) / (b - a);
            for j in 0..n {
                avg[j] += w * ((1.0 - s) * phi.node(k - 1)[j] + s * phi.node(k)[j]);
            }
        }
        let dphi: Vec<f64> = phi.node(k).iter().zip(phi.node(k - 1)).map(|(x, y)| x - y).collect();
        let m_d = disc.mass.mul_vec(&dphi);
        let k_avg = disc.stiffness.mul_vec(&avg);
        let mut rhs = disc.mass.mul_vec(u.on_interval(k));
        rhs.iter_mut().for_each(|v| *v *= b - a);
        if let Some(d) = &tracking.target_loads {
            rhs.iter_mut().zip(&d[k - 1]).for_each(|(r, v)| *r -= v);
        }
        for j in 0..n {
            let l = -m_d[j] + k_avg[j];
            worst = worst.max((l - rhs[j]).abs());
            scale = scale.max(l.abs()).max(rhs[j].abs());
        }
    }
    let lt = disc.mass.mul_vec(phi.node(steps));
    let mut rt = disc.mass.mul_vec(&u.terminal);
    if let Some(bt) = &tracking.terminal_load {
        rt.iter_mut().zip(bt).for_each(|(r, v)| *r -= v);
    }
    for j in 0..n {
        let r = tracking.beta * rt[j];
        worst = worst.max((lt[j] - r).abs());
        scale = scale.max(lt[j].abs()).max(r.abs());
    }
    if scale == 0.0 {
        0.0
    } else {
        worst / scale
    }
}

/// `(u − u_d, w)_{L²(I;L²)} + β (u(T) − u_T, w(T))` with the tracking loads.
pub fn tracking_pairing(disc: &Discretization, tracking: &TrackingData, u: &DiscreteState, w: &DiscreteState) -> f64 {
    let mut s = 0.0;
    for m in 1..=disc.steps() {
        s += disc.grid.tau(m) * disc.mass.bilinear(u.on_interval(m), w.on_interval(m));
        if let Some(d) = &tracking.target_loads {
            s -= dot(&d[m - 1], w.on_interval(m));
        }
    }
    let mut t = disc.mass.bilinear(&u.terminal, &w.terminal);
    if let Some(b) = &tracking.terminal_load {
        t -= dot(b, &w.terminal);
    }
    s + tracking.beta * t
}

/// Dense Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            if f != 0.0 {
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Brute-force space-time solve: assembles the full Petrov–Galerkin system
/// (trial: interval values and `u(T)`, test: `ψ_j e_{t_m}`) densely.
pub fn dense_state(disc: &Discretization, data: &StateData, q: Option<&DiscreteControl>) -> DiscreteState {
    let steps = disc.steps();
    let n = disc.n_interior();
    let dim = (steps + 1) * n;
    let mass = disc.mass.to_dense();
    let stiff = disc.stiffness.to_dense();
    let mut a = vec![vec![0.0; dim]; dim];
    let mut b = vec![0.0; dim];
    for m in 0..=steps {
        for j in 0..n {
            let row = m * n + j;
            for k in 1..=steps {
                let (e, de) = hat_moments(disc, m, k);
                for i in 0..n {
                    a[row][(k - 1) * n + i] += -de * mass[j][i] + e * stiff[j][i];
                }
            }
            let end = disc.grid.hat(m, disc.grid.t_end());
            for i in 0..n {
                a[row][steps * n + i] += end * mass[j][i];
            }
            if let Some(f) = &data.source_loads {
                b[row] += f[m][j];
            }
            if m == 0 {
                if let Some(u0) = &data.initial_load {
                    b[row] += u0[j];
                }
            }
        }
        if let Some(g) = q.and_then(|q| q.group_at(m)) {
            let c = disc.coupling.mul_transpose_vec(g);
            for j in 0..n {
                b[m * n + j] += c[j];
            }
        }
    }
    let x = dense_solve(a, b);
    DiscreteState {
        intervals: (0..steps).map(|k| x[k * n..(k + 1) * n].to_vec()).collect(),
        terminal: x[steps * n..].to_vec(),
    }
}
