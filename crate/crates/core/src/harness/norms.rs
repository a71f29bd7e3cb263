//! Error norms for convergence studies.

use crate::adjoint::DiscreteAdjoint;
use crate::control::DiscreteControl;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fem::quadrature::gauss_on;
use crate::fem::{load_vector, triangle_area, NodeSet, Region, TriangleRule};
use crate::mesh::Mesh;
use crate::problem::Discretization;
use crate::state::DiscreteState;

/// Quadrature points of the whole domain with the interior basis functions
/// that are nonzero there.
struct SpatialRule {
    points: Vec<([f64; 2], f64, [(Option<usize>, f64); 3])>,
}

impl SpatialRule {
    fn new(mesh: &Mesh) -> SpatialRule {
        let rule = TriangleRule::Degree5.points();
        let mut points = Vec::with_capacity(mesh.triangles.len() * rule.len());
        for (e, tri) in mesh.triangles.iter().enumerate() {
            let c = mesh.corners(e);
            let area = triangle_area(&c);
            for p in &rule {
                let x = (0..3).map(|a| p.bary[a] * c[a][0]).sum();
                let y = (0..3).map(|a| p.bary[a] * c[a][1]).sum();
                let basis = [0, 1, 2].map(|a| (mesh.interior_index(tri[a]), p.bary[a]));
                points.push(([x, y], p.weight * area, basis));
            }
        }
        SpatialRule { points }
    }

    /// `‖Σ_k c_k ψ_k − g(·, t)‖²_{L²(Ω)}`
    fn error_sq(&self, coeffs: &[f64], g: &Expr, t: f64) -> Result<f64> {
        let mut sq = 0.0;
        for (p, w, basis) in &self.points {
            let uh: f64 = basis.iter().map(|(k, b)| k.map_or(0.0, |k| b * coeffs[k])).sum();
            let d = uh - g.evaluate(p[0], p[1], t)?;
            sq += w * d * d;
        }
        Ok(sq)
    }
}

/// Errors of a discrete state against an exact solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateErrors {
    /// `‖u_σ − u‖_{L²(I;L²(Ω))}`, five Gauss points per interval
    pub l2: f64,
    /// `‖u_σ(T) − u(T)‖_{L²(Ω)}`
    pub terminal: f64,
    /// `(Σ_m τ_m ‖u_m − u(t_{m-1/2})‖²)^{1/2}`
    pub midpoint: f64,
}

pub fn state_errors(disc: &Discretization, u: &DiscreteState, exact: &Expr) -> Result<StateErrors> {
    let rule = SpatialRule::new(&disc.mesh);
    let grid = &disc.grid;
    let (mut l2, mut mid) = (0.0, 0.0);
    for m in 1..=grid.steps() {
        let (a, b) = (grid.node(m - 1), grid.node(m));
        for (t, w) in gauss_on(a, b, 5) {
            l2 += w * rule.error_sq(u.on_interval(m), exact, t)?;
        }
        mid += (b - a) * rule.error_sq(u.on_interval(m), exact, 0.5 * (a + b))?;
    }
    let terminal = rule.error_sq(&u.terminal, exact, grid.t_end())?;
    Ok(StateErrors { l2: l2.sqrt(), terminal: terminal.sqrt(), midpoint: mid.sqrt() })
}

/// Errors of a discrete adjoint (piecewise linear in time) against an exact one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjointErrors {
    /// `max_m ‖φ_m − z(t_m)‖_{L²(Ω)}`
    pub nodal_max: f64,
    /// `‖φ_σ − z‖_{L²(I;L²(Ω))}`
    pub l2: f64,
}

pub fn adjoint_errors(disc: &Discretization, phi: &DiscreteAdjoint, exact: &Expr) -> Result<AdjointErrors> {
    let rule = SpatialRule::new(&disc.mesh);
    let grid = &disc.grid;
    let mut nodal_max: f64 = 0.0;
    for m in 0..=grid.steps() {
        nodal_max = nodal_max.max(rule.error_sq(phi.node(m), exact, grid.node(m))?.sqrt());
    }
    let mut l2 = 0.0;
    let mut buf = vec![0.0; disc.n_interior()];
    for m in 1..=grid.steps() {
        let (a, b) = (grid.node(m - 1), grid.node(m));
        for (t, w) in gauss_on(a, b, 5) {
            let s = (t - a) / (b - a);
            for (o, (p, q)) in buf.iter_mut().zip(phi.node(m - 1).iter().zip(phi.node(m))) {
                *o = (1.0 - s) * p + s * q;
            }
            l2 += w * rule.error_sq(&buf, exact, t)?;
        }
    }
    Ok(AdjointErrors { nodal_max, l2: l2.sqrt() })
}

/// Coarse interior field evaluated at the fine interior vertices; exact for nested meshes.
pub fn prolongate(coarse: &Mesh, values: &[f64], fine: &Mesh) -> Vec<f64> {
    fine.interior_nodes.iter().map(|&v| coarse.evaluate_interior_field(values, fine.vertices[v])).collect()
}

/// `(‖u_c − u_f‖²_{L²(I;L²)}, ‖u_c(T) − u_f(T)‖²)` for nested discretizations,
/// evaluated on the fine one.
pub fn cross_grid_state_error(
    coarse: &Discretization,
    uc: &DiscreteState,
    fine: &Discretization,
    uf: &DiscreteState,
) -> Result<(f64, f64)> {
    if !fine.grid.refines(&coarse.grid) {
        return Err(Error::TimeGrid("reference time grid does not refine the coarse one".into()));
    }
    let lifted: Vec<Vec<f64>> = uc.intervals.iter().map(|v| prolongate(&coarse.mesh, v, &fine.mesh)).collect();
    let mut sq = 0.0;
    for m in 1..=fine.steps() {
        let (a, b) = (fine.grid.node(m - 1), fine.grid.node(m));
        let k = coarse.grid.interval_of(0.5 * (a + b));
        let d: Vec<f64> = lifted[k - 1].iter().zip(uf.on_interval(m)).map(|(x, y)| x - y).collect();
        sq += (b - a) * fine.mass.bilinear(&d, &d);
    }
    let terminal = prolongate(&coarse.mesh, &uc.terminal, &fine.mesh);
    let d: Vec<f64> = terminal.iter().zip(&uf.terminal).map(|(x, y)| x - y).collect();
    Ok((sq, fine.mass.bilinear(&d, &d)))
}

/// `⟨q, v⟩ = Σ_m (q_m, v(·, t_m))_{L²(ω)}`
pub fn control_pairing(disc: &Discretization, q: &DiscreteControl, v: &Expr) -> Result<f64> {
    let mut total = 0.0;
    for (&m, g) in q.nodes.iter().zip(&q.groups) {
        if g.iter().all(|x| *x == 0.0) {
            continue;
        }
        let t = disc.grid.node(m);
        let load = load_vector(&disc.mesh, NodeSet::Omega, Region::Omega, TriangleRule::Degree5, |x, y| v.evaluate(x, y, t))?;
        total += g.iter().zip(&load).map(|(a, b)| a * b).sum::<f64>();
    }
    Ok(total)
}

/// Least-squares slope of `log y` against `log x`; `None` with fewer than
/// three usable points.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if logs.len() < 3 {
        return None;
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::mesh::Rect;
    use crate::problem::ProblemSpec;

    fn disc(nx: usize, steps: usize) -> Discretization {
        ProblemSpec {
            domain: Rect::unit(),
            omega: Rect::new(0.25, 0.75, 0.25, 0.75),
            t_end: 1.0,
            window: (0.25, 0.75),
            source: Expr::constant(0.0),
            target: Expr::constant(0.0),
            initial: Expr::constant(0.0),
            terminal_target: Expr::constant(0.0),
            alpha: 1.0,
            beta: 1.0,
        }
        .discretize(nx, nx, steps)
        .unwrap()
    }

    #[test]
    fn slopes() {
        let pts: Vec<(f64, f64)> = [1.0, 0.5, 0.25, 0.125].iter().map(|h: &f64| (*h, 3.0 * h * h)).collect();
        assert!((fit_slope(&pts).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(fit_slope(&pts[..2]), None);
        assert_eq!(fit_slope(&[(1.0, 0.0), (0.5, 1.0), (0.25, 2.0)]), None);
    }

    #[test]
    fn embedded_coarse_solution_has_zero_self_error() {
        let (c, f) = (disc(4, 8), disc(16, 32));
        let field = |n: usize, k: usize| (0..n).map(|i| ((i * 7 + k * 3) % 11) as f64 - 5.0).collect::<Vec<f64>>();
        let uc = DiscreteState {
            intervals: (0..8).map(|k| field(c.n_interior(), k)).collect(),
            terminal: field(c.n_interior(), 99),
        };
        // the same function represented on the fine discretization
        let uf = DiscreteState {
            intervals: (1..=32)
                .map(|m| {
                    let k = c.grid.interval_of(f.grid.node(m) - 0.5 / 32.0);
                    prolongate(&c.mesh, &uc.intervals[k - 1], &f.mesh)
                })
                .collect(),
            terminal: prolongate(&c.mesh, &uc.terminal, &f.mesh),
        };
        let (sq, t) = cross_grid_state_error(&c, &uc, &f, &uf).unwrap();
        assert_eq!((sq, t), (0.0, 0.0));
        let (self_sq, _) = cross_grid_state_error(&f, &uf, &f, &uf).unwrap();
        assert_eq!(self_sq, 0.0);
        // and the prolongation preserves the L² norm exactly
        let nc = c.mass.bilinear(&uc.terminal, &uc.terminal);
        let nf = f.mass.bilinear(&uf.terminal, &uf.terminal);
        assert!((nc - nf).abs() < 1e-12 * nc);
    }

    #[test]
    fn zero_state_error_is_exact_norm() {
        // u² = x²y² is within the degree of the spatial rule: ‖u‖² = 1/9
        let d = disc(8, 8);
        let u = DiscreteState::zeros(&d);
        let e = state_errors(&d, &u, &Expr::parse("x*y").unwrap()).unwrap();
        let norm = (1.0f64 / 9.0).sqrt();
        assert!((e.l2 - norm).abs() < 1e-12);
        assert!((e.terminal - norm).abs() < 1e-12);
        assert!((e.midpoint - norm).abs() < 1e-12);
    }

    #[test]
    fn pairing_of_constant_profile() {
        let d = disc(8, 8);
        let mut q = DiscreteControl::zeros(&d.grid, d.n_omega());
        q.groups[0] = vec![1.0; d.n_omega()];
        // ∫_ω 1 · 2 dx = 2 |ω|
        let p = control_pairing(&d, &q, &Expr::constant(2.0)).unwrap();
        assert!((p - 0.5).abs() < 1e-14);
    }
}
