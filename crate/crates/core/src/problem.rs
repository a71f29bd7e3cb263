//! Problem data and the assembled space-time discretization.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fem::quadrature::gauss_on;
use crate::fem::{
    assemble_mass, assemble_omega_coupling, assemble_stiffness, integrate, load_vector, BandedCholesky, CsrMatrix,
    NodeSet, Region, TriangleRule,
};
use crate::mesh::{Mesh, Rect};
use crate::time_grid::TimeGrid;

/// Continuous problem: data expressions, horizon, window and weights.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub domain: Rect,
    pub omega: Rect,
    pub t_end: f64,
    pub window: (f64, f64),
    /// Source `f(x, y, t)`.
    pub source: Expr,
    /// Tracking target `u_d(x, y, t)`.
    pub target: Expr,
    /// Initial state `u_0(x, y)`.
    pub initial: Expr,
    /// Terminal target `u_T(x, y)`.
    pub terminal_target: Expr,
    pub alpha: f64,
    pub beta: f64,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::Config(format!("beta must be nonnegative, got {}", self.beta)));
        }
        let (t1, t2) = self.window;
        if !(self.t_end > 0.0 && t1 > 0.0 && t2 < self.t_end && t1 <= t2) {
            return Err(Error::Config(format!(
                "control window ({t1}, {t2}) must lie strictly inside (0, {})",
                self.t_end
            )));
        }
        if !(self.domain.contains([self.omega.x0, self.omega.y0], 1e-12)
            && self.domain.contains([self.omega.x1, self.omega.y1], 1e-12))
        {
            return Err(Error::Config("control subdomain must lie inside the domain".into()));
        }
        Ok(())
    }

    /// Mesh with `nx * ny` cells and the time grid with `steps` intervals.
    pub fn discretize(&self, nx: usize, ny: usize, steps: usize) -> Result<Discretization> {
        self.validate()?;
        let mesh = Mesh::structured(self.domain, nx, ny)?.mark_subdomain(self.omega)?;
        let grid = TimeGrid::with_window(self.t_end, steps, self.window)?;
        Discretization::new(mesh, grid)
    }
}

/// Mesh, time grid and the assembled operators shared by every sweep.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: Mesh,
    pub grid: TimeGrid,
    /// `∫_Ω ψ_i ψ_j` on interior nodes.
    pub mass: CsrMatrix,
    /// `∫_Ω ∇ψ_i·∇ψ_j` on interior nodes.
    pub stiffness: CsrMatrix,
    /// `∫_ω ψ_i ψ_j` on subdomain nodes.
    pub mass_omega: CsrMatrix,
    /// `∫_ω ψ_i ψ_k`, subdomain rows by interior columns.
    pub coupling: CsrMatrix,
    mass_factor: BandedCholesky,
    mass_omega_factor: BandedCholesky,
    /// factors of `M + τ/2 K`, keyed by the bits of `τ`
    step_factors: BTreeMap<u64, BandedCholesky>,
}

impl Discretization {
    pub fn new(mesh: Mesh, grid: TimeGrid) -> Result<Discretization> {
        if !mesh.has_omega() {
            return Err(Error::SubdomainUnmarked);
        }
        if mesh.n_interior() == 0 {
            return Err(Error::Mesh("mesh has no interior nodes".into()));
        }
        let mass = assemble_mass(&mesh, NodeSet::Interior, Region::Domain)?;
        let stiffness = assemble_stiffness(&mesh, NodeSet::Interior)?;
        let mass_omega = assemble_mass(&mesh, NodeSet::Omega, Region::Omega)?;
        let coupling = assemble_omega_coupling(&mesh)?;
        let mass_factor = BandedCholesky::factor(&mass)?;
        let mass_omega_factor = BandedCholesky::factor(&mass_omega)?;
        let mut step_factors = BTreeMap::new();
        for m in 1..=grid.steps() {
            let tau = grid.tau(m);
            if let std::collections::btree_map::Entry::Vacant(e) = step_factors.entry(tau.to_bits()) {
                let a = CsrMatrix::linear_combination(1.0, &mass, 0.5 * tau, &stiffness)?;
                e.insert(BandedCholesky::factor(&a)?);
            }
        }
        Ok(Discretization {
            mesh,
            grid,
            mass,
            stiffness,
            mass_omega,
            coupling,
            mass_factor,
            mass_omega_factor,
            step_factors,
        })
    }

    pub fn n_interior(&self) -> usize {
        self.mesh.n_interior()
    }

    pub fn n_omega(&self) -> usize {
        self.mesh.n_omega()
    }

    pub fn steps(&self) -> usize {
        self.grid.steps()
    }

    /// Solves `(M + τ/2 K) x = b` in place.
    pub fn solve_step(&self, tau: f64, b: &mut [f64]) {
        self.step_factors
            .get(&tau.to_bits())
            .expect("step factor for every grid step")
            .solve_in_place(b)
    }

    pub fn solve_mass(&self, b: &mut [f64]) {
        self.mass_factor.solve_in_place(b)
    }

    pub fn solve_mass_omega(&self, b: &mut [f64]) {
        self.mass_omega_factor.solve_in_place(b)
    }

    /// `(M + s K) u`
    pub fn apply_mass_plus(&self, s: f64, u: &[f64]) -> Vec<f64> {
        let mut out = self.mass.mul_vec(u);
        if s != 0.0 {
            let ku = self.stiffness.mul_vec(u);
            out.iter_mut().zip(&ku).for_each(|(o, k)| *o += s * k);
        }
        out
    }

    /// `‖v‖_{L²(ω)}` for coefficients on subdomain nodes.
    pub fn omega_norm(&self, v: &[f64]) -> f64 {
        self.mass_omega.bilinear(v, v).max(0.0).sqrt()
    }

    pub fn omega_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.mass_omega.bilinear(a, b)
    }
}

/// Space-time source and initial datum as load vectors.
#[derive(Debug, Clone, Default)]
pub struct StateData {
    /// `(F_m)_k = ∫∫ f ψ_k e_{t_m}` for `m = 0..=M`; `None` means `f = 0`.
    pub source_loads: Option<Vec<Vec<f64>>>,
    /// `(u_0, ψ_k)`, which equals `M π_h u_0`; `None` means `u_0 = 0`.
    pub initial_load: Option<Vec<f64>>,
}

/// Tracking data as load vectors plus the constant parts of the cost.
#[derive(Debug, Clone, Default)]
pub struct TrackingData {
    /// `∫_{I_m} (u_d, ψ_k) dt` for `m = 1..=M` (index `m - 1`); `None` means `u_d = 0`.
    pub target_loads: Option<Vec<Vec<f64>>>,
    /// `‖u_d‖²_{L²(I;L²)}` under the same quadrature.
    pub target_sq: f64,
    /// `(u_T, ψ_k)`; `None` means `u_T = 0`.
    pub terminal_load: Option<Vec<f64>>,
    pub terminal_sq: f64,
    pub beta: f64,
}

impl TrackingData {
    /// Targets given by discrete fields: `u_d = u_m` on `I_m` and `u_T` a P1 field.
    pub fn from_fields(disc: &Discretization, interval_values: &[Vec<f64>], terminal: &[f64], beta: f64) -> TrackingData {
        let grid = &disc.grid;
        let loads: Vec<Vec<f64>> = interval_values
            .iter()
            .enumerate()
            .map(|(k, u)| disc.mass.mul_vec(u).into_iter().map(|v| v * grid.tau(k + 1)).collect())
            .collect();
        let target_sq = interval_values
            .iter()
            .enumerate()
            .map(|(k, u)| grid.tau(k + 1) * disc.mass.bilinear(u, u))
            .sum();
        TrackingData {
            target_loads: Some(loads),
            target_sq,
            terminal_load: Some(disc.mass.mul_vec(terminal)),
            terminal_sq: disc.mass.bilinear(terminal, terminal),
            beta,
        }
    }
}

/// `∫_Ω g(x, y, t) ψ_k` with the degree-2 spatial rule.
fn spatial_load(mesh: &Mesh, g: &Expr, t: f64) -> Result<Vec<f64>> {
    load_vector(mesh, NodeSet::Interior, Region::Domain, TriangleRule::EdgeMidpoint, |x, y| g.evaluate(x, y, t))
}

fn spatial_sq(mesh: &Mesh, g: &Expr, t: f64) -> Result<f64> {
    integrate(mesh, Region::Domain, TriangleRule::EdgeMidpoint, |x, y| g.evaluate(x, y, t).map(|v| v * v))
}

/// `F_m = ∫∫ f ψ e_{t_m}`, two Gauss points per interval. `F_0` tests with
/// `e_{t_0}` on `I_1`, `F_M` with `e_{t_M}` on `I_M`.
pub fn temporal_loads(mesh: &Mesh, grid: &TimeGrid, f: &Expr) -> Result<Vec<Vec<f64>>> {
    let n = mesh.n_interior();
    let steps = grid.steps();
    let mut out = vec![vec![0.0; n]; steps + 1];
    if f.is_zero() {
        return Ok(out);
    }
    let frozen = if f.is_time_independent() { Some(spatial_load(mesh, f, 0.0)?) } else { None };
    for k in 1..=steps {
        let (a, b) = (grid.node(k - 1), grid.node(k));
        for (t, w) in gauss_on(a, b, 2) {
            let load = match &frozen {
                Some(l) => l.clone(),
                None => spatial_load(mesh, f, t)?,
            };
            let (left, right) = (grid.hat(k - 1, t), grid.hat(k, t));
            for i in 0..n {
                out[k - 1][i] += w * left * load[i];
                out[k][i] += w * right * load[i];
            }
        }
    }
    Ok(out)
}

/// `∫_{I_m} (g, ψ)` and `∫_I ‖g‖²`, two Gauss points per interval.
pub fn interval_loads(mesh: &Mesh, grid: &TimeGrid, g: &Expr) -> Result<(Vec<Vec<f64>>, f64)> {
    let n = mesh.n_interior();
    let mut loads = vec![vec![0.0; n]; grid.steps()];
    let mut sq = 0.0;
    if g.is_zero() {
        return Ok((loads, sq));
    }
    let frozen = if g.is_time_independent() {
        Some((spatial_load(mesh, g, 0.0)?, spatial_sq(mesh, g, 0.0)?))
    } else {
        None
    };
    for (k, load) in loads.iter_mut().enumerate() {
        let (a, b) = (grid.node(k), grid.node(k + 1));
        for (t, w) in gauss_on(a, b, 2) {
            let (l, s) = match &frozen {
                Some((l, s)) => (l.clone(), *s),
                None => (spatial_load(mesh, g, t)?, spatial_sq(mesh, g, t)?),
            };
            load.iter_mut().zip(&l).for_each(|(o, v)| *o += w * v);
            sq += w * s;
        }
    }
    Ok((loads, sq))
}

/// Discretized data of a [`ProblemSpec`].
#[derive(Debug, Clone)]
pub struct ProblemData {
    pub state: StateData,
    pub tracking: TrackingData,
    pub alpha: f64,
}

impl ProblemData {
    pub fn new(spec: &ProblemSpec, disc: &Discretization) -> Result<ProblemData> {
        let mesh = &disc.mesh;
        let grid = &disc.grid;
        let source_loads = if spec.source.is_zero() { None } else { Some(temporal_loads(mesh, grid, &spec.source)?) };
        let initial_load = if spec.initial.is_zero() { None } else { Some(spatial_load(mesh, &spec.initial, 0.0)?) };
        let (target_loads, target_sq) = if spec.target.is_zero() {
            (None, 0.0)
        } else {
            let (l, s) = interval_loads(mesh, grid, &spec.target)?;
            (Some(l), s)
        };
        let t_end = grid.t_end();
        let (terminal_load, terminal_sq) = if spec.terminal_target.is_zero() {
            (None, 0.0)
        } else {
            (
                Some(spatial_load(mesh, &spec.terminal_target, t_end)?),
                spatial_sq(mesh, &spec.terminal_target, t_end)?,
            )
        };
        Ok(ProblemData {
            state: StateData { source_loads, initial_load },
            tracking: TrackingData { target_loads, target_sq, terminal_load, terminal_sq, beta: spec.beta },
            alpha: spec.alpha,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> ProblemSpec {
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
    }

    #[test]
    fn validation() {
        assert!(spec().validate().is_ok());
        let mut s = spec();
        s.alpha = 0.0;
        assert!(s.validate().is_err());
        let mut s = spec();
        s.beta = -1.0;
        assert!(s.validate().is_err());
        let mut s = spec();
        s.window = (0.0, 0.5);
        assert!(s.validate().is_err());
    }

    #[test]
    fn zero_and_constant_sources() {
        let d = spec().discretize(4, 4, 8).unwrap();
        let zero = temporal_loads(&d.mesh, &d.grid, &Expr::constant(0.0)).unwrap();
        assert!(zero.iter().flatten().all(|v| *v == 0.0));
        let ones = temporal_loads(&d.mesh, &d.grid, &Expr::constant(1.0)).unwrap();
        let spatial = spatial_load(&d.mesh, &Expr::constant(1.0), 0.0).unwrap();
        let tau = 0.125;
        for m in 1..8 {
            for (a, b) in ones[m].iter().zip(&spatial) {
                assert!((a - tau * b).abs() < 1e-15);
            }
        }
        for (a, b) in ones[0].iter().zip(&spatial) {
            assert!((a - 0.5 * tau * b).abs() < 1e-15);
        }
    }

    #[test]
    fn separable_quadratic_in_time_matches_symbolic() {
        // f = (1 + 2t + 3t²) s(x, y): F_m = (∫ g e_m dt) * load(s)
        let d = spec().discretize(4, 4, 8).unwrap();
        let f = Expr::parse("(1 + 2*t + 3*t^2) * x * y").unwrap();
        let loads = temporal_loads(&d.mesh, &d.grid, &f).unwrap();
        let s = spatial_load(&d.mesh, &Expr::parse("x*y").unwrap(), 0.0).unwrap();
        // ∫ g e_m over [t_{m-1}, t_{m+1}] for g quadratic and uniform τ:
        // τ (g(t_m) + τ² g''/12) with g'' = 6
        let tau = 0.125;
        for m in 1..8 {
            let tm = m as f64 * tau;
            let g = 1.0 + 2.0 * tm + 3.0 * tm * tm;
            let weight = tau * (g + tau * tau * 6.0 / 12.0);
            for (a, b) in loads[m].iter().zip(&s) {
                assert!((a - weight * b).abs() < 1e-12 * (1.0 + a.abs()));
            }
        }
        // e_0 on [0, τ]: ∫ g (1 - t/τ) = τ/2 + 2 τ²/6 + 3 τ³/12
        let w0 = tau / 2.0 + tau * tau / 3.0 + tau.powi(3) / 4.0;
        for (a, b) in loads[0].iter().zip(&s) {
            assert!((a - w0 * b).abs() < 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn requires_subdomain() {
        let mesh = Mesh::structured(Rect::unit(), 4, 4).unwrap();
        let grid = TimeGrid::uniform(1.0, 4).unwrap();
        assert!(matches!(Discretization::new(mesh, grid), Err(Error::SubdomainUnmarked)));
    }
}
