//! Temporal partition, control window, hat functions and the measure
//! interpolation operators `Λ_τ` (measures to Dirac sums at control nodes)
//! and `Π_τ` (nodal interpolation on the window).

use crate::error::{Error, Result};
use crate::fem::quadrature::gauss_on;

const TIME_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    nodes: Vec<f64>,
    window: Option<(f64, f64)>,
    control_nodes: Vec<usize>,
}

impl TimeGrid {
    /// `t_m = m T / M` with no control window.
    pub fn uniform(t_end: f64, steps: usize) -> Result<TimeGrid> {
        if steps == 0 || !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::TimeGrid(format!("need T > 0 and M >= 1, got T={t_end}, M={steps}")));
        }
        let nodes = (0..=steps)
            .map(|m| if m == steps { t_end } else { m as f64 * t_end / steps as f64 })
            .collect();
        Ok(TimeGrid { nodes, window: None, control_nodes: Vec::new() })
    }

    /// Uniform grid whose nodes contain both window endpoints.
    pub fn with_window(t_end: f64, steps: usize, window: (f64, f64)) -> Result<TimeGrid> {
        if steps < 4 {
            return Err(Error::TimeGrid(format!("a control window needs M >= 4, got {steps}")));
        }
        TimeGrid::uniform(t_end, steps)?.attach_window(window)
    }

    /// Arbitrary strictly increasing nodes starting at zero.
    pub fn from_nodes(nodes: Vec<f64>, window: Option<(f64, f64)>) -> Result<TimeGrid> {
        if nodes.len() < 2 || nodes[0] != 0.0 {
            return Err(Error::TimeGrid("nodes must start at 0 and contain at least one step".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::TimeGrid("nodes must be strictly increasing".into()));
        }
        let grid = TimeGrid { nodes, window: None, control_nodes: Vec::new() };
        match window {
            Some(w) => grid.attach_window(w),
            None => Ok(grid),
        }
    }

    fn attach_window(mut self, (t1, t2): (f64, f64)) -> Result<TimeGrid> {
        let t_end = self.t_end();
        if !(t1 > 0.0 && t2 < t_end && t1 <= t2) {
            return Err(Error::TimeGrid(format!("window ({t1}, {t2}) must lie strictly inside (0, {t_end})")));
        }
        let tol = TIME_TOL * t_end.max(1.0);
        let locate = |t: f64| {
            self.nodes
                .iter()
                .position(|&n| (n - t).abs() <= tol)
                .ok_or_else(|| Error::TimeGrid(format!("window endpoint {t} is not a grid node")))
        };
        let (k1, k2) = (locate(t1)?, locate(t2)?);
        self.window = Some((self.nodes[k1], self.nodes[k2]));
        self.control_nodes = (k1..=k2).collect();
        Ok(self)
    }

    /// Number of intervals `M`.
    pub fn steps(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn t_end(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, m: usize) -> f64 {
        self.nodes[m]
    }

    /// `τ_m = t_m - t_{m-1}` for `m = 1..=M`.
    pub fn tau(&self, m: usize) -> f64 {
        self.nodes[m] - self.nodes[m - 1]
    }

    pub fn tau_max(&self) -> f64 {
        (1..=self.steps()).map(|m| self.tau(m)).fold(0.0, f64::max)
    }

    pub fn is_uniform(&self) -> bool {
        let t1 = self.tau(1);
        (1..=self.steps()).all(|m| (self.tau(m) - t1).abs() <= TIME_TOL * t1.max(1.0))
    }

    pub fn window(&self) -> Option<(f64, f64)> {
        self.window
    }

    /// Indices `m` with `t_m` in the closed control window.
    pub fn control_nodes(&self) -> &[usize] {
        &self.control_nodes
    }

    /// Temporal hat function `e_{t_m}(t)`.
    pub fn hat(&self, m: usize, t: f64) -> f64 {
        let tm = self.nodes[m];
        if m > 0 && t < tm {
            let tl = self.nodes[m - 1];
            if t <= tl {
                0.0
            } else {
                (t - tl) / (tm - tl)
            }
        } else if m < self.steps() && t > tm {
            let tr = self.nodes[m + 1];
            if t >= tr {
                0.0
            } else {
                (tr - t) / (tr - tm)
            }
        } else if t == tm {
            1.0
        } else {
            0.0
        }
    }

    /// `∫ e_{t_m}` over its whole support.
    pub fn hat_integral(&self, m: usize) -> f64 {
        let left = if m > 0 { self.tau(m) } else { 0.0 };
        let right = if m < self.steps() { self.tau(m + 1) } else { 0.0 };
        0.5 * (left + right)
    }

    /// `∫_{I_k} e_{t_m}`.
    pub fn hat_integral_on(&self, m: usize, k: usize) -> f64 {
        if k == m || k == m + 1 {
            0.5 * self.tau(k)
        } else {
            0.0
        }
    }

    /// `∫_{Ī_c} e_{t_m}` (hat restricted to the window).
    pub fn hat_integral_on_window(&self, m: usize) -> f64 {
        match (self.window, self.control_nodes.first(), self.control_nodes.last()) {
            (Some(_), Some(&k1), Some(&k2)) if (k1..=k2).contains(&m) => {
                (k1 + 1..=k2).map(|k| self.hat_integral_on(m, k)).sum()
            }
            _ => 0.0,
        }
    }

    /// Interval index `k` with `t ∈ [t_{k-1}, t_k)` (the last interval is closed).
    pub fn interval_of(&self, t: f64) -> usize {
        match self.nodes.binary_search_by(|n| n.total_cmp(&t)) {
            Ok(i) => (i + 1).min(self.steps()),
            Err(i) => i.clamp(1, self.steps()),
        }
    }

    /// True when every node of `coarse` is a node of `self` (nested refinement).
    pub fn refines(&self, coarse: &TimeGrid) -> bool {
        let tol = TIME_TOL * self.t_end().max(1.0);
        (self.t_end() - coarse.t_end()).abs() <= tol
            && coarse.nodes.iter().all(|&t| self.nodes.iter().any(|&n| (n - t).abs() <= tol))
    }

    fn require_window(&self) -> Result<(f64, f64)> {
        self.window.ok_or_else(|| Error::TimeGrid("grid has no control window".into()))
    }
}

/// Polynomial density `c0 + c1 t + c2 t^2` on `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityPiece {
    pub a: f64,
    pub b: f64,
    pub coeffs: [f64; 3],
}

impl DensityPiece {
    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs[0] + t * (self.coeffs[1] + t * self.coeffs[2])
    }

    /// `∫_a^b |p|`, splitting at sign changes.
    pub fn abs_integral(&self) -> f64 {
        let [c0, c1, c2] = self.coeffs;
        let mut cuts = vec![self.a, self.b];
        let mut push_root = |r: f64| {
            if r > self.a && r < self.b {
                cuts.push(r);
            }
        };
        if c2 != 0.0 {
            let disc = c1 * c1 - 4.0 * c2 * c0;
            if disc > 0.0 {
                let s = disc.sqrt();
                push_root((-c1 - s) / (2.0 * c2));
                push_root((-c1 + s) / (2.0 * c2));
            }
        } else if c1 != 0.0 {
            push_root(-c0 / c1);
        }
        cuts.sort_by(f64::total_cmp);
        cuts.windows(2)
            .map(|w| gauss_on(w[0], w[1], 2).map(|(t, wt)| wt * self.eval(t)).sum::<f64>().abs())
            .sum()
    }
}

/// Finite signed measure on the control window: atoms plus a piecewise
/// polynomial density (degree at most two per piece).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TemporalMeasure {
    pub atoms: Vec<(f64, f64)>,
    pub density: Vec<DensityPiece>,
}

impl TemporalMeasure {
    pub fn dirac(t: f64, weight: f64) -> TemporalMeasure {
        TemporalMeasure { atoms: vec![(t, weight)], density: Vec::new() }
    }

    /// Total variation `Σ|w| + ∫|density|` (atoms at equal locations are merged).
    pub fn total_variation(&self) -> f64 {
        let mut atoms = self.atoms.clone();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut tv = 0.0;
        let mut i = 0;
        while i < atoms.len() {
            let mut w = 0.0;
            let t = atoms[i].0;
            while i < atoms.len() && atoms[i].0 == t {
                w += atoms[i].1;
                i += 1;
            }
            tv += f64::abs(w);
        }
        tv + self.density.iter().map(DensityPiece::abs_integral).sum::<f64>()
    }

    fn validate(&self, (t1, t2): (f64, f64)) -> Result<()> {
        let tol = TIME_TOL * t2.abs().max(1.0);
        for &(t, _) in &self.atoms {
            if t < t1 - tol || t > t2 + tol {
                return Err(Error::Measure(format!("atom at {t} lies outside the window [{t1}, {t2}]")));
            }
        }
        for p in &self.density {
            if p.a < t1 - tol || p.b > t2 + tol || p.a > p.b {
                return Err(Error::Measure(format!("density piece [{}, {}] outside the window", p.a, p.b)));
            }
        }
        Ok(())
    }

    /// `∫ g dq` where `g` is continuous, integrating the density piecewise
    /// between grid nodes with `points` Gauss points per segment.
    fn integrate_with(&self, grid: &TimeGrid, points: usize, g: impl Fn(f64) -> f64) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|&(t, w)| w * g(t)).sum();
        let dens: f64 = self
            .density
            .iter()
            .map(|p| {
                split_at_nodes(grid, p.a, p.b)
                    .into_iter()
                    .map(|(a, b)| gauss_on(a, b, points).map(|(t, w)| w * p.eval(t) * g(t)).sum::<f64>())
                    .sum::<f64>()
            })
            .sum();
        atoms + dens
    }

    /// `⟨q, v⟩` for a smooth `v`, density integrated with 5-point Gauss per segment.
    pub fn pair_with(&self, grid: &TimeGrid, v: impl Fn(f64) -> f64) -> f64 {
        self.integrate_with(grid, 5, v)
    }
}

fn split_at_nodes(grid: &TimeGrid, a: f64, b: f64) -> Vec<(f64, f64)> {
    let mut cuts = vec![a];
    cuts.extend(grid.nodes().iter().copied().filter(|&t| t > a && t < b));
    cuts.push(b);
    cuts.windows(2).map(|w| (w[0], w[1])).collect()
}

/// `Λ_τ q`: weights `∫ e_{t_m} dq` at the control nodes (same order as
/// [`TimeGrid::control_nodes`]).
pub fn lambda_tau(q: &TemporalMeasure, grid: &TimeGrid) -> Result<Vec<f64>> {
    let window = grid.require_window()?;
    q.validate(window)?;
    // hats times a quadratic density are cubic between nodes: two Gauss points are exact
    Ok(grid
        .control_nodes()
        .iter()
        .map(|&m| q.integrate_with(grid, 2, |t| grid.hat(m, t)))
        .collect())
}

/// `Π_τ v`: nodal values of `v` at the control nodes.
pub fn pi_tau(v: impl Fn(f64) -> f64, grid: &TimeGrid) -> Result<Vec<f64>> {
    grid.require_window()?;
    Ok(grid.control_nodes().iter().map(|&m| v(grid.node(m))).collect())
}

/// Evaluates the piecewise linear function with the given control-node values.
pub fn eval_on_window(grid: &TimeGrid, nodal: &[f64], t: f64) -> f64 {
    grid.control_nodes().iter().zip(nodal).map(|(&m, &v)| v * grid.hat(m, t)).sum()
}

/// Sup norm of an element of `V_τ`: attained at the nodes.
pub fn sup_norm(nodal: &[f64]) -> f64 {
    nodal.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Both sides of `⟨q, Π_τ v⟩ = ⟨Λ_τ q, v⟩`, computed independently.
pub fn pairing_duality_check(q: &TemporalMeasure, v: impl Fn(f64) -> f64, grid: &TimeGrid) -> Result<(f64, f64)> {
    let nodal = pi_tau(&v, grid)?;
    q.validate(grid.require_window()?)?;
    let lhs = q.integrate_with(grid, 2, |t| eval_on_window(grid, &nodal, t));
    let weights = lambda_tau(q, grid)?;
    let rhs = grid.control_nodes().iter().zip(&weights).map(|(&m, w)| w * v(grid.node(m))).sum();
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid8() -> TimeGrid {
        TimeGrid::with_window(1.0, 8, (0.25, 0.75)).unwrap()
    }

    #[test]
    fn control_node_sets() {
        assert_eq!(grid8().control_nodes(), &[2, 3, 4, 5, 6]);
        assert!(TimeGrid::with_window(1.0, 8, (0.3, 0.7)).is_err());
        assert_eq!(TimeGrid::with_window(2.0, 4, (0.5, 1.5)).unwrap().control_nodes(), &[1, 2, 3]);
        assert!(TimeGrid::with_window(1.0, 8, (0.0, 0.5)).is_err());
        assert!(TimeGrid::with_window(1.0, 8, (0.5, 1.0)).is_err());
        assert!(TimeGrid::with_window(1.0, 2, (0.5, 0.5)).is_err());
        assert_eq!(TimeGrid::with_window(1.0, 4, (0.5, 0.5)).unwrap().control_nodes(), &[2]);
    }

    #[test]
    fn hat_integrals() {
        let g = grid8();
        assert!((g.hat_integral(3) - 0.125).abs() < 1e-15);
        assert!((g.hat_integral(0) - 0.0625).abs() < 1e-15);
        assert!((g.hat_integral(8) - 0.0625).abs() < 1e-15);
        let g = TimeGrid::from_nodes(vec![0.0, 0.5, 0.6, 0.9, 1.0], None).unwrap();
        assert!((g.hat_integral(2) - 0.2).abs() < 1e-15);
        assert!((g.hat_integral_on(2, 3) - 0.15).abs() < 1e-15);
        assert_eq!(g.hat_integral_on(2, 1), 0.0);
    }

    #[test]
    fn hat_values_and_intervals() {
        let g = grid8();
        assert_eq!(g.hat(3, 0.375), 1.0);
        assert!((g.hat(3, 0.4375) - 0.5).abs() < 1e-15);
        assert!((g.hat(4, 0.4375) - 0.5).abs() < 1e-15);
        assert_eq!(g.hat(3, 0.6), 0.0);
        assert_eq!(g.hat(0, 0.0), 1.0);
        assert_eq!(g.hat(8, 1.0), 1.0);
        assert_eq!(g.interval_of(0.0), 1);
        assert_eq!(g.interval_of(0.125), 2);
        assert_eq!(g.interval_of(0.2), 2);
        assert_eq!(g.interval_of(1.0), 8);
    }

    #[test]
    fn lambda_tau_examples() {
        let g = grid8();
        let w = lambda_tau(&TemporalMeasure::dirac(0.5, 1.0), &g).unwrap();
        assert_eq!(w, vec![0.0, 0.0, 1.0, 0.0, 0.0]);
        let w = lambda_tau(&TemporalMeasure::dirac(0.4375, 1.0), &g).unwrap();
        assert_eq!(w, vec![0.0, 0.5, 0.5, 0.0, 0.0]);
        let q = TemporalMeasure {
            atoms: vec![],
            density: vec![DensityPiece { a: 0.375, b: 0.5, coeffs: [1.0, 0.0, 0.0] }],
        };
        let w = lambda_tau(&q, &g).unwrap();
        let tau = 0.125;
        for (k, expected) in [0.0, tau / 2.0, tau / 2.0, 0.0, 0.0].iter().enumerate() {
            assert!((w[k] - expected).abs() < 1e-15);
        }
        assert!((w.iter().map(|v| v.abs()).sum::<f64>() - q.total_variation()).abs() < 1e-15);
        assert!(lambda_tau(&TemporalMeasure::dirac(0.8, 1.0), &g).is_err());
    }

    #[test]
    fn pi_tau_examples() {
        let g = grid8();
        let lin = |t: f64| 2.0 * t - 0.3;
        let nodal = pi_tau(lin, &g).unwrap();
        for t in [0.25, 0.3, 0.41, 0.6, 0.75] {
            assert!((eval_on_window(&g, &nodal, t) - lin(t)).abs() < 1e-14);
        }
        assert!(pi_tau(|_| 3.0, &g).unwrap().iter().all(|&v| v == 3.0));
        let nodal = pi_tau(|t| t * t, &g).unwrap();
        // t = 0.3 lies 0.4 of the way from 0.25 to 0.375
        let expected = 0.6 * 0.0625 + 0.4 * 0.140625;
        assert!((eval_on_window(&g, &nodal, 0.3) - expected).abs() < 1e-15);
        assert_eq!(sup_norm(&[0.5, -2.0, 1.0]), 2.0);
    }

    #[test]
    fn duality_examples() {
        let g = grid8();
        let (a, b) = pairing_duality_check(&TemporalMeasure::dirac(0.375, 1.0), |t| t.sin(), &g).unwrap();
        assert!((a - 0.375f64.sin()).abs() < 1e-15 && (b - a).abs() < 1e-15);
        let (a, b) = pairing_duality_check(&TemporalMeasure::dirac(0.41, -2.0), |t| 3.0 * t + 1.0, &g).unwrap();
        assert!((a - b).abs() < 1e-14);
        assert!((a + 2.0 * (3.0 * 0.41 + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn abs_integral_splits_at_roots() {
        // t - 0.5 on [0, 1]: ∫|.| = 1/4
        let p = DensityPiece { a: 0.0, b: 1.0, coeffs: [-0.5, 1.0, 0.0] };
        assert!((p.abs_integral() - 0.25).abs() < 1e-15);
        // t^2 - 1/4 on [0, 1]: 1/12 + 1/6
        let p = DensityPiece { a: 0.0, b: 1.0, coeffs: [-0.25, 0.0, 1.0] };
        assert!((p.abs_integral() - 0.25).abs() < 1e-15);
    }
}
