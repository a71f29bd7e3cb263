//! Discrete controls `q = Σ_m q_m ⊗ δ_{t_m}` and the projection `Λ_σ` of
//! space-time measures onto them.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fem::{triangle_area, TriangleRule};
use crate::problem::Discretization;
use crate::time_grid::TimeGrid;

/// One coefficient group over the subdomain nodes per control time node.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteControl {
    /// Time node indices, equal to the grid's control nodes.
    pub nodes: Vec<usize>,
    pub groups: Vec<Vec<f64>>,
}

impl DiscreteControl {
    pub fn zeros(grid: &TimeGrid, n_omega: usize) -> DiscreteControl {
        DiscreteControl {
            nodes: grid.control_nodes().to_vec(),
            groups: vec![vec![0.0; n_omega]; grid.control_nodes().len()],
        }
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Group at time node `m`, if `m` is a control node.
    pub fn group_at(&self, m: usize) -> Option<&[f64]> {
        self.nodes.iter().position(|&k| k == m).map(|k| self.groups[k].as_slice())
    }

    pub fn is_zero(&self) -> bool {
        self.groups.iter().flatten().all(|v| *v == 0.0)
    }

    /// `Σ_m ‖q_m‖_{L²(ω)}`.
    pub fn measure_norm(&self, disc: &Discretization) -> f64 {
        self.groups.iter().map(|g| disc.omega_norm(g)).sum()
    }

    /// Per-group `‖q_m‖_{L²(ω)}`.
    pub fn group_norms(&self, disc: &Discretization) -> Vec<f64> {
        self.groups.iter().map(|g| disc.omega_norm(g)).collect()
    }

    /// Indices into `groups` of the nonzero groups.
    pub fn support(&self) -> Vec<usize> {
        (0..self.groups.len()).filter(|&k| self.groups[k].iter().any(|v| *v != 0.0)).collect()
    }

    pub fn scaled(&self, s: f64) -> DiscreteControl {
        DiscreteControl {
            nodes: self.nodes.clone(),
            groups: self.groups.iter().map(|g| g.iter().map(|v| s * v).collect()).collect(),
        }
    }

    /// `self + s * other`
    pub fn add_scaled(&self, s: f64, other: &DiscreteControl) -> DiscreteControl {
        DiscreteControl {
            nodes: self.nodes.clone(),
            groups: self
                .groups
                .iter()
                .zip(&other.groups)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + s * y).collect())
                .collect(),
        }
    }

    /// `(a, b)` in `L²(ω)` summed over groups.
    pub fn inner(disc: &Discretization, a: &DiscreteControl, b: &DiscreteControl) -> f64 {
        a.groups.iter().zip(&b.groups).map(|(x, y)| disc.omega_inner(x, y)).sum()
    }
}

/// Spatial profile of an atom of a space-time measure.
#[derive(Debug, Clone)]
pub enum Profile {
    /// Coefficients on the subdomain nodes.
    Omega(Vec<f64>),
    /// Coefficients on all interior nodes; must vanish off the closed subdomain.
    Interior(Vec<f64>),
    /// Closed-form profile, restricted to ω.
    Function(Expr),
}

/// `Σ_k δ_{t_k} ⊗ profile_k`
#[derive(Debug, Clone, Default)]
pub struct SpaceTimeMeasure {
    pub atoms: Vec<(f64, Profile)>,
}

impl SpaceTimeMeasure {
    /// `‖q‖_{M(Ī_c; L²(ω))}`: atoms at equal times are merged before taking norms.
    pub fn total_variation(&self, disc: &Discretization) -> Result<f64> {
        let mut times: Vec<f64> = self.atoms.iter().map(|a| a.0).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let mut total = 0.0;
        for t in times {
            let members: Vec<&Profile> = self.atoms.iter().filter(|a| a.0 == t).map(|a| &a.1).collect();
            total += l2_omega_norm(disc, t, &members)?;
        }
        Ok(total)
    }
}

fn profile_value(disc: &Discretization, p: &Profile, t: f64, e: usize, bary: [f64; 3], x: f64, y: f64) -> Result<f64> {
    let tri = disc.mesh.triangles[e];
    Ok(match p {
        Profile::Omega(v) => (0..3).map(|a| disc.mesh.omega_index(tri[a]).map_or(0.0, |i| bary[a] * v[i])).sum(),
        Profile::Interior(v) => (0..3).map(|a| disc.mesh.interior_index(tri[a]).map_or(0.0, |i| bary[a] * v[i])).sum(),
        Profile::Function(f) => f.evaluate(x, y, t)?,
    })
}

fn l2_omega_norm(disc: &Discretization, t: f64, profiles: &[&Profile]) -> Result<f64> {
    let points = TriangleRule::Degree5.points();
    let mut sq = 0.0;
    for &e in &disc.mesh.omega()?.elements {
        let c = disc.mesh.corners(e);
        let area = triangle_area(&c);
        for p in &points {
            let x = p.bary[0] * c[0][0] + p.bary[1] * c[1][0] + p.bary[2] * c[2][0];
            let y = p.bary[0] * c[0][1] + p.bary[1] * c[1][1] + p.bary[2] * c[2][1];
            let mut v = 0.0;
            for prof in profiles {
                v += profile_value(disc, prof, t, e, p.bary, x, y)?;
            }
            sq += p.weight * area * v * v;
        }
    }
    Ok(sq.sqrt())
}

/// L²(ω) projection of a profile onto the subdomain P1 space.
fn project_profile(disc: &Discretization, t: f64, p: &Profile) -> Result<Vec<f64>> {
    let mesh = &disc.mesh;
    match p {
        Profile::Omega(v) => {
            if v.len() != disc.n_omega() {
                return Err(Error::Dimension(format!("profile has {} values, ω has {} nodes", v.len(), disc.n_omega())));
            }
            Ok(v.clone())
        }
        Profile::Interior(v) => {
            if v.len() != disc.n_interior() {
                return Err(Error::Dimension(format!("profile has {} values, mesh has {} interior nodes", v.len(), disc.n_interior())));
            }
            let mut out = vec![0.0; disc.n_omega()];
            for (k, &vertex) in mesh.interior_nodes.iter().enumerate() {
                match mesh.omega_index(vertex) {
                    Some(i) => out[i] = v[k],
                    None if v[k] != 0.0 => {
                        return Err(Error::Measure(format!("profile is nonzero at vertex {vertex} outside ω")))
                    }
                    None => {}
                }
            }
            Ok(out)
        }
        Profile::Function(f) => {
            let mut rhs = crate::fem::load_vector(
                mesh,
                crate::fem::NodeSet::Omega,
                crate::fem::Region::Omega,
                TriangleRule::Degree5,
                |x, y| f.evaluate(x, y, t),
            )?;
            disc.solve_mass_omega(&mut rhs);
            Ok(rhs)
        }
    }
}

/// `Λ_σ q = π_h(Λ_τ q)`: hat-weighted in time, L²(ω)-projected in space.
pub fn lambda_sigma(q: &SpaceTimeMeasure, disc: &Discretization) -> Result<DiscreteControl> {
    let grid = &disc.grid;
    let (t1, t2) = grid.window().ok_or_else(|| Error::TimeGrid("grid has no control window".into()))?;
    let tol = 1e-12 * grid.t_end().max(1.0);
    let mut out = DiscreteControl::zeros(grid, disc.n_omega());
    for (t, profile) in &q.atoms {
        if *t < t1 - tol || *t > t2 + tol {
            return Err(Error::Measure(format!("atom at {t} lies outside the window [{t1}, {t2}]")));
        }
        let projected = project_profile(disc, *t, profile)?;
        for (k, &m) in grid.control_nodes().iter().enumerate() {
            let w = grid.hat(m, *t);
            if w != 0.0 {
                out.groups[k].iter_mut().zip(&projected).for_each(|(o, v)| *o += w * v);
            }
        }
    }
    Ok(out)
}

impl SpaceTimeMeasure {
    /// Embeds a discrete control using the grid's node times.
    pub fn from_control(q: &DiscreteControl, grid: &TimeGrid) -> SpaceTimeMeasure {
        SpaceTimeMeasure {
            atoms: q.nodes.iter().zip(&q.groups).map(|(&m, g)| (grid.node(m), Profile::Omega(g.clone()))).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Rect;
    use crate::problem::ProblemSpec;

    fn disc() -> Discretization {
        let spec = ProblemSpec {
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
        };
        spec.discretize(8, 8, 8).unwrap()
    }

    #[test]
    fn norm_of_projected_constant() {
        let d = disc();
        let mut q = DiscreteControl::zeros(&d.grid, d.n_omega());
        assert_eq!(q.measure_norm(&d), 0.0);
        q.groups[1] = vec![1.0; d.n_omega()];
        assert!((q.measure_norm(&d) - 0.5).abs() < 1e-14);
        q.groups[3] = vec![1.0; d.n_omega()];
        assert!((q.measure_norm(&d) - 1.0).abs() < 1e-14);
        assert_eq!(q.support(), vec![1, 3]);
    }

    #[test]
    fn discrete_controls_are_fixed_points() {
        let d = disc();
        let mut q = DiscreteControl::zeros(&d.grid, d.n_omega());
        for (k, g) in q.groups.iter_mut().enumerate() {
            for (i, v) in g.iter_mut().enumerate() {
                *v = ((k * 7 + i * 3) as f64).sin();
            }
        }
        let back = lambda_sigma(&SpaceTimeMeasure::from_control(&q, &d.grid), &d).unwrap();
        for (a, b) in back.groups.iter().flatten().zip(q.groups.iter().flatten()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn midpoint_atom_with_constant_profile() {
        let d = disc();
        let t = 0.5 * (d.grid.node(3) + d.grid.node(4));
        let q = SpaceTimeMeasure { atoms: vec![(t, Profile::Function(Expr::constant(1.0)))] };
        let out = lambda_sigma(&q, &d).unwrap();
        // π_h(1/2) on ω reproduces the constant 1/2
        for (k, &m) in d.grid.control_nodes().iter().enumerate() {
            let expected = if m == 3 || m == 4 { 0.5 } else { 0.0 };
            assert!(out.groups[k].iter().all(|v| (v - expected).abs() < 1e-12), "m={m}");
        }
        assert!(out.measure_norm(&d) <= q.total_variation(&d).unwrap() + 1e-12);
    }

    #[test]
    fn basis_profile_at_node() {
        let d = disc();
        let mut field = vec![0.0; d.n_interior()];
        let vertex = d.mesh.omega().unwrap().nodes[4];
        field[d.mesh.interior_index(vertex).unwrap()] = 1.0;
        let q = SpaceTimeMeasure { atoms: vec![(d.grid.node(5), Profile::Interior(field.clone()))] };
        let out = lambda_sigma(&q, &d).unwrap();
        let g = out.group_at(5).unwrap();
        for (i, v) in g.iter().enumerate() {
            assert_eq!(*v, if i == 4 { 1.0 } else { 0.0 });
        }
        // a profile reaching outside ω is rejected
        let outside = d.mesh.interior_nodes.iter().position(|&v| d.mesh.omega_index(v).is_none()).unwrap();
        field[outside] = 1.0;
        let q = SpaceTimeMeasure { atoms: vec![(d.grid.node(5), Profile::Interior(field))] };
        assert!(matches!(lambda_sigma(&q, &d), Err(Error::Measure(_))));
    }
}
