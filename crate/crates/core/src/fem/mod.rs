//! P1 finite element operators on a structured mesh.
//!
//! All interior-node systems eliminate the homogeneous Dirichlet boundary;
//! mass matrices are consistent (never lumped).

pub mod quadrature;
pub mod solver;
pub mod sparse;

pub use quadrature::TriangleRule;
pub use solver::{solve_spd, solve_spd_from, BandedCholesky, CgStats, DEFAULT_TOL};
pub use sparse::{CsrMatrix, SymmetricSparseMatrix};

use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Which vertices carry degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeSet {
    /// Every vertex, including the boundary.
    All,
    /// Vertices off the boundary of the domain.
    Interior,
    /// Interior vertices in the closed control subdomain.
    Omega,
}

/// Integration domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Domain,
    Omega,
}

/// Coefficients of a P1 function with respect to a node set.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    pub set: NodeSet,
    pub values: Vec<f64>,
}

impl NodalField {
    pub fn new(mesh: &Mesh, set: NodeSet, values: Vec<f64>) -> Result<NodalField> {
        let expected = set_len(mesh, set)?;
        if values.len() != expected {
            return Err(Error::Dimension(format!(
                "{set:?} field needs {expected} values, got {}",
                values.len()
            )));
        }
        Ok(NodalField { set, values })
    }

    pub fn zeros(mesh: &Mesh, set: NodeSet) -> Result<NodalField> {
        Ok(NodalField { set, values: vec![0.0; set_len(mesh, set)?] })
    }
}

pub fn set_len(mesh: &Mesh, set: NodeSet) -> Result<usize> {
    Ok(match set {
        NodeSet::All => mesh.vertices.len(),
        NodeSet::Interior => mesh.n_interior(),
        NodeSet::Omega => mesh.omega()?.nodes.len(),
    })
}

fn index_of(mesh: &Mesh, set: NodeSet, vertex: usize) -> Option<usize> {
    match set {
        NodeSet::All => Some(vertex),
        NodeSet::Interior => mesh.interior_index(vertex),
        NodeSet::Omega => mesh.omega_index(vertex),
    }
}

fn elements(mesh: &Mesh, region: Region) -> Result<Vec<usize>> {
    Ok(match region {
        Region::Domain => (0..mesh.triangles.len()).collect(),
        Region::Omega => mesh.omega()?.elements.clone(),
    })
}

/// Local P1 mass matrix: `area / 12 * [[2,1,1],[1,2,1],[1,1,2]]`.
pub fn local_mass(corners: &[[f64; 2]; 3]) -> [[f64; 3]; 3] {
    let area = triangle_area(corners);
    let mut m = [[area / 12.0; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = area / 6.0;
    }
    m
}

/// Local P1 stiffness matrix from the constant basis gradients.
pub fn local_stiffness(corners: &[[f64; 2]; 3]) -> [[f64; 3]; 3] {
    let area = triangle_area(corners);
    let g = basis_gradients(corners);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
        }
    }
    k
}

pub fn triangle_area(c: &[[f64; 2]; 3]) -> f64 {
    0.5 * ((c[1][0] - c[0][0]) * (c[2][1] - c[0][1]) - (c[2][0] - c[0][0]) * (c[1][1] - c[0][1]))
}

pub fn basis_gradients(c: &[[f64; 2]; 3]) -> [[f64; 2]; 3] {
    let two_area = 2.0 * triangle_area(c);
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        g[i] = [(c[j][1] - c[k][1]) / two_area, (c[k][0] - c[j][0]) / two_area];
    }
    g
}

fn assemble_local(
    mesh: &Mesh,
    rows: NodeSet,
    cols: NodeSet,
    region: Region,
    local: impl Fn(&[[f64; 2]; 3]) -> [[f64; 3]; 3],
) -> Result<CsrMatrix> {
    let (nr, nc) = (set_len(mesh, rows)?, set_len(mesh, cols)?);
    let elems = elements(mesh, region)?;
    let mut trip = Vec::with_capacity(9 * elems.len());
    for e in elems {
        let tri = mesh.triangles[e];
        let loc = local(&mesh.corners(e));
        for a in 0..3 {
            let Some(r) = index_of(mesh, rows, tri[a]) else { continue };
            for b in 0..3 {
                if let Some(c) = index_of(mesh, cols, tri[b]) {
                    trip.push((r, c, loc[a][b]));
                }
            }
        }
    }
    Ok(CsrMatrix::from_triplets(nr, nc, trip))
}

/// `∫_region ψ_i ψ_j` for `i, j` in `set`.
pub fn assemble_mass(mesh: &Mesh, set: NodeSet, region: Region) -> Result<SymmetricSparseMatrix> {
    assemble_local(mesh, set, set, region, local_mass)
}

/// `∫_Ω ∇ψ_i · ∇ψ_j` for `i, j` in `set` (`Interior` eliminates the boundary).
pub fn assemble_stiffness(mesh: &Mesh, set: NodeSet) -> Result<SymmetricSparseMatrix> {
    assemble_local(mesh, set, set, Region::Domain, local_stiffness)
}

/// `∫_ω ψ_i ψ_k`, rows over subdomain nodes, columns over all interior nodes.
pub fn assemble_omega_coupling(mesh: &Mesh) -> Result<CsrMatrix> {
    assemble_local(mesh, NodeSet::Omega, NodeSet::Interior, Region::Omega, local_mass)
}

/// `∫_region f ψ_i` with the given rule (data are integrated, not interpolated).
pub fn load_vector(
    mesh: &Mesh,
    set: NodeSet,
    region: Region,
    rule: TriangleRule,
    mut f: impl FnMut(f64, f64) -> Result<f64>,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; set_len(mesh, set)?];
    let points = rule.points();
    for e in elements(mesh, region)? {
        let tri = mesh.triangles[e];
        let c = mesh.corners(e);
        let idx = [index_of(mesh, set, tri[0]), index_of(mesh, set, tri[1]), index_of(mesh, set, tri[2])];
        if idx.iter().all(Option::is_none) {
            continue;
        }
        let area = triangle_area(&c);
        for p in &points {
            let x = p.bary[0] * c[0][0] + p.bary[1] * c[1][0] + p.bary[2] * c[2][0];
            let y = p.bary[0] * c[0][1] + p.bary[1] * c[1][1] + p.bary[2] * c[2][1];
            let fv = f(x, y)? * p.weight * area;
            for a in 0..3 {
                if let Some(i) = idx[a] {
                    out[i] += fv * p.bary[a];
                }
            }
        }
    }
    Ok(out)
}

/// `∫_region f` with the given rule.
pub fn integrate(mesh: &Mesh, region: Region, rule: TriangleRule, mut f: impl FnMut(f64, f64) -> Result<f64>) -> Result<f64> {
    let points = rule.points();
    let mut total = 0.0;
    for e in elements(mesh, region)? {
        let c = mesh.corners(e);
        let area = triangle_area(&c);
        for p in &points {
            let x = p.bary[0] * c[0][0] + p.bary[1] * c[1][0] + p.bary[2] * c[2][0];
            let y = p.bary[0] * c[0][1] + p.bary[1] * c[1][1] + p.bary[2] * c[2][1];
            total += f(x, y)? * p.weight * area;
        }
    }
    Ok(total)
}

/// L² projection onto the span of `set` over `region`: solves `M c = (v, ψ)`.
pub fn l2_project(mesh: &Mesh, set: NodeSet, region: Region, f: impl FnMut(f64, f64) -> Result<f64>) -> Result<NodalField> {
    let mass = assemble_mass(mesh, set, region)?;
    let rhs = load_vector(mesh, set, region, TriangleRule::EdgeMidpoint, f)?;
    let values = solve_spd(&mass, &rhs, DEFAULT_TOL)?;
    Ok(NodalField { set, values })
}

/// L² projection of a functional given by its load vector `(v, ψ_i)`.
pub fn l2_project_dual(mass: &CsrMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    solve_spd(mass, rhs, DEFAULT_TOL)
}
