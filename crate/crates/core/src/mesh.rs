//! Structured P1 triangulations of rectangles with a marked control subdomain.

use std::io::Write;

use crate::error::{Error, Result};

const GEOM_TOL: f64 = 1e-12;

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Rect {
        Rect { x0, x1, y0, y1 }
    }

    pub fn unit() -> Rect {
        Rect::new(0.0, 1.0, 0.0, 1.0)
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Closed containment with tolerance.
    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        p[0] >= self.x0 - tol && p[0] <= self.x1 + tol && p[1] >= self.y0 - tol && p[1] <= self.y1 + tol
    }
}

/// Control subdomain data attached to a mesh by [`Mesh::mark_subdomain`].
#[derive(Debug, Clone, PartialEq)]
pub struct Subdomain {
    pub rect: Rect,
    /// Triangles whose closure lies in the closed subdomain.
    pub elements: Vec<usize>,
    /// Interior vertices lying in the closed subdomain (vertex indices, ascending).
    pub nodes: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub domain: Rect,
    pub nx: usize,
    pub ny: usize,
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    /// Vertex indices not on the boundary, ascending.
    pub interior_nodes: Vec<usize>,
    pub boundary_nodes: Vec<usize>,
    /// Maximal triangle diameter.
    pub h: f64,
    /// vertex index -> position in `interior_nodes`
    interior_index: Vec<Option<usize>>,
    omega: Option<Subdomain>,
    /// vertex index -> position in the subdomain node list
    omega_index: Vec<Option<usize>>,
}

impl Mesh {
    /// `nx * ny` cells, each split along its lower-left to upper-right diagonal.
    pub fn structured(domain: Rect, nx: usize, ny: usize) -> Result<Mesh> {
        if nx == 0 || ny == 0 {
            return Err(Error::Mesh(format!("cell counts must be positive, got {nx}x{ny}")));
        }
        if !(domain.width() > 0.0 && domain.height() > 0.0) {
            return Err(Error::Mesh(format!("domain extents must be positive: {domain:?}")));
        }
        let dx = domain.width() / nx as f64;
        let dy = domain.height() / ny as f64;
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                // pin the last line exactly onto the domain edge
                let x = if i == nx { domain.x1 } else { domain.x0 + i as f64 * dx };
                let y = if j == ny { domain.y1 } else { domain.y0 + j as f64 * dy };
                vertices.push([x, y]);
            }
        }
        let vid = |i: usize, j: usize| j * (nx + 1) + i;
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (v00, v10, v11, v01) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }
        let on_boundary = |p: &[f64; 2]| {
            let tol = GEOM_TOL * domain.width().max(domain.height()).max(1.0);
            (p[0] - domain.x0).abs() <= tol
                || (p[0] - domain.x1).abs() <= tol
                || (p[1] - domain.y0).abs() <= tol
                || (p[1] - domain.y1).abs() <= tol
        };
        let mut interior_nodes = Vec::new();
        let mut boundary_nodes = Vec::new();
        let mut interior_index = vec![None; vertices.len()];
        for (k, p) in vertices.iter().enumerate() {
            if on_boundary(p) {
                boundary_nodes.push(k);
            } else {
                interior_index[k] = Some(interior_nodes.len());
                interior_nodes.push(k);
            }
        }
        let n_vertices = vertices.len();
        let mut mesh = Mesh {
            domain,
            nx,
            ny,
            vertices,
            triangles,
            interior_nodes,
            boundary_nodes,
            h: 0.0,
            interior_index,
            omega: None,
            omega_index: vec![None; n_vertices],
        };
        mesh.h = (0..mesh.triangles.len()).map(|e| mesh.diameter(e)).fold(0.0, f64::max);
        Ok(mesh)
    }

    /// Marks the control subdomain; its corners must be mesh vertices.
    pub fn mark_subdomain(mut self, omega: Rect) -> Result<Mesh> {
        let d = self.domain;
        let scale = d.width().max(d.height()).max(1.0);
        if !(omega.width() > 0.0 && omega.height() > 0.0) {
            return Err(Error::Misaligned(format!("subdomain must have positive extents: {omega:?}")));
        }
        if !d.contains([omega.x0, omega.y0], GEOM_TOL * scale) || !d.contains([omega.x1, omega.y1], GEOM_TOL * scale) {
            return Err(Error::Misaligned(format!("subdomain {omega:?} leaves the domain {d:?}")));
        }
        let dx = d.width() / self.nx as f64;
        let dy = d.height() / self.ny as f64;
        let snap = |v: f64, origin: f64, step: f64, name: &str| -> Result<()> {
            let k = ((v - origin) / step).round();
            if (origin + k * step - v).abs() > GEOM_TOL * scale {
                return Err(Error::Misaligned(format!("{name} = {v} is not a grid line")));
            }
            Ok(())
        };
        snap(omega.x0, d.x0, dx, "x0")?;
        snap(omega.x1, d.x0, dx, "x1")?;
        snap(omega.y0, d.y0, dy, "y0")?;
        snap(omega.y1, d.y0, dy, "y1")?;

        let tol = GEOM_TOL * scale;
        let elements: Vec<usize> = (0..self.triangles.len())
            .filter(|&e| self.triangles[e].iter().all(|&v| omega.contains(self.vertices[v], tol)))
            .collect();
        let nodes: Vec<usize> = self
            .interior_nodes
            .iter()
            .copied()
            .filter(|&v| omega.contains(self.vertices[v], tol))
            .collect();
        let mut omega_index = vec![None; self.vertices.len()];
        for (k, &v) in nodes.iter().enumerate() {
            omega_index[v] = Some(k);
        }
        self.omega_index = omega_index;
        self.omega = Some(Subdomain { rect: omega, elements, nodes });
        Ok(self)
    }

    pub fn omega(&self) -> Result<&Subdomain> {
        self.omega.as_ref().ok_or(Error::SubdomainUnmarked)
    }

    pub fn has_omega(&self) -> bool {
        self.omega.is_some()
    }

    pub fn n_interior(&self) -> usize {
        self.interior_nodes.len()
    }

    pub fn n_omega(&self) -> usize {
        self.omega.as_ref().map_or(0, |o| o.nodes.len())
    }

    /// Position of a vertex in the interior numbering.
    pub fn interior_index(&self, vertex: usize) -> Option<usize> {
        self.interior_index[vertex]
    }

    /// Position of a vertex in the subdomain numbering.
    pub fn omega_index(&self, vertex: usize) -> Option<usize> {
        self.omega_index[vertex]
    }

    pub fn corners(&self, e: usize) -> [[f64; 2]; 3] {
        let t = self.triangles[e];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    /// Signed area (positive for counter-clockwise vertex order).
    pub fn signed_area(&self, e: usize) -> f64 {
        let [a, b, c] = self.corners(e);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn diameter(&self, e: usize) -> f64 {
        let [a, b, c] = self.corners(e);
        let d = |p: [f64; 2], q: [f64; 2]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
        d(a, b).max(d(b, c)).max(d(c, a))
    }

    /// Refines every cell into 2x2 (nested), keeping the subdomain if marked.
    pub fn refined(&self) -> Result<Mesh> {
        let fine = Mesh::structured(self.domain, 2 * self.nx, 2 * self.ny)?;
        match &self.omega {
            Some(o) => fine.mark_subdomain(o.rect),
            None => Ok(fine),
        }
    }

    /// Evaluates a P1 field given on interior nodes (zero on the boundary) at a point.
    pub fn evaluate_interior_field(&self, values: &[f64], p: [f64; 2]) -> f64 {
        let d = self.domain;
        let dx = d.width() / self.nx as f64;
        let dy = d.height() / self.ny as f64;
        let sx = ((p[0] - d.x0) / dx).clamp(0.0, self.nx as f64);
        let sy = ((p[1] - d.y0) / dy).clamp(0.0, self.ny as f64);
        let i = (sx.floor() as usize).min(self.nx - 1);
        let j = (sy.floor() as usize).min(self.ny - 1);
        let a = sx - i as f64;
        let b = sy - j as f64;
        let vid = |i: usize, j: usize| j * (self.nx + 1) + i;
        let val = |v: usize| self.interior_index[v].map_or(0.0, |k| values[k]);
        let (v00, v10, v11, v01) = (val(vid(i, j)), val(vid(i + 1, j)), val(vid(i + 1, j + 1)), val(vid(i, j + 1)));
        if a >= b {
            v00 + a * (v10 - v00) + b * (v11 - v10)
        } else {
            v00 + a * (v11 - v01) + b * (v01 - v00)
        }
    }

    /// Writes `vertices.csv` and `triangles.csv` style tables.
    pub fn write_csv<W: Write, V: Write>(&self, vertices: W, triangles: V) -> Result<()> {
        let mut w = csv::Writer::from_writer(vertices);
        w.write_record(["index", "x", "y", "boundary"])?;
        for (k, p) in self.vertices.iter().enumerate() {
            let boundary = self.interior_index[k].is_none();
            w.write_record([k.to_string(), crate::io::fmt(p[0]), crate::io::fmt(p[1]), (boundary as u8).to_string()])?;
        }
        w.flush()?;
        let in_omega: Vec<bool> = {
            let mut flags = vec![false; self.triangles.len()];
            if let Some(o) = &self.omega {
                for &e in &o.elements {
                    flags[e] = true;
                }
            }
            flags
        };
        let mut w = csv::Writer::from_writer(triangles);
        w.write_record(["index", "v0", "v1", "v2", "in_omega"])?;
        for (k, t) in self.triangles.iter().enumerate() {
            w.write_record([
                k.to_string(),
                t[0].to_string(),
                t[1].to_string(),
                t[2].to_string(),
                (in_omega[k] as u8).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
