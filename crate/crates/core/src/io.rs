//! CSV export of discrete fields. Floats are written with 17 significant digits.

use std::io::Write;

use crate::adjoint::DiscreteAdjoint;
use crate::control::DiscreteControl;
use crate::error::Result;
use crate::problem::Discretization;
use crate::state::DiscreteState;

/// Shortest format that round-trips: 17 significant digits in scientific notation.
pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Columns `m, t_start, t_end, node, value`; the terminal block uses `m = M + 1`
/// with `t_start = t_end = T`. Node indices refer to mesh vertices.
pub fn write_state<W: Write>(disc: &Discretization, u: &DiscreteState, out: W) -> Result<()> {
    let grid = &disc.grid;
    let interior = &disc.mesh.interior_nodes;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["m", "t_start", "t_end", "node", "value"])?;
    let steps = grid.steps();
    for m in 1..=steps + 1 {
        let (a, b, vals) = if m <= steps {
            (grid.node(m - 1), grid.node(m), u.on_interval(m))
        } else {
            (grid.t_end(), grid.t_end(), &u.terminal[..])
        };
        for (k, v) in vals.iter().enumerate() {
            w.write_record([m.to_string(), fmt(a), fmt(b), interior[k].to_string(), fmt(*v)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Columns `m, t_m, node, value`.
pub fn write_adjoint<W: Write>(disc: &Discretization, phi: &DiscreteAdjoint, out: W) -> Result<()> {
    let interior = &disc.mesh.interior_nodes;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["m", "t_m", "node", "value"])?;
    for (m, vals) in phi.nodes.iter().enumerate() {
        for (k, v) in vals.iter().enumerate() {
            w.write_record([m.to_string(), fmt(disc.grid.node(m)), interior[k].to_string(), fmt(*v)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Columns `m, t_m, node, value` over the subdomain nodes.
pub fn write_control<W: Write>(disc: &Discretization, q: &DiscreteControl, out: W) -> Result<()> {
    let omega = &disc.mesh.omega().expect("marked subdomain").nodes;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["m", "t_m", "node", "value"])?;
    for (&m, g) in q.nodes.iter().zip(&q.groups) {
        for (k, v) in g.iter().enumerate() {
            w.write_record([m.to_string(), fmt(disc.grid.node(m)), omega[k].to_string(), fmt(*v)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Columns `m, t_m, norm`, one row per group.
pub fn write_group_norms<W: Write>(disc: &Discretization, q: &DiscreteControl, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["m", "t_m", "norm"])?;
    for (&m, n) in q.nodes.iter().zip(q.group_norms(disc)) {
        w.write_record([m.to_string(), fmt(disc.grid.node(m)), fmt(n)])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes rows of `(label, values...)` under a header.
pub fn write_table<W: Write>(header: &[&str], rows: &[Vec<String>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}
