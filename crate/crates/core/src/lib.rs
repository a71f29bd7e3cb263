//! Sparse-in-time optimal control of the heat equation with measure-valued
//! controls, discretized by a Petrov–Galerkin space-time scheme.

pub mod adjoint;
pub mod control;
pub mod error;
pub mod expr;
pub mod fem;
pub mod harness;
pub mod io;
pub mod mesh;
pub mod optimizer;
pub mod problem;
pub mod state;
pub mod time_grid;

pub use error::{Error, Result};
