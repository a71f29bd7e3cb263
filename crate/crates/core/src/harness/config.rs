//! JSON configuration files for problems and ladders.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::mesh::Rect;
use crate::optimizer::FistaOptions;
use crate::problem::ProblemSpec;

/// Either an absolute `α` or a fraction of `α₀` on the configured discretization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaSpec {
    Absolute(f64),
    Relative { relative_to_alpha_zero: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub nx: usize,
    #[serde(default)]
    pub ny: Option<usize>,
    #[serde(rename = "M")]
    pub steps: usize,
}

impl Resolution {
    pub fn new(nx: usize, steps: usize) -> Resolution {
        Resolution { nx, ny: None, steps }
    }

    pub fn ny(&self) -> usize {
        self.ny.unwrap_or(self.nx)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub tol_bound: Option<f64>,
    #[serde(default)]
    pub tol_align: Option<f64>,
    #[serde(default)]
    pub restart: Option<bool>,
    #[serde(default)]
    pub accelerate: Option<bool>,
}

impl OptimizerConfig {
    pub fn options(&self) -> FistaOptions {
        let d = FistaOptions::default();
        FistaOptions {
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            tol_bound: self.tol_bound.or(d.tol_bound),
            tol_align: self.tol_align.unwrap_or(d.tol_align),
            restart: self.restart.unwrap_or(d.restart),
            accelerate: self.accelerate.unwrap_or(d.accelerate),
            ..d
        }
    }
}

/// Problem configuration as read from disk. Expressions stay as text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub domain: Rect,
    pub omega: Rect,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub control_window: (f64, f64),
    pub alpha: AlphaSpec,
    pub beta: f64,
    pub f: String,
    pub u_d: String,
    pub u0: String,
    #[serde(rename = "u_T")]
    pub u_t: String,
    pub discretization: Resolution,
    #[serde(default)]
    pub optimizer: Option<OptimizerConfig>,
    /// manufactured state
    #[serde(default)]
    pub u_exact: Option<String>,
    /// manufactured adjoint
    #[serde(default)]
    pub z_exact: Option<String>,
    /// source of the manufactured adjoint, `-∂_t z - Δz`
    #[serde(default)]
    pub g: Option<String>,
}

pub(crate) fn parse_field(field: &str, text: &str) -> Result<Expr> {
    Expr::parse(text).map_err(|e| Error::Field { field: field.to_string(), source: Box::new(e) })
}

impl Config {
    pub fn from_json(text: &str) -> Result<Config> {
        let c: Config = serde_json::from_str(text)?;
        c.check()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Config> {
        Config::from_json(&std::fs::read_to_string(path)?)
    }

    fn check(&self) -> Result<()> {
        for (name, text) in [("f", &self.f), ("u_d", &self.u_d), ("u0", &self.u0), ("u_T", &self.u_t)] {
            parse_field(name, text)?;
        }
        for (name, text) in [("u_exact", &self.u_exact), ("z_exact", &self.z_exact), ("g", &self.g)] {
            if let Some(t) = text {
                parse_field(name, t)?;
            }
        }
        if let AlphaSpec::Relative { relative_to_alpha_zero: r } = self.alpha {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Config(format!("relative alpha must be positive, got {r}")));
            }
        }
        self.spec(1.0)?.validate()
    }

    /// Problem with the given absolute `α`.
    pub fn spec(&self, alpha: f64) -> Result<ProblemSpec> {
        Ok(ProblemSpec {
            domain: self.domain,
            omega: self.omega,
            t_end: self.t_end,
            window: self.control_window,
            source: parse_field("f", &self.f)?,
            target: parse_field("u_d", &self.u_d)?,
            initial: parse_field("u0", &self.u0)?,
            terminal_target: parse_field("u_T", &self.u_t)?,
            alpha,
            beta: self.beta,
        })
    }

    pub fn options(&self) -> FistaOptions {
        self.optimizer.as_ref().map_or_else(FistaOptions::default, OptimizerConfig::options)
    }

    pub fn manufactured(&self) -> Result<Manufactured> {
        let get = |name: &str, v: &Option<String>| {
            v.as_deref()
                .ok_or_else(|| Error::Config(format!("verify-state needs `{name}`")))
                .and_then(|t| parse_field(name, t))
        };
        Ok(Manufactured { u: get("u_exact", &self.u_exact)?, z: get("z_exact", &self.z_exact)?, g: get("g", &self.g)? })
    }
}

/// Exact state `u`, exact adjoint `z` and its source `g`.
#[derive(Debug, Clone)]
pub struct Manufactured {
    pub u: Expr,
    pub z: Expr,
    pub g: Expr,
}

/// Which discretization parameter a ladder refines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Vary {
    H,
    Tau,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderSpec {
    pub points: Vec<Resolution>,
    /// finest discretization; not needed when an exact solution is known
    #[serde(default)]
    pub reference: Option<Resolution>,
    pub vary: Vary,
    /// smooth `v(x, y, t)` for the control pairing error
    #[serde(default)]
    pub test_function: Option<String>,
}

impl LadderSpec {
    pub fn from_json(text: &str) -> Result<LadderSpec> {
        let l: LadderSpec = serde_json::from_str(text)?;
        l.check()?;
        Ok(l)
    }

    pub fn load(path: &Path) -> Result<LadderSpec> {
        LadderSpec::from_json(&std::fs::read_to_string(path)?)
    }

    fn check(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::Config("ladder has no points".into()));
        }
        if let Some(v) = &self.test_function {
            parse_field("test_function", v)?;
        }
        let key = |r: &Resolution| match self.vary {
            Vary::H => (r.nx.min(r.ny()), 0),
            Vary::Tau => (r.steps, 0),
            Vary::Both => (r.nx.min(r.ny()), r.steps),
        };
        if self.points.windows(2).any(|w| key(&w[1]) < key(&w[0])) {
            return Err(Error::Config("ladder points must be ordered from coarse to fine".into()));
        }
        if let Some(r) = &self.reference {
            for p in &self.points {
                let nested = r.nx % p.nx == 0 && r.ny() % p.ny() == 0 && r.steps % p.steps == 0;
                if !nested {
                    return Err(Error::Config(format!(
                        "reference {}x{}/M={} is not a nested refinement of {}x{}/M={}",
                        r.nx,
                        r.ny(),
                        r.steps,
                        p.nx,
                        p.ny(),
                        p.steps
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn test_function(&self) -> Result<Option<Expr>> {
        self.test_function.as_deref().map(|t| parse_field("test_function", t)).transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DESK: &str = r#"{
        "domain": {"x0": 0, "x1": 1, "y0": 0, "y1": 1},
        "omega": {"x0": 0.25, "x1": 0.75, "y0": 0.25, "y1": 0.75},
        "T": 1.0,
        "control_window": [0.25, 0.75],
        "alpha": {"relative_to_alpha_zero": 0.3},
        "beta": 1.0,
        "f": "0",
        "u_d": "sin(pi*x)*sin(pi*y)",
        "u0": "0",
        "u_T": "0",
        "discretization": {"nx": 8, "M": 16}
    }"#;

    #[test]
    fn reads_config() {
        let c = Config::from_json(DESK).unwrap();
        assert_eq!(c.alpha, AlphaSpec::Relative { relative_to_alpha_zero: 0.3 });
        assert_eq!(c.discretization, Resolution::new(8, 16));
        assert_eq!(c.options().max_iter, 5000);
        let absolute = DESK.replace(r#"{"relative_to_alpha_zero": 0.3}"#, "0.02");
        assert_eq!(Config::from_json(&absolute).unwrap().alpha, AlphaSpec::Absolute(0.02));
    }

    #[test]
    fn malformed_expression_reports_field_and_offset() {
        let bad = DESK.replace(r#""u_d": "sin(pi*x)*sin(pi*y)""#, r#""u_d": "x*+y""#);
        let e = Config::from_json(&bad).unwrap_err();
        assert_eq!(e.field(), Some("u_d"));
        assert_eq!(e.offset(), Some(2));
    }

    #[test]
    fn missing_alpha_is_rejected() {
        let bad = DESK.replace(r#""alpha": {"relative_to_alpha_zero": 0.3},"#, "");
        assert!(Config::from_json(&bad).is_err());
    }

    #[test]
    fn ladder_checks() {
        let ok = r#"{"points": [{"nx": 4, "M": 8}, {"nx": 8, "M": 8}], "reference": {"nx": 16, "M": 8}, "vary": "h"}"#;
        assert!(LadderSpec::from_json(ok).is_ok());
        let unordered = r#"{"points": [{"nx": 8, "M": 8}, {"nx": 4, "M": 8}], "vary": "h"}"#;
        assert!(LadderSpec::from_json(unordered).is_err());
        let not_nested = r#"{"points": [{"nx": 6, "M": 8}], "reference": {"nx": 16, "M": 8}, "vary": "h"}"#;
        assert!(LadderSpec::from_json(not_nested).is_err());
    }
}
