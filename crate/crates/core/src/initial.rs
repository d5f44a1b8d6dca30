//! Built-in initial magnetisation fields.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Initial data selector. The two named variants are the reference
/// experiments' fields; `Constant` is mainly useful for oracle checks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialData {
    /// `(cos 2 pi y, 0, sin 2 pi x)`.
    Simulation1,
    /// `(-y, x, cos 2 pi x)`.
    Simulation2,
    Constant([f64; 3]),
}

impl InitialData {
    pub fn value(&self, x: f64, y: f64) -> [f64; 3] {
        match self {
            InitialData::Simulation1 => [(2.0 * PI * y).cos(), 0.0, (2.0 * PI * x).sin()],
            InitialData::Simulation2 => [-y, x, (2.0 * PI * x).cos()],
            InitialData::Constant(c) => *c,
        }
    }

    /// Gradient of each component: `[[d/dx, d/dy]; 3]`.
    pub fn gradient(&self, x: f64, y: f64) -> [[f64; 2]; 3] {
        match self {
            InitialData::Simulation1 => [
                [0.0, -2.0 * PI * (2.0 * PI * y).sin()],
                [0.0, 0.0],
                [2.0 * PI * (2.0 * PI * x).cos(), 0.0],
            ],
            InitialData::Simulation2 => [
                [0.0, -1.0],
                [1.0, 0.0],
                [-2.0 * PI * (2.0 * PI * x).sin(), 0.0],
            ],
            InitialData::Constant(_) => [[0.0; 2]; 3],
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "simulation1" => Ok(InitialData::Simulation1),
            "simulation2" => Ok(InitialData::Simulation2),
            _ => {
                if let Some(rest) = s.strip_prefix("constant:") {
                    let parts: Vec<&str> = rest.split(',').collect();
                    if parts.len() != 3 {
                        return Err(Error::Parse(format!(
                            "constant initial data needs 3 components, got `{rest}`"
                        )));
                    }
                    let mut c = [0.0; 3];
                    for (i, p) in parts.iter().enumerate() {
                        c[i] = p
                            .trim()
                            .parse()
                            .map_err(|e| Error::Parse(format!("bad component `{p}`: {e}")))?;
                    }
                    Ok(InitialData::Constant(c))
                } else {
                    Err(Error::Parse(format!(
                        "unknown initial data `{s}` (expected simulation1, simulation2, or constant:x,y,z)"
                    )))
                }
            }
        }
    }
}

impl std::fmt::Display for InitialData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitialData::Simulation1 => write!(f, "simulation1"),
            InitialData::Simulation2 => write!(f, "simulation2"),
            InitialData::Constant(c) => write!(f, "constant:{},{},{}", c[0], c[1], c[2]),
        }
    }
}
