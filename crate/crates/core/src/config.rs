//! Flat key-value run configuration with named experiment presets.
//!
//! The format is one `key = value` pair per line; `#` starts a comment.
//! `preset = simulation1 | simulation2` expands to a full coefficient
//! set and initial data before any explicit keys are applied, so
//! explicit keys override preset values regardless of order.

use crate::error::{Error, Result};
use crate::fem::Coefficients;
use crate::initial::InitialData;
use crate::mesh::Rectangle;
use crate::sparse::SolverKind;
use crate::stepper::{Bdf2Init, Scheme, SchemeConfig};
use crate::study::Coupling;
use std::path::PathBuf;

/// Everything a `run` or `study` invocation needs.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub coeff: Coefficients,
    pub initial: InitialData,
    pub domain: Rectangle,
    pub n: usize,
    pub k: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub bdf2_init: Bdf2Init,
    pub solver: SolverKind,
    pub tol: f64,
    pub levels: usize,
    pub coupling: Coupling,
    pub out_dir: PathBuf,
    pub emit_energy_csv: bool,
    pub emit_rate_csv: bool,
    /// Emit a field VTK snapshot every this many steps; 0 disables.
    pub vtk_stride: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            preset: None,
            coeff: Coefficients {
                gamma: 1.0,
                alpha: 1.0,
                sigma: 1.0,
                kappa: 1.0,
                mu: 1.0,
            },
            initial: InitialData::Simulation1,
            domain: Rectangle::symmetric_unit(),
            n: 32,
            k: 1e-3,
            t_end: 0.1,
            scheme: Scheme::Euler,
            bdf2_init: Bdf2Init::EulerSubsteps,
            solver: SolverKind::Lu,
            tol: 1e-10,
            levels: 4,
            coupling: Coupling::FixedK { k: 1e-3 },
            out_dir: PathBuf::from("out"),
            emit_energy_csv: true,
            emit_rate_csv: true,
            vtk_stride: 0,
        }
    }
}

impl RunConfig {
    /// The per-run stepper configuration implied by this config.
    pub fn scheme_config(&self) -> SchemeConfig {
        SchemeConfig {
            coeff: self.coeff,
            k: self.k,
            t_end: self.t_end,
            scheme: self.scheme,
            bdf2_init: self.bdf2_init,
            solver: self.solver,
            tol: self.tol,
        }
    }

    /// Applies a named preset's coefficients and initial data.
    pub fn apply_preset(&mut self, name: &str) -> Result<()> {
        match name {
            "simulation1" => {
                self.coeff = Coefficients {
                    gamma: 50.0,
                    alpha: 0.5,
                    sigma: 0.5,
                    kappa: 1.0,
                    mu: 1.0,
                };
                self.initial = InitialData::Simulation1;
            }
            "simulation2" => {
                self.coeff = Coefficients {
                    gamma: 100.0,
                    alpha: 0.1,
                    sigma: 0.1,
                    kappa: 2.0,
                    mu: 1.0,
                };
                self.initial = InitialData::Simulation2;
            }
            _ => {
                return Err(Error::Parse(format!(
                    "unknown preset `{name}` (available: {})",
                    PRESET_NAMES.join(", ")
                )));
            }
        }
        self.preset = Some(name.to_string());
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let constraint = |key: &'static str, message: String| Error::Config {
            line: 0,
            key: key.to_string(),
            message,
        };
        if !(self.k > 0.0 && self.k <= self.t_end) {
            return Err(constraint(
                "k",
                format!(
                    "constraint 0 < k <= T violated: k = {}, T = {}",
                    self.k, self.t_end
                ),
            ));
        }
        if self.n == 0 {
            return Err(constraint("n", "n must be >= 1".into()));
        }
        if self.levels < 1 {
            return Err(constraint("levels", "levels must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(constraint("tol", "tol must be positive".into()));
        }
        if let Coupling::Proportional { c } = self.coupling {
            if !(c > 0.0) {
                return Err(constraint(
                    "coupling",
                    "proportional coupling constant must be positive".into(),
                ));
            }
        }
        self.coeff
            .validate()
            .map_err(|e| constraint("gamma", e.to_string()))?;
        Ok(())
    }
}

pub const PRESET_NAMES: [&str; 2] = ["simulation1", "simulation2"];

fn parse_coupling(value: &str) -> std::result::Result<Coupling, String> {
    if value == "fixed" {
        // Resolved against `k` after all keys are read.
        return Ok(Coupling::FixedK { k: f64::NAN });
    }
    if let Some(c) = value.strip_prefix("proportional:") {
        let c: f64 = c
            .trim()
            .parse()
            .map_err(|e| format!("bad coupling constant: {e}"))?;
        return Ok(Coupling::Proportional { c });
    }
    Err(format!(
        "expected `fixed` or `proportional:<c>`, got `{value}`"
    ))
}

/// Parses a flat key-value config document into a validated `RunConfig`.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut coupling_fixed = true;

    // Preset expansion first, so explicit keys override it.
    for (idx, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let (key, value) = split_kv(line, idx + 1)?;
        if key == "preset" {
            cfg.apply_preset(value).map_err(|e| Error::Config {
                line: idx + 1,
                key: key.to_string(),
                message: e.to_string(),
            })?;
        }
    }

    for (idx, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let (key, value) = split_kv(line, lineno)?;
        let bad = |message: String| Error::Config {
            line: lineno,
            key: key.to_string(),
            message,
        };
        let num = |v: &str| -> Result<f64> {
            v.parse()
                .map_err(|e| bad(format!("expected a number, got `{v}` ({e})")))
        };
        match key {
            "preset" => {}
            "gamma" => cfg.coeff.gamma = num(value)?,
            "alpha" => cfg.coeff.alpha = num(value)?,
            "sigma" => cfg.coeff.sigma = num(value)?,
            "kappa" => cfg.coeff.kappa = num(value)?,
            "mu" => cfg.coeff.mu = num(value)?,
            "initial" => cfg.initial = InitialData::parse(value).map_err(|e| bad(e.to_string()))?,
            "x_min" => cfg.domain.x_min = num(value)?,
            "x_max" => cfg.domain.x_max = num(value)?,
            "y_min" => cfg.domain.y_min = num(value)?,
            "y_max" => cfg.domain.y_max = num(value)?,
            "n" => {
                cfg.n = value
                    .parse()
                    .map_err(|e| bad(format!("expected a positive integer: {e}")))?
            }
            "k" => cfg.k = num(value)?,
            "T" | "t_end" => cfg.t_end = num(value)?,
            "scheme" => {
                cfg.scheme = match value {
                    "euler" => Scheme::Euler,
                    "bdf2" => Scheme::Bdf2,
                    _ => return Err(bad(format!("expected euler or bdf2, got `{value}`"))),
                }
            }
            "bdf2_init" => {
                cfg.bdf2_init = match value {
                    "euler_substeps" => Bdf2Init::EulerSubsteps,
                    "implicit" => Bdf2Init::ImplicitOneStep,
                    _ => {
                        return Err(bad(format!(
                            "expected euler_substeps or implicit, got `{value}`"
                        )))
                    }
                }
            }
            "solver" => {
                cfg.solver = match value {
                    "lu" => SolverKind::Lu,
                    "gmres" => SolverKind::Gmres,
                    _ => return Err(bad(format!("expected lu or gmres, got `{value}`"))),
                }
            }
            "tol" => cfg.tol = num(value)?,
            "levels" => {
                cfg.levels = value
                    .parse()
                    .map_err(|e| bad(format!("expected a positive integer: {e}")))?
            }
            "coupling" => {
                cfg.coupling = parse_coupling(value).map_err(bad)?;
                coupling_fixed = matches!(cfg.coupling, Coupling::FixedK { .. });
            }
            "out" | "out_dir" => cfg.out_dir = PathBuf::from(value),
            "emit_energy_csv" => cfg.emit_energy_csv = parse_bool(value).map_err(bad)?,
            "emit_rate_csv" => cfg.emit_rate_csv = parse_bool(value).map_err(bad)?,
            "vtk_stride" => {
                cfg.vtk_stride = value
                    .parse()
                    .map_err(|e| bad(format!("expected a nonnegative integer: {e}")))?
            }
            _ => return Err(bad("unknown key".into())),
        }
    }

    if coupling_fixed {
        cfg.coupling = Coupling::FixedK { k: cfg.k };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => line[..i].trim(),
        None => line.trim(),
    }
}

fn split_kv(line: &str, lineno: usize) -> Result<(&str, &str)> {
    match line.split_once('=') {
        Some((k, v)) => Ok((k.trim(), v.trim())),
        None => Err(Error::Config {
            line: lineno,
            key: line.to_string(),
            message: "expected `key = value`".into(),
        }),
    }
}

fn parse_bool(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected a boolean, got `{v}`")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_simulation1_expands() {
        let cfg = parse_config("preset = simulation1\n").unwrap();
        assert_eq!(cfg.coeff.gamma, 50.0);
        assert_eq!(cfg.coeff.alpha, 0.5);
        assert_eq!(cfg.coeff.sigma, 0.5);
        assert_eq!(cfg.coeff.kappa, 1.0);
        assert_eq!(cfg.coeff.mu, 1.0);
        assert_eq!(cfg.initial, InitialData::Simulation1);
    }

    #[test]
    fn preset_simulation2_expands() {
        let cfg = parse_config("preset = simulation2").unwrap();
        assert_eq!(cfg.coeff.gamma, 100.0);
        assert_eq!(cfg.coeff.alpha, 0.1);
        assert_eq!(cfg.coeff.sigma, 0.1);
        assert_eq!(cfg.coeff.kappa, 2.0);
        assert_eq!(cfg.coeff.mu, 1.0);
        assert_eq!(cfg.initial, InitialData::Simulation2);
    }

    #[test]
    fn explicit_keys_override_preset_regardless_of_order() {
        let cfg = parse_config("gamma = 7\npreset = simulation1\n").unwrap();
        assert_eq!(cfg.coeff.gamma, 7.0);
        assert_eq!(cfg.coeff.alpha, 0.5);
    }

    #[test]
    fn zero_k_names_the_constraint() {
        let err = parse_config("k = 0\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("0 < k <= T"), "{msg}");
    }

    #[test]
    fn unknown_key_reports_line_and_key() {
        let err = parse_config("n = 4\nwat = 3\n").unwrap_err();
        match err {
            Error::Config { line, key, .. } => {
                assert_eq!(line, 2);
                assert_eq!(key, "wat");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn type_mismatch_reports_key() {
        let err = parse_config("k = fast\n").unwrap_err();
        assert!(err.to_string().contains('k'));
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let cfg = parse_config("# header\n\nn = 8 # trailing\n").unwrap();
        assert_eq!(cfg.n, 8);
    }

    #[test]
    fn coupling_forms() {
        let cfg = parse_config("k = 0.01\ncoupling = proportional:0.05\n").unwrap();
        assert_eq!(cfg.coupling, Coupling::Proportional { c: 0.05 });
        let cfg = parse_config("k = 0.01\ncoupling = fixed\n").unwrap();
        assert_eq!(cfg.coupling, Coupling::FixedK { k: 0.01 });
        assert!(parse_config("coupling = sometimes\n").is_err());
    }

    #[test]
    fn scheme_and_solver_parse() {
        let cfg = parse_config("scheme = bdf2\nsolver = gmres\nbdf2_init = implicit\n").unwrap();
        assert_eq!(cfg.scheme, Scheme::Bdf2);
        assert_eq!(cfg.solver, SolverKind::Gmres);
        assert_eq!(cfg.bdf2_init, Bdf2Init::ImplicitOneStep);
    }
}
