//! Run description shared by the command line and `key=value` config files.
//!
//! Keys are the long flag names without the leading dashes (`power-index`,
//! `t-final`, ...); `_` is accepted in place of `-`. Blank lines and lines
//! starting with `#` are ignored.

use std::path::{Path, PathBuf};

use super::convergence::Level;
use crate::error::{Error, Result};
use crate::model::{Coupling, DiffusionMode, PhysicalParams};
use crate::solver::{DiffusivityPolicy, Linearization, Method, SolverConfig};
use crate::stab::StabConsts;

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub method: Method,
    pub re: f64,
    pub power_index: f64,
    pub theta: f64,
    pub coupling: Coupling,
    pub grid: usize,
    pub levels: Vec<usize>,
    /// Time step; `None` means `1/n` on each level.
    pub dt: Option<f64>,
    pub t_final: f64,
    pub alpha: f64,
    pub stab: StabConsts,
    /// Strong-coupling consistency `K`, density and exponent `B`.
    pub k: f64,
    pub rho: f64,
    pub b: f64,
    pub diffusivity: DiffusivityPolicy,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub linearization: Linearization,
    pub linear_tol: f64,
    pub out: Option<PathBuf>,
    pub fields_out: Option<PathBuf>,
}

impl Default for RunSpec {
    fn default() -> Self {
        let strong = PhysicalParams::strong(1.0);
        RunSpec {
            method: Method::AsgsDynamic,
            re: 1000.0,
            power_index: 1.0,
            theta: 1.0,
            coupling: Coupling::OneWay,
            grid: 10,
            levels: vec![10, 20, 40, 80],
            dt: None,
            t_final: 1.0,
            alpha: crate::model::DEFAULT_REACTION,
            stab: StabConsts::default(),
            k: strong.consistency,
            rho: strong.rho,
            b: strong.coupling_exponent,
            diffusivity: DiffusivityPolicy::default(),
            picard_tol: 1e-8,
            picard_max: 50,
            linearization: Linearization::Picard,
            linear_tol: 1e-10,
            out: None,
            fields_out: None,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'")))
}

pub fn parse_coupling(v: &str) -> Result<Coupling> {
    match v {
        "one-way" | "oneway" => Ok(Coupling::OneWay),
        "strong" => Ok(Coupling::Strong),
        _ => Err(Error::Config(format!(
            "coupling: expected one-way or strong, got '{v}'"
        ))),
    }
}

pub fn parse_levels(v: &str) -> Result<Vec<usize>> {
    let levels: Vec<usize> = v
        .split(',')
        .map(|s| num("levels", s.trim()))
        .collect::<Result<_>>()?;
    if levels.is_empty() || levels.contains(&0) {
        return Err(Error::Config(format!(
            "levels: expected positive integers, got '{v}'"
        )));
    }
    Ok(levels)
}

/// Splits `key=value` lines; the line number is reported on malformed input.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected key=value, got '{line}'", i + 1))
        })?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

impl RunSpec {
    /// Sets one option by name; unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.replace('_', "-");
        let v = value.trim();
        match key.as_str() {
            "method" => self.method = v.parse().map_err(|e: Error| Error::Config(e.to_string()))?,
            "re" => self.re = num(&key, v)?,
            "power-index" => self.power_index = num(&key, v)?,
            "theta" => self.theta = num(&key, v)?,
            "coupling" => self.coupling = parse_coupling(v)?,
            "grid" => self.grid = num(&key, v)?,
            "levels" => self.levels = parse_levels(v)?,
            "dt" => self.dt = Some(num(&key, v)?),
            "t-final" => self.t_final = num(&key, v)?,
            "alpha" => self.alpha = num(&key, v)?,
            "c1" => self.stab.c1 = num(&key, v)?,
            "c2" => self.stab.c2 = num(&key, v)?,
            "c3" => self.stab.c3 = num(&key, v)?,
            "k" => self.k = num(&key, v)?,
            "rho" => self.rho = num(&key, v)?,
            "b" => self.b = num(&key, v)?,
            "diffusivity" => {
                self.diffusivity = match v {
                    "max" => DiffusivityPolicy::Max,
                    "mean" => DiffusivityPolicy::Mean,
                    _ => {
                        return Err(Error::Config(format!(
                            "diffusivity: expected max or mean, got '{v}'"
                        )))
                    }
                }
            }
            "picard-tol" => self.picard_tol = num(&key, v)?,
            "picard-max" => self.picard_max = num(&key, v)?,
            "linearization" => {
                self.linearization = v.parse().map_err(|e: Error| Error::Config(e.to_string()))?
            }
            "linear-tol" => self.linear_tol = num(&key, v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            "fields-out" => self.fields_out = Some(PathBuf::from(v)),
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Applies every pair of a config file's text in order.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (k, v) in parse_pairs(text)? {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    /// Checks the options that the solver itself does not.
    pub fn validate(&self) -> Result<()> {
        if self.theta != 0.0 && self.theta != 1.0 {
            return Err(Error::Config(format!(
                "theta must be 0 or 1, got {}",
                self.theta
            )));
        }
        if !(self.re > 0.0) {
            return Err(Error::Config(format!(
                "re must be positive, got {}",
                self.re
            )));
        }
        if !(self.t_final > 0.0) {
            return Err(Error::Config(format!(
                "t-final must be positive, got {}",
                self.t_final
            )));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return Err(Error::Config(format!("dt must be positive, got {dt}")));
            }
        }
        self.params().validate()?;
        self.stab.validate()
    }

    pub fn params(&self) -> PhysicalParams {
        match self.coupling {
            Coupling::OneWay => PhysicalParams {
                reaction: self.alpha,
                ..PhysicalParams::one_way(self.re, self.power_index)
            },
            Coupling::Strong => PhysicalParams {
                rho: self.rho,
                consistency: self.k,
                coupling_exponent: self.b,
                reaction: self.alpha,
                diffusion: DiffusionMode::Variable,
                reynolds: self.re,
                ..PhysicalParams::strong(self.power_index)
            },
        }
    }

    /// Step size used on a grid with `n` subdivisions.
    pub fn dt_for(&self, n: usize) -> f64 {
        self.dt.unwrap_or(1.0 / n as f64)
    }

    pub fn solver_config(&self, dt: f64) -> SolverConfig {
        SolverConfig {
            picard_tol: self.picard_tol,
            picard_max: self.picard_max,
            linearization: self.linearization,
            linear_tol: self.linear_tol,
            stab: self.stab,
            diffusivity: self.diffusivity,
            ..SolverConfig::new(self.method, self.theta, dt, self.t_final)
        }
    }

    pub fn study_levels(&self) -> Vec<Level> {
        self.levels
            .iter()
            .map(|&n| Level {
                n,
                dt: self.dt_for(n),
            })
            .collect()
    }
}
