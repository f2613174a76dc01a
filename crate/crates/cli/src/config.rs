//! JSON run configuration.
//!
//! A config describes either an epidemic (keys `S0`, `I0`, `R0`, `N_pop`,
//! `beta`, `nu` and `phi` or `pvf`) or a pure measure equation (key `mu0`
//! with `phi` or `pvf`), plus the run settings shared by every mode.

use std::path::PathBuf;

use clap::ValueEnum;
use mde_core::{
    DiscreteMeasure, EpidemicParams, EpidemicState, GridSpec, Interval, PiecewiseLinearFn, PvfSpec,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Simulate,
    Distance,
    Convergence,
    Validate,
}

/// A rate given either as a constant or as a `[[alpha, value], ...]` table.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum RateSpec {
    Constant(f64),
    Table(PiecewiseLinearFn),
}

impl RateSpec {
    pub fn to_fn(&self) -> Result<PiecewiseLinearFn, mde_core::Error> {
        match self {
            RateSpec::Constant(c) => PiecewiseLinearFn::constant(*c),
            RateSpec::Table(f) => Ok(f.clone()),
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        match self {
            RateSpec::Constant(c) => Some(*c),
            RateSpec::Table(f) => {
                let p = f.points();
                p.iter().all(|q| q.1 == p[0].1).then_some(p[0].1)
            }
        }
    }
}

/// Number or list of grid sizes.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum GridSizes {
    One(u32),
    Many(Vec<u32>),
}

impl GridSizes {
    pub fn values(&self) -> Vec<u32> {
        match self {
            GridSizes::One(n) => vec![*n],
            GridSizes::Many(ns) => ns.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// Barycenter field against the exact splitting solution.
    Splitting,
    /// Cumulative field from a point mass against the self-similar solution.
    SelfSimilar,
    /// Epidemic with constant rates against the classical SIR model.
    ClassicalSir,
    /// Epidemic with the barycenter field and `I0` at the origin against the
    /// SIR model with rates read along `α = t`.
    TimeDependentSir,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceSettings {
    pub a: Option<PathBuf>,
    pub b: Option<PathBuf>,
    #[serde(default)]
    pub plan: bool,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSettings {
    pub reference: Reference,
    /// RK4 step for the epidemic references; defaults to `Δ_N / 10` of the
    /// finest grid.
    pub h: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSettings {
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    #[serde(default = "default_resolution")]
    pub resolution: u32,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_pairs() -> usize {
    50
}

fn default_resolution() -> u32 {
    200
}

fn default_tolerance() -> f64 {
    0.05
}

impl Default for ValidateSettings {
    fn default() -> Self {
        Self {
            pairs: default_pairs(),
            resolution: default_resolution(),
            tolerance: default_tolerance(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    #[serde(rename = "S0")]
    pub s0: Option<f64>,
    #[serde(rename = "R0")]
    pub r0: Option<f64>,
    #[serde(rename = "I0")]
    pub i0: Option<Vec<[f64; 2]>>,
    #[serde(rename = "N_pop")]
    pub n_pop: Option<f64>,
    pub beta: Option<RateSpec>,
    pub nu: Option<RateSpec>,
    pub alpha_box: Option<[f64; 2]>,
    pub mu0: Option<Vec<[f64; 2]>>,
    pub phi: Option<PiecewiseLinearFn>,
    pub pvf: Option<PvfSpec>,
    #[serde(rename = "T")]
    pub t_final: Option<f64>,
    #[serde(rename = "N_grid")]
    pub n_grid: Option<GridSizes>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    pub distance: Option<DistanceSettings>,
    pub convergence: Option<ConvergenceSettings>,
    pub validate: Option<ValidateSettings>,
}

fn default_stride() -> usize {
    1
}

/// Parses a config without checking cross-field constraints.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

fn missing(field: &str) -> CliError {
    CliError::Config(format!("missing field `{field}`"))
}

fn invalid(field: &str, why: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("invalid `{field}`: {why}"))
}

fn measure_from(field: &str, atoms: &[[f64; 2]]) -> Result<DiscreteMeasure, CliError> {
    DiscreteMeasure::from_atoms(atoms.iter().map(|[x, m]| (*x, *m))).map_err(|e| invalid(field, e))
}

/// The initial data of the run.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Epidemic {
        params: EpidemicParams,
        initial: EpidemicState,
    },
    Pure {
        mu0: DiscreteMeasure,
        pvf: PvfSpec,
    },
}

impl RunConfig {
    pub fn is_epidemic(&self) -> bool {
        self.s0.is_some() || self.i0.is_some()
    }

    pub fn mode(&self) -> Result<Mode, CliError> {
        self.mode.ok_or_else(|| missing("mode"))
    }

    pub fn t_final(&self) -> Result<f64, CliError> {
        let t = self.t_final.ok_or_else(|| missing("T"))?;
        if !t.is_finite() || t <= 0.0 {
            return Err(invalid("T", format!("{t} must be positive")));
        }
        Ok(t)
    }

    pub fn grids(&self) -> Result<Vec<GridSpec>, CliError> {
        let sizes = self
            .n_grid
            .as_ref()
            .ok_or_else(|| missing("N_grid"))?
            .values();
        if sizes.is_empty() {
            return Err(invalid("N_grid", "no grid sizes"));
        }
        sizes
            .into_iter()
            .map(|n| {
                if n < 2 {
                    return Err(invalid("N_grid", format!("{n} is below 2")));
                }
                GridSpec::new(n).map_err(|e| invalid("N_grid", e))
            })
            .collect()
    }

    pub fn out_dir(&self) -> Result<PathBuf, CliError> {
        self.out.clone().ok_or_else(|| missing("out"))
    }

    pub fn pvf(&self) -> Result<PvfSpec, CliError> {
        match (&self.pvf, &self.phi) {
            (Some(_), Some(_)) => Err(invalid("pvf", "give either `pvf` or `phi`, not both")),
            (Some(spec), None) => Ok(spec.clone()),
            (None, Some(phi)) => PvfSpec::cumulative(phi.clone()).map_err(|e| invalid("phi", e)),
            (None, None) => Err(missing("phi")),
        }
    }

    pub fn model(&self) -> Result<Model, CliError> {
        let pvf = self.pvf()?;
        if !self.is_epidemic() {
            let mu0 = self.mu0.as_ref().ok_or_else(|| missing("mu0"))?;
            return Ok(Model::Pure {
                mu0: measure_from("mu0", mu0)?,
                pvf,
            });
        }
        if self.mu0.is_some() {
            return Err(invalid("mu0", "not used by epidemic configs; use `I0`"));
        }
        let n_pop = self.n_pop.ok_or_else(|| missing("N_pop"))?;
        let beta = self.beta.as_ref().ok_or_else(|| missing("beta"))?;
        let nu = self.nu.as_ref().ok_or_else(|| missing("nu"))?;
        let beta = beta.to_fn().map_err(|e| invalid("beta", e))?;
        let nu = nu.to_fn().map_err(|e| invalid("nu", e))?;
        let alpha_box = match self.alpha_box {
            Some([lo, hi]) => Interval::new(lo, hi).map_err(|e| invalid("alpha_box", e))?,
            None => table_span(&[&beta, &nu]),
        };
        let params = EpidemicParams::new(n_pop, beta, nu, pvf, alpha_box).map_err(|e| {
            let text = e.to_string();
            let field = if text.contains("beta") {
                "beta"
            } else if text.contains("nu") {
                "nu"
            } else {
                "N_pop"
            };
            invalid(field, text)
        })?;
        let i0 = measure_from("I0", self.i0.as_ref().ok_or_else(|| missing("I0"))?)?;
        let s0 = self.s0.ok_or_else(|| missing("S0"))?;
        let initial =
            EpidemicState::new(s0, i0, self.r0.unwrap_or(0.0)).map_err(|e| invalid("S0", e))?;
        initial
            .check_population(&params)
            .map_err(|e| invalid("N_pop", e))?;
        Ok(Model::Epidemic { params, initial })
    }
}

/// Smallest interval holding every table breakpoint (at least `[-1, 1]`).
fn table_span(tables: &[&PiecewiseLinearFn]) -> Interval {
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    for f in tables {
        for &(x, _) in f.points() {
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    Interval {
        lower: lo,
        upper: hi,
    }
}
