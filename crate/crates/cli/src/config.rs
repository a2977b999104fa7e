//! TOML run configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};
use tempath::dipole::{DipoleSpectrum, ImpulsiveField};
use tempath::experiment::{ExperimentConfig, Formalism, OracleSettings};
use tempath::kernels::PacketParams;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "one")]
    pub mass: f64,
    /// Preparation lab time.
    pub t0: f64,
    /// Detection lab time.
    pub t3: f64,
    #[serde(default)]
    pub formalism: Option<Formalism>,
    #[serde(default)]
    pub oracle_check: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "points")]
    pub distribution_points: usize,
    #[serde(default = "threshold")]
    pub hump_threshold: f64,
    pub packet: PacketInput,
    pub spectrum: SpectrumInput,
    #[serde(default)]
    pub field: FieldInput,
    #[serde(default)]
    pub oracle: OracleSettings,
    #[serde(default)]
    pub convergence: ConvergenceInput,
}

fn one() -> f64 {
    1.0
}
fn points() -> usize {
    801
}
fn threshold() -> f64 {
    0.05
}

/// Packet at `t0`. `t_a` defaults to `t0` and `omega_a` to the mass.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketInput {
    pub t_a: Option<f64>,
    #[serde(default)]
    pub x_a: f64,
    pub omega_a: Option<f64>,
    #[serde(default)]
    pub k_a: f64,
    pub sigma_t: f64,
    pub sigma_x: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumInput {
    pub eigenvalues: Vec<f64>,
    /// Equal weights when omitted.
    pub weights: Option<Vec<f64>>,
}

/// Either integrated strengths `e0_bar`, `e1_bar` (with an optional pulse
/// length for the lattice) or field strengths `e0`, `e1` with `delta_t`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldInput {
    pub e0_bar: Option<f64>,
    pub e1_bar: Option<f64>,
    pub e0: Option<f64>,
    pub e1: Option<f64>,
    pub delta_t: Option<f64>,
    pub t_bar: Option<f64>,
}

/// Parameters of the `oracle` command's tables.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergenceInput {
    pub n_slices: Vec<usize>,
    pub delta_t: Vec<f64>,
    pub reg_eta: Vec<f64>,
    pub reg_eta_slices: usize,
    pub n_paths: usize,
    pub n_modes: usize,
}

impl Default for ConvergenceInput {
    fn default() -> Self {
        Self {
            n_slices: vec![64, 128, 256],
            delta_t: vec![0.1, 0.05, 0.025],
            reg_eta: vec![2e-5, 1e-5, 5e-6],
            reg_eta_slices: 64,
            n_paths: 256,
            n_modes: 8,
        }
    }
}

impl FieldInput {
    fn resolve(&self, t0: f64, t3: f64) -> Result<ImpulsiveField, CliError> {
        let t_bar = self.t_bar.unwrap_or(0.5 * (t0 + t3));
        let bars = self.e0_bar.is_some() || self.e1_bar.is_some();
        let raw = self.e0.is_some() || self.e1.is_some();
        match (bars, raw) {
            (true, true) => Err(CliError::Config(
                "field: give either e0_bar/e1_bar or e0/e1 with delta_t, not both".into(),
            )),
            (false, true) => {
                let dt = self
                    .delta_t
                    .ok_or_else(|| CliError::Config("field: e0/e1 need delta_t".into()))?;
                if !(dt > 0.0) {
                    return Err(CliError::Config("field: delta_t must be positive".into()));
                }
                Ok(ImpulsiveField::from_fields(
                    self.e0.unwrap_or(0.0),
                    self.e1.unwrap_or(0.0),
                    dt,
                    t_bar,
                ))
            }
            _ => {
                let f = ImpulsiveField::impulsive(
                    self.e0_bar.unwrap_or(0.0),
                    self.e1_bar.unwrap_or(0.0),
                    t_bar,
                );
                match self.delta_t {
                    Some(dt) if dt < 0.0 => Err(CliError::Config(
                        "field: delta_t must be non-negative".into(),
                    )),
                    Some(dt) => Ok(f.with_duration(dt)),
                    None => Ok(f),
                }
            }
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// The library configuration, validated. `formalism` overrides the file.
    pub fn experiment(
        &self,
        formalism: Option<Formalism>,
        oracle_check: bool,
    ) -> Result<ExperimentConfig, CliError> {
        let p = &self.packet;
        let packet = PacketParams {
            t_a: p.t_a.unwrap_or(self.t0),
            x_a: p.x_a,
            omega_a: p.omega_a.unwrap_or(self.mass),
            k_a: p.k_a,
            sigma_t: p.sigma_t,
            sigma_x: p.sigma_x,
        };
        let n = self.spectrum.eigenvalues.len();
        let weights = self
            .spectrum
            .weights
            .clone()
            .unwrap_or_else(|| vec![1.0; n]);
        let spectrum = DipoleSpectrum::new(self.spectrum.eigenvalues.clone(), weights)
            .map_err(|e| CliError::Config(format!("spectrum: {e}")))?;
        let config = ExperimentConfig {
            mass: self.mass,
            packet,
            spectrum,
            field: self.field.resolve(self.t0, self.t3)?,
            t0: self.t0,
            t3: self.t3,
            formalism: formalism.or(self.formalism).unwrap_or(Formalism::Both),
            oracle_check: oracle_check || self.oracle_check,
            oracle: self.oracle,
            distribution_points: self.distribution_points,
            hump_threshold: self.hump_threshold,
        };
        config
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        let c = &self.convergence;
        if c.n_slices.is_empty() || c.n_slices.contains(&0) {
            return Err(CliError::Config(
                "convergence.n_slices must be non-empty and positive".into(),
            ));
        }
        if c.delta_t.iter().any(|d| !(*d > 0.0)) || c.reg_eta.iter().any(|e| !(*e > 0.0)) {
            return Err(CliError::Config(
                "convergence.delta_t and reg_eta must be positive".into(),
            ));
        }
        if c.reg_eta_slices == 0 || c.n_modes == 0 {
            return Err(CliError::Config(
                "convergence.reg_eta_slices and n_modes must be positive".into(),
            ));
        }
        Ok(config)
    }
}
