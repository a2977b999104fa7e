//! Stern-Gerlach in time: a beam of dipoles crosses the pulse and the
//! distributions of arrival time, position and time velocity are compared
//! between the four-dimensional path integral and ordinary quantum mechanics.
//!
//! Components with different dipole eigenvalues are evolved independently and
//! added incoherently with their weights.

use std::f64::consts::SQRT_2;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dipole::{
    apply_dipole_time_kernel, evolve_dipole_component, second_order_phase, time_velocity_density,
    DipoleError, DipoleSpectrum, EvolvedComponent, ImpulsiveField,
};
use crate::grid::{relative_l2, relative_l2_modulo_phase, trapezoid, Grid1D, GridWave};
use crate::kernels::{
    evolve_gaussian_free, Axis, AxisGaussian, GaussianPacket4D, KernelError, PacketParams,
};
use crate::lattice::{trotter_propagate, LatticeConfig, LatticeError, PotentialSpec};
use crate::schrodinger::{schrodinger_evolve, SchrodingerComponent};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Dipole(#[from] DipoleError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

impl ExperimentError {
    /// Whether the failure is numerical rather than a bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            ExperimentError::Lattice(
                LatticeError::BoundaryLeak { .. } | LatticeError::NonConvergent { .. }
            ) | ExperimentError::Kernel(KernelError::NonConvergent { .. })
                | ExperimentError::Dipole(DipoleError::DetectorWindow { .. })
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formalism {
    Path4d,
    Schrodinger,
    Both,
}

impl Formalism {
    pub fn name(self) -> &'static str {
        match self {
            Formalism::Path4d => "path4d",
            Formalism::Schrodinger => "schrodinger",
            Formalism::Both => "both",
        }
    }
}

/// Settings of the lattice cross-check attached to path4d components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSettings {
    /// Pulse length used on the lattice when the field is impulsive.
    pub pulse_width: f64,
    pub slices_per_pulse: usize,
    /// Upper bound on the lattice t grid.
    pub max_points: usize,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            pulse_width: 0.02,
            slices_per_pulse: 16,
            max_points: 1 << 18,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "unit_mass")]
    pub mass: f64,
    pub packet: PacketParams,
    pub spectrum: DipoleSpectrum,
    pub field: ImpulsiveField,
    /// Preparation lab time.
    pub t0: f64,
    /// Detection lab time.
    pub t3: f64,
    pub formalism: Formalism,
    #[serde(default)]
    pub oracle_check: bool,
    #[serde(default)]
    pub oracle: OracleSettings,
    #[serde(default = "default_points")]
    pub distribution_points: usize,
    /// Local maxima below this fraction of the global maximum are ignored.
    #[serde(default = "default_hump_threshold")]
    pub hump_threshold: f64,
}

fn unit_mass() -> f64 {
    1.0
}
fn default_points() -> usize {
    801
}
fn default_hump_threshold() -> f64 {
    0.05
}

impl ExperimentConfig {
    /// Two equally populated eigenvalues `±p0` in a gradient pulse.
    pub fn symmetric_pair(sigma_t: f64, p0: f64, field: ImpulsiveField, t0: f64, t3: f64) -> Self {
        let mut packet = PacketParams::at_rest(1.0, sigma_t, 1.0);
        packet.t_a = t0;
        Self {
            mass: 1.0,
            packet,
            spectrum: DipoleSpectrum::symmetric_pair(p0),
            field,
            t0,
            t3,
            formalism: Formalism::Both,
            oracle_check: false,
            oracle: OracleSettings::default(),
            distribution_points: default_points(),
            hump_threshold: default_hump_threshold(),
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return bad(format!("mass must be positive, got {}", self.mass));
        }
        if !(self.t0 < self.field.t_bar && self.field.t_bar < self.t3) {
            return bad(format!(
                "times must satisfy T0 < T̄ < T3, got {} < {} < {}",
                self.t0, self.field.t_bar, self.t3
            ));
        }
        if self.field.delta_t < 0.0
            || self.field.t_bar - 0.5 * self.field.delta_t < self.t0
            || self.field.t_bar + 0.5 * self.field.delta_t > self.t3
        {
            return bad("the pulse must lie inside [T0, T3]".into());
        }
        if !(self.packet.sigma_t > 0.0 && self.packet.sigma_x > 0.0) {
            return bad("packet widths must be positive".into());
        }
        DipoleSpectrum::new(
            self.spectrum.eigenvalues.clone(),
            self.spectrum.weights.clone(),
        )
        .map_err(|e| ExperimentError::Config(e.to_string()))?;
        if self.distribution_points < 3 {
            return bad("distribution_points must be at least 3".into());
        }
        if !(0.0..1.0).contains(&self.hump_threshold) {
            return bad("hump_threshold must lie in [0, 1)".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableAxis {
    T,
    X,
    V,
}

impl ObservableAxis {
    pub fn name(self) -> &'static str {
        match self {
            ObservableAxis::T => "t",
            ObservableAxis::X => "x",
            ObservableAxis::V => "v",
        }
    }
}

/// A sampled probability density.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curve {
    pub axis: ObservableAxis,
    pub grid: Grid1D,
    pub density: Vec<f64>,
}

impl Curve {
    fn sample(axis: ObservableAxis, grid: Grid1D, f: impl Fn(f64) -> f64) -> Self {
        Self {
            axis,
            grid,
            density: grid.points().map(f).collect(),
        }
    }

    pub fn integral(&self) -> f64 {
        trapezoid(&self.grid, &self.density)
    }

    pub fn humps(&self, threshold: f64) -> usize {
        count_humps(&self.density, threshold)
    }
}

/// Shared observation grids so formalisms can be compared point by point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObservationGrids {
    pub t: Grid1D,
    pub x: Grid1D,
    pub v: Grid1D,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentSummary {
    pub p: f64,
    pub weight: f64,
    /// Precession.
    pub delta_omega: f64,
    /// Shift of the mean time frequency.
    pub frequency_shift: f64,
    pub delta_v: f64,
    pub mean_t: f64,
    pub mean_x: f64,
    pub mean_v: f64,
    pub curves: Vec<Curve>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleRecord {
    pub p: f64,
    pub rel_l2: f64,
    pub lattice_points: usize,
    pub lattice_slices: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Detectability {
    pub detectable: bool,
    pub margin: f64,
    pub delta_omega_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormalismResult {
    pub formalism: Formalism,
    pub components: Vec<ComponentSummary>,
    pub hump_spacing_v: f64,
    pub hump_spacing_omega: f64,
    pub delta_omega_width: f64,
    pub detectable: bool,
    pub margin: f64,
    pub hump_count: usize,
    /// Weighted sums over components, one per axis.
    pub combined: Vec<Curve>,
    pub oracle: Vec<OracleRecord>,
}

impl FormalismResult {
    pub fn combined_curve(&self, axis: ObservableAxis) -> &Curve {
        self.combined
            .iter()
            .find(|c| c.axis == axis)
            .expect("all axes are sampled")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub grids: ObservationGrids,
    pub runs: Vec<FormalismResult>,
}

impl ExperimentResult {
    pub fn get(&self, formalism: Formalism) -> Option<&FormalismResult> {
        self.runs.iter().find(|r| r.formalism == formalism)
    }
}

/// `δω = max(1/σ_t, (k_a/ω_a)/σ_x)`; detectable iff `|Δω_split|/δω > 1`.
pub fn detectability(delta_omega_split: f64, packet: &PacketParams, m: f64) -> Detectability {
    let omega = if packet.omega_a != 0.0 {
        packet.omega_a
    } else {
        (packet.k_a * packet.k_a + m * m).sqrt()
    };
    let width = (1.0 / packet.sigma_t).max((packet.k_a / omega).abs() / packet.sigma_x);
    let margin = delta_omega_split.abs() / width;
    Detectability {
        detectable: margin > 1.0,
        margin,
        delta_omega_width: width,
    }
}

/// Local maxima above `threshold` times the global maximum; plateaus count once.
pub fn count_humps(values: &[f64], threshold: f64) -> usize {
    let peak = values.iter().copied().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return 0;
    }
    let floor = threshold * peak;
    let mut count = 0;
    let mut i = 0;
    while i < values.len() {
        let mut j = i;
        while j + 1 < values.len() && values[j + 1] == values[i] {
            j += 1;
        }
        let rises = i == 0 || values[i - 1] < values[i];
        let falls = j + 1 == values.len() || values[j + 1] < values[i];
        if rises && falls && values[i] >= floor {
            count += 1;
        }
        i = j + 1;
    }
    count
}

/// `∫|a − b|` on a shared grid.
pub fn l1_distance(a: &Curve, b: &Curve) -> f64 {
    assert_eq!(a.grid, b.grid, "curves must share a grid");
    let diff: Vec<f64> = a
        .density
        .iter()
        .zip(&b.density)
        .map(|(x, y)| (x - y).abs())
        .collect();
    trapezoid(&a.grid, &diff)
}

fn observation_grids(
    config: &ExperimentConfig,
    prepared: &GaussianPacket4D,
) -> Result<ObservationGrids, ExperimentError> {
    let m = config.mass;
    let free = evolve_gaussian_free(prepared, m, config.t0, config.t3)?;
    let max_kick = config
        .spectrum
        .eigenvalues
        .iter()
        .map(|p| (p * config.field.e1_bar).abs())
        .fold(0.0, f64::max)
        / m;
    let n = config.distribution_points;
    let v_sigma = 1.0 / (SQRT_2 * prepared.sigma_t() * m);
    Ok(ObservationGrids {
        t: Grid1D::centered(
            free.t_a(),
            10.0 * free.sigma_t() + max_kick * (config.t3 - config.field.t_bar),
            n,
        ),
        x: Grid1D::centered(free.x_a(), 10.0 * free.sigma_x(), n),
        v: Grid1D::centered(prepared.omega_a() / m, 10.0 * v_sigma + max_kick, n),
    })
}

fn curves(
    grids: &ObservationGrids,
    time: &AxisGaussian,
    space: &AxisGaussian,
    m: f64,
) -> Vec<Curve> {
    vec![
        Curve::sample(ObservableAxis::T, grids.t, |t| time.density(t)),
        Curve::sample(ObservableAxis::X, grids.x, |x| space.density(x)),
        Curve::sample(ObservableAxis::V, grids.v, |v| {
            time_velocity_density(time, m, v)
        }),
    ]
}

fn combine(components: &[ComponentSummary], grids: &ObservationGrids) -> Vec<Curve> {
    [ObservableAxis::T, ObservableAxis::X, ObservableAxis::V]
        .into_iter()
        .enumerate()
        .map(|(k, axis)| {
            let grid = match axis {
                ObservableAxis::T => grids.t,
                ObservableAxis::X => grids.x,
                ObservableAxis::V => grids.v,
            };
            let mut density = vec![0.0; grid.len];
            for c in components {
                for (d, v) in density.iter_mut().zip(&c.curves[k].density) {
                    *d += c.weight * v;
                }
            }
            Curve {
                axis,
                grid,
                density,
            }
        })
        .collect()
}

/// Lattice window and size for a time factor evolved over `span`, kicked by
/// `kappa` a time `after` before the end.
fn oracle_window(
    start: &AxisGaussian,
    m: f64,
    span: f64,
    kappa: f64,
    after: f64,
    max_points: usize,
) -> Result<(f64, f64, usize), ExperimentError> {
    let free_end = start.evolve_free(Axis::Time, m, span);
    let drift = kappa.abs() / m * after;
    let lo = (start.center() - 12.0 * start.width())
        .min(free_end.center() - 12.0 * free_end.width() - drift);
    let hi = (start.center() + 12.0 * start.width())
        .max(free_end.center() + 12.0 * free_end.width() + drift);
    // resolve the initial spectrum out to 12 spectral widths
    let band = start.phase_gradient().abs() + kappa.abs() + 12.0 / (SQRT_2 * start.width());
    let h = std::f64::consts::PI / band;
    let needed = ((hi - lo) / h).ceil() as usize + 1;
    if needed > max_points {
        return Err(ExperimentError::Config(format!(
            "oracle grid would need {needed} points (limit {max_points})"
        )));
    }
    Ok((lo, hi, needed.next_power_of_two()))
}

/// Lattice run of one component against the closed form.
fn oracle_component(
    config: &ExperimentConfig,
    prepared: &GaussianPacket4D,
    p: f64,
) -> Result<OracleRecord, ExperimentError> {
    let m = config.mass;
    let settings = config.oracle;
    let field = if config.field.delta_t > 0.0 {
        config.field
    } else {
        config.field.with_duration(settings.pulse_width)
    };
    let pulse = field.finite_pulse()?;
    let span = config.t3 - config.t0;
    let epsilon_target = field.delta_t / settings.slices_per_pulse.max(1) as f64;
    let n_slices = (span / epsilon_target).ceil() as usize;

    let start = prepared.time;
    let (lo, hi, n_t) = oracle_window(
        &start,
        m,
        span,
        p * field.e1_bar,
        config.t3 - field.t_bar,
        settings.max_points,
    )?;
    let lattice = LatticeConfig::time_only(config.t0, config.t3, n_slices, (lo, hi), n_t);
    let grid = lattice.t_grid();
    let psi0 = GridWave::from_fn_1d(grid, |t| start.value(t));
    let out = trotter_propagate(&lattice, &pulse.potential(p), &psi0, m)?;

    let theta2 = second_order_phase(m, p, &config.field, config.t0, config.t3);
    let exact = apply_dipole_time_kernel(&start, m, p, &config.field, config.t0, config.t3)?
        .scaled(Complex64::from_polar(1.0, theta2));
    let analytic = GridWave::from_fn_1d(grid, |t| exact.value(t));
    Ok(OracleRecord {
        p,
        rel_l2: relative_l2_modulo_phase(&out, &analytic),
        lattice_points: n_t,
        lattice_slices: n_slices,
    })
}

/// One row of a lattice convergence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    /// Number of slices, pulse length or damping, depending on the table.
    pub parameter: f64,
    pub rel_l2: f64,
}

fn prepared_time(config: &ExperimentConfig) -> Result<AxisGaussian, ExperimentError> {
    config.validate()?;
    Ok(GaussianPacket4D::new(config.packet, config.t0)?.time)
}

fn free_lattice_error(
    config: &ExperimentConfig,
    n_slices: usize,
    reg_eta: f64,
) -> Result<f64, ExperimentError> {
    let m = config.mass;
    let start = prepared_time(config)?;
    let span = config.t3 - config.t0;
    let (lo, hi, n_t) = oracle_window(&start, m, span, 0.0, 0.0, config.oracle.max_points)?;
    let mut lattice = LatticeConfig::time_only(config.t0, config.t3, n_slices, (lo, hi), n_t);
    lattice.reg_eta = reg_eta;
    let grid = lattice.t_grid();
    let psi0 = GridWave::from_fn_1d(grid, |t| start.value(t));
    let out = trotter_propagate(&lattice, &PotentialSpec::Free, &psi0, m)?;
    let exact = start.evolve_free(Axis::Time, m, span);
    Ok(relative_l2(
        &out,
        &GridWave::from_fn_1d(grid, |t| exact.value(t)),
    ))
}

/// Free time-factor evolution on the lattice against the closed form, for
/// each slice count.
pub fn free_slice_convergence(
    config: &ExperimentConfig,
    n_slices: &[usize],
) -> Result<Vec<ConvergenceRow>, ExperimentError> {
    n_slices
        .iter()
        .map(|&n| {
            Ok(ConvergenceRow {
                parameter: n as f64,
                rel_l2: free_lattice_error(config, n, 0.0)?,
            })
        })
        .collect()
}

/// Free evolution with damped kernels extrapolated to zero damping, for each
/// starting damping.
pub fn reg_eta_convergence(
    config: &ExperimentConfig,
    n_slices: usize,
    etas: &[f64],
) -> Result<Vec<ConvergenceRow>, ExperimentError> {
    etas.iter()
        .map(|&eta| {
            Ok(ConvergenceRow {
                parameter: eta,
                rel_l2: free_lattice_error(config, n_slices, eta)?,
            })
        })
        .collect()
}

/// Finite pulses of each length against the impulsive closed form for
/// eigenvalue `p`. All runs share one slice width, with
/// `oracle.slices_per_pulse` slices inside the shortest pulse. The error keeps
/// the global phase, which carries the leading finite-length correction.
pub fn impulsive_convergence(
    config: &ExperimentConfig,
    p: f64,
    delta_ts: &[f64],
) -> Result<Vec<ConvergenceRow>, ExperimentError> {
    let m = config.mass;
    let start = prepared_time(config)?;
    let span = config.t3 - config.t0;
    let shortest = delta_ts.iter().copied().fold(f64::INFINITY, f64::min);
    if !(shortest > 0.0) {
        return Err(ExperimentError::Config(
            "pulse lengths must be positive".into(),
        ));
    }
    let n_slices = (span * config.oracle.slices_per_pulse.max(1) as f64 / shortest).ceil() as usize;
    let kappa = p * config.field.e1_bar;
    let (lo, hi, n_t) = oracle_window(
        &start,
        m,
        span,
        kappa,
        config.t3 - config.field.t_bar,
        config.oracle.max_points,
    )?;
    let lattice = LatticeConfig::time_only(config.t0, config.t3, n_slices, (lo, hi), n_t);
    let grid = lattice.t_grid();
    let psi0 = GridWave::from_fn_1d(grid, |t| start.value(t));
    let exact = apply_dipole_time_kernel(&start, m, p, &config.field, config.t0, config.t3)?
        .scaled(Complex64::from_polar(
            1.0,
            second_order_phase(m, p, &config.field, config.t0, config.t3),
        ));
    let expected = GridWave::from_fn_1d(grid, |t| exact.value(t));
    delta_ts
        .par_iter()
        .map(|&dt| {
            let pulse = config.field.with_duration(dt).finite_pulse()?;
            if pulse.t_start < config.t0 || pulse.t_end > config.t3 {
                return Err(ExperimentError::Config(format!(
                    "a pulse of length {dt} does not fit in [T0, T3]"
                )));
            }
            let out = trotter_propagate(&lattice, &pulse.potential(p), &psi0, m)?;
            Ok(ConvergenceRow {
                parameter: dt,
                rel_l2: relative_l2(&out, &expected),
            })
        })
        .collect()
}

/// Least-squares slope of `log error` against `log parameter`.
pub fn convergence_order(rows: &[ConvergenceRow]) -> f64 {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.parameter.ln(), r.rel_l2.ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

fn run_path4d(
    config: &ExperimentConfig,
    prepared: &GaussianPacket4D,
    grids: &ObservationGrids,
) -> Result<FormalismResult, ExperimentError> {
    let m = config.mass;
    let evolved: Vec<(f64, EvolvedComponent)> = config
        .spectrum
        .components()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(p, w)| {
            Ok((
                w,
                evolve_dipole_component(prepared, p, &config.field, m, config.t0, config.t3)?,
            ))
        })
        .collect::<Result<_, ExperimentError>>()?;
    let components: Vec<ComponentSummary> = evolved
        .iter()
        .map(|(w, c)| ComponentSummary {
            p: c.p,
            weight: *w,
            delta_omega: c.delta_omega,
            frequency_shift: c.frequency_shift,
            delta_v: c.delta_v,
            mean_t: c.packet.t_a(),
            mean_x: c.packet.x_a(),
            mean_v: c.packet.omega_a() / m,
            curves: curves(grids, &c.packet.time, &c.packet.space, m),
        })
        .collect();
    let oracle = if config.oracle_check {
        config
            .spectrum
            .eigenvalues
            .par_iter()
            .map(|p| oracle_component(config, prepared, *p))
            .collect::<Result<Vec<_>, _>>()?
    } else {
        Vec::new()
    };
    Ok(assemble(
        config,
        Formalism::Path4d,
        components,
        grids,
        oracle,
    ))
}

fn run_schrodinger(
    config: &ExperimentConfig,
    prepared: &GaussianPacket4D,
    grids: &ObservationGrids,
) -> Result<FormalismResult, ExperimentError> {
    let m = config.mass;
    let evolved: Vec<(f64, SchrodingerComponent)> = config
        .spectrum
        .components()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(p, w)| {
            Ok((
                w,
                schrodinger_evolve(
                    &prepared.space,
                    &prepared.time,
                    p,
                    &config.field,
                    m,
                    config.t0,
                    config.t3,
                )?,
            ))
        })
        .collect::<Result<_, ExperimentError>>()?;
    let components = evolved
        .iter()
        .map(|(w, c)| ComponentSummary {
            p: c.p,
            weight: *w,
            delta_omega: -c.phase_shift,
            frequency_shift: 0.0,
            delta_v: 0.0,
            mean_t: c.time_profile.center(),
            mean_x: c.packet_x.center(),
            mean_v: -c.time_profile.phase_gradient() / m,
            curves: curves(grids, &c.time_profile, &c.packet_x, m),
        })
        .collect();
    Ok(assemble(
        config,
        Formalism::Schrodinger,
        components,
        grids,
        Vec::new(),
    ))
}

fn assemble(
    config: &ExperimentConfig,
    formalism: Formalism,
    components: Vec<ComponentSummary>,
    grids: &ObservationGrids,
    oracle: Vec<OracleRecord>,
) -> FormalismResult {
    let n = components.len();
    let (spacing_v, spacing_omega) = if n > 1 {
        let first = &components[0];
        let last = &components[n - 1];
        (
            (last.mean_v - first.mean_v) / (n - 1) as f64,
            (last.frequency_shift - first.frequency_shift) / (n - 1) as f64,
        )
    } else {
        (0.0, 0.0)
    };
    let det = detectability(spacing_omega, &config.packet, config.mass);
    let combined = combine(&components, grids);
    let hump_count = combined
        .iter()
        .find(|c| c.axis == ObservableAxis::V)
        .map_or(0, |c| c.humps(config.hump_threshold));
    FormalismResult {
        formalism,
        components,
        hump_spacing_v: spacing_v,
        hump_spacing_omega: spacing_omega,
        delta_omega_width: det.delta_omega_width,
        detectable: det.detectable,
        margin: det.margin,
        hump_count,
        combined,
        oracle,
    }
}

/// Run the configured formalisms.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult, ExperimentError> {
    config.validate()?;
    let prepared = GaussianPacket4D::new(config.packet, config.t0)?;
    let grids = observation_grids(config, &prepared)?;
    let (a, b) = rayon::join(
        || match config.formalism {
            Formalism::Path4d | Formalism::Both => Some(run_path4d(config, &prepared, &grids)),
            Formalism::Schrodinger => None,
        },
        || match config.formalism {
            Formalism::Schrodinger | Formalism::Both => {
                Some(run_schrodinger(config, &prepared, &grids))
            }
            Formalism::Path4d => None,
        },
    );
    let mut runs = Vec::new();
    for r in [a, b].into_iter().flatten() {
        runs.push(r?);
    }
    Ok(ExperimentResult { grids, runs })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrecessionRow {
    pub p: f64,
    pub path4d: f64,
    pub schrodinger: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub precession: Vec<PrecessionRow>,
    pub max_precession_difference: f64,
    pub precession_agrees: bool,
    pub hump_count_path4d: usize,
    pub hump_count_schrodinger: usize,
    pub split_path4d: bool,
    pub split_schrodinger: bool,
    pub hump_spacing_v_path4d: f64,
    pub margin_path4d: f64,
    pub detectable_path4d: bool,
    /// L1 distance of the combined distributions, per axis.
    pub l1_t: f64,
    pub l1_x: f64,
    pub l1_v: f64,
}

/// Tolerance for the precession rows.
pub const PRECESSION_TOLERANCE: f64 = 1e-12;

pub fn compare_formalisms(
    path4d: &FormalismResult,
    schrodinger: &FormalismResult,
) -> ComparisonReport {
    let precession: Vec<PrecessionRow> = path4d
        .components
        .iter()
        .zip(&schrodinger.components)
        .map(|(a, b)| PrecessionRow {
            p: a.p,
            path4d: a.delta_omega,
            schrodinger: b.delta_omega,
        })
        .collect();
    let max_diff = precession
        .iter()
        .map(|r| (r.path4d - r.schrodinger).abs())
        .fold(0.0, f64::max);
    let l1 = |axis| {
        l1_distance(
            path4d.combined_curve(axis),
            schrodinger.combined_curve(axis),
        )
    };
    ComparisonReport {
        max_precession_difference: max_diff,
        precession_agrees: max_diff <= PRECESSION_TOLERANCE,
        precession,
        hump_count_path4d: path4d.hump_count,
        hump_count_schrodinger: schrodinger.hump_count,
        split_path4d: path4d.hump_spacing_v != 0.0,
        split_schrodinger: schrodinger.hump_spacing_v != 0.0,
        hump_spacing_v_path4d: path4d.hump_spacing_v,
        margin_path4d: path4d.margin,
        detectable_path4d: path4d.detectable,
        l1_t: l1(ObservableAxis::T),
        l1_x: l1(ObservableAxis::X),
        l1_v: l1(ObservableAxis::V),
    }
}

impl ComparisonReport {
    /// Two-column `quantity,value` table.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("quantity,value\n");
        for r in &self.precession {
            out.push_str(&format!("precession_path4d[p={}],{:e}\n", r.p, r.path4d));
            out.push_str(&format!(
                "precession_schrodinger[p={}],{:e}\n",
                r.p, r.schrodinger
            ));
        }
        let rows: [(&str, String); 12] = [
            (
                "max_precession_difference",
                format!("{:e}", self.max_precession_difference),
            ),
            ("precession_agrees", self.precession_agrees.to_string()),
            ("hump_count_path4d", self.hump_count_path4d.to_string()),
            (
                "hump_count_schrodinger",
                self.hump_count_schrodinger.to_string(),
            ),
            ("split_path4d", self.split_path4d.to_string()),
            ("split_schrodinger", self.split_schrodinger.to_string()),
            (
                "hump_spacing_v_path4d",
                format!("{:e}", self.hump_spacing_v_path4d),
            ),
            ("margin_path4d", format!("{:e}", self.margin_path4d)),
            ("detectable_path4d", self.detectable_path4d.to_string()),
            ("l1_t", format!("{:e}", self.l1_t)),
            ("l1_x", format!("{:e}", self.l1_x)),
            ("l1_v", format!("{:e}", self.l1_v)),
        ];
        for (k, v) in rows {
            out.push_str(&format!("{k},{v}\n"));
        }
        out
    }
}
