//! A dipole crossing a spatially uniform electric field that grows linearly
//! in time.
//!
//! The interaction is `V = −ṫ·p·(E0 + E1·t)` while the pulse is on. In the
//! impulsive limit only `𝖤0 = E0·ΔT`, `𝖤1 = E1·ΔT` and the pulse centre `T̄`
//! survive: the pulse multiplies the wave function at `T̄` by
//! `e^{ip𝖤0}·e^{iκt}` with `κ = p𝖤1`. The linear phase shifts the time
//! frequency `ω → ω − κ`, so the time velocity `d⟨t⟩/dT = ω/m` changes by
//! `−κ/m`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::{
    check_lab_times, check_mass, evolve_gaussian_free, free_time_kernel, Amplitude, Axis,
    AxisGaussian, GaussianPacket4D, KernelError,
};
use crate::lattice::PotentialSpec;
use crate::normalization::AxisKernel;

/// `Δv = DELTA_V_PER_UNIT_KICK · p𝖤1 / m`, as measured by the lattice oracle.
pub const DELTA_V_PER_UNIT_KICK: f64 = -1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DipoleError {
    #[error("lab times must satisfy T0 < T̄ < T3 (T0 = {t0}, T̄ = {t_bar}, T3 = {t3})")]
    Ordering { t0: f64, t_bar: f64, t3: f64 },
    #[error("evolved mean time {mean_t} lies outside the detector window [{min}, {max}]")]
    DetectorWindow { mean_t: f64, min: f64, max: f64 },
    #[error("invalid dipole spectrum: {0}")]
    InvalidSpectrum(String),
    #[error("a finite pulse needs delta_T > 0")]
    ZeroDuration,
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Pulse strengths integrated over the pulse, and its centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpulsiveField {
    /// `𝖤0 = E0·ΔT`.
    pub e0_bar: f64,
    /// `𝖤1 = E1·ΔT`.
    pub e1_bar: f64,
    pub t_bar: f64,
    /// Pulse length for finite-pulse cross-checks; zero means impulsive.
    pub delta_t: f64,
}

impl ImpulsiveField {
    pub fn impulsive(e0_bar: f64, e1_bar: f64, t_bar: f64) -> Self {
        Self {
            e0_bar,
            e1_bar,
            t_bar,
            delta_t: 0.0,
        }
    }

    /// From field strengths and pulse length.
    pub fn from_fields(e0: f64, e1: f64, delta_t: f64, t_bar: f64) -> Self {
        Self {
            e0_bar: e0 * delta_t,
            e1_bar: e1 * delta_t,
            t_bar,
            delta_t,
        }
    }

    /// Same `𝖤` values, different pulse length.
    pub fn with_duration(self, delta_t: f64) -> Self {
        Self { delta_t, ..self }
    }

    pub fn finite_pulse(&self) -> Result<FinitePulse, DipoleError> {
        if !(self.delta_t > 0.0) {
            return Err(DipoleError::ZeroDuration);
        }
        Ok(FinitePulse {
            e0: self.e0_bar / self.delta_t,
            e1: self.e1_bar / self.delta_t,
            t_start: self.t_bar - 0.5 * self.delta_t,
            t_end: self.t_bar + 0.5 * self.delta_t,
        })
    }
}

/// `E(t) = E0 + E1·t` switched on for lab times in `[t_start, t_end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinitePulse {
    pub e0: f64,
    pub e1: f64,
    pub t_start: f64,
    pub t_end: f64,
}

impl FinitePulse {
    pub fn contains(&self, lab: f64) -> bool {
        lab >= self.t_start && lab <= self.t_end
    }

    /// Lattice potential for a dipole `p` (with `ṫ = 1`).
    pub fn potential(&self, p: f64) -> PotentialSpec {
        PotentialSpec::LinearInTPulse {
            e0: self.e0,
            e1: self.e1,
            t_start: self.t_start,
            t_end: self.t_end,
            dipole_p: p,
        }
    }
}

/// `−ṫ·p·(E0 + E1·t)` inside the pulse, zero outside.
pub fn dipole_interaction_energy(p: f64, pulse: &FinitePulse, lab: f64, t: f64, tdot: f64) -> f64 {
    if pulse.contains(lab) {
        -tdot * p * (pulse.e0 + pulse.e1 * t)
    } else {
        0.0
    }
}

/// Eigenvalues of the dipole operator and their populations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DipoleSpectrum {
    pub eigenvalues: Vec<f64>,
    pub weights: Vec<f64>,
}

impl DipoleSpectrum {
    /// Sorts by eigenvalue and rescales the weights to sum to one.
    pub fn new(eigenvalues: Vec<f64>, weights: Vec<f64>) -> Result<Self, DipoleError> {
        if eigenvalues.is_empty() || eigenvalues.len() != weights.len() {
            return Err(DipoleError::InvalidSpectrum(
                "need one weight per eigenvalue and at least one eigenvalue".into(),
            ));
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite()))
            || eigenvalues.iter().any(|p| !p.is_finite())
        {
            return Err(DipoleError::InvalidSpectrum(
                "weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(DipoleError::InvalidSpectrum("weights sum to zero".into()));
        }
        let mut pairs: Vec<(f64, f64)> = eigenvalues
            .into_iter()
            .zip(weights.into_iter().map(|w| w / total))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self {
            eigenvalues: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        })
    }

    /// Equal populations of `+p0` and `−p0`.
    pub fn symmetric_pair(p0: f64) -> Self {
        Self::new(vec![-p0, p0], vec![0.5, 0.5]).expect("valid pair")
    }

    pub fn components(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.eigenvalues
            .iter()
            .copied()
            .zip(self.weights.iter().copied())
    }
}

fn check_order(t0: f64, t_bar: f64, t3: f64) -> Result<(), DipoleError> {
    if t0 < t_bar && t_bar < t3 {
        Ok(())
    } else {
        Err(DipoleError::Ordering { t0, t_bar, t3 })
    }
}

/// `K_free^(t)(t3; t0)·e^{ip𝖤0}·exp(ip𝖤1[t3(T̄−T0) + t0(T3−T̄)]/(T3−T0))`.
pub fn dipole_time_kernel(
    m: f64,
    p: f64,
    field: &ImpulsiveField,
    lab_from: f64,
    lab_to: f64,
    t0: f64,
    t3: f64,
) -> Result<Amplitude, DipoleError> {
    check_order(lab_from, field.t_bar, lab_to)?;
    let free = free_time_kernel(m, lab_from, lab_to, t0, t3)?;
    Ok(free * Complex64::from_polar(1.0, dipole_phase(p, field, lab_from, lab_to, t0, t3)))
}

fn dipole_phase(
    p: f64,
    field: &ImpulsiveField,
    lab_from: f64,
    lab_to: f64,
    t0: f64,
    t3: f64,
) -> f64 {
    let before = field.t_bar - lab_from;
    let after = lab_to - field.t_bar;
    p * field.e0_bar + p * field.e1_bar * (t3 * before + t0 * after) / (lab_to - lab_from)
}

/// Constant phase `κ²ab/(2m(a+b))` separating the exact composition
/// `free(b)·kick·free(a)` from [`dipole_time_kernel`], with `a = T̄ − T0`,
/// `b = T3 − T̄`.
pub fn second_order_phase(
    m: f64,
    p: f64,
    field: &ImpulsiveField,
    lab_from: f64,
    lab_to: f64,
) -> f64 {
    let kappa = p * field.e1_bar;
    let a = field.t_bar - lab_from;
    let b = lab_to - field.t_bar;
    kappa * kappa * a * b / (2.0 * m * (a + b))
}

/// [`dipole_time_kernel`] times `e^{iθ₂}`: the exact impulsive kernel.
pub fn exact_impulsive_time_kernel(
    m: f64,
    p: f64,
    field: &ImpulsiveField,
    lab_from: f64,
    lab_to: f64,
    t0: f64,
    t3: f64,
) -> Result<Amplitude, DipoleError> {
    let k = dipole_time_kernel(m, p, field, lab_from, lab_to, t0, t3)?;
    Ok(k * Complex64::from_polar(1.0, second_order_phase(m, p, field, lab_from, lab_to)))
}

/// [`dipole_time_kernel`] as an [`AxisKernel`] for the normalization module.
/// Lab times outside the ordering give a zero amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleTimeKernel {
    pub m: f64,
    pub p: f64,
    pub field: ImpulsiveField,
}

impl AxisKernel for DipoleTimeKernel {
    fn amplitude(&self, lab: (f64, f64), u1: f64, u2: f64) -> Amplitude {
        dipole_time_kernel(self.m, self.p, &self.field, lab.0, lab.1, u1, u2).unwrap_or_default()
    }
}

/// Apply the first-order dipole kernel to a time Gaussian in closed form.
pub fn apply_dipole_time_kernel(
    g: &AxisGaussian,
    m: f64,
    p: f64,
    field: &ImpulsiveField,
    lab_from: f64,
    lab_to: f64,
) -> Result<AxisGaussian, DipoleError> {
    check_mass(m)?;
    check_order(lab_from, field.t_bar, lab_to)?;
    let span = check_lab_times(lab_from, lab_to)?;
    let kappa = p * field.e1_bar;
    let before = field.t_bar - lab_from;
    let after = lab_to - field.t_bar;
    Ok(g.with_linear_phase(kappa * after / span)
        .evolve_free(Axis::Time, m, span)
        .with_linear_phase(kappa * before / span)
        .scaled(Complex64::from_polar(1.0, p * field.e0_bar)))
}

/// One dipole eigencomponent after the pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolvedComponent {
    pub p: f64,
    /// Precession `−(p𝖤0 + p𝖤1·⟨t⟩)`, with `⟨t⟩` taken at `T̄`.
    pub delta_omega: f64,
    /// Change of the mean time frequency, `−p𝖤1`.
    pub frequency_shift: f64,
    /// Coefficient of `t3` in the kernel phase at this finite `T3`.
    pub phase_slope_t3: f64,
    /// Change of the time velocity `d⟨t⟩/dT` after the pulse.
    pub delta_v: f64,
    pub packet: GaussianPacket4D,
    pub mean_arrival_t: f64,
}

/// Evolve a packet prepared at `T0` through the impulsive pulse to `T3`.
pub fn evolve_dipole_component(
    packet: &GaussianPacket4D,
    p: f64,
    field: &ImpulsiveField,
    m: f64,
    lab_from: f64,
    lab_to: f64,
) -> Result<EvolvedComponent, DipoleError> {
    let free = evolve_gaussian_free(packet, m, lab_from, lab_to)?;
    let time = apply_dipole_time_kernel(&packet.time, m, p, field, lab_from, lab_to)?;
    let evolved = GaussianPacket4D {
        time,
        space: free.space,
        amplitude_scale: packet.amplitude_scale,
        lab_time: lab_to,
    };
    let at_pulse = packet
        .time
        .evolve_free(Axis::Time, m, field.t_bar - lab_from);
    let span = lab_to - lab_from;
    let after = lab_to - field.t_bar;
    Ok(EvolvedComponent {
        p,
        delta_omega: -(p * field.e0_bar + p * field.e1_bar * at_pulse.center()),
        frequency_shift: evolved.omega_a() - free.omega_a(),
        phase_slope_t3: p * field.e1_bar * (field.t_bar - lab_from) / span,
        delta_v: (evolved.t_a() - free.t_a()) / after,
        packet: evolved,
        mean_arrival_t: evolved.t_a(),
    })
}

/// As [`evolve_dipole_component`], failing if the mean arrival time is
/// outside `[window.0, window.1]`.
pub fn evolve_dipole_component_in(
    packet: &GaussianPacket4D,
    p: f64,
    field: &ImpulsiveField,
    m: f64,
    lab_from: f64,
    lab_to: f64,
    window: (f64, f64),
) -> Result<EvolvedComponent, DipoleError> {
    let c = evolve_dipole_component(packet, p, field, m, lab_from, lab_to)?;
    if c.mean_arrival_t < window.0 || c.mean_arrival_t > window.1 {
        return Err(DipoleError::DetectorWindow {
            mean_t: c.mean_arrival_t,
            min: window.0,
            max: window.1,
        });
    }
    Ok(c)
}

/// `−(p𝖤0 + p𝖤1T̄)`.
pub fn precession_shift(p: f64, field: &ImpulsiveField) -> f64 {
    -(p * field.e0_bar + p * field.e1_bar * field.t_bar)
}

/// Density of the time velocity `v = d t/dT` of a time factor:
/// `P(v) = m·S(−m v)` with `S` the spectral density of the phase gradient.
pub fn time_velocity_density(g: &AxisGaussian, m: f64, v: f64) -> f64 {
    m * g.spectral_density(-m * v)
}
