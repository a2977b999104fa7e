//! Closed-form free kernels and Gaussian packets in one time and one space
//! coordinate.
//!
//! Conventions used throughout the crate:
//!
//! * natural units, `ħ = c = 1`;
//! * the time piece of the free kernel carries `exp(−i m Δt² / 2ΔT)`, the
//!   space piece `exp(+i m Δx² / 2ΔT)`;
//! * `√(−i) = e^{−iπ/4}` ([`SQRT_MINUS_I`]), so the time prefactor is
//!   `√(m/2πΔT)·e^{+iπ/4}` and the space prefactor `√(m/2πΔT)·e^{−iπ/4}`;
//! * a packet's time factor oscillates as `e^{−iω(t−t_a)}` and its space factor
//!   as `e^{+ik(x−x_a)}`, and `|φ|² ∝ exp(−(t−t_a)²/σ_t² − (x−x_a)²/σ_x²)`.
//!
//! With these choices the time kernel is the complex conjugate of the space
//! kernel, and both are unitary: `∫ K φ` preserves `∫|φ|²` exactly.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{trapezoid, Grid1D};

/// Complex probability amplitude.
pub type Amplitude = Complex64;

/// The fixed branch of `√(−i)`.
pub const SQRT_MINUS_I: Complex64 = Complex64::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("lab times must increase strictly (T1 = {from}, T2 = {to})")]
    LabTimeOrder { from: f64, to: f64 },
    #[error("mass must be positive, got {0}")]
    NonPositiveMass(f64),
    #[error("packet width must be positive, got {0}")]
    NonPositiveWidth(f64),
    #[error("packet is prepared at lab time {prepared}, not {requested}")]
    LabTimeMismatch { prepared: f64, requested: f64 },
    #[error("moment quadrature window misses {tail:e} of the probability")]
    NonConvergent { tail: f64 },
}

/// A point `(t, x)`: the particle's time coordinate and its position.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub x: f64,
}

impl Event {
    pub fn new(t: f64, x: f64) -> Self {
        Self { t, x }
    }
}

/// Which coordinate a one-dimensional kernel acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    Time,
    Space,
}

impl Axis {
    /// Sign of the kinetic exponent: `−1` for time, `+1` for space.
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Axis::Time => -1.0,
            Axis::Space => 1.0,
        }
    }

    /// Kernel prefactor phase, `e^{−i s π/4}`.
    #[inline]
    pub fn prefactor_phase(self) -> Complex64 {
        match self {
            Axis::Time => SQRT_MINUS_I.conj(),
            Axis::Space => SQRT_MINUS_I,
        }
    }
}

pub(crate) fn check_lab_times(from: f64, to: f64) -> Result<f64, KernelError> {
    let dt = to - from;
    if dt > 0.0 && dt.is_finite() {
        Ok(dt)
    } else {
        Err(KernelError::LabTimeOrder { from, to })
    }
}

pub(crate) fn check_mass(m: f64) -> Result<(), KernelError> {
    if m > 0.0 && m.is_finite() {
        Ok(())
    } else {
        Err(KernelError::NonPositiveMass(m))
    }
}

/// Free kernel of a single axis over a lab-time step `dt > 0`.
#[inline]
pub(crate) fn axis_kernel_unchecked(axis: Axis, m: f64, dt: f64, du: f64) -> Amplitude {
    let modulus = (m / (2.0 * PI * dt)).sqrt();
    let phase = axis.sign() * m * du * du / (2.0 * dt);
    axis.prefactor_phase() * Complex64::from_polar(modulus, phase)
}

/// Free kernel of one axis from `(T1, u1)` to `(T2, u2)`.
pub fn free_axis_kernel(
    axis: Axis,
    m: f64,
    lab_from: f64,
    lab_to: f64,
    u1: f64,
    u2: f64,
) -> Result<Amplitude, KernelError> {
    check_mass(m)?;
    let dt = check_lab_times(lab_from, lab_to)?;
    Ok(axis_kernel_unchecked(axis, m, dt, u2 - u1))
}

/// `√(m/(−2πiΔT)) · exp(−i m (t2−t1)² / 2ΔT)`.
pub fn free_time_kernel(
    m: f64,
    lab_from: f64,
    lab_to: f64,
    t1: f64,
    t2: f64,
) -> Result<Amplitude, KernelError> {
    free_axis_kernel(Axis::Time, m, lab_from, lab_to, t1, t2)
}

/// `√(m/(2πiΔT)) · exp(+i m (x2−x1)² / 2ΔT)`.
pub fn free_space_kernel(
    m: f64,
    lab_from: f64,
    lab_to: f64,
    x1: f64,
    x2: f64,
) -> Result<Amplitude, KernelError> {
    free_axis_kernel(Axis::Space, m, lab_from, lab_to, x1, x2)
}

/// Product of the time and space pieces.
pub fn free_kernel_4d(
    m: f64,
    lab_from: f64,
    lab_to: f64,
    e1: Event,
    e2: Event,
) -> Result<Amplitude, KernelError> {
    Ok(free_time_kernel(m, lab_from, lab_to, e1.t, e2.t)?
        * free_space_kernel(m, lab_from, lab_to, e1.x, e2.x)?)
}

/// Amplitude to run from `e_late` at lab time `lab_late` back to `e_early` at
/// `lab_early < lab_late`: the conjugate of the forward amplitude with the
/// endpoints exchanged, `K(e_early; e_late) = K*(e_late; e_early)`.
pub fn backward_kernel_4d(
    m: f64,
    lab_late: f64,
    lab_early: f64,
    e_late: Event,
    e_early: Event,
) -> Result<Amplitude, KernelError> {
    Ok(free_kernel_4d(m, lab_early, lab_late, e_early, e_late)?.conj())
}

/// Gaussian `exp(−a u² + b u + c)` in one coordinate with complex
/// coefficients; `Re a > 0`.
///
/// This family is closed under free evolution, linear phases and constant
/// factors, which is all the closed-form calculations need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisGaussian {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
}

impl AxisGaussian {
    /// Unit-norm Gaussian with density `∝ exp(−(u−center)²/σ²)` and phase
    /// gradient `gradient` (`k` for space, `−ω` for time).
    pub fn normalized(center: f64, gradient: f64, sigma: f64) -> Self {
        let a = 1.0 / (2.0 * sigma * sigma);
        let log_norm = -0.25 * (PI * sigma * sigma).ln();
        Self {
            a: Complex64::new(a, 0.0),
            b: Complex64::new(center / (sigma * sigma), gradient),
            c: Complex64::new(-center * center * a + log_norm, -gradient * center),
        }
    }

    #[inline]
    pub fn value(&self, u: f64) -> Complex64 {
        (-self.a * u * u + self.b * u + self.c).exp()
    }

    #[inline]
    pub fn density(&self, u: f64) -> f64 {
        (2.0 * (-self.a.re * u * u + self.b.re * u + self.c.re)).exp()
    }

    /// Centre of probability.
    pub fn center(&self) -> f64 {
        self.b.re / (2.0 * self.a.re)
    }

    /// Width parameter σ of the density `exp(−(u−center)²/σ²)`.
    pub fn width(&self) -> f64 {
        (1.0 / (2.0 * self.a.re)).sqrt()
    }

    /// Mean phase gradient `⟨∂_u arg φ⟩`.
    pub fn phase_gradient(&self) -> f64 {
        self.b.im - 2.0 * self.a.im * self.center()
    }

    pub fn norm_sqr(&self) -> f64 {
        let ra = self.a.re;
        (PI / (2.0 * ra)).sqrt() * (self.b.re * self.b.re / (2.0 * ra) + 2.0 * self.c.re).exp()
    }

    /// Multiply by `e^{iκu}`.
    pub fn with_linear_phase(mut self, kappa: f64) -> Self {
        self.b += Complex64::new(0.0, kappa);
        self
    }

    /// Multiply by a constant.
    pub fn scaled(mut self, factor: Complex64) -> Self {
        self.c += factor.ln();
        self
    }

    /// Apply the free kernel of `axis` over a lab-time step `dt > 0`.
    pub fn evolve_free(&self, axis: Axis, m: f64, dt: f64) -> Self {
        // ∫du K(u'' − u) φ(u) in closed form; D → 1 as dt → 0.
        let s = axis.sign();
        let d = Complex64::new(1.0, 0.0) + Complex64::new(0.0, 2.0 * dt / (s * m)) * self.a;
        let b2 = self.b * self.b;
        Self {
            a: self.a / d,
            b: self.b / d,
            c: self.c + Complex64::new(0.0, dt / (2.0 * s * m)) * b2 / d - 0.5 * d.ln(),
        }
    }

    /// Fourier amplitude `∫ φ(u) e^{−igu} du`.
    pub fn fourier(&self, g: f64) -> Complex64 {
        let shifted = self.b - Complex64::new(0.0, g);
        (PI / self.a).sqrt() * (shifted * shifted / (4.0 * self.a) + self.c).exp()
    }

    /// Spectral density in the phase-gradient variable; integrates to the norm.
    pub fn spectral_density(&self, g: f64) -> f64 {
        self.fourier(g).norm_sqr() / (2.0 * PI)
    }
}

/// User-facing packet parameters (widths in the density convention).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacketParams {
    pub t_a: f64,
    pub x_a: f64,
    pub omega_a: f64,
    pub k_a: f64,
    pub sigma_t: f64,
    pub sigma_x: f64,
}

impl PacketParams {
    /// Non-relativistic packet at rest in space with `ω_a = m`, so `⟨t⟩` tracks lab time.
    pub fn at_rest(m: f64, sigma_t: f64, sigma_x: f64) -> Self {
        Self {
            t_a: 0.0,
            x_a: 0.0,
            omega_a: m,
            k_a: 0.0,
            sigma_t,
            sigma_x,
        }
    }
}

/// Separable Gaussian wave function in `(t, x)` prepared at a lab time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPacket4D {
    pub time: AxisGaussian,
    pub space: AxisGaussian,
    pub amplitude_scale: Amplitude,
    /// Lab time `T` at which this wave function is defined.
    pub lab_time: f64,
}

impl GaussianPacket4D {
    /// Normalized packet defined at lab time `lab_time`.
    pub fn new(params: PacketParams, lab_time: f64) -> Result<Self, KernelError> {
        for s in [params.sigma_t, params.sigma_x] {
            if !(s > 0.0 && s.is_finite()) {
                return Err(KernelError::NonPositiveWidth(s));
            }
        }
        Ok(Self {
            time: AxisGaussian::normalized(params.t_a, -params.omega_a, params.sigma_t),
            space: AxisGaussian::normalized(params.x_a, params.k_a, params.sigma_x),
            amplitude_scale: Complex64::new(1.0, 0.0),
            lab_time,
        })
    }

    pub fn t_a(&self) -> f64 {
        self.time.center()
    }
    pub fn x_a(&self) -> f64 {
        self.space.center()
    }
    pub fn omega_a(&self) -> f64 {
        -self.time.phase_gradient()
    }
    pub fn k_a(&self) -> f64 {
        self.space.phase_gradient()
    }
    pub fn sigma_t(&self) -> f64 {
        self.time.width()
    }
    pub fn sigma_x(&self) -> f64 {
        self.space.width()
    }

    pub fn params(&self) -> PacketParams {
        PacketParams {
            t_a: self.t_a(),
            x_a: self.x_a(),
            omega_a: self.omega_a(),
            k_a: self.k_a(),
            sigma_t: self.sigma_t(),
            sigma_x: self.sigma_x(),
        }
    }

    pub fn value(&self, t: f64, x: f64) -> Amplitude {
        self.amplitude_scale * self.time.value(t) * self.space.value(x)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitude_scale.norm_sqr() * self.time.norm_sqr() * self.space.norm_sqr()
    }
}

/// Closed-form free evolution from lab time `lab_from` to `lab_to`.
pub fn evolve_gaussian_free(
    packet: &GaussianPacket4D,
    m: f64,
    lab_from: f64,
    lab_to: f64,
) -> Result<GaussianPacket4D, KernelError> {
    check_mass(m)?;
    let dt = check_lab_times(lab_from, lab_to)?;
    if (packet.lab_time - lab_from).abs() > 1e-12 * (1.0 + lab_from.abs()) {
        return Err(KernelError::LabTimeMismatch {
            prepared: packet.lab_time,
            requested: lab_from,
        });
    }
    Ok(GaussianPacket4D {
        time: packet.time.evolve_free(Axis::Time, m, dt),
        space: packet.space.evolve_free(Axis::Space, m, dt),
        amplitude_scale: packet.amplitude_scale,
        lab_time: lab_to,
    })
}

/// `|φ(t, x)|²`.
pub fn packet_probability_density(packet: &GaussianPacket4D, t: f64, x: f64) -> f64 {
    packet.amplitude_scale.norm_sqr() * packet.time.density(t) * packet.space.density(x)
}

/// First and second moments of a packet's probability density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean_t: f64,
    pub mean_x: f64,
    pub var_t: f64,
    pub var_x: f64,
    /// `⟨t⟩`, the lab time associated with the wave function.
    pub lab_time: f64,
    pub norm: f64,
}

/// Quadrature settings for [`packet_moments_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentQuadrature {
    pub points: usize,
    pub half_width_sigmas: f64,
}

impl Default for MomentQuadrature {
    fn default() -> Self {
        Self {
            points: 4096,
            half_width_sigmas: 10.0,
        }
    }
}

pub fn packet_moments(packet: &GaussianPacket4D) -> Result<Moments, KernelError> {
    packet_moments_with(packet, MomentQuadrature::default())
}

/// Moments by trapezoid quadrature over `±half_width_sigmas·σ` per axis.
pub fn packet_moments_with(
    packet: &GaussianPacket4D,
    quad: MomentQuadrature,
) -> Result<Moments, KernelError> {
    let axis_moments = |g: &AxisGaussian| -> Result<(f64, f64, f64), KernelError> {
        let grid = Grid1D::centered(
            g.center(),
            quad.half_width_sigmas * g.width(),
            quad.points.max(3),
        );
        let dens: Vec<f64> = grid.points().map(|u| g.density(u)).collect();
        let mass = trapezoid(&grid, &dens);
        let tail = ((g.norm_sqr() - mass) / g.norm_sqr()).abs();
        if tail > 1e-10 {
            return Err(KernelError::NonConvergent { tail });
        }
        let first: Vec<f64> = grid.points().zip(&dens).map(|(u, d)| u * d).collect();
        let mean = trapezoid(&grid, &first) / mass;
        let second: Vec<f64> = grid
            .points()
            .zip(&dens)
            .map(|(u, d)| (u - mean).powi(2) * d)
            .collect();
        let var = (trapezoid(&grid, &second) / mass).max(0.0);
        Ok((mass, mean, var))
    };
    let (mass_t, mean_t, var_t) = axis_moments(&packet.time)?;
    let (mass_x, mean_x, var_x) = axis_moments(&packet.space)?;
    Ok(Moments {
        mean_t,
        mean_x,
        var_t,
        var_x,
        lab_time: mean_t,
        norm: packet.amplitude_scale.norm_sqr() * mass_t * mass_x,
    })
}
