//! Per-packet kernel normalization.
//!
//! For a kernel `K` and a prepared packet `φ` at lab time `T1`, the constant
//! `N_φ = ∫de2 |∫de1 K(e2; e1) φ(e1)|²` is evaluated by nested trapezoid
//! quadrature. Scaling `K` by `1/√N_φ` (real, positive) turns it into an
//! amplitude whose outgoing probabilities sum to one.
//!
//! Separable kernels `K = c·K_t(t2; t1)·K_x(x2; x1)` are handled axis by axis,
//! which keeps grids of a few thousand points per axis affordable.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::grid::{Grid1D, GridWave};
use crate::kernels::{
    axis_kernel_unchecked, check_lab_times, evolve_gaussian_free, Amplitude, Axis, AxisGaussian,
    Event, GaussianPacket4D, KernelError,
};

/// `N_φ` of the free kernel written as `(m/ΔT)·e^{iS̄}`, i.e. the
/// semiclassical form with unit constant, in one time and one space
/// dimension: `(2π)²`.
pub const FREE_SEMICLASSICAL_NORMALIZATION: f64 = 4.0 * PI * PI;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormalizationError {
    #[error("quadrature window misses {leaked:e} of the probability")]
    BoundaryLeak { leaked: f64 },
    #[error("normalization constant {0} is not positive")]
    NonPositive(f64),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Amplitude of a single coordinate from `u1` at `lab.0` to `u2` at `lab.1`.
pub trait AxisKernel: Send + Sync {
    fn amplitude(&self, lab: (f64, f64), u1: f64, u2: f64) -> Amplitude;
}

/// Amplitude between events.
pub trait EventKernel: Send + Sync {
    fn amplitude(&self, lab: (f64, f64), e1: Event, e2: Event) -> Amplitude;

    /// `(c, K_t, K_x)` when the kernel factorizes as `c·K_t·K_x`.
    fn factors(&self) -> Option<(Complex64, &dyn AxisKernel, &dyn AxisKernel)> {
        None
    }
}

/// Free kernel of one axis, with the unit-modulus prefactor phase convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeAxisKernel {
    pub axis: Axis,
    pub m: f64,
}

impl AxisKernel for FreeAxisKernel {
    fn amplitude(&self, lab: (f64, f64), u1: f64, u2: f64) -> Amplitude {
        axis_kernel_unchecked(self.axis, self.m, lab.1 - lab.0, u2 - u1)
    }
}

/// Any closure `(lab, u1, u2) → amplitude`.
pub struct FnAxisKernel<F>(pub F);

impl<F: Fn((f64, f64), f64, f64) -> Amplitude + Send + Sync> AxisKernel for FnAxisKernel<F> {
    fn amplitude(&self, lab: (f64, f64), u1: f64, u2: f64) -> Amplitude {
        (self.0)(lab, u1, u2)
    }
}

/// Any closure `(lab, e1, e2) → amplitude`; evaluated by the full double
/// quadrature, so keep its grids small.
pub struct FnEventKernel<F>(pub F);

impl<F: Fn((f64, f64), Event, Event) -> Amplitude + Send + Sync> EventKernel for FnEventKernel<F> {
    fn amplitude(&self, lab: (f64, f64), e1: Event, e2: Event) -> Amplitude {
        (self.0)(lab, e1, e2)
    }
}

/// `scale·K_t(t1, t2)·K_x(x1, x2)`.
pub struct SeparableKernel<T, X> {
    pub scale: Complex64,
    pub time: T,
    pub space: X,
}

impl SeparableKernel<FreeAxisKernel, FreeAxisKernel> {
    /// The free kernel with unit-modulus prefactor phases.
    pub fn free(m: f64) -> Self {
        Self {
            scale: Complex64::new(1.0, 0.0),
            time: FreeAxisKernel {
                axis: Axis::Time,
                m,
            },
            space: FreeAxisKernel {
                axis: Axis::Space,
                m,
            },
        }
    }

    /// `(m/ΔT)·e^{iS̄}`: the free kernel as the semiclassical formula gives it
    /// before any constant is fixed.
    pub fn free_semiclassical(m: f64) -> Self {
        Self {
            scale: Complex64::new(2.0 * PI, 0.0),
            ..Self::free(m)
        }
    }
}

impl<T: AxisKernel, X: AxisKernel> SeparableKernel<T, X> {
    pub fn scaled(self, factor: Complex64) -> Self {
        Self {
            scale: self.scale * factor,
            ..self
        }
    }
}

impl<T: AxisKernel, X: AxisKernel> EventKernel for SeparableKernel<T, X> {
    fn amplitude(&self, lab: (f64, f64), e1: Event, e2: Event) -> Amplitude {
        self.scale * self.time.amplitude(lab, e1.t, e2.t) * self.space.amplitude(lab, e1.x, e2.x)
    }

    fn factors(&self) -> Option<(Complex64, &dyn AxisKernel, &dyn AxisKernel)> {
        Some((self.scale, &self.time, &self.space))
    }
}

/// Input windows for the prepared packet and output windows for its image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalizationGrid {
    pub input_t: Grid1D,
    pub input_x: Grid1D,
    pub output_t: Grid1D,
    pub output_x: Grid1D,
}

impl NormalizationGrid {
    /// `±10σ` windows around the packet and around its freely evolved image,
    /// widened by `margin` on the output side to absorb kicks.
    pub fn covering(
        packet: &GaussianPacket4D,
        m: f64,
        lab_to: f64,
        n_t: usize,
        n_x: usize,
        margin: f64,
    ) -> Result<Self, KernelError> {
        let out = evolve_gaussian_free(packet, m, packet.lab_time, lab_to)?;
        let win = |g: &AxisGaussian, extra: f64, n: usize| {
            Grid1D::centered(g.center(), 10.0 * g.width() + extra, n)
        };
        Ok(Self {
            input_t: win(&packet.time, 0.0, n_t),
            input_x: win(&packet.space, 0.0, n_x),
            output_t: win(&out.time, margin, n_t),
            output_x: win(&out.space, margin, n_x),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalizationResult {
    pub n_phi: f64,
    pub normalized_scale: Amplitude,
    pub residual: f64,
}

/// Fraction of a sampled density in the outer 2% of the window at each end.
fn edge_fraction(grid: &Grid1D, density: &[f64]) -> f64 {
    let k = (grid.len / 50).max(1);
    let total: f64 = density
        .iter()
        .enumerate()
        .map(|(i, d)| grid.weight(i) * d)
        .sum();
    let edges: f64 = density[..k]
        .iter()
        .chain(&density[grid.len - k..])
        .map(|d| d * grid.step)
        .sum();
    edges / total
}

const EDGE_TOLERANCE: f64 = 1e-10;

fn check_input(g: &AxisGaussian, grid: &Grid1D) -> Result<Vec<Complex64>, NormalizationError> {
    let values: Vec<Complex64> = grid.points().map(|u| g.value(u)).collect();
    let mass: f64 = values
        .iter()
        .enumerate()
        .map(|(i, v)| grid.weight(i) * v.norm_sqr())
        .sum();
    let leaked = ((g.norm_sqr() - mass) / g.norm_sqr()).abs();
    if leaked > EDGE_TOLERANCE {
        return Err(NormalizationError::BoundaryLeak { leaked });
    }
    Ok(values)
}

/// `∫du1 K(u1, u2) φ(u1)` on `output`.
fn apply_axis(
    kernel: &dyn AxisKernel,
    lab: (f64, f64),
    input: &Grid1D,
    phi: &[Complex64],
    output: &Grid1D,
) -> Vec<Complex64> {
    (0..output.len)
        .into_par_iter()
        .map(|j| {
            let u2 = output.point(j);
            phi.iter()
                .enumerate()
                .map(|(i, v)| kernel.amplitude(lab, input.point(i), u2) * v * input.weight(i))
                .sum()
        })
        .collect()
}

/// Raw (unnormalized) image of the packet on the output grids, checking that
/// the windows hold the probability.
fn raw_image(
    kernel: &dyn EventKernel,
    packet: &GaussianPacket4D,
    lab: (f64, f64),
    grid: &NormalizationGrid,
) -> Result<GridWave, NormalizationError> {
    check_lab_times(lab.0, lab.1)?;
    let phi_t = check_input(&packet.time, &grid.input_t)?;
    let phi_x = check_input(&packet.space, &grid.input_x)?;
    let image = match kernel.factors() {
        Some((scale, kt, kx)) => {
            let out_t = apply_axis(kt, lab, &grid.input_t, &phi_t, &grid.output_t);
            let out_x = apply_axis(kx, lab, &grid.input_x, &phi_x, &grid.output_x);
            let dens_t: Vec<f64> = out_t.iter().map(|v| v.norm_sqr()).collect();
            let dens_x: Vec<f64> = out_x.iter().map(|v| v.norm_sqr()).collect();
            let leaked =
                edge_fraction(&grid.output_t, &dens_t).max(edge_fraction(&grid.output_x, &dens_x));
            if leaked > EDGE_TOLERANCE {
                return Err(NormalizationError::BoundaryLeak { leaked });
            }
            let c = scale * packet.amplitude_scale;
            let mut values = Vec::with_capacity(out_t.len() * out_x.len());
            for a in &out_t {
                for b in &out_x {
                    values.push(c * a * b);
                }
            }
            GridWave {
                t_grid: grid.output_t,
                x_grid: Some(grid.output_x),
                values,
            }
        }
        None => {
            let n_x = grid.output_x.len;
            let values: Vec<Complex64> = (0..grid.output_t.len * n_x)
                .into_par_iter()
                .map(|idx| {
                    let e2 = Event::new(
                        grid.output_t.point(idx / n_x),
                        grid.output_x.point(idx % n_x),
                    );
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (i, pt) in phi_t.iter().enumerate() {
                        let t1 = grid.input_t.point(i);
                        let wt = grid.input_t.weight(i);
                        for (k, px) in phi_x.iter().enumerate() {
                            let e1 = Event::new(t1, grid.input_x.point(k));
                            acc += kernel.amplitude(lab, e1, e2)
                                * pt
                                * px
                                * wt
                                * grid.input_x.weight(k);
                        }
                    }
                    acc * packet.amplitude_scale
                })
                .collect();
            let wave = GridWave {
                t_grid: grid.output_t,
                x_grid: Some(grid.output_x),
                values,
            };
            let leaked = edge_fraction(&grid.output_t, &wave.t_marginal()).max(edge_fraction(
                &grid.output_x,
                &wave.x_marginal().expect("2D wave"),
            ));
            if leaked > EDGE_TOLERANCE {
                return Err(NormalizationError::BoundaryLeak { leaked });
            }
            wave
        }
    };
    Ok(image)
}

fn result_from(n_phi: f64) -> Result<NormalizationResult, NormalizationError> {
    if !(n_phi > 0.0 && n_phi.is_finite()) {
        return Err(NormalizationError::NonPositive(n_phi));
    }
    let scale = 1.0 / n_phi.sqrt();
    Ok(NormalizationResult {
        n_phi,
        normalized_scale: Complex64::new(scale, 0.0),
        residual: (n_phi * scale * scale - 1.0).abs(),
    })
}

/// `N_φ` of `kernel` for `packet` prepared at `lab_from`.
pub fn normalization_constant(
    kernel: &dyn EventKernel,
    packet: &GaussianPacket4D,
    lab_from: f64,
    lab_to: f64,
    grid: &NormalizationGrid,
) -> Result<NormalizationResult, NormalizationError> {
    let image = raw_image(kernel, packet, (lab_from, lab_to), grid)?;
    result_from(image.norm_sqr())
}

/// Apply `kernel` to `packet` and rescale to unit norm.
pub fn normalized_evolve(
    kernel: &dyn EventKernel,
    packet: &GaussianPacket4D,
    lab_from: f64,
    lab_to: f64,
    grid: &NormalizationGrid,
) -> Result<(GridWave, NormalizationResult), NormalizationError> {
    let mut image = raw_image(kernel, packet, (lab_from, lab_to), grid)?;
    let result = result_from(image.norm_sqr())?;
    image.scale(result.normalized_scale);
    let residual = (image.norm_sqr() - 1.0).abs();
    Ok((image, NormalizationResult { residual, ..result }))
}

/// One-axis version of [`normalization_constant`]: `∫du2 |∫du1 K φ|²`.
pub fn axis_normalization(
    kernel: &dyn AxisKernel,
    packet: &AxisGaussian,
    lab: (f64, f64),
    input: &Grid1D,
    output: &Grid1D,
) -> Result<(Vec<Complex64>, NormalizationResult), NormalizationError> {
    check_lab_times(lab.0, lab.1)?;
    let phi = check_input(packet, input)?;
    let mut out = apply_axis(kernel, lab, input, &phi, output);
    let dens: Vec<f64> = out.iter().map(|v| v.norm_sqr()).collect();
    let leaked = edge_fraction(output, &dens);
    if leaked > EDGE_TOLERANCE {
        return Err(NormalizationError::BoundaryLeak { leaked });
    }
    let n: f64 = dens
        .iter()
        .enumerate()
        .map(|(i, d)| output.weight(i) * d)
        .sum();
    let result = result_from(n)?;
    for v in &mut out {
        *v *= result.normalized_scale;
    }
    Ok((out, result))
}
