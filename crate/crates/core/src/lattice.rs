//! Brute-force path-integral oracle.
//!
//! [`trotter_propagate`] applies `N` short-time kernels to a sampled wave
//! function. Each slice is a Gaussian convolution along every active axis,
//! sandwiched between half-slice potential phases. The grid is uniform and
//! non-periodic: the convolution runs on a zero-padded copy of the grid, and
//! whatever lands in the padding counts as leaked mass.
//!
//! The grid kernel is the inverse DFT of the damped continuum multiplier
//! `M(ω) = e^{−isπ/4}/√(2η − is) · exp(−εω² / (4m(η − is/2)))`, the exact
//! Fourier transform of `√(m/2πε)·e^{−isπ/4}·exp(i s m Δ²/2ε − η m Δ²/ε)`.
//! At `η = 0` this is the pure phase `e^{−isεω²/2m}`.
//!
//! [`sample_fourier_paths`] draws paths around the straight line and records
//! their actions; it is a structural check on the action, not a Monte Carlo
//! evaluator.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Grid1D, GridWave};
use crate::kernels::{
    axis_kernel_unchecked, check_lab_times, check_mass, Axis, Event, KernelError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("grid boundary leaked {leaked:e} of the probability (tolerance {tolerance:e})")]
    BoundaryLeak { leaked: f64, tolerance: f64 },
    #[error("regularization extrapolation did not settle (relative change {change:e})")]
    NonConvergent { change: f64 },
    #[error("invalid lattice configuration: {0}")]
    InvalidConfig(String),
    #[error("wave function grid does not match the lattice configuration")]
    GridMismatch,
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// How the kinetic convolution is evaluated. Both give the same operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convolution {
    /// FFT on the padded grid, `O(n log n)`.
    #[default]
    Spectral,
    /// Explicit Toeplitz matrix, `O(n²)`.
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub n_slices: usize,
    pub epsilon: f64,
    /// Lab time at which propagation starts.
    pub lab_start: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub n_t: usize,
    #[serde(default)]
    pub x_min: f64,
    #[serde(default)]
    pub x_max: f64,
    /// Zero disables the space axis.
    #[serde(default)]
    pub n_x: usize,
    #[serde(default)]
    pub reg_eta: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub convolution: Convolution,
    #[serde(default = "default_leak_tolerance")]
    pub leak_tolerance: f64,
}

fn default_leak_tolerance() -> f64 {
    1e-10
}

impl LatticeConfig {
    /// Time-only lattice over `[lab_from, lab_to]`.
    pub fn time_only(
        lab_from: f64,
        lab_to: f64,
        n_slices: usize,
        t_window: (f64, f64),
        n_t: usize,
    ) -> Self {
        Self {
            n_slices,
            epsilon: (lab_to - lab_from) / n_slices as f64,
            lab_start: lab_from,
            t_min: t_window.0,
            t_max: t_window.1,
            n_t,
            x_min: 0.0,
            x_max: 0.0,
            n_x: 0,
            reg_eta: 0.0,
            seed: 0,
            convolution: Convolution::Spectral,
            leak_tolerance: default_leak_tolerance(),
        }
    }

    /// Adds a space axis.
    pub fn with_space(mut self, x_window: (f64, f64), n_x: usize) -> Self {
        self.x_min = x_window.0;
        self.x_max = x_window.1;
        self.n_x = n_x;
        self
    }

    pub fn lab_end(&self) -> f64 {
        self.lab_start + self.epsilon * self.n_slices as f64
    }

    pub fn t_grid(&self) -> Grid1D {
        Grid1D::spanning(self.t_min, self.t_max, self.n_t)
    }

    pub fn x_grid(&self) -> Option<Grid1D> {
        (self.n_x > 0).then(|| Grid1D::spanning(self.x_min, self.x_max, self.n_x))
    }

    pub fn validate(&self) -> Result<(), LatticeError> {
        let bad = |msg: &str| Err(LatticeError::InvalidConfig(msg.to_string()));
        if self.n_slices == 0 {
            return bad("n_slices must be at least 1");
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon must be positive");
        }
        if self.n_t < 2 || self.t_max <= self.t_min {
            return bad("t grid needs at least two points and t_max > t_min");
        }
        if self.n_x == 1 || (self.n_x > 1 && self.x_max <= self.x_min) {
            return bad("x grid needs at least two points and x_max > x_min");
        }
        if !(self.reg_eta >= 0.0 && self.reg_eta.is_finite()) {
            return bad("reg_eta must be non-negative");
        }
        Ok(())
    }
}

/// Potential acting during propagation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    Free,
    /// `V = −p(E0 + E1·t)` while the lab time is inside `[t_start, t_end]`.
    LinearInTPulse {
        e0: f64,
        e1: f64,
        t_start: f64,
        t_end: f64,
        dipole_p: f64,
    },
}

impl PotentialSpec {
    /// `V(T, t)`.
    pub fn value(&self, lab: f64, t: f64) -> f64 {
        match *self {
            PotentialSpec::Free => 0.0,
            PotentialSpec::LinearInTPulse {
                e0,
                e1,
                t_start,
                t_end,
                dipole_p,
            } => {
                if lab >= t_start && lab <= t_end {
                    -dipole_p * (e0 + e1 * t)
                } else {
                    0.0
                }
            }
        }
    }

    /// `∫ V(T, t) dT` over the lab-time interval `[from, to]`.
    pub fn integrated(&self, from: f64, to: f64, t: f64) -> f64 {
        match *self {
            PotentialSpec::Free => 0.0,
            PotentialSpec::LinearInTPulse {
                e0,
                e1,
                t_start,
                t_end,
                dipole_p,
            } => {
                let overlap = (to.min(t_end) - from.max(t_start)).max(0.0);
                -dipole_p * (e0 + e1 * t) * overlap
            }
        }
    }

    /// `∂V/∂t` at lab time `lab`.
    pub fn t_derivative(&self, lab: f64, _t: f64) -> f64 {
        match *self {
            PotentialSpec::Free => 0.0,
            PotentialSpec::LinearInTPulse {
                e1,
                t_start,
                t_end,
                dipole_p,
                ..
            } => {
                if lab >= t_start && lab <= t_end {
                    -dipole_p * e1
                } else {
                    0.0
                }
            }
        }
    }

    /// Lab times where the potential switches on or off.
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            PotentialSpec::Free => Vec::new(),
            PotentialSpec::LinearInTPulse { t_start, t_end, .. } => vec![t_start, t_end],
        }
    }

    fn is_free(&self) -> bool {
        match *self {
            PotentialSpec::Free => true,
            PotentialSpec::LinearInTPulse {
                e0, e1, dipole_p, ..
            } => dipole_p == 0.0 || (e0 == 0.0 && e1 == 0.0),
        }
    }
}

/// Damped short-time multiplier of one axis at angular frequency `w`.
pub fn kinetic_multiplier(axis: Axis, m: f64, epsilon: f64, eta: f64, w: f64) -> Complex64 {
    let s = axis.sign();
    let root = Complex64::new(2.0 * eta, -s).sqrt();
    let denom = Complex64::new(4.0 * m * eta, -2.0 * m * s);
    axis.prefactor_phase() / root * (-(w * w * epsilon) / denom).exp()
}

/// One-axis short-time kernel on a padded uniform grid.
pub struct AxisPropagator {
    n: usize,
    padded: usize,
    step: f64,
    /// Multiplier with the `1/P` of the inverse FFT folded in.
    multiplier: Vec<Complex64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    /// Circulant first column, present for dense application.
    dense: Option<Vec<Complex64>>,
}

impl AxisPropagator {
    pub fn new(
        axis: Axis,
        m: f64,
        epsilon: f64,
        eta: f64,
        grid: Grid1D,
        convolution: Convolution,
    ) -> Self {
        let n = grid.len;
        let padded = (2 * n).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(padded);
        let ifft = planner.plan_fft_inverse(padded);
        let dw = 2.0 * PI / (padded as f64 * grid.step);
        let multiplier: Vec<Complex64> = (0..padded)
            .map(|k| {
                let kk = if k <= padded / 2 {
                    k as f64
                } else {
                    k as f64 - padded as f64
                };
                kinetic_multiplier(axis, m, epsilon, eta, kk * dw) / padded as f64
            })
            .collect();
        let dense = match convolution {
            Convolution::Spectral => None,
            Convolution::Dense => {
                let mut c = multiplier.clone();
                ifft.process(&mut c);
                Some(c)
            }
        };
        Self {
            n,
            padded,
            step: grid.step,
            multiplier,
            fft,
            ifft,
            dense,
        }
    }

    /// Convolve `line` in place; returns `Σ|ψ|²·h` that fell off the grid.
    pub fn apply(&self, line: &mut [Complex64]) -> f64 {
        debug_assert_eq!(line.len(), self.n);
        let out = match &self.dense {
            None => {
                let mut buf = vec![Complex64::new(0.0, 0.0); self.padded];
                buf[..self.n].copy_from_slice(line);
                self.fft.process(&mut buf);
                for (b, m) in buf.iter_mut().zip(&self.multiplier) {
                    *b *= m;
                }
                self.ifft.process(&mut buf);
                buf
            }
            Some(c) => (0..self.padded)
                .map(|i| {
                    line.iter()
                        .enumerate()
                        .map(|(j, v)| c[(i + self.padded - j) % self.padded] * v)
                        .sum()
                })
                .collect(),
        };
        line.copy_from_slice(&out[..self.n]);
        out[self.n..].iter().map(|v| v.norm_sqr()).sum::<f64>() * self.step
    }
}

struct SliceOperators {
    time: AxisPropagator,
    space: Option<AxisPropagator>,
}

fn run_slices(
    config: &LatticeConfig,
    potential: &PotentialSpec,
    psi0: &GridWave,
    m: f64,
    eta: f64,
) -> Result<GridWave, LatticeError> {
    let t_grid = config.t_grid();
    let x_grid = config.x_grid();
    let ops = SliceOperators {
        time: AxisPropagator::new(
            Axis::Time,
            m,
            config.epsilon,
            eta,
            t_grid,
            config.convolution,
        ),
        space: x_grid.map(|g| {
            AxisPropagator::new(Axis::Space, m, config.epsilon, eta, g, config.convolution)
        }),
    };
    let n_x = psi0.n_x();
    let n_t = t_grid.len;
    let mut psi = psi0.clone();
    let initial = psi.norm_sqr();
    let mut leaked = 0.0;
    let free = potential.is_free();
    let mut column = vec![Complex64::new(0.0, 0.0); n_t];

    for slice in 0..config.n_slices {
        let from = config.lab_start + slice as f64 * config.epsilon;
        let to = from + config.epsilon;
        let half_phase: Vec<Complex64> = if free {
            Vec::new()
        } else {
            t_grid
                .points()
                .map(|t| Complex64::from_polar(1.0, -0.5 * potential.integrated(from, to, t)))
                .collect()
        };
        let apply_phase = |psi: &mut GridWave| {
            if !half_phase.is_empty() {
                psi.values
                    .par_chunks_mut(n_x)
                    .zip(half_phase.par_iter())
                    .for_each(|(row, ph)| row.iter_mut().for_each(|v| *v *= ph));
            }
        };
        apply_phase(&mut psi);

        if let (Some(op), Some(xg)) = (&ops.space, x_grid) {
            // leak along x, weighted by the t quadrature
            let leaks: Vec<f64> = psi
                .values
                .par_chunks_mut(n_x)
                .map(|row| op.apply(row))
                .collect();
            leaked += leaks
                .iter()
                .enumerate()
                .map(|(i, l)| l * t_grid.weight(i))
                .sum::<f64>();
            let cols: Vec<(Vec<Complex64>, f64)> = (0..n_x)
                .into_par_iter()
                .map(|j| {
                    let mut col: Vec<Complex64> =
                        (0..n_t).map(|i| psi.values[i * n_x + j]).collect();
                    let l = ops.time.apply(&mut col);
                    (col, l * xg.weight(j))
                })
                .collect();
            for (j, (col, l)) in cols.into_iter().enumerate() {
                leaked += l;
                for (i, v) in col.into_iter().enumerate() {
                    psi.values[i * n_x + j] = v;
                }
            }
        } else {
            column.copy_from_slice(&psi.values);
            leaked += ops.time.apply(&mut column);
            psi.values.copy_from_slice(&column);
        }

        apply_phase(&mut psi);

        let tolerance = config.leak_tolerance * initial;
        if leaked > tolerance {
            return Err(LatticeError::BoundaryLeak {
                leaked: leaked / initial,
                tolerance: config.leak_tolerance,
            });
        }
    }
    Ok(psi)
}

/// Propagate `psi0` over `config.n_slices` lab-time slices.
///
/// With `reg_eta > 0` the kernels are damped and the result is extrapolated
/// to zero damping from runs at `η` and `η/2`.
pub fn trotter_propagate(
    config: &LatticeConfig,
    potential: &PotentialSpec,
    psi0: &GridWave,
    m: f64,
) -> Result<GridWave, LatticeError> {
    config.validate()?;
    check_mass(m)?;
    if psi0.t_grid != config.t_grid() || psi0.x_grid != config.x_grid() {
        return Err(LatticeError::GridMismatch);
    }
    if config.reg_eta == 0.0 {
        return run_slices(config, potential, psi0, m, 0.0);
    }
    let coarse = run_slices(config, potential, psi0, m, config.reg_eta)?;
    let fine = run_slices(config, potential, psi0, m, 0.5 * config.reg_eta)?;
    let mut out = fine.clone();
    for (o, c) in out.values.iter_mut().zip(&coarse.values) {
        *o = 2.0 * *o - c;
    }
    let change = crate::grid::relative_l2(&fine, &out);
    if !(change < 1e-3) {
        return Err(LatticeError::NonConvergent { change });
    }
    Ok(out)
}

/// Quadrature settings for [`kernel_compose_check`]. `None` picks a size from
/// the damping schedule.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComposeWindow {
    pub half_width: Option<f64>,
    pub points: Option<usize>,
}

const COMPOSE_ETA0: f64 = 4e-3;
const COMPOSE_LEVELS: usize = 5;

/// `∫ du K(u3 − u; b) K(u − u1; a)` with damping `exp(−η|α|(u − u*)²)`,
/// evaluated for a halving sequence of `η` and extrapolated to `η = 0`.
fn composed_amplitude(
    axis: Axis,
    m: f64,
    a: f64,
    b: f64,
    u1: f64,
    u3: f64,
    window: ComposeWindow,
) -> Complex64 {
    // |α| is the curvature of the combined phase in u
    let alpha = 0.5 * m * (1.0 / a + 1.0 / b);
    let center = (a * u3 + b * u1) / (a + b);
    let eta_min = COMPOSE_ETA0 * alpha / (1u64 << (COMPOSE_LEVELS - 1)) as f64;
    let half_width = window.half_width.unwrap_or_else(|| (40.0 / eta_min).sqrt());
    let points = window.points.unwrap_or_else(|| {
        let h = 2.0 * PI / alpha * (eta_min / 160.0).sqrt();
        let n = (2.0 * half_width / h).ceil() as usize;
        n | 1
    });
    let grid = Grid1D::centered(center, half_width, points.max(2));
    let estimates: Vec<Complex64> = (0..COMPOSE_LEVELS)
        .map(|level| {
            let eta = COMPOSE_ETA0 * alpha / (1u64 << level) as f64;
            (0..grid.len)
                .into_par_iter()
                .map(|i| {
                    let u = grid.point(i);
                    let damp = (-eta * (u - center) * (u - center)).exp();
                    axis_kernel_unchecked(axis, m, b, u3 - u)
                        * axis_kernel_unchecked(axis, m, a, u - u1)
                        * damp
                        * grid.weight(i)
                })
                .sum()
        })
        .collect();
    richardson(&estimates)
}

/// Extrapolate `f(η)` sampled at `η0, η0/2, η0/4, …` to `η = 0`.
fn richardson(estimates: &[Complex64]) -> Complex64 {
    let mut table = estimates.to_vec();
    for order in 1..table.len() {
        let factor = (1u64 << order) as f64;
        for i in (order..table.len()).rev() {
            table[i] = (factor * table[i] - table[i - 1]) / (factor - 1.0);
        }
    }
    *table.last().expect("at least one estimate")
}

/// Numerical Chapman-Kolmogorov check of a free kernel.
///
/// For each consecutive triple of `lab_times` the two-step kernel from
/// `endpoints.0` to `endpoints.1` is computed by quadrature over the middle
/// coordinate and compared with the one-step kernel. Returns the largest
/// relative residual.
pub fn kernel_compose_check(
    axis: Axis,
    m: f64,
    lab_times: &[f64],
    endpoints: (f64, f64),
    window: ComposeWindow,
) -> Result<f64, LatticeError> {
    check_mass(m)?;
    if lab_times.len() < 3 {
        return Err(LatticeError::InvalidConfig(
            "need at least three lab times".into(),
        ));
    }
    let mut worst = 0.0f64;
    for w in lab_times.windows(3) {
        let a = check_lab_times(w[0], w[1])?;
        let b = check_lab_times(w[1], w[2])?;
        let composed = composed_amplitude(axis, m, a, b, endpoints.0, endpoints.1, window);
        let direct = axis_kernel_unchecked(axis, m, a + b, endpoints.1 - endpoints.0);
        worst = worst.max((composed - direct).norm() / direct.norm());
    }
    Ok(worst)
}

/// Settings for [`sample_fourier_paths`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierSampler {
    pub n_modes: usize,
    /// Standard deviation of mode `n` is `amplitude_scale / n`.
    pub amplitude_scale: f64,
    /// Lab-time quadrature nodes per path.
    pub n_quadrature: usize,
}

impl Default for FourierSampler {
    fn default() -> Self {
        Self {
            n_modes: 8,
            amplitude_scale: 0.1,
            n_quadrature: 513,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathEnsemble {
    pub n_modes: usize,
    /// Mode amplitudes of `t(T)`, one vector per path.
    pub coefficients: Vec<Vec<f64>>,
    /// Mode amplitudes of `x(T)`.
    pub x_coefficients: Vec<Vec<f64>>,
    pub actions: Vec<f64>,
    pub mean_action: f64,
    pub action_variance: f64,
    /// Action of the straight line joining the endpoints.
    pub straight_action: f64,
    /// Fraction of quadrature nodes, over all paths, where `t` lies outside
    /// the interval spanned by the endpoint times.
    pub overshoot_fraction: f64,
}

/// Action of the path `line + Σ a_n sin(nπ(T − T1)/ΔT)` in both coordinates.
pub fn fourier_path_action(
    m: f64,
    potential: &PotentialSpec,
    lab: (f64, f64),
    e1: Event,
    e2: Event,
    t_modes: &[f64],
    x_modes: &[f64],
    n_quadrature: usize,
) -> (f64, f64) {
    let dt_lab = lab.1 - lab.0;
    let grid = Grid1D::spanning(lab.0, lab.1, n_quadrature.max(2));
    let eval = |modes: &[f64], start: f64, end: f64, tau: f64| {
        let mut value = start + (end - start) * tau / dt_lab;
        let mut rate = (end - start) / dt_lab;
        for (k, a) in modes.iter().enumerate() {
            let w = (k + 1) as f64 * PI / dt_lab;
            value += a * (w * tau).sin();
            rate += a * w * (w * tau).cos();
        }
        (value, rate)
    };
    let mut action = 0.0;
    let mut outside = 0usize;
    let (lo, hi) = (e1.t.min(e2.t), e1.t.max(e2.t));
    for i in 0..grid.len {
        let big_t = grid.point(i);
        let tau = big_t - lab.0;
        let (t, tdot) = eval(t_modes, e1.t, e2.t, tau);
        let (_, xdot) = eval(x_modes, e1.x, e2.x, tau);
        let lagrangian = -0.5 * m * tdot * tdot + 0.5 * m * xdot * xdot - potential.value(big_t, t);
        action += grid.weight(i) * lagrangian;
        if t < lo || t > hi {
            outside += 1;
        }
    }
    (action, outside as f64 / grid.len as f64)
}

/// Draw `n_paths` Fourier paths between `(T1, e1)` and `(T2, e2)`.
///
/// Path `i` uses its own ChaCha stream keyed by `(seed, i)`, so the ensemble
/// is identical for any thread count.
pub fn sample_fourier_paths(
    sampler: &FourierSampler,
    seed: u64,
    lab: (f64, f64),
    endpoints: (Event, Event),
    n_paths: usize,
    m: f64,
    potential: &PotentialSpec,
) -> Result<PathEnsemble, LatticeError> {
    check_mass(m)?;
    check_lab_times(lab.0, lab.1)?;
    if sampler.n_modes == 0 {
        return Err(LatticeError::InvalidConfig(
            "n_modes must be at least 1".into(),
        ));
    }
    let (e1, e2) = endpoints;
    let draws: Vec<(Vec<f64>, Vec<f64>, f64, f64)> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut draw = |n: usize| -> Vec<f64> {
                (1..=n)
                    .map(|k| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        z * sampler.amplitude_scale / k as f64
                    })
                    .collect()
            };
            let t_modes = draw(sampler.n_modes);
            let x_modes = draw(sampler.n_modes);
            let (s, over) = fourier_path_action(
                m,
                potential,
                lab,
                e1,
                e2,
                &t_modes,
                &x_modes,
                sampler.n_quadrature,
            );
            (t_modes, x_modes, s, over)
        })
        .collect();
    let (straight_action, _) =
        fourier_path_action(m, potential, lab, e1, e2, &[], &[], sampler.n_quadrature);
    let n = draws.len().max(1) as f64;
    let actions: Vec<f64> = draws.iter().map(|d| d.2).collect();
    let mean_action = actions.iter().sum::<f64>() / n;
    let action_variance = actions
        .iter()
        .map(|s| (s - mean_action).powi(2))
        .sum::<f64>()
        / n;
    let overshoot_fraction = draws.iter().map(|d| d.3).sum::<f64>() / n;
    let mut coefficients = Vec::with_capacity(draws.len());
    let mut x_coefficients = Vec::with_capacity(draws.len());
    for (t, x, _, _) in draws {
        coefficients.push(t);
        x_coefficients.push(x);
    }
    Ok(PathEnsemble {
        n_modes: sampler.n_modes,
        coefficients,
        x_coefficients,
        actions,
        mean_action,
        action_variance,
        straight_action,
        overshoot_fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{relative_l2, relative_l2_modulo_phase};
    use crate::kernels::AxisGaussian;

    fn gaussian_wave(grid: Grid1D, center: f64, gradient: f64, sigma: f64) -> GridWave {
        let g = AxisGaussian::normalized(center, gradient, sigma);
        GridWave::from_fn_1d(grid, |u| g.value(u))
    }

    #[test]
    fn multiplier_is_unimodular_without_damping() {
        for axis in [Axis::Time, Axis::Space] {
            for w in [0.0, 0.3, 5.0, 40.0] {
                let m = kinetic_multiplier(axis, 1.0, 0.1, 0.0, w);
                assert!((m.norm() - 1.0).abs() < 1e-14);
                let expected = Complex64::from_polar(1.0, -axis.sign() * 0.1 * w * w / 2.0);
                assert!((m - expected).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn one_slice_matches_direct_kernel_quadrature() {
        let grid = Grid1D::centered(0.0, 12.0, 801);
        let psi0 = gaussian_wave(grid, 0.5, -1.0, 1.0);
        let config = LatticeConfig::time_only(0.0, 1.0, 1, (grid.start, grid.end()), grid.len);
        let out = trotter_propagate(&config, &PotentialSpec::Free, &psi0, 1.0).unwrap();
        let direct = GridWave::from_fn_1d(grid, |t| {
            grid.points()
                .zip(&psi0.values)
                .enumerate()
                .map(|(j, (u, v))| {
                    axis_kernel_unchecked(Axis::Time, 1.0, 1.0, t - u) * v * grid.weight(j)
                })
                .sum()
        });
        assert!(
            relative_l2(&out, &direct) < 1e-12,
            "{}",
            relative_l2(&out, &direct)
        );
    }

    #[test]
    fn dense_and_spectral_agree() {
        let grid = Grid1D::centered(0.0, 10.0, 300);
        let psi0 = gaussian_wave(grid, 0.0, 0.7, 1.0);
        let mut config = LatticeConfig::time_only(0.0, 0.5, 4, (grid.start, grid.end()), grid.len);
        let pulse = PotentialSpec::LinearInTPulse {
            e0: 0.3,
            e1: 0.2,
            t_start: 0.1,
            t_end: 0.3,
            dipole_p: 1.0,
        };
        let a = trotter_propagate(&config, &pulse, &psi0, 1.0).unwrap();
        config.convolution = Convolution::Dense;
        let b = trotter_propagate(&config, &pulse, &psi0, 1.0).unwrap();
        assert!(relative_l2(&a, &b) < 1e-10);
    }

    #[test]
    fn free_mass_is_conserved_per_slice() {
        let grid = Grid1D::centered(0.0, 15.0, 1024);
        let psi0 = gaussian_wave(grid, 0.0, 0.0, 1.0);
        let config = LatticeConfig::time_only(0.0, 1.0, 16, (grid.start, grid.end()), grid.len);
        let out = trotter_propagate(&config, &PotentialSpec::Free, &psi0, 1.0).unwrap();
        assert!((out.norm_sqr() - psi0.norm_sqr()).abs() < 16.0 * 1e-9);
    }

    #[test]
    fn small_grid_reports_leak() {
        let grid = Grid1D::centered(0.0, 3.0, 256);
        let psi0 = gaussian_wave(grid, 0.0, 0.0, 1.0);
        let config = LatticeConfig::time_only(0.0, 4.0, 8, (grid.start, grid.end()), grid.len);
        assert!(matches!(
            trotter_propagate(&config, &PotentialSpec::Free, &psi0, 1.0),
            Err(LatticeError::BoundaryLeak { .. })
        ));
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let grid = Grid1D::centered(0.0, 10.0, 256);
        let psi0 = gaussian_wave(grid, 0.0, 0.0, 1.0);
        let config = LatticeConfig::time_only(0.0, 1.0, 4, (-9.0, 9.0), 256);
        assert_eq!(
            trotter_propagate(&config, &PotentialSpec::Free, &psi0, 1.0),
            Err(LatticeError::GridMismatch)
        );
    }

    #[test]
    fn free_time_evolution_matches_closed_form() {
        let grid = Grid1D::centered(1.0, 24.0, 2048);
        let g = AxisGaussian::normalized(0.0, 0.8, 1.0);
        let psi0 = GridWave::from_fn_1d(grid, |u| g.value(u));
        let config = LatticeConfig::time_only(0.0, 2.0, 32, (grid.start, grid.end()), grid.len);
        let out = trotter_propagate(&config, &PotentialSpec::Free, &psi0, 1.0).unwrap();
        let exact = g.evolve_free(Axis::Time, 1.0, 2.0);
        let expected = GridWave::from_fn_1d(grid, |u| exact.value(u));
        let err = relative_l2(&out, &expected);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn two_dimensional_free_matches_product() {
        let tg = Grid1D::centered(1.0, 12.0, 256);
        let xg = Grid1D::centered(0.5, 12.0, 200);
        let gt = AxisGaussian::normalized(0.0, -1.0, 1.0);
        let gx = AxisGaussian::normalized(0.0, 0.5, 1.2);
        let psi0 = GridWave::from_fn_2d(tg, xg, |t, x| gt.value(t) * gx.value(x));
        let config = LatticeConfig::time_only(0.0, 1.0, 8, (tg.start, tg.end()), tg.len)
            .with_space((xg.start, xg.end()), xg.len);
        let out = trotter_propagate(&config, &PotentialSpec::Free, &psi0, 1.0).unwrap();
        let et = gt.evolve_free(Axis::Time, 1.0, 1.0);
        let ex = gx.evolve_free(Axis::Space, 1.0, 1.0);
        let expected = GridWave::from_fn_2d(tg, xg, |t, x| et.value(t) * ex.value(x));
        assert!(relative_l2(&out, &expected) < 1e-9);
    }

    #[test]
    fn damping_extrapolation_is_stable() {
        let grid = Grid1D::centered(0.0, 12.0, 512);
        let psi0 = gaussian_wave(grid, 0.0, -1.0, 1.0);
        let mut config = LatticeConfig::time_only(0.0, 1.0, 16, (grid.start, grid.end()), grid.len);
        let exact = trotter_propagate(&config, &PotentialSpec::Free, &psi0, 1.0).unwrap();
        config.reg_eta = 1e-4;
        let a = trotter_propagate(&config, &PotentialSpec::Free, &psi0, 1.0).unwrap();
        config.reg_eta = 5e-5;
        let b = trotter_propagate(&config, &PotentialSpec::Free, &psi0, 1.0).unwrap();
        assert!(relative_l2(&a, &b) < 1e-6);
        assert!(relative_l2(&a, &exact) < 1e-6);
    }

    #[test]
    fn pulse_phase_is_exact_for_instantaneous_slices() {
        // a pulse with no kinetic spreading in between reduces to a pure phase
        let grid = Grid1D::centered(0.0, 10.0, 512);
        let psi0 = gaussian_wave(grid, 0.0, -1.0, 1.0);
        let pulse = PotentialSpec::LinearInTPulse {
            e0: 0.2,
            e1: 0.1,
            t_start: 0.0,
            t_end: 1e-6,
            dipole_p: 1.0,
        };
        let config = LatticeConfig::time_only(0.0, 1e-6, 1, (grid.start, grid.end()), grid.len);
        let out = trotter_propagate(&config, &pulse, &psi0, 1.0).unwrap();
        let expected = GridWave::from_fn_1d(grid, |t| {
            psi0.t_grid
                .points()
                .position(|u| u == t)
                .map(|i| psi0.values[i])
                .unwrap()
                * Complex64::from_polar(1.0, (0.2 + 0.1 * t) * 1e-6)
        });
        assert!(relative_l2_modulo_phase(&out, &expected) < 1e-6);
    }

    #[test]
    fn composition_residual_is_small() {
        for axis in [Axis::Time, Axis::Space] {
            let r = kernel_compose_check(
                axis,
                1.0,
                &[0.0, 0.4, 1.0],
                (0.2, 1.3),
                ComposeWindow::default(),
            )
            .unwrap();
            assert!(r < 1e-8, "{axis:?}: {r}");
        }
    }

    #[test]
    fn degenerate_composition_window_is_inaccurate() {
        let window = ComposeWindow {
            half_width: Some(1.0),
            points: Some(3),
        };
        let r =
            kernel_compose_check(Axis::Time, 1.0, &[0.0, 1.0, 2.0], (0.0, 2.0), window).unwrap();
        assert!(r > 1e-3);
    }

    #[test]
    fn straight_line_action_is_exact() {
        let lab = (0.0, 2.0);
        let e1 = Event::new(0.0, 0.0);
        let e2 = Event::new(2.5, 1.0);
        let (s, _) = fourier_path_action(
            1.0,
            &PotentialSpec::Free,
            lab,
            e1,
            e2,
            &[0.0; 4],
            &[0.0; 4],
            65,
        );
        let expected = -0.5 * 2.5 * 2.5 / 2.0 + 0.5 * 1.0 / 2.0;
        assert!((s - expected).abs() < 1e-14);
    }

    #[test]
    fn ensemble_is_deterministic_and_stationary() {
        let sampler = FourierSampler::default();
        let ends = (Event::new(0.0, 0.0), Event::new(1.0, 0.3));
        let a = sample_fourier_paths(&sampler, 7, (0.0, 1.0), ends, 64, 1.0, &PotentialSpec::Free)
            .unwrap();
        let b = sample_fourier_paths(&sampler, 7, (0.0, 1.0), ends, 64, 1.0, &PotentialSpec::Free)
            .unwrap();
        assert_eq!(a, b);
        let c = sample_fourier_paths(&sampler, 8, (0.0, 1.0), ends, 64, 1.0, &PotentialSpec::Free)
            .unwrap();
        assert_ne!(a.actions, c.actions);
        let best = a
            .actions
            .iter()
            .map(|s| (s - a.straight_action).abs())
            .fold(f64::INFINITY, f64::min);
        assert!(best > 0.0);
    }
}
