//! The same pulse in ordinary quantum mechanics.
//!
//! With `t` identified with lab time, `V = −p(E0 + E1·T)` is uniform across
//! the beam, so each dipole component only picks up the phase `−∫V dT`. The
//! space factor evolves freely and the time profile is a spectator.

use num_complex::Complex64;

use crate::dipole::{FinitePulse, ImpulsiveField};
use crate::grid::{Grid1D, GridWave};
use crate::kernels::{check_lab_times, check_mass, Axis, AxisGaussian, KernelError};
use crate::lattice::{AxisPropagator, Convolution};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchrodingerComponent {
    pub p: f64,
    /// `−∫ V dT` accumulated over the pulse.
    pub phase_shift: f64,
    /// Space factor at the final lab time, unit norm.
    pub packet_x: AxisGaussian,
    /// Time profile, a spectator evolving freely.
    pub time_profile: AxisGaussian,
    pub lab_time: f64,
}

/// Evolve one component from `T0` to `T3` through the pulse.
pub fn schrodinger_evolve(
    packet_x: &AxisGaussian,
    time_profile: &AxisGaussian,
    p: f64,
    field: &ImpulsiveField,
    m: f64,
    lab_from: f64,
    lab_to: f64,
) -> Result<SchrodingerComponent, KernelError> {
    check_mass(m)?;
    let span = check_lab_times(lab_from, lab_to)?;
    let phase_shift = p * field.e0_bar + p * field.e1_bar * field.t_bar;
    Ok(SchrodingerComponent {
        p,
        phase_shift,
        packet_x: packet_x
            .evolve_free(Axis::Space, m, span)
            .scaled(Complex64::from_polar(1.0, phase_shift)),
        time_profile: time_profile.evolve_free(Axis::Time, m, span),
        lab_time: lab_to,
    })
}

/// `−(p𝖤0 + p𝖤1T̄)`.
pub fn schrodinger_precession(p: f64, field: &ImpulsiveField) -> f64 {
    -(p * field.e0_bar + p * field.e1_bar * field.t_bar)
}

/// Outcome of the grid integrator.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitStepResult {
    pub wave: GridWave,
    /// Phase of the pulsed run relative to the free run.
    pub phase_shift: f64,
}

/// Split-step integration of `i∂ψ/∂T = −ψ''/2m + V(T)ψ` on an x grid, with
/// `V(T) = −p(E0 + E1·T)` during the pulse.
pub fn split_step_evolve(
    packet_x: &AxisGaussian,
    p: f64,
    pulse: &FinitePulse,
    m: f64,
    lab: (f64, f64),
    grid: Grid1D,
    n_steps: usize,
) -> Result<SplitStepResult, KernelError> {
    check_mass(m)?;
    let span = check_lab_times(lab.0, lab.1)?;
    let steps = n_steps.max(1);
    let h = span / steps as f64;
    let propagator = AxisPropagator::new(Axis::Space, m, h, 0.0, grid, Convolution::Spectral);
    let initial = GridWave::from_fn_1d(grid, |x| packet_x.value(x));
    let mut pulsed = initial.clone();
    let mut free = initial;
    for k in 0..steps {
        let from = lab.0 + k as f64 * h;
        let to = from + h;
        let lo = from.max(pulse.t_start);
        let hi = to.min(pulse.t_end);
        // midpoint rule over the overlap of the step with the pulse
        let integral = if hi > lo {
            let mid = 0.5 * (lo + hi);
            -p * (pulse.e0 + pulse.e1 * mid) * (hi - lo)
        } else {
            0.0
        };
        let half = Complex64::from_polar(1.0, -0.5 * integral);
        pulsed.scale(half);
        propagator.apply(&mut pulsed.values);
        pulsed.scale(half);
        propagator.apply(&mut free.values);
    }
    let overlap = free.inner(&pulsed);
    Ok(SplitStepResult {
        phase_shift: overlap.arg(),
        wave: pulsed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dipole::precession_shift;

    #[test]
    fn zero_dipole_is_free() {
        let gx = AxisGaussian::normalized(0.0, 0.4, 1.0);
        let gt = AxisGaussian::normalized(0.0, -1.0, 1.0);
        let c = schrodinger_evolve(
            &gx,
            &gt,
            0.0,
            &ImpulsiveField::impulsive(0.3, 0.2, 1.0),
            1.0,
            0.0,
            2.0,
        )
        .unwrap();
        assert_eq!(c.phase_shift, 0.0);
        assert_eq!(c.packet_x, gx.evolve_free(Axis::Space, 1.0, 2.0));
    }

    #[test]
    fn precession_matches_four_dimensional_value() {
        for (p, e0, e1, tb) in [
            (1.0, 0.1, 0.0, 3.0),
            (0.7, -0.2, 0.05, 1.3),
            (-2.0, 0.0, 0.4, -0.6),
        ] {
            let f = ImpulsiveField::impulsive(e0, e1, tb);
            assert_eq!(schrodinger_precession(p, &f), precession_shift(p, &f));
        }
        let f = ImpulsiveField::impulsive(0.1, 0.0, 7.0);
        assert!((schrodinger_precession(1.0, &f) + 0.1).abs() < 1e-15);
    }

    #[test]
    fn pulse_changes_phase_not_density() {
        let gx = AxisGaussian::normalized(0.5, 0.3, 1.0);
        let gt = AxisGaussian::normalized(0.0, -1.0, 1.0);
        let f = ImpulsiveField::impulsive(0.2, 0.1, 1.0);
        let a = schrodinger_evolve(&gx, &gt, 1.0, &f, 1.0, 0.0, 3.0).unwrap();
        let b = schrodinger_evolve(&gx, &gt, -1.0, &f, 1.0, 0.0, 3.0).unwrap();
        for x in [-2.0, 0.0, 1.5, 4.0] {
            assert!((a.packet_x.density(x) - b.packet_x.density(x)).abs() < 1e-15);
        }
        assert_eq!(a.time_profile, b.time_profile);
        assert!((a.packet_x.norm_sqr() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn split_step_reproduces_phase() {
        let gx = AxisGaussian::normalized(0.0, 0.5, 1.0);
        let f = ImpulsiveField::from_fields(0.4, 0.3, 0.5, 1.5);
        let pulse = f.finite_pulse().unwrap();
        let grid = Grid1D::centered(1.0, 20.0, 1024);
        let out = split_step_evolve(&gx, 0.8, &pulse, 1.0, (0.0, 3.0), grid, 60).unwrap();
        let expected = schrodinger_evolve(&gx, &gx, 0.8, &f, 1.0, 0.0, 3.0)
            .unwrap()
            .phase_shift;
        assert!(
            (out.phase_shift - expected).abs() < 1e-6,
            "{} vs {expected}",
            out.phase_shift
        );
    }
}
