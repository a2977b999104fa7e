//! Values computed by independent numerical oracles and frozen here.

use std::f64::consts::PI;

use num_complex::Complex64;
use tempath::dipole::{
    apply_dipole_time_kernel, evolve_dipole_component, ImpulsiveField, DELTA_V_PER_UNIT_KICK,
};
use tempath::grid::{relative_l2, trapezoid, Grid1D, GridWave};
use tempath::kernels::AxisGaussian;
use tempath::lattice::{trotter_propagate, LatticeConfig};
use tempath::normalization::FREE_SEMICLASSICAL_NORMALIZATION;
use tempath::{Axis, GaussianPacket4D, PacketParams};

/// Mean of |ψ|² on the grid.
fn mean(w: &GridWave) -> f64 {
    let dens: Vec<f64> = w.values.iter().map(|v| v.norm_sqr()).collect();
    let weighted: Vec<f64> = w.t_grid.points().zip(&dens).map(|(t, d)| t * d).collect();
    trapezoid(&w.t_grid, &weighted) / trapezoid(&w.t_grid, &dens)
}

/// Time-velocity kick per unit `p𝖤1/m` seen by the lattice for a pulse of
/// length `delta_t`.
fn lattice_kick_coefficient(delta_t: f64) -> f64 {
    let (m, p, t0, t_bar, t3) = (1.0, 1.0, 0.0, 1.0, 4.0);
    let field = ImpulsiveField::impulsive(0.0, 0.05, t_bar).with_duration(delta_t);
    let g = AxisGaussian::normalized(t0, -m, 1.0);
    let grid = Grid1D::centered(2.0, 24.0, 4096);
    let psi0 = GridWave::from_fn_1d(grid, |t| g.value(t));
    // 16 slices in the shortest pulse, same slice width for every run
    let config = LatticeConfig::time_only(t0, t3, 2560, (grid.start, grid.end()), grid.len);
    let kicked = trotter_propagate(
        &config,
        &field.finite_pulse().unwrap().potential(p),
        &psi0,
        m,
    )
    .unwrap();
    let free =
        trotter_propagate(&config, &tempath::lattice::PotentialSpec::Free, &psi0, m).unwrap();
    let delta_v = (mean(&kicked) - mean(&free)) / (t3 - t_bar);
    delta_v * m / (p * field.e1_bar)
}

#[test]
fn kick_coefficient_from_lattice() {
    let c: Vec<f64> = [0.1, 0.05, 0.025].map(lattice_kick_coefficient).to_vec();
    let extrapolated = 2.0 * c[2] - c[1];
    assert!(
        (extrapolated - DELTA_V_PER_UNIT_KICK).abs() < 1e-6,
        "{c:?} -> {extrapolated}"
    );
    for v in &c {
        assert!((v - DELTA_V_PER_UNIT_KICK).abs() < 1e-4, "{c:?}");
    }
}

#[test]
fn closed_form_kick_uses_frozen_coefficient() {
    let params = PacketParams::at_rest(1.0, 1.0, 1.0);
    let packet = GaussianPacket4D::new(params, 0.0).unwrap();
    let field = ImpulsiveField::impulsive(0.0, 0.05, 1.0);
    let c = evolve_dipole_component(&packet, 1.0, &field, 1.0, 0.0, 4.0).unwrap();
    let expected = DELTA_V_PER_UNIT_KICK * 0.05;
    assert!(
        (c.delta_v - expected).abs() < 1e-12 * expected.abs().max(1.0),
        "{}",
        c.delta_v
    );
}

/// `∫du2 |∫du1 k(u1, u2) φ(u1)|²` by nested trapezoid sums.
fn nested_norm(
    k: impl Fn(f64, f64) -> Complex64 + Sync,
    phi: &AxisGaussian,
    input: Grid1D,
    output: Grid1D,
) -> f64 {
    use rayon::prelude::*;
    let values: Vec<Complex64> = input.points().map(|u| phi.value(u)).collect();
    let dens: Vec<f64> = (0..output.len)
        .into_par_iter()
        .map(|j| {
            let u2 = output.point(j);
            let s: Complex64 = (0..input.len)
                .map(|i| input.weight(i) * k(input.point(i), u2) * values[i])
                .sum();
            s.norm_sqr()
        })
        .collect();
    trapezoid(&output, &dens)
}

#[test]
fn semiclassical_free_normalization_constant() {
    let (m, dt) = (1.0, 1.5);
    let gt = AxisGaussian::normalized(0.0, -m, 1.0);
    let gx = AxisGaussian::normalized(0.0, 0.0, 1.0);
    let n = 4096;
    // (m/ΔT)·e^{iS̄} split evenly between the axes
    let time = nested_norm(
        |t1, t2| Complex64::from_polar((m / dt).sqrt(), -m * (t2 - t1) * (t2 - t1) / (2.0 * dt)),
        &gt,
        Grid1D::centered(0.0, 10.0, n),
        Grid1D::centered(dt, 14.0, n),
    );
    let space = nested_norm(
        |x1, x2| Complex64::from_polar((m / dt).sqrt(), m * (x2 - x1) * (x2 - x1) / (2.0 * dt)),
        &gx,
        Grid1D::centered(0.0, 10.0, n),
        Grid1D::centered(0.0, 14.0, n),
    );
    let n_phi = time * space;
    assert!(
        (n_phi / FREE_SEMICLASSICAL_NORMALIZATION - 1.0).abs() < 1e-9,
        "{n_phi}"
    );
    assert!((FREE_SEMICLASSICAL_NORMALIZATION - 4.0 * PI * PI).abs() < 1e-12);
}

#[test]
fn dipole_kernel_matches_weak_short_pulse_lattice() {
    let (m, p, t0, t3) = (1.0, 1.0, 0.0, 2.0);
    let field = ImpulsiveField::impulsive(0.002, 0.003, 1.0);
    let g = AxisGaussian::normalized(0.0, -m, 1.0);
    let grid = Grid1D::centered(1.0, 24.0, 4096);
    let psi0 = GridWave::from_fn_1d(grid, |t| g.value(t));
    let pulse = field.with_duration(1e-3).finite_pulse().unwrap();
    let config = LatticeConfig::time_only(t0, t3, 4000, (grid.start, grid.end()), grid.len);
    let lattice = trotter_propagate(&config, &pulse.potential(p), &psi0, m).unwrap();
    let analytic = apply_dipole_time_kernel(&g, m, p, &field, t0, t3).unwrap();
    let expected = GridWave::from_fn_1d(grid, |t| analytic.value(t));
    let err = relative_l2(&lattice, &expected);
    assert!(err < 1e-5, "{err}");
}

#[test]
fn free_time_mean_tracks_lab_time() {
    // ω_a = m: ⟨t⟩ moves with T on the lattice as well as in closed form
    let g = AxisGaussian::normalized(0.0, -1.0, 1.0);
    let grid = Grid1D::centered(1.5, 24.0, 2048);
    let psi0 = GridWave::from_fn_1d(grid, |t| g.value(t));
    let config = LatticeConfig::time_only(0.0, 3.0, 64, (grid.start, grid.end()), grid.len);
    let out =
        trotter_propagate(&config, &tempath::lattice::PotentialSpec::Free, &psi0, 1.0).unwrap();
    assert!((mean(&out) - 3.0).abs() < 1e-9);
    assert!((g.evolve_free(Axis::Time, 1.0, 3.0).center() - 3.0).abs() < 1e-12);
}
