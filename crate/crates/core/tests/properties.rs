use num_complex::Complex64;
use proptest::prelude::*;

use tempath::dipole::{
    dipole_time_kernel, evolve_dipole_component, time_velocity_density, ImpulsiveField,
};
use tempath::experiment::{count_humps, detectability};
use tempath::grid::{Grid1D, GridWave};
use tempath::kernels::{
    backward_kernel_4d, free_kernel_4d, free_space_kernel, free_time_kernel, AxisGaussian,
};
use tempath::lattice::{AxisPropagator, Convolution};
use tempath::normalization::{normalization_constant, NormalizationGrid, SeparableKernel};
use tempath::schrodinger::schrodinger_evolve;
use tempath::{Axis, Event, GaussianPacket4D, PacketParams};

fn event() -> impl Strategy<Value = Event> {
    (-10.0..10.0f64, -10.0..10.0f64).prop_map(|(t, x)| Event::new(t, x))
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * b.norm().max(1e-300)
}

fn same_gaussian(a: &AxisGaussian, b: &AxisGaussian, tol: f64) -> bool {
    close(a.a, b.a, tol)
        && (a.b - b.b).norm() <= tol * (1.0 + b.b.norm())
        && (a.c - b.c).norm() <= tol * (1.0 + b.c.norm())
}

proptest! {
    #[test]
    fn kernel_modulus_ignores_displacement(m in 0.1..5.0f64, dt in 0.01..10.0f64, u1 in -20.0..20.0f64, u2 in -20.0..20.0f64) {
        let expected = (m / (2.0 * std::f64::consts::PI * dt)).sqrt();
        let kt = free_time_kernel(m, 0.0, dt, u1, u2).unwrap();
        let kx = free_space_kernel(m, 0.0, dt, u1, u2).unwrap();
        prop_assert!((kt.norm() - expected).abs() < 1e-12 * expected);
        prop_assert!((kx.norm() - expected).abs() < 1e-12 * expected);
        prop_assert!(close(kt, kx.conj(), 1e-12));
    }

    #[test]
    fn exchange_and_conjugation(m in 0.1..5.0f64, t1 in -3.0..3.0f64, dt in 0.05..5.0f64, e1 in event(), e2 in event()) {
        let fwd = free_kernel_4d(m, t1, t1 + dt, e1, e2).unwrap();
        let swapped = free_kernel_4d(m, t1, t1 + dt, e2, e1).unwrap();
        let back = backward_kernel_4d(m, t1 + dt, t1, e2, e1).unwrap();
        prop_assert!(close(fwd, swapped, 1e-12));
        prop_assert!(close(back, fwd.conj(), 1e-12));
    }

    #[test]
    fn gaussian_evolution_composes(m in 0.2..3.0f64, c in -3.0..3.0f64, g in -3.0..3.0f64, s in 0.3..3.0f64,
                                   a in 0.01..4.0f64, b in 0.01..4.0f64, time in any::<bool>()) {
        let axis = if time { Axis::Time } else { Axis::Space };
        let p = AxisGaussian::normalized(c, g, s);
        let two = p.evolve_free(axis, m, a).evolve_free(axis, m, b);
        let one = p.evolve_free(axis, m, a + b);
        prop_assert!(same_gaussian(&two, &one, 1e-10));
        prop_assert!((one.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn dipole_kernel_keeps_modulus(p in -3.0..3.0f64, e0 in -1.0..1.0f64, e1 in -1.0..1.0f64,
                                   t0 in -5.0..5.0f64, t3 in -5.0..5.0f64) {
        let field = ImpulsiveField::impulsive(e0, e1, 1.0);
        let k = dipole_time_kernel(1.0, p, &field, 0.0, 3.0, t0, t3).unwrap();
        let free = free_time_kernel(1.0, 0.0, 3.0, t0, t3).unwrap();
        prop_assert!((k.norm() - free.norm()).abs() < 1e-13);
    }

    #[test]
    fn velocity_kick_is_odd_in_p(p in 0.0..3.0f64, e1 in -0.5..0.5f64, sigma in 0.2..5.0f64) {
        let packet = GaussianPacket4D::new(PacketParams::at_rest(1.0, sigma, 1.0), 0.0).unwrap();
        let field = ImpulsiveField::impulsive(0.1, e1, 1.0);
        let plus = evolve_dipole_component(&packet, p, &field, 1.0, 0.0, 4.0).unwrap();
        let minus = evolve_dipole_component(&packet, -p, &field, 1.0, 0.0, 4.0).unwrap();
        prop_assert!((plus.delta_v + minus.delta_v).abs() < 1e-12);
        prop_assert!((plus.frequency_shift + minus.frequency_shift).abs() < 1e-12);
        if p * e1 == 0.0 {
            prop_assert_eq!(plus.delta_v, 0.0);
        }
    }

    #[test]
    fn margin_shrinks_with_sigma_t(split in 0.001..2.0f64, s1 in 0.01..10.0f64, s2 in 0.01..10.0f64) {
        let (hi, lo) = if s1 > s2 { (s1, s2) } else { (s2, s1) };
        let a = detectability(split, &PacketParams::at_rest(1.0, hi, 1.0), 1.0);
        let b = detectability(split, &PacketParams::at_rest(1.0, lo, 1.0), 1.0);
        prop_assert!(b.margin <= a.margin);
        prop_assert_eq!(a.detectable, a.margin > 1.0);
    }

    #[test]
    fn hump_count_ignores_scale(values in prop::collection::vec(0.0..1.0f64, 3..60), k in 0.01..100.0f64) {
        let scaled: Vec<f64> = values.iter().map(|v| v * k).collect();
        prop_assert_eq!(count_humps(&values, 0.05), count_humps(&scaled, 0.05));
    }

    #[test]
    fn pulse_leaves_schrodinger_density_alone(p in -3.0..3.0f64, e0 in -1.0..1.0f64, e1 in -1.0..1.0f64, x in -5.0..5.0f64, v in -3.0..3.0f64) {
        let gx = AxisGaussian::normalized(0.2, 0.4, 1.0);
        let gt = AxisGaussian::normalized(0.0, -1.0, 1.0);
        let field = ImpulsiveField::impulsive(e0, e1, 1.0);
        let kicked = schrodinger_evolve(&gx, &gt, p, &field, 1.0, 0.0, 3.0).unwrap();
        let free = schrodinger_evolve(&gx, &gt, 0.0, &field, 1.0, 0.0, 3.0).unwrap();
        prop_assert!((kicked.packet_x.density(x) - free.packet_x.density(x)).abs() < 1e-14);
        let dv = time_velocity_density(&kicked.time_profile, 1.0, v) - time_velocity_density(&free.time_profile, 1.0, v);
        prop_assert!(dv.abs() < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lattice_slice_preserves_mass(c in -2.0..2.0f64, g in -2.0..2.0f64, s in 0.5..2.0f64, eps in 0.01..0.5f64, time in any::<bool>()) {
        let axis = if time { Axis::Time } else { Axis::Space };
        let grid = Grid1D::centered(0.0, 30.0, 1024);
        let p = AxisGaussian::normalized(c, g, s);
        let mut w = GridWave::from_fn_1d(grid, |u| p.value(u));
        let before = w.norm_sqr();
        let prop = AxisPropagator::new(axis, 1.0, eps, 0.0, grid, Convolution::Spectral);
        let leaked = prop.apply(&mut w.values);
        prop_assert!(leaked < 1e-12);
        prop_assert!((w.norm_sqr() - before).abs() < 1e-10 * before);
    }

    #[test]
    fn normalization_is_homogeneous(re in -3.0..3.0f64, im in -3.0..3.0f64) {
        prop_assume!(re * re + im * im > 1e-3);
        let c = Complex64::new(re, im);
        let packet = GaussianPacket4D::new(PacketParams::at_rest(1.0, 1.0, 1.0), 0.0).unwrap();
        let grid = NormalizationGrid::covering(&packet, 1.0, 1.0, 96, 96, 0.0).unwrap();
        let base = normalization_constant(&SeparableKernel::free(1.0), &packet, 0.0, 1.0, &grid).unwrap().n_phi;
        let scaled = normalization_constant(&SeparableKernel::free(1.0).scaled(c), &packet, 0.0, 1.0, &grid).unwrap().n_phi;
        prop_assert!((scaled / (c.norm_sqr() * base) - 1.0).abs() < 1e-12);
    }
}
