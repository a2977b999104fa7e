//! Published qualitative results for the pulse experiment.

use tempath::dipole::{
    dipole_interaction_energy, evolve_dipole_component, precession_shift, DipoleSpectrum,
    FinitePulse, ImpulsiveField,
};
use tempath::experiment::{
    compare_formalisms, run_experiment, ExperimentConfig, Formalism, ObservableAxis,
};
use tempath::kernels::{packet_moments, AxisGaussian};
use tempath::schrodinger::{schrodinger_evolve, schrodinger_precession};
use tempath::{GaussianPacket4D, PacketParams};

fn packet() -> GaussianPacket4D {
    GaussianPacket4D::new(PacketParams::at_rest(1.0, 1.0, 1.0), 0.0).unwrap()
}

#[test]
fn packet_lab_time_is_preparation_time() {
    for t_prep in [-2.0, 0.0, 3.5] {
        let mut params = PacketParams::at_rest(1.0, 0.7, 1.3);
        params.t_a = t_prep;
        let p = GaussianPacket4D::new(params, t_prep).unwrap();
        let moments = packet_moments(&p).unwrap();
        assert!((moments.lab_time - t_prep).abs() < 1e-12);
    }
}

#[test]
fn uniform_field_gives_pure_precession() {
    let field = ImpulsiveField::impulsive(0.1, 0.0, 2.0);
    let c = evolve_dipole_component(&packet(), 1.0, &field, 1.0, 0.0, 5.0).unwrap();
    assert_eq!(c.delta_v, 0.0);
    assert!((c.delta_omega + 0.1).abs() < 1e-15);
}

#[test]
fn increasing_field_slows_aligned_dipole() {
    let field = ImpulsiveField::impulsive(0.0, 0.05, 1.0);
    let c = evolve_dipole_component(&packet(), 1.0, &field, 1.0, 0.0, 4.0).unwrap();
    assert!(c.delta_v < 0.0);
    assert!((c.delta_v.abs() - 0.05).abs() < 1e-12);
}

#[test]
fn interaction_energy_from_capacitor_potential() {
    let pulse = FinitePulse {
        e0: 0.3,
        e1: -0.2,
        t_start: 0.0,
        t_end: 1.0,
    };
    let phi = |t: f64, x: f64| -(pulse.e0 + pulse.e1 * t) * x;
    let h = 1e-5;
    for (p, t) in [(1.0, 0.0), (0.4, 2.0), (-1.5, -0.7)] {
        let e = -(phi(t, h) - phi(t, -h)) / (2.0 * h);
        let v = dipole_interaction_energy(p, &pulse, 0.5, t, 1.0);
        assert!((v + p * e).abs() < 1e-9);
    }
    assert_eq!(dipole_interaction_energy(1.0, &pulse, 2.0, 0.0, 1.0), 0.0);
}

#[test]
fn both_formalisms_predict_the_same_precession() {
    for (p, e0, e1, t_bar) in [
        (1.0, 0.1, 0.05, 1.0),
        (-0.3, 0.7, -0.2, 4.0),
        (2.0, 0.0, 0.3, -1.0),
    ] {
        let f = ImpulsiveField::impulsive(e0, e1, t_bar);
        assert_eq!(precession_shift(p, &f), schrodinger_precession(p, &f));
    }
}

#[test]
fn schrodinger_beam_is_not_split() {
    let gx = AxisGaussian::normalized(0.0, 0.3, 1.0);
    let gt = AxisGaussian::normalized(0.0, -1.0, 1.0);
    let field = ImpulsiveField::impulsive(0.2, 0.5, 1.0);
    let up = schrodinger_evolve(&gx, &gt, 1.0, &field, 1.0, 0.0, 4.0).unwrap();
    let down = schrodinger_evolve(&gx, &gt, -1.0, &field, 1.0, 0.0, 4.0).unwrap();
    assert_eq!(up.packet_x.phase_gradient(), gx.phase_gradient());
    assert_eq!(up.packet_x.density(0.7), down.packet_x.density(0.7));
}

fn three_level(sigma_t: f64) -> ExperimentConfig {
    let field = ImpulsiveField::impulsive(0.1, 1.0, 1.0);
    let mut config = ExperimentConfig::symmetric_pair(sigma_t, 1.0, field, 0.0, 4.0);
    config.spectrum = DipoleSpectrum::new(vec![-2.0, 0.0, 2.0], vec![1.0, 1.0, 1.0]).unwrap();
    config
}

#[test]
fn humps_are_spaced_by_dipole_gap() {
    let r = run_experiment(&three_level(3.0)).unwrap();
    let p4 = r.get(Formalism::Path4d).unwrap();
    let sc = r.get(Formalism::Schrodinger).unwrap();
    assert_eq!(p4.hump_count, 3);
    assert!((p4.hump_spacing_v - (-(2.0 * 1.0))).abs() < 1e-12);
    assert_eq!(sc.hump_count, 1);
    let report = compare_formalisms(p4, sc);
    assert!(report.precession_agrees);
    assert!(report.split_path4d && !report.split_schrodinger);
    for run in &r.runs {
        assert!((run.combined_curve(ObservableAxis::V).integral() - 1.0).abs() < 1e-6);
    }
}

#[test]
fn narrow_time_packets_hide_the_split() {
    let field = ImpulsiveField::impulsive(0.0, 2.0, 1.0);
    let flags: Vec<bool> = [1.0, 0.1, 0.01]
        .iter()
        .map(|&s| {
            let config = ExperimentConfig::symmetric_pair(s, 1.0, field, 0.0, 4.0);
            run_experiment(&config)
                .unwrap()
                .get(Formalism::Path4d)
                .unwrap()
                .detectable
        })
        .collect();
    assert_eq!(flags, [true, false, false]);
}
