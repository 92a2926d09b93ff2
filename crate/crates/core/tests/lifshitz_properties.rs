use std::f64::consts::PI;

use casimir_core::cholesteric::{CholestericSlab, Handedness};
use casimir_core::lifshitz::{energy_at_angles, torque_curve, InteractionConfig, QuadratureSpec};
use casimir_core::media::{DielectricModel, ThermalGrid};

fn config(
    d_tot: f64,
    h2: Handedness,
    separation: f64,
    quadrature: QuadratureSpec,
) -> InteractionConfig {
    let slab1 = CholestericSlab::new(
        d_tot,
        0.6e-6,
        Handedness::Right,
        0.0,
        DielectricModel::example_5cb_like(),
    )
    .unwrap();
    InteractionConfig {
        slab2: slab1.with_handedness(h2),
        slab1,
        gap_eps: 1.0,
        separation,
        thermal: ThermalGrid::new(298.15, 60, 1e-8).unwrap(),
        quadrature,
    }
}

fn reduced() -> QuadratureSpec {
    QuadratureSpec {
        n_eta: 16,
        n_krho: 20,
        krho_cut: 60.0,
        phi_points: 16,
    }
}

#[test]
fn doubling_quadrature_changes_energy_below_1e6() {
    let q = QuadratureSpec::default();
    let fine = QuadratureSpec {
        n_eta: 2 * q.n_eta,
        n_krho: 2 * q.n_krho,
        ..q.clone()
    };
    let a = energy_at_angles(&config(5e-6, Handedness::Left, 2e-6, q), &[0.4])
        .unwrap()
        .energy[0];
    let b = energy_at_angles(&config(5e-6, Handedness::Left, 2e-6, fine), &[0.4])
        .unwrap()
        .energy[0];
    assert!(((a - b) / b).abs() < 1e-6, "{a:e} vs {b:e}");
}

#[test]
fn identical_homochiral_slabs_are_stationary_at_alignment() {
    let curve = torque_curve(&config(1e-6, Handedness::Right, 2e-6, reduced())).unwrap();
    assert!(curve.torque[0].abs() < 1e-3 * curve.max_abs_torque());
}

#[test]
fn energy_magnitude_decays_with_separation() {
    let mut last = f64::INFINITY;
    for a_um in 1..=10 {
        let c = config(1e-6, Handedness::Left, a_um as f64 * 1e-6, reduced());
        let e = energy_at_angles(&c, &[0.3]).unwrap();
        assert!(e.terms_monotone(), "Matsubara terms at {a_um} um");
        let mag = e.energy[0].abs();
        assert!(mag < last, "|E| at {a_um} um");
        last = mag;
    }
}

#[test]
fn energy_is_pi_periodic() {
    let c = config(1e-6, Handedness::Left, 3e-6, reduced());
    let e = energy_at_angles(&c, &[1.1, 1.1 + PI, 1.1 - PI])
        .unwrap()
        .energy;
    assert!(((e[0] - e[1]) / e[0]).abs() < 1e-12);
    assert!(((e[0] - e[2]) / e[0]).abs() < 1e-12);
}

#[test]
fn heterochiral_leading_mode_opposes_homochiral() {
    use casimir_core::lifshitz::fourier_components;
    let b1 = |h| {
        let curve = torque_curve(&config(5e-6, h, 2e-6, reduced())).unwrap();
        fourier_components(&curve, 3).unwrap().b1()
    };
    assert!(b1(Handedness::Right) * b1(Handedness::Left) < 0.0);
}
