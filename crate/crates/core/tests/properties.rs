use duffing_core::classical::{self, integrate_flow, PhasePoint, Stability};
use duffing_core::fock;
use duffing_core::model::thermal_occupation;
use duffing_core::spectrum::QuasienergySpectrum;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn stable_fixed_points_attract(eta in 0.03f64..0.5, t in 0.1f64..0.9, angle in 0.0f64..std::f64::consts::TAU) {
        let w = classical::bifurcation_window(eta).unwrap();
        let beta = w.beta1 + t * w.width();
        let fps = classical::damped_fixed_points(beta, eta).unwrap();
        prop_assert_eq!(fps.len(), 3);
        for fp in fps.iter().filter(|f| f.stability == Stability::Stable) {
            let start = PhasePoint::new(fp.point.q + 1e-2 * angle.cos(), fp.point.p + 1e-2 * angle.sin());
            let traj = integrate_flow(start, beta, eta, 0.01, 50_000).unwrap();
            let end = traj.last().unwrap();
            prop_assert!(end.distance(&fp.point) < 1e-6, "beta={} eta={} d={}", beta, eta, end.distance(&fp.point));
        }
    }

    #[test]
    fn spectrum_trace_identity(lambda in 0.02f64..0.2, beta in 0.0f64..0.2) {
        let n = 80;
        let g = fock::quasienergy_operator(n, lambda, beta).unwrap();
        let trace: f64 = (0..n).map(|k| g.get(k, k).re).sum();
        let sum: f64 = QuasienergySpectrum::compute(n, lambda, beta).unwrap().energies().iter().sum();
        prop_assert!(((sum - trace) / trace).abs() < 1e-8);
    }
}

#[test]
fn thermal_occupation_high_temperature_limit() {
    assert!((thermal_occupation(100.0) - 99.5).abs() < 0.01);
    let mut last = 0.0;
    for k in 1..200 {
        let n = thermal_occupation(0.05 * k as f64);
        assert!(n > last);
        last = n;
    }
}

#[test]
fn every_constructed_operator_is_hermitian() {
    let (n, lambda) = (60, 0.027);
    let ops = [
        fock::number(n).unwrap(),
        fock::position_op(n, lambda).unwrap(),
        fock::momentum_op(n, lambda).unwrap(),
        fock::quasienergy_operator(n, lambda, 0.0341).unwrap(),
        fock::quasienergy_from_quadratures(n, lambda, 0.0341).unwrap(),
        fock::rwa_hamiltonian(n, 0.3, -0.01, 0.02).unwrap(),
        fock::scaled_rwa_hamiltonian(n, 0.3, -0.01, 0.02).unwrap(),
    ];
    for op in &ops {
        assert!(op.hermitian_deviation() <= fock::HERMITIAN_TOL);
    }
}
