use std::sync::Arc;

use superint_core::bracket::Observable;
use superint_core::integrator::{drift_report, integrate};
use superint_core::sampling::sample_points;
use superint_core::{build_system, ChainSystem, FamilyTag, PhasePoint, RationalParam};

fn r(n: u32, d: u32) -> RationalParam {
    RationalParam::new(n, d).unwrap()
}

fn oscillator() -> Arc<ChainSystem> {
    Arc::new(build_system(FamilyTag::Oscillator3D, 1.0, &[1.0, 2.0, 3.0], &[r(3, 2), r(5, 3)]).unwrap())
}

fn h_drift(sys: &Arc<ChainSystem>, x0: &PhasePoint, t: f64, tol: f64) -> f64 {
    let traj = integrate(sys, x0, t, tol, tol).unwrap();
    drift_report(&traj, &[Observable::hamiltonian(sys)]).unwrap()[0].max_drift
}

#[test]
fn tighter_tolerance_means_smaller_drift() {
    let sys = oscillator();
    for x0 in sample_points(&sys, 3, 1) {
        let d: Vec<f64> = [1e-8, 1e-10, 1e-12].iter().map(|&tol| h_drift(&sys, &x0, 20.0, tol)).collect();
        assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
    }
}

#[test]
fn time_reversal_returns_home() {
    let sys = oscillator();
    let t = 10.0;
    for x0 in sample_points(&sys, 3, 2) {
        let there = integrate(&sys, &x0, t, 1e-12, 1e-12).unwrap();
        let one_way = drift_report(&there, &[Observable::hamiltonian(&sys)]).unwrap()[0].max_drift;
        let end = &there.last().x;
        let flipped = PhasePoint::new(end.q.clone(), end.p.iter().map(|v| -v).collect());
        let back = integrate(&sys, &flipped, t, 1e-12, 1e-12).unwrap();
        let home = &back.last().x;
        let err = x0
            .q
            .iter()
            .zip(&home.q)
            .map(|(a, b)| (a - b).abs())
            .chain(x0.p.iter().zip(&home.p).map(|(a, b)| (a + b).abs()))
            .fold(0.0, f64::max);
        let scale = x0.to_flat().iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        assert!(err / scale <= 100.0 * one_way.max(f64::EPSILON), "{err} vs {one_way}");
    }
}

#[test]
fn momentum_is_not_conserved() {
    let sys = oscillator();
    for x0 in sample_points(&sys, 3, 3) {
        let traj = integrate(&sys, &x0, 20.0, 1e-10, 1e-10).unwrap();
        let d = drift_report(&traj, &[Observable::momentum(&sys, 1)]).unwrap();
        assert!(d[0].max_drift > 1e-2);
    }
}

#[test]
fn samples_are_ordered_and_end_on_the_horizon() {
    let sys = oscillator();
    let x0 = &sample_points(&sys, 1, 4)[0];
    let traj = integrate(&sys, x0, 7.5, 1e-10, 1e-10).unwrap();
    assert_eq!(traj.last().t, 7.5);
    assert!(traj.samples.windows(2).all(|w| w[1].t > w[0].t));
    assert_eq!(traj.samples.len(), traj.stats.steps + 1);
}
