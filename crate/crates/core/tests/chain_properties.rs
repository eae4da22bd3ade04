use nalgebra::{Matrix3, Vector3};
use superint_core::chain::PhasePoint;
use superint_core::sampling::{sample_points, PointSampler};
use superint_core::{build_system, eval_chain, flow_field, inverse_metric, ChainSystem, FamilyTag, RationalParam};

fn r(n: u32, d: u32) -> RationalParam {
    RationalParam::new(n, d).unwrap()
}

fn families() -> Vec<ChainSystem> {
    vec![
        build_system(FamilyTag::Oscillator3D, 1.0, &[1.0, 2.0, 3.0], &[r(3, 2), r(5, 3)]).unwrap(),
        build_system(FamilyTag::KeplerCoulomb3D, -1.0, &[1.0, 2.0, 3.0], &[r(3, 2), r(5, 3)]).unwrap(),
        build_system(FamilyTag::FourDExample, 1.0, &[1.0, 1.3, 0.7, 1.1], &[r(2, 1), r(1, 1), r(1, 1)]).unwrap(),
    ]
}

#[test]
fn reevaluation_is_idempotent() {
    for sys in families() {
        for x in sample_points(&sys, 20, 1) {
            let a = eval_chain(&sys, &x).unwrap();
            let b = eval_chain(&sys, &x).unwrap();
            assert_eq!(a, b);
        }
    }
}

#[test]
fn kinetic_potential_split() {
    for sys in families() {
        let mut sampler = PointSampler::new(&sys, 2);
        for _ in 0..5 {
            let q = sampler.coordinates();
            let ginv = inverse_metric(&sys, &q).unwrap();
            let h0 = eval_chain(&sys, &PhasePoint::new(q.clone(), vec![0.0; q.len()])).unwrap().hamiltonian();
            for _ in 0..100 {
                let p = sampler.momenta();
                let h = eval_chain(&sys, &PhasePoint::new(q.clone(), p.clone())).unwrap().hamiltonian();
                let kinetic: f64 = ginv.iter().zip(&p).map(|(g, v)| g * v * v).sum();
                assert!(((h - h0) - kinetic).abs() <= 1e-12 * kinetic.abs().max(1.0));
            }
        }
    }
}

/// `(x, y, z)` from `(r, θ₁, θ₂)` and its Jacobian `∂x_a/∂q_b`.
fn spherical(q: &[f64]) -> (Vector3<f64>, Matrix3<f64>) {
    let (rr, t1, t2) = (q[0], q[1], q[2]);
    let (s1, c1, s2, c2) = (t1.sin(), t1.cos(), t2.sin(), t2.cos());
    let x = Vector3::new(rr * s1 * c2, rr * s1 * s2, rr * c1);
    let j = Matrix3::new(
        s1 * c2, rr * c1 * c2, -rr * s1 * s2,
        s1 * s2, rr * c1 * s2, rr * s1 * c2,
        c1, -rr * s1, 0.0,
    );
    (x, j)
}

#[test]
fn zero_coupling_is_flat_kinetic_energy() {
    let sys = build_system(FamilyTag::Oscillator3D, 0.0, &[0.0; 3], &[r(1, 1), r(1, 1)]).unwrap();
    for x in sample_points(&sys, 20, 3) {
        let (_, j) = spherical(&x.q);
        // p = Jᵀ P
        let cart = j.transpose().lu().solve(&Vector3::from_column_slice(&x.p)).unwrap();
        let h = eval_chain(&sys, &x).unwrap().hamiltonian();
        assert!((h - cart.norm_squared()).abs() <= 1e-12 * h.abs().max(1.0), "{h} vs {}", cart.norm_squared());
    }
}

#[test]
fn singular_oscillator_in_cartesian_form() {
    // k = 1: αr² + β₁/z² + β₂/x² + β₃/y²
    let (alpha, beta) = (0.7, [0.3, 1.1, 0.9]);
    let sys = build_system(FamilyTag::Oscillator3D, alpha, &beta, &[r(1, 1), r(1, 1)]).unwrap();
    for x in sample_points(&sys, 20, 4) {
        let (pos, j) = spherical(&x.q);
        let cart = j.transpose().lu().solve(&Vector3::from_column_slice(&x.p)).unwrap();
        let want = cart.norm_squared()
            + alpha * pos.norm_squared()
            + beta[0] / (pos.z * pos.z)
            + beta[1] / (pos.x * pos.x)
            + beta[2] / (pos.y * pos.y);
        let h = eval_chain(&sys, &x).unwrap().hamiltonian();
        assert!((h - want).abs() <= 1e-11 * want.abs(), "{h} vs {want}");
    }
}

#[test]
fn flow_field_matches_finite_differences() {
    let step = 1e-5;
    for sys in families() {
        for x in sample_points(&sys, 100, 5) {
            let n = x.dim();
            let field = flow_field(&sys, &x).unwrap();
            let flat = x.to_flat();
            let h_at = |y: &[f64]| eval_chain(&sys, &PhasePoint::from_flat(y).unwrap()).unwrap().hamiltonian();
            let mut err: f64 = 0.0;
            let scale = field.iter().map(|v| v * v).sum::<f64>().sqrt();
            for j in 0..2 * n {
                let (mut up, mut dn) = (flat.clone(), flat.clone());
                up[j] += step;
                dn[j] -= step;
                let d = (h_at(&up) - h_at(&dn)) / (2.0 * step);
                // q̇ = ∂H/∂p, ṗ = −∂H/∂q
                let want = if j < n { -d } else { d };
                let slot = if j < n { n + j } else { j - n };
                err = err.max((field[slot] - want).abs());
            }
            assert!(err <= 1e-6 * scale.max(1.0), "{err} at {x:?}");
        }
    }
}

#[test]
fn domain_violations_are_reported() {
    let sys = &families()[0];
    assert!(eval_chain(sys, &PhasePoint::new(vec![-1.0, 0.5, 0.3], vec![0.0; 3])).is_err());
    assert!(eval_chain(sys, &PhasePoint::new(vec![1.0, 0.0, 0.3], vec![0.0; 3])).is_err());
    assert!(eval_chain(sys, &PhasePoint::new(vec![1.0, 0.5], vec![0.0; 2])).is_err());
}
