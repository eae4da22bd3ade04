use superint_core::geometry::{curvature, curvature_with, flatness_verdict, metric_jet, CurvatureOptions, Obstruction};
use superint_core::sampling::sample_coordinates;
use superint_core::{build_system, ChainSystem, FamilyTag, RationalParam};

fn r(n: u32, d: u32) -> RationalParam {
    RationalParam::new(n, d).unwrap()
}

fn three(k1: RationalParam) -> ChainSystem {
    build_system(FamilyTag::Oscillator3D, 1.0, &[1.0; 3], &[k1, r(1, 1)]).unwrap()
}

fn four(k: [RationalParam; 3]) -> ChainSystem {
    build_system(FamilyTag::FourDExample, 1.0, &[1.0; 4], &k).unwrap()
}

fn systems() -> Vec<ChainSystem> {
    vec![
        three(r(1, 1)),
        three(r(3, 2)),
        three(r(5, 7)),
        four([r(2, 1), r(1, 1), r(1, 1)]),
        four([r(2, 1), r(2, 1), r(1, 1)]),
        four([r(3, 2), r(1, 1), r(2, 1)]),
    ]
}

#[test]
fn riemann_symmetries_and_bianchi() {
    for sys in systems() {
        for q in sample_coordinates(&sys, 20, 1) {
            let rep = curvature(&sys, &q).unwrap();
            if rep.riemann_norm <= 1e-9 {
                // flat chart: the residuals would be roundoff relative to roundoff
                continue;
            }
            assert!(rep.symmetry_residual() <= 1e-8, "{q:?}: {}", rep.symmetry_residual());
            assert!(rep.einstein_divergence() <= 1e-6, "{q:?}: {}", rep.einstein_divergence());
            assert!(rep.weyl_trace() <= 1e-8);
        }
    }
}

#[test]
fn metric_jet_matches_finite_differences() {
    let h = 1e-4;
    for sys in systems() {
        for q in sample_coordinates(&sys, 5, 2) {
            let n = q.len();
            let jet = metric_jet(&sys, &q).unwrap();
            let shifted = |k: usize, by: f64| {
                let mut v = q.clone();
                v[k] += by;
                metric_jet(&sys, &v).unwrap()
            };
            for k in 0..n {
                let (up, dn) = (shifted(k, h), shifted(k, -h));
                for i in 0..n {
                    let scale = jet.g[i].abs().max(1.0);
                    let d1 = (up.g[i] - dn.g[i]) / (2.0 * h);
                    assert!((d1 - jet.d1[i][k]).abs() <= 1e-6 * scale);
                    for l in 0..n {
                        let d2 = (up.d1[i][l] - dn.d1[i][l]) / (2.0 * h);
                        assert!((d2 - jet.d2[i][k][l]).abs() <= 1e-6 * scale);
                        for m in 0..n {
                            let d3 = (up.d2[i][l][m] - dn.d2[i][l][m]) / (2.0 * h);
                            assert!((d3 - jet.d3[i][k][l][m]).abs() <= 1e-6 * scale * 10.0);
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn cotton_is_antisymmetric_and_trace_free() {
    let sys = three(r(3, 2));
    for q in sample_coordinates(&sys, 10, 3) {
        let rep = curvature(&sys, &q).unwrap();
        let Obstruction::Cotton(c) = &rep.obstruction else {
            panic!("3D obstruction must be Cotton")
        };
        let scale = c.iter().flatten().flatten().fold(1e-300, |m: f64, v| m.max(v.abs()));
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    assert!((c[i][j][k] + c[i][k][j]).abs() <= 1e-12 * scale);
                }
            }
            let trace: f64 = (0..3).map(|a| c[a][i][a] / rep.metric[a]).sum();
            assert!(trace.abs() <= 1e-8 * scale.max(1.0));
        }
    }
}

#[test]
fn weyl_with_one_index_up_is_scale_invariant() {
    let sys = four([r(2, 1), r(1, 1), r(1, 1)]);
    for q in sample_coordinates(&sys, 5, 4) {
        let base = curvature(&sys, &q).unwrap();
        for lambda in [0.3, 2.0, 17.0] {
            let scaled = curvature_with(&sys, &q, CurvatureOptions { metric_scale: lambda }).unwrap();
            let (Obstruction::Weyl(w0), Obstruction::Weyl(w1)) = (&base.obstruction, &scaled.obstruction) else {
                panic!("4D obstruction must be Weyl")
            };
            let top = w0.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            for (a, b) in w0.data.iter().zip(&w1.data) {
                // W_{ijkl} scales with λ and g^{ii} with 1/λ
                assert!((b / lambda - a).abs() <= 1e-9 * top, "{a} vs {}", b / lambda);
            }
            assert!((scaled.max_norm - base.max_norm).abs() <= 1e-9 * base.max_norm);
        }
    }
}

#[test]
fn weyl_does_not_depend_on_the_last_angle_parameter() {
    let base = four([r(2, 1), r(1, 1), r(1, 1)]);
    let qs = sample_coordinates(&four([r(2, 1), r(1, 1), r(3, 1)]), 5, 5);
    for k3 in [r(3, 1), r(3, 2), r(2, 1)] {
        let other = four([r(2, 1), r(1, 1), k3]);
        for q in &qs {
            let (a, b) = (curvature(&base, q).unwrap(), curvature(&other, q).unwrap());
            assert!((a.max_norm - b.max_norm).abs() <= 1e-12 * a.max_norm);
        }
    }
}

#[test]
fn verdicts() {
    let v = flatness_verdict(&three(r(1, 1)), 20, 6).unwrap();
    assert!(v.flat && v.conformally_flat);
    let v = flatness_verdict(&three(r(3, 2)), 20, 6).unwrap();
    assert!(!v.flat && v.conformally_flat);
    let v = flatness_verdict(&four([r(2, 1), r(1, 1), r(1, 1)]), 20, 6).unwrap();
    assert!(!v.flat && !v.conformally_flat);
    let v = flatness_verdict(&four([r(2, 1), r(2, 1), r(1, 1)]), 20, 6).unwrap();
    assert!(!v.flat && v.conformally_flat, "{v:?}");
}
