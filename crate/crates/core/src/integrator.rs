//! Adaptive Dormand–Prince 5(4) integration of Hamilton's equations.

use serde::Serialize;

use crate::bracket::Observable;
use crate::chain::{flow_field, ChainSystem, PhasePoint};
use crate::error::{Error, Result};

pub const MIN_TOL: f64 = 1e-14;
pub const MAX_TOL: f64 = 1e-3;
pub const MAX_STEPS: usize = 2_000_000;

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus the embedded fourth-order ones.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControllerStats {
    pub steps: usize,
    pub rejects: usize,
    pub domain_retries: usize,
    pub min_step: f64,
    pub max_step: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Sample {
    pub t: f64,
    pub x: PhasePoint,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub stats: ControllerStats,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("a trajectory holds at least its start")
    }
}

fn check_tol(name: &str, v: f64) -> Result<()> {
    if !(MIN_TOL..=MAX_TOL).contains(&v) {
        return Err(Error::InvalidParameter(format!(
            "{name} = {v:e} outside [{MIN_TOL:e}, {MAX_TOL:e}]"
        )));
    }
    Ok(())
}

/// Integrates from `t = 0` to `t_max`, sampling at every accepted step.
///
/// A stage that falls inside the domain margin shrinks the step; an accepted
/// state inside the margin is an error.
pub fn integrate(system: &ChainSystem, x0: &PhasePoint, t_max: f64, rel_tol: f64, abs_tol: f64) -> Result<Trajectory> {
    check_tol("rel_tol", rel_tol)?;
    check_tol("abs_tol", abs_tol)?;
    if !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_max = {t_max} must be finite and ≥ 0")));
    }
    let n = system.dim();
    let rhs = |y: &[f64]| -> Result<Vec<f64>> { flow_field(system, &PhasePoint::from_flat(y)?) };
    let mut y = x0.to_flat();
    if y.len() != 2 * n {
        return Err(Error::Arity {
            what: "initial state",
            expected: 2 * n,
            got: y.len(),
        });
    }
    let mut k0 = rhs(&y)?;
    let mut samples = vec![Sample { t: 0.0, x: x0.clone() }];
    let mut stats = ControllerStats {
        steps: 0,
        rejects: 0,
        domain_retries: 0,
        min_step: f64::INFINITY,
        max_step: 0.0,
    };
    if t_max == 0.0 {
        stats.min_step = 0.0;
        return Ok(Trajectory { samples, stats });
    }

    let err_norm = |y: &[f64], y_new: &[f64], err: &[f64]| -> f64 {
        let s: f64 = (0..y.len())
            .map(|i| {
                let sc = abs_tol + rel_tol * y[i].abs().max(y_new[i].abs());
                (err[i] / sc).powi(2)
            })
            .sum();
        (s / y.len() as f64).sqrt()
    };

    // initial step from the size of the state and its derivative
    let d0 = err_norm(&y, &y, &y);
    let d1 = err_norm(&y, &y, &k0);
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min(t_max);

    let mut t = 0.0;
    let mut err_prev: f64 = 1e-4;
    let mut k = vec![vec![0.0; 2 * n]; 7];
    while t < t_max {
        if stats.steps + stats.rejects >= MAX_STEPS {
            return Err(Error::StepUnderflow { t, h });
        }
        let last = t + h >= t_max;
        if last {
            h = t_max - t;
        }
        if h <= f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t, h });
        }
        k[0].clone_from(&k0);
        let mut stage = vec![0.0; 2 * n];
        let mut failed = false;
        for s in 1..7 {
            for i in 0..2 * n {
                stage[i] = y[i] + h * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>();
            }
            match rhs(&stage) {
                Ok(v) => k[s] = v,
                Err(Error::Domain { .. }) => {
                    failed = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if failed {
            stats.domain_retries += 1;
            h *= 0.25;
            continue;
        }
        // stage 7 evaluates at the fifth-order solution (FSAL)
        let y_new = stage;
        let err: Vec<f64> = (0..2 * n).map(|i| h * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>()).collect();
        let e = err_norm(&y, &y_new, &err);
        if !e.is_finite() {
            return Err(Error::NonFinite(format!("local error at t = {t}")));
        }
        if e <= 1.0 {
            t = if last { t_max } else { t + h };
            y = y_new;
            k0.clone_from(&k[6]);
            stats.steps += 1;
            stats.min_step = stats.min_step.min(h);
            stats.max_step = stats.max_step.max(h);
            let x = PhasePoint::from_flat(&y)?;
            system.check_domain(&x.q)?;
            samples.push(Sample { t, x });
            // PI controller
            let fac = SAFETY * e.max(1e-10).powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
            h *= fac.clamp(FAC_MIN, FAC_MAX);
            err_prev = e.max(1e-4);
        } else {
            stats.rejects += 1;
            let fac = SAFETY * e.powf(-1.0 / 5.0);
            h *= fac.clamp(FAC_MIN, 1.0);
        }
    }
    Ok(Trajectory { samples, stats })
}

#[derive(Debug, Clone, Serialize)]
pub struct Drift {
    pub label: String,
    pub initial: f64,
    pub max_drift: f64,
}

/// `max_t |f(x(t)) − f(x₀)| / max(|f(x₀)|, 1)` for each observable.
pub fn drift_report(traj: &Trajectory, fs: &[Observable]) -> Result<Vec<Drift>> {
    fs.iter()
        .map(|f| {
            let f0 = f.value(&traj.samples[0].x)?;
            let mut worst: f64 = 0.0;
            for s in &traj.samples[1..] {
                worst = worst.max((f.value(&s.x)? - f0).norm());
            }
            Ok(Drift {
                label: f.label.clone(),
                initial: f0.norm(),
                max_drift: worst / f0.norm().max(1.0),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::chain::{Level, PotentialKind, PotentialTerm, DEFAULT_MAX_DIM};

    fn line() -> ChainSystem {
        ChainSystem::custom(
            vec![Level {
                potential: vec![PotentialTerm::new(PotentialKind::HarmonicRadial, 1.0)],
                coupling: None,
            }],
            DEFAULT_MAX_DIM,
        )
        .unwrap()
    }

    #[test]
    fn harmonic_period() {
        // q̇ = 2p, ṗ = −2q; q(t) = cos 2t, period π
        let tr = integrate(&line(), &PhasePoint::new(vec![1.0], vec![0.0]), PI, 1e-12, 1e-12).unwrap();
        let end = &tr.last().x;
        assert!((end.q[0] - 1.0).abs() < 1e-8 && end.p[0].abs() < 1e-8, "{end:?}");
        assert_eq!(tr.last().t, PI);
        for w in tr.samples.windows(2) {
            assert!(w[1].t > w[0].t);
        }
    }

    #[test]
    fn exact_solution_along_the_way() {
        let tr = integrate(&line(), &PhasePoint::new(vec![1.0], vec![0.0]), 3.0, 1e-10, 1e-10).unwrap();
        for s in &tr.samples {
            assert!((s.x.q[0] - (2.0 * s.t).cos()).abs() < 1e-7);
            assert!((s.x.p[0] + (2.0 * s.t).sin()).abs() < 1e-7);
        }
    }

    #[test]
    fn zero_horizon() {
        let tr = integrate(&line(), &PhasePoint::new(vec![1.0], vec![0.0]), 0.0, 1e-10, 1e-10).unwrap();
        assert_eq!(tr.samples.len(), 1);
    }

    #[test]
    fn tolerance_bounds() {
        let x = PhasePoint::new(vec![1.0], vec![0.0]);
        assert!(integrate(&line(), &x, 1.0, 1e-15, 1e-10).is_err());
        assert!(integrate(&line(), &x, 1.0, 1e-10, 1e-2).is_err());
    }
}
