//! Named verification suites driven by a [`RunConfig`].
//!
//! Each suite produces worst-case residuals against a limit and free-form
//! details. A failing check never stops the remaining ones; errors are
//! recorded as failed checks.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::bracket::{bracket_from_gradients, gradient, independence_rank, norm, Observable};
use crate::chain::{ChainSystem, FamilyTag};
use crate::config::{RunConfig, SuiteName};
use crate::degree::Degree;
use crate::error::{Error, Result};
use crate::geometry::flatness_verdict_with;
use crate::hyp::tables::{composed_sinh, pairs_4d_example};
use crate::hyp::{ClosedForm, ConstantEvaluator, ConstantView};
use crate::integrator::{drift_report, integrate, Trajectory};
use crate::sampling::{sample_coordinates, sample_points};

/// Smallest drift the momentum control must show for the integrator to be
/// considered sensitive at all.
pub const CONTROL_MIN_DRIFT: f64 = 1e-2;

const CONSERVATION_SALT: u64 = 0xc0;
const DEGREE_SALT: u64 = 0xde;
const GEOMETRY_SALT: u64 = 0x6e;
const FORMULA_SALT: u64 = 0xf0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, Serialize)]
pub struct Residual {
    pub check: String,
    pub value: f64,
    pub bound: Bound,
    pub limit: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckDetail {
    pub check: String,
    pub pass: bool,
    pub value: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub pass: bool,
    pub residuals: Vec<Residual>,
    pub details: Vec<CheckDetail>,
    pub wall_time: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub config: RunConfig,
    pub suites: BTreeMap<String, SuiteResult>,
    pub version: String,
    pub seed: u64,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.suites.values().all(|s| s.pass)
    }
}

#[derive(Debug, Clone)]
pub struct LabeledTrajectory {
    pub label: String,
    pub system: Arc<ChainSystem>,
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: SuiteReport,
    pub trajectories: Vec<LabeledTrajectory>,
}

#[derive(Default)]
struct Collector {
    residuals: Vec<Residual>,
    details: Vec<CheckDetail>,
}

impl Collector {
    fn bound(&mut self, check: impl Into<String>, value: f64, bound: Bound, limit: f64) -> bool {
        let pass = match bound {
            Bound::AtMost => value <= limit,
            Bound::AtLeast => value >= limit,
        };
        self.residuals.push(Residual {
            check: check.into(),
            value,
            bound,
            limit,
            pass,
        });
        pass
    }

    fn at_most(&mut self, check: impl Into<String>, value: f64, limit: f64) -> bool {
        self.bound(check, value, Bound::AtMost, limit)
    }

    fn at_least(&mut self, check: impl Into<String>, value: f64, limit: f64) -> bool {
        self.bound(check, value, Bound::AtLeast, limit)
    }

    fn detail(&mut self, check: impl Into<String>, pass: bool, value: Value) {
        self.details.push(CheckDetail {
            check: check.into(),
            pass,
            value,
        });
    }

    fn error(&mut self, check: impl Into<String>, err: &Error) {
        self.detail(check, false, json!({ "error": err.to_string() }));
    }

    fn finish(self, started: Instant) -> SuiteResult {
        SuiteResult {
            pass: self.residuals.iter().all(|r| r.pass) && self.details.iter().all(|d| d.pass),
            residuals: self.residuals,
            details: self.details,
            wall_time: started.elapsed().as_secs_f64(),
        }
    }
}

/// Worst normalized `|{aᵢ, bⱼ}|` over the points, computed in parallel.
pub fn worst_brackets(a: &[Observable], b: &[Observable], points: &[crate::PhasePoint]) -> Result<Vec<Vec<f64>>> {
    let per_point = points
        .par_iter()
        .map(|x| {
            let ga = a.iter().map(|f| gradient(f, x)).collect::<Result<Vec<_>>>()?;
            let gb = b.iter().map(|f| gradient(f, x)).collect::<Result<Vec<_>>>()?;
            Ok(ga
                .iter()
                .map(|u| {
                    gb.iter()
                        .map(|v| {
                            let s = norm(u) * norm(v);
                            let z = bracket_from_gradients(u, v).norm();
                            if s > 0.0 {
                                z / s
                            } else {
                                z
                            }
                        })
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = vec![vec![0.0_f64; b.len()]; a.len()];
    for m in per_point {
        for (i, row) in m.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                // NaN must survive the maximum
                if v.is_nan() || *v > out[i][j] {
                    out[i][j] = *v;
                }
            }
        }
    }
    Ok(out)
}

/// Constructed constants for levels `1, …, n − 1`.
pub fn constant_evaluators(system: &ChainSystem) -> Result<Vec<Arc<ConstantEvaluator>>> {
    (1..system.dim())
        .map(|level| ConstantEvaluator::new(system, level).map(Arc::new))
        .collect()
}

struct Context<'a> {
    cfg: &'a RunConfig,
    system: Arc<ChainSystem>,
}

/// Runs every requested suite in order.
pub fn run_suite(cfg: &RunConfig) -> Result<RunOutcome> {
    let system = Arc::new(cfg.build_system()?);
    let ctx = Context { cfg, system };
    let mut suites = BTreeMap::new();
    let mut trajectories = Vec::new();
    for &name in &cfg.suites {
        let started = Instant::now();
        let mut col = Collector::default();
        match name {
            SuiteName::Involution => involution(&ctx, &mut col),
            SuiteName::Superintegrability => superintegrability(&ctx, &mut col),
            SuiteName::Conservation => trajectories = conservation(&ctx, &mut col),
            SuiteName::Polynomiality => polynomiality(&ctx, &mut col),
            SuiteName::Geometry => geometry(&ctx, &mut col),
            SuiteName::ClosedForms => closed_forms(&ctx, &mut col),
        }
        suites.insert(name.name().to_string(), col.finish(started));
    }
    Ok(RunOutcome {
        report: SuiteReport {
            config: cfg.clone(),
            suites,
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: cfg.seed,
        },
        trajectories,
    })
}

fn involution(ctx: &Context, col: &mut Collector) {
    let cfg = ctx.cfg;
    let mut levels = Observable::levels(&ctx.system);
    if let Some(p) = cfg.perturbation {
        let broken = cfg
            .system
            .with_beta_shift(p.beta_index, p.delta)
            .and_then(|s| s.build());
        match broken {
            Ok(b) => {
                let b = Arc::new(b);
                for (i, l) in levels.iter_mut().enumerate().skip(1) {
                    *l = Observable::level(&b, i + 1);
                    l.label = format!("{} (perturbed)", l.label);
                }
            }
            Err(e) => return col.error("perturbation", &e),
        }
    }
    let points = sample_points(&ctx.system, cfg.sampling.points, cfg.seed);
    match worst_brackets(&levels, &levels, &points) {
        Ok(m) => {
            for i in 0..levels.len() {
                for j in i + 1..levels.len() {
                    col.at_most(
                        format!("{{{}, {}}}", levels[i].label, levels[j].label),
                        m[i][j],
                        cfg.tolerances.bracket_tol,
                    );
                }
            }
            col.detail("normalized bracket matrix", true, json!({ "points": points.len(), "matrix": m }));
        }
        Err(e) => col.error("involution", &e),
    }
}

fn numerator_observables(evs: &[Arc<ConstantEvaluator>], view: ConstantView) -> Vec<Observable> {
    evs.iter().map(|ev| Observable::constant(ev.clone(), view)).collect()
}

fn superintegrability(ctx: &Context, col: &mut Collector) {
    let cfg = ctx.cfg;
    let n = ctx.system.dim();
    let evs = match constant_evaluators(&ctx.system) {
        Ok(v) => v,
        Err(e) => return col.error("constant construction", &e),
    };
    col.detail(
        "angle combinations",
        true,
        json!(evs.iter().map(|e| json!({ "constant": e.label(), "m": e.combo().m, "n": e.combo().n })).collect::<Vec<_>>()),
    );
    let points = sample_points(&ctx.system, cfg.sampling.points, cfg.seed);
    let h = [Observable::hamiltonian(&ctx.system)];
    for view in [ConstantView::Raw, ConstantView::Numerator] {
        let obs = numerator_observables(&evs, view);
        match worst_brackets(&h, &obs, &points) {
            Ok(m) => {
                for (f, v) in obs.iter().zip(&m[0]) {
                    col.at_most(format!("{{H, {}}}", f.label), *v, cfg.tolerances.constant_tol);
                }
            }
            Err(e) => col.error(format!("{{H, constants}} ({view:?})"), &e),
        }
    }
    let mut fs = Observable::levels(&ctx.system);
    fs.extend(numerator_observables(&evs, ConstantView::Numerator));
    match independence_rank(&fs, &points, cfg.tolerances.rank_tol) {
        Ok(r) => {
            let want = 2 * n - 1;
            col.at_least("independence rank", r.rank as f64, want as f64);
            col.detail(
                "rank",
                r.rank == want,
                json!({
                    "functions": fs.iter().map(|f| f.label.clone()).collect::<Vec<_>>(),
                    "rank": r.rank,
                    "expected": want,
                    "singular_values": r.singular_values,
                }),
            );
        }
        Err(e) => col.error("independence rank", &e),
    }
}

fn conservation(ctx: &Context, col: &mut Collector) -> Vec<LabeledTrajectory> {
    let cfg = ctx.cfg;
    let tr = cfg.trajectory;
    let mut watched = Observable::levels(&ctx.system);
    match constant_evaluators(&ctx.system) {
        Ok(evs) => watched.extend(numerator_observables(&evs, ConstantView::Numerator)),
        Err(e) => col.error("constant construction", &e),
    }
    let control = Observable::momentum(&ctx.system, 1);
    watched.push(control);
    let starts = sample_points(&ctx.system, tr.n_trajectories, cfg.seed ^ CONSERVATION_SALT);
    let runs: Vec<_> = starts
        .par_iter()
        .map(|x0| {
            let traj = integrate(&ctx.system, x0, tr.t_max, tr.rel_tol, tr.abs_tol)?;
            let drift = drift_report(&traj, &watched)?;
            Ok((traj, drift))
        })
        .collect::<Vec<Result<_>>>();

    let k = watched.len();
    let mut worst = vec![0.0_f64; k - 1];
    let mut control_min = f64::INFINITY;
    let mut out = Vec::new();
    let mut any = false;
    for (idx, run) in runs.into_iter().enumerate() {
        match run {
            Ok((traj, drift)) => {
                any = true;
                for (w, d) in worst.iter_mut().zip(&drift) {
                    if d.max_drift.is_nan() || d.max_drift > *w {
                        *w = d.max_drift;
                    }
                }
                control_min = control_min.min(drift[k - 1].max_drift);
                col.detail(
                    format!("trajectory {idx}"),
                    true,
                    json!({ "x0": traj.samples[0].x, "stats": traj.stats, "drift": drift }),
                );
                out.push(LabeledTrajectory {
                    label: format!("trajectory_{idx}"),
                    system: ctx.system.clone(),
                    trajectory: traj,
                });
            }
            Err(e) => col.error(format!("trajectory {idx}"), &e),
        }
    }
    if any {
        for (f, w) in watched.iter().zip(&worst) {
            col.at_most(format!("drift of {}", f.label), *w, cfg.tolerances.drift_tol);
        }
        col.at_least("drift of p1 (control)", control_min, CONTROL_MIN_DRIFT);
    }
    out
}

fn polynomiality(ctx: &Context, col: &mut Collector) {
    let cfg = ctx.cfg;
    let evs = match constant_evaluators(&ctx.system) {
        Ok(v) => v,
        Err(e) => return col.error("constant construction", &e),
    };
    let coords = sample_coordinates(&ctx.system, cfg.sampling.degree_points, cfg.seed ^ DEGREE_SALT);
    let mut measured = Vec::new();
    for ev in &evs {
        for view in [ConstantView::Numerator, ConstantView::Reduced] {
            let mut degree = Some(0);
            let mut failure = None;
            for (i, q) in coords.iter().enumerate() {
                match ev.measure_degree_of(view, q, cfg.sampling.dmax, cfg.seed.wrapping_add(i as u64)) {
                    Ok(Degree::Exact(d)) => degree = degree.map(|m: usize| m.max(d)),
                    Ok(Degree::ExceedsMax) => degree = None,
                    Err(e) => failure = Some(e),
                }
            }
            let check = format!("degree of {} ({view:?})", ev.label());
            match failure {
                Some(e) => col.error(check, &e),
                None => col.detail(
                    check,
                    degree.is_some(),
                    json!({ "degree": degree, "dmax": cfg.sampling.dmax, "points": coords.len() }),
                ),
            }
            if view == ConstantView::Reduced {
                measured.push(degree);
            }
        }
    }
    if let Some(want) = &cfg.expected_degrees {
        let got: Vec<_> = measured.iter().map(|d| d.map(|v| v as i64).unwrap_or(-1)).collect();
        let pass = got.len() == want.len() && got.iter().zip(want).all(|(g, w)| *g == *w as i64);
        col.detail("expected degrees", pass, json!({ "expected": want, "measured": measured }));
    }
}

fn geometry(ctx: &Context, col: &mut Collector) {
    let cfg = ctx.cfg;
    let n = ctx.system.dim();
    if n < 3 {
        col.detail("flatness verdict", true, json!({ "skipped": format!("dimension {n} has no conformal obstruction") }));
        return;
    }
    let tol = cfg.tolerances.geom_tol;
    match flatness_verdict_with(&ctx.system, cfg.sampling.geometry_points, cfg.seed ^ GEOMETRY_SALT, tol) {
        Ok(v) => {
            let obstruction = if n == 3 { "Cotton" } else { "Weyl" };
            for (want, value, what) in [
                (cfg.geometry.conformally_flat, v.max_obstruction, obstruction),
                (cfg.geometry.flat, v.max_riemann, "Riemann"),
            ] {
                match want {
                    Some(true) => col.at_most(format!("max {what} norm"), value, tol),
                    Some(false) => col.at_least(format!("max {what} norm"), value, tol),
                    None => true,
                };
            }
            col.detail("flatness verdict", true, json!(v));
        }
        Err(e) => col.error("flatness verdict", &e),
    }
}

/// The 4D chain with `k = (2, 1, 1)` is the only one with explicit forms.
fn has_closed_forms(system: &ChainSystem) -> bool {
    system.family() == FamilyTag::FourDExample
        && system
            .params()
            .is_some_and(|p| p.k.iter().map(|k| (k.num(), k.den())).eq([(2, 1), (1, 1), (1, 1)]))
}

fn closed_forms(ctx: &Context, col: &mut Collector) {
    let cfg = ctx.cfg;
    if !has_closed_forms(&ctx.system) {
        col.detail("explicit forms", true, json!({ "skipped": "no explicit forms for this system" }));
        return;
    }
    let sys = &ctx.system;
    let points = sample_points(sys, cfg.sampling.formula_points, cfg.seed ^ FORMULA_SALT);

    // quotients against the composed pairs
    let quotient_groups: [(&str, &[ClosedForm], usize, i64, i64); 3] = [
        ("sinh(A1-2B1)", &[ClosedForm::Level1Quotient], 0, 1, 2),
        (
            "sinh(2A2-B2)",
            &[ClosedForm::Level2Quotient { doubled: false }, ClosedForm::Level2Quotient { doubled: true }],
            1,
            2,
            1,
        ),
        ("sinh(A3-B3)", &[ClosedForm::Level3Quotient], 2, 1, 1),
    ];
    for (name, forms, level, m, n) in quotient_groups {
        let per_form: Result<Vec<f64>> = forms
            .iter()
            .map(|form| {
                let errs = points
                    .par_iter()
                    .map(|x| {
                        let pairs = pairs_4d_example(sys, x)?;
                        let want = composed_sinh(&pairs[2 * level + 1], &pairs[2 * level], m, n);
                        let got = form.eval(sys, &x.q, &x.p)?;
                        Ok(relative(got, want))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                Ok(errs.into_iter().fold(0.0, nan_max))
            })
            .collect();
        match per_form {
            Ok(v) => select(col, name, forms, &v, cfg.tolerances.formula_tol, "relative error against composed pairs"),
            Err(e) => col.error(name, &e),
        }
    }

    // polynomial forms decided by their bracket with H
    let h = [Observable::hamiltonian(sys)];
    let poly_groups: [(&str, Vec<ClosedForm>); 3] = [
        (
            "L''1",
            ClosedForm::ALL
                .into_iter()
                .filter(|f| matches!(f, ClosedForm::Level1Quartic { .. }))
                .collect(),
        ),
        (
            "L''2",
            vec![ClosedForm::Level2Quartic { whole: true }, ClosedForm::Level2Quartic { whole: false }],
        ),
        ("L''3", vec![ClosedForm::Level3Cubic]),
    ];
    for (name, forms) in poly_groups {
        let obs: Vec<_> = forms.iter().map(|f| Observable::closed_form(sys, *f)).collect();
        match worst_brackets(&h, &obs, &points) {
            Ok(m) => select(col, name, &forms, &m[0], cfg.tolerances.constant_tol, "normalized bracket with H"),
            Err(e) => col.error(name, &e),
        }
    }
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

fn relative(got: Complex64, want: Complex64) -> f64 {
    (got - want).norm() / want.norm().max(f64::MIN_POSITIVE)
}

/// Records every candidate and passes if the best one is within `limit`.
fn select(col: &mut Collector, name: &str, forms: &[ClosedForm], values: &[f64], limit: f64, what: &str) {
    let best = values
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_nan())
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i);
    let candidates: Vec<_> = forms
        .iter()
        .zip(values)
        .map(|(f, v)| json!({ "form": f.label(), "residual": v }))
        .collect();
    match best {
        Some(i) => {
            col.at_most(format!("{name}: {}", forms[i].label()), values[i], limit);
            col.detail(name, true, json!({ "measure": what, "selected": forms[i].label(), "candidates": candidates }));
        }
        None => col.detail(name, false, json!({ "measure": what, "candidates": candidates })),
    }
}
