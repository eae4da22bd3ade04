//! Observables, their derivatives, and Poisson brackets.
//!
//! The bracket convention is
//!
//! ```text
//! {F, G} = Σᵢ ∂F/∂pᵢ ∂G/∂qᵢ − ∂F/∂qᵢ ∂G/∂pᵢ
//! ```
//!
//! so `{p, q} = +1` and `{H, F} = dF/dt`.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::One;
use serde::Serialize;

use crate::chain::{ChainSystem, PhasePoint};
use crate::dual::{cx, Cx, Dual, Scalar};
use crate::error::{Error, Result};
use crate::hyp::{ClosedForm, ConstantEvaluator, ConstantView};

#[derive(Debug, Clone)]
pub enum ObservableKind {
    /// `Lᵢ`, 1-based; `Level(1)` is `H`.
    Level(usize),
    /// `qᵢ`, 1-based.
    Coordinate(usize),
    /// `pᵢ`, 1-based.
    Momentum(usize),
    Constant(Arc<ConstantEvaluator>, ConstantView),
    ClosedForm(ClosedForm),
    Product(Vec<Observable>),
    Power(Box<Observable>, u32),
}

/// A scalar function on phase space, evaluable over any [`Scalar`].
#[derive(Debug, Clone)]
pub struct Observable {
    pub label: String,
    pub kind: ObservableKind,
    system: Arc<ChainSystem>,
}

impl Observable {
    pub fn new(label: impl Into<String>, kind: ObservableKind, system: Arc<ChainSystem>) -> Self {
        Self {
            label: label.into(),
            kind,
            system,
        }
    }

    pub fn hamiltonian(system: &Arc<ChainSystem>) -> Self {
        Self::level(system, 1)
    }

    pub fn level(system: &Arc<ChainSystem>, i: usize) -> Self {
        let label = if i == 1 { "H".to_string() } else { format!("L{i}") };
        Self::new(label, ObservableKind::Level(i), system.clone())
    }

    pub fn levels(system: &Arc<ChainSystem>) -> Vec<Self> {
        (1..=system.dim()).map(|i| Self::level(system, i)).collect()
    }

    pub fn coordinate(system: &Arc<ChainSystem>, i: usize) -> Self {
        Self::new(format!("q{i}"), ObservableKind::Coordinate(i), system.clone())
    }

    pub fn momentum(system: &Arc<ChainSystem>, i: usize) -> Self {
        Self::new(format!("p{i}"), ObservableKind::Momentum(i), system.clone())
    }

    pub fn constant(evaluator: Arc<ConstantEvaluator>, view: ConstantView) -> Self {
        let suffix = match view {
            ConstantView::Raw => " raw",
            ConstantView::Numerator => " numerator",
            ConstantView::Reduced => "",
        };
        let system = Arc::new(evaluator.system().clone());
        Self::new(
            format!("{}{suffix}", evaluator.label()),
            ObservableKind::Constant(evaluator, view),
            system,
        )
    }

    pub fn closed_form(system: &Arc<ChainSystem>, form: ClosedForm) -> Self {
        Self::new(form.label(), ObservableKind::ClosedForm(form), system.clone())
    }

    pub fn product(factors: Vec<Observable>) -> Result<Self> {
        let first = factors
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty product".into()))?;
        let system = first.system.clone();
        let label = factors.iter().map(|f| f.label.as_str()).collect::<Vec<_>>().join("*");
        Ok(Self::new(label, ObservableKind::Product(factors), system))
    }

    pub fn power(base: Observable, k: u32) -> Self {
        let system = base.system.clone();
        Self::new(format!("({})^{k}", base.label), ObservableKind::Power(Box::new(base), k), system)
    }

    pub fn system(&self) -> &ChainSystem {
        &self.system
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    pub fn declared_complex(&self) -> bool {
        match &self.kind {
            ObservableKind::Constant(..) | ObservableKind::ClosedForm(_) => true,
            ObservableKind::Product(fs) => fs.iter().any(Observable::declared_complex),
            ObservableKind::Power(b, _) => b.declared_complex(),
            _ => false,
        }
    }

    fn slot(&self, i: usize) -> Result<usize> {
        if i == 0 || i > self.dim() {
            return Err(Error::InvalidParameter(format!("index {i} outside 1..={}", self.dim())));
        }
        Ok(i - 1)
    }

    pub fn eval<S: Scalar>(&self, q: &[S], p: &[S]) -> Result<Cx<S>> {
        Ok(match &self.kind {
            ObservableKind::Level(i) => cx(self.system.levels_at(q, p)?[self.slot(*i)?]),
            ObservableKind::Coordinate(i) => cx(q[self.slot(*i)?]),
            ObservableKind::Momentum(i) => cx(p[self.slot(*i)?]),
            ObservableKind::Constant(ev, view) => {
                let parts = ev.eval(q, p)?;
                match view {
                    ConstantView::Raw => parts.raw,
                    ConstantView::Numerator => parts.numerator,
                    ConstantView::Reduced => parts.reduced,
                }
            }
            ObservableKind::ClosedForm(form) => form.eval(&self.system, q, p)?,
            ObservableKind::Product(fs) => {
                let mut acc = Cx::<S>::one();
                for f in fs {
                    acc = acc * f.eval(q, p)?;
                }
                acc
            }
            ObservableKind::Power(b, k) => {
                let v = b.eval(q, p)?;
                (0..*k).fold(Cx::<S>::one(), |acc, _| acc * v)
            }
        })
    }

    pub fn value(&self, x: &PhasePoint) -> Result<Complex64> {
        let v = self.eval(&x.q, &x.p)?;
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite(self.label.clone()));
        }
        Ok(v)
    }
}

fn check_arity(f: &Observable, x: &PhasePoint) -> Result<()> {
    if x.dim() != f.dim() || x.p.len() != f.dim() {
        return Err(Error::Arity {
            what: "phase point",
            expected: f.dim(),
            got: x.dim(),
        });
    }
    Ok(())
}

/// `(∂f/∂q₁, …, ∂f/∂qₙ, ∂f/∂p₁, …, ∂f/∂pₙ)`, one dual evaluation per slot.
pub fn gradient(f: &Observable, x: &PhasePoint) -> Result<Vec<Complex64>> {
    check_arity(f, x)?;
    let n = f.dim();
    let mut q: Vec<Dual<f64>> = x.q.iter().map(|&v| Dual::constant(v)).collect();
    let mut p: Vec<Dual<f64>> = x.p.iter().map(|&v| Dual::constant(v)).collect();
    let mut out = vec![Complex64::new(0.0, 0.0); 2 * n];
    for j in 0..2 * n {
        let slot = if j < n { &mut q[j] } else { &mut p[j - n] };
        slot.eps = 1.0;
        let v = f.eval(&q, &p)?;
        out[j] = Complex64::new(v.re.eps, v.im.eps);
        let slot = if j < n { &mut q[j] } else { &mut p[j - n] };
        slot.eps = 0.0;
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("gradient of {}", f.label)));
    }
    Ok(out)
}

/// Symmetric `2n × 2n` Hessian in the same slot order as [`gradient`].
pub fn hessian(f: &Observable, x: &PhasePoint) -> Result<Vec<Vec<Complex64>>> {
    check_arity(f, x)?;
    let n = f.dim();
    let flat = x.to_flat();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); 2 * n]; 2 * n];
    for a in 0..2 * n {
        for b in a..2 * n {
            let z: Vec<Dual<Dual<f64>>> = flat
                .iter()
                .enumerate()
                .map(|(k, &v)| {
                    let inner = Dual::new(v, if k == a { 1.0 } else { 0.0 });
                    Dual::new(inner, Dual::cst(if k == b { 1.0 } else { 0.0 }))
                })
                .collect();
            let v = f.eval(&z[..n], &z[n..])?;
            let h = Complex64::new(v.re.eps.eps, v.im.eps.eps);
            out[a][b] = h;
            out[b][a] = h;
        }
    }
    Ok(out)
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Bracket from precomputed gradients; swapping arguments flips the sign exactly.
pub fn bracket_from_gradients(gf: &[Complex64], gg: &[Complex64]) -> Complex64 {
    let n = gf.len() / 2;
    (0..n).map(|i| gf[n + i] * gg[i]).sum::<Complex64>() - (0..n).map(|i| gf[i] * gg[n + i]).sum::<Complex64>()
}

pub fn poisson_bracket(f: &Observable, g: &Observable, x: &PhasePoint) -> Result<Complex64> {
    Ok(bracket_from_gradients(&gradient(f, x)?, &gradient(g, x)?))
}

/// `|{f, g}| / (|∇f| |∇g|)`, or the raw modulus when either gradient vanishes.
pub fn normalized_bracket(f: &Observable, g: &Observable, x: &PhasePoint) -> Result<f64> {
    let (gf, gg) = (gradient(f, x)?, gradient(g, x)?);
    let b = bracket_from_gradients(&gf, &gg).norm();
    let scale = norm(&gf) * norm(&gg);
    Ok(if scale > 0.0 { b / scale } else { b })
}

/// Gradient of `{g, h}` from gradients and Hessians.
fn bracket_gradient(
    gg: &[Complex64],
    hg: &[Vec<Complex64>],
    gh: &[Complex64],
    hh: &[Vec<Complex64>],
) -> Vec<Complex64> {
    let n = gg.len() / 2;
    (0..2 * n)
        .map(|k| {
            (0..n)
                .map(|i| hg[k][n + i] * gh[i] + gg[n + i] * hh[k][i] - hg[k][i] * gh[n + i] - gg[i] * hh[k][n + i])
                .sum()
        })
        .collect()
}

fn matrix_norm(m: &[Vec<Complex64>]) -> f64 {
    m.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `|{f,{g,h}} + {g,{h,f}} + {h,{f,g}}|` relative to the sum of the moduli of
/// the products of first and second derivatives entering it.
pub fn jacobi_residual(f: &Observable, g: &Observable, h: &Observable, x: &PhasePoint) -> Result<f64> {
    let grads = [gradient(f, x)?, gradient(g, x)?, gradient(h, x)?];
    let hess = [hessian(f, x)?, hessian(g, x)?, hessian(h, x)?];
    let mut total = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    for (a, b, c) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
        let inner = bracket_gradient(&grads[b], &hess[b], &grads[c], &hess[c]);
        total += bracket_from_gradients(&grads[a], &inner);
        scale += norm(&grads[a])
            * (matrix_norm(&hess[b]) * norm(&grads[c]) + norm(&grads[b]) * matrix_norm(&hess[c]));
    }
    Ok(if scale > 0.0 { total.norm() / scale } else { total.norm() })
}

/// Worst normalized `|{Lᵢ, Lⱼ}|` over the points.
pub fn involution_matrix(system: &ChainSystem, points: &[PhasePoint]) -> Result<Vec<Vec<f64>>> {
    if points.is_empty() {
        return Err(Error::InvalidParameter("involution check needs at least one point".into()));
    }
    let sys = Arc::new(system.clone());
    let levels = Observable::levels(&sys);
    let n = levels.len();
    let mut out = vec![vec![0.0; n]; n];
    for x in points {
        let grads = levels.iter().map(|l| gradient(l, x)).collect::<Result<Vec<_>>>()?;
        for i in 0..n {
            for j in 0..n {
                let b = bracket_from_gradients(&grads[i], &grads[j]).norm();
                let scale = norm(&grads[i]) * norm(&grads[j]);
                let v = if scale > 0.0 { b / scale } else { b };
                out[i][j] = f64::max(out[i][j], v);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct RankReport {
    pub rank: usize,
    /// Singular values (descending, relative to the largest) at the point of maximal rank.
    pub singular_values: Vec<f64>,
    pub ranks_per_point: Vec<usize>,
}

/// Numerical rank of the stacked gradients, maximized over the points.
///
/// Each row is scaled to unit length first so that observables of very
/// different magnitude do not mask one another.
pub fn independence_rank(fs: &[Observable], points: &[PhasePoint], tol: f64) -> Result<RankReport> {
    if points.is_empty() || fs.is_empty() {
        return Err(Error::InvalidParameter("rank needs observables and points".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("rank tolerance {tol} must be positive")));
    }
    let mut best = RankReport {
        rank: 0,
        singular_values: vec![],
        ranks_per_point: vec![],
    };
    for x in points {
        let cols = 2 * x.dim();
        let mut m = DMatrix::<Complex64>::zeros(fs.len(), cols);
        for (r, f) in fs.iter().enumerate() {
            let g = gradient(f, x)?;
            let s = norm(&g);
            for (c, v) in g.iter().enumerate() {
                m[(r, c)] = if s > 0.0 { v / s } else { *v };
            }
        }
        let mut sv: Vec<f64> = m.svd(false, false).singular_values.iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        let top = sv.first().copied().unwrap_or(0.0);
        let rank = sv.iter().filter(|&&s| top > 0.0 && s > tol * top).count();
        best.ranks_per_point.push(rank);
        if rank > best.rank || best.singular_values.is_empty() {
            best.rank = rank;
            best.singular_values = sv.iter().map(|s| if top > 0.0 { s / top } else { 0.0 }).collect();
        }
    }
    Ok(best)
}

/// Central-difference gradient, the independent check on [`gradient`].
pub fn finite_difference_gradient(f: &Observable, x: &PhasePoint, step: f64) -> Result<Vec<Complex64>> {
    check_arity(f, x)?;
    let flat = x.to_flat();
    let n = x.dim();
    (0..2 * n)
        .map(|j| {
            let h = step * flat[j].abs().max(1.0);
            let mut up = flat.clone();
            let mut dn = flat.clone();
            up[j] += h;
            dn[j] -= h;
            let fu = f.value(&PhasePoint::from_flat(&up)?)?;
            let fd = f.value(&PhasePoint::from_flat(&dn)?)?;
            Ok((fu - fd) / (2.0 * h))
        })
        .collect()
}
