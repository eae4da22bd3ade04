//! Curvature of the diagonal metric read off the kinetic term.
//!
//! Metric derivatives come from nested duals of the closed-form entries
//! `g_{ii} = r² sin²(k₁θ₁) ⋯`. The curvature pipeline is generic over the
//! scalar, so evaluating it over `Dual<f64>` along a coordinate direction
//! yields the derivatives of Ricci needed for the Cotton tensor.

use rayon::prelude::*;
use serde::Serialize;

use crate::chain::ChainSystem;
use crate::dual::{Dual, Scalar};
use crate::error::{Error, Result};
use crate::sampling::sample_coordinates;

/// Verdict threshold on scale-normalized tensor norms.
pub const FLATNESS_THRESHOLD: f64 = 1e-7;

/// Diagonal metric with derivatives up to third order at one point.
#[derive(Debug, Clone, Serialize)]
pub struct MetricJet {
    pub q: Vec<f64>,
    /// `g[i]`
    pub g: Vec<f64>,
    /// `d1[i][k] = ∂ₖ g_{ii}`
    pub d1: Vec<Vec<f64>>,
    /// `d2[i][k][l]`
    pub d2: Vec<Vec<Vec<f64>>>,
    /// `d3[i][k][l][m]`
    pub d3: Vec<Vec<Vec<Vec<f64>>>>,
}

type D3 = Dual<Dual<Dual<f64>>>;

/// All metric derivatives through third order, one triple-dual pass per
/// unordered index triple.
pub fn metric_jet(system: &ChainSystem, q: &[f64]) -> Result<MetricJet> {
    system.check_domain(q)?;
    let n = q.len();
    let mut jet = MetricJet {
        q: q.to_vec(),
        g: system.metric_at(q),
        d1: vec![vec![0.0; n]; n],
        d2: vec![vec![vec![0.0; n]; n]; n],
        d3: vec![vec![vec![vec![0.0; n]; n]; n]; n],
    };
    let on = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    for a in 0..n {
        for b in a..n {
            for c in b..n {
                let z: Vec<D3> = q
                    .iter()
                    .enumerate()
                    .map(|(k, &v)| {
                        let inner = Dual::new(v, on(k, a));
                        let mid = Dual::new(inner, Dual::cst(on(k, b)));
                        Dual::new(mid, Dual::cst(on(k, c)))
                    })
                    .collect();
                for (i, gi) in system.metric_at(&z).into_iter().enumerate() {
                    jet.d1[i][a] = gi.re.re.eps;
                    jet.d2[i][a][b] = gi.re.eps.eps;
                    jet.d2[i][b][a] = gi.re.eps.eps;
                    let v = gi.eps.eps.eps;
                    for (x, y, w) in [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)] {
                        jet.d3[i][x][y][w] = v;
                    }
                }
            }
        }
    }
    Ok(jet)
}

/// Dense rank-4 tensor over `n` indices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tensor4<S = f64> {
    pub n: usize,
    pub data: Vec<S>,
}

impl<S: Scalar> Tensor4<S> {
    fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![S::zero(); n * n * n * n],
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize, l: usize) -> S {
        self.data[((i * self.n + j) * self.n + k) * self.n + l]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: S) {
        let n = self.n;
        self.data[((i * n + j) * n + k) * n + l] = v;
    }
}

/// Levi-Civita curvature of a diagonal metric, generic over the scalar.
#[derive(Debug, Clone)]
struct Curv<S> {
    g: Vec<S>,
    /// `gamma[i][j][k] = Γ^i_{jk}`
    gamma: Vec<Vec<Vec<S>>>,
    /// `R_{ijkl}` (all indices down)
    riemann: Tensor4<S>,
    ricci: Vec<Vec<S>>,
    scalar: S,
}

fn curvature_generic<S: Scalar>(system: &ChainSystem, q: &[S], lambda: f64) -> Curv<S> {
    let n = q.len();
    let on = |a: usize, b: usize| if a == b { S::one() } else { S::zero() };
    // g, ∂g, ∂∂g via Dual<Dual<S>>
    let mut g = vec![S::zero(); n];
    let mut d1 = vec![vec![S::zero(); n]; n];
    let mut d2 = vec![vec![vec![S::zero(); n]; n]; n];
    for a in 0..n {
        for b in a..n {
            let z: Vec<Dual<Dual<S>>> = q
                .iter()
                .enumerate()
                .map(|(k, &v)| Dual::new(Dual::new(v, on(k, a)), Dual::new(on(k, b), S::zero())))
                .collect();
            for (i, gi) in system.metric_at(&z).into_iter().enumerate() {
                let gi = gi.scale(lambda);
                g[i] = gi.re.re;
                d1[i][a] = gi.re.eps;
                d2[i][a][b] = gi.eps.eps;
                d2[i][b][a] = gi.eps.eps;
            }
        }
    }
    let half = S::cst(0.5);
    let ginv: Vec<S> = g.iter().map(|v| v.recip()).collect();
    // Γ^i_{jk} = ½ g^{ii}(∂ⱼg_{ik} + ∂ₖg_{ij} − ∂ᵢg_{jk})
    let lower = |i: usize, j: usize, k: usize, dd: &dyn Fn(usize, usize) -> S| -> S {
        let mut v = S::zero();
        if i == k {
            v += dd(i, j);
        }
        if i == j {
            v += dd(i, k);
        }
        if j == k {
            v -= dd(j, i);
        }
        v
    };
    let mut gamma = vec![vec![vec![S::zero(); n]; n]; n];
    // dgamma[l][i][j][k] = ∂ₗΓ^i_{jk}
    let mut dgamma = vec![vec![vec![vec![S::zero(); n]; n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let base = lower(i, j, k, &|a, b| d1[a][b]);
                gamma[i][j][k] = half * ginv[i] * base;
                for l in 0..n {
                    let dbase = lower(i, j, k, &|a, b| d2[a][b][l]);
                    let dginv = -(d1[i][l] * ginv[i] * ginv[i]);
                    dgamma[l][i][j][k] = half * (dginv * base + ginv[i] * dbase);
                }
            }
        }
    }
    let mut riemann = Tensor4::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    // R^i_{jkl} = ∂ₖΓ^i_{lj} − ∂ₗΓ^i_{kj} + Γ^i_{km}Γ^m_{lj} − Γ^i_{lm}Γ^m_{kj}
                    let mut v = dgamma[k][i][l][j] - dgamma[l][i][k][j];
                    for m in 0..n {
                        v += gamma[i][k][m] * gamma[m][l][j] - gamma[i][l][m] * gamma[m][k][j];
                    }
                    riemann.set(i, j, k, l, g[i] * v);
                }
            }
        }
    }
    let mut ricci = vec![vec![S::zero(); n]; n];
    let mut scalar = S::zero();
    for j in 0..n {
        for l in 0..n {
            let mut v = S::zero();
            for i in 0..n {
                v += ginv[i] * riemann.at(i, j, i, l);
            }
            ricci[j][l] = v;
        }
        scalar += ginv[j] * ricci[j][j];
    }
    Curv {
        g,
        gamma,
        riemann,
        ricci,
        scalar,
    }
}

/// Conformal obstruction appropriate to the dimension.
#[derive(Debug, Clone, Serialize)]
pub enum Obstruction {
    /// `C_{ijk}`, antisymmetric in `j, k` (three dimensions).
    Cotton(Vec<Vec<Vec<f64>>>),
    /// `W_{ijkl}` (four or more dimensions).
    Weyl(Tensor4),
    /// Conformal flatness is automatic.
    None,
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvatureReport {
    pub q: Vec<f64>,
    pub metric: Vec<f64>,
    pub riemann: Tensor4,
    pub ricci: Vec<Vec<f64>>,
    pub scalar: f64,
    /// `∇ₖR_{ij}` as `nabla_ricci[k][i][j]`.
    pub nabla_ricci: Vec<Vec<Vec<f64>>>,
    /// `∂ₖR`
    pub d_scalar: Vec<f64>,
    pub obstruction: Obstruction,
    /// Scale-normalized invariant norm of the Riemann tensor.
    pub riemann_norm: f64,
    /// Scale-normalized invariant norm of the obstruction (0 for `n ≤ 2`).
    pub max_norm: f64,
}

/// Options for [`curvature_with`].
#[derive(Debug, Clone, Copy)]
pub struct CurvatureOptions {
    /// Constant factor applied to the metric.
    pub metric_scale: f64,
}

impl Default for CurvatureOptions {
    fn default() -> Self {
        Self { metric_scale: 1.0 }
    }
}

pub fn curvature(system: &ChainSystem, q: &[f64]) -> Result<CurvatureReport> {
    curvature_with(system, q, CurvatureOptions::default())
}

pub fn curvature_with(system: &ChainSystem, q: &[f64], opts: CurvatureOptions) -> Result<CurvatureReport> {
    system.check_domain(q)?;
    if !(opts.metric_scale > 0.0) {
        return Err(Error::InvalidParameter("metric scale must be positive".into()));
    }
    let n = q.len();
    let c = curvature_generic(system, q, opts.metric_scale);
    // ∂ₖ of Ricci and of the scalar by lifting the whole pipeline into Dual<f64>
    let mut d_ricci = vec![vec![vec![0.0; n]; n]; n];
    let mut d_scalar = vec![0.0; n];
    for k in 0..n {
        let z: Vec<Dual<f64>> = q
            .iter()
            .enumerate()
            .map(|(m, &v)| Dual::new(v, if m == k { 1.0 } else { 0.0 }))
            .collect();
        let cd = curvature_generic(system, &z, opts.metric_scale);
        for i in 0..n {
            for j in 0..n {
                d_ricci[k][i][j] = cd.ricci[i][j].eps;
            }
        }
        d_scalar[k] = cd.scalar.eps;
    }
    // ∇ₖR_{ij} = ∂ₖR_{ij} − Γ^m_{ki}R_{mj} − Γ^m_{kj}R_{im}
    let mut nabla_ricci = vec![vec![vec![0.0; n]; n]; n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut v = d_ricci[k][i][j];
                for m in 0..n {
                    v -= c.gamma[m][k][i] * c.ricci[m][j] + c.gamma[m][k][j] * c.ricci[i][m];
                }
                nabla_ricci[k][i][j] = v;
            }
        }
    }
    let g = c.g.clone();
    let gmax = g.iter().copied().fold(0.0, f64::max);
    let inv: Vec<f64> = g.iter().map(|v| 1.0 / v).collect();
    let norm4 = |t: &Tensor4| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        s += t.at(i, j, k, l).powi(2) * inv[i] * inv[j] * inv[k] * inv[l];
                    }
                }
            }
        }
        s.sqrt()
    };
    let riemann_norm = norm4(&c.riemann) * gmax;
    let (obstruction, max_norm) = match n {
        0..=2 => (Obstruction::None, 0.0),
        3 => {
            let mut ct = vec![vec![vec![0.0; n]; n]; n];
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let gik = if i == k { g[i] } else { 0.0 };
                        let gij = if i == j { g[i] } else { 0.0 };
                        let v = nabla_ricci[k][i][j] - nabla_ricci[j][i][k]
                            + 0.25 * (d_scalar[j] * gik - d_scalar[k] * gij);
                        ct[i][j][k] = v;
                        s += v * v * inv[i] * inv[j] * inv[k];
                    }
                }
            }
            (Obstruction::Cotton(ct), s.sqrt() * gmax.powf(1.5))
        }
        _ => {
            let w = weyl(&c.riemann, &c.ricci, c.scalar, &g);
            let m = norm4(&w) * gmax;
            (Obstruction::Weyl(w), m)
        }
    };
    Ok(CurvatureReport {
        q: q.to_vec(),
        metric: g,
        riemann: c.riemann,
        ricci: c.ricci,
        scalar: c.scalar,
        nabla_ricci,
        d_scalar,
        obstruction,
        riemann_norm,
        max_norm,
    })
}

fn weyl(riemann: &Tensor4, ricci: &[Vec<f64>], scalar: f64, g: &[f64]) -> Tensor4 {
    let n = g.len();
    let nf = n as f64;
    let gm = |a: usize, b: usize| if a == b { g[a] } else { 0.0 };
    let mut w = Tensor4::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let ric = gm(i, k) * ricci[j][l] - gm(i, l) * ricci[j][k] - gm(j, k) * ricci[i][l]
                        + gm(j, l) * ricci[i][k];
                    let sc = gm(i, k) * gm(j, l) - gm(i, l) * gm(j, k);
                    let v = riemann.at(i, j, k, l) - ric / (nf - 2.0) + scalar * sc / ((nf - 1.0) * (nf - 2.0));
                    w.set(i, j, k, l, v);
                }
            }
        }
    }
    w
}

impl CurvatureReport {
    fn scale(&self) -> f64 {
        self.riemann.data.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE)
    }

    /// Worst violation of the pair symmetries and the first Bianchi identity,
    /// relative to the largest component.
    pub fn symmetry_residual(&self) -> f64 {
        let n = self.metric.len();
        let r = &self.riemann;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let v = r.at(i, j, k, l);
                        worst = worst
                            .max((v + r.at(j, i, k, l)).abs())
                            .max((v + r.at(i, j, l, k)).abs())
                            .max((v - r.at(k, l, i, j)).abs())
                            .max((v + r.at(i, k, l, j) + r.at(i, l, j, k)).abs());
                    }
                }
            }
        }
        worst / self.scale()
    }

    /// `max_j |∇ⁱG_{ij}|` relative to the largest `|∇R_{ij}|` entry.
    pub fn einstein_divergence(&self) -> f64 {
        let n = self.metric.len();
        let top = self
            .nabla_ricci
            .iter()
            .flatten()
            .flatten()
            .chain(&self.d_scalar)
            .fold(0.0, |m: f64, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for j in 0..n {
            let mut v = -0.5 * self.d_scalar[j];
            for i in 0..n {
                v += self.nabla_ricci[i][i][j] / self.metric[i];
            }
            worst = worst.max(v.abs());
        }
        // the divergence mixes entries weighted by g^{ii}
        let ginv_max = self.metric.iter().map(|g| 1.0 / g).fold(0.0, f64::max);
        worst / (top * ginv_max.max(1.0))
    }

    /// Largest trace of the Weyl tensor relative to its largest entry (0 otherwise).
    pub fn weyl_trace(&self) -> f64 {
        let Obstruction::Weyl(w) = &self.obstruction else {
            return 0.0;
        };
        let n = self.metric.len();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for l in 0..n {
                let t: f64 = (0..n).map(|i| w.at(i, j, i, l) / self.metric[i]).sum();
                worst = worst.max(t.abs());
            }
        }
        worst / self.scale()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FlatnessVerdict {
    pub conformally_flat: bool,
    pub flat: bool,
    pub max_obstruction: f64,
    pub max_riemann: f64,
    pub points_used: usize,
}

/// Verdicts from scale-normalized maxima over seeded sample points.
pub fn flatness_verdict(system: &ChainSystem, sample_count: usize, seed: u64) -> Result<FlatnessVerdict> {
    flatness_verdict_with(system, sample_count, seed, FLATNESS_THRESHOLD)
}

pub fn flatness_verdict_with(
    system: &ChainSystem,
    sample_count: usize,
    seed: u64,
    threshold: f64,
) -> Result<FlatnessVerdict> {
    let n = system.dim();
    if n < 3 {
        return Err(Error::Unsupported(format!(
            "no conformal obstruction in dimension {n} (always conformally flat)"
        )));
    }
    if sample_count == 0 {
        return Err(Error::InvalidParameter("flatness verdict needs at least one point".into()));
    }
    let norms = sample_coordinates(system, sample_count, seed)
        .par_iter()
        .map(|q| curvature(system, q).map(|rep| (rep.max_norm, rep.riemann_norm)))
        .collect::<Result<Vec<_>>>()?;
    let max_obstruction = norms.iter().map(|v| v.0).fold(0.0, f64::max);
    let max_riemann = norms.iter().map(|v| v.1).fold(0.0, f64::max);
    Ok(FlatnessVerdict {
        conformally_flat: max_obstruction <= threshold,
        flat: max_riemann <= threshold,
        max_obstruction,
        max_riemann,
        points_used: sample_count,
    })
}
