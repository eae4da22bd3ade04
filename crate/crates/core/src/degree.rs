//! Momentum degree of a function by finite differences along random lines.
//!
//! On a line `p(t) = p₀ + t·u` a polynomial of total degree `d` is a
//! polynomial of degree `d` in `t` (for generic `u`), so its forward
//! differences of order `d + 1` on an equispaced grid vanish identically.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sampling::P_RANGE;

pub const DEFAULT_DMAX: usize = 12;
pub const MAX_DMAX: usize = 16;
pub const LINES: usize = 8;
/// Lines run over `t ∈ [−w, w]`; a wide segment exposes non-polynomial
/// behaviour that a short one smooths over.
pub const LINE_HALF_WIDTH: f64 = 3.0;
/// Normalized difference below which an order counts as vanished.
pub const VANISH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Degree {
    Exact(usize),
    ExceedsMax,
}

impl Degree {
    pub fn exact(&self) -> Option<usize> {
        match self {
            Degree::Exact(d) => Some(*d),
            Degree::ExceedsMax => None,
        }
    }
}

/// `|Δʲf| / (2ʲ max|f|)` for `j = 0..values.len()`.
fn normalized_differences(values: &[Complex64]) -> Vec<f64> {
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut row = values.to_vec();
    let mut out = Vec::with_capacity(values.len());
    let mut pow2 = 1.0;
    while !row.is_empty() {
        let worst = row.iter().map(|v| v.norm()).fold(0.0, f64::max);
        out.push(if scale > 0.0 { worst / (pow2 * scale) } else { 0.0 });
        row = row.windows(2).map(|w| w[1] - w[0]).collect();
        pow2 *= 2.0;
    }
    out
}

/// Degree of one sampled line: smallest `d` with every order above `d` vanished.
fn line_degree(values: &[Complex64], dmax: usize) -> Option<usize> {
    let diffs = normalized_differences(values);
    if diffs[dmax + 1] > VANISH_TOL {
        return None;
    }
    let mut d = dmax;
    while d > 0 && diffs[d] <= VANISH_TOL {
        d -= 1;
    }
    // an identically vanishing function has degree 0 here
    Some(d)
}

/// Measures the momentum degree of `f` over `n` momenta.
///
/// `f` is sampled at `dmax + 2` equispaced nodes `t ∈ [−w, w]` on each of
/// eight seeded lines; the reported degree is the largest per-line degree.
pub fn degree_probe<F>(f: F, n: usize, dmax: usize, seed: u64) -> Result<Degree>
where
    F: Fn(&[f64]) -> Result<Complex64>,
{
    if dmax > MAX_DMAX {
        return Err(Error::InvalidParameter(format!("dmax {dmax} exceeds {MAX_DMAX}")));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("degree probe needs at least one momentum".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = dmax + 2;
    let mut best = 0;
    for _ in 0..LINES {
        let p0: Vec<f64> = (0..n).map(|_| rng.gen_range(P_RANGE.0..P_RANGE.1)).collect();
        let mut u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        u.iter_mut().for_each(|v| *v /= norm);
        let mut values = Vec::with_capacity(nodes);
        for j in 0..nodes {
            let t = LINE_HALF_WIDTH * (-1.0 + 2.0 * j as f64 / (nodes - 1) as f64);
            let p: Vec<f64> = p0.iter().zip(&u).map(|(a, b)| a + t * b).collect();
            let v = f(&p)?;
            if !v.is_finite() {
                return Err(Error::NonFinite("degree probe sample".into()));
            }
            values.push(v);
        }
        match line_degree(&values, dmax) {
            Some(d) => best = best.max(d),
            None => return Ok(Degree::ExceedsMax),
        }
    }
    Ok(Degree::Exact(best))
}
