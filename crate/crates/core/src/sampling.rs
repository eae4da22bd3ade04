//! Seeded random phase points.
//!
//! Boxes: `r ∈ [0.5, 2]`, each `θ` in the central 80% of `(0, π/(2k))` where
//! `k` is the largest angular parameter at that level, `p ∈ [−2, 2]ⁿ`.

use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chain::{ChainSystem, PhasePoint};

pub const R_RANGE: (f64, f64) = (0.5, 2.0);
pub const P_RANGE: (f64, f64) = (-2.0, 2.0);
pub const ANGLE_FRACTION: (f64, f64) = (0.1, 0.9);

pub struct PointSampler<'a> {
    system: &'a ChainSystem,
    rng: ChaCha8Rng,
}

impl<'a> PointSampler<'a> {
    pub fn new(system: &'a ChainSystem, seed: u64) -> Self {
        Self {
            system,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn coordinates(&mut self) -> Vec<f64> {
        let n = self.system.dim();
        (0..n)
            .map(|i| {
                if i == 0 {
                    self.rng.gen_range(R_RANGE.0..R_RANGE.1)
                } else {
                    let upper = FRAC_PI_2 / self.system.level_k_max(i).unwrap_or(1.0);
                    upper * self.rng.gen_range(ANGLE_FRACTION.0..ANGLE_FRACTION.1)
                }
            })
            .collect()
    }

    pub fn momenta(&mut self) -> Vec<f64> {
        (0..self.system.dim())
            .map(|_| self.rng.gen_range(P_RANGE.0..P_RANGE.1))
            .collect()
    }

    pub fn point(&mut self) -> PhasePoint {
        let q = self.coordinates();
        let p = self.momenta();
        PhasePoint::new(q, p)
    }

    pub fn points(&mut self, count: usize) -> Vec<PhasePoint> {
        (0..count).map(|_| self.point()).collect()
    }
}

/// `count` seeded points; identical for identical `(system, seed)`.
pub fn sample_points(system: &ChainSystem, count: usize, seed: u64) -> Vec<PhasePoint> {
    PointSampler::new(system, seed).points(count)
}

pub fn sample_coordinates(system: &ChainSystem, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut s = PointSampler::new(system, seed);
    (0..count).map(|_| s.coordinates()).collect()
}
