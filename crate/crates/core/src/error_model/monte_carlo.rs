//! Monte Carlo propagation of the tolerance distributions.
//!
//! Sample `i` draws `ΔL`, `c` and `μ` once (keys `(seed, i, tag)`) and
//! reuses them across the θ grid; the random term at angle index `j` uses
//! tag `tags::NOISE + j`. Every draw is addressed, so any partition of the
//! work over threads gives bit-identical statistics as long as each angle
//! reduces its samples in index order.

use alloc::vec::Vec;

#[allow(unused_imports)] // inherent methods take over when std is linked
use num_traits::Float;

use super::{breakdown, tags, ErrorModelError, ErrorParams, NoiseKey, ParamDistributions};

pub const MIN_SAMPLES: usize = 100;

/// Tolerance parameters of one Monte Carlo sample. `c` and `μ` are
/// truncated at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamDraw {
    pub delta_l: f64,
    pub clearance: f64,
    pub mu: f64,
}

/// Per-angle statistics of the total error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McStats {
    pub theta: f64,
    pub mean: f64,
    /// Sample standard deviation (n − 1).
    pub std: f64,
    /// Nearest-rank 95th percentile of `|total|`.
    pub p95: f64,
}

/// A validated Monte Carlo job.
#[derive(Debug, Clone)]
pub struct MonteCarlo<'a> {
    base: ErrorParams,
    dists: ParamDistributions,
    thetas: &'a [f64],
    ideal_y: &'a [f64],
    n_samples: usize,
    seed: u64,
}

impl<'a> MonteCarlo<'a> {
    /// `base` supplies `L` and the noise amplitude; `ideal_y[j]` belongs to
    /// `thetas[j]`.
    pub fn new(
        base: &ErrorParams,
        dists: &ParamDistributions,
        thetas: &'a [f64],
        ideal_y: &'a [f64],
        n_samples: usize,
        seed: u64,
    ) -> Result<Self, ErrorModelError> {
        base.validate()?;
        dists.validate()?;
        if n_samples < MIN_SAMPLES {
            return Err(ErrorModelError::TooFewSamples {
                needed: MIN_SAMPLES,
                got: n_samples,
            });
        }
        if thetas.is_empty() {
            return Err(ErrorModelError::TooFewSamples { needed: 1, got: 0 });
        }
        if thetas.len() != ideal_y.len() {
            return Err(ErrorModelError::LengthMismatch);
        }
        Ok(Self {
            base: *base,
            dists: *dists,
            thetas,
            ideal_y,
            n_samples,
            seed,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_angles(&self) -> usize {
        self.thetas.len()
    }

    pub fn draw(&self, i: usize) -> ParamDraw {
        let z = |tag| NoiseKey::new(self.seed, i as u64, tag).standard_normal();
        let d = &self.dists;
        let delta_l = if d.delta_l.std > 0.0 {
            d.delta_l.mean + d.delta_l.std * z(tags::DELTA_L)
        } else {
            d.delta_l.mean
        };
        let clearance = if d.clearance.std > 0.0 {
            d.clearance.mean + d.clearance.std * z(tags::CLEARANCE)
        } else {
            d.clearance.mean
        };
        let mu = if d.mu.std > 0.0 {
            d.mu.mean + d.mu.std * z(tags::MU)
        } else {
            d.mu.mean
        };
        ParamDraw {
            delta_l,
            clearance: clearance.max(0.0),
            mu: mu.max(0.0),
        }
    }

    /// All parameter draws, in sample order.
    pub fn draws(&self) -> Vec<ParamDraw> {
        (0..self.n_samples).map(|i| self.draw(i)).collect()
    }

    /// Total error of sample `i` at angle index `j`.
    pub fn total(&self, draw: &ParamDraw, i: usize, j: usize) -> f64 {
        let p = ErrorParams {
            delta_l: draw.delta_l,
            clearance: draw.clearance,
            mu: draw.mu,
            seed: self.seed,
            ..self.base
        };
        breakdown(
            &p,
            self.thetas[j],
            self.ideal_y[j],
            i as u64,
            tags::NOISE + j as u64,
        )
        .total
    }

    /// Statistics at angle index `j` from the precomputed `draws`.
    pub fn angle_stats(&self, j: usize, draws: &[ParamDraw]) -> McStats {
        let mut totals: Vec<f64> = draws
            .iter()
            .enumerate()
            .map(|(i, d)| self.total(d, i, j))
            .collect();
        summarize(self.thetas[j], &mut totals)
    }

    /// Sequential evaluation over every angle.
    pub fn run(&self) -> Vec<McStats> {
        let draws = self.draws();
        (0..self.thetas.len())
            .map(|j| self.angle_stats(j, &draws))
            .collect()
    }
}

/// Mean, sample std and nearest-rank p95 of `|x|`. Reorders `totals`.
fn summarize(theta: f64, totals: &mut [f64]) -> McStats {
    let n = totals.len() as f64;
    // shifted by the first sample so identical totals give std exactly 0
    let t0 = totals[0];
    let shift = totals.iter().map(|t| t - t0).sum::<f64>() / n;
    let mean = t0 + shift;
    let var = totals
        .iter()
        .map(|t| (t - t0 - shift) * (t - t0 - shift))
        .sum::<f64>()
        / (n - 1.0);
    for t in totals.iter_mut() {
        *t = t.abs();
    }
    totals.sort_unstable_by(f64::total_cmp);
    let rank = (0.95 * n).ceil() as usize;
    McStats {
        theta,
        mean,
        std: var.sqrt(),
        p95: totals[rank.max(1) - 1],
    }
}

/// Convenience wrapper: validate and run sequentially.
pub fn monte_carlo(
    base: &ErrorParams,
    dists: &ParamDistributions,
    thetas: &[f64],
    ideal_y: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<McStats>, ErrorModelError> {
    Ok(MonteCarlo::new(base, dists, thetas, ideal_y, n_samples, seed)?.run())
}
