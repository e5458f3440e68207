//! Output-error model of the straight-line finger.
//!
//! Four additive components of the vertical (Y) error at crank angle `θ`:
//!
//! | component | value |
//! |-----------|-------|
//! | geometric | `0.3·sin 2θ + (ΔL/L)·ideal_y` |
//! | friction  | `0.1·θ` |
//! | clearance | `0.05·c·θ²` |
//! | random    | `noise_amp·z`, `z ~ N(0, 1)` |
//!
//! `θ` is in radians and the coefficients are taken to carry whatever units
//! make each term come out in millimetres. `ideal_y` is the nominal output
//! displacement of the SP linkage at the same drive advance (see
//! [`ideal_y_profile`]).
//!
//! Standard-normal draws come from a counter-based stream: a [`NoiseKey`]
//! fixes the value, so results never depend on evaluation order.

use alloc::vec::Vec;

#[allow(unused_imports)] // inherent methods take over when std is linked
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::linkage::{sp_fk, LinkageError, SpConfig, SpLinkageSpec};

mod analysis;
mod monte_carlo;

pub use analysis::{
    decompose, hysteresis_width, regime_analysis, sensitivity, ComparisonRow, DecompositionReport,
    HysteresisParams, Param, RegimeReport, SensitivityReport, REGIME_BOUNDARY, SENSITIVITY_THETA,
};
pub use monte_carlo::{monte_carlo, McStats, MonteCarlo, ParamDraw, MIN_SAMPLES};

pub const GEO_ANGLE_COEFF: f64 = 0.3;
pub const FRICTION_COEFF: f64 = 0.1;
pub const CLEARANCE_COEFF: f64 = 0.05;
pub const DEFAULT_NOISE_AMP: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ErrorModelError {
    #[error("invalid geometry: effective link length must be positive")]
    InvalidGeometry,
    #[error("invalid error parameters: {0}")]
    InvalidParams(&'static str),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(&'static str),
    #[error("insensitive point: every partial derivative vanishes")]
    InsensitivePoint,
    #[error("grid does not span regimes: need two samples on each side of {boundary} rad")]
    GridDoesNotSpanRegimes { boundary: f64 },
    #[error("resampling required: the angle grid is not uniform")]
    ResamplingRequired,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("trace lengths differ")]
    LengthMismatch,
    #[error("invalid stiffness: k_s must be positive")]
    InvalidStiffness,
    #[error(transparent)]
    Linkage(#[from] LinkageError),
}

/// Nominal link length, the tolerance parameters and the noise settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorParams {
    /// Nominal link length `L` (mm).
    pub link_len: f64,
    /// Manufacturing error `ΔL` (mm).
    pub delta_l: f64,
    /// Joint clearance `c` (mm).
    pub clearance: f64,
    /// Friction coefficient `μ`.
    pub mu: f64,
    pub noise_amp: f64,
    pub seed: u64,
}

impl Default for ErrorParams {
    fn default() -> Self {
        Self {
            link_len: 100.0,
            delta_l: 0.15,
            clearance: 0.12,
            mu: 0.21,
            noise_amp: DEFAULT_NOISE_AMP,
            seed: 0,
        }
    }
}

impl ErrorParams {
    pub fn validate(&self) -> Result<(), ErrorModelError> {
        if !(self.link_len.is_finite() && self.link_len > 0.0) {
            return Err(ErrorModelError::InvalidGeometry);
        }
        if !self.delta_l.is_finite() {
            return Err(ErrorModelError::InvalidParams("delta_l must be finite"));
        }
        for (v, msg) in [
            (self.clearance, "clearance must be non-negative"),
            (self.mu, "mu must be non-negative"),
            (self.noise_amp, "noise_amp must be non-negative"),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ErrorModelError::InvalidParams(msg));
            }
        }
        Ok(())
    }
}

/// One error evaluation. `total` is always `geo + friction + clearance +
/// random`, summed left to right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBreakdown {
    pub theta: f64,
    pub geo: f64,
    pub friction: f64,
    pub clearance: f64,
    pub random: f64,
    pub total: f64,
}

/// Actual X displacement `(L + ΔL)(1 − cos θ)`.
pub fn x_real(link_len: f64, delta_l: f64, theta: f64) -> Result<f64, ErrorModelError> {
    let l = link_len + delta_l;
    if !(l > 0.0) {
        return Err(ErrorModelError::InvalidGeometry);
    }
    Ok(l * (1.0 - theta.cos()))
}

pub fn geo_error(
    theta: f64,
    link_len: f64,
    delta_l: f64,
    ideal_y: f64,
) -> Result<f64, ErrorModelError> {
    if !(link_len > 0.0) {
        return Err(ErrorModelError::InvalidGeometry);
    }
    Ok(GEO_ANGLE_COEFF * (2.0 * theta).sin() + (delta_l / link_len) * ideal_y)
}

pub fn friction_error(theta: f64) -> f64 {
    FRICTION_COEFF * theta
}

pub fn clearance_error(clearance: f64, theta: f64) -> f64 {
    CLEARANCE_COEFF * clearance * theta * theta
}

/// Address of one standard-normal draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NoiseKey {
    pub seed: u64,
    pub sample: u64,
    pub tag: u64,
}

/// Stream tags. Random-term tags start at [`tags::NOISE`] and add the
/// angle index.
pub mod tags {
    pub const DELTA_L: u64 = 1;
    pub const CLEARANCE: u64 = 2;
    pub const MU: u64 = 3;
    pub const NOISE: u64 = 16;
}

impl NoiseKey {
    pub const fn new(seed: u64, sample: u64, tag: u64) -> Self {
        Self { seed, sample, tag }
    }

    /// The standard-normal value at this address.
    pub fn standard_normal(&self) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.sample);
        // 2^20 words per tag is far more than one ziggurat draw can use
        rng.set_word_pos(u128::from(self.tag) << 20);
        StandardNormal.sample(&mut rng)
    }
}

/// `noise_amp · z` for the draw at `key`.
pub fn random_error(noise_amp: f64, key: NoiseKey) -> f64 {
    if noise_amp == 0.0 {
        return 0.0;
    }
    noise_amp * key.standard_normal()
}

/// Evaluates all four components. The random term uses the draw at
/// `(params.seed, sample, tag)`.
pub fn total_y_error(
    params: &ErrorParams,
    theta: f64,
    ideal_y: f64,
    sample: u64,
    tag: u64,
) -> Result<ErrorBreakdown, ErrorModelError> {
    params.validate()?;
    Ok(breakdown(params, theta, ideal_y, sample, tag))
}

/// [`total_y_error`] without validation, for hot loops over checked params.
pub(crate) fn breakdown(
    params: &ErrorParams,
    theta: f64,
    ideal_y: f64,
    sample: u64,
    tag: u64,
) -> ErrorBreakdown {
    let geo = GEO_ANGLE_COEFF * (2.0 * theta).sin() + (params.delta_l / params.link_len) * ideal_y;
    let friction = friction_error(theta);
    let clearance = clearance_error(params.clearance, theta);
    let random = random_error(params.noise_amp, NoiseKey::new(params.seed, sample, tag));
    ErrorBreakdown {
        theta,
        geo,
        friction,
        clearance,
        random,
        total: geo + friction + clearance + random,
    }
}

/// Deterministic part of the total (`noise_amp` treated as 0).
pub(crate) fn deterministic_total(params: &ErrorParams, theta: f64, ideal_y: f64) -> f64 {
    let quiet = ErrorParams {
        noise_amp: 0.0,
        ..*params
    };
    breakdown(&quiet, theta, ideal_y, 0, 0).total
}

/// Error breakdown over a θ grid; the random term at index `j` uses tag
/// `tags::NOISE + j` with sample 0.
pub fn error_sweep(
    params: &ErrorParams,
    thetas: &[f64],
    ideal_y: &[f64],
) -> Result<Vec<ErrorBreakdown>, ErrorModelError> {
    params.validate()?;
    if thetas.len() != ideal_y.len() {
        return Err(ErrorModelError::LengthMismatch);
    }
    Ok(thetas
        .iter()
        .zip(ideal_y)
        .enumerate()
        .map(|(j, (&t, &y))| breakdown(params, t, y, 0, tags::NOISE + j as u64))
        .collect())
}

/// Nominal output displacement of the SP linkage for each drive advance
/// `θ` from rest. Consecutive angles reuse the previous pose, so sorted
/// grids are cheap.
pub fn ideal_y_profile(spec: &SpLinkageSpec, thetas: &[f64]) -> Result<Vec<f64>, ErrorModelError> {
    let rest = spec.rest_config()?;
    let mut prev: SpConfig = rest;
    let mut out = Vec::with_capacity(thetas.len());
    for &t in thetas {
        let cfg = sp_fk(spec, spec.rest_angle + t, Some(&prev))?;
        out.push(cfg.slide_d - rest.slide_d);
        prev = cfg;
    }
    Ok(out)
}

/// Normal distribution summary of one tolerance parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamDist {
    pub mean: f64,
    pub std: f64,
}

/// Distributions of `ΔL`, `c` and `μ`. Defaults are the bench means and
/// standard deviations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamDistributions {
    pub delta_l: ParamDist,
    pub clearance: ParamDist,
    pub mu: ParamDist,
}

impl Default for ParamDistributions {
    fn default() -> Self {
        Self {
            delta_l: ParamDist {
                mean: 0.15,
                std: 0.03,
            },
            clearance: ParamDist {
                mean: 0.12,
                std: 0.05,
            },
            mu: ParamDist {
                mean: 0.21,
                std: 0.03,
            },
        }
    }
}

impl ParamDistributions {
    pub fn validate(&self) -> Result<(), ErrorModelError> {
        for (d, mean_msg, std_msg) in [
            (
                self.delta_l,
                "delta_l.mean must be finite",
                "delta_l.std must be finite and non-negative",
            ),
            (
                self.clearance,
                "c.mean must be finite",
                "c.std must be finite and non-negative",
            ),
            (
                self.mu,
                "mu.mean must be finite",
                "mu.std must be finite and non-negative",
            ),
        ] {
            if !d.mean.is_finite() {
                return Err(ErrorModelError::InvalidDistribution(mean_msg));
            }
            if !(d.std.is_finite() && d.std >= 0.0) {
                return Err(ErrorModelError::InvalidDistribution(std_msg));
            }
        }
        Ok(())
    }

    /// Parameters at the distribution means.
    pub fn at_means(&self, base: &ErrorParams) -> ErrorParams {
        ErrorParams {
            delta_l: self.delta_l.mean,
            clearance: self.clearance.mean,
            mu: self.mu.mean,
            ..*base
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkage::linspace;
    use core::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4};
    use proptest::prelude::*;

    #[test]
    fn x_real_examples() {
        assert_eq!(x_real(100.0, 0.15, 0.0).unwrap(), 0.0);
        assert!((x_real(100.0, 0.15, FRAC_PI_3).unwrap() - 50.075).abs() < 1e-12);
        assert_eq!(
            x_real(100.0, -100.0, 1.0),
            Err(ErrorModelError::InvalidGeometry)
        );
    }

    #[test]
    fn geo_examples() {
        assert_eq!(geo_error(0.0, 100.0, 0.0, 42.0).unwrap(), 0.0);
        assert!((geo_error(FRAC_PI_4, 100.0, 0.15, 10.0).unwrap() - 0.315).abs() < 1e-12);
        assert!(geo_error(FRAC_PI_2, 100.0, 0.0, 7.0).unwrap().abs() < 1e-15);
        assert_eq!(
            geo_error(0.1, 0.0, 0.0, 1.0),
            Err(ErrorModelError::InvalidGeometry)
        );
    }

    #[test]
    fn friction_and_clearance_examples() {
        assert_eq!(friction_error(0.0), 0.0);
        assert!((friction_error(0.5) - 0.05).abs() < 1e-15);
        assert!((friction_error(0.17453) - 0.017453).abs() < 1e-15);
        assert_eq!(clearance_error(0.12, 0.0), 0.0);
        assert!((clearance_error(0.12, 1.0) - 0.006).abs() < 1e-15);
        assert_eq!(clearance_error(0.0, 0.9), 0.0);
    }

    #[test]
    fn draws_are_addressed() {
        let k = NoiseKey::new(7, 123, tags::NOISE + 4);
        assert_eq!(k.standard_normal(), k.standard_normal());
        assert_ne!(
            k.standard_normal(),
            NoiseKey::new(7, 124, tags::NOISE + 4).standard_normal()
        );
        assert_ne!(
            k.standard_normal(),
            NoiseKey::new(7, 123, tags::NOISE + 5).standard_normal()
        );
        assert_ne!(
            k.standard_normal(),
            NoiseKey::new(8, 123, tags::NOISE + 4).standard_normal()
        );
        assert_eq!(random_error(0.0, k), 0.0);
    }

    #[test]
    fn total_examples() {
        let quiet = ErrorParams {
            delta_l: 0.0,
            noise_amp: 0.0,
            ..ErrorParams::default()
        };
        assert_eq!(total_y_error(&quiet, 0.0, 0.0, 0, 0).unwrap().total, 0.0);

        let th = 0.17453;
        let ideal = SpLinkageSpec::default().stroke(th).unwrap();
        let p = ErrorParams {
            noise_amp: 0.0,
            ..ErrorParams::default()
        };
        let b = total_y_error(&p, th, ideal, 0, 0).unwrap();
        let clearance = 0.05 * 0.12 * th * th;
        assert!((clearance - 0.0001828).abs() < 1e-7);
        assert!((b.total - (b.geo + 0.017453 + clearance)).abs() < 1e-15);

        let noisy = total_y_error(&ErrorParams::default(), 0.4, 3.0, 9, tags::NOISE).unwrap();
        assert_eq!(
            noisy.total.to_bits(),
            (noisy.geo + noisy.friction + noisy.clearance + noisy.random).to_bits()
        );
        assert!(noisy.random != 0.0);
    }

    #[test]
    fn params_and_distributions_validate() {
        assert!(ErrorParams {
            clearance: -0.1,
            ..ErrorParams::default()
        }
        .validate()
        .is_err());
        assert!(ErrorParams {
            link_len: 0.0,
            ..ErrorParams::default()
        }
        .validate()
        .is_err());
        let mut d = ParamDistributions::default();
        d.clearance.std = -1.0;
        assert_eq!(
            d.validate(),
            Err(ErrorModelError::InvalidDistribution(
                "c.std must be finite and non-negative"
            ))
        );
    }

    #[test]
    fn ideal_y_matches_stroke() {
        let spec = SpLinkageSpec::default();
        let grid: Vec<f64> = linspace(0.0, 0.3, 7).collect();
        let prof = ideal_y_profile(&spec, &grid).unwrap();
        assert_eq!(prof[0], 0.0);
        for (t, y) in grid.iter().zip(&prof) {
            assert!((spec.stroke(*t).unwrap() - y).abs() < 1e-9);
        }
    }

    #[test]
    fn sweep_uses_indexed_noise() {
        let p = ErrorParams {
            seed: 42,
            ..ErrorParams::default()
        };
        let grid = [0.0, 0.1, 0.2];
        let sweep = error_sweep(&p, &grid, &[0.0, 1.0, 2.0]).unwrap();
        for (j, b) in sweep.iter().enumerate() {
            let expect = 0.2 * NoiseKey::new(42, 0, tags::NOISE + j as u64).standard_normal();
            assert_eq!(b.random, expect);
        }
        assert_eq!(
            error_sweep(&p, &grid, &[0.0]),
            Err(ErrorModelError::LengthMismatch)
        );
    }

    // direct evaluation, written out independently of the module
    fn oracle(theta: f64, l: f64, dl: f64, c: f64, ideal: f64) -> [f64; 4] {
        let x = (l + dl) * (1.0 - libm::cos(theta));
        let g = 0.3 * libm::sin(theta + theta) + (((l + dl) - l) / l) * ideal;
        [x, g, theta / 10.0, c * theta * theta / 20.0]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn components_match_oracle(
            theta in 0.0..=FRAC_PI_2,
            l in 10.0f64..=500.0,
            dl in -0.5f64..0.5,
            c in 0.0f64..0.5,
            ideal in -60.0f64..60.0,
        ) {
            let o = oracle(theta, l, dl, c, ideal);
            prop_assert!((x_real(l, dl, theta).unwrap() - o[0]).abs() <= 1e-12);
            prop_assert!((geo_error(theta, l, dl, ideal).unwrap() - o[1]).abs() <= 1e-12);
            prop_assert!((friction_error(theta) - o[2]).abs() <= 1e-12);
            prop_assert!((clearance_error(c, theta) - o[3]).abs() <= 1e-12);
        }
    }

    proptest! {
        #[test]
        fn clearance_is_pure_quadratic(c in 0.0f64..1.0, t1 in 0.01f64..1.5, t2 in 0.01f64..1.5) {
            let k1 = clearance_error(c, t1) / (t1 * t1);
            let k2 = clearance_error(c, t2) / (t2 * t2);
            prop_assert!((k1 - k2).abs() <= 1e-15 * (1.0 + k1.abs()));
        }

        #[test]
        fn deterministic_total_nondecreasing(
            l in 10.0f64..500.0, dl in 0.0f64..0.5, c in 0.0f64..0.5,
            a in 0.0..FRAC_PI_4, b in 0.0..FRAC_PI_4,
        ) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let p = ErrorParams { link_len: l, delta_l: dl, clearance: c, noise_amp: 0.0, ..ErrorParams::default() };
            // any nondecreasing non-negative ideal_y keeps ΔL·ideal_y ≥ 0
            let f = |t: f64| deterministic_total(&p, t, 40.0 * t * t);
            prop_assert!(f(hi).abs() >= f(lo).abs() - 1e-12);
        }

        #[test]
        fn noise_free_total_is_continuous(t in 0.0f64..1.5) {
            let p = ErrorParams { noise_amp: 0.0, ..ErrorParams::default() };
            let a = total_y_error(&p, t, 3.0, 0, 0).unwrap().total;
            let b = total_y_error(&p, t + 1e-9, 3.0, 0, 0).unwrap().total;
            prop_assert!((a - b).abs() < 1e-8);
        }
    }
}
