//! Sensitivity ranking, regime slopes, the friction hysteresis band and the
//! per-component spectral decomposition.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

#[allow(unused_imports)] // inherent methods take over when std is linked
use num_traits::Float;

use super::{
    deterministic_total, ErrorBreakdown, ErrorModelError, ErrorParams, ParamDistributions,
    CLEARANCE_COEFF,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Param {
    DeltaL,
    Clearance,
    Mu,
}

impl Param {
    pub const ALL: [Param; 3] = [Param::DeltaL, Param::Clearance, Param::Mu];

    pub fn name(self) -> &'static str {
        match self {
            Param::DeltaL => "delta_l",
            Param::Clearance => "c",
            Param::Mu => "mu",
        }
    }
}

/// Normalized first-order sensitivities at one angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityReport {
    pub theta: f64,
    /// `∂total/∂p` in [`Param::ALL`] order.
    pub partials: [f64; 3],
    /// `|∂_i|σ_i / Σ_j |∂_j|σ_j`, same order; sums to 1.
    pub coefficients: [f64; 3],
    /// Parameters by decreasing coefficient (ties keep [`Param::ALL`] order).
    pub ranking: [Param; 3],
}

impl SensitivityReport {
    pub fn coefficient(&self, p: Param) -> f64 {
        self.coefficients[p as usize]
    }
}

fn with_param(p: &ErrorParams, which: Param, value: f64) -> ErrorParams {
    let mut out = *p;
    match which {
        Param::DeltaL => out.delta_l = value,
        Param::Clearance => out.clearance = value,
        Param::Mu => out.mu = value,
    }
    out
}

/// Default evaluation angle for [`sensitivity`]: 10°, inside the
/// nonlinear regime where every term is active.
pub const SENSITIVITY_THETA: f64 = 10.0 * core::f64::consts::PI / 180.0;

/// Finite-difference sensitivity of the deterministic total at `theta`,
/// evaluated at the distribution means. Central differences with step
/// `max(1e−6, 1e−4·σ)`.
pub fn sensitivity(
    base: &ErrorParams,
    dists: &ParamDistributions,
    theta: f64,
    ideal_y: f64,
) -> Result<SensitivityReport, ErrorModelError> {
    dists.validate()?;
    let at = dists.at_means(base);
    at.validate()?;
    let sig = [dists.delta_l.std, dists.clearance.std, dists.mu.std];
    let mean = [at.delta_l, at.clearance, at.mu];
    let mut partials = [0.0; 3];
    for (k, p) in Param::ALL.into_iter().enumerate() {
        let h = (1e-4 * sig[k]).max(1e-6);
        // c and μ are bounded below by 0: one-sided at the boundary
        let lo = if p == Param::DeltaL {
            mean[k] - h
        } else {
            (mean[k] - h).max(0.0)
        };
        let hi = mean[k] + h;
        let f = |v| deterministic_total(&with_param(&at, p, v), theta, ideal_y);
        partials[k] = (f(hi) - f(lo)) / (hi - lo);
    }
    let weights: [f64; 3] = core::array::from_fn(|k| partials[k].abs() * sig[k]);
    let sum: f64 = weights.iter().sum();
    if !(sum > 0.0) {
        return Err(ErrorModelError::InsensitivePoint);
    }
    let coefficients = weights.map(|w| w / sum);
    let mut ranking = Param::ALL;
    ranking.sort_by(|a, b| coefficients[*b as usize].total_cmp(&coefficients[*a as usize]));
    Ok(SensitivityReport {
        theta,
        partials,
        coefficients,
        ranking,
    })
}

/// Five degrees: the boundary between the linear and nonlinear regimes.
pub const REGIME_BOUNDARY: f64 = 5.0 * core::f64::consts::PI / 180.0;

/// One line of a computed-versus-reference table. References are bench
/// figures and are never asserted.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub quantity: &'static str,
    pub computed: Option<f64>,
    pub reference_measured: Option<f64>,
    pub reference_theory: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    /// Least-squares slope of the deterministic `|total|` for `θ ≤ 5°`.
    pub linear_slope: f64,
    /// Same for `θ ≥ 5°`.
    pub nonlinear_slope: f64,
    /// `nonlinear_slope / linear_slope`.
    pub growth_ratio: f64,
    pub linear_samples: usize,
    pub nonlinear_samples: usize,
    /// Largest `|total| + 3σ` below 5°, σ by linear propagation of the
    /// parameter spreads plus the noise amplitude.
    pub linear_max_3sigma: f64,
    pub comparison: Vec<ComparisonRow>,
}

fn ls_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

fn sigma_total(params: &ErrorParams, dists: &ParamDistributions, theta: f64, ideal_y: f64) -> f64 {
    let d_dl = ideal_y / params.link_len * dists.delta_l.std;
    let d_c = CLEARANCE_COEFF * theta * theta * dists.clearance.std;
    (d_dl * d_dl + d_c * d_c + params.noise_amp * params.noise_amp).sqrt()
}

/// Piecewise slopes of the deterministic `|total|` on either side of 5°.
/// Grid points exactly at the boundary count on both sides.
pub fn regime_analysis(
    params: &ErrorParams,
    dists: &ParamDistributions,
    thetas: &[f64],
    ideal_y: &[f64],
) -> Result<RegimeReport, ErrorModelError> {
    params.validate()?;
    dists.validate()?;
    if thetas.len() != ideal_y.len() {
        return Err(ErrorModelError::LengthMismatch);
    }
    let pts: Vec<(f64, f64, f64)> = thetas
        .iter()
        .zip(ideal_y)
        .map(|(&t, &y)| (t, deterministic_total(params, t, y).abs(), y))
        .collect();
    let lin: Vec<(f64, f64)> = pts
        .iter()
        .filter(|p| p.0 <= REGIME_BOUNDARY)
        .map(|p| (p.0, p.1))
        .collect();
    let non: Vec<(f64, f64)> = pts
        .iter()
        .filter(|p| p.0 >= REGIME_BOUNDARY)
        .map(|p| (p.0, p.1))
        .collect();
    let distinct = |v: &[(f64, f64)]| v.iter().any(|p| p.0 != v[0].0);
    if lin.len() < 2 || non.len() < 2 || !distinct(&lin) || !distinct(&non) {
        return Err(ErrorModelError::GridDoesNotSpanRegimes {
            boundary: REGIME_BOUNDARY,
        });
    }
    let linear_slope = ls_slope(&lin);
    let nonlinear_slope = ls_slope(&non);
    let growth_ratio = nonlinear_slope / linear_slope;

    let linear_max_3sigma = pts
        .iter()
        .filter(|p| p.0 <= REGIME_BOUNDARY)
        .map(|p| p.1 + 3.0 * sigma_total(params, dists, p.0, p.2))
        .fold(0.0, f64::max);

    let ten = 2.0 * REGIME_BOUNDARY;
    let at_ten = interpolate(&pts, ten).map(|(e, y)| e + 3.0 * sigma_total(params, dists, ten, y));
    let comparison = vec![
        ComparisonRow {
            quantity: "max |error| + 3 sigma below 5 deg (mm)",
            computed: Some(linear_max_3sigma),
            reference_measured: Some(0.12),
            reference_theory: Some(0.13),
        },
        ComparisonRow {
            quantity: "|error| + 3 sigma at 10 deg (mm)",
            computed: at_ten,
            reference_measured: Some(0.38),
            reference_theory: Some(0.35),
        },
        ComparisonRow {
            quantity: "growth-rate increase above 5 deg (%)",
            computed: Some((growth_ratio - 1.0) * 100.0),
            reference_measured: Some(42.0),
            reference_theory: None,
        },
    ];
    Ok(RegimeReport {
        linear_slope,
        nonlinear_slope,
        growth_ratio,
        linear_samples: lin.len(),
        nonlinear_samples: non.len(),
        linear_max_3sigma,
        comparison,
    })
}

/// Linear interpolation of `(|total|, ideal_y)` at `t` on a sorted grid.
fn interpolate(pts: &[(f64, f64, f64)], t: f64) -> Option<(f64, f64)> {
    let w = pts.windows(2).find(|w| w[0].0 <= t && t <= w[1].0)?;
    let (a, b) = (w[0], w[1]);
    let s = if b.0 > a.0 {
        (t - a.0) / (b.0 - a.0)
    } else {
        0.0
    };
    Some((a.1 + s * (b.1 - a.1), a.2 + s * (b.2 - a.2)))
}

/// Coulomb-friction hysteresis inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HysteresisParams {
    pub mu: f64,
    /// Normal force (N).
    pub normal_force: f64,
    /// Sliding velocity (m/s).
    pub velocity: f64,
    /// Spring stiffness (N/mm).
    pub k_s: f64,
}

impl Default for HysteresisParams {
    /// `k_s` is chosen so the band comes out at 0.15 mm.
    fn default() -> Self {
        Self {
            mu: 0.21,
            normal_force: 10.0,
            velocity: 0.2,
            k_s: 2.8,
        }
    }
}

/// Band width `μ·N·v / k_s`.
pub fn hysteresis_width(h: &HysteresisParams) -> Result<f64, ErrorModelError> {
    if !(h.k_s.is_finite() && h.k_s > 0.0) {
        return Err(ErrorModelError::InvalidStiffness);
    }
    if !(h.normal_force.is_finite() && h.normal_force > 0.0) {
        return Err(ErrorModelError::InvalidParams(
            "normal force must be positive",
        ));
    }
    if !(h.velocity.is_finite() && h.velocity >= 0.0) {
        return Err(ErrorModelError::InvalidParams(
            "velocity must be non-negative",
        ));
    }
    if !(h.mu.is_finite() && h.mu >= 0.0) {
        return Err(ErrorModelError::InvalidParams("mu must be non-negative"));
    }
    Ok(h.mu * h.normal_force * h.velocity / h.k_s)
}

pub const MIN_DECOMPOSE_SAMPLES: usize = 256;

/// Component traces and their summary features.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionReport {
    /// Spectral peak of the geometric trace (cycles per radian).
    pub geo_dominant_freq: f64,
    /// Half peak-to-peak of the geometric trace (mm).
    pub geo_amplitude: f64,
    pub clearance_skewness: f64,
    pub friction_band: f64,
    pub thetas: Vec<f64>,
    pub geo: Vec<f64>,
    pub friction: Vec<f64>,
    pub clearance: Vec<f64>,
    pub random: Vec<f64>,
    pub comparison: Vec<ComparisonRow>,
}

/// Splits a uniform-grid sweep into its components. `clearance_samples`
/// are clearance-error values under sampled `c`, used for the skewness.
pub fn decompose(
    sweep: &[ErrorBreakdown],
    clearance_samples: &[f64],
    hysteresis: &HysteresisParams,
) -> Result<DecompositionReport, ErrorModelError> {
    let n = sweep.len();
    if n < MIN_DECOMPOSE_SAMPLES {
        return Err(ErrorModelError::TooFewSamples {
            needed: MIN_DECOMPOSE_SAMPLES,
            got: n,
        });
    }
    let thetas: Vec<f64> = sweep.iter().map(|b| b.theta).collect();
    let step = thetas[1] - thetas[0];
    let span = thetas[n - 1] - thetas[0];
    let uniform = step > 0.0
        && thetas
            .windows(2)
            .all(|w| ((w[1] - w[0]) - step).abs() <= 1e-9 * span.abs().max(1.0));
    if !uniform {
        return Err(ErrorModelError::ResamplingRequired);
    }
    let geo: Vec<f64> = sweep.iter().map(|b| b.geo).collect();
    let (lo, hi) = geo
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
            (l.min(v), h.max(v))
        });
    let geo_dominant_freq = dominant_frequency(&geo, step);
    let clearance_skewness = skewness(clearance_samples);
    let friction_band = hysteresis_width(hysteresis)?;
    let comparison = vec![
        ComparisonRow {
            quantity: "geometric amplitude (mm)",
            computed: Some((hi - lo) / 2.0),
            reference_measured: Some(0.15),
            reference_theory: None,
        },
        ComparisonRow {
            quantity: "clearance skewness",
            computed: Some(clearance_skewness),
            reference_measured: Some(0.35),
            reference_theory: None,
        },
        ComparisonRow {
            quantity: "friction band (mm)",
            computed: Some(friction_band),
            reference_measured: Some(0.15),
            reference_theory: None,
        },
        ComparisonRow {
            quantity: "geometric frequency, 6/theta at sweep end (1/rad)",
            computed: Some(geo_dominant_freq),
            reference_measured: None,
            reference_theory: (thetas[n - 1] > 0.0).then(|| 6.0 / thetas[n - 1]),
        },
    ];
    Ok(DecompositionReport {
        geo_dominant_freq,
        geo_amplitude: (hi - lo) / 2.0,
        clearance_skewness,
        friction_band,
        geo,
        friction: sweep.iter().map(|b| b.friction).collect(),
        clearance: sweep.iter().map(|b| b.clearance).collect(),
        random: sweep.iter().map(|b| b.random).collect(),
        thetas,
        comparison,
    })
}

/// Peak of the Hann-windowed DFT magnitude (DC excluded), refined by a
/// parabola through the log magnitudes of the peak bin and its neighbours.
/// In cycles per unit of the sample spacing `dt`.
fn dominant_frequency(x: &[f64], dt: f64) -> f64 {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let (cos_t, sin_t): (Vec<f64>, Vec<f64>) = (0..n)
        .map(|i| (TAU * i as f64 / n as f64).sin_cos())
        .map(|(s, c)| (c, s))
        .unzip();
    let windowed: Vec<f64> = x
        .iter()
        .zip(&cos_t)
        .map(|(v, c)| (v - mean) * 0.5 * (1.0 - c))
        .collect();
    let half = n / 2;
    let mut mag = vec![0.0; half + 1];
    for (k, m) in mag.iter_mut().enumerate().skip(1) {
        let (mut re, mut im) = (0.0, 0.0);
        for (i, &v) in windowed.iter().enumerate() {
            let idx = (k * i) % n;
            re += v * cos_t[idx];
            im -= v * sin_t[idx];
        }
        *m = re.hypot(im);
    }
    let mut k = 1;
    for j in 2..=half {
        if mag[j] > mag[k] {
            k = j;
        }
    }
    let mut delta = 0.0;
    if k + 1 <= half && mag[k - 1] > 0.0 && mag[k + 1] > 0.0 {
        let (a, b, c) = (mag[k - 1].ln(), mag[k].ln(), mag[k + 1].ln());
        let den = a - 2.0 * b + c;
        if den < 0.0 {
            delta = (0.5 * (a - c) / den).clamp(-0.5, 0.5);
        }
    }
    (k as f64 + delta) / (n as f64 * dt)
}

/// Third standardized moment (population); 0 for constant data.
fn skewness(x: &[f64]) -> f64 {
    let Some(&x0) = x.first() else { return 0.0 };
    // shifted by the first sample so constant data gives exactly zero
    let n = x.len() as f64;
    let shift = x.iter().map(|v| v - x0).sum::<f64>() / n;
    let m2 = x.iter().map(|v| (v - x0 - shift).powi(2)).sum::<f64>() / n;
    let m3 = x.iter().map(|v| (v - x0 - shift).powi(3)).sum::<f64>() / n;
    if m2 <= f64::MIN_POSITIVE {
        return 0.0;
    }
    m3 / m2.powf(1.5)
}
