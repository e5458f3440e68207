//! Semi-Peaucellier (SP) mechanism.
//!
//! The collinear output nodes of the classical cell are merged into one
//! ternary link carrying stations `E`, `B` and `D` (in that order along the
//! link). `E` and `B` run in sliding joints on a fixed guide line, which
//! holds the output node `D` on that line. The drive crank `l3` turns
//! about `G`; its tip `N` (the knee) is joined to station `B` by the coupler
//! `l2`. A tension spring between the midpoints of `l2` and `l3` selects the
//! assembly branch at rest. The drive rod attaches at the crank pin `P`,
//! `drive_radius` from `G`.
//!
//! The five loop-closure equations are solved by damped Newton iteration.
//! Sweeps continue from the previous solution so the branch never jumps.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent methods take over when std is linked
use num_traits::Float;

use super::{LinkageError, Trace, TraceSample};
use crate::geom2d::{Pose2, Vec2};
use crate::linalg::{cond1, Lu, Mat};

/// Convergence threshold on the largest constraint violation (mm).
pub const SOLVER_TOL: f64 = 1e-10;
/// Newton iteration budget per solve.
pub const MAX_ITERATIONS: usize = 200;
/// Jacobian 1-norm condition number above which a solve is rejected.
pub const MAX_CONDITION: f64 = 1e12;
/// Largest drive increment per continuation sub-step (rad).
pub const CONTINUATION_STEP: f64 = 0.05;

const N: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpLinkageSpec {
    /// Pose of the linkage frame in the parent frame.
    pub base: Pose2,
    /// Drive crank pivot `G`.
    pub crank_pivot: Vec2,
    /// Radius of the drive-rod pin `P` on the crank.
    pub drive_radius: f64,
    /// Coupler `N → B`.
    pub link_l2_len: f64,
    /// Drive crank `G → N`.
    pub link_l3_len: f64,
    /// A point on the slider guide line.
    pub slider_origin: Vec2,
    /// Unit direction of the slider guide.
    pub slider_axis: Vec2,
    pub d_be: f64,
    pub d_bd: f64,
    /// Drive angle of the rest pose, measured from the linkage +x axis.
    pub rest_angle: f64,
    /// Documented usable drive range `(min, max)`.
    pub drive_range: (f64, f64),
    pub spring_rest: f64,
    /// N/mm; only used to report spring energy, the solver is force-free.
    pub spring_stiffness: f64,
}

impl Default for SpLinkageSpec {
    /// Vertical guide through the origin, crank pivot 10 mm to its left,
    /// 40 mm crank and coupler. Over the 90° drive range the output stroke
    /// is about 59 mm.
    fn default() -> Self {
        let rest = -10.0_f64.to_radians();
        Self {
            base: Pose2::IDENTITY,
            crank_pivot: Vec2::new(-10.0, 0.0),
            drive_radius: 15.0,
            link_l2_len: 40.0,
            link_l3_len: 40.0,
            slider_origin: Vec2::ZERO,
            slider_axis: Vec2::new(0.0, 1.0),
            d_be: 20.0,
            d_bd: 25.0,
            rest_angle: rest,
            drive_range: (rest, rest + core::f64::consts::FRAC_PI_2),
            spring_rest: 10.0,
            spring_stiffness: 0.5,
        }
    }
}

impl SpLinkageSpec {
    pub fn validate(&self) -> Result<(), LinkageError> {
        let lengths = [
            self.drive_radius,
            self.link_l2_len,
            self.link_l3_len,
            self.d_be,
            self.d_bd,
            self.spring_rest,
        ];
        if lengths.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(LinkageError::InvalidSpec(
                "SP lengths must be positive and finite",
            ));
        }
        if !self.spring_stiffness.is_finite() || self.spring_stiffness < 0.0 {
            return Err(LinkageError::InvalidSpec(
                "spring stiffness must be non-negative",
            ));
        }
        if (self.slider_axis.norm() - 1.0).abs() > 1e-12 {
            return Err(LinkageError::InvalidSpec(
                "slider axis must be a unit vector",
            ));
        }
        let (lo, hi) = self.drive_range;
        if !(lo < hi) || !(lo..=hi).contains(&self.rest_angle) {
            return Err(LinkageError::InvalidSpec(
                "drive range must contain the rest angle",
            ));
        }
        Ok(())
    }

    /// Solves the rest pose, picking the branch whose spring length is
    /// closest to `spring_rest`.
    pub fn rest_config(&self) -> Result<SpConfig, LinkageError> {
        self.validate()?;
        let phi = self.rest_angle;
        let a = self.slider_axis;
        let knee = self.crank_pivot + Vec2::from_angle(phi) * self.link_l3_len;
        let foot = self.slider_origin + a * (knee - self.slider_origin).dot(a);
        let beta = a.angle();

        let mut best: Option<(f64, SpConfig)> = None;
        for sign in [1.0, -1.0] {
            let b = foot + a * (sign * self.link_l2_len);
            let e = b - a * self.d_be;
            let seed = [e.x, e.y, beta, knee.x, knee.y];
            let Ok(cfg) = solve(self, phi, seed) else {
                continue;
            };
            let err = (cfg.spring_length() - self.spring_rest).abs();
            if best.as_ref().map_or(true, |(b, _)| err < *b) {
                best = Some((err, cfg));
            }
        }
        best.map(|(_, c)| c)
            .ok_or(LinkageError::AssemblyFailure { phi })
    }

    /// Output displacement along the guide when the drive is advanced by
    /// `theta` from rest.
    pub fn stroke(&self, theta: f64) -> Result<f64, LinkageError> {
        let rest = self.rest_config()?;
        let cfg = sp_fk(self, self.rest_angle + theta, Some(&rest))?;
        Ok(cfg.slide_d - rest.slide_d)
    }
}

/// Solved SP pose. Node positions are in the parent frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpConfig {
    pub drive_angle: f64,
    pub crank_pivot: Vec2,
    pub crank_pin: Vec2,
    pub knee: Vec2,
    pub slider_e: Vec2,
    pub slider_b: Vec2,
    pub output_d: Vec2,
    /// Ternary-link heading in the parent frame.
    pub ternary_angle: f64,
    /// Slider displacements along the guide from `slider_origin`.
    pub slide_e: f64,
    pub slide_b: f64,
    pub slide_d: f64,
    /// Largest constraint violation (mm).
    pub residual: f64,
    pub iterations: usize,
    spring_len: f64,
    q: [f64; N],
}

impl SpConfig {
    pub fn nodes(&self) -> Vec<(&'static str, Vec2)> {
        vec![
            ("G", self.crank_pivot),
            ("P", self.crank_pin),
            ("N", self.knee),
            ("E", self.slider_e),
            ("B", self.slider_b),
            ("D", self.output_d),
        ]
    }

    /// Distance between the midpoints of `l2` and `l3`.
    pub fn spring_length(&self) -> f64 {
        self.spring_len
    }
}

fn unpack(spec: &SpLinkageSpec, q: &[f64; N]) -> (Vec2, Vec2, Vec2, Vec2) {
    let e = Vec2::new(q[0], q[1]);
    let t = Vec2::from_angle(q[2]);
    let b = e + t * spec.d_be;
    let n = Vec2::new(q[3], q[4]);
    (e, t, b, n)
}

fn residuals(spec: &SpLinkageSpec, phi: f64, q: &[f64; N]) -> [f64; N] {
    let a = spec.slider_axis;
    let o = spec.slider_origin;
    let g = spec.crank_pivot;
    let (e, _, b, n) = unpack(spec, q);
    let u = Vec2::from_angle(phi);
    [
        a.cross(e - o),
        a.cross(b - o),
        (b - n).norm() - spec.link_l2_len,
        (n - g).norm() - spec.link_l3_len,
        u.cross(n - g),
    ]
}

fn jacobian(spec: &SpLinkageSpec, phi: f64, q: &[f64; N]) -> Mat<N> {
    let a = spec.slider_axis;
    let g = spec.crank_pivot;
    let (_, t, b, n) = unpack(spec, q);
    let db_dbeta = t.perp() * spec.d_be;
    let u = Vec2::from_angle(phi);
    let w = b - n;
    let wl = w.norm();
    let v = n - g;
    let vl = v.norm();
    let (wx, wy) = if wl > 0.0 {
        (w.x / wl, w.y / wl)
    } else {
        (0.0, 0.0)
    };
    let (vx, vy) = if vl > 0.0 {
        (v.x / vl, v.y / vl)
    } else {
        (0.0, 0.0)
    };
    [
        [-a.y, a.x, 0.0, 0.0, 0.0],
        [-a.y, a.x, a.cross(db_dbeta), 0.0, 0.0],
        [wx, wy, wx * db_dbeta.x + wy * db_dbeta.y, -wx, -wy],
        [0.0, 0.0, 0.0, vx, vy],
        [0.0, 0.0, 0.0, -u.y, u.x],
    ]
}

fn max_abs(r: &[f64; N]) -> f64 {
    r.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn sum_sq(r: &[f64; N]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Damped Newton solve at drive angle `phi` from the initial guess `q`.
fn solve(spec: &SpLinkageSpec, phi: f64, mut q: [f64; N]) -> Result<SpConfig, LinkageError> {
    let fail = LinkageError::AssemblyFailure { phi };
    let mut r = residuals(spec, phi, &q);
    let mut iterations = 0;
    while max_abs(&r) >= SOLVER_TOL {
        if iterations == MAX_ITERATIONS {
            return Err(fail);
        }
        iterations += 1;
        let lu = Lu::factor(jacobian(spec, phi, &q)).ok_or(fail.clone())?;
        let step = lu.solve(&r);
        let base = sum_sq(&r);
        let mut lambda = 1.0;
        loop {
            let trial: [f64; N] = core::array::from_fn(|i| q[i] - lambda * step[i]);
            let rt = residuals(spec, phi, &trial);
            if sum_sq(&rt) < base || max_abs(&rt) < SOLVER_TOL {
                q = trial;
                r = rt;
                break;
            }
            lambda *= 0.5;
            if lambda < 1e-12 {
                return Err(fail);
            }
        }
    }
    // one polishing step; kept only if it helps
    if let Some(lu) = Lu::factor(jacobian(spec, phi, &q)) {
        let step = lu.solve(&r);
        let trial: [f64; N] = core::array::from_fn(|i| q[i] - step[i]);
        let rt = residuals(spec, phi, &trial);
        if max_abs(&rt) < max_abs(&r) {
            q = trial;
            r = rt;
        }
    }

    let cond = cond1(&jacobian(spec, phi, &q));
    if cond > MAX_CONDITION {
        return Err(LinkageError::NearSingular { phi, cond });
    }
    let (e, t, b, n) = unpack(spec, &q);
    // the knee must sit on the crank ray, not behind the pivot
    if (n - spec.crank_pivot).dot(Vec2::from_angle(phi)) <= 0.0 {
        return Err(fail);
    }
    let d = e + t * (spec.d_be + spec.d_bd);
    let g = spec.crank_pivot;
    let p = g + Vec2::from_angle(phi) * spec.drive_radius;
    let spring_len = ((g + n) * 0.5).dist((n + b) * 0.5);
    let a = spec.slider_axis;
    let o = spec.slider_origin;
    let frame = spec.base;
    Ok(SpConfig {
        drive_angle: phi,
        crank_pivot: frame.transform_point(g),
        crank_pin: frame.transform_point(p),
        knee: frame.transform_point(n),
        slider_e: frame.transform_point(e),
        slider_b: frame.transform_point(b),
        output_d: frame.transform_point(d),
        ternary_angle: crate::geom2d::normalize_angle(q[2] + frame.orientation()),
        slide_e: (e - o).dot(a),
        slide_b: (b - o).dot(a),
        slide_d: (d - o).dot(a),
        residual: max_abs(&r),
        iterations,
        spring_len,
        q,
    })
}

/// Solves the SP loop closure at drive angle `phi`.
///
/// The solve continues from `prev` when given, otherwise from the rest
/// pose. Large drive jumps are split into sub-steps of at most
/// [`CONTINUATION_STEP`] so the solution stays on the starting branch.
pub fn sp_fk(
    spec: &SpLinkageSpec,
    phi: f64,
    prev: Option<&SpConfig>,
) -> Result<SpConfig, LinkageError> {
    let start = match prev {
        Some(c) => *c,
        None => spec.rest_config()?,
    };
    let span = phi - start.drive_angle;
    if span == 0.0 {
        return Ok(start);
    }
    let steps = ((span.abs() / CONTINUATION_STEP).ceil() as usize).max(1);
    let mut cur = start;
    for i in 1..=steps {
        let target = if i == steps {
            phi
        } else {
            start.drive_angle + span * (i as f64 / steps as f64)
        };
        cur = solve(spec, target, cur.q)?;
    }
    Ok(cur)
}

/// Sweeps the drive over `phis` with continuation; the fingertip pose is
/// the output node `D` with the ternary heading.
pub fn sp_sweep(
    spec: &SpLinkageSpec,
    phis: impl IntoIterator<Item = f64>,
) -> Result<Trace, LinkageError> {
    let mut trace = Trace::new();
    let mut prev: Option<SpConfig> = None;
    for phi in phis {
        let cfg = sp_fk(spec, phi, prev.as_ref())?;
        trace.push(TraceSample {
            drive: phi,
            nodes: cfg.nodes(),
            fingertip: Pose2::new(cfg.output_d, cfg.ternary_angle),
            residual: cfg.residual,
        })?;
        prev = Some(cfg);
    }
    Ok(trace)
}
