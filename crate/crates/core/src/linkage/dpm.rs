//! Double parallelogram mechanism (DPM).
//!
//! Two parallelogram loops in series. In each loop both rockers have the
//! same length and turn through the same angle, so the coupler stays
//! parallel to the ground link and the stage only translates. Stacking two
//! loops gives two translational degrees of freedom with the fingertip
//! orientation locked to the base.

use alloc::vec::Vec;
#[allow(unused_imports)] // inherent methods take over when std is linked
use num_traits::Float;

use super::LinkageError;
use crate::geom2d::{Pose2, Vec2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParallelogramLoop {
    /// Rocker length (mm).
    pub long_side: f64,
    /// Ground / coupler length (mm).
    pub short_side: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DpmSpec {
    pub loops: [ParallelogramLoop; 2],
    /// Pose of the first loop's ground link in the parent frame.
    pub base: Pose2,
    /// Fingertip position relative to the second loop's coupler origin.
    pub tip_offset: Vec2,
}

impl Default for DpmSpec {
    fn default() -> Self {
        let l = ParallelogramLoop {
            long_side: 35.0,
            short_side: 12.0,
        };
        Self {
            loops: [l, l],
            base: Pose2::IDENTITY,
            tip_offset: Vec2::ZERO,
        }
    }
}

impl DpmSpec {
    pub fn validate(&self) -> Result<(), LinkageError> {
        let ok = self.loops.iter().all(|l| {
            l.long_side.is_finite()
                && l.short_side.is_finite()
                && l.long_side > 0.0
                && l.short_side > 0.0
        });
        if !ok || !self.tip_offset.is_finite() {
            return Err(LinkageError::InvalidSpec(
                "parallelogram sides must be positive and finite",
            ));
        }
        Ok(())
    }

    /// Summed rocker length; the reach of the stage at zero angles.
    pub fn reach(&self) -> f64 {
        self.loops.iter().map(|l| l.long_side).sum()
    }
}

/// Rocker direction for joint angle `a`, hanging along −y at `a = 0`.
fn rocker(a: f64) -> Vec2 {
    Vec2::new(a.sin(), -a.cos())
}

/// Rocker tips of both loops and the fingertip, in the base frame.
fn chain(spec: &DpmSpec, angles: [f64; 2]) -> Result<(Vec<Vec2>, Vec2), LinkageError> {
    let mut origin = Vec2::ZERO;
    let mut joints = Vec::with_capacity(4);
    let mut coupler = Vec2::new(1.0, 0.0);
    for (lp, &a) in spec.loops.iter().zip(angles.iter()) {
        if !a.is_finite() || a.abs() >= core::f64::consts::FRAC_PI_2 {
            return Err(LinkageError::ParallelogramFlip);
        }
        let p0 = origin;
        let p1 = origin + Vec2::new(lp.short_side, 0.0);
        let t = rocker(a) * lp.long_side;
        let q0 = p0 + t;
        let q1 = p1 + t;
        joints.push(q0);
        joints.push(q1);
        coupler = q1 - q0;
        origin = q0;
    }
    // the coupler's y component cancels exactly, so its heading is exactly 0
    let heading = coupler.y.atan2(coupler.x);
    Ok((joints, origin + spec.tip_offset.rotated(heading)))
}

/// Fingertip pose for the rocker angles of the two loops.
pub fn dpm_fingertip(spec: &DpmSpec, angles: [f64; 2]) -> Result<Pose2, LinkageError> {
    let (joints, tip) = chain(spec, angles)?;
    let c = joints[3] - joints[2];
    let heading = c.y.atan2(c.x);
    Ok(Pose2::new(
        spec.base.transform_point(tip),
        spec.base.orientation() + heading,
    ))
}

/// Coupler corner positions of both loops in the parent frame, for plotting.
pub fn dpm_joints(spec: &DpmSpec, angles: [f64; 2]) -> Result<Vec<Vec2>, LinkageError> {
    let (joints, _) = chain(spec, angles)?;
    Ok(joints
        .into_iter()
        .map(|p| spec.base.transform_point(p))
        .collect())
}
