//! Quasi-static two-finger gripper.
//!
//! The palm frame is the world frame: the palm face is `y = 0`, fingers
//! hang toward `−y`, the left finger sits at `x < 0` and the right finger is
//! its mirror image.
//!
//! Each finger has a proximal phalange from the palm joint `Q` (sliding in a
//! vertical palm channel) to the distal joint `K`, and a distal phalange
//! hanging from `K` whose last `tip_len` millimetres form the fingertip. The
//! SP linkage drives `K` along a straight horizontal line; the double
//! parallelogram in the proximal phalange keeps the distal phalange at the
//! palm orientation.
//!
//! One drive turns both finger cams. During the first `idle_stroke` of cam
//! rotation the cam only advances the SP linkage. Past it, the distal
//! phalange turns inward by `ψ = g·(φ_cam − φ_idle)`. Contacts arrest
//! motion: a proximal contact stops translation, a distal or fingertip
//! contact stops the finger and its cam.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use thiserror::Error;

use crate::geom2d::{Pose2, Vec2};
use crate::linkage::{dpm_fingertip, DpmSpec, LinkageError, SpConfig, SpLinkageSpec};

mod contact;
mod sim;

pub use contact::{detect_contacts, ContactPoint, ObjectProfile};
pub use sim::{fingertip_height_profile, run_grasp, step, step_independent};

/// Largest accepted drive increment (rad).
pub const MAX_STEP: f64 = 0.01;
/// Width of the first-contact bracket after bisection (rad).
pub const CONTACT_RESOLUTION: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraspError {
    #[error("invalid step: drive increment must be in (0, {MAX_STEP}] rad")]
    InvalidStep,
    #[error("contact resolution failure: {penetration} mm beyond pad compliance")]
    ContactResolution { penetration: f64 },
    #[error("malformed object: {0}")]
    MalformedObject(&'static str),
    #[error("unreachable object: {0}")]
    Unreachable(&'static str),
    #[error("adaptive phase entered at drive {drive} rad")]
    AdaptivePhaseEntered { drive: f64 },
    #[error("invalid gripper spec: {0}")]
    InvalidSpec(&'static str),
    #[error("initial opening {opening} mm outside [{min}, {max}] mm")]
    InvalidOpening { opening: f64, min: f64, max: f64 },
    #[error(transparent)]
    Linkage(#[from] LinkageError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FingerSpec {
    /// Translation stage. Its base orientation maps the linkage output
    /// axis onto the closing direction `+x`.
    pub sp: SpLinkageSpec,
    /// Proximal phalange; its reach is the proximal length.
    pub dpm: DpmSpec,
    pub distal_len: f64,
    /// Fingertip part of the distal phalange.
    pub tip_len: f64,
    /// Distal joint `K` of the left finger at rest.
    pub distal_joint_rest: Vec2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GripperSpec {
    pub palm_width: f64,
    /// Left finger; the right one is its mirror image.
    pub finger: FingerSpec,
    pub idle_stroke: f64,
    pub gear_ratio: f64,
    pub max_drive: f64,
    pub pad: f64,
    /// Allow [`step_independent`].
    pub independent_drive: bool,
}

impl Default for GripperSpec {
    fn default() -> Self {
        let sp = SpLinkageSpec {
            base: Pose2::new(Vec2::ZERO, -FRAC_PI_2),
            ..SpLinkageSpec::default()
        };
        Self {
            palm_width: 110.0,
            finger: FingerSpec {
                sp,
                dpm: DpmSpec::default(),
                distal_len: 40.0,
                tip_len: 15.0,
                distal_joint_rest: Vec2::new(-65.0, -60.0),
            },
            idle_stroke: FRAC_PI_2,
            gear_ratio: 1.0,
            max_drive: PI,
            pad: 2.0,
            independent_drive: false,
        }
    }
}

impl GripperSpec {
    pub fn validate(&self) -> Result<(), GraspError> {
        let f = &self.finger;
        f.sp.validate()?;
        f.dpm.validate()?;
        let positive = [
            self.palm_width,
            f.distal_len,
            f.tip_len,
            self.pad,
            self.max_drive,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(GraspError::InvalidSpec(
                "lengths and max drive must be positive",
            ));
        }
        if f.tip_len > f.distal_len {
            return Err(GraspError::InvalidSpec(
                "fingertip longer than the distal phalange",
            ));
        }
        if !(self.idle_stroke > 0.0 && self.idle_stroke <= PI) {
            return Err(GraspError::InvalidSpec("idle stroke must be in (0, pi]"));
        }
        if !(self.gear_ratio.is_finite() && self.gear_ratio > 0.0) {
            return Err(GraspError::InvalidSpec("gear ratio must be positive"));
        }
        if !f.distal_joint_rest.is_finite() || f.distal_joint_rest.x >= 0.0 {
            return Err(GraspError::InvalidSpec(
                "left distal joint must sit at x < 0",
            ));
        }
        if self.finger.sp.rest_angle + self.idle_stroke > self.finger.sp.drive_range.1 + 1e-12 {
            return Err(GraspError::InvalidSpec(
                "idle stroke exceeds the SP drive range",
            ));
        }
        Ok(())
    }

    /// Proximal phalange length.
    pub fn proximal_len(&self) -> f64 {
        self.finger.dpm.reach()
    }

    /// Palm-channel x of the left proximal joint.
    pub fn palm_joint_x(&self) -> f64 {
        -self.palm_width / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FingerId {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phalange {
    Proximal,
    Distal,
    Fingertip,
}

impl Phalange {
    pub const ALL: [Phalange; 3] = [Phalange::Proximal, Phalange::Distal, Phalange::Fingertip];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GraspMode {
    ParallelPinch,
    AdaptiveEnvelope,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    Pinch,
    Envelope,
    Failure,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FingerState {
    pub cam: f64,
    /// Inward distal rotation.
    pub psi: f64,
    /// SP drive advance from rest; frozen once translation stops.
    pub translation: f64,
    /// Fingertip end with the distal orientation.
    pub fingertip: Pose2,
    /// Proximal, distal and fingertip segments.
    pub segments: [(Vec2, Vec2); 3],
    pub translation_arrested: bool,
    pub arrested: bool,
    /// Cam angle at which the distal phalange started to turn.
    pub engaged_at: Option<f64>,
    /// Drive angle of the first contact on this finger.
    pub first_contact_drive: Option<f64>,
    sp: SpConfig,
}

impl FingerState {
    pub fn distal_joint(&self) -> Vec2 {
        self.segments[0].1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GripperState {
    pub drive: f64,
    /// Left, right.
    pub fingers: [FingerState; 2],
    pub mode: GraspMode,
    pub contacts: Vec<ContactPoint>,
}

impl GripperState {
    /// Both fingers fully open, drive 0.
    pub fn initial(spec: &GripperSpec) -> Result<Self, GraspError> {
        spec.validate()?;
        let kin = Kinematics::new(spec)?;
        let left = kin.finger(spec, kin.rest, 0.0, 0.0, FingerId::Left)?;
        let right = kin.finger(spec, kin.rest, 0.0, 0.0, FingerId::Right)?;
        Ok(Self {
            drive: 0.0,
            fingers: [left, right],
            mode: GraspMode::ParallelPinch,
            contacts: Vec::new(),
        })
    }

    /// Distance between the two fingertip ends.
    pub fn fingertip_gap(&self) -> f64 {
        self.fingers[0]
            .fingertip
            .position
            .dist(self.fingers[1].fingertip.position)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraspResult {
    pub final_state: GripperState,
    pub mode: GraspMode,
    pub contact_count: usize,
    pub classification: Classification,
    /// The object is held fixed, so this is always 0.
    pub object_displacement: f64,
    /// Every accepted state, starting with the initial one.
    pub trajectory: Vec<GripperState>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraspScenario {
    pub object: Option<ObjectProfile>,
    /// Fingertip gap to pre-close to before the run; fully open if `None`.
    pub initial_opening: Option<f64>,
}

/// Finger geometry derived once per spec.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Kinematics {
    rest: SpConfig,
}

impl Kinematics {
    pub(crate) fn new(spec: &GripperSpec) -> Result<Self, GraspError> {
        Ok(Self {
            rest: spec.finger.sp.rest_config()?,
        })
    }

    /// Finger pose for SP advance `translation` and distal rotation `psi`,
    /// solving the SP linkage from `prev`.
    pub(crate) fn finger(
        &self,
        spec: &GripperSpec,
        prev: SpConfig,
        translation: f64,
        psi: f64,
        id: FingerId,
    ) -> Result<FingerState, GraspError> {
        let f = &spec.finger;
        let sp = crate::linkage::sp_fk(&f.sp, f.sp.rest_angle + translation, Some(&prev))?;
        let k = f.distal_joint_rest + (sp.output_d - self.rest.output_d);
        let reach = spec.proximal_len();
        let x_q = spec.palm_joint_x();
        let s = (k.x - x_q) / reach;
        if !(s.abs() < 1.0) {
            return Err(LinkageError::ParallelogramFlip.into());
        }
        let a = s.asin();
        let q = Vec2::new(x_q, k.y + reach * a.cos());
        let dpm = DpmSpec {
            base: Pose2::new(q, 0.0),
            ..f.dpm.clone()
        };
        let locked = dpm_fingertip(&dpm, [a, a])?.orientation();
        let heading = Vec2::new(psi.sin(), -psi.cos());
        let split = k + heading * (f.distal_len - f.tip_len);
        let tip = k + heading * f.distal_len;
        let mut segments = [(q, k), (k, split), (split, tip)];
        let mut fingertip = Pose2::new(tip, locked + psi);
        if id == FingerId::Right {
            for (a, b) in segments.iter_mut() {
                *a = a.mirror_x();
                *b = b.mirror_x();
            }
            fingertip = Pose2::new(tip.mirror_x(), -(locked + psi));
        }
        Ok(FingerState {
            cam: 0.0,
            psi,
            translation,
            fingertip,
            segments,
            translation_arrested: false,
            arrested: false,
            engaged_at: None,
            first_contact_drive: None,
            sp,
        })
    }
}
