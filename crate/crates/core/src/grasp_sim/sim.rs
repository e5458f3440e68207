//! Stepping, contact arrest and grasp rollouts.

use alloc::vec;
use alloc::vec::Vec;

use super::contact::contacts_unchecked;
use super::{
    Classification, FingerId, FingerState, GraspError, GraspMode, GraspResult, GraspScenario,
    GripperSpec, GripperState, Kinematics, ObjectProfile, Phalange, CONTACT_RESOLUTION, MAX_STEP,
};

/// Sub-steps one finger may take inside a single drive increment: the idle
/// boundary plus one split per contact event.
const MAX_EVENTS_PER_STEP: usize = 8;

/// Advances the shared drive by `dphi`.
pub fn step(
    state: &GripperState,
    spec: &GripperSpec,
    object: Option<&ObjectProfile>,
    dphi: f64,
) -> Result<GripperState, GraspError> {
    if !(dphi > 0.0 && dphi <= MAX_STEP) {
        return Err(GraspError::InvalidStep);
    }
    advance(state, spec, object, [dphi, dphi], dphi)
}

/// Advances each finger's cam separately; needs `spec.independent_drive`.
/// A zero increment holds that finger.
pub fn step_independent(
    state: &GripperState,
    spec: &GripperSpec,
    object: Option<&ObjectProfile>,
    dphi: [f64; 2],
) -> Result<GripperState, GraspError> {
    if !spec.independent_drive {
        return Err(GraspError::InvalidSpec("independent drive is disabled"));
    }
    if dphi.iter().any(|d| !(*d >= 0.0 && *d <= MAX_STEP)) || dphi == [0.0, 0.0] {
        return Err(GraspError::InvalidStep);
    }
    advance(state, spec, object, dphi, dphi[0].max(dphi[1]))
}

fn advance(
    state: &GripperState,
    spec: &GripperSpec,
    object: Option<&ObjectProfile>,
    dphi: [f64; 2],
    drive_step: f64,
) -> Result<GripperState, GraspError> {
    let kin = Kinematics::new(spec)?;
    let mut fingers = state.fingers;
    for (i, id) in [FingerId::Left, FingerId::Right].into_iter().enumerate() {
        fingers[i] = advance_finger(
            &kin,
            spec,
            object,
            &state.fingers[i],
            id,
            dphi[i],
            state.drive,
        )?;
    }
    finish(spec, object, state.drive + drive_step, fingers)
}

fn finish(
    spec: &GripperSpec,
    object: Option<&ObjectProfile>,
    drive: f64,
    fingers: [FingerState; 2],
) -> Result<GripperState, GraspError> {
    let mode = if fingers.iter().all(|f| f.psi == 0.0) {
        GraspMode::ParallelPinch
    } else {
        GraspMode::AdaptiveEnvelope
    };
    let mut next = GripperState {
        drive,
        fingers,
        mode,
        contacts: Vec::new(),
    };
    if let Some(obj) = object {
        for f in &next.fingers {
            for (a, b) in f.segments {
                let (d, _) = obj.segment_distance(a, b);
                if d < -1e-9 {
                    return Err(GraspError::ContactResolution {
                        penetration: spec.pad - d,
                    });
                }
            }
        }
        next.contacts = contacts_unchecked(&next, obj, spec.pad);
    }
    Ok(next)
}

/// Finger pose after the cam turns by `advance` from `cur`. Translation
/// follows the cam up to the idle stroke unless arrested; `ψ` follows the
/// cam past it. `on_idle` pins the cam to the idle stroke exactly.
fn pose_at(
    kin: &Kinematics,
    spec: &GripperSpec,
    cur: &FingerState,
    id: FingerId,
    advance: f64,
    on_idle: bool,
) -> Result<FingerState, GraspError> {
    let cam = if on_idle {
        spec.idle_stroke
    } else {
        cur.cam + advance
    };
    let translation = if cur.translation_arrested {
        cur.translation
    } else {
        cam.min(spec.idle_stroke)
    };
    let psi = spec.gear_ratio * (cam - spec.idle_stroke).max(0.0);
    let mut next = kin.finger(spec, cur.sp, translation, psi, id)?;
    next.cam = cam;
    next.translation_arrested = cur.translation_arrested;
    next.arrested = cur.arrested;
    next.engaged_at = cur.engaged_at;
    next.first_contact_drive = cur.first_contact_drive;
    if next.engaged_at.is_none() && cam >= spec.idle_stroke {
        next.engaged_at = Some(spec.idle_stroke);
    }
    Ok(next)
}

/// Segments of `cand` that moved since `cur` and are within the pad.
fn touches(obj: &ObjectProfile, pad: f64, cur: &FingerState, cand: &FingerState) -> bool {
    let first = if cur.translation_arrested { 1 } else { 0 };
    cand.segments[first..]
        .iter()
        .any(|&(a, b)| obj.segment_distance(a, b).0 <= pad)
}

fn advance_finger(
    kin: &Kinematics,
    spec: &GripperSpec,
    object: Option<&ObjectProfile>,
    finger: &FingerState,
    id: FingerId,
    dphi: f64,
    drive: f64,
) -> Result<FingerState, GraspError> {
    let mut cur = *finger;
    let mut rem = dphi;
    let mut used = 0.0;
    for _ in 0..MAX_EVENTS_PER_STEP {
        if cur.arrested || rem <= 0.0 {
            break;
        }
        let to_idle = spec.idle_stroke - cur.cam;
        let (chunk, on_idle) = if to_idle > 0.0 && to_idle <= rem {
            (to_idle, true)
        } else {
            (rem, false)
        };
        let cand = pose_at(kin, spec, &cur, id, chunk, on_idle)?;
        let obj = match object {
            Some(o) if touches(o, spec.pad, &cur, &cand) => o,
            _ => {
                cur = cand;
                used += chunk;
                rem -= chunk;
                continue;
            }
        };
        // first contact inside (0, chunk]: keep the touching end
        let (mut lo, mut hi, mut hit) = (0.0, chunk, cand);
        while hi - lo > CONTACT_RESOLUTION {
            let mid = 0.5 * (lo + hi);
            let probe = pose_at(kin, spec, &cur, id, mid, false)?;
            if touches(obj, spec.pad, &cur, &probe) {
                hi = mid;
                hit = probe;
            } else {
                lo = mid;
            }
        }
        for (phalange, (a, b)) in Phalange::ALL.into_iter().zip(hit.segments) {
            if obj.segment_distance(a, b).0 <= spec.pad {
                hit.translation_arrested = true;
                if phalange != Phalange::Proximal {
                    hit.arrested = true;
                }
            }
        }
        hit.first_contact_drive.get_or_insert(drive + used + hi);
        cur = hit;
        used += hi;
        rem -= hi;
    }
    Ok(cur)
}

fn classify(state: &GripperState) -> Classification {
    let tip = |id| {
        state
            .contacts
            .iter()
            .any(|c| c.finger == id && c.phalange == Phalange::Fingertip)
    };
    let parallel = state.fingers.iter().all(|f| f.psi == 0.0);
    if parallel && tip(FingerId::Left) && tip(FingerId::Right) {
        Classification::Pinch
    } else if state.contacts.len() >= 3
        && state
            .contacts
            .iter()
            .any(|c| c.phalange != Phalange::Fingertip)
    {
        Classification::Envelope
    } else {
        Classification::Failure
    }
}

fn check_reachable(
    spec: &GripperSpec,
    obj: &ObjectProfile,
    start: &GripperState,
) -> Result<(), GraspError> {
    let (lo, hi) = obj.bounds();
    if hi.y > 0.0 {
        return Err(GraspError::Unreachable("object crosses the palm face"));
    }
    let k = spec.finger.distal_joint_rest;
    if hi.y < k.y - spec.finger.distal_len - spec.pad {
        return Err(GraspError::Unreachable("object lies below the fingertips"));
    }
    if hi.x < k.x - spec.pad || lo.x > -k.x + spec.pad {
        return Err(GraspError::Unreachable("object lies outside the fingers"));
    }
    for f in &start.fingers {
        for (a, b) in f.segments {
            if obj.segment_distance(a, b).0 < 0.0 {
                return Err(GraspError::Unreachable("object overlaps the open fingers"));
            }
        }
    }
    Ok(())
}

/// Closes both fingers in the parallel phase until the fingertip gap is
/// `opening`.
fn preclose(
    spec: &GripperSpec,
    kin: &Kinematics,
    opening: f64,
) -> Result<GripperState, GraspError> {
    let at = |t: f64| -> Result<GripperState, GraspError> {
        let mut fingers = [
            kin.finger(spec, kin.rest, t, 0.0, FingerId::Left)?,
            kin.finger(spec, kin.rest, t, 0.0, FingerId::Right)?,
        ];
        for f in fingers.iter_mut() {
            f.cam = t;
        }
        Ok(GripperState {
            drive: t,
            fingers,
            mode: GraspMode::ParallelPinch,
            contacts: Vec::new(),
        })
    };
    let max = at(0.0)?.fingertip_gap();
    let min = at(spec.idle_stroke)?.fingertip_gap();
    if !(opening >= min && opening <= max) {
        return Err(GraspError::InvalidOpening { opening, min, max });
    }
    let (mut lo, mut hi) = (0.0, spec.idle_stroke);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if at(mid)?.fingertip_gap() > opening {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(lo)
}

/// Steps the shared drive by [`MAX_STEP`] until both fingers are arrested
/// or the drive reaches `spec.max_drive`.
pub fn run_grasp(spec: &GripperSpec, scenario: &GraspScenario) -> Result<GraspResult, GraspError> {
    spec.validate()?;
    let kin = Kinematics::new(spec)?;
    let mut state = match scenario.initial_opening {
        Some(w) => preclose(spec, &kin, w)?,
        None => GripperState::initial(spec)?,
    };
    let object = scenario.object.as_ref();
    if let Some(obj) = object {
        obj.validate()?;
        check_reachable(spec, obj, &state)?;
        state = finish(spec, object, state.drive, state.fingers)?;
    }
    let mut trajectory = vec![state.clone()];
    while !state.fingers.iter().all(|f| f.arrested) && state.drive < spec.max_drive {
        let d = MAX_STEP.min(spec.max_drive - state.drive);
        if d <= 1e-12 {
            break;
        }
        state = step(&state, spec, object, d)?;
        trajectory.push(state.clone());
    }
    Ok(GraspResult {
        mode: state.mode,
        contact_count: state.contacts.len(),
        classification: classify(&state),
        object_displacement: 0.0,
        final_state: state,
        trajectory,
    })
}

/// Height of the left fingertip end over a parallel-phase drive sweep.
pub fn fingertip_height_profile(
    spec: &GripperSpec,
    drives: &[f64],
) -> Result<Vec<f64>, GraspError> {
    spec.validate()?;
    let kin = Kinematics::new(spec)?;
    let mut prev = kin.rest;
    let mut out = Vec::with_capacity(drives.len());
    for &d in drives {
        if !(d >= 0.0) {
            return Err(GraspError::InvalidStep);
        }
        if d > spec.idle_stroke {
            return Err(GraspError::AdaptivePhaseEntered { drive: d });
        }
        let f = kin.finger(spec, prev, d, 0.0, FingerId::Left)?;
        out.push(f.fingertip.position.y);
        prev = f.sp;
    }
    Ok(out)
}
