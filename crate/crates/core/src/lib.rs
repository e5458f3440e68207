//! Planar kinematics and tolerance analysis for a Semi-Peaucellier
//! straight-line finger.
//!
//! The crate is `no_std` (it needs `alloc`) and has no I/O. It contains:
//!
//! * [`geom2d`]: points, poses, circle intersection, total-least-squares
//!   line fits.
//! * [`linkage`]: forward kinematics for the Peaucellier inversor, the
//!   five-component Semi-Peaucellier (SP) mechanism and the double
//!   parallelogram orientation lock.
//! * [`error_model`]: per-angle error components, Monte Carlo tolerance
//!   propagation, sensitivity ranking, regime and spectral decomposition.
//! * [`grasp_sim`]: a quasi-static two-finger gripper with a 90° idle
//!   stroke between the parallel-pinch and adaptive-envelope phases.
//!
//! All lengths are millimetres and all angles are radians.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod error_model;
pub mod geom2d;
pub mod grasp_sim;
mod linalg;
pub mod linkage;

pub use geom2d::{LineFit, Pose2, Vec2};

/// Crate version, echoed into run summaries.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
