//! Forward kinematics of the straight-line finger linkages.
//!
//! * [`peaucellier`]: the classical eight-bar inversor, solved by circle
//!   intersection and reflection.
//! * [`sp`]: the five-component Semi-Peaucellier variant, solved
//!   numerically with continuation.
//! * [`dpm`]: two parallelograms in series that keep the fingertip's
//!   orientation fixed.
//!
//! [`Trace`] collects sweep samples; [`straightness`] fits a line through
//! one node's path.

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::geom2d::{fit_line, GeomError, LineFit, Pose2, Vec2};

pub mod dpm;
pub mod peaucellier;
pub mod sp;

pub use dpm::{dpm_fingertip, dpm_joints, DpmSpec, ParallelogramLoop};
pub use peaucellier::{
    inversor_invariant, peaucellier_fk, peaucellier_sweep, Branch, InversorCheck,
    PeaucellierConfig, PeaucellierSpec,
};
pub use sp::{sp_fk, sp_sweep, SpConfig, SpLinkageSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinkageError {
    #[error("invalid linkage spec: {0}")]
    InvalidSpec(&'static str),
    #[error("inversor singularity: crank tip coincides with the fixed pivot")]
    InversorSingularity,
    #[error("assembly failure at φ = {phi} rad")]
    AssemblyFailure { phi: f64 },
    #[error("near-singular configuration at φ = {phi} rad (condition number {cond:e})")]
    NearSingular { phi: f64, cond: f64 },
    #[error("parallelogram flip singularity")]
    ParallelogramFlip,
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("trace needs at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("drive input must increase strictly along a trace")]
    NonMonotonicDrive,
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// One sample of a kinematic sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSample {
    pub drive: f64,
    pub nodes: Vec<(&'static str, Vec2)>,
    pub fingertip: Pose2,
    /// Largest constraint violation of the solve that produced the sample.
    pub residual: f64,
}

impl TraceSample {
    pub fn node(&self, name: &str) -> Option<Vec2> {
        self.nodes.iter().find(|(n, _)| *n == name).map(|&(_, p)| p)
    }
}

/// Ordered sweep samples with strictly increasing drive input.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    samples: Vec<TraceSample>,
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, sample: TraceSample) -> Result<(), LinkageError> {
        if let Some(last) = self.samples.last() {
            if !(sample.drive > last.drive) {
                return Err(LinkageError::NonMonotonicDrive);
            }
        }
        self.samples.push(sample);
        Ok(())
    }

    pub fn samples(&self) -> &[TraceSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Positions of `node` across the trace.
    pub fn node_path(&self, node: &str) -> Result<Vec<Vec2>, LinkageError> {
        self.samples
            .iter()
            .map(|s| {
                s.node(node)
                    .ok_or_else(|| LinkageError::UnknownNode(node.into()))
            })
            .collect()
    }
}

/// Minimum number of samples accepted by [`straightness`].
pub const MIN_STRAIGHTNESS_SAMPLES: usize = 10;

/// Total-least-squares line through the path of `node`.
pub fn straightness(trace: &Trace, node: &str) -> Result<LineFit, LinkageError> {
    let path = trace.node_path(node)?;
    if path.len() < MIN_STRAIGHTNESS_SAMPLES {
        return Err(LinkageError::TooFewSamples {
            needed: MIN_STRAIGHTNESS_SAMPLES,
            got: path.len(),
        });
    }
    Ok(fit_line(&path)?)
}

/// `n` evenly spaced values over `[start, end]` (inclusive).
pub fn linspace(start: f64, end: f64, n: usize) -> impl Iterator<Item = f64> + Clone {
    let step = if n > 1 {
        (end - start) / (n - 1) as f64
    } else {
        0.0
    };
    (0..n).map(move |i| {
        if i + 1 == n && n > 1 {
            end
        } else {
            start + step * i as f64
        }
    })
}
