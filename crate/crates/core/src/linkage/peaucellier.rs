//! Classical Peaucellier inversor.
//!
//! Nodes: fixed pivot `E`, crank pivot `A`, crank tip `B`, rhombus
//! vertices `C1`/`C2`, output `D` and `F`, the midpoint of `C1C2`. `EC1 =
//! EC2 = long_len`; `BC1 = BC2 = DC1 = DC2 = short_len`; `|EA| = |AB| =
//! crank_len`. `|EB|·|ED| = long_len² − short_len²` for every pose, so `D`
//! runs on the line perpendicular to `EA` at distance `k²/(2·crank_len)`
//! from `E`.

use alloc::vec;

use super::{LinkageError, Trace, TraceSample};
use crate::geom2d::{circle_intersect, GeomError, Pose2, Vec2, GEOM_TOL};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeaucellierSpec {
    fixed_pivot: Vec2,
    crank_pivot: Vec2,
    crank_len: f64,
    long_len: f64,
    short_len: f64,
}

impl Default for PeaucellierSpec {
    /// 20 mm crank, 35/25 mm cell; the output line sits 15 mm from `E`.
    fn default() -> Self {
        Self {
            fixed_pivot: Vec2::ZERO,
            crank_pivot: Vec2::new(20.0, 0.0),
            crank_len: 20.0,
            long_len: 35.0,
            short_len: 25.0,
        }
    }
}

impl PeaucellierSpec {
    pub fn new(
        fixed_pivot: Vec2,
        crank_pivot: Vec2,
        crank_len: f64,
        long_len: f64,
        short_len: f64,
    ) -> Result<Self, LinkageError> {
        let all = [crank_len, long_len, short_len];
        if !fixed_pivot.is_finite()
            || !crank_pivot.is_finite()
            || all.iter().any(|v| !v.is_finite())
        {
            return Err(LinkageError::InvalidSpec("non-finite value"));
        }
        if crank_len <= 0.0 || short_len <= 0.0 {
            return Err(LinkageError::InvalidSpec("lengths must be positive"));
        }
        if long_len <= short_len {
            return Err(LinkageError::InvalidSpec("long_len must exceed short_len"));
        }
        if ((crank_pivot - fixed_pivot).norm() - crank_len).abs() > GEOM_TOL {
            return Err(LinkageError::InvalidSpec(
                "crank pivot must sit crank_len from the fixed pivot",
            ));
        }
        Ok(Self {
            fixed_pivot,
            crank_pivot,
            crank_len,
            long_len,
            short_len,
        })
    }

    pub fn fixed_pivot(&self) -> Vec2 {
        self.fixed_pivot
    }
    pub fn crank_pivot(&self) -> Vec2 {
        self.crank_pivot
    }
    pub fn crank_len(&self) -> f64 {
        self.crank_len
    }
    pub fn long_len(&self) -> f64 {
        self.long_len
    }
    pub fn short_len(&self) -> f64 {
        self.short_len
    }

    /// `k² = long_len² − short_len²`.
    pub fn inversor_constant(&self) -> f64 {
        self.long_len * self.long_len - self.short_len * self.short_len
    }

    /// Unit vector along the ray `E → A`.
    pub fn axis(&self) -> Vec2 {
        (self.crank_pivot - self.fixed_pivot) * (1.0 / self.crank_len)
    }

    /// Signed distance of the output line from `E` along [`axis`](Self::axis).
    pub fn line_offset(&self) -> f64 {
        self.inversor_constant() / (2.0 * self.crank_len)
    }
}

/// Which rhombus vertex gets the `C1` label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Branch {
    /// `C1` lies to the left of `E → B`.
    #[default]
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeaucellierConfig {
    pub crank_angle: f64,
    pub b: Vec2,
    pub c1: Vec2,
    pub c2: Vec2,
    pub d: Vec2,
    pub f: Vec2,
    pub branch: Branch,
}

impl PeaucellierConfig {
    pub fn nodes(&self, spec: &PeaucellierSpec) -> alloc::vec::Vec<(&'static str, Vec2)> {
        vec![
            ("A", spec.crank_pivot),
            ("B", self.b),
            ("C1", self.c1),
            ("C2", self.c2),
            ("D", self.d),
            ("E", spec.fixed_pivot),
            ("F", self.f),
        ]
    }
}

/// Places every node for crank angle `alpha` (measured from +x at `A`).
pub fn peaucellier_fk(
    spec: &PeaucellierSpec,
    alpha: f64,
    branch: Branch,
) -> Result<PeaucellierConfig, LinkageError> {
    let e = spec.fixed_pivot;
    let b = spec.crank_pivot + Vec2::from_angle(alpha) * spec.crank_len;
    let eb = b - e;
    let eb_len = eb.norm();
    if eb_len < GEOM_TOL {
        return Err(LinkageError::InversorSingularity);
    }
    let hit = circle_intersect(e, spec.long_len, b, spec.short_len).map_err(|err| match err {
        GeomError::Degenerate => LinkageError::InversorSingularity,
        _ => LinkageError::AssemblyFailure { phi: alpha },
    })?;
    let (c1, c2) = match branch {
        Branch::Upper => (hit.first(), hit.second()),
        Branch::Lower => (hit.second(), hit.first()),
    };
    let f = (c1 + c2) * 0.5;
    // reflect B across C1C2; the kite axis EB is that line's normal
    let n = eb * (1.0 / eb_len);
    let d = b + n * (2.0 * (f - b).dot(n));
    Ok(PeaucellierConfig {
        crank_angle: alpha,
        b,
        c1,
        c2,
        d,
        f,
        branch,
    })
}

/// Both sides of `EC1² − DC1² = DE·BE`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversorCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

pub fn inversor_invariant(config: &PeaucellierConfig, spec: &PeaucellierSpec) -> InversorCheck {
    let lhs = spec.inversor_constant();
    let e = spec.fixed_pivot;
    let rhs = config.d.dist(e) * config.b.dist(e);
    InversorCheck {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
    }
}

/// Sweeps the crank over `alphas`; every angle must assemble.
pub fn peaucellier_sweep(
    spec: &PeaucellierSpec,
    branch: Branch,
    alphas: impl IntoIterator<Item = f64>,
) -> Result<Trace, LinkageError> {
    let k2 = spec.inversor_constant();
    let mut trace = Trace::new();
    for alpha in alphas {
        let cfg = peaucellier_fk(spec, alpha, branch)?;
        let residual = inversor_invariant(&cfg, spec).residual / k2;
        let heading = (cfg.d - spec.fixed_pivot).angle();
        trace.push(TraceSample {
            drive: alpha,
            nodes: cfg.nodes(spec),
            fingertip: Pose2::new(cfg.d, heading),
            residual,
        })?;
    }
    Ok(trace)
}
