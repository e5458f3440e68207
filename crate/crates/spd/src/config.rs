//! JSON run configuration.
//!
//! Every section is optional and every field has a default, so `{}` is a
//! valid document. Unknown keys are rejected. Angles are radians unless
//! `run.angle_unit` is `"deg"` (or `--deg` is passed), in which case every
//! angle-valued field present in the document is read as degrees. A
//! resolved config always stores radians.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use spd_core::error_model::{
    ErrorParams, HysteresisParams, ParamDist, ParamDistributions, SENSITIVITY_THETA,
};
use spd_core::grasp_sim::{FingerSpec, GraspScenario, GripperSpec, ObjectProfile};
use spd_core::linkage::peaucellier::{Branch, PeaucellierSpec};
use spd_core::linkage::{DpmSpec, ParallelogramLoop, SpLinkageSpec};
use spd_core::{Pose2, Vec2};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {}: {source}", path.display())]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Malformed(String),
    #[error("config error at `{path}`: {reason}")]
    Schema { path: String, reason: String },
}

impl ConfigError {
    fn at(path: &str, reason: impl ToString) -> Self {
        ConfigError::Schema {
            path: path.into(),
            reason: reason.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Trajectory,
    ErrorSweep,
    MonteCarlo,
    Sensitivity,
    Grasp,
    Decompose,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Trajectory => "trajectory",
            Command::ErrorSweep => "error-sweep",
            Command::MonteCarlo => "monte-carlo",
            Command::Sensitivity => "sensitivity",
            Command::Grasp => "grasp",
            Command::Decompose => "decompose",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleUnit {
    #[default]
    Rad,
    Deg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    #[default]
    Peaucellier,
    Sp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchName {
    #[default]
    Upper,
    Lower,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub peaucellier: PeaucellierSection,
    pub sp_linkage: SpSection,
    pub gripper: GripperSection,
    pub error_params: ErrorParamsSection,
    pub distributions: DistributionsSection,
    pub run: RunSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseSection {
    pub position: [f64; 2],
    pub orientation: f64,
}

impl From<Pose2> for PoseSection {
    fn from(p: Pose2) -> Self {
        Self {
            position: [p.position.x, p.position.y],
            orientation: p.orientation(),
        }
    }
}

impl PoseSection {
    fn pose(&self) -> Pose2 {
        Pose2::new(v2(self.position), self.orientation)
    }
}

fn v2(a: [f64; 2]) -> Vec2 {
    Vec2::new(a[0], a[1])
}

fn arr(v: Vec2) -> [f64; 2] {
    [v.x, v.y]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PeaucellierSection {
    pub fixed_pivot: [f64; 2],
    pub crank_pivot: [f64; 2],
    pub crank_len: f64,
    pub long_len: f64,
    pub short_len: f64,
    pub branch: BranchName,
    /// Crank angle range swept by `trajectory`.
    pub sweep: [f64; 2],
}

impl Default for PeaucellierSection {
    fn default() -> Self {
        let s = PeaucellierSpec::default();
        let lim = 140f64.to_radians();
        Self {
            fixed_pivot: arr(s.fixed_pivot()),
            crank_pivot: arr(s.crank_pivot()),
            crank_len: s.crank_len(),
            long_len: s.long_len(),
            short_len: s.short_len(),
            branch: BranchName::Upper,
            sweep: [-lim, lim],
        }
    }
}

impl PeaucellierSection {
    pub fn spec(&self) -> Result<PeaucellierSpec, ConfigError> {
        PeaucellierSpec::new(
            v2(self.fixed_pivot),
            v2(self.crank_pivot),
            self.crank_len,
            self.long_len,
            self.short_len,
        )
        .map_err(|e| ConfigError::at("peaucellier", e))
    }

    pub fn branch(&self) -> Branch {
        match self.branch {
            BranchName::Upper => Branch::Upper,
            BranchName::Lower => Branch::Lower,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpSection {
    pub base: PoseSection,
    pub crank_pivot: [f64; 2],
    pub drive_radius: f64,
    pub link_l2_len: f64,
    pub link_l3_len: f64,
    pub slider_origin: [f64; 2],
    pub slider_axis: [f64; 2],
    pub d_be: f64,
    pub d_bd: f64,
    pub rest_angle: f64,
    pub drive_range: [f64; 2],
    pub spring_rest: f64,
    pub spring_stiffness: f64,
}

impl Default for SpSection {
    fn default() -> Self {
        let s = SpLinkageSpec::default();
        Self {
            base: s.base.into(),
            crank_pivot: arr(s.crank_pivot),
            drive_radius: s.drive_radius,
            link_l2_len: s.link_l2_len,
            link_l3_len: s.link_l3_len,
            slider_origin: arr(s.slider_origin),
            slider_axis: arr(s.slider_axis),
            d_be: s.d_be,
            d_bd: s.d_bd,
            rest_angle: s.rest_angle,
            drive_range: [s.drive_range.0, s.drive_range.1],
            spring_rest: s.spring_rest,
            spring_stiffness: s.spring_stiffness,
        }
    }
}

impl SpSection {
    pub fn spec(&self) -> SpLinkageSpec {
        SpLinkageSpec {
            base: self.base.pose(),
            crank_pivot: v2(self.crank_pivot),
            drive_radius: self.drive_radius,
            link_l2_len: self.link_l2_len,
            link_l3_len: self.link_l3_len,
            slider_origin: v2(self.slider_origin),
            slider_axis: v2(self.slider_axis),
            d_be: self.d_be,
            d_bd: self.d_bd,
            rest_angle: self.rest_angle,
            drive_range: (self.drive_range[0], self.drive_range[1]),
            spring_rest: self.spring_rest,
            spring_stiffness: self.spring_stiffness,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopSection {
    pub long_side: f64,
    pub short_side: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum ObjectSection {
    Circle { center: [f64; 2], radius: f64 },
    Polygon { vertices: Vec<[f64; 2]> },
}

impl ObjectSection {
    pub fn profile(&self) -> ObjectProfile {
        match self {
            ObjectSection::Circle { center, radius } => ObjectProfile::Circle {
                center: v2(*center),
                radius: *radius,
            },
            ObjectSection::Polygon { vertices } => ObjectProfile::Polygon {
                vertices: vertices.iter().map(|v| v2(*v)).collect(),
            },
        }
    }
}

/// Small circle held by the fingertips in the parallel phase.
pub fn small_circle() -> ObjectSection {
    ObjectSection::Circle {
        center: [0.0, -92.0],
        radius: 10.0,
    }
}

/// Large circle that needs the adaptive phase.
pub fn large_circle() -> ObjectSection {
    ObjectSection::Circle {
        center: [0.0, -40.0],
        radius: 35.0,
    }
}

fn default_object() -> Option<ObjectSection> {
    Some(small_circle())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GripperSection {
    pub palm_width: f64,
    /// Base pose of the finger SP linkage; the rest of its geometry comes
    /// from `sp_linkage`.
    pub sp_base: PoseSection,
    pub dpm_loops: [LoopSection; 2],
    pub distal_len: f64,
    pub tip_len: f64,
    pub distal_joint_rest: [f64; 2],
    pub idle_stroke: f64,
    pub gear_ratio: f64,
    pub max_drive: f64,
    pub pad: f64,
    /// `null` for an empty scene.
    #[serde(default = "default_object")]
    pub object: Option<ObjectSection>,
    pub initial_opening: Option<f64>,
}

impl Default for GripperSection {
    fn default() -> Self {
        let g = GripperSpec::default();
        let l = |p: ParallelogramLoop| LoopSection {
            long_side: p.long_side,
            short_side: p.short_side,
        };
        Self {
            palm_width: g.palm_width,
            sp_base: g.finger.sp.base.into(),
            dpm_loops: [l(g.finger.dpm.loops[0]), l(g.finger.dpm.loops[1])],
            distal_len: g.finger.distal_len,
            tip_len: g.finger.tip_len,
            distal_joint_rest: arr(g.finger.distal_joint_rest),
            idle_stroke: g.idle_stroke,
            gear_ratio: g.gear_ratio,
            max_drive: g.max_drive,
            pad: g.pad,
            object: default_object(),
            initial_opening: None,
        }
    }
}

impl GripperSection {
    pub fn spec(&self, sp: &SpSection) -> GripperSpec {
        let l = |s: LoopSection| ParallelogramLoop {
            long_side: s.long_side,
            short_side: s.short_side,
        };
        GripperSpec {
            palm_width: self.palm_width,
            finger: FingerSpec {
                sp: SpLinkageSpec {
                    base: self.sp_base.pose(),
                    ..sp.spec()
                },
                dpm: DpmSpec {
                    loops: [l(self.dpm_loops[0]), l(self.dpm_loops[1])],
                    ..DpmSpec::default()
                },
                distal_len: self.distal_len,
                tip_len: self.tip_len,
                distal_joint_rest: v2(self.distal_joint_rest),
            },
            idle_stroke: self.idle_stroke,
            gear_ratio: self.gear_ratio,
            max_drive: self.max_drive,
            pad: self.pad,
            independent_drive: false,
        }
    }

    pub fn scenario(&self) -> GraspScenario {
        GraspScenario {
            object: self.object.as_ref().map(ObjectSection::profile),
            initial_opening: self.initial_opening,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HysteresisSection {
    pub normal_force: f64,
    pub velocity: f64,
    pub k_s: f64,
}

impl Default for HysteresisSection {
    fn default() -> Self {
        let h = HysteresisParams::default();
        Self {
            normal_force: h.normal_force,
            velocity: h.velocity,
            k_s: h.k_s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ErrorParamsSection {
    pub link_len: f64,
    pub delta_l: f64,
    pub clearance: f64,
    pub mu: f64,
    pub noise_amp: f64,
    pub hysteresis: HysteresisSection,
}

impl Default for ErrorParamsSection {
    fn default() -> Self {
        let p = ErrorParams::default();
        Self {
            link_len: p.link_len,
            delta_l: p.delta_l,
            clearance: p.clearance,
            mu: p.mu,
            noise_amp: p.noise_amp,
            hysteresis: HysteresisSection::default(),
        }
    }
}

impl ErrorParamsSection {
    pub fn params(&self, seed: u64) -> ErrorParams {
        ErrorParams {
            link_len: self.link_len,
            delta_l: self.delta_l,
            clearance: self.clearance,
            mu: self.mu,
            noise_amp: self.noise_amp,
            seed,
        }
    }

    pub fn hysteresis(&self) -> HysteresisParams {
        let h = self.hysteresis;
        HysteresisParams {
            mu: self.mu,
            normal_force: h.normal_force,
            velocity: h.velocity,
            k_s: h.k_s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistSection {
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

/// Missing entries, or missing halves of an entry, take the bench defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistributionsSection {
    pub delta_l: DistSection,
    pub c: DistSection,
    pub mu: DistSection,
}

impl DistributionsSection {
    fn resolve(&mut self) {
        let d = ParamDistributions::default();
        for (s, def) in [
            (&mut self.delta_l, d.delta_l),
            (&mut self.c, d.clearance),
            (&mut self.mu, d.mu),
        ] {
            s.mean.get_or_insert(def.mean);
            s.std.get_or_insert(def.std);
        }
    }

    pub fn dists(&self) -> ParamDistributions {
        let d = ParamDistributions::default();
        let pick = |s: DistSection, def: ParamDist| ParamDist {
            mean: s.mean.unwrap_or(def.mean),
            std: s.std.unwrap_or(def.std),
        };
        ParamDistributions {
            delta_l: pick(self.delta_l, d.delta_l),
            clearance: pick(self.c, d.clearance),
            mu: pick(self.mu, d.mu),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub command: Option<Command>,
    pub seed: u64,
    pub angle_unit: AngleUnit,
    pub out_dir: String,
    pub svg: bool,
    /// Mechanism traced by `trajectory`.
    pub mechanism: Mechanism,
    /// Grid intervals; the per-command default applies when absent.
    pub steps: Option<usize>,
    pub samples: usize,
    pub theta_max: f64,
    pub sensitivity_theta: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            command: None,
            seed: 0,
            angle_unit: AngleUnit::Rad,
            out_dir: "out".into(),
            svg: false,
            mechanism: Mechanism::Peaucellier,
            steps: None,
            samples: 1000,
            theta_max: 12f64.to_radians(),
            sensitivity_theta: SENSITIVITY_THETA,
        }
    }
}

/// JSON pointers of every angle-valued field.
const ANGLE_FIELDS: &[&str] = &[
    "/peaucellier/sweep/0",
    "/peaucellier/sweep/1",
    "/sp_linkage/base/orientation",
    "/sp_linkage/rest_angle",
    "/sp_linkage/drive_range/0",
    "/sp_linkage/drive_range/1",
    "/gripper/sp_base/orientation",
    "/gripper/idle_stroke",
    "/gripper/max_drive",
    "/run/theta_max",
    "/run/sensitivity_theta",
];

/// Command-line overrides, in the input angle unit.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub command: Option<Command>,
    pub out_dir: Option<String>,
    pub seed: Option<u64>,
    pub svg: bool,
    pub deg: bool,
    pub steps: Option<usize>,
    pub samples: Option<usize>,
    pub theta_max: Option<f64>,
}

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<Config, ConfigError> {
    let bytes = std::fs::read(path).map_err(|source| ConfigError::Read {
        path: path.into(),
        source,
    })?;
    parse_config(&bytes, overrides)
}

pub fn parse_config(bytes: &[u8], overrides: &Overrides) -> Result<Config, ConfigError> {
    let mut doc: Value =
        serde_json::from_slice(bytes).map_err(|e| ConfigError::Malformed(e.to_string()))?;
    if !doc.is_object() {
        return Err(ConfigError::Malformed("top level must be an object".into()));
    }
    let deg =
        overrides.deg || doc.pointer("/run/angle_unit").and_then(Value::as_str) == Some("deg");
    if deg {
        for p in ANGLE_FIELDS {
            if let Some(v) = doc.pointer_mut(p) {
                if let Some(x) = v.as_f64() {
                    *v = Value::from(x.to_radians());
                }
            }
        }
    }
    let mut cfg: Config =
        serde_path_to_error::deserialize(doc).map_err(|e| ConfigError::Schema {
            path: e.path().to_string(),
            reason: e.inner().to_string(),
        })?;
    cfg.run.angle_unit = AngleUnit::Rad;
    cfg.distributions.resolve();
    let o = overrides;
    if o.command.is_some() {
        cfg.run.command = o.command;
    }
    if let Some(d) = &o.out_dir {
        cfg.run.out_dir = d.clone();
    }
    if let Some(s) = o.seed {
        cfg.run.seed = s;
    }
    cfg.run.svg |= o.svg;
    if o.steps.is_some() {
        cfg.run.steps = o.steps;
    }
    if let Some(n) = o.samples {
        cfg.run.samples = n;
    }
    if let Some(t) = o.theta_max {
        cfg.run.theta_max = if deg { t.to_radians() } else { t };
    }
    cfg.validate()?;
    Ok(cfg)
}

impl Config {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, s) in [
            ("delta_l", self.distributions.delta_l),
            ("c", self.distributions.c),
            ("mu", self.distributions.mu),
        ] {
            if let Some(m) = s.mean {
                if !m.is_finite() {
                    return Err(ConfigError::at(
                        &format!("distributions.{name}.mean"),
                        "must be finite",
                    ));
                }
            }
            if let Some(sd) = s.std {
                if !(sd.is_finite() && sd >= 0.0) {
                    return Err(ConfigError::at(
                        &format!("distributions.{name}.std"),
                        "must be finite and non-negative",
                    ));
                }
            }
        }
        self.error_params
            .params(0)
            .validate()
            .map_err(|e| ConfigError::at("error_params", e))?;
        spd_core::error_model::hysteresis_width(&self.error_params.hysteresis())
            .map_err(|e| ConfigError::at("error_params.hysteresis", e))?;
        self.peaucellier.spec()?;
        let [a, b] = self.peaucellier.sweep;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(ConfigError::at("peaucellier.sweep", "need start < end"));
        }
        let sp = self.sp_linkage.spec();
        sp.validate()
            .map_err(|e| ConfigError::at("sp_linkage", e))?;
        self.gripper
            .spec(&self.sp_linkage)
            .validate()
            .map_err(|e| ConfigError::at("gripper", e))?;
        if let Some(obj) = &self.gripper.object {
            obj.profile()
                .validate()
                .map_err(|e| ConfigError::at("gripper.object", e))?;
        }
        let r = &self.run;
        if r.steps == Some(0) {
            return Err(ConfigError::at("run.steps", "must be at least 1"));
        }
        if r.samples < spd_core::error_model::MIN_SAMPLES {
            return Err(ConfigError::at(
                "run.samples",
                format!("must be at least {}", spd_core::error_model::MIN_SAMPLES),
            ));
        }
        if !(r.theta_max.is_finite() && r.theta_max > 0.0 && r.theta_max <= PI) {
            return Err(ConfigError::at("run.theta_max", "must be in (0, pi]"));
        }
        if !(r.sensitivity_theta.is_finite() && r.sensitivity_theta.abs() <= FRAC_PI_2) {
            return Err(ConfigError::at(
                "run.sensitivity_theta",
                "must be in [-pi/2, pi/2]",
            ));
        }
        Ok(())
    }

    /// Canonical JSON form: every field present, angles in radians.
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}
