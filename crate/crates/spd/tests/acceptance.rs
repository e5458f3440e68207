//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on
//! any failure. Oracles here are coded independently of `spd-core`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command as Process;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spd_core::error_model::{
    clearance_error, friction_error, geo_error, hysteresis_width, ideal_y_profile, random_error,
    regime_analysis, sensitivity, tags, total_y_error, x_real, ErrorParams, HysteresisParams,
    NoiseKey, Param, ParamDistributions, REGIME_BOUNDARY, SENSITIVITY_THETA,
};
use spd_core::geom2d::normalize_angle;
use spd_core::grasp_sim::{
    run_grasp, Classification, FingerId, GraspMode, GraspResult, GraspScenario, GripperSpec,
    ObjectProfile, Phalange,
};
use spd_core::linkage::peaucellier::{peaucellier_fk, Branch, PeaucellierSpec};
use spd_core::linkage::{dpm_fingertip, linspace, sp_sweep, straightness, DpmSpec, SpLinkageSpec};
use spd_core::{Pose2, Vec2};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

// ---------------------------------------------------------------- linkages

fn random_peaucellier(rng: &mut ChaCha8Rng) -> PeaucellierSpec {
    let e = Vec2::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0));
    let r = rng.random_range(5.0..40.0);
    let short = rng.random_range(5.0..40.0);
    let long = short + rng.random_range(1.0..40.0);
    let dir = rng.random_range(-PI..PI);
    let a = Vec2::new(e.x + r * dir.cos(), e.y + r * dir.sin());
    PeaucellierSpec::new(e, a, r, long, short).expect("valid by construction")
}

fn peaucellier_specs() -> Vec<PeaucellierSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut specs = vec![PeaucellierSpec::default()];
    specs.extend((0..100).map(|_| random_peaucellier(&mut rng)));
    specs
}

/// Poses at every whole degree that assembles.
fn degree_poses(spec: &PeaucellierSpec) -> Vec<spd_core::linkage::peaucellier::PeaucellierConfig> {
    (0..360)
        .filter_map(|d| peaucellier_fk(spec, (d as f64).to_radians(), Branch::Upper).ok())
        .collect()
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut poses = 0;
    for spec in peaucellier_specs() {
        let e = spec.fixed_pivot();
        let k2 = spec.long_len().powi(2) - spec.short_len().powi(2);
        for cfg in degree_poses(&spec) {
            let ec1 = (cfg.c1.x - e.x).powi(2) + (cfg.c1.y - e.y).powi(2);
            let dc1 = (cfg.c1.x - cfg.d.x).powi(2) + (cfg.c1.y - cfg.d.y).powi(2);
            let de = ((cfg.d.x - e.x).powi(2) + (cfg.d.y - e.y).powi(2)).sqrt();
            let be = ((cfg.b.x - e.x).powi(2) + (cfg.b.y - e.y).powi(2)).sqrt();
            worst = worst.max((ec1 - dc1 - de * be).abs() / k2);
            poses += 1;
        }
    }
    let el = t.elapsed();
    outcome(
        worst < 1e-9 && poses > 0 && within(el, 1.0),
        format!("max |EC1²−DC1²−DE·BE|/k² = {worst:.2e} over {poses} poses of 101 specs, {el:.2?} < 1 s"),
    )
}

fn criterion_2() -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for spec in peaucellier_specs() {
        let e = spec.fixed_pivot();
        let a = spec.crank_pivot();
        let u = Vec2::new(
            (a.x - e.x) / spec.crank_len(),
            (a.y - e.y) / spec.crank_len(),
        );
        let offset =
            (spec.long_len().powi(2) - spec.short_len().powi(2)) / (2.0 * spec.crank_len());
        for cfg in degree_poses(&spec) {
            let along = (cfg.d.x - e.x) * u.x + (cfg.d.y - e.y) * u.y;
            worst = worst.max((along - offset).abs());
        }
    }
    let sp = SpLinkageSpec::default();
    let (lo, hi) = sp.drive_range;
    let sp_dev = sp_sweep(&sp, linspace(lo, hi, 500))
        .and_then(|trace| straightness(&trace, "D"))
        .map(|fit| fit.max_dev)
        .unwrap_or(f64::INFINITY);
    let el = t.elapsed();
    outcome(
        worst < 1e-9 && sp_dev < 1e-6 && within(el, 2.0),
        format!("inversor line deviation {worst:.2e} mm < 1e-9; SP fingertip max_dev {sp_dev:.2e} mm < 1e-6 (500 samples); {el:.2?} < 2 s"),
    )
}

// ---------------------------------------------------------------- grasping

fn small_circle() -> GraspScenario {
    GraspScenario {
        object: Some(ObjectProfile::Circle {
            center: Vec2::new(0.0, -92.0),
            radius: 10.0,
        }),
        initial_opening: None,
    }
}

fn large_circle() -> GraspScenario {
    GraspScenario {
        object: Some(ObjectProfile::Circle {
            center: Vec2::new(0.0, -40.0),
            radius: 35.0,
        }),
        initial_opening: None,
    }
}

fn pinch_orientation_error(r: &GraspResult) -> f64 {
    r.trajectory
        .iter()
        .filter(|s| s.mode == GraspMode::ParallelPinch)
        .flat_map(|s| {
            s.fingers
                .iter()
                .map(|f| normalize_angle(f.fingertip.orientation()).abs())
        })
        .fold(0.0, f64::max)
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let lim = FRAC_PI_2 - 1e-3;
    for _ in 0..10_000 {
        let base = Pose2::new(
            Vec2::new(
                rng.random_range(-100.0..100.0),
                rng.random_range(-100.0..100.0),
            ),
            rng.random_range(-PI..PI),
        );
        let spec = DpmSpec {
            base,
            ..DpmSpec::default()
        };
        let angles = [rng.random_range(-lim..lim), rng.random_range(-lim..lim)];
        match dpm_fingertip(&spec, angles) {
            Ok(tip) => {
                worst = worst.max(normalize_angle(tip.orientation() - base.orientation()).abs())
            }
            Err(_) => worst = f64::INFINITY,
        }
    }
    let spec = GripperSpec::default();
    let mut rollout_worst: f64 = 0.0;
    for sc in [
        small_circle(),
        large_circle(),
        GraspScenario {
            object: None,
            initial_opening: None,
        },
    ] {
        rollout_worst = match run_grasp(&spec, &sc) {
            Ok(r) => rollout_worst.max(pinch_orientation_error(&r)),
            Err(_) => f64::INFINITY,
        };
    }
    outcome(
        worst <= 1e-12 && rollout_worst <= 1e-12,
        format!("DPM orientation delta {worst:.1e} rad over 10⁴ pairs; rollouts in ParallelPinch {rollout_worst:.1e} rad (≤ 1e-12)"),
    )
}

// ------------------------------------------------------------- error model

fn criterion_4() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let theta = rng.random_range(0.0..(20f64).to_radians());
        let l = rng.random_range(10.0..200.0);
        let dl = rng.random_range(-0.5..0.5);
        let c = rng.random_range(0.0..0.5);
        let ideal_y = rng.random_range(0.0..80.0);
        let l_real = l + dl;
        let x_oracle = l_real * (1.0 - theta.cos());
        let geo_oracle = 0.3 * (2.0 * theta).sin() + (l_real - l) / l * ideal_y;
        let fr_oracle = 0.1 * theta;
        let cl_oracle = 0.05 * c * theta * theta;
        let params = ErrorParams {
            link_len: l,
            delta_l: dl,
            clearance: c,
            mu: 0.2,
            noise_amp: 0.0,
            seed: 0,
        };
        let total = total_y_error(&params, theta, ideal_y, 0, tags::NOISE)
            .map(|b| b.total)
            .unwrap_or(f64::NAN);
        let diffs = [
            x_real(l, dl, theta).unwrap_or(f64::NAN) - x_oracle,
            geo_error(theta, l, dl, ideal_y).unwrap_or(f64::NAN) - geo_oracle,
            friction_error(theta) - fr_oracle,
            clearance_error(c, theta) - cl_oracle,
            total - (geo_oracle + fr_oracle + cl_oracle),
        ];
        for d in diffs {
            worst = worst.max(if d.is_nan() { f64::INFINITY } else { d.abs() });
        }
    }
    let n = 1_000_000u64;
    let draws: Vec<f64> = (0..n)
        .map(|i| random_error(0.2, NoiseKey::new(8, i, tags::NOISE)))
        .collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let std = (draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let el = t.elapsed();
    outcome(
        worst <= 1e-12 && (0.199..=0.201).contains(&std) && mean.abs() <= 0.0008 && within(el, 5.0),
        format!("component oracle max diff {worst:.1e} mm; 10⁶ draws std {std:.5} mean {mean:+.5} mm; {el:.2?} < 5 s"),
    )
}

fn criterion_5() -> Outcome {
    let sp = SpLinkageSpec::default();
    let res = ideal_y_profile(&sp, &[SENSITIVITY_THETA]).and_then(|y| {
        sensitivity(
            &ErrorParams::default(),
            &ParamDistributions::default(),
            SENSITIVITY_THETA,
            y[0],
        )
    });
    match res {
        Ok(r) => {
            let expect = [Param::DeltaL, Param::Clearance, Param::Mu];
            let strict = r.coefficient(Param::DeltaL) > r.coefficient(Param::Clearance)
                && r.coefficient(Param::Clearance) > r.coefficient(Param::Mu);
            outcome(
                r.ranking == expect && strict,
                format!(
                    "at θ = {:.1}°: ΔL {:.3} > c {:.3} > μ {:.3}",
                    SENSITIVITY_THETA.to_degrees(),
                    r.coefficient(Param::DeltaL),
                    r.coefficient(Param::Clearance),
                    r.coefficient(Param::Mu)
                ),
            )
        }
        Err(e) => outcome(false, format!("sensitivity failed: {e}")),
    }
}

fn criterion_6() -> Outcome {
    let thetas: Vec<f64> = linspace(0.0, 12f64.to_radians(), 121).collect();
    let res = ideal_y_profile(&SpLinkageSpec::default(), &thetas).and_then(|y| {
        regime_analysis(
            &ErrorParams::default(),
            &ParamDistributions::default(),
            &thetas,
            &y,
        )
    });
    match res {
        Ok(r) => {
            let table: Vec<String> = r
                .comparison
                .iter()
                .map(|c| {
                    format!(
                        "{}: computed {} / measured {} / theory {}",
                        c.quantity,
                        c.computed.map_or("-".into(), |v| format!("{v:.3}")),
                        c.reference_measured.map_or("-".into(), |v| format!("{v}")),
                        c.reference_theory.map_or("-".into(), |v| format!("{v}"))
                    )
                })
                .collect();
            outcome(
                r.nonlinear_slope > r.linear_slope,
                format!(
                    "slope above {:.0}° = {:.4} mm/rad vs below = {:.4} mm/rad (ratio {:.3}); comparison [{}]",
                    REGIME_BOUNDARY.to_degrees(),
                    r.nonlinear_slope,
                    r.linear_slope,
                    r.growth_ratio,
                    table.join("; ")
                ),
            )
        }
        Err(e) => outcome(false, format!("regime analysis failed: {e}")),
    }
}

fn criterion_7() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut engaged_ok = true;
    for g in [1.0, 1.5] {
        let spec = GripperSpec {
            gear_ratio: g,
            ..GripperSpec::default()
        };
        let r = match run_grasp(
            &spec,
            &GraspScenario {
                object: None,
                initial_opening: None,
            },
        ) {
            Ok(r) => r,
            Err(e) => return outcome(false, format!("rollout failed: {e}")),
        };
        for s in &r.trajectory {
            for f in &s.fingers {
                let expect = if f.cam <= FRAC_PI_2 {
                    0.0
                } else {
                    g * (f.cam - FRAC_PI_2)
                };
                if f.cam <= FRAC_PI_2 && f.psi != 0.0 {
                    worst = f64::INFINITY;
                }
                worst = worst.max((f.psi - expect).abs());
                worst = worst.max((f.cam - s.drive).abs());
            }
        }
        engaged_ok &= r
            .final_state
            .fingers
            .iter()
            .all(|f| f.engaged_at == Some(FRAC_PI_2));
    }
    outcome(
        worst <= 1e-12 && engaged_ok,
        format!("max |ψ − g·max(0, φ_cam − 90°)| = {worst:.1e} rad (g = 1, 1.5); engagement at exactly 90°: {engaged_ok}"),
    )
}

/// Closed-form left finger at SP advance `t` and distal turn `psi`:
/// proximal, distal and fingertip segments.
fn oracle_finger(t: f64, psi: f64) -> [(Vec2, Vec2); 3] {
    let (g, l2, l3, rest) = (Vec2::new(-10.0, 0.0), 40.0, 40.0, -10f64.to_radians());
    let b_y = |phi: f64| {
        let n = Vec2::new(g.x + l3 * phi.cos(), g.y + l3 * phi.sin());
        n.y + (l2 * l2 - n.x * n.x).sqrt()
    };
    let stroke = b_y(rest + t) - b_y(rest);
    let k = Vec2::new(-65.0 + stroke, -60.0);
    let q = Vec2::new(-55.0, k.y + (70f64.powi(2) - (k.x + 55.0).powi(2)).sqrt());
    let v = Vec2::new(psi.sin(), -psi.cos());
    let split = Vec2::new(k.x + 25.0 * v.x, k.y + 25.0 * v.y);
    let tip = Vec2::new(k.x + 40.0 * v.x, k.y + 40.0 * v.y);
    [(q, k), (k, split), (split, tip)]
}

fn circle_gap(center: Vec2, radius: f64, (a, b): (Vec2, Vec2)) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let s = (((center.x - a.x) * dx + (center.y - a.y) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
    ((a.x + s * dx - center.x).powi(2) + (a.y + s * dy - center.y).powi(2)).sqrt() - radius
}

/// Fine-step sweep of the symmetric drive. Returns the first-contact
/// drive and the drive at which a distal or fingertip contact stops the
/// finger.
fn brute_force(center: Vec2, radius: f64) -> (f64, f64) {
    const STEP: f64 = 1e-5;
    let pad = 2.0;
    let touches =
        |segs: &[(Vec2, Vec2)]| segs.iter().any(|&s| circle_gap(center, radius, s) <= pad);
    let mut k = 0u64;
    let mut first = None;
    let mut frozen_t = None;
    loop {
        let phi = k as f64 * STEP;
        if phi > PI {
            return (first.unwrap_or(f64::NAN), f64::NAN);
        }
        let t = frozen_t.unwrap_or(phi.min(FRAC_PI_2));
        let psi = (phi - FRAC_PI_2).max(0.0);
        let segs = oracle_finger(t, psi);
        if frozen_t.is_none() && touches(&segs) {
            first.get_or_insert(phi);
            if !touches(&segs[1..]) {
                frozen_t = Some(t);
            } else {
                return (phi, phi);
            }
        } else if frozen_t.is_some() && touches(&segs[1..]) {
            return (first.unwrap(), phi);
        }
        k += 1;
    }
}

fn criterion_8() -> Outcome {
    let t = Instant::now();
    let spec = GripperSpec::default();
    let (pinch, envelope) = match (
        run_grasp(&spec, &small_circle()),
        run_grasp(&spec, &large_circle()),
    ) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return outcome(false, format!("rollout failed: {e}")),
    };
    let c = &pinch.final_state.contacts;
    let opposing = c.len() == 2
        && c.iter().all(|p| p.phalange == Phalange::Fingertip)
        && c.iter()
            .any(|p| p.finger == FingerId::Left && p.position.x < 0.0)
        && c.iter()
            .any(|p| p.finger == FingerId::Right && p.position.x > 0.0);
    let parallel = pinch
        .trajectory
        .iter()
        .all(|s| s.mode == GraspMode::ParallelPinch && s.fingers.iter().all(|f| f.psi == 0.0));
    let pinch_ok = pinch.classification == Classification::Pinch && opposing && parallel;
    let env_ok = envelope.classification == Classification::Envelope
        && envelope.contact_count >= 3
        && envelope.final_state.fingers.iter().all(|f| f.psi > 0.0);

    let (p_first, _) = brute_force(Vec2::new(0.0, -92.0), 10.0);
    let (e_first, e_stop) = brute_force(Vec2::new(0.0, -40.0), 35.0);
    let first = |r: &GraspResult| {
        r.final_state.fingers[0]
            .first_contact_drive
            .unwrap_or(f64::NAN)
    };
    let dp = (first(&pinch) - p_first).abs();
    let de = (first(&envelope) - e_first).abs();
    let ds = (envelope.final_state.fingers[0].cam - e_stop).abs();
    let el = t.elapsed();
    outcome(
        pinch_ok && env_ok && dp <= 1e-4 && de <= 1e-4 && ds <= 1e-4 && within(el, 10.0),
        format!(
            "small circle {:?} ({} fingertip contacts, parallel {parallel}); large circle {:?} ({} contacts, ψ = {:.3}/{:.3}); first contact vs 1e-5 sweep: |Δ| = {dp:.1e}, {de:.1e} rad, distal arrest {ds:.1e} rad (≤ 1e-4); {el:.2?} < 10 s",
            pinch.classification,
            c.len(),
            envelope.classification,
            envelope.contact_count,
            envelope.final_state.fingers[0].psi,
            envelope.final_state.fingers[1].psi,
        ),
    )
}

fn criterion_9() -> Outcome {
    let h = HysteresisParams {
        mu: 0.21,
        normal_force: 10.0,
        velocity: 0.2,
        k_s: 2.8,
    };
    match hysteresis_width(&h) {
        Ok(w) => outcome(
            (w - 0.15).abs() <= 1e-12,
            format!("hysteresis_width(0.21, 10, 0.2, 2.8) = {w} mm"),
        ),
        Err(e) => outcome(false, format!("{e}")),
    }
}

// --------------------------------------------------------------------- CLI

const COMMANDS: [&str; 6] = [
    "trajectory",
    "error-sweep",
    "monte-carlo",
    "sensitivity",
    "grasp",
    "decompose",
];

fn run_cli(config: &Path, out: &Path, command: &str, threads: &str) -> Result<(), String> {
    let status = Process::new(env!("CARGO_BIN_EXE_spd"))
        .args([command, "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(["--seed", "42", "--svg"])
        .env("SPD_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    if status.status.success() {
        Ok(())
    } else {
        Err(format!(
            "{command} exited with {:?}: {}",
            status.status.code(),
            String::from_utf8_lossy(&status.stderr)
        ))
    }
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .map(|rd| {
            rd.filter_map(Result::ok)
                .map(|e| {
                    (
                        e.file_name().to_string_lossy().into_owned(),
                        std::fs::read(e.path()).unwrap_or_default(),
                    )
                })
                .collect()
        })
        .unwrap_or_default();
    files.sort();
    files
}

fn criterion_10() -> Outcome {
    let tmp = match tempfile::tempdir() {
        Ok(t) => t,
        Err(e) => return outcome(false, format!("tempdir: {e}")),
    };
    let config = tmp.path().join("config.json");
    let doc = r#"{"gripper": {"object": {"shape": "circle", "center": [0, -40], "radius": 35}}, "run": {"samples": 400}}"#;
    if let Err(e) = std::fs::write(&config, doc) {
        return outcome(false, format!("write config: {e}"));
    }
    let runs = [("a", "1"), ("b", "1"), ("c", "4"), ("d", "0")];
    for (dir, threads) in runs {
        for cmd in COMMANDS {
            if let Err(e) = run_cli(&config, &tmp.path().join(dir), cmd, threads) {
                return outcome(false, e);
            }
        }
    }
    let reference = dir_contents(&tmp.path().join("a"));
    let mut mismatched = Vec::new();
    for (dir, threads) in &runs[1..] {
        if dir_contents(&tmp.path().join(dir)) != reference {
            mismatched.push(format!("SPD_THREADS={threads}"));
        }
    }
    let expected = COMMANDS.len() * 3;
    outcome(
        mismatched.is_empty() && reference.len() == expected,
        format!(
            "{} files per run (CSV, JSON, SVG for 6 commands) byte-identical across reruns with SPD_THREADS = 1, 1, 4, 0{}",
            reference.len(),
            if mismatched.is_empty() { String::new() } else { format!("; differing: {}", mismatched.join(", ")) }
        ),
    )
}

fn main() {
    let criteria: [fn() -> Outcome; 10] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
        criterion_10,
    ];
    let mut failed = Vec::new();
    for (i, f) in criteria.iter().enumerate() {
        let n = i + 1;
        let o =
            catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| outcome(false, "panicked".into()));
        println!(
            "criterion {n}: {} ({})",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.pass {
            failed.push(n);
        }
    }
    println!("acceptance: {}/10 passed", 10 - failed.len());
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
