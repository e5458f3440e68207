//! Command dispatch. Each command renders its files in memory first and
//! only then writes them, so a failing run leaves no partial output.

use std::path::PathBuf;

use serde_json::{json, Value};
use spd_core::error_model::{
    clearance_error, decompose, error_sweep, ideal_y_profile, regime_analysis, sensitivity,
    ComparisonRow, ErrorModelError, McStats, MonteCarlo,
};
use spd_core::grasp_sim::{run_grasp, GraspResult};
use spd_core::linkage::peaucellier::peaucellier_sweep;
use spd_core::linkage::{linspace, sp_sweep, straightness, Trace};

use crate::config::{Command, Config, Mechanism};
use crate::output::write_atomic;
use crate::svg::{render as render_svg, Disc, Polyline, SvgPlot};
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputFile {
    pub name: String,
    pub bytes: Vec<u8>,
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

/// Worker threads from `SPD_THREADS`; unset, `0` or unparsable means one
/// per available core.
pub fn thread_count() -> usize {
    match std::env::var("SPD_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
    {
        Some(n) if n > 0 => n,
        _ => std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1),
    }
}

/// Renders and writes every output of `command` into `cfg.run.out_dir`.
pub fn run(cfg: &Config, command: Command, threads: usize) -> Result<Vec<PathBuf>, CliError> {
    let files = render(cfg, command, threads)?;
    let dir = PathBuf::from(&cfg.run.out_dir);
    let mut written = Vec::with_capacity(files.len());
    for f in files {
        let path = dir.join(&f.name);
        write_atomic(&path, &f.bytes)?;
        written.push(path);
    }
    Ok(written)
}

/// All output files of `command`, in memory.
pub fn render(cfg: &Config, command: Command, threads: usize) -> Result<Vec<OutputFile>, CliError> {
    let mut cfg = cfg.clone();
    cfg.run.command = Some(command);
    let out = match command {
        Command::Trajectory => trajectory(&cfg)?,
        Command::ErrorSweep => error_sweep_cmd(&cfg)?,
        Command::MonteCarlo => monte_carlo_cmd(&cfg, threads)?,
        Command::Sensitivity => sensitivity_cmd(&cfg)?,
        Command::Grasp => grasp_cmd(&cfg)?,
        Command::Decompose => decompose_cmd(&cfg)?,
    };
    let name = command.name();
    let mut files = vec![OutputFile {
        name: format!("{name}.csv"),
        bytes: out.csv,
    }];
    let mut inputs = cfg.to_json();
    // where the files go must not change their bytes
    if let Some(run) = inputs.get_mut("run").and_then(Value::as_object_mut) {
        run.remove("out_dir");
    }
    let summary = json!({
        "command": name,
        "version": spd_core::VERSION,
        "seed": cfg.run.seed,
        "inputs": inputs,
        "results": out.results,
    });
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    files.push(OutputFile {
        name: format!("{name}_summary.json"),
        bytes: text.into_bytes(),
    });
    if cfg.run.svg {
        let doc = render_svg(&out.plot).map_err(CliError::Plot)?;
        files.push(OutputFile {
            name: format!("{name}.svg"),
            bytes: doc.into_bytes(),
        });
    }
    Ok(files)
}

struct Rendered {
    csv: Vec<u8>,
    results: Value,
    plot: SvgPlot,
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn num(v: f64) -> String {
    v.to_string()
}

fn steps(cfg: &Config, default: usize) -> usize {
    cfg.run.steps.unwrap_or(default)
}

fn theta_grid(cfg: &Config, default_steps: usize) -> Vec<f64> {
    linspace(0.0, cfg.run.theta_max, steps(cfg, default_steps) + 1).collect()
}

fn comparison_json(rows: &[ComparisonRow]) -> Value {
    rows.iter()
        .map(|r| {
            json!({
                "quantity": r.quantity,
                "computed": r.computed,
                "reference_measured": r.reference_measured,
                "reference_theory": r.reference_theory,
            })
        })
        .collect()
}

fn node_path_plot(trace: &Trace, plot: &mut SvgPlot, nodes: &[&str]) -> Result<(), CliError> {
    for (i, node) in nodes.iter().enumerate() {
        let pts = trace
            .node_path(node)?
            .into_iter()
            .map(|p| (p.x, p.y))
            .collect();
        plot.polylines.push(Polyline::new(
            format!("node {node}"),
            PALETTE[i % PALETTE.len()],
            pts,
        ));
    }
    Ok(())
}

fn trace_csv(trace: &Trace) -> Vec<u8> {
    let rows = trace.samples().iter().flat_map(|s| {
        s.nodes
            .iter()
            .map(move |(name, p)| vec![num(s.drive), name.to_string(), num(p.x), num(p.y)])
    });
    csv_bytes(&["phi_rad", "node", "x_mm", "y_mm"], rows)
}

fn trajectory(cfg: &Config) -> Result<Rendered, CliError> {
    let mut plot = SvgPlot::new("Output trajectory", "x (mm)", "y (mm)");
    plot.equal_aspect = true;
    let (trace, results) = match cfg.run.mechanism {
        Mechanism::Peaucellier => {
            let spec = cfg.peaucellier.spec()?;
            let [a, b] = cfg.peaucellier.sweep;
            let trace = peaucellier_sweep(
                &spec,
                cfg.peaucellier.branch(),
                linspace(a, b, steps(cfg, 280) + 1),
            )?;
            let e = spec.fixed_pivot();
            let line_dev = trace
                .node_path("D")?
                .iter()
                .map(|d| ((*d - e).dot(spec.axis()) - spec.line_offset()).abs())
                .fold(0.0, f64::max);
            let residual = trace
                .samples()
                .iter()
                .map(|s| s.residual)
                .fold(0.0, f64::max);
            let fit = straightness(&trace, "D")?;
            node_path_plot(&trace, &mut plot, &["D", "B", "C1", "C2"])?;
            let results = json!({
                "mechanism": "peaucellier",
                "samples": trace.len(),
                "inversor_constant_mm2": spec.inversor_constant(),
                "line_offset_mm": spec.line_offset(),
                "max_line_deviation_mm": line_dev,
                "max_relative_inversor_residual": residual,
                "straightness_max_dev_mm": fit.max_dev,
                "straightness_rms_dev_mm": fit.rms_dev,
            });
            (trace, results)
        }
        Mechanism::Sp => {
            let spec = cfg.sp_linkage.spec();
            let [a, b] = cfg.sp_linkage.drive_range;
            let trace = sp_sweep(&spec, linspace(a, b, steps(cfg, 500) + 1))?;
            let path = trace.node_path("D")?;
            let fit = straightness(&trace, "D")?;
            let residual = trace
                .samples()
                .iter()
                .map(|s| s.residual)
                .fold(0.0, f64::max);
            node_path_plot(&trace, &mut plot, &["D", "B", "E", "N"])?;
            let results = json!({
                "mechanism": "sp",
                "samples": trace.len(),
                "stroke_mm": path[0].dist(path[path.len() - 1]),
                "max_solver_residual_mm": residual,
                "straightness_max_dev_mm": fit.max_dev,
                "straightness_rms_dev_mm": fit.rms_dev,
            });
            (trace, results)
        }
    };
    Ok(Rendered {
        csv: trace_csv(&trace),
        results,
        plot,
    })
}

fn component_plot(title: &str, thetas: &[f64], series: &[(&str, Vec<f64>)]) -> SvgPlot {
    let mut plot = SvgPlot::new(title, "theta (rad)", "error (mm)");
    for (i, (label, ys)) in series.iter().enumerate() {
        let pts = thetas.iter().copied().zip(ys.iter().copied()).collect();
        plot.polylines
            .push(Polyline::new(*label, PALETTE[i % PALETTE.len()], pts));
    }
    plot
}

fn error_sweep_cmd(cfg: &Config) -> Result<Rendered, CliError> {
    let thetas = theta_grid(cfg, 120);
    let ideal = ideal_y_profile(&cfg.sp_linkage.spec(), &thetas)?;
    let params = cfg.error_params.params(cfg.run.seed);
    let sweep = error_sweep(&params, &thetas, &ideal)?;
    let csv = csv_bytes(
        &[
            "theta_rad",
            "geo_mm",
            "friction_mm",
            "clearance_mm",
            "random_mm",
            "total_mm",
        ],
        sweep.iter().map(|b| {
            vec![
                num(b.theta),
                num(b.geo),
                num(b.friction),
                num(b.clearance),
                num(b.random),
                num(b.total),
            ]
        }),
    );
    let regime = match regime_analysis(&params, &cfg.distributions.dists(), &thetas, &ideal) {
        Ok(r) => json!({
            "linear_slope_mm_per_rad": r.linear_slope,
            "nonlinear_slope_mm_per_rad": r.nonlinear_slope,
            "growth_ratio": r.growth_ratio,
            "linear_samples": r.linear_samples,
            "nonlinear_samples": r.nonlinear_samples,
            "linear_max_3sigma_mm": r.linear_max_3sigma,
            "comparison": comparison_json(&r.comparison),
        }),
        Err(ErrorModelError::GridDoesNotSpanRegimes { .. }) => Value::Null,
        Err(e) => return Err(e.into()),
    };
    let max_abs = sweep.iter().map(|b| b.total.abs()).fold(0.0, f64::max);
    let results = json!({ "samples": sweep.len(), "max_abs_total_mm": max_abs, "regime": regime });
    let col = |f: fn(&spd_core::error_model::ErrorBreakdown) -> f64| {
        sweep.iter().map(f).collect::<Vec<_>>()
    };
    let plot = component_plot(
        "Output error components",
        &thetas,
        &[
            ("geometric", col(|b| b.geo)),
            ("friction", col(|b| b.friction)),
            ("clearance", col(|b| b.clearance)),
            ("random", col(|b| b.random)),
            ("total", col(|b| b.total)),
        ],
    );
    Ok(Rendered { csv, results, plot })
}

/// Per-angle statistics, angles split into contiguous blocks over
/// `threads` workers. Every angle reduces its samples in index order, so
/// the result does not depend on `threads`.
pub fn monte_carlo_parallel(mc: &MonteCarlo<'_>, threads: usize) -> Vec<McStats> {
    let draws = mc.draws();
    let n = mc.n_angles();
    let threads = threads.clamp(1, n.max(1));
    if threads == 1 {
        return (0..n).map(|j| mc.angle_stats(j, &draws)).collect();
    }
    let block = n.div_ceil(threads);
    let mut out: Vec<Option<McStats>> = vec![None; n];
    std::thread::scope(|s| {
        for (b, chunk) in out.chunks_mut(block).enumerate() {
            let draws = &draws;
            s.spawn(move || {
                for (k, slot) in chunk.iter_mut().enumerate() {
                    *slot = Some(mc.angle_stats(b * block + k, draws));
                }
            });
        }
    });
    out.into_iter()
        .map(|s| s.expect("every angle is filled"))
        .collect()
}

fn monte_carlo_cmd(cfg: &Config, threads: usize) -> Result<Rendered, CliError> {
    let thetas = theta_grid(cfg, 24);
    let ideal = ideal_y_profile(&cfg.sp_linkage.spec(), &thetas)?;
    let params = cfg.error_params.params(cfg.run.seed);
    let dists = cfg.distributions.dists();
    let mc = MonteCarlo::new(
        &params,
        &dists,
        &thetas,
        &ideal,
        cfg.run.samples,
        cfg.run.seed,
    )?;
    let stats = monte_carlo_parallel(&mc, threads);
    let csv = csv_bytes(
        &["theta_rad", "mean_mm", "std_mm", "p95_mm"],
        stats
            .iter()
            .map(|s| vec![num(s.theta), num(s.mean), num(s.std), num(s.p95)]),
    );
    let last = stats[stats.len() - 1];
    let results = json!({
        "samples": cfg.run.samples,
        "angles": stats.len(),
        "max_std_mm": stats.iter().map(|s| s.std).fold(0.0, f64::max),
        "max_p95_mm": stats.iter().map(|s| s.p95).fold(0.0, f64::max),
        "at_theta_max": { "theta_rad": last.theta, "mean_mm": last.mean, "std_mm": last.std, "p95_mm": last.p95 },
    });
    let col = |f: fn(&McStats) -> f64| stats.iter().map(f).collect::<Vec<_>>();
    let mut plot = component_plot(
        "Monte Carlo output error",
        &thetas,
        &[("mean", col(|s| s.mean)), ("p95 |total|", col(|s| s.p95))],
    );
    for (label, sign) in [("mean + std", 1.0), ("mean - std", -1.0)] {
        let pts = stats
            .iter()
            .map(|s| (s.theta, s.mean + sign * s.std))
            .collect();
        plot.polylines
            .push(Polyline::new(label, PALETTE[2], pts).dashed());
    }
    Ok(Rendered { csv, results, plot })
}

fn sensitivity_cmd(cfg: &Config) -> Result<Rendered, CliError> {
    let theta = cfg.run.sensitivity_theta;
    let ideal = ideal_y_profile(&cfg.sp_linkage.spec(), &[theta])?[0];
    let params = cfg.error_params.params(cfg.run.seed);
    let report = sensitivity(&params, &cfg.distributions.dists(), theta, ideal)?;
    let rank = |p| report.ranking.iter().position(|&q| q == p).expect("ranked") + 1;
    let all = spd_core::error_model::Param::ALL;
    let csv = csv_bytes(
        &["parameter", "partial", "coefficient", "rank"],
        all.iter().map(|&p| {
            vec![
                p.name().to_string(),
                num(report.partials[p as usize]),
                num(report.coefficient(p)),
                rank(p).to_string(),
            ]
        }),
    );
    let results = json!({
        "theta_rad": theta,
        "ideal_y_mm": ideal,
        "coefficients": all.iter().map(|&p| (p.name().to_string(), json!(report.coefficient(p)))).collect::<serde_json::Map<_, _>>(),
        "ranking": report.ranking.iter().map(|p| p.name()).collect::<Vec<_>>(),
    });
    let mut plot = SvgPlot::new("Normalized sensitivity", "parameter index", "coefficient");
    for (i, &p) in all.iter().enumerate() {
        let (x0, x1, h) = (i as f64 + 0.1, i as f64 + 0.9, report.coefficient(p));
        let bar = vec![(x0, 0.0), (x0, h), (x1, h), (x1, 0.0), (x0, 0.0)];
        plot.polylines
            .push(Polyline::new(p.name(), PALETTE[i], bar));
    }
    Ok(Rendered { csv, results, plot })
}

fn grasp_json(r: &GraspResult) -> Value {
    let fingers: Vec<Value> = r
        .final_state
        .fingers
        .iter()
        .map(|f| {
            json!({
                "cam_rad": f.cam,
                "psi_rad": f.psi,
                "translation_rad": f.translation,
                "translation_arrested": f.translation_arrested,
                "arrested": f.arrested,
                "engaged_at_rad": f.engaged_at,
                "first_contact_drive_rad": f.first_contact_drive,
            })
        })
        .collect();
    let contacts: Vec<Value> = r
        .final_state
        .contacts
        .iter()
        .map(|c| {
            json!({
                "finger": format!("{:?}", c.finger),
                "phalange": format!("{:?}", c.phalange),
                "x_mm": c.position.x,
                "y_mm": c.position.y,
                "penetration_mm": c.penetration,
            })
        })
        .collect();
    json!({
        "classification": format!("{:?}", r.classification),
        "mode": format!("{:?}", r.mode),
        "contact_count": r.contact_count,
        "final_drive_rad": r.final_state.drive,
        "final_fingertip_gap_mm": r.final_state.fingertip_gap(),
        "object_displacement_mm": r.object_displacement,
        "steps": r.trajectory.len() - 1,
        "fingers": { "left": fingers[0], "right": fingers[1] },
        "contacts": contacts,
    })
}

fn grasp_cmd(cfg: &Config) -> Result<Rendered, CliError> {
    let spec = cfg.gripper.spec(&cfg.sp_linkage);
    let scenario = cfg.gripper.scenario();
    let r = run_grasp(&spec, &scenario)?;
    let csv = csv_bytes(
        &[
            "step",
            "phi_rad",
            "mode",
            "contact_count",
            "fingertip_gap_mm",
        ],
        r.trajectory.iter().enumerate().map(|(i, s)| {
            vec![
                i.to_string(),
                num(s.drive),
                format!("{:?}", s.mode),
                s.contacts.len().to_string(),
                num(s.fingertip_gap()),
            ]
        }),
    );
    let mut plot = SvgPlot::new("Grasp", "x (mm)", "y (mm)");
    plot.equal_aspect = true;
    if let Some(spd_core::grasp_sim::ObjectProfile::Circle { center, radius }) = &scenario.object {
        plot.discs.push(Disc {
            center: (center.x, center.y),
            radius: *radius,
            color: "#7f7f7f".into(),
        });
    }
    if let Some(spd_core::grasp_sim::ObjectProfile::Polygon { vertices }) = &scenario.object {
        let mut pts: Vec<(f64, f64)> = vertices.iter().map(|v| (v.x, v.y)).collect();
        pts.push(pts[0]);
        plot.polylines.push(Polyline::new("object", "#7f7f7f", pts));
    }
    let half = spec.palm_width / 2.0;
    plot.polylines.push(Polyline::new(
        "palm",
        "black",
        vec![(-half, 0.0), (half, 0.0)],
    ));
    for (i, (label, state)) in [("start", &r.trajectory[0]), ("final", &r.final_state)]
        .into_iter()
        .enumerate()
    {
        for (k, f) in state.fingers.iter().enumerate() {
            let s = f.segments;
            let pts = vec![
                (s[0].0.x, s[0].0.y),
                (s[1].0.x, s[1].0.y),
                (s[2].0.x, s[2].0.y),
                (s[2].1.x, s[2].1.y),
            ];
            let name = if k == 0 {
                format!("{label} fingers")
            } else {
                String::new()
            };
            let line = Polyline::new(name, PALETTE[i], pts);
            plot.polylines
                .push(if i == 0 { line.dashed() } else { line });
        }
    }
    for (k, label) in ["left fingertip path", "right fingertip path"]
        .into_iter()
        .enumerate()
    {
        let pts = r
            .trajectory
            .iter()
            .map(|s| s.fingers[k].fingertip.position)
            .map(|p| (p.x, p.y))
            .collect();
        plot.polylines
            .push(Polyline::new(label, PALETTE[2 + k], pts));
    }
    Ok(Rendered {
        csv,
        results: grasp_json(&r),
        plot,
    })
}

fn decompose_cmd(cfg: &Config) -> Result<Rendered, CliError> {
    let thetas = theta_grid(cfg, 511);
    let ideal = ideal_y_profile(&cfg.sp_linkage.spec(), &thetas)?;
    let params = cfg.error_params.params(cfg.run.seed);
    let sweep = error_sweep(&params, &thetas, &ideal)?;
    let dists = cfg.distributions.dists();
    let mc = MonteCarlo::new(
        &params,
        &dists,
        &thetas,
        &ideal,
        cfg.run.samples,
        cfg.run.seed,
    )?;
    let theta_max = thetas[thetas.len() - 1];
    let clearance: Vec<f64> = mc
        .draws()
        .iter()
        .map(|d| clearance_error(d.clearance, theta_max))
        .collect();
    let report = decompose(&sweep, &clearance, &cfg.error_params.hysteresis())?;
    let csv = csv_bytes(
        &[
            "theta_rad",
            "geo_mm",
            "friction_mm",
            "clearance_mm",
            "random_mm",
        ],
        sweep.iter().map(|b| {
            vec![
                num(b.theta),
                num(b.geo),
                num(b.friction),
                num(b.clearance),
                num(b.random),
            ]
        }),
    );
    let results = json!({
        "samples": sweep.len(),
        "geo_dominant_freq_cycles_per_rad": report.geo_dominant_freq,
        "geo_amplitude_mm": report.geo_amplitude,
        "clearance_skewness": report.clearance_skewness,
        "friction_band_mm": report.friction_band,
        "comparison": comparison_json(&report.comparison),
    });
    let plot = component_plot(
        "Error decomposition",
        &thetas,
        &[
            ("geometric", report.geo.clone()),
            ("friction", report.friction.clone()),
            ("clearance", report.clearance.clone()),
            ("random", report.random.clone()),
        ],
    );
    Ok(Rendered { csv, results, plot })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_config, Overrides};

    fn cfg(json: &str) -> Config {
        parse_config(json.as_bytes(), &Overrides::default()).unwrap()
    }

    #[test]
    fn monte_carlo_thread_independence() {
        let c = cfg(r#"{"run": {"samples": 300, "steps": 9}}"#);
        let thetas = theta_grid(&c, 0);
        let ideal = ideal_y_profile(&c.sp_linkage.spec(), &thetas).unwrap();
        let params = c.error_params.params(3);
        let mc =
            MonteCarlo::new(&params, &c.distributions.dists(), &thetas, &ideal, 300, 3).unwrap();
        let one = monte_carlo_parallel(&mc, 1);
        for t in [2, 3, 7, 64] {
            assert_eq!(monte_carlo_parallel(&mc, t), one);
        }
    }

    #[test]
    fn csv_headers_and_lf() {
        let c = cfg(r#"{"run": {"steps": 10}}"#);
        let files = render(&c, Command::ErrorSweep, 1).unwrap();
        let text = String::from_utf8(files[0].bytes.clone()).unwrap();
        assert!(text.starts_with("theta_rad,geo_mm,friction_mm,clearance_mm,random_mm,total_mm\n"));
        assert!(!text.contains('\r'));
        assert_eq!(text.lines().count(), 12);
        assert!(text.lines().all(|l| l.split(',').count() == 6));
    }

    #[test]
    fn svg_only_on_request() {
        let c = cfg(r#"{"run": {"steps": 10}}"#);
        assert_eq!(render(&c, Command::Trajectory, 1).unwrap().len(), 2);
        let c = cfg(r#"{"run": {"steps": 10, "svg": true}}"#);
        let files = render(&c, Command::Trajectory, 1).unwrap();
        assert_eq!(
            files.iter().map(|f| f.name.as_str()).collect::<Vec<_>>(),
            [
                "trajectory.csv",
                "trajectory_summary.json",
                "trajectory.svg"
            ]
        );
    }
}
