//! Command-line front end: open-loop solves, closed-loop simulations,
//! derivative checks and plot regeneration.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use docking::mpc::Mpc;
use docking::output::{
    read_trajectory_csv, rows_from_closed_loop, rows_from_trajectory, write_replans_csv,
    write_solve_stats, write_trajectory_csv, TrajRow,
};
use docking::plot::{harbor_plot, line_chart, HLine, Series, SERIES_COLORS};
use docking::scenario::{load, Scenario};
use docking::thrust::ThrusterKind;
use docking::vessel::wrap_angle;

#[derive(Parser)]
#[command(
    name = "docking",
    about = "Trajectory optimization and receding-horizon control for ship docking",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the open-loop horizon once and write trajectory artifacts.
    Solve(SolveArgs),
    /// Run the closed-loop controller against the simulation plant.
    Simulate(SimulateArgs),
    /// Verify the analytic derivatives of the transcribed problem against
    /// central finite differences.
    CheckDerivatives(CheckArgs),
    /// Re-render the SVG plots from previously written CSV logs.
    Plot(PlotArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Scenario file path or bundled name (open-water, harbor-slip, corner-berth).
    #[arg(long)]
    scenario: String,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the horizon length in seconds.
    #[arg(long)]
    horizon: Option<f64>,
    /// Override the number of shooting intervals.
    #[arg(long)]
    intervals: Option<usize>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: String,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Simulated time in seconds (multiple of the replan period).
    #[arg(long)]
    duration: f64,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    intervals: Option<usize>,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    scenario: String,
    /// Seed for the random evaluation points.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of random points.
    #[arg(long, default_value_t = 10)]
    points: usize,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    intervals: Option<usize>,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    scenario: String,
    /// Directory holding plant_trace.csv or trajectory.csv.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

const EXIT_VALIDATION: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_DERIVATIVES: u8 = 4;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::CheckDerivatives(args) => cmd_check_derivatives(args),
        Command::Plot(args) => cmd_plot(args),
    };
    match outcome {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}

fn load_scenario(
    name: &str,
    horizon: Option<f64>,
    intervals: Option<usize>,
) -> Result<Scenario, String> {
    let mut sc = load(name).map_err(|e| e.to_string())?;
    if let Some(h) = horizon {
        if !(h > 0.0) {
            return Err("--horizon must be positive".into());
        }
        sc.horizon.duration = h;
    }
    if let Some(n) = intervals {
        if n == 0 {
            return Err("--intervals must be positive".into());
        }
        sc.horizon.intervals = n;
    }
    Ok(sc)
}

fn cmd_solve(args: SolveArgs) -> Result<ExitCode, String> {
    let sc = load_scenario(&args.scenario, args.horizon, args.intervals)?;
    let mpc = sc.mpc().map_err(|e| e.to_string())?;
    std::fs::create_dir_all(&args.out).map_err(|e| e.to_string())?;

    let start = sc.start_state();
    let prev = docking::thrust::ThrusterCommand {
        alpha: start.alpha.clone(),
        f: vec![0.0; sc.specs.len()],
    };
    let ocp = mpc.transcribe_at(&start.pose, &start.velocity, &prev);
    for w in &ocp.warnings {
        eprintln!("warning: {w}");
    }
    let result = sqp::solve(&ocp.nlp, &mpc.solver, None);
    let objective = (ocp.nlp.objective)(&result.x);
    println!(
        "solve: {:?} in {} iterations ({} QP iterations), kkt {:.3e}, objective {:.6e}, {:.2} s",
        result.status,
        result.stats.iterations,
        result.stats.qp_iterations,
        result.stats.kkt_residual,
        objective,
        result.stats.wall_time.as_secs_f64()
    );

    let traj = ocp
        .extract_trajectory(&result.x)
        .map_err(|e| e.to_string())?;
    let region_hs = sc.region.as_ref().map(|r| r.to_halfspaces());
    let rows = rows_from_trajectory(
        &traj,
        &sc.specs,
        region_hs.as_ref(),
        sc.safety_polygon.vertices(),
    );
    write_trajectory_csv(&args.out.join("trajectory.csv"), &rows).map_err(|e| e.to_string())?;
    write_solve_stats(
        &args.out.join("solve_stats.txt"),
        &sc.name,
        &format!("{:?}", result.status),
        result.stats.iterations,
        result.stats.qp_iterations,
        result.stats.kkt_residual,
        result.stats.wall_time,
        objective,
        &ocp.warnings,
    )
    .map_err(|e| e.to_string())?;
    emit_plots(&args.out, &sc, &rows)?;

    if result.converged() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(EXIT_SOLVER))
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode, String> {
    let sc = load_scenario(&args.scenario, args.horizon, args.intervals)?;
    let mpc: Mpc = sc.mpc().map_err(|e| e.to_string())?;
    std::fs::create_dir_all(&args.out).map_err(|e| e.to_string())?;

    let replan = sc.horizon.duration / sc.horizon.intervals as f64;
    let steps = (args.duration / replan).round();
    if (steps * replan - args.duration).abs() > 1e-6 || args.duration < 0.0 {
        return Err(format!(
            "--duration must be a nonnegative multiple of the replan period ({replan} s)"
        ));
    }

    let log = mpc.run_closed_loop(&sc.start_state(), args.duration);
    let degraded = log.replans.iter().filter(|r| r.degraded).count();
    println!(
        "simulate: {} replans ({} degraded), {} samples, docked = {}",
        log.replans.len(),
        degraded,
        log.samples.len(),
        log.docked
    );

    let rows = rows_from_closed_loop(&log, &sc.specs);
    write_trajectory_csv(&args.out.join("plant_trace.csv"), &rows).map_err(|e| e.to_string())?;
    write_replans_csv(&args.out.join("replans.csv"), &log.replans).map_err(|e| e.to_string())?;
    emit_plots(&args.out, &sc, &rows)?;

    if log.docked {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(EXIT_SOLVER))
    }
}

fn cmd_check_derivatives(args: CheckArgs) -> Result<ExitCode, String> {
    let sc = load_scenario(&args.scenario, args.horizon, args.intervals)?;
    let mpc = sc.mpc().map_err(|e| e.to_string())?;
    let start = sc.start_state();
    let prev = docking::thrust::ThrusterCommand {
        alpha: start.alpha.clone(),
        f: vec![0.0; sc.specs.len()],
    };
    let ocp = mpc.transcribe_at(&start.pose, &start.velocity, &prev);

    let mut state = args.seed.wrapping_add(0x9e3779b97f4a7c15);
    let mut worst: Option<sqp::DerivReport> = None;
    for point in 0..args.points {
        let x = random_in_bounds_point(&ocp.nlp, &mut state);
        let report = sqp::derivative_check(&ocp.nlp, &x, 1e-6);
        println!(
            "point {point}: max relative error {:.3e} at {}",
            report.max_rel_error, report.worst
        );
        if worst
            .as_ref()
            .map_or(true, |w| report.max_rel_error > w.max_rel_error)
        {
            worst = Some(report);
        }
    }
    let worst = worst.expect("at least one point");
    println!(
        "worst: {:.3e} at {} (analytic {:.9e}, finite difference {:.9e})",
        worst.max_rel_error, worst.worst, worst.analytic, worst.finite_difference
    );
    if worst.max_rel_error > 1e-5 {
        Ok(ExitCode::from(EXIT_DERIVATIVES))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn cmd_plot(args: PlotArgs) -> Result<ExitCode, String> {
    let sc = load_scenario(&args.scenario, None, None)?;
    let trace = args.out.join("plant_trace.csv");
    let open_loop = args.out.join("trajectory.csv");
    let source = if trace.exists() {
        trace
    } else if open_loop.exists() {
        open_loop
    } else {
        return Err(format!(
            "no plant_trace.csv or trajectory.csv under {}",
            args.out.display()
        ));
    };
    let rows = read_trajectory_csv(&source).map_err(|e| e.to_string())?;
    emit_plots(&args.out, &sc, &rows)?;
    println!("plots rendered from {}", source.display());
    Ok(ExitCode::SUCCESS)
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn uniform(state: &mut u64) -> f64 {
    (splitmix64(state) >> 11) as f64 / (1u64 << 53) as f64
}

/// Random interior point around the cold-start guess, clamped inside the
/// bounds with a margin so central differences stay in-domain.
fn random_in_bounds_point(nlp: &sqp::Nlp, state: &mut u64) -> Vec<f64> {
    let mut x = nlp.x0.clone();
    for i in 0..nlp.dim {
        let r = 2.0 * uniform(state) - 1.0;
        let lo = nlp.lower[i].max(-4.0) + 0.05;
        let hi = nlp.upper[i].min(4.0) - 0.05;
        x[i] = (x[i] + 0.3 * r).clamp(lo, hi);
    }
    x
}

fn emit_plots(dir: &Path, sc: &Scenario, rows: &[TrajRow]) -> Result<(), String> {
    let track: Vec<(f64, f64, f64)> = rows.iter().map(|r| (r.x, r.y, r.psi)).collect();
    harbor_plot(
        &dir.join("path.svg"),
        &format!("{}: track", sc.name),
        sc.region.as_ref(),
        &sc.safety_polygon,
        &track,
        (sc.eta_d[0], sc.eta_d[1], sc.eta_d[2]),
    )
    .map_err(|e| e.to_string())?;

    let series = |label: &str, color: usize, f: &dyn Fn(&TrajRow) -> f64| Series {
        label: label.to_string(),
        color: SERIES_COLORS[color % SERIES_COLORS.len()].to_string(),
        points: rows.iter().map(|r| (r.t, f(r))).collect(),
    };
    line_chart(
        &dir.join("pose_error.svg"),
        &format!("{}: pose error", sc.name),
        "t [s]",
        "error",
        &[
            series("x - x_d [m]", 0, &|r| r.x - sc.eta_d[0]),
            series("y - y_d [m]", 1, &|r| r.y - sc.eta_d[1]),
            series("psi - psi_d [deg]", 2, &|r| {
                wrap_angle(r.psi - sc.eta_d[2]).to_degrees()
            }),
        ],
        &[],
    )
    .map_err(|e| e.to_string())?;

    let n_f = rows.first().map_or(3, |r| r.f.len());
    let mut force_series = Vec::new();
    for i in 0..n_f {
        force_series.push(series(&format!("f{} [N]", i + 1), i, &move |r: &TrajRow| {
            r.f[i]
        }));
    }
    let mut force_lines = Vec::new();
    for spec in &sc.specs {
        for b in [spec.f_min, spec.f_max] {
            if force_lines
                .iter()
                .all(|h: &HLine| (h.y - b).abs() > 1e-9)
            {
                force_lines.push(HLine {
                    y: b,
                    label: "saturation".to_string(),
                });
            }
        }
    }
    line_chart(
        &dir.join("forces.svg"),
        &format!("{}: thruster forces", sc.name),
        "t [s]",
        "force [N]",
        &force_series,
        &force_lines,
    )
    .map_err(|e| e.to_string())?;

    let n_a = rows.first().map_or(2, |r| r.alpha.len());
    let mut alpha_series = Vec::new();
    for i in 0..n_a {
        alpha_series.push(series(
            &format!("alpha{} [deg]", i + 1),
            i,
            &move |r: &TrajRow| r.alpha[i].to_degrees(),
        ));
    }
    let mut alpha_lines = Vec::new();
    for spec in &sc.specs {
        if let ThrusterKind::Azimuth {
            alpha_min,
            alpha_max,
            ..
        } = spec.kind
        {
            for b in [alpha_min.to_degrees(), alpha_max.to_degrees()] {
                if alpha_lines
                    .iter()
                    .all(|h: &HLine| (h.y - b).abs() > 1e-9)
                {
                    alpha_lines.push(HLine {
                        y: b,
                        label: "sector".to_string(),
                    });
                }
            }
        }
    }
    line_chart(
        &dir.join("azimuths.svg"),
        &format!("{}: azimuth angles", sc.name),
        "t [s]",
        "angle [deg]",
        &alpha_series,
        &alpha_lines,
    )
    .map_err(|e| e.to_string())?;
    Ok(())
}
