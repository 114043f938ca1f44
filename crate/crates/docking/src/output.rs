//! CSV and text artifacts: trajectory logs, per-replan solver statistics and
//! a solve summary. Floats are written with 17 significant digits so parsing
//! a file reproduces the logged values exactly.

use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::geometry::{containment_residuals, HalfspaceSet};
use crate::mpc::{ClosedLoopLog, ReplanRecord};
use crate::ocp::Trajectory;
use crate::thrust::ThrusterSpec;
use crate::vessel::Pose;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed CSV at line {line}: {message}")]
    Malformed { line: usize, message: String },
}

/// One row of a trajectory CSV: state, per-thruster forces, azimuth angles
/// and the spatial clearance (infinite in open water).
#[derive(Debug, Clone, PartialEq)]
pub struct TrajRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub u: f64,
    pub v: f64,
    pub r: f64,
    pub f: Vec<f64>,
    pub alpha: Vec<f64>,
    pub min_residual: f64,
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn min_residual_at(
    region: Option<&HalfspaceSet>,
    safety: &[nalgebra::Vector2<f64>],
    pose: &Pose,
) -> f64 {
    match region {
        None => f64::INFINITY,
        Some(hs) => containment_residuals(hs, pose, safety)
            .iter()
            .fold(f64::INFINITY, |acc, &r| acc.min(r)),
    }
}

/// Rows from an open-loop trajectory; azimuth angles are the commanded ones.
pub fn rows_from_trajectory(
    traj: &Trajectory,
    specs: &[ThrusterSpec],
    region: Option<&HalfspaceSet>,
    safety: &[nalgebra::Vector2<f64>],
) -> Vec<TrajRow> {
    traj.points
        .iter()
        .map(|p| TrajRow {
            t: p.t,
            x: p.pose.x,
            y: p.pose.y,
            psi: p.pose.psi(),
            u: p.velocity.u,
            v: p.velocity.v,
            r: p.velocity.r,
            f: p.command.f.clone(),
            alpha: azimuth_entries(specs, &p.command.alpha),
            min_residual: min_residual_at(region, safety, &p.pose),
        })
        .collect()
}

/// Rows from a closed-loop plant trace; angles are the actual slewed ones.
pub fn rows_from_closed_loop(log: &ClosedLoopLog, specs: &[ThrusterSpec]) -> Vec<TrajRow> {
    log.samples
        .iter()
        .map(|s| TrajRow {
            t: s.plant.t,
            x: s.plant.pose.x,
            y: s.plant.pose.y,
            psi: s.plant.pose.psi(),
            u: s.plant.velocity.u,
            v: s.plant.velocity.v,
            r: s.plant.velocity.r,
            f: s.plant.f.clone(),
            alpha: azimuth_entries(specs, &s.plant.alpha),
            min_residual: s.min_residual.unwrap_or(f64::INFINITY),
        })
        .collect()
}

fn azimuth_entries(specs: &[ThrusterSpec], full: &[f64]) -> Vec<f64> {
    specs
        .iter()
        .zip(full.iter())
        .filter(|(s, _)| s.is_azimuth())
        .map(|(_, &a)| a)
        .collect()
}

pub fn write_trajectory_csv(path: &Path, rows: &[TrajRow]) -> Result<(), OutputError> {
    let (n_f, n_a) = rows
        .first()
        .map(|r| (r.f.len(), r.alpha.len()))
        .unwrap_or((3, 2));
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut header = vec![
        "t".to_string(),
        "x".into(),
        "y".into(),
        "psi".into(),
        "u".into(),
        "v".into(),
        "r".into(),
    ];
    for i in 0..n_f {
        header.push(format!("f{}", i + 1));
    }
    for i in 0..n_a {
        header.push(format!("alpha{}", i + 1));
    }
    header.push("min_spatial_residual".into());
    writeln!(out, "{}", header.join(","))?;
    for r in rows {
        let mut cells = vec![
            fmt(r.t),
            fmt(r.x),
            fmt(r.y),
            fmt(r.psi),
            fmt(r.u),
            fmt(r.v),
            fmt(r.r),
        ];
        cells.extend(r.f.iter().map(|&v| fmt(v)));
        cells.extend(r.alpha.iter().map(|&v| fmt(v)));
        cells.push(fmt(r.min_residual));
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

pub fn read_trajectory_csv(path: &Path) -> Result<Vec<TrajRow>, OutputError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(OutputError::Malformed {
        line: 1,
        message: "empty file".into(),
    })?;
    let cols: Vec<&str> = header.split(',').collect();
    let n_f = cols.iter().filter(|c| c.starts_with('f')).count();
    let n_a = cols.iter().filter(|c| c.starts_with("alpha")).count();
    let expected = 7 + n_f + n_a + 1;
    if cols.len() != expected {
        return Err(OutputError::Malformed {
            line: 1,
            message: format!("unrecognized header with {} columns", cols.len()),
        });
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != expected {
            return Err(OutputError::Malformed {
                line: idx + 1,
                message: format!("expected {expected} cells, got {}", cells.len()),
            });
        }
        let parse = |s: &str, line: usize| -> Result<f64, OutputError> {
            s.parse::<f64>().map_err(|e| OutputError::Malformed {
                line,
                message: format!("{s:?}: {e}"),
            })
        };
        let mut it = cells.iter();
        let mut next = || parse(it.next().unwrap(), idx + 1);
        let row = TrajRow {
            t: next()?,
            x: next()?,
            y: next()?,
            psi: next()?,
            u: next()?,
            v: next()?,
            r: next()?,
            f: (0..n_f).map(|_| next()).collect::<Result<_, _>>()?,
            alpha: (0..n_a).map(|_| next()).collect::<Result<_, _>>()?,
            min_residual: next()?,
        };
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_replans_csv(path: &Path, replans: &[ReplanRecord]) -> Result<(), OutputError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        out,
        "t,status,iterations,qp_iterations,kkt_residual,wall_ms,objective,degraded"
    )?;
    for r in replans {
        writeln!(
            out,
            "{},{:?},{},{},{},{},{},{}",
            fmt(r.t),
            r.status,
            r.iterations,
            r.qp_iterations,
            fmt(r.kkt_residual),
            fmt(r.wall_time.as_secs_f64() * 1e3),
            fmt(r.objective),
            r.degraded
        )?;
    }
    Ok(())
}

/// Human-readable solve summary.
pub fn write_solve_stats(
    path: &Path,
    scenario_name: &str,
    status: &str,
    iterations: usize,
    qp_iterations: usize,
    kkt_residual: f64,
    wall: std::time::Duration,
    objective: f64,
    warnings: &[String],
) -> Result<(), OutputError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "scenario:       {scenario_name}")?;
    writeln!(out, "status:         {status}")?;
    writeln!(out, "iterations:     {iterations}")?;
    writeln!(out, "qp iterations:  {qp_iterations}")?;
    writeln!(out, "kkt residual:   {kkt_residual:.3e}")?;
    writeln!(out, "wall time:      {:.3} s", wall.as_secs_f64())?;
    writeln!(out, "objective:      {objective:.6e}")?;
    for w in warnings {
        writeln!(out, "warning:        {w}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let rows: Vec<TrajRow> = (0..20)
            .map(|k| {
                let s = |i: usize| ((k * 13 + i) as f64 * 0.7719).sin() * 10f64.powi(i as i32 % 7);
                TrajRow {
                    t: k as f64 * 10.0,
                    x: s(0),
                    y: s(1),
                    psi: s(2) % 3.0,
                    u: s(3),
                    v: s(4),
                    r: s(5),
                    f: vec![s(6) * 1e5, s(7) * 1e5, s(8) * 1e5],
                    alpha: vec![s(9), s(10)],
                    min_residual: if k == 3 { f64::INFINITY } else { s(11) },
                }
            })
            .collect();
        let dir = std::env::temp_dir().join("docking-csv-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("traj.csv");
        write_trajectory_csv(&path, &rows).unwrap();
        let back = read_trajectory_csv(&path).unwrap();
        assert_eq!(rows, back);
    }

    #[test]
    fn empty_log_produces_header_only_csv() {
        let dir = std::env::temp_dir().join("docking-csv-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("empty.csv");
        write_trajectory_csv(&path, &[]).unwrap();
        let rows = read_trajectory_csv(&path).unwrap();
        assert!(rows.is_empty());
    }
}
