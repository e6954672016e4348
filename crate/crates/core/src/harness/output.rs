//! File writers. Floats are written with 17 significant digits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::frames::{rotating_to_inertial_state, SystemParams};
use crate::harness::config::{IndicatorKind, Mode};
use crate::harness::encounter::GammaSample;
use crate::harness::scan::ScanOutput;
use crate::harness::scenario::TrajectoryRow;
use crate::harness::switching::SwitchEvent;

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    }
    let f = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Cartesian => "cartesian",
        Mode::Ks => "ks",
        Mode::Switching => "switching",
    }
}

/// Rotating-pulsating samples: `s,f,x,y,z,px,py,pz,action,d2,residual,mode`.
/// `s` is empty for Cartesian samples.
pub fn write_trajectory_csv<W: Write>(rows: &[TrajectoryRow], params: &SystemParams, mut out: W) -> Result<()> {
    writeln!(out, "s,f,x,y,z,px,py,pz,action,d2,residual,mode")?;
    for r in rows {
        let c = &r.state;
        let s = if r.s.is_nan() { String::new() } else { format!("{:.16e}", r.s) };
        writeln!(
            out,
            "{s},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            c.f,
            c.r[0],
            c.r[1],
            c.r[2],
            c.p[0],
            c.p[1],
            c.p[2],
            c.action,
            c.distance_to_secondary(params),
            r.residual,
            mode_name(r.mode)
        )?;
    }
    Ok(())
}

/// Barycentric inertial samples: `f,X,Y,Z,VX,VY,VZ` with time velocities.
pub fn write_inertial_csv<W: Write>(rows: &[TrajectoryRow], params: &SystemParams, mut out: W) -> Result<()> {
    writeln!(out, "f,X,Y,Z,VX,VY,VZ")?;
    for r in rows {
        let c = &r.state;
        let st = rotating_to_inertial_state(&c.r, &c.velocity(), c.f, params);
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            c.f, st.r[0], st.r[1], st.r[2], st.v[0], st.v[1], st.v[2]
        )?;
    }
    Ok(())
}

/// `s,f,gamma,d2`.
pub fn write_gamma_csv<W: Write>(series: &[GammaSample], mut out: W) -> Result<()> {
    writeln!(out, "s,f,gamma,d2")?;
    for g in series {
        writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", g.s, g.f, g.gamma, g.d2)?;
    }
    Ok(())
}

/// `f,to,distance,before,after,jump`.
pub fn write_switches_csv<W: Write>(events: &[SwitchEvent], mut out: W) -> Result<()> {
    writeln!(out, "f,to,distance,before,after,jump")?;
    for e in events {
        writeln!(
            out,
            "{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e}",
            e.f,
            mode_name(e.to),
            e.distance,
            e.before,
            e.after,
            e.jump()
        )?;
    }
    Ok(())
}

/// Row-major matrix, one CSV line per grid row; failed cells print `NaN`.
pub fn write_raster_csv<W: Write>(values: &[f64], nx: usize, mut out: W) -> Result<()> {
    for row in values.chunks(nx) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

/// Little-endian `f64`, row-major.
pub fn write_raster_bin<W: Write>(values: &[f64], mut out: W) -> Result<()> {
    for v in values {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_raster_bin(bytes: &[u8]) -> Vec<f64> {
    bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect()
}

/// JSON sidecar describing a binary raster.
pub fn raster_sidecar(scan: &ScanOutput, kind: IndicatorKind, file: &str) -> serde_json::Value {
    let g = &scan.grid;
    serde_json::json!({
        "file": file,
        "format": "f64 little-endian, row-major",
        "indicator": kind,
        "x_axis": g.x_axis,
        "x_range": g.x_range,
        "nx": g.nx,
        "y_axis": g.y_axis,
        "y_range": g.y_range,
        "ny": g.ny,
        "relative": g.relative,
        "final_anomaly": scan.final_anomaly,
        "sentinel": "NaN",
        "failed_cells": scan.failed_count(),
        "git_commit": git_commit(),
    })
}

/// One line per cell: indices, coordinates, all indicators and the error.
pub fn write_cells_csv<W: Write>(scan: &ScanOutput, mut out: W) -> Result<()> {
    writeln!(out, "i,j,x_value,y_value,mfli,rfli,jumps,tisserand_initial,tisserand_final,error")?;
    for c in &scan.cells {
        writeln!(
            out,
            "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e},{}",
            c.i,
            c.j,
            c.x_value,
            c.y_value,
            c.mfli,
            c.rfli,
            c.jumps,
            c.tisserand_initial,
            c.tisserand_final,
            c.error.as_deref().unwrap_or("").replace(',', ";")
        )?;
    }
    Ok(())
}

/// Commit of the working tree, or `"unknown"` outside a git checkout.
pub fn git_commit() -> String {
    std::process::Command::new("git")
        .args(["rev-parse", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}
