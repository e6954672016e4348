//! Two-parameter grids of indicator values.
//!
//! Cells are independent and run on a rayon pool; results are collected in
//! index order so the output does not depend on the thread count.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::config::{Axis, IndicatorKind};
use crate::harness::scenario::{admissible_state, GridSpec, Scenario};
use crate::indicators::{count_mfli_jumps, heliocentric_elements, propagate_with_tangent, tisserand, IndicatorConfig};
use crate::frames::momenta_from_velocity;
use crate::ks::lift;

/// Value stored for cells whose integration failed.
pub const SENTINEL: f64 = f64::NAN;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub i: usize,
    pub j: usize,
    pub x_value: f64,
    pub y_value: f64,
    pub mfli: f64,
    pub rfli: f64,
    pub jumps: usize,
    pub tisserand_initial: f64,
    pub tisserand_final: f64,
    pub error: Option<String>,
}

impl CellResult {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }

    /// `|T(F) - T(f0)|`.
    pub fn delta_tisserand(&self) -> f64 {
        (self.tisserand_final - self.tisserand_initial).abs()
    }

    pub fn value(&self, kind: IndicatorKind) -> f64 {
        match kind {
            IndicatorKind::Mfli => self.mfli,
            IndicatorKind::Rfli => self.rfli,
            IndicatorKind::Tisserand => self.delta_tisserand(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanOutput {
    pub grid: GridSpec,
    pub final_anomaly: f64,
    /// Row-major: cell `(i, j)` is at `j * nx + i`.
    pub cells: Vec<CellResult>,
}

impl ScanOutput {
    /// Row-major values of one indicator, `SENTINEL` for failed cells.
    pub fn raster(&self, kind: IndicatorKind) -> Vec<f64> {
        self.cells
            .iter()
            .map(|c| if c.failed() { SENTINEL } else { c.value(kind) })
            .collect()
    }

    pub fn failed_count(&self) -> usize {
        self.cells.iter().filter(|c| c.failed()).count()
    }

    pub fn cell(&self, i: usize, j: usize) -> &CellResult {
        &self.cells[j * self.grid.nx + i]
    }
}

fn apply(axis: Axis, value: f64, relative: bool, r: &mut [f64; 3], v: &mut [f64; 3]) {
    let slot = match axis {
        Axis::X => &mut r[0],
        Axis::Xp => &mut v[0],
        Axis::Zp => &mut v[2],
    };
    if relative {
        *slot += value;
    } else {
        *slot = value;
    }
}

/// Integrates one cell. Errors are returned so the caller can record them.
pub fn run_cell(sc: &Scenario, grid: &GridSpec, final_anomaly: f64, i: usize, j: usize) -> CellResult {
    let (x_value, y_value) = (grid.x_value(i), grid.y_value(j));
    let mut cell = CellResult {
        i,
        j,
        x_value,
        y_value,
        mfli: SENTINEL,
        rfli: SENTINEL,
        jumps: 0,
        tisserand_initial: SENTINEL,
        tisserand_final: SENTINEL,
        error: None,
    };
    let mut run = || -> Result<()> {
        let (mut r, mut v) = sc.rotating_state()?;
        apply(grid.x_axis, x_value, grid.relative, &mut r, &mut v);
        apply(grid.y_axis, y_value, grid.relative, &mut r, &mut v);
        let c = admissible_state(r, momenta_from_velocity(&r, &v), sc.f0, &sc.params)?;
        cell.tisserand_initial = tisserand(&heliocentric_elements(&c, &sc.params, 1.0 - sc.params.mu))?;
        let ks = lift(&c, &sc.params)?;
        let spec = &sc.indicator;
        let cfg = IndicatorConfig {
            lambda: spec.lambda,
            step: spec.step,
            final_anomaly,
            renorm_threshold: spec.renorm_threshold,
            max_steps: sc.max_steps,
            // windows are only needed to count jumps
            record: true,
        };
        let (_, series) = propagate_with_tangent(&ks, &spec.w0, &sc.params, &cfg)?;
        cell.mfli = series.mfli;
        cell.rfli = series.rfli;
        cell.jumps = count_mfli_jumps(&series, spec.lambda, spec.jump_threshold);
        cell.tisserand_final = series.tisserand_final.ok_or_else(|| {
            Error::InvalidElements("final osculating orbit is not elliptic".into())
        })?;
        Ok(())
    };
    if let Err(e) = run() {
        cell.mfli = SENTINEL;
        cell.rfli = SENTINEL;
        cell.tisserand_final = SENTINEL;
        cell.error = Some(e.to_string());
    }
    cell
}

/// Runs the scenario's grid on `threads` workers (0 means rayon's default).
pub fn run_scan(sc: &Scenario, threads: usize) -> Result<ScanOutput> {
    let grid = sc
        .grid
        .ok_or_else(|| Error::InvalidConfig("scenario has no [grid] section".into()))?;
    grid.validate()?;
    let final_anomaly = sc
        .indicator
        .final_anomaly
        .ok_or_else(|| Error::InvalidConfig("scan needs indicator.final_anomaly".into()))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let n = grid.nx * grid.ny;
    let cells = pool.install(|| {
        (0..n)
            .into_par_iter()
            .map(|k| run_cell(sc, &grid, final_anomaly, k % grid.nx, k / grid.nx))
            .collect()
    });
    Ok(ScanOutput {
        grid,
        final_anomaly,
        cells,
    })
}
