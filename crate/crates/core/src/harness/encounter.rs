//! Close-encounter runs: KS propagation, transit detection and the Gamma
//! history.
//!
//! Without explicit legs the run goes backward until the distance to P2
//! exceeds `far_distance` (`n` steps), then forward for exactly `2n` steps
//! from there, so the forward leg covers the approach and a symmetric
//! departure.

use serde::Serialize;

use crate::dynamics::{gamma, vector_field_ks};
use crate::encounters::{classify_hyperbolicity, detect_transits, EncounterRecord, HyperbolicityReport};
use crate::error::{Error, Result};
use crate::harness::config::{LegVariable, Mode};
use crate::harness::scenario::{rows_from_ks, Scenario, TrajectoryRow};
use crate::integrator::{propagate_observed, Control, Endpoint, StepperConfig, Trajectory};
use crate::ks::{lift, KsState};

/// One sample of the Gamma history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaSample {
    pub s: f64,
    pub f: f64,
    pub gamma: f64,
    pub d2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncounterOutput {
    /// All accepted samples in computation order.
    pub rows: Vec<TrajectoryRow>,
    pub leg_iterations: Vec<usize>,
    pub records: Vec<EncounterRecord>,
    /// One report per complete record, `None` for open-ended ones.
    pub reports: Vec<Option<HyperbolicityReport>>,
    pub gamma_series: Vec<GammaSample>,
    /// Set when a leg stopped early; the output up to that point is kept.
    pub error: Option<Error>,
}

/// Default constant of the mu-threshold diagnostic.
pub const MU_THRESHOLD_CONSTANT: f64 = 1.0;

struct Leg {
    samples: Vec<(f64, [f64; 10])>,
    backward: bool,
}

/// Runs one KS leg, keeping the samples even when the integration fails.
fn run_leg(
    start: (f64, [f64; 10]),
    endpoint: Endpoint,
    step: f64,
    max_steps: usize,
    sc: &Scenario,
    mut stop: impl FnMut(&[f64; 10]) -> bool,
) -> (Leg, Option<Error>) {
    let params = &sc.params;
    let field = |_s: f64, y: &[f64; 10]| vector_field_ks(y, params);
    let backward = match endpoint {
        Endpoint::Time(t) => t < start.0,
        Endpoint::Coordinate { backward, .. } | Endpoint::Steps { backward, .. } | Endpoint::Open { backward } => {
            backward
        }
    };
    let cfg = StepperConfig {
        step,
        max_steps,
        endpoint,
        record: false,
    };
    let mut samples = vec![start];
    let res = propagate_observed(&field, start.0, &start.1, &cfg, |s, y| {
        samples.push((s, *y));
        if stop(y) {
            Control::Stop
        } else {
            Control::Continue
        }
    });
    (Leg { samples, backward }, res.err())
}

fn u2(y: &[f64; 10]) -> f64 {
    y[0] * y[0] + y[1] * y[1] + y[2] * y[2] + y[3] * y[3]
}

/// Runs the encounter protocol, or the scenario's legs if it has any.
pub fn run_encounter(sc: &Scenario) -> Result<EncounterOutput> {
    if sc.mode != Mode::Ks {
        return Err(Error::InvalidConfig("the encounter protocol runs in KS mode".into()));
    }
    let params = &sc.params;
    let ks0: KsState = lift(&sc.initial_state()?, params)?;
    let mut legs: Vec<Leg> = Vec::new();
    let mut error = None;
    let mut cursor = (ks0.s, ks0.to_array());

    if sc.legs.is_empty() {
        let far = sc.far_distance;
        let (back, err) = run_leg(cursor, Endpoint::Open { backward: true }, sc.step, sc.max_steps, sc, |y| u2(y) > far);
        let n = back.samples.len() - 1;
        cursor = *back.samples.last().expect("leg has its start sample");
        legs.push(back);
        error = err;
        if error.is_none() {
            let ep = Endpoint::Steps {
                count: 2 * n,
                backward: false,
            };
            let (fwd, err) = run_leg(cursor, ep, sc.step, sc.max_steps, sc, |_| false);
            legs.push(fwd);
            error = err;
        }
    } else {
        for leg in &sc.legs {
            let ep = match leg.variable {
                LegVariable::S => Endpoint::Time(leg.target),
                LegVariable::F => Endpoint::Coordinate {
                    index: 4,
                    target: leg.target,
                    backward: leg.target < cursor.1[4],
                },
            };
            let (l, err) = run_leg(cursor, ep, sc.step, sc.max_steps, sc, |_| false);
            cursor = *l.samples.last().expect("leg has its start sample");
            legs.push(l);
            if err.is_some() {
                error = err;
                break;
            }
        }
    }

    let mut rows = Vec::new();
    let mut records = Vec::new();
    let mut gamma_series = Vec::new();
    let mut leg_iterations = Vec::new();
    for (k, leg) in legs.iter().enumerate() {
        leg_iterations.push(leg.samples.len() - 1);
        let mut ordered = leg.samples.clone();
        if leg.backward {
            ordered.reverse();
        }
        let traj = Trajectory {
            samples: ordered,
            iteration_count: leg.samples.len() - 1,
            final_time: cursor.0,
            final_state: cursor.1,
        };
        // only the last protocol leg (the forward sweep) is scanned when
        // the default protocol is used, since it covers the backward one
        if !sc.legs.is_empty() || k + 1 == legs.len() {
            records.extend(detect_transits(&traj, params)?);
        }
        let as_traj = Trajectory {
            samples: leg.samples.clone(),
            iteration_count: 0,
            final_time: cursor.0,
            final_state: cursor.1,
        };
        let skip = usize::from(k > 0);
        rows.extend(rows_from_ks(&as_traj, params)?.into_iter().skip(skip));
        gamma_series.extend(leg.samples.iter().skip(skip).map(|(s, y)| GammaSample {
            s: *s,
            f: y[4],
            gamma: gamma(y[4], y[9], params),
            d2: u2(y),
        }));
    }
    let reports = records
        .iter()
        .map(|r| {
            if r.is_complete() {
                classify_hyperbolicity(r, params, MU_THRESHOLD_CONSTANT).ok()
            } else {
                None
            }
        })
        .collect();
    Ok(EncounterOutput {
        rows,
        leg_iterations,
        records,
        reports,
        gamma_series,
        error,
    })
}
