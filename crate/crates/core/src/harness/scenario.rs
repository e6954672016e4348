//! Resolved scenarios and single-trajectory propagation.

use std::f64::consts::PI;

use serde::Serialize;

use crate::dynamics::{
    extended_hamiltonian, hamiltonian_cartesian, hamiltonian_regularized_array, vector_field_cartesian,
    vector_field_ks,
};
use crate::error::{Error, Result};
use crate::frames::{
    heliocentric_elements_to_inertial, inertial_to_rotating_state, momenta_from_velocity, velocity_from_momenta,
    OrbitalElements, SystemParams,
};
use crate::harness::config::{Axis, Config, GridSection, IndicatorKind, LegVariable, Mode};
use crate::indicators::default_tangent;
use crate::integrator::{propagate, Endpoint, StepperConfig, Trajectory};
use crate::ks::{lift, push_down, CartesianState, KsState};
use crate::linalg::{add, Vec3};

/// How the initial condition was given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition {
    /// Rotating-pulsating position and conjugate momenta.
    Momenta { r: Vec3, p: Vec3 },
    /// Rotating-pulsating position and `dr/df`.
    Velocity { r: Vec3, v: Vec3 },
    /// Heliocentric osculating elements about P1.
    Elements { el: OrbitalElements, grav_param: f64 },
}

/// One propagation leg.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leg {
    pub variable: LegVariable,
    pub target: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchingSpec {
    /// Cartesian distance to P2 at which the formulation changes.
    pub radius: f64,
    /// Relative half-width of the hysteresis band.
    pub hysteresis: f64,
    pub max_switches: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareSpec {
    pub ks_steps: Vec<f64>,
    pub cartesian_steps: Vec<f64>,
    pub s_backward: f64,
    pub s_forward: f64,
    pub failure_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSpec {
    pub step: f64,
    pub final_anomaly: Option<f64>,
    pub lambda: f64,
    pub jump_threshold: f64,
    pub renorm_threshold: f64,
    pub w0: [f64; 8],
}

/// Two scanned coordinates with their ranges and cell counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub x_axis: Axis,
    pub x_range: [f64; 2],
    pub nx: usize,
    pub y_axis: Axis,
    pub y_range: [f64; 2],
    pub ny: usize,
    pub indicator: IndicatorKind,
    /// Ranges are offsets from the base initial condition.
    pub relative: bool,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::InvalidConfig("grid needs at least 2 cells per axis".into()));
        }
        if self.x_axis == self.y_axis {
            return Err(Error::InvalidConfig("grid axes must differ".into()));
        }
        let ok = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] < r[1];
        if !ok(self.x_range) || !ok(self.y_range) {
            return Err(Error::InvalidConfig("grid ranges must be finite with min < max".into()));
        }
        Ok(())
    }

    /// Coordinate value of column `i` (or row `j` for the y axis).
    pub fn x_value(&self, i: usize) -> f64 {
        lerp(self.x_range, i, self.nx)
    }

    pub fn y_value(&self, j: usize) -> f64 {
        lerp(self.y_range, j, self.ny)
    }
}

fn lerp(r: [f64; 2], k: usize, n: usize) -> f64 {
    r[0] + (r[1] - r[0]) * k as f64 / (n - 1) as f64
}

impl From<&GridSection> for GridSpec {
    fn from(g: &GridSection) -> Self {
        GridSpec {
            x_axis: g.x_axis,
            x_range: [g.x_min, g.x_max],
            nx: g.nx,
            y_axis: g.y_axis,
            y_range: [g.y_min, g.y_max],
            ny: g.ny,
            indicator: g.indicator,
            relative: g.relative,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub preset: Option<String>,
    pub mode: Option<Mode>,
    pub step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: SystemParams,
    pub initial: InitialCondition,
    pub f0: f64,
    pub offset_position: Vec3,
    pub offset_velocity: Vec3,
    pub mode: Mode,
    /// Step in the active variable of `mode`.
    pub step: f64,
    /// Cartesian step used by switching mode.
    pub cartesian_step: f64,
    pub legs: Vec<Leg>,
    pub max_steps: usize,
    pub far_distance: f64,
    pub switching: SwitchingSpec,
    pub compare: CompareSpec,
    pub indicator: IndicatorSpec,
    pub grid: Option<GridSpec>,
}

/// Default KS step.
pub const DEFAULT_KS_STEP: f64 = PI * 1e-3;
/// Default Cartesian step.
pub const DEFAULT_CARTESIAN_STEP: f64 = 2.0 * PI * 1e-5;

impl Scenario {
    pub fn from_config(cfg: &Config, ov: &Overrides) -> Result<Self> {
        let mut cfg = cfg.clone();
        if let Some(p) = &ov.preset {
            cfg.system.preset = Some(p.clone());
            cfg.system.mu = None;
            cfg.system.eps = None;
        }
        let params = cfg.system_params()?;
        let ini = &cfg.initial;
        let initial = match (ini.position, ini.momenta, ini.velocity, &ini.elements) {
            (Some(r), Some(p), None, None) => InitialCondition::Momenta { r, p },
            (Some(r), None, Some(v), None) => InitialCondition::Velocity { r, v },
            (None, None, None, Some(e)) => InitialCondition::Elements {
                el: OrbitalElements {
                    a: e.a,
                    e: e.e,
                    i: e.i,
                    omega: e.omega,
                    node: e.node,
                    f_true: e.f,
                },
                grav_param: e.grav_param.unwrap_or(1.0 - params.mu),
            },
            _ => {
                return Err(Error::InvalidConfig(
                    "[initial] needs exactly one of position+momenta, position+velocity or elements".into(),
                ))
            }
        };
        let prop = &cfg.propagation;
        let mode = ov.mode.unwrap_or(prop.mode);
        let default_step = match mode {
            Mode::Cartesian => DEFAULT_CARTESIAN_STEP,
            _ => DEFAULT_KS_STEP,
        };
        let step = ov.step.or(prop.step.map(|s| s.0)).unwrap_or(default_step);
        let cartesian_step = prop.cartesian_step.map(|s| s.0).unwrap_or(DEFAULT_CARTESIAN_STEP);
        for (name, v) in [("step", step), ("cartesian_step", cartesian_step)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        let legs = prop
            .legs
            .iter()
            .map(|l| Leg {
                variable: l.variable,
                target: l.target.0,
            })
            .collect();
        let ind = &cfg.indicator;
        let grid = cfg.grid.as_ref().map(GridSpec::from);
        if let Some(g) = &grid {
            g.validate()?;
        }
        let scenario = Scenario {
            params,
            initial,
            f0: ini.f0.0,
            offset_position: ini.offset_position.unwrap_or([0.0; 3]),
            offset_velocity: ini.offset_velocity.unwrap_or([0.0; 3]),
            mode,
            step,
            cartesian_step,
            legs,
            max_steps: prop.max_steps,
            far_distance: prop.far_distance,
            switching: SwitchingSpec {
                radius: prop.switch_radius.unwrap_or(params.hill_radius_q()),
                hysteresis: prop.hysteresis,
                max_switches: 100,
            },
            compare: CompareSpec {
                ks_steps: prop.ks_steps.iter().map(|s| s.0).collect(),
                cartesian_steps: prop.cartesian_steps.iter().map(|s| s.0).collect(),
                s_backward: prop.s_backward.map(|s| s.0).unwrap_or(-3.7 * PI),
                s_forward: prop.s_forward.map(|s| s.0).unwrap_or(3.5 * PI),
                failure_tolerance: prop.failure_tolerance,
            },
            indicator: IndicatorSpec {
                step: ind.step.0,
                final_anomaly: ind.final_anomaly.map(|s| s.0),
                lambda: ind.lambda.unwrap_or(params.conventional_hill_radius()),
                jump_threshold: ind.jump_threshold,
                renorm_threshold: ind.renorm_threshold,
                w0: ind.w0.unwrap_or_else(default_tangent),
            },
            grid,
        };
        Ok(scenario)
    }

    /// Rotating-pulsating position and `dr/df` at `f0`, offsets included.
    pub fn rotating_state(&self) -> Result<(Vec3, Vec3)> {
        let (r, v) = match self.initial {
            InitialCondition::Momenta { r, p } => (r, velocity_from_momenta(&r, &p)),
            InitialCondition::Velocity { r, v } => (r, v),
            InitialCondition::Elements { el, grav_param } => {
                let st = heliocentric_elements_to_inertial(&el, self.f0, &self.params, grav_param)?;
                inertial_to_rotating_state(&st, self.f0, &self.params)
            }
        };
        Ok((add(&r, &self.offset_position), add(&v, &self.offset_velocity)))
    }

    /// Initial Cartesian state with the action set to `-H` so that the
    /// extended Hamiltonian vanishes.
    pub fn initial_state(&self) -> Result<CartesianState> {
        match self.initial {
            // keep the given momenta bit for bit when no offset applies
            InitialCondition::Momenta { r, p } if self.offset_velocity == [0.0; 3] => {
                admissible_state(add(&r, &self.offset_position), p, self.f0, &self.params)
            }
            _ => {
                let (r, v) = self.rotating_state()?;
                admissible_state(r, momenta_from_velocity(&r, &v), self.f0, &self.params)
            }
        }
    }
}

/// Cartesian state with `Phi = -H(r, p, f)`.
pub fn admissible_state(r: Vec3, p: Vec3, f: f64, params: &SystemParams) -> Result<CartesianState> {
    let mut c = CartesianState { r, p, f, action: 0.0 };
    c.action = -hamiltonian_cartesian(&c, params)?;
    Ok(c)
}

/// Concatenated KS legs.
#[derive(Debug, Clone, PartialEq)]
pub struct KsRun {
    pub trajectory: Trajectory<10>,
    /// Iterations per leg.
    pub leg_iterations: Vec<usize>,
}

/// Concatenated Cartesian legs; the independent variable is `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct CartesianRun {
    pub trajectory: Trajectory<8>,
    pub leg_iterations: Vec<usize>,
}

fn append<const N: usize>(acc: &mut Option<Trajectory<N>>, leg: Trajectory<N>) {
    match acc {
        None => *acc = Some(leg),
        Some(t) => {
            // the first sample of a leg repeats the last one of the previous
            t.samples.extend(leg.samples.into_iter().skip(1));
            t.iteration_count += leg.iteration_count;
            t.final_time = leg.final_time;
            t.final_state = leg.final_state;
        }
    }
}

/// Runs the KS legs from `start`. An `f` leg lands on the target angle, an
/// `s` leg on the target fictitious time.
pub fn propagate_ks_legs(
    start: &KsState,
    legs: &[Leg],
    step: f64,
    max_steps: usize,
    record: bool,
    params: &SystemParams,
) -> Result<KsRun> {
    let field = |_s: f64, y: &[f64; 10]| vector_field_ks(y, params);
    let mut acc: Option<Trajectory<10>> = None;
    let mut leg_iterations = Vec::new();
    let (mut s, mut y) = (start.s, start.to_array());
    for leg in legs {
        let endpoint = match leg.variable {
            LegVariable::S => Endpoint::Time(leg.target),
            LegVariable::F => Endpoint::Coordinate {
                index: 4,
                target: leg.target,
                backward: leg.target < y[4],
            },
        };
        let cfg = StepperConfig {
            step,
            max_steps,
            endpoint,
            record,
        };
        let t = propagate(&field, s, &y, &cfg)?;
        leg_iterations.push(t.iteration_count);
        s = t.final_time;
        y = t.final_state;
        append(&mut acc, t);
    }
    let trajectory = acc.unwrap_or(Trajectory {
        samples: if record { vec![(s, y)] } else { Vec::new() },
        iteration_count: 0,
        final_time: s,
        final_state: y,
    });
    Ok(KsRun {
        trajectory,
        leg_iterations,
    })
}

/// Runs Cartesian legs, which must all target `f`.
pub fn propagate_cartesian_legs(
    start: &CartesianState,
    legs: &[Leg],
    step: f64,
    max_steps: usize,
    record: bool,
    params: &SystemParams,
) -> Result<CartesianRun> {
    let field = |_f: f64, y: &[f64; 8]| vector_field_cartesian(y, params);
    let mut acc: Option<Trajectory<8>> = None;
    let mut leg_iterations = Vec::new();
    let (mut f, mut y) = (start.f, start.to_array());
    for leg in legs {
        if leg.variable != LegVariable::F {
            return Err(Error::InvalidConfig("Cartesian legs must target f".into()));
        }
        let cfg = StepperConfig {
            step,
            max_steps,
            endpoint: Endpoint::Time(leg.target),
            record,
        };
        let t = propagate(&field, f, &y, &cfg)?;
        leg_iterations.push(t.iteration_count);
        f = t.final_time;
        y = t.final_state;
        append(&mut acc, t);
    }
    let trajectory = acc.unwrap_or(Trajectory {
        samples: if record { vec![(f, y)] } else { Vec::new() },
        iteration_count: 0,
        final_time: f,
        final_state: y,
    });
    Ok(CartesianRun {
        trajectory,
        leg_iterations,
    })
}

/// One output row in rotating-pulsating Cartesian variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    /// Fictitious time; NaN for Cartesian samples.
    pub s: f64,
    pub state: CartesianState,
    pub mode: Mode,
    /// Extended Hamiltonian residual of the active formulation.
    pub residual: f64,
}

/// Rows of a KS run pushed down to Cartesian variables.
pub fn rows_from_ks(traj: &Trajectory<10>, params: &SystemParams) -> Result<Vec<TrajectoryRow>> {
    traj.samples
        .iter()
        .map(|(s, y)| {
            let ks = KsState::from_array(y, *s);
            let r2 = ks.distance_to_secondary();
            Ok(TrajectoryRow {
                s: *s,
                state: push_down(&ks, params)?,
                mode: Mode::Ks,
                residual: hamiltonian_regularized_array(y, params)? / r2,
            })
        })
        .collect()
}

pub fn rows_from_cartesian(traj: &Trajectory<8>, params: &SystemParams) -> Result<Vec<TrajectoryRow>> {
    traj.samples
        .iter()
        .map(|(_, y)| {
            let c = CartesianState::from_array(y);
            Ok(TrajectoryRow {
                s: f64::NAN,
                state: c,
                mode: Mode::Cartesian,
                residual: extended_hamiltonian(&c, params)?,
            })
        })
        .collect()
}

/// Outcome of `propagate` for any mode.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationOutput {
    pub rows: Vec<TrajectoryRow>,
    pub iteration_count: usize,
    pub final_state: CartesianState,
    pub switches: Vec<crate::harness::switching::SwitchEvent>,
}

/// Propagates the scenario's legs in its mode.
pub fn run_propagate(sc: &Scenario) -> Result<PropagationOutput> {
    if sc.legs.is_empty() {
        return Err(Error::InvalidConfig("[propagation] legs is empty".into()));
    }
    let start = sc.initial_state()?;
    match sc.mode {
        Mode::Ks => {
            let run = propagate_ks_legs(&lift(&start, &sc.params)?, &sc.legs, sc.step, sc.max_steps, true, &sc.params)?;
            let last = KsState::from_array(&run.trajectory.final_state, run.trajectory.final_time);
            Ok(PropagationOutput {
                rows: rows_from_ks(&run.trajectory, &sc.params)?,
                iteration_count: run.trajectory.iteration_count,
                final_state: push_down(&last, &sc.params)?,
                switches: Vec::new(),
            })
        }
        Mode::Cartesian => {
            let run = propagate_cartesian_legs(&start, &sc.legs, sc.step, sc.max_steps, true, &sc.params)?;
            Ok(PropagationOutput {
                rows: rows_from_cartesian(&run.trajectory, &sc.params)?,
                iteration_count: run.trajectory.iteration_count,
                final_state: CartesianState::from_array(&run.trajectory.final_state),
                switches: Vec::new(),
            })
        }
        Mode::Switching => {
            let mut rows = Vec::new();
            let mut switches = Vec::new();
            let mut iterations = 0;
            let mut state = start;
            for leg in &sc.legs {
                if leg.variable != LegVariable::F {
                    return Err(Error::InvalidConfig("switching legs must target f".into()));
                }
                let out = crate::harness::switching::run_switching(&state, leg.target, sc)?;
                let skip = usize::from(!rows.is_empty());
                rows.extend(out.rows.into_iter().skip(skip));
                switches.extend(out.switches);
                iterations += out.iteration_count;
                state = out.final_state;
            }
            Ok(PropagationOutput {
                rows,
                iteration_count: iterations,
                final_state: state,
                switches,
            })
        }
    }
}
