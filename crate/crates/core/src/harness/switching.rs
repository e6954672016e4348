//! Mixed propagation: Cartesian equations away from P2, KS equations inside
//! a ball around it.

use serde::Serialize;

use crate::dynamics::{extended_hamiltonian, hamiltonian_regularized_normalized, vector_field_cartesian, vector_field_ks};
use crate::error::{Error, Result};
use crate::harness::config::Mode;
use crate::harness::scenario::{rows_from_cartesian, rows_from_ks, Scenario, TrajectoryRow};
use crate::integrator::{propagate_observed, Control, Endpoint, StepperConfig};
use crate::ks::{lift, push_down, CartesianState, KsState};

/// A change of formulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SwitchEvent {
    pub f: f64,
    pub to: Mode,
    /// Distance to P2 at the switch.
    pub distance: f64,
    /// Extended Hamiltonian of the formulation being left.
    pub before: f64,
    /// Extended Hamiltonian of the formulation being entered.
    pub after: f64,
}

impl SwitchEvent {
    pub fn jump(&self) -> f64 {
        (self.after - self.before).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingOutput {
    pub rows: Vec<TrajectoryRow>,
    pub switches: Vec<SwitchEvent>,
    pub iteration_count: usize,
    pub final_state: CartesianState,
}

/// Propagates from `start` to the true anomaly `target_f`, switching to KS
/// below `(1 - h) R` and back to Cartesian above `(1 + h) R`.
pub fn run_switching(start: &CartesianState, target_f: f64, sc: &Scenario) -> Result<SwitchingOutput> {
    let params = &sc.params;
    let spec = sc.switching;
    if !(spec.radius > 0.0) || !(0.0..1.0).contains(&spec.hysteresis) {
        return Err(Error::InvalidConfig("switching radius must be positive, hysteresis in [0, 1)".into()));
    }
    let inner = spec.radius * (1.0 - spec.hysteresis);
    let outer = spec.radius * (1.0 + spec.hysteresis);
    let backward = target_f < start.f;
    let done = |f: f64| if backward { f <= target_f } else { f >= target_f };

    let cart_field = |_f: f64, y: &[f64; 8]| vector_field_cartesian(y, params);
    let ks_field = |_s: f64, y: &[f64; 10]| vector_field_ks(y, params);

    let mut rows: Vec<TrajectoryRow> = Vec::new();
    let mut switches = Vec::new();
    let mut iterations = 0usize;
    let mut cart = *start;
    let mut s = 0.0;
    let mut in_ks = start.distance_to_secondary(params) < spec.radius;
    let mut ks = if in_ks { Some(lift(start, params)?) } else { None };

    while !done(cart.f) {
        let mut crossed = false;
        if in_ks {
            let k0 = ks.take().expect("KS state present in KS mode");
            let cfg = StepperConfig {
                step: sc.step,
                max_steps: sc.max_steps,
                endpoint: Endpoint::Coordinate {
                    index: 4,
                    target: target_f,
                    backward,
                },
                record: true,
            };
            let traj = propagate_observed(&ks_field, k0.s, &k0.to_array(), &cfg, |_, y| {
                let r2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2] + y[3] * y[3];
                if r2 > outer {
                    crossed = true;
                    Control::Stop
                } else {
                    Control::Continue
                }
            })?;
            iterations += traj.iteration_count;
            let seg = rows_from_ks(&traj, params)?;
            rows.extend(seg.into_iter().skip(usize::from(!rows.is_empty())));
            let last = KsState::from_array(&traj.final_state, traj.final_time);
            s = traj.final_time;
            cart = push_down(&last, params)?;
            if crossed && !done(cart.f) {
                switches.push(SwitchEvent {
                    f: cart.f,
                    to: Mode::Cartesian,
                    distance: last.distance_to_secondary(),
                    before: hamiltonian_regularized_normalized(&last, params)?,
                    after: extended_hamiltonian(&cart, params)?,
                });
                in_ks = false;
            } else {
                ks = Some(last);
            }
        } else {
            let cfg = StepperConfig {
                step: sc.cartesian_step,
                max_steps: sc.max_steps,
                endpoint: Endpoint::Time(target_f),
                record: true,
            };
            let traj = propagate_observed(&cart_field, cart.f, &cart.to_array(), &cfg, |_, y| {
                let c = CartesianState::from_array(y);
                if c.distance_to_secondary(params) < inner {
                    crossed = true;
                    Control::Stop
                } else {
                    Control::Continue
                }
            })?;
            iterations += traj.iteration_count;
            let seg = rows_from_cartesian(&traj, params)?;
            rows.extend(seg.into_iter().skip(usize::from(!rows.is_empty())));
            cart = CartesianState::from_array(&traj.final_state);
            if crossed && !done(cart.f) {
                let mut k = lift(&cart, params)?;
                k.s = s;
                switches.push(SwitchEvent {
                    f: cart.f,
                    to: Mode::Ks,
                    distance: cart.distance_to_secondary(params),
                    before: extended_hamiltonian(&cart, params)?,
                    after: hamiltonian_regularized_normalized(&k, params)?,
                });
                ks = Some(k);
                in_ks = true;
            }
        }
        if switches.len() > spec.max_switches {
            return Err(Error::Chattering {
                switches: switches.len(),
            });
        }
    }
    Ok(SwitchingOutput {
        rows,
        switches,
        iteration_count: iterations,
        final_state: cart,
    })
}
