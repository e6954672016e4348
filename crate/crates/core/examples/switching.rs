//! Mixed propagation: Cartesian equations away from Jupiter, KS equations
//! inside a ball around it, compared with pure KS propagation.
//!
//!     cargo run --release --example switching

use ks_er3bp::harness::scenario::{propagate_ks_legs, run_propagate};
use ks_er3bp::harness::{Config, Overrides, Scenario};
use ks_er3bp::ks::{lift, push_down, KsState};
use ks_er3bp::linalg::{norm, sub};

fn main() -> ks_er3bp::Result<()> {
    let cfg = Config::from_toml(include_str!("../configs/jupiter_flyby_switching.toml"))?;
    let sc = Scenario::from_config(&cfg, &Overrides::default())?;
    let mixed = run_propagate(&sc)?;
    for e in &mixed.switches {
        println!("switch to {:?} at f = {:.6}, d = {:.5}, energy jump {:.2e}", e.to, e.f, e.distance, e.jump());
    }

    let start = lift(&sc.initial_state()?, &sc.params)?;
    let pure = propagate_ks_legs(&start, &sc.legs, sc.step, sc.max_steps, false, &sc.params)?.trajectory;
    let end = push_down(&KsState::from_array(&pure.final_state, pure.final_time), &sc.params)?;
    println!("final f mixed {:.15} pure KS {:.15}", mixed.final_state.f, end.f);
    println!("position difference {:.3e}", norm(&sub(&mixed.final_state.r, &end.r)));
    Ok(())
}
