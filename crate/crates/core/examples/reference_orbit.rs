//! Sun-Earth reference orbit built from heliocentric elements, propagated in
//! KS variables until `F`; reports every Hill transit.
//!
//!     cargo run --release --example reference_orbit

use ks_er3bp::harness::encounter::run_encounter;
use ks_er3bp::harness::{Config, Overrides, Scenario};

fn main() -> ks_er3bp::Result<()> {
    let cfg = Config::from_toml(include_str!("../configs/earth_reference.toml"))?;
    let sc = Scenario::from_config(&cfg, &Overrides::default())?;
    let (r, v) = sc.rotating_state()?;
    println!("rotating state at f0: r = {r:?}");
    println!("                      dr/df = {v:?}");
    let out = run_encounter(&sc)?;
    println!("{} steps to F", out.leg_iterations.iter().sum::<usize>());
    for rec in &out.records {
        println!(
            "transit f {:.4} .. {:.4}: closest d = {:.3e} at f = {:.4} ({:.2} deg), Gamma in [{:.4}, {:.4}]",
            rec.f_entry,
            rec.f_exit,
            rec.d2_min,
            rec.f_min,
            rec.f_min.to_degrees(),
            rec.gamma_min,
            rec.gamma_max
        );
    }
    Ok(())
}
