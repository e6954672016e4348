//! Accuracy of Cartesian and KS propagation through the Jupiter close
//! approach. Coarse Cartesian steps lose the trajectory; KS steps a hundred
//! times larger do not.
//!
//!     cargo run --release --example compare_formulations

use std::f64::consts::PI;

use ks_er3bp::harness::compare::run_compare;
use ks_er3bp::harness::{Config, Mode, Overrides, Scenario};

fn main() -> ks_er3bp::Result<()> {
    let cfg = Config::from_toml(include_str!("../configs/accuracy_table.toml"))?;
    let mut sc = Scenario::from_config(&cfg, &Overrides::default())?;
    // the finest Cartesian row takes a few seconds; skip it here
    sc.compare.cartesian_steps = vec![2.0 * PI * 1e-5, 2.0 * PI * 1e-4, 2.0 * PI * 1e-3];
    sc.compare.ks_steps = vec![PI * 1e-4, PI * 1e-3, PI * 1e-2, PI * 1e-1];
    let table = run_compare(&sc)?;

    println!("targets f- = {:.16}  f+ = {:.16}", table.targets[0], table.targets[1]);
    println!("{:<10} {:>12} {:>20} {:>20} {:>10} {:>10}  status", "mode", "step", "|r-|", "|r+|", "residual", "iters");
    for r in &table.rows {
        let mode = if r.formulation == Mode::Ks { "ks" } else { "cartesian" };
        println!(
            "{mode:<10} {:>12.4e} {:>20.16} {:>20.16} {:>10.2e} {:>10}  {}",
            r.step,
            r.r_minus,
            r.r_plus,
            r.residual_plus,
            r.iterations,
            if r.failed { "failed" } else { "ok" }
        );
    }
    Ok(())
}
