//! The invariant suite of the `check` subcommand on both shipped systems.
//!
//!     cargo run --release --example invariant_checks

use ks_er3bp::harness::checks::run_checks;
use ks_er3bp::harness::{Config, Overrides, Scenario};

fn main() -> ks_er3bp::Result<()> {
    for text in [include_str!("../configs/jupiter_flyby.toml"), include_str!("../configs/earth_reference.toml")] {
        let sc = Scenario::from_config(&Config::from_toml(text)?, &Overrides::default())?;
        println!("mu = {:e}, eps = {}", sc.params.mu, sc.params.eps);
        for c in run_checks(&sc, 42)? {
            println!("  {} {:<44} {:.3e}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.value);
        }
    }
    Ok(())
}
