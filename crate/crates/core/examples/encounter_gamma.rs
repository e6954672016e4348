//! Transit through the Hill sphere of Jupiter and the Gamma coefficient along
//! it, using the default encounter protocol (backward until far from the
//! planet, then forward for twice as many steps).
//!
//!     cargo run --release --example encounter_gamma

use ks_er3bp::dynamics::origin_exponent;
use ks_er3bp::harness::encounter::run_encounter;
use ks_er3bp::harness::{Config, Overrides, Scenario};

fn main() -> ks_er3bp::Result<()> {
    let mut cfg = Config::from_toml(include_str!("../configs/jupiter_flyby.toml"))?;
    cfg.propagation.legs.clear();
    let sc = Scenario::from_config(&cfg, &Overrides::default())?;
    let out = run_encounter(&sc)?;
    println!("leg iterations {:?}", out.leg_iterations);
    for (rec, rep) in out.records.iter().zip(&out.reports) {
        println!("transit f = {:.6} .. {:.6}", rec.f_entry, rec.f_exit);
        println!("  closest approach d = {:.6e} at f = {:.6}", rec.d2_min, rec.f_min);
        println!("  Gamma at entry {:.10}, range [{:.10}, {:.10}]", rec.gamma_0, rec.gamma_min, rec.gamma_max);
        if let Some(rep) = rep {
            println!("  hyperbolic {} ({})", rep.hyperbolic, rep.reason);
            println!("  mu below threshold {} (threshold {:.3e})", rep.mu_below_threshold, rep.mu_threshold);
        }
        if let Some(k) = origin_exponent(rec.gamma_0) {
            println!("  limit exponents +-{k:.6}");
        }
    }
    Ok(())
}
