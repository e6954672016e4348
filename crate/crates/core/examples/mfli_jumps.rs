//! mFLI histories of three orbits near the Sun-Earth reference orbit. Each
//! deep Earth encounter shows up as a jump of the indicator.
//!
//!     cargo run --release --example mfli_jumps

use ks_er3bp::harness::{Config, Overrides, Scenario};
use ks_er3bp::indicators::{mfli_windows, propagate_with_tangent, IndicatorConfig};
use ks_er3bp::ks::lift;

fn main() -> ks_er3bp::Result<()> {
    let configs = [
        ("l_M", include_str!("../configs/l_m.toml")),
        ("l_L", include_str!("../configs/l_l.toml")),
        ("l_U", include_str!("../configs/l_u.toml")),
    ];
    for (name, text) in configs {
        let sc = Scenario::from_config(&Config::from_toml(text)?, &Overrides::default())?;
        let spec = &sc.indicator;
        let ks = lift(&sc.initial_state()?, &sc.params)?;
        let mut cfg = IndicatorConfig::new(&sc.params, spec.step, spec.final_anomaly.unwrap_or(50.0));
        cfg.lambda = spec.lambda;
        let (_, series) = propagate_with_tangent(&ks, &spec.w0, &sc.params, &cfg)?;
        println!("{name}: mFLI {:.3}  RFLI {:.3}", series.mfli, series.rfli);
        for w in mfli_windows(&series, spec.lambda) {
            let f = series.samples.iter().find(|q| q.s >= w.s_start).map_or(f64::NAN, |q| q.f);
            let tag = if w.increase > spec.jump_threshold { "jump" } else { "    " };
            println!("  {tag} f = {f:7.3}  increase {:.3}  closest |u|^2 {:.2e}", w.increase, w.d2_min);
        }
    }
    Ok(())
}
