//! KS propagation of the Jupiter close approach over the two legs of the
//! accuracy table, with the drift of the regularized Hamiltonian.
//!
//!     cargo run --release --example propagate_ks

use ks_er3bp::dynamics::hamiltonian_regularized_normalized;
use ks_er3bp::harness::scenario::run_propagate;
use ks_er3bp::harness::{Config, Overrides, Scenario};
use ks_er3bp::linalg::norm;

fn main() -> ks_er3bp::Result<()> {
    let cfg = Config::from_toml(include_str!("../configs/jupiter_flyby.toml"))?;
    let sc = Scenario::from_config(&cfg, &Overrides::default())?;
    let out = run_propagate(&sc)?;

    let worst = out.rows.iter().map(|r| r.residual.abs()).fold(0.0, f64::max);
    let closest = out
        .rows
        .iter()
        .min_by(|a, b| a.state.distance_to_secondary(&sc.params).total_cmp(&b.state.distance_to_secondary(&sc.params)))
        .expect("at least one sample");
    println!("iterations           {}", out.iteration_count);
    println!("final f              {:.16}", out.final_state.f);
    println!("final |r|            {:.16}", norm(&out.final_state.r));
    println!("closest approach     d = {:.6e} at f = {:.6}", closest.state.distance_to_secondary(&sc.params), closest.state.f);
    println!("max |K / |u|^2|      {worst:.3e}");

    let start = ks_er3bp::ks::lift(&sc.initial_state()?, &sc.params)?;
    println!("initial |K / |u|^2|  {:.3e}", hamiltonian_regularized_normalized(&start, &sc.params)?.abs());
    Ok(())
}
