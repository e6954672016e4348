//! A coarse mFLI chart around the Sun-Earth reference orbit and its
//! high-value components. Pass `nx ny` to change the resolution.
//!
//!     cargo run --release --example scan_grid -- 30 30

use ks_er3bp::harness::raster::{components_above, quantile, spearman};
use ks_er3bp::harness::scan::run_scan;
use ks_er3bp::harness::{Config, IndicatorKind, Overrides, Scenario};

fn main() -> ks_er3bp::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let (nx, ny) = (args.first().copied().unwrap_or(24), args.get(1).copied().unwrap_or(24));
    let mut sc = Scenario::from_config(&Config::from_toml(include_str!("../configs/earth_scan.toml"))?, &Overrides::default())?;
    if let Some(g) = sc.grid.as_mut() {
        g.nx = nx;
        g.ny = ny;
    }
    let out = run_scan(&sc, 0)?;
    let mfli = out.raster(IndicatorKind::Mfli);
    let dt = out.raster(IndicatorKind::Tisserand);
    let q90 = quantile(&mfli, 0.9).unwrap_or(f64::NAN);
    println!("{nx}x{ny} cells, {} failed, 90th percentile {q90:.3}", out.failed_count());
    for c in components_above(&mfli, nx, q90).iter().take(5) {
        println!("  component of {} cells, aspect {:.2}, axis {:.0} deg", c.size(), c.aspect, c.angle_deg);
    }
    println!("Spearman(|dT|, mFLI) = {:.3}", spearman(&dt, &mfli).unwrap_or(f64::NAN));

    // coarse text rendering, rows from high to low dx/df
    let shades = [' ', '.', ':', '-', '=', '+', '*', '#', '%', '@'];
    let top = quantile(&mfli, 0.99).unwrap_or(1.0).max(1e-12);
    for j in (0..ny).rev() {
        let row: String = (0..nx)
            .map(|i| {
                let v = mfli[j * nx + i];
                if v.is_nan() {
                    '?'
                } else {
                    shades[((v / top).clamp(0.0, 1.0) * 9.0) as usize]
                }
            })
            .collect();
        println!("|{row}|");
    }
    Ok(())
}
