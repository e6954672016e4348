use ks_er3bp::harness::scan::{run_cell, run_scan};
use ks_er3bp::harness::{Config, IndicatorKind, Overrides, Scenario};

fn scenario(text: &str) -> Scenario {
    Scenario::from_config(&Config::from_toml(text).unwrap(), &Overrides::default()).unwrap()
}

/// Small grid around the Sun-Earth reference orbit over a short span.
fn near_reference() -> Scenario {
    let text = include_str!("../configs/earth_scan.toml")
        .replace("nx = 100", "nx = 4")
        .replace("ny = 100", "ny = 3")
        .replace("final_anomaly = 50.97393881096088", "final_anomaly = 2.5");
    scenario(&text)
}

#[test]
fn far_from_the_planet_the_chart_is_flat() {
    let sc = scenario(
        r#"
        [system]
        preset = "sun-earth"
        [initial]
        position = [0.3, 0.0, 0.0]
        velocity = [0.0, 1.5, 0.0]
        [indicator]
        step = 0.05
        final_anomaly = 3.0
        [grid]
        x_axis = "x"
        x_min = -0.01
        x_max = 0.01
        nx = 4
        y_axis = "zp"
        y_min = 0.0
        y_max = 0.02
        ny = 4
        relative = true
        "#,
    );
    let out = run_scan(&sc, 2).unwrap();
    assert_eq!(out.failed_count(), 0);
    assert!(out.raster(IndicatorKind::Mfli).iter().all(|v| *v == 0.0));
    assert!(out.raster(IndicatorKind::Rfli).iter().all(|v| *v > 0.0));
}

#[test]
fn cells_are_isolated_and_order_independent() {
    let sc = near_reference();
    let grid = sc.grid.unwrap();
    let a = run_scan(&sc, 1).unwrap();
    let b = run_scan(&sc, 4).unwrap();
    assert_eq!(a, b);
    let alone = run_cell(&sc, &grid, 2.5, 2, 1);
    assert_eq!(&alone, a.cell(2, 1));
    // the encounter near f = 1.85 opens the window for every cell
    assert!(a.raster(IndicatorKind::Mfli).iter().all(|v| *v > 0.0));
}

#[test]
fn absolute_axes_set_the_coordinate() {
    let mut sc = near_reference();
    let (r, v) = sc.rotating_state().unwrap();
    let g = sc.grid.as_mut().unwrap();
    g.relative = false;
    g.x_range = [r[0] - 1e-4, r[0] + 1e-4];
    g.y_range = [v[0] - 1e-4, v[0] + 1e-4];
    g.nx = 3;
    g.ny = 3;
    let absolute = run_scan(&sc, 1).unwrap();
    let mut rel = near_reference();
    let g = rel.grid.as_mut().unwrap();
    g.x_range = [-1e-4, 1e-4];
    g.y_range = [-1e-4, 1e-4];
    g.nx = 3;
    g.ny = 3;
    let relative = run_scan(&rel, 1).unwrap();
    let (a, b) = (absolute.cell(1, 1), relative.cell(1, 1));
    assert!((a.mfli - b.mfli).abs() < 1e-9 * a.mfli.abs().max(1.0));
}
