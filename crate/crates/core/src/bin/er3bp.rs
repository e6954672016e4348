use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ks_er3bp::harness::checks::run_checks;
use ks_er3bp::harness::compare::{run_compare, write_compare_csv};
use ks_er3bp::harness::encounter::run_encounter;
use ks_er3bp::harness::output::{
    create, raster_sidecar, write_cells_csv, write_gamma_csv, write_inertial_csv, write_raster_bin,
    write_raster_csv, write_switches_csv, write_trajectory_csv,
};
use ks_er3bp::harness::scan::run_scan;
use ks_er3bp::harness::scenario::run_propagate;
use ks_er3bp::harness::{Config, Mode, Overrides, Scenario};
use ks_er3bp::encounters::write_jsonl;
use ks_er3bp::Error;

#[derive(Parser)]
#[command(name = "er3bp", version, about = "KS-regularized elliptic restricted three-body propagation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_parser = ["sun-jupiter", "sun-earth"])]
    preset: Option<String>,
    #[arg(long, global = true, value_parser = ["cartesian", "ks", "switching"])]
    mode: Option<String>,
    /// Step in the independent variable of the selected mode.
    #[arg(long, global = true)]
    step: Option<f64>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Scan workers; 0 lets rayon decide.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Seed of the randomized states used by `check`.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Single trajectory over the configured legs.
    Propagate,
    /// Cartesian versus KS accuracy table.
    Compare,
    /// Close-encounter protocol with transit records and the Gamma history.
    Encounter,
    /// Indicator raster over the configured grid.
    Scan,
    /// Invariant suite on the scenario.
    Check,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig(_) => 1,
        _ => 2,
    }
}

fn scenario(cli: &Cli) -> ks_er3bp::Result<Scenario> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::InvalidConfig("--config is required".into()))?;
    let cfg = Config::load(path)?;
    let ov = Overrides {
        preset: cli.preset.clone(),
        mode: cli.mode.as_deref().map(str::parse::<Mode>).transpose()?,
        step: cli.step,
    };
    Scenario::from_config(&cfg, &ov)
}

fn file(dir: &Path, name: &str) -> ks_er3bp::Result<std::io::BufWriter<std::fs::File>> {
    create(&dir.join(name))
}

fn json(dir: &Path, name: &str, value: &impl serde::Serialize) -> ks_er3bp::Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), text + "\n")?;
    Ok(())
}

fn run(cli: &Cli) -> ks_er3bp::Result<u8> {
    let sc = scenario(cli)?;
    let dir = cli.out.as_path();
    match cli.command {
        Command::Propagate => {
            let out = run_propagate(&sc)?;
            write_trajectory_csv(&out.rows, &sc.params, file(dir, "trajectory.csv")?)?;
            write_inertial_csv(&out.rows, &sc.params, file(dir, "inertial.csv")?)?;
            if sc.mode == Mode::Switching {
                write_switches_csv(&out.switches, file(dir, "switches.csv")?)?;
            }
            let c = &out.final_state;
            println!("iterations {}", out.iteration_count);
            println!("final f {:.16e}", c.f);
            println!("final r {:.16e} {:.16e} {:.16e}", c.r[0], c.r[1], c.r[2]);
            if sc.mode == Mode::Switching {
                let worst = out.switches.iter().map(|s| s.jump()).fold(0.0, f64::max);
                println!("switches {} (largest energy jump {worst:e})", out.switches.len());
            }
            Ok(0)
        }
        Command::Compare => {
            let table = run_compare(&sc)?;
            write_compare_csv(&table, file(dir, "compare.csv")?)?;
            write_compare_csv(&table, std::io::stdout().lock())?;
            Ok(0)
        }
        Command::Encounter => {
            let out = run_encounter(&sc)?;
            write_trajectory_csv(&out.rows, &sc.params, file(dir, "trajectory.csv")?)?;
            write_gamma_csv(&out.gamma_series, file(dir, "gamma.csv")?)?;
            write_jsonl(&out.records, file(dir, "encounters.jsonl")?)?;
            json(dir, "hyperbolicity.json", &out.reports)?;
            for (r, rep) in out.records.iter().zip(&out.reports) {
                println!(
                    "transit f {:.6}..{:.6}  closest f {:.6} d {:.3e}  Gamma0 {:.10}  hyperbolic {}",
                    r.f_entry,
                    r.f_exit,
                    r.f_min,
                    r.d2_min,
                    r.gamma_0,
                    rep.as_ref().map_or("open".to_string(), |h| h.hyperbolic.to_string())
                );
            }
            match out.error {
                Some(e) => {
                    eprintln!("error: {e} (partial output written)");
                    Ok(exit_code(&e))
                }
                None => Ok(0),
            }
        }
        Command::Scan => {
            let grid = sc.grid.ok_or_else(|| Error::InvalidConfig("scenario has no [grid] section".into()))?;
            let out = run_scan(&sc, cli.threads)?;
            let values = out.raster(grid.indicator);
            write_raster_csv(&values, grid.nx, file(dir, "raster.csv")?)?;
            write_raster_bin(&values, file(dir, "raster.bin")?)?;
            json(dir, "raster.json", &raster_sidecar(&out, grid.indicator, "raster.bin"))?;
            write_cells_csv(&out, file(dir, "cells.csv")?)?;
            let failed = out.failed_count();
            println!("cells {}  failed {failed}", out.cells.len());
            Ok(if failed > 0 { 3 } else { 0 })
        }
        Command::Check => {
            let report = run_checks(&sc, cli.seed)?;
            json(dir, "checks.json", &report)?;
            for c in &report {
                let tag = if c.passed { "pass" } else { "FAIL" };
                println!("{tag} {:<44} {:.3e} (tolerance {:.1e})", c.name, c.value, c.tolerance);
            }
            Ok(if report.iter().all(|c| c.passed) { 0 } else { 2 })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
