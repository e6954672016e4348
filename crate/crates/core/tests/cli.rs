use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_er3bp"))
}

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("er3bp-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn write_config(dir: &PathBuf, text: &str) -> PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    let path = dir.join("scenario.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(bin().arg("bogus").status().unwrap().code(), Some(1));
    assert_eq!(bin().arg("propagate").status().unwrap().code(), Some(1));
    let st = bin()
        .args(["propagate", "--mode", "polar", "--config"])
        .arg(config("jupiter_flyby.toml"))
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(1));
    let dir = scratch("badkey");
    let cfg = write_config(&dir, "[system]\npreset = \"sun-jupiter\"\nfoo = 1\n");
    assert_eq!(bin().arg("propagate").arg("--config").arg(cfg).status().unwrap().code(), Some(1));
}

#[test]
fn propagate_writes_trajectory_files() {
    let out = scratch("propagate");
    let st = bin()
        .args(["propagate", "--step", "0.031415926535897934", "--config"])
        .arg(config("jupiter_flyby.toml"))
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&st.stdout).contains("iterations 1090"));
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("s,f,x,y,z,px,py,pz,action,d2,residual,mode"));
    assert_eq!(csv.lines().count(), 1 + 1091);
    let inertial = std::fs::read_to_string(out.join("inertial.csv")).unwrap();
    assert_eq!(inertial.lines().count(), 1 + 1091);
}

#[test]
fn step_limit_is_a_numerical_failure() {
    let dir = scratch("maxsteps");
    let text = include_str!("../configs/jupiter_flyby.toml").replace("[propagation]", "[propagation]\nmax_steps = 5");
    let cfg = write_config(&dir, &text);
    let st = bin().arg("propagate").arg("--config").arg(cfg).arg("--out").arg(&dir).status().unwrap();
    assert_eq!(st.code(), Some(2));
}

#[test]
fn scan_with_failed_cells_is_partial() {
    let dir = scratch("partial");
    let text = include_str!("../configs/earth_scan.toml")
        .replace("nx = 100", "nx = 3")
        .replace("ny = 100", "ny = 2")
        .replace("[indicator]", "[propagation]\nmax_steps = 3\n\n[indicator]");
    let cfg = write_config(&dir, &text);
    let st = bin().arg("scan").arg("--config").arg(cfg).arg("--out").arg(&dir).status().unwrap();
    assert_eq!(st.code(), Some(3));
    let side: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("raster.json")).unwrap()).unwrap();
    assert_eq!(side["failed_cells"], 6);
    assert_eq!(side["nx"], 3);
    assert_eq!(std::fs::read(dir.join("raster.bin")).unwrap().len(), 6 * 8);
}

#[test]
fn check_and_encounter_succeed() {
    let out = scratch("check");
    let st = bin().args(["check", "--seed", "3", "--config"]).arg(config("jupiter_flyby.toml")).arg("--out").arg(&out).output().unwrap();
    assert_eq!(st.status.code(), Some(0), "{}", String::from_utf8_lossy(&st.stdout));
    assert!(out.join("checks.json").exists());

    let st = bin().args(["encounter", "--config"]).arg(config("earth_reference.toml")).arg("--out").arg(&out).output().unwrap();
    assert_eq!(st.status.code(), Some(0));
    let jsonl = std::fs::read_to_string(out.join("encounters.jsonl")).unwrap();
    let rec: serde_json::Value = serde_json::from_str(jsonl.lines().next().unwrap()).unwrap();
    assert!(rec["f_min"].as_f64().unwrap().to_degrees() > 105.0);
    assert!(out.join("gamma.csv").exists());
}

#[test]
fn compare_prints_the_table() {
    let dir = scratch("compare");
    let text = include_str!("../configs/accuracy_table.toml")
        .replace(r#"ks_steps = ["pi*1e-4", "pi*1e-3", "pi*1e-2", "pi*1e-1"]"#, r#"ks_steps = ["pi*1e-2"]"#)
        .replace(r#"cartesian_steps = ["2pi*1e-6", "2pi*1e-5", "2pi*1e-4", "2pi*1e-3"]"#, r#"cartesian_steps = ["2pi*1e-3"]"#);
    let cfg = write_config(&dir, &text);
    let st = bin().arg("compare").arg("--config").arg(cfg).arg("--out").arg(&dir).output().unwrap();
    assert_eq!(st.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&st.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("cartesian,") && l.contains(",true,")));
    assert!(stdout.lines().any(|l| l.starts_with("ks,") && l.contains(",1090,false,")));
}
