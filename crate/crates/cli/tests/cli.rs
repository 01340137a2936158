use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use orbfuse::dynamics::{propagate, write_ephemeris, ForceModel, IntegratorConfig, PhysicalConstants};
use orbfuse::tle::{checksum, parse_tle, tle_to_eci, TleModelParams};

const LINE1: &str = "1 25544U 98067A   08264.51782528 -.00002182  00000-0 -11606-4 0  2927";
const LINE2: &str = "2 25544  51.6416 247.4627 0006703 130.5360 325.0288 15.72125391563537";

fn orbfuse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orbfuse")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// `LINE1` with a later epoch and a fixed-up checksum.
fn later_line1() -> String {
    let body = LINE1[..68].replace("08264.51782528", "08264.61782528");
    format!("{body}{}", checksum(&body))
}

#[test]
fn parse_reports_each_record() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.tle");
    fs::write(&good, format!("ISS (ZARYA)\n{LINE1}\n{LINE2}\n")).unwrap();
    let o = orbfuse(&["parse", good.to_str().unwrap()]);
    assert!(o.status.success(), "{o:?}");
    let text = stdout(&o);
    assert!(text.contains("ok catalog 25544"));
    assert!(text.contains("1 records, 0 invalid"));

    let bad = dir.path().join("bad.tle");
    let corrupted = LINE2.replacen("51.6416", "51.6417", 1);
    fs::write(&bad, format!("{LINE1}\n{LINE2}\n{LINE1}\n{corrupted}\n")).unwrap();
    let o = orbfuse(&["parse", bad.to_str().unwrap()]);
    assert!(!o.status.success());
    let text = stdout(&o);
    assert!(text.contains("invalid"));
    assert!(text.contains("2 records, 1 invalid"));
}

#[test]
fn calibrate_prints_usable_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let c = PhysicalConstants::default();
    let second = later_line1();
    let tles = dir.path().join("iss.tle");
    fs::write(&tles, format!("{LINE1}\n{LINE2}\n{second}\n{LINE2}\n")).unwrap();

    let first = tle_to_eci(&parse_tle(LINE1, LINE2).unwrap(), &c).unwrap();
    let end = propagate(&first, first.epoch + 0.2 * 86_400.0, None, &c, &ForceModel::default(), &IntegratorConfig::default()).unwrap();
    let eph = dir.path().join("eph.csv");
    write_ephemeris(fs::File::create(&eph).unwrap(), &[first, end]).unwrap();
    let report = dir.path().join("pairs.csv");

    let o = orbfuse(&[
        "calibrate",
        tles.to_str().unwrap(),
        eph.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let params: TleModelParams = toml::from_str(&stdout(&o)).unwrap();
    params.validate().unwrap();
    assert_eq!(params.foot_factor, TleModelParams::default().foot_factor);
    assert_eq!(fs::read_to_string(&report).unwrap().lines().count(), 3);
}

fn small_config(dir: &Path) -> std::path::PathBuf {
    let cfg = dir.join("small.toml");
    fs::write(
        &cfg,
        r#"
start_epoch = 557928707.0
duration = 14400.0
mc_runs = 3
seed = 4

[truth]
raan_deg = 311.18
inclination_deg = 97.45
arg_perigee_deg = 144.12
mean_motion = 11.07e-4
eccentricity = 0.0011950
mean_anomaly_deg = 216.09

[station]
site = { latitude_deg = 64.8378, longitude_deg = -147.7164, altitude_m = 136.0 }

[tle]
source = "synthesize"
offsets = [13800.0]

[filter]
particles = 50
"#,
    )
    .unwrap();
    cfg
}

#[test]
fn run_writes_metrics_and_honours_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out");
    let o = orbfuse(&[
        "run",
        cfg.to_str().unwrap(),
        "--mc-runs",
        "1",
        "--mode",
        "fused",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("1 filter runs"));
    for name in ["truth.csv", "observations_run0.csv", "tles_run0.csv", "metrics_fused_run0.csv", "metrics_fused_mean.csv"] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    assert!(!out.join("metrics_radar_run0.csv").exists());
    assert!(!out.join("metrics_fused_run1.csv").exists());
}

#[test]
fn bad_input_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("broken.toml");
    fs::write(&cfg, "duration = 10.0\nbogus = 1\n").unwrap();
    let o = orbfuse(&["run", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));

    let o = orbfuse(&["run", "/nonexistent/config.toml"]);
    assert!(!o.status.success());
    let o = orbfuse(&["run", small_config(dir.path()).to_str().unwrap(), "--mode", "sideways"]);
    assert!(!o.status.success());
}
