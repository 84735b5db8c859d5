use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wipt-opt"))
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, text).unwrap();
    path
}

fn run_config(dir: &Path, text: &str, out: &Path) -> Output {
    let cfg = write_config(dir, text);
    bin().arg("run").arg(&cfg).arg("--out").arg(out).output().unwrap()
}

const SMALL_REGION: &str = r#"{
    "mode": "region",
    "seed": 3,
    "channel": {"kind": "rayleigh", "n_tones": 2},
    "power_dbm": -10,
    "snr_db": 20,
    "region": {"modes": ["pc", "no_wpt"], "grid_size": 4}
}"#;

#[test]
fn quick_validation_passes() {
    let out = bin().args(["validate", "--quick"]).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}\n{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.contains("15 of 15 checks passed"), "{stdout}");
}

#[test]
fn small_region_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let res = run_config(dir.path(), SMALL_REGION, &out);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    for mode in ["pc", "no_wpt"] {
        for stem in ["region", "hull", "solutions"] {
            let csv = std::fs::read_to_string(out.join(format!("{stem}_{mode}.csv"))).unwrap();
            assert!(csv.lines().count() > 1, "{stem}_{mode}.csv is empty");
        }
    }
    let region = std::fs::read_to_string(out.join("region_pc.csv")).unwrap();
    assert_eq!(region.lines().count(), 5);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["run"]["n_tones"], 2);
    assert_eq!(manifest["run"]["channel_seed"], 3);
}

#[test]
fn rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run_config(dir.path(), SMALL_REGION, &a).status.success());
    let res = bin()
        .args(["--threads", "1", "run"])
        .arg(dir.path().join("config.json"))
        .arg("--out")
        .arg(&b)
        .output()
        .unwrap();
    assert!(res.status.success());
    for name in ["region_pc.csv", "hull_pc.csv", "solutions_pc.csv", "region_no_wpt.csv"] {
        let x = std::fs::read(a.join(name)).unwrap();
        let y = std::fs::read(b.join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between runs");
    }
}

#[test]
fn missing_field_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let res = run_config(
        dir.path(),
        r#"{"mode": "region", "channel": {"kind": "flat"}}"#,
        &dir.path().join("out"),
    );
    assert_eq!(res.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains("channel.n_tones"), "{stderr}");
}

#[test]
fn snr_and_noise_together_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let res = run_config(
        dir.path(),
        r#"{"mode": "papr", "snr_db": 20, "noise_w": 1e-7, "papr": {"n_list": [4], "trials": 10}}"#,
        &dir.path().join("out"),
    );
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn unreadable_config_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let res = bin().arg("run").arg(dir.path().join("absent.json")).output().unwrap();
    assert_eq!(res.status.code(), Some(4));
}

#[test]
fn papr_and_scaling_modes_write_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("papr");
    let res = run_config(
        dir.path(),
        r#"{"mode": "papr", "papr": {"n_list": [4, 8], "trials": 2000, "step_db": 0.5}}"#,
        &out,
    );
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let papr = std::fs::read_to_string(out.join("papr.csv")).unwrap();
    assert!(papr.starts_with("N,threshold_db,ccdf_ofdm,papr_multisine_db"));

    let out = dir.path().join("scaling");
    let res = run_config(
        dir.path(),
        r#"{"mode": "scaling", "scaling": {"runs": [
            {"waveform": "ofdm", "strategy": "up", "channel_kind": "flat", "n_list": [2, 4, 8], "trials": 1}
        ]}}"#,
        &out,
    );
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let summary = std::fs::read_to_string(out.join("scaling_summary.csv")).unwrap();
    assert!(summary.lines().nth(1).unwrap().contains(",flat,"), "{summary}");
    assert!(out.join("scaling_00_ofdm_up_flat.csv").exists());
}

#[test]
fn pc_region_at_sixteen_tones() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let res = run_config(
        dir.path(),
        r#"{"mode": "region", "seed": 7, "channel": {"kind": "multipath", "n_tones": 16},
            "snr_db": 20, "region": {"modes": ["pc"], "rbar": [0, 40]}}"#,
        &out,
    );
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let csvs: Vec<_> = std::fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    assert_eq!(csvs.len(), 3, "{csvs:?}");
    let solutions = std::fs::read_to_string(out.join("solutions_pc.csv")).unwrap();
    assert_eq!(solutions.lines().count(), 1 + 2 * 16);
}

#[test]
fn infeasible_everywhere_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let res = run_config(
        dir.path(),
        r#"{"mode": "region", "channel": {"kind": "flat", "n_tones": 2},
            "region": {"modes": ["no_wpt"], "rbar": [1e6, 2e6]}}"#,
        &dir.path().join("out"),
    );
    assert_eq!(res.status.code(), Some(3), "{}", String::from_utf8_lossy(&res.stderr));
}
