//! End-to-end tests of the `lansing` binary: exit codes, output files, and
//! seed determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lansing(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lansing"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("failed to spawn the lansing binary")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process was killed by a signal")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is not valid JSON")
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("reading {name}: {e}"))
}

fn read_json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&read(dir, name)).unwrap_or_else(|e| panic!("parsing {name}: {e}"))
}

#[test]
fn demog_reports_the_known_growth_rate() {
    let tmp = tempfile::tempdir().unwrap();
    let out = lansing(&["demog", "--xb", "2", "--xd", "3"], tmp.path());
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["region"], "U1");
    let lambda = v["lambda"].as_f64().unwrap();
    assert!(
        (lambda - 0.796_812_130_020_020_0).abs() < 1e-12,
        "lambda = {lambda}"
    );
    assert!(v["grad"][0].as_f64().unwrap() > 0.0);
    assert_eq!(v["grad"][1].as_f64().unwrap(), 0.0);
}

#[test]
fn demog_marks_nonviable_traits() {
    let tmp = tempfile::tempdir().unwrap();
    let out = lansing(&["demog", "--xb", "0.5", "--xd", "2"], tmp.path());
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["region"], "NonViable");
    assert!(v["lambda"].as_f64().unwrap() < 0.0);
    assert!(
        v["rho1"].is_null(),
        "no equilibrium for a shrinking population"
    );
}

#[test]
fn missing_config_file_exits_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = lansing(&["run", "ibm", "--config", "nope.toml"], tmp.path());
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("configuration error"));
}

#[test]
fn unknown_config_field_exits_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("c.toml"),
        "[tss]\nxb = 2.0\nxd = 1.5\nepsilon = 0.1\nt_end = 1.0\nwarp = 9\n",
    )
    .unwrap();
    let out = lansing(&["run", "tss", "--config", "c.toml"], tmp.path());
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warp"));
}

#[test]
fn missing_section_exits_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("c.toml"),
        "[ibm]\nxb = 2.0\nxd = 3.0\neta = 0.01\ninitial_size = 10\nt_end = 1.0\n",
    )
    .unwrap();
    let out = lansing(&["run", "pde", "--config", "c.toml"], tmp.path());
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("[pde]"));
}

#[test]
fn unknown_subcommand_exits_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = lansing(&["transmogrify"], tmp.path());
    assert_eq!(code(&out), 2);
}

const SMALL_IBM: &str = "seed = 7\n\n[ibm]\nxb = 2.0\nxd = 3.0\neta = 0.01\np_mut = 0.1\ninitial_size = 40\nt_end = 3.0\nsnapshot_every = 50\n";

#[test]
fn ibm_outputs_are_seed_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("c.toml"), SMALL_IBM).unwrap();
    for dir in ["a", "b"] {
        let out = lansing(
            &["run", "ibm", "--config", "c.toml", "--out", dir],
            tmp.path(),
        );
        assert_eq!(
            code(&out),
            0,
            "stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let out = lansing(
        &[
            "run", "ibm", "--config", "c.toml", "--out", "c", "--seed", "8",
        ],
        tmp.path(),
    );
    assert_eq!(code(&out), 0);
    let a = read(&tmp.path().join("a"), "ibm_snapshots_r0.csv");
    assert_eq!(a, read(&tmp.path().join("b"), "ibm_snapshots_r0.csv"));
    assert_eq!(
        read(&tmp.path().join("a"), "ibm_summary_r0.json"),
        read(&tmp.path().join("b"), "ibm_summary_r0.json")
    );
    assert_ne!(a, read(&tmp.path().join("c"), "ibm_snapshots_r0.csv"));
}

#[test]
fn ibm_replicates_and_event_log() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = SMALL_IBM.replace(
        "snapshot_every = 50\n",
        "snapshot_every = 50\nevents_csv = true\n",
    );
    fs::write(tmp.path().join("c.toml"), cfg).unwrap();
    let out = lansing(
        &[
            "run",
            "ibm",
            "--config",
            "c.toml",
            "--out",
            "o",
            "--replicates",
            "2",
            "--threads",
            "2",
        ],
        tmp.path(),
    );
    assert_eq!(
        code(&out),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let dir = tmp.path().join("o");
    for r in 0..2 {
        let snaps = read(&dir, &format!("ibm_snapshots_r{r}.csv"));
        assert!(snaps.starts_with("time,n_alive,mean_xb,mean_xd,var_xb,var_xd\n"));
        let events = read(&dir, &format!("ibm_events_r{r}.csv"));
        assert!(events.starts_with("time,event_type,id,parent_id,xb,xd,lansing_flag\n"));
        assert!(events.lines().count() > 1, "event log should not be empty");
        let summary = read_json(&dir, &format!("ibm_summary_r{r}.json"));
        assert!(summary["accepted_events"].as_u64().unwrap() > 0);
    }
    // Replicates use different derived seeds.
    assert_ne!(
        read(&dir, "ibm_snapshots_r0.csv"),
        read(&dir, "ibm_snapshots_r1.csv")
    );
}

#[test]
fn pde_monomorphic_writes_profile_masses_summary() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("c.toml"),
        "[pde]\nmode = \"monomorphic\"\nxb = 2.0\nxd = 3.0\neta = 0.01\nda = 0.05\nt_end = 5.0\ninitial_scale = 0.5\n",
    )
    .unwrap();
    let out = lansing(
        &["run", "pde", "--config", "c.toml", "--out", "o"],
        tmp.path(),
    );
    assert_eq!(
        code(&out),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let dir = tmp.path().join("o");
    let profile = read(&dir, "pde_profile.csv");
    assert!(profile.starts_with("age,n1,n2\n"));
    let masses = read(&dir, "pde_masses.csv");
    assert!(masses.starts_with("t,mass_1,mass_2\n"));
    assert_eq!(
        masses.lines().count(),
        1 + 101,
        "initial row plus one per step"
    );
    let summary = read_json(&dir, "pde_summary.json");
    assert!(summary["residual_l1"].as_f64().unwrap().is_finite());
    assert!(summary["final_masses"][0].as_f64().unwrap() > 0.0);
}

#[test]
fn pde_bimorphic_requires_second_trait() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("c.toml"),
        "[pde]\nmode = \"bimorphic\"\nxb = 1.5\nxd = 3.0\neta = 0.01\nda = 0.05\nt_end = 1.0\n",
    )
    .unwrap();
    let out = lansing(
        &["run", "pde", "--config", "c.toml", "--out", "o"],
        tmp.path(),
    );
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("xb2"));
}

#[test]
fn tss_diagonal_start_is_absorbed() {
    let tmp = tempfile::tempdir().unwrap();
    // Small epsilon makes proposals arrive fast enough that the
    // consecutive-rejection absorption rule fires within the time horizon.
    fs::write(
        tmp.path().join("c.toml"),
        "[tss]\nxb = 2.0\nxd = 2.0\nepsilon = 0.05\nt_end = 10.0\n",
    )
    .unwrap();
    let out = lansing(
        &["run", "tss", "--config", "c.toml", "--out", "o"],
        tmp.path(),
    );
    assert_eq!(
        code(&out),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let dir = tmp.path().join("o");
    let summary = read_json(&dir, "tss_summary_r0.json");
    assert_eq!(summary["terminal_reason"], "absorbed");
    assert_eq!(summary["jumps"], 0);
    let path = read(&dir, "tss_path_r0.csv");
    assert_eq!(
        path.lines().count(),
        2,
        "header plus the initial state only"
    );
}

#[test]
fn inclusion_reports_hit_time_and_tube_checks() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("c.toml"),
        "[inclusion]\nxb = 2.0\nxd = 1.5\nt_end = 4.0\ntube_epsilon = 0.05\n",
    )
    .unwrap();
    let out = lansing(
        &["run", "inclusion", "--config", "c.toml", "--out", "o"],
        tmp.path(),
    );
    assert_eq!(
        code(&out),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let dir = tmp.path().join("o");
    let summary = read_json(&dir, "inclusion_summary.json");
    let hit = summary["hit_time"].as_f64().unwrap();
    assert!(
        (hit - 3.471_273_602_088_618).abs() < 1e-6,
        "hit_time = {hit}"
    );
    let path = read(&dir, "inclusion_path.csv");
    assert!(path.starts_with("t,xb,xd,phase\n"));
    assert!(path.contains(",approach\n") && path.contains(",diagonal\n"));
    let tube = read_json(&dir, "tube_r0.json");
    assert_eq!(tube["pass"], true);
    assert!(tube["max_pre_hit_dist"].as_f64().unwrap() < 0.05);
}

#[test]
fn verify_fast_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = lansing(&["verify", "fast"], tmp.path());
    assert_eq!(
        code(&out),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.matches("[PASS]").count(), 5);
    assert!(!text.contains("[FAIL]"));
}
