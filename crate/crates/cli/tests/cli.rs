use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/reference.toml")
}

fn cqad(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cqad"))
        .arg("--config")
        .arg(config())
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("spawn cqad")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn rabi_is_reproducible_for_a_seed() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = cqad(d.path(), &["--seed", "7", "--override", "rabi.samples=101", "rabi"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let csv = fs::read(a.path().join("rabi.csv")).unwrap();
    assert_eq!(csv, fs::read(b.path().join("rabi.csv")).unwrap());
    assert!(csv.starts_with(b"time_s,p_e,n_mech\n"));
    let m = json(&a.path().join("manifest.json"));
    assert_eq!(m["seed"], 7);
    assert_eq!(m["command"], "rabi");
    assert_eq!(
        m["config_sha256"],
        json(&b.path().join("manifest.json"))["config_sha256"]
    );
    assert!(m["outputs"].as_array().unwrap().iter().any(|v| v == "rabi.csv"));
}

#[test]
fn circuit_reproduces_reference_table() {
    let d = tempfile::tempdir().unwrap();
    let o = cqad(d.path(), &["circuit"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = json(&d.path().join("circuit_summary.json"));
    let within = |key: &str, want: f64, rel: f64| {
        let got = s[key].as_f64().unwrap();
        assert!((got / want - 1.0).abs() < rel, "{key}: {got} vs {want}");
    };
    within("A.ck_f", 40e-12, 0.10);
    within("A.lk_h", 26e-12, 0.10);
    within("B.ck_f", 29e-12, 0.10);
    within("B.lk_h", 38e-12, 0.10);
    within("z_ohm", 350.0, 0.05);
    within("omega_q_max_hz", 5.1071e9, 0.01);
    assert!((s["A.c_t2"].as_f64().unwrap() - 132.0).abs() <= 2.0);
    assert!((s["B.c_t2"].as_f64().unwrap() - 147.0).abs() <= 2.0);
    let csv = fs::read_to_string(d.path().join("circuit.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("mode,g_em_hz,ck_f,lk_h,cm_f,c_t1,c_t2"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn malformed_duration_names_the_field() {
    let d = tempfile::tempdir().unwrap();
    for bad in [
        "rabi.duration=\"−1s\"",
        "rabi.duration=\"-1 s\"",
        "rabi.duration=\"3 GHz\"",
    ] {
        let o = cqad(d.path(), &["--override", bad, "rabi"]);
        assert_eq!(o.status.code(), Some(2), "{bad}");
        assert!(stderr(&o).contains("rabi.duration"), "{}", stderr(&o));
    }
    assert!(!d.path().join("manifest.json").exists());
}

#[test]
fn unknown_keys_are_all_listed() {
    let d = tempfile::tempdir().unwrap();
    let o = cqad(
        d.path(),
        &[
            "--override",
            "rabi.durration=1e-6",
            "--override",
            "device.mechanics[1].qq=3",
            "circuit",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("rabi.durration") && e.contains("qq"), "{e}");
}

#[test]
fn model_invariants_exit_with_validation_status() {
    let d = tempfile::tempdir().unwrap();
    let o = cqad(d.path(), &["--override", "device.fock_dim=1", "circuit"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("fock_dim"), "{}", stderr(&o));
}

fn noise_scan(out: &Path, workers: &str) -> Output {
    cqad(
        out,
        &[
            "--workers",
            workers,
            "--override",
            "noise.trajectories=100",
            "--override",
            "noise.members=40",
            "scan",
            "noise",
            "--axis",
            "noise.xi=500:1500:3",
            "--axis",
            "noise.members=20:40:2",
        ],
    )
}

#[test]
fn scan_is_independent_of_worker_count() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let oa = noise_scan(a.path(), "1");
    let ob = noise_scan(b.path(), "3");
    assert!(oa.status.success() && ob.status.success(), "{}", stderr(&oa));
    let csv = fs::read_to_string(a.path().join("scan_noise.csv")).unwrap();
    assert_eq!(csv, fs::read_to_string(b.path().join("scan_noise.csv")).unwrap());
    let head = csv.lines().next().unwrap();
    assert!(head.starts_with("noise.xi,noise.members,"), "{head}");
    assert!(head.ends_with(",valid,seed"), "{head}");
    assert_eq!(csv.lines().count(), 7);
    let s = json(&a.path().join("scan_noise_summary.json"));
    assert_eq!(s["valid"], true);
    assert_eq!(s["seeds"].as_array().unwrap().len(), 6);
}

#[test]
fn single_point_scan_matches_run() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let o = cqad(a.path(), &["--override", "noise.trajectories=100", "noise"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = cqad(
        b.path(),
        &[
            "--override",
            "noise.trajectories=100",
            "scan",
            "noise",
            "--axis",
            "noise.xi=1000:1000:1",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let run = json(&a.path().join("noise_summary.json"));
    let csv = fs::read_to_string(b.path().join("scan_noise.csv")).unwrap();
    let mut lines = csv.lines();
    let head: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    for key in ["ramsey_mc_tau_s", "t2_echo_s", "echo_efficiency"] {
        let j = head.iter().position(|h| *h == key).unwrap();
        assert_eq!(row[j].parse::<f64>().unwrap(), run[key].as_f64().unwrap(), "{key}");
    }
    assert_eq!(
        row.last().unwrap().parse::<u64>().unwrap(),
        run["seed"].as_u64().unwrap()
    );
}

#[test]
fn failed_scan_point_leaves_partial_file() {
    let d = tempfile::tempdir().unwrap();
    let o = cqad(d.path(), &["scan", "rabi", "--axis", "rabi.samples=1:2:2"]);
    assert_ne!(o.status.code(), Some(0));
    let csv = fs::read_to_string(d.path().join("scan_rabi.partial.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 3);
    let valid = rows[0].split(',').position(|h| h == "valid").unwrap();
    assert_eq!(rows[1].split(',').nth(valid), Some("0e0"));
    assert_eq!(rows[2].split(',').nth(valid), Some("1e0"));
    let s = json(&d.path().join("scan_rabi.partial_summary.json"));
    assert_eq!(s["valid"], false);
    assert!(!d.path().join("manifest.json").exists());
    assert!(!d.path().join("scan_rabi.csv").exists());
}

#[test]
fn json_format_and_fit_round_trip() {
    let d = tempfile::tempdir().unwrap();
    let data = d.path().join("decay.csv");
    let mut text = String::from("t_s,y\n");
    for k in 0..40 {
        let t = k as f64 * 1e-3;
        text.push_str(&format!("{t},{}\n", 0.8 * (-t / 12e-3).exp() + 0.1));
    }
    fs::write(&data, text).unwrap();
    let input = format!("fit.input=\"{}\"", data.display());
    let o = cqad(
        d.path(),
        &[
            "--format",
            "json",
            "--override",
            &input,
            "--override",
            "fit.x=t_s",
            "fit",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let s = json(&d.path().join("fit_summary.json"));
    assert!((s["tau"].as_f64().unwrap() / 12e-3 - 1.0).abs() < 1e-6, "{s}");
    let table = json(&d.path().join("fit.json"));
    assert_eq!(table["value"].as_array().unwrap().len(), 3);
}
