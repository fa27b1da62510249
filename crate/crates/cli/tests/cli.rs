use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn phfock(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phfock"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn kernel_pairs_and_ordering() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "k.json",
        r#"{"pairs": [[[0,0],[0,0]], [[1,0],[1,0]]], "random_pairs": 98, "out": "o"}"#,
    );
    let o = phfock(tmp.path(), &["kernel", "--config", "k.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = json(&tmp.path().join("o/kernel.json"));
    let recs = r["result"]["records"].as_array().unwrap();
    assert_eq!(recs.len(), 100);
    for (i, rec) in recs.iter().enumerate() {
        assert_eq!(rec["index"], i);
    }
    assert_eq!(recs[0]["k_ph"][0], 1.0);
    let d = recs[1]["k_ph"][0].as_f64().unwrap();
    assert!((d - (2.0 * 1f64.exp() - 1.0)).abs() < 1e-14);
    assert!(r["statements"]["k_ph"].is_string());
    assert!(r["version"].is_string());
    assert_eq!(r["config"]["random_pairs"], 98);
}

#[test]
fn schema_errors_exit_2_with_location() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "a.json", "{\n  \"alpha\": 1,\n  \"degres\": [3]\n}\n");
    let o = phfock(tmp.path(), &["toeplitz", "--config", "a.json"]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("a.json:3:") && e.contains("degres"), "{e}");

    write(
        tmp.path(),
        "b.json",
        "{\n  \"measure\": {\"type\": \"gaussian_density\", \"c\": -1, \"beta\": 1}\n}\n",
    );
    let o = phfock(tmp.path(), &["toeplitz", "--config", "b.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("field `measure`"), "{}", stderr(&o));

    write(tmp.path(), "c.json", r#"{"measure": "identity", "degrees": [17]}"#);
    let o = phfock(tmp.path(), &["toeplitz", "--config", "c.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("degree_cap"));

    for bad in [r#"{"alpha": 0}"#, r#"{"n": 0}"#, r#"{"p_list": [0.5]}"#] {
        write(tmp.path(), "d.json", bad);
        let o = phfock(tmp.path(), &["kernel", "--config", "d.json"]);
        assert_eq!(o.status.code(), Some(2), "{bad}");
    }
}

#[test]
fn oversized_window_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "c.json",
        r#"{"measure": {"type": "scaled_lebesgue", "c": 1}, "window": {"spacing": 0.01, "half_width": 50}}"#,
    );
    let o = phfock(tmp.path(), &["carleson", "--config", "c.json"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn carleson_verdicts_and_mass_csv() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, measure, vanishing) in [
        ("leb", r#"{"type": "scaled_lebesgue", "c": 1}"#, "no"),
        ("gauss", r#"{"type": "gaussian_density", "c": 1, "beta": 1}"#, "yes"),
    ] {
        write(
            tmp.path(),
            "c.json",
            &format!(r#"{{"measure": {measure}, "window": {{"spacing": 1, "half_width": 8}}, "out": "{name}"}}"#),
        );
        let o = phfock(tmp.path(), &["carleson", "--config", "c.json"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let r = json(&tmp.path().join(name).join("carleson.json"));
        assert_eq!(r["result"]["scan"]["bounded"], "yes");
        assert_eq!(r["result"]["scan"]["vanishing"], vanishing);
        let csv = fs::read_to_string(tmp.path().join(name).join("masses.csv")).unwrap();
        assert_eq!(csv.lines().next(), Some("re0,im0,mass"));
        assert_eq!(csv.lines().count(), 1 + 17 * 17);
    }
}

#[test]
fn toeplitz_identity_and_atom() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "t.json", r#"{"measure": "identity", "degrees": [3, 5], "out": "id"}"#);
    let o = phfock(tmp.path(), &["toeplitz", "--config", "t.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = json(&tmp.path().join("id/summary.json"));
    for d in r["result"]["degrees"].as_array().unwrap() {
        let deg = d["degree"].as_f64().unwrap();
        let s = &d["spectrum"];
        assert!((s["operator_norm"].as_f64().unwrap() - 1.0).abs() < 1e-9);
        assert!((s["trace"].as_f64().unwrap() - (2.0 * deg + 1.0)).abs() < 1e-9);
    }
    assert!(tmp.path().join("id/matrix_D5.json").exists());
    let csv = fs::read_to_string(tmp.path().join("id/spectrum_D3.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("index,eigenvalue,singular_value"));
    assert_eq!(csv.lines().count(), 1 + 7);

    write(
        tmp.path(),
        "a.json",
        r#"{"measure": {"type": "atom_set", "atoms": [[0, 0, 2.5]]}, "degrees": [6], "out": "atom"}"#,
    );
    let o = phfock(tmp.path(), &["toeplitz", "--config", "a.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = json(&tmp.path().join("atom/summary.json"));
    let sv: Vec<f64> = r["result"]["degrees"][0]["spectrum"]["singular_values"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert!((sv[0] - 2.5).abs() < 1e-12);
    assert!(sv[1..].iter().all(|s| *s < 1e-12));

    write(
        tmp.path(),
        "r.json",
        r#"{"measure": {"type": "radial_power_gaussian", "c": 1, "k": 1, "s": 1}, "degrees": [6], "out": "rad"}"#,
    );
    let o = phfock(tmp.path(), &["toeplitz", "--config", "r.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = json(&tmp.path().join("rad/summary.json"));
    assert!(r["result"]["degrees"][0]["max_off_diagonal"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn berezin_profiles() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "a.json",
        r#"{"measure": {"type": "atom_set", "atoms": [[0, 0, 2]]}, "radii": [0, 0.5, 1, 2], "trace": true, "out": "atom"}"#,
    );
    let o = phfock(tmp.path(), &["berezin", "--config", "a.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(tmp.path().join("atom/profile.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("radius,value"));
    for line in lines {
        let (r, v) = line.split_once(',').unwrap();
        let (r, v): (f64, f64) = (r.parse().unwrap(), v.parse().unwrap());
        let want = 2.0 / (2.0 * (r * r).exp() - 1.0);
        assert!((v - want).abs() < 1e-9 * want, "{r}: {v} vs {want}");
    }
    let r = json(&tmp.path().join("atom/berezin.json"));
    assert!((r["result"]["trace"]["value"].as_f64().unwrap() - 2.0).abs() < 1e-6);

    write(tmp.path(), "i.json", r#"{"measure": "identity", "radii": [0, 1, 2], "out": "id"}"#);
    let o = phfock(tmp.path(), &["berezin", "--config", "i.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = json(&tmp.path().join("id/berezin.json"));
    for p in r["result"]["profile"].as_array().unwrap() {
        assert!((p["value"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    }

    write(
        tmp.path(),
        "g.json",
        r#"{"measure": {"type": "gaussian_density", "c": 1, "beta": 1}, "radii": [0, 1, 2, 3], "out": "g"}"#,
    );
    let o = phfock(tmp.path(), &["berezin", "--config", "g.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = json(&tmp.path().join("g/berezin.json"));
    assert_eq!(r["result"]["decay"]["decays"], true);
}

#[test]
fn verify_only_selects_one_record() {
    let tmp = tempfile::tempdir().unwrap();
    let o = phfock(tmp.path(), &["verify", "--only", "radial-diagonality", "--out", "v", "--threads", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = json(&tmp.path().join("v/verify.json"));
    let checks = r["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 1);
    assert_eq!(checks[0]["id"], "radial-diagonality");
    assert_eq!(checks[0]["status"], "pass");
    assert!(tmp.path().join("v/timings.json").exists());

    let o = phfock(tmp.path(), &["verify", "--only", "no-such-check"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn tightened_tolerance_fails_in_a_controlled_way() {
    let tmp = tempfile::tempdir().unwrap();
    let o = phfock(
        tmp.path(),
        &["verify", "--only", "orthonormality", "--only", "identity-operator", "--tol", "1e-15", "--out", "v"],
    );
    assert_eq!(o.status.code(), Some(5));
    let r = json(&tmp.path().join("v/verify.json"));
    let checks = r["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 2);
    assert!(checks.iter().all(|c| c["status"] == "fail"));
    assert!(stderr(&o).contains("orthonormality"));
}

#[test]
fn verify_reports_are_byte_identical_and_flags_override_config() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "v.json", r#"{"seed": 1, "out": "ignored"}"#);
    let ids = ["--only", "carleson-necessity", "--only", "berezin-bounds"];
    let mut runs = Vec::new();
    for threads in ["1", "2"] {
        let mut args = vec!["verify", "--config", "v.json", "--seed", "7", "--out", "v", "--threads", threads];
        args.extend(ids);
        let o = phfock(tmp.path(), &args);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        runs.push(fs::read(tmp.path().join("v/verify.json")).unwrap());
    }
    assert_eq!(runs[0], runs[1]);
    assert!(!tmp.path().join("ignored").exists());
    let r: Value = serde_json::from_slice(&runs[0]).unwrap();
    assert_eq!(r["seed"], 7);
    assert_eq!(r["generator"], "ChaCha8Rng");
}

#[test]
fn default_verify_fails_only_the_power_inequality() {
    let tmp = tempfile::tempdir().unwrap();
    let o = phfock(tmp.path(), &["verify", "--out", "v"]);
    assert_eq!(o.status.code(), Some(5));
    let r = json(&tmp.path().join("v/verify.json"));
    assert_eq!(r["summary"]["total"], 14);
    assert_eq!(r["summary"]["must_failed"], serde_json::json!(["berezin-power-inequality"]));
    assert_eq!(r["summary"]["errored"], serde_json::json!([]));
}
