use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn lasched(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lasched"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

const GAUSS: &str = r#"{"variant":"gmm","dim":1,"components":[{"w":1.0,"mean":[0.0],"sigma":1.0}]}"#;

#[test]
fn manifest_lists_hashed_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = lasched(dir.path(), &["grids", "--K", "4,8", "--out", "g"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = read_json(&dir.path().join("g/manifest.json"));
    let arts = m["artifacts"].as_array().unwrap();
    assert_eq!(arts.len(), 1);
    for a in arts {
        let bytes = fs::read(dir.path().join("g").join(a["path"].as_str().unwrap())).unwrap();
        assert_eq!(hex::encode(Sha256::digest(&bytes)), a["sha256"].as_str().unwrap());
    }
    assert_eq!(m["argv"][0], "grids");
    assert_eq!(m["config"]["command"]["command"], "grids");
    assert!(m["stages"]
        .as_array()
        .unwrap()
        .iter()
        .all(|s| s["seconds"].as_f64().unwrap() >= 0.0));
    // 3 grids × (5 + 9) knots.
    assert_eq!(csv_rows(&dir.path().join("g/grids.csv")).len(), 42);
}

#[test]
fn constant_loss_schedule_telescopes() {
    let dir = tempfile::tempdir().unwrap();
    let gammas: Vec<f64> = (0..10).map(|i| 0.5 * 2f64.powi(i)).collect();
    let mut csv = String::from("gamma,loss,kind\n");
    for g in &gammas {
        csv.push_str(&format!("{g},0.3,x0\n"));
    }
    fs::write(dir.path().join("loss.csv"), csv).unwrap();
    let o = lasched(
        dir.path(),
        &["schedule", "--loss", "loss.csv", "--K", "3", "--out", "s"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = read_json(&dir.path().join("s/schedule_K3.json"));
    let eta = |g: f64| g / (1.0 + 2.25 * g);
    let want = 0.3 * (eta(gammas[9]) - eta(gammas[0]));
    assert!((s["objective"].as_f64().unwrap() - want).abs() <= 1e-15);
    assert_eq!(s["indices"], serde_json::json!([0, 1, 2, 9]));
    assert_eq!(s["algorithm"], "exact");
    assert!(String::from_utf8_lossy(&o.stdout).contains("objective="));
}

#[test]
fn exit_codes_are_distinct() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("desc.csv"), "gamma,loss,kind\n2,1,x0\n1,1,x0\n").unwrap();
    fs::write(p.join("junk.csv"), "gamma,loss,kind\n1,abc,x0\n").unwrap();
    fs::write(p.join("ok.csv"), "gamma,loss,kind\n1,1,x0\n2,1,x0\n4,1,x0\n").unwrap();
    assert_eq!(code(&lasched(p, &["schedule", "--loss", "missing.csv"])), 5);
    assert_eq!(code(&lasched(p, &["schedule", "--loss", "junk.csv"])), 5);
    assert_eq!(code(&lasched(p, &["schedule", "--loss", "desc.csv"])), 6);
    assert_eq!(code(&lasched(p, &["schedule", "--loss", "ok.csv", "--K", "5"])), 3);
    assert_eq!(
        code(&lasched(
            p,
            &["schedule", "--loss", "ok.csv", "--K", "2", "--lambda", "-1"]
        )),
        2
    );
    assert_eq!(code(&lasched(p, &["grids", "--T", "0.01", "--delta", "0.1"])), 2);
    assert_eq!(code(&lasched(p, &["verify", "--suite", "nope"])), 2);
    assert_eq!(code(&lasched(p, &["report", "--target", "nowhere.json"])), 2);
    assert_eq!(code(&lasched(p, &["grids", "--bogus-flag"])), 2);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let args = |out: &'static str| {
        vec![
            "simulate",
            "--target",
            "grid8",
            "--K",
            "3",
            "--grids",
            "geometric,las",
            "--samples",
            "600",
            "--quad-nodes",
            "20",
            "--candidates",
            "30",
            "--save-samples",
            "--seed",
            "17",
            "--out",
            out,
        ]
    };
    assert_eq!(code(&lasched(p, &args("a"))), 0);
    assert_eq!(code(&lasched(p, &args("b"))), 0);
    let ma = read_json(&p.join("a/manifest.json"));
    let mb = read_json(&p.join("b/manifest.json"));
    assert_eq!(ma["artifacts"], mb["artifacts"]);
    for a in ma["artifacts"].as_array().unwrap() {
        let name = a["path"].as_str().unwrap();
        assert_eq!(
            fs::read(p.join("a").join(name)).unwrap(),
            fs::read(p.join("b").join(name)).unwrap()
        );
    }
    // Replaying the manifest reproduces every artifact.
    let o = lasched(p, &["rerun", "a/manifest.json", "--out", "c"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    // A different seed changes the samples.
    let mut other = args("d");
    *other.iter_mut().find(|s| **s == "17").unwrap() = "18";
    assert_eq!(code(&lasched(p, &other)), 0);
    assert_ne!(
        fs::read(p.join("a/samples_geometric_K3.csv")).unwrap(),
        fs::read(p.join("d/samples_geometric_K3.csv")).unwrap()
    );
}

#[test]
fn tampered_manifest_fails_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(code(&lasched(p, &["grids", "--out", "g"])), 0);
    let path = p.join("g/manifest.json");
    let mut m = read_json(&path);
    m["artifacts"][0]["sha256"] = Value::String("0".repeat(64));
    fs::write(&path, serde_json::to_string(&m).unwrap()).unwrap();
    assert_eq!(code(&lasched(p, &["rerun", "g/manifest.json"])), 4);
}

#[test]
fn gaussian_report_orders_grids_and_decays() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("g.json"), GAUSS).unwrap();
    // Λ = e⁴ keeps every K in the sweep at or above ln Λ, where the 1/K rate holds.
    let delta = (-4f64).exp().to_string();
    let o = lasched(
        p,
        &[
            "report",
            "--target",
            "g.json",
            "--K",
            "4,8,16,32",
            "--grids",
            "geometric,time-uniform",
            "--delta",
            &delta,
            "--out",
            "r",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&p.join("r/report.csv"));
    let e = |name: &str, k: &str| -> f64 {
        rows.iter().find(|r| r[0] == name && r[1] == k).unwrap()[2]
            .parse()
            .unwrap()
    };
    assert!(e("geometric", "8") < e("time_uniform", "8"));
    // Least-squares slope of ln E_disc against ln K.
    let pts: Vec<(f64, f64)> = ["4", "8", "16", "32"]
        .iter()
        .map(|k| (k.parse::<f64>().unwrap().ln(), e("geometric", k).ln()))
        .collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / 4.0;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / 4.0;
    let slope =
        pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope + 1.0).abs() <= 0.15, "slope {slope}");
}

#[test]
fn exact_loss_gives_zero_approximation_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("g.json"), GAUSS).unwrap();
    assert_eq!(
        code(&lasched(
            p,
            &["grids", "--K", "8", "--grids", "geometric", "--out", "grid"]
        )),
        0
    );
    let mut csv = String::from("gamma,loss,kind\n");
    for r in csv_rows(&p.join("grid/grids.csv")) {
        let g: f64 = r[3].parse().unwrap();
        csv.push_str(&format!("{g:e},{:e},x0\n", 1.0 / (1.0 + g)));
    }
    fs::write(p.join("loss.csv"), csv).unwrap();
    let o = lasched(
        p,
        &[
            "report",
            "--target",
            "g.json",
            "--K",
            "8",
            "--grids",
            "geometric",
            "--loss",
            "loss.csv",
            "--out",
            "r",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&p.join("r/report.csv"));
    let e_apx: f64 = rows[0][4].parse().unwrap();
    assert!(e_apx.abs() <= 1e-12, "{e_apx}");
}

#[test]
fn verify_suites_report_per_check() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let o = lasched(p, &["verify", "--suite", "dp", "--out", "v"]);
    assert_eq!(code(&o), 0);
    let r = read_json(&p.join("v/verify.json"));
    assert_eq!(r["passed"], true);
    assert_eq!(r["checks"][0]["cases"], 100);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("PASS"));

    fs::write(
        p.join("pm.json"),
        r#"{"variant":"discrete","dim":2,"atoms":[{"p":1.0,"x":[0.5,-1.0]}]}"#,
    )
    .unwrap();
    let o = lasched(p, &["verify", "--suite", "all", "--target", "pm.json", "--out", "pm"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(read_json(&p.join("pm/verify.json"))["passed"], true);
}

#[test]
fn mmse_table_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("g.json"), GAUSS).unwrap();
    assert_eq!(
        code(&lasched(
            p,
            &["mmse-table", "--target", "g.json", "--points", "7", "--out", "m"]
        )),
        0
    );
    let rows = csv_rows(&p.join("m/mmse.csv"));
    assert_eq!(rows.len(), 7);
    for r in rows {
        let g: f64 = r[0].parse().unwrap();
        let m: f64 = r[1].parse().unwrap();
        let dm: f64 = r[3].parse().unwrap();
        assert!((m - 1.0 / (1.0 + g)).abs() <= 1e-15);
        assert!((dm + 1.0 / (1.0 + g).powi(2)).abs() <= 1e-15);
    }
}
