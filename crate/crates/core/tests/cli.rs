use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use covertree::rng::stream;
use covertree::stats::centering::C_STAR;
use covertree::stats::ExactTail;
use serde_json::Value;

fn covertree(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_covertree"))
        .args(args)
        .current_dir(dir)
        .env_remove("COVERTREE_DATA_DIR")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}\n{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

#[test]
fn simulate_is_byte_identical_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    for (file, workers) in [("a.csv", "1"), ("b.csv", "1"), ("c.csv", "3")] {
        let out = covertree(
            dir.path(),
            &[
                "simulate",
                "tstar",
                "--n",
                "10",
                "--replicas",
                "1000",
                "--seed",
                "7",
                "--workers",
                workers,
                "--out",
                file,
            ],
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.csv")).unwrap());
    assert_eq!(a, fs::read(dir.path().join("c.csv")).unwrap());
}

#[test]
fn depth_zero_cover() {
    let dir = tempfile::tempdir().unwrap();
    let out = covertree(dir.path(), &["simulate", "cover", "--n", "0", "--replicas", "20", "--out", "c.csv"]);
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("c.csv")).unwrap();
    let body: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(body.len(), 20);
    assert!(body.iter().all(|l| l.contains(",ok,1,1,")), "{text}");
}

#[test]
fn data_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_covertree"))
        .args(["simulate", "tstar", "--n", "4", "--replicas", "5", "--seed", "3"])
        .current_dir(dir.path())
        .env("COVERTREE_DATA_DIR", dir.path().join("samples"))
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("samples/tstar_n4_s3.csv").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let usage = covertree(dir.path(), &["simulate", "tstar", "--n", "5", "--delta", "0.2", "--out", "x.csv"]);
    assert_eq!(usage.status.code(), Some(2));
    assert_eq!(covertree(dir.path(), &["simulate", "nonsense"]).status.code(), Some(2));
    let big = covertree(dir.path(), &["simulate", "cover", "--n", "13", "--out", "x.csv"]);
    assert_eq!(big.status.code(), Some(3));
    let cap = covertree(
        dir.path(),
        &["simulate", "tstar", "--n", "6", "--replicas", "10", "--excursion-cap", "2", "--out", "t.csv"],
    );
    assert!(cap.status.success());
    assert!(json(&cap)["capped"].as_u64().unwrap() > 0);
}

#[test]
fn verify_reports_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = covertree(dir.path(), &["verify", "identities", "--k", "8", "--workers", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["passed"], true);
    assert_eq!(r["suites"][0]["suite"], "identities");

    // a threshold nobody can meet turns into exit code 1 with the failures listed
    fs::write(dir.path().join("strict.toml"), "[verify.moments]\nvariance_rel_tol = 0.0\nsigma = 0.0\n").unwrap();
    let out =
        covertree(dir.path(), &["verify", "moments", "--j", "1..3", "--excursions", "2000", "--config", "strict.toml"]);
    assert_eq!(out.status.code(), Some(1));
    let r = json(&out);
    let checks = r["suites"][0]["checks"].as_array().unwrap();
    assert!(checks.iter().any(|c| c["passed"] == false && c["observed"].is_number() && c["expected"].is_number()));
}

#[test]
fn xprime_file_feeds_the_mixture_fit() {
    let dir = tempfile::tempdir().unwrap();
    let sim = covertree(dir.path(), &["simulate", "brw_xprime", "--n", "12", "--replicas", "10000", "--out", "x.csv"]);
    assert!(sim.status.success());
    let t = covertree(dir.path(), &["simulate", "tstar", "--n", "10", "--replicas", "3000", "--out", "t.csv"]);
    assert!(t.status.success());
    let fit = covertree(dir.path(), &["fit", "mixture", "t.csv", "--xprime", "x.csv"]);
    let r = json(&fit);
    assert_eq!(r["test"], "mixture");
    assert!(r["statistic"].as_f64().unwrap() < 0.1, "{r}");
    assert_eq!(r["seeds"], serde_json::json!([1]));

    let plot =
        covertree(dir.path(), &["report", "plot", "t.csv", "--xprime", "x.csv", "--points", "50", "--out", "p.csv"]);
    assert!(plot.status.success());
    let text = fs::read_to_string(dir.path().join("p.csv")).unwrap();
    assert!(text.starts_with("y,ecdf,mixture_cdf\n"));
    assert_eq!(text.lines().count(), 51);
}

#[test]
fn tail_fit_recovers_synthetic_tail() {
    let dir = tempfile::tempdir().unwrap();
    let law = ExactTail::new(1.0, C_STAR, 1.0).unwrap();
    let mut rng = stream(21, "synthetic_tail", 0, 0);
    let mut text = String::from("value\n");
    for _ in 0..200_000 {
        text.push_str(&format!("{}\n", law.sample(&mut rng)));
    }
    fs::write(dir.path().join("v.csv"), text).unwrap();
    let r = json(&covertree(dir.path(), &["fit", "tail", "v.csv"]));
    let fit = &r["detail"]["fit"];
    let (c, se) = (fit["c"].as_f64().unwrap(), fit["c_stderr"].as_f64().unwrap());
    assert!((c - C_STAR).abs() < 2.0 * se, "{c} ± {se}");
}

#[test]
fn tail_fit_without_data_asks_for_more() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("v.csv"), "value\n0.1\n0.2\n0.3\n").unwrap();
    let out = covertree(dir.path(), &["fit", "tail", "v.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("draw more samples"));
}

#[test]
fn all_negative_xprime_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut x = String::from(
        "schema_version,kind,n,ell,z,replica,seed,status,t_star,cover_steps,steps_at_s,xprime,gbar,x,lambda,gamma,eta_sharp_zero,g_event,y,estimate,stderr,replicas\n",
    );
    for r in 0..5 {
        x.push_str(&format!("1,brw_xprime,8,,,{r},1,ok,,,,-0.5,0.1,,,,,,,,,\n"));
    }
    fs::write(dir.path().join("x.csv"), x).unwrap();
    fs::write(dir.path().join("v.csv"), "value\n0.5\n1.5\n").unwrap();
    let out = covertree(dir.path(), &["fit", "mixture", "v.csv", "--xprime", "x.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("degenerate data"));
}

#[test]
fn stability_table_over_depths() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for n in ["10", "12", "14"] {
        let file = format!("t{n}.csv");
        let out = covertree(
            dir.path(),
            &["simulate", "tstar", "--n", n, "--replicas", "2000", "--seed", "5", "--out", &file],
        );
        assert!(out.status.success());
        files.push(file);
    }
    let mut args = vec!["report", "stability"];
    args.extend(files.iter().map(String::as_str));
    let r = json(&covertree(dir.path(), &args));
    let rows = r["detail"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0]["n_from"].as_u64(), rows[1]["n_to"].as_u64()), (Some(10), Some(14)));
    assert_eq!(r["detail"]["monotone_or_flat"], true);
}

#[test]
fn shift_report_and_depth_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    for (kind, n, file) in [("cover", "8", "c.csv"), ("tstar", "8", "t.csv"), ("tstar", "9", "t9.csv")] {
        let out = covertree(dir.path(), &["simulate", kind, "--n", n, "--replicas", "1500", "--out", file]);
        assert!(out.status.success());
    }
    let r = json(&covertree(dir.path(), &["report", "shift", "--cover", "c.csv", "--tstar", "t.csv"]));
    assert_eq!(r["test"], "shift");
    assert!(r["p_value"].is_number());
    assert!(r["detail"]["report"]["control_statistic"].is_number());
    let bad = covertree(dir.path(), &["report", "shift", "--cover", "c.csv", "--tstar", "t9.csv"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn merge_rejects_overlap_and_commutes() {
    let dir = tempfile::tempdir().unwrap();
    for (start, file) in [("0", "a.csv"), ("100", "b.csv")] {
        let out = covertree(
            dir.path(),
            &[
                "simulate",
                "event",
                "--n",
                "8",
                "--ell",
                "3",
                "--z",
                "1",
                "--replicas",
                "100",
                "--start",
                start,
                "--out",
                file,
            ],
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert!(covertree(dir.path(), &["merge", "a.csv", "b.csv", "--out", "ab.csv"]).status.success());
    assert!(covertree(dir.path(), &["merge", "b.csv", "a.csv", "--out", "ba.csv"]).status.success());
    assert_eq!(fs::read(dir.path().join("ab.csv")).unwrap(), fs::read(dir.path().join("ba.csv")).unwrap());
    let again = covertree(dir.path(), &["merge", "a.csv", "a.csv", "--out", "aa.csv"]);
    assert_eq!(again.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&again.stderr).contains("duplicate"));

    // same file, different barrier height
    let clash = covertree(
        dir.path(),
        &["simulate", "event", "--n", "8", "--ell", "3", "--z", "2", "--replicas", "100", "--out", "a.csv"],
    );
    assert_eq!(clash.status.code(), Some(1));
}
