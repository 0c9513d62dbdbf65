//! Simulate, resume, merge and fit sample files, as the `covertree` binary does.

use covertree::harness::{fit_mixture, merge, read_rows, simulate, RunConfig, SampleKind};

fn main() -> covertree::Result<()> {
    let dir = std::env::temp_dir().join("covertree-pipeline");
    std::fs::create_dir_all(&dir)?;
    let base = RunConfig { n: Some(10), seed: 7, replicas: 1_000, ..Default::default() };

    // two halves drawn separately, then merged
    let first = RunConfig { out: Some(dir.join("a.csv")), ..base.clone() };
    let second = RunConfig { out: Some(dir.join("b.csv")), start: 1_000, ..base.clone() };
    for cfg in [&first, &second] {
        let _ = std::fs::remove_file(cfg.out.as_ref().unwrap());
        println!("{:?}", simulate(SampleKind::Tstar, cfg)?);
    }
    let merged = dir.join("tstar.csv");
    println!("merged {} rows", merge(&[dir.join("a.csv"), dir.join("b.csv")], &merged)?);

    // rerunning a finished range draws nothing
    println!("resume: {:?}", simulate(SampleKind::Tstar, &first)?);

    let x = RunConfig { n: Some(12), out: Some(dir.join("xprime.csv")), replicas: 2_000, ..base };
    let _ = std::fs::remove_file(dir.join("xprime.csv"));
    simulate(SampleKind::BrwXprime, &x)?;
    println!("{} X' rows", read_rows(&dir.join("xprime.csv"))?.len());

    let r = fit_mixture(&merged, &dir.join("xprime.csv"), None, &RunConfig::default())?;
    println!("mixture fit ({:?} mixing): alpha {:.3}, KS {:.4}, passed {}", r.mixing, r.fit.alpha, r.fit.ks, r.passed);
    Ok(())
}
