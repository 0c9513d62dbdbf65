//! Edge excursion counts as a branching process, and `t*` without walking.

use covertree::excursion::{sample_counts, single_excursion_covariance, TStarSampler};
use covertree::rng::stream;
use covertree::tree::VertexId;

fn main() -> covertree::Result<()> {
    let n = 10;
    let tree = sample_counts(n, 50, &mut stream(3, "counts", n as u64, 0))?;
    let zero_leaves = tree.leaves().iter().filter(|&&c| c == 0).count();
    println!("s = 50 excursions on T_{n}: {zero_leaves} of {} leaves unvisited", tree.leaves().len());
    for j in [1, 5, 10] {
        let level = tree.level(j);
        println!("  level {j:2}: mean count {:.2}", level.iter().sum::<u64>() as f64 / level.len() as f64);
    }

    let mut sampler = TStarSampler::new(16)?;
    let draws: Vec<u64> =
        (0..5).map(|r| sampler.sample(&mut stream(3, "tstar", 16, r))).collect::<covertree::Result<_>>()?;
    println!("t*_16 draws: {draws:?}");

    let (u, v) = (VertexId::new(3, 0)?, VertexId::new(3, 3)?);
    println!("single-excursion Cov(T_u, T_v) for {u:?}, {v:?}: {}", single_excursion_covariance(u, v));
    Ok(())
}
