//! Simple random walk on `T_n` run until every vertex is visited.

use covertree::rng::stream;
use covertree::srw::{normalized_cover, SrwEngine, DEFAULT_MEMORY_BUDGET};
use covertree::stats::centering::m_n;

fn main() -> covertree::Result<()> {
    let n = 8;
    let mut engine = SrwEngine::new(n)?;
    println!("n = {n}, m_n = {:.4}", m_n(n));
    for replica in 0..5 {
        let s = engine.run_to_cover(&mut stream(1, "cover", n as u64, replica))?;
        let (sqrt_c, sqrt_t) = normalized_cover(&s);
        println!(
            "replica {replica}: t* = {:5}  C = {:9}  sqrt(C/2^(n+1)) - m_n = {sqrt_c:+.3}  sqrt(2t*) - m_n = {sqrt_t:+.3}",
            s.t_star,
            s.cover_steps.unwrap_or(0)
        );
    }

    // step accounting over a fixed number of excursions
    let mut counting = SrwEngine::with_counts(n, DEFAULT_MEMORY_BUDGET)?;
    let run = counting.run_excursions(20, &mut stream(1, "excursions", n as u64, 0))?;
    println!("20 excursions took {} steps; {} leaf visits", run.steps, run.counts.leaves().iter().sum::<u64>());
    Ok(())
}
