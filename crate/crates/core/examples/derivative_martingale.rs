//! Gaussian branching random walk, its derivative martingale and the recentred limit `X'`.

use covertree::brw::{martingale_check, sample_brw};
use covertree::rng::stream;

fn main() -> covertree::Result<()> {
    for k in [4, 8, 12, 16] {
        let f = sample_brw(k, &mut stream(5, "brw", k as u64, 0))?;
        println!(
            "k = {k:2}: X_k = {:+.4}  gbar_k = {:+.4}  X'_k = {:+.4} (identity {:+.4})",
            f.x,
            f.gbar_k(),
            f.x_prime,
            f.x_prime_from_identity()
        );
    }
    let r = martingale_check(3, 2_000, 200, &mut stream(5, "martingale", 3, 0))?;
    println!("E[X_4 | F_3] - X_3 = {:+.4} ± {:.4} (z = {:+.2})", r.mean_deviation, r.std_err, r.z);
    Ok(())
}
