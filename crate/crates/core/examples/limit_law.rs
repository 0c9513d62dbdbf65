//! Normalized excursion cover times against the randomly shifted Gumbel law.

use covertree::stats::centering::C_STAR;
use covertree::stats::{mixture_cdf_fit, tail_fit};
use covertree::verify::{tstar_sample, xprime_sample};

fn main() -> covertree::Result<()> {
    let workers = covertree::rng::default_workers();
    let n = 10;
    let d = tstar_sample(n, 5_000, 1, workers)?;
    println!("sqrt(2 t*_{n}) - m_{n}: median {:.3}, 95% quantile {:.3}", d.quantile(0.5), d.quantile(0.95));

    let tail = tail_fit(&d, 1.0, 3.0, 0.25)?;
    println!("tail fit: c = {:.3} ± {:.3} (c* = {C_STAR:.5})", tail.c, tail.c_stderr);

    // t* carries the extra Gaussian shift, so the mixing variable is X' e^{-c* gbar}
    let pairs = xprime_sample(12, 2_000, 1, workers)?;
    let mixing: Vec<f64> = pairs.iter().map(|(x, g)| x * (-C_STAR * g).exp()).collect();
    let fit = mixture_cdf_fit(&d, &mixing, C_STAR)?;
    println!("mixture fit: alpha = {:.3}, KS = {:.4}", fit.alpha, fit.ks);
    Ok(())
}
