//! Linear-barrier bridge probabilities, 0-dimensional Bessel transitions and the Girsanov identity.

use covertree::bessel::{
    besq0_step, besq0_survival, bridge_barrier_mc, bridge_barrier_prob, bridge_presets, girsanov_check,
    girsanov_presets,
};
use covertree::rng::stream;

fn main() -> covertree::Result<()> {
    for (i, case) in bridge_presets().iter().enumerate() {
        let exact = bridge_barrier_prob(case.x, case.w, &case.line);
        let mc = bridge_barrier_mc(case.x, case.w, &case.line, 1e-3, 20_000, &mut stream(9, "bridge", 0, i as u64));
        println!("bridge {i}: exact {exact:.4}  mc {:.4} ± {:.4}", mc.estimate, mc.std_err);
    }

    let mut rng = stream(9, "besq", 0, 0);
    let draws: Vec<f64> = (0..50_000).map(|_| besq0_step(2.0, 1.0, &mut rng)).collect();
    let alive = draws.iter().filter(|&&z| z > 0.0).count() as f64 / draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    println!(
        "BESQ0 from 2 after time 1: survival {alive:.4} (exact {:.4}), mean {mean:.4} (exact 2)",
        besq0_survival(2.0, 1.0)
    );

    let cfg = girsanov_presets()[0];
    let g = girsanov_check(&cfg, 5_000, 9, 2)?;
    println!(
        "Girsanov {:?}: Bessel {:.4} ± {:.4}, Brownian {:.4} ± {:.4}",
        cfg.test, g.bessel.estimate, g.bessel.std_err, g.brownian.estimate, g.brownian.std_err
    );
    Ok(())
}
