#![allow(clippy::needless_range_loop)]

mod common;

use common::{excursion_covariance, expected_cover_steps, q, to_f64, Q};
use covertree::excursion::{single_excursion_covariance, var_r_single};
use covertree::mc::SampleStats;
use covertree::rng::{run_chunked, stream};
use covertree::srw::SrwEngine;
use covertree::tree::VertexId;

#[test]
fn exact_cover_expectations() {
    assert_eq!(expected_cover_steps(0), q(1));
    assert_eq!(expected_cover_steps(1), q(9));
    assert_eq!(expected_cover_steps(2), Q::new(93, 2));
}

#[test]
fn walk_matches_exact_cover_expectation() {
    for n in [1u32, 2] {
        let steps = run_chunked(
            1,
            40_000,
            1000,
            || SrwEngine::new(n),
            |e, r| Ok(e.run_to_cover(&mut stream(17, "oracle_cover", n as u64, r))?.cover_steps.unwrap() as f64),
        )
        .unwrap();
        let s = SampleStats::from_slice(&steps);
        let exact = to_f64(expected_cover_steps(n));
        assert!((s.mean - exact).abs() < 4.0 * s.std_err(), "n={n}: {} ± {} vs {exact}", s.mean, s.std_err());
    }
}

#[test]
fn counts_have_unit_mean_and_closed_form_covariance() {
    for n in 1..=4u32 {
        let cov = excursion_covariance(n);
        let size = (1usize << (n + 1)) - 1;
        for a in 1..=size {
            for b in 1..=size {
                let (u, v) = (VertexId::from_heap(a as u64), VertexId::from_heap(b as u64));
                assert_eq!(single_excursion_covariance(u, v), to_f64(cov[a][b]), "n={n} heaps {a},{b}");
            }
        }
    }
}

#[test]
fn non_nested_pairs_exceed_twice_the_common_depth() {
    let cov = excursion_covariance(3);
    // siblings at level 3 meet at level 2
    assert_eq!(cov[8][9], q(5));
    // cousins meeting at the top vertex
    assert_eq!(cov[8][15], q(1));
    // nested: ancestor at level 2
    assert_eq!(cov[4][9], q(4));
}

#[test]
fn occupation_variance() {
    let frozen = [(1u32, Q::new(3, 2)), (2, Q::new(33, 8)), (3, Q::new(213, 32)), (4, Q::new(1101, 128))];
    for (n, want) in frozen {
        let cov = excursion_covariance(n);
        let total: Q = cov.iter().flatten().copied().sum();
        let var = total / q(1i128 << (2 * n));
        assert_eq!(var, want, "n={n}");
        assert!((var_r_single(n) - to_f64(want)).abs() < 1e-12);
    }
}
