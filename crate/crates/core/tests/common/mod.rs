//! Exact rational oracles for small trees, computed from the transition matrix of
//! the walk and independent of the crate's closed forms.

#![allow(dead_code, clippy::needless_range_loop)]

use num_rational::Ratio;

pub type Q = Ratio<i128>;

pub fn q(n: i128) -> Q {
    Q::from_integer(n)
}

/// Solves `a x = b` by Gauss–Jordan elimination over the rationals.
pub fn solve(mut a: Vec<Vec<Q>>, mut b: Vec<Q>) -> Vec<Q> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| a[r][col] != q(0)).expect("singular system");
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col];
        for k in col..n {
            a[col][k] /= p;
        }
        b[col] /= p;
        for r in 0..n {
            if r != col && a[r][col] != q(0) {
                let f = a[r][col];
                for k in col..n {
                    let v = a[col][k];
                    a[r][k] -= f * v;
                }
                let v = b[col];
                b[r] -= f * v;
            }
        }
    }
    b
}

/// Neighbours of heap vertex `h` in `T_n` with the extra root `0`.
pub fn neighbours(n: u32, h: usize) -> Vec<usize> {
    let first_leaf = 1usize << n;
    match h {
        0 => vec![1],
        _ if h >= first_leaf => vec![h / 2],
        _ => vec![h / 2, 2 * h, 2 * h + 1],
    }
}

/// `G[x][y]`: expected visits to `y` (time 0 included) of the walk started at
/// `x` and killed on reaching `0`, for heap vertices `1..2^{n+1}`.
pub fn green(n: u32) -> Vec<Vec<Q>> {
    let size = (1usize << (n + 1)) - 1;
    // (I − Q) G = I, column by column
    let mut m = vec![vec![q(0); size]; size];
    for x in 1..=size {
        m[x - 1][x - 1] += q(1);
        let nb = neighbours(n, x);
        let p = Q::new(1, nb.len() as i128);
        for y in nb.into_iter().filter(|&y| y != 0) {
            m[x - 1][y - 1] -= p;
        }
    }
    let cols: Vec<Vec<Q>> =
        (0..size).map(|j| solve(m.clone(), (0..size).map(|i| if i == j { q(1) } else { q(0) }).collect())).collect();
    let mut g = vec![vec![q(0); size + 1]; size + 1];
    for (j, col) in cols.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            g[i + 1][j + 1] = *v;
        }
    }
    g
}

/// Exact `Cov(T_u, T_v)` of down-crossing counts in one root excursion, indexed by heap.
///
/// The excursion enters vertex 1 at once, so `T_1 = 1`. For `v ≥ 2` the
/// down-crossings of the edge into `v` are the `p → v` transitions with `p = v/2`,
/// and products of transition counts follow from the Green function.
pub fn excursion_covariance(n: u32) -> Vec<Vec<Q>> {
    let size = (1usize << (n + 1)) - 1;
    let g = green(n);
    let third = Q::new(1, 3);
    let mean = |v: usize| if v == 1 { q(1) } else { g[1][v / 2] * third };
    let mut cov = vec![vec![q(0); size + 1]; size + 1];
    for u in 2..=size {
        for v in 2..=size {
            let second = if u == v {
                mean(v) + q(2) * mean(v) * g[v][v / 2] * third
            } else {
                mean(u) * g[u][v / 2] * third + mean(v) * g[v][u / 2] * third
            };
            cov[u][v] = second - mean(u) * mean(v);
        }
    }
    cov
}

/// Exact `E[C_n]` from the chain on (position, visited leaves).
pub fn expected_cover_steps(n: u32) -> Q {
    let first_leaf = 1usize << n;
    let leaves = first_leaf;
    let verts = 2 * first_leaf;
    let full = (1usize << leaves) - 1;
    // e[set][x]: expected remaining steps at x having visited `set`
    let mut e = vec![vec![q(0); verts]; full + 1];
    for set in (0..full).rev() {
        let valid: Vec<usize> = (0..verts).filter(|&x| x < first_leaf || set & (1 << (x - first_leaf)) != 0).collect();
        let index = |x: usize| valid.iter().position(|&y| y == x);
        let mut a = vec![vec![q(0); valid.len()]; valid.len()];
        let mut b = vec![q(1); valid.len()];
        for (i, &x) in valid.iter().enumerate() {
            a[i][i] += q(1);
            let nb = neighbours(n, x);
            let p = Q::new(1, nb.len() as i128);
            for y in nb {
                let fresh = y >= first_leaf && set & (1 << (y - first_leaf)) == 0;
                if fresh {
                    let next = set | (1 << (y - first_leaf));
                    b[i] += p * e[next][y];
                } else {
                    a[i][index(y).expect("visited position")] -= p;
                }
            }
        }
        for (x, v) in valid.iter().zip(solve(a, b)) {
            e[set][*x] = v;
        }
    }
    e[0][0]
}

pub fn to_f64(x: Q) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}
