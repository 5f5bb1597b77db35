//! Random scenario generators shared by the integration tests.

#![allow(dead_code)]

use rand::Rng;
use signed_consensus::signed_graph::{Schedule, Segment, SignedMatrix};

/// Random signed matrix; each off-diagonal entry is present with
/// probability `density`, with magnitude in `[0.2, 2]`. With `digon_sym`
/// the reverse arc of a present arc reuses its sign (or is absent).
pub fn matrix(rng: &mut impl Rng, n: usize, density: f64, digon_sym: bool) -> SignedMatrix {
    let mut rows = vec![vec![0.0; n]; n];
    for j in 0..n {
        for k in 0..n {
            if j == k || !rng.random_bool(density) {
                continue;
            }
            let mag = rng.random_range(0.2..2.0);
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            rows[j][k] = sign * mag;
        }
    }
    if digon_sym {
        for j in 0..n {
            for k in j + 1..n {
                if rows[j][k] * rows[k][j] < 0.0 {
                    rows[k][j] = -rows[k][j];
                }
            }
        }
    }
    SignedMatrix::from_rows(&rows).unwrap()
}

/// Matrix with entries drawn from `{-1, 0, 1}`, digon-sign-symmetric.
pub fn unit_matrix(rng: &mut impl Rng, n: usize) -> SignedMatrix {
    let mut rows = vec![vec![0.0; n]; n];
    for j in 0..n {
        for k in j + 1..n {
            let s = [-1.0, 1.0][rng.random_range(0..2)];
            rows[j][k] = if rng.random_bool(0.5) { s } else { 0.0 };
            rows[k][j] = if rng.random_bool(0.5) { s } else { 0.0 };
        }
    }
    SignedMatrix::from_rows(&rows).unwrap()
}

/// Every digon-sign-symmetric `n x n` matrix with entries in `{-1, 0, 1}`.
pub fn all_unit_matrices(n: usize) -> Vec<SignedMatrix> {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|j| (j + 1..n).map(move |k| (j, k)))
        .collect();
    // per unordered pair: both zero, or a sign with each direction on/off
    let choices: [(f64, f64); 7] = [
        (0.0, 0.0),
        (1.0, 0.0),
        (0.0, 1.0),
        (1.0, 1.0),
        (-1.0, 0.0),
        (0.0, -1.0),
        (-1.0, -1.0),
    ];
    let total = choices.len().pow(pairs.len() as u32);
    (0..total)
        .map(|mut code| {
            let mut rows = vec![vec![0.0; n]; n];
            for &(j, k) in &pairs {
                let (a, b) = choices[code % choices.len()];
                code /= choices.len();
                rows[j][k] = a;
                rows[k][j] = b;
            }
            SignedMatrix::from_rows(&rows).unwrap()
        })
        .collect()
}

pub fn schedule(rng: &mut impl Rng, n: usize) -> Schedule {
    let count = rng.random_range(1..=4);
    let mut t = 0.0;
    let mut segments = Vec::with_capacity(count);
    for _ in 0..count {
        let len = rng.random_range(0.2..1.5);
        segments.push(Segment {
            t_start: t,
            t_end: t + len,
            matrix: matrix(rng, n, 0.5, false),
        });
        t += len;
    }
    let period = rng.random_bool(0.5).then_some(t);
    Schedule::new(segments, period).unwrap()
}

pub fn state(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn signs(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect()
}

pub fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}
