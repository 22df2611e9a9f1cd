//! Shared generators and brute-force oracles for the integration tests.

#![allow(dead_code)]

use avc_core::{Avc, Channel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

pub fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Uniform point on the simplex via normalized exponentials.
pub fn random_simplex_point(rng: &mut ChaCha12Rng, d: usize) -> Vec<f64> {
    let mut raw: Vec<f64> = (0..d)
        .map(|_| -(1.0 - rng.random::<f64>()).ln())
        .collect();
    let total: f64 = raw.iter().sum();
    for v in raw.iter_mut() {
        *v /= total;
    }
    raw
}

pub fn random_channel(rng: &mut ChaCha12Rng, nx: usize, ny: usize) -> Channel {
    Channel::from_rows((0..nx).map(|_| random_simplex_point(rng, ny)).collect()).unwrap()
}

pub fn random_avc(rng: &mut ChaCha12Rng, nx: usize, ns: usize, ny: usize) -> Avc {
    Avc::from_tensor(
        (0..ns)
            .map(|_| (0..nx).map(|_| random_simplex_point(rng, ny)).collect())
            .collect(),
    )
    .unwrap()
}

/// Standard normal via Box-Muller.
pub fn random_normal(rng: &mut ChaCha12Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// A random direction inside the sum-zero hyperplane.
pub fn random_centered_direction(rng: &mut ChaCha12Rng, d: usize) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..d).map(|_| random_normal(rng)).collect();
        let mean = v.iter().sum::<f64>() / d as f64;
        for x in v.iter_mut() {
            *x -= mean;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            for x in v.iter_mut() {
                *x /= norm;
            }
            return v;
        }
    }
}

/// All points of the `parts`-outcome simplex with coordinates on a
/// `1/denominator` grid.
pub fn simplex_grid(denominator: usize, parts: usize) -> Vec<Vec<f64>> {
    fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
        if parts == 1 {
            return vec![vec![total]];
        }
        let mut out = Vec::new();
        for first in 0..=total {
            for mut rest in compositions(total - first, parts - 1) {
                let mut c = vec![first];
                c.append(&mut rest);
                out.push(c);
            }
        }
        out
    }
    compositions(denominator, parts)
        .into_iter()
        .map(|c| c.iter().map(|&k| k as f64 / denominator as f64).collect())
        .collect()
}

/// Brute-force hull intersection oracle: scans mixture weights on a
/// `1/step_denominator` grid and reports the smallest sup-norm gap between
/// the two hulls along with the intersection verdict at `tol`.
pub fn grid_hulls_intersect(
    points_a: &[Vec<f64>],
    points_b: &[Vec<f64>],
    step_denominator: usize,
    tol: f64,
) -> (bool, f64) {
    let weights_a = simplex_grid(step_denominator, points_a.len());
    let weights_b = simplex_grid(step_denominator, points_b.len());
    let combine = |points: &[Vec<f64>], weights: &[f64]| -> Vec<f64> {
        let d = points[0].len();
        let mut out = vec![0.0; d];
        for (p, &w) in points.iter().zip(weights) {
            for (o, &v) in out.iter_mut().zip(p) {
                *o += w * v;
            }
        }
        out
    };
    let candidates_a: Vec<Vec<f64>> = weights_a.iter().map(|w| combine(points_a, w)).collect();
    let candidates_b: Vec<Vec<f64>> = weights_b.iter().map(|w| combine(points_b, w)).collect();
    let mut min_gap = f64::INFINITY;
    for a in &candidates_a {
        for b in &candidates_b {
            let gap = a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0f64, f64::max);
            if gap < min_gap {
                min_gap = gap;
            }
        }
    }
    (min_gap <= tol, min_gap)
}

/// Two random hull generator sets split cleanly by a random hyperplane, so
/// the hulls are disjoint with a real margin.
pub fn random_disjoint_hulls(
    rng: &mut ChaCha12Rng,
    d: usize,
    per_side: usize,
    clearance: f64,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    loop {
        let normal = random_centered_direction(rng, d);
        let offset: f64 = normal.iter().sum::<f64>() / d as f64;
        let mut below = Vec::new();
        let mut above = Vec::new();
        for _ in 0..4000 {
            let p = random_simplex_point(rng, d);
            let side: f64 = normal.iter().zip(&p).map(|(n, x)| n * x).sum::<f64>() - offset;
            if side < -clearance && below.len() < per_side {
                below.push(p);
            } else if side > clearance && above.len() < per_side {
                above.push(p);
            }
            if below.len() == per_side && above.len() == per_side {
                return (below, above);
            }
        }
    }
}
