//! Shared test helpers: an independent LOF oracle and dataset builders.
//! Each integration-test target compiles this module separately and uses a
//! different subset of it.
#![allow(dead_code)]
//!
//! The oracle is a deliberately plain transcription of the defining
//! formulas, kept separate from the library's computation path so the two
//! can check each other: full distance matrix, stable full sorts, exactly k
//! neighbors with ties broken by lower index, reach = max(d, k-dist),
//! lrd = 1 / max(mean reach, 1e-12), lof = mean(lrd of neighbors) / lrd.

use lofstream_core::{Dataset, Point};

pub fn oracle_lof(points: &[Vec<f64>], k: usize) -> Vec<f64> {
    let n = points.len();
    assert!(n > k, "oracle needs more than k points");
    let dist = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };

    let mut matrix = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            matrix[i][j] = dist(&points[i], &points[j]);
        }
    }

    // k nearest neighbors of every point, (distance, index) ascending.
    let mut neighbors: Vec<Vec<usize>> = Vec::with_capacity(n);
    let mut k_dist = vec![0.0; n];
    for i in 0..n {
        let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| {
            matrix[i][a]
                .partial_cmp(&matrix[i][b])
                .unwrap()
                .then(a.cmp(&b))
        });
        order.truncate(k);
        k_dist[i] = matrix[i][order[k - 1]];
        neighbors.push(order);
    }

    let mut lrd = vec![0.0; n];
    for i in 0..n {
        let mut sum = 0.0;
        for &o in &neighbors[i] {
            let reach = if matrix[i][o] > k_dist[o] {
                matrix[i][o]
            } else {
                k_dist[o]
            };
            sum += reach;
        }
        let mean = sum / k as f64;
        lrd[i] = 1.0 / mean.max(1e-12);
    }

    let mut lof = vec![0.0; n];
    for i in 0..n {
        let sum: f64 = neighbors[i].iter().map(|&o| lrd[o]).sum();
        lof[i] = sum / k as f64 / lrd[i];
    }
    lof
}

/// Deterministic pseudo-random coordinates in [-half, half)^dim from a tiny
/// xorshift, independent of the library's generator.
pub struct TestRng(pub u64);

impl TestRng {
    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn point(&mut self, dim: usize, half: f64) -> Vec<f64> {
        (0..dim)
            .map(|_| (self.next_f64() - 0.5) * 2.0 * half)
            .collect()
    }
}

pub fn random_points(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = TestRng(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1);
    (0..n).map(|_| rng.point(dim, 5.0)).collect()
}

pub fn as_dataset(points: &[Vec<f64>]) -> Dataset {
    Dataset::new(
        points
            .iter()
            .map(|c| Point::new(c.clone()).unwrap())
            .collect(),
    )
    .unwrap()
}

/// Repo-root data directory, overridable for out-of-tree checkouts.
pub fn shuttle_csv_path() -> std::path::PathBuf {
    if let Some(p) = std::env::var_os("SHUTTLE_CSV") {
        return p.into();
    }
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/shuttle.csv")
}
