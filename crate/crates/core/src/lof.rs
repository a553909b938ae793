//! Batch Local Outlier Factor: distances, exact kNN queries, reach-distance,
//! local reachability density, and LOF scores.
//!
//! Neighbor queries return exactly `k` neighbors, with ties broken by lower
//! insertion index. That rule makes every quantity here deterministic and is
//! what lets the incremental engine be checked against this batch path.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Point};
use crate::error::{Error, Result};
use crate::matrix::ReachabilityMatrix;

/// Floor applied to the mean reach-distance before taking its reciprocal, so
/// coincident points produce a large finite density instead of a division
/// error.
pub const LRD_EPSILON: f64 = 1e-12;

/// Detector parameters: the neighborhood size `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LofParams {
    k: usize,
}

impl LofParams {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter {
                name: "k",
                reason: "k must be at least 1".into(),
            });
        }
        Ok(Self { k })
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

/// One entry of a neighbor list.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

/// The `k` nearest neighbors of one point, sorted ascending by
/// `(distance, index)`, together with the k-distance (distance of the last
/// entry).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborList {
    pub owner: usize,
    pub neighbors: Vec<Neighbor>,
    pub k_distance: f64,
}

impl NeighborList {
    pub fn contains(&self, index: usize) -> bool {
        self.neighbors.iter().any(|n| n.index == index)
    }

    pub fn neighbor_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.neighbors.iter().map(|n| n.index)
    }
}

/// Euclidean distance between two points of equal dimension.
pub fn euclidean_distance(a: &Point, b: &Point) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    Ok(distance(a.coords(), b.coords()))
}

/// Distance over raw coordinate slices; callers guarantee equal length.
pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    let mut sum = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        sum += d * d;
    }
    sum.sqrt()
}

fn cmp_by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> std::cmp::Ordering {
    // Distances are finite by the dataset invariant.
    a.0.partial_cmp(&b.0)
        .expect("finite distance")
        .then_with(|| a.1.cmp(&b.1))
}

/// Exact k-nearest-neighbor query for the point at `idx`, excluding itself.
pub fn knn_query(ds: &Dataset, idx: usize, k: usize) -> Result<NeighborList> {
    let n = ds.len();
    if k == 0 {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: "k must be at least 1".into(),
        });
    }
    if n < k + 1 {
        return Err(Error::InsufficientPoints {
            required: k + 1,
            actual: n,
        });
    }
    let own = ds.point(idx).coords();
    let mut candidates: Vec<(f64, usize)> = (0..n)
        .filter(|&j| j != idx)
        .map(|j| (distance(own, ds.point(j).coords()), j))
        .collect();
    Ok(select_k(idx, &mut candidates, k))
}

/// Selects and sorts the `k` smallest `(distance, index)` pairs.
pub(crate) fn select_k(owner: usize, candidates: &mut [(f64, usize)], k: usize) -> NeighborList {
    if k < candidates.len() {
        candidates.select_nth_unstable_by(k - 1, cmp_by_distance_then_index);
    }
    let top = &mut candidates[..k];
    top.sort_unstable_by(cmp_by_distance_then_index);
    let neighbors: Vec<Neighbor> = top
        .iter()
        .map(|&(distance, index)| Neighbor { index, distance })
        .collect();
    let k_distance = neighbors[k - 1].distance;
    NeighborList {
        owner,
        neighbors,
        k_distance,
    }
}

/// Reach-distance: the maximum of the actual distance `d(p, q)` and the
/// k-distance of `q`.
pub fn reach_distance(d_pq: f64, k_dist_q: f64) -> Result<f64> {
    for value in [d_pq, k_dist_q] {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::NegativeDistance { value });
        }
    }
    Ok(d_pq.max(k_dist_q))
}

/// Local reachability density: reciprocal of the mean reach-distance,
/// floored at [`LRD_EPSILON`].
pub fn lrd(mean_reach: f64) -> f64 {
    1.0 / mean_reach.max(LRD_EPSILON)
}

/// Batch LOF scores for every point of the dataset.
pub fn static_lof(ds: &Dataset, params: &LofParams) -> Result<Vec<f64>> {
    Ok(batch_tables(ds, params)?.lof)
}

/// Everything the batch computation produces; the streaming engines start
/// from these tables so their initial state matches `static_lof` exactly.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct BatchTables {
    pub neighbor_lists: Vec<NeighborList>,
    pub rdm: ReachabilityMatrix,
    pub lrd: Vec<f64>,
    pub lof: Vec<f64>,
}

pub(crate) fn batch_tables(ds: &Dataset, params: &LofParams) -> Result<BatchTables> {
    let n = ds.len();
    let k = params.k();
    if n < k + 1 {
        return Err(Error::InsufficientPoints {
            required: k + 1,
            actual: n,
        });
    }

    let mut neighbor_lists = Vec::with_capacity(n);
    let mut candidates: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for i in 0..n {
        candidates.clear();
        let own = ds.point(i).coords();
        for j in 0..n {
            if j != i {
                candidates.push((distance(own, ds.point(j).coords()), j));
            }
        }
        neighbor_lists.push(select_k(i, &mut candidates, k));
    }

    let mut rdm = ReachabilityMatrix::new();
    for nl in &neighbor_lists {
        let row = rdm.push_row();
        for nb in &nl.neighbors {
            rdm.set(
                row,
                nb.index,
                nb.distance.max(neighbor_lists[nb.index].k_distance),
            );
        }
    }

    let lrd_values: Vec<f64> = (0..n)
        .map(|i| lrd_from_row(&rdm, &neighbor_lists[i]))
        .collect();
    let lof = (0..n)
        .map(|i| lof_from_lrd(&lrd_values, &neighbor_lists[i], lrd_values[i]))
        .collect();

    Ok(BatchTables {
        neighbor_lists,
        rdm,
        lrd: lrd_values,
        lof,
    })
}

/// LRD of a point from its stored reach-distance row, iterating neighbors in
/// list order so batch and incremental paths accumulate identically.
pub(crate) fn lrd_from_row(rdm: &ReachabilityMatrix, nl: &NeighborList) -> f64 {
    let mut sum = 0.0;
    for nb in &nl.neighbors {
        sum += rdm
            .get(nl.owner, nb.index)
            .expect("row entry present for every neighbor");
    }
    lrd(sum / nl.neighbors.len() as f64)
}

/// LOF of a point from the current LRD table.
pub(crate) fn lof_from_lrd(lrd_values: &[f64], nl: &NeighborList, own_lrd: f64) -> f64 {
    let mut sum = 0.0;
    for nb in &nl.neighbors {
        sum += lrd_values[nb.index];
    }
    sum / nl.neighbors.len() as f64 / own_lrd
}
