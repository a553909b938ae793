//! Incremental detectors: ILOF and EILOF.
//!
//! Both engines start from the same batch state. They differ in what an
//! insertion touches:
//!
//! * ILOF cascades k-distance, reach-distance, LRD, and LOF updates through
//!   every affected point so that after each insertion its scores equal the
//!   batch computation on the accumulated dataset.
//! * EILOF writes exactly k reach-distance entries in the new row, at most k
//!   in the new column (only for reciprocal neighbors), refreshes LRD for
//!   those reciprocal neighbors, scores the new point once, and never touches
//!   any existing LOF score. Stale reach-distance entries are deliberately
//!   reused; that approximation is the algorithm.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Point};
use crate::error::{Error, Result};
use crate::lof::{
    batch_tables, distance, lof_from_lrd, lrd_from_row, select_k, LofParams, Neighbor, NeighborList,
};
use crate::matrix::ReachabilityMatrix;

/// Which incremental update rule a detector applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Ilof,
    Eilof,
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algo::Ilof => write!(f, "ILOF"),
            Algo::Eilof => write!(f, "EILOF"),
        }
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ilof" => Ok(Algo::Ilof),
            "eilof" => Ok(Algo::Eilof),
            other => Err(Error::InvalidParameter {
                name: "algo",
                reason: format!("unknown algorithm {other:?}, expected ilof or eilof"),
            }),
        }
    }
}

/// Work accounting for a single insertion, in the reachability-matrix cost
/// model: entries written into the new row, entries written into any column
/// of an existing row, and how many LRD/LOF values were recomputed
/// (including the new point's own).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InsertStats {
    pub row_entries_written: usize,
    pub column_entries_written: usize,
    pub lrd_recomputed: usize,
    pub lof_recomputed: usize,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl InsertStats {
    /// Total touched work, used for the per-insertion dominance comparison.
    pub fn touched(&self) -> usize {
        self.row_entries_written
            + self.column_entries_written
            + self.lrd_recomputed
            + self.lof_recomputed
    }
}

/// Mutable state of one streaming detector. Single-writer: insertions are
/// strictly sequential per state; distinct states may run in parallel.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorState {
    dataset: Dataset,
    params: LofParams,
    algo: Algo,
    neighbor_lists: Vec<NeighborList>,
    rdm: ReachabilityMatrix,
    lrd: Vec<f64>,
    lof: Vec<f64>,
    /// ILOF only: `reverse[j]` holds every `x` with `j` in the stored kNN of
    /// `x`. EILOF never consults reverse neighborhoods, so this stays empty.
    reverse: Vec<BTreeSet<usize>>,
}

impl DetectorState {
    /// Builds the static baseline both algorithms assume, by the same batch
    /// computation as `static_lof`.
    pub fn init(dataset: Dataset, params: LofParams, algo: Algo) -> Result<Self> {
        let dataset = dataset.without_labels();
        let tables = batch_tables(&dataset, &params)?;
        let reverse = match algo {
            Algo::Ilof => {
                let mut reverse = vec![BTreeSet::new(); dataset.len()];
                for nl in &tables.neighbor_lists {
                    for nb in &nl.neighbors {
                        reverse[nb.index].insert(nl.owner);
                    }
                }
                reverse
            }
            Algo::Eilof => Vec::new(),
        };
        Ok(Self {
            dataset,
            params,
            algo,
            neighbor_lists: tables.neighbor_lists,
            rdm: tables.rdm,
            lrd: tables.lrd,
            lof: tables.lof,
            reverse,
        })
    }

    /// Inserts one point and updates the state per the detector's algorithm.
    pub fn insert(&mut self, point: Point) -> Result<InsertStats> {
        let dim = self.dataset.dim().expect("detector datasets are non-empty");
        if point.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: point.dim(),
            });
        }
        Ok(match self.algo {
            Algo::Ilof => self.ilof_insert(point),
            Algo::Eilof => self.eilof_insert(point),
        })
    }

    /// Current LOF scores, one per point, in insertion order.
    pub fn scores(&self) -> &[f64] {
        &self.lof
    }

    pub fn len(&self) -> usize {
        self.dataset.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dataset.is_empty()
    }

    pub fn algo(&self) -> Algo {
        self.algo
    }

    pub fn params(&self) -> LofParams {
        self.params
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn reachability_matrix(&self) -> &ReachabilityMatrix {
        &self.rdm
    }

    pub fn neighbor_list(&self, index: usize) -> &NeighborList {
        &self.neighbor_lists[index]
    }

    pub fn lrd_values(&self) -> &[f64] {
        &self.lrd
    }

    /// Distances from a new point to every stored point, plus its neighbor
    /// list over the post-insertion dataset.
    fn incoming_neighbors(&self, point: &Point) -> (Vec<f64>, NeighborList) {
        let n_pre = self.dataset.len();
        let dists: Vec<f64> = (0..n_pre)
            .map(|i| distance(point.coords(), self.dataset.point(i).coords()))
            .collect();
        let mut candidates: Vec<(f64, usize)> =
            dists.iter().enumerate().map(|(i, &d)| (d, i)).collect();
        let nl = select_k(n_pre, &mut candidates, self.params.k());
        (dists, nl)
    }

    /// Refreshes the stored neighbor list of `owner` after the new point at
    /// `new_idx` (at distance `d`, strictly inside the old k-distance)
    /// displaces its k-th neighbor. Returns the evicted index.
    fn adopt_new_neighbor(&mut self, owner: usize, new_idx: usize, d: f64) -> usize {
        let nl = &mut self.neighbor_lists[owner];
        // The new point carries the largest index, so it sorts after all
        // entries at equal distance.
        let pos = nl.neighbors.partition_point(|nb| nb.distance <= d);
        nl.neighbors.insert(
            pos,
            Neighbor {
                index: new_idx,
                distance: d,
            },
        );
        let evicted = nl.neighbors.pop().expect("list has k+1 entries").index;
        nl.k_distance = nl.neighbors.last().expect("non-empty").distance;
        self.rdm.remove(owner, evicted);
        evicted
    }

    /// Algorithm: incremental LOF update. After return, the scores equal the
    /// batch computation on the accumulated dataset; the update set is
    /// extended beyond the adopters wherever a k-distance, LRD, or neighbor
    /// LRD change propagates.
    fn ilof_insert(&mut self, point: Point) -> InsertStats {
        let start = Instant::now();
        let k = self.params.k();
        let n_pre = self.dataset.len();
        let new_idx = n_pre;
        let mut stats = InsertStats::default();

        let (dists, nl_new) = self.incoming_neighbors(&point);
        let kdist_new = nl_new.k_distance;

        // Old points whose kNN now include the new point: strict inequality,
        // because at equal distance the lower existing index wins.
        let adopters: Vec<usize> = (0..n_pre)
            .filter(|&i| dists[i] < self.neighbor_lists[i].k_distance)
            .collect();

        self.dataset
            .push(point)
            .expect("dimension checked by insert");
        self.rdm.push_row();
        self.reverse.push(BTreeSet::new());
        for nb in &nl_new.neighbors {
            self.reverse[nb.index].insert(new_idx);
        }
        self.neighbor_lists.push(nl_new);

        for &i in &adopters {
            let evicted = self.adopt_new_neighbor(i, new_idx, dists[i]);
            self.reverse[evicted].remove(&i);
            self.reverse[new_idx].insert(i);
        }

        // New row: reach-distances from the new point, using post-insertion
        // k-distances (adopters were refreshed above).
        for pos in 0..k {
            let nb = self.neighbor_lists[new_idx].neighbors[pos];
            let reach = nb.distance.max(self.neighbor_lists[nb.index].k_distance);
            self.rdm.set(new_idx, nb.index, reach);
            stats.row_entries_written += 1;
        }

        // New column: entries from adopters to the new point.
        for &i in &adopters {
            self.rdm.set(i, new_idx, dists[i].max(kdist_new));
            stats.column_entries_written += 1;
        }

        // Changed k-distances invalidate every reach-distance toward the
        // adopter: rewrite its column. Only entries resident in some kNN row
        // are stored, but the cost model counts the full old column.
        for &i in &adopters {
            stats.column_entries_written += n_pre;
            let kdist_i = self.neighbor_lists[i].k_distance;
            let holders: Vec<usize> = self.reverse[i].iter().copied().collect();
            for x in holders {
                if x == new_idx {
                    continue; // already written with the refreshed k-distance
                }
                let d_xi = self.neighbor_lists[x]
                    .neighbors
                    .iter()
                    .find(|nb| nb.index == i)
                    .expect("reverse index consistent with neighbor lists")
                    .distance;
                self.rdm.set(x, i, d_xi.max(kdist_i));
            }
        }

        // LRD changes where a neighbor set changed or a row entry changed.
        let mut lrd_set: BTreeSet<usize> = adopters.iter().copied().collect();
        for &i in &adopters {
            for &x in &self.reverse[i] {
                if x != new_idx {
                    lrd_set.insert(x);
                }
            }
        }
        for &x in &lrd_set {
            self.lrd[x] = lrd_from_row(&self.rdm, &self.neighbor_lists[x]);
            stats.lrd_recomputed += 1;
        }
        let lrd_new = lrd_from_row(&self.rdm, &self.neighbor_lists[new_idx]);
        self.lrd.push(lrd_new);
        stats.lrd_recomputed += 1;

        // LOF changes where an own or neighbor LRD changed.
        let mut lof_set = lrd_set.clone();
        for &v in &lrd_set {
            for &x in &self.reverse[v] {
                if x != new_idx {
                    lof_set.insert(x);
                }
            }
        }
        for &x in &lof_set {
            self.lof[x] = lof_from_lrd(&self.lrd, &self.neighbor_lists[x], self.lrd[x]);
            stats.lof_recomputed += 1;
        }
        let lof_new = lof_from_lrd(&self.lrd, &self.neighbor_lists[new_idx], lrd_new);
        self.lof.push(lof_new);
        stats.lof_recomputed += 1;

        stats.wall_time = start.elapsed();
        stats
    }

    /// Algorithm: efficient incremental LOF update. Exactly k new-row
    /// entries; column writes, neighbor-list refreshes, and LRD updates only
    /// for reciprocal neighbors; one LOF computation; existing LOF scores
    /// are never written.
    fn eilof_insert(&mut self, point: Point) -> InsertStats {
        let start = Instant::now();
        let k = self.params.k();
        let n_pre = self.dataset.len();
        let new_idx = n_pre;
        let mut stats = InsertStats::default();

        let (_, nl_new) = self.incoming_neighbors(&point);
        let kdist_new = nl_new.k_distance;

        self.dataset
            .push(point)
            .expect("dimension checked by insert");
        self.rdm.push_row();

        let mut updates: Vec<usize> = Vec::new();
        for pos in 0..k {
            let Neighbor {
                index: j,
                distance: d,
            } = nl_new.neighbors[pos];
            if d < self.neighbor_lists[j].k_distance {
                // Reciprocal neighbor: the new point enters j's stored kNN.
                self.adopt_new_neighbor(j, new_idx, d);
                self.rdm.set(j, new_idx, d.max(kdist_new));
                stats.column_entries_written += 1;
                updates.push(j);
            }
            // Post-insertion k-distance of j: refreshed above when j adopted.
            let reach = d.max(self.neighbor_lists[j].k_distance);
            self.rdm.set(new_idx, j, reach);
            stats.row_entries_written += 1;
        }
        self.neighbor_lists.push(nl_new);

        // Reciprocal neighbors get their LRD refreshed from stored entries;
        // entries for unchanged neighbors are reused as-is.
        for &j in &updates {
            self.lrd[j] = lrd_from_row(&self.rdm, &self.neighbor_lists[j]);
            stats.lrd_recomputed += 1;
        }
        let lrd_new = lrd_from_row(&self.rdm, &self.neighbor_lists[new_idx]);
        self.lrd.push(lrd_new);
        stats.lrd_recomputed += 1;

        let lof_new = lof_from_lrd(&self.lrd, &self.neighbor_lists[new_idx], lrd_new);
        self.lof.push(lof_new);
        stats.lof_recomputed += 1;

        stats.wall_time = start.elapsed();
        stats
    }
}
