//! Streaming outlier detection with the Local Outlier Factor family.
//!
//! The crate provides the batch LOF computation, two incremental detectors
//! over a shared reachability-distance matrix (ILOF, which keeps scores
//! equal to a batch recomputation after every insertion, and EILOF, which
//! scores only new points and never rewrites existing scores), plus the
//! synthetic data generator, CSV preprocessing recipes, evaluation metrics,
//! and experiment harness used to compare the two engines.

pub mod data;
pub mod engine;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod ingest;
pub mod lof;
pub mod matrix;
pub mod synth;

pub use data::{Dataset, Point};
pub use engine::{Algo, DetectorState, InsertStats};
pub use error::{Error, Result};
pub use eval::{f1_report, flag_outliers, EvalReport, ThresholdRule};
pub use experiment::{
    bench_to_json, bench_updates, export_grid, export_grid_to_file, import_grid_csv,
    plan_from_toml, run_plan, EvalScope, ExperimentPlan, ExportFormat, GridCell, PlanSource,
    ResultGrid, UpdateBench, UpdateSeries,
};
pub use ingest::{
    load_csv, prep_credit, prep_shuttle, standardize, write_csv, ColumnRef, ColumnSelect,
    CreditRecipe, CsvSchema, ShuttleRecipe,
};
pub use lof::{
    euclidean_distance, knn_query, lrd, reach_distance, static_lof, LofParams, Neighbor,
    NeighborList, LRD_EPSILON,
};
pub use matrix::ReachabilityMatrix;
pub use synth::{generate, GaussianSource, SplitMix64, SynthRecipe};
