//! Declarative experiment harness: k-by-m sweeps over both engines with
//! checkpointed evaluation, the per-insertion update benchmark, and grid
//! exports.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::Dataset;
use crate::engine::{Algo, DetectorState, InsertStats};
use crate::error::{Error, Result};
use crate::eval::{f1_report, flag_outliers, EvalReport, ThresholdRule};
use crate::ingest::{
    format_value, load_csv, prep_credit, prep_shuttle, ColumnRef, ColumnSelect, CreditRecipe,
    CsvSchema, ShuttleRecipe,
};
use crate::lof::LofParams;
use crate::synth::{generate, SynthRecipe};

/// Which points a checkpoint evaluation covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalScope {
    /// Baseline plus streamed points (the default reading of the tables).
    AllPoints,
    /// Only the streamed points inserted so far.
    StreamedOnly,
}

impl std::str::FromStr for EvalScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "all_points" => Ok(EvalScope::AllPoints),
            "streamed_only" => Ok(EvalScope::StreamedOnly),
            other => Err(Error::InvalidParameter {
                name: "eval_scope",
                reason: format!("unknown scope {other:?}, expected all_points or streamed_only"),
            }),
        }
    }
}

/// Where the initial/stream dataset pair comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlanSource {
    Synth(SynthRecipe),
    Passthrough {
        initial: PathBuf,
        stream: PathBuf,
    },
    Shuttle {
        path: PathBuf,
        recipe: ShuttleRecipe,
    },
    Credit {
        path: PathBuf,
        recipe: CreditRecipe,
    },
}

/// Declarative sweep description; one grid run per (algo, k, m, threshold).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub source: PlanSource,
    pub k_values: Vec<usize>,
    pub m_schedule: Vec<usize>,
    pub thresholds: Vec<f64>,
    pub algos: Vec<Algo>,
    pub eval_scope: EvalScope,
    pub repetitions: usize,
    pub seed: u64,
}

impl ExperimentPlan {
    /// SHA-256 over the canonical JSON serialization of the plan.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("plans serialize");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    fn validate(&self) -> Result<()> {
        if self.k_values.is_empty() {
            return Err(Error::InvalidPlan("k_values must be non-empty".into()));
        }
        if self.m_schedule.is_empty() {
            return Err(Error::InvalidPlan("m_schedule must be non-empty".into()));
        }
        if self.thresholds.is_empty() {
            return Err(Error::InvalidPlan("thresholds must be non-empty".into()));
        }
        if self.algos.is_empty() {
            return Err(Error::InvalidPlan("algos must be non-empty".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidPlan("repetitions must be at least 1".into()));
        }
        for &t in &self.thresholds {
            ThresholdRule::new(t)?;
        }
        Ok(())
    }
}

/// Cumulative insertion work up to a checkpoint.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CumulativeStats {
    pub insertions: usize,
    pub row_entries: usize,
    pub column_entries: usize,
    pub lrd_recomputed: usize,
    pub lof_recomputed: usize,
}

impl CumulativeStats {
    fn add(&mut self, stats: &InsertStats) {
        self.insertions += 1;
        self.row_entries += stats.row_entries_written;
        self.column_entries += stats.column_entries_written;
        self.lrd_recomputed += stats.lrd_recomputed;
        self.lof_recomputed += stats.lof_recomputed;
    }

    pub fn touched(&self) -> usize {
        self.row_entries + self.column_entries + self.lrd_recomputed + self.lof_recomputed
    }
}

/// One cell of the result grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub algo: Algo,
    pub k: usize,
    pub m: usize,
    pub threshold: f64,
    pub report: EvalReport,
    pub cumulative: CumulativeStats,
    /// Median (over repetitions) of the summed insertion wall time up to m.
    pub wall_nanos: u64,
}

/// Full sweep output. Every cell of one grid was produced from the same
/// resolved point sequence; `stream_hash` is asserted identical across
/// engine runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultGrid {
    pub plan_fingerprint: String,
    pub stream_hash: String,
    pub cells: Vec<GridCell>,
}

impl ResultGrid {
    pub fn cell(&self, algo: Algo, k: usize, m: usize, threshold: f64) -> Option<&GridCell> {
        self.cells
            .iter()
            .find(|c| c.algo == algo && c.k == k && c.m == m && c.threshold == threshold)
    }

    /// Equality of everything reproducible: reports, counters, fingerprints,
    /// and stream hashes. Wall-clock medians are measurement metadata and
    /// are excluded; they cannot be bit-stable across runs.
    pub fn results_equal(&self, other: &ResultGrid) -> bool {
        let strip = |g: &ResultGrid| {
            let mut g = g.clone();
            for c in &mut g.cells {
                c.wall_nanos = 0;
            }
            g
        };
        strip(self) == strip(other)
    }
}

/// Per-insertion series for one engine run of the update benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateSeries {
    pub algo: Algo,
    pub k: usize,
    pub per_insertion: Vec<InsertStats>,
    pub cumulative: CumulativeStats,
    /// Median over repetitions of the total insertion wall time.
    pub wall_nanos_median: u64,
}

/// Output of the ILOF-vs-EILOF update benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateBench {
    pub plan_fingerprint: String,
    pub stream_hash: String,
    pub series: Vec<UpdateSeries>,
}

impl UpdateBench {
    pub fn series_for(&self, algo: Algo, k: usize) -> Option<&UpdateSeries> {
        self.series.iter().find(|s| s.algo == algo && s.k == k)
    }
}

/// Resolves a plan source into the (initial, stream) dataset pair.
pub fn resolve_source(source: &PlanSource) -> Result<(Dataset, Dataset)> {
    match source {
        PlanSource::Synth(recipe) => generate(recipe),
        PlanSource::Passthrough { initial, stream } => {
            let schema = CsvSchema::default();
            Ok((load_csv(initial, &schema)?, load_csv(stream, &schema)?))
        }
        PlanSource::Shuttle { path, recipe } => {
            let raw = load_csv(path, &CsvSchema::default())?;
            prep_shuttle(&raw, recipe)
        }
        PlanSource::Credit { path, recipe } => {
            let raw = load_csv(path, &credit_schema(path)?)?;
            prep_credit(&raw, recipe)
        }
    }
}

/// Credit files come either in the canonical format or in the original
/// export with Time/V1..V28/Amount/Class columns; Time is the sort key, not
/// a feature.
fn credit_schema(path: &Path) -> Result<CsvSchema> {
    let headers = sniff_headers(path)?;
    if headers.iter().any(|h| h == "Class") {
        let features: Vec<String> = headers
            .iter()
            .filter(|h| *h != "Class" && *h != "Time")
            .cloned()
            .collect();
        Ok(CsvSchema {
            feature_columns: ColumnSelect::Names(features),
            label_column: Some(ColumnRef::Name("Class".into())),
            delimiter: b',',
            has_header: true,
        })
    } else {
        Ok(CsvSchema::default())
    }
}

fn sniff_headers(path: &Path) -> Result<Vec<String>> {
    let file = std::fs::File::open(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    let headers = reader.headers().map_err(|e| Error::CsvParse {
        row: 0,
        column: "<header>".into(),
        reason: e.to_string(),
    })?;
    Ok(headers
        .iter()
        .map(|h| h.trim_matches('"').to_string())
        .collect())
}

struct RunOutput {
    algo: Algo,
    k: usize,
    /// (m, scores snapshot, cumulative stats, wall totals in nanos per rep).
    snapshots: Vec<(usize, Vec<f64>, CumulativeStats, Vec<u64>)>,
    per_insertion: Vec<InsertStats>,
    stream_hash: String,
}

fn hash_points(ds: &Dataset, upto: usize) -> String {
    let mut hasher = Sha256::new();
    for p in &ds.points()[..upto] {
        for &c in p.coords() {
            hasher.update(c.to_le_bytes());
        }
    }
    hex::encode(hasher.finalize())
}

/// One engine pass over the stream with checkpoint snapshots. Repetitions
/// re-run the identical insertion sequence to collect wall-time samples;
/// with more than one repetition an extra warm-up pass is discarded.
fn run_engine(
    algo: Algo,
    k: usize,
    initial: &Dataset,
    stream: &Dataset,
    checkpoints: &BTreeSet<usize>,
    repetitions: usize,
) -> Result<RunOutput> {
    let params = LofParams::new(k)?;
    let m_max = checkpoints.iter().max().copied().unwrap_or(0);
    let passes = if repetitions > 1 { repetitions + 1 } else { 1 };

    let mut snapshots: Vec<(usize, Vec<f64>, CumulativeStats, Vec<u64>)> = Vec::new();
    let mut per_insertion: Vec<InsertStats> = Vec::new();

    for pass in 0..passes {
        let warmup = passes > 1 && pass == 0;
        let mut state = DetectorState::init(initial.clone(), params, algo)?;
        let mut cumulative = CumulativeStats::default();
        let mut wall_total: u64 = 0;
        let mut snapshot_slot = 0usize;

        if checkpoints.contains(&0) && !warmup {
            record_snapshot(
                &mut snapshots,
                &mut snapshot_slot,
                0,
                state.scores(),
                cumulative,
                wall_total,
            );
        }
        for (i, point) in stream.points()[..m_max].iter().enumerate() {
            let stats = state.insert(point.clone())?;
            if !warmup {
                cumulative.add(&stats);
                wall_total += stats.wall_time.as_nanos() as u64;
                if per_insertion.len() <= i {
                    per_insertion.push(stats);
                }
                let m = i + 1;
                if checkpoints.contains(&m) {
                    record_snapshot(
                        &mut snapshots,
                        &mut snapshot_slot,
                        m,
                        state.scores(),
                        cumulative,
                        wall_total,
                    );
                }
            }
        }
    }

    Ok(RunOutput {
        algo,
        k,
        snapshots,
        per_insertion,
        stream_hash: hash_points(stream, m_max),
    })
}

fn record_snapshot(
    snapshots: &mut Vec<(usize, Vec<f64>, CumulativeStats, Vec<u64>)>,
    slot: &mut usize,
    m: usize,
    scores: &[f64],
    cumulative: CumulativeStats,
    wall_total: u64,
) {
    if *slot < snapshots.len() {
        // Later repetitions only contribute wall-time samples; scores and
        // counters are deterministic and already recorded.
        debug_assert_eq!(snapshots[*slot].0, m);
        debug_assert_eq!(snapshots[*slot].2, cumulative);
        snapshots[*slot].3.push(wall_total);
    } else {
        snapshots.push((m, scores.to_vec(), cumulative, vec![wall_total]));
    }
    *slot += 1;
}

fn median(samples: &[u64]) -> u64 {
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    if n == 0 {
        0
    } else if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2
    }
}

fn scope_slices<'a>(
    scope: EvalScope,
    scores: &'a [f64],
    truth_all: &'a [bool],
    n_initial: usize,
    m: usize,
) -> (&'a [f64], &'a [bool]) {
    match scope {
        EvalScope::AllPoints => (&scores[..n_initial + m], &truth_all[..n_initial + m]),
        EvalScope::StreamedOnly => (
            &scores[n_initial..n_initial + m],
            &truth_all[n_initial..n_initial + m],
        ),
    }
}

fn empty_report() -> EvalReport {
    EvalReport {
        true_positives: 0,
        false_positives: 0,
        false_negatives: 0,
        true_negatives: 0,
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    }
}

/// Runs the full sweep: for each algorithm and k, initialize on the static
/// set, insert the stream one point at a time, snapshot scores at each
/// checkpoint, and evaluate every threshold. Distinct (algo, k) runs execute
/// in parallel; every run consumes the identical stream sequence.
pub fn run_plan(plan: &ExperimentPlan) -> Result<ResultGrid> {
    plan.validate()?;
    let (initial, stream) = resolve_source(&plan.source)?;
    let n_initial = initial.len();

    for &k in &plan.k_values {
        if k + 1 > n_initial {
            return Err(Error::InvalidPlan(format!(
                "k = {k} needs a static set larger than k, have {n_initial}"
            )));
        }
    }
    let checkpoints: BTreeSet<usize> = plan.m_schedule.iter().copied().collect();
    if let Some(&m_max) = checkpoints.iter().max() {
        if m_max > stream.len() {
            return Err(Error::InvalidPlan(format!(
                "checkpoint m = {m_max} exceeds stream size {}",
                stream.len()
            )));
        }
    }
    let truth_initial = initial.truth().ok_or_else(|| {
        Error::InvalidPlan("initial dataset must carry labels for evaluation".into())
    })?;
    let truth_stream = stream.truth().ok_or_else(|| {
        Error::InvalidPlan("stream dataset must carry labels for evaluation".into())
    })?;
    let truth_all: Vec<bool> = truth_initial
        .iter()
        .chain(truth_stream.iter())
        .copied()
        .collect();

    let mut combos: Vec<(Algo, usize)> = Vec::new();
    for &algo in &plan.algos {
        for &k in &plan.k_values {
            if !combos.contains(&(algo, k)) {
                combos.push((algo, k));
            }
        }
    }

    let runs: Vec<RunOutput> = combos
        .par_iter()
        .map(|&(algo, k)| run_engine(algo, k, &initial, &stream, &checkpoints, plan.repetitions))
        .collect::<Result<Vec<_>>>()?;

    let stream_hash = runs
        .first()
        .map(|r| r.stream_hash.clone())
        .unwrap_or_default();
    for run in &runs {
        // Fairness: every engine consumed the identical point sequence.
        assert_eq!(
            run.stream_hash, stream_hash,
            "stream sequence diverged across runs"
        );
    }

    let mut cells = Vec::new();
    for run in &runs {
        for (m, scores, cumulative, walls) in &run.snapshots {
            for &threshold in &plan.thresholds {
                let rule = ThresholdRule::new(threshold)?;
                let (scope_scores, scope_truth) =
                    scope_slices(plan.eval_scope, scores, &truth_all, n_initial, *m);
                let report = if scope_scores.is_empty() {
                    empty_report()
                } else {
                    let flags = flag_outliers(scope_scores, &rule)?;
                    f1_report(&flags, scope_truth)?
                };
                cells.push(GridCell {
                    algo: run.algo,
                    k: run.k,
                    m: *m,
                    threshold,
                    report,
                    cumulative: *cumulative,
                    wall_nanos: median(walls),
                });
            }
        }
    }
    cells.sort_by(|a, b| {
        (a.algo, a.k, a.m, a.threshold.to_bits()).cmp(&(b.algo, b.k, b.m, b.threshold.to_bits()))
    });

    Ok(ResultGrid {
        plan_fingerprint: plan.fingerprint(),
        stream_hash,
        cells,
    })
}

/// Runs both engines over the identical stream and returns aligned
/// per-insertion update statistics. Runs are sequential so wall-clock
/// comparisons are not distorted by core contention.
pub fn bench_updates(plan: &ExperimentPlan) -> Result<UpdateBench> {
    plan.validate()?;
    if !(plan.algos.contains(&Algo::Ilof) && plan.algos.contains(&Algo::Eilof)) {
        return Err(Error::InvalidPlan(
            "bench_updates compares engines, so the plan needs both ilof and eilof".into(),
        ));
    }
    let (initial, stream) = resolve_source(&plan.source)?;
    let checkpoints: BTreeSet<usize> = plan.m_schedule.iter().copied().collect();
    if let Some(&m_max) = checkpoints.iter().max() {
        if m_max > stream.len() {
            return Err(Error::InvalidPlan(format!(
                "checkpoint m = {m_max} exceeds stream size {}",
                stream.len()
            )));
        }
    }

    let mut series = Vec::new();
    let mut stream_hash = String::new();
    for &k in &plan.k_values {
        for algo in [Algo::Ilof, Algo::Eilof] {
            let run = run_engine(algo, k, &initial, &stream, &checkpoints, plan.repetitions)?;
            let (cumulative, walls) = run
                .snapshots
                .last()
                .map(|(_, _, c, w)| (*c, w.clone()))
                .unwrap_or_default();
            if stream_hash.is_empty() {
                stream_hash = run.stream_hash.clone();
            } else {
                assert_eq!(
                    run.stream_hash, stream_hash,
                    "stream sequence diverged across runs"
                );
            }
            series.push(UpdateSeries {
                algo,
                k,
                per_insertion: run.per_insertion,
                cumulative,
                wall_nanos_median: median(&walls),
            });
        }
    }

    Ok(UpdateBench {
        plan_fingerprint: plan.fingerprint(),
        stream_hash,
        series,
    })
}

/// Export format for grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
    Markdown,
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            "markdown" | "md" => Ok(ExportFormat::Markdown),
            other => Err(Error::InvalidParameter {
                name: "format",
                reason: format!("unknown export format {other:?}"),
            }),
        }
    }
}

const CSV_HEADER: &str = "algo,k,m,threshold,tp,fp,fn,tn,precision,recall,f1,insertions,row_entries,column_entries,lrd_recomputed,lof_recomputed,wall_nanos,stream_hash,plan_fingerprint";

/// Serializes a grid. CSV is the canonical round-trippable layout; JSON
/// carries the full structure; Markdown renders one k-by-m table per
/// threshold, matching the layout of the reference tables.
pub fn export_grid(grid: &ResultGrid, format: ExportFormat) -> String {
    match format {
        ExportFormat::Json => serde_json::to_string_pretty(grid).expect("grids serialize"),
        ExportFormat::Csv => {
            let mut out = String::from(CSV_HEADER);
            out.push('\n');
            for c in &grid.cells {
                let r = &c.report;
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                    c.algo,
                    c.k,
                    c.m,
                    format_value(c.threshold),
                    r.true_positives,
                    r.false_positives,
                    r.false_negatives,
                    r.true_negatives,
                    format_value(r.precision),
                    format_value(r.recall),
                    format_value(r.f1),
                    c.cumulative.insertions,
                    c.cumulative.row_entries,
                    c.cumulative.column_entries,
                    c.cumulative.lrd_recomputed,
                    c.cumulative.lof_recomputed,
                    c.wall_nanos,
                    grid.stream_hash,
                    grid.plan_fingerprint,
                ));
            }
            out
        }
        ExportFormat::Markdown => {
            let mut out = String::new();
            let mut thresholds: Vec<f64> = grid.cells.iter().map(|c| c.threshold).collect();
            thresholds.sort_by(|a, b| a.partial_cmp(b).expect("finite thresholds"));
            thresholds.dedup();
            let mut ms: Vec<usize> = grid.cells.iter().map(|c| c.m).collect();
            ms.sort_unstable();
            ms.dedup();
            let mut rows: Vec<(Algo, usize)> = grid.cells.iter().map(|c| (c.algo, c.k)).collect();
            rows.sort_unstable();
            rows.dedup();

            for &t in &thresholds {
                out.push_str(&format!("## F1 at threshold {:.2}%\n\n", t * 100.0));
                out.push_str("| algo | k |");
                for m in &ms {
                    out.push_str(&format!(" m={m} |"));
                }
                out.push('\n');
                out.push_str("|---|---|");
                for _ in &ms {
                    out.push_str("---|");
                }
                out.push('\n');
                for &(algo, k) in &rows {
                    out.push_str(&format!("| {algo} | {k} |"));
                    for &m in &ms {
                        match grid.cell(algo, k, m, t) {
                            Some(cell) => out.push_str(&format!(" {:.4} |", cell.report.f1)),
                            None => out.push_str(" - |"),
                        }
                    }
                    out.push('\n');
                }
                out.push('\n');
            }
            out
        }
    }
}

/// JSON serialization of an update benchmark.
pub fn bench_to_json(bench: &UpdateBench) -> Result<String> {
    serde_json::to_string_pretty(bench).map_err(|e| Error::MalformedExport(e.to_string()))
}

/// Writes an export to disk.
pub fn export_grid_to_file(grid: &ResultGrid, format: ExportFormat, path: &Path) -> Result<()> {
    std::fs::write(path, export_grid(grid, format)).map_err(|source| Error::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses the CSV layout written by [`export_grid`] back into a grid.
pub fn import_grid_csv(text: &str) -> Result<ResultGrid> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::MalformedExport("empty export".into()))?;
    if header != CSV_HEADER {
        return Err(Error::MalformedExport(format!(
            "unexpected header {header:?}"
        )));
    }
    let mut cells = Vec::new();
    let mut stream_hash = String::new();
    let mut plan_fingerprint = String::new();
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 19 {
            return Err(Error::MalformedExport(format!(
                "line {}: expected 19 fields, got {}",
                ln + 2,
                fields.len()
            )));
        }
        let parse_err = |what: &str| Error::MalformedExport(format!("line {}: bad {what}", ln + 2));
        let algo: Algo = fields[0].parse().map_err(|_| parse_err("algo"))?;
        let cell = GridCell {
            algo,
            k: fields[1].parse().map_err(|_| parse_err("k"))?,
            m: fields[2].parse().map_err(|_| parse_err("m"))?,
            threshold: fields[3].parse().map_err(|_| parse_err("threshold"))?,
            report: EvalReport {
                true_positives: fields[4].parse().map_err(|_| parse_err("tp"))?,
                false_positives: fields[5].parse().map_err(|_| parse_err("fp"))?,
                false_negatives: fields[6].parse().map_err(|_| parse_err("fn"))?,
                true_negatives: fields[7].parse().map_err(|_| parse_err("tn"))?,
                precision: fields[8].parse().map_err(|_| parse_err("precision"))?,
                recall: fields[9].parse().map_err(|_| parse_err("recall"))?,
                f1: fields[10].parse().map_err(|_| parse_err("f1"))?,
            },
            cumulative: CumulativeStats {
                insertions: fields[11].parse().map_err(|_| parse_err("insertions"))?,
                row_entries: fields[12].parse().map_err(|_| parse_err("row_entries"))?,
                column_entries: fields[13]
                    .parse()
                    .map_err(|_| parse_err("column_entries"))?,
                lrd_recomputed: fields[14]
                    .parse()
                    .map_err(|_| parse_err("lrd_recomputed"))?,
                lof_recomputed: fields[15]
                    .parse()
                    .map_err(|_| parse_err("lof_recomputed"))?,
            },
            wall_nanos: fields[16].parse().map_err(|_| parse_err("wall_nanos"))?,
        };
        stream_hash = fields[17].to_string();
        plan_fingerprint = fields[18].to_string();
        cells.push(cell);
    }
    Ok(ResultGrid {
        plan_fingerprint,
        stream_hash,
        cells,
    })
}

/// Flat key-value plan file (TOML syntax, flat keys only).
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    source: String,
    k_values: Vec<usize>,
    m_schedule: Vec<usize>,
    thresholds: Vec<f64>,
    algos: Vec<String>,
    eval_scope: Option<String>,
    repetitions: Option<usize>,
    seed: Option<u64>,

    // synth source
    dim: Option<usize>,
    n_initial: Option<usize>,
    n_stream: Option<usize>,
    outlier_fraction: Option<f64>,
    outlier_scale: Option<f64>,
    outlier_shift: Option<f64>,

    // passthrough source
    initial_csv: Option<PathBuf>,
    stream_csv: Option<PathBuf>,

    // shuttle / credit sources
    raw_csv: Option<PathBuf>,
    static_count: Option<usize>,
    stream_count: Option<usize>,
    class6_outlier: Option<bool>,
    standardize: Option<bool>,
    feature_count: Option<usize>,
    target_fraud_fraction: Option<f64>,
    subsample_seed: Option<u64>,
}

/// Parses a flat plan file. Keys mirror the plan fields; source-specific
/// keys apply to the selected source kind.
pub fn plan_from_toml(text: &str) -> Result<ExperimentPlan> {
    let file: PlanFile =
        toml::from_str(text).map_err(|e| Error::InvalidPlan(format!("plan parse: {e}")))?;
    let seed = file.seed.unwrap_or(42);

    let missing =
        |key: &str| Error::InvalidPlan(format!("source {:?} needs key {key}", file.source));
    let source = match file.source.as_str() {
        "synth" => {
            let defaults = SynthRecipe::default();
            PlanSource::Synth(SynthRecipe {
                dim: file.dim.unwrap_or(defaults.dim),
                n_initial: file.n_initial.unwrap_or(defaults.n_initial),
                n_stream: file.n_stream.unwrap_or(defaults.n_stream),
                outlier_fraction: file.outlier_fraction.unwrap_or(defaults.outlier_fraction),
                outlier_scale: file.outlier_scale.unwrap_or(defaults.outlier_scale),
                outlier_shift: file.outlier_shift.unwrap_or(defaults.outlier_shift),
                seed,
            })
        }
        "passthrough" => PlanSource::Passthrough {
            initial: file.initial_csv.ok_or_else(|| missing("initial_csv"))?,
            stream: file.stream_csv.ok_or_else(|| missing("stream_csv"))?,
        },
        "shuttle" => {
            let defaults = ShuttleRecipe::default();
            PlanSource::Shuttle {
                path: file.raw_csv.ok_or_else(|| missing("raw_csv"))?,
                recipe: ShuttleRecipe {
                    static_count: file.static_count.unwrap_or(defaults.static_count),
                    stream_count: file.stream_count.unwrap_or(defaults.stream_count),
                    class6_outlier: file.class6_outlier.unwrap_or(defaults.class6_outlier),
                    standardize: file.standardize.unwrap_or(defaults.standardize),
                    feature_count: file.feature_count.or(defaults.feature_count),
                },
            }
        }
        "credit" => {
            let defaults = CreditRecipe::default();
            PlanSource::Credit {
                path: file.raw_csv.ok_or_else(|| missing("raw_csv"))?,
                recipe: CreditRecipe {
                    static_count: file.static_count.unwrap_or(defaults.static_count),
                    stream_count: file.stream_count.unwrap_or(defaults.stream_count),
                    target_fraud_fraction: file
                        .target_fraud_fraction
                        .unwrap_or(defaults.target_fraud_fraction),
                    subsample_seed: file.subsample_seed.unwrap_or(seed),
                    standardize: file.standardize.unwrap_or(defaults.standardize),
                },
            }
        }
        other => {
            return Err(Error::InvalidPlan(format!(
                "unknown source {other:?}, expected synth, passthrough, shuttle, or credit"
            )))
        }
    };

    let algos = file
        .algos
        .iter()
        .map(|a| a.parse())
        .collect::<Result<Vec<Algo>>>()?;
    let eval_scope = match file.eval_scope {
        Some(s) => s.parse()?,
        None => EvalScope::AllPoints,
    };

    let plan = ExperimentPlan {
        source,
        k_values: file.k_values,
        m_schedule: file.m_schedule,
        thresholds: file.thresholds,
        algos,
        eval_scope,
        repetitions: file.repetitions.unwrap_or(1),
        seed,
    };
    plan.validate()?;
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_plan() -> ExperimentPlan {
        ExperimentPlan {
            source: PlanSource::Synth(SynthRecipe {
                dim: 2,
                n_initial: 60,
                n_stream: 40,
                outlier_fraction: 0.1,
                outlier_scale: 3.0,
                outlier_shift: 5.0,
                seed: 9,
            }),
            k_values: vec![5],
            m_schedule: vec![0, 10, 40],
            thresholds: vec![0.1],
            algos: vec![Algo::Ilof, Algo::Eilof],
            eval_scope: EvalScope::AllPoints,
            repetitions: 1,
            seed: 9,
        }
    }

    #[test]
    fn grid_covers_every_combination() {
        let grid = run_plan(&small_plan()).unwrap();
        // 2 algos x 1 k x 3 checkpoints x 1 threshold
        assert_eq!(grid.cells.len(), 6);
        assert!(!grid.plan_fingerprint.is_empty());
        assert!(!grid.stream_hash.is_empty());
    }

    #[test]
    fn m_zero_reports_identical_across_algos() {
        let grid = run_plan(&small_plan()).unwrap();
        let ilof = grid.cell(Algo::Ilof, 5, 0, 0.1).unwrap();
        let eilof = grid.cell(Algo::Eilof, 5, 0, 0.1).unwrap();
        assert_eq!(ilof.report, eilof.report);
    }

    #[test]
    fn rerun_reproduces_every_result() {
        let a = run_plan(&small_plan()).unwrap();
        let b = run_plan(&small_plan()).unwrap();
        assert!(a.results_equal(&b));
    }

    #[test]
    fn checkpoint_equals_fresh_run() {
        let full = run_plan(&small_plan()).unwrap();
        let mut short = small_plan();
        short.m_schedule = vec![10];
        let fresh = run_plan(&short).unwrap();
        for algo in [Algo::Ilof, Algo::Eilof] {
            assert_eq!(
                full.cell(algo, 5, 10, 0.1).unwrap().report,
                fresh.cell(algo, 5, 10, 0.1).unwrap().report
            );
        }
    }

    #[test]
    fn streamed_only_scope_drops_baseline() {
        let mut plan = small_plan();
        plan.eval_scope = EvalScope::StreamedOnly;
        let grid = run_plan(&plan).unwrap();
        let cell = grid.cell(Algo::Eilof, 5, 10, 0.1).unwrap();
        let c = &cell.report;
        assert_eq!(
            c.true_positives + c.false_positives + c.false_negatives + c.true_negatives,
            10
        );
    }

    #[test]
    fn invalid_plans_are_rejected() {
        let mut p = small_plan();
        p.k_values = vec![60];
        assert!(run_plan(&p).is_err());
        let mut p = small_plan();
        p.m_schedule = vec![1000];
        assert!(run_plan(&p).is_err());
        let mut p = small_plan();
        p.thresholds = vec![1.5];
        assert!(run_plan(&p).is_err());
    }

    #[test]
    fn csv_export_roundtrips() {
        let grid = run_plan(&small_plan()).unwrap();
        let csv = export_grid(&grid, ExportFormat::Csv);
        let back = import_grid_csv(&csv).unwrap();
        assert_eq!(grid, back);
    }

    #[test]
    fn json_export_carries_fingerprint() {
        let grid = run_plan(&small_plan()).unwrap();
        let json = export_grid(&grid, ExportFormat::Json);
        assert!(json.contains(&grid.plan_fingerprint));
    }

    #[test]
    fn markdown_renders_one_table_per_threshold() {
        let mut plan = small_plan();
        plan.thresholds = vec![0.05, 0.1];
        let grid = run_plan(&plan).unwrap();
        let md = export_grid(&grid, ExportFormat::Markdown);
        assert_eq!(md.matches("## F1 at threshold").count(), 2);
    }

    #[test]
    fn bench_needs_both_algos() {
        let mut plan = small_plan();
        plan.algos = vec![Algo::Eilof];
        assert!(bench_updates(&plan).is_err());
    }

    #[test]
    fn bench_series_aligned_and_dominated() {
        let bench = bench_updates(&small_plan()).unwrap();
        let ilof = bench.series_for(Algo::Ilof, 5).unwrap();
        let eilof = bench.series_for(Algo::Eilof, 5).unwrap();
        assert_eq!(ilof.per_insertion.len(), eilof.per_insertion.len());
        for (i, e) in ilof.per_insertion.iter().zip(&eilof.per_insertion) {
            assert!(e.touched() <= i.touched());
        }
    }

    #[test]
    fn plan_file_parses_flat_keys() {
        let text = r#"
source = "synth"
k_values = [5, 7]
m_schedule = [1, 2]
thresholds = [0.1]
algos = ["ilof", "eilof"]
eval_scope = "streamed_only"
seed = 3
n_initial = 30
n_stream = 10
outlier_fraction = 0.2
"#;
        let plan = plan_from_toml(text).unwrap();
        assert_eq!(plan.k_values, vec![5, 7]);
        assert_eq!(plan.eval_scope, EvalScope::StreamedOnly);
        match plan.source {
            PlanSource::Synth(r) => {
                assert_eq!(r.n_initial, 30);
                assert_eq!(r.seed, 3);
            }
            other => panic!("unexpected source {other:?}"),
        }
    }

    #[test]
    fn plan_file_rejects_unknown_keys() {
        let text = r#"
source = "synth"
k_values = [5]
m_schedule = [1]
thresholds = [0.1]
algos = ["ilof"]
no_such_key = true
"#;
        assert!(plan_from_toml(text).is_err());
    }
}
