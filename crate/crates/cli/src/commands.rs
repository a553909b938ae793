//! Subcommand implementations and the exit-code policy.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;

use lofstream_core::{
    bench_updates, export_grid, flag_outliers, load_csv, plan_from_toml,
    prep_shuttle as core_prep_shuttle, run_plan, static_lof, write_csv, Algo, CreditRecipe,
    CsvSchema, Dataset, Error as CoreError, EvalScope, ExperimentPlan, ExportFormat, LofParams,
    PlanSource, ShuttleRecipe, SynthRecipe, ThresholdRule, UpdateBench,
};

/// Environment variable consulted for the default output directory.
pub const OUT_DIR_ENV: &str = "LOFSTREAM_OUT_DIR";

/// The canonical checkpoint schedule, capped to the stream length at use.
const DEFAULT_CHECKPOINTS: [usize; 10] = [1, 5, 10, 20, 40, 80, 160, 320, 640, 1280];

pub enum CliError {
    /// Bad flags or invalid/unreadable inputs: exit 2.
    Usage(String),
    /// Output I/O failure: exit 3.
    Io(String),
    /// Internal engine failure: exit 4.
    Engine(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Engine(_) => 4,
        }
    }

    fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Engine(m) => write!(f, "{m}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        let msg = err.to_string();
        match err {
            CoreError::Write { .. } => CliError::Io(msg),
            CoreError::Read { .. }
            | CoreError::CsvParse { .. }
            | CoreError::MissingColumn { .. }
            | CoreError::InvalidPlan(_)
            | CoreError::InvalidParameter { .. }
            | CoreError::InsufficientPoints { .. }
            | CoreError::LabelLengthMismatch { .. }
            | CoreError::DimensionMismatch { .. }
            | CoreError::MalformedExport(_) => CliError::Usage(msg),
            CoreError::NonFiniteCoordinate { .. } | CoreError::NegativeDistance { .. } => {
                CliError::Engine(msg)
            }
        }
    }
}

type CliResult = Result<(), CliError>;

fn resolve_out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| {
        CliError::Io(format!(
            "cannot create output directory {}: {e}",
            dir.display()
        ))
    })
}

fn outlier_count(ds: &Dataset) -> usize {
    ds.labels()
        .map(|ls| ls.iter().filter(|&&l| l != 0).count())
        .unwrap_or(0)
}

fn write_pair(dir: &Path, initial: &Dataset, stream: &Dataset) -> Result<(), CliError> {
    ensure_dir(dir)?;
    write_csv(&dir.join("initial.csv"), initial)?;
    write_csv(&dir.join("stream.csv"), stream)?;
    println!(
        "initial: {} points ({} outliers) -> {}",
        initial.len(),
        outlier_count(initial),
        dir.join("initial.csv").display()
    );
    println!(
        "stream:  {} points ({} outliers) -> {}",
        stream.len(),
        outlier_count(stream),
        dir.join("stream.csv").display()
    );
    Ok(())
}

// --- simulate ---------------------------------------------------------

#[derive(Args)]
pub struct SimulateArgs {
    /// Feature-space dimension.
    #[arg(long, default_value_t = SynthRecipe::default().dim)]
    pub dim: usize,
    /// Size of the static baseline set.
    #[arg(long = "n-initial", default_value_t = SynthRecipe::default().n_initial)]
    pub n_initial: usize,
    /// Size of the streamed set.
    #[arg(long = "n-stream", default_value_t = SynthRecipe::default().n_stream)]
    pub n_stream: usize,
    /// Overall outlier proportion in (0, 1).
    #[arg(long, default_value_t = SynthRecipe::default().outlier_fraction)]
    pub fraction: f64,
    /// Outlier standard-deviation multiplier (> 1).
    #[arg(long, default_value_t = SynthRecipe::default().outlier_scale)]
    pub scale: f64,
    /// Outlier mean-shift magnitude.
    #[arg(long, default_value_t = SynthRecipe::default().outlier_shift)]
    pub shift: f64,
    #[arg(long, default_value_t = SynthRecipe::default().seed)]
    pub seed: u64,
    /// Output directory for initial.csv and stream.csv.
    #[arg(long = "out-dir")]
    pub out_dir: Option<PathBuf>,
}

pub fn simulate(args: SimulateArgs) -> CliResult {
    let recipe = SynthRecipe {
        dim: args.dim,
        n_initial: args.n_initial,
        n_stream: args.n_stream,
        outlier_fraction: args.fraction,
        outlier_scale: args.scale,
        outlier_shift: args.shift,
        seed: args.seed,
    };
    let (initial, stream) = lofstream_core::generate(&recipe)?;
    let dir = resolve_out_dir(args.out_dir);
    write_pair(&dir, &initial, &stream)
}

// --- prep -------------------------------------------------------------

#[derive(Args)]
pub struct PrepShuttleArgs {
    /// Raw CSV with the original class labels (canonical header
    /// f0,...,f8,label).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long = "static-count", default_value_t = 1000)]
    pub static_count: usize,
    #[arg(long = "stream-count", default_value_t = 640)]
    pub stream_count: usize,
    /// Drop class 6 rows instead of mapping them to the outlier class.
    #[arg(long = "drop-class6")]
    pub drop_class6: bool,
    /// Skip per-subset standardization.
    #[arg(long = "no-standardize")]
    pub no_standardize: bool,
    /// Keep only the first N feature columns (0 keeps all).
    #[arg(long = "feature-count", default_value_t = 7)]
    pub feature_count: usize,
    #[arg(long = "out-dir")]
    pub out_dir: Option<PathBuf>,
}

pub fn prep_shuttle(args: PrepShuttleArgs) -> CliResult {
    let raw = load_csv(&args.input, &CsvSchema::default())?;
    let recipe = ShuttleRecipe {
        static_count: args.static_count,
        stream_count: args.stream_count,
        class6_outlier: !args.drop_class6,
        standardize: !args.no_standardize,
        feature_count: if args.feature_count == 0 {
            None
        } else {
            Some(args.feature_count)
        },
    };
    let (initial, stream) = core_prep_shuttle(&raw, &recipe)?;
    println!(
        "raw: {} rows, recipe: class6 -> {}, {} features, standardize = {}",
        raw.len(),
        if recipe.class6_outlier {
            "outlier"
        } else {
            "dropped"
        },
        recipe
            .feature_count
            .map_or("all".to_string(), |c| c.to_string()),
        recipe.standardize,
    );
    write_pair(&resolve_out_dir(args.out_dir), &initial, &stream)
}

#[derive(Args)]
pub struct PrepCreditArgs {
    /// Raw CSV, either canonical or the original Time/V1..V28/Amount/Class
    /// export.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long = "static-count", default_value_t = 1000)]
    pub static_count: usize,
    #[arg(long = "stream-count", default_value_t = 640)]
    pub stream_count: usize,
    /// Target fraud proportion of the subsampled dataset.
    #[arg(long = "target-fraction", default_value_t = 0.05)]
    pub target_fraction: f64,
    /// Seed for the legitimate-row subsample.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long = "no-standardize")]
    pub no_standardize: bool,
    #[arg(long = "out-dir")]
    pub out_dir: Option<PathBuf>,
}

pub fn prep_credit(args: PrepCreditArgs) -> CliResult {
    let recipe = CreditRecipe {
        static_count: args.static_count,
        stream_count: args.stream_count,
        target_fraud_fraction: args.target_fraction,
        subsample_seed: args.seed,
        standardize: !args.no_standardize,
    };
    // Reuse the source resolver so the header sniffing matches plan runs.
    let source = PlanSource::Credit {
        path: args.input.clone(),
        recipe,
    };
    let (initial, stream) = lofstream_core::experiment::resolve_source(&source)?;
    write_pair(&resolve_out_dir(args.out_dir), &initial, &stream)
}

// --- run --------------------------------------------------------------

#[derive(Args)]
pub struct RunArgs {
    /// Plan file (flat TOML keys); replaces the data/sweep flags below.
    #[arg(long, conflicts_with_all = ["initial", "stream"])]
    pub plan: Option<PathBuf>,
    /// Static baseline CSV (canonical format with labels).
    #[arg(long, required_unless_present = "plan")]
    pub initial: Option<PathBuf>,
    /// Stream CSV (canonical format with labels).
    #[arg(long, required_unless_present = "plan")]
    pub stream: Option<PathBuf>,
    /// Engine selection: ilof, eilof, or both.
    #[arg(long, default_value = "both")]
    pub algo: String,
    /// Neighborhood sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [50usize])]
    pub k: Vec<usize>,
    /// Contamination thresholds, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [0.05f64])]
    pub thresholds: Vec<f64>,
    /// Checkpoints (stream sizes m); defaults to the canonical schedule
    /// 1,5,10,20,40,80,160,320,640,1280 capped to the stream length.
    #[arg(long = "m-checkpoints", value_delimiter = ',')]
    pub m_checkpoints: Option<Vec<usize>>,
    /// Evaluation scope: all_points or streamed_only.
    #[arg(long = "eval-scope", default_value = "all_points")]
    pub eval_scope: String,
    /// Wall-time repetitions (counters are deterministic).
    #[arg(long, default_value_t = 1)]
    pub repetitions: usize,
    /// Output directory for grid.csv, grid.json, and grid.md.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_algos(selector: &str) -> Result<Vec<Algo>, CliError> {
    match selector.to_ascii_lowercase().as_str() {
        "both" => Ok(vec![Algo::Ilof, Algo::Eilof]),
        other => Ok(vec![other
            .parse()
            .map_err(|e: CoreError| CliError::usage(e.to_string()))?]),
    }
}

fn stream_len_of(path: &Path) -> Result<usize, CliError> {
    Ok(load_csv(path, &CsvSchema::default())?.len())
}

fn default_checkpoints(stream_len: usize) -> Vec<usize> {
    let mut cps: Vec<usize> = DEFAULT_CHECKPOINTS
        .iter()
        .copied()
        .filter(|&m| m <= stream_len)
        .collect();
    if cps.is_empty() {
        cps.push(stream_len);
    }
    cps
}

fn build_plan(args: &RunArgs) -> Result<ExperimentPlan, CliError> {
    if let Some(plan_path) = &args.plan {
        let text = fs::read_to_string(plan_path).map_err(|e| {
            CliError::usage(format!("cannot read plan {}: {e}", plan_path.display()))
        })?;
        return Ok(plan_from_toml(&text)?);
    }
    let initial = args.initial.clone().expect("clap enforces presence");
    let stream = args.stream.clone().expect("clap enforces presence");
    let m_schedule = match &args.m_checkpoints {
        Some(cps) => cps.clone(),
        None => default_checkpoints(stream_len_of(&stream)?),
    };
    let eval_scope: EvalScope = args.eval_scope.parse()?;
    Ok(ExperimentPlan {
        source: PlanSource::Passthrough { initial, stream },
        k_values: args.k.clone(),
        m_schedule,
        thresholds: args.thresholds.clone(),
        algos: parse_algos(&args.algo)?,
        eval_scope,
        repetitions: args.repetitions,
        seed: 0,
    })
}

pub fn run(args: RunArgs) -> CliResult {
    let plan = build_plan(&args)?;
    let grid = run_plan(&plan).map_err(engine_phase_error)?;

    // The printed summary is rendered from the same export users get on
    // disk, so the two can never disagree.
    println!("plan fingerprint: {}", grid.plan_fingerprint);
    println!("stream hash: {}", grid.stream_hash);
    println!();
    print!("{}", export_grid(&grid, ExportFormat::Markdown));

    let dir = resolve_out_dir(args.out);
    ensure_dir(&dir)?;
    for (format, name) in [
        (ExportFormat::Csv, "grid.csv"),
        (ExportFormat::Json, "grid.json"),
        (ExportFormat::Markdown, "grid.md"),
    ] {
        lofstream_core::export_grid_to_file(&grid, format, &dir.join(name))?;
    }
    println!("exports written to {}", dir.display());
    Ok(())
}

/// Errors surfacing from inside an engine sweep: input problems keep exit 2,
/// anything else is an engine failure (exit 4).
fn engine_phase_error(err: CoreError) -> CliError {
    match err {
        CoreError::Read { .. }
        | CoreError::CsvParse { .. }
        | CoreError::MissingColumn { .. }
        | CoreError::InvalidPlan(_)
        | CoreError::InvalidParameter { .. }
        | CoreError::InsufficientPoints { .. }
        | CoreError::LabelLengthMismatch { .. } => CliError::Usage(err.to_string()),
        CoreError::Write { .. } => CliError::Io(err.to_string()),
        other => CliError::Engine(other.to_string()),
    }
}

// --- bench ------------------------------------------------------------

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long, conflicts_with_all = ["initial", "stream"])]
    pub plan: Option<PathBuf>,
    #[arg(long, required_unless_present = "plan")]
    pub initial: Option<PathBuf>,
    #[arg(long, required_unless_present = "plan")]
    pub stream: Option<PathBuf>,
    /// Neighborhood sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [100usize])]
    pub k: Vec<usize>,
    /// Insertions to benchmark (defaults to the whole stream).
    #[arg(long)]
    pub m: Option<usize>,
    /// Repetitions for wall-time medians (a warm-up pass is discarded).
    #[arg(long, default_value_t = 3)]
    pub repetitions: usize,
    /// Output directory for bench_series.csv and bench.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn bench(args: BenchArgs) -> CliResult {
    let plan = if let Some(plan_path) = &args.plan {
        let text = fs::read_to_string(plan_path).map_err(|e| {
            CliError::usage(format!("cannot read plan {}: {e}", plan_path.display()))
        })?;
        plan_from_toml(&text)?
    } else {
        let initial = args.initial.clone().expect("clap enforces presence");
        let stream = args.stream.clone().expect("clap enforces presence");
        let m = match args.m {
            Some(m) => m,
            None => stream_len_of(&stream)?,
        };
        ExperimentPlan {
            source: PlanSource::Passthrough { initial, stream },
            k_values: args.k.clone(),
            m_schedule: vec![m],
            thresholds: vec![0.05], // unused by the bench, required by plans
            algos: vec![Algo::Ilof, Algo::Eilof],
            eval_scope: EvalScope::AllPoints,
            repetitions: args.repetitions,
            seed: 0,
        }
    };

    let bench = bench_updates(&plan).map_err(engine_phase_error)?;
    print_bench_summary(&bench);

    let dir = resolve_out_dir(args.out);
    ensure_dir(&dir)?;
    let io_err = |path: &Path, e: std::io::Error| {
        CliError::Io(format!("cannot write {}: {e}", path.display()))
    };
    let series_path = dir.join("bench_series.csv");
    fs::write(&series_path, bench_series_csv(&bench)).map_err(|e| io_err(&series_path, e))?;
    let json_path = dir.join("bench.json");
    let json = serde_json_string(&bench)?;
    fs::write(&json_path, json).map_err(|e| io_err(&json_path, e))?;
    println!("exports written to {}", dir.display());
    Ok(())
}

fn serde_json_string(bench: &UpdateBench) -> Result<String, CliError> {
    lofstream_core::bench_to_json(bench).map_err(|e| CliError::Engine(e.to_string()))
}

fn bench_series_csv(bench: &UpdateBench) -> String {
    let mut out = String::from(
        "algo,k,insertion,row_entries,column_entries,lrd_recomputed,lof_recomputed,wall_nanos\n",
    );
    for series in &bench.series {
        for (i, stats) in series.per_insertion.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                series.algo,
                series.k,
                i + 1,
                stats.row_entries_written,
                stats.column_entries_written,
                stats.lrd_recomputed,
                stats.lof_recomputed,
                stats.wall_time.as_nanos(),
            ));
        }
    }
    out
}

fn print_bench_summary(bench: &UpdateBench) {
    println!("plan fingerprint: {}", bench.plan_fingerprint);
    println!("stream hash: {}", bench.stream_hash);
    println!();
    println!("| algo | k | insertions | row | column | lrd | lof | touched | wall (median) |");
    println!("|---|---|---|---|---|---|---|---|---|");
    for s in &bench.series {
        let c = &s.cumulative;
        println!(
            "| {} | {} | {} | {} | {} | {} | {} | {} | {:.3} ms |",
            s.algo,
            s.k,
            c.insertions,
            c.row_entries,
            c.column_entries,
            c.lrd_recomputed,
            c.lof_recomputed,
            c.touched(),
            s.wall_nanos_median as f64 / 1e6,
        );
    }
    for k in bench
        .series
        .iter()
        .map(|s| s.k)
        .collect::<std::collections::BTreeSet<_>>()
    {
        if let (Some(ilof), Some(eilof)) = (
            bench.series_for(Algo::Ilof, k),
            bench.series_for(Algo::Eilof, k),
        ) {
            let dominated = ilof
                .per_insertion
                .iter()
                .zip(&eilof.per_insertion)
                .all(|(i, e)| e.touched() <= i.touched());
            println!();
            println!(
                "k = {k}: EILOF touched {} vs ILOF {} entries; per-insertion dominance: {}",
                eilof.cumulative.touched(),
                ilof.cumulative.touched(),
                if dominated { "holds" } else { "VIOLATED" },
            );
        }
    }
}

// --- score ------------------------------------------------------------

#[derive(Args)]
pub struct ScoreArgs {
    /// CSV file to score.
    #[arg(long)]
    pub input: PathBuf,
    /// Treat the file as header-less all-numeric columns.
    #[arg(long = "no-header")]
    pub no_header: bool,
    #[arg(long, default_value_t = 50)]
    pub k: usize,
    /// Fraction of points to flag, in (0, 1).
    #[arg(long, default_value_t = 0.05)]
    pub contamination: f64,
    /// Output path (defaults to <input stem>_scored.csv in the output dir).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn score(args: ScoreArgs) -> CliResult {
    let schema = if args.no_header {
        CsvSchema::plain()
    } else {
        // Canonical header; files without a `label` column are unlabeled.
        let headers = sniff_header_names(&args.input)?;
        if headers.iter().any(|h| h == "label") {
            CsvSchema::default()
        } else {
            CsvSchema {
                label_column: None,
                ..CsvSchema::default()
            }
        }
    };
    let ds = load_csv(&args.input, &schema)?;
    let params = LofParams::new(args.k)?;
    let rule = ThresholdRule::new(args.contamination)?;
    let scores = static_lof(&ds, &params)?;
    let flags = flag_outliers(&scores, &rule)?;

    let out_path = match args.out {
        Some(p) => p,
        None => {
            let stem = args
                .input
                .file_stem()
                .map(|s| s.to_string_lossy().to_string())
                .unwrap_or_else(|| "scored".into());
            resolve_out_dir(None).join(format!("{stem}_scored.csv"))
        }
    };
    append_score_columns(&args.input, &out_path, !args.no_header, &scores, &flags)?;
    println!(
        "scored {} points with k = {}; flagged {} at contamination {}",
        ds.len(),
        args.k,
        flags.iter().filter(|&&f| f).count(),
        args.contamination,
    );
    println!("written to {}", out_path.display());
    Ok(())
}

fn sniff_header_names(path: &Path) -> Result<Vec<String>, CliError> {
    let file = fs::File::open(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| CliError::usage(format!("cannot parse header of {}: {e}", path.display())))?;
    Ok(headers.iter().map(str::to_owned).collect())
}

/// Echoes the input rows verbatim and appends `lof` and `flag` columns.
fn append_score_columns(
    input: &Path,
    output: &Path,
    has_header: bool,
    scores: &[f64],
    flags: &[bool],
) -> Result<(), CliError> {
    let file = fs::File::open(input)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", input.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .from_reader(file);
    let out_file = fs::File::create(output)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", output.display())))?;
    let mut writer = csv::Writer::from_writer(out_file);
    let write_err = |e: csv::Error| CliError::Io(format!("cannot write {}: {e}", output.display()));

    if has_header {
        let mut header = reader
            .headers()
            .map_err(|e| CliError::usage(format!("cannot parse header: {e}")))?
            .clone();
        header.push_field("lof");
        header.push_field("flag");
        writer.write_record(&header).map_err(write_err)?;
    }
    for (i, record) in reader.records().enumerate() {
        let mut record =
            record.map_err(|e| CliError::usage(format!("cannot parse row {}: {e}", i + 1)))?;
        record.push_field(&lofstream_core::ingest::format_value(scores[i]));
        record.push_field(if flags[i] { "1" } else { "0" });
        writer.write_record(&record).map_err(write_err)?;
    }
    writer
        .flush()
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", output.display())))
}
