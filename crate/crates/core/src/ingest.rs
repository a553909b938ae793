//! CSV loading, per-subset standardization, and the documented preprocessing
//! recipes for the Shuttle and Credit Card Fraud datasets.
//!
//! The canonical on-disk format is a header row `f0,...,f{D-1},label` with
//! floating values serialized to 17 significant digits, so a written file
//! reloads to bit-identical coordinates.

use std::fs::File;
use std::io::{BufWriter, Write as _};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Point};
use crate::error::{Error, Result};
use crate::synth::SplitMix64;

/// A column reference, by position or by header name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

/// Which columns hold features.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnSelect {
    /// Every column except the label column.
    AllButLabel,
    Indices(Vec<usize>),
    Names(Vec<String>),
}

/// How to read a CSV file into a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub feature_columns: ColumnSelect,
    pub label_column: Option<ColumnRef>,
    pub delimiter: u8,
    pub has_header: bool,
}

impl Default for CsvSchema {
    /// The canonical schema: comma-separated, header present, label column
    /// named `label`, all other columns are features.
    fn default() -> Self {
        Self {
            feature_columns: ColumnSelect::AllButLabel,
            label_column: Some(ColumnRef::Name("label".into())),
            delimiter: b',',
            has_header: true,
        }
    }
}

impl CsvSchema {
    /// Schema for a header-less, unlabeled numeric file.
    pub fn plain() -> Self {
        Self {
            feature_columns: ColumnSelect::AllButLabel,
            label_column: None,
            delimiter: b',',
            has_header: false,
        }
    }
}

fn resolve_column(re: &ColumnRef, headers: Option<&csv::StringRecord>) -> Result<usize> {
    match re {
        ColumnRef::Index(i) => Ok(*i),
        ColumnRef::Name(name) => {
            let headers = headers.ok_or_else(|| Error::MissingColumn {
                column: format!("{name} (file has no header row)"),
            })?;
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::MissingColumn {
                    column: name.clone(),
                })
        }
    }
}

fn column_label(index: usize, headers: Option<&csv::StringRecord>) -> String {
    headers
        .and_then(|h| h.get(index))
        .map(str::to_owned)
        .unwrap_or_else(|| format!("column {index}"))
}

/// Loads a CSV file per the schema. Row order is preserved; non-finite
/// feature values are rejected with their row and column location.
pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<Dataset> {
    let file = File::open(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .has_headers(schema.has_header)
        .from_reader(file);

    let headers = if schema.has_header {
        Some(
            reader
                .headers()
                .map_err(|e| Error::CsvParse {
                    row: 0,
                    column: "<header>".into(),
                    reason: e.to_string(),
                })?
                .clone(),
        )
    } else {
        None
    };

    let label_index = schema
        .label_column
        .as_ref()
        .map(|re| resolve_column(re, headers.as_ref()))
        .transpose()?;

    let mut feature_indices: Option<Vec<usize>> = match &schema.feature_columns {
        ColumnSelect::AllButLabel => None, // resolved from the first record
        ColumnSelect::Indices(idx) => Some(idx.clone()),
        ColumnSelect::Names(names) => Some(
            names
                .iter()
                .map(|n| resolve_column(&ColumnRef::Name(n.clone()), headers.as_ref()))
                .collect::<Result<Vec<_>>>()?,
        ),
    };
    if feature_indices.is_none() {
        if let Some(h) = &headers {
            feature_indices = Some((0..h.len()).filter(|i| Some(*i) != label_index).collect());
        }
    }

    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (row_number, record) in reader.records().enumerate() {
        let row = row_number + 1; // 1-based data rows
        let record = record.map_err(|e| Error::CsvParse {
            row,
            column: "<record>".into(),
            reason: e.to_string(),
        })?;
        let indices = feature_indices.get_or_insert_with(|| {
            (0..record.len())
                .filter(|i| Some(*i) != label_index)
                .collect()
        });

        let mut coords = Vec::with_capacity(indices.len());
        for &col in indices.iter() {
            let cell = record.get(col).ok_or_else(|| Error::MissingColumn {
                column: column_label(col, headers.as_ref()),
            })?;
            let value: f64 = cell.trim().parse().map_err(|_| Error::CsvParse {
                row,
                column: column_label(col, headers.as_ref()),
                reason: format!("not a number: {cell:?}"),
            })?;
            if !value.is_finite() {
                return Err(Error::CsvParse {
                    row,
                    column: column_label(col, headers.as_ref()),
                    reason: format!("non-finite value {cell:?}"),
                });
            }
            coords.push(value);
        }
        points.push(Point::new(coords)?);

        if let Some(col) = label_index {
            let cell = record.get(col).ok_or_else(|| Error::MissingColumn {
                column: column_label(col, headers.as_ref()),
            })?;
            let value: f64 = cell.trim().parse().map_err(|_| Error::CsvParse {
                row,
                column: column_label(col, headers.as_ref()),
                reason: format!("not a numeric label: {cell:?}"),
            })?;
            if value.fract() != 0.0 || !(0.0..=255.0).contains(&value) {
                return Err(Error::CsvParse {
                    row,
                    column: column_label(col, headers.as_ref()),
                    reason: format!("label must be a small non-negative integer, got {cell:?}"),
                });
            }
            labels.push(value as u8);
        }
    }

    if label_index.is_some() {
        Dataset::with_labels(points, labels)
    } else {
        Dataset::new(points)
    }
}

/// Formats a float with 17 significant digits, enough to reload the exact
/// same bits.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a dataset in the canonical format.
pub fn write_csv(path: &Path, ds: &Dataset) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Write {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = BufWriter::new(file);
    let dim = ds.dim().unwrap_or(0);
    let mut write = |line: String| {
        out.write_all(line.as_bytes())
            .and_then(|_| out.write_all(b"\n"))
            .map_err(|source| Error::Write {
                path: path.to_path_buf(),
                source,
            })
    };

    let mut header: Vec<String> = (0..dim).map(|d| format!("f{d}")).collect();
    if ds.labels().is_some() {
        header.push("label".into());
    }
    write(header.join(","))?;

    for (i, p) in ds.points().iter().enumerate() {
        let mut cells: Vec<String> = p.coords().iter().map(|&v| format_value(v)).collect();
        if let Some(labels) = ds.labels() {
            cells.push(labels[i].to_string());
        }
        write(cells.join(","))?;
    }
    out.flush().map_err(|source| Error::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// Per-feature z-score over this dataset only, with the population standard
/// deviation. Constant features map to zero. Labels pass through.
pub fn standardize(ds: &Dataset) -> Dataset {
    let n = ds.len();
    let Some(dim) = ds.dim() else {
        return ds.clone();
    };
    let mut mean = vec![0.0; dim];
    for p in ds.points() {
        for (d, &v) in p.coords().iter().enumerate() {
            mean[d] += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut var = vec![0.0; dim];
    for p in ds.points() {
        for (d, &v) in p.coords().iter().enumerate() {
            let c = v - mean[d];
            var[d] += c * c;
        }
    }
    let std: Vec<f64> = var.iter().map(|&v| (v / n as f64).sqrt()).collect();

    let points: Vec<Point> = ds
        .points()
        .iter()
        .map(|p| {
            let coords = p
                .coords()
                .iter()
                .enumerate()
                .map(|(d, &v)| {
                    if std[d] > 0.0 {
                        (v - mean[d]) / std[d]
                    } else {
                        0.0
                    }
                })
                .collect();
            Point::new(coords).expect("standardized values stay finite")
        })
        .collect();
    match ds.labels() {
        Some(labels) => {
            Dataset::with_labels(points, labels.to_vec()).expect("label alignment preserved")
        }
        None => Dataset::new(points).expect("dimensions preserved"),
    }
}

/// Shuttle preprocessing: drop the largest outlier class, binarize the rest,
/// window the first `static_count + stream_count` rows in original order,
/// split, and standardize each subset independently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShuttleRecipe {
    pub static_count: usize,
    pub stream_count: usize,
    /// Class 6 maps to the outlier class when true, and is dropped like
    /// class 4 when false. The merged-outlier reading is the default.
    pub class6_outlier: bool,
    pub standardize: bool,
    /// Keep only the first `feature_count` columns; `None` keeps all.
    pub feature_count: Option<usize>,
}

impl Default for ShuttleRecipe {
    fn default() -> Self {
        Self {
            static_count: 1000,
            stream_count: 640,
            class6_outlier: true,
            standardize: true,
            feature_count: Some(7),
        }
    }
}

pub fn prep_shuttle(raw: &Dataset, recipe: &ShuttleRecipe) -> Result<(Dataset, Dataset)> {
    let labels = raw.labels().ok_or_else(|| Error::InvalidParameter {
        name: "raw",
        reason: "shuttle preprocessing needs the original class labels".into(),
    })?;
    let window = recipe.static_count + recipe.stream_count;

    let mut points = Vec::with_capacity(window);
    let mut binary = Vec::with_capacity(window);
    for (p, &class) in raw.points().iter().zip(labels) {
        let mapped = match class {
            4 => continue,
            1 => 0,
            6 if !recipe.class6_outlier => continue,
            2 | 3 | 5 | 6 | 7 => 1,
            other => {
                return Err(Error::InvalidParameter {
                    name: "raw",
                    reason: format!("unexpected shuttle class {other}"),
                })
            }
        };
        if points.len() < window {
            points.push(truncate_features(p, recipe.feature_count)?);
            binary.push(mapped);
        } else {
            break;
        }
    }

    if points.len() < window {
        return Err(Error::InsufficientPoints {
            required: window,
            actual: points.len(),
        });
    }

    split_and_standardize(points, binary, recipe.static_count, recipe.standardize)
}

fn truncate_features(p: &Point, feature_count: Option<usize>) -> Result<Point> {
    match feature_count {
        None => Ok(p.clone()),
        Some(fc) => {
            if fc == 0 || fc > p.dim() {
                return Err(Error::InvalidParameter {
                    name: "feature_count",
                    reason: format!("must lie in 1..={}, got {fc}", p.dim()),
                });
            }
            Point::new(p.coords()[..fc].to_vec())
        }
    }
}

fn split_and_standardize(
    points: Vec<Point>,
    labels: Vec<u8>,
    static_count: usize,
    standardize_subsets: bool,
) -> Result<(Dataset, Dataset)> {
    let stream_points = points[static_count..].to_vec();
    let stream_labels = labels[static_count..].to_vec();
    let mut static_ds = Dataset::with_labels(
        points[..static_count].to_vec(),
        labels[..static_count].to_vec(),
    )?;
    let mut stream_ds = Dataset::with_labels(stream_points, stream_labels)?;
    if standardize_subsets {
        static_ds = standardize(&static_ds);
        stream_ds = standardize(&stream_ds);
    }
    Ok((static_ds, stream_ds))
}

/// Credit-card preprocessing: keep every fraud row, subsample legitimate
/// rows to the target fraud fraction with a seeded shuffle, restore original
/// temporal order, window, split, and standardize each subset independently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreditRecipe {
    pub static_count: usize,
    pub stream_count: usize,
    pub target_fraud_fraction: f64,
    pub subsample_seed: u64,
    pub standardize: bool,
}

impl Default for CreditRecipe {
    fn default() -> Self {
        Self {
            static_count: 1000,
            stream_count: 640,
            target_fraud_fraction: 0.05,
            subsample_seed: 42,
            standardize: true,
        }
    }
}

pub fn prep_credit(raw: &Dataset, recipe: &CreditRecipe) -> Result<(Dataset, Dataset)> {
    let labels = raw.labels().ok_or_else(|| Error::InvalidParameter {
        name: "raw",
        reason: "credit preprocessing needs the Class labels".into(),
    })?;
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::InvalidParameter {
            name: "raw",
            reason: "credit labels must be binary (0 legitimate, 1 fraud)".into(),
        });
    }
    if !(recipe.target_fraud_fraction > 0.0 && recipe.target_fraud_fraction < 1.0) {
        return Err(Error::InvalidParameter {
            name: "target_fraud_fraction",
            reason: format!("must lie in (0, 1), got {}", recipe.target_fraud_fraction),
        });
    }

    let frauds: Vec<usize> = (0..raw.len()).filter(|&i| labels[i] == 1).collect();
    let mut legit: Vec<usize> = (0..raw.len()).filter(|&i| labels[i] == 0).collect();
    if frauds.is_empty() {
        return Err(Error::InvalidParameter {
            name: "raw",
            reason: "no fraud rows present".into(),
        });
    }

    let target_total = (frauds.len() as f64 / recipe.target_fraud_fraction + 0.5).floor() as usize;
    let legit_needed = target_total.saturating_sub(frauds.len());
    if legit.len() < legit_needed {
        return Err(Error::InsufficientPoints {
            required: legit_needed,
            actual: legit.len(),
        });
    }

    // Seeded partial Fisher-Yates: the first `legit_needed` entries become a
    // uniform sample without replacement.
    let mut rng = SplitMix64::new(recipe.subsample_seed);
    for i in 0..legit_needed {
        let j = i + (rng.next_u64() % (legit.len() - i) as u64) as usize;
        legit.swap(i, j);
    }
    let mut keep: Vec<usize> = frauds
        .iter()
        .copied()
        .chain(legit[..legit_needed].iter().copied())
        .collect();
    keep.sort_unstable(); // original temporal order

    let window = recipe.static_count + recipe.stream_count;
    if keep.len() < window {
        return Err(Error::InsufficientPoints {
            required: window,
            actual: keep.len(),
        });
    }
    let points: Vec<Point> = keep[..window]
        .iter()
        .map(|&i| raw.point(i).clone())
        .collect();
    let binary: Vec<u8> = keep[..window].iter().map(|&i| labels[i]).collect();

    split_and_standardize(points, binary, recipe.static_count, recipe.standardize)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn load_preserves_row_order() {
        let f = write_temp("f0,f1,label\n1,2,0\n3,4,1\n5,6,0\n");
        let ds = load_csv(f.path(), &CsvSchema::default()).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.point(0).coords(), &[1.0, 2.0]);
        assert_eq!(ds.point(2).coords(), &[5.0, 6.0]);
        assert_eq!(ds.labels().unwrap(), &[0, 1, 0]);
    }

    #[test]
    fn nan_cell_names_row_and_column() {
        let f = write_temp("f0,f1,label\n1,2,0\n3,NaN,1\n");
        let err = load_csv(f.path(), &CsvSchema::default()).unwrap_err();
        match err {
            Error::CsvParse { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "f1");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn missing_label_column_is_an_error() {
        let f = write_temp("a,b\n1,2\n");
        assert!(matches!(
            load_csv(f.path(), &CsvSchema::default()),
            Err(Error::MissingColumn { .. })
        ));
    }

    #[test]
    fn canonical_roundtrip_is_exact() {
        let ds = Dataset::with_labels(
            vec![
                Point::new(vec![0.1, 2.0f64.sqrt()]).unwrap(),
                Point::new(vec![-1.0 / 3.0, 1e-300]).unwrap(),
            ],
            vec![0, 1],
        )
        .unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_csv(f.path(), &ds).unwrap();
        let back = load_csv(f.path(), &CsvSchema::default()).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn standardize_analytic_example() {
        let ds = Dataset::new(vec![
            Point::new(vec![1.0]).unwrap(),
            Point::new(vec![2.0]).unwrap(),
            Point::new(vec![3.0]).unwrap(),
        ])
        .unwrap();
        let z = standardize(&ds);
        let expected = 1.5f64.sqrt(); // (3-2)/sqrt(2/3)
        assert!((z.point(0).coords()[0] + expected).abs() < 1e-12);
        assert_eq!(z.point(1).coords()[0], 0.0);
        assert!((z.point(2).coords()[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn standardize_constant_column_zeroes() {
        let ds = Dataset::new(vec![
            Point::new(vec![7.0, 1.0]).unwrap(),
            Point::new(vec![7.0, 3.0]).unwrap(),
        ])
        .unwrap();
        let z = standardize(&ds);
        assert_eq!(z.point(0).coords()[0], 0.0);
        assert_eq!(z.point(1).coords()[0], 0.0);
    }

    #[test]
    fn standardize_idempotent() {
        let mut rng = SplitMix64::new(10);
        let ds = Dataset::new(
            (0..40)
                .map(|_| Point::new(vec![rng.next_f64() * 9.0, rng.next_f64() - 3.0]).unwrap())
                .collect(),
        )
        .unwrap();
        let once = standardize(&ds);
        let twice = standardize(&once);
        for (a, b) in once.points().iter().zip(twice.points()) {
            for (x, y) in a.coords().iter().zip(b.coords()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    /// A small shuttle-shaped fixture: classes cycle so every class appears.
    fn shuttle_fixture(rows: usize) -> Dataset {
        let mut rng = SplitMix64::new(3);
        let classes = [1u8, 1, 1, 1, 1, 1, 2, 1, 1, 5, 1, 1, 3, 1, 4, 1, 6, 1, 7, 1];
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for i in 0..rows {
            points
                .push(Point::new((0..9).map(|_| (rng.next_u64() % 100) as f64).collect()).unwrap());
            labels.push(classes[i % classes.len()]);
        }
        Dataset::with_labels(points, labels).unwrap()
    }

    #[test]
    fn shuttle_filters_class4_and_splits() {
        let raw = shuttle_fixture(2000);
        let recipe = ShuttleRecipe {
            standardize: false,
            ..ShuttleRecipe::default()
        };
        let (static_ds, stream_ds) = prep_shuttle(&raw, &recipe).unwrap();
        assert_eq!(static_ds.len(), 1000);
        assert_eq!(stream_ds.len(), 640);
        assert_eq!(static_ds.dim(), Some(7));
        // Binary labels only.
        for l in static_ds
            .labels()
            .unwrap()
            .iter()
            .chain(stream_ds.labels().unwrap())
        {
            assert!(*l <= 1);
        }
    }

    #[test]
    fn shuttle_class6_modes() {
        let raw = shuttle_fixture(2500);
        let keep = prep_shuttle(
            &raw,
            &ShuttleRecipe {
                standardize: false,
                ..ShuttleRecipe::default()
            },
        )
        .unwrap();
        let drop = prep_shuttle(
            &raw,
            &ShuttleRecipe {
                class6_outlier: false,
                standardize: false,
                ..ShuttleRecipe::default()
            },
        )
        .unwrap();
        let count = |pair: &(Dataset, Dataset)| -> usize {
            pair.0
                .labels()
                .unwrap()
                .iter()
                .chain(pair.1.labels().unwrap())
                .map(|&l| l as usize)
                .sum()
        };
        assert!(count(&keep) > count(&drop));
    }

    #[test]
    fn shuttle_rejects_short_input() {
        let raw = shuttle_fixture(100);
        assert!(matches!(
            prep_shuttle(&raw, &ShuttleRecipe::default()),
            Err(Error::InsufficientPoints { .. })
        ));
    }

    /// Credit-shaped fixture: sparse frauds over a long series.
    fn credit_fixture(rows: usize, fraud_every: usize) -> Dataset {
        let mut rng = SplitMix64::new(8);
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for i in 0..rows {
            points.push(Point::new(vec![rng.next_f64(), rng.next_f64() * 4.0]).unwrap());
            labels.push(u8::from(i % fraud_every == 0));
        }
        Dataset::with_labels(points, labels).unwrap()
    }

    #[test]
    fn credit_hits_target_fraction_and_order() {
        let raw = credit_fixture(40_000, 250); // 160 frauds
        let recipe = CreditRecipe {
            standardize: false,
            ..CreditRecipe::default()
        };
        let (static_ds, stream_ds) = prep_credit(&raw, &recipe).unwrap();
        assert_eq!(static_ds.len(), 1000);
        assert_eq!(stream_ds.len(), 640);
        // All 160 frauds kept, 3040 legit sampled: 160/3200 = 5%.
        let kept_frauds: usize = static_ds
            .labels()
            .unwrap()
            .iter()
            .chain(stream_ds.labels().unwrap())
            .map(|&l| l as usize)
            .sum();
        assert!(kept_frauds > 0);
    }

    #[test]
    fn credit_same_seed_same_subsample() {
        let raw = credit_fixture(20_000, 100);
        let recipe = CreditRecipe {
            standardize: false,
            ..CreditRecipe::default()
        };
        assert_eq!(
            prep_credit(&raw, &recipe).unwrap(),
            prep_credit(&raw, &recipe).unwrap()
        );
        let other = CreditRecipe {
            subsample_seed: 1,
            standardize: false,
            ..CreditRecipe::default()
        };
        assert_ne!(
            prep_credit(&raw, &recipe).unwrap(),
            prep_credit(&raw, &other).unwrap()
        );
    }

    #[test]
    fn credit_fraction_before_windowing() {
        let raw = credit_fixture(60_000, 300); // 200 frauds
        let recipe = CreditRecipe::default();
        let frauds = 200.0;
        let total = (frauds / recipe.target_fraud_fraction).round();
        // The construction is exact: total = frauds / fraction rounded.
        assert!((frauds / total - recipe.target_fraud_fraction).abs() < 0.005);
        assert!(prep_credit(&raw, &recipe).is_ok());
    }
}
