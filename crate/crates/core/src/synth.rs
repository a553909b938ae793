//! Seeded synthetic datasets: a standard Gaussian core at the origin plus
//! scaled, shifted Gaussian outliers, in any dimension.
//!
//! Randomness comes from a self-contained SplitMix64 generator so that a
//! given seed produces the same dataset on every platform and in every
//! implementation of these recipes.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Point};
use crate::error::{Error, Result};

/// SplitMix64: a 64-bit counter-based generator.
///
/// Constants are the standard ones: the state advances by the golden-ratio
/// increment 0x9E3779B97F4A7C15, and the output mix multiplies by
/// 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB with xor-shifts of 30, 27, 31.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in 0..bound via rejection-free modulo; bound must be nonzero.
    fn next_below(&mut self, bound: u64) -> u64 {
        self.next_u64() % bound
    }
}

/// Standard normal variates via the Box-Muller transform, consuming the
/// uniform stream two at a time.
#[derive(Debug, Clone)]
pub struct GaussianSource {
    rng: SplitMix64,
    spare: Option<f64>,
}

impl GaussianSource {
    pub fn new(rng: SplitMix64) -> Self {
        Self { rng, spare: None }
    }

    pub fn sample(&mut self) -> f64 {
        if let Some(value) = self.spare.take() {
            return value;
        }
        // u1 in (0, 1] keeps the logarithm finite.
        let u1 = 1.0 - self.rng.next_f64();
        let u2 = self.rng.next_f64();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }

    fn next_vector(&mut self, dim: usize) -> Vec<f64> {
        (0..dim).map(|_| self.sample()).collect()
    }
}

/// Recipe for one synthetic initial/stream dataset pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthRecipe {
    /// Feature-space dimension.
    pub dim: usize,
    /// Points in the static baseline set.
    pub n_initial: usize,
    /// Points in the streamed set.
    pub n_stream: usize,
    /// Overall outlier proportion across both sets. The initial set carries
    /// half this rate; the remainder of the outlier budget streams in.
    pub outlier_fraction: f64,
    /// Standard deviation multiplier of the outlier Gaussian.
    pub outlier_scale: f64,
    /// Magnitude of the outlier mean shift. One unit direction is drawn per
    /// dataset, so the outliers form a single scaled, shifted Gaussian.
    pub outlier_shift: f64,
    pub seed: u64,
}

impl Default for SynthRecipe {
    fn default() -> Self {
        Self {
            dim: 2,
            n_initial: 1000,
            n_stream: 1280,
            outlier_fraction: 0.05,
            outlier_scale: 3.0,
            outlier_shift: 6.0,
            seed: 42,
        }
    }
}

impl SynthRecipe {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidParameter {
                name: "dim",
                reason: "dimension must be positive".into(),
            });
        }
        if self.n_initial == 0 || self.n_stream == 0 {
            return Err(Error::InvalidParameter {
                name: "n_initial/n_stream",
                reason: "both subsets must be non-empty".into(),
            });
        }
        if !(self.outlier_fraction > 0.0 && self.outlier_fraction < 1.0) {
            return Err(Error::InvalidParameter {
                name: "outlier_fraction",
                reason: format!("must lie in (0, 1), got {}", self.outlier_fraction),
            });
        }
        if self.outlier_scale <= 1.0 || !self.outlier_scale.is_finite() {
            return Err(Error::InvalidParameter {
                name: "outlier_scale",
                reason: format!("must exceed 1, got {}", self.outlier_scale),
            });
        }
        if !(self.outlier_shift >= 0.0 && self.outlier_shift.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "outlier_shift",
                reason: format!(
                    "must be a finite non-negative magnitude, got {}",
                    self.outlier_shift
                ),
            });
        }
        Ok(())
    }
}

fn round_count(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Generates the labeled initial and stream datasets for a recipe.
/// Deterministic given the recipe seed.
pub fn generate(recipe: &SynthRecipe) -> Result<(Dataset, Dataset)> {
    recipe.validate()?;
    let total = recipe.n_initial + recipe.n_stream;
    let outliers_total = round_count(recipe.outlier_fraction * total as f64);
    let outliers_initial = round_count(recipe.outlier_fraction / 2.0 * recipe.n_initial as f64);
    let outliers_stream = outliers_total.saturating_sub(outliers_initial);
    if outliers_initial > recipe.n_initial || outliers_stream > recipe.n_stream {
        return Err(Error::InvalidParameter {
            name: "outlier_fraction",
            reason: "outlier budget exceeds a subset size".into(),
        });
    }

    let mut rng = SplitMix64::new(recipe.seed);
    let labels_initial = shuffled_labels(recipe.n_initial, outliers_initial, &mut rng);
    let labels_stream = shuffled_labels(recipe.n_stream, outliers_stream, &mut rng);

    let mut gauss = GaussianSource::new(rng);
    let direction = gauss.next_vector(recipe.dim);
    let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
    let center: Vec<f64> = direction
        .iter()
        .map(|&d| {
            if norm > 0.0 {
                recipe.outlier_shift * d / norm
            } else {
                0.0
            }
        })
        .collect();

    let initial = generate_subset(recipe, &center, labels_initial, &mut gauss)?;
    let stream = generate_subset(recipe, &center, labels_stream, &mut gauss)?;
    Ok((initial, stream))
}

/// Outlier positions are spread through a subset by a Fisher-Yates shuffle
/// of the label sequence.
fn shuffled_labels(n: usize, n_outliers: usize, rng: &mut SplitMix64) -> Vec<u8> {
    let mut labels: Vec<u8> = (0..n).map(|i| u8::from(i < n_outliers)).collect();
    for i in (1..n).rev() {
        let j = rng.next_below(i as u64 + 1) as usize;
        labels.swap(i, j);
    }
    labels
}

fn generate_subset(
    recipe: &SynthRecipe,
    center: &[f64],
    labels: Vec<u8>,
    gauss: &mut GaussianSource,
) -> Result<Dataset> {
    let mut points = Vec::with_capacity(labels.len());
    for &label in &labels {
        let noise = gauss.next_vector(recipe.dim);
        let coords = if label == 1 {
            (0..recipe.dim)
                .map(|d| center[d] + recipe.outlier_scale * noise[d])
                .collect()
        } else {
            noise
        };
        points.push(Point::new(coords)?);
    }
    Dataset::with_labels(points, labels)
}
