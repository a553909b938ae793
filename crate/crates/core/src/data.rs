//! Points and datasets.
//!
//! A [`Dataset`] is an ordered collection of equal-dimension points with
//! optional labels. Insertion order is significant: it is the stream order
//! for the incremental detectors and the tie-break key for neighbor queries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in D-dimensional feature space. Coordinates are always finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    /// Builds a point, rejecting empty or non-finite coordinate vectors.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParameter {
                name: "coords",
                reason: "point must have at least one coordinate".into(),
            });
        }
        for (position, &value) in coords.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFiniteCoordinate { value, position });
            }
        }
        Ok(Self { coords })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// Ordered collection of points with optional binary or multiclass labels.
///
/// Labels use `0` for normal points and `1` for outliers; raw datasets may
/// carry original multiclass labels until a preprocessing recipe maps them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    points: Vec<Point>,
    labels: Option<Vec<u8>>,
}

impl Dataset {
    /// Builds an unlabeled dataset, checking dimension consistency.
    pub fn new(points: Vec<Point>) -> Result<Self> {
        check_dims(&points)?;
        Ok(Self {
            points,
            labels: None,
        })
    }

    /// Builds a labeled dataset; labels must align one-to-one with points.
    pub fn with_labels(points: Vec<Point>, labels: Vec<u8>) -> Result<Self> {
        check_dims(&points)?;
        if labels.len() != points.len() {
            return Err(Error::LabelLengthMismatch {
                labels: labels.len(),
                points: points.len(),
            });
        }
        Ok(Self {
            points,
            labels: Some(labels),
        })
    }

    /// Appends a point, enforcing the shared dimension.
    pub fn push(&mut self, point: Point) -> Result<()> {
        if let Some(first) = self.points.first() {
            if first.dim() != point.dim() {
                return Err(Error::DimensionMismatch {
                    expected: first.dim(),
                    actual: point.dim(),
                });
            }
        }
        if let Some(labels) = &mut self.labels {
            // Unlabeled appends onto a labeled dataset are not meaningful.
            debug_assert_eq!(labels.len(), self.points.len());
            labels.push(0);
        }
        self.points.push(point);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Shared dimension, or `None` for an empty dataset.
    pub fn dim(&self) -> Option<usize> {
        self.points.first().map(Point::dim)
    }

    pub fn point(&self, index: usize) -> &Point {
        &self.points[index]
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    /// Drops labels, keeping points and order.
    pub fn without_labels(mut self) -> Self {
        self.labels = None;
        self
    }

    /// Labels coerced to booleans (`!= 0` is an outlier).
    pub fn truth(&self) -> Option<Vec<bool>> {
        self.labels
            .as_ref()
            .map(|ls| ls.iter().map(|&l| l != 0).collect())
    }
}

fn check_dims(points: &[Point]) -> Result<()> {
    if let Some(first) = points.first() {
        let dim = first.dim();
        for p in points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: p.dim(),
                });
            }
        }
    }
    Ok(())
}
