use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{stream_rng, Stream};
use crate::error::{ItrdError, Result};
use crate::tensor::Matrix;

/// Radius of the circle the class centers sit on.
pub const CENTER_RADIUS: f64 = 2.0;

/// Fraction of each class held out for testing.
pub const TEST_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

/// Labeled 2-D points with a fixed train/test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDataset {
    pub points: Matrix,
    pub labels: Vec<usize>,
    pub classes: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl SyntheticDataset {
    pub fn indices(&self, split: Split) -> &[usize] {
        match split {
            Split::Train => &self.train,
            Split::Test => &self.test,
        }
    }

    /// Points and labels at `indices`, in that order. Panics on an empty
    /// index list.
    pub fn gather(&self, indices: &[usize]) -> (Matrix, Vec<usize>) {
        let x = Matrix::from_fn(indices.len(), self.points.cols(), |i, j| {
            self.points[(indices[i], j)]
        });
        let y = indices.iter().map(|&k| self.labels[k]).collect();
        (x, y)
    }

    pub fn split(&self, split: Split) -> (Matrix, Vec<usize>) {
        self.gather(self.indices(split))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Isotropic Gaussian blobs with standard deviation `spread` around
/// `classes` centers evenly spaced on a circle of radius 2.
///
/// Each class contributes `n_per_class` points, the last quarter of which
/// (rounded down) go to the test split.
pub fn generate_blobs(
    seed: u64,
    n_per_class: usize,
    classes: usize,
    spread: f64,
) -> Result<SyntheticDataset> {
    if classes < 2 {
        return Err(ItrdError::Argument(format!(
            "need at least 2 classes, got {classes}"
        )));
    }
    if n_per_class < 10 {
        return Err(ItrdError::Argument(format!(
            "need at least 10 points per class, got {n_per_class}"
        )));
    }
    if !(spread.is_finite() && spread >= 0.0) {
        return Err(ItrdError::Argument(format!(
            "spread must be finite and non-negative, got {spread}"
        )));
    }

    let mut rng = stream_rng(seed, Stream::Data);
    let n = n_per_class * classes;
    let n_test = (n_per_class as f64 * TEST_FRACTION).floor() as usize;
    let mut data = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for c in 0..classes {
        let angle = 2.0 * std::f64::consts::PI * c as f64 / classes as f64;
        let (cx, cy) = (CENTER_RADIUS * angle.cos(), CENTER_RADIUS * angle.sin());
        for k in 0..n_per_class {
            let dx: f64 = StandardNormal.sample(&mut rng);
            let dy: f64 = StandardNormal.sample(&mut rng);
            data.push(cx + spread * dx);
            data.push(cy + spread * dy);
            let idx = labels.len();
            labels.push(c);
            if k < n_per_class - n_test {
                train.push(idx);
            } else {
                test.push(idx);
            }
        }
    }
    Ok(SyntheticDataset {
        points: Matrix::new(n, 2, data)?,
        labels,
        classes,
        train,
        test,
    })
}
