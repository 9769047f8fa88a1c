use ndarray::{s, Array2};
use rand::Rng;

use crate::error::{Error, Result};
use crate::seed;

/// Flattened images in `[0, 1]` with integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    images: Array2<f32>,
    labels: Vec<usize>,
    num_classes: usize,
}

impl Dataset {
    pub fn new(images: Array2<f32>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if images.nrows() != labels.len() {
            return Err(Error::Validation(format!(
                "{} images but {} labels",
                images.nrows(),
                labels.len()
            )));
        }
        if num_classes == 0 {
            return Err(Error::Validation("num_classes must be positive".into()));
        }
        if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= num_classes) {
            return Err(Error::Validation(format!(
                "label {l} of example {i} is outside [0, {num_classes})"
            )));
        }
        Ok(Dataset {
            images,
            labels,
            num_classes,
        })
    }

    pub fn images(&self) -> &Array2<f32> {
        &self.images
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.images.ncols()
    }

    /// The first `n` examples (or all of them if fewer).
    pub fn take(&self, n: usize) -> Dataset {
        self.slice(0, n.min(self.len()))
    }

    /// Examples `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> Dataset {
        let end = end.min(self.len());
        let start = start.min(end);
        Dataset {
            images: self.images.slice(s![start..end, ..]).to_owned(),
            labels: self.labels[start..end].to_vec(),
            num_classes: self.num_classes,
        }
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

/// IID uniform pixels with IID uniform labels; an unlearnable control task.
pub fn make_random_dataset(
    num_examples: usize,
    input_dim: usize,
    num_classes: usize,
    seed: u64,
) -> Result<Dataset> {
    if num_examples == 0 || input_dim == 0 || num_classes == 0 {
        return Err(Error::Validation(format!(
            "random dataset needs positive sizes, got ({num_examples}, {input_dim}, {num_classes})"
        )));
    }
    let mut rng = seed::rng(seed);
    let images = Array2::from_shape_simple_fn((num_examples, input_dim), || rng.random::<f32>());
    let labels = (0..num_examples)
        .map(|_| rng.random_range(0..num_classes))
        .collect();
    Dataset::new(images, labels, num_classes)
}
