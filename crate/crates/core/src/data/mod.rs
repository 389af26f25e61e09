//! Labelled sparse datasets: loading, writing, synthetic generation,
//! stratified splitting and standardization.

mod io;
mod split;
mod synth;

pub use io::{load_sparse_text, write_sparse_text, Format, LoadOptions};
pub use split::{holdout, split, standardize, Scaler, SplitSpec, Splits};
pub use synth::{generate_sim1, generate_sim2, generate_sim3, GeneratorSpec, SimKind, SIM3_DEFAULT_DIM};

use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("dataset is empty")]
    Empty,
    #[error("row {row}: {message}")]
    InvalidRow { row: usize, message: String },
    #[error("class {class} has no samples")]
    MissingClass { class: u32 },
    #[error("class {class} has no samples left for the {part} part")]
    ClassStarvation { class: u32, part: &'static str },
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Where a dataset came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    File {
        path: String,
        format: Format,
        /// Original label text and the class it was mapped to.
        label_map: Vec<(String, u32)>,
    },
    Generated(GeneratorSpec),
    Part {
        parent: Box<Provenance>,
        part: String,
        seed: u64,
    },
    Standardized(Box<Provenance>),
    InMemory,
}

/// Borrowed view of one observation: strictly increasing feature indices and
/// their values.
#[derive(Debug, Clone, Copy)]
pub struct SparseRow<'a> {
    pub indices: &'a [u32],
    pub values: &'a [f64],
}

impl SparseRow<'_> {
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().map(|&j| j as usize).zip(self.values.iter().copied())
    }

    pub fn squared_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }
}

/// `n` sparse rows in CSR layout with labels in `1..=Q`.
///
/// Explicit zeros are not stored. Every class in `1..=Q` has at least one row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
    labels: Vec<u32>,
    dim: usize,
    classes: usize,
    provenance: Provenance,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of classes `Q`.
    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn row(&self, i: usize) -> SparseRow<'_> {
        let range = self.indptr[i]..self.indptr[i + 1];
        SparseRow {
            indices: &self.indices[range.clone()],
            values: &self.values[range],
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = SparseRow<'_>> + '_ {
        (0..self.n()).map(|i| self.row(i))
    }

    /// Label in `1..=Q`.
    pub fn label(&self, i: usize) -> u32 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Zero-based class of row `i`.
    pub fn class_index(&self, i: usize) -> usize {
        self.labels[i] as usize - 1
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes];
        for &y in &self.labels {
            counts[y as usize - 1] += 1;
        }
        counts
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// Dense copy of row `i`.
    pub fn dense_row(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (j, v) in self.row(i).iter() {
            out[j] = v;
        }
        out
    }

    /// Rows `indices` in that order, keeping `d` and `Q`.
    pub fn subset(&self, indices: &[usize], provenance: Provenance) -> Result<Dataset, DataError> {
        let mut b = DatasetBuilder::new(self.dim);
        for &i in indices {
            let row = self.row(i);
            b.push_sorted(row.indices, row.values, self.labels[i]);
        }
        b.finish(Some(self.classes), provenance)
    }
}

/// Incremental construction with validation.
#[derive(Debug, Clone)]
pub struct DatasetBuilder {
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
    labels: Vec<u32>,
    dim: usize,
}

impl DatasetBuilder {
    pub fn new(dim: usize) -> Self {
        DatasetBuilder {
            indptr: vec![0],
            indices: Vec::new(),
            values: Vec::new(),
            labels: Vec::new(),
            dim,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Adds a row given as `(feature, value)` pairs in any order.
    ///
    /// Zeros are dropped; duplicate features, out-of-range features,
    /// non-finite values and label 0 are rejected.
    pub fn push_row(&mut self, entries: &[(usize, f64)], label: u32) -> Result<(), DataError> {
        let row = self.labels.len();
        let invalid = |message: String| DataError::InvalidRow { row, message };
        if label == 0 {
            return Err(invalid("labels start at 1".into()));
        }
        let mut sorted: Vec<(usize, f64)> = entries.to_vec();
        sorted.sort_unstable_by_key(|e| e.0);
        for w in sorted.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(invalid(format!("duplicate feature index {}", w[0].0)));
            }
        }
        for &(j, v) in &sorted {
            if j >= self.dim {
                return Err(invalid(format!("feature index {j} out of range (d = {})", self.dim)));
            }
            if !v.is_finite() {
                return Err(invalid(format!("feature {j} has non-finite value {v}")));
            }
            if v != 0.0 {
                self.indices.push(j as u32);
                self.values.push(v);
            }
        }
        self.indptr.push(self.indices.len());
        self.labels.push(label);
        Ok(())
    }

    /// Adds a dense row, dropping zeros.
    pub fn push_dense(&mut self, values: &[f64], label: u32) -> Result<(), DataError> {
        let entries: Vec<(usize, f64)> = values.iter().copied().enumerate().collect();
        self.push_row(&entries, label)
    }

    fn push_sorted(&mut self, indices: &[u32], values: &[f64], label: u32) {
        self.indices.extend_from_slice(indices);
        self.values.extend_from_slice(values);
        self.indptr.push(self.indices.len());
        self.labels.push(label);
    }

    /// Validates class coverage. With `classes = None`, `Q` is the largest label.
    pub fn finish(self, classes: Option<usize>, provenance: Provenance) -> Result<Dataset, DataError> {
        if self.labels.is_empty() {
            return Err(DataError::Empty);
        }
        let max_label = *self.labels.iter().max().expect("nonempty") as usize;
        let classes = classes.unwrap_or(max_label);
        if max_label > classes {
            let row = self.labels.iter().position(|&y| y as usize > classes).expect("exists");
            return Err(DataError::InvalidRow {
                row,
                message: format!("label {} outside 1..={classes}", self.labels[row]),
            });
        }
        let mut seen = vec![false; classes];
        for &y in &self.labels {
            seen[y as usize - 1] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(DataError::MissingClass {
                class: missing as u32 + 1,
            });
        }
        Ok(Dataset {
            indptr: self.indptr,
            indices: self.indices,
            values: self.values,
            labels: self.labels,
            dim: self.dim,
            classes,
            provenance,
        })
    }
}
