//! Dataset ingestion: LIBSVM parsing with strict validation, reproducible
//! synthetic logistic-regression data, and client partitioning.

use std::collections::BTreeSet;
use std::path::Path;

use rand::Rng;
use reshuffle_core::rng::{random_permutation, substream, StreamPurpose};

use crate::config::Partition;
use crate::error::{HarnessError, Result};

/// Sparse binary-classification rows; indices strictly increasing per row,
/// labels already normalized to {0, 1}.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDataset {
    pub rows: Vec<Vec<(usize, f64)>>,
    pub labels: Vec<bool>,
    pub dim: usize,
}

impl SparseDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Parses LIBSVM text: `label idx:val idx:val ...` per line, 1-based indices.
///
/// Labels must form one of the sets {0,1}, {-1,+1} or {1,2}; the latter two
/// are mapped onto {0,1} with the larger label becoming 1. Blank lines are
/// allowed; any malformed token or non-increasing index is an error naming
/// the line.
pub fn parse_libsvm_text(text: &str, declared_dim: Option<usize>) -> Result<SparseDataset> {
    let mut rows = Vec::new();
    let mut raw_labels: Vec<f64> = Vec::new();
    let mut max_index = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let mut tokens = line.split_whitespace();
        let Some(label_token) = tokens.next() else {
            continue; // blank line
        };
        let label: f64 = label_token.parse().map_err(|_| {
            HarnessError::dataset(format!("line {lineno}: bad label token \"{label_token}\""))
        })?;
        let mut row: Vec<(usize, f64)> = Vec::new();
        for token in tokens {
            let Some((idx_text, val_text)) = token.split_once(':') else {
                return Err(HarnessError::dataset(format!(
                    "line {lineno}: feature token \"{token}\" is not index:value"
                )));
            };
            let one_based: usize = idx_text.parse().map_err(|_| {
                HarnessError::dataset(format!("line {lineno}: bad index \"{idx_text}\""))
            })?;
            if one_based == 0 {
                return Err(HarnessError::dataset(format!(
                    "line {lineno}: indices are 1-based, got 0"
                )));
            }
            let value: f64 = val_text.parse().map_err(|_| {
                HarnessError::dataset(format!("line {lineno}: bad value \"{val_text}\""))
            })?;
            if !value.is_finite() {
                return Err(HarnessError::dataset(format!(
                    "line {lineno}: non-finite value \"{val_text}\""
                )));
            }
            let index = one_based - 1;
            if let Some(&(prev, _)) = row.last() {
                if index <= prev {
                    return Err(HarnessError::dataset(format!(
                        "line {lineno}: indices must be strictly increasing ({} then {})",
                        prev + 1,
                        one_based
                    )));
                }
            }
            max_index = max_index.max(index);
            row.push((index, value));
        }
        raw_labels.push(label);
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(HarnessError::dataset("no samples"));
    }

    let distinct: BTreeSet<_> = raw_labels.iter().map(|l| l.to_bits()).collect();
    let mut as_set: Vec<f64> = distinct.iter().map(|b| f64::from_bits(*b)).collect();
    as_set.sort_by(|a, b| a.partial_cmp(b).expect("finite labels"));
    let to_bool: Box<dyn Fn(f64) -> bool> = match as_set.as_slice() {
        [a] if *a == -1.0 || *a == 0.0 || *a == 1.0 => Box::new(|l| l == 1.0),
        [a, b] if *a == 0.0 && *b == 1.0 => Box::new(|l| l == 1.0),
        [a, b] if *a == -1.0 && *b == 1.0 => Box::new(|l| l == 1.0),
        [a, b] if *a == 1.0 && *b == 2.0 => Box::new(|l| l == 2.0),
        _ => {
            return Err(HarnessError::dataset(format!(
                "labels must be binary ({{0,1}}, {{-1,+1}} or {{1,2}}), got {as_set:?}"
            )))
        }
    };
    let labels: Vec<bool> = raw_labels.into_iter().map(&to_bool).collect();

    let inferred = max_index + 1;
    let dim = match declared_dim {
        Some(declared) if declared < inferred => {
            return Err(HarnessError::dataset(format!(
                "declared dimension {declared} below observed {inferred}"
            )))
        }
        Some(declared) => declared,
        None => inferred,
    };
    Ok(SparseDataset { rows, labels, dim })
}

pub fn parse_libsvm(path: &Path, declared_dim: Option<usize>) -> Result<SparseDataset> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::dataset(format!("cannot read {}: {e}", path.display())))?;
    parse_libsvm_text(&text, declared_dim)
}

/// Reproducible synthetic logistic data from a planted separating weight
/// vector: rows keep a margin of at least 0.15 from the plane, and labels
/// are flipped independently with probability `label_noise`.
pub fn synth_logreg(
    samples: usize,
    features: usize,
    sparsity: f64,
    label_noise: f64,
    seed: u64,
) -> SparseDataset {
    assert!(samples >= 1 && features >= 1);
    let mut rng = substream(seed, StreamPurpose::Data, 0);
    let planted: Vec<f64> = (0..features).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    let nonzeros = ((sparsity * features as f64).round() as usize).clamp(1, features);
    let mut rows = Vec::with_capacity(samples);
    let mut labels = Vec::with_capacity(samples);
    for _ in 0..samples {
        let mut row: Vec<(usize, f64)> = Vec::new();
        let mut margin = 0.0;
        for _attempt in 0..64 {
            let mut support = random_permutation(&mut rng, features);
            support.truncate(nonzeros);
            support.sort_unstable();
            row = support
                .into_iter()
                .map(|idx| (idx, rng.random::<f64>() * 2.0 - 1.0))
                .collect();
            margin = row.iter().map(|&(idx, v)| v * planted[idx]).sum();
            if margin.abs() >= 0.15 {
                break;
            }
        }
        let mut label = margin > 0.0;
        if label_noise > 0.0 && rng.random::<f64>() < label_noise {
            label = !label;
        }
        rows.push(row);
        labels.push(label);
    }
    SparseDataset { rows, labels, dim: features }
}

/// Splits row indices across `clients`; every client receives a contiguous
/// chunk of the arranged order, sizes balanced to within one.
pub fn partition_rows(
    dataset: &SparseDataset,
    clients: usize,
    mode: Partition,
    seed: u64,
) -> Vec<Vec<usize>> {
    assert!(clients >= 1);
    let n = dataset.len();
    let arranged: Vec<usize> = match mode {
        Partition::Iid => {
            let mut rng = substream(seed, StreamPurpose::Partition, 0);
            random_permutation(&mut rng, n)
        }
        Partition::ByLabel => {
            let mut indices: Vec<usize> = (0..n).collect();
            indices.sort_by_key(|&i| (dataset.labels[i], i));
            indices
        }
        Partition::ByShard => (0..n).collect(),
    };
    let base = n / clients;
    let extra = n % clients;
    let mut out = Vec::with_capacity(clients);
    let mut cursor = 0usize;
    for m in 0..clients {
        let size = base + usize::from(m < extra);
        out.push(arranged[cursor..cursor + size].to_vec());
        cursor += size;
    }
    out
}
