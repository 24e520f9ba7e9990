use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::N_CLASSES;
use crate::error::{Error, Result};
use crate::rng::{RngSeed, Stream};

/// Disjoint index sets covering every row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
    /// Set when the data was too small to fill every partition and all rows
    /// went to `train`.
    pub degenerate: bool,
}

/// Stratified shuffle split.
///
/// Each class is shuffled with its own stream and cut into
/// `round(n_c * ratios.0)` training rows, `round(n_c * ratios.1)` validation
/// rows and the remainder as test rows. Index sets are returned sorted.
pub fn split_dataset(labels: &[u8], ratios: (f64, f64, f64), seed: RngSeed) -> Result<DatasetSplit> {
    let (tr, va, te) = ratios;
    if [tr, va, te].iter().any(|r| !(0.0..=1.0).contains(r)) || ((tr + va + te) - 1.0).abs() > 1e-9 {
        return Err(Error::param(format!("split ratios {ratios:?} must be in [0, 1] and sum to 1")));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); N_CLASSES];
    for (i, &l) in labels.iter().enumerate() {
        by_class.get_mut(l as usize).ok_or_else(|| Error::param(format!("label {l} outside class range")))?.push(i);
    }
    if let Some(c) = by_class.iter().position(Vec::is_empty) {
        return Err(Error::param(format!("class {c} has no samples")));
    }

    let mut split = DatasetSplit { train: Vec::new(), validation: Vec::new(), test: Vec::new(), degenerate: false };
    for (c, mut rows) in by_class.into_iter().enumerate() {
        rows.shuffle(&mut seed.derive(Stream::Split, c as u64).rng());
        let n = rows.len() as f64;
        let n_train = ((n * tr).round() as usize).min(rows.len());
        let n_val = ((n * va).round() as usize).min(rows.len() - n_train);
        split.train.extend_from_slice(&rows[..n_train]);
        split.validation.extend_from_slice(&rows[n_train..n_train + n_val]);
        split.test.extend_from_slice(&rows[n_train + n_val..]);
    }
    let wanted_nonempty = [(tr, &split.train), (va, &split.validation), (te, &split.test)];
    if wanted_nonempty.iter().any(|(r, part)| *r > 0.0 && part.is_empty()) {
        split.train = (0..labels.len()).collect();
        split.validation.clear();
        split.test.clear();
        split.degenerate = true;
    }
    split.train.sort_unstable();
    split.validation.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}
