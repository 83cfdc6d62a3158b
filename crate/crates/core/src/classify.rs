//! Equal-quantile classification into k ordered classes.
//!
//! Breaks are nearest-rank quantiles; a value equal to a break falls in the
//! lower class, so tied values never straddle a class boundary.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fips::Fips;

/// Ordered labels used for the default five-class scheme.
pub const FIVE_CLASS_LABELS: [&str; 5] = [
    "very low",
    "relatively low",
    "moderate",
    "relatively high",
    "very high",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassAssignment {
    pub fips: Fips,
    /// The classified quantity.
    pub value: f64,
    /// 1-based class index in [1, k].
    pub class_index: usize,
    pub class_label: String,
}

/// Nearest-rank quantile breaks at q = j/k for j = 1..k-1: the value at
/// 1-based rank ceil(q * n) in the sorted list. Computed in integer
/// arithmetic so the rank is exact.
pub fn quantile_breaks(values: &[f64], k: usize) -> Result<Vec<f64>> {
    if k < 2 {
        return Err(Error::InvalidK(k));
    }
    if values.is_empty() {
        return Err(Error::InsufficientData(0));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    Ok((1..k)
        .map(|j| {
            let rank = (j * n).div_ceil(k);
            sorted[rank - 1]
        })
        .collect())
}

/// Assign each county to a class: 1 plus the number of breaks strictly less
/// than its value. Output is FIPS-ascending.
pub fn classify<S: AsRef<str>>(
    values: &BTreeMap<Fips, f64>,
    k: usize,
    labels: &[S],
) -> Result<Vec<ClassAssignment>> {
    if labels.len() != k {
        return Err(Error::LabelMismatch {
            expected: k,
            got: labels.len(),
        });
    }
    let pool: Vec<f64> = values.values().copied().collect();
    let breaks = quantile_breaks(&pool, k)?;
    Ok(values
        .iter()
        .map(|(fips, &value)| {
            let class_index = 1 + breaks.iter().filter(|b| **b < value).count();
            ClassAssignment {
                fips: fips.clone(),
                value,
                class_index,
                class_label: labels[class_index - 1].as_ref().to_string(),
            }
        })
        .collect())
}
