//! Agreement between the computed index and the FEMA risk index: rank
//! correlation on raw values, class cross-tabulation, and a divergence list
//! for counties the two products read very differently.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::classify::{classify, ClassAssignment};
use crate::error::{Error, Result};
use crate::fips::Fips;
use crate::index::DriResult;
use crate::ingest::NriRecord;

/// Spearman rank correlation with average (fractional) ranks for ties,
/// computed as the Pearson correlation of the two rank vectors.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientData(xs.len()));
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);

    let n = rx.len() as f64;
    let mean_x: f64 = rx.iter().sum::<f64>() / n;
    let mean_y: f64 = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (x, y) in rx.iter().zip(&ry) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == 0.0 {
        return Err(Error::ConstantInput { side: "x" });
    }
    if var_y == 0.0 {
        return Err(Error::ConstantInput { side: "y" });
    }
    Ok(cov / (var_x * var_y).sqrt())
}

/// 1-based ranks; tied values share the mean of the positions they occupy.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && values[order[end + 1]] == values[order[start]] {
            end += 1;
        }
        // Positions start+1 ..= end+1, averaged.
        let rank = (start + end + 2) as f64 / 2.0;
        for &original in &order[start..=end] {
            ranks[original] = rank;
        }
        start = end + 1;
    }
    ranks
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossTabulation {
    /// counts[i][j] = counties with a-class i+1 and b-class j+1.
    pub counts: Vec<Vec<u64>>,
    pub compared: usize,
    pub a_only: Vec<Fips>,
    pub b_only: Vec<Fips>,
}

/// Count per (a-class, b-class) pairs over the FIPS both sides classified.
pub fn cross_tabulate(
    a: &[ClassAssignment],
    b: &[ClassAssignment],
    k: usize,
) -> Result<CrossTabulation> {
    if k < 2 {
        return Err(Error::InvalidK(k));
    }
    for assignment in a.iter().chain(b) {
        if assignment.class_index < 1 || assignment.class_index > k {
            return Err(Error::ClassCountMismatch {
                expected: k,
                found: assignment.class_index,
            });
        }
    }
    let a_by_fips: BTreeMap<&Fips, usize> =
        a.iter().map(|x| (&x.fips, x.class_index)).collect();
    let b_by_fips: BTreeMap<&Fips, usize> =
        b.iter().map(|x| (&x.fips, x.class_index)).collect();

    let mut counts = vec![vec![0u64; k]; k];
    let mut compared = 0usize;
    for (fips, &a_class) in &a_by_fips {
        if let Some(&b_class) = b_by_fips.get(*fips) {
            counts[a_class - 1][b_class - 1] += 1;
            compared += 1;
        }
    }
    Ok(CrossTabulation {
        counts,
        compared,
        a_only: a_by_fips
            .keys()
            .filter(|f| !b_by_fips.contains_key(**f))
            .map(|f| (*f).clone())
            .collect(),
        b_only: b_by_fips
            .keys()
            .filter(|f| !a_by_fips.contains_key(**f))
            .map(|f| (*f).clone())
            .collect(),
    })
}

/// One county where the two products disagree by at least the threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Divergence {
    pub fips: Fips,
    pub dri_class: usize,
    pub nri_class: usize,
    /// dri_class - nri_class.
    pub delta: i64,
}

/// Counties with |dri_class - nri_class| >= threshold over the joined set,
/// sorted by |delta| descending then FIPS.
pub fn divergence_report(
    a: &[ClassAssignment],
    b: &[ClassAssignment],
    threshold: usize,
) -> Result<Vec<Divergence>> {
    if threshold < 1 {
        return Err(Error::InvalidConfig(
            "divergence threshold must be at least 1".to_string(),
        ));
    }
    let b_by_fips: BTreeMap<&Fips, usize> =
        b.iter().map(|x| (&x.fips, x.class_index)).collect();
    let mut rows: Vec<Divergence> = a
        .iter()
        .filter_map(|x| {
            b_by_fips.get(&x.fips).and_then(|&b_class| {
                let delta = x.class_index as i64 - b_class as i64;
                (delta.unsigned_abs() as usize >= threshold).then(|| Divergence {
                    fips: x.fips.clone(),
                    dri_class: x.class_index,
                    nri_class: b_class,
                    delta,
                })
            })
        })
        .collect();
    rows.sort_by(|x, y| {
        y.delta
            .abs()
            .cmp(&x.delta.abs())
            .then_with(|| x.fips.cmp(&y.fips))
    });
    Ok(rows)
}

/// Where the comparison's NRI classes came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NriClassSource {
    /// FEMA's published rating strings, mapped through the configured table.
    RiskRating,
    /// Quantile classification of the raw risk scores (used when ratings are
    /// absent, unmapped, or the class count does not fit the rating table).
    ComputedFromScore,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CoverageDiagnostics {
    /// Counties with a computed index but no NRI row.
    pub dri_only: Vec<Fips>,
    /// NRI rows with no computed index.
    pub nri_only: Vec<Fips>,
    /// Rating strings the configured table could not map (forces the
    /// computed-from-score fallback).
    pub unmapped_ratings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    /// Counties present on both sides.
    pub n: usize,
    /// Null when the joined set is too small or has zero rank variance.
    pub spearman_rho: Option<f64>,
    pub class_count: usize,
    pub nri_class_source: NriClassSource,
    pub cross_tab: Vec<Vec<u64>>,
    pub divergences: Vec<Divergence>,
    pub coverage_diagnostics: CoverageDiagnostics,
}

/// Assemble the full comparison: Spearman rho on raw values, class
/// cross-tabulation, and the divergence list.
pub fn build_report<S: AsRef<str>>(
    results: &[DriResult],
    dri_classes: &[ClassAssignment],
    nri: &[NriRecord],
    k: usize,
    labels: &[S],
    rating_classes: &BTreeMap<String, usize>,
    divergence_threshold: usize,
) -> Result<ComparisonReport> {
    let dri_by_fips: BTreeMap<&Fips, &DriResult> =
        results.iter().map(|r| (&r.fips, r)).collect();
    let nri_by_fips: BTreeMap<&Fips, &NriRecord> =
        nri.iter().map(|r| (&r.fips, r)).collect();
    let joined: Vec<&Fips> = dri_by_fips
        .keys()
        .filter(|f| nri_by_fips.contains_key(**f))
        .copied()
        .collect();

    let mut diagnostics = CoverageDiagnostics {
        dri_only: dri_by_fips
            .keys()
            .filter(|f| !nri_by_fips.contains_key(**f))
            .map(|f| (*f).clone())
            .collect(),
        nri_only: nri_by_fips
            .keys()
            .filter(|f| !dri_by_fips.contains_key(**f))
            .map(|f| (*f).clone())
            .collect(),
        unmapped_ratings: Vec::new(),
    };

    // Correlation uses raw index values against raw risk scores.
    let xs: Vec<f64> = joined.iter().map(|f| dri_by_fips[*f].dri).collect();
    let ys: Vec<f64> = joined.iter().map(|f| nri_by_fips[*f].risk_score).collect();
    let spearman_rho = match spearman(&xs, &ys) {
        Ok(rho) => Some(rho),
        Err(Error::InsufficientData(_)) | Err(Error::ConstantInput { .. }) => None,
        Err(other) => return Err(other),
    };

    // NRI classes: published ratings when they map cleanly, otherwise our
    // own quantile classification of the scores.
    let mut rated = Vec::with_capacity(joined.len());
    let mut usable = true;
    for fips in &joined {
        let record = nri_by_fips[*fips];
        match rating_classes.get(record.risk_rating.trim()) {
            Some(&class) if (1..=k).contains(&class) => rated.push(ClassAssignment {
                fips: (*fips).clone(),
                value: record.risk_score,
                class_index: class,
                class_label: labels[class - 1].as_ref().to_string(),
            }),
            _ => {
                let rating = record.risk_rating.trim().to_string();
                if !diagnostics.unmapped_ratings.contains(&rating) {
                    diagnostics.unmapped_ratings.push(rating);
                }
                usable = false;
            }
        }
    }
    let (nri_classes, nri_class_source) = if usable && !joined.is_empty() {
        (rated, NriClassSource::RiskRating)
    } else if joined.is_empty() {
        (Vec::new(), NriClassSource::RiskRating)
    } else {
        let scores: BTreeMap<Fips, f64> = joined
            .iter()
            .map(|f| ((*f).clone(), nri_by_fips[*f].risk_score))
            .collect();
        (classify(&scores, k, labels)?, NriClassSource::ComputedFromScore)
    };

    let joined_dri_classes: Vec<ClassAssignment> = dri_classes
        .iter()
        .filter(|a| nri_by_fips.contains_key(&a.fips))
        .cloned()
        .collect();
    let cross = cross_tabulate(&joined_dri_classes, &nri_classes, k)?;
    let divergences = divergence_report(&joined_dri_classes, &nri_classes, divergence_threshold)?;

    Ok(ComparisonReport {
        n: joined.len(),
        spearman_rho,
        class_count: k,
        nri_class_source,
        cross_tab: cross.counts,
        divergences,
        coverage_diagnostics: diagnostics,
    })
}
