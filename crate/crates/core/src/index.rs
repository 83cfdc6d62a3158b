//! Min-max normalization and the composite resilience index.
//!
//! Each county's score is `weight * (pop_norm + (1 - income_norm) + svi)`,
//! where population and income are min-max normalized over the configured
//! domain and income enters inverted (lower income means lower capacity to
//! recover). With the default weight of exactly 1/3 the score spans [0, 1].

use std::collections::BTreeSet;

use serde::Serialize;

use crate::config::{IndexConfig, NormalizationDomain};
use crate::error::{Error, Result};
use crate::fips::Fips;
use crate::ingest::CountyRecord;

/// Per-variable min/max over the normalization domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalizationContext {
    pub p_min: f64,
    pub p_max: f64,
    pub i_min: f64,
    pub i_max: f64,
    /// Counties contributing to the bounds.
    pub domain_size: usize,
}

/// One county's normalized components and composite score.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriResult {
    pub fips: Fips,
    pub pop_norm: f64,
    /// 1 minus the normalized income.
    pub income_norm_inverted: f64,
    pub svi: f64,
    pub dri: f64,
    /// `3 * weight - dri`; carried so either polarity reading can be mapped
    /// without recomputation.
    pub dri_complement: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClampedVariable {
    Population,
    Income,
}

/// A raw value that fell outside the normalization bounds and was clamped.
/// Only possible when bounds come from an analysis subset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClampEvent {
    pub fips: Fips,
    pub variable: ClampedVariable,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ComputeDiagnostics {
    /// analysis_fips entries with no matching county record.
    pub unknown_fips: Vec<Fips>,
    pub clamped: Vec<ClampEvent>,
}

#[derive(Debug, Clone)]
pub struct ComputeOutput {
    pub results: Vec<DriResult>,
    pub context: NormalizationContext,
    pub diagnostics: ComputeDiagnostics,
}

/// Compute exact min/max population and income bounds over the configured
/// normalization domain.
pub fn build_context(records: &[CountyRecord], config: &IndexConfig) -> Result<NormalizationContext> {
    let domain: Vec<&CountyRecord> = match config.normalization_domain {
        NormalizationDomain::FullDataset => records.iter().collect(),
        NormalizationDomain::AnalysisSubset => {
            let subset: BTreeSet<&Fips> = config.analysis_fips.iter().collect();
            records.iter().filter(|r| subset.contains(&r.fips)).collect()
        }
    };
    if domain.len() < 2 {
        return Err(Error::DegenerateDomain(format!(
            "{} county(ies) in normalization domain, need at least 2",
            domain.len()
        )));
    }

    let mut ctx = NormalizationContext {
        p_min: f64::INFINITY,
        p_max: f64::NEG_INFINITY,
        i_min: f64::INFINITY,
        i_max: f64::NEG_INFINITY,
        domain_size: domain.len(),
    };
    for record in &domain {
        let p = record.population as f64;
        ctx.p_min = ctx.p_min.min(p);
        ctx.p_max = ctx.p_max.max(p);
        ctx.i_min = ctx.i_min.min(record.income);
        ctx.i_max = ctx.i_max.max(record.income);
    }
    if ctx.p_min == ctx.p_max {
        return Err(Error::DegenerateDomain(format!(
            "population bounds coincide at {}",
            ctx.p_min
        )));
    }
    if ctx.i_min == ctx.i_max {
        return Err(Error::DegenerateDomain(format!(
            "income bounds coincide at {}",
            ctx.i_min
        )));
    }
    Ok(ctx)
}

/// `(value - lo) / (hi - lo)`, clamped to [0,1].
pub fn min_max_normalize(value: f64, lo: f64, hi: f64) -> Result<f64> {
    // NaN bounds must land here too, so compare via partial_cmp.
    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
        return Err(Error::DegenerateDomain(format!(
            "normalization bounds [{lo}, {hi}] are not increasing"
        )));
    }
    Ok(((value - lo) / (hi - lo)).clamp(0.0, 1.0))
}

/// Score one county against a prebuilt context.
pub fn compute_dri(
    record: &CountyRecord,
    ctx: &NormalizationContext,
    config: &IndexConfig,
) -> Result<DriResult> {
    let pop_norm = min_max_normalize(record.population as f64, ctx.p_min, ctx.p_max)?;
    let income_norm_inverted = 1.0 - min_max_normalize(record.income, ctx.i_min, ctx.i_max)?;
    let dri = config.weight * (pop_norm + income_norm_inverted + record.svi);
    Ok(DriResult {
        fips: record.fips.clone(),
        pop_norm,
        income_norm_inverted,
        svi: record.svi,
        dri,
        dri_complement: 3.0 * config.weight - dri,
    })
}

/// Score every county (restricted to analysis_fips when provided) against a
/// single context. Output is FIPS-ascending.
pub fn compute_all(records: &[CountyRecord], config: &IndexConfig) -> Result<ComputeOutput> {
    config.validate()?;
    let context = build_context(records, config)?;

    let known: BTreeSet<&Fips> = records.iter().map(|r| &r.fips).collect();
    let mut diagnostics = ComputeDiagnostics::default();
    let selected: Vec<&CountyRecord> = if config.analysis_fips.is_empty() {
        records.iter().collect()
    } else {
        let subset: BTreeSet<&Fips> = config.analysis_fips.iter().collect();
        diagnostics.unknown_fips = subset
            .iter()
            .filter(|f| !known.contains(**f))
            .map(|f| (**f).clone())
            .collect();
        records.iter().filter(|r| subset.contains(&r.fips)).collect()
    };

    let mut results = Vec::with_capacity(selected.len());
    for record in selected {
        let p = record.population as f64;
        if p < context.p_min || p > context.p_max {
            diagnostics.clamped.push(ClampEvent {
                fips: record.fips.clone(),
                variable: ClampedVariable::Population,
                value: p,
            });
        }
        if record.income < context.i_min || record.income > context.i_max {
            diagnostics.clamped.push(ClampEvent {
                fips: record.fips.clone(),
                variable: ClampedVariable::Income,
                value: record.income,
            });
        }
        results.push(compute_dri(record, &context, config)?);
    }
    results.sort_by(|a, b| a.fips.cmp(&b.fips));
    Ok(ComputeOutput {
        results,
        context,
        diagnostics,
    })
}
