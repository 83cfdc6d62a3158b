//! Parsers for the three public tabular sources and the county geometry
//! file, plus the FIPS join that produces canonical county records.
//!
//! Parsing is strict about convertibility (a malformed cell is an error) and
//! lenient about missing data (a sentinel cell rejects the row with a reason
//! instead of failing the run). Nothing leaves this module with an SVI
//! outside [0,1], a non-positive income, or a malformed FIPS.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::SchemaMapping;
use crate::error::{Error, Result};
use crate::fips::Fips;

/// One county's raw inputs after parsing, validation, and the FIPS join.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountyRecord {
    pub fips: Fips,
    pub name: String,
    pub state: String,
    /// Persons.
    pub population: u64,
    /// US dollars per person per year; strictly positive.
    pub income: f64,
    /// Social vulnerability percentile in [0,1].
    pub svi: f64,
}

/// Partial row from the SVI table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SviRow {
    pub fips: Fips,
    pub name: String,
    pub state: String,
    pub population: u64,
    pub svi: f64,
}

/// Partial row from the income table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncomeRow {
    pub fips: Fips,
    pub income: f64,
}

/// One row from the FEMA risk index table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NriRecord {
    pub fips: Fips,
    pub risk_score: f64,
    pub risk_rating: String,
}

/// One county polygon, geometry passed through untouched.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountyGeometry {
    pub fips: Fips,
    pub geometry: Value,
}

/// A row excluded from parsing output, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectedRow {
    pub line: u64,
    pub fips: Option<String>,
    pub column: String,
    pub raw: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct SviTable {
    pub rows: Vec<SviRow>,
    pub rejected: Vec<RejectedRow>,
}

#[derive(Debug, Clone, Default)]
pub struct IncomeTable {
    pub rows: Vec<IncomeRow>,
    pub rejected: Vec<RejectedRow>,
    /// State/national aggregate rows (FIPS ending "000") skipped by rule.
    pub aggregates_excluded: usize,
}

#[derive(Debug, Clone, Default)]
pub struct NriTable {
    pub records: Vec<NriRecord>,
    pub rejected: Vec<RejectedRow>,
}

/// FIPS present in exactly one join input, and filter entries that matched
/// no joined county.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct JoinDiagnostics {
    pub svi_only: Vec<Fips>,
    pub income_only: Vec<Fips>,
    pub filter_unmatched: Vec<Fips>,
}

const SENTINEL_REASON: &str = "missing sentinel";

struct TableReader<R: Read> {
    reader: csv::Reader<R>,
}

impl<R: Read> TableReader<R> {
    fn new(source: R, mapping: &SchemaMapping) -> Result<Self> {
        let reader = csv::ReaderBuilder::new()
            .delimiter(mapping.delimiter_byte()?)
            .has_headers(true)
            .flexible(true)
            .from_reader(source);
        Ok(TableReader { reader })
    }

    /// Resolve the given column names to header positions, in order.
    fn columns(&mut self, names: &[&str]) -> Result<Vec<usize>> {
        let headers = self.reader.headers()?.clone();
        names
            .iter()
            .map(|name| {
                headers
                    .iter()
                    .enumerate()
                    .position(|(i, h)| {
                        // The first header cell may carry a UTF-8 BOM.
                        let h = if i == 0 { h.trim_start_matches('\u{feff}') } else { h };
                        h.trim() == *name
                    })
                    .ok_or_else(|| Error::MissingColumn((*name).to_string()))
            })
            .collect()
    }
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, csv::Position::line)
}

fn cell<'r>(record: &'r csv::StringRecord, idx: usize, column: &str, line: u64) -> Result<&'r str> {
    record.get(idx).ok_or_else(|| Error::Parse {
        line,
        column: column.to_string(),
        raw: String::new(),
        reason: "cell missing from row".to_string(),
    })
}

fn parse_fips_cell(raw: &str, column: &str, line: u64) -> Result<Fips> {
    Fips::parse(raw).map_err(|reason| Error::Parse {
        line,
        column: column.to_string(),
        raw: raw.to_string(),
        reason,
    })
}

fn parse_f64_cell(raw: &str, column: &str, line: u64) -> Result<f64> {
    let value: f64 = raw.trim().parse().map_err(|_| Error::Parse {
        line,
        column: column.to_string(),
        raw: raw.to_string(),
        reason: "not a decimal number".to_string(),
    })?;
    if !value.is_finite() {
        return Err(Error::Parse {
            line,
            column: column.to_string(),
            raw: raw.to_string(),
            reason: "not a finite number".to_string(),
        });
    }
    Ok(value)
}

fn parse_population_cell(raw: &str, column: &str, line: u64) -> Result<u64> {
    let cleaned = raw.trim();
    if let Ok(v) = cleaned.parse::<u64>() {
        return Ok(v);
    }
    // Some exports render counts as decimals ("12345.0").
    let as_float = parse_f64_cell(cleaned, column, line)?;
    if as_float >= 0.0 && as_float.fract() == 0.0 && as_float <= u64::MAX as f64 {
        return Ok(as_float as u64);
    }
    Err(Error::Parse {
        line,
        column: column.to_string(),
        raw: raw.to_string(),
        reason: "population must be a non-negative integer".to_string(),
    })
}

fn check_duplicate(seen: &mut BTreeSet<Fips>, fips: &Fips) -> Result<()> {
    if !seen.insert(fips.clone()) {
        return Err(Error::DuplicateFips(fips.to_string()));
    }
    Ok(())
}

/// Parse the SVI table into partial county rows, rejecting sentinel-valued
/// rows with reasons. FIPS cells are zero-padded to five digits.
pub fn parse_svi_table<R: Read>(source: R, mapping: &SchemaMapping) -> Result<SviTable> {
    let mut table = TableReader::new(source, mapping)?;
    let cols = table.columns(&[
        &mapping.svi_columns.fips,
        &mapping.svi_columns.county_name,
        &mapping.svi_columns.state,
        &mapping.svi_columns.population,
        &mapping.svi_columns.svi,
    ])?;
    let [fips_col, name_col, state_col, pop_col, svi_col] = cols[..] else {
        unreachable!("columns() returns one index per requested name");
    };

    let mut rows = Vec::new();
    let mut rejected = Vec::new();
    let mut seen = BTreeSet::new();
    for record in table.reader.records() {
        let record = record?;
        let line = record_line(&record);

        let svi_raw = cell(&record, svi_col, &mapping.svi_columns.svi, line)?;
        let pop_raw = cell(&record, pop_col, &mapping.svi_columns.population, line)?;
        let sentinel = [
            (svi_raw, &mapping.svi_columns.svi),
            (pop_raw, &mapping.svi_columns.population),
        ]
        .into_iter()
        .find(|(raw, _)| mapping.is_sentinel(raw));
        if let Some((raw, column)) = sentinel {
            rejected.push(RejectedRow {
                line,
                fips: record.get(fips_col).map(|s| s.trim().to_string()),
                column: column.clone(),
                raw: raw.to_string(),
                reason: SENTINEL_REASON.to_string(),
            });
            continue;
        }

        let fips_raw = cell(&record, fips_col, &mapping.svi_columns.fips, line)?;
        let fips = parse_fips_cell(fips_raw, &mapping.svi_columns.fips, line)?;
        check_duplicate(&mut seen, &fips)?;

        let population = parse_population_cell(pop_raw, &mapping.svi_columns.population, line)?;
        let svi = parse_f64_cell(svi_raw, &mapping.svi_columns.svi, line)?;
        if !(0.0..=1.0).contains(&svi) {
            return Err(Error::Parse {
                line,
                column: mapping.svi_columns.svi.clone(),
                raw: svi_raw.to_string(),
                reason: "SVI must lie in [0,1]".to_string(),
            });
        }

        rows.push(SviRow {
            fips,
            name: cell(&record, name_col, &mapping.svi_columns.county_name, line)?
                .trim()
                .to_string(),
            state: cell(&record, state_col, &mapping.svi_columns.state, line)?
                .trim()
                .to_string(),
            population,
            svi,
        });
    }
    Ok(SviTable { rows, rejected })
}

/// Parse the per-capita income table. Thousands separators and surrounding
/// quotes are stripped; state/national aggregate rows (FIPS ending "000")
/// are excluded and counted.
pub fn parse_income_table<R: Read>(source: R, mapping: &SchemaMapping) -> Result<IncomeTable> {
    let mut table = TableReader::new(source, mapping)?;
    let cols = table.columns(&[&mapping.income_columns.fips, &mapping.income_columns.income])?;
    let [fips_col, income_col] = cols[..] else {
        unreachable!("columns() returns one index per requested name");
    };

    let mut rows = Vec::new();
    let mut rejected = Vec::new();
    let mut aggregates_excluded = 0usize;
    let mut seen = BTreeSet::new();
    for record in table.reader.records() {
        let record = record?;
        let line = record_line(&record);

        let fips_raw = cell(&record, fips_col, &mapping.income_columns.fips, line)?;
        let fips = parse_fips_cell(fips_raw, &mapping.income_columns.fips, line)?;
        if fips.is_aggregate() {
            aggregates_excluded += 1;
            continue;
        }

        let income_raw = cell(&record, income_col, &mapping.income_columns.income, line)?;
        if mapping.is_sentinel(income_raw) {
            rejected.push(RejectedRow {
                line,
                fips: Some(fips.to_string()),
                column: mapping.income_columns.income.clone(),
                raw: income_raw.to_string(),
                reason: SENTINEL_REASON.to_string(),
            });
            continue;
        }

        check_duplicate(&mut seen, &fips)?;

        let cleaned = income_raw.trim().trim_matches('"').replace(',', "");
        let income = parse_f64_cell(&cleaned, &mapping.income_columns.income, line)?;
        if income <= 0.0 {
            return Err(Error::Parse {
                line,
                column: mapping.income_columns.income.clone(),
                raw: income_raw.to_string(),
                reason: "income must be positive".to_string(),
            });
        }

        rows.push(IncomeRow { fips, income });
    }
    Ok(IncomeTable {
        rows,
        rejected,
        aggregates_excluded,
    })
}

/// Parse the FEMA risk index table: one record per county row.
pub fn parse_nri_table<R: Read>(source: R, mapping: &SchemaMapping) -> Result<NriTable> {
    let mut table = TableReader::new(source, mapping)?;
    let cols = table.columns(&[
        &mapping.nri_columns.fips,
        &mapping.nri_columns.risk_score,
        &mapping.nri_columns.risk_rating,
    ])?;
    let [fips_col, score_col, rating_col] = cols[..] else {
        unreachable!("columns() returns one index per requested name");
    };

    let mut records = Vec::new();
    let mut rejected = Vec::new();
    let mut seen = BTreeSet::new();
    for record in table.reader.records() {
        let record = record?;
        let line = record_line(&record);

        let fips_raw = cell(&record, fips_col, &mapping.nri_columns.fips, line)?;
        let fips = parse_fips_cell(fips_raw, &mapping.nri_columns.fips, line)?;

        let score_raw = cell(&record, score_col, &mapping.nri_columns.risk_score, line)?;
        if mapping.is_sentinel(score_raw) {
            rejected.push(RejectedRow {
                line,
                fips: Some(fips.to_string()),
                column: mapping.nri_columns.risk_score.clone(),
                raw: score_raw.to_string(),
                reason: SENTINEL_REASON.to_string(),
            });
            continue;
        }

        check_duplicate(&mut seen, &fips)?;

        let risk_score = parse_f64_cell(score_raw, &mapping.nri_columns.risk_score, line)?;
        if risk_score < 0.0 {
            return Err(Error::Parse {
                line,
                column: mapping.nri_columns.risk_score.clone(),
                raw: score_raw.to_string(),
                reason: "risk score must be non-negative".to_string(),
            });
        }

        records.push(NriRecord {
            fips,
            risk_score,
            risk_rating: cell(&record, rating_col, &mapping.nri_columns.risk_rating, line)?
                .trim()
                .to_string(),
        });
    }
    Ok(NriTable { records, rejected })
}

/// Parse a GeoJSON FeatureCollection into county geometries keyed by the
/// named FIPS property. Geometry values are retained verbatim for export.
pub fn parse_geometry<R: Read>(source: R, fips_property: &str) -> Result<Vec<CountyGeometry>> {
    let doc: Value = serde_json::from_reader(source)
        .map_err(|e| Error::InvalidGeoJson(e.to_string()))?;
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(Error::InvalidGeoJson(
            "document is not a FeatureCollection".to_string(),
        ));
    }
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::InvalidGeoJson("missing features array".to_string()))?;

    let mut geometries = Vec::with_capacity(features.len());
    let mut seen = BTreeSet::new();
    for (i, feature) in features.iter().enumerate() {
        if feature.get("type").and_then(Value::as_str) != Some("Feature") {
            return Err(Error::InvalidGeoJson(format!("features[{i}] is not a Feature")));
        }
        let raw_fips = feature
            .get("properties")
            .and_then(|p| p.get(fips_property))
            .ok_or_else(|| {
                Error::InvalidGeoJson(format!(
                    "features[{i}] lacks property `{fips_property}`"
                ))
            })?;
        let raw_fips = match raw_fips {
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            other => {
                return Err(Error::InvalidGeoJson(format!(
                    "features[{i}] property `{fips_property}` is {other}, expected string or number"
                )))
            }
        };
        let fips = Fips::parse(&raw_fips)
            .map_err(|reason| Error::InvalidGeoJson(format!("features[{i}]: {reason}")))?;

        let geometry = feature
            .get("geometry")
            .filter(|g| !g.is_null())
            .ok_or_else(|| Error::Geometry(format!("feature {fips} has no geometry")))?;
        match geometry.get("type").and_then(Value::as_str) {
            Some("Polygon") | Some("MultiPolygon") => {}
            Some(other) => {
                return Err(Error::Geometry(format!(
                    "feature {fips} has geometry type {other}, expected Polygon or MultiPolygon"
                )))
            }
            None => {
                return Err(Error::Geometry(format!(
                    "feature {fips} has no geometry type"
                )))
            }
        }

        if !seen.insert(fips.clone()) {
            return Err(Error::DuplicateFips(fips.to_string()));
        }
        geometries.push(CountyGeometry {
            fips,
            geometry: geometry.clone(),
        });
    }
    Ok(geometries)
}

/// Inner-join SVI and income rows on FIPS into canonical county records,
/// optionally restricted to a FIPS filter. Output is FIPS-ascending.
pub fn join_counties(
    svi_rows: &[SviRow],
    income_rows: &[IncomeRow],
    filter: Option<&[Fips]>,
) -> Result<(Vec<CountyRecord>, JoinDiagnostics)> {
    let svi_by_fips: BTreeMap<&Fips, &SviRow> =
        svi_rows.iter().map(|r| (&r.fips, r)).collect();
    let income_by_fips: BTreeMap<&Fips, &IncomeRow> =
        income_rows.iter().map(|r| (&r.fips, r)).collect();

    let mut diagnostics = JoinDiagnostics::default();
    let mut records = Vec::new();
    for (fips, svi_row) in &svi_by_fips {
        match income_by_fips.get(*fips) {
            Some(income_row) => records.push(CountyRecord {
                fips: (*fips).clone(),
                name: svi_row.name.clone(),
                state: svi_row.state.clone(),
                population: svi_row.population,
                income: income_row.income,
                svi: svi_row.svi,
            }),
            None => diagnostics.svi_only.push((*fips).clone()),
        }
    }
    diagnostics.income_only = income_by_fips
        .keys()
        .filter(|f| !svi_by_fips.contains_key(*f))
        .map(|f| (*f).clone())
        .collect();

    if let Some(filter) = filter {
        let wanted: BTreeSet<&Fips> = filter.iter().collect();
        let joined: BTreeSet<&Fips> = records.iter().map(|r| &r.fips).collect();
        diagnostics.filter_unmatched = wanted
            .iter()
            .filter(|f| !joined.contains(**f))
            .map(|f| (**f).clone())
            .collect();
        records.retain(|r| wanted.contains(&r.fips));
    }

    if records.is_empty() {
        return Err(Error::EmptyJoin);
    }
    Ok((records, diagnostics))
}

fn open_input(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

/// File-path convenience wrappers; all parsers also accept in-memory streams.
pub fn parse_svi_path(path: &Path, mapping: &SchemaMapping) -> Result<SviTable> {
    parse_svi_table(open_input(path)?, mapping)
}

pub fn parse_income_path(path: &Path, mapping: &SchemaMapping) -> Result<IncomeTable> {
    parse_income_table(open_input(path)?, mapping)
}

pub fn parse_nri_path(path: &Path, mapping: &SchemaMapping) -> Result<NriTable> {
    parse_nri_table(open_input(path)?, mapping)
}

pub fn parse_geometry_path(path: &Path, fips_property: &str) -> Result<Vec<CountyGeometry>> {
    parse_geometry(open_input(path)?, fips_property)
}
