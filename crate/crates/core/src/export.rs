//! Deterministic emission of results: canonical CSV, choropleth-ready
//! GeoJSON, and the JSON comparison report.
//!
//! All numeric columns use the shortest decimal representation that parses
//! back to the same value, so re-running on identical inputs produces
//! byte-identical files and re-parsing recovers every number exactly.

use std::collections::BTreeMap;
use std::io::Write;

use serde_json::{json, Map, Value};

use crate::classify::ClassAssignment;
use crate::compare::ComparisonReport;
use crate::error::{Error, Result};
use crate::fips::Fips;
use crate::index::DriResult;
use crate::ingest::{CountyGeometry, CountyRecord};

pub const RESULTS_CSV_HEADER: [&str; 11] = [
    "fips",
    "name",
    "population",
    "income",
    "svi",
    "pop_norm",
    "income_norm_inverted",
    "dri",
    "dri_complement",
    "dri_class_index",
    "dri_class_label",
];

struct CountingWriter<W: Write> {
    inner: W,
    bytes: u64,
}

impl<W: Write> Write for CountingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let written = self.inner.write(buf)?;
        self.bytes += written as u64;
        Ok(written)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

/// Shortest round-trip decimal rendering.
fn decimal(value: f64) -> String {
    format!("{value}")
}

/// One fully joined output row.
struct ResultRow<'a> {
    record: &'a CountyRecord,
    result: &'a DriResult,
    assignment: &'a ClassAssignment,
}

fn joined_rows<'a>(
    records: &'a [CountyRecord],
    results: &'a [DriResult],
    assignments: &'a [ClassAssignment],
) -> Result<Vec<ResultRow<'a>>> {
    let record_by_fips: BTreeMap<&Fips, &CountyRecord> =
        records.iter().map(|r| (&r.fips, r)).collect();
    let assignment_by_fips: BTreeMap<&Fips, &ClassAssignment> =
        assignments.iter().map(|a| (&a.fips, a)).collect();
    results
        .iter()
        .map(|result| {
            let record = record_by_fips.get(&result.fips).ok_or_else(|| {
                Error::Inconsistent(format!("no county record for FIPS {}", result.fips))
            })?;
            let assignment = assignment_by_fips.get(&result.fips).ok_or_else(|| {
                Error::Inconsistent(format!("no class assignment for FIPS {}", result.fips))
            })?;
            Ok(ResultRow {
                record,
                result,
                assignment,
            })
        })
        .collect()
}

/// Write the canonical results CSV (UTF-8, LF line endings, quoting only
/// where required). Returns the byte count written.
pub fn write_results_csv<W: Write>(
    records: &[CountyRecord],
    results: &[DriResult],
    assignments: &[ClassAssignment],
    sink: W,
) -> Result<u64> {
    let rows = joined_rows(records, results, assignments)?;
    let counter = CountingWriter {
        inner: sink,
        bytes: 0,
    };
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(counter);

    writer.write_record(RESULTS_CSV_HEADER)?;
    for row in rows {
        writer.write_record([
            row.record.fips.as_str(),
            &row.record.name,
            &row.record.population.to_string(),
            &decimal(row.record.income),
            &decimal(row.record.svi),
            &decimal(row.result.pop_norm),
            &decimal(row.result.income_norm_inverted),
            &decimal(row.result.dri),
            &decimal(row.result.dri_complement),
            &row.assignment.class_index.to_string(),
            &row.assignment.class_label,
        ])?;
    }
    writer.flush()?;
    let counter = writer
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(counter.bytes)
}

fn number(value: f64) -> Result<Value> {
    serde_json::Number::from_f64(value)
        .map(Value::Number)
        .ok_or_else(|| Error::Inconsistent(format!("non-finite value {value} in output")))
}

fn feature_properties(row: &ResultRow<'_>) -> Result<Value> {
    let mut properties = Map::new();
    properties.insert("fips".into(), json!(row.record.fips.as_str()));
    properties.insert("name".into(), json!(row.record.name));
    properties.insert("population".into(), json!(row.record.population));
    properties.insert("income".into(), number(row.record.income)?);
    properties.insert("svi".into(), number(row.record.svi)?);
    properties.insert("pop_norm".into(), number(row.result.pop_norm)?);
    properties.insert(
        "income_norm_inverted".into(),
        number(row.result.income_norm_inverted)?,
    );
    properties.insert("dri".into(), number(row.result.dri)?);
    properties.insert("dri_complement".into(), number(row.result.dri_complement)?);
    properties.insert("dri_class_index".into(), json!(row.assignment.class_index));
    properties.insert("dri_class_label".into(), json!(row.assignment.class_label));
    Ok(Value::Object(properties))
}

/// Write a GeoJSON FeatureCollection carrying the full CSV property set per
/// county, features FIPS-ascending, geometry passed through untouched.
/// Counties without geometry are omitted and returned in the second slot.
pub fn write_geojson<W: Write>(
    records: &[CountyRecord],
    results: &[DriResult],
    assignments: &[ClassAssignment],
    geometries: &[CountyGeometry],
    sink: W,
) -> Result<(u64, Vec<Fips>)> {
    let rows = joined_rows(records, results, assignments)?;
    let geometry_by_fips: BTreeMap<&Fips, &CountyGeometry> =
        geometries.iter().map(|g| (&g.fips, g)).collect();

    let mut features = Vec::with_capacity(rows.len());
    let mut omitted = Vec::new();
    for row in &rows {
        match geometry_by_fips.get(&row.result.fips) {
            Some(geometry) => features.push(json!({
                "type": "Feature",
                "properties": feature_properties(row)?,
                "geometry": geometry.geometry,
            })),
            None => omitted.push(row.result.fips.clone()),
        }
    }
    let collection = json!({
        "type": "FeatureCollection",
        "features": features,
    });

    let mut counter = CountingWriter {
        inner: sink,
        bytes: 0,
    };
    serde_json::to_writer(&mut counter, &collection)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    counter.write_all(b"\n")?;
    counter.flush()?;
    Ok((counter.bytes, omitted))
}

/// Write the comparison report as stable-key-ordered JSON.
pub fn write_comparison_json<W: Write>(report: &ComparisonReport, sink: W) -> Result<u64> {
    let mut counter = CountingWriter {
        inner: sink,
        bytes: 0,
    };
    serde_json::to_writer_pretty(&mut counter, report)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    counter.write_all(b"\n")?;
    counter.flush()?;
    Ok(counter.bytes)
}
