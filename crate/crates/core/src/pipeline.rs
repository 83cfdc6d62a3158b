//! End-to-end orchestration: parse and join the configured inputs, compute
//! scores, classify, compare, and write output files.
//!
//! Output files are staged in memory and written through a temp-file rename,
//! with everything written so far removed on failure, so a failed run never
//! leaves a partially written output behind. The manifest is written last.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::classify::{classify, ClassAssignment};
use crate::compare::{build_report, ComparisonReport};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::export::{write_comparison_json, write_geojson, write_results_csv};
use crate::fips::Fips;
use crate::index::{compute_all, ComputeOutput};
use crate::ingest::{
    join_counties, parse_geometry_path, parse_income_path, parse_nri_path, parse_svi_path,
    CountyGeometry, CountyRecord, IncomeTable, JoinDiagnostics, NriTable, SviTable,
};
use crate::manifest::{digest_file, DiagnosticsSummary, RunCounts, RunManifest};

pub const RESULTS_CSV_NAME: &str = "results.csv";
pub const RESULTS_GEOJSON_NAME: &str = "results.geojson";
pub const COMPARISON_JSON_NAME: &str = "comparison.json";
pub const MANIFEST_NAME: &str = "manifest.json";

/// All parsed inputs plus the joined county records.
pub struct LoadedInputs {
    pub svi: SviTable,
    pub income: IncomeTable,
    pub nri: Option<NriTable>,
    pub geometry: Option<Vec<CountyGeometry>>,
    pub records: Vec<CountyRecord>,
    pub join: JoinDiagnostics,
}

pub fn load_inputs(config: &RunConfig) -> Result<LoadedInputs> {
    config.validate()?;
    let svi = parse_svi_path(&config.inputs.svi, &config.schema)?;
    let income = parse_income_path(&config.inputs.income, &config.schema)?;
    let nri = config
        .inputs
        .nri
        .as_deref()
        .map(|path| parse_nri_path(path, &config.schema))
        .transpose()?;
    let geometry = config
        .inputs
        .geometry
        .as_deref()
        .map(|path| parse_geometry_path(path, &config.fips_property))
        .transpose()?;
    let (records, join) = join_counties(&svi.rows, &income.rows, None)?;
    log::info!(
        "loaded {} SVI rows, {} income rows, joined {} counties",
        svi.rows.len(),
        income.rows.len(),
        records.len()
    );
    Ok(LoadedInputs {
        svi,
        income,
        nri,
        geometry,
        records,
        join,
    })
}

/// What `validate` saw: rejected rows, join coverage, and configuration
/// problems that do not prevent parsing.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub svi_rows: usize,
    pub income_rows: usize,
    pub nri_rows: Option<usize>,
    pub geometries: Option<usize>,
    pub joined_counties: usize,
    pub rejected_rows: usize,
    pub rejected_details: Vec<String>,
    pub income_aggregates_excluded: usize,
    pub svi_only: Vec<Fips>,
    pub income_only: Vec<Fips>,
    pub unknown_analysis_fips: Vec<Fips>,
    pub missing_geometry: Vec<Fips>,
}

impl ValidationReport {
    /// Count of findings that warrant attention (exit code 2).
    pub fn findings(&self) -> usize {
        self.rejected_rows
            + self.svi_only.len()
            + self.income_only.len()
            + self.unknown_analysis_fips.len()
            + self.missing_geometry.len()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "svi rows: {}", self.svi_rows)?;
        writeln!(f, "income rows: {}", self.income_rows)?;
        if let Some(n) = self.nri_rows {
            writeln!(f, "nri rows: {n}")?;
        }
        if let Some(n) = self.geometries {
            writeln!(f, "geometries: {n}")?;
        }
        writeln!(f, "joined counties: {}", self.joined_counties)?;
        writeln!(
            f,
            "income aggregate rows excluded: {}",
            self.income_aggregates_excluded
        )?;
        writeln!(f, "{} rejected rows", self.rejected_rows)?;
        for detail in &self.rejected_details {
            writeln!(f, "  rejected: {detail}")?;
        }
        if !self.svi_only.is_empty() {
            writeln!(f, "svi-only FIPS: {}", join_fips(&self.svi_only))?;
        }
        if !self.income_only.is_empty() {
            writeln!(f, "income-only FIPS: {}", join_fips(&self.income_only))?;
        }
        if !self.unknown_analysis_fips.is_empty() {
            writeln!(
                f,
                "analysis FIPS not in data: {}",
                join_fips(&self.unknown_analysis_fips)
            )?;
        }
        if !self.missing_geometry.is_empty() {
            writeln!(
                f,
                "joined counties without geometry: {}",
                join_fips(&self.missing_geometry)
            )?;
        }
        write!(f, "findings: {}", self.findings())
    }
}

fn join_fips(fips: &[Fips]) -> String {
    fips.iter()
        .map(Fips::as_str)
        .collect::<Vec<_>>()
        .join(", ")
}

fn rejected_detail(table: &str, row: &crate::ingest::RejectedRow) -> String {
    format!(
        "{table} line {}: column `{}` value {:?} ({}{})",
        row.line,
        row.column,
        row.raw,
        row.reason,
        row.fips
            .as_deref()
            .map(|f| format!(", FIPS {f}"))
            .unwrap_or_default(),
    )
}

/// Parse all configured inputs and report diagnostics without writing
/// anything.
pub fn run_validate(config: &RunConfig) -> Result<ValidationReport> {
    let loaded = load_inputs(config)?;
    let index_config = config.index_config();

    let known: std::collections::BTreeSet<&Fips> =
        loaded.records.iter().map(|r| &r.fips).collect();
    let unknown_analysis_fips: Vec<Fips> = index_config
        .analysis_fips
        .iter()
        .filter(|f| !known.contains(f))
        .cloned()
        .collect();

    let missing_geometry: Vec<Fips> = match &loaded.geometry {
        Some(geometries) => {
            let have: std::collections::BTreeSet<&Fips> =
                geometries.iter().map(|g| &g.fips).collect();
            loaded
                .records
                .iter()
                .map(|r| &r.fips)
                .filter(|f| !have.contains(*f))
                .cloned()
                .collect()
        }
        None => Vec::new(),
    };

    let mut rejected_details = Vec::new();
    for row in &loaded.svi.rejected {
        rejected_details.push(rejected_detail("svi", row));
    }
    for row in &loaded.income.rejected {
        rejected_details.push(rejected_detail("income", row));
    }
    if let Some(nri) = &loaded.nri {
        for row in &nri.rejected {
            rejected_details.push(rejected_detail("nri", row));
        }
    }

    Ok(ValidationReport {
        svi_rows: loaded.svi.rows.len(),
        income_rows: loaded.income.rows.len(),
        nri_rows: loaded.nri.as_ref().map(|t| t.records.len()),
        geometries: loaded.geometry.as_ref().map(Vec::len),
        joined_counties: loaded.records.len(),
        rejected_rows: rejected_details.len(),
        rejected_details,
        income_aggregates_excluded: loaded.income.aggregates_excluded,
        svi_only: loaded.join.svi_only.clone(),
        income_only: loaded.join.income_only.clone(),
        unknown_analysis_fips,
        missing_geometry,
    })
}

/// Computed per-county output, before rendering.
pub struct ComputedRun {
    pub loaded: LoadedInputs,
    pub output: ComputeOutput,
    pub assignments: Vec<ClassAssignment>,
}

pub fn compute_run(config: &RunConfig) -> Result<ComputedRun> {
    let loaded = load_inputs(config)?;
    let index_config = config.index_config();
    let output = compute_all(&loaded.records, &index_config)?;
    let labels = config.resolved_class_labels()?;
    let values: BTreeMap<Fips, f64> = output
        .results
        .iter()
        .map(|r| (r.fips.clone(), r.dri))
        .collect();
    let assignments = classify(&values, index_config.class_count, &labels)?;
    Ok(ComputedRun {
        loaded,
        output,
        assignments,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ComputeSummary {
    pub results: usize,
    pub written: Vec<PathBuf>,
    pub geojson_features: Option<usize>,
    pub geometry_omitted: Vec<Fips>,
}

/// Full pipeline: compute, render, and write results CSV, GeoJSON (when
/// geometry is configured), and the manifest, in that order.
pub fn run_compute(config: &RunConfig) -> Result<ComputeSummary> {
    let run = compute_run(config)?;
    let index_config = config.index_config();

    let mut csv_bytes = Vec::new();
    write_results_csv(
        &run.loaded.records,
        &run.output.results,
        &run.assignments,
        &mut csv_bytes,
    )?;

    let mut geojson: Option<(Vec<u8>, Vec<Fips>, usize)> = None;
    if let Some(geometries) = &run.loaded.geometry {
        let mut bytes = Vec::new();
        let (_, omitted) = write_geojson(
            &run.loaded.records,
            &run.output.results,
            &run.assignments,
            geometries,
            &mut bytes,
        )?;
        let features = run.output.results.len() - omitted.len();
        geojson = Some((bytes, omitted, features));
    }

    let mut inputs = Vec::new();
    for (role, path) in [
        ("svi", Some(&config.inputs.svi)),
        ("income", Some(&config.inputs.income)),
        ("nri", config.inputs.nri.as_ref()),
        ("geometry", config.inputs.geometry.as_ref()),
    ] {
        if let Some(path) = path {
            let mut digest = digest_file(path)?;
            digest.role = role.to_string();
            inputs.push(digest);
        }
    }

    let geometry_omitted = geojson
        .as_ref()
        .map(|(_, omitted, _)| omitted.clone())
        .unwrap_or_default();
    let manifest = RunManifest::new(
        &index_config,
        config.divergence_threshold,
        inputs,
        RunCounts {
            svi_rows: run.loaded.svi.rows.len(),
            svi_rejected: run.loaded.svi.rejected.len(),
            income_rows: run.loaded.income.rows.len(),
            income_rejected: run.loaded.income.rejected.len(),
            income_aggregates_excluded: run.loaded.income.aggregates_excluded,
            nri_rows: run.loaded.nri.as_ref().map(|t| t.records.len()),
            geometries: run.loaded.geometry.as_ref().map(Vec::len),
            joined_counties: run.loaded.records.len(),
            results: run.output.results.len(),
            geojson_features: geojson.as_ref().map(|(_, _, features)| *features),
        },
        DiagnosticsSummary {
            svi_rejected: run.loaded.svi.rejected.clone(),
            income_rejected: run.loaded.income.rejected.clone(),
            nri_rejected: run
                .loaded
                .nri
                .as_ref()
                .map(|t| t.rejected.clone())
                .unwrap_or_default(),
            svi_only: run.loaded.join.svi_only.clone(),
            income_only: run.loaded.join.income_only.clone(),
            unknown_analysis_fips: run.output.diagnostics.unknown_fips.clone(),
            clamped: run.output.diagnostics.clamped.clone(),
            geometry_omitted: geometry_omitted.clone(),
        },
    );
    let manifest_bytes = manifest.to_json_bytes()?;

    // Everything rendered; now touch the filesystem. Manifest goes last.
    let mut staged: Vec<(PathBuf, Vec<u8>)> = Vec::new();
    staged.push((config.output_dir.join(RESULTS_CSV_NAME), csv_bytes));
    if let Some((bytes, _, _)) = &geojson {
        staged.push((config.output_dir.join(RESULTS_GEOJSON_NAME), bytes.clone()));
    }
    staged.push((config.output_dir.join(MANIFEST_NAME), manifest_bytes));
    let written = write_all_or_clean_up(&config.output_dir, staged)?;

    Ok(ComputeSummary {
        results: run.output.results.len(),
        written,
        geojson_features: geojson.as_ref().map(|(_, _, features)| *features),
        geometry_omitted,
    })
}

/// Compute, compare against the configured NRI input, and write the
/// comparison report.
pub fn run_compare(config: &RunConfig) -> Result<(ComparisonReport, PathBuf)> {
    if config.inputs.nri.is_none() {
        return Err(Error::InvalidConfig(
            "compare requires an nri input path".to_string(),
        ));
    }
    let run = compute_run(config)?;
    let nri = run
        .loaded
        .nri
        .as_ref()
        .expect("nri presence checked above");
    let labels = config.resolved_class_labels()?;
    let report = build_report(
        &run.output.results,
        &run.assignments,
        &nri.records,
        config.index_config().class_count,
        &labels,
        &config.nri_rating_classes,
        config.divergence_threshold,
    )?;

    let mut bytes = Vec::new();
    write_comparison_json(&report, &mut bytes)?;
    let path = config.output_dir.join(COMPARISON_JSON_NAME);
    let written = write_all_or_clean_up(&config.output_dir, vec![(path.clone(), bytes)])?;
    debug_assert_eq!(written.len(), 1);
    Ok((report, path))
}

/// Write every (path, bytes) pair via temp-file rename. On any failure,
/// remove whatever this call already wrote and return the error.
fn write_all_or_clean_up(
    output_dir: &Path,
    staged: Vec<(PathBuf, Vec<u8>)>,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(output_dir)?;
    let mut written: Vec<PathBuf> = Vec::new();
    for (path, bytes) in staged {
        if let Err(error) = write_atomic(&path, &bytes) {
            for done in &written {
                let _ = fs::remove_file(done);
            }
            return Err(error);
        }
        written.push(path);
    }
    Ok(written)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::InvalidConfig(format!("bad output path {}", path.display())))?;
    let tmp = path.with_file_name(format!("{file_name}.tmp"));
    let result = fs::write(&tmp, bytes).and_then(|()| fs::rename(&tmp, path));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(Error::Io)
}
