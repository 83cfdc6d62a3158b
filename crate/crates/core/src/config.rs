//! Run configuration: schema mappings for the public input tables, index
//! parameters, and the JSON run-config consumed by the CLI and bindings.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fips::Fips;

/// The shipped default mapping targets the 2022 CDC SVI county table, the
/// BEA per-capita personal income county table (CAINC1, line 3), and the
/// FEMA NRI county table.
const DEFAULT_MAPPING_JSON: &str = include_str!("../data/default_schema_mapping.json");

/// Exact equal weight: each of the three terms contributes one third.
pub const EQUAL_WEIGHT: f64 = 1.0 / 3.0;

/// The two-decimal coefficient used in literal reproduction mode.
pub const LITERAL_WEIGHT: f64 = 0.33;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SviColumns {
    pub fips: String,
    pub county_name: String,
    pub state: String,
    pub population: String,
    pub svi: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IncomeColumns {
    pub fips: String,
    pub income: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NriColumns {
    pub fips: String,
    pub risk_score: String,
    pub risk_rating: String,
}

/// Maps canonical field names onto the column headers of a concrete input
/// vintage, so column renames between releases never touch the math.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemaMapping {
    #[serde(default = "default_svi_columns")]
    pub svi_columns: SviColumns,
    #[serde(default = "default_income_columns")]
    pub income_columns: IncomeColumns,
    #[serde(default = "default_nri_columns")]
    pub nri_columns: NriColumns,
    /// Cell values treated as missing data; rows carrying them are rejected
    /// with a reason instead of being parsed.
    #[serde(default = "default_sentinels")]
    pub missing_sentinels: Vec<String>,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
}

impl Default for SchemaMapping {
    fn default() -> Self {
        serde_json::from_str(DEFAULT_MAPPING_JSON)
            .expect("bundled default schema mapping must parse")
    }
}

fn default_svi_columns() -> SviColumns {
    SchemaMapping::default().svi_columns
}

fn default_income_columns() -> IncomeColumns {
    SchemaMapping::default().income_columns
}

fn default_nri_columns() -> NriColumns {
    SchemaMapping::default().nri_columns
}

fn default_sentinels() -> Vec<String> {
    vec!["-999".to_string()]
}

fn default_delimiter() -> char {
    ','
}

impl SchemaMapping {
    /// True when a raw cell matches a missing-data sentinel, either textually
    /// or numerically ("-999.0" matches sentinel "-999").
    pub fn is_sentinel(&self, raw: &str) -> bool {
        let cell = raw.trim();
        self.missing_sentinels.iter().any(|s| {
            s == cell
                || matches!(
                    (cell.parse::<f64>(), s.parse::<f64>()),
                    (Ok(a), Ok(b)) if a == b
                )
        })
    }

    pub fn delimiter_byte(&self) -> Result<u8> {
        u8::try_from(self.delimiter).map_err(|_| {
            Error::InvalidConfig(format!(
                "delimiter {:?} is not a single-byte character",
                self.delimiter
            ))
        })
    }

    pub fn validate(&self) -> Result<()> {
        let columns = [
            &self.svi_columns.fips,
            &self.svi_columns.county_name,
            &self.svi_columns.state,
            &self.svi_columns.population,
            &self.svi_columns.svi,
            &self.income_columns.fips,
            &self.income_columns.income,
            &self.nri_columns.fips,
            &self.nri_columns.risk_score,
            &self.nri_columns.risk_rating,
        ];
        if columns.iter().any(|c| c.trim().is_empty()) {
            return Err(Error::InvalidConfig(
                "schema mapping contains an empty column name".to_string(),
            ));
        }
        self.delimiter_byte()?;
        Ok(())
    }
}

/// Which counties define the min/max normalization bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationDomain {
    /// Bounds come from every joined county (the stated definition).
    #[default]
    FullDataset,
    /// Bounds come from the analysis subset only (sensitivity mode).
    AnalysisSubset,
}

/// Resolved index parameters used by the scoring engine.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndexConfig {
    /// Common coefficient applied to all three terms.
    pub weight: f64,
    /// Number of ordered classes for quantile classification.
    pub class_count: usize,
    pub normalization_domain: NormalizationDomain,
    /// Counties the analysis is restricted to; empty means no restriction.
    pub analysis_fips: Vec<Fips>,
}

impl Default for IndexConfig {
    fn default() -> Self {
        IndexConfig {
            weight: EQUAL_WEIGHT,
            class_count: 5,
            normalization_domain: NormalizationDomain::FullDataset,
            analysis_fips: Vec::new(),
        }
    }
}

impl IndexConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.weight.is_finite() && self.weight > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "weight must be a positive finite number, got {}",
                self.weight
            )));
        }
        if self.class_count < 2 {
            return Err(Error::InvalidK(self.class_count));
        }
        if self.normalization_domain == NormalizationDomain::AnalysisSubset
            && self.analysis_fips.is_empty()
        {
            return Err(Error::InvalidConfig(
                "analysis-subset normalization requires a non-empty analysis_fips list"
                    .to_string(),
            ));
        }
        Ok(())
    }
}

/// Index options as they appear in the run-config file. `weight` is optional
/// so the literal-coefficient flag can supply it when unset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndexSettings {
    #[serde(default)]
    pub weight: Option<f64>,
    #[serde(default = "default_class_count")]
    pub class_count: usize,
    #[serde(default)]
    pub normalization_domain: NormalizationDomain,
    #[serde(default)]
    pub analysis_fips: Vec<Fips>,
}

impl Default for IndexSettings {
    fn default() -> Self {
        IndexSettings {
            weight: None,
            class_count: default_class_count(),
            normalization_domain: NormalizationDomain::default(),
            analysis_fips: Vec::new(),
        }
    }
}

fn default_class_count() -> usize {
    5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputPaths {
    pub svi: PathBuf,
    pub income: PathBuf,
    #[serde(default)]
    pub nri: Option<PathBuf>,
    #[serde(default)]
    pub geometry: Option<PathBuf>,
}

/// One run, fully described: input paths, schema mapping, index parameters,
/// and output destination. Paths are resolved relative to the working
/// directory of the invocation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub inputs: InputPaths,
    #[serde(default)]
    pub schema: SchemaMapping,
    /// Path to a standalone JSON schema-mapping file; when set it replaces
    /// `schema` at load time, so one mapping can serve many run configs.
    #[serde(default)]
    pub schema_path: Option<PathBuf>,
    #[serde(default)]
    pub index: IndexSettings,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Minimum absolute class gap for a county to appear in the divergence
    /// list of the comparison report.
    #[serde(default = "default_divergence_threshold")]
    pub divergence_threshold: usize,
    /// Use the literal 0.33 coefficient instead of exact 1/3.
    #[serde(default)]
    pub paper_literal: bool,
    /// GeoJSON feature property holding the county FIPS.
    #[serde(default = "default_fips_property")]
    pub fips_property: String,
    /// Mapping from published NRI rating strings to class indices 1..k.
    #[serde(default = "default_rating_classes")]
    pub nri_rating_classes: BTreeMap<String, usize>,
    /// Ordered class labels, lowest class first. Defaults to the five-level
    /// vocabulary when class_count is 5; required for any other count.
    #[serde(default)]
    pub class_labels: Option<Vec<String>>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_divergence_threshold() -> usize {
    2
}

fn default_fips_property() -> String {
    "GEOID".to_string()
}

fn default_rating_classes() -> BTreeMap<String, usize> {
    [
        ("Very Low", 1),
        ("Relatively Low", 2),
        ("Relatively Moderate", 3),
        ("Relatively High", 4),
        ("Very High", 5),
    ]
    .into_iter()
    .map(|(name, class)| (name.to_string(), class))
    .collect()
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let raw = fs::read_to_string(path).map_err(|e| {
            Error::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {e}", path.display()),
            ))
        })?;
        let mut config: RunConfig = serde_json::from_str(&raw)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        if let Some(schema_path) = &config.schema_path {
            let raw = fs::read_to_string(schema_path).map_err(|e| {
                Error::Io(std::io::Error::new(
                    e.kind(),
                    format!("{}: {e}", schema_path.display()),
                ))
            })?;
            config.schema = serde_json::from_str(&raw)
                .map_err(|e| Error::InvalidConfig(format!("{}: {e}", schema_path.display())))?;
        }
        Ok(config)
    }

    /// Resolve the effective index parameters. An explicit weight wins over
    /// the literal-coefficient flag, which wins over the exact default.
    pub fn index_config(&self) -> IndexConfig {
        let weight = self.index.weight.unwrap_or(if self.paper_literal {
            LITERAL_WEIGHT
        } else {
            EQUAL_WEIGHT
        });
        IndexConfig {
            weight,
            class_count: self.index.class_count,
            normalization_domain: self.index.normalization_domain,
            analysis_fips: self.index.analysis_fips.clone(),
        }
    }

    /// Ordered class labels for the configured class count.
    pub fn resolved_class_labels(&self) -> Result<Vec<String>> {
        match &self.class_labels {
            Some(labels) => {
                if labels.len() != self.index.class_count {
                    return Err(Error::LabelMismatch {
                        expected: self.index.class_count,
                        got: labels.len(),
                    });
                }
                Ok(labels.clone())
            }
            None if self.index.class_count == crate::classify::FIVE_CLASS_LABELS.len() => {
                Ok(crate::classify::FIVE_CLASS_LABELS
                    .iter()
                    .map(|s| s.to_string())
                    .collect())
            }
            None => Err(Error::InvalidConfig(format!(
                "class_labels must be provided for class_count {}",
                self.index.class_count
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.schema.validate()?;
        self.index_config().validate()?;
        self.resolved_class_labels()?;
        if self.divergence_threshold < 1 {
            return Err(Error::InvalidConfig(
                "divergence_threshold must be at least 1".to_string(),
            ));
        }
        if self.fips_property.trim().is_empty() {
            return Err(Error::InvalidConfig(
                "fips_property must not be empty".to_string(),
            ));
        }
        Ok(())
    }
}
