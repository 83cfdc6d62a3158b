//! County-level disaster resilience index toolkit.
//!
//! Ingests the public SVI, per-capita income, and FEMA risk index county
//! tables plus county geometry, computes a composite resilience score per
//! county (`weight * (pop_norm + (1 - income_norm) + svi)` over min-max
//! normalized inputs), classifies counties into equal-quantile classes,
//! compares the ranking against the FEMA National Risk Index, and emits
//! deterministic CSV / GeoJSON / JSON report outputs.

pub mod classify;
pub mod compare;
pub mod config;
pub mod error;
pub mod export;
pub mod fips;
pub mod index;
pub mod ingest;
pub mod manifest;
pub mod pipeline;

pub use classify::{classify as classify_values, quantile_breaks, ClassAssignment};
pub use compare::{spearman, ComparisonReport};
pub use config::{IndexConfig, NormalizationDomain, RunConfig, SchemaMapping};
pub use error::{Error, Result};
pub use fips::Fips;
pub use index::{build_context, compute_all, compute_dri, min_max_normalize, DriResult};
pub use ingest::{CountyRecord, NriRecord};
