//! Run manifest: enough provenance (config echo, input digests, counts,
//! diagnostics) to establish that identical inputs and configuration yield
//! byte-identical data outputs. The timestamp lives only here, never in the
//! data files.

use std::fs::File;
use std::io;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{IndexConfig, NormalizationDomain};
use crate::error::Result;
use crate::fips::Fips;
use crate::index::ClampEvent;
use crate::ingest::RejectedRow;

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub weight: f64,
    pub class_count: usize,
    pub normalization_domain: NormalizationDomain,
    pub analysis_fips: Vec<Fips>,
    pub divergence_threshold: usize,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct RunCounts {
    pub svi_rows: usize,
    pub svi_rejected: usize,
    pub income_rows: usize,
    pub income_rejected: usize,
    pub income_aggregates_excluded: usize,
    pub nri_rows: Option<usize>,
    pub geometries: Option<usize>,
    pub joined_counties: usize,
    pub results: usize,
    pub geojson_features: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct DiagnosticsSummary {
    pub svi_rejected: Vec<RejectedRow>,
    pub income_rejected: Vec<RejectedRow>,
    pub nri_rejected: Vec<RejectedRow>,
    pub svi_only: Vec<Fips>,
    pub income_only: Vec<Fips>,
    pub unknown_analysis_fips: Vec<Fips>,
    pub clamped: Vec<ClampEvent>,
    pub geometry_omitted: Vec<Fips>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    /// RFC 3339 UTC; excluded from all digest-stable outputs.
    pub generated_at: String,
    pub config: ConfigEcho,
    pub inputs: Vec<InputDigest>,
    pub counts: RunCounts,
    pub diagnostics: DiagnosticsSummary,
}

impl RunManifest {
    pub fn new(
        index_config: &IndexConfig,
        divergence_threshold: usize,
        inputs: Vec<InputDigest>,
        counts: RunCounts,
        diagnostics: DiagnosticsSummary,
    ) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            generated_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            config: ConfigEcho {
                weight: index_config.weight,
                class_count: index_config.class_count,
                normalization_domain: index_config.normalization_domain,
                analysis_fips: index_config.analysis_fips.clone(),
                divergence_threshold,
            },
            inputs,
            counts,
            diagnostics,
        }
    }

    pub fn to_json_bytes(&self) -> Result<Vec<u8>> {
        let mut bytes = serde_json::to_vec_pretty(self)
            .map_err(|e| crate::error::Error::Io(io::Error::other(e)))?;
        bytes.push(b'\n');
        Ok(bytes)
    }
}

/// SHA-256 of a file's content, as (hex digest, byte length).
pub fn digest_file(path: &Path) -> Result<InputDigest> {
    use io::Read;

    let mut file = File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buffer = [0u8; 64 * 1024];
    let mut bytes = 0u64;
    loop {
        let read = file.read(&mut buffer)?;
        if read == 0 {
            break;
        }
        hasher.update(&buffer[..read]);
        bytes += read as u64;
    }
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    Ok(InputDigest {
        role: String::new(),
        path: path.display().to_string(),
        sha256: hex,
        bytes,
    })
}
