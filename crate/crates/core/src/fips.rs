use std::fmt;

use serde::{Deserialize, Serialize};

/// Five-digit county FIPS code (2-digit state + 3-digit county), zero-padded.
///
/// Source tables disagree on formatting: CDC/FEMA files carry 5-character
/// strings, while BEA GeoFIPS cells are often quoted, padded with spaces, or
/// exported numerically with the leading zero dropped. All of them normalize
/// through [`Fips::parse`] so joins key on one canonical form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Fips(String);

impl Fips {
    /// Normalize a raw cell into a 5-digit FIPS, zero-padding short numeric
    /// forms. Returns the rejection reason on failure.
    pub fn parse(raw: &str) -> Result<Self, String> {
        let cleaned = raw.trim().trim_matches('"').trim();
        if cleaned.is_empty() {
            return Err("empty FIPS cell".to_string());
        }
        if !cleaned.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("FIPS {cleaned:?} contains non-digit characters"));
        }
        if cleaned.len() > 5 {
            return Err(format!("FIPS {cleaned:?} has more than 5 digits"));
        }
        Ok(Fips(format!("{cleaned:0>5}")))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// State and national aggregate rows in BEA tables carry county code 000.
    pub fn is_aggregate(&self) -> bool {
        self.0.ends_with("000")
    }
}

impl fmt::Display for Fips {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for Fips {
    type Error = String;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Fips::parse(&value)
    }
}

impl From<Fips> for String {
    fn from(fips: Fips) -> Self {
        fips.0
    }
}
