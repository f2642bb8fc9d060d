//! The corpus record shared by every stage of the pipeline.

use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Where a record's augmentation fields came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    #[default]
    Original,
    Synthesized,
}

/// One `<query, code>` pair plus its optional pseudo-code and style variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sample {
    pub id: String,
    pub language: String,
    pub query: String,
    pub code: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pseudo_code: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variants: Option<Vec<String>>,
    #[serde(default)]
    pub provenance: Provenance,
}

impl Sample {
    pub fn new(
        id: impl Into<String>,
        language: impl Into<String>,
        query: impl Into<String>,
        code: impl Into<String>,
    ) -> Self {
        Self {
            id: id.into(),
            language: language.into(),
            query: query.into(),
            code: code.into(),
            pseudo_code: None,
            variants: None,
            provenance: Provenance::Original,
        }
    }

    /// True once both synthesis products are present.
    pub fn is_populated(&self) -> bool {
        self.pseudo_code.is_some() && self.variants.as_ref().is_some_and(|v| !v.is_empty())
    }

    pub fn variant_count(&self) -> usize {
        self.variants.as_ref().map_or(0, Vec::len)
    }
}
