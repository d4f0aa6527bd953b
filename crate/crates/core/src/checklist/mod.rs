//! CheckList-style behavioral testing.
//!
//! Three test types are supported:
//!
//! * **MFT**: every instance carries an expected label; it fails when the
//!   prediction differs.
//! * **INV**: a case is an original plus perturbations; a perturbed instance
//!   fails when its predicted label differs from the original's.
//! * **DIR**: like INV, but the positive-class confidence must move in the
//!   capability's direction. Moves within `tau` of the original count as
//!   "within tolerance" and pass.
//!
//! A case fails when any of its instances fails.

mod evaluate;
mod perturb;
mod suite;
mod template;

use serde::{Deserialize, Serialize};

use crate::Variant;

pub use evaluate::{case_results, evaluate_model};
pub use perturb::{perturb_add_phrase, perturb_change_names, perturb_change_neutral, perturb_replace_word};
pub use suite::{build_suite, capability_catalog, CapabilitySpec, NameLists, Suite, SuiteConfig, SuiteManifest};
pub use template::{expand_template, Template};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TestType {
    #[serde(rename = "MFT")]
    Mft,
    #[serde(rename = "INV")]
    Inv,
    #[serde(rename = "DIR")]
    Dir,
}

impl TestType {
    pub fn as_str(&self) -> &'static str {
        match self {
            TestType::Mft => "MFT",
            TestType::Inv => "INV",
            TestType::Dir => "DIR",
        }
    }
}

/// Expected movement of the positive-class confidence for a DIR capability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    PositiveUp,
    NegativeUp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Capability {
    pub name: String,
    pub test_type: TestType,
    pub n_cases: usize,
    pub m_instances: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
    /// Source instances that could not be perturbed (no name, no neutral word, ...).
    #[serde(default)]
    pub skipped: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notice: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Original,
    Perturbed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestInstance {
    pub instance_id: String,
    pub case_id: String,
    pub capability: String,
    pub text: String,
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_label: Option<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirMove {
    Up,
    Down,
    WithinTolerance,
}

/// Only the flags of the instance's test type are present.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalFlags {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mft_failed: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flipped: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir_direction: Option<DirMove>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir_failed: Option<bool>,
}

impl EvalFlags {
    pub fn failed(&self) -> bool {
        self.mft_failed.unwrap_or(false) || self.flipped.unwrap_or(false) || self.dir_failed.unwrap_or(false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub seed: u64,
    pub variant: Variant,
    pub instance_id: String,
    pub case_id: String,
    pub capability: String,
    pub pred: u8,
    pub confidence: f64,
    pub flags: EvalFlags,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseResult {
    pub case_id: String,
    pub capability: String,
    pub failed: bool,
    pub failing: Vec<String>,
}

/// `"Change Names"` -> `"change-names"`.
pub fn slug(name: &str) -> String {
    let mut out = String::new();
    for c in name.chars() {
        if c.is_alphanumeric() {
            out.extend(c.to_lowercase());
        } else if !out.ends_with('-') && !out.is_empty() {
            out.push('-');
        }
    }
    out.trim_end_matches('-').to_string()
}
