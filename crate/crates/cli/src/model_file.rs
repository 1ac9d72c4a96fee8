//! Versioned JSON model document.

use std::path::Path;

use sacsp_core::algorithms::{AlgoTag, SacspConfig};
use sacsp_core::classify::SacspModel;
use sacsp_core::preprocess::PreprocessConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const FORMAT: &str = "sacsp-model";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub algo: AlgoTag,
    pub preprocess: PreprocessConfig,
    pub sacsp: SacspConfig,
    pub model: SacspModel,
}

impl ModelFile {
    pub fn new(algo: AlgoTag, preprocess: PreprocessConfig, sacsp: SacspConfig, model: SacspModel) -> Self {
        Self {
            format: FORMAT.into(),
            version: VERSION,
            algo,
            preprocess,
            sacsp,
            model,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let m: ModelFile = serde_path_to_error::deserialize(de).map_err(|e| format!("{}: {}", e.path(), e.inner()))?;
        if m.format != FORMAT || m.version != VERSION {
            return Err(format!(
                "unsupported model document {:?} version {} (expected {FORMAT:?} version {VERSION})",
                m.format, m.version
            ));
        }
        if m.model.lda.weights.len() != m.model.bank.pairs.len() {
            return Err("classifier dimension does not match the filter count".into());
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.to_json()).map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| CliError::io(path, e))
    }
}
