use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propagation::PropagationConfig;
use crate::segmentation::SegmentationConfig;
use crate::ssl::{KMeansConfig, LossConfig};
use crate::tokenizer::TokenizerConfig;

/// Every tunable of the pipeline in one document; missing sections and keys
/// take their defaults, unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub tokenizer: TokenizerConfig,
    pub segmentation: SegmentationConfig,
    pub kmeans: KMeansConfig,
    pub losses: LossConfig,
    pub propagation: PropagationConfig,
}

impl Config {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|source| Error::Json { path: path.to_path_buf(), source })
    }
}
