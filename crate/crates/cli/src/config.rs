use std::path::PathBuf;

use asl_core::{ActorConfig, LineConfig, RolloutConfig};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: &str = "asl-metrics/1";

/// Everything that determines command outputs. Thread count and output
/// directory are deliberately absent.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentConfig {
    pub schema: &'static str,
    pub grid_size: u8,
    pub library_size: usize,
    pub seed: u64,
    pub rollout: RolloutConfig,
    pub rollout_subset: Option<usize>,
    pub train_actors: bool,
    pub actor_specs: usize,
    pub actor: ActorConfig,
    pub value_sufficiency_threshold: f64,
    pub line: LineConfig,
    #[serde(skip)]
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.grid_size < 2 {
            return Err(CliError::Usage("--grid-size must be at least 2".into()));
        }
        if self.library_size == 0 {
            return Err(CliError::Usage("--library-size must be positive".into()));
        }
        if self.rollout_subset == Some(0) {
            return Err(CliError::Usage("--rollout-subset must be positive".into()));
        }
        if !(self.value_sufficiency_threshold > 0.0 && self.value_sufficiency_threshold.is_finite()) {
            return Err(CliError::Usage("--threshold must be positive".into()));
        }
        self.rollout.validate()?;
        self.actor.validate()?;
        self.line.validate()?;
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serialises");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serialises");
        v["config_hash"] = serde_json::Value::String(self.hash());
        serde_json::to_string_pretty(&v).expect("json value serialises")
    }
}
