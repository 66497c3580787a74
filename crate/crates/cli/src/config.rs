//! Training configuration with JSON file + `--set key=value` overrides.
//!
//! Defaults encode the full training protocol, so `train` with no config
//! reproduces it: GCN mode, 50,000 iterations with 10-step gradient
//! accumulation, Adam at learning rate 0.001, dropout 0.5, 24 ray angles,
//! 32 samples at 0.1 mm along each ray, and 0.5 mm centerline resampling.

use serde::{Deserialize, Serialize};

use tubegcn_core::pipeline::SegmentOptions;
use tubegcn_core::trainer::{AdamParams, TrainConfig};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    pub mode: String,
    pub iterations: u64,
    pub accum_steps: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub average_accumulated: bool,
    pub seed: u64,
    pub checkpoint_every: u64,
    pub dropout_p: f64,
    pub n_angles: usize,
    pub n_samples: usize,
    pub step_mm: f64,
    pub resample_mm: f64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            mode: "gcn".to_string(),
            iterations: 50_000,
            accum_steps: 10,
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            average_accumulated: false,
            seed: 42,
            checkpoint_every: 5_000,
            dropout_p: 0.5,
            n_angles: 24,
            n_samples: 32,
            step_mm: 0.1,
            resample_mm: 0.5,
        }
    }
}

impl TrainSettings {
    /// Resolves settings: defaults, then the config file, then `--set` pairs.
    pub fn resolve(config_json: Option<&str>, sets: &[String]) -> Result<Self, CliError> {
        let mut value = match config_json {
            Some(text) => serde_json::from_str::<serde_json::Value>(text)
                .map_err(|e| CliError::Validation(format!("config file: {e}")))?,
            None => serde_json::json!({}),
        };
        let obj = value
            .as_object_mut()
            .ok_or_else(|| CliError::Validation("config must be a JSON object".into()))?;
        for pair in sets {
            let (key, raw) = pair.split_once('=').ok_or_else(|| {
                CliError::Validation(format!("--set expects key=value, got `{pair}`"))
            })?;
            let parsed = serde_json::from_str::<serde_json::Value>(raw)
                .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
            obj.insert(key.to_string(), parsed);
        }
        serde_json::from_value(value)
            .map_err(|e| CliError::Validation(format!("invalid training setting: {e}")))
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            iterations: self.iterations,
            accum_steps: self.accum_steps,
            seed: self.seed,
            checkpoint_every: self.checkpoint_every,
            average_accumulated: self.average_accumulated,
            adam: AdamParams {
                lr: self.learning_rate,
                beta1: self.beta1,
                beta2: self.beta2,
                eps: self.epsilon,
            },
        }
    }

    pub fn segment_options(&self) -> SegmentOptions {
        SegmentOptions {
            resample_mm: self.resample_mm,
            n_angles: self.n_angles,
            n_samples: self.n_samples,
            step_mm: self.step_mm,
        }
    }
}
