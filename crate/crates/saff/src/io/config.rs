//! Run configuration: one JSON document; absent fields take the defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SaffError};
use crate::feedback::{FeedbackParams, InitMode};
use crate::learner::LearnerConfig;
use crate::metrics::{Attribute, GroupDefinitions};
use crate::sim::{BiasConfig, ExperimentGrid};

/// Grid section of the configuration, consumed by `simulate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub participant_counts: Vec<usize>,
    pub tuple_counts: Vec<usize>,
    pub pairs_per_tuple: usize,
    pub repetitions: usize,
    pub attribute: Attribute,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            participant_counts: vec![25, 50, 75, 100],
            tuple_counts: vec![5, 10, 15],
            pairs_per_tuple: 10,
            repetitions: 100,
            attribute: Attribute::Age,
        }
    }
}

/// Every knob of a run. Unknown fields are rejected; missing fields take the
/// defaults shown by `RunConfig::default()`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Logit-space spread of the intrinsic evaluation.
    pub sigma: f64,
    /// Softmax temperature.
    pub lambda: f64,
    /// Learning-rate of the projected-gradient loop.
    pub step_size: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Probability binarization threshold.
    pub threshold: f64,
    /// Attribute to learn for; `None` runs all three.
    pub attribute: Option<Attribute>,
    pub init_mode: InitMode,
    pub groups: GroupDefinitions,
    /// Synthetic-generator knobs, used by `simulate`.
    pub bias: BiasConfig,
    pub grid: GridConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            sigma: 1.0,
            lambda: 10.0,
            step_size: 0.1,
            epochs: 20,
            seed: 0,
            threshold: 0.5,
            attribute: None,
            init_mode: InitMode::Random,
            groups: GroupDefinitions::default(),
            bias: BiasConfig::default(),
            grid: GridConfig::default(),
        }
    }
}

impl RunConfig {
    /// Reads and validates a configuration file.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let raw = std::fs::read_to_string(path).map_err(|e| SaffError::io(path, e))?;
        let config: RunConfig = serde_json::from_str(&raw)
            .map_err(|e| SaffError::config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.feedback_params()?;
        if !self.step_size.is_finite() || self.step_size <= 0.0 {
            return Err(SaffError::config(format!(
                "step_size {} must be > 0",
                self.step_size
            )));
        }
        if self.epochs == 0 {
            return Err(SaffError::config("epochs must be >= 1".to_string()));
        }
        if !self.threshold.is_finite() || self.threshold <= 0.0 || self.threshold >= 1.0 {
            return Err(SaffError::config(format!(
                "threshold {} outside (0, 1)",
                self.threshold
            )));
        }
        self.bias
            .validate()
            .map_err(|e| SaffError::config(format!("bias: {e}")))?;
        if self.grid.participant_counts.is_empty() || self.grid.participant_counts.contains(&0) {
            return Err(SaffError::config(
                "grid.participant_counts must be positive".to_string(),
            ));
        }
        if self.grid.tuple_counts.is_empty() || self.grid.tuple_counts.contains(&0) {
            return Err(SaffError::config(
                "grid.tuple_counts must be positive".to_string(),
            ));
        }
        if self.grid.pairs_per_tuple < 2 {
            return Err(SaffError::config(
                "grid.pairs_per_tuple must be >= 2".to_string(),
            ));
        }
        if self.grid.repetitions == 0 {
            return Err(SaffError::config(
                "grid.repetitions must be >= 1".to_string(),
            ));
        }
        Ok(())
    }

    pub fn feedback_params(&self) -> Result<FeedbackParams> {
        FeedbackParams::new(self.sigma, self.lambda).map_err(|e| SaffError::config(e.to_string()))
    }

    pub fn learner_config(&self) -> Result<LearnerConfig> {
        Ok(LearnerConfig {
            step_size: self.step_size,
            epochs: self.epochs,
            init_mode: self.init_mode,
            seed: self.seed,
            params: self.feedback_params()?,
        })
    }

    /// Experiment grid assembled from the grid section and the shared knobs.
    pub fn experiment_grid(&self) -> Result<ExperimentGrid> {
        Ok(ExperimentGrid {
            participant_counts: self.grid.participant_counts.clone(),
            tuple_counts: self.grid.tuple_counts.clone(),
            pairs_per_tuple: self.grid.pairs_per_tuple,
            repetitions: self.grid.repetitions,
            attribute: self.grid.attribute,
            threshold: self.threshold,
            groups: self.groups,
            bias: self.bias,
            learner: self.learner_config()?,
            seed: self.seed,
        })
    }

    /// Attributes selected for learning: the configured one, or all three.
    pub fn selected_attributes(&self) -> Vec<Attribute> {
        match self.attribute {
            Some(attribute) => vec![attribute],
            None => Attribute::ALL.to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_yields_the_defaults() {
        let config: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(config, RunConfig::default());
        assert_eq!(config.sigma, 1.0);
        assert_eq!(config.lambda, 10.0);
        assert_eq!(config.step_size, 0.1);
        assert_eq!(config.epochs, 20);
        assert_eq!(config.threshold, 0.5);
        assert_eq!(config.grid.repetitions, 100);
        config.validate().unwrap();
    }

    #[test]
    fn partial_documents_override_only_their_fields() {
        let config: RunConfig =
            serde_json::from_str(r#"{"sigma": 0.5, "attribute": "race", "init_mode": "uniform"}"#)
                .unwrap();
        assert_eq!(config.sigma, 0.5);
        assert_eq!(config.attribute, Some(Attribute::Race));
        assert_eq!(config.init_mode, InitMode::Uniform);
        assert_eq!(config.lambda, 10.0);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"sgima": 0.5}"#).is_err());
    }

    #[test]
    fn invalid_numbers_fail_validation() {
        let config: RunConfig = serde_json::from_str(r#"{"sigma": -1.0}"#).unwrap();
        assert!(config.validate().is_err());
        let config: RunConfig = serde_json::from_str(r#"{"threshold": 1.5}"#).unwrap();
        assert!(config.validate().is_err());
        let config: RunConfig = serde_json::from_str(r#"{"epochs": 0}"#).unwrap();
        assert!(config.validate().is_err());
    }

    #[test]
    fn round_trips_through_json() {
        let config = RunConfig {
            sigma: 0.7,
            attribute: Some(Attribute::Gender),
            ..RunConfig::default()
        };
        let text = serde_json::to_string(&config).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(config, back);
    }
}
