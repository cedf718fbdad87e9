use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::harness::HarnessError;
use crate::mapping::StrategyToggles;
use crate::model::{ClassTable, CostModel, MappingParams, RoutingPolicy};
use crate::pipeline::PipelineOptions;
use crate::router::{ExecutionMode, FrameSettings};

/// One experiment configuration, read from TOML. Unknown keys are rejected
/// at every level and `seed` has no default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub mode: ExecutionMode,
    pub seed: u64,
    pub classes: Vec<String>,
    #[serde(default)]
    pub scene_vocabulary: Vec<String>,
    /// Trace path; relative paths resolve against the config file's directory.
    #[serde(default)]
    pub trace: Option<PathBuf>,
    /// Score cut applied before recall / precision / F1. Final detections
    /// have already passed their frame's operating threshold, so 0 reports
    /// at that operating point.
    #[serde(default)]
    pub metric_score_threshold: f64,
    #[serde(default)]
    pub mapping: MappingParams,
    #[serde(default)]
    pub routing: RoutingPolicy,
    #[serde(default)]
    pub cost: CostModel,
    #[serde(default)]
    pub pipeline: PipelineOptions,
    #[serde(default)]
    pub strategies: StrategyToggles,
}

impl ScenarioConfig {
    /// Defaults for everything but the mandatory fields.
    pub fn new<S: Into<String>>(seed: u64, classes: impl IntoIterator<Item = S>) -> Self {
        Self {
            mode: ExecutionMode::default(),
            seed,
            classes: classes.into_iter().map(Into::into).collect(),
            scene_vocabulary: Vec::new(),
            trace: None,
            metric_score_threshold: 0.0,
            mapping: MappingParams::default(),
            routing: RoutingPolicy::default(),
            cost: CostModel::default(),
            pipeline: PipelineOptions::default(),
            strategies: StrategyToggles::ALL,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let config: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_owned(),
            source,
        })?;
        let mut config = Self::from_toml_str(&text)?;
        if let (Some(trace), Some(dir)) = (&config.trace, path.parent()) {
            if trace.is_relative() {
                config.trace = Some(dir.join(trace));
            }
        }
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.class_table()?;
        self.mapping.validate()?;
        self.routing.validate()?;
        self.cost.validate()?;
        if !(self.pipeline.nms_iou > 0.0 && self.pipeline.nms_iou <= 1.0) {
            return Err(HarnessError::Config(format!(
                "pipeline.nms_iou = {} outside (0, 1]",
                self.pipeline.nms_iou
            )));
        }
        if !(0.0..=1.0).contains(&self.metric_score_threshold) {
            return Err(HarnessError::Config(format!(
                "metric_score_threshold = {} outside [0, 1]",
                self.metric_score_threshold
            )));
        }
        Ok(())
    }

    pub fn class_table(&self) -> Result<ClassTable, HarnessError> {
        Ok(ClassTable::new(self.classes.iter().cloned())?)
    }

    /// Cost model carrying the run seed.
    pub fn cost_model(&self) -> CostModel {
        CostModel {
            seed: self.seed,
            ..self.cost
        }
    }

    pub fn frame_settings<'a>(&self, classes: &'a ClassTable) -> FrameSettings<'a> {
        FrameSettings {
            classes,
            mapping: self.mapping,
            routing: self.routing,
            cost: self.cost_model(),
            pipeline: self.pipeline,
            strategies: self.strategies,
        }
    }
}
