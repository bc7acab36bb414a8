use serde::{Deserialize, Serialize};

use crate::limit::SolveOptions;
use crate::model::{AssignMode, ModelFile, ModelSpec};
use crate::sim::Anchor;
use crate::tagged::TaggedOptions;

use super::StudyConfig;

/// A tagged particle request: the particle of type `type_index` starting
/// nearest to `y`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TagSpec {
    pub y: f64,
    #[serde(rename = "type", default)]
    pub type_index: usize,
}

/// 17 equally spaced times on `[0, T]`.
pub fn default_snap_times(horizon: f64) -> Vec<f64> {
    (0..=16).map(|i| horizon * i as f64 / 16.0).collect()
}

/// Boundary anchors at `0, T/4, T/2` and initial anchors at `1/4, 1/2, 3/4`.
pub fn default_anchors(horizon: f64) -> Vec<Anchor> {
    vec![
        Anchor::new(0.0, 0.0),
        Anchor::new(0.0, horizon / 4.0),
        Anchor::new(0.0, horizon / 2.0),
        Anchor::new(0.25, 0.0),
        Anchor::new(0.5, 0.0),
        Anchor::new(0.75, 0.0),
    ]
}

pub fn default_tags() -> Vec<TagSpec> {
    [0.1, 0.5, 0.9].map(|y| TagSpec { y, type_index: 0 }).to_vec()
}

/// The on-disk experiment file: `{model, simulate, solve, study}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelFile,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub solve: SolveOptions,
    #[serde(default)]
    pub study: StudySection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub n: usize,
    pub seed: u64,
    pub assign: AssignMode,
    /// Defaults to the model horizon.
    pub horizon: Option<f64>,
    pub snap_times: Option<Vec<f64>>,
    pub anchors: Option<Vec<Anchor>>,
    pub tags: Option<Vec<TagSpec>>,
    pub tagged_steps: usize,
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection {
            n: 1000,
            seed: 0,
            assign: AssignMode::Quantile,
            horizon: None,
            snap_times: None,
            anchors: None,
            tags: None,
            tagged_steps: TaggedOptions::default().steps,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudySection {
    pub n_list: Vec<usize>,
    pub seeds: Vec<u64>,
    pub assign: AssignMode,
    pub snap_times: Option<Vec<f64>>,
    pub anchors: Option<Vec<Anchor>>,
    pub tags: Option<Vec<TagSpec>>,
    pub tagged_steps: usize,
}

impl Default for StudySection {
    fn default() -> Self {
        StudySection {
            n_list: vec![500, 5000, 50000],
            seeds: (0..20).collect(),
            assign: AssignMode::Quantile,
            snap_times: None,
            anchors: None,
            tags: None,
            tagged_steps: TaggedOptions::default().steps,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> serde_json::Result<ExperimentConfig> {
        serde_json::from_str(text)
    }

    /// Simulation horizon, snapshot times, anchors and tags with defaults
    /// filled in.
    pub fn simulate_plan(&self) -> (f64, Vec<f64>, Vec<Anchor>, Vec<TagSpec>) {
        let s = &self.simulate;
        let horizon = s.horizon.unwrap_or(self.model.horizon);
        (
            horizon,
            s.snap_times.clone().unwrap_or_else(|| default_snap_times(horizon)),
            s.anchors.clone().unwrap_or_else(|| default_anchors(horizon)),
            s.tags.clone().unwrap_or_else(default_tags),
        )
    }

    /// The study described by the `study` and `solve` sections.
    pub fn study_config(&self, model: ModelSpec) -> StudyConfig {
        let s = &self.study;
        let horizon = model.horizon;
        StudyConfig {
            solve: self.solve.clone(),
            n_list: s.n_list.clone(),
            seeds: s.seeds.clone(),
            assign: s.assign,
            snap_times: s.snap_times.clone().unwrap_or_else(|| default_snap_times(horizon)),
            anchors: s.anchors.clone().unwrap_or_else(|| default_anchors(horizon)),
            tags: s.tags.clone().unwrap_or_else(default_tags),
            tagged: TaggedOptions { steps: s.tagged_steps },
            exec: self.solve.exec,
            model,
        }
    }
}
