use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::harness::{HarnessError, ScenarioConfig};
use crate::mapping::StrategyToggles;
use crate::metrics::{RunPartial, RunReport};
use crate::model::FrameTrace;
use crate::router::{process_frame_in_mode, ExecutionMode, FrameError, FrameResult};
use crate::sim::TraceStore;

/// Result of one run: the report, per-frame results in trace order, and
/// the frames that could not be processed.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub frames: Vec<FrameResult>,
    pub errors: Vec<FrameError>,
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, HarnessError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::Config(format!("worker pool: {e}")))
}

/// Runs every frame of the trace under `config`. Frames are processed on
/// `workers` threads; the report does not depend on the worker count. The
/// run fails only when no frame succeeds.
pub fn run_scenario(
    config: &ScenarioConfig,
    trace: &[FrameTrace],
    workers: usize,
) -> Result<RunOutcome, HarnessError> {
    config.validate()?;
    let store = TraceStore::new(trace.to_vec())?;
    run_on_store(config, &store, &pool(workers)?)
}

fn run_on_store(
    config: &ScenarioConfig,
    store: &TraceStore,
    pool: &rayon::ThreadPool,
) -> Result<RunOutcome, HarnessError> {
    let classes = config.class_table()?;
    let settings = config.frame_settings(&classes);
    let mode = config.mode;

    let results: Vec<Result<FrameResult, FrameError>> = pool.install(|| {
        store
            .frames()
            .par_iter()
            .map(|f| process_frame_in_mode(mode, &f.frame_id, store, store, &settings))
            .collect()
    });

    let mut frames = Vec::with_capacity(results.len());
    let mut errors = Vec::new();
    for r in results {
        match r {
            Ok(f) => frames.push(f),
            Err(e) => errors.push(e),
        }
    }
    if frames.is_empty() {
        return Err(HarnessError::AllFramesFailed(errors.len()));
    }

    let partial = pool.install(|| {
        frames
            .par_iter()
            .map(|r| {
                let truth = store.get(&r.frame_id).expect("result for a stored frame");
                RunPartial::from_frame(r, truth)
            })
            .reduce(RunPartial::default, RunPartial::merge)
    });
    let mut report = partial.finish(&classes, config.metric_score_threshold)?;
    report.failed_frames = errors.len();
    Ok(RunOutcome {
        report,
        frames,
        errors,
    })
}

#[derive(Debug, Clone)]
pub struct AblationRow {
    pub toggles: StrategyToggles,
    pub outcome: RunOutcome,
}

/// Edge-only baseline plus one run per strategy subset.
#[derive(Debug, Clone)]
pub struct AblationRun {
    pub baseline: RunOutcome,
    pub rows: Vec<AblationRow>,
}

/// Serializable summary of an ablation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub baseline: RunReport,
    pub rows: Vec<AblationEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationEntry {
    pub subset: String,
    pub threshold_adjust: bool,
    pub category_weight: bool,
    pub region_focus: bool,
    pub report: RunReport,
}

impl AblationRun {
    pub fn table(&self) -> AblationTable {
        AblationTable {
            baseline: self.baseline.report.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| AblationEntry {
                    subset: r.toggles.label(),
                    threshold_adjust: r.toggles.threshold_adjust,
                    category_weight: r.toggles.category_weight,
                    region_focus: r.toggles.region_focus,
                    report: r.outcome.report.clone(),
                })
                .collect(),
        }
    }

    pub fn row(&self, toggles: StrategyToggles) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.toggles == toggles)
    }
}

/// Runs the edge-only baseline and all eight strategy subsets in a fixed
/// order. Subset runs use the configured mode, except that an edge-only
/// config is ablated in collaborative mode since strategies never apply
/// to edge-only frames.
pub fn run_ablation(
    config: &ScenarioConfig,
    trace: &[FrameTrace],
    workers: usize,
) -> Result<AblationRun, HarnessError> {
    config.validate()?;
    let store = TraceStore::new(trace.to_vec())?;
    let pool = pool(workers)?;

    let baseline_config = ScenarioConfig {
        mode: ExecutionMode::EdgeOnly,
        ..config.clone()
    };
    let baseline = run_on_store(&baseline_config, &store, &pool)?;

    let subset_mode = match config.mode {
        ExecutionMode::EdgeOnly => ExecutionMode::Collaborative,
        m => m,
    };
    let mut rows = Vec::with_capacity(8);
    for toggles in StrategyToggles::all_subsets() {
        let c = ScenarioConfig {
            mode: subset_mode,
            strategies: toggles,
            ..config.clone()
        };
        rows.push(AblationRow {
            toggles,
            outcome: run_on_store(&c, &store, &pool)?,
        });
    }
    Ok(AblationRun { baseline, rows })
}

/// Problems in a trace that parsing alone does not catch.
pub fn check_trace(config: &ScenarioConfig, trace: &[FrameTrace]) -> Vec<String> {
    let mut problems = Vec::new();
    if trace.is_empty() {
        problems.push("trace has no frames".to_owned());
    }
    if !config.scene_vocabulary.is_empty() {
        for f in trace {
            for label in &f.scene_truth.scene_labels {
                if !config.scene_vocabulary.iter().any(|v| v == label) {
                    problems.push(format!(
                        "frame `{}`: scene label `{label}` not in scene_vocabulary",
                        f.frame_id
                    ));
                }
            }
        }
    }
    problems
}
