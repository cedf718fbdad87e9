//! Confidence-gated dispatch between the edge pipeline and cloud-enhanced
//! processing, and the per-frame orchestration that ties backends, mapping
//! and post-processing together.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mapping::{derive_adjustment_with, rescore, StrategyToggles};
use crate::model::{
    Candidate, ClassTable, CostModel, DetectorAdjustment, MappingParams, RoutingPolicy,
    SemanticDescription,
};
use crate::pipeline::{filter_by_threshold, fuse_cloud_boxes, nms, PipelineOptions};
use crate::semantic::{parse_semantic_output, ComplianceError};
use crate::sim::{account_path, CostBreakdown, CostPath};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("unknown frame `{0}`")]
    UnknownFrame(String),
}

/// Stands in for the on-device detector.
pub trait EdgeBackend: Sync {
    fn detect(&self, frame_id: &str) -> Result<Vec<Candidate>, BackendError>;
}

/// Stands in for the cloud multimodal model; returns its raw text output.
pub trait CloudBackend: Sync {
    fn describe(&self, frame_id: &str) -> Result<String, BackendError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("frame `{frame_id}`: {source}")]
pub struct FrameError {
    pub frame_id: String,
    pub source: BackendError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    EdgeOnly,
    CloudEnhanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RouteDecision {
    pub route: Route,
    pub mean_confidence: f64,
    pub n_candidates_considered: usize,
    /// Set when the route was imposed by the execution mode rather than by
    /// the confidence test.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub forced: bool,
}

impl RouteDecision {
    fn forced_cloud(mean_confidence: f64, n_candidates_considered: usize) -> Self {
        Self {
            route: Route::CloudEnhanced,
            mean_confidence,
            n_candidates_considered,
            forced: true,
        }
    }

    fn forced_edge(mean_confidence: f64, n_candidates_considered: usize) -> Self {
        Self {
            route: Route::EdgeOnly,
            mean_confidence,
            n_candidates_considered,
            forced: true,
        }
    }
}

/// Which system configuration processes the frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionMode {
    /// Edge detector alone at the baseline threshold.
    #[serde(alias = "edge")]
    EdgeOnly,
    /// Every frame goes to the cloud model.
    #[serde(alias = "cloud")]
    CloudOnly,
    /// Per-frame confidence routing.
    #[default]
    #[serde(alias = "collab")]
    Collaborative,
}

/// Everything a frame needs besides the backends.
#[derive(Debug, Clone, Copy)]
pub struct FrameSettings<'a> {
    pub classes: &'a ClassTable,
    pub mapping: MappingParams,
    pub routing: RoutingPolicy,
    pub cost: CostModel,
    pub pipeline: PipelineOptions,
    pub strategies: StrategyToggles,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    pub frame_id: String,
    pub route: RouteDecision,
    pub detections: Vec<Candidate>,
    pub adjustment_used: Option<DetectorAdjustment>,
    pub semantic: Option<SemanticDescription>,
    /// `false` only when the cloud was queried and its output failed to parse.
    pub compliance_ok: bool,
    pub compliance_error: Option<ComplianceError>,
    pub cost: CostBreakdown,
}

impl FrameResult {
    pub fn latency_ms(&self) -> f64 {
        self.cost.latency_ms
    }

    pub fn compute_gflops(&self) -> f64 {
        self.cost.compute_gflops
    }

    pub fn cloud_queried(&self) -> bool {
        self.route.route == Route::CloudEnhanced
    }
}

/// Mean score over candidates at or above `floor`; 0 when none qualify.
pub fn mean_confidence(candidates: &[Candidate], floor: f64) -> f64 {
    mean_confidence_counted(candidates, floor).0
}

fn mean_confidence_counted(candidates: &[Candidate], floor: f64) -> (f64, usize) {
    let (sum, n) = candidates
        .iter()
        .filter(|c| c.score() >= floor)
        .fold((0.0, 0usize), |(s, n), c| (s + c.score(), n + 1));
    if n == 0 {
        (0.0, 0)
    } else {
        ((sum / n as f64).min(1.0), n)
    }
}

/// Edge-only iff the mean confidence reaches the routing threshold.
pub fn route_decision(c_bar: f64, policy: &RoutingPolicy) -> RouteDecision {
    let route = if c_bar >= policy.tau_route {
        Route::EdgeOnly
    } else {
        Route::CloudEnhanced
    };
    RouteDecision {
        route,
        mean_confidence: c_bar,
        n_candidates_considered: 0,
        forced: false,
    }
}

/// Baseline edge post-processing: baseline weights, tau0 filter, NMS.
pub fn edge_pipeline(candidates: &[Candidate], settings: &FrameSettings<'_>) -> Vec<Candidate> {
    let baseline = DetectorAdjustment::baseline(&settings.mapping, settings.classes);
    let scored = rescore(candidates, &baseline);
    nms(
        &filter_by_threshold(&scored, baseline.tau_c),
        settings.pipeline.nms_iou,
    )
}

fn enhanced_pipeline(
    candidates: &[Candidate],
    desc: &SemanticDescription,
    settings: &FrameSettings<'_>,
) -> (Vec<Candidate>, DetectorAdjustment) {
    let adj = derive_adjustment_with(
        &settings.mapping,
        desc,
        settings.classes,
        settings.strategies,
        settings.pipeline.roi_mode,
    );
    let scored = rescore(candidates, &adj);
    let kept = nms(
        &filter_by_threshold(&scored, adj.tau_c),
        settings.pipeline.nms_iou,
    );
    let dets = match (settings.pipeline.fusion, desc.cloud_boxes()) {
        (true, Some(boxes)) => fuse_cloud_boxes(&kept, boxes, settings.pipeline.nms_iou),
        _ => kept,
    };
    (dets, adj)
}

fn frame_error(frame_id: &str) -> impl FnOnce(BackendError) -> FrameError + '_ {
    move |source| FrameError {
        frame_id: frame_id.to_owned(),
        source,
    }
}

/// Collaborative processing of one frame.
pub fn process_frame<E, C>(
    frame_id: &str,
    edge: &E,
    cloud: &C,
    settings: &FrameSettings<'_>,
) -> Result<FrameResult, FrameError>
where
    E: EdgeBackend + ?Sized,
    C: CloudBackend + ?Sized,
{
    process_frame_in_mode(
        ExecutionMode::Collaborative,
        frame_id,
        edge,
        cloud,
        settings,
    )
}

pub fn process_frame_in_mode<E, C>(
    mode: ExecutionMode,
    frame_id: &str,
    edge: &E,
    cloud: &C,
    settings: &FrameSettings<'_>,
) -> Result<FrameResult, FrameError>
where
    E: EdgeBackend + ?Sized,
    C: CloudBackend + ?Sized,
{
    // Pure cloud processing never runs the edge detector.
    if mode == ExecutionMode::CloudOnly && !settings.pipeline.fusion {
        return cloud_only_frame(frame_id, cloud, settings);
    }

    let candidates = edge.detect(frame_id).map_err(frame_error(frame_id))?;
    let (c_bar, considered) =
        mean_confidence_counted(&candidates, settings.routing.candidate_floor);
    let route = match mode {
        ExecutionMode::EdgeOnly => RouteDecision::forced_edge(c_bar, considered),
        ExecutionMode::CloudOnly => RouteDecision::forced_cloud(c_bar, considered),
        ExecutionMode::Collaborative => RouteDecision {
            n_candidates_considered: considered,
            ..route_decision(c_bar, &settings.routing)
        },
    };

    if route.route == Route::EdgeOnly {
        return Ok(FrameResult {
            frame_id: frame_id.to_owned(),
            route,
            detections: edge_pipeline(&candidates, settings),
            adjustment_used: None,
            semantic: None,
            compliance_ok: true,
            compliance_error: None,
            cost: account_path(CostPath::EdgeOnly, &settings.cost, frame_id),
        });
    }

    let text = cloud.describe(frame_id).map_err(frame_error(frame_id))?;
    let cost = account_path(CostPath::CloudEnhanced, &settings.cost, frame_id);
    let result = match parse_semantic_output(&text, settings.classes) {
        Ok(desc) => {
            let (detections, adj) = enhanced_pipeline(&candidates, &desc, settings);
            FrameResult {
                frame_id: frame_id.to_owned(),
                route,
                detections,
                adjustment_used: Some(adj),
                semantic: Some(desc),
                compliance_ok: true,
                compliance_error: None,
                cost,
            }
        }
        Err(err) => FrameResult {
            frame_id: frame_id.to_owned(),
            route,
            detections: edge_pipeline(&candidates, settings),
            adjustment_used: None,
            semantic: None,
            compliance_ok: false,
            compliance_error: Some(err),
            cost,
        },
    };
    Ok(result)
}

/// Cloud model alone: its own boxes, rescored by its own semantics.
fn cloud_only_frame<C: CloudBackend + ?Sized>(
    frame_id: &str,
    cloud: &C,
    settings: &FrameSettings<'_>,
) -> Result<FrameResult, FrameError> {
    let text = cloud.describe(frame_id).map_err(frame_error(frame_id))?;
    let route = RouteDecision::forced_cloud(0.0, 0);
    let cost = account_path(CostPath::CloudOnly, &settings.cost, frame_id);
    let result = match parse_semantic_output(&text, settings.classes) {
        Ok(desc) => {
            let boxes = desc.cloud_boxes().unwrap_or(&[]).to_vec();
            let (detections, adj) = enhanced_pipeline(
                &boxes,
                &desc,
                &FrameSettings {
                    pipeline: PipelineOptions {
                        fusion: false,
                        ..settings.pipeline
                    },
                    ..*settings
                },
            );
            FrameResult {
                frame_id: frame_id.to_owned(),
                route,
                detections,
                adjustment_used: Some(adj),
                semantic: Some(desc),
                compliance_ok: true,
                compliance_error: None,
                cost,
            }
        }
        Err(err) => FrameResult {
            frame_id: frame_id.to_owned(),
            route,
            detections: Vec::new(),
            adjustment_used: None,
            semantic: None,
            compliance_ok: false,
            compliance_error: Some(err),
            cost,
        },
    };
    Ok(result)
}
