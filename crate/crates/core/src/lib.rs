//! Semantic-guided edge-cloud collaborative detection.
//!
//! An edge detector produces candidates for each frame. When their mean
//! confidence is low, a cloud model describes the frame in a structured
//! JSON contract, and that description is mapped into detector settings
//! (threshold, per-class weights, region gains) used to re-score the edge
//! candidates. Everything here runs on recorded or synthetic traces.

pub mod harness;
pub mod mapping;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod router;
pub mod semantic;
pub mod sim;

pub use harness::{run_ablation, run_scenario, HarnessError, ScenarioConfig};
pub use mapping::{derive_adjustment, rescore, StrategyToggles};
pub use metrics::{aggregate_run, RunReport};
pub use model::{
    BBox, Candidate, ClassId, ClassTable, CostModel, DetectorAdjustment, FrameTrace, MappingParams,
    RoutingPolicy, SemanticDescription,
};
pub use router::{process_frame, process_frame_in_mode, ExecutionMode, FrameResult, Route};
pub use semantic::{compliance_rate, parse_semantic_output};
