//! Trace-driven backends and the simulated latency / compute model.

mod store;
mod synth;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::model::CostModel;
use crate::router::{Route, RouteDecision};

pub use store::{DuplicateFrame, TraceStore};
pub use synth::{
    synth_trace, synth_trace_annotated, FrameKind, SynthError, SynthFrame, SynthSpec,
    SYNTH_SCENE_VOCABULARY,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    EdgeInfer,
    Uplink,
    CloudInfer,
    Downlink,
    Mapping,
    Jitter,
}

/// Which stages a frame pays for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostPath {
    EdgeOnly,
    /// Edge inference, then the cloud round trip and semantic mapping.
    CloudEnhanced,
    /// Cloud round trip and mapping without edge inference.
    CloudOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub latency_ms: f64,
    pub compute_gflops: f64,
    pub components: BTreeMap<Stage, f64>,
}

/// Cost of one frame on the path implied by its route.
pub fn account(route: &RouteDecision, cost: &CostModel, frame_id: &str) -> CostBreakdown {
    let path = match route.route {
        Route::EdgeOnly => CostPath::EdgeOnly,
        Route::CloudEnhanced => CostPath::CloudEnhanced,
    };
    account_path(path, cost, frame_id)
}

pub fn account_path(path: CostPath, cost: &CostModel, frame_id: &str) -> CostBreakdown {
    let mut components = BTreeMap::new();
    let mut compute_gflops = 0.0;
    if path != CostPath::CloudOnly {
        components.insert(Stage::EdgeInfer, cost.edge_latency_ms);
        compute_gflops += cost.edge_gflops;
    }
    if path != CostPath::EdgeOnly {
        let half_rtt = cost.network_rtt_ms / 2.0;
        components.insert(Stage::Uplink, half_rtt);
        components.insert(Stage::CloudInfer, cost.cloud_latency_ms);
        components.insert(Stage::Downlink, half_rtt);
        components.insert(Stage::Mapping, cost.mapping_overhead_ms);
        compute_gflops += cost.cloud_gflops;
    }
    if cost.jitter_sigma_ms > 0.0 {
        let base: f64 = components.values().sum();
        // Never drive the frame latency below zero.
        let jitter = jitter_ms(cost, frame_id).max(-base);
        components.insert(Stage::Jitter, jitter);
    }
    let latency_ms = components.values().sum();
    CostBreakdown {
        latency_ms,
        compute_gflops,
        components,
    }
}

/// Zero-mean Gaussian jitter keyed by `(seed, frame_id)`.
///
/// The generator is positioned by the key alone (ChaCha stream id), so the
/// value does not depend on how many frames were evaluated before, or where.
pub fn jitter_ms(cost: &CostModel, frame_id: &str) -> f64 {
    if cost.jitter_sigma_ms <= 0.0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cost.seed);
    rng.set_stream(frame_key(frame_id));
    Normal::new(0.0, cost.jitter_sigma_ms)
        .expect("sigma is finite and positive")
        .sample(&mut rng)
}

/// FNV-1a; stable across platforms and releases, unlike `DefaultHasher`.
pub(crate) fn frame_key(frame_id: &str) -> u64 {
    frame_id.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}
