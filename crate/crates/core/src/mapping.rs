//! Semantic-to-parameter mapping: turns a scene description into a dynamic
//! threshold, per-class weights and region gains, and applies them to raw
//! candidate scores.

use serde::{Deserialize, Serialize};

use crate::model::{
    BBox, Candidate, ClassId, ClassTable, DetectorAdjustment, MappingParams, RoiMode,
    SemanticDescription,
};

/// Which mapping strategies are active. A disabled strategy is replaced by
/// its identity: tau_c becomes tau0, every weight becomes omega0, gamma becomes 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StrategyToggles {
    pub threshold_adjust: bool,
    pub category_weight: bool,
    pub region_focus: bool,
}

impl Default for StrategyToggles {
    fn default() -> Self {
        Self::ALL
    }
}

impl StrategyToggles {
    pub const ALL: Self = Self {
        threshold_adjust: true,
        category_weight: true,
        region_focus: true,
    };
    pub const NONE: Self = Self {
        threshold_adjust: false,
        category_weight: false,
        region_focus: false,
    };

    /// All eight subsets: empty set, singletons, pairs, full set.
    pub fn all_subsets() -> [Self; 8] {
        let s = |t, c, r| Self {
            threshold_adjust: t,
            category_weight: c,
            region_focus: r,
        };
        [
            s(false, false, false),
            s(true, false, false),
            s(false, true, false),
            s(false, false, true),
            s(true, true, false),
            s(true, false, true),
            s(false, true, true),
            s(true, true, true),
        ]
    }

    /// `+`-joined names of the enabled strategies, `none` for the empty set.
    pub fn label(&self) -> String {
        let names: Vec<&str> = [
            (self.threshold_adjust, "threshold_adjust"),
            (self.category_weight, "category_weight"),
            (self.region_focus, "region_focus"),
        ]
        .into_iter()
        .filter_map(|(on, name)| on.then_some(name))
        .collect();
        if names.is_empty() {
            "none".to_owned()
        } else {
            names.join("+")
        }
    }
}

/// Dynamic classification threshold from brightness and occlusion,
/// clamped to `[tau_min, tau0]`.
pub fn adjust_threshold(params: &MappingParams, brightness: f64, occlusion: f64) -> f64 {
    let raw = params.tau0 - params.alpha1 * (1.0 - brightness) - params.alpha2 * occlusion;
    raw.clamp(params.tau_min, params.tau0)
}

/// Adaptive weight for one class. The crowd indicator fires only when the
/// person count strictly exceeds `p_th`.
pub fn category_weight(
    params: &MappingParams,
    _class_id: ClassId,
    person_count: u32,
    occlusion: f64,
    prior: f64,
) -> f64 {
    let crowded = if person_count > params.p_th { 1.0 } else { 0.0 };
    params.omega0 + params.beta1 * crowded + params.beta2 * occlusion + params.beta3 * prior
}

/// Returns exactly `gamma` when the candidate counts as inside any region, else exactly 1.
pub fn region_gain(candidate: &BBox, rois: &[BBox], gamma: f64, rho_overlap: f64) -> f64 {
    region_gain_with(candidate, rois, gamma, rho_overlap, RoiMode::Overlap)
}

pub fn region_gain_with(
    candidate: &BBox,
    rois: &[BBox],
    gamma: f64,
    rho_overlap: f64,
    mode: RoiMode,
) -> f64 {
    let inside = match mode {
        RoiMode::Overlap => {
            let area = candidate.area();
            let best = rois
                .iter()
                .map(|r| candidate.intersection_area(r) / area)
                .fold(f64::NEG_INFINITY, f64::max);
            best >= rho_overlap
        }
        RoiMode::CenterPoint => {
            let (cx, cy) = candidate.center();
            rois.iter().any(|r| r.contains_point(cx, cy))
        }
    };
    if inside {
        gamma
    } else {
        1.0
    }
}

/// Full adjustment with every strategy enabled.
pub fn derive_adjustment(
    params: &MappingParams,
    desc: &SemanticDescription,
    classes: &ClassTable,
) -> DetectorAdjustment {
    derive_adjustment_with(
        params,
        desc,
        classes,
        StrategyToggles::ALL,
        RoiMode::Overlap,
    )
}

pub fn derive_adjustment_with(
    params: &MappingParams,
    desc: &SemanticDescription,
    classes: &ClassTable,
    toggles: StrategyToggles,
    roi_mode: RoiMode,
) -> DetectorAdjustment {
    let tau_c = if toggles.threshold_adjust {
        adjust_threshold(params, desc.brightness(), desc.occlusion())
    } else {
        params.tau0
    };
    let class_weights = classes
        .ids()
        .map(|id| {
            if toggles.category_weight {
                category_weight(
                    params,
                    id,
                    desc.person_count(),
                    desc.occlusion(),
                    desc.prior_of(id),
                )
            } else {
                params.omega0
            }
        })
        .collect();
    DetectorAdjustment {
        tau_c,
        class_weights,
        rois: desc.rois().to_vec(),
        gamma: if toggles.region_focus {
            params.gamma
        } else {
            1.0
        },
        rho_overlap: params.rho_overlap,
        roi_mode,
    }
}

/// Multiplies each score by its class weight and region gain, saturating at 1.
pub fn rescore(candidates: &[Candidate], adj: &DetectorAdjustment) -> Vec<Candidate> {
    candidates
        .iter()
        .map(|c| {
            let gain = if adj.gamma == 1.0 || adj.rois.is_empty() {
                1.0
            } else {
                region_gain_with(&c.bbox, &adj.rois, adj.gamma, adj.rho_overlap, adj.roi_mode)
            };
            let score = (c.score() * adj.weight(c.class_id) * gain).min(1.0);
            c.with_score(score)
        })
        .collect()
}
