//! Detection, semantic and efficiency metrics, and run-level aggregation.
//!
//! Detection matching is greedy per frame and class: detections are visited
//! by descending score (ties by input position) and each takes the unmatched
//! ground truth of highest IoU, provided that IoU is at least 0.5. AP is the
//! all-point interpolated area under the precision/recall curve.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{iou, Candidate, ClassId, ClassTable, FrameTrace, GroundTruthBox, SceneTruth};
use crate::router::FrameResult;

pub const MATCH_IOU: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("no ground truth boxes; AP and recall are undefined")]
    NoGroundTruth,
    #[error("{0}: empty input")]
    EmptyInput(&'static str),
    #[error("no trace record for frame `{0}`")]
    MissingTruth(String),
}

/// A detection attributed to a frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameDetection<'a> {
    pub frame_id: &'a str,
    pub candidate: Candidate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameGroundTruth<'a> {
    pub frame_id: &'a str,
    pub gt: GroundTruthBox,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApSummary {
    /// Only classes with at least one ground-truth box.
    pub per_class: BTreeMap<ClassId, f64>,
    pub map: f64,
}

fn by_score_desc(dets: &[FrameDetection<'_>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        dets[b]
            .candidate
            .score()
            .partial_cmp(&dets[a].candidate.score())
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

/// Marks each detection as a true positive (matched) or not, by input index.
fn match_detections(dets: &[FrameDetection<'_>], gts: &[FrameGroundTruth<'_>]) -> Vec<bool> {
    let mut groups: HashMap<(&str, ClassId), Vec<usize>> = HashMap::new();
    for (i, g) in gts.iter().enumerate() {
        groups
            .entry((g.frame_id, g.gt.class_id))
            .or_default()
            .push(i);
    }
    let mut taken = vec![false; gts.len()];
    let mut tp = vec![false; dets.len()];
    for di in by_score_desc(dets) {
        let d = &dets[di];
        let Some(group) = groups.get(&(d.frame_id, d.candidate.class_id)) else {
            continue;
        };
        let mut best: Option<(usize, f64)> = None;
        for &gi in group {
            if taken[gi] {
                continue;
            }
            let overlap = iou(&d.candidate.bbox, &gts[gi].gt.bbox);
            if overlap >= MATCH_IOU && best.is_none_or(|(_, b)| overlap > b) {
                best = Some((gi, overlap));
            }
        }
        if let Some((gi, _)) = best {
            taken[gi] = true;
            tp[di] = true;
        }
    }
    tp
}

/// All-point interpolated AP from true-positive flags already in rank order.
fn average_precision(ranked_tp: &[bool], positives: usize) -> f64 {
    if positives == 0 {
        return 0.0;
    }
    let mut precision = Vec::with_capacity(ranked_tp.len());
    let mut recall = Vec::with_capacity(ranked_tp.len());
    let mut tp = 0usize;
    for (k, &hit) in ranked_tp.iter().enumerate() {
        tp += usize::from(hit);
        precision.push(tp as f64 / (k + 1) as f64);
        recall.push(tp as f64 / positives as f64);
    }
    // Precision envelope, right to left.
    for k in (0..precision.len().saturating_sub(1)).rev() {
        precision[k] = precision[k].max(precision[k + 1]);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (p, r) in precision.iter().zip(&recall) {
        ap += (r - prev_recall) * p;
        prev_recall = *r;
    }
    ap
}

/// Per-class AP at IoU 0.5 and their unweighted mean.
pub fn ap50(
    dets: &[FrameDetection<'_>],
    gts: &[FrameGroundTruth<'_>],
) -> Result<ApSummary, MetricError> {
    if gts.is_empty() {
        return Err(MetricError::NoGroundTruth);
    }
    let tp = match_detections(dets, gts);
    let mut positives: BTreeMap<ClassId, usize> = BTreeMap::new();
    for g in gts {
        *positives.entry(g.gt.class_id).or_default() += 1;
    }
    let mut ranked: BTreeMap<ClassId, Vec<bool>> = BTreeMap::new();
    for di in by_score_desc(dets) {
        ranked
            .entry(dets[di].candidate.class_id)
            .or_default()
            .push(tp[di]);
    }
    let per_class: BTreeMap<ClassId, f64> = positives
        .iter()
        .map(|(&class, &n)| {
            let flags = ranked.get(&class).map(Vec::as_slice).unwrap_or(&[]);
            (class, average_precision(flags, n))
        })
        .collect();
    let map = per_class.values().sum::<f64>() / per_class.len() as f64;
    Ok(ApSummary { per_class, map })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionCounts {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub recall: f64,
    /// 0 when there are no detections.
    pub precision: f64,
    /// 0 when precision and recall are both 0.
    pub f1: f64,
}

/// Counts under the AP matching rule, keeping detections scoring at least
/// `score_threshold`.
pub fn recall_f1(
    dets: &[FrameDetection<'_>],
    gts: &[FrameGroundTruth<'_>],
    score_threshold: f64,
) -> Result<DetectionCounts, MetricError> {
    if gts.is_empty() {
        return Err(MetricError::NoGroundTruth);
    }
    let kept: Vec<FrameDetection<'_>> = dets
        .iter()
        .filter(|d| d.candidate.score() >= score_threshold)
        .copied()
        .collect();
    let tp_flags = match_detections(&kept, gts);
    let tp = tp_flags.iter().filter(|&&t| t).count();
    let fp = kept.len() - tp;
    let fn_ = gts.len() - tp;
    let recall = tp as f64 / gts.len() as f64;
    let precision = if kept.is_empty() {
        0.0
    } else {
        tp as f64 / kept.len() as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(DetectionCounts {
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
        recall,
        precision,
        f1,
    })
}

/// Mean squared error of (predicted, true) brightness pairs.
pub fn brightness_mse(pairs: &[(f64, f64)]) -> Result<f64, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::EmptyInput("brightness_mse"));
    }
    let sum: f64 = pairs.iter().map(|(p, g)| (p - g).powi(2)).sum();
    Ok(sum / pairs.len() as f64)
}

/// Mean absolute error of (predicted, true) person counts.
pub fn count_mae(pairs: &[(u32, u32)]) -> Result<f64, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::EmptyInput("count_mae"));
    }
    let sum: u64 = pairs.iter().map(|&(p, g)| u64::from(p.abs_diff(g))).sum();
    Ok(sum as f64 / pairs.len() as f64)
}

/// Micro-averaged F1 over label instances pooled across frames.
pub fn scene_f1(pairs: &[(BTreeSet<String>, BTreeSet<String>)]) -> Result<f64, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::EmptyInput("scene_f1"));
    }
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (pred, truth) in pairs {
        let hits = pred.intersection(truth).count();
        tp += hits;
        fp += pred.len() - hits;
        fn_ += truth.len() - hits;
    }
    let denom = 2 * tp + fp + fn_;
    Ok(if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    })
}

/// Aggregated accuracy and efficiency of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub frame_count: usize,
    pub failed_frames: usize,
    /// Keyed by class name; classes without ground truth are absent.
    pub per_class_ap50: BTreeMap<String, f64>,
    pub map50: Option<f64>,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub f1: Option<f64>,
    pub metric_score_threshold: f64,
    pub brightness_mse: Option<f64>,
    pub count_mae: Option<f64>,
    pub scene_f1: Option<f64>,
    /// Frames whose semantics entered the semantic metrics.
    pub semantic_frames: usize,
    /// Frames left out of the semantic metrics (edge-only or non-compliant).
    pub semantic_excluded_frames: usize,
    pub cloud_queries: usize,
    pub compliance_rate: Option<f64>,
    pub latency_mean_ms: f64,
    pub latency_median_ms: f64,
    pub latency_p95_ms: f64,
    pub fps: Option<f64>,
    pub compute_total_gflops: f64,
    pub compute_per_frame_gflops: f64,
    pub cloud_route_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct FrameRecord {
    detections: Vec<Candidate>,
    ground_truth: Vec<GroundTruthBox>,
    scene_truth: SceneTruth,
    cloud_queried: bool,
    compliance_ok: bool,
    semantic: Option<(f64, u32, BTreeSet<String>)>,
    latency_ms: f64,
    compute_gflops: f64,
}

/// Per-frame partial results. Merging is a union over frame ids, and
/// [`RunPartial::finish`] canonicalizes order, so any merge order or tree
/// yields the identical report.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunPartial {
    frames: BTreeMap<String, FrameRecord>,
}

impl RunPartial {
    pub fn from_frame(result: &FrameResult, truth: &FrameTrace) -> Self {
        let semantic = result
            .semantic
            .as_ref()
            .map(|s| (s.brightness(), s.person_count(), s.scene_labels().clone()));
        let record = FrameRecord {
            detections: result.detections.clone(),
            ground_truth: truth.ground_truth.clone(),
            scene_truth: truth.scene_truth.clone(),
            cloud_queried: result.cloud_queried(),
            compliance_ok: result.compliance_ok,
            semantic,
            latency_ms: result.latency_ms(),
            compute_gflops: result.compute_gflops(),
        };
        Self {
            frames: BTreeMap::from([(result.frame_id.clone(), record)]),
        }
    }

    /// Union of two partials over disjoint frame sets.
    pub fn merge(mut self, other: RunPartial) -> RunPartial {
        debug_assert!(other.frames.keys().all(|k| !self.frames.contains_key(k)));
        self.frames.extend(other.frames);
        self
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn finish(
        &self,
        classes: &ClassTable,
        score_threshold: f64,
    ) -> Result<RunReport, MetricError> {
        let n = self.frames.len();
        if n == 0 {
            return Err(MetricError::EmptyInput("aggregate_run"));
        }
        let mut dets = Vec::new();
        let mut gts = Vec::new();
        let mut brightness = Vec::new();
        let mut counts = Vec::new();
        let mut labels = Vec::new();
        let mut latencies = Vec::with_capacity(n);
        let (mut cloud_queries, mut compliant, mut compute) = (0usize, 0usize, 0.0);
        for (id, f) in &self.frames {
            dets.extend(f.detections.iter().map(|&candidate| FrameDetection {
                frame_id: id,
                candidate,
            }));
            gts.extend(
                f.ground_truth
                    .iter()
                    .map(|&gt| FrameGroundTruth { frame_id: id, gt }),
            );
            if f.cloud_queried {
                cloud_queries += 1;
                compliant += usize::from(f.compliance_ok);
            }
            if let (true, Some((b, p, l))) = (f.cloud_queried && f.compliance_ok, &f.semantic) {
                brightness.push((*b, f.scene_truth.brightness));
                counts.push((*p, f.scene_truth.person_count));
                labels.push((l.clone(), f.scene_truth.scene_labels.clone()));
            }
            latencies.push(f.latency_ms);
            compute += f.compute_gflops;
        }

        let (per_class_ap50, map50) = match ap50(&dets, &gts) {
            Ok(ap) => (
                ap.per_class
                    .iter()
                    .map(|(id, v)| {
                        let name = classes
                            .name(*id)
                            .map(str::to_owned)
                            .unwrap_or_else(|| format!("class_{id}"));
                        (name, *v)
                    })
                    .collect(),
                Some(ap.map),
            ),
            Err(MetricError::NoGroundTruth) => (BTreeMap::new(), None),
            Err(e) => return Err(e),
        };
        let counts_det = recall_f1(&dets, &gts, score_threshold).ok();

        let latency_mean_ms = latencies.iter().sum::<f64>() / n as f64;
        let mut sorted = latencies.clone();
        sorted.sort_by(f64::total_cmp);
        let latency_median_ms = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
        };
        // Nearest rank.
        let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
        let latency_p95_ms = sorted[rank - 1];

        let semantic_frames = brightness.len();
        Ok(RunReport {
            frame_count: n,
            failed_frames: 0,
            per_class_ap50,
            map50,
            recall: counts_det.map(|c| c.recall),
            precision: counts_det.map(|c| c.precision),
            f1: counts_det.map(|c| c.f1),
            metric_score_threshold: score_threshold,
            brightness_mse: brightness_mse(&brightness).ok(),
            count_mae: count_mae(&counts).ok(),
            scene_f1: scene_f1(&labels).ok(),
            semantic_frames,
            semantic_excluded_frames: n - semantic_frames,
            cloud_queries,
            compliance_rate: (cloud_queries > 0).then(|| compliant as f64 / cloud_queries as f64),
            latency_mean_ms,
            latency_median_ms,
            latency_p95_ms,
            fps: (latency_mean_ms > 0.0).then(|| 1000.0 / latency_mean_ms),
            compute_total_gflops: compute,
            compute_per_frame_gflops: compute / n as f64,
            cloud_route_fraction: cloud_queries as f64 / n as f64,
        })
    }
}

/// Builds the run report from per-frame results and their trace records.
pub fn aggregate_run(
    results: &[FrameResult],
    frames: &[FrameTrace],
    classes: &ClassTable,
    score_threshold: f64,
) -> Result<RunReport, MetricError> {
    if results.is_empty() {
        return Err(MetricError::EmptyInput("aggregate_run"));
    }
    let truth: HashMap<&str, &FrameTrace> =
        frames.iter().map(|f| (f.frame_id.as_str(), f)).collect();
    let mut partial = RunPartial::default();
    for r in results {
        let t = truth
            .get(r.frame_id.as_str())
            .ok_or_else(|| MetricError::MissingTruth(r.frame_id.clone()))?;
        partial = partial.merge(RunPartial::from_frame(r, t));
    }
    partial.finish(classes, score_threshold)
}
