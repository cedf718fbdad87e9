//! Post-processing of candidates into final detections.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::model::{iou, Candidate, RoiMode};

pub const DEFAULT_NMS_IOU: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineOptions {
    pub nms_iou: f64,
    /// Merge the cloud model's own boxes into the final detections.
    pub fusion: bool,
    pub roi_mode: RoiMode,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            nms_iou: DEFAULT_NMS_IOU,
            fusion: false,
            roi_mode: RoiMode::Overlap,
        }
    }
}

/// Keeps candidates scoring at least `tau_c`, in input order.
pub fn filter_by_threshold(candidates: &[Candidate], tau_c: f64) -> Vec<Candidate> {
    candidates
        .iter()
        .filter(|c| c.score() >= tau_c)
        .copied()
        .collect()
}

/// Class-aware greedy non-maximum suppression.
///
/// Candidates are visited by descending score, ties by input position. A box
/// survives iff its IoU with every kept box of the same class is below
/// `iou_threshold`. Output is in visit order.
pub fn nms(candidates: &[Candidate], iou_threshold: f64) -> Vec<Candidate> {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        candidates[b]
            .score()
            .partial_cmp(&candidates[a].score())
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut kept: Vec<Candidate> = Vec::with_capacity(candidates.len());
    for i in order {
        let c = &candidates[i];
        let suppressed = kept
            .iter()
            .any(|k| k.class_id == c.class_id && iou(&k.bbox, &c.bbox) >= iou_threshold);
        if !suppressed {
            kept.push(*c);
        }
    }
    kept
}

/// NMS over edge detections followed by cloud boxes; at equal score the edge
/// copy is visited first and wins.
pub fn fuse_cloud_boxes(
    edge_dets: &[Candidate],
    cloud_boxes: &[Candidate],
    iou_threshold: f64,
) -> Vec<Candidate> {
    let union: Vec<Candidate> = edge_dets.iter().chain(cloud_boxes).copied().collect();
    nms(&union, iou_threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BBox, ClassId};
    use proptest::prelude::*;

    fn cand(x: f64, class: u32, score: f64) -> Candidate {
        Candidate::new(
            BBox::new(x, 0.1, x + 0.2, 0.3).unwrap(),
            ClassId(class),
            score,
        )
        .unwrap()
    }

    #[test]
    fn threshold_filter_examples() {
        let cs = vec![cand(0.1, 0, 0.9), cand(0.3, 0, 0.35), cand(0.5, 0, 0.2)];
        assert_eq!(filter_by_threshold(&cs, 0.0), cs);
        assert_eq!(filter_by_threshold(&cs, 0.35), cs[..2].to_vec());
        assert!(filter_by_threshold(&[], 0.5).is_empty());
    }

    #[test]
    fn nms_examples() {
        let one = vec![cand(0.1, 0, 0.4)];
        assert_eq!(nms(&one, 0.5), one);

        let same = vec![cand(0.1, 0, 0.8), cand(0.1, 0, 0.9)];
        assert_eq!(nms(&same, 0.5), vec![same[1]]);

        let cross = vec![cand(0.1, 0, 0.8), cand(0.1, 1, 0.9)];
        assert_eq!(nms(&cross, 0.5).len(), 2);
    }

    #[test]
    fn nms_ties_break_by_input_index() {
        let a = cand(0.1, 0, 0.7);
        let b = Candidate::new(BBox::new(0.11, 0.1, 0.31, 0.3).unwrap(), ClassId(0), 0.7).unwrap();
        assert_eq!(nms(&[a, b], 0.5), vec![a]);
        assert_eq!(nms(&[b, a], 0.5), vec![b]);
    }

    #[test]
    fn fusion_examples() {
        let edge = vec![cand(0.1, 0, 0.6)];
        assert_eq!(fuse_cloud_boxes(&edge, &[], 0.5), nms(&edge, 0.5));
        let far = vec![cand(0.7, 0, 0.5)];
        assert_eq!(fuse_cloud_boxes(&edge, &far, 0.5).len(), 2);
        let dup_hi = vec![cand(0.1, 0, 0.8)];
        assert_eq!(fuse_cloud_boxes(&edge, &dup_hi, 0.5), dup_hi);
        let dup_eq = vec![cand(0.1, 0, 0.6)];
        assert_eq!(fuse_cloud_boxes(&edge, &dup_eq, 0.5), edge);
    }

    fn arb_cands() -> impl Strategy<Value = Vec<Candidate>> {
        proptest::collection::vec((0.0..0.7f64, 0.0..0.7f64, 0u32..2, 0.0..=1.0f64), 0..12)
            .prop_map(|v| {
                v.into_iter()
                    .map(|(x, y, c, s)| {
                        Candidate::new(BBox::new(x, y, x + 0.25, y + 0.25).unwrap(), ClassId(c), s)
                            .unwrap()
                    })
                    .collect()
            })
    }

    proptest! {
        #[test]
        fn nms_idempotent_subset(cs in arb_cands(), thr in 0.1..=1.0f64) {
            let once = nms(&cs, thr);
            prop_assert_eq!(nms(&once, thr), once.clone());
            for k in &once {
                prop_assert!(cs.contains(k));
            }
        }

        #[test]
        fn filter_monotone(cs in arb_cands(), t1 in 0.0..=1.0f64, t2 in 0.0..=1.0f64) {
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            let high = filter_by_threshold(&cs, hi);
            let low = filter_by_threshold(&cs, lo);
            prop_assert!(high.len() <= low.len());
            for c in &high {
                prop_assert!(low.contains(c));
            }
        }
    }
}
