//! Reference arithmetic written without the library, used to cross-check it.
#![allow(dead_code)]

use std::collections::BTreeMap;

pub fn threshold(tau0: f64, alpha1: f64, alpha2: f64, tau_min: f64, b: f64, o: f64) -> f64 {
    let t = tau0 - alpha1 * (1.0 - b) - alpha2 * o;
    if t < tau_min {
        tau_min
    } else if t > tau0 {
        tau0
    } else {
        t
    }
}

#[allow(clippy::too_many_arguments)]
pub fn weight(
    omega0: f64,
    beta1: f64,
    beta2: f64,
    beta3: f64,
    p_th: u32,
    p: u32,
    o: f64,
    prior: f64,
) -> f64 {
    let crowd = if p > p_th { beta1 } else { 0.0 };
    omega0 + crowd + beta2 * o + beta3 * prior
}

fn overlap_1d(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

pub fn inter(a: [f64; 4], b: [f64; 4]) -> f64 {
    overlap_1d(a[0], a[2], b[0], b[2]) * overlap_1d(a[1], a[3], b[1], b[3])
}

pub fn area(a: [f64; 4]) -> f64 {
    (a[2] - a[0]) * (a[3] - a[1])
}

pub fn box_iou(a: [f64; 4], b: [f64; 4]) -> f64 {
    let i = inter(a, b);
    let u = area(a) + area(b) - i;
    if u <= 0.0 {
        0.0
    } else {
        i / u
    }
}

pub fn region_gain(cand: [f64; 4], rois: &[[f64; 4]], gamma: f64, rho: f64) -> f64 {
    let mut inside = false;
    for r in rois {
        if inter(cand, *r) / area(cand) >= rho {
            inside = true;
        }
    }
    if inside {
        gamma
    } else {
        1.0
    }
}

pub fn rescore(score: f64, w: f64, g: f64) -> f64 {
    let s = score * w * g;
    if s > 1.0 {
        1.0
    } else {
        s
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Det {
    pub frame: usize,
    pub class: u32,
    pub bbox: [f64; 4],
    pub score: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Gt {
    pub frame: usize,
    pub class: u32,
    pub bbox: [f64; 4],
}

/// Number of true positives among `ranked` by greedy best-IoU matching.
fn count_tp(ranked: &[Det], gts: &[Gt]) -> usize {
    let mut used = vec![false; gts.len()];
    let mut tp = 0;
    for d in ranked {
        let mut best: Option<usize> = None;
        let mut best_iou = 0.0;
        for (gi, g) in gts.iter().enumerate() {
            if used[gi] || g.frame != d.frame || g.class != d.class {
                continue;
            }
            let v = box_iou(d.bbox, g.bbox);
            if v >= 0.5 && (best.is_none() || v > best_iou) {
                best = Some(gi);
                best_iou = v;
            }
        }
        if let Some(gi) = best {
            used[gi] = true;
            tp += 1;
        }
    }
    tp
}

/// Per-class all-point AP, recomputing every ranked prefix from scratch.
pub fn brute_force_ap(dets: &[Det], gts: &[Gt]) -> BTreeMap<u32, f64> {
    let mut out = BTreeMap::new();
    let mut classes: Vec<u32> = gts.iter().map(|g| g.class).collect();
    classes.sort_unstable();
    classes.dedup();
    for c in classes {
        let npos = gts.iter().filter(|g| g.class == c).count();
        let mut ranked: Vec<Det> = dets.iter().copied().filter(|d| d.class == c).collect();
        // Stable: equal scores keep input order.
        ranked.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap());
        let n = ranked.len();
        let tp_at: Vec<usize> = (0..=n).map(|k| count_tp(&ranked[..k], gts)).collect();
        let precision_at = |k: usize| tp_at[k] as f64 / k as f64;
        let mut ap = 0.0;
        for k in 1..=n {
            if tp_at[k] > tp_at[k - 1] {
                let best = (k..=n).map(precision_at).fold(0.0, f64::max);
                ap += best / npos as f64;
            }
        }
        out.insert(c, ap);
    }
    out
}
