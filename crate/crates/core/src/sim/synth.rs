//! Seeded synthetic traces with ground truth known by construction.
//!
//! Four frame kinds are generated. Normal frames carry confident candidates.
//! Dark frames have every ground-truth candidate score scaled by
//! `dark_factor`. Crowded frames hold more than `p_th` overlapping persons
//! scaled by `crowd_factor`. Occluded frames have objects scaled by
//! `occlusion_factor` with the cloud pointing regions of interest at them.
//! A fixed number of cloud texts is deliberately malformed.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::model::{
    BBox, Candidate, ClassId, ClassTable, FrameTrace, GroundTruthBox, ModelError, SceneTruth,
    SemanticDescription,
};
use crate::semantic::write_semantic_output;

pub const SYNTH_SCENE_VOCABULARY: [&str; 6] = [
    "crowded", "daylight", "indoor", "lowlight", "occluded", "street",
];

const PERSON: &str = "person";
const GRID: usize = 4;
const DUPLICATE_SCALE: f64 = 0.7;
const MALFORMED_VARIANTS: usize = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameKind {
    Normal,
    Dark,
    Crowded,
    Occluded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    pub frames: usize,
    pub classes: Vec<String>,
    pub dark_fraction: f64,
    pub crowded_fraction: f64,
    pub occluded_fraction: f64,
    pub dark_factor: f64,
    pub crowd_factor: f64,
    pub occlusion_factor: f64,
    /// Undegraded ground-truth candidate scores are drawn from this range.
    pub clean_score_min: f64,
    pub clean_score_max: f64,
    pub max_false_positives: usize,
    pub false_positive_max_score: f64,
    /// Chance that a ground-truth box also gets a shifted, weaker duplicate.
    pub duplicate_probability: f64,
    pub compliance_error_rate: f64,
    pub p_th: u32,
    pub cloud_box_score: f64,
    /// Half-width of the uniform noise on the reported brightness.
    pub brightness_noise: f64,
    pub label_error_rate: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            frames: 100,
            classes: vec![PERSON.into(), "car".into(), "bicycle".into(), "dog".into()],
            dark_fraction: 0.3,
            crowded_fraction: 0.2,
            occluded_fraction: 0.1,
            dark_factor: 0.5,
            crowd_factor: 0.55,
            occlusion_factor: 0.55,
            clean_score_min: 0.75,
            clean_score_max: 0.95,
            max_false_positives: 2,
            false_positive_max_score: 0.12,
            duplicate_probability: 0.3,
            compliance_error_rate: 0.1,
            p_th: 10,
            cloud_box_score: 0.85,
            brightness_noise: 0.02,
            label_error_rate: 0.1,
            seed: 0,
        }
    }
}

impl SynthSpec {
    fn only(kind: FrameKind, frames: usize, seed: u64) -> Self {
        let mut spec = Self {
            frames,
            seed,
            dark_fraction: 0.0,
            crowded_fraction: 0.0,
            occluded_fraction: 0.0,
            compliance_error_rate: 0.0,
            ..Self::default()
        };
        match kind {
            FrameKind::Dark => spec.dark_fraction = 1.0,
            FrameKind::Crowded => spec.crowded_fraction = 1.0,
            FrameKind::Occluded => spec.occluded_fraction = 1.0,
            FrameKind::Normal => {}
        }
        spec
    }

    /// Every frame dark.
    pub fn dark(frames: usize, seed: u64) -> Self {
        Self::only(FrameKind::Dark, frames, seed)
    }

    /// Every frame crowded.
    pub fn crowded(frames: usize, seed: u64) -> Self {
        Self::only(FrameKind::Crowded, frames, seed)
    }

    /// Every frame occluded.
    pub fn occluded(frames: usize, seed: u64) -> Self {
        Self::only(FrameKind::Occluded, frames, seed)
    }

    pub fn normal(frames: usize, seed: u64) -> Self {
        Self::only(FrameKind::Normal, frames, seed)
    }

    pub fn mixed(frames: usize, seed: u64) -> Self {
        Self {
            frames,
            seed,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<ClassTable, SynthError> {
        let bad = |msg: String| Err(SynthError::Invalid(msg));
        if self.frames == 0 {
            return bad("frames must be positive".into());
        }
        let classes = ClassTable::new(self.classes.iter().cloned())?;
        for (name, v) in [
            ("dark_fraction", self.dark_fraction),
            ("crowded_fraction", self.crowded_fraction),
            ("occluded_fraction", self.occluded_fraction),
            ("duplicate_probability", self.duplicate_probability),
            ("compliance_error_rate", self.compliance_error_rate),
            ("label_error_rate", self.label_error_rate),
            ("false_positive_max_score", self.false_positive_max_score),
            ("cloud_box_score", self.cloud_box_score),
            ("brightness_noise", self.brightness_noise),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} = {v} outside [0, 1]"));
            }
        }
        for (name, v) in [
            ("dark_factor", self.dark_factor),
            ("crowd_factor", self.crowd_factor),
            ("occlusion_factor", self.occlusion_factor),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return bad(format!("{name} = {v} outside (0, 1]"));
            }
        }
        if !(self.clean_score_min > 0.0
            && self.clean_score_min <= self.clean_score_max
            && self.clean_score_max <= 1.0)
        {
            return bad("clean score range must satisfy 0 < min <= max <= 1".into());
        }
        if self.crowded_fraction > 0.0 && classes.id(PERSON).is_none() {
            return bad("crowded frames need a `person` class".into());
        }
        Ok(classes)
    }

    fn kind_counts(&self) -> Result<[usize; 3], SynthError> {
        let n = self.frames as f64;
        let counts = [
            (self.dark_fraction * n).round() as usize,
            (self.crowded_fraction * n).round() as usize,
            (self.occluded_fraction * n).round() as usize,
        ];
        if counts.iter().sum::<usize>() > self.frames {
            return Err(SynthError::Invalid(
                "dark, crowded and occluded fractions exceed the frame count".into(),
            ));
        }
        Ok(counts)
    }
}

/// A generated frame plus the construction facts tests rely on.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthFrame {
    pub trace: FrameTrace,
    pub kind: FrameKind,
    /// Per edge candidate: the score before kind-specific degradation.
    pub clean_scores: Vec<f64>,
    /// Per edge candidate: index of the ground-truth box it was drawn from.
    pub gt_index: Vec<Option<usize>>,
    pub malformed: bool,
}

pub fn synth_trace(spec: &SynthSpec) -> Result<Vec<FrameTrace>, SynthError> {
    Ok(synth_trace_annotated(spec)?
        .into_iter()
        .map(|f| f.trace)
        .collect())
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn synth_trace_annotated(spec: &SynthSpec) -> Result<Vec<SynthFrame>, SynthError> {
    let classes = spec.validate()?;
    let [dark, crowded, occluded] = spec.kind_counts()?;
    let n = spec.frames;

    let mut kinds = Vec::with_capacity(n);
    kinds.extend(std::iter::repeat_n(FrameKind::Dark, dark));
    kinds.extend(std::iter::repeat_n(FrameKind::Crowded, crowded));
    kinds.extend(std::iter::repeat_n(FrameKind::Occluded, occluded));
    kinds.resize(n, FrameKind::Normal);
    kinds.shuffle(&mut stream_rng(spec.seed, 0));

    let n_malformed = (spec.compliance_error_rate * n as f64).round() as usize;
    let mut malformed = vec![false; n];
    for i in index::sample(&mut stream_rng(spec.seed, 1), n, n_malformed) {
        malformed[i] = true;
    }

    let mut ordinal = 0;
    let mut out = Vec::with_capacity(n);
    for (i, kind) in kinds.into_iter().enumerate() {
        let mut rng = stream_rng(spec.seed, 2 + i as u64);
        let variant = malformed[i].then(|| {
            ordinal += 1;
            (ordinal - 1) % MALFORMED_VARIANTS
        });
        out.push(generate_frame(spec, &classes, kind, i, variant, &mut rng)?);
    }
    Ok(out)
}

struct Object {
    bbox: BBox,
    class_id: ClassId,
}

fn grid_objects(
    rng: &mut ChaCha8Rng,
    classes: &ClassTable,
    count: usize,
) -> Result<Vec<Object>, ModelError> {
    let cell = 1.0 / GRID as f64;
    let slots = index::sample(rng, GRID * GRID, count).into_vec();
    slots
        .into_iter()
        .map(|slot| {
            let (cx, cy) = ((slot % GRID) as f64 * cell, (slot / GRID) as f64 * cell);
            let w = cell * rng.random_range(0.5..0.9);
            let h = cell * rng.random_range(0.5..0.9);
            let x = cx + rng.random_range(0.0..(cell - w));
            let y = cy + rng.random_range(0.0..(cell - h));
            let class_id = ClassId(rng.random_range(0..classes.len()) as u32);
            Ok(Object {
                bbox: BBox::new(x, y, x + w, y + h)?,
                class_id,
            })
        })
        .collect()
}

/// A row of persons, neighbours overlapping at IoU 0.25.
fn crowd_objects(
    rng: &mut ChaCha8Rng,
    person: ClassId,
    count: usize,
) -> Result<(Vec<Object>, BBox), ModelError> {
    let y1 = rng.random_range(0.2..0.35);
    let y2 = y1 + rng.random_range(0.35..0.5);
    let w = 0.9 / (1.0 + 0.6 * (count as f64 - 1.0));
    let objects = (0..count)
        .map(|i| {
            let x = 0.05 + 0.6 * w * i as f64;
            Ok(Object {
                bbox: BBox::new(x, y1, (x + w).min(0.95), y2)?,
                class_id: person,
            })
        })
        .collect::<Result<Vec<_>, ModelError>>()?;
    let region = BBox::new(0.03, (y1 - 0.03).max(0.0), 0.97, (y2 + 0.03).min(1.0))?;
    Ok((objects, region))
}

fn shifted(b: &BBox) -> Result<BBox, ModelError> {
    let dx = 0.03 * b.width();
    let dx = if b.x2() + dx <= 1.0 { dx } else { -dx };
    BBox::new(b.x1() + dx, b.y1(), b.x2() + dx, b.y2())
}

fn enlarged(b: &BBox, margin: f64) -> Result<BBox, ModelError> {
    BBox::new(
        (b.x1() - margin).max(0.0),
        (b.y1() - margin).max(0.0),
        (b.x2() + margin).min(1.0),
        (b.y2() + margin).min(1.0),
    )
}

fn generate_frame(
    spec: &SynthSpec,
    classes: &ClassTable,
    kind: FrameKind,
    index: usize,
    malformed_variant: Option<usize>,
    rng: &mut ChaCha8Rng,
) -> Result<SynthFrame, SynthError> {
    let person = classes.id(PERSON);
    let place = if rng.random_bool(0.5) {
        "street"
    } else {
        "indoor"
    };

    let (objects, rois, factor, brightness_gt, occlusion, tag) = match kind {
        FrameKind::Normal => {
            let count = rng.random_range(1..=4);
            let objs = grid_objects(rng, classes, count)?;
            (
                objs,
                vec![],
                1.0,
                rng.random_range(0.55..0.95),
                0.1,
                "daylight",
            )
        }
        FrameKind::Dark => {
            let count = rng.random_range(1..=4);
            let objs = grid_objects(rng, classes, count)?;
            (
                objs,
                vec![],
                spec.dark_factor,
                rng.random_range(0.05..0.28),
                0.2,
                "lowlight",
            )
        }
        FrameKind::Occluded => {
            let count = rng.random_range(1..=3);
            let objs = grid_objects(rng, classes, count)?;
            let rois = objs
                .iter()
                .map(|o| enlarged(&o.bbox, 0.02))
                .collect::<Result<Vec<_>, _>>()?;
            (
                objs,
                rois,
                spec.occlusion_factor,
                rng.random_range(0.55..0.95),
                0.5,
                "occluded",
            )
        }
        FrameKind::Crowded => {
            let person = person.expect("validated: crowded frames require a person class");
            let count = spec.p_th as usize + 2 + rng.random_range(0..=3);
            let (objs, region) = crowd_objects(rng, person, count)?;
            (
                objs,
                vec![region],
                spec.crowd_factor,
                rng.random_range(0.5..0.85),
                0.6,
                "crowded",
            )
        }
    };
    let place = if kind == FrameKind::Crowded {
        "street"
    } else {
        place
    };

    // Edge candidates: every ground-truth box, some duplicates, some clutter.
    let mut cands: Vec<(Candidate, f64, Option<usize>)> = Vec::new();
    for (gi, obj) in objects.iter().enumerate() {
        let clean = rng.random_range(spec.clean_score_min..=spec.clean_score_max);
        cands.push((
            Candidate::new(obj.bbox, obj.class_id, clean * factor)?,
            clean,
            Some(gi),
        ));
        if rng.random_bool(spec.duplicate_probability) {
            let dup_clean = clean * DUPLICATE_SCALE;
            let dup = Candidate::new(shifted(&obj.bbox)?, obj.class_id, dup_clean * factor)?;
            cands.push((dup, dup_clean, Some(gi)));
        }
    }
    let n_fp = rng.random_range(0..=spec.max_false_positives);
    for _ in 0..n_fp {
        let w = rng.random_range(0.05..0.15);
        let h = rng.random_range(0.05..0.15);
        let x = rng.random_range(0.0..(1.0 - w));
        let y = rng.random_range(0.0..(1.0 - h));
        let class_id = ClassId(rng.random_range(0..classes.len()) as u32);
        let score = rng.random_range(0.01..=spec.false_positive_max_score.max(0.01));
        cands.push((
            Candidate::new(BBox::new(x, y, x + w, y + h)?, class_id, score)?,
            score,
            None,
        ));
    }
    cands.shuffle(rng);

    let ground_truth: Vec<GroundTruthBox> = objects
        .iter()
        .map(|o| GroundTruthBox {
            bbox: o.bbox,
            class_id: o.class_id,
        })
        .collect();
    let person_count_gt = objects
        .iter()
        .filter(|o| Some(o.class_id) == person)
        .count() as u32;
    let labels_gt: BTreeSet<String> = [tag, place].into_iter().map(String::from).collect();
    let scene_truth = SceneTruth::new(brightness_gt, person_count_gt, labels_gt)?;

    // What a well-behaved cloud model would report for this frame.
    let noise = spec.brightness_noise;
    let brightness = (brightness_gt + rng.random_range(-noise..=noise)).clamp(0.0, 1.0);
    let occlusion = (occlusion + rng.random_range(-0.05f64..=0.05)).clamp(0.0, 1.0);
    let count_noise: i64 = rng.random_range(-1..=1);
    let person_count = (person_count_gt as i64 + count_noise).max(0) as u32;
    let mut labels = BTreeSet::from([tag.to_owned()]);
    let reported_place = if rng.random_bool(spec.label_error_rate) {
        if place == "street" {
            "indoor"
        } else {
            "street"
        }
    } else {
        place
    };
    labels.insert(reported_place.to_owned());
    let mut prior = BTreeMap::new();
    for o in &objects {
        *prior.entry(o.class_id).or_insert(0.0) += 1.0;
    }
    let cloud_boxes = objects
        .iter()
        .map(|o| Candidate::new(o.bbox, o.class_id, spec.cloud_box_score))
        .collect::<Result<Vec<_>, _>>()?;
    let desc = SemanticDescription::new(
        brightness,
        occlusion,
        person_count,
        labels,
        prior,
        rois,
        Some(cloud_boxes),
    )?;
    let valid_text = write_semantic_output(&desc, classes);
    let cloud_text = match malformed_variant {
        None => valid_text,
        Some(v) => malform(&valid_text, v, place, person_count),
    };

    let (edge_candidates, (clean_scores, gt_index)): (Vec<_>, (Vec<_>, Vec<_>)) =
        cands.into_iter().map(|(c, s, g)| (c, (s, g))).unzip();
    Ok(SynthFrame {
        trace: FrameTrace {
            frame_id: format!("synth-{index:05}"),
            edge_candidates,
            cloud_text,
            ground_truth,
            scene_truth,
        },
        kind,
        clean_scores,
        gt_index,
        malformed: malformed_variant.is_some(),
    })
}

/// Breaks a valid document in one of several characteristic ways.
fn malform(valid: &str, variant: usize, place: &str, persons: u32) -> String {
    let edit = |f: &dyn Fn(&mut serde_json::Map<String, Value>)| {
        let mut doc: Value = serde_json::from_str(valid).expect("writer emits valid JSON");
        if let Value::Object(map) = &mut doc {
            f(map);
        }
        doc.to_string()
    };
    match variant {
        0 => format!("The picture shows a {place} scene. I can see about {persons} people."),
        1 => valid[..valid.len() / 2].to_owned(),
        2 => edit(&|m| {
            m.insert("brightness".into(), Value::from(1.4));
        }),
        3 => edit(&|m| {
            m.remove("person_count");
        }),
        4 => edit(&|m| {
            if let Some(Value::Object(prior)) = m.get_mut("category_prior") {
                prior.insert("unicorn".into(), Value::from(0.1));
            }
        }),
        _ => edit(&|m| {
            if let Some(Value::Object(prior)) = m.get_mut("category_prior") {
                for v in prior.values_mut() {
                    *v = Value::from(v.as_f64().unwrap_or(0.0) * 3.0);
                }
            }
        }),
    }
}
