//! Parsing and validation of the cloud model's structured scene output.
//!
//! The cloud model is expected to emit one JSON object with the fields
//! `brightness`, `occlusion`, `person_count`, `scene_labels`,
//! `category_prior`, `rois` and, optionally, `detections`. Fields are checked
//! in that order and the first violation is reported, so a given text always
//! yields the same error. Unknown top-level fields are ignored.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde_json::{Map, Value};
use thiserror::Error;

use crate::model::{validate_bbox, BBox, Candidate, ClassId, ClassTable, SemanticDescription};

/// Raw prior sums outside this window are not renormalized.
pub const PRIOR_RENORMALIZE_WINDOW: (f64, f64) = (0.5, 1.5);

pub const FIELD_ORDER: [&str; 7] = [
    "brightness",
    "occlusion",
    "person_count",
    "scene_labels",
    "category_prior",
    "rois",
    "detections",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ComplianceKind {
    NotJson,
    MissingField(String),
    FieldType(String),
    FieldRange(String),
    UnknownClass(String),
    PriorNotNormalizable,
}

impl fmt::Display for ComplianceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ComplianceKind::NotJson => f.write_str("not_json"),
            ComplianceKind::MissingField(n) => write!(f, "missing_field({n})"),
            ComplianceKind::FieldType(n) => write!(f, "field_type({n})"),
            ComplianceKind::FieldRange(n) => write!(f, "field_range({n})"),
            ComplianceKind::UnknownClass(n) => write!(f, "unknown_class({n})"),
            ComplianceKind::PriorNotNormalizable => f.write_str("prior_not_normalizable"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind}: {detail}")]
pub struct ComplianceError {
    pub kind: ComplianceKind,
    pub detail: String,
}

impl ComplianceError {
    fn new(kind: ComplianceKind, detail: impl Into<String>) -> Self {
        Self {
            kind,
            detail: detail.into(),
        }
    }

    fn missing(field: &str) -> Self {
        Self::new(
            ComplianceKind::MissingField(field.to_owned()),
            format!("required field `{field}` is absent"),
        )
    }

    fn wrong_type(field: &str, expected: &str, got: &Value) -> Self {
        Self::new(
            ComplianceKind::FieldType(field.to_owned()),
            format!("expected {expected}, found {}", type_name(got)),
        )
    }

    fn range(field: &str, detail: impl Into<String>) -> Self {
        Self::new(ComplianceKind::FieldRange(field.to_owned()), detail)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("compliance rate of an empty corpus is undefined")]
pub struct EmptyCorpus;

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

fn required<'a>(doc: &'a Map<String, Value>, field: &str) -> Result<&'a Value, ComplianceError> {
    doc.get(field)
        .ok_or_else(|| ComplianceError::missing(field))
}

fn unit_interval(doc: &Map<String, Value>, field: &str) -> Result<f64, ComplianceError> {
    let v = required(doc, field)?;
    let x = v
        .as_f64()
        .ok_or_else(|| ComplianceError::wrong_type(field, "number", v))?;
    if !(0.0..=1.0).contains(&x) {
        return Err(ComplianceError::range(field, format!("{x} outside [0, 1]")));
    }
    Ok(x)
}

fn person_count(doc: &Map<String, Value>) -> Result<u32, ComplianceError> {
    const FIELD: &str = "person_count";
    let v = required(doc, FIELD)?;
    match v {
        Value::Number(n) if n.is_u64() => {
            let count = n.as_u64().unwrap_or(u64::MAX);
            u32::try_from(count)
                .map_err(|_| ComplianceError::range(FIELD, format!("{count} too large")))
        }
        Value::Number(n) if n.is_i64() => {
            Err(ComplianceError::range(FIELD, format!("{n} is negative")))
        }
        _ => Err(ComplianceError::wrong_type(
            FIELD,
            "non-negative integer",
            v,
        )),
    }
}

fn scene_labels(doc: &Map<String, Value>) -> Result<BTreeSet<String>, ComplianceError> {
    const FIELD: &str = "scene_labels";
    let v = required(doc, FIELD)?;
    let items = v
        .as_array()
        .ok_or_else(|| ComplianceError::wrong_type(FIELD, "array of strings", v))?;
    items
        .iter()
        .map(|item| {
            item.as_str()
                .map(str::to_owned)
                .ok_or_else(|| ComplianceError::wrong_type(FIELD, "string label", item))
        })
        .collect()
}

fn category_prior(
    doc: &Map<String, Value>,
    classes: &ClassTable,
) -> Result<BTreeMap<ClassId, f64>, ComplianceError> {
    const FIELD: &str = "category_prior";
    let v = required(doc, FIELD)?;
    let entries = v
        .as_object()
        .ok_or_else(|| ComplianceError::wrong_type(FIELD, "object of class -> probability", v))?;
    let mut prior = BTreeMap::new();
    for (name, value) in entries {
        let p = value
            .as_f64()
            .ok_or_else(|| ComplianceError::wrong_type(FIELD, "number", value))?;
        if p < 0.0 {
            return Err(ComplianceError::range(
                FIELD,
                format!("`{name}` has negative mass {p}"),
            ));
        }
        let id = classes.id(name).ok_or_else(|| {
            ComplianceError::new(
                ComplianceKind::UnknownClass(name.clone()),
                format!("`{name}` is not in the class table"),
            )
        })?;
        prior.insert(id, p);
    }
    let sum: f64 = prior.values().sum();
    let (lo, hi) = PRIOR_RENORMALIZE_WINDOW;
    if !(lo..=hi).contains(&sum) {
        return Err(ComplianceError::new(
            ComplianceKind::PriorNotNormalizable,
            format!("prior mass sums to {sum}, outside [{lo}, {hi}]"),
        ));
    }
    Ok(prior)
}

fn parse_box(field: &str, v: &Value) -> Result<BBox, ComplianceError> {
    let items = v
        .as_array()
        .filter(|a| a.len() == 4)
        .ok_or_else(|| ComplianceError::wrong_type(field, "[x1, y1, x2, y2]", v))?;
    let mut coords = [0.0; 4];
    for (slot, item) in coords.iter_mut().zip(items) {
        *slot = item
            .as_f64()
            .ok_or_else(|| ComplianceError::wrong_type(field, "number coordinate", item))?;
    }
    let verdict = validate_bbox(coords);
    if !verdict.is_valid() {
        return Err(ComplianceError::range(
            field,
            format!("box {coords:?}: {verdict}"),
        ));
    }
    BBox::new(coords[0], coords[1], coords[2], coords[3])
        .map_err(|e| ComplianceError::range(field, e.to_string()))
}

fn rois(doc: &Map<String, Value>) -> Result<Vec<BBox>, ComplianceError> {
    const FIELD: &str = "rois";
    let v = required(doc, FIELD)?;
    let items = v
        .as_array()
        .ok_or_else(|| ComplianceError::wrong_type(FIELD, "array of boxes", v))?;
    items.iter().map(|item| parse_box(FIELD, item)).collect()
}

fn detections(
    doc: &Map<String, Value>,
    classes: &ClassTable,
) -> Result<Option<Vec<Candidate>>, ComplianceError> {
    const FIELD: &str = "detections";
    let v = match doc.get(FIELD) {
        None | Some(Value::Null) => return Ok(None),
        Some(v) => v,
    };
    let items = v
        .as_array()
        .ok_or_else(|| ComplianceError::wrong_type(FIELD, "array of detections", v))?;
    let mut out = Vec::with_capacity(items.len());
    for item in items {
        let entry = item
            .as_object()
            .ok_or_else(|| ComplianceError::wrong_type(FIELD, "detection object", item))?;
        let bbox = parse_box(FIELD, entry.get("bbox").unwrap_or(&Value::Null))?;
        let class = entry.get("class").unwrap_or(&Value::Null);
        let name = class
            .as_str()
            .ok_or_else(|| ComplianceError::wrong_type(FIELD, "class name", class))?;
        let class_id = classes.id(name).ok_or_else(|| {
            ComplianceError::new(
                ComplianceKind::UnknownClass(name.to_owned()),
                format!("detection class `{name}` is not in the class table"),
            )
        })?;
        let score_v = entry.get("score").unwrap_or(&Value::Null);
        let score = score_v
            .as_f64()
            .ok_or_else(|| ComplianceError::wrong_type(FIELD, "numeric score", score_v))?;
        let cand = Candidate::new(bbox, class_id, score)
            .map_err(|e| ComplianceError::range(FIELD, e.to_string()))?;
        out.push(cand);
    }
    Ok(Some(out))
}

/// Parses one raw cloud output against the structured contract.
///
/// On success the category prior has been renormalized to sum to 1.
pub fn parse_semantic_output(
    text: &str,
    classes: &ClassTable,
) -> Result<SemanticDescription, ComplianceError> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| ComplianceError::new(ComplianceKind::NotJson, e.to_string()))?;
    let doc = match value {
        Value::Object(doc) => doc,
        other => {
            return Err(ComplianceError::new(
                ComplianceKind::NotJson,
                format!("top-level value is {}, expected object", type_name(&other)),
            ))
        }
    };

    let brightness = unit_interval(&doc, "brightness")?;
    let occlusion = unit_interval(&doc, "occlusion")?;
    let person_count = person_count(&doc)?;
    let scene_labels = scene_labels(&doc)?;
    let prior = category_prior(&doc, classes)?;
    let rois = rois(&doc)?;
    let cloud_boxes = detections(&doc, classes)?;

    SemanticDescription::new(
        brightness,
        occlusion,
        person_count,
        scene_labels,
        prior,
        rois,
        cloud_boxes,
    )
    .map_err(|_| {
        ComplianceError::new(
            ComplianceKind::PriorNotNormalizable,
            "prior could not be normalized",
        )
    })
}

/// Fraction of `texts` that parse successfully.
pub fn compliance_rate<S: AsRef<str>>(
    texts: &[S],
    classes: &ClassTable,
) -> Result<f64, EmptyCorpus> {
    if texts.is_empty() {
        return Err(EmptyCorpus);
    }
    let ok = texts
        .iter()
        .filter(|t| parse_semantic_output(t.as_ref(), classes).is_ok())
        .count();
    Ok(ok as f64 / texts.len() as f64)
}

/// Serializes a description in the contract's field order.
pub fn write_semantic_output(desc: &SemanticDescription, classes: &ClassTable) -> String {
    let mut doc = Map::new();
    doc.insert("brightness".into(), desc.brightness().into());
    doc.insert("occlusion".into(), desc.occlusion().into());
    doc.insert("person_count".into(), desc.person_count().into());
    doc.insert(
        "scene_labels".into(),
        desc.scene_labels()
            .iter()
            .cloned()
            .collect::<Vec<_>>()
            .into(),
    );
    let prior: Map<String, Value> = desc
        .category_prior()
        .iter()
        .map(|(id, p)| (class_name(classes, *id), Value::from(*p)))
        .collect();
    doc.insert("category_prior".into(), Value::Object(prior));
    doc.insert(
        "rois".into(),
        desc.rois()
            .iter()
            .map(|b| b.coords().to_vec())
            .collect::<Vec<_>>()
            .into(),
    );
    if let Some(boxes) = desc.cloud_boxes() {
        let dets: Vec<Value> = boxes
            .iter()
            .map(|c| {
                serde_json::json!({
                    "bbox": c.bbox.coords(),
                    "class": class_name(classes, c.class_id),
                    "score": c.score(),
                })
            })
            .collect();
        doc.insert("detections".into(), Value::Array(dets));
    }
    // Map is key-sorted; emit in contract order instead.
    let mut out = String::from("{");
    let mut first = true;
    for field in FIELD_ORDER {
        if let Some(v) = doc.get(field) {
            if !first {
                out.push(',');
            }
            first = false;
            out.push_str(&serde_json::to_string(field).expect("string serializes"));
            out.push(':');
            out.push_str(&serde_json::to_string(v).expect("value serializes"));
        }
    }
    out.push('}');
    out
}

fn class_name(classes: &ClassTable, id: ClassId) -> String {
    classes
        .name(id)
        .map(str::to_owned)
        .unwrap_or_else(|| format!("class_{id}"))
}
