//! Line-delimited JSON trace files, one frame per line.

use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::harness::HarnessError;
use crate::model::{
    validate_bbox, BBox, Candidate, ClassTable, FrameTrace, GroundTruthBox, SceneTruth,
};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CandidateRecord {
    bbox: [f64; 4],
    class: String,
    score: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GroundTruthRecord {
    bbox: [f64; 4],
    class: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneTruthRecord {
    brightness: f64,
    person_count: u32,
    scene_labels: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameRecord {
    frame_id: String,
    edge_candidates: Vec<CandidateRecord>,
    cloud_text: String,
    ground_truth: Vec<GroundTruthRecord>,
    scene_truth: SceneTruthRecord,
}

fn bad_line(line: usize, message: impl Into<String>) -> HarnessError {
    HarnessError::Trace {
        line,
        message: message.into(),
    }
}

fn to_box(line: usize, field: &str, coords: [f64; 4]) -> Result<BBox, HarnessError> {
    let verdict = validate_bbox(coords);
    if !verdict.is_valid() {
        return Err(bad_line(line, format!("{field}: {verdict}")));
    }
    BBox::new(coords[0], coords[1], coords[2], coords[3])
        .map_err(|e| bad_line(line, format!("{field}: {e}")))
}

fn class_id(
    line: usize,
    field: &str,
    name: &str,
    classes: &ClassTable,
) -> Result<crate::model::ClassId, HarnessError> {
    classes
        .id(name)
        .ok_or_else(|| bad_line(line, format!("{field}: unknown class `{name}`")))
}

fn decode(
    line: usize,
    record: FrameRecord,
    classes: &ClassTable,
) -> Result<FrameTrace, HarnessError> {
    let mut edge_candidates = Vec::with_capacity(record.edge_candidates.len());
    for (i, c) in record.edge_candidates.into_iter().enumerate() {
        let field = format!("edge_candidates[{i}]");
        let bbox = to_box(line, &format!("{field}.bbox"), c.bbox)?;
        let id = class_id(line, &format!("{field}.class"), &c.class, classes)?;
        let cand = Candidate::new(bbox, id, c.score)
            .map_err(|e| bad_line(line, format!("{field}.score: {e}")))?;
        edge_candidates.push(cand);
    }
    let mut ground_truth = Vec::with_capacity(record.ground_truth.len());
    for (i, g) in record.ground_truth.into_iter().enumerate() {
        let field = format!("ground_truth[{i}]");
        ground_truth.push(GroundTruthBox {
            bbox: to_box(line, &format!("{field}.bbox"), g.bbox)?,
            class_id: class_id(line, &format!("{field}.class"), &g.class, classes)?,
        });
    }
    let st = record.scene_truth;
    let scene_truth = SceneTruth::new(
        st.brightness,
        st.person_count,
        st.scene_labels.into_iter().collect::<BTreeSet<_>>(),
    )
    .map_err(|e| bad_line(line, format!("scene_truth: {e}")))?;
    Ok(FrameTrace {
        frame_id: record.frame_id,
        edge_candidates,
        cloud_text: record.cloud_text,
        ground_truth,
        scene_truth,
    })
}

/// Reads and validates a trace stream. Line numbers in errors are 1-based;
/// blank lines are skipped.
pub fn read_trace<R: BufRead>(
    reader: R,
    classes: &ClassTable,
) -> Result<Vec<FrameTrace>, HarnessError> {
    let mut frames = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| bad_line(lineno, format!("read failed: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: FrameRecord =
            serde_json::from_str(&line).map_err(|e| bad_line(lineno, e.to_string()))?;
        if !seen.insert(record.frame_id.clone()) {
            return Err(bad_line(
                lineno,
                format!("duplicate frame_id `{}`", record.frame_id),
            ));
        }
        frames.push(decode(lineno, record, classes)?);
    }
    Ok(frames)
}

pub fn load_trace(path: &Path, classes: &ClassTable) -> Result<Vec<FrameTrace>, HarnessError> {
    let file = File::open(path).map_err(|source| HarnessError::Io {
        path: path.to_owned(),
        source,
    })?;
    read_trace(BufReader::new(file), classes)
}

fn name(classes: &ClassTable, id: crate::model::ClassId) -> String {
    classes
        .name(id)
        .map(str::to_owned)
        .unwrap_or_else(|| format!("class_{id}"))
}

/// Writes frames in the trace format, one JSON object per line.
pub fn write_trace<W: Write>(
    mut writer: W,
    frames: &[FrameTrace],
    classes: &ClassTable,
) -> std::io::Result<()> {
    for f in frames {
        let record = FrameRecord {
            frame_id: f.frame_id.clone(),
            edge_candidates: f
                .edge_candidates
                .iter()
                .map(|c| CandidateRecord {
                    bbox: c.bbox.coords(),
                    class: name(classes, c.class_id),
                    score: c.score(),
                })
                .collect(),
            cloud_text: f.cloud_text.clone(),
            ground_truth: f
                .ground_truth
                .iter()
                .map(|g| GroundTruthRecord {
                    bbox: g.bbox.coords(),
                    class: name(classes, g.class_id),
                })
                .collect(),
            scene_truth: SceneTruthRecord {
                brightness: f.scene_truth.brightness,
                person_count: f.scene_truth.person_count,
                scene_labels: f.scene_truth.scene_labels.iter().cloned().collect(),
            },
        };
        serde_json::to_writer(&mut writer, &record)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}
