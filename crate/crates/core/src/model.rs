//! Shared domain types: boxes, candidates, semantic descriptions, tunable
//! coefficients and trace records.
//!
//! Every constructor validates its invariants, so a value of one of these
//! types is always well-formed. All types are immutable plain data and can be
//! shared freely across worker threads.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on the category prior sum after normalization.
pub const PRIOR_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid bounding box: {0}")]
    InvalidBox(BoxVerdict),
    #[error("score {0} outside [0, 1]")]
    ScoreRange(f64),
    #[error("class id {0} is not in the class table")]
    UnknownClassId(u32),
    #[error("unknown class name `{0}`")]
    UnknownClassName(String),
    #[error("class table is empty")]
    EmptyClassTable,
    #[error("duplicate class name `{0}` in class table")]
    DuplicateClass(String),
    #[error("field `{field}` = {value} outside {range}")]
    FieldRange {
        field: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("category prior sums to {0}, expected 1")]
    PriorSum(f64),
}

/// Names the invariant a coordinate quadruple broke.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxViolation {
    NonFiniteX1,
    NonFiniteY1,
    NonFiniteX2,
    NonFiniteY2,
    X1OutOfRange,
    Y1OutOfRange,
    X2OutOfRange,
    Y2OutOfRange,
    /// `x1 >= x2`
    NonPositiveWidth,
    /// `y1 >= y2`
    NonPositiveHeight,
}

impl BoxViolation {
    pub fn field(&self) -> &'static str {
        match self {
            BoxViolation::NonFiniteX1 | BoxViolation::X1OutOfRange => "x1",
            BoxViolation::NonFiniteY1 | BoxViolation::Y1OutOfRange => "y1",
            BoxViolation::NonFiniteX2 | BoxViolation::X2OutOfRange => "x2",
            BoxViolation::NonFiniteY2 | BoxViolation::Y2OutOfRange => "y2",
            BoxViolation::NonPositiveWidth => "x1>=x2",
            BoxViolation::NonPositiveHeight => "y1>=y2",
        }
    }
}

impl fmt::Display for BoxViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoxViolation::NonFiniteX1
            | BoxViolation::NonFiniteY1
            | BoxViolation::NonFiniteX2
            | BoxViolation::NonFiniteY2 => write!(f, "{} not finite", self.field()),
            BoxViolation::X1OutOfRange
            | BoxViolation::Y1OutOfRange
            | BoxViolation::X2OutOfRange
            | BoxViolation::Y2OutOfRange => write!(f, "{} out of range", self.field()),
            BoxViolation::NonPositiveWidth | BoxViolation::NonPositiveHeight => {
                f.write_str(self.field())
            }
        }
    }
}

/// Outcome of [`validate_bbox`]; valid iff `violations` is empty.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BoxVerdict {
    pub violations: Vec<BoxViolation>,
}

impl BoxVerdict {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for BoxVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks a raw `[x1, y1, x2, y2]` quadruple against the box invariants.
pub fn validate_bbox(coords: [f64; 4]) -> BoxVerdict {
    use BoxViolation::*;
    let [x1, y1, x2, y2] = coords;
    let mut violations = Vec::new();
    let checks = [
        (x1, NonFiniteX1, X1OutOfRange),
        (y1, NonFiniteY1, Y1OutOfRange),
        (x2, NonFiniteX2, X2OutOfRange),
        (y2, NonFiniteY2, Y2OutOfRange),
    ];
    for (value, non_finite, out_of_range) in checks {
        if !value.is_finite() {
            violations.push(non_finite);
        } else if !(0.0..=1.0).contains(&value) {
            violations.push(out_of_range);
        }
    }
    // NaN compares false, so only flag ordering when both ends are finite.
    if x1.is_finite() && x2.is_finite() && x1 >= x2 {
        violations.push(NonPositiveWidth);
    }
    if y1.is_finite() && y2.is_finite() && y1 >= y2 {
        violations.push(NonPositiveHeight);
    }
    BoxVerdict { violations }
}

/// Axis-aligned box in normalized image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
}

impl BBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self, ModelError> {
        let verdict = validate_bbox([x1, y1, x2, y2]);
        if verdict.is_valid() {
            Ok(Self { x1, y1, x2, y2 })
        } else {
            Err(ModelError::InvalidBox(verdict))
        }
    }

    pub fn x1(&self) -> f64 {
        self.x1
    }
    pub fn y1(&self) -> f64 {
        self.y1
    }
    pub fn x2(&self) -> f64 {
        self.x2
    }
    pub fn y2(&self) -> f64 {
        self.y2
    }

    pub fn coords(&self) -> [f64; 4] {
        [self.x1, self.y1, self.x2, self.y2]
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)
    }

    /// `true` when the point lies in the closed box.
    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        x >= self.x1 && x <= self.x2 && y >= self.y1 && y <= self.y2
    }

    /// Area of the overlap with `other`, 0 when disjoint.
    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let w = self.x2.min(other.x2) - self.x1.max(other.x1);
        let h = self.y2.min(other.y2) - self.y1.max(other.y1);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }
}

impl TryFrom<[f64; 4]> for BBox {
    type Error = ModelError;

    fn try_from(c: [f64; 4]) -> Result<Self, Self::Error> {
        BBox::new(c[0], c[1], c[2], c[3])
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        b.coords()
    }
}

/// Intersection over union of two valid boxes.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    if a == b {
        return 1.0;
    }
    let inter = a.intersection_area(b);
    if inter == 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(pub u32);

impl ClassId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Per-run table of class names; a class id is its position in the table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassTable {
    names: Vec<String>,
    by_name: HashMap<String, ClassId>,
}

impl ClassTable {
    pub fn new<I, S>(names: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(ModelError::EmptyClassTable);
        }
        let mut by_name = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if by_name.insert(name.clone(), ClassId(i as u32)).is_some() {
                return Err(ModelError::DuplicateClass(name.clone()));
            }
        }
        Ok(Self { names, by_name })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<ClassId> {
        self.by_name.get(name).copied()
    }

    pub fn name(&self, id: ClassId) -> Option<&str> {
        self.names.get(id.index()).map(String::as_str)
    }

    pub fn contains(&self, id: ClassId) -> bool {
        id.index() < self.names.len()
    }

    pub fn ids(&self) -> impl Iterator<Item = ClassId> + '_ {
        (0..self.names.len()).map(|i| ClassId(i as u32))
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// A scored, class-labelled box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub bbox: BBox,
    pub class_id: ClassId,
    score: f64,
}

impl Candidate {
    pub fn new(bbox: BBox, class_id: ClassId, score: f64) -> Result<Self, ModelError> {
        if !(0.0..=1.0).contains(&score) {
            return Err(ModelError::ScoreRange(score));
        }
        Ok(Self {
            bbox,
            class_id,
            score,
        })
    }

    /// Like [`Candidate::new`], additionally checking the class id against `classes`.
    pub fn checked(
        bbox: BBox,
        class_id: ClassId,
        score: f64,
        classes: &ClassTable,
    ) -> Result<Self, ModelError> {
        if !classes.contains(class_id) {
            return Err(ModelError::UnknownClassId(class_id.0));
        }
        Self::new(bbox, class_id, score)
    }

    pub fn score(&self) -> f64 {
        self.score
    }

    /// Same box and class with a new score, saturated into `[0, 1]`.
    pub fn with_score(&self, score: f64) -> Self {
        Self {
            score: score.clamp(0.0, 1.0),
            ..*self
        }
    }
}

fn check_unit(field: &'static str, value: f64) -> Result<(), ModelError> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ModelError::FieldRange {
            field,
            value,
            range: "[0, 1]",
        })
    }
}

/// Structured scene output of the cloud model.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticDescription {
    brightness: f64,
    occlusion: f64,
    person_count: u32,
    scene_labels: BTreeSet<String>,
    category_prior: BTreeMap<ClassId, f64>,
    rois: Vec<BBox>,
    cloud_boxes: Option<Vec<Candidate>>,
}

impl SemanticDescription {
    /// Builds a description. A non-empty prior is normalized to sum to 1; an
    /// empty prior stays empty (no class receives prior mass).
    pub fn new(
        brightness: f64,
        occlusion: f64,
        person_count: u32,
        scene_labels: BTreeSet<String>,
        category_prior: BTreeMap<ClassId, f64>,
        rois: Vec<BBox>,
        cloud_boxes: Option<Vec<Candidate>>,
    ) -> Result<Self, ModelError> {
        check_unit("brightness", brightness)?;
        check_unit("occlusion", occlusion)?;
        let mut prior = category_prior;
        if !prior.is_empty() {
            let mut sum = 0.0;
            for &p in prior.values() {
                if !p.is_finite() || p < 0.0 {
                    return Err(ModelError::FieldRange {
                        field: "category_prior",
                        value: p,
                        range: "[0, inf)",
                    });
                }
                sum += p;
            }
            if sum <= 0.0 {
                return Err(ModelError::PriorSum(sum));
            }
            for p in prior.values_mut() {
                *p /= sum;
            }
            let total: f64 = prior.values().sum();
            if (total - 1.0).abs() > PRIOR_SUM_TOLERANCE {
                return Err(ModelError::PriorSum(total));
            }
        }
        Ok(Self {
            brightness,
            occlusion,
            person_count,
            scene_labels,
            category_prior: prior,
            rois,
            cloud_boxes,
        })
    }

    pub fn brightness(&self) -> f64 {
        self.brightness
    }
    pub fn occlusion(&self) -> f64 {
        self.occlusion
    }
    pub fn person_count(&self) -> u32 {
        self.person_count
    }
    pub fn scene_labels(&self) -> &BTreeSet<String> {
        &self.scene_labels
    }
    pub fn category_prior(&self) -> &BTreeMap<ClassId, f64> {
        &self.category_prior
    }
    /// Prior mass for one class; absent entries are 0.
    pub fn prior_of(&self, class_id: ClassId) -> f64 {
        self.category_prior.get(&class_id).copied().unwrap_or(0.0)
    }
    pub fn rois(&self) -> &[BBox] {
        &self.rois
    }
    pub fn cloud_boxes(&self) -> Option<&[Candidate]> {
        self.cloud_boxes.as_deref()
    }
}

/// Coefficients of the semantic-to-parameter mapping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MappingParams {
    pub tau0: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub omega0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub p_th: u32,
    pub gamma: f64,
    pub rho_overlap: f64,
    pub tau_min: f64,
}

impl Default for MappingParams {
    fn default() -> Self {
        Self {
            tau0: 0.5,
            alpha1: 0.2,
            alpha2: 0.1,
            omega0: 1.0,
            beta1: 0.1,
            beta2: 0.15,
            beta3: 0.2,
            p_th: 10,
            gamma: 1.5,
            rho_overlap: 0.5,
            tau_min: 0.05,
        }
    }
}

impl MappingParams {
    /// Coefficients under which every strategy is a no-op.
    pub fn identity() -> Self {
        Self {
            alpha1: 0.0,
            alpha2: 0.0,
            beta1: 0.0,
            beta2: 0.0,
            beta3: 0.0,
            gamma: 1.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let range = |field, value, range| {
            Err(ModelError::FieldRange {
                field,
                value,
                range,
            })
        };
        if !(self.tau_min.is_finite() && self.tau_min >= 0.0) {
            return range("tau_min", self.tau_min, "[0, tau0)");
        }
        if !(self.tau0 > self.tau_min && self.tau0 < 1.0) {
            return range("tau0", self.tau0, "(tau_min, 1)");
        }
        for (field, value) in [
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("beta3", self.beta3),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return range(field, value, "[0, inf)");
            }
        }
        if !(self.omega0.is_finite() && self.omega0 > 0.0) {
            return range("omega0", self.omega0, "(0, inf)");
        }
        if self.p_th == 0 {
            return range("p_th", 0.0, "[1, inf)");
        }
        if !(self.gamma.is_finite() && self.gamma >= 1.0) {
            return range("gamma", self.gamma, "[1, inf)");
        }
        if !(self.rho_overlap > 0.0 && self.rho_overlap <= 1.0) {
            return range("rho_overlap", self.rho_overlap, "(0, 1]");
        }
        Ok(())
    }
}

/// How a candidate box is judged to fall inside a region of interest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoiMode {
    /// Fraction of the candidate's area covered by the region is at least `rho_overlap`.
    #[default]
    Overlap,
    /// The candidate's center point lies inside the region.
    CenterPoint,
}

/// Per-frame control signals handed to the detector post-processing.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorAdjustment {
    pub tau_c: f64,
    /// Indexed by class id; one entry per class in the table.
    pub class_weights: Vec<f64>,
    pub rois: Vec<BBox>,
    pub gamma: f64,
    pub rho_overlap: f64,
    pub roi_mode: RoiMode,
}

impl DetectorAdjustment {
    /// Baseline signals: threshold tau0, every weight omega0, no region gain.
    pub fn baseline(params: &MappingParams, classes: &ClassTable) -> Self {
        Self {
            tau_c: params.tau0,
            class_weights: vec![params.omega0; classes.len()],
            rois: Vec::new(),
            gamma: 1.0,
            rho_overlap: params.rho_overlap,
            roi_mode: RoiMode::Overlap,
        }
    }

    pub fn weight(&self, class_id: ClassId) -> f64 {
        self.class_weights
            .get(class_id.index())
            .copied()
            .unwrap_or(1.0)
    }

    pub fn validate(&self, params: &MappingParams) -> Result<(), ModelError> {
        if !(self.tau_c >= params.tau_min && self.tau_c < 1.0) {
            return Err(ModelError::FieldRange {
                field: "tau_c",
                value: self.tau_c,
                range: "[tau_min, 1)",
            });
        }
        if let Some(&w) = self
            .class_weights
            .iter()
            .find(|w| !(w.is_finite() && **w >= 0.0))
        {
            return Err(ModelError::FieldRange {
                field: "class_weights",
                value: w,
                range: "[0, inf)",
            });
        }
        if !(self.gamma.is_finite() && self.gamma >= 1.0) {
            return Err(ModelError::FieldRange {
                field: "gamma",
                value: self.gamma,
                range: "[1, inf)",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoutingPolicy {
    pub tau_route: f64,
    /// Candidates scoring below this are left out of the mean confidence.
    pub candidate_floor: f64,
}

impl Default for RoutingPolicy {
    fn default() -> Self {
        Self {
            tau_route: 0.6,
            candidate_floor: 0.25,
        }
    }
}

impl RoutingPolicy {
    pub fn new(tau_route: f64, candidate_floor: f64) -> Result<Self, ModelError> {
        let policy = Self {
            tau_route,
            candidate_floor,
        };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        check_unit("tau_route", self.tau_route)?;
        check_unit("candidate_floor", self.candidate_floor)
    }
}

/// Ground-truth scene attributes of a recorded frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneTruth {
    pub brightness: f64,
    pub person_count: u32,
    pub scene_labels: BTreeSet<String>,
}

impl SceneTruth {
    pub fn new(
        brightness: f64,
        person_count: u32,
        scene_labels: BTreeSet<String>,
    ) -> Result<Self, ModelError> {
        check_unit("brightness", brightness)?;
        Ok(Self {
            brightness,
            person_count,
            scene_labels,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruthBox {
    pub bbox: BBox,
    pub class_id: ClassId,
}

/// One replayable frame: what each backend produced plus the truth.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTrace {
    pub frame_id: String,
    /// Raw edge detector output, before any threshold.
    pub edge_candidates: Vec<Candidate>,
    /// Cloud model output exactly as recorded, possibly malformed.
    pub cloud_text: String,
    pub ground_truth: Vec<GroundTruthBox>,
    pub scene_truth: SceneTruth,
}

/// Per-stage latency and compute parameters of the simulated deployment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostModel {
    pub edge_latency_ms: f64,
    pub cloud_latency_ms: f64,
    pub network_rtt_ms: f64,
    pub mapping_overhead_ms: f64,
    pub edge_gflops: f64,
    pub cloud_gflops: f64,
    /// Standard deviation of per-frame latency jitter; 0 disables jitter.
    pub jitter_sigma_ms: f64,
    #[serde(skip)]
    pub seed: u64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            edge_latency_ms: 150.0,
            cloud_latency_ms: 4900.0,
            network_rtt_ms: 80.0,
            mapping_overhead_ms: 20.0,
            edge_gflops: 12.0,
            cloud_gflops: 100.0,
            jitter_sigma_ms: 0.0,
            seed: 0,
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (field, value) in [
            ("edge_latency_ms", self.edge_latency_ms),
            ("cloud_latency_ms", self.cloud_latency_ms),
            ("network_rtt_ms", self.network_rtt_ms),
            ("mapping_overhead_ms", self.mapping_overhead_ms),
            ("edge_gflops", self.edge_gflops),
            ("cloud_gflops", self.cloud_gflops),
            ("jitter_sigma_ms", self.jitter_sigma_ms),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(ModelError::FieldRange {
                    field,
                    value,
                    range: "[0, inf)",
                });
            }
        }
        Ok(())
    }
}
