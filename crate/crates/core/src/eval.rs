//! Benchmark judging.
//!
//! A prediction is an ordered list of key points. It is judged against the
//! sample's regions with three rules applied in priority order:
//!
//! 1. any in-bounds point inside a banned region fails the sample;
//! 2. with ranked correct regions, the points must contain an order-preserving
//!    subsequence that visits one region of every rank in ascending rank order
//!    (one point per rank, extra points tolerated);
//! 3. with unranked correct regions, every region must contain at least one
//!    point, in any order.
//!
//! Points outside the image hit no region at all.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, Polygon, Rect};
use crate::modality::Modality;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RegionShape {
    #[serde(rename = "rect")]
    Rect(Rect),
    #[serde(rename = "polygon")]
    Polygon(Polygon),
}

impl RegionShape {
    pub fn contains(&self, p: Point) -> bool {
        match self {
            RegionShape::Rect(r) => r.contains(p),
            RegionShape::Polygon(poly) => poly.contains(p),
        }
    }

    pub fn bounds(&self) -> Rect {
        match self {
            RegionShape::Rect(r) => *r,
            RegionShape::Polygon(p) => p.bounds(),
        }
    }

    fn area(&self) -> f64 {
        match self {
            RegionShape::Rect(r) => r.area(),
            RegionShape::Polygon(p) => p.area(),
        }
    }
}

impl From<Rect> for RegionShape {
    fn from(r: Rect) -> Self {
        RegionShape::Rect(r)
    }
}

impl From<Polygon> for RegionShape {
    fn from(p: Polygon) -> Self {
        RegionShape::Polygon(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectRegion {
    pub shape: RegionShape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<u32>,
}

impl CorrectRegion {
    pub fn unranked(shape: impl Into<RegionShape>) -> Self {
        Self {
            shape: shape.into(),
            rank: None,
        }
    }

    pub fn ranked(shape: impl Into<RegionShape>, rank: u32) -> Self {
        Self {
            shape: shape.into(),
            rank: Some(rank),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BannedRegion {
    pub shape: RegionShape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSample {
    pub id: String,
    pub modality: Modality,
    pub instruction: String,
    #[serde(rename = "image")]
    pub image_ref: String,
    pub image_size: [f64; 2],
    pub correct_regions: Vec<CorrectRegion>,
    #[serde(default)]
    pub banned_regions: Vec<BannedRegion>,
}

impl BenchmarkSample {
    pub fn is_ranked(&self) -> bool {
        self.correct_regions.iter().any(|r| r.rank.is_some())
    }

    fn image_bounds(&self) -> Rect {
        Rect {
            x1: 0.0,
            y1: 0.0,
            x2: self.image_size[0],
            y2: self.image_size[1],
        }
    }

    /// Checks every sample invariant, reporting field paths relative to
    /// `location`.
    pub fn validate(&self, location: &str) -> Result<()> {
        let at = |field: &str| format!("{location} (id={}).{field}", self.id);
        if self.id.is_empty() {
            return Err(Error::schema(format!("{location}.id"), "empty sample id"));
        }
        let [w, h] = self.image_size;
        if !(w > 0.0 && h > 0.0 && w.is_finite() && h.is_finite()) {
            return Err(Error::schema(at("image_size"), "image size must be positive"));
        }
        if self.correct_regions.is_empty() {
            return Err(Error::schema(
                at("correct_regions"),
                "at least one correct region is required",
            ));
        }
        let ranked = self.correct_regions.iter().filter(|r| r.rank.is_some()).count();
        if ranked != 0 && ranked != self.correct_regions.len() {
            return Err(Error::schema(
                at("correct_regions"),
                "correct regions must either all have a rank or all lack one",
            ));
        }
        let bounds = self.image_bounds();
        let regions = self
            .correct_regions
            .iter()
            .map(|r| ("correct_regions", &r.shape))
            .chain(self.banned_regions.iter().map(|r| ("banned_regions", &r.shape)));
        let mut index: HashMap<&str, usize> = HashMap::new();
        for (field, shape) in regions {
            let i = index.entry(field).or_default();
            let path = at(&format!("{field}[{i}].shape"));
            *i += 1;
            if !bounds.contains_rect(&shape.bounds()) {
                return Err(Error::schema(path, "region extends past the image bounds"));
            }
            if let RegionShape::Polygon(_) = shape {
                if shape.area() <= 0.0 {
                    return Err(Error::schema(path, "degenerate polygon with zero area"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub sample_id: String,
    pub points: Vec<Point>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FailedRule {
    Banned,
    OrderMismatch,
    UncoveredRegion,
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub success: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_rule: Option<FailedRule>,
}

impl Verdict {
    pub const SUCCESS: Verdict = Verdict {
        success: true,
        failed_rule: None,
    };

    pub fn failure(rule: FailedRule) -> Self {
        Self {
            success: false,
            failed_rule: Some(rule),
        }
    }
}

pub fn judge_sample(sample: &BenchmarkSample, pred: &Prediction) -> Result<Verdict> {
    if pred.sample_id != sample.id {
        return Err(Error::InvalidArgument(format!(
            "prediction for `{}` judged against sample `{}`",
            pred.sample_id, sample.id
        )));
    }
    Ok(judge_points(sample, &pred.points))
}

/// Judges raw points against a sample without the id check.
pub fn judge_points(sample: &BenchmarkSample, points: &[Point]) -> Verdict {
    if points.is_empty() {
        return Verdict::failure(FailedRule::Empty);
    }
    let bounds = sample.image_bounds();
    let live: Vec<Option<Point>> = points
        .iter()
        .map(|&p| (p.is_finite() && bounds.contains(p)).then_some(p))
        .collect();

    let banned_hit = live.iter().flatten().any(|&p| {
        sample.banned_regions.iter().any(|b| b.shape.contains(p))
    });
    if banned_hit {
        return Verdict::failure(FailedRule::Banned);
    }

    if sample.is_ranked() {
        judge_ranked(&sample.correct_regions, &live)
    } else {
        let covered = sample
            .correct_regions
            .iter()
            .all(|r| live.iter().flatten().any(|&p| r.shape.contains(p)));
        if covered {
            Verdict::SUCCESS
        } else {
            Verdict::failure(FailedRule::UncoveredRegion)
        }
    }
}

fn judge_ranked(regions: &[CorrectRegion], points: &[Option<Point>]) -> Verdict {
    let ranks: BTreeSet<u32> = regions.iter().filter_map(|r| r.rank).collect();
    let hits_rank = |p: Point, rank: u32| {
        regions
            .iter()
            .any(|r| r.rank == Some(rank) && r.shape.contains(p))
    };

    // Greedy earliest matching is optimal for subsequence existence.
    let mut pending = ranks.iter().copied().peekable();
    for p in points.iter().flatten() {
        match pending.peek() {
            Some(&rank) if hits_rank(*p, rank) => {
                pending.next();
            }
            Some(_) => {}
            None => break,
        }
    }
    if pending.peek().is_none() {
        return Verdict::SUCCESS;
    }
    let every_rank_touched = ranks
        .iter()
        .all(|&rank| points.iter().flatten().any(|&p| hits_rank(p, rank)));
    if every_rank_touched {
        Verdict::failure(FailedRule::OrderMismatch)
    } else {
        Verdict::failure(FailedRule::UncoveredRegion)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalityScore {
    pub total: usize,
    pub successes: usize,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub overall: f64,
    pub total: usize,
    pub successes: usize,
    pub per_modality: BTreeMap<Modality, ModalityScore>,
    pub per_sample: BTreeMap<String, Verdict>,
}

impl Report {
    /// Overall rate as a percentage with one decimal place.
    pub fn overall_percent(&self) -> String {
        format!("{:.1}", self.overall * 100.0)
    }
}

/// Judges every sample; missing predictions count as failures.
pub fn evaluate_suite(samples: &[BenchmarkSample], predictions: &[Prediction]) -> Result<Report> {
    let mut by_id: HashMap<&str, &Prediction> = HashMap::with_capacity(predictions.len());
    for p in predictions {
        if by_id.insert(p.sample_id.as_str(), p).is_some() {
            return Err(Error::InvalidArgument(format!(
                "duplicate prediction for sample `{}`",
                p.sample_id
            )));
        }
    }
    let known: HashSet<&str> = samples.iter().map(|s| s.id.as_str()).collect();
    if known.len() != samples.len() {
        return Err(Error::InvalidArgument("duplicate sample ids in suite".into()));
    }
    if let Some(stray) = predictions.iter().find(|p| !known.contains(p.sample_id.as_str())) {
        return Err(Error::InvalidArgument(format!(
            "prediction refers to unknown sample `{}`",
            stray.sample_id
        )));
    }

    let verdicts: Vec<Verdict> = samples
        .par_iter()
        .map(|s| match by_id.get(s.id.as_str()) {
            Some(p) => judge_points(s, &p.points),
            None => Verdict::failure(FailedRule::Empty),
        })
        .collect();

    let mut per_modality: BTreeMap<Modality, ModalityScore> = BTreeMap::new();
    let mut per_sample = BTreeMap::new();
    let mut successes = 0;
    for (s, v) in samples.iter().zip(&verdicts) {
        let entry = per_modality.entry(s.modality).or_insert(ModalityScore {
            total: 0,
            successes: 0,
            success_rate: 0.0,
        });
        entry.total += 1;
        if v.success {
            entry.successes += 1;
            successes += 1;
        }
        per_sample.insert(s.id.clone(), *v);
    }
    for score in per_modality.values_mut() {
        score.success_rate = score.successes as f64 / score.total as f64;
    }
    let total = samples.len();
    Ok(Report {
        overall: if total == 0 {
            0.0
        } else {
            successes as f64 / total as f64
        },
        total,
        successes,
        per_modality,
        per_sample,
    })
}

#[derive(Debug, Deserialize)]
struct SuiteFile {
    samples: Vec<serde_json::Value>,
}

pub fn parse_suite(text: &str) -> Result<Vec<BenchmarkSample>> {
    let file: SuiteFile =
        serde_json::from_str(text).map_err(|e| Error::schema("suite", e.to_string()))?;
    let mut samples = Vec::with_capacity(file.samples.len());
    for (i, raw) in file.samples.into_iter().enumerate() {
        let location = match raw.get("id").and_then(|v| v.as_str()) {
            Some(id) => format!("samples[{i}] (id={id})"),
            None => format!("samples[{i}]"),
        };
        let sample: BenchmarkSample =
            serde_json::from_value(raw).map_err(|e| Error::schema(&location, e.to_string()))?;
        sample.validate(&format!("samples[{i}]"))?;
        samples.push(sample);
    }
    let mut seen = HashSet::new();
    for s in &samples {
        if !seen.insert(s.id.as_str()) {
            return Err(Error::schema(format!("samples (id={})", s.id), "duplicate sample id"));
        }
    }
    Ok(samples)
}

pub fn load_suite(path: &Path) -> Result<Vec<BenchmarkSample>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_suite(&text)
}

pub fn write_suite(path: &Path, samples: &[BenchmarkSample]) -> Result<()> {
    let body = serde_json::json!({ "samples": samples });
    let text = serde_json::to_string_pretty(&body)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn parse_predictions(text: &str) -> Result<Vec<Prediction>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str::<Prediction>(line)
                .map_err(|e| Error::schema(format!("predictions line {}", i + 1), e.to_string()))
        })
        .collect()
}

pub fn load_predictions(path: &Path) -> Result<Vec<Prediction>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_predictions(&text)
}
