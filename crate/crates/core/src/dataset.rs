//! Training records, JSONL shards with a checksummed manifest, weighted
//! source mixing and dataset statistics.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use indexmap::IndexMap;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::modality::Modality;
use crate::trace::{
    serialize_coordinate_map, validate_trace, ActionTrace, CoordinateSpace, ElementRef, TraceRecord, Violation,
};

pub const MANIFEST_NAME: &str = "manifest.json";
pub const IMAGE_DIR: &str = "images";
pub const DEFAULT_SHARD_SIZE: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub prompt: String,
    pub response: String,
    #[serde(serialize_with = "serialize_coordinate_map")]
    pub coordinate_map: IndexMap<String, f64>,
    #[serde(default)]
    pub used_elements: Vec<ElementRef>,
    #[serde(rename = "action-type", alias = "action-types")]
    pub action_type: String,
    /// Path of the screenshot relative to the dataset directory.
    pub image: String,
    pub modality: Modality,
    #[serde(default)]
    pub coordinate_space: CoordinateSpace,
    /// `[width, height]` of the image, kept so records validate on their own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_size: Option<[u32; 2]>,
    /// Detailed-task id for template records.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<String>,
}

impl DatasetRecord {
    pub fn from_trace(trace: &ActionTrace, prompt: &str, image: &str, modality: Modality, size: (u32, u32)) -> Self {
        Self {
            prompt: prompt.to_string(),
            response: trace.response(),
            coordinate_map: trace.coordinate_map.clone(),
            used_elements: trace.used_elements.clone(),
            action_type: trace.action_type.clone(),
            image: image.to_string(),
            modality,
            coordinate_space: trace.coordinate_space,
            image_size: Some([size.0, size.1]),
            task: None,
        }
    }

    pub fn trace_record(&self) -> TraceRecord {
        TraceRecord {
            prompt: self.prompt.clone(),
            response: self.response.clone(),
            coordinate_map: self.coordinate_map.clone(),
            used_elements: self.used_elements.clone(),
            action_type: self.action_type.clone(),
            coordinate_space: self.coordinate_space,
        }
    }

    pub fn to_trace(&self) -> Result<ActionTrace> {
        ActionTrace::from_record(&self.trace_record())
    }

    /// Runs trace validation. With `elements` unset, element references are
    /// not checked; without an image size only normalized ranges are.
    pub fn validate(&self, elements: Option<&[ElementRef]>) -> Result<Vec<Violation>> {
        let trace = self.to_trace()?;
        let known = elements.unwrap_or(&self.used_elements);
        let size = self
            .image_size
            .map(|[w, h]| (w as f64, h as f64))
            .unwrap_or((f64::INFINITY, f64::INFINITY));
        Ok(validate_trace(&trace, known, size, self.coordinate_space).violations)
    }

    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes` to `path` through a temp file in the same directory.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Stores a PNG under `images/<sha256>.png` and returns that relative path.
pub fn store_image(dir: &Path, png: &[u8]) -> Result<String> {
    let rel = format!("{IMAGE_DIR}/{}.png", sha256_hex(png));
    let path = dir.join(&rel);
    if !path.exists() {
        atomic_write(&path, png)?;
    }
    Ok(rel)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardEntry {
    pub name: String,
    pub count: usize,
    pub checksum: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Totals {
    pub records: usize,
    pub by_modality: BTreeMap<Modality, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub shards: Vec<ShardEntry>,
    pub totals: Totals,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_NAME);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::schema(path.display().to_string(), e.to_string()))
    }
}

fn shard_name(i: usize) -> String {
    format!("shard-{i:05}.jsonl")
}

/// Streaming shard writer. Records are buffered up to `shard_size`, each full
/// shard is written atomically, and the manifest goes out on `finish`. If any
/// write fails, the shards produced so far are removed.
pub struct ShardWriter {
    dir: PathBuf,
    shard_size: usize,
    buf: String,
    buffered: usize,
    manifest: Manifest,
}

impl ShardWriter {
    pub fn new(dir: &Path, shard_size: usize) -> Result<Self> {
        if shard_size == 0 {
            return Err(Error::InvalidArgument("shard size must be positive".into()));
        }
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            shard_size,
            buf: String::new(),
            buffered: 0,
            manifest: Manifest::default(),
        })
    }

    pub fn push(&mut self, record: &DatasetRecord) -> Result<()> {
        let res = self.push_inner(record);
        if res.is_err() {
            self.rollback();
        }
        res
    }

    fn push_inner(&mut self, record: &DatasetRecord) -> Result<()> {
        if !self.dir.join(&record.image).is_file() {
            return Err(Error::schema(
                format!("record {}", self.manifest.totals.records),
                format!("image `{}` does not resolve under {}", record.image, self.dir.display()),
            ));
        }
        self.buf.push_str(&record.to_json_line()?);
        self.buf.push('\n');
        self.buffered += 1;
        self.manifest.totals.records += 1;
        *self.manifest.totals.by_modality.entry(record.modality).or_default() += 1;
        if self.buffered == self.shard_size {
            self.flush()?;
        }
        Ok(())
    }

    fn flush(&mut self) -> Result<()> {
        if self.buffered == 0 {
            return Ok(());
        }
        let name = shard_name(self.manifest.shards.len());
        atomic_write(&self.dir.join(&name), self.buf.as_bytes())?;
        self.manifest.shards.push(ShardEntry {
            name,
            count: self.buffered,
            checksum: sha256_hex(self.buf.as_bytes()),
        });
        self.buf.clear();
        self.buffered = 0;
        Ok(())
    }

    fn rollback(&mut self) {
        for s in &self.manifest.shards {
            let _ = fs::remove_file(self.dir.join(&s.name));
        }
        let _ = fs::remove_file(self.dir.join(MANIFEST_NAME));
        self.manifest = Manifest::default();
        self.buf.clear();
        self.buffered = 0;
    }

    pub fn finish(mut self) -> Result<Manifest> {
        let res = self.flush().and_then(|_| {
            let text = serde_json::to_string_pretty(&self.manifest)?;
            atomic_write(&self.dir.join(MANIFEST_NAME), text.as_bytes())
        });
        match res {
            Ok(()) => Ok(std::mem::take(&mut self.manifest)),
            Err(e) => {
                self.rollback();
                Err(e)
            }
        }
    }
}

pub fn write_shards(records: &[DatasetRecord], dir: &Path, shard_size: usize) -> Result<Manifest> {
    let mut w = ShardWriter::new(dir, shard_size)?;
    for r in records {
        w.push(r)?;
    }
    w.finish()
}

/// Checks every shard against its manifest checksum and count.
pub fn verify_manifest(dir: &Path) -> Result<Manifest> {
    let manifest = Manifest::load(dir)?;
    for s in &manifest.shards {
        let path = dir.join(&s.name);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        if sha256_hex(&bytes) != s.checksum {
            return Err(Error::schema(&s.name, "checksum mismatch"));
        }
        let lines = bytes.split(|&b| b == b'\n').filter(|l| !l.is_empty()).count();
        if lines != s.count {
            return Err(Error::schema(&s.name, format!("manifest says {} records, found {lines}", s.count)));
        }
    }
    Ok(manifest)
}

/// One shard line that failed to parse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    pub shard: String,
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} line {}: {}", self.shard, self.line, self.message)
    }
}

/// Parses one JSONL shard, collecting bad lines (1-based) instead of failing.
pub fn parse_shard(name: &str, text: &str) -> (Vec<DatasetRecord>, Vec<LineError>) {
    let mut ok = Vec::new();
    let mut bad = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<DatasetRecord>(line) {
            Ok(r) => ok.push(r),
            Err(e) => bad.push(LineError {
                shard: name.to_string(),
                line: i + 1,
                message: e.to_string(),
            }),
        }
    }
    (ok, bad)
}

/// Reads all records listed in the manifest, in shard order.
pub fn read_shards(dir: &Path) -> Result<Vec<DatasetRecord>> {
    let manifest = Manifest::load(dir)?;
    let mut out = Vec::with_capacity(manifest.totals.records);
    for s in &manifest.shards {
        let path = dir.join(&s.name);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let (recs, bad) = parse_shard(&s.name, &text);
        if let Some(b) = bad.first() {
            return Err(Error::schema(format!("{} line {}", b.shard, b.line), b.message.clone()));
        }
        out.extend(recs);
    }
    Ok(out)
}

/// Source slots of the training mix. `OpenCua` is an external passthrough.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MixSource {
    #[serde(rename = "GUI")]
    Gui,
    Text,
    Table,
    Canvas,
    Image,
    #[serde(rename = "OpenCUA")]
    OpenCua,
}

impl MixSource {
    pub const ALL: [MixSource; 6] = [
        MixSource::Gui,
        MixSource::Text,
        MixSource::Table,
        MixSource::Canvas,
        MixSource::Image,
        MixSource::OpenCua,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MixSource::OpenCua => "OpenCUA",
            other => other.modality().expect("synthesized slot").as_str(),
        }
    }

    pub fn modality(self) -> Option<Modality> {
        Some(match self {
            MixSource::Gui => Modality::Gui,
            MixSource::Text => Modality::Text,
            MixSource::Table => Modality::Table,
            MixSource::Canvas => Modality::Canvas,
            MixSource::Image => Modality::Image,
            MixSource::OpenCua => return None,
        })
    }
}

impl From<Modality> for MixSource {
    fn from(m: Modality) -> Self {
        match m {
            Modality::Gui => MixSource::Gui,
            Modality::Text => MixSource::Text,
            Modality::Table => MixSource::Table,
            Modality::Canvas => MixSource::Canvas,
            Modality::Image => MixSource::Image,
        }
    }
}

impl fmt::Display for MixSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MixSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("opencua") {
            return Ok(MixSource::OpenCua);
        }
        s.parse::<Modality>().map(MixSource::from)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixWeights(pub BTreeMap<MixSource, f64>);

impl Default for MixWeights {
    fn default() -> Self {
        Self(
            [
                (MixSource::Gui, 0.34),
                (MixSource::Text, 0.25),
                (MixSource::Table, 0.10),
                (MixSource::Canvas, 0.10),
                (MixSource::Image, 0.15),
                (MixSource::OpenCua, 0.06),
            ]
            .into_iter()
            .collect(),
        )
    }
}

impl MixWeights {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(weights: BTreeMap<MixSource, f64>) -> Result<Self> {
        let w = Self(weights);
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((k, v)) = self.0.iter().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidArgument(format!("weight for {k} is {v}")));
        }
        let sum: f64 = self.0.values().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::InvalidArgument(format!("weights sum to {sum}, not 1")));
        }
        Ok(())
    }

    /// Parses `GUI=0.5,Text=0.5` style overrides.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("`{part}` is not source=weight")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad weight `{v}`")))?;
            map.insert(k.trim().parse()?, v);
        }
        Self::new(map)
    }

    pub fn get(&self, s: MixSource) -> f64 {
        self.0.get(&s).copied().unwrap_or(0.0)
    }
}

/// Interleaves several record streams. Each emission picks its source at
/// random in proportion to the weights of the sources still live.
pub struct Mixer<T, R> {
    sources: Vec<(MixSource, f64, Box<dyn Iterator<Item = T> + Send>)>,
    rng: R,
}

/// Builds a mixer over `sources`. Every source needs a weight. Weights for
/// slots with no stream (such as `OpenCUA` by default) are dropped and the
/// rest renormalized.
pub fn mix_stream<T, R: Rng>(
    sources: Vec<(MixSource, Box<dyn Iterator<Item = T> + Send>)>,
    weights: &MixWeights,
    rng: R,
) -> Result<Mixer<T, R>> {
    weights.validate()?;
    let mut seen = std::collections::BTreeSet::new();
    for (s, _) in &sources {
        if !seen.insert(*s) {
            return Err(Error::InvalidArgument(format!("source {s} given twice")));
        }
        if !weights.0.contains_key(s) {
            return Err(Error::InvalidArgument(format!("no weight for source {s}")));
        }
    }
    for s in weights.0.keys().filter(|k| !seen.contains(k)) {
        if weights.get(*s) > 0.0 {
            log::warn!("mix weight for {s} has no source; renormalizing");
        }
    }
    let sources = sources
        .into_iter()
        .map(|(s, it)| (s, weights.get(s), it))
        .filter(|(_, w, _)| *w > 0.0)
        .collect();
    Ok(Mixer { sources, rng })
}

impl<T, R: Rng> Mixer<T, R> {
    /// Live sources and their current normalized weights.
    pub fn live_weights(&self) -> Vec<(MixSource, f64)> {
        let total: f64 = self.sources.iter().map(|s| s.1).sum();
        self.sources.iter().map(|s| (s.0, s.1 / total)).collect()
    }

    fn draw(&mut self) -> usize {
        let total: f64 = self.sources.iter().map(|s| s.1).sum();
        let mut u = self.rng.gen::<f64>() * total;
        for (i, s) in self.sources.iter().enumerate() {
            if u < s.1 {
                return i;
            }
            u -= s.1;
        }
        self.sources.len() - 1
    }
}

impl<T, R: Rng> Iterator for Mixer<T, R> {
    type Item = (MixSource, T);

    fn next(&mut self) -> Option<Self::Item> {
        while !self.sources.is_empty() {
            let i = self.draw();
            match self.sources[i].2.next() {
                Some(item) => return Some((self.sources[i].0, item)),
                None => {
                    let (s, _, _) = self.sources.remove(i);
                    log::warn!("mix source {s} exhausted; renormalizing the rest");
                }
            }
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StatsReport {
    pub total: usize,
    pub invalid: usize,
    pub manifest_total: usize,
    pub by_modality: BTreeMap<String, usize>,
    /// modality → action type → key-point class → count.
    pub breakdown: BTreeMap<String, BTreeMap<String, BTreeMap<String, usize>>>,
}

/// Counts records by modality, action type and key-point class. Records whose
/// trace fails to parse or validate count as invalid, and are still added to
/// the breakdown under class `invalid`.
pub fn dataset_stats(dir: &Path) -> Result<StatsReport> {
    let manifest = verify_manifest(dir)?;
    let records = read_shards(dir)?;
    let mut r = StatsReport {
        manifest_total: manifest.totals.records,
        ..Default::default()
    };
    for rec in &records {
        r.total += 1;
        *r.by_modality.entry(rec.modality.to_string()).or_default() += 1;
        let class = match rec.to_trace() {
            Ok(t) => match (t.class(), rec.validate(None)) {
                (Ok(c), Ok(v)) if v.is_empty() => format!("{c:?}"),
                _ => "invalid".to_string(),
            },
            Err(_) => "invalid".to_string(),
        };
        if class == "invalid" {
            r.invalid += 1;
        }
        *r.breakdown
            .entry(rec.modality.to_string())
            .or_default()
            .entry(rec.action_type.clone())
            .or_default()
            .entry(class)
            .or_default() += 1;
    }
    Ok(r)
}
