use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::sync_channel;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::RngCore;
use serde::Deserialize;

use groundsynth::canvas::{generate_scene_sized, scene_rng};
use groundsynth::dataset::{
    atomic_write, dataset_stats, mix_stream, parse_shard, read_shards, store_image, verify_manifest, DatasetRecord,
    Manifest, MixSource, MixWeights, ShardWriter, DEFAULT_SHARD_SIZE, MANIFEST_NAME,
};
use groundsynth::eval::{evaluate_suite, load_predictions, load_suite};
use groundsynth::image_annot::{build_region, synthetic_regions, ImageAnnotation};
use groundsynth::modality::Modality;
use groundsynth::table::{generate_table, TableGenConfig};
use groundsynth::taskgen::{generate_all, SceneContent, TaskScene};
use groundsynth::text::{generate_page, FontLibrary, TextGenConfig};
use groundsynth::Error as CoreError;

/// Synthetic grounding data: scene generation, trace records, evaluation.
#[derive(Parser)]
#[command(name = "groundsynth", version, about)]
struct Cli {
    /// More log output (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate scenes, annotations and records for one modality.
    Gen(GenArgs),
    /// Score predictions against a benchmark suite.
    Eval {
        /// Benchmark suite: a JSON object with a `samples` array.
        #[arg(long)]
        suite: PathBuf,
        /// Predictions, one JSON object per line.
        #[arg(long)]
        predictions: PathBuf,
        /// Where to write the JSON report.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Check every record in a dataset directory or shard files.
    Validate {
        /// Dataset directories or individual .jsonl shards.
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Per-modality, action-type and key-point-class counts.
    Stats {
        dir: PathBuf,
        /// Print the full report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Draw a weighted mixture of existing datasets into a new one.
    Mix(MixArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GenModality {
    Canvas,
    Table,
    Text,
    Image,
}

impl GenModality {
    fn modality(self) -> Modality {
        match self {
            GenModality::Canvas => Modality::Canvas,
            GenModality::Table => Modality::Table,
            GenModality::Text => Modality::Text,
            GenModality::Image => Modality::Image,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    modality: GenModality,
    /// JSON file with defaults for any of the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    count: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    shard_size: Option<usize>,
    /// Fixed image width (canvas, table, text).
    #[arg(long)]
    width: Option<u32>,
    /// Fixed image height (canvas, table, text).
    #[arg(long)]
    height: Option<u32>,
    /// Directory of .ttf/.otf fonts for text pages; a built-in bitmap font
    /// is used otherwise.
    #[arg(long)]
    font_dir: Option<PathBuf>,
    /// Regions per synthetic image.
    #[arg(long)]
    regions: Option<usize>,
    /// Also query an external model with the modality's system prompt
    /// (endpoint read from GROUNDSYNTH_LLM_* variables).
    #[arg(long)]
    llm: bool,
}

/// Optional config file contents. Flags take precedence.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    seed: Option<u64>,
    out: Option<PathBuf>,
    count: Option<u64>,
    workers: Option<usize>,
    shard_size: Option<usize>,
    width: Option<u32>,
    height: Option<u32>,
    font_dir: Option<PathBuf>,
    regions: Option<usize>,
    llm: Option<bool>,
    weights: Option<String>,
}

struct GenPlan {
    modality: Modality,
    seed: u64,
    out: PathBuf,
    count: u64,
    workers: usize,
    shard_size: usize,
    size: Option<(u32, u32)>,
    font_dir: Option<PathBuf>,
    regions: usize,
    llm: bool,
}

#[derive(Args)]
struct MixArgs {
    /// Input dataset as SOURCE=DIR, e.g. Canvas=out/canvas. Repeatable.
    #[arg(long = "source", required = true)]
    sources: Vec<String>,
    /// Weights as SOURCE=W pairs, defaulting to the built-in mixture.
    #[arg(long)]
    weights: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    count: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SHARD_SIZE)]
    shard_size: usize,
}

/// Exit status contract: 1 for data that fails validation, 2 for bad
/// configuration or I/O.
enum Failure {
    Invalid(anyhow::Error),
    Config(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<CoreError>() {
            Some(CoreError::Schema { .. } | CoreError::TraceParse(_)) => Failure::Invalid(e),
            _ => Failure::Config(e),
        }
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        Failure::from(anyhow::Error::from(e))
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let res = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Eval {
            suite,
            predictions,
            report,
        } => cmd_eval(&suite, &predictions, report.as_deref()),
        Command::Validate { paths } => cmd_validate(&paths),
        Command::Stats { dir, json } => cmd_stats(&dir, json),
        Command::Mix(a) => cmd_mix(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load_config(path: Option<&Path>) -> anyhow::Result<RunConfig> {
    let Some(path) = path else { return Ok(RunConfig::default()) };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

fn plan(a: GenArgs) -> anyhow::Result<GenPlan> {
    let cfg = load_config(a.config.as_deref())?;
    let width = a.width.or(cfg.width);
    let height = a.height.or(cfg.height);
    let size = match (width, height) {
        (Some(w), Some(h)) => Some((w, h)),
        (None, None) => None,
        _ => bail!("--width and --height must be given together"),
    };
    let workers = a.workers.or(cfg.workers).unwrap_or(1);
    if workers == 0 {
        bail!("--workers must be at least 1");
    }
    let shard_size = a.shard_size.or(cfg.shard_size).unwrap_or(DEFAULT_SHARD_SIZE);
    if shard_size == 0 {
        bail!("--shard-size must be at least 1");
    }
    if cfg.weights.is_some() {
        log::warn!("weights in the config only apply to `mix`");
    }
    Ok(GenPlan {
        modality: a.modality.modality(),
        seed: a.seed.or(cfg.seed).unwrap_or(0),
        out: a
            .out
            .or(cfg.out)
            .ok_or_else(|| anyhow!("an output directory is required (--out)"))?,
        count: a.count.or(cfg.count).unwrap_or(0),
        workers,
        shard_size,
        size,
        font_dir: a.font_dir.or(cfg.font_dir),
        regions: a.regions.or(cfg.regions).unwrap_or(4),
        llm: a.llm || cfg.llm.unwrap_or(false),
    })
}

fn ensure_fresh(dir: &Path) -> anyhow::Result<()> {
    if dir.join(MANIFEST_NAME).exists() {
        bail!("{} already holds a dataset; use a fresh directory", dir.display());
    }
    Ok(())
}

/// One generated scene ready for the writer.
struct SceneOutput {
    scene: TaskScene,
    records: Vec<DatasetRecord>,
}

/// Per-scene seed for task generation, independent of the scene stream.
fn task_seed(seed: u64, index: u64) -> u64 {
    scene_rng(seed ^ 0x7461_736b_6765_6e00, index).next_u64()
}

struct Generator {
    table: TableGenConfig,
    text: TextGenConfig,
}

impl Generator {
    fn new(p: &GenPlan) -> anyhow::Result<Self> {
        let mut table = TableGenConfig::default();
        let mut text = TextGenConfig::default();
        if let Some(s) = p.size {
            table.target = s;
            text.size = Some(s);
        }
        if let Some(dir) = &p.font_dir {
            text.fonts = FontLibrary::with_dir(dir)?;
            if text.fonts.is_empty() {
                bail!("no usable fonts in {}", dir.display());
            }
        }
        if p.size.is_some() && p.modality == Modality::Image {
            log::warn!("size overrides do not apply to synthetic images");
        }
        Ok(Self { table, text })
    }

    fn scene(&self, p: &GenPlan, i: u64) -> anyhow::Result<SceneOutput> {
        let annotations = p.out.join("annotations");
        let (scene, annotation) = match p.modality {
            Modality::Canvas => {
                let r = generate_scene_sized(p.seed, i, p.size)?;
                let image = store_image(&p.out, &r.png()?)?;
                let a = r.annotation()?;
                let json = serde_json::to_string_pretty(&serde_json::json!({"image": image, "annotation": a}))?;
                let size = (a.canvas.width, a.canvas.height);
                (TaskScene { image, size, content: SceneContent::Canvas(a) }, json)
            }
            Modality::Table => {
                let t = generate_table(p.seed, i, &self.table)?;
                let image = store_image(&p.out, &t.rendered.image.to_png()?)?;
                let a = t.annotation(&image);
                let json = serde_json::to_string_pretty(&a)?;
                let size = (a.size[0], a.size[1]);
                (TaskScene { image, size, content: SceneContent::Table(a) }, json)
            }
            Modality::Text => {
                let g = generate_page(p.seed, i, &self.text)?;
                let image = store_image(&p.out, &g.image.to_png()?)?;
                let json = serde_json::to_string_pretty(&g.annotation(&image))?;
                let size = (g.image.width(), g.image.height());
                (TaskScene { image, size, content: SceneContent::Text(g.page) }, json)
            }
            Modality::Image => {
                let s = synthetic_regions(p.seed, i, p.regions);
                let image = store_image(&p.out, &s.image.to_png()?)?;
                let regions = s
                    .regions
                    .iter()
                    .enumerate()
                    .map(|(k, (m, c))| build_region(m, c, &format!("region_{k}")))
                    .collect::<groundsynth::Result<Vec<_>>>()?;
                let size = (s.image.width(), s.image.height());
                let a = ImageAnnotation {
                    image: image.clone(),
                    size: [size.0, size.1],
                    regions: regions.clone(),
                };
                let json = serde_json::to_string_pretty(&a)?;
                (TaskScene { image, size, content: SceneContent::Image(regions) }, json)
            }
            Modality::Gui => bail!("GUI scenes are not synthesized"),
        };
        atomic_write(&annotations.join(format!("{i:06}.json")), annotation.as_bytes())?;
        let records = generate_all(&scene, task_seed(p.seed, i))?
            .into_iter()
            .map(|g| g.record)
            .collect();
        Ok(SceneOutput { scene, records })
    }
}

fn cmd_gen(a: GenArgs) -> CmdResult {
    let p = plan(a).map_err(Failure::Config)?;
    ensure_fresh(&p.out).map_err(Failure::Config)?;
    let gen = Generator::new(&p).map_err(Failure::Config)?;
    let mut writer = ShardWriter::new(&p.out, p.shard_size)?;
    let next = AtomicU64::new(0);
    let stop = AtomicBool::new(false);
    let (tx, rx) = sync_channel::<(u64, anyhow::Result<SceneOutput>)>(p.workers * 2);
    let mut scenes = Vec::new();
    let mut done = 0u64;

    let result: anyhow::Result<()> = std::thread::scope(|s| {
        for _ in 0..p.workers {
            let tx = tx.clone();
            let (gen, p, next, stop) = (&gen, &p, &next, &stop);
            s.spawn(move || loop {
                if stop.load(Ordering::SeqCst) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= p.count {
                    break;
                }
                let out = gen.scene(p, i);
                if tx.send((i, out)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        // Records leave in scene order whatever order workers finish in.
        let mut pending = BTreeMap::new();
        let mut err = None;
        for (i, out) in rx {
            if err.is_some() {
                continue;
            }
            pending.insert(i, out);
            while let Some(out) = pending.remove(&done) {
                let step = out.with_context(|| format!("scene {done}")).and_then(|o| {
                    for r in &o.records {
                        writer.push(r)?;
                    }
                    scenes.push(o.scene);
                    Ok(())
                });
                if let Err(e) = step {
                    stop.store(true, Ordering::SeqCst);
                    err = Some(e);
                    break;
                }
                done += 1;
                if p.count >= 10 && done.is_multiple_of((p.count / 10).max(1)) {
                    eprintln!("progress: {done}/{} scenes", p.count);
                }
            }
        }
        err.map_or(Ok(()), Err)
    });
    result?;

    if p.llm {
        llm_records(&p, &scenes, &mut writer)?;
    }
    let manifest = writer.finish()?;
    print_manifest(&p.out, &manifest, Some(p.count));
    Ok(())
}

#[cfg(feature = "http")]
fn llm_records(p: &GenPlan, scenes: &[TaskScene], writer: &mut ShardWriter) -> anyhow::Result<()> {
    use groundsynth::taskgen::{build_llm_request, parse_llm_response, run_requests, ExchangeLog, HttpTransport};
    let mut transport = HttpTransport::from_env()?;
    transport.image_root = Some(p.out.clone());
    let requests = scenes
        .iter()
        .map(|s| build_llm_request(p.modality, s))
        .collect::<groundsynth::Result<Vec<_>>>()?;
    let log = ExchangeLog::from_env()?;
    let replies = run_requests(&transport, &requests, p.workers.max(4), &log);
    let (mut accepted, mut rejected) = (0usize, 0usize);
    for (scene, reply) in scenes.iter().zip(replies) {
        match reply {
            Ok(text) => {
                let parsed = parse_llm_response(&text, scene);
                rejected += parsed.rejected.len();
                for note in &parsed.notes {
                    log::warn!("{}: {note}", scene.image);
                }
                for r in &parsed.accepted {
                    writer.push(r)?;
                    accepted += 1;
                }
            }
            Err(e) => log::warn!("request for {} failed: {e}", scene.image),
        }
    }
    eprintln!("llm: {accepted} accepted, {rejected} rejected");
    Ok(())
}

#[cfg(not(feature = "http"))]
fn llm_records(_: &GenPlan, _: &[TaskScene], _: &mut ShardWriter) -> anyhow::Result<()> {
    bail!("this build has no HTTP transport; rebuild with `--features http`")
}

fn print_manifest(dir: &Path, m: &Manifest, scenes: Option<u64>) {
    if let Some(n) = scenes {
        println!("scenes: {n}");
    }
    println!("records: {}", m.totals.records);
    for (k, v) in &m.totals.by_modality {
        println!("  {k}: {v}");
    }
    println!("shards: {}", m.shards.len());
    println!("manifest: {}", dir.join(MANIFEST_NAME).display());
}

fn cmd_eval(suite: &Path, predictions: &Path, report_path: Option<&Path>) -> CmdResult {
    let samples = load_suite(suite)?;
    let preds = load_predictions(predictions)?;
    let report = evaluate_suite(&samples, &preds)?;
    for (m, s) in &report.per_modality {
        println!("{m}: {:.1} ({}/{})", s.success_rate * 100.0, s.successes, s.total);
    }
    println!("overall: {}", report.overall_percent());
    if let Some(path) = report_path {
        let json = serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)?;
        atomic_write(path, json.as_bytes())?;
    }
    Ok(())
}

fn shard_files(path: &Path) -> anyhow::Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .with_context(|| format!("reading {}", path.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    files.sort();
    Ok(files)
}

fn cmd_validate(paths: &[PathBuf]) -> CmdResult {
    let mut summary: BTreeMap<String, usize> = BTreeMap::new();
    let (mut records, mut bad) = (0usize, 0usize);
    for path in paths {
        if path.is_dir() && path.join(MANIFEST_NAME).exists() {
            if let Err(e) = verify_manifest(path) {
                println!("{}: {e}", path.display());
                *summary.entry("ManifestMismatch".into()).or_default() += 1;
                bad += 1;
            }
        }
        for file in shard_files(path).map_err(Failure::Config)? {
            let name = file.display().to_string();
            let text = fs::read_to_string(&file).map_err(|e| CoreError::io(&file, e))?;
            let (parsed, errors) = parse_shard(&name, &text);
            for e in &errors {
                println!("{}:{}: {}", e.shard, e.line, e.message);
                *summary.entry("ParseError".into()).or_default() += 1;
            }
            bad += errors.len();
            records += parsed.len() + errors.len();
            for (k, r) in parsed.iter().enumerate() {
                let violations = match r.validate(None) {
                    Ok(v) => v.iter().map(|v| (v.name().to_string(), format!("{v:?}"))).collect(),
                    Err(e) => vec![("TraceParse".to_string(), e.to_string())],
                };
                if !violations.is_empty() {
                    bad += 1;
                }
                for (n, detail) in violations {
                    println!("{name}: record {}: {n}: {detail}", k + 1);
                    *summary.entry(n).or_default() += 1;
                }
            }
        }
    }
    println!("checked {records} records, {bad} with problems");
    for (k, v) in &summary {
        println!("  {k}: {v}");
    }
    if bad > 0 {
        return Err(Failure::Invalid(anyhow!("{bad} records failed validation")));
    }
    Ok(())
}

fn cmd_stats(dir: &Path, json: bool) -> CmdResult {
    let r = dataset_stats(dir)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&r).map_err(anyhow::Error::from)?);
        return Ok(());
    }
    println!("records: {} ({} invalid, manifest {})", r.total, r.invalid, r.manifest_total);
    for (m, actions) in &r.breakdown {
        println!("{m}: {}", r.by_modality.get(m).copied().unwrap_or(0));
        for (action, classes) in actions {
            let parts: Vec<String> = classes.iter().map(|(c, n)| format!("{c}={n}")).collect();
            println!("  {action}: {}", parts.join(" "));
        }
    }
    Ok(())
}

fn cmd_mix(a: MixArgs) -> CmdResult {
    let cfg = load_config(a.config.as_deref()).map_err(Failure::Config)?;
    let weights = match a.weights.or(cfg.weights) {
        Some(s) => MixWeights::parse(&s)?,
        None => MixWeights::default(),
    };
    ensure_fresh(&a.out).map_err(Failure::Config)?;
    let mut inputs = Vec::new();
    let mut dirs = BTreeMap::new();
    for spec in &a.sources {
        let (name, dir) = spec
            .split_once('=')
            .ok_or_else(|| Failure::Config(anyhow!("--source expects SOURCE=DIR, got {spec:?}")))?;
        let source: MixSource = name.parse()?;
        let dir = PathBuf::from(dir);
        verify_manifest(&dir)?;
        let records = read_shards(&dir)?;
        dirs.insert(source, dir);
        let it: Box<dyn Iterator<Item = DatasetRecord> + Send> = Box::new(records.into_iter());
        inputs.push((source, it));
    }
    let mixer = mix_stream(inputs, &weights, scene_rng(a.seed, 0))?;
    let mut writer = ShardWriter::new(&a.out, a.shard_size)?;
    let mut drawn: BTreeMap<MixSource, usize> = BTreeMap::new();
    for (source, record) in mixer.take(a.count as usize) {
        let from = dirs[&source].join(&record.image);
        let to = a.out.join(&record.image);
        if !to.exists() {
            let bytes = fs::read(&from).map_err(|e| CoreError::io(&from, e))?;
            atomic_write(&to, &bytes)?;
        }
        writer.push(&record)?;
        *drawn.entry(source).or_default() += 1;
    }
    let m = writer.finish()?;
    for (s, n) in &drawn {
        println!("{}: {n}", s.as_str());
    }
    if (m.totals.records as u64) < a.count {
        eprintln!("sources ran out after {} records", m.totals.records);
    }
    print_manifest(&a.out, &m, None);
    Ok(())
}
