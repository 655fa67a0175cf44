use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sico_core::{
    raster, regular_fit_mask, remove_garment, size_adjusted_mask, try_on, BackendConfig,
    BackendMode, Backends, BinaryMask, FixtureRegistry, GarmentInput, GarmentLength,
    GarmentMetadata, GarmentType, LabelMap, PipelineConfig, SizeLabel, UserProfile,
};
use sico_service::ServiceConfig;

mod report;

use report::{MaskReport, TryOnReport};

#[derive(Parser, Debug)]
#[command(name = "sico", version, about = "Size-controllable virtual try-on")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Regular-fit and size-adjusted garment mask from a label map.
    Mask(MaskArgs),
    /// Erase the garment the subject currently wears.
    Remove(RemoveArgs),
    /// Full try-on of one garment at one size.
    Tryon(TryOnArgs),
    /// Run the HTTP service until SIGINT/SIGTERM.
    Serve(ServeArgs),
}

#[derive(Args, Debug, Clone, Copy)]
struct GarmentFlags {
    #[arg(long = "type", value_parser = parse_type)]
    garment_type: GarmentType,
    #[arg(long, value_parser = parse_length)]
    length: GarmentLength,
}

impl GarmentFlags {
    fn meta(self) -> GarmentMetadata {
        GarmentMetadata::new(self.garment_type, self.length)
    }
}

#[derive(Args, Debug)]
struct MaskArgs {
    /// Label PNG; its table is read from the `.json` file of the same stem.
    #[arg(long)]
    labels: PathBuf,
    #[command(flatten)]
    garment: GarmentFlags,
    #[arg(long, value_parser = parse_size)]
    true_size: SizeLabel,
    #[arg(long, value_parser = parse_size)]
    size: SizeLabel,
    /// Adjusted mask PNG.
    #[arg(long)]
    out: PathBuf,
    /// Report path; defaults to `--out` with a `.json` extension.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Backend {
    Mock,
    Http,
}

#[derive(Args, Debug)]
struct SubjectFlags {
    #[arg(long)]
    image: PathBuf,
    /// Label PNG for the subject; required for mock backends.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Garment mask the mock segmenter answers with. Defaults to
    /// `truth_garment_mask.png` next to the labels, when present.
    #[arg(long)]
    truth_mask: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "mock")]
    backend: Backend,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct RemoveArgs {
    #[command(flatten)]
    subject: SubjectFlags,
    #[command(flatten)]
    garment: GarmentFlags,
    /// Image with the garment erased.
    #[arg(long)]
    out: PathBuf,
    /// Also write the refined garment mask here.
    #[arg(long)]
    mask_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TryOnArgs {
    #[command(flatten)]
    subject: SubjectFlags,
    /// Garment product image.
    #[arg(long)]
    garment: PathBuf,
    #[command(flatten)]
    meta: GarmentFlags,
    #[arg(long, value_parser = parse_size)]
    true_top: SizeLabel,
    #[arg(long, value_parser = parse_size)]
    true_bottom: SizeLabel,
    #[arg(long, value_parser = parse_size)]
    size: SizeLabel,
    #[arg(long)]
    out: PathBuf,
    /// Write the six intermediate images into this directory.
    #[arg(long)]
    debug: Option<PathBuf>,
}

/// Flags override the matching `SICO_*` environment variables.
#[derive(Args, Debug)]
struct ServeArgs {
    #[arg(long)]
    catalog: Option<PathBuf>,
    #[arg(long)]
    port: Option<u16>,
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long)]
    canvas_w: Option<u32>,
    #[arg(long)]
    canvas_h: Option<u32>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    queue: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Subject fixture directory for mock backends (repeatable).
    #[arg(long)]
    fixtures: Vec<PathBuf>,
    #[arg(long, value_enum)]
    backend: Option<Backend>,
    /// Store intermediate images with each result.
    #[arg(long)]
    save_intermediates: bool,
}

fn parse_size(s: &str) -> Result<SizeLabel, String> {
    s.parse().map_err(|e: sico_core::Error| e.to_string())
}

fn parse_type(s: &str) -> Result<GarmentType, String> {
    s.parse().map_err(|e: sico_core::Error| e.to_string())
}

fn parse_length(s: &str) -> Result<GarmentLength, String> {
    s.parse().map_err(|e: sico_core::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .init();
    let outcome = match cli.command {
        Command::Mask(a) => cmd_mask(a),
        Command::Remove(a) => cmd_remove(a),
        Command::Tryon(a) => cmd_tryon(a),
        Command::Serve(a) => cmd_serve(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load_labels(path: &Path) -> Result<LabelMap> {
    LabelMap::load(path).with_context(|| format!("cannot read labels {}", path.display()))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    Ok(())
}

fn save_mask(mask: &BinaryMask, path: &Path) -> Result<()> {
    ensure_parent(path)?;
    mask.save(path)
        .with_context(|| format!("cannot write {}", path.display()))
}

fn save_image(img: &sico_core::RgbImage, path: &Path) -> Result<()> {
    ensure_parent(path)?;
    raster::save_png(img, path).with_context(|| format!("cannot write {}", path.display()))
}

fn cmd_mask(a: MaskArgs) -> Result<()> {
    let labels = load_labels(&a.labels)?;
    let meta = a.garment.meta();
    let cfg = PipelineConfig::default();
    let regular = regular_fit_mask(&labels, meta, &cfg).context("regular-fit mask")?;
    let (adjusted, adjustment) = size_adjusted_mask(&regular, a.true_size, a.size, &cfg);
    save_mask(&adjusted, &a.out)?;
    let report = MaskReport::new(meta, a.true_size, a.size, &regular, &adjusted, adjustment);
    let report_path = a.report.unwrap_or_else(|| a.out.with_extension("json"));
    write_json(&report_path, &report)?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

/// Backends for a file-in/file-out run. Mock mode registers the subject.
fn subject_backends(s: &SubjectFlags, image: &sico_core::RgbImage) -> Result<Backends> {
    let mut cfg = BackendConfig::from_env().context("backend configuration")?;
    cfg.mode = match s.backend {
        Backend::Mock => BackendMode::Mock,
        Backend::Http => BackendMode::Http,
    };
    let mut registry = FixtureRegistry::new();
    if cfg.mode == BackendMode::Mock {
        let Some(labels_path) = &s.labels else {
            bail!("--labels is required with the mock backend");
        };
        let labels = load_labels(labels_path)?;
        let truth_path = s.truth_mask.clone().or_else(|| {
            let p = labels_path.with_file_name("truth_garment_mask.png");
            p.is_file().then_some(p)
        });
        let truth = truth_path
            .map(|p| {
                BinaryMask::load(&p).with_context(|| format!("cannot read mask {}", p.display()))
            })
            .transpose()?;
        registry
            .register(image.clone(), labels, truth)
            .context("subject image and labels disagree")?;
    }
    Ok(cfg.build(Arc::new(registry))?)
}

fn load_image(path: &Path) -> Result<sico_core::RgbImage> {
    raster::load_rgb(path).with_context(|| format!("cannot read image {}", path.display()))
}

fn cmd_remove(a: RemoveArgs) -> Result<()> {
    let image = load_image(&a.subject.image)?;
    let backends = subject_backends(&a.subject, &image)?;
    let labels = backends
        .parser
        .parse(&image)
        .context("parse stage failed")?;
    let cfg = PipelineConfig::with_seed(a.subject.seed);
    let removal = remove_garment(&image, &labels, a.garment.meta(), &backends, &cfg)
        .context("remove stage failed")?;
    save_image(&removal.image, &a.out)?;
    if let Some(p) = &a.mask_out {
        save_mask(&removal.refined_mask, p)?;
    }
    println!(
        "{}",
        serde_json::json!({
            "out": a.out,
            "hash": raster::content_hash(&removal.image),
            "refined_area": removal.refined_mask.area(),
            "bbox": removal.bbox,
            "points": removal.points,
        })
    );
    Ok(())
}

fn cmd_tryon(a: TryOnArgs) -> Result<()> {
    let image = load_image(&a.subject.image)?;
    let garment = load_image(&a.garment)?;
    let backends = subject_backends(&a.subject, &image)?;
    let profile = UserProfile::new(a.true_top, a.true_bottom);
    let id = a
        .garment
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("garment")
        .to_string();
    let cfg = PipelineConfig::with_seed(a.subject.seed);
    let result = try_on(
        &image,
        &profile,
        GarmentInput {
            id: &id,
            meta: a.meta.meta(),
            image: &garment,
        },
        a.size,
        &backends,
        &cfg,
    )
    .map_err(|e| anyhow::anyhow!("{e}"))?;
    save_image(&result.image, &a.out)?;
    let mut intermediates = Vec::new();
    if let Some(dir) = &a.debug {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        let masks = [
            ("rough_mask", &result.rough_mask),
            ("refined_mask", &result.refined_mask),
            ("regular_fit_mask", &result.regular_mask),
            ("adjusted_mask", &result.adjusted_mask),
            ("removal_edges", &result.removal_edges),
        ];
        for (name, mask) in masks {
            let p = dir.join(format!("{name}.png"));
            save_mask(mask, &p)?;
            intermediates.push(p);
        }
        let p = dir.join("removed.png");
        save_image(&result.removed_image, &p)?;
        intermediates.push(p);
    }
    let report = TryOnReport::new(&a.out, &result, intermediates);
    write_json(&a.out.with_extension("json"), &report)?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

fn cmd_serve(a: ServeArgs) -> Result<()> {
    let mut flags: Vec<(&str, String)> = Vec::new();
    let mut flag = |k, v: Option<String>| {
        if let Some(v) = v {
            flags.push((k, v));
        }
    };
    flag("SICO_CATALOG", a.catalog.map(|p| p.display().to_string()));
    flag("SICO_PORT", a.port.map(|v| v.to_string()));
    flag("SICO_DATA_DIR", a.data_dir.map(|p| p.display().to_string()));
    flag("SICO_CANVAS_W", a.canvas_w.map(|v| v.to_string()));
    flag("SICO_CANVAS_H", a.canvas_h.map(|v| v.to_string()));
    flag("SICO_WORKERS", a.workers.map(|v| v.to_string()));
    flag("SICO_QUEUE", a.queue.map(|v| v.to_string()));
    flag("SICO_SEED", a.seed.map(|v| v.to_string()));
    flag(
        "SICO_BACKEND_MODE",
        a.backend
            .map(|b| if b == Backend::Http { "http" } else { "mock" }.to_string()),
    );
    if a.save_intermediates {
        flag("SICO_SAVE_INTERMEDIATES", Some("1".into()));
    }
    if !a.fixtures.is_empty() {
        let joined = std::env::join_paths(&a.fixtures).context("fixture paths")?;
        flag("SICO_FIXTURES", Some(joined.to_string_lossy().into_owned()));
    }
    let config = ServiceConfig::from_vars(|k| {
        flags
            .iter()
            .find(|(name, _)| *name == k)
            .map(|(_, v)| v.clone())
            .or_else(|| std::env::var(k).ok())
    })?;
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?;
    rt.block_on(sico_service::run(config))?;
    Ok(())
}
