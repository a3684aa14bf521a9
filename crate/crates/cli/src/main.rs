//! `vesselkit`: unsupervised retinal vessel segmentation — multiscale
//! vesselness, connectivity filtering, and a TP/TN/ACC evaluation
//! harness. Run the full pipeline with `segment`/`batch`, or compose the
//! individual stages by hand.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use vesselkit_cli::config::{Method, PipelineConfig, PolarityChoice};
use vesselkit_cli::dataset::run_batch;
use vesselkit_cli::manifest::{ImageRecord, RunManifest};
use vesselkit_cli::stages;

#[derive(Parser)]
#[command(
    name = "vesselkit",
    version,
    about = "Unsupervised vessel segmentation: vesselness, connectivity filtering, evaluation"
)]
struct Cli {
    /// TOML configuration file; command-line flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

/// Overrides shared by the pipeline-level commands.
#[derive(Args, Clone, Default)]
struct PipelineOverrides {
    /// Pipeline variant.
    #[arg(long)]
    method: Option<Method>,
    /// Binary threshold T on the 0-255 vesselness rendering.
    #[arg(long, value_name = "T")]
    frangi_threshold: Option<u32>,
    /// Vessel polarity of the vesselness filter.
    #[arg(long)]
    polarity: Option<PolarityChoice>,
    /// LS-CF tolerance budget (MAX_SCORE).
    #[arg(long, value_name = "N")]
    max_score: Option<u32>,
    /// LS-CF ring search limit (MAX_DIST).
    #[arg(long, value_name = "N")]
    max_dist: Option<u32>,
    /// Component-score threshold t (white iff score > t).
    #[arg(long, value_name = "N")]
    score_threshold: Option<u32>,
    /// Flood connectivity: 4 or 8.
    #[arg(long, value_name = "4|8")]
    connectivity: Option<u32>,
}

impl PipelineOverrides {
    fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(m) = self.method {
            cfg.pipeline.method = m;
        }
        if let Some(t) = self.frangi_threshold {
            cfg.frangi.threshold = t;
        }
        if let Some(p) = self.polarity {
            cfg.frangi.polarity = p;
        }
        if let Some(v) = self.max_score {
            cfg.connectivity.max_score = v;
        }
        if let Some(v) = self.max_dist {
            cfg.connectivity.max_dist = v;
        }
        if let Some(v) = self.score_threshold {
            cfg.connectivity.score_threshold = v;
        }
        if let Some(v) = self.connectivity {
            cfg.connectivity.neighborhood = v;
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline on one image; artifacts land in --out.
    Segment {
        input: PathBuf,
        /// Output directory.
        #[arg(long, value_name = "DIR", default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        overrides: PipelineOverrides,
    },
    /// Segment and evaluate every image of the configured dataset.
    Batch {
        /// Output directory.
        #[arg(long, value_name = "DIR", default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        overrides: PipelineOverrides,
    },
    /// Multiscale vesselness response of one image, rendered 0-255.
    Frangi {
        input: PathBuf,
        output: PathBuf,
        #[arg(long)]
        polarity: Option<PolarityChoice>,
        #[arg(long, value_name = "FILE")]
        manifest: Option<PathBuf>,
    },
    /// Binarize a gray rendering or a 16-bit score map: white iff x > t.
    Threshold {
        input: PathBuf,
        output: PathBuf,
        /// Threshold value.
        #[arg(long)]
        t: u32,
        #[arg(long, value_name = "FILE")]
        manifest: Option<PathBuf>,
    },
    /// Connectivity filter: component-size scores of a binary mask.
    Cf {
        input: PathBuf,
        /// Output score map (16-bit PGM).
        output: PathBuf,
        #[arg(long, value_name = "4|8")]
        connectivity: Option<u32>,
        #[arg(long, value_name = "FILE")]
        manifest: Option<PathBuf>,
    },
    /// Local-sensitive connectivity filter: bridges small gaps while
    /// scoring.
    Lscf {
        input: PathBuf,
        /// Output score map (16-bit PGM).
        output: PathBuf,
        /// Gap-repaired mask output; defaults to the score path with a
        /// `.repaired.png` name.
        #[arg(long, value_name = "FILE")]
        repaired_out: Option<PathBuf>,
        #[arg(long, value_name = "N")]
        max_score: Option<u32>,
        #[arg(long, value_name = "N")]
        max_dist: Option<u32>,
        #[arg(long, value_name = "4|8")]
        connectivity: Option<u32>,
        #[arg(long, value_name = "FILE")]
        manifest: Option<PathBuf>,
    },
    /// Morphological closing of a binary mask (cross element).
    Close {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, value_name = "N")]
        dilations: Option<u32>,
        #[arg(long, value_name = "N")]
        erosions: Option<u32>,
        #[arg(long, value_name = "FILE")]
        manifest: Option<PathBuf>,
    },
    /// Render a 16-bit score map as an 8-bit image (clamped at 255).
    Render {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, value_name = "FILE")]
        manifest: Option<PathBuf>,
    },
    /// Evaluate a prediction against ground truth (TP/TN/ACC).
    Eval {
        /// Predicted binary mask.
        #[arg(long)]
        pred: PathBuf,
        /// Ground-truth binary mask.
        #[arg(long)]
        truth: PathBuf,
        /// Field-of-view mask restricting the evaluated pixels.
        #[arg(long)]
        fov: Option<PathBuf>,
        /// Row label in the report.
        #[arg(long, default_value = "image")]
        id: String,
        /// Also write the report as CSV.
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
    },
}

fn record_stage(
    manifest_path: Option<&Path>,
    cfg: &PipelineConfig,
    command: &str,
    input: &Path,
    artifacts: Vec<PathBuf>,
    started: Instant,
) -> Result<()> {
    let Some(path) = manifest_path else { return Ok(()) };
    let mut m = RunManifest::load_or_new(path, command, cfg)?;
    m.record_image(ImageRecord {
        id: input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| input.display().to_string()),
        input: input.to_path_buf(),
        wall_ms: started.elapsed().as_millis() as u64,
        artifacts,
    });
    m.write(path)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let mut cfg = PipelineConfig::load(cli.config.as_deref())?;

    match cli.command {
        Command::Segment { input, out, overrides } => {
            overrides.apply(&mut cfg);
            cfg.validate()?;
            let started = Instant::now();
            let result = stages::segment_image(&input, &out, &cfg)?;
            let mut manifest = RunManifest::new("segment", &cfg);
            manifest.record_image(ImageRecord {
                id: input
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| input.display().to_string()),
                input: input.clone(),
                wall_ms: started.elapsed().as_millis() as u64,
                artifacts: result.artifacts,
            });
            manifest.write(&out.join("manifest.json"))?;
            println!("{}", result.final_mask.display());
        }
        Command::Batch { out, overrides } => {
            overrides.apply(&mut cfg);
            cfg.validate()?;
            let (report, _) = run_batch(&cfg, &out)?;
            print!("{}", report.to_table());
        }
        Command::Frangi { input, output, polarity, manifest } => {
            if let Some(p) = polarity {
                cfg.frangi.polarity = p;
            }
            cfg.validate()?;
            let started = Instant::now();
            stages::run_frangi(&input, &output, &cfg)?;
            record_stage(manifest.as_deref(), &cfg, "frangi", &input, vec![output], started)?;
        }
        Command::Threshold { input, output, t, manifest } => {
            let started = Instant::now();
            stages::run_threshold(&input, &output, t)?;
            record_stage(manifest.as_deref(), &cfg, "threshold", &input, vec![output], started)?;
        }
        Command::Cf { input, output, connectivity, manifest } => {
            if let Some(c) = connectivity {
                cfg.connectivity.neighborhood = c;
            }
            cfg.validate()?;
            let started = Instant::now();
            stages::run_cf(&input, &output, &cfg)?;
            record_stage(manifest.as_deref(), &cfg, "cf", &input, vec![output], started)?;
        }
        Command::Lscf {
            input,
            output,
            repaired_out,
            max_score,
            max_dist,
            connectivity,
            manifest,
        } => {
            if let Some(v) = max_score {
                cfg.connectivity.max_score = v;
            }
            if let Some(v) = max_dist {
                cfg.connectivity.max_dist = v;
            }
            if let Some(v) = connectivity {
                cfg.connectivity.neighborhood = v;
            }
            cfg.validate()?;
            let repaired = repaired_out.unwrap_or_else(|| output.with_extension("repaired.png"));
            let started = Instant::now();
            stages::run_lscf(&input, &output, &repaired, &cfg)?;
            record_stage(
                manifest.as_deref(),
                &cfg,
                "lscf",
                &input,
                vec![output, repaired],
                started,
            )?;
        }
        Command::Close { input, output, dilations, erosions, manifest } => {
            let d = dilations.unwrap_or(cfg.morphology.dilations);
            let e = erosions.unwrap_or(cfg.morphology.erosions);
            let started = Instant::now();
            stages::run_close(&input, &output, d, e)?;
            record_stage(manifest.as_deref(), &cfg, "close", &input, vec![output], started)?;
        }
        Command::Render { input, output, manifest } => {
            let started = Instant::now();
            stages::run_render(&input, &output)?;
            record_stage(manifest.as_deref(), &cfg, "render", &input, vec![output], started)?;
        }
        Command::Eval { pred, truth, fov, id, csv } => {
            let row = stages::run_eval(&id, &pred, &truth, fov.as_deref())?;
            let report = vesselkit::metrics::aggregate(vec![row])?;
            if let Some(path) = csv {
                std::fs::write(&path, report.to_csv())
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            print!("{}", report.to_table());
        }
    }
    Ok(())
}
