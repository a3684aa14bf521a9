//! Dataset discovery and batch evaluation: pair images with ground
//! truths by `{id}` patterns, segment every pair, evaluate, aggregate.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use vesselkit::io;
use vesselkit::metrics::{aggregate, confusion, EvalReport, EvalRow};

use crate::config::{PipelineConfig, ResolvedDataset};
use crate::manifest::{ImageRecord, RunManifest};
use crate::stages::segment_image;

/// One evaluable image: input, ground truth, optional field-of-view mask.
#[derive(Clone, PartialEq, Debug)]
pub struct PairedImage {
    pub id: String,
    pub image: PathBuf,
    pub truth: PathBuf,
    pub fov: Option<PathBuf>,
}

/// Scans the image directory and pairs by pattern. Returns pairs sorted
/// by id plus human-readable warnings for everything skipped.
pub fn discover(ds: &ResolvedDataset) -> Result<(Vec<PairedImage>, Vec<String>)> {
    let entries = std::fs::read_dir(&ds.image_dir)
        .with_context(|| format!("reading image directory {}", ds.image_dir.display()))?;
    let mut ids: Vec<(String, PathBuf)> = Vec::new();
    for entry in entries {
        let entry = entry.with_context(|| format!("listing {}", ds.image_dir.display()))?;
        if !entry.file_type().map(|t| t.is_file()).unwrap_or(false) {
            continue;
        }
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(id) = ds.image_pattern.extract(&name) {
            ids.push((id, entry.path()));
        }
    }
    if ids.is_empty() {
        bail!(
            "no images matching pattern {:?} in {}",
            ds.image_pattern.apply("<id>"),
            ds.image_dir.display()
        );
    }
    ids.sort();

    let mut pairs = Vec::new();
    let mut warnings = Vec::new();
    for (id, image) in ids {
        let truth = ds.truth_dir.join(ds.truth_pattern.apply(&id));
        if !truth.exists() {
            warnings.push(format!("image {id}: ground truth {} missing, skipped", truth.display()));
            continue;
        }
        let fov = match (&ds.fov_dir, &ds.fov_pattern) {
            (Some(dir), Some(pat)) => {
                let f = dir.join(pat.apply(&id));
                if f.exists() {
                    Some(f)
                } else {
                    warnings.push(format!(
                        "image {id}: fov mask {} missing, evaluating the full frame",
                        f.display()
                    ));
                    None
                }
            }
            _ => None,
        };
        pairs.push(PairedImage { id, image, truth, fov });
    }
    Ok((pairs, warnings))
}

/// Segments and evaluates every paired image, in parallel, merging
/// results in id order. Writes `report.csv`, `report.txt`, and
/// `manifest.json` into `out_dir`.
pub fn run_batch(
    cfg: &PipelineConfig,
    out_dir: &std::path::Path,
) -> Result<(EvalReport, RunManifest)> {
    let ds = cfg
        .dataset
        .as_ref()
        .context("batch mode needs a [dataset] section in the config")?
        .resolve()?;
    let (pairs, warnings) = discover(&ds)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    if pairs.is_empty() {
        bail!("every image was skipped; nothing to evaluate");
    }
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.pipeline.workers)
        .build()
        .context("building worker pool")?;
    let results: Vec<Result<(EvalRow, ImageRecord)>> = pool.install(|| {
        pairs
            .par_iter()
            .map(|pair| {
                let started = Instant::now();
                let seg = segment_image(&pair.image, out_dir, cfg)
                    .with_context(|| format!("segmenting {}", pair.image.display()))?;
                let pred = io::load_mask(&seg.final_mask)?;
                let truth = io::load_mask(&pair.truth)
                    .with_context(|| format!("ground truth {}", pair.truth.display()))?;
                let fov = pair
                    .fov
                    .as_ref()
                    .map(|f| io::load_mask(f).with_context(|| format!("fov {}", f.display())))
                    .transpose()?;
                let counts = confusion(&pred, &truth, fov.as_ref())?;
                let record = ImageRecord {
                    id: pair.id.clone(),
                    input: pair.image.clone(),
                    wall_ms: started.elapsed().as_millis() as u64,
                    artifacts: seg.artifacts,
                };
                Ok((EvalRow::new(pair.id.clone(), counts), record))
            })
            .collect()
    });

    let mut rows = Vec::with_capacity(results.len());
    let mut manifest = RunManifest::new("batch", cfg);
    for r in results {
        let (row, record) = r?;
        rows.push(row);
        manifest.record_image(record);
    }
    let report = aggregate(rows)?;

    let csv_path = out_dir.join("report.csv");
    std::fs::write(&csv_path, report.to_csv())
        .with_context(|| format!("writing {}", csv_path.display()))?;
    let table_path = out_dir.join("report.txt");
    std::fs::write(&table_path, report.to_table())
        .with_context(|| format!("writing {}", table_path.display()))?;
    manifest.record_report(csv_path);
    manifest.record_report(table_path);
    manifest.write(&out_dir.join("manifest.json"))?;
    Ok((report, manifest))
}
