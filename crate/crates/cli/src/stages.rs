//! Stage runners. Each stage reads files, applies one library operation,
//! and writes files; `segment_image` composes them in-process while
//! producing the same artifacts, byte for byte, as running the stages one
//! by one.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use vesselkit::connectivity::{
    connectivity_filter, ls_connectivity_filter, render_scores, score_threshold,
};
use vesselkit::metrics::{confusion, EvalRow};
use vesselkit::morphology::{dilate, erode, StructuringElement};
use vesselkit::raster::{threshold, BinaryMask};
use vesselkit::vesselness::frangi_multiscale;
use vesselkit::{io, Error};

use crate::config::{Method, PipelineConfig};

/// Vesselness response of one image, rendered 0-255.
pub fn run_frangi(input: &Path, output: &Path, cfg: &PipelineConfig) -> Result<()> {
    let gray = io::load_gray(input).with_context(|| format!("loading {}", input.display()))?;
    let response = frangi_multiscale(&gray, &cfg.frangi_params())?;
    io::save_gray(&response, output)?;
    Ok(())
}

/// Binarization: `x > t`. Applies to 8-bit rasters and, detected by the
/// file header, to 16-bit score maps, so one stage thresholds both the
/// vesselness rendering (T) and connectivity scores (t).
pub fn run_threshold(input: &Path, output: &Path, t: u32) -> Result<()> {
    let mask = if io::is_score_file(input) {
        score_threshold(&io::load_scores(input)?, t)
    } else {
        if t > 255 {
            bail!("threshold {t} is out of range for an 8-bit input (0-255)");
        }
        let gray = io::load_gray(input).with_context(|| format!("loading {}", input.display()))?;
        threshold(&gray, t as u8)
    };
    io::save_mask(&mask, output)?;
    Ok(())
}

fn load_stage_mask(input: &Path) -> Result<BinaryMask> {
    io::load_mask(input).map_err(|e| match e {
        Error::NotBinary { .. } => anyhow::anyhow!(
            "{} is not a binary mask; run `threshold` first",
            input.display()
        ),
        other => other.into(),
    })
}

/// Connectivity filter: component-size scores of a binary mask.
pub fn run_cf(input: &Path, output: &Path, cfg: &PipelineConfig) -> Result<()> {
    let mask = load_stage_mask(input)?;
    let scores = connectivity_filter(&mask, cfg.flood_connectivity()?);
    io::save_scores(&scores, output)?;
    Ok(())
}

/// Local-sensitive connectivity filter: gap-bridged mask plus scores.
pub fn run_lscf(
    input: &Path,
    scores_out: &Path,
    repaired_out: &Path,
    cfg: &PipelineConfig,
) -> Result<()> {
    let mask = load_stage_mask(input)?;
    let out = ls_connectivity_filter(&mask, &cfg.lscf_params());
    io::save_scores(&out.scores, scores_out)?;
    io::save_mask(&out.repaired, repaired_out)?;
    Ok(())
}

/// Morphological closing, generalized to the configured operation counts
/// (dilations then erosions with the cross element).
pub fn run_close(input: &Path, output: &Path, dilations: u32, erosions: u32) -> Result<()> {
    let mask = load_stage_mask(input)?;
    io::save_mask(&apply_close(&mask, dilations, erosions), output)?;
    Ok(())
}

fn apply_close(mask: &BinaryMask, dilations: u32, erosions: u32) -> BinaryMask {
    let se = StructuringElement::cross();
    let mut m = mask.clone();
    for _ in 0..dilations {
        m = dilate(&m, &se);
    }
    for _ in 0..erosions {
        m = erode(&m, &se);
    }
    m
}

/// 8-bit rendering of a score map (counts clamped at 255).
pub fn run_render(input: &Path, output: &Path) -> Result<()> {
    if !io::is_score_file(input) {
        bail!("{} is not a 16-bit score map", input.display());
    }
    io::save_gray(&render_scores(&io::load_scores(input)?), output)?;
    Ok(())
}

/// Evaluates a prediction against ground truth; `fov` restricts the
/// counted pixels.
pub fn run_eval(id: &str, pred: &Path, truth: &Path, fov: Option<&Path>) -> Result<EvalRow> {
    let pred_mask = io::load_mask(pred).with_context(|| format!("prediction {}", pred.display()))?;
    let truth_mask =
        io::load_mask(truth).with_context(|| format!("ground truth {}", truth.display()))?;
    let fov_mask = fov
        .map(|f| io::load_mask(f).with_context(|| format!("fov mask {}", f.display())))
        .transpose()?;
    let counts = confusion(&pred_mask, &truth_mask, fov_mask.as_ref())?;
    Ok(EvalRow::new(id, counts))
}

/// Files produced by `segment_image`.
pub struct SegmentOutput {
    pub final_mask: PathBuf,
    pub artifacts: Vec<PathBuf>,
}

/// The full pipeline on one image: vesselness → threshold T → the
/// configured method → final mask `{stem}.mask.png`. All intermediate
/// artifacts are written alongside it.
pub fn segment_image(input: &Path, out_dir: &Path, cfg: &PipelineConfig) -> Result<SegmentOutput> {
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    let stem = input
        .file_stem()
        .with_context(|| format!("input {} has no file name", input.display()))?
        .to_string_lossy()
        .into_owned();
    let art = |suffix: &str| out_dir.join(format!("{stem}.{suffix}"));
    let mut artifacts = Vec::new();

    let gray = io::load_gray(input).with_context(|| format!("loading {}", input.display()))?;
    let response = frangi_multiscale(&gray, &cfg.frangi_params())?;
    let vesselness_path = art("vesselness.png");
    io::save_gray(&response, &vesselness_path)?;
    artifacts.push(vesselness_path);

    let thresholded = threshold(&response, cfg.frangi.threshold as u8);
    let thresholded_path = art("thresholded.png");
    io::save_mask(&thresholded, &thresholded_path)?;
    artifacts.push(thresholded_path);

    let final_mask = match cfg.pipeline.method {
        Method::FrangiOnly => thresholded,
        Method::Cf | Method::CfClose => {
            let scores = connectivity_filter(&thresholded, cfg.flood_connectivity()?);
            let mask = persist_and_threshold(&scores, &art, &mut artifacts, cfg)?;
            if cfg.pipeline.method == Method::CfClose {
                apply_close(&mask, cfg.morphology.dilations, cfg.morphology.erosions)
            } else {
                mask
            }
        }
        Method::Lscf => {
            let out = ls_connectivity_filter(&thresholded, &cfg.lscf_params());
            let repaired_path = art("repaired.png");
            io::save_mask(&out.repaired, &repaired_path)?;
            artifacts.push(repaired_path);
            persist_and_threshold(&out.scores, &art, &mut artifacts, cfg)?
        }
    };

    let mask_path = art("mask.png");
    io::save_mask(&final_mask, &mask_path)?;
    artifacts.push(mask_path.clone());
    Ok(SegmentOutput { final_mask: mask_path, artifacts })
}

/// Writes the score artifacts and derives the thresholded mask from the
/// *persisted* scores, not the in-memory ones: the file format saturates
/// counts at 65535, so rereading is what keeps a staged run byte-identical
/// to this single-shot path for every possible threshold.
fn persist_and_threshold(
    scores: &vesselkit::connectivity::ScoreMap,
    art: &impl Fn(&str) -> PathBuf,
    artifacts: &mut Vec<PathBuf>,
    cfg: &PipelineConfig,
) -> Result<BinaryMask> {
    let scores_path = art("scores.pgm");
    io::save_scores(scores, &scores_path)?;
    let render_path = art("scores.png");
    io::save_gray(&render_scores(scores), &render_path)?;
    let reloaded = io::load_scores(&scores_path)?;
    artifacts.push(scores_path);
    artifacts.push(render_path);
    Ok(score_threshold(&reloaded, cfg.connectivity.score_threshold))
}
