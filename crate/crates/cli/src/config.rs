//! TOML configuration. Every pipeline constant appears in the config with
//! its published default, so a run's parameterization is always explicit
//! and self-documenting; command-line flags override file values.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use vesselkit::connectivity::{Connectivity, LscfParams};
use vesselkit::vesselness::Polarity;
use vesselkit::FrangiParams64;

/// Which pipeline variant `segment` and `batch` run.
#[derive(Copy, Clone, PartialEq, Eq, Debug, Default, Serialize, Deserialize, ValueEnum)]
pub enum Method {
    /// Vesselness plus binary threshold, no connectivity filtering.
    #[serde(rename = "frangi-only", alias = "frangi")]
    #[value(name = "frangi-only", alias = "frangi")]
    FrangiOnly,
    /// Connectivity filter, scores thresholded.
    #[serde(rename = "cf")]
    #[value(name = "cf")]
    Cf,
    /// Connectivity filter followed by morphological closing.
    #[serde(rename = "cf+close", alias = "cf-close")]
    #[value(name = "cf+close", alias = "cf-close")]
    CfClose,
    /// Local-sensitive connectivity filter (the default pipeline).
    #[default]
    #[serde(rename = "lscf")]
    #[value(name = "lscf")]
    Lscf,
}

/// Vessel polarity, as a config/CLI-friendly mirror of the core enum.
#[derive(Copy, Clone, PartialEq, Eq, Debug, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PolarityChoice {
    /// Dark vessels on a bright background (fundus photographs).
    #[default]
    DarkOnBright,
    BrightOnDark,
}

impl From<PolarityChoice> for Polarity {
    fn from(p: PolarityChoice) -> Polarity {
        match p {
            PolarityChoice::DarkOnBright => Polarity::DarkOnBright,
            PolarityChoice::BrightOnDark => Polarity::BrightOnDark,
        }
    }
}

#[derive(Clone, PartialEq, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSection {
    pub method: Method,
    /// Worker threads for batch mode; 0 means one per core.
    pub workers: usize,
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrangiSection {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub sigma_step: f64,
    pub beta: f64,
    pub c: f64,
    pub polarity: PolarityChoice,
    /// Binary threshold T applied to the 0-255 vesselness rendering.
    pub threshold: u32,
}

impl Default for FrangiSection {
    fn default() -> Self {
        Self {
            sigma_min: 1.0,
            sigma_max: 8.0,
            sigma_step: 1.0,
            beta: 0.5,
            c: 15.0,
            polarity: PolarityChoice::default(),
            threshold: 100,
        }
    }
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConnectivitySection {
    /// Flood connectivity: 4 or 8.
    pub neighborhood: u32,
    /// LS-CF tolerance budget (MAX_SCORE).
    pub max_score: u32,
    /// LS-CF ring search limit (MAX_DIST).
    pub max_dist: u32,
    /// Score threshold t: white iff component score > t.
    pub score_threshold: u32,
}

impl Default for ConnectivitySection {
    fn default() -> Self {
        Self { neighborhood: 8, max_score: 350, max_dist: 4, score_threshold: 1 }
    }
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MorphologySection {
    /// Dilation count of the closing stage (extra dilations thicken
    /// calibers).
    pub dilations: u32,
    pub erosions: u32,
}

impl Default for MorphologySection {
    fn default() -> Self {
        Self { dilations: 1, erosions: 1 }
    }
}

/// Dataset layout: directories plus `{id}` filename patterns pairing each
/// image with its ground truth (and optional field-of-view mask).
#[derive(Clone, PartialEq, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    /// Layout preset: drive, stare, chasedb, iostar, or osirix. Explicit
    /// fields below override preset values.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Dataset root all directories are resolved against.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub root: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image_dir: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth_dir: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fov_dir: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image_pattern: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth_pattern: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fov_pattern: Option<String>,
}

#[derive(Clone, PartialEq, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub pipeline: PipelineSection,
    pub frangi: FrangiSection,
    pub connectivity: ConnectivitySection,
    pub morphology: MorphologySection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetSection>,
}

impl PipelineConfig {
    /// Reads and validates a TOML config; `None` yields the defaults.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?
            }
            None => Self::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.frangi_params().validate().context("frangi parameters")?;
        if self.frangi.threshold > 255 {
            bail!("frangi.threshold must be within 0-255, got {}", self.frangi.threshold);
        }
        self.flood_connectivity().context("connectivity.neighborhood")?;
        self.lscf_params().validate().context("connectivity parameters")?;
        Ok(())
    }

    pub fn frangi_params(&self) -> FrangiParams64 {
        FrangiParams64 {
            sigma_min: self.frangi.sigma_min,
            sigma_max: self.frangi.sigma_max,
            sigma_step: self.frangi.sigma_step,
            beta: self.frangi.beta,
            c: self.frangi.c,
            polarity: self.frangi.polarity.into(),
        }
    }

    pub fn flood_connectivity(&self) -> Result<Connectivity> {
        Ok(Connectivity::from_neighbor_count(self.connectivity.neighborhood)?)
    }

    pub fn lscf_params(&self) -> LscfParams {
        LscfParams {
            max_score: self.connectivity.max_score,
            max_dist: self.connectivity.max_dist,
            connectivity: self
                .flood_connectivity()
                .unwrap_or(Connectivity::Eight),
            score_threshold: self.connectivity.score_threshold,
        }
    }
}

/// A filename pattern with a single `{id}` placeholder.
#[derive(Clone, PartialEq, Debug)]
pub struct IdPattern {
    prefix: String,
    suffix: String,
}

impl IdPattern {
    pub fn parse(pattern: &str) -> Result<Self> {
        let Some(at) = pattern.find("{id}") else {
            bail!("pattern {pattern:?} is missing the {{id}} placeholder");
        };
        let (prefix, rest) = pattern.split_at(at);
        let suffix = &rest["{id}".len()..];
        if suffix.contains("{id}") {
            bail!("pattern {pattern:?} has more than one {{id}} placeholder");
        }
        Ok(Self { prefix: prefix.to_string(), suffix: suffix.to_string() })
    }

    /// The id embedded in `name`, if the name matches the pattern.
    pub fn extract(&self, name: &str) -> Option<String> {
        let rest = name.strip_prefix(&self.prefix)?;
        let id = rest.strip_suffix(&self.suffix)?;
        (!id.is_empty()).then(|| id.to_string())
    }

    /// The filename the pattern produces for `id`.
    pub fn apply(&self, id: &str) -> String {
        format!("{}{}{}", self.prefix, id, self.suffix)
    }
}

/// A dataset section with preset and root folded in: concrete
/// directories and patterns.
#[derive(Clone, PartialEq, Debug)]
pub struct ResolvedDataset {
    pub image_dir: PathBuf,
    pub truth_dir: PathBuf,
    pub fov_dir: Option<PathBuf>,
    pub image_pattern: IdPattern,
    pub truth_pattern: IdPattern,
    pub fov_pattern: Option<IdPattern>,
}

/// Preset layouts of the five public datasets, assuming images converted
/// to PNG (see README). Fields are (image_dir, image_pattern, truth_dir,
/// truth_pattern, fov).
fn preset(name: &str) -> Option<[&'static str; 4]> {
    match name {
        "drive" => Some(["test/images", "{id}_test.png", "test/1st_manual", "{id}_manual1.png"]),
        "stare" => Some(["stare-images", "{id}.png", "labels-ah", "{id}.ah.png"]),
        "chasedb" => Some([".", "Image_{id}.png", ".", "Image_{id}_1stHO.png"]),
        "iostar" => Some(["image", "{id}.png", "GT", "{id}_GT.png"]),
        "osirix" => Some(["images", "{id}.png", "truth", "{id}.png"]),
        _ => None,
    }
}

fn preset_fov(name: &str) -> Option<(&'static str, &'static str)> {
    match name {
        "drive" => Some(("test/mask", "{id}_test_mask.png")),
        "iostar" => Some(("mask", "{id}_Mask.png")),
        _ => None,
    }
}

impl DatasetSection {
    pub fn resolve(&self) -> Result<ResolvedDataset> {
        let base = match &self.preset {
            Some(name) => Some(preset(name).with_context(|| {
                format!("unknown dataset preset {name:?} (drive, stare, chasedb, iostar, osirix)")
            })?),
            None => None,
        };
        let root = self.root.clone().unwrap_or_else(|| PathBuf::from("."));
        let pick = |explicit: &Option<String>, from_preset: Option<&str>, what: &str| {
            explicit
                .clone()
                .or_else(|| from_preset.map(str::to_string))
                .with_context(|| format!("dataset {what} is not configured"))
        };
        let image_dir = pick(&self.image_dir, base.map(|b| b[0]), "image_dir")?;
        let image_pattern = pick(&self.image_pattern, base.map(|b| b[1]), "image_pattern")?;
        let truth_dir = pick(&self.truth_dir, base.map(|b| b[2]), "truth_dir")?;
        let truth_pattern = pick(&self.truth_pattern, base.map(|b| b[3]), "truth_pattern")?;
        let preset_fov = self.preset.as_deref().and_then(preset_fov);
        let fov_dir = self.fov_dir.clone().or_else(|| preset_fov.map(|f| f.0.to_string()));
        let fov_pattern = self.fov_pattern.clone().or_else(|| preset_fov.map(|f| f.1.to_string()));
        let fov = match (fov_dir, fov_pattern) {
            (Some(d), Some(p)) => Some((root.join(d), IdPattern::parse(&p)?)),
            (None, None) => None,
            _ => bail!("fov_dir and fov_pattern must be configured together"),
        };
        Ok(ResolvedDataset {
            image_dir: root.join(image_dir),
            truth_dir: root.join(truth_dir),
            fov_dir: fov.as_ref().map(|f| f.0.clone()),
            image_pattern: IdPattern::parse(&image_pattern)?,
            truth_pattern: IdPattern::parse(&truth_pattern)?,
            fov_pattern: fov.map(|f| f.1),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_published_constants() {
        let cfg = PipelineConfig::default();
        assert_eq!(cfg.frangi.threshold, 100);
        assert_eq!(cfg.connectivity.max_score, 350);
        assert_eq!(cfg.connectivity.max_dist, 4);
        assert_eq!(cfg.connectivity.neighborhood, 8);
        assert_eq!(cfg.connectivity.score_threshold, 1);
        assert_eq!(cfg.frangi.sigma_min, 1.0);
        assert_eq!(cfg.frangi.sigma_max, 8.0);
        assert_eq!(cfg.frangi.beta, 0.5);
        assert_eq!(cfg.frangi.c, 15.0);
        assert_eq!(cfg.pipeline.method, Method::Lscf);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn toml_round_trip_and_partial_files() {
        let text = r#"
            [pipeline]
            method = "cf+close"

            [connectivity]
            max_score = 10
        "#;
        let cfg: PipelineConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.pipeline.method, Method::CfClose);
        assert_eq!(cfg.connectivity.max_score, 10);
        assert_eq!(cfg.connectivity.max_dist, 4, "unset keys keep defaults");
        let serialized = toml::to_string(&cfg).unwrap();
        let back: PipelineConfig = toml::from_str(&serialized).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = "[frangi]\nsigma_mim = 2.0\n";
        assert!(toml::from_str::<PipelineConfig>(text).is_err(), "typo must not pass silently");
    }

    #[test]
    fn invalid_parameters_fail_validation() {
        let mut cfg = PipelineConfig::default();
        cfg.frangi.threshold = 300;
        assert!(cfg.validate().is_err());
        let mut cfg = PipelineConfig::default();
        cfg.connectivity.neighborhood = 6;
        assert!(cfg.validate().is_err());
        let mut cfg = PipelineConfig::default();
        cfg.connectivity.max_dist = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = PipelineConfig::default();
        cfg.frangi.sigma_min = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn id_pattern_extract_and_apply() {
        let p = IdPattern::parse("{id}_test.png").unwrap();
        assert_eq!(p.extract("21_test.png"), Some("21".into()));
        assert_eq!(p.extract("21_training.png"), None);
        assert_eq!(p.apply("21"), "21_test.png");
        let p = IdPattern::parse("Image_{id}_1stHO.png").unwrap();
        assert_eq!(p.extract("Image_01L_1stHO.png"), Some("01L".into()));
        assert!(IdPattern::parse("no-placeholder.png").is_err());
        assert!(IdPattern::parse("{id}_{id}.png").is_err());
    }

    #[test]
    fn preset_resolution_with_overrides() {
        let ds = DatasetSection {
            preset: Some("drive".into()),
            root: Some(PathBuf::from("/data/drive")),
            image_pattern: Some("{id}.png".into()),
            ..Default::default()
        };
        let r = ds.resolve().unwrap();
        assert_eq!(r.image_dir, PathBuf::from("/data/drive/test/images"));
        assert_eq!(r.image_pattern.apply("01"), "01.png", "explicit pattern wins");
        assert_eq!(r.truth_pattern.apply("01"), "01_manual1.png");
        assert!(r.fov_dir.is_some(), "drive preset has a field-of-view layout");
        assert!(DatasetSection { preset: Some("nope".into()), ..Default::default() }
            .resolve()
            .is_err());
        // stare has no fov; explicit dir without pattern is rejected.
        let bad = DatasetSection {
            preset: Some("stare".into()),
            fov_dir: Some("masks".into()),
            ..Default::default()
        };
        assert!(bad.resolve().is_err());
    }
}
