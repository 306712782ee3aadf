//! Pipeline configuration: a TOML file with dotted keys per stage.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use diarkit::ahc::{AhcConfig, Linkage};
use diarkit::tsvad::TsvadConfig;
use diarkit::Ticks;
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Manifest of recordings; paths inside resolve relative to this file.
    pub manifest: PathBuf,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub jobs: Option<usize>,
    #[serde(default)]
    pub vad: BinarizeSection,
    #[serde(default)]
    pub osd: BinarizeSection,
    #[serde(default)]
    pub segmentation: SegmentationSection,
    /// Named clustering configurations, run in name order (ahc1, ahc2, ...).
    pub ahc: BTreeMap<String, AhcSection>,
    #[serde(default)]
    pub tsvad: TsvadSection,
    #[serde(default)]
    pub fusion: FusionSection,
    #[serde(default)]
    pub scoring: ScoringSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinarizeSection {
    pub onset: f64,
    pub offset: f64,
    pub min_on: f64,
    pub min_off: f64,
}

impl Default for BinarizeSection {
    fn default() -> Self {
        BinarizeSection {
            onset: 0.5,
            offset: 0.5,
            min_on: 0.10,
            min_off: 0.10,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentationSection {
    pub window: f64,
    pub shift: f64,
}

impl Default for SegmentationSection {
    fn default() -> Self {
        SegmentationSection {
            window: 1.28,
            shift: 0.32,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AhcSection {
    pub segment_thr: f64,
    pub stop_thr: f64,
    pub speaker_thr: f64,
    #[serde(default = "default_long_cluster_min")]
    pub long_cluster_min: f64,
    #[serde(default = "default_linkage")]
    pub linkage: String,
    #[serde(default = "default_merge_max_gap")]
    pub merge_max_gap: f64,
}

fn default_long_cluster_min() -> f64 {
    6.0
}

fn default_linkage() -> String {
    "average".into()
}

fn default_merge_max_gap() -> f64 {
    0.32
}

impl AhcSection {
    pub fn to_config(&self) -> Result<AhcConfig> {
        let cfg = AhcConfig {
            segment_thr: self.segment_thr,
            stop_thr: self.stop_thr,
            speaker_thr: self.speaker_thr,
            long_cluster_min: Ticks::from_seconds(self.long_cluster_min),
            linkage: self.linkage.parse::<Linkage>().map_err(anyhow::Error::from)?,
            merge_max_gap: Ticks::from_seconds(self.merge_max_gap),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Stable string for cache keys.
    pub fn cache_params(&self) -> String {
        format!(
            "segment_thr={};stop_thr={};speaker_thr={};long={};linkage={};gap={}",
            self.segment_thr,
            self.stop_thr,
            self.speaker_thr,
            self.long_cluster_min,
            self.linkage,
            self.merge_max_gap
        )
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TsvadSection {
    #[serde(default)]
    pub enabled: bool,
    /// Scorer bindings: `"toy"` or `"cmd:<program and args>"`.
    #[serde(default = "default_scorers")]
    pub scorers: Vec<String>,
    #[serde(default = "default_chunk_len")]
    pub chunk_len: f64,
    #[serde(default = "default_stride")]
    pub stride: f64,
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    #[serde(default = "default_capacity")]
    pub capacity: usize,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_min_on_off")]
    pub min_on: f64,
    #[serde(default = "default_min_on_off")]
    pub min_off: f64,
}

fn default_scorers() -> Vec<String> {
    vec!["toy".into()]
}

fn default_chunk_len() -> f64 {
    16.0
}

fn default_stride() -> f64 {
    1.0
}

fn default_resolution() -> f64 {
    0.08
}

fn default_capacity() -> usize {
    30
}

fn default_threshold() -> f64 {
    0.75
}

fn default_min_on_off() -> f64 {
    0.16
}

impl Default for TsvadSection {
    fn default() -> Self {
        TsvadSection {
            enabled: false,
            scorers: default_scorers(),
            chunk_len: default_chunk_len(),
            stride: default_stride(),
            resolution: default_resolution(),
            capacity: default_capacity(),
            threshold: default_threshold(),
            min_on: default_min_on_off(),
            min_off: default_min_on_off(),
        }
    }
}

impl TsvadSection {
    pub fn to_config(&self) -> Result<TsvadConfig> {
        let cfg = TsvadConfig {
            chunk_len: Ticks::from_seconds(self.chunk_len),
            stride: Ticks::from_seconds(self.stride),
            resolution: Ticks::from_seconds(self.resolution),
            capacity: self.capacity,
            threshold: self.threshold,
            min_on: Ticks::from_seconds(self.min_on),
            min_off: Ticks::from_seconds(self.min_off),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn cache_params(&self, scorer: &str) -> String {
        format!(
            "scorer={scorer};chunk={};stride={};res={};cap={};thr={};on={};off={}",
            self.chunk_len,
            self.stride,
            self.resolution,
            self.capacity,
            self.threshold,
            self.min_on,
            self.min_off
        )
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FusionSection {
    #[serde(default = "default_rank_exponent")]
    pub rank_exponent: f64,
    /// Fixed weights instead of rank weighting (applies to both fusion
    /// stages when set).
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
}

fn default_rank_exponent() -> f64 {
    0.5
}

impl Default for FusionSection {
    fn default() -> Self {
        FusionSection {
            rank_exponent: default_rank_exponent(),
            weights: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoringSection {
    #[serde(default = "default_collar")]
    pub collar: f64,
    #[serde(default = "default_score_overlaps")]
    pub score_overlaps: bool,
}

fn default_collar() -> f64 {
    0.25
}

fn default_score_overlaps() -> bool {
    true
}

impl Default for ScoringSection {
    fn default() -> Self {
        ScoringSection {
            collar: default_collar(),
            score_overlaps: default_score_overlaps(),
        }
    }
}

impl PipelineConfig {
    /// Parses and validates a config file. Relative paths are resolved
    /// against the config file's directory.
    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg: PipelineConfig =
            toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        cfg.manifest = base.join(&cfg.manifest);
        cfg.output_dir = base.join(&cfg.output_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.manifest.is_file() {
            bail!("manifest {} does not exist", self.manifest.display());
        }
        if self.ahc.is_empty() {
            bail!("config must define at least one [ahc.<name>] entry");
        }
        for (name, section) in &self.ahc {
            section
                .to_config()
                .with_context(|| format!("invalid [ahc.{name}]"))?;
        }
        if self.tsvad.enabled {
            self.tsvad.to_config().context("invalid [tsvad]")?;
            if self.tsvad.scorers.is_empty() {
                bail!("[tsvad] enabled without scorers");
            }
            for s in &self.tsvad.scorers {
                if s != "toy" && !s.starts_with("cmd:") {
                    bail!("unknown scorer {s:?} (expected \"toy\" or \"cmd:<command>\")");
                }
            }
            if self.tsvad.scorers.iter().filter(|s| *s == "toy").count() > 1 {
                bail!("[tsvad] lists the toy scorer more than once");
            }
        }
        if self.segmentation.window <= 0.0
            || self.segmentation.shift <= 0.0
            || self.segmentation.shift > self.segmentation.window
        {
            bail!("[segmentation] needs 0 < shift <= window");
        }
        for (name, b) in [("vad", &self.vad), ("osd", &self.osd)] {
            if b.onset < b.offset {
                bail!("[{name}] onset below offset");
            }
        }
        if self.scoring.collar < 0.0 {
            bail!("[scoring] collar must be non-negative");
        }
        if let Some(w) = &self.fusion.weights {
            if w.iter().any(|&x| x <= 0.0) {
                bail!("[fusion] weights must be positive");
            }
        }
        Ok(())
    }
}
