//! Recording manifest and UEM parsing.
//!
//! Manifest: one tab-separated line per recording,
//!
//! ```text
//! recording_id <TAB> vad_scores(comma-sep) <TAB> embeddings <TAB> osd_scores(comma-sep) <TAB> [ref_rttm]
//! ```
//!
//! A `-` marks an absent field. Paths resolve relative to the manifest file.
//! UEM: `recording channel onset offset` lines.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use diarkit::{Interval, Ticks, Timeline};

#[derive(Debug, Clone)]
pub struct ManifestEntry {
    pub recording_id: String,
    pub vad_scores: Vec<PathBuf>,
    pub embeddings: PathBuf,
    pub osd_scores: Vec<PathBuf>,
    pub reference: Option<PathBuf>,
}

pub fn parse_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read manifest {}", path.display()))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut entries = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 4 {
            bail!(
                "manifest line {}: expected at least 4 tab-separated fields, found {}",
                idx + 1,
                fields.len()
            );
        }
        let paths = |field: &str| -> Vec<PathBuf> {
            if field == "-" || field.is_empty() {
                Vec::new()
            } else {
                field.split(',').map(|p| base.join(p)).collect()
            }
        };
        let vad_scores = paths(fields[1]);
        if vad_scores.is_empty() {
            bail!("manifest line {}: VAD scores are required", idx + 1);
        }
        if fields[2] == "-" || fields[2].is_empty() {
            bail!("manifest line {}: embeddings path is required", idx + 1);
        }
        entries.push(ManifestEntry {
            recording_id: fields[0].to_string(),
            vad_scores,
            embeddings: base.join(fields[2]),
            osd_scores: paths(fields[3]),
            reference: fields
                .get(4)
                .filter(|f| !f.is_empty() && **f != "-")
                .map(|f| base.join(f)),
        });
    }
    if entries.is_empty() {
        bail!("manifest {} lists no recordings", path.display());
    }
    Ok(entries)
}

/// Per-recording scoring regions from a UEM file.
pub fn parse_uem(text: &str) -> Result<BTreeMap<String, Timeline>> {
    let mut intervals: BTreeMap<String, Vec<Interval>> = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with(';') || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            bail!(
                "UEM line {}: expected \"recording channel onset offset\"",
                idx + 1
            );
        }
        let onset: f64 = fields[2]
            .parse()
            .with_context(|| format!("UEM line {}: bad onset", idx + 1))?;
        let offset: f64 = fields[3]
            .parse()
            .with_context(|| format!("UEM line {}: bad offset", idx + 1))?;
        if offset <= onset {
            bail!("UEM line {}: offset must exceed onset", idx + 1);
        }
        intervals.entry(fields[0].to_string()).or_default().push(
            Interval::from_range(Ticks::from_seconds(onset), Ticks::from_seconds(offset)),
        );
    }
    Ok(intervals
        .into_iter()
        .map(|(rec, ivs)| (rec, Timeline::from_intervals(ivs)))
        .collect())
}
