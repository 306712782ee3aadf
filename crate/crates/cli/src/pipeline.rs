//! Config-driven end-to-end pipeline over a recording manifest.
//!
//! Per recording: VAD score fusion, binarization, OSD binarization, uniform
//! segmentation with embedding resampling, one clustering pass per [ahc.*]
//! entry, fusion of the clustering systems, optional TSVAD refinement per
//! scorer seeded by the fused clustering, and a final fusion. Every stage
//! artifact is written before the next stage consumes it, under
//! `<output_dir>/<recording_id>/`.
//!
//! Stage outputs are content-addressed: each artifact carries a sidecar
//! `.hash` holding a digest of the stage parameters and the full upstream
//! lineage, so re-runs with unchanged inputs and config reuse the artifact
//! instead of recomputing. Recordings are dispatched to a worker pool;
//! failures are isolated per recording.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use diarkit::ahc::diarize_ahc;
use diarkit::embeddings::{resample_to_segments, uniform_segments};
use diarkit::frame_scores::{binarize, fuse_streams, read_scores_file, write_scores};
use diarkit::fusion::dover_lap;
use diarkit::metrics::{components, DerBreakdown, ScoringOptions};
use diarkit::timeline::rttm;
use diarkit::tsvad::diarize_tsvad;
use diarkit::{Annotation, Interval, Ticks, Timeline};
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::manifest::{parse_manifest, ManifestEntry};
use crate::scorer::ScorerBinding;

pub struct PipelineOutcome {
    pub failures: usize,
    pub recordings: usize,
}

pub fn run(config: &PipelineConfig, jobs: Option<usize>) -> Result<PipelineOutcome> {
    let entries = parse_manifest(&config.manifest)?;
    std::fs::create_dir_all(&config.output_dir)
        .with_context(|| format!("cannot create {}", config.output_dir.display()))?;

    let jobs = jobs
        .or(config.jobs)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .context("cannot build worker pool")?;

    let results: Vec<Result<RecordingSystems>> = pool.install(|| {
        use rayon::prelude::*;
        entries
            .par_iter()
            .map(|entry| {
                process_recording(config, entry)
                    .with_context(|| format!("recording {}", entry.recording_id))
            })
            .collect()
    });

    let mut failures = 0usize;
    let mut succeeded: Vec<RecordingSystems> = Vec::new();
    for result in results {
        match result {
            Ok(systems) => succeeded.push(systems),
            Err(e) => {
                failures += 1;
                log::error!("{e:#}");
                eprintln!("error: {e:#}");
            }
        }
    }

    write_report(config, &succeeded)?;
    Ok(PipelineOutcome {
        failures,
        recordings: entries.len(),
    })
}

struct RecordingSystems {
    reference: Option<Annotation>,
    /// (system name, hypothesis) in stage order.
    systems: Vec<(String, Annotation)>,
}

/// Digest of a stage: parameters plus upstream lineage.
fn stage_key(parent: &str, stage: &str, params: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(parent.as_bytes());
    hasher.update(b"|");
    hasher.update(stage.as_bytes());
    hasher.update(b"|");
    hasher.update(params.as_bytes());
    hex::encode(&hasher.finalize()[..12])
}

fn hash_files(paths: &[PathBuf]) -> Result<String> {
    let mut hasher = Sha256::new();
    for path in paths {
        hasher.update(path.file_name().map(|n| n.to_string_lossy()).unwrap_or_default().as_bytes());
        hasher.update(b"|");
        let bytes =
            std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
        hasher.update(&bytes);
        hasher.update(b"|");
    }
    Ok(hex::encode(&hasher.finalize()[..12]))
}

/// Runs one cacheable stage: reuse the artifact when the sidecar key
/// matches, otherwise compute, write, and stamp it.
fn stage<T>(
    dir: &Path,
    artifact: &str,
    key: &str,
    load: impl FnOnce(&Path) -> Result<T>,
    compute: impl FnOnce() -> Result<(T, Vec<u8>)>,
) -> Result<T> {
    let path = dir.join(artifact);
    let sidecar = dir.join(format!("{artifact}.hash"));
    if path.is_file() {
        if let Ok(existing) = std::fs::read_to_string(&sidecar) {
            if existing.trim() == key {
                log::debug!("reusing cached {}", path.display());
                return load(&path);
            }
        }
    }
    let (value, bytes) = compute()?;
    std::fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
    std::fs::write(&sidecar, key)?;
    Ok(value)
}

fn timeline_to_rttm(recording_id: &str, timeline: &Timeline, label: &str) -> Result<String> {
    let ann = Annotation::from_label_timelines(
        recording_id,
        [(label.to_string(), timeline.clone())],
    )?;
    Ok(rttm::write(std::slice::from_ref(&ann)))
}

fn load_timeline_rttm(path: &Path) -> Result<Timeline> {
    let anns = rttm::read_file(path)?;
    Ok(anns.first().map(Annotation::support).unwrap_or_default())
}

fn load_annotation(path: &Path, recording_id: &str) -> Result<Annotation> {
    let anns = rttm::read_file(path)?;
    Ok(anns
        .into_iter()
        .next()
        .unwrap_or_else(|| Annotation::new(recording_id)))
}

fn segments_tsv(recording_id: &str, segments: &[Interval]) -> String {
    let mut out = String::new();
    for s in segments {
        writeln!(
            out,
            "{recording_id}\t{}\t{}",
            s.onset().seconds(),
            s.duration().seconds()
        )
        .expect("string write cannot fail");
    }
    out
}

fn parse_segments_tsv(text: &str) -> Result<Vec<Interval>> {
    let mut out = Vec::new();
    for line in text.lines() {
        let fields: Vec<&str> = line.split('\t').collect();
        anyhow::ensure!(fields.len() == 3, "malformed segments line: {line:?}");
        out.push(Interval::new(
            Ticks::from_seconds(fields[1].parse::<f64>()?),
            Ticks::from_seconds(fields[2].parse::<f64>()?),
        ));
    }
    Ok(out)
}

fn process_recording(config: &PipelineConfig, entry: &ManifestEntry) -> Result<RecordingSystems> {
    let rec = entry.recording_id.as_str();
    let dir = config.output_dir.join(rec);
    std::fs::create_dir_all(&dir)?;

    let mut input_files = entry.vad_scores.clone();
    input_files.push(entry.embeddings.clone());
    input_files.extend(entry.osd_scores.iter().cloned());
    let inputs_key = hash_files(&input_files)?;

    // VAD fusion.
    let vad_key = stage_key(&inputs_key, "vad_fused", "uniform");
    let vad_fused = stage(
        &dir,
        "vad_fused.scores",
        &vad_key,
        |p| Ok(read_scores_file(p)?),
        || {
            let streams = entry
                .vad_scores
                .iter()
                .map(|p| Ok(read_scores_file(p)?))
                .collect::<Result<Vec<_>>>()?;
            let fused = fuse_streams(&streams, None)?;
            let bytes = write_scores(&fused).into_bytes();
            Ok((fused, bytes))
        },
    )?;

    // Speech regions.
    let b = &config.vad;
    let speech_key = stage_key(
        &vad_key,
        "speech",
        &format!("onset={};offset={};on={};off={}", b.onset, b.offset, b.min_on, b.min_off),
    );
    let speech = stage(
        &dir,
        "speech.rttm",
        &speech_key,
        load_timeline_rttm,
        || {
            let timeline = binarize(
                &vad_fused,
                b.onset,
                b.offset,
                Ticks::from_seconds(b.min_on),
                Ticks::from_seconds(b.min_off),
            )?;
            let bytes = timeline_to_rttm(rec, &timeline, "speech")?.into_bytes();
            Ok((timeline, bytes))
        },
    )?;

    // Overlap regions (optional).
    let o = &config.osd;
    let osd_params = if entry.osd_scores.is_empty() {
        "none".to_string()
    } else {
        format!("onset={};offset={};on={};off={}", o.onset, o.offset, o.min_on, o.min_off)
    };
    let osd_key = stage_key(&inputs_key, "osd", &osd_params);
    let osd = stage(&dir, "osd.rttm", &osd_key, load_timeline_rttm, || {
        let timeline = if entry.osd_scores.is_empty() {
            Timeline::new()
        } else {
            let streams = entry
                .osd_scores
                .iter()
                .map(|p| Ok(read_scores_file(p)?))
                .collect::<Result<Vec<_>>>()?;
            let fused = fuse_streams(&streams, None)?;
            binarize(
                &fused,
                o.onset,
                o.offset,
                Ticks::from_seconds(o.min_on),
                Ticks::from_seconds(o.min_off),
            )?
        };
        let bytes = timeline_to_rttm(rec, &timeline, "overlap")?.into_bytes();
        Ok((timeline, bytes))
    })?;

    // Segmentation.
    let seg = &config.segmentation;
    let segments_key = stage_key(
        &speech_key,
        "segments",
        &format!("window={};shift={}", seg.window, seg.shift),
    );
    let segments = stage(
        &dir,
        "segments.tsv",
        &segments_key,
        |p| parse_segments_tsv(&std::fs::read_to_string(p)?),
        || {
            let segments = uniform_segments(
                &speech,
                Ticks::from_seconds(seg.window),
                Ticks::from_seconds(seg.shift),
            )?;
            let bytes = segments_tsv(rec, &segments).into_bytes();
            Ok((segments, bytes))
        },
    )?;

    // Embedding resampling onto the pipeline's segments.
    let resample_key = stage_key(&segments_key, "resample", "midpoint-mean");
    let seq = stage(
        &dir,
        "segments.embd",
        &resample_key,
        |p| Ok(diarkit::embeddings::read_file(p, rec)?),
        || {
            let source = diarkit::embeddings::read_file(&entry.embeddings, rec)?;
            let resampled = resample_to_segments(&source, &segments)?;
            let bytes = diarkit::embeddings::write_binary(&resampled);
            Ok((resampled, bytes))
        },
    )?;

    let mut systems: Vec<(String, Annotation)> = Vec::new();

    // Clustering systems.
    let mut ahc_keys = Vec::new();
    for (name, section) in &config.ahc {
        let cfg = section.to_config()?;
        let key = stage_key(
            &format!("{resample_key}+{osd_key}"),
            "ahc",
            &format!("{name};{}", section.cache_params()),
        );
        let artifact = format!("{name}.rttm");
        let ann = stage(
            &dir,
            &artifact,
            &key,
            |p| load_annotation(p, rec),
            || {
                let ann = diarize_ahc(&speech, &seq, &osd, &cfg)?;
                let bytes = rttm::write(std::slice::from_ref(&ann)).into_bytes();
                Ok((ann, bytes))
            },
        )?;
        ahc_keys.push(key);
        systems.push((name.clone(), ann));
    }

    // Fusion of the clustering systems.
    let fusion_params = format!(
        "exp={};weights={:?}",
        config.fusion.rank_exponent, config.fusion.weights
    );
    let fused_key = stage_key(&ahc_keys.join("+"), "fused_ahc", &fusion_params);
    let ahc_annotations: Vec<Annotation> =
        systems.iter().map(|(_, a)| a.clone()).collect();
    let fused_ahc = stage(
        &dir,
        "fused_ahc.rttm",
        &fused_key,
        |p| load_annotation(p, rec),
        || {
            let fused = dover_lap(
                &ahc_annotations,
                config.fusion.weights.as_deref(),
                config.fusion.rank_exponent,
            )?;
            let bytes = rttm::write(std::slice::from_ref(&fused)).into_bytes();
            Ok((fused, bytes))
        },
    )?;
    systems.push(("fused_ahc".to_string(), fused_ahc.clone()));

    // TSVAD refinement per scorer, seeded by the fused clustering result.
    if config.tsvad.enabled {
        let tsvad_cfg = config.tsvad.to_config()?;
        let mut tsvad_keys = Vec::new();
        for (i, spec) in config.tsvad.scorers.iter().enumerate() {
            let binding = ScorerBinding::parse(spec, tsvad_cfg.resolution)?;
            let name = format!("tsvad_{}", ScorerBinding::artifact_name(spec, i));
            let key = stage_key(
                &format!("{fused_key}+{resample_key}"),
                "tsvad",
                &config.tsvad.cache_params(spec),
            );
            let artifact = format!("{name}.rttm");
            let ann = stage(
                &dir,
                &artifact,
                &key,
                |p| load_annotation(p, rec),
                || {
                    let ann = diarize_tsvad(
                        &speech,
                        &seq,
                        &fused_ahc,
                        binding.as_frame_scorer(),
                        &tsvad_cfg,
                    )?;
                    let bytes = rttm::write(std::slice::from_ref(&ann)).into_bytes();
                    Ok((ann, bytes))
                },
            )?;
            tsvad_keys.push(key);
            systems.push((name, ann));
        }

        // Final fusion over the fused clustering plus every TSVAD system.
        let final_key = stage_key(
            &format!("{fused_key}+{}", tsvad_keys.join("+")),
            "final",
            &fusion_params,
        );
        let stage_inputs: Vec<Annotation> = systems
            .iter()
            .filter(|(name, _)| name == "fused_ahc" || name.starts_with("tsvad_"))
            .map(|(_, a)| a.clone())
            .collect();
        let final_ann = stage(
            &dir,
            "final.rttm",
            &final_key,
            |p| load_annotation(p, rec),
            || {
                let fused = dover_lap(
                    &stage_inputs,
                    config.fusion.weights.as_deref(),
                    config.fusion.rank_exponent,
                )?;
                let bytes = rttm::write(std::slice::from_ref(&fused)).into_bytes();
                Ok((fused, bytes))
            },
        )?;
        systems.push(("final".to_string(), final_ann));
    } else {
        let final_key = stage_key(&fused_key, "final", "passthrough");
        let final_ann = stage(
            &dir,
            "final.rttm",
            &final_key,
            |p| load_annotation(p, rec),
            || {
                let bytes = rttm::write(std::slice::from_ref(&fused_ahc)).into_bytes();
                Ok((fused_ahc.clone(), bytes))
            },
        )?;
        systems.push(("final".to_string(), final_ann));
    }

    let reference = match &entry.reference {
        Some(path) => Some(
            rttm::read_file(path)?
                .into_iter()
                .find(|a| a.recording_id() == rec)
                .with_context(|| {
                    format!("reference {} lacks recording {rec}", path.display())
                })?,
        ),
        None => None,
    };

    Ok(RecordingSystems { reference, systems })
}

/// Corpus DER per system over recordings with references; table to stdout,
/// TSV alongside the artifacts.
fn write_report(config: &PipelineConfig, results: &[RecordingSystems]) -> Result<()> {
    let scored: Vec<&RecordingSystems> =
        results.iter().filter(|r| r.reference.is_some()).collect();
    if scored.is_empty() {
        log::info!("no references in manifest; skipping DER report");
        return Ok(());
    }
    let opts = ScoringOptions {
        collar: Ticks::from_seconds(config.scoring.collar),
        score_overlaps: config.scoring.score_overlaps,
        uem: None,
    };

    let system_names: Vec<String> = scored[0]
        .systems
        .iter()
        .map(|(name, _)| name.clone())
        .collect();
    let mut rows: Vec<(String, DerBreakdown)> = Vec::new();
    for name in &system_names {
        let mut total = DerBreakdown::default();
        for r in &scored {
            let reference = r.reference.as_ref().expect("filtered to scored");
            let hyp = r
                .systems
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, a)| a)
                .context("system missing for a recording")?;
            total += &components(reference, hyp, &opts);
        }
        rows.push((name.clone(), total));
    }

    let mut table = String::new();
    writeln!(
        table,
        "{:<16} {:>8} {:>10} {:>10} {:>10} {:>12}",
        "System", "DER%", "Miss(s)", "FA(s)", "Conf(s)", "Ref(s)"
    )?;
    let mut tsv = String::from("system\tder\tmiss_seconds\tfalse_alarm_seconds\tconfusion_seconds\ttotal_reference_seconds\n");
    for (name, b) in &rows {
        let der = if b.total_reference_ticks().is_positive() {
            b.der()
        } else {
            f64::NAN
        };
        writeln!(
            table,
            "{:<16} {:>8.3} {:>10.3} {:>10.3} {:>10.3} {:>12.3}",
            name,
            100.0 * der,
            b.miss(),
            b.false_alarm(),
            b.confusion(),
            b.total_reference()
        )?;
        writeln!(
            tsv,
            "{name}\t{der:.6}\t{:.3}\t{:.3}\t{:.3}\t{:.3}",
            b.miss(),
            b.false_alarm(),
            b.confusion(),
            b.total_reference()
        )?;
    }
    print!("{table}");
    std::fs::write(config.output_dir.join("der_report.tsv"), tsv)?;
    Ok(())
}
