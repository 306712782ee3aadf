//! One-shot subcommands: each wraps a single pipeline stage over files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use diarkit::ahc::{diarize_ahc, AhcConfig, Linkage};
use diarkit::embeddings::{resample_to_segments, uniform_segments};
use diarkit::frame_scores::{
    binarize, fuse_streams, read_scores_file, write_scores_file,
};
use diarkit::fusion::dover_lap;
use diarkit::metrics::{components, DerBreakdown, ScoringOptions};
use diarkit::simgen::{generate, noisy_scores_from_timeline, SimConfig};
use diarkit::timeline::rttm;
use diarkit::tsvad::{diarize_tsvad, TsvadConfig};
use diarkit::{Annotation, Ticks, Timeline};

use crate::manifest::parse_uem;
use crate::scorer::ScorerBinding;

pub fn fuse_scores(inputs: &[PathBuf], weights: Option<&[f64]>, output: &Path) -> Result<()> {
    let streams = inputs
        .iter()
        .map(|p| read_scores_file(p).with_context(|| format!("reading {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let fused = fuse_streams(&streams, weights)?;
    write_scores_file(output, &fused)?;
    Ok(())
}

pub fn binarize_scores(
    scores: &Path,
    onset: f64,
    offset: f64,
    min_on: f64,
    min_off: f64,
    label: &str,
    output: &Path,
) -> Result<()> {
    let stream = read_scores_file(scores)?;
    let timeline = binarize(
        &stream,
        onset,
        offset,
        Ticks::from_seconds(min_on),
        Ticks::from_seconds(min_off),
    )?;
    let ann = Annotation::from_label_timelines(
        stream.recording_id(),
        [(label.to_string(), timeline)],
    )?;
    rttm::write_file(output, std::slice::from_ref(&ann))?;
    Ok(())
}

pub fn segment(speech: &Path, window: f64, shift: f64, output: &Path) -> Result<()> {
    let annotations = rttm::read_file(speech)?;
    let mut out = String::new();
    for ann in &annotations {
        let segments = uniform_segments(
            &ann.support(),
            Ticks::from_seconds(window),
            Ticks::from_seconds(shift),
        )?;
        for s in segments {
            writeln!(
                out,
                "{}\t{}\t{}",
                ann.recording_id(),
                s.onset().seconds(),
                s.duration().seconds()
            )?;
        }
    }
    std::fs::write(output, out)?;
    Ok(())
}

/// Loads a single-recording RTTM as (recording id, support timeline).
fn single_recording_timeline(path: &Path, recording_id: Option<&str>) -> Result<(String, Timeline)> {
    let annotations = rttm::read_file(path)?;
    match recording_id {
        Some(rec) => {
            let ann = annotations
                .iter()
                .find(|a| a.recording_id() == rec)
                .with_context(|| format!("{} lacks recording {rec}", path.display()))?;
            Ok((rec.to_string(), ann.support()))
        }
        None => match annotations.as_slice() {
            [] => bail!("{} contains no records", path.display()),
            [ann] => Ok((ann.recording_id().to_string(), ann.support())),
            many => bail!(
                "{} contains {} recordings; pass --recording-id",
                path.display(),
                many.len()
            ),
        },
    }
}

#[allow(clippy::too_many_arguments)]
pub fn ahc(
    speech: &Path,
    embeddings: &Path,
    osd: Option<&Path>,
    recording_id: Option<&str>,
    segment_thr: f64,
    stop_thr: f64,
    speaker_thr: f64,
    long_cluster_min: f64,
    linkage: &str,
    merge_max_gap: f64,
    resegment: Option<(f64, f64)>,
    output: &Path,
) -> Result<()> {
    let (rec, speech_tl) = single_recording_timeline(speech, recording_id)?;
    let mut seq = diarkit::embeddings::read_file(embeddings, &rec)?;
    if let Some((window, shift)) = resegment {
        let segments = uniform_segments(
            &speech_tl,
            Ticks::from_seconds(window),
            Ticks::from_seconds(shift),
        )?;
        seq = resample_to_segments(&seq, &segments)?;
    }
    let osd_tl = match osd {
        Some(path) => single_recording_timeline(path, Some(&rec)).map(|(_, tl)| tl)?,
        None => Timeline::new(),
    };
    let cfg = AhcConfig {
        segment_thr,
        stop_thr,
        speaker_thr,
        long_cluster_min: Ticks::from_seconds(long_cluster_min),
        linkage: linkage.parse::<Linkage>()?,
        merge_max_gap: Ticks::from_seconds(merge_max_gap),
    };
    let ann = diarize_ahc(&speech_tl, &seq, &osd_tl, &cfg)?;
    rttm::write_file(output, std::slice::from_ref(&ann))?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn tsvad(
    speech: &Path,
    embeddings: &Path,
    init: &Path,
    scorer_spec: &str,
    recording_id: Option<&str>,
    chunk_len: f64,
    stride: f64,
    resolution: f64,
    capacity: usize,
    threshold: f64,
    min_on: f64,
    min_off: f64,
    output: &Path,
) -> Result<()> {
    let (rec, speech_tl) = single_recording_timeline(speech, recording_id)?;
    let seq = diarkit::embeddings::read_file(embeddings, &rec)?;
    let init_ann = rttm::read_file(init)?
        .into_iter()
        .find(|a| a.recording_id() == rec)
        .with_context(|| format!("{} lacks recording {rec}", init.display()))?;
    let cfg = TsvadConfig {
        chunk_len: Ticks::from_seconds(chunk_len),
        stride: Ticks::from_seconds(stride),
        resolution: Ticks::from_seconds(resolution),
        capacity,
        threshold,
        min_on: Ticks::from_seconds(min_on),
        min_off: Ticks::from_seconds(min_off),
    };
    let binding = ScorerBinding::parse(scorer_spec, cfg.resolution)?;
    let ann = diarize_tsvad(&speech_tl, &seq, &init_ann, binding.as_frame_scorer(), &cfg)?;
    rttm::write_file(output, std::slice::from_ref(&ann))?;
    Ok(())
}

/// Fuses multi-recording RTTM hypothesis files recording by recording.
pub fn dover_lap_files(
    inputs: &[PathBuf],
    weights: Option<&[f64]>,
    rank_exponent: f64,
    output: &Path,
) -> Result<()> {
    if let Some(w) = weights {
        if w.len() != inputs.len() {
            bail!("{} weights for {} inputs", w.len(), inputs.len());
        }
    }
    let per_file: Vec<Vec<Annotation>> = inputs
        .iter()
        .map(|p| rttm::read_file(p).with_context(|| format!("reading {}", p.display())))
        .collect::<Result<Vec<_>>>()?;

    // Recording order: first appearance across inputs in argument order.
    let mut order: Vec<String> = Vec::new();
    for anns in &per_file {
        for a in anns {
            if !order.iter().any(|r| r == a.recording_id()) {
                order.push(a.recording_id().to_string());
            }
        }
    }

    let mut fused_all = Vec::with_capacity(order.len());
    for rec in &order {
        let hyps: Vec<Annotation> = per_file
            .iter()
            .map(|anns| {
                anns.iter()
                    .find(|a| a.recording_id() == rec)
                    .cloned()
                    .unwrap_or_else(|| {
                        log::warn!("an input lacks recording {rec}; treating as empty");
                        Annotation::new(rec.clone())
                    })
            })
            .collect();
        fused_all.push(dover_lap(&hyps, weights, rank_exponent)?);
    }
    rttm::write_file(output, &fused_all)?;
    Ok(())
}

pub fn score(
    reference: &Path,
    hypothesis: &Path,
    collar: f64,
    ignore_overlaps: bool,
    uem: Option<&Path>,
    report: Option<&Path>,
) -> Result<()> {
    let refs = rttm::read_file(reference)?;
    if refs.is_empty() {
        bail!("{} contains no reference records", reference.display());
    }
    let hyps: BTreeMap<String, Annotation> = rttm::read_file(hypothesis)?
        .into_iter()
        .map(|a| (a.recording_id().to_string(), a))
        .collect();
    let uem_map = match uem {
        Some(path) => Some(parse_uem(&std::fs::read_to_string(path)?)?),
        None => None,
    };
    for rec in hyps.keys() {
        if !refs.iter().any(|r| r.recording_id() == rec.as_str()) {
            log::warn!("hypothesis recording {rec} has no reference; skipped");
        }
    }

    let mut rows: Vec<(String, DerBreakdown)> = Vec::new();
    let mut total = DerBreakdown::default();
    for reference in &refs {
        let rec = reference.recording_id();
        let hyp = hyps
            .get(rec)
            .cloned()
            .unwrap_or_else(|| Annotation::new(rec));
        let opts = ScoringOptions {
            collar: Ticks::from_seconds(collar),
            score_overlaps: !ignore_overlaps,
            uem: uem_map.as_ref().and_then(|m| m.get(rec).cloned()),
        };
        let b = components(reference, &hyp, &opts);
        total += &b;
        rows.push((rec.to_string(), b));
    }
    if !total.total_reference_ticks().is_positive() {
        bail!("no scored reference speech; DER undefined");
    }

    let fmt_der = |b: &DerBreakdown| {
        if b.total_reference_ticks().is_positive() {
            format!("{:8.3}", 100.0 * b.der())
        } else {
            format!("{:>8}", "-")
        }
    };
    println!(
        "{:<24} {:>8} {:>10} {:>10} {:>10} {:>12}",
        "Recording", "DER%", "Miss(s)", "FA(s)", "Conf(s)", "Ref(s)"
    );
    for (rec, b) in &rows {
        println!(
            "{:<24} {} {:>10.3} {:>10.3} {:>10.3} {:>12.3}",
            rec,
            fmt_der(b),
            b.miss(),
            b.false_alarm(),
            b.confusion(),
            b.total_reference()
        );
    }
    println!(
        "{:<24} {} {:>10.3} {:>10.3} {:>10.3} {:>12.3}",
        "OVERALL",
        fmt_der(&total),
        total.miss(),
        total.false_alarm(),
        total.confusion(),
        total.total_reference()
    );
    println!(
        "#SUMMARY der={:.6} miss={:.3} false_alarm={:.3} confusion={:.3} total_reference={:.3}",
        total.der(),
        total.miss(),
        total.false_alarm(),
        total.confusion(),
        total.total_reference()
    );

    if let Some(path) = report {
        let mut tsv = String::from(
            "recording\tder\tmiss_seconds\tfalse_alarm_seconds\tconfusion_seconds\ttotal_reference_seconds\n",
        );
        for (rec, b) in rows.iter().chain(std::iter::once(&("OVERALL".to_string(), total))) {
            let der = if b.total_reference_ticks().is_positive() {
                format!("{:.6}", b.der())
            } else {
                "nan".to_string()
            };
            writeln!(
                tsv,
                "{rec}\t{der}\t{:.3}\t{:.3}\t{:.3}\t{:.3}",
                b.miss(),
                b.false_alarm(),
                b.confusion(),
                b.total_reference()
            )?;
        }
        std::fs::write(path, tsv)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub struct SimgenArgs {
    pub output: PathBuf,
    pub count: usize,
    pub seed: u64,
    pub speakers: (usize, usize),
    pub duration: f64,
    pub overlap_prob: f64,
    pub dim: usize,
    pub within_noise: f64,
    pub score_noise: f64,
    pub turn_len: (f64, f64),
    pub pause_len: (f64, f64),
}

/// Writes a synthetic corpus: per-recording artifacts plus a manifest.
///
/// Recording seeds derive as `seed + index`; per-recording speaker counts
/// (when a range is given) come from one ChaCha20 stream seeded with `seed`.
pub fn simgen(args: &SimgenArgs) -> Result<()> {
    use rand::prelude::*;
    let mut count_rng = rand_chacha_seed(args.seed);
    std::fs::create_dir_all(&args.output)?;
    let mut manifest = String::new();

    for i in 0..args.count {
        let rec = format!("sim{i:03}");
        let n_speakers = if args.speakers.0 == args.speakers.1 {
            args.speakers.0
        } else {
            count_rng.random_range(args.speakers.0..=args.speakers.1)
        };
        let cfg = SimConfig {
            recording_id: rec.clone(),
            seed: args.seed + i as u64,
            n_speakers,
            duration: Ticks::from_seconds(args.duration),
            turn_len: (
                Ticks::from_seconds(args.turn_len.0),
                Ticks::from_seconds(args.turn_len.1),
            ),
            pause_len: (
                Ticks::from_seconds(args.pause_len.0),
                Ticks::from_seconds(args.pause_len.1),
            ),
            overlap_prob: args.overlap_prob,
            embedding_dim: args.dim,
            within_noise: args.within_noise,
            score_noise: args.score_noise,
            ..SimConfig::default()
        };
        let out = generate(&cfg)?;
        let dir = args.output.join(&rec);
        std::fs::create_dir_all(&dir)?;
        rttm::write_file(dir.join("ref.rttm"), std::slice::from_ref(&out.reference))?;
        let speech_ann = Annotation::from_label_timelines(
            rec.clone(),
            [("speech".to_string(), out.speech.clone())],
        )?;
        rttm::write_file(dir.join("speech.rttm"), std::slice::from_ref(&speech_ann))?;
        let osd_ann = Annotation::from_label_timelines(
            rec.clone(),
            [("overlap".to_string(), out.osd.clone())],
        )?;
        rttm::write_file(dir.join("osd.rttm"), std::slice::from_ref(&osd_ann))?;
        write_scores_file(dir.join("vad.scores"), &out.vad_scores)?;
        // OSD scores on the same grid, from an independent derived seed.
        let osd_scores = noisy_scores_from_timeline(
            rec.clone(),
            &out.osd,
            out.vad_scores.len(),
            out.vad_scores.frame_shift(),
            args.score_noise,
            args.seed + i as u64 + 0x05D,
        )?;
        write_scores_file(dir.join("osd.scores"), &osd_scores)?;
        diarkit::embeddings::write_file(dir.join("embeddings.embd"), &out.embeddings)?;

        writeln!(
            manifest,
            "{rec}\t{rec}/vad.scores\t{rec}/embeddings.embd\t{rec}/osd.scores\t{rec}/ref.rttm"
        )?;
    }
    std::fs::write(args.output.join("manifest.tsv"), manifest)?;
    Ok(())
}

fn rand_chacha_seed(seed: u64) -> rand_chacha::ChaCha20Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha20Rng::seed_from_u64(seed)
}

/// Parses "A" or "A:B" numeric ranges.
pub fn parse_range_f64(s: &str) -> Result<(f64, f64)> {
    match s.split_once(':') {
        Some((a, b)) => Ok((a.parse()?, b.parse()?)),
        None => {
            let v: f64 = s.parse()?;
            Ok((v, v))
        }
    }
}

pub fn parse_range_usize(s: &str) -> Result<(usize, usize)> {
    match s.split_once(':') {
        Some((a, b)) => Ok((a.parse()?, b.parse()?)),
        None => {
            let v: usize = s.parse()?;
            Ok((v, v))
        }
    }
}

