//! Target-speaker VAD inference plumbing: profile extraction, fixed-length
//! chunking, score-averaged stitching, and binarization of per-speaker
//! activity at a coarse output resolution.
//!
//! The neural scorer is pluggable through [`FrameScorer`]; [`CosineScorer`]
//! is a deterministic, training-free stand-in that scores each frame by the
//! cosine between a speaker profile and the nearest segment embedding.

use std::fmt::Write as _;

use crate::embeddings::{clamp_cosine, normalize_f64_to_f32, EmbeddingSequence};
use crate::error::{Error, Result};
use crate::frame_scores::{binarize, FrameScoreStream};
use crate::timeline::{Annotation, Interval, Ticks, Timeline};

/// Default inference geometry: 16 s chunks, 1 s stride, 0.08 s resolution,
/// at most 30 speakers.
pub const DEFAULT_CHUNK_LEN: Ticks = Ticks::from_millis(16_000);
pub const DEFAULT_STRIDE: Ticks = Ticks::from_millis(1_000);
pub const DEFAULT_RESOLUTION: Ticks = Ticks::from_millis(80);
pub const DEFAULT_CAPACITY: usize = 30;

/// One speaker profile: a label and its unit embedding.
#[derive(Clone, PartialEq, Debug)]
pub struct SpeakerProfile {
    pub label: String,
    pub vector: Vec<f32>,
}

/// Ranked speaker profiles for one recording (longest speaker first).
#[derive(Clone, PartialEq, Debug)]
pub struct SpeakerProfileSet {
    recording_id: String,
    dim: usize,
    capacity: usize,
    profiles: Vec<SpeakerProfile>,
}

impl SpeakerProfileSet {
    pub fn new(
        recording_id: impl Into<String>,
        dim: usize,
        capacity: usize,
        profiles: Vec<(String, Vec<f32>)>,
    ) -> Result<SpeakerProfileSet> {
        if capacity == 0 {
            return Err(Error::InvalidArgument("profile capacity must be positive".into()));
        }
        if profiles.len() > capacity {
            return Err(Error::InvalidArgument(format!(
                "{} profiles exceed capacity {capacity}",
                profiles.len()
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut out = Vec::with_capacity(profiles.len());
        for (label, vector) in profiles {
            if vector.len() != dim {
                return Err(Error::InvalidArgument(format!(
                    "profile {label:?} has dimension {}, expected {dim}",
                    vector.len()
                )));
            }
            if !seen.insert(label.clone()) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate profile label {label:?}"
                )));
            }
            let vector = crate::embeddings::normalize_f32(&vector)
                .ok_or_else(|| Error::InvalidArgument(format!("profile {label:?} has zero norm")))?;
            out.push(SpeakerProfile { label, vector });
        }
        Ok(SpeakerProfileSet {
            recording_id: recording_id.into(),
            dim,
            capacity,
            profiles: out,
        })
    }

    pub fn recording_id(&self) -> &str {
        &self.recording_id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn profiles(&self) -> &[SpeakerProfile] {
        &self.profiles
    }

    pub fn labels(&self) -> Vec<&str> {
        self.profiles.iter().map(|p| p.label.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }
}

/// Profile extraction result: the kept set plus any dropped labels.
#[derive(Clone, Debug)]
pub struct ProfileExtraction {
    pub profiles: SpeakerProfileSet,
    /// Labels dropped for exceeding capacity or lacking covering segments.
    pub dropped: Vec<String>,
}

/// Per-speaker activity scores on the global output frame grid, plus the
/// number of chunks that contributed to each cell.
#[derive(Clone, PartialEq, Debug)]
pub struct ActivityMatrix {
    recording_id: String,
    resolution: Ticks,
    labels: Vec<String>,
    n_frames: usize,
    scores: Vec<f64>,
    weights: Vec<u32>,
}

impl ActivityMatrix {
    pub fn recording_id(&self) -> &str {
        &self.recording_id
    }

    pub fn resolution(&self) -> Ticks {
        self.resolution
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn score(&self, speaker: usize, frame: usize) -> f64 {
        self.scores[speaker * self.n_frames + frame]
    }

    pub fn weight(&self, speaker: usize, frame: usize) -> u32 {
        self.weights[speaker * self.n_frames + frame]
    }

    /// One speaker's row as a score stream at the output resolution.
    pub fn speaker_stream(&self, speaker: usize) -> Result<FrameScoreStream> {
        let row = &self.scores[speaker * self.n_frames..(speaker + 1) * self.n_frames];
        FrameScoreStream::new(self.recording_id.clone(), self.resolution, row.to_vec())
    }
}

/// Per-speaker scores over one chunk's frame range.
#[derive(Clone, PartialEq, Debug)]
pub struct ChunkScores {
    pub recording_id: String,
    pub interval: Interval,
    pub resolution: Ticks,
    pub labels: Vec<String>,
    /// Speaker-major block: `labels.len()` rows of `frame_count` scores.
    pub scores: Vec<f64>,
}

impl ChunkScores {
    pub fn frame_range(&self) -> (i64, i64) {
        frame_range(self.interval, self.resolution)
    }

    pub fn frame_count(&self) -> usize {
        let (lo, hi) = self.frame_range();
        (hi - lo) as usize
    }
}

/// Global output frames a chunk covers: every frame its span intersects.
pub fn frame_range(chunk: Interval, resolution: Ticks) -> (i64, i64) {
    (
        chunk.onset().div_floor(resolution),
        chunk.end().div_ceil(resolution),
    )
}

/// A chunk-level activity scorer (the pluggable neural model boundary).
///
/// Implementations receive the chunk interval, the embedding sequence
/// restricted to entries overlapping the chunk, and the speaker profiles,
/// and must return one score row per profile covering exactly the chunk's
/// [`frame_range`] at the configured resolution.
pub trait FrameScorer {
    fn score_chunk(
        &self,
        chunk: Interval,
        seq: &EmbeddingSequence,
        profiles: &SpeakerProfileSet,
    ) -> Result<ChunkScores>;
}

/// Deterministic scorer: `score = (1 + cos(profile, nearest segment
/// embedding)) / 2`, and 0 for frames no segment covers.
#[derive(Clone, Copy, Debug)]
pub struct CosineScorer {
    pub resolution: Ticks,
}

impl Default for CosineScorer {
    fn default() -> Self {
        CosineScorer {
            resolution: DEFAULT_RESOLUTION,
        }
    }
}

impl FrameScorer for CosineScorer {
    fn score_chunk(
        &self,
        chunk: Interval,
        seq: &EmbeddingSequence,
        profiles: &SpeakerProfileSet,
    ) -> Result<ChunkScores> {
        let (lo, hi) = frame_range(chunk, self.resolution);
        let n_frames = (hi - lo) as usize;
        let n_speakers = profiles.len();
        let mut scores = vec![0.0; n_speakers * n_frames];
        for f in 0..n_frames {
            let span = Interval::new(self.resolution * (lo + f as i64), self.resolution);
            let center = span.midpoint();
            let nearest = seq
                .entries()
                .iter()
                .filter(|e| e.interval().overlaps(&span))
                .min_by_key(|e| {
                    let d = (e.interval().midpoint() - center).abs();
                    (d, e.interval().onset(), e.interval().duration())
                });
            if let Some(entry) = nearest {
                for (s, profile) in profiles.profiles().iter().enumerate() {
                    let cos = clamp_cosine(
                        profile
                            .vector
                            .iter()
                            .zip(entry.vector())
                            .map(|(&a, &b)| a as f64 * b as f64)
                            .sum(),
                    );
                    scores[s * n_frames + f] = (1.0 + cos) / 2.0;
                }
            }
        }
        Ok(ChunkScores {
            recording_id: profiles.recording_id().to_string(),
            interval: chunk,
            resolution: self.resolution,
            labels: profiles.labels().iter().map(|s| s.to_string()).collect(),
            scores,
        })
    }
}

/// TSVAD inference knobs.
#[derive(Clone, Debug)]
pub struct TsvadConfig {
    pub chunk_len: Ticks,
    pub stride: Ticks,
    pub resolution: Ticks,
    pub capacity: usize,
    /// Binarization threshold on stitched scores. Under the cosine scorer's
    /// affine map this default corresponds to cosine 0.5, halfway between
    /// orthogonal (0.5) and identical (1.0) speakers; neural posteriors
    /// typically want 0.5 instead.
    pub threshold: f64,
    pub min_on: Ticks,
    pub min_off: Ticks,
}

impl Default for TsvadConfig {
    fn default() -> Self {
        TsvadConfig {
            chunk_len: DEFAULT_CHUNK_LEN,
            stride: DEFAULT_STRIDE,
            resolution: DEFAULT_RESOLUTION,
            capacity: DEFAULT_CAPACITY,
            threshold: 0.75,
            min_on: Ticks::from_millis(160),
            min_off: Ticks::from_millis(160),
        }
    }
}

impl TsvadConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.chunk_len.is_positive() || !self.stride.is_positive() {
            return Err(Error::Config("chunk_len and stride must be positive".into()));
        }
        if !self.resolution.is_positive() {
            return Err(Error::Config("resolution must be positive".into()));
        }
        if self.capacity == 0 {
            return Err(Error::Config("capacity must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config(format!(
                "threshold outside [0, 1]: {}",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// Extracts one profile per speaker from an initial diarization.
///
/// A segment contributes to the speaker whose single-speaker region contains
/// the segment's midpoint. Speakers are ranked by total speech duration;
/// beyond `capacity` the shortest are dropped (reported in the result), as
/// are speakers with no covering segments.
pub fn extract_profiles(
    diar: &Annotation,
    seq: &EmbeddingSequence,
    capacity: usize,
) -> Result<ProfileExtraction> {
    if diar.recording_id() != seq.recording_id() {
        return Err(Error::InvalidArgument(format!(
            "diarization for {:?} but embeddings for {:?}",
            diar.recording_id(),
            seq.recording_id()
        )));
    }
    if capacity == 0 {
        return Err(Error::InvalidArgument("profile capacity must be positive".into()));
    }

    let label_timelines = diar.label_timelines();
    let overlap = diar.overlap_regions();
    let mut dropped = Vec::new();

    // Rank speakers by total speech duration, longest first.
    let mut ranked: Vec<(&String, &Timeline)> = label_timelines.iter().collect();
    ranked.sort_by_key(|(label, tl)| (std::cmp::Reverse(tl.total_duration()), (*label).clone()));

    let mut kept: Vec<(String, Vec<f32>)> = Vec::new();
    for (label, timeline) in ranked {
        let solo = timeline.difference(&overlap);
        let mut sum = vec![0.0f64; seq.dim()];
        let mut count = 0usize;
        for entry in seq.entries() {
            if solo.contains(entry.interval().midpoint()) {
                for (acc, &x) in sum.iter_mut().zip(entry.vector()) {
                    *acc += x as f64;
                }
                count += 1;
            }
        }
        if count == 0 {
            log::warn!(
                "{}: speaker {label:?} has no covering segment vectors; dropped from profiles",
                diar.recording_id()
            );
            dropped.push(label.clone());
            continue;
        }
        if kept.len() == capacity {
            dropped.push(label.clone());
            continue;
        }
        let Some(vector) = normalize_f64_to_f32(&sum) else {
            // Segment vectors cancelled each other; no meaningful profile.
            log::warn!(
                "{}: speaker {label:?} segment vectors sum to zero; dropped from profiles",
                diar.recording_id()
            );
            dropped.push(label.clone());
            continue;
        };
        kept.push((label.clone(), vector));
    }
    if kept.len() < label_timelines.len() {
        log::warn!(
            "{}: kept {} of {} speakers as profiles",
            diar.recording_id(),
            kept.len(),
            label_timelines.len()
        );
    }

    Ok(ProfileExtraction {
        profiles: SpeakerProfileSet::new(diar.recording_id(), seq.dim(), capacity, kept)?,
        dropped,
    })
}

/// Fixed-length chunk spans over `[0, total)`.
///
/// Chunks start at multiples of `stride`; the first chunk whose end reaches
/// `total` is clipped there and ends the sequence. Audio no longer than one
/// chunk yields a single span.
pub fn chunk_spans(total: Ticks, chunk_len: Ticks, stride: Ticks) -> Result<Vec<Interval>> {
    if !chunk_len.is_positive() || !stride.is_positive() {
        return Err(Error::InvalidArgument(
            "chunk length and stride must be positive".into(),
        ));
    }
    let mut spans = Vec::new();
    if !total.is_positive() {
        return Ok(spans);
    }
    let mut k = 0i64;
    loop {
        let start = stride * k;
        if start >= total {
            break;
        }
        let end = start + chunk_len;
        if end >= total {
            spans.push(Interval::from_range(start, total));
            break;
        }
        spans.push(Interval::from_range(start, end));
        k += 1;
    }
    Ok(spans)
}

/// Averages chunked predictions on the global frame grid.
///
/// Each output cell is the arithmetic mean of all chunk scores covering it;
/// the weight matrix records how many chunks contributed. Uncovered frames
/// score 0 with weight 0.
pub fn stitch(chunks: &[ChunkScores]) -> Result<ActivityMatrix> {
    let first = chunks
        .first()
        .ok_or_else(|| Error::InvalidArgument("no chunks to stitch".into()))?;
    for c in chunks {
        if c.labels != first.labels {
            return Err(Error::Internal("chunk speaker orderings differ".into()));
        }
        if c.resolution != first.resolution {
            return Err(Error::Internal("chunk resolutions differ".into()));
        }
        if c.recording_id != first.recording_id {
            return Err(Error::Internal("chunk recording ids differ".into()));
        }
        let expected = c.frame_count() * c.labels.len();
        if c.scores.len() != expected {
            return Err(Error::Internal(format!(
                "chunk {:?} carries {} scores, expected {expected}",
                c.interval,
                c.scores.len()
            )));
        }
    }

    let n_speakers = first.labels.len();
    let n_frames = chunks
        .iter()
        .map(|c| c.frame_range().1)
        .max()
        .unwrap_or(0)
        .max(0) as usize;
    // Accumulate in canonical chunk order so the result is bit-identical
    // under any processing order.
    let mut ordered: Vec<&ChunkScores> = chunks.iter().collect();
    ordered.sort_by_key(|c| (c.interval.onset(), c.interval.end()));
    let mut sums = vec![0.0f64; n_speakers * n_frames];
    let mut weights = vec![0u32; n_speakers * n_frames];
    for c in ordered {
        let (lo, hi) = c.frame_range();
        let width = (hi - lo) as usize;
        for s in 0..n_speakers {
            for f in 0..width {
                let g = s * n_frames + (lo as usize + f);
                sums[g] += c.scores[s * width + f];
                weights[g] += 1;
            }
        }
    }
    let scores = sums
        .iter()
        .zip(&weights)
        .map(|(&sum, &w)| if w > 0 { (sum / w as f64).clamp(0.0, 1.0) } else { 0.0 })
        .collect();
    Ok(ActivityMatrix {
        recording_id: first.recording_id.clone(),
        resolution: first.resolution,
        labels: first.labels.clone(),
        n_frames,
        scores,
        weights,
    })
}

/// Binarizes each speaker row of an activity matrix into turns. Overlapping
/// speakers are retained.
pub fn activities_to_annotation(
    act: &ActivityMatrix,
    threshold: f64,
    min_on: Ticks,
    min_off: Ticks,
) -> Result<Annotation> {
    let mut labels: Vec<(String, Timeline)> = Vec::with_capacity(act.labels.len());
    for (s, label) in act.labels.iter().enumerate() {
        let stream = act.speaker_stream(s)?;
        let timeline = binarize(&stream, threshold, threshold, min_on, min_off)?;
        if !timeline.is_empty() {
            labels.push((label.clone(), timeline));
        }
    }
    Annotation::from_label_timelines(act.recording_id.clone(), labels)
}

/// Full TSVAD refinement of an initial diarization.
///
/// Profiles are extracted from `init_diar`, every chunk is scored, chunk
/// scores are stitched by averaging, and the binarized activities are
/// restricted to the speech support.
pub fn diarize_tsvad(
    speech: &Timeline,
    seq: &EmbeddingSequence,
    init_diar: &Annotation,
    scorer: &dyn FrameScorer,
    cfg: &TsvadConfig,
) -> Result<Annotation> {
    cfg.validate()?;
    let recording_id = seq.recording_id().to_string();
    if init_diar.recording_id() != recording_id {
        return Err(Error::InvalidArgument(format!(
            "initial diarization for {:?} but embeddings for {:?}",
            init_diar.recording_id(),
            recording_id
        )));
    }
    if speech.is_empty() {
        return Ok(Annotation::new(recording_id));
    }

    let extraction = extract_profiles(init_diar, seq, cfg.capacity)?;
    if extraction.profiles.is_empty() {
        log::warn!("{recording_id}: no speaker profiles; returning empty annotation");
        return Ok(Annotation::new(recording_id));
    }

    let spans = chunk_spans(speech.extent_end(), cfg.chunk_len, cfg.stride)?;
    let mut blocks = Vec::with_capacity(spans.len());
    for span in spans {
        let restricted = seq.restrict(span);
        blocks.push(scorer.score_chunk(span, &restricted, &extraction.profiles)?);
    }
    let activity = stitch(&blocks)?;
    let raw = activities_to_annotation(&activity, cfg.threshold, cfg.min_on, cfg.min_off)?;

    // Restrict to speech support.
    let restricted: Vec<(String, Timeline)> = raw
        .label_timelines()
        .into_iter()
        .map(|(label, tl)| (label, tl.intersection(speech)))
        .filter(|(_, tl)| !tl.is_empty())
        .collect();
    Annotation::from_label_timelines(recording_id, restricted)
}

// --- chunk score block text format -------------------------------------------
//
// The FRAMESCORES format extended with a speaker count, for external
// scorers:
//
//   FRAMESCORES <recording_id> <resolution_seconds> <n_frames> <n_speakers>
//   <score_speaker_0> ... <score_speaker_{n-1}>       (one line per frame)
//
// Columns follow the profile order of the request.

pub fn write_chunk_scores(chunk: &ChunkScores) -> String {
    let n_frames = chunk.frame_count();
    let n_speakers = chunk.labels.len();
    let mut out = format!(
        "FRAMESCORES {} {} {} {}\n",
        chunk.recording_id,
        crate::frame_scores::format_seconds_compact(chunk.resolution),
        n_frames,
        n_speakers
    );
    for f in 0..n_frames {
        for s in 0..n_speakers {
            if s > 0 {
                out.push(' ');
            }
            write!(out, "{:.6}", chunk.scores[s * n_frames + f]).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Parses an extended-FRAMESCORES block produced for `chunk` against the
/// request's profile set.
pub fn parse_chunk_scores(
    text: &str,
    chunk: Interval,
    profiles: &SpeakerProfileSet,
) -> Result<ChunkScores> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty chunk score block"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 || fields[0] != "FRAMESCORES" {
        return Err(Error::parse(
            1,
            "expected header: FRAMESCORES <recording_id> <resolution> <n_frames> <n_speakers>",
        ));
    }
    let recording_id = fields[1].to_string();
    if recording_id != profiles.recording_id() {
        return Err(Error::Config(format!(
            "scorer answered for {recording_id:?}, expected {:?}",
            profiles.recording_id()
        )));
    }
    let resolution = Ticks::try_from_seconds(
        fields[2]
            .parse()
            .map_err(|_| Error::parse(1, "non-numeric resolution"))?,
    )?;
    let n_frames: usize = fields[3]
        .parse()
        .map_err(|_| Error::parse(1, "non-numeric frame count"))?;
    let n_speakers: usize = fields[4]
        .parse()
        .map_err(|_| Error::parse(1, "non-numeric speaker count"))?;
    if n_speakers != profiles.len() {
        return Err(Error::Config(format!(
            "scorer answered {n_speakers} speakers, expected {}",
            profiles.len()
        )));
    }
    let (lo, hi) = frame_range(chunk, resolution);
    if (hi - lo) as usize != n_frames {
        return Err(Error::Config(format!(
            "scorer answered {n_frames} frames for chunk {chunk:?}, expected {}",
            hi - lo
        )));
    }

    let mut scores = vec![0.0f64; n_speakers * n_frames];
    let mut frame = 0usize;
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if frame >= n_frames {
            return Err(Error::parse(idx + 1, "more frame rows than declared"));
        }
        let row: Vec<&str> = line.split_whitespace().collect();
        if row.len() != n_speakers {
            return Err(Error::parse(
                idx + 1,
                format!("expected {n_speakers} scores, found {}", row.len()),
            ));
        }
        for (s, cell) in row.iter().enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::parse(idx + 1, format!("non-numeric score {cell:?}")))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::parse(idx + 1, format!("score outside [0, 1]: {v}")));
            }
            scores[s * n_frames + frame] = v;
        }
        frame += 1;
    }
    if frame != n_frames {
        return Err(Error::parse(
            1,
            format!("header declares {n_frames} frames, found {frame}"),
        ));
    }
    Ok(ChunkScores {
        recording_id,
        interval: chunk,
        resolution,
        labels: profiles.labels().iter().map(|s| s.to_string()).collect(),
        scores,
    })
}

// --- profile file format ------------------------------------------------------
//
//   PROFILES <recording_id> <dim> <count>
//   <label> <v1> ... <vdim>

pub fn write_profiles(set: &SpeakerProfileSet) -> String {
    let mut out = format!(
        "PROFILES {} {} {}\n",
        set.recording_id(),
        set.dim(),
        set.len()
    );
    for p in set.profiles() {
        out.push_str(&p.label);
        for &x in &p.vector {
            write!(out, " {x}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_profiles(text: &str, capacity: usize) -> Result<SpeakerProfileSet> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty profile file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != "PROFILES" {
        return Err(Error::parse(
            1,
            "expected header: PROFILES <recording_id> <dim> <count>",
        ));
    }
    let recording_id = fields[1].to_string();
    let dim: usize = fields[2]
        .parse()
        .map_err(|_| Error::parse(1, "non-numeric dimension"))?;
    let count: usize = fields[3]
        .parse()
        .map_err(|_| Error::parse(1, "non-numeric count"))?;
    let mut profiles = Vec::with_capacity(count);
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != dim + 1 {
            return Err(Error::parse(
                idx + 1,
                format!("expected label plus {dim} components"),
            ));
        }
        let vector: Vec<f32> = fields[1..]
            .iter()
            .map(|f| f.parse::<f32>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(idx + 1, "non-numeric vector component"))?;
        profiles.push((fields[0].to_string(), vector));
    }
    if profiles.len() != count {
        return Err(Error::parse(
            1,
            format!("header declares {count} profiles, found {}", profiles.len()),
        ));
    }
    SpeakerProfileSet::new(recording_id, dim, capacity.max(count), profiles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeline::Turn;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha20Rng;

    fn secs(s: f64) -> Ticks {
        Ticks::from_seconds(s)
    }

    fn iv(a: f64, b: f64) -> Interval {
        Interval::from_range(secs(a), secs(b))
    }

    fn ann(rec: &str, turns: &[(&str, f64, f64)]) -> Annotation {
        let turns = turns
            .iter()
            .map(|&(spk, a, b)| Turn::new(rec, spk, secs(a), secs(b - a)).unwrap())
            .collect();
        Annotation::with_turns(rec, turns).unwrap()
    }

    const E1: [f32; 3] = [1.0, 0.0, 0.0];
    const E2: [f32; 3] = [0.0, 1.0, 0.0];

    fn block_seq(blocks: &[(f64, f64, [f32; 3])], step: f64) -> EmbeddingSequence {
        // Tiles [start, end) of each block with `step`-long segments.
        let mut entries = Vec::new();
        for &(start, end, v) in blocks {
            let mut t = start;
            while t + step <= end + 1e-9 {
                entries.push((iv(t, t + step), v.to_vec()));
                t += step;
            }
        }
        EmbeddingSequence::new("rec", 3, entries).unwrap()
    }

    #[test]
    fn profiles_single_speaker_constant_vectors() {
        let diar = ann("rec", &[("a", 0.0, 4.0)]);
        let seq = block_seq(&[(0.0, 4.0, E1)], 1.0);
        let out = extract_profiles(&diar, &seq, 30).unwrap();
        assert_eq!(out.profiles.len(), 1);
        assert_eq!(out.profiles.profiles()[0].label, "a");
        assert_eq!(out.profiles.profiles()[0].vector, E1.to_vec());
        assert!(out.dropped.is_empty());
    }

    #[test]
    fn profiles_two_disjoint_speakers() {
        let diar = ann("rec", &[("a", 0.0, 4.0), ("b", 4.0, 8.0)]);
        let seq = block_seq(&[(0.0, 4.0, E1), (4.0, 8.0, E2)], 1.0);
        let out = extract_profiles(&diar, &seq, 30).unwrap();
        assert_eq!(out.profiles.len(), 2);
        assert_eq!(out.profiles.profiles()[0].vector, E1.to_vec());
        assert_eq!(out.profiles.profiles()[1].vector, E2.to_vec());
    }

    #[test]
    fn profiles_capacity_keeps_longest() {
        // 31 speakers with strictly decreasing durations.
        let mut turns = Vec::new();
        let mut blocks = Vec::new();
        let mut t = 0.0;
        for i in 0..31 {
            let dur = 33.0 - i as f64;
            turns.push((format!("s{i:02}"), t, t + dur));
            blocks.push((t, t + dur, E1));
            t += dur + 1.0;
        }
        let turn_refs: Vec<(&str, f64, f64)> =
            turns.iter().map(|(s, a, b)| (s.as_str(), *a, *b)).collect();
        let diar = ann("rec", &turn_refs);
        let seq = block_seq(&blocks, 1.0);
        let out = extract_profiles(&diar, &seq, 30).unwrap();
        assert_eq!(out.profiles.len(), 30);
        assert_eq!(out.dropped, vec!["s30".to_string()]);
        // Longest first.
        assert_eq!(out.profiles.profiles()[0].label, "s00");
    }

    #[test]
    fn profiles_skip_overlapped_regions() {
        // b's only solo time carries E2; inside the overlap both vectors
        // appear but neither speaker should absorb the other's solo content.
        let diar = ann("rec", &[("a", 0.0, 6.0), ("b", 4.0, 10.0)]);
        let seq = block_seq(&[(0.0, 4.0, E1), (6.0, 10.0, E2)], 1.0);
        let out = extract_profiles(&diar, &seq, 30).unwrap();
        let by_label: std::collections::BTreeMap<_, _> = out
            .profiles
            .profiles()
            .iter()
            .map(|p| (p.label.as_str(), p.vector.clone()))
            .collect();
        assert_eq!(by_label["a"], E1.to_vec());
        assert_eq!(by_label["b"], E2.to_vec());
    }

    #[test]
    fn profiles_speaker_without_segments_dropped() {
        let diar = ann("rec", &[("a", 0.0, 4.0), ("ghost", 100.0, 101.0)]);
        let seq = block_seq(&[(0.0, 4.0, E1)], 1.0);
        let out = extract_profiles(&diar, &seq, 30).unwrap();
        assert_eq!(out.profiles.len(), 1);
        assert_eq!(out.dropped, vec!["ghost".to_string()]);
    }

    #[test]
    fn chunk_spans_examples() {
        // Audio shorter than a chunk.
        let spans = chunk_spans(secs(10.0), secs(16.0), secs(1.0)).unwrap();
        assert_eq!(spans, vec![iv(0.0, 10.0)]);
        // 18 s audio, 16 s chunks, 1 s stride: starts 0, 1, 2.
        let spans = chunk_spans(secs(18.0), secs(16.0), secs(1.0)).unwrap();
        assert_eq!(spans, vec![iv(0.0, 16.0), iv(1.0, 17.0), iv(2.0, 18.0)]);
        // 64 s chunks cover everything at once here.
        let spans = chunk_spans(secs(30.0), secs(64.0), secs(1.0)).unwrap();
        assert_eq!(spans, vec![iv(0.0, 30.0)]);
        assert!(chunk_spans(secs(10.0), Ticks::ZERO, secs(1.0)).is_err());
        assert!(chunk_spans(Ticks::ZERO, secs(16.0), secs(1.0)).unwrap().is_empty());
    }

    #[test]
    fn frame_range_spans_partial_edges() {
        // Chunk [1.0, 17.0) at 0.08 s: frames 12 (covers 0.96) .. 213.
        let (lo, hi) = frame_range(iv(1.0, 17.0), DEFAULT_RESOLUTION);
        assert_eq!((lo, hi), (12, 213));
        let (lo, hi) = frame_range(iv(0.0, 16.0), DEFAULT_RESOLUTION);
        assert_eq!((lo, hi), (0, 200));
    }

    fn constant_chunk(interval: Interval, labels: &[&str], value: f64) -> ChunkScores {
        let (lo, hi) = frame_range(interval, DEFAULT_RESOLUTION);
        let width = (hi - lo) as usize;
        ChunkScores {
            recording_id: "rec".into(),
            interval,
            resolution: DEFAULT_RESOLUTION,
            labels: labels.iter().map(|s| s.to_string()).collect(),
            scores: vec![value; width * labels.len()],
        }
    }

    #[test]
    fn stitch_single_chunk_is_identity() {
        let chunk = constant_chunk(iv(0.0, 16.0), &["a"], 0.7);
        let act = stitch(std::slice::from_ref(&chunk)).unwrap();
        assert_eq!(act.n_frames(), 200);
        for f in 0..act.n_frames() {
            assert_eq!(act.score(0, f), 0.7);
            assert_eq!(act.weight(0, f), 1);
        }
    }

    #[test]
    fn stitch_averages_overlap() {
        let a = constant_chunk(iv(0.0, 16.0), &["a"], 0.2);
        let b = constant_chunk(iv(8.0, 24.0), &["a"], 0.6);
        let act = stitch(&[a, b]).unwrap();
        assert_eq!(act.score(0, 0), 0.2);
        assert!((act.score(0, 150) - 0.4).abs() < 1e-12);
        assert_eq!(act.score(0, 250), 0.6);
        assert_eq!(act.weight(0, 150), 2);
    }

    #[test]
    fn stitch_is_order_invariant_and_matches_brute_force() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let labels = ["a", "b"];
        let mut chunks = Vec::new();
        for span in chunk_spans(secs(40.0), secs(16.0), secs(1.0)).unwrap() {
            let (lo, hi) = frame_range(span, DEFAULT_RESOLUTION);
            let width = (hi - lo) as usize;
            let scores: Vec<f64> = (0..width * 2).map(|_| rng.random::<f64>()).collect();
            chunks.push(ChunkScores {
                recording_id: "rec".into(),
                interval: span,
                resolution: DEFAULT_RESOLUTION,
                labels: labels.iter().map(|s| s.to_string()).collect(),
                scores,
            });
        }
        let act = stitch(&chunks).unwrap();

        // Brute force: recompute each cell from every covering chunk.
        for s in 0..2 {
            for f in 0..act.n_frames() {
                let mut sum = 0.0;
                let mut count = 0u32;
                for c in &chunks {
                    let (lo, hi) = c.frame_range();
                    if (f as i64) >= lo && (f as i64) < hi {
                        let width = (hi - lo) as usize;
                        sum += c.scores[s * width + (f as i64 - lo) as usize];
                        count += 1;
                    }
                }
                let expected = if count > 0 { sum / count as f64 } else { 0.0 };
                assert!((act.score(s, f) - expected).abs() < 1e-12);
                assert_eq!(act.weight(s, f), count);
            }
        }

        let mut shuffled = chunks.clone();
        shuffled.reverse();
        assert_eq!(stitch(&shuffled).unwrap(), act);
    }

    #[test]
    fn stitch_without_overlap_concatenates() {
        let a = constant_chunk(iv(0.0, 16.0), &["a"], 0.2);
        let b = constant_chunk(iv(16.0, 32.0), &["a"], 0.8);
        let act = stitch(&[a, b]).unwrap();
        assert_eq!(act.score(0, 199), 0.2);
        assert_eq!(act.score(0, 200), 0.8);
        assert!((0..act.n_frames()).all(|f| act.weight(0, f) == 1));
    }

    #[test]
    fn stitch_rejects_mismatched_blocks() {
        let a = constant_chunk(iv(0.0, 16.0), &["a"], 0.2);
        let b = constant_chunk(iv(16.0, 32.0), &["b"], 0.8);
        assert!(matches!(stitch(&[a, b]), Err(Error::Internal(_))));
        assert!(stitch(&[]).is_err());
    }

    #[test]
    fn activities_examples() {
        let act = stitch(&[constant_chunk(iv(0.0, 2.0), &["a"], 0.0)]).unwrap();
        assert!(activities_to_annotation(&act, 0.5, Ticks::ZERO, Ticks::ZERO)
            .unwrap()
            .is_empty());

        let act = stitch(&[constant_chunk(iv(0.0, 2.0), &["a"], 1.0)]).unwrap();
        let ann = activities_to_annotation(&act, 0.5, Ticks::ZERO, Ticks::ZERO).unwrap();
        assert_eq!(ann.turns().len(), 1);
        assert_eq!(ann.turns()[0].interval(), iv(0.0, 2.0));

        let act = stitch(&[constant_chunk(iv(0.0, 2.0), &["a", "b"], 0.9)]).unwrap();
        let ann = activities_to_annotation(&act, 0.5, Ticks::ZERO, Ticks::ZERO).unwrap();
        assert_eq!(ann.turns().len(), 2);
        assert_eq!(ann.support().intervals(), &[iv(0.0, 2.0)]);
        assert_eq!(ann.overlap_regions().intervals(), &[iv(0.0, 2.0)]);
    }

    proptest! {
        #[test]
        fn activity_duration_nonincreasing_in_threshold(seed in any::<u64>()) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let chunk = ChunkScores {
                recording_id: "rec".into(),
                interval: iv(0.0, 8.0),
                resolution: DEFAULT_RESOLUTION,
                labels: vec!["a".into()],
                scores: (0..100).map(|_| rng.random::<f64>()).collect(),
            };
            let act = stitch(&[chunk]).unwrap();
            let mut last = Ticks::new(i64::MAX);
            for thr in [0.0, 0.25, 0.5, 0.75, 1.0] {
                let ann = activities_to_annotation(&act, thr, Ticks::ZERO, Ticks::ZERO).unwrap();
                let dur = ann.support().total_duration();
                prop_assert!(dur <= last);
                last = dur;
            }
        }
    }

    #[test]
    fn cosine_scorer_profile_match_scores_one() {
        let seq = block_seq(&[(0.0, 4.0, E1)], 1.0);
        let profiles = SpeakerProfileSet::new(
            "rec",
            3,
            30,
            vec![("a".into(), E1.to_vec()), ("b".into(), E2.to_vec())],
        )
        .unwrap();
        let scorer = CosineScorer::default();
        let chunk = scorer.score_chunk(iv(0.0, 4.0), &seq, &profiles).unwrap();
        let n = chunk.frame_count();
        for f in 0..n {
            assert_eq!(chunk.scores[f], 1.0, "matching profile scores 1");
            assert!(chunk.scores[n + f] <= 0.5, "orthogonal profile at most 0.5");
        }
    }

    #[test]
    fn cosine_scorer_uncovered_frames_score_zero() {
        let seq = block_seq(&[(0.0, 1.0, E1)], 1.0);
        let profiles =
            SpeakerProfileSet::new("rec", 3, 30, vec![("a".into(), E1.to_vec())]).unwrap();
        let chunk = CosineScorer::default()
            .score_chunk(iv(0.0, 4.0), &seq, &profiles)
            .unwrap();
        let n = chunk.frame_count();
        // Frames past the only segment: zero.
        assert_eq!(chunk.scores[n - 1], 0.0);
        assert_eq!(chunk.scores[0], 1.0);
    }

    #[test]
    fn diarize_tsvad_single_speaker_recovers_support() {
        let speech = Timeline::from_intervals([iv(0.05, 4.21), iv(6.0, 9.5)]);
        let mut entries = Vec::new();
        for span in [iv(0.05, 4.21), iv(6.0, 9.5)] {
            let mut t = span.onset();
            let window = secs(1.28);
            let shift = secs(0.32);
            while t + window <= span.end() {
                entries.push((Interval::new(t, window), E1.to_vec()));
                t += shift;
            }
            entries.push((Interval::from_range(span.end() - window, span.end()), E1.to_vec()));
        }
        let seq = EmbeddingSequence::new("rec", 3, entries).unwrap();
        let init = ann("rec", &[("spk00", 0.05, 4.21), ("spk00", 6.0, 9.5)]);
        let out = diarize_tsvad(&speech, &seq, &init, &CosineScorer::default(), &TsvadConfig::default())
            .unwrap();
        assert_eq!(out.speakers(), vec!["spk00"]);
        assert_eq!(out.support(), speech);
    }

    #[test]
    fn chunk_score_block_round_trip() {
        let profiles = SpeakerProfileSet::new(
            "rec",
            3,
            30,
            vec![("a".into(), E1.to_vec()), ("b".into(), E2.to_vec())],
        )
        .unwrap();
        let seq = block_seq(&[(0.0, 4.0, E1)], 1.0);
        let chunk = CosineScorer::default()
            .score_chunk(iv(0.0, 4.0), &seq, &profiles)
            .unwrap();
        let text = write_chunk_scores(&chunk);
        let parsed = parse_chunk_scores(&text, iv(0.0, 4.0), &profiles).unwrap();
        assert_eq!(parsed.labels, chunk.labels);
        for (a, b) in parsed.scores.iter().zip(&chunk.scores) {
            assert!((a - b).abs() < 1e-6);
        }
        assert!(parse_chunk_scores("junk\n", iv(0.0, 4.0), &profiles).is_err());
        // Frame-count mismatch with the chunk interval is rejected.
        assert!(parse_chunk_scores(&text, iv(0.0, 8.0), &profiles).is_err());
    }

    #[test]
    fn profile_file_round_trip() {
        let set = SpeakerProfileSet::new(
            "rec",
            3,
            30,
            vec![("a".into(), E1.to_vec()), ("b".into(), E2.to_vec())],
        )
        .unwrap();
        let parsed = parse_profiles(&write_profiles(&set), 30).unwrap();
        assert_eq!(parsed, set);
        assert!(parse_profiles("", 30).is_err());
    }
}
