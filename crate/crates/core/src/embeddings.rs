//! Speaker-embedding sequences, uniform segmentation, cosine similarity.
//!
//! Embeddings are consumed from files produced by external extractors (or
//! from the synthetic generator); this crate never computes them from audio.
//! Vectors are L2-normalized on construction so cosine similarity is a plain
//! dot product everywhere downstream.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::timeline::{Interval, Ticks, Timeline};

/// Segmentation defaults: 1.28 s windows with a 0.32 s shift.
pub const DEFAULT_WINDOW: Ticks = Ticks::from_millis(1280);
pub const DEFAULT_SHIFT: Ticks = Ticks::from_millis(320);

const UNIT_NORM_TOLERANCE: f64 = 1e-6;

/// One embedded segment: a time interval and its unit vector.
#[derive(Clone, PartialEq, Debug)]
pub struct EmbeddingEntry {
    interval: Interval,
    vector: Vec<f32>,
}

impl EmbeddingEntry {
    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn vector(&self) -> &[f32] {
        &self.vector
    }
}

/// Ordered fixed-dimension embeddings for one recording. Entries are sorted
/// by onset and every vector is unit-norm.
#[derive(Clone, PartialEq, Debug)]
pub struct EmbeddingSequence {
    recording_id: String,
    dim: usize,
    entries: Vec<EmbeddingEntry>,
}

impl EmbeddingSequence {
    /// Builds a sequence, sorting entries by onset and L2-normalizing every
    /// vector. Zero vectors and dimension mismatches are rejected.
    pub fn new(
        recording_id: impl Into<String>,
        dim: usize,
        entries: Vec<(Interval, Vec<f32>)>,
    ) -> Result<EmbeddingSequence> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "embedding dimension must be positive".into(),
            ));
        }
        let mut out = Vec::with_capacity(entries.len());
        for (i, (interval, vector)) in entries.into_iter().enumerate() {
            if vector.len() != dim {
                return Err(Error::InvalidArgument(format!(
                    "entry {i} has dimension {}, expected {dim}",
                    vector.len()
                )));
            }
            out.push(EmbeddingEntry {
                interval,
                vector: normalize_f32(&vector)
                    .ok_or_else(|| Error::InvalidArgument(format!("entry {i} has zero norm")))?,
            });
        }
        out.sort_by_key(|e| (e.interval.onset(), e.interval.duration()));
        Ok(EmbeddingSequence {
            recording_id: recording_id.into(),
            dim,
            entries: out,
        })
    }

    pub fn recording_id(&self) -> &str {
        &self.recording_id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[EmbeddingEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries whose interval overlaps `span` (order preserved).
    pub fn restrict(&self, span: Interval) -> EmbeddingSequence {
        let entries = self
            .entries
            .iter()
            .filter(|e| e.interval.overlaps(&span))
            .cloned()
            .collect();
        EmbeddingSequence {
            recording_id: self.recording_id.clone(),
            dim: self.dim,
            entries,
        }
    }
}

/// A symmetric cosine-similarity matrix with unit diagonal.
#[derive(Clone, PartialEq, Debug)]
pub struct SimilarityMatrix {
    n: usize,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    /// Builds a matrix from row-major values, enforcing symmetry, a unit
    /// diagonal, and entries in [-1, 1].
    pub fn from_values(n: usize, values: Vec<f64>) -> Result<SimilarityMatrix> {
        if n == 0 || values.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "expected {n}x{n} values, got {}",
                values.len()
            )));
        }
        for i in 0..n {
            if values[i * n + i] != 1.0 {
                return Err(Error::InvalidArgument(format!(
                    "diagonal entry ({i}, {i}) must be 1"
                )));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !(-1.0..=1.0).contains(&v) {
                    return Err(Error::InvalidArgument(format!(
                        "entry ({i}, {j}) outside [-1, 1]: {v}"
                    )));
                }
                if v != values[j * n + i] {
                    return Err(Error::InvalidArgument(format!(
                        "matrix not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(SimilarityMatrix { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }
}

/// Slides fixed windows over each speech interval.
///
/// Within an interval, windows start at onset, onset + shift, ... while the
/// full window fits. An interval shorter than the window yields one segment
/// covering it whole. When the tail left uncovered by the last full window
/// is at least one shift long, a final window anchored at the interval end
/// is added.
pub fn uniform_segments(speech: &Timeline, window: Ticks, shift: Ticks) -> Result<Vec<Interval>> {
    if !window.is_positive() || !shift.is_positive() {
        return Err(Error::InvalidArgument(
            "window and shift must be positive".into(),
        ));
    }
    if shift > window {
        return Err(Error::InvalidArgument(format!(
            "shift {shift} exceeds window {window}"
        )));
    }
    let mut out = Vec::new();
    for iv in speech.iter() {
        let len = iv.duration();
        if len < window {
            out.push(*iv);
            continue;
        }
        let full = (len - window).div_floor(shift);
        for k in 0..=full {
            out.push(Interval::new(iv.onset() + shift * k, window));
        }
        let covered = shift * full + window;
        if len - covered >= shift {
            out.push(Interval::from_range(iv.end() - window, iv.end()));
        }
    }
    Ok(out)
}

/// Pairwise cosine similarities of a sequence's (unit) vectors.
pub fn cosine_matrix(seq: &EmbeddingSequence) -> Result<SimilarityMatrix> {
    let n = seq.len();
    if n == 0 {
        return Err(Error::InvalidArgument(
            "cannot build similarity matrix of empty sequence".into(),
        ));
    }
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        values[i * n + i] = 1.0;
        for j in (i + 1)..n {
            let c = cosine(seq.entries[i].vector(), seq.entries[j].vector());
            values[i * n + j] = c;
            values[j * n + i] = c;
        }
    }
    Ok(SimilarityMatrix { n, values })
}

/// Greedy left-to-right merge of consecutive segments.
///
/// The running group's centroid is compared against the next segment; the
/// segment joins when similarity strictly exceeds `segment_thr` and the gap
/// between the group hull and the segment is below `max_gap` (normally the
/// segmentation shift, so only time-adjacent segments chain). Merged vectors
/// are normalized means of the members; merged intervals are hulls.
pub fn merge_consecutive(
    seq: &EmbeddingSequence,
    sim: &SimilarityMatrix,
    segment_thr: f64,
    max_gap: Ticks,
) -> Result<EmbeddingSequence> {
    if sim.n() != seq.len() {
        return Err(Error::Internal(format!(
            "similarity matrix of size {} for {} segments",
            sim.n(),
            seq.len()
        )));
    }
    if seq.is_empty() {
        return Ok(seq.clone());
    }

    let dim = seq.dim;
    let mut merged: Vec<(Interval, Vec<f32>)> = Vec::new();
    let mut members: Vec<usize> = vec![0];
    let mut sum: Vec<f64> = seq.entries[0].vector.iter().map(|&x| x as f64).collect();
    let mut hull = seq.entries[0].interval;

    // A group mean can collapse to zero when members cancel (possible under
    // permissive thresholds); the first member then stands in.
    let flush = |members: &[usize], sum: &[f64], hull: Interval, out: &mut Vec<(Interval, Vec<f32>)>| {
        let v = normalize_f64_to_f32(sum)
            .unwrap_or_else(|| seq.entries[members[0]].vector.clone());
        out.push((hull, v));
    };

    for (i, entry) in seq.entries.iter().enumerate().skip(1) {
        let similarity = if members.len() == 1 {
            sim.get(members[0], i)
        } else {
            let centroid = normalize_f64(&sum).unwrap_or_else(|| {
                seq.entries[members[0]].vector.iter().map(|&x| x as f64).collect()
            });
            clamp_cosine(
                centroid
                    .iter()
                    .zip(&entry.vector)
                    .map(|(&a, &b)| a * b as f64)
                    .sum(),
            )
        };
        let gap = entry.interval.onset() - hull.end();
        if similarity > segment_thr && gap < max_gap {
            members.push(i);
            for (acc, &x) in sum.iter_mut().zip(&entry.vector) {
                *acc += x as f64;
            }
            hull = hull.hull(&entry.interval);
        } else {
            flush(&members, &sum, hull, &mut merged);
            members = vec![i];
            sum = entry.vector.iter().map(|&x| x as f64).collect();
            hull = entry.interval;
        }
    }
    flush(&members, &sum, hull, &mut merged);

    EmbeddingSequence::new(seq.recording_id.clone(), dim, merged)
}

/// Binds a dense source sequence onto target segment intervals: each target
/// gets the normalized mean of source vectors whose midpoint falls inside
/// it, or the nearest source vector when none does.
pub fn resample_to_segments(
    seq: &EmbeddingSequence,
    segments: &[Interval],
) -> Result<EmbeddingSequence> {
    if seq.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot resample an empty embedding sequence".into(),
        ));
    }
    let mut entries = Vec::with_capacity(segments.len());
    for target in segments {
        let mut sum = vec![0.0f64; seq.dim];
        let mut count = 0usize;
        for e in &seq.entries {
            if target.contains(e.interval.midpoint()) {
                for (acc, &x) in sum.iter_mut().zip(&e.vector) {
                    *acc += x as f64;
                }
                count += 1;
            }
        }
        // No contributing midpoints, or a mean that cancelled to zero:
        // take the nearest source vector instead.
        let mean = if count > 0 {
            normalize_f64_to_f32(&sum)
        } else {
            None
        };
        let vector = mean.unwrap_or_else(|| {
            let target_mid = target.midpoint();
            seq.entries
                .iter()
                .min_by_key(|e| {
                    let d = (e.interval.midpoint() - target_mid).abs();
                    (d, e.interval.onset())
                })
                .expect("sequence is non-empty")
                .vector
                .clone()
        });
        entries.push((*target, vector));
    }
    EmbeddingSequence::new(seq.recording_id.clone(), seq.dim, entries)
}

/// Cosine of two unit vectors, clamped into [-1, 1].
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    clamp_cosine(a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum())
}

pub(crate) fn clamp_cosine(value: f64) -> f64 {
    value.clamp(-1.0, 1.0)
}

pub(crate) fn normalize_f32(v: &[f32]) -> Option<Vec<f32>> {
    let norm: f64 = v.iter().map(|&x| (x as f64).powi(2)).sum::<f64>().sqrt();
    if norm < UNIT_NORM_TOLERANCE {
        return None;
    }
    Some(v.iter().map(|&x| (x as f64 / norm) as f32).collect())
}

pub(crate) fn normalize_f64(v: &[f64]) -> Option<Vec<f64>> {
    let norm: f64 = v.iter().map(|&x| x * x).sum::<f64>().sqrt();
    if norm < UNIT_NORM_TOLERANCE {
        return None;
    }
    Some(v.iter().map(|&x| x / norm).collect())
}

pub(crate) fn normalize_f64_to_f32(v: &[f64]) -> Option<Vec<f32>> {
    normalize_f64(v).map(|v| v.into_iter().map(|x| x as f32).collect())
}

// --- embedding file formats -------------------------------------------------
//
// Binary (little-endian):
//   magic "EMBD", u32 version = 1, u32 dim, u32 count,
//   count * (f64 onset_seconds, f64 duration_seconds, f32[dim])
//
// Text (fixture) variant: one entry per line, "onset duration v1 ... vdim".

const MAGIC: &[u8; 4] = b"EMBD";
const VERSION: u32 = 1;

pub fn write_binary(seq: &EmbeddingSequence) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + seq.len() * (16 + 4 * seq.dim));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(seq.dim as u32).to_le_bytes());
    out.extend_from_slice(&(seq.len() as u32).to_le_bytes());
    for e in &seq.entries {
        out.extend_from_slice(&e.interval.onset().seconds().to_le_bytes());
        out.extend_from_slice(&e.interval.duration().seconds().to_le_bytes());
        for &x in &e.vector {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

pub fn read_binary(bytes: &[u8], recording_id: impl Into<String>) -> Result<EmbeddingSequence> {
    let bad = |m: String| Error::InvalidArgument(format!("embedding file: {m}"));
    if bytes.len() < 16 || &bytes[0..4] != MAGIC {
        return Err(bad("missing EMBD magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let dim = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let count = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let record = 16 + 4 * dim;
    if bytes.len() != 16 + count * record {
        return Err(bad(format!(
            "expected {} bytes for {count} records of dim {dim}, found {}",
            16 + count * record,
            bytes.len()
        )));
    }
    let mut entries = Vec::with_capacity(count);
    let mut off = 16;
    for _ in 0..count {
        let onset = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
        let duration = f64::from_le_bytes(bytes[off + 8..off + 16].try_into().unwrap());
        off += 16;
        let mut vector = Vec::with_capacity(dim);
        for _ in 0..dim {
            vector.push(f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()));
            off += 4;
        }
        entries.push((
            Interval::new(
                Ticks::try_from_seconds(onset)?,
                Ticks::try_from_seconds(duration)?,
            ),
            vector,
        ));
    }
    EmbeddingSequence::new(recording_id, dim, entries)
}

pub fn write_text(seq: &EmbeddingSequence) -> String {
    let mut out = String::new();
    for e in &seq.entries {
        write!(
            out,
            "{} {}",
            e.interval.onset().seconds(),
            e.interval.duration().seconds()
        )
        .unwrap();
        for &x in &e.vector {
            write!(out, " {x}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_text(text: &str, recording_id: impl Into<String>) -> Result<EmbeddingSequence> {
    let mut entries = Vec::new();
    let mut dim = None;
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 3 {
            return Err(Error::parse(idx + 1, "expected: onset duration v1 ... vdim"));
        }
        let onset: f64 = fields[0]
            .parse()
            .map_err(|_| Error::parse(idx + 1, "non-numeric onset"))?;
        let duration: f64 = fields[1]
            .parse()
            .map_err(|_| Error::parse(idx + 1, "non-numeric duration"))?;
        let vector: Vec<f32> = fields[2..]
            .iter()
            .map(|f| f.parse::<f32>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(idx + 1, "non-numeric vector component"))?;
        match dim {
            None => dim = Some(vector.len()),
            Some(d) if d != vector.len() => {
                return Err(Error::parse(
                    idx + 1,
                    format!("dimension {} differs from {d}", vector.len()),
                ));
            }
            _ => {}
        }
        entries.push((
            Interval::new(
                Ticks::try_from_seconds(onset)?,
                Ticks::try_from_seconds(duration)?,
            ),
            vector,
        ));
    }
    let dim = dim.ok_or_else(|| Error::parse(1, "empty embedding text"))?;
    EmbeddingSequence::new(recording_id, dim, entries)
}

/// Reads an embedding file, sniffing binary vs text by the EMBD magic.
pub fn read_file(
    path: impl AsRef<Path>,
    recording_id: impl Into<String>,
) -> Result<EmbeddingSequence> {
    let bytes = std::fs::read(&path)?;
    if bytes.len() >= 4 && &bytes[0..4] == MAGIC {
        read_binary(&bytes, recording_id)
    } else {
        let text = String::from_utf8(bytes).map_err(|_| {
            Error::InvalidArgument("embedding file is neither EMBD binary nor UTF-8 text".into())
        })?;
        parse_text(&text, recording_id)
    }
}

pub fn write_file(path: impl AsRef<Path>, seq: &EmbeddingSequence) -> Result<()> {
    std::fs::write(path, write_binary(seq))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn secs(s: f64) -> Ticks {
        Ticks::from_seconds(s)
    }

    fn iv(a: f64, b: f64) -> Interval {
        Interval::from_range(secs(a), secs(b))
    }

    fn seq_of(vectors: Vec<Vec<f32>>, step: f64) -> EmbeddingSequence {
        let entries = vectors
            .into_iter()
            .enumerate()
            .map(|(i, v)| (iv(i as f64 * step, i as f64 * step + step), v))
            .collect();
        EmbeddingSequence::new("rec", 3, entries).unwrap()
    }

    #[test]
    fn uniform_segments_standard_rate() {
        let speech = Timeline::from_intervals([iv(0.0, 10.24)]);
        let segs = uniform_segments(&speech, DEFAULT_WINDOW, DEFAULT_SHIFT).unwrap();
        assert_eq!(segs.len(), 29);
        assert_eq!(segs[0], iv(0.0, 1.28));
        assert_eq!(segs[1].onset(), secs(0.32));
        assert_eq!(segs[28].onset(), secs(8.96));
    }

    #[test]
    fn uniform_segments_short_interval_kept_whole() {
        let speech = Timeline::from_intervals([iv(0.0, 1.0)]);
        let segs = uniform_segments(&speech, DEFAULT_WINDOW, DEFAULT_SHIFT).unwrap();
        assert_eq!(segs, vec![iv(0.0, 1.0)]);
    }

    #[test]
    fn uniform_segments_empty_timeline() {
        assert!(uniform_segments(&Timeline::new(), DEFAULT_WINDOW, DEFAULT_SHIFT)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn uniform_segments_count_formula() {
        // Count is always 1 + floor((L - window) / shift); the residual past
        // the last full window is (L - window) mod shift, which is < shift,
        // so the back-anchored tail window never triggers.
        for (len, expected) in [(10.5, 29), (10.6, 30), (1.28, 1), (1.59, 1), (1.6, 2)] {
            let segs = uniform_segments(
                &Timeline::from_intervals([iv(0.0, len)]),
                DEFAULT_WINDOW,
                DEFAULT_SHIFT,
            )
            .unwrap();
            assert_eq!(segs.len(), expected, "length {len}");
        }
        let segs = uniform_segments(
            &Timeline::from_intervals([iv(0.0, 10.6)]),
            DEFAULT_WINDOW,
            DEFAULT_SHIFT,
        )
        .unwrap();
        assert_eq!(*segs.last().unwrap(), iv(9.28, 10.56));
    }

    #[test]
    fn uniform_segments_rejects_bad_args() {
        let speech = Timeline::from_intervals([iv(0.0, 5.0)]);
        assert!(uniform_segments(&speech, Ticks::ZERO, DEFAULT_SHIFT).is_err());
        assert!(uniform_segments(&speech, DEFAULT_WINDOW, Ticks::ZERO).is_err());
        assert!(uniform_segments(&speech, DEFAULT_SHIFT, DEFAULT_WINDOW).is_err());
    }

    #[test]
    fn cosine_matrix_basics() {
        let seq = seq_of(vec![vec![1.0, 0.0, 0.0]], 1.0);
        let m = cosine_matrix(&seq).unwrap();
        assert_eq!(m.n(), 1);
        assert_eq!(m.get(0, 0), 1.0);

        let seq = seq_of(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]], 1.0);
        let m = cosine_matrix(&seq).unwrap();
        assert_eq!(m.get(0, 1), 0.0);

        let seq = seq_of(vec![vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]], 1.0);
        let m = cosine_matrix(&seq).unwrap();
        assert_eq!(m.get(0, 1), 1.0);
        assert!(cosine_matrix(&EmbeddingSequence::new("rec", 3, vec![]).unwrap()).is_err());
    }

    #[test]
    fn cosine_invariant_under_rescaling() {
        let a =
            EmbeddingSequence::new("rec", 3, vec![(iv(0.0, 1.0), vec![1.0, 2.0, 3.0])]).unwrap();
        let b =
            EmbeddingSequence::new("rec", 3, vec![(iv(0.0, 1.0), vec![10.0, 20.0, 30.0])]).unwrap();
        assert_eq!(a.entries()[0].vector(), b.entries()[0].vector());
    }

    #[test]
    fn merge_all_similar_contiguous_collapses_to_one() {
        let seq = seq_of(vec![vec![1.0, 0.0, 0.0]; 4], 1.0);
        let sim = cosine_matrix(&seq).unwrap();
        let merged = merge_consecutive(&seq, &sim, 0.5, secs(0.5)).unwrap();
        assert_eq!(merged.len(), 1);
        assert_eq!(merged.entries()[0].interval(), iv(0.0, 4.0));
        assert_eq!(merged.entries()[0].vector(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn merge_with_threshold_one_is_identity() {
        let seq = seq_of(vec![vec![1.0, 0.0, 0.0]; 4], 1.0);
        let sim = cosine_matrix(&seq).unwrap();
        let merged = merge_consecutive(&seq, &sim, 1.0, secs(0.5)).unwrap();
        assert_eq!(merged, seq);
    }

    #[test]
    fn merge_respects_gap_bound() {
        // Identical vectors but a 2 s gap between segments: no merge at
        // max_gap 0.5 s.
        let entries = vec![
            (iv(0.0, 1.0), vec![1.0, 0.0, 0.0]),
            (iv(3.0, 4.0), vec![1.0, 0.0, 0.0]),
        ];
        let seq = EmbeddingSequence::new("rec", 3, entries).unwrap();
        let sim = cosine_matrix(&seq).unwrap();
        let merged = merge_consecutive(&seq, &sim, 0.5, secs(0.5)).unwrap();
        assert_eq!(merged.len(), 2);
    }

    #[test]
    fn merge_preserves_order_and_support() {
        let vectors = vec![
            vec![1.0, 0.0, 0.0],
            vec![1.0, 0.1, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 1.0, 0.1],
        ];
        // Overlapping chain: window 1.0, step 0.5.
        let entries: Vec<(Interval, Vec<f32>)> = vectors
            .into_iter()
            .enumerate()
            .map(|(i, v)| (iv(i as f64 * 0.5, i as f64 * 0.5 + 1.0), v))
            .collect();
        let seq = EmbeddingSequence::new("rec", 3, entries).unwrap();
        let sim = cosine_matrix(&seq).unwrap();
        let merged = merge_consecutive(&seq, &sim, 0.9, secs(0.5)).unwrap();
        assert_eq!(merged.len(), 2);
        let support_before: Timeline = seq.entries().iter().map(|e| e.interval()).collect();
        let support_after: Timeline = merged.entries().iter().map(|e| e.interval()).collect();
        assert_eq!(support_before, support_after);
        assert!(merged.entries()[0].interval().onset() <= merged.entries()[1].interval().onset());
    }

    #[test]
    fn resample_midpoint_and_nearest_fallback() {
        let seq = seq_of(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]], 1.0);
        // First target holds entry 0's midpoint; second target is past both
        // entries and falls back to the nearest (entry 1).
        let targets = [iv(0.0, 1.0), iv(5.0, 6.0)];
        let out = resample_to_segments(&seq, &targets).unwrap();
        assert_eq!(out.entries()[0].vector(), &[1.0, 0.0, 0.0]);
        assert_eq!(out.entries()[1].vector(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn binary_round_trip() {
        let seq = seq_of(
            vec![vec![1.0, 0.0, 0.0], vec![0.6, 0.8, 0.0], vec![0.0, 0.0, 1.0]],
            1.28,
        );
        let parsed = read_binary(&write_binary(&seq), "rec").unwrap();
        assert_eq!(parsed, seq);
        assert!(read_binary(b"NOPE", "rec").is_err());
    }

    #[test]
    fn text_round_trip() {
        let seq = seq_of(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]], 0.32);
        let parsed = parse_text(&write_text(&seq), "rec").unwrap();
        assert_eq!(parsed, seq);
        assert!(parse_text("", "rec").is_err());
        assert!(parse_text("0.0 1.0\n", "rec").is_err());
    }
}
