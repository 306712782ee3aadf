//! Frame-level posterior streams: fusion, binarization, detection metrics.
//!
//! A [`FrameScoreStream`] holds uniform-rate posteriors in `[0, 1]` (VAD,
//! OSD, or one TSVAD speaker channel). Streams from different models are
//! fused by weighted score averaging, turned into [`Timeline`]s by
//! hysteresis binarization, and compared against references with exact
//! interval arithmetic.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::timeline::{Interval, Ticks, Timeline};

/// Default frame shift: 10 ms, the feature rate VAD posteriors align with.
pub const DEFAULT_FRAME_SHIFT: Ticks = Ticks::from_millis(10);

/// A uniform-rate sequence of posteriors in `[0, 1]` for one recording.
#[derive(Clone, PartialEq, Debug)]
pub struct FrameScoreStream {
    recording_id: String,
    frame_shift: Ticks,
    scores: Vec<f64>,
}

impl FrameScoreStream {
    pub fn new(
        recording_id: impl Into<String>,
        frame_shift: Ticks,
        scores: Vec<f64>,
    ) -> Result<FrameScoreStream> {
        if !frame_shift.is_positive() {
            return Err(Error::InvalidArgument(format!(
                "frame shift must be positive, got {frame_shift}"
            )));
        }
        for (i, &s) in scores.iter().enumerate() {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::InvalidArgument(format!(
                    "score at frame {i} outside [0, 1]: {s}"
                )));
            }
        }
        Ok(FrameScoreStream {
            recording_id: recording_id.into(),
            frame_shift,
            scores,
        })
    }

    pub fn recording_id(&self) -> &str {
        &self.recording_id
    }

    pub fn frame_shift(&self) -> Ticks {
        self.frame_shift
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Time span of frame `i`.
    pub fn frame_interval(&self, i: usize) -> Interval {
        Interval::new(self.frame_shift * i as i64, self.frame_shift)
    }
}

/// False-alarm / miss rates of a detection timeline against a reference,
/// both expressed as fractions of the evaluation scope.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct DetectionErrorReport {
    pub false_alarm_rate: f64,
    pub miss_rate: f64,
    pub total_rate: f64,
    /// Duration of the evaluation scope, in seconds.
    pub reference_duration: f64,
}

/// Per-frame weighted mean of several streams (uniform weights by default).
///
/// Streams must share recording id and frame shift. Unequal lengths fuse to
/// the shortest with a logged warning; model strides legitimately differ by
/// a frame.
pub fn fuse_streams(
    streams: &[FrameScoreStream],
    weights: Option<&[f64]>,
) -> Result<FrameScoreStream> {
    let first = streams
        .first()
        .ok_or_else(|| Error::InvalidArgument("no streams to fuse".into()))?;
    for s in &streams[1..] {
        if s.frame_shift != first.frame_shift {
            return Err(Error::Config(format!(
                "mismatched frame shifts: {} vs {}",
                first.frame_shift, s.frame_shift
            )));
        }
        if s.recording_id != first.recording_id {
            return Err(Error::Config(format!(
                "mismatched recording ids: {:?} vs {:?}",
                first.recording_id, s.recording_id
            )));
        }
    }
    let weights = match weights {
        Some(w) => {
            if w.len() != streams.len() {
                return Err(Error::InvalidArgument(format!(
                    "{} weights for {} streams",
                    w.len(),
                    streams.len()
                )));
            }
            if w.iter().any(|&x| x <= 0.0 || !x.is_finite()) {
                return Err(Error::InvalidArgument(
                    "fusion weights must be positive and finite".into(),
                ));
            }
            w.to_vec()
        }
        None => vec![1.0; streams.len()],
    };
    let weight_sum: f64 = weights.iter().sum();

    let n = streams.iter().map(FrameScoreStream::len).min().unwrap_or(0);
    if streams.iter().any(|s| s.len() != n) {
        log::warn!(
            "fusing streams of unequal length for {:?}; truncating to {} frames",
            first.recording_id,
            n
        );
    }
    let mut scores = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = 0.0;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (s, &w) in streams.iter().zip(&weights) {
            let v = s.scores[i];
            acc += w * v;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        // Clamp against rounding so the fused value stays within the input
        // envelope exactly.
        scores.push((acc / weight_sum).clamp(lo, hi));
    }
    FrameScoreStream::new(first.recording_id.clone(), first.frame_shift, scores)
}

/// Hysteresis binarization of a score stream into speech regions.
///
/// A region opens when the score reaches `onset_thr` and closes when it
/// drops below `offset_thr`. Gaps shorter than `min_off` are filled first,
/// then regions shorter than `min_on` are removed. Boundaries land on the
/// frame grid.
pub fn binarize(
    stream: &FrameScoreStream,
    onset_thr: f64,
    offset_thr: f64,
    min_on: Ticks,
    min_off: Ticks,
) -> Result<Timeline> {
    for (name, v) in [("onset", onset_thr), ("offset", offset_thr)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidArgument(format!(
                "{name} threshold outside [0, 1]: {v}"
            )));
        }
    }
    if onset_thr < offset_thr {
        return Err(Error::InvalidArgument(format!(
            "onset threshold {onset_thr} below offset threshold {offset_thr}"
        )));
    }
    if min_on.is_negative() || min_off.is_negative() {
        return Err(Error::InvalidArgument(
            "min_on / min_off must be non-negative".into(),
        ));
    }

    let shift = stream.frame_shift;
    let mut raw: Vec<Interval> = Vec::new();
    let mut open_at: Option<usize> = None;
    for (i, &s) in stream.scores.iter().enumerate() {
        match open_at {
            None if s >= onset_thr => open_at = Some(i),
            Some(start) if s < offset_thr => {
                raw.push(frame_span(start, i, shift));
                open_at = None;
            }
            _ => {}
        }
    }
    if let Some(start) = open_at {
        raw.push(frame_span(start, stream.len(), shift));
    }

    // Fill sub-min_off gaps, then prune sub-min_on regions.
    let mut filled: Vec<Interval> = Vec::with_capacity(raw.len());
    for region in raw {
        match filled.last_mut() {
            Some(last) if region.onset() - last.end() < min_off => {
                *last = last.hull(&region);
            }
            _ => filled.push(region),
        }
    }
    filled.retain(|r| r.duration() >= min_on);
    Ok(Timeline::from_intervals(filled))
}

fn frame_span(first: usize, end: usize, shift: Ticks) -> Interval {
    Interval::from_range(shift * first as i64, shift * end as i64)
}

/// FA and MISS of a hypothesis timeline against a reference, both as
/// fractions of the evaluation `scope` duration.
pub fn detection_errors(
    hyp: &Timeline,
    reference: &Timeline,
    scope: &Timeline,
) -> Result<DetectionErrorReport> {
    if scope.is_empty() {
        return Err(Error::InvalidArgument(
            "empty evaluation scope: rates undefined".into(),
        ));
    }
    let denom = scope.total_duration();
    let fa = hyp.difference(reference).intersection(scope).total_duration();
    let miss = reference.difference(hyp).intersection(scope).total_duration();
    let false_alarm_rate = fa.get() as f64 / denom.get() as f64;
    let miss_rate = miss.get() as f64 / denom.get() as f64;
    Ok(DetectionErrorReport {
        false_alarm_rate,
        miss_rate,
        total_rate: false_alarm_rate + miss_rate,
        reference_duration: denom.seconds(),
    })
}

/// Renders a timeline as a 0/1 stream on the given frame grid, for
/// re-binarization or synthetic scores. Frame `i` scores 1 when its center
/// lies inside the timeline.
pub fn stream_from_timeline(
    recording_id: impl Into<String>,
    timeline: &Timeline,
    frame_shift: Ticks,
    n_frames: usize,
) -> Result<FrameScoreStream> {
    let scores = (0..n_frames)
        .map(|i| {
            let center = frame_shift * i as i64 + frame_shift / 2;
            if timeline.contains(center) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    FrameScoreStream::new(recording_id, frame_shift, scores)
}

// --- score file format -----------------------------------------------------
//
// One recording per file:
//
//   FRAMESCORES <recording_id> <frame_shift_seconds> <n_frames>
//   <score>
//   ...

pub fn write_scores(stream: &FrameScoreStream) -> String {
    let mut out = format!(
        "FRAMESCORES {} {} {}\n",
        stream.recording_id,
        format_seconds_compact(stream.frame_shift),
        stream.len()
    );
    for s in &stream.scores {
        writeln!(out, "{s:.6}").expect("string write cannot fail");
    }
    out
}

pub fn parse_scores(text: &str) -> Result<FrameScoreStream> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty score file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != "FRAMESCORES" {
        return Err(Error::parse(
            1,
            "expected header: FRAMESCORES <recording_id> <frame_shift> <n_frames>",
        ));
    }
    let recording_id = fields[1].to_string();
    let shift_secs: f64 = fields[2]
        .parse()
        .map_err(|_| Error::parse(1, format!("non-numeric frame shift: {:?}", fields[2])))?;
    let frame_shift = Ticks::try_from_seconds(shift_secs)?;
    let n_frames: usize = fields[3]
        .parse()
        .map_err(|_| Error::parse(1, format!("non-numeric frame count: {:?}", fields[3])))?;

    let mut scores = Vec::with_capacity(n_frames);
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let s: f64 = line
            .parse()
            .map_err(|_| Error::parse(idx + 1, format!("non-numeric score: {line:?}")))?;
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::parse(idx + 1, format!("score outside [0, 1]: {s}")));
        }
        scores.push(s);
    }
    if scores.len() != n_frames {
        return Err(Error::parse(
            1,
            format!("header declares {n_frames} frames, found {}", scores.len()),
        ));
    }
    FrameScoreStream::new(recording_id, frame_shift, scores)
}

pub fn read_scores_file(path: impl AsRef<Path>) -> Result<FrameScoreStream> {
    parse_scores(&std::fs::read_to_string(path)?)
}

pub fn write_scores_file(path: impl AsRef<Path>, stream: &FrameScoreStream) -> Result<()> {
    std::fs::write(path, write_scores(stream))?;
    Ok(())
}

/// Seconds with up to 4 decimals, trailing zeros trimmed ("0.01", "16").
pub(crate) fn format_seconds_compact(t: Ticks) -> String {
    let mut s = format!("{:.4}", t.seconds());
    while s.ends_with('0') {
        s.pop();
    }
    if s.ends_with('.') {
        s.pop();
    }
    s
}
