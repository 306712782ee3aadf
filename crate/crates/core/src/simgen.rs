//! Deterministic synthetic-conversation generator.
//!
//! Produces a ground-truth annotation, its speech and overlap timelines,
//! noisy VAD scores, and noisy speaker embeddings for desk-scale end-to-end
//! testing. Generation is a pure function of the config: the RNG is ChaCha20
//! seeded from `cfg.seed`, draws happen in a fixed order (speaker centroids,
//! turn script, embeddings, score noise), and all turn times sit on the
//! millisecond grid so RTTM round trips are exact.

use rand::prelude::*;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::embeddings::{normalize_f64_to_f32, uniform_segments, EmbeddingSequence};
use crate::error::{Error, Result};
use crate::frame_scores::FrameScoreStream;
use crate::timeline::{Annotation, Ticks, Timeline, Turn};

/// Largest admissible cosine between two generated speaker centroids.
pub const CENTROID_COSINE_BOUND: f64 = 0.3;

const RESAMPLE_ATTEMPTS: usize = 1000;

/// Synthetic-conversation parameters.
#[derive(Clone, Debug)]
pub struct SimConfig {
    pub recording_id: String,
    pub seed: u64,
    pub n_speakers: usize,
    pub duration: Ticks,
    pub turn_len: (Ticks, Ticks),
    pub pause_len: (Ticks, Ticks),
    pub overlap_prob: f64,
    pub embedding_dim: usize,
    /// Norm of the random perturbation applied to each segment embedding.
    /// Expected within-speaker cosine is roughly 1 / (1 + noise^2).
    pub within_noise: f64,
    /// Standard deviation of the clipped noise added to VAD scores.
    pub score_noise: f64,
    pub window: Ticks,
    pub shift: Ticks,
    pub frame_shift: Ticks,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            recording_id: "sim000".into(),
            seed: 0,
            n_speakers: 3,
            duration: Ticks::from_seconds(120.0),
            turn_len: (Ticks::from_seconds(2.0), Ticks::from_seconds(6.0)),
            pause_len: (Ticks::from_millis(200), Ticks::from_seconds(1.0)),
            overlap_prob: 0.1,
            embedding_dim: 64,
            within_noise: 0.33,
            score_noise: 0.02,
            window: crate::embeddings::DEFAULT_WINDOW,
            shift: crate::embeddings::DEFAULT_SHIFT,
            frame_shift: crate::frame_scores::DEFAULT_FRAME_SHIFT,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_speakers == 0 || self.n_speakers > 30 {
            return Err(Error::InvalidArgument(format!(
                "n_speakers must be in 1..=30, got {}",
                self.n_speakers
            )));
        }
        if !self.duration.is_positive() {
            return Err(Error::InvalidArgument("duration must be positive".into()));
        }
        if !self.turn_len.0.is_positive() || self.turn_len.0 > self.turn_len.1 {
            return Err(Error::InvalidArgument(
                "turn_len must satisfy 0 < min <= max".into(),
            ));
        }
        if self.pause_len.0.is_negative() || self.pause_len.0 > self.pause_len.1 {
            return Err(Error::InvalidArgument(
                "pause_len must satisfy 0 <= min <= max".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.overlap_prob) {
            return Err(Error::InvalidArgument(format!(
                "overlap_prob outside [0, 1]: {}",
                self.overlap_prob
            )));
        }
        if self.embedding_dim < 2 {
            return Err(Error::InvalidArgument(
                "embedding_dim must be at least 2".into(),
            ));
        }
        if self.within_noise < 0.0 || self.score_noise < 0.0 {
            return Err(Error::InvalidArgument(
                "noise scales must be non-negative".into(),
            ));
        }
        if !self.window.is_positive() || !self.shift.is_positive() || self.shift > self.window {
            return Err(Error::InvalidArgument(
                "need 0 < shift <= window".into(),
            ));
        }
        if !self.frame_shift.is_positive() {
            return Err(Error::InvalidArgument("frame_shift must be positive".into()));
        }
        Ok(())
    }
}

/// Everything one synthetic recording provides.
#[derive(Clone, PartialEq, Debug)]
pub struct SimOutput {
    pub reference: Annotation,
    pub speech: Timeline,
    pub osd: Timeline,
    pub vad_scores: FrameScoreStream,
    pub embeddings: EmbeddingSequence,
}

/// Generates one synthetic recording. Bit-identical for identical configs.
pub fn generate(cfg: &SimConfig) -> Result<SimOutput> {
    cfg.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);

    let centroids = draw_centroids(&mut rng, cfg)?;
    let reference = draw_turns(&mut rng, cfg)?;
    let speech = reference.support();
    let osd = reference.overlap_regions();
    let embeddings = draw_embeddings(&mut rng, cfg, &reference, &speech, &centroids)?;
    let vad_scores = draw_vad_scores(&mut rng, cfg, &speech)?;

    Ok(SimOutput {
        reference,
        speech,
        osd,
        vad_scores,
        embeddings,
    })
}

/// Renders a timeline as 0/1 frame scores plus clipped gaussian noise,
/// seeded independently of [`generate`]'s stream.
pub fn noisy_scores_from_timeline(
    recording_id: impl Into<String>,
    timeline: &Timeline,
    n_frames: usize,
    frame_shift: Ticks,
    noise: f64,
    seed: u64,
) -> Result<FrameScoreStream> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let scores = (0..n_frames)
        .map(|i| {
            let center = frame_shift * i as i64 + frame_shift / 2;
            let base = if timeline.contains(center) { 1.0 } else { 0.0 };
            if noise > 0.0 {
                let jitter: f64 = rng.sample(StandardNormal);
                (base + noise * jitter).clamp(0.0, 1.0)
            } else {
                base
            }
        })
        .collect();
    FrameScoreStream::new(recording_id, frame_shift, scores)
}

fn unit_gaussian(rng: &mut ChaCha20Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn draw_centroids(rng: &mut ChaCha20Rng, cfg: &SimConfig) -> Result<Vec<Vec<f64>>> {
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(cfg.n_speakers);
    for s in 0..cfg.n_speakers {
        let mut accepted = None;
        for _ in 0..RESAMPLE_ATTEMPTS {
            let candidate = unit_gaussian(rng, cfg.embedding_dim);
            let ok = centroids.iter().all(|c| {
                let cos: f64 = c.iter().zip(&candidate).map(|(a, b)| a * b).sum();
                cos.abs() < CENTROID_COSINE_BOUND
            });
            if ok {
                accepted = Some(candidate);
                break;
            }
        }
        match accepted {
            Some(c) => centroids.push(c),
            None => {
                return Err(Error::Generation(format!(
                    "could not place speaker {s} with pairwise |cos| < {CENTROID_COSINE_BOUND} \
                     in dimension {}; raise embedding_dim or lower n_speakers",
                    cfg.embedding_dim
                )));
            }
        }
    }
    Ok(centroids)
}

fn speaker_label(s: usize) -> String {
    format!("s{s:02}")
}

fn draw_turns(rng: &mut ChaCha20Rng, cfg: &SimConfig) -> Result<Annotation> {
    let draw_range_ms = |rng: &mut ChaCha20Rng, lo: Ticks, hi: Ticks| -> Ticks {
        let lo_ms = lo.get() / 10;
        let hi_ms = hi.get() / 10;
        Ticks::from_millis(rng.random_range(lo_ms..=hi_ms))
    };

    let mut turns: Vec<Turn> = Vec::new();
    let mut prev: Option<(usize, Ticks, Ticks)> = None; // speaker, end, duration
    let pending_onset = draw_range_ms(rng, cfg.pause_len.0, cfg.pause_len.1);

    loop {
        let speaker = match prev {
            None => rng.random_range(0..cfg.n_speakers),
            Some((last, _, _)) if cfg.n_speakers > 1 => {
                let pick = rng.random_range(0..cfg.n_speakers - 1);
                if pick >= last {
                    pick + 1
                } else {
                    pick
                }
            }
            Some((last, _, _)) => last,
        };
        let length = draw_range_ms(rng, cfg.turn_len.0, cfg.turn_len.1);
        let onset = match prev {
            None => pending_onset,
            Some((_, prev_end, prev_dur)) => {
                let overlaps = cfg.n_speakers > 1
                    && cfg.overlap_prob > 0.0
                    && rng.random_bool(cfg.overlap_prob);
                if overlaps {
                    // Overlap at most half of the shorter adjacent turn, so
                    // turns never nest and three-way overlap cannot occur.
                    let half = prev_dur.min(length) / 2;
                    let amount = draw_range_ms(rng, Ticks::ZERO, half);
                    prev_end - amount
                } else {
                    prev_end + draw_range_ms(rng, cfg.pause_len.0, cfg.pause_len.1)
                }
            }
        };
        if onset >= cfg.duration {
            break;
        }
        let end = (onset + length).min(cfg.duration);
        if end - onset < Ticks::from_millis(1) {
            break;
        }
        turns.push(Turn::new(
            &cfg.recording_id,
            speaker_label(speaker),
            onset,
            end - onset,
        )?);
        if end >= cfg.duration {
            break;
        }
        prev = Some((speaker, end, end - onset));
    }
    Annotation::with_turns(cfg.recording_id.clone(), turns)
}

fn draw_embeddings(
    rng: &mut ChaCha20Rng,
    cfg: &SimConfig,
    reference: &Annotation,
    speech: &Timeline,
    centroids: &[Vec<f64>],
) -> Result<EmbeddingSequence> {
    let segments = uniform_segments(speech, cfg.window, cfg.shift)?;
    let label_timelines = reference.label_timelines();
    let mut entries = Vec::with_capacity(segments.len());
    for segment in segments {
        let mid = segment.midpoint();
        // Speaker content at the midpoint; overlapping speakers blend.
        let mut base = vec![0.0f64; cfg.embedding_dim];
        let mut active = 0usize;
        for (label, tl) in &label_timelines {
            if tl.contains(mid) {
                let idx: usize = label[1..].parse().expect("labels are sNN");
                for (acc, &x) in base.iter_mut().zip(&centroids[idx]) {
                    *acc += x;
                }
                active += 1;
            }
        }
        debug_assert!(active > 0, "segment midpoint outside every turn");
        let vector = if cfg.within_noise > 0.0 {
            let norm: f64 = base.iter().map(|x| x * x).sum::<f64>().sqrt();
            let jitter = unit_gaussian(rng, cfg.embedding_dim);
            let noisy: Vec<f64> = base
                .iter()
                .zip(&jitter)
                .map(|(&b, &j)| b / norm + cfg.within_noise * j)
                .collect();
            normalize_f64_to_f32(&noisy).expect("noisy vector is non-zero")
        } else {
            normalize_f64_to_f32(&base).expect("active centroids are non-zero")
        };
        entries.push((segment, vector));
    }
    EmbeddingSequence::new(cfg.recording_id.clone(), cfg.embedding_dim, entries)
}

fn draw_vad_scores(
    rng: &mut ChaCha20Rng,
    cfg: &SimConfig,
    speech: &Timeline,
) -> Result<FrameScoreStream> {
    let n_frames = cfg.duration.div_ceil(cfg.frame_shift) as usize;
    let scores = (0..n_frames)
        .map(|i| {
            let center = cfg.frame_shift * i as i64 + cfg.frame_shift / 2;
            let base = if speech.contains(center) { 1.0 } else { 0.0 };
            if cfg.score_noise > 0.0 {
                let jitter: f64 = rng.sample(StandardNormal);
                (base + cfg.score_noise * jitter).clamp(0.0, 1.0)
            } else {
                base
            }
        })
        .collect();
    FrameScoreStream::new(cfg.recording_id.clone(), cfg.frame_shift, scores)
}
