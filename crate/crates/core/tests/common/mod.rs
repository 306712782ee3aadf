//! Shared helpers for integration tests: seeded random annotations and an
//! independent brute-force DER oracle.
//!
//! Each test target uses a different subset of these helpers.
#![allow(dead_code)]

use diarkit::metrics::ScoringOptions;
use diarkit::{Annotation, Ticks, Turn};
use rand::prelude::*;
use rand_chacha::ChaCha20Rng;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Random normalized annotation with millisecond-grid times.
pub fn random_annotation(
    rng: &mut ChaCha20Rng,
    recording_id: &str,
    max_speakers: usize,
    max_turns: usize,
    horizon: Ticks,
) -> Annotation {
    let n_speakers = rng.random_range(1..=max_speakers);
    let n_turns = rng.random_range(0..=max_turns);
    let horizon_ms = horizon.get() / 10;
    let mut turns = Vec::with_capacity(n_turns);
    for _ in 0..n_turns {
        let speaker = rng.random_range(0..n_speakers);
        let onset_ms = rng.random_range(0..horizon_ms - 200);
        let max_dur = (horizon_ms - onset_ms).min(8_000);
        let dur_ms = rng.random_range(200..=max_dur);
        turns.push(
            Turn::new(
                recording_id,
                format!("s{speaker}"),
                Ticks::from_millis(onset_ms),
                Ticks::from_millis(dur_ms),
            )
            .expect("generated turn is valid"),
        );
    }
    Annotation::with_turns(recording_id, turns).expect("generated annotation is valid")
}

/// Like [`random_annotation`] but guaranteed non-empty.
pub fn random_nonempty_annotation(
    rng: &mut ChaCha20Rng,
    recording_id: &str,
    max_speakers: usize,
    max_turns: usize,
    horizon: Ticks,
) -> Annotation {
    loop {
        let ann = random_annotation(rng, recording_id, max_speakers, max_turns.max(1), horizon);
        if !ann.is_empty() {
            return ann;
        }
    }
}

// --- independent DER oracle ---------------------------------------------------
//
// Recomputes scored regions from raw turn lists on (start, end) tick pairs
// and enumerates every injective speaker mapping, taking the minimum total
// error. Shares no interval code with the implementation.

type Span = (i64, i64);

fn merge_spans(mut spans: Vec<Span>) -> Vec<Span> {
    spans.retain(|s| s.1 > s.0);
    spans.sort_unstable();
    let mut out: Vec<Span> = Vec::new();
    for s in spans {
        match out.last_mut() {
            Some(last) if s.0 <= last.1 => last.1 = last.1.max(s.1),
            _ => out.push(s),
        }
    }
    out
}

fn subtract_spans(base: &[Span], cut: &[Span]) -> Vec<Span> {
    let mut out = Vec::new();
    for &(mut start, end) in base {
        for &(c0, c1) in cut {
            if c1 <= start || c0 >= end {
                continue;
            }
            if c0 > start {
                out.push((start, c0));
            }
            start = start.max(c1);
            if start >= end {
                break;
            }
        }
        if start < end {
            out.push((start, end));
        }
    }
    merge_spans(out)
}

fn in_spans(spans: &[Span], t: i64) -> bool {
    spans.iter().any(|&(a, b)| t >= a && t < b)
}

/// Minimum error over all speaker bijections, with md-eval style regions.
/// Returns (error_ticks, total_reference_ticks).
pub fn oracle_der_ticks(
    reference: &Annotation,
    hypothesis: &Annotation,
    opts: &ScoringOptions,
) -> (i64, i64) {
    let collar = opts.collar.get();
    let mut ref_speakers: Vec<String> = reference
        .turns()
        .iter()
        .map(|t| t.speaker().to_string())
        .collect();
    ref_speakers.sort();
    ref_speakers.dedup();
    let mut hyp_speakers: Vec<String> = hypothesis
        .turns()
        .iter()
        .map(|t| t.speaker().to_string())
        .collect();
    hyp_speakers.sort();
    hyp_speakers.dedup();

    let turn_spans = |ann: &Annotation, speaker: &str| -> Vec<Span> {
        merge_spans(
            ann.turns()
                .iter()
                .filter(|t| t.speaker() == speaker)
                .map(|t| (t.onset().get(), t.end().get()))
                .collect(),
        )
    };
    let ref_spans: Vec<Vec<Span>> = ref_speakers.iter().map(|s| turn_spans(reference, s)).collect();
    let hyp_spans: Vec<Vec<Span>> = hyp_speakers.iter().map(|s| turn_spans(hypothesis, s)).collect();

    // Scope: UEM if given, else the union of everything annotated.
    let mut scope: Vec<Span> = match &opts.uem {
        Some(uem) => uem.iter().map(|iv| (iv.onset().get(), iv.end().get())).collect(),
        None => ref_spans
            .iter()
            .chain(&hyp_spans)
            .flatten()
            .copied()
            .collect(),
    };
    scope = merge_spans(scope);

    if collar > 0 {
        let mut zones = Vec::new();
        for t in reference.turns() {
            for b in [t.onset().get(), t.end().get()] {
                zones.push(((b - collar).max(0), b + collar));
            }
        }
        scope = subtract_spans(&scope, &merge_spans(zones));
    }
    if !opts.score_overlaps {
        // Regions with two or more active reference speakers.
        let mut bounds: Vec<i64> = ref_spans.iter().flatten().flat_map(|&(a, b)| [a, b]).collect();
        bounds.sort_unstable();
        bounds.dedup();
        let mut zones = Vec::new();
        for w in bounds.windows(2) {
            let active = ref_spans.iter().filter(|sp| in_spans(sp, w[0])).count();
            if active >= 2 {
                zones.push((w[0], w[1]));
            }
        }
        scope = subtract_spans(&scope, &merge_spans(zones));
    }

    // Homogeneous regions.
    let mut bounds: Vec<i64> = Vec::new();
    for spans in ref_spans.iter().chain(&hyp_spans).chain(std::iter::once(&scope)) {
        for &(a, b) in spans {
            bounds.push(a);
            bounds.push(b);
        }
    }
    bounds.sort_unstable();
    bounds.dedup();

    struct OracleRegion {
        dur: i64,
        ref_mask: u32,
        hyp_mask: u32,
    }
    let mut regions = Vec::new();
    let mut total_ref = 0i64;
    for w in bounds.windows(2) {
        if !in_spans(&scope, w[0]) {
            continue;
        }
        let mut ref_mask = 0u32;
        for (i, spans) in ref_spans.iter().enumerate() {
            if in_spans(spans, w[0]) {
                ref_mask |= 1 << i;
            }
        }
        let mut hyp_mask = 0u32;
        for (i, spans) in hyp_spans.iter().enumerate() {
            if in_spans(spans, w[0]) {
                hyp_mask |= 1 << i;
            }
        }
        let dur = w[1] - w[0];
        total_ref += dur * ref_mask.count_ones() as i64;
        if ref_mask != 0 || hyp_mask != 0 {
            regions.push(OracleRegion {
                dur,
                ref_mask,
                hyp_mask,
            });
        }
    }

    // Enumerate injections of the smaller speaker side into the larger.
    let n_ref = ref_speakers.len();
    let n_hyp = hyp_speakers.len();
    let error_for = |map_ref_to_hyp: &[Option<usize>]| -> i64 {
        regions
            .iter()
            .map(|r| {
                let rc = r.ref_mask.count_ones() as i64;
                let hc = r.hyp_mask.count_ones() as i64;
                let matched = map_ref_to_hyp
                    .iter()
                    .enumerate()
                    .filter(|(ri, m)| {
                        r.ref_mask & (1 << ri) != 0
                            && m.is_some_and(|hj| r.hyp_mask & (1 << hj) != 0)
                    })
                    .count() as i64;
                r.dur * (rc.max(hc) - matched)
            })
            .sum()
    };

    let mut best = i64::MAX;
    let mut mapping: Vec<Option<usize>> = vec![None; n_ref];
    fn enumerate(
        ri: usize,
        n_ref: usize,
        n_hyp: usize,
        used: &mut Vec<bool>,
        mapping: &mut Vec<Option<usize>>,
        best: &mut i64,
        error_for: &dyn Fn(&[Option<usize>]) -> i64,
    ) {
        if ri == n_ref {
            *best = (*best).min(error_for(mapping));
            return;
        }
        // Leaving a ref speaker unmatched is only needed when hyp side is
        // smaller; harmless to always allow.
        mapping[ri] = None;
        enumerate(ri + 1, n_ref, n_hyp, used, mapping, best, error_for);
        for hj in 0..n_hyp {
            if !used[hj] {
                used[hj] = true;
                mapping[ri] = Some(hj);
                enumerate(ri + 1, n_ref, n_hyp, used, mapping, best, error_for);
                mapping[ri] = None;
                used[hj] = false;
            }
        }
    }
    if n_ref == 0 && n_hyp == 0 {
        return (0, total_ref);
    }
    enumerate(
        0,
        n_ref,
        n_hyp,
        &mut vec![false; n_hyp],
        &mut mapping,
        &mut best,
        &error_for,
    );
    (best, total_ref)
}
