//! Cross-module property tests for the spec-level invariants that are not
//! already part of the acceptance suite.

mod common;

use common::{oracle_der_ticks, random_annotation, random_nonempty_annotation, rng};
use diarkit::ahc::{diarize_ahc, AhcConfig};
use diarkit::frame_scores::{
    binarize, detection_errors, fuse_streams, stream_from_timeline, FrameScoreStream,
};
use diarkit::fusion::{dover_lap, map_labels, HypothesisSet, DEFAULT_RANK_EXPONENT};
use diarkit::metrics::{der, ScoringOptions};
use diarkit::simgen::{generate, SimConfig};
use diarkit::timeline::rttm;
use diarkit::tsvad::extract_profiles;
use diarkit::{Annotation, Interval, Ticks, Timeline, Turn};
use proptest::prelude::*;

// --- timeline / RTTM ------------------------------------------------------------

fn arb_annotation() -> impl Strategy<Value = Annotation> {
    let turn = (0usize..5, 0i64..60_000, 200i64..6_000);
    proptest::collection::vec(turn, 0..15).prop_map(|specs| {
        let turns = specs
            .into_iter()
            .map(|(spk, onset_ms, dur_ms)| {
                diarkit::Turn::new(
                    "rec",
                    format!("s{spk}"),
                    Ticks::from_millis(onset_ms),
                    Ticks::from_millis(dur_ms),
                )
                .unwrap()
            })
            .collect();
        Annotation::with_turns("rec", turns).unwrap()
    })
}

proptest! {
    #[test]
    fn rttm_round_trip_identity(ann in arb_annotation()) {
        let text = rttm::write(std::slice::from_ref(&ann));
        let parsed = rttm::parse(&text).unwrap();
        if ann.is_empty() {
            prop_assert!(parsed.is_empty());
        } else {
            prop_assert_eq!(parsed, vec![ann]);
        }
    }

    #[test]
    fn normalization_is_idempotent(ann in arb_annotation()) {
        let renormalized = Annotation::with_turns("rec", ann.turns().to_vec()).unwrap();
        prop_assert_eq!(&renormalized, &ann);
    }

    #[test]
    fn support_bounded_by_turn_durations(ann in arb_annotation()) {
        let support = ann.support().total_duration();
        let summed: Ticks = ann.turns().iter().map(|t| t.duration()).sum();
        prop_assert!(support <= summed);
        // Equality iff no two turns overlap.
        let has_overlap = !ann.overlap_regions().is_empty();
        prop_assert_eq!(support == summed, !has_overlap);
    }
}

// --- frame scores ----------------------------------------------------------------

#[test]
fn fused_scores_stay_within_input_envelope() {
    let mut r = rng(11);
    for _ in 0..200 {
        let n = r.random_range(5..100);
        let streams: Vec<FrameScoreStream> = (0..3)
            .map(|_| {
                let scores = (0..n).map(|_| r.random::<f64>()).collect();
                FrameScoreStream::new("rec", Ticks::from_millis(10), scores).unwrap()
            })
            .collect();
        let weights: Vec<f64> = (0..3).map(|_| r.random::<f64>() + 0.01).collect();
        let fused = fuse_streams(&streams, Some(&weights)).unwrap();
        for i in 0..n {
            let lo = streams.iter().map(|s| s.scores()[i]).fold(f64::INFINITY, f64::min);
            let hi = streams
                .iter()
                .map(|s| s.scores()[i])
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(fused.scores()[i] >= lo && fused.scores()[i] <= hi);
        }
    }
}

#[test]
fn detection_errors_swap_symmetry() {
    let mut r = rng(12);
    for _ in 0..200 {
        let a = random_annotation(&mut r, "rec", 3, 8, Ticks::from_seconds(60.0)).support();
        let b = random_annotation(&mut r, "rec", 3, 8, Ticks::from_seconds(60.0)).support();
        let scope = Timeline::from_intervals([diarkit::Interval::from_range(
            Ticks::ZERO,
            Ticks::from_seconds(60.0),
        )]);
        let ab = detection_errors(&a, &b, &scope).unwrap();
        let ba = detection_errors(&b, &a, &scope).unwrap();
        assert_eq!(ab.false_alarm_rate, ba.miss_rate);
        assert_eq!(ab.miss_rate, ba.false_alarm_rate);
        assert_eq!(ab.total_rate, ba.total_rate);
    }
}

#[test]
fn binarize_idempotent_on_induced_stream() {
    let mut r = rng(13);
    for _ in 0..300 {
        let n = r.random_range(10..200);
        let scores: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
        let stream = FrameScoreStream::new("rec", Ticks::from_millis(10), scores).unwrap();
        let offset = r.random::<f64>();
        let onset = offset + r.random::<f64>() * (1.0 - offset);
        let first = binarize(&stream, onset, offset, Ticks::ZERO, Ticks::ZERO).unwrap();
        let induced = stream_from_timeline("rec", &first, Ticks::from_millis(10), n).unwrap();
        let second = binarize(&induced, onset, offset, Ticks::ZERO, Ticks::ZERO).unwrap();
        assert_eq!(first, second);
    }
}

// --- metrics ----------------------------------------------------------------------

#[test]
fn emptying_hypothesis_converts_errors_to_miss() {
    // Removing hypothesis speech can only convert correct/confused time into
    // missed time: the miss component is monotone, and the fully emptied
    // hypothesis is all miss with no false alarm or confusion.
    let mut r = rng(14);
    let opts = ScoringOptions::strict();
    for _ in 0..200 {
        let reference = random_nonempty_annotation(&mut r, "rec", 4, 10, Ticks::from_seconds(60.0));
        let hypothesis = random_annotation(&mut r, "rec", 4, 10, Ticks::from_seconds(60.0));
        let scored = der(&reference, &hypothesis, &opts).unwrap();
        let emptied = der(&reference, &Annotation::new("rec"), &opts).unwrap();
        assert!(scored.miss_ticks() <= emptied.miss_ticks());
        assert_eq!(emptied.miss_ticks(), emptied.total_reference_ticks());
        assert_eq!(emptied.false_alarm_ticks(), Ticks::ZERO);
        assert_eq!(emptied.confusion_ticks(), Ticks::ZERO);
        assert_eq!(emptied.der(), 1.0);
    }
}

#[test]
fn der_matches_oracle_under_uem_and_overlap_options() {
    // The acceptance suite pins the plain-collar cases; this adds UEM
    // restriction and overlap exclusion into the oracle comparison.
    let mut r = rng(18);
    let mut scored = 0usize;
    let mut attempts = 0usize;
    while scored < 150 {
        attempts += 1;
        assert!(attempts < 600);
        let reference = random_nonempty_annotation(&mut r, "rec", 4, 10, Ticks::from_seconds(60.0));
        let hypothesis = random_annotation(&mut r, "rec", 4, 10, Ticks::from_seconds(60.0));
        let uem = if r.random_bool(0.6) {
            let a = r.random_range(0..40_000i64);
            let b = a + r.random_range(5_000..20_000i64);
            Some(Timeline::from_intervals([Interval::from_range(
                Ticks::from_millis(a),
                Ticks::from_millis(b),
            )]))
        } else {
            None
        };
        let opts = ScoringOptions {
            collar: if r.random_bool(0.5) {
                Ticks::ZERO
            } else {
                Ticks::from_millis(250)
            },
            score_overlaps: r.random_bool(0.7),
            uem,
        };
        let Ok(breakdown) = der(&reference, &hypothesis, &opts) else {
            continue;
        };
        let (oracle_error, oracle_total) = oracle_der_ticks(&reference, &hypothesis, &opts);
        assert_eq!(breakdown.error_ticks().get(), oracle_error);
        assert_eq!(breakdown.total_reference_ticks().get(), oracle_total);
        scored += 1;
    }
}

#[test]
fn der_invariant_under_renaming_both_sides() {
    let mut r = rng(15);
    let opts = ScoringOptions::default();
    for _ in 0..100 {
        let reference = random_nonempty_annotation(&mut r, "rec", 4, 10, Ticks::from_seconds(60.0));
        let hypothesis = random_nonempty_annotation(&mut r, "rec", 4, 10, Ticks::from_seconds(60.0));
        let rename = |ann: &Annotation, prefix: &str| {
            Annotation::from_label_timelines(
                ann.recording_id(),
                ann.label_timelines()
                    .into_iter()
                    .map(|(label, tl)| (format!("{prefix}{label}"), tl)),
            )
            .unwrap()
        };
        let Ok(base) = der(&reference, &hypothesis, &opts) else {
            continue;
        };
        let renamed = der(&rename(&reference, "x_"), &rename(&hypothesis, "q_"), &opts).unwrap();
        assert_eq!(base, renamed);
    }
}

// --- clustering pipeline ------------------------------------------------------------

#[test]
fn diarize_ahc_support_equals_speech_and_is_deterministic() {
    for seed in 0..12 {
        let cfg = SimConfig {
            seed,
            n_speakers: 2 + (seed as usize % 4),
            duration: Ticks::from_seconds(60.0),
            overlap_prob: 0.15,
            ..SimConfig::default()
        };
        let out = generate(&cfg).unwrap();
        let a = diarize_ahc(&out.speech, &out.embeddings, &out.osd, &AhcConfig::default()).unwrap();
        assert_eq!(
            a.support(),
            out.speech,
            "support must cover speech exactly (seed {seed})"
        );
        let b = diarize_ahc(&out.speech, &out.embeddings, &out.osd, &AhcConfig::default()).unwrap();
        assert_eq!(a, b, "identical inputs must give identical output");
    }
}

#[test]
fn three_speaker_conversation_recovers_below_one_percent() {
    // Clean separation (within-cosine ~0.9, between ~0) on one recording.
    let cfg = SimConfig {
        seed: 99,
        n_speakers: 3,
        duration: Ticks::from_seconds(120.0),
        overlap_prob: 0.1,
        ..SimConfig::default()
    };
    let out = generate(&cfg).unwrap();
    let hyp = diarize_ahc(&out.speech, &out.embeddings, &out.osd, &AhcConfig::default()).unwrap();
    let b = der(&out.reference, &hyp, &ScoringOptions::default()).unwrap();
    assert!(b.der() < 0.01, "expected DER < 1%, got {:.4}", b.der());
}

#[test]
fn extract_profiles_invariant_to_turn_order() {
    let cfg = SimConfig {
        seed: 42,
        duration: Ticks::from_seconds(40.0),
        ..SimConfig::default()
    };
    let out = generate(&cfg).unwrap();
    let mut shuffled = out.reference.turns().to_vec();
    shuffled.reverse();
    let reordered = Annotation::with_turns(out.reference.recording_id(), shuffled).unwrap();
    let a = extract_profiles(&out.reference, &out.embeddings, 30).unwrap();
    let b = extract_profiles(&reordered, &out.embeddings, 30).unwrap();
    assert_eq!(a.profiles, b.profiles);
}

// --- fusion ----------------------------------------------------------------------

#[test]
fn label_mapping_recovers_renaming_past_the_matching_cutoff() {
    // Twelve speakers per hypothesis pushes the assignment onto the
    // Hungarian route; an exact renaming must still be recovered.
    let mut turns_a = Vec::new();
    let mut turns_b = Vec::new();
    for i in 0..12 {
        let onset = Ticks::from_seconds(4.0 * i as f64);
        let dur = Ticks::from_seconds(3.0 + 0.1 * i as f64);
        turns_a.push(Turn::new("rec", format!("a{i:02}"), onset, dur).unwrap());
        turns_b.push(Turn::new("rec", format!("b{i:02}"), onset, dur).unwrap());
    }
    let h1 = Annotation::with_turns("rec", turns_a).unwrap();
    let h2 = Annotation::with_turns("rec", turns_b).unwrap();
    let set = HypothesisSet::new(vec![h1, h2], Some(vec![0.6, 0.4])).unwrap();
    let mapping = map_labels(&set);
    for i in 0..12 {
        assert_eq!(
            mapping.global(1, &format!("b{i:02}")),
            Some(format!("a{i:02}").as_str())
        );
    }
}

#[test]
fn fusion_never_asserts_time_nobody_claimed() {
    let mut r = rng(16);
    for _ in 0..100 {
        let hyps: Vec<Annotation> = (0..3)
            .map(|_| random_nonempty_annotation(&mut r, "rec", 4, 10, Ticks::from_seconds(60.0)))
            .collect();
        let fused = dover_lap(&hyps, None, DEFAULT_RANK_EXPONENT).unwrap();
        let mut union = Timeline::new();
        for h in &hyps {
            union = union.union(&h.support());
        }
        // Fused support must sit inside the union of asserted speech.
        assert_eq!(fused.support().difference(&union), Timeline::new());
    }
}

#[test]
fn fusion_output_speaker_count_bounded_by_region_assertions() {
    let mut r = rng(17);
    for _ in 0..100 {
        let hyps: Vec<Annotation> = (0..3)
            .map(|_| random_nonempty_annotation(&mut r, "rec", 3, 8, Ticks::from_seconds(40.0)))
            .collect();
        let fused = dover_lap(&hyps, None, DEFAULT_RANK_EXPONENT).unwrap();
        // At any time, the fused speaker count never exceeds the maximum
        // count asserted by any hypothesis there.
        let mut bounds: Vec<Ticks> = Vec::new();
        for ann in hyps.iter().chain(std::iter::once(&fused)) {
            for t in ann.turns() {
                bounds.push(t.onset());
                bounds.push(t.end());
            }
        }
        bounds.sort_unstable();
        bounds.dedup();
        for w in bounds.windows(2) {
            let at = w[0];
            let count = |ann: &Annotation| {
                ann.turns()
                    .iter()
                    .filter(|t| t.onset() <= at && at < t.end())
                    .count()
            };
            let fused_count = count(&fused);
            let max_single = hyps.iter().map(count).max().unwrap();
            assert!(fused_count <= max_single);
        }
    }
}
