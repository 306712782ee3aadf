//! Hot-path benchmarks: similarity matrices, clustering, stitching, and DER
//! scoring at realistic per-recording sizes.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use diarkit::ahc::{ahc_cluster, diarize_ahc, AhcConfig, Linkage};
use diarkit::embeddings::cosine_matrix;
use diarkit::metrics::{der, ScoringOptions};
use diarkit::simgen::{generate, SimConfig};
use diarkit::tsvad::{chunk_spans, frame_range, stitch, ChunkScores, DEFAULT_RESOLUTION};
use diarkit::Ticks;
use rand::prelude::*;
use rand_chacha::ChaCha20Rng;

fn sim_output(seed: u64, duration_s: f64) -> diarkit::simgen::SimOutput {
    generate(&SimConfig {
        seed,
        duration: Ticks::from_seconds(duration_s),
        n_speakers: 4,
        ..SimConfig::default()
    })
    .expect("generation succeeds")
}

fn bench_cosine_matrix(c: &mut Criterion) {
    let mut group = c.benchmark_group("cosine_matrix");
    for duration in [60.0, 120.0] {
        let out = sim_output(1, duration);
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{}s/{}segs", duration, out.embeddings.len())),
            &out,
            |b, out| b.iter(|| cosine_matrix(black_box(&out.embeddings)).unwrap()),
        );
    }
    group.finish();
}

fn bench_ahc_cluster(c: &mut Criterion) {
    let mut group = c.benchmark_group("ahc_cluster");
    for n in [128usize, 256] {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let entries: Vec<(diarkit::Interval, Vec<f32>)> = (0..n)
            .map(|i| {
                let v: Vec<f32> = (0..64).map(|_| rng.random::<f32>() - 0.5).collect();
                (
                    diarkit::Interval::new(
                        Ticks::from_millis(320 * i as i64),
                        Ticks::from_millis(1280),
                    ),
                    v,
                )
            })
            .collect();
        let seq = diarkit::embeddings::EmbeddingSequence::new("rec", 64, entries).unwrap();
        let sim = cosine_matrix(&seq).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &sim, |b, sim| {
            b.iter(|| ahc_cluster(black_box(sim), 0.3, Linkage::Average))
        });
    }
    group.finish();
}

fn bench_diarize_ahc(c: &mut Criterion) {
    let out = sim_output(3, 120.0);
    c.bench_function("diarize_ahc/120s", |b| {
        b.iter(|| {
            diarize_ahc(
                black_box(&out.speech),
                black_box(&out.embeddings),
                black_box(&out.osd),
                &AhcConfig::default(),
            )
            .unwrap()
        })
    });
}

fn bench_stitch(c: &mut Criterion) {
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let spans = chunk_spans(
        Ticks::from_seconds(120.0),
        Ticks::from_seconds(16.0),
        Ticks::from_seconds(1.0),
    )
    .unwrap();
    let labels: Vec<String> = (0..4).map(|i| format!("spk{i:02}")).collect();
    let chunks: Vec<ChunkScores> = spans
        .iter()
        .map(|&interval| {
            let (lo, hi) = frame_range(interval, DEFAULT_RESOLUTION);
            let width = (hi - lo) as usize;
            ChunkScores {
                recording_id: "rec".into(),
                interval,
                resolution: DEFAULT_RESOLUTION,
                labels: labels.clone(),
                scores: (0..width * labels.len()).map(|_| rng.random()).collect(),
            }
        })
        .collect();
    c.bench_function("stitch/120s_4spk", |b| {
        b.iter(|| stitch(black_box(&chunks)).unwrap())
    });
}

fn bench_der(c: &mut Criterion) {
    let out = sim_output(5, 120.0);
    let hyp = diarize_ahc(&out.speech, &out.embeddings, &out.osd, &AhcConfig::default()).unwrap();
    let opts = ScoringOptions::default();
    c.bench_function("der/120s", |b| {
        b.iter(|| der(black_box(&out.reference), black_box(&hyp), &opts).unwrap())
    });
}

criterion_group!(
    benches,
    bench_cosine_matrix,
    bench_ahc_cluster,
    bench_diarize_ahc,
    bench_stitch,
    bench_der
);
criterion_main!(benches);
