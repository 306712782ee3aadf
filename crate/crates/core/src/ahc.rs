//! Clustering-based diarization: agglomerative clustering over segment
//! similarities, short-cluster reassignment through central embeddings, and
//! overlap assignment to the two closest speakers.
//!
//! The stages compose in [`diarize_ahc`]: consecutive-segment merging, plain
//! AHC with a stop threshold, long/short cluster reassignment with a
//! new-speaker rule, rendering to labeled turns that cover the speech
//! timeline exactly, then OSD-driven overlap post-processing.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::embeddings::{
    clamp_cosine, cosine_matrix, merge_consecutive, normalize_f64, normalize_f64_to_f32,
    EmbeddingSequence, SimilarityMatrix,
};
use crate::error::{Error, Result};
use crate::timeline::{Annotation, Interval, Ticks, Timeline};

/// Linkage criterion for agglomeration over similarities.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum Linkage {
    /// Mean pairwise similarity between clusters.
    #[default]
    Average,
    /// Least similar pair (the conservative criterion).
    Complete,
    /// Most similar pair.
    Single,
}

impl FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Linkage> {
        match s {
            "average" => Ok(Linkage::Average),
            "complete" => Ok(Linkage::Complete),
            "single" => Ok(Linkage::Single),
            other => Err(Error::Config(format!(
                "unknown linkage {other:?} (expected average, complete, or single)"
            ))),
        }
    }
}

impl Linkage {
    pub fn as_str(&self) -> &'static str {
        match self {
            Linkage::Average => "average",
            Linkage::Complete => "complete",
            Linkage::Single => "single",
        }
    }
}

/// Clustering thresholds and knobs.
#[derive(Clone, Debug)]
pub struct AhcConfig {
    /// Consecutive-segment merge threshold (similarity must strictly
    /// exceed it).
    pub segment_thr: f64,
    /// Agglomeration stops when the best linkage similarity drops below
    /// this.
    pub stop_thr: f64,
    /// A short cluster joins its closest long cluster only at or above this
    /// similarity; below it the short cluster becomes a new speaker.
    pub speaker_thr: f64,
    /// Clusters at or above this total duration count as long.
    pub long_cluster_min: Ticks,
    pub linkage: Linkage,
    /// Largest time gap over which consecutive segments may merge; normally
    /// the segmentation shift.
    pub merge_max_gap: Ticks,
}

impl Default for AhcConfig {
    fn default() -> Self {
        AhcConfig {
            segment_thr: 0.54,
            stop_thr: 0.60,
            speaker_thr: 0.20,
            long_cluster_min: Ticks::from_seconds(6.0),
            linkage: Linkage::Average,
            merge_max_gap: crate::embeddings::DEFAULT_SHIFT,
        }
    }
}

impl AhcConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("segment_thr", self.segment_thr),
            ("stop_thr", self.stop_thr),
            ("speaker_thr", self.speaker_thr),
        ] {
            if !(-1.0..=1.0).contains(&v) {
                return Err(Error::Config(format!(
                    "{name} outside [-1, 1]: {v}"
                )));
            }
        }
        if !self.long_cluster_min.is_positive() {
            return Err(Error::Config("long_cluster_min must be positive".into()));
        }
        Ok(())
    }
}

/// A hard clustering of a segment sequence. Cluster ids are contiguous and
/// numbered by first appearance in segment (time) order; centroids are
/// normalized means of member vectors; durations are sums of member interval
/// durations.
#[derive(Clone, PartialEq, Debug)]
pub struct ClusterState {
    assignments: Vec<usize>,
    centroids: Vec<Vec<f32>>,
    durations: Vec<Ticks>,
}

impl ClusterState {
    /// Derives centroids and durations from raw per-segment cluster ids,
    /// renumbering ids by first appearance.
    pub fn from_assignments(seq: &EmbeddingSequence, raw: &[usize]) -> ClusterState {
        debug_assert_eq!(seq.len(), raw.len());
        let mut renumber: BTreeMap<usize, usize> = BTreeMap::new();
        let mut assignments = Vec::with_capacity(raw.len());
        for &id in raw {
            let next = renumber.len();
            let compact = *renumber.entry(id).or_insert(next);
            assignments.push(compact);
        }
        let k = renumber.len();
        let dim = seq.dim();
        let mut sums = vec![vec![0.0f64; dim]; k];
        let mut durations = vec![Ticks::ZERO; k];
        let mut first_member = vec![usize::MAX; k];
        for (i, (entry, &c)) in seq.entries().iter().zip(&assignments).enumerate() {
            for (acc, &x) in sums[c].iter_mut().zip(entry.vector()) {
                *acc += x as f64;
            }
            durations[c] += entry.interval().duration();
            first_member[c] = first_member[c].min(i);
        }
        let centroids = sums
            .iter()
            .enumerate()
            .map(|(c, s)| {
                // Member vectors can cancel under permissive thresholds; the
                // first member then stands in for the collapsed mean.
                normalize_f64_to_f32(s)
                    .unwrap_or_else(|| seq.entries()[first_member[c]].vector().to_vec())
            })
            .collect();
        ClusterState {
            assignments,
            centroids,
            durations,
        }
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn centroids(&self) -> &[Vec<f32>] {
        &self.centroids
    }

    pub fn durations(&self) -> &[Ticks] {
        &self.durations
    }

    pub fn n_clusters(&self) -> usize {
        self.centroids.len()
    }
}

/// Label for a cluster id, in first-appearance order: "spk00", "spk01", ...
pub fn cluster_label(id: usize) -> String {
    format!("spk{id:02}")
}

/// Plain agglomerative clustering on a similarity matrix.
///
/// Repeatedly merges the pair of clusters with the highest linkage
/// similarity until that best similarity falls below `stop_thr`. Ties break
/// toward the lexicographically lowest index pair. Returns per-segment
/// cluster ids numbered by first appearance.
#[allow(clippy::needless_range_loop)] // the pairwise scans index two arrays in lockstep
pub fn ahc_cluster(sim: &SimilarityMatrix, stop_thr: f64, linkage: Linkage) -> Vec<usize> {
    let n = sim.n();
    if n == 0 {
        return Vec::new();
    }

    // Slot state: a merged cluster lives in the lower slot of the pair, so a
    // slot id is the smallest original segment index in the cluster.
    let mut active = vec![true; n];
    let mut size = vec![1usize; n];
    // For average linkage `score` holds pairwise-similarity sums; for
    // single/complete it holds the linkage value itself.
    let mut score = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            score[i * n + j] = sim.get(i, j);
        }
    }
    let link_value = |score: &[f64], size: &[usize], i: usize, j: usize| -> f64 {
        match linkage {
            Linkage::Average => score[i * n + j] / (size[i] * size[j]) as f64,
            _ => score[i * n + j],
        }
    };

    let mut parent: Vec<usize> = (0..n).collect();
    let mut remaining = n;
    while remaining > 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in (i + 1)..n {
                if !active[j] {
                    continue;
                }
                let v = link_value(&score, &size, i, j);
                if best.is_none_or(|(bv, _, _)| v > bv) {
                    best = Some((v, i, j));
                }
            }
        }
        let (value, i, j) = best.expect("at least two active clusters");
        if value < stop_thr {
            break;
        }
        for k in 0..n {
            if !active[k] || k == i || k == j {
                continue;
            }
            let merged = match linkage {
                Linkage::Average => score[i * n + k] + score[j * n + k],
                Linkage::Complete => score[i * n + k].min(score[j * n + k]),
                Linkage::Single => score[i * n + k].max(score[j * n + k]),
            };
            score[i * n + k] = merged;
            score[k * n + i] = merged;
        }
        size[i] += size[j];
        active[j] = false;
        parent[j] = i;
        remaining -= 1;
    }

    // Resolve slot ownership through parent pointers on dead slots.
    let mut assignments = Vec::with_capacity(n);
    for seg in 0..n {
        let mut slot = seg;
        while !active[slot] {
            slot = parent[slot];
        }
        assignments.push(slot);
    }
    // Renumber by first appearance in segment order.
    let mut renumber: BTreeMap<usize, usize> = BTreeMap::new();
    assignments
        .iter()
        .map(|&slot| {
            let next = renumber.len();
            *renumber.entry(slot).or_insert(next)
        })
        .collect()
}

/// Reassigns short clusters to their closest long cluster by centroid
/// similarity, or keeps them as new speakers below `speaker_thr`.
///
/// Long-cluster centroids are frozen for the whole pass: every decision uses
/// the pre-pass centroids. Short clusters are processed in descending
/// duration order.
pub fn reassign_short_clusters(
    state: &ClusterState,
    seq: &EmbeddingSequence,
    cfg: &AhcConfig,
) -> ClusterState {
    let k = state.n_clusters();
    let long_ids: Vec<usize> = (0..k)
        .filter(|&c| state.durations[c] >= cfg.long_cluster_min)
        .collect();
    let short_ids: Vec<usize> = (0..k)
        .filter(|&c| state.durations[c] < cfg.long_cluster_min)
        .collect();
    if long_ids.is_empty() || short_ids.is_empty() {
        return state.clone();
    }

    let mut shorts = short_ids;
    shorts.sort_by_key(|&c| (std::cmp::Reverse(state.durations[c]), c));

    let mut target: Vec<usize> = (0..k).collect();
    for &s in &shorts {
        let mut best: Option<(f64, usize)> = None;
        for &l in &long_ids {
            let cos = centroid_cosine(&state.centroids[s], &state.centroids[l]);
            if best.is_none_or(|(bv, _)| cos > bv) {
                best = Some((cos, l));
            }
        }
        let (cos, l) = best.expect("at least one long cluster");
        if cos >= cfg.speaker_thr {
            target[s] = l;
        }
    }

    let raw: Vec<usize> = state.assignments.iter().map(|&c| target[c]).collect();
    ClusterState::from_assignments(seq, &raw)
}

fn centroid_cosine(a: &[f32], b: &[f32]) -> f64 {
    clamp_cosine(a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum())
}

/// Adds second-speaker labels on overlapped speech regions.
///
/// For each OSD interval the local embedding is the normalized mean of
/// segment vectors overlapping it; cluster centroids are ranked by cosine
/// against it and the interval is emitted under the top two labels. The
/// existing label is kept when it ranks in the top two (the other one is
/// added); otherwise the top two replace it on the overlap region only.
///
/// `diar` must carry one label per time point, with labels produced by
/// [`cluster_label`] over `state`'s cluster ids.
pub fn assign_overlaps(
    diar: &Annotation,
    osd: &Timeline,
    seq: &EmbeddingSequence,
    state: &ClusterState,
) -> Annotation {
    if osd.is_empty() || state.n_clusters() < 2 || diar.is_empty() {
        return diar.clone();
    }

    let support = diar.support();
    let clipped = osd.intersection(&support);
    if clipped != *osd {
        log::warn!(
            "{}: OSD regions extend outside diarized speech; clipped to support",
            diar.recording_id()
        );
    }

    let label_timelines = diar.label_timelines();
    let mut additions: BTreeMap<String, Vec<Interval>> = BTreeMap::new();
    let mut removals: BTreeMap<String, Vec<Interval>> = BTreeMap::new();

    for osd_iv in clipped.iter() {
        // Local speaker content of the overlap region.
        let mut sum = vec![0.0f64; seq.dim()];
        let mut found = false;
        for entry in seq.entries() {
            if entry.interval().overlaps(osd_iv) {
                for (acc, &x) in sum.iter_mut().zip(entry.vector()) {
                    *acc += x as f64;
                }
                found = true;
            }
        }
        let Some(local) = found.then(|| normalize_f64(&sum)).flatten() else {
            log::warn!(
                "{}: no usable segment embeddings for OSD region {:?}; skipped",
                diar.recording_id(),
                osd_iv
            );
            continue;
        };

        let mut ranked: Vec<(f64, usize)> = state
            .centroids
            .iter()
            .enumerate()
            .map(|(c, centroid)| {
                let cos = clamp_cosine(
                    centroid
                        .iter()
                        .zip(&local)
                        .map(|(&x, &y)| x as f64 * y)
                        .sum(),
                );
                (cos, c)
            })
            .collect();
        ranked.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let top = [cluster_label(ranked[0].1), cluster_label(ranked[1].1)];

        // Split at diarization boundaries so each piece has one primary.
        for piece in split_at_label_boundaries(*osd_iv, &label_timelines) {
            if piece.is_empty() {
                continue;
            }
            let primary = label_timelines
                .iter()
                .find(|(_, tl)| tl.contains(piece.onset()))
                .map(|(label, _)| label.clone());
            let Some(primary) = primary else {
                continue;
            };
            if top.contains(&primary) {
                let second = if top[0] == primary { &top[1] } else { &top[0] };
                additions.entry(second.clone()).or_default().push(piece);
            } else {
                removals.entry(primary).or_default().push(piece);
                additions.entry(top[0].clone()).or_default().push(piece);
                additions.entry(top[1].clone()).or_default().push(piece);
            }
        }
    }

    if additions.is_empty() && removals.is_empty() {
        return diar.clone();
    }

    let mut rebuilt: Vec<(String, Timeline)> = Vec::new();
    let mut labels: Vec<String> = label_timelines.keys().cloned().collect();
    for label in additions.keys() {
        if !label_timelines.contains_key(label) {
            labels.push(label.clone());
        }
    }
    for label in labels {
        let mut tl = label_timelines.get(&label).cloned().unwrap_or_default();
        if let Some(sub) = removals.get(&label) {
            tl = tl.difference(&Timeline::from_intervals(sub.iter().copied()));
        }
        if let Some(add) = additions.get(&label) {
            tl = tl.union(&Timeline::from_intervals(add.iter().copied()));
        }
        if !tl.is_empty() {
            rebuilt.push((label, tl));
        }
    }
    Annotation::from_label_timelines(diar.recording_id(), rebuilt)
        .expect("labels and intervals are valid by construction")
}

fn split_at_label_boundaries(
    span: Interval,
    label_timelines: &BTreeMap<String, Timeline>,
) -> Vec<Interval> {
    let mut bounds = vec![span.onset(), span.end()];
    for tl in label_timelines.values() {
        for iv in tl.iter() {
            for b in [iv.onset(), iv.end()] {
                if b > span.onset() && b < span.end() {
                    bounds.push(b);
                }
            }
        }
    }
    bounds.sort_unstable();
    bounds.dedup();
    bounds
        .windows(2)
        .map(|w| Interval::from_range(w[0], w[1]))
        .collect()
}

/// Full clustering-based diarization of one recording.
///
/// Runs consecutive-segment merging, similarity clustering, short-cluster
/// reassignment, renders cluster ids to "spkNN" labels covering the speech
/// timeline exactly, and assigns overlap regions to the two closest
/// speakers.
pub fn diarize_ahc(
    speech: &Timeline,
    seq: &EmbeddingSequence,
    osd: &Timeline,
    cfg: &AhcConfig,
) -> Result<Annotation> {
    cfg.validate()?;
    let recording_id = seq.recording_id().to_string();
    if speech.is_empty() {
        return Ok(Annotation::new(recording_id));
    }
    if seq.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{recording_id}: no embeddings for non-empty speech"
        )));
    }

    let sim = cosine_matrix(seq)?;
    let merged = merge_consecutive(seq, &sim, cfg.segment_thr, cfg.merge_max_gap)?;
    let sim = cosine_matrix(&merged)?;
    let raw = ahc_cluster(&sim, cfg.stop_thr, cfg.linkage);
    let state = ClusterState::from_assignments(&merged, &raw);
    let state = reassign_short_clusters(&state, &merged, cfg);
    let diar = render_segments(&recording_id, speech, &merged, &state)?;
    Ok(assign_overlaps(&diar, osd, &merged, &state))
}

/// Converts labeled segments into an annotation that covers `speech`
/// exactly: within each speech interval, time is cut at the midpoint between
/// consecutive segments and each piece takes its segment's cluster label.
fn render_segments(
    recording_id: &str,
    speech: &Timeline,
    seq: &EmbeddingSequence,
    state: &ClusterState,
) -> Result<Annotation> {
    let entries = seq.entries();
    let mut label_intervals: BTreeMap<String, Vec<Interval>> = BTreeMap::new();

    for speech_iv in speech.iter() {
        let covering: Vec<usize> = (0..entries.len())
            .filter(|&i| entries[i].interval().overlaps(speech_iv))
            .collect();
        let owners: Vec<usize> = if covering.is_empty() {
            // No segment touches this interval: hand it to the nearest one.
            let mid = speech_iv.midpoint();
            let nearest = (0..entries.len())
                .min_by_key(|&i| {
                    let d = (entries[i].interval().midpoint() - mid).abs();
                    (d, entries[i].interval().onset())
                })
                .expect("sequence is non-empty");
            vec![nearest]
        } else {
            covering
        };

        // Cut points between consecutive owners, clamped and monotone.
        let mut cuts = Vec::with_capacity(owners.len() + 1);
        cuts.push(speech_iv.onset());
        for w in owners.windows(2) {
            let a = entries[w[0]].interval();
            let b = entries[w[1]].interval();
            let mid = Ticks::new((a.end().get() + b.onset().get()) / 2)
                .max(speech_iv.onset())
                .min(speech_iv.end());
            cuts.push(mid.max(*cuts.last().expect("cuts is non-empty")));
        }
        cuts.push(speech_iv.end());

        for (idx, &seg) in owners.iter().enumerate() {
            let piece = Interval::from_range(cuts[idx], cuts[idx + 1]);
            if piece.is_empty() {
                continue;
            }
            let label = cluster_label(state.assignments[seg]);
            label_intervals.entry(label).or_default().push(piece);
        }
    }

    Annotation::from_label_timelines(
        recording_id,
        label_intervals
            .into_iter()
            .map(|(label, ivs)| (label, Timeline::from_intervals(ivs))),
    )
}
