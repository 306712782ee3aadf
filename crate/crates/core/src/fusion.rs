//! Overlap-aware fusion of diarization hypotheses.
//!
//! Hypothesis labels are first mapped onto a common namespace (the heaviest
//! hypothesis defines it; each further hypothesis is matched by optimal
//! assignment on pairwise overlap duration), then every region votes: labels
//! accumulate the weights of hypotheses asserting them and the top K labels
//! win, where K is the round-half-up weighted mean of the hypotheses'
//! speaker counts.

use std::collections::BTreeMap;

use crate::assignment::max_weight_assignment;
use crate::error::{Error, Result};
use crate::metrics::pairwise_der_matrix;
use crate::timeline::{Annotation, Interval, Ticks, Timeline};

/// Default rank-weighting exponent.
pub const DEFAULT_RANK_EXPONENT: f64 = 0.5;

/// Hypotheses over one recording with normalized positive weights.
#[derive(Clone, Debug)]
pub struct HypothesisSet {
    hypotheses: Vec<Annotation>,
    weights: Vec<f64>,
}

impl HypothesisSet {
    /// Weights default to uniform; they are normalized to sum to one.
    pub fn new(hypotheses: Vec<Annotation>, weights: Option<Vec<f64>>) -> Result<HypothesisSet> {
        let first = hypotheses
            .first()
            .ok_or_else(|| Error::InvalidArgument("need at least one hypothesis".into()))?;
        let recording_id = first.recording_id().to_string();
        for h in &hypotheses {
            if h.recording_id() != recording_id {
                return Err(Error::InvalidArgument(format!(
                    "hypotheses mix recordings {:?} and {:?}",
                    recording_id,
                    h.recording_id()
                )));
            }
        }
        let weights = match weights {
            Some(w) => {
                if w.len() != hypotheses.len() {
                    return Err(Error::InvalidArgument(format!(
                        "{} weights for {} hypotheses",
                        w.len(),
                        hypotheses.len()
                    )));
                }
                if w.iter().any(|&x| !x.is_finite() || x <= 0.0) {
                    return Err(Error::InvalidArgument(
                        "hypothesis weights must be positive and finite".into(),
                    ));
                }
                let sum: f64 = w.iter().sum();
                w.into_iter().map(|x| x / sum).collect()
            }
            None => vec![1.0 / hypotheses.len() as f64; hypotheses.len()],
        };
        Ok(HypothesisSet {
            hypotheses,
            weights,
        })
    }

    pub fn hypotheses(&self) -> &[Annotation] {
        &self.hypotheses
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn recording_id(&self) -> &str {
        self.hypotheses[0].recording_id()
    }
}

/// Per-hypothesis map from local speaker labels to the global namespace.
/// Injective within each hypothesis.
#[derive(Clone, PartialEq, Debug)]
pub struct LabelMapping {
    maps: Vec<BTreeMap<String, String>>,
}

impl LabelMapping {
    pub fn maps(&self) -> &[BTreeMap<String, String>] {
        &self.maps
    }

    pub fn global(&self, hypothesis: usize, local: &str) -> Option<&str> {
        self.maps[hypothesis].get(local).map(String::as_str)
    }
}

/// Maps every hypothesis's speakers onto a shared label namespace.
///
/// Hypotheses are processed in descending weight order; the first keeps its
/// own labels. Each later hypothesis is matched to the accumulated global
/// speakers by maximum total overlap duration (optimal assignment); speakers
/// with no positive-overlap match get fresh labels.
pub fn map_labels(set: &HypothesisSet) -> LabelMapping {
    let mut order: Vec<usize> = (0..set.hypotheses.len()).collect();
    order.sort_by(|&a, &b| {
        set.weights[b]
            .partial_cmp(&set.weights[a])
            .expect("weights are finite")
            .then(a.cmp(&b))
    });

    let mut maps = vec![BTreeMap::new(); set.hypotheses.len()];
    // Accumulated speech per global label, unioned over processed
    // hypotheses.
    let mut global: BTreeMap<String, Timeline> = BTreeMap::new();

    for (rank, &h) in order.iter().enumerate() {
        let local = set.hypotheses[h].label_timelines();
        if rank == 0 {
            for (label, tl) in local {
                maps[h].insert(label.clone(), label.clone());
                global.insert(label, tl);
            }
            continue;
        }

        let locals: Vec<(&String, &Timeline)> = local.iter().collect();
        let globals: Vec<(&String, &Timeline)> = global.iter().collect();
        let weights: Vec<Vec<i64>> = locals
            .iter()
            .map(|(_, ltl)| {
                globals
                    .iter()
                    .map(|(_, gtl)| ltl.intersection(gtl).total_duration().get())
                    .collect()
            })
            .collect();
        let assignment = max_weight_assignment(&weights);

        let mut updates: Vec<(String, Timeline)> = Vec::new();
        for (i, (label, ltl)) in locals.iter().enumerate() {
            let target = match assignment[i] {
                Some(j) => globals[j].0.clone(),
                None => fresh_label(label, &global),
            };
            maps[h].insert((*label).clone(), target.clone());
            updates.push((target, (*ltl).clone()));
        }
        for (target, ltl) in updates {
            global
                .entry(target)
                .and_modify(|tl| *tl = tl.union(&ltl))
                .or_insert(ltl);
        }
    }
    LabelMapping { maps }
}

fn fresh_label(base: &str, taken: &BTreeMap<String, Timeline>) -> String {
    if !taken.contains_key(base) {
        return base.to_string();
    }
    let mut k = 2usize;
    loop {
        let candidate = format!("{base}#{k}");
        if !taken.contains_key(&candidate) {
            return candidate;
        }
        k += 1;
    }
}

/// Rank-based weights from a pairwise DER matrix.
///
/// Hypothesis k's quality is its mean DER as a system scored against every
/// other hypothesis as reference (column mean). Ranks ascend from the best
/// mean; tied means share the averaged rank. Weight is rank^(-exponent),
/// normalized.
pub fn rank_weights(der_matrix: &[Vec<f64>], exponent: f64) -> Result<Vec<f64>> {
    let n = der_matrix.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty DER matrix".into()));
    }
    for (i, row) in der_matrix.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidArgument(format!(
                "DER matrix is not square: row {i} has {} entries for {n} rows",
                row.len()
            )));
        }
        if der_matrix[i][i] != 0.0 {
            return Err(Error::InvalidArgument(format!(
                "DER matrix diagonal entry {i} is {}, expected 0",
                der_matrix[i][i]
            )));
        }
    }
    if n == 1 {
        return Ok(vec![1.0]);
    }

    let means: Vec<f64> = (0..n)
        .map(|k| (0..n).filter(|&j| j != k).map(|j| der_matrix[j][k]).sum::<f64>() / (n - 1) as f64)
        .collect();

    // Ascending by mean; ties share the averaged (1-based) rank.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| means[a].partial_cmp(&means[b]).expect("finite DERs").then(a.cmp(&b)));
    let mut ranks = vec![0.0f64; n];
    let mut pos = 0usize;
    while pos < n {
        let mut end = pos + 1;
        while end < n && means[order[end]] == means[order[pos]] {
            end += 1;
        }
        let rank = (pos + 1 + end) as f64 / 2.0; // mean of positions pos+1 ..= end
        for &idx in &order[pos..end] {
            ranks[idx] = rank;
        }
        pos = end;
    }

    let raw: Vec<f64> = ranks.iter().map(|r| r.powf(-exponent)).collect();
    let sum: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / sum).collect())
}

/// Region-wise weighted vote over mapped hypotheses.
///
/// The timeline is cut at every turn boundary; per region each global label
/// accumulates the weights of hypotheses asserting it, the speaker count K
/// is the round-half-up weighted mean of per-hypothesis counts, and the K
/// heaviest labels win (ties break lexicographically).
pub fn vote(set: &HypothesisSet, mapping: &LabelMapping) -> Annotation {
    // Mapped per-hypothesis label timelines.
    let mapped: Vec<Vec<(String, Timeline)>> = set
        .hypotheses
        .iter()
        .enumerate()
        .map(|(h, ann)| {
            ann.label_timelines()
                .into_iter()
                .map(|(label, tl)| {
                    let global = mapping.maps[h]
                        .get(&label)
                        .cloned()
                        .unwrap_or(label);
                    (global, tl)
                })
                .collect()
        })
        .collect();

    let mut bounds: Vec<Ticks> = Vec::new();
    for labels in &mapped {
        for (_, tl) in labels {
            for iv in tl.iter() {
                bounds.push(iv.onset());
                bounds.push(iv.end());
            }
        }
    }
    bounds.sort_unstable();
    bounds.dedup();

    let mut label_intervals: BTreeMap<String, Vec<Interval>> = BTreeMap::new();
    for w in bounds.windows(2) {
        let region = Interval::from_range(w[0], w[1]);
        let mut label_weight: BTreeMap<&str, f64> = BTreeMap::new();
        let mut weighted_count = 0.0f64;
        for (h, labels) in mapped.iter().enumerate() {
            let mut count = 0usize;
            for (global, tl) in labels {
                if tl.contains(region.onset()) {
                    *label_weight.entry(global.as_str()).or_insert(0.0) += set.weights[h];
                    count += 1;
                }
            }
            weighted_count += set.weights[h] * count as f64;
        }
        let k = (weighted_count + 0.5).floor() as usize;
        if k == 0 || label_weight.is_empty() {
            continue;
        }
        let mut candidates: Vec<(&str, f64)> = label_weight.into_iter().collect();
        candidates.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .expect("weights are finite")
                .then(a.0.cmp(b.0))
        });
        for (label, _) in candidates.into_iter().take(k) {
            label_intervals
                .entry(label.to_string())
                .or_default()
                .push(region);
        }
    }

    Annotation::from_label_timelines(
        set.recording_id(),
        label_intervals
            .into_iter()
            .map(|(label, ivs)| (label, Timeline::from_intervals(ivs))),
    )
    .expect("voted labels and intervals are valid")
}

/// Full overlap-aware fusion.
///
/// Without explicit weights, hypotheses are rank-weighted from their
/// pairwise DER matrix (falling back to uniform when that is undefined,
/// e.g. an empty hypothesis); labels are then mapped onto a shared
/// namespace and regions voted.
pub fn dover_lap(
    hypotheses: &[Annotation],
    weights: Option<&[f64]>,
    rank_exponent: f64,
) -> Result<Annotation> {
    if hypotheses.is_empty() {
        return Err(Error::InvalidArgument("no hypotheses to fuse".into()));
    }
    let weights = match weights {
        Some(w) => Some(w.to_vec()),
        None if hypotheses.len() == 1 => Some(vec![1.0]),
        None => match pairwise_der_matrix(hypotheses) {
            Ok(matrix) => Some(rank_weights(&matrix, rank_exponent)?),
            Err(Error::UndefinedRate(msg)) => {
                log::debug!("pairwise DER undefined ({msg}); falling back to uniform weights");
                None
            }
            Err(other) => return Err(other),
        },
    };
    let set = HypothesisSet::new(hypotheses.to_vec(), weights)?;
    let mapping = map_labels(&set);
    Ok(vote(&set, &mapping))
}
