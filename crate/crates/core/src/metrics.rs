//! Diarization error rate with optimal speaker mapping.
//!
//! Scoring follows md-eval conventions: a no-score collar is excised around
//! every reference turn boundary, the remaining time is cut into regions
//! homogeneous in active speakers, and one globally optimal one-to-one
//! speaker mapping per recording (maximum total overlap, solved exactly)
//! credits matched speaker time. All durations accumulate in integer ticks;
//! division to a rate happens once at report time.

use crate::assignment::max_weight_assignment;
use crate::error::{Error, Result};
use crate::timeline::{Annotation, Interval, Ticks, Timeline};

/// Default no-score collar: 0.25 s on each side of reference boundaries.
pub const DEFAULT_COLLAR: Ticks = Ticks::from_millis(250);

/// Scoring controls.
#[derive(Clone, Debug)]
pub struct ScoringOptions {
    /// Half-width of the no-score region around each reference turn
    /// boundary.
    pub collar: Ticks,
    /// When false, regions where the reference has two or more active
    /// speakers are excluded from scoring.
    pub score_overlaps: bool,
    /// Optional evaluation map restricting scored time.
    pub uem: Option<Timeline>,
}

impl Default for ScoringOptions {
    fn default() -> Self {
        ScoringOptions {
            collar: DEFAULT_COLLAR,
            score_overlaps: true,
            uem: None,
        }
    }
}

impl ScoringOptions {
    /// Collar 0, overlaps scored, no UEM: the strictest comparison, used for
    /// ranking hypotheses against each other.
    pub fn strict() -> Self {
        ScoringOptions {
            collar: Ticks::ZERO,
            score_overlaps: true,
            uem: None,
        }
    }
}

/// Error components of one scoring run, in ticks of speaker time.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct DerBreakdown {
    miss: Ticks,
    false_alarm: Ticks,
    confusion: Ticks,
    total_reference: Ticks,
}

impl DerBreakdown {
    pub fn miss_ticks(&self) -> Ticks {
        self.miss
    }

    pub fn false_alarm_ticks(&self) -> Ticks {
        self.false_alarm
    }

    pub fn confusion_ticks(&self) -> Ticks {
        self.confusion
    }

    pub fn total_reference_ticks(&self) -> Ticks {
        self.total_reference
    }

    pub fn error_ticks(&self) -> Ticks {
        self.miss + self.false_alarm + self.confusion
    }

    /// Missed speaker time in seconds.
    pub fn miss(&self) -> f64 {
        self.miss.seconds()
    }

    pub fn false_alarm(&self) -> f64 {
        self.false_alarm.seconds()
    }

    pub fn confusion(&self) -> f64 {
        self.confusion.seconds()
    }

    pub fn total_reference(&self) -> f64 {
        self.total_reference.seconds()
    }

    /// (miss + false alarm + confusion) / total reference speaker time.
    pub fn der(&self) -> f64 {
        debug_assert!(self.total_reference.is_positive());
        self.error_ticks().get() as f64 / self.total_reference.get() as f64
    }

    fn accumulate(&mut self, other: &DerBreakdown) {
        self.miss += other.miss;
        self.false_alarm += other.false_alarm;
        self.confusion += other.confusion;
        self.total_reference += other.total_reference;
    }
}

impl std::ops::AddAssign<&DerBreakdown> for DerBreakdown {
    fn add_assign(&mut self, other: &DerBreakdown) {
        self.accumulate(other);
    }
}

/// Scores one hypothesis against one reference.
///
/// Errors when the recordings differ or when no reference speaker time
/// remains inside the scored regions (the rate is undefined).
pub fn der(
    reference: &Annotation,
    hypothesis: &Annotation,
    opts: &ScoringOptions,
) -> Result<DerBreakdown> {
    if reference.recording_id() != hypothesis.recording_id() {
        return Err(Error::InvalidArgument(format!(
            "cannot score {:?} against {:?}",
            hypothesis.recording_id(),
            reference.recording_id()
        )));
    }
    let breakdown = components(reference, hypothesis, opts);
    if !breakdown.total_reference.is_positive() {
        return Err(Error::UndefinedRate(format!(
            "no scored reference speech for {:?}",
            reference.recording_id()
        )));
    }
    Ok(breakdown)
}

/// Corpus-level DER: component durations are summed across recordings and
/// divided once (time-weighted, not a mean of per-file rates).
pub fn der_corpus(
    pairs: &[(&Annotation, &Annotation)],
    opts: &ScoringOptions,
) -> Result<DerBreakdown> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("no recording pairs to score".into()));
    }
    let mut total = DerBreakdown::default();
    for (reference, hypothesis) in pairs {
        if reference.recording_id() != hypothesis.recording_id() {
            return Err(Error::InvalidArgument(format!(
                "cannot score {:?} against {:?}",
                hypothesis.recording_id(),
                reference.recording_id()
            )));
        }
        total.accumulate(&components(reference, hypothesis, opts));
    }
    if !total.total_reference.is_positive() {
        return Err(Error::UndefinedRate(
            "no scored reference speech in corpus".into(),
        ));
    }
    Ok(total)
}

/// Pairwise DER among hypotheses: entry (i, j) scores hypothesis j against
/// hypothesis i as reference, collar 0, overlaps scored.
pub fn pairwise_der_matrix(hypotheses: &[Annotation]) -> Result<Vec<Vec<f64>>> {
    if hypotheses.len() < 2 {
        return Err(Error::InvalidArgument(
            "pairwise DER needs at least two hypotheses".into(),
        ));
    }
    let opts = ScoringOptions::strict();
    let n = hypotheses.len();
    let mut matrix = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                matrix[i][j] = der(&hypotheses[i], &hypotheses[j], &opts)?.der();
            }
        }
    }
    Ok(matrix)
}

/// Raw component computation. Unlike [`der`] this never fails:
/// total_reference may come back zero (nothing scorable), which callers
/// aggregating across recordings may still want to fold in.
pub fn components(
    reference: &Annotation,
    hypothesis: &Annotation,
    opts: &ScoringOptions,
) -> DerBreakdown {
    let ref_timelines: Vec<Timeline> = reference.label_timelines().into_values().collect();
    let hyp_timelines: Vec<Timeline> = hypothesis.label_timelines().into_values().collect();

    let regions = scored_regions(reference, &ref_timelines, &hyp_timelines, opts);

    // Optimal speaker mapping over the whole scored timeline.
    let mut overlap = vec![vec![0i64; hyp_timelines.len()]; ref_timelines.len()];
    for region in &regions {
        for &r in &region.active_ref {
            for &h in &region.active_hyp {
                overlap[r][h] += region.span.duration().get();
            }
        }
    }
    let mapping = if ref_timelines.is_empty() {
        Vec::new()
    } else {
        max_weight_assignment(&overlap)
    };

    let mut breakdown = DerBreakdown::default();
    for region in &regions {
        let dur = region.span.duration();
        let r = region.active_ref.len() as i64;
        let h = region.active_hyp.len() as i64;
        let matched = region
            .active_ref
            .iter()
            .filter(|&&ri| {
                mapping[ri].is_some_and(|hj| region.active_hyp.contains(&hj))
            })
            .count() as i64;
        breakdown.total_reference += dur * r;
        breakdown.miss += dur * (r - h).max(0);
        breakdown.false_alarm += dur * (h - r).max(0);
        breakdown.confusion += dur * (r.min(h) - matched);
    }
    breakdown
}

struct Region {
    span: Interval,
    active_ref: Vec<usize>,
    active_hyp: Vec<usize>,
}

fn scored_regions(
    reference: &Annotation,
    ref_timelines: &[Timeline],
    hyp_timelines: &[Timeline],
    opts: &ScoringOptions,
) -> Vec<Region> {
    // Scope: UEM when present, otherwise everything either side annotated.
    let mut scope = match &opts.uem {
        Some(uem) => uem.clone(),
        None => {
            let mut union = Timeline::new();
            for tl in ref_timelines.iter().chain(hyp_timelines) {
                union = union.union(tl);
            }
            union
        }
    };

    if opts.collar.is_positive() {
        let mut zones = Vec::with_capacity(2 * reference.turns().len());
        for turn in reference.turns() {
            for boundary in [turn.onset(), turn.end()] {
                let start = (boundary - opts.collar).max(Ticks::ZERO);
                zones.push(Interval::from_range(start, boundary + opts.collar));
            }
        }
        scope = scope.difference(&Timeline::from_intervals(zones));
    }

    if !opts.score_overlaps {
        scope = scope.difference(&reference.overlap_regions());
    }

    // Cut into regions homogeneous in active speakers on both sides.
    let mut bounds: Vec<Ticks> = Vec::new();
    for tl in ref_timelines.iter().chain(hyp_timelines) {
        for iv in tl.iter() {
            bounds.push(iv.onset());
            bounds.push(iv.end());
        }
    }
    for iv in scope.iter() {
        bounds.push(iv.onset());
        bounds.push(iv.end());
    }
    bounds.sort_unstable();
    bounds.dedup();

    let mut regions = Vec::new();
    for w in bounds.windows(2) {
        let (start, end) = (w[0], w[1]);
        if !scope.contains(start) {
            continue;
        }
        let active_ref: Vec<usize> = ref_timelines
            .iter()
            .enumerate()
            .filter(|(_, tl)| tl.contains(start))
            .map(|(i, _)| i)
            .collect();
        let active_hyp: Vec<usize> = hyp_timelines
            .iter()
            .enumerate()
            .filter(|(_, tl)| tl.contains(start))
            .map(|(i, _)| i)
            .collect();
        if active_ref.is_empty() && active_hyp.is_empty() {
            continue;
        }
        regions.push(Region {
            span: Interval::from_range(start, end),
            active_ref,
            active_hyp,
        });
    }
    regions
}
