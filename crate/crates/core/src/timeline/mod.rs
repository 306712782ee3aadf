//! Core time, interval, and annotation types.
//!
//! Time is held as integer ticks at 0.1 ms resolution. All interval
//! arithmetic in the crate is exact; conversion to and from seconds happens
//! only at I/O boundaries. [`Turn`] is one labeled interval, [`Annotation`]
//! a normalized set of turns for one recording, and [`Timeline`] an
//! unlabeled set of disjoint intervals (speech regions, scoring scopes).

pub mod rttm;

use std::collections::BTreeMap;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};

/// A point or span of time in 0.1 ms ticks.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Ticks(i64);

impl Ticks {
    pub const ZERO: Ticks = Ticks(0);
    /// Ticks per second: 0.1 ms resolution.
    pub const PER_SECOND: i64 = 10_000;

    pub const fn new(raw: i64) -> Ticks {
        Ticks(raw)
    }

    pub const fn get(self) -> i64 {
        self.0
    }

    pub const fn from_millis(ms: i64) -> Ticks {
        Ticks(ms * 10)
    }

    /// Rounds to the nearest tick. Panics on non-finite input.
    pub fn from_seconds(secs: f64) -> Ticks {
        Self::try_from_seconds(secs).expect("non-finite seconds value")
    }

    pub fn try_from_seconds(secs: f64) -> Result<Ticks> {
        if !secs.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "time value is not finite: {secs}"
            )));
        }
        let raw = secs * Self::PER_SECOND as f64;
        if raw.abs() > i64::MAX as f64 / 2.0 {
            return Err(Error::InvalidArgument(format!(
                "time value out of range: {secs}"
            )));
        }
        Ok(Ticks(raw.round() as i64))
    }

    pub fn seconds(self) -> f64 {
        self.0 as f64 / Self::PER_SECOND as f64
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub const fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub const fn is_negative(self) -> bool {
        self.0 < 0
    }

    pub fn abs(self) -> Ticks {
        Ticks(self.0.abs())
    }

    /// Largest multiple of `step` that is `<= self` (requires `step > 0`).
    pub fn floor_to(self, step: Ticks) -> Ticks {
        debug_assert!(step.is_positive());
        Ticks(self.0.div_euclid(step.0) * step.0)
    }

    /// Smallest multiple of `step` that is `>= self` (requires `step > 0`).
    pub fn ceil_to(self, step: Ticks) -> Ticks {
        debug_assert!(step.is_positive());
        Ticks(-(-self.0).div_euclid(step.0) * step.0)
    }

    /// Floor division by a positive step, as an index.
    pub fn div_floor(self, step: Ticks) -> i64 {
        debug_assert!(step.is_positive());
        self.0.div_euclid(step.0)
    }

    /// Ceiling division by a positive step, as an index.
    pub fn div_ceil(self, step: Ticks) -> i64 {
        debug_assert!(step.is_positive());
        -(-self.0).div_euclid(step.0)
    }
}

impl fmt::Debug for Ticks {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ticks({})", self.0)
    }
}

impl fmt::Display for Ticks {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}s", self.seconds())
    }
}

impl Add for Ticks {
    type Output = Ticks;
    fn add(self, rhs: Ticks) -> Ticks {
        Ticks(self.0 + rhs.0)
    }
}

impl Sub for Ticks {
    type Output = Ticks;
    fn sub(self, rhs: Ticks) -> Ticks {
        Ticks(self.0 - rhs.0)
    }
}

impl AddAssign for Ticks {
    fn add_assign(&mut self, rhs: Ticks) {
        self.0 += rhs.0;
    }
}

impl SubAssign for Ticks {
    fn sub_assign(&mut self, rhs: Ticks) {
        self.0 -= rhs.0;
    }
}

impl Mul<i64> for Ticks {
    type Output = Ticks;
    fn mul(self, rhs: i64) -> Ticks {
        Ticks(self.0 * rhs)
    }
}

impl Div<i64> for Ticks {
    type Output = Ticks;
    fn div(self, rhs: i64) -> Ticks {
        Ticks(self.0 / rhs)
    }
}

impl Neg for Ticks {
    type Output = Ticks;
    fn neg(self) -> Ticks {
        Ticks(-self.0)
    }
}

impl Sum for Ticks {
    fn sum<I: Iterator<Item = Ticks>>(iter: I) -> Ticks {
        iter.fold(Ticks::ZERO, |a, b| a + b)
    }
}

/// A half-open time span `[onset, onset + duration)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interval {
    onset: Ticks,
    duration: Ticks,
}

impl Interval {
    pub fn new(onset: Ticks, duration: Ticks) -> Interval {
        debug_assert!(!duration.is_negative(), "negative interval duration");
        Interval { onset, duration }
    }

    pub fn from_range(start: Ticks, end: Ticks) -> Interval {
        debug_assert!(end >= start, "interval end before start");
        Interval {
            onset: start,
            duration: end - start,
        }
    }

    pub fn onset(&self) -> Ticks {
        self.onset
    }

    pub fn duration(&self) -> Ticks {
        self.duration
    }

    pub fn end(&self) -> Ticks {
        self.onset + self.duration
    }

    pub fn is_empty(&self) -> bool {
        self.duration.is_zero()
    }

    pub fn midpoint(&self) -> Ticks {
        Ticks((self.onset.get() + self.end().get()) / 2)
    }

    pub fn contains(&self, t: Ticks) -> bool {
        t >= self.onset && t < self.end()
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.onset < other.end() && other.onset < self.end()
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let start = self.onset.max(other.onset);
        let end = self.end().min(other.end());
        (end > start).then(|| Interval::from_range(start, end))
    }

    /// Smallest interval covering both.
    pub fn hull(&self, other: &Interval) -> Interval {
        let start = self.onset.min(other.onset);
        let end = self.end().max(other.end());
        Interval::from_range(start, end)
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.4}, {:.4})", self.onset.seconds(), self.end().seconds())
    }
}

/// An ordered set of disjoint, non-touching intervals.
///
/// Canonical form is maintained by every constructor and operation:
/// intervals are sorted, strictly positive in duration, and merged whenever
/// they overlap or touch, so equality is structural.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Timeline {
    intervals: Vec<Interval>,
}

impl Timeline {
    pub fn new() -> Timeline {
        Timeline::default()
    }

    pub fn from_intervals<I: IntoIterator<Item = Interval>>(intervals: I) -> Timeline {
        let mut v: Vec<Interval> = intervals.into_iter().filter(|iv| !iv.is_empty()).collect();
        v.sort_by_key(|iv| (iv.onset, iv.duration));
        let mut merged: Vec<Interval> = Vec::with_capacity(v.len());
        for iv in v {
            match merged.last_mut() {
                Some(last) if iv.onset <= last.end() => {
                    *last = Interval::from_range(last.onset, last.end().max(iv.end()));
                }
                _ => merged.push(iv),
            }
        }
        Timeline { intervals: merged }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn iter(&self) -> impl Iterator<Item = &Interval> {
        self.intervals.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn total_duration(&self) -> Ticks {
        self.intervals.iter().map(|iv| iv.duration).sum()
    }

    /// End of the last interval, or zero when empty.
    pub fn extent_end(&self) -> Ticks {
        self.intervals.last().map_or(Ticks::ZERO, |iv| iv.end())
    }

    pub fn extent(&self) -> Option<Interval> {
        match (self.intervals.first(), self.intervals.last()) {
            (Some(a), Some(b)) => Some(Interval::from_range(a.onset, b.end())),
            _ => None,
        }
    }

    pub fn contains(&self, t: Ticks) -> bool {
        let idx = self.intervals.partition_point(|iv| iv.onset <= t);
        idx > 0 && self.intervals[idx - 1].contains(t)
    }

    pub fn union(&self, other: &Timeline) -> Timeline {
        Timeline::from_intervals(self.iter().chain(other.iter()).copied())
    }

    pub fn intersection(&self, other: &Timeline) -> Timeline {
        self.boolean_op(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &Timeline) -> Timeline {
        self.boolean_op(other, |a, b| a && !b)
    }

    /// Gaps between consecutive intervals (not before the first or after the
    /// last).
    pub fn gaps(&self) -> Timeline {
        let intervals = self
            .intervals
            .windows(2)
            .map(|w| Interval::from_range(w[0].end(), w[1].onset))
            .collect::<Vec<_>>();
        Timeline { intervals }
    }

    fn boolean_op(&self, other: &Timeline, keep: impl Fn(bool, bool) -> bool) -> Timeline {
        let mut bounds: Vec<Ticks> = Vec::with_capacity(2 * (self.len() + other.len()));
        for iv in self.iter().chain(other.iter()) {
            bounds.push(iv.onset);
            bounds.push(iv.end());
        }
        bounds.sort_unstable();
        bounds.dedup();
        let mut out = Vec::new();
        for w in bounds.windows(2) {
            if keep(self.contains(w[0]), other.contains(w[0])) {
                out.push(Interval::from_range(w[0], w[1]));
            }
        }
        Timeline::from_intervals(out)
    }
}

impl FromIterator<Interval> for Timeline {
    fn from_iter<I: IntoIterator<Item = Interval>>(iter: I) -> Timeline {
        Timeline::from_intervals(iter)
    }
}

fn check_token(value: &str, what: &str) -> Result<()> {
    if value.is_empty() {
        return Err(Error::InvalidArgument(format!("{what} must not be empty")));
    }
    if value.chars().any(char::is_whitespace) {
        return Err(Error::InvalidArgument(format!(
            "{what} must not contain whitespace: {value:?}"
        )));
    }
    Ok(())
}

/// One speaker-attributed time span: the atom of RTTM I/O.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Turn {
    recording_id: String,
    speaker: String,
    onset: Ticks,
    duration: Ticks,
}

impl Turn {
    pub fn new(
        recording_id: impl Into<String>,
        speaker: impl Into<String>,
        onset: Ticks,
        duration: Ticks,
    ) -> Result<Turn> {
        let recording_id = recording_id.into();
        let speaker = speaker.into();
        check_token(&recording_id, "recording id")?;
        check_token(&speaker, "speaker label")?;
        if onset.is_negative() {
            return Err(Error::InvalidArgument(format!(
                "turn onset must be non-negative, got {onset}"
            )));
        }
        if !duration.is_positive() {
            return Err(Error::InvalidArgument(format!(
                "turn duration must be positive, got {duration}"
            )));
        }
        Ok(Turn {
            recording_id,
            speaker,
            onset,
            duration,
        })
    }

    pub fn recording_id(&self) -> &str {
        &self.recording_id
    }

    pub fn speaker(&self) -> &str {
        &self.speaker
    }

    pub fn onset(&self) -> Ticks {
        self.onset
    }

    pub fn duration(&self) -> Ticks {
        self.duration
    }

    pub fn end(&self) -> Ticks {
        self.onset + self.duration
    }

    pub fn interval(&self) -> Interval {
        Interval::new(self.onset, self.duration)
    }
}

/// A diarization hypothesis or reference for one recording.
///
/// Always normalized: turns are sorted by (onset, speaker) and same-speaker
/// turns that touch or overlap are merged. Turns of distinct speakers may
/// overlap freely.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Annotation {
    recording_id: String,
    turns: Vec<Turn>,
}

impl Annotation {
    /// Empty annotation. Panics on a malformed recording id; ids originating
    /// from files come through [`Turn::new`] which validates instead.
    pub fn new(recording_id: impl Into<String>) -> Annotation {
        let recording_id = recording_id.into();
        check_token(&recording_id, "recording id").expect("malformed recording id");
        Annotation {
            recording_id,
            turns: Vec::new(),
        }
    }

    pub fn with_turns(recording_id: impl Into<String>, turns: Vec<Turn>) -> Result<Annotation> {
        let mut ann = Annotation::new(recording_id);
        for t in &turns {
            if t.recording_id != ann.recording_id {
                return Err(Error::InvalidArgument(format!(
                    "turn recording id {:?} does not match annotation {:?}",
                    t.recording_id, ann.recording_id
                )));
            }
        }
        ann.turns = turns;
        ann.normalize();
        Ok(ann)
    }

    /// Builds an annotation from per-speaker timelines.
    pub fn from_label_timelines<I, S>(recording_id: impl Into<String>, labels: I) -> Result<Annotation>
    where
        I: IntoIterator<Item = (S, Timeline)>,
        S: Into<String>,
    {
        let recording_id = recording_id.into();
        let mut turns = Vec::new();
        for (label, timeline) in labels {
            let label = label.into();
            for iv in timeline.iter() {
                turns.push(Turn::new(&recording_id, &label, iv.onset(), iv.duration())?);
            }
        }
        Annotation::with_turns(recording_id, turns)
    }

    pub fn recording_id(&self) -> &str {
        &self.recording_id
    }

    pub fn turns(&self) -> &[Turn] {
        &self.turns
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    pub fn push(&mut self, turn: Turn) -> Result<()> {
        if turn.recording_id != self.recording_id {
            return Err(Error::InvalidArgument(format!(
                "turn recording id {:?} does not match annotation {:?}",
                turn.recording_id, self.recording_id
            )));
        }
        self.turns.push(turn);
        self.normalize();
        Ok(())
    }

    /// Distinct speaker labels, sorted.
    pub fn speakers(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self.turns.iter().map(|t| t.speaker.as_str()).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn speaker_timeline(&self, speaker: &str) -> Timeline {
        Timeline::from_intervals(
            self.turns
                .iter()
                .filter(|t| t.speaker == speaker)
                .map(Turn::interval),
        )
    }

    /// Per-speaker timelines, keyed and ordered by label.
    pub fn label_timelines(&self) -> BTreeMap<String, Timeline> {
        let mut map: BTreeMap<String, Vec<Interval>> = BTreeMap::new();
        for t in &self.turns {
            map.entry(t.speaker.clone()).or_default().push(t.interval());
        }
        map.into_iter()
            .map(|(k, v)| (k, Timeline::from_intervals(v)))
            .collect()
    }

    /// Union of all turn intervals: the annotated speech regions.
    pub fn support(&self) -> Timeline {
        Timeline::from_intervals(self.turns.iter().map(Turn::interval))
    }

    /// Regions where at least two distinct speakers are active.
    pub fn overlap_regions(&self) -> Timeline {
        let timelines: Vec<Timeline> = self.label_timelines().into_values().collect();
        regions_with_min_coverage(&timelines, 2)
    }

    fn normalize(&mut self) {
        let mut by_speaker: BTreeMap<String, Vec<Interval>> = BTreeMap::new();
        for t in &self.turns {
            by_speaker
                .entry(t.speaker.clone())
                .or_default()
                .push(t.interval());
        }
        let mut turns = Vec::with_capacity(self.turns.len());
        for (speaker, intervals) in by_speaker {
            for iv in Timeline::from_intervals(intervals).iter() {
                turns.push(Turn {
                    recording_id: self.recording_id.clone(),
                    speaker: speaker.clone(),
                    onset: iv.onset(),
                    duration: iv.duration(),
                });
            }
        }
        turns.sort_by(|a, b| (a.onset, &a.speaker).cmp(&(b.onset, &b.speaker)));
        self.turns = turns;
    }
}

/// Regions covered by at least `min_count` of the given timelines.
pub fn regions_with_min_coverage(timelines: &[Timeline], min_count: usize) -> Timeline {
    let mut bounds: Vec<Ticks> = Vec::new();
    for tl in timelines {
        for iv in tl.iter() {
            bounds.push(iv.onset());
            bounds.push(iv.end());
        }
    }
    bounds.sort_unstable();
    bounds.dedup();
    let mut out = Vec::new();
    for w in bounds.windows(2) {
        let covered = timelines.iter().filter(|tl| tl.contains(w[0])).count();
        if covered >= min_count {
            out.push(Interval::from_range(w[0], w[1]));
        }
    }
    Timeline::from_intervals(out)
}
