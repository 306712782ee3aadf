//! RTTM reading and writing.
//!
//! Only `SPEAKER` records are handled. Times are written with fixed
//! 3-decimal precision and single-space separation, so output is bit-exact:
//!
//! ```text
//! SPEAKER <recording_id> 1 <onset> <duration> <NA> <NA> <speaker> <NA> <NA>
//! ```
//!
//! The channel field is always written as `1` and ignored on read. Lines
//! starting with `;;` are comments.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::timeline::{Annotation, Ticks, Turn};

/// Parses RTTM text into one [`Annotation`] per recording id, in order of
/// first appearance.
pub fn parse(text: &str) -> Result<Vec<Annotation>> {
    let mut order: Vec<String> = Vec::new();
    let mut turns: HashMap<String, Vec<Turn>> = HashMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with(";;") {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 9 {
            return Err(Error::parse(
                line_no,
                format!("expected at least 9 fields, found {}", fields.len()),
            ));
        }
        if fields[0] != "SPEAKER" {
            return Err(Error::parse(
                line_no,
                format!("unsupported record type {:?}", fields[0]),
            ));
        }
        let recording = fields[1];
        let onset = parse_time(fields[3], "onset", line_no)?;
        let duration = parse_time(fields[4], "duration", line_no)?;
        if !duration.is_positive() {
            return Err(Error::parse(
                line_no,
                format!("duration must be positive, got {}", fields[4]),
            ));
        }
        if onset.is_negative() {
            return Err(Error::parse(
                line_no,
                format!("onset must be non-negative, got {}", fields[3]),
            ));
        }
        let speaker = fields[7];
        let turn = Turn::new(recording, speaker, onset, duration)
            .map_err(|e| Error::parse(line_no, e.to_string()))?;
        if !turns.contains_key(recording) {
            order.push(recording.to_string());
        }
        turns.entry(recording.to_string()).or_default().push(turn);
    }

    order
        .into_iter()
        .map(|rec| {
            let recording_turns = turns.remove(&rec).unwrap_or_default();
            Annotation::with_turns(rec, recording_turns)
        })
        .collect()
}

/// Serializes annotations to RTTM text. Round-trip stable on normalized
/// annotations whose times sit on the millisecond grid.
pub fn write(annotations: &[Annotation]) -> String {
    let mut out = String::new();
    for ann in annotations {
        for turn in ann.turns() {
            writeln!(
                out,
                "SPEAKER {} 1 {} {} <NA> <NA> {} <NA> <NA>",
                turn.recording_id(),
                format_seconds_3dp(turn.onset()),
                format_seconds_3dp(turn.duration()),
                turn.speaker()
            )
            .expect("string write cannot fail");
        }
    }
    out
}

pub fn read_file(path: impl AsRef<Path>) -> Result<Vec<Annotation>> {
    let text = std::fs::read_to_string(path)?;
    parse(&text)
}

pub fn write_file(path: impl AsRef<Path>, annotations: &[Annotation]) -> Result<()> {
    std::fs::write(path, write(annotations))?;
    Ok(())
}

fn parse_time(field: &str, what: &str, line_no: usize) -> Result<Ticks> {
    let value: f64 = field
        .parse()
        .map_err(|_| Error::parse(line_no, format!("non-numeric {what}: {field:?}")))?;
    Ticks::try_from_seconds(value).map_err(|e| Error::parse(line_no, e.to_string()))
}

/// Fixed 3-decimal rendering; ticks are rounded half-up to the millisecond.
pub fn format_seconds_3dp(t: Ticks) -> String {
    debug_assert!(!t.is_negative());
    let ms = (t.get() + 5) / 10;
    format!("{}.{:03}", ms / 1000, ms % 1000)
}
