//! TSVAD scorer bindings: the in-process cosine scorer or an external
//! command speaking the chunk-request file contract.
//!
//! An external scorer is invoked once per chunk as
//!
//! ```text
//! <command...> <start_sec> <end_sec> <profiles_path> <embeddings_path> <resolution_sec>
//! ```
//!
//! with the profiles in PROFILES text format and the chunk's embeddings in
//! the text embedding format; it must print an extended-FRAMESCORES block
//! (one line per output frame, one column per profile) to stdout. The
//! `toy-scorer` subcommand implements this contract against the cosine
//! scorer, serving as the reference external implementation.

use diarkit::embeddings::EmbeddingSequence;
use diarkit::error::Error;
use diarkit::tsvad::{
    parse_chunk_scores, write_profiles, ChunkScores, CosineScorer, FrameScorer, SpeakerProfileSet,
};
use diarkit::{Interval, Ticks};

/// A scorer selected from a config/CLI string.
pub enum ScorerBinding {
    Toy(CosineScorer),
    Command(CommandScorer),
}

impl ScorerBinding {
    /// `"toy"` or `"cmd:<program and args>"`.
    pub fn parse(spec: &str, resolution: Ticks) -> anyhow::Result<ScorerBinding> {
        if spec == "toy" {
            return Ok(ScorerBinding::Toy(CosineScorer { resolution }));
        }
        if let Some(command) = spec.strip_prefix("cmd:") {
            let parts: Vec<String> = command.split_whitespace().map(str::to_string).collect();
            if parts.is_empty() {
                anyhow::bail!("empty scorer command");
            }
            return Ok(ScorerBinding::Command(CommandScorer {
                argv: parts,
                resolution,
            }));
        }
        anyhow::bail!("unknown scorer {spec:?} (expected \"toy\" or \"cmd:<command>\")");
    }

    pub fn as_frame_scorer(&self) -> &dyn FrameScorer {
        match self {
            ScorerBinding::Toy(s) => s,
            ScorerBinding::Command(s) => s,
        }
    }

    /// Short name used in artifact file names and report rows.
    pub fn artifact_name(spec: &str, index: usize) -> String {
        if spec == "toy" {
            "toy".to_string()
        } else {
            format!("cmd{index}")
        }
    }
}

/// Scores chunks by spawning an external command per chunk.
pub struct CommandScorer {
    argv: Vec<String>,
    resolution: Ticks,
}

impl FrameScorer for CommandScorer {
    fn score_chunk(
        &self,
        chunk: Interval,
        seq: &EmbeddingSequence,
        profiles: &SpeakerProfileSet,
    ) -> diarkit::Result<ChunkScores> {
        let run = || -> anyhow::Result<ChunkScores> {
            let dir = tempfile::tempdir()?;
            let profiles_path = dir.path().join("profiles.txt");
            let embeddings_path = dir.path().join("chunk.embtxt");
            std::fs::write(&profiles_path, write_profiles(profiles))?;
            std::fs::write(&embeddings_path, diarkit::embeddings::write_text(seq))?;

            let output = std::process::Command::new(&self.argv[0])
                .args(&self.argv[1..])
                .arg(format!("{}", chunk.onset().seconds()))
                .arg(format!("{}", chunk.end().seconds()))
                .arg(&profiles_path)
                .arg(&embeddings_path)
                .arg(format!("{}", self.resolution.seconds()))
                .output()?;
            if !output.status.success() {
                anyhow::bail!(
                    "scorer command failed with {}: {}",
                    output.status,
                    String::from_utf8_lossy(&output.stderr)
                );
            }
            let text = String::from_utf8(output.stdout)
                .map_err(|_| anyhow::anyhow!("scorer output is not UTF-8"))?;
            Ok(parse_chunk_scores(&text, chunk, profiles)?)
        };
        run().map_err(|e| Error::Internal(format!("external scorer: {e:#}")))
    }
}

/// Implements the external-scorer contract with the cosine scorer; wired to
/// the `toy-scorer` subcommand.
pub fn run_toy_scorer(
    start_sec: f64,
    end_sec: f64,
    profiles_path: &std::path::Path,
    embeddings_path: &std::path::Path,
    resolution_sec: f64,
) -> anyhow::Result<String> {
    let profiles_text = std::fs::read_to_string(profiles_path)?;
    let profiles = diarkit::tsvad::parse_profiles(&profiles_text, diarkit::tsvad::DEFAULT_CAPACITY)?;
    let embeddings_text = std::fs::read_to_string(embeddings_path)?;
    let seq = if embeddings_text.trim().is_empty() {
        EmbeddingSequence::new(profiles.recording_id(), profiles.dim(), vec![])?
    } else {
        diarkit::embeddings::parse_text(&embeddings_text, profiles.recording_id())?
    };
    let chunk = Interval::from_range(
        Ticks::from_seconds(start_sec),
        Ticks::from_seconds(end_sec),
    );
    let scorer = CosineScorer {
        resolution: Ticks::from_seconds(resolution_sec),
    };
    let block = scorer.score_chunk(chunk, &seq, &profiles)?;
    Ok(diarkit::tsvad::write_chunk_scores(&block))
}
