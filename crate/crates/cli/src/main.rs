//! `diarkit`: speaker-diarization pipeline CLI.
//!
//! Exit codes: 0 success, 1 any recording failed, 2 invalid configuration
//! or usage.

mod commands;
mod config;
mod manifest;
mod pipeline;
mod scorer;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "diarkit",
    version,
    about = "Speaker-diarization pipeline: score fusion, binarization, clustering, TSVAD stitching, hypothesis fusion, and DER scoring"
)]
struct Cli {
    /// Pipeline config file (TOML); used by the `pipeline` subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for batch stages (default: logical cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Verbose logging (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Average frame-score streams from several models into one.
    FuseScores {
        /// Score files (FRAMESCORES format), one per model.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Fusion weights, comma-separated (default: uniform).
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Binarize a score stream into speech regions (RTTM).
    Binarize {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        onset: f64,
        #[arg(long, default_value_t = 0.5)]
        offset: f64,
        /// Minimum region length in seconds.
        #[arg(long, default_value_t = 0.10)]
        min_on: f64,
        /// Maximum gap (seconds) to bridge.
        #[arg(long, default_value_t = 0.10)]
        min_off: f64,
        /// Pseudo-speaker label carried in the output RTTM.
        #[arg(long, default_value = "speech")]
        label: String,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Cut speech regions into uniform windows (TSV: recording, onset, duration).
    Segment {
        #[arg(long)]
        speech: PathBuf,
        #[arg(long, default_value_t = 1.28)]
        window: f64,
        #[arg(long, default_value_t = 0.32)]
        shift: f64,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Clustering-based diarization of one recording.
    Ahc(AhcArgs),
    /// TSVAD refinement of an initial diarization.
    Tsvad(TsvadArgs),
    /// Overlap-aware fusion of diarization hypotheses.
    DoverLap {
        /// Hypothesis RTTM files (may hold multiple recordings each).
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Fixed hypothesis weights (default: rank weights from pairwise DER).
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.5)]
        rank_exponent: f64,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// DER scoring of a hypothesis against a reference.
    Score {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        hyp: PathBuf,
        /// No-score collar in seconds around reference boundaries.
        #[arg(long, default_value_t = 0.25)]
        collar: f64,
        /// Exclude reference overlap regions from scoring.
        #[arg(long)]
        ignore_overlaps: bool,
        /// UEM file bounding the scored regions.
        #[arg(long)]
        uem: Option<PathBuf>,
        /// Write a machine-readable TSV report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Generate a synthetic corpus with ground truth.
    Simgen(SimgenArgs),
    /// Run the full pipeline from a config file over a manifest.
    Pipeline,
    /// Reference external TSVAD scorer (chunk-request contract).
    ToyScorer {
        start_sec: f64,
        end_sec: f64,
        profiles: PathBuf,
        embeddings: PathBuf,
        resolution_sec: f64,
    },
}

#[derive(Args)]
struct AhcArgs {
    /// Speech regions (RTTM; any labels, support is used).
    #[arg(long)]
    speech: PathBuf,
    /// Embedding file (EMBD binary or text).
    #[arg(long)]
    embeddings: PathBuf,
    /// Overlap regions (RTTM) for second-speaker assignment.
    #[arg(long)]
    osd: Option<PathBuf>,
    /// Required when the speech RTTM holds several recordings.
    #[arg(long)]
    recording_id: Option<String>,
    #[arg(long, default_value_t = 0.54)]
    segment_thr: f64,
    #[arg(long, default_value_t = 0.60)]
    stop_thr: f64,
    #[arg(long, default_value_t = 0.20)]
    speaker_thr: f64,
    #[arg(long, default_value_t = 6.0)]
    long_cluster_min: f64,
    #[arg(long, default_value = "average")]
    linkage: String,
    #[arg(long, default_value_t = 0.32)]
    merge_max_gap: f64,
    /// Re-segment speech and resample embeddings onto "window:shift"
    /// (e.g. 1.28:0.32) instead of using the file's own segments.
    #[arg(long)]
    resegment: Option<String>,
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Args)]
struct TsvadArgs {
    #[arg(long)]
    speech: PathBuf,
    #[arg(long)]
    embeddings: PathBuf,
    /// Initial diarization (RTTM) providing speaker profiles.
    #[arg(long)]
    init: PathBuf,
    /// `"toy"` or `"cmd:<program and args>"`.
    #[arg(long, default_value = "toy")]
    scorer: String,
    #[arg(long)]
    recording_id: Option<String>,
    #[arg(long, default_value_t = 16.0)]
    chunk_len: f64,
    #[arg(long, default_value_t = 1.0)]
    stride: f64,
    #[arg(long, default_value_t = 0.08)]
    resolution: f64,
    #[arg(long, default_value_t = 30)]
    capacity: usize,
    #[arg(long, default_value_t = 0.75)]
    threshold: f64,
    #[arg(long, default_value_t = 0.16)]
    min_on: f64,
    #[arg(long, default_value_t = 0.16)]
    min_off: f64,
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Args)]
struct SimgenArgs {
    #[arg(long, short)]
    output: PathBuf,
    /// Number of recordings.
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Speaker count per recording: "N" or "MIN:MAX".
    #[arg(long, default_value = "3")]
    speakers: String,
    /// Recording length in seconds.
    #[arg(long, default_value_t = 120.0)]
    duration: f64,
    #[arg(long, default_value_t = 0.1)]
    overlap_prob: f64,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    #[arg(long, default_value_t = 0.33)]
    within_noise: f64,
    #[arg(long, default_value_t = 0.02)]
    score_noise: f64,
    /// Turn length range in seconds ("MIN:MAX").
    #[arg(long, default_value = "2:6")]
    turn_len: String,
    /// Pause length range in seconds ("MIN:MAX").
    #[arg(long, default_value = "0.2:1")]
    pause_len: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(match cli.verbose {
            0 => log::LevelFilter::Warn,
            1 => log::LevelFilter::Info,
            _ => log::LevelFilter::Debug,
        })
        .init();

    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::FuseScores {
            inputs,
            weights,
            output,
        } => {
            commands::fuse_scores(&inputs, weights.as_deref(), &output)?;
        }
        Command::Binarize {
            scores,
            onset,
            offset,
            min_on,
            min_off,
            label,
            output,
        } => {
            commands::binarize_scores(&scores, onset, offset, min_on, min_off, &label, &output)?;
        }
        Command::Segment {
            speech,
            window,
            shift,
            output,
        } => {
            commands::segment(&speech, window, shift, &output)?;
        }
        Command::Ahc(args) => {
            let resegment = args
                .resegment
                .as_deref()
                .map(commands::parse_range_f64)
                .transpose()?;
            commands::ahc(
                &args.speech,
                &args.embeddings,
                args.osd.as_deref(),
                args.recording_id.as_deref(),
                args.segment_thr,
                args.stop_thr,
                args.speaker_thr,
                args.long_cluster_min,
                &args.linkage,
                args.merge_max_gap,
                resegment,
                &args.output,
            )?;
        }
        Command::Tsvad(args) => {
            commands::tsvad(
                &args.speech,
                &args.embeddings,
                &args.init,
                &args.scorer,
                args.recording_id.as_deref(),
                args.chunk_len,
                args.stride,
                args.resolution,
                args.capacity,
                args.threshold,
                args.min_on,
                args.min_off,
                &args.output,
            )?;
        }
        Command::DoverLap {
            inputs,
            weights,
            rank_exponent,
            output,
        } => {
            commands::dover_lap_files(&inputs, weights.as_deref(), rank_exponent, &output)?;
        }
        Command::Score {
            reference,
            hyp,
            collar,
            ignore_overlaps,
            uem,
            report,
        } => {
            commands::score(
                &reference,
                &hyp,
                collar,
                ignore_overlaps,
                uem.as_deref(),
                report.as_deref(),
            )?;
        }
        Command::Simgen(args) => {
            let parsed = commands::SimgenArgs {
                output: args.output,
                count: args.count,
                seed: args.seed,
                speakers: commands::parse_range_usize(&args.speakers)?,
                duration: args.duration,
                overlap_prob: args.overlap_prob,
                dim: args.dim,
                within_noise: args.within_noise,
                score_noise: args.score_noise,
                turn_len: commands::parse_range_f64(&args.turn_len)?,
                pause_len: commands::parse_range_f64(&args.pause_len)?,
            };
            commands::simgen(&parsed)?;
        }
        Command::Pipeline => {
            let Some(config_path) = cli.config.as_deref() else {
                eprintln!("error: `pipeline` requires --config <file>");
                return Ok(ExitCode::from(2));
            };
            let config = match config::PipelineConfig::load(config_path) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    return Ok(ExitCode::from(2));
                }
            };
            let outcome = pipeline::run(&config, cli.jobs)?;
            if outcome.failures > 0 {
                eprintln!(
                    "{} of {} recordings failed",
                    outcome.failures, outcome.recordings
                );
                return Ok(ExitCode::from(1));
            }
        }
        Command::ToyScorer {
            start_sec,
            end_sec,
            profiles,
            embeddings,
            resolution_sec,
        } => {
            let block =
                scorer::run_toy_scorer(start_sec, end_sec, &profiles, &embeddings, resolution_sec)?;
            print!("{block}");
        }
    }
    Ok(ExitCode::SUCCESS)
}
