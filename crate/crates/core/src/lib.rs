//! Speaker-diarization pipeline toolkit.
//!
//! Everything downstream of neural inference for a clustering + TSVAD
//! diarization system: exact interval/annotation algebra with RTTM I/O,
//! frame-score fusion and binarization, uniform segmentation and cosine
//! similarity over externally extracted speaker embeddings, agglomerative
//! clustering with overlap post-processing, target-speaker VAD chunk
//! stitching, overlap-aware hypothesis fusion, DER scoring, and a
//! deterministic synthetic-conversation generator for end-to-end testing.
//!
//! All time arithmetic is integer ticks at 0.1 ms; floating point enters
//! only through scores and embedding vectors.
//!
//! ```
//! use diarkit::ahc::{diarize_ahc, AhcConfig};
//! use diarkit::metrics::{der, ScoringOptions};
//! use diarkit::simgen::{generate, SimConfig};
//!
//! // A synthetic three-speaker conversation with known ground truth...
//! let data = generate(&SimConfig::default())?;
//! // ...diarized by clustering its (noisy) segment embeddings...
//! let hypothesis = diarize_ahc(
//!     &data.speech,
//!     &data.embeddings,
//!     &data.osd,
//!     &AhcConfig::default(),
//! )?;
//! // ...recovers the reference within a fraction of a percent.
//! let report = der(&data.reference, &hypothesis, &ScoringOptions::default())?;
//! assert!(report.der() < 0.02);
//! # Ok::<(), diarkit::Error>(())
//! ```

pub mod ahc;
pub mod assignment;
pub mod embeddings;
pub mod error;
pub mod frame_scores;
pub mod fusion;
pub mod metrics;
pub mod simgen;
pub mod timeline;
pub mod tsvad;

pub use error::{Error, Result};
pub use timeline::{Annotation, Interval, Ticks, Timeline, Turn};
