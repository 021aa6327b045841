//! Phonetic stylometry for classical Persian verse at hemistich (mesra)
//! resolution: ingestion and cohort construction, feature-based phonology,
//! per-mesra metrics, fixed-effects inference and the stylistic atlas.

pub mod atlas;
pub mod corpus;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod numeric;
pub mod phonology;
pub mod report;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
