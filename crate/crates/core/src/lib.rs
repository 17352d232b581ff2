//! Markerless gait validation toolkit.
//!
//! Parses force-platform and pose-estimation outputs, detects heel-contact
//! and toe-off events from both, derives temporal gait parameters and
//! quantifies the agreement of each markerless system with the force
//! reference.

pub mod dsp;
pub mod events;
pub mod ingest;
pub mod params;
pub mod report;
pub mod stats;
pub mod synth;
