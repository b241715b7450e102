//! Feature extraction for both modalities.

pub mod audio;
pub mod filter;
pub mod kinematic;
pub mod stats;

pub use audio::{extract_audio_features, AudioConfig, AudioExtractor};
pub use kinematic::{azc, douglas_peucker, extract_kinematic_features, kin_stats, KinStats, SimplifiedPolyline};
