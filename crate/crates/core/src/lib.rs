//! Time-aware, emotion-fused recurrent classifiers for user-level risk
//! detection from timestamped post histories.

pub mod cli;
pub mod dataset;
pub mod encoders;
pub mod evaluation;
pub mod model;
pub mod numeric;
pub mod pipeline;
pub mod training;
