//! Bundled case studies and the conversion of raw measurements into
//! indicator observations.

pub mod calibrate;
pub mod cases;
pub mod metrics;
pub mod synth;
