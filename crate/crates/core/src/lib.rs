//! Quality assessment and prediction networks derived from activity-based
//! quality models.
//!
//! The pipeline runs from a [`model::QualityModel`] and a goal through
//! [`netgen`] to a [`engine::BayesianNetwork`], which is compiled to
//! explicit tables and queried with exact inference. [`scenarios`] builds
//! what-if analysis on top; [`ingestion`] ships the two bundled cases.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod api;
pub mod cli;
pub mod engine;
pub mod error;
pub mod ingestion;
pub mod model;
pub mod netgen;
pub mod report;
pub mod scenarios;

pub use error::{Error, Result};
