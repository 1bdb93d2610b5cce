//! Metadata-driven data quality for tabular warehouse content.
//!
//! Quality goals are declared in a [`quality_model`], measured by the
//! [`agents`], judged by the [`evaluator`] against inclusive expected
//! intervals, and repaired through the [`cleanse`] pipeline. The
//! [`repository`] keeps the model, measurement history and cleansing logs.

pub mod agents;
pub mod cleanse;
pub mod evaluator;
pub mod lint;
pub mod quality_model;
pub mod quantity;
pub mod repository;
pub mod tabular;

pub use quantity::Quantity;
