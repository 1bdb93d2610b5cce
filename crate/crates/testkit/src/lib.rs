//! Seeded random warehouses and naive reference implementations used by the
//! property and acceptance tests. The oracles deliberately avoid the engine's
//! indexes and helpers: every check is a plain scan over rows.

pub mod gen;
pub mod model;
pub mod oracle;

pub use gen::{rng, GenConfig};
