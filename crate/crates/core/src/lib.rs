//! Reliable computation with noisy gates: circuits, information measures,
//! channels, noise simulation, exact inference, the restoring-organ
//! construction and the lower bounds.

pub mod bounds;
pub mod channel;
pub mod circuit;
pub mod corpus;
pub mod error;
pub mod exact;
pub mod info;
pub mod netlist;
pub mod sim;
pub mod vn;

pub use error::{Error, Result};

/// Version of this library, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
