//! Robustness quantifiers for distributed measurements, teleportation
//! instruments and bipartite states, computed by a small conic solver, plus
//! the discrimination games read off their dual certificates.

pub mod conic;
pub mod error;
pub mod fixtures;
pub mod games;
pub mod io;
pub mod linalg;
pub mod qobj;
pub mod robustness;
pub mod suites;

/// Library version embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
