//! Benchmark harness: potential-energy-surface scans over fixtures,
//! error-versus-FCI tables and parameter-count summaries.

pub mod error;
pub mod output;
pub mod runner;
pub mod scan;
pub mod summary;

pub use error::{BenchError, Result};

/// 1 kcal/mol in Hartree.
pub const CHEMICAL_ACCURACY: f64 = 1.594e-3;
