//! Library side of the `statbeam` binary: scenario configuration, rate
//! sweeps over an SNR grid, and self-contained validation suites. The
//! binary in `main.rs` is a thin argument-parsing shell over these
//! modules so that everything it does is testable in-process.

pub mod config;
pub mod sweep;
pub mod validate;
