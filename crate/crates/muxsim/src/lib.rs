//! Closed-loop statistical multiplexing simulator.
//!
//! Several simulated video streams share one channel; per super GOP an
//! allocator splits the budget, a virtual encoder turns each share into an
//! achieved (rate, distortion) pair, and the loop feeds those back into the
//! next decision. The crate compares a pure look-ahead allocator (`lam`,
//! shares proportional to complexity) against a look-ahead-plus-feedback
//! allocator (`lfam`, shares proportional to `D·R·C²_next/C²_prev`) under
//! the equal-quality (minimum distortion variance) objective, with genie
//! and uniform baselines.

pub mod alloc;
pub mod complexity;
pub mod commands;
pub mod config;
pub mod domain;
pub mod error;
pub mod metrics;
pub mod rdmodel;
pub mod report;
pub mod rng;
pub mod scenarios;
pub mod sim;
pub mod trace;

pub use error::{Error, Result};
