//! Discrete maximal operators and Poincaré-type functionals on uniform grids.
//!
//! The crate computes Hardy-Littlewood maximal functions (non-centred,
//! centred, fractional, domain-restricted) on regular grids, evaluates
//! generalized Poincaré functionals over cube families, builds exact-rational
//! Whitney decompositions, and runs verification harnesses that measure the
//! empirical constants of the oscillation inequalities the maximal operator
//! preserves.

pub mod error;
pub mod generators;
pub mod grid;
pub mod io;
pub mod maximal;
pub mod poincare;
pub mod report;
pub mod verify;
pub mod whitney;

pub use error::{Error, Result};
pub use grid::{CubeSpec, DiscreteMeasure, DomainMask, GridFunction, SummedAreaTable};
pub use maximal::{MaximalConfig, MaximalVariant};

/// Configure the global worker pool. Call once before heavy operators; later
/// calls are ignored. Results never depend on the thread count.
pub fn set_thread_count(threads: usize) {
    if threads == 0 {
        return;
    }
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
}
