//! Robust binary hypothesis testing on finite discrete alphabets.
//!
//! The crate is organised around least favourable distributions (LFDs) for
//! the Huber, total-variation, and subtractive contamination models:
//!
//! - [`dist`] — finite distributions, TV/Hellinger divergences, likelihood
//!   ratio partitions, and uncertainty-set membership;
//! - [`lfd`] — clip calibration via piecewise closed forms and LFD
//!   construction, including the subtractive degenerate cases;
//! - [`complexity`] — Hellinger-based sample-complexity predictors and an
//!   exact small-instance oracle over product measures;
//! - [`privacy`] — the clipped-divergence curve `D_gamma` and the private
//!   sample-complexity / transformation curves;
//! - [`adversary`] — seeded Monte Carlo simulation of oblivious and adaptive
//!   contamination against concrete tests;
//! - [`experiments`] — scripted reproductions: jump family, breakdown under
//!   underestimated contamination, sandwich certification, no-simulation
//!   witnesses, and the privacy example.
//!
//! All numeric kernels are data-parallel via `rayon` when the `parallel`
//! feature (default) is enabled; results are bit-identical to the sequential
//! fallback because reductions always run in index order.

pub mod adversary;
pub mod complexity;
pub mod dist;
pub mod exec;
pub mod experiments;
pub mod io;
pub mod lfd;
pub mod privacy;

pub use dist::{Dist, DistError, LrPartition, Model};
pub use lfd::{build_lfds, solve_clips, ClipPair, LfdError, LfdPair};
