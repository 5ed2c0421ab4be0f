//! Differentially private content selection inside a second-price,
//! pay-per-click ad auction simulator.
//!
//! The library is organized around the stages of a private selection
//! pipeline:
//!
//! - [`mechanisms`] - the selection primitives: Randomized Response and
//!   Select Noisy Max with pluggable noise, sensitivity bounding (per-decision
//!   scaling or clipping against public scores), exact and Monte Carlo
//!   selection distributions, and an empirical ε-DP ratio verifier.
//! - [`auction`] - second-price pay-per-click auction mechanics on non-private
//!   data: reserve eligibility, ranking, pricing, and the γ-cutoff
//!   bag-of-contents.
//! - [`pipeline`] - the end-to-end per-auction flow (server scoring, pricing,
//!   bag selection, device scoring, randomized winner selection, payment)
//!   plus the greedy baselines used for lifts.
//! - [`metrics`] - CTR / advertiser surplus / platform revenue aggregation
//!   and lifts against named baselines.
//! - [`data`] - auction-log ingestion (JSONL / CSV), interaction-log grouping,
//!   synthetic dataset generation, pClick mixing, and candidate-count
//!   bucketing.
//! - [`cli`] - the experiment driver behind the `dpsim` binary: single runs,
//!   parameter sweeps, the pricing ablation, and mechanism comparisons, all
//!   emitted as CSV.
//!
//! Everything downstream of a seed is deterministic: simulations derive one
//! random substream per (grid point, replicate, auction) so results are
//! independent of execution order and worker-thread count.

pub mod auction;
pub mod cli;
pub mod data;
pub mod error;
pub mod mechanisms;
pub mod metrics;
pub mod pipeline;
pub mod rng;

pub use auction::Candidate;
pub use data::{AuctionRecord, SyntheticSpec};
pub use error::Error;
pub use mechanisms::{MechanismConfig, ScoreVector, SelectionDistribution};
pub use metrics::MetricsReport;
pub use pipeline::{AuctionOutcome, Outcome, PipelineConfig};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
