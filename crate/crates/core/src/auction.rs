//! Second-price, pay-per-click auction mechanics on non-private data.
//!
//! Candidates are scored `bid × pClick_server`, ranked descending, and priced
//! with the second-price rule
//! `price_r = max(reserve, bid_{r+1} × pClick_{r+1,server} / pClick_{r,server})`,
//! with the last-ranked candidate paying the reserve. Prices use server
//! pClicks only, so they are invariant to any private (device) data: the
//! payment can be persisted in the clear.
//!
//! [`bag_of_contents`] implements the γ-cutoff: only candidates whose server
//! score is at least `(1 - γ) × max` are forwarded to the device for private
//! ranking.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// One ad in one auction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    /// Opaque identifier, unique within a record.
    pub id: String,
    /// Bid per click, strictly positive.
    pub bid: f64,
    /// Modeled click probability given non-private context, in (0, 1].
    pub pclick_server: f64,
    /// Modeled click probability given private context, in (0, 1].
    pub pclick_device: f64,
}

impl Candidate {
    /// Non-private score `bid × pClick_server`.
    pub fn server_score(&self) -> f64 {
        self.bid * self.pclick_server
    }

    /// Private score `bid × pClick_device`.
    pub fn device_score(&self) -> f64 {
        self.bid * self.pclick_device
    }

    /// Field invariants: `bid > 0`, pClicks in (0, 1], everything finite.
    pub fn validate(&self) -> Result<()> {
        if !self.bid.is_finite() || self.bid <= 0.0 {
            return Err(Error::invalid_input(format!(
                "candidate {}: bid must be finite and > 0, got {}",
                self.id, self.bid
            )));
        }
        for (name, p) in [
            ("pclick_server", self.pclick_server),
            ("pclick_device", self.pclick_device),
        ] {
            if !p.is_finite() || p <= 0.0 || p > 1.0 {
                return Err(Error::invalid_input(format!(
                    "candidate {}: {name} must lie in (0, 1], got {p}",
                    self.id
                )));
            }
        }
        Ok(())
    }
}

/// Eligible candidates sorted descending by server score, with their aligned
/// second-price schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedAuction {
    /// Sorted descending by `server_score`, ties by id ascending.
    pub candidates: Vec<Candidate>,
    /// Reserve price per click, ≥ 0.
    pub reserve: f64,
    /// `prices[r]` is what `candidates[r]` pays per click if selected;
    /// `reserve ≤ prices[r] ≤ candidates[r].bid`.
    pub prices: Vec<f64>,
}

impl RankedAuction {
    /// Eligibility, ranking and pricing in one step. Returns `None` when no
    /// candidate clears the reserve (a no-fill auction).
    pub fn build(candidates: &[Candidate], reserve: f64) -> Result<Option<Self>> {
        if !reserve.is_finite() || reserve < 0.0 {
            return Err(Error::invalid_input(format!(
                "reserve must be finite and non-negative, got {reserve}"
            )));
        }
        let eligible = apply_reserve_eligibility(candidates, reserve);
        if eligible.is_empty() {
            return Ok(None);
        }
        let ranked = rank_candidates(&eligible);
        let prices = compute_prices(&ranked, reserve)?;
        Ok(Some(RankedAuction {
            candidates: ranked,
            reserve,
            prices,
        }))
    }
}

/// Retain candidates whose bid clears the reserve, preserving order. An empty
/// result is legal and signals a no-fill auction upstream.
pub fn apply_reserve_eligibility(candidates: &[Candidate], reserve: f64) -> Vec<Candidate> {
    candidates
        .iter()
        .filter(|c| c.bid >= reserve)
        .cloned()
        .collect()
}

/// Sort candidates descending by server score, ties by id ascending.
/// Deterministic across runs and platforms.
pub fn rank_candidates(candidates: &[Candidate]) -> Vec<Candidate> {
    let mut ranked = candidates.to_vec();
    ranked.sort_by(|a, b| {
        b.server_score()
            .total_cmp(&a.server_score())
            .then_with(|| a.id.cmp(&b.id))
    });
    ranked
}

/// Second-price schedule over an arbitrary (bid, pClick) ranking. Shared by
/// server-pClick pricing here and by the pricing-source ablation in the
/// pipeline.
pub(crate) fn second_price_schedule(scored: &[(f64, f64)], reserve: f64) -> Vec<f64> {
    let mut prices = Vec::with_capacity(scored.len());
    for r in 0..scored.len() {
        if r + 1 < scored.len() {
            let (next_bid, next_pclick) = scored[r + 1];
            let (_, pclick) = scored[r];
            prices.push((next_bid * next_pclick / pclick).max(reserve));
        } else {
            prices.push(reserve);
        }
    }
    prices
}

/// Prices per rank for a ranked candidate list:
/// `price_r = max(reserve, bid_{r+1} × pClick_{r+1,server} / pClick_{r,server})`
/// for all but the last rank, which pays the reserve. Server pClicks only.
///
/// The input must already be ranked; a violated descending-score order is a
/// contract violation.
pub fn compute_prices(ranked: &[Candidate], reserve: f64) -> Result<Vec<f64>> {
    if ranked.is_empty() {
        return Err(Error::invalid_input("cannot price an empty ranking"));
    }
    for pair in ranked.windows(2) {
        if pair[0].server_score() < pair[1].server_score() {
            return Err(Error::contract(
                "compute_prices requires candidates ranked descending by server score",
            ));
        }
    }
    let scored: Vec<(f64, f64)> = ranked.iter().map(|c| (c.bid, c.pclick_server)).collect();
    Ok(second_price_schedule(&scored, reserve))
}

/// γ-cutoff bag of contents: the ranked candidates whose server score is at
/// least `(1 - γ) × max`, with their rank indices so the winner's price stays
/// recoverable from the full ranking. `γ = 0` keeps the top candidate (plus
/// exact ties); `γ = 1` keeps everyone.
///
/// Server scores must be non-negative; the cutoff semantics break for
/// negative scores.
pub fn bag_of_contents(ranked: &[Candidate], gamma: f64) -> Result<Vec<(usize, Candidate)>> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::invalid_parameter(format!(
            "gamma must lie in [0, 1], got {gamma}"
        )));
    }
    if ranked.is_empty() {
        return Err(Error::invalid_input(
            "cannot take a bag from an empty ranking",
        ));
    }
    if let Some(bad) = ranked.iter().find(|c| c.server_score() < 0.0) {
        return Err(Error::invalid_input(format!(
            "candidate {}: negative server score {}",
            bad.id,
            bad.server_score()
        )));
    }
    let max = ranked
        .iter()
        .map(|c| c.server_score())
        .fold(f64::NEG_INFINITY, f64::max);
    let threshold = (1.0 - gamma) * max;
    Ok(ranked
        .iter()
        .enumerate()
        .filter(|(_, c)| c.server_score() >= threshold)
        .map(|(r, c)| (r, c.clone()))
        .collect())
}
