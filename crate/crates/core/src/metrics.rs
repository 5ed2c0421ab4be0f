//! Metric aggregation: CTR, advertiser surplus, platform revenue, and lifts.
//!
//! With per-click value approximated by the bid (truthful bidding) and click
//! outcomes by `pClick_device`, one auction contributes:
//!
//! - CTR:     `Σ_b p_b · pclick_device_b`
//! - revenue: `Σ_b p_b · price_b · pclick_device_b`
//! - surplus: `Σ_b p_b · (bid_b - price_b) · pclick_device_b`
//!
//! summed over the bag under the selection distribution `p` (Expected mode);
//! Sampled mode uses the realized winner and its 0/1 click. Since
//! `price + (bid - price) = bid`, revenue + surplus = Σ bid · clickvalue in
//! both modes, and prices never exceeding bids keeps surplus non-negative.
//!
//! Accumulation is associative and commutative over partial sums; callers
//! reduce parallel partials in a deterministic order.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::pipeline::{EvaluationMode, Outcome};
use crate::Result;

/// Aggregated metrics over one outcome list. `n` counts filled auctions;
/// no-fills are tallied separately and contribute nothing to the sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n: u64,
    pub nofill: u64,
    /// Mean expected click value per filled auction, in [0, 1].
    pub ctr: f64,
    /// Σ (bid - price) · clickvalue, currency.
    pub surplus: f64,
    /// Σ price · clickvalue, currency.
    pub revenue: f64,
}

impl MetricsReport {
    pub fn empty() -> Self {
        MetricsReport {
            n: 0,
            nofill: 0,
            ctr: 0.0,
            surplus: 0.0,
            revenue: 0.0,
        }
    }
}

/// Baseline a lift is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    /// Greedy selection on server scores (no personalization).
    UnPersonalized,
    /// Greedy selection on device scores (ε = ∞).
    FullInformation,
}

impl std::fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BaselineKind::UnPersonalized => write!(f, "un_personalized"),
            BaselineKind::FullInformation => write!(f, "full_information"),
        }
    }
}

/// Relative change of one metric against a named baseline;
/// `(x - x_base) / x_base`, absent when the baseline value is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Lift {
    pub metric: &'static str,
    pub value: Option<f64>,
    pub baseline: BaselineKind,
}

/// Aggregate outcomes from a single consistent run into a report.
/// Mixing Expected and Sampled outcomes in one list is a contract violation.
pub fn accumulate_metrics(outcomes: &[Outcome]) -> Result<MetricsReport> {
    let mut report = MetricsReport::empty();
    let mut mode: Option<EvaluationMode> = None;
    for outcome in outcomes {
        let filled = match outcome {
            Outcome::NoFill => {
                report.nofill += 1;
                continue;
            }
            Outcome::Filled(filled) => filled,
        };
        match mode {
            None => mode = Some(filled.mode),
            Some(m) if m != filled.mode => {
                return Err(Error::contract(
                    "outcome list mixes Expected and Sampled modes",
                ));
            }
            _ => {}
        }
        report.n += 1;
        match filled.mode {
            EvaluationMode::Expected => {
                let dist = filled.selection_distribution.as_ref().ok_or_else(|| {
                    Error::contract("expected-mode outcome lacks a selection distribution")
                })?;
                for (p, member) in dist.probabilities().iter().zip(&filled.bag) {
                    report.ctr += p * member.pclick_device;
                    report.revenue += p * member.price * member.pclick_device;
                    report.surplus += p * (member.bid - member.price) * member.pclick_device;
                }
            }
            EvaluationMode::Sampled => {
                let member = &filled.bag[filled.chosen_bag_index];
                let click = filled.click_value;
                report.ctr += click;
                report.revenue += member.price * click;
                report.surplus += (member.bid - member.price) * click;
            }
        }
    }
    if report.n > 0 {
        report.ctr /= report.n as f64;
    }
    Ok(report)
}

/// Per-metric lifts of `report` against `baseline`. Zero-valued baseline
/// metrics yield absent lifts rather than infinities.
pub fn compute_lift(
    report: &MetricsReport,
    baseline: &MetricsReport,
    kind: BaselineKind,
) -> Vec<Lift> {
    let one = |metric: &'static str, x: f64, base: f64| Lift {
        metric,
        value: if base == 0.0 {
            None
        } else {
            Some((x - base) / base)
        },
        baseline: kind,
    };
    vec![
        one("ctr", report.ctr, baseline.ctr),
        one("surplus", report.surplus, baseline.surplus),
        one("revenue", report.revenue, baseline.revenue),
    ]
}
