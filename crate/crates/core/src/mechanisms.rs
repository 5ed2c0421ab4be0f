//! Differentially private selection primitives.
//!
//! Two mechanism families choose one candidate out of `a` by private score:
//!
//! - **Randomized Response (RR)**: select the private argmax with probability
//!   `e^ε / (a - 1 + e^ε)` and any other fixed candidate with probability
//!   `1 / (a - 1 + e^ε)`. Equivalent to epsilon-greedy exploration.
//! - **Select Noisy Max (SNM)**: add i.i.d. noise with rate `β = ε / (2Δ)`
//!   (scale `2Δ/ε`) to each private score and select the noisy argmax. With
//!   Gumbel noise the selection distribution has the closed form
//!   `p_i = exp(s_i ε / 2Δ) / Σ_j exp(s_j ε / 2Δ)`, the exponential
//!   mechanism, a.k.a. softmax or Boltzmann exploration.
//!
//! SNM needs a bound `Δ` on how much private information can move any score.
//! Two bounding modes are provided: per-decision min-max scaling into `[0,1]`
//! (which fixes `Δ = 1`), and clipping each private score into
//! `[public - Δ/2, public + Δ/2]` around a public score.
//!
//! A mechanism `M` is ε-differentially private when, for adjacent inputs `D`,
//! `D'` and every output set `S`, `P(M(D) ∈ S) ≤ exp(ε) · P(M(D') ∈ S)`.
//! [`verify_dp_ratio`] checks this empirically by comparing selection
//! distributions (exact where closed forms exist, Monte Carlo otherwise) on a
//! pair of score vectors.
//!
//! All operations are pure given an explicit random stream; callers that want
//! parallelism give each thread its own stream.

use rand::Rng;
use rand_distr::{Distribution, Exp, Gumbel};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// A non-empty vector of finite candidate scores (expected value per
/// impression; `bid × pClick` in the auction pipeline).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    /// Validates that `scores` is non-empty and every entry is finite.
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::invalid_input("score vector must be non-empty"));
        }
        if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
            return Err(Error::invalid_input(format!(
                "score vector contains non-finite entry {bad}"
            )));
        }
        Ok(ScoreVector(scores))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Score vectors are non-empty by construction.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Index of the largest score, ties broken to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }
}

impl std::ops::Deref for ScoreVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for ScoreVector {
    type Error = Error;

    fn try_from(scores: Vec<f64>) -> Result<Self> {
        ScoreVector::new(scores)
    }
}

/// Selection mechanism family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanismKind {
    Rr,
    Snm,
}

impl std::fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MechanismKind::Rr => write!(f, "rr"),
            MechanismKind::Snm => write!(f, "snm"),
        }
    }
}

/// Noise family for Select Noisy Max.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Gumbel,
    Exponential,
    Laplace,
}

impl std::fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NoiseKind::Gumbel => write!(f, "gumbel"),
            NoiseKind::Exponential => write!(f, "exponential"),
            NoiseKind::Laplace => write!(f, "laplace"),
        }
    }
}

/// Sensitivity-bounding mode applied to private scores before selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bounding {
    /// Use raw scores. No DP claim is attached to unbounded SNM; provided as
    /// a utility (and as the natural mode for RR, which only reads the
    /// argmax).
    None,
    /// Per-decision min-max scaling into `[0,1]`; forces `Δ = 1`.
    Scaled,
    /// Clip each private score into `[public - Δ/2, public + Δ/2]`. Requires
    /// public scores at call time.
    Clipped,
}

impl std::fmt::Display for Bounding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Bounding::None => write!(f, "none"),
            Bounding::Scaled => write!(f, "scaled"),
            Bounding::Clipped => write!(f, "clipped"),
        }
    }
}

/// Full mechanism configuration: family, noise (SNM only), privacy parameter
/// ε, sensitivity Δ, and bounding mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanismConfig {
    pub kind: MechanismKind,
    /// Noise family; read only when `kind == Snm`.
    pub noise: NoiseKind,
    pub epsilon: f64,
    /// Sensitivity Δ, in score units. `Scaled` bounding forces `Δ = 1`.
    pub delta: f64,
    pub bounding: Bounding,
}

impl MechanismConfig {
    /// Randomized Response with privacy parameter `epsilon` and no bounding.
    pub fn rr(epsilon: f64) -> Self {
        MechanismConfig {
            kind: MechanismKind::Rr,
            noise: NoiseKind::Gumbel,
            epsilon,
            delta: 1.0,
            bounding: Bounding::None,
        }
    }

    /// Select Noisy Max with the given noise family, ε, Δ and bounding mode.
    pub fn snm(noise: NoiseKind, epsilon: f64, delta: f64, bounding: Bounding) -> Self {
        let delta = if bounding == Bounding::Scaled {
            1.0
        } else {
            delta
        };
        MechanismConfig {
            kind: MechanismKind::Snm,
            noise,
            epsilon,
            delta,
            bounding,
        }
    }

    /// Checks parameter ranges: `ε ≥ 0` for RR, `ε > 0` for SNM, `Δ > 0`,
    /// and `Δ = 1` under scaled bounding.
    pub fn validate(&self) -> Result<()> {
        if !self.epsilon.is_finite() || self.epsilon < 0.0 {
            return Err(Error::invalid_parameter(format!(
                "epsilon must be finite and non-negative, got {}",
                self.epsilon
            )));
        }
        if self.kind == MechanismKind::Snm && self.epsilon == 0.0 {
            // Noise rate epsilon/(2 delta) would be zero, which no noise
            // family defines.
            return Err(Error::invalid_parameter(
                "epsilon must be strictly positive for SNM",
            ));
        }
        if !self.delta.is_finite() || self.delta <= 0.0 {
            return Err(Error::invalid_parameter(format!(
                "delta must be finite and strictly positive, got {}",
                self.delta
            )));
        }
        if self.bounding == Bounding::Scaled && self.delta != 1.0 {
            return Err(Error::invalid_parameter(
                "scaled bounding fixes delta = 1 (scaled scores lie in [0,1])",
            ));
        }
        Ok(())
    }

    /// Noise rate `β = ε / (2Δ)` for SNM.
    pub fn noise_rate(&self) -> f64 {
        self.epsilon / (2.0 * self.delta)
    }
}

/// Provenance of a selection distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Computed from a closed form.
    Exact,
    /// Normalized selection counts over this many Monte Carlo trials.
    Estimated(u64),
}

/// A probability vector over candidates, aligned with the score vector it was
/// computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionDistribution {
    probabilities: Vec<f64>,
    provenance: Provenance,
}

impl SelectionDistribution {
    /// Validates non-negativity and normalization (within 1e-9 for exact
    /// distributions; estimated counts are normalized by construction).
    pub fn new(probabilities: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::invalid_input("distribution must be non-empty"));
        }
        if probabilities.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::invalid_input(
                "distribution entries must be finite and non-negative",
            ));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid_input(format!(
                "distribution must sum to 1 within 1e-9, got {total}"
            )));
        }
        Ok(SelectionDistribution {
            probabilities,
            provenance,
        })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index with the largest probability, ties broken to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.probabilities)
    }

    /// Sample an index from the distribution by inverse CDF on one uniform
    /// draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, p) in self.probabilities.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        // Rounding can leave acc marginally below 1; charge the tail.
        self.probabilities.len() - 1
    }
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Sensitivity bounding
// ---------------------------------------------------------------------------

/// Min-max scale scores into `[0,1]` per decision:
/// `(s - min) / (max - min)`. When all scores are equal the output is all
/// zeros; any constant vector yields the same uniform mechanism, zeros are
/// chosen for determinism.
pub fn scale_scores(scores: &ScoreVector) -> ScoreVector {
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scaled = if max == min {
        vec![0.0; scores.len()]
    } else {
        let range = max - min;
        scores.iter().map(|s| (s - min) / range).collect()
    };
    ScoreVector(scaled)
}

/// Clip each private score into `[public_i - Δ/2, public_i + Δ/2]`:
/// `max(min(public + Δ/2, private), public - Δ/2)`.
pub fn clip_scores(private: &ScoreVector, public: &ScoreVector, delta: f64) -> Result<ScoreVector> {
    if private.len() != public.len() {
        return Err(Error::invalid_input(format!(
            "private and public score lengths differ: {} vs {}",
            private.len(),
            public.len()
        )));
    }
    if !delta.is_finite() || delta <= 0.0 {
        return Err(Error::invalid_parameter(format!(
            "clipping delta must be finite and strictly positive, got {delta}"
        )));
    }
    let half = delta / 2.0;
    let clipped = private
        .iter()
        .zip(public.iter())
        .map(|(s, p)| (p + half).min(*s).max(p - half))
        .collect();
    Ok(ScoreVector(clipped))
}

/// Apply a config's bounding mode. `public` is required for clipped bounding.
pub fn apply_bounding(
    config: &MechanismConfig,
    scores: &ScoreVector,
    public: Option<&ScoreVector>,
) -> Result<ScoreVector> {
    match config.bounding {
        Bounding::None => Ok(scores.clone()),
        Bounding::Scaled => Ok(scale_scores(scores)),
        Bounding::Clipped => {
            let public = public.ok_or_else(|| {
                Error::invalid_config("clipped bounding requires public scores at call time")
            })?;
            clip_scores(scores, public, config.delta)
        }
    }
}

// ---------------------------------------------------------------------------
// Closed-form distributions
// ---------------------------------------------------------------------------

/// Randomized Response selection distribution: probability
/// `e^ε / (a - 1 + e^ε)` on the argmax (ties to the lowest index) and
/// `1 / (a - 1 + e^ε)` elsewhere. A singleton vector maps to `[1]`; ε = 0
/// yields the uniform distribution.
pub fn rr_distribution(scores: &ScoreVector, epsilon: f64) -> Result<SelectionDistribution> {
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(Error::invalid_parameter(format!(
            "RR epsilon must be finite and non-negative, got {epsilon}"
        )));
    }
    let a = scores.len();
    if a == 1 {
        return SelectionDistribution::new(vec![1.0], Provenance::Exact);
    }
    let boost = epsilon.exp();
    if boost.is_infinite() {
        // e^eps overflows around eps = 710; the distribution's limit is the
        // point mass on the argmax.
        let mut probs = vec![0.0; a];
        probs[scores.argmax()] = 1.0;
        return SelectionDistribution::new(probs, Provenance::Exact);
    }
    let denom = (a - 1) as f64 + boost;
    let mut probs = vec![1.0 / denom; a];
    probs[scores.argmax()] = boost / denom;
    SelectionDistribution::new(probs, Provenance::Exact)
}

/// Exponential mechanism selection distribution:
/// `p_i = exp(s_i ε / 2Δ) / Σ_j exp(s_j ε / 2Δ)`, identical to SNM with
/// Gumbel noise at rate `ε / 2Δ`. Exponents are max-shifted before
/// exponentiation, which cancels in the ratio and avoids overflow.
pub fn exp_mech_distribution(
    scores: &ScoreVector,
    epsilon: f64,
    delta: f64,
) -> Result<SelectionDistribution> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::invalid_parameter(format!(
            "exponential mechanism epsilon must be strictly positive, got {epsilon}"
        )));
    }
    if !delta.is_finite() || delta <= 0.0 {
        return Err(Error::invalid_parameter(format!(
            "exponential mechanism delta must be strictly positive, got {delta}"
        )));
    }
    let rate = epsilon / (2.0 * delta);
    let max_exponent = scores
        .iter()
        .map(|s| s * rate)
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scores
        .iter()
        .map(|s| (s * rate - max_exponent).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    let probs = weights.iter().map(|w| w / total).collect();
    SelectionDistribution::new(probs, Provenance::Exact)
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// One draw from the given noise family at rate `β` (scale `1/β`):
/// Gumbel(location 0, scale 1/β), Exponential(mean 1/β), or
/// Laplace(location 0, scale 1/β). Deterministic given the stream state.
pub fn sample_noise<R: Rng + ?Sized>(noise: NoiseKind, rate: f64, rng: &mut R) -> Result<f64> {
    if !rate.is_finite() || rate <= 0.0 {
        return Err(Error::invalid_parameter(format!(
            "noise rate must be finite and strictly positive, got {rate}"
        )));
    }
    let scale = 1.0 / rate;
    let draw = match noise {
        NoiseKind::Gumbel => Gumbel::new(0.0, scale)
            .map_err(|e| Error::invalid_parameter(format!("gumbel: {e}")))?
            .sample(rng),
        NoiseKind::Exponential => Exp::new(rate)
            .map_err(|e| Error::invalid_parameter(format!("exponential: {e}")))?
            .sample(rng),
        NoiseKind::Laplace => {
            // Inverse CDF on u in [-1/2, 1/2): -scale * sgn(u) * ln(1 - 2|u|).
            let u: f64 = rng.gen::<f64>() - 0.5;
            let magnitude = (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE);
            -scale * u.signum() * magnitude.ln()
        }
    };
    Ok(draw)
}

/// Select Noisy Max: add one i.i.d. noise draw at rate `ε / 2Δ` to each score
/// and return the index of the largest noisy score (ties, a measure-zero
/// event, break to the lowest index). Scores must already be bounded per the
/// config; bounding is the caller's responsibility here.
pub fn snm_select<R: Rng + ?Sized>(
    scores: &ScoreVector,
    config: &MechanismConfig,
    rng: &mut R,
) -> Result<usize> {
    if config.kind != MechanismKind::Snm {
        return Err(Error::invalid_config(
            "snm_select requires a config with kind = snm",
        ));
    }
    config.validate()?;
    let rate = config.noise_rate();
    let mut best = 0usize;
    let mut best_noisy = f64::NEG_INFINITY;
    for (i, s) in scores.iter().enumerate() {
        let noisy = s + sample_noise(config.noise, rate, rng)?;
        if noisy > best_noisy {
            best_noisy = noisy;
            best = i;
        }
    }
    Ok(best)
}

/// Sample an index exactly from [`rr_distribution`].
pub fn rr_select<R: Rng + ?Sized>(
    scores: &ScoreVector,
    epsilon: f64,
    rng: &mut R,
) -> Result<usize> {
    let dist = rr_distribution(scores, epsilon)?;
    Ok(dist.sample(rng))
}

/// Run the configured mechanism once on scores that are already bounded.
pub(crate) fn select_bounded<R: Rng + ?Sized>(
    config: &MechanismConfig,
    bounded: &ScoreVector,
    rng: &mut R,
) -> Result<usize> {
    match config.kind {
        MechanismKind::Rr => rr_select(bounded, config.epsilon, rng),
        MechanismKind::Snm => snm_select(bounded, config, rng),
    }
}

/// Closed-form selection distribution on already-bounded scores, when the
/// configured mechanism has one (RR, and SNM with Gumbel noise).
pub(crate) fn closed_form_bounded(
    config: &MechanismConfig,
    bounded: &ScoreVector,
) -> Option<Result<SelectionDistribution>> {
    match (config.kind, config.noise) {
        (MechanismKind::Rr, _) => Some(rr_distribution(bounded, config.epsilon)),
        (MechanismKind::Snm, NoiseKind::Gumbel) => {
            Some(exp_mech_distribution(bounded, config.epsilon, config.delta))
        }
        _ => None,
    }
}

/// Monte Carlo estimate of the selection distribution on already-bounded
/// scores: normalized selection counts over `trials` runs.
pub(crate) fn estimate_bounded<R: Rng + ?Sized>(
    config: &MechanismConfig,
    bounded: &ScoreVector,
    trials: u64,
    rng: &mut R,
) -> Result<SelectionDistribution> {
    if trials == 0 {
        return Err(Error::invalid_parameter("trials must be at least 1"));
    }
    let mut counts = vec![0u64; bounded.len()];
    for _ in 0..trials {
        counts[select_bounded(config, bounded, rng)?] += 1;
    }
    let probs = counts.iter().map(|c| *c as f64 / trials as f64).collect();
    SelectionDistribution::new(probs, Provenance::Estimated(trials))
}

/// Monte Carlo selection distribution of a configured mechanism: applies the
/// config's bounding, then runs the mechanism `trials` times and returns
/// normalized frequencies.
pub fn estimate_distribution<R: Rng + ?Sized>(
    config: &MechanismConfig,
    scores: &ScoreVector,
    public: Option<&ScoreVector>,
    trials: u64,
    rng: &mut R,
) -> Result<SelectionDistribution> {
    config.validate()?;
    let bounded = apply_bounding(config, scores, public)?;
    estimate_bounded(config, &bounded, trials, rng)
}

/// Selection distribution of a configured mechanism on already-bounded
/// scores: exact where a closed form exists, otherwise Monte Carlo with
/// `trials` runs.
pub fn distribution_for_bounded<R: Rng + ?Sized>(
    config: &MechanismConfig,
    bounded: &ScoreVector,
    trials: u64,
    rng: &mut R,
) -> Result<SelectionDistribution> {
    match closed_form_bounded(config, bounded) {
        Some(dist) => dist,
        None => estimate_bounded(config, bounded, trials, rng),
    }
}

// ---------------------------------------------------------------------------
// Verification and evaluation
// ---------------------------------------------------------------------------

/// Outcome of one ε-DP ratio check; `max_abs_log_ratio` is the quantity to
/// compare against ε (plus statistical slack for estimated distributions).
#[derive(Debug, Clone)]
pub struct DpRatioReport {
    /// `max_i |ln(pA_i / pB_i)|` over indices where both sides are positive;
    /// infinite when exactly one side of some index has zero estimated mass.
    pub max_abs_log_ratio: f64,
    /// Index attaining the maximum.
    pub at_index: usize,
    /// The two probabilities at that index.
    pub prob_a: f64,
    pub prob_b: f64,
    /// Whether both distributions came from closed forms.
    pub exact: bool,
    /// Trials behind each side when Monte Carlo was used.
    pub trials: Option<u64>,
}

/// Empirical ε-DP check: selection distributions for two score vectors under
/// one mechanism config (same bounding, shared public scores for clipping),
/// reported as the maximum absolute log probability ratio across candidates.
///
/// Distributions are exact where closed forms exist and Monte Carlo
/// (`trials` runs per side) otherwise. An index with zero mass on exactly one
/// side is reported as an infinite ratio rather than an error.
pub fn verify_dp_ratio<R: Rng + ?Sized>(
    config: &MechanismConfig,
    scores_a: &ScoreVector,
    scores_b: &ScoreVector,
    public: Option<&ScoreVector>,
    trials: u64,
    rng: &mut R,
) -> Result<f64> {
    dp_ratio_report(config, scores_a, scores_b, public, trials, rng).map(|r| r.max_abs_log_ratio)
}

/// As [`verify_dp_ratio`], but returning the full report (attaining index,
/// probabilities, provenance) for diagnostics and slack computation.
pub fn dp_ratio_report<R: Rng + ?Sized>(
    config: &MechanismConfig,
    scores_a: &ScoreVector,
    scores_b: &ScoreVector,
    public: Option<&ScoreVector>,
    trials: u64,
    rng: &mut R,
) -> Result<DpRatioReport> {
    if scores_a.len() != scores_b.len() {
        return Err(Error::invalid_input(format!(
            "score vectors must have equal length: {} vs {}",
            scores_a.len(),
            scores_b.len()
        )));
    }
    config.validate()?;
    let bounded_a = apply_bounding(config, scores_a, public)?;
    let bounded_b = apply_bounding(config, scores_b, public)?;

    let exact = closed_form_bounded(config, &bounded_a).is_some();
    let (dist_a, dist_b) = if exact {
        (
            closed_form_bounded(config, &bounded_a).expect("checked")?,
            closed_form_bounded(config, &bounded_b).expect("checked")?,
        )
    } else {
        (
            estimate_bounded(config, &bounded_a, trials, rng)?,
            estimate_bounded(config, &bounded_b, trials, rng)?,
        )
    };

    let mut report = DpRatioReport {
        max_abs_log_ratio: 0.0,
        at_index: 0,
        prob_a: dist_a.probabilities()[0],
        prob_b: dist_b.probabilities()[0],
        exact,
        trials: if exact { None } else { Some(trials) },
    };
    for (i, (pa, pb)) in dist_a
        .probabilities()
        .iter()
        .zip(dist_b.probabilities())
        .enumerate()
    {
        let ratio = if *pa > 0.0 && *pb > 0.0 {
            (pa / pb).ln().abs()
        } else if *pa == 0.0 && *pb == 0.0 {
            continue;
        } else {
            // Mass on exactly one side: flagged as an infinite ratio.
            f64::INFINITY
        };
        if ratio > report.max_abs_log_ratio {
            report.max_abs_log_ratio = ratio;
            report.at_index = i;
            report.prob_a = *pa;
            report.prob_b = *pb;
        }
    }
    Ok(report)
}

/// Expected value of a selection distribution against aligned per-candidate
/// values: `Σ_i p_i · v_i`.
pub fn expected_value(dist: &SelectionDistribution, values: &ScoreVector) -> Result<f64> {
    if dist.len() != values.len() {
        return Err(Error::invalid_input(format!(
            "distribution and value lengths differ: {} vs {}",
            dist.len(),
            values.len()
        )));
    }
    Ok(dist
        .probabilities()
        .iter()
        .zip(values.iter())
        .map(|(p, v)| p * v)
        .sum())
}

/// Per-index Monte Carlo deviation bound `3 · sqrt(p (1 - p) / trials)`,
/// with `p` taken from a closed-form oracle where available.
pub fn mc_tolerance(p: f64, trials: u64) -> f64 {
    3.0 * (p * (1.0 - p) / trials as f64).sqrt()
}
