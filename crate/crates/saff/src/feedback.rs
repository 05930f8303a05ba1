//! Likert feedback model: aggregated evaluation, logit-normal interval
//! masses, score utilities, and the softmax feedback distribution.
//!
//! A participant weighs the six fairness differences of a tuple with a
//! preference weight `β` on the probability simplex, producing an aggregated
//! evaluation `ψ = β · φ` in [-1, 1] (0 = perceived fair, ±1 = maximally
//! unfair). The interval [-1, 1] is split into 14 equal cells whose
//! boundaries map through `z = Logit((1 + b) / 2)` into logit space. The
//! intrinsic evaluation is modeled as Normal(ψ, σ²) in logit space, so each
//! cell receives a Gaussian interval mass. Mirrored cell pairs share a Likert
//! score: score 7 covers the two central cells (fair), score 1 the two
//! outermost (unfair either way). The seven paired masses are the utilities,
//! and a softmax with temperature λ turns them into the score distribution.

use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::erf::erfc;
use crate::error::{Result, SaffError};
use crate::metrics::{FairnessProfile, Notion, NOTION_COUNT};

/// Number of Likert scores.
pub const LIKERT_SCORES: usize = 7;

/// Number of partition cells over [-1, 1].
pub const PARTITION_CELLS: usize = 14;

/// Tolerance on simplex membership for preference weights.
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// A preference weight `β` over the six fairness notions: entries in [0, 1]
/// summing to 1 within [`SIMPLEX_TOLERANCE`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PreferenceWeight([f64; NOTION_COUNT]);

impl PreferenceWeight {
    pub fn new(weights: [f64; NOTION_COUNT]) -> Result<Self> {
        let mut sum = 0.0;
        for (l, &w) in weights.iter().enumerate() {
            if !w.is_finite() || !(0.0..=1.0).contains(&w) {
                return Err(SaffError::invalid(format!(
                    "preference weight {l} outside [0, 1]: {w}"
                )));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(SaffError::invalid(format!(
                "preference weights sum to {sum}, expected 1"
            )));
        }
        Ok(PreferenceWeight(weights))
    }

    /// Equal preference over the six notions.
    pub fn uniform() -> Self {
        PreferenceWeight([1.0 / NOTION_COUNT as f64; NOTION_COUNT])
    }

    /// All weight on one notion.
    pub fn one_hot(notion: Notion) -> Self {
        let mut weights = [0.0; NOTION_COUNT];
        weights[notion.index()] = 1.0;
        PreferenceWeight(weights)
    }

    /// Six independent uniform(0, 1) draws, normalized to sum 1. An all-zero
    /// draw is redrawn.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let mut weights = [0.0; NOTION_COUNT];
            for w in weights.iter_mut() {
                *w = rng.gen::<f64>();
            }
            let sum: f64 = weights.iter().sum();
            if sum > 0.0 {
                for w in weights.iter_mut() {
                    *w /= sum;
                }
                return PreferenceWeight(weights);
            }
        }
    }

    pub fn weights(&self) -> &[f64; NOTION_COUNT] {
        &self.0
    }

    pub fn weight(&self, notion: Notion) -> f64 {
        self.0[notion.index()]
    }

    /// Notion with the largest weight; ties break toward the lowest index.
    pub fn argmax(&self) -> Notion {
        let mut best = Notion::ALL[0];
        for notion in Notion::ALL {
            if self.0[notion.index()] > self.0[best.index()] {
                best = notion;
            }
        }
        best
    }
}

/// β-weighted sum of the profile entries: `ψ = Σ_l β_l · φ_l`, in [-1, 1].
pub fn aggregate_evaluation(beta: &PreferenceWeight, phi: &FairnessProfile) -> f64 {
    beta.weights()
        .iter()
        .zip(phi.values.iter())
        .map(|(b, v)| b * v)
        .sum()
}

/// The fixed 14-cell partition of [-1, 1] and its logit-space image.
///
/// Raw boundaries are `b_i = -1 + i/7` for `i = 0..=14`; logit boundaries are
/// `z_i = Logit((1 + b_i) / 2)` with `z_0 = -inf` and `z_14 = +inf`. Both
/// arrays are built mirror-symmetric, so `z_{14-i} == -z_i` exactly.
#[derive(Clone, Debug)]
pub struct LikertPartition {
    raw: [f64; PARTITION_CELLS + 1],
    logit: [f64; PARTITION_CELLS + 1],
}

/// Width of one raw partition cell.
pub const PARTITION_WIDTH: f64 = 1.0 / 7.0;

/// Builds the fixed partition.
pub fn build_partition() -> LikertPartition {
    let mut raw = [0.0; PARTITION_CELLS + 1];
    let mut logit = [0.0; PARTITION_CELLS + 1];
    for i in 0..=PARTITION_CELLS / 2 {
        raw[i] = -1.0 + i as f64 * PARTITION_WIDTH;
        raw[PARTITION_CELLS - i] = -raw[i];
    }
    raw[PARTITION_CELLS / 2] = 0.0;
    logit[0] = f64::NEG_INFINITY;
    logit[PARTITION_CELLS] = f64::INFINITY;
    for i in 1..PARTITION_CELLS / 2 {
        // Logit((1 + b_i)/2) = ln(i / (14 - i)).
        logit[i] = (i as f64 / (PARTITION_CELLS - i) as f64).ln();
        logit[PARTITION_CELLS - i] = -logit[i];
    }
    logit[PARTITION_CELLS / 2] = 0.0;
    LikertPartition { raw, logit }
}

impl LikertPartition {
    /// Shared instance of the fixed partition.
    pub fn standard() -> &'static LikertPartition {
        static STANDARD: OnceLock<LikertPartition> = OnceLock::new();
        STANDARD.get_or_init(build_partition)
    }

    /// Boundaries `b_0..b_14` in [-1, 1].
    pub fn raw_boundaries(&self) -> &[f64; PARTITION_CELLS + 1] {
        &self.raw
    }

    /// Boundaries `z_0..z_14` in logit space.
    pub fn logit_boundaries(&self) -> &[f64; PARTITION_CELLS + 1] {
        &self.logit
    }
}

/// Model parameters: σ, the logit-space spread of the intrinsic evaluation,
/// and λ, the softmax temperature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeedbackParams {
    sigma: f64,
    lambda: f64,
}

impl FeedbackParams {
    pub fn new(sigma: f64, lambda: f64) -> Result<Self> {
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(SaffError::invalid(format!("sigma {sigma} must be > 0")));
        }
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(SaffError::invalid(format!("lambda {lambda} must be >= 0")));
        }
        Ok(FeedbackParams { sigma, lambda })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl Default for FeedbackParams {
    /// σ = 1, λ = 10.
    fn default() -> Self {
        FeedbackParams {
            sigma: 1.0,
            lambda: 10.0,
        }
    }
}

/// Gaussian mass of `[lo, hi]` under Normal(psi, sigma²), via `erfc` on
/// whichever side keeps the tail difference accurate.
fn gaussian_interval(lo: f64, hi: f64, psi: f64, sigma: f64) -> f64 {
    debug_assert!(lo < hi);
    let a = (lo - psi) / sigma;
    let b = (hi - psi) / sigma;
    if a == f64::NEG_INFINITY && b == f64::INFINITY {
        return 1.0;
    }
    let s = std::f64::consts::SQRT_2;
    // Symmetric branches keep V_i(psi) == V_{15-i}(-psi) bit-exact.
    if a + b > 0.0 {
        0.5 * (erfc(a / s) - erfc(b / s))
    } else {
        0.5 * (erfc(-b / s) - erfc(-a / s))
    }
}

/// Mass `V_i` of partition cell `i` (1-based, `1..=14`) under the logit-space
/// Gaussian centered at `psi` with spread `sigma`.
pub fn interval_mass(cell: usize, psi: f64, sigma: f64) -> f64 {
    assert!(
        (1..=PARTITION_CELLS).contains(&cell),
        "cell {cell} outside 1..=14"
    );
    assert!(sigma > 0.0, "sigma must be > 0");
    let z = LikertPartition::standard().logit_boundaries();
    gaussian_interval(z[cell - 1], z[cell], psi, sigma)
}

/// Utilities over the seven Likert scores; entries in [0, 1] summing to 1.
/// Index 0 is score 1 (unfair extremes), index 6 is score 7 (fair center).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UtilityVector([f64; LIKERT_SCORES]);

impl UtilityVector {
    /// Wraps raw values without validating the sum; [`utility_vector`] is the
    /// checked producer.
    pub fn from_raw(utilities: [f64; LIKERT_SCORES]) -> Self {
        UtilityVector(utilities)
    }

    pub fn utilities(&self) -> &[f64; LIKERT_SCORES] {
        &self.0
    }
}

/// Utility of each score: `u_i = V_i + V_{15-i}`, the mass of the mirrored
/// cell pair for score `i`.
pub fn utility_vector(psi: f64, sigma: f64) -> UtilityVector {
    assert!(sigma > 0.0, "sigma must be > 0");
    let z = LikertPartition::standard().logit_boundaries();
    let mut cells = [0.0; PARTITION_CELLS];
    for (i, mass) in cells.iter_mut().enumerate() {
        *mass = gaussian_interval(z[i], z[i + 1], psi, sigma);
    }
    let mut utilities = [0.0; LIKERT_SCORES];
    for i in 0..LIKERT_SCORES {
        utilities[i] = cells[i] + cells[PARTITION_CELLS - 1 - i];
    }
    UtilityVector(utilities)
}

/// A probability distribution over the seven Likert scores.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LikertDistribution([f64; LIKERT_SCORES]);

impl LikertDistribution {
    pub fn new(probabilities: [f64; LIKERT_SCORES]) -> Result<Self> {
        let mut sum = 0.0;
        for (i, &p) in probabilities.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(SaffError::invalid(format!(
                    "score probability {i} must be non-negative: {p}"
                )));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(SaffError::invalid(format!(
                "score probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(LikertDistribution(probabilities))
    }

    pub fn probabilities(&self) -> &[f64; LIKERT_SCORES] {
        &self.0
    }

    pub fn probability_of(&self, score: FeedbackScore) -> f64 {
        self.0[score.index()]
    }
}

/// Max-subtracted softmax of `lambda * values`.
pub(crate) fn softmax_scaled(values: &[f64; LIKERT_SCORES], lambda: f64) -> [f64; LIKERT_SCORES] {
    let mut scaled = [0.0; LIKERT_SCORES];
    for (out, &v) in scaled.iter_mut().zip(values.iter()) {
        *out = lambda * v;
    }
    let max = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in scaled.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in scaled.iter_mut() {
        *v /= sum;
    }
    scaled
}

/// Softmax feedback distribution `s̃_i = exp(λ u_i) / Σ_j exp(λ u_j)`.
pub fn feedback_distribution(utilities: &UtilityVector, lambda: f64) -> LikertDistribution {
    assert!(
        lambda.is_finite() && lambda >= 0.0,
        "lambda must be finite and >= 0"
    );
    LikertDistribution(softmax_scaled(utilities.utilities(), lambda))
}

/// A Likert score in 1..=7.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeedbackScore(u8);

impl FeedbackScore {
    pub fn new(score: u8) -> Result<Self> {
        if !(1..=LIKERT_SCORES as u8).contains(&score) {
            return Err(SaffError::invalid(format!("score {score} outside 1..=7")));
        }
        Ok(FeedbackScore(score))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// Zero-based position in a 7-vector.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }
}

/// Draws one score by inverse-CDF sampling; deterministic given the source.
pub fn sample_score<R: Rng + ?Sized>(dist: &LikertDistribution, rng: &mut R) -> FeedbackScore {
    let draw: f64 = rng.gen();
    let mut cumulative = 0.0;
    for (index, p) in dist.0.iter().enumerate() {
        cumulative += p;
        if draw < cumulative {
            return FeedbackScore(index as u8 + 1);
        }
    }
    FeedbackScore(LIKERT_SCORES as u8)
}

/// Learner initialization mode for the preference weight.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    /// Six uniform(0, 1) draws, normalized.
    Random,
    /// Equal preference, 1/6 everywhere.
    Uniform,
}
