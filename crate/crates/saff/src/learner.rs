//! Social preference learning: feedback regret, its analytic gradient, and
//! the projected-gradient loop.
//!
//! The learner fits one social preference weight `β` to observed Likert
//! scores by minimizing the feedback regret
//!
//! ```text
//! L(β) = (1/M) Σ_m (1/N) Σ_n ‖ onehot(s_{n,m}) − s̃_m(β) ‖²
//! ```
//!
//! where `s̃_m(β)` is the model's score distribution for tuple `m`. The
//! gradient chains per tuple: residual → softmax Jacobian → utility gradient
//! → profile, the last step because `∂ψ_m/∂β = φ_m`. Each epoch takes one
//! full-batch step and projects back onto the probability simplex.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SaffError};
use crate::feedback::{
    aggregate_evaluation, feedback_distribution, utility_vector, FeedbackParams, FeedbackScore,
    InitMode, LikertDistribution, LikertPartition, PreferenceWeight, UtilityVector, LIKERT_SCORES,
    PARTITION_CELLS,
};
use crate::metrics::{Attribute, FairnessProfile, NOTION_COUNT};

/// Unit basis vector with 1 at the score's position.
pub fn one_hot(score: FeedbackScore) -> [f64; LIKERT_SCORES] {
    let mut v = [0.0; LIKERT_SCORES];
    v[score.index()] = 1.0;
    v
}

/// An N×M matrix of Likert scores: participant `n` rated tuple `m`, for the
/// survey question about one sensitive attribute.
#[derive(Clone, Debug, PartialEq)]
pub struct ResponseSet {
    scores: Vec<Vec<FeedbackScore>>,
    attribute: Attribute,
}

impl ResponseSet {
    /// Builds the set from per-participant rows; rows must be non-empty and
    /// rectangular.
    pub fn new(scores: Vec<Vec<FeedbackScore>>, attribute: Attribute) -> Result<Self> {
        if scores.is_empty() {
            return Err(SaffError::invalid(
                "response set needs at least one participant",
            ));
        }
        let m = scores[0].len();
        if m == 0 {
            return Err(SaffError::invalid("response set needs at least one tuple"));
        }
        for (n, row) in scores.iter().enumerate() {
            if row.len() != m {
                return Err(SaffError::invalid(format!(
                    "participant {n} has {} scores, expected {m}",
                    row.len()
                )));
            }
        }
        Ok(ResponseSet { scores, attribute })
    }

    pub fn participant_count(&self) -> usize {
        self.scores.len()
    }

    pub fn tuple_count(&self) -> usize {
        self.scores[0].len()
    }

    pub fn attribute(&self) -> Attribute {
        self.attribute
    }

    pub fn score(&self, participant: usize, tuple: usize) -> FeedbackScore {
        self.scores[participant][tuple]
    }

    /// Mean one-hot response for tuple `m`: the empirical score distribution
    /// across participants.
    pub fn mean_one_hot(&self, tuple: usize) -> [f64; LIKERT_SCORES] {
        let mut mean = [0.0; LIKERT_SCORES];
        for row in &self.scores {
            mean[row[tuple].index()] += 1.0;
        }
        let n = self.scores.len() as f64;
        for v in mean.iter_mut() {
            *v /= n;
        }
        mean
    }
}

/// Average feedback regret of the social distributions against the observed
/// scores.
pub fn feedback_regret(responses: &ResponseSet, social: &[LikertDistribution]) -> Result<f64> {
    let m_count = responses.tuple_count();
    if social.len() != m_count {
        return Err(SaffError::invalid(format!(
            "{} social distributions for {} tuples",
            social.len(),
            m_count
        )));
    }
    let n_count = responses.participant_count();
    let mut total = 0.0;
    for (m, dist) in social.iter().enumerate() {
        let p = dist.probabilities();
        let mut tuple_sum = 0.0;
        for n in 0..n_count {
            let observed = one_hot(responses.score(n, m));
            let mut norm = 0.0;
            for i in 0..LIKERT_SCORES {
                let d = observed[i] - p[i];
                norm += d * d;
            }
            tuple_sum += norm;
        }
        total += tuple_sum / n_count as f64;
    }
    Ok(total / m_count as f64)
}

/// Social score distributions for every tuple at the given weight.
pub fn social_distributions(
    profiles: &[FairnessProfile],
    beta: &PreferenceWeight,
    params: &FeedbackParams,
) -> Vec<LikertDistribution> {
    profiles
        .iter()
        .map(|phi| {
            let psi = aggregate_evaluation(beta, phi);
            feedback_distribution(&utility_vector(psi, params.sigma()), params.lambda())
        })
        .collect()
}

/// Feedback regret evaluated directly at a weight.
pub fn regret_at(
    profiles: &[FairnessProfile],
    responses: &ResponseSet,
    beta: &PreferenceWeight,
    params: &FeedbackParams,
) -> Result<f64> {
    feedback_regret(responses, &social_distributions(profiles, beta, params))
}

/// Derivative of each utility with respect to ψ, in the compact
/// Gaussian-difference form: boundary densities enter with alternating sign
/// and the semi-infinite boundaries contribute nothing.
pub fn utility_gradient(psi: f64, sigma: f64) -> [f64; LIKERT_SCORES] {
    assert!(sigma > 0.0, "sigma must be > 0");
    let z = LikertPartition::standard().logit_boundaries();
    let scale = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    let density = |boundary: f64| -> f64 {
        if boundary.is_infinite() {
            0.0
        } else {
            let t = (boundary - psi) / sigma;
            (-0.5 * t * t).exp()
        }
    };
    let mut grad = [0.0; LIKERT_SCORES];
    for (idx, g) in grad.iter_mut().enumerate() {
        let i = idx + 1;
        // Mirror boundaries are paired so each difference cancels exactly at
        // psi = 0, where the utility is stationary.
        *g = scale
            * ((density(z[i - 1]) - density(z[PARTITION_CELLS - i + 1]))
                + (density(z[PARTITION_CELLS - i]) - density(z[i])));
    }
    grad
}

/// The same derivative written out with its erf terms and the `−ψ·u_i`
/// correction. Those terms cancel algebraically against each other, so this
/// must agree with [`utility_gradient`] to floating-point accuracy; it is
/// kept as a cross-check of that cancellation.
pub fn utility_gradient_erf_form(psi: f64, sigma: f64) -> [f64; LIKERT_SCORES] {
    assert!(sigma > 0.0, "sigma must be > 0");
    let z = LikertPartition::standard().logit_boundaries();
    let utilities = utility_vector(psi, sigma).utilities().to_owned();
    let sqrt_two_pi = (2.0 * std::f64::consts::PI).sqrt();
    let gauss = |boundary: f64| -> f64 {
        if boundary.is_infinite() {
            0.0
        } else {
            let t = (boundary - psi) / sigma;
            sigma / sqrt_two_pi * (-0.5 * t * t).exp()
        }
    };
    let erf_term = |boundary: f64| -> f64 {
        if boundary == f64::NEG_INFINITY {
            -1.0
        } else if boundary == f64::INFINITY {
            1.0
        } else {
            crate::erf::erf((boundary - psi) / (sigma * std::f64::consts::SQRT_2))
        }
    };
    let mut grad = [0.0; LIKERT_SCORES];
    for (idx, g) in grad.iter_mut().enumerate() {
        let i = idx + 1;
        let lower = i - 1;
        let upper = i;
        let mirror_lower = PARTITION_CELLS - i;
        let mirror_upper = PARTITION_CELLS - i + 1;
        *g = (gauss(z[lower]) - gauss(z[upper])
            + psi / 2.0 * (erf_term(z[upper]) - erf_term(z[lower]))
            - psi * utilities[idx]
            + gauss(z[mirror_lower])
            - gauss(z[mirror_upper])
            + psi / 2.0 * (erf_term(z[mirror_upper]) - erf_term(z[mirror_lower])))
            / (sigma * sigma);
    }
    grad
}

/// Jacobian `η` of the softmax distribution with respect to the utilities,
/// computed stably from the distribution itself:
/// `η = λ (diag(s̃) − s̃ s̃ᵀ)`.
pub fn softmax_jacobian(
    utilities: &UtilityVector,
    lambda: f64,
) -> [[f64; LIKERT_SCORES]; LIKERT_SCORES] {
    let dist = feedback_distribution(utilities, lambda);
    let p = dist.probabilities();
    let mut jac = [[0.0; LIKERT_SCORES]; LIKERT_SCORES];
    for i in 0..LIKERT_SCORES {
        for k in 0..LIKERT_SCORES {
            jac[i][k] = if i == k {
                lambda * p[i] * (1.0 - p[i])
            } else {
                -lambda * p[i] * p[k]
            };
        }
    }
    jac
}

/// Full-batch regret gradient, assembled per tuple:
///
/// ```text
/// ∇_β L = (2/M) Σ_m [ (s̃_m − s̄_m)ᵀ · η_m · (du_m/dψ) ] · φ_m
/// ```
///
/// with `s̄_m` the mean one-hot response for tuple `m`.
pub fn srg(
    responses: &ResponseSet,
    profiles: &[FairnessProfile],
    beta: &PreferenceWeight,
    params: &FeedbackParams,
) -> Result<[f64; NOTION_COUNT]> {
    let m_count = profiles.len();
    if m_count != responses.tuple_count() {
        return Err(SaffError::invalid(format!(
            "{} profiles for {} response tuples",
            m_count,
            responses.tuple_count()
        )));
    }
    let mut grad = [0.0; NOTION_COUNT];
    for (m, phi) in profiles.iter().enumerate() {
        let psi = aggregate_evaluation(beta, phi);
        let utilities = utility_vector(psi, params.sigma());
        let dist = feedback_distribution(&utilities, params.lambda());
        let jacobian = softmax_jacobian(&utilities, params.lambda());
        let du = utility_gradient(psi, params.sigma());
        let mean = responses.mean_one_hot(m);
        let p = dist.probabilities();
        let mut coefficient = 0.0;
        for i in 0..LIKERT_SCORES {
            let residual = p[i] - mean[i];
            let mut chained = 0.0;
            for k in 0..LIKERT_SCORES {
                chained += jacobian[i][k] * du[k];
            }
            coefficient += residual * chained;
        }
        coefficient *= 2.0;
        for (g, &v) in grad.iter_mut().zip(phi.values.iter()) {
            *g += coefficient * v;
        }
    }
    for g in grad.iter_mut() {
        *g /= m_count as f64;
    }
    Ok(grad)
}

/// Euclidean projection of an arbitrary finite vector onto the probability
/// simplex, by sort-and-threshold.
pub fn project_to_simplex(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(SaffError::invalid("cannot project an empty vector"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(SaffError::invalid("cannot project a non-finite vector"));
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (k, &w) in sorted.iter().enumerate() {
        cumulative += w;
        let candidate = (cumulative - 1.0) / (k + 1) as f64;
        if w - candidate > 0.0 {
            tau = candidate;
        }
    }
    Ok(v.iter().map(|&x| (x - tau).max(0.0)).collect())
}

/// Projection specialized to preference weights.
pub fn project_simplex(v: [f64; NOTION_COUNT]) -> Result<PreferenceWeight> {
    let projected = project_to_simplex(&v)?;
    let mut out = [0.0; NOTION_COUNT];
    out.copy_from_slice(&projected);
    PreferenceWeight::new(out)
}

/// Learner settings: step size and epoch count of the projected-gradient
/// loop, initialization mode and seed, and the feedback-model parameters.
#[derive(Clone, Copy, Debug)]
pub struct LearnerConfig {
    pub step_size: f64,
    pub epochs: usize,
    pub init_mode: InitMode,
    pub seed: u64,
    pub params: FeedbackParams,
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.step_size.is_finite() || self.step_size <= 0.0 {
            return Err(SaffError::invalid(format!(
                "step_size {} must be > 0",
                self.step_size
            )));
        }
        if self.epochs == 0 {
            return Err(SaffError::invalid("epochs must be >= 1"));
        }
        Ok(())
    }
}

impl Default for LearnerConfig {
    /// Step 0.1 for 20 epochs, random initialization.
    fn default() -> Self {
        LearnerConfig {
            step_size: 0.1,
            epochs: 20,
            init_mode: InitMode::Random,
            seed: 0,
            params: FeedbackParams::default(),
        }
    }
}

/// Trajectory of one learning run: `epochs + 1` weights (including the
/// initial one) and the regret evaluated at each pre-update weight.
#[derive(Clone, Debug)]
pub struct LearnRun {
    pub beta_trajectory: Vec<PreferenceWeight>,
    pub regret_trajectory: Vec<f64>,
    pub final_beta: PreferenceWeight,
}

impl LearnRun {
    pub fn initial_regret(&self) -> f64 {
        self.regret_trajectory[0]
    }

    pub fn final_regret(&self) -> f64 {
        *self.regret_trajectory.last().unwrap()
    }

    /// Fraction of the initial regret removed over the run; 0 when the
    /// initial regret is already 0.
    pub fn regret_reduction_ratio(&self) -> f64 {
        let first = self.initial_regret();
        if first == 0.0 {
            0.0
        } else {
            (first - self.final_regret()) / first
        }
    }
}

/// Runs the projected-gradient loop: each epoch evaluates the social
/// distributions at the current weight, records the regret, takes one
/// full-batch step along the negative gradient, and projects back onto the
/// simplex. Deterministic given the seed.
pub fn saff_learn(
    profiles: &[FairnessProfile],
    responses: &ResponseSet,
    config: &LearnerConfig,
) -> Result<LearnRun> {
    config.validate()?;
    if profiles.is_empty() {
        return Err(SaffError::invalid("saff_learn requires at least one tuple"));
    }
    if profiles.len() != responses.tuple_count() {
        return Err(SaffError::invalid(format!(
            "{} profiles for {} response tuples",
            profiles.len(),
            responses.tuple_count()
        )));
    }
    let mut beta = match config.init_mode {
        InitMode::Uniform => PreferenceWeight::uniform(),
        InitMode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            PreferenceWeight::random(&mut rng)
        }
    };
    let mut beta_trajectory = Vec::with_capacity(config.epochs + 1);
    let mut regret_trajectory = Vec::with_capacity(config.epochs);
    beta_trajectory.push(beta);
    for _ in 0..config.epochs {
        regret_trajectory.push(regret_at(profiles, responses, &beta, &config.params)?);
        let grad = srg(responses, profiles, &beta, &config.params)?;
        // A zero step keeps the weight bit-identical; projecting would only
        // add rounding noise.
        if grad.iter().any(|&g| g != 0.0) {
            let mut stepped = *beta.weights();
            for (w, g) in stepped.iter_mut().zip(grad.iter()) {
                *w -= config.step_size * g;
            }
            beta = project_simplex(stepped)?;
        }
        beta_trajectory.push(beta);
    }
    Ok(LearnRun {
        beta_trajectory,
        regret_trajectory,
        final_beta: beta,
    })
}
