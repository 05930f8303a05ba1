//! Finite-difference verification of the analytic regret gradient.
//!
//! Random instances pair generated tuples with simulated responses; on each
//! one the analytic gradient is compared against central finite differences
//! of the regret taken along feasible simplex directions (`e_k − e_last`,
//! which keep the weight on the simplex).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::feedback::{FeedbackParams, PreferenceWeight};
use crate::learner::{regret_at, srg, ResponseSet};
use crate::metrics::{
    fairness_profile, Attribute, FairnessProfile, GroupDefinitions, NOTION_COUNT,
};
use crate::sim::{generate_tuples, simulate_responses, BiasConfig, GroupBias, Population};

/// Settings of the verification run.
#[derive(Clone, Copy, Debug)]
pub struct GradCheckConfig {
    /// Number of random instances.
    pub instances: usize,
    pub seed: u64,
    /// Central-difference step.
    pub step: f64,
    /// Maximum admissible relative error.
    pub tolerance: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            instances: 100,
            seed: 0,
            step: 1e-6,
            tolerance: 1e-5,
        }
    }
}

/// Outcome of a verification run.
#[derive(Clone, Copy, Debug)]
pub struct GradCheckReport {
    pub instances: usize,
    pub max_relative_error: f64,
    pub mean_relative_error: f64,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_relative_error < self.tolerance
    }
}

/// Relative error between the analytic tangent gradient and its
/// finite-difference estimate on one instance.
pub fn tangent_gradient_error(
    profiles: &[FairnessProfile],
    responses: &ResponseSet,
    beta: &PreferenceWeight,
    params: &FeedbackParams,
    step: f64,
) -> Result<f64> {
    let analytic = srg(responses, profiles, beta, params)?;
    let mut fd = [0.0; NOTION_COUNT - 1];
    let mut an = [0.0; NOTION_COUNT - 1];
    for k in 0..NOTION_COUNT - 1 {
        let mut plus = *beta.weights();
        plus[k] += step;
        plus[NOTION_COUNT - 1] -= step;
        let mut minus = *beta.weights();
        minus[k] -= step;
        minus[NOTION_COUNT - 1] += step;
        let up = regret_at(profiles, responses, &PreferenceWeight::new(plus)?, params)?;
        let down = regret_at(profiles, responses, &PreferenceWeight::new(minus)?, params)?;
        fd[k] = (up - down) / (2.0 * step);
        an[k] = analytic[k] - analytic[NOTION_COUNT - 1];
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = fd.iter().zip(an.iter()).map(|(a, b)| a - b).collect();
    let denominator = norm(&fd).max(norm(&an)).max(1e-8);
    Ok(norm(&diff) / denominator)
}

/// Draws a weight whose smallest entry is at least `margin`, so symmetric
/// perturbations of size `step << margin` stay feasible.
fn interior_weight<R: Rng + ?Sized>(rng: &mut R, margin: f64) -> PreferenceWeight {
    loop {
        let beta = PreferenceWeight::random(rng);
        if beta.weights().iter().all(|&w| w >= margin) {
            return beta;
        }
    }
}

fn random_bias<R: Rng + ?Sized>(rng: &mut R) -> BiasConfig {
    fn pair<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> GroupBias {
        GroupBias {
            privileged: rng.gen_range(-scale..=scale),
            underprivileged: rng.gen_range(-scale..=scale),
        }
    }
    BiasConfig {
        base_rate: rng.gen_range(0.35..=0.65),
        probability_jitter: rng.gen_range(0.15..=0.3),
        age: pair(rng, 0.15),
        gender: pair(rng, 0.15),
        race: pair(rng, 0.15),
        decision_noise: rng.gen_range(0.0..=0.3),
    }
}

/// Runs the configured number of random instances (N ≤ 10 participants,
/// M ≤ 5 tuples, K = 10 pairs, σ in [0.3, 2], λ in [1, 20]) and reports the
/// worst relative error.
pub fn run_gradcheck(config: &GradCheckConfig) -> Result<GradCheckReport> {
    let groups = GroupDefinitions::default();
    let mut max_error = 0.0f64;
    let mut sum_error = 0.0f64;
    for instance in 0..config.instances {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(instance as u64));
        let n = rng.gen_range(1..=10);
        let m = rng.gen_range(1..=5);
        let bias = random_bias(&mut rng);
        let tuples = generate_tuples(m, 10, &bias, &mut rng)?;
        let attribute = Attribute::ALL[rng.gen_range(0..Attribute::ALL.len())];
        let spec = groups.spec_for(attribute, 0.5)?;
        let profiles: Vec<FairnessProfile> =
            tuples.iter().map(|t| fairness_profile(t, &spec)).collect();
        let params = FeedbackParams::new(rng.gen_range(0.3..=2.0), rng.gen_range(1.0..=20.0))?;
        let population = Population::sample(n, &mut rng)?;
        let responses = simulate_responses(&population, &profiles, &params, attribute, &mut rng)?;
        let beta = interior_weight(&mut rng, 0.02);
        let error = tangent_gradient_error(&profiles, &responses, &beta, &params, config.step)?;
        max_error = max_error.max(error);
        sum_error += error;
    }
    Ok(GradCheckReport {
        instances: config.instances,
        max_relative_error: max_error,
        mean_relative_error: sum_error / config.instances.max(1) as f64,
        tolerance: config.tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a_short_run_passes_the_tolerance() {
        let config = GradCheckConfig {
            instances: 20,
            seed: 7,
            ..GradCheckConfig::default()
        };
        let report = run_gradcheck(&config).unwrap();
        assert!(
            report.passed(),
            "max relative error {}",
            report.max_relative_error
        );
    }

    #[test]
    fn reports_are_reproducible() {
        let config = GradCheckConfig {
            instances: 5,
            seed: 11,
            ..GradCheckConfig::default()
        };
        let a = run_gradcheck(&config).unwrap();
        let b = run_gradcheck(&config).unwrap();
        assert_eq!(a.max_relative_error, b.max_relative_error);
    }
}
