//! Synthetic populations, data tuples, and Likert responses, plus the
//! convergence experiment grid.
//!
//! The tuple generator is a parameterized stand-in for real match data: it
//! samples recipient attributes uniformly, forms acceptance probabilities
//! from a base rate plus per-group offsets plus jitter, and draws surgeon
//! decisions as a noisy function of those probabilities. The offset knobs
//! control nothing beyond how far fairness profiles deviate from zero.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SaffError};
use crate::feedback::{
    aggregate_evaluation, feedback_distribution, sample_score, utility_vector, FeedbackParams,
    PreferenceWeight,
};
use crate::learner::{saff_learn, LearnerConfig, ResponseSet};
use crate::metrics::{
    Attribute, DataTuple, DonorRecord, FairnessProfile, Gender, GroupDefinitions, MatchRecord, Race,
};

/// The true preference weights of the simulated participants.
#[derive(Clone, Debug)]
pub struct Population {
    members: Vec<PreferenceWeight>,
}

impl Population {
    /// Samples `n` preference weights, each six normalized uniforms.
    pub fn sample<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        if n == 0 {
            return Err(SaffError::invalid("population size must be >= 1"));
        }
        Ok(Population {
            members: (0..n).map(|_| sample_preference(rng)).collect(),
        })
    }

    /// A population where every member shares the same weight.
    pub fn homogeneous(beta: PreferenceWeight, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(SaffError::invalid("population size must be >= 1"));
        }
        Ok(Population {
            members: vec![beta; n],
        })
    }

    pub fn members(&self) -> &[PreferenceWeight] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Six independent uniform(0, 1) draws, normalized to sum 1.
pub fn sample_preference<R: Rng + ?Sized>(rng: &mut R) -> PreferenceWeight {
    PreferenceWeight::random(rng)
}

/// Per-group acceptance-probability offsets for one attribute.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroupBias {
    pub privileged: f64,
    pub underprivileged: f64,
}

impl GroupBias {
    fn for_group(&self, privileged: bool) -> f64 {
        if privileged {
            self.privileged
        } else {
            self.underprivileged
        }
    }
}

/// Knobs of the synthetic tuple generator.
///
/// A record's acceptance probability is
/// `clamp(base_rate + offsets + jitter, 0, 1)` with the offsets summed over
/// the three attributes according to the record's group memberships and the
/// jitter uniform on ±`probability_jitter`. The surgeon decision is drawn
/// from `Bernoulli((1 − 2·decision_noise)·p + decision_noise)`, i.e. the
/// probability mixed toward a coin flip.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BiasConfig {
    /// Base acceptance rate, in (0, 1).
    pub base_rate: f64,
    /// Half-width of the uniform probability jitter, in [0, 0.5].
    pub probability_jitter: f64,
    /// Offsets per (attribute, group), each in [-0.5, 0.5].
    pub age: GroupBias,
    pub gender: GroupBias,
    pub race: GroupBias,
    /// Decision-noise rate in [0, 0.5]: 0 draws decisions from the
    /// acceptance probability itself, 0.5 from a fair coin.
    pub decision_noise: f64,
}

impl Default for BiasConfig {
    /// Moderate mixed-direction offsets, so each attribute's pooled profile
    /// is visibly nonzero, echoing the magnitudes real audits report.
    fn default() -> Self {
        BiasConfig {
            base_rate: 0.5,
            probability_jitter: 0.25,
            age: GroupBias {
                privileged: 0.15,
                underprivileged: -0.15,
            },
            gender: GroupBias {
                privileged: 0.1,
                underprivileged: -0.1,
            },
            race: GroupBias {
                privileged: -0.12,
                underprivileged: 0.12,
            },
            decision_noise: 0.1,
        }
    }
}

impl BiasConfig {
    /// Zero offsets and zero decision noise: both groups are exchangeable
    /// and pooled profiles concentrate at zero.
    pub fn unbiased() -> Self {
        BiasConfig {
            age: GroupBias::default(),
            gender: GroupBias::default(),
            race: GroupBias::default(),
            decision_noise: 0.0,
            ..BiasConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base_rate > 0.0 && self.base_rate < 1.0) {
            return Err(SaffError::invalid(format!(
                "base_rate {} outside (0, 1)",
                self.base_rate
            )));
        }
        if !(0.0..=0.5).contains(&self.probability_jitter) {
            return Err(SaffError::invalid(format!(
                "probability_jitter {} outside [0, 0.5]",
                self.probability_jitter
            )));
        }
        for (name, pair) in [
            ("age", self.age),
            ("gender", self.gender),
            ("race", self.race),
        ] {
            for (side, v) in [
                ("privileged", pair.privileged),
                ("underprivileged", pair.underprivileged),
            ] {
                if !(-0.5..=0.5).contains(&v) {
                    return Err(SaffError::invalid(format!(
                        "{name} {side} offset {v} outside [-0.5, 0.5]"
                    )));
                }
            }
        }
        if !(0.0..=0.5).contains(&self.decision_noise) {
            return Err(SaffError::invalid(format!(
                "decision_noise {} outside [0, 0.5]",
                self.decision_noise
            )));
        }
        Ok(())
    }
}

const DONOR_RACES: [&str; 5] = ["White", "Black", "Asian", "Hispanic", "Other"];

/// Generates `tuple_count` tuples of `pairs_per_tuple` records each.
///
/// Group memberships follow the default [`GroupDefinitions`]. When
/// `pairs_per_tuple >= 4` the first two records are pinned to the fully
/// privileged and fully underprivileged attribute combinations so that every
/// group is represented in every tuple.
pub fn generate_tuples<R: Rng + ?Sized>(
    tuple_count: usize,
    pairs_per_tuple: usize,
    bias: &BiasConfig,
    rng: &mut R,
) -> Result<Vec<DataTuple>> {
    bias.validate()?;
    if tuple_count == 0 {
        return Err(SaffError::invalid("tuple count must be >= 1"));
    }
    if pairs_per_tuple < 2 {
        return Err(SaffError::invalid("pairs per tuple must be >= 2"));
    }
    let groups = GroupDefinitions::default();
    let mut tuples = Vec::with_capacity(tuple_count);
    for t in 0..tuple_count {
        let donor = DonorRecord {
            donor_id: format!("d{:03}", t + 1),
            donor_age: rng.gen_range(18..=70),
            donor_race: DONOR_RACES[rng.gen_range(0..DONOR_RACES.len())].to_string(),
            donor_gender: if rng.gen::<bool>() { "Male" } else { "Female" }.to_string(),
            kdpi: rng.gen_range(0.0..=100.0),
        };
        let mut records = Vec::with_capacity(pairs_per_tuple);
        for k in 0..pairs_per_tuple {
            let (age, gender, race) = if pairs_per_tuple >= 4 && k == 0 {
                (
                    rng.gen_range(18..=groups.age_cutoff),
                    Gender::Male,
                    Race::Other,
                )
            } else if pairs_per_tuple >= 4 && k == 1 {
                (
                    rng.gen_range(groups.age_cutoff + 1..=80),
                    Gender::Female,
                    Race::Black,
                )
            } else {
                (
                    rng.gen_range(18..=80),
                    if rng.gen::<bool>() {
                        Gender::Male
                    } else {
                        Gender::Female
                    },
                    if rng.gen::<bool>() {
                        Race::Black
                    } else {
                        Race::Other
                    },
                )
            };
            let mut probability = bias.base_rate
                + bias.age.for_group(age <= groups.age_cutoff)
                + bias.gender.for_group(gender == groups.privileged_gender)
                + bias.race.for_group(race == groups.privileged_race);
            if bias.probability_jitter > 0.0 {
                probability += rng.gen_range(-bias.probability_jitter..=bias.probability_jitter);
            }
            let probability = probability.clamp(0.0, 1.0);
            let acceptance = (1.0 - 2.0 * bias.decision_noise) * probability + bias.decision_noise;
            let decision = rng.gen::<f64>() < acceptance;
            records.push(MatchRecord {
                recipient_id: format!("r{:03}", k + 1),
                recipient_age: age,
                recipient_race: race,
                recipient_gender: gender,
                epts: rng.gen_range(0.0..=100.0),
                distance: rng.gen_range(1.0..=300.0),
                arp_probability: probability,
                surgeon_decision: decision,
            });
        }
        let tuple = DataTuple {
            tuple_id: format!("t{:03}", t + 1),
            donor,
            records,
        };
        debug_assert!(tuple.validate().is_ok());
        tuples.push(tuple);
    }
    Ok(tuples)
}

/// Simulates the score each participant reports for each tuple: aggregate
/// the profile with the participant's weight, form the utilities and the
/// softmax distribution, draw one score. Participants are visited in order,
/// tuples inner, so output is deterministic given the source.
pub fn simulate_responses<R: Rng + ?Sized>(
    population: &Population,
    profiles: &[FairnessProfile],
    params: &FeedbackParams,
    attribute: Attribute,
    rng: &mut R,
) -> Result<ResponseSet> {
    if profiles.is_empty() {
        return Err(SaffError::invalid(
            "simulate_responses requires at least one profile",
        ));
    }
    let mut rows = Vec::with_capacity(population.len());
    for beta in population.members() {
        let mut row = Vec::with_capacity(profiles.len());
        for phi in profiles {
            let psi = aggregate_evaluation(beta, phi);
            let dist = feedback_distribution(&utility_vector(psi, params.sigma()), params.lambda());
            row.push(sample_score(&dist, rng));
        }
        rows.push(row);
    }
    ResponseSet::new(rows, attribute)
}

/// Experiment grid over participant counts and tuple counts, with repeated
/// re-sampling of population, tuples, and responses in every repetition.
#[derive(Clone, Debug)]
pub struct ExperimentGrid {
    pub participant_counts: Vec<usize>,
    pub tuple_counts: Vec<usize>,
    pub pairs_per_tuple: usize,
    pub repetitions: usize,
    pub attribute: Attribute,
    pub threshold: f64,
    pub groups: GroupDefinitions,
    pub bias: BiasConfig,
    pub learner: LearnerConfig,
    pub seed: u64,
}

impl Default for ExperimentGrid {
    /// N in {25, 50, 75, 100}, M in {5, 10, 15}, K = 10, 100 repetitions.
    fn default() -> Self {
        ExperimentGrid {
            participant_counts: vec![25, 50, 75, 100],
            tuple_counts: vec![5, 10, 15],
            pairs_per_tuple: 10,
            repetitions: 100,
            attribute: Attribute::Age,
            threshold: 0.5,
            groups: GroupDefinitions::default(),
            bias: BiasConfig::default(),
            learner: LearnerConfig::default(),
            seed: 0,
        }
    }
}

impl ExperimentGrid {
    pub fn validate(&self) -> Result<()> {
        if self.participant_counts.is_empty() || self.participant_counts.contains(&0) {
            return Err(SaffError::invalid("participant counts must be positive"));
        }
        if self.tuple_counts.is_empty() || self.tuple_counts.contains(&0) {
            return Err(SaffError::invalid("tuple counts must be positive"));
        }
        if self.pairs_per_tuple < 2 {
            return Err(SaffError::invalid("pairs per tuple must be >= 2"));
        }
        if self.repetitions == 0 {
            return Err(SaffError::invalid("repetitions must be >= 1"));
        }
        self.bias.validate()?;
        self.learner.validate()?;
        Ok(())
    }
}

/// Averaged regret curve for one (N, M) grid cell.
#[derive(Clone, Debug, Serialize)]
pub struct CellCurve {
    pub participants: usize,
    pub tuples: usize,
    pub repetitions: usize,
    /// Mean regret per epoch across repetitions.
    pub mean_regret: Vec<f64>,
    /// Sample standard deviation per epoch across repetitions.
    pub std_regret: Vec<f64>,
}

impl CellCurve {
    pub fn initial_mean(&self) -> f64 {
        self.mean_regret[0]
    }

    pub fn final_mean(&self) -> f64 {
        *self.mean_regret.last().unwrap()
    }
}

/// Stride separating the seed blocks of grid cells; repetitions within a
/// cell use consecutive seeds inside the block.
pub const CELL_SEED_STRIDE: u64 = 1_000_003;

/// Salt applied to a repetition seed to derive the learner's init seed.
const LEARNER_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Deterministic seed for one repetition of one grid cell.
pub fn repetition_seed(master: u64, cell_index: usize, repetition: usize) -> u64 {
    master
        .wrapping_add(CELL_SEED_STRIDE.wrapping_mul(cell_index as u64 + 1))
        .wrapping_add(repetition as u64)
}

/// Runs every (N, M) cell of the grid: each repetition re-samples the
/// population, the tuples, and the responses from its own seed, learns, and
/// the per-epoch regrets are averaged across repetitions.
pub fn run_grid(grid: &ExperimentGrid) -> Result<Vec<CellCurve>> {
    grid.validate()?;
    let spec = grid.groups.spec_for(grid.attribute, grid.threshold)?;
    let mut curves = Vec::new();
    let mut cell_index = 0;
    for &n in &grid.participant_counts {
        for &m in &grid.tuple_counts {
            let epochs = grid.learner.epochs;
            let mut mean = vec![0.0; epochs];
            let mut sq = vec![0.0; epochs];
            for rep in 0..grid.repetitions {
                let seed = repetition_seed(grid.seed, cell_index, rep);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let population = Population::sample(n, &mut rng)?;
                let tuples = generate_tuples(m, grid.pairs_per_tuple, &grid.bias, &mut rng)?;
                let profiles: Vec<FairnessProfile> = tuples
                    .iter()
                    .map(|t| crate::metrics::fairness_profile(t, &spec))
                    .collect();
                let responses = simulate_responses(
                    &population,
                    &profiles,
                    &grid.learner.params,
                    grid.attribute,
                    &mut rng,
                )?;
                let config = LearnerConfig {
                    seed: seed ^ LEARNER_SEED_SALT,
                    ..grid.learner
                };
                let run = saff_learn(&profiles, &responses, &config)?;
                for (e, &r) in run.regret_trajectory.iter().enumerate() {
                    mean[e] += r;
                    sq[e] += r * r;
                }
            }
            let reps = grid.repetitions as f64;
            let mut std = vec![0.0; epochs];
            for e in 0..epochs {
                mean[e] /= reps;
                let variance = if grid.repetitions > 1 {
                    ((sq[e] - reps * mean[e] * mean[e]) / (reps - 1.0)).max(0.0)
                } else {
                    0.0
                };
                std[e] = variance.sqrt();
            }
            curves.push(CellCurve {
                participants: n,
                tuples: m,
                repetitions: grid.repetitions,
                mean_regret: mean,
                std_regret: std,
            });
            cell_index += 1;
        }
    }
    Ok(curves)
}
