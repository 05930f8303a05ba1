//! End-to-end pipeline through the public API: generate data, write it to
//! disk, reload it, learn, and emit reports.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use saff::feedback::{FeedbackParams, InitMode};
use saff::io::responses::Question;
use saff::io::{
    build_audit_report, emit_reports, load_responses, load_tuples, write_responses, write_tuples,
    PreferenceReport, RunConfig, RunOutputs,
};
use saff::learner::{saff_learn, LearnerConfig};
use saff::metrics::{fairness_profile, Attribute, FairnessProfile};
use saff::sim::{generate_tuples, simulate_responses, BiasConfig, Population};

#[test]
fn generated_data_survives_the_disk_round_trip_and_learns() {
    let dir = tempfile::tempdir().unwrap();
    let config = RunConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(17);

    let tuples = generate_tuples(6, 10, &BiasConfig::default(), &mut rng).unwrap();
    let population = Population::sample(12, &mut rng).unwrap();
    let params = FeedbackParams::default();

    // Simulate one response matrix per attribute question.
    let participants: Vec<String> = (1..=12).map(|p| format!("p{p:03}")).collect();
    let mut matrices = Vec::new();
    for attribute in Attribute::ALL {
        let spec = config.groups.spec_for(attribute, config.threshold).unwrap();
        let profiles: Vec<FairnessProfile> =
            tuples.iter().map(|t| fairness_profile(t, &spec)).collect();
        let set = simulate_responses(&population, &profiles, &params, attribute, &mut rng).unwrap();
        let rows: Vec<Vec<saff::feedback::FeedbackScore>> = (0..set.participant_count())
            .map(|n| (0..set.tuple_count()).map(|m| set.score(n, m)).collect())
            .collect();
        matrices.push((Question::from_attribute(attribute), rows));
    }

    let tuples_path = dir.path().join("tuples.csv");
    write_tuples(&tuples_path, &tuples).unwrap();
    let responses_path = dir.path().join("responses.csv");
    let matrix_refs: Vec<_> = matrices.iter().map(|(q, m)| (*q, m)).collect();
    write_responses(&responses_path, &tuples, &participants, &matrix_refs).unwrap();

    // Reload: everything must round-trip.
    let reloaded_tuples = load_tuples(&tuples_path).unwrap();
    assert_eq!(tuples, reloaded_tuples);
    let loaded = load_responses(&responses_path, &reloaded_tuples).unwrap();
    assert_eq!(loaded.participants, participants);
    assert!(loaded.dropped.is_empty());

    // Learn for every attribute and emit the full report set.
    let mut preference_reports = Vec::new();
    for attribute in Attribute::ALL {
        let responses = loaded.response_set(attribute).unwrap();
        let spec = config.groups.spec_for(attribute, config.threshold).unwrap();
        let profiles: Vec<FairnessProfile> = reloaded_tuples
            .iter()
            .map(|t| fairness_profile(t, &spec))
            .collect();
        let base = LearnerConfig {
            step_size: config.step_size,
            epochs: config.epochs,
            init_mode: InitMode::Random,
            seed: config.seed,
            params,
        };
        let random_run = saff_learn(&profiles, &responses, &base).unwrap();
        let uniform_run = saff_learn(
            &profiles,
            &responses,
            &LearnerConfig {
                init_mode: InitMode::Uniform,
                ..base
            },
        )
        .unwrap();
        preference_reports.push(PreferenceReport::build(
            attribute,
            config.init_mode,
            &random_run,
            &uniform_run,
            responses.participant_count(),
            profiles.len(),
            loaded.dropped.clone(),
            loaded.overall_mean(),
            &config,
        ));
    }

    let outputs = RunOutputs {
        audit: Some(build_audit_report(&reloaded_tuples, &Attribute::ALL, &config).unwrap()),
        preferences: preference_reports,
        ..RunOutputs::default()
    };
    let out_dir = dir.path().join("reports");
    let written = emit_reports(&outputs, &out_dir).unwrap();
    assert!(written.iter().any(|p| p.ends_with("audit_report.json")));
    assert!(written.iter().any(|p| p.ends_with("learned_beta.csv")));
    assert!(written.iter().any(|p| p.ends_with("regret_trajectory.csv")));
    for attribute in Attribute::ALL {
        let name = format!("preference_report_{}.json", attribute.label());
        assert!(written.iter().any(|p| p.ends_with(&name)), "{name}");
    }
}
