//! `saff` command line: audit fairness profiles, learn social preferences
//! from survey responses, run the simulated convergence grid, and verify the
//! analytic gradient.
//!
//! On failure a machine-readable line `{"category": ..., "message": ...}` is
//! printed to stderr and the process exits with the category's code
//! (validation 3, config 4, io 5).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use saff::feedback::InitMode;
use saff::gradcheck::{run_gradcheck, GradCheckConfig};
use saff::io::responses::Question;
use saff::io::{
    build_audit_report, load_responses, load_tuples, write_audit_report, write_grid_outputs,
    write_preference_reports, write_responses, write_tuples, PreferenceReport, RunConfig,
};
use saff::learner::{saff_learn, LearnerConfig};
use saff::metrics::{fairness_profile, Attribute, FairnessProfile, Notion};
use saff::sim::{generate_tuples, run_grid, simulate_responses, Population};
use saff::SaffError;

#[derive(Parser)]
#[command(
    name = "saff",
    version,
    about = "Group-fairness auditing and social preference learning from Likert feedback"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AttributeArg {
    Age,
    Gender,
    Race,
    All,
}

impl AttributeArg {
    fn selection(self) -> Vec<Attribute> {
        match self {
            AttributeArg::Age => vec![Attribute::Age],
            AttributeArg::Gender => vec![Attribute::Gender],
            AttributeArg::Race => vec![Attribute::Race],
            AttributeArg::All => Attribute::ALL.to_vec(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute per-tuple and pooled fairness profiles for a tuple file.
    Audit {
        /// Tuple CSV.
        #[arg(long)]
        tuples: PathBuf,
        /// Configuration JSON; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Learn the social preference weight from survey responses.
    Learn {
        /// Tuple CSV.
        #[arg(long)]
        tuples: PathBuf,
        /// Response CSV.
        #[arg(long)]
        responses: PathBuf,
        /// Attribute question to learn from (default: configured, else all).
        #[arg(long)]
        attribute: Option<AttributeArg>,
        /// Configuration JSON; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Overrides the configured seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Generate synthetic data and run the convergence experiment grid.
    Simulate {
        /// Configuration JSON; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Overrides the configured seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Verify the analytic regret gradient against finite differences.
    Gradcheck {
        /// Number of random instances.
        #[arg(long, default_value_t = 100)]
        instances: usize,
        /// Seed of the instance stream.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            let payload = serde_json::json!({
                "category": error.category(),
                "message": error.to_string(),
            });
            eprintln!("{payload}");
            ExitCode::from(error.exit_code() as u8)
        }
    }
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<RunConfig, SaffError> {
    let mut config = match path {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = seed {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn format_beta(profile_like: &[f64]) -> String {
    Notion::ALL
        .iter()
        .zip(profile_like.iter())
        .map(|(n, v)| format!("{}={v:.3}", n.label()))
        .collect::<Vec<_>>()
        .join(" ")
}

fn run(command: Command) -> Result<(), SaffError> {
    match command {
        Command::Audit {
            tuples,
            config,
            out,
        } => audit(&tuples, config.as_deref(), &out),
        Command::Learn {
            tuples,
            responses,
            attribute,
            config,
            out,
            seed,
        } => learn(
            &tuples,
            &responses,
            attribute,
            config.as_deref(),
            &out,
            seed,
        ),
        Command::Simulate { config, out, seed } => simulate(config.as_deref(), &out, seed),
        Command::Gradcheck { instances, seed } => gradcheck(instances, seed),
    }
}

fn audit(tuples_path: &Path, config_path: Option<&Path>, out: &Path) -> Result<(), SaffError> {
    let config = load_config(config_path, None)?;
    let tuples = load_tuples(tuples_path)?;
    let attributes = config.selected_attributes();
    let report = build_audit_report(&tuples, &attributes, &config)?;
    for audit in &report.attributes {
        println!(
            "pooled profile ({}): {}",
            audit.attribute,
            format_beta(&audit.pooled.values)
        );
        for tuple_id in &audit.all_flagged_tuples {
            eprintln!(
                "warning: tuple {tuple_id} has every record in one {} group; all six notions flagged",
                audit.attribute
            );
        }
    }
    let path = write_audit_report(&report, out)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn learn(
    tuples_path: &Path,
    responses_path: &Path,
    attribute: Option<AttributeArg>,
    config_path: Option<&Path>,
    out: &Path,
    seed: Option<u64>,
) -> Result<(), SaffError> {
    let config = load_config(config_path, seed)?;
    let tuples = load_tuples(tuples_path)?;
    let loaded = load_responses(responses_path, &tuples)?;
    for participant in &loaded.dropped {
        eprintln!("warning: participant {participant} dropped (incomplete response grid)");
    }
    let attributes = match attribute {
        Some(arg) => arg.selection(),
        None => config.selected_attributes(),
    };

    let params = config.feedback_params()?;
    let mut reports = Vec::new();
    for attr in attributes {
        let responses = loaded.response_set(attr).ok_or_else(|| {
            SaffError::invalid(format!(
                "{}: no '{}' question present",
                responses_path.display(),
                Question::from_attribute(attr).label()
            ))
        })?;
        let spec = config.groups.spec_for(attr, config.threshold)?;
        let profiles: Vec<FairnessProfile> =
            tuples.iter().map(|t| fairness_profile(t, &spec)).collect();
        let base = LearnerConfig {
            step_size: config.step_size,
            epochs: config.epochs,
            init_mode: InitMode::Random,
            seed: config.seed,
            params,
        };
        let random_run = saff_learn(&profiles, &responses, &base)?;
        let uniform_run = saff_learn(
            &profiles,
            &responses,
            &LearnerConfig {
                init_mode: InitMode::Uniform,
                ..base
            },
        )?;
        let report = PreferenceReport::build(
            attr,
            config.init_mode,
            &random_run,
            &uniform_run,
            responses.participant_count(),
            tuples.len(),
            loaded.dropped.clone(),
            loaded.overall_mean(),
            &config,
        );
        println!(
            "learned social preference ({}): {}",
            report.attribute,
            format_beta(&report.final_beta.as_array())
        );
        println!(
            "  preferred notion {}; regret {:.4} -> {:.4} ({} epochs)",
            report.preferred_notion,
            report.regret_trajectory.first().unwrap(),
            report.regret_trajectory.last().unwrap(),
            config.epochs
        );
        reports.push(report);
    }
    let written = write_preference_reports(&reports, out)?;
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

/// Salt separating the emitted sample's random stream from the grid cells'.
const SAMPLE_SEED_SALT: u64 = 0x5aff_0000_0000_0001;

fn simulate(config_path: Option<&Path>, out: &Path, seed: Option<u64>) -> Result<(), SaffError> {
    let config = load_config(config_path, seed)?;
    let grid = config.experiment_grid()?;
    let curves = run_grid(&grid)?;
    for cell in &curves {
        println!(
            "N={} M={}: mean regret {:.4} -> {:.4} over {} repetitions",
            cell.participants,
            cell.tuples,
            cell.initial_mean(),
            cell.final_mean(),
            cell.repetitions
        );
    }

    // One representative synthetic dataset at the largest grid sizes, for
    // downstream `learn` runs.
    let n_sample = *grid.participant_counts.iter().max().unwrap();
    let m_sample = *grid.tuple_counts.iter().max().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ SAMPLE_SEED_SALT);
    let tuples = generate_tuples(m_sample, grid.pairs_per_tuple, &config.bias, &mut rng)?;
    let population = Population::sample(n_sample, &mut rng)?;
    let participants: Vec<String> = (1..=n_sample).map(|p| format!("p{p:04}")).collect();
    let mut matrices = Vec::new();
    for attr in Attribute::ALL {
        let spec = config.groups.spec_for(attr, config.threshold)?;
        let profiles: Vec<FairnessProfile> =
            tuples.iter().map(|t| fairness_profile(t, &spec)).collect();
        let params = config.feedback_params()?;
        let responses = simulate_responses(&population, &profiles, &params, attr, &mut rng)?;
        let rows: Vec<Vec<saff::feedback::FeedbackScore>> = (0..responses.participant_count())
            .map(|n| {
                (0..responses.tuple_count())
                    .map(|m| responses.score(n, m))
                    .collect()
            })
            .collect();
        matrices.push((Question::from_attribute(attr), rows));
    }

    std::fs::create_dir_all(out).map_err(|e| SaffError::io(out, e))?;
    let tuples_path = out.join("synthetic_tuples.csv");
    write_tuples(&tuples_path, &tuples)?;
    let responses_path = out.join("synthetic_responses.csv");
    let matrix_refs: Vec<(Question, &Vec<Vec<saff::feedback::FeedbackScore>>)> =
        matrices.iter().map(|(q, m)| (*q, m)).collect();
    write_responses(&responses_path, &tuples, &participants, &matrix_refs)?;
    let written = write_grid_outputs(&curves, &config, out)?;
    println!("wrote {}", tuples_path.display());
    println!("wrote {}", responses_path.display());
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn gradcheck(instances: usize, seed: u64) -> Result<(), SaffError> {
    if instances == 0 {
        return Err(SaffError::invalid("instances must be >= 1"));
    }
    let config = GradCheckConfig {
        instances,
        seed,
        ..GradCheckConfig::default()
    };
    let report = run_gradcheck(&config)?;
    println!(
        "gradcheck: {} instances, max relative error {:.3e}, mean {:.3e} (tolerance {:.0e})",
        report.instances, report.max_relative_error, report.mean_relative_error, report.tolerance
    );
    if report.passed() {
        println!("gradcheck: PASS");
        Ok(())
    } else {
        Err(SaffError::invalid(format!(
            "gradient check failed: max relative error {:.3e} exceeds {:.0e}",
            report.max_relative_error, report.tolerance
        )))
    }
}
