//! Report assembly and emission: audit JSON, preference JSON, regret and
//! learned-weight CSVs, grid curves.
//!
//! Emission is byte-deterministic for identical inputs: no timestamps, fixed
//! field order, and shortest round-trip float formatting.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Result, SaffError};
use crate::feedback::{InitMode, PreferenceWeight};
use crate::learner::LearnRun;
use crate::metrics::{
    fairness_profile, pooled_profile, Attribute, DataTuple, FairnessProfile, Notion, NOTION_COUNT,
    NOTION_LABELS,
};
use crate::sim::CellCurve;

use super::config::RunConfig;

/// One tuple's profile inside the audit report.
#[derive(Clone, Debug, Serialize)]
pub struct TupleProfile {
    pub tuple_id: String,
    pub values: [f64; NOTION_COUNT],
    pub undefined_flags: [bool; NOTION_COUNT],
}

/// Audit results for one sensitive attribute.
#[derive(Clone, Debug, Serialize)]
pub struct AttributeAudit {
    pub attribute: &'static str,
    /// Profile over the union of all records.
    pub pooled: FairnessProfile,
    /// Per-notion mean of the per-tuple profiles, over tuples where the
    /// notion is defined; 0 when it is defined nowhere.
    pub per_tuple_mean: [f64; NOTION_COUNT],
    /// How many tuples had each notion undefined.
    pub flag_counts: [usize; NOTION_COUNT],
    /// Tuples where every notion was undefined (single-group tuples).
    pub all_flagged_tuples: Vec<String>,
    pub tuples: Vec<TupleProfile>,
}

/// Fairness audit of a tuple file across the three attributes.
#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub notion_order: [&'static str; NOTION_COUNT],
    pub tuple_count: usize,
    pub attributes: Vec<AttributeAudit>,
    pub config: RunConfig,
}

/// Builds the audit report for the given attributes.
pub fn build_audit_report(
    tuples: &[DataTuple],
    attributes: &[Attribute],
    config: &RunConfig,
) -> Result<AuditReport> {
    if tuples.is_empty() {
        return Err(SaffError::invalid("audit requires at least one tuple"));
    }
    let mut audits = Vec::new();
    for &attribute in attributes {
        let spec = config.groups.spec_for(attribute, config.threshold)?;
        let profiles: Vec<(String, FairnessProfile)> = tuples
            .iter()
            .map(|t| (t.tuple_id.clone(), fairness_profile(t, &spec)))
            .collect();
        let pooled = pooled_profile(tuples, &spec)?;
        let mut sums = [0.0; NOTION_COUNT];
        let mut defined = [0usize; NOTION_COUNT];
        let mut flag_counts = [0usize; NOTION_COUNT];
        let mut all_flagged_tuples = Vec::new();
        for (tuple_id, profile) in &profiles {
            if profile.all_flagged() {
                all_flagged_tuples.push(tuple_id.clone());
            }
            for notion in Notion::ALL {
                let l = notion.index();
                if profile.is_undefined(notion) {
                    flag_counts[l] += 1;
                } else {
                    sums[l] += profile.value(notion);
                    defined[l] += 1;
                }
            }
        }
        let mut per_tuple_mean = [0.0; NOTION_COUNT];
        for l in 0..NOTION_COUNT {
            if defined[l] > 0 {
                per_tuple_mean[l] = sums[l] / defined[l] as f64;
            }
        }
        audits.push(AttributeAudit {
            attribute: attribute.label(),
            pooled,
            per_tuple_mean,
            flag_counts,
            all_flagged_tuples,
            tuples: profiles
                .into_iter()
                .map(|(tuple_id, p)| TupleProfile {
                    tuple_id,
                    values: p.values,
                    undefined_flags: p.undefined_flags,
                })
                .collect(),
        });
    }
    Ok(AuditReport {
        notion_order: NOTION_LABELS,
        tuple_count: tuples.len(),
        attributes: audits,
        config: config.clone(),
    })
}

/// Learned weights keyed by notion label, mirroring the tabular layout
/// `attribute x {SP, C, AE, EO, PE, OMR}`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct NamedWeights {
    #[serde(rename = "SP")]
    pub sp: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "AE")]
    pub ae: f64,
    #[serde(rename = "EO")]
    pub eo: f64,
    #[serde(rename = "PE")]
    pub pe: f64,
    #[serde(rename = "OMR")]
    pub omr: f64,
}

impl NamedWeights {
    pub fn from_weight(beta: &PreferenceWeight) -> Self {
        let w = beta.weights();
        NamedWeights {
            sp: w[0],
            c: w[1],
            ae: w[2],
            eo: w[3],
            pe: w[4],
            omr: w[5],
        }
    }

    pub fn as_array(&self) -> [f64; NOTION_COUNT] {
        [self.sp, self.c, self.ae, self.eo, self.pe, self.omr]
    }
}

/// Regret-reduction ratios of the two initialization modes on the same
/// instance; equal-preference starts sit near a flat region of the regret,
/// so their reduction is expected to be measurably smaller.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct InitDiagnostic {
    pub random_init_reduction_ratio: f64,
    pub uniform_init_reduction_ratio: f64,
}

/// Outcome of learning the social preference for one attribute.
#[derive(Clone, Debug, Serialize)]
pub struct PreferenceReport {
    pub attribute: &'static str,
    pub init_mode: InitMode,
    pub participants: usize,
    pub tuples: usize,
    pub final_beta: NamedWeights,
    pub preferred_notion: &'static str,
    pub regret_trajectory: Vec<f64>,
    pub regret_reduction_ratio: f64,
    pub init_diagnostic: InitDiagnostic,
    pub dropped_participants: Vec<String>,
    pub overall_mean_score: Option<f64>,
    pub config: RunConfig,
}

impl PreferenceReport {
    /// Assembles the report from the selected run plus the companion run
    /// with the other initialization.
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        attribute: Attribute,
        init_mode: InitMode,
        random_run: &LearnRun,
        uniform_run: &LearnRun,
        participants: usize,
        tuples: usize,
        dropped: Vec<String>,
        overall_mean_score: Option<f64>,
        config: &RunConfig,
    ) -> PreferenceReport {
        let main_run = match init_mode {
            InitMode::Random => random_run,
            InitMode::Uniform => uniform_run,
        };
        PreferenceReport {
            attribute: attribute.label(),
            init_mode,
            participants,
            tuples,
            final_beta: NamedWeights::from_weight(&main_run.final_beta),
            preferred_notion: main_run.final_beta.argmax().label(),
            regret_trajectory: main_run.regret_trajectory.clone(),
            regret_reduction_ratio: main_run.regret_reduction_ratio(),
            init_diagnostic: InitDiagnostic {
                random_init_reduction_ratio: random_run.regret_reduction_ratio(),
                uniform_init_reduction_ratio: uniform_run.regret_reduction_ratio(),
            },
            dropped_participants: dropped,
            overall_mean_score,
            config: config.clone(),
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| SaffError::invalid(format!("serialization failed: {e}")))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| SaffError::io(path, e))
}

fn ensure_dir(out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| SaffError::io(out_dir, e))
}

/// Writes `audit_report.json`.
pub fn write_audit_report(report: &AuditReport, out_dir: &Path) -> Result<PathBuf> {
    ensure_dir(out_dir)?;
    let path = out_dir.join("audit_report.json");
    write_json(&path, report)?;
    Ok(path)
}

/// Writes `preference_report_<attribute>.json` per report plus
/// `learned_beta.csv` and `regret_trajectory.csv`.
pub fn write_preference_reports(
    reports: &[PreferenceReport],
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    if reports.is_empty() {
        return Err(SaffError::invalid("no preference reports to write"));
    }
    ensure_dir(out_dir)?;
    let mut written = Vec::new();
    for report in reports {
        let path = out_dir.join(format!("preference_report_{}.json", report.attribute));
        write_json(&path, report)?;
        written.push(path);
    }

    let beta_path = out_dir.join("learned_beta.csv");
    {
        let mut writer = csv::Writer::from_path(&beta_path)
            .map_err(|e| SaffError::io(&beta_path, std::io::Error::other(e)))?;
        let mut header = vec!["attribute"];
        header.extend(NOTION_LABELS);
        writer
            .write_record(&header)
            .map_err(|e| SaffError::io(&beta_path, std::io::Error::other(e)))?;
        for report in reports {
            let mut row = vec![report.attribute.to_string()];
            row.extend(report.final_beta.as_array().iter().map(|v| v.to_string()));
            writer
                .write_record(&row)
                .map_err(|e| SaffError::io(&beta_path, std::io::Error::other(e)))?;
        }
        writer.flush().map_err(|e| SaffError::io(&beta_path, e))?;
    }
    written.push(beta_path);

    let regret_path = out_dir.join("regret_trajectory.csv");
    {
        let epochs = reports[0].regret_trajectory.len();
        if reports.iter().any(|r| r.regret_trajectory.len() != epochs) {
            return Err(SaffError::invalid(
                "preference reports disagree on epoch count",
            ));
        }
        let mut writer = csv::Writer::from_path(&regret_path)
            .map_err(|e| SaffError::io(&regret_path, std::io::Error::other(e)))?;
        let mut header = vec!["epoch".to_string()];
        header.extend(reports.iter().map(|r| r.attribute.to_string()));
        writer
            .write_record(&header)
            .map_err(|e| SaffError::io(&regret_path, std::io::Error::other(e)))?;
        for epoch in 0..epochs {
            let mut row = vec![epoch.to_string()];
            row.extend(
                reports
                    .iter()
                    .map(|r| r.regret_trajectory[epoch].to_string()),
            );
            writer
                .write_record(&row)
                .map_err(|e| SaffError::io(&regret_path, std::io::Error::other(e)))?;
        }
        writer.flush().map_err(|e| SaffError::io(&regret_path, e))?;
    }
    written.push(regret_path);
    Ok(written)
}

/// Per-cell summary inside the grid report.
#[derive(Clone, Debug, Serialize)]
pub struct CellSummary {
    pub participants: usize,
    pub tuples: usize,
    pub repetitions: usize,
    pub initial_mean_regret: f64,
    pub final_mean_regret: f64,
}

/// Summary of a grid run.
#[derive(Clone, Debug, Serialize)]
pub struct GridReport {
    pub cells: Vec<CellSummary>,
    pub config: RunConfig,
}

/// Writes `curves.csv` (per-epoch mean and standard deviation per cell) and
/// `grid_summary.json`.
pub fn write_grid_outputs(
    curves: &[CellCurve],
    config: &RunConfig,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    if curves.is_empty() {
        return Err(SaffError::invalid("no grid curves to write"));
    }
    ensure_dir(out_dir)?;
    let curves_path = out_dir.join("curves.csv");
    {
        let epochs = curves[0].mean_regret.len();
        let mut writer = csv::Writer::from_path(&curves_path)
            .map_err(|e| SaffError::io(&curves_path, std::io::Error::other(e)))?;
        let mut header = vec!["epoch".to_string()];
        for cell in curves {
            header.push(format!("N{}_M{}_mean", cell.participants, cell.tuples));
            header.push(format!("N{}_M{}_std", cell.participants, cell.tuples));
        }
        writer
            .write_record(&header)
            .map_err(|e| SaffError::io(&curves_path, std::io::Error::other(e)))?;
        for epoch in 0..epochs {
            let mut row = vec![epoch.to_string()];
            for cell in curves {
                row.push(cell.mean_regret[epoch].to_string());
                row.push(cell.std_regret[epoch].to_string());
            }
            writer
                .write_record(&row)
                .map_err(|e| SaffError::io(&curves_path, std::io::Error::other(e)))?;
        }
        writer.flush().map_err(|e| SaffError::io(&curves_path, e))?;
    }
    let summary_path = out_dir.join("grid_summary.json");
    let report = GridReport {
        cells: curves
            .iter()
            .map(|c| CellSummary {
                participants: c.participants,
                tuples: c.tuples,
                repetitions: c.repetitions,
                initial_mean_regret: c.initial_mean(),
                final_mean_regret: c.final_mean(),
            })
            .collect(),
        config: config.clone(),
    };
    write_json(&summary_path, &report)?;
    Ok(vec![curves_path, summary_path])
}

/// Everything a run may emit.
#[derive(Default)]
pub struct RunOutputs {
    pub audit: Option<AuditReport>,
    pub preferences: Vec<PreferenceReport>,
    pub curves: Vec<CellCurve>,
    pub grid_config: Option<RunConfig>,
}

/// Writes every present output into `out_dir` and returns the paths.
pub fn emit_reports(outputs: &RunOutputs, out_dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    let mut written = Vec::new();
    if let Some(audit) = &outputs.audit {
        written.push(write_audit_report(audit, out_dir)?);
    }
    if !outputs.preferences.is_empty() {
        written.extend(write_preference_reports(&outputs.preferences, out_dir)?);
    }
    if !outputs.curves.is_empty() {
        let config = outputs.grid_config.clone().unwrap_or_default();
        written.extend(write_grid_outputs(&outputs.curves, &config, out_dir)?);
    }
    Ok(written)
}
