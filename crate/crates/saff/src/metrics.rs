//! Group-fairness rates and signed differences over donor-recipient match
//! records.
//!
//! A predictor's output for one donor is audited as a *data tuple*: the donor
//! plus `K` candidate recipients, each carrying the surgeon's decision `y` and
//! the predicted acceptance probability behind `ŷ`. Six group-fairness
//! notions compare a groupwise rate between a privileged and an
//! underprivileged recipient group; the signed differences form a
//! [`FairnessProfile`].
//!
//! Rates are counted in exact integer arithmetic ([`RateCounts`]) and become
//! floating point only when a profile is assembled.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SaffError};

/// Number of group-fairness notions tracked in a profile.
pub const NOTION_COUNT: usize = 6;

/// Labels for the profile entries, in order.
pub const NOTION_LABELS: [&str; NOTION_COUNT] = ["SP", "C", "AE", "EO", "PE", "OMR"];

/// The six group-fairness notions, in profile order.
///
/// Writing `y` for the surgeon decision, `ŷ` for the binarized prediction,
/// and conditioning on membership in one group, the groupwise rates are:
///
/// | notion | rate |
/// |--------|------|
/// | SP  | P(ŷ=1) |
/// | C   | P(y=1 \| ŷ=1) |
/// | AE  | P(ŷ=y) |
/// | EO  | P(ŷ=1 \| y=1) |
/// | PE  | P(ŷ=1 \| y=0) |
/// | OMR | P(ŷ=0 \| y=1) |
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Notion {
    StatisticalParity,
    Calibration,
    AccuracyEquality,
    EqualOpportunity,
    PredictiveEquality,
    OverallMisclassificationRate,
}

impl Notion {
    pub const ALL: [Notion; NOTION_COUNT] = [
        Notion::StatisticalParity,
        Notion::Calibration,
        Notion::AccuracyEquality,
        Notion::EqualOpportunity,
        Notion::PredictiveEquality,
        Notion::OverallMisclassificationRate,
    ];

    /// Position of this notion in a profile vector.
    pub fn index(self) -> usize {
        match self {
            Notion::StatisticalParity => 0,
            Notion::Calibration => 1,
            Notion::AccuracyEquality => 2,
            Notion::EqualOpportunity => 3,
            Notion::PredictiveEquality => 4,
            Notion::OverallMisclassificationRate => 5,
        }
    }

    pub fn label(self) -> &'static str {
        NOTION_LABELS[self.index()]
    }
}

/// Recipient race, binarized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Race {
    Black,
    Other,
}

impl Race {
    /// Binarize a free-form race string: `"black"` (case-insensitive) maps to
    /// [`Race::Black`], anything else non-empty to [`Race::Other`].
    pub fn parse(raw: &str) -> std::result::Result<Race, String> {
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            return Err("recipient_race must be non-empty".to_string());
        }
        if trimmed.eq_ignore_ascii_case("black") {
            Ok(Race::Black)
        } else {
            Ok(Race::Other)
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Race::Black => "Black",
            Race::Other => "Other",
        }
    }
}

/// Recipient gender.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    pub fn parse(raw: &str) -> std::result::Result<Gender, String> {
        let trimmed = raw.trim();
        if trimmed.eq_ignore_ascii_case("male") || trimmed.eq_ignore_ascii_case("m") {
            Ok(Gender::Male)
        } else if trimmed.eq_ignore_ascii_case("female") || trimmed.eq_ignore_ascii_case("f") {
            Ok(Gender::Female)
        } else {
            Err(format!("recipient_gender '{trimmed}' is not Male/Female"))
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Gender::Male => "Male",
            Gender::Female => "Female",
        }
    }
}

/// Sensitive attribute over which groups are formed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum Attribute {
    Age,
    Gender,
    Race,
}

impl Attribute {
    pub const ALL: [Attribute; 3] = [Attribute::Age, Attribute::Gender, Attribute::Race];

    pub fn label(self) -> &'static str {
        match self {
            Attribute::Age => "age",
            Attribute::Gender => "gender",
            Attribute::Race => "race",
        }
    }
}

/// One candidate recipient matched with a donor.
#[derive(Clone, Debug, PartialEq)]
pub struct MatchRecord {
    pub recipient_id: String,
    /// Years; pediatric recipients (under 17) are excluded.
    pub recipient_age: u32,
    pub recipient_race: Race,
    pub recipient_gender: Gender,
    /// Post-transplant survival score, 0-100.
    pub epts: f64,
    /// Miles from the transplant center.
    pub distance: f64,
    /// Predicted acceptance probability in [0, 1].
    pub arp_probability: f64,
    /// Surgeon decision: `true` when the kidney was transplanted.
    pub surgeon_decision: bool,
}

impl MatchRecord {
    /// Checks the per-field invariants, returning the first violation as a
    /// message naming the offending field.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.recipient_id.trim().is_empty() {
            return Err("recipient_id must be non-empty".to_string());
        }
        if self.recipient_age < 17 {
            return Err(format!(
                "recipient_age {} below pediatric cutoff 17 (recipient {})",
                self.recipient_age, self.recipient_id
            ));
        }
        if !(0.0..=100.0).contains(&self.epts) {
            return Err(format!(
                "epts {} outside [0, 100] (recipient {})",
                self.epts, self.recipient_id
            ));
        }
        if !self.distance.is_finite() || self.distance < 0.0 {
            return Err(format!(
                "distance {} must be a non-negative number (recipient {})",
                self.distance, self.recipient_id
            ));
        }
        if !(0.0..=1.0).contains(&self.arp_probability) {
            return Err(format!(
                "arp_probability {} outside [0, 1] (recipient {})",
                self.arp_probability, self.recipient_id
            ));
        }
        Ok(())
    }
}

/// The deceased donor shared by all records of a tuple.
#[derive(Clone, Debug, PartialEq)]
pub struct DonorRecord {
    pub donor_id: String,
    pub donor_age: u32,
    pub donor_race: String,
    pub donor_gender: String,
    /// Donor quality score, 0-100.
    pub kdpi: f64,
}

impl DonorRecord {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.donor_id.trim().is_empty() {
            return Err("donor_id must be non-empty".to_string());
        }
        if self.donor_race.trim().is_empty() {
            return Err("donor_race must be non-empty".to_string());
        }
        if self.donor_gender.trim().is_empty() {
            return Err("donor_gender must be non-empty".to_string());
        }
        if !(0.0..=100.0).contains(&self.kdpi) {
            return Err(format!("kdpi {} outside [0, 100]", self.kdpi));
        }
        Ok(())
    }
}

/// One donor with its `K` matched recipients.
#[derive(Clone, Debug, PartialEq)]
pub struct DataTuple {
    pub tuple_id: String,
    pub donor: DonorRecord,
    pub records: Vec<MatchRecord>,
}

impl DataTuple {
    /// Validates the donor, every record, uniqueness of recipient ids, and
    /// the `K >= 2` size floor (both groups must be representable).
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.tuple_id.trim().is_empty() {
            return Err("tuple_id must be non-empty".to_string());
        }
        self.donor.validate()?;
        if self.records.len() < 2 {
            return Err(format!(
                "tuple {} has {} record(s); at least 2 are required",
                self.tuple_id,
                self.records.len()
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for rec in &self.records {
            rec.validate()?;
            if !seen.insert(rec.recipient_id.as_str()) {
                return Err(format!(
                    "duplicate recipient_id {} in tuple {}",
                    rec.recipient_id, self.tuple_id
                ));
            }
        }
        Ok(())
    }
}

/// Privileged/underprivileged split for each attribute, as used to audit the
/// predictor: privileged = {Other, Male, age <= cutoff}.
///
/// A recipient aged exactly at the cutoff falls in the privileged group.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroupDefinitions {
    pub age_cutoff: u32,
    pub privileged_gender: Gender,
    pub privileged_race: Race,
}

impl Default for GroupDefinitions {
    fn default() -> Self {
        GroupDefinitions {
            age_cutoff: 50,
            privileged_gender: Gender::Male,
            privileged_race: Race::Other,
        }
    }
}

impl GroupDefinitions {
    /// Group split for one attribute, with the binarization threshold.
    pub fn spec_for(&self, attribute: Attribute, threshold: f64) -> Result<GroupSpec> {
        let rule = match attribute {
            Attribute::Age => PrivilegedRule::AgeAtMost(self.age_cutoff),
            Attribute::Gender => PrivilegedRule::Gender(self.privileged_gender),
            Attribute::Race => PrivilegedRule::Race(self.privileged_race),
        };
        GroupSpec::new(rule, threshold)
    }
}

/// Rule mapping a record to the privileged group; the complement is the
/// underprivileged group, so every record lands in exactly one of the two.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PrivilegedRule {
    AgeAtMost(u32),
    Gender(Gender),
    Race(Race),
}

/// A privileged-group rule plus the probability binarization threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupSpec {
    rule: PrivilegedRule,
    threshold: f64,
}

impl GroupSpec {
    pub fn new(rule: PrivilegedRule, threshold: f64) -> Result<Self> {
        if !threshold.is_finite() || threshold <= 0.0 || threshold >= 1.0 {
            return Err(SaffError::invalid(format!(
                "threshold {threshold} outside (0, 1)"
            )));
        }
        Ok(GroupSpec { rule, threshold })
    }

    pub fn rule(&self) -> PrivilegedRule {
        self.rule
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn attribute(&self) -> Attribute {
        match self.rule {
            PrivilegedRule::AgeAtMost(_) => Attribute::Age,
            PrivilegedRule::Gender(_) => Attribute::Gender,
            PrivilegedRule::Race(_) => Attribute::Race,
        }
    }

    pub fn is_privileged(&self, record: &MatchRecord) -> bool {
        match self.rule {
            PrivilegedRule::AgeAtMost(cutoff) => record.recipient_age <= cutoff,
            PrivilegedRule::Gender(g) => record.recipient_gender == g,
            PrivilegedRule::Race(r) => record.recipient_race == r,
        }
    }
}

/// Signed group-fairness differences for one tuple (or a pool of tuples).
///
/// `values[l]` is rate(privileged) - rate(underprivileged) for notion `l`,
/// in [-1, 1]. When either groupwise rate has an empty conditioning set the
/// entry is 0 and the matching `undefined_flags[l]` is set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FairnessProfile {
    pub values: [f64; NOTION_COUNT],
    pub undefined_flags: [bool; NOTION_COUNT],
}

impl FairnessProfile {
    /// Builds a profile from raw entries, checking the range and flag
    /// invariants.
    pub fn new(values: [f64; NOTION_COUNT], undefined_flags: [bool; NOTION_COUNT]) -> Result<Self> {
        for (l, &v) in values.iter().enumerate() {
            if !v.is_finite() || !(-1.0..=1.0).contains(&v) {
                return Err(SaffError::invalid(format!(
                    "profile entry {} ({}) outside [-1, 1]: {v}",
                    l, NOTION_LABELS[l]
                )));
            }
            if undefined_flags[l] && v != 0.0 {
                return Err(SaffError::invalid(format!(
                    "flagged profile entry {} ({}) must be 0, got {v}",
                    l, NOTION_LABELS[l]
                )));
            }
        }
        Ok(FairnessProfile {
            values,
            undefined_flags,
        })
    }

    /// Profile with the given entries and no undefined flags.
    pub fn from_values(values: [f64; NOTION_COUNT]) -> Result<Self> {
        FairnessProfile::new(values, [false; NOTION_COUNT])
    }

    pub fn value(&self, notion: Notion) -> f64 {
        self.values[notion.index()]
    }

    pub fn is_undefined(&self, notion: Notion) -> bool {
        self.undefined_flags[notion.index()]
    }

    /// True when every notion's conditioning set was empty in one of the
    /// groups, e.g. because all records fell on one side of the split.
    pub fn all_flagged(&self) -> bool {
        self.undefined_flags.iter().all(|&f| f)
    }
}

/// Binarize a predicted acceptance probability: accept iff
/// `prob >= threshold`.
pub fn discretize_prediction(prob: f64, threshold: f64) -> bool {
    prob >= threshold
}

/// An empirical rate kept as exact counts: `hits` occurrences of the
/// numerator event among `trials` occurrences of the conditioning event.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RateCounts {
    pub hits: u64,
    pub trials: u64,
}

impl RateCounts {
    pub fn value(self) -> f64 {
        debug_assert!(self.trials > 0);
        self.hits as f64 / self.trials as f64
    }
}

/// Empirical groupwise rate for one notion over the records selected by
/// `in_group`. Returns `None` when the conditioning set is empty.
pub fn groupwise_rate<'a, I, F>(
    records: I,
    in_group: F,
    notion: Notion,
    threshold: f64,
) -> Option<RateCounts>
where
    I: IntoIterator<Item = &'a MatchRecord>,
    F: Fn(&MatchRecord) -> bool,
{
    let mut hits = 0u64;
    let mut trials = 0u64;
    for record in records {
        if !in_group(record) {
            continue;
        }
        let y = record.surgeon_decision;
        let yhat = discretize_prediction(record.arp_probability, threshold);
        let (hit_event, trial_event) = match notion {
            Notion::StatisticalParity => (yhat, true),
            Notion::Calibration => (y && yhat, yhat),
            Notion::AccuracyEquality => (y == yhat, true),
            Notion::EqualOpportunity => (yhat && y, y),
            Notion::PredictiveEquality => (yhat && !y, !y),
            Notion::OverallMisclassificationRate => (!yhat && y, y),
        };
        if trial_event {
            trials += 1;
            if hit_event {
                hits += 1;
            }
        }
    }
    if trials == 0 {
        None
    } else {
        Some(RateCounts { hits, trials })
    }
}

fn profile_over(
    records: &[&MatchRecord],
    is_privileged: impl Fn(&MatchRecord) -> bool,
    threshold: f64,
) -> FairnessProfile {
    let mut values = [0.0; NOTION_COUNT];
    let mut undefined_flags = [false; NOTION_COUNT];
    for notion in Notion::ALL {
        let privileged = groupwise_rate(
            records.iter().copied(),
            |r| is_privileged(r),
            notion,
            threshold,
        );
        let underprivileged = groupwise_rate(
            records.iter().copied(),
            |r| !is_privileged(r),
            notion,
            threshold,
        );
        match (privileged, underprivileged) {
            (Some(p), Some(u)) => values[notion.index()] = p.value() - u.value(),
            _ => undefined_flags[notion.index()] = true,
        }
    }
    FairnessProfile {
        values,
        undefined_flags,
    }
}

/// Fairness profile of one tuple under a group split.
pub fn fairness_profile(tuple: &DataTuple, group: &GroupSpec) -> FairnessProfile {
    let refs: Vec<&MatchRecord> = tuple.records.iter().collect();
    profile_over(&refs, |r| group.is_privileged(r), group.threshold)
}

/// Profile over a flat slice of records with an arbitrary privileged
/// predicate. The complement of the predicate is the underprivileged group.
pub fn profile_with_predicate(
    records: &[MatchRecord],
    is_privileged: impl Fn(&MatchRecord) -> bool,
    threshold: f64,
) -> FairnessProfile {
    let refs: Vec<&MatchRecord> = records.iter().collect();
    profile_over(&refs, is_privileged, threshold)
}

/// Fairness profile over the union of all records across tuples.
pub fn pooled_profile(tuples: &[DataTuple], group: &GroupSpec) -> Result<FairnessProfile> {
    if tuples.is_empty() {
        return Err(SaffError::invalid(
            "pooled_profile requires at least one tuple",
        ));
    }
    let refs: Vec<&MatchRecord> = tuples.iter().flat_map(|t| t.records.iter()).collect();
    Ok(profile_over(
        &refs,
        |r| group.is_privileged(r),
        group.threshold,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(
        id: &str,
        age: u32,
        race: Race,
        gender: Gender,
        prob: f64,
        decision: bool,
    ) -> MatchRecord {
        MatchRecord {
            recipient_id: id.to_string(),
            recipient_age: age,
            recipient_race: race,
            recipient_gender: gender,
            epts: 50.0,
            distance: 10.0,
            arp_probability: prob,
            surgeon_decision: decision,
        }
    }

    /// Record with (y, yhat) realized through the 0.5 threshold; `privileged`
    /// is encoded in the age (30 vs 70).
    fn labeled(id: &str, privileged: bool, y: bool, yhat: bool) -> MatchRecord {
        let age = if privileged { 30 } else { 70 };
        let prob = if yhat { 0.9 } else { 0.1 };
        record(id, age, Race::Other, Gender::Male, prob, y)
    }

    fn age_spec() -> GroupSpec {
        GroupSpec::new(PrivilegedRule::AgeAtMost(50), 0.5).unwrap()
    }

    fn tuple_of(records: Vec<MatchRecord>) -> DataTuple {
        DataTuple {
            tuple_id: "t001".to_string(),
            donor: DonorRecord {
                donor_id: "d001".to_string(),
                donor_age: 40,
                donor_race: "White".to_string(),
                donor_gender: "Male".to_string(),
                kdpi: 20.0,
            },
            records,
        }
    }

    #[test]
    fn discretize_boundary_cases() {
        assert!(discretize_prediction(0.5, 0.5));
        assert!(!discretize_prediction(0.49, 0.5));
        assert!(!discretize_prediction(0.0, 0.5));
        assert!(discretize_prediction(1.0, 0.5));
    }

    #[test]
    fn statistical_parity_rate_counts_predicted_accepts() {
        // (y, yhat) = {(1,1), (0,1)} in one group: P(yhat=1) = 2/2.
        let records = vec![
            labeled("r1", true, true, true),
            labeled("r2", true, false, true),
        ];
        let rate = groupwise_rate(&records, |_| true, Notion::StatisticalParity, 0.5).unwrap();
        assert_eq!(rate, RateCounts { hits: 2, trials: 2 });
        assert_eq!(rate.value(), 1.0);
    }

    #[test]
    fn accuracy_equality_is_one_when_predictions_match_decisions() {
        let records = vec![
            labeled("r1", true, true, true),
            labeled("r2", true, false, false),
            labeled("r3", true, true, true),
        ];
        let rate = groupwise_rate(&records, |_| true, Notion::AccuracyEquality, 0.5).unwrap();
        assert_eq!(rate.value(), 1.0);
    }

    #[test]
    fn equal_opportunity_undefined_without_positive_decisions() {
        let records = vec![
            labeled("r1", true, false, true),
            labeled("r2", true, false, false),
        ];
        assert_eq!(
            groupwise_rate(&records, |_| true, Notion::EqualOpportunity, 0.5),
            None
        );
    }

    #[test]
    fn profile_on_the_four_record_example() {
        // Privileged (y, yhat): (1,1), (0,1); underprivileged: (1,0), (0,0).
        let tuple = tuple_of(vec![
            labeled("r1", true, true, true),
            labeled("r2", true, false, true),
            labeled("r3", false, true, false),
            labeled("r4", false, false, false),
        ]);
        let profile = fairness_profile(&tuple, &age_spec());
        assert_eq!(profile.value(Notion::StatisticalParity), 1.0);
        assert_eq!(profile.value(Notion::AccuracyEquality), 0.0);
        assert_eq!(profile.value(Notion::EqualOpportunity), 1.0);
        assert_eq!(profile.value(Notion::PredictiveEquality), 1.0);
        assert_eq!(profile.value(Notion::OverallMisclassificationRate), -1.0);
        assert!(profile.is_undefined(Notion::Calibration));
        assert_eq!(profile.value(Notion::Calibration), 0.0);
        let flagged: Vec<_> = Notion::ALL
            .iter()
            .filter(|n| profile.is_undefined(**n))
            .collect();
        assert_eq!(flagged.len(), 1);
    }

    #[test]
    fn identical_groups_give_zero_profile_without_flags() {
        let tuple = tuple_of(vec![
            labeled("r1", true, true, true),
            labeled("r2", true, false, false),
            labeled("r3", false, true, true),
            labeled("r4", false, false, false),
        ]);
        let profile = fairness_profile(&tuple, &age_spec());
        for notion in Notion::ALL {
            if !profile.is_undefined(notion) {
                assert_eq!(profile.value(notion), 0.0, "{}", notion.label());
            }
        }
        // SP and AE are always defined when both groups are non-empty.
        assert!(!profile.is_undefined(Notion::StatisticalParity));
        assert!(!profile.is_undefined(Notion::AccuracyEquality));
    }

    #[test]
    fn one_sided_tuple_flags_every_notion() {
        let tuple = tuple_of(vec![
            labeled("r1", true, true, true),
            labeled("r2", true, false, true),
        ]);
        let profile = fairness_profile(&tuple, &age_spec());
        assert!(profile.all_flagged());
        assert_eq!(profile.values, [0.0; NOTION_COUNT]);
    }

    #[test]
    fn pooling_a_single_tuple_matches_its_profile() {
        let tuple = tuple_of(vec![
            labeled("r1", true, true, true),
            labeled("r2", false, false, true),
            labeled("r3", false, true, false),
        ]);
        let single = fairness_profile(&tuple, &age_spec());
        let pooled = pooled_profile(std::slice::from_ref(&tuple), &age_spec()).unwrap();
        assert_eq!(single, pooled);
    }

    #[test]
    fn pooling_two_tuples_profiles_the_union_of_their_records() {
        let a = vec![
            labeled("r1", true, true, true),
            labeled("r2", false, false, true),
        ];
        let b = vec![
            labeled("r1", true, false, false),
            labeled("r2", false, true, false),
            labeled("r3", true, true, false),
        ];
        let union: Vec<MatchRecord> = a.iter().chain(b.iter()).cloned().collect();
        let mut tuple_b = tuple_of(b);
        tuple_b.tuple_id = "t002".to_string();
        let pooled = pooled_profile(&[tuple_of(a), tuple_b], &age_spec()).unwrap();
        let flat = profile_with_predicate(&union, |r| r.recipient_age <= 50, 0.5);
        assert_eq!(pooled, flat);
    }

    #[test]
    fn pooling_duplicates_leaves_the_profile_unchanged() {
        let tuple = tuple_of(vec![
            labeled("r1", true, true, true),
            labeled("r2", false, false, true),
            labeled("r3", false, true, false),
            labeled("r4", true, false, false),
        ]);
        let once = pooled_profile(std::slice::from_ref(&tuple), &age_spec()).unwrap();
        let thrice = pooled_profile(&[tuple.clone(), tuple.clone(), tuple], &age_spec()).unwrap();
        assert_eq!(once, thrice);
    }

    #[test]
    fn pooled_profile_rejects_empty_input() {
        assert!(pooled_profile(&[], &age_spec()).is_err());
    }

    #[test]
    fn group_spec_rejects_degenerate_thresholds() {
        assert!(GroupSpec::new(PrivilegedRule::AgeAtMost(50), 0.0).is_err());
        assert!(GroupSpec::new(PrivilegedRule::AgeAtMost(50), 1.0).is_err());
        assert!(GroupSpec::new(PrivilegedRule::AgeAtMost(50), f64::NAN).is_err());
    }

    #[test]
    fn record_validation_names_the_field() {
        let mut rec = labeled("r1", true, true, true);
        rec.arp_probability = 1.3;
        let msg = rec.validate().unwrap_err();
        assert!(msg.contains("arp_probability"), "{msg}");
        let mut rec = labeled("r2", true, true, true);
        rec.recipient_age = 12;
        assert!(rec.validate().unwrap_err().contains("recipient_age"));
    }

    #[test]
    fn age_exactly_at_cutoff_is_privileged() {
        let spec = age_spec();
        let rec = record("r1", 50, Race::Other, Gender::Male, 0.6, true);
        assert!(spec.is_privileged(&rec));
        let rec = record("r2", 51, Race::Other, Gender::Male, 0.6, true);
        assert!(!spec.is_privileged(&rec));
    }

    /// Independent brute-force counter: filters the group into a sub-vector,
    /// then counts the numerator/denominator events with explicit loops.
    fn brute_force_rate(
        records: &[MatchRecord],
        in_group: impl Fn(&MatchRecord) -> bool,
        notion: Notion,
        threshold: f64,
    ) -> Option<(u64, u64)> {
        let group: Vec<&MatchRecord> = records.iter().filter(|r| in_group(r)).collect();
        let outcomes: Vec<(bool, bool)> = group
            .iter()
            .map(|r| (r.surgeon_decision, r.arp_probability >= threshold))
            .collect();
        let conditioning: Vec<&(bool, bool)> = outcomes
            .iter()
            .filter(|(y, yhat)| match notion {
                Notion::StatisticalParity | Notion::AccuracyEquality => true,
                Notion::Calibration => *yhat,
                Notion::EqualOpportunity | Notion::OverallMisclassificationRate => *y,
                Notion::PredictiveEquality => !*y,
            })
            .collect();
        if conditioning.is_empty() {
            return None;
        }
        let hits = conditioning
            .iter()
            .filter(|(y, yhat)| match notion {
                Notion::StatisticalParity => *yhat,
                Notion::Calibration => *y,
                Notion::AccuracyEquality => y == yhat,
                Notion::EqualOpportunity => *yhat,
                Notion::PredictiveEquality => *yhat,
                Notion::OverallMisclassificationRate => !*yhat,
            })
            .count() as u64;
        Some((hits, conditioning.len() as u64))
    }

    prop_compose! {
        fn arb_record()(
            age in 17u32..90,
            black in proptest::bool::ANY,
            male in proptest::bool::ANY,
            prob in 0.0f64..=1.0,
            decision in proptest::bool::ANY,
            id in 0u32..1_000_000,
        ) -> MatchRecord {
            record(
                &format!("r{id}"),
                age,
                if black { Race::Black } else { Race::Other },
                if male { Gender::Male } else { Gender::Female },
                prob,
                decision,
            )
        }
    }

    proptest! {
        #[test]
        fn rates_match_the_brute_force_counter(
            records in proptest::collection::vec(arb_record(), 1..20),
            cutoff in 20u32..80,
        ) {
            for notion in Notion::ALL {
                let fast = groupwise_rate(
                    &records,
                    |r| r.recipient_age <= cutoff,
                    notion,
                    0.5,
                );
                let brute = brute_force_rate(&records, |r| r.recipient_age <= cutoff, notion, 0.5);
                prop_assert_eq!(fast.map(|r| (r.hits, r.trials)), brute);
            }
        }

        #[test]
        fn swapping_groups_negates_unflagged_entries(
            records in proptest::collection::vec(arb_record(), 2..20),
            cutoff in 20u32..80,
        ) {
            let forward = profile_with_predicate(&records, |r| r.recipient_age <= cutoff, 0.5);
            let swapped = profile_with_predicate(&records, |r| r.recipient_age > cutoff, 0.5);
            for notion in Notion::ALL {
                prop_assert_eq!(
                    forward.is_undefined(notion),
                    swapped.is_undefined(notion)
                );
                if !forward.is_undefined(notion) {
                    prop_assert!(
                        (forward.value(notion) + swapped.value(notion)).abs() < 1e-15
                    );
                }
            }
        }

        #[test]
        fn profile_entries_stay_in_range(
            records in proptest::collection::vec(arb_record(), 2..20),
        ) {
            let profile = profile_with_predicate(&records, |r| r.recipient_age <= 50, 0.5);
            for notion in Notion::ALL {
                let v = profile.value(notion);
                prop_assert!((-1.0..=1.0).contains(&v));
                if profile.is_undefined(notion) {
                    prop_assert_eq!(v, 0.0);
                }
            }
        }

        #[test]
        fn discretize_is_monotone_in_prob(
            lo in 0.0f64..=1.0,
            hi in 0.0f64..=1.0,
            threshold in 0.05f64..0.95,
        ) {
            let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
            prop_assert!(
                discretize_prediction(lo, threshold) <= discretize_prediction(hi, threshold)
            );
        }
    }
}
