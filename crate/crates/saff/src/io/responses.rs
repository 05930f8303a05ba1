//! Response CSV: one row per (participant, tuple, question) score.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use crate::error::{Result, SaffError};
use crate::feedback::FeedbackScore;
use crate::learner::ResponseSet;
use crate::metrics::{Attribute, DataTuple};

pub const RESPONSE_HEADERS: [&str; 4] = ["participant_id", "tuple_id", "question", "score"];

/// Survey question a score answers. The three attribute questions feed
/// preference learning; the overall question is ingested for descriptive
/// reporting only.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Question {
    Overall,
    Age,
    Gender,
    Race,
}

impl Question {
    pub const ALL: [Question; 4] = [
        Question::Overall,
        Question::Age,
        Question::Gender,
        Question::Race,
    ];

    pub fn parse(raw: &str) -> std::result::Result<Question, String> {
        match raw.trim().to_ascii_lowercase().as_str() {
            "overall" => Ok(Question::Overall),
            "age" => Ok(Question::Age),
            "gender" => Ok(Question::Gender),
            "race" => Ok(Question::Race),
            other => Err(format!(
                "question '{other}' is not one of overall/age/gender/race"
            )),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Question::Overall => "overall",
            Question::Age => "age",
            Question::Gender => "gender",
            Question::Race => "race",
        }
    }

    pub fn attribute(self) -> Option<Attribute> {
        match self {
            Question::Overall => None,
            Question::Age => Some(Attribute::Age),
            Question::Gender => Some(Attribute::Gender),
            Question::Race => Some(Attribute::Race),
        }
    }

    pub fn from_attribute(attribute: Attribute) -> Question {
        match attribute {
            Attribute::Age => Question::Age,
            Attribute::Gender => Question::Gender,
            Attribute::Race => Question::Race,
        }
    }
}

/// Validated response data, restricted to participants who answered every
/// (tuple, question) cell of the grid spanned by the questions present in
/// the file.
#[derive(Clone, Debug)]
pub struct LoadedResponses {
    /// Kept participants, lexicographically sorted; row order of every
    /// score matrix.
    pub participants: Vec<String>,
    /// Participants dropped for an incomplete grid, sorted.
    pub dropped: Vec<String>,
    /// Questions present in the file, in canonical order.
    pub questions: Vec<Question>,
    matrices: BTreeMap<Question, Vec<Vec<FeedbackScore>>>,
}

impl LoadedResponses {
    /// Scores for one attribute question, if present.
    pub fn response_set(&self, attribute: Attribute) -> Option<ResponseSet> {
        let matrix = self.matrices.get(&Question::from_attribute(attribute))?;
        Some(
            ResponseSet::new(matrix.clone(), attribute)
                .expect("loaded matrices are rectangular and non-empty"),
        )
    }

    /// Raw score matrix of the overall question, if present.
    pub fn overall_scores(&self) -> Option<&Vec<Vec<FeedbackScore>>> {
        self.matrices.get(&Question::Overall)
    }

    /// Mean overall score across participants and tuples.
    pub fn overall_mean(&self) -> Option<f64> {
        let matrix = self.overall_scores()?;
        let total: u64 = matrix
            .iter()
            .flat_map(|row| row.iter())
            .map(|s| s.value() as u64)
            .sum();
        let cells = (matrix.len() * matrix[0].len()) as f64;
        Some(total as f64 / cells)
    }
}

/// Loads a response file against previously loaded tuples, enforcing the
/// completeness rule: a participant missing any (tuple, question) cell is
/// dropped from every question's matrix.
pub fn load_responses(path: &Path, tuples: &[DataTuple]) -> Result<LoadedResponses> {
    if tuples.is_empty() {
        return Err(SaffError::invalid(
            "load_responses requires at least one tuple",
        ));
    }
    let tuple_index: HashMap<&str, usize> = tuples
        .iter()
        .enumerate()
        .map(|(i, t)| (t.tuple_id.as_str(), i))
        .collect();

    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => SaffError::io(path, std::io::Error::other(e)),
            _ => SaffError::schema(path, 1, e.to_string()),
        })?;
    let headers = reader
        .headers()
        .map_err(|e| SaffError::schema(path, 1, e.to_string()))?
        .clone();
    let names: Vec<&str> = headers.iter().map(str::trim).collect();
    for required in RESPONSE_HEADERS {
        if !names.contains(&required) {
            return Err(SaffError::schema(
                path,
                1,
                format!("missing column '{required}'"),
            ));
        }
    }
    for name in &names {
        if !RESPONSE_HEADERS.contains(name) {
            return Err(SaffError::schema(
                path,
                1,
                format!("unknown column '{name}'"),
            ));
        }
    }
    if names.len() != RESPONSE_HEADERS.len() {
        return Err(SaffError::schema(path, 1, "duplicate column in header"));
    }
    let column: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (*n, i)).collect();

    // (participant, question) -> per-tuple scores.
    let mut cells: BTreeMap<String, BTreeMap<Question, Vec<Option<FeedbackScore>>>> =
        BTreeMap::new();
    let mut questions_present: BTreeSet<Question> = BTreeSet::new();

    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(csv::Position::line).unwrap_or_default();
            SaffError::schema(path, line, e.to_string())
        })?;
        let line = record.position().map(csv::Position::line).unwrap_or(0);
        let get = |name: &str| -> Result<&str> {
            let value = record.get(column[name]).map(str::trim).unwrap_or_default();
            if value.is_empty() {
                Err(SaffError::schema(
                    path,
                    line,
                    format!("field '{name}' is empty"),
                ))
            } else {
                Ok(value)
            }
        };
        let participant = get("participant_id")?.to_string();
        let tuple_id = get("tuple_id")?;
        let tuple_pos = *tuple_index.get(tuple_id).ok_or_else(|| {
            SaffError::schema(path, line, format!("unknown tuple_id '{tuple_id}'"))
        })?;
        let question =
            Question::parse(get("question")?).map_err(|m| SaffError::schema(path, line, m))?;
        let score_raw = get("score")?;
        let score_value: u8 = score_raw.parse().map_err(|_| {
            SaffError::schema(path, line, format!("score '{score_raw}' is not an integer"))
        })?;
        let score = FeedbackScore::new(score_value)
            .map_err(|e| SaffError::schema(path, line, e.to_string()))?;

        questions_present.insert(question);
        let slot = cells
            .entry(participant.clone())
            .or_default()
            .entry(question)
            .or_insert_with(|| vec![None; tuples.len()])
            .get_mut(tuple_pos)
            .expect("tuple position is in range");
        if slot.is_some() {
            return Err(SaffError::schema(
                path,
                line,
                format!(
                    "duplicate response for (participant {participant}, tuple {tuple_id}, question {})",
                    question.label()
                ),
            ));
        }
        *slot = Some(score);
    }

    if cells.is_empty() {
        return Err(SaffError::invalid(format!(
            "no responses in {}",
            path.display()
        )));
    }

    let questions: Vec<Question> = Question::ALL
        .into_iter()
        .filter(|q| questions_present.contains(q))
        .collect();

    let mut participants = Vec::new();
    let mut dropped = Vec::new();
    for (participant, answers) in &cells {
        let complete = questions.iter().all(|q| {
            answers
                .get(q)
                .is_some_and(|scores| scores.iter().all(Option::is_some))
        });
        if complete {
            participants.push(participant.clone());
        } else {
            dropped.push(participant.clone());
        }
    }
    if participants.is_empty() {
        return Err(SaffError::invalid(format!(
            "no participant in {} covers the full response grid",
            path.display()
        )));
    }

    let mut matrices: BTreeMap<Question, Vec<Vec<FeedbackScore>>> = BTreeMap::new();
    for &question in &questions {
        let matrix = participants
            .iter()
            .map(|p| {
                cells[p][&question]
                    .iter()
                    .map(|s| s.expect("kept participants are complete"))
                    .collect()
            })
            .collect();
        matrices.insert(question, matrix);
    }

    Ok(LoadedResponses {
        participants,
        dropped,
        questions,
        matrices,
    })
}

/// Writes response rows for the given matrices in a fixed order:
/// participant-major, then tuple, then question. Byte-deterministic.
pub fn write_responses(
    path: &Path,
    tuples: &[DataTuple],
    participants: &[String],
    matrices: &[(Question, &Vec<Vec<FeedbackScore>>)],
) -> Result<()> {
    let mut writer =
        csv::Writer::from_path(path).map_err(|e| SaffError::io(path, std::io::Error::other(e)))?;
    writer
        .write_record(RESPONSE_HEADERS)
        .map_err(|e| SaffError::io(path, std::io::Error::other(e)))?;
    for (n, participant) in participants.iter().enumerate() {
        for (m, tuple) in tuples.iter().enumerate() {
            for (question, matrix) in matrices {
                writer
                    .write_record([
                        participant.as_str(),
                        tuple.tuple_id.as_str(),
                        question.label(),
                        &matrix[n][m].value().to_string(),
                    ])
                    .map_err(|e| SaffError::io(path, std::io::Error::other(e)))?;
            }
        }
    }
    writer.flush().map_err(|e| SaffError::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{DonorRecord, Gender, MatchRecord, Race};
    use std::io::Write;

    fn tuples(n: usize) -> Vec<DataTuple> {
        (1..=n)
            .map(|t| DataTuple {
                tuple_id: format!("t{t}"),
                donor: DonorRecord {
                    donor_id: "d1".to_string(),
                    donor_age: 40,
                    donor_race: "White".to_string(),
                    donor_gender: "Male".to_string(),
                    kdpi: 25.0,
                },
                records: vec![
                    MatchRecord {
                        recipient_id: "r1".to_string(),
                        recipient_age: 30,
                        recipient_race: Race::Other,
                        recipient_gender: Gender::Male,
                        epts: 10.0,
                        distance: 5.0,
                        arp_probability: 0.8,
                        surgeon_decision: true,
                    },
                    MatchRecord {
                        recipient_id: "r2".to_string(),
                        recipient_age: 60,
                        recipient_race: Race::Black,
                        recipient_gender: Gender::Female,
                        epts: 60.0,
                        distance: 50.0,
                        arp_probability: 0.3,
                        surgeon_decision: false,
                    },
                ],
            })
            .collect()
    }

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(content.as_bytes()).unwrap();
        file
    }

    const HEADER: &str = "participant_id,tuple_id,question,score\n";

    fn complete_file(participants: usize, tuples: usize, questions: &[&str]) -> String {
        let mut content = HEADER.to_string();
        for p in 1..=participants {
            for t in 1..=tuples {
                for q in questions {
                    let score = 1 + (p + t) % 7;
                    content.push_str(&format!("p{p},t{t},{q},{score}\n"));
                }
            }
        }
        content
    }

    #[test]
    fn loads_a_complete_grid_into_per_question_sets() {
        let questions = ["overall", "age", "gender", "race"];
        let file = write_temp(&complete_file(5, 3, &questions));
        let loaded = load_responses(file.path(), &tuples(3)).unwrap();
        assert_eq!(loaded.participants.len(), 5);
        assert!(loaded.dropped.is_empty());
        assert_eq!(loaded.questions.len(), 4);
        for attribute in Attribute::ALL {
            let set = loaded.response_set(attribute).unwrap();
            assert_eq!(set.participant_count(), 5);
            assert_eq!(set.tuple_count(), 3);
        }
        assert!(loaded.overall_mean().is_some());
    }

    #[test]
    fn incomplete_participant_is_dropped_with_a_warning_entry() {
        let mut content = complete_file(3, 2, &["age"]);
        content.push_str("p4,t1,age,5\n"); // p4 misses t2
        let file = write_temp(&content);
        let loaded = load_responses(file.path(), &tuples(2)).unwrap();
        assert_eq!(loaded.participants, vec!["p1", "p2", "p3"]);
        assert_eq!(loaded.dropped, vec!["p4"]);
    }

    #[test]
    fn a_participant_missing_one_question_entirely_is_dropped() {
        let mut content = complete_file(2, 2, &["age", "race"]);
        // p3 answers only the age question.
        content.push_str("p3,t1,age,4\np3,t2,age,4\n");
        let file = write_temp(&content);
        let loaded = load_responses(file.path(), &tuples(2)).unwrap();
        assert_eq!(loaded.dropped, vec!["p3"]);
    }

    #[test]
    fn out_of_range_score_names_the_line() {
        let mut content = complete_file(1, 2, &["age"]);
        content.push_str("p2,t1,age,9\n");
        let file = write_temp(&content);
        let err = load_responses(file.path(), &tuples(2)).unwrap_err();
        match err {
            SaffError::Schema {
                line, ref message, ..
            } => {
                assert_eq!(line, 4);
                assert!(message.contains('9'), "{message}");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn unknown_question_and_tuple_are_rejected() {
        let file = write_temp(&format!("{HEADER}p1,t1,speed,4\n"));
        assert!(load_responses(file.path(), &tuples(1)).is_err());
        let file = write_temp(&format!("{HEADER}p1,t9,age,4\n"));
        let err = load_responses(file.path(), &tuples(1)).unwrap_err();
        assert!(err.to_string().contains("t9"), "{err}");
    }

    #[test]
    fn duplicate_cell_is_rejected() {
        let file = write_temp(&format!("{HEADER}p1,t1,age,4\np1,t1,age,5\n"));
        let err = load_responses(file.path(), &tuples(1)).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn all_participants_incomplete_is_an_error() {
        let file = write_temp(&format!("{HEADER}p1,t1,age,4\n"));
        let err = load_responses(file.path(), &tuples(2)).unwrap_err();
        assert!(err.to_string().contains("full response grid"), "{err}");
    }

    #[test]
    fn participants_are_sorted_for_determinism() {
        let mut content = HEADER.to_string();
        for p in ["zeta", "alpha", "mid"] {
            content.push_str(&format!("{p},t1,age,3\n"));
        }
        let file = write_temp(&content);
        let loaded = load_responses(file.path(), &tuples(1)).unwrap();
        assert_eq!(loaded.participants, vec!["alpha", "mid", "zeta"]);
    }

    #[test]
    fn written_responses_reload_identically() {
        let tuples = tuples(2);
        let questions = ["age", "gender", "race"];
        let file = write_temp(&complete_file(3, 2, &questions));
        let loaded = load_responses(file.path(), &tuples).unwrap();

        let age = loaded.matrices[&Question::Age].clone();
        let gender = loaded.matrices[&Question::Gender].clone();
        let race = loaded.matrices[&Question::Race].clone();
        let out = tempfile::NamedTempFile::new().unwrap();
        write_responses(
            out.path(),
            &tuples,
            &loaded.participants,
            &[
                (Question::Age, &age),
                (Question::Gender, &gender),
                (Question::Race, &race),
            ],
        )
        .unwrap();
        let reloaded = load_responses(out.path(), &tuples).unwrap();
        assert_eq!(loaded.participants, reloaded.participants);
        for attribute in Attribute::ALL {
            assert_eq!(
                loaded.response_set(attribute).unwrap(),
                reloaded.response_set(attribute).unwrap()
            );
        }
    }
}
