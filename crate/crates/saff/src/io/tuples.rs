//! Tuple CSV: one row per donor-recipient pair, grouped by `tuple_id`.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use crate::error::{Result, SaffError};
use crate::metrics::{DataTuple, DonorRecord, Gender, MatchRecord, Race};

/// Required header, in canonical order. Loading accepts any column order but
/// rejects missing or unknown columns.
pub const TUPLE_HEADERS: [&str; 14] = [
    "tuple_id",
    "donor_id",
    "donor_age",
    "donor_race",
    "donor_gender",
    "kdpi",
    "recipient_id",
    "recipient_age",
    "recipient_race",
    "recipient_gender",
    "epts",
    "distance",
    "arp_probability",
    "surgeon_decision",
];

fn header_indices(path: &Path, headers: &csv::StringRecord) -> Result<HashMap<String, usize>> {
    let mut indices = HashMap::new();
    for (pos, name) in headers.iter().enumerate() {
        let name = name.trim();
        if !TUPLE_HEADERS.contains(&name) {
            return Err(SaffError::schema(
                path,
                1,
                format!("unknown column '{name}'"),
            ));
        }
        if indices.insert(name.to_string(), pos).is_some() {
            return Err(SaffError::schema(
                path,
                1,
                format!("duplicate column '{name}'"),
            ));
        }
    }
    for required in TUPLE_HEADERS {
        if !indices.contains_key(required) {
            return Err(SaffError::schema(
                path,
                1,
                format!("missing column '{required}'"),
            ));
        }
    }
    Ok(indices)
}

struct RowReader<'a> {
    path: &'a Path,
    indices: &'a HashMap<String, usize>,
}

impl<'a> RowReader<'a> {
    fn field(&self, row: &csv::StringRecord, line: u64, name: &str) -> Result<String> {
        let value = row
            .get(self.indices[name])
            .map(str::trim)
            .unwrap_or_default();
        if value.is_empty() {
            return Err(SaffError::schema(
                self.path,
                line,
                format!("field '{name}' is empty"),
            ));
        }
        Ok(value.to_string())
    }

    fn parse<T: std::str::FromStr>(
        &self,
        row: &csv::StringRecord,
        line: u64,
        name: &str,
    ) -> Result<T> {
        let raw = self.field(row, line, name)?;
        raw.parse().map_err(|_| {
            SaffError::schema(
                self.path,
                line,
                format!("field '{name}' has unparseable value '{raw}'"),
            )
        })
    }
}

/// Loads, validates, and groups a tuple CSV. Tuples keep first-appearance
/// order; rows keep file order within their tuple.
pub fn load_tuples(path: &Path) -> Result<Vec<DataTuple>> {
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
    let indices = header_indices(path, &headers)?;
    let row_reader = RowReader {
        path,
        indices: &indices,
    };

    let mut order: Vec<String> = Vec::new();
    let mut grouped: HashMap<String, (DonorRecord, u64, Vec<MatchRecord>)> = HashMap::new();
    let mut seen_recipients: HashSet<(String, String)> = HashSet::new();

    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(csv::Position::line).unwrap_or_default();
            SaffError::schema(path, line, e.to_string())
        })?;
        let line = record.position().map(csv::Position::line).unwrap_or(0);

        let tuple_id = row_reader.field(&record, line, "tuple_id")?;
        let donor = DonorRecord {
            donor_id: row_reader.field(&record, line, "donor_id")?,
            donor_age: row_reader.parse(&record, line, "donor_age")?,
            donor_race: row_reader.field(&record, line, "donor_race")?,
            donor_gender: row_reader.field(&record, line, "donor_gender")?,
            kdpi: row_reader.parse(&record, line, "kdpi")?,
        };
        donor
            .validate()
            .map_err(|m| SaffError::schema(path, line, m))?;

        let race = Race::parse(&row_reader.field(&record, line, "recipient_race")?)
            .map_err(|m| SaffError::schema(path, line, m))?;
        let gender = Gender::parse(&row_reader.field(&record, line, "recipient_gender")?)
            .map_err(|m| SaffError::schema(path, line, m))?;
        let decision_raw = row_reader.field(&record, line, "surgeon_decision")?;
        let surgeon_decision = match decision_raw.as_str() {
            "0" => false,
            "1" => true,
            other => {
                return Err(SaffError::schema(
                    path,
                    line,
                    format!("field 'surgeon_decision' must be 0 or 1, got '{other}'"),
                ))
            }
        };
        let match_record = MatchRecord {
            recipient_id: row_reader.field(&record, line, "recipient_id")?,
            recipient_age: row_reader.parse(&record, line, "recipient_age")?,
            recipient_race: race,
            recipient_gender: gender,
            epts: row_reader.parse(&record, line, "epts")?,
            distance: row_reader.parse(&record, line, "distance")?,
            arp_probability: row_reader.parse(&record, line, "arp_probability")?,
            surgeon_decision,
        };
        match_record
            .validate()
            .map_err(|m| SaffError::schema(path, line, m))?;

        if !seen_recipients.insert((tuple_id.clone(), match_record.recipient_id.clone())) {
            return Err(SaffError::schema(
                path,
                line,
                format!(
                    "duplicate (tuple_id, recipient_id) = ({tuple_id}, {})",
                    match_record.recipient_id
                ),
            ));
        }

        match grouped.get_mut(&tuple_id) {
            Some((existing_donor, _, records)) => {
                if *existing_donor != donor {
                    return Err(SaffError::schema(
                        path,
                        line,
                        format!("tuple {tuple_id} has conflicting donor fields"),
                    ));
                }
                records.push(match_record);
            }
            None => {
                order.push(tuple_id.clone());
                grouped.insert(tuple_id, (donor, line, vec![match_record]));
            }
        }
    }

    if order.is_empty() {
        return Err(SaffError::invalid(format!(
            "no tuples in {}",
            path.display()
        )));
    }

    let mut tuples = Vec::with_capacity(order.len());
    for tuple_id in order {
        let (donor, first_line, records) = grouped.remove(&tuple_id).unwrap();
        if records.len() < 2 {
            return Err(SaffError::schema(
                path,
                first_line,
                format!(
                    "tuple {tuple_id} has {} record(s); at least 2 are required",
                    records.len()
                ),
            ));
        }
        tuples.push(DataTuple {
            tuple_id,
            donor,
            records,
        });
    }
    Ok(tuples)
}

/// Writes tuples in the canonical column order. Output is byte-deterministic
/// for identical input.
pub fn write_tuples(path: &Path, tuples: &[DataTuple]) -> Result<()> {
    let mut writer =
        csv::Writer::from_path(path).map_err(|e| SaffError::io(path, std::io::Error::other(e)))?;
    writer
        .write_record(TUPLE_HEADERS)
        .map_err(|e| SaffError::io(path, std::io::Error::other(e)))?;
    for tuple in tuples {
        for record in &tuple.records {
            writer
                .write_record([
                    tuple.tuple_id.as_str(),
                    tuple.donor.donor_id.as_str(),
                    &tuple.donor.donor_age.to_string(),
                    tuple.donor.donor_race.as_str(),
                    tuple.donor.donor_gender.as_str(),
                    &tuple.donor.kdpi.to_string(),
                    record.recipient_id.as_str(),
                    &record.recipient_age.to_string(),
                    record.recipient_race.label(),
                    record.recipient_gender.label(),
                    &record.epts.to_string(),
                    &record.distance.to_string(),
                    &record.arp_probability.to_string(),
                    if record.surgeon_decision { "1" } else { "0" },
                ])
                .map_err(|e| SaffError::io(path, std::io::Error::other(e)))?;
        }
    }
    writer.flush().map_err(|e| SaffError::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(content.as_bytes()).unwrap();
        file
    }

    const HEADER: &str = "tuple_id,donor_id,donor_age,donor_race,donor_gender,kdpi,recipient_id,recipient_age,recipient_race,recipient_gender,epts,distance,arp_probability,surgeon_decision\n";

    fn row(tuple: &str, recipient: &str, prob: &str, decision: &str) -> String {
        format!(
            "{tuple},d1,45,White,Male,30,{recipient},55,Black,Female,40,12.5,{prob},{decision}\n"
        )
    }

    #[test]
    fn loads_a_well_formed_file() {
        let mut content = HEADER.to_string();
        for t in 1..=10 {
            for r in 1..=10 {
                content.push_str(&row(&format!("t{t}"), &format!("r{r}"), "0.7", "1"));
            }
        }
        let file = write_temp(&content);
        let tuples = load_tuples(file.path()).unwrap();
        assert_eq!(tuples.len(), 10);
        assert!(tuples.iter().all(|t| t.records.len() == 10));
        assert_eq!(tuples[0].tuple_id, "t1");
        assert_eq!(tuples[0].records[0].recipient_race, Race::Black);
        assert!(tuples[0].records[0].surgeon_decision);
    }

    #[test]
    fn out_of_range_probability_names_the_line() {
        let content = format!(
            "{HEADER}{}{}{}{}",
            row("t1", "r1", "0.5", "1"),
            row("t1", "r2", "0.5", "0"),
            row("t1", "r3", "1.3", "0"),
            row("t1", "r4", "0.5", "0"),
        );
        let file = write_temp(&content);
        let err = load_tuples(file.path()).unwrap_err();
        match err {
            SaffError::Schema {
                line, ref message, ..
            } => {
                assert_eq!(line, 4, "{err}");
                assert!(message.contains("arp_probability"));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn empty_file_reports_no_tuples() {
        let file = write_temp(HEADER);
        let err = load_tuples(file.path()).unwrap_err();
        assert!(err.to_string().contains("no tuples"), "{err}");
    }

    #[test]
    fn missing_column_is_rejected() {
        let file = write_temp("tuple_id,donor_id\na,b\n");
        let err = load_tuples(file.path()).unwrap_err();
        assert!(err.to_string().contains("missing column"), "{err}");
    }

    #[test]
    fn unknown_column_is_rejected() {
        let mut header = HEADER.trim_end().to_string();
        header.push_str(",extra\n");
        let file = write_temp(&format!(
            "{header}t1,d1,45,White,Male,30,r1,55,Black,Female,40,12.5,0.7,1,x\n"
        ));
        let err = load_tuples(file.path()).unwrap_err();
        assert!(err.to_string().contains("unknown column"), "{err}");
    }

    #[test]
    fn undersized_tuple_is_rejected() {
        let content = format!("{HEADER}{}", row("t1", "r1", "0.5", "1"));
        let file = write_temp(&content);
        let err = load_tuples(file.path()).unwrap_err();
        assert!(err.to_string().contains("at least 2"), "{err}");
    }

    #[test]
    fn duplicate_recipient_in_a_tuple_is_rejected() {
        let content = format!(
            "{HEADER}{}{}",
            row("t1", "r1", "0.5", "1"),
            row("t1", "r1", "0.6", "0"),
        );
        let file = write_temp(&content);
        let err = load_tuples(file.path()).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn conflicting_donor_fields_are_rejected() {
        let content = format!(
            "{HEADER}{}t1,d1,46,White,Male,30,r2,55,Black,Female,40,12.5,0.5,0\n",
            row("t1", "r1", "0.5", "1"),
        );
        let file = write_temp(&content);
        let err = load_tuples(file.path()).unwrap_err();
        assert!(err.to_string().contains("conflicting donor"), "{err}");
    }

    #[test]
    fn pediatric_recipient_is_rejected() {
        let content = format!(
            "{HEADER}t1,d1,45,White,Male,30,r1,12,Black,Female,40,12.5,0.5,1\n{}",
            row("t1", "r2", "0.5", "0"),
        );
        let file = write_temp(&content);
        let err = load_tuples(file.path()).unwrap_err();
        assert!(err.to_string().contains("recipient_age"), "{err}");
    }

    #[test]
    fn surgeon_decision_must_be_binary() {
        let content = format!(
            "{HEADER}{}t1,d1,45,White,Male,30,r2,55,Black,Female,40,12.5,0.5,yes\n",
            row("t1", "r1", "0.5", "1"),
        );
        let file = write_temp(&content);
        let err = load_tuples(file.path()).unwrap_err();
        assert!(err.to_string().contains("surgeon_decision"), "{err}");
    }

    #[test]
    fn written_files_reload_identically() {
        let mut content = HEADER.to_string();
        content.push_str(&row("t1", "r1", "0.25", "1"));
        content.push_str(&row("t1", "r2", "0.75", "0"));
        content.push_str(&row("t2", "r1", "0.5", "1"));
        content.push_str(&row("t2", "r2", "1", "0"));
        let file = write_temp(&content);
        let tuples = load_tuples(file.path()).unwrap();

        let out = tempfile::NamedTempFile::new().unwrap();
        write_tuples(out.path(), &tuples).unwrap();
        let reloaded = load_tuples(out.path()).unwrap();
        assert_eq!(tuples, reloaded);

        // Byte-determinism of the writer.
        let out2 = tempfile::NamedTempFile::new().unwrap();
        write_tuples(out2.path(), &tuples).unwrap();
        assert_eq!(
            std::fs::read(out.path()).unwrap(),
            std::fs::read(out2.path()).unwrap()
        );
    }

    #[test]
    fn race_binarization_accepts_arbitrary_labels() {
        let content = format!(
            "{HEADER}t1,d1,45,White,Male,30,r1,55,White,Female,40,12.5,0.5,1\nt1,d1,45,White,Male,30,r2,55,BLACK,male,40,12.5,0.5,0\n"
        );
        let file = write_temp(&content);
        let tuples = load_tuples(file.path()).unwrap();
        assert_eq!(tuples[0].records[0].recipient_race, Race::Other);
        assert_eq!(tuples[0].records[1].recipient_race, Race::Black);
        assert_eq!(tuples[0].records[1].recipient_gender, Gender::Male);
    }
}
