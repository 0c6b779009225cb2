use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::IngestError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubjectDescriptor {
    pub external_id: String,
    pub display_name: Option<String>,
}

/// Reads a header-less subject list: identifier, then an optional display name.
pub fn import_subjects_csv(bytes: &[u8]) -> Result<Vec<SubjectDescriptor>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);

    let mut seen = HashSet::new();
    let mut subjects = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let line = record.position().map_or(0, |p| p.line() as usize);
        let id = record.get(0).unwrap_or_default();
        if id.is_empty() {
            return Err(IngestError::EmptySubjectId(line));
        }
        if !seen.insert(id.to_string()) {
            return Err(IngestError::DuplicateSubject(id.to_string()));
        }
        subjects.push(SubjectDescriptor {
            external_id: id.to_string(),
            display_name: record.get(1).filter(|n| !n.is_empty()).map(str::to_string),
        });
    }
    if subjects.is_empty() {
        return Err(IngestError::EmptySubjectList);
    }
    Ok(subjects)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn id_only_rows() {
        let subjects = import_subjects_csv(b"16\n17\n18").unwrap();
        let ids: Vec<_> = subjects.iter().map(|s| s.external_id.as_str()).collect();
        assert_eq!(ids, ["16", "17", "18"]);
        assert!(subjects.iter().all(|s| s.display_name.is_none()));
    }

    #[test]
    fn two_column_rows() {
        let subjects = import_subjects_csv(b"16,Alice\r\n17,Bob\r\n\r\n").unwrap();
        assert_eq!(subjects.len(), 2);
        assert_eq!(subjects[1].display_name.as_deref(), Some("Bob"));
    }

    #[test]
    fn duplicate_is_rejected() {
        assert!(matches!(
            import_subjects_csv(b"16\n16"),
            Err(IngestError::DuplicateSubject(id)) if id == "16"
        ));
    }

    #[test]
    fn empty_inputs_are_rejected() {
        assert!(matches!(import_subjects_csv(b""), Err(IngestError::EmptySubjectList)));
        assert!(matches!(import_subjects_csv(b"\n\n"), Err(IngestError::EmptySubjectList)));
        assert!(matches!(import_subjects_csv(b"16\n,Bob"), Err(IngestError::EmptySubjectId(2))));
    }
}
