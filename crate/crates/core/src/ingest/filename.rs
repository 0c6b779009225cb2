use serde::{Deserialize, Serialize};

/// The parts of a `subject_id@study.extension` file name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileNameParts {
    pub subject_id: String,
    pub study: String,
    pub extension: String,
}

impl FileNameParts {
    pub fn file_name(&self) -> String {
        format!("{}@{}.{}", self.subject_id, self.study, self.extension)
    }
}

/// Splits a conforming name at its single `@` and its last `.`.
///
/// Returns `None` for anything that does not follow the convention; such
/// files must be assigned to a subject by hand.
pub fn parse_filename(name: &str) -> Option<FileNameParts> {
    if name.contains(['/', '\\']) || name.chars().any(char::is_control) {
        return None;
    }
    let (subject, rest) = name.split_once('@')?;
    if rest.contains('@') {
        return None;
    }
    let (study, extension) = rest.rsplit_once('.')?;
    let well_formed = |part: &str| !part.is_empty() && part.trim() == part;
    if !(well_formed(subject) && well_formed(study) && well_formed(extension)) {
        return None;
    }
    Some(FileNameParts {
        subject_id: subject.to_string(),
        study: study.to_string(),
        extension: extension.to_string(),
    })
}
