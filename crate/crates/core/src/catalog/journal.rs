use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{FileAsset, FileId, Study, StudyId, Subject, SubjectId};
use crate::workers::Job;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(super) enum Op {
    CreateStudy(Study),
    CreateSubjects(Vec<Subject>),
    RegisterFile(FileAsset),
    PutJob(Job),
    DeleteStudy(StudyId),
    DeleteSubject(SubjectId),
    DeleteFile(FileId),
}

/// Append-only log of operations, one JSON object per line.
pub(super) struct Journal {
    file: File,
}

impl Journal {
    /// Opens the journal and returns every complete operation in it.
    ///
    /// A final line that does not parse is the remains of an interrupted
    /// append; it is cut off so later appends start on a clean line.
    pub(super) fn open(path: PathBuf) -> io::Result<(Journal, Vec<Op>)> {
        let mut file = OpenOptions::new().read(true).append(true).create(true).open(&path)?;
        let mut ops = Vec::new();
        let mut good_len = 0u64;
        let mut reader = BufReader::new(&file);
        let mut line = String::new();
        let mut torn = false;
        loop {
            line.clear();
            let read = reader.read_line(&mut line)?;
            if read == 0 {
                break;
            }
            let complete = line.ends_with('\n');
            match serde_json::from_str::<Op>(line.trim_end()) {
                Ok(op) if complete => ops.push(op),
                _ if line.trim().is_empty() && complete => {}
                Ok(_) | Err(_) => {
                    torn = true;
                    break;
                }
            }
            good_len += read as u64;
        }
        drop(reader);
        if torn {
            let rest = file.metadata()?.len() - good_len;
            log::warn!("discarding {rest} bytes of incomplete catalog journal tail");
            file.set_len(good_len)?;
            file.sync_all()?;
        }
        file.seek(SeekFrom::End(0))?;
        Ok((Journal { file }, ops))
    }

    pub(super) fn append(&mut self, op: &Op) -> io::Result<()> {
        let mut line = serde_json::to_vec(op).map_err(io::Error::other)?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.sync_data()
    }
}
