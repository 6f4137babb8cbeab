use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::pipeline::UnitRecord;

#[derive(Serialize, Deserialize)]
struct Line {
    fingerprint: String,
    id: String,
    record: UnitRecord,
}

/// Append-only JSONL log of completed units. Records written under a
/// different configuration fingerprint are ignored on resume.
pub struct Checkpoint {
    path: PathBuf,
    fingerprint: String,
    done: HashMap<(String, usize), UnitRecord>,
    file: Mutex<File>,
}

impl Checkpoint {
    /// Opens `path`, loading earlier records when `resume` is set and
    /// truncating the file otherwise. Malformed trailing lines from an
    /// interrupted write are skipped.
    pub fn open(path: &Path, fingerprint: &str, resume: bool) -> Result<Self> {
        let mut done = HashMap::new();
        if resume && path.exists() {
            for line in BufReader::new(File::open(path)?).lines() {
                let line = line?;
                match serde_json::from_str::<Line>(&line) {
                    Ok(l) if l.fingerprint == fingerprint => {
                        done.insert((l.id, l.record.unit), l.record);
                    }
                    Ok(_) => {}
                    Err(e) => log::warn!("ignoring unreadable checkpoint line: {e}"),
                }
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(resume)
            .write(true)
            .truncate(!resume)
            .open(path)?;
        Ok(Self {
            path: path.to_path_buf(),
            fingerprint: fingerprint.to_string(),
            done,
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Number of units loaded from an earlier run.
    pub fn resumed(&self) -> usize {
        self.done.len()
    }

    /// A stored record for unit `unit` of document `id`, if its sentence
    /// still matches.
    pub fn get(&self, id: &str, unit: usize, original: &str) -> Option<UnitRecord> {
        self.done
            .get(&(id.to_string(), unit))
            .filter(|r| r.original == original)
            .cloned()
    }

    pub fn record(&self, id: &str, record: &UnitRecord) -> Result<()> {
        let line = serde_json::to_string(&Line {
            fingerprint: self.fingerprint.clone(),
            id: id.to_string(),
            record: record.clone(),
        })?;
        let mut file = self.file.lock().unwrap_or_else(|p| p.into_inner());
        writeln!(file, "{line}")?;
        file.flush()?;
        Ok(())
    }
}
