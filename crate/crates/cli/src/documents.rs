use std::io::BufRead;
use std::path::Path;

use serde::Deserialize;

use crate::{io_error, CliError};

#[derive(Debug, Clone, Deserialize)]
pub struct InputDocument {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub author: Option<String>,
}

fn is_jsonl(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("jsonl" | "ndjson"))
}

/// JSONL files hold one document per line; anything else is a single
/// plain-text document named after the file stem.
pub fn read_documents(path: &Path) -> Result<Vec<InputDocument>, CliError> {
    if is_jsonl(path) {
        return read_jsonl(path);
    }
    let text = std::fs::read_to_string(path).map_err(|e| io_error("read", path, e))?;
    let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or("document").to_string();
    Ok(vec![InputDocument { id, text, author: None }])
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CliError> {
    let file = std::fs::File::open(path).map_err(|e| io_error("read", path, e))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_error("read", path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc = serde_json::from_str(&line)
            .map_err(|e| CliError::Usage(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push(doc);
    }
    Ok(out)
}
