//! Filesystem formats: JSONL corpora, checkpoints, indexes, reports.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use pseudobridge_core::bytes::FormatError;
use pseudobridge_core::corpus::check_sample;
use pseudobridge_core::metrics::RankRow;
use pseudobridge_core::optim::AdamState;
use pseudobridge_core::train::StepLog;
use pseudobridge_core::{EncoderParams, Index, Sample};
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

/// Malformed lines quoted in a schema error; the rest are only counted.
pub const MAX_REPORTED_LINES: usize = 10;

pub const ENCODER_FILE: &str = "encoder.bin";
pub const OPTIMIZER_FILE: &str = "optimizer.bin";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    /// 1-based.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {count} malformed record(s): {}", path.display(), join_lines(lines))]
    Schema { path: PathBuf, count: usize, lines: Vec<LineError> },
    #[error("{}: {source}", path.display())]
    Format { path: PathBuf, source: FormatError },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{}: {message}", path.display())]
    Encode { path: PathBuf, message: String },
}

impl IoError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }

    /// True when the error comes from bad input content rather than the OS.
    pub fn is_content_error(&self) -> bool {
        !matches!(self, Self::Io { .. })
    }
}

fn join_lines(lines: &[LineError]) -> String {
    lines.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Parses JSONL text; blank lines are ignored. Every record is checked
/// against the schema and id uniqueness.
pub fn parse_jsonl(text: &str) -> Result<Vec<Sample>, (usize, Vec<LineError>)> {
    let mut samples = Vec::new();
    let mut errors = Vec::new();
    let mut count = 0;
    let mut seen = std::collections::HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let checked = serde_json::from_str::<Sample>(line)
            .map_err(|e| e.to_string())
            .and_then(|s| check_sample(&s, None).map(|()| s))
            .and_then(|s| {
                if seen.insert(s.id.clone()) {
                    Ok(s)
                } else {
                    Err(format!("duplicate id {:?}", s.id))
                }
            });
        match checked {
            Ok(s) => samples.push(s),
            Err(message) => {
                count += 1;
                if errors.len() < MAX_REPORTED_LINES {
                    errors.push(LineError { line: i + 1, message });
                }
            }
        }
    }
    if count > 0 {
        Err((count, errors))
    } else {
        Ok(samples)
    }
}

pub fn load_jsonl(path: &Path) -> Result<Vec<Sample>, IoError> {
    let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    parse_jsonl(&text).map_err(|(count, lines)| IoError::Schema { path: path.to_path_buf(), count, lines })
}

pub fn to_jsonl(corpus: &[Sample]) -> String {
    let mut out = String::new();
    for s in corpus {
        out.push_str(&serde_json::to_string(s).expect("samples always serialize"));
        out.push('\n');
    }
    out
}

pub fn save_jsonl(corpus: &[Sample], path: &Path) -> Result<(), IoError> {
    write_atomic(path, to_jsonl(corpus).as_bytes())
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| IoError::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| IoError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| IoError::io(path, e))?;
    tmp.persist(path).map_err(|e| IoError::io(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| IoError::Json { path: path.into(), source })?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| IoError::Json { path: path.into(), source })
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>, IoError> {
    fs::read(path).map_err(|e| IoError::io(path, e))
}

pub fn create_dir(path: &Path) -> Result<(), IoError> {
    fs::create_dir_all(path).map_err(|e| IoError::io(path, e))
}

/// A checkpoint directory: the encoder table plus, when present, the
/// optimizer moments that a later stage resumes from.
pub fn save_checkpoint(dir: &Path, params: &EncoderParams, optimizer: Option<&AdamState>) -> Result<(), IoError> {
    create_dir(dir)?;
    write_atomic(&dir.join(ENCODER_FILE), &params.to_bytes())?;
    let opt_path = dir.join(OPTIMIZER_FILE);
    match optimizer {
        Some(state) => write_atomic(&opt_path, &state.to_bytes())?,
        None if opt_path.exists() => fs::remove_file(&opt_path).map_err(|e| IoError::io(&opt_path, e))?,
        None => {}
    }
    Ok(())
}

/// Accepts a checkpoint directory or a bare encoder file.
pub fn load_checkpoint(path: &Path) -> Result<(EncoderParams, Option<AdamState>), IoError> {
    let (encoder, optimizer) = if path.is_dir() {
        (path.join(ENCODER_FILE), Some(path.join(OPTIMIZER_FILE)))
    } else {
        (path.to_path_buf(), None)
    };
    let params = EncoderParams::from_bytes(&read_bytes(&encoder)?)
        .map_err(|source| IoError::Format { path: encoder.clone(), source })?;
    let state = match optimizer.filter(|p| p.exists()) {
        Some(p) => Some(AdamState::from_bytes(&read_bytes(&p)?).map_err(|source| IoError::Format { path: p, source })?),
        None => None,
    };
    Ok((params, state))
}

pub fn save_index(path: &Path, index: &Index) -> Result<(), IoError> {
    write_atomic(path, &index.to_bytes())
}

pub fn load_index(path: &Path) -> Result<Index, IoError> {
    Index::from_bytes(&read_bytes(path)?).map_err(|source| IoError::Format { path: path.into(), source })
}

/// `id,rank,top1_id,top1_score` with a header row.
pub fn rank_csv(rows: &[RankRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).expect("in-memory csv write");
    }
    w.into_inner().expect("in-memory csv flush")
}

pub fn step_log_jsonl(log: &[StepLog]) -> String {
    log.iter().map(|s| serde_json::to_string(s).expect("step logs serialize") + "\n").collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blank_lines_are_skipped() {
        let text = "\n{\"id\":\"a\",\"language\":\"python\",\"query\":\"q q q\",\"code\":\"x\"}\n\n";
        let c = parse_jsonl(text).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].id, "a");
    }

    #[test]
    fn at_most_ten_lines_reported() {
        let text = "{}\n".repeat(25);
        let (count, lines) = parse_jsonl(&text).unwrap_err();
        assert_eq!(count, 25);
        assert_eq!(lines.len(), MAX_REPORTED_LINES);
        assert_eq!(lines[9].line, 10);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let line = "{\"id\":\"a\",\"language\":\"python\",\"query\":\"q\",\"code\":\"x\"}\n";
        let (_, lines) = parse_jsonl(&line.repeat(2)).unwrap_err();
        assert_eq!(lines[0].line, 2);
        assert!(lines[0].message.contains("duplicate"));
    }

    #[test]
    fn rank_csv_has_header() {
        let rows = vec![RankRow { id: "a".into(), rank: 2, top1_id: "b".into(), top1_score: 0.5 }];
        assert_eq!(String::from_utf8(rank_csv(&rows)).unwrap(), "id,rank,top1_id,top1_score\na,2,b,0.5\n");
    }
}
