//! Line-oriented sample and ledger files.
//!
//! A sample file starts with one header line followed by one record per
//! draw, all JSON, so files concatenate and diff cleanly and identical runs
//! produce identical bytes.

use crate::diagnostics::{LedgerEntry, TailSummary};
use crate::model::{Configuration, Individual};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("file has no header line")]
    MissingHeader,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleHeader {
    pub model: String,
    pub window: String,
    pub seed: u64,
    pub n: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct HeaderLine {
    header: SampleHeader,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub index: u64,
    pub model: String,
    pub window: String,
    pub individuals: Vec<Individual>,
    pub clan_depth: u32,
    pub clan_size: usize,
    pub truncated: bool,
}

impl SampleRecord {
    pub fn configuration(&self) -> Configuration {
        Configuration::from_items(self.individuals.clone())
    }
}

fn io_err(path: &Path, source: std::io::Error) -> RecordError {
    RecordError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn write_samples(
    path: &Path,
    header: &SampleHeader,
    records: &[SampleRecord],
) -> Result<(), RecordError> {
    let mut out = String::new();
    out.push_str(
        &serde_json::to_string(&HeaderLine {
            header: header.clone(),
        })
        .expect("serializable header"),
    );
    out.push('\n');
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("serializable record"));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn read_samples(path: &Path) -> Result<(SampleHeader, Vec<SampleRecord>), RecordError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines().enumerate();
    let header = match lines.next() {
        None => return Err(RecordError::MissingHeader),
        Some((_, first)) => serde_json::from_str::<HeaderLine>(first)
            .map_err(|e| RecordError::Malformed {
                line: 1,
                message: e.to_string(),
            })?
            .header,
    };
    let mut records = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let record: SampleRecord =
            serde_json::from_str(line).map_err(|e| RecordError::Malformed {
                line: i + 1,
                message: e.to_string(),
            })?;
        records.push(record);
    }
    Ok((header, records))
}

pub fn write_ledger(
    path: &Path,
    entries: &[LedgerEntry],
    summary: &TailSummary,
) -> Result<(), RecordError> {
    let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let mut go = || -> std::io::Result<()> {
        for e in entries {
            writeln!(w, "{}", serde_json::to_string(e).expect("serializable entry"))?;
        }
        writeln!(
            w,
            "{}",
            serde_json::json!({ "summary": summary })
        )?;
        w.flush()
    };
    go().map_err(|e| io_err(path, e))
}

/// Ledger path conventionally derived from a sample path.
pub fn ledger_path(sample_path: &Path) -> std::path::PathBuf {
    let mut name = sample_path.file_name().unwrap_or_default().to_os_string();
    name.push(".ledger");
    sample_path.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn record(index: u64) -> SampleRecord {
        SampleRecord {
            index,
            model: "toy-hardcore".to_string(),
            window: "all".to_string(),
            individuals: vec![Individual::Site { id: 0 }],
            clan_depth: 2,
            clan_size: 5,
            truncated: false,
        }
    }

    #[test]
    fn field_order_is_stable() {
        let line = serde_json::to_string(&record(3)).unwrap();
        let names = [
            "index",
            "model",
            "window",
            "individuals",
            "clan_depth",
            "clan_size",
            "truncated",
        ];
        let mut pos = 0;
        for name in names {
            let needle = format!("\"{name}\":");
            match line[pos..].find(&needle) {
                Some(at) => pos += at + needle.len(),
                None => panic!("field {name} missing or out of order in {line}"),
            }
        }
    }

    #[test]
    fn samples_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("s.jsonl");
        let header = SampleHeader {
            model: "toy-hardcore".to_string(),
            window: "all".to_string(),
            seed: 5,
            n: 2,
        };
        let records = vec![record(0), record(1)];
        write_samples(&path, &header, &records).unwrap();
        let (h, rs) = read_samples(&path).unwrap();
        assert_eq!(h, header);
        assert_eq!(rs, records);
        assert_eq!(rs[0].configuration().len(), 1);
    }

    #[test]
    fn empty_sample_file_is_header_only() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        let header = SampleHeader {
            model: "toy-free".to_string(),
            window: "all".to_string(),
            seed: 0,
            n: 0,
        };
        write_samples(&path, &header, &[]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1);
        let (h, rs) = read_samples(&path).unwrap();
        assert_eq!(h.n, 0);
        assert!(rs.is_empty());
    }

    #[test]
    fn malformed_lines_are_located() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(
            &path,
            "{\"header\":{\"model\":\"m\",\"window\":\"w\",\"seed\":0,\"n\":1}}\nnot json\n",
        )
        .unwrap();
        match read_samples(&path) {
            Err(RecordError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected malformed error, got {other:?}"),
        }
    }

    #[test]
    fn ledger_paths_extend_the_sample_name() {
        assert_eq!(
            ledger_path(Path::new("/tmp/x/samples.jsonl")),
            Path::new("/tmp/x/samples.jsonl.ledger")
        );
    }
}
