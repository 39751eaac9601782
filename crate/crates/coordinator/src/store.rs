use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::MeasurementRecord;

/// Append-only store writer. One record per line; a line is durable once
/// flushed, and the reader treats anything else as quarantinable.
#[derive(Debug)]
pub struct StoreWriter {
    path: PathBuf,
    file: BufWriter<File>,
    lines_written: u64,
}

impl StoreWriter {
    pub fn open(path: &Path) -> std::io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(StoreWriter {
            path: path.to_path_buf(),
            file: BufWriter::new(file),
            lines_written: 0,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn lines_written(&self) -> u64 {
        self.lines_written
    }

    /// Append one raw line. Embedded newlines are rejected by escaping is
    /// not attempted: the caller feeds single-line payloads.
    pub fn append_line(&mut self, line: &str) -> std::io::Result<()> {
        debug_assert!(!line.contains('\n'));
        self.file.write_all(line.as_bytes())?;
        self.file.write_all(b"\n")?;
        self.lines_written += 1;
        Ok(())
    }

    pub fn append_record(&mut self, record: &MeasurementRecord) -> std::io::Result<()> {
        self.append_line(&record.to_line())
    }

    pub fn flush(&mut self) -> std::io::Result<()> {
        self.file.flush()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuarantineEntry {
    pub line_number: usize,
    pub reason: String,
    pub raw: String,
}

#[derive(Debug)]
pub struct StoreReadOutcome {
    pub records: Vec<MeasurementRecord>,
    pub quarantined: Vec<QuarantineEntry>,
}

/// Read a store file back. Every well-formed line parses independently;
/// malformed lines and a truncated final line are quarantined with a
/// reason, never silently dropped.
pub fn read_store(path: &Path) -> std::io::Result<StoreReadOutcome> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    let mut records = Vec::new();
    let mut quarantined = Vec::new();
    let complete = text.ends_with('\n');
    let lines: Vec<&str> = text.split('\n').collect();
    // with a trailing newline the final split element is empty
    let n = lines.len().saturating_sub(1);
    for (idx, line) in lines.iter().take(n).enumerate() {
        if line.is_empty() {
            continue;
        }
        match MeasurementRecord::from_line(line) {
            Ok(r) => records.push(r),
            Err(e) => quarantined.push(QuarantineEntry {
                line_number: idx + 1,
                reason: e.to_string(),
                raw: line.to_string(),
            }),
        }
    }
    if !complete && !lines[n].is_empty() {
        quarantined.push(QuarantineEntry {
            line_number: n + 1,
            reason: "truncated final line (no newline)".into(),
            raw: lines[n].to_string(),
        });
    }
    Ok(StoreReadOutcome {
        records,
        quarantined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Payload;
    use std::io::Write as _;
    use tracemap_core::Ip;
    use tracemap_netsim::{PingResult, ProbeKind};

    fn record(id: u64) -> MeasurementRecord {
        MeasurementRecord {
            measurement_id: id,
            agent_id: "a1".into(),
            agent_rank: 1,
            source_ip: Ip(0x0a010001),
            source_as: None,
            timestamp: 100,
            experiment_id: "e1".into(),
            payload: Payload::Ping(PingResult {
                src: Ip(0x0a010001),
                target: Ip(0x0a020001),
                responder: None,
                probe_kind: ProbeKind::Udp,
            }),
        }
    }

    #[test]
    fn roundtrip_and_quarantine() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.log");
        let mut w = StoreWriter::open(&path).unwrap();
        w.append_record(&record(1)).unwrap();
        w.append_line("this is not a record").unwrap();
        w.append_record(&record(2)).unwrap();
        w.flush().unwrap();

        let out = read_store(&path).unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.quarantined.len(), 1);
        assert_eq!(out.quarantined[0].line_number, 2);
    }

    #[test]
    fn truncated_tail_is_quarantined_not_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.log");
        let mut w = StoreWriter::open(&path).unwrap();
        w.append_record(&record(1)).unwrap();
        w.flush().unwrap();
        // simulate a crash mid-write
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        let full = record(2).to_line();
        f.write_all(full[..full.len() / 2].as_bytes()).unwrap();
        f.flush().unwrap();

        let out = read_store(&path).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.quarantined.len(), 1);
        assert!(out.quarantined[0].reason.contains("truncated"));
    }
}
