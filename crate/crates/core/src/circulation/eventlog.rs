//! Append-only, one-document-per-line event store and replay.

use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use super::{CirculationError, CirculationEvent, EventSink, Library, Seed};

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedLog {
    pub events: Vec<CirculationEvent>,
    /// Length of the well-formed prefix.
    pub valid_len: usize,
    /// A partially written last line was dropped.
    pub dropped_tail: bool,
    /// The last line parsed but has no terminating newline.
    pub needs_newline: bool,
}

/// Parses a log. Only the final line may be damaged (an interrupted
/// append); any other malformed line is an error.
pub fn parse_log(bytes: &[u8]) -> Result<ParsedLog, CirculationError> {
    let mut out = ParsedLog {
        events: Vec::new(),
        valid_len: 0,
        dropped_tail: false,
        needs_newline: false,
    };
    let mut start = 0;
    let mut line_no = 0;
    while start < bytes.len() {
        line_no += 1;
        let (line, end, terminated) = match bytes[start..].iter().position(|&b| b == b'\n') {
            Some(i) => (&bytes[start..start + i], start + i + 1, true),
            None => (&bytes[start..], bytes.len(), false),
        };
        if line.iter().all(|b| b.is_ascii_whitespace()) {
            start = end;
            if terminated {
                out.valid_len = end;
            }
            continue;
        }
        match serde_json::from_slice::<CirculationEvent>(line) {
            Ok(ev) => {
                out.events.push(ev);
                out.valid_len = end;
                out.needs_newline = !terminated;
            }
            Err(_) if !terminated => {
                out.dropped_tail = true;
                break;
            }
            Err(e) => {
                return Err(CirculationError::CorruptLog {
                    line: line_no,
                    reason: e.to_string(),
                })
            }
        }
        start = end;
    }
    Ok(out)
}

/// Folds `events` over the seed state.
pub fn replay(seed: &Seed, events: &[CirculationEvent]) -> Result<Library, CirculationError> {
    let mut lib = Library::new(seed);
    for (i, ev) in events.iter().enumerate() {
        lib.apply(ev).map_err(|e| match e {
            CirculationError::CorruptLog { reason, .. } => CirculationError::CorruptLog { line: i + 1, reason },
            other => other,
        })?;
    }
    Ok(lib)
}

fn storage(path: &Path, e: std::io::Error) -> CirculationError {
    CirculationError::Storage(format!("{}: {e}", path.display()))
}

/// Reads and replays a log file without modifying it.
pub fn replay_file(path: &Path, seed: &Seed) -> Result<Library, CirculationError> {
    let bytes = std::fs::read(path).map_err(|e| storage(path, e))?;
    replay(seed, &parse_log(&bytes)?.events)
}

/// The single writer of a log file.
#[derive(Debug)]
pub struct EventLog {
    file: File,
    path: PathBuf,
}

impl EventLog {
    /// Opens or creates the log, repairing a torn final line, and returns
    /// the events already stored.
    pub fn open(path: &Path) -> Result<(EventLog, Vec<CirculationEvent>), CirculationError> {
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(path)
            .map_err(|e| storage(path, e))?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes).map_err(|e| storage(path, e))?;
        let parsed = parse_log(&bytes)?;
        if parsed.dropped_tail {
            tracing::warn!(
                path = %path.display(),
                dropped_bytes = bytes.len() - parsed.valid_len,
                "truncating partial trailing line in event log"
            );
            file.set_len(parsed.valid_len as u64).map_err(|e| storage(path, e))?;
        }
        if parsed.needs_newline {
            file.write_all(b"\n").map_err(|e| storage(path, e))?;
        }
        Ok((
            EventLog {
                file,
                path: path.to_path_buf(),
            },
            parsed.events,
        ))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, event: &CirculationEvent) -> Result<(), CirculationError> {
        let mut line = serde_json::to_vec(event).expect("events serialize");
        line.push(b'\n');
        self.file.write_all(&line).map_err(|e| storage(&self.path, e))?;
        self.file.flush().map_err(|e| storage(&self.path, e))
    }
}

impl EventSink for EventLog {
    fn record(&mut self, event: &CirculationEvent) -> Result<(), CirculationError> {
        self.append(event)
    }
}
