use super::{BusError, Event};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

/// Append-only storage for events.
pub trait EventLog: Send {
    fn append(&mut self, event: &Event) -> Result<(), BusError>;
    fn events(&self) -> Result<Vec<Event>, BusError>;
}

#[derive(Default)]
pub struct MemoryLog {
    events: Vec<Event>,
}

impl EventLog for MemoryLog {
    fn append(&mut self, event: &Event) -> Result<(), BusError> {
        self.events.push(event.clone());
        Ok(())
    }

    fn events(&self) -> Result<Vec<Event>, BusError> {
        Ok(self.events.clone())
    }
}

/// One JSON document per line: `{topic, seq, actor, ts, payload}`.
pub struct FileLog {
    path: PathBuf,
    file: File,
    len: u64,
    sync: bool,
}

impl FileLog {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, BusError> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new()
            .create(true)
            .read(true)
            .append(true)
            .open(&path)
            .map_err(|e| BusError::Storage(e.to_string()))?;
        let len = file
            .metadata()
            .map_err(|e| BusError::Storage(e.to_string()))?
            .len();
        Ok(Self {
            path,
            file,
            len,
            sync: true,
        })
    }

    /// Skips `fsync` after each append. Writes still reach the OS before
    /// delivery.
    pub fn without_sync(mut self) -> Self {
        self.sync = false;
        self
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl EventLog for FileLog {
    fn append(&mut self, event: &Event) -> Result<(), BusError> {
        let mut line = serde_json::to_vec(event).map_err(|e| BusError::Storage(e.to_string()))?;
        line.push(b'\n');
        let result = self
            .file
            .write_all(&line)
            .and_then(|_| self.file.flush())
            .and_then(|_| {
                if self.sync {
                    self.file.sync_data()
                } else {
                    Ok(())
                }
            });
        match result {
            Ok(()) => {
                self.len += line.len() as u64;
                Ok(())
            }
            Err(e) => {
                // roll back a partial line
                let _ = self.file.set_len(self.len);
                Err(BusError::Storage(e.to_string()))
            }
        }
    }

    fn events(&self) -> Result<Vec<Event>, BusError> {
        let file = File::open(&self.path).map_err(|e| BusError::Storage(e.to_string()))?;
        let mut events = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| BusError::Storage(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let event = serde_json::from_str(&line).map_err(|e| BusError::Corrupt {
                line: i + 1,
                message: e.to_string(),
            })?;
            events.push(event);
        }
        Ok(events)
    }
}
