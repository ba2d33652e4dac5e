use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("document key must be nonempty")]
    EmptyKey,
    #[error("document {0:?} not found")]
    NotFound(String),
    #[error("document store I/O failed: {0}")]
    Storage(String),
    #[error("document {key:?} has unexpected shape: {message}")]
    Shape { key: String, message: String },
}

/// Keyed JSON document store. Last writer wins; readers never block each
/// other. With a backing file every write is appended as `{key, doc}` and
/// the latest line per key is restored on open.
pub struct DocumentStore {
    docs: RwLock<BTreeMap<String, Value>>,
    file: Option<Mutex<(PathBuf, File)>>,
}

impl Default for DocumentStore {
    fn default() -> Self {
        Self::in_memory()
    }
}

impl DocumentStore {
    pub fn in_memory() -> Self {
        Self {
            docs: RwLock::new(BTreeMap::new()),
            file: None,
        }
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref().to_path_buf();
        let mut docs = BTreeMap::new();
        if path.exists() {
            let f = File::open(&path).map_err(|e| StoreError::Storage(e.to_string()))?;
            for line in BufReader::new(f).lines() {
                let line = line.map_err(|e| StoreError::Storage(e.to_string()))?;
                if line.trim().is_empty() {
                    continue;
                }
                let mut entry: Value =
                    serde_json::from_str(&line).map_err(|e| StoreError::Storage(e.to_string()))?;
                if let (Some(Value::String(key)), doc) =
                    (entry.get("key").cloned(), entry["doc"].take())
                {
                    docs.insert(key, doc);
                }
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| StoreError::Storage(e.to_string()))?;
        Ok(Self {
            docs: RwLock::new(docs),
            file: Some(Mutex::new((path, file))),
        })
    }

    pub fn put(&self, key: &str, doc: Value) -> Result<(), StoreError> {
        if key.is_empty() {
            return Err(StoreError::EmptyKey);
        }
        let mut docs = self.docs.write().unwrap_or_else(|e| e.into_inner());
        if let Some(file) = &self.file {
            let mut guard = file.lock().unwrap_or_else(|e| e.into_inner());
            let mut line = serde_json::to_vec(&json!({"key": key, "doc": &doc}))
                .map_err(|e| StoreError::Storage(e.to_string()))?;
            line.push(b'\n');
            guard
                .1
                .write_all(&line)
                .map_err(|e| StoreError::Storage(e.to_string()))?;
        }
        docs.insert(key.to_string(), doc);
        Ok(())
    }

    pub fn get(&self, key: &str) -> Result<Value, StoreError> {
        if key.is_empty() {
            return Err(StoreError::EmptyKey);
        }
        self.docs
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(key)
            .cloned()
            .ok_or_else(|| StoreError::NotFound(key.to_string()))
    }

    pub fn contains(&self, key: &str) -> bool {
        self.docs
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .contains_key(key)
    }

    pub fn put_as<T: Serialize>(&self, key: &str, value: &T) -> Result<(), StoreError> {
        let doc = serde_json::to_value(value).map_err(|e| StoreError::Shape {
            key: key.to_string(),
            message: e.to_string(),
        })?;
        self.put(key, doc)
    }

    pub fn get_as<T: DeserializeOwned>(&self, key: &str) -> Result<T, StoreError> {
        serde_json::from_value(self.get(key)?).map_err(|e| StoreError::Shape {
            key: key.to_string(),
            message: e.to_string(),
        })
    }

    /// Keys starting with `prefix`, sorted.
    pub fn keys_with_prefix(&self, prefix: &str) -> Vec<String> {
        self.docs
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .range(prefix.to_string()..)
            .take_while(|(k, _)| k.starts_with(prefix))
            .map(|(k, _)| k.clone())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.docs.read().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn put_get_and_last_writer_wins() {
        let store = DocumentStore::in_memory();
        store.put("a", json!({"v": 1})).unwrap();
        assert_eq!(store.get("a").unwrap(), json!({"v": 1}));
        store.put("a", json!({"v": 2})).unwrap();
        assert_eq!(store.get("a").unwrap(), json!({"v": 2}));
        assert!(matches!(store.get("missing"), Err(StoreError::NotFound(_))));
        assert!(matches!(store.put("", json!(1)), Err(StoreError::EmptyKey)));
    }

    #[test]
    fn file_store_restores_latest() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("docs.jsonl");
        {
            let store = DocumentStore::open(&path).unwrap();
            store.put("k/1", json!("x")).unwrap();
            store.put("k/2", json!("y")).unwrap();
            store.put("k/1", json!("z")).unwrap();
        }
        let store = DocumentStore::open(&path).unwrap();
        assert_eq!(store.get("k/1").unwrap(), json!("z"));
        assert_eq!(store.keys_with_prefix("k/"), vec!["k/1", "k/2"]);
    }
}
