//! Per-session chat history and the recent-trace store.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use topokg_core::pipeline::{Citation, PipelineTrace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub question: String,
    pub answer: String,
    pub citations: Vec<Citation>,
    pub trace_id: String,
    /// Milliseconds since the Unix epoch.
    pub timestamp_ms: u64,
}

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Append-only histories, each capped at `limit` entries with the oldest
/// evicted first.
pub struct SessionStore {
    limit: usize,
    inner: Mutex<HashMap<String, VecDeque<HistoryEntry>>>,
}

impl SessionStore {
    pub fn new(limit: usize) -> Self {
        SessionStore {
            limit: limit.max(1),
            inner: Mutex::new(HashMap::new()),
        }
    }

    pub fn create(&self) -> String {
        let id = uuid::Uuid::new_v4().to_string();
        self.inner.lock().insert(id.clone(), VecDeque::new());
        id
    }

    pub fn contains(&self, id: &str) -> bool {
        self.inner.lock().contains_key(id)
    }

    /// Append to `id`, creating the session if needed.
    pub fn append(&self, id: &str, entry: HistoryEntry) {
        let mut map = self.inner.lock();
        let h = map.entry(id.to_string()).or_default();
        h.push_back(entry);
        while h.len() > self.limit {
            h.pop_front();
        }
    }

    pub fn history(&self, id: &str) -> Option<Vec<HistoryEntry>> {
        self.inner
            .lock()
            .get(id)
            .map(|h| h.iter().cloned().collect())
    }

    pub fn len(&self) -> usize {
        self.inner.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn save(&self, path: impl AsRef<Path>) -> anyhow::Result<()> {
        let snapshot: BTreeMap<String, Vec<HistoryEntry>> = self
            .inner
            .lock()
            .iter()
            .map(|(k, v)| (k.clone(), v.iter().cloned().collect()))
            .collect();
        let tmp = path.as_ref().with_extension("tmp");
        std::fs::write(&tmp, serde_json::to_vec_pretty(&snapshot)?)?;
        std::fs::rename(tmp, path)?;
        Ok(())
    }

    /// Read a saved store; a missing file gives an empty one.
    pub fn load(path: impl AsRef<Path>, limit: usize) -> anyhow::Result<Self> {
        let store = SessionStore::new(limit);
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(store),
            Err(e) => return Err(e.into()),
        };
        let saved: BTreeMap<String, Vec<HistoryEntry>> = serde_json::from_str(&text)?;
        for (id, entries) in saved {
            let mut h: VecDeque<HistoryEntry> = entries.into();
            while h.len() > store.limit {
                h.pop_front();
            }
            store.inner.lock().insert(id, h);
        }
        Ok(store)
    }
}

/// The most recent `limit` traces by id.
pub struct TraceStore {
    limit: usize,
    inner: Mutex<(HashMap<String, PipelineTrace>, VecDeque<String>)>,
}

impl TraceStore {
    pub fn new(limit: usize) -> Self {
        TraceStore {
            limit: limit.max(1),
            inner: Mutex::new((HashMap::new(), VecDeque::new())),
        }
    }

    pub fn insert(&self, trace: PipelineTrace) {
        let mut guard = self.inner.lock();
        let (map, order) = &mut *guard;
        let id = trace.trace_id.clone();
        if map.insert(id.clone(), trace).is_none() {
            order.push_back(id);
        }
        while order.len() > self.limit {
            if let Some(old) = order.pop_front() {
                map.remove(&old);
            }
        }
    }

    pub fn get(&self, id: &str) -> Option<PipelineTrace> {
        self.inner.lock().0.get(id).cloned()
    }
}
