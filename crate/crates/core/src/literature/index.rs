use std::cmp::Ordering;
use std::collections::HashSet;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Embedder, HashingEmbedder, LiteratureError, QaPair};

/// Number of pairs handed to answer synthesis.
pub const DEFAULT_K: usize = 3;

const FORMAT: &str = "topokg-index";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalHit {
    pub pair: QaPair,
    /// Squared L2 distance between the query and question embeddings.
    pub distance: f64,
}

/// Exact nearest-neighbour index. Vectors are stored row-major in one buffer.
#[derive(Clone)]
pub struct VectorIndex {
    embedder: Arc<dyn Embedder>,
    dim: usize,
    data: Vec<f64>,
    pairs: Vec<QaPair>,
    ids: HashSet<u64>,
}

impl std::fmt::Debug for VectorIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VectorIndex")
            .field("embedder", &self.embedder.name())
            .field("dim", &self.dim)
            .field("len", &self.pairs.len())
            .finish()
    }
}

impl Default for VectorIndex {
    fn default() -> Self {
        VectorIndex::new(Arc::new(HashingEmbedder::default()))
    }
}

fn squared_l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl VectorIndex {
    pub fn new(embedder: Arc<dyn Embedder>) -> Self {
        VectorIndex {
            dim: embedder.dim(),
            embedder,
            data: Vec::new(),
            pairs: Vec::new(),
            ids: HashSet::new(),
        }
    }

    pub fn from_pairs(
        embedder: Arc<dyn Embedder>,
        pairs: impl IntoIterator<Item = QaPair>,
    ) -> Result<Self, LiteratureError> {
        let mut ix = VectorIndex::new(embedder);
        for p in pairs {
            ix.add(p)?;
        }
        Ok(ix)
    }

    pub fn embedder(&self) -> &dyn Embedder {
        self.embedder.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[QaPair] {
        &self.pairs
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, id: u64) -> Option<&QaPair> {
        self.pairs.iter().find(|p| p.id == id)
    }

    /// Embed the pair's question and store it.
    pub fn add(&mut self, pair: QaPair) -> Result<(), LiteratureError> {
        pair.validate()
            .map_err(|reason| LiteratureError::MalformedPair {
                index: self.pairs.len(),
                reason,
            })?;
        if self.ids.contains(&pair.id) {
            return Err(LiteratureError::DuplicateId(pair.id));
        }
        let v = self.embedder.embed(&pair.question)?;
        self.add_with_vector(pair, v)
    }

    pub fn add_with_vector(&mut self, pair: QaPair, v: Vec<f64>) -> Result<(), LiteratureError> {
        if v.len() != self.dim {
            return Err(LiteratureError::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        if !self.ids.insert(pair.id) {
            return Err(LiteratureError::DuplicateId(pair.id));
        }
        self.data.extend_from_slice(&v);
        self.pairs.push(pair);
        Ok(())
    }

    pub fn search(&self, query: &str, k: usize) -> Result<Vec<RetrievalHit>, LiteratureError> {
        let q = self.embedder.embed(query)?;
        Ok(self.search_vector(&q, k))
    }

    /// Top `k` by ascending squared distance, ties by ascending id.
    pub fn search_vector(&self, q: &[f64], k: usize) -> Vec<RetrievalHit> {
        if k == 0 || self.pairs.is_empty() {
            return Vec::new();
        }
        let mut scored: Vec<(f64, u64, usize)> = (0..self.pairs.len())
            .map(|i| (squared_l2(q, self.vector(i)), self.pairs[i].id, i))
            .collect();
        let cmp = |a: &(f64, u64, usize), b: &(f64, u64, usize)| -> Ordering {
            a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
        };
        let k = k.min(scored.len());
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, cmp);
            scored.truncate(k);
        }
        scored.sort_by(cmp);
        scored
            .into_iter()
            .map(|(distance, _, i)| RetrievalHit {
                pair: self.pairs[i].clone(),
                distance,
            })
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct Entry {
    pair: QaPair,
    vector: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    format: String,
    version: u32,
    embedder: String,
    dim: usize,
    entries: Vec<Entry>,
}

fn io_err(path: &Path, source: std::io::Error) -> LiteratureError {
    LiteratureError::FileUnreadable {
        path: path.display().to_string(),
        source,
    }
}

pub fn save_index(ix: &VectorIndex, path: impl AsRef<Path>) -> Result<(), LiteratureError> {
    let path = path.as_ref();
    let snap = Snapshot {
        format: FORMAT.into(),
        version: VERSION,
        embedder: ix.embedder.name().to_string(),
        dim: ix.dim,
        entries: ix
            .pairs
            .iter()
            .enumerate()
            .map(|(i, p)| Entry {
                pair: p.clone(),
                vector: ix.vector(i).to_vec(),
            })
            .collect(),
    };
    let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, &snap).map_err(|e| LiteratureError::Snapshot(e.to_string()))?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|e| io_err(path, e))
}

/// Load a snapshot written with the hashing embedder.
pub fn load_index(path: impl AsRef<Path>) -> Result<VectorIndex, LiteratureError> {
    load(path.as_ref(), None)
}

/// Load a snapshot whose vectors came from `embedder`.
pub fn load_index_with(
    path: impl AsRef<Path>,
    embedder: Arc<dyn Embedder>,
) -> Result<VectorIndex, LiteratureError> {
    load(path.as_ref(), Some(embedder))
}

fn load(path: &Path, embedder: Option<Arc<dyn Embedder>>) -> Result<VectorIndex, LiteratureError> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let snap: Snapshot = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| LiteratureError::Snapshot(e.to_string()))?;
    if snap.format != FORMAT || snap.version != VERSION {
        return Err(LiteratureError::Snapshot(format!(
            "expected {FORMAT} v{VERSION}, found {} v{}",
            snap.format, snap.version
        )));
    }
    let embedder: Arc<dyn Embedder> = match embedder {
        Some(e) => e,
        None if snap.embedder == HashingEmbedder::NAME => Arc::new(HashingEmbedder::new(snap.dim)),
        None => {
            return Err(LiteratureError::Snapshot(format!(
                "index was built with embedder {:?}; supply it explicitly",
                snap.embedder
            )))
        }
    };
    if embedder.name() != snap.embedder || embedder.dim() != snap.dim {
        return Err(LiteratureError::Snapshot(format!(
            "index was built with {} (dim {}), not {} (dim {})",
            snap.embedder,
            snap.dim,
            embedder.name(),
            embedder.dim()
        )));
    }
    let mut ix = VectorIndex::new(embedder);
    for e in snap.entries {
        ix.add_with_vector(e.pair, e.vector)?;
    }
    Ok(ix)
}
