//! Versioned JSON dump of a built graph.

use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GraphEdge, GraphError, GraphNode, PropertyGraph};

pub const SNAPSHOT_VERSION: u32 = 1;
const FORMAT: &str = "topokg-graph";

#[derive(Serialize)]
struct SnapshotOut<'a> {
    format: &'static str,
    version: u32,
    nodes: &'a [GraphNode],
    edges: &'a [GraphEdge],
}

#[derive(Deserialize)]
struct SnapshotIn {
    format: String,
    version: u32,
    nodes: Vec<GraphNode>,
    edges: Vec<GraphEdge>,
}

impl PropertyGraph {
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<(), GraphError> {
        let snap = SnapshotOut {
            format: FORMAT,
            version: SNAPSHOT_VERSION,
            nodes: self.nodes(),
            edges: self.edges(),
        };
        serde_json::to_writer(&mut w, &snap).map_err(|e| GraphError::Snapshot(e.to_string()))?;
        w.write_all(b"\n")
            .map_err(|e| GraphError::Snapshot(e.to_string()))
    }

    pub fn to_snapshot_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_snapshot(&mut buf)
            .expect("writing to a Vec cannot fail");
        buf
    }

    pub fn from_snapshot_slice(bytes: &[u8]) -> Result<Self, GraphError> {
        let snap: SnapshotIn =
            serde_json::from_slice(bytes).map_err(|e| GraphError::Snapshot(e.to_string()))?;
        from_snapshot(snap)
    }
}

fn from_snapshot(snap: SnapshotIn) -> Result<PropertyGraph, GraphError> {
    if snap.format != FORMAT {
        return Err(GraphError::Snapshot(format!(
            "not a graph snapshot (format {:?})",
            snap.format
        )));
    }
    if snap.version != SNAPSHOT_VERSION {
        return Err(GraphError::Snapshot(format!(
            "unsupported snapshot version {}",
            snap.version
        )));
    }
    PropertyGraph::from_parts(snap.nodes, snap.edges)
}

pub fn save_snapshot(g: &PropertyGraph, path: impl AsRef<Path>) -> Result<(), GraphError> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|source| GraphError::FileUnreadable {
        path: path.display().to_string(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    g.write_snapshot(&mut w)?;
    w.flush().map_err(|e| GraphError::Snapshot(e.to_string()))
}

pub fn load_snapshot(path: impl AsRef<Path>) -> Result<PropertyGraph, GraphError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| GraphError::FileUnreadable {
        path: path.display().to_string(),
        source,
    })?;
    let snap: SnapshotIn = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| GraphError::Snapshot(e.to_string()))?;
    from_snapshot(snap)
}
