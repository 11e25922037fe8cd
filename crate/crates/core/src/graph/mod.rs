//! The materials property graph.
//!
//! Six node categories are linked from each `Formula` node by five relation
//! types. The graph is assembled once by [`build_graph`] (or loaded from a
//! snapshot) and is read-only afterwards.

mod build;
mod record;
mod snapshot;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use build::build_graph;
pub use record::{
    load_materials, parse_materials, validate_record, CrystalSystem, LoadReport, MalformedRecord,
    MaterialRecord, TopoClassName, Violation, POINT_GROUPS,
};
pub use snapshot::{load_snapshot, save_snapshot, SNAPSHOT_VERSION};

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("cannot read {path}: {source}")]
    FileUnreadable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("duplicate material {name} ({mat_id})")]
    DuplicateFormula { name: String, mat_id: String },
    #[error("record {index} is invalid: {violations:?}")]
    InvalidRecord {
        index: usize,
        violations: Vec<Violation>,
    },
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("inconsistent graph: {0}")]
    Inconsistent(String),
    #[error("snapshot error: {0}")]
    Snapshot(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeCategory {
    Formula,
    Element,
    Lattice,
    Spacegroup,
    Pointgroup,
    TopoClass,
}

impl NodeCategory {
    pub const ALL: [NodeCategory; 6] = [
        NodeCategory::Formula,
        NodeCategory::Element,
        NodeCategory::Lattice,
        NodeCategory::Spacegroup,
        NodeCategory::Pointgroup,
        NodeCategory::TopoClass,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NodeCategory::Formula => "Formula",
            NodeCategory::Element => "Element",
            NodeCategory::Lattice => "Lattice",
            NodeCategory::Spacegroup => "Spacegroup",
            NodeCategory::Pointgroup => "Pointgroup",
            NodeCategory::TopoClass => "TopoClass",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for NodeCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NodeCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NodeCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown node category {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeType {
    #[serde(rename = "HAS_ELEMENT")]
    HasElement,
    #[serde(rename = "HAS_LATTICE")]
    HasLattice,
    #[serde(rename = "BELONGS_TO_SPACEGROUP")]
    BelongsToSpacegroup,
    #[serde(rename = "BELONGS_TO_POINTGROUP")]
    BelongsToPointgroup,
    #[serde(rename = "BELONGS_TO_TOPOCLASS")]
    BelongsToTopoClass,
}

impl EdgeType {
    pub const ALL: [EdgeType; 5] = [
        EdgeType::HasElement,
        EdgeType::HasLattice,
        EdgeType::BelongsToSpacegroup,
        EdgeType::BelongsToPointgroup,
        EdgeType::BelongsToTopoClass,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeType::HasElement => "HAS_ELEMENT",
            EdgeType::HasLattice => "HAS_LATTICE",
            EdgeType::BelongsToSpacegroup => "BELONGS_TO_SPACEGROUP",
            EdgeType::BelongsToPointgroup => "BELONGS_TO_POINTGROUP",
            EdgeType::BelongsToTopoClass => "BELONGS_TO_TOPOCLASS",
        }
    }

    /// Category every edge of this type points at.
    pub fn target(self) -> NodeCategory {
        match self {
            EdgeType::HasElement => NodeCategory::Element,
            EdgeType::HasLattice => NodeCategory::Lattice,
            EdgeType::BelongsToSpacegroup => NodeCategory::Spacegroup,
            EdgeType::BelongsToPointgroup => NodeCategory::Pointgroup,
            EdgeType::BelongsToTopoClass => NodeCategory::TopoClass,
        }
    }
}

impl fmt::Display for EdgeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EdgeType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EdgeType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown relation type {s:?}"))
    }
}

/// Spin-orbit coupling setting carried on class edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Coupling {
    #[serde(rename = "SOC")]
    Soc,
    #[serde(rename = "NSOC")]
    Nsoc,
}

impl Coupling {
    pub fn as_str(self) -> &'static str {
        match self {
            Coupling::Soc => "SOC",
            Coupling::Nsoc => "NSOC",
        }
    }
}

impl fmt::Display for Coupling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Coupling {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "SOC" => Ok(Coupling::Soc),
            "NSOC" => Ok(Coupling::Nsoc),
            _ => Err(format!("unknown coupling {s:?}, expected SOC or NSOC")),
        }
    }
}

/// Flat attribute value. Absent attributes are normally just missing from the
/// map; `Absent` shows up in query results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttrValue {
    Text(String),
    Int(i64),
    Real(f64),
    Absent,
}

impl AttrValue {
    pub fn is_absent(&self) -> bool {
        matches!(self, AttrValue::Absent)
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            AttrValue::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            AttrValue::Int(i) => Some(*i as f64),
            AttrValue::Real(x) => Some(*x),
            _ => None,
        }
    }
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::Text(s) => f.write_str(s),
            AttrValue::Int(i) => write!(f, "{i}"),
            AttrValue::Real(x) => {
                if x.is_finite() && x.fract() == 0.0 && x.abs() < 1e16 {
                    write!(f, "{x:.1}")
                } else {
                    write!(f, "{x}")
                }
            }
            AttrValue::Absent => Ok(()),
        }
    }
}

impl From<&str> for AttrValue {
    fn from(s: &str) -> Self {
        AttrValue::Text(s.to_string())
    }
}

impl From<String> for AttrValue {
    fn from(s: String) -> Self {
        AttrValue::Text(s)
    }
}

impl From<f64> for AttrValue {
    fn from(x: f64) -> Self {
        AttrValue::Real(x)
    }
}

impl From<i64> for AttrValue {
    fn from(i: i64) -> Self {
        AttrValue::Int(i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl EdgeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: NodeId,
    pub cate: NodeCategory,
    pub name: String,
    #[serde(default)]
    pub attrs: BTreeMap<String, AttrValue>,
}

impl GraphNode {
    /// Property lookup that also resolves the built-in `name` and `cate` keys.
    pub fn property(&self, key: &str) -> Option<AttrValue> {
        match key {
            "name" => Some(AttrValue::Text(self.name.clone())),
            "cate" => Some(AttrValue::Text(self.cate.as_str().to_string())),
            _ => self.attrs.get(key).cloned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub id: EdgeId,
    pub src: NodeId,
    pub dst: NodeId,
    pub etype: EdgeType,
    #[serde(default)]
    pub rel_value: Option<Coupling>,
}

/// Node and edge counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes: BTreeMap<NodeCategory, usize>,
    pub edges: BTreeMap<EdgeType, usize>,
}

impl GraphStats {
    pub fn node_count(&self, cate: NodeCategory) -> usize {
        self.nodes.get(&cate).copied().unwrap_or(0)
    }

    pub fn edge_count(&self, etype: EdgeType) -> usize {
        self.edges.get(&etype).copied().unwrap_or(0)
    }

    pub fn total_nodes(&self) -> usize {
        self.nodes.values().sum()
    }

    pub fn total_edges(&self) -> usize {
        self.edges.values().sum()
    }
}

#[derive(Debug, Clone, Default)]
pub struct PropertyGraph {
    nodes: Vec<GraphNode>,
    edges: Vec<GraphEdge>,
    outgoing: Vec<Vec<EdgeId>>,
    incoming: Vec<Vec<EdgeId>>,
    by_name: HashMap<(NodeCategory, String), NodeId>,
    by_cate: [Vec<NodeId>; 6],
}

impl PropertyGraph {
    /// Assemble a graph from raw parts, checking every structural invariant.
    /// Node ids must equal their position; edge ids likewise.
    pub fn from_parts(nodes: Vec<GraphNode>, edges: Vec<GraphEdge>) -> Result<Self, GraphError> {
        let mut g = PropertyGraph {
            outgoing: vec![Vec::new(); nodes.len()],
            incoming: vec![Vec::new(); nodes.len()],
            ..Default::default()
        };
        for (i, node) in nodes.iter().enumerate() {
            if node.id.index() != i {
                return Err(GraphError::Inconsistent(format!(
                    "node at position {i} has id {}",
                    node.id
                )));
            }
            if node.name.is_empty() {
                return Err(GraphError::Inconsistent(format!(
                    "node {i} has an empty name"
                )));
            }
            if g.by_name
                .insert((node.cate, node.name.clone()), node.id)
                .is_some()
            {
                return Err(GraphError::Inconsistent(format!(
                    "duplicate {} node {:?}",
                    node.cate, node.name
                )));
            }
            g.by_cate[node.cate.index()].push(node.id);
        }
        for (i, edge) in edges.iter().enumerate() {
            if edge.id.index() != i {
                return Err(GraphError::Inconsistent(format!(
                    "edge at position {i} has id {}",
                    edge.id.0
                )));
            }
            let (Some(src), Some(dst)) = (nodes.get(edge.src.index()), nodes.get(edge.dst.index()))
            else {
                return Err(GraphError::Inconsistent(format!(
                    "edge {i} has a dangling endpoint"
                )));
            };
            if src.cate != NodeCategory::Formula || dst.cate != edge.etype.target() {
                return Err(GraphError::Inconsistent(format!(
                    "edge {i}: {} cannot link {} to {}",
                    edge.etype, src.cate, dst.cate
                )));
            }
            let value_ok = match edge.etype {
                EdgeType::BelongsToTopoClass => edge.rel_value.is_some(),
                _ => edge.rel_value.is_none(),
            };
            if !value_ok {
                return Err(GraphError::Inconsistent(format!(
                    "edge {i}: relation value {:?} not allowed on {}",
                    edge.rel_value, edge.etype
                )));
            }
            g.outgoing[edge.src.index()].push(edge.id);
            g.incoming[edge.dst.index()].push(edge.id);
        }
        g.nodes = nodes;
        g.edges = edges;
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn node(&self, id: NodeId) -> Option<&GraphNode> {
        self.nodes.get(id.index())
    }

    pub fn edge(&self, id: EdgeId) -> Option<&GraphEdge> {
        self.edges.get(id.index())
    }

    /// Node ids of one category, ascending.
    pub fn nodes_of(&self, cate: NodeCategory) -> &[NodeId] {
        &self.by_cate[cate.index()]
    }

    pub fn outgoing(&self, id: NodeId) -> &[EdgeId] {
        self.outgoing.get(id.index()).map_or(&[], Vec::as_slice)
    }

    pub fn incoming(&self, id: NodeId) -> &[EdgeId] {
        self.incoming.get(id.index()).map_or(&[], Vec::as_slice)
    }

    pub fn get_node(&self, cate: NodeCategory, name: &str) -> Option<&GraphNode> {
        // A borrowed tuple key would need a custom Borrow impl; the clone is cheap.
        self.by_name
            .get(&(cate, name.to_string()))
            .map(|id| &self.nodes[id.index()])
    }

    /// All incident edges with the opposite endpoint, ordered by relation
    /// type, then neighbor name, then edge id.
    pub fn neighbors(&self, id: NodeId) -> Result<Vec<(&GraphEdge, &GraphNode)>, GraphError> {
        if self.node(id).is_none() {
            return Err(GraphError::UnknownNode(id));
        }
        let mut out: Vec<(&GraphEdge, &GraphNode)> = self
            .outgoing(id)
            .iter()
            .chain(self.incoming(id))
            .map(|e| {
                let edge = &self.edges[e.index()];
                let other = if edge.src == id { edge.dst } else { edge.src };
                (edge, &self.nodes[other.index()])
            })
            .collect();
        out.sort_by(|a, b| (a.0.etype, &a.1.name, a.0.id).cmp(&(b.0.etype, &b.1.name, b.0.id)));
        Ok(out)
    }

    pub fn stats(&self) -> GraphStats {
        let mut nodes: BTreeMap<_, _> = NodeCategory::ALL.iter().map(|c| (*c, 0)).collect();
        let mut edges: BTreeMap<_, _> = EdgeType::ALL.iter().map(|t| (*t, 0)).collect();
        for n in &self.nodes {
            *nodes.entry(n.cate).or_insert(0) += 1;
        }
        for e in &self.edges {
            *edges.entry(e.etype).or_insert(0) += 1;
        }
        GraphStats { nodes, edges }
    }

    /// Target node of the first outgoing edge of `etype`.
    pub fn first_target(&self, src: NodeId, etype: EdgeType) -> Option<&GraphNode> {
        self.outgoing(src)
            .iter()
            .map(|e| &self.edges[e.index()])
            .find(|e| e.etype == etype)
            .map(|e| &self.nodes[e.dst.index()])
    }

    /// Schema description handed to the text-to-Cypher prompt: node labels with
    /// their property keys and types, then the relationship patterns.
    pub fn schema_text(&self) -> String {
        let mut props: BTreeMap<NodeCategory, BTreeMap<String, &'static str>> = BTreeMap::new();
        for cate in NodeCategory::ALL {
            let entry = props.entry(cate).or_default();
            entry.insert("name".into(), "STRING");
            entry.insert("cate".into(), "STRING");
        }
        for n in &self.nodes {
            let entry = props.entry(n.cate).or_default();
            for (k, v) in &n.attrs {
                let ty = match v {
                    AttrValue::Text(_) => "STRING",
                    AttrValue::Int(_) => "INTEGER",
                    AttrValue::Real(_) => "FLOAT",
                    AttrValue::Absent => continue,
                };
                entry.entry(k.clone()).or_insert(ty);
            }
        }
        let mut out = String::from("Node properties:\n");
        for (cate, keys) in &props {
            let body: Vec<String> = keys.iter().map(|(k, t)| format!("{k}: {t}")).collect();
            out.push_str(&format!("{cate} {{{}}}\n", body.join(", ")));
        }
        out.push_str("Relationship properties:\n");
        out.push_str("BELONGS_TO_TOPOCLASS {value: STRING, one of 'SOC' or 'NSOC'}\n");
        out.push_str("The relationships:\n");
        for etype in EdgeType::ALL {
            out.push_str(&format!("(:Formula)-[:{etype}]->(:{})\n", etype.target()));
        }
        let classes: BTreeSet<&str> = self
            .nodes_of(NodeCategory::TopoClass)
            .iter()
            .map(|id| self.nodes[id.index()].name.as_str())
            .collect();
        if !classes.is_empty() {
            let quoted: Vec<String> = classes.iter().map(|c| format!("'{c}'")).collect();
            out.push_str(&format!("TopoClass names: {}\n", quoted.join(", ")));
        }
        out
    }
}
