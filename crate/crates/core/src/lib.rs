//! Materials knowledge graph with a Cypher-subset query engine, an exact
//! literature vector index, and a two-stage question answering pipeline.

pub mod analytics;
pub mod cypher;
pub mod eval;
pub mod fission;
pub mod fixtures;
pub mod graph;
pub mod literature;
pub mod llm;
pub mod periodic;
pub mod pipeline;
pub mod synthetic;

pub use cypher::{CypherAst, CypherError, ResultTable};
pub use graph::{
    AttrValue, Coupling, EdgeType, GraphEdge, GraphError, GraphNode, MaterialRecord, NodeCategory,
    NodeId, PropertyGraph,
};
pub use literature::{QaPair, RetrievalHit, VectorIndex};
