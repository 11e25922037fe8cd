//! Bundled fixture data.
//!
//! The three-material set is the end-to-end replay fixture. The demo set adds
//! fifteen more materials so every evaluation case has something to find.
//! Gap and cell values for most materials are illustrative, not measured.

pub const REPLAY_MATERIALS: &str = include_str!("../fixtures/replay_materials.jsonl");
pub const REPLAY_LITERATURE: &str = include_str!("../fixtures/replay_literature.json");
pub const DEMO_MATERIALS: &str = include_str!("../fixtures/demo_materials.jsonl");
pub const DEMO_LITERATURE: &str = include_str!("../fixtures/demo_literature.json");
pub const SAMPLE_DOC: &str = include_str!("../fixtures/sample_doc.txt");

/// The question answered in the replay fixture.
pub const REPLAY_QUESTION: &str =
    "Please recommend three molecules that are topological insulators under spin-orbit coupling (SOC).";

pub const REPLAY_CYPHER: &str = "MATCH(n:Formula)-[r]->(:TopoClass{name:'topological insulator'}) WHERE n.soc_dos_gap <> \"\" RETURN n.name , n.matID LIMIT 3";

/// Graph built from the demo materials.
pub fn demo_graph() -> crate::PropertyGraph {
    let report = crate::graph::parse_materials(DEMO_MATERIALS);
    crate::graph::build_graph(&report.records).expect("demo fixture builds")
}

/// Index over the demo literature with the default embedder.
pub fn demo_index() -> crate::VectorIndex {
    let pairs = crate::literature::parse_pairs(DEMO_LITERATURE).expect("demo literature parses");
    crate::VectorIndex::from_pairs(
        std::sync::Arc::new(crate::literature::HashingEmbedder::default()),
        pairs,
    )
    .expect("demo index builds")
}
