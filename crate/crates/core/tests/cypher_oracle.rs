#[path = "common/cypher_oracle.rs"]
mod oracle;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use topokg_core::cypher::{self, execute};
use topokg_core::graph::{GraphNode, NodeCategory, NodeId, PropertyGraph};

#[test]
fn engine_matches_brute_force() {
    let (agree, total, failures) = oracle::run(500, 2024);
    assert_eq!(agree, total, "{failures:#?}");
}

#[test]
fn generated_queries_cover_the_grammar() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let g = oracle::random_graph(&mut rng, 20);
    let mut seen = std::collections::BTreeSet::new();
    for _ in 0..500 {
        let text = oracle::random_query(&mut rng, &g).to_string();
        for word in [
            "WHERE",
            "DISTINCT",
            "ORDER BY",
            "DESC",
            "LIMIT",
            "COUNT(",
            " AS ",
            "CONTAINS",
            "IS NULL",
            "IS NOT NULL",
            " AND ",
            " OR ",
            "NOT (",
            "<-[",
            "]->",
            "]-(",
            "{",
            "<>",
            "<=",
            ">=",
            "), (",
        ] {
            if text.contains(word) {
                seen.insert(word);
            }
        }
    }
    assert_eq!(seen.len(), 21, "{seen:?}");
}

/// Append a node of `cate` that no query position can bind.
fn with_extra_node(g: &PropertyGraph, cate: NodeCategory) -> PropertyGraph {
    let mut nodes = g.nodes().to_vec();
    nodes.push(GraphNode {
        id: NodeId(nodes.len() as u32),
        cate,
        name: "zz-extra".into(),
        attrs: Default::default(),
    });
    PropertyGraph::from_parts(nodes, g.edges().to_vec()).unwrap()
}

#[test]
fn unmatched_label_nodes_do_not_change_results() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut checked = 0;
    for _ in 0..300 {
        let g = oracle::random_graph(&mut rng, 20);
        let ast = oracle::random_query(&mut rng, &g);
        let labels: Vec<Option<&str>> = ast
            .patterns
            .iter()
            .flat_map(|p| std::iter::once(&p.start).chain(p.hops.iter().map(|h| &h.1)))
            .map(|n| n.label.as_deref())
            .collect();
        if labels.iter().any(|l| l.is_none()) {
            continue;
        }
        let Some(unused) = NodeCategory::ALL
            .into_iter()
            .find(|c| !labels.contains(&Some(c.as_str())))
        else {
            continue;
        };
        let before = execute(&g, &ast).unwrap();
        let after = execute(&with_extra_node(&g, unused), &ast).unwrap();
        assert_eq!(before, after, "{ast}");
        checked += 1;
    }
    assert!(checked > 50, "only {checked} queries qualified");
}

#[test]
fn replay_rows_on_fixture() {
    use topokg_core::{fixtures, graph};
    let g =
        graph::build_graph(&graph::parse_materials(fixtures::REPLAY_MATERIALS).records).unwrap();
    let t = cypher::query(&g, fixtures::REPLAY_CYPHER).unwrap();
    assert_eq!(
        cypher::format_results(&t, 20),
        "[{'n.name': 'Bi3(TeCl5)2', 'n.matID': 'MAT00000859'}, {'n.name': 'BaSn2', 'n.matID': 'MAT00028452'}, {'n.name': 'Bi', 'n.matID': 'MAT00028196'}]"
    );
}

#[test]
fn generated_queries_mostly_bind_something() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let nonempty = (0..500)
        .filter(|_| {
            let g = oracle::random_graph(&mut rng, 20);
            let ast = oracle::random_query(&mut rng, &g);
            !oracle::reference_rows(&g, &ast).is_empty()
        })
        .count();
    assert!(nonempty >= 125, "only {nonempty}/500 queries returned rows");
}
