use std::collections::{BTreeMap, HashMap, HashSet};

use super::{
    validate_record, AttrValue, Coupling, EdgeId, EdgeType, GraphEdge, GraphError, GraphNode,
    MaterialRecord, NodeCategory, NodeId, PropertyGraph,
};
use crate::periodic;

struct Builder {
    nodes: Vec<GraphNode>,
    edges: Vec<GraphEdge>,
    index: HashMap<(NodeCategory, String), NodeId>,
}

impl Builder {
    fn intern(
        &mut self,
        cate: NodeCategory,
        name: &str,
        attrs: impl FnOnce() -> BTreeMap<String, AttrValue>,
    ) -> NodeId {
        if let Some(id) = self.index.get(&(cate, name.to_string())) {
            return *id;
        }
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(GraphNode {
            id,
            cate,
            name: name.to_string(),
            attrs: attrs(),
        });
        self.index.insert((cate, name.to_string()), id);
        id
    }

    fn link(&mut self, src: NodeId, dst: NodeId, etype: EdgeType, rel_value: Option<Coupling>) {
        let id = EdgeId(self.edges.len() as u32);
        self.edges.push(GraphEdge {
            id,
            src,
            dst,
            etype,
            rel_value,
        });
    }
}

fn formula_attrs(r: &MaterialRecord) -> BTreeMap<String, AttrValue> {
    let mut attrs = BTreeMap::new();
    attrs.insert("matID".to_string(), AttrValue::Text(r.mat_id.clone()));
    for (key, value) in r.numeric_fields() {
        if let Some(x) = value {
            attrs.insert(key.to_string(), AttrValue::Real(x));
        }
    }
    for (key, value) in r.phonon_fields() {
        if let Some(s) = value {
            attrs.insert(key.to_string(), AttrValue::Text(s.to_string()));
        }
    }
    attrs
}

/// Build the knowledge graph: one Formula node per record, shared
/// Element/Lattice/Spacegroup/Pointgroup/TopoClass nodes deduplicated by name,
/// and one edge per declared relation.
///
/// Node ids follow first appearance in `records`. A formula that appears with
/// several material ids gets one node per id, each named `formula (matID)`.
pub fn build_graph(records: &[MaterialRecord]) -> Result<PropertyGraph, GraphError> {
    let mut ids_per_formula: HashMap<&str, HashSet<&str>> = HashMap::new();
    let mut seen = HashSet::new();
    for (index, r) in records.iter().enumerate() {
        let violations = validate_record(r);
        if !violations.is_empty() {
            return Err(GraphError::InvalidRecord { index, violations });
        }
        if !seen.insert((r.formula.as_str(), r.mat_id.as_str())) {
            return Err(GraphError::DuplicateFormula {
                name: r.formula.clone(),
                mat_id: r.mat_id.clone(),
            });
        }
        ids_per_formula
            .entry(r.formula.as_str())
            .or_default()
            .insert(r.mat_id.as_str());
    }

    let mut b = Builder {
        nodes: Vec::new(),
        edges: Vec::new(),
        index: HashMap::new(),
    };
    for r in records {
        let name = if ids_per_formula[r.formula.as_str()].len() > 1 {
            format!("{} ({})", r.formula, r.mat_id)
        } else {
            r.formula.clone()
        };
        let formula = b.intern(NodeCategory::Formula, &name, || formula_attrs(r));

        let mut linked = HashSet::new();
        for el in &r.elements {
            if !linked.insert(el.as_str()) {
                continue;
            }
            let element = b.intern(NodeCategory::Element, el, || {
                let mut attrs = BTreeMap::new();
                if let Some(z) = periodic::atomic_number(el) {
                    attrs.insert("atomic_number".into(), AttrValue::Int(z as i64));
                }
                attrs
            });
            b.link(formula, element, EdgeType::HasElement, None);
        }

        let lattice = b.intern(NodeCategory::Lattice, &r.crystal_system, BTreeMap::new);
        b.link(formula, lattice, EdgeType::HasLattice, None);

        let sg = b.intern(NodeCategory::Spacegroup, &r.spacegroup_symbol, || {
            BTreeMap::from([("number".to_string(), AttrValue::Int(r.spacegroup_number))])
        });
        b.link(formula, sg, EdgeType::BelongsToSpacegroup, None);

        let pg = b.intern(NodeCategory::Pointgroup, &r.pointgroup, BTreeMap::new);
        b.link(formula, pg, EdgeType::BelongsToPointgroup, None);

        for (class, coupling) in [
            (&r.topo_class_soc, Coupling::Soc),
            (&r.topo_class_nsoc, Coupling::Nsoc),
        ] {
            if let Some(class) = class {
                let c = b.intern(NodeCategory::TopoClass, class, BTreeMap::new);
                b.link(formula, c, EdgeType::BelongsToTopoClass, Some(coupling));
            }
        }
    }
    PropertyGraph::from_parts(b.nodes, b.edges)
}
