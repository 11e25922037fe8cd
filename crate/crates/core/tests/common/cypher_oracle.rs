//! Brute-force reference for the Cypher subset plus a random query generator.
//!
//! The reference enumerates every assignment of graph edges to relationship
//! positions (and nodes to free node positions), checks all constraints only
//! after the assignment is complete, and evaluates expressions with its own
//! implementation of the comparison rules.

#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topokg_core::cypher::{
    self, CmpOp, CypherAst, Direction, Expr, Literal, NodePattern, Pattern, RelPattern, ReturnItem,
    SortItem,
};
use topokg_core::graph::{build_graph, GraphNode, NodeCategory, PropertyGraph};
use topokg_core::{synthetic, AttrValue};

// ---------------------------------------------------------------- graphs

/// A graph built from random records, trimmed to at most `max_nodes` nodes.
pub fn random_graph(rng: &mut ChaCha8Rng, max_nodes: usize) -> PropertyGraph {
    if rng.random_bool(0.03) {
        return PropertyGraph::default();
    }
    let records = synthetic::random_records(4, rng.random());
    let mut best = PropertyGraph::default();
    for n in 1..=records.len() {
        let g = build_graph(&records[..n]).unwrap();
        if g.node_count() > max_nodes {
            break;
        }
        best = g;
    }
    best
}

// ---------------------------------------------------------------- values

#[derive(Debug, Clone, PartialEq)]
enum V {
    Absent,
    Text(String),
    Num(f64),
    Bool(bool),
}

fn from_attr(a: &AttrValue) -> V {
    match a {
        AttrValue::Absent => V::Absent,
        AttrValue::Text(s) => V::Text(s.clone()),
        AttrValue::Int(i) => V::Num(*i as f64),
        AttrValue::Real(x) => V::Num(*x),
    }
}

fn from_lit(l: &Literal) -> V {
    match l {
        Literal::Text(s) => V::Text(s.clone()),
        Literal::Int(i) => V::Num(*i as f64),
        Literal::Real(x) => V::Num(*x),
        Literal::Bool(b) => V::Bool(*b),
    }
}

fn as_num(s: &str) -> Option<f64> {
    s.trim().parse().ok()
}

fn cmp_holds(op: CmpOp, o: Ordering) -> bool {
    match op {
        CmpOp::Eq => o == Ordering::Equal,
        CmpOp::Ne => o != Ordering::Equal,
        CmpOp::Lt => o == Ordering::Less,
        CmpOp::Le => o != Ordering::Greater,
        CmpOp::Gt => o == Ordering::Greater,
        CmpOp::Ge => o != Ordering::Less,
    }
}

fn compare(op: CmpOp, a: &V, b: &V) -> bool {
    let ord = match (a, b) {
        (V::Absent, _) | (_, V::Absent) => return false,
        (V::Num(x), V::Num(y)) => x.partial_cmp(y),
        (V::Text(x), V::Text(y)) => Some(x.cmp(y)),
        (V::Bool(x), V::Bool(y)) => Some(x.cmp(y)),
        (V::Num(x), V::Text(t)) => as_num(t).and_then(|y| x.partial_cmp(&y)),
        (V::Text(t), V::Num(y)) => as_num(t).and_then(|x| x.partial_cmp(y)),
        _ => None,
    };
    match ord {
        Some(o) => cmp_holds(op, o),
        None => op == CmpOp::Ne,
    }
}

// ---------------------------------------------------------------- enumeration

struct Flat<'a> {
    nodes: Vec<&'a NodePattern>,
    /// (pattern, left node position, right node position)
    rels: Vec<(&'a RelPattern, usize, usize)>,
}

fn flatten(ast: &CypherAst) -> Flat<'_> {
    let mut f = Flat {
        nodes: Vec::new(),
        rels: Vec::new(),
    };
    for p in &ast.patterns {
        let mut prev = f.nodes.len();
        f.nodes.push(&p.start);
        for (r, n) in &p.hops {
            let next = f.nodes.len();
            f.nodes.push(n);
            f.rels.push((r, prev, next));
            prev = next;
        }
    }
    f
}

#[derive(Clone)]
struct Assign {
    nodes: Vec<usize>,
    edges: Vec<usize>,
}

fn node_prop(n: &GraphNode, key: &str) -> V {
    match key {
        "name" => V::Text(n.name.clone()),
        "cate" => V::Text(n.cate.as_str().to_string()),
        _ => n.attrs.get(key).map_or(V::Absent, from_attr),
    }
}

fn edge_prop(g: &PropertyGraph, e: usize, key: &str) -> V {
    match (key, g.edges()[e].rel_value) {
        ("value", Some(c)) => V::Text(c.as_str().to_string()),
        _ => V::Absent,
    }
}

fn valid(g: &PropertyGraph, f: &Flat, a: &Assign) -> bool {
    for i in 0..a.edges.len() {
        for j in i + 1..a.edges.len() {
            if a.edges[i] == a.edges[j] {
                return false;
            }
        }
    }
    for (i, pat) in f.nodes.iter().enumerate() {
        let node = &g.nodes()[a.nodes[i]];
        if let Some(l) = &pat.label {
            if node.cate.as_str() != l {
                return false;
            }
        }
        for (k, lit) in &pat.props {
            if !compare(CmpOp::Eq, &node_prop(node, k), &from_lit(lit)) {
                return false;
            }
        }
        for (j, other) in f.nodes.iter().enumerate() {
            if pat.var.is_some() && pat.var == other.var && a.nodes[i] != a.nodes[j] {
                return false;
            }
        }
    }
    for (i, (pat, _, _)) in f.rels.iter().enumerate() {
        let e = &g.edges()[a.edges[i]];
        if let Some(t) = &pat.rel_type {
            if e.etype.as_str() != t {
                return false;
            }
        }
        for (k, lit) in &pat.props {
            if !compare(CmpOp::Eq, &edge_prop(g, a.edges[i], k), &from_lit(lit)) {
                return false;
            }
        }
        for (j, (other, _, _)) in f.rels.iter().enumerate() {
            if i != j && pat.var.is_some() && pat.var == other.var {
                return false;
            }
        }
    }
    true
}

/// All complete, valid assignments.
fn assignments(g: &PropertyGraph, f: &Flat) -> Vec<Assign> {
    let mut out = Vec::new();
    let n_edges = g.edge_count();
    let mut edge_choice = vec![0usize; f.rels.len()];
    let mut orient = vec![false; f.rels.len()];
    // Odometer over edges and orientations.
    loop {
        if f.rels.is_empty() || n_edges > 0 {
            expand_free_nodes(g, f, &edge_choice, &orient, &mut out);
        }
        let mut k = 0;
        loop {
            if k == f.rels.len() {
                return out;
            }
            if f.rels[k].0.direction == Direction::Both && !orient[k] {
                orient[k] = true;
                break;
            }
            orient[k] = false;
            edge_choice[k] += 1;
            if edge_choice[k] < n_edges {
                break;
            }
            edge_choice[k] = 0;
            k += 1;
        }
        if n_edges == 0 {
            return out;
        }
    }
}

fn expand_free_nodes(
    g: &PropertyGraph,
    f: &Flat,
    edge_choice: &[usize],
    orient: &[bool],
    out: &mut Vec<Assign>,
) {
    let mut nodes: Vec<Option<usize>> = vec![None; f.nodes.len()];
    for (k, (pat, l, r)) in f.rels.iter().enumerate() {
        let e = &g.edges()[edge_choice[k]];
        let (src, dst) = (e.src.index(), e.dst.index());
        let (left, right) = match (pat.direction, orient[k]) {
            (Direction::Out, _) | (Direction::Both, false) => (src, dst),
            (Direction::In, _) | (Direction::Both, true) => (dst, src),
        };
        for (pos, id) in [(*l, left), (*r, right)] {
            match nodes[pos] {
                Some(existing) if existing != id => return,
                _ => nodes[pos] = Some(id),
            }
        }
    }
    let free: Vec<usize> = (0..nodes.len()).filter(|i| nodes[*i].is_none()).collect();
    if !free.is_empty() && g.node_count() == 0 {
        return;
    }
    let mut idx = vec![0usize; free.len()];
    loop {
        for (slot, pos) in free.iter().enumerate() {
            nodes[*pos] = Some(idx[slot]);
        }
        let a = Assign {
            nodes: nodes.iter().map(|n| n.unwrap()).collect(),
            edges: edge_choice.to_vec(),
        };
        if valid(g, f, &a) {
            out.push(a);
        }
        let mut k = 0;
        loop {
            if k == free.len() {
                return;
            }
            idx[k] += 1;
            if idx[k] < g.node_count() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

// ---------------------------------------------------------------- evaluation

fn lookup(g: &PropertyGraph, f: &Flat, a: &Assign, var: &str, key: &str) -> V {
    if let Some(i) = f.nodes.iter().position(|n| n.var.as_deref() == Some(var)) {
        return node_prop(&g.nodes()[a.nodes[i]], key);
    }
    let i = f
        .rels
        .iter()
        .position(|(r, _, _)| r.var.as_deref() == Some(var))
        .expect("variable bound");
    edge_prop(g, a.edges[i], key)
}

fn truth(v: &V) -> bool {
    *v == V::Bool(true)
}

fn eval(g: &PropertyGraph, f: &Flat, a: &Assign, e: &Expr) -> V {
    match e {
        Expr::Property { var, key } => lookup(g, f, a, var, key),
        Expr::Literal(l) => from_lit(l),
        Expr::Compare { op, lhs, rhs } => {
            V::Bool(compare(*op, &eval(g, f, a, lhs), &eval(g, f, a, rhs)))
        }
        Expr::Contains { lhs, rhs } => match (eval(g, f, a, lhs), eval(g, f, a, rhs)) {
            (V::Text(s), V::Text(t)) => V::Bool(s.contains(&t)),
            _ => V::Bool(false),
        },
        Expr::IsNull { expr, negated } => V::Bool((eval(g, f, a, expr) == V::Absent) != *negated),
        Expr::And(x, y) => V::Bool(truth(&eval(g, f, a, x)) && truth(&eval(g, f, a, y))),
        Expr::Or(x, y) => V::Bool(truth(&eval(g, f, a, x)) || truth(&eval(g, f, a, y))),
        Expr::Not(x) => V::Bool(!truth(&eval(g, f, a, x))),
        Expr::Var(_) => V::Bool(true),
        Expr::Count(_) | Expr::Alias(_) => panic!("not a row expression: {e}"),
        #[allow(unreachable_patterns)]
        _ => panic!("unhandled expression {e}"),
    }
}

/// Canonical cell text used for multiset comparison.
fn cell_key(v: &AttrValue) -> String {
    match v {
        AttrValue::Absent => "absent".into(),
        AttrValue::Text(s) => format!("t:{s}"),
        AttrValue::Int(i) => format!("n:{}", *i as f64),
        AttrValue::Real(x) => format!("n:{x}"),
    }
}

fn project(v: V) -> String {
    match v {
        V::Absent => "absent".into(),
        V::Text(s) => format!("t:{s}"),
        V::Num(x) => format!("n:{x}"),
        V::Bool(b) => format!("t:{b}"),
    }
}

/// Rows before LIMIT and ORDER BY, as canonical cell keys.
pub fn reference_rows(g: &PropertyGraph, ast: &CypherAst) -> Vec<Vec<String>> {
    let f = flatten(ast);
    let matches: Vec<Assign> = assignments(g, &f)
        .into_iter()
        .filter(|a| {
            ast.where_clause
                .as_ref()
                .map_or(true, |w| truth(&eval(g, &f, a, w)))
        })
        .collect();
    let aggregating = ast.returns.iter().any(|r| matches!(r.expr, Expr::Count(_)));
    let mut rows: Vec<Vec<String>> = if aggregating {
        let mut groups: BTreeMap<Vec<String>, Vec<i64>> = BTreeMap::new();
        for a in &matches {
            let key: Vec<String> = ast
                .returns
                .iter()
                .filter(|r| !matches!(r.expr, Expr::Count(_)))
                .map(|r| project(eval(g, &f, a, &r.expr)))
                .collect();
            let counts = groups
                .entry(key)
                .or_insert_with(|| vec![0; ast.returns.len()]);
            for (i, r) in ast.returns.iter().enumerate() {
                match &r.expr {
                    Expr::Count(None) => counts[i] += 1,
                    Expr::Count(Some(arg)) if eval(g, &f, a, arg) != V::Absent => counts[i] += 1,
                    _ => {}
                }
            }
        }
        groups
            .into_iter()
            .map(|(key, counts)| {
                let mut key = key.into_iter();
                ast.returns
                    .iter()
                    .enumerate()
                    .map(|(i, r)| match r.expr {
                        Expr::Count(_) => format!("n:{}", counts[i] as f64),
                        _ => key.next().unwrap(),
                    })
                    .collect()
            })
            .collect()
    } else {
        matches
            .iter()
            .map(|a| {
                ast.returns
                    .iter()
                    .map(|r| project(eval(g, &f, a, &r.expr)))
                    .collect()
            })
            .collect()
    };
    if ast.distinct {
        rows.sort();
        rows.dedup();
    }
    rows
}

fn sort_rank(v: &AttrValue) -> (u8, f64, &str) {
    match v {
        AttrValue::Int(i) => (0, *i as f64, ""),
        AttrValue::Real(x) => (0, *x, ""),
        AttrValue::Text(s) => (1, 0.0, s),
        AttrValue::Absent => (2, 0.0, ""),
    }
}

fn order_cmp(a: &AttrValue, b: &AttrValue) -> Ordering {
    let (ra, xa, sa) = sort_rank(a);
    let (rb, xb, sb) = sort_rank(b);
    ra.cmp(&rb).then(xa.total_cmp(&xb)).then(sa.cmp(sb))
}

/// Compare the engine against the reference; `Err` describes a mismatch.
pub fn check(g: &PropertyGraph, ast: &CypherAst) -> Result<(), String> {
    let text = ast.to_string();
    let reparsed = cypher::parse(&text).map_err(|e| format!("{text}: reparse failed: {e}"))?;
    if &reparsed != ast {
        return Err(format!("{text}: round trip changed the query"));
    }
    let got = cypher::execute(g, ast).map_err(|e| format!("{text}: {e}"))?;
    if got.columns != ast.columns() {
        return Err(format!("{text}: columns {:?}", got.columns));
    }
    if got.rows.iter().any(|r| r.len() != got.columns.len()) {
        return Err(format!("{text}: ragged row"));
    }
    let mut got_keys: Vec<Vec<String>> = got
        .rows
        .iter()
        .map(|r| r.iter().map(cell_key).collect())
        .collect();
    let mut want = reference_rows(g, ast);
    want.sort();
    if ast.distinct {
        let mut dedup = got_keys.clone();
        dedup.sort();
        dedup.dedup();
        if dedup.len() != got_keys.len() {
            return Err(format!("{text}: DISTINCT produced duplicates"));
        }
    }
    // Ordering by returned columns must hold on the engine output.
    for w in got.rows.windows(2) {
        let mut ord = Ordering::Equal;
        for s in &ast.order_by {
            let i = order_column(ast, s).expect("generator orders by returned columns");
            let o = order_cmp(&w[0][i], &w[1][i]);
            ord = if s.ascending { o } else { o.reverse() };
            if ord != Ordering::Equal {
                break;
            }
        }
        if ord == Ordering::Greater {
            return Err(format!("{text}: rows out of order"));
        }
    }
    got_keys.sort();
    match ast.limit {
        None => {
            if got_keys != want {
                return Err(format!(
                    "{text}: engine {} rows, reference {} rows\nengine {got_keys:?}\nreference {want:?}",
                    got_keys.len(),
                    want.len()
                ));
            }
        }
        Some(k) => {
            if got_keys.len() != want.len().min(k as usize) {
                return Err(format!(
                    "{text}: LIMIT {k} gave {} of {}",
                    got_keys.len(),
                    want.len()
                ));
            }
            let mut pool = want.clone();
            for row in &got_keys {
                match pool.iter().position(|r| r == row) {
                    Some(i) => {
                        pool.swap_remove(i);
                    }
                    None => return Err(format!("{text}: row {row:?} not in reference")),
                }
            }
        }
    }
    Ok(())
}

fn order_column(ast: &CypherAst, s: &SortItem) -> Option<usize> {
    match &s.expr {
        Expr::Alias(a) => ast
            .returns
            .iter()
            .position(|r| r.alias.as_deref() == Some(a)),
        e => ast.returns.iter().position(|r| &r.expr == e),
    }
}

// ---------------------------------------------------------------- generator

const NODE_VARS: [&str; 4] = ["a", "b", "c", "d"];
const REL_VARS: [&str; 3] = ["r", "s", "t"];
const KEYS: [&str; 9] = [
    "name",
    "cate",
    "matID",
    "density",
    "soc_dos_gap",
    "number",
    "atomic_number",
    "proto",
    "missing",
];
const REL_TYPES: [&str; 6] = [
    "HAS_ELEMENT",
    "HAS_LATTICE",
    "BELONGS_TO_SPACEGROUP",
    "BELONGS_TO_POINTGROUP",
    "BELONGS_TO_TOPOCLASS",
    "KNOWS",
];

fn pick<'a, T>(rng: &mut ChaCha8Rng, xs: &'a [T]) -> &'a T {
    xs.choose(rng).unwrap()
}

fn keys_for(cate: Option<NodeCategory>) -> &'static [&'static str] {
    match cate {
        Some(NodeCategory::Formula) => &[
            "name",
            "matID",
            "density",
            "soc_dos_gap",
            "nsoc_dos_gap",
            "proto",
            "weyl_pts",
            "missing",
        ],
        Some(NodeCategory::Element) => &["name", "atomic_number", "cate"],
        Some(NodeCategory::Spacegroup) => &["name", "number"],
        Some(_) => &["name", "cate"],
        None => &KEYS,
    }
}

/// Literal drawn from values actually stored under `key`, or a random one.
fn literal_for(rng: &mut ChaCha8Rng, g: &PropertyGraph, key: &str) -> Literal {
    let present: Vec<AttrValue> = g
        .nodes()
        .iter()
        .filter_map(|n| match key {
            "name" => Some(AttrValue::Text(n.name.clone())),
            "cate" => Some(AttrValue::Text(n.cate.as_str().to_string())),
            k => n.attrs.get(k).cloned(),
        })
        .collect();
    if !present.is_empty() && rng.random_bool(0.8) {
        return match pick(rng, &present) {
            AttrValue::Int(i) if rng.random_bool(0.2) => Literal::Text(i.to_string()),
            AttrValue::Int(i) => Literal::Int(*i),
            AttrValue::Real(x) if rng.random_bool(0.2) => Literal::Text(format!("{x}")),
            AttrValue::Real(x) => Literal::Real(*x),
            AttrValue::Text(t) => Literal::Text(t.clone()),
            AttrValue::Absent => Literal::Text(String::new()),
        };
    }
    random_literal(rng, g)
}

fn random_literal(rng: &mut ChaCha8Rng, g: &PropertyGraph) -> Literal {
    match rng.random_range(0..6) {
        0 => Literal::Text(
            g.nodes()
                .choose(rng)
                .map_or_else(|| "Bi".to_string(), |n| n.name.clone()),
        ),
        1 => Literal::Text(
            pick(rng, &["", "1.5", "Formula", "Element", "topological", "a"]).to_string(),
        ),
        2 => Literal::Int(rng.random_range(0..230)),
        3 => Literal::Real((rng.random_range(0.0..15.0f64) * 4.0).round() / 4.0),
        4 => Literal::Text(rng.random_range(0..100).to_string()),
        _ => Literal::Bool(rng.random_bool(0.5)),
    }
}

struct Gen<'g> {
    g: &'g PropertyGraph,
    /// Node variables and the category each was declared with.
    vars: Vec<(String, Option<NodeCategory>)>,
    rel_vars: Vec<String>,
}

impl Gen<'_> {
    fn node(
        &mut self,
        rng: &mut ChaCha8Rng,
        cate: Option<NodeCategory>,
        sensible: bool,
    ) -> NodePattern {
        let var = if rng.random_bool(0.75) {
            let v = pick(rng, &NODE_VARS).to_string();
            if sensible && self.vars.iter().any(|(x, c)| *x == v && *c != cate) {
                None
            } else {
                if !self.vars.iter().any(|(x, _)| *x == v) {
                    self.vars.push((v.clone(), cate));
                }
                Some(v)
            }
        } else {
            None
        };
        let label = if sensible {
            cate.filter(|_| rng.random_bool(0.8))
                .map(|c| c.as_str().to_string())
        } else {
            match rng.random_range(0..10) {
                0..=5 => Some(pick(rng, &NodeCategory::ALL).as_str().to_string()),
                6 => Some("Material".to_string()),
                _ => None,
            }
        };
        let mut props = Vec::new();
        if rng.random_bool(0.25) {
            let key = pick(rng, keys_for(cate)).to_string();
            let lit = literal_for(rng, self.g, &key);
            props.push((key, lit));
        }
        NodePattern { var, label, props }
    }

    fn rel(
        &mut self,
        rng: &mut ChaCha8Rng,
        rel_type: Option<String>,
        direction: Direction,
    ) -> RelPattern {
        let var = if rng.random_bool(0.4) {
            let v = pick(rng, &REL_VARS).to_string();
            if self.rel_vars.contains(&v) {
                None
            } else {
                self.rel_vars.push(v.clone());
                Some(v)
            }
        } else {
            None
        };
        let mut props = Vec::new();
        if rng.random_bool(0.2) {
            props.push((
                "value".into(),
                Literal::Text(pick(rng, &["SOC", "NSOC"]).to_string()),
            ));
        }
        RelPattern {
            var,
            rel_type,
            props,
            direction,
        }
    }

    fn pattern(&mut self, rng: &mut ChaCha8Rng, hops_n: usize) -> Pattern {
        let sensible = rng.random_bool(0.9);
        if !sensible {
            let start = self.node(rng, None, false);
            let hops = (0..hops_n)
                .map(|_| {
                    let t = rng
                        .random_bool(0.6)
                        .then(|| pick(rng, &REL_TYPES).to_string());
                    let d = *pick(rng, &[Direction::Out, Direction::In, Direction::Both]);
                    (self.rel(rng, t, d), self.node(rng, None, false))
                })
                .collect();
            return Pattern { start, hops };
        }
        // Walk the schema: Formula -> X <- Formula -> Y ...
        let mut cate = if rng.random_bool(0.5) {
            NodeCategory::Formula
        } else {
            *pick(rng, &NodeCategory::ALL[1..])
        };
        let start = self.node(rng, Some(cate), true);
        let mut hops = Vec::new();
        for _ in 0..hops_n {
            let (etype, next, dir) = if cate == NodeCategory::Formula {
                let t = *pick(rng, &topokg_core::EdgeType::ALL);
                (t, t.target(), Direction::Out)
            } else {
                let t = topokg_core::EdgeType::ALL
                    .into_iter()
                    .find(|t| t.target() == cate)
                    .unwrap();
                (t, NodeCategory::Formula, Direction::In)
            };
            let dir = if rng.random_bool(0.2) {
                Direction::Both
            } else {
                dir
            };
            let t = rng.random_bool(0.7).then(|| etype.as_str().to_string());
            let rel = self.rel(rng, t, dir);
            cate = next;
            hops.push((rel, self.node(rng, Some(cate), true)));
        }
        Pattern { start, hops }
    }

    fn property(&self, rng: &mut ChaCha8Rng) -> Expr {
        if !self.rel_vars.is_empty() && rng.random_bool(0.15) {
            return Expr::Property {
                var: pick(rng, &self.rel_vars).clone(),
                key: "value".into(),
            };
        }
        let (var, cate) = pick(rng, &self.vars);
        let key = if rng.random_bool(0.85) {
            pick(rng, keys_for(*cate))
        } else {
            pick(rng, &KEYS)
        };
        Expr::Property {
            var: var.clone(),
            key: key.to_string(),
        }
    }

    fn condition(&self, rng: &mut ChaCha8Rng, depth: u32) -> Expr {
        if depth == 0 || rng.random_bool(0.45) {
            let lhs = self.property(rng);
            let key = match &lhs {
                Expr::Property { key, .. } => key.clone(),
                _ => unreachable!(),
            };
            let lhs = Box::new(lhs);
            return match rng.random_range(0..10) {
                0..=5 => {
                    let op = *pick(
                        rng,
                        &[
                            CmpOp::Eq,
                            CmpOp::Ne,
                            CmpOp::Lt,
                            CmpOp::Le,
                            CmpOp::Gt,
                            CmpOp::Ge,
                        ],
                    );
                    let rhs = if rng.random_bool(0.15) {
                        self.property(rng)
                    } else if key == "value" {
                        Expr::Literal(Literal::Text(pick(rng, &["SOC", "NSOC", ""]).to_string()))
                    } else {
                        Expr::Literal(literal_for(rng, self.g, &key))
                    };
                    if rng.random_bool(0.2) {
                        Expr::Compare {
                            op,
                            lhs: Box::new(rhs),
                            rhs: lhs,
                        }
                    } else {
                        Expr::Compare {
                            op,
                            lhs,
                            rhs: Box::new(rhs),
                        }
                    }
                }
                6 | 7 => Expr::Contains {
                    lhs,
                    rhs: Box::new(Expr::Literal(Literal::Text(
                        pick(rng, &["i", "B", "a", "", "topological", "1", "SOC"]).to_string(),
                    ))),
                },
                _ => Expr::IsNull {
                    expr: lhs,
                    negated: rng.random_bool(0.5),
                },
            };
        }
        let choice = rng.random_range(0..3);
        let mut sub = || Box::new(self.condition(rng, depth - 1));
        match choice {
            0 => {
                let a = sub();
                Expr::And(a, sub())
            }
            1 => {
                let a = sub();
                Expr::Or(a, sub())
            }
            _ => Expr::Not(sub()),
        }
    }
}

/// A random query over `g` exercising every grammar production. Most
/// patterns follow the graph schema so that results are usually non-empty.
pub fn random_query(rng: &mut ChaCha8Rng, g: &PropertyGraph) -> CypherAst {
    let mut gen = Gen {
        g,
        vars: Vec::new(),
        rel_vars: Vec::new(),
    };
    // Keep the brute-force cost bounded: at most three relationship positions
    // and at most one relationship-free pattern alongside them.
    let two = rng.random_bool(0.3);
    let first_hops = rng.random_range(0..=2);
    let mut patterns = vec![gen.pattern(rng, first_hops)];
    if two {
        let max = if first_hops == 0 { 1 } else { 3 - first_hops };
        let hops = rng.random_range(0..=max.min(1));
        if !(first_hops == 0 && hops == 0 && g.node_count() > 12) {
            patterns.push(gen.pattern(rng, hops));
        }
    }
    if gen.vars.is_empty() {
        patterns[0].start.var = Some("a".into());
        let cate = patterns[0]
            .start
            .label
            .as_deref()
            .and_then(|l| l.parse().ok());
        gen.vars.push(("a".into(), cate));
    }

    let where_clause = rng.random_bool(0.6).then(|| gen.condition(rng, 2));

    let aggregating = rng.random_bool(0.25);
    let mut returns = Vec::new();
    for i in 0..rng.random_range(1..=3) {
        let expr = if rng.random_bool(0.08) {
            Expr::Literal(match rng.random_range(0..3) {
                0 => Literal::Text("x".into()),
                1 => Literal::Int(7),
                _ => Literal::Real(2.5),
            })
        } else {
            gen.property(rng)
        };
        let alias = rng.random_bool(0.4).then(|| format!("c{i}"));
        returns.push(ReturnItem { expr, alias });
    }
    if aggregating {
        let arg = match rng.random_range(0..3) {
            0 => None,
            1 => Some(Box::new(Expr::Var(pick(rng, &gen.vars).0.clone()))),
            _ => Some(Box::new(gen.property(rng))),
        };
        let alias = rng.random_bool(0.5).then(|| "total".to_string());
        returns.push(ReturnItem {
            expr: Expr::Count(arg),
            alias,
        });
        if rng.random_bool(0.2) {
            returns.remove(0);
        }
    }
    // Duplicate column expressions make ORDER BY references ambiguous.
    let mut seen = Vec::new();
    returns.retain(|r| {
        let key = r.column_name();
        if seen.contains(&key) {
            false
        } else {
            seen.push(key);
            true
        }
    });

    let mut order_by = Vec::new();
    if rng.random_bool(0.4) {
        for _ in 0..rng.random_range(1..=2) {
            let r = pick(rng, &returns);
            let expr = match &r.alias {
                Some(a) if rng.random_bool(0.7) => Expr::Alias(a.clone()),
                _ => r.expr.clone(),
            };
            order_by.push(SortItem {
                expr,
                ascending: rng.random_bool(0.6),
            });
        }
    }
    let limit = rng.random_bool(0.25).then(|| rng.random_range(0..6));
    CypherAst {
        patterns,
        where_clause,
        distinct: rng.random_bool(0.25),
        returns,
        order_by,
        limit,
    }
}

/// Run `n` generated queries; returns (agreeing, total, first failures).
pub fn run(n: usize, seed: u64) -> (usize, usize, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut agree = 0;
    let mut failures = Vec::new();
    let mut g = random_graph(&mut rng, 20);
    for i in 0..n {
        if i % 10 == 0 {
            g = random_graph(&mut rng, 20);
        }
        let ast = random_query(&mut rng, &g);
        match check(&g, &ast) {
            Ok(()) => agree += 1,
            Err(e) => {
                if failures.len() < 5 {
                    failures.push(e);
                }
            }
        }
    }
    (agree, n, failures)
}
