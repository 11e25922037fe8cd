//! Backtracking pattern matcher and the WHERE/RETURN/ORDER/LIMIT pipeline.

use std::cmp::Ordering;
use std::collections::HashMap;

use super::ast::*;
use super::{CypherError, ResultTable};
use crate::graph::{AttrValue, EdgeId, GraphEdge, GraphNode, NodeCategory, NodeId, PropertyGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Node(usize),
    Rel(usize),
}

/// One relationship position, connecting node positions `left` and `right`
/// with `direction` read left to right.
struct RelPos<'a> {
    pat: &'a RelPattern,
    left: usize,
    right: usize,
}

struct Plan<'a> {
    nodes: Vec<&'a NodePattern>,
    rels: Vec<RelPos<'a>>,
    /// Per pattern: node positions and rel positions in written order.
    chains: Vec<(Vec<usize>, Vec<usize>)>,
    vars: HashMap<&'a str, Slot>,
}

fn plan(ast: &CypherAst) -> Plan<'_> {
    let mut p = Plan {
        nodes: Vec::new(),
        rels: Vec::new(),
        chains: Vec::new(),
        vars: HashMap::new(),
    };
    for pat in &ast.patterns {
        let mut node_pos = vec![p.nodes.len()];
        p.nodes.push(&pat.start);
        let mut rel_pos = Vec::new();
        for (rel, node) in &pat.hops {
            let left = *node_pos.last().unwrap();
            let right = p.nodes.len();
            p.nodes.push(node);
            node_pos.push(right);
            rel_pos.push(p.rels.len());
            p.rels.push(RelPos {
                pat: rel,
                left,
                right,
            });
        }
        p.chains.push((node_pos, rel_pos));
    }
    for (i, n) in p.nodes.iter().enumerate() {
        if let Some(v) = &n.var {
            p.vars.entry(v.as_str()).or_insert(Slot::Node(i));
        }
    }
    for (i, r) in p.rels.iter().enumerate() {
        if let Some(v) = &r.pat.var {
            p.vars.entry(v.as_str()).or_insert(Slot::Rel(i));
        }
    }
    p
}

/// Evaluated expression value.
#[derive(Debug, Clone, PartialEq)]
enum Val {
    Attr(AttrValue),
    Bool(bool),
}

impl Val {
    fn truthy(&self) -> bool {
        matches!(self, Val::Bool(true))
    }
}

fn literal_val(l: &Literal) -> Val {
    match l {
        Literal::Text(s) => Val::Attr(AttrValue::Text(s.clone())),
        Literal::Int(i) => Val::Attr(AttrValue::Int(*i)),
        Literal::Real(x) => Val::Attr(AttrValue::Real(*x)),
        Literal::Bool(b) => Val::Bool(*b),
    }
}

fn num_cmp(a: f64, b: f64) -> Option<Ordering> {
    a.partial_cmp(&b)
}

fn ordering_holds(op: CmpOp, ord: Option<Ordering>) -> bool {
    let Some(ord) = ord else {
        // NaN compares unequal to everything.
        return op == CmpOp::Ne;
    };
    match op {
        CmpOp::Eq => ord == Ordering::Equal,
        CmpOp::Ne => ord != Ordering::Equal,
        CmpOp::Lt => ord == Ordering::Less,
        CmpOp::Le => ord != Ordering::Greater,
        CmpOp::Gt => ord == Ordering::Greater,
        CmpOp::Ge => ord != Ordering::Less,
    }
}

/// Incomparable values: equality is false, inequality true, ordering false.
fn incomparable(op: CmpOp) -> bool {
    op == CmpOp::Ne
}

fn compare(op: CmpOp, a: &Val, b: &Val) -> bool {
    use AttrValue::*;
    match (a, b) {
        (Val::Attr(Absent), _) | (_, Val::Attr(Absent)) => false,
        (Val::Bool(x), Val::Bool(y)) => ordering_holds(op, Some(x.cmp(y))),
        (Val::Bool(_), _) | (_, Val::Bool(_)) => incomparable(op),
        (Val::Attr(x), Val::Attr(y)) => match (x, y) {
            (Int(i), Int(j)) => ordering_holds(op, Some(i.cmp(j))),
            (Text(s), Text(t)) => ordering_holds(op, Some(s.as_str().cmp(t.as_str()))),
            (Text(s), n) => match s.trim().parse::<f64>() {
                Ok(v) => ordering_holds(op, num_cmp(v, n.as_f64().unwrap())),
                Err(_) => incomparable(op),
            },
            (n, Text(t)) => match t.trim().parse::<f64>() {
                Ok(v) => ordering_holds(op, num_cmp(n.as_f64().unwrap(), v)),
                Err(_) => incomparable(op),
            },
            (n, m) => ordering_holds(op, num_cmp(n.as_f64().unwrap(), m.as_f64().unwrap())),
        },
    }
}

/// Ascending sort order over result values: numbers, then text, then absent.
fn sort_cmp(a: &AttrValue, b: &AttrValue) -> Ordering {
    fn rank(v: &AttrValue) -> u8 {
        match v {
            AttrValue::Int(_) | AttrValue::Real(_) => 0,
            AttrValue::Text(_) => 1,
            AttrValue::Absent => 2,
        }
    }
    match (a, b) {
        (AttrValue::Int(i), AttrValue::Int(j)) => i.cmp(j),
        (AttrValue::Text(s), AttrValue::Text(t)) => s.cmp(t),
        _ if rank(a) == 0 && rank(b) == 0 => a.as_f64().unwrap().total_cmp(&b.as_f64().unwrap()),
        _ => rank(a).cmp(&rank(b)),
    }
}

fn edge_property(e: &GraphEdge, key: &str) -> AttrValue {
    match key {
        "value" => e.rel_value.map_or(AttrValue::Absent, |c| {
            AttrValue::Text(c.as_str().to_string())
        }),
        _ => AttrValue::Absent,
    }
}

/// A complete match: one node per node position, one edge per rel position.
#[derive(Debug, Clone)]
struct Binding {
    nodes: Vec<NodeId>,
    edges: Vec<EdgeId>,
}

struct Ctx<'a> {
    g: &'a PropertyGraph,
    plan: Plan<'a>,
}

impl Ctx<'_> {
    fn node(&self, id: NodeId) -> &GraphNode {
        &self.g.nodes()[id.index()]
    }

    fn edge(&self, id: EdgeId) -> &GraphEdge {
        &self.g.edges()[id.index()]
    }

    fn property(&self, b: &Binding, var: &str, key: &str) -> Result<AttrValue, CypherError> {
        match self.plan.vars.get(var) {
            Some(Slot::Node(i)) => Ok(self
                .node(b.nodes[*i])
                .property(key)
                .unwrap_or(AttrValue::Absent)),
            Some(Slot::Rel(i)) => Ok(edge_property(self.edge(b.edges[*i]), key)),
            None => Err(CypherError::Evaluation(format!("unbound variable {var}"))),
        }
    }

    fn eval(&self, e: &Expr, b: &Binding) -> Result<Val, CypherError> {
        Ok(match e {
            Expr::Property { var, key } => Val::Attr(self.property(b, var, key)?),
            Expr::Literal(l) => literal_val(l),
            Expr::Compare { op, lhs, rhs } => {
                Val::Bool(compare(*op, &self.eval(lhs, b)?, &self.eval(rhs, b)?))
            }
            Expr::Contains { lhs, rhs } => {
                let hit = match (self.eval(lhs, b)?, self.eval(rhs, b)?) {
                    (Val::Attr(AttrValue::Text(s)), Val::Attr(AttrValue::Text(t))) => {
                        s.contains(t.as_str())
                    }
                    _ => false,
                };
                Val::Bool(hit)
            }
            Expr::IsNull { expr, negated } => {
                let absent = matches!(self.eval(expr, b)?, Val::Attr(AttrValue::Absent));
                Val::Bool(absent != *negated)
            }
            Expr::And(x, y) => Val::Bool(self.eval(x, b)?.truthy() && self.eval(y, b)?.truthy()),
            Expr::Or(x, y) => Val::Bool(self.eval(x, b)?.truthy() || self.eval(y, b)?.truthy()),
            Expr::Not(x) => Val::Bool(!self.eval(x, b)?.truthy()),
            // Pattern variables are always bound to something.
            Expr::Var(_) => Val::Bool(true),
            Expr::Count(_) | Expr::Alias(_) => {
                return Err(CypherError::Evaluation(format!(
                    "{e} cannot be evaluated per row"
                )))
            }
        })
    }

    fn node_ok(&self, pos: usize, id: NodeId) -> bool {
        let pat = self.plan.nodes[pos];
        let node = self.node(id);
        if let Some(label) = &pat.label {
            if node.cate.as_str() != label {
                return false;
            }
        }
        pat.props.iter().all(|(k, lit)| {
            let v = node.property(k).unwrap_or(AttrValue::Absent);
            compare(CmpOp::Eq, &Val::Attr(v), &literal_val(lit))
        })
    }

    fn edge_ok(&self, pos: usize, id: EdgeId) -> bool {
        let pat = self.plan.rels[pos].pat;
        let edge = self.edge(id);
        if let Some(t) = &pat.rel_type {
            if edge.etype.as_str() != t {
                return false;
            }
        }
        pat.props.iter().all(|(k, lit)| {
            compare(
                CmpOp::Eq,
                &Val::Attr(edge_property(edge, k)),
                &literal_val(lit),
            )
        })
    }

    /// Candidate start nodes for a node position with nothing bound yet.
    fn candidates(&self, pos: usize) -> Vec<NodeId> {
        let pat = self.plan.nodes[pos];
        match &pat.label {
            Some(label) => {
                let Ok(cate) = label.parse::<NodeCategory>() else {
                    return Vec::new();
                };
                let by_name = pat.props.iter().find_map(|(k, v)| match (k.as_str(), v) {
                    ("name", Literal::Text(s)) => Some(s),
                    _ => None,
                });
                match by_name {
                    Some(name) => self
                        .g
                        .get_node(cate, name)
                        .map(|n| n.id)
                        .into_iter()
                        .collect(),
                    None => self.g.nodes_of(cate).to_vec(),
                }
            }
            None => (0..self.g.node_count() as u32).map(NodeId).collect(),
        }
    }

    fn estimate(&self, pos: usize) -> usize {
        let pat = self.plan.nodes[pos];
        match &pat.label {
            Some(label) => match label.parse::<NodeCategory>() {
                Ok(_) if pat.props.iter().any(|(k, _)| k == "name") => 1,
                Ok(cate) => self.g.nodes_of(cate).len(),
                Err(_) => 0,
            },
            None => self.g.node_count(),
        }
    }
}

/// Mutable search state shared across the recursion.
struct Search {
    nodes: Vec<Option<NodeId>>,
    edges: Vec<Option<EdgeId>>,
    used: Vec<EdgeId>,
    out: Vec<Binding>,
}

/// A traversal step: bind rel position `rel` from already-bound node `from`
/// to node position `to`.
#[derive(Clone, Copy)]
struct Step {
    rel: usize,
    from: usize,
    to: usize,
}

fn node_var_conflict(ctx: &Ctx, s: &Search, pos: usize, id: NodeId) -> bool {
    // Another position with the same variable must hold the same node.
    let Some(var) = &ctx.plan.nodes[pos].var else {
        return false;
    };
    ctx.plan.nodes.iter().enumerate().any(|(j, n)| {
        j != pos && n.var.as_ref() == Some(var) && s.nodes[j].is_some_and(|other| other != id)
    })
}

fn bind_node(ctx: &Ctx, s: &mut Search, pos: usize, id: NodeId) -> bool {
    if let Some(existing) = s.nodes[pos] {
        return existing == id;
    }
    if !ctx.node_ok(pos, id) || node_var_conflict(ctx, s, pos, id) {
        return false;
    }
    s.nodes[pos] = Some(id);
    true
}

fn run_chain(ctx: &Ctx, s: &mut Search, chains: &[(usize, Vec<Step>)]) {
    let Some(((start, steps), rest)) = chains.split_first() else {
        s.out.push(Binding {
            nodes: s.nodes.iter().map(|n| n.unwrap()).collect(),
            edges: s.edges.iter().map(|e| e.unwrap()).collect(),
        });
        return;
    };
    let start = *start;
    let preset = s.nodes[start];
    let starts = match preset {
        Some(id) => vec![id],
        None => ctx.candidates(start),
    };
    for id in starts {
        if preset.is_none() && !bind_node(ctx, s, start, id) {
            continue;
        }
        run_steps(ctx, s, steps, rest);
        if preset.is_none() {
            s.nodes[start] = None;
        }
    }
}

fn run_steps(ctx: &Ctx, s: &mut Search, steps: &[Step], rest: &[(usize, Vec<Step>)]) {
    let Some((step, more)) = steps.split_first() else {
        run_chain(ctx, s, rest);
        return;
    };
    let rp = &ctx.plan.rels[step.rel];
    let from_id = s.nodes[step.from].expect("step source is bound");
    // Direction as seen from `from` walking towards `to`.
    let dir = if step.from == rp.left {
        rp.pat.direction
    } else {
        match rp.pat.direction {
            Direction::Out => Direction::In,
            Direction::In => Direction::Out,
            Direction::Both => Direction::Both,
        }
    };
    let mut cands: Vec<(EdgeId, NodeId)> = Vec::new();
    if matches!(dir, Direction::Out | Direction::Both) {
        cands.extend(
            ctx.g
                .outgoing(from_id)
                .iter()
                .map(|e| (*e, ctx.edge(*e).dst)),
        );
    }
    if matches!(dir, Direction::In | Direction::Both) {
        cands.extend(
            ctx.g
                .incoming(from_id)
                .iter()
                .map(|e| (*e, ctx.edge(*e).src)),
        );
    }
    let rel_var = rp.pat.var.as_deref();
    for (eid, other) in cands {
        if s.used.contains(&eid) || !ctx.edge_ok(step.rel, eid) {
            continue;
        }
        // A relationship variable repeated elsewhere would need the same edge
        // twice, which isomorphic matching forbids.
        if rel_var.is_some()
            && ctx
                .plan
                .rels
                .iter()
                .enumerate()
                .any(|(j, r)| j != step.rel && r.pat.var.as_deref() == rel_var)
        {
            continue;
        }
        let preset = s.nodes[step.to];
        if !bind_node(ctx, s, step.to, other) {
            continue;
        }
        s.edges[step.rel] = Some(eid);
        s.used.push(eid);
        run_steps(ctx, s, more, rest);
        s.used.pop();
        s.edges[step.rel] = None;
        if preset.is_none() {
            s.nodes[step.to] = None;
        }
    }
}

fn enumerate(ctx: &Ctx) -> Vec<Binding> {
    let mut chains = Vec::new();
    for (node_pos, rel_pos) in &ctx.plan.chains {
        let first = node_pos[0];
        let last = *node_pos.last().unwrap();
        let forward = ctx.estimate(first) <= ctx.estimate(last);
        let steps: Vec<Step> = if forward {
            rel_pos
                .iter()
                .map(|&r| Step {
                    rel: r,
                    from: ctx.plan.rels[r].left,
                    to: ctx.plan.rels[r].right,
                })
                .collect()
        } else {
            rel_pos
                .iter()
                .rev()
                .map(|&r| Step {
                    rel: r,
                    from: ctx.plan.rels[r].right,
                    to: ctx.plan.rels[r].left,
                })
                .collect()
        };
        chains.push((if forward { first } else { last }, steps));
    }
    let mut s = Search {
        nodes: vec![None; ctx.plan.nodes.len()],
        edges: vec![None; ctx.plan.rels.len()],
        used: Vec::new(),
        out: Vec::new(),
    };
    run_chain(ctx, &mut s, &chains);
    // Base order: node ids by position, then edge ids by position.
    s.out
        .sort_by(|a, b| a.nodes.cmp(&b.nodes).then_with(|| a.edges.cmp(&b.edges)));
    s.out
}

fn to_attr(v: Val) -> AttrValue {
    match v {
        Val::Attr(a) => a,
        Val::Bool(b) => AttrValue::Text(b.to_string()),
    }
}

pub fn execute(g: &PropertyGraph, ast: &CypherAst) -> Result<ResultTable, CypherError> {
    let ctx = Ctx { g, plan: plan(ast) };
    let columns = ast.columns();
    let mut bindings = Vec::new();
    for b in enumerate(&ctx) {
        if let Some(w) = &ast.where_clause {
            if !ctx.eval(w, &b)?.truthy() {
                continue;
            }
        }
        bindings.push(b);
    }
    // Plain projections can stop once the limit is reached.
    let early_limit = match ast.limit {
        Some(l) if !ast.is_aggregating() && !ast.distinct && ast.order_by.is_empty() => {
            usize::try_from(l).unwrap_or(usize::MAX)
        }
        _ => usize::MAX,
    };

    // Each output row keeps the binding it came from for ORDER BY keys that
    // are not returned columns.
    let mut rows: Vec<(Vec<AttrValue>, Binding)> = Vec::new();
    if ast.is_aggregating() {
        let mut index: HashMap<Vec<GroupKey>, usize> = HashMap::new();
        let mut counts: Vec<Vec<i64>> = Vec::new();
        for b in bindings {
            let mut row = Vec::with_capacity(ast.returns.len());
            for item in &ast.returns {
                row.push(match &item.expr {
                    Expr::Count(_) => AttrValue::Absent,
                    e => to_attr(ctx.eval(e, &b)?),
                });
            }
            let key: Vec<GroupKey> = row.iter().map(GroupKey::of).collect();
            let slot = *index.entry(key).or_insert_with(|| {
                rows.push((row, b.clone()));
                counts.push(vec![0; ast.returns.len()]);
                rows.len() - 1
            });
            for (i, item) in ast.returns.iter().enumerate() {
                match &item.expr {
                    Expr::Count(None) => counts[slot][i] += 1,
                    Expr::Count(Some(arg))
                        if !matches!(ctx.eval(arg, &b)?, Val::Attr(AttrValue::Absent)) =>
                    {
                        counts[slot][i] += 1
                    }
                    _ => {}
                }
            }
        }
        for ((row, _), c) in rows.iter_mut().zip(&counts) {
            for (i, item) in ast.returns.iter().enumerate() {
                if matches!(item.expr, Expr::Count(_)) {
                    row[i] = AttrValue::Int(c[i]);
                }
            }
        }
    } else {
        for b in bindings.into_iter().take(early_limit) {
            let mut row = Vec::with_capacity(ast.returns.len());
            for item in &ast.returns {
                row.push(to_attr(ctx.eval(&item.expr, &b)?));
            }
            rows.push((row, b));
        }
    }

    if ast.distinct {
        let mut seen = std::collections::HashSet::new();
        rows.retain(|(row, _)| seen.insert(row.iter().map(GroupKey::of).collect::<Vec<_>>()));
    }

    if !ast.order_by.is_empty() {
        let mut keyed = Vec::with_capacity(rows.len());
        for (row, b) in rows {
            let mut keys = Vec::with_capacity(ast.order_by.len());
            for s in &ast.order_by {
                keys.push(sort_key(&ctx, ast, &columns, &row, &b, &s.expr)?);
            }
            keyed.push((keys, row, b));
        }
        // Stable, so equal keys keep the base order.
        keyed.sort_by(|(ka, ..), (kb, ..)| {
            for ((a, b), s) in ka.iter().zip(kb).zip(&ast.order_by) {
                let ord = sort_cmp(a, b);
                let ord = if s.ascending { ord } else { ord.reverse() };
                if ord != Ordering::Equal {
                    return ord;
                }
            }
            Ordering::Equal
        });
        rows = keyed.into_iter().map(|(_, row, b)| (row, b)).collect();
    }

    if let Some(limit) = ast.limit {
        rows.truncate(usize::try_from(limit).unwrap_or(usize::MAX));
    }
    Ok(ResultTable {
        columns,
        rows: rows.into_iter().map(|(row, _)| row).collect(),
    })
}

fn sort_key(
    ctx: &Ctx,
    ast: &CypherAst,
    columns: &[String],
    row: &[AttrValue],
    b: &Binding,
    e: &Expr,
) -> Result<AttrValue, CypherError> {
    if let Expr::Alias(name) = e {
        return ast
            .returns
            .iter()
            .position(|r| r.alias.as_deref() == Some(name))
            .or_else(|| columns.iter().position(|c| c == name))
            .map(|i| row[i].clone())
            .ok_or_else(|| CypherError::UnboundVariable(name.clone()));
    }
    if let Some(i) = ast.returns.iter().position(|r| &r.expr == e) {
        return Ok(row[i].clone());
    }
    Ok(to_attr(ctx.eval(e, b)?))
}

/// Hashable stand-in for a cell, for grouping and DISTINCT.
#[derive(Debug, PartialEq, Eq, Hash)]
enum GroupKey {
    Text(String),
    Int(i64),
    Real(u64),
    Absent,
}

impl GroupKey {
    fn of(v: &AttrValue) -> GroupKey {
        match v {
            AttrValue::Text(s) => GroupKey::Text(s.clone()),
            AttrValue::Int(i) => GroupKey::Int(*i),
            // Integral reals group with the equal integer.
            AttrValue::Real(x) if x.fract() == 0.0 && x.abs() < 9e15 => GroupKey::Int(*x as i64),
            AttrValue::Real(x) => GroupKey::Real(if *x == 0.0 { 0 } else { x.to_bits() }),
            AttrValue::Absent => GroupKey::Absent,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cypher::query;
    use crate::fixtures;
    use crate::graph::{build_graph, parse_materials};

    fn replay() -> PropertyGraph {
        build_graph(&parse_materials(fixtures::REPLAY_MATERIALS).records).unwrap()
    }

    fn demo() -> PropertyGraph {
        build_graph(&parse_materials(fixtures::DEMO_MATERIALS).records).unwrap()
    }

    fn texts(t: &ResultTable) -> Vec<Vec<String>> {
        t.rows
            .iter()
            .map(|r| r.iter().map(|v| v.to_string()).collect())
            .collect()
    }

    #[test]
    fn replay_replay() {
        let t = query(
            &replay(),
            "MATCH(n:Formula)-[r]->(:TopoClass{name:'topological insulator'}) WHERE n.soc_dos_gap <> \"\" RETURN n.name , n.matID LIMIT 3",
        )
        .unwrap();
        assert_eq!(t.columns, ["n.name", "n.matID"]);
        assert_eq!(
            texts(&t),
            [
                ["Bi3(TeCl5)2", "MAT00000859"],
                ["BaSn2", "MAT00028452"],
                ["Bi", "MAT00028196"]
            ]
        );
    }

    #[test]
    fn empty_graph_gives_no_rows() {
        let g = PropertyGraph::default();
        for q in [
            "MATCH (n) RETURN n.name",
            "MATCH (n:Formula) RETURN COUNT(*)",
            "MATCH (a)-[r]->(b) RETURN DISTINCT b.name ORDER BY b.name LIMIT 5",
        ] {
            assert!(query(&g, q).unwrap().rows.is_empty(), "{q}");
        }
    }

    #[test]
    fn null_and_coercion_rules() {
        let g = demo();
        // Absent gap is filtered by every comparison, including <>.
        let with_gap = query(
            &g,
            "MATCH (n:Formula) WHERE n.nsoc_dos_gap <> '' RETURN n.name",
        )
        .unwrap();
        let nulls = query(
            &g,
            "MATCH (n:Formula) WHERE n.nsoc_dos_gap IS NULL RETURN n.name",
        )
        .unwrap();
        let all = query(&g, "MATCH (n:Formula) RETURN n.name").unwrap();
        assert_eq!(with_gap.len() + nulls.len(), all.len());
        // Numeric text is parsed before comparing.
        let a = query(
            &g,
            "MATCH (n:Formula) WHERE n.nsoc_dos_gap > '1.5' RETURN n.name",
        )
        .unwrap();
        let b = query(
            &g,
            "MATCH (n:Formula) WHERE n.nsoc_dos_gap > 1.5 RETURN n.name",
        )
        .unwrap();
        assert_eq!(a, b);
        assert!(texts(&a).iter().any(|r| r[0] == "CsPbI3"));
        // NOT of a filtered comparison is true.
        let not = query(
            &g,
            "MATCH (n:Formula) WHERE NOT n.nsoc_dos_gap > 1.5 RETURN n.name",
        )
        .unwrap();
        assert_eq!(not.len() + b.len(), all.len());
    }

    #[test]
    fn count_group_and_order() {
        let g = replay();
        let t = query(
            &g,
            "MATCH (n:Formula)-[:HAS_ELEMENT]->(e:Element) RETURN e.name AS el, COUNT(n) AS uses ORDER BY uses DESC, el",
        )
        .unwrap();
        assert_eq!(t.columns, ["el", "uses"]);
        assert_eq!(texts(&t)[0], ["Bi", "2"]);
        assert_eq!(t.len(), 5);
    }

    #[test]
    fn distinct_and_limit() {
        let g = demo();
        let t = query(
            &g,
            "MATCH (n:Formula)-[:BELONGS_TO_TOPOCLASS]->(c) RETURN DISTINCT c.name ORDER BY c.name",
        )
        .unwrap();
        let names: Vec<String> = texts(&t).into_iter().map(|r| r[0].clone()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(names, sorted);
        let t = query(&g, "MATCH (n:Formula) RETURN n.name LIMIT 2").unwrap();
        assert_eq!(t.len(), 2);
        assert!(query(&g, "MATCH (n:Formula) RETURN n.name LIMIT 0")
            .unwrap()
            .is_empty());
    }

    #[test]
    fn relationship_value_and_undirected() {
        let g = replay();
        let t = query(
            &g,
            "MATCH (c:TopoClass)-[r {value: 'SOC'}]-(n:Formula {name: 'BaSn2'}) RETURN c.name, r.value",
        )
        .unwrap();
        assert_eq!(texts(&t), [["topological insulator", "SOC"]]);
        let none = query(
            &g,
            "MATCH (n:Formula)-[r:BELONGS_TO_TOPOCLASS {value: 'NSOC'}]->(c) RETURN n.name",
        )
        .unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn edges_bind_at_most_once() {
        let g = replay();
        // Bi has a single element edge, so two distinct element edges from it cannot both bind.
        let t = query(
            &g,
            "MATCH (e1:Element)<-[:HAS_ELEMENT]-(n:Formula {name: 'Bi'})-[:HAS_ELEMENT]->(e2:Element) RETURN e1.name",
        )
        .unwrap();
        assert!(t.is_empty());
        let t = query(
            &g,
            "MATCH (n:Formula {name: 'BaSn2'})-[:HAS_ELEMENT]->(e1), (n)-[:HAS_ELEMENT]->(e2) RETURN e1.name, e2.name",
        )
        .unwrap();
        assert_eq!(texts(&t), [["Ba", "Sn"], ["Sn", "Ba"]]);
    }

    #[test]
    fn unknown_labels_match_nothing() {
        let g = replay();
        assert!(query(&g, "MATCH (n:Material) RETURN n.name")
            .unwrap()
            .is_empty());
        assert!(query(&g, "MATCH (n)-[:LIKES]->(m) RETURN n.name")
            .unwrap()
            .is_empty());
    }
}
