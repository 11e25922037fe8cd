//! Element-frequency statistics per topological class and the element
//! heights drawn on the periodic-table figure.
//!
//! For each class, its five most common space groups form five cells. A
//! cell's ten most frequent elements each score one point, so an element's
//! height counts the cells it is prominent in: at most 25 over five classes.
//! Ties rank by count descending, then symbol ascending.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::graph::{Coupling, EdgeType, NodeCategory, NodeId, PropertyGraph, TopoClassName};
use crate::periodic;

/// Space groups per class in the height computation.
pub const TOP_SPACEGROUPS: usize = 5;
/// Elements per (class, space group) cell.
pub const TOP_ELEMENTS: usize = 10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalyticsError {
    #[error("unknown topological class {0:?}")]
    UnknownClass(String),
    #[error("unknown element symbol {0:?}")]
    UnknownElement(String),
    #[error("{0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassSpacegroupStat {
    pub topo_class: String,
    pub spacegroup: String,
    pub material_count: usize,
    pub top_elements: Vec<(String, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementHeight {
    pub element: String,
    pub height: u32,
}

/// One bar of the periodic-table figure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicEntry {
    pub element: String,
    pub height: u32,
    pub period: u8,
    pub group: u8,
}

/// The two readings of "most prominent space groups" across classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProminentSpacegroups {
    /// Top five by material count over the union of the classes.
    pub global_top: Vec<(String, usize)>,
    /// Union of each class's top five, in first-seen order.
    pub union_of_class_tops: Vec<String>,
}

/// The five classes other than the trivial insulator.
pub fn default_classes() -> Vec<&'static str> {
    TopoClassName::NONTRIVIAL
        .iter()
        .map(|c| c.as_str())
        .collect()
}

fn class_id(g: &PropertyGraph, class: &str) -> Result<Option<NodeId>, AnalyticsError> {
    class
        .parse::<TopoClassName>()
        .map_err(|_| AnalyticsError::UnknownClass(class.to_string()))?;
    Ok(g.get_node(NodeCategory::TopoClass, class).map(|n| n.id))
}

/// Formula nodes linked to `class` under `coupling`, ascending and distinct.
fn members(
    g: &PropertyGraph,
    class: &str,
    coupling: Coupling,
) -> Result<Vec<NodeId>, AnalyticsError> {
    let Some(id) = class_id(g, class)? else {
        return Ok(Vec::new());
    };
    let set: BTreeSet<NodeId> = g
        .incoming(id)
        .iter()
        .filter_map(|e| g.edge(*e))
        .filter(|e| e.etype == EdgeType::BelongsToTopoClass && e.rel_value == Some(coupling))
        .map(|e| e.src)
        .collect();
    Ok(set.into_iter().collect())
}

fn spacegroup_of(g: &PropertyGraph, formula: NodeId) -> Option<&str> {
    g.first_target(formula, EdgeType::BelongsToSpacegroup)
        .map(|n| n.name.as_str())
}

fn elements_of(g: &PropertyGraph, formula: NodeId) -> BTreeSet<&str> {
    g.outgoing(formula)
        .iter()
        .filter_map(|e| g.edge(*e))
        .filter(|e| e.etype == EdgeType::HasElement)
        .filter_map(|e| g.node(e.dst))
        .map(|n| n.name.as_str())
        .collect()
}

/// Count descending, then name ascending.
fn ranked(counts: BTreeMap<&str, usize>) -> Vec<(String, usize)> {
    let mut v: Vec<(String, usize)> = counts
        .into_iter()
        .map(|(k, c)| (k.to_string(), c))
        .collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v
}

fn count_spacegroups<'g>(g: &'g PropertyGraph, formulas: &[NodeId]) -> Vec<(String, usize)> {
    let mut counts: BTreeMap<&'g str, usize> = BTreeMap::new();
    for f in formulas {
        if let Some(sg) = spacegroup_of(g, *f) {
            *counts.entry(sg).or_default() += 1;
        }
    }
    ranked(counts)
}

/// Materials of a class grouped by space group.
pub fn spacegroup_frequency(
    g: &PropertyGraph,
    class: &str,
    coupling: Coupling,
) -> Result<Vec<(String, usize)>, AnalyticsError> {
    Ok(count_spacegroups(g, &members(g, class, coupling)?))
}

/// How many materials of (class, space group) contain each element; the
/// first `n` by rank.
pub fn top_elements(
    g: &PropertyGraph,
    class: &str,
    spacegroup: &str,
    n: usize,
    coupling: Coupling,
) -> Result<Vec<(String, usize)>, AnalyticsError> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for f in members(g, class, coupling)? {
        if spacegroup_of(g, f) == Some(spacegroup) {
            for e in elements_of(g, f) {
                *counts.entry(e).or_default() += 1;
            }
        }
    }
    let mut v = ranked(counts);
    v.truncate(n);
    Ok(v)
}

/// Every (class, top space group) cell with its top elements.
pub fn class_spacegroup_stats(
    g: &PropertyGraph,
    classes: &[&str],
    coupling: Coupling,
) -> Result<Vec<ClassSpacegroupStat>, AnalyticsError> {
    let mut out = Vec::new();
    for class in classes {
        for (sg, count) in spacegroup_frequency(g, class, coupling)?
            .into_iter()
            .take(TOP_SPACEGROUPS)
        {
            out.push(ClassSpacegroupStat {
                topo_class: class.to_string(),
                top_elements: top_elements(g, class, &sg, TOP_ELEMENTS, coupling)?,
                spacegroup: sg,
                material_count: count,
            });
        }
    }
    Ok(out)
}

fn by_atomic_number(a: &str, b: &str) -> std::cmp::Ordering {
    let key = |s: &str| periodic::atomic_number(s).unwrap_or(u8::MAX);
    key(a).cmp(&key(b)).then_with(|| a.cmp(b))
}

/// Per element, the number of cells whose top-ten list contains it. Elements
/// with no cell are omitted; output is ordered by atomic number.
pub fn element_heights(
    g: &PropertyGraph,
    classes: &[&str],
    coupling: Coupling,
) -> Result<Vec<ElementHeight>, AnalyticsError> {
    Ok(heights_from_cells(&class_spacegroup_stats(
        g, classes, coupling,
    )?))
}

pub fn heights_from_cells(cells: &[ClassSpacegroupStat]) -> Vec<ElementHeight> {
    let mut counts: BTreeMap<&str, u32> = BTreeMap::new();
    for cell in cells {
        for (e, _) in &cell.top_elements {
            *counts.entry(e).or_default() += 1;
        }
    }
    let mut v: Vec<ElementHeight> = counts
        .into_iter()
        .map(|(element, height)| ElementHeight {
            element: element.to_string(),
            height,
        })
        .collect();
    v.sort_by(|a, b| by_atomic_number(&a.element, &b.element));
    v
}

pub fn prominent_spacegroups(
    g: &PropertyGraph,
    classes: &[&str],
    coupling: Coupling,
) -> Result<ProminentSpacegroups, AnalyticsError> {
    let mut all = BTreeSet::new();
    let mut union: Vec<String> = Vec::new();
    for class in classes {
        let m = members(g, class, coupling)?;
        for (sg, _) in count_spacegroups(g, &m).into_iter().take(TOP_SPACEGROUPS) {
            if !union.contains(&sg) {
                union.push(sg);
            }
        }
        all.extend(m);
    }
    let all: Vec<NodeId> = all.into_iter().collect();
    let mut global_top = count_spacegroups(g, &all);
    global_top.truncate(TOP_SPACEGROUPS);
    Ok(ProminentSpacegroups {
        global_top,
        union_of_class_tops: union,
    })
}

/// Attach periodic-table positions, ordered by atomic number.
pub fn export_periodic_table(
    heights: &[ElementHeight],
) -> Result<Vec<PeriodicEntry>, AnalyticsError> {
    let mut out = heights
        .iter()
        .map(|h| {
            let pos = periodic::position(&h.element)
                .ok_or_else(|| AnalyticsError::UnknownElement(h.element.clone()))?;
            Ok((
                pos.atomic_number,
                PeriodicEntry {
                    element: h.element.clone(),
                    height: h.height,
                    period: pos.period,
                    group: pos.group,
                },
            ))
        })
        .collect::<Result<Vec<_>, AnalyticsError>>()?;
    out.sort_by_key(|(z, _)| *z);
    Ok(out.into_iter().map(|(_, e)| e).collect())
}

pub fn periodic_table_json(entries: &[PeriodicEntry]) -> String {
    let mut s = serde_json::to_string_pretty(entries).expect("plain structs serialize");
    s.push('\n');
    s
}

pub fn write_periodic_table(
    entries: &[PeriodicEntry],
    path: impl AsRef<Path>,
) -> Result<(), AnalyticsError> {
    std::fs::write(path.as_ref(), periodic_table_json(entries))
        .map_err(|e| AnalyticsError::Io(format!("{}: {e}", path.as_ref().display())))
}

/// Heights back out of an exported table.
pub fn read_periodic_table(text: &str) -> Result<Vec<ElementHeight>, AnalyticsError> {
    let entries: Vec<PeriodicEntry> =
        serde_json::from_str(text).map_err(|e| AnalyticsError::Io(e.to_string()))?;
    Ok(entries
        .into_iter()
        .map(|e| ElementHeight {
            element: e.element,
            height: e.height,
        })
        .collect())
}
