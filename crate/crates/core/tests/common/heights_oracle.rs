//! Element heights computed straight from the records, without the graph.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use topokg_core::MaterialRecord;

fn rank(counts: HashMap<String, usize>, keep: usize) -> Vec<String> {
    let mut v: Vec<(String, usize)> = counts.into_iter().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    v.into_iter().take(keep).map(|(k, _)| k).collect()
}

/// `soc` picks which class column to read.
pub fn heights(records: &[MaterialRecord], classes: &[&str], soc: bool) -> BTreeMap<String, u32> {
    let mut out: BTreeMap<String, u32> = BTreeMap::new();
    for class in classes {
        let members: Vec<&MaterialRecord> = records
            .iter()
            .filter(|r| {
                let c = if soc {
                    &r.topo_class_soc
                } else {
                    &r.topo_class_nsoc
                };
                c.as_deref() == Some(*class)
            })
            .collect();
        let mut sg_counts = HashMap::new();
        for r in &members {
            *sg_counts.entry(r.spacegroup_symbol.clone()).or_insert(0) += 1;
        }
        for sg in rank(sg_counts, 5) {
            let mut el_counts = HashMap::new();
            for r in members.iter().filter(|r| r.spacegroup_symbol == sg) {
                let distinct: BTreeSet<&String> = r.elements.iter().collect();
                for e in distinct {
                    *el_counts.entry(e.clone()).or_insert(0) += 1;
                }
            }
            for e in rank(el_counts, 10) {
                *out.entry(e).or_insert(0) += 1;
            }
        }
    }
    out
}
