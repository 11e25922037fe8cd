//! Seeded generators for synthetic material records and QA pairs, used by the
//! scale tests and benchmarks.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{MaterialRecord, TopoClassName};
use crate::literature::QaPair;

/// (symbol, number, crystal system, point group)
const SPACEGROUPS: &[(&str, i64, &str, &str)] = &[
    ("P1", 1, "triclinic", "C1"),
    ("P-1", 2, "triclinic", "Ci"),
    ("P2_1/c", 14, "monoclinic", "C2h"),
    ("C2/m", 12, "monoclinic", "C2h"),
    ("Pnma", 62, "orthorhombic", "D2h"),
    ("Cmcm", 63, "orthorhombic", "D2h"),
    ("Fddd", 70, "orthorhombic", "D2h"),
    ("I4/mmm", 139, "tetragonal", "D4h"),
    ("P4/nmm", 129, "tetragonal", "D4h"),
    ("I-42d", 122, "tetragonal", "D2d"),
    ("R-3m", 166, "trigonal", "D3d"),
    ("P-3m1", 164, "trigonal", "D3d"),
    ("R3m", 160, "trigonal", "C3v"),
    ("P63/mmc", 194, "hexagonal", "D6h"),
    ("P-62m", 189, "hexagonal", "D3h"),
    ("P6/mmm", 191, "hexagonal", "D6h"),
    ("Pm-3m", 221, "cubic", "Oh"),
    ("Fm-3m", 225, "cubic", "Oh"),
    ("F-43m", 216, "cubic", "Td"),
    ("Pn-3m", 224, "cubic", "Oh"),
];

const ELEMENTS: &[&str] = &[
    "H", "Li", "B", "C", "N", "O", "F", "Na", "Mg", "Al", "Si", "P", "S", "Cl", "K", "Ca", "Ti",
    "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br", "Sr", "Y", "Zr",
    "Nb", "Pd", "Ag", "Cd", "In", "Sn", "Sb", "Te", "I", "Cs", "Ba", "La", "Nd", "Hf", "Pt", "Au",
    "Hg", "Tl", "Pb", "Bi",
];

fn maybe<R: Rng>(rng: &mut R, p: f64, lo: f64, hi: f64) -> Option<f64> {
    rng.random_bool(p).then(|| rng.random_range(lo..hi))
}

/// `n` valid records with unique material ids. Deterministic for a seed.
pub fn random_records(n: usize, seed: u64) -> Vec<MaterialRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| random_record(&mut rng, i)).collect()
}

fn random_record<R: Rng>(rng: &mut R, i: usize) -> MaterialRecord {
    let n_el = rng.random_range(1..=4);
    let elements: Vec<String> = ELEMENTS
        .choose_multiple(rng, n_el)
        .map(|s| s.to_string())
        .collect();
    let formula: String = elements
        .iter()
        .map(|e| match rng.random_range(1..=4) {
            1 => e.clone(),
            k => format!("{e}{k}"),
        })
        .collect();
    let (sg, number, system, pg) = *SPACEGROUPS.choose(rng).unwrap();
    let class = |rng: &mut R| -> Option<String> {
        rng.random_bool(0.9)
            .then(|| TopoClassName::ALL.choose(rng).unwrap().as_str().to_string())
    };
    let topo_class_soc = class(rng);
    let topo_class_nsoc = class(rng);
    let phonon = rng.random_bool(0.4);
    MaterialRecord {
        formula,
        mat_id: format!("MAT{:08}", i + 1),
        elements,
        crystal_system: system.to_string(),
        spacegroup_symbol: sg.to_string(),
        spacegroup_number: number,
        pointgroup: pg.to_string(),
        topo_class_soc,
        topo_class_nsoc,
        soc_dos_gap: maybe(rng, 0.8, 0.0, 2.0),
        nsoc_dos_gap: maybe(rng, 0.8, 0.0, 2.0),
        indirect_gap: maybe(rng, 0.5, 0.0, 1.0),
        fermi_energy: maybe(rng, 0.8, -5.0, 10.0),
        density: maybe(rng, 0.9, 1.0, 15.0),
        a: maybe(rng, 0.9, 2.5, 15.0),
        b: maybe(rng, 0.9, 2.5, 15.0),
        c: maybe(rng, 0.9, 2.5, 15.0),
        alpha: maybe(rng, 0.9, 60.0, 120.0),
        beta: maybe(rng, 0.9, 60.0, 120.0),
        gamma: maybe(rng, 0.9, 60.0, 120.0),
        proto: phonon.then(|| format!("proto-{}", rng.random_range(1..40))),
        lines: phonon.then(|| format!("{}", rng.random_range(0..5))),
        ring_pts: phonon.then(|| format!("{}", rng.random_range(0..5))),
        weyl_pts: phonon.then(|| format!("{}", rng.random_range(0..9))),
    }
}

const WORDS: &[&str] = &[
    "topological",
    "insulator",
    "surface",
    "state",
    "band",
    "gap",
    "dirac",
    "cone",
    "weyl",
    "semimetal",
    "phonon",
    "spin",
    "orbit",
    "coupling",
    "symmetry",
    "crystal",
    "bismuth",
    "selenide",
    "telluride",
    "fermi",
    "level",
    "magnetic",
    "transport",
    "nanoribbon",
    "quantum",
    "hall",
    "effect",
    "lattice",
    "strain",
    "doping",
    "film",
    "thickness",
    "edge",
    "mode",
    "node",
    "line",
    "point",
    "chern",
    "number",
    "invariant",
];

fn sentence<R: Rng>(rng: &mut R, len: usize) -> String {
    (0..len)
        .map(|_| *WORDS.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

/// `n` QA pairs with ids `0..n` built from a fixed vocabulary.
pub fn random_pairs(n: usize, seed: u64) -> Vec<QaPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let qlen = rng.random_range(4..12);
            QaPair {
                id: i as u64,
                question: format!("{}?", sentence(&mut rng, qlen)),
                answer: sentence(&mut rng, 20),
                title: sentence(&mut rng, 6),
                doi: format!("{:04}.{:05}v{}", 900 + i % 1500, i, 1 + i % 3),
            }
        })
        .collect()
}

/// Random query strings over the same vocabulary as [`random_pairs`].
pub fn random_queries(n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let len = rng.random_range(2..10);
            sentence(&mut rng, len)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::validate_record;

    #[test]
    fn records_are_valid_and_reproducible() {
        let a = random_records(500, 9);
        assert!(a.iter().all(|r| validate_record(r).is_empty()));
        assert_eq!(a, random_records(500, 9));
        for (sym, num, _, pg) in SPACEGROUPS {
            assert!(!sym.is_empty() && (1..=230).contains(num));
            assert!(crate::graph::POINT_GROUPS.contains(pg));
        }
    }
}
