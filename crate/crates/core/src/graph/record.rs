//! Material records as they arrive in the line-delimited ingestion file, plus
//! the cleaning rules applied to each one.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::GraphError;
use crate::periodic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CrystalSystem {
    Triclinic,
    Monoclinic,
    Orthorhombic,
    Tetragonal,
    Trigonal,
    Hexagonal,
    Cubic,
}

impl CrystalSystem {
    pub const ALL: [CrystalSystem; 7] = [
        CrystalSystem::Triclinic,
        CrystalSystem::Monoclinic,
        CrystalSystem::Orthorhombic,
        CrystalSystem::Tetragonal,
        CrystalSystem::Trigonal,
        CrystalSystem::Hexagonal,
        CrystalSystem::Cubic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CrystalSystem::Triclinic => "triclinic",
            CrystalSystem::Monoclinic => "monoclinic",
            CrystalSystem::Orthorhombic => "orthorhombic",
            CrystalSystem::Tetragonal => "tetragonal",
            CrystalSystem::Trigonal => "trigonal",
            CrystalSystem::Hexagonal => "hexagonal",
            CrystalSystem::Cubic => "cubic",
        }
    }
}

impl FromStr for CrystalSystem {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        CrystalSystem::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or(())
    }
}

/// The six-way topological classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TopoClassName {
    TopologicalInsulator,
    TopologicalCrystallineInsulator,
    HighSymmetryLineSemimetal,
    HighSymmetryPointSemimetal,
    GenericMomentaSemimetal,
    TrivialInsulator,
}

impl TopoClassName {
    pub const ALL: [TopoClassName; 6] = [
        TopoClassName::TopologicalInsulator,
        TopoClassName::TopologicalCrystallineInsulator,
        TopoClassName::HighSymmetryLineSemimetal,
        TopoClassName::HighSymmetryPointSemimetal,
        TopoClassName::GenericMomentaSemimetal,
        TopoClassName::TrivialInsulator,
    ];

    /// Every class except the trivial insulator.
    pub const NONTRIVIAL: [TopoClassName; 5] = [
        TopoClassName::TopologicalInsulator,
        TopoClassName::TopologicalCrystallineInsulator,
        TopoClassName::HighSymmetryLineSemimetal,
        TopoClassName::HighSymmetryPointSemimetal,
        TopoClassName::GenericMomentaSemimetal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TopoClassName::TopologicalInsulator => "topological insulator",
            TopoClassName::TopologicalCrystallineInsulator => "topological crystalline insulator",
            TopoClassName::HighSymmetryLineSemimetal => "high-symmetry line semimetal",
            TopoClassName::HighSymmetryPointSemimetal => "high-symmetry point semimetal",
            TopoClassName::GenericMomentaSemimetal => "generic-momenta semimetal",
            TopoClassName::TrivialInsulator => "trivial insulator",
        }
    }
}

impl fmt::Display for TopoClassName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TopoClassName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        TopoClassName::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown topological class {s:?}"))
    }
}

/// The 32 crystallographic point groups in Schoenflies notation.
pub const POINT_GROUPS: [&str; 32] = [
    "C1", "Ci", "C2", "Cs", "C2h", "D2", "C2v", "D2h", "C4", "S4", "C4h", "D4", "C4v", "D2d",
    "D4h", "C3", "C3i", "D3", "C3v", "D3d", "C6", "C3h", "C6h", "D6", "C6v", "D3h", "D6h", "T",
    "Th", "O", "Td", "Oh",
];

/// One material row of the ingestion file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialRecord {
    pub formula: String,
    #[serde(rename = "matID")]
    pub mat_id: String,
    pub elements: Vec<String>,
    pub crystal_system: String,
    pub spacegroup_symbol: String,
    pub spacegroup_number: i64,
    pub pointgroup: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topo_class_soc: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topo_class_nsoc: Option<String>,
    /// eV
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soc_dos_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nsoc_dos_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indirect_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fermi_energy: Option<f64>,
    /// g/cm³
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,
    /// Cell lengths in Å.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// Cell angles in degrees.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proto: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lines: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ring_pts: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weyl_pts: Option<String>,
}

impl MaterialRecord {
    /// Numeric properties in the order they are stored on Formula nodes.
    pub fn numeric_fields(&self) -> [(&'static str, Option<f64>); 11] {
        [
            ("soc_dos_gap", self.soc_dos_gap),
            ("nsoc_dos_gap", self.nsoc_dos_gap),
            ("indirect_gap", self.indirect_gap),
            ("fermi_energy", self.fermi_energy),
            ("density", self.density),
            ("a", self.a),
            ("b", self.b),
            ("c", self.c),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
        ]
    }

    pub fn phonon_fields(&self) -> [(&'static str, Option<&str>); 4] {
        [
            ("proto", self.proto.as_deref()),
            ("lines", self.lines.as_deref()),
            ("ring_pts", self.ring_pts.as_deref()),
            ("weyl_pts", self.weyl_pts.as_deref()),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: &'static str,
    pub reason: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

/// A rejected line of the ingestion file (1-based line number).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MalformedRecord {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct LoadReport {
    pub records: Vec<MaterialRecord>,
    pub rejected: Vec<MalformedRecord>,
}

/// Check every record invariant; an empty list means the record is clean.
pub fn validate_record(r: &MaterialRecord) -> Vec<Violation> {
    let mut v = Vec::new();
    let mut push = |field: &'static str, reason: String| v.push(Violation { field, reason });

    if r.formula.trim().is_empty() {
        push("formula", "empty".into());
    }
    if r.mat_id.trim().is_empty() {
        push("matID", "empty".into());
    }
    if r.elements.is_empty() {
        push("elements", "no elements listed".into());
    }
    for el in &r.elements {
        if !periodic::is_element(el) {
            push("elements", format!("{el:?} is not an element symbol"));
        }
    }
    if r.crystal_system.parse::<CrystalSystem>().is_err() {
        push(
            "crystal_system",
            format!(
                "{:?} is not one of the seven crystal systems",
                r.crystal_system
            ),
        );
    }
    if r.spacegroup_symbol.trim().is_empty() {
        push("spacegroup_symbol", "empty".into());
    }
    if !(1..=230).contains(&r.spacegroup_number) {
        push(
            "spacegroup_number",
            format!("{} outside 1..=230", r.spacegroup_number),
        );
    }
    if !POINT_GROUPS.contains(&r.pointgroup.as_str()) {
        push(
            "pointgroup",
            format!("{:?} is not a crystallographic point group", r.pointgroup),
        );
    }
    if let Some(c) = &r.topo_class_soc {
        if c.parse::<TopoClassName>().is_err() {
            push(
                "topo_class_soc",
                format!("{c:?} is not a topological class"),
            );
        }
    }
    if let Some(c) = &r.topo_class_nsoc {
        if c.parse::<TopoClassName>().is_err() {
            push(
                "topo_class_nsoc",
                format!("{c:?} is not a topological class"),
            );
        }
    }
    for (field, value) in r.numeric_fields() {
        if let Some(x) = value {
            if !x.is_finite() {
                push(field, "not a finite number".into());
            }
        }
    }
    v
}

/// Parse line-delimited records. Blank lines are ignored; bad lines are
/// reported and skipped.
pub fn parse_materials(text: &str) -> LoadReport {
    let mut report = LoadReport::default();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: MaterialRecord = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                report.rejected.push(MalformedRecord {
                    line: line_no,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let violations = validate_record(&record);
        if violations.is_empty() {
            report.records.push(record);
        } else {
            let reason = violations
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join("; ");
            report.rejected.push(MalformedRecord {
                line: line_no,
                reason,
            });
        }
    }
    report
}

pub fn load_materials(path: impl AsRef<Path>) -> Result<LoadReport, GraphError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| GraphError::FileUnreadable {
        path: path.display().to_string(),
        source,
    })?;
    Ok(parse_materials(&text))
}
