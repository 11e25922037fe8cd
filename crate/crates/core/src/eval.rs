//! Question-answering evaluation: categorized cases, mechanical checkers and
//! a majority-of-trials scoring rule.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::llm::{MockBackend, MockReply, MockRule};
use crate::pipeline::{
    ChatAnswer, ChatRequest, CitationKind, Pipeline, PipelineError, PipelineTrace,
};

/// Trials per case.
pub const DEFAULT_TRIALS: usize = 3;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("invalid case {id}: {reason}")]
    InvalidCase { id: String, reason: String },
    #[error("duplicate case id {0}")]
    DuplicateId(String),
    #[error("case file: {0}")]
    Io(#[from] std::io::Error),
    #[error("case file: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    EntitySelection,
    RelationshipSelection,
    PropertySelection,
}

impl Category {
    pub const ALL: [Category; 3] = [
        Category::EntitySelection,
        Category::RelationshipSelection,
        Category::PropertySelection,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Category::EntitySelection => "Entity selection",
            Category::RelationshipSelection => "Relationship selection",
            Category::PropertySelection => "Property selection",
        }
    }
}

/// How a case decides whether an answer is correct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckerSpec {
    /// Every string occurs in the answer text, ignoring case.
    AnswerContainsAll(Vec<String>),
    /// At least one string occurs in the answer text, ignoring case.
    AnswerContainsAny(Vec<String>),
    /// Some row of the knowledge-graph result has `value` in `column`.
    CypherResultContains { column: String, value: String },
    /// A citation carries exactly this URL.
    CitationUrlPresent(String),
}

impl CheckerSpec {
    pub fn check(&self, answer: &ChatAnswer) -> bool {
        match self {
            CheckerSpec::AnswerContainsAll(needles) => {
                let text = answer.text.to_lowercase();
                needles.iter().all(|n| text.contains(&n.to_lowercase()))
            }
            CheckerSpec::AnswerContainsAny(needles) => {
                let text = answer.text.to_lowercase();
                needles.iter().any(|n| text.contains(&n.to_lowercase()))
            }
            CheckerSpec::CypherResultContains { column, value } => {
                let Some(table) = &answer.trace.kg_result else {
                    return false;
                };
                let Some(col) = table.column_index(column) else {
                    return false;
                };
                table.rows.iter().any(|row| row[col].to_string() == *value)
            }
            CheckerSpec::CitationUrlPresent(url) => answer
                .citations
                .iter()
                .any(|c| c.url.as_deref() == Some(url.as_str())),
        }
    }

    fn validate(&self) -> Result<(), String> {
        match self {
            CheckerSpec::AnswerContainsAll(v) | CheckerSpec::AnswerContainsAny(v) => {
                if v.is_empty() || v.iter().any(|s| s.is_empty()) {
                    return Err("checker needs non-empty strings".into());
                }
            }
            CheckerSpec::CypherResultContains { column, value } => {
                if column.is_empty() || value.is_empty() {
                    return Err("checker needs a column and a value".into());
                }
            }
            CheckerSpec::CitationUrlPresent(url) => {
                if url.is_empty() {
                    return Err("checker needs a url".into());
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestCase {
    pub id: String,
    pub category: Category,
    pub question: String,
    pub check: CheckerSpec,
    /// Known-good Cypher; used by the scripted golden backend.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_cypher: Option<String>,
}

impl TestCase {
    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |reason: String| EvalError::InvalidCase {
            id: self.id.clone(),
            reason,
        };
        if self.id.trim().is_empty() {
            return Err(bad("empty id".into()));
        }
        if self.question.trim().is_empty() {
            return Err(bad("empty question".into()));
        }
        self.check.validate().map_err(bad)
    }
}

pub fn validate_cases(cases: &[TestCase]) -> Result<(), EvalError> {
    let mut seen = std::collections::BTreeSet::new();
    for c in cases {
        c.validate()?;
        if !seen.insert(c.id.as_str()) {
            return Err(EvalError::DuplicateId(c.id.clone()));
        }
    }
    Ok(())
}

pub fn load_cases(path: impl AsRef<Path>) -> Result<Vec<TestCase>, EvalError> {
    let text = std::fs::read_to_string(path)?;
    let cases: Vec<TestCase> = serde_json::from_str(&text)?;
    validate_cases(&cases)?;
    Ok(cases)
}

pub fn save_cases(path: impl AsRef<Path>, cases: &[TestCase]) -> Result<(), EvalError> {
    let text = serde_json::to_string_pretty(cases)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Anything that turns a question into an answer.
pub trait AnswerSystem {
    fn answer(&self, req: &ChatRequest) -> Result<ChatAnswer, PipelineError>;
    fn backend_label(&self) -> String;
}

impl AnswerSystem for Pipeline {
    fn answer(&self, req: &ChatRequest) -> Result<ChatAnswer, PipelineError> {
        Pipeline::answer(self, req)
    }

    fn backend_label(&self) -> String {
        self.backend_name().to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub correct: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
    /// In-memory only.
    #[serde(skip)]
    pub trace: Option<PipelineTrace>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub id: String,
    pub category: Category,
    pub question: String,
    pub trials: Vec<TrialResult>,
    pub correct_trials: usize,
    pub passed: bool,
}

/// Majority rule: at least two thirds of the trials must be correct.
pub fn passes(correct: usize, trials: usize) -> bool {
    trials > 0 && 3 * correct >= 2 * trials
}

pub fn run_case(case: &TestCase, system: &dyn AnswerSystem, trials: usize) -> CaseResult {
    let mut results = Vec::with_capacity(trials);
    for trial in 0..trials {
        let mut req = ChatRequest::new(case.question.clone());
        req.trace_id = Some(format!("eval-{}-{trial}", case.id));
        let r = match system.answer(&req) {
            Ok(ans) => TrialResult {
                trial,
                correct: case.check.check(&ans),
                error: None,
                answer: Some(ans.text.clone()),
                trace: Some(ans.trace),
            },
            Err(e) => {
                let trace = match &e {
                    PipelineError::LlmFailure { trace, .. } => Some((**trace).clone()),
                    _ => None,
                };
                TrialResult {
                    trial,
                    correct: false,
                    error: Some(e.to_string()),
                    answer: None,
                    trace,
                }
            }
        };
        results.push(r);
    }
    let correct_trials = results.iter().filter(|t| t.correct).count();
    CaseResult {
        id: case.id.clone(),
        category: case.category,
        question: case.question.clone(),
        trials: results,
        correct_trials,
        passed: passes(correct_trials, trials),
    }
}

/// Accuracy in hundredths, rounded half up.
pub fn accuracy_hundredths(passed: usize, total: usize) -> u32 {
    if total == 0 {
        return 0;
    }
    ((200 * passed + total) / (2 * total)) as u32
}

/// `100` → "1", `80` → "0.8", `89` → "0.89".
pub fn format_accuracy(hundredths: u32) -> String {
    let s = format!("{}.{:02}", hundredths / 100, hundredths % 100);
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryScore {
    pub category: Category,
    pub passed: usize,
    pub total: usize,
    pub accuracy: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub backend: String,
    pub iterations: usize,
    pub scores: Vec<CategoryScore>,
    pub cases: Vec<CaseResult>,
}

impl EvalReport {
    pub fn score(&self, category: Category) -> Option<&CategoryScore> {
        self.scores.iter().find(|s| s.category == category)
    }

    /// Plain-text table with one row per category.
    pub fn table(&self) -> String {
        let header = [
            "Task",
            "Backend",
            "Passed",
            "Total",
            "Accuracy",
            "Iterations",
        ];
        let rows: Vec<[String; 6]> = self
            .scores
            .iter()
            .map(|s| {
                [
                    s.category.label().to_string(),
                    self.backend.clone(),
                    s.passed.to_string(),
                    s.total.to_string(),
                    s.accuracy.clone(),
                    self.iterations.to_string(),
                ]
            })
            .collect();
        let mut widths = header.map(str::len);
        for row in &rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let line = |cells: Vec<&str>| {
            let padded: Vec<String> = cells
                .iter()
                .zip(widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect();
            padded.join(" | ").trim_end().to_string()
        };
        let mut out = line(header.to_vec());
        out.push('\n');
        out.push_str(
            &widths
                .iter()
                .map(|w| "-".repeat(*w))
                .collect::<Vec<_>>()
                .join("-|-"),
        );
        out.push('\n');
        for row in &rows {
            out.push_str(&line(row.iter().map(String::as_str).collect()));
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.table())
    }
}

/// Run every case, grouped by category in a fixed order and otherwise in
/// input order.
pub fn run_suite(cases: &[TestCase], system: &dyn AnswerSystem, trials: usize) -> EvalReport {
    let mut ordered: Vec<&TestCase> = cases.iter().collect();
    ordered.sort_by_key(|c| c.category);
    let results: Vec<CaseResult> = ordered
        .iter()
        .map(|c| run_case(c, system, trials))
        .collect();
    let scores = Category::ALL
        .iter()
        .filter_map(|&cat| {
            let in_cat: Vec<&CaseResult> = results.iter().filter(|r| r.category == cat).collect();
            if in_cat.is_empty() {
                return None;
            }
            let passed = in_cat.iter().filter(|r| r.passed).count();
            Some(CategoryScore {
                category: cat,
                passed,
                total: in_cat.len(),
                accuracy: format_accuracy(accuracy_hundredths(passed, in_cat.len())),
            })
        })
        .collect();
    EvalReport {
        backend: system.backend_label(),
        iterations: trials,
        scores,
        cases: results,
    }
}

fn case(
    id: &str,
    category: Category,
    question: &str,
    cypher: &str,
    check: CheckerSpec,
) -> TestCase {
    TestCase {
        id: id.into(),
        category,
        question: question.into(),
        check,
        reference_cypher: Some(cypher.into()),
    }
}

fn all(items: &[&str]) -> CheckerSpec {
    CheckerSpec::AnswerContainsAll(items.iter().map(|s| s.to_string()).collect())
}

fn cell(column: &str, value: &str) -> CheckerSpec {
    CheckerSpec::CypherResultContains {
        column: column.into(),
        value: value.into(),
    }
}

fn material_url(mat_id: &str) -> CheckerSpec {
    CheckerSpec::CitationUrlPresent(format!("{}{mat_id}", crate::llm::MATERIAL_URL_PREFIX))
}

/// The bundled suite over the demo fixture: 5 entity, 9 relationship and
/// 9 property questions.
pub fn default_suites() -> Vec<TestCase> {
    use Category::*;
    vec![
        case(
            "entity-01",
            EntitySelection,
            "Which materials in the graph are topological crystalline insulators?",
            "MATCH (n:Formula)-[:BELONGS_TO_TOPOCLASS {value: 'SOC'}]->(:TopoClass {name: 'topological crystalline insulator'}) RETURN n.name, n.matID",
            all(&["SnTe"]),
        ),
        case(
            "entity-02",
            EntitySelection,
            "Recommend three topological insulators under spin-orbit coupling.",
            "MATCH (n:Formula)-[:BELONGS_TO_TOPOCLASS {value: 'SOC'}]->(:TopoClass {name: 'topological insulator'}) RETURN n.name, n.matID LIMIT 3",
            material_url("MAT00028452"),
        ),
        case(
            "entity-03",
            EntitySelection,
            "Which materials contain the element Te?",
            "MATCH (n:Formula)-[:HAS_ELEMENT]->(:Element {name: 'Te'}) RETURN n.name, n.matID",
            all(&["Bi2Te3", "Sb2Te3", "SnTe", "Bi2Te2Se", "Bi3(TeCl5)2"]),
        ),
        case(
            "entity-04",
            EntitySelection,
            "Which materials crystallize in space group P6_3/mmc?",
            "MATCH (n:Formula)-[:BELONGS_TO_SPACEGROUP]->(:Spacegroup {name: 'P6_3/mmc'}) RETURN n.name, n.matID",
            all(&["Ca(InP)2", "Na3Bi"]),
        ),
        case(
            "entity-05",
            EntitySelection,
            "Which materials are generic-momenta semimetals under spin-orbit coupling?",
            "MATCH (n:Formula)-[:BELONGS_TO_TOPOCLASS {value: 'SOC'}]->(:TopoClass {name: 'generic-momenta semimetal'}) RETURN n.name, n.matID",
            all(&["TaAs"]),
        ),
        case(
            "relationship-01",
            RelationshipSelection,
            "Which space group does Bi2Se3 belong to?",
            "MATCH (n:Formula {name: 'Bi2Se3'})-[:BELONGS_TO_SPACEGROUP]->(s:Spacegroup) RETURN n.name, n.matID, s.name",
            cell("s.name", "R-3m"),
        ),
        case(
            "relationship-02",
            RelationshipSelection,
            "What is the point group of SnTe?",
            "MATCH (n:Formula {name: 'SnTe'})-[:BELONGS_TO_POINTGROUP]->(p:Pointgroup) RETURN n.name, n.matID, p.name",
            cell("p.name", "Oh"),
        ),
        case(
            "relationship-03",
            RelationshipSelection,
            "Which elements make up KIO3?",
            "MATCH (n:Formula {name: 'KIO3'})-[:HAS_ELEMENT]->(e:Element) RETURN n.name, n.matID, e.name",
            cell("e.name", "I"),
        ),
        case(
            "relationship-04",
            RelationshipSelection,
            "What is the lattice system of ZrSiS?",
            "MATCH (n:Formula {name: 'ZrSiS'})-[:HAS_LATTICE]->(l:Lattice) RETURN n.name, n.matID, l.name",
            all(&["tetragonal"]),
        ),
        case(
            "relationship-05",
            RelationshipSelection,
            "Which topological class does CsPbI3 have without spin-orbit coupling?",
            "MATCH (n:Formula {name: 'CsPbI3'})-[:BELONGS_TO_TOPOCLASS {value: 'NSOC'}]->(t:TopoClass) RETURN n.name, n.matID, t.name",
            all(&["topological insulator"]),
        ),
        case(
            "relationship-06",
            RelationshipSelection,
            "How many materials in the graph contain Bi?",
            "MATCH (n:Formula)-[:HAS_ELEMENT]->(:Element {name: 'Bi'}) RETURN COUNT(n) AS materials",
            cell("materials", "6"),
        ),
        case(
            "relationship-07",
            RelationshipSelection,
            "Which other materials share the space group of Bi2Te3?",
            "MATCH (a:Formula {name: 'Bi2Te3'})-[:BELONGS_TO_SPACEGROUP]->(s:Spacegroup)<-[:BELONGS_TO_SPACEGROUP]-(b:Formula) RETURN b.name, b.matID",
            all(&["Bi2Se3", "Sb2Te3", "Bi2Te2Se"]),
        ),
        case(
            "relationship-08",
            RelationshipSelection,
            "Which topological classes does Na3Bi belong to with and without spin-orbit coupling?",
            "MATCH (n:Formula {name: 'Na3Bi'})-[r:BELONGS_TO_TOPOCLASS]->(t:TopoClass) RETURN n.name, n.matID, r.value, t.name",
            all(&["high-symmetry point semimetal", "high-symmetry line semimetal"]),
        ),
        case(
            "relationship-09",
            RelationshipSelection,
            "Which high-symmetry line semimetals under spin-orbit coupling contain As?",
            "MATCH (n:Formula)-[:HAS_ELEMENT]->(:Element {name: 'As'}), (n)-[:BELONGS_TO_TOPOCLASS {value: 'SOC'}]->(:TopoClass {name: 'high-symmetry line semimetal'}) RETURN n.name, n.matID",
            all(&["Cd3As2"]),
        ),
        case(
            "property-01",
            PropertySelection,
            "List topological insulators whose SOC gap exceeds 0.1 eV.",
            "MATCH (n:Formula)-[:BELONGS_TO_TOPOCLASS {value: 'SOC'}]->(:TopoClass {name: 'topological insulator'}) WHERE n.soc_dos_gap > 0.1 RETURN n.name, n.matID, n.soc_dos_gap",
            all(&["NdH3", "KIO3", "CsGeBr3", "Ca(InP)2", "Bi2Te2Se"]),
        ),
        case(
            "property-02",
            PropertySelection,
            "What is the density of TaAs?",
            "MATCH (n:Formula {name: 'TaAs'}) RETURN n.name, n.matID, n.density",
            cell("n.density", "12.2"),
        ),
        case(
            "property-03",
            PropertySelection,
            "What is the SOC gap of KIO3?",
            "MATCH (n:Formula {name: 'KIO3'}) RETURN n.name, n.matID, n.soc_dos_gap",
            cell("n.soc_dos_gap", "0.285019"),
        ),
        case(
            "property-04",
            PropertySelection,
            "What are the phonon properties of ZrSiS?",
            "MATCH (n:Formula {name: 'ZrSiS'}) RETURN n.name, n.matID, n.proto AS proto, n.lines AS lines, n.ring_pts AS ring_pts, n.weyl_pts AS weyl_pts",
            cell("proto", "PbFCl"),
        ),
        case(
            "property-05",
            PropertySelection,
            "How many phonon Weyl points does TaAs have?",
            "MATCH (n:Formula {name: 'TaAs'}) RETURN n.name, n.matID, n.weyl_pts AS weyl_pts",
            cell("weyl_pts", "24"),
        ),
        case(
            "property-06",
            PropertySelection,
            "What is the matID of Bi2Te2Se?",
            "MATCH (n:Formula {name: 'Bi2Te2Se'}) RETURN n.name, n.matID",
            material_url("MAT00020545"),
        ),
        case(
            "property-07",
            PropertySelection,
            "Which topological insulator has the largest gap without spin-orbit coupling?",
            "MATCH (n:Formula)-[:BELONGS_TO_TOPOCLASS {value: 'NSOC'}]->(:TopoClass {name: 'topological insulator'}) WHERE n.nsoc_dos_gap IS NOT NULL RETURN n.name, n.matID, n.nsoc_dos_gap ORDER BY n.nsoc_dos_gap DESC LIMIT 1",
            all(&["CsPbI3"]),
        ),
        case(
            "property-08",
            PropertySelection,
            "Which topological insulators are denser than 7 g/cm3, like Bi2Te3?",
            "MATCH (n:Formula)-[:BELONGS_TO_TOPOCLASS {value: 'SOC'}]->(:TopoClass {name: 'topological insulator'}) WHERE n.density > 7 RETURN n.name, n.matID, n.density ORDER BY n.density DESC",
            all(&["Bi2Te3", "Bi2Te2Se", "Bi2Se3"]),
        ),
        case(
            "property-09",
            PropertySelection,
            "What is the structure prototype of MgB2?",
            "MATCH (n:Formula {name: 'MgB2'}) RETURN n.name, n.matID, n.proto AS proto",
            cell("proto", "AlB2"),
        ),
    ]
}

/// Scripted backend that answers stage 1 with each case's reference Cypher
/// and synthesizes by digesting the retrieved context.
pub fn golden_backend_for(cases: &[TestCase]) -> MockBackend {
    let mut rules: Vec<MockRule> = cases
        .iter()
        .filter_map(|c| {
            c.reference_cypher.as_ref().map(|cy| MockRule {
                contains: vec!["Generate Cypher statement".into(), c.question.clone()],
                reply: MockReply::Text(cy.clone()),
                times: None,
            })
        })
        .collect();
    rules.push(MockRule::when("analyze and synthesize", MockReply::Digest));
    MockBackend::new("golden", rules)
}

/// Golden script for the bundled suite, plus the replay question.
pub fn golden_backend() -> MockBackend {
    let mut cases = default_suites();
    cases.push(TestCase {
        id: "replay".into(),
        category: Category::EntitySelection,
        question: crate::fixtures::REPLAY_QUESTION.into(),
        check: CheckerSpec::AnswerContainsAll(vec!["BaSn2".into()]),
        reference_cypher: Some(crate::fixtures::REPLAY_CYPHER.into()),
    });
    golden_backend_for(&cases)
}

/// Citations of a given kind, for report consumers.
pub fn citation_values(answer: &ChatAnswer, kind: CitationKind) -> Vec<&str> {
    answer
        .citations
        .iter()
        .filter(|c| c.kind == kind)
        .map(|c| c.value.as_str())
        .collect()
}
