use super::{ChatMessage, LlmError};

/// Base of every material page link.
pub const MATERIAL_URL_PREFIX: &str = "http://materiae.iphy.ac.cn/materials/";
/// Cited when the knowledge-graph rows carry no material id.
pub const SITE_URL: &str = "http://materiae.iphy.ac.cn";

pub const KG_SECTION: &str = "MaterialsKG information";
pub const LITERATURE_SECTION: &str = "literature information";
pub const QUESTION_SECTION: &str = "user question";
pub const SCHEMA_SECTION: &str = "schema";
/// Stand-in for a source that produced nothing.
pub const NONE_MARKER: &str = "(none)";

const CYPHER_TASK: &str = "Generate Cypher statement to query a graph database.";
const CYPHER_INSTRUCTION: &str =
    "Describe the properties for a given or recommend materials according to human question.";
const CYPHER_NOTE: &str = "Use only the node labels, relationship types and properties listed \
in the schema. Return one read-only statement that starts with MATCH. \
Do not include any text except the generated Cypher statement.";

const CYPHER_EXAMPLES: [&str; 4] = [
    "# Query for the phonon properties of material:\n\
MATCH (n:Formula)\n\
RETURN n.proto AS proto, n.lines AS lines, n.ring_pts AS ring_pts, n.weyl_pts AS weyl_pts",
    "# Recommend topological insulators with an SOC gap above 0.1 eV:\n\
MATCH (n:Formula)-[r:BELONGS_TO_TOPOCLASS {value: 'SOC'}]->(:TopoClass {name: 'topological insulator'})\n\
WHERE n.soc_dos_gap > 0.1\n\
RETURN n.name, n.matID, n.soc_dos_gap ORDER BY n.soc_dos_gap DESC",
    "# Which space group does Bi2Se3 belong to:\n\
MATCH (n:Formula {name: 'Bi2Se3'})-[:BELONGS_TO_SPACEGROUP]->(s:Spacegroup)\n\
RETURN n.name, n.matID, s.name",
    "# How many materials contain the element Bi:\n\
MATCH (n:Formula)-[:HAS_ELEMENT]->(e:Element {name: 'Bi'})\n\
RETURN COUNT(n) AS materials",
];

const QA_TASK: &str = "You are a question-answering assistant for topological materials. \
Your task is to analyze and synthesize information from two sources.";
const QA_INSTRUCTION: &str = "The literature information holds the question-answer pairs closest \
to the user question, found by similarity search. The MaterialsKG information holds the rows \
returned by a Cypher query against the materials knowledge graph. Use both; when they differ, \
present each with its source.";

/// A prompt in Task / Instruction / Example / Context / Note form, with an
/// optional Explanation placed just before the context.
#[derive(Debug, Clone, PartialEq)]
pub struct NoticePrompt {
    pub task: String,
    pub instruction: String,
    pub examples: Vec<String>,
    /// Named context blocks, rendered in the given order.
    pub context: Vec<(String, String)>,
    pub note: String,
    pub explanation: Option<String>,
}

impl NoticePrompt {
    pub fn render(&self) -> String {
        let mut out = format!("Task: {}\n\nInstruction: {}\n", self.task, self.instruction);
        if !self.examples.is_empty() {
            out.push_str("\nExample:\n");
            for ex in &self.examples {
                out.push_str(ex);
                out.push_str("\n\n");
            }
        }
        if let Some(exp) = &self.explanation {
            out.push_str(&format!("\nExplanation: {exp}\n"));
        }
        out.push_str("\nContext:\n");
        for (name, body) in &self.context {
            let body = if body.trim().is_empty() {
                NONE_MARKER
            } else {
                body.trim_end()
            };
            out.push_str(&format!("[{name}]\n{body}\n"));
        }
        out.push_str(&format!("\nNote: {}\n", self.note));
        out
    }

    /// One system message carrying the rendered prompt, then the question.
    pub fn messages(&self, question: &str) -> Vec<ChatMessage> {
        vec![
            ChatMessage::system(self.render()),
            ChatMessage::user(question),
        ]
    }
}

/// Body of a named context block in a rendered prompt, as produced by
/// [`NoticePrompt::render`].
pub fn context_section<'a>(rendered: &'a str, name: &str) -> Option<&'a str> {
    let header = format!("[{name}]\n");
    let start = rendered.find(&header)? + header.len();
    let rest = &rendered[start..];
    let end = [
        SCHEMA_SECTION,
        KG_SECTION,
        LITERATURE_SECTION,
        QUESTION_SECTION,
    ]
    .iter()
    .map(|s| format!("\n[{s}]\n"))
    .chain(std::iter::once("\n\nNote: ".to_string()))
    .filter_map(|m| rest.find(&m))
    .min()
    .unwrap_or(rest.len());
    Some(&rest[..end])
}

/// Stage 1: schema plus question in, Cypher out.
pub fn render_cypher_prompt(
    schema_text: &str,
    question: &str,
) -> Result<Vec<ChatMessage>, LlmError> {
    if schema_text.trim().is_empty() {
        return Err(LlmError::EmptySchema);
    }
    let prompt = NoticePrompt {
        task: CYPHER_TASK.into(),
        instruction: CYPHER_INSTRUCTION.into(),
        examples: CYPHER_EXAMPLES.iter().map(|s| s.to_string()).collect(),
        context: vec![
            (SCHEMA_SECTION.into(), schema_text.into()),
            (QUESTION_SECTION.into(), question.into()),
        ],
        note: CYPHER_NOTE.into(),
        explanation: None,
    };
    Ok(prompt.messages(question))
}

/// Stages 3-4: both retrieved sources plus the question in, cited answer out.
pub fn render_qa_prompt(
    kg_text: &str,
    literature_text: &str,
    question: &str,
    explanation: Option<&str>,
) -> Vec<ChatMessage> {
    let note = format!(
        "If literature information is provided, please include DOI in your response. \
If a matID appears in the MaterialsKG information, cite the material as {MATERIAL_URL_PREFIX}<matID>; \
otherwise show {SITE_URL} as the reference."
    );
    let prompt = NoticePrompt {
        task: QA_TASK.into(),
        instruction: QA_INSTRUCTION.into(),
        examples: Vec::new(),
        context: vec![
            (KG_SECTION.into(), kg_text.into()),
            (LITERATURE_SECTION.into(), literature_text.into()),
            (QUESTION_SECTION.into(), question.into()),
        ],
        note,
        explanation: explanation.map(str::to_string),
    };
    prompt.messages(question)
}
