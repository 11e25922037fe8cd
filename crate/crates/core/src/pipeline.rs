//! Question answering over the knowledge graph and the literature index.
//!
//! 1. The question is turned into Cypher by the query model.
//! 2. The query runs against the graph while the index returns the nearest
//!    literature pairs.
//! 3. Both sources go to the answer model, and citations for every retrieved
//!    doi and material id are appended to its reply.
//!
//! Every stage can come back empty. The answer is still produced and the
//! trace records which source was missing.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cypher::{self, format_results, ResultTable};
use crate::fixtures;
use crate::graph::{AttrValue, PropertyGraph};
use crate::literature::{RetrievalHit, VectorIndex, DEFAULT_K};
use crate::llm::{
    render_cypher_prompt, render_qa_prompt, ChatBackend, ChatMessage, CompletionParams, LlmError,
    MockBackend, MockReply, MockRule, MATERIAL_URL_PREFIX, SITE_URL, STAGE1_TEMPERATURE,
    SYNTHESIS_TEMPERATURE,
};

/// Rows of query output shown to the answer model.
pub const DEFAULT_MAX_ROWS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub question: String,
    #[serde(default)]
    pub session_id: Option<String>,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_max_rows")]
    pub max_rows: usize,
    /// Identifier stamped on the trace; derived from the question if unset.
    #[serde(default)]
    pub trace_id: Option<String>,
}

fn default_k() -> usize {
    DEFAULT_K
}

fn default_max_rows() -> usize {
    DEFAULT_MAX_ROWS
}

impl ChatRequest {
    pub fn new(question: impl Into<String>) -> Self {
        ChatRequest {
            question: question.into(),
            session_id: None,
            k: DEFAULT_K,
            max_rows: DEFAULT_MAX_ROWS,
            trace_id: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CitationKind {
    Doi,
    Material,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Citation {
    pub kind: CitationKind,
    pub value: String,
    pub url: Option<String>,
}

impl Citation {
    fn line(&self) -> String {
        match (self.kind, &self.url) {
            (CitationKind::Doi, _) => format!("DOI: {}", self.value),
            (CitationKind::Material, Some(url)) if *url == self.value => url.clone(),
            (CitationKind::Material, Some(url)) => format!("{}: {url}", self.value),
            (CitationKind::Material, None) => self.value.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    /// No knowledge-graph rows reached the answer prompt.
    pub kg_empty: bool,
    /// No usable Cypher statement was produced.
    pub cypher_failed: bool,
    pub literature_empty: bool,
    /// Literature was supplied but the model's reply cites none of its dois.
    pub doi_missing: bool,
}

/// Wall time per stage, in milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub text2cypher_ms: f64,
    pub kg_query_ms: f64,
    pub retrieval_ms: f64,
    pub synthesis_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub stage: String,
    pub messages: Vec<ChatMessage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineTrace {
    pub trace_id: String,
    pub question: String,
    pub cypher: Option<String>,
    /// Model outputs that failed sanitation or parsing, in order.
    pub rejected_cypher: Vec<String>,
    pub cypher_error: Option<String>,
    pub kg_result: Option<ResultTable>,
    pub kg_text: String,
    pub hits: Vec<RetrievalHit>,
    pub literature_text: String,
    pub prompts: Vec<PromptRecord>,
    /// The answer model's reply before citations were appended.
    pub model_answer: Option<String>,
    pub answer: Option<String>,
    pub citations: Vec<Citation>,
    pub flags: Flags,
    pub timings: StageTimings,
    pub error: Option<String>,
}

impl PipelineTrace {
    pub fn new(trace_id: String, question: &str) -> Self {
        PipelineTrace {
            trace_id,
            question: question.to_string(),
            cypher: None,
            rejected_cypher: Vec::new(),
            cypher_error: None,
            kg_result: None,
            kg_text: String::new(),
            hits: Vec::new(),
            literature_text: String::new(),
            prompts: Vec::new(),
            model_answer: None,
            answer: None,
            citations: Vec::new(),
            flags: Flags::default(),
            timings: StageTimings::default(),
            error: None,
        }
    }

    /// The trace with timings zeroed, for run-to-run comparison.
    pub fn without_timings(&self) -> Self {
        PipelineTrace {
            timings: StageTimings::default(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatAnswer {
    pub text: String,
    pub citations: Vec<Citation>,
    pub trace: PipelineTrace,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("question is empty")]
    EmptyQuestion,
    #[error("could not obtain a Cypher statement: {error}")]
    CypherGenerationFailed { raw: String, error: String },
    #[error("answer synthesis failed: {source}")]
    LlmFailure {
        source: LlmError,
        trace: Box<PipelineTrace>,
    },
}

/// Cut a model reply down to one Cypher statement: the body of the first
/// code fence if any, from the first MATCH keyword up to a semicolon or
/// blank line.
pub fn sanitize_cypher(raw: &str) -> Result<String, String> {
    let mut text = raw;
    if let Some(open) = text.find("```") {
        let after = &text[open + 3..];
        let body_start = after.find('\n').map_or(after.len(), |i| i + 1);
        let body = &after[body_start..];
        text = &body[..body.find("```").unwrap_or(body.len())];
    }
    let start =
        find_match_keyword(text).ok_or_else(|| "no MATCH clause in model output".to_string())?;
    let text = &text[start..];
    let mut end = text.len();
    let mut quote: Option<char> = None;
    let mut prev_newline = false;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        match quote {
            Some(_) if c == '\\' => {
                chars.next();
            }
            Some(q) if c == q => quote = None,
            Some(_) => {}
            None if c == '\'' || c == '"' || c == '`' => quote = Some(c),
            None if c == ';' => {
                end = i;
                break;
            }
            None if c == '\n' && prev_newline => {
                end = i;
                break;
            }
            None => {}
        }
        if c == '\n' {
            prev_newline = true;
        } else if !c.is_whitespace() {
            prev_newline = false;
        }
    }
    let stmt = text[..end].trim();
    if stmt.is_empty() {
        return Err("empty statement".into());
    }
    Ok(stmt.to_string())
}

fn find_match_keyword(text: &str) -> Option<usize> {
    let upper = text.to_ascii_uppercase();
    let bytes = upper.as_bytes();
    let mut from = 0;
    while let Some(off) = upper[from..].find("MATCH") {
        let i = from + off;
        let before_ok = i == 0 || !(bytes[i - 1].is_ascii_alphanumeric() || bytes[i - 1] == b'_');
        let after = bytes.get(i + 5).copied();
        let after_ok = after.map_or(true, |b| !(b.is_ascii_alphanumeric() || b == b'_'));
        if before_ok && after_ok {
            return Some(i);
        }
        from = i + 5;
    }
    None
}

fn check_candidate(raw: &str) -> Result<String, String> {
    let stmt = sanitize_cypher(raw)?;
    cypher::parse(&stmt).map_err(|e| e.to_string())?;
    Ok(stmt)
}

struct Stage1 {
    result: Result<String, PipelineError>,
    rejected: Vec<String>,
    prompts: Vec<Vec<ChatMessage>>,
}

fn text2cypher(question: &str, schema_text: &str, llm: &dyn ChatBackend) -> Stage1 {
    let mut out = Stage1 {
        result: Err(PipelineError::CypherGenerationFailed {
            raw: String::new(),
            error: String::new(),
        }),
        rejected: Vec::new(),
        prompts: Vec::new(),
    };
    let mut messages = match render_cypher_prompt(schema_text, question) {
        Ok(m) => m,
        Err(e) => {
            out.result = Err(PipelineError::CypherGenerationFailed {
                raw: String::new(),
                error: e.to_string(),
            });
            return out;
        }
    };
    let params = CompletionParams {
        temperature: STAGE1_TEMPERATURE,
    };
    for attempt in 0..2 {
        out.prompts.push(messages.clone());
        let raw = match llm.complete(&messages, &params) {
            Ok(raw) => raw,
            Err(e) => {
                out.result = Err(PipelineError::CypherGenerationFailed {
                    raw: String::new(),
                    error: e.to_string(),
                });
                return out;
            }
        };
        match check_candidate(&raw) {
            Ok(stmt) => {
                out.result = Ok(stmt);
                return out;
            }
            Err(error) => {
                out.rejected.push(raw.clone());
                out.result = Err(PipelineError::CypherGenerationFailed {
                    raw: raw.clone(),
                    error: error.clone(),
                });
                if attempt == 0 {
                    messages.push(ChatMessage::assistant(raw));
                    messages.push(ChatMessage::user(format!(
                        "The statement was rejected: {error}. Reply with one corrected Cypher \
statement that starts with MATCH and nothing else."
                    )));
                }
            }
        }
    }
    out
}

/// Ask the model for Cypher, with one corrective retry on a bad reply.
pub fn stage1_text2cypher(
    question: &str,
    schema_text: &str,
    llm: &dyn ChatBackend,
) -> Result<String, PipelineError> {
    text2cypher(question, schema_text, llm).result
}

pub fn stage2a_kg_query(
    graph: &PropertyGraph,
    cypher_text: &str,
) -> Result<ResultTable, cypher::CypherError> {
    cypher::query(graph, cypher_text)
}

pub fn stage2b_retrieve(index: &VectorIndex, question: &str, k: usize) -> Vec<RetrievalHit> {
    index.search(question, k).unwrap_or_default()
}

/// Numbered literature snippets for the answer prompt.
pub fn format_hits(hits: &[RetrievalHit]) -> String {
    hits.iter()
        .enumerate()
        .map(|(i, h)| {
            format!(
                "{}. {} (DOI: {})\nQ: {}\nA: {}",
                i + 1,
                h.pair.title,
                h.pair.doi,
                h.pair.question,
                h.pair.answer
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// One citation per distinct doi among the hits, then one per distinct
/// material id in any `*matID` column. Rows without any material id earn a
/// single citation of the database site.
pub fn enrich_citations(table: &ResultTable, hits: &[RetrievalHit]) -> Vec<Citation> {
    let mut out: Vec<Citation> = Vec::new();
    for h in hits {
        if !out.iter().any(|c| c.value == h.pair.doi) {
            out.push(Citation {
                kind: CitationKind::Doi,
                value: h.pair.doi.clone(),
                url: None,
            });
        }
    }
    let id_cols: Vec<usize> = table
        .columns
        .iter()
        .enumerate()
        .filter(|(_, c)| c.ends_with("matID"))
        .map(|(i, _)| i)
        .collect();
    let mut found_material = false;
    for row in &table.rows {
        for &i in &id_cols {
            let Some(AttrValue::Text(id)) = row.get(i) else {
                continue;
            };
            if id.trim().is_empty() {
                continue;
            }
            found_material = true;
            let url = format!("{MATERIAL_URL_PREFIX}{id}");
            if !out.iter().any(|c| c.url.as_deref() == Some(url.as_str())) {
                out.push(Citation {
                    kind: CitationKind::Material,
                    value: id.clone(),
                    url: Some(url),
                });
            }
        }
    }
    if !table.rows.is_empty() && !found_material {
        out.push(Citation {
            kind: CitationKind::Material,
            value: SITE_URL.to_string(),
            url: Some(SITE_URL.to_string()),
        });
    }
    out
}

const FIELD_GLOSSARY: &[(&str, &str)] = &[
    ("matID", "material identifier in the materials database"),
    (
        "soc_dos_gap",
        "density-of-states gap with spin-orbit coupling, eV",
    ),
    (
        "nsoc_dos_gap",
        "density-of-states gap without spin-orbit coupling, eV",
    ),
    ("indirect_gap", "indirect band gap, eV"),
    ("fermi_energy", "Fermi energy, eV"),
    ("density", "mass density, g/cm^3"),
    ("proto", "structure prototype"),
    ("lines", "phonon nodal lines"),
    ("ring_pts", "phonon nodal ring points"),
    ("weyl_pts", "phonon Weyl points"),
    (
        "value",
        "SOC or NSOC: whether spin-orbit coupling was included",
    ),
];

/// Meanings of the returned columns that have a known field name.
fn explain_columns(table: &ResultTable) -> Option<String> {
    let lines: Vec<String> = FIELD_GLOSSARY
        .iter()
        .filter(|(key, _)| {
            table
                .columns
                .iter()
                .any(|c| c == key || c.ends_with(&format!(".{key}")))
        })
        .map(|(key, meaning)| format!("{key}: {meaning}"))
        .collect();
    (!lines.is_empty()).then(|| lines.join("; "))
}

fn millis(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn default_trace_id(req: &ChatRequest) -> String {
    use std::hash::Hasher;
    let mut h = fnv::FnvHasher::default();
    h.write(req.session_id.as_deref().unwrap_or("").as_bytes());
    h.write(&[0]);
    h.write(req.question.as_bytes());
    format!("trace-{:016x}", h.finish())
}

/// Graph, index and models wired together.
#[derive(Clone)]
pub struct Pipeline {
    graph: Arc<PropertyGraph>,
    index: Arc<VectorIndex>,
    cypher_llm: Arc<dyn ChatBackend>,
    qa_llm: Arc<dyn ChatBackend>,
    schema: String,
    synthesis_temperature: f64,
}

impl std::fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Pipeline")
            .field("nodes", &self.graph.node_count())
            .field("pairs", &self.index.len())
            .field("cypher_llm", &self.cypher_llm.name())
            .field("qa_llm", &self.qa_llm.name())
            .finish()
    }
}

impl Pipeline {
    /// One backend for both stages.
    pub fn new(
        graph: Arc<PropertyGraph>,
        index: Arc<VectorIndex>,
        llm: Arc<dyn ChatBackend>,
    ) -> Self {
        let schema = graph.schema_text();
        Pipeline {
            graph,
            index,
            cypher_llm: llm.clone(),
            qa_llm: llm,
            schema,
            synthesis_temperature: SYNTHESIS_TEMPERATURE,
        }
    }

    /// Use a different model for answer synthesis.
    pub fn with_qa_backend(mut self, llm: Arc<dyn ChatBackend>) -> Self {
        self.qa_llm = llm;
        self
    }

    pub fn with_synthesis_temperature(mut self, t: f64) -> Self {
        self.synthesis_temperature = t;
        self
    }

    pub fn graph(&self) -> &Arc<PropertyGraph> {
        &self.graph
    }

    pub fn index(&self) -> &Arc<VectorIndex> {
        &self.index
    }

    pub fn backend_name(&self) -> &str {
        self.qa_llm.name()
    }

    pub fn answer(&self, req: &ChatRequest) -> Result<ChatAnswer, PipelineError> {
        let question = req.question.trim();
        if question.is_empty() {
            return Err(PipelineError::EmptyQuestion);
        }
        let trace_id = req
            .trace_id
            .clone()
            .unwrap_or_else(|| default_trace_id(req));
        let mut trace = PipelineTrace::new(trace_id, question);

        let t = Instant::now();
        let stage1 = text2cypher(question, &self.schema, self.cypher_llm.as_ref());
        trace.timings.text2cypher_ms = millis(t);
        trace.rejected_cypher = stage1.rejected;
        trace
            .prompts
            .extend(stage1.prompts.into_iter().map(|messages| PromptRecord {
                stage: "text2cypher".into(),
                messages,
            }));

        let t = Instant::now();
        let mut table = ResultTable::default();
        match stage1.result {
            Ok(stmt) => {
                match stage2a_kg_query(&self.graph, &stmt) {
                    Ok(result) => table = result,
                    Err(e) => {
                        trace.flags.cypher_failed = true;
                        trace.cypher_error = Some(e.to_string());
                    }
                }
                trace.cypher = Some(stmt);
            }
            Err(e) => {
                trace.flags.cypher_failed = true;
                trace.cypher_error = Some(match e {
                    PipelineError::CypherGenerationFailed { error, .. } => error,
                    other => other.to_string(),
                });
            }
        }
        trace.flags.kg_empty = table.is_empty();
        trace.kg_text = if table.is_empty() {
            String::new()
        } else {
            format_results(&table, req.max_rows)
        };
        trace.timings.kg_query_ms = millis(t);

        let t = Instant::now();
        let hits = stage2b_retrieve(&self.index, question, req.k);
        trace.flags.literature_empty = hits.is_empty();
        trace.literature_text = format_hits(&hits);
        trace.timings.retrieval_ms = millis(t);

        let t = Instant::now();
        let explanation = explain_columns(&table);
        let messages = render_qa_prompt(
            &trace.kg_text,
            &trace.literature_text,
            question,
            explanation.as_deref(),
        );
        trace.prompts.push(PromptRecord {
            stage: "synthesis".into(),
            messages: messages.clone(),
        });
        let citations = enrich_citations(&table, &hits);
        trace.kg_result = Some(table);
        trace.hits = hits;
        trace.citations = citations.clone();
        let params = CompletionParams {
            temperature: self.synthesis_temperature,
        };
        let reply = self.qa_llm.complete(&messages, &params);
        trace.timings.synthesis_ms = millis(t);
        let model_text = match reply {
            Ok(text) => text,
            Err(source) => {
                trace.error = Some(source.to_string());
                return Err(PipelineError::LlmFailure {
                    source,
                    trace: Box::new(trace),
                });
            }
        };
        trace.flags.doi_missing =
            !trace.hits.is_empty() && !trace.hits.iter().any(|h| model_text.contains(&h.pair.doi));
        let mut text = model_text.trim_end().to_string();
        if !citations.is_empty() {
            text.push_str("\n\nReferences:\n");
            let lines: Vec<String> = citations
                .iter()
                .map(|c| format!("- {}", c.line()))
                .collect();
            text.push_str(&lines.join("\n"));
        }
        trace.model_answer = Some(model_text);
        trace.answer = Some(text.clone());
        Ok(ChatAnswer {
            text,
            citations,
            trace,
        })
    }
}

/// Scripted backend for the bundled replay question: the fixed Cypher for
/// stage 1 and a digest of the retrieved sources for synthesis.
pub fn replay_backend() -> MockBackend {
    MockBackend::new(
        "replay",
        vec![
            MockRule {
                contains: vec![
                    "Generate Cypher statement".into(),
                    fixtures::REPLAY_QUESTION.into(),
                ],
                reply: MockReply::Text(fixtures::REPLAY_CYPHER.into()),
                times: None,
            },
            MockRule::when("analyze and synthesize", MockReply::Digest),
        ],
    )
}
