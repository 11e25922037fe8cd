//! Seed-and-expand extraction of question-answer pairs from a document.
//!
//! The model first lists seed questions, then answers them (round 0). Each
//! later round asks for new pairs that differ from the previous round's
//! questions. Near-duplicates are dropped by embedding cosine similarity,
//! first occurrence wins.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::literature::{cosine, Embedder, HashingEmbedder, LiteratureError, QaPair};
use crate::llm::{ChatBackend, ChatMessage, CompletionParams, LlmError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FissionConfig {
    pub seeds_per_doc: usize,
    pub rounds: usize,
    pub pairs_per_round: usize,
    /// Questions at or above this cosine similarity to a kept one are dropped.
    pub dedup_threshold: f64,
}

impl Default for FissionConfig {
    fn default() -> Self {
        FissionConfig {
            seeds_per_doc: 5,
            rounds: 2,
            pairs_per_round: 5,
            dedup_threshold: 0.95,
        }
    }
}

impl FissionConfig {
    pub fn validate(&self) -> Result<(), FissionError> {
        if self.seeds_per_doc == 0 || self.pairs_per_round == 0 {
            return Err(FissionError::Config(
                "seed and per-round counts must be positive".into(),
            ));
        }
        if !(self.dedup_threshold > 0.0 && self.dedup_threshold <= 1.0) {
            return Err(FissionError::Config(format!(
                "dedup threshold {} outside (0, 1]",
                self.dedup_threshold
            )));
        }
        Ok(())
    }

    /// Upper bound on the number of pairs a run can return.
    pub fn max_pairs(&self) -> usize {
        self.seeds_per_doc + self.rounds * self.pairs_per_round
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentText {
    pub doi: String,
    pub title: String,
    pub body: String,
}

impl DocumentText {
    /// Plain text whose first line is the doi and second the title.
    pub fn parse(text: &str) -> Result<Self, FissionError> {
        let mut lines = text.splitn(3, '\n');
        let doi = lines.next().unwrap_or("").trim().to_string();
        let title = lines.next().unwrap_or("").trim().to_string();
        let body = lines.next().unwrap_or("").trim().to_string();
        if doi.is_empty() || title.is_empty() {
            return Err(FissionError::Document(
                "missing doi or title header line".into(),
            ));
        }
        if body.is_empty() {
            return Err(FissionError::Document("document body is empty".into()));
        }
        Ok(DocumentText { doi, title, body })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FissionError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| FissionError::Document(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FissionError {
    #[error("model call failed after {} pairs: {source}", partial.len())]
    LlmFailure {
        source: LlmError,
        partial: Vec<QaPair>,
    },
    #[error("model output is not a JSON array: {raw:.120}")]
    UnparseableLlmOutput { raw: String, partial: Vec<QaPair> },
    #[error("document: {0}")]
    Document(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Embedding(#[from] LiteratureError),
}

impl FissionError {
    /// Pairs completed before the failure.
    pub fn partial(&self) -> &[QaPair] {
        match self {
            FissionError::LlmFailure { partial, .. }
            | FissionError::UnparseableLlmOutput { partial, .. } => partial,
            _ => &[],
        }
    }

    fn with_partial(self, pairs: &[QaPair]) -> Self {
        match self {
            FissionError::LlmFailure { source, .. } => FissionError::LlmFailure {
                source,
                partial: pairs.to_vec(),
            },
            FissionError::UnparseableLlmOutput { raw, .. } => FissionError::UnparseableLlmOutput {
                raw,
                partial: pairs.to_vec(),
            },
            other => other,
        }
    }
}

const TEMPERATURE: f64 = 0.2;

fn document_block(doc: &DocumentText) -> String {
    format!("Title: {}\nDOI: {}\n\n{}", doc.title, doc.doi, doc.body)
}

fn numbered(questions: &[String]) -> String {
    questions
        .iter()
        .enumerate()
        .map(|(i, q)| format!("{}. {q}", i + 1))
        .collect::<Vec<_>>()
        .join("\n")
}

/// The first `[` through the last `]`, parsed as JSON.
fn json_array<T: for<'de> Deserialize<'de>>(raw: &str) -> Option<Vec<T>> {
    if raw.trim().is_empty() {
        return Some(Vec::new());
    }
    let start = raw.find('[')?;
    let end = raw.rfind(']')?;
    if end < start {
        return None;
    }
    serde_json::from_str(&raw[start..=end]).ok()
}

/// Call the model and parse a JSON array, retrying once with a correction.
fn ask_array<T: for<'de> Deserialize<'de>>(
    llm: &dyn ChatBackend,
    mut messages: Vec<ChatMessage>,
) -> Result<Vec<T>, FissionError> {
    let params = CompletionParams {
        temperature: TEMPERATURE,
    };
    let call = |m: &[ChatMessage]| {
        llm.complete(m, &params)
            .map_err(|source| FissionError::LlmFailure {
                source,
                partial: Vec::new(),
            })
    };
    let raw = call(&messages)?;
    if let Some(v) = json_array(&raw) {
        return Ok(v);
    }
    messages.push(ChatMessage::assistant(raw));
    messages.push(ChatMessage::user(
        "That reply could not be read as a JSON array. Reply again with only the JSON array.",
    ));
    let raw = call(&messages)?;
    json_array(&raw).ok_or(FissionError::UnparseableLlmOutput {
        raw,
        partial: Vec::new(),
    })
}

#[derive(Deserialize)]
struct RawPair {
    question: String,
    answer: String,
}

/// Keeps questions whose embedding is not too close to one already kept.
struct Dedup<'e> {
    embedder: &'e dyn Embedder,
    threshold: f64,
    kept: Vec<Vec<f64>>,
}

impl<'e> Dedup<'e> {
    fn new(embedder: &'e dyn Embedder, threshold: f64) -> Self {
        Dedup {
            embedder,
            threshold,
            kept: Vec::new(),
        }
    }

    fn is_novel(&self, v: &[f64]) -> bool {
        self.kept.iter().all(|k| cosine(k, v) < self.threshold)
    }

    /// Add `q` if novel; reports whether it was added.
    fn admit(&mut self, q: &str) -> Result<bool, FissionError> {
        let v = self.embedder.embed(q)?;
        if self.is_novel(&v) {
            self.kept.push(v);
            Ok(true)
        } else {
            Ok(false)
        }
    }
}

/// Up to `seeds_per_doc` distinct, non-empty questions the document answers.
pub fn extract_seeds(
    doc: &DocumentText,
    llm: &dyn ChatBackend,
    cfg: &FissionConfig,
) -> Result<Vec<String>, FissionError> {
    let messages = vec![
        ChatMessage::system(
            "You read scientific papers on condensed matter physics and write study questions. \
Reply with a JSON array of strings and nothing else.",
        ),
        ChatMessage::user(format!(
            "List up to {} clear, non-overlapping questions that this document answers.\n\n{}",
            cfg.seeds_per_doc,
            document_block(doc)
        )),
    ];
    let raw: Vec<String> = ask_array(llm, messages)?;
    let mut seeds: Vec<String> = Vec::new();
    for q in raw {
        let q = q.trim().to_string();
        if !q.is_empty() && !seeds.contains(&q) {
            seeds.push(q);
        }
    }
    seeds.truncate(cfg.seeds_per_doc);
    Ok(seeds)
}

fn to_pairs(doc: &DocumentText, raw: Vec<RawPair>) -> Vec<QaPair> {
    raw.into_iter()
        .map(|p| QaPair {
            id: 0,
            question: p.question.trim().to_string(),
            answer: p.answer.trim().to_string(),
            title: doc.title.clone(),
            doi: doc.doi.clone(),
        })
        .filter(|p| !p.question.is_empty() && !p.answer.is_empty())
        .collect()
}

/// Round 0: answers to the seed questions.
pub fn answer_seeds(
    doc: &DocumentText,
    seeds: &[String],
    llm: &dyn ChatBackend,
) -> Result<Vec<QaPair>, FissionError> {
    if seeds.is_empty() {
        return Ok(Vec::new());
    }
    let messages = vec![
        ChatMessage::system(
            "You answer questions about a scientific paper using only its text. Reply with a JSON \
array of objects with \"question\" and \"answer\" fields and nothing else.",
        ),
        ChatMessage::user(format!(
            "Answer each of the following questions using only the document.\n\n{}\n\n{}",
            numbered(seeds),
            document_block(doc)
        )),
    ];
    let raw: Vec<RawPair> = ask_array(llm, messages)?;
    let mut pairs = to_pairs(doc, raw);
    pairs.truncate(seeds.len());
    Ok(pairs)
}

/// New pairs seeded by `seeds`, none too similar to a seed or to each other.
pub fn fission_round(
    doc: &DocumentText,
    seeds: &[String],
    llm: &dyn ChatBackend,
    cfg: &FissionConfig,
) -> Result<Vec<QaPair>, FissionError> {
    let embedder = HashingEmbedder::default();
    fission_round_with(doc, seeds, llm, cfg, &embedder)
}

fn fission_round_with(
    doc: &DocumentText,
    seeds: &[String],
    llm: &dyn ChatBackend,
    cfg: &FissionConfig,
    embedder: &dyn Embedder,
) -> Result<Vec<QaPair>, FissionError> {
    let messages = vec![
        ChatMessage::system(
            "You write question-answer pairs about a scientific paper. Reply with a JSON array of \
objects with \"question\" and \"answer\" fields and nothing else.",
        ),
        ChatMessage::user(format!(
            "Write {} new question-answer pairs about the document that differ from these seed \
questions:\n{}\n\n{}",
            cfg.pairs_per_round,
            numbered(seeds),
            document_block(doc)
        )),
    ];
    let raw: Vec<RawPair> = ask_array(llm, messages)?;
    let mut dedup = Dedup::new(embedder, cfg.dedup_threshold);
    for s in seeds {
        dedup.admit(s)?;
    }
    let mut out = Vec::new();
    for p in to_pairs(doc, raw) {
        if out.len() == cfg.pairs_per_round {
            break;
        }
        if dedup.admit(&p.question)? {
            out.push(p);
        }
    }
    Ok(out)
}

/// Seeds, their answers, then `rounds` rounds of expansion, deduplicated
/// across the whole run. Pair ids count up from zero.
pub fn run_fission(
    doc: &DocumentText,
    llm: &dyn ChatBackend,
    cfg: &FissionConfig,
) -> Result<Vec<QaPair>, FissionError> {
    cfg.validate()?;
    let embedder = HashingEmbedder::default();
    let mut kept: Vec<QaPair> = Vec::new();
    let mut global = Dedup::new(&embedder, cfg.dedup_threshold);
    let mut keep =
        |batch: Vec<QaPair>, kept: &mut Vec<QaPair>| -> Result<Vec<String>, FissionError> {
            let mut questions = Vec::new();
            for mut p in batch {
                if global.admit(&p.question)? {
                    p.id = kept.len() as u64;
                    questions.push(p.question.clone());
                    kept.push(p);
                }
            }
            Ok(questions)
        };

    let seeds = extract_seeds(doc, llm, cfg)?;
    let answered = answer_seeds(doc, &seeds, llm).map_err(|e| e.with_partial(&kept))?;
    keep(answered, &mut kept)?;
    let mut current = seeds;
    for _ in 0..cfg.rounds {
        if current.is_empty() {
            break;
        }
        let batch = fission_round_with(doc, &current, llm, cfg, &embedder)
            .map_err(|e| e.with_partial(&kept))?;
        current = keep(batch, &mut kept)?;
    }
    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::llm::{MockBackend, MockReply, MockRule};

    fn doc() -> DocumentText {
        DocumentText::parse(fixtures::SAMPLE_DOC).unwrap()
    }

    fn strings(xs: &[&str]) -> String {
        serde_json::to_string(xs).unwrap()
    }

    fn pairs(qs: &[&str]) -> String {
        let v: Vec<_> = qs
            .iter()
            .map(|q| serde_json::json!({"question": q, "answer": format!("Answer to {q}")}))
            .collect();
        serde_json::to_string(&v).unwrap()
    }

    const SEEDS: [&str; 5] = [
        "What is the bulk band gap of Bi2Se3?",
        "How many Dirac cones appear on the surface?",
        "Which symmetry protects the surface states?",
        "What crystal structure does the compound adopt?",
        "How was the electronic structure measured?",
    ];
    const ROUND1: [&str; 5] = [
        "Why does strain shift the Fermi level?",
        "Which dopant suppresses bulk carriers?",
        "What film thickness opens a hybridization gap?",
        "How does magnetic doping gap the cone?",
        "Which transport signature indicates weak antilocalization?",
    ];
    const ROUND2: [&str; 5] = [
        "What temperature range was studied?",
        "Which substrate was used for growth?",
        "How large is the spin texture winding?",
        "Where does the Dirac point sit relative to the valence band?",
        "Which spectroscopy resolved the edge modes?",
    ];

    fn scripted() -> MockBackend {
        MockBackend::new(
            "fission",
            vec![
                MockRule::when("List up to", MockReply::Text(strings(&SEEDS))),
                MockRule::when("Answer each", MockReply::Text(pairs(&SEEDS))),
                MockRule::when(
                    "1. What is the bulk band gap",
                    MockReply::Text(pairs(&ROUND1)),
                ),
                MockRule::when("1. Why does strain", MockReply::Text(pairs(&ROUND2))),
            ],
        )
    }

    #[test]
    fn document_header() {
        let d = doc();
        assert_eq!(d.doi, "demo-0010");
        assert!(!d.title.is_empty() && !d.body.is_empty());
        assert!(DocumentText::parse("doi\ntitle\n   ").is_err());
        assert!(DocumentText::parse("").is_err());
    }

    #[test]
    fn seeds_pass_through() {
        let m = MockBackend::fixed(strings(&SEEDS));
        assert_eq!(
            extract_seeds(&doc(), &m, &FissionConfig::default()).unwrap(),
            SEEDS
        );
    }

    #[test]
    fn exact_duplicate_seeds_removed() {
        let m = MockBackend::fixed(strings(&[SEEDS[0], SEEDS[1], SEEDS[0], SEEDS[2], SEEDS[1]]));
        let got = extract_seeds(&doc(), &m, &FissionConfig::default()).unwrap();
        assert_eq!(got, &SEEDS[..3]);
    }

    #[test]
    fn seed_count_is_bounded() {
        let many: Vec<String> = (0..9)
            .map(|i| format!("Question number {i} about gaps?"))
            .collect();
        let m = MockBackend::fixed(serde_json::to_string(&many).unwrap());
        let cfg = FissionConfig {
            seeds_per_doc: 4,
            ..Default::default()
        };
        assert_eq!(extract_seeds(&doc(), &m, &cfg).unwrap().len(), 4);
    }

    #[test]
    fn round_carries_doc_metadata() {
        let m = MockBackend::fixed(pairs(&ROUND1));
        let seeds: Vec<String> = SEEDS.iter().map(|s| s.to_string()).collect();
        let got = fission_round(&doc(), &seeds, &m, &FissionConfig::default()).unwrap();
        assert_eq!(got.len(), 5);
        assert!(got
            .iter()
            .all(|p| p.doi == "demo-0010" && p.title == doc().title));
    }

    #[test]
    fn near_copy_of_seed_dropped() {
        let seed = SEEDS[0].to_string();
        let near = "What is the bulk band gap of Bi2Se3 ?";
        let e = HashingEmbedder::default();
        let sim = cosine(&e.embed(&seed).unwrap(), &e.embed(near).unwrap());
        assert!(sim >= 0.99, "{sim}");
        let m = MockBackend::fixed(pairs(&[near, ROUND1[0]]));
        let got = fission_round(&doc(), &[seed], &m, &FissionConfig::default()).unwrap();
        let qs: Vec<_> = got.iter().map(|p| p.question.as_str()).collect();
        assert_eq!(qs, [ROUND1[0]]);
    }

    #[test]
    fn empty_output_is_empty_round() {
        let m = MockBackend::fixed("  ");
        let got = fission_round(&doc(), &["q?".into()], &m, &FissionConfig::default()).unwrap();
        assert!(got.is_empty());
    }

    #[test]
    fn unparseable_output_gets_one_retry() {
        let m = MockBackend::new(
            "m",
            vec![
                MockRule::any(MockReply::Text("Sure! Here you go: none".into())).times(1),
                MockRule::any(MockReply::Text(strings(&SEEDS[..2]))),
            ],
        );
        assert_eq!(
            extract_seeds(&doc(), &m, &FissionConfig::default()).unwrap(),
            &SEEDS[..2]
        );
        assert_eq!(m.call_count(), 2);

        let bad = MockBackend::fixed("no json here");
        let err = extract_seeds(&doc(), &bad, &FissionConfig::default()).unwrap_err();
        assert!(matches!(err, FissionError::UnparseableLlmOutput { .. }));
        assert_eq!(bad.call_count(), 2);
    }

    #[test]
    fn full_run_yields_fifteen() {
        let m = scripted();
        let got = run_fission(&doc(), &m, &FissionConfig::default()).unwrap();
        assert_eq!(got.len(), 15);
        assert_eq!(
            got.iter().map(|p| p.id).collect::<Vec<_>>(),
            (0..15).collect::<Vec<_>>()
        );
        assert_eq!(m.call_count(), 4);
    }

    #[test]
    fn zero_rounds_keeps_seed_answers() {
        let cfg = FissionConfig {
            rounds: 0,
            ..Default::default()
        };
        let got = run_fission(&doc(), &scripted(), &cfg).unwrap();
        assert_eq!(got.len(), 5);
        assert_eq!(got[0].question, SEEDS[0]);
    }

    #[test]
    fn failure_keeps_partial_results() {
        let m = MockBackend::new(
            "m",
            vec![
                MockRule::when("List up to", MockReply::Text(strings(&SEEDS))),
                MockRule::when("Answer each", MockReply::Text(pairs(&SEEDS))),
                MockRule::any(MockReply::Fail(LlmError::Timeout)),
            ],
        );
        let err = run_fission(&doc(), &m, &FissionConfig::default()).unwrap_err();
        assert!(matches!(
            err,
            FissionError::LlmFailure {
                source: LlmError::Timeout,
                ..
            }
        ));
        assert_eq!(err.partial().len(), 5);
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = FissionConfig {
            dedup_threshold: 1.5,
            ..Default::default()
        };
        assert!(run_fission(&doc(), &scripted(), &cfg).is_err());
    }
}
