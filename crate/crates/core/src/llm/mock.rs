use std::time::Duration;

use parking_lot::Mutex;

use super::prompt::{context_section, KG_SECTION, LITERATURE_SECTION, NONE_MARKER};
use super::{check_messages, transcript, ChatBackend, ChatMessage, CompletionParams, LlmError};

#[derive(Debug, Clone, PartialEq)]
pub enum MockReply {
    Text(String),
    Fail(LlmError),
    /// Summarize the knowledge-graph and literature blocks of a synthesis
    /// prompt, so answers track whatever the earlier stages retrieved.
    Digest,
}

/// Fires when every `contains` substring occurs in the prompt transcript.
/// An empty list matches anything. `times` limits how often the rule can
/// fire before later rules get a turn.
#[derive(Debug, Clone, PartialEq)]
pub struct MockRule {
    pub contains: Vec<String>,
    pub reply: MockReply,
    pub times: Option<usize>,
}

impl MockRule {
    pub fn any(reply: MockReply) -> Self {
        MockRule {
            contains: Vec::new(),
            reply,
            times: None,
        }
    }

    pub fn when(needle: impl Into<String>, reply: MockReply) -> Self {
        MockRule {
            contains: vec![needle.into()],
            reply,
            times: None,
        }
    }

    pub fn times(mut self, n: usize) -> Self {
        self.times = Some(n);
        self
    }

    fn matches(&self, text: &str) -> bool {
        self.contains.iter().all(|c| text.contains(c.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MockCall {
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub reply: Result<String, LlmError>,
}

#[derive(Debug)]
struct State {
    /// Rules paired with their remaining budget.
    rules: Vec<(MockRule, Option<usize>)>,
    log: Vec<MockCall>,
}

/// Scripted backend: the first rule that matches and still has budget
/// answers. Every call is logged.
#[derive(Debug)]
pub struct MockBackend {
    name: String,
    latency: Option<Duration>,
    state: Mutex<State>,
}

impl MockBackend {
    pub fn new(name: impl Into<String>, rules: Vec<MockRule>) -> Self {
        MockBackend {
            name: name.into(),
            latency: None,
            state: Mutex::new(State {
                rules: rules
                    .into_iter()
                    .map(|r| {
                        let budget = r.times;
                        (r, budget)
                    })
                    .collect(),
                log: Vec::new(),
            }),
        }
    }

    /// Backend that always answers `text`.
    pub fn fixed(text: impl Into<String>) -> Self {
        MockBackend::new("mock", vec![MockRule::any(MockReply::Text(text.into()))])
    }

    /// Sleep this long before each reply.
    pub fn with_latency(mut self, latency: Duration) -> Self {
        self.latency = Some(latency);
        self
    }

    pub fn calls(&self) -> Vec<MockCall> {
        self.state.lock().log.clone()
    }

    pub fn call_count(&self) -> usize {
        self.state.lock().log.len()
    }

    pub fn clear_log(&self) {
        self.state.lock().log.clear();
    }

    fn reply_for(&self, text: &str) -> Result<String, LlmError> {
        let mut state = self.state.lock();
        let Some((rule, budget)) = state
            .rules
            .iter_mut()
            .find(|(r, budget)| budget.map_or(true, |b| b > 0) && r.matches(text))
        else {
            let excerpt: String = text
                .chars()
                .rev()
                .take(120)
                .collect::<Vec<_>>()
                .into_iter()
                .rev()
                .collect();
            return Err(LlmError::NoScriptMatch { excerpt });
        };
        if let Some(b) = budget {
            *b -= 1;
        }
        match &rule.reply {
            MockReply::Text(t) => Ok(t.clone()),
            MockReply::Fail(e) => Err(e.clone()),
            MockReply::Digest => Ok(digest(text)),
        }
    }
}

fn digest(prompt: &str) -> String {
    let section = |name| {
        context_section(prompt, name)
            .map(str::trim)
            .filter(|s| !s.is_empty() && *s != NONE_MARKER)
    };
    let mut parts = Vec::new();
    if let Some(kg) = section(KG_SECTION) {
        parts.push(format!("From the MaterialsKG information: {kg}"));
    }
    if let Some(lit) = section(LITERATURE_SECTION) {
        parts.push(format!("From the literature information:\n{lit}"));
    }
    if parts.is_empty() {
        "Neither source returned anything relevant to this question.".to_string()
    } else {
        parts.join("\n\n")
    }
}

impl ChatBackend for MockBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn complete(
        &self,
        messages: &[ChatMessage],
        params: &CompletionParams,
    ) -> Result<String, LlmError> {
        check_messages(messages)?;
        if let Some(d) = self.latency {
            std::thread::sleep(d);
        }
        let reply = self.reply_for(&transcript(messages));
        self.state.lock().log.push(MockCall {
            messages: messages.to_vec(),
            temperature: params.temperature,
            reply: reply.clone(),
        });
        reply
    }
}
