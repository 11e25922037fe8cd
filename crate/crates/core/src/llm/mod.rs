//! Chat-completion backends and the NOTICE prompt templates for both stages.
//!
//! A backend is anything that turns a message list into assistant text. Two
//! implementations ship: [`RemoteBackend`] speaks a chat-completions style
//! JSON protocol over HTTP, and [`MockBackend`] answers from a script so the
//! whole pipeline can run offline.

mod config;
mod mock;
mod prompt;
mod remote;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use config::{BackendConfig, LlmConfig, MockRuleConfig};
pub use mock::{MockBackend, MockCall, MockReply, MockRule};
pub use prompt::{
    context_section, render_cypher_prompt, render_qa_prompt, NoticePrompt, KG_SECTION,
    LITERATURE_SECTION, MATERIAL_URL_PREFIX, NONE_MARKER, QUESTION_SECTION, SITE_URL,
};
pub use remote::RemoteBackend;

/// Sampling temperature for text-to-Cypher generation.
pub const STAGE1_TEMPERATURE: f64 = 0.0;
/// Default sampling temperature for answer synthesis.
pub const SYNTHESIS_TEMPERATURE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompletionParams {
    pub temperature: f64,
}

impl Default for CompletionParams {
    fn default() -> Self {
        CompletionParams {
            temperature: SYNTHESIS_TEMPERATURE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LlmError {
    #[error("request timed out")]
    Timeout,
    #[error("remote error{}: {message}", status.map(|s| format!(" (HTTP {s})")).unwrap_or_default())]
    RemoteError {
        status: Option<u16>,
        message: String,
    },
    #[error("no mock rule matches the prompt: {excerpt}")]
    NoScriptMatch { excerpt: String },
    #[error("the schema description is empty")]
    EmptySchema,
    #[error("message {0} has empty content")]
    EmptyMessage(usize),
    #[error("backend configuration: {0}")]
    Config(String),
}

/// A chat-completion provider. Implementations must be shareable across
/// threads; the server calls them from its worker pool.
pub trait ChatBackend: Send + Sync {
    fn name(&self) -> &str;

    fn complete(
        &self,
        messages: &[ChatMessage],
        params: &CompletionParams,
    ) -> Result<String, LlmError>;
}

fn check_messages(messages: &[ChatMessage]) -> Result<(), LlmError> {
    match messages.iter().position(|m| m.content.trim().is_empty()) {
        Some(i) => Err(LlmError::EmptyMessage(i)),
        None => Ok(()),
    }
}

/// Every message body joined by blank lines; what mock matchers look at.
pub fn transcript(messages: &[ChatMessage]) -> String {
    messages
        .iter()
        .map(|m| m.content.as_str())
        .collect::<Vec<_>>()
        .join("\n\n")
}
