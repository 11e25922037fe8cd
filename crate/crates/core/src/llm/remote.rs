use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{check_messages, ChatBackend, ChatMessage, CompletionParams, LlmError};

#[derive(Serialize)]
struct Request<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
}

#[derive(Deserialize)]
struct Response {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Reply,
}

#[derive(Deserialize)]
struct Reply {
    content: String,
}

/// Chat-completions client: one JSON POST per call, bearer token read from
/// an environment variable at call time.
#[derive(Debug)]
pub struct RemoteBackend {
    name: String,
    endpoint: String,
    model: String,
    api_key_env: Option<String>,
    max_retries: u32,
    backoff: Duration,
    client: reqwest::blocking::Client,
}

impl RemoteBackend {
    pub fn new(
        name: impl Into<String>,
        endpoint: impl Into<String>,
        model: impl Into<String>,
        api_key_env: Option<String>,
        timeout: Duration,
        max_retries: u32,
    ) -> Result<Self, LlmError> {
        if timeout.is_zero() {
            return Err(LlmError::Config("timeout must be positive".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| LlmError::Config(e.to_string()))?;
        Ok(RemoteBackend {
            name: name.into(),
            endpoint: endpoint.into(),
            model: model.into(),
            api_key_env,
            max_retries,
            backoff: Duration::from_millis(250),
            client,
        })
    }

    /// Base delay before the first retry; doubles on each further attempt.
    pub fn with_backoff(mut self, base: Duration) -> Self {
        self.backoff = base;
        self
    }

    fn attempt(
        &self,
        messages: &[ChatMessage],
        params: &CompletionParams,
    ) -> Result<String, Attempt> {
        let mut req = self.client.post(&self.endpoint).json(&Request {
            model: &self.model,
            messages,
            temperature: params.temperature,
        });
        if let Some(var) = &self.api_key_env {
            if let Ok(key) = std::env::var(var) {
                req = req.bearer_auth(key);
            }
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                Attempt::Transient(LlmError::Timeout)
            } else {
                Attempt::Transient(LlmError::RemoteError {
                    status: None,
                    message: e.to_string(),
                })
            }
        })?;
        let status = resp.status();
        if !status.is_success() {
            let body = resp.text().unwrap_or_default();
            let err = LlmError::RemoteError {
                status: Some(status.as_u16()),
                message: body.chars().take(300).collect(),
            };
            return if status.as_u16() == 429 || status.is_server_error() {
                Err(Attempt::Transient(err))
            } else {
                Err(Attempt::Fatal(err))
            };
        }
        let parsed: Response = resp.json().map_err(|e| {
            Attempt::Fatal(LlmError::RemoteError {
                status: Some(status.as_u16()),
                message: format!("unexpected response body: {e}"),
            })
        })?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| {
                Attempt::Fatal(LlmError::RemoteError {
                    status: Some(status.as_u16()),
                    message: "response has no choices".into(),
                })
            })
    }
}

enum Attempt {
    Transient(LlmError),
    Fatal(LlmError),
}

impl ChatBackend for RemoteBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn complete(
        &self,
        messages: &[ChatMessage],
        params: &CompletionParams,
    ) -> Result<String, LlmError> {
        check_messages(messages)?;
        let mut delay = self.backoff;
        let mut attempt = 0;
        loop {
            match self.attempt(messages, params) {
                Ok(text) => return Ok(text),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Transient(e)) if attempt >= self.max_retries => return Err(e),
                Err(Attempt::Transient(e)) => {
                    tracing::warn!(backend = %self.name, attempt, error = %e, "retrying chat completion");
                    std::thread::sleep(delay);
                    delay *= 2;
                    attempt += 1;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    use super::*;

    /// Serve canned HTTP responses, one per connection, and record the
    /// request bodies.
    fn serve(
        responses: Vec<(u16, String)>,
    ) -> (
        String,
        Arc<parking_lot::Mutex<Vec<String>>>,
        Arc<AtomicUsize>,
    ) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!(
            "http://{}/v1/chat/completions",
            listener.local_addr().unwrap()
        );
        let bodies = Arc::new(parking_lot::Mutex::new(Vec::new()));
        let hits = Arc::new(AtomicUsize::new(0));
        let (b, h) = (bodies.clone(), hits.clone());
        std::thread::spawn(move || {
            for (status, body) in responses {
                let (mut stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0;
                let mut auth = String::new();
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    let lower = line.to_ascii_lowercase();
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                    if lower.starts_with("authorization:") {
                        auth = line.trim().to_string();
                    }
                    if line == "\r\n" {
                        break;
                    }
                }
                let mut req = vec![0; len];
                reader.read_exact(&mut req).unwrap();
                b.lock()
                    .push(format!("{auth}\n{}", String::from_utf8(req).unwrap()));
                h.fetch_add(1, Ordering::SeqCst);
                let reply = format!(
                    "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(reply.as_bytes()).unwrap();
            }
        });
        (url, bodies, hits)
    }

    fn ok_body(text: &str) -> String {
        serde_json::json!({"choices": [{"message": {"role": "assistant", "content": text}}]})
            .to_string()
    }

    fn backend(url: &str, retries: u32) -> RemoteBackend {
        RemoteBackend::new(
            "r",
            url,
            "gpt-test",
            Some("TOPOKG_TEST_KEY".into()),
            Duration::from_secs(5),
            retries,
        )
        .unwrap()
        .with_backoff(Duration::from_millis(5))
    }

    #[test]
    fn request_shape_and_reply() {
        let (url, bodies, _) = serve(vec![(200, ok_body("MATCH (n) RETURN n.name"))]);
        std::env::set_var("TOPOKG_TEST_KEY", "sk-test");
        let out = backend(&url, 0)
            .complete(
                &[ChatMessage::system("s"), ChatMessage::user("u")],
                &CompletionParams { temperature: 0.0 },
            )
            .unwrap();
        assert_eq!(out, "MATCH (n) RETURN n.name");
        let seen = bodies.lock()[0].clone();
        let (auth, body) = seen.split_once('\n').unwrap();
        assert_eq!(auth.to_ascii_lowercase(), "authorization: bearer sk-test");
        let v: serde_json::Value = serde_json::from_str(body).unwrap();
        assert_eq!(v["model"], "gpt-test");
        assert_eq!(v["temperature"], 0.0);
        assert_eq!(v["messages"][0]["role"], "system");
        assert_eq!(v["messages"][1]["content"], "u");
    }

    #[test]
    fn transient_statuses_are_retried() {
        let (url, _, hits) = serve(vec![
            (503, "busy".into()),
            (429, "slow down".into()),
            (200, ok_body("done")),
        ]);
        let out =
            backend(&url, 3).complete(&[ChatMessage::user("u")], &CompletionParams::default());
        assert_eq!(out.unwrap(), "done");
        assert_eq!(hits.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn client_errors_are_not_retried() {
        let (url, _, hits) = serve(vec![(401, "bad key".into()), (200, ok_body("never"))]);
        let err =
            backend(&url, 3).complete(&[ChatMessage::user("u")], &CompletionParams::default());
        assert!(matches!(
            err,
            Err(LlmError::RemoteError {
                status: Some(401),
                ..
            })
        ));
        assert_eq!(hits.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn unreachable_endpoint_fails_after_retries() {
        let port = TcpListener::bind("127.0.0.1:0")
            .unwrap()
            .local_addr()
            .unwrap()
            .port();
        let err = backend(&format!("http://127.0.0.1:{port}/x"), 2)
            .complete(&[ChatMessage::user("u")], &CompletionParams::default());
        assert!(
            matches!(err, Err(LlmError::RemoteError { status: None, .. })),
            "{err:?}"
        );
    }

    #[test]
    fn zero_timeout_rejected() {
        assert!(RemoteBackend::new("r", "http://x", "m", None, Duration::ZERO, 0).is_err());
    }
}
