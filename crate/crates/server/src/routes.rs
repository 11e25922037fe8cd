use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::oneshot;
use topokg_core::graph::{GraphEdge, GraphNode, GraphStats};
use topokg_core::llm::LlmError;
use topokg_core::pipeline::{ChatAnswer, ChatRequest, Citation, Flags, PipelineError};
use topokg_core::{Coupling, NodeCategory};

use crate::{AppState, ChatJob, SubmitError};

type Shared = Arc<AppState>;

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/api/chat", post(chat))
        .route("/api/session", post(new_session))
        .route("/api/history", get(history))
        .route("/api/graph/search", get(graph_search))
        .route("/api/graph/stats", get(graph_stats))
        .route("/api/analysis/heights", get(heights))
        .route("/api/questions/recommended", get(recommended))
        .route("/api/trace/{id}", get(trace))
        .route("/api/queue", get(queue))
        .route("/api/health", get(|| async { "ok" }))
        .with_state(state)
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

fn err(status: StatusCode, msg: impl Into<String>) -> ApiError {
    ApiError(status, msg.into())
}

#[derive(Debug, Deserialize)]
pub struct ChatBody {
    pub question: String,
    #[serde(default)]
    pub session_id: Option<String>,
    #[serde(default)]
    pub k: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LiteratureHit {
    pub id: u64,
    pub title: String,
    pub doi: String,
    pub question: String,
    pub answer: String,
    pub distance: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ChatResponse {
    pub answer: String,
    pub citations: Vec<Citation>,
    pub cypher: Option<String>,
    pub kg_rows: Vec<serde_json::Map<String, Value>>,
    pub literature: Vec<LiteratureHit>,
    pub trace_id: String,
    pub flags: Flags,
    pub session_id: Option<String>,
}

impl ChatResponse {
    fn new(ans: ChatAnswer, session_id: Option<String>) -> Self {
        let t = ans.trace;
        ChatResponse {
            answer: ans.text,
            citations: ans.citations,
            cypher: t.cypher,
            kg_rows: t.kg_result.map(|r| r.to_json_rows()).unwrap_or_default(),
            literature: t
                .hits
                .into_iter()
                .map(|h| LiteratureHit {
                    id: h.pair.id,
                    title: h.pair.title,
                    doi: h.pair.doi,
                    question: h.pair.question,
                    answer: h.pair.answer,
                    distance: h.distance,
                })
                .collect(),
            trace_id: t.trace_id,
            flags: t.flags,
            session_id,
        }
    }
}

async fn chat(
    State(state): State<Shared>,
    body: Result<Json<ChatBody>, JsonRejection>,
) -> Result<Json<ChatResponse>, ApiError> {
    let Json(body) = body.map_err(|e| err(StatusCode::BAD_REQUEST, e.body_text()))?;
    if body.question.trim().is_empty() {
        return Err(err(StatusCode::BAD_REQUEST, "question is empty"));
    }
    let mut request = ChatRequest::new(body.question);
    request.session_id = body.session_id.clone();
    request.trace_id = Some(uuid::Uuid::new_v4().to_string());
    if let Some(k) = body.k {
        request.k = k;
    }
    let (tx, rx) = oneshot::channel();
    state
        .submit(ChatJob { request, reply: tx })
        .map_err(|e| match e {
            SubmitError::Full => err(
                StatusCode::TOO_MANY_REQUESTS,
                "chat queue is full, retry later",
            ),
            SubmitError::Closed => err(StatusCode::SERVICE_UNAVAILABLE, "server is shutting down"),
        })?;
    let result = match tokio::time::timeout(state.job_timeout, rx).await {
        Err(_) => return Err(err(StatusCode::GATEWAY_TIMEOUT, "chat job timed out")),
        Ok(Err(_)) => {
            return Err(err(
                StatusCode::INTERNAL_SERVER_ERROR,
                "chat job was dropped",
            ))
        }
        Ok(Ok(r)) => r,
    };
    match result {
        Ok(ans) => Ok(Json(ChatResponse::new(ans, body.session_id))),
        Err(PipelineError::EmptyQuestion) => Err(err(StatusCode::BAD_REQUEST, "question is empty")),
        Err(PipelineError::LlmFailure {
            source: LlmError::Timeout,
            ..
        }) => Err(err(StatusCode::GATEWAY_TIMEOUT, "language model timed out")),
        Err(e) => Err(err(StatusCode::BAD_GATEWAY, e.to_string())),
    }
}

async fn new_session(State(state): State<Shared>) -> Json<Value> {
    Json(json!({ "session_id": state.sessions().create() }))
}

#[derive(Deserialize)]
struct HistoryQuery {
    session_id: String,
}

async fn history(
    State(state): State<Shared>,
    Query(q): Query<HistoryQuery>,
) -> Result<Json<Vec<crate::HistoryEntry>>, ApiError> {
    state
        .sessions()
        .history(&q.session_id)
        .map(Json)
        .ok_or_else(|| {
            err(
                StatusCode::NOT_FOUND,
                format!("unknown session {:?}", q.session_id),
            )
        })
}

#[derive(Deserialize)]
struct SearchQuery {
    cate: String,
    name: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Neighbor {
    pub edge_id: u32,
    #[serde(rename = "type")]
    pub etype: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Coupling>,
    /// "out" when the searched node is the edge source.
    pub direction: String,
    pub node: GraphNode,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SearchResponse {
    pub node: GraphNode,
    pub neighbors: Vec<Neighbor>,
}

fn neighbor(center: &GraphNode, edge: &GraphEdge, node: &GraphNode) -> Neighbor {
    Neighbor {
        edge_id: edge.id.0,
        etype: edge.etype.as_str().to_string(),
        value: edge.rel_value,
        direction: if edge.src == center.id { "out" } else { "in" }.to_string(),
        node: node.clone(),
    }
}

async fn graph_search(
    State(state): State<Shared>,
    Query(q): Query<SearchQuery>,
) -> Result<Json<SearchResponse>, ApiError> {
    let cate: NodeCategory = q
        .cate
        .parse()
        .map_err(|e: String| err(StatusCode::BAD_REQUEST, e))?;
    let g = state.pipeline().graph();
    let node = g.get_node(cate, &q.name).ok_or_else(|| {
        err(
            StatusCode::NOT_FOUND,
            format!("no {cate} node named {:?}", q.name),
        )
    })?;
    let neighbors = g
        .neighbors(node.id)
        .map_err(|e| err(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        .into_iter()
        .map(|(e, n)| neighbor(node, e, n))
        .collect();
    Ok(Json(SearchResponse {
        node: node.clone(),
        neighbors,
    }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StatsResponse {
    #[serde(flatten)]
    pub stats: GraphStats,
    pub total_nodes: usize,
    pub total_edges: usize,
}

async fn graph_stats(State(state): State<Shared>) -> Json<StatsResponse> {
    let g = state.pipeline().graph();
    Json(StatsResponse {
        stats: g.stats(),
        total_nodes: g.node_count(),
        total_edges: g.edge_count(),
    })
}

#[derive(Deserialize)]
struct HeightsQuery {
    #[serde(default)]
    coupling: Option<String>,
}

async fn heights(
    State(state): State<Shared>,
    Query(q): Query<HeightsQuery>,
) -> Result<Response, ApiError> {
    let coupling = match q.coupling.as_deref() {
        None => Coupling::Soc,
        Some(s) => s
            .parse()
            .map_err(|_| err(StatusCode::BAD_REQUEST, format!("unknown coupling {s:?}")))?,
    };
    let state2 = state.clone();
    let body = tokio::task::spawn_blocking(move || state2.heights_json(coupling).to_string())
        .await
        .map_err(|e| err(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(([(header::CONTENT_TYPE, "application/json")], body).into_response())
}

async fn recommended(State(state): State<Shared>) -> Json<Value> {
    Json(json!({ "questions": state.recommended }))
}

async fn trace(
    State(state): State<Shared>,
    Path(id): Path<String>,
) -> Result<Json<Value>, ApiError> {
    let t = state
        .traces()
        .get(&id)
        .ok_or_else(|| err(StatusCode::NOT_FOUND, format!("unknown trace {id:?}")))?;
    serde_json::to_value(t)
        .map(Json)
        .map_err(|e| err(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))
}

async fn queue(State(state): State<Shared>) -> Json<crate::QueueStats> {
    Json(state.queue_stats())
}
