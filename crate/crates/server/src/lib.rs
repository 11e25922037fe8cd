//! HTTP API over the topokg pipeline.
//!
//! Chat requests go through a bounded [`WorkQueue`] served by worker threads;
//! graph, analytics and history reads are answered directly on the async
//! runtime, so they stay responsive while every worker is busy.

mod config;
mod queue;
mod routes;
mod sessions;

use std::future::Future;
use std::sync::{Arc, OnceLock};
use std::time::Duration;

use anyhow::Context;
use tokio::sync::oneshot;
use topokg_core::analytics::{
    default_classes, element_heights, export_periodic_table, periodic_table_json,
};
use topokg_core::graph::{build_graph, load_materials, load_snapshot, parse_materials};
use topokg_core::literature::{load_index, parse_pairs, HashingEmbedder};
use topokg_core::llm::LlmConfig;
use topokg_core::pipeline::{ChatAnswer, ChatRequest, Pipeline, PipelineError};
use topokg_core::{fixtures, Coupling, PropertyGraph, VectorIndex};

pub use config::ServerConfig;
pub use queue::{QueueStats, SubmitError, WorkQueue};
pub use routes::router;
pub use sessions::{now_ms, HistoryEntry, SessionStore, TraceStore};

pub type JobResult = Result<ChatAnswer, PipelineError>;

pub struct ChatJob {
    pub request: ChatRequest,
    pub reply: oneshot::Sender<JobResult>,
}

pub struct AppState {
    pipeline: Arc<Pipeline>,
    queue: WorkQueue<ChatJob>,
    sessions: Arc<SessionStore>,
    traces: Arc<TraceStore>,
    recommended: Vec<String>,
    job_timeout: Duration,
    sessions_file: Option<std::path::PathBuf>,
    heights: [OnceLock<String>; 2],
}

impl AppState {
    pub fn new(pipeline: Pipeline, cfg: &ServerConfig) -> anyhow::Result<Self> {
        cfg.validate()?;
        let sessions = match &cfg.sessions_file {
            Some(path) => SessionStore::load(path, cfg.session_limit)
                .with_context(|| format!("loading sessions from {}", path.display()))?,
            None => SessionStore::new(cfg.session_limit),
        };
        let sessions = Arc::new(sessions);
        let traces = Arc::new(TraceStore::new(cfg.trace_limit));
        let pipeline = Arc::new(pipeline);
        let queue = {
            let (pipeline, sessions, traces) = (pipeline.clone(), sessions.clone(), traces.clone());
            WorkQueue::start(cfg.queue_capacity, cfg.workers, move |job: ChatJob| {
                let result = pipeline.answer(&job.request);
                match &result {
                    Ok(ans) => {
                        traces.insert(ans.trace.clone());
                        if let Some(sid) = &job.request.session_id {
                            sessions.append(
                                sid,
                                HistoryEntry {
                                    question: job.request.question.clone(),
                                    answer: ans.text.clone(),
                                    citations: ans.citations.clone(),
                                    trace_id: ans.trace.trace_id.clone(),
                                    timestamp_ms: now_ms(),
                                },
                            );
                        }
                    }
                    Err(PipelineError::LlmFailure { trace, .. }) => {
                        traces.insert((**trace).clone())
                    }
                    Err(_) => {}
                }
                let _ = job.reply.send(result);
            })
        };
        Ok(AppState {
            pipeline,
            queue,
            sessions,
            traces,
            recommended: cfg.recommended_questions.clone(),
            job_timeout: Duration::from_secs_f64(cfg.job_timeout_secs),
            sessions_file: cfg.sessions_file.clone(),
            heights: [OnceLock::new(), OnceLock::new()],
        })
    }

    /// Load graph, index and backend as configured.
    pub fn from_config(cfg: &ServerConfig) -> anyhow::Result<Self> {
        let graph = load_graph(cfg)?;
        let index = load_literature(cfg)?;
        let llm_cfg = match &cfg.llm_config {
            Some(path) => LlmConfig::load(path)?,
            None => LlmConfig::default(),
        };
        let backend = llm_cfg.backend(&cfg.backend)?;
        Self::new(
            Pipeline::new(Arc::new(graph), Arc::new(index), backend),
            cfg,
        )
    }

    pub fn pipeline(&self) -> &Pipeline {
        &self.pipeline
    }

    pub fn sessions(&self) -> &SessionStore {
        &self.sessions
    }

    pub fn traces(&self) -> &TraceStore {
        &self.traces
    }

    pub fn queue_stats(&self) -> QueueStats {
        self.queue.stats()
    }

    pub fn submit(&self, job: ChatJob) -> Result<(), SubmitError> {
        self.queue.try_submit(job)
    }

    /// Element heights as periodic-table JSON, computed once per coupling.
    pub fn heights_json(&self, coupling: Coupling) -> &str {
        let slot = match coupling {
            Coupling::Soc => &self.heights[0],
            Coupling::Nsoc => &self.heights[1],
        };
        slot.get_or_init(|| heights_json(self.pipeline.graph(), coupling))
    }

    /// Drain the queue and persist sessions if a file is configured.
    pub fn shutdown(&self) -> anyhow::Result<()> {
        self.queue.shutdown();
        if let Some(path) = &self.sessions_file {
            self.sessions.save(path)?;
        }
        Ok(())
    }
}

/// Heights over the default classes, exported as periodic-table JSON.
pub fn heights_json(g: &PropertyGraph, coupling: Coupling) -> String {
    let heights =
        element_heights(g, &default_classes(), coupling).expect("default classes are valid");
    let entries = export_periodic_table(&heights).expect("graph elements are valid symbols");
    periodic_table_json(&entries)
}

fn load_graph(cfg: &ServerConfig) -> anyhow::Result<PropertyGraph> {
    if let Some(path) = &cfg.graph {
        return load_snapshot(path).with_context(|| format!("loading graph {}", path.display()));
    }
    let report = match &cfg.materials {
        Some(path) => load_materials(path)?,
        None if cfg.fixture == "replay" => parse_materials(fixtures::REPLAY_MATERIALS),
        None => parse_materials(fixtures::DEMO_MATERIALS),
    };
    Ok(build_graph(&report.records)?)
}

fn load_literature(cfg: &ServerConfig) -> anyhow::Result<VectorIndex> {
    if let Some(path) = &cfg.index {
        return load_index(path).with_context(|| format!("loading index {}", path.display()));
    }
    let text = if cfg.fixture == "replay" {
        fixtures::REPLAY_LITERATURE
    } else {
        fixtures::DEMO_LITERATURE
    };
    Ok(VectorIndex::from_pairs(
        Arc::new(HashingEmbedder::default()),
        parse_pairs(text)?,
    )?)
}

/// Serve until `shutdown` resolves, then drain jobs and save sessions.
pub async fn serve(
    state: Arc<AppState>,
    listener: tokio::net::TcpListener,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> anyhow::Result<()> {
    let app = router(state.clone());
    axum::serve(listener, app)
        .with_graceful_shutdown(shutdown)
        .await?;
    tokio::task::spawn_blocking(move || state.shutdown()).await??;
    Ok(())
}
