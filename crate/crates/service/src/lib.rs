//! HTTP JSON API over the pattern language: catalog and graph reads,
//! synthesis, and asynchronous simulation jobs.
//!
//! Catalog and graph are snapshots taken at startup; every read endpoint
//! serves bytes rendered once, so repeated calls are byte-identical.

pub mod jobs;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;
use tokio::sync::Semaphore;

use rpl_core::catalog::{Capability, FaultModelClass, PatternClass};
use rpl_core::simulator::{run_simulation_in, sweep_in, SweepGrid};
use rpl_core::{
    export_dot, synthesize, to_canonical_json, Catalog, PatternGraph, SimConfig, SynthesisError,
};

pub use jobs::{JobKind, JobRecord, JobStatus, JobStore, Lookup, DEFAULT_RETENTION};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("cannot open job journal: {0}")]
    Journal(std::io::Error),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },
    #[error("server error: {0}")]
    Serve(std::io::Error),
}

pub struct ServiceConfig {
    pub catalog: Catalog,
    pub graph: PatternGraph,
    /// Concurrent simulation jobs; defaults to the available parallelism.
    pub workers: Option<usize>,
    pub journal: Option<PathBuf>,
    pub retention: usize,
}

impl ServiceConfig {
    pub fn new(catalog: Catalog, graph: PatternGraph) -> Self {
        Self {
            catalog,
            graph,
            workers: None,
            journal: None,
            retention: DEFAULT_RETENTION,
        }
    }
}

#[derive(Serialize)]
struct PatternSummary<'a> {
    id: &'a str,
    name: &'a str,
    class: PatternClass,
    parents: &'a [String],
    handles: Vec<FaultModelClass>,
    capabilities: Vec<Capability>,
    complexity: u8,
}

/// Body of a sweep job request.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRequest {
    pub config: SimConfig,
    #[serde(default)]
    pub grid: SweepGrid,
}

struct Snapshot {
    catalog: Catalog,
    graph: PatternGraph,
    patterns_json: String,
    pattern_json: std::collections::BTreeMap<String, String>,
    graph_json: String,
    graph_dot: String,
    health_json: String,
}

#[derive(Clone)]
pub struct AppState {
    snapshot: Arc<Snapshot>,
    jobs: Arc<JobStore>,
    workers: Arc<Semaphore>,
}

impl AppState {
    pub fn new(cfg: ServiceConfig) -> Result<Self, ServiceError> {
        let workers = cfg
            .workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .max(1);
        let jobs = jobs::open_store(cfg.retention, cfg.journal.as_ref()).map_err(ServiceError::Journal)?;
        let summaries: Vec<PatternSummary> = cfg
            .catalog
            .iter()
            .map(|p| PatternSummary {
                id: &p.id,
                name: &p.name,
                class: p.class,
                parents: &p.parents,
                handles: p.handles.iter().copied().collect(),
                capabilities: p.capabilities.iter().copied().collect(),
                complexity: p.complexity,
            })
            .collect();
        let patterns_json = to_canonical_json(&summaries);
        let pattern_json = cfg
            .catalog
            .iter()
            .map(|p| (p.id.clone(), to_canonical_json(p)))
            .collect();
        let health_json = to_canonical_json(&json!({
            "status": "ok",
            "catalog_version": cfg.catalog.version,
            "patterns": cfg.catalog.len(),
            "edges": cfg.graph.edges().len(),
            "workers": workers,
        }));
        let snapshot = Snapshot {
            graph_json: cfg.graph.to_json(),
            graph_dot: export_dot(&cfg.graph),
            patterns_json,
            pattern_json,
            health_json,
            catalog: cfg.catalog,
            graph: cfg.graph,
        };
        Ok(Self {
            snapshot: Arc::new(snapshot),
            jobs: Arc::new(jobs),
            workers: Arc::new(Semaphore::new(workers)),
        })
    }

    pub fn jobs(&self) -> &JobStore {
        &self.jobs
    }
}

fn json_body(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json; charset=utf-8")], body).into_response()
}

fn error_body(status: StatusCode, code: &str, message: impl Into<String>) -> Response {
    json_body(
        status,
        to_canonical_json(&json!({ "code": code, "message": message.into() })),
    )
}

fn parse_body<T: serde::de::DeserializeOwned>(body: &Bytes) -> Result<T, Box<Response>> {
    serde_json::from_slice(body).map_err(|e| {
        Box::new(error_body(StatusCode::BAD_REQUEST, "bad_request", format!("invalid request body: {e}")))
    })
}

async fn patterns(State(s): State<AppState>) -> Response {
    json_body(StatusCode::OK, s.snapshot.patterns_json.clone())
}

async fn pattern(State(s): State<AppState>, Path(id): Path<String>) -> Response {
    match s.snapshot.pattern_json.get(&id) {
        Some(body) => json_body(StatusCode::OK, body.clone()),
        None => error_body(StatusCode::NOT_FOUND, "not_found", format!("no pattern `{id}`")),
    }
}

async fn graph(State(s): State<AppState>) -> Response {
    json_body(StatusCode::OK, s.snapshot.graph_json.clone())
}

async fn graph_dot(State(s): State<AppState>) -> Response {
    (
        StatusCode::OK,
        [(header::CONTENT_TYPE, "text/vnd.graphviz; charset=utf-8")],
        s.snapshot.graph_dot.clone(),
    )
        .into_response()
}

async fn health(State(s): State<AppState>) -> Response {
    json_body(StatusCode::OK, s.snapshot.health_json.clone())
}

async fn synthesize_handler(State(s): State<AppState>, body: Bytes) -> Response {
    let query = match parse_body(&body) {
        Ok(q) => q,
        Err(r) => return *r,
    };
    let snap = s.snapshot.clone();
    let outcome =
        tokio::task::spawn_blocking(move || synthesize(&snap.graph, &snap.catalog, &query)).await;
    match outcome {
        Ok(Ok(candidates)) => json_body(StatusCode::OK, to_canonical_json(&candidates)),
        Ok(Err(SynthesisError::Unsatisfiable(miss))) => json_body(
            StatusCode::UNPROCESSABLE_ENTITY,
            to_canonical_json(&json!({
                "code": "unsatisfiable",
                "message": miss.to_string(),
                "nearest_miss": miss,
            })),
        ),
        Ok(Err(SynthesisError::InvalidQuery(m))) => {
            error_body(StatusCode::BAD_REQUEST, "invalid_query", m)
        }
        Ok(Err(e)) => error_body(StatusCode::BAD_REQUEST, "invalid_query", e.to_string()),
        Err(e) => error_body(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()),
    }
}

fn launch(s: &AppState, kind: JobKind, request: Value, work: impl FnOnce(&Catalog) -> Result<Value, String> + Send + 'static) -> Response {
    let job = s.jobs.submit(kind, request);
    let id = job.id.clone();
    let state = s.clone();
    tokio::spawn(async move {
        // queue admission: at most `workers` jobs run at once
        let permit = state.workers.clone().acquire_owned().await;
        state.jobs.start(&id);
        let snap = state.snapshot.clone();
        let outcome = tokio::task::spawn_blocking(move || work(&snap.catalog))
            .await
            .unwrap_or_else(|e| Err(format!("job panicked: {e}")));
        state.jobs.finish(&id, outcome);
        drop(permit);
    });
    json_body(
        StatusCode::ACCEPTED,
        to_canonical_json(&json!({ "id": job.id, "status": job.status })),
    )
}

async fn simulate(State(s): State<AppState>, body: Bytes) -> Response {
    let cfg: SimConfig = match parse_body(&body) {
        Ok(c) => c,
        Err(r) => return *r,
    };
    let request = serde_json::to_value(&cfg).expect("config serializes");
    launch(&s, JobKind::Simulation, request, move |catalog| {
        run_simulation_in(&cfg, catalog, None)
            .map(|r| serde_json::to_value(r).expect("report serializes"))
            .map_err(|e| e.to_string())
    })
}

async fn sweep(State(s): State<AppState>, body: Bytes) -> Response {
    let req: SweepRequest = match parse_body(&body) {
        Ok(c) => c,
        Err(r) => return *r,
    };
    let request = serde_json::to_value(&req).expect("request serializes");
    launch(&s, JobKind::Sweep, request, move |catalog| {
        sweep_in(&req.config, &req.grid, catalog, None)
            .map(|t| serde_json::to_value(t).expect("table serializes"))
            .map_err(|e| e.to_string())
    })
}

async fn job(State(s): State<AppState>, Path(id): Path<String>) -> Response {
    match s.jobs.get(&id) {
        Lookup::Found(job) => json_body(StatusCode::OK, to_canonical_json(&job)),
        Lookup::Evicted => error_body(StatusCode::GONE, "evicted", format!("job `{id}` was evicted")),
        Lookup::Unknown => error_body(StatusCode::NOT_FOUND, "not_found", format!("no job `{id}`")),
    }
}

async fn not_found() -> Response {
    error_body(StatusCode::NOT_FOUND, "not_found", "no such route")
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/v1/patterns", get(patterns))
        .route("/api/v1/patterns/{id}", get(pattern))
        .route("/api/v1/graph", get(graph))
        .route("/api/v1/graph.dot", get(graph_dot))
        .route("/api/v1/synthesize", post(synthesize_handler))
        .route("/api/v1/simulate", post(simulate))
        .route("/api/v1/sweep", post(sweep))
        .route("/api/v1/jobs/{id}", get(job))
        .route("/api/v1/health", get(health))
        .fallback(not_found)
        .with_state(state)
}

/// Binds `addr` and serves until the process is interrupted.
pub async fn serve(addr: SocketAddr, state: AppState) -> Result<(), ServiceError> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| ServiceError::Bind { addr, source })?;
    let local = listener.local_addr().map_err(ServiceError::Serve)?;
    eprintln!("listening on http://{local}");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(ServiceError::Serve)
}
