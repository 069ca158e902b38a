//! JSON-over-HTTP service with an in-memory named-graph store.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Multipart, Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use causal_audit::format::GraphDocument;
use serde::Serialize;
use tokio::sync::RwLock;

use crate::api::{self, ApiError, ApiResult, ErrorClass};

/// Named graphs; a PUT replaces any previous entry (last writer wins).
#[derive(Clone, Default)]
pub struct AppState {
    graphs: Arc<RwLock<HashMap<String, GraphDocument>>>,
}

impl AppState {
    /// Preloads every `*.graph` and `*.json` file in `dir`, keyed by file stem.
    pub fn from_dir(dir: &Path) -> anyhow::Result<Self> {
        let mut graphs = HashMap::new();
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            let ext = path.extension().and_then(|e| e.to_str());
            if !matches!(ext, Some("graph" | "json")) {
                continue;
            }
            let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else { continue };
            match api::parse_graph(&std::fs::read_to_string(&path)?) {
                Ok(doc) => {
                    graphs.insert(stem.to_string(), doc);
                }
                Err(e) => tracing::warn!(path = %path.display(), "skipping graph: {e}"),
            }
        }
        tracing::info!(count = graphs.len(), dir = %dir.display(), "loaded graphs");
        Ok(AppState { graphs: Arc::new(RwLock::new(graphs)) })
    }

    async fn graph(&self, name: &str) -> ApiResult<GraphDocument> {
        self.graphs
            .read()
            .await
            .get(name)
            .cloned()
            .ok_or_else(|| ApiError::new(ErrorClass::NotFound, "UnknownGraph", format!("no graph named {name}")))
    }
}

struct Reply(ApiResult<String>);

impl<T: Serialize> From<ApiResult<T>> for Reply {
    fn from(r: ApiResult<T>) -> Self {
        Reply(r.map(|v| api::render(&v)))
    }
}

impl IntoResponse for Reply {
    fn into_response(self) -> Response {
        let (status, body) = match self.0 {
            Ok(body) => (StatusCode::OK, body),
            Err(e) => {
                let status = match e.class {
                    ErrorClass::Malformed => StatusCode::BAD_REQUEST,
                    ErrorClass::NotFound => StatusCode::NOT_FOUND,
                    ErrorClass::Domain => StatusCode::UNPROCESSABLE_ENTITY,
                };
                (status, api::render(&e.payload()))
            }
        };
        (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
    }
}

fn body_str(body: &Bytes) -> ApiResult<&str> {
    std::str::from_utf8(body).map_err(ApiError::malformed)
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/health", get(|| async { Reply::from(Ok(api::health())) }))
        .route("/api/graphs/:name", get(get_graph).put(put_graph))
        .route("/api/graphs/:name/dsep", post(dsep))
        .route("/api/graphs/:name/adjustment-sets", post(adjustment_sets))
        .route("/api/graphs/:name/audit", post(audit))
        .route("/api/discover", post(discover))
        .route("/api/fallout", post(fallout))
        .with_state(state)
}

async fn get_graph(State(s): State<AppState>, UrlPath(name): UrlPath<String>) -> Reply {
    s.graph(&name).await.map(|d| d.to_json_value()).into()
}

async fn put_graph(State(s): State<AppState>, UrlPath(name): UrlPath<String>, body: Bytes) -> Reply {
    let parsed = body_str(&body).and_then(|src| {
        let json: causal_audit::format::GraphJson = api::parse_json(src)?;
        Ok(json.into_document()?)
    });
    match parsed {
        Ok(doc) => {
            let out = doc.to_json_value();
            s.graphs.write().await.insert(name, doc);
            Ok(out).into()
        }
        Err(e) => Reply(Err(e)),
    }
}

async fn dsep(State(s): State<AppState>, UrlPath(name): UrlPath<String>, body: Bytes) -> Reply {
    let doc = match s.graph(&name).await {
        Ok(d) => d,
        Err(e) => return Reply(Err(e)),
    };
    body_str(&body).and_then(api::parse_json).and_then(|req| api::dsep(&doc, &req)).into()
}

async fn adjustment_sets(State(s): State<AppState>, UrlPath(name): UrlPath<String>, body: Bytes) -> Reply {
    let doc = match s.graph(&name).await {
        Ok(d) => d,
        Err(e) => return Reply(Err(e)),
    };
    body_str(&body).and_then(api::parse_json).and_then(|req| api::adjustment_sets(&doc, &req)).into()
}

async fn audit(State(s): State<AppState>, UrlPath(name): UrlPath<String>, body: Bytes) -> Reply {
    let doc = match s.graph(&name).await {
        Ok(d) => d,
        Err(e) => return Reply(Err(e)),
    };
    body_str(&body).and_then(api::parse_json).and_then(|req| api::audit(&doc, &req)).into()
}

/// Multipart fields: `csv` (required), `penalty` (number) and `encoding`
/// (ordinal-encoding JSON).
async fn discover(mut form: Multipart) -> Reply {
    let mut csv = None;
    let mut opts = api::DiscoverOptions::default();
    loop {
        let field = match form.next_field().await {
            Ok(Some(f)) => f,
            Ok(None) => break,
            Err(e) => return Reply(Err(ApiError::malformed(e))),
        };
        let name = field.name().unwrap_or_default().to_string();
        let text = match field.text().await {
            Ok(t) => t,
            Err(e) => return Reply(Err(ApiError::malformed(e))),
        };
        match name.as_str() {
            "csv" => csv = Some(text),
            "penalty" => match text.trim().parse() {
                Ok(p) => opts.penalty = Some(p),
                Err(e) => return Reply(Err(ApiError::malformed(format!("penalty: {e}")))),
            },
            "encoding" => match api::parse_json(&text) {
                Ok(enc) => opts.encoding = Some(enc),
                Err(e) => return Reply(Err(e)),
            },
            other => return Reply(Err(ApiError::malformed(format!("unexpected field {other}")))),
        }
    }
    let Some(csv) = csv else {
        return Reply(Err(ApiError::malformed("missing csv field")));
    };
    let result = tokio::task::spawn_blocking(move || api::discover(&csv, &opts).map(|d| d.to_json_value())).await;
    match result {
        Ok(r) => r.into(),
        Err(e) => Reply(Err(ApiError::new(ErrorClass::Domain, "Internal", e.to_string()))),
    }
}

async fn fallout(body: Bytes) -> Reply {
    let req: api::FalloutRequest = match body_str(&body).and_then(api::parse_json) {
        Ok(r) => r,
        Err(e) => return Reply(Err(e)),
    };
    match tokio::task::spawn_blocking(move || api::fallout(&req)).await {
        Ok(r) => r.into(),
        Err(e) => Reply(Err(ApiError::new(ErrorClass::Domain, "Internal", e.to_string()))),
    }
}

pub async fn serve(port: u16, state: AppState) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await?;
    Ok(())
}
