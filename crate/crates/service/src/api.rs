//! HTTP routes over a [`Store`].

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use anet_core::{parse_network, Diagnostic, Error as CoreError, Scenario, UnfoldOptions};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use uuid::Uuid;

use crate::session::{self, AssertionBatch, SessionError, Store, WhatIfRequest};

pub fn router(store: Store) -> Router {
    Router::new()
        .route("/networks", post(create_network))
        .route("/networks/{id}", get(network_info))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(session_info).delete(delete_session))
        .route("/sessions/{id}/assertions", put(put_assertions))
        .route("/sessions/{id}/beliefs", get(get_beliefs))
        .route("/sessions/{id}/whatif", post(post_whatif))
        .route("/sessions/{id}/scenario", get(get_scenario))
        .with_state(store)
}

pub struct ApiError(SessionError);

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> ApiError {
        ApiError(e)
    }
}

fn unprocessable(location: &str, message: impl ToString) -> ApiError {
    ApiError(SessionError::Invalid(vec![Diagnostic::new(location, message.to_string())]))
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let message = self.0.to_string();
        let (status, body) = match self.0 {
            SessionError::NotFound(_) => (StatusCode::NOT_FOUND, json!({ "error": message })),
            SessionError::Invalid(diagnostics) => (
                StatusCode::UNPROCESSABLE_ENTITY,
                json!({ "error": message, "diagnostics": diagnostics }),
            ),
            SessionError::Inconsistent { conflict } => {
                (StatusCode::CONFLICT, json!({ "error": message, "conflict": conflict }))
            }
        };
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Decodes a JSON body by hand so that every malformed payload is a 422
/// with a located diagnostic.
fn decode<T: DeserializeOwned>(body: &str) -> ApiResult<T> {
    let text = if body.trim().is_empty() { "{}" } else { body };
    serde_json::from_str(text).map_err(|e| ApiError(SessionError::Invalid(vec![Diagnostic::from_json(&e)])))
}

fn parse_id(id: &str, what: &str) -> ApiResult<Uuid> {
    // an id that cannot exist is simply not found
    id.parse()
        .map_err(|_| ApiError(SessionError::NotFound(format!("{what} {id}"))))
}

/// Runs inference on the blocking pool so the executor stays responsive.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.expect("inference task panicked")
}

async fn create_network(State(store): State<Store>, body: String) -> ApiResult<impl IntoResponse> {
    let net = parse_network(&body).map_err(|e| match e {
        CoreError::Parse(diags) => ApiError(SessionError::Invalid(diags)),
        other => unprocessable("network", other),
    })?;
    let variables: Vec<String> = net.variables().map(|v| v.name.clone()).collect();
    let id = store.add_network(net);
    Ok((StatusCode::CREATED, Json(json!({ "id": id, "variables": variables }))))
}

async fn network_info(State(store): State<Store>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let id = parse_id(&id, "network")?;
    let net = store.network(id)?;
    let variables: Vec<Value> = net
        .variables()
        .map(|v| {
            json!({
                "name": v.name,
                "values": v.values,
                "persistence": v.is_persistence(),
                "controllable": v.control.is_some(),
            })
        })
        .collect();
    Ok(Json(json!({ "id": id, "variables": variables })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    network: String,
    horizon: Option<u32>,
    actions_at_slice0: Option<bool>,
    /// A snapshot from `GET /sessions/{id}/scenario`, to resume from.
    scenario: Option<Scenario>,
}

async fn create_session(State(store): State<Store>, body: String) -> ApiResult<impl IntoResponse> {
    let req: CreateSession = decode(&body)?;
    let network_id = parse_id(&req.network, "network")?;
    let scenario = match (req.scenario, req.horizon) {
        (Some(mut sc), horizon) => {
            if let Some(h) = horizon {
                sc.horizon = h;
            }
            if let Some(a) = req.actions_at_slice0 {
                sc.actions_at_slice0 = a;
            }
            sc
        }
        (None, Some(h)) => {
            let mut sc = Scenario::new(network_id.to_string(), h);
            sc.actions_at_slice0 = req
                .actions_at_slice0
                .unwrap_or(UnfoldOptions::default().actions_at_slice0);
            sc
        }
        (None, None) => return Err(unprocessable("horizon", "missing field `horizon`")),
    };
    let id = blocking(move || Ok(store.open_session(network_id, scenario)?)).await?;
    Ok((StatusCode::CREATED, Json(json!({ "id": id }))))
}

#[derive(Serialize)]
struct SessionInfo {
    id: Uuid,
    network: Uuid,
    horizon: u32,
    actions_at_slice0: bool,
    observations: usize,
    actions: usize,
}

async fn session_info(State(store): State<Store>, Path(id): Path<String>) -> ApiResult<Json<SessionInfo>> {
    let session = store.session(parse_id(&id, "session")?)?;
    let s = session.lock().await;
    Ok(Json(SessionInfo {
        id: s.id,
        network: s.network_id,
        horizon: s.horizon(),
        actions_at_slice0: s.scenario().actions_at_slice0,
        observations: s.scenario().observations.len(),
        actions: s.scenario().actions.len(),
    }))
}

async fn delete_session(State(store): State<Store>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    store.close_session(parse_id(&id, "session")?)?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PutAssertions {
    #[serde(flatten)]
    batch: AssertionBatch,
    horizon: Option<u32>,
}

async fn put_assertions(
    State(store): State<Store>,
    Path(id): Path<String>,
    body: String,
) -> ApiResult<Json<Value>> {
    let session = store.session(parse_id(&id, "session")?)?;
    let req: PutAssertions = decode(&body)?;
    let mut s = session.lock_owned().await;
    let scenario = blocking(move || {
        if let Some(h) = req.horizon {
            if h != s.horizon() {
                let before = s.scenario().clone();
                s.set_horizon(h)?;
                if let Err(e) = s.apply(&req.batch) {
                    s.set_horizon(before.horizon).expect("previous horizon was valid");
                    return Err(e.into());
                }
                return Ok(s.scenario().clone());
            }
        }
        s.apply(&req.batch)?;
        Ok(s.scenario().clone())
    })
    .await?;
    Ok(Json(json!({
        "horizon": scenario.horizon,
        "observations": scenario.observations,
        "actions": scenario.actions,
    })))
}

#[derive(Deserialize)]
struct BeliefsQuery {
    vars: Option<String>,
}

fn split_vars(vars: Option<&str>) -> Vec<String> {
    vars.map(|v| {
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect()
    })
    .unwrap_or_default()
}

async fn get_beliefs(
    State(store): State<Store>,
    Path(id): Path<String>,
    Query(q): Query<BeliefsQuery>,
) -> ApiResult<Json<Value>> {
    let session = store.session(parse_id(&id, "session")?)?;
    let (compiled, ev) = session.lock().await.snapshot();
    let vars = split_vars(q.vars.as_deref());
    let beliefs = blocking(move || {
        let nodes = session::select(&compiled.tn, &vars)?;
        session::beliefs(&compiled, &ev, &nodes).map_err(|e| unprocessable("vars", e))
    })
    .await?;
    Ok(Json(json!({ "beliefs": beliefs })))
}

async fn post_whatif(State(store): State<Store>, Path(id): Path<String>, body: String) -> ApiResult<Json<Value>> {
    let session = store.session(parse_id(&id, "session")?)?;
    let req: WhatIfRequest = decode(&body)?;
    let (compiled, ev) = session.lock().await.snapshot();
    let result = blocking(move || Ok(session::whatif(&compiled, &ev, &req)?)).await?;
    Ok(Json(serde_json::to_value(result).expect("what-if results serialize")))
}

async fn get_scenario(State(store): State<Store>, Path(id): Path<String>) -> ApiResult<Json<Scenario>> {
    let session = store.session(parse_id(&id, "session")?)?;
    let s = session.lock().await;
    Ok(Json(s.scenario().clone()))
}
