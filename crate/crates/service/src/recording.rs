//! Recorded request/response sequences, and their replay against a fresh
//! service with a side-by-side library replay.
//!
//! A recording refers to its session as `{id}` and to the output root as
//! `{out}`, so it stays byte-stable across runs.

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tower::ServiceExt;
use varigen_core::{parse_model, Configuration, FeatureState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub method: String,
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<Value>,
    pub status: u16,
    /// JSON body, or the text itself for non-JSON responses. `null` when empty.
    pub response: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recording {
    pub description: String,
    pub exchanges: Vec<Exchange>,
}

/// Sends one request; returns the status and the body as JSON (or as a
/// JSON string when the body is not JSON).
pub async fn call(
    app: &Router,
    method: &str,
    path: &str,
    body: Option<&Value>,
) -> (StatusCode, Value) {
    let mut req = Request::builder()
        .method(Method::from_bytes(method.as_bytes()).expect("method"))
        .uri(path);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app
        .clone()
        .oneshot(req.body(body).expect("request"))
        .await
        .expect("router is infallible");
    let status = resp.status();
    let bytes = resp.into_body().collect().await.expect("body").to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes)
            .unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into_owned()))
    };
    (status, value)
}

fn substitute(v: &Value, from: &str, to: &str) -> Value {
    match v {
        Value::String(s) if !from.is_empty() => Value::String(s.replace(from, to)),
        Value::Array(a) => Value::Array(a.iter().map(|x| substitute(x, from, to)).collect()),
        Value::Object(o) => Value::Object(
            o.iter()
                .map(|(k, x)| (k.clone(), substitute(x, from, to)))
                .collect(),
        ),
        other => other.clone(),
    }
}

/// Replaces the live session id and output root by their placeholders.
pub fn normalize(v: &Value, id: &str, out_root: &str) -> Value {
    substitute(&substitute(v, out_root, "{out}"), id, "{id}")
}

/// Runs `requests` (with placeholder paths) and fills in their responses.
pub async fn record(
    app: &Router,
    out_root: &str,
    description: &str,
    requests: &[(&str, &str, Option<Value>)],
) -> Recording {
    let mut id = String::new();
    let mut exchanges = Vec::new();
    for (method, path, body) in requests {
        let (status, response) = call(app, method, &path.replace("{id}", &id), body.as_ref()).await;
        if *path == "/sessions" && status == StatusCode::CREATED {
            id = response["id"].as_str().expect("session id").to_string();
        }
        exchanges.push(Exchange {
            method: method.to_string(),
            path: path.to_string(),
            body: body.clone(),
            status: status.as_u16(),
            response: normalize(&response, &id, out_root),
        });
    }
    Recording {
        description: description.to_string(),
        exchanges,
    }
}

fn states_of(c: &Configuration) -> BTreeMap<String, FeatureState> {
    c.named_states().into_iter().collect()
}

fn service_states(v: &Value) -> Option<BTreeMap<String, FeatureState>> {
    serde_json::from_value(v.get("states")?.clone()).ok()
}

/// Replays `rec` against `app`. Every response must match the recording,
/// every reported state must equal the library's state for the same
/// decisions, and a conflict must leave the session exactly as it was.
pub async fn replay(app: &Router, out_root: &str, rec: &Recording) -> Result<(), String> {
    let mut id = String::new();
    let mut lib: Option<Configuration> = None;
    for (i, ex) in rec.exchanges.iter().enumerate() {
        let at = |m: String| {
            format!(
                "{}: exchange {i} ({} {}): {m}",
                rec.description, ex.method, ex.path
            )
        };
        let path = ex.path.replace("{id}", &id);
        let before = if id.is_empty() {
            None
        } else {
            Some(call(app, "GET", &format!("/sessions/{id}/widgets"), None).await)
        };
        let (status, response) = call(app, &ex.method, &path, ex.body.as_ref()).await;
        if ex.path == "/sessions" && status == StatusCode::CREATED {
            id = response["id"].as_str().unwrap_or_default().to_string();
            let model = ex
                .body
                .as_ref()
                .and_then(|b| b["model"].as_str())
                .unwrap_or_default();
            let d = parse_model(model).map_err(|e| at(e.to_string()))?;
            lib = Some(Configuration::init(Arc::new(d)).map_err(|e| at(e.to_string()))?);
        }
        let response = normalize(&response, &id, out_root);
        if status.as_u16() != ex.status {
            return Err(at(format!(
                "status {} but recorded {}",
                status.as_u16(),
                ex.status
            )));
        }
        if response != ex.response {
            return Err(at(format!(
                "response differs:\n got {response}\nwant {}",
                ex.response
            )));
        }

        // the library, replayed alongside
        if let Some(c) = lib.as_mut() {
            if ex.method == "POST" && ex.path.ends_with("/decisions") {
                let decision = ex
                    .body
                    .as_ref()
                    .and_then(|b| serde_json::from_value::<crate::Decision>(b.clone()).ok());
                match decision.map(|d| c.apply_decision(&d.feature, d.value)) {
                    None if status == StatusCode::BAD_REQUEST => {}
                    None => return Err(at("malformed decision body was not refused".into())),
                    Some(Ok((next, _))) if status == StatusCode::OK => *c = next,
                    Some(Ok(_)) => {
                        return Err(at("library accepts what the service rejected".into()))
                    }
                    Some(Err(_)) if status.is_success() => {
                        return Err(at("service accepts what the library rejects".into()))
                    }
                    Some(Err(_)) => {}
                }
            } else if ex.method == "POST" && ex.path.ends_with("/undo") && status == StatusCode::OK
            {
                *c = c
                    .undo()
                    .ok_or_else(|| at("library has nothing to undo".into()))?
                    .1;
            }
            if let Some(states) = service_states(&response) {
                if states != states_of(c) {
                    return Err(at("service states differ from library replay".into()));
                }
            }
        }
        if !status.is_success() {
            if let Some(before) = before {
                let after = call(app, "GET", &format!("/sessions/{id}/widgets"), None).await;
                if after != before {
                    return Err(at("error response changed the session".into()));
                }
            }
        }
    }
    Ok(())
}
