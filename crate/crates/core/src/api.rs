//! HTTP service over one loaded network: catalog, inference, goal seeking,
//! sensitivity and an in-memory scenario store.
//!
//! Request handling is a plain function of method, path and body so it can
//! be exercised without a socket; [`router`] adapts it to axum.

use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::http::{header, Method, StatusCode, Uri};
use axum::response::IntoResponse;
use axum::Router;
use serde::{Deserialize, Serialize};

use crate::engine::{infer, CompiledNetwork, Evidence, NodeGroup, NodeKind, Observation};
use crate::error::Error;
use crate::report::machine;
use crate::scenarios::{goal_seek, sensitivity, Scenario};

pub const DEFAULT_PORT: u16 = 8742;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiResponse {
    pub status: u16,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogNode {
    pub id: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<NodeGroup>,
    /// `ranked` or `interval`.
    pub kind: String,
    pub states: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    pub parents: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub network: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    pub nodes: Vec<CatalogNode>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InferRequest {
    #[serde(default)]
    observations: Evidence,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GoalSeekRequest {
    target: Option<String>,
    desired: Observation,
    #[serde(default)]
    report: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SensitivityRequest {
    target: Option<String>,
    #[serde(default)]
    candidates: Option<Vec<String>>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: ErrorDetail<'a>,
}

#[derive(Serialize)]
struct ErrorDetail<'a> {
    code: &'a str,
    message: String,
}

fn error(status: u16, code: &str, message: impl Into<String>) -> ApiResponse {
    ApiResponse {
        status,
        body: machine(&ErrorBody {
            error: ErrorDetail {
                code,
                message: message.into(),
            },
        }),
    }
}

fn domain_error(e: Error) -> ApiResponse {
    let status = match e {
        Error::Syntax { .. } | Error::FormatVersion { .. } | Error::InvalidScenario(_) => 400,
        _ => 422,
    };
    error(status, e.code(), e.to_string())
}

fn ok<T: Serialize>(value: &T) -> ApiResponse {
    ApiResponse {
        status: 200,
        body: machine(value),
    }
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &str) -> Result<T, ApiResponse> {
    let text = if body.trim().is_empty() { "{}" } else { body };
    serde_json::from_str(text).map_err(|e| error(400, "invalid-request", e.to_string()))
}

fn valid_scenario_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

/// Indicator nodes other than `target`, or every other node when the
/// network carries no groups.
pub fn default_report_nodes(net: &CompiledNetwork, target: &str) -> Vec<String> {
    let grouped = net.nodes().iter().any(|n| n.group.is_some());
    net.nodes()
        .iter()
        .filter(|n| n.id != target)
        .filter(|n| !grouped || n.group == Some(NodeGroup::Indicator))
        .map(|n| n.id.clone())
        .collect()
}

/// The indicator attached to the top activity, if there is exactly one.
/// Sub-activities feed their parent activity, so the top activity is the
/// one that is not a parent of another activity node.
pub fn default_target(net: &CompiledNetwork) -> Option<String> {
    let is_activity = |i: usize| net.node(i).group == Some(NodeGroup::Activity);
    let feeding: Vec<usize> = net
        .nodes()
        .iter()
        .filter(|n| n.group == Some(NodeGroup::Activity))
        .flat_map(|n| n.parents.iter().copied())
        .filter(|&p| is_activity(p))
        .collect();
    let mut found = net.nodes().iter().filter(|n| {
        n.group == Some(NodeGroup::Indicator)
            && n.parents.len() == 1
            && is_activity(n.parents[0])
            && !feeding.contains(&n.parents[0])
    });
    let first = found.next()?;
    found.next().is_none().then(|| first.id.clone())
}

pub fn catalog(net: &CompiledNetwork, target: Option<&str>) -> Catalog {
    Catalog {
        network: net.fingerprint().to_string(),
        target: target.map(String::from),
        nodes: net
            .nodes()
            .iter()
            .map(|n| {
                let (kind, edges, unit) = match &n.kind {
                    NodeKind::Ranked { .. } => ("ranked", None, None),
                    NodeKind::Interval { edges, unit } => ("interval", Some(edges.clone()), Some(unit.clone())),
                };
                CatalogNode {
                    id: n.id.clone(),
                    name: n.name.clone(),
                    group: n.group,
                    kind: kind.into(),
                    states: n.labels.clone(),
                    edges,
                    unit,
                    parents: n.parents.iter().map(|&p| net.node(p).id.clone()).collect(),
                }
            })
            .collect(),
    }
}

struct Loaded {
    net: CompiledNetwork,
    target: Option<String>,
}

pub struct ApiService {
    loaded: Option<Loaded>,
    scenarios: RwLock<BTreeMap<String, Scenario>>,
}

impl ApiService {
    /// `target` defaults to [`default_target`].
    pub fn new(net: CompiledNetwork, target: Option<String>) -> Self {
        let target = target.or_else(|| default_target(&net));
        ApiService {
            loaded: Some(Loaded { net, target }),
            scenarios: RwLock::new(BTreeMap::new()),
        }
    }

    pub fn without_network() -> Self {
        ApiService {
            loaded: None,
            scenarios: RwLock::new(BTreeMap::new()),
        }
    }

    pub fn store_scenario(&self, scenario: Scenario) {
        self.scenarios
            .write()
            .expect("scenario store poisoned")
            .insert(scenario.name.clone(), scenario);
    }

    pub fn handle(&self, method: &str, path: &str, body: &str) -> ApiResponse {
        let path = path.split('?').next().unwrap_or("");
        let segments: Vec<&str> = path.trim_matches('/').split('/').collect();
        let route = match segments.as_slice() {
            ["api", "network"] => Route::Network,
            ["api", "infer"] => Route::Infer,
            ["api", "goal-seek"] => Route::GoalSeek,
            ["api", "sensitivity"] => Route::Sensitivity,
            ["api", "scenarios"] => Route::Scenarios,
            ["api", "scenarios", name] => Route::Scenario(name),
            _ => return error(404, "not-found", format!("no route for {path}")),
        };
        let allowed: &[&str] = match route {
            Route::Network | Route::Scenarios => &["GET"],
            Route::Infer | Route::GoalSeek | Route::Sensitivity => &["POST"],
            Route::Scenario(_) => &["GET", "PUT"],
        };
        if !allowed.contains(&method) {
            return error(405, "method-not-allowed", format!("{method} {path}"));
        }
        let Some(loaded) = &self.loaded else {
            return error(503, "no-network", "no network is loaded");
        };
        let result = match (route, method) {
            (Route::Network, _) => Ok(ok(&catalog(&loaded.net, loaded.target.as_deref()))),
            (Route::Infer, _) => self.infer(loaded, body),
            (Route::GoalSeek, _) => self.goal_seek(loaded, body),
            (Route::Sensitivity, _) => self.sensitivity(loaded, body),
            (Route::Scenarios, _) => {
                let names: Vec<String> = self.scenarios.read().expect("scenario store poisoned").keys().cloned().collect();
                Ok(ok(&BTreeMap::from([("scenarios", names)])))
            }
            (Route::Scenario(name), "GET") => match self.scenarios.read().expect("scenario store poisoned").get(name) {
                Some(s) => Ok(ApiResponse {
                    status: 200,
                    body: s.to_text(),
                }),
                None => Err(error(404, "not-found", format!("no scenario `{name}`"))),
            },
            (Route::Scenario(name), _) => self.put_scenario(loaded, name, body),
        };
        result.unwrap_or_else(|e| e)
    }

    fn target(loaded: &Loaded, requested: Option<String>) -> Result<String, ApiResponse> {
        requested
            .or_else(|| loaded.target.clone())
            .ok_or_else(|| error(400, "invalid-request", "no target given and the network has no default"))
    }

    fn infer(&self, loaded: &Loaded, body: &str) -> Result<ApiResponse, ApiResponse> {
        let req: InferRequest = parse_body(body)?;
        infer(&loaded.net, &req.observations).map(|p| ok(&p)).map_err(domain_error)
    }

    fn goal_seek(&self, loaded: &Loaded, body: &str) -> Result<ApiResponse, ApiResponse> {
        let req: GoalSeekRequest = parse_body(body)?;
        let target = Self::target(loaded, req.target)?;
        let report = req
            .report
            .unwrap_or_else(|| default_report_nodes(&loaded.net, &target));
        goal_seek(&loaded.net, &target, &req.desired, &report)
            .map(|r| ok(&r))
            .map_err(domain_error)
    }

    fn sensitivity(&self, loaded: &Loaded, body: &str) -> Result<ApiResponse, ApiResponse> {
        let req: SensitivityRequest = parse_body(body)?;
        let target = Self::target(loaded, req.target)?;
        let candidates = req
            .candidates
            .unwrap_or_else(|| default_report_nodes(&loaded.net, &target));
        sensitivity(&loaded.net, &target, &candidates)
            .map(|r| ok(&r))
            .map_err(domain_error)
    }

    fn put_scenario(&self, loaded: &Loaded, name: &str, body: &str) -> Result<ApiResponse, ApiResponse> {
        if !valid_scenario_name(name) {
            return Err(error(400, "invalid-request", format!("bad scenario name `{name}`")));
        }
        let scenario = Scenario::parse(body).map_err(domain_error)?;
        if scenario.name != name {
            return Err(error(
                400,
                "invalid-request",
                format!("body names `{}` but the path names `{name}`", scenario.name),
            ));
        }
        scenario.validate(&loaded.net).map_err(domain_error)?;
        let text = scenario.to_text();
        self.store_scenario(scenario);
        Ok(ApiResponse { status: 200, body: text })
    }
}

enum Route<'a> {
    Network,
    Infer,
    GoalSeek,
    Sensitivity,
    Scenarios,
    Scenario(&'a str),
}

/// Every request goes through [`ApiService::handle`].
pub fn router(service: Arc<ApiService>) -> Router {
    Router::new().fallback(move |method: Method, uri: Uri, body: Bytes| {
        let service = service.clone();
        async move {
            let response = match std::str::from_utf8(&body) {
                Ok(text) => service.handle(method.as_str(), uri.path(), text),
                Err(_) => error(400, "invalid-request", "body is not UTF-8"),
            };
            let status = StatusCode::from_u16(response.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
            (status, [(header::CONTENT_TYPE, "application/json")], response.body).into_response()
        }
    })
}

/// Serves on `127.0.0.1:port` until interrupted.
pub async fn serve(service: ApiService, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(service)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn routing_errors() {
        let svc = ApiService::without_network();
        assert_eq!(svc.handle("GET", "/api/network", "").status, 503);
        assert_eq!(svc.handle("GET", "/nowhere", "").status, 404);
        assert_eq!(svc.handle("DELETE", "/api/network", "").status, 405);
        let body = svc.handle("GET", "/api/network", "").body;
        assert!(body.contains("\"no-network\""));
    }
}
