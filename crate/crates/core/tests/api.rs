use std::sync::{Arc, OnceLock};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

use qualnet::api::{router, ApiService, Catalog};
use qualnet::engine::{
    compile, infer, BayesianNetwork, CompiledNetwork, Evidence, Expression, NodeGroup, NodeKind, NodeSpec,
    Observation,
};
use qualnet::ingestion::cases::{maintainability_case, security_case, CaseBundle};
use qualnet::report::machine;
use qualnet::scenarios::{goal_seek, sensitivity, Scenario};

fn maintainability() -> &'static CaseBundle {
    static CASE: OnceLock<CaseBundle> = OnceLock::new();
    CASE.get_or_init(maintainability_case)
}

fn service(case: &CaseBundle) -> Arc<ApiService> {
    Arc::new(ApiService::new(case.compiled.clone(), Some(case.target.clone())))
}

async fn call(svc: &Arc<ApiService>, method: &str, path: &str, body: &str) -> (StatusCode, String) {
    let request = Request::builder()
        .method(method)
        .uri(path)
        .body(Body::from(body.to_string()))
        .unwrap();
    let response = router(svc.clone()).oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

fn error_code(body: &str) -> String {
    let v: Value = serde_json::from_str(body).unwrap();
    v["error"]["code"].as_str().unwrap().to_string()
}

fn group_counts(catalog: &Catalog) -> [usize; 3] {
    let count = |g| catalog.nodes.iter().filter(|n| n.group == Some(g)).count();
    [count(NodeGroup::Activity), count(NodeGroup::Fact), count(NodeGroup::Indicator)]
}

/// Two ranked nodes where `b` copies `a` and `a` is always low.
fn deterministic_chain() -> CompiledNetwork {
    let ranked = |id: &str, parents: Vec<String>, columns: Vec<Vec<f64>>| NodeSpec {
        id: id.into(),
        name: id.into(),
        group: None,
        kind: NodeKind::Ranked {
            states: vec!["low".into(), "high".into()],
            midpoints: vec![0.25, 0.75],
        },
        expression: Expression::ExplicitCpt { parents, columns },
    };
    compile(&BayesianNetwork {
        nodes: vec![
            ranked("a", vec![], vec![vec![1.0, 0.0]]),
            ranked("b", vec!["a".into()], vec![vec![1.0, 0.0], vec![0.0, 1.0]]),
        ],
    })
    .unwrap()
}

#[tokio::test]
async fn catalogs_mirror_the_derived_topologies() {
    let (status, body) = call(&service(maintainability()), "GET", "/api/network", "").await;
    assert_eq!(status, StatusCode::OK);
    let catalog: Catalog = serde_json::from_str(&body).unwrap();
    assert_eq!(catalog.nodes.len(), 15);
    assert_eq!(group_counts(&catalog), [8, 3, 4]);
    assert_eq!(catalog.target.as_deref(), Some("change_effort"));

    let security = security_case();
    let (status, body) = call(&service(&security), "GET", "/api/network", "").await;
    assert_eq!(status, StatusCode::OK);
    let catalog: Catalog = serde_json::from_str(&body).unwrap();
    assert_eq!(catalog.nodes.len(), 24);
    assert_eq!(group_counts(&catalog), [11, 6, 7]);
}

#[tokio::test]
async fn infer_payload_equals_library() {
    let case = maintainability();
    let svc = service(case);
    let kc1 = case.scenario("KC1").unwrap();
    let request = serde_json::json!({ "observations": kc1.observations }).to_string();
    let (status, body) = call(&svc, "POST", "/api/infer", &request).await;
    assert_eq!(status, StatusCode::OK);
    let expected = infer(&case.compiled, &kc1.observations).unwrap();
    assert_eq!(body, machine(&expected));
    let mean = expected.node("change_effort").unwrap().summary.as_ref().unwrap().mean;
    assert!((mean - 19.4).abs() <= 0.3 * 19.4, "{mean}");

    let (_, again) = call(&svc, "POST", "/api/infer", &request).await;
    assert_eq!(again, body);
}

#[tokio::test]
async fn numbers_survive_serialization() {
    let case = maintainability();
    let kc1 = case.scenario("KC1").unwrap();
    let request = serde_json::json!({ "observations": kc1.observations }).to_string();
    let (_, body) = call(&service(case), "POST", "/api/infer", &request).await;
    let parsed: qualnet::engine::Posterior = serde_json::from_str(&body).unwrap();
    let expected = infer(&case.compiled, &kc1.observations).unwrap();
    for (a, b) in parsed.nodes.iter().zip(&expected.nodes) {
        for (p, q) in a.probabilities.iter().zip(&b.probabilities) {
            assert!((p - q).abs() <= 1e-12);
        }
    }
}

#[tokio::test]
async fn empty_body_gives_the_prior() {
    let case = maintainability();
    let prior = machine(&infer(&case.compiled, &Evidence::new()).unwrap());
    let svc = service(case);
    assert_eq!(call(&svc, "POST", "/api/infer", "").await.1, prior);
    assert_eq!(call(&svc, "POST", "/api/infer", "{\"observations\": {}}").await.1, prior);
}

#[tokio::test]
async fn impossible_evidence_is_a_structured_error() {
    let svc = Arc::new(ApiService::new(deterministic_chain(), None));
    let (status, body) = call(&svc, "POST", "/api/infer", r#"{"observations": {"b": "high"}}"#).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(error_code(&body), "impossible-evidence");
}

#[tokio::test]
async fn goal_seek_matches_library() {
    let case = maintainability();
    let svc = service(case);
    let (status, body) = call(&svc, "POST", "/api/goal-seek", r#"{"desired": 10}"#).await;
    assert_eq!(status, StatusCode::OK);
    let reports = case.fact_indicators();
    let expected = goal_seek(&case.compiled, "change_effort", &Observation::Value(10.0), &reports).unwrap();
    assert_eq!(expected.reports.len(), 3);
    assert_eq!(body, machine(&expected));

    let prior = infer(&case.compiled, &Evidence::new()).unwrap();
    let mode = prior.node("change_effort").unwrap().summary.as_ref().unwrap().mode_label.clone();
    let request = serde_json::json!({ "target": "change_effort", "desired": mode }).to_string();
    let (status, body) = call(&svc, "POST", "/api/goal-seek", &request).await;
    assert_eq!(status, StatusCode::OK);
    let expected = goal_seek(&case.compiled, "change_effort", &Observation::State(mode), &reports).unwrap();
    assert_eq!(body, machine(&expected));

    let (status, body) = call(&svc, "POST", "/api/goal-seek", r#"{"desired": 500}"#).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(error_code(&body), "invalid-evidence");
}

#[tokio::test]
async fn sensitivity_matches_library() {
    let case = maintainability();
    let (status, body) = call(&service(case), "POST", "/api/sensitivity", "").await;
    assert_eq!(status, StatusCode::OK);
    let expected = sensitivity(&case.compiled, "change_effort", &case.fact_indicators()).unwrap();
    assert_eq!(body, machine(&expected));
}

#[tokio::test]
async fn scenarios_are_stored_and_listed() {
    let case = maintainability();
    let svc = service(case);
    let (status, _) = call(&svc, "GET", "/api/scenarios/kc4", "").await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let mut kc4 = case.scenario("KC4").unwrap().clone();
    kc4.name = "kc4".into();
    let (status, body) = call(&svc, "PUT", "/api/scenarios/kc4", &kc4.to_text()).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let (status, body) = call(&svc, "GET", "/api/scenarios/kc4", "").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(Scenario::parse(&body).unwrap(), kc4);

    let (_, list) = call(&svc, "GET", "/api/scenarios", "").await;
    assert!(list.contains("kc4"), "{list}");

    let (status, _) = call(&svc, "PUT", "/api/scenarios/other", &kc4.to_text()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let bogus = Scenario::from_values("bogus", [("no_such_node", 1.0)]);
    let (status, body) = call(&svc, "PUT", "/api/scenarios/bogus", &bogus.to_text()).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{body}");
}

#[tokio::test]
async fn routing_and_request_errors() {
    let svc = service(maintainability());
    assert_eq!(call(&svc, "GET", "/api/nothing", "").await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&svc, "GET", "/api/infer", "").await.0, StatusCode::METHOD_NOT_ALLOWED);
    let (status, body) = call(&svc, "POST", "/api/infer", "{not json").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(error_code(&body), "invalid-request");
    let (status, _) = call(&svc, "POST", "/api/infer", r#"{"observations": {"change_effort": 1}, "x": 1}"#).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn no_network_loaded() {
    let svc = Arc::new(ApiService::without_network());
    let (status, body) = call(&svc, "GET", "/api/network", "").await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    assert!(body.contains("\"error\""));
}
