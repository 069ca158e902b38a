//! Golden cases run through both the binary and the HTTP router.
#![allow(dead_code)]

use std::path::PathBuf;
use std::process::Command;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use causal_audit_cli::server::{router, AppState};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/data").join(name)
}

pub fn golden_path(case: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{case}.json"))
}

pub enum Http {
    /// Store `graph` under `name`, then POST `body` to `uri`.
    Graph { graph: PathBuf, name: &'static str, endpoint: &'static str, body: Value },
    Discover { csv: PathBuf },
    Fallout { body: Value },
}

pub struct Case {
    pub name: &'static str,
    pub args: Vec<String>,
    pub http: Http,
}

fn args(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn p(path: &PathBuf) -> &str {
    path.to_str().unwrap()
}

const SCENARIO_II: &str = "HeatingSetpoint,ACH,PPA,Volume,Area,WWRNorth,WWREast,WWRSouth,WWRWest";

fn list(csv: &str) -> Value {
    json!(csv.split(',').collect::<Vec<_>>())
}

pub fn cases() -> Vec<Case> {
    let building = data("building.graph");
    let chain = fixture("chain.graph");
    let collider = fixture("collider.graph");
    let confounder = fixture("confounder.graph");
    let mediator = fixture("mediator.graph");
    let scm = std::fs::read_to_string(data("building_scm.json")).unwrap();
    let query = std::fs::read_to_string(data("building_query.json")).unwrap();
    let arms: Value = serde_json::from_str(&std::fs::read_to_string(fixture("small_arms.json")).unwrap()).unwrap();
    vec![
        Case {
            name: "dsep_chain_given_b",
            args: args(&["graph", "dsep", p(&chain), "--x", "A", "--y", "C", "--given", "B"]),
            http: Http::Graph { graph: chain.clone(), name: "chain", endpoint: "dsep", body: json!({"x": ["A"], "y": ["C"], "given": ["B"]}) },
        },
        Case {
            name: "dsep_collider_empty",
            args: args(&["graph", "dsep", p(&collider), "--x", "A", "--y", "B"]),
            http: Http::Graph { graph: collider.clone(), name: "collider", endpoint: "dsep", body: json!({"x": ["A"], "y": ["B"], "given": []}) },
        },
        Case {
            name: "dsep_collider_given_c",
            args: args(&["graph", "dsep", p(&collider), "--x", "A", "--y", "B", "--given", "C"]),
            http: Http::Graph { graph: collider.clone(), name: "collider", endpoint: "dsep", body: json!({"x": ["A"], "y": ["B"], "given": ["C"]}) },
        },
        Case {
            name: "dsep_building_exposures",
            args: args(&["graph", "dsep", p(&building), "--x", "HeatingSystem", "--y", "InsulationStandard"]),
            http: Http::Graph { graph: building.clone(), name: "building", endpoint: "dsep", body: json!({"x": ["HeatingSystem"], "y": ["InsulationStandard"]}) },
        },
        Case {
            name: "adjust_confounder_all",
            args: args(&["adjust", "sets", p(&confounder), "--exposure", "T", "--outcome", "Y"]),
            http: Http::Graph { graph: confounder.clone(), name: "confounder", endpoint: "adjustment-sets", body: json!({"exposures": ["T"], "outcome": "Y", "minimal": false}) },
        },
        Case {
            name: "adjust_building_minimal_direct",
            args: args(&[
                "adjust", "sets", p(&building), "--exposure", "InsulationStandard,HeatingSystem", "--outcome", "EUIHeating",
                "--minimal", "--effect-kind", "direct",
            ]),
            http: Http::Graph {
                graph: building.clone(),
                name: "building",
                endpoint: "adjustment-sets",
                body: json!({"exposures": ["InsulationStandard", "HeatingSystem"], "outcome": "EUIHeating", "minimal": true, "effect_kind": "direct"}),
            },
        },
        Case {
            name: "audit_building_scenario_ii",
            args: args(&[
                "audit", p(&building), "--exposure", "InsulationStandard,HeatingSystem", "--outcome", "EUIHeating",
                "--effect-kind", "direct", "--features", SCENARIO_II,
            ]),
            http: Http::Graph {
                graph: building.clone(),
                name: "building",
                endpoint: "audit",
                body: json!({"exposures": ["InsulationStandard", "HeatingSystem"], "outcome": "EUIHeating", "effect_kind": "direct", "features": list(SCENARIO_II)}),
            },
        },
        Case {
            name: "audit_building_validation",
            args: args(&[
                "audit", p(&building), "--exposure", "InsulationStandard,HeatingSystem", "--outcome", "EUIHeating",
                "--effect-kind", "direct", "--features", &format!("{SCENARIO_II},ConstructionArea"),
            ]),
            http: Http::Graph {
                graph: building.clone(),
                name: "building",
                endpoint: "audit",
                body: json!({"exposures": ["InsulationStandard", "HeatingSystem"], "outcome": "EUIHeating", "effect_kind": "direct", "features": list(&format!("{SCENARIO_II},ConstructionArea"))}),
            },
        },
        Case {
            name: "audit_mediator_total",
            args: args(&["audit", p(&mediator), "--exposure", "T", "--outcome", "Y", "--features", "M"]),
            http: Http::Graph { graph: mediator.clone(), name: "mediator", endpoint: "audit", body: json!({"exposures": ["T"], "outcome": "Y", "features": ["M"], "effect_kind": "total"}) },
        },
        Case {
            name: "discover_collider",
            args: args(&["discover", p(&fixture("collider.csv"))]),
            http: Http::Discover { csv: fixture("collider.csv") },
        },
        Case {
            name: "fallout_building_small",
            args: args(&[
                "fallout", p(&data("building_scm.json")), "--query", p(&data("building_query.json")), "--arms",
                p(&fixture("small_arms.json")), "--n", "2000", "--seed", "7",
            ]),
            http: Http::Fallout {
                body: json!({
                    "scm": serde_json::from_str::<Value>(&scm).unwrap(),
                    "query": serde_json::from_str::<Value>(&query).unwrap(),
                    "arms": arms["arms"],
                    "n": 2000,
                    "seed": 7,
                }),
            },
        },
    ]
}

pub struct CliOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run_cli(args: &[String]) -> CliOutput {
    let out = Command::new(env!("CARGO_BIN_EXE_causal-audit")).args(args).output().expect("binary runs");
    CliOutput {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).unwrap().trim_end().to_string(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

pub async fn send(app: &axum::Router, method: Method, uri: &str, content_type: &str, body: Vec<u8>) -> (StatusCode, String) {
    let req = Request::builder().method(method).uri(uri).header("content-type", content_type).body(Body::from(body)).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

pub fn graph_json(path: &PathBuf) -> String {
    let doc = causal_audit_cli::api::parse_graph(&std::fs::read_to_string(path).unwrap()).unwrap();
    doc.to_json()
}

pub fn multipart(fields: &[(&str, &str)]) -> (String, Vec<u8>) {
    let boundary = "causal-audit-boundary";
    let mut body = String::new();
    for (name, value) in fields {
        body.push_str(&format!("--{boundary}\r\nContent-Disposition: form-data; name=\"{name}\"\r\n\r\n{value}\r\n"));
    }
    body.push_str(&format!("--{boundary}--\r\n"));
    (format!("multipart/form-data; boundary={boundary}"), body.into_bytes())
}

pub async fn run_http(case: &Case) -> (StatusCode, String) {
    let app = router(AppState::default());
    match &case.http {
        Http::Graph { graph, name, endpoint, body } => {
            let (status, _) = send(&app, Method::PUT, &format!("/api/graphs/{name}"), "application/json", graph_json(graph).into_bytes()).await;
            assert_eq!(status, StatusCode::OK);
            send(&app, Method::POST, &format!("/api/graphs/{name}/{endpoint}"), "application/json", body.to_string().into_bytes()).await
        }
        Http::Discover { csv } => {
            let text = std::fs::read_to_string(csv).unwrap();
            let (ct, body) = multipart(&[("csv", &text)]);
            send(&app, Method::POST, "/api/discover", &ct, body).await
        }
        Http::Fallout { body } => send(&app, Method::POST, "/api/fallout", "application/json", body.to_string().into_bytes()).await,
    }
}

/// Runs a case on both surfaces; returns `(cli, http, golden)` payloads.
/// Set `UPDATE_GOLDEN=1` to rewrite the golden file from the CLI output.
pub async fn run_case(case: &Case) -> (String, String, String) {
    let cli = run_cli(&case.args);
    assert_eq!(cli.code, 0, "{}: {}", case.name, cli.stderr);
    let (status, http) = run_http(case).await;
    assert_eq!(status, StatusCode::OK, "{}: {http}", case.name);
    let path = golden_path(case.name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, format!("{}\n", cli.stdout)).unwrap();
    }
    let golden = std::fs::read_to_string(&path).unwrap_or_default().trim_end().to_string();
    (cli.stdout, http, golden)
}
