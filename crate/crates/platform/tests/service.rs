use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tdu_core::scenario;
use tdu_core::tduo::{serialize_usage_policy, Format};
use tdu_platform::service::{router, serve};
use tdu_platform::{Config, Platform, PlatformError};
use tower::ServiceExt;

fn platform(dir: &std::path::Path) -> Arc<Platform> {
    Arc::new(Platform::open(Config::with_data_dir(dir)).unwrap())
}

/// Platform whose policy directory starts out empty.
fn bare_platform(dir: &std::path::Path) -> Arc<Platform> {
    std::fs::create_dir_all(dir.join("policies")).unwrap();
    platform(dir)
}

async fn call(
    p: &Arc<Platform>,
    method: &str,
    uri: &str,
    body: impl Into<Body>,
) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .body(body.into())
        .unwrap();
    let resp = router(p.clone()).oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    (status, value)
}

async fn post_json(p: &Arc<Platform>, uri: &str, v: Value) -> (StatusCode, Value) {
    let req = Request::builder()
        .method("POST")
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(v.to_string()))
        .unwrap();
    let resp = router(p.clone()).oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (
        status,
        serde_json::from_slice(&bytes).unwrap_or(Value::Null),
    )
}

fn request(subject: &str, actor: &str, spatial: &str, temporal: &str, abstraction: &str) -> Value {
    json!({
        "subject": subject,
        "actorClass": actor,
        "spatial": spatial,
        "temporal": temporal,
        "abstraction": abstraction,
    })
}

async fn history_len(p: &Arc<Platform>, query: &str) -> usize {
    let (status, v) = call(p, "GET", &format!("/usage-history{query}"), Body::empty()).await;
    assert_eq!(status, StatusCode::OK);
    v.as_array().unwrap().len()
}

#[tokio::test]
async fn health_answers_ok() {
    let dir = tempfile::tempdir().unwrap();
    let (status, v) = call(&platform(dir.path()), "GET", "/health", Body::empty()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["status"], "ok");
    assert_eq!(v["policies"], 3);
}

#[tokio::test]
async fn registered_policy_grants_the_municipal_authority() {
    let dir = tempfile::tempdir().unwrap();
    let p = bare_platform(dir.path());
    let ma = request("city", "MA", "street", "hourly", "aggregation");
    let (_, before) = post_json(&p, "/query", ma.clone()).await;
    assert_eq!(before["decision"]["outcome"], "Refused");

    let xml = serialize_usage_policy(&scenario::ma_policy(), Format::Xml);
    let (status, v) = call(&p, "POST", "/policies", xml).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(v["name"], "urn:tdu:policy:ma");

    let (status, v) = post_json(&p, "/query", ma).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["decision"]["outcome"], "Granted");
    assert_eq!(v["decision"]["policies"], json!(["urn:tdu:policy:ma"]));
    assert_eq!(v["recordId"], 2);
}

#[tokio::test]
async fn policies_are_accepted_as_json_and_listed() {
    let dir = tempfile::tempdir().unwrap();
    let p = bare_platform(dir.path());
    let doc = serialize_usage_policy(&scenario::co_policy(), Format::Json);
    let (status, _) = call(&p, "POST", "/policies", doc).await;
    assert_eq!(status, StatusCode::CREATED);
    let (status, v) = call(&p, "GET", "/policies", Body::empty()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(
        v,
        serde_json::to_value(vec![scenario::co_policy()]).unwrap()
    );

    let (status, v) = call(&p, "POST", "/policies", "<UsagePolicy><Rule/>").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(v["error"].as_str().unwrap().contains("XML"));
}

#[tokio::test]
async fn unknown_subjects_are_refused_and_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let p = platform(dir.path());
    assert_eq!(history_len(&p, "").await, 0);
    let (status, v) = post_json(
        &p,
        "/query",
        request("mallory", "MA", "street", "hourly", "aggregation"),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["decision"]["outcome"], "Refused");
    assert_eq!(v["items"], json!([]));
    assert_eq!(history_len(&p, "").await, 1);
    assert_eq!(history_len(&p, "?subject=mallory&outcome=Refused").await, 1);
    assert_eq!(history_len(&p, "?outcome=Granted").await, 0);
}

#[tokio::test]
async fn readings_are_ingested_and_released_on_grant() {
    let dir = tempfile::tempdir().unwrap();
    let p = platform(dir.path());
    let csv = "entity_id,entity_type,metric,timestamp,street,zone,value\n\
               s1,AirQualitySensor,co2,1704067200,main,north,400\n\
               s2,AirQualitySensor,co2,1704070800,side,north,600\n";
    let (status, v) = call(&p, "POST", "/data/readings", csv).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v, json!({"accepted": 2, "duplicates": 0, "total": 2}));

    let (_, v) = post_json(
        &p,
        "/query",
        request("acme", "CO", "zone", "weekly", "statistic"),
    )
    .await;
    assert_eq!(v["decision"]["outcome"], "Granted");
    let items = v["items"].as_array().unwrap();
    assert_eq!(items.len(), 1);
    let attr = |name: &str| {
        items[0]["attributes"]
            .as_array()
            .unwrap()
            .iter()
            .find(|a| a["name"] == name)
            .map(|a| a["value"].clone())
    };
    assert_eq!(attr("mean"), Some(json!("500")));
    assert_eq!(attr("count"), Some(json!("2")));
    assert_eq!(attr("street"), None);

    let (status, v) = call(&p, "POST", "/data/readings", "entity_id\nx\n").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(v["error"].is_string());
}

#[tokio::test]
async fn windows_restrict_the_release() {
    let dir = tempfile::tempdir().unwrap();
    let p = platform(dir.path());
    let csv = "entity_id,entity_type,metric,timestamp,street,zone,value\n\
               s1,AirQualitySensor,voc,100,main,north,1\n\
               s1,AirQualitySensor,voc,5000,main,north,2\n";
    call(&p, "POST", "/data/readings", csv).await;
    let mut q = request("owner", "DO", "street", "secondly", "detail");
    q["window"] = json!({"start": 0, "end": 1000});
    let (_, v) = post_json(&p, "/query", q).await;
    assert_eq!(v["items"].as_array().unwrap().len(), 1);
    assert_eq!(history_len(&p, "").await, 1);
}

#[tokio::test]
async fn malformed_requests_are_rejected_without_a_record() {
    let dir = tempfile::tempdir().unwrap();
    let p = platform(dir.path());
    let (status, _) = post_json(&p, "/query", json!({"subject": "city"})).await;
    assert!(status.is_client_error());
    let (status, _) = post_json(
        &p,
        "/query",
        request(" ", "MA", "street", "hourly", "detail"),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call(&p, "GET", "/usage-history?outcome=Maybe", Body::empty()).await;
    assert!(status.is_client_error());
    assert_eq!(history_len(&p, "").await, 0);
}

#[tokio::test]
async fn vocabulary_lists_the_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let (status, v) = call(&platform(dir.path()), "GET", "/vocabulary", Body::empty()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["dimensions"].as_array().unwrap().len(), 4);
    assert_eq!(v["requestPredicate"], "ConsumerRequest");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_queries_get_distinct_consecutive_records() {
    let dir = tempfile::tempdir().unwrap();
    let p = platform(dir.path());
    let mut tasks = Vec::new();
    for i in 0..16 {
        let p = p.clone();
        let q = if i % 2 == 0 {
            request("city", "MA", "street", "hourly", "aggregation")
        } else {
            request("acme", "CO", "street", "hourly", "detail")
        };
        tasks.push(tokio::spawn(
            async move { post_json(&p, "/query", q).await },
        ));
    }
    let mut ids = Vec::new();
    for t in tasks {
        let (status, v) = t.await.unwrap();
        assert_eq!(status, StatusCode::OK);
        ids.push(v["recordId"].as_u64().unwrap());
    }
    ids.sort();
    assert_eq!(ids, (1..=16).collect::<Vec<u64>>());
    assert_eq!(history_len(&p, "?outcome=Granted").await, 8);
    assert_eq!(history_len(&p, "?outcome=Refused").await, 8);
}

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port()
}

fn get(port: u16, path: &str) -> Option<String> {
    let mut s = TcpStream::connect(("127.0.0.1", port)).ok()?;
    write!(
        s,
        "GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n"
    )
    .ok()?;
    let mut out = String::new();
    s.read_to_string(&mut out).ok()?;
    Some(out)
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn serves_over_tcp_until_shut_down() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = Config::with_data_dir(dir.path());
    config.port = free_port();
    let port = config.port;
    let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
    let server = tokio::spawn(serve(config, async {
        let _ = stopped.await;
    }));
    let mut answer = None;
    for _ in 0..100 {
        answer = tokio::task::spawn_blocking(move || get(port, "/health"))
            .await
            .unwrap();
        if answer.is_some() {
            break;
        }
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
    let answer = answer.expect("server came up");
    assert!(answer.starts_with("HTTP/1.1 200"), "{answer}");
    assert!(answer.contains("\"status\":\"ok\""));
    stop.send(()).unwrap();
    server.await.unwrap().unwrap();
}

#[tokio::test]
async fn busy_ports_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let taken = TcpListener::bind("0.0.0.0:0").unwrap();
    let mut config = Config::with_data_dir(dir.path());
    config.port = taken.local_addr().unwrap().port();
    let err = serve(config, async {}).await.unwrap_err();
    assert!(matches!(err, PlatformError::Bind { .. }), "{err}");
}

#[tokio::test]
async fn unusable_data_directories_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("not-a-dir");
    std::fs::write(&file, "x").unwrap();
    let err = serve(Config::with_data_dir(&file), async {})
        .await
        .unwrap_err();
    assert!(matches!(err, PlatformError::DataDir { .. }), "{err}");
}
