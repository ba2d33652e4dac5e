//! In-process harness: builds the service and drives the router without a
//! socket.

#![allow(dead_code)]

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use std::sync::Arc;
use tower::ServiceExt;

use workbench_core::experiments::{logo_images, LogoDatasetConfig};
use workbench_core::simulation::Defect;
use workbench_core::types::GrayImage;
use workbench_server::config::Config;
use workbench_server::{router, AppState};

/// A config that starts quickly: small intent corpus, binary inspection
/// classes and a short training schedule.
pub fn fast_config() -> Config {
    let mut c = Config::default();
    c.intention.train_per_class = 3;
    c.quality.classes = vec!["good".into(), "defect".into()];
    c.quality.mlp.max_epochs = 60;
    c
}

pub struct Harness {
    pub state: Arc<AppState>,
    pub app: Router,
}

impl Harness {
    pub fn new(config: Config) -> Self {
        let state = AppState::build(config).expect("state builds");
        let app = router(state.clone());
        Self { state, app }
    }

    pub async fn call(
        &self,
        method: Method,
        path: &str,
        role: &str,
        body: Option<Value>,
    ) -> (StatusCode, Value) {
        let mut req = Request::builder()
            .method(method)
            .uri(path)
            .header("x-actor", format!("{role}-1"));
        if !role.is_empty() {
            req = req.header("x-role", role);
        }
        let req = match body {
            Some(b) => req
                .header("content-type", "application/json")
                .body(Body::from(b.to_string()))
                .unwrap(),
            None => req.body(Body::empty()).unwrap(),
        };
        self.send(req).await
    }

    pub async fn send(&self, req: Request<Body>) -> (StatusCode, Value) {
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        let value = if bytes.is_empty() {
            Value::Null
        } else {
            serde_json::from_slice(&bytes)
                .unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
        };
        (status, value)
    }

    pub async fn get(&self, path: &str, role: &str) -> (StatusCode, Value) {
        self.call(Method::GET, path, role, None).await
    }

    pub async fn post(&self, path: &str, role: &str, body: Value) -> (StatusCode, Value) {
        self.call(Method::POST, path, role, Some(body)).await
    }
}

/// Logo images with their binary labels.
pub fn logo(n: usize, defect_rate: f64, seed: u64) -> Vec<(Defect, GrayImage)> {
    let config = LogoDatasetConfig {
        n,
        defect_rate,
        ..LogoDatasetConfig::default()
    };
    logo_images(&config, seed, workbench_core::Exec::default()).unwrap()
}

pub fn binary_label(d: Defect) -> &'static str {
    if d.is_defect() {
        "defect"
    } else {
        "good"
    }
}

pub fn image_sample(id: &str, img: &GrayImage, label: Option<&str>, holdout: bool) -> Value {
    let mut v = json!({ "id": id, "kind": "image", "image": img, "holdout": holdout });
    if let Some(l) = label {
        v["label"] = json!(l);
    }
    v
}

/// Asserts the `{code, message, details}` error shape.
pub fn assert_error(body: &Value, code: &str) {
    assert_eq!(body["code"], code, "body: {body}");
    assert!(
        body["message"].as_str().is_some_and(|m| !m.is_empty()),
        "body: {body}"
    );
    assert!(body.get("details").is_some(), "body: {body}");
}

/// Serves the router on an ephemeral local port and returns its base URL.
pub async fn spawn_server(state: Arc<AppState>) -> String {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move {
        axum::serve(listener, router(state)).await.unwrap();
    });
    format!("http://{addr}")
}

/// Incremental parser for a `text/event-stream` response.
pub struct SseReader {
    stream:
        std::pin::Pin<Box<dyn futures::Stream<Item = reqwest::Result<axum::body::Bytes>> + Send>>,
    buf: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct SseMessage {
    pub event: String,
    pub data: Value,
}

impl SseReader {
    pub async fn open(
        client: &reqwest::Client,
        url: &str,
        role: &str,
    ) -> Result<Self, reqwest::StatusCode> {
        let resp = client
            .get(url)
            .header("x-role", role)
            .header("x-actor", "console")
            .send()
            .await
            .expect("request sent");
        if !resp.status().is_success() {
            return Err(resp.status());
        }
        Ok(Self {
            stream: Box::pin(resp.bytes_stream()),
            buf: Vec::new(),
        })
    }

    fn take_frame(&mut self) -> Option<SseMessage> {
        loop {
            let end = self.buf.windows(2).position(|w| w == b"\n\n")?;
            let raw: Vec<u8> = self.buf.drain(..end + 2).collect();
            let frame = String::from_utf8_lossy(&raw);
            let mut event = String::from("message");
            let mut data = String::new();
            for line in frame.lines() {
                if let Some(v) = line.strip_prefix("event:") {
                    event = v.trim().to_string();
                } else if let Some(v) = line.strip_prefix("data:") {
                    data.push_str(v.trim_start());
                }
            }
            if !data.is_empty() {
                let data = serde_json::from_str(&data).unwrap_or(Value::String(data));
                return Some(SseMessage { event, data });
            }
        }
    }

    /// Next event with data, or `None` once `timeout` passes.
    pub async fn next(&mut self, timeout: std::time::Duration) -> Option<SseMessage> {
        use futures::StreamExt;
        let deadline = tokio::time::Instant::now() + timeout;
        loop {
            if let Some(m) = self.take_frame() {
                return Some(m);
            }
            let chunk = tokio::time::timeout_at(deadline, self.stream.next())
                .await
                .ok()??
                .ok()?;
            self.buf.extend_from_slice(&chunk);
        }
    }
}
