#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;
use watson_service::app::App;
use watson_service::config::ServiceConfig;

pub const AMES: &str = "ames-token";
pub const BELL: &str = "bell-token";

pub fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

/// A service configuration pointing at the repository's schema, registry
/// and training data, with its journal under `dir`.
pub fn write_config(dir: &Path, extra: &str) -> PathBuf {
    let r = root();
    let base = std::fs::read_to_string(r.join("config/watson.toml")).unwrap();
    let body: String = base
        .lines()
        .map(|l| match l.split_once(" = ") {
            Some(("store", _)) => format!("store = {:?}", dir.join("archive.jsonl").display().to_string()),
            Some(("schema", v)) | Some(("rules", v)) | Some(("dataset", v)) => {
                let key = l.split_once(" = ").unwrap().0;
                let rel = v.trim_matches('"');
                format!("{key} = {:?}", r.join("config").join(rel).display().to_string())
            }
            _ => l.to_string(),
        })
        .collect::<Vec<_>>()
        .join("\n");
    let path = dir.join("watson.toml");
    std::fs::write(&path, format!("{body}\n{extra}")).unwrap();
    path
}

pub fn app_in(dir: &Path) -> Arc<App> {
    let path = write_config(dir, "");
    Arc::new(App::new(ServiceConfig::load(&path).unwrap()).unwrap())
}

pub struct Client {
    pub router: Router,
}

impl Client {
    pub fn new(app: Arc<App>) -> Self {
        Client {
            router: watson_service::http::router(app),
        }
    }

    pub async fn send(&self, method: Method, uri: &str, token: Option<&str>, body: Option<Value>) -> (StatusCode, Value) {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(t) = token {
            req = req.header("authorization", format!("Bearer {t}"));
        }
        let req = match body {
            Some(b) => req
                .header("content-type", "application/json")
                .body(Body::from(b.to_string()))
                .unwrap(),
            None => req.body(Body::empty()).unwrap(),
        };
        let resp = self.router.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        let json = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
        (status, json)
    }

    pub async fn get(&self, uri: &str) -> (StatusCode, Value) {
        self.send(Method::GET, uri, Some(AMES), None).await
    }

    pub async fn post(&self, uri: &str, body: Value) -> (StatusCode, Value) {
        self.send(Method::POST, uri, Some(AMES), Some(body)).await
    }
}
