//! In-process HTTP client over the router, for tests.

#![allow(dead_code)]

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde::de::DeserializeOwned;
use serde::Serialize;
use tower::ServiceExt;

pub struct Client {
    app: Router,
    rt: tokio::runtime::Runtime,
}

impl Client {
    pub fn new(app: Router) -> Self {
        let rt = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()
            .expect("runtime");
        Client { app, rt }
    }

    /// Sends a request and returns the status and raw body.
    pub fn send(&self, method: Method, uri: &str, body: Option<String>) -> (StatusCode, Vec<u8>) {
        let mut req = Request::builder().method(method).uri(uri);
        if body.is_some() {
            req = req.header("content-type", "application/json");
        }
        let req = req.body(body.map(Body::from).unwrap_or_else(Body::empty)).expect("request");
        self.rt.block_on(async {
            let resp = self.app.clone().oneshot(req).await.expect("infallible");
            let status = resp.status();
            let bytes = resp.into_body().collect().await.expect("body").to_bytes();
            (status, bytes.to_vec())
        })
    }

    pub fn get<T: DeserializeOwned>(&self, uri: &str) -> (StatusCode, T) {
        let (s, b) = self.send(Method::GET, uri, None);
        (s, serde_json::from_slice(&b).unwrap_or_else(|e| panic!("{uri}: {e}: {}", String::from_utf8_lossy(&b))))
    }

    pub fn post<T: DeserializeOwned>(&self, uri: &str, body: &impl Serialize) -> (StatusCode, T) {
        let (s, b) = self.send(Method::POST, uri, Some(serde_json::to_string(body).unwrap()));
        (s, serde_json::from_slice(&b).unwrap_or_else(|e| panic!("{uri}: {e}: {}", String::from_utf8_lossy(&b))))
    }
}
