#![allow(dead_code)]

use std::path::Path;
use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use chrono::{DateTime, Duration, TimeZone, Utc};
use cq_platform::{router, AppState, Catalog, Role, SharedState, Storage};
use cq_problems::{expected_answers, Answer, ProblemInstance};
use serde_json::Value;
use tower::ServiceExt;

pub const SECRET: &[u8] = b"test-secret-0123456789";

/// Clock the test moves by hand.
#[derive(Clone)]
pub struct ManualClock(Arc<AtomicI64>);

impl ManualClock {
    pub fn new(start: DateTime<Utc>) -> Self {
        ManualClock(Arc::new(AtomicI64::new(start.timestamp())))
    }

    pub fn advance(&self, by: Duration) {
        self.0.fetch_add(by.num_seconds(), Ordering::SeqCst);
    }

    pub fn clock(&self) -> cq_platform::Clock {
        let cell = self.0.clone();
        Arc::new(move || DateTime::from_timestamp(cell.load(Ordering::SeqCst), 0).expect("in range"))
    }
}

pub fn start() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2027, 3, 1, 9, 0, 0).unwrap()
}

pub fn open_state(dir: &Path, clock: &ManualClock, snapshot_every: u64) -> SharedState {
    let (storage, store) = Storage::open(dir, snapshot_every).expect("storage opens");
    AppState::new(Catalog::shipped().expect("shipped data"), storage, store, SECRET, Duration::hours(2), clock.clock())
}

pub struct Client {
    pub state: SharedState,
    pub router: Router,
}

pub struct Reply {
    pub status: StatusCode,
    pub headers: axum::http::HeaderMap,
    pub text: String,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.text).unwrap_or_else(|e| panic!("{e}: {}", self.text))
    }
}

impl Client {
    pub fn new(state: SharedState) -> Self {
        Client { router: router(state.clone()), state }
    }

    pub async fn call(&self, method: &str, uri: &str, token: Option<&str>, body: Option<Value>) -> Reply {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(t) = token {
            req = req.header("authorization", format!("Bearer {t}"));
        }
        let req = match body {
            Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
            None => req.body(Body::empty()),
        }
        .unwrap();
        let resp = self.router.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let headers = resp.headers().clone();
        let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
        Reply { status, headers, text: String::from_utf8(bytes.to_vec()).unwrap() }
    }

    pub fn enroll(&self, player: &str, campaign: &str) -> String {
        self.state.enroll(player, campaign).unwrap();
        self.state.issue_token(player, Role::Student).unwrap().token
    }

    pub fn instructor(&self) -> String {
        self.state.issue_token("teacher", Role::Instructor).unwrap().token
    }

    /// Issues an instance over HTTP and regenerates it locally, expected
    /// answers included.
    pub async fn issue(&self, token: &str, player: &str, template: &str) -> (Value, ProblemInstance) {
        let r = self.call("POST", "/api/problems/instantiate", Some(token), Some(serde_json::json!({"template": template, "player": player}))).await;
        assert_eq!(r.status, StatusCode::OK, "{}", r.text);
        let view = r.json();
        let seed = view["instance"]["seed"].as_u64().unwrap();
        let instance = self.state.catalog().instantiate(template, seed).unwrap();
        assert_eq!(view["instance"]["instance_id"], instance.instance_id.as_str());
        (view, instance)
    }

    pub async fn answer(&self, token: &str, instance_id: &str, answers: &[Answer], key: &str) -> Reply {
        let uri = format!("/api/problems/{instance_id}/answers");
        self.call("POST", &uri, Some(token), Some(serde_json::json!({"answers": answers, "idempotency_key": key}))).await
    }

    /// Solves one unlocked, unsolved pool template of the player's level.
    pub async fn solve_next(&self, token: &str, player: &str, key: &str) -> Reply {
        let board = self.board(token, player).await;
        let entry = board["problems"]
            .as_array()
            .unwrap()
            .iter()
            .find(|p| !p["locked"].as_bool().unwrap() && !p["secondary"].as_bool().unwrap())
            .expect("an open problem")
            .clone();
        let (_, instance) = self.issue(token, player, entry["template_id"].as_str().unwrap()).await;
        self.answer(token, &instance.instance_id, &expected_answers(&instance), key).await
    }

    pub async fn board(&self, token: &str, player: &str) -> Value {
        let p = self.call("GET", &format!("/api/player/{player}"), Some(token), None).await.json();
        let uri = format!("/api/levels/{}/{}/problems?player={player}", p["campaign"].as_str().unwrap(), p["level"]);
        let r = self.call("GET", &uri, Some(token), None).await;
        assert_eq!(r.status, StatusCode::OK, "{}", r.text);
        r.json()
    }
}
