//! HTTP+JSON API for the student client.
//!
//! Reads take the store's read lock and run fully concurrently. Writes hold
//! a per-player async mutex for the whole request, so the state a decision
//! was made on is the state the event is appended to. The log itself has a
//! single appender behind `storage`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Duration, NaiveDate, Utc};
use cq_game::{
    advance, award, can_advance, deadline_status, export_gradebook, unlock_check, Advancement, AwardEvent,
    CalendarCheckpoint, Campaign, DeadlineStatus, GameError, Missing, Regime,
};
use cq_problems::{grade, render_schematic, Answer, GradeResult, InstanceView, OutcomeTag, ProblemError, ProblemInstance};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::auth::{issue_token, verify_token, AuthError, Claims, Role, SessionToken};
use crate::catalog::Catalog;
use crate::config::Config;
use crate::error::{PlatformError, Result};
use crate::eventlog::{EventRecord, Payload};
use crate::storage::Storage;
use crate::store::{PlayerRecord, Store};

pub type Clock = Arc<dyn Fn() -> DateTime<Utc> + Send + Sync>;

pub fn system_clock() -> Clock {
    Arc::new(Utc::now)
}

/// Longest accepted idempotency key.
pub const MAX_KEY_LEN: usize = 128;

pub struct AppState {
    catalog: Catalog,
    secret: Vec<u8>,
    token_ttl: Duration,
    clock: Clock,
    storage: Mutex<Storage>,
    store: RwLock<Store>,
    player_locks: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
}

pub type SharedState = Arc<AppState>;

impl AppState {
    pub fn new(catalog: Catalog, storage: Storage, store: Store, secret: &[u8], token_ttl: Duration, clock: Clock) -> SharedState {
        Arc::new(AppState {
            catalog,
            secret: secret.to_vec(),
            token_ttl,
            clock,
            storage: Mutex::new(storage),
            store: RwLock::new(store),
            player_locks: Mutex::new(HashMap::new()),
        })
    }

    /// Loads data and recovers storage as configured.
    pub fn open(config: &Config, clock: Clock) -> Result<SharedState> {
        let catalog = Catalog::from_option(config.data_dir.as_deref())?;
        let (storage, store) = Storage::open(&config.storage, config.snapshot_every)?;
        Ok(AppState::new(catalog, storage, store, config.token_secret.as_bytes(), Duration::hours(config.token_ttl_hours), clock))
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn now(&self) -> DateTime<Utc> {
        (self.clock)()
    }

    /// Copy of the current state, for checks and exports.
    pub fn store(&self) -> Store {
        self.store.read().expect("store lock").clone()
    }

    pub fn last_seq(&self) -> u64 {
        self.store.read().expect("store lock").last_seq
    }

    /// Writes a snapshot; the log is already durable record by record.
    pub fn flush(&self) -> Result<()> {
        let mut storage = self.storage.lock().expect("storage lock");
        let store = self.store.read().expect("store lock");
        storage.snapshot(&store)
    }

    fn commit(&self, player: &str, payload: Payload) -> Result<EventRecord> {
        let mut storage = self.storage.lock().expect("storage lock");
        let mut store = self.store.write().expect("store lock");
        storage.append(&mut store, player, payload)
    }

    fn player_lock(&self, player: &str) -> Arc<tokio::sync::Mutex<()>> {
        let mut locks = self.player_locks.lock().expect("lock table");
        locks.entry(player.to_string()).or_default().clone()
    }

    fn player_record(&self, player: &str) -> Option<PlayerRecord> {
        self.store.read().expect("store lock").player(player).cloned()
    }

    /// Enrolls `player` unless already enrolled in `campaign`.
    pub fn enroll(&self, player: &str, campaign: &str) -> Result<()> {
        self.catalog.campaign(campaign)?;
        if player.is_empty() || player.len() > 64 || player.chars().any(|c| c.is_control() || c == ',') {
            return Err(PlatformError::Config(format!("invalid player id `{player}`")));
        }
        match self.player_record(player) {
            Some(r) if r.state.campaign == campaign => Ok(()),
            Some(r) => Err(PlatformError::Config(format!("`{player}` is already enrolled in `{}`", r.state.campaign))),
            None => self.commit(player, Payload::Enroll { campaign: campaign.to_string() }).map(|_| ()),
        }
    }

    pub fn issue_token(&self, player: &str, role: Role) -> Result<SessionToken> {
        Ok(issue_token(&self.secret, player, role, self.token_ttl, self.now())?)
    }

    /// Seeds are unpredictable without the secret and reproducible with it.
    fn seed_for(&self, player: &str, template: &str, n: usize) -> u64 {
        let mut h = Sha256::new();
        h.update(&self.secret);
        h.update(format!("\n{player}\n{template}\n{n}").as_bytes());
        u64::from_le_bytes(h.finalize()[..8].try_into().expect("eight bytes"))
    }
}

pub fn router(state: SharedState) -> Router {
    Router::new()
        .route("/api/campaigns", get(campaigns))
        .route("/api/player/{id}", get(player))
        .route("/api/player/{id}/advance", post(advance_player))
        .route("/api/levels/{campaign}/{level}/problems", get(level_board))
        .route("/api/problems/instantiate", post(instantiate))
        .route("/api/problems/{instance}/answers", post(submit))
        .route("/api/gradebook.csv", get(gradebook))
        .with_state(state)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub missing: Vec<Missing>,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: &str, message: impl Into<String>) -> Self {
        ApiError { status, body: ErrorBody { error: error.into(), message: message.into(), missing: Vec::new() } }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut response = (self.status, Json(self.body)).into_response();
        if self.status == StatusCode::UNAUTHORIZED {
            response.headers_mut().insert(header::WWW_AUTHENTICATE, HeaderValue::from_static("Bearer"));
        }
        response
    }
}

impl From<AuthError> for ApiError {
    fn from(e: AuthError) -> Self {
        match e {
            AuthError::Entropy(_) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()),
            _ => ApiError::new(StatusCode::UNAUTHORIZED, "unauthorized", e.to_string()),
        }
    }
}

impl From<GameError> for ApiError {
    fn from(e: GameError) -> Self {
        let message = e.to_string();
        match e {
            GameError::DuplicateSolve(_) => ApiError::new(StatusCode::CONFLICT, "duplicate_solve", message),
            GameError::WrongLevel(_) => ApiError::new(StatusCode::CONFLICT, "wrong_level", message),
            GameError::CampaignComplete => ApiError::new(StatusCode::CONFLICT, "campaign_complete", message),
            GameError::RequirementsUnmet(missing) => {
                let mut err = ApiError::new(StatusCode::CONFLICT, "requirements_unmet", message);
                err.body.missing = missing;
                err
            }
            GameError::UnknownTemplate(_) | GameError::UnknownCampaign(_) => ApiError::new(StatusCode::NOT_FOUND, "not_found", message),
            _ => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message),
        }
    }
}

impl From<ProblemError> for ApiError {
    fn from(e: ProblemError) -> Self {
        let message = e.to_string();
        match e {
            ProblemError::ArityMismatch { .. } => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "arity_mismatch", message),
            ProblemError::UnknownTemplate(_) | ProblemError::UnknownCampaign(_) | ProblemError::UnknownLevel(_) => {
                ApiError::new(StatusCode::NOT_FOUND, "not_found", message)
            }
            _ => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message),
        }
    }
}

impl From<PlatformError> for ApiError {
    fn from(e: PlatformError) -> Self {
        match e {
            PlatformError::Game(g) => g.into(),
            PlatformError::Problem(p) => p.into(),
            PlatformError::Auth(a) => a.into(),
            other => {
                tracing::error!("{other}");
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", other.to_string())
            }
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.body_text())
    }
}

type ApiResult<T> = std::result::Result<T, ApiError>;

fn authenticate(state: &AppState, headers: &HeaderMap) -> ApiResult<Claims> {
    let value = headers.get(header::AUTHORIZATION).and_then(|v| v.to_str().ok()).ok_or(AuthError::Missing)?;
    let token = value.strip_prefix("Bearer ").ok_or(AuthError::Malformed)?;
    Ok(verify_token(&state.secret, token.trim(), state.now())?)
}

/// Students act only on themselves; instructors on anyone.
fn authorize(claims: &Claims, player: &str) -> ApiResult<()> {
    if claims.role == Role::Instructor || claims.player == player {
        Ok(())
    } else {
        Err(ApiError::new(StatusCode::FORBIDDEN, "forbidden", format!("token does not belong to `{player}`")))
    }
}

fn require_student(claims: &Claims) -> ApiResult<()> {
    match claims.role {
        Role::Student => Ok(()),
        Role::Instructor => Err(ApiError::new(StatusCode::FORBIDDEN, "forbidden", "instructor tokens cannot play")),
    }
}

fn record_of(state: &AppState, player: &str) -> ApiResult<PlayerRecord> {
    state.player_record(player).ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("unknown player `{player}`")))
}

fn campaign_of<'a>(state: &'a AppState, record: &PlayerRecord) -> ApiResult<&'a Campaign> {
    Ok(state.catalog.campaign(&record.state.campaign)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: u8,
    pub theme: String,
    pub regime: Regime,
    pub required_solved_count: u32,
    pub coin_threshold: u64,
    pub reputation_threshold: u64,
    pub problems: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub id: String,
    pub title: String,
    pub rep_cost_base: u64,
    pub levels: Vec<LevelSummary>,
    pub calendar: Vec<CalendarCheckpoint>,
}

async fn campaigns(State(state): State<SharedState>) -> Json<Vec<CampaignSummary>> {
    let summaries = state
        .catalog
        .campaigns
        .iter()
        .map(|c| CampaignSummary {
            id: c.id.clone(),
            title: c.title.clone(),
            rep_cost_base: c.rep_cost_base,
            levels: c
                .levels
                .iter()
                .map(|l| LevelSummary {
                    level: l.level,
                    theme: l.theme.clone(),
                    regime: l.regime,
                    required_solved_count: l.required_solved_count,
                    coin_threshold: l.coin_threshold,
                    reputation_threshold: l.reputation_threshold,
                    problems: l.pool.len(),
                })
                .collect(),
            calendar: c.calendar.clone(),
        })
        .collect();
    Json(summaries)
}

/// Everything the client shows about a player. Holds no expected answers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerView {
    pub player_id: String,
    pub campaign: String,
    pub level: u8,
    pub completed: bool,
    pub xp: u64,
    pub coins: u64,
    pub reputation: u64,
    pub solved_in_level: u32,
    pub required_solved_count: u32,
    pub coin_threshold: u64,
    pub advancement: Advancement,
    pub deadline: DeadlineStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next_checkpoint: Option<CalendarCheckpoint>,
    pub history: Vec<AwardEvent>,
}

pub fn player_view(campaign: &Campaign, record: &PlayerRecord, today: NaiveDate) -> PlayerView {
    let s = &record.state;
    let spec = campaign.level(s.level);
    PlayerView {
        player_id: s.player_id.clone(),
        campaign: s.campaign.clone(),
        level: s.level,
        completed: s.completed,
        xp: s.xp,
        coins: s.coins,
        reputation: s.reputation,
        solved_in_level: s.solved_in_level(s.level),
        required_solved_count: spec.map_or(0, |l| l.required_solved_count),
        coin_threshold: spec.map_or(0, |l| l.coin_threshold),
        advancement: can_advance(s, campaign),
        deadline: deadline_status(s, &campaign.calendar, today),
        next_checkpoint: campaign.calendar.iter().find(|c| c.date > today).cloned(),
        history: s.history.clone(),
    }
}

fn view_of(state: &AppState, record: &PlayerRecord) -> ApiResult<PlayerView> {
    Ok(player_view(campaign_of(state, record)?, record, state.now().date_naive()))
}

async fn player(State(state): State<SharedState>, headers: HeaderMap, Path(id): Path<String>) -> ApiResult<Json<PlayerView>> {
    let claims = authenticate(&state, &headers)?;
    authorize(&claims, &id)?;
    let record = record_of(&state, &id)?;
    Ok(Json(view_of(&state, &record)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LockReason {
    /// Level not reached yet.
    LevelAhead,
    /// Level already left behind.
    LevelDone,
    /// Reputation below the template's requirement.
    Reputation,
    CampaignComplete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoardEntry {
    pub template_id: String,
    pub title: String,
    pub difficulty: u8,
    pub xp: u32,
    pub coins: u32,
    pub secondary: bool,
    pub outcomes: Vec<OutcomeTag>,
    pub locked: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lock_reason: Option<LockReason>,
    /// Set for surcharged templates, locked or not.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reputation_required: Option<u64>,
    pub solved: bool,
    /// Issued and not yet solved.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub open_instance: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelBoard {
    pub campaign: String,
    pub level: u8,
    pub theme: String,
    pub accessible: bool,
    pub problems: Vec<BoardEntry>,
}

#[derive(Debug, Deserialize)]
struct BoardQuery {
    player: String,
}

fn open_instance(record: &PlayerRecord, template_id: &str) -> Option<String> {
    record
        .issued
        .iter()
        .filter(|(id, i)| i.template_id == template_id && !record.solved(id))
        .max_by_key(|(id, i)| (i.issued_at, (*id).clone()))
        .map(|(id, _)| id.clone())
}

async fn level_board(
    State(state): State<SharedState>,
    headers: HeaderMap,
    Path((campaign_id, level)): Path<(String, u8)>,
    Query(query): Query<BoardQuery>,
) -> ApiResult<Json<LevelBoard>> {
    let claims = authenticate(&state, &headers)?;
    authorize(&claims, &query.player)?;
    let record = record_of(&state, &query.player)?;
    let campaign = state.catalog.campaign(&campaign_id)?;
    let spec = campaign.level(level).ok_or(ProblemError::UnknownLevel(level))?;
    if record.state.campaign != campaign.id {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "wrong_campaign",
            format!("`{}` plays `{}`", query.player, record.state.campaign),
        ));
    }
    let s = &record.state;
    let level_lock = if s.completed {
        Some(LockReason::CampaignComplete)
    } else if level > s.level {
        Some(LockReason::LevelAhead)
    } else if level < s.level {
        Some(LockReason::LevelDone)
    } else {
        None
    };
    let mut problems = Vec::new();
    for id in &spec.pool {
        let t = state.catalog.template(id)?;
        let surcharge = spec.surcharge(id);
        let lock_reason = match level_lock {
            Some(r) => Some(r),
            None if !unlock_check(s, id, spec)? => Some(LockReason::Reputation),
            None => None,
        };
        problems.push(BoardEntry {
            template_id: id.clone(),
            title: t.title.clone(),
            difficulty: t.difficulty,
            xp: t.xp,
            coins: t.coins,
            secondary: t.secondary,
            outcomes: t.outcomes.clone(),
            locked: lock_reason.is_some(),
            lock_reason,
            reputation_required: surcharge.map(|extra| spec.reputation_threshold + extra),
            solved: s.history.iter().any(|e| e.is_award() && e.template_id.as_deref() == Some(id)),
            open_instance: open_instance(&record, id),
        });
    }
    Ok(Json(LevelBoard { campaign: campaign.id.clone(), level, theme: spec.theme.clone(), accessible: level_lock.is_none(), problems }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstantiateRequest {
    pub template: String,
    pub player: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IssuedInstance {
    pub instance: InstanceView,
    /// Present when the circuit is part of the statement.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svg: Option<String>,
}

fn regenerate(state: &AppState, record: &PlayerRecord, instance_id: &str) -> ApiResult<ProblemInstance> {
    let issued = record
        .issued
        .get(instance_id)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("instance `{instance_id}` was not issued to you")))?;
    let mut instance = state.catalog.instantiate(&issued.template_id, issued.seed)?;
    instance.issued_at = Some(issued.issued_at.to_rfc3339());
    Ok(instance)
}

fn issued_view(instance: &ProblemInstance) -> ApiResult<IssuedInstance> {
    let svg = if instance.reveal_circuit { Some(render_schematic(instance)?) } else { None };
    Ok(IssuedInstance { instance: instance.view(), svg })
}

/// Hands out the player's open instance of the template, or a fresh one.
async fn instantiate(
    State(state): State<SharedState>,
    headers: HeaderMap,
    body: std::result::Result<Json<InstantiateRequest>, JsonRejection>,
) -> ApiResult<Json<IssuedInstance>> {
    let Json(req) = body?;
    let claims = authenticate(&state, &headers)?;
    require_student(&claims)?;
    authorize(&claims, &req.player)?;
    let lock = state.player_lock(&req.player);
    let _guard = lock.lock().await;
    let record = record_of(&state, &req.player)?;
    let campaign = campaign_of(&state, &record)?;
    let template = state.catalog.template(&req.template)?;
    let s = &record.state;
    if s.completed {
        return Err(GameError::CampaignComplete.into());
    }
    let spec = campaign.level(s.level).ok_or(ProblemError::UnknownLevel(s.level))?;
    if template.campaign != s.campaign || !spec.pool.contains(&template.id) {
        return Err(GameError::WrongLevel(format!("`{}` is not in your level {} pool", template.id, s.level)).into());
    }
    if !unlock_check(s, &template.id, spec)? {
        let need = spec.reputation_threshold + spec.surcharge(&template.id).unwrap_or(0);
        return Err(ApiError::new(StatusCode::FORBIDDEN, "locked", format!("`{}` needs {need} reputation", template.id)));
    }
    if let Some(open) = open_instance(&record, &template.id) {
        return Ok(Json(issued_view(&regenerate(&state, &record, &open)?)?));
    }
    let issued_before = record.issued.values().filter(|i| i.template_id == template.id).count();
    let (seed, mut instance) = (issued_before..)
        .map(|n| state.seed_for(&req.player, &template.id, n))
        .map(|seed| state.catalog.instantiate(&template.id, seed).map(|i| (seed, i)))
        .find(|r| r.as_ref().map_or(true, |(_, i)| !record.issued.contains_key(&i.instance_id)))
        .expect("unbounded search")?;
    let now = state.now();
    state.commit(
        &req.player,
        Payload::Issue { instance_id: instance.instance_id.clone(), template_id: template.id.clone(), seed, issued_at: now },
    )?;
    instance.issued_at = Some(now.to_rfc3339());
    Ok(Json(issued_view(&instance)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmitRequest {
    pub answers: Vec<Answer>,
    pub idempotency_key: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmissionResponse {
    pub instance_id: String,
    pub grade: GradeResult,
    /// All-zero unless the submission solved the problem.
    pub event: AwardEvent,
    /// True when this is the stored answer to an earlier request with the same key.
    pub replayed: bool,
    pub progress: PlayerView,
}

async fn submit(
    State(state): State<SharedState>,
    headers: HeaderMap,
    Path(instance_id): Path<String>,
    body: std::result::Result<Json<SubmitRequest>, JsonRejection>,
) -> ApiResult<Json<SubmissionResponse>> {
    let Json(req) = body?;
    let claims = authenticate(&state, &headers)?;
    require_student(&claims)?;
    if req.idempotency_key.is_empty() || req.idempotency_key.len() > MAX_KEY_LEN {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "bad_request", format!("idempotency_key must be 1 to {MAX_KEY_LEN} bytes")));
    }
    let player = claims.player.as_str();
    let lock = state.player_lock(player);
    let _guard = lock.lock().await;
    let record = record_of(&state, player)?;
    if let Some(prior) = record.submissions.get(&req.idempotency_key) {
        if prior.instance_id != instance_id {
            return Err(ApiError::new(StatusCode::CONFLICT, "idempotency_key_reused", "key already used for another instance"));
        }
        return Ok(Json(SubmissionResponse {
            instance_id,
            grade: prior.grade.clone(),
            event: prior.event.clone(),
            replayed: true,
            progress: view_of(&state, &record)?,
        }));
    }
    let instance = regenerate(&state, &record, &instance_id)?;
    let campaign = campaign_of(&state, &record)?;
    let result = grade(&instance, &req.answers)?;
    let (_, event) = award(&record.state, &instance, &result, campaign, state.now())?;
    state.commit(
        player,
        Payload::Submission {
            instance_id: instance_id.clone(),
            idempotency_key: req.idempotency_key,
            answers: req.answers,
            grade: result.clone(),
            event: event.clone(),
        },
    )?;
    let record = record_of(&state, player)?;
    Ok(Json(SubmissionResponse { instance_id, grade: result, event, replayed: false, progress: view_of(&state, &record)? }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvanceResponse {
    pub event: AwardEvent,
    pub progress: PlayerView,
}

async fn advance_player(State(state): State<SharedState>, headers: HeaderMap, Path(id): Path<String>) -> ApiResult<Json<AdvanceResponse>> {
    let claims = authenticate(&state, &headers)?;
    require_student(&claims)?;
    authorize(&claims, &id)?;
    let lock = state.player_lock(&id);
    let _guard = lock.lock().await;
    let record = record_of(&state, &id)?;
    let campaign = campaign_of(&state, &record)?;
    let (_, event) = advance(&record.state, campaign, state.now())?;
    state.commit(&id, Payload::Advance { event: event.clone() })?;
    let record = record_of(&state, &id)?;
    Ok(Json(AdvanceResponse { event, progress: view_of(&state, &record)? }))
}

#[derive(Debug, Deserialize)]
struct GradebookQuery {
    campaign: Option<String>,
    today: Option<NaiveDate>,
}

async fn gradebook(State(state): State<SharedState>, headers: HeaderMap, Query(query): Query<GradebookQuery>) -> ApiResult<Response> {
    let claims = authenticate(&state, &headers)?;
    if claims.role != Role::Instructor {
        return Err(ApiError::new(StatusCode::FORBIDDEN, "forbidden", "gradebook needs an instructor token"));
    }
    let campaign_id = query
        .campaign
        .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "bad_request", "query parameter `campaign` is required"))?;
    let campaign = state.catalog.campaign(&campaign_id)?;
    let players: Vec<_> = {
        let store = state.store.read().expect("store lock");
        store.players.values().filter(|p| p.state.campaign == campaign.id).map(|p| p.state.clone()).collect()
    };
    let today = query.today.unwrap_or_else(|| state.now().date_naive());
    let csv = export_gradebook(&players, campaign, &state.catalog.taxonomy, today)?;
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], csv).into_response())
}
