//! REST routes over the session engine. Long operations run as jobs:
//! the POST answers 202 with a job record to poll at `/jobs/{id}`, or
//! waits for the outcome when called with `?wait=true`.

use std::collections::HashMap;
use std::future::Future;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::Semaphore;
use tracing::{info, warn};

use scideator::domain::{Classification, Facet, FacetKind};
use scideator::ideas::FacetSelection;
use scideator::novelty::Variant;
use scideator::session::{
    Engine, EngineError, EventKind, Mutation, PaperInput, SessionDir, SessionEvent, SessionState, SessionStore,
    StoreError, MAX_INPUT_PAPERS,
};

/// A JSON error body with the status it maps to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub status: u16,
    pub kind: String,
    pub message: String,
    /// True when an upstream failure left some work committed.
    pub partial: bool,
}

impl ApiError {
    fn new(status: StatusCode, kind: &str, message: impl Into<String>) -> Self {
        ApiError { status: status.as_u16(), kind: kind.into(), message: message.into(), partial: false }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid", message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, "conflict", message)
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Invalid(m) => ApiError::invalid(m),
            EngineError::NotFound(m) => ApiError::not_found(m),
            EngineError::Conflict(m) => ApiError::conflict(m),
            EngineError::Upstream { message, partial } => {
                ApiError { partial, ..Self::new(StatusCode::BAD_GATEWAY, "upstream", message) }
            }
            EngineError::Internal(m) => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", m),
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        EngineError::from(e).into()
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(json!({ "error": self }))).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;
type JobOutcome = Result<(StatusCode, Value), ApiError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Queued,
    Running,
    Succeeded,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: String,
    pub kind: String,
    pub session_id: Option<String>,
    pub status: JobStatus,
    pub result: Option<Value>,
    pub error: Option<ApiError>,
    #[serde(skip)]
    code: u16,
}

/// One live session: current state, a writer lock that serializes
/// mutations, and a flag for an idea round in flight.
pub struct Slot {
    state: tokio::sync::RwLock<SessionState>,
    writer: tokio::sync::Mutex<()>,
    round: AtomicBool,
    dir: SessionDir,
}

pub struct AppState {
    engine: Arc<Engine>,
    store: SessionStore,
    sessions: RwLock<HashMap<String, Arc<Slot>>>,
    jobs: Mutex<HashMap<String, Job>>,
    job_seq: AtomicU64,
    workers: Arc<Semaphore>,
}

impl AppState {
    /// Loads every session already under the store root.
    pub fn open(engine: Engine, store: SessionStore, workers: usize) -> Result<Arc<Self>, StoreError> {
        let sessions = store
            .load_all()?
            .into_iter()
            .map(|s| (s.session_id.clone(), Arc::new(slot(s, &store))))
            .collect::<HashMap<_, _>>();
        info!(sessions = sessions.len(), root = %store.root().display(), "sessions loaded");
        Ok(Arc::new(AppState {
            engine: Arc::new(engine),
            store,
            sessions: RwLock::new(sessions),
            jobs: Mutex::new(HashMap::new()),
            job_seq: AtomicU64::new(0),
            workers: Arc::new(Semaphore::new(workers.max(1))),
        }))
    }

    fn slot(&self, session_id: &str) -> Result<Arc<Slot>, ApiError> {
        self.sessions
            .read()
            .unwrap()
            .get(session_id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("unknown session `{session_id}`")))
    }

    async fn slot_for_idea(&self, idea_id: &str) -> Result<Arc<Slot>, ApiError> {
        let mut slots: Vec<(String, Arc<Slot>)> =
            self.sessions.read().unwrap().iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        slots.sort_by(|a, b| a.0.cmp(&b.0));
        for (_, s) in slots {
            if s.state.read().await.ideas.contains_key(idea_id) {
                return Ok(s);
            }
        }
        Err(ApiError::not_found(format!("unknown idea `{idea_id}`")))
    }

    /// Runs `op` on a snapshot under the writer lock and commits its result.
    async fn mutate<F, Fut>(&self, slot: &Slot, op: F) -> Result<(SessionEvent, SessionState), ApiError>
    where
        F: FnOnce(Arc<Engine>, Arc<SessionState>) -> Fut,
        Fut: Future<Output = Result<Mutation, EngineError>>,
    {
        let _writer = slot.writer.lock().await;
        let snapshot = Arc::new(slot.state.read().await.clone());
        let mutation = op(self.engine.clone(), snapshot.clone()).await?;
        let mut next = (*snapshot).clone();
        let event = self.engine.commit(&mut next, mutation, Some(&slot.dir))?;
        *slot.state.write().await = next.clone();
        Ok((event, next))
    }

    fn job(&self, id: &str) -> Option<Job> {
        self.jobs.lock().unwrap().get(id).cloned()
    }

    fn set_job(&self, id: &str, f: impl FnOnce(&mut Job)) {
        if let Some(j) = self.jobs.lock().unwrap().get_mut(id) {
            f(j);
        }
    }
}

fn slot(state: SessionState, store: &SessionStore) -> Slot {
    let dir = store.dir(&state.session_id);
    Slot { state: tokio::sync::RwLock::new(state), writer: Default::default(), round: AtomicBool::new(false), dir }
}

#[derive(Debug, Default, Deserialize)]
pub struct WaitParam {
    #[serde(default)]
    wait: bool,
}

/// Queues `work` on the worker pool. With `wait`, answers with the outcome.
async fn submit<F>(app: &Arc<AppState>, kind: &str, session_id: Option<String>, wait: bool, work: F) -> ApiResult
where
    F: Future<Output = JobOutcome> + Send + 'static,
{
    let id = format!("job-{}", app.job_seq.fetch_add(1, Ordering::SeqCst) + 1);
    let job = Job {
        id: id.clone(),
        kind: kind.into(),
        session_id,
        status: JobStatus::Queued,
        result: None,
        error: None,
        code: 0,
    };
    app.jobs.lock().unwrap().insert(id.clone(), job.clone());
    let runner = app.clone();
    let job_id = id.clone();
    let handle = tokio::spawn(async move {
        let _permit = runner.workers.clone().acquire_owned().await.expect("semaphore open");
        runner.set_job(&job_id, |j| j.status = JobStatus::Running);
        let outcome = work.await;
        runner.set_job(&job_id, |j| match outcome {
            Ok((code, value)) => {
                j.status = JobStatus::Succeeded;
                j.code = code.as_u16();
                j.result = Some(value);
            }
            Err(e) => {
                warn!(job = %j.id, kind = %j.kind, error = %e.message, "job failed");
                j.status = JobStatus::Failed;
                j.code = e.status;
                j.error = Some(e);
            }
        });
    });
    if !wait {
        let location = format!("/jobs/{id}");
        return Ok((StatusCode::ACCEPTED, [(header::LOCATION, location)], Json(job)).into_response());
    }
    if handle.await.is_err() {
        return Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", "job panicked"));
    }
    let done = app.job(&id).expect("job recorded");
    match (done.result, done.error) {
        (Some(v), _) => Ok((StatusCode::from_u16(done.code).unwrap_or(StatusCode::OK), Json(v)).into_response()),
        (None, Some(e)) => Err(e),
        (None, None) => Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", "job left no outcome")),
    }
}

fn body<T: DeserializeOwned + Default>(bytes: &Bytes) -> Result<T, ApiError> {
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(bytes).map_err(|e| ApiError::invalid(format!("request body: {e}")))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

pub fn router(app: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/facets", get(list_facets).post(add_facet))
        .route("/sessions/{id}/facets/generate", post(generate_facets))
        .route("/sessions/{id}/ideas", post(add_idea))
        .route("/sessions/{id}/ideas/generate", post(generate_ideas))
        .route("/ideas/{id}", get(get_idea).delete(delete_idea))
        .route("/ideas/{id}/novelty", post(assess).patch(override_novelty))
        .route("/ideas/{id}/suggestions", post(suggestions))
        .route("/ideas/{id}/save", post(save_idea))
        .route("/jobs/{id}", get(get_job))
        .with_state(app)
}

async fn health(State(app): State<Arc<AppState>>) -> Json<Value> {
    Json(json!({ "status": "ok", "sessions": app.sessions.read().unwrap().len() }))
}

#[derive(Debug, Default, Deserialize)]
struct CreateBody {
    #[serde(default)]
    topic: String,
    #[serde(default)]
    papers: Vec<PaperInput>,
}

async fn create_session(State(app): State<Arc<AppState>>, Query(q): Query<WaitParam>, raw: Bytes) -> ApiResult {
    let req: CreateBody = body(&raw)?;
    if req.topic.trim().is_empty() {
        return Err(ApiError::invalid("topic is empty"));
    }
    if req.papers.is_empty() || req.papers.len() > MAX_INPUT_PAPERS {
        return Err(ApiError::invalid(format!("expected 1 to {MAX_INPUT_PAPERS} input papers, got {}", req.papers.len())));
    }
    let runner = app.clone();
    submit(&app, "create_session", None, q.wait, async move {
        let (state, event) = runner.engine.create(&req.topic, &req.papers).await?;
        if let Ok(existing) = runner.slot(&state.session_id) {
            return Ok((StatusCode::OK, to_value(&*existing.state.read().await)));
        }
        let slot = slot(state, &runner.store);
        slot.dir.append(&event, &*slot.state.read().await)?;
        let value = to_value(&*slot.state.read().await);
        let id = value["session_id"].as_str().unwrap_or_default().to_string();
        runner.sessions.write().unwrap().entry(id).or_insert_with(|| Arc::new(slot));
        Ok((StatusCode::CREATED, value))
    })
    .await
}

async fn get_session(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let slot = app.slot(&id)?;
    let state = slot.state.read().await;
    Ok(Json(&*state).into_response())
}

async fn list_facets(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let slot = app.slot(&id)?;
    let state = slot.state.read().await;
    let facets: Vec<&Facet> = state.facets.values().collect();
    Ok(Json(json!({ "session_id": state.session_id, "revision": state.revision, "facets": facets })).into_response())
}

#[derive(Debug, Deserialize)]
struct AddFacetBody {
    kind: FacetKind,
    text: String,
    #[serde(default)]
    definition: String,
}

impl Default for AddFacetBody {
    fn default() -> Self {
        AddFacetBody { kind: FacetKind::Purpose, text: String::new(), definition: String::new() }
    }
}

async fn add_facet(State(app): State<Arc<AppState>>, Path(id): Path<String>, raw: Bytes) -> ApiResult {
    let req: AddFacetBody = body(&raw)?;
    let slot = app.slot(&id)?;
    let (event, _) = app
        .mutate(&slot, |engine, s| async move { engine.add_facet(&s, req.kind, &req.text, &req.definition) })
        .await?;
    let EventKind::FacetAdded { facet } = event.kind else { unreachable!("add_facet emits FacetAdded") };
    Ok((StatusCode::CREATED, Json(facet)).into_response())
}

#[derive(Debug, Default, Deserialize)]
struct GenerateFacetsBody {
    #[serde(default)]
    query: Option<String>,
}

async fn generate_facets(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<WaitParam>,
    raw: Bytes,
) -> ApiResult {
    let req: GenerateFacetsBody = body(&raw)?;
    let slot = app.slot(&id)?;
    let runner = app.clone();
    submit(&app, "generate_facets", Some(id), q.wait, async move {
        let (event, state) = runner
            .mutate(&slot, |engine, s| async move { engine.generate_facets(&s, req.query.as_deref()).await })
            .await?;
        let EventKind::FacetsGenerated { papers, facets, .. } = event.kind else { unreachable!() };
        Ok((StatusCode::OK, json!({ "revision": state.revision, "papers": papers, "facets": facets })))
    })
    .await
}

/// Clears the round flag when the round ends, however it ends.
struct RoundGuard(Arc<Slot>);

impl Drop for RoundGuard {
    fn drop(&mut self) {
        self.0.round.store(false, Ordering::SeqCst);
    }
}

async fn generate_ideas(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<WaitParam>,
    raw: Bytes,
) -> ApiResult {
    let selection: FacetSelection = body(&raw)?;
    let slot = app.slot(&id)?;
    selection.validate(&slot.state.read().await.facets).map_err(|e| ApiError::from(EngineError::from(e)))?;
    if slot.round.swap(true, Ordering::SeqCst) {
        return Err(ApiError::conflict(format!("an idea round is already running for session `{id}`")));
    }
    let guard = RoundGuard(slot.clone());
    let runner = app.clone();
    submit(&app, "generate_ideas", Some(id), q.wait, async move {
        let _guard = guard;
        let (event, state) = runner
            .mutate(&slot, |engine, s| async move { engine.generate_ideas(&s, &selection).await })
            .await?;
        let EventKind::IdeasGenerated { round, ideas } = event.kind else { unreachable!() };
        Ok((StatusCode::OK, json!({ "revision": state.revision, "round": round, "ideas": ideas })))
    })
    .await
}

#[derive(Debug, Default, Deserialize)]
struct AddIdeaBody {
    #[serde(default)]
    text: String,
}

async fn add_idea(State(app): State<Arc<AppState>>, Path(id): Path<String>, Query(q): Query<WaitParam>, raw: Bytes) -> ApiResult {
    let req: AddIdeaBody = body(&raw)?;
    if req.text.trim().is_empty() {
        return Err(ApiError::invalid("idea text is empty"));
    }
    let slot = app.slot(&id)?;
    let runner = app.clone();
    submit(&app, "add_idea", Some(id), q.wait, async move {
        let (event, _) = runner.mutate(&slot, |engine, s| async move { engine.add_idea(&s, &req.text).await }).await?;
        let EventKind::IdeaAdded { idea, facets } = event.kind else { unreachable!() };
        Ok((StatusCode::CREATED, json!({ "idea": idea, "facets": facets })))
    })
    .await
}

async fn get_idea(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let slot = app.slot_for_idea(&id).await?;
    let state = slot.state.read().await;
    Ok(Json(json!({
        "session_id": state.session_id,
        "idea": state.ideas.get(&id),
        "assessment": state.assessments.get(&id),
    }))
    .into_response())
}

#[derive(Debug, Default, Deserialize)]
struct AssessBody {
    #[serde(default)]
    variant: Option<Variant>,
}

async fn assess(State(app): State<Arc<AppState>>, Path(id): Path<String>, Query(q): Query<WaitParam>, raw: Bytes) -> ApiResult {
    let req: AssessBody = body(&raw)?;
    let slot = app.slot_for_idea(&id).await?;
    let session_id = slot.state.read().await.session_id.clone();
    let runner = app.clone();
    submit(&app, "assess_novelty", Some(session_id), q.wait, async move {
        let variant = req.variant.unwrap_or(Variant::Complete);
        let idea_id = id.clone();
        let (_, state) = runner.mutate(&slot, |engine, s| async move { engine.assess(&s, &idea_id, variant).await }).await?;
        Ok((StatusCode::OK, to_value(&state.assessments[&id])))
    })
    .await
}

#[derive(Debug, Deserialize)]
struct OverrideBody {
    classification: Classification,
    #[serde(default)]
    reason: String,
}

impl Default for OverrideBody {
    fn default() -> Self {
        OverrideBody { classification: Classification::Novel, reason: String::new() }
    }
}

async fn override_novelty(State(app): State<Arc<AppState>>, Path(id): Path<String>, raw: Bytes) -> ApiResult {
    if raw.iter().all(u8::is_ascii_whitespace) {
        return Err(ApiError::invalid("body must give a classification"));
    }
    let req: OverrideBody = body(&raw)?;
    let slot = app.slot_for_idea(&id).await?;
    let idea_id = id.clone();
    let (_, state) = app
        .mutate(&slot, |engine, s| async move { engine.override_novelty(&s, &idea_id, req.classification, &req.reason) })
        .await?;
    Ok(Json(&state.assessments[&id]).into_response())
}

#[derive(Debug, Default, Deserialize)]
struct SuggestionsBody {
    /// Index of a suggestion to add to the idea list.
    #[serde(default)]
    adopt: Option<usize>,
}

async fn suggestions(State(app): State<Arc<AppState>>, Path(id): Path<String>, Query(q): Query<WaitParam>, raw: Bytes) -> ApiResult {
    let req: SuggestionsBody = body(&raw)?;
    let slot = app.slot_for_idea(&id).await?;
    let (session_id, existing) = {
        let state = slot.state.read().await;
        let a = state.assessment(&id).map_err(|e| ApiError::from(EngineError::from(e)))?;
        if a.effective_classification() != Classification::NotNovel {
            return Err(ApiError::conflict(format!("idea `{id}` is classified novel")));
        }
        (state.session_id.clone(), a.suggestions.clone())
    };
    if let Some(index) = req.adopt {
        let idea_id = id.clone();
        let (event, _) =
            app.mutate(&slot, |engine, s| async move { engine.adopt_suggestion(&s, &idea_id, index) }).await?;
        let EventKind::IdeaAdded { idea, .. } = event.kind else { unreachable!() };
        return Ok((StatusCode::CREATED, Json(idea)).into_response());
    }
    if !existing.is_empty() {
        return Ok(Json(json!({ "idea_id": id, "suggestions": existing })).into_response());
    }
    let runner = app.clone();
    submit(&app, "suggestions", Some(session_id), q.wait, async move {
        let _writer = slot.writer.lock().await;
        let snapshot = slot.state.read().await.clone();
        let mutation = runner.engine.suggestions(&snapshot, &id).await?;
        let mut next = snapshot;
        if let Some(m) = mutation {
            runner.engine.commit(&mut next, m, Some(&slot.dir))?;
            *slot.state.write().await = next.clone();
        }
        Ok((StatusCode::OK, json!({ "idea_id": id, "suggestions": next.assessments[&id].suggestions })))
    })
    .await
}

#[derive(Debug, Deserialize)]
struct SaveBody {
    #[serde(default = "yes")]
    saved: bool,
}

fn yes() -> bool {
    true
}

impl Default for SaveBody {
    fn default() -> Self {
        SaveBody { saved: true }
    }
}

async fn save_idea(State(app): State<Arc<AppState>>, Path(id): Path<String>, raw: Bytes) -> ApiResult {
    let req: SaveBody = body(&raw)?;
    let slot = app.slot_for_idea(&id).await?;
    let idea_id = id.clone();
    let (_, state) = app.mutate(&slot, |engine, s| async move { engine.save_idea(&s, &idea_id, req.saved) }).await?;
    Ok(Json(&state.ideas[&id]).into_response())
}

async fn delete_idea(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let slot = app.slot_for_idea(&id).await?;
    app.mutate(&slot, |engine, s| async move { engine.delete_idea(&s, &id) }).await?;
    Ok(StatusCode::NO_CONTENT.into_response())
}

async fn get_job(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let job = app.job(&id).ok_or_else(|| ApiError::not_found(format!("unknown job `{id}`")))?;
    Ok(Json(job).into_response())
}
