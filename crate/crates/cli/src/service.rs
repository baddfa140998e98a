//! Local HTTP review service over one fused session.
//!
//! Reads take a read lock on the state and never see a half-applied edit.
//! Corrections and refusion are serialized by `writer`; while a refusion runs,
//! corrections are refused with 409 instead of queueing behind it.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::{Mutex, RwLock};
use trajlab::fuse::{apply_correction, apply_corrections, Anomaly, Correction, Sample, Segment, Trajectory3D};
use trajlab::pipeline::{export, fuse_session, ExportParams, PipelineError, Session};
use trajlab::stats::session_stats;

struct SessionState {
    /// Fusion output the log is replayed on.
    base: Vec<Trajectory3D>,
    log: Vec<Correction>,
    current: Vec<Trajectory3D>,
}

pub struct AppState {
    session: Session,
    workers: usize,
    state: RwLock<SessionState>,
    writer: Mutex<()>,
    refusing: AtomicBool,
}

impl AppState {
    /// Loads the fused artifact and replays the persisted correction log.
    pub fn open(session: Session, workers: usize) -> Result<Self, PipelineError> {
        let base = session.load_fused()?.trajectories;
        let log = session.load_corrections()?;
        let current = apply_corrections(base.clone(), &log)?;
        Ok(Self {
            session,
            workers,
            state: RwLock::new(SessionState { base, log, current }),
            writer: Mutex::new(()),
            refusing: AtomicBool::new(false),
        })
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/session", get(get_session))
        .route("/api/trajectories", get(get_trajectories))
        .route("/api/anomalies", get(get_anomalies))
        .route("/api/corrections", post(post_correction))
        .route("/api/refuse", post(post_refuse))
        .route("/api/export", get(get_export))
        .with_state(state)
}

pub struct ApiError {
    status: StatusCode,
    code: String,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            code: code.to_string(),
            message: message.into(),
        }
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        let status = if e.exit_code() == 2 {
            StatusCode::INTERNAL_SERVER_ERROR
        } else {
            StatusCode::BAD_REQUEST
        };
        Self::new(status, e.code(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "code": self.code, "message": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn export_params(session: &Session, fps: Option<f64>) -> ExportParams {
    ExportParams {
        native_fps: session.manifest.native_fps,
        output_fps: fps.unwrap_or(session.manifest.output_fps),
        smooth_window: None,
    }
}

async fn get_session(State(app): State<Arc<AppState>>) -> ApiResult<serde_json::Value> {
    let st = app.state.read().await;
    let out = export(
        &app.session.manifest.session,
        &st.base,
        &st.log,
        &export_params(&app.session, None),
    )?;
    Ok(Json(json!({
        "manifest": app.session.manifest,
        "stats": session_stats(&out.file, Some(&out.meta)),
        "corrections": st.log.len(),
    })))
}

#[derive(Debug, Deserialize)]
struct Window {
    from: Option<i64>,
    to: Option<i64>,
}

#[derive(Debug, Serialize)]
struct TrajectoryView<'a> {
    id: &'a str,
    verified: bool,
    corrections: u32,
    samples: Vec<&'a Sample>,
    segments: Vec<&'a Segment>,
    flags: Vec<&'a Anomaly>,
}

async fn get_trajectories(State(app): State<Arc<AppState>>, Query(w): Query<Window>) -> Response {
    let (from, to) = (w.from.unwrap_or(i64::MIN), w.to.unwrap_or(i64::MAX));
    let st = app.state.read().await;
    let views: Vec<TrajectoryView> = st
        .current
        .iter()
        .filter(|t| t.first_frame() <= to && t.last_frame() >= from)
        .map(|t| TrajectoryView {
            id: t.id(),
            verified: t.verified(),
            corrections: t.corrections(),
            samples: t.samples().iter().filter(|s| s.frame >= from && s.frame <= to).collect(),
            segments: t.segments().iter().filter(|s| s.start <= to && s.end >= from).collect(),
            flags: t.flags().iter().filter(|a| a.start <= to && a.end >= from).collect(),
        })
        .collect();
    Json(json!({ "trajectories": views })).into_response()
}

async fn get_anomalies(State(app): State<Arc<AppState>>) -> Response {
    let st = app.state.read().await;
    let list: Vec<serde_json::Value> = st
        .current
        .iter()
        .flat_map(|t| t.flags().iter().map(move |a| json!({ "id": t.id(), "anomaly": a })))
        .collect();
    Json(json!({ "anomalies": list })).into_response()
}

fn refusing(flag: &AtomicBool) -> Result<(), ApiError> {
    if flag.load(Ordering::SeqCst) {
        return Err(ApiError::new(StatusCode::CONFLICT, "RefuseInProgress", "fusion is being re-run"));
    }
    Ok(())
}

async fn post_correction(State(app): State<Arc<AppState>>, body: String) -> ApiResult<serde_json::Value> {
    let correction: Correction = serde_json::from_str(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "Parse", format!("invalid correction: {e}")))?;
    refusing(&app.refusing)?;
    let _w = app.writer.lock().await;
    refusing(&app.refusing)?;
    let (mut next, mut log) = {
        let st = app.state.read().await;
        (st.current.clone(), st.log.clone())
    };
    apply_correction(&mut next, &correction)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.code(), e.to_string()))?;
    next.sort_by(|a, b| a.id().cmp(b.id()));
    log.push(correction);
    app.session.save_corrections(&log)?;
    let mut st = app.state.write().await;
    st.current = next;
    st.log = log;
    Ok(Json(json!({ "corrections": st.log.len(), "trajectories": st.current.len() })))
}

/// Re-runs fusion from the session inputs and replays the log on the result.
async fn post_refuse(State(app): State<Arc<AppState>>) -> ApiResult<serde_json::Value> {
    let _w = app.writer.lock().await;
    app.refusing.store(true, Ordering::SeqCst);
    let worker = app.clone();
    let result = tokio::task::spawn_blocking(move || -> Result<_, PipelineError> {
        let s = &worker.session;
        let (fused, _) = fuse_session(s, &s.load_plane()?, &s.load_alignment()?, worker.workers)?;
        Ok(fused.trajectories)
    })
    .await;
    let outcome = match result {
        Ok(Ok(base)) => {
            let mut st = app.state.write().await;
            match apply_corrections(base.clone(), &st.log) {
                Ok(current) => {
                    st.base = base;
                    st.current = current;
                    Ok(Json(json!({ "corrections": st.log.len(), "trajectories": st.current.len() })))
                }
                Err(e) => Err(PipelineError::from(e).into()),
            }
        }
        Ok(Err(e)) => Err(e.into()),
        Err(e) => Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string())),
    };
    app.refusing.store(false, Ordering::SeqCst);
    outcome
}

#[derive(Debug, Deserialize)]
struct ExportQuery {
    fps: Option<f64>,
}

async fn get_export(State(app): State<Arc<AppState>>, Query(q): Query<ExportQuery>) -> ApiResult<serde_json::Value> {
    let st = app.state.read().await;
    let out = export(
        &app.session.manifest.session,
        &st.base,
        &st.log,
        &export_params(&app.session, q.fps),
    )?;
    Ok(Json(json!({ "csv": out.csv()?, "meta": out.meta })))
}
