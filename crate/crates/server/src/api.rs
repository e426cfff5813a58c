//! HTTP routes over a shared base station.
//!
//! | method | path                  | body / query              | response                   |
//! |--------|-----------------------|---------------------------|----------------------------|
//! | GET    | `/runs`               |                           | `[RunSummary]`             |
//! | POST   | `/runs`               | [`StartRun`]              | `202 {"run_id"}`           |
//! | GET    | `/runs/{id}`          |                           | `RunRecord`                |
//! | POST   | `/runs/{id}/stop`     |                           | `202 {"run_id"}`           |
//! | GET    | `/live/state`         |                           | [`LiveState`]              |
//! | GET    | `/live/frames`        | `?from=<index>`           | SSE stream of `FrameEntry` |
//! | POST   | `/commands`           | `CommandRequest`          | `202 {"id"}`               |
//! | GET    | `/commands`           |                           | `[CommandEntry]`           |
//! | GET    | `/commands/{id}`      |                           | `CommandEntry`             |
//! | GET    | `/reports`            |                           | `[ArtifactReport]`         |
//!
//! Errors are `{"error": "..."}` with 400 (bad input), 404 (unknown id) or
//! 409 (no active run, or a run already active).

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream};
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::convert::Infallible;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;
use tunnel_blimp::basestation::BaseStationError;
use tunnel_blimp::harness::{run_scenario_with, RunHooks, ScenarioConfig};
use tunnel_blimp::runlog::{CommandEntry, FrameEntry, RunRecord};
use tunnel_blimp::{BaseStation, CommandRequest};

/// How often the frame stream looks for new frames.
const FRAME_POLL: Duration = Duration::from_millis(100);

#[derive(Clone)]
pub struct AppState {
    shared: Arc<Shared>,
}

struct Shared {
    station: Arc<BaseStation>,
    runs_dir: Option<PathBuf>,
    cancel: Mutex<Option<(String, Arc<AtomicBool>)>>,
}

impl AppState {
    /// `runs_dir`, when set, receives `<run_id>.jsonl` for every finished run.
    pub fn new(station: Arc<BaseStation>, runs_dir: Option<PathBuf>) -> Self {
        Self {
            shared: Arc::new(Shared {
                station,
                runs_dir,
                cancel: Mutex::new(None),
            }),
        }
    }

    pub fn station(&self) -> &Arc<BaseStation> {
        &self.shared.station
    }

    /// Starts `config` on a background thread paced at `speed` simulated
    /// seconds per second. Returns the run id once the run is registered.
    pub fn launch(
        &self,
        config: ScenarioConfig,
        speed: Option<f64>,
        run_id: Option<String>,
    ) -> Result<(String, std::thread::JoinHandle<Option<RunRecord>>), ApiError> {
        config.validate().map_err(|e| ApiError::bad_request(e.to_string()))?;
        let station = self.shared.station.clone();
        if let Some(active) = station.active_run_id() {
            return Err(ApiError::conflict(format!("run {active} is active")));
        }
        let base_id = run_id.unwrap_or_else(|| format!("{}-s{}", config.name, config.seed));
        let id = unique_id(&station, &base_id);
        let cancel = Arc::new(AtomicBool::new(false));
        *self.shared.cancel.lock().unwrap_or_else(|e| e.into_inner()) = Some((id.clone(), cancel.clone()));
        let hooks = RunHooks {
            station: Some(station.clone()),
            realtime: speed,
            cancel: Some(cancel),
            run_id: Some(id.clone()),
        };
        let runs_dir = self.shared.runs_dir.clone();
        let thread_id = id.clone();
        let handle = std::thread::spawn(move || match run_scenario_with(&config, hooks) {
            Ok(record) => {
                if let Some(dir) = runs_dir {
                    let path = dir.join(format!("{thread_id}.jsonl"));
                    if let Err(e) = record.save(&path) {
                        eprintln!("could not save {}: {e}", path.display());
                    }
                }
                Some(record)
            }
            Err(e) => {
                eprintln!("run {thread_id} failed: {e}");
                None
            }
        });
        // The run registers itself on its first step; wait for it so callers
        // see it as active straight away.
        for _ in 0..200 {
            if station.active_run_id().as_deref() == Some(id.as_str()) || handle.is_finished() {
                break;
            }
            std::thread::sleep(Duration::from_millis(5));
        }
        Ok((id, handle))
    }
}

fn unique_id(station: &BaseStation, base: &str) -> String {
    let taken = |id: &str| station.run(id).is_some();
    if !taken(base) {
        return base.to_string();
    }
    (2..)
        .map(|n| format!("{base}-{n}"))
        .find(|id| !taken(id))
        .expect("unbounded search")
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            message: message.into(),
        }
    }

    fn conflict(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::CONFLICT,
            message: message.into(),
        }
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::NOT_FOUND,
            message: message.into(),
        }
    }

    pub fn status(&self) -> StatusCode {
        self.status
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ({})", self.message, self.status)
    }
}

impl std::error::Error for ApiError {}

impl From<BaseStationError> for ApiError {
    fn from(e: BaseStationError) -> Self {
        match e {
            BaseStationError::InvalidCommand(_) => Self::bad_request(e.to_string()),
            _ => Self::conflict(e.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

/// Body of `POST /runs`. Exactly one of `config` and `config_path` is given.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartRun {
    /// Inline scenario in the same shape as a scenario file.
    pub config: Option<ScenarioConfig>,
    /// Path to a scenario file, relative to the server's working directory.
    pub config_path: Option<PathBuf>,
    /// Overrides the scenario seed.
    pub seed: Option<u64>,
    /// Simulated seconds per wall-clock second; as fast as possible if absent.
    pub speed: Option<f64>,
    pub run_id: Option<String>,
}

/// Body of `GET /live/state`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LiveState {
    pub run_id: Option<String>,
    /// Simulation clock at the station (s).
    pub clock: f64,
    pub latest_frame: Option<FrameEntry>,
    /// No command is waiting for an acknowledgment.
    pub commands_settled: bool,
}

#[derive(Debug, Deserialize)]
struct FramesQuery {
    from: Option<usize>,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/runs", get(list_runs).post(start_run))
        .route("/runs/{id}", get(get_run))
        .route("/runs/{id}/stop", post(stop_run))
        .route("/live/state", get(live_state))
        .route("/live/frames", get(live_frames))
        .route("/commands", get(list_commands).post(issue_command))
        .route("/commands/{id}", get(get_command))
        .route("/reports", get(reports))
        .with_state(state)
}

async fn list_runs(State(s): State<AppState>) -> impl IntoResponse {
    Json(s.station().runs())
}

async fn get_run(State(s): State<AppState>, Path(id): Path<String>) -> Result<Json<RunRecord>, ApiError> {
    s.station()
        .run(&id)
        .map(Json)
        .ok_or_else(|| ApiError::not_found(format!("no run {id}")))
}

async fn start_run(State(s): State<AppState>, Json(req): Json<StartRun>) -> Result<Response, ApiError> {
    let mut config = match (req.config, req.config_path) {
        (Some(c), None) => c,
        (None, Some(p)) => {
            ScenarioConfig::load(&p).map_err(|e| ApiError::bad_request(format!("{}: {e}", p.display())))?
        }
        _ => return Err(ApiError::bad_request("give exactly one of config and config_path")),
    };
    if let Some(seed) = req.seed {
        config.seed = seed;
    }
    if req.speed.is_some_and(|v| !(v > 0.0)) {
        return Err(ApiError::bad_request("speed must be positive"));
    }
    let (run_id, speed) = (req.run_id, req.speed);
    let state = s.clone();
    let (id, _) = tokio::task::spawn_blocking(move || state.launch(config, speed, run_id))
        .await
        .map_err(|e| ApiError::bad_request(e.to_string()))??;
    Ok((StatusCode::ACCEPTED, Json(json!({ "run_id": id }))).into_response())
}

async fn stop_run(State(s): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let guard = s.shared.cancel.lock().unwrap_or_else(|e| e.into_inner());
    match guard.as_ref() {
        Some((active, flag)) if *active == id && s.station().active_run_id().as_deref() == Some(id.as_str()) => {
            flag.store(true, Ordering::Relaxed);
            Ok((StatusCode::ACCEPTED, Json(json!({ "run_id": id }))).into_response())
        }
        _ => Err(ApiError::conflict(format!("run {id} is not running"))),
    }
}

async fn live_state(State(s): State<AppState>) -> Json<LiveState> {
    let st = s.station();
    Json(LiveState {
        run_id: st.active_run_id(),
        clock: st.clock(),
        latest_frame: st.latest_frame(),
        commands_settled: st.commands_settled(),
    })
}

/// Pushes every stored frame of the active run as a `frame` event, starting
/// at index `from`. A `run` event announces each newly active run.
async fn live_frames(
    State(s): State<AppState>,
    Query(q): Query<FramesQuery>,
) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    let start = (s, None::<String>, q.from.unwrap_or(0), Vec::<Event>::new());
    let events = stream::unfold(start, |(s, mut run, mut next, mut backlog)| async move {
        loop {
            if let Some(ev) = backlog.pop() {
                return Some((Ok(ev), (s, run, next, backlog)));
            }
            let active = s.station().active_run_id();
            if active.is_some() && active != run {
                if run.is_some() {
                    next = 0;
                }
                run = active.clone();
                let id = run.clone().unwrap_or_default();
                backlog.push(Event::default().event("run").data(id));
                continue;
            }
            if let Some(id) = &run {
                let fresh = s.station().frames_since(id, next);
                if !fresh.is_empty() {
                    next += fresh.len();
                    // The backlog pops from the back.
                    backlog = fresh
                        .iter()
                        .rev()
                        .map(|f| Event::default().event("frame").json_data(f).expect("frames serialize"))
                        .collect();
                    continue;
                }
            }
            tokio::time::sleep(FRAME_POLL).await;
        }
    });
    Sse::new(events).keep_alive(KeepAlive::default())
}

async fn issue_command(State(s): State<AppState>, Json(req): Json<CommandRequest>) -> Result<Response, ApiError> {
    let id = s.station().issue_command_now(req)?;
    Ok((StatusCode::ACCEPTED, Json(json!({ "id": id }))).into_response())
}

async fn list_commands(State(s): State<AppState>) -> Result<Json<Vec<CommandEntry>>, ApiError> {
    Ok(Json(s.station().with_active_run(|r| r.commands.clone())?))
}

async fn get_command(State(s): State<AppState>, Path(id): Path<u64>) -> Result<Json<CommandEntry>, ApiError> {
    s.station()
        .command(id)
        .map(Json)
        .ok_or_else(|| ApiError::not_found(format!("no command {id}")))
}

async fn reports(State(s): State<AppState>) -> impl IntoResponse {
    Json(s.station().reports())
}
