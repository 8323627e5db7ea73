//! Request handlers and the `/v1` router.

use std::collections::BTreeSet;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, FromRequest, Multipart, Path, Query, Request, State};
use axum::extract::rejection::QueryRejection;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use dataprep_core::cleaner::{ConstraintSet, DbscanConfig, IsolationForestConfig, LofConfig};
use dataprep_core::eda::{
    builtin_plot_rows, profile_column, profile_pair, recommend_plot, train_plot_svm, ColumnProfile,
    LinearSvmModel, SvmConfig,
};
use dataprep_core::pipeline::{
    constraints_from_json, detect_outliers, eda_summary, execute_plan, plan_for_bytes, CleaningPlan, Operation,
    Origin, OutlierDetector, PlanOptions, ReportOptions,
};
use dataprep_core::tabular::{to_csv_bytes, Dataset};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::ApiError;
use crate::session::{Artifacts, Clock, ServiceConfig, Session, SessionStore, SystemClock};

pub struct AppState {
    pub config: ServiceConfig,
    pub store: SessionStore,
    svm: LinearSvmModel,
}

impl AppState {
    pub fn new(config: ServiceConfig, clock: Arc<dyn Clock>) -> Self {
        let svm = train_plot_svm(&builtin_plot_rows(), &SvmConfig::default()).expect("bundled plot rows train");
        AppState {
            store: SessionStore::new(clock, config.idle_timeout),
            config,
            svm,
        }
    }
}

/// Router over a fresh state using the system clock.
pub fn app(config: ServiceConfig) -> Router {
    router(Arc::new(AppState::new(config, Arc::new(SystemClock))))
}

pub fn router(state: Arc<AppState>) -> Router {
    // room for multipart framing and a constraints part around the file
    let body_limit = state.config.max_upload_bytes.saturating_add(1 << 20);
    Router::new()
        .route("/v1/sessions", post(create_session))
        .route(
            "/v1/sessions/{key}",
            get(get_session).post(session_action).delete(delete_session),
        )
        .route("/v1/sessions/{id}/plan", get(get_plan))
        .route("/v1/sessions/{id}/profile", get(get_profile))
        .route("/v1/sessions/{id}/plot", get(get_plot))
        .route("/v1/sessions/{id}/outliers", get(get_outliers))
        .route("/v1/sessions/{id}/rows:remove", post(remove_rows))
        .route("/v1/sessions/{id}/plan/steps/{sid}", patch(patch_step))
        .route("/v1/sessions/{id}/export/{kind}", get(export))
        .fallback(|| async { ApiError::NotFound })
        .layer(DefaultBodyLimit::max(body_limit))
        .with_state(state)
}

type Shared = State<Arc<AppState>>;

fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(format!("request body: {e}")))
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> Result<T, ApiError> {
    q.map(|Query(v)| v).map_err(|e| ApiError::BadRequest(e.body_text()))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))
}

fn profiles(d: &Dataset) -> Vec<ColumnProfile> {
    d.columns().iter().filter_map(|c| profile_column(c).ok()).collect()
}

/// The input with every row named by a `RemoveRows` step taken out.
fn view_of(input: &Dataset, plan: &CleaningPlan) -> Dataset {
    let removed: BTreeSet<usize> = plan
        .steps
        .iter()
        .filter_map(|s| match &s.operation {
            Operation::RemoveRows { row_ids } => Some(row_ids.iter().copied()),
            _ => None,
        })
        .flatten()
        .collect();
    if removed.is_empty() {
        return input.clone();
    }
    let keep: Vec<usize> = input
        .row_ids()
        .iter()
        .enumerate()
        .filter(|(_, id)| !removed.contains(id))
        .map(|(p, _)| p)
        .collect();
    input.take_rows(&keep)
}

fn summary(s: &Session) -> Value {
    json!({
        "session_id": s.id,
        "version": s.version,
        "rows": s.dataset.row_count(),
        "columns": s.dataset.column_names(),
        "undo_depth": s.undo_len(),
        "finalized": s.artifacts.as_ref().is_some_and(|a| a.version == s.version),
        "plan": s.plan,
    })
}

// ---------------------------------------------------------------- upload

#[derive(Debug, Default, Deserialize)]
struct UploadQuery {
    seed: Option<u64>,
    target: Option<String>,
    delimiter: Option<char>,
}

/// Reads the upload, either a raw CSV body or a multipart form with a file
/// part and an optional `constraints` part.
async fn read_upload(req: Request, cap: usize) -> Result<(Vec<u8>, Option<String>), ApiError> {
    let multipart = req
        .headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("multipart/form-data"));
    if !multipart {
        let bytes = axum::body::to_bytes(req.into_body(), cap)
            .await
            .map_err(|_| ApiError::FileTooLarge { limit: cap })?;
        return Ok((bytes.to_vec(), None));
    }
    let bad = |e: axum::extract::multipart::MultipartError| ApiError::BadRequest(e.body_text());
    let mut form = Multipart::from_request(req, &())
        .await
        .map_err(|e| ApiError::BadRequest(e.body_text()))?;
    let (mut file, mut constraints) = (None, None);
    while let Some(mut field) = form.next_field().await.map_err(bad)? {
        let name = field.name().unwrap_or_default().to_string();
        let mut buf = Vec::new();
        while let Some(chunk) = field.chunk().await.map_err(bad)? {
            buf.extend_from_slice(&chunk);
            if buf.len() > cap {
                return Err(ApiError::FileTooLarge { limit: cap });
            }
        }
        if name == "constraints" {
            let text = String::from_utf8(buf).map_err(|_| ApiError::BadRequest("constraints are not UTF-8".into()))?;
            constraints = Some(text);
        } else if file.is_none() {
            file = Some(buf);
        }
    }
    let file = file.ok_or_else(|| ApiError::BadRequest("multipart upload has no file part".into()))?;
    Ok((file, constraints))
}

async fn create_session(
    State(st): Shared,
    q: Result<Query<UploadQuery>, QueryRejection>,
    req: Request,
) -> Result<(StatusCode, Json<Value>), ApiError> {
    let q = query(q)?;
    let cap = st.config.max_upload_bytes;
    let (bytes, constraints) = read_upload(req, cap).await?;
    if bytes.len() > cap {
        return Err(ApiError::FileTooLarge { limit: cap });
    }
    let set = match constraints {
        Some(text) => constraints_from_json(&text)?,
        None => ConstraintSet::default(),
    };
    let mut parse_options = st.config.parse_options.clone();
    if let Some(d) = q.delimiter {
        parse_options.delimiter = d;
    }
    let defaults = &st.config.plan_options;
    let opts = PlanOptions {
        seed: q.seed.unwrap_or(defaults.seed),
        target: q.target.or_else(|| defaults.target.clone()),
        ..defaults.clone()
    };
    let upload = Arc::new(bytes);
    let built = {
        let upload = upload.clone();
        blocking(move || {
            plan_for_bytes(&upload, &parse_options, &set, &opts).map(|(d, inf, plan)| {
                let p = profiles(&d);
                (d, inf, plan, p)
            })
        })
        .await??
    };
    let (input, inference, plan, column_profiles) = built;
    let id = uuid::Uuid::new_v4().simple().to_string();
    let session = Session::new(id, upload, input, inference, plan, st.config.undo_depth, st.store.now());
    let body = json!({
        "session_id": session.id,
        "version": session.version,
        "rows": session.dataset.row_count(),
        "columns": session.dataset.column_names(),
        "fingerprint": session.plan.fingerprint,
        "type_inference": session.inference,
        "profiles": column_profiles,
        "plan": session.plan,
    });
    st.store.insert(session);
    Ok((StatusCode::CREATED, Json(body)))
}

// ---------------------------------------------------------------- session resource

async fn get_session(State(st): Shared, Path(key): Path<String>) -> Result<Json<Value>, ApiError> {
    let h = st.store.get(&key)?;
    let s = h.lock().unwrap();
    Ok(Json(summary(&s)))
}

async fn delete_session(State(st): Shared, Path(key): Path<String>) -> Result<StatusCode, ApiError> {
    st.store.get(&key)?;
    st.store.remove(&key);
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Debug, Deserialize)]
struct VersionBody {
    version: u64,
}

/// `POST /v1/sessions/{id}:finalize` and `POST /v1/sessions/{id}:undo`.
async fn session_action(State(st): Shared, Path(key): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let (id, action) = key.split_once(':').ok_or(ApiError::NotFound)?;
    match action {
        "finalize" => finalize(&st, id).await.map(IntoResponse::into_response),
        "undo" => {
            let req: VersionBody = parse_body(&body)?;
            let h = st.store.get(id)?;
            let mut s = h.lock().unwrap();
            s.check_version(req.version)?;
            s.undo()?;
            Ok(Json(summary(&s)).into_response())
        }
        _ => Err(ApiError::NotFound),
    }
}

async fn finalize(st: &AppState, id: &str) -> Result<Json<Value>, ApiError> {
    let h = st.store.get(id)?;
    let (upload, plan, version, cached) = {
        let s = h.lock().unwrap();
        let cached = s.artifacts.clone().filter(|a| a.version == s.version);
        (s.upload.clone(), s.plan.clone(), s.version, cached)
    };
    let exports = json!({
        "csv": format!("/v1/sessions/{id}/export/csv"),
        "report": format!("/v1/sessions/{id}/export/report"),
    });
    if let Some(a) = cached {
        return Ok(Json(json!({ "version": a.version, "exports": exports })));
    }
    let (csv, report) = blocking(move || {
        execute_plan(&upload, &plan).map(|(d, report)| (to_csv_bytes(&d, ','), report))
    })
    .await??;
    let mut s = h.lock().unwrap();
    // an edit landed while the plan ran
    s.check_version(version)?;
    s.artifacts = Some(Artifacts {
        version,
        csv: Arc::new(csv),
        report: Arc::new(report.to_json()),
    });
    Ok(Json(json!({
        "version": version,
        "rows": report.output.rows,
        "columns": report.output.columns,
        "exports": exports,
    })))
}

async fn export(State(st): Shared, Path((id, kind)): Path<(String, String)>) -> Result<Response, ApiError> {
    let h = st.store.get(&id)?;
    let a = {
        let s = h.lock().unwrap();
        s.artifacts.clone().filter(|a| a.version == s.version).ok_or(ApiError::NotFinalized)?
    };
    match kind.as_str() {
        "csv" => Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], a.csv.to_vec()).into_response()),
        "report" => Ok(([(header::CONTENT_TYPE, "application/json")], a.report.to_string()).into_response()),
        _ => Err(ApiError::NotFound),
    }
}

async fn get_plan(State(st): Shared, Path(id): Path<String>) -> Result<Response, ApiError> {
    let h = st.store.get(&id)?;
    let text = h.lock().unwrap().plan.to_json();
    Ok(([(header::CONTENT_TYPE, "application/json")], text).into_response())
}

// ---------------------------------------------------------------- exploration

async fn get_profile(State(st): Shared, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let h = st.store.get(&id)?;
    let (d, target, seed, version) = {
        let s = h.lock().unwrap();
        (s.dataset.clone(), s.plan.target.clone(), s.plan.seed, s.version)
    };
    let rows = d.row_count();
    let eda = blocking(move || eda_summary(&d, target.as_deref(), seed, &ReportOptions::default())).await??;
    Ok(Json(json!({ "version": version, "rows": rows, "eda": eda })))
}

#[derive(Debug, Deserialize)]
struct PlotQuery {
    x: String,
    y: Option<String>,
}

async fn get_plot(
    State(st): Shared,
    Path(id): Path<String>,
    q: Result<Query<PlotQuery>, QueryRejection>,
) -> Result<Json<Value>, ApiError> {
    let q = query(q)?;
    let h = st.store.get(&id)?;
    let (d, version) = {
        let s = h.lock().unwrap();
        (s.dataset.clone(), s.version)
    };
    let cx = d.column(&q.x)?;
    let px = profile_column(cx).map_err(|e| ApiError::BadRequest(e.to_string()))?;
    let (py, pair) = match &q.y {
        Some(y) => {
            let cy = d.column(y)?;
            let py = profile_column(cy).map_err(|e| ApiError::BadRequest(e.to_string()))?;
            (Some(py), profile_pair(cx, cy).ok())
        }
        None => (None, None),
    };
    let rec = recommend_plot(&px, py.as_ref(), pair.as_ref(), Some(&st.svm));
    Ok(Json(json!({
        "version": version,
        "x": q.x,
        "y": q.y,
        "recommendation": rec,
        "profiles": std::iter::once(&px).chain(py.as_ref()).collect::<Vec<_>>(),
        "pair": pair,
    })))
}

#[derive(Debug, Deserialize)]
struct OutlierQuery {
    x: String,
    y: String,
    detector: Option<String>,
    eps: Option<f64>,
    min_pts: Option<usize>,
    k: Option<f64>,
    threshold: Option<f64>,
    n_trees: Option<usize>,
    subsample: Option<usize>,
    seed: Option<u64>,
    confirm_z: Option<f64>,
}

impl OutlierQuery {
    /// Missing parameters take the engine defaults.
    fn detector(&self) -> Result<OutlierDetector, ApiError> {
        Ok(match self.detector.as_deref().unwrap_or("dbscan") {
            "dbscan" => OutlierDetector::Dbscan {
                eps: self.eps,
                min_pts: self.min_pts.unwrap_or(DbscanConfig::default().min_pts),
            },
            "iqr" => OutlierDetector::Iqr { k: self.k.unwrap_or(1.5) },
            "isolation_forest" => {
                let d = IsolationForestConfig::default();
                OutlierDetector::IsolationForest {
                    n_trees: self.n_trees.unwrap_or(d.n_trees),
                    subsample: self.subsample.unwrap_or(d.subsample),
                    threshold: self.threshold.unwrap_or(d.threshold),
                    seed: self.seed.unwrap_or(d.seed),
                    confirm_z: self.confirm_z,
                }
            }
            "lof" => {
                let d = LofConfig::default();
                let k = match self.k {
                    None => d.k,
                    Some(k) if k >= 1.0 && k.fract() == 0.0 => k as usize,
                    Some(k) => return Err(ApiError::BadRequest(format!("lof k must be a positive integer, got {k}"))),
                };
                OutlierDetector::Lof {
                    k,
                    threshold: self.threshold.unwrap_or(d.threshold),
                }
            }
            other => return Err(ApiError::BadRequest(format!("unknown detector `{other}`"))),
        })
    }
}

async fn get_outliers(
    State(st): Shared,
    Path(id): Path<String>,
    q: Result<Query<OutlierQuery>, QueryRejection>,
) -> Result<Json<Value>, ApiError> {
    let q = query(q)?;
    let detector = q.detector()?;
    let h = st.store.get(&id)?;
    let (d, version) = {
        let s = h.lock().unwrap();
        (s.dataset.clone(), s.version)
    };
    for axis in [&q.x, &q.y] {
        if !d.column(axis)?.vtype().is_numeric() {
            return Err(ApiError::NonNumericAxis(axis.clone()));
        }
    }
    let axes = vec![q.x.clone(), q.y.clone()];
    let (d, report) = {
        let det = detector.clone();
        blocking(move || detect_outliers(&d, &axes, &det).map(|r| (d, r))).await??
    };
    let flagged: BTreeSet<usize> = report.flagged.iter().map(|f| f.index).collect();
    let xs = d.column(&q.x)?.numbers();
    let ys = d.column(&q.y)?.numbers();
    let points: Vec<Value> = (0..d.row_count())
        .filter_map(|p| {
            let (x, y) = (xs[p]?, ys[p]?);
            Some(json!({
                "row_id": d.row_ids()[p],
                "x": x,
                "y": y,
                "score": report.scores[p],
                "flagged": flagged.contains(&p),
            }))
        })
        .collect();
    let flagged_ids: Vec<usize> = flagged.iter().map(|&p| d.row_ids()[p]).collect();
    Ok(Json(json!({
        "version": version,
        "x": q.x,
        "y": q.y,
        "detector": detector,
        "parameters": report.parameters,
        "points": points,
        "flagged_row_ids": flagged_ids,
    })))
}

// ---------------------------------------------------------------- edits

#[derive(Debug, Deserialize)]
struct RemoveRows {
    version: u64,
    row_ids: Vec<usize>,
}

async fn remove_rows(State(st): Shared, Path(id): Path<String>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let req: RemoveRows = parse_body(&body)?;
    let h = st.store.get(&id)?;
    let mut s = h.lock().unwrap();
    s.check_version(req.version)?;
    if req.row_ids.is_empty() {
        return Err(ApiError::BadRequest("no row ids given".into()));
    }
    let present: BTreeSet<usize> = s.dataset.row_ids().iter().copied().collect();
    let ids: BTreeSet<usize> = req.row_ids.into_iter().collect();
    let missing: Vec<usize> = ids.difference(&present).copied().collect();
    if !missing.is_empty() {
        return Err(ApiError::IndexOutOfRange(missing));
    }
    let mut plan = s.plan.clone();
    let step_id = plan.insert_cleaning_step(
        Operation::RemoveRows {
            row_ids: ids.into_iter().collect(),
        },
        Vec::new(),
        Origin::UserAccepted,
    );
    let view = view_of(&s.input, &plan);
    s.commit(view, plan);
    Ok(Json(json!({
        "version": s.version,
        "row_count": s.dataset.row_count(),
        "step_id": step_id,
        "undo_depth": s.undo_len(),
    })))
}

#[derive(Debug, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
enum StepEdit {
    Accept,
    Reject,
    Edit {
        #[serde(default)]
        operation: Option<Operation>,
        #[serde(default)]
        targets: Option<Vec<String>>,
    },
    /// Moves the step to this index in the plan.
    Move { position: usize },
}

#[derive(Debug, Deserialize)]
struct StepPatch {
    version: u64,
    #[serde(flatten)]
    edit: StepEdit,
}

async fn patch_step(
    State(st): Shared,
    Path((id, sid)): Path<(String, String)>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let req: StepPatch = parse_body(&body)?;
    let h = st.store.get(&id)?;
    let mut s = h.lock().unwrap();
    s.check_version(req.version)?;
    let mut plan = s.plan.clone();
    let step = plan.step_mut(&sid).ok_or_else(|| ApiError::UnknownStep(sid.clone()))?;
    let invalid = |reason: &str| ApiError::InvalidEdit {
        step: sid.clone(),
        reason: reason.to_string(),
    };
    match req.edit {
        StepEdit::Accept => step.set_origin(Origin::UserAccepted),
        StepEdit::Reject => {
            plan.remove_step(&sid);
        }
        StepEdit::Edit { operation, targets } => {
            if operation.is_none() && targets.is_none() {
                return Err(invalid("edit changes nothing"));
            }
            if let Some(op) = operation {
                step.operation = op;
            }
            if let Some(t) = targets {
                step.targets = t;
            }
            step.set_origin(Origin::UserEdited);
        }
        StepEdit::Move { position } => {
            if position >= plan.steps.len() {
                return Err(invalid(&format!("position {position} is past the end of the plan")));
            }
            let rec = plan.remove_step(&sid).expect("step exists");
            plan.steps.insert(position, rec);
        }
    }
    plan.check_references(&s.input).map_err(|(step, column)| ApiError::InvalidEdit {
        step,
        reason: format!("column `{column}` does not exist when this step runs"),
    })?;
    let view = view_of(&s.input, &plan);
    s.commit(view, plan);
    Ok(Json(json!({ "version": s.version, "plan": s.plan })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use dataprep_core::tabular::Column;

    #[test]
    fn view_drops_rows_named_by_remove_steps() {
        let d = Dataset::new("t", vec![Column::numeric("x", &[1.0, 2.0, 3.0, 4.0])]).unwrap();
        let mut plan = CleaningPlan::new("", 0);
        assert!(view_of(&d, &plan).same_content(&d));
        plan.push(Operation::RemoveRows { row_ids: vec![1] }, vec![], Origin::UserAccepted);
        plan.push(Operation::RemoveRows { row_ids: vec![1, 3] }, vec![], Origin::UserAccepted);
        assert_eq!(view_of(&d, &plan).row_ids(), &[0, 2]);
    }

    #[test]
    fn omitted_detector_parameters_take_defaults() {
        let q: OutlierQuery = serde_json::from_value(json!({ "x": "a", "y": "b" })).unwrap();
        assert_eq!(
            q.detector().unwrap(),
            OutlierDetector::Dbscan { eps: None, min_pts: 5 }
        );
        let q: OutlierQuery = serde_json::from_value(json!({ "x": "a", "y": "b", "detector": "lof", "k": 2.5 })).unwrap();
        assert!(q.detector().is_err());
    }
}
