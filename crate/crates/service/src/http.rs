//! JSON-over-HTTP surface. Every body is an envelope carrying the schema
//! version and either `data` or `error`.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, FromRequestParts, Path, Query, Request, State};
use axum::http::request::Parts;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use watson_core::archive::{PerformanceReport, Window};
use watson_core::attention::ViewRecord;
use watson_core::errprev::RawRecord;
use watson_core::observation::PlanEntry;
use watson_core::ward::Intervention;
use watson_core::{DecisionLabel, Error, Value};

use crate::app::{
    App, FinalizeInput, MineRequest, ObservationInput, OutcomeInput, PatientContext, PrognosisInput, StartConsult,
    TrainRequest, SCHEMA_VERSION,
};

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<serde_json::Value>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                code: code.into(),
                message: message.into(),
                details: None,
            },
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        use StatusCode as S;
        let (status, code) = match &e {
            Error::Unauthenticated => (S::UNAUTHORIZED, "unauthenticated"),
            Error::Denied(_) => (S::FORBIDDEN, "denied"),
            Error::NotFound(_) => (S::NOT_FOUND, "not_found"),
            Error::SessionClosed => (S::NOT_FOUND, "session_closed"),
            Error::AnswerNotAsked(_) | Error::Session(_) => (S::CONFLICT, "session_state"),
            Error::Archive(_) => (S::CONFLICT, "archive"),
            Error::Io(_) => (S::INTERNAL_SERVER_ERROR, "io"),
            _ => (S::UNPROCESSABLE_ENTITY, "invalid"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({ "schema_version": SCHEMA_VERSION, "error": self.body });
        (self.status, Json(body)).into_response()
    }
}

/// Successful envelope.
pub struct Data<T>(pub T);

impl<T: Serialize> IntoResponse for Data<T> {
    fn into_response(self) -> Response {
        Json(serde_json::json!({ "schema_version": SCHEMA_VERSION, "data": self.0 })).into_response()
    }
}

type ApiResult<T> = Result<Data<T>, ApiError>;

/// JSON body whose rejections use the error envelope.
pub struct Body<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Body<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(Body(v)),
            Err(e @ JsonRejection::JsonDataError(_)) => {
                Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid", e.body_text()))
            }
            Err(e) => Err(ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.body_text())),
        }
    }
}

/// The user behind the bearer token.
pub struct User(pub String);

impl FromRequestParts<Arc<App>> for User {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, app: &Arc<App>) -> Result<Self, Self::Rejection> {
        let token = parts
            .headers
            .get(header::AUTHORIZATION)
            .and_then(|h| h.to_str().ok())
            .and_then(|h| h.strip_prefix("Bearer "))
            .ok_or_else(|| ApiError::from(Error::Unauthenticated))?;
        Ok(User(app.authenticate(token.trim())?))
    }
}

pub fn router(app: Arc<App>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/datasets", post(ingest_dataset))
        .route("/models/train", post(train))
        .route("/models/{id}", get(model))
        .route("/consult", post(start_consult))
        .route("/consult/{id}", get(session_view))
        .route("/consult/{id}/answer", post(answer))
        .route("/consult/{id}/decision", post(decide))
        .route("/consult/{id}/transcript", get(transcript))
        .route("/consult/{id}/close", post(close))
        .route("/patients/{id}/plan", post(plan))
        .route("/patients/{id}/observation", post(observation))
        .route("/patients/{id}/prognosis", post(prognosis))
        .route("/patients/{id}/treatment", post(treatment))
        .route("/patients/{id}/context", post(context))
        .route("/patients/{id}/views", post(view))
        .route("/patients/{id}/discharge", post(discharge))
        .route("/patients/{id}/finalize", post(finalize))
        .route("/patients/{id}/attention", get(attention))
        .route("/ward/leaderboard", get(leaderboard))
        .route("/records", post(ingest_record))
        .route("/records/{id}/summary", get(summary))
        .route("/mine/antisyndromes", post(mine))
        .route("/outcomes", post(outcome))
        .route("/users/{id}/performance", get(performance))
        .route("/cases/{id}", get(case_export))
        .route("/explanations", get(explanations))
        .with_state(app)
}

async fn health() -> Data<serde_json::Value> {
    Data(serde_json::json!({ "status": "ok", "version": env!("CARGO_PKG_VERSION") }))
}

#[derive(Deserialize)]
struct DatasetInput {
    #[serde(default)]
    id: Option<String>,
    csv: String,
    #[serde(default)]
    delimiter: Option<char>,
}

async fn ingest_dataset(State(app): State<Arc<App>>, _: User, Body(b): Body<DatasetInput>) -> ApiResult<impl Serialize> {
    let d = b.delimiter.unwrap_or(',');
    if !d.is_ascii() {
        return Err(Error::Invalid("delimiter must be ASCII".into()).into());
    }
    Ok(Data(app.ingest_dataset(b.id, &b.csv, d as u8)?))
}

async fn train(State(app): State<Arc<App>>, _: User, Body(req): Body<TrainRequest>) -> ApiResult<impl Serialize> {
    Ok(Data(app.train(&req)?))
}

async fn model(State(app): State<Arc<App>>, _: User, Path(id): Path<String>) -> ApiResult<impl Serialize> {
    Ok(Data(app.model_info(&id)?))
}

async fn start_consult(State(app): State<Arc<App>>, _: User, Body(req): Body<StartConsult>) -> ApiResult<impl Serialize> {
    Ok(Data(app.start_consult(req)?))
}

async fn session_view(State(app): State<Arc<App>>, _: User, Path(id): Path<String>) -> ApiResult<impl Serialize> {
    Ok(Data(app.session_view(&id)?))
}

#[derive(Deserialize)]
struct AnswerInput {
    parameter: String,
    value: Value,
}

async fn answer(
    State(app): State<Arc<App>>,
    _: User,
    Path(id): Path<String>,
    Body(b): Body<AnswerInput>,
) -> ApiResult<impl Serialize> {
    Ok(Data(app.answer(&id, b.parameter, b.value)?))
}

#[derive(Deserialize)]
struct DecisionInput {
    decision: DecisionLabel,
}

async fn decide(
    State(app): State<Arc<App>>,
    _: User,
    Path(id): Path<String>,
    Body(b): Body<DecisionInput>,
) -> ApiResult<impl Serialize> {
    Ok(Data(app.decide(&id, b.decision)?))
}

async fn transcript(State(app): State<Arc<App>>, _: User, Path(id): Path<String>) -> ApiResult<impl Serialize> {
    Ok(Data(app.transcript(&id)?))
}

async fn close(State(app): State<Arc<App>>, _: User, Path(id): Path<String>) -> ApiResult<impl Serialize> {
    Ok(Data(app.close(&id)?))
}

#[derive(Deserialize)]
struct PlanInput {
    entries: Vec<PlanEntry>,
}

async fn plan(
    State(app): State<Arc<App>>,
    _: User,
    Path(id): Path<String>,
    Body(b): Body<PlanInput>,
) -> ApiResult<impl Serialize> {
    Ok(Data(app.set_plan(&id, b.entries)?))
}

async fn observation(
    State(app): State<Arc<App>>,
    _: User,
    Path(id): Path<String>,
    Body(b): Body<ObservationInput>,
) -> ApiResult<impl Serialize> {
    Ok(Data(app.add_observation(&id, b)?))
}

async fn prognosis(
    State(app): State<Arc<App>>,
    _: User,
    Path(id): Path<String>,
    Body(b): Body<PrognosisInput>,
) -> ApiResult<impl Serialize> {
    Ok(Data(app.add_prognosis(&id, b)?))
}

#[derive(Deserialize)]
struct TreatmentInput {
    interventions: Vec<Intervention>,
}

async fn treatment(
    State(app): State<Arc<App>>,
    _: User,
    Path(id): Path<String>,
    Body(b): Body<TreatmentInput>,
) -> ApiResult<impl Serialize> {
    Ok(Data(app.set_treatment(&id, b.interventions)?))
}

async fn context(
    State(app): State<Arc<App>>,
    _: User,
    Path(id): Path<String>,
    Body(b): Body<PatientContext>,
) -> ApiResult<impl Serialize> {
    Ok(Data(app.set_context(&id, b)?))
}

async fn view(
    State(app): State<Arc<App>>,
    _: User,
    Path(id): Path<String>,
    Body(b): Body<ViewRecord>,
) -> ApiResult<impl Serialize> {
    Ok(Data(serde_json::json!({ "views": app.add_view(&id, b)? })))
}

#[derive(Deserialize)]
struct DischargeInput {
    #[serde(default)]
    at: Option<DateTime<Utc>>,
}

async fn discharge(
    State(app): State<Arc<App>>,
    _: User,
    Path(id): Path<String>,
    Body(b): Body<DischargeInput>,
) -> ApiResult<impl Serialize> {
    let at = b.at.unwrap_or_else(Utc::now);
    app.discharge(&id, at)?;
    Ok(Data(serde_json::json!({ "patient": id, "discharged": at })))
}

async fn finalize(
    State(app): State<Arc<App>>,
    _: User,
    Path(id): Path<String>,
    Body(b): Body<FinalizeInput>,
) -> ApiResult<impl Serialize> {
    Ok(Data(app.finalize(&id, b)?))
}

#[derive(Deserialize)]
struct AtQuery {
    #[serde(default)]
    at: Option<DateTime<Utc>>,
    #[serde(default)]
    interval_hours: Option<f64>,
}

async fn attention(
    State(app): State<Arc<App>>,
    _: User,
    Path(id): Path<String>,
    Query(q): Query<AtQuery>,
) -> ApiResult<impl Serialize> {
    Ok(Data(app.attention(&id, q.at)?))
}

async fn leaderboard(State(app): State<Arc<App>>, _: User, Query(q): Query<AtQuery>) -> ApiResult<impl Serialize> {
    Ok(Data(app.leaderboard(q.at, q.interval_hours.unwrap_or(1.0))?))
}

async fn ingest_record(State(app): State<Arc<App>>, _: User, Body(raw): Body<RawRecord>) -> ApiResult<impl Serialize> {
    Ok(Data(app.ingest_record(raw)?))
}

#[derive(Deserialize)]
struct FormatQuery {
    #[serde(default)]
    format: Option<String>,
}

async fn summary(
    State(app): State<Arc<App>>,
    _: User,
    Path(id): Path<String>,
    Query(q): Query<FormatQuery>,
) -> Result<Response, ApiError> {
    let s = app.summary(&id)?;
    Ok(match q.format.as_deref() {
        Some("text") => Data(serde_json::json!({ "text": s.to_plain_text() })).into_response(),
        None | Some("json") => Data(s).into_response(),
        Some(other) => return Err(Error::Invalid(format!("unknown format `{other}`")).into()),
    })
}

async fn mine(State(app): State<Arc<App>>, _: User, Body(req): Body<MineRequest>) -> ApiResult<impl Serialize> {
    Ok(Data(app.mine(&req)?))
}

async fn outcome(State(app): State<Arc<App>>, User(user): User, Body(b): Body<OutcomeInput>) -> ApiResult<impl Serialize> {
    Ok(Data(app.record_outcome(&user, b)?))
}

async fn performance(
    State(app): State<Arc<App>>,
    User(user): User,
    Path(target): Path<String>,
    Query(window): Query<Window>,
) -> Result<Response, ApiError> {
    match app.performance(&user, &target, &window)? {
        denied @ PerformanceReport::Denied { .. } => {
            let mut err = ApiError::new(
                StatusCode::FORBIDDEN,
                "denied",
                format!("performance of `{target}` is visible only to its owner"),
            );
            err.body.details = Some(serde_json::to_value(denied).map_err(Error::from)?);
            Err(err)
        }
        full => Ok(Data(full).into_response()),
    }
}

async fn case_export(State(app): State<Arc<App>>, _: User, Path(id): Path<String>) -> ApiResult<impl Serialize> {
    Ok(Data(serde_json::json!({ "patient": id, "toml": app.case_export(&id)? })))
}

#[derive(Deserialize)]
struct SyndromeQuery {
    syndrome: String,
}

async fn explanations(
    State(app): State<Arc<App>>,
    _: User,
    Query(q): Query<SyndromeQuery>,
) -> ApiResult<impl Serialize> {
    Ok(Data(app.explanations(&q.syndrome)))
}

/// Binds `listen` and serves until the process ends.
pub async fn serve(app: Arc<App>, listen: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(listen).await?;
    axum::serve(listener, router(app)).await
}
