//! HTTP surface: kiosk, drive, inventory and telemetry streams.

use std::convert::Infallible;
use std::path::PathBuf;

use axum::body::{Body, Bytes};
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::Engine as _;
use bookbot_core::botsim::Direction;
use futures::stream::{self, Stream, StreamExt};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use tokio::sync::broadcast;
use tower_http::services::ServeDir;

use crate::engine::{ApiError, BarcodeInput, Command, KioskAction, QrInput, Reply};
use crate::runtime::Hub;

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

type ApiResult = Result<Json<Reply>, ApiError>;

fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed request body: {e}")))
}

fn base64_field(name: &str, value: &str) -> Result<Vec<u8>, ApiError> {
    base64::engine::general_purpose::STANDARD
        .decode(value.trim())
        .map_err(|e| ApiError::bad_request(format!("{name} is not valid base64: {e}")))
}

pub fn router(hub: Hub, console_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/telemetry", get(telemetry_sse))
        .route("/api/telemetry/latest", get(telemetry_latest))
        .route("/api/nmea", get(nmea_stream))
        .route("/api/drive", post(drive))
        .route("/api/kiosk/qr", post(kiosk_qr))
        .route("/api/kiosk/barcode", post(kiosk_barcode))
        .route("/api/kiosk/action", post(kiosk_action))
        .route("/api/inventory", get(inventory))
        .route("/api/dock", post(dock))
        .route("/api/unload", post(unload))
        .with_state(hub);
    match console_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Turns a broadcast receiver into a stream that skips over lag.
fn follow(rx: broadcast::Receiver<std::sync::Arc<str>>) -> impl Stream<Item = std::sync::Arc<str>> {
    stream::unfold(rx, |mut rx| async move {
        loop {
            match rx.recv().await {
                Ok(v) => return Some((v, rx)),
                Err(broadcast::error::RecvError::Lagged(n)) => {
                    tracing::debug!(skipped = n, "slow stream subscriber");
                }
                Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    })
}

async fn telemetry_sse(State(hub): State<Hub>) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    let rx = hub.telemetry.subscribe();
    let first = hub.latest().and_then(|s| serde_json::to_string(&*s).ok());
    let events = stream::iter(first.map(std::sync::Arc::<str>::from))
        .chain(follow(rx))
        .map(|json| Ok(Event::default().event("telemetry").data(&*json)));
    Sse::new(events).keep_alive(KeepAlive::default())
}

async fn telemetry_latest(State(hub): State<Hub>) -> Response {
    match hub.latest() {
        Some(s) => Json(&*s).into_response(),
        None => ApiError::new(503, "Unavailable", "no telemetry yet").into_response(),
    }
}

async fn nmea_stream(State(hub): State<Hub>) -> Response {
    let lines = follow(hub.nmea.subscribe()).map(|l| Ok::<_, Infallible>(l.to_string()));
    ([(header::CONTENT_TYPE, "text/plain; charset=us-ascii")], Body::from_stream(lines)).into_response()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DriveRequest {
    direction: String,
}

async fn drive(State(hub): State<Hub>, body: Bytes) -> ApiResult {
    let req: DriveRequest = parse_body(&body)?;
    let d: Direction = req.direction.parse().map_err(|e| ApiError::bad_request(format!("{e}")))?;
    hub.execute(Command::Drive(d)).await.map(Json)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QrRequest {
    token: Option<String>,
    pbm_base64: Option<String>,
}

async fn kiosk_qr(State(hub): State<Hub>, body: Bytes) -> ApiResult {
    let req: QrRequest = parse_body(&body)?;
    let input = match (req.token, req.pbm_base64) {
        (Some(t), None) => QrInput::Token(t),
        (None, Some(b)) => QrInput::Pbm(base64_field("pbm_base64", &b)?),
        _ => return Err(ApiError::bad_request("send exactly one of token, pbm_base64")),
    };
    hub.execute(Command::KioskQr(input)).await.map(Json)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BarcodeRequest {
    session: String,
    digits: Option<String>,
    pgm_base64: Option<String>,
}

async fn kiosk_barcode(State(hub): State<Hub>, body: Bytes) -> ApiResult {
    let req: BarcodeRequest = parse_body(&body)?;
    let input = match (req.digits, req.pgm_base64) {
        (Some(d), None) => BarcodeInput::Digits(d),
        (None, Some(b)) => BarcodeInput::Pgm(base64_field("pgm_base64", &b)?),
        _ => return Err(ApiError::bad_request("send exactly one of digits, pgm_base64")),
    };
    hub.execute(Command::KioskBarcode {
        session: req.session,
        input,
    })
    .await
    .map(Json)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ActionRequest {
    session: String,
    loan_id: String,
    action: KioskAction,
}

async fn kiosk_action(State(hub): State<Hub>, body: Bytes) -> ApiResult {
    let req: ActionRequest = parse_body(&body)?;
    hub.execute(Command::KioskAction {
        session: req.session,
        loan_id: req.loan_id,
        action: req.action,
    })
    .await
    .map(Json)
}

async fn inventory(State(hub): State<Hub>) -> ApiResult {
    hub.execute(Command::Inventory).await.map(Json)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DockRequest {
    docked: bool,
}

/// An empty body docks the bot.
async fn dock(State(hub): State<Hub>, body: Bytes) -> ApiResult {
    let docked = if body.iter().all(u8::is_ascii_whitespace) {
        true
    } else {
        parse_body::<DockRequest>(&body)?.docked
    };
    hub.execute(Command::Dock(docked)).await.map(Json)
}

async fn unload(State(hub): State<Hub>) -> ApiResult {
    hub.execute(Command::Unload).await.map(Json)
}
