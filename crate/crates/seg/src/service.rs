//! HTTP front end: `GET /healthz`, `POST /segment`, and static UI assets.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use extrseg_core::raster::{decode_image, probe_dimensions, rle_encode};
use extrseg_core::{segment_points, Error, Mode, Point, SegmentationConfig};
use serde::Serialize;
use serde_json::{json, Value};
use tokio::sync::Semaphore;
use tower_http::services::ServeDir;

pub const DEFAULT_MAX_DIM: usize = 4096;

/// Request bodies may carry a base64 PNG of a 4096x4096 painting.
const BODY_LIMIT: usize = 128 * 1024 * 1024;

#[derive(Debug, Clone)]
pub struct ServiceOptions {
    pub static_dir: Option<PathBuf>,
    pub max_dim: usize,
    pub concurrency: usize,
    pub config: SegmentationConfig,
}

impl Default for ServiceOptions {
    fn default() -> Self {
        Self {
            static_dir: None,
            max_dim: DEFAULT_MAX_DIM,
            concurrency: std::thread::available_parallelism().map_or(1, |n| n.get()),
            config: SegmentationConfig::default(),
        }
    }
}

struct AppState {
    max_dim: usize,
    permits: Semaphore,
    config: SegmentationConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentResponse {
    pub width: usize,
    pub height: usize,
    pub mask_rle: String,
    pub iterations_run: usize,
    pub final_energy: f64,
    pub elapsed_ms: u64,
}

/// A rejected request: HTTP status, stable error code, human message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BadRequest", message)
    }

    fn bad_points(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BadPoints", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Json(json!({ "error": self.code, "message": self.message }));
        (self.status, body).into_response()
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        match e {
            Error::MalformedImage(_) | Error::UnsupportedFormat(_) | Error::InvalidDimensions { .. } => {
                ApiError::new(StatusCode::BAD_REQUEST, "MalformedImage", e.to_string())
            }
            Error::ClicksOutOfBounds { .. } => ApiError::bad_points(e.to_string()),
            Error::DegenerateRegion => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "DegenerateRegion", e.to_string()),
            Error::InvalidConfig(_) => ApiError::bad_request(e.to_string()),
            _ => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()),
        }
    }
}

/// A validated `POST /segment` body.
#[derive(Debug, Clone)]
pub struct SegmentRequest {
    pub image: Vec<u8>,
    pub points: [Point; 4],
    pub mode: Mode,
    pub iterations: Option<usize>,
}

fn parse_points(v: Option<&Value>) -> Result<[Point; 4], ApiError> {
    let arr = v
        .and_then(Value::as_array)
        .ok_or_else(|| ApiError::bad_points("\"points\" must be an array of 4 {x, y} objects"))?;
    if arr.len() != 4 {
        return Err(ApiError::bad_points(format!("expected 4 points, got {}", arr.len())));
    }
    let mut out = [Point::new(0, 0); 4];
    for (i, p) in arr.iter().enumerate() {
        let coord = |key: &str| {
            p.get(key)
                .and_then(Value::as_u64)
                .and_then(|c| usize::try_from(c).ok())
                .ok_or_else(|| ApiError::bad_points(format!("point {i}: \"{key}\" must be a non-negative integer")))
        };
        out[i] = Point::new(coord("x")?, coord("y")?);
    }
    Ok(out)
}

/// Parses the JSON body. Image bytes are base64-decoded but not yet
/// inspected.
pub fn parse_request(body: &[u8]) -> Result<SegmentRequest, ApiError> {
    let v: Value = serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid JSON body: {e}")))?;
    if !v.is_object() {
        return Err(ApiError::bad_request("request body must be a JSON object"));
    }
    let points = parse_points(v.get("points"))?;
    let mode = match v.get("mode") {
        None | Some(Value::Null) => Mode::Extr,
        Some(Value::String(s)) => s.parse().map_err(ApiError::bad_request)?,
        Some(_) => return Err(ApiError::bad_request("\"mode\" must be \"extr\" or \"rect\"")),
    };
    let iterations = match v.get("iterations") {
        None | Some(Value::Null) => None,
        Some(n) => Some(
            n.as_u64()
                .filter(|n| *n >= 1)
                .ok_or_else(|| ApiError::bad_request("\"iterations\" must be a positive integer"))? as usize,
        ),
    };
    let encoded = v
        .get("image")
        .and_then(Value::as_str)
        .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "MalformedImage", "\"image\" must be a base64 string"))?;
    // tolerate data URLs from the browser
    let encoded = encoded.split_once("base64,").map_or(encoded, |(_, rest)| rest);
    let image = STANDARD
        .decode(encoded.trim())
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "MalformedImage", format!("image is not valid base64: {e}")))?;
    Ok(SegmentRequest {
        image,
        points,
        mode,
        iterations,
    })
}

/// Runs one request to completion. Blocking; call off the async executor.
pub fn run_segment(req: &SegmentRequest, max_dim: usize, base: &SegmentationConfig) -> Result<SegmentResponse, ApiError> {
    let start = Instant::now();
    let (w, h) = probe_dimensions(&req.image)?;
    if w > max_dim || h > max_dim {
        return Err(ApiError::new(
            StatusCode::PAYLOAD_TOO_LARGE,
            "TooLarge",
            format!("image is {w}x{h}; the limit is {max_dim} pixels per side"),
        ));
    }
    let image = decode_image(&req.image)?;
    let config = SegmentationConfig {
        max_iterations: req.iterations.unwrap_or(base.max_iterations),
        ..*base
    };
    let result = segment_points(&image, req.points, req.mode, &config)?;
    Ok(SegmentResponse {
        width: image.width(),
        height: image.height(),
        mask_rle: rle_encode(&result.mask).to_string(),
        iterations_run: result.iterations_run,
        final_energy: result.final_energy,
        elapsed_ms: start.elapsed().as_millis() as u64,
    })
}

async fn healthz() -> Json<Value> {
    Json(json!({ "status": "ok", "version": env!("CARGO_PKG_VERSION") }))
}

async fn segment_handler(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Json<SegmentResponse>, ApiError> {
    let req = parse_request(&body)?;
    let _permit = state
        .permits
        .acquire()
        .await
        .map_err(|_| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "ShuttingDown", "server is shutting down"))?;
    let st = Arc::clone(&state);
    let out = tokio::task::spawn_blocking(move || run_segment(&req, st.max_dim, &st.config))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()))??;
    Ok(Json(out))
}

pub fn router(opts: ServiceOptions) -> Router {
    let state = Arc::new(AppState {
        max_dim: opts.max_dim,
        permits: Semaphore::new(opts.concurrency.max(1)),
        config: opts.config,
    });
    let api = Router::new()
        .route("/healthz", get(healthz))
        .route("/segment", post(segment_handler))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state);
    match opts.static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}
