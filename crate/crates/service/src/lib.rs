//! HTTP front end for interactive search runs.
//!
//! Images are uploaded once and kept in a bounded in-memory store together
//! with their lazily built integral image and axis series, so repeated
//! searches with different hyperparameters skip the preprocessing.
//!
//! Routes:
//! - `POST /images` with a PNG body returns `{id, nx, ny}`.
//! - `POST /images/{id}/search` with a [`SearchRequest`] body returns a
//!   [`SearchResponse`].
//! - `GET /healthz`.

use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use lru::LruCache;
use serde::{Deserialize, Serialize};
use subsearch::searchspace::RunLengthMask;
use subsearch::{
    execute, to_gray, AptsParams, Error, Image, Method, PreparedImage, RunOptions, RunReport, SearchParams,
};
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

/// Stated in every search response.
pub const CONVENTION: &str = "x=row, y=col";

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Images kept before the least recently used one is dropped.
    pub max_images: NonZeroUsize,
    /// Largest accepted upload in bytes.
    pub max_upload_bytes: usize,
    /// Origin allowed by CORS; any origin when unset.
    pub allow_origin: Option<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            max_images: NonZeroUsize::new(16).unwrap(),
            max_upload_bytes: 32 * 1024 * 1024,
            allow_origin: None,
        }
    }
}

/// An uploaded image and its derived data.
#[derive(Debug)]
pub struct StoredImage {
    rgb: PreparedImage,
    gray: OnceLock<PreparedImage>,
}

impl StoredImage {
    pub fn new(image: Image) -> Self {
        Self {
            rgb: PreparedImage::new(image.to_rgb()),
            gray: OnceLock::new(),
        }
    }

    pub fn rgb(&self) -> &PreparedImage {
        &self.rgb
    }

    pub fn gray(&self) -> &PreparedImage {
        self.gray.get_or_init(|| PreparedImage::new(to_gray(self.rgb.image())))
    }
}

pub struct AppState {
    images: Mutex<LruCache<String, Arc<StoredImage>>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(capacity: NonZeroUsize) -> Self {
        Self {
            images: Mutex::new(LruCache::new(capacity)),
            next_id: AtomicU64::new(1),
        }
    }

    pub fn insert(&self, image: Image) -> String {
        let id = format!("img-{:08x}", self.next_id.fetch_add(1, Ordering::Relaxed));
        self.images
            .lock()
            .unwrap()
            .put(id.clone(), Arc::new(StoredImage::new(image)));
        id
    }

    pub fn get(&self, id: &str) -> Option<Arc<StoredImage>> {
        self.images.lock().unwrap().get(id).cloned()
    }

    pub fn len(&self) -> usize {
        self.images.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Error body: `{"error": {"kind": ..., "message": ...}}`.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    kind: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            kind,
            message: message.into(),
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::WindowOutOfBounds { .. }
            | Error::ReferenceTooLarge { .. }
            | Error::EmptyImage { .. }
            | Error::ChannelMismatch { .. }
            | Error::InvalidParameter(_) => StatusCode::UNPROCESSABLE_ENTITY,
            Error::Decode(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let kind = match status {
            StatusCode::UNPROCESSABLE_ENTITY => "invalid_parameters",
            StatusCode::BAD_REQUEST => "undecodable_image",
            _ => "internal",
        };
        Self::new(status, kind, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({ "error": { "kind": self.kind, "message": self.message } });
        (self.status, Json(body)).into_response()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub h: usize,
    pub w: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UploadResponse {
    pub id: String,
    /// Rows.
    pub nx: usize,
    /// Columns.
    pub ny: usize,
}

/// Search settings; the reference is a rectangle of the stored image.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchRequest {
    #[serde(default = "default_method")]
    pub method: Method,
    pub ref_rect: Rect,
    #[serde(default = "default_top_m")]
    pub top_m: usize,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default = "default_p")]
    pub p: usize,
    #[serde(default = "one")]
    pub stride_x: usize,
    #[serde(default = "one")]
    pub stride_y: usize,
    #[serde(default)]
    pub grayscale: bool,
    #[serde(default)]
    pub patches: bool,
    pub link_factor: Option<f64>,
    #[serde(default)]
    pub scalar_profile: bool,
}

fn default_method() -> Method {
    Method::AptsV2
}

fn default_top_m() -> usize {
    SearchParams::default().top_m
}

fn default_k_max() -> usize {
    AptsParams::default().k_max
}

fn default_p() -> usize {
    SearchParams::default().p
}

fn one() -> usize {
    1
}

impl SearchRequest {
    pub fn options(&self) -> RunOptions {
        let params = SearchParams {
            top_m: self.top_m,
            p: self.p,
            stride_x: self.stride_x,
            stride_y: self.stride_y,
            apts: AptsParams::default().with_k_max(self.k_max),
            scalar_profile: self.scalar_profile,
        };
        RunOptions {
            method: self.method,
            params,
            grayscale: self.grayscale,
            link_factor: self
                .patches
                .then(|| self.link_factor.unwrap_or(subsearch::patches::DEFAULT_LINK_FACTOR)),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchResponse {
    pub convention: String,
    pub image_id: String,
    pub ref_rect: Rect,
    #[serde(flatten)]
    pub report: RunReport,
    /// Scanned placements over the image grid.
    pub space_mask: RunLengthMask,
}

pub fn router(config: &ServiceConfig) -> Router {
    let cors = match &config.allow_origin {
        Some(origin) => match HeaderValue::from_str(origin) {
            Ok(value) => CorsLayer::new().allow_origin(AllowOrigin::exact(value)),
            Err(_) => {
                log::warn!("ignoring malformed CORS origin {origin:?}");
                CorsLayer::new()
            }
        },
        None => CorsLayer::new().allow_origin(Any),
    }
    .allow_methods(Any)
    .allow_headers(Any);
    let state = Arc::new(AppState::new(config.max_images));
    Router::new()
        .route("/healthz", get(healthz))
        .route("/images", post(upload))
        .route("/images/{id}/search", post(search))
        .layer(DefaultBodyLimit::max(config.max_upload_bytes))
        .layer(cors)
        .with_state(state)
}

async fn healthz() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn upload(State(state): State<Arc<AppState>>, body: axum::body::Bytes) -> Result<Json<UploadResponse>, ApiError> {
    let image = tokio::task::spawn_blocking(move || Image::from_png_bytes(&body))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    let (nx, ny) = (image.rows(), image.cols());
    let id = state.insert(image);
    log::info!("stored {id} ({nx}x{ny})");
    Ok(Json(UploadResponse { id, nx, ny }))
}

async fn search(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<SearchRequest>, JsonRejection>,
) -> Result<Json<SearchResponse>, ApiError> {
    let Json(request) =
        body.map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_parameters", e.body_text()))?;
    let stored = state.get(&id).ok_or_else(|| {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "unknown_image",
            format!("no image with id {id:?}"),
        )
    })?;
    tokio::task::spawn_blocking(move || run_search(id, &stored, &request))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
        .map(Json)
}

/// Runs one search request against a stored image.
pub fn run_search(image_id: String, stored: &StoredImage, request: &SearchRequest) -> Result<SearchResponse, ApiError> {
    let options = request.options();
    let prepared = if options.grayscale { stored.gray() } else { stored.rgb() };
    let r = request.ref_rect;
    let reference = prepared.image().crop(r.x, r.y, r.h, r.w)?;
    let (report, outcome) = execute(prepared, &reference, &options)?;
    let image = prepared.image();
    Ok(SearchResponse {
        convention: CONVENTION.to_owned(),
        image_id,
        ref_rect: r,
        report,
        space_mask: outcome.space.run_length_mask(image.rows(), image.cols()),
    })
}
