//! JSON/PNG service behind the annotation tool.
//!
//! Frames are read from a directory and never modified. Annotations are
//! written as ground-truth files; band crops are filed into a dataset
//! directory by class.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use newsband_core::classifier::Class;
use newsband_core::hough::HoughConfig;
use newsband_core::{Band, FrameImage};
use serde::{Deserialize, Serialize};

use crate::batch::{ordered_cells, write_crop};
use crate::formats::{format_ground_truth, parse_ground_truth, read_ground_truth, truth_label, write_ground_truth};
use crate::imageio::{encode_png, list_images, load_frame};

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub frames: PathBuf,
    pub annotations: PathBuf,
    pub dataset: PathBuf,
    pub hough: HoughConfig,
}

struct AppState {
    cfg: ServerConfig,
    cells: Mutex<HashMap<String, Arc<Vec<Band>>>>,
    locks: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
}

impl AppState {
    fn frame_path(&self, id: &str) -> Result<PathBuf, ApiError> {
        if id.is_empty() || id.contains(['/', '\\']) || id.starts_with('.') {
            return Err(ApiError::not_found(id));
        }
        let images = list_images(&self.cfg.frames).map_err(ApiError::internal)?;
        images
            .into_iter()
            .find(|p| p.file_stem().is_some_and(|s| s == id))
            .ok_or_else(|| ApiError::not_found(id))
    }

    fn lock_for(&self, id: &str) -> Arc<tokio::sync::Mutex<()>> {
        self.locks.lock().expect("lock table poisoned").entry(id.to_string()).or_default().clone()
    }
}

type Shared = Arc<AppState>;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }

    fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("no frame `{id}`"))
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct FrameInfo {
    pub id: String,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct IndexedBand {
    pub index: usize,
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct AnnotationBand {
    pub label: String,
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Annotations {
    pub bands: Vec<AnnotationBand>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelRequest {
    label: String,
}

pub fn router(cfg: ServerConfig) -> Router {
    let state = Arc::new(AppState {
        cfg,
        cells: Mutex::new(HashMap::new()),
        locks: Mutex::new(HashMap::new()),
    });
    Router::new()
        .route("/frames", get(list_frames))
        .route("/frames/{id}/image", get(frame_image))
        .route("/frames/{id}/bands", get(frame_bands))
        .route("/frames/{id}/annotations", get(get_annotations).post(post_annotations))
        .route("/frames/{id}/bands/{k}/label", post(label_band))
        .with_state(state)
}

pub async fn serve(addr: &str, cfg: ServerConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(cfg)).await
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)?
}

fn load(path: &Path) -> Result<FrameImage, ApiError> {
    load_frame(path).map_err(ApiError::internal)
}

async fn list_frames(State(st): State<Shared>) -> Result<Json<Vec<FrameInfo>>, ApiError> {
    blocking(move || {
        let mut out = Vec::new();
        for p in list_images(&st.cfg.frames).map_err(ApiError::internal)? {
            let Ok((width, height)) = image::image_dimensions(&p) else {
                continue;
            };
            let id = p.file_stem().expect("image file has a stem").to_string_lossy().into_owned();
            out.push(FrameInfo { id, width, height });
        }
        Ok(Json(out))
    })
    .await
}

async fn frame_image(State(st): State<Shared>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    blocking(move || {
        let frame = load(&st.frame_path(&id)?)?;
        Ok(([(header::CONTENT_TYPE, "image/png")], encode_png(&frame)).into_response())
    })
    .await
}

fn cells_for(st: &AppState, id: &str, frame: &FrameImage) -> Result<Arc<Vec<Band>>, ApiError> {
    if let Some(c) = st.cells.lock().expect("cell cache poisoned").get(id) {
        return Ok(c.clone());
    }
    let cells = Arc::new(ordered_cells(frame, &st.cfg.hough).map_err(ApiError::internal)?);
    st.cells.lock().expect("cell cache poisoned").insert(id.to_string(), cells.clone());
    Ok(cells)
}

async fn frame_bands(State(st): State<Shared>, UrlPath(id): UrlPath<String>) -> Result<Json<serde_json::Value>, ApiError> {
    blocking(move || {
        let frame = load(&st.frame_path(&id)?)?;
        let cells = cells_for(&st, &id, &frame)?;
        let bands: Vec<IndexedBand> = cells
            .iter()
            .enumerate()
            .map(|(index, b)| IndexedBand {
                index,
                x: b.x,
                y: b.y,
                w: b.w,
                h: b.h,
            })
            .collect();
        Ok(Json(serde_json::json!({ "bands": bands })))
    })
    .await
}

fn to_annotations(bands: &[Band]) -> Annotations {
    Annotations {
        bands: bands
            .iter()
            .map(|b| AnnotationBand {
                label: b.label.to_string(),
                x: b.x,
                y: b.y,
                w: b.w,
                h: b.h,
            })
            .collect(),
    }
}

async fn get_annotations(State(st): State<Shared>, UrlPath(id): UrlPath<String>) -> Result<Json<Annotations>, ApiError> {
    blocking(move || {
        st.frame_path(&id)?;
        let path = st.cfg.annotations.join(format!("{id}.txt"));
        if !path.is_file() {
            return Ok(Json(Annotations { bands: Vec::new() }));
        }
        let bands = read_ground_truth(&path).map_err(ApiError::internal)?;
        Ok(Json(to_annotations(&bands)))
    })
    .await
}

fn parse_annotations(body: &[u8], width: u32, height: u32) -> Result<Vec<Band>, ApiError> {
    let req: Annotations = serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed body: {e}")))?;
    let mut bands = Vec::with_capacity(req.bands.len());
    for (i, b) in req.bands.iter().enumerate() {
        let label = truth_label(&b.label).ok_or_else(|| ApiError::bad_request(format!("band {i}: unknown label `{}`", b.label)))?;
        let band = Band::new(b.x, b.y, b.w, b.h).with_label(label);
        if b.w == 0 || b.h == 0 {
            return Err(ApiError::bad_request(format!("band {i} has zero area")));
        }
        if !band.fits_in(width, height) {
            return Err(ApiError::bad_request(format!("band {i} lies outside the {width}x{height} frame")));
        }
        bands.push(band);
    }
    Ok(bands)
}

async fn post_annotations(
    State(st): State<Shared>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<Annotations>, ApiError> {
    let frame_path = {
        let st = st.clone();
        let id = id.clone();
        blocking(move || st.frame_path(&id)).await?
    };
    let (width, height) = image::image_dimensions(&frame_path).map_err(ApiError::internal)?;
    let bands = parse_annotations(&body, width, height)?;
    let lock = st.lock_for(&id);
    let _guard = lock.lock().await;
    blocking(move || {
        let path = st.cfg.annotations.join(format!("{id}.txt"));
        write_ground_truth(&path, &bands).map_err(ApiError::internal)?;
        let saved = parse_ground_truth(&format_ground_truth(&bands), &path).map_err(ApiError::internal)?;
        Ok(Json(to_annotations(&saved)))
    })
    .await
}

async fn label_band(
    State(st): State<Shared>,
    UrlPath((id, k)): UrlPath<(String, usize)>,
    body: Bytes,
) -> Result<Json<serde_json::Value>, ApiError> {
    let req: LabelRequest = serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("malformed body: {e}")))?;
    let class = match req.label.as_str() {
        "natural" => Class::Natural,
        "artificial" => Class::Graphics,
        other => return Err(ApiError::bad_request(format!("label must be `natural` or `artificial`, got `{other}`"))),
    };
    let lock = st.lock_for(&id);
    let _guard = lock.lock().await;
    blocking(move || {
        let frame = load(&st.frame_path(&id)?)?;
        let cells = cells_for(&st, &id, &frame)?;
        let band = cells.get(k).ok_or_else(|| {
            ApiError::new(StatusCode::CONFLICT, format!("band {k} does not exist; frame `{id}` has {} bands", cells.len()))
        })?;
        let path = write_crop(&st.cfg.dataset, &id, k, &frame, band, class).map_err(ApiError::internal)?;
        let rel = path.strip_prefix(&st.cfg.dataset).unwrap_or(&path);
        Ok(Json(serde_json::json!({ "index": k, "label": req.label, "path": rel.to_string_lossy() })))
    })
    .await
}
