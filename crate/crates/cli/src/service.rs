//! JSON-over-HTTP annotation service under `/api/v1`.
//!
//! State lives in the dataset (read only) and the accepted-annotation log;
//! only log appends are serialized. Request and response shapes are listed
//! in `docs/http-api.md`.

use std::net::SocketAddr;
use std::path::Path;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use voxhand_core::eval::{annotator_agreement, default_thresholds, AgreementReport, ErrorMode, FrameError};
use voxhand_core::kinematics::{
    forward_kinematics, ik_fit, solve_targets, HandSkeleton, IkConfig, IkSolution, IkTarget, Label, PoseParams, NUM_PARAMS,
};
use voxhand_core::{CameraIntrinsics, DepthFrame, Joint, Point3, NUM_JOINTS};
use voxhand_dataset::{
    encode_gray8_png, merged_annotations, AcceptedRecord, AnnotationLog, Dataset, HandRecord, JointRecord,
};

use crate::error::{CliError, CliResult};

pub struct AppState {
    pub dataset: Dataset,
    pub log: Mutex<AnnotationLog>,
    pub skeleton: HandSkeleton,
    pub ik: IkConfig,
}

impl AppState {
    /// Loads the dataset and opens (creating if needed) the annotation log.
    pub fn open(dataset: &Path, annotations: &Path) -> CliResult<Self> {
        let dataset = voxhand_dataset::load_dataset(dataset)?;
        let log = AnnotationLog::open(annotations)?;
        Ok(Self { dataset, log: Mutex::new(log), skeleton: HandSkeleton::standard(), ik: service_ik_config() })
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/v1/dataset", get(dataset_info))
        .route("/api/v1/frames/{index}", get(frame_view))
        .route("/api/v1/frames/{index}/fit", post(fit))
        .route("/api/v1/frames/{index}/accept", post(accept))
        .route("/api/v1/agreement", get(agreement))
        .with_state(state)
}

pub async fn serve(state: AppState, addr: SocketAddr) -> CliResult<()> {
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| CliError::Data(format!("bind {addr}: {e}")))?;
    eprintln!("serving {} frames on http://{addr}/api/v1", state.dataset.len());
    axum::serve(listener, router(Arc::new(state)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| CliError::Internal(e.to_string()))
}

/// Annotators judge the overlay per joint, so viewpoint restarts kick in at
/// a much smaller mean residual than the library default.
pub fn service_ik_config() -> IkConfig {
    IkConfig { restart_threshold: 0.05, max_iterations: 400, ..IkConfig::default() }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into() }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({ "error": { "code": self.code, "message": self.message } });
        (self.status, Json(body)).into_response()
    }
}

impl From<voxhand_dataset::DatasetError> for ApiError {
    fn from(e: voxhand_dataset::DatasetError) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "data_error", e.to_string())
    }
}

impl From<voxhand_core::Error> for ApiError {
    fn from(e: voxhand_core::Error) -> Self {
        Self::bad_request(e.to_string())
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn frame_index(state: &AppState, index: usize) -> ApiResult<usize> {
    if index < state.dataset.len() {
        Ok(index)
    } else {
        Err(ApiError::new(
            StatusCode::NOT_FOUND,
            "no_such_frame",
            format!("frame {index} out of range, dataset has {}", state.dataset.len()),
        ))
    }
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("request body: {e}")))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub intrinsics: CameraIntrinsics,
    pub frames: Vec<FrameSummary>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FrameSummary {
    pub index: usize,
    pub id: String,
    pub annotations: usize,
}

async fn dataset_info(State(state): State<Arc<AppState>>) -> Json<DatasetInfo> {
    let ds = &state.dataset;
    let accepted = state.log.lock().expect("log lock").records().to_vec();
    let merged = merged_annotations(ds, &accepted);
    Json(DatasetInfo {
        name: ds.name().to_owned(),
        width: ds.manifest().width,
        height: ds.manifest().height,
        intrinsics: ds.intrinsics(),
        frames: (0..ds.len())
            .map(|i| FrameSummary { index: i, id: ds.entry(i).expect("in range").id.clone(), annotations: merged[i].len() })
            .collect(),
    })
}

/// Pixel rectangle `[u0, u1) x [v0, v1)` plus the depth range found in it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub region: [usize; 4],
    pub near_mm: Option<u16>,
    pub far_mm: Option<u16>,
}

/// Gray level per pixel: 0 for missing depth, otherwise
/// `255 - round(254 * t)` where `t` is the depth clamped to the region's
/// `[near, far]` and scaled to `[0, 1]` (0 when near equals far). Near is
/// bright, far is dark, and every measured pixel is at least 1.
pub fn normalize_depth(frame: &DepthFrame, region: [usize; 4]) -> (Vec<u8>, Normalization) {
    let [u0, v0, u1, v1] = region;
    let (u1, v1) = (u1.min(frame.width()), v1.min(frame.height()));
    let (u0, v0) = (u0.min(u1), v0.min(v1));
    let mut range: Option<(u16, u16)> = None;
    for v in v0..v1 {
        for u in u0..u1 {
            if let Some(d) = frame.get(u, v) {
                range = Some(range.map_or((d, d), |(lo, hi)| (lo.min(d), hi.max(d))));
            }
        }
    }
    let mut out = vec![0u8; frame.width() * frame.height()];
    for (u, v, d) in frame.measurements() {
        let t = match range {
            Some((lo, hi)) if hi > lo => (d.clamp(lo, hi) - lo) as f64 / (hi - lo) as f64,
            _ => 0.0,
        };
        out[v * frame.width() + u] = 255 - (254.0 * t).round() as u8;
    }
    let norm = Normalization { region: [u0, v0, u1, v1], near_mm: range.map(|r| r.0), far_mm: range.map(|r| r.1) };
    (out, norm)
}

#[derive(Debug, Deserialize)]
pub struct RegionQuery {
    pub u0: Option<usize>,
    pub v0: Option<usize>,
    pub u1: Option<usize>,
    pub v1: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AnnotationView {
    pub annotator: String,
    /// `"manifest"` or `"accepted"`.
    pub source: String,
    pub joints: Vec<JointRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FrameView {
    pub index: usize,
    pub id: String,
    pub width: usize,
    pub height: usize,
    pub intrinsics: CameraIntrinsics,
    /// Base64 8-bit grayscale PNG.
    pub depth_png: String,
    pub normalization: Normalization,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rgb: Option<String>,
    pub annotations: Vec<AnnotationView>,
    pub next: Option<usize>,
}

async fn frame_view(
    State(state): State<Arc<AppState>>,
    UrlPath(index): UrlPath<usize>,
    Query(q): Query<RegionQuery>,
) -> ApiResult<Json<FrameView>> {
    let i = frame_index(&state, index)?;
    let st = state.clone();
    let (depth, rgb) = blocking(move || {
        let depth = st.dataset.depth(i)?;
        let rgb = match st.dataset.rgb_path(i) {
            Some(p) => Some(std::fs::read(&p).map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "data_error", format!("{}: {e}", p.display())))?),
            None => None,
        };
        Ok((depth, rgb))
    })
    .await?;
    let region = [q.u0.unwrap_or(0), q.v0.unwrap_or(0), q.u1.unwrap_or(usize::MAX), q.v1.unwrap_or(usize::MAX)];
    let (gray, normalization) = normalize_depth(&depth, region);

    let id = state.dataset.entry(i).expect("in range").id.clone();
    let mut annotations: Vec<AnnotationView> = state
        .dataset
        .annotations(i)
        .iter()
        .map(|a| AnnotationView {
            annotator: a.annotator.clone(),
            source: "manifest".into(),
            joints: HandRecord::from_pose(a.annotator.clone(), &a.pose).joints,
        })
        .collect();
    {
        let log = state.log.lock().expect("log lock");
        let mut latest: Vec<&AcceptedRecord> = Vec::new();
        for r in log.records().iter().filter(|r| r.frame == id) {
            match latest.iter_mut().find(|x| x.hand.annotator == r.hand.annotator) {
                Some(slot) => *slot = r,
                None => latest.push(r),
            }
        }
        annotations.extend(latest.into_iter().map(|r| AnnotationView {
            annotator: r.hand.annotator.clone(),
            source: "accepted".into(),
            joints: r.hand.joints.clone(),
        }));
    }

    Ok(Json(FrameView {
        index: i,
        id,
        width: depth.width(),
        height: depth.height(),
        intrinsics: *depth.intrinsics(),
        depth_png: BASE64.encode(encode_gray8_png(depth.width(), depth.height(), &gray)),
        normalization,
        rgb: rgb.map(|b| BASE64.encode(b)),
        annotations,
        next: (i + 1 < state.dataset.len()).then_some(i + 1),
    }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FitRequest {
    pub labels: Vec<Label>,
    /// Starting parameters; by default the rest pose placed at the labels
    /// using the depth under them.
    #[serde(default)]
    pub init: Option<PoseParams>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct OverlayPoint {
    pub joint: Joint,
    pub u: f64,
    pub v: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Residual {
    pub joint: Joint,
    pub pixels: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Fit {
    pub params: PoseParams,
    pub theta: Vec<f64>,
    /// All 21 joints projected; joints behind the camera are omitted.
    pub overlay: Vec<OverlayPoint>,
    pub joints: Vec<JointRecord>,
    pub residuals: Vec<Residual>,
    pub mean_residual_px: f64,
    pub iterations: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FitResponse {
    pub under_constrained: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
    pub fit: Option<Fit>,
}

/// Rest pose translated so its labeled joints center on the labels
/// re-projected at the median depth found under them.
pub fn initial_params(labels: &[Label], frame: &DepthFrame, skeleton: &HandSkeleton) -> PoseParams {
    let rest = PoseParams::rest();
    let pose = forward_kinematics(&rest, skeleton);
    let mut depths: Vec<u16> = labels.iter().filter_map(|l| depth_near(frame, l.u, l.v, 2)).collect();
    if depths.is_empty() {
        depths = frame.measurements().map(|(_, _, d)| d).collect();
    }
    depths.sort_unstable();
    let z = depths.get(depths.len() / 2).map_or(500.0, |d| *d as f64);
    let n = labels.len() as f64;
    let (mu, mv) = labels.iter().fold((0.0, 0.0), |(a, b), l| (a + l.u / n, b + l.v / n));
    let target = frame.intrinsics().reproject_pixel(mu, mv, z);
    let m0 = labels.iter().fold(Point3::origin(), |acc, l| acc + pose.position(l.joint).coords / n);
    rest.with_translation(target - m0)
}

/// Millimeters of depth error charged as one pixel in the depth-assisted
/// first stage.
const DEPTH_WEIGHT: f64 = 0.1;

/// Fits in two stages: labels plus the depth under them (offset by the joint
/// radius) pick the basin, then a 2D-only refit removes the bias occluded
/// labels put into the depth terms. The plain 2D fit from `init` competes
/// with the result; the lower 2D objective wins.
pub fn fit_labels(
    labels: &[Label],
    frame: &DepthFrame,
    skeleton: &HandSkeleton,
    init: &PoseParams,
    config: &IkConfig,
) -> voxhand_core::Result<IkSolution> {
    let k = frame.intrinsics();
    let targets: Vec<IkTarget> = labels
        .iter()
        .map(|l| IkTarget {
            joint: l.joint,
            u: l.u,
            v: l.v,
            depth: depth_near(frame, l.u, l.v, 1).map(|d| d as f64 + skeleton.spec(l.joint).radius),
            depth_weight: DEPTH_WEIGHT,
        })
        .collect();
    let plain = ik_fit(labels, k, skeleton, init, config)?;
    if targets.iter().all(|t| t.depth.is_none()) {
        return Ok(plain);
    }
    let staged = solve_targets(&targets, k, skeleton, init, config)?;
    let refined = ik_fit(labels, k, skeleton, &staged.params, config)?;
    Ok(if refined.objective < plain.objective { refined } else { plain })
}

fn depth_near(frame: &DepthFrame, u: f64, v: f64, radius: i64) -> Option<u16> {
    let (cu, cv) = (u.round() as i64, v.round() as i64);
    let mut found: Vec<u16> = Vec::new();
    for dv in -radius..=radius {
        for du in -radius..=radius {
            let (x, y) = (cu + du, cv + dv);
            if x >= 0 && y >= 0 {
                if let Some(d) = frame.get(x as usize, y as usize) {
                    found.push(d);
                }
            }
        }
    }
    found.sort_unstable();
    found.get(found.len() / 2).copied()
}

async fn fit(State(state): State<Arc<AppState>>, UrlPath(index): UrlPath<usize>, body: Bytes) -> ApiResult<Json<FitResponse>> {
    let i = frame_index(&state, index)?;
    let req: FitRequest = parse_body(&body)?;
    if req.labels.is_empty() {
        return Ok(Json(FitResponse {
            under_constrained: true,
            warning: Some("no labels: place at least one keypoint to fit".into()),
            fit: None,
        }));
    }
    let mut seen = [false; NUM_JOINTS];
    for l in &req.labels {
        if std::mem::replace(&mut seen[l.joint.index()], true) {
            return Err(ApiError::bad_request(format!("joint {} labeled twice", l.joint)));
        }
    }
    blocking(move || {
        let frame = state.dataset.depth(i)?;
        let init = req.init.unwrap_or_else(|| initial_params(&req.labels, &frame, &state.skeleton));
        let k = *frame.intrinsics();
        let sol = fit_labels(&req.labels, &frame, &state.skeleton, &init, &state.ik)?;
        let pose = forward_kinematics(&sol.params, &state.skeleton);
        let overlay = Joint::ALL
            .iter()
            .filter_map(|j| k.project(&pose.position(*j)).ok().map(|(u, v)| OverlayPoint { joint: *j, u, v }))
            .collect();
        let under = sol.under_constrained;
        let mean = sol.mean_residual();
        let theta: [f64; NUM_PARAMS] = sol.params.to_vec();
        Ok(FitResponse {
            under_constrained: under,
            warning: under.then(|| format!("{} labels do not determine the pose; need {}", req.labels.len(), state.ik.min_labels)),
            fit: Some(Fit {
                params: sol.params,
                theta: theta.to_vec(),
                overlay,
                joints: HandRecord::from_pose("", &pose).joints,
                residuals: sol.residuals.iter().map(|(joint, pixels)| Residual { joint: *joint, pixels: *pixels }).collect(),
                mean_residual_px: mean,
                iterations: sol.iterations,
            }),
        })
    })
    .await
    .map(Json)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AcceptRequest {
    pub annotator: String,
    /// Fitted parameters; the stored joints are their forward kinematics.
    #[serde(default)]
    pub params: Option<PoseParams>,
    /// Explicit joints instead of `params`.
    #[serde(default)]
    pub joints: Option<Vec<JointRecord>>,
    /// Per-joint visibility in canonical order when accepting `params`;
    /// all visible if absent.
    #[serde(default)]
    pub visible: Option<Vec<bool>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AcceptResponse {
    pub frame: String,
    pub annotator: String,
    /// False when the same annotation was already stored.
    pub stored: bool,
    pub next: Option<usize>,
}

async fn accept(State(state): State<Arc<AppState>>, UrlPath(index): UrlPath<usize>, body: Bytes) -> ApiResult<Json<AcceptResponse>> {
    let i = frame_index(&state, index)?;
    let req: AcceptRequest = parse_body(&body)?;
    if req.annotator.trim().is_empty() {
        return Err(ApiError::bad_request("annotator id is required"));
    }
    let hand = match (&req.params, &req.joints) {
        (Some(p), None) => {
            if !p.is_finite() {
                return Err(ApiError::bad_request("params are not finite"));
            }
            let mut pose = forward_kinematics(p, &state.skeleton);
            if let Some(v) = &req.visible {
                if v.len() != NUM_JOINTS {
                    return Err(ApiError::bad_request(format!("visible needs {NUM_JOINTS} flags, got {}", v.len())));
                }
                pose.visible.copy_from_slice(v);
            }
            HandRecord::from_pose(req.annotator.clone(), &pose)
        }
        (None, Some(joints)) => {
            let rec = HandRecord { annotator: req.annotator.clone(), joints: joints.clone() };
            let pose = rec.to_pose().map_err(ApiError::bad_request)?;
            HandRecord::from_pose(req.annotator.clone(), &pose)
        }
        _ => return Err(ApiError::bad_request("give exactly one of params or joints")),
    };
    let frame = state.dataset.entry(i).expect("in range").id.clone();
    let stored = {
        let mut log = state.log.lock().expect("log lock");
        log.append(AcceptedRecord { frame: frame.clone(), hand })?
    };
    Ok(Json(AcceptResponse { frame, annotator: req.annotator, stored, next: (i + 1 < state.dataset.len()).then_some(i + 1) }))
}

#[derive(Debug, Deserialize)]
pub struct AgreementQuery {
    pub mode: Option<String>,
    pub format: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ComparedFrame {
    pub index: usize,
    pub id: String,
    pub annotators: [String; 2],
    pub error: FrameError,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AgreementView {
    pub report: AgreementReport,
    pub frames: Vec<ComparedFrame>,
}

async fn agreement(State(state): State<Arc<AppState>>, Query(q): Query<AgreementQuery>) -> ApiResult<Response> {
    let mode: ErrorMode = q.mode.as_deref().unwrap_or("max").parse().map_err(ApiError::bad_request)?;
    let accepted = state.log.lock().expect("log lock").records().to_vec();
    let merged = merged_annotations(&state.dataset, &accepted);
    let per_frame: Vec<Vec<(String, _)>> =
        merged.into_iter().map(|hs| hs.into_iter().map(|a| (a.annotator, a.pose)).collect()).collect();
    let report = match annotator_agreement(&per_frame, mode, &default_thresholds()) {
        Err(voxhand_core::Error::InsufficientAnnotators) => {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "insufficient_annotators",
                "no frame carries annotations from two annotators",
            ))
        }
        r => r?,
    };
    // the same pairing rule the report uses: first annotator against the
    // first different one
    let mut frames = Vec::new();
    for (i, anns) in per_frame.iter().enumerate() {
        let Some((first, _)) = anns.first() else { continue };
        let Some((second, _)) = anns.iter().find(|(a, _)| a != first) else { continue };
        frames.push(ComparedFrame {
            index: i,
            id: state.dataset.entry(i).expect("in range").id.clone(),
            annotators: [first.clone(), second.clone()],
            error: report.scores[frames.len()],
        });
    }
    match q.format.as_deref() {
        None | Some("json") => Ok(Json(AgreementView { report, frames }).into_response()),
        Some("csv") => Ok(([(header::CONTENT_TYPE, "text/csv")], crate::commands::agreement_csv(&report)).into_response()),
        Some(other) => Err(ApiError::bad_request(format!("unknown format {other:?}, use json or csv"))),
    }
}
