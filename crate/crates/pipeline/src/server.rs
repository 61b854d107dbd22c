//! Local preview service for the authoring loop.
//!
//! One writer mutates the session at a time; every successful mutation
//! publishes a new immutable [`Snapshot`] that readers clone out of a lock
//! held only for the pointer copy.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock, RwLock};

use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chromafold_core::color::FilterKind;
use chromafold_core::image::{filter_image, id_map_png, CompositeImage};
use chromafold_core::mesh::TriangleMesh;
use chromafold_core::papercraft::{FlattenSelection, TextureAtlas};
use chromafold_core::render::render_id_map;
use chromafold_core::scene::Structure;
use serde::{Deserialize, Serialize};

use crate::config::{HueName, ProjectConfig};
use crate::error::{io_at, PipelineError, Result};
use crate::stages::{
    colorize, present_3d, project_atlas, render_folded, render_images_2d, render_options,
    PaperStage, Pipeline,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FilterParam {
    #[default]
    None,
    Red,
    Green,
    Blue,
}

impl FilterParam {
    fn kind(self) -> Option<FilterKind> {
        match self {
            FilterParam::None => None,
            FilterParam::Red => Some(FilterKind::Red),
            FilterParam::Green => Some(FilterKind::Green),
            FilterParam::Blue => Some(FilterKind::Blue),
        }
    }
}

/// Which image a preview shows: the 2D composite, the texture atlas, or the
/// textured paper mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum View {
    #[default]
    Composite,
    Atlas,
    Folded,
}

/// Everything readers see for one revision. Encoded images are produced on
/// first request and cached.
pub struct Snapshot {
    pub revision: u64,
    pub config: ProjectConfig,
    pub history: Vec<FlattenSelection>,
    stage: Arc<PaperStage>,
    composite: Arc<CompositeImage>,
    atlas: Arc<TextureAtlas>,
    folded: Arc<CompositeImage>,
    ids: Arc<Vec<u32>>,
    pngs: Mutex<HashMap<(View, FilterParam), Arc<Vec<u8>>>>,
    id_png: OnceLock<Arc<Vec<u8>>>,
    export: OnceLock<Arc<Vec<u8>>>,
}

impl Snapshot {
    pub fn paper_triangles(&self) -> usize {
        self.stage.paper.mesh.triangle_count()
    }

    pub fn atlas(&self) -> &TextureAtlas {
        &self.atlas
    }

    pub fn stage(&self) -> &PaperStage {
        &self.stage
    }

    pub fn preview_png(&self, view: View, filter: FilterParam) -> Result<Arc<Vec<u8>>> {
        if let Some(p) = self.pngs.lock().unwrap().get(&(view, filter)) {
            return Ok(p.clone());
        }
        let base: &CompositeImage = match view {
            View::Composite => &self.composite,
            View::Atlas => &self.atlas.image,
            View::Folded => &self.folded,
        };
        let png = Arc::new(match filter.kind() {
            Some(f) => filter_image(base, f).png_bytes()?,
            None => base.png_bytes()?,
        });
        self.pngs
            .lock()
            .unwrap()
            .insert((view, filter), png.clone());
        Ok(png)
    }

    pub fn id_map_png(&self) -> Result<Arc<Vec<u8>>> {
        if let Some(p) = self.id_png.get() {
            return Ok(p.clone());
        }
        let png = Arc::new(id_map_png(
            self.config.render.width,
            self.config.render.height,
            &self.ids,
        )?);
        Ok(self.id_png.get_or_init(|| png).clone())
    }

    pub fn export_zip(&self) -> Result<Arc<Vec<u8>>> {
        if let Some(z) = self.export.get() {
            return Ok(z.clone());
        }
        let zip = Arc::new(present_3d(&self.config, &self.stage, &self.atlas)?.zip()?);
        Ok(self.export.get_or_init(|| zip).clone())
    }

    fn state_json(&self) -> serde_json::Value {
        let r = self.revision;
        let mut artifacts = serde_json::Map::new();
        for view in ["composite", "atlas", "folded"] {
            for filter in ["none", "red", "green", "blue"] {
                artifacts.insert(
                    format!("{view}_{filter}"),
                    format!("/api/preview?view={view}&filter={filter}&revision={r}").into(),
                );
            }
        }
        artifacts.insert("idmap".into(), format!("/api/idmap?revision={r}").into());
        artifacts.insert("export".into(), "/api/export".into());
        serde_json::json!({
            "revision": r,
            "config": self.config,
            "flatten_history": self.history.iter().map(|s| &s.triangles).collect::<Vec<_>>(),
            "paper_triangles": self.paper_triangles(),
            "artifacts": artifacts,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    revision: u64,
    base_config: ProjectConfig,
    config: ProjectConfig,
    history: Vec<Vec<usize>>,
}

/// Writer-side session state.
pub struct Session {
    base_config: ProjectConfig,
    config: ProjectConfig,
    meshes: Vec<TriangleMesh>,
    structures: Vec<Structure>,
    pipeline: Pipeline,
    history: Vec<FlattenSelection>,
    revision: u64,
    checkpoint: Option<PathBuf>,
    current: Option<Arc<Snapshot>>,
}

#[derive(Clone, Copy)]
struct Dirty {
    scene: bool,
    atlas: bool,
}

impl Session {
    /// Loads the meshes and renders revision 0, or resumes the checkpoint if
    /// it was written for the same config.
    pub fn open(config: ProjectConfig, checkpoint: Option<PathBuf>) -> Result<Self> {
        let meshes = crate::stages::load_meshes(&config)?;
        let structures = colorize(&config, &meshes)?;
        let mut s = Session {
            base_config: config.clone(),
            config,
            meshes,
            structures,
            pipeline: Pipeline::default(),
            history: Vec::new(),
            revision: 0,
            checkpoint,
            current: None,
        };
        if let Some(cp) = s.read_checkpoint() {
            if cp.base_config == s.base_config {
                log::info!("resuming session at revision {}", cp.revision);
                s.config = cp.config;
                s.structures = colorize(&s.config, &s.meshes)?;
                s.history = cp.history.into_iter().map(FlattenSelection::new).collect();
                s.revision = cp.revision;
            }
        }
        s.publish(Dirty {
            scene: true,
            atlas: true,
        })?;
        Ok(s)
    }

    fn read_checkpoint(&self) -> Option<Checkpoint> {
        let path = self.checkpoint.as_ref()?;
        let text = std::fs::read_to_string(path).ok()?;
        match serde_json::from_str(&text) {
            Ok(cp) => Some(cp),
            Err(e) => {
                log::warn!("ignoring unreadable checkpoint {}: {e}", path.display());
                None
            }
        }
    }

    fn write_checkpoint(&self) -> Result<()> {
        let Some(path) = &self.checkpoint else {
            return Ok(());
        };
        let cp = Checkpoint {
            revision: self.revision,
            base_config: self.base_config.clone(),
            config: self.config.clone(),
            history: self
                .history
                .iter()
                .map(|s| s.triangles.iter().copied().collect())
                .collect(),
        };
        let tmp = path.with_extension("tmp");
        let text = serde_json::to_string_pretty(&cp).expect("checkpoint serializes");
        std::fs::write(&tmp, text).map_err(io_at(&tmp))?;
        std::fs::rename(&tmp, path).map_err(io_at(path))?;
        Ok(())
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.current.clone().expect("session has published a revision")
    }

    pub fn pipeline(&self) -> &Pipeline {
        &self.pipeline
    }

    fn publish(&mut self, dirty: Dirty) -> Result<()> {
        let stage = self.pipeline.paper_stage(&self.config, &self.meshes)?;
        let prev = self.current.as_ref().filter(|p| Arc::ptr_eq(&p.stage, &stage));
        let composite = match prev {
            Some(p) if !dirty.scene => p.composite.clone(),
            _ => Arc::new(render_images_2d(&self.config, &self.structures)?.composite),
        };
        let atlas = match prev {
            Some(p) if !dirty.atlas => p.atlas.clone(),
            _ => Arc::new(project_atlas(
                &self.config,
                &self.structures,
                &stage,
                &self.history,
            )?),
        };
        let folded = Arc::new(render_folded(&self.config, &stage, &atlas)?);
        let ids = Arc::new(render_id_map(
            &stage.paper.mesh,
            &self.config.camera()?,
            &render_options(&self.config),
        ));
        self.current = Some(Arc::new(Snapshot {
            revision: self.revision,
            config: self.config.clone(),
            history: self.history.clone(),
            stage,
            composite,
            atlas,
            folded,
            ids,
            pngs: Mutex::new(HashMap::new()),
            id_png: OnceLock::new(),
            export: OnceLock::new(),
        }));
        Ok(())
    }

    /// Applies `change` to a copy of the state and commits it only if the
    /// new revision renders.
    fn mutate(
        &mut self,
        dirty: Dirty,
        change: impl FnOnce(&mut ProjectConfig, &mut Vec<FlattenSelection>) -> Result<()>,
    ) -> Result<u64> {
        let saved = (
            self.config.clone(),
            self.structures.clone(),
            self.history.clone(),
            self.revision,
        );
        let result = (|| {
            change(&mut self.config, &mut self.history)?;
            self.config.validate_values()?;
            self.structures = colorize(&self.config, &self.meshes)?;
            self.revision += 1;
            self.publish(dirty)
        })();
        if let Err(e) = result {
            (self.config, self.structures, self.history, self.revision) = saved;
            return Err(e);
        }
        self.write_checkpoint()?;
        Ok(self.revision)
    }

    pub fn set_camera(&mut self, cam: &CameraRequest) -> Result<u64> {
        self.mutate(
            Dirty {
                scene: true,
                atlas: false,
            },
            |cfg, _| {
                cfg.camera.position = cam.position;
                cfg.camera.look_at = cam.look_at;
                cfg.camera.up = cam.up;
                cfg.camera.vfov = cam.vfov;
                Ok(())
            },
        )
    }

    pub fn set_palette(&mut self, p: &PaletteRequest) -> Result<u64> {
        self.mutate(
            Dirty {
                scene: true,
                atlas: true,
            },
            |cfg, _| {
                let n = cfg.structures.len();
                let s = cfg.structures.get_mut(p.structure_index).ok_or_else(|| {
                    PipelineError::Config {
                        field: "structure_index".into(),
                        message: format!("{} out of range ({n} structures)", p.structure_index),
                    }
                })?;
                s.hue = p.hue;
                if let Some(o) = p.opacity {
                    s.opacity = o;
                }
                Ok(())
            },
        )
    }

    pub fn flatten(&mut self, triangles: &[usize]) -> Result<u64> {
        let count = self.snapshot().paper_triangles();
        self.mutate(
            Dirty {
                scene: false,
                atlas: true,
            },
            |_, history| {
                let sel = FlattenSelection::new(triangles.iter().copied());
                if sel.triangles.is_empty() {
                    return Err(PipelineError::Config {
                        field: "triangles".into(),
                        message: "empty selection".into(),
                    });
                }
                if let Some(bad) = sel.triangles.iter().find(|&&t| t >= count) {
                    return Err(PipelineError::Config {
                        field: "triangles".into(),
                        message: format!("triangle {bad} out of range ({count} triangles)"),
                    });
                }
                history.push(sel);
                Ok(())
            },
        )
    }

    /// Drops the last flatten selection; `None` when there is nothing to undo.
    pub fn undo(&mut self) -> Result<Option<u64>> {
        if self.history.is_empty() {
            return Ok(None);
        }
        self.mutate(
            Dirty {
                scene: false,
                atlas: true,
            },
            |_, history| {
                history.pop();
                Ok(())
            },
        )
        .map(Some)
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct CameraRequest {
    pub position: [f64; 3],
    pub look_at: [f64; 3],
    #[serde(default = "up_y")]
    pub up: [f64; 3],
    pub vfov: f64,
}

fn up_y() -> [f64; 3] {
    [0.0, 1.0, 0.0]
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct PaletteRequest {
    pub structure_index: usize,
    pub hue: HueName,
    pub opacity: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct FlattenRequest {
    pub triangles: Vec<usize>,
}

#[derive(Debug, Deserialize)]
pub struct PreviewQuery {
    #[serde(default)]
    pub filter: FilterParam,
    #[serde(default)]
    pub view: View,
    pub revision: Option<u64>,
}

#[derive(Debug, Deserialize)]
pub struct RevisionQuery {
    pub revision: Option<u64>,
}

pub struct AppState {
    published: RwLock<Arc<Snapshot>>,
    writer: Arc<tokio::sync::Mutex<Session>>,
}

impl AppState {
    pub fn new(session: Session) -> Arc<Self> {
        Arc::new(AppState {
            published: RwLock::new(session.snapshot()),
            writer: Arc::new(tokio::sync::Mutex::new(session)),
        })
    }

    pub fn current(&self) -> Arc<Snapshot> {
        self.published.read().unwrap().clone()
    }
}

pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(serde_json::json!({ "error": self.1 }))).into_response()
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        use chromafold_core::Error as E;
        let status = match &e {
            PipelineError::Config { .. }
            | PipelineError::Core(
                E::InvalidArgument(_) | E::Config(_) | E::DegenerateSelection(_),
            ) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

type ApiResult<T> = std::result::Result<T, ApiError>;

async fn run_mutation(
    state: Arc<AppState>,
    f: impl FnOnce(&mut Session) -> Result<Option<u64>> + Send + 'static,
) -> ApiResult<Json<serde_json::Value>> {
    let mut guard = state.writer.clone().lock_owned().await;
    let st = state.clone();
    tokio::task::spawn_blocking(move || {
        let rev = f(&mut guard)?;
        if rev.is_some() {
            *st.published.write().unwrap() = guard.snapshot();
        }
        Ok::<_, PipelineError>(rev)
    })
    .await
    .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
    .map_err(ApiError::from)?
    .map(|r| Json(serde_json::json!({ "revision": r })))
    .ok_or_else(|| ApiError(StatusCode::CONFLICT, "nothing to undo".into()))
}

fn check_revision(snap: &Snapshot, wanted: Option<u64>) -> ApiResult<()> {
    match wanted {
        Some(r) if r != snap.revision => Err(ApiError(
            StatusCode::NOT_FOUND,
            format!("revision {r} is not current ({})", snap.revision),
        )),
        _ => Ok(()),
    }
}

fn binary(content_type: &'static str, revision: u64, bytes: Arc<Vec<u8>>) -> Response {
    (
        [
            (header::CONTENT_TYPE, content_type.to_string()),
            (header::HeaderName::from_static("x-revision"), revision.to_string()),
        ],
        bytes.as_ref().clone(),
    )
        .into_response()
}

async fn get_state(State(s): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(s.current().state_json())
}

async fn get_preview(
    State(s): State<Arc<AppState>>,
    Query(q): Query<PreviewQuery>,
) -> ApiResult<Response> {
    let snap = s.current();
    check_revision(&snap, q.revision)?;
    let png = tokio::task::spawn_blocking({
        let snap = snap.clone();
        move || snap.preview_png(q.view, q.filter)
    })
    .await
    .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok(binary("image/png", snap.revision, png))
}

async fn get_idmap(
    State(s): State<Arc<AppState>>,
    Query(q): Query<RevisionQuery>,
) -> ApiResult<Response> {
    let snap = s.current();
    check_revision(&snap, q.revision)?;
    Ok(binary("image/png", snap.revision, snap.id_map_png()?))
}

async fn get_export(State(s): State<Arc<AppState>>) -> ApiResult<Response> {
    let snap = s.current();
    let zip = tokio::task::spawn_blocking({
        let snap = snap.clone();
        move || snap.export_zip()
    })
    .await
    .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    let mut resp = binary("application/zip", snap.revision, zip);
    resp.headers_mut().insert(
        header::CONTENT_DISPOSITION,
        header::HeaderValue::from_static("attachment; filename=\"papercraft.zip\""),
    );
    Ok(resp)
}

async fn post_camera(
    State(s): State<Arc<AppState>>,
    Json(req): Json<CameraRequest>,
) -> ApiResult<Json<serde_json::Value>> {
    run_mutation(s, move |sess| sess.set_camera(&req).map(Some)).await
}

async fn post_palette(
    State(s): State<Arc<AppState>>,
    Json(req): Json<PaletteRequest>,
) -> ApiResult<Json<serde_json::Value>> {
    run_mutation(s, move |sess| sess.set_palette(&req).map(Some)).await
}

async fn post_flatten(
    State(s): State<Arc<AppState>>,
    Json(req): Json<FlattenRequest>,
) -> ApiResult<Json<serde_json::Value>> {
    run_mutation(s, move |sess| sess.flatten(&req.triangles).map(Some)).await
}

async fn post_undo(State(s): State<Arc<AppState>>) -> ApiResult<Json<serde_json::Value>> {
    run_mutation(s, |sess| sess.undo()).await
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/state", get(get_state))
        .route("/api/preview", get(get_preview))
        .route("/api/idmap", get(get_idmap))
        .route("/api/export", get(get_export))
        .route("/api/camera", post(post_camera))
        .route("/api/palette", post(post_palette))
        .route("/api/flatten", post(post_flatten))
        .route("/api/undo", post(post_undo))
        .with_state(state)
}

pub const CHECKPOINT_FILE: &str = "session.json";

/// Binds `127.0.0.1:port`, builds the session and serves until the process
/// is stopped.
pub async fn serve(config: ProjectConfig, port: u16, out_dir: &Path) -> anyhow::Result<()> {
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| anyhow::anyhow!("cannot listen on {addr}: {e}"))?;
    std::fs::create_dir_all(out_dir)?;
    let checkpoint = out_dir.join(CHECKPOINT_FILE);
    let session =
        tokio::task::spawn_blocking(move || Session::open(config, Some(checkpoint))).await??;
    log::info!(
        "serving revision {} on http://{}",
        session.snapshot().revision,
        listener.local_addr()?
    );
    axum::serve(listener, router(AppState::new(session))).await?;
    Ok(())
}
