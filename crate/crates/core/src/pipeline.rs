//! The labeling stages as library calls, plus their on-disk artifacts.
//!
//! Each `run_*` function reads the artifacts of earlier stages from the work
//! directory and writes its own, so the CLI verbs are thin wrappers. The pure
//! counterparts (`fit_plane`, `synchronize`, `fuse_session`, `export`) take
//! and return values and are what tests and the review service call.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cart::{localize_cart, CartError};
use crate::fuse::{
    apply_corrections, associate, downsample, flag_anomalies, fuse_group, interpolate_gaps, smooth, AnomalyParams,
    Association, AssociationParams, Correction, CorrectionFailure, FuseError, FusionContext, GlobalTrack, Provenance,
    Trajectory3D,
};
use crate::geom::{fit_plane_ransac, CameraModel, GeomError, PlaneFit, PlaneModel, RansacParams};
use crate::ingest::{
    load_calibration, load_cart_labels, load_corrections, load_ground_points, load_luminance, load_tracks,
    parse_trajectories, write_corrections, write_text, write_trajectories, IngestError, IngestWarning,
    SessionManifest, TrajectoryFile,
};
use crate::synth::SynthError;
use crate::sync::{align, detect_sync_event, DetectParams, SyncError, TimeAlignment};

/// Environment variable that overrides the manifest seed.
pub const SEED_ENV: &str = "TRAJLAB_SEED";
/// Holes up to this long are interpolated; longer ones split a trajectory.
pub const MAX_GAP_S: f64 = 0.5;

/// Artifact file names inside the work directory.
pub mod artifacts {
    pub const PLANE: &str = "plane.json";
    pub const ALIGNMENT: &str = "alignment.json";
    pub const FUSED: &str = "fused.json";
    pub const CART: &str = "cart.csv";
    pub const CORRECTIONS: &str = "corrections.json";
    pub const TRAJECTORIES: &str = "trajectories.csv";
    pub const META: &str = "trajectories.meta.json";
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Sync(#[from] SyncError),
    #[error(transparent)]
    Fuse(#[from] FuseError),
    #[error(transparent)]
    Cart(#[from] CartError),
    #[error(transparent)]
    Correction(#[from] CorrectionFailure),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("{0}")]
    Config(String),
}

impl PipelineError {
    /// Machine-readable code printed after `E:`.
    pub fn code(&self) -> &'static str {
        match self {
            PipelineError::Ingest(e) => e.code(),
            PipelineError::Geom(e) => match e {
                GeomError::DegenerateGeometry(_) => "DegenerateGeometry",
                GeomError::InvalidPlane => "InvalidPlane",
                GeomError::InvalidCamera { .. } => "InvalidCamera",
                _ => "Geometry",
            },
            PipelineError::Sync(e) => match e {
                SyncError::NoEventFound { .. } => "NoEventFound",
                SyncError::AmbiguousEvent { .. } => "AmbiguousEvent",
                SyncError::MissingCamera(_) => "MissingCamera",
                SyncError::InvalidSeries(_) | SyncError::InvalidParams(_) => "InvalidSeries",
            },
            PipelineError::Fuse(e) => e.code(),
            PipelineError::Cart(e) => e.code(),
            PipelineError::Correction(e) => e.error.code(),
            PipelineError::Synth(SynthError::Ingest(e)) => e.code(),
            PipelineError::Synth(_) => "InvalidSpec",
            PipelineError::Config(_) => "Config",
        }
    }

    /// 2 for I/O failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        if self.code() == "IO" {
            2
        } else {
            1
        }
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;

/// Parses a `TRAJLAB_SEED` value.
pub fn parse_seed(raw: &str) -> Result<u64> {
    raw.trim()
        .parse()
        .map_err(|_| PipelineError::Config(format!("{SEED_ENV} must be an unsigned integer, got `{raw}`")))
}

/// A loaded manifest with its cameras and work directory.
#[derive(Debug, Clone)]
pub struct Session {
    pub manifest: SessionManifest,
    pub cameras: BTreeMap<String, CameraModel>,
    pub workdir: PathBuf,
    pub seed: u64,
}

impl Session {
    /// Loads the manifest and calibration. Artifacts go to `workdir`, or next
    /// to the manifest when none is given. `TRAJLAB_SEED` overrides the seed.
    pub fn open(manifest_path: &Path, workdir: Option<&Path>) -> Result<Self> {
        let seed = std::env::var(SEED_ENV).ok().map(|s| parse_seed(&s)).transpose()?;
        Self::open_with_seed(manifest_path, workdir, seed)
    }

    pub fn open_with_seed(manifest_path: &Path, workdir: Option<&Path>, seed: Option<u64>) -> Result<Self> {
        let manifest = SessionManifest::load(manifest_path)?;
        let cams = load_calibration(&manifest.resolve(&manifest.calibration))?;
        let cameras: BTreeMap<String, CameraModel> = cams.into_iter().map(|c| (c.id().to_string(), c)).collect();
        if let Some(missing) = manifest.camera_ids().find(|c| !cameras.contains_key(*c)) {
            return Err(IngestError::Manifest(format!("camera {missing} has tracks but no calibration")).into());
        }
        let workdir = workdir.map(Path::to_path_buf).unwrap_or_else(|| manifest.base_dir().to_path_buf());
        let seed = seed.unwrap_or(manifest.seed);
        Ok(Self {
            manifest,
            cameras,
            workdir,
            seed,
        })
    }

    pub fn artifact(&self, name: &str) -> PathBuf {
        self.workdir.join(name)
    }

    fn read_json<T: for<'de> Deserialize<'de>>(&self, name: &str) -> Result<T> {
        let path = self.artifact(name);
        let text = crate::ingest::read_file(&path)?;
        serde_json::from_str(&text).map_err(|e| {
            IngestError::Parse {
                line: e.line() as u64,
                field: "json".into(),
                message: format!("{}: {e}", path.display()),
            }
            .into()
        })
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let path = self.artifact(name);
        let text = serde_json::to_string_pretty(value).expect("artifacts serialize");
        write_text(&path, &(text + "\n"))?;
        Ok(path)
    }

    pub fn load_plane(&self) -> Result<PlaneModel> {
        self.read_json(artifacts::PLANE)
    }

    pub fn load_alignment(&self) -> Result<TimeAlignment> {
        self.read_json(artifacts::ALIGNMENT)
    }

    pub fn load_fused(&self) -> Result<FusedSession> {
        let fused: FusedSession = self.read_json(artifacts::FUSED)?;
        for t in &fused.trajectories {
            t.validate()?;
        }
        Ok(fused)
    }

    /// The correction log, empty when the file does not exist yet.
    pub fn load_corrections(&self) -> Result<Vec<Correction>> {
        let path = self.artifact(artifacts::CORRECTIONS);
        if !path.exists() {
            return Ok(Vec::new());
        }
        Ok(load_corrections(&path)?)
    }

    pub fn save_corrections(&self, log: &[Correction]) -> Result<()> {
        Ok(write_corrections(&self.artifact(artifacts::CORRECTIONS), log)?)
    }
}

/// RANSAC plane fit on the session's ground points.
pub fn fit_plane(session: &Session) -> Result<PlaneFit> {
    let points = load_ground_points(&session.manifest.resolve(&session.manifest.ground_points))?;
    let params = RansacParams {
        seed: session.seed,
        ..RansacParams::default()
    };
    Ok(fit_plane_ransac(&points, &params)?)
}

pub fn run_fit_plane(session: &Session) -> Result<PlaneFit> {
    let fit = fit_plane(session)?;
    session.write_json(artifacts::PLANE, &fit.plane)?;
    Ok(fit)
}

/// Frame offsets from the luminance flash, or identity without luminance files.
pub fn synchronize(session: &Session) -> Result<TimeAlignment> {
    let m = &session.manifest;
    let reference = m.reference().to_string();
    if m.luminance.is_empty() {
        return Ok(TimeAlignment {
            reference_camera_id: reference,
            offsets: m.camera_ids().map(|c| (c.to_string(), 0)).collect(),
            fps: m.native_fps,
        });
    }
    let mut events = BTreeMap::new();
    for (cam, path) in &m.luminance {
        let series = load_luminance(&m.resolve(path), cam, m.native_fps)?;
        events.insert(cam.clone(), detect_sync_event(&series, &DetectParams::default())?);
    }
    Ok(align(&events, &reference, m.native_fps)?)
}

pub fn run_sync(session: &Session) -> Result<TimeAlignment> {
    let alignment = synchronize(session)?;
    session.write_json(artifacts::ALIGNMENT, &alignment)?;
    Ok(alignment)
}

/// Output of the fuse stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedSession {
    pub session: String,
    pub native_fps: f64,
    pub association: Association,
    /// Sorted by id.
    pub trajectories: Vec<Trajectory3D>,
}

/// Loads every camera's tracks onto the global timeline. Warnings are
/// returned with their camera id.
pub fn load_global_tracks(
    session: &Session,
    alignment: &TimeAlignment,
) -> Result<(Vec<GlobalTrack>, Vec<(String, IngestWarning)>)> {
    let m = &session.manifest;
    let mut tracks = Vec::new();
    let mut warnings = Vec::new();
    for (cam_id, path) in &m.tracks {
        let cam = &session.cameras[cam_id];
        let offset = alignment
            .offset(cam_id)
            .ok_or_else(|| FuseError::UnknownCamera(cam_id.clone()))?;
        let set = load_tracks(&m.resolve(path), cam_id, cam.width(), cam.height())?;
        warnings.extend(set.warnings.into_iter().map(|w| (cam_id.clone(), w)));
        tracks.extend(set.tracks.iter().map(|t| GlobalTrack::from_track(t, offset)));
    }
    Ok((tracks, warnings))
}

/// Associates and fuses all tracks. Groups are fused in parallel on a pool of
/// `workers` threads; the result does not depend on the worker count.
pub fn fuse_tracks(
    session_id: &str,
    native_fps: f64,
    tracks: &[GlobalTrack],
    cameras: &BTreeMap<String, CameraModel>,
    plane: &PlaneModel,
    workers: usize,
) -> Result<FusedSession> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| PipelineError::Config(format!("cannot start worker pool: {e}")))?;
    let ctx = FusionContext { cameras, plane };
    let by_key: BTreeMap<_, _> = tracks.iter().map(|t| (&t.key, t)).collect();
    let (association, pieces) = pool.install(|| -> Result<_> {
        let association = associate(tracks, &ctx, &AssociationParams::default());
        let pieces: Vec<Vec<Trajectory3D>> = association
            .groups
            .par_iter()
            .enumerate()
            .filter(|(_, g)| g.iter().any(|k| !by_key[k].observations.is_empty()))
            .map(|(i, group)| {
                let members: Vec<&GlobalTrack> = group.iter().map(|k| by_key[k]).collect();
                let fused = fuse_group(&format!("p{}", i + 1), &members, &ctx)?;
                let mut out = interpolate_gaps(&fused, MAX_GAP_S, native_fps);
                for t in &mut out {
                    let flags = flag_anomalies(t, native_fps, &AnomalyParams::default());
                    t.set_flags(flags);
                }
                Ok(out)
            })
            .collect::<std::result::Result<_, FuseError>>()?;
        Ok((association, pieces))
    })?;
    let mut trajectories: Vec<Trajectory3D> = pieces.into_iter().flatten().collect();
    trajectories.sort_by(|a, b| a.id().cmp(b.id()));
    Ok(FusedSession {
        session: session_id.to_string(),
        native_fps,
        association,
        trajectories,
    })
}

pub fn fuse_session(
    session: &Session,
    plane: &PlaneModel,
    alignment: &TimeAlignment,
    workers: usize,
) -> Result<(FusedSession, Vec<(String, IngestWarning)>)> {
    if (alignment.fps - session.manifest.native_fps).abs() > 1e-9 {
        return Err(PipelineError::Config(format!(
            "alignment fps {} differs from native fps {}",
            alignment.fps, session.manifest.native_fps
        )));
    }
    let (tracks, warnings) = load_global_tracks(session, alignment)?;
    let fused = fuse_tracks(
        &session.manifest.session,
        session.manifest.native_fps,
        &tracks,
        &session.cameras,
        plane,
        workers,
    )?;
    Ok((fused, warnings))
}

pub fn run_fuse(session: &Session, workers: usize) -> Result<(FusedSession, Vec<(String, IngestWarning)>)> {
    let plane = session.load_plane()?;
    let alignment = session.load_alignment()?;
    let (fused, warnings) = fuse_session(session, &plane, &alignment, workers)?;
    session.write_json(artifacts::FUSED, &fused)?;
    Ok((fused, warnings))
}

/// Localizes the cart when the manifest lists cart labels.
pub fn run_cart(session: &Session) -> Result<Option<Trajectory3D>> {
    let m = &session.manifest;
    let Some(path) = &m.cart_labels else {
        return Ok(None);
    };
    let labels = load_cart_labels(&m.resolve(path))?;
    let plane = session.load_plane()?;
    let alignment = session.load_alignment()?;
    let cart = localize_cart(
        &labels,
        &session.cameras,
        &plane,
        &alignment,
        m.cart_tag_height_m.unwrap_or(0.0),
        m.output_fps,
    )?;
    let file = TrajectoryFile {
        session: m.session.clone(),
        fps: m.output_fps,
        native_fps: Some(m.native_fps),
        trajectories: vec![cart.clone()],
    };
    write_trajectories(&session.artifact(artifacts::CART), &file)?;
    Ok(Some(cart))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExportParams {
    pub native_fps: f64,
    pub output_fps: f64,
    /// Odd moving-average window; `None` or 1 disables smoothing.
    pub smooth_window: Option<usize>,
}

/// Per-trajectory facts the CSV cannot carry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub id: String,
    pub verified: bool,
    pub corrections: u32,
    /// Whether any sample came from automatic fusion.
    pub automatic: bool,
    pub two_view_fraction: f64,
    pub anomalies: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportMeta {
    pub session: String,
    pub label_fps: f64,
    pub native_fps: f64,
    pub trajectories: Vec<TrajectoryMeta>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Export {
    pub file: TrajectoryFile,
    pub meta: ExportMeta,
}

impl Export {
    pub fn csv(&self) -> Result<String> {
        Ok(self.file.render()?)
    }
}

fn anomaly_name(kind: crate::fuse::AnomalyKind) -> String {
    serde_json::to_value(kind)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

/// Replays the correction log, then smooths, downsamples and checks the
/// speed cap. Frame numbers stay on the native global timeline.
pub fn export(
    session_id: &str,
    fused: &[Trajectory3D],
    corrections: &[Correction],
    params: &ExportParams,
) -> Result<Export> {
    let corrected = apply_corrections(fused.to_vec(), corrections)?;
    let mut out = Vec::with_capacity(corrected.len());
    let mut meta = Vec::with_capacity(corrected.len());
    for t in &corrected {
        let smoothed = smooth(t, params.smooth_window.unwrap_or(1))?;
        let d = downsample(&smoothed, params.native_fps, params.output_fps)?;
        d.check_speed_cap(params.native_fps)?;
        let mut anomalies = BTreeMap::new();
        for a in flag_anomalies(t, params.native_fps, &AnomalyParams::default()) {
            *anomalies.entry(anomaly_name(a.kind)).or_insert(0) += 1;
        }
        let two_view = t
            .samples()
            .iter()
            .filter(|s| t.provenance_at(s.frame).is_some_and(Provenance::is_two_view))
            .count();
        meta.push(TrajectoryMeta {
            id: t.id().to_string(),
            verified: t.verified(),
            corrections: t.corrections(),
            automatic: t.has_automatic_samples(),
            two_view_fraction: two_view as f64 / t.samples().len() as f64,
            anomalies,
        });
        out.push(d);
    }
    Ok(Export {
        file: TrajectoryFile {
            session: session_id.to_string(),
            fps: params.output_fps,
            native_fps: (params.native_fps != params.output_fps).then_some(params.native_fps),
            trajectories: out,
        },
        meta: ExportMeta {
            session: session_id.to_string(),
            label_fps: params.output_fps,
            native_fps: params.native_fps,
            trajectories: meta,
        },
    })
}

pub fn run_export(session: &Session, output_fps: Option<f64>, smooth_window: Option<usize>) -> Result<Export> {
    let fused = session.load_fused()?;
    let corrections = session.load_corrections()?;
    let params = ExportParams {
        native_fps: session.manifest.native_fps,
        output_fps: output_fps.unwrap_or(session.manifest.output_fps),
        smooth_window,
    };
    let result = export(&session.manifest.session, &fused.trajectories, &corrections, &params)?;
    write_trajectories(&session.artifact(artifacts::TRAJECTORIES), &result.file)?;
    session.write_json(artifacts::META, &result.meta)?;
    Ok(result)
}

/// Runs every stage in order and returns the export.
pub fn run_all(session: &Session, workers: usize) -> Result<Export> {
    run_fit_plane(session)?;
    run_sync(session)?;
    run_fuse(session, workers)?;
    run_cart(session)?;
    run_export(session, None, None)
}

/// The sidecar path of an exported trajectory file.
pub fn meta_path(trajectories: &Path) -> PathBuf {
    trajectories.with_extension("meta.json")
}

/// Reads a trajectory file and its sidecar when present.
pub fn load_export(path: &Path) -> Result<(TrajectoryFile, Option<ExportMeta>)> {
    let file = parse_trajectories(&crate::ingest::read_file(path)?)?;
    let side = meta_path(path);
    let meta = if side.is_file() {
        let text = crate::ingest::read_file(&side)?;
        Some(serde_json::from_str(&text).map_err(|e| IngestError::Parse {
            line: e.line() as u64,
            field: "json".into(),
            message: format!("{}: {e}", side.display()),
        })?)
    } else {
        None
    };
    Ok((file, meta))
}
