use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use trajlab::ingest::{IngestError, IngestWarning};
use trajlab::pipeline::{
    artifacts, load_export, run_cart, run_export, run_fit_plane, run_fuse, run_sync, PipelineError, Result, Session,
};
use trajlab::stats::session_stats;
use trajlab::synth::{generate, write_session, SceneSpec};

use crate::service::{router, AppState};

#[derive(Debug, Parser)]
#[command(name = "trajlab", version, about = "Multi-camera pedestrian trajectory labeling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct SessionArgs {
    /// Session manifest (JSON).
    pub manifest: PathBuf,
    /// Directory for artifacts; defaults to the manifest's directory.
    #[arg(long)]
    pub workdir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the ground plane to the surveyed points.
    FitPlane(SessionArgs),
    /// Align camera timelines on the light flash.
    Sync(SessionArgs),
    /// Associate and fuse tracks into ground trajectories.
    Fuse {
        #[command(flatten)]
        session: SessionArgs,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Localize the cart from its labels.
    Cart(SessionArgs),
    /// Replay corrections and write the label file.
    Export {
        #[command(flatten)]
        session: SessionArgs,
        #[arg(long)]
        output_fps: Option<f64>,
        #[arg(long)]
        smooth_window: Option<usize>,
    },
    /// Print statistics of an exported trajectory file.
    Stats { file: PathBuf },
    /// Generate a synthetic session.
    Synth {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the review API on localhost.
    Serve {
        #[command(flatten)]
        session: SessionArgs,
        #[arg(long, default_value_t = 8750)]
        port: u16,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
}

fn open(args: &SessionArgs) -> Result<Session> {
    Session::open(&args.manifest, args.workdir.as_deref())
}

fn warn(warnings: &[(String, IngestWarning)]) {
    for (cam, w) in warnings {
        eprintln!("W:{cam}:{w}");
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            IngestError::MissingFile(path.to_path_buf()).into()
        } else {
            IngestError::Io {
                path: path.to_path_buf(),
                source,
            }
            .into()
        }
    })
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::FitPlane(args) => {
            let s = open(&args)?;
            let fit = run_fit_plane(&s)?;
            println!("{} ({} inliers)", s.artifact(artifacts::PLANE).display(), fit.inliers.len());
        }
        Command::Sync(args) => {
            let s = open(&args)?;
            run_sync(&s)?;
            println!("{}", s.artifact(artifacts::ALIGNMENT).display());
        }
        Command::Fuse { session, workers } => {
            let s = open(&session)?;
            let (fused, warnings) = run_fuse(&s, workers)?;
            warn(&warnings);
            for c in &fused.association.conflicts {
                eprintln!("W:{}:association conflict between {} tracks", c.camera, c.tracks.len());
            }
            println!("{} ({} trajectories)", s.artifact(artifacts::FUSED).display(), fused.trajectories.len());
        }
        Command::Cart(args) => {
            let s = open(&args)?;
            match run_cart(&s)? {
                Some(_) => println!("{}", s.artifact(artifacts::CART).display()),
                None => eprintln!("W:cart:manifest lists no cart labels"),
            }
        }
        Command::Export {
            session,
            output_fps,
            smooth_window,
        } => {
            let s = open(&session)?;
            let out = run_export(&s, output_fps, smooth_window)?;
            println!(
                "{} ({} trajectories at {} Hz)",
                s.artifact(artifacts::TRAJECTORIES).display(),
                out.file.trajectories.len(),
                out.file.fps
            );
        }
        Command::Stats { file } => {
            let (traj, meta) = load_export(&file)?;
            print!("{}", session_stats(&traj, meta.as_ref()));
        }
        Command::Synth { spec, out } => {
            let spec: SceneSpec = match spec {
                Some(path) => serde_json::from_str(&read(&path)?)
                    .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?,
                None => SceneSpec::default(),
            };
            let scene = generate(&spec)?;
            println!("{}", write_session(&scene, &out)?.display());
        }
        Command::Serve { session, port, workers } => {
            let s = open(&session)?;
            let state = Arc::new(AppState::open(s, workers)?);
            let runtime = tokio::runtime::Runtime::new()
                .map_err(|e| PipelineError::Config(format!("cannot start runtime: {e}")))?;
            runtime.block_on(async move {
                let addr = SocketAddr::from(([127, 0, 0, 1], port));
                let listener = tokio::net::TcpListener::bind(addr).await.map_err(|source| IngestError::Io {
                    path: PathBuf::from(addr.to_string()),
                    source,
                })?;
                println!("listening on http://{addr}");
                axum::serve(listener, router(state)).await.map_err(|source| IngestError::Io {
                    path: PathBuf::from(addr.to_string()),
                    source,
                })?;
                Ok::<_, PipelineError>(())
            })?;
        }
    }
    Ok(())
}
