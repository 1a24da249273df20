//! `seg` command line: segment, eval, synth, serve.

use std::ffi::OsString;
use std::fs;
use std::net::SocketAddr;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use extrseg_core::annotations::parse_annotations;
use extrseg_core::eval::evaluate_corpus;
use extrseg_core::raster::decode_image;
use extrseg_core::synth::generate_synthetic_corpus;
use extrseg_core::{segment_points, Mode, Point, SegmentationConfig};

use crate::service::{router, ServiceOptions, DEFAULT_MAX_DIM};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "seg", version, about = "Extreme-click GrabCut segmentation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment one image from four clicks and write a mask PNG.
    Segment(SegmentArgs),
    /// Score a corpus of polygon annotations and write a JSON report.
    Eval(EvalArgs),
    /// Write a synthetic corpus of images and annotations.
    Synth(SynthArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

/// Overrides for the segmentation defaults.
#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub components: Option<usize>,
}

impl ConfigArgs {
    pub fn config(&self) -> SegmentationConfig {
        let d = SegmentationConfig::default();
        SegmentationConfig {
            seed: self.seed.unwrap_or(d.seed),
            gamma: self.gamma.unwrap_or(d.gamma),
            max_iterations: self.iters.unwrap_or(d.max_iterations),
            components_per_side: self.components.unwrap_or(d.components_per_side),
            ..d
        }
    }
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[arg(long)]
    pub image: PathBuf,
    /// Four points, "x,y;x,y;x,y;x,y".
    #[arg(long, value_parser = parse_points)]
    pub points: PointList,
    #[arg(long, default_value = "extr")]
    pub mode: Mode,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory that annotation image paths are relative to.
    #[arg(long)]
    pub images: PathBuf,
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long, default_value = "extr")]
    pub mode: Mode,
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub count: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Listening port; SEG_PORT takes precedence.
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: std::net::IpAddr,
    /// Directory with the annotation UI, served at `/`.
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MAX_DIM)]
    pub max_dim: usize,
    /// Segmentations allowed to run at once; defaults to the CPU count.
    #[arg(long)]
    pub concurrency: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PointList(pub [Point; 4]);

pub fn parse_points(s: &str) -> Result<PointList, String> {
    let parts: Vec<&str> = s.split(';').filter(|p| !p.trim().is_empty()).collect();
    if parts.len() != 4 {
        return Err(format!("expected 4 points as \"x,y;x,y;x,y;x,y\", got {}", parts.len()));
    }
    let mut out = [Point::new(0, 0); 4];
    for (slot, part) in out.iter_mut().zip(&parts) {
        let (x, y) = part
            .split_once(',')
            .ok_or_else(|| format!("point \"{part}\" is not \"x,y\""))?;
        let coord = |c: &str| {
            c.trim()
                .parse::<usize>()
                .map_err(|_| format!("coordinate \"{}\" is not a non-negative integer", c.trim()))
        };
        *slot = Point::new(coord(x)?, coord(y)?);
    }
    Ok(PointList(out))
}

/// Parses `argv` and runs the command, returning the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_RUNTIME
        }
    }
}

fn dispatch(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Segment(a) => segment(a),
        Command::Eval(a) => eval(a),
        Command::Synth(a) => synth(a),
        Command::Serve(a) => serve(a),
    }
}

fn segment(a: SegmentArgs) -> anyhow::Result<()> {
    let bytes = fs::read(&a.image).with_context(|| format!("reading {}", a.image.display()))?;
    let image = decode_image(&bytes).with_context(|| format!("decoding {}", a.image.display()))?;
    let result = segment_points(&image, a.points.0, a.mode, &a.config.config())?;
    fs::write(&a.out, result.mask.encode_png()?).with_context(|| format!("writing {}", a.out.display()))?;
    println!(
        "{}: {} foreground pixels, {} iterations, energy {:.3}",
        a.out.display(),
        result.mask.count(),
        result.iterations_run,
        result.final_energy
    );
    Ok(())
}

fn eval(a: EvalArgs) -> anyhow::Result<()> {
    let text = fs::read(&a.annotations).with_context(|| format!("reading {}", a.annotations.display()))?;
    let parsed = parse_annotations(&text);
    for r in &parsed.rejected {
        eprintln!("warning: {}:{}: {}", a.annotations.display(), r.line, r.reason);
    }
    if parsed.records.is_empty() {
        bail!("no valid records in {}", a.annotations.display());
    }
    let report = evaluate_corpus(&parsed.records, &a.images, a.mode, &a.config.config(), a.jobs)?;
    fs::write(&a.report, report.to_json()).with_context(|| format!("writing {}", a.report.display()))?;
    print!("{}", report.to_table());
    Ok(())
}

fn synth(a: SynthArgs) -> anyhow::Result<()> {
    let corpus = generate_synthetic_corpus(&a.out, a.count, a.seed)?;
    println!(
        "wrote {} images to {} and {}",
        corpus.records.len(),
        corpus.images_dir.display(),
        corpus.annotations.display()
    );
    Ok(())
}

fn serve(a: ServeArgs) -> anyhow::Result<()> {
    let port = match std::env::var("SEG_PORT") {
        Ok(p) => p.parse().with_context(|| format!("SEG_PORT={p} is not a port number"))?,
        Err(_) => a.port,
    };
    let mut opts = ServiceOptions {
        static_dir: a.static_dir,
        max_dim: a.max_dim,
        ..ServiceOptions::default()
    };
    if let Some(c) = a.concurrency {
        opts.concurrency = c;
    }
    let addr = SocketAddr::new(a.host, port);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .with_context(|| format!("binding {addr}"))?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, router(opts))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}
