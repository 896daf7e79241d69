//! Command-line front end for the tracking engine.
//!
//! Subcommands: `track` (detections -> trajectories), `eval` (CLEAR-MOT
//! scoring), `sweep` (detector-threshold-swept evaluation), `gen`
//! (synthetic scenarios), `bench` (throughput report). Every run emits a
//! manifest with input/output digests for reproducibility. The
//! `VIOU_THREADS` environment variable caps the worker pool.

mod commands;
mod manifest;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

use viou_core::tracker::TrackerConfig;

#[derive(Parser)]
#[command(name = "viou", version, about = "Online multi-object tracking with IOU + re-identification association")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Tracker parameters; every key of the config file has a flag of the same
/// name. Flags override the config file, which overrides built-in defaults.
#[derive(Args, Debug, Default, Clone)]
struct TrackerFlags {
    /// Key/value config file (see README for the format).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Weight of the IOU term (alpha + beta must equal 1).
    #[arg(long)]
    alpha: Option<f64>,
    /// Weight of the appearance term.
    #[arg(long)]
    beta: Option<f64>,
    /// Minimum-overlap association gate.
    #[arg(long)]
    sigma_iou: Option<f64>,
    /// Minimum cosine similarity for an appearance rescue.
    #[arg(long)]
    sigma_reid: Option<f64>,
    /// Loose overlap gate applied to appearance-rescued pairs.
    #[arg(long)]
    sigma_iou_relaxed: Option<f64>,
    /// Maximum consecutive coasted frames before a track ends.
    #[arg(long)]
    ttl: Option<u32>,
    /// Minimum detected boxes for a track to be kept.
    #[arg(long)]
    t_min: Option<u32>,
    /// Momentum of the per-track appearance moving average.
    #[arg(long)]
    ema_momentum: Option<f64>,
    /// Attempt backward merges of new tracks into recently ended ones.
    #[arg(long)]
    backward_enabled: Option<bool>,
    /// Gate backward merges on appearance alone.
    #[arg(long)]
    backward_appearance_only: Option<bool>,
    /// Gap prediction model: constant_velocity or constant_position.
    #[arg(long)]
    predictor: Option<String>,
    /// History entries used for velocity estimation.
    #[arg(long)]
    velocity_window: Option<usize>,
}

impl TrackerFlags {
    fn resolve(&self) -> Result<TrackerConfig> {
        let mut cfg = match &self.config {
            Some(path) => viou_core::config::parse_config_file(path)
                .with_context(|| format!("loading config {}", path.display()))?,
            None => TrackerConfig::default(),
        };
        if let Some(v) = self.alpha {
            cfg.assoc.alpha = v;
        }
        if let Some(v) = self.beta {
            cfg.assoc.beta = v;
        }
        if let Some(v) = self.sigma_iou {
            cfg.assoc.sigma_iou = v;
        }
        if let Some(v) = self.sigma_reid {
            cfg.assoc.sigma_reid = v;
        }
        if let Some(v) = self.sigma_iou_relaxed {
            cfg.assoc.sigma_iou_relaxed = v;
        }
        if let Some(v) = self.ttl {
            cfg.ttl = v;
        }
        if let Some(v) = self.t_min {
            cfg.t_min = v;
        }
        if let Some(v) = self.ema_momentum {
            cfg.ema_momentum = v;
        }
        if let Some(v) = self.backward_enabled {
            cfg.backward_enabled = v;
        }
        if let Some(v) = self.backward_appearance_only {
            cfg.backward_appearance_only = v;
        }
        if let Some(v) = &self.predictor {
            cfg.predictor = v.parse()?;
        }
        if let Some(v) = self.velocity_window {
            cfg.velocity_window = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the tracker over a detection file and write trajectories.
    Track {
        /// Detection CSV (frame,x,y,w,h,confidence,class_id[,embedding_row]).
        #[arg(long)]
        detections: PathBuf,
        /// Embedding sidecar (.emb) matching the detection file.
        #[arg(long)]
        sidecar: Option<PathBuf>,
        /// Lift top-50 per-frame confidences by 1.25x before tracking.
        #[arg(long, default_value_t = false)]
        rescale_top50: bool,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[command(flatten)]
        tracker: TrackerFlags,
    },
    /// Score a track file against ground truth with CLEAR-MOT metrics.
    Eval {
        /// Ground-truth CSV (frame,id,x,y,w,h,conf,-1,-1,-1).
        #[arg(long)]
        gt: PathBuf,
        /// Hypothesis track CSV in the same shape.
        #[arg(long)]
        tracks: PathBuf,
        /// Overlap gate for correspondence.
        #[arg(long, default_value_t = 0.5)]
        match_iou: f64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Run the tracker at each confidence threshold and aggregate metrics.
    Sweep {
        #[arg(long)]
        detections: PathBuf,
        #[arg(long)]
        sidecar: Option<PathBuf>,
        #[arg(long)]
        gt: PathBuf,
        /// Comma-separated thresholds; default 0.0,0.1,...,1.0.
        #[arg(long)]
        thresholds: Option<String>,
        /// Lift top-50 per-frame confidences by 1.25x before the sweep.
        #[arg(long, default_value_t = false)]
        rescale_top50: bool,
        #[arg(long, default_value_t = 0.5)]
        match_iou: f64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[command(flatten)]
        tracker: TrackerFlags,
    },
    /// Generate a synthetic scenario (detections, ground truth, sidecar).
    Gen {
        /// Preset: short_occlusion, long_occlusion, crossing, fast_motion,
        /// dense_parallel.
        #[arg(long)]
        preset: String,
        /// Override the preset's frozen seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Measure association and end-to-end tracking throughput in memory.
    Bench {
        /// Detections per frame.
        #[arg(long, default_value_t = 25)]
        det_per_frame: usize,
        /// Embedding dimension.
        #[arg(long, default_value_t = 2048)]
        dim: usize,
        /// Frames per measured run.
        #[arg(long, default_value_t = 5000)]
        frames: u64,
        /// Measured runs; the best is reported.
        #[arg(long, default_value_t = 3)]
        runs: u32,
        /// Workload seed.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// When set, also write the report and a manifest here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn init_worker_pool() -> Result<()> {
    if let Ok(raw) = std::env::var("VIOU_THREADS") {
        let threads: usize = raw
            .parse()
            .with_context(|| format!("VIOU_THREADS must be a positive integer, got {raw:?}"))?;
        if threads == 0 {
            anyhow::bail!("VIOU_THREADS must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("initializing worker pool")?;
    }
    Ok(())
}

fn main() -> Result<()> {
    init_worker_pool()?;
    let cli = Cli::parse();
    match cli.command {
        Command::Track {
            detections,
            sidecar,
            rescale_top50,
            out_dir,
            tracker,
        } => commands::track(
            &detections,
            sidecar.as_deref(),
            rescale_top50,
            &out_dir,
            &tracker.resolve()?,
        ),
        Command::Eval {
            gt,
            tracks,
            match_iou,
            out_dir,
        } => commands::eval(&gt, &tracks, match_iou, &out_dir),
        Command::Sweep {
            detections,
            sidecar,
            gt,
            thresholds,
            rescale_top50,
            match_iou,
            out_dir,
            tracker,
        } => {
            let thresholds = match thresholds {
                Some(raw) => commands::parse_thresholds(&raw)?,
                None => viou_core::sweep::DEFAULT_THRESHOLDS.to_vec(),
            };
            commands::sweep(
                &detections,
                sidecar.as_deref(),
                &gt,
                &thresholds,
                rescale_top50,
                match_iou,
                &out_dir,
                &tracker.resolve()?,
            )
        }
        Command::Gen {
            preset,
            seed,
            out_dir,
        } => commands::gen(&preset, seed, &out_dir),
        Command::Bench {
            det_per_frame,
            dim,
            frames,
            runs,
            seed,
            out_dir,
        } => commands::bench(det_per_frame, dim, frames, runs, seed, out_dir.as_deref()),
    }
}
