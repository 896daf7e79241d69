//! Implementations of the five subcommands.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};

use viou_core::metrics::MetricsBundle;
use viou_core::mot_io::{
    assemble_inputs, load_sidecar, parse_detections, parse_ground_truth, rescale_scores,
    write_tracks,
};
use viou_core::sweep::{pr_sweep, PrSweepResult};
use viou_core::synth::{generate, preset};
use viou_core::tracker::{run_sequence, FrameInput, TrackerConfig};
use viou_core::workload::{association_fps, cosine_speedup, tracking_fps};

use crate::manifest::RunManifest;

/// Sequence name from an input path: `runs/cam3.det.csv` -> `cam3`.
fn sequence_stem(path: &Path, kind: &str) -> String {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("sequence");
    stem.strip_suffix(kind).unwrap_or(stem).to_string()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.6}")).unwrap_or_default()
}

fn record_config(manifest: &mut RunManifest, cfg: &TrackerConfig) {
    for line in viou_core::config::config_to_string(cfg).lines() {
        if let Some((k, v)) = line.split_once('=') {
            manifest.set_config(k.trim(), v.trim());
        }
    }
}

pub fn parse_thresholds(raw: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for part in raw.split(',') {
        let t: f64 = part
            .trim()
            .parse()
            .with_context(|| format!("invalid threshold {part:?}"))?;
        if !(0.0..=1.0).contains(&t) {
            bail!("threshold {t} outside [0, 1]");
        }
        out.push(t);
    }
    if out.is_empty() {
        bail!("empty threshold list");
    }
    Ok(out)
}

pub fn track(
    detections_path: &Path,
    sidecar_path: Option<&Path>,
    rescale_top50: bool,
    out_dir: &Path,
    cfg: &TrackerConfig,
) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let stem = sequence_stem(detections_path, ".det");
    let mut manifest = RunManifest::new("track");
    record_config(&mut manifest, cfg);
    manifest.set_config("rescale_top50", rescale_top50);

    let t0 = Instant::now();
    let mut dets = parse_detections(detections_path)?;
    manifest.add_input(detections_path)?;
    let sidecar = match sidecar_path {
        Some(path) => {
            let sc = load_sidecar(path, None)?;
            manifest.add_input(path)?;
            Some(sc)
        }
        None => {
            if cfg.assoc.beta > 0.0 {
                eprintln!(
                    "warning: beta = {} but no embedding sidecar given; \
                     appearance term falls back to zero",
                    cfg.assoc.beta
                );
            }
            None
        }
    };
    if rescale_top50 {
        rescale_scores(&mut dets);
    }
    let inputs = assemble_inputs(&dets, sidecar.as_ref())?;
    manifest.record_timing("parse", t0.elapsed().as_secs_f64());

    let t1 = Instant::now();
    let frames = inputs.into_iter().map(|(frame, detections)| FrameInput {
        frame,
        detections,
    });
    let (tracks, summary) = run_sequence(cfg, frames)?;
    let track_seconds = t1.elapsed().as_secs_f64();
    manifest.record_timing("track", track_seconds);

    let t2 = Instant::now();
    let out_path = out_dir.join(format!("{stem}.trk.csv"));
    write_tracks(&tracks, &out_path)?;
    manifest.add_output(&out_path)?;
    manifest.record_timing("write", t2.elapsed().as_secs_f64());
    manifest.write(&out_dir.join(format!("{stem}.track.manifest.json")))?;

    let fps = summary.frames as f64 / track_seconds.max(1e-9);
    println!(
        "tracked {}: {} tracks ({} births, {} merges, {} deaths) over {} frames / {} detections, {:.0} fps",
        stem,
        tracks.len(),
        summary.births,
        summary.merges,
        summary.deaths,
        summary.frames,
        summary.detections,
        fps
    );
    println!("wrote {}", out_path.display());
    Ok(())
}

const METRICS_HEADER: &str =
    "mota,motp,mt,ml,mt_fraction,ml_fraction,ids,fm,fp,fn,matched,gt_count,gt_tracks";

fn metrics_row(m: &MetricsBundle) -> String {
    format!(
        "{},{:.6},{},{},{:.6},{:.6},{},{},{},{},{},{},{}",
        fmt_opt(m.mota),
        m.motp,
        m.mostly_tracked,
        m.mostly_lost,
        m.mt_fraction,
        m.ml_fraction,
        m.id_switches,
        m.fragmentations,
        m.false_positives,
        m.false_negatives,
        m.matched,
        m.gt_count,
        m.gt_tracks
    )
}

fn print_metrics_table(m: &MetricsBundle) {
    println!("metric           value");
    println!("MOTA             {}", fmt_opt(m.mota));
    println!("MOTP             {:.6}", m.motp);
    println!("MT               {} ({:.1}%)", m.mostly_tracked, 100.0 * m.mt_fraction);
    println!("ML               {} ({:.1}%)", m.mostly_lost, 100.0 * m.ml_fraction);
    println!("ID switches      {}", m.id_switches);
    println!("fragmentations   {}", m.fragmentations);
    println!("false positives  {}", m.false_positives);
    println!("false negatives  {}", m.false_negatives);
    println!("matched / gt     {} / {}", m.matched, m.gt_count);
}

pub fn eval(gt_path: &Path, tracks_path: &Path, match_iou: f64, out_dir: &Path) -> Result<()> {
    if !(0.0..=1.0).contains(&match_iou) {
        bail!("--match-iou must be in [0, 1], got {match_iou}");
    }
    std::fs::create_dir_all(out_dir)?;
    let stem = sequence_stem(tracks_path, ".trk");
    let mut manifest = RunManifest::new("eval");
    manifest.set_config("match_iou", match_iou);

    let t0 = Instant::now();
    let gt = parse_ground_truth(gt_path)?;
    let hyp = parse_ground_truth(tracks_path)?;
    manifest.add_input(gt_path)?;
    manifest.add_input(tracks_path)?;
    manifest.record_timing("parse", t0.elapsed().as_secs_f64());

    let t1 = Instant::now();
    let m = viou_core::metrics::clear_mot(&gt, &hyp, match_iou);
    manifest.record_timing("eval", t1.elapsed().as_secs_f64());

    let out_path = out_dir.join(format!("{stem}.metrics.csv"));
    std::fs::write(&out_path, format!("{METRICS_HEADER}\n{}\n", metrics_row(&m)))?;
    manifest.add_output(&out_path)?;
    manifest.write(&out_dir.join(format!("{stem}.eval.manifest.json")))?;

    print_metrics_table(&m);
    println!("wrote {}", out_path.display());
    Ok(())
}

const SWEEP_HEADER: &str = "threshold,kept,precision,recall,mota,motp,mt,ml,mt_fraction,ml_fraction,ids,fm,fp,fn,matched,gt_count";

fn sweep_csv(result: &PrSweepResult) -> String {
    let mut text = String::from(SWEEP_HEADER);
    text.push('\n');
    for p in &result.points {
        let m = &p.metrics;
        let _ = writeln!(
            text,
            "{:.6},{},{},{},{},{:.6},{},{},{:.6},{:.6},{},{},{},{},{},{}",
            p.threshold,
            p.kept,
            fmt_opt(p.precision),
            fmt_opt(p.recall),
            fmt_opt(m.mota),
            m.motp,
            m.mostly_tracked,
            m.mostly_lost,
            m.mt_fraction,
            m.ml_fraction,
            m.id_switches,
            m.fragmentations,
            m.false_positives,
            m.false_negatives,
            m.matched,
            m.gt_count
        );
    }
    text
}

fn sweep_summary_csv(result: &PrSweepResult) -> String {
    let a = &result.aggregate;
    format!(
        "pr_mota,pr_motp,pr_mt,pr_ml,pr_ids,pr_fm,pr_fp,pr_fn\n{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
        fmt_opt(a.pr_mota),
        a.pr_motp,
        a.pr_mt,
        a.pr_ml,
        a.pr_ids,
        a.pr_fm,
        a.pr_fp,
        a.pr_fn
    )
}

#[allow(clippy::too_many_arguments)]
pub fn sweep(
    detections_path: &Path,
    sidecar_path: Option<&Path>,
    gt_path: &Path,
    thresholds: &[f64],
    rescale_top50: bool,
    match_iou: f64,
    out_dir: &Path,
    cfg: &TrackerConfig,
) -> Result<()> {
    if !(0.0..=1.0).contains(&match_iou) {
        bail!("--match-iou must be in [0, 1], got {match_iou}");
    }
    std::fs::create_dir_all(out_dir)?;
    let stem = sequence_stem(detections_path, ".det");
    let mut manifest = RunManifest::new("sweep");
    record_config(&mut manifest, cfg);
    manifest.set_config("match_iou", match_iou);
    manifest.set_config("rescale_top50", rescale_top50);
    manifest.set_config(
        "thresholds",
        thresholds
            .iter()
            .map(|t| t.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );

    let t0 = Instant::now();
    let mut dets = parse_detections(detections_path)?;
    manifest.add_input(detections_path)?;
    let gt = parse_ground_truth(gt_path)?;
    manifest.add_input(gt_path)?;
    let sidecar = match sidecar_path {
        Some(path) => {
            let sc = load_sidecar(path, None)?;
            manifest.add_input(path)?;
            Some(sc)
        }
        None => {
            if cfg.assoc.beta > 0.0 {
                eprintln!(
                    "warning: beta = {} but no embedding sidecar given; \
                     appearance term falls back to zero",
                    cfg.assoc.beta
                );
            }
            None
        }
    };
    if rescale_top50 {
        rescale_scores(&mut dets);
    }
    let inputs = assemble_inputs(&dets, sidecar.as_ref())?;
    manifest.record_timing("parse", t0.elapsed().as_secs_f64());

    let t1 = Instant::now();
    let result = pr_sweep(&gt, &inputs, cfg, match_iou, thresholds)?;
    manifest.record_timing("sweep", t1.elapsed().as_secs_f64());

    let points_path = out_dir.join(format!("{stem}.sweep.csv"));
    std::fs::write(&points_path, sweep_csv(&result))?;
    manifest.add_output(&points_path)?;
    let summary_path = out_dir.join(format!("{stem}.sweep_summary.csv"));
    std::fs::write(&summary_path, sweep_summary_csv(&result))?;
    manifest.add_output(&summary_path)?;
    manifest.write(&out_dir.join(format!("{stem}.sweep.manifest.json")))?;

    println!("threshold  kept  precision  recall   mota     ids  fm");
    for p in &result.points {
        println!(
            "{:>9.1} {:>5} {:>10} {:>7} {:>8} {:>4} {:>3}",
            p.threshold,
            p.kept,
            fmt_opt(p.precision),
            fmt_opt(p.recall),
            fmt_opt(p.metrics.mota),
            p.metrics.id_switches,
            p.metrics.fragmentations
        );
    }
    let a = &result.aggregate;
    println!(
        "aggregate: pr_mota {} pr_motp {:.4} pr_mt {:.4} pr_ml {:.4} pr_ids {:.2} pr_fm {:.2} pr_fp {:.2} pr_fn {:.2}",
        fmt_opt(a.pr_mota),
        a.pr_motp,
        a.pr_mt,
        a.pr_ml,
        a.pr_ids,
        a.pr_fm,
        a.pr_fp,
        a.pr_fn
    );
    println!("wrote {} and {}", points_path.display(), summary_path.display());
    Ok(())
}

pub fn gen(preset_name: &str, seed: Option<u64>, out_dir: &Path) -> Result<()> {
    let mut spec = preset(preset_name)?;
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    let mut manifest = RunManifest::new("gen");
    manifest.set_config("preset", preset_name);
    manifest.set_config("seed", spec.seed);

    let t0 = Instant::now();
    let scenario = generate(&spec)?;
    let paths = scenario.write_to_dir(out_dir, preset_name)?;
    manifest.record_timing("generate", t0.elapsed().as_secs_f64());
    for p in [&paths.detections, &paths.ground_truth, &paths.sidecar] {
        manifest.add_output(p)?;
    }
    manifest.write(&out_dir.join(format!("{preset_name}.gen.manifest.json")))?;

    println!(
        "generated {}: {} objects, {} frames, {} detections, {} embeddings (seed {})",
        preset_name,
        spec.objects.len(),
        spec.frames,
        scenario.detections.total(),
        scenario.embeddings.len(),
        spec.seed
    );
    println!(
        "wrote {}, {}, {}",
        paths.detections.display(),
        paths.ground_truth.display(),
        paths.sidecar.display()
    );
    Ok(())
}

pub fn bench(
    det_per_frame: usize,
    dim: usize,
    frames: u64,
    runs: u32,
    seed: u64,
    out_dir: Option<&Path>,
) -> Result<()> {
    if det_per_frame == 0 || dim == 0 || frames == 0 || runs == 0 {
        bail!("bench sizes must be at least 1");
    }
    let mut assoc_best = 0.0f64;
    for run in 0..runs {
        let fps = association_fps(frames, det_per_frame, dim, seed + u64::from(run));
        println!("association run {}: {:.0} fps", run + 1, fps);
        assoc_best = assoc_best.max(fps);
    }
    let mut e2e_best = 0.0f64;
    let mut tracks = 0;
    for run in 0..runs {
        let (fps, n) = tracking_fps(frames, det_per_frame, dim, seed + u64::from(run));
        println!("end-to-end run {}: {:.0} fps ({n} tracks)", run + 1, fps);
        e2e_best = e2e_best.max(fps);
        tracks = n;
    }
    let ratio = cosine_speedup(det_per_frame, det_per_frame, dim, 200, seed);

    let mut report = String::new();
    let _ = writeln!(
        report,
        "workload: {det_per_frame} det/frame, dim {dim}, {frames} frames, best of {runs}"
    );
    let _ = writeln!(report, "association: {assoc_best:.0} fps");
    let _ = writeln!(report, "end_to_end: {e2e_best:.0} fps ({tracks} tracks)");
    let _ = writeln!(
        report,
        "batched_vs_scalar_cosine: {ratio:.1}x at {det_per_frame}x{det_per_frame}x{dim}"
    );
    print!("{report}");

    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        let mut manifest = RunManifest::new("bench");
        manifest.set_config("det_per_frame", det_per_frame);
        manifest.set_config("dim", dim);
        manifest.set_config("frames", frames);
        manifest.set_config("runs", runs);
        manifest.set_config("seed", seed);
        let report_path = dir.join("bench.report.txt");
        std::fs::write(&report_path, &report)?;
        manifest.add_output(&report_path)?;
        manifest.write(&dir.join("bench.manifest.json"))?;
        println!("wrote {}", report_path.display());
    }
    Ok(())
}
