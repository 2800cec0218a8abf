//! Offline subcommands: replay, simulate, metrics, drift-check, layout.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use gazeprompt_core::calibration::{
    decide_apply_correction, fit_drift_profile, score_line_validation, DriftProfile, SweepRecording, TargetKind,
};
use gazeprompt_core::layout::TextMetrics;
use gazeprompt_core::metrics::{compute_metrics, MetricsInput, PassageMetrics};
use gazeprompt_core::session::formats::{emit_gaze_log, read_json, read_text, write_json, write_text, GazeLog};
use gazeprompt_core::session::protocol::{encode, Envelope};
use gazeprompt_core::session::simulated_messages;
use gazeprompt_core::simulator::{simulate, simulate_sweep_session, GroundTruth, ReaderProfile};
use gazeprompt_core::{Background, PageLayout};
use serde::Serialize;

use crate::config::FileConfig;
use crate::inputs::{drive, load_layout, Recording};

const SESSION_ID: &str = "session-0";

fn outbound_ndjson(msgs: &[Envelope]) -> String {
    msgs.iter().map(|m| encode(m) + "\n").collect()
}

fn message_counts(msgs: &[Envelope]) -> BTreeMap<&str, usize> {
    let mut counts = BTreeMap::new();
    for m in msgs {
        *counts.entry(m.kind.as_str()).or_insert(0) += 1;
    }
    counts
}

pub fn replay(
    cfg: &FileConfig,
    log: &Path,
    layout: Option<&Path>,
    out: Option<&Path>,
    w: &mut dyn Write,
) -> Result<()> {
    let recording = Recording::load(log)?;
    let layout = load_layout(layout)?;
    let inbound = recording.inbound(SESSION_ID, layout.as_ref())?;
    let (run, sent) = drive(&inbound, cfg.session_options(SESSION_ID))?;
    match out {
        Some(path) => write_text(path, &run.log.to_ndjson())?,
        None => write!(w, "{}", outbound_ndjson(&sent))?,
    }
    if let Recording::Session(recorded) = &recording {
        let same = recorded.outbound().eq(sent.iter());
        eprintln!("outbound matches recording: {}", if same { "yes" } else { "no" });
    }
    for (kind, n) in message_counts(&sent) {
        eprintln!("{kind}: {n}");
    }
    Ok(())
}

pub struct SimulateArgs<'a> {
    pub profile: Option<&'a Path>,
    pub layout: &'a Path,
    pub seed: Option<u64>,
    pub out: &'a Path,
}

/// Writes `gaze.log`, `truth.json` and the full `session.ndjson` into `out`.
pub fn simulate_cmd(cfg: &FileConfig, args: SimulateArgs<'_>, w: &mut dyn Write) -> Result<()> {
    let mut profile: ReaderProfile = match args.profile {
        Some(p) => read_json(p)?,
        None => ReaderProfile::default(),
    };
    if let Some(seed) = args.seed {
        profile.seed = seed;
    }
    let layout = load_layout(Some(args.layout))?.expect("path given");
    let sim = simulate(&layout, &profile);
    std::fs::create_dir_all(args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let log = GazeLog { hz: 120.0, samples: sim.samples.clone() };
    write_text(&args.out.join("gaze.log"), &emit_gaze_log(&log))?;
    write_json(&args.out.join("truth.json"), &sim.truth)?;
    let (run, _) = drive(&simulated_messages(SESSION_ID, &sim, &layout), cfg.session_options(SESSION_ID))?;
    write_text(&args.out.join("session.ndjson"), &run.log.to_ndjson())?;
    writeln!(
        w,
        "{} samples, {} fixations, {} sweeps, {} deviations, {} hesitations, {} scrolls -> {}",
        sim.samples.len(),
        sim.truth.fixations.len(),
        sim.truth.sweeps.len(),
        sim.truth.deviations.len(),
        sim.truth.difficult_words.len(),
        sim.truth.scrolls.len(),
        args.out.display()
    )?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Table,
    Json,
}

pub fn metrics(
    cfg: &FileConfig,
    log: &Path,
    layout: Option<&Path>,
    truth: Option<&Path>,
    format: ReportFormat,
    w: &mut dyn Write,
) -> Result<PassageMetrics> {
    let recording = Recording::load(log)?;
    let given = load_layout(layout)?;
    let truth: Option<GroundTruth> = truth.map(read_json).transpose()?;
    let inbound = recording.inbound(SESSION_ID, given.as_ref())?;
    let (run, _) = drive(&inbound, cfg.session_options(SESSION_ID))?;
    let s = &run.session;
    let Some(layout) = given.as_ref().or(s.pipeline().layout()) else { bail!("no layout: pass --layout") };
    if s.fixations.is_empty() {
        eprintln!("warning: no fixations detected");
    }
    let m = compute_metrics(&MetricsInput {
        fixations: &s.fixations,
        behavior: &s.behaviors,
        scrolls: &s.scrolls,
        layout,
        truth: truth.as_ref(),
        data_loss_fraction: s.data_loss_fraction(),
    })?;
    match format {
        ReportFormat::Table => write!(w, "{}", m.table())?,
        ReportFormat::Json => writeln!(w, "{}", serde_json::to_string(&m)?)?,
    }
    Ok(m)
}

#[derive(Debug, Serialize)]
pub struct DriftReport {
    pub profile: DriftProfile,
    pub raw_error_px: f64,
    pub corrected_error_px: f64,
    pub apply_correction: bool,
}

/// Fits on `sweeps` (calibration pursuits) and scores on `lines` (validation pursuits).
pub fn drift_check(sweeps: &Path, lines: &Path, w: &mut dyn Write) -> Result<DriftReport> {
    let calibration: Vec<SweepRecording> = read_json(sweeps)?;
    let validation: Vec<SweepRecording> = read_json(lines)?;
    let profile = fit_drift_profile(&calibration)?;
    let raw = score_line_validation(&validation, None)?;
    let corrected = score_line_validation(&validation, Some(&profile))?;
    let report = DriftReport {
        apply_correction: decide_apply_correction(raw, corrected),
        raw_error_px: raw,
        corrected_error_px: corrected,
        profile,
    };
    for (y, o) in report.profile.calibrated_line_ys.iter().zip(&report.profile.per_line_offset) {
        writeln!(w, "line y {y:8.1}  offset {o:+7.2} px")?;
    }
    writeln!(w, "validation error raw {raw:.2} px, corrected {corrected:.2} px")?;
    writeln!(w, "apply correction: {}", if report.apply_correction { "yes" } else { "no" })?;
    writeln!(w, "{}", serde_json::to_string(&report)?)?;
    Ok(report)
}

/// Writes simulated calibration (`lines5`) and validation (`lines4`) pursuits.
pub fn simulate_sweeps(
    cfg: &FileConfig,
    profile: Option<&Path>,
    seed: Option<u64>,
    out: &Path,
    w: &mut dyn Write,
) -> Result<()> {
    let mut profile: ReaderProfile = match profile {
        Some(p) => read_json(p)?,
        None => ReaderProfile::default(),
    };
    if let Some(seed) = seed {
        profile.seed = seed;
    }
    let geom = cfg.session_options(SESSION_ID).geometry;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let calibration = simulate_sweep_session(TargetKind::Lines5, &profile, &geom);
    let validation = simulate_sweep_session(
        TargetKind::Lines4,
        &ReaderProfile { seed: profile.seed.wrapping_add(1), ..profile },
        &geom,
    );
    write_json(&out.join("sweeps.json"), &calibration)?;
    write_json(&out.join("lines.json"), &validation)?;
    writeln!(w, "{} calibration and {} validation sweeps -> {}", calibration.len(), validation.len(), out.display())?;
    Ok(())
}

/// Flows a plain-text passage into a layout file.
pub fn layout_cmd(text: &Path, metrics: Option<&Path>, dark: bool, out: &Path) -> Result<PageLayout> {
    let text = read_text(text)?;
    let metrics: TextMetrics = match metrics {
        Some(p) => read_json(p)?,
        None => TextMetrics::default(),
    };
    let layout = PageLayout::flow_text(&text, &metrics, if dark { Background::Dark } else { Background::Light });
    if layout.lines.is_empty() {
        bail!("text has no words");
    }
    write_json(out, &layout)?;
    Ok(layout)
}
