//! `gazeprompt`: session server and offline tools for the gaze engine.

mod commands;
mod config;
mod inputs;
mod serve;

use std::io::{IsTerminal, Write};
use std::net::TcpListener;
use std::path::PathBuf;
use std::time::Duration;

use anyhow::Result;
use clap::{Parser, Subcommand};
use gazeprompt_core::session::protocol::DEFAULT_PORT;

use commands::{ReportFormat, SimulateArgs};
use config::FileConfig;

#[derive(Parser)]
#[command(name = "gazeprompt", version, about = "Gaze-driven reading augmentation engine")]
struct Cli {
    /// TOML engine configuration.
    #[arg(long, global = true, env = "GAZEPROMPT_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Accept client sessions over TCP (NDJSON lines or WebSocket).
    Serve {
        #[arg(long, default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Write each finished session log into this directory.
        #[arg(long)]
        log_dir: Option<PathBuf>,
        /// Read timeout in milliseconds used for stall detection.
        #[arg(long, default_value_t = 250)]
        poll_ms: u64,
    },
    /// Re-run a gaze log or session log and emit the engine's messages.
    Replay {
        #[arg(long)]
        log: PathBuf,
        /// Required for gaze logs; session logs carry their own layout.
        #[arg(long)]
        layout: Option<PathBuf>,
        /// Session log output; outbound NDJSON goes to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic reading session with ground truth.
    Simulate {
        /// Reader profile JSON; defaults to the built-in reader.
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long)]
        layout: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for gaze.log, truth.json and session.ndjson.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute reading measures for a recorded session.
    Metrics {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        layout: Option<PathBuf>,
        /// Simulator ground truth; supplies the intended line of each sweep.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
        format: ReportFormat,
    },
    /// Fit a drift profile on calibration sweeps and score it on validation sweeps.
    DriftCheck {
        #[arg(long)]
        sweeps: PathBuf,
        #[arg(long)]
        lines: PathBuf,
    },
    /// Generate calibration and validation sweep recordings (sweeps.json, lines.json).
    SimulateSweeps {
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Flow a plain-text passage into a layout file.
    Layout {
        #[arg(long)]
        text: PathBuf,
        /// Text metrics JSON; defaults to 32 px text with double spacing.
        #[arg(long)]
        metrics: Option<PathBuf>,
        #[arg(long)]
        dark: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    match run() {
        Err(e) if e.downcast_ref::<std::io::Error>().is_some_and(|e| e.kind() == std::io::ErrorKind::BrokenPipe) => {
            Ok(())
        }
        other => other,
    }
}

fn run() -> Result<()> {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .with_target(false)
        .init();
    let cli = Cli::parse();
    let cfg = FileConfig::load(cli.config.as_deref())?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Serve { port, host, log_dir, poll_ms } => {
            let listener = TcpListener::bind((host.as_str(), port))?;
            if let Some(dir) = &log_dir {
                std::fs::create_dir_all(dir)?;
            }
            writeln!(out, "listening on {}", listener.local_addr()?)?;
            out.flush()?;
            drop(out);
            let poll = Duration::from_millis(poll_ms.max(1));
            serve::serve(listener, serve::ServeOptions { config: cfg, log_dir, poll })
        }
        Command::Replay { log, layout, out: dest } => {
            commands::replay(&cfg, &log, layout.as_deref(), dest.as_deref(), &mut out)
        }
        Command::Simulate { profile, layout, seed, out: dir } => commands::simulate_cmd(
            &cfg,
            SimulateArgs { profile: profile.as_deref(), layout: &layout, seed, out: &dir },
            &mut out,
        ),
        Command::Metrics { log, layout, truth, format } => {
            commands::metrics(&cfg, &log, layout.as_deref(), truth.as_deref(), format, &mut out).map(drop)
        }
        Command::DriftCheck { sweeps, lines } => commands::drift_check(&sweeps, &lines, &mut out).map(drop),
        Command::SimulateSweeps { profile, seed, out: dir } => {
            commands::simulate_sweeps(&cfg, profile.as_deref(), seed, &dir, &mut out)
        }
        Command::Layout { text, metrics, dark, out: dest } => {
            let layout = commands::layout_cmd(&text, metrics.as_deref(), dark, &dest)?;
            writeln!(out, "{} lines, {} words -> {}", layout.lines.len(), layout.words.len(), dest.display())?;
            Ok(())
        }
    }
}
