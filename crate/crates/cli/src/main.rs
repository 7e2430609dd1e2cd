use clap::{Parser, Subcommand};
use spice::config::RuntimeConfig;
use spice::exit;
use spice::live::{percentile, start_live, LiveError};
use spice::pipeline::Summary;
use spice::replay::{images_dir, run_replay};
use spice::simulate::{run_simulate, Script};
use spice::trace::{read_trace, write_trace};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

#[derive(Parser)]
#[command(name = "spice", version, about = "Tabletop cooking assistant runtime")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Listen for tracker datagrams and serve the UI channel.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Stop after this many seconds instead of running until killed.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Feed a trace through the pipeline in virtual time.
    Replay {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        /// Write the event log here.
        #[arg(long)]
        golden: Option<PathBuf>,
        /// Compare the event log with this file and fail on any difference.
        #[arg(long)]
        check: Option<PathBuf>,
        /// Print the summary as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Generate a trace from a session script.
    Simulate {
        #[arg(long)]
        script: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize and test usability-study data.
    Analyze {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

// stdout may be a closed pipe (`spice analyze | head`); that is not an error worth a panic
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

fn fail(code: i32, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("spice: {msg}");
    ExitCode::from(code as u8)
}

fn print_summary(s: &Summary) {
    say!("detected:  {}", if s.detected.is_empty() { "-".into() } else { s.detected.join(", ") });
    say!("recipe:    {}", s.recipe.as_deref().unwrap_or("-"));
    say!("step:      {}", s.final_step.map_or("-".into(), |v| v.to_string()));
    say!("duration:  {:.3} s", s.duration_secs);
    say!("nav:       {}", s.nav_events);
    say!("stops:     {}", s.stops);
    say!("frames:    {}", s.frames);
    say!("events:    {}", s.events_logged);
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, duration } => {
            let cfg = match RuntimeConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return fail(exit::CONFIG, e),
            };
            let handle = match start_live(&cfg) {
                Ok(h) => h,
                Err(e @ LiveError::Config(_)) => return fail(exit::CONFIG, e),
                Err(e) => return fail(exit::FAILURE, e),
            };
            eprintln!("tracker datagrams on {}, UI channel ws://{}", handle.tracker_addr, handle.ui_addr);
            match duration {
                Some(d) if d.is_finite() && d >= 0.0 => std::thread::sleep(Duration::from_secs_f64(d)),
                Some(_) => return fail(exit::CONFIG, "--duration must be a non-negative number"),
                None => loop {
                    std::thread::park();
                },
            }
            let outcome = handle.stop();
            print_summary(&outcome.summary);
            say!(
                "ingest:    {} accepted, {} stale, {} malformed, {} queue drops",
                outcome.ingest.accepted, outcome.ingest.stale, outcome.ingest.malformed, outcome.queue_drops
            );
            if let Some(p99) = percentile(&outcome.latencies, 99.0) {
                say!("p99:       {:.3} ms over {} display updates", p99.as_secs_f64() * 1e3, outcome.latencies.len());
            }
            ExitCode::SUCCESS
        }
        Command::Replay {
            config,
            trace,
            golden,
            check,
            json,
        } => {
            let cfg = match RuntimeConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return fail(exit::CONFIG, e),
            };
            let records = match read_trace(&trace) {
                Ok(r) => r,
                Err(e) => return fail(exit::TRACE, format!("{}: {e}", trace.display())),
            };
            let outcome = match run_replay(&cfg, &records, &images_dir(&cfg, Some(&trace))) {
                Ok(o) => o,
                Err(e) => return fail(exit::CONFIG, e),
            };
            if let Some(path) = golden {
                if let Err(e) = std::fs::write(&path, &outcome.log) {
                    return fail(exit::FAILURE, format!("writing {}: {e}", path.display()));
                }
            }
            if json {
                say!("{}", serde_json::to_string_pretty(&outcome.summary).expect("summary serializes"));
            } else {
                print_summary(&outcome.summary);
            }
            if let Some(path) = check {
                let expected = match std::fs::read(&path) {
                    Ok(b) => b,
                    Err(e) => return fail(exit::FAILURE, format!("reading {}: {e}", path.display())),
                };
                if expected != outcome.log {
                    let line = expected
                        .split(|b| *b == b'\n')
                        .zip(outcome.log.split(|b| *b == b'\n'))
                        .position(|(a, b)| a != b)
                        .map_or_else(|| "length".to_string(), |i| format!("line {}", i + 1));
                    return fail(exit::FAILURE, format!("event log differs from {} at {line}", path.display()));
                }
                eprintln!("event log matches {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Command::Simulate { script, seed, out } => {
            let script = match Script::load(&script) {
                Ok(s) => s,
                Err(e) => return fail(exit::CONFIG, e),
            };
            let records = match run_simulate(&script, seed) {
                Ok(r) => r,
                Err(e) => return fail(exit::CONFIG, e),
            };
            if let Err(e) = write_trace(&out, &records) {
                return fail(exit::TRACE, e);
            }
            eprintln!("wrote {} records to {}", records.len(), out.display());
            ExitCode::SUCCESS
        }
        Command::Analyze { csv, json } => {
            let report = match spice_analytics::load_records(&csv).and_then(|r| spice_analytics::analyze(&r)) {
                Ok(r) => r,
                Err(e) => return fail(exit::CONFIG, e),
            };
            if json {
                say!("{}", report.to_json());
            } else {
                say!("{}", report.to_text().trim_end());
            }
            ExitCode::SUCCESS
        }
    }
}
