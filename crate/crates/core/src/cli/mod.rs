//! Command-line front end: `qpvsim run` and `qpvsim stats`.

pub mod config;
pub mod runner;
pub mod stats;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::adversaries::AdversaryKind;
use crate::bell::emit_table;
use crate::error::{Error, Result};
use crate::protocols::Scheme;
use crate::quantum::BellLabel;

use config::{BackendChoice, Expectation, SEED_ENV, ScenarioConfig};
use runner::{KeyHex, TrialOutcome, run_batch};

pub const EXIT_OK: i32 = 0;
pub const EXIT_EXPECTATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "qpvsim", version, about = "Quantum position-verification protocol simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and stream transcripts as line-delimited JSON.
    Run(RunArgs),
    /// Summarize a transcript stream.
    Stats(StatsArgs),
}

fn parse_via<T: FromStr<Err = Error>>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_force(s: &str) -> std::result::Result<(String, BellLabel), String> {
    let (pair, label) = s.split_once('=').ok_or_else(|| format!("expected A-B=LABEL, got {s:?}"))?;
    config::parse_pair(pair).map_err(|e| e.to_string())?;
    Ok((pair.trim().to_string(), parse_via(label.trim())?))
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, value_parser = parse_via::<Scheme>)]
    scheme: Option<Scheme>,
    /// Adversary strategy id, or `none`.
    #[arg(long, value_parser = parse_via::<AdversaryKind>)]
    adversary: Option<AdversaryKind>,
    /// Rounds per trial; the challenge count for scheme i.
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    /// Base seed. Falls back to the config file, then $QPVSIM_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Verifier-prover distance in light-seconds.
    #[arg(long)]
    d: Option<f64>,
    /// Timing tolerance in seconds.
    #[arg(long)]
    tolerance: Option<f64>,
    /// TOML scenario file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write transcripts (or the table) here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the entanglement swapping table and exit.
    #[arg(long)]
    emit_table: bool,
    /// Run authentication sessions on the accumulated keys with this z for the prover.
    #[arg(long)]
    auth_z: Option<u32>,
    #[arg(long, value_parser = parse_via_serde::<BackendChoice>)]
    backend: Option<BackendChoice>,
    /// accept, detect, any, or auto.
    #[arg(long, value_parser = parse_via_serde::<Expectation>)]
    expect: Option<Expectation>,
    /// Keyed-message length for schemes a and b.
    #[arg(long)]
    message_bits: Option<usize>,
    /// Force a Bell measurement outcome, e.g. `--force 2-3=10`. Repeatable.
    #[arg(long = "force", value_name = "A-B=LABEL", value_parser = parse_force)]
    force: Vec<(String, BellLabel)>,
    /// Print the per-run summary as JSON on stderr.
    #[arg(long)]
    json_summary: bool,
}

fn parse_via_serde<T: serde::de::DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// Transcript file; stdin when absent or `-`.
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) => EXIT_USAGE,
        _ => EXIT_INTERNAL,
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    let res = match cli.command {
        Command::Run(a) => run_command(a, env_seed.as_deref()),
        Command::Stats(a) => stats_command(a),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn io_err(e: io::Error) -> Error {
    Error::Invariant(format!("write failed: {e}"))
}

fn resolve(a: &RunArgs, env_seed: Option<&str>) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::default();
    if let Some(s) = env_seed {
        cfg.seed = s.trim().parse().map_err(|_| Error::Config(format!("{SEED_ENV}={s:?} is not a u64")))?;
    }
    if let Some(path) = &a.config {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let env = cfg.seed;
        cfg = ScenarioConfig::from_toml(&text)?;
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        if !table.contains_key("seed") {
            cfg.seed = env;
        }
    }
    if let Some(s) = a.scheme {
        cfg.scheme = s;
    }
    if let Some(k) = a.adversary {
        cfg.adversary = k;
    }
    if let Some(n) = a.rounds {
        cfg.rounds = n;
    }
    if let Some(n) = a.trials {
        cfg.trials = n;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(d) = a.d {
        cfg.geometry.d = d;
        cfg.geometry.positions = None;
    }
    if let Some(t) = a.tolerance {
        cfg.timing_tolerance = t;
    }
    if let Some(z) = a.auth_z {
        cfg.auth.enabled = true;
        cfg.auth.z_p = z;
    }
    if let Some(b) = a.backend {
        cfg.backend = b;
    }
    if let Some(e) = a.expect {
        cfg.expect = e;
    }
    if a.message_bits.is_some() {
        cfg.message_bits = a.message_bits;
    }
    for (k, l) in &a.force {
        cfg.branches.insert(k.clone(), *l);
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Batch summary printed after a run.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RunSummary {
    pub scheme: Scheme,
    pub adversary: AdversaryKind,
    pub trials: usize,
    pub transcripts: usize,
    pub accepted: f64,
    pub detected: f64,
    /// Share of adversarial trials in which every round was accepted.
    pub spoof_rate: Option<f64>,
    pub mean_elapsed: f64,
    pub auth_sessions: usize,
    pub auth_exact: usize,
    pub expectation: Expectation,
    pub expectation_met: bool,
}

impl RunSummary {
    pub fn new(cfg: &ScenarioConfig, outcomes: &[TrialOutcome]) -> Self {
        let all: Vec<_> = outcomes.iter().flat_map(|o| &o.transcripts).collect();
        let n = all.len().max(1) as f64;
        let trials = outcomes.len().max(1) as f64;
        let trial_accept = outcomes.iter().filter(|o| o.accepted()).count() as f64 / trials;
        let expectation = cfg.expectation();
        let expectation_met = match expectation {
            Expectation::Accept => outcomes.iter().all(TrialOutcome::accepted),
            Expectation::Detect => outcomes.iter().all(TrialOutcome::detected),
            Expectation::Any | Expectation::Auto => true,
        };
        let auth: Vec<_> = outcomes.iter().flat_map(|o| &o.auth).collect();
        RunSummary {
            scheme: cfg.scheme,
            adversary: cfg.adversary,
            trials: outcomes.len(),
            transcripts: all.len(),
            accepted: all.iter().filter(|t| t.outcome.accepted).count() as f64 / n,
            detected: all.iter().filter(|t| t.outcome.detected_adversary).count() as f64 / n,
            spoof_rate: (cfg.adversary != AdversaryKind::None).then_some(trial_accept),
            mean_elapsed: all.iter().map(|t| t.outcome.elapsed).sum::<f64>() / n,
            auth_sessions: auth.len(),
            auth_exact: auth.iter().filter(|a| a.exact).count(),
            expectation,
            expectation_met,
        }
    }

    pub fn line(&self) -> String {
        let spoof = self.spoof_rate.map_or("-".to_string(), |r| format!("{r:.3}"));
        let mut s = format!(
            "summary scheme={} adversary={} trials={} transcripts={} accepted={:.3} detected={:.3} spoof-rate={} mean-elapsed={:.6}",
            self.scheme, self.adversary, self.trials, self.transcripts, self.accepted, self.detected, spoof, self.mean_elapsed
        );
        if self.auth_sessions > 0 {
            s.push_str(&format!(" auth={}/{}", self.auth_exact, self.auth_sessions));
        }
        let expect = serde_json::to_value(self.expectation).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        s.push_str(&format!(" expect={} {}", expect, if self.expectation_met { "ok" } else { "FAILED" }));
        s
    }
}

const KEY_LINES: usize = 4;

fn run_command(a: RunArgs, env_seed: Option<&str>) -> Result<i32> {
    if a.emit_table {
        let mut out = open_out(a.out.as_deref())?;
        out.write_all(emit_table().as_bytes()).map_err(io_err)?;
        out.flush().map_err(io_err)?;
        return Ok(EXIT_OK);
    }
    let cfg = resolve(&a, env_seed)?;
    let outcomes = run_batch(&cfg)?;
    let mut out = open_out(a.out.as_deref())?;
    for t in outcomes.iter().flat_map(|o| &o.transcripts) {
        writeln!(out, "{}", t.to_json_line()).map_err(io_err)?;
    }
    out.flush().map_err(io_err)?;
    drop(out);

    let summary = RunSummary::new(&cfg, &outcomes);
    let err = io::stderr();
    let mut err = err.lock();
    if a.json_summary {
        let _ = writeln!(err, "{}", serde_json::to_string(&summary).expect("summary serializes"));
    } else {
        let _ = writeln!(err, "{}", summary.line());
    }
    for o in outcomes.iter().filter(|o| o.keys.is_some()).take(KEY_LINES) {
        let k = o.keys.as_ref().expect("filtered");
        for (name, pair) in [("V0", &k.v0), ("V1", &k.v1)] {
            let h = KeyHex::from(pair);
            let _ = writeln!(err, "keys trial={} {name} bits={} k_v={} k_p={}", o.trial, h.bits, h.k_v, h.k_p);
        }
    }
    Ok(if summary.expectation_met { EXIT_OK } else { EXIT_EXPECTATION })
}

fn stats_command(a: StatsArgs) -> Result<i32> {
    let transcripts = match a.input.as_deref() {
        Some(p) if p != Path::new("-") => {
            let f = File::open(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            stats::read_transcripts(BufReader::new(f))?
        }
        _ => stats::read_transcripts(io::stdin().lock())?,
    };
    let report = stats::stats(&transcripts)?;
    let mut out = open_out(a.out.as_deref())?;
    let text = serde_json::to_string_pretty(&report).map_err(|e| Error::Invariant(e.to_string()))?;
    writeln!(out, "{text}").map_err(io_err)?;
    out.flush().map_err(io_err)?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> RunArgs {
        match Cli::try_parse_from(std::iter::once("qpvsim").chain(s.split_whitespace())).unwrap().command {
            Command::Run(a) => a,
            _ => unreachable!(),
        }
    }

    #[test]
    fn flags_override_environment() {
        let cfg = resolve(&args("run --scheme b --seed 9"), Some("4")).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.scheme, Scheme::B);
        assert_eq!(resolve(&args("run"), Some("4")).unwrap().seed, 4);
    }

    #[test]
    fn forced_branches_parse() {
        let cfg = resolve(&args("run --force 2-3=10 --force 11-12=01"), None).unwrap();
        assert_eq!(cfg.branches.len(), 2);
        assert!(Cli::try_parse_from(["qpvsim", "run", "--force", "2-3"]).is_err());
    }

    #[test]
    fn bad_values_are_usage_errors() {
        assert_eq!(main_with_args(["qpvsim", "run", "--scheme", "v"]), EXIT_USAGE);
        assert_eq!(main_with_args(["qpvsim", "run", "--rounds", "0"]), EXIT_USAGE);
        assert_eq!(main_with_args(["qpvsim", "run", "--scheme", "a", "--adversary", "scheme-iv-attack"]), EXIT_USAGE);
    }
}
