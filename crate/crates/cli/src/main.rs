//! `verify`: run a verification campaign and emit the residual report.
//!
//! Exit status: `0` every check passed, `1` some check failed, `2` usage or
//! configuration error.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use ahi_core::campaign::{replay, run_campaign, CampaignConfig, Suite, VerificationReport};
use ahi_core::identities::Mutation;
use ahi_core::Preset;
use clap::Parser;

const USAGE_ERROR: u8 = 2;
const MAX_LISTED_FAILURES: usize = 20;

#[derive(Debug, Parser)]
#[command(
    name = "verify",
    version,
    about = "Verify the Lefschetz/differential commutation identities on almost Hermitian germs"
)]
struct Args {
    /// JSON campaign config; command-line flags override its fields.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Preset structure to include (repeatable or comma separated).
    #[arg(long = "preset", value_name = "NAME", value_delimiter = ',')]
    presets: Vec<Preset>,
    /// Complex dimension to include (repeatable or comma separated).
    #[arg(long = "n", value_name = "N", value_delimiter = ',')]
    n_list: Vec<usize>,
    /// Number of random structures per dimension.
    #[arg(long, value_name = "T")]
    trials: Option<usize>,
    /// Campaign seed; trial `i` uses `seed + i`.
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
    /// Relative tolerance.
    #[arg(long, value_name = "X")]
    tol_rel: Option<f64>,
    /// Absolute tolerance for identities whose sides both vanish.
    #[arg(long, value_name = "X")]
    tol_abs: Option<f64>,
    /// Jet order of structures and germs (1 or 2).
    #[arg(long, value_name = "K")]
    jet_order: Option<u8>,
    /// Suite to run (repeatable or comma separated).
    #[arg(long = "suite", value_name = "NAME", value_delimiter = ',')]
    suites: Vec<Suite>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    json_out: Option<PathBuf>,
    /// Re-run a single trial by id, e.g. `random@20240615/n3`.
    #[arg(long, value_name = "TRIAL_ID")]
    replay: Option<String>,
    /// Flip the sign of the `[d*, Λ]` term; the theorem suite must then fail.
    #[arg(long)]
    inject_bug: bool,
}

impl Args {
    fn config(&self) -> Result<CampaignConfig, String> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| format!("{}: {e}", path.display()))?;
                CampaignConfig::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))?
            }
            None => CampaignConfig::default(),
        };
        if !self.presets.is_empty() {
            cfg.presets = self.presets.clone();
        }
        if !self.n_list.is_empty() {
            cfg.n_list = self.n_list.clone();
        }
        if !self.suites.is_empty() {
            cfg.suites = self.suites.clone();
        }
        cfg.random_trials = self.trials.unwrap_or(cfg.random_trials);
        cfg.campaign_seed = self.seed.unwrap_or(cfg.campaign_seed);
        cfg.tol_rel = self.tol_rel.unwrap_or(cfg.tol_rel);
        cfg.tol_abs = self.tol_abs.unwrap_or(cfg.tol_abs);
        cfg.jet_order = self.jet_order.unwrap_or(cfg.jet_order);
        if let Some(p) = &self.json_out {
            cfg.output_path = p.display().to_string();
        }
        if self.inject_bug {
            cfg.mutation = Mutation::FlipDStarLambda;
        }
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match args.config() {
        Ok(cfg) => cfg,
        Err(e) => return usage_error(&e),
    };
    let started = Instant::now();
    let report = match &args.replay {
        Some(id) => replay(&cfg, id),
        None => run_campaign(&cfg),
    };
    let report = match report {
        Ok(r) => r,
        Err(e) => return usage_error(&e.to_string()),
    };
    let stamp = format!(
        "generated_at_unix={} elapsed_ms={}",
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        started.elapsed().as_millis()
    );
    let json = report.to_json();
    if cfg.output_path.is_empty() {
        println!("{json}");
        eprintln!("{}", summary_text(&report));
        eprintln!("{stamp}");
    } else {
        let stamp_path = format!("{}.stamp", cfg.output_path);
        let written = std::fs::write(&cfg.output_path, format!("{json}\n"))
            .and_then(|_| std::fs::write(&stamp_path, format!("{stamp}\n")));
        if let Err(e) = written {
            return usage_error(&format!("{}: {e}", cfg.output_path));
        }
        println!("{}", summary_text(&report));
        println!("report written to {} ({stamp})", cfg.output_path);
    }
    ExitCode::from(report.exit_code() as u8)
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(USAGE_ERROR)
}

/// Per-identity table followed by the first few failing records.
fn summary_text(report: &VerificationReport) -> String {
    let mut by_id: BTreeMap<&str, (usize, usize, f64)> = BTreeMap::new();
    for r in &report.records {
        let e = by_id.entry(&r.identity_id).or_default();
        e.0 += 1;
        e.1 += usize::from(!r.pass);
        e.2 = e.2.max(r.residual_abs);
    }
    let width = by_id.keys().map(|k| k.len()).max().unwrap_or(0);
    let mut out = format!(
        "{:width$}  {:>7}  {:>6}  {:>10}\n",
        "identity", "records", "failed", "max_abs"
    );
    for (id, (count, failed, max_abs)) in &by_id {
        out += &format!("{id:width$}  {count:>7}  {failed:>6}  {max_abs:>10.2e}\n");
    }
    for r in report
        .records
        .iter()
        .filter(|r| !r.pass)
        .take(MAX_LISTED_FAILURES)
    {
        out += &format!(
            "FAIL {} [{}] k={:?} j={:?} p={:?} q={:?} rel={:.3e} abs={:.3e}\n",
            r.identity_id, r.trial_id, r.k, r.j, r.p, r.q, r.residual_rel, r.residual_abs
        );
    }
    let s = &report.summary;
    out += &format!(
        "{} records, {} passed, {} failed, max relative residual {:.3e}",
        s.total, s.passed, s.failed, s.max_residual_rel
    );
    out
}
