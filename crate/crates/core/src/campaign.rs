//! Verification campaigns: trial enumeration, suite dispatch and the report.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    preset_of_order, random_structure_of_order, AlmostHermitianStructure, Fiber, Preset,
    GENERIC_SCALE,
};
use crate::identities::{
    admissible, lemma_checks, oracle_checks, theorem_sides, uncorrected_mu_gap, verify_mu_identity,
    verify_proof_displays, verify_prop_0q, zeroth_order_checks, Check, Expectation,
    IdentityResidual, Mutation, Tolerance, TrialLabel,
};
use crate::sampling::{random_primitive_germ, random_pure_germ, trial_rng};

/// Largest complex dimension accepted by a campaign.
pub const MAX_N: usize = 4;
/// Largest complex dimension for which the dense oracle suite runs.
pub const ORACLE_MAX_N: usize = 3;

const LEMMA_STREAM: u64 = 1;
const THEOREM_STREAM: u64 = 1_000;
const PROP_STREAM: u64 = 2_000;
const ZEROTH_STREAM: u64 = 2_500;
const MU_STREAM: u64 = 3_000;
const ORACLE_STREAM: u64 = 4_000;

/// A named family of checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Suite {
    #[serde(rename = "lemmas")]
    Lemmas,
    #[serde(rename = "theorem")]
    Theorem,
    #[serde(rename = "proof_displays")]
    ProofDisplays,
    #[serde(rename = "prop_0q")]
    Prop0q,
    #[serde(rename = "mu_identity")]
    MuIdentity,
    #[serde(rename = "oracle")]
    Oracle,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Lemmas,
        Suite::Theorem,
        Suite::ProofDisplays,
        Suite::Prop0q,
        Suite::MuIdentity,
        Suite::Oracle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Lemmas => "lemmas",
            Suite::Theorem => "theorem",
            Suite::ProofDisplays => "proof_displays",
            Suite::Prop0q => "prop_0q",
            Suite::MuIdentity => "mu_identity",
            Suite::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown suite `{s}`")))
    }
}

/// Campaign parameters; also the schema of the JSON config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub n_list: Vec<usize>,
    pub presets: Vec<Preset>,
    pub random_trials: usize,
    pub campaign_seed: u64,
    pub tol_rel: f64,
    pub tol_abs: f64,
    pub jet_order: u8,
    pub suites: Vec<Suite>,
    /// Report destination; empty for stdout.
    pub output_path: String,
    /// Deliberate sign error used to check that the harness can fail.
    pub mutation: Mutation,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            n_list: vec![1, 2, 3],
            presets: Preset::ALL.to_vec(),
            random_trials: 50,
            campaign_seed: 20_240_601,
            tol_rel: 1e-8,
            tol_abs: 1e-12,
            jet_order: 1,
            suites: Suite::ALL.to_vec(),
            output_path: String::new(),
            mutation: Mutation::None,
        }
    }
}

impl CampaignConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn tolerance(&self) -> Tolerance {
        Tolerance {
            rel: self.tol_rel,
            abs: self.tol_abs,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_list.is_empty() {
            return bad("n_list is empty".into());
        }
        if let Some(n) = self.n_list.iter().find(|&&n| n == 0 || n > MAX_N) {
            return bad(format!("n = {n} outside 1..={MAX_N}"));
        }
        if self.suites.is_empty() {
            return bad("no suites selected".into());
        }
        if self.presets.is_empty() && self.random_trials == 0 {
            return bad("no presets and no random trials".into());
        }
        if !(self.tol_rel.is_finite() && self.tol_rel > 0.0) {
            return bad(format!("tol_rel must be positive, got {}", self.tol_rel));
        }
        if !(self.tol_abs.is_finite() && self.tol_abs >= 0.0) {
            return bad(format!(
                "tol_abs must be non-negative, got {}",
                self.tol_abs
            ));
        }
        if !(1..=2).contains(&self.jet_order) {
            return bad(format!("jet_order must be 1 or 2, got {}", self.jet_order));
        }
        Ok(())
    }

    /// Every trial, presets first (by preset, then `n`), then random
    /// structures (by draw, then `n`). Trial `i` uses seed `campaign_seed + i`.
    pub fn trials(&self) -> Vec<Trial> {
        let sources = self
            .presets
            .iter()
            .map(|&p| TrialSource::Preset(p))
            .chain(std::iter::repeat_n(TrialSource::Random, self.random_trials));
        sources
            .flat_map(|src| self.n_list.iter().map(move |&n| (src, n)))
            .enumerate()
            .map(|(i, (source, n))| Trial {
                source,
                n,
                seed: self.campaign_seed.wrapping_add(i as u64),
            })
            .collect()
    }

    fn runs(&self, s: Suite) -> bool {
        self.suites.contains(&s)
    }
}

/// Where a trial's structure comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrialSource {
    Preset(Preset),
    Random,
}

/// One structure together with the seed for its random forms. Fully
/// determined by its id `<source>@<seed>/n<n>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Trial {
    pub source: TrialSource,
    pub n: usize,
    pub seed: u64,
}

impl Trial {
    pub fn id(&self) -> String {
        self.to_string()
    }

    pub fn structure(&self, order: u8) -> Result<AlmostHermitianStructure> {
        match self.source {
            TrialSource::Preset(p) => preset_of_order(p, self.n, order),
            TrialSource::Random => {
                random_structure_of_order(self.seed, self.n, GENERIC_SCALE, order)
            }
        }
    }
}

impl fmt::Display for Trial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let src = match self.source {
            TrialSource::Preset(p) => p.as_str(),
            TrialSource::Random => "random",
        };
        write!(f, "{src}@{}/n{}", self.seed, self.n)
    }
}

impl FromStr for Trial {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::Config(format!(
                "malformed trial id `{s}` (expected <source>@<seed>/n<n>)"
            ))
        };
        let (src, rest) = s.split_once('@').ok_or_else(bad)?;
        let (seed, n) = rest.split_once("/n").ok_or_else(bad)?;
        let source = if src == "random" {
            TrialSource::Random
        } else {
            TrialSource::Preset(src.parse()?)
        };
        let n: usize = n.parse().map_err(|_| bad())?;
        if n == 0 || n > MAX_N {
            return Err(Error::Config(format!("n = {n} outside 1..={MAX_N}")));
        }
        Ok(Trial {
            source,
            n,
            seed: seed.parse().map_err(|_| bad())?,
        })
    }
}

/// Aggregate counts of a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    /// Largest relative residual among identities expected to hold whose
    /// sides are not both below the absolute tolerance.
    pub max_residual_rel: f64,
}

/// Every record of a campaign plus its summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub records: Vec<IdentityResidual>,
    pub summary: Summary,
}

impl VerificationReport {
    pub fn new(records: Vec<IdentityResidual>, tol_abs: f64) -> Self {
        let passed = records.iter().filter(|r| r.pass).count();
        let max_residual_rel = records
            .iter()
            .filter(|r| r.expect == Expectation::Holds && r.lhs_norm.max(r.rhs_norm) >= tol_abs)
            .map(|r| r.residual_rel)
            .fold(0.0, f64::max);
        let summary = Summary {
            total: records.len(),
            passed,
            failed: records.len() - passed,
            max_residual_rel,
        };
        Self { records, summary }
    }

    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    /// Process exit status: `0` when every record passes, `1` otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.all_passed() {
            0
        } else {
            1
        }
    }

    /// Deterministic pretty JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Run every trial of `cfg` in parallel; records keep enumeration order.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<VerificationReport> {
    cfg.validate()?;
    let records = cfg
        .trials()
        .par_iter()
        .map(|t| run_trial(cfg, t))
        .collect::<Vec<_>>()
        .concat();
    Ok(VerificationReport::new(records, cfg.tol_abs))
}

/// Re-run one trial, identified by its id, with the suites and tolerances of
/// `cfg`.
pub fn replay(cfg: &CampaignConfig, trial_id: &str) -> Result<VerificationReport> {
    cfg.validate()?;
    let trial: Trial = trial_id.parse()?;
    Ok(VerificationReport::new(run_trial(cfg, &trial), cfg.tol_abs))
}

/// All records of one trial. Failures to build the structure or a germ are
/// reported as a failing `trial.error` record rather than aborting the run.
pub fn run_trial(cfg: &CampaignConfig, trial: &Trial) -> Vec<IdentityResidual> {
    let tol = cfg.tolerance();
    let mut label = TrialLabel {
        trial_id: trial.id(),
        structure_descr: String::new(),
        seed: trial.seed,
        n: trial.n,
    };
    let result = trial.structure(cfg.jet_order).and_then(|s| {
        label.structure_descr = s.descr.clone();
        trial_checks(cfg, trial, &s.fiber()?)
    });
    match result {
        Ok(checks) => checks
            .into_iter()
            .map(|c| c.into_record(&label, &tol))
            .collect(),
        Err(e) => vec![IdentityResidual {
            identity_id: format!("trial.error: {e}"),
            structure_descr: label.structure_descr.clone(),
            trial_id: label.trial_id.clone(),
            seed: trial.seed,
            n: trial.n,
            k: None,
            j: None,
            p: None,
            q: None,
            lhs_norm: 0.0,
            rhs_norm: 0.0,
            residual_abs: 0.0,
            residual_rel: 0.0,
            expect: Expectation::Holds,
            pass: false,
        }],
    }
}

fn trial_checks(cfg: &CampaignConfig, trial: &Trial, fiber: &Fiber) -> Result<Vec<Check>> {
    let (n, seed, order) = (trial.n, trial.seed, cfg.jet_order);
    let mut out = Vec::new();
    if cfg.runs(Suite::Lemmas) {
        out.extend(lemma_checks(fiber, &mut trial_rng(seed, LEMMA_STREAM))?);
    }
    if cfg.runs(Suite::Theorem) || cfg.runs(Suite::ProofDisplays) {
        for (k, j) in admissible(n) {
            let stream = THEOREM_STREAM + 16 * k as u64 + j as u64;
            let alpha = random_primitive_germ(fiber, &mut trial_rng(seed, stream), k, order)?;
            let terms = theorem_sides(fiber, &alpha, k, j, cfg.mutation)?;
            if cfg.runs(Suite::Theorem) {
                out.push(terms.check(fiber.point()));
            }
            if cfg.runs(Suite::ProofDisplays) {
                out.extend(verify_proof_displays(fiber, &alpha, &terms)?);
            }
        }
    }
    if cfg.runs(Suite::Prop0q) {
        for q in 1..=n {
            let alpha = random_pure_germ(
                fiber,
                &mut trial_rng(seed, PROP_STREAM + q as u64),
                0,
                q,
                order,
            )?;
            out.extend(verify_prop_0q(fiber, &alpha, q)?);
        }
        out.extend(zeroth_order_checks(
            fiber,
            &mut trial_rng(seed, ZEROTH_STREAM),
        )?);
    }
    if cfg.runs(Suite::MuIdentity) && n >= 2 {
        let alpha = random_pure_germ(fiber, &mut trial_rng(seed, MU_STREAM), 0, 2, order)?;
        out.push(verify_mu_identity(fiber, &alpha)?);
        // The uncorrected form is only visibly false when `Lα` has a (1,3)
        // part and `μ(ω) ≠ 0`: the generic structure with `n ≥ 3`.
        if trial.source == TrialSource::Preset(Preset::Generic) && n >= 3 {
            out.push(uncorrected_mu_gap(fiber, &alpha)?);
        }
    }
    if cfg.runs(Suite::Oracle) && n <= ORACLE_MAX_N {
        out.extend(oracle_checks(fiber, &mut trial_rng(seed, ORACLE_STREAM))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trial_ids_round_trip() {
        let cfg = CampaignConfig {
            random_trials: 2,
            ..CampaignConfig::default()
        };
        let trials = cfg.trials();
        assert_eq!(trials.len(), (4 + 2) * 3);
        for (i, t) in trials.iter().enumerate() {
            assert_eq!(t.seed, cfg.campaign_seed + i as u64);
            assert_eq!(&t.id().parse::<Trial>().unwrap(), t);
        }
        assert_eq!(
            trials[0].id(),
            format!("flat_kahler@{}/n1", cfg.campaign_seed)
        );
        assert!("random@x/n2".parse::<Trial>().is_err());
        assert!("random@3/n9".parse::<Trial>().is_err());
        assert!("nope@3/n2".parse::<Trial>().is_err());
    }

    #[test]
    fn config_json_defaults_and_validation() {
        let cfg =
            CampaignConfig::from_json(r#"{"n_list":[2],"suites":["prop_0q","theorem"]}"#).unwrap();
        assert_eq!(cfg.n_list, vec![2]);
        assert_eq!(cfg.suites, vec![Suite::Prop0q, Suite::Theorem]);
        assert_eq!(cfg.random_trials, 50);
        assert!(CampaignConfig::from_json(r#"{"n_list":[]}"#).is_err());
        assert!(CampaignConfig::from_json(r#"{"n_list":[5]}"#).is_err());
        assert!(CampaignConfig::from_json(r#"{"tol_rel":-1}"#).is_err());
        assert!(CampaignConfig::from_json(r#"{"jet_order":3}"#).is_err());
        assert!(CampaignConfig::from_json(r#"{"bogus":1}"#).is_err());
        assert!(CampaignConfig::from_json(r#"{"suites":["nope"]}"#).is_err());
    }

    #[test]
    fn small_campaign_passes_and_is_deterministic() {
        let cfg = CampaignConfig {
            random_trials: 1,
            n_list: vec![1, 2],
            ..CampaignConfig::default()
        };
        let a = run_campaign(&cfg).unwrap();
        assert!(
            a.all_passed(),
            "{:#?}",
            a.records.iter().filter(|r| !r.pass).collect::<Vec<_>>()
        );
        assert!(a.summary.max_residual_rel < 1e-8);
        assert_eq!(a.to_json(), run_campaign(&cfg).unwrap().to_json());
    }

    #[test]
    fn replay_reproduces_campaign_records() {
        let cfg = CampaignConfig {
            random_trials: 1,
            n_list: vec![2],
            presets: vec![],
            ..CampaignConfig::default()
        };
        let full = run_campaign(&cfg).unwrap();
        let one = replay(&cfg, &full.records[0].trial_id).unwrap();
        assert_eq!(one.records, full.records);
    }

    #[test]
    fn mutation_fails_the_theorem_suite() {
        let cfg = CampaignConfig {
            random_trials: 2,
            presets: vec![],
            suites: vec![Suite::Theorem],
            mutation: Mutation::FlipDStarLambda,
            ..CampaignConfig::default()
        };
        let report = run_campaign(&cfg).unwrap();
        assert_eq!(report.exit_code(), 1);
    }
}
