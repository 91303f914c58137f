//! CLI front-end: build and verify MUB families, run testers against
//! generated instances, sweep parameters, estimate acceptance rates with
//! Wilson confidence intervals, and emit machine-readable reports.
//!
//! Everything is deterministic for a fixed (scenario, seed): instance and
//! tester seeds are derived per trial, trials run in a rayon pool, and
//! results are aggregated in trial order before emission.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::EvolutionOracle;
use crate::hamiltonian::{
    distance_to_property, random_property_hamiltonian, PauliHamiltonian, PropertySet,
};
use crate::mub::MubFamily;
use crate::oracles::{self, CheckResult, CycleType, MomentSpec};
use crate::pauli::{Pauli, PauliString};
use crate::testers::{
    build_ancilla_family, run_ancilla_test, run_multi_test, run_single_test,
    run_tolerant_test, TestConfig, TestReport, TolerantConfig, Verdict,
};

/// Far instances default to this coefficient when the requested accuracy
/// is smaller, keeping a detection margin while honoring ||H||_inf <= 1.
pub const FAR_COEFFICIENT_FLOOR: f64 = 0.95;

const WILSON_Z: f64 = 1.959963984540054;

/// Wilson 95% score interval for a binomial frequency; well defined for a
/// single trial (no division by the raw frequency).
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denominator = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denominator;
    let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denominator;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Hypothesis {
    Null,
    Far,
    Fixture,
}

impl std::str::FromStr for Hypothesis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "null" | "close" => Ok(Hypothesis::Null),
            "far" => Ok(Hypothesis::Far),
            "fixture" => Ok(Hypothesis::Fixture),
            other => Err(Error::InvalidArgument(format!(
                "unknown hypothesis {other:?} (expected null|far|fixture)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TesterKind {
    Single,
    Tolerant,
    Ancilla,
}

impl std::str::FromStr for TesterKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(TesterKind::Single),
            "tolerant" => Ok(TesterKind::Tolerant),
            "ancilla" => Ok(TesterKind::Ancilla),
            other => Err(Error::InvalidArgument(format!(
                "unknown tester {other:?} (expected single|tolerant|ancilla)"
            ))),
        }
    }
}

/// How the property set is specified on the command line or in a scenario
/// grid: a locality parameter, a literals file, or inline literals.
#[derive(Debug, Clone, Serialize)]
pub enum PropertySpec {
    KLocal(usize),
    File(PathBuf),
    Literals(Vec<String>),
}

impl PropertySpec {
    pub fn resolve(&self, n: usize) -> Result<PropertySet> {
        match self {
            PropertySpec::KLocal(k) => PropertySet::k_local(n, *k),
            PropertySpec::File(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::io(path.clone(), e))?;
                PropertySet::from_literals(n, &text)
            }
            PropertySpec::Literals(lits) => {
                let mut s = PropertySet::new(n);
                for lit in lits {
                    s.insert(lit.parse()?)?;
                }
                Ok(s)
            }
        }
    }

    /// Locality parameter, when this is a k-local spec: far instances then
    /// use a single Pauli of weight k+1.
    fn locality(&self) -> Option<usize> {
        match self {
            PropertySpec::KLocal(k) => Some(*k),
            _ => None,
        }
    }

    fn parse_spec(s: &str) -> Result<Self> {
        if let Some(k) = s.strip_prefix("k:") {
            let k = k
                .parse()
                .map_err(|e| Error::InvalidArgument(format!("bad locality {k:?}: {e}")))?;
            Ok(PropertySpec::KLocal(k))
        } else if let Some(path) = s.strip_prefix("file:") {
            Ok(PropertySpec::File(PathBuf::from(path)))
        } else {
            Ok(PropertySpec::Literals(
                s.split(',').map(|p| p.trim().to_string()).collect(),
            ))
        }
    }
}

/// One grid point of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioSpec {
    pub label: String,
    pub n: usize,
    pub hypothesis: Hypothesis,
    pub property: PropertySpec,
    pub tester: TesterKind,
    pub epsilon: f64,
    pub eps1: Option<f64>,
    pub eps2: Option<f64>,
    pub trials: usize,
    pub seed: u64,
    pub t_override: Option<f64>,
    pub rounds_override: Option<usize>,
    #[serde(skip)]
    pub fixture: Option<PathBuf>,
}

impl ScenarioSpec {
    fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::InvalidArgument("trials must be >= 1".into()));
        }
        if self.tester == TesterKind::Tolerant {
            if self.eps1.is_none() || self.eps2.is_none() {
                return Err(Error::InvalidArgument(
                    "tolerant scenarios need eps1 and eps2".into(),
                ));
            }
        } else if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "accuracy eps = {} outside (0, 1)",
                self.epsilon
            )));
        }
        if self.hypothesis == Hypothesis::Fixture && self.fixture.is_none() {
            return Err(Error::InvalidArgument(
                "fixture hypothesis needs a fixture path".into(),
            ));
        }
        Ok(())
    }
}

/// One tester execution inside a sweep, serialized to the JSON-lines
/// stream.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub scenario: String,
    pub trial: usize,
    pub n: usize,
    pub tester: TesterKind,
    pub hypothesis: Hypothesis,
    pub instance_seed: u64,
    pub tester_seed: u64,
    pub epsilon: Option<f64>,
    pub eps1: Option<f64>,
    pub eps2: Option<f64>,
    pub t: f64,
    pub planned_rounds: usize,
    pub n_aux: Option<usize>,
    pub distance: f64,
    pub verdict: Verdict,
    pub expected: Option<Verdict>,
    pub correct: Option<bool>,
    pub promise_violated: bool,
    pub size_hypothesis_ok: bool,
    pub queries_used: u64,
    pub total_evolution_time: f64,
}

/// Per-scenario aggregate with a Wilson 95% interval on the
/// correct-verdict frequency.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioSummary {
    pub scenario: String,
    pub n: usize,
    pub tester: TesterKind,
    pub hypothesis: Hypothesis,
    pub trials: usize,
    pub correct: usize,
    pub frequency: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub mean_queries: f64,
    pub mean_evolution_time: f64,
    pub size_hypothesis_ok: bool,
    pub promise_violations: usize,
    pub epsilon: Option<f64>,
    pub eps1: Option<f64>,
    pub eps2: Option<f64>,
}

fn derive_seed(base: u64, trial: usize, salt: u64) -> u64 {
    // splitmix64 over (base, trial, salt)
    let mut z = base
        .wrapping_add((trial as u64).wrapping_mul(0x9E3779B97F4A7C15))
        .wrapping_add(salt.wrapping_mul(0xBF58476D1CE4E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Uniformly random Pauli of exactly the given weight.
fn random_pauli_of_weight(
    n: usize,
    weight: usize,
    rng: &mut rand_chacha::ChaCha12Rng,
) -> Result<PauliString> {
    use rand::seq::SliceRandom;
    use rand::Rng;
    let mut qubits: Vec<usize> = (0..n).collect();
    qubits.shuffle(rng);
    let mut x = 0u64;
    let mut z = 0u64;
    for &q in qubits.iter().take(weight) {
        let letter = [Pauli::X, Pauli::Y, Pauli::Z][rng.gen_range(0..3)];
        let p = PauliString::single(n, q, letter)?;
        x |= p.x_bits();
        z |= p.z_bits();
    }
    PauliString::from_bits(n, x, z)
}

/// Far instance: a single Pauli outside S with coefficient
/// max(eps, FAR_COEFFICIENT_FLOOR), capped at 1. For k-local properties
/// the Pauli has weight exactly k+1.
pub fn far_instance(
    s: &PropertySet,
    locality: Option<usize>,
    epsilon: f64,
    seed: u64,
) -> Result<PauliHamiltonian> {
    use rand::SeedableRng;
    let n = s.num_qubits();
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let coefficient = epsilon.max(FAR_COEFFICIENT_FLOOR).min(1.0);
    let pauli = match locality {
        Some(k) if k < n => random_pauli_of_weight(n, k + 1, &mut rng)?,
        Some(_) => {
            return Err(Error::InvalidArgument(
                "the full k = n property has no far instances".into(),
            ))
        }
        None => {
            let outside: Vec<PauliString> = PauliString::enumerate(n)?
                .filter(|p| !p.is_identity() && !s.contains(p))
                .collect();
            if outside.is_empty() {
                return Err(Error::InvalidArgument(
                    "property covers every Pauli; no far instance exists".into(),
                ));
            }
            use rand::Rng;
            outside[rng.gen_range(0..outside.len())]
        }
    };
    PauliHamiltonian::from_terms(n, [(pauli, coefficient)])
}

/// Null instance: random element of Pi_S under the promise; the empty
/// property admits only the zero Hamiltonian.
pub fn null_instance(s: &PropertySet, seed: u64) -> Result<PauliHamiltonian> {
    if s.is_empty() {
        return Ok(PauliHamiltonian::new(s.num_qubits()));
    }
    random_property_hamiltonian(s, seed)
}

/// Boundary-close instance for tolerant scenarios: an in-property part of
/// operator norm <= 1 - eps1 plus eps1 times one Pauli outside S, so the
/// distance is exactly eps1 and ||H||_inf <= 1.
pub fn close_instance(
    s: &PropertySet,
    locality: Option<usize>,
    eps1: f64,
    seed: u64,
) -> Result<PauliHamiltonian> {
    let n = s.num_qubits();
    let mut h = null_instance(s, seed)?;
    h.scale(1.0 - eps1);
    if eps1 > 0.0 {
        let spike = far_instance(s, locality, eps1, derive_seed(seed, 1, 77))?;
        for (p, _) in spike.terms() {
            h.add_term(*p, eps1)?;
        }
    }
    let _ = n;
    Ok(h)
}

fn run_trial(
    spec: &ScenarioSpec,
    family: &MubFamily,
    family_ext: Option<&MubFamily>,
    s: &PropertySet,
    fixture: Option<&PauliHamiltonian>,
    trial: usize,
) -> Result<TrialRecord> {
    let instance_seed = derive_seed(spec.seed, trial, 1);
    let tester_seed = derive_seed(spec.seed, trial, 2);
    let locality = spec.property.locality();
    let instance = match (spec.hypothesis, fixture) {
        (Hypothesis::Fixture, Some(h)) => h.clone(),
        (Hypothesis::Fixture, None) => {
            return Err(Error::InvalidArgument("missing fixture".into()))
        }
        (Hypothesis::Null, _) => match spec.tester {
            TesterKind::Tolerant => {
                close_instance(s, locality, spec.eps1.unwrap(), instance_seed)?
            }
            _ => null_instance(s, instance_seed)?,
        },
        (Hypothesis::Far, _) => {
            let eps = match spec.tester {
                TesterKind::Tolerant => spec.eps2.unwrap(),
                _ => spec.epsilon,
            };
            far_instance(s, locality, eps, instance_seed)?
        }
    };
    let distance = distance_to_property(&instance, s)?;
    let oracle = EvolutionOracle::new(instance.to_dense()?);

    let report: TestReport = match spec.tester {
        TesterKind::Single => {
            let mut config = TestConfig::new(spec.epsilon, tester_seed)?;
            config.t_override = spec.t_override;
            config.rounds_override = spec.rounds_override;
            run_single_test(&oracle, family, s, &config)?
        }
        TesterKind::Tolerant => {
            let config =
                TolerantConfig::new(spec.eps1.unwrap(), spec.eps2.unwrap(), tester_seed)?;
            run_tolerant_test(&oracle, family, s, &config)?
        }
        TesterKind::Ancilla => {
            let fam_ext = family_ext.unwrap_or(family);
            run_ancilla_test(&oracle, fam_ext, s, spec.epsilon, tester_seed)?
        }
    };

    // ground truth: which hypothesis (if any) the instance satisfies
    let (close_bound, far_bound) = match spec.tester {
        TesterKind::Tolerant => (spec.eps1.unwrap(), spec.eps2.unwrap()),
        _ => (0.0, spec.epsilon),
    };
    let expected = if distance <= close_bound + 1e-12 {
        Some(Verdict::Null)
    } else if distance >= far_bound - 1e-12 {
        Some(Verdict::Alternate)
    } else {
        None
    };
    Ok(TrialRecord {
        scenario: spec.label.clone(),
        trial,
        n: spec.n,
        tester: spec.tester,
        hypothesis: spec.hypothesis,
        instance_seed,
        tester_seed,
        epsilon: report.epsilon,
        eps1: spec.eps1,
        eps2: spec.eps2,
        t: report.t,
        planned_rounds: report.planned_rounds,
        n_aux: report.n_aux,
        distance,
        verdict: report.verdict,
        expected,
        correct: expected.map(|e| e == report.verdict),
        promise_violated: expected.is_none(),
        size_hypothesis_ok: report.flags.size_hypothesis_ok,
        queries_used: report.queries_used,
        total_evolution_time: report.total_evolution_time,
    })
}

/// Runs all trials of one scenario (in parallel, deterministically) and
/// aggregates them.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<(Vec<TrialRecord>, ScenarioSummary)> {
    spec.validate()?;
    let family = Arc::new(MubFamily::build(spec.n)?);
    let s = spec.property.resolve(spec.n)?;
    let family_ext = if spec.tester == TesterKind::Ancilla {
        Some(Arc::new(build_ancilla_family(
            spec.n,
            s.size_with_identity(),
            spec.epsilon,
        )?))
    } else {
        None
    };
    let fixture = match (&spec.fixture, spec.hypothesis) {
        (Some(path), Hypothesis::Fixture) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::io(path.clone(), e))?;
            Some(PauliHamiltonian::from_fixture(&text)?)
        }
        _ => None,
    };
    let records: Result<Vec<TrialRecord>> = (0..spec.trials)
        .into_par_iter()
        .map(|trial| {
            run_trial(
                spec,
                &family,
                family_ext.as_deref(),
                &s,
                fixture.as_ref(),
                trial,
            )
        })
        .collect();
    let records = records?;
    let scored: Vec<&TrialRecord> = records.iter().filter(|r| r.correct.is_some()).collect();
    let correct = scored.iter().filter(|r| r.correct == Some(true)).count();
    let trials_scored = scored.len();
    let frequency = if trials_scored > 0 {
        correct as f64 / trials_scored as f64
    } else {
        0.0
    };
    let (lo, hi) = wilson_interval(correct, trials_scored);
    let summary = ScenarioSummary {
        scenario: spec.label.clone(),
        n: spec.n,
        tester: spec.tester,
        hypothesis: spec.hypothesis,
        trials: records.len(),
        correct,
        frequency,
        wilson_low: lo,
        wilson_high: hi,
        mean_queries: records.iter().map(|r| r.queries_used as f64).sum::<f64>()
            / records.len() as f64,
        mean_evolution_time: records
            .iter()
            .map(|r| r.total_evolution_time)
            .sum::<f64>()
            / records.len() as f64,
        size_hypothesis_ok: records.iter().all(|r| r.size_hypothesis_ok),
        promise_violations: records.iter().filter(|r| r.promise_violated).count(),
        epsilon: if spec.tester == TesterKind::Tolerant { None } else { Some(spec.epsilon) },
        eps1: spec.eps1,
        eps2: spec.eps2,
    };
    Ok((records, summary))
}

/// Runs every grid point of a sweep.
pub fn acceptance_sweep(
    grid: &[ScenarioSpec],
) -> Result<(Vec<TrialRecord>, Vec<ScenarioSummary>)> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty scenario grid".into()));
    }
    let mut all_records = Vec::new();
    let mut summaries = Vec::new();
    for spec in grid {
        let (records, summary) = run_scenario(spec)?;
        all_records.extend(records);
        summaries.push(summary);
    }
    Ok((all_records, summaries))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Jsonl,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(ReportFormat::Jsonl),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::InvalidArgument(format!(
                "unknown format {other:?} (expected jsonl|csv)"
            ))),
        }
    }
}

/// JSON lines: one object per trial. CSV: one aggregated row per scenario
/// with a stable column order. Bytes are deterministic for fixed inputs.
pub fn emit_report(
    records: &[TrialRecord],
    summaries: &[ScenarioSummary],
    format: ReportFormat,
    path: &Path,
) -> Result<()> {
    let body = render_report(records, summaries, format)?;
    std::fs::write(path, body).map_err(|e| Error::io(path.to_path_buf(), e))
}

pub fn render_report(
    records: &[TrialRecord],
    summaries: &[ScenarioSummary],
    format: ReportFormat,
) -> Result<String> {
    match format {
        ReportFormat::Jsonl => {
            let mut out = String::new();
            for record in records {
                let line = serde_json::to_string(record)
                    .map_err(|e| Error::Internal(format!("serialization failed: {e}")))?;
                out.push_str(&line);
                out.push('\n');
            }
            Ok(out)
        }
        ReportFormat::Csv => {
            let mut out = String::from(
                "scenario,n,tester,hypothesis,trials,correct,frequency,wilson_low,\
                 wilson_high,mean_queries,mean_evolution_time,size_hypothesis_ok,\
                 promise_violations,epsilon,eps1,eps2\n",
            );
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            for s in summaries {
                let _ = writeln!(
                    out,
                    "{},{},{:?},{:?},{},{},{},{},{},{},{},{},{},{},{},{}",
                    s.scenario,
                    s.n,
                    s.tester,
                    s.hypothesis,
                    s.trials,
                    s.correct,
                    s.frequency,
                    s.wilson_low,
                    s.wilson_high,
                    s.mean_queries,
                    s.mean_evolution_time,
                    s.size_hypothesis_ok,
                    s.promise_violations,
                    opt(s.epsilon),
                    opt(s.eps1),
                    opt(s.eps2),
                );
            }
            Ok(out)
        }
    }
}

// ---------------------------------------------------------------------------
// Scenario grid files and key=value configs
// ---------------------------------------------------------------------------

/// Plain-text key=value configuration; flags win over config entries.
#[derive(Debug, Default, Clone)]
pub struct ConfigMap(HashMap<String, String>);

impl ConfigMap {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.to_path_buf(), e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("config line {} is not KEY=VALUE", lineno + 1))
            })?;
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(ConfigMap(map))
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|e| {
                Error::Parse(format!("config key {key} has invalid value {raw:?}: {e}"))
            }),
        }
    }
}

/// One scenario per line: whitespace-separated key=value pairs. Keys:
/// label, n, hypothesis, tester, k | property-file | paulis, eps, eps1,
/// eps2, trials, seed, t, rounds, fixture.
pub fn parse_scenario_grid(text: &str) -> Result<Vec<ScenarioSpec>> {
    let mut grid = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields: HashMap<&str, &str> = HashMap::new();
        for token in line.split_whitespace() {
            let (key, value) = token.split_once('=').ok_or_else(|| {
                Error::Parse(format!(
                    "scenario line {}: token {token:?} is not key=value",
                    lineno + 1
                ))
            })?;
            fields.insert(key, value);
        }
        let get = |key: &str| -> Option<&str> { fields.get(key).copied() };
        let parse_f64 = |key: &str| -> Result<Option<f64>> {
            get(key)
                .map(|v| {
                    v.parse::<f64>().map_err(|e| {
                        Error::Parse(format!("scenario line {}: {key}: {e}", lineno + 1))
                    })
                })
                .transpose()
        };
        let n: usize = get("n")
            .ok_or_else(|| Error::Parse(format!("scenario line {} missing n", lineno + 1)))?
            .parse()
            .map_err(|e| Error::Parse(format!("scenario line {}: n: {e}", lineno + 1)))?;
        let property = if let Some(k) = get("k") {
            PropertySpec::KLocal(k.parse().map_err(|e| {
                Error::Parse(format!("scenario line {}: k: {e}", lineno + 1))
            })?)
        } else if let Some(path) = get("property-file") {
            PropertySpec::File(PathBuf::from(path))
        } else if let Some(lits) = get("paulis") {
            PropertySpec::Literals(lits.split(',').map(str::to_string).collect())
        } else {
            return Err(Error::Parse(format!(
                "scenario line {} needs k=, property-file= or paulis=",
                lineno + 1
            )));
        };
        let spec = ScenarioSpec {
            label: get("label")
                .map(str::to_string)
                .unwrap_or_else(|| format!("scenario-{}", grid.len())),
            n,
            hypothesis: get("hypothesis").unwrap_or("null").parse()?,
            property,
            tester: get("tester").unwrap_or("single").parse()?,
            epsilon: parse_f64("eps")?.unwrap_or(0.9),
            eps1: parse_f64("eps1")?,
            eps2: parse_f64("eps2")?,
            trials: get("trials").unwrap_or("100").parse().map_err(|e| {
                Error::Parse(format!("scenario line {}: trials: {e}", lineno + 1))
            })?,
            seed: get("seed").unwrap_or("0").parse().map_err(|e| {
                Error::Parse(format!("scenario line {}: seed: {e}", lineno + 1))
            })?,
            t_override: parse_f64("t")?,
            rounds_override: get("rounds")
                .map(|v| {
                    v.parse::<usize>().map_err(|e| {
                        Error::Parse(format!("scenario line {}: rounds: {e}", lineno + 1))
                    })
                })
                .transpose()?,
            fixture: get("fixture").map(PathBuf::from),
        };
        grid.push(spec);
    }
    Ok(grid)
}

// ---------------------------------------------------------------------------
// Command line interface
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "hamtest",
    about = "Property testing of quantum Hamiltonians from black-box time evolution",
    version
)]
struct Cli {
    /// Plain-text KEY=VALUE config supplying defaults; flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct CommonScenarioArgs {
    /// Qubit count.
    #[arg(long)]
    n: Option<usize>,
    /// Locality parameter (k-local property).
    #[arg(long)]
    k: Option<usize>,
    /// File of Pauli literals, one per line.
    #[arg(long)]
    property_file: Option<PathBuf>,
    /// Inline comma-separated Pauli literals.
    #[arg(long)]
    paulis: Option<String>,
    /// null or far (fixture with --fixture PATH).
    #[arg(long)]
    hypothesis: Option<String>,
    /// Hamiltonian fixture to use as the hidden instance.
    #[arg(long)]
    fixture: Option<PathBuf>,
    /// Number of independent tester executions.
    #[arg(long)]
    trials: Option<usize>,
    /// Base seed (HAMTEST_SEED is the fallback).
    #[arg(long)]
    seed: Option<u64>,
    /// Report destination.
    #[arg(long)]
    out: Option<PathBuf>,
    /// jsonl (per trial) or csv (aggregated).
    #[arg(long)]
    format: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the stabilizer MUB family and print its fixture.
    BuildMub {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the MUB invariant suite; nonzero exit on any failed check.
    Verify {
        #[arg(long)]
        n: Option<usize>,
    },
    /// Single-property tester acceptance estimate.
    Test {
        #[command(flatten)]
        common: CommonScenarioArgs,
        #[arg(long)]
        eps: Option<f64>,
        /// Override the per-round evolution time.
        #[arg(long)]
        t_override: Option<f64>,
        /// Override the round count.
        #[arg(long)]
        rounds_override: Option<usize>,
    },
    /// Multi-property tester on shared data.
    MultiTest {
        #[command(flatten)]
        common: CommonScenarioArgs,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        /// Property specifiers: k:INT, file:PATH, or comma literals.
        /// Repeatable.
        #[arg(long = "property")]
        properties: Vec<String>,
    },
    /// Tolerant tester acceptance estimate.
    Tolerant {
        #[command(flatten)]
        common: CommonScenarioArgs,
        #[arg(long)]
        eps1: Option<f64>,
        #[arg(long)]
        eps2: Option<f64>,
    },
    /// Ancilla-assisted tester for arbitrarily large properties.
    AncillaTest {
        #[command(flatten)]
        common: CommonScenarioArgs,
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Run a scenario grid from a file.
    Sweep {
        #[arg(long)]
        scenarios: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        format: Option<String>,
    },
    /// Learning-gadget separation moments.
    GadgetStats {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Monte-Carlo verification of all tabulated Weingarten values plus
    /// the named Haar moment patterns.
    HaarMoments {
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Short-time norm-relation slopes on random Hamiltonian pairs.
    NormProbe {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        pairs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated decreasing times.
        #[arg(long)]
        t_list: Option<String>,
    },
}

fn env_seed() -> Option<u64> {
    std::env::var("HAMTEST_SEED").ok().and_then(|v| v.parse().ok())
}

struct Resolver {
    config: ConfigMap,
}

impl Resolver {
    fn pick<T: std::str::FromStr + Copy>(
        &self,
        flag: Option<T>,
        key: &str,
    ) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.config.get(key)
    }

    fn require<T: std::str::FromStr + Copy>(
        &self,
        flag: Option<T>,
        key: &str,
    ) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.pick(flag, key)?.ok_or_else(|| {
            Error::InvalidArgument(format!("missing --{key} (no config value either)"))
        })
    }

    fn seed(&self, flag: Option<u64>) -> Result<u64> {
        Ok(self
            .pick(flag, "seed")?
            .or_else(env_seed)
            .unwrap_or(0))
    }
}

fn property_from_common(common: &CommonScenarioArgs, config: &Resolver) -> Result<PropertySpec> {
    if let Some(k) = config.pick(common.k, "k")? {
        return Ok(PropertySpec::KLocal(k));
    }
    if let Some(path) = &common.property_file {
        return Ok(PropertySpec::File(path.clone()));
    }
    if let Some(lits) = &common.paulis {
        return Ok(PropertySpec::Literals(
            lits.split(',').map(|s| s.trim().to_string()).collect(),
        ));
    }
    Err(Error::InvalidArgument(
        "specify a property via --k, --property-file or --paulis".into(),
    ))
}

fn scenario_from_args(
    common: &CommonScenarioArgs,
    tester: TesterKind,
    epsilon: f64,
    eps_pair: Option<(f64, f64)>,
    t_override: Option<f64>,
    rounds_override: Option<usize>,
    resolver: &Resolver,
) -> Result<ScenarioSpec> {
    let n = resolver.require(common.n, "n")?;
    let hypothesis: Hypothesis = match &common.hypothesis {
        Some(h) => h.parse()?,
        None => {
            if common.fixture.is_some() {
                Hypothesis::Fixture
            } else {
                Hypothesis::Null
            }
        }
    };
    Ok(ScenarioSpec {
        label: format!("{tester:?}-{hypothesis:?}-n{n}").to_lowercase(),
        n,
        hypothesis,
        property: property_from_common(common, resolver)?,
        tester,
        epsilon,
        eps1: eps_pair.map(|p| p.0),
        eps2: eps_pair.map(|p| p.1),
        trials: resolver.pick(common.trials, "trials")?.unwrap_or(100),
        seed: resolver.seed(common.seed)?,
        t_override,
        rounds_override,
        fixture: common.fixture.clone(),
    })
}

fn print_summary(summary: &ScenarioSummary) {
    println!(
        "scenario {}: {}/{} correct (frequency {:.4}, Wilson 95% [{:.4}, {:.4}]), \
         mean queries {:.1}, mean evolution time {:.3}, size hypothesis ok: {}, \
         promise violations: {}",
        summary.scenario,
        summary.correct,
        summary.trials - summary.promise_violations,
        summary.frequency,
        summary.wilson_low,
        summary.wilson_high,
        summary.mean_queries,
        summary.mean_evolution_time,
        summary.size_hypothesis_ok,
        summary.promise_violations,
    );
}

fn print_checks(results: &[CheckResult]) -> bool {
    for c in results {
        println!(
            "check {}: {} (measured {:.6e}, reference {:.6e}, deviation {:.3e}, tolerance {:.3e})",
            c.name,
            if c.pass { "PASS" } else { "FAIL" },
            c.measured,
            c.reference,
            c.deviation,
            c.tolerance,
        );
    }
    oracles::all_pass(results)
}

fn write_or_print(out: &Option<PathBuf>, body: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, body).map_err(|e| Error::io(path.clone(), e))
        }
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn emit_scenario_output(
    records: &[TrialRecord],
    summaries: &[ScenarioSummary],
    out: &Option<PathBuf>,
    format: &Option<String>,
    resolver: &Resolver,
) -> Result<()> {
    let format = match format {
        Some(f) => f.parse()?,
        None => resolver
            .config
            .get::<String>("format")?
            .map(|f| f.parse())
            .transpose()?
            .unwrap_or(ReportFormat::Jsonl),
    };
    if let Some(path) = out {
        emit_report(records, summaries, format, path)?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<bool> {
    let config = match &cli.config {
        Some(path) => ConfigMap::load(path)?,
        None => ConfigMap::default(),
    };
    let resolver = Resolver { config };
    match cli.command {
        Command::BuildMub { n, out } => {
            let n = resolver.require(n, "n")?;
            let family = MubFamily::build(n)?;
            write_or_print(&out, &family.to_fixture())?;
            Ok(true)
        }
        Command::Verify { n } => {
            let n = resolver.require(n, "n")?;
            let family = MubFamily::build(n)?;
            let results = oracles::mub_invariant_suite(&family)?;
            Ok(print_checks(&results))
        }
        Command::Test { common, eps, t_override, rounds_override } => {
            let epsilon = resolver.require(eps, "eps")?;
            let spec = scenario_from_args(
                &common,
                TesterKind::Single,
                epsilon,
                None,
                resolver.pick(t_override, "t")?,
                resolver.pick(rounds_override, "rounds")?,
                &resolver,
            )?;
            let (records, summary) = run_scenario(&spec)?;
            print_summary(&summary);
            emit_scenario_output(
                &records,
                std::slice::from_ref(&summary),
                &common.out,
                &common.format,
                &resolver,
            )?;
            Ok(true)
        }
        Command::Tolerant { common, eps1, eps2 } => {
            let eps1 = resolver.require(eps1, "eps1")?;
            let eps2 = resolver.require(eps2, "eps2")?;
            let spec = scenario_from_args(
                &common,
                TesterKind::Tolerant,
                eps2,
                Some((eps1, eps2)),
                None,
                None,
                &resolver,
            )?;
            let (records, summary) = run_scenario(&spec)?;
            print_summary(&summary);
            emit_scenario_output(
                &records,
                std::slice::from_ref(&summary),
                &common.out,
                &common.format,
                &resolver,
            )?;
            Ok(true)
        }
        Command::AncillaTest { common, eps } => {
            let epsilon = resolver.require(eps, "eps")?;
            let spec = scenario_from_args(
                &common,
                TesterKind::Ancilla,
                epsilon,
                None,
                None,
                None,
                &resolver,
            )?;
            let (records, summary) = run_scenario(&spec)?;
            print_summary(&summary);
            emit_scenario_output(
                &records,
                std::slice::from_ref(&summary),
                &common.out,
                &common.format,
                &resolver,
            )?;
            Ok(true)
        }
        Command::MultiTest { common, eps, delta, properties } => {
            let epsilon: f64 = resolver.require(eps, "eps")?;
            let delta: f64 = resolver.require(delta, "delta")?;
            let n = resolver.require(common.n, "n")?;
            if properties.is_empty() {
                return Err(Error::InvalidArgument(
                    "multi-test needs at least one --property".into(),
                ));
            }
            let sets: Result<Vec<PropertySet>> = properties
                .iter()
                .map(|p| PropertySpec::parse_spec(p)?.resolve(n))
                .collect();
            let sets = sets?;
            let seed = resolver.seed(common.seed)?;
            let trials = resolver.pick(common.trials, "trials")?.unwrap_or(1);
            let family = MubFamily::build(n)?;
            let instance = match &common.fixture {
                Some(path) => {
                    let text = std::fs::read_to_string(path)
                        .map_err(|e| Error::io(path.clone(), e))?;
                    PauliHamiltonian::from_fixture(&text)?
                }
                None => null_instance(&sets[0], derive_seed(seed, 0, 3))?,
            };
            let distances: Vec<f64> = sets
                .iter()
                .map(|s| distance_to_property(&instance, s))
                .collect::<Result<_>>()?;
            let mut error_counts = vec![0usize; sets.len()];
            let mut scored = vec![0usize; sets.len()];
            for trial in 0..trials {
                let oracle = EvolutionOracle::new(instance.to_dense()?);
                let report = run_multi_test(
                    &oracle,
                    &family,
                    &sets,
                    epsilon,
                    delta,
                    derive_seed(seed, trial, 4),
                )?;
                for (m, verdict) in report.verdicts.iter().enumerate() {
                    let expected = if distances[m] <= 1e-12 {
                        Some(Verdict::Null)
                    } else if distances[m] >= epsilon - 1e-12 {
                        Some(Verdict::Alternate)
                    } else {
                        None
                    };
                    if let Some(e) = expected {
                        scored[m] += 1;
                        if *verdict != e {
                            error_counts[m] += 1;
                        }
                    }
                }
            }
            for m in 0..sets.len() {
                let freq = if scored[m] > 0 {
                    error_counts[m] as f64 / scored[m] as f64
                } else {
                    f64::NAN
                };
                println!(
                    "property {} (|S u I| = {}, distance {:.4}): error frequency {:.4} \
                     over {} scored trials (target delta {})",
                    m,
                    sets[m].size_with_identity(),
                    distances[m],
                    freq,
                    scored[m],
                    delta,
                );
            }
            Ok(true)
        }
        Command::Sweep { scenarios, out, format } => {
            let text = std::fs::read_to_string(&scenarios)
                .map_err(|e| Error::io(scenarios.clone(), e))?;
            let grid = parse_scenario_grid(&text)?;
            let (records, summaries) = acceptance_sweep(&grid)?;
            for summary in &summaries {
                print_summary(summary);
            }
            emit_scenario_output(&records, &summaries, &out, &format, &resolver)?;
            Ok(true)
        }
        Command::GadgetStats { n, eps, samples, seed } => {
            let n = resolver.require(n, "n")?;
            let eps = resolver.require(eps, "eps")?;
            let samples = resolver.pick(samples, "samples")?.unwrap_or(10_000);
            let seed = resolver.seed(seed)?;
            let mut rng = <rand_chacha::ChaCha12Rng as rand::SeedableRng>::seed_from_u64(seed);
            let results = oracles::gadget_separation_stats(n, eps, samples, &mut rng)?;
            Ok(print_checks(&results))
        }
        Command::HaarMoments { d, samples, seed } => {
            let d = resolver.require(d, "d")?;
            let samples = resolver.pick(samples, "samples")?.unwrap_or(100_000);
            let seed = resolver.seed(seed)?;
            let mut rng = <rand_chacha::ChaCha12Rng as rand::SeedableRng>::seed_from_u64(seed);
            let mut results = Vec::new();
            for cycle in CycleType::ALL {
                let spec = MomentSpec::cycle_value(cycle, d, samples)?;
                results.push(oracles::haar_moment_check(&spec, &mut rng)?);
            }
            let ident = nalgebra::DMatrix::identity(d, d);
            results.push(oracles::haar_moment_check(
                &MomentSpec::first_moment(ident.clone(), ident, samples)?,
                &mut rng,
            )?);
            results.push(oracles::haar_moment_check(
                &MomentSpec::second_moment_spike(d, 0.8, samples)?,
                &mut rng,
            )?);
            results.push(oracles::haar_moment_check(
                &MomentSpec::fourth_power_spike(d, 0.8, samples)?,
                &mut rng,
            )?);
            Ok(print_checks(&results))
        }
        Command::NormProbe { n, pairs, seed, t_list } => {
            let n = resolver.require(n, "n")?;
            let pairs = resolver.pick(pairs, "pairs")?.unwrap_or(5);
            let seed = resolver.seed(seed)?;
            let t_list: Vec<f64> = match t_list
                .or(resolver.config.get::<String>("t-list")?)
            {
                Some(list) => list
                    .split(',')
                    .map(|v| {
                        v.trim().parse::<f64>().map_err(|e| {
                            Error::Parse(format!("bad t value {v:?}: {e}"))
                        })
                    })
                    .collect::<Result<_>>()?,
                None => vec![0.1, 0.05, 0.025],
            };
            let full = PropertySet::k_local(n, n)?;
            let mut all = Vec::new();
            for pair in 0..pairs {
                let base = random_property_hamiltonian(&full, derive_seed(seed, pair, 5))?;
                let mut shifted = base.clone();
                let delta =
                    far_instance(&PropertySet::new(n), None, 0.3, derive_seed(seed, pair, 6))?;
                for (p, a) in delta.terms() {
                    shifted.add_term(*p, 0.4 * a)?;
                }
                let results = oracles::norm_relation_probe(
                    &base.to_dense()?,
                    &shifted.to_dense()?,
                    &t_list,
                )?;
                for mut c in results {
                    c.name = format!("pair{pair}_{}", c.name);
                    all.push(c);
                }
            }
            Ok(print_checks(&all))
        }
    }
}

/// Entry point shared by the binary and tests. Returns the process exit
/// code: 0 on success, 1 when a verification failed, 2 on usage errors.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own help/usage; version/help requests exit 0
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
