//! Randomized-measurement property testers built purely on the black-box
//! oracle and the ~_S relation check.
//!
//! Per round: draw a basis index uniformly over the d+1 MUB bases and a
//! state index uniformly over its d states, evolve for a short fixed time,
//! measure in the same basis, and ask whether the outcome state relates to
//! the input state through some Pauli in S u {I}. The single-property
//! tester stops on the first violation; the multi-property and tolerant
//! variants always run all rounds and compare the empirical violation rate
//! against a threshold.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::{RoundRecord, TimeEvolution};
use crate::hamiltonian::{PauliHamiltonian, PropertySet};
use crate::mub::MubFamily;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "H0")]
    Null,
    #[serde(rename = "H1")]
    Alternate,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Null => write!(f, "H0"),
            Verdict::Alternate => write!(f, "H1"),
        }
    }
}

/// Parameters of the single-property tester. Without overrides,
/// t = eps/6 and N = ceil(2 ln 3 / (t^2 eps^2)).
#[derive(Debug, Clone)]
pub struct TestConfig {
    pub epsilon: f64,
    pub t_override: Option<f64>,
    pub rounds_override: Option<usize>,
    pub seed: u64,
    pub assumption_check: bool,
}

impl TestConfig {
    pub fn new(epsilon: f64, seed: u64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "accuracy eps = {epsilon} outside (0, 1)"
            )));
        }
        Ok(TestConfig {
            epsilon,
            t_override: None,
            rounds_override: None,
            seed,
            assumption_check: true,
        })
    }

    pub fn evolution_time(&self) -> f64 {
        self.t_override.unwrap_or(self.epsilon / 6.0)
    }

    pub fn rounds(&self) -> usize {
        self.rounds_override.unwrap_or_else(|| {
            let t = self.evolution_time();
            (2.0 * 3.0f64.ln() / (t * t * self.epsilon * self.epsilon)).ceil() as usize
        })
    }

    pub fn overridden(&self) -> bool {
        self.t_override.is_some() || self.rounds_override.is_some()
    }
}

/// Parameters of the tolerant tester: t = sqrt((e2^2 - e1^2)/20),
/// N = ceil(30 ln 3 (e2^2 + e1^2) / (t^2 (e2^2 - e1^2)^2)), and the
/// acceptance threshold (1/5) t^2 (2 e2^2 + 3 e1^2).
#[derive(Debug, Clone)]
pub struct TolerantConfig {
    pub eps1: f64,
    pub eps2: f64,
    pub seed: u64,
}

impl TolerantConfig {
    pub fn new(eps1: f64, eps2: f64, seed: u64) -> Result<Self> {
        if !(eps1 >= 0.0 && eps1 < eps2 && eps2 < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "need 0 <= eps1 < eps2 < 1, got ({eps1}, {eps2})"
            )));
        }
        Ok(TolerantConfig { eps1, eps2, seed })
    }

    pub fn evolution_time(&self) -> f64 {
        ((self.eps2 * self.eps2 - self.eps1 * self.eps1) / 20.0).sqrt()
    }

    pub fn rounds(&self) -> usize {
        let t = self.evolution_time();
        let gap = self.eps2 * self.eps2 - self.eps1 * self.eps1;
        let total = self.eps2 * self.eps2 + self.eps1 * self.eps1;
        (30.0 * 3.0f64.ln() * total / (t * t * gap * gap)).ceil() as usize
    }

    pub fn threshold(&self) -> f64 {
        let t = self.evolution_time();
        t * t * (2.0 * self.eps2 * self.eps2 + 3.0 * self.eps1 * self.eps1) / 5.0
    }
}

/// Theorem-hypothesis bookkeeping; violations warn rather than abort
/// because the null-side guarantee holds regardless of the set size.
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionFlags {
    pub set_size_with_identity: usize,
    pub size_bound: f64,
    pub size_hypothesis_ok: bool,
    pub parameters_overridden: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TestReport {
    pub verdict: Verdict,
    pub t: f64,
    pub planned_rounds: usize,
    /// Violation-rate threshold for the thresholded variants; None for the
    /// stop-on-first-violation tester.
    pub threshold: Option<f64>,
    pub epsilon: Option<f64>,
    pub epsilon_pair: Option<(f64, f64)>,
    pub n_aux: Option<usize>,
    pub violations: usize,
    pub queries_used: u64,
    pub total_evolution_time: f64,
    pub flags: AssumptionFlags,
    pub rounds: Vec<RoundRecord>,
}

/// True iff |<phi_{i,l}| P |phi_{i,j}>| = 1 for some P in S u {I}.
/// By the overlap dichotomy this reduces to checking whether
/// r_l r_j q lies in G_i, at O(n^2) bit operations per candidate q.
pub fn relates_under_property(
    family: &MubFamily,
    basis: usize,
    state_in: usize,
    state_out: usize,
    s: &PropertySet,
) -> Result<bool> {
    let d = family.dim();
    if basis >= family.num_bases() || state_in >= d || state_out >= d {
        return Err(Error::InvalidArgument(format!(
            "indices ({basis},{state_in},{state_out}) out of range"
        )));
    }
    if s.num_qubits() != family.num_qubits() {
        return Err(Error::DimensionMismatch {
            left: s.num_qubits(),
            right: family.num_qubits(),
        });
    }
    let reps = family.coset_reps(basis);
    let shift = reps[state_out].mul_mod_phase(&reps[state_in])?;
    // q = I first: same coset means same state index
    if family.group_membership(basis, &shift) {
        return Ok(true);
    }
    for q in s.iter() {
        if family.group_membership(basis, &shift.mul_mod_phase(q)?) {
            return Ok(true);
        }
    }
    Ok(false)
}

fn size_flags(s: &PropertySet, d: usize, bound: f64, overridden: bool) -> AssumptionFlags {
    let _ = d;
    AssumptionFlags {
        set_size_with_identity: s.size_with_identity(),
        size_bound: bound,
        size_hypothesis_ok: (s.size_with_identity() as f64) <= bound,
        parameters_overridden: overridden,
    }
}

fn check_dimensions<O: TimeEvolution + ?Sized>(
    oracle: &O,
    family: &MubFamily,
    s: &PropertySet,
    n_aux: usize,
) -> Result<()> {
    if oracle.num_qubits() + n_aux != family.num_qubits() {
        return Err(Error::DimensionMismatch {
            left: oracle.num_qubits() + n_aux,
            right: family.num_qubits(),
        });
    }
    if s.num_qubits() != family.num_qubits() {
        return Err(Error::DimensionMismatch {
            left: s.num_qubits(),
            right: family.num_qubits(),
        });
    }
    Ok(())
}

/// Single-property tester: N short-time randomized-measurement rounds,
/// returning the alternate hypothesis on the first detected violation.
pub fn run_single_test<O: TimeEvolution + ?Sized>(
    oracle: &O,
    family: &MubFamily,
    s: &PropertySet,
    config: &TestConfig,
) -> Result<TestReport> {
    run_core(oracle, family, s, config, 0)
}

fn run_core<O: TimeEvolution + ?Sized>(
    oracle: &O,
    family: &MubFamily,
    s: &PropertySet,
    config: &TestConfig,
    n_aux: usize,
) -> Result<TestReport> {
    check_dimensions(oracle, family, s, n_aux)?;
    let d = family.dim();
    let t = config.evolution_time();
    let planned = config.rounds();
    let eps = config.epsilon;
    let bound = (d as f64 + 1.0) * eps.powi(4) / 144.0;
    let flags = size_flags(s, d, bound, config.overridden());
    let queries_before = oracle.queries_used();
    let time_before = oracle.total_evolution_time();
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let mut rounds = Vec::with_capacity(planned.min(1 << 20));
    let mut verdict = Verdict::Null;
    let mut violations = 0usize;
    for _ in 0..planned {
        let basis = rng.gen_range(0..family.num_bases());
        let state = rng.gen_range(0..d);
        let mut record = if n_aux == 0 {
            oracle.sample_round(family, basis, state, t, &mut rng)?
        } else {
            oracle.sample_round_with_ancilla(family, n_aux, basis, state, t, &mut rng)?
        };
        record.violation = !relates_under_property(family, basis, state, record.outcome, s)?;
        rounds.push(record);
        if record.violation {
            violations += 1;
            verdict = Verdict::Alternate;
            break;
        }
    }
    Ok(TestReport {
        verdict,
        t,
        planned_rounds: planned,
        threshold: None,
        epsilon: Some(eps),
        epsilon_pair: None,
        n_aux: if n_aux == 0 { None } else { Some(n_aux) },
        violations,
        queries_used: oracle.queries_used() - queries_before,
        total_evolution_time: oracle.total_evolution_time() - time_before,
        flags,
        rounds,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MultiTestReport {
    pub verdicts: Vec<Verdict>,
    pub violation_counts: Vec<usize>,
    pub rounds_used: usize,
    pub t: f64,
    pub threshold: f64,
    pub flags: Vec<AssumptionFlags>,
    pub queries_used: u64,
    pub total_evolution_time: f64,
}

/// Multi-property tester: one data-acquisition pass, then per-property
/// thresholding of the empirical violation rate at (3/8) t^2 eps^2
/// ("measure first, ask questions later").
pub fn run_multi_test<O: TimeEvolution + ?Sized>(
    oracle: &O,
    family: &MubFamily,
    properties: &[PropertySet],
    epsilon: f64,
    delta: f64,
    seed: u64,
) -> Result<MultiTestReport> {
    if properties.is_empty() {
        return Err(Error::InvalidArgument("no properties to test".into()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "accuracy eps = {epsilon} outside (0, 1)"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "error budget delta = {delta} outside (0, 1)"
        )));
    }
    for s in properties {
        check_dimensions(oracle, family, s, 0)?;
    }
    let d = family.dim();
    let t = epsilon / 6.0;
    let m = properties.len() as f64;
    let rounds_used =
        (100.0 * (m / delta).ln() / (t * t * epsilon * epsilon)).ceil() as usize;
    let threshold = 0.375 * t * t * epsilon * epsilon;
    let queries_before = oracle.queries_used();
    let time_before = oracle.total_evolution_time();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(rounds_used);
    for _ in 0..rounds_used {
        let basis = rng.gen_range(0..family.num_bases());
        let state = rng.gen_range(0..d);
        records.push(oracle.sample_round(family, basis, state, t, &mut rng)?);
    }
    let bound = (d as f64 + 1.0) * epsilon.powi(4) / 144.0;
    let mut verdicts = Vec::with_capacity(properties.len());
    let mut violation_counts = Vec::with_capacity(properties.len());
    let mut flags = Vec::with_capacity(properties.len());
    for s in properties {
        let mut count = 0usize;
        for r in &records {
            if !relates_under_property(family, r.basis, r.state, r.outcome, s)? {
                count += 1;
            }
        }
        let rate = count as f64 / rounds_used as f64;
        verdicts.push(if rate <= threshold {
            Verdict::Null
        } else {
            Verdict::Alternate
        });
        violation_counts.push(count);
        flags.push(size_flags(s, d, bound, false));
    }
    Ok(MultiTestReport {
        verdicts,
        violation_counts,
        rounds_used,
        t,
        threshold,
        flags,
        queries_used: oracle.queries_used() - queries_before,
        total_evolution_time: oracle.total_evolution_time() - time_before,
    })
}

/// Number of ancilla qubits that restores the size hypothesis:
/// ceil(log2(144 |S u {I}| / (2^n eps^4))), floored at zero.
pub fn required_ancillas(n: usize, set_size_with_identity: usize, epsilon: f64) -> usize {
    let ratio = 144.0 * set_size_with_identity as f64
        / ((1u64 << n) as f64 * epsilon.powi(4));
    let aux = ratio.log2().ceil();
    if aux > 0.0 {
        aux as usize
    } else {
        0
    }
}

/// Arbitrary-size-property tester: lifts S to S tensor I on n + n_aux
/// qubits and runs the single-property logic on the extended family with
/// the evolution acting as e^{itH} tensor identity.
pub fn run_ancilla_test<O: TimeEvolution + ?Sized>(
    oracle: &O,
    family_ext: &MubFamily,
    s: &PropertySet,
    epsilon: f64,
    seed: u64,
) -> Result<TestReport> {
    let n = oracle.num_qubits();
    if s.num_qubits() != n {
        return Err(Error::DimensionMismatch { left: s.num_qubits(), right: n });
    }
    let n_aux = required_ancillas(n, s.size_with_identity(), epsilon);
    if family_ext.num_qubits() != n + n_aux {
        return Err(Error::InvalidArgument(format!(
            "extended family has {} qubits but the test needs n_aux = {n_aux} \
             ancillas on top of {n} system qubits",
            family_ext.num_qubits()
        )));
    }
    let lifted = s.lift_with_ancillas(n_aux)?;
    let config = TestConfig::new(epsilon, seed)?;
    let mut report = run_core(oracle, family_ext, &lifted, &config, n_aux)?;
    report.n_aux = Some(n_aux);
    // with ancillas the hypothesis is restored by construction
    let d_ext = family_ext.dim();
    let bound = (d_ext as f64 + 1.0) * epsilon.powi(4) / 144.0;
    report.flags = size_flags(s, d_ext, bound, false);
    Ok(report)
}

/// Builds the extended MUB family for [`run_ancilla_test`], surfacing the
/// computed ancilla count in any resource error.
pub fn build_ancilla_family(
    n: usize,
    set_size_with_identity: usize,
    epsilon: f64,
) -> Result<MubFamily> {
    let n_aux = required_ancillas(n, set_size_with_identity, epsilon);
    MubFamily::build(n + n_aux).map_err(|e| match e {
        Error::ResourceLimit(msg) => Error::ResourceLimit(format!(
            "ancilla test needs n_aux = {n_aux} auxiliary qubits ({} total): {msg}",
            n + n_aux
        )),
        other => other,
    })
}

/// Tolerant tester: fixed number of rounds, verdict H0 iff the empirical
/// violation rate stays below (1/5) t^2 (2 eps2^2 + 3 eps1^2).
pub fn run_tolerant_test<O: TimeEvolution + ?Sized>(
    oracle: &O,
    family: &MubFamily,
    s: &PropertySet,
    config: &TolerantConfig,
) -> Result<TestReport> {
    check_dimensions(oracle, family, s, 0)?;
    let d = family.dim();
    let t = config.evolution_time();
    let planned = config.rounds();
    let threshold = config.threshold();
    let gap = config.eps2 * config.eps2 - config.eps1 * config.eps1;
    let bound = (d as f64 + 1.0) * gap * gap / 400.0;
    let flags = size_flags(s, d, bound, false);
    let queries_before = oracle.queries_used();
    let time_before = oracle.total_evolution_time();
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let mut rounds = Vec::with_capacity(planned);
    let mut violations = 0usize;
    for _ in 0..planned {
        let basis = rng.gen_range(0..family.num_bases());
        let state = rng.gen_range(0..d);
        let mut record = oracle.sample_round(family, basis, state, t, &mut rng)?;
        record.violation = !relates_under_property(family, basis, state, record.outcome, s)?;
        if record.violation {
            violations += 1;
        }
        rounds.push(record);
    }
    let rate = violations as f64 / planned as f64;
    let verdict = if rate <= threshold {
        Verdict::Null
    } else {
        Verdict::Alternate
    };
    Ok(TestReport {
        verdict,
        t,
        planned_rounds: planned,
        threshold: Some(threshold),
        epsilon: None,
        epsilon_pair: Some((config.eps1, config.eps2)),
        n_aux: None,
        violations,
        queries_used: oracle.queries_used() - queries_before,
        total_evolution_time: oracle.total_evolution_time() - time_before,
        flags,
        rounds,
    })
}

/// The commuting {I,X}^n warm-up statistic: evolve |0...0> and return the
/// probability of a computational-basis outcome of Hamming weight > k;
/// approximately t^2 sum_{|j|>k} alpha_{X^j}^2 for small t.
pub fn commuting_case_rate(h: &PauliHamiltonian, k: usize, t: f64) -> Result<f64> {
    for (p, _) in h.terms() {
        if p.z_bits() != 0 {
            return Err(Error::InvalidArgument(format!(
                "term {p} is not X-type"
            )));
        }
    }
    let dense = h.to_dense()?;
    let u = crate::evolution::evolve_unitary(&dense, t)?;
    let d = dense.dim();
    let mut rate = 0.0;
    for row in 0..d {
        if (row as u64).count_ones() as usize > k {
            rate += u[(row, 0)].norm_sqr();
        }
    }
    Ok(rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{EvolutionOracle, RoundRecord};
    use crate::hamiltonian::random_property_hamiltonian;
    use crate::linalg::CMatrix;
    use crate::pauli::PauliString;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn zero_oracle(n: usize) -> EvolutionOracle {
        let d = 1usize << n;
        EvolutionOracle::new(
            crate::hamiltonian::DenseHamiltonian::new(n, CMatrix::zeros(d, d)).unwrap(),
        )
    }

    #[test]
    fn relation_is_reflexive() {
        let family = MubFamily::build(2).unwrap();
        let s = PropertySet::new(2);
        for i in 0..family.num_bases() {
            for j in 0..family.dim() {
                assert!(relates_under_property(&family, i, j, j, &s).unwrap());
            }
        }
    }

    #[test]
    fn single_qubit_bit_flip_relation() {
        let family = MubFamily::build(1).unwrap();
        let z_index = family
            .groups()
            .iter()
            .position(|g| g.contains(&ps("Z")))
            .unwrap();
        let with_x = PropertySet::from_paulis(1, [ps("X")]).unwrap();
        let with_z = PropertySet::from_paulis(1, [ps("Z")]).unwrap();
        assert!(relates_under_property(&family, z_index, 0, 1, &with_x).unwrap());
        assert!(!relates_under_property(&family, z_index, 0, 1, &with_z).unwrap());
    }

    #[test]
    fn relation_matches_dense_overlaps_exhaustively_n2() {
        let family = MubFamily::build(2).unwrap();
        for p in PauliString::enumerate(2).unwrap() {
            let s = if p.is_identity() {
                PropertySet::new(2)
            } else {
                PropertySet::from_paulis(2, [p]).unwrap()
            };
            let dense_p = p.to_matrix().unwrap();
            for i in 0..family.num_bases() {
                let basis = family.basis_matrix(i).unwrap();
                for j in 0..4 {
                    for l in 0..4 {
                        let overlap =
                            basis.column(l).dotc(&(&dense_p * basis.column(j))).norm();
                        // dichotomy: overlap is 0 or 1
                        assert!(
                            overlap < 1e-9 || (overlap - 1.0).abs() < 1e-9,
                            "overlap {overlap}"
                        );
                        let dense_relates = (overlap - 1.0).abs() < 1e-9 || l == j;
                        let fast = relates_under_property(&family, i, j, l, &s).unwrap();
                        assert_eq!(fast, dense_relates, "p={p} i={i} j={j} l={l}");
                    }
                }
            }
        }
    }

    #[test]
    fn relation_symmetric_in_state_pair() {
        let family = MubFamily::build(2).unwrap();
        let s = PropertySet::k_local(2, 1).unwrap();
        for i in 0..family.num_bases() {
            for j in 0..4 {
                for l in 0..4 {
                    assert_eq!(
                        relates_under_property(&family, i, j, l, &s).unwrap(),
                        relates_under_property(&family, i, l, j, &s).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn config_formulas() {
        let config = TestConfig::new(0.6, 0).unwrap();
        assert!((config.evolution_time() - 0.1).abs() < 1e-15);
        assert_eq!(config.rounds(), 611);
        assert!(TestConfig::new(1.2, 0).is_err());

        let tolerant = TolerantConfig::new(0.0, 0.9, 0).unwrap();
        assert!((tolerant.evolution_time() - 0.9 / 20.0f64.sqrt()).abs() < 1e-15);
        assert!(TolerantConfig::new(0.5, 0.4, 0).is_err());
        assert!(TolerantConfig::new(0.5, 0.5, 0).is_err());
    }

    #[test]
    fn zero_hamiltonian_always_accepts_with_exact_query_count() {
        let family = MubFamily::build(2).unwrap();
        let oracle = zero_oracle(2);
        let s = PropertySet::k_local(2, 1).unwrap();
        let mut config = TestConfig::new(0.6, 3).unwrap();
        config.rounds_override = Some(40);
        let report = run_single_test(&oracle, &family, &s, &config).unwrap();
        assert_eq!(report.verdict, Verdict::Null);
        assert_eq!(report.queries_used, 40);
        assert_eq!(report.rounds.len(), 40);
        assert!(
            (report.total_evolution_time - 40.0 * config.evolution_time()).abs() < 1e-9
        );
        assert!(report.rounds.iter().all(|r| !r.violation));
    }

    #[test]
    fn far_instance_detected_early() {
        // H = 0.95 XXX vs 2-local property: a violation shows up quickly at
        // large t, and the run stops at the first one.
        let family = MubFamily::build(3).unwrap();
        let h = PauliHamiltonian::from_terms(3, [(ps("XXX"), 0.95)])
            .unwrap()
            .to_dense()
            .unwrap();
        let oracle = EvolutionOracle::new(h);
        let s = PropertySet::k_local(3, 2).unwrap();
        let mut config = TestConfig::new(0.9, 1).unwrap();
        config.t_override = Some(1.2);
        config.rounds_override = Some(4000);
        let report = run_single_test(&oracle, &family, &s, &config).unwrap();
        assert_eq!(report.verdict, Verdict::Alternate);
        assert!(report.queries_used < 4000);
        assert_eq!(report.rounds.last().unwrap().violation, true);
        assert_eq!(report.violations, 1);
        assert!(report.flags.parameters_overridden);
        assert!(!report.flags.size_hypothesis_ok);
    }

    #[test]
    fn multi_test_reduces_to_threshold_variant() {
        let family = MubFamily::build(2).unwrap();
        let oracle = zero_oracle(2);
        let s = vec![PropertySet::k_local(2, 1).unwrap()];
        let report = run_multi_test(&oracle, &family, &s, 0.9, 1.0 / 3.0, 5).unwrap();
        let t: f64 = 0.15;
        let expected =
            (100.0 * 3.0f64.ln() / (t * t * 0.81)).ceil() as usize;
        assert_eq!(report.rounds_used, expected);
        assert_eq!(report.verdicts, vec![Verdict::Null]);
        assert_eq!(report.violation_counts, vec![0]);
        assert!(run_multi_test(&oracle, &family, &[], 0.9, 0.1, 5).is_err());
    }

    #[test]
    fn ancilla_count_formula() {
        // |S u {I}| already small enough: no ancillas
        assert_eq!(required_ancillas(3, 2, 0.99), {
            let ratio = 144.0 * 2.0 / (8.0 * 0.99f64.powi(4));
            ratio.log2().ceil() as usize
        });
        // spec'd worked example: n=2, |S u {I}| = 16, eps = 0.9 -> 10
        assert_eq!(required_ancillas(2, 16, 0.9), 10);
        // huge hypothesis margin -> floored at zero
        assert_eq!(required_ancillas(10, 1, 0.999), 0);
    }

    #[test]
    fn ancilla_family_error_carries_aux_count() {
        let err = build_ancilla_family(2, 16, 0.9).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("n_aux = 10"), "message was: {msg}");
    }

    #[test]
    fn ancilla_test_runs_on_extended_system() {
        // n = 1, eps chosen so that one ancilla qubit is required
        let s = PropertySet::from_paulis(1, [ps("X"), ps("Y"), ps("Z")]).unwrap();
        let eps = 0.95;
        let n_aux = required_ancillas(1, s.size_with_identity(), eps);
        assert!(n_aux >= 1);
        let family_ext = build_ancilla_family(1, s.size_with_identity(), eps).unwrap();
        let h = PauliHamiltonian::from_terms(1, [(ps("Z"), 0.4)])
            .unwrap()
            .to_dense()
            .unwrap();
        let oracle = EvolutionOracle::new(h);
        let report = run_ancilla_test(&oracle, &family_ext, &s, eps, 7).unwrap();
        assert_eq!(report.n_aux, Some(n_aux));
        assert_eq!(report.verdict, Verdict::Null);
        assert!(report.flags.size_hypothesis_ok);
    }

    #[test]
    fn lifted_relation_blocks_matrix_elements() {
        // phi !~ psi under the lifted property implies <phi|(H (x) I)^m|psi> = 0
        // for m = 0, 1; dense check at n = 1 with one ancilla.
        let family_ext = MubFamily::build(2).unwrap();
        let s = PropertySet::from_paulis(1, [ps("X")]).unwrap();
        let lifted = s.lift_with_ancillas(1).unwrap();
        let h = PauliHamiltonian::from_terms(1, [(ps("X"), 0.7)]).unwrap();
        let h_ext = PauliHamiltonian::from_terms(2, [(ps("XI"), 0.7)])
            .unwrap()
            .to_dense()
            .unwrap();
        let _ = h;
        for i in 0..family_ext.num_bases() {
            let basis = family_ext.basis_matrix(i).unwrap();
            for j in 0..4 {
                for l in 0..4 {
                    if !relates_under_property(&family_ext, i, j, l, &lifted).unwrap() {
                        let overlap = basis.column(l).dotc(&basis.column(j)).norm();
                        let element = basis
                            .column(l)
                            .dotc(&(h_ext.matrix() * basis.column(j)))
                            .norm();
                        assert!(overlap < 1e-10, "m=0 element {overlap}");
                        assert!(element < 1e-10, "m=1 element {element}");
                    }
                }
            }
        }
    }

    #[test]
    fn tolerant_runs_all_rounds_and_thresholds() {
        let family = MubFamily::build(2).unwrap();
        let oracle = zero_oracle(2);
        let s = PropertySet::k_local(2, 1).unwrap();
        let config = TolerantConfig::new(0.2, 0.8, 11).unwrap();
        let report = run_tolerant_test(&oracle, &family, &s, &config).unwrap();
        assert_eq!(report.verdict, Verdict::Null);
        assert_eq!(report.queries_used as usize, config.rounds());
        assert_eq!(report.threshold, Some(config.threshold()));
        assert_eq!(report.epsilon_pair, Some((0.2, 0.8)));
    }

    #[test]
    fn commuting_rate_vanishes_without_dynamics_and_tracks_amplitude() {
        let h0 = PauliHamiltonian::new(3);
        assert_eq!(commuting_case_rate(&h0, 1, 0.3).unwrap(), 0.0);

        let eps = 0.6;
        let h = PauliHamiltonian::from_terms(3, [(ps("XXX"), eps)]).unwrap();
        // rate = sin^2(eps t) exactly for a single X-type term
        for &t in &[0.2, 0.05] {
            let rate = commuting_case_rate(&h, 2, t).unwrap();
            assert!((rate - (eps * t).sin().powi(2)).abs() < 1e-12);
        }
        // rate / t^2 -> eps^2
        let small = commuting_case_rate(&h, 2, 1e-4).unwrap();
        assert!((small / 1e-8 - eps * eps).abs() < 1e-4);

        let zz = PauliHamiltonian::from_terms(3, [(ps("ZZI"), 0.3)]).unwrap();
        assert!(commuting_case_rate(&zz, 1, 0.1).is_err());
    }

    #[test]
    fn commuting_null_rate_is_fourth_order() {
        // k-local X-type instances keep the heavy-outcome rate at O(t^4)
        let mut h = PauliHamiltonian::new(3);
        h.add_term(ps("XII"), 0.4).unwrap();
        h.add_term(ps("IXI"), -0.3).unwrap();
        h.add_term(ps("XXI"), 0.2).unwrap();
        for &t in &[0.1, 0.05] {
            let rate = commuting_case_rate(&h, 2, t).unwrap();
            assert!(rate <= 16.0 * t.powi(4), "rate {rate} at t {t}");
        }
    }

    #[test]
    fn round_records_serialize() {
        let r = RoundRecord { basis: 1, state: 2, outcome: 3, t: 0.5, violation: true };
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"violation\":true"));
    }
}
