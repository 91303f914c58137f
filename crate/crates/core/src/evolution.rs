//! The black-box access model: evolve a chosen MUB input state under
//! e^{itH} and sample (or exactly enumerate) measurement outcomes in the
//! matching MUB basis.
//!
//! Testers interact with the Hamiltonian only through [`TimeEvolution`];
//! the backing matrix never leaves [`EvolutionOracle`]. Every query is
//! accounted in the query log as (count, cumulative evolution time);
//! zero-time queries count toward the query number.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::{DenseHamiltonian, PropertySet};
use crate::linalg::{self, CMatrix};
use crate::mub::MubFamily;
use crate::testers::relates_under_property;
use crate::DEFAULT_DENSE_QUBIT_CAP;

/// One measurement round: drew basis i, state j, observed outcome l after
/// evolving for time t. `violation` is filled in by the tester once the
/// relation check has run.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RoundRecord {
    pub basis: usize,
    pub state: usize,
    pub outcome: usize,
    pub t: f64,
    pub violation: bool,
}

/// Atomic (query count, cumulative evolution time) accounting.
#[derive(Debug, Default)]
pub struct QueryLog {
    queries: AtomicU64,
    time_bits: AtomicU64,
}

impl QueryLog {
    fn record(&self, t: f64) {
        self.queries.fetch_add(1, Ordering::Relaxed);
        let mut current = self.time_bits.load(Ordering::Relaxed);
        loop {
            let updated = (f64::from_bits(current) + t).to_bits();
            match self.time_bits.compare_exchange_weak(
                current,
                updated,
                Ordering::Relaxed,
                Ordering::Relaxed,
            ) {
                Ok(_) => break,
                Err(actual) => current = actual,
            }
        }
    }

    pub fn queries(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }

    pub fn total_time(&self) -> f64 {
        f64::from_bits(self.time_bits.load(Ordering::Relaxed))
    }
}

/// Black-box time-evolution access: prepare an MUB state, evolve, measure
/// in the same basis. This is the only channel testers may use.
pub trait TimeEvolution {
    fn num_qubits(&self) -> usize;

    /// Runs one round on the system alone.
    fn sample_round(
        &self,
        family: &MubFamily,
        basis: usize,
        state: usize,
        t: f64,
        rng: &mut ChaCha12Rng,
    ) -> Result<RoundRecord>;

    /// Runs one round on system plus `n_aux` ancilla qubits; the evolution
    /// acts as e^{itH} tensor identity and `family` lives on n + n_aux
    /// qubits.
    fn sample_round_with_ancilla(
        &self,
        family: &MubFamily,
        n_aux: usize,
        basis: usize,
        state: usize,
        t: f64,
        rng: &mut ChaCha12Rng,
    ) -> Result<RoundRecord>;

    fn queries_used(&self) -> u64;

    fn total_evolution_time(&self) -> f64;
}

/// Concrete oracle holding the hidden Hamiltonian and a unitary cache
/// keyed by (t, ancilla count); the testers in this crate use a single
/// fixed t, so each run computes one exponential.
pub struct EvolutionOracle {
    hamiltonian: DenseHamiltonian,
    cache: Mutex<HashMap<(u64, usize), Arc<CMatrix>>>,
    log: QueryLog,
}

impl EvolutionOracle {
    pub fn new(hamiltonian: DenseHamiltonian) -> Self {
        EvolutionOracle {
            hamiltonian,
            cache: Mutex::new(HashMap::new()),
            log: QueryLog::default(),
        }
    }

    fn unitary(&self, t: f64, n_aux: usize) -> Result<Arc<CMatrix>> {
        let key = (t.to_bits(), n_aux);
        if let Some(u) = self.cache.lock().unwrap().get(&key) {
            return Ok(Arc::clone(u));
        }
        let u = if n_aux == 0 {
            evolve_unitary(&self.hamiltonian, t)?
        } else {
            evolve_with_ancilla(&self.hamiltonian, t, n_aux)?
        };
        let u = Arc::new(u);
        self.cache
            .lock()
            .unwrap()
            .entry(key)
            .or_insert_with(|| Arc::clone(&u));
        Ok(u)
    }

    fn run_round(
        &self,
        family: &MubFamily,
        n_aux: usize,
        basis: usize,
        state: usize,
        t: f64,
        rng: &mut ChaCha12Rng,
    ) -> Result<RoundRecord> {
        if !(t >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tester-facing evolution time must be nonnegative, got {t}"
            )));
        }
        if family.num_qubits() != self.num_qubits() + n_aux {
            return Err(Error::DimensionMismatch {
                left: family.num_qubits(),
                right: self.num_qubits() + n_aux,
            });
        }
        let u = self.unitary(t, n_aux)?;
        let probabilities = born_distribution(&u, family, basis, state)?;
        self.log.record(t);
        let outcome = sample_index(&probabilities, rng);
        Ok(RoundRecord { basis, state, outcome, t, violation: false })
    }
}

impl TimeEvolution for EvolutionOracle {
    fn num_qubits(&self) -> usize {
        self.hamiltonian.num_qubits()
    }

    fn sample_round(
        &self,
        family: &MubFamily,
        basis: usize,
        state: usize,
        t: f64,
        rng: &mut ChaCha12Rng,
    ) -> Result<RoundRecord> {
        self.run_round(family, 0, basis, state, t, rng)
    }

    fn sample_round_with_ancilla(
        &self,
        family: &MubFamily,
        n_aux: usize,
        basis: usize,
        state: usize,
        t: f64,
        rng: &mut ChaCha12Rng,
    ) -> Result<RoundRecord> {
        self.run_round(family, n_aux, basis, state, t, rng)
    }

    fn queries_used(&self) -> u64 {
        self.log.queries()
    }

    fn total_evolution_time(&self) -> f64 {
        self.log.total_time()
    }
}

/// e^{itH} via Hermitian eigendecomposition. The sign convention is such
/// that Born probabilities are |<phi_{i,l}| e^{itH} |phi_{i,j}>|^2.
pub fn evolve_unitary(h: &DenseHamiltonian, t: f64) -> Result<CMatrix> {
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!("evolution time {t} not finite")));
    }
    let u = linalg::exp_i_hermitian(h.matrix(), t);
    let defect = linalg::unitarity_defect(&u);
    if defect > 1e-10 {
        return Err(Error::Internal(format!(
            "evolution operator is not unitary (defect {defect:.3e})"
        )));
    }
    Ok(u)
}

/// e^{itH} tensor identity on n_aux ancilla qubits (ancillas occupy the
/// high index bits).
pub fn evolve_with_ancilla(h: &DenseHamiltonian, t: f64, n_aux: usize) -> Result<CMatrix> {
    let n_total = h.num_qubits() + n_aux;
    if n_total > DEFAULT_DENSE_QUBIT_CAP {
        return Err(Error::ResourceLimit(format!(
            "extended evolution on {n_total} qubits exceeds cap {DEFAULT_DENSE_QUBIT_CAP}"
        )));
    }
    let u = evolve_unitary(h, t)?;
    if n_aux == 0 {
        return Ok(u);
    }
    let d = h.dim();
    let d_aux = 1usize << n_aux;
    let mut ext = CMatrix::zeros(d * d_aux, d * d_aux);
    for block in 0..d_aux {
        let offset = block * d;
        for r in 0..d {
            for c in 0..d {
                ext[(offset + r, offset + c)] = u[(r, c)];
            }
        }
    }
    Ok(ext)
}

/// Outcome probabilities |<phi_{i,l}| U |phi_{i,j}>|^2 over l.
pub fn born_distribution(
    u: &CMatrix,
    family: &MubFamily,
    basis: usize,
    state: usize,
) -> Result<Vec<f64>> {
    let d = family.dim();
    if basis >= family.num_bases() || state >= d {
        return Err(Error::InvalidArgument(format!(
            "basis/state index ({basis},{state}) out of range"
        )));
    }
    if u.nrows() != d {
        return Err(Error::DimensionMismatch { left: u.nrows(), right: d });
    }
    let states = family.basis_matrix(basis)?;
    let evolved = u * states.column(state);
    let mut probabilities = Vec::with_capacity(d);
    let mut total = 0.0;
    for l in 0..d {
        let amp = states.column(l).dotc(&evolved);
        let p = amp.norm_sqr();
        probabilities.push(p);
        total += p;
    }
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::Internal(format!(
            "Born distribution sums to {total}, expected 1"
        )));
    }
    Ok(probabilities)
}

fn sample_index(probabilities: &[f64], rng: &mut ChaCha12Rng) -> usize {
    let draw: f64 = rng.gen();
    let mut acc = 0.0;
    for (k, p) in probabilities.iter().enumerate() {
        acc += p;
        if draw < acc {
            return k;
        }
    }
    probabilities.len() - 1
}

/// The exact per-round violation probability
/// (1/(d(d+1))) sum_{i,j,l} |<phi_{i,l}| e^{itH} |phi_{i,j}>|^2
/// 1{phi_{i,l} !~_S phi_{i,j}}, by full enumeration; no sampling.
pub fn exact_violation_rate(
    h: &DenseHamiltonian,
    t: f64,
    s: &PropertySet,
    family: &MubFamily,
) -> Result<f64> {
    if family.num_qubits() != h.num_qubits() || s.num_qubits() != h.num_qubits() {
        return Err(Error::DimensionMismatch {
            left: family.num_qubits(),
            right: h.num_qubits(),
        });
    }
    let d = family.dim();
    let u = evolve_unitary(h, t)?;
    let mut rate = 0.0;
    for i in 0..family.num_bases() {
        let states = family.basis_matrix(i)?;
        let transitions = states.adjoint() * &u * states.as_ref();
        for j in 0..d {
            for l in 0..d {
                if !relates_under_property(family, i, j, l, s)? {
                    rate += transitions[(l, j)].norm_sqr();
                }
            }
        }
    }
    Ok(rate / (d as f64 * (d as f64 + 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{random_property_hamiltonian, PauliHamiltonian};
    use crate::pauli::PauliString;
    use rand::SeedableRng;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn dense(n: usize, terms: &[(&str, f64)]) -> DenseHamiltonian {
        PauliHamiltonian::from_terms(
            n,
            terms.iter().map(|(p, a)| (ps(p), *a)),
        )
        .unwrap()
        .to_dense()
        .unwrap()
    }

    #[test]
    fn zero_time_gives_identity() {
        let h = dense(2, &[("XZ", 0.7)]);
        let u = evolve_unitary(&h, 0.0).unwrap();
        let defect = (&u - CMatrix::identity(4, 4))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(defect < 1e-14);
    }

    #[test]
    fn diagonal_exponential_of_z() {
        let h = dense(1, &[("Z", 1.0)]);
        let u = evolve_unitary(&h, std::f64::consts::FRAC_PI_2).unwrap();
        assert!((u[(0, 0)] - C64::new(0.0, 1.0)).norm() < 1e-12);
        assert!((u[(1, 1)] - C64::new(0.0, -1.0)).norm() < 1e-12);
        assert!(u[(0, 1)].norm() < 1e-14);
    }

    use crate::linalg::C64;

    #[test]
    fn forward_backward_evolution_cancels() {
        let s = PropertySet::k_local(2, 2).unwrap();
        let h = random_property_hamiltonian(&s, 9).unwrap().to_dense().unwrap();
        let u = evolve_unitary(&h, 0.83).unwrap();
        let v = evolve_unitary(&h, -0.83).unwrap();
        let defect = (&u * &v - CMatrix::identity(4, 4))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(defect < 1e-10);
    }

    #[test]
    fn born_point_mass_without_dynamics() {
        let family = MubFamily::build(2).unwrap();
        let u = CMatrix::identity(4, 4);
        for i in 0..family.num_bases() {
            for j in 0..family.dim() {
                let p = born_distribution(&u, &family, i, j).unwrap();
                for (l, prob) in p.iter().enumerate() {
                    let expected = if l == j { 1.0 } else { 0.0 };
                    assert!((prob - expected).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn rabi_oscillation_in_z_basis() {
        // H = X, input |0>, measure in the Z basis: P(1) = sin^2 t
        let family = MubFamily::build(1).unwrap();
        let z_index = family
            .groups()
            .iter()
            .position(|g| g.contains(&ps("Z")))
            .unwrap();
        let h = dense(1, &[("X", 1.0)]);
        for &t in &[0.1, 0.4, 1.3] {
            let u = evolve_unitary(&h, t).unwrap();
            let p = born_distribution(&u, &family, z_index, 0).unwrap();
            assert!((p[1] - t.sin().powi(2)).abs() < 1e-12);
            assert!((p[0] - t.cos().powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn sampling_is_trivial_for_zero_hamiltonian() {
        let family = MubFamily::build(2).unwrap();
        let oracle = EvolutionOracle::new(
            DenseHamiltonian::new(2, CMatrix::zeros(4, 4)).unwrap(),
        );
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        for round in 0..50 {
            let record = oracle
                .sample_round(&family, round % 5, round % 4, 0.3, &mut rng)
                .unwrap();
            assert_eq!(record.outcome, record.state);
        }
        assert_eq!(oracle.queries_used(), 50);
        assert!((oracle.total_evolution_time() - 15.0).abs() < 1e-12);
    }

    #[test]
    fn sampled_frequencies_match_born_distribution() {
        let family = MubFamily::build(2).unwrap();
        let s = PropertySet::k_local(2, 2).unwrap();
        let h = random_property_hamiltonian(&s, 4).unwrap().to_dense().unwrap();
        let t = 0.9;
        let u = evolve_unitary(&h, t).unwrap();
        let oracle = EvolutionOracle::new(h);
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        let (basis, state) = (3usize, 1usize);
        let exact = born_distribution(&u, &family, basis, state).unwrap();
        let shots = 100_000usize;
        let mut counts = vec![0usize; 4];
        for _ in 0..shots {
            let r = oracle.sample_round(&family, basis, state, t, &mut rng).unwrap();
            counts[r.outcome] += 1;
        }
        for l in 0..4 {
            let freq = counts[l] as f64 / shots as f64;
            let sigma = (exact[l] * (1.0 - exact[l]) / shots as f64).sqrt().max(1e-9);
            assert!(
                (freq - exact[l]).abs() < 4.0 * sigma + 1e-9,
                "outcome {l}: freq {freq} vs exact {}",
                exact[l]
            );
        }
        assert_eq!(oracle.queries_used(), shots as u64);
        assert!((oracle.total_evolution_time() - t * shots as f64).abs() < 1e-6);
    }

    #[test]
    fn negative_time_is_rejected_at_the_interface() {
        let family = MubFamily::build(1).unwrap();
        let oracle = EvolutionOracle::new(dense(1, &[("X", 0.5)]));
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let err = oracle.sample_round(&family, 0, 0, -0.1, &mut rng);
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn violation_rate_vanishes_for_zero_hamiltonian() {
        let family = MubFamily::build(2).unwrap();
        let h = DenseHamiltonian::new(2, CMatrix::zeros(4, 4)).unwrap();
        let s = PropertySet::k_local(2, 1).unwrap();
        let rate = exact_violation_rate(&h, 0.2, &s, &family).unwrap();
        assert_eq!(rate, 0.0);
    }

    #[test]
    fn violation_rate_vanishes_for_full_property() {
        let family = MubFamily::build(2).unwrap();
        let s = PropertySet::k_local(2, 2).unwrap();
        let h = random_property_hamiltonian(&s, 77).unwrap().to_dense().unwrap();
        let rate = exact_violation_rate(&h, 0.7, &s, &family).unwrap();
        assert_eq!(rate, 0.0);
    }

    #[test]
    fn null_instance_rate_is_fourth_order() {
        let family = MubFamily::build(3).unwrap();
        let s = PropertySet::k_local(3, 2).unwrap();
        let t = 0.1;
        let h = random_property_hamiltonian(&s, 5).unwrap().to_dense().unwrap();
        let rate = exact_violation_rate(&h, t, &s, &family).unwrap();
        assert!(rate <= t.powi(4) + 1e-12, "rate {rate} above t^4");
    }

    #[test]
    fn ancilla_extension_structure() {
        let h = dense(1, &[("X", 0.4), ("Z", 0.3)]);
        let bare = evolve_unitary(&h, 0.5).unwrap();
        let same = evolve_with_ancilla(&h, 0.5, 0).unwrap();
        assert_eq!(bare, same);

        let ext = evolve_with_ancilla(&h, 0.5, 1).unwrap();
        assert_eq!(ext.nrows(), 4);
        // block diagonal with two copies of the bare evolution
        for r in 0..2 {
            for c in 0..2 {
                assert!((ext[(r, c)] - bare[(r, c)]).norm() < 1e-14);
                assert!((ext[(2 + r, 2 + c)] - bare[(r, c)]).norm() < 1e-14);
                assert!(ext[(r, 2 + c)].norm() < 1e-14);
            }
        }
        // commutes with identity tensor any ancilla operator
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let a = CMatrix::from_fn(2, 2, |_, _| {
            C64::new(rand::Rng::gen::<f64>(&mut rng), rand::Rng::gen::<f64>(&mut rng))
        });
        let mut lifted = CMatrix::zeros(4, 4);
        for ha in 0..2 {
            for hb in 0..2 {
                for l in 0..2 {
                    lifted[(ha * 2 + l, hb * 2 + l)] = a[(ha, hb)];
                }
            }
        }
        let comm = &ext * &lifted - &lifted * &ext;
        assert!(comm.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-12);

        assert!(matches!(
            evolve_with_ancilla(&h, 0.5, 12),
            Err(Error::ResourceLimit(_))
        ));
    }
}
