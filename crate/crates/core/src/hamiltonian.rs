//! Hamiltonians in the Pauli basis, distances, property sets, and the
//! random gadget ensembles from the hardness constructions.
//!
//! Coefficient storage is sparse (a map keyed by Pauli string); dense 2^n
//! realizations are built only below the dense qubit cap. The identity
//! coefficient is always excluded, so every represented Hamiltonian is
//! traceless.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64};
use crate::oracles::haar_unitary;
use crate::pauli::PauliString;
use crate::DEFAULT_DENSE_QUBIT_CAP;

/// Sparse real Pauli expansion of a traceless Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliHamiltonian {
    n: usize,
    coeffs: BTreeMap<PauliString, f64>,
}

impl PauliHamiltonian {
    pub fn new(n: usize) -> Self {
        PauliHamiltonian { n, coeffs: BTreeMap::new() }
    }

    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PauliString, f64)>,
    {
        let mut h = PauliHamiltonian::new(n);
        for (p, a) in terms {
            h.add_term(p, a)?;
        }
        Ok(h)
    }

    /// Adds `coefficient * P`. The identity is rejected: global phases are
    /// physically irrelevant and the representation keeps Tr H = 0.
    pub fn add_term(&mut self, p: PauliString, coefficient: f64) -> Result<()> {
        if p.num_qubits() != self.n {
            return Err(Error::DimensionMismatch { left: self.n, right: p.num_qubits() });
        }
        if p.is_identity() {
            return Err(Error::Validation(
                "identity coefficient is excluded from PauliHamiltonian".into(),
            ));
        }
        if !coefficient.is_finite() {
            return Err(Error::Validation(format!(
                "non-finite coefficient for {p}"
            )));
        }
        let entry = self.coeffs.entry(p).or_insert(0.0);
        *entry += coefficient;
        if *entry == 0.0 {
            self.coeffs.remove(&p);
        }
        Ok(())
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coefficient(&self, p: &PauliString) -> f64 {
        self.coeffs.get(p).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, f64)> {
        self.coeffs.iter().map(|(p, &a)| (p, a))
    }

    /// sum_P alpha_P^2, which by Parseval equals (1/d)||H||_2^2.
    pub fn coefficient_norm_sq(&self) -> f64 {
        self.coeffs.values().map(|a| a * a).sum()
    }

    pub fn scale(&mut self, factor: f64) {
        for a in self.coeffs.values_mut() {
            *a *= factor;
        }
    }

    pub fn to_dense(&self) -> Result<DenseHamiltonian> {
        self.to_dense_capped(DEFAULT_DENSE_QUBIT_CAP)
    }

    pub fn to_dense_capped(&self, cap: usize) -> Result<DenseHamiltonian> {
        if self.n > cap {
            return Err(Error::ResourceLimit(format!(
                "dense realization of {} qubits exceeds cap {cap}",
                self.n
            )));
        }
        let d = 1usize << self.n;
        let mut m = CMatrix::zeros(d, d);
        for (p, a) in self.terms() {
            let a = C64::new(a, 0.0);
            for col in 0..d {
                let (row, e) = p.image_of_basis_state(col);
                m[(row, col)] += a * crate::pauli::phase_value(e);
            }
        }
        DenseHamiltonian::new(self.n, m)
    }

    /// One line per term, `PAULI coefficient`, preceded by a qubit-count
    /// header. Coefficients print in shortest round-trip form, so parsing
    /// the emitted text reproduces the map bit-exactly.
    pub fn to_fixture(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "qubits {}", self.n);
        for (p, a) in self.terms() {
            let _ = writeln!(out, "{p} {a}");
        }
        out
    }

    pub fn from_fixture(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Parse("empty fixture".into()))?;
        let n: usize = header
            .strip_prefix("qubits ")
            .ok_or_else(|| Error::Parse(format!("expected 'qubits N', got {header:?}")))?
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("bad qubit count: {e}")))?;
        let mut h = PauliHamiltonian::new(n);
        for line in lines {
            let mut parts = line.split_whitespace();
            let (Some(p), Some(a), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Parse(format!("expected 'PAULI coeff', got {line:?}")));
            };
            let p: PauliString = p.parse()?;
            let a: f64 = a
                .parse()
                .map_err(|e| Error::Parse(format!("bad coefficient {a:?}: {e}")))?;
            h.add_term(p, a)?;
        }
        Ok(h)
    }
}

/// Dense Hermitian realization.
#[derive(Debug, Clone)]
pub struct DenseHamiltonian {
    n: usize,
    matrix: CMatrix,
}

impl DenseHamiltonian {
    /// Validates hermiticity to 1e-12.
    pub fn new(n: usize, matrix: CMatrix) -> Result<Self> {
        let d = 1usize << n;
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::Validation(format!(
                "matrix is {}x{}, expected {d}x{d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let defect = linalg::hermitian_defect(&matrix);
        if defect > 1e-12 {
            return Err(Error::Validation(format!(
                "matrix is not Hermitian (defect {defect:.3e})"
            )));
        }
        Ok(DenseHamiltonian { n, matrix })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn operator_norm(&self) -> f64 {
        linalg::operator_norm_hermitian(&self.matrix)
    }
}

/// Pauli coefficients alpha_P = Tr[M P] / 2^n of a Hermitian traceless
/// matrix; the round trip through [`PauliHamiltonian::to_dense`] reproduces
/// the input to 1e-10.
pub fn pauli_decompose(m: &DenseHamiltonian) -> Result<PauliHamiltonian> {
    let n = m.num_qubits();
    let d = m.dim() as f64;
    if m.trace().norm() / d > 1e-10 {
        return Err(Error::Validation(
            "matrix has a nonzero trace; identity components are not representable".into(),
        ));
    }
    let mut h = PauliHamiltonian::new(n);
    for p in PauliString::enumerate(n)? {
        if p.is_identity() {
            continue;
        }
        // Tr(M P) = sum_c M[c, c ^ x] * i^{e(c)}
        let mut acc = C64::new(0.0, 0.0);
        for c in 0..m.dim() {
            let (row, e) = p.image_of_basis_state(c);
            acc += m.matrix()[(c, row)] * crate::pauli::phase_value(e);
        }
        let alpha = acc / d;
        if alpha.im.abs() > 1e-10 {
            return Err(Error::Validation(format!(
                "coefficient of {p} has imaginary part {:.3e}",
                alpha.im
            )));
        }
        if alpha.re.abs() > 1e-14 {
            h.add_term(p, alpha.re)?;
        }
    }
    Ok(h)
}

/// A subset S of non-identity Pauli strings defining the property Pi_S.
/// Relations always adjoin the identity, so it is never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertySet {
    n: usize,
    paulis: BTreeSet<PauliString>,
}

impl PropertySet {
    pub fn new(n: usize) -> Self {
        PropertySet { n, paulis: BTreeSet::new() }
    }

    pub fn from_paulis<I>(n: usize, paulis: I) -> Result<Self>
    where
        I: IntoIterator<Item = PauliString>,
    {
        let mut s = PropertySet::new(n);
        for p in paulis {
            s.insert(p)?;
        }
        Ok(s)
    }

    /// Inserts a Pauli; identities are silently skipped.
    pub fn insert(&mut self, p: PauliString) -> Result<()> {
        if p.num_qubits() != self.n {
            return Err(Error::DimensionMismatch { left: self.n, right: p.num_qubits() });
        }
        if !p.is_identity() {
            self.paulis.insert(p);
        }
        Ok(())
    }

    /// All weight-(1..=k) Pauli strings: the k-locality property.
    pub fn k_local(n: usize, k: usize) -> Result<Self> {
        if k > n {
            return Err(Error::InvalidArgument(format!(
                "locality {k} exceeds qubit count {n}"
            )));
        }
        let mut s = PropertySet::new(n);
        for p in PauliString::enumerate(n)? {
            let w = p.weight();
            if w >= 1 && w <= k {
                s.paulis.insert(p);
            }
        }
        Ok(s)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.paulis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paulis.is_empty()
    }

    /// |S u {I}|, the size entering every theorem hypothesis.
    pub fn size_with_identity(&self) -> usize {
        self.paulis.len() + 1
    }

    pub fn contains(&self, p: &PauliString) -> bool {
        self.paulis.contains(p)
    }

    pub fn iter(&self) -> impl Iterator<Item = &PauliString> {
        self.paulis.iter()
    }

    /// The same property on n + n_aux qubits, each Pauli padded with
    /// identities on the ancilla register.
    pub fn lift_with_ancillas(&self, n_aux: usize) -> Result<PropertySet> {
        let n_ext = self.n + n_aux;
        let mut lifted = PropertySet::new(n_ext);
        for p in &self.paulis {
            lifted.insert(PauliString::from_bits(n_ext, p.x_bits(), p.z_bits())?)?;
        }
        Ok(lifted)
    }

    /// One Pauli literal per line; `#` comments and blank lines skipped.
    pub fn from_literals(n: usize, text: &str) -> Result<Self> {
        let mut s = PropertySet::new(n);
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let p: PauliString = line.parse()?;
            s.insert(p)?;
        }
        Ok(s)
    }

    pub fn to_literals(&self) -> String {
        let mut out = String::new();
        for p in &self.paulis {
            let _ = writeln!(out, "{p}");
        }
        out
    }
}

/// sqrt(sum_{P not in S} alpha_P^2): the normalized Frobenius distance from
/// H to the closest element of Pi_S (the minimizer keeps exactly the
/// S-coefficients).
pub fn distance_to_property(h: &PauliHamiltonian, s: &PropertySet) -> Result<f64> {
    if h.num_qubits() != s.num_qubits() {
        return Err(Error::DimensionMismatch {
            left: h.num_qubits(),
            right: s.num_qubits(),
        });
    }
    let sum: f64 = h
        .terms()
        .filter(|(p, _)| !s.contains(p))
        .map(|(_, a)| a * a)
        .sum();
    Ok(sum.sqrt())
}

/// (1/sqrt(d)) ||H - K||_2, evaluated on coefficients via Parseval.
pub fn normalized_frobenius_distance(
    h: &PauliHamiltonian,
    k: &PauliHamiltonian,
) -> Result<f64> {
    if h.num_qubits() != k.num_qubits() {
        return Err(Error::DimensionMismatch {
            left: h.num_qubits(),
            right: k.num_qubits(),
        });
    }
    let mut keys: BTreeSet<PauliString> = h.coeffs.keys().copied().collect();
    keys.extend(k.coeffs.keys().copied());
    let sum: f64 = keys
        .iter()
        .map(|p| {
            let diff = h.coefficient(p) - k.coefficient(p);
            diff * diff
        })
        .sum();
    Ok(sum.sqrt())
}

/// ||H - K||_inf via the extremal eigenvalue of the dense difference.
pub fn operator_distance(h: &PauliHamiltonian, k: &PauliHamiltonian) -> Result<f64> {
    if h.num_qubits() != k.num_qubits() {
        return Err(Error::DimensionMismatch {
            left: h.num_qubits(),
            right: k.num_qubits(),
        });
    }
    let diff = h.to_dense()?.matrix() - k.to_dense()?.matrix();
    Ok(linalg::operator_norm_hermitian(&diff))
}

/// Random Hamiltonian supported on S: coefficients i.i.d. uniform on
/// [-1, 1], rescaled (if needed) so the operator norm is at most 1. Serves
/// as the null-hypothesis instance generator under the promise Tr H = 0,
/// ||H||_inf <= 1.
pub fn random_property_hamiltonian(s: &PropertySet, seed: u64) -> Result<PauliHamiltonian> {
    if s.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot draw an instance from an empty property".into(),
        ));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut h = PauliHamiltonian::new(s.num_qubits());
    for p in s.iter() {
        h.add_term(*p, rng.gen_range(-1.0..=1.0))?;
    }
    let norm = h.to_dense()?.operator_norm();
    if norm > 1.0 {
        h.scale(1.0 / norm);
    }
    Ok(h)
}

/// The spiked random Hamiltonian eta (|v><v| - I/d) with |v> a Haar-random
/// state (a normalized complex Gaussian vector has exactly that law).
pub fn spiked_gadget(n: usize, eta: f64, seed: u64) -> Result<DenseHamiltonian> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "spike strength eta = {eta} outside (0, 1]"
        )));
    }
    if n > DEFAULT_DENSE_QUBIT_CAP {
        return Err(Error::ResourceLimit(format!(
            "spiked gadget on {n} qubits exceeds cap {DEFAULT_DENSE_QUBIT_CAP}"
        )));
    }
    let d = 1usize << n;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut v = CVector::from_fn(d, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    v /= C64::new(v.norm(), 0.0);
    let mut m = &v * v.adjoint();
    let shift = C64::new(1.0 / d as f64, 0.0);
    for i in 0..d {
        m[(i, i)] -= shift;
    }
    m *= C64::new(eta, 0.0);
    let m = (&m + m.adjoint()).scale(0.5);
    DenseHamiltonian::new(n, m)
}

/// The learning-hardness ensemble eps U O U^dag with O = diag(+1..+1,
/// -1..-1) and U Haar-random; squares to eps^2 I and is traceless.
pub fn learning_gadget(n: usize, eps: f64, seed: u64) -> Result<DenseHamiltonian> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "gadget strength eps = {eps} outside (0, 1]"
        )));
    }
    if n > DEFAULT_DENSE_QUBIT_CAP {
        return Err(Error::ResourceLimit(format!(
            "learning gadget on {n} qubits exceeds cap {DEFAULT_DENSE_QUBIT_CAP}"
        )));
    }
    let d = 1usize << n;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let u = haar_unitary(d, &mut rng);
    let mut o = CMatrix::zeros(d, d);
    for i in 0..d {
        let sign = if i < d / 2 { 1.0 } else { -1.0 };
        o[(i, i)] = C64::new(sign * eps, 0.0);
    }
    let m = &u * o * u.adjoint();
    let m = (&m + m.adjoint()).scale(0.5);
    DenseHamiltonian::new(n, m)
}
