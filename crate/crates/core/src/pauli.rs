//! Exact arithmetic on n-qubit Pauli strings in the symplectic bit-vector
//! representation.
//!
//! A Pauli string is a pair of n-bit vectors (x|z); qubit k corresponds to
//! bit k, and qubit 0 is the leftmost tensor factor of the textual literal
//! ("XIZ" has X on qubit 0). In dense realizations qubit k is bit k of the
//! basis-state index.
//!
//! Phases are fixed by the convention Y = iXZ. The canonical matrix of a
//! bare `PauliString` is the Hermitian tensor product of I, X, Y, Z; a
//! [`SignedPauli`] carries an extra power of i.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use crate::DEFAULT_DENSE_QUBIT_CAP;

/// Hard cap on qubit count so each bit vector fits one machine word.
pub const MAX_QUBITS: usize = 64;

/// Single-qubit Pauli, encoded as (x, z) bits: I=00, X=10, Z=01, Y=11.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (false, true) => Pauli::Z,
            (true, true) => Pauli::Y,
        }
    }

    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Z => (false, true),
            Pauli::Y => (true, true),
        }
    }

    fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// An unsigned n-qubit Pauli string, i.e. an element of the phase quotient
/// of the Pauli group.
///
/// The derived ordering is lexicographic in (x_bits, z_bits); coset
/// representatives and serialized fixtures rely on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    x_bits: u64,
    z_bits: u64,
    n: u16,
}

impl PauliString {
    pub fn identity(n: usize) -> Result<Self> {
        check_qubits(n)?;
        Ok(PauliString { x_bits: 0, z_bits: 0, n: n as u16 })
    }

    pub fn from_bits(n: usize, x_bits: u64, z_bits: u64) -> Result<Self> {
        check_qubits(n)?;
        let mask = bit_mask(n);
        if x_bits & !mask != 0 || z_bits & !mask != 0 {
            return Err(Error::InvalidArgument(format!(
                "bit vectors exceed {n} qubits"
            )));
        }
        Ok(PauliString { x_bits, z_bits, n: n as u16 })
    }

    /// Single-qubit Pauli `p` on `qubit`, identity elsewhere.
    pub fn single(n: usize, qubit: usize, p: Pauli) -> Result<Self> {
        check_qubits(n)?;
        if qubit >= n {
            return Err(Error::InvalidArgument(format!(
                "qubit {qubit} out of range for {n} qubits"
            )));
        }
        let (x, z) = p.bits();
        Ok(PauliString {
            x_bits: (x as u64) << qubit,
            z_bits: (z as u64) << qubit,
            n: n as u16,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.n as usize
    }

    pub fn x_bits(&self) -> u64 {
        self.x_bits
    }

    pub fn z_bits(&self) -> u64 {
        self.z_bits
    }

    pub fn is_identity(&self) -> bool {
        self.x_bits == 0 && self.z_bits == 0
    }

    /// Number of non-identity tensor factors.
    pub fn weight(&self) -> usize {
        (self.x_bits | self.z_bits).count_ones() as usize
    }

    pub fn factor(&self, qubit: usize) -> Pauli {
        let x = (self.x_bits >> qubit) & 1 == 1;
        let z = (self.z_bits >> qubit) & 1 == 1;
        Pauli::from_bits(x, z)
    }

    fn check_same_n(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                left: self.n as usize,
                right: other.n as usize,
            });
        }
        Ok(())
    }

    /// The symplectic form <x_p, z_q> + <z_p, x_q> mod 2: 0 when the
    /// corresponding matrices commute, 1 when they anticommute.
    pub fn commutation_bit(&self, other: &Self) -> Result<u8> {
        self.check_same_n(other)?;
        Ok(self.commutation_bit_unchecked(other))
    }

    pub(crate) fn commutation_bit_unchecked(&self, other: &Self) -> u8 {
        debug_assert_eq!(self.n, other.n);
        let cross = (self.x_bits & other.z_bits) ^ (self.z_bits & other.x_bits);
        (cross.count_ones() & 1) as u8
    }

    pub fn commutes_with(&self, other: &Self) -> Result<bool> {
        Ok(self.commutation_bit(other)? == 0)
    }

    /// Product in the phase quotient: plain XOR of both bit vectors.
    pub fn mul_mod_phase(&self, other: &Self) -> Result<PauliString> {
        self.check_same_n(other)?;
        Ok(PauliString {
            x_bits: self.x_bits ^ other.x_bits,
            z_bits: self.z_bits ^ other.z_bits,
            n: self.n,
        })
    }

    /// Power of i picked up when multiplying the canonical Hermitian
    /// matrices: P(a) P(b) = i^e P(a xor b).
    pub(crate) fn product_phase_exponent(&self, other: &Self) -> u8 {
        debug_assert_eq!(self.n, other.n);
        // per-qubit exponent table for sigma_a * sigma_b = i^t sigma_{a^b},
        // indexed by (x + 2z): I=0, X=1, Z=2, Y=3
        const TABLE: [[u8; 4]; 4] = [
            [0, 0, 0, 0], // I *
            [0, 0, 3, 1], // X * {I,X,Z,Y}
            [0, 1, 0, 3], // Z *
            [0, 3, 1, 0], // Y *
        ];
        let mut e = 0u32;
        let mut live = (self.x_bits | self.z_bits) & (other.x_bits | other.z_bits);
        while live != 0 {
            let k = live.trailing_zeros();
            let a = (((self.x_bits >> k) & 1) + 2 * ((self.z_bits >> k) & 1)) as usize;
            let b = (((other.x_bits >> k) & 1) + 2 * ((other.z_bits >> k) & 1)) as usize;
            e += TABLE[a][b] as u32;
            live &= live - 1;
        }
        (e % 4) as u8
    }

    /// Image of the computational basis state `index` under the canonical
    /// Hermitian matrix: returns (target index, power of i).
    pub fn image_of_basis_state(&self, index: usize) -> (usize, u8) {
        let y_count = (self.x_bits & self.z_bits).count_ones();
        let z_signs = (self.z_bits & index as u64).count_ones();
        let phase = (y_count + 2 * z_signs) % 4;
        (index ^ self.x_bits as usize, phase as u8)
    }

    /// Dense 2^n x 2^n matrix of the canonical Hermitian representative,
    /// honoring the default dense cap.
    pub fn to_matrix(&self) -> Result<CMatrix> {
        self.to_matrix_capped(DEFAULT_DENSE_QUBIT_CAP)
    }

    pub fn to_matrix_capped(&self, cap: usize) -> Result<CMatrix> {
        let n = self.num_qubits();
        if n > cap {
            return Err(Error::ResourceLimit(format!(
                "dense realization of {n} qubits exceeds cap {cap}"
            )));
        }
        let d = 1usize << n;
        let mut m = CMatrix::zeros(d, d);
        for col in 0..d {
            let (row, e) = self.image_of_basis_state(col);
            m[(row, col)] = phase_value(e);
        }
        Ok(m)
    }

    /// All 4^n Pauli strings on `n` qubits in lexicographic order.
    pub fn enumerate(n: usize) -> Result<impl Iterator<Item = PauliString>> {
        check_qubits(n)?;
        if n > 16 {
            return Err(Error::ResourceLimit(format!(
                "enumerating 4^{n} Pauli strings is not supported"
            )));
        }
        let d = 1u64 << n;
        let n = n as u16;
        Ok((0..d).flat_map(move |x| {
            (0..d).map(move |z| PauliString { x_bits: x, z_bits: z, n })
        }))
    }
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::InvalidArgument(format!(
            "qubit count {n} outside 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

fn bit_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

pub(crate) fn phase_value(exponent: u8) -> C64 {
    match exponent % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in 0..self.num_qubits() {
            write!(f, "{}", self.factor(k).letter())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let signed: SignedPauli = s.parse()?;
        if signed.phase_exponent() != 0 {
            return Err(Error::Parse(format!(
                "unsigned Pauli literal must not carry a phase prefix: {s:?}"
            )));
        }
        Ok(signed.pauli())
    }
}

/// A Pauli string together with a power of i: matrix = i^e * P(x,z).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignedPauli {
    pauli: PauliString,
    phase_exponent: u8,
}

impl SignedPauli {
    /// The canonical Hermitian representative (phase +1).
    pub fn hermitian(pauli: PauliString) -> Self {
        SignedPauli { pauli, phase_exponent: 0 }
    }

    pub fn new(pauli: PauliString, phase_exponent: u8) -> Self {
        SignedPauli { pauli, phase_exponent: phase_exponent % 4 }
    }

    pub fn pauli(&self) -> PauliString {
        self.pauli
    }

    pub fn phase_exponent(&self) -> u8 {
        self.phase_exponent
    }

    pub fn num_qubits(&self) -> usize {
        self.pauli.num_qubits()
    }

    /// Sign when the phase is real: +1 for i^0, -1 for i^2.
    pub fn real_sign(&self) -> Option<i8> {
        match self.phase_exponent {
            0 => Some(1),
            2 => Some(-1),
            _ => None,
        }
    }

    pub fn mul(&self, other: &Self) -> Result<SignedPauli> {
        let pauli = self.pauli.mul_mod_phase(&other.pauli)?;
        let e = self.phase_exponent as u32
            + other.phase_exponent as u32
            + self.pauli.product_phase_exponent(&other.pauli) as u32;
        Ok(SignedPauli { pauli, phase_exponent: (e % 4) as u8 })
    }

    pub fn adjoint(&self) -> SignedPauli {
        SignedPauli {
            pauli: self.pauli,
            phase_exponent: (4 - self.phase_exponent) % 4,
        }
    }

    /// Image of a basis state including the carried phase.
    pub fn image_of_basis_state(&self, index: usize) -> (usize, u8) {
        let (target, e) = self.pauli.image_of_basis_state(index);
        (target, (e + self.phase_exponent) % 4)
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        Ok(self.pauli.to_matrix()? * phase_value(self.phase_exponent))
    }

    pub fn to_matrix_capped(&self, cap: usize) -> Result<CMatrix> {
        Ok(self.pauli.to_matrix_capped(cap)? * phase_value(self.phase_exponent))
    }
}

impl fmt::Display for SignedPauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase_exponent {
            0 => "+",
            1 => "i",
            2 => "-",
            _ => "-i",
        };
        write!(f, "{}{}", prefix, self.pauli)
    }
}

impl FromStr for SignedPauli {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim();
        let (exponent, rest) = if let Some(r) = trimmed.strip_prefix("-i") {
            (3u8, r)
        } else if let Some(r) = trimmed.strip_prefix("+i") {
            (1, r)
        } else if let Some(r) = trimmed.strip_prefix('i') {
            (1, r)
        } else if let Some(r) = trimmed.strip_prefix('-') {
            (2, r)
        } else if let Some(r) = trimmed.strip_prefix('+') {
            (0, r)
        } else {
            (0, trimmed)
        };
        if rest.is_empty() {
            return Err(Error::Parse(format!("empty Pauli literal: {s:?}")));
        }
        let n = rest.chars().count();
        check_qubits(n).map_err(|_| {
            Error::Parse(format!("Pauli literal length {n} outside 1..={MAX_QUBITS}"))
        })?;
        let mut x_bits = 0u64;
        let mut z_bits = 0u64;
        for (k, c) in rest.chars().enumerate() {
            let (x, z) = match c.to_ascii_uppercase() {
                'I' => (false, false),
                'X' => (true, false),
                'Y' => (true, true),
                'Z' => (false, true),
                other => {
                    return Err(Error::Parse(format!(
                        "invalid Pauli letter {other:?} in {s:?}"
                    )))
                }
            };
            x_bits |= (x as u64) << k;
            z_bits |= (z as u64) << k;
        }
        Ok(SignedPauli {
            pauli: PauliString { x_bits, z_bits, n: n as u16 },
            phase_exponent: exponent,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn weight_counts_non_identity_factors() {
        assert_eq!(ps("III").weight(), 0);
        assert_eq!(ps("XIZ").weight(), 2);
        assert_eq!(ps("YY").weight(), 2);
        assert!(ps("III").is_identity());
    }

    #[test]
    fn commutation_bit_basics() {
        assert_eq!(ps("X").commutation_bit(&ps("Z")).unwrap(), 1);
        assert_eq!(ps("XX").commutation_bit(&ps("ZZ")).unwrap(), 0);
        for q in ["XI", "YZ", "II"] {
            assert_eq!(ps("II").commutation_bit(&ps(q)).unwrap(), 0);
        }
        assert!(matches!(
            ps("X").commutation_bit(&ps("XX")),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn product_follows_y_equals_ixz() {
        let x = SignedPauli::hermitian(ps("X"));
        let z = SignedPauli::hermitian(ps("Z"));
        let xz = x.mul(&z).unwrap();
        assert_eq!(xz.pauli(), ps("Y"));
        assert_eq!(xz.phase_exponent(), 3); // XZ = -iY

        // disjoint supports pick up no phase
        let a = SignedPauli::hermitian(ps("XI"));
        let b = SignedPauli::hermitian(ps("IZ"));
        let prod = a.mul(&b).unwrap();
        assert_eq!(prod.pauli(), ps("XZ"));
        assert_eq!(prod.phase_exponent(), 0);
    }

    #[test]
    fn hermitian_paulis_are_involutions() {
        for s in ["X", "Y", "Z", "XY", "YZX", "XXYZ"] {
            let p = SignedPauli::hermitian(ps(s));
            let sq = p.mul(&p).unwrap();
            assert!(sq.pauli().is_identity());
            assert_eq!(sq.phase_exponent(), 0);
        }
    }

    #[test]
    fn matrix_of_z_and_xx() {
        let z = ps("Z").to_matrix().unwrap();
        assert_eq!(z[(0, 0)], C64::new(1.0, 0.0));
        assert_eq!(z[(1, 1)], C64::new(-1.0, 0.0));
        assert_eq!(z[(0, 1)], C64::new(0.0, 0.0));

        let xx = ps("XX").to_matrix().unwrap();
        // |00> -> |11>
        assert_eq!(xx[(3, 0)], C64::new(1.0, 0.0));
    }

    #[test]
    fn matrix_product_matches_algebraic_product() {
        let mut rng_state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            rng_state ^= rng_state << 13;
            rng_state ^= rng_state >> 7;
            rng_state ^= rng_state << 17;
            rng_state
        };
        for n in 1..=3usize {
            for _ in 0..40 {
                let mask = bit_mask(n);
                let a = SignedPauli::new(
                    PauliString::from_bits(n, next() & mask, next() & mask).unwrap(),
                    (next() % 4) as u8,
                );
                let b = SignedPauli::new(
                    PauliString::from_bits(n, next() & mask, next() & mask).unwrap(),
                    (next() % 4) as u8,
                );
                let dense = a.to_matrix().unwrap() * b.to_matrix().unwrap();
                let alg = a.mul(&b).unwrap().to_matrix().unwrap();
                let err = (dense - alg).iter().map(|z| z.norm()).fold(0.0, f64::max);
                assert!(err < 1e-12);
            }
        }
    }

    #[test]
    fn commutation_bit_matches_dense_commutator() {
        for n in 1..=2usize {
            for a in PauliString::enumerate(n).unwrap() {
                for b in PauliString::enumerate(n).unwrap() {
                    let ma = a.to_matrix().unwrap();
                    let mb = b.to_matrix().unwrap();
                    let comm = (&ma * &mb) - (&mb * &ma);
                    let commutes = comm.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-12;
                    assert_eq!(commutes, a.commutation_bit(&b).unwrap() == 0);
                }
            }
        }
    }

    #[test]
    fn parse_display_round_trip() {
        for s in ["XIZ", "-XY", "iZZ", "-iY", "+XX"] {
            let p: SignedPauli = s.parse().unwrap();
            let back: SignedPauli = p.to_string().parse().unwrap();
            assert_eq!(p, back);
        }
        assert!("XQ".parse::<SignedPauli>().is_err());
        assert!("".parse::<SignedPauli>().is_err());
    }

    proptest! {
        #[test]
        fn commutation_is_symmetric_and_alternating(
            n in 1usize..=6,
            xa in any::<u64>(), za in any::<u64>(),
            xb in any::<u64>(), zb in any::<u64>(),
        ) {
            let mask = bit_mask(n);
            let a = PauliString::from_bits(n, xa & mask, za & mask).unwrap();
            let b = PauliString::from_bits(n, xb & mask, zb & mask).unwrap();
            prop_assert_eq!(
                a.commutation_bit(&b).unwrap(),
                b.commutation_bit(&a).unwrap()
            );
            prop_assert_eq!(a.commutation_bit(&a).unwrap(), 0);
        }

        #[test]
        fn commutation_is_bilinear(
            n in 1usize..=6,
            xr in any::<u64>(), zr in any::<u64>(),
            xs in any::<u64>(), zs in any::<u64>(),
            xp in any::<u64>(), zp in any::<u64>(),
        ) {
            let mask = bit_mask(n);
            let r = PauliString::from_bits(n, xr & mask, zr & mask).unwrap();
            let s = PauliString::from_bits(n, xs & mask, zs & mask).unwrap();
            let p = PauliString::from_bits(n, xp & mask, zp & mask).unwrap();
            let rs = r.mul_mod_phase(&s).unwrap();
            prop_assert_eq!(
                rs.commutation_bit(&p).unwrap(),
                r.commutation_bit(&p).unwrap() ^ s.commutation_bit(&p).unwrap()
            );
        }
    }

    #[test]
    fn bilinearity_exhaustive_small() {
        for n in 1..=2usize {
            for r in PauliString::enumerate(n).unwrap() {
                for s in PauliString::enumerate(n).unwrap() {
                    for p in PauliString::enumerate(n).unwrap() {
                        let rs = r.mul_mod_phase(&s).unwrap();
                        assert_eq!(
                            rs.commutation_bit(&p).unwrap(),
                            r.commutation_bit(&p).unwrap()
                                ^ s.commutation_bit(&p).unwrap()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn dense_cap_enforced() {
        let p = PauliString::identity(12).unwrap();
        assert!(matches!(p.to_matrix(), Err(Error::ResourceLimit(_))));
        assert!(p.to_matrix_capped(12).is_ok());
    }
}
