//! Minimal GF(2^n) arithmetic used by the stabilizer-cover construction.
//!
//! Field elements are bit masks over the polynomial basis {1, x, ..., x^(n-1)}
//! modulo the lexicographically smallest irreducible polynomial of degree n,
//! found at construction time by trial division.

/// A binary extension field GF(2^n), n >= 1.
#[derive(Debug, Clone)]
pub(crate) struct BinaryField {
    n: usize,
    /// Reduction polynomial including the x^n term.
    poly: u64,
}

impl BinaryField {
    /// Panics if n is outside 1..=32; callers cap n well below that.
    pub(crate) fn new(n: usize) -> Self {
        assert!(n >= 1 && n <= 32, "field degree {n} out of range");
        let poly = smallest_irreducible(n);
        BinaryField { n, poly }
    }

    pub(crate) fn mul(&self, a: u64, b: u64) -> u64 {
        let prod = carryless_mul(a, b);
        reduce(prod, self.poly, self.n)
    }

    /// Field trace Tr(a) = a + a^2 + a^4 + ... + a^(2^(n-1)), always 0 or 1.
    pub(crate) fn trace(&self, a: u64) -> u64 {
        let mut acc = 0u64;
        let mut power = a;
        for _ in 0..self.n {
            acc ^= power;
            power = self.mul(power, power);
        }
        debug_assert!(acc <= 1, "trace left the prime field");
        acc & 1
    }
}

fn carryless_mul(a: u64, b: u64) -> u128 {
    let mut acc = 0u128;
    let mut a = a as u128;
    let mut b = b;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a;
        }
        a <<= 1;
        b >>= 1;
    }
    acc
}

fn reduce(mut value: u128, poly: u64, n: usize) -> u64 {
    let poly = poly as u128;
    let mut deg = 127 - value.leading_zeros() as i32;
    while value != 0 && deg >= n as i32 {
        value ^= poly << (deg as usize - n);
        deg = if value == 0 { -1 } else { 127 - value.leading_zeros() as i32 };
    }
    value as u64
}

fn poly_degree(p: u64) -> i32 {
    63 - p.leading_zeros() as i32
}

/// Remainder of p mod q over F2.
fn poly_rem(mut p: u64, q: u64) -> u64 {
    let dq = poly_degree(q);
    while p != 0 && poly_degree(p) >= dq {
        p ^= q << (poly_degree(p) - dq);
    }
    p
}

fn is_irreducible(p: u64, n: usize) -> bool {
    if n == 1 {
        return true;
    }
    // a polynomial of degree n >= 2 is reducible iff some polynomial of
    // degree 1..=n/2 divides it
    for deg in 1..=(n / 2) {
        for q in (1u64 << deg)..(1u64 << (deg + 1)) {
            if poly_rem(p, q) == 0 {
                return false;
            }
        }
    }
    true
}

fn smallest_irreducible(n: usize) -> u64 {
    let lo = 1u64 << n;
    let hi = 1u64 << (n + 1);
    for candidate in lo..hi {
        if is_irreducible(candidate, n) {
            return candidate;
        }
    }
    unreachable!("irreducible polynomials of every degree exist")
}
