//! The d+1 mutually unbiased stabilizer bases covering the n-qubit Pauli
//! group, with deterministic sign fixing and coset labeling.
//!
//! The cover comes from the GF(2^n) symplectic spread: for each field
//! element a, the isotropic subspace {(v, M_a v)} with (M_a)_{jk} =
//! Tr(a x^j x^k), plus the pure-Z subspace {(0, w)}. The Gram matrices M_a
//! are symmetric (so each class commutes), additive in a, and invertible
//! for a != 0 (so classes intersect only in the identity). Correctness is
//! enforced by the invariant suite rather than trusted from the
//! construction; an exhaustive-search builder for n <= 2 provides an
//! independent cross-check.
//!
//! Basis state j of group i realizes the projector
//! (1/d) sum_{p in G_i} (-1)^(p o r_j) S(p), where S(p) are the signed
//! members and r_j is the lexicographically smallest element of the coset
//! with syndrome j.

use std::fmt::Write as _;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::gf2::BinaryField;
use crate::linalg::{CMatrix, CVector, C64};
use crate::pauli::{phase_value, PauliString, SignedPauli};
use crate::DEFAULT_DENSE_QUBIT_CAP;

/// Basis matrices are cached per group only while a whole family stays
/// small; beyond this dimension states are synthesized on demand.
const CACHE_MAX_DIM: usize = 128;

/// A maximal Abelian subgroup of the Pauli group with signs fixed so that
/// the signed members form a stabilizer group (all phases +-1, closed
/// under multiplication, common +1 eigenvector exists).
#[derive(Debug, Clone)]
pub struct StabilizerGroup {
    index: usize,
    n: usize,
    /// n independent commuting generators, canonical Hermitian sign (+1).
    generators: Vec<SignedPauli>,
    /// All 2^n members; entry `mask` is the product of the generators in
    /// `mask`, so phases are +-1 and members[0] = +I.
    members: Vec<SignedPauli>,
}

impl StabilizerGroup {
    fn from_generators(index: usize, generators: Vec<PauliString>) -> Result<Self> {
        let n = generators
            .first()
            .ok_or_else(|| Error::InvalidGroup("no generators".into()))?
            .num_qubits();
        if generators.len() != n {
            return Err(Error::InvalidGroup(format!(
                "expected {n} generators, got {}",
                generators.len()
            )));
        }
        for (a, ga) in generators.iter().enumerate() {
            for gb in generators.iter().skip(a + 1) {
                if ga.commutation_bit(gb)? != 0 {
                    return Err(Error::InvalidGroup(format!(
                        "generators {ga} and {gb} anticommute"
                    )));
                }
            }
        }
        if !f2_independent(&generators) {
            return Err(Error::InvalidGroup(
                "generators are dependent over F2".into(),
            ));
        }
        let signed: Vec<SignedPauli> =
            generators.into_iter().map(SignedPauli::hermitian).collect();
        let d = 1usize << n;
        let mut members = Vec::with_capacity(d);
        members.push(SignedPauli::hermitian(PauliString::identity(n)?));
        for mask in 1..d {
            let low = mask & (mask - 1);
            let gen = mask.trailing_zeros() as usize;
            let member = members[low].mul(&signed[gen])?;
            members.push(member);
        }
        for m in &members {
            if m.real_sign().is_none() {
                return Err(Error::InvalidGroup(format!(
                    "member {m} carries an imaginary phase"
                )));
            }
        }
        Ok(StabilizerGroup { index, n, generators: signed, members })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> &[SignedPauli] {
        &self.generators
    }

    /// All 2^n signed members in generator-mask order.
    pub fn members(&self) -> &[SignedPauli] {
        &self.members
    }

    /// True iff `q` lies in the group (ignoring signs). Valid because a
    /// maximal Abelian subgroup is its own centralizer, so membership
    /// reduces to commuting with all n generators.
    pub fn contains(&self, q: &PauliString) -> bool {
        debug_assert_eq!(q.num_qubits(), self.n);
        self.generators
            .iter()
            .all(|g| q.commutation_bit_unchecked(&g.pauli()) == 0)
    }

    /// Syndrome of `q`: bit k is the commutation bit with generator k.
    /// Constant on cosets of the group; zero exactly on members.
    pub fn syndrome(&self, q: &PauliString) -> u64 {
        let mut s = 0u64;
        for (k, g) in self.generators.iter().enumerate() {
            s |= (q.commutation_bit_unchecked(&g.pauli()) as u64) << k;
        }
        s
    }

    /// Sign zeta of an unsigned member, if present.
    pub fn member_sign(&self, q: &PauliString) -> Option<i8> {
        if !self.contains(q) {
            return None;
        }
        self.members
            .iter()
            .find(|m| m.pauli() == *q)
            .and_then(|m| m.real_sign())
    }
}

fn f2_independent(paulis: &[PauliString]) -> bool {
    // Gaussian elimination on the 2n-bit symplectic vectors.
    let mut rows: Vec<u128> = paulis
        .iter()
        .map(|p| (p.x_bits() as u128) << 64 | p.z_bits() as u128)
        .collect();
    let mut rank = 0;
    for bit in (0..128).rev() {
        let Some(pivot) = (rank..rows.len()).find(|&r| rows[r] >> bit & 1 == 1) else {
            continue;
        };
        rows.swap(rank, pivot);
        for r in 0..rows.len() {
            if r != rank && rows[r] >> bit & 1 == 1 {
                rows[r] ^= rows[rank];
            }
        }
        rank += 1;
    }
    rank == paulis.len()
}

/// Fixes signs for a maximal Abelian subgroup given as its full unsigned
/// member set, by deterministic generator extraction and product tracking.
pub fn fix_signs(members: &[PauliString]) -> Result<StabilizerGroup> {
    let n = members
        .first()
        .ok_or_else(|| Error::InvalidGroup("empty member set".into()))?
        .num_qubits();
    let d = 1usize << n;
    if members.len() != d {
        return Err(Error::InvalidGroup(format!(
            "maximal Abelian subgroup on {n} qubits has {d} members, got {}",
            members.len()
        )));
    }
    let mut sorted: Vec<PauliString> = members.to_vec();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != d {
        return Err(Error::InvalidGroup("duplicate members".into()));
    }
    for (a, pa) in sorted.iter().enumerate() {
        for pb in sorted.iter().skip(a + 1) {
            if pa.commutation_bit(pb)? != 0 {
                return Err(Error::InvalidGroup(format!(
                    "members {pa} and {pb} anticommute"
                )));
            }
        }
    }
    // greedy independent set in lexicographic order
    let mut generators: Vec<PauliString> = Vec::with_capacity(n);
    for p in sorted.iter().filter(|p| !p.is_identity()) {
        let mut candidate = generators.clone();
        candidate.push(*p);
        if f2_independent(&candidate) {
            generators = candidate;
            if generators.len() == n {
                break;
            }
        }
    }
    if generators.len() != n {
        return Err(Error::InvalidGroup(
            "member set does not span a rank-n subgroup".into(),
        ));
    }
    let group = StabilizerGroup::from_generators(0, generators)?;
    // the generated set must reproduce the input set
    let mut generated: Vec<PauliString> = group.members.iter().map(|m| m.pauli()).collect();
    generated.sort();
    if generated != sorted {
        return Err(Error::InvalidGroup(
            "member set is not closed under multiplication".into(),
        ));
    }
    Ok(group)
}

/// The d+1 mutually unbiased stabilizer bases on n qubits.
pub struct MubFamily {
    n: usize,
    groups: Vec<StabilizerGroup>,
    /// coset_reps[i][j]: lexicographically smallest element of the coset of
    /// G_i with syndrome j; entry 0 is the identity.
    coset_reps: Vec<Vec<PauliString>>,
    basis_cache: Vec<OnceLock<Arc<CMatrix>>>,
}

impl std::fmt::Debug for MubFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MubFamily")
            .field("n", &self.n)
            .field("bases", &self.groups.len())
            .finish()
    }
}

impl MubFamily {
    pub fn build(n: usize) -> Result<Self> {
        Self::build_with_cap(n, DEFAULT_DENSE_QUBIT_CAP)
    }

    pub fn build_with_cap(n: usize, cap: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("need at least one qubit".into()));
        }
        if n > cap {
            return Err(Error::ResourceLimit(format!(
                "MUB family on {n} qubits exceeds cap {cap}"
            )));
        }
        let field = BinaryField::new(n);
        let d = 1usize << n;
        let mut groups = Vec::with_capacity(d + 1);
        for a in 0..d as u64 {
            let mut generators = Vec::with_capacity(n);
            for k in 0..n {
                let col_elem = field.mul(a, 1u64 << k);
                let mut z = 0u64;
                for j in 0..n {
                    z |= field.trace(field.mul(col_elem, 1u64 << j)) << j;
                }
                generators.push(PauliString::from_bits(n, 1u64 << k, z)?);
            }
            groups.push(StabilizerGroup::from_generators(a as usize, generators)?);
        }
        let z_generators: Result<Vec<PauliString>> =
            (0..n).map(|k| PauliString::from_bits(n, 0, 1u64 << k)).collect();
        groups.push(StabilizerGroup::from_generators(d, z_generators?)?);
        Self::from_groups(n, groups)
    }

    /// Exhaustive-search construction for n <= 2, used to cross-check the
    /// field construction: partitions the non-identity Paulis into maximal
    /// commuting classes by backtracking over candidate subgroups.
    pub fn build_exhaustive(n: usize) -> Result<Self> {
        if n > 2 {
            return Err(Error::ResourceLimit(
                "exhaustive cover search is limited to n <= 2".into(),
            ));
        }
        let d = 1usize << n;
        let all: Vec<PauliString> = PauliString::enumerate(n)?.collect();
        // all maximal Abelian subgroups, as sorted member sets
        let mut subgroups: Vec<Vec<PauliString>> = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        collect_subgroups(n, &all, &mut Vec::new(), &mut subgroups, &mut seen);
        let mut cover: Vec<usize> = Vec::new();
        if !search_cover(&subgroups, &mut cover, &mut vec![false; 4usize.pow(n as u32)], n) {
            return Err(Error::Internal("no stabilizer cover found".into()));
        }
        let mut groups = Vec::with_capacity(d + 1);
        for (i, &si) in cover.iter().enumerate() {
            let mut g = fix_signs(&subgroups[si])?;
            g.index = i;
            groups.push(g);
        }
        Self::from_groups(n, groups)
    }

    fn from_groups(n: usize, groups: Vec<StabilizerGroup>) -> Result<Self> {
        let d = 1usize << n;
        if groups.len() != d + 1 {
            return Err(Error::InvalidGroup(format!(
                "cover needs {} groups, got {}",
                d + 1,
                groups.len()
            )));
        }
        let mut coset_reps = Vec::with_capacity(groups.len());
        for group in &groups {
            coset_reps.push(coset_representatives(group)?);
        }
        let basis_cache = (0..groups.len()).map(|_| OnceLock::new()).collect();
        let family = MubFamily { n, groups, coset_reps, basis_cache };
        family.check_cover()?;
        Ok(family)
    }

    /// Pairwise trivial intersections plus exact counting force the groups
    /// to cover every non-identity Pauli exactly once.
    fn check_cover(&self) -> Result<()> {
        let d = self.dim();
        for (a, ga) in self.groups.iter().enumerate() {
            for gb in self.groups.iter().skip(a + 1) {
                for m in ga.members() {
                    if !m.pauli().is_identity() && gb.contains(&m.pauli()) {
                        return Err(Error::InvalidGroup(format!(
                            "groups {} and {} share {}",
                            ga.index,
                            gb.index,
                            m.pauli()
                        )));
                    }
                }
            }
        }
        let covered = (d + 1) * (d - 1);
        if covered != d * d - 1 {
            return Err(Error::Internal("cover count mismatch".into()));
        }
        Ok(())
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    /// Hilbert space dimension d = 2^n.
    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    /// Number of bases, d + 1.
    pub fn num_bases(&self) -> usize {
        self.groups.len()
    }

    pub fn groups(&self) -> &[StabilizerGroup] {
        &self.groups
    }

    pub fn group(&self, i: usize) -> &StabilizerGroup {
        &self.groups[i]
    }

    /// The d coset representatives of basis i; entry j is the
    /// lexicographically smallest Pauli with syndrome j, entry 0 = identity.
    pub fn coset_reps(&self, i: usize) -> &[PauliString] {
        &self.coset_reps[i]
    }

    pub fn group_membership(&self, i: usize, q: &PauliString) -> bool {
        self.groups[i].contains(q)
    }

    /// Unit vector |phi_{i,j}>, synthesized from the projector formula by
    /// extracting a nonzero column; global phase fixed so the first
    /// nonvanishing entry is real positive.
    pub fn state_vector(&self, i: usize, j: usize) -> Result<CVector> {
        let d = self.dim();
        if i >= self.num_bases() || j >= d {
            return Err(Error::InvalidArgument(format!(
                "basis/state index ({i},{j}) out of range"
            )));
        }
        let group = &self.groups[i];
        let rep = &self.coset_reps[i][j];
        let threshold = 0.5 / (d as f64).sqrt();
        let mut column = CVector::zeros(d);
        for c in 0..d {
            column.fill(C64::new(0.0, 0.0));
            for member in group.members() {
                let p = member.pauli();
                let sign = p.commutation_bit_unchecked(rep);
                let (target, mut e) = member.image_of_basis_state(c);
                e = (e + 2 * sign) % 4;
                column[target] += phase_value(e);
            }
            column /= C64::new(d as f64, 0.0);
            let norm = column.norm();
            if norm >= threshold {
                column /= C64::new(norm, 0.0);
                let k = column
                    .iter()
                    .position(|z| z.norm() > 1e-8)
                    .ok_or_else(|| Error::Internal("zero state vector".into()))?;
                let phase = column[k] / C64::new(column[k].norm(), 0.0);
                column /= phase;
                return Ok(column);
            }
        }
        Err(Error::Internal(format!(
            "projector for basis {i}, state {j} is not rank one"
        )))
    }

    /// d x d matrix whose column j is |phi_{i,j}>. Cached per basis while
    /// d stays small enough that a full family fits in memory.
    pub fn basis_matrix(&self, i: usize) -> Result<Arc<CMatrix>> {
        if self.dim() <= CACHE_MAX_DIM {
            if let Some(m) = self.basis_cache[i].get() {
                return Ok(Arc::clone(m));
            }
            let built = Arc::new(self.build_basis_matrix(i)?);
            let cached = self.basis_cache[i].get_or_init(|| built);
            return Ok(Arc::clone(cached));
        }
        Ok(Arc::new(self.build_basis_matrix(i)?))
    }

    fn build_basis_matrix(&self, i: usize) -> Result<CMatrix> {
        let d = self.dim();
        let mut m = CMatrix::zeros(d, d);
        for j in 0..d {
            let v = self.state_vector(i, j)?;
            m.set_column(j, &v);
        }
        Ok(m)
    }

    /// Plain-text fixture: generators with signs, members with signs, and
    /// coset labels per group.
    pub fn to_fixture(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "qubits {}", self.n);
        for group in &self.groups {
            let _ = writeln!(out, "group {}", group.index);
            let gens: Vec<String> =
                group.generators.iter().map(|g| g.to_string()).collect();
            let _ = writeln!(out, "generators {}", gens.join(" "));
            let mems: Vec<String> =
                group.members.iter().map(|m| m.to_string()).collect();
            let _ = writeln!(out, "members {}", mems.join(" "));
            let reps: Vec<String> = self.coset_reps[group.index]
                .iter()
                .map(|r| r.to_string())
                .collect();
            let _ = writeln!(out, "cosets {}", reps.join(" "));
        }
        out
    }

    /// Flips the sign of one cached member, invalidating any cached basis
    /// vectors. Falsification hook for the invariant suite.
    #[doc(hidden)]
    pub fn corrupt_member_sign_for_tests(&mut self, basis: usize, member: usize) {
        let old = self.groups[basis].members[member];
        self.groups[basis].members[member] =
            SignedPauli::new(old.pauli(), (old.phase_exponent() + 2) % 4);
        self.basis_cache = (0..self.groups.len()).map(|_| OnceLock::new()).collect();
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
        let d = 1usize << n;
        let mut groups = Vec::new();
        let mut all_reps: Vec<Vec<PauliString>> = Vec::new();
        while let Some(line) = lines.next() {
            let index: usize = line
                .strip_prefix("group ")
                .ok_or_else(|| Error::Parse(format!("expected 'group I', got {line:?}")))?
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("bad group index: {e}")))?;
            let gen_line = lines
                .next()
                .and_then(|l| l.strip_prefix("generators "))
                .ok_or_else(|| Error::Parse("missing generators line".into()))?;
            let gens: Result<Vec<SignedPauli>> =
                gen_line.split_whitespace().map(str::parse).collect();
            let gens = gens?;
            let member_line = lines
                .next()
                .and_then(|l| l.strip_prefix("members "))
                .ok_or_else(|| Error::Parse("missing members line".into()))?;
            let declared: Result<Vec<SignedPauli>> =
                member_line.split_whitespace().map(str::parse).collect();
            let declared = declared?;
            let coset_line = lines
                .next()
                .and_then(|l| l.strip_prefix("cosets "))
                .ok_or_else(|| Error::Parse("missing cosets line".into()))?;
            let reps: Result<Vec<PauliString>> =
                coset_line.split_whitespace().map(str::parse).collect();
            let group = StabilizerGroup::from_generators(
                index,
                gens.iter().map(|g| g.pauli()).collect(),
            )?;
            if group.members != declared {
                return Err(Error::Validation(format!(
                    "declared members of group {index} do not match its generators"
                )));
            }
            groups.push(group);
            all_reps.push(reps?);
        }
        let family = Self::from_groups(n, groups)?;
        for (i, reps) in all_reps.iter().enumerate() {
            if reps.len() != d || family.coset_reps[i] != *reps {
                return Err(Error::Validation(format!(
                    "coset labels of group {i} do not match the canonical choice"
                )));
            }
        }
        Ok(family)
    }
}

/// Greedy lexicographic coset representatives, one per syndrome value.
fn coset_representatives(group: &StabilizerGroup) -> Result<Vec<PauliString>> {
    let n = group.num_qubits();
    let d = 1usize << n;
    let mut reps: Vec<Option<PauliString>> = vec![None; d];
    let mut found = 0usize;
    'outer: for x in 0..d as u64 {
        for z in 0..d as u64 {
            let p = PauliString::from_bits(n, x, z)?;
            let syndrome = group.syndrome(&p) as usize;
            if reps[syndrome].is_none() {
                reps[syndrome] = Some(p);
                found += 1;
                if found == d {
                    break 'outer;
                }
            }
        }
    }
    reps.into_iter()
        .enumerate()
        .map(|(s, r)| {
            r.ok_or_else(|| Error::Internal(format!("no representative for syndrome {s}")))
        })
        .collect()
}

fn collect_subgroups(
    n: usize,
    all: &[PauliString],
    chosen: &mut Vec<PauliString>,
    out: &mut Vec<Vec<PauliString>>,
    seen: &mut std::collections::BTreeSet<Vec<PauliString>>,
) {
    if chosen.len() == n {
        let mut members: Vec<PauliString> = Vec::with_capacity(1 << n);
        for mask in 0..(1usize << n) {
            let mut acc = PauliString::identity(n).unwrap();
            for (k, g) in chosen.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    acc = acc.mul_mod_phase(g).unwrap();
                }
            }
            members.push(acc);
        }
        members.sort();
        if seen.insert(members.clone()) {
            out.push(members);
        }
        return;
    }
    for p in all.iter().filter(|p| !p.is_identity()) {
        if chosen.iter().all(|g| g.commutation_bit_unchecked(p) == 0) {
            let mut candidate = chosen.clone();
            candidate.push(*p);
            if f2_independent(&candidate) {
                let mut next = candidate;
                std::mem::swap(chosen, &mut next);
                collect_subgroups(n, all, chosen, out, seen);
                std::mem::swap(chosen, &mut next);
            }
        }
    }
}

fn search_cover(
    subgroups: &[Vec<PauliString>],
    cover: &mut Vec<usize>,
    used: &mut Vec<bool>,
    n: usize,
) -> bool {
    let d = 1usize << n;
    if cover.len() == d + 1 {
        return true;
    }
    let start = cover.last().map(|&i| i + 1).unwrap_or(0);
    'candidates: for (i, members) in subgroups.iter().enumerate().skip(start) {
        for m in members.iter().filter(|m| !m.is_identity()) {
            let key = (m.x_bits() as usize) << n | m.z_bits() as usize;
            if used[key] {
                continue 'candidates;
            }
        }
        for m in members.iter().filter(|m| !m.is_identity()) {
            used[(m.x_bits() as usize) << n | m.z_bits() as usize] = true;
        }
        cover.push(i);
        if search_cover(subgroups, cover, used, n) {
            return true;
        }
        cover.pop();
        for m in members.iter().filter(|m| !m.is_identity()) {
            used[(m.x_bits() as usize) << n | m.z_bits() as usize] = false;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn single_qubit_cover_is_x_y_z() {
        let family = MubFamily::build(1).unwrap();
        let mut gens: Vec<String> = family
            .groups()
            .iter()
            .map(|g| g.generators()[0].pauli().to_string())
            .collect();
        gens.sort();
        assert_eq!(gens, vec!["X", "Y", "Z"]);
    }

    #[test]
    fn two_qubit_cover_partitions() {
        let family = MubFamily::build(2).unwrap();
        assert_eq!(family.num_bases(), 5);
        let mut all = BTreeSet::new();
        for g in family.groups() {
            assert_eq!(g.members().len(), 4);
            for m in g.members() {
                if !m.pauli().is_identity() {
                    assert!(all.insert(m.pauli()), "{} covered twice", m.pauli());
                }
            }
        }
        assert_eq!(all.len(), 15);
    }

    #[test]
    fn cover_counting_n3() {
        let family = MubFamily::build(3).unwrap();
        let covered: usize = family
            .groups()
            .iter()
            .map(|g| g.members().iter().filter(|m| !m.pauli().is_identity()).count())
            .sum();
        assert_eq!(covered, 63);
    }

    #[test]
    fn exhaustive_cover_matches_invariants_small_n() {
        for n in 1..=2 {
            let family = MubFamily::build_exhaustive(n).unwrap();
            assert_eq!(family.num_bases(), (1 << n) + 1);
            // same partition property as the field construction
            let mut all = BTreeSet::new();
            for g in family.groups() {
                for m in g.members() {
                    if !m.pauli().is_identity() {
                        assert!(all.insert(m.pauli()));
                    }
                }
            }
            assert_eq!(all.len(), 4usize.pow(n as u32) - 1);
        }
    }

    #[test]
    fn fix_signs_single_qubit_z() {
        let group = fix_signs(&[ps("I"), ps("Z")]).unwrap();
        let signs: Vec<(String, i8)> = group
            .members()
            .iter()
            .map(|m| (m.pauli().to_string(), m.real_sign().unwrap()))
            .collect();
        assert_eq!(signs, vec![("I".into(), 1), ("Z".into(), 1)]);
    }

    #[test]
    fn fix_signs_xx_zz_gives_minus_yy() {
        let group = fix_signs(&[ps("II"), ps("XX"), ps("ZZ"), ps("YY")]).unwrap();
        assert_eq!(group.member_sign(&ps("YY")), Some(-1));
        assert_eq!(group.member_sign(&ps("XX")), Some(1));
        assert_eq!(group.member_sign(&ps("ZZ")), Some(1));
    }

    #[test]
    fn fix_signs_rejects_non_commuting_sets() {
        let err = fix_signs(&[ps("I"), ps("X"), ps("Z"), ps("Y")]);
        assert!(matches!(err, Err(Error::InvalidGroup(_))));
    }

    #[test]
    fn signed_members_stabilize_synthesized_state() {
        let family = MubFamily::build(2).unwrap();
        for i in 0..family.num_bases() {
            let state = family.state_vector(i, 0).unwrap();
            for member in family.group(i).members() {
                let m = member.to_matrix().unwrap();
                let image = &m * &state;
                let err = (&image - &state).norm();
                assert!(err < 1e-10, "basis {i}: member {member} does not stabilize");
            }
        }
    }

    #[test]
    fn eigenvalue_pattern_matches_syndrome() {
        let family = MubFamily::build(2).unwrap();
        for i in 0..family.num_bases() {
            for j in 0..family.dim() {
                let state = family.state_vector(i, j).unwrap();
                let rep = family.coset_reps(i)[j];
                for member in family.group(i).members() {
                    let sign = if member.pauli().commutation_bit(&rep).unwrap() == 0 {
                        1.0
                    } else {
                        -1.0
                    };
                    let m = member.to_matrix().unwrap();
                    let err = (&m * &state - &state * C64::new(sign, 0.0)).norm();
                    assert!(err < 1e-10);
                }
            }
        }
    }

    #[test]
    fn coset_labels_single_qubit_z_group() {
        let family = MubFamily::build(1).unwrap();
        let z_index = family
            .groups()
            .iter()
            .position(|g| g.contains(&ps("Z")))
            .unwrap();
        let reps = family.coset_reps(z_index);
        assert_eq!(reps.len(), 2);
        assert_eq!(reps[0], ps("I"));
        assert_eq!(reps[1], ps("X"));
    }

    #[test]
    fn coset_reps_are_pairwise_inequivalent() {
        let family = MubFamily::build(2).unwrap();
        for i in 0..family.num_bases() {
            let reps = family.coset_reps(i);
            assert_eq!(reps.len(), 4);
            for a in 0..reps.len() {
                for b in (a + 1)..reps.len() {
                    let ratio = reps[a].mul_mod_phase(&reps[b]).unwrap();
                    assert!(!family.group_membership(i, &ratio));
                }
            }
        }
    }

    #[test]
    fn single_qubit_z_basis_is_computational() {
        let family = MubFamily::build(1).unwrap();
        let z_index = family
            .groups()
            .iter()
            .position(|g| g.contains(&ps("Z")))
            .unwrap();
        let zero = family.state_vector(z_index, 0).unwrap();
        let one = family.state_vector(z_index, 1).unwrap();
        assert!((zero[0].norm() - 1.0).abs() < 1e-12 && zero[1].norm() < 1e-12);
        assert!((one[1].norm() - 1.0).abs() < 1e-12 && one[0].norm() < 1e-12);
    }

    #[test]
    fn orthonormal_within_and_unbiased_across() {
        let family = MubFamily::build(2).unwrap();
        let d = family.dim();
        for i in 0..family.num_bases() {
            let bi = family.basis_matrix(i).unwrap();
            for j in 0..d {
                for l in 0..d {
                    let overlap = bi.column(j).dotc(&bi.column(l)).norm();
                    let expected = if j == l { 1.0 } else { 0.0 };
                    assert!((overlap - expected).abs() < 1e-10);
                }
            }
            for k in (i + 1)..family.num_bases() {
                let bk = family.basis_matrix(k).unwrap();
                for j in 0..d {
                    for l in 0..d {
                        let overlap = bi.column(j).dotc(&bk.column(l)).norm_sqr();
                        assert!((overlap - 1.0 / d as f64).abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn membership_matches_member_list_exhaustively() {
        for n in 1..=3usize {
            let family = MubFamily::build(n).unwrap();
            for g in family.groups() {
                let listed: BTreeSet<PauliString> =
                    g.members().iter().map(|m| m.pauli()).collect();
                for q in PauliString::enumerate(n).unwrap() {
                    assert_eq!(g.contains(&q), listed.contains(&q));
                }
            }
        }
    }

    #[test]
    fn generators_of_other_groups_are_not_members() {
        let family = MubFamily::build(2).unwrap();
        for g in family.groups() {
            assert!(g.contains(&ps("II")));
            for h in family.groups() {
                for gen in h.generators() {
                    let inside = g.contains(&gen.pauli());
                    assert_eq!(inside, h.index() == g.index());
                }
            }
        }
    }

    #[test]
    fn fixture_round_trip() {
        let family = MubFamily::build(2).unwrap();
        let text = family.to_fixture();
        let back = MubFamily::from_fixture(&text).unwrap();
        assert_eq!(back.to_fixture(), text);
    }
}
