//! Shift-invariant probability vectors on blocks.
//!
//! A [`SimplexVector`] of order `k` with cutoff `N` puts mass only on blocks
//! over `{1..N}` and has equal left and right `(k-1)`-marginals. Vectors are
//! produced constructively: from stationary Markov chains, from periodic
//! orbits and as point masses on constant blocks. [`enumerate_dense`] walks a
//! deterministic countable family of such vectors with rational entries.

use std::collections::{BTreeMap, HashSet, VecDeque};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::words::{basic_factor, basic_period, Block, BlockWeights, Digit};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimplexError {
    #[error("block order must be positive")]
    ZeroOrder,
    #[error("alphabet cutoff must be positive")]
    ZeroCutoff,
    #[error("block {block} has length {len}, expected {k}")]
    WrongLength { block: Block, len: usize, k: usize },
    #[error("entry for block {block} is negative")]
    Negative { block: Block },
    #[error("block {block} uses a digit above the cutoff {cutoff}")]
    DigitAboveCutoff { block: Block, cutoff: Digit },
    #[error("entries sum to {sum}, not 1")]
    NotProbability { sum: BigRational },
    #[error("marginals differ at {prefix:?}: left {left}, right {right}")]
    NotShiftInvariant { prefix: Vec<Digit>, left: Box<BigRational>, right: Box<BigRational> },
    #[error("cannot compare vectors of orders {left} and {right}")]
    MismatchedOrder { left: usize, right: usize },
    #[error("transition matrix must be square and nonempty")]
    NotSquare,
    #[error("row {row} of the transition matrix is not a probability vector")]
    NonStochasticRow { row: usize },
    #[error("transition matrix is reducible; the stationary vector is not unique")]
    Reducible,
}

/// A validated shift-invariant probability vector with rational entries.
/// Zero entries are never stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SimplexVector {
    k: usize,
    cutoff: Digit,
    entries: BTreeMap<Block, BigRational>,
}

impl SimplexVector {
    pub fn k(&self) -> usize {
        self.k
    }

    /// The alphabet cutoff `N`: every supporting block uses digits `<= N`.
    pub fn cutoff(&self) -> Digit {
        self.cutoff
    }

    pub fn entries(&self) -> &BTreeMap<Block, BigRational> {
        &self.entries
    }

    /// Mass of `block`, zero when outside the support.
    pub fn get(&self, block: &Block) -> BigRational {
        self.entries.get(block).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Least common multiple of all entry denominators.
    pub fn common_denominator(&self) -> BigInt {
        self.entries.values().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
    }

    /// Entries as integers over [`Self::common_denominator`].
    pub fn scaled_entries(&self) -> (BigInt, BTreeMap<Block, BigInt>) {
        let den = self.common_denominator();
        let scaled = self
            .entries
            .iter()
            .map(|(b, v)| (b.clone(), v.numer() * (&den / v.denom())))
            .collect();
        (den, scaled)
    }

    pub fn to_f64(&self) -> BTreeMap<Block, f64> {
        self.entries.iter().map(|(b, v)| (b.clone(), crate::exact::rational_to_f64(v))).collect()
    }
}

impl BlockWeights<BigRational> for SimplexVector {
    fn order(&self) -> usize {
        self.k
    }

    fn weights(&self) -> &BTreeMap<Block, BigRational> {
        &self.entries
    }
}

/// Checks a candidate vector and returns it as a [`SimplexVector`].
pub fn validate(
    k: usize,
    cutoff: Digit,
    entries: BTreeMap<Block, BigRational>,
) -> Result<SimplexVector, SimplexError> {
    if k == 0 {
        return Err(SimplexError::ZeroOrder);
    }
    if cutoff == 0 {
        return Err(SimplexError::ZeroCutoff);
    }
    let mut kept = BTreeMap::new();
    let mut sum = BigRational::zero();
    for (block, value) in entries {
        if block.k() != k {
            return Err(SimplexError::WrongLength { len: block.k(), block, k });
        }
        if value.is_negative() {
            return Err(SimplexError::Negative { block });
        }
        if value.is_zero() {
            continue;
        }
        if block.max_digit() > cutoff {
            return Err(SimplexError::DigitAboveCutoff { block, cutoff });
        }
        sum += &value;
        kept.insert(block, value);
    }
    if !sum.is_one() {
        return Err(SimplexError::NotProbability { sum });
    }
    if k > 1 {
        let mut left: BTreeMap<&[Digit], BigRational> = BTreeMap::new();
        let mut right: BTreeMap<&[Digit], BigRational> = BTreeMap::new();
        for (block, value) in &kept {
            let d = block.digits();
            *left.entry(&d[1..]).or_insert_with(BigRational::zero) += value;
            *right.entry(&d[..k - 1]).or_insert_with(BigRational::zero) += value;
        }
        let prefixes: std::collections::BTreeSet<&[Digit]> = left.keys().chain(right.keys()).copied().collect();
        for prefix in prefixes {
            let l = left.get(prefix).cloned().unwrap_or_else(BigRational::zero);
            let r = right.get(prefix).cloned().unwrap_or_else(BigRational::zero);
            if l != r {
                return Err(SimplexError::NotShiftInvariant { prefix: prefix.to_vec(), left: Box::new(l), right: Box::new(r) });
            }
        }
    }
    Ok(SimplexVector { k, cutoff, entries: kept })
}

/// `sum |a_b - b_b|` over the union of both supports.
pub fn l1_distance<V, A, B>(a: &A, b: &B) -> Result<V, SimplexError>
where
    V: Clone + Signed,
    A: BlockWeights<V> + ?Sized,
    B: BlockWeights<V> + ?Sized,
{
    if a.order() != b.order() {
        return Err(SimplexError::MismatchedOrder { left: a.order(), right: b.order() });
    }
    let (wa, wb) = (a.weights(), b.weights());
    let mut total = V::zero();
    for (block, va) in wa {
        total = match wb.get(block) {
            Some(vb) => total + (va.clone() - vb.clone()).abs(),
            None => total + va.abs(),
        };
    }
    for (block, vb) in wb {
        if !wa.contains_key(block) {
            total = total + vb.abs();
        }
    }
    Ok(total)
}

fn check_stochastic(p: &[Vec<BigRational>]) -> Result<(), SimplexError> {
    let n = p.len();
    if n == 0 || p.iter().any(|row| row.len() != n) {
        return Err(SimplexError::NotSquare);
    }
    for (i, row) in p.iter().enumerate() {
        let sum: BigRational = row.iter().fold(BigRational::zero(), |acc, v| acc + v);
        if row.iter().any(|v| v.is_negative()) || !sum.is_one() {
            return Err(SimplexError::NonStochasticRow { row: i });
        }
    }
    Ok(())
}

fn reaches_all(adjacency: &[Vec<usize>]) -> bool {
    let mut seen = vec![false; adjacency.len()];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(v) = queue.pop_front() {
        for &w in &adjacency[v] {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Strong connectivity of the positive-transition graph.
pub fn is_irreducible(p: &[Vec<BigRational>]) -> bool {
    let n = p.len();
    let mut forward = vec![Vec::new(); n];
    let mut backward = vec![Vec::new(); n];
    for (i, row) in p.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if v.is_positive() {
                forward[i].push(j);
                backward[j].push(i);
            }
        }
    }
    reaches_all(&forward) && reaches_all(&backward)
}

/// Exact stationary distribution of an irreducible stochastic matrix, by
/// Gaussian elimination over the rationals.
pub fn stationary_distribution(p: &[Vec<BigRational>]) -> Result<Vec<BigRational>, SimplexError> {
    check_stochastic(p)?;
    if !is_irreducible(p) {
        return Err(SimplexError::Reducible);
    }
    let n = p.len();
    // rows 0..n-1: (P^T - I) pi = 0; last row: sum(pi) = 1
    let mut a: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            let mut row: Vec<BigRational> = (0..n).map(|j| p[j][i].clone()).collect();
            row[i] -= BigRational::one();
            row.push(BigRational::zero());
            row
        })
        .collect();
    a[n - 1] = vec![BigRational::one(); n + 1];
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero()).ok_or(SimplexError::Reducible)?;
        a.swap(col, pivot);
        let inv = a[col][col].recip();
        for v in a[col].iter_mut() {
            *v *= &inv;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let factor = a[r][col].clone();
                for c in col..=n {
                    let delta = &factor * &a[col][c];
                    a[r][c] -= delta;
                }
            }
        }
    }
    Ok(a.into_iter().map(|row| row[n].clone()).collect())
}

/// The `k`-block marginals of the stationary Markov chain with transition
/// matrix `p` on the alphabet `{1..p.len()}`.
pub fn markov_vector(p: &[Vec<BigRational>], k: usize) -> Result<SimplexVector, SimplexError> {
    if k == 0 {
        return Err(SimplexError::ZeroOrder);
    }
    let pi = stationary_distribution(p)?;
    let mut entries = BTreeMap::new();
    let mut stack: Vec<(Vec<Digit>, BigRational)> = pi
        .iter()
        .enumerate()
        .filter(|(_, w)| w.is_positive())
        .map(|(i, w)| (vec![i as Digit + 1], w.clone()))
        .collect();
    while let Some((path, weight)) = stack.pop() {
        if path.len() == k {
            entries.insert(Block::from_slice_unchecked(&path), weight);
            continue;
        }
        let last = (*path.last().expect("paths are nonempty") - 1) as usize;
        for (j, t) in p[last].iter().enumerate() {
            if t.is_positive() {
                let mut next = path.clone();
                next.push(j as Digit + 1);
                stack.push((next, &weight * t));
            }
        }
    }
    validate(k, p.len() as Digit, entries)
}

/// The block vector induced by the periodic orbit of `basic_factor(b)^∞`,
/// which carries mass `1/p` on each of its `p` shifts.
pub fn periodic_orbit_vector(b: &Block, k: usize) -> Result<SimplexVector, SimplexError> {
    if k == 0 {
        return Err(SimplexError::ZeroOrder);
    }
    let p = basic_period(b);
    let factor = basic_factor(b);
    let cycle = factor.digits();
    let mut counts: BTreeMap<Block, u64> = BTreeMap::new();
    for start in 0..p {
        let digits: Vec<Digit> = (0..k).map(|j| cycle[(start + j) % p]).collect();
        *counts.entry(Block::from_slice_unchecked(&digits)).or_default() += 1;
    }
    let den = BigInt::from(p);
    let entries = counts
        .into_iter()
        .map(|(block, c)| (block, BigRational::new(BigInt::from(c), den.clone())))
        .collect();
    validate(k, b.max_digit(), entries)
}

/// Unit mass on the constant block `d d ... d` of length `k`.
pub fn point_mass_vector(d: Digit, k: usize) -> Result<SimplexVector, SimplexError> {
    if k == 0 {
        return Err(SimplexError::ZeroOrder);
    }
    let block = Block::repeated(d, k).map_err(|_| SimplexError::ZeroCutoff)?;
    validate(k, d, BTreeMap::from([(block, BigRational::one())]))
}

/// All ways of writing `total` as an ordered sum of `parts` nonnegative
/// integers, lexicographically.
fn compositions(total: u64, parts: usize) -> Vec<Vec<u64>> {
    fn go(total: u64, parts: usize, prefix: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if parts == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=total {
            prefix.push(first);
            go(total - first, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(total, parts, &mut Vec::with_capacity(parts), &mut out);
    out
}

/// Deterministic enumeration of rational shift-invariant vectors.
///
/// Markov vectors come first, ordered by alphabet size `N`, then by the
/// (reduced) common denominator of the transition matrix, then by the
/// matrix numerators row by row. Periodic-orbit vectors of all blocks of
/// length `1..=k+2` with digits `<= N_max` follow, shorter blocks first and
/// lexicographically within a length. Vectors already emitted are skipped.
pub struct DenseEnumeration {
    k: usize,
    n_max: usize,
    denom_max: u64,
    alphabet: usize,
    denominator: u64,
    rows: Vec<Vec<u64>>,
    odometer: Vec<usize>,
    orbit_block: Option<Vec<Digit>>,
    seen: HashSet<BTreeMap<Block, BigRational>>,
    done: bool,
}

impl DenseEnumeration {
    fn new(k: usize, n_max: usize, denom_max: u64) -> Self {
        let mut e = DenseEnumeration {
            k,
            n_max,
            denom_max,
            alphabet: 1,
            denominator: 1,
            rows: Vec::new(),
            odometer: Vec::new(),
            orbit_block: None,
            seen: HashSet::new(),
            done: k == 0 || n_max == 0,
        };
        if !e.done && denom_max >= 1 {
            e.reset_matrices();
        } else {
            e.alphabet = n_max + 1;
        }
        e
    }

    fn reset_matrices(&mut self) {
        self.rows = compositions(self.denominator, self.alphabet);
        self.odometer = vec![0; self.alphabet];
    }

    /// Advances the matrix odometer; false once every (N, d) is exhausted.
    fn advance_matrix(&mut self) -> bool {
        for slot in self.odometer.iter_mut().rev() {
            *slot += 1;
            if *slot < self.rows.len() {
                return true;
            }
            *slot = 0;
        }
        if self.denominator < self.denom_max {
            self.denominator += 1;
        } else if self.alphabet < self.n_max {
            self.alphabet += 1;
            self.denominator = 1;
        } else {
            self.alphabet = self.n_max + 1;
            return false;
        }
        self.reset_matrices();
        true
    }

    fn current_matrix(&self) -> Option<Vec<Vec<BigRational>>> {
        let d = self.denominator;
        let numerators = self.odometer.iter().flat_map(|&i| self.rows[i].iter().copied());
        let g = numerators.fold(d, |acc, a| acc.gcd(&a));
        if g != 1 {
            return None;
        }
        let den = BigInt::from(d);
        Some(
            self.odometer
                .iter()
                .map(|&i| self.rows[i].iter().map(|&a| BigRational::new(BigInt::from(a), den.clone())).collect())
                .collect(),
        )
    }

    fn next_orbit_block(&mut self) -> Option<Block> {
        let n_max = self.n_max as Digit;
        let next = match self.orbit_block.take() {
            None => vec![1],
            Some(mut digits) => {
                let mut i = digits.len();
                loop {
                    if i == 0 {
                        if digits.len() >= self.k + 2 {
                            return None;
                        }
                        break vec![1; digits.len() + 1];
                    }
                    i -= 1;
                    if digits[i] < n_max {
                        digits[i] += 1;
                        for d in digits.iter_mut().skip(i + 1) {
                            *d = 1;
                        }
                        break digits;
                    }
                }
            }
        };
        self.orbit_block = Some(next.clone());
        Some(Block::from_slice_unchecked(&next))
    }

    fn emit(&mut self, v: SimplexVector) -> Option<SimplexVector> {
        if self.seen.insert(v.entries.clone()) {
            Some(v)
        } else {
            None
        }
    }
}

impl Iterator for DenseEnumeration {
    type Item = SimplexVector;

    fn next(&mut self) -> Option<SimplexVector> {
        if self.done {
            return None;
        }
        while self.alphabet <= self.n_max {
            let candidate = self
                .current_matrix()
                .and_then(|p| if is_irreducible(&p) { markov_vector(&p, self.k).ok() } else { None });
            let more = self.advance_matrix();
            if let Some(v) = candidate.and_then(|v| self.emit(v)) {
                return Some(v);
            }
            if !more {
                break;
            }
        }
        while let Some(block) = self.next_orbit_block() {
            let v = periodic_orbit_vector(&block, self.k).expect("orbit vectors are valid");
            if let Some(v) = self.emit(v) {
                return Some(v);
            }
        }
        self.done = true;
        None
    }
}

/// Rational shift-invariant vectors of order `k` from Markov chains on up to
/// `n_max` letters with transition denominators up to `denom_max`, followed
/// by periodic-orbit vectors. See [`DenseEnumeration`] for the order.
pub fn enumerate_dense(k: usize, n_max: usize, denom_max: u64) -> DenseEnumeration {
    DenseEnumeration::new(k, n_max, denom_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn b(text: &str) -> Block {
        Block::parse(text).unwrap()
    }

    fn vector(k: usize, cutoff: Digit, pairs: &[(&str, i64, i64)]) -> Result<SimplexVector, SimplexError> {
        validate(k, cutoff, pairs.iter().map(|&(s, n, d)| (b(s), r(n, d))).collect())
    }

    fn matrix(rows: &[&[(i64, i64)]]) -> Vec<Vec<BigRational>> {
        rows.iter().map(|row| row.iter().map(|&(n, d)| r(n, d)).collect()).collect()
    }

    #[test]
    fn validate_examples() {
        let uniform = vector(2, 2, &[("11", 1, 4), ("12", 1, 4), ("21", 1, 4), ("22", 1, 4)]);
        assert!(uniform.is_ok());

        match vector(2, 2, &[("12", 1, 1)]) {
            Err(SimplexError::NotShiftInvariant { prefix, left, right }) => {
                assert_eq!(prefix, vec![1]);
                assert_eq!(*left, r(0, 1));
                assert_eq!(*right, r(1, 1));
            }
            other => panic!("unexpected {other:?}"),
        }

        assert!(vector(1, 3, &[("1", 1, 2), ("2", 1, 3), ("3", 1, 6)]).is_ok());
    }

    #[test]
    fn validate_rejects_bad_candidates() {
        assert!(matches!(vector(1, 2, &[("1", 1, 2)]), Err(SimplexError::NotProbability { .. })));
        assert!(matches!(vector(1, 2, &[("1", 3, 2), ("2", -1, 2)]), Err(SimplexError::Negative { .. })));
        assert!(matches!(vector(1, 2, &[("3", 1, 1)]), Err(SimplexError::DigitAboveCutoff { .. })));
        assert!(matches!(vector(2, 2, &[("1", 1, 1)]), Err(SimplexError::WrongLength { .. })));
        // zero entries outside the cutoff are harmless
        assert!(vector(1, 1, &[("1", 1, 1), ("7", 0, 1)]).is_ok());
    }

    #[test]
    fn l1_distance_examples() {
        let a = vector(1, 2, &[("1", 1, 2), ("2", 1, 2)]).unwrap();
        let c = vector(1, 2, &[("1", 1, 4), ("2", 3, 4)]).unwrap();
        assert_eq!(l1_distance(&a, &a).unwrap(), r(0, 1));
        assert_eq!(l1_distance(&a, &c).unwrap(), r(1, 2));
        let one = point_mass_vector(1, 1).unwrap();
        let two = point_mass_vector(2, 1).unwrap();
        assert_eq!(l1_distance(&one, &two).unwrap(), r(2, 1));
        let pair = point_mass_vector(1, 2).unwrap();
        assert_eq!(l1_distance(&one, &pair), Err(SimplexError::MismatchedOrder { left: 1, right: 2 }));
    }

    #[test]
    fn markov_vector_examples() {
        let half = matrix(&[&[(1, 2), (1, 2)], &[(1, 2), (1, 2)]]);
        let q = markov_vector(&half, 2).unwrap();
        for s in ["11", "12", "21", "22"] {
            assert_eq!(q.get(&b(s)), r(1, 4));
        }

        let swap = matrix(&[&[(0, 1), (1, 1)], &[(1, 1), (0, 1)]]);
        assert_eq!(stationary_distribution(&swap).unwrap(), vec![r(1, 2), r(1, 2)]);
        let q = markov_vector(&swap, 2).unwrap();
        assert_eq!(q.entries().len(), 2);
        assert_eq!(q.get(&b("12")), r(1, 2));
        assert_eq!(q.get(&b("21")), r(1, 2));

        let lazy = matrix(&[&[(1, 2), (1, 2)], &[(1, 1), (0, 1)]]);
        let q = markov_vector(&lazy, 1).unwrap();
        assert_eq!(q.get(&b("1")), r(2, 3));
        assert_eq!(q.get(&b("2")), r(1, 3));
    }

    #[test]
    fn markov_vector_errors() {
        let bad = matrix(&[&[(1, 2), (1, 3)], &[(1, 1), (0, 1)]]);
        assert_eq!(markov_vector(&bad, 1), Err(SimplexError::NonStochasticRow { row: 0 }));
        let identity = matrix(&[&[(1, 1), (0, 1)], &[(0, 1), (1, 1)]]);
        assert_eq!(markov_vector(&identity, 1), Err(SimplexError::Reducible));
        assert_eq!(markov_vector(&[], 1), Err(SimplexError::NotSquare));
    }

    #[test]
    fn periodic_orbit_examples() {
        let q = periodic_orbit_vector(&b("12"), 2).unwrap();
        assert_eq!(q.get(&b("12")), r(1, 2));
        assert_eq!(q.get(&b("21")), r(1, 2));

        let q = periodic_orbit_vector(&b("1"), 1).unwrap();
        assert_eq!(q.get(&b("1")), r(1, 1));

        let q = periodic_orbit_vector(&b("112"), 2).unwrap();
        assert_eq!(q.entries().len(), 3);
        for s in ["11", "12", "21"] {
            assert_eq!(q.get(&b(s)), r(1, 3));
        }
        // the defining block gets exactly 1/p
        let q = periodic_orbit_vector(&b("1212"), 4).unwrap();
        assert_eq!(q.get(&b("1212")), r(1, 2));
    }

    #[test]
    fn point_mass_examples() {
        assert_eq!(point_mass_vector(3, 2).unwrap().get(&b("33")), r(1, 1));
        assert_eq!(point_mass_vector(1, 1).unwrap().get(&b("1")), r(1, 1));
        let q = point_mass_vector(5, 3).unwrap();
        assert_eq!(q.entries().len(), 1);
        assert_eq!(q.get(&b("555")), r(1, 1));
    }

    #[test]
    fn enumerate_dense_examples() {
        let all: Vec<_> = enumerate_dense(1, 1, 1).collect();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].get(&b("1")), r(1, 1));

        let uniform = vector(1, 2, &[("1", 1, 2), ("2", 1, 2)]).unwrap();
        assert!(enumerate_dense(1, 2, 2).any(|v| v.entries() == uniform.entries()));

        let vs: Vec<_> = enumerate_dense(2, 2, 2).collect();
        assert!(vs.len() > 5);
        for v in &vs {
            validate(v.k(), v.cutoff(), v.entries().clone()).unwrap();
        }
    }

    #[test]
    fn enumerate_dense_is_stable_and_duplicate_free() {
        let first: Vec<_> = enumerate_dense(2, 3, 3).collect();
        let second: Vec<_> = enumerate_dense(2, 3, 3).collect();
        assert_eq!(first, second);
        let distinct: HashSet<_> = first.iter().map(|v| v.entries().clone()).collect();
        assert_eq!(distinct.len(), first.len());
        let restarted: Vec<_> = enumerate_dense(2, 3, 3).skip(7).take(3).collect();
        assert_eq!(restarted, first[7..10].to_vec());
    }

    #[test]
    fn compositions_are_lexicographic() {
        assert_eq!(compositions(2, 2), vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
        assert_eq!(compositions(3, 3).len(), 10);
    }
}
