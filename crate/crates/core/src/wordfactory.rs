//! Words with prescribed block frequencies.
//!
//! [`construct_zn_word`] realizes a rational shift-invariant vector `q` as a
//! word whose `k`-block frequencies are within `1/n` of `q`: scaling `q` to
//! integers turns it into edge multiplicities on the de Bruijn graph over
//! `(k-1)`-blocks, shift invariance is exactly the balanced-degree condition,
//! and an Eulerian circuit spells a cyclic word with block counts exactly
//! proportional to `q`. Repeating that word enough times makes the
//! linearization defect small. Every construction ends with an exact check.

use std::collections::{BTreeMap, HashMap, VecDeque};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use thiserror::Error;

use crate::simplex::SimplexVector;
use crate::words::{periodic_truncate, Block, Digit, Word};

/// Upper bound on emitted words, to keep runaway specs from exhausting memory.
pub const MAX_WORD_LENGTH: usize = 1 << 28;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FactoryError {
    #[error("tolerance parameter n must be positive")]
    ZeroTolerance,
    #[error("minimum length k*n*N^k overflows")]
    LengthOverflow,
    #[error("target has {count} edges; too many to build a circuit")]
    TooManyEdges { count: BigInt },
    #[error("construction stalled at length {length} with residual {residual} > 1/{n}")]
    Residual { length: usize, residual: BigRational, n: u64 },
    #[error("target length {ell} is below the padding bound {required}")]
    BelowPadding { ell: usize, required: usize },
}

/// Parameters of the set `Z_n(q, N, k)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZnSpec {
    pub q: SimplexVector,
    pub cutoff: Digit,
    pub k: usize,
    pub n: u64,
    pub min_length: usize,
}

impl ZnSpec {
    /// Uses the vector's own order and cutoff.
    pub fn new(q: SimplexVector, n: u64) -> Result<Self, FactoryError> {
        let (k, cutoff) = (q.k(), q.cutoff());
        Self::with_cutoff(q, cutoff, k, n)
    }

    /// `cutoff` may exceed the vector's own cutoff; `k` must equal its order.
    pub fn with_cutoff(q: SimplexVector, cutoff: Digit, k: usize, n: u64) -> Result<Self, FactoryError> {
        assert_eq!(k, q.k(), "spec order must match the target's order");
        assert!(cutoff >= q.cutoff(), "cutoff below the target's support");
        if n == 0 {
            return Err(FactoryError::ZeroTolerance);
        }
        let min_length = u32::try_from(k)
            .ok()
            .and_then(|e| cutoff.checked_pow(e))
            .and_then(|p| p.checked_mul(n))
            .and_then(|p| p.checked_mul(k as u64))
            .and_then(|p| usize::try_from(p).ok())
            .ok_or(FactoryError::LengthOverflow)?;
        Ok(ZnSpec { q, cutoff, k, n, min_length })
    }
}

/// Exact `l1` distance between `k`-block frequencies and a fixed target,
/// maintained as the word grows.
///
/// The target is held as integers `Q_b / D`; after `len` digits the distance
/// is `(sum_b |c_b D - Q_b len| + D * off) / (len D)` where `off` counts
/// occurrences of blocks outside the support.
#[derive(Debug, Clone)]
pub struct DistanceTracker {
    k: usize,
    den: BigInt,
    target: HashMap<Block, BigInt>,
    counts: HashMap<Block, u64>,
    off_support: u64,
    window: VecDeque<Digit>,
    len: usize,
}

impl DistanceTracker {
    pub fn new(q: &SimplexVector) -> Self {
        let (den, scaled) = q.scaled_entries();
        DistanceTracker {
            k: q.k(),
            den,
            target: scaled.into_iter().collect(),
            counts: HashMap::new(),
            off_support: 0,
            window: VecDeque::with_capacity(q.k()),
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, d: Digit) {
        self.len += 1;
        if self.window.len() == self.k {
            self.window.pop_front();
        }
        self.window.push_back(d);
        if self.window.len() < self.k {
            return;
        }
        let digits: Vec<Digit> = self.window.iter().copied().collect();
        let block = Block::from_slice_unchecked(&digits);
        if self.target.contains_key(&block) {
            *self.counts.entry(block).or_default() += 1;
        } else {
            self.off_support += 1;
        }
    }

    pub fn push_word(&mut self, w: &Word) {
        for &d in w.digits() {
            self.push(d);
        }
    }

    /// Numerator over `len * D`.
    fn numerator(&self) -> BigInt {
        let len = BigInt::from(self.len);
        let mut total = &self.den * self.off_support;
        for (block, q) in &self.target {
            let c = self.counts.get(block).copied().unwrap_or(0);
            total += (&self.den * c - q * &len).abs();
        }
        total
    }

    /// Current distance; panics before the first digit.
    pub fn distance(&self) -> BigRational {
        assert!(self.len > 0, "distance of an empty prefix");
        BigRational::new(self.numerator(), &self.den * self.len)
    }

    /// Exact test of `distance <= 1/h`.
    pub fn within_inverse(&self, h: u64) -> bool {
        self.numerator() * h <= &self.den * self.len
    }

    /// Exact test of `distance <= tol`.
    pub fn within(&self, tol: &BigRational) -> bool {
        self.numerator() * tol.denom() <= tol.numer() * &self.den * self.len
    }
}

/// Exact `l1` distance between `P_k(w, |w|)` and `q`.
pub fn distance_to_target(w: &Word, q: &SimplexVector) -> BigRational {
    let mut tracker = DistanceTracker::new(q);
    tracker.push_word(w);
    if tracker.is_empty() {
        return BigRational::from_integer(BigInt::from(if q.entries().is_empty() { 0 } else { 1 }));
    }
    tracker.distance()
}

/// Membership in `Z_n(q, N, k)`.
pub fn is_in_zn(w: &Word, spec: &ZnSpec) -> bool {
    if w.len() < spec.min_length || w.is_empty() {
        return false;
    }
    if w.max_digit().is_some_and(|m| m > spec.cutoff) {
        return false;
    }
    let mut tracker = DistanceTracker::new(&spec.q);
    tracker.push_word(w);
    tracker.within_inverse(spec.n)
}

/// Edge labels of one Eulerian circuit per connected component of the
/// multigraph whose `(k-1)`-block vertices are joined by `mult[b]` copies of
/// edge `b`. Each circuit is rotated to start with its starting vertex, so
/// reading it cyclically reproduces the edge multiset.
fn euler_cycles(k: usize, mult: &BTreeMap<Block, usize>) -> Vec<Vec<Digit>> {
    // adjacency: vertex -> (label -> remaining multiplicity), smallest label first
    let mut adjacency: BTreeMap<Vec<Digit>, BTreeMap<Digit, usize>> = BTreeMap::new();
    for (block, &m) in mult {
        if m > 0 {
            let d = block.digits();
            *adjacency.entry(d[..k - 1].to_vec()).or_default().entry(d[k - 1]).or_default() += m;
        }
    }
    let mut cycles = Vec::new();
    while let Some(start) = adjacency.iter().find(|(_, out)| !out.is_empty()).map(|(v, _)| v.clone()) {
        let mut stack: Vec<(Vec<Digit>, Option<Digit>)> = vec![(start.clone(), None)];
        let mut labels = Vec::new();
        while let Some((vertex, _)) = stack.last() {
            let out = adjacency.get_mut(vertex).expect("vertex present");
            match out.iter_mut().next() {
                Some((&label, remaining)) => {
                    *remaining -= 1;
                    if *remaining == 0 {
                        out.remove(&label);
                    }
                    let mut next = vertex.clone();
                    if !next.is_empty() {
                        next.remove(0);
                        next.push(label);
                    }
                    adjacency.entry(next.clone()).or_default();
                    stack.push((next, Some(label)));
                }
                None => {
                    if let Some((_, Some(label))) = stack.pop() {
                        labels.push(label);
                    }
                }
            }
        }
        labels.reverse();
        let rotate = (labels.len() - (k - 1) % labels.len()) % labels.len();
        labels.rotate_left(rotate);
        cycles.push(labels);
    }
    cycles
}

/// The cyclic word whose block counts (read with wraparound) are exactly
/// `q * D`, as a concatenation of per-component circuits.
pub fn eulerian_word(q: &SimplexVector) -> Result<(Word, Vec<usize>), FactoryError> {
    let (den, scaled) = q.scaled_entries();
    let limit = BigInt::from(MAX_WORD_LENGTH);
    if den > limit {
        return Err(FactoryError::TooManyEdges { count: den });
    }
    let mult: BTreeMap<Block, usize> =
        scaled.into_iter().map(|(b, c)| (b, c.to_usize().expect("bounded by D"))).collect();
    let cycles = euler_cycles(q.k(), &mult);
    let lengths = cycles.iter().map(Vec::len).collect();
    let digits: Vec<Digit> = cycles.into_iter().flatten().collect();
    Ok((Word::new(digits).expect("labels come from blocks"), lengths))
}

/// `cycle_1^reps cycle_2^reps ...`: each component repeated in place, so
/// the only foreign blocks sit at the component junctions.
fn repeat_components(base: &Word, lengths: &[usize], reps: usize) -> Word {
    let mut digits = Vec::with_capacity(base.len() * reps);
    let mut start = 0;
    for &len in lengths {
        let cycle = &base.digits()[start..start + len];
        for _ in 0..reps {
            digits.extend_from_slice(cycle);
        }
        start += len;
    }
    Word::new(digits).expect("labels are positive")
}

/// A word in `Z_n(q, N, k)`, built from repeated Eulerian circuits.
pub fn construct_zn_word(spec: &ZnSpec) -> Result<Word, FactoryError> {
    let (base, lengths) = eulerian_word(&spec.q)?;
    let base_len = base.len();
    let floor = spec.min_length.max((spec.n as usize).saturating_mul(spec.k.saturating_sub(1))).max(1);
    let mut reps = floor.div_ceil(base_len);
    loop {
        if reps.checked_mul(base_len).is_none_or(|l| l > MAX_WORD_LENGTH) {
            let w = repeat_components(&base, &lengths, (reps / 2).max(1));
            return Err(FactoryError::Residual {
                length: w.len(),
                residual: distance_to_target(&w, &spec.q),
                n: spec.n,
            });
        }
        let w = repeat_components(&base, &lengths, reps);
        if is_in_zn(&w, spec) {
            return Ok(w);
        }
        reps *= 2;
    }
}

/// `L = t + |gamma| * max(n, (t/k) * max(1, M^k / N^k))`, rounded up.
/// `M` is ignored when `t == 0`. Saturates at `usize::MAX`.
pub fn padding_length(t: usize, gamma_len: usize, k: usize, n: u64, max_digit: Digit, cutoff: Digit) -> usize {
    assert!(k >= 1 && cutoff >= 1, "order and cutoff must be positive");
    let big = |x: u64| BigRational::from_integer(BigInt::from(x));
    let exponent = k as u32;
    let ratio = BigRational::new(
        num_traits::pow(BigInt::from(max_digit.max(1)), exponent as usize),
        num_traits::pow(BigInt::from(cutoff), exponent as usize),
    );
    let inner = if ratio > BigRational::one() { ratio } else { BigRational::one() };
    let prefix_term = BigRational::new(BigInt::from(t), BigInt::from(k)) * inner;
    let term = if prefix_term > big(n) { prefix_term } else { big(n) };
    let total = big(t as u64) + big(gamma_len as u64) * term;
    total.ceil().to_integer().to_usize().unwrap_or(usize::MAX)
}

/// Result of [`extend_to_target`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extension {
    pub word: Word,
    pub gamma: Word,
    pub padding: usize,
}

/// `omega gamma gamma ...` cut at length `ell`.
pub fn extend_with(omega: &Word, gamma: &Word, ell: usize) -> Word {
    let tail = periodic_truncate(gamma, ell.saturating_sub(omega.len())).expect("gamma is nonempty");
    let mut out = omega.prefix(ell.min(omega.len())).expect("in range");
    out.append(&tail);
    out
}

/// Extends `omega` by a periodic `Z_n` word so that the first `ell` digits
/// have `k`-block frequencies within `6/n` of `q`.
pub fn extend_to_target(omega: &Word, q: &SimplexVector, n: u64, ell: usize) -> Result<Extension, FactoryError> {
    let spec = ZnSpec::new(q.clone(), n)?;
    let gamma = construct_zn_word(&spec)?;
    let padding = padding_length(omega.len(), gamma.len(), spec.k, n, omega.max_digit().unwrap_or(1), spec.cutoff);
    if ell < padding {
        return Err(FactoryError::BelowPadding { ell, required: padding });
    }
    let word = extend_with(omega, &gamma, ell);
    debug_assert!(
        distance_to_target(&word, q) <= BigRational::new(BigInt::from(6), BigInt::from(n)),
        "padding bound violated"
    );
    Ok(Extension { word, gamma, padding })
}
