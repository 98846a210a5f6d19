//! Finite words over the positive integers, block counting and periods.
//!
//! Start positions follow the "full block fits" rule: position `i` of a word
//! `w` contributes to the count of a block of length `k` only when
//! `i + k <= w.len()`. The divisor of a frequency is always the requested
//! prefix length `n`, so the entries of a frequency vector sum to
//! `(n - k + 1) / n` whenever `n == w.len()`.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A single symbol of an expansion. Always `>= 1`.
pub type Digit = u64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordsError {
    #[error("digit at position {index} is {value}; digits must be >= 1")]
    InvalidDigit { index: usize, value: Digit },
    #[error("blocks must contain at least one digit")]
    EmptyBlock,
    #[error("prefix length {n} exceeds word length {len}")]
    OutOfRange { n: usize, len: usize },
    #[error("block length {k} exceeds prefix length {n}")]
    InvalidOrder { k: usize, n: usize },
    #[error("cannot parse digits from {0:?}")]
    Parse(String),
}

fn check_digits(digits: &[Digit]) -> Result<(), WordsError> {
    match digits.iter().position(|&d| d == 0) {
        Some(index) => Err(WordsError::InvalidDigit { index, value: 0 }),
        None => Ok(()),
    }
}

fn parse_digit_list(text: &str) -> Result<Vec<Digit>, WordsError> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|part| part.trim().parse::<Digit>().map_err(|_| WordsError::Parse(text.to_string())))
        .collect()
}

fn write_digits(f: &mut fmt::Formatter<'_>, digits: &[Digit]) -> fmt::Result {
    for (i, d) in digits.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{d}")?;
    }
    Ok(())
}

/// A finite word; serializes as a JSON array of integers.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Word(Vec<Digit>);

impl Word {
    pub fn new(digits: Vec<Digit>) -> Result<Self, WordsError> {
        check_digits(&digits)?;
        Ok(Word(digits))
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// `d` repeated `len` times.
    pub fn constant(d: Digit, len: usize) -> Result<Self, WordsError> {
        Word::new(vec![d; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn digits(&self) -> &[Digit] {
        &self.0
    }

    pub fn into_digits(self) -> Vec<Digit> {
        self.0
    }

    /// Largest digit, or `None` for the empty word.
    pub fn max_digit(&self) -> Option<Digit> {
        self.0.iter().copied().max()
    }

    pub fn prefix(&self, n: usize) -> Result<Word, WordsError> {
        if n > self.len() {
            return Err(WordsError::OutOfRange { n, len: self.len() });
        }
        Ok(Word(self.0[..n].to_vec()))
    }

    pub fn push(&mut self, d: Digit) -> Result<(), WordsError> {
        if d == 0 {
            return Err(WordsError::InvalidDigit { index: self.len(), value: d });
        }
        self.0.push(d);
        Ok(())
    }

    pub fn append(&mut self, other: &Word) {
        self.0.extend_from_slice(&other.0);
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut out = self.clone();
        out.append(other);
        out
    }

    /// Parses the compact text format `1,2,1,3`.
    pub fn parse_compact(text: &str) -> Result<Self, WordsError> {
        Word::new(parse_digit_list(text)?)
    }

    pub fn to_compact(&self) -> String {
        self.to_string()
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let digits = Vec::<Digit>::deserialize(deserializer)?;
        Word::new(digits).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_digits(f, &self.0)
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word[{self}]")
    }
}

impl FromStr for Word {
    type Err = WordsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Word::parse_compact(s)
    }
}

impl From<Block> for Word {
    fn from(block: Block) -> Self {
        Word(block.0)
    }
}

/// A nonempty word used as a statistic key; its length is the order `k`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Block(Vec<Digit>);

impl Block {
    pub fn new(digits: Vec<Digit>) -> Result<Self, WordsError> {
        if digits.is_empty() {
            return Err(WordsError::EmptyBlock);
        }
        check_digits(&digits)?;
        Ok(Block(digits))
    }

    /// `d` repeated `k` times.
    pub fn repeated(d: Digit, k: usize) -> Result<Self, WordsError> {
        Block::new(vec![d; k])
    }

    /// Builds a block from a slice already known to be valid.
    pub(crate) fn from_slice_unchecked(digits: &[Digit]) -> Self {
        debug_assert!(!digits.is_empty() && digits.iter().all(|&d| d >= 1));
        Block(digits.to_vec())
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn digits(&self) -> &[Digit] {
        &self.0
    }

    pub fn max_digit(&self) -> Digit {
        *self.0.iter().max().expect("blocks are nonempty")
    }

    /// Parses either the compact comma format (`1,2`) or, when no comma is
    /// present, one decimal digit per character (`112`).
    pub fn parse(text: &str) -> Result<Self, WordsError> {
        let text = text.trim();
        let digits = if text.contains(',') {
            parse_digit_list(text)?
        } else {
            text.chars()
                .map(|c| c.to_digit(10).map(Digit::from).ok_or_else(|| WordsError::Parse(text.to_string())))
                .collect::<Result<Vec<_>, _>>()?
        };
        Block::new(digits)
    }
}

impl<'de> Deserialize<'de> for Block {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let digits = Vec::<Digit>::deserialize(deserializer)?;
        Block::new(digits).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_digits(f, &self.0)
    }
}

impl fmt::Debug for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Block[{self}]")
    }
}

impl FromStr for Block {
    type Err = WordsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Block::parse(s)
    }
}

impl TryFrom<Word> for Block {
    type Error = WordsError;

    fn try_from(word: Word) -> Result<Self, Self::Error> {
        Block::new(word.0)
    }
}

/// Read access to a finitely supported block-indexed vector.
pub trait BlockWeights<V> {
    fn order(&self) -> usize;
    fn weights(&self) -> &BTreeMap<Block, V>;
}

/// Block frequencies of order `k` over a prefix of length `n`.
///
/// `V` is [`BigRational`] for exact statistics and `f64` for fast ones;
/// which one is produced is always chosen by the caller.
#[derive(Clone, Debug, PartialEq)]
pub struct FreqVector<V = BigRational> {
    k: usize,
    n: usize,
    entries: BTreeMap<Block, V>,
}

impl<V> FreqVector<V> {
    /// Callers guarantee every key has length `k`.
    pub fn from_entries(k: usize, n: usize, entries: BTreeMap<Block, V>) -> Self {
        debug_assert!(entries.keys().all(|b| b.k() == k));
        FreqVector { k, n, entries }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// The sample length used as denominator.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &BTreeMap<Block, V> {
        &self.entries
    }

    pub fn get(&self, block: &Block) -> Option<&V> {
        self.entries.get(block)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl FreqVector<BigRational> {
    pub fn total(&self) -> BigRational {
        self.entries.values().fold(BigRational::from_integer(0.into()), |acc, v| acc + v)
    }

    pub fn to_f64(&self) -> FreqVector<f64> {
        FreqVector {
            k: self.k,
            n: self.n,
            entries: self
                .entries
                .iter()
                .map(|(b, v)| (b.clone(), crate::exact::rational_to_f64(v)))
                .collect(),
        }
    }
}

impl<V> BlockWeights<V> for FreqVector<V> {
    fn order(&self) -> usize {
        self.k
    }

    fn weights(&self) -> &BTreeMap<Block, V> {
        &self.entries
    }
}

/// Number of start positions `0 <= i < n` with `i + k <= w.len()` where `b`
/// occurs in `w`.
pub fn count_block(w: &Word, b: &Block, n: usize) -> Result<u64, WordsError> {
    if n > w.len() {
        return Err(WordsError::OutOfRange { n, len: w.len() });
    }
    let k = b.k();
    if k > w.len() {
        return Ok(0);
    }
    let last_start = n.min(w.len() - k + 1);
    let digits = w.digits();
    Ok((0..last_start).filter(|&i| digits[i..i + k] == *b.digits()).count() as u64)
}

/// Occurrence counts of every length-`k` block among the first `n` start
/// positions of `w`.
pub fn block_counts(w: &Word, k: usize, n: usize) -> Result<BTreeMap<Block, u64>, WordsError> {
    if k == 0 {
        return Err(WordsError::EmptyBlock);
    }
    if n > w.len() {
        return Err(WordsError::OutOfRange { n, len: w.len() });
    }
    if k > n {
        return Err(WordsError::InvalidOrder { k, n });
    }
    let digits = w.digits();
    let last_start = n.min(w.len() + 1 - k);
    let mut counts: HashMap<&[Digit], u64> = HashMap::new();
    for i in 0..last_start {
        *counts.entry(&digits[i..i + k]).or_default() += 1;
    }
    Ok(counts.into_iter().map(|(b, c)| (Block::from_slice_unchecked(b), c)).collect())
}

/// Exact frequency vector `P_k(w, n)`.
pub fn freq_vector(w: &Word, k: usize, n: usize) -> Result<FreqVector<BigRational>, WordsError> {
    let counts = block_counts(w, k, n)?;
    let den = BigInt::from(n);
    let entries = counts
        .into_iter()
        .map(|(b, c)| (b, BigRational::new(BigInt::from(c), den.clone())))
        .collect();
    Ok(FreqVector { k, n, entries })
}

/// Float frequency vector `P_k(w, n)`.
pub fn freq_vector_f64(w: &Word, k: usize, n: usize) -> Result<FreqVector<f64>, WordsError> {
    let counts = block_counts(w, k, n)?;
    let entries = counts.into_iter().map(|(b, c)| (b, c as f64 / n as f64)).collect();
    Ok(FreqVector { k, n, entries })
}

/// Border array of `s`: `border[i]` is the length of the longest proper
/// border of `s[..=i]`.
fn border_array(s: &[Digit]) -> Vec<usize> {
    let mut border = vec![0usize; s.len()];
    let mut len = 0;
    for i in 1..s.len() {
        while len > 0 && s[i] != s[len] {
            len = border[len - 1];
        }
        if s[i] == s[len] {
            len += 1;
        }
        border[i] = len;
    }
    border
}

/// Smallest `p` with `b[p + j] == b[j]` for every valid `j`.
pub fn basic_period(b: &Block) -> usize {
    let border = border_array(b.digits());
    b.k() - border[b.k() - 1]
}

/// The length-`basic_period(b)` prefix of `b`.
pub fn basic_factor(b: &Block) -> Word {
    Word(b.digits()[..basic_period(b)].to_vec())
}

/// First `total_length` digits of `seed seed seed ...`.
pub fn periodic_truncate(seed: &Word, total_length: usize) -> Result<Word, WordsError> {
    if seed.is_empty() {
        return Err(WordsError::EmptyBlock);
    }
    Ok(Word(seed.digits().iter().copied().cycle().take(total_length).collect()))
}

/// Incremental block counter over a growing prefix.
///
/// After `n` digits it holds the counts of every length-`k` block that fits
/// inside those `n` digits, which is the statistic of `P_k(prefix, n)`.
#[derive(Clone, Debug)]
pub struct BlockCounter {
    k: usize,
    n: usize,
    window: VecDeque<Digit>,
    counts: HashMap<Block, u64>,
}

impl BlockCounter {
    pub fn new(k: usize) -> Self {
        assert!(k >= 1, "block length must be positive");
        BlockCounter { k, n: 0, window: VecDeque::with_capacity(k), counts: HashMap::new() }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Consumes one digit; returns the block completed by it, if any.
    pub fn push(&mut self, d: Digit) -> Option<Block> {
        self.n += 1;
        if self.window.len() == self.k {
            self.window.pop_front();
        }
        self.window.push_back(d);
        if self.window.len() < self.k {
            return None;
        }
        let block = Block(self.window.iter().copied().collect());
        *self.counts.entry(block.clone()).or_default() += 1;
        Some(block)
    }

    pub fn count(&self, block: &Block) -> u64 {
        self.counts.get(block).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &HashMap<Block, u64> {
        &self.counts
    }
}
