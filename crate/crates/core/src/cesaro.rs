//! Streaming iterated Cesàro averages of block frequencies.
//!
//! With `c_b(n)` the number of completed occurrences of `b` after `n`
//! digits, level 0 is `P0(n) = c_b(n) / n` and level `l` is the running mean
//! `Pl(n) = (P(l-1)(1) + ... + P(l-1)(n)) / n`.
//!
//! Every level-0 value changes at every step through its denominator, so a
//! direct update touches the whole support. Instead the ladder keeps the
//! global iterated harmonic sums
//!
//! ```text
//! H0(n) = 1,   Hm(n) = Hm(n-1) + H(m-1)(n) / n
//! ```
//!
//! and, per block, coefficients `a_0 = c, a_1, ..., a_r` such that
//! `n * Pl(n) = sum_{m=0..l} a_{l-m} * Hm(n)`. The coefficients only change
//! when the block's count changes: an increment at step `n` adds `d_0 = 1`
//! and `d_j = -sum_{m=1..j} d_{j-m} * Hm(n-1)`, which leaves every level
//! `>= 1` unchanged at `n - 1` and lets the new count flow in from step `n`
//! on. Each step therefore costs `O(r)` big-integer operations for the
//! tables plus `O(r^2)` for the one block that completes.
//!
//! Exact mode keeps `Hm(n) * L(n)^m` as integers, where `L(n) = lcm(1..n)`,
//! and every coefficient `a_j` scaled by `L(s)^j` for a per-block scale `s`
//! that is advanced lazily. Float mode runs the same recurrences with
//! compensated summation.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::Frac;
use crate::words::{Block, Digit, FreqVector, Word};

/// Default limit on exact pushes; denominators grow like `lcm(1..n)^r`.
pub const DEFAULT_EXACT_CAP: usize = 5000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CesaroError {
    #[error("digit must be >= 1, got {0}")]
    InvalidDigit(Digit),
    #[error("block length must be positive")]
    ZeroOrder,
    #[error("level {r} exceeds the ladder's maximum level {r_max}")]
    Level { r: usize, r_max: usize },
    #[error("no values yet: {n} digits consumed")]
    Empty { n: usize },
    #[error("exact mode is capped at {cap} digits")]
    ExactCap { cap: usize },
    #[error("block {block} has length {len}, ladder order is {k}")]
    WrongLength { block: Block, len: usize, k: usize },
    #[error("block {0} is not tracked by this ladder")]
    Untracked(Block),
    #[error("operation needs an exact-mode ladder")]
    NotExact,
    #[error("no history retained for n = {n}")]
    MissingHistory { n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

#[derive(Debug, Clone)]
pub struct LadderConfig {
    pub k: usize,
    pub r_max: usize,
    pub mode: Mode,
    pub exact_cap: usize,
    /// Restricts the ladder to these blocks; `None` follows every block seen.
    pub track: Option<BTreeSet<Block>>,
    /// Number of past steps whose values are retained for gap queries.
    pub history: usize,
}

impl LadderConfig {
    pub fn new(k: usize, r_max: usize, mode: Mode) -> Self {
        LadderConfig { k, r_max, mode, exact_cap: DEFAULT_EXACT_CAP, track: None, history: 0 }
    }

    pub fn exact_cap(mut self, cap: usize) -> Self {
        self.exact_cap = cap;
        self
    }

    pub fn track<I: IntoIterator<Item = Block>>(mut self, blocks: I) -> Self {
        self.track = Some(blocks.into_iter().collect());
        self
    }

    pub fn history(mut self, steps: usize) -> Self {
        self.history = steps;
        self
    }
}

/// Exact level values sharing one denominator; see
/// [`CesaroLadder::level_numerators`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelNumerators {
    pub den: BigInt,
    pub values: Vec<BigInt>,
    pub total: BigInt,
}

/// Neumaier compensated sum.
#[derive(Clone, Copy, Debug, Default)]
struct Compensated {
    sum: f64,
    comp: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// If `n` is a prime power `p^e`, then `lcm(1..n) = p * lcm(1..n-1)`.
fn lcm_step(n: usize) -> u64 {
    if n < 2 {
        return 1;
    }
    let n = n as u64;
    let mut p = 2;
    while p * p <= n && !n.is_multiple_of(p) {
        p += 1;
    }
    if p * p > n {
        return n;
    }
    let mut m = n;
    while m.is_multiple_of(p) {
        m /= p;
    }
    if m == 1 {
        p
    } else {
        1
    }
}

struct ExactTables {
    /// `lcm_steps[t] = L(t) / L(t-1)`.
    lcm_steps: Vec<u64>,
    /// `L(n)^l` for `l = 0..=r_max`.
    lcm_powers: Vec<BigInt>,
    /// `Hm(n) * L(n)^m` for `m = 0..=r_max`.
    hnum: Vec<BigInt>,
}

impl ExactTables {
    fn new(r_max: usize) -> Self {
        let mut hnum = vec![BigInt::zero(); r_max + 1];
        hnum[0] = BigInt::one();
        ExactTables { lcm_steps: vec![1], lcm_powers: vec![BigInt::one(); r_max + 1], hnum }
    }

    /// `L(to) / L(from)`.
    fn ratio(&self, from: usize, to: usize) -> BigInt {
        let mut ratio = BigInt::one();
        let mut small: u64 = 1;
        for &p in &self.lcm_steps[from + 1..=to] {
            if p == 1 {
                continue;
            }
            match small.checked_mul(p) {
                Some(v) => small = v,
                None => {
                    ratio *= small;
                    small = p;
                }
            }
        }
        ratio * small
    }

    /// Moves the tables from `n - 1` to `n`.
    fn advance(&mut self, n: usize) {
        let step = lcm_step(n);
        self.lcm_steps.push(step);
        let r_max = self.hnum.len() - 1;
        if step != 1 {
            let p = BigInt::from(step);
            let mut pow = BigInt::one();
            for l in 1..=r_max {
                pow *= &p;
                self.lcm_powers[l] *= &pow;
                self.hnum[l] *= &pow;
            }
        }
        if r_max == 0 {
            return;
        }
        let l_over_n = &self.lcm_powers[1] / BigInt::from(n);
        for m in 1..=r_max {
            let add = &self.hnum[m - 1] * &l_over_n;
            self.hnum[m] += add;
        }
    }
}

struct FloatTables {
    /// `Hm(n)` for `m = 0..=r_max`.
    h: Vec<Compensated>,
}

impl FloatTables {
    fn new(r_max: usize) -> Self {
        let mut h = vec![Compensated::default(); r_max + 1];
        h[0].add(1.0);
        FloatTables { h }
    }

    fn advance(&mut self, n: usize) {
        let inv = 1.0 / n as f64;
        for m in 1..self.h.len() {
            let add = self.h[m - 1].value() * inv;
            self.h[m].add(add);
        }
    }
}

struct ExactBlock {
    scale: usize,
    /// `a_j * L(scale)^j`; `coeffs[0]` is the count.
    coeffs: Vec<BigInt>,
}

impl ExactBlock {
    fn rescale(&mut self, tables: &ExactTables, to: usize) {
        if self.scale >= to {
            return;
        }
        let ratio = tables.ratio(self.scale, to);
        if !ratio.is_one() {
            let mut pow = BigInt::one();
            for c in self.coeffs.iter_mut().skip(1) {
                pow *= &ratio;
                if !c.is_zero() {
                    *c *= &pow;
                }
            }
        }
        self.scale = to;
    }
}

struct FloatBlock {
    coeffs: Vec<Compensated>,
}

// `total` follows the sum over all blocks, which completes once per step.
enum Engine {
    Exact { tables: ExactTables, blocks: HashMap<Block, ExactBlock>, total: ExactBlock },
    Float { tables: FloatTables, blocks: HashMap<Block, FloatBlock>, total: FloatBlock },
}

#[derive(Clone, Debug)]
enum Sample {
    Exact(Frac),
    Float(f64),
}

struct HistoryEntry {
    n: usize,
    values: BTreeMap<Block, Vec<Sample>>,
}

/// Streaming state for levels `0..=r_max` of all blocks of order `k`.
///
/// Single writer: digits are pushed in order and values are read at the
/// current length. Reads in exact mode may rescale internal coefficients,
/// hence `&mut self`.
pub struct CesaroLadder {
    config: LadderConfig,
    n: usize,
    window: VecDeque<Digit>,
    engine: Engine,
    history: VecDeque<HistoryEntry>,
}

impl CesaroLadder {
    pub fn new(config: LadderConfig) -> Result<Self, CesaroError> {
        if config.k == 0 {
            return Err(CesaroError::ZeroOrder);
        }
        if let Some(track) = &config.track {
            if let Some(b) = track.iter().find(|b| b.k() != config.k) {
                return Err(CesaroError::WrongLength { block: b.clone(), len: b.k(), k: config.k });
            }
        }
        let engine = match config.mode {
            Mode::Exact => Engine::Exact {
                tables: ExactTables::new(config.r_max),
                blocks: HashMap::new(),
                total: ExactBlock { scale: 0, coeffs: vec![BigInt::zero(); config.r_max + 1] },
            },
            Mode::Float => Engine::Float {
                tables: FloatTables::new(config.r_max),
                blocks: HashMap::new(),
                total: FloatBlock { coeffs: vec![Compensated::default(); config.r_max + 1] },
            },
        };
        Ok(CesaroLadder { n: 0, window: VecDeque::with_capacity(config.k), engine, history: VecDeque::new(), config })
    }

    pub fn config(&self) -> &LadderConfig {
        &self.config
    }

    pub fn k(&self) -> usize {
        self.config.k
    }

    pub fn r_max(&self) -> usize {
        self.config.r_max
    }

    pub fn mode(&self) -> Mode {
        self.config.mode
    }

    /// Digits consumed so far.
    pub fn n(&self) -> usize {
        self.n
    }

    fn follows(&self, block: &Block) -> bool {
        self.config.track.as_ref().is_none_or(|t| t.contains(block))
    }

    pub fn push_digit(&mut self, d: Digit) -> Result<(), CesaroError> {
        if d == 0 {
            return Err(CesaroError::InvalidDigit(d));
        }
        if self.config.mode == Mode::Exact && self.n >= self.config.exact_cap {
            return Err(CesaroError::ExactCap { cap: self.config.exact_cap });
        }
        let k = self.config.k;
        if self.window.len() == k {
            self.window.pop_front();
        }
        self.window.push_back(d);
        let completed = if self.window.len() == k {
            let digits: Vec<Digit> = self.window.iter().copied().collect();
            Some(Block::new(digits).expect("window digits are positive"))
        } else {
            None
        };
        let full = completed.is_some();
        let completed = completed.filter(|b| self.follows(b));
        let prev = self.n;
        self.n += 1;
        let n = self.n;
        let r_max = self.config.r_max;
        match &mut self.engine {
            Engine::Exact { tables, blocks, total } => {
                if full {
                    // d_j scaled by L(prev)^j
                    let mut delta = vec![BigInt::one(); r_max + 1];
                    for j in 1..=r_max {
                        let mut acc = BigInt::zero();
                        for m in 1..=j {
                            if !tables.hnum[m].is_zero() {
                                acc += &delta[j - m] * &tables.hnum[m];
                            }
                        }
                        delta[j] = -acc;
                    }
                    total.rescale(tables, prev);
                    for (c, dj) in total.coeffs.iter_mut().zip(&delta) {
                        *c += dj;
                    }
                    if let Some(block) = completed {
                        let state = blocks
                            .entry(block)
                            .or_insert_with(|| ExactBlock { scale: prev, coeffs: vec![BigInt::zero(); r_max + 1] });
                        state.rescale(tables, prev);
                        for (c, dj) in state.coeffs.iter_mut().zip(delta) {
                            *c += dj;
                        }
                    }
                }
                tables.advance(n);
            }
            Engine::Float { tables, blocks, total } => {
                if full {
                    let mut delta = vec![1.0f64; r_max + 1];
                    for j in 1..=r_max {
                        let mut acc = Compensated::default();
                        for m in 1..=j {
                            acc.add(delta[j - m] * tables.h[m].value());
                        }
                        delta[j] = -acc.value();
                    }
                    for (c, dj) in total.coeffs.iter_mut().zip(&delta) {
                        c.add(*dj);
                    }
                    if let Some(block) = completed {
                        let state = blocks
                            .entry(block)
                            .or_insert_with(|| FloatBlock { coeffs: vec![Compensated::default(); r_max + 1] });
                        for (c, dj) in state.coeffs.iter_mut().zip(delta) {
                            c.add(dj);
                        }
                    }
                }
                tables.advance(n);
            }
        }
        if self.config.history > 0 {
            self.record_history();
        }
        Ok(())
    }

    pub fn push_word(&mut self, w: &Word) -> Result<(), CesaroError> {
        w.digits().iter().try_for_each(|&d| self.push_digit(d))
    }

    fn check_query(&self, block: &Block, r: usize) -> Result<(), CesaroError> {
        if r > self.config.r_max {
            return Err(CesaroError::Level { r, r_max: self.config.r_max });
        }
        if self.n == 0 {
            return Err(CesaroError::Empty { n: 0 });
        }
        if block.k() != self.config.k {
            return Err(CesaroError::WrongLength { block: block.clone(), len: block.k(), k: self.config.k });
        }
        if !self.follows(block) {
            return Err(CesaroError::Untracked(block.clone()));
        }
        Ok(())
    }

    /// Current occurrence count of `block`.
    pub fn count(&self, block: &Block) -> u64 {
        match &self.engine {
            Engine::Exact { blocks, .. } => {
                blocks.get(block).and_then(|s| u64::try_from(&s.coeffs[0]).ok()).unwrap_or(0)
            }
            Engine::Float { blocks, .. } => blocks.get(block).map_or(0, |s| s.coeffs[0].value().round() as u64),
        }
    }

    /// Exact `P^(r)(block, n)` at the current `n`, unreduced.
    pub fn value(&mut self, block: &Block, r: usize) -> Result<Frac, CesaroError> {
        self.check_query(block, r)?;
        let nums = self.level_numerators(std::slice::from_ref(block), r)?;
        Ok(Frac::new(nums.values[0].clone(), nums.den))
    }

    /// Numerators of `P^(r)` for `blocks` and for the total mass over all
    /// blocks, over the shared denominator `n * lcm(1..n)^r`.
    ///
    /// The total equals `(n - k + 1) / n` at level 0 and is the Cesàro
    /// average of that sequence above; blocks outside the tracked set carry
    /// exactly `total - sum(tracked)`.
    pub fn level_numerators(&mut self, blocks: &[Block], r: usize) -> Result<LevelNumerators, CesaroError> {
        if r > self.config.r_max {
            return Err(CesaroError::Level { r, r_max: self.config.r_max });
        }
        if self.n == 0 {
            return Err(CesaroError::Empty { n: 0 });
        }
        let n = self.n;
        let Engine::Exact { tables, blocks: states, total } = &mut self.engine else {
            return Err(CesaroError::NotExact);
        };
        let mut numerator = |state: &mut ExactBlock| {
            if r == 0 {
                return state.coeffs[0].clone();
            }
            state.rescale(tables, n);
            let mut num = BigInt::zero();
            for m in 0..=r {
                let c = &state.coeffs[r - m];
                if !c.is_zero() {
                    num += c * &tables.hnum[m];
                }
            }
            num
        };
        let mut values = Vec::with_capacity(blocks.len());
        for block in blocks {
            values.push(states.get_mut(block).map_or_else(BigInt::zero, &mut numerator));
        }
        let total = numerator(total);
        let den = if r == 0 { BigInt::from(n) } else { &tables.lcm_powers[r] * n };
        Ok(LevelNumerators { den, values, total })
    }

    /// `P^(r)(block, n)` as a float; exact ladders round their exact value.
    pub fn value_f64(&mut self, block: &Block, r: usize) -> Result<f64, CesaroError> {
        if self.config.mode == Mode::Exact {
            return self.value(block, r).map(|v| v.to_f64());
        }
        self.check_query(block, r)?;
        let n = self.n as f64;
        let Engine::Float { tables, blocks, .. } = &self.engine else { unreachable!() };
        let Some(state) = blocks.get(block) else {
            return Ok(0.0);
        };
        let mut acc = Compensated::default();
        for m in 0..=r {
            acc.add(state.coeffs[r - m].value() * tables.h[m].value());
        }
        Ok(acc.value() / n)
    }

    /// Blocks with at least one occurrence so far, in order.
    pub fn seen_blocks(&self) -> Vec<Block> {
        let mut out: Vec<Block> = match &self.engine {
            Engine::Exact { blocks, .. } => blocks.keys().cloned().collect(),
            Engine::Float { blocks, .. } => blocks.keys().cloned().collect(),
        };
        out.sort();
        out
    }

    fn snapshot_blocks(&self, r: usize, blocks: Option<&[Block]>) -> Result<Vec<Block>, CesaroError> {
        if r > self.config.r_max {
            return Err(CesaroError::Level { r, r_max: self.config.r_max });
        }
        if self.n < self.config.k {
            return Err(CesaroError::Empty { n: self.n });
        }
        Ok(match blocks {
            Some(list) => list.to_vec(),
            None => self.seen_blocks(),
        })
    }

    /// `P_k^(r)(n)` restricted to `blocks` (default: every block seen).
    /// Unseen requested blocks are reported with value zero.
    pub fn snapshot(&mut self, r: usize, blocks: Option<&[Block]>) -> Result<FreqVector<BigRational>, CesaroError> {
        let list = self.snapshot_blocks(r, blocks)?;
        let mut entries = BTreeMap::new();
        for block in list {
            let v = self.value(&block, r)?.to_rational();
            entries.insert(block, v);
        }
        Ok(FreqVector::from_entries(self.config.k, self.n, entries))
    }

    pub fn snapshot_f64(&mut self, r: usize, blocks: Option<&[Block]>) -> Result<FreqVector<f64>, CesaroError> {
        let list = self.snapshot_blocks(r, blocks)?;
        let mut entries = BTreeMap::new();
        for block in list {
            let v = self.value_f64(&block, r)?;
            entries.insert(block, v);
        }
        Ok(FreqVector::from_entries(self.config.k, self.n, entries))
    }

    fn record_history(&mut self) {
        let blocks: Vec<Block> = match &self.config.track {
            Some(t) => t.iter().cloned().collect(),
            None => self.seen_blocks(),
        };
        let mut values = BTreeMap::new();
        for block in blocks {
            let samples = (0..=self.config.r_max)
                .map(|r| match self.config.mode {
                    Mode::Exact => Sample::Exact(self.value(&block, r).expect("validated block")),
                    Mode::Float => Sample::Float(self.value_f64(&block, r).expect("validated block")),
                })
                .collect();
            values.insert(block, samples);
        }
        if self.history.len() == self.config.history {
            self.history.pop_front();
        }
        self.history.push_back(HistoryEntry { n: self.n, values });
    }

    fn sample(&self, block: &Block, r: usize, n: usize) -> Result<Sample, CesaroError> {
        if r > self.config.r_max {
            return Err(CesaroError::Level { r, r_max: self.config.r_max });
        }
        let entry = self.history.iter().find(|e| e.n == n).ok_or(CesaroError::MissingHistory { n })?;
        Ok(match entry.values.get(block) {
            Some(samples) => samples[r].clone(),
            None if self.config.mode == Mode::Exact => Sample::Exact(Frac::zero()),
            None => Sample::Float(0.0),
        })
    }

    /// `|P^(r)(block, n+1) - P^(r)(block, n)|` from retained history.
    pub fn gap(&self, block: &Block, r: usize, n: usize) -> Result<BigRational, CesaroError> {
        match (self.sample(block, r, n)?, self.sample(block, r, n + 1)?) {
            (Sample::Exact(a), Sample::Exact(b)) => Ok(a.abs_diff(&b).to_rational()),
            _ => Err(CesaroError::NotExact),
        }
    }

    pub fn gap_f64(&self, block: &Block, r: usize, n: usize) -> Result<f64, CesaroError> {
        let as_f64 = |s: Sample| match s {
            Sample::Exact(v) => v.to_f64(),
            Sample::Float(v) => v,
        };
        Ok((as_f64(self.sample(block, r, n + 1)?) - as_f64(self.sample(block, r, n)?)).abs())
    }

    /// Whether the retained gap at `n` obeys `gap <= 1/(n+1)`; exact in
    /// exact mode.
    pub fn check_gap_bound(&self, block: &Block, r: usize, n: usize) -> Result<bool, CesaroError> {
        match self.config.mode {
            Mode::Exact => {
                let (Sample::Exact(a), Sample::Exact(b)) = (self.sample(block, r, n)?, self.sample(block, r, n + 1)?)
                else {
                    unreachable!()
                };
                Ok(gap_within_bound(&a, &b, n))
            }
            Mode::Float => Ok(self.gap_f64(block, r, n)? <= 1.0 / (n as f64 + 1.0) + 1e-12),
        }
    }
}

/// Exact test of `|b - a| <= 1/(n+1)`.
pub fn gap_within_bound(a: &Frac, b: &Frac, n: usize) -> bool {
    let diff = a.abs_diff(b);
    diff.numer() * BigInt::from(n + 1) <= *diff.denom()
}

/// Distinct indices `ceil(rho^i)` up to `n_max`, always including `n_max`.
pub fn geometric_checkpoints(rho: f64, n_max: usize) -> Vec<usize> {
    assert!(rho > 1.0, "checkpoint ratio must exceed 1");
    let mut out = Vec::new();
    let mut x = 1.0f64;
    while x.ceil() < n_max as f64 {
        let c = x.ceil() as usize;
        if out.last() != Some(&c) {
            out.push(c);
        }
        x *= rho;
    }
    if n_max > 0 && out.last() != Some(&n_max) {
        out.push(n_max);
    }
    out
}

/// One row of a checkpoint dump.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckpointRow {
    pub n: usize,
    pub r: usize,
    pub block: String,
    pub value_num: String,
    pub value_den: String,
}

/// Exact values of every `block` at every level `<= r_max`, sampled at
/// geometric checkpoints of the stream.
pub fn checkpoint_rows(
    stream: &Word,
    k: usize,
    r_max: usize,
    blocks: &[Block],
    rho: f64,
    exact_cap: usize,
) -> Result<Vec<CheckpointRow>, CesaroError> {
    let config = LadderConfig::new(k, r_max, Mode::Exact).exact_cap(exact_cap).track(blocks.iter().cloned());
    let mut ladder = CesaroLadder::new(config)?;
    let marks: BTreeSet<usize> = geometric_checkpoints(rho, stream.len()).into_iter().collect();
    let mut rows = Vec::new();
    for &d in stream.digits() {
        ladder.push_digit(d)?;
        if !marks.contains(&ladder.n()) {
            continue;
        }
        for r in 0..=r_max {
            for block in blocks {
                let v = ladder.value(block, r)?.to_rational();
                rows.push(CheckpointRow {
                    n: ladder.n(),
                    r,
                    block: block.to_string(),
                    value_num: v.numer().to_string(),
                    value_den: v.denom().to_string(),
                });
            }
        }
    }
    Ok(rows)
}

/// `lcm(1..n)`, used by tests and diagnostics.
pub fn lcm_upto(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, j| acc.lcm(&BigInt::from(j)))
}

/// `(j * 2^{-j}) < eps` tested exactly by cross-multiplication.
pub fn j_over_pow2_below(j: u64, eps: &BigRational) -> bool {
    let lhs = BigInt::from(j) * eps.denom();
    let rhs = eps.numer() * Pow::pow(BigInt::from(2), j);
    lhs < rhs
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Signed;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn b(text: &str) -> Block {
        Block::parse(text).unwrap()
    }

    fn word(text: &str) -> Word {
        Word::new(text.chars().map(|c| c.to_digit(10).unwrap() as Digit).collect()).unwrap()
    }

    /// Definitional recomputation: materialize every level for j = 1..n.
    fn brute(w: &Word, block: &Block, r: usize) -> Vec<BigRational> {
        let k = block.k();
        let d = w.digits();
        let mut level: Vec<BigRational> = (1..=w.len())
            .map(|n| {
                let c = (0..n).filter(|&i| i + k <= n && d[i..i + k] == *block.digits()).count();
                r_usize(c, n)
            })
            .collect();
        for _ in 0..r {
            let mut acc = BigRational::zero();
            level = level
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    acc += v;
                    &acc / BigRational::from_integer(BigInt::from(j + 1))
                })
                .collect();
        }
        level
    }

    fn r_usize(n: usize, d: usize) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn lcm_steps_match_direct_lcm() {
        let mut l = BigInt::one();
        for n in 1..200 {
            let next = l.lcm(&BigInt::from(n));
            assert_eq!(&next / &l, BigInt::from(lcm_step(n)), "n = {n}");
            l = next;
        }
    }

    #[test]
    fn constant_word_is_one_at_every_level() {
        let mut ladder = CesaroLadder::new(LadderConfig::new(1, 3, Mode::Exact)).unwrap();
        ladder.push_word(&word("11111")).unwrap();
        for level in 0..=3 {
            assert_eq!(ladder.value(&b("1"), level).unwrap().to_rational(), r(1, 1));
        }
    }

    #[test]
    fn alternating_word_level_one() {
        let mut ladder = CesaroLadder::new(LadderConfig::new(1, 1, Mode::Exact)).unwrap();
        ladder.push_word(&word("1212")).unwrap();
        assert_eq!(ladder.value(&b("2"), 1).unwrap().to_rational(), r(1, 3));
    }

    #[test]
    fn periodic_pair_block() {
        let mut ladder = CesaroLadder::new(LadderConfig::new(2, 0, Mode::Exact)).unwrap();
        ladder.push_word(&word("121212")).unwrap();
        assert_eq!(ladder.value(&b("12"), 0).unwrap().to_rational(), r(1, 2));
    }

    #[test]
    fn level_zero_snapshot_matches_freq_vector() {
        let w = word("2131123311213");
        let mut ladder = CesaroLadder::new(LadderConfig::new(2, 2, Mode::Exact)).unwrap();
        for n in 1..=w.len() {
            ladder.push_digit(w.digits()[n - 1]).unwrap();
            if n >= 2 {
                let snap = ladder.snapshot(0, None).unwrap();
                assert_eq!(snap, crate::words::freq_vector(&w.prefix(n).unwrap(), 2, n).unwrap());
            }
        }
    }

    #[test]
    fn constant_level_one_stays_constant_at_level_two() {
        let mut ladder = CesaroLadder::new(LadderConfig::new(1, 2, Mode::Exact)).unwrap();
        ladder.push_word(&word("1111")).unwrap();
        let snap = ladder.snapshot(1, None).unwrap();
        assert_eq!(snap.get(&b("1")), Some(&r(1, 1)));
        assert_eq!(ladder.value(&b("1"), 2).unwrap().to_rational(), r(1, 1));
    }

    #[test]
    fn matches_definition_on_mixed_words() {
        let w = word("3121133212312213311231321121");
        for k in 1..=2 {
            let mut ladder = CesaroLadder::new(LadderConfig::new(k, 3, Mode::Exact)).unwrap();
            let blocks: Vec<Block> = if k == 1 { vec![b("1"), b("3")] } else { vec![b("12"), b("31")] };
            let oracles: Vec<Vec<Vec<BigRational>>> =
                blocks.iter().map(|bl| (0..=3).map(|lv| brute(&w, bl, lv)).collect()).collect();
            for n in 1..=w.len() {
                ladder.push_digit(w.digits()[n - 1]).unwrap();
                for (bi, bl) in blocks.iter().enumerate() {
                    for lv in 0..=3 {
                        assert_eq!(ladder.value(bl, lv).unwrap().to_rational(), oracles[bi][lv][n - 1]);
                    }
                }
            }
        }
    }

    #[test]
    fn float_mode_tracks_exact_mode() {
        let w = word("12132112321113221231");
        let mut exact = CesaroLadder::new(LadderConfig::new(1, 3, Mode::Exact)).unwrap();
        let mut float = CesaroLadder::new(LadderConfig::new(1, 3, Mode::Float)).unwrap();
        for _ in 0..50 {
            exact.push_word(&w).unwrap();
            float.push_word(&w).unwrap();
        }
        for block in [b("1"), b("2"), b("3")] {
            for lv in 0..=3 {
                let e = exact.value(&block, lv).unwrap().to_f64();
                let f = float.value_f64(&block, lv).unwrap();
                assert!((e - f).abs() < 1e-12, "{block} r={lv}: {e} vs {f}");
            }
        }
    }

    #[test]
    fn gap_examples() {
        let config = LadderConfig::new(1, 1, Mode::Exact).track([b("1")]).history(4);
        let mut ladder = CesaroLadder::new(config).unwrap();
        ladder.push_word(&word("12")).unwrap();
        assert_eq!(ladder.gap(&b("1"), 0, 1).unwrap(), r(1, 2));
        assert!(ladder.check_gap_bound(&b("1"), 0, 1).unwrap());

        let config = LadderConfig::new(1, 2, Mode::Exact).history(3);
        let mut ladder = CesaroLadder::new(config).unwrap();
        ladder.push_word(&word("11111")).unwrap();
        assert!(ladder.gap(&b("1"), 2, 3).unwrap().is_zero());
        assert_eq!(ladder.gap(&b("1"), 0, 1), Err(CesaroError::MissingHistory { n: 1 }));
    }

    #[test]
    fn exact_cap_refuses_further_pushes() {
        let mut ladder = CesaroLadder::new(LadderConfig::new(1, 1, Mode::Exact).exact_cap(3)).unwrap();
        ladder.push_word(&word("121")).unwrap();
        assert_eq!(ladder.push_digit(1), Err(CesaroError::ExactCap { cap: 3 }));
        assert_eq!(ladder.n(), 3);
    }

    #[test]
    fn query_errors() {
        let mut ladder = CesaroLadder::new(LadderConfig::new(2, 1, Mode::Exact).track([b("12")])).unwrap();
        assert_eq!(ladder.value(&b("12"), 0), Err(CesaroError::Empty { n: 0 }));
        ladder.push_word(&word("1212")).unwrap();
        assert!(matches!(ladder.value(&b("12"), 2), Err(CesaroError::Level { r: 2, r_max: 1 })));
        assert!(matches!(ladder.value(&b("1"), 0), Err(CesaroError::WrongLength { .. })));
        assert!(matches!(ladder.value(&b("21"), 0), Err(CesaroError::Untracked(_))));
        assert_eq!(ladder.push_digit(0), Err(CesaroError::InvalidDigit(0)));
    }

    #[test]
    fn total_mass_matches_sum_over_blocks() {
        let w = word("2113121321123");
        for k in 1..=2 {
            let mut ladder = CesaroLadder::new(LadderConfig::new(k, 2, Mode::Exact)).unwrap();
            for &d in w.digits() {
                ladder.push_digit(d).unwrap();
                for lv in 0..=2 {
                    let blocks = ladder.seen_blocks();
                    let nums = ladder.level_numerators(&blocks, lv).unwrap();
                    let sum: BigInt = nums.values.iter().sum();
                    assert_eq!(sum, nums.total);
                }
            }
            let nums = ladder.level_numerators(&[], 0).unwrap();
            assert_eq!(nums.total, BigInt::from(w.len() + 1 - k));
        }
    }

    #[test]
    fn checkpoints_are_geometric() {
        assert_eq!(geometric_checkpoints(2.0, 20), vec![1, 2, 4, 8, 16, 20]);
        let marks = geometric_checkpoints(1.25, 100);
        assert!(marks.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*marks.last().unwrap(), 100);
    }

    #[test]
    fn j_over_pow2_comparison() {
        assert!(j_over_pow2_below(5, &r(1, 6)));
        assert!(!j_over_pow2_below(4, &r(1, 6)));
        assert!(!j_over_pow2_below(1, &r(1, 2)));
        assert!(j_over_pow2_below(3, &r(1, 2)));
    }

    #[test]
    fn values_stay_in_unit_interval() {
        let w = word("1122211212221111212");
        let mut ladder = CesaroLadder::new(LadderConfig::new(1, 3, Mode::Exact)).unwrap();
        for &d in w.digits() {
            ladder.push_digit(d).unwrap();
            for lv in 0..=3 {
                let v = ladder.value(&b("2"), lv).unwrap().to_rational();
                assert!(!v.is_negative() && v <= r(1, 1));
            }
        }
    }
}
