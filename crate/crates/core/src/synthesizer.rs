//! Desk-scale synthesis and verification of property P.
//!
//! A sequence of vectors `x_n` has property P when for every target `q`,
//! depth `m`, floor `i` and tolerance `eps` there is a `j >= i` with
//! `j / 2^j < eps` and `||x_n - q||_1 <= eps` for all `j < n < phi_m(2^j)`.
//! [`synthesize`] builds one digit stream that realizes a finite schedule of
//! such requirements, one stage after the other, by padding the current
//! prefix with a periodic `Z_{6h}` word. The tower `phi_m` is capped by each
//! stage's end, and every witness records whether its window was truncated.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cesaro::{j_over_pow2_below, CesaroError, CesaroLadder, LadderConfig, Mode};
use crate::exact::Frac;
use crate::serial::rational_str;
use crate::simplex::SimplexVector;
use crate::wordfactory::{construct_zn_word, extend_with, padding_length, FactoryError, ZnSpec};
use crate::words::{Block, Word};

/// Default bit budget for exact tower values.
pub const DEFAULT_TOWER_BIT_CAP: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("tower value exceeds {cap} bits at depth {depth}")]
pub struct TowerOverflow {
    pub depth: u32,
    pub cap: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthError {
    #[error("stage {stage}: {reason}")]
    InvalidStage { stage: usize, reason: String },
    #[error("schedule: {0}")]
    InvalidSchedule(String),
    #[error(transparent)]
    Factory(#[from] FactoryError),
    #[error(transparent)]
    Cesaro(#[from] CesaroError),
    #[error(transparent)]
    Tower(#[from] TowerOverflow),
}

/// `phi_m(x)`: `phi_1(x) = 2^x`, `phi_m = phi_1 o phi_(m-1)`.
pub fn tower(m: u32, x: u64, bit_cap: u64) -> Result<BigInt, TowerOverflow> {
    let mut value = BigInt::from(x);
    for depth in 1..=m {
        // 2^value has value + 1 bits
        let exponent = value.to_u64().filter(|&e| e < bit_cap).ok_or(TowerOverflow { depth, cap: bit_cap })?;
        value = BigInt::one() << exponent;
    }
    Ok(value)
}

/// `min(phi_m(x), limit)` without materializing large towers, and whether
/// the limit was hit.
pub fn tower_at_most(m: u32, x: u64, limit: usize) -> (usize, bool) {
    let mut value = x as u128;
    for _ in 0..m {
        if value >= 127 || (1u128 << value) > limit as u128 {
            return (limit, true);
        }
        value = 1u128 << value;
    }
    if value > limit as u128 {
        (limit, true)
    } else {
        (value as usize, false)
    }
}

/// How a stage's `j` is chosen during synthesis.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JPolicy {
    /// Smallest admissible `j` whose window is verified exactly.
    #[default]
    Exact,
    /// Smallest `j >= max(L, i, t+1)` with `j / 2^j < eps`, as in the
    /// padding argument; often infeasible below astronomical lengths.
    Lemma,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    pub q: SimplexVector,
    pub m: u32,
    pub i: u64,
    /// Tolerance is `1/h`.
    pub h: u64,
    pub k: usize,
    /// Last stream index belonging to this stage.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<usize>,
}

impl Stage {
    pub fn new(q: SimplexVector, m: u32, i: u64, h: u64) -> Self {
        let k = q.k();
        Stage { q, m, i, h, k, end: None }
    }

    pub fn with_end(mut self, end: usize) -> Self {
        self.end = Some(end);
        self
    }

    pub fn epsilon(&self) -> BigRational {
        BigRational::new(BigInt::one(), BigInt::from(self.h))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub max_length: usize,
    pub stages: Vec<Stage>,
    #[serde(default)]
    pub policy: JPolicy,
}

impl Schedule {
    pub fn new(max_length: usize, stages: Vec<Stage>) -> Self {
        Schedule { max_length, stages, policy: JPolicy::Exact }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        for (s, st) in self.stages.iter().enumerate() {
            let fail = |reason: String| Err(SynthError::InvalidStage { stage: s, reason });
            if st.h == 0 {
                return fail("h must be positive".into());
            }
            if st.m == 0 {
                return fail("tower depth m must be positive".into());
            }
            if st.k != st.q.k() {
                return fail(format!("k = {} but the target has order {}", st.k, st.q.k()));
            }
        }
        let ends = self.stage_ends();
        if ends.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SynthError::InvalidSchedule(format!("stage ends must increase strictly: {ends:?}")));
        }
        Ok(())
    }

    /// Stage end indices: explicit ends where given (clipped to
    /// `max_length`), otherwise `ceil(max_length^(s/S))` for stage `s` of
    /// `S`, bumped to stay strictly increasing. The last stage always ends
    /// at `max_length` unless it has an explicit end.
    pub fn stage_ends(&self) -> Vec<usize> {
        let count = self.stages.len();
        let mut ends = Vec::with_capacity(count);
        let mut prev = 0usize;
        for (s, st) in self.stages.iter().enumerate() {
            let end = match st.end {
                Some(e) => e.min(self.max_length),
                None if s + 1 == count => self.max_length,
                None => {
                    let g = (self.max_length as f64).powf((s + 1) as f64 / count as f64).ceil() as usize;
                    g.max(prev + 1).min(self.max_length)
                }
            };
            ends.push(end);
            prev = end;
        }
        ends
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub stage: usize,
    pub k: usize,
    pub r: usize,
    pub j: u64,
    /// The window is `(j, window_end]`.
    pub window_end: usize,
    /// The untruncated window would extend past `window_end`.
    pub truncated: bool,
    /// Padding bound `L` at the stage's start (synthesis only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub padding: Option<usize>,
    /// Whether `j >= L`, so the padding argument alone certifies the window.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma_certified: Option<bool>,
    #[serde(with = "rational_str")]
    pub epsilon: BigRational,
    /// Exact maximum distance to the stage target over the window.
    #[serde(with = "rational_str")]
    pub sup: BigRational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: usize,
    pub reason: String,
    /// Best (smallest) window sup among admissible `j`, if any window fits.
    #[serde(default, with = "crate::serial::opt_rational_str", skip_serializing_if = "Option::is_none")]
    pub best_sup: Option<BigRational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_j: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum StageVerdict {
    Witnessed(Witness),
    Failed(StageFailure),
}

impl StageVerdict {
    pub fn witness(&self) -> Option<&Witness> {
        match self {
            StageVerdict::Witnessed(w) => Some(w),
            StageVerdict::Failed(_) => None,
        }
    }

    pub fn is_witnessed(&self) -> bool {
        matches!(self, StageVerdict::Witnessed(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Synthesis {
    pub stream: Word,
    pub stage_ends: Vec<usize>,
    pub verdicts: Vec<StageVerdict>,
}

/// Exact `l1` distance between `P_k^(r)(stream, n)` and a target, read from
/// a ladder that tracks only the target's support.
pub struct LevelDistance {
    ladder: CesaroLadder,
    r: usize,
    blocks: Vec<Block>,
    scaled: Vec<BigInt>,
    den: BigInt,
}

impl LevelDistance {
    pub fn new(q: &SimplexVector, r: usize, exact_cap: usize) -> Result<Self, CesaroError> {
        let (den, scaled) = q.scaled_entries();
        let blocks: Vec<Block> = scaled.keys().cloned().collect();
        let config = LadderConfig::new(q.k(), r, Mode::Exact).exact_cap(exact_cap).track(blocks.iter().cloned());
        Ok(LevelDistance { ladder: CesaroLadder::new(config)?, r, blocks, scaled: scaled.into_values().collect(), den })
    }

    pub fn push(&mut self, d: u64) -> Result<(), CesaroError> {
        self.ladder.push_digit(d)
    }

    pub fn n(&self) -> usize {
        self.ladder.n()
    }

    /// Distance at the current length and level `r`.
    pub fn distance(&mut self) -> Result<Frac, CesaroError> {
        self.distance_at(self.r)
    }

    /// Distance at level `level <= r`.
    pub fn distance_at(&mut self, level: usize) -> Result<Frac, CesaroError> {
        let nums = self.ladder.level_numerators(&self.blocks, level)?;
        let mut num = BigInt::zero();
        let mut tracked = BigInt::zero();
        for (x, q) in nums.values.iter().zip(&self.scaled) {
            let diff = x * &self.den - q * &nums.den;
            num += if diff < BigInt::zero() { -diff } else { diff };
            tracked += x;
        }
        num += (nums.total - tracked) * &self.den;
        Ok(Frac::new(num, nums.den * &self.den))
    }
}

/// `d <= 1/h`.
fn within_inverse(d: &Frac, h: u64) -> bool {
    d.numer() * h <= *d.denom()
}

/// `j >= i` and `j / 2^j < 1/h`, the side conditions of a witness.
pub fn admissible_j(j: u64, i: u64, h: u64) -> bool {
    j >= i && j_over_pow2_below(j, &BigRational::new(BigInt::one(), BigInt::from(h)))
}

/// Level-`r` distances over `(start, end]`: exact `<= 1/h` flags plus float
/// approximations. With `sup_window`, also the exact maximum over it.
struct Scan {
    start: usize,
    bad: Vec<bool>,
    approx: Vec<f64>,
    sup: Option<BigRational>,
}

fn scan(
    stream: &Word,
    q: &SimplexVector,
    r: usize,
    h: u64,
    (start, end): (usize, usize),
    sup_window: Option<(usize, usize)>,
) -> Result<Scan, CesaroError> {
    let mut monitor = LevelDistance::new(q, r, end.max(1))?;
    let mut bad = Vec::with_capacity(end - start);
    let mut approx = Vec::with_capacity(end - start);
    let mut sup: Option<Frac> = None;
    for (idx, &d) in stream.digits()[..end].iter().enumerate() {
        monitor.push(d)?;
        let n = idx + 1;
        if n <= start {
            continue;
        }
        let dist = monitor.distance()?;
        bad.push(!within_inverse(&dist, h));
        approx.push(dist.to_f64());
        if let Some((lo, hi)) = sup_window {
            if n > lo && n <= hi && sup.as_ref().is_none_or(|s| dist > *s) {
                sup = Some(dist);
            }
        }
    }
    Ok(Scan { start, bad, approx, sup: sup.map(|s| s.to_rational()) })
}

impl Scan {
    /// `next_bad[i]`: first offset `>= i` whose distance exceeds the bound.
    fn next_bad(&self) -> Vec<usize> {
        let len = self.bad.len();
        let mut next = vec![len; len + 1];
        for i in (0..len).rev() {
            next[i] = if self.bad[i] { i } else { next[i + 1] };
        }
        next
    }

    /// Whether every `n` in `(j, hi]` is good.
    fn clean(&self, next_bad: &[usize], j: usize, hi: usize) -> bool {
        // offset of index n is n - start - 1
        let first = j - self.start;
        next_bad[first] + self.start + 1 > hi
    }

    fn approx_sup(&self, j: usize, hi: usize) -> f64 {
        self.approx[j - self.start..hi - self.start].iter().copied().fold(0.0, f64::max)
    }
}

/// Window end `min(phi_m(2^j) - 1, limit)` and truncation flag.
fn window_end(m: u32, j: u64, limit: usize) -> (usize, bool) {
    if j >= 64 {
        return (limit, true);
    }
    let (t, capped) = tower_at_most(m, 1u64 << j, limit.saturating_add(1));
    let full = t.saturating_sub(1);
    if capped || full > limit {
        (limit, true)
    } else {
        (full, false)
    }
}

/// Smallest admissible `j` in `[j_min, end)` whose window `(j, W_j]` lies
/// inside the scanned range and is clean.
fn search_j(st: &Stage, scan: &Scan, j_min: u64, end: usize) -> Option<(u64, usize, bool)> {
    let next_bad = scan.next_bad();
    let mut j = j_min.max(1);
    while (j as usize) < end {
        if admissible_j(j, st.i, st.h) {
            let (hi, truncated) = window_end(st.m, j, end);
            if hi > j as usize && scan.clean(&next_bad, j as usize, hi) {
                return Some((j, hi, truncated));
            }
        }
        j += 1;
    }
    None
}

/// The admissible `j` minimizing the float window sup, for failure reports.
fn best_window(st: &Stage, scan: &Scan, j_min: u64, end: usize) -> Option<(u64, usize)> {
    let mut best: Option<(f64, u64, usize)> = None;
    let mut j = j_min.max(1);
    while (j as usize) < end {
        if admissible_j(j, st.i, st.h) {
            let (hi, _) = window_end(st.m, j, end);
            if hi > j as usize {
                let s = scan.approx_sup(j as usize, hi);
                if best.is_none_or(|(b, _, _)| s < b) {
                    best = Some((s, j, hi));
                }
                if hi == end {
                    // later windows are suffixes of this one
                    break;
                }
            }
        }
        j += 1;
    }
    best.map(|(_, j, hi)| (j, hi))
}

/// Emits a stream realizing the schedule stage by stage, with exact
/// level-0 witnesses.
pub fn synthesize(schedule: &Schedule) -> Result<Synthesis, SynthError> {
    schedule.validate()?;
    let ends = schedule.stage_ends();
    let mut stream = Word::empty();
    let mut verdicts = Vec::with_capacity(schedule.stages.len());
    for (s, st) in schedule.stages.iter().enumerate() {
        let t = stream.len();
        let end = ends[s];
        let fail = |reason: String| StageVerdict::Failed(StageFailure { stage: s, reason, best_sup: None, best_j: None });
        if end <= t {
            verdicts.push(fail(format!("no room: stage starts at {t} and ends at {end}")));
            continue;
        }
        let n_param = st.h.checked_mul(6).ok_or_else(|| SynthError::InvalidStage {
            stage: s,
            reason: "h too large".into(),
        })?;
        let gamma = construct_zn_word(&ZnSpec::new(st.q.clone(), n_param)?)?;
        let max_digit = stream.max_digit().unwrap_or(1);
        let padding = padding_length(t, gamma.len(), st.k, n_param, max_digit, st.q.cutoff());
        stream = extend_with(&stream, &gamma, end);

        let found = match schedule.policy {
            JPolicy::Exact => {
                let sc = scan(&stream, &st.q, 0, st.h, (t, end), None)?;
                search_j(st, &sc, st.i.max(t as u64 + 1), end)
            }
            JPolicy::Lemma => {
                let mut j = (padding as u64).max(st.i).max(t as u64 + 1);
                while !admissible_j(j, st.i, st.h) {
                    j += 1;
                }
                let (hi, truncated) = window_end(st.m, j, end);
                (hi > j as usize).then_some((j, hi, truncated))
            }
        };
        let Some((j, hi, truncated)) = found else {
            verdicts.push(fail(format!("no admissible window inside ({t}, {end}]; padding bound is {padding}")));
            continue;
        };
        let sup = scan(&stream, &st.q, 0, st.h, (t, hi), Some((j as usize, hi)))?
            .sup
            .expect("window is nonempty");
        verdicts.push(StageVerdict::Witnessed(Witness {
            stage: s,
            k: st.k,
            r: 0,
            j,
            window_end: hi,
            truncated,
            padding: Some(padding),
            lemma_certified: Some(j as usize >= padding),
            epsilon: st.epsilon(),
            sup,
        }));
    }
    Ok(Synthesis { stream, stage_ends: ends, verdicts })
}

/// Searches, per stage, the smallest `j` with a clean level-`r` window
/// inside the stage's segment of `stream`.
pub fn verify_property_p(stream: &Word, schedule: &Schedule, r: usize) -> Result<Vec<StageVerdict>, SynthError> {
    schedule.validate()?;
    let ends: Vec<usize> = schedule.stage_ends().into_iter().map(|e| e.min(stream.len())).collect();
    let mut verdicts = Vec::with_capacity(ends.len());
    let mut start = 0;
    for (s, st) in schedule.stages.iter().enumerate() {
        let end = ends[s];
        if end <= start {
            verdicts.push(StageVerdict::Failed(StageFailure {
                stage: s,
                reason: format!("stream too short for a segment after {start}"),
                best_sup: None,
                best_j: None,
            }));
            continue;
        }
        let sc = scan(stream, &st.q, r, st.h, (start, end), None)?;
        let j_min = st.i.max(start as u64 + 1);
        let verdict = match search_j(st, &sc, j_min, end) {
            Some((j, hi, truncated)) => {
                let sup = scan(stream, &st.q, r, st.h, (start, hi), Some((j as usize, hi)))?.sup.expect("nonempty");
                StageVerdict::Witnessed(Witness {
                    stage: s,
                    k: st.k,
                    r,
                    j,
                    window_end: hi,
                    truncated,
                    padding: None,
                    lemma_certified: None,
                    epsilon: st.epsilon(),
                    sup,
                })
            }
            None => {
                let best = best_window(st, &sc, j_min, end);
                let best_sup = match best {
                    Some((j, hi)) => scan(stream, &st.q, r, st.h, (start, hi), Some((j as usize, hi)))?.sup,
                    None => None,
                };
                StageVerdict::Failed(StageFailure {
                    stage: s,
                    reason: format!("no clean level-{r} window inside ({start}, {end}]"),
                    best_sup,
                    best_j: best.map(|(j, _)| j),
                })
            }
        };
        verdicts.push(verdict);
        start = end;
    }
    Ok(verdicts)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftReport {
    pub r: usize,
    pub j_prime: u64,
    /// Level `r+1` window `(lo, hi]`.
    pub lo: usize,
    pub hi: usize,
    pub truncated: bool,
    /// Stream ends before the window opens.
    pub inconclusive: bool,
    /// `j'/2^j' < eps/3` and level `r` within `eps/3` on `(j', hi]`.
    pub precondition_met: bool,
    #[serde(default, with = "crate::serial::opt_rational_str", skip_serializing_if = "Option::is_none")]
    pub precondition_sup: Option<BigRational>,
    /// Level `r+1` within `eps` on the whole window.
    pub holds: bool,
    pub worst_n: Option<usize>,
    #[serde(default, with = "crate::serial::opt_rational_str", skip_serializing_if = "Option::is_none")]
    pub worst: Option<BigRational>,
}

/// Checks the Cesàro lift: level `r + 1` within `eps` on
/// `(2^j', phi_(m+1)(2^j'))`, cut to the stream or the stage end. The
/// values are recomputed exactly; the precondition at level `r` (tolerance
/// `eps/3` on `(j', ...)`) is reported, not assumed.
pub fn cesaro_lift_check(stream: &Word, stage: &Stage, r: usize, j_prime: u64) -> Result<LiftReport, SynthError> {
    let limit = stage.end.map_or(stream.len(), |e| e.min(stream.len()));
    let lo = if j_prime < 63 { 1usize << j_prime } else { usize::MAX };
    let mut report = LiftReport {
        r,
        j_prime,
        lo,
        hi: limit,
        truncated: true,
        inconclusive: true,
        precondition_met: false,
        precondition_sup: None,
        holds: false,
        worst_n: None,
        worst: None,
    };
    if lo >= limit {
        return Ok(report);
    }
    let (hi, truncated) = window_end(stage.m + 1, j_prime, limit);
    report.hi = hi;
    report.truncated = truncated;
    report.inconclusive = false;

    let mut monitor = LevelDistance::new(&stage.q, r + 1, hi)?;
    let third = stage.h * 3;
    let mut pre_ok = j_over_pow2_below(j_prime, &BigRational::new(BigInt::one(), BigInt::from(third)));
    let mut pre_sup: Option<Frac> = None;
    let mut worst: Option<(usize, Frac)> = None;
    let mut holds = true;
    for (idx, &d) in stream.digits()[..hi].iter().enumerate() {
        monitor.push(d)?;
        let n = idx + 1;
        if n as u64 > j_prime {
            let base = monitor.distance_at(r)?;
            pre_ok &= within_inverse(&base, third);
            if pre_sup.as_ref().is_none_or(|s| base > *s) {
                pre_sup = Some(base);
            }
        }
        if n > lo {
            let lifted = monitor.distance_at(r + 1)?;
            holds &= within_inverse(&lifted, stage.h);
            if worst.as_ref().is_none_or(|(_, w)| lifted > *w) {
                worst = Some((n, lifted));
            }
        }
    }
    report.precondition_met = pre_ok;
    report.precondition_sup = pre_sup.map(|s| s.to_rational());
    report.holds = holds;
    report.worst_n = worst.as_ref().map(|(n, _)| *n);
    report.worst = worst.map(|(_, w)| w.to_rational());
    Ok(report)
}

/// `2^j` as a big integer, for diagnostics.
pub fn pow2(j: u64) -> BigInt {
    Pow::pow(BigInt::from(2), j)
}
