//! Accumulation intervals of iterated block frequencies on finite data.
//!
//! For any stream and block `b` with basic period `p`, every level-`r`
//! frequency sequence accumulates inside `[0, 1/p]`, and streams exist that
//! fill the whole range. The helpers here measure how much of that range a
//! finite stream actually visits over a window `(n0, n1]`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::cesaro::{gap_within_bound, geometric_checkpoints, CesaroError, CesaroLadder, LadderConfig, Mode};
use crate::exact::Frac;
use crate::serial::rational_str;
use crate::words::{basic_factor, basic_period, periodic_truncate, Block, Word};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OscillationError {
    #[error("window ({n0}, {n1}] is not inside [k = {k}, {len}]")]
    Window { n0: usize, n1: usize, k: usize, len: usize },
    #[error("no blocks to analyze")]
    NoBlocks,
    #[error(transparent)]
    Cesaro(#[from] CesaroError),
}

/// Observed range of `P^(r)(b, n)` for `n` in `(n0, n1]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AccumulationEstimate {
    pub block: Block,
    pub r: usize,
    pub n0: usize,
    pub n1: usize,
    #[serde(with = "rational_str")]
    pub lo: BigRational,
    #[serde(with = "rational_str")]
    pub hi: BigRational,
    /// Every consecutive difference in the window was at most `1/(n+1)`.
    pub gap_bound_ok: bool,
}

/// `[0, 1/p]` with `p` the basic period of `b`.
pub fn theoretical_range(b: &Block) -> (BigRational, BigRational) {
    let p = basic_period(b);
    (BigRational::zero(), BigRational::new(1.into(), BigInt::from(p)))
}

struct Tracker {
    lo: Frac,
    hi: Frac,
    prev: Option<Frac>,
    gap_ok: bool,
}

/// One pass over `stream[..n1]` evaluating every block of `blocks` (all of
/// length `k`) at every level `<= r_max` for `n` in `[n0, n1]`.
fn scan(
    stream: &Word,
    k: usize,
    blocks: &[Block],
    r_max: usize,
    n0: usize,
    n1: usize,
) -> Result<Vec<AccumulationEstimate>, OscillationError> {
    let config = LadderConfig::new(k, r_max, Mode::Exact).exact_cap(n1).track(blocks.iter().cloned());
    let mut ladder = CesaroLadder::new(config)?;
    let mut trackers: Vec<Vec<Option<Tracker>>> =
        (0..blocks.len()).map(|_| (0..=r_max).map(|_| None).collect()).collect();
    for (i, &d) in stream.digits()[..n1].iter().enumerate() {
        ladder.push_digit(d)?;
        let n = i + 1;
        if n < n0 {
            continue;
        }
        for r in 0..=r_max {
            let nums = ladder.level_numerators(blocks, r)?;
            for (bi, num) in nums.values.into_iter().enumerate() {
                let v = Frac::new(num, nums.den.clone());
                let slot = &mut trackers[bi][r];
                match slot {
                    None => {
                        // n == n0: only seeds the gap check
                        *slot = Some(Tracker { lo: v.clone(), hi: v.clone(), prev: Some(v), gap_ok: true });
                    }
                    Some(t) => {
                        if let Some(prev) = &t.prev {
                            t.gap_ok &= gap_within_bound(prev, &v, n - 1);
                        }
                        if n == n0 + 1 {
                            t.lo = v.clone();
                            t.hi = v.clone();
                        } else if v < t.lo {
                            t.lo = v.clone();
                        } else if v > t.hi {
                            t.hi = v.clone();
                        }
                        t.prev = Some(v);
                    }
                }
            }
        }
    }
    let mut out = Vec::new();
    for (bi, block) in blocks.iter().enumerate() {
        for r in 0..=r_max {
            let t = trackers[bi][r].take().expect("window is nonempty");
            out.push(AccumulationEstimate {
                block: block.clone(),
                r,
                n0,
                n1,
                lo: t.lo.to_rational(),
                hi: t.hi.to_rational(),
                gap_bound_ok: t.gap_ok,
            });
        }
    }
    Ok(out)
}

fn check_window(stream: &Word, k: usize, n0: usize, n1: usize) -> Result<(), OscillationError> {
    if k == 0 || n0 < k || n0 >= n1 || n1 > stream.len() {
        return Err(OscillationError::Window { n0, n1, k, len: stream.len() });
    }
    Ok(())
}

/// Exact min and max of `P^(r)(b, n)` over `n` in `(n0, n1]`, checking the
/// consecutive-gap bound from `n0` on.
pub fn accumulation_interval(
    stream: &Word,
    b: &Block,
    r: usize,
    n0: usize,
    n1: usize,
) -> Result<AccumulationEstimate, OscillationError> {
    check_window(stream, b.k(), n0, n1)?;
    let mut all = scan(stream, b.k(), std::slice::from_ref(b), r, n0, n1)?;
    Ok(all.pop().expect("one estimate per level"))
}

/// Distance of `P^(r)` from `1/p` at one checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Deviation {
    pub n: usize,
    #[serde(with = "rational_str")]
    pub deviation: BigRational,
    /// `sup` of the deviation over `[n, n_max]`.
    pub tail_sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasicFactorReport {
    pub block: Block,
    pub period: usize,
    pub r: usize,
    pub n_max: usize,
    /// `|P^(0)(n) - 1/p| <= (k + p) / n` held for every `k <= n <= n_max`.
    pub counting_bound_ok: bool,
    pub checkpoints: Vec<Deviation>,
}

impl BasicFactorReport {
    pub fn final_deviation(&self) -> &BigRational {
        &self.checkpoints.last().expect("n_max is a checkpoint").deviation
    }
}

/// Ratio between consecutive deviation checkpoints.
pub const CHECKPOINT_RATIO: f64 = 1.25;

/// Runs the ladder on the periodic extension of `b`'s basic factor and
/// measures how `P^(r)(b, n)` approaches `1/p`.
pub fn basic_factor_limit_check(b: &Block, r: usize, n_max: usize) -> Result<BasicFactorReport, OscillationError> {
    let k = b.k();
    if n_max < k {
        return Err(OscillationError::Window { n0: k, n1: n_max, k, len: n_max });
    }
    let p = basic_period(b);
    let stream = periodic_truncate(&basic_factor(b), n_max).expect("basic factor is nonempty");
    let config = LadderConfig::new(k, r, Mode::Exact).exact_cap(n_max).track([b.clone()]);
    let mut ladder = CesaroLadder::new(config)?;
    let target = Frac::new(1.into(), BigInt::from(p));
    let slack = BigInt::from(p * (k + p));
    let marks = geometric_checkpoints(CHECKPOINT_RATIO, n_max);
    let mut counting_bound_ok = true;
    let mut exact_at = BTreeMap::new();
    let mut float_dev = Vec::with_capacity(n_max);
    for &d in stream.digits() {
        ladder.push_digit(d)?;
        let n = ladder.n();
        if n >= k {
            // |c/n - 1/p| <= (k+p)/n  <=>  |p c - n| <= p (k+p)
            let c = BigInt::from(ladder.count(b));
            counting_bound_ok &= (c * p - n).abs() <= slack;
        }
        let dev = ladder.value(b, r)?.abs_diff(&target);
        float_dev.push(dev.to_f64());
        if marks.binary_search(&n).is_ok() {
            exact_at.insert(n, dev.to_rational());
        }
    }
    let mut tail = vec![0.0f64; n_max + 1];
    for n in (1..=n_max).rev() {
        let here = float_dev[n - 1];
        tail[n - 1] = if n == n_max { here } else { here.max(tail[n]) };
    }
    let checkpoints = exact_at
        .into_iter()
        .map(|(n, deviation)| Deviation { n, deviation, tail_sup: tail[n - 1] })
        .collect();
    Ok(BasicFactorReport { block: b.clone(), period: p, r, n_max, counting_bound_ok, checkpoints })
}

/// One block at one level of an [`OscillationReport`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OscillationRow {
    pub estimate: AccumulationEstimate,
    pub period: usize,
    /// `max(lo, 1/p - hi)`: how far the observed interval falls short of
    /// `[0, 1/p]`.
    #[serde(with = "rational_str")]
    pub shortfall: BigRational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OscillationReport {
    #[serde(with = "rational_str")]
    pub tolerance: BigRational,
    pub rows: Vec<OscillationRow>,
    /// Every shortfall is at most the tolerance.
    pub realized: bool,
}

#[derive(Debug, Clone)]
pub struct ReportOptions {
    /// Explicit `(n0, n1]`; defaults to the last three quarters of the stream.
    pub window: Option<(usize, usize)>,
    pub tolerance: BigRational,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions { window: None, tolerance: BigRational::new(1.into(), 50.into()) }
    }
}

impl ReportOptions {
    /// Tolerance `2 * eps` for a stream generated at accuracy `eps`.
    pub fn for_epsilon(eps: &BigRational) -> Self {
        ReportOptions { window: None, tolerance: eps * BigInt::from(2) }
    }

    pub fn window(mut self, n0: usize, n1: usize) -> Self {
        self.window = Some((n0, n1));
        self
    }
}

/// Shortfall of the observed interval against `[0, 1/p]` for every block
/// and every level `<= r_max`.
pub fn oscillation_report(
    stream: &Word,
    blocks: &[Block],
    r_max: usize,
    options: &ReportOptions,
) -> Result<OscillationReport, OscillationError> {
    if blocks.is_empty() {
        return Err(OscillationError::NoBlocks);
    }
    let mut by_k: BTreeMap<usize, Vec<Block>> = BTreeMap::new();
    for b in blocks {
        let group = by_k.entry(b.k()).or_default();
        if !group.contains(b) {
            group.push(b.clone());
        }
    }
    let mut estimates = BTreeMap::new();
    for (&k, group) in &by_k {
        let (n0, n1) = options.window.unwrap_or_else(|| (k.max(stream.len() / 4), stream.len()));
        check_window(stream, k, n0, n1)?;
        for e in scan(stream, k, group, r_max, n0, n1)? {
            estimates.insert((e.block.clone(), e.r), e);
        }
    }
    let mut rows = Vec::new();
    for b in blocks {
        let (_, top) = theoretical_range(b);
        for r in 0..=r_max {
            let Some(estimate) = estimates.remove(&(b.clone(), r)) else { continue };
            let shortfall = estimate.lo.clone().max(&top - &estimate.hi);
            rows.push(OscillationRow { estimate, period: basic_period(b), shortfall });
        }
    }
    let realized = rows.iter().all(|row| row.shortfall <= options.tolerance);
    Ok(OscillationReport { tolerance: options.tolerance.clone(), rows, realized })
}
