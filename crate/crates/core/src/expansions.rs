//! Continued-fraction and Lüroth digits with certified floors.
//!
//! Both maps share the partition `(1/(a+1), 1/a)`: the digit of `x` is
//! `floor(1/x)`. The Gauss map continues with `1/x - a` (decreasing), the
//! Lüroth map with `a(a+1)x - a` (increasing). Inputs are enclosed in
//! intervals with exact rational endpoints; a digit is accepted only when
//! the whole enclosure lies strictly inside one partition element, otherwise
//! the enclosure is tightened (doubling the bit precision) and extraction
//! restarts. Landing exactly on a partition endpoint is an error: such
//! points have no unique infinite expansion.

use std::collections::HashMap;
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::words::{Digit, Word};

/// Starting enclosure precision in bits.
pub const DEFAULT_PRECISION_BITS: u64 = 128;
/// Environment variable overriding [`DEFAULT_PRECISION_BITS`].
pub const PRECISION_ENV: &str = "NNLAB_PRECISION_BITS";
const MAX_PRECISION_BITS: u64 = 1 << 22;
const MAX_SAMPLE_DOUBLINGS: u32 = 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExpansionError {
    #[error("{value} is not in (0, 1)")]
    OutOfRange { value: String },
    #[error("orbit hits a partition endpoint at digit {index}: the point has no unique infinite expansion")]
    NotInUInfinity { index: usize },
    #[error("precision exhausted after {index} certified digits")]
    Precision { index: usize },
    #[error("cannot parse {input:?}: {reason}")]
    Parse { input: String, reason: String },
    #[error("digit {index} does not fit in 64 bits")]
    DigitOverflow { index: usize },
    #[error("digit sequence must be nonempty")]
    EmptyDigits,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExpansionKind {
    ContinuedFraction,
    Lueroth,
}

/// `r + s * sqrt(d)` with `d > 1` squarefree, or a plain rational when `s = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadraticSurd {
    pub r: BigRational,
    pub s: BigRational,
    pub d: BigInt,
}

/// A real number in `(0, 1)` together with how it can be enclosed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RealInput {
    Rational(BigRational),
    Surd(QuadraticSurd),
    /// A decimal approximation with a fixed absolute error bound.
    Decimal { value: BigRational, error: BigRational },
}

impl fmt::Display for RealInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RealInput::Rational(v) => write!(f, "{v}"),
            RealInput::Surd(q) => write!(f, "{} + {}*sqrt({})", q.r, q.s, q.d),
            RealInput::Decimal { value, error } => write!(f, "{value} ± {error}"),
        }
    }
}

/// Closed enclosure `[lo, hi]`, endpoints as unreduced `num/den` pairs with
/// positive denominators.
#[derive(Debug, Clone)]
struct Enclosure {
    lo: (BigInt, BigInt),
    hi: (BigInt, BigInt),
}

impl Enclosure {
    fn point(v: &BigRational) -> Self {
        let p = (v.numer().clone(), v.denom().clone());
        Enclosure { lo: p.clone(), hi: p }
    }

    fn from_bounds(lo: BigRational, hi: BigRational) -> Self {
        Enclosure { lo: (lo.numer().clone(), lo.denom().clone()), hi: (hi.numer().clone(), hi.denom().clone()) }
    }

    fn is_point(&self) -> bool {
        &self.lo.0 * &self.hi.1 == &self.hi.0 * &self.lo.1
    }
}

enum Step {
    Digit(Digit),
    /// The enclosure straddles a partition endpoint or touches 0.
    Ambiguous,
    /// An exact point sits on a partition endpoint.
    Boundary,
    /// Every point of the enclosure has a digit beyond `u64`.
    Overflow,
}

/// `floor(den/num)` for both endpoints; certified when equal and neither
/// endpoint is the reciprocal of an integer.
fn certify(e: &Enclosure) -> Step {
    let (ln, ld) = &e.lo;
    let (hn, hd) = &e.hi;
    if !ln.is_positive() || hn >= hd {
        return Step::Ambiguous;
    }
    let (a_hi, rem_lo) = ld.div_rem(ln);
    let (a_lo, rem_hi) = hd.div_rem(hn);
    if a_lo > BigInt::from(u64::MAX) {
        return Step::Overflow;
    }
    if a_lo != a_hi {
        return Step::Ambiguous;
    }
    if rem_lo.is_zero() || rem_hi.is_zero() {
        return if e.is_point() { Step::Boundary } else { Step::Ambiguous };
    }
    match a_lo.to_u64() {
        Some(a) => Step::Digit(a),
        None => Step::Ambiguous,
    }
}

fn apply_map(kind: ExpansionKind, a: Digit, e: Enclosure) -> Enclosure {
    let a = BigInt::from(a);
    match kind {
        ExpansionKind::ContinuedFraction => {
            // u/v -> v/u - a = (v - a u)/u; decreasing, so the endpoints swap
            let map = |(u, v): (BigInt, BigInt)| (&v - &a * &u, u);
            Enclosure { lo: map(e.hi), hi: map(e.lo) }
        }
        ExpansionKind::Lueroth => {
            let factor = &a * (&a + 1u32);
            let map = |(u, v): (BigInt, BigInt)| (&factor * &u - &a * &v, v);
            Enclosure { lo: map(e.lo), hi: map(e.hi) }
        }
    }
}

/// Runs the map on one enclosure; `false` means the enclosure ran out.
fn digits_from(kind: ExpansionKind, mut e: Enclosure, count: usize) -> Result<(Vec<Digit>, bool), ExpansionError> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        match certify(&e) {
            Step::Digit(a) => {
                out.push(a);
                e = apply_map(kind, a, e);
            }
            Step::Ambiguous => return Ok((out, false)),
            Step::Boundary => return Err(ExpansionError::NotInUInfinity { index: out.len() }),
            Step::Overflow => return Err(ExpansionError::DigitOverflow { index: out.len() }),
        }
    }
    Ok((out, true))
}

fn start_precision() -> u64 {
    std::env::var(PRECISION_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<u64>().ok())
        .filter(|&b| b >= 8)
        .unwrap_or(DEFAULT_PRECISION_BITS)
}

/// `sqrt(d)` enclosed in `[s, s+1] / 2^bits`.
fn sqrt_bounds(d: &BigInt, bits: u64) -> (BigRational, BigRational) {
    let scale = BigInt::one() << bits;
    let s = (d * &scale * &scale).sqrt();
    let den = scale;
    (BigRational::new(s.clone(), den.clone()), BigRational::new(s + 1, den))
}

impl RealInput {
    /// Enclosure at roughly `bits` bits; fixed-precision inputs ignore `bits`.
    fn enclose(&self, bits: u64) -> Enclosure {
        match self {
            RealInput::Rational(v) => Enclosure::point(v),
            RealInput::Surd(q) if q.s.is_zero() => Enclosure::point(&q.r),
            RealInput::Surd(q) => {
                let (lo, hi) = sqrt_bounds(&q.d, bits);
                let (a, b) = (&q.r + &q.s * &lo, &q.r + &q.s * &hi);
                if q.s.is_positive() {
                    Enclosure::from_bounds(a, b)
                } else {
                    Enclosure::from_bounds(b, a)
                }
            }
            RealInput::Decimal { value, error } => Enclosure::from_bounds(value - error, value + error),
        }
    }

    fn refinable(&self) -> bool {
        matches!(self, RealInput::Surd(q) if !q.s.is_zero())
    }

    fn is_exact_rational(&self) -> bool {
        match self {
            RealInput::Rational(_) => true,
            RealInput::Surd(q) => q.s.is_zero(),
            RealInput::Decimal { .. } => false,
        }
    }

    fn check_range(&self) -> Result<(), ExpansionError> {
        let e = self.enclose(64);
        let positive = e.lo.0.is_positive() || e.hi.0.is_positive();
        let below_one = e.lo.0 < e.lo.1 || e.hi.0 < e.hi.1;
        if positive && below_one {
            Ok(())
        } else {
            Err(ExpansionError::OutOfRange { value: self.to_string() })
        }
    }

    /// Parses a value expression: integers, decimals, `sqrt(n)`, `+ - * /`
    /// and parentheses, with at most one distinct radical.
    pub fn parse_value(text: &str) -> Result<Self, ExpansionError> {
        let surd = SurdParser::new(text).parse()?;
        Ok(if surd.s.is_zero() { RealInput::Rational(surd.r) } else { RealInput::Surd(surd) })
    }

    /// Parses `p/q` or an integer.
    pub fn parse_rational(text: &str) -> Result<Self, ExpansionError> {
        crate::exact::parse_rational(text)
            .map(RealInput::Rational)
            .ok_or_else(|| ExpansionError::Parse { input: text.into(), reason: "expected p/q".into() })
    }

    /// Parses a decimal literal such as `0.41421356`; its error bound is one
    /// unit in the last place, or `10^-p` with an explicit `~p` suffix.
    pub fn parse_decimal(text: &str) -> Result<Self, ExpansionError> {
        let bad = |reason: &str| ExpansionError::Parse { input: text.into(), reason: reason.into() };
        let (body, places) = match text.trim().split_once('~') {
            Some((body, p)) => (body.trim(), Some(p.trim().parse::<usize>().map_err(|_| bad("bad precision suffix"))?)),
            None => (text.trim(), None),
        };
        let frac_digits = body.split_once('.').map(|(_, f)| f.len()).ok_or_else(|| bad("expected a decimal point"))?;
        let value = crate::exact::parse_rational(body).ok_or_else(|| bad("not a decimal"))?;
        let places = places.unwrap_or(frac_digits);
        let error = BigRational::new(BigInt::one(), num_traits::pow(BigInt::from(10), places));
        Ok(RealInput::Decimal { value, error })
    }
}

/// First `count` digits of `x` under `kind`, each certified.
pub fn expand(kind: ExpansionKind, x: &RealInput, count: usize) -> Result<Word, ExpansionError> {
    x.check_range()?;
    if kind == ExpansionKind::ContinuedFraction && x.is_exact_rational() {
        // every rational has a terminating expansion ending on an endpoint
        return Err(ExpansionError::NotInUInfinity { index: 0 });
    }
    if kind == ExpansionKind::Lueroth && x.is_exact_rational() {
        let (RealInput::Rational(v) | RealInput::Surd(QuadraticSurd { r: v, .. })) = x else { unreachable!() };
        return lueroth_rational(v, count);
    }
    let mut bits = start_precision();
    loop {
        let (digits, done) = digits_from(kind, x.enclose(bits), count)?;
        if done {
            return Ok(Word::new(digits).expect("digits are positive"));
        }
        if !x.refinable() || bits >= MAX_PRECISION_BITS {
            return Err(ExpansionError::Precision { index: digits.len() });
        }
        bits *= 2;
    }
}

pub fn cf_digits(x: &RealInput, count: usize) -> Result<Word, ExpansionError> {
    expand(ExpansionKind::ContinuedFraction, x, count)
}

pub fn lueroth_digits(x: &RealInput, count: usize) -> Result<Word, ExpansionError> {
    expand(ExpansionKind::Lueroth, x, count)
}

/// Exact Lüroth iteration on a rational. The denominator never changes, so
/// small denominators are scanned for a cycle.
fn lueroth_rational(x: &BigRational, count: usize) -> Result<Word, ExpansionError> {
    let den = x.denom().clone();
    let mut num = x.numer().clone();
    let track_cycle = den <= BigInt::from(1_000_000u32);
    let mut seen: HashMap<BigInt, usize> = HashMap::new();
    let mut digits: Vec<Digit> = Vec::with_capacity(count);
    while digits.len() < count {
        if track_cycle {
            if let Some(&first) = seen.get(&num) {
                let period = digits[first..].to_vec();
                let mut i = 0;
                while digits.len() < count {
                    digits.push(period[i % period.len()]);
                    i += 1;
                }
                break;
            }
            seen.insert(num.clone(), digits.len());
        }
        if num.is_zero() {
            return Err(ExpansionError::NotInUInfinity { index: digits.len() });
        }
        let (a, rem) = den.div_rem(&num);
        if rem.is_zero() {
            return Err(ExpansionError::NotInUInfinity { index: digits.len() });
        }
        let a_small = a.to_u64().ok_or(ExpansionError::DigitOverflow { index: digits.len() })?;
        digits.push(a_small);
        num = &a * (&a + 1u32) * &num - &a * &den;
    }
    Ok(Word::new(digits).expect("digits are positive"))
}

/// A closed interval with exact rational endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cylinder {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl Cylinder {
    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn midpoint(&self) -> BigRational {
        (&self.lo + &self.hi) / BigInt::from(2)
    }

    pub fn is_within(&self, other: &Cylinder) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }
}

/// Closure of the set of points whose continued fraction starts with
/// `digits`: between `p_n/q_n` and `(p_n + p_(n-1))/(q_n + q_(n-1))`.
pub fn cf_reconstruct(digits: &Word) -> Result<Cylinder, ExpansionError> {
    if digits.is_empty() {
        return Err(ExpansionError::EmptyDigits);
    }
    let (mut p_prev, mut p) = (BigInt::one(), BigInt::zero());
    let (mut q_prev, mut q) = (BigInt::zero(), BigInt::one());
    for &a in digits.digits() {
        let a = BigInt::from(a);
        let p_next = &a * &p + &p_prev;
        let q_next = &a * &q + &q_prev;
        p_prev = std::mem::replace(&mut p, p_next);
        q_prev = std::mem::replace(&mut q, q_next);
    }
    let x = BigRational::new(p.clone(), q.clone());
    let y = BigRational::new(p + p_prev, q + q_prev);
    Ok(if x <= y { Cylinder { lo: x, hi: y } } else { Cylinder { lo: y, hi: x } })
}

/// Image of `[0, 1]` under `psi_(d_1) o ... o psi_(d_K)` with
/// `psi_a(t) = (t + a) / (a (a + 1))`.
pub fn lueroth_reconstruct(digits: &Word) -> Result<Cylinder, ExpansionError> {
    if digits.is_empty() {
        return Err(ExpansionError::EmptyDigits);
    }
    let mut lo = BigRational::zero();
    let mut hi = BigRational::one();
    for &a in digits.digits().iter().rev() {
        let a = BigInt::from(a);
        let den = &a * (&a + 1u32);
        let psi = |t: &BigRational| (t + BigRational::from_integer(a.clone())) / BigRational::from_integer(den.clone());
        lo = psi(&lo);
        hi = psi(&hi);
    }
    Ok(Cylinder { lo, hi })
}

/// Gauss measure of the digit-`b` cylinder: `log2(num/den)` with
/// `num = (b+1)^2`, `den = b(b+2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussMeasure {
    pub num: BigInt,
    pub den: BigInt,
    pub value: f64,
}

pub fn gauss_block_measure(b: Digit) -> GaussMeasure {
    assert!(b >= 1, "digits start at 1");
    let b_big = BigInt::from(b);
    let num = (&b_big + 1u32) * (&b_big + 1u32);
    let den = &b_big * (&b_big + 2u32);
    // log2(1 + 1/(b(b+2))) without cancellation for large b
    let bf = b as f64;
    let value = (1.0 / (bf * (bf + 2.0))).ln_1p() / std::f64::consts::LN_2;
    GaussMeasure { num, den, value }
}

/// Continued-fraction digits of a point drawn uniformly from `(0, 1)`.
///
/// The point is the binary fraction spelled by a ChaCha stream, so asking
/// for more bits refines the same point; precision doubles until every
/// requested digit is certified.
pub fn sample_uniform(seed: u64, count: usize) -> Result<Word, ExpansionError> {
    let mut bits = (4 * count as u64 + 64).max(start_precision());
    for _ in 0..=MAX_SAMPLE_DOUBLINGS {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let words = bits.div_ceil(32) as usize;
        let mut raw = vec![0u32; words];
        for w in raw.iter_mut() {
            *w = rng.next_u32();
        }
        // most significant word first
        let digits_be: Vec<u32> = raw.into_iter().rev().collect();
        let x = BigInt::from_slice(Sign::Plus, &digits_be);
        let den = BigInt::one() << (words as u64 * 32);
        let e = Enclosure { lo: (x.clone(), den.clone()), hi: (x + 1, den) };
        let (digits, done) = digits_from(ExpansionKind::ContinuedFraction, e, count)?;
        if done {
            return Ok(Word::new(digits).expect("digits are positive"));
        }
        bits *= 2;
    }
    Err(ExpansionError::Precision { index: 0 })
}

/// Recursive-descent parser over `Q(sqrt d)`.
struct SurdParser<'a> {
    input: &'a str,
    chars: Vec<char>,
    pos: usize,
    radical: Option<BigInt>,
}

/// Value `r + s sqrt(d)` during parsing; `d` lives in the parser.
#[derive(Clone)]
struct Q2 {
    r: BigRational,
    s: BigRational,
}

/// Splits `n = m^2 f` with `f` squarefree over primes below 10^6.
fn squarefree_split(n: &BigInt) -> (BigInt, BigInt) {
    let mut f = n.clone();
    let mut m = BigInt::one();
    let mut p = BigInt::from(2);
    let limit = BigInt::from(1_000_000u32);
    while &p * &p <= f && p < limit {
        let sq = &p * &p;
        while (&f % &sq).is_zero() {
            f /= &sq;
            m *= &p;
        }
        p += 1;
    }
    let r = f.sqrt();
    if &r * &r == f {
        (m * r, BigInt::one())
    } else {
        (m, f)
    }
}

impl<'a> SurdParser<'a> {
    fn new(input: &'a str) -> Self {
        SurdParser { input, chars: input.chars().filter(|c| !c.is_whitespace()).collect(), pos: 0, radical: None }
    }

    fn error(&self, reason: impl Into<String>) -> ExpansionError {
        ExpansionError::Parse { input: self.input.to_string(), reason: format!("{} at offset {}", reason.into(), self.pos) }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn parse(mut self) -> Result<QuadraticSurd, ExpansionError> {
        let v = self.expr()?;
        if self.pos != self.chars.len() {
            return Err(self.error("unexpected trailing input"));
        }
        Ok(QuadraticSurd { r: v.r, s: v.s, d: self.radical.unwrap_or_else(BigInt::one) })
    }

    fn d(&self) -> BigRational {
        BigRational::from_integer(self.radical.clone().unwrap_or_else(BigInt::one))
    }

    fn expr(&mut self) -> Result<Q2, ExpansionError> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                let t = self.term()?;
                acc = Q2 { r: acc.r + t.r, s: acc.s + t.s };
            } else if self.eat('-') {
                let t = self.term()?;
                acc = Q2 { r: acc.r - t.r, s: acc.s - t.s };
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Q2, ExpansionError> {
        let mut acc = self.factor()?;
        loop {
            if self.eat('*') {
                let f = self.factor()?;
                acc = self.mul(&acc, &f);
            } else if self.eat('/') {
                let f = self.factor()?;
                let norm = &f.r * &f.r - &f.s * &f.s * self.d();
                if norm.is_zero() {
                    return Err(self.error("division by zero"));
                }
                let conj = Q2 { r: &f.r / &norm, s: -&f.s / &norm };
                acc = self.mul(&acc, &conj);
            } else {
                return Ok(acc);
            }
        }
    }

    fn mul(&self, a: &Q2, b: &Q2) -> Q2 {
        Q2 { r: &a.r * &b.r + &a.s * &b.s * self.d(), s: &a.r * &b.s + &a.s * &b.r }
    }

    fn factor(&mut self) -> Result<Q2, ExpansionError> {
        if self.eat('-') {
            let f = self.factor()?;
            return Ok(Q2 { r: -f.r, s: -f.s });
        }
        if self.eat('+') {
            return self.factor();
        }
        if self.eat('(') {
            let v = self.expr()?;
            if !self.eat(')') {
                return Err(self.error("expected ')'"));
            }
            return Ok(v);
        }
        if self.chars[self.pos..].starts_with(&['s', 'q', 'r', 't']) {
            self.pos += 4;
            if !self.eat('(') {
                return Err(self.error("expected '(' after sqrt"));
            }
            let n = self.number()?;
            if !self.eat(')') {
                return Err(self.error("expected ')'"));
            }
            if !n.is_integer() || n.is_negative() {
                return Err(self.error("sqrt takes a nonnegative integer"));
            }
            let (m, f) = squarefree_split(n.numer());
            if f.is_one() {
                return Ok(Q2 { r: BigRational::from_integer(m), s: BigRational::zero() });
            }
            match &self.radical {
                Some(d) if *d != f => return Err(self.error("only one distinct radical is supported")),
                _ => self.radical = Some(f),
            }
            return Ok(Q2 { r: BigRational::zero(), s: BigRational::from_integer(m) });
        }
        let n = self.number()?;
        Ok(Q2 { r: n, s: BigRational::zero() })
    }

    fn number(&mut self) -> Result<BigRational, ExpansionError> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit() || c == '.') {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected a number"));
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        crate::exact::parse_rational(&text).ok_or_else(|| self.error(format!("bad number {text:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn value(text: &str) -> RealInput {
        RealInput::parse_value(text).unwrap()
    }

    #[test]
    fn cf_of_quadratic_surds() {
        let golden = cf_digits(&value("(sqrt(5)-1)/2"), 40).unwrap();
        assert!(golden.digits().iter().all(|&d| d == 1));
        let silver = cf_digits(&value("sqrt(2)-1"), 40).unwrap();
        assert!(silver.digits().iter().all(|&d| d == 2));
        // sqrt(3) - 1 = [1; 2, 1, 2, ...]
        let w = cf_digits(&value("sqrt(3)-1"), 6).unwrap();
        assert_eq!(w.digits(), &[1, 2, 1, 2, 1, 2]);
    }

    #[test]
    fn cf_rejects_rationals() {
        assert_eq!(cf_digits(&RealInput::Rational(r(1, 4)), 3), Err(ExpansionError::NotInUInfinity { index: 0 }));
        assert_eq!(cf_digits(&value("sqrt(4)/8"), 3), Err(ExpansionError::NotInUInfinity { index: 0 }));
    }

    #[test]
    fn lueroth_examples() {
        let w = lueroth_digits(&RealInput::Rational(r(2, 5)), 12).unwrap();
        assert!(w.digits().iter().all(|&d| d == 2));
        let w = lueroth_digits(&RealInput::Rational(r(7, 10)), 5).unwrap();
        assert_eq!(w.digits(), &[1, 2, 2, 2, 2]);
        assert_eq!(
            lueroth_digits(&RealInput::Rational(r(1, 3)), 2),
            Err(ExpansionError::NotInUInfinity { index: 0 })
        );
        // 3/4 -> 1/2, a boundary after one digit
        assert_eq!(
            lueroth_digits(&RealInput::Rational(r(3, 4)), 3),
            Err(ExpansionError::NotInUInfinity { index: 1 })
        );
    }

    #[test]
    fn lueroth_of_surd_matches_interval() {
        let x = value("sqrt(2)-1");
        let w = lueroth_digits(&x, 20).unwrap();
        let cyl = lueroth_reconstruct(&w).unwrap();
        let (lo, hi) = sqrt_bounds(&BigInt::from(2), 256);
        let one = BigRational::one();
        assert!(cyl.lo < &lo - &one && &hi - &one < cyl.hi);
    }

    #[test]
    fn huge_digits_are_reported() {
        // Lüroth digits of 4 sqrt(2) - 5 grow doubly exponentially: 1, 3, 1, 1, 17, ..., 577, ...
        let w = lueroth_digits(&value("4*sqrt(2)-5"), 11).unwrap();
        assert_eq!(w.digits(), &[1, 3, 1, 1, 17, 1, 1, 577, 1, 1, 665857]);
        assert_eq!(lueroth_digits(&value("4*sqrt(2)-5"), 20), Err(ExpansionError::DigitOverflow { index: 16 }));
    }

    #[test]
    fn out_of_range_inputs() {
        assert!(matches!(cf_digits(&value("sqrt(2)"), 3), Err(ExpansionError::OutOfRange { .. })));
        assert!(matches!(cf_digits(&value("1-sqrt(2)"), 3), Err(ExpansionError::OutOfRange { .. })));
    }

    #[test]
    fn reconstruct_examples() {
        let one = Word::new(vec![1]).unwrap();
        assert_eq!(cf_reconstruct(&one).unwrap(), Cylinder { lo: r(1, 2), hi: r(1, 1) });
        let two_two = cf_reconstruct(&Word::new(vec![2, 2]).unwrap()).unwrap();
        assert_eq!(two_two, Cylinder { lo: r(2, 5), hi: r(3, 7) });
        assert!(two_two.contains(&r(41421, 100000)));
        assert_eq!(lueroth_reconstruct(&Word::new(vec![2]).unwrap()).unwrap(), Cylinder { lo: r(1, 3), hi: r(1, 2) });
        let twice = lueroth_reconstruct(&Word::new(vec![2, 2]).unwrap()).unwrap();
        assert_eq!(twice, Cylinder { lo: r(7, 18), hi: r(5, 12) });
        assert!(twice.contains(&r(2, 5)));
        assert_eq!(cf_reconstruct(&Word::empty()), Err(ExpansionError::EmptyDigits));
    }

    #[test]
    fn decimal_inputs_run_out_of_precision() {
        let x = RealInput::parse_decimal("0.41421356").unwrap();
        let w = cf_digits(&x, 3).unwrap();
        assert_eq!(w.digits(), &[2, 2, 2]);
        assert!(matches!(cf_digits(&x, 40), Err(ExpansionError::Precision { .. })));
        let RealInput::Decimal { error, .. } = RealInput::parse_decimal("0.5~3").unwrap() else { panic!() };
        assert_eq!(error, r(1, 1000));
    }

    #[test]
    fn parser_handles_grammar() {
        assert_eq!(value("1/4"), RealInput::Rational(r(1, 4)));
        assert_eq!(value("(1+2*sqrt(8))/7"), value("1/7 + 4*sqrt(2)/7"));
        let RealInput::Surd(q) = value("1/(1+sqrt(2))") else { panic!() };
        assert_eq!((q.r, q.s, q.d), (r(-1, 1), r(1, 1), BigInt::from(2)));
        for bad in ["(0+1*sqrt(5))/2-", "sqrt(2)+sqrt(3)", "sqrt(-2)", "2/(sqrt(4)-2)", "abc", ""] {
            assert!(RealInput::parse_value(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn gauss_measure_values() {
        let m1 = gauss_block_measure(1);
        assert_eq!((m1.num.clone(), m1.den.clone()), (BigInt::from(4), BigInt::from(3)));
        assert!((m1.value - 0.415037).abs() < 1e-6);
        assert!((gauss_block_measure(2).value - 0.169925).abs() < 1e-6);
        let partial: f64 = (1..=10_000).map(|b| gauss_block_measure(b).value).sum();
        assert!((0.9998..1.0).contains(&partial));
    }

    #[test]
    fn sampling_is_reproducible() {
        let a = sample_uniform(7, 300).unwrap();
        assert_eq!(a, sample_uniform(7, 300).unwrap());
        assert_ne!(a, sample_uniform(8, 300).unwrap());
        // a longer request refines the same point
        let b = sample_uniform(7, 600).unwrap();
        assert_eq!(&b.digits()[..300], a.digits());
    }
}
