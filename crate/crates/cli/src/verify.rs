use std::path::PathBuf;

use clap::{Args, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use nnlab_core::cesaro::{gap_within_bound, CesaroLadder, LadderConfig, Mode};
use nnlab_core::exact::{format_rational, ratio_to_f64, rational_to_f64, Frac};
use nnlab_core::oscillation::basic_factor_limit_check;
use nnlab_core::simplex::{enumerate_dense, SimplexVector};
use nnlab_core::synthesizer::{verify_property_p, Schedule};
use nnlab_core::wordfactory::{
    construct_zn_word, distance_to_target, extend_to_target, is_in_zn, padding_length, ZnSpec,
};
use nnlab_core::words::{Block, Word};

use crate::commands::{parse_levels, print_verdicts};
use crate::run::{parse_number, read_json, read_word, CliResult, Failure, Run, RunConfig};

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    /// Consecutive ladder values differ by at most 1/(n+1).
    Gap,
    /// A stream carries the witnesses its schedule asks for.
    PropertyP,
    /// Constructed words land within 1/n of every enumerated target.
    Zn,
    /// Extending arbitrary prefixes toward a target stays within 6/n.
    Extension,
    /// Iterated frequencies of a block in its own periodic stream tend to 1/p.
    BasicFactor,
}

#[derive(Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    /// Stream length (gap, basic-factor) or accuracy 1/n (zn, extension).
    #[arg(long)]
    n: Option<u64>,
    /// Cesàro levels, e.g. 3 or 0..3.
    #[arg(long, value_parser = parse_levels)]
    r: Option<(usize, usize)>,
    /// Block length.
    #[arg(long)]
    k: Option<usize>,
    /// Largest digit used in random streams and enumerated targets.
    #[arg(long)]
    alphabet: Option<u64>,
    /// Number of random streams (gap) or cases (extension).
    #[arg(long)]
    cases: Option<usize>,
    /// Largest denominator of enumerated targets (zn).
    #[arg(long)]
    denom_max: Option<u64>,
    #[arg(long)]
    stream: Option<PathBuf>,
    #[arg(long)]
    schedule: Option<PathBuf>,
    #[arg(long, num_args = 1.., value_parser = |s: &str| Block::parse(s).map_err(|e| format!("words: {e}")))]
    #[serde(serialize_with = "blocks_as_strings")]
    blocks: Vec<Block>,
    #[arg(long, value_parser = parse_number)]
    #[serde(serialize_with = "opt_rational_as_string")]
    tolerance: Option<BigRational>,
    /// Suite report (CSV, or JSON for property-p); stdout if omitted.
    #[arg(long)]
    report: Option<PathBuf>,
}

fn blocks_as_strings<S: serde::Serializer>(blocks: &[Block], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(blocks.iter().map(|b| b.to_string()))
}

fn opt_rational_as_string<S: serde::Serializer>(x: &Option<BigRational>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(x) => s.serialize_some(&format_rational(x)),
        None => s.serialize_none(),
    }
}

pub fn run(args: &VerifyArgs, config: &RunConfig) -> CliResult<()> {
    let mut run = Run::new("verify", serde_json::to_value(args).expect("arguments serialize"), config);
    let outcome = match args.suite {
        Suite::Gap => gap(args, config, &mut run),
        Suite::PropertyP => property_p(args, &mut run),
        Suite::Zn => zn(args, &mut run),
        Suite::Extension => extension(args, config, &mut run),
        Suite::BasicFactor => basic_factor(args, config, &mut run),
    };
    // keep whatever was written even when a check failed
    run.finish()?;
    outcome
}

fn write_rows<T: Serialize>(args: &VerifyArgs, run: &mut Run, rows: &[T]) -> CliResult<()> {
    match &args.report {
        Some(path) => run.write_csv(path, rows),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(&crate::run::csv_bytes(rows))
                .map_err(|e| Failure::Runtime(format!("stdout: {e}")))
        }
    }
}

fn verdict(failures: usize, total: usize, what: &str) -> CliResult<()> {
    eprintln!("{} of {total} {what} passed", total - failures);
    if failures > 0 {
        return Err(Failure::Verification(format!("{failures} of {total} {what} failed")));
    }
    Ok(())
}

#[derive(Serialize)]
struct GapRow {
    decade_lo: usize,
    decade_hi: usize,
    r: usize,
    max_gap_num: String,
    max_gap_den: String,
    /// Largest `gap * (n+1)` in the decade; the bound says it is at most 1.
    max_scaled_gap: f64,
    violations: usize,
}

struct GapCell {
    max_gap: Option<Frac>,
    max_gap_f64: f64,
    scaled: f64,
    violations: usize,
}

fn decade_of(n: usize) -> usize {
    let mut d = 1;
    while d * 10 <= n {
        d *= 10;
    }
    d
}

/// Mixes i.i.d. streams with long constant runs, which give the largest jumps.
fn gap_stream(rng: &mut ChaCha8Rng, s: usize, len: usize, alphabet: u64) -> Word {
    let mut digits = Vec::with_capacity(len);
    while digits.len() < len {
        let d = rng.gen_range(1..=alphabet);
        let run = if s.is_multiple_of(2) { 1 } else { rng.gen_range(1..=len.div_ceil(10)) };
        digits.extend(std::iter::repeat_n(d, run));
    }
    digits.truncate(len);
    Word::new(digits).expect("digits are positive")
}

fn all_blocks(k: usize, alphabet: u64) -> Vec<Block> {
    let mut blocks: Vec<Vec<u64>> = vec![vec![]];
    for _ in 0..k {
        blocks = blocks.into_iter().flat_map(|b| (1..=alphabet).map(move |d| [b.clone(), vec![d]].concat())).collect();
    }
    blocks.into_iter().map(|b| Block::new(b).expect("digits are positive")).collect()
}

fn gap(args: &VerifyArgs, config: &RunConfig, run: &mut Run) -> CliResult<()> {
    let len = args.n.unwrap_or(2000) as usize;
    let (_, r_max) = args.r.unwrap_or((0, 3));
    let k = args.k.unwrap_or(1);
    let alphabet = args.alphabet.unwrap_or(3);
    let streams = args.cases.unwrap_or(8);
    if k == 0 || alphabet == 0 || len <= k {
        return Err(Failure::Usage("gap suite needs k >= 1, alphabet >= 1 and n > k".into()));
    }
    config.check_exact_length(len)?;
    let blocks = all_blocks(k, alphabet);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut cells: std::collections::BTreeMap<(usize, usize), GapCell> = Default::default();
    let mut checks = 0usize;
    for s in 0..streams {
        let stream = gap_stream(&mut rng, s, len, alphabet);
        let ladder_config =
            LadderConfig::new(k, r_max, config.mode).exact_cap(config.exact_cap).track(blocks.iter().cloned());
        let mut ladder = CesaroLadder::new(ladder_config).map_err(|e| Failure::module("cesaro", e))?;
        let mut prev: Vec<Option<(Frac, f64)>> = vec![None; blocks.len() * (r_max + 1)];
        for &d in stream.digits() {
            ladder.push_digit(d).map_err(|e| Failure::module("cesaro", e))?;
            // the step from n - 1 to n is bounded by 1/n
            let n = ladder.n() - 1;
            for (bi, b) in blocks.iter().enumerate() {
                for r in 0..=r_max {
                    let cur = match config.mode {
                        Mode::Exact => {
                            let v = ladder.value(b, r).map_err(|e| Failure::module("cesaro", e))?;
                            let f = v.to_f64();
                            (v, f)
                        }
                        Mode::Float => {
                            let f = ladder.value_f64(b, r).map_err(|e| Failure::module("cesaro", e))?;
                            (Frac::zero(), f)
                        }
                    };
                    let slot = bi * (r_max + 1) + r;
                    if let Some((pv, pf)) = &prev[slot] {
                        checks += 1;
                        let cell = cells.entry((decade_of(n), r)).or_insert(GapCell {
                            max_gap: None,
                            max_gap_f64: 0.0,
                            scaled: 0.0,
                            violations: 0,
                        });
                        let (gap_f, scaled, ok) = match config.mode {
                            Mode::Exact => {
                                let g = cur.0.abs_diff(pv);
                                let scaled = ratio_to_f64(&(g.numer() * BigInt::from(n + 1)), g.denom());
                                let gap_f = g.to_f64();
                                if cell.max_gap.as_ref().is_none_or(|m| &g > m) {
                                    cell.max_gap = Some(g);
                                }
                                (gap_f, scaled, gap_within_bound(pv, &cur.0, n))
                            }
                            Mode::Float => {
                                let gap_f = (cur.1 - pf).abs();
                                (gap_f, gap_f * (n + 1) as f64, gap_f <= 1.0 / (n as f64 + 1.0) + 1e-12)
                            }
                        };
                        cell.max_gap_f64 = cell.max_gap_f64.max(gap_f);
                        cell.scaled = cell.scaled.max(scaled);
                        cell.violations += usize::from(!ok);
                    }
                    prev[slot] = Some(cur);
                }
            }
        }
    }
    let rows: Vec<GapRow> = cells
        .into_iter()
        .map(|((decade, r), cell)| {
            let g = match cell.max_gap {
                Some(g) => g.to_rational(),
                None => BigRational::from_float(cell.max_gap_f64).expect("gaps are finite"),
            };
            GapRow {
                decade_lo: decade,
                decade_hi: (decade * 10 - 1).min(len - 1),
                r,
                max_gap_num: g.numer().to_string(),
                max_gap_den: g.denom().to_string(),
                max_scaled_gap: cell.scaled,
                violations: cell.violations,
            }
        })
        .collect();
    write_rows(args, run, &rows)?;
    let failures = rows.iter().map(|row| row.violations).sum();
    verdict(failures, checks, "gap checks")
}

fn property_p(args: &VerifyArgs, run: &mut Run) -> CliResult<()> {
    let (Some(stream), Some(schedule)) = (&args.stream, &args.schedule) else {
        return Err(Failure::Usage("property-p needs --stream and --schedule".into()));
    };
    let stream = read_word(stream)?;
    let schedule: Schedule = read_json(schedule)?;
    let (_, r) = args.r.unwrap_or((0, 0));
    let verdicts = verify_property_p(&stream, &schedule, r).map_err(|e| Failure::module("synthesizer", e))?;
    if let Some(path) = &args.report {
        run.write_json(path, &verdicts)?;
    }
    print_verdicts(&verdicts);
    let failures = verdicts.iter().filter(|v| !v.is_witnessed()).count();
    verdict(failures, verdicts.len(), "stages")
}

#[derive(Serialize)]
struct ZnRow {
    index: usize,
    target: String,
    length: usize,
    distance: String,
    ok: bool,
}

fn describe(q: &SimplexVector) -> String {
    q.entries().iter().map(|(b, v)| format!("{b}:{}", format_rational(v))).collect::<Vec<_>>().join(" ")
}

fn zn(args: &VerifyArgs, run: &mut Run) -> CliResult<()> {
    let k = args.k.unwrap_or(2);
    let alphabet = args.alphabet.unwrap_or(3) as usize;
    let denom_max = args.denom_max.unwrap_or(6);
    let n = args.n.unwrap_or(10);
    if k == 0 || alphabet == 0 || denom_max == 0 || n == 0 {
        return Err(Failure::Usage("zn suite needs positive --k, --alphabet, --denom-max and --n".into()));
    }
    let bound = BigRational::new(1.into(), BigInt::from(n));
    let mut rows = Vec::new();
    for (index, q) in enumerate_dense(k, alphabet, denom_max).enumerate() {
        let spec = ZnSpec::new(q.clone(), n).map_err(|e| Failure::module("wordfactory", e))?;
        let w = construct_zn_word(&spec).map_err(|e| Failure::module("wordfactory", e))?;
        let distance = distance_to_target(&w, &q);
        let ok = is_in_zn(&w, &spec) && distance <= bound;
        rows.push(ZnRow { index, target: describe(&q), length: w.len(), distance: format_rational(&distance), ok });
    }
    write_rows(args, run, &rows)?;
    let failures = rows.iter().filter(|row| !row.ok).count();
    verdict(failures, rows.len(), "targets")
}

#[derive(Serialize)]
struct ExtensionRow {
    case: usize,
    target: String,
    prefix_length: usize,
    padding: usize,
    length: usize,
    distance: String,
    ok: bool,
}

fn extension(args: &VerifyArgs, config: &RunConfig, run: &mut Run) -> CliResult<()> {
    let cases = args.cases.unwrap_or(50);
    let n = args.n.unwrap_or(12);
    let alphabet = args.alphabet.unwrap_or(3) as usize;
    if n == 0 || alphabet == 0 {
        return Err(Failure::Usage("extension suite needs positive --n and --alphabet".into()));
    }
    let pool: Vec<SimplexVector> = match args.k {
        Some(k) => enumerate_dense(k, alphabet, 4).collect(),
        None => enumerate_dense(1, alphabet, 4).chain(enumerate_dense(2, alphabet, 3)).collect(),
    };
    if pool.is_empty() {
        return Err(Failure::Usage("no targets to draw from".into()));
    }
    let bound = BigRational::new(6.into(), BigInt::from(n));
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut rows = Vec::new();
    for case in 0..cases {
        let q = &pool[rng.gen_range(0..pool.len())];
        let prefix_len = rng.gen_range(0..=40);
        let omega = Word::new((0..prefix_len).map(|_| rng.gen_range(1..=5)).collect()).expect("digits are positive");
        let spec = ZnSpec::new(q.clone(), n).map_err(|e| Failure::module("wordfactory", e))?;
        let gamma = construct_zn_word(&spec).map_err(|e| Failure::module("wordfactory", e))?;
        let ell = padding_length(omega.len(), gamma.len(), q.k(), n, omega.max_digit().unwrap_or(1), spec.cutoff);
        for extra in [0, 1, 100] {
            let ext = extend_to_target(&omega, q, n, ell + extra).map_err(|e| Failure::module("wordfactory", e))?;
            let distance = distance_to_target(&ext.word, q);
            rows.push(ExtensionRow {
                case,
                target: describe(q),
                prefix_length: prefix_len,
                padding: ell,
                length: ext.word.len(),
                ok: distance <= bound,
                distance: format_rational(&distance),
            });
        }
    }
    write_rows(args, run, &rows)?;
    let failures = rows.iter().filter(|row| !row.ok).count();
    verdict(failures, rows.len(), "extensions")
}

#[derive(Serialize)]
struct BasicFactorRow {
    block: String,
    period: usize,
    r: usize,
    n: usize,
    deviation_num: String,
    deviation_den: String,
    tail_sup: f64,
}

fn basic_factor(args: &VerifyArgs, config: &RunConfig, run: &mut Run) -> CliResult<()> {
    let n_max = args.n.unwrap_or(4000) as usize;
    let (r_lo, r_hi) = args.r.unwrap_or((0, 2));
    let tolerance = args.tolerance.clone().unwrap_or_else(|| BigRational::new(1.into(), 20.into()));
    let blocks = if args.blocks.is_empty() {
        ["1", "12", "112", "1213"].iter().map(|b| Block::parse(b).expect("valid block")).collect()
    } else {
        args.blocks.clone()
    };
    if config.mode == Mode::Float {
        return Err(Failure::Usage("the basic-factor suite is exact only".into()));
    }
    config.check_exact_length(n_max)?;
    let mut rows = Vec::new();
    let mut failures = 0;
    let mut total = 0;
    for b in &blocks {
        for r in r_lo..=r_hi {
            let report = basic_factor_limit_check(b, r, n_max).map_err(|e| Failure::module("oscillation", e))?;
            total += 1;
            let last = report.final_deviation();
            let ok = report.counting_bound_ok && last <= &tolerance;
            if !ok {
                eprintln!(
                    "block {b}, r = {r}: deviation {:.3e} at n = {n_max}, counting bound {}",
                    rational_to_f64(last),
                    if report.counting_bound_ok { "held" } else { "violated" }
                );
                failures += 1;
            }
            rows.extend(report.checkpoints.iter().map(|c| BasicFactorRow {
                block: b.to_string(),
                period: report.period,
                r,
                n: c.n,
                deviation_num: c.deviation.numer().to_string(),
                deviation_den: c.deviation.denom().to_string(),
                tail_sup: c.tail_sup,
            }));
        }
    }
    write_rows(args, run, &rows)?;
    verdict(failures, total, "block/level pairs")
}
