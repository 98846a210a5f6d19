use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use clap::{ArgGroup, Args, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use nnlab_core::cesaro::{checkpoint_rows, geometric_checkpoints, CesaroLadder, CheckpointRow, LadderConfig, Mode};
use nnlab_core::exact::format_rational;
use nnlab_core::expansions::{expand as expand_digits, sample_uniform, ExpansionError, ExpansionKind, RealInput};
use nnlab_core::oscillation::{oscillation_report, theoretical_range, ReportOptions};
use nnlab_core::simplex::SimplexVector;
use nnlab_core::synthesizer::{synthesize as run_synthesis, Schedule, StageVerdict};
use nnlab_core::wordfactory::{construct_zn_word, distance_to_target, is_in_zn, ZnSpec};
use nnlab_core::words::{basic_period, Block, Word};

use crate::run::{parse_number, read_json, read_word, CliResult, Failure, Run, RunConfig};

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum System {
    Cf,
    Lueroth,
}

#[derive(Args, Serialize)]
#[command(group(ArgGroup::new("input").required(true).args(["value", "rational", "decimal", "uniform"])))]
pub struct ExpandArgs {
    #[arg(long, value_enum)]
    system: System,
    /// Exact expression over one square root, e.g. "(sqrt(5)-1)/2".
    #[arg(long)]
    value: Option<String>,
    /// Exact rational `p/q`.
    #[arg(long)]
    rational: Option<String>,
    /// Decimal approximation; `0.7071~12` states the error as 10^-12.
    #[arg(long)]
    decimal: Option<String>,
    /// A point drawn uniformly from (0, 1) with --seed (continued fractions only).
    #[arg(long)]
    uniform: bool,
    #[arg(long, default_value_t = 100)]
    digits: usize,
    /// Digit file (JSON array); stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn expansion_failure(e: ExpansionError) -> Failure {
    match e {
        ExpansionError::Parse { .. } | ExpansionError::OutOfRange { .. } | ExpansionError::EmptyDigits => {
            Failure::usage_in("expansions", e)
        }
        _ => Failure::module("expansions", e),
    }
}

fn word_json(w: &Word) -> Vec<u8> {
    let mut bytes = serde_json::to_vec(w).expect("words serialize");
    bytes.push(b'\n');
    bytes
}

fn arguments<T: Serialize>(args: &T) -> serde_json::Value {
    serde_json::to_value(args).expect("arguments serialize")
}

fn emit(bytes: &[u8]) -> CliResult<()> {
    std::io::stdout().write_all(bytes).map_err(|e| Failure::Runtime(format!("stdout: {e}")))
}

pub fn expand(args: &ExpandArgs, config: &RunConfig) -> CliResult<()> {
    let kind = match args.system {
        System::Cf => ExpansionKind::ContinuedFraction,
        System::Lueroth => ExpansionKind::Lueroth,
    };
    let word = if args.uniform {
        if !matches!(kind, ExpansionKind::ContinuedFraction) {
            return Err(Failure::Usage("--uniform is only available with --system cf".into()));
        }
        sample_uniform(config.seed, args.digits).map_err(expansion_failure)?
    } else {
        let input = if let Some(v) = &args.value {
            RealInput::parse_value(v)
        } else if let Some(r) = &args.rational {
            RealInput::parse_rational(r)
        } else {
            RealInput::parse_decimal(args.decimal.as_deref().expect("one input is required"))
        }
        .map_err(expansion_failure)?;
        expand_digits(kind, &input, args.digits).map_err(expansion_failure)?
    };
    match &args.out {
        Some(path) => {
            let mut run = Run::new("expand", arguments(args), config);
            run.write(path, &word_json(&word))?;
            run.finish()?;
            println!("{} digits -> {}", word.len(), path.display());
            Ok(())
        }
        None => emit(&word_json(&word)),
    }
}

#[derive(Args, Serialize)]
pub struct ZnArgs {
    /// Target simplex vector (JSON).
    #[arg(long)]
    target: PathBuf,
    /// Accuracy: the word's frequencies are within 1/n of the target.
    #[arg(long)]
    n: u64,
    /// Word file (JSON array); the word goes into the certificate if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Certificate file; stdout if omitted.
    #[arg(long)]
    certificate: Option<PathBuf>,
}

#[derive(Serialize)]
struct ZnCertificate {
    k: usize,
    n: u64,
    length: usize,
    min_length: usize,
    /// Exact l1 distance between the word's frequency vector and the target.
    distance: String,
    bound: String,
    in_zn: bool,
    /// Compact digits, when no word file is written.
    #[serde(skip_serializing_if = "Option::is_none")]
    word: Option<String>,
}

pub fn zn(args: &ZnArgs, config: &RunConfig) -> CliResult<()> {
    let q: SimplexVector = read_json(&args.target)?;
    let spec = ZnSpec::new(q.clone(), args.n).map_err(|e| Failure::usage_in("wordfactory", e))?;
    let word = construct_zn_word(&spec).map_err(|e| Failure::module("wordfactory", e))?;
    let distance = distance_to_target(&word, &q);
    let cert = ZnCertificate {
        k: q.k(),
        n: args.n,
        length: word.len(),
        min_length: spec.min_length,
        distance: format_rational(&distance),
        bound: format!("1/{}", args.n),
        in_zn: is_in_zn(&word, &spec),
        word: args.out.is_none().then(|| word.to_compact()),
    };
    let mut run = Run::new("zn", arguments(args), config);
    if let Some(path) = &args.out {
        run.write(path, &word_json(&word))?;
    }
    match &args.certificate {
        Some(path) => run.write_json(path, &cert)?,
        None => {
            let mut bytes = serde_json::to_vec_pretty(&cert).expect("certificate serializes");
            bytes.push(b'\n');
            emit(&bytes)?;
        }
    }
    run.finish()?;
    if !cert.in_zn {
        return Err(Failure::Verification(format!("word of length {} is not in the target set", word.len())));
    }
    Ok(())
}

#[derive(Args, Serialize)]
pub struct SynthesizeArgs {
    /// Schedule file (JSON).
    #[arg(long)]
    schedule: PathBuf,
    /// Stream file (JSON array).
    #[arg(long, default_value = "stream.json")]
    out: PathBuf,
    /// Per-stage witnesses (JSON).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Serialize)]
struct SynthesisReport<'a> {
    length: usize,
    stage_ends: &'a [usize],
    verdicts: &'a [StageVerdict],
}

pub fn print_verdicts(verdicts: &[StageVerdict]) {
    for v in verdicts {
        match v {
            StageVerdict::Witnessed(w) => println!(
                "stage {}: window ({}, {}]{} sup {} <= {}",
                w.stage,
                w.j,
                w.window_end,
                if w.truncated { " (truncated)" } else { "" },
                format_rational(&w.sup),
                format_rational(&w.epsilon),
            ),
            StageVerdict::Failed(f) => println!("stage {}: FAILED {}", f.stage, f.reason),
        }
    }
}

pub fn synthesize(args: &SynthesizeArgs, config: &RunConfig) -> CliResult<()> {
    let schedule: Schedule = read_json(&args.schedule)?;
    schedule.validate().map_err(|e| Failure::usage_in("synthesizer", e))?;
    let synthesis = run_synthesis(&schedule).map_err(|e| Failure::module("synthesizer", e))?;
    let mut run = Run::new("synthesize", arguments(args), config);
    run.write(&args.out, &word_json(&synthesis.stream))?;
    if let Some(path) = &args.report {
        let report = SynthesisReport {
            length: synthesis.stream.len(),
            stage_ends: &synthesis.stage_ends,
            verdicts: &synthesis.verdicts,
        };
        run.write_json(path, &report)?;
    }
    run.finish()?;
    print_verdicts(&synthesis.verdicts);
    let failed = synthesis.verdicts.iter().filter(|v| !v.is_witnessed()).count();
    if failed > 0 {
        return Err(Failure::Verification(format!("{failed} of {} stages have no witness", synthesis.verdicts.len())));
    }
    Ok(())
}

/// `a..b` or `a..=b` (both inclusive), or a single `r` meaning `0..r`.
pub fn parse_levels(text: &str) -> Result<(usize, usize), String> {
    let bad = || format!("levels must look like 3 or 0..3, got {text:?}");
    let (lo, hi) = match text.split_once("..") {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim_start_matches('=').trim().parse().map_err(|_| bad())?),
        None => (0, text.trim().parse().map_err(|_| bad())?),
    };
    if lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn parse_window(text: &str) -> Result<(usize, usize), String> {
    let bad = || format!("window must look like n0:n1, got {text:?}");
    let (a, b) = text.split_once(':').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn parse_block(text: &str) -> Result<Block, String> {
    Block::parse(text).map_err(|e| format!("words: {e}"))
}

#[derive(Args, Serialize)]
pub struct AnalyzeArgs {
    /// Digit stream (JSON array or compact `1,2,1`).
    #[arg(long)]
    digits: PathBuf,
    /// Blocks to follow, e.g. 1 12 112 (comma-separated for digits above 9).
    #[arg(long, num_args = 1.., required = true, value_parser = parse_block)]
    #[serde(serialize_with = "blocks_as_strings")]
    blocks: Vec<Block>,
    /// Cesàro levels, e.g. 0..3.
    #[arg(long, default_value = "0..3", value_parser = parse_levels)]
    r: (usize, usize),
    /// Window n0:n1, read as (n0, n1]; defaults to the last three quarters.
    #[arg(long, value_parser = parse_window)]
    window: Option<(usize, usize)>,
    /// Largest acceptable shortfall against [0, 1/p].
    #[arg(long, default_value = "1/50", value_parser = parse_number)]
    #[serde(serialize_with = "rational_as_string")]
    tolerance: BigRational,
    /// Interval table (CSV); stdout if omitted.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Values at geometric checkpoints (CSV).
    #[arg(long)]
    checkpoints: Option<PathBuf>,
}

fn blocks_as_strings<S: serde::Serializer>(blocks: &[Block], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(blocks.iter().map(|b| b.to_string()))
}

fn rational_as_string<S: serde::Serializer>(x: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_rational(x))
}

#[derive(Serialize)]
struct IntervalRow {
    block: String,
    r: usize,
    n0: usize,
    n1: usize,
    lo_num: String,
    lo_den: String,
    hi_num: String,
    hi_den: String,
    period: usize,
    shortfall: String,
    shortfall_approx: f64,
    gap_bound_ok: bool,
}

impl IntervalRow {
    fn new(block: &Block, r: usize, window: (usize, usize), lo: &BigRational, hi: &BigRational, gap_ok: bool) -> Self {
        let (_, top) = theoretical_range(block);
        let shortfall = lo.clone().max(&top - hi);
        IntervalRow {
            block: block.to_string(),
            r,
            n0: window.0,
            n1: window.1,
            lo_num: lo.numer().to_string(),
            lo_den: lo.denom().to_string(),
            hi_num: hi.numer().to_string(),
            hi_den: hi.denom().to_string(),
            period: basic_period(block),
            shortfall: format_rational(&shortfall),
            shortfall_approx: nnlab_core::exact::rational_to_f64(&shortfall),
            gap_bound_ok: gap_ok,
        }
    }
}

fn float_rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("ladder values are finite")
}

/// Float-mode pass over one group of same-length blocks: observed ranges
/// in the window plus checkpoint values.
fn float_scan(
    stream: &Word,
    group: &[Block],
    levels: (usize, usize),
    window: (usize, usize),
    rho: f64,
) -> CliResult<(Vec<IntervalRow>, Vec<CheckpointRow>)> {
    let k = group[0].k();
    let config = LadderConfig::new(k, levels.1, Mode::Float).track(group.iter().cloned());
    let mut ladder = CesaroLadder::new(config).map_err(|e| Failure::module("cesaro", e))?;
    let marks = geometric_checkpoints(rho, stream.len());
    let slots = group.len() * (levels.1 + 1);
    let mut lo = vec![f64::INFINITY; slots];
    let mut hi = vec![f64::NEG_INFINITY; slots];
    let mut prev = vec![f64::NAN; slots];
    let mut gap_ok = vec![true; slots];
    let mut checkpoints = Vec::new();
    for &d in stream.digits() {
        ladder.push_digit(d).map_err(|e| Failure::module("cesaro", e))?;
        let n = ladder.n();
        let mark = marks.binary_search(&n).is_ok();
        if n > window.1 && !mark {
            continue;
        }
        for (bi, b) in group.iter().enumerate() {
            for r in 0..=levels.1 {
                let v = ladder.value_f64(b, r).map_err(|e| Failure::module("cesaro", e))?;
                let s = bi * (levels.1 + 1) + r;
                if n > window.0 && n <= window.1 {
                    lo[s] = lo[s].min(v);
                    hi[s] = hi[s].max(v);
                    // the step into the window counts too
                    if (v - prev[s]).abs() > 1.0 / n as f64 + 1e-12 {
                        gap_ok[s] = false;
                    }
                }
                prev[s] = v;
                if mark && r >= levels.0 {
                    let x = float_rational(v);
                    checkpoints.push(CheckpointRow {
                        n,
                        r,
                        block: b.to_string(),
                        value_num: x.numer().to_string(),
                        value_den: x.denom().to_string(),
                    });
                }
            }
        }
    }
    let mut rows = Vec::new();
    for (bi, b) in group.iter().enumerate() {
        for r in levels.0..=levels.1 {
            let s = bi * (levels.1 + 1) + r;
            rows.push(IntervalRow::new(b, r, window, &float_rational(lo[s]), &float_rational(hi[s]), gap_ok[s]));
        }
    }
    Ok((rows, checkpoints))
}

fn check_window(stream: &Word, k: usize, (n0, n1): (usize, usize)) -> CliResult<()> {
    if n0 < k || n0 >= n1 || n1 > stream.len() {
        return Err(Failure::Usage(format!(
            "window ({n0}, {n1}] must satisfy k = {k} <= n0 < n1 <= stream length {}",
            stream.len()
        )));
    }
    Ok(())
}

pub fn analyze(args: &AnalyzeArgs, config: &RunConfig) -> CliResult<()> {
    let stream = read_word(&args.digits)?;
    let mut groups: BTreeMap<usize, Vec<Block>> = BTreeMap::new();
    for b in &args.blocks {
        let group = groups.entry(b.k()).or_default();
        if !group.contains(b) {
            group.push(b.clone());
        }
    }
    let levels = args.r;
    let mut rows: Vec<IntervalRow> = Vec::new();
    let mut checkpoints = Vec::new();
    for (&k, group) in &groups {
        let window = args.window.unwrap_or_else(|| (k.max(stream.len() / 4), stream.len()));
        check_window(&stream, k, window)?;
        match config.mode {
            Mode::Exact => {
                let reach = if args.checkpoints.is_some() { stream.len() } else { window.1 };
                config.check_exact_length(reach)?;
                let options = ReportOptions { window: Some(window), tolerance: args.tolerance.clone() };
                let report = oscillation_report(&stream, group, levels.1, &options)
                    .map_err(|e| Failure::module("oscillation", e))?;
                for row in report.rows.iter().filter(|row| row.estimate.r >= levels.0) {
                    let e = &row.estimate;
                    rows.push(IntervalRow::new(&e.block, e.r, (e.n0, e.n1), &e.lo, &e.hi, e.gap_bound_ok));
                }
                if args.checkpoints.is_some() {
                    let cp = checkpoint_rows(&stream, k, levels.1, group, config.checkpoint_ratio, config.exact_cap)
                        .map_err(|e| Failure::module("cesaro", e))?;
                    checkpoints.extend(cp.into_iter().filter(|row| row.r >= levels.0));
                }
            }
            Mode::Float => {
                let (r, c) = float_scan(&stream, group, levels, window, config.checkpoint_ratio)?;
                rows.extend(r);
                checkpoints.extend(c);
            }
        }
    }
    // rows in the order the blocks were given
    let order: BTreeMap<String, usize> =
        args.blocks.iter().enumerate().rev().map(|(i, b)| (b.to_string(), i)).collect();
    rows.sort_by_key(|row| (order[&row.block], row.r));
    let realized = rows
        .iter()
        .all(|row| parse_number(&row.shortfall).expect("formatted rationals parse") <= args.tolerance);

    let mut run = Run::new("analyze", arguments(args), config);
    match &args.report {
        Some(path) => run.write_csv(path, &rows)?,
        None => emit(&crate::run::csv_bytes(&rows))?,
    }
    if let Some(path) = &args.checkpoints {
        run.write_csv(path, &checkpoints)?;
    }
    run.finish()?;
    let worst = rows
        .iter()
        .map(|row| parse_number(&row.shortfall).expect("formatted rationals parse"))
        .max()
        .unwrap_or_else(|| BigRational::from_integer(BigInt::from(0)));
    eprintln!(
        "{} rows; worst shortfall {:.6}; tolerance {}; {}",
        rows.len(),
        nnlab_core::exact::rational_to_f64(&worst),
        format_rational(&args.tolerance),
        if realized { "full range realized" } else { "range not realized" },
    );
    Ok(())
}
