use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use num_rational::BigRational;
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use nnlab_core::cesaro::{Mode, DEFAULT_EXACT_CAP};
use nnlab_core::exact::{parse_rational, rational_to_f64};
use nnlab_core::synthesizer::DEFAULT_TOWER_BIT_CAP;
use nnlab_core::words::Word;

/// How a command failed; decides the exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad arguments or malformed input files (exit 2).
    Usage(String),
    /// A check ran and did not hold (exit 1).
    Verification(String),
    /// A computation could not be completed (exit 1).
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Verification(_) | Failure::Runtime(_) => 1,
        }
    }

    /// Runtime failure from a core module, prefixed with the module name.
    pub fn module(module: &str, err: impl fmt::Display) -> Self {
        Failure::Runtime(format!("{module}: {err}"))
    }

    pub fn usage_in(module: &str, err: impl fmt::Display) -> Self {
        Failure::Usage(format!("{module}: {err}"))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Verification(m) => write!(f, "verification failed: {m}"),
            Failure::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

pub type CliResult<T> = Result<T, Failure>;

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub exact_cap: usize,
    pub tower_bit_cap: u64,
    pub checkpoint_ratio: f64,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Exact,
            exact_cap: DEFAULT_EXACT_CAP,
            tower_bit_cap: DEFAULT_TOWER_BIT_CAP,
            checkpoint_ratio: 1.25,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.exact_cap == 0 {
            return Err(Failure::Usage("--exact-cap must be at least 1".into()));
        }
        if self.tower_bit_cap == 0 {
            return Err(Failure::Usage("--tower-bit-cap must be at least 1".into()));
        }
        if !(self.checkpoint_ratio > 1.0 && self.checkpoint_ratio.is_finite()) {
            return Err(Failure::Usage("--rho must be a finite number above 1".into()));
        }
        Ok(())
    }

    /// Exact ladders refuse streams longer than the cap.
    pub fn check_exact_length(&self, n: usize) -> CliResult<()> {
        if self.mode == Mode::Exact && n > self.exact_cap {
            return Err(Failure::Usage(format!(
                "exact mode needs n <= --exact-cap ({}), got n = {n}; raise the cap or pass --mode float",
                self.exact_cap
            )));
        }
        Ok(())
    }
}

/// Exact rational from `p/q`, an integer or a finite decimal; a trailing
/// `f` reads the text as an `f64` and takes its exact binary value.
pub fn parse_number(text: &str) -> Result<BigRational, String> {
    let text = text.trim();
    if let Some(float) = text.strip_suffix('f') {
        let x: f64 = float.trim().parse().map_err(|_| format!("not a float: {text:?}"))?;
        return BigRational::from_float(x).ok_or_else(|| format!("not a finite float: {text:?}"));
    }
    parse_rational(text).ok_or_else(|| format!("not an exact number (p/q, integer or decimal): {text:?}"))
}

pub fn parse_ratio(text: &str) -> Result<f64, String> {
    parse_number(text).map(|x| rational_to_f64(&x))
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| {
        Failure::Usage(format!("{}: line {}, column {}: {e}", path.display(), e.line(), e.column()))
    })
}

/// A digit file: a JSON array, or the compact form `1,2,1,3`.
pub fn read_word(path: &Path) -> CliResult<Word> {
    let text = read_text(path)?;
    if text.trim_start().starts_with('[') {
        return read_json(path);
    }
    Word::parse_compact(text.trim()).map_err(|e| Failure::Usage(format!("{}: words: {e}", path.display())))
}

#[derive(Serialize)]
struct Artifact {
    path: String,
    sha256: String,
    bytes: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    arguments: &'a serde_json::Value,
    config: &'a RunConfig,
    seed: u64,
    artifacts: &'a [Artifact],
}

/// Collects the files a command writes and describes them in a manifest
/// next to the first one.
pub struct Run<'a> {
    command: &'static str,
    arguments: serde_json::Value,
    config: &'a RunConfig,
    artifacts: Vec<Artifact>,
    first: Option<PathBuf>,
}

impl<'a> Run<'a> {
    pub fn new(command: &'static str, arguments: serde_json::Value, config: &'a RunConfig) -> Self {
        Run { command, arguments, config, artifacts: Vec::new(), first: None }
    }

    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> CliResult<()> {
        fs::write(path, bytes).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))?;
        self.artifacts.push(Artifact {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
            bytes: bytes.len(),
        });
        self.first.get_or_insert_with(|| path.to_path_buf());
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, path: &Path, value: &T) -> CliResult<()> {
        let mut bytes = serde_json::to_vec_pretty(value).expect("report types serialize");
        bytes.push(b'\n');
        self.write(path, &bytes)
    }

    pub fn write_csv<T: Serialize>(&mut self, path: &Path, rows: &[T]) -> CliResult<()> {
        self.write(path, &csv_bytes(rows))
    }

    /// Writes `<first artifact>.manifest.json`; nothing if no file was written.
    pub fn finish(self) -> CliResult<()> {
        let Some(first) = &self.first else { return Ok(()) };
        let manifest = Manifest {
            tool: "nnlab",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            arguments: &self.arguments,
            config: self.config,
            seed: self.config.seed,
            artifacts: &self.artifacts,
        };
        let mut path = first.clone().into_os_string();
        path.push(".manifest.json");
        let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        bytes.push(b'\n');
        fs::write(&path, bytes)
            .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", Path::new(&path).display())))
    }
}

pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Vec<u8> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row).expect("rows serialize");
    }
    writer.into_inner().expect("in-memory writer")
}
