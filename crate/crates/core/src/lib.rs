//! Iterated Cesàro block frequencies, word construction and certified digit
//! expansions for building and checking non-normal numbers.

pub mod cesaro;
pub mod exact;
pub mod expansions;
pub mod oscillation;
pub mod serial;
pub mod simplex;
pub mod synthesizer;
pub mod wordfactory;
pub mod words;

pub use cesaro::{CesaroLadder, LadderConfig, Mode};
pub use exact::Frac;
pub use simplex::SimplexVector;
pub use words::{Block, Digit, FreqVector, Word};

/// Any error raised by the library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Words(#[from] words::WordsError),
    #[error(transparent)]
    Simplex(#[from] simplex::SimplexError),
    #[error(transparent)]
    Cesaro(#[from] cesaro::CesaroError),
    #[error(transparent)]
    Factory(#[from] wordfactory::FactoryError),
    #[error(transparent)]
    Synth(#[from] synthesizer::SynthError),
    #[error(transparent)]
    Expansion(#[from] expansions::ExpansionError),
    #[error(transparent)]
    Oscillation(#[from] oscillation::OscillationError),
}
