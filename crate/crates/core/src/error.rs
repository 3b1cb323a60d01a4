use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("bitstring of {bits} bits is not a whole number of {width}-bit codons")]
    RaggedBitstring { bits: usize, width: usize },

    #[error("codon index {index} is outside the genetic code (size {size})")]
    CodonOutOfRange { index: usize, size: usize },

    #[error("genetic code line {line}: {reason}")]
    GeneticCode { line: usize, reason: String },

    #[error("maze: {0}")]
    Maze(String),

    #[error("food is unreachable from start cell ({row}, {col})")]
    UnreachableFood { row: usize, col: usize },

    #[error("genomes must have equal length for crossover ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },

    #[error("{mutation} mutation does not apply to {encoding} genomes")]
    EncodingMismatch {
        mutation: &'static str,
        encoding: &'static str,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("run record line {line}: {reason}")]
    Record { line: usize, reason: String },

    #[error("statistics: {0}")]
    Stats(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}
