use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("input contains no events")]
    EmptyInput,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// No node has two or more incident events, so the transition time
    /// limit cannot be derived from the data.
    #[error("transition time limit undefined: no node has two or more incident events")]
    UndefinedDeltaC,

    #[error("intensity undefined: {0}")]
    UndefinedIntensity(&'static str),

    #[error("invalid motif: {0}")]
    InvalidMotif(String),

    #[error("edge ({src}, {dst}) was never observed")]
    UnknownEdge { src: u32, dst: u32 },

    #[error("snapshot error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}
