use std::io;

use thiserror::Error;

/// Errors produced by the codec, sketching, and evaluation layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    /// Malformed input file or bitstream.
    #[error("format error: {0}")]
    Format(String),

    /// Argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Sketch computed for a different pixel grid than the image it is used with.
    #[error("grid mismatch: sketch is {sketch_w}x{sketch_h}, image is {image_w}x{image_h}")]
    GridMismatch {
        sketch_w: usize,
        sketch_h: usize,
        image_w: usize,
        image_h: usize,
    },

    /// An iterative method ran out of iterations.
    #[error("no convergence after {iterations} iterations (last estimate {last_estimate:e})")]
    Convergence {
        iterations: usize,
        last_estimate: f64,
    },
}

impl Error {
    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
