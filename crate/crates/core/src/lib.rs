//! Block-based luma codec with feature-aware rate-distortion optimization.
//!
//! The encoder chooses, per 16x16 macroblock, a transform partition and a
//! quantizer offset by minimizing either plain SSE or the Jacobian-weighted
//! IDSE distortion against the bit cost of each candidate. The IDSE metric
//! uses a Rademacher sketch of a feature extractor's Jacobian, stored in an
//! `SKJ1` side file.

pub mod codec;
pub mod error;
pub mod eval;
pub mod grid;
pub mod image;
pub mod linalg;
pub mod prng;
pub mod rdo;
pub mod sketch;
pub mod toyfe;

pub use codec::{decode, BitstreamHeader, MetricKind, Partition};
pub use error::{Error, Result};
pub use grid::{BlockGrid, MB_SIZE};
pub use image::{load_pgm, save_pgm, ImagePlane, PixelError};
pub use prng::Prng;
pub use rdo::{encode_with_rdo, Encoder, MetricConfig};
pub use sketch::{ImportanceMap, SketchMatrix, SketchedJacobian};
pub use toyfe::{LipschitzTask, ToyFeatureExtractor};
