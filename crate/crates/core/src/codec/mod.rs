//! Transform coding: DCT, quantization, Exp-Golomb entropy coding, RDO
//! candidate enumeration, and the IDS1 bitstream.

pub mod bits;
pub mod bitstream;
pub mod candidate;
pub mod dct;
pub mod entropy;
pub mod quant;

pub use bitstream::{decode, demux, mux, BitstreamHeader, MacroblockChoice, MetricKind};
pub use candidate::{
    candidate_index, candidate_params, enumerate_candidates, CandidateSet, CodingCandidate,
    Levels, N_CANDIDATES, SIDE_INFO_BITS,
};
pub use dct::{forward_mb, inverse_mb, Partition, TransformSpec};
pub use entropy::{entropy_decode_block, entropy_encode_block, zigzag};
pub use quant::{dequantize, quantize, QuantizerSpec, DQP_MAX, DQP_MIN};
