//! Scalar quantization with an exponential QP-to-step mapping.

/// Smallest and largest per-block QP offsets searched by the encoder.
pub const DQP_MIN: i32 = -4;
pub const DQP_MAX: i32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuantizerSpec {
    pub qp: i32,
    pub dqp: i32,
}

impl QuantizerSpec {
    pub fn new(qp: i32, dqp: i32) -> Self {
        QuantizerSpec { qp, dqp }
    }

    /// Step size `2^((qp + dqp - 4) / 6)`: doubles every 6 QP.
    pub fn step(&self) -> f64 {
        step_for_qp(self.qp + self.dqp)
    }
}

pub fn step_for_qp(qp: i32) -> f64 {
    ((qp - 4) as f64 / 6.0).exp2()
}

/// Round-half-away-from-zero of `y / step`.
#[inline]
pub fn quantize_value(y: f64, step: f64) -> i32 {
    (y / step).round() as i32
}

pub fn quantize(coeffs: &[f64], step: f64, levels: &mut [i32]) {
    for (q, &y) in levels.iter_mut().zip(coeffs) {
        *q = quantize_value(y, step);
    }
}

pub fn dequantize(levels: &[i32], step: f64, out: &mut [f64]) {
    for (y, &q) in out.iter_mut().zip(levels) {
        *y = f64::from(q) * step;
    }
}
