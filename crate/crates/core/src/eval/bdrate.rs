use crate::error::{Error, Result};

/// Minimum number of points per curve.
pub const MIN_BD_POINTS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RdPoint {
    /// Bits per pixel.
    pub rate: f64,
    /// Higher is better.
    pub quality: f64,
}

/// Rate-quality points sorted by strictly increasing rate.
#[derive(Clone, Debug, PartialEq)]
pub struct RdCurve {
    label: String,
    points: Vec<RdPoint>,
}

impl RdCurve {
    pub fn new(label: impl Into<String>, mut points: Vec<RdPoint>) -> Result<Self> {
        if points.iter().any(|p| !(p.rate > 0.0 && p.rate.is_finite()) || !p.quality.is_finite()) {
            return Err(Error::domain("RD points need positive rates and finite qualities"));
        }
        points.sort_by(|a, b| a.rate.total_cmp(&b.rate));
        if points.windows(2).any(|w| w[0].rate == w[1].rate) {
            return Err(Error::domain("RD curve rates must be distinct"));
        }
        Ok(RdCurve {
            label: label.into(),
            points,
        })
    }

    /// Curve from distortions (lower is better), stored as `-10 log10(d)`.
    pub fn from_distortions(label: impl Into<String>, rates: &[f64], distortions: &[f64]) -> Result<Self> {
        if rates.len() != distortions.len() {
            return Err(Error::domain("rates and distortions differ in length"));
        }
        if distortions.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::domain("distortions must be positive"));
        }
        let pts = rates
            .iter()
            .zip(distortions)
            .map(|(&rate, &d)| RdPoint {
                rate,
                quality: super::distortion_to_quality(d),
            })
            .collect();
        Self::new(label, pts)
    }

    pub fn from_pairs(label: impl Into<String>, rates: &[f64], qualities: &[f64]) -> Result<Self> {
        if rates.len() != qualities.len() {
            return Err(Error::domain("rates and qualities differ in length"));
        }
        let pts = rates
            .iter()
            .zip(qualities)
            .map(|(&rate, &quality)| RdPoint { rate, quality })
            .collect();
        Self::new(label, pts)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn points(&self) -> &[RdPoint] {
        &self.points
    }
}

/// Natural cubic spline through `(x_k, y_k)`, `x` strictly increasing.
#[derive(Clone, Debug)]
pub struct NaturalSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl NaturalSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::domain("spline needs at least two knots"));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("spline knots must be strictly increasing"));
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior second derivatives.
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut upper = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 0..k {
                let h0 = x[i + 1] - x[i];
                let h1 = x[i + 2] - x[i + 1];
                diag[i] = 2.0 * (h0 + h1);
                upper[i] = h1;
                rhs[i] = 6.0 * ((y[i + 2] - y[i + 1]) / h1 - (y[i + 1] - y[i]) / h0);
            }
            for i in 1..k {
                let lower = x[i + 1] - x[i];
                let w = lower / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
            }
        }
        Ok(NaturalSpline { x, y, m })
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let k = self.segment(t);
        let (x0, x1) = (self.x[k], self.x[k + 1]);
        let h = x1 - x0;
        let (a, b) = (x1 - t, t - x0);
        self.m[k] * a.powi(3) / (6.0 * h)
            + self.m[k + 1] * b.powi(3) / (6.0 * h)
            + (self.y[k] / h - self.m[k] * h / 6.0) * a
            + (self.y[k + 1] / h - self.m[k + 1] * h / 6.0) * b
    }

    /// Antiderivative on segment `k`, relative to an arbitrary constant.
    fn primitive(&self, k: usize, t: f64) -> f64 {
        let (x0, x1) = (self.x[k], self.x[k + 1]);
        let h = x1 - x0;
        let (a, b) = (x1 - t, t - x0);
        -self.m[k] * a.powi(4) / (24.0 * h) + self.m[k + 1] * b.powi(4) / (24.0 * h)
            - (self.y[k] / h - self.m[k] * h / 6.0) * a * a / 2.0
            + (self.y[k + 1] / h - self.m[k + 1] * h / 6.0) * b * b / 2.0
    }

    /// Exact integral over `[lo, hi]` inside the knot range.
    pub fn integrate(&self, lo: f64, hi: f64) -> f64 {
        let (ka, kb) = (self.segment(lo), self.segment(hi));
        if ka == kb {
            return self.primitive(ka, hi) - self.primitive(ka, lo);
        }
        let mut s = self.primitive(ka, self.x[ka + 1]) - self.primitive(ka, lo);
        for k in ka + 1..kb {
            s += self.primitive(k, self.x[k + 1]) - self.primitive(k, self.x[k]);
        }
        s + self.primitive(kb, hi) - self.primitive(kb, self.x[kb])
    }
}

fn log_rate_spline(c: &RdCurve) -> Result<NaturalSpline> {
    let mut pts: Vec<(f64, f64)> = c.points.iter().map(|p| (p.quality, p.rate.ln())).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::domain(format!("curve '{}' repeats a quality value", c.label)));
    }
    NaturalSpline::new(pts.iter().map(|p| p.0).collect(), pts.iter().map(|p| p.1).collect())
}

/// Average rate difference of `test` against `reference` at equal quality,
/// in percent; negative means `test` needs less rate.
pub fn bd_rate(reference: &RdCurve, test: &RdCurve) -> Result<f64> {
    for c in [reference, test] {
        if c.points.len() < MIN_BD_POINTS {
            return Err(Error::domain(format!(
                "curve '{}' has {} points, need {MIN_BD_POINTS}",
                c.label,
                c.points.len()
            )));
        }
    }
    let (sr, st) = (log_rate_spline(reference)?, log_rate_spline(test)?);
    let lo = sr.x[0].max(st.x[0]);
    let hi = sr.x[sr.x.len() - 1].min(st.x[st.x.len() - 1]);
    if !(hi > lo) {
        return Err(Error::domain("RD curves do not overlap in quality"));
    }
    let avg = (st.integrate(lo, hi) - sr.integrate(lo, hi)) / (hi - lo);
    Ok((avg.exp() - 1.0) * 100.0)
}
