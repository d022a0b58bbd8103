use super::gamma::{ln_gamma, upper_gamma_regularized};
use crate::error::{Error, Result};

/// Lower-triangular Toeplitz matrix stored by its first column.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzL {
    first_column: Vec<f64>,
}

impl ToeplitzL {
    pub fn new(first_column: Vec<f64>) -> Result<Self> {
        if first_column.is_empty() {
            return Err(Error::Domain("Toeplitz matrix needs order >= 1".into()));
        }
        Ok(ToeplitzL { first_column })
    }

    pub fn order(&self) -> usize {
        self.first_column.len()
    }

    pub fn first_column(&self) -> &[f64] {
        &self.first_column
    }

    /// Dense row-major copy, mostly for testing.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.order();
        (0..n).map(|i| (0..n).map(|j| if i >= j { self.first_column[i - j] } else { 0.0 }).collect()).collect()
    }
}

/// First column of `exp(Q)` for lower-triangular Toeplitz `Q`.
pub fn toeplitz_exp(q: &ToeplitzL) -> ToeplitzL {
    let q = q.first_column();
    let mut c = Vec::with_capacity(q.len());
    c.push(q[0].exp());
    for k in 1..q.len() {
        let s: f64 = (1..=k).map(|j| j as f64 * q[j] * c[k - j]).sum();
        c.push(s / k as f64);
    }
    ToeplitzL { first_column: c }
}

/// Sum of the first column of `exp(Q)`.
pub fn toeplitz_exp_l1(q: &ToeplitzL) -> Result<f64> {
    if q.order() == 0 {
        return Err(Error::Domain("Toeplitz order must be >= 1".into()));
    }
    Ok(toeplitz_exp(q).first_column.iter().sum())
}

/// Round half away from zero.
pub fn round_half_away(x: f64) -> f64 {
    // f64::round already rounds ties away from zero
    x.round()
}

/// Truncation order `round(3 m1)`, at least one.
pub fn varpi(m1: f64) -> usize {
    round_half_away(3.0 * m1).max(1.0) as usize
}

/// Truncated-Erlang CCDF `Σ_{k<ϖ} (x/scale)^k / k! e^{-x/scale}` with `ϖ = round(shape)`.
pub fn gamma_sum_ccdf(x: f64, shape: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let n = round_half_away(shape).max(1.0) as usize;
    let y = x / scale;
    if !y.is_finite() {
        return 0.0;
    }
    // for integer order the truncated series is the regularized upper incomplete gamma
    if let Ok(v) = upper_gamma_regularized(n as f64, y) {
        return v.clamp(0.0, 1.0);
    }
    let ly = y.ln();
    let terms: Vec<f64> = (0..n).map(|k| k as f64 * ly - y - ln_gamma(k as f64 + 1.0)).collect();
    let mx = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = terms.iter().map(|t| (t - mx).exp()).sum();
    (mx + s.ln()).exp().min(1.0)
}
