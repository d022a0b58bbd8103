use crate::error::{Error, Result};
use statrs::function::{beta as sbeta, gamma as sgamma};

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    sgamma::ln_gamma(x)
}

/// `Γ(x)`, including negative non-integer arguments.
pub fn gamma(x: f64) -> f64 {
    sgamma::gamma(x)
}

/// `1/Γ(x)`, zero at the poles.
pub fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        0.0
    } else if x > 171.0 {
        (-ln_gamma(x)).exp()
    } else {
        1.0 / gamma(x)
    }
}

/// Lower incomplete gamma `γ(a, x) = ∫₀ˣ t^(a-1) e^(-t) dt`.
pub fn lower_incomplete_gamma(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !(x >= 0.0) {
        return Err(Error::Domain(format!("lower incomplete gamma needs a > 0, x >= 0 (a={a}, x={x})")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(gamma(a));
    }
    // regularised form times Γ(a) keeps full relative accuracy for large a
    let p = sgamma::checked_gamma_lr(a, x).map_err(|e| Error::Domain(e.to_string()))?;
    Ok(p * gamma(a))
}

/// Regularised upper incomplete gamma `Q(a, x)`.
pub fn upper_gamma_regularized(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !(x >= 0.0) {
        return Err(Error::Domain(format!("upper incomplete gamma needs a > 0, x >= 0 (a={a}, x={x})")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    sgamma::checked_gamma_ur(a, x).map_err(|e| Error::Domain(e.to_string()))
}

/// Unregularised incomplete beta `B_x(a, b) = ∫₀ˣ t^(a-1) (1-t)^(b-1) dt`.
pub fn incomplete_beta(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !(b > 0.0) || !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("incomplete beta needs a, b > 0 and x in [0,1] (a={a}, b={b}, x={x})")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let reg = sbeta::checked_beta_reg(a, b, x).map_err(|e| Error::Domain(e.to_string()))?;
    Ok(reg * sbeta::ln_beta(a, b).exp())
}
