//! Closed-form performance expressions: the handoff probability from the
//! circumcenter-process void probability, the Toeplitz coverage bound under
//! Gamma fading, the exact no-fading coverage and the interference moments.

use crate::channel::FadingParams;
use crate::error::{Error, Result};
use crate::geometry::lens_area;
use crate::mobility::{height_diff_pdf, hop_length_pdf, steady_height_pdf, MobilityConfig};
use crate::quad::{gauss_legendre_on, integrate, integrate_box, integrate_box_with, QuadOpts, QuadResult};
use crate::specfun::{gauss_2f1, incomplete_beta, kummer_1f1, ln_gamma, toeplitz_exp_l1, varpi, ToeplitzL};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::io::Write;

/// Upper end of `t = λπ r3²`; the Gamma(3) weight beyond it is below 1e-14.
pub const T_MAX: f64 = 40.0;

/// Gauss-Legendre nodes used for the height average.
const HEIGHT_NODES: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    /// BS intensity per square metre.
    pub lambda: f64,
    pub alpha: f64,
    /// Linear SIR thresholds.
    pub gamma_grid: Vec<f64>,
    pub beta: f64,
    pub fading: FadingParams,
    pub mobility: MobilityConfig,
    pub quad_tol: f64,
    pub quad_max_depth: usize,
    /// Evaluate at this UAV height instead of averaging over the stationary law.
    pub fixed_height: Option<f64>,
}

impl AnalysisConfig {
    /// Config with the -10..20 dB grid in 2 dB steps and β = 0.
    pub fn new(lambda: f64, alpha: f64, fading: FadingParams, mobility: MobilityConfig) -> Result<Self> {
        let cfg = AnalysisConfig {
            lambda,
            alpha,
            gamma_grid: db_grid(-10.0, 20.0, 2.0).into_iter().map(db_to_linear).collect(),
            beta: 0.0,
            fading,
            mobility,
            quad_tol: 1e-4,
            quad_max_depth: 200,
            fixed_height: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::Config(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.alpha > 2.0) || !self.alpha.is_finite() {
            return Err(Error::Config(format!("alpha must exceed 2, got {}", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::Config(format!("beta must lie in [0,1], got {}", self.beta)));
        }
        if !(self.quad_tol > 0.0) || self.quad_max_depth == 0 {
            return Err(Error::Config("quadrature tolerance and depth must be positive".into()));
        }
        if self.gamma_grid.iter().any(|g| !(*g >= 0.0)) {
            return Err(Error::Config("SIR thresholds must be non-negative".into()));
        }
        if let Some(h) = self.fixed_height {
            if !(h >= self.mobility.h_min && h <= self.mobility.h_max) {
                return Err(Error::Config(format!("fixed height {h} outside [{}, {}]", self.mobility.h_min, self.mobility.h_max)));
            }
        }
        self.mobility.validate_with(0.0)
    }

    fn quad(&self) -> QuadOpts {
        QuadOpts { rel_tol: self.quad_tol, abs_tol: self.quad_tol * 1e-6, max_subdivisions: self.quad_max_depth }
    }

    /// Mean UAV height, `(h_min + h_max) / 2`.
    pub fn h_bar(&self) -> f64 {
        0.5 * (self.mobility.h_min + self.mobility.h_max)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// `lo, lo+step, ..., hi` in dB.
pub fn db_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CurveKind {
    UpperBoundFading,
    ExactNofading,
    WithHandoffs,
}

impl CurveKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CurveKind::UpperBoundFading => "upper_bound_fading",
            CurveKind::ExactNofading => "exact_nofading",
            CurveKind::WithHandoffs => "with_handoffs",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageCurve {
    pub kind: CurveKind,
    pub gamma_db: Vec<f64>,
    pub value: Vec<f64>,
    pub err_estimate: Vec<f64>,
}

impl CoverageCurve {
    /// Largest increase between consecutive grid points (zero for a non-increasing curve).
    pub fn max_increase(&self) -> f64 {
        self.value.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }
}

/// Curve CSV: `kind,gamma_db,value,err_estimate`.
pub fn write_curves_csv<W: Write>(curves: &[CoverageCurve], mut w: W) -> std::io::Result<()> {
    writeln!(w, "kind,gamma_db,value,err_estimate")?;
    for c in curves {
        for i in 0..c.value.len() {
            writeln!(w, "{},{:.4},{:.10},{:.3e}", c.kind.as_str(), c.gamma_db[i], c.value[i], c.err_estimate[i])?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- handoffs

/// Probability that the nearest point of a PPP of intensity `2 lambda`
/// changes after a horizontal displacement `v_cos_phi`.
///
/// The void region is the part of the disc around the new position, with
/// radius equal to the distance to the old nearest point, not covered by the
/// (empty) disc around the old position. Its area is evaluated pointwise in
/// `(r, ψ)`, which covers both the `u <= r` and `u > r` regimes.
pub fn conditional_handoff_prob(v_cos_phi: f64, lambda: f64, quad: QuadOpts) -> Result<f64> {
    if !(v_cos_phi >= 0.0) || !v_cos_phi.is_finite() {
        return Err(Error::Domain(format!("displacement must be non-negative, got {v_cos_phi}")));
    }
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("intensity must be positive, got {lambda}")));
    }
    if v_cos_phi == 0.0 {
        return Ok(0.0);
    }
    let u = v_cos_phi;
    let lam2 = 2.0 * lambda;
    let r_max = (32.0 / (lam2 * PI)).sqrt();
    let stay = integrate_box(
        |x| {
            let (r, psi) = (x[0], x[1]);
            let big_r = (r * r + u * u + 2.0 * r * u * psi.cos()).max(0.0).sqrt();
            let void = PI * big_r * big_r - lens_area(u, r, big_r);
            let f_r = 2.0 * lam2 * PI * r * (-lam2 * PI * r * r).exp();
            f_r * (-lam2 * void.max(0.0)).exp() / PI
        },
        &[(0.0, r_max), (0.0, PI)],
        quad,
    )
    .check("conditional handoff integral")?;
    Ok((1.0 - stay.value).clamp(0.0, 1.0))
}

/// Handoff probability per time step, averaged over hop length and height change.
pub fn handoff_prob(cfg: &AnalysisConfig) -> Result<f64> {
    cfg.validate()?;
    let m = &cfg.mobility;
    let v = m.speed * m.dt;
    if v == 0.0 {
        return Ok(0.0);
    }
    let quad = cfg.quad();
    // the handoff probability depends on (rho, p) only through u = v cos(phi);
    // tabulate it at Chebyshev points on [0, v]
    let n = 24;
    let nodes: Vec<f64> = (0..n).map(|j| 0.5 * v * (1.0 - ((2 * j + 1) as f64 * PI / (2 * n) as f64).cos())).collect();
    let inner = QuadOpts { rel_tol: cfg.quad_tol / 10.0, ..quad };
    let vals: Vec<f64> = nodes.par_iter().map(|&u| conditional_handoff_prob(u, cfg.lambda, inner)).collect::<Result<_>>()?;
    let interp = |u: f64| chebyshev_interp(&nodes, &vals, u);
    let w = m.h_max - m.h_min;
    let rho_max = (32.0 / (PI * m.mu)).sqrt();
    let r = integrate_box(
        |x| {
            let (rho, p) = (x[0], x[1]);
            let cos_phi = if rho == 0.0 && p == 0.0 { 1.0 } else { rho / rho.hypot(p) };
            2.0 * hop_length_pdf(rho, m.mu) * height_diff_pdf(p, m.h_min, m.h_max) * interp(v * cos_phi)
        },
        &[(0.0, rho_max), (0.0, w)],
        quad,
    )
    .check("handoff average")?;
    Ok(r.value.clamp(0.0, 1.0))
}

/// Barycentric interpolation through first-kind Chebyshev points.
fn chebyshev_interp(nodes: &[f64], vals: &[f64], x: f64) -> f64 {
    let n = nodes.len();
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..n {
        let d = x - nodes[j];
        if d == 0.0 {
            return vals[j];
        }
        let th = (2 * j + 1) as f64 * PI / (2 * n) as f64;
        let wj = if j % 2 == 0 { th.sin() } else { -th.sin() };
        num += wj / d * vals[j];
        den += wj / d;
    }
    num / den
}

/// Handoff-discounted coverage `[(1-β) + β(1-P_H)] P_C`.
pub fn coverage_with_handoffs(p_cov: f64, p_hoff: f64, beta: f64) -> Result<f64> {
    for (name, v) in [("coverage", p_cov), ("handoff probability", p_hoff), ("beta", beta)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Domain(format!("{name} must lie in [0,1], got {v}")));
        }
    }
    Ok(((1.0 - beta) + beta * (1.0 - p_hoff)) * p_cov)
}

// ---------------------------------------------------------------- fading bound

fn check_distances(d1: f64, d2: f64, d3: f64) -> Result<()> {
    if !(d1 > 0.0 && d1 <= d2 && d2 <= d3) || !d3.is_finite() {
        return Err(Error::Domain(format!("need 0 < d1 <= d2 <= d3, got ({d1}, {d2}, {d3})")));
    }
    Ok(())
}

/// Laplace argument `s = γ / (Ω1 Σ d_i^-α)` and `z = s Ω2 d3^-α`.
fn laplace_args(d: [f64; 3], cfg: &AnalysisConfig, gamma: f64) -> (f64, f64) {
    let a = cfg.alpha;
    let sum: f64 = d.iter().map(|x| x.powf(-a)).sum();
    let s = gamma / (cfg.fading.omega1 * sum);
    (s, s * cfg.fading.omega2 * d[2].powf(-a))
}

/// `q_0, ..., q_{ϖ-1}` via the incomplete-beta form.
///
/// With `z = sΩ2 d3^-α`, `x = z/(1+z)` and `δ = 2/α`:
/// `q_k = λπd3² δ z^δ (m2)_k/k! B_x(k-δ, m2+δ)` for `k >= 1` and
/// `q_0 = λπd3² [1 - (1+z)^-m2 - m2 z^δ B_x(1-δ, m2+δ)]`.
/// This is the same quantity as the hypergeometric form, without a ₂F₁ per entry.
pub fn qk_vector(d1: f64, d2: f64, d3: f64, cfg: &AnalysisConfig, gamma: f64) -> Result<Vec<f64>> {
    check_distances(d1, d2, d3)?;
    if !(gamma >= 0.0) {
        return Err(Error::Domain(format!("threshold must be non-negative, got {gamma}")));
    }
    let n = varpi(cfg.fading.m1);
    let mut q = vec![0.0; n];
    let (_, z) = laplace_args([d1, d2, d3], cfg, gamma);
    if z == 0.0 {
        return Ok(q);
    }
    let m2 = cfg.fading.m2;
    let delta = 2.0 / cfg.alpha;
    let kappa = cfg.lambda * PI * d3 * d3;
    let x = z / (1.0 + z);
    let b = m2 + delta;
    let zd = z.powf(delta);
    // B_x(a, b) from the top by the stable downward recurrence
    // B_x(a, b) = [(a+b) B_x(a+1, b) + x^a (1-x)^b] / a
    let mut beta = vec![0.0; n];
    let top = n.max(2) - 1;
    let a_top = top as f64 - delta;
    let mut bx = incomplete_beta(a_top, b, x)?;
    // x^(k-δ) (1-x)^b for k = 1..top
    let mut pw = vec![0.0; top + 1];
    pw[1] = ((1.0 - delta) * x.ln() + b * (-x).ln_1p()).exp();
    for k in 2..=top {
        pw[k] = pw[k - 1] * x;
    }
    if top < n {
        beta[top] = bx;
    }
    for k in (1..top).rev() {
        let a = k as f64 - delta;
        bx = ((a + b) * bx + pw[k]) / a;
        beta[k] = bx;
    }
    if n == 1 {
        beta[0] = 0.0;
    }
    let b1 = if n >= 2 { beta[1] } else { incomplete_beta(1.0 - delta, b, x)? };
    q[0] = kappa * (-(-m2 * (1.0 + z).ln()).exp_m1() - m2 * zd * b1);
    // (m2)_k / k! accumulated in log space
    let mut log_poch = 0.0;
    for k in 1..n {
        log_poch += (m2 + (k - 1) as f64).ln() - (k as f64).ln();
        q[k] = kappa * delta * zd * log_poch.exp() * beta[k];
    }
    Ok(q)
}

/// `q_k` from the hypergeometric expression, one ₂F₁ per entry. Slower; kept as
/// a cross-check of [`qk_vector`].
pub fn qk_vector_hypergeometric(d1: f64, d2: f64, d3: f64, cfg: &AnalysisConfig, gamma: f64) -> Result<Vec<f64>> {
    check_distances(d1, d2, d3)?;
    if !(gamma >= 0.0) {
        return Err(Error::Domain(format!("threshold must be non-negative, got {gamma}")));
    }
    let n = varpi(cfg.fading.m1);
    let (a, m2) = (cfg.alpha, cfg.fading.m2);
    let delta = 2.0 / a;
    let (_, z) = laplace_args([d1, d2, d3], cfg, gamma);
    let kappa = cfg.lambda * PI * d3 * d3;
    let mut q = Vec::with_capacity(n);
    for k in 0..n {
        let kf = k as f64;
        if (2.0 - kf * a).abs() < 1e-12 {
            return Err(Error::Domain("k alpha = 2 makes the coefficient singular".into()));
        }
        // 2Γ(k+m2) / (k! (2-kα) Γ(m2)) z^k
        let coef = 2.0 / (2.0 - kf * a) * (ln_gamma(kf + m2) - ln_gamma(m2) - ln_gamma(kf + 1.0) + kf * z.ln()).exp();
        let coef = if z == 0.0 { if k == 0 { 2.0 / 2.0 } else { 0.0 } } else { coef };
        let f = gauss_2f1(kf + m2, kf - delta, kf + 1.0 - delta, -z)?;
        let dk = if k == 0 { kappa } else { 0.0 };
        q.push(dk - kappa * coef * f);
    }
    Ok(q)
}

/// Log-Laplace transform of the interference beyond `d3` at argument `s`.
pub fn log_laplace_interference(s: f64, d3: f64, cfg: &AnalysisConfig) -> Result<f64> {
    let delta = 2.0 / cfg.alpha;
    let z = s * cfg.fading.omega2 * d3.powf(-cfg.alpha);
    let kappa = cfg.lambda * PI * d3 * d3;
    Ok(kappa - kappa * gauss_2f1(cfg.fading.m2, -delta, 1.0 - delta, -z)?)
}

/// Bound integrand `‖exp Q‖₁` at fixed serving distances.
pub fn coverage_bound_at(d: [f64; 3], cfg: &AnalysisConfig, gamma: f64) -> Result<f64> {
    let q = qk_vector(d[0], d[1], d[2], cfg, gamma)?;
    toeplitz_exp_l1(&ToeplitzL::new(q)?)
}

/// Horizontal serving distances from box coordinates `(t, y2, y1)` with
/// `t = λπ r3²`, `r2 = y2 r3` and `r1 = y1 r2`, plus the density weight.
///
/// `t`, `y2²` and `y1²` are independent with densities `t² e^-t / 2`, `2 y2²`
/// and `1`. High thresholds concentrate the integrand near `r1 << r2 << r3`;
/// the ratio coordinates spread that corner over a wider part of the box.
fn ordered_distances(lambda: f64, t: f64, y2: f64, y1: f64) -> ([f64; 3], f64) {
    let r3 = (t / (lambda * PI)).sqrt();
    let r2 = y2 * r3;
    let r1 = y1 * r2;
    ([r1, r2, r3], t * t * (-t).exp() * 4.0 * y2.powi(3) * y1)
}

fn with_height(r: [f64; 3], h: f64) -> [f64; 3] {
    [r[0].hypot(h), r[1].hypot(h), r[2].hypot(h)]
}

/// Average `g(d)` over the serving geometry and the stationary height law.
/// The height is integrated by Gauss-Legendre, the rest adaptively.
fn geometry_average<G>(cfg: &AnalysisConfig, what: &str, g: G) -> Result<QuadResult>
where
    G: Fn([f64; 3]) -> f64 + Sync,
{
    let m = &cfg.mobility;
    let (xs, ws) = match cfg.fixed_height {
        Some(h) => (vec![h], vec![1.0]),
        None => gauss_legendre_on(HEIGHT_NODES, m.h_min, m.h_max),
    };
    // integrands are probabilities, so an absolute floor well below the
    // target keeps the inner rules from chasing relative accuracy on tiny values
    let opts = QuadOpts { abs_tol: cfg.quad_tol * 1e-4, ..cfg.quad() };
    let parts: Vec<QuadResult> = xs
        .par_iter()
        .map(|&h| {
            integrate_box_with(
                |v| {
                    let (r, w) = ordered_distances(cfg.lambda, v[0], v[1], v[2]);
                    if w == 0.0 {
                        return 0.0;
                    }
                    w * g(with_height(r, h))
                },
                &[(0.0, T_MAX), (0.0, 1.0), (0.0, 1.0)],
                opts,
                2.0,
            )
            .check(what)
        })
        .collect::<Result<_>>()?;
    let mut value = 0.0;
    let mut error = 0.0;
    let mut evals = 0;
    for ((r, &h), &w) in parts.iter().zip(&xs).zip(&ws) {
        let f = if cfg.fixed_height.is_some() { 1.0 } else { steady_height_pdf(h, m.h_min, m.h_max) };
        value += w * f * r.value;
        error += w * f * r.error;
        evals += r.evals;
    }
    // probability mass of the truncated r3 tail
    error += 0.5 * (T_MAX * T_MAX + 2.0 * T_MAX + 2.0) * (-T_MAX).exp();
    Ok(QuadResult { value, error, evals, converged: true })
}

/// Coverage upper bound under Gamma fading, with the quadrature error estimate.
pub fn coverage_upper_bound_with_err(cfg: &AnalysisConfig, gamma: f64) -> Result<QuadResult> {
    cfg.validate()?;
    if !(gamma >= 0.0) {
        return Err(Error::Domain(format!("threshold must be non-negative, got {gamma}")));
    }
    if gamma == 0.0 {
        return Ok(QuadResult { value: 1.0, error: 0.0, evals: 0, converged: true });
    }
    let r = geometry_average(cfg, "coverage bound", |d| coverage_bound_at(d, cfg, gamma).unwrap_or(f64::NAN))?;
    if !r.value.is_finite() {
        return Err(Error::numeric("coverage bound integrand failed", f64::INFINITY));
    }
    Ok(QuadResult { value: r.value.clamp(0.0, 1.0), ..r })
}

pub fn coverage_upper_bound(cfg: &AnalysisConfig, gamma: f64) -> Result<f64> {
    Ok(coverage_upper_bound_with_err(cfg, gamma)?.value)
}

/// Bound curve over `cfg.gamma_grid`.
pub fn upper_bound_curve(cfg: &AnalysisConfig) -> Result<CoverageCurve> {
    let rs: Vec<QuadResult> = cfg.gamma_grid.iter().map(|&g| coverage_upper_bound_with_err(cfg, g)).collect::<Result<_>>()?;
    Ok(CoverageCurve {
        kind: CurveKind::UpperBoundFading,
        gamma_db: cfg.gamma_grid.iter().map(|&g| linear_to_db(g)).collect(),
        value: rs.iter().map(|r| r.value).collect(),
        err_estimate: rs.iter().map(|r| r.error).collect(),
    })
}

/// Apply the handoff discount to every point of a coverage curve.
pub fn with_handoffs_curve(base: &CoverageCurve, p_hoff: f64, beta: f64) -> Result<CoverageCurve> {
    let value = base.value.iter().map(|&p| coverage_with_handoffs(p, p_hoff, beta)).collect::<Result<_>>()?;
    Ok(CoverageCurve { kind: CurveKind::WithHandoffs, gamma_db: base.gamma_db.clone(), value, err_estimate: base.err_estimate.clone() })
}

// ---------------------------------------------------------------- no fading

/// Truncation settings for the characteristic-function inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionParams {
    /// Terms are dropped once `|Φ(ω)|` falls below this.
    pub cf_floor: f64,
    /// Tail probability allowed outside the tabulated range.
    pub tail_prob: f64,
    pub kappa_nodes: usize,
    pub tau_points: usize,
    pub max_terms: usize,
}

impl Default for InversionParams {
    fn default() -> Self {
        InversionParams { cf_floor: 1e-8, tail_prob: 1e-8, kappa_nodes: 64, tau_points: 512, max_terms: 4_000_000 }
    }
}

/// Characteristic function of `I' = d3^α I`, the no-fading interference from a
/// PPP outside `d3` normalised by the third serving link, with
/// `κ = λπ d3²`: `exp(κ (1 - ₁F₁(-δ; 1-δ; iω)))`.
pub fn interference_cf(omega: f64, kappa: f64, alpha: f64) -> Result<Complex64> {
    let delta = 2.0 / alpha;
    let f = kummer_1f1(-delta, 1.0 - delta, Complex64::new(0.0, omega))?;
    Ok((kappa * (Complex64::new(1.0, 0.0) - f)).exp())
}

/// Characteristic function of `η^-1 = I/S` under the no-fading model, averaged
/// over the serving geometry and height (adaptive 4-D quadrature of real and
/// imaginary parts).
pub fn char_fn_inverse_sir(omega: f64, cfg: &AnalysisConfig) -> Result<Complex64> {
    cfg.validate()?;
    let a = cfg.alpha;
    let part = |re: bool| -> Result<f64> {
        let r = geometry_average(cfg, "inverse SIR characteristic function", |d| {
            let s: f64 = d.iter().map(|x| x.powf(-a / 2.0)).sum::<f64>().powi(2);
            let kappa = cfg.lambda * PI * d[2] * d[2];
            let w = omega * d[2].powf(-a) / s;
            match interference_cf(w, kappa, a) {
                Ok(c) => {
                    if re {
                        c.re
                    } else {
                        c.im
                    }
                }
                Err(_) => f64::NAN,
            }
        })?;
        Ok(r.value)
    };
    Ok(Complex64::new(part(true)?, part(false)?))
}

/// Gil-Pelaez inversion on the half-period grid `ω_k = (k + 1/2) h`.
///
/// For a variable within `2π/h` of every evaluation point this midpoint sum is
/// exact up to the truncation of `|Φ|`. Returns `P(X < τ)` for each `τ`.
pub fn gil_pelaez_cdf<C>(cf: C, taus: &[f64], h: f64, floor: f64, max_terms: usize) -> Result<Vec<f64>>
where
    C: Fn(f64) -> Result<Complex64>,
{
    let mut phis = Vec::new();
    loop {
        let w = (phis.len() as f64 + 0.5) * h;
        let p = cf(w)?;
        let small = p.norm() < floor;
        phis.push(p);
        if small && phis.len() >= 8 {
            break;
        }
        if phis.len() >= max_terms {
            return Err(Error::numeric("characteristic function did not decay within the term budget", p.norm()));
        }
    }
    Ok(taus
        .iter()
        .map(|&tau| {
            let step = Complex64::from_polar(1.0, -h * tau);
            let mut rot = Complex64::from_polar(1.0, -0.5 * h * tau);
            let mut s = 0.0;
            for (k, p) in phis.iter().enumerate() {
                s += (p * rot).im / (k as f64 + 0.5);
                rot *= step;
                if k % 64 == 63 {
                    rot /= rot.norm();
                }
            }
            (0.5 - s / PI).clamp(0.0, 1.0)
        })
        .collect())
}

#[derive(Debug, Clone)]
struct KappaTable {
    tau_lo: f64,
    tau_hi: f64,
    /// CDF at `tau_lo + (tau_hi - tau_lo) s²` on a uniform `s` grid.
    values: Vec<f64>,
}

impl KappaTable {
    fn eval(&self, tau: f64) -> f64 {
        if tau <= self.tau_lo {
            return 0.0;
        }
        if tau >= self.tau_hi {
            return 1.0;
        }
        let s = ((tau - self.tau_lo) / (self.tau_hi - self.tau_lo)).sqrt();
        let n = self.values.len() - 1;
        let pos = s * n as f64;
        let i = (pos.floor() as usize).min(n - 1);
        let f = pos - i as f64;
        let get = |j: isize| -> f64 {
            let j = j.clamp(0, n as isize) as usize;
            self.values[j]
        };
        let i = i as isize;
        let (p0, p1, p2, p3) = (get(i - 1), get(i), get(i + 1), get(i + 2));
        // Catmull-Rom
        let v = p1 + 0.5 * f * (p2 - p0 + f * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + f * (3.0 * (p1 - p2) + p3 - p0)));
        v.clamp(0.0, 1.0)
    }
}

/// Tabulated CDF of the normalised interference `I'` over a range of `κ`.
#[derive(Debug, Clone)]
pub struct InterferenceCdf {
    alpha: f64,
    log_kappa: Vec<f64>,
    tables: Vec<KappaTable>,
}

/// `h(x) = (1+x)ln(1+x) - x` from Bennett's inequality.
fn bennett_h(x: f64) -> f64 {
    (1.0 + x) * x.ln_1p() - x
}

/// Range outside which `I'` has probability below `tail` on either side.
fn tau_range(kappa: f64, alpha: f64, tail: f64) -> (f64, f64) {
    let mean = 2.0 * kappa / (alpha - 2.0);
    let var = kappa / (alpha - 1.0);
    let l = (1.0 / tail).ln();
    // jumps are bounded by 1, so Bennett applies to the upper tail
    let (mut lo, mut hi) = (0.0, 1.0);
    while var * bennett_h(hi / var) < l {
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if var * bennett_h(mid / var) < l {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let upper = mean + hi;
    let lower = (mean - (2.0 * var * l).sqrt()).max(0.0);
    (lower, upper)
}

/// CDF of `I'` at one `κ`, directly by inversion.
pub fn interference_cdf(taus: &[f64], kappa: f64, alpha: f64, inv: &InversionParams) -> Result<Vec<f64>> {
    let (_, hi) = tau_range(kappa, alpha, inv.tail_prob);
    let hi = hi.max(taus.iter().cloned().fold(0.0, f64::max));
    let h = 4.0 * PI / (3.0 * hi);
    gil_pelaez_cdf(|w| interference_cf(w, kappa, alpha), taus, h, inv.cf_floor, inv.max_terms)
}

impl InterferenceCdf {
    pub fn build(kappa_min: f64, kappa_max: f64, alpha: f64, inv: &InversionParams) -> Result<Self> {
        if !(kappa_min > 0.0 && kappa_max > kappa_min) {
            return Err(Error::Domain(format!("bad kappa range [{kappa_min}, {kappa_max}]")));
        }
        if !(alpha > 2.0) {
            return Err(Error::Domain(format!("alpha must exceed 2, got {alpha}")));
        }
        let n = inv.kappa_nodes.max(4);
        let (a, b) = (kappa_min.ln(), kappa_max.ln());
        let log_kappa: Vec<f64> = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
        let tables = log_kappa
            .par_iter()
            .map(|&lk| {
                let kappa = lk.exp();
                let (lo, hi) = tau_range(kappa, alpha, inv.tail_prob);
                let m = inv.tau_points.max(8);
                let taus: Vec<f64> = (0..=m).map(|j| lo + (hi - lo) * (j as f64 / m as f64).powi(2)).collect();
                let h = 4.0 * PI / (3.0 * hi);
                let mut values = gil_pelaez_cdf(|w| interference_cf(w, kappa, alpha), &taus, h, inv.cf_floor, inv.max_terms)?;
                // enforce monotonicity against ripple from the truncated sum
                for j in 1..values.len() {
                    if values[j] < values[j - 1] {
                        values[j] = values[j - 1];
                    }
                }
                Ok(KappaTable { tau_lo: lo, tau_hi: hi, values })
            })
            .collect::<Result<_>>()?;
        Ok(InterferenceCdf { alpha, log_kappa, tables })
    }

    /// `P(I' < tau)` at intensity parameter `kappa`, interpolated in `ln κ` at
    /// fixed standardised argument `(τ - mean) / sd`. The mean moves by many
    /// standard deviations per unit of `ln κ` when `κ` is large, so raw `τ`
    /// would need a much finer grid.
    pub fn cdf(&self, tau: f64, kappa: f64) -> f64 {
        let (mean, sd) = self.moments(kappa);
        let zs = (tau - mean) / sd;
        let lk = kappa.ln();
        let n = self.log_kappa.len();
        let step = self.log_kappa[1] - self.log_kappa[0];
        let pos = ((lk - self.log_kappa[0]) / step).clamp(0.0, (n - 1) as f64);
        let i = (pos.floor() as usize).clamp(1, n - 3);
        let i0 = i - 1;
        let mut v = 0.0;
        for j in 0..4 {
            let mut l = 1.0;
            for k in 0..4 {
                if k != j {
                    l *= (pos - (i0 + k) as f64) / (j as f64 - k as f64);
                }
            }
            let (mj, sj) = self.moments(self.log_kappa[i0 + j].exp());
            v += l * self.tables[i0 + j].eval(mj + zs * sj);
        }
        v.clamp(0.0, 1.0)
    }

    fn moments(&self, kappa: f64) -> (f64, f64) {
        (2.0 * kappa / (self.alpha - 2.0), (kappa / (self.alpha - 1.0)).sqrt())
    }
}

/// Builds the interference tables once for a config and evaluates the exact
/// no-fading coverage at any threshold.
pub struct NofadingCoverage<'a> {
    cfg: &'a AnalysisConfig,
    table: InterferenceCdf,
}

impl<'a> NofadingCoverage<'a> {
    pub fn new(cfg: &'a AnalysisConfig, inv: &InversionParams) -> Result<Self> {
        cfg.validate()?;
        let m = &cfg.mobility;
        let kmin = cfg.lambda * PI * m.h_min * m.h_min * 0.999;
        let kmax = (T_MAX + cfg.lambda * PI * m.h_max * m.h_max) * 1.001;
        Ok(NofadingCoverage { cfg, table: InterferenceCdf::build(kmin, kmax, cfg.alpha, inv)? })
    }

    /// `P(S/I > γ)`: the geometry average of `P(I' < (Σ (d3/d_i)^{α/2})² / γ)`.
    pub fn eval(&self, gamma: f64) -> Result<QuadResult> {
        if !(gamma >= 0.0) {
            return Err(Error::Domain(format!("threshold must be non-negative, got {gamma}")));
        }
        if gamma == 0.0 {
            return Ok(QuadResult { value: 1.0, error: 0.0, evals: 0, converged: true });
        }
        let cfg = self.cfg;
        let a = cfg.alpha;
        let r = geometry_average(cfg, "no-fading coverage", |d| {
            let s: f64 = d.iter().map(|x| (d[2] / x).powf(a / 2.0)).sum::<f64>().powi(2);
            let kappa = cfg.lambda * PI * d[2] * d[2];
            self.table.cdf(s / gamma, kappa)
        })?;
        Ok(QuadResult { value: r.value.clamp(0.0, 1.0), ..r })
    }

    pub fn curve(&self, gammas: &[f64]) -> Result<CoverageCurve> {
        let rs: Vec<QuadResult> = gammas.iter().map(|&g| self.eval(g)).collect::<Result<_>>()?;
        Ok(CoverageCurve {
            kind: CurveKind::ExactNofading,
            gamma_db: gammas.iter().map(|&g| linear_to_db(g)).collect(),
            value: rs.iter().map(|r| r.value).collect(),
            err_estimate: rs.iter().map(|r| r.error).collect(),
        })
    }
}

/// Exact no-fading coverage at one threshold.
pub fn coverage_nofading(cfg: &AnalysisConfig, gamma: f64, inv: &InversionParams) -> Result<f64> {
    if gamma == 0.0 {
        return Ok(1.0);
    }
    Ok(NofadingCoverage::new(cfg, inv)?.eval(gamma)?.value)
}

// ---------------------------------------------------------------- moments

/// Mean interference from a PPP of interferers beyond horizontal distance `epsilon`
/// at height `h_bar`: `2/(α-2) λπ m2Ω2 (ε² + H̄²)^{1-α/2}`.
pub fn mean_interference(epsilon: f64, cfg: &AnalysisConfig, h_bar: f64) -> Result<f64> {
    let a = cfg.alpha;
    if !(a > 2.0) {
        return Err(Error::Domain(format!("mean interference diverges for alpha <= 2 (alpha={a})")));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::Domain(format!("epsilon must be non-negative, got {epsilon}")));
    }
    if epsilon.is_infinite() {
        return Ok(0.0);
    }
    Ok(2.0 / (a - 2.0) * cfg.lambda * PI * cfg.fading.mean_interference_gain() * (epsilon * epsilon + h_bar * h_bar).powf(1.0 - a / 2.0))
}

/// `E[Σ_{i≤3} d_i^-α]` at height `h_bar`, or the mean of its square when `squared`.
pub fn moment_m1_alpha(cfg: &AnalysisConfig, h_bar: f64, squared: bool) -> Result<f64> {
    let a = cfg.alpha;
    if !(a > 2.0) {
        return Err(Error::Domain(format!("alpha must exceed 2, got {a}")));
    }
    let r = integrate_box(
        |v| {
            let (r, w) = ordered_distances(cfg.lambda, v[0], v[1], v[2]);
            if w == 0.0 {
                return 0.0;
            }
            let s: f64 = with_height(r, h_bar).iter().map(|d| d.powf(-a)).sum();
            w * if squared { s * s } else { s }
        },
        &[(0.0, T_MAX), (0.0, 1.0), (0.0, 1.0)],
        QuadOpts { rel_tol: cfg.quad_tol, abs_tol: 0.0, max_subdivisions: cfg.quad_max_depth },
    )
    .check("moment integral")?;
    Ok(r.value)
}

/// `E[d_i^-α]` for the `i`-th nearest BS (1-based) from its Gamma marginal
/// `λπ r_i² ~ Γ(i, 1)`, by 1-D quadrature.
pub fn nth_distance_moment(i: usize, cfg: &AnalysisConfig, h_bar: f64) -> Result<f64> {
    if i == 0 {
        return Err(Error::Domain("distance rank starts at 1".into()));
    }
    let a = cfg.alpha;
    let lg = ln_gamma(i as f64);
    let r = integrate(
        |t| {
            let r2 = t / (cfg.lambda * PI);
            let dens = ((i as f64 - 1.0) * t.ln() - t - lg).exp();
            dens * (r2 + h_bar * h_bar).powf(-a / 2.0)
        },
        0.0,
        T_MAX + 20.0,
        QuadOpts::rel(1e-10),
    )
    .check("distance moment")?;
    Ok(r.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> AnalysisConfig {
        let f = FadingParams::new(1.0, 8, 2.6, 2.06).unwrap();
        AnalysisConfig::new(20e-6, 3.0, f, MobilityConfig::default()).unwrap()
    }

    #[test]
    fn handoff_combination() {
        assert!((coverage_with_handoffs(0.5, 0.24, 1.0).unwrap() - 0.38).abs() < 1e-12);
        assert_eq!(coverage_with_handoffs(0.7, 0.3, 0.0).unwrap(), 0.7);
        assert_eq!(coverage_with_handoffs(0.7, 0.0, 0.6).unwrap(), 0.7);
        assert!(coverage_with_handoffs(1.1, 0.0, 0.6).is_err());
    }

    #[test]
    fn zero_threshold() {
        let c = cfg();
        let q = qk_vector(100.0, 200.0, 300.0, &c, 0.0).unwrap();
        assert!(q.iter().all(|v| *v == 0.0));
        assert_eq!(q.len(), 32);
        let h = qk_vector_hypergeometric(100.0, 200.0, 300.0, &c, 0.0).unwrap();
        assert!(h.iter().all(|v| v.abs() < 1e-15));
        assert_eq!(coverage_upper_bound(&c, 0.0).unwrap(), 1.0);
        assert!(qk_vector(300.0, 200.0, 100.0, &c, 1.0).is_err());
    }

    #[test]
    fn config_invariants() {
        let mut c = cfg();
        c.alpha = 2.0;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.beta = 1.5;
        assert!(c.validate().is_err());
        assert!(mean_interference(100.0, &AnalysisConfig { alpha: 1.9, ..cfg() }, 50.0).is_err());
    }

    #[test]
    fn db_helpers() {
        let g = db_grid(-10.0, 20.0, 2.0);
        assert_eq!(g.len(), 16);
        assert!((db_to_linear(10.0) - 10.0).abs() < 1e-12);
        assert!((linear_to_db(db_to_linear(-4.0)) + 4.0).abs() < 1e-12);
    }
}
