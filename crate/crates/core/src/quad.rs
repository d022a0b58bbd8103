//! Adaptive Gauss-Kronrod quadrature (G7/K15) and tensor Gauss-Legendre rules.
//!
//! Multi-dimensional integrals are done by nesting the 1-D adaptive rule; the
//! reported error adds the outer estimate to the integrated inner estimates.

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Tolerances for adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadOpts {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Maximum number of interval bisections per 1-D integral.
    pub max_subdivisions: usize,
}

impl Default for QuadOpts {
    fn default() -> Self {
        QuadOpts { rel_tol: 1e-8, abs_tol: 1e-14, max_subdivisions: 200 }
    }
}

impl QuadOpts {
    pub fn rel(rel_tol: f64) -> Self {
        QuadOpts { rel_tol, ..Default::default() }
    }
}

/// Integral value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
    pub converged: bool,
}

impl QuadResult {
    /// Turn a non-converged result into a numeric error.
    pub fn check(self, what: &str) -> Result<Self> {
        if self.converged && self.value.is_finite() {
            Ok(self)
        } else {
            Err(Error::numeric(format!("{what}: quadrature did not converge"), self.error))
        }
    }
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let x = h * XK[j];
        let s = f(c - x) + f(c + x);
        rk += WK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    let val = rk * h;
    let err = ((rk - rg) * h).abs();
    (val, err)
}

struct Seg {
    a: f64,
    b: f64,
    val: f64,
    err: f64,
}

impl PartialEq for Seg {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Seg {}
impl PartialOrd for Seg {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Seg {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Globally adaptive G7/K15 integration of `f` over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, opts: QuadOpts) -> QuadResult {
    if a == b {
        return QuadResult { value: 0.0, error: 0.0, evals: 0, converged: true };
    }
    let (v, e) = kronrod(&mut f, a, b);
    let mut evals = 15;
    let mut heap = BinaryHeap::new();
    heap.push(Seg { a, b, val: v, err: e });
    let mut total = v;
    let mut err = e;
    let mut splits = 0;
    loop {
        let tol = opts.abs_tol.max(opts.rel_tol * total.abs());
        if err <= tol || !total.is_finite() {
            break;
        }
        if splits >= opts.max_subdivisions {
            return QuadResult { value: total, error: err, evals, converged: false };
        }
        let s = heap.pop().expect("non-empty heap");
        let m = 0.5 * (s.a + s.b);
        if m <= s.a || m >= s.b {
            heap.push(s);
            return QuadResult { value: total, error: err, evals, converged: false };
        }
        let (v1, e1) = kronrod(&mut f, s.a, m);
        let (v2, e2) = kronrod(&mut f, m, s.b);
        evals += 30;
        splits += 1;
        total += v1 + v2 - s.val;
        err += e1 + e2 - s.err;
        heap.push(Seg { a: s.a, b: m, val: v1, err: e1 });
        heap.push(Seg { a: m, b: s.b, val: v2, err: e2 });
    }
    // re-sum to shed accumulated rounding from the running updates
    let total: f64 = heap.iter().map(|s| s.val).sum();
    let err: f64 = heap.iter().map(|s| s.err).sum();
    QuadResult { value: total, error: err, evals, converged: true }
}

/// Nested adaptive integration over a box. `f` receives the full coordinate vector.
///
/// The innermost dimension is the last one. Inner integrals are run with a
/// tolerance ten times tighter than the outer one.
pub fn integrate_box<F: FnMut(&[f64]) -> f64>(f: F, bounds: &[(f64, f64)], opts: QuadOpts) -> QuadResult {
    integrate_box_with(f, bounds, opts, 10.0)
}

/// As [`integrate_box`], with inner tolerances tightened by `inner_factor` per level.
pub fn integrate_box_with<F: FnMut(&[f64]) -> f64>(mut f: F, bounds: &[(f64, f64)], opts: QuadOpts, inner_factor: f64) -> QuadResult {
    let mut x = vec![0.0; bounds.len()];
    let mut ok = true;
    let r = nest(&mut f, bounds, 0, &mut x, opts, inner_factor.max(1.0), &mut ok);
    QuadResult { converged: r.converged && ok, ..r }
}

fn nest<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    bounds: &[(f64, f64)],
    dim: usize,
    x: &mut Vec<f64>,
    opts: QuadOpts,
    factor: f64,
    ok: &mut bool,
) -> QuadResult {
    let (a, b) = bounds[dim];
    if dim + 1 == bounds.len() {
        return integrate(
            |t| {
                x[dim] = t;
                f(x)
            },
            a,
            b,
            opts,
        );
    }
    let inner = QuadOpts { rel_tol: opts.rel_tol / factor, abs_tol: opts.abs_tol / factor, ..opts };
    let mut inner_err_acc = 0.0;
    let mut evals = 0;
    let r = integrate(
        |t| {
            x[dim] = t;
            let r = nest(f, bounds, dim + 1, x, inner, factor, ok);
            if !r.converged {
                *ok = false;
            }
            inner_err_acc += r.error;
            evals += r.evals;
            r.value
        },
        a,
        b,
        opts,
    );
    let width = (b - a).abs();
    // mean absolute inner error times the width approximates the propagated error
    let prop = inner_err_acc / (r.evals.max(1) as f64) * width;
    QuadResult { value: r.value, error: r.error + prop, evals: evals.max(r.evals), converged: r.converged }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Nodes and weights mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let h = 0.5 * (b - a);
    let c = 0.5 * (a + b);
    (x.iter().map(|t| c + h * t).collect(), w.iter().map(|v| v * h).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| x.powi(5) - 3.0 * x * x, -1.0, 2.0, QuadOpts::default());
        assert!((r.value - (64.0 / 6.0 - 1.0 / 6.0 - 9.0)).abs() < 1e-13);
        assert!(r.converged);
    }

    #[test]
    fn endpoint_singularity() {
        let r = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, QuadOpts::rel(1e-10));
        assert!((r.value - 2.0).abs() < 1e-8, "{}", r.value);
    }

    #[test]
    fn box_gaussian() {
        let r = integrate_box(|x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp(), &[(-6.0, 6.0); 3], QuadOpts::rel(1e-7));
        let want = std::f64::consts::PI.powf(1.5);
        assert!((r.value - want).abs() < 1e-6 * want);
    }

    #[test]
    fn legendre_rule() {
        let (x, w) = gauss_legendre(20);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(38)).sum();
        assert!((s - 2.0 / 39.0).abs() < 1e-14);
        let (x, w) = gauss_legendre_on(7, 0.0, 3.0);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.exp()).sum();
        assert!((s - (3f64.exp() - 1.0)).abs() < 1e-11);
    }

    #[test]
    fn nonconvergence_reported() {
        let r = integrate(|x| (1.0 / x).sin() / x, 1e-6, 1.0, QuadOpts { max_subdivisions: 5, ..Default::default() });
        assert!(!r.converged);
        assert!(r.check("osc").is_err());
    }
}
