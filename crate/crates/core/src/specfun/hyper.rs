use super::gamma::{gamma, rgamma};
use crate::error::{Error, Result};
use num_complex::Complex64;

/// Maximum number of series terms before giving up.
pub const SERIES_BUDGET: usize = 10_000;

/// `|z|` beyond which the Kummer function switches to its asymptotic expansion.
pub const KUMMER_ASYMPTOTIC_RADIUS: f64 = 30.0;

fn is_nonpositive_int(x: f64) -> bool {
    x <= 0.0 && x == x.floor()
}

/// Plain power series of ₂F₁ for |z| < 1.
fn series_2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut small = 0;
    for n in 0..SERIES_BUDGET {
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * z;
        sum += term;
        if term == 0.0 {
            return Ok(sum);
        }
        if term.abs() <= 1e-17 * sum.abs() {
            small += 1;
            if small >= 2 {
                return Ok(sum);
            }
        } else {
            small = 0;
        }
    }
    Err(Error::numeric(format!("2F1({a}, {b}; {c}; {z}) series exceeded {SERIES_BUDGET} terms"), term.abs() / sum.abs()))
}

/// Gauss hypergeometric function ₂F₁(a, b; c; z) for real z ≤ 0.
///
/// Uses the power series for z ≥ -1/2, the Pfaff transformation
/// `(1-z)^(-a) ₂F₁(a, c-b; c; z/(z-1))` below that, and the `1/z`
/// connection formula once the Pfaff argument approaches one.
pub fn gauss_2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if is_nonpositive_int(c) {
        return Err(Error::Domain(format!("2F1 pole: c = {c} is a non-positive integer")));
    }
    if !(z <= 0.0) {
        return Err(Error::Domain(format!("2F1 evaluated only for z <= 0, got {z}")));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    if z >= -0.5 || is_nonpositive_int(a) || is_nonpositive_int(b) && z >= -1.0 {
        return series_2f1(a, b, c, z);
    }
    let w = z / (z - 1.0);
    let d = b - a;
    if w > 0.9 && (d - d.round()).abs() > 1e-6 {
        return inverse_z(a, b, c, z);
    }
    Ok((1.0 - z).powf(-a) * series_2f1(a, c - b, c, w)?)
}

/// Connection formula to argument 1/z (DLMF 15.8.2), valid for non-integer b - a.
fn inverse_z(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let mz = -z;
    let gc = gamma(c);
    let t1 = gc * gamma(b - a) * rgamma(b) * rgamma(c - a);
    let t2 = gc * gamma(a - b) * rgamma(a) * rgamma(c - b);
    let mut s = 0.0;
    if t1 != 0.0 {
        s += t1 * mz.powf(-a) * series_2f1(a, a - c + 1.0, a - b + 1.0, 1.0 / z)?;
    }
    if t2 != 0.0 {
        s += t2 * mz.powf(-b) * series_2f1(b, b - c + 1.0, b - a + 1.0, 1.0 / z)?;
    }
    Ok(s)
}

/// Double-double scalar: unevaluated sum `hi + lo`.
#[derive(Clone, Copy, Debug)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

impl Dd {
    fn new(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = two_sum(s, e + t);
        let (hi, lo) = two_sum(s, e + f);
        Dd { hi, lo }
    }
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = two_sum(p, e);
        Dd { hi, lo }
    }
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.add(o.mul(Dd::new(q1)).neg());
        let q2 = r.hi / o.hi;
        let r = r.add(o.mul(Dd::new(q2)).neg());
        let q3 = r.hi / o.hi;
        let (hi, lo) = two_sum(q1, q2);
        Dd { hi, lo }.add(Dd::new(q3))
    }
}

#[derive(Clone, Copy)]
struct Cdd {
    re: Dd,
    im: Dd,
}

impl Cdd {
    fn from(z: Complex64) -> Self {
        Cdd { re: Dd::new(z.re), im: Dd::new(z.im) }
    }
    fn mul(self, o: Cdd) -> Cdd {
        Cdd {
            re: self.re.mul(o.re).add(self.im.mul(o.im).neg()),
            im: self.re.mul(o.im).add(self.im.mul(o.re)),
        }
    }
    fn scale(self, s: Dd) -> Cdd {
        Cdd { re: self.re.mul(s), im: self.im.mul(s) }
    }
    fn add(self, o: Cdd) -> Cdd {
        Cdd { re: self.re.add(o.re), im: self.im.add(o.im) }
    }
    fn abs_hi(self) -> f64 {
        self.re.hi.hypot(self.im.hi)
    }
    fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.hi + self.re.lo, self.im.hi + self.im.lo)
    }
}

/// Kummer series in double-double arithmetic; cancellation for imaginary z is absorbed by the extra digits.
fn series_1f1(a: f64, b: f64, z: Complex64) -> Result<Complex64> {
    let zz = Cdd::from(z);
    let mut term = Cdd::from(Complex64::new(1.0, 0.0));
    let mut sum = term;
    let zabs = z.norm();
    for n in 0..SERIES_BUDGET {
        let nf = n as f64;
        let ratio = Dd::new(a).add(Dd::new(nf)).div(Dd::new(b).add(Dd::new(nf)).mul(Dd::new(nf + 1.0)));
        term = term.mul(zz).scale(ratio);
        sum = sum.add(term);
        let t = term.abs_hi();
        if t == 0.0 || (nf > zabs && t <= 1e-20 * sum.abs_hi().max(1e-300)) {
            return Ok(sum.to_c64());
        }
    }
    Err(Error::numeric(format!("1F1({a}; {b}; {z}) series exceeded {SERIES_BUDGET} terms"), f64::NAN))
}

/// Sum of an asymptotic series `Σ (p)_s (q)_s / s! x^s`, truncated at the smallest term.
fn asymptotic_sum(p: f64, q: f64, x: Complex64) -> Complex64 {
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut last = f64::INFINITY;
    for s in 0..200 {
        let sf = s as f64;
        let next = term * ((p + sf) * (q + sf) / (sf + 1.0)) * x;
        let m = next.norm();
        if m >= last || m == 0.0 {
            break;
        }
        sum += next;
        term = next;
        last = m;
        if m <= 1e-17 * sum.norm() {
            break;
        }
    }
    sum
}

/// Kummer confluent hypergeometric function ₁F₁(a; b; z) for complex z.
///
/// Double-double power series up to |z| = [`KUMMER_ASYMPTOTIC_RADIUS`], the
/// two-sided large-|z| expansion beyond it.
pub fn kummer_1f1(a: f64, b: f64, z: Complex64) -> Result<Complex64> {
    if is_nonpositive_int(b) {
        return Err(Error::Domain(format!("1F1 pole: b = {b} is a non-positive integer")));
    }
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::Domain("1F1 argument must be finite".into()));
    }
    if z.norm() == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    if z.norm() <= KUMMER_ASYMPTOTIC_RADIUS || is_nonpositive_int(a) || is_nonpositive_int(b - a) {
        return series_1f1(a, b, z);
    }
    let gb = gamma(b);
    let inv = z.inv();
    let s1 = asymptotic_sum(1.0 - a, b - a, inv);
    let s2 = asymptotic_sum(a, a - b + 1.0, -inv);
    let sign = if z.im >= 0.0 { 1.0 } else { -1.0 };
    let phase = Complex64::from_polar(1.0, sign * std::f64::consts::PI * a);
    let p1 = z.exp() * z.powf(a - b) * rgamma(a) * s1;
    let p2 = phase * z.powf(-a) * rgamma(b - a) * s2;
    let v = (p1 + p2) * gb;
    if !v.re.is_finite() || !v.im.is_finite() {
        return Err(Error::numeric(format!("1F1({a}; {b}; {z}) overflowed"), f64::INFINITY));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_identities() {
        assert_eq!(gauss_2f1(0.3, 0.4, 0.5, 0.0).unwrap(), 1.0);
        let v = gauss_2f1(0.7, 2.0, 2.0, -3.0).unwrap();
        assert!((v - 4f64.powf(-0.7)).abs() < 1e-14);
        assert!(gauss_2f1(1.0, 1.0, -2.0, -0.1).is_err());
        assert!(gauss_2f1(1.0, 1.0, 2.0, 0.3).is_err());
        let e = kummer_1f1(0.4, 0.4, Complex64::new(1.0, 2.0)).unwrap();
        assert!((e - Complex64::new(1.0, 2.0).exp()).norm() < 1e-14 * e.norm());
        assert_eq!(kummer_1f1(0.1, 0.2, Complex64::new(0.0, 0.0)).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn log_identity() {
        // ln(1+x) = x 2F1(1,1;2;-x)
        for &x in &[0.1, 0.4, 0.9, 3.0, 20.0] {
            let v = x * gauss_2f1(1.0, 1.0, 2.0, -x).unwrap();
            assert!((v / (1.0f64 + x).ln() - 1.0).abs() < 1e-12, "x={x}");
        }
        // far branch, via 2F1(a, b; b; z) = (1 - z)^(-a)
        for &x in &[30.0, 500.0, 1e5] {
            let v = gauss_2f1(0.7, 2.0, 2.0, -x).unwrap();
            assert!((v / (1.0f64 + x).powf(-0.7) - 1.0).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn kummer_continuity_at_switch() {
        let (a, b) = (-0.8, 0.2);
        for &w in &[KUMMER_ASYMPTOTIC_RADIUS * 0.999, KUMMER_ASYMPTOTIC_RADIUS * 1.2] {
            let z = Complex64::new(0.0, w);
            let s = series_1f1(a, b, z).unwrap();
            let asym = {
                let inv = z.inv();
                let s1 = asymptotic_sum(1.0 - a, b - a, inv);
                let s2 = asymptotic_sum(a, a - b + 1.0, -inv);
                let phase = Complex64::from_polar(1.0, std::f64::consts::PI * a);
                (z.exp() * z.powf(a - b) * rgamma(a) * s1 + phase * z.powf(-a) * rgamma(b - a) * s2) * gamma(b)
            };
            assert!((s - asym).norm() < 1e-11 * s.norm(), "w={w} {s} {asym}");
        }
    }
}
