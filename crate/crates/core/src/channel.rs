//! Ricean/Nakagami fading with channel-inverse precoding and the resulting SIR.

use crate::error::{Error, Result};
use crate::geometry::{BsLayout, CompSet, Point2};
use crate::rng::{stream, SimRng};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::sync::{Mutex, OnceLock};

/// Sample count and seed of the cached interference-gain fit.
pub const FIT_SAMPLES: usize = 1_000_000;
pub const FIT_SEED: u64 = 0x5eed_0f17;

/// Gamma parameters of the serving and interfering power gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingParams {
    pub ricean_k: f64,
    /// Nakagami shape.
    pub m: f64,
    /// Nakagami spread, mean power per antenna.
    pub omega: f64,
    pub antennas: usize,
    pub m1: f64,
    pub omega1: f64,
    pub m2: f64,
    pub omega2: f64,
}

impl FadingParams {
    /// Serving parameters from the formulas, interference parameters given.
    pub fn new(ricean_k: f64, antennas: usize, m2: f64, omega2: f64) -> Result<Self> {
        let (m, omega) = nakagami_from_ricean(ricean_k)?;
        if antennas == 0 {
            return Err(Error::Config("need at least one antenna".into()));
        }
        if !(m2 > 0.0 && omega2 > 0.0) {
            return Err(Error::Config(format!("interference gain parameters must be positive, got ({m2}, {omega2})")));
        }
        Ok(FadingParams { ricean_k, m, omega, antennas, m1: m * antennas as f64, omega1: omega / m, m2, omega2 })
    }

    /// Mean interference gain `m2 * omega2`.
    pub fn mean_interference_gain(&self) -> f64 {
        self.m2 * self.omega2
    }
}

/// Nakagami `(m, omega)` matched to Ricean factor `K`.
pub fn nakagami_from_ricean(k: f64) -> Result<(f64, f64)> {
    if !(k >= 0.0) {
        return Err(Error::Domain(format!("Ricean factor must be >= 0, got {k}")));
    }
    if k.is_infinite() {
        return Ok((f64::INFINITY, f64::INFINITY));
    }
    Ok(((k + 1.0).powi(2) / (2.0 * k + 1.0), k + 1.0))
}

fn cn<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    Complex64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
}

/// One Ricean channel vector: common line-of-sight part `sqrt(K)` on every
/// antenna plus unit circularly-symmetric scatter.
pub fn ricean_vector<R: Rng + ?Sized>(k: f64, antennas: usize, rng: &mut R) -> Vec<Complex64> {
    let los = k.sqrt();
    (0..antennas).map(|_| Complex64::new(los, 0.0) + cn(rng)).collect()
}

/// `|h^H w|^2` for `h` Ricean and `w` the normalised direction of an independent Ricean vector.
pub fn raw_interference_gain<R: Rng + ?Sized>(k: f64, antennas: usize, rng: &mut R) -> f64 {
    let h = ricean_vector(k, antennas, rng);
    let w = ricean_vector(k, antennas, rng);
    let nw = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let ip: Complex64 = h.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
    ip.norm_sqr() / (nw * nw)
}

/// `||h||` of a serving channel vector.
pub fn serving_amplitude<R: Rng + ?Sized>(k: f64, antennas: usize, rng: &mut R) -> f64 {
    ricean_vector(k, antennas, rng).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Fit `Gamma(m2, omega2)` to the interference gain by matching mean and variance.
pub fn fit_gain_params<R: Rng + ?Sized>(k: f64, antennas: usize, mc_samples: usize, rng: &mut R) -> Result<FadingParams> {
    nakagami_from_ricean(k)?;
    if antennas == 0 {
        return Err(Error::Config("need at least one antenna".into()));
    }
    if mc_samples < 100_000 {
        return Err(Error::Config(format!("interference fit needs >= 1e5 samples, got {mc_samples}")));
    }
    // Welford
    let mut mean = 0.0;
    let mut m2acc = 0.0;
    for n in 1..=mc_samples {
        let g = raw_interference_gain(k, antennas, rng);
        let d = g - mean;
        mean += d / n as f64;
        m2acc += d * (g - mean);
    }
    let var = m2acc / (mc_samples - 1) as f64;
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::numeric("degenerate interference-gain variance", var));
    }
    FadingParams::new(k, antennas, mean * mean / var, var / mean)
}

fn cache() -> &'static Mutex<HashMap<(u64, usize), FadingParams>> {
    static C: OnceLock<Mutex<HashMap<(u64, usize), FadingParams>>> = OnceLock::new();
    C.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Fitted parameters for `(K, M)` with [`FIT_SAMPLES`] draws from [`FIT_SEED`], memoised.
pub fn fitted_params(k: f64, antennas: usize) -> Result<FadingParams> {
    let key = (k.to_bits(), antennas);
    if let Some(p) = cache().lock().expect("fit cache").get(&key) {
        return Ok(*p);
    }
    let mut rng = stream(FIT_SEED, antennas as u64);
    let p = fit_gain_params(k, antennas, FIT_SAMPLES, &mut rng)?;
    cache().lock().expect("fit cache").insert(key, p);
    Ok(p)
}

/// Seed the memo with externally stored fits (see [`read_fit_csv`]).
pub fn preload_fits(records: &[FitRecord]) -> Result<()> {
    let mut c = cache().lock().expect("fit cache");
    for r in records {
        c.insert((r.ricean_k.to_bits(), r.antennas), FadingParams::new(r.ricean_k, r.antennas, r.m2, r.omega2)?);
    }
    Ok(())
}

/// One row of the fit cache file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitRecord {
    pub ricean_k: f64,
    pub antennas: usize,
    pub m2: f64,
    pub omega2: f64,
    pub samples: usize,
    pub seed: u64,
}

impl FitRecord {
    pub fn from_params(p: &FadingParams) -> Self {
        FitRecord { ricean_k: p.ricean_k, antennas: p.antennas, m2: p.m2, omega2: p.omega2, samples: FIT_SAMPLES, seed: FIT_SEED }
    }
}

pub fn write_fit_csv<W: Write>(records: &[FitRecord], mut w: W) -> std::io::Result<()> {
    writeln!(w, "k,m_antennas,m2,omega2,samples,seed")?;
    for r in records {
        writeln!(w, "{},{},{:.12},{:.12},{},{}", r.ricean_k, r.antennas, r.m2, r.omega2, r.samples, r.seed)?;
    }
    Ok(())
}

pub fn read_fit_csv<R: BufRead>(r: R) -> Result<Vec<FitRecord>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::Config(e.to_string()))?;
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let bad = || Error::Config(format!("fit cache line {}: {line}", i + 1));
        if f.len() != 6 {
            return Err(bad());
        }
        out.push(FitRecord {
            ricean_k: f[0].parse().map_err(|_| bad())?,
            antennas: f[1].parse().map_err(|_| bad())?,
            m2: f[2].parse().map_err(|_| bad())?,
            omega2: f[3].parse().map_err(|_| bad())?,
            samples: f[4].parse().map_err(|_| bad())?,
            seed: f[5].parse().map_err(|_| bad())?,
        });
    }
    Ok(out)
}

/// Instantaneous received powers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SirSample {
    pub signal: f64,
    pub interference: f64,
    /// `signal / interference`, infinite when nothing interferes.
    pub sir: f64,
    /// Set when the interferer set was empty.
    pub interference_free: bool,
}

impl SirSample {
    /// Same sample with every transmit power multiplied by `c`.
    pub fn with_power(&self, c: f64) -> SirSample {
        SirSample::from_parts(self.signal * c, self.interference * c, !self.interference_free)
    }

    fn from_parts(signal: f64, interference: f64, any: bool) -> Self {
        if !any || interference <= 0.0 {
            SirSample { signal, interference: 0.0, sir: f64::INFINITY, interference_free: true }
        } else {
            SirSample { signal, interference, sir: signal / interference, interference_free: false }
        }
    }
}

/// Interference accounting for [`sample_sir_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct SirOptions<'a> {
    /// Draw `|h^H w|^2` directly instead of the fitted Gamma law.
    pub raw_interference: bool,
    /// Only interferers within this horizontal radius are drawn.
    pub radius: Option<f64>,
    /// Add the mean interference of a PPP of this intensity beyond `radius`.
    pub tail_intensity: Option<f64>,
    /// Per-site co-channel mask; `None` lets every site interfere.
    pub active: Option<&'a [bool]>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 2.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!("path-loss exponent must exceed 2, got {alpha}")));
    }
    Ok(())
}

fn serving_distances(layout: &BsLayout, members: &[usize], h: f64, p: Point2) -> Result<Vec<f64>> {
    if members.is_empty() {
        return Err(Error::Request("empty serving set".into()));
    }
    members
        .iter()
        .map(|&i| match layout.sites.get(i) {
            Some(s) => Ok((s.dist2(p) + h * h).sqrt()),
            None => Err(Error::Request(format!("CoMP member {i} not in layout"))),
        })
        .collect()
}

/// Call `f` with the squared 3D distance of every interferer, in a fixed order.
fn for_each_interferer(layout: &BsLayout, members: &[usize], h: f64, p: Point2, opts: &SirOptions, mut f: impl FnMut(f64)) {
    let mut visit = |j: usize, r2: f64| {
        if members.contains(&j) {
            return;
        }
        if let Some(mask) = opts.active {
            if !mask.get(j).copied().unwrap_or(false) {
                return;
            }
        }
        f(r2 + h * h);
    };
    match opts.radius {
        Some(r) => {
            let mut hits = Vec::new();
            layout.index().for_each_within(p, r, |j, d2| hits.push((j, d2)));
            hits.sort_unstable_by_key(|x| x.0);
            for (j, d2) in hits {
                visit(j, d2);
            }
        }
        None => {
            for (j, s) in layout.sites.iter().enumerate() {
                visit(j, s.dist2(p));
            }
        }
    }
}

/// Mean interference from a PPP of intensity `lambda` outside horizontal radius `r`.
pub fn far_field_mean(lambda: f64, mean_gain: f64, alpha: f64, r: f64, h: f64) -> f64 {
    2.0 * std::f64::consts::PI * lambda * mean_gain / (alpha - 2.0) * (r * r + h * h).powf(1.0 - alpha / 2.0)
}

/// Instantaneous SIR of a UAV at `uav_xy`, height `uav_height`, served by `comp`.
pub fn sample_sir(
    layout: &BsLayout,
    comp: &CompSet,
    uav_height: f64,
    uav_xy: Point2,
    fading: &FadingParams,
    alpha: f64,
    rng: &mut SimRng,
) -> Result<SirSample> {
    sample_sir_with(layout, comp, uav_height, uav_xy, fading, alpha, &SirOptions::default(), rng)
}

#[allow(clippy::too_many_arguments)]
pub fn sample_sir_with<R: Rng + ?Sized>(
    layout: &BsLayout,
    comp: &CompSet,
    uav_height: f64,
    uav_xy: Point2,
    fading: &FadingParams,
    alpha: f64,
    opts: &SirOptions,
    rng: &mut R,
) -> Result<SirSample> {
    sample_sir_set_with(layout, &comp.members, uav_height, uav_xy, fading, alpha, opts, rng)
}

/// As [`sample_sir_with`] for an arbitrary non-empty set of coherently serving BSs.
#[allow(clippy::too_many_arguments)]
pub fn sample_sir_set_with<R: Rng + ?Sized>(
    layout: &BsLayout,
    members: &[usize],
    uav_height: f64,
    uav_xy: Point2,
    fading: &FadingParams,
    alpha: f64,
    opts: &SirOptions,
    rng: &mut R,
) -> Result<SirSample> {
    check_alpha(alpha)?;
    let d = serving_distances(layout, members, uav_height, uav_xy)?;
    let amp: f64 = d.iter().map(|&di| di.powf(-alpha / 2.0) * serving_amplitude(fading.ricean_k, fading.antennas, rng)).sum();
    let signal = amp * amp;
    let gamma = Gamma::new(fading.m2, fading.omega2).map_err(|e| Error::Config(e.to_string()))?;
    let mut interference = 0.0;
    let mut any = false;
    for_each_interferer(layout, members, uav_height, uav_xy, opts, |d2| {
        let g = if opts.raw_interference {
            raw_interference_gain(fading.ricean_k, fading.antennas, rng)
        } else {
            gamma.sample(rng)
        };
        interference += d2.powf(-alpha / 2.0) * g;
        any = true;
    });
    if let (Some(r), Some(lt)) = (opts.radius, opts.tail_intensity) {
        // the fitted mean is also the mean of the raw draw
        let tail = far_field_mean(lt, fading.mean_interference_gain(), alpha, r, uav_height);
        if tail > 0.0 {
            interference += tail;
            any = true;
        }
    }
    Ok(SirSample::from_parts(signal, interference, any))
}

/// SIR without fading: `(sum d_i^{-a/2})^2 / sum d_j^{-a}`.
pub fn sample_sir_nofading(layout: &BsLayout, comp: &CompSet, uav_height: f64, uav_xy: Point2, alpha: f64) -> Result<SirSample> {
    sample_sir_nofading_with(layout, comp, uav_height, uav_xy, alpha, &SirOptions::default())
}

pub fn sample_sir_nofading_with(
    layout: &BsLayout,
    comp: &CompSet,
    uav_height: f64,
    uav_xy: Point2,
    alpha: f64,
    opts: &SirOptions,
) -> Result<SirSample> {
    sample_sir_nofading_set_with(layout, &comp.members, uav_height, uav_xy, alpha, opts)
}

pub fn sample_sir_nofading_set_with(
    layout: &BsLayout,
    members: &[usize],
    uav_height: f64,
    uav_xy: Point2,
    alpha: f64,
    opts: &SirOptions,
) -> Result<SirSample> {
    check_alpha(alpha)?;
    let d = serving_distances(layout, members, uav_height, uav_xy)?;
    let amp: f64 = d.iter().map(|&di| di.powf(-alpha / 2.0)).sum();
    let mut interference = 0.0;
    let mut any = false;
    for_each_interferer(layout, members, uav_height, uav_xy, opts, |d2| {
        interference += d2.powf(-alpha / 2.0);
        any = true;
    });
    if let (Some(r), Some(lt)) = (opts.radius, opts.tail_intensity) {
        let tail = far_field_mean(lt, 1.0, alpha, r, uav_height);
        if tail > 0.0 {
            interference += tail;
            any = true;
        }
    }
    Ok(SirSample::from_parts(amp * amp, interference, any))
}
