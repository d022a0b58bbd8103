//! Monte-Carlo harness: handoff rates and coverage of a UAV flying over a
//! Poisson BS layout under four serving schemes.

use crate::analytics::{linear_to_db, AnalysisConfig};
use crate::channel::{sample_sir_nofading_set_with, sample_sir_set_with, SirOptions};
use crate::error::{Error, Result};
use crate::freqplan::{assign_bands, epsilon_star, pack_circles, thin_interferers, FrequencyPlan, Region};
use crate::geometry::{default_guard, sample_ppp_with, select_comp_set, BsLayout, GridIndex, Point2, Rect, Triangulation};
use crate::mobility::{initial_waypoint, sample_trace, time_samples, TimeSample};
use crate::rng::{stream, SimRng};
use rayon::prelude::*;
use std::collections::HashMap;
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    /// Delaunay CoMP: the serving triangle is kept until an adjacent one
    /// offers a higher mean received power.
    Delaunay,
    /// Nearest circumcentre decides the serving triangle.
    DelaunayApprox,
    /// Three nearest BSs.
    VoronoiComp3,
    /// Nearest BS alone.
    VoronoiNocomp,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Delaunay, Scheme::DelaunayApprox, Scheme::VoronoiComp3, Scheme::VoronoiNocomp];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Delaunay => "delaunay",
            Scheme::DelaunayApprox => "delaunay_approx",
            Scheme::VoronoiComp3 => "voronoi_comp3",
            Scheme::VoronoiNocomp => "voronoi_nocomp",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme '{s}'")))
    }
}

/// Channel model for coverage trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelMode {
    /// Ricean serving links, fitted Gamma interferer gains.
    Fading,
    /// Ricean serving links, interferer gains drawn from the antenna model.
    RawFading,
    NoFading,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub analysis: AnalysisConfig,
    pub scheme: Scheme,
    pub trials: usize,
    pub epochs_per_trial: usize,
    /// Epochs flown before sampling starts.
    pub warmup_epochs: usize,
    pub master_seed: u64,
    /// Spectral-efficiency target enabling the frequency plan.
    pub freq_plan: Option<f64>,
    pub channel: ChannelMode,
    /// Coverage is evaluated every this many time steps.
    pub coverage_stride: usize,
    /// Interferers inside this horizontal radius are drawn; the rest enter by their mean.
    pub interference_radius: f64,
}

impl ScenarioConfig {
    pub fn new(analysis: AnalysisConfig, scheme: Scheme) -> Self {
        ScenarioConfig {
            analysis,
            scheme,
            trials: 50,
            epochs_per_trial: 200,
            warmup_epochs: 5,
            master_seed: 1,
            freq_plan: None,
            channel: ChannelMode::Fading,
            coverage_stride: 10,
            interference_radius: 2000.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.analysis.validate()?;
        if self.trials == 0 || self.epochs_per_trial == 0 {
            return Err(Error::Config("trials and epochs_per_trial must be at least 1".into()));
        }
        if self.coverage_stride == 0 {
            return Err(Error::Config("coverage_stride must be at least 1".into()));
        }
        if !(self.interference_radius > 0.0) || !self.interference_radius.is_finite() {
            return Err(Error::Config(format!("interference radius must be positive, got {}", self.interference_radius)));
        }
        if let Some(r) = self.freq_plan {
            if !(r > 0.0) {
                return Err(Error::Config(format!("r_th must be positive, got {r}")));
            }
        }
        Ok(())
    }
}

/// Monte-Carlo estimate of a probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    /// Number of underlying samples.
    pub n: usize,
}

impl Estimate {
    /// Mean of per-trial means, with the standard error across trials.
    pub fn from_trials(parts: &[(f64, usize)]) -> Self {
        let used: Vec<f64> = parts.iter().filter(|p| p.1 > 0).map(|p| p.0 / p.1 as f64).collect();
        let n = parts.iter().map(|p| p.1).sum();
        if used.is_empty() {
            return Estimate { mean: 0.0, stderr: 0.0, n };
        }
        let k = used.len() as f64;
        let mean = used.iter().sum::<f64>() / k;
        let var = if used.len() > 1 { used.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0) } else { 0.0 };
        Estimate { mean: mean.clamp(0.0, 1.0), stderr: (var / k).sqrt(), n }
    }

    /// Normal-approximation 95% interval.
    pub fn ci95(&self) -> (f64, f64) {
        (self.mean - 1.96 * self.stderr, self.mean + 1.96 * self.stderr)
    }
}

/// Worker pool capped by `UAVCOMP_THREADS` when set.
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("UAVCOMP_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| Error::Config(format!("UAVCOMP_THREADS must be a positive integer, got '{v}'")))?;
        if n == 0 {
            return Err(Error::Config("UAVCOMP_THREADS must be at least 1".into()));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::Config(e.to_string()))
}

fn run_trials<T: Send>(n: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    let pool = worker_pool()?;
    pool.install(|| (0..n).into_par_iter().map(&f).collect())
}

/// One trial's world: the trace samples and the BS layout around them.
struct World {
    samples: Vec<TimeSample>,
    layout: BsLayout,
    tri: Triangulation,
    circumcenters: GridIndex,
}

fn build_world(cfg: &ScenarioConfig, trial: usize, min_guard: f64) -> Result<World> {
    let a = &cfg.analysis;
    let m = &a.mobility;
    let mut rng = stream(cfg.master_seed, trial as u64);
    let start = initial_waypoint(Point2::new(0.0, 0.0), m, &mut rng);
    let trace = sample_trace(m, cfg.warmup_epochs + cfg.epochs_per_trial, start, &mut rng)?;
    let samples: Vec<TimeSample> = if m.speed == 0.0 {
        // a hovering UAV stays put for the whole trial
        let s = trace[cfg.warmup_epochs].start;
        vec![TimeSample { time: 0.0, position: s.position, height: s.height, epoch: 0 }; cfg.epochs_per_trial]
    } else {
        time_samples(&trace[cfg.warmup_epochs..], m.speed, m.dt).collect()
    };
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for s in &samples {
        x0 = x0.min(s.position.x);
        y0 = y0.min(s.position.y);
        x1 = x1.max(s.position.x);
        y1 = y1.max(s.position.y);
    }
    // keep the window non-degenerate for a hovering or straight-line UAV
    let window = Rect::new(x0 - 1.0, y0 - 1.0, x1 + 1.0, y1 + 1.0);
    let guard = default_guard(a.lambda).max(min_guard);
    let layout = sample_ppp_with(a.lambda, window, guard, &mut rng)?;
    let tri = Triangulation::from_points(&layout.sites)?;
    let circumcenters = GridIndex::new(&tri.circumcenters, 2.0);
    Ok(World { samples, layout, tri, circumcenters })
}

/// Mean received power of a coherent set, unit transmit power.
fn mean_power(layout: &BsLayout, members: &[usize], p: Point2, h: f64, alpha: f64) -> f64 {
    let amp: f64 = members.iter().map(|&i| (layout.sites[i].dist2(p) + h * h).powf(-alpha / 4.0)).sum();
    amp * amp
}

/// Serving state of one scheme along a trace.
#[derive(Debug, Clone, PartialEq)]
enum Serving {
    Triangle(usize),
    Sites(Vec<usize>),
}

struct Tracker<'a> {
    w: &'a World,
    scheme: Scheme,
    alpha: f64,
    cur: Option<Serving>,
}

impl<'a> Tracker<'a> {
    fn new(w: &'a World, scheme: Scheme, alpha: f64) -> Self {
        Tracker { w, scheme, alpha, cur: None }
    }

    fn select(&self, s: &TimeSample) -> Result<Serving> {
        let w = self.w;
        Ok(match self.scheme {
            Scheme::Delaunay => Serving::Triangle(select_comp_set(&w.tri, &w.layout, s.position)?.triangle),
            Scheme::DelaunayApprox => Serving::Triangle(w.circumcenters.nearest_k(s.position, 1)[0].0),
            Scheme::VoronoiComp3 => {
                let mut v: Vec<usize> = w.layout.nearest_k(s.position, 3)?.into_iter().map(|x| x.0).collect();
                v.sort_unstable();
                Serving::Sites(v)
            }
            Scheme::VoronoiNocomp => Serving::Sites(vec![w.layout.nearest_k(s.position, 1)?[0].0]),
        })
    }

    /// Advance to the next sample; returns whether a handoff fired.
    fn step(&mut self, s: &TimeSample) -> Result<bool> {
        let Some(cur) = self.cur.clone() else {
            self.cur = Some(self.select(s)?);
            return Ok(false);
        };
        let next = match (self.scheme, &cur) {
            (Scheme::Delaunay, Serving::Triangle(t0)) => {
                let tri = &self.w.tri;
                let e = |t: usize| mean_power(&self.w.layout, &tri.triangles[t], s.position, s.height, self.alpha);
                let mut t = *t0;
                let mut et = e(t);
                // climb while an adjacent triangle is strictly better
                loop {
                    let mut best = None;
                    for n in tri.neighbors[t].iter().flatten() {
                        let en = e(*n);
                        if en > et && best.is_none_or(|(_, b)| en > b) {
                            best = Some((*n, en));
                        }
                    }
                    match best {
                        Some((n, en)) => {
                            t = n;
                            et = en;
                        }
                        None => break,
                    }
                }
                Serving::Triangle(t)
            }
            _ => self.select(s)?,
        };
        let changed = next != cur;
        self.cur = Some(next);
        Ok(changed)
    }

    fn members(&self) -> Vec<usize> {
        match self.cur.as_ref().expect("tracker stepped") {
            Serving::Triangle(t) => self.w.tri.triangles[*t].to_vec(),
            Serving::Sites(v) => v.clone(),
        }
    }

    /// Triangle used to look up the frequency band of the serving cell.
    fn cell(&self, s: &TimeSample) -> Result<usize> {
        match self.cur.as_ref().expect("tracker stepped") {
            Serving::Triangle(t) => Ok(*t),
            Serving::Sites(_) => Ok(select_comp_set(&self.w.tri, &self.w.layout, s.position)?.triangle),
        }
    }
}

/// Handoff events and step counts of one trial for each scheme in `schemes`.
fn handoff_trial(cfg: &ScenarioConfig, trial: usize, schemes: &[Scheme]) -> Result<Vec<(f64, usize)>> {
    let w = build_world(cfg, trial, 0.0)?;
    let mut out = Vec::with_capacity(schemes.len());
    for &sc in schemes {
        let mut tr = Tracker::new(&w, sc, cfg.analysis.alpha);
        let mut events = 0usize;
        for s in &w.samples {
            events += tr.step(s)? as usize;
        }
        out.push((events as f64, w.samples.len().saturating_sub(1)));
    }
    Ok(out)
}

/// Fraction of unit-time steps at which the scheme hands off.
pub fn run_handoff_trials(cfg: &ScenarioConfig) -> Result<Estimate> {
    Ok(run_handoff_trials_multi(cfg, &[cfg.scheme])?[0])
}

/// As [`run_handoff_trials`] for several schemes over the same layouts and traces.
pub fn run_handoff_trials_multi(cfg: &ScenarioConfig, schemes: &[Scheme]) -> Result<Vec<Estimate>> {
    cfg.validate()?;
    let per = run_trials(cfg.trials, |i| handoff_trial(cfg, i, schemes))?;
    Ok((0..schemes.len()).map(|k| Estimate::from_trials(&per.iter().map(|p| p[k]).collect::<Vec<_>>())).collect())
}

/// Empirical coverage curve of one scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCurve {
    pub scheme: Scheme,
    pub gamma_db: Vec<f64>,
    pub beta: f64,
    pub estimates: Vec<Estimate>,
}

struct PlanState {
    plan: FrequencyPlan,
    masks: HashMap<usize, (Vec<bool>, f64)>,
}

/// Coverage sums per threshold and sample count of one trial for one scheme.
fn coverage_trial(cfg: &ScenarioConfig, trial: usize, scheme: Scheme, gammas: &[f64], beta: f64, eps: Option<f64>) -> Result<(Vec<f64>, usize)> {
    let a = &cfg.analysis;
    let w = build_world(cfg, trial, cfg.interference_radius)?;
    // fading draws come from a stream separate from the geometry
    let mut rng: SimRng = stream(cfg.master_seed ^ 0xC0FE_0000_0000_0000, trial as u64);
    let mut plan = match eps {
        Some(e) => {
            let circles = pack_circles(&Region::Rect(w.layout.region()), e)?;
            Some(PlanState { plan: assign_bands(&w.tri, &circles)?, masks: HashMap::new() })
        }
        None => None,
    };
    let mut tr = Tracker::new(&w, scheme, a.alpha);
    let mut sums = vec![0.0; gammas.len()];
    let mut n = 0usize;
    for (k, s) in w.samples.iter().enumerate() {
        let handoff = tr.step(s)?;
        if k % cfg.coverage_stride != 0 {
            continue;
        }
        let h = a.fixed_height.unwrap_or(s.height);
        let members = tr.members();
        let mut opts = SirOptions {
            raw_interference: cfg.channel == ChannelMode::RawFading,
            radius: Some(cfg.interference_radius),
            tail_intensity: Some(a.lambda),
            active: None,
        };
        if let Some(ps) = plan.as_mut() {
            let cell = tr.cell(s)?;
            if !ps.masks.contains_key(&cell) {
                let m = thin_interferers(&w.layout, &ps.plan, cell)?;
                let frac = m.iter().filter(|x| **x).count() as f64 / w.layout.len() as f64;
                ps.masks.insert(cell, (m, frac));
            }
            let (m, frac) = &ps.masks[&cell];
            opts.active = Some(m);
            opts.tail_intensity = Some(a.lambda * frac);
        }
        let sir = match cfg.channel {
            ChannelMode::NoFading => sample_sir_nofading_set_with(&w.layout, &members, h, s.position, a.alpha, &opts)?,
            _ => sample_sir_set_with(&w.layout, &members, h, s.position, &a.fading, a.alpha, &opts, &mut rng)?,
        };
        let keep = if handoff { 1.0 - beta } else { 1.0 };
        for (acc, g) in sums.iter_mut().zip(gammas) {
            if sir.sir > *g {
                *acc += keep;
            }
        }
        n += 1;
    }
    Ok((sums, n))
}

/// Empirical `P{SIR > γ}` discounted by `β` at handoff steps, for each
/// linear threshold in `gamma_grid`.
pub fn run_coverage_trials(cfg: &ScenarioConfig, gamma_grid: &[f64], beta: f64) -> Result<EmpiricalCurve> {
    Ok(run_coverage_trials_multi(cfg, &[cfg.scheme], gamma_grid, beta)?.remove(0))
}

/// As [`run_coverage_trials`] for several schemes over the same layouts and traces.
pub fn run_coverage_trials_multi(cfg: &ScenarioConfig, schemes: &[Scheme], gamma_grid: &[f64], beta: f64) -> Result<Vec<EmpiricalCurve>> {
    cfg.validate()?;
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::Config(format!("beta must lie in [0,1], got {beta}")));
    }
    if gamma_grid.iter().any(|g| !(*g >= 0.0)) {
        return Err(Error::Config("SIR thresholds must be non-negative".into()));
    }
    let eps = match cfg.freq_plan {
        Some(r) => Some(epsilon_star(&cfg.analysis, r, cfg.analysis.h_bar())?),
        None => None,
    };
    let per = run_trials(cfg.trials, |i| schemes.iter().map(|&s| coverage_trial(cfg, i, s, gamma_grid, beta, eps)).collect::<Result<Vec<_>>>())?;
    Ok(schemes
        .iter()
        .enumerate()
        .map(|(k, &scheme)| {
            let estimates = (0..gamma_grid.len())
                .map(|g| Estimate::from_trials(&per.iter().map(|p| (p[k].0[g], p[k].1)).collect::<Vec<_>>()))
                .collect();
            EmpiricalCurve { scheme, gamma_db: gamma_grid.iter().map(|&g| linear_to_db(g)).collect(), beta, estimates }
        })
        .collect())
}

/// One point of an analytic-vs-empirical comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub gamma_db: f64,
    pub analytic: f64,
    pub empirical: Estimate,
    /// `analytic - empirical.mean`.
    pub diff: f64,
    pub within_ci: bool,
    /// Set when an upper bound falls more than two standard errors below the estimate.
    pub bound_violated: bool,
}

/// Compare analytic values on `gamma_db` with an empirical curve on the same grid.
pub fn compare_report(gamma_db: &[f64], analytic: &[f64], is_bound: bool, empirical: &EmpiricalCurve) -> Result<Vec<ComparisonRow>> {
    if gamma_db.len() != analytic.len() || gamma_db.len() != empirical.gamma_db.len() {
        return Err(Error::Request("analytic and empirical grids differ in length".into()));
    }
    gamma_db
        .iter()
        .zip(analytic)
        .zip(empirical.gamma_db.iter().zip(&empirical.estimates))
        .map(|((&g, &a), (&ge, e))| {
            if (g - ge).abs() > 1e-9 * (1.0 + g.abs()) {
                return Err(Error::Request(format!("grid mismatch: {g} dB vs {ge} dB")));
            }
            Ok(compare_point(g, a, is_bound, e))
        })
        .collect()
}

pub fn compare_point(gamma_db: f64, analytic: f64, is_bound: bool, e: &Estimate) -> ComparisonRow {
    let (lo, hi) = e.ci95();
    ComparisonRow {
        gamma_db,
        analytic,
        empirical: *e,
        diff: analytic - e.mean,
        within_ci: analytic >= lo && analytic <= hi,
        bound_violated: is_bound && analytic < e.mean - 2.0 * e.stderr,
    }
}

/// One row of the results CSV; `gamma_db` is `None` for handoff rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResultRow {
    pub scheme: Scheme,
    pub lambda_per_km2: f64,
    pub v_mps: f64,
    pub gamma_db: Option<f64>,
    pub beta: f64,
    pub freqplan: Option<f64>,
    pub estimate: Estimate,
    pub seed: u64,
}

/// Results CSV: `scheme,lambda_per_km2,v_mps,gamma_db,beta,freqplan,mean,stderr,n,seed`.
pub fn write_results_csv<W: Write>(rows: &[ResultRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "scheme,lambda_per_km2,v_mps,gamma_db,beta,freqplan,mean,stderr,n,seed")?;
    for r in rows {
        let g = r.gamma_db.map(|g| format!("{g}")).unwrap_or_default();
        let f = r.freqplan.map(|f| format!("{f}")).unwrap_or_else(|| "none".into());
        writeln!(
            w,
            "{},{},{},{},{},{},{:.6},{:.6},{},{}",
            r.scheme.as_str(),
            r.lambda_per_km2,
            r.v_mps,
            g,
            r.beta,
            f,
            r.estimate.mean,
            r.estimate.stderr,
            r.estimate.n,
            r.seed
        )?;
    }
    Ok(())
}

/// Rows for an empirical coverage curve.
pub fn curve_rows(cfg: &ScenarioConfig, c: &EmpiricalCurve) -> Vec<ResultRow> {
    c.gamma_db
        .iter()
        .zip(&c.estimates)
        .map(|(&g, e)| ResultRow {
            scheme: c.scheme,
            lambda_per_km2: cfg.analysis.lambda * 1e6,
            v_mps: cfg.analysis.mobility.speed,
            gamma_db: Some(g),
            beta: c.beta,
            freqplan: cfg.freq_plan,
            estimate: *e,
            seed: cfg.master_seed,
        })
        .collect()
}
