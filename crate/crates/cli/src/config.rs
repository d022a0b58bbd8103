//! Flat `key = value` run configuration.
//!
//! Lines are `key = value`; `#` starts a comment. Sweepable keys take a
//! comma-separated list. `gamma_db_grid` also accepts `lo:hi:step`.

use anyhow::{anyhow, bail, Context, Result};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;
use uavcomp_core::analytics::{db_grid, db_to_linear, AnalysisConfig};
use uavcomp_core::channel::{fitted_params, FadingParams};
use uavcomp_core::mobility::MobilityConfig;
use uavcomp_core::simulator::{ChannelMode, ScenarioConfig, Scheme};

/// Every accepted key with its default.
pub const KEYS: &[(&str, &str)] = &[
    ("lambda_per_km2", "20"),
    ("alpha", "3"),
    ("m_antennas", "8"),
    ("ricean_k", "1"),
    ("v_mps", "20"),
    ("mu", "1e-6"),
    ("h1_m", "30"),
    ("h2_m", "70"),
    ("beta", "0.1"),
    ("gamma_db_grid", "-10:20:2"),
    ("r_th", "none"),
    ("scheme", "all"),
    ("trials", "50"),
    ("seed", "1"),
    ("epochs_per_trial", "200"),
    ("channel", "fading"),
    ("fixed_height_m", "none"),
    ("analytic", "true"),
    ("coverage_stride", "10"),
    ("interference_radius_m", "2000"),
    ("window_m", "4000"),
    ("quad_tol", "1e-4"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub lambda_per_km2: Vec<f64>,
    pub alpha: Vec<f64>,
    pub m_antennas: Vec<usize>,
    pub ricean_k: f64,
    pub v_mps: Vec<f64>,
    pub mu: f64,
    pub h1_m: f64,
    pub h2_m: f64,
    pub beta: Vec<f64>,
    pub gamma_db_grid: Vec<f64>,
    pub r_th: Option<f64>,
    pub schemes: Vec<Scheme>,
    pub trials: usize,
    pub seed: u64,
    pub epochs_per_trial: usize,
    pub channel: ChannelMode,
    pub fixed_height_m: Option<f64>,
    pub analytic: bool,
    pub coverage_stride: usize,
    pub interference_radius_m: f64,
    pub window_m: f64,
    pub quad_tol: f64,
    canonical: String,
}

/// One point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub lambda_per_km2: f64,
    pub alpha: f64,
    pub m_antennas: usize,
    pub v_mps: f64,
}

fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    let out: Vec<T> = v
        .split(',')
        .map(|x| x.trim().parse::<T>().map_err(|_| anyhow!("{key}: cannot parse '{}'", x.trim())))
        .collect::<Result<_>>()?;
    if out.is_empty() {
        bail!("{key}: empty list");
    }
    Ok(out)
}

fn one<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse::<T>().map_err(|_| anyhow!("{key}: cannot parse '{v}'"))
}

fn opt(key: &str, v: &str) -> Result<Option<f64>> {
    if v.trim() == "none" {
        Ok(None)
    } else {
        Ok(Some(one(key, v)?))
    }
}

fn positive(key: &str, xs: &[f64]) -> Result<()> {
    if let Some(x) = xs.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
        bail!("{key} must be positive, got {x}");
    }
    Ok(())
}

fn parse_grid(v: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = v.split(':').collect();
    if parts.len() == 3 {
        let (lo, hi, step): (f64, f64, f64) = (one("gamma_db_grid", parts[0])?, one("gamma_db_grid", parts[1])?, one("gamma_db_grid", parts[2])?);
        if !(step > 0.0) || hi < lo {
            bail!("gamma_db_grid: need lo <= hi and a positive step");
        }
        return Ok(db_grid(lo, hi, step));
    }
    list("gamma_db_grid", v)
}

fn fmt_list<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_else(|| "none".into())
}

impl RunConfig {
    pub fn defaults() -> Self {
        Self::from_pairs(&[]).expect("defaults parse")
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key = value", i + 1))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        Self::from_pairs(&pairs)
    }

    /// Apply `pairs` over the defaults; later duplicates are an error.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let mut m: BTreeMap<&str, String> = KEYS.iter().map(|(k, v)| (*k, v.to_string())).collect();
        let mut seen = std::collections::HashSet::new();
        for (k, v) in pairs {
            let Some((key, _)) = KEYS.iter().find(|(kk, _)| kk == k) else {
                bail!("unknown key '{k}'");
            };
            if !seen.insert(k.as_str()) {
                bail!("duplicate key '{k}'");
            }
            m.insert(key, v.clone());
        }
        let g = |k: &str| m[k].as_str();
        let schemes = match g("scheme") {
            "all" => Scheme::ALL.to_vec(),
            s => s.split(',').map(|x| Scheme::parse(x.trim())).collect::<uavcomp_core::Result<Vec<_>>>()?,
        };
        let channel = match g("channel") {
            "fading" => ChannelMode::Fading,
            "raw" => ChannelMode::RawFading,
            "none" => ChannelMode::NoFading,
            other => bail!("channel must be fading, raw or none, got '{other}'"),
        };
        let analytic = match g("analytic") {
            "true" => true,
            "false" => false,
            other => bail!("analytic must be true or false, got '{other}'"),
        };
        let mut c = RunConfig {
            lambda_per_km2: list("lambda_per_km2", g("lambda_per_km2"))?,
            alpha: list("alpha", g("alpha"))?,
            m_antennas: list("m_antennas", g("m_antennas"))?,
            ricean_k: one("ricean_k", g("ricean_k"))?,
            v_mps: list("v_mps", g("v_mps"))?,
            mu: one("mu", g("mu"))?,
            h1_m: one("h1_m", g("h1_m"))?,
            h2_m: one("h2_m", g("h2_m"))?,
            beta: list("beta", g("beta"))?,
            gamma_db_grid: parse_grid(g("gamma_db_grid"))?,
            r_th: opt("r_th", g("r_th"))?,
            schemes,
            trials: one("trials", g("trials"))?,
            seed: one("seed", g("seed"))?,
            epochs_per_trial: one("epochs_per_trial", g("epochs_per_trial"))?,
            channel,
            fixed_height_m: opt("fixed_height_m", g("fixed_height_m"))?,
            analytic,
            coverage_stride: one("coverage_stride", g("coverage_stride"))?,
            interference_radius_m: one("interference_radius_m", g("interference_radius_m"))?,
            window_m: one("window_m", g("window_m"))?,
            quad_tol: one("quad_tol", g("quad_tol"))?,
            canonical: String::new(),
        };
        c.check()?;
        c.canonical = c.render();
        Ok(c)
    }

    fn check(&self) -> Result<()> {
        positive("lambda_per_km2", &self.lambda_per_km2)?;
        positive("mu", &[self.mu])?;
        positive("window_m", &[self.window_m])?;
        positive("quad_tol", &[self.quad_tol])?;
        if let Some(a) = self.alpha.iter().find(|a| !(**a > 2.0)) {
            bail!("alpha must exceed 2, got {a}");
        }
        if self.m_antennas.contains(&0) {
            bail!("m_antennas must be at least 1");
        }
        if let Some(v) = self.v_mps.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            bail!("v_mps must be non-negative, got {v}");
        }
        if let Some(b) = self.beta.iter().find(|b| !(0.0..=1.0).contains(*b)) {
            bail!("beta must lie in [0,1], got {b}");
        }
        if self.trials == 0 || self.epochs_per_trial == 0 || self.coverage_stride == 0 {
            bail!("trials, epochs_per_trial and coverage_stride must be at least 1");
        }
        if !(self.ricean_k >= 0.0) {
            bail!("ricean_k must be non-negative");
        }
        Ok(())
    }

    /// Resolved configuration, one `key=value` per line in key order.
    fn render(&self) -> String {
        let schemes = if self.schemes == Scheme::ALL { "all".to_string() } else { self.schemes.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(",") };
        let channel = match self.channel {
            ChannelMode::Fading => "fading",
            ChannelMode::RawFading => "raw",
            ChannelMode::NoFading => "none",
        };
        let mut m = BTreeMap::new();
        m.insert("lambda_per_km2", fmt_list(&self.lambda_per_km2));
        m.insert("alpha", fmt_list(&self.alpha));
        m.insert("m_antennas", fmt_list(&self.m_antennas));
        m.insert("ricean_k", self.ricean_k.to_string());
        m.insert("v_mps", fmt_list(&self.v_mps));
        m.insert("mu", self.mu.to_string());
        m.insert("h1_m", self.h1_m.to_string());
        m.insert("h2_m", self.h2_m.to_string());
        m.insert("beta", fmt_list(&self.beta));
        m.insert("gamma_db_grid", fmt_list(&self.gamma_db_grid));
        m.insert("r_th", fmt_opt(self.r_th));
        m.insert("scheme", schemes);
        m.insert("trials", self.trials.to_string());
        m.insert("seed", self.seed.to_string());
        m.insert("epochs_per_trial", self.epochs_per_trial.to_string());
        m.insert("channel", channel.into());
        m.insert("fixed_height_m", fmt_opt(self.fixed_height_m));
        m.insert("analytic", self.analytic.to_string());
        m.insert("coverage_stride", self.coverage_stride.to_string());
        m.insert("interference_radius_m", self.interference_radius_m.to_string());
        m.insert("window_m", self.window_m.to_string());
        m.insert("quad_tol", self.quad_tol.to_string());
        m.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn canonical(&self) -> &str {
        &self.canonical
    }

    /// SHA-256 of the resolved configuration, hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Cartesian product of the sweepable keys, in a fixed order.
    pub fn points(&self) -> Vec<Point> {
        let mut out = Vec::new();
        for &m_antennas in &self.m_antennas {
            for &alpha in &self.alpha {
                for &lambda_per_km2 in &self.lambda_per_km2 {
                    for &v_mps in &self.v_mps {
                        out.push(Point { lambda_per_km2, alpha, m_antennas, v_mps });
                    }
                }
            }
        }
        out
    }

    pub fn gammas_linear(&self) -> Vec<f64> {
        self.gamma_db_grid.iter().map(|&d| db_to_linear(d)).collect()
    }

    pub fn fading(&self, m_antennas: usize) -> Result<FadingParams> {
        Ok(fitted_params(self.ricean_k, m_antennas)?)
    }

    pub fn analysis(&self, p: &Point) -> Result<AnalysisConfig> {
        let mob = MobilityConfig { mu: self.mu, speed: p.v_mps, h_min: self.h1_m, h_max: self.h2_m, dt: 1.0 };
        let mut a = AnalysisConfig::new(p.lambda_per_km2 * 1e-6, p.alpha, self.fading(p.m_antennas)?, mob)?;
        a.gamma_grid = self.gammas_linear();
        a.quad_tol = self.quad_tol;
        a.fixed_height = self.fixed_height_m;
        a.validate()?;
        Ok(a)
    }

    pub fn scenario(&self, p: &Point, scheme: Scheme) -> Result<ScenarioConfig> {
        let mut s = ScenarioConfig::new(self.analysis(p)?, scheme);
        s.trials = self.trials;
        s.epochs_per_trial = self.epochs_per_trial;
        s.master_seed = self.seed;
        s.freq_plan = self.r_th;
        s.channel = self.channel;
        s.coverage_stride = self.coverage_stride;
        s.interference_radius = self.interference_radius_m;
        s.validate()?;
        Ok(s)
    }
}
