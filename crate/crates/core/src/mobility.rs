//! 3D random-waypoint mobility: Rayleigh hop lengths, uniform headings and
//! uniformly drawn waypoint heights, with no pause at waypoints.

use crate::error::{Error, Result};
use crate::geometry::{Point2, DEFAULT_BS_HEIGHT};
use rand::Rng;
use std::f64::consts::PI;
use std::io::Write;

/// Mobility model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilityConfig {
    /// Rayleigh parameter of the hop length, per square metre.
    pub mu: f64,
    /// Constant speed along the 3D path, m/s.
    pub speed: f64,
    pub h_min: f64,
    pub h_max: f64,
    /// Time step used when the trace is sampled, s.
    pub dt: f64,
}

impl Default for MobilityConfig {
    fn default() -> Self {
        MobilityConfig { mu: 1e-6, speed: 40.0, h_min: 30.0, h_max: 70.0, dt: 1.0 }
    }
}

impl MobilityConfig {
    /// Check the invariants against the given base-station height.
    pub fn validate_with(&self, bs_height: f64) -> Result<()> {
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(Error::Config(format!("mu must be positive, got {}", self.mu)));
        }
        if !(self.speed >= 0.0) || !self.speed.is_finite() {
            return Err(Error::Config(format!("speed must be non-negative, got {}", self.speed)));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.h_max > self.h_min) || !(self.h_min >= bs_height) || !self.h_max.is_finite() {
            return Err(Error::Config(format!(
                "need h_max > h_min >= bs height {bs_height}, got [{}, {}]",
                self.h_min, self.h_max
            )));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with(DEFAULT_BS_HEIGHT)
    }

    /// Mean hop length `1 / (2 sqrt(mu))`.
    pub fn mean_hop(&self) -> f64 {
        0.5 / self.mu.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub position: Point2,
    pub height: f64,
    pub epoch: u64,
}

/// One movement epoch between consecutive waypoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEpoch {
    pub start: Waypoint,
    pub end: Waypoint,
    /// Horizontal transition length, m.
    pub rho: f64,
    /// Elevation angle, rad.
    pub phi: f64,
    /// Horizontal heading, rad.
    pub psi: f64,
}

impl TraceEpoch {
    /// Length of the straight 3D segment.
    pub fn length(&self) -> f64 {
        self.rho.hypot(self.end.height - self.start.height)
    }

    /// Time needed to fly the epoch at `speed`.
    pub fn duration(&self, speed: f64) -> f64 {
        let l = self.length();
        if l == 0.0 {
            0.0
        } else {
            l / speed
        }
    }

    /// Position and height at fraction `f` of the epoch.
    pub fn at(&self, f: f64) -> (Point2, f64) {
        let s = self.start;
        let e = self.end;
        let p = Point2::new(s.position.x + f * (e.position.x - s.position.x), s.position.y + f * (e.position.y - s.position.y));
        (p, s.height + f * (e.height - s.height))
    }
}

/// Draw a Rayleigh hop length with density `2 pi mu r exp(-pi mu r^2)`.
pub fn sample_hop<R: Rng + ?Sized>(mu: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    // 1-u lies in (0, 1]
    (-(1.0 - u).ln() / (PI * mu)).sqrt()
}

/// A waypoint with uniformly drawn height at the given position.
pub fn initial_waypoint<R: Rng + ?Sized>(position: Point2, cfg: &MobilityConfig, rng: &mut R) -> Waypoint {
    Waypoint { position, height: rng.random_range(cfg.h_min..=cfg.h_max), epoch: 0 }
}

/// Draw the next epoch starting at `current`.
pub fn next_waypoint<R: Rng + ?Sized>(current: &Waypoint, cfg: &MobilityConfig, rng: &mut R) -> TraceEpoch {
    let rho = sample_hop(cfg.mu, rng);
    let psi = rng.random_range(0.0..2.0 * PI);
    let height = rng.random_range(cfg.h_min..=cfg.h_max);
    let position = Point2::new(current.position.x + rho * psi.cos(), current.position.y + rho * psi.sin());
    let end = Waypoint { position, height, epoch: current.epoch + 1 };
    let phi = (height - current.height).atan2(rho);
    TraceEpoch { start: *current, end, rho, phi, psi }
}

/// `n_epochs` chained epochs starting at `start`.
pub fn sample_trace<R: Rng + ?Sized>(cfg: &MobilityConfig, n_epochs: usize, start: Waypoint, rng: &mut R) -> Result<Vec<TraceEpoch>> {
    if n_epochs == 0 {
        return Err(Error::Request("trace needs at least one epoch".into()));
    }
    let mut out = Vec::with_capacity(n_epochs);
    let mut cur = start;
    for _ in 0..n_epochs {
        let e = next_waypoint(&cur, cfg, rng);
        cur = e.end;
        out.push(e);
    }
    Ok(out)
}

/// Stationary height density of a UAV under the model.
///
/// Zero outside the open interval `(h_min, h_max)`.
pub fn steady_height_pdf(x: f64, h_min: f64, h_max: f64) -> f64 {
    if !(x > h_min && x < h_max) {
        return 0.0;
    }
    let w = h_max - h_min;
    6.0 / (w * w * w) * (h_min * x + h_max * x - h_min * h_max - x * x)
}

/// Triangular density of the height change over one epoch.
pub fn height_diff_pdf(p: f64, h_min: f64, h_max: f64) -> f64 {
    let w = h_max - h_min;
    if !(p.abs() < w) {
        return 0.0;
    }
    (w - p.abs()) / (w * w)
}

/// Rayleigh density of the horizontal hop length.
pub fn hop_length_pdf(rho: f64, mu: f64) -> f64 {
    if rho < 0.0 {
        return 0.0;
    }
    2.0 * PI * mu * rho * (-PI * mu * rho * rho).exp()
}

/// UAV state at one sampling instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSample {
    pub time: f64,
    pub position: Point2,
    pub height: f64,
    /// Index of the epoch (within the trace slice) the sample falls in.
    pub epoch: usize,
}

/// Sample a trace every `dt` seconds at constant `speed`.
///
/// Sample times are `k dt` measured from the start of the first epoch, so the
/// left-over time of one epoch carries into the next. A waypoint reached
/// exactly at a sampling instant belongs to the later epoch. With zero speed
/// only the starting point is produced.
pub fn time_samples(trace: &[TraceEpoch], speed: f64, dt: f64) -> TimeSamples<'_> {
    TimeSamples { trace, speed, dt, k: 0, epoch: 0, epoch_start: 0.0, done: trace.is_empty() }
}

pub struct TimeSamples<'a> {
    trace: &'a [TraceEpoch],
    speed: f64,
    dt: f64,
    k: u64,
    epoch: usize,
    epoch_start: f64,
    done: bool,
}

impl Iterator for TimeSamples<'_> {
    type Item = TimeSample;

    fn next(&mut self) -> Option<TimeSample> {
        if self.done {
            return None;
        }
        if self.speed == 0.0 {
            self.done = true;
            let s = self.trace[0].start;
            return Some(TimeSample { time: 0.0, position: s.position, height: s.height, epoch: 0 });
        }
        let t = self.k as f64 * self.dt;
        loop {
            let e = &self.trace[self.epoch];
            let d = e.duration(self.speed);
            if t < self.epoch_start + d {
                let f = if d > 0.0 { (t - self.epoch_start) / d } else { 0.0 };
                let (position, height) = e.at(f);
                self.k += 1;
                return Some(TimeSample { time: t, position, height, epoch: self.epoch });
            }
            self.epoch_start += d;
            self.epoch += 1;
            if self.epoch == self.trace.len() {
                self.done = true;
                return None;
            }
        }
    }
}

/// Trace CSV: `epoch,start_x,start_y,start_h,end_x,end_y,end_h,rho_m,phi_rad,psi_rad`.
pub fn write_trace_csv<W: Write>(trace: &[TraceEpoch], mut w: W) -> std::io::Result<()> {
    writeln!(w, "epoch,start_x,start_y,start_h,end_x,end_y,end_h,rho_m,phi_rad,psi_rad")?;
    for e in trace {
        writeln!(
            w,
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.9},{:.9}",
            e.start.epoch,
            e.start.position.x,
            e.start.position.y,
            e.start.height,
            e.end.position.x,
            e.end.position.y,
            e.end.height,
            e.rho,
            e.phi,
            e.psi
        )?;
    }
    Ok(())
}
