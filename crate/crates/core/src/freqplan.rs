//! Circle-packing frequency planning: the interference radius that meets a
//! spectral-efficiency target, hexagonal packings and coverings, band
//! assignment per circle and the overlap weights between co-channel cells.

use crate::analytics::{mean_interference, moment_m1_alpha, AnalysisConfig};
use crate::error::{Error, Result};
use crate::geometry::{BsLayout, GridIndex, Point2, Rect, Triangulation};
use num_rational::Ratio;
use std::f64::consts::PI;
use std::io::Write;

pub type Frac = Ratio<i64>;

/// Radius at which the mean-SIR spectral efficiency equals `r_th`, using
/// the first moment of the serving path gains at height `h_bar`.
pub fn epsilon_star(cfg: &AnalysisConfig, r_th: f64, h_bar: f64) -> Result<f64> {
    let m1 = moment_m1_alpha(cfg, h_bar, false)?;
    epsilon_star_with_moment(cfg, r_th, h_bar, m1)
}

/// As [`epsilon_star`] with a given moment `E[Σ d_i^-α]`.
pub fn epsilon_star_with_moment(cfg: &AnalysisConfig, r_th: f64, h_bar: f64, moment: f64) -> Result<f64> {
    let a = cfg.alpha;
    if !(a > 2.0) {
        return Err(Error::Domain(format!("alpha must exceed 2, got {a}")));
    }
    if !(r_th > 0.0) || !r_th.is_finite() {
        return Err(Error::Domain(format!("spectral efficiency threshold must be positive, got {r_th}")));
    }
    let f = &cfg.fading;
    let base = 3.0 * f.m1 * f.omega1 * (a - 2.0) * moment / (2.0 * cfg.lambda * PI * f.mean_interference_gain() * r_th.exp_m1());
    let rad = base.powf(2.0 / (2.0 - a)) - h_bar * h_bar;
    if !(rad > 0.0) || !rad.is_finite() {
        return Err(Error::Infeasible(format!(
            "no positive interference radius solves the rate target {r_th} nat/s/Hz at height {h_bar} m (radicand {rad:.4e})"
        )));
    }
    Ok(rad.sqrt())
}

/// `ln(1 + 3 m1 Ω1 M / E[Y_ε])`, the quantity the interference radius equates to the target.
pub fn mean_sir_rate(cfg: &AnalysisConfig, epsilon: f64, h_bar: f64, moment: f64) -> Result<f64> {
    let y = mean_interference(epsilon, cfg, h_bar)?;
    Ok((3.0 * cfg.fading.m1 * cfg.fading.omega1 * moment / y).ln_1p())
}

/// Integer reuse factor `floor(2 λ π ε²)`.
pub fn reuse_factor(lambda: f64, epsilon: f64) -> u64 {
    let v = 2.0 * lambda * PI * epsilon * epsilon;
    if v.is_finite() && v > 0.0 {
        v.floor() as u64
    } else {
        0
    }
}

/// Region to be packed or covered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    Disc { center: Point2, radius: f64 },
    Rect(Rect),
}

impl Region {
    pub fn unit_disc() -> Self {
        Region::Disc { center: Point2::new(0.0, 0.0), radius: 1.0 }
    }

    pub fn area(&self) -> f64 {
        match self {
            Region::Disc { radius, .. } => PI * radius * radius,
            Region::Rect(r) => r.area(),
        }
    }

    /// Area of the Minkowski sum with a disc of radius `r`.
    pub fn inflated_area(&self, r: f64) -> f64 {
        match self {
            Region::Disc { radius, .. } => PI * (radius + r) * (radius + r),
            Region::Rect(w) => w.area() + 2.0 * r * (w.width() + w.height()) + PI * r * r,
        }
    }

    pub fn center(&self) -> Point2 {
        match self {
            Region::Disc { center, .. } => *center,
            Region::Rect(r) => r.center(),
        }
    }

    /// Distance from `p` to the region, zero inside.
    pub fn distance(&self, p: Point2) -> f64 {
        match self {
            Region::Disc { center, radius } => (p.dist(*center) - radius).max(0.0),
            Region::Rect(r) => {
                let dx = (r.x0 - p.x).max(p.x - r.x1).max(0.0);
                let dy = (r.y0 - p.y).max(p.y - r.y1).max(0.0);
                dx.hypot(dy)
            }
        }
    }

    fn bounding_radius(&self) -> f64 {
        match self {
            Region::Disc { radius, .. } => *radius,
            Region::Rect(r) => 0.5 * r.width().hypot(r.height()),
        }
    }

    /// Interior grid points at spacing `h` plus points along the boundary.
    fn samples(&self, h: f64) -> Vec<Point2> {
        let mut out = Vec::new();
        match self {
            Region::Disc { center, radius } => {
                let n = (radius / h).ceil() as i64;
                for i in -n..=n {
                    for j in -n..=n {
                        let p = Point2::new(center.x + i as f64 * h, center.y + j as f64 * h);
                        if p.dist(*center) <= *radius {
                            out.push(p);
                        }
                    }
                }
                let m = ((2.0 * PI * radius / h).ceil() as usize).max(64);
                for k in 0..m {
                    let th = 2.0 * PI * k as f64 / m as f64;
                    out.push(Point2::new(center.x + radius * th.cos(), center.y + radius * th.sin()));
                }
            }
            Region::Rect(r) => {
                let nx = (r.width() / h).ceil().max(1.0) as usize;
                let ny = (r.height() / h).ceil().max(1.0) as usize;
                for i in 0..=nx {
                    for j in 0..=ny {
                        out.push(Point2::new(r.x0 + r.width() * i as f64 / nx as f64, r.y0 + r.height() * j as f64 / ny as f64));
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlanMode {
    HexPack,
    SeamlessCover,
}

impl PlanMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            PlanMode::HexPack => "hex_pack",
            PlanMode::SeamlessCover => "seamless_cover",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CirclePlan {
    pub radius: f64,
    pub centers: Vec<Point2>,
    pub mode: PlanMode,
}

/// Evidence that a covering plan reaches every sample of the region.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverCertificate {
    pub samples: usize,
    /// Largest distance from a sample to its nearest center.
    pub max_gap: f64,
    pub bounds: CoverBounds,
}

impl CoverCertificate {
    pub fn holds(&self, radius: f64) -> bool {
        self.max_gap <= radius * (1.0 + 1e-9)
    }
}

/// Lattice points `a u + b v` around `origin` with `|p - origin| <= reach`.
fn lattice(origin: Point2, spacing: f64, reach: f64) -> Vec<Point2> {
    let n = (reach / (spacing * 0.5f64.sqrt() * 0.9)).ceil() as i64 + 2;
    let (vx, vy) = (0.5 * spacing, 0.5 * 3f64.sqrt() * spacing);
    let mut pts = Vec::new();
    for b in -n..=n {
        for a in -n..=n {
            let p = Point2::new(origin.x + a as f64 * spacing + b as f64 * vx, origin.y + b as f64 * vy);
            if p.dist(origin) <= reach {
                pts.push(p);
            }
        }
    }
    // rings outward, counter-clockwise from the positive x axis
    pts.sort_by(|p, q| {
        let dp = p.dist2(origin);
        let dq = q.dist2(origin);
        let ap = (p.y - origin.y).atan2(p.x - origin.x);
        let aq = (q.y - origin.y).atan2(q.x - origin.x);
        let tol = 1e-9 * spacing * spacing;
        if (dp - dq).abs() > tol {
            dp.total_cmp(&dq)
        } else {
            ap.total_cmp(&aq)
        }
    });
    pts
}

/// Hexagonal packing with neighbour spacing `2ε`, anchored at the region
/// centre; keeps every circle that overlaps the region.
pub fn pack_circles(region: &Region, epsilon: f64) -> Result<CirclePlan> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Domain(format!("circle radius must be positive, got {epsilon}")));
    }
    let tol = 1e-9 * epsilon;
    let centers = lattice(region.center(), 2.0 * epsilon, region.bounding_radius() + epsilon)
        .into_iter()
        .filter(|p| region.distance(*p) < epsilon - tol)
        .collect();
    Ok(CirclePlan { radius: epsilon, centers, mode: PlanMode::HexPack })
}

/// Covering of the region by circles of radius `ε`: the hexagonal covering
/// lattice (spacing `√3 ε`) cut to the overlapping circles, then greedy
/// removal of circles whose samples stay covered, outermost first.
pub fn seamless_cover(region: &Region, epsilon: f64) -> Result<(CirclePlan, CoverCertificate)> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Domain(format!("circle radius must be positive, got {epsilon}")));
    }
    let tol = 1e-9 * epsilon;
    let cand: Vec<Point2> = lattice(region.center(), 3f64.sqrt() * epsilon, region.bounding_radius() + epsilon)
        .into_iter()
        .filter(|p| region.distance(*p) < epsilon - tol)
        .collect();
    let h = (epsilon / 12.0).min(region.bounding_radius() / 8.0).max(1e-12);
    let samples = region.samples(h);
    let reach = epsilon + tol;
    let idx = GridIndex::new(&samples, 4.0);
    let mut covers: Vec<Vec<u32>> = Vec::with_capacity(cand.len());
    let mut count = vec![0u32; samples.len()];
    for c in &cand {
        let mut v = Vec::new();
        idx.for_each_within(*c, reach, |i, _| v.push(i as u32));
        for &i in &v {
            count[i as usize] += 1;
        }
        covers.push(v);
    }
    if count.iter().any(|&c| c == 0) {
        return Err(Error::Geometry("covering lattice leaves a sample uncovered".into()));
    }
    let mut keep = vec![true; cand.len()];
    for k in (0..cand.len()).rev() {
        if covers[k].iter().all(|&i| count[i as usize] >= 2) {
            keep[k] = false;
            for &i in &covers[k] {
                count[i as usize] -= 1;
            }
        }
    }
    let centers: Vec<Point2> = cand.iter().zip(&keep).filter(|(_, k)| **k).map(|(c, _)| *c).collect();
    let cidx = GridIndex::new(&centers, 2.0);
    let max_gap = samples.iter().map(|s| cidx.nearest_k(*s, 1)[0].1).fold(0.0, f64::max);
    let bounds = cover_count_bounds(region.area(), region.inflated_area(0.5 * epsilon), epsilon)?;
    let cert = CoverCertificate { samples: samples.len(), max_gap, bounds };
    Ok((CirclePlan { radius: epsilon, centers, mode: PlanMode::SeamlessCover }, cert))
}

/// Lower and upper bounds on the number of radius-`ε` circles covering a region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverBounds {
    /// `|K| / |C(0, ε)|`.
    pub lower_raw: f64,
    pub lower: u64,
    /// `|K ⊕ C(0, ε/2)| / |C(0, ε/2)|`.
    pub upper: f64,
}

pub fn cover_count_bounds(region_area: f64, inflated_area: f64, epsilon: f64) -> Result<CoverBounds> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("circle radius must be positive, got {epsilon}")));
    }
    let lower_raw = region_area / (PI * epsilon * epsilon);
    // guard the ceiling against rounding just above an integer
    let lower = (lower_raw * (1.0 - 1e-12)).ceil().max(0.0) as u64;
    let upper = inflated_area / (PI * 0.25 * epsilon * epsilon);
    Ok(CoverBounds { lower_raw, lower, upper })
}

/// Half-open band `[lo, hi)` of the normalised spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Band {
    pub lo: Frac,
    pub hi: Frac,
}

impl Band {
    pub fn width(&self) -> Frac {
        self.hi - self.lo
    }

    pub fn overlap(&self, o: &Band) -> Frac {
        let lo = self.lo.max(o.lo);
        let hi = self.hi.min(o.hi);
        if hi > lo {
            hi - lo
        } else {
            Frac::from_integer(0)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyPlan {
    /// Band of each triangle, by triangle id.
    pub cell_bands: Vec<Band>,
    pub circle_of_cell: Vec<usize>,
    pub cells_per_circle: Vec<usize>,
    /// Triangle ids of each circle, ascending.
    pub members: Vec<Vec<usize>>,
    /// Site ids of each triangle.
    pub cell_sites: Vec<[usize; 3]>,
    /// Cells whose centroid fell in no circle and went to the nearest one.
    pub fallback_cells: Vec<usize>,
}

/// Give every triangle of the tessellation a band: cells join the
/// lowest-index circle containing their centroid, and each circle splits
/// `[0,1)` evenly among its cells in ascending id order.
pub fn assign_bands(tri: &Triangulation, plan: &CirclePlan) -> Result<FrequencyPlan> {
    if plan.centers.is_empty() {
        return Err(Error::Request("circle plan has no circles".into()));
    }
    let idx = GridIndex::new(&plan.centers, 2.0);
    let r = plan.radius;
    let mut circle_of_cell = Vec::with_capacity(tri.len());
    let mut fallback_cells = Vec::new();
    for t in 0..tri.len() {
        let c = tri.centroid(t);
        let mut best: Option<usize> = None;
        idx.for_each_within(c, r, |i, _| {
            if best.is_none_or(|b| i < b) {
                best = Some(i);
            }
        });
        let i = match best {
            Some(i) => i,
            None => {
                fallback_cells.push(t);
                idx.nearest_k(c, 1)[0].0
            }
        };
        circle_of_cell.push(i);
    }
    let mut members = vec![Vec::new(); plan.centers.len()];
    for (t, &c) in circle_of_cell.iter().enumerate() {
        members[c].push(t);
    }
    let zero = Frac::from_integer(0);
    let mut cell_bands = vec![Band { lo: zero, hi: zero }; tri.len()];
    for m in &members {
        let k = m.len() as i64;
        for (j, &t) in m.iter().enumerate() {
            cell_bands[t] = Band { lo: Frac::new(j as i64, k), hi: Frac::new(j as i64 + 1, k) };
        }
    }
    Ok(FrequencyPlan {
        cell_bands,
        circle_of_cell,
        cells_per_circle: members.iter().map(|m| m.len()).collect(),
        members,
        cell_sites: tri.triangles.clone(),
        fallback_cells,
    })
}

/// Cells of other circles sharing spectrum with `cell`, weighted by the
/// overlap as a fraction of the cell's own band.
pub fn overlap_weights(plan: &FrequencyPlan, cell: usize) -> Result<Vec<(usize, Frac)>> {
    let own = *plan.cell_bands.get(cell).ok_or_else(|| Error::Request(format!("unknown cell {cell}")))?;
    let own_circle = plan.circle_of_cell[cell];
    let w = own.width();
    let mut out = Vec::new();
    for (c, m) in plan.members.iter().enumerate() {
        if c == own_circle || m.is_empty() {
            continue;
        }
        let k = m.len() as i64;
        // bands of circle c are [j/k, (j+1)/k); only a short run can overlap
        let first = (own.lo * k).floor().to_integer().max(0) as usize;
        let last = ((own.hi * k).ceil().to_integer() as usize).min(m.len());
        for j in first..last {
            let t = m[j];
            let o = own.overlap(&plan.cell_bands[t]);
            if o > Frac::from_integer(0) {
                out.push((t, o / w));
            }
        }
    }
    out.sort_by_key(|x| x.0);
    Ok(out)
}

/// Mask over sites: true for the BSs of co-channel cells outside the
/// serving cell.
pub fn thin_interferers(layout: &BsLayout, plan: &FrequencyPlan, cell: usize) -> Result<Vec<bool>> {
    let mut active = vec![false; layout.len()];
    for (t, _) in overlap_weights(plan, cell)? {
        for &s in &plan.cell_sites[t] {
            active[s] = true;
        }
    }
    for &s in &plan.cell_sites[cell] {
        active[s] = false;
    }
    Ok(active)
}

/// Plan CSV: `cell_id,circle_id,band_lo_num,band_lo_den,band_hi_num,band_hi_den`.
pub fn write_plan_csv<W: Write>(plan: &FrequencyPlan, mut w: W) -> std::io::Result<()> {
    writeln!(w, "cell_id,circle_id,band_lo_num,band_lo_den,band_hi_num,band_hi_den")?;
    for (t, b) in plan.cell_bands.iter().enumerate() {
        writeln!(w, "{},{},{},{},{},{}", t, plan.circle_of_cell[t], b.lo.numer(), b.lo.denom(), b.hi.numer(), b.hi.denom())?;
    }
    Ok(())
}

/// One row of the filling-circle table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountRow {
    pub epsilon: f64,
    pub upper: f64,
    pub seamless: usize,
    pub lattice: usize,
    pub lower: f64,
}

/// Circle counts and bounds for the unit disc at each radius.
pub fn unit_disc_table(eps: &[f64]) -> Result<Vec<CountRow>> {
    let region = Region::unit_disc();
    eps.iter()
        .map(|&e| {
            let (cover, cert) = seamless_cover(&region, e)?;
            if !cert.holds(e) {
                return Err(Error::Geometry(format!("covering at radius {e} leaves a gap of {}", cert.max_gap)));
            }
            let pack = pack_circles(&region, e)?;
            Ok(CountRow { epsilon: e, upper: cert.bounds.upper, seamless: cover.centers.len(), lattice: pack.centers.len(), lower: cert.bounds.lower_raw })
        })
        .collect()
}

/// Table CSV: `epsilon,upper,seamless,lattice,lower`.
pub fn write_count_table_csv<W: Write>(rows: &[CountRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "epsilon,upper,seamless,lattice,lower")?;
    for r in rows {
        writeln!(w, "{},{:.1},{},{},{:.1}", r.epsilon, r.upper, r.seamless, r.lattice, r.lower)?;
    }
    Ok(())
}
