//! Base-station layouts, their Delaunay triangulation and CoMP set selection.

mod delaunay;
pub mod index;
pub mod predicates;

use crate::error::{Error, Result};
use crate::rng::SimRng;
use rand::Rng;
use rand::SeedableRng;
use rand_distr::{Distribution, Poisson};
use std::collections::HashMap;
use std::io::Write;

pub use delaunay::EdgeTris;
pub use index::GridIndex;

/// Planar point, metres.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    #[inline]
    pub fn dist2(self, o: Point2) -> f64 {
        let dx = self.x - o.x;
        let dy = self.y - o.y;
        dx * dx + dy * dy
    }

    #[inline]
    pub fn dist(self, o: Point2) -> f64 {
        self.dist2(o).sqrt()
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn scale(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl std::ops::Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    /// Square of side `side` centred at the origin.
    pub fn centered(side: f64) -> Self {
        Rect::new(-side / 2.0, -side / 2.0, side / 2.0, side / 2.0)
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn expand(&self, g: f64) -> Rect {
        Rect::new(self.x0 - g, self.y0 - g, self.x1 + g, self.y1 + g)
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }

    pub fn center(&self) -> Point2 {
        Point2::new((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)
    }

    fn is_valid(&self) -> bool {
        [self.x0, self.y0, self.x1, self.y1].iter().all(|v| v.is_finite()) && self.x1 > self.x0 && self.y1 > self.y0
    }
}

/// Finite-window realisation of a homogeneous Poisson base-station process.
#[derive(Debug, Clone)]
pub struct BsLayout {
    /// Observation window; statistics are only collected here.
    pub window: Rect,
    /// Guard band added on every side of the window when sampling.
    pub guard: f64,
    /// Intensity, base stations per square metre.
    pub intensity: f64,
    /// Site `i` has id `i`.
    pub sites: Vec<Point2>,
    /// Antenna height of every base station, metres.
    pub bs_height: f64,
    index: GridIndex,
}

/// Base-station antenna height used unless configured otherwise, metres.
pub const DEFAULT_BS_HEIGHT: f64 = 25.0;

/// Default guard band, five mean nearest-neighbour distances.
pub fn default_guard(intensity: f64) -> f64 {
    5.0 / intensity.sqrt()
}

impl BsLayout {
    /// Wrap explicit sites (used by tests and by CSV round trips).
    pub fn from_sites(sites: Vec<Point2>, window: Rect, guard: f64, intensity: f64) -> Result<Self> {
        if !(intensity > 0.0) || !intensity.is_finite() {
            return Err(Error::Config(format!("intensity must be positive, got {intensity}")));
        }
        if !window.is_valid() {
            return Err(Error::Config("degenerate window".into()));
        }
        if !(guard >= 0.0) {
            return Err(Error::Config(format!("guard must be non-negative, got {guard}")));
        }
        if sites.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::Config("non-finite site coordinate".into()));
        }
        let index = GridIndex::new(&sites, 2.0);
        Ok(BsLayout { window, guard, intensity, sites, bs_height: DEFAULT_BS_HEIGHT, index })
    }

    /// Sampling region: window expanded by the guard band.
    pub fn region(&self) -> Rect {
        self.window.expand(self.guard)
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn index(&self) -> &GridIndex {
        &self.index
    }

    /// The `k` nearest sites to `p` by horizontal distance; exact ties go to the lower id.
    pub fn nearest_k(&self, p: Point2, k: usize) -> Result<Vec<(usize, f64)>> {
        if k > self.sites.len() {
            return Err(Error::Request(format!("asked for {k} neighbours of {} sites", self.sites.len())));
        }
        Ok(self.index.nearest_k(p, k))
    }
}

/// Sample a Poisson layout over `window` expanded by `guard`.
pub fn sample_ppp(intensity: f64, window: Rect, guard: f64, seed: u64) -> Result<BsLayout> {
    let mut rng = SimRng::seed_from_u64(seed);
    sample_ppp_with(intensity, window, guard, &mut rng)
}

/// As [`sample_ppp`], drawing from a caller-supplied stream.
pub fn sample_ppp_with<R: Rng + ?Sized>(intensity: f64, window: Rect, guard: f64, rng: &mut R) -> Result<BsLayout> {
    if !(intensity > 0.0) || !intensity.is_finite() {
        return Err(Error::Config(format!("intensity must be positive, got {intensity}")));
    }
    if !window.is_valid() {
        return Err(Error::Config("degenerate window".into()));
    }
    if !(guard >= 0.0) || !guard.is_finite() {
        return Err(Error::Config(format!("guard must be non-negative, got {guard}")));
    }
    let region = window.expand(guard);
    let mean = intensity * region.area();
    let n = if mean > 0.0 {
        Poisson::new(mean).map_err(|e| Error::Config(e.to_string()))?.sample(rng) as usize
    } else {
        0
    };
    let sites = (0..n)
        .map(|_| {
            Point2::new(
                region.x0 + rng.random::<f64>() * region.width(),
                region.y0 + rng.random::<f64>() * region.height(),
            )
        })
        .collect();
    BsLayout::from_sites(sites, window, guard, intensity)
}

/// Delaunay triangulation with adjacency and circumcircles.
#[derive(Debug, Clone)]
pub struct Triangulation {
    /// Counter-clockwise site ids, smallest id first.
    pub triangles: Vec<[usize; 3]>,
    /// `neighbors[t][i]` lies across the edge opposite vertex `i`.
    pub neighbors: Vec<[Option<usize>; 3]>,
    pub circumcenters: Vec<Point2>,
    pub circumradii: Vec<f64>,
    edges: HashMap<(u32, u32), EdgeTris>,
    incident: Vec<u32>,
    sites: Vec<Point2>,
}

/// Circumcentre of a triangle, computed relative to its first vertex.
pub fn circumcenter(a: Point2, b: Point2, c: Point2) -> Point2 {
    let bx = b.x - a.x;
    let by = b.y - a.y;
    let cx = c.x - a.x;
    let cy = c.y - a.y;
    let d = 2.0 * (bx * cy - by * cx);
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    Point2::new(a.x + (cy * b2 - by * c2) / d, a.y + (bx * c2 - cx * b2) / d)
}

/// Triangulate the layout's sites.
pub fn build_delaunay(layout: &BsLayout) -> Result<Triangulation> {
    Triangulation::from_points(&layout.sites)
}

impl Triangulation {
    pub fn from_points(sites: &[Point2]) -> Result<Self> {
        let raw = delaunay::triangulate(sites)?;
        let (nb, edges) = delaunay::adjacency(&raw);
        let mut incident = vec![u32::MAX; sites.len()];
        let mut centers = Vec::with_capacity(raw.len());
        let mut radii = Vec::with_capacity(raw.len());
        for (t, v) in raw.iter().enumerate() {
            for &i in v {
                if incident[i as usize] == u32::MAX {
                    incident[i as usize] = t as u32;
                }
            }
            let (a, b, c) = (sites[v[0] as usize], sites[v[1] as usize], sites[v[2] as usize]);
            let cc = circumcenter(a, b, c);
            centers.push(cc);
            radii.push(cc.dist(a));
        }
        Ok(Triangulation {
            triangles: raw.iter().map(|v| [v[0] as usize, v[1] as usize, v[2] as usize]).collect(),
            neighbors: nb.iter().map(|n| [n[0].map(|x| x as usize), n[1].map(|x| x as usize), n[2].map(|x| x as usize)]).collect(),
            circumcenters: centers,
            circumradii: radii,
            edges,
            incident,
            sites: sites.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn site(&self, i: usize) -> Point2 {
        self.sites[i]
    }

    /// Centroid of triangle `t`.
    pub fn centroid(&self, t: usize) -> Point2 {
        let [a, b, c] = self.triangles[t];
        let (a, b, c) = (self.sites[a], self.sites[b], self.sites[c]);
        Point2::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0)
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Triangles on the undirected edge `a b`, or `None` if it is not a Delaunay edge.
    pub fn edge(&self, a: usize, b: usize) -> Option<&EdgeTris> {
        let key = (a.min(b) as u32, a.max(b) as u32);
        self.edges.get(&key)
    }

    /// Number of distinct edges, and how many of them are shared by two triangles.
    pub fn edge_counts(&self) -> (usize, usize) {
        let interior = self.edges.values().filter(|e| e.len == 2).count();
        (self.edges.len(), interior)
    }

    /// Some triangle incident to site `v`.
    pub fn incident_triangle(&self, v: usize) -> Option<usize> {
        self.incident.get(v).copied().filter(|&t| t != u32::MAX).map(|t| t as usize)
    }

    /// Triangle containing `p` (closed), walking from a triangle near `start_site`.
    pub fn locate_from(&self, p: Point2, start_site: usize) -> Result<usize> {
        let mut t = self.incident_triangle(start_site).unwrap_or(0);
        let mut rot = 0;
        for _ in 0..(4 * self.triangles.len() + 16) {
            let v = self.triangles[t];
            let mut next = None;
            for k in 0..3 {
                let i = (k + rot) % 3;
                let a = self.sites[v[(i + 1) % 3]];
                let b = self.sites[v[(i + 2) % 3]];
                if predicates::orient(a, b, p) < 0.0 {
                    next = Some(self.neighbors[t][i]);
                    break;
                }
            }
            match next {
                None => return Ok(t),
                Some(Some(n)) => t = n,
                Some(None) => return Err(Error::OutOfRegion { x: p.x, y: p.y }),
            }
            rot = (rot + 1) % 3;
        }
        Err(Error::Geometry("point location did not terminate".into()))
    }

    /// Check the empty-circumcircle property against every site; returns the first violation.
    pub fn find_violation(&self) -> Option<(usize, usize)> {
        for (t, v) in self.triangles.iter().enumerate() {
            let (a, b, c) = (self.sites[v[0]], self.sites[v[1]], self.sites[v[2]]);
            for (i, &p) in self.sites.iter().enumerate() {
                if v.contains(&i) {
                    continue;
                }
                if predicates::incircle(a, b, c, p) > 0.0 {
                    return Some((t, i));
                }
            }
        }
        None
    }
}

/// Serving set of a UAV: the nearest site, the second nearest, and the
/// closer apex of the triangles on their common edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompSet {
    /// `[A, B, C]` in selection order.
    pub members: [usize; 3],
    /// Triangle with vertex set `members`.
    pub triangle: usize,
    /// True when `A B` was not a Delaunay edge and the containing triangle was used.
    pub fallback: bool,
}

impl CompSet {
    pub fn sorted_members(&self) -> [usize; 3] {
        let mut m = self.members;
        m.sort_unstable();
        m
    }
}

/// Select the CoMP set serving a UAV whose projection is `p`.
pub fn select_comp_set(tri: &Triangulation, layout: &BsLayout, p: Point2) -> Result<CompSet> {
    let nn = layout.nearest_k(p, 2)?;
    let (a, b) = (nn[0].0, nn[1].0);
    // region check and fallback candidate in one walk
    let containing = tri.locate_from(p, a)?;
    select_with_neighbors(tri, layout, p, a, b, containing)
}

pub(crate) fn select_with_neighbors(
    tri: &Triangulation,
    layout: &BsLayout,
    p: Point2,
    a: usize,
    b: usize,
    containing: usize,
) -> Result<CompSet> {
    match tri.edge(a, b) {
        Some(e) => {
            let mut best: Option<(f64, usize, usize)> = None;
            for (t, opp) in e.iter() {
                let d = p.dist2(layout.sites[opp]);
                let better = match best {
                    None => true,
                    Some((bd, bo, _)) => d < bd || (d == bd && opp < bo),
                };
                if better {
                    best = Some((d, opp, t));
                }
            }
            let (_, c, t) = best.ok_or_else(|| Error::Geometry("edge without triangles".into()))?;
            Ok(CompSet { members: [a, b, c], triangle: t, fallback: false })
        }
        None => {
            let v = tri.triangles[containing];
            let mut m = v;
            m.sort_by(|&x, &y| p.dist2(layout.sites[x]).total_cmp(&p.dist2(layout.sites[y])).then(x.cmp(&y)));
            Ok(CompSet { members: m, triangle: containing, fallback: true })
        }
    }
}

/// Circumcentres of all triangles, one per triangle.
pub fn circumcenter_process(tri: &Triangulation) -> Vec<Point2> {
    tri.circumcenters.clone()
}

/// Area of the intersection of the disks `c(c1, r)` and `c(c2, big_r)`.
pub fn circle_intersection_area(c1: Point2, r: f64, c2: Point2, big_r: f64) -> Result<f64> {
    if !(r >= 0.0) || !(big_r >= 0.0) {
        return Err(Error::Domain(format!("negative radius ({r}, {big_r})")));
    }
    Ok(lens_area(c1.dist(c2), r, big_r))
}

/// Intersection area of two disks with radii `r`, `big_r` whose centres are `d` apart.
pub fn lens_area(d: f64, r: f64, big_r: f64) -> f64 {
    let (small, large) = if r <= big_r { (r, big_r) } else { (big_r, r) };
    if d >= r + big_r {
        return 0.0;
    }
    if d <= large - small {
        return std::f64::consts::PI * small * small;
    }
    let ca = ((d * d + r * r - big_r * big_r) / (2.0 * d * r)).clamp(-1.0, 1.0);
    let cb = ((d * d + big_r * big_r - r * r) / (2.0 * d * big_r)).clamp(-1.0, 1.0);
    let k = ((-d + r + big_r) * (d + r - big_r) * (d - r + big_r) * (d + r + big_r)).max(0.0);
    let area = r * r * ca.acos() + big_r * big_r * cb.acos() - 0.5 * k.sqrt();
    area.clamp(0.0, std::f64::consts::PI * small * small)
}

/// Write `id,x_m,y_m`.
pub fn write_sites_csv<W: Write>(layout: &BsLayout, mut w: W) -> std::io::Result<()> {
    writeln!(w, "id,x_m,y_m")?;
    for (i, p) in layout.sites.iter().enumerate() {
        writeln!(w, "{},{:.6},{:.6}", i, p.x, p.y)?;
    }
    Ok(())
}

/// Write `t_id,a,b,c,cx_m,cy_m,cr_m`.
pub fn write_triangles_csv<W: Write>(tri: &Triangulation, mut w: W) -> std::io::Result<()> {
    writeln!(w, "t_id,a,b,c,cx_m,cy_m,cr_m")?;
    for (t, v) in tri.triangles.iter().enumerate() {
        let c = tri.circumcenters[t];
        writeln!(w, "{},{},{},{},{:.6},{:.6},{:.6}", t, v[0], v[1], v[2], c.x, c.y, tri.circumradii[t])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_triangle() {
        let pts = vec![Point2::new(0.0, 0.0), Point2::new(4.0, 0.0), Point2::new(0.0, 3.0)];
        let t = Triangulation::from_points(&pts).unwrap();
        assert_eq!(t.len(), 1);
        let c = t.circumcenters[0];
        let r: Vec<f64> = pts.iter().map(|p| p.dist(c)).collect();
        assert!((r[0] - r[1]).abs() < 1e-12 && (r[1] - r[2]).abs() < 1e-12);
        assert!((t.circumradii[0] - 2.5).abs() < 1e-12);
    }

    #[test]
    fn square_gives_two_triangles() {
        let pts = vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(1.0, 1.0), Point2::new(0.0, 1.0)];
        let t = Triangulation::from_points(&pts).unwrap();
        assert_eq!(t.len(), 2);
        assert!(t.find_violation().is_none());
        // reversed insertion order gives the same diagonal
        let rev: Vec<Point2> = pts.iter().rev().copied().collect();
        let t2 = Triangulation::from_points(&rev).unwrap();
        let map = |tri: &Triangulation, pts: &[Point2]| {
            let mut s: Vec<Vec<(i64, i64)>> = tri
                .triangles
                .iter()
                .map(|v| {
                    let mut q: Vec<(i64, i64)> = v.iter().map(|&i| (pts[i].x as i64, pts[i].y as i64)).collect();
                    q.sort();
                    q
                })
                .collect();
            s.sort();
            s
        };
        assert_eq!(map(&t, &pts), map(&t2, &rev));
    }

    #[test]
    fn collinear_rejected() {
        let pts: Vec<Point2> = (0..5).map(|i| Point2::new(i as f64, 2.0 * i as f64)).collect();
        assert!(matches!(Triangulation::from_points(&pts), Err(Error::Geometry(_))));
        assert!(Triangulation::from_points(&pts[..2]).is_err());
    }

    #[test]
    fn lens_area_known_values() {
        let o = Point2::new(0.0, 0.0);
        let a = circle_intersection_area(o, 1.0, Point2::new(1.0, 0.0), 1.0).unwrap();
        let want = 2.0 * std::f64::consts::PI / 3.0 - 3f64.sqrt() / 2.0;
        assert!((a - want).abs() < 1e-12);
        assert_eq!(circle_intersection_area(o, 1.0, Point2::new(2.0, 0.0), 1.0).unwrap(), 0.0);
        let full = circle_intersection_area(o, 2.0, o, 2.0).unwrap();
        assert!((full - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!(circle_intersection_area(o, -1.0, o, 1.0).is_err());
    }

    #[test]
    fn ppp_rejects_bad_input() {
        let w = Rect::centered(1000.0);
        assert!(sample_ppp(0.0, w, 0.0, 1).is_err());
        assert!(sample_ppp(1e-5, Rect::new(0.0, 0.0, 0.0, 1.0), 0.0, 1).is_err());
        assert!(sample_ppp(1e-5, w, -1.0, 1).is_err());
        let a = sample_ppp(2e-5, w, 100.0, 7).unwrap();
        let b = sample_ppp(2e-5, w, 100.0, 7).unwrap();
        assert_eq!(a.sites, b.sites);
    }
}
