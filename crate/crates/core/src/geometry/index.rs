//! Uniform-grid spatial index for k-nearest and fixed-radius queries.

use super::Point2;

/// Bucket grid over a static point set.
#[derive(Debug, Clone)]
pub struct GridIndex {
    x0: f64,
    y0: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    starts: Vec<u32>,
    items: Vec<u32>,
    pts: Vec<Point2>,
}

impl GridIndex {
    /// Build with roughly `per_cell` points per bucket.
    pub fn new(pts: &[Point2], per_cell: f64) -> Self {
        let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for p in pts {
            x0 = x0.min(p.x);
            y0 = y0.min(p.y);
            x1 = x1.max(p.x);
            y1 = y1.max(p.y);
        }
        if pts.is_empty() {
            (x0, y0, x1, y1) = (0.0, 0.0, 1.0, 1.0);
        }
        let w = (x1 - x0).max(1e-9);
        let h = (y1 - y0).max(1e-9);
        let n = pts.len().max(1) as f64;
        let mut cell = (w * h * per_cell / n).sqrt();
        if !(cell > 0.0) {
            cell = w.max(h);
        }
        let nx = ((w / cell).floor() as usize + 1).min(1 << 14);
        let ny = ((h / cell).floor() as usize + 1).min(1 << 14);
        let cell = cell.max(w / nx as f64).max(h / ny as f64);
        let mut counts = vec![0u32; nx * ny + 1];
        let key = |p: &Point2| -> usize {
            let ix = (((p.x - x0) / cell) as usize).min(nx - 1);
            let iy = (((p.y - y0) / cell) as usize).min(ny - 1);
            iy * nx + ix
        };
        for p in pts {
            counts[key(p) + 1] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; pts.len()];
        for (i, p) in pts.iter().enumerate() {
            let k = key(p);
            items[fill[k] as usize] = i as u32;
            fill[k] += 1;
        }
        GridIndex { x0, y0, cell, nx, ny, starts: counts, items, pts: pts.to_vec() }
    }

    pub fn len(&self) -> usize {
        self.pts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pts.is_empty()
    }

    pub fn point(&self, i: usize) -> Point2 {
        self.pts[i]
    }

    fn cell_of(&self, p: Point2) -> (isize, isize) {
        let ix = ((p.x - self.x0) / self.cell).floor() as isize;
        let iy = ((p.y - self.y0) / self.cell).floor() as isize;
        (ix.clamp(0, self.nx as isize - 1), iy.clamp(0, self.ny as isize - 1))
    }

    #[inline]
    fn bucket(&self, ix: isize, iy: isize) -> &[u32] {
        let k = iy as usize * self.nx + ix as usize;
        &self.items[self.starts[k] as usize..self.starts[k + 1] as usize]
    }

    /// The `k` nearest points as `(index, distance)`, by increasing distance; ties by index.
    pub fn nearest_k(&self, p: Point2, k: usize) -> Vec<(usize, f64)> {
        let k = k.min(self.pts.len());
        let mut best: Vec<(f64, u32)> = Vec::with_capacity(k + 1);
        if k == 0 {
            return Vec::new();
        }
        // projecting onto the grid box never increases distances to the points
        let q = Point2::new(
            p.x.clamp(self.x0, self.x0 + self.cell * self.nx as f64),
            p.y.clamp(self.y0, self.y0 + self.cell * self.ny as f64),
        );
        let (cx, cy) = self.cell_of(q);
        let max_ring = self.nx.max(self.ny) as isize;
        let worse = |a: (f64, u32), b: (f64, u32)| a.0 > b.0 || (a.0 == b.0 && a.1 > b.1);
        for r in 0..=max_ring {
            if best.len() == k {
                let bound = (r - 1).max(0) as f64 * self.cell;
                if bound * bound > best[k - 1].0 {
                    break;
                }
            }
            let (xlo, xhi, ylo, yhi) = (cx - r, cx + r, cy - r, cy + r);
            for iy in ylo.max(0)..=yhi.min(self.ny as isize - 1) {
                let edge_row = iy == ylo || iy == yhi;
                let mut ix = xlo.max(0);
                while ix <= xhi.min(self.nx as isize - 1) {
                    if !edge_row && ix != xlo && ix != xhi {
                        // interior of the ring was visited already
                        ix = xhi;
                        continue;
                    }
                    for &i in self.bucket(ix, iy) {
                        let d2 = p.dist2(self.pts[i as usize]);
                        let cand = (d2, i);
                        if best.len() < k || worse(best[best.len() - 1], cand) {
                            let pos = best.partition_point(|&b| !worse(b, cand));
                            best.insert(pos, cand);
                            best.truncate(k);
                        }
                    }
                    ix += 1;
                }
            }
        }
        best.into_iter().map(|(d2, i)| (i as usize, d2.sqrt())).collect()
    }

    /// Visit every point within `radius` of `p` (unordered).
    pub fn for_each_within(&self, p: Point2, radius: f64, mut f: impl FnMut(usize, f64)) {
        let r2 = radius * radius;
        let ixlo = ((p.x - radius - self.x0) / self.cell).floor().max(0.0) as isize;
        let iylo = ((p.y - radius - self.y0) / self.cell).floor().max(0.0) as isize;
        let ixhi = (((p.x + radius - self.x0) / self.cell).floor() as isize).min(self.nx as isize - 1);
        let iyhi = (((p.y + radius - self.y0) / self.cell).floor() as isize).min(self.ny as isize - 1);
        for iy in iylo..=iyhi {
            for ix in ixlo..=ixhi {
                for &i in self.bucket(ix, iy) {
                    let d2 = p.dist2(self.pts[i as usize]);
                    if d2 <= r2 {
                        f(i as usize, d2);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn brute(pts: &[Point2], p: Point2, k: usize) -> Vec<usize> {
        let mut v: Vec<(f64, usize)> = pts.iter().enumerate().map(|(i, q)| (p.dist2(*q), i)).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v.into_iter().take(k).map(|x| x.1).collect()
    }

    #[test]
    fn knn_matches_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Point2> =
            (0..500).map(|_| Point2::new(rng.random::<f64>() * 100.0, rng.random::<f64>() * 50.0)).collect();
        let idx = GridIndex::new(&pts, 2.0);
        for _ in 0..300 {
            let p = Point2::new(rng.random::<f64>() * 160.0 - 30.0, rng.random::<f64>() * 90.0 - 20.0);
            let got: Vec<usize> = idx.nearest_k(p, 5).into_iter().map(|x| x.0).collect();
            assert_eq!(got, brute(&pts, p, 5));
        }
    }

    #[test]
    fn ties_go_to_lower_index() {
        let pts = vec![Point2::new(1.0, 0.0), Point2::new(-1.0, 0.0), Point2::new(0.0, 5.0)];
        let idx = GridIndex::new(&pts, 1.0);
        let got = idx.nearest_k(Point2::new(0.0, 0.0), 2);
        assert_eq!(got[0].0, 0);
        assert_eq!(got[1].0, 1);
    }

    #[test]
    fn radius_query_counts() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let pts: Vec<Point2> =
            (0..400).map(|_| Point2::new(rng.random::<f64>() * 10.0, rng.random::<f64>() * 10.0)).collect();
        let idx = GridIndex::new(&pts, 1.5);
        let p = Point2::new(4.0, 6.0);
        let mut n = 0;
        idx.for_each_within(p, 2.5, |_, _| n += 1);
        let want = pts.iter().filter(|q| q.dist(p) <= 2.5).count();
        assert_eq!(n, want);
    }
}
