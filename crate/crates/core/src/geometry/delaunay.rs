//! Incremental Bowyer-Watson Delaunay triangulation.
//!
//! The convex hull is closed with ghost triangles sharing a vertex at
//! infinity, so every insertion (inside or outside the current hull) is a
//! cavity retriangulation. Points are inserted along a serpentine grid order
//! and located by a visibility walk from the previous insertion.

use super::predicates::{incircle_sos, orient};
use super::Point2;
use crate::error::{Error, Result};
use std::collections::HashMap;

const GHOST: u32 = u32::MAX;
const NIL: u32 = u32::MAX;

#[derive(Clone, Copy, Debug)]
struct Tri {
    v: [u32; 3],
    n: [u32; 3],
    alive: bool,
}

impl Tri {
    #[inline]
    fn is_ghost(&self) -> bool {
        self.v[2] == GHOST
    }
}

struct Builder<'a> {
    pts: &'a [Point2],
    tris: Vec<Tri>,
    free: Vec<u32>,
    last: u32,
    mark: Vec<u32>,
    stamp: u32,
}

/// Rotate so that a ghost vertex (if present) sits in slot 2.
fn canon(v: [u32; 3], n: [u32; 3]) -> ([u32; 3], [u32; 3]) {
    if v[0] == GHOST {
        ([v[1], v[2], v[0]], [n[1], n[2], n[0]])
    } else if v[1] == GHOST {
        ([v[2], v[0], v[1]], [n[2], n[0], n[1]])
    } else {
        (v, n)
    }
}

impl<'a> Builder<'a> {
    fn p(&self, i: u32) -> Point2 {
        self.pts[i as usize]
    }

    fn alloc(&mut self, t: Tri) -> u32 {
        if let Some(i) = self.free.pop() {
            self.tris[i as usize] = t;
            self.mark[i as usize] = 0;
            i
        } else {
            self.tris.push(t);
            self.mark.push(0);
            (self.tris.len() - 1) as u32
        }
    }

    fn conflicts(&self, t: u32, pi: u32) -> bool {
        let tr = &self.tris[t as usize];
        let p = self.p(pi);
        if tr.is_ghost() {
            let o = orient(self.p(tr.v[0]), self.p(tr.v[1]), p);
            if o > 0.0 {
                return true;
            }
            if o < 0.0 {
                return false;
            }
            // collinear with the hull edge: defer to the solid neighbour
            let s = &self.tris[tr.n[2] as usize];
            incircle_sos(self.p(s.v[0]), self.p(s.v[1]), self.p(s.v[2]), p) > 0
        } else {
            incircle_sos(self.p(tr.v[0]), self.p(tr.v[1]), self.p(tr.v[2]), p) > 0
        }
    }

    fn init(&mut self, a: u32, b: u32, c: u32) {
        let (b, c) = if orient(self.p(a), self.p(b), self.p(c)) > 0.0 { (b, c) } else { (c, b) };
        // t0 = (a,b,c); ghosts across each edge, ghost k opposite vertex k of t0
        let t0 = self.alloc(Tri { v: [a, b, c], n: [NIL; 3], alive: true });
        let ga = self.alloc(Tri { v: [c, b, GHOST], n: [NIL; 3], alive: true });
        let gb = self.alloc(Tri { v: [a, c, GHOST], n: [NIL; 3], alive: true });
        let gc = self.alloc(Tri { v: [b, a, GHOST], n: [NIL; 3], alive: true });
        self.tris[t0 as usize].n = [ga, gb, gc];
        // ghost (u,v,G): n[0] is the ghost starting at v, n[1] the ghost ending at u
        self.tris[ga as usize].n = [gc, gb, t0];
        self.tris[gb as usize].n = [ga, gc, t0];
        self.tris[gc as usize].n = [gb, ga, t0];
        self.last = t0;
    }

    fn locate(&self, pi: u32) -> u32 {
        let p = self.p(pi);
        let mut t = self.last;
        let mut rot = 0usize;
        let mut steps = 0usize;
        loop {
            let tr = &self.tris[t as usize];
            if tr.is_ghost() {
                return t;
            }
            let mut moved = false;
            for k in 0..3 {
                let i = (k + rot) % 3;
                let a = tr.v[(i + 1) % 3];
                let b = tr.v[(i + 2) % 3];
                if orient(self.p(a), self.p(b), p) < 0.0 {
                    t = tr.n[i];
                    moved = true;
                    break;
                }
            }
            if !moved {
                return t;
            }
            rot = (rot + 1) % 3;
            steps += 1;
            if steps > 4 * self.tris.len() + 16 {
                // cannot happen on a valid Delaunay triangulation; fall back to a scan
                return (0..self.tris.len() as u32)
                    .find(|&t| self.tris[t as usize].alive && self.conflicts(t, pi))
                    .unwrap_or(self.last);
            }
        }
    }

    fn insert(&mut self, pi: u32) -> Result<()> {
        let seed = self.locate(pi);
        {
            let tr = self.tris[seed as usize];
            for &v in &tr.v {
                if v != GHOST && self.p(v) == self.p(pi) {
                    return Err(Error::Geometry(format!("duplicate site {} coincides with {}", pi, v)));
                }
            }
        }
        let seed = if self.conflicts(seed, pi) {
            seed
        } else {
            // a ghost reached only through collinearity; search its neighbourhood
            let tr = self.tris[seed as usize];
            let mut found = None;
            for &nb in &tr.n {
                if self.conflicts(nb, pi) {
                    found = Some(nb);
                    break;
                }
            }
            match found {
                Some(t) => t,
                None => (0..self.tris.len() as u32)
                    .find(|&t| self.tris[t as usize].alive && self.conflicts(t, pi))
                    .ok_or_else(|| Error::Geometry("point location failed".into()))?,
            }
        };

        self.stamp = self.stamp.wrapping_add(1).max(1);
        let stamp = self.stamp;
        let mut stack = vec![seed];
        let mut cavity = Vec::with_capacity(16);
        // (a, b, outside triangle) with a->b oriented as in the cavity triangle
        let mut boundary: Vec<(u32, u32, u32)> = Vec::with_capacity(16);
        self.mark[seed as usize] = stamp;
        while let Some(t) = stack.pop() {
            cavity.push(t);
            let tr = self.tris[t as usize];
            for i in 0..3 {
                let nb = tr.n[i];
                let a = tr.v[(i + 1) % 3];
                let b = tr.v[(i + 2) % 3];
                if self.mark[nb as usize] == stamp {
                    continue;
                }
                if self.conflicts(nb, pi) {
                    self.mark[nb as usize] = stamp;
                    stack.push(nb);
                } else {
                    boundary.push((a, b, nb));
                }
            }
        }
        // boundary edges of a cavity neighbour that is itself in the cavity were pushed before it was marked
        boundary.retain(|&(_, _, nb)| self.mark[nb as usize] != stamp);

        for &t in &cavity {
            self.tris[t as usize].alive = false;
            self.free.push(t);
        }
        let mut made: Vec<(u32, u32, u32)> = Vec::with_capacity(boundary.len());
        for &(a, b, nb) in &boundary {
            let t = self.alloc(Tri { v: [a, b, pi], n: [NIL, NIL, nb], alive: true });
            made.push((a, b, t));
            // repoint the outside neighbour from the dead cavity triangle to t
            let nbt = &mut self.tris[nb as usize];
            for j in 0..3 {
                let x = nbt.v[(j + 1) % 3];
                let y = nbt.v[(j + 2) % 3];
                if x == b && y == a {
                    nbt.n[j] = t;
                }
            }
        }
        for k in 0..made.len() {
            let (a, b, t) = made[k];
            // opposite a: edge (b, p), shared with the new triangle starting at b
            let n0 = made.iter().find(|m| m.0 == b).map(|m| m.2).unwrap_or(NIL);
            // opposite b: edge (p, a), shared with the new triangle ending at a
            let n1 = made.iter().find(|m| m.1 == a).map(|m| m.2).unwrap_or(NIL);
            let tr = &mut self.tris[t as usize];
            tr.n[0] = n0;
            tr.n[1] = n1;
        }
        for &(_, _, t) in &made {
            let tr = self.tris[t as usize];
            let (v, n) = canon(tr.v, tr.n);
            self.tris[t as usize].v = v;
            self.tris[t as usize].n = n;
            if v[2] != GHOST {
                self.last = t;
            }
        }
        Ok(())
    }
}

/// Serpentine grid ordering: nearby points get nearby ranks.
fn spatial_order(pts: &[Point2]) -> Vec<u32> {
    let n = pts.len();
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in pts {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    let side = ((n as f64).sqrt() / 2.0).ceil().max(1.0);
    let w = (x1 - x0).max(1e-300);
    let h = (y1 - y0).max(1e-300);
    let mut keyed: Vec<(u64, f64, u32)> = pts
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let row = (((p.y - y0) / h) * side).floor().min(side - 1.0) as u64;
            let xf = (p.x - x0) / w;
            let x = if row % 2 == 0 { xf } else { 1.0 - xf };
            (row, x, i as u32)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
    keyed.into_iter().map(|k| k.2).collect()
}

/// Delaunay triangles of `pts`, counter-clockwise, in canonical order.
///
/// Each triangle is rotated to start at its smallest index and the list is
/// sorted, so the output depends only on the point set.
pub(crate) fn triangulate(pts: &[Point2]) -> Result<Vec<[u32; 3]>> {
    if pts.len() < 3 {
        return Err(Error::Geometry(format!("need at least 3 sites, got {}", pts.len())));
    }
    if pts.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(Error::Geometry("non-finite site coordinate".into()));
    }
    let order = spatial_order(pts);
    let a = order[0];
    let b = *order
        .iter()
        .find(|&&i| pts[i as usize] != pts[a as usize])
        .ok_or_else(|| Error::Geometry("all sites coincide".into()))?;
    let c = *order
        .iter()
        .find(|&&i| orient(pts[a as usize], pts[b as usize], pts[i as usize]) != 0.0)
        .ok_or_else(|| Error::Geometry("all sites are collinear".into()))?;
    let mut bld = Builder { pts, tris: Vec::with_capacity(2 * pts.len() + 8), free: Vec::new(), last: 0, mark: Vec::new(), stamp: 0 };
    bld.init(a, b, c);
    for &i in &order {
        if i == a || i == b || i == c {
            continue;
        }
        bld.insert(i)?;
    }
    let mut out: Vec<[u32; 3]> = bld
        .tris
        .iter()
        .filter(|t| t.alive && !t.is_ghost())
        .map(|t| {
            let v = t.v;
            let m = (0..3).min_by_key(|&k| v[k]).unwrap();
            [v[m], v[(m + 1) % 3], v[(m + 2) % 3]]
        })
        .collect();
    out.sort_unstable();
    Ok(out)
}

/// Adjacency of a triangle list: `n[t][i]` is the triangle across the edge opposite vertex `i`.
pub(crate) fn adjacency(tris: &[[u32; 3]]) -> (Vec<[Option<u32>; 3]>, HashMap<(u32, u32), EdgeTris>) {
    let mut edges: HashMap<(u32, u32), EdgeTris> = HashMap::with_capacity(tris.len() * 2);
    for (t, v) in tris.iter().enumerate() {
        for i in 0..3 {
            let a = v[(i + 1) % 3];
            let b = v[(i + 2) % 3];
            let key = (a.min(b), a.max(b));
            let e = edges.entry(key).or_default();
            if (e.len as usize) < 2 {
                e.tri[e.len as usize] = t as u32;
                e.opp[e.len as usize] = v[i];
            }
            e.len += 1;
        }
    }
    let mut nb = vec![[None; 3]; tris.len()];
    for (t, v) in tris.iter().enumerate() {
        for i in 0..3 {
            let a = v[(i + 1) % 3];
            let b = v[(i + 2) % 3];
            let e = &edges[&(a.min(b), a.max(b))];
            if e.len == 2 {
                let other = if e.tri[0] as usize == t { e.tri[1] } else { e.tri[0] };
                nb[t][i] = Some(other);
            }
        }
    }
    (nb, edges)
}

/// Up to two triangles sharing an undirected edge, with their opposite vertices.
#[derive(Clone, Copy, Debug, Default)]
pub struct EdgeTris {
    pub tri: [u32; 2],
    pub opp: [u32; 2],
    pub len: u8,
}

impl EdgeTris {
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..(self.len.min(2) as usize)).map(move |k| (self.tri[k] as usize, self.opp[k] as usize))
    }
}
