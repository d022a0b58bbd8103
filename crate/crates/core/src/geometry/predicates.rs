//! Exact orientation and in-circle tests.
//!
//! Both wrap Shewchuk's adaptive-precision predicates. `incircle_sos` adds a
//! symbolic perturbation of the lifted coordinate so that cocircular inputs
//! still get a definite, insertion-order independent answer.

use super::Point2;
use robust::Coord;

#[inline]
fn c(p: Point2) -> Coord<f64> {
    Coord { x: p.x, y: p.y }
}

/// Positive when `a, b, p` turn counter-clockwise, negative when clockwise, zero when collinear.
#[inline]
pub fn orient(a: Point2, b: Point2, p: Point2) -> f64 {
    robust::orient2d(c(a), c(b), c(p))
}

/// Positive when `d` is strictly inside the circle through the counter-clockwise triple `a, b, c`.
#[inline]
pub fn incircle(a: Point2, b: Point2, cc: Point2, d: Point2) -> f64 {
    robust::incircle(c(a), c(b), c(cc), c(d))
}

#[inline]
fn lex_less(p: Point2, q: Point2) -> bool {
    p.x < q.x || (p.x == q.x && p.y < q.y)
}

/// In-circle sign under simulation of simplicity.
///
/// The lifted height of each site is perturbed by `eps^rank`, where rank is
/// its position in lexicographic `(x, y)` order, so the smallest point gets
/// the largest perturbation. The sign of the first non-vanishing cofactor
/// decides. Returns `+1` (inside) or `-1` (outside); `a, b, c` must be
/// counter-clockwise and `d` distinct from them.
pub fn incircle_sos(a: Point2, b: Point2, cc: Point2, d: Point2) -> i8 {
    let s = incircle(a, b, cc, d);
    if s > 0.0 {
        return 1;
    }
    if s < 0.0 {
        return -1;
    }
    let mut pts = [(a, 0u8), (b, 1), (cc, 2), (d, 3)];
    pts.sort_by(|p, q| {
        if lex_less(p.0, q.0) {
            std::cmp::Ordering::Less
        } else if lex_less(q.0, p.0) {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Equal
        }
    });
    for &(_, which) in &pts {
        let coef = match which {
            0 => orient(d, b, cc),
            1 => orient(a, d, cc),
            2 => orient(a, b, d),
            _ => -orient(a, b, cc),
        };
        if coef > 0.0 {
            return 1;
        }
        if coef < 0.0 {
            return -1;
        }
    }
    // only reachable for a degenerate (collinear) reference triangle
    -1
}
