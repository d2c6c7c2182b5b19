//! Planar polygon predicates in branch-local coordinates.
//!
//! Polygons are closed loops given by their corner list; the last corner
//! connects back to the first.

use super::linalg::{cross2, dist2, dot2, lerp2, norm2, sub2, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointClass {
    Inside,
    Boundary,
    Outside,
}

pub fn signed_area(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    let mut acc = 0.0;
    for i in 0..n {
        acc += cross2(poly[i], poly[(i + 1) % n]);
    }
    0.5 * acc
}

pub fn dist_point_segment(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = sub2(b, a);
    let len2 = dot2(ab, ab);
    if len2 == 0.0 {
        return dist2(p, a);
    }
    let t = (dot2(sub2(p, a), ab) / len2).clamp(0.0, 1.0);
    dist2(p, lerp2(a, b, t))
}

/// Distance from `p` to the polygon outline.
pub fn boundary_distance(p: Vec2, poly: &[Vec2]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| dist_point_segment(p, poly[i], poly[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

pub fn classify_point(p: Vec2, poly: &[Vec2], tol: f64) -> PointClass {
    let n = poly.len();
    if boundary_distance(p, poly) <= tol {
        return PointClass::Boundary;
    }
    // crossing number
    let mut inside = false;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    if inside {
        PointClass::Inside
    } else {
        PointClass::Outside
    }
}

/// Parameters `t` in [0, 1] along `a -> b` where the segment meets the
/// segment `c -> d` (touching and collinear overlaps included).
fn segment_hits(a: Vec2, b: Vec2, c: Vec2, d: Vec2, tol: f64, out: &mut Vec<f64>) {
    let r = sub2(b, a);
    let s = sub2(d, c);
    let denom = cross2(r, s);
    let rr = dot2(r, r);
    if rr == 0.0 {
        return;
    }
    let scale = norm2(r) * norm2(s);
    if denom.abs() <= 1e-14 * scale {
        // parallel: keep projections of c and d when collinear
        if dist_point_line(c, a, b) <= tol {
            for q in [c, d] {
                let t = dot2(sub2(q, a), r) / rr;
                if (-1e-12..=1.0 + 1e-12).contains(&t) {
                    out.push(t.clamp(0.0, 1.0));
                }
            }
        }
        return;
    }
    let ac = sub2(c, a);
    let t = cross2(ac, s) / denom;
    let u = cross2(ac, r) / denom;
    let slack_u = tol / norm2(s).max(f64::MIN_POSITIVE);
    let slack_t = tol / norm2(r);
    if t >= -slack_t && t <= 1.0 + slack_t && u >= -slack_u && u <= 1.0 + slack_u {
        out.push(t.clamp(0.0, 1.0));
    }
}

fn dist_point_line(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = sub2(b, a);
    let len = norm2(ab);
    if len == 0.0 {
        return dist2(p, a);
    }
    cross2(ab, sub2(p, a)).abs() / len
}

/// True when the closed segment `a -> b` stays within the closed polygon.
pub fn segment_in_polygon(a: Vec2, b: Vec2, poly: &[Vec2], tol: f64) -> bool {
    if classify_point(a, poly, tol) == PointClass::Outside
        || classify_point(b, poly, tol) == PointClass::Outside
    {
        return false;
    }
    let n = poly.len();
    let mut ts = vec![0.0, 1.0];
    for i in 0..n {
        segment_hits(a, b, poly[i], poly[(i + 1) % n], tol, &mut ts);
    }
    ts.sort_by(f64::total_cmp);
    ts.windows(2).all(|w| {
        if w[1] - w[0] <= 1e-12 {
            return true;
        }
        let m = lerp2(a, b, 0.5 * (w[0] + w[1]));
        classify_point(m, poly, tol) != PointClass::Outside
    })
}

/// Proper or touching intersection of two closed segments.
pub fn segments_touch(a: Vec2, b: Vec2, c: Vec2, d: Vec2, tol: f64) -> bool {
    let mut hits = Vec::new();
    segment_hits(a, b, c, d, tol, &mut hits);
    !hits.is_empty()
}

/// Simple-polygon test: non-adjacent edges never touch, adjacent edges only
/// share their common corner.
pub fn is_simple(poly: &[Vec2], tol: f64) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        for j in (i + 1)..n {
            let c = poly[j];
            let d = poly[(j + 1) % n];
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // folded back onto itself
                let (shared, other_a, other_b) = if j == i + 1 { (b, a, d) } else { (a, b, c) };
                let u = sub2(other_a, shared);
                let v = sub2(other_b, shared);
                if cross2(u, v).abs() <= tol * (norm2(u) + norm2(v)) && dot2(u, v) > 0.0 {
                    return false;
                }
                continue;
            }
            if segments_touch(a, b, c, d, tol) {
                return false;
            }
        }
    }
    true
}

pub fn is_convex(poly: &[Vec2], tol: f64) -> bool {
    let n = poly.len();
    let sign = signed_area(poly).signum();
    (0..n).all(|i| {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let c = poly[(i + 2) % n];
        cross2(sub2(b, a), sub2(c, b)) * sign >= -tol * (dist2(a, b) + dist2(b, c))
    })
}

/// Mean value coordinates of `p` with respect to the polygon corners.
///
/// On the outline they reduce to linear interpolation along the containing
/// edge, so two polygons sharing an edge interpolate identically there.
pub fn mean_value_weights(p: Vec2, poly: &[Vec2], tol: f64) -> Vec<f64> {
    let n = poly.len();
    let mut w = vec![0.0; n];
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if dist_point_segment(p, a, b) <= tol {
            let ab = sub2(b, a);
            let t = (dot2(sub2(p, a), ab) / dot2(ab, ab)).clamp(0.0, 1.0);
            w[i] = 1.0 - t;
            w[(i + 1) % n] += t;
            return w;
        }
    }
    let d: Vec<Vec2> = poly.iter().map(|&v| sub2(v, p)).collect();
    let r: Vec<f64> = d.iter().map(|&v| norm2(v)).collect();
    let tan_half: Vec<f64> = (0..n)
        .map(|i| {
            let j = (i + 1) % n;
            cross2(d[i], d[j]) / (r[i] * r[j] + dot2(d[i], d[j]))
        })
        .collect();
    let mut total = 0.0;
    for i in 0..n {
        let prev = tan_half[(i + n - 1) % n];
        w[i] = (prev + tan_half[i]) / r[i];
        total += w[i];
    }
    for wi in &mut w {
        *wi /= total;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: [Vec2; 4] = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];

    #[test]
    fn classify_square() {
        assert_eq!(classify_point([0.5, 0.5], &SQUARE, 1e-12), PointClass::Inside);
        assert_eq!(classify_point([1.0, 0.5], &SQUARE, 1e-12), PointClass::Boundary);
        assert_eq!(classify_point([1.5, 0.5], &SQUARE, 1e-12), PointClass::Outside);
    }

    #[test]
    fn bow_tie_is_not_simple() {
        let bow = [[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(!is_simple(&bow, 1e-12));
        assert!(is_simple(&SQUARE, 1e-12));
    }

    #[test]
    fn segment_leaving_l_shape() {
        let l = [[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]];
        assert!(!is_convex(&l, 1e-12));
        assert!(segment_in_polygon([0.5, 0.5], [1.5, 0.5], &l, 1e-12));
        assert!(!segment_in_polygon([1.5, 0.5], [0.5, 1.5 + 0.4], &l, 1e-12));
        // runs along the reflex corner's edges
        assert!(segment_in_polygon([1.0, 1.0], [1.0, 2.0], &l, 1e-12));
    }

    #[test]
    fn mean_value_weights_reproduce_linear_functions() {
        let pent = [[0.0, 0.0], [2.0, 0.0], [2.5, 1.0], [1.0, 2.0], [-0.5, 1.0]];
        for p in [[1.0, 1.0], [0.3, 0.2], [2.0, 0.7], [1.0, 0.0]] {
            let w = mean_value_weights(p, &pent, 1e-12);
            let sum: f64 = w.iter().sum();
            let x: f64 = w.iter().zip(&pent).map(|(w, v)| w * v[0]).sum();
            let y: f64 = w.iter().zip(&pent).map(|(w, v)| w * v[1]).sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!((x - p[0]).abs() < 1e-12 && (y - p[1]).abs() < 1e-12);
        }
    }
}
