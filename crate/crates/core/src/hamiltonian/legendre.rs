//! Numerical Legendre transform and free-horizon gauge of a convex,
//! coercive Hamiltonian given only as an evaluator `p -> H(p)`.

use crate::geometry::linalg::{dot2, norm2, Vec2};

pub const TOL_L: f64 = 1e-8;
const MAX_ITER: usize = 200;
const LOG_T_MIN: f64 = -13.815510557964274; // ln 1e-6
const LOG_T_MAX: f64 = 13.815510557964274;

/// The ascent escaped the divergence radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Divergent;

fn mask(p: Vec2, dims: usize) -> Vec2 {
    if dims == 1 {
        [p[0], 0.0]
    } else {
        p
    }
}

/// `sup_p { p.q - H(p) }` by damped Newton ascent with finite-difference
/// derivatives, started from the best point of a polar grid of radius `radius`.
pub fn legendre<F: Fn(Vec2) -> f64>(
    h: F,
    q: Vec2,
    dims: usize,
    radius: f64,
) -> Result<f64, Divergent> {
    let q = mask(q, dims);
    let phi = |p: Vec2| dot2(p, q) - h(p);

    let mut best = ([0.0, 0.0], phi([0.0, 0.0]));
    let angles = if dims == 1 { 2 } else { 8 };
    for ring in [0.25, 0.5, 1.0] {
        for a in 0..angles {
            let th = std::f64::consts::TAU * a as f64 / angles as f64;
            let p = mask([radius * ring * th.cos(), radius * ring * th.sin()], dims);
            let v = phi(p);
            if v > best.1 {
                best = (p, v);
            }
        }
    }
    let (mut p, mut val) = best;
    if !val.is_finite() {
        return Err(Divergent);
    }

    for _ in 0..MAX_ITER {
        let e = 1e-5 * (1.0 + norm2(p));
        let (g, hess) = derivatives(&phi, p, e, dims);
        let newton = newton_direction(g, hess, dims);
        let dir = newton.unwrap_or(g);
        let slope = dot2(g, dir);
        if slope <= 0.0 || norm2(g) == 0.0 {
            break;
        }
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-14 {
            let cand = mask([p[0] + t * dir[0], p[1] + t * dir[1]], dims);
            let v = phi(cand);
            if v.is_finite() && v >= val + 1e-4 * t * slope {
                accepted = Some((cand, v));
                break;
            }
            t *= 0.5;
        }
        let Some((mut cand, mut v)) = accepted else {
            break;
        };
        if newton.is_none() && t == 1.0 {
            // plain gradient step: expand while it keeps improving
            loop {
                let far = mask([p[0] + 2.0 * t * dir[0], p[1] + 2.0 * t * dir[1]], dims);
                let fv = phi(far);
                if !(fv.is_finite() && fv > v) || norm2(far) > 8.0 * radius {
                    if norm2(far) > 8.0 * radius && fv > v {
                        return Err(Divergent);
                    }
                    break;
                }
                t *= 2.0;
                cand = far;
                v = fv;
            }
        }
        if norm2(cand) > 8.0 * radius {
            return Err(Divergent);
        }
        let step = t * norm2(dir);
        p = cand;
        val = v;
        if step < TOL_L * (1.0 + norm2(p)) {
            break;
        }
    }
    Ok(val)
}

fn derivatives<F: Fn(Vec2) -> f64>(f: &F, p: Vec2, e: f64, dims: usize) -> (Vec2, [f64; 3]) {
    let f0 = f(p);
    let at = |dx: f64, dy: f64| f([p[0] + dx, p[1] + dy]);
    let (fxp, fxm) = (at(e, 0.0), at(-e, 0.0));
    let gx = (fxp - fxm) / (2.0 * e);
    let hxx = (fxp - 2.0 * f0 + fxm) / (e * e);
    if dims == 1 {
        return ([gx, 0.0], [hxx, 0.0, 0.0]);
    }
    let (fyp, fym) = (at(0.0, e), at(0.0, -e));
    let gy = (fyp - fym) / (2.0 * e);
    let hyy = (fyp - 2.0 * f0 + fym) / (e * e);
    let hxy = (at(e, e) - at(e, -e) - at(-e, e) + at(-e, -e)) / (4.0 * e * e);
    ([gx, gy], [hxx, hxy, hyy])
}

/// Newton step `-Hess^{-1} g` when the Hessian is negative definite.
fn newton_direction(g: Vec2, hess: [f64; 3], dims: usize) -> Option<Vec2> {
    let [a, b, c] = hess;
    if dims == 1 {
        return (a < 0.0).then(|| [-g[0] / a, 0.0]);
    }
    let det = a * c - b * b;
    if a < 0.0 && det > 0.0 {
        Some([-(c * g[0] - b * g[1]) / det, -(a * g[1] - b * g[0]) / det])
    } else {
        None
    }
}

/// `inf_{T>0} T L(q/T)` by golden-section search over `log T` in `[ln 1e-6, ln 1e6]`
/// for the unit direction of `q`, scaled back by `|q|`.
pub fn gauge<L: Fn(Vec2) -> Result<f64, Divergent>>(lagr: L, q: Vec2) -> Result<f64, Divergent> {
    let n = norm2(q);
    if n == 0.0 {
        return Ok(0.0);
    }
    let u = [q[0] / n, q[1] / n];
    let mut seen_finite = false;
    let mut eval = |s: f64| -> f64 {
        let t = s.exp();
        match lagr([u[0] / t, u[1] / t]) {
            Ok(v) if v.is_finite() => {
                seen_finite = true;
                t * v
            }
            _ => f64::INFINITY,
        }
    };
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (LOG_T_MIN, LOG_T_MAX);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (eval(x1), eval(x2));
    let mut best = f1.min(f2);
    while b - a > TOL_L {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = eval(x1);
            best = best.min(f1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = eval(x2);
            best = best.min(f2);
        }
    }
    if !seen_finite {
        return Err(Divergent);
    }
    Ok(n * best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_closed_forms() {
        let f = 2.5;
        let h = |p: Vec2| dot2(p, p) - f;
        for q in [[0.0, 0.0], [1.0, -2.0], [3.0, 0.5]] {
            let l = legendre(h, q, 2, 16.0).unwrap();
            let exact = dot2(q, q) / 4.0 + f;
            assert!((l - exact).abs() <= 1e-9 * exact, "{l} vs {exact}");
        }
        let g = gauge(|q| legendre(h, q, 2, 16.0), [0.6, 0.8]).unwrap();
        assert!((g - f.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn odd_growth_diverges() {
        let h = |p: Vec2| p[0].powi(3) + p[1] * p[1];
        assert_eq!(legendre(h, [0.0, 0.0], 2, 16.0), Err(Divergent));
    }

    #[test]
    fn one_dimensional_ignores_second_slot() {
        let h = |p: Vec2| p[0] * p[0] + 100.0 * p[1] * p[1] - 1.0;
        let l = legendre(h, [2.0, 7.0], 1, 16.0).unwrap();
        assert!((l - 2.0).abs() < 1e-9);
    }
}
