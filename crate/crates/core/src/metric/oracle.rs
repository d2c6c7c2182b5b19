//! Brute-force action minimization over polyline connections.
//!
//! Independent of the graph: connections are enumerated as branch sequences
//! joined through ramification edges, each branch piece carrying `depth` free
//! interior vertices. Every straight piece is split into 16 subsegments whose
//! action `T L(x, delta/T)` is minimized over the time `T` numerically, so the
//! closed-form gauge is never used.

use thiserror::Error;

use super::QueryPoint;
use crate::geometry::linalg::{dist2, lerp2, lerp3, Vec2};
use crate::geometry::{GeometryError, LepComplex};
use crate::hamiltonian::HamiltonianFamily;

const MAX_BRANCHES: usize = 4;
const SUBSEGMENTS: usize = 16;
pub const DEFAULT_BUDGET: usize = 2_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("brute force supports at most {MAX_BRANCHES} branches, complex has {0}")]
    TooManyBranches(usize),
    #[error("evaluation budget exhausted after {evaluations} connections; best bound {partial}")]
    Budget { partial: f64, evaluations: usize },
    #[error("no connection between the points")]
    NoConnection,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// One crossing: the edge's endpoints in ambient space (equal for n = 1).
#[derive(Clone, Copy, Debug)]
struct Crossing {
    a: [f64; 3],
    b: [f64; 3],
}

#[derive(Clone, Debug)]
struct Route {
    branches: Vec<usize>,
    crossings: Vec<Crossing>,
}

fn routes(c: &LepComplex, from: usize, to: usize) -> Vec<Route> {
    let mut out = Vec::new();
    let mut stack = vec![Route { branches: vec![from], crossings: vec![] }];
    while let Some(r) = stack.pop() {
        let last = *r.branches.last().expect("non-empty");
        if last == to {
            out.push(r.clone());
            continue;
        }
        if r.branches.len() == MAX_BRANCHES {
            continue;
        }
        let last_id = c.branches()[last].id;
        for e in c.ram_edges() {
            if !e.incident.iter().any(|i| i.branch == last_id) {
                continue;
            }
            let a = c.vertex_position(e.vertices[0]).unwrap_or_default();
            let b = e.vertices.get(1).and_then(|&v| c.vertex_position(v)).unwrap_or(a);
            for inc in &e.incident {
                let Ok(next) = c.branch_idx(inc.branch) else { continue };
                if r.branches.contains(&next) {
                    continue;
                }
                let mut nr = r.clone();
                nr.branches.push(next);
                nr.crossings.push(Crossing { a, b });
                stack.push(nr);
            }
        }
    }
    out
}

struct Eval<'a> {
    h: &'a HamiltonianFamily,
    c: &'a LepComplex,
    count: usize,
    budget: usize,
    best: f64,
}

impl Eval<'_> {
    /// `min_T T L(x, delta/T)` by golden-section search over `log T`.
    fn piece(&self, bi: usize, x: Vec2, d: Vec2) -> f64 {
        if d == [0.0, 0.0] {
            return 0.0;
        }
        let f = |s: f64| {
            let t = s.exp();
            match self.h.lagrangian_idx(bi, x, [d[0] / t, d[1] / t]) {
                Ok(v) if v.is_finite() => t * v,
                _ => f64::INFINITY,
            }
        };
        let scale = (d[0] * d[0] + d[1] * d[1]).sqrt().ln();
        let (mut a, mut b) = (scale - 14.0, scale + 14.0);
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let (mut x1, mut x2) = (b - r * (b - a), a + r * (b - a));
        let (mut f1, mut f2) = (f(x1), f(x2));
        while b - a > 1e-9 {
            if f1 <= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - r * (b - a);
                f1 = f(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + r * (b - a);
                f2 = f(x2);
            }
        }
        f1.min(f2)
    }

    fn segment(&self, bi: usize, p: Vec2, q: Vec2) -> f64 {
        let br = &self.c.branches()[bi];
        let tol = self.c.tolerances().len.max(1e-12);
        if !br.contains_segment(p, q, tol) {
            return f64::INFINITY;
        }
        let d = [(q[0] - p[0]) / SUBSEGMENTS as f64, (q[1] - p[1]) / SUBSEGMENTS as f64];
        (0..SUBSEGMENTS)
            .map(|i| self.piece(bi, lerp2(p, q, (i as f64 + 0.5) / SUBSEGMENTS as f64), d))
            .sum()
    }

    fn path(&mut self, pts: &[(usize, Vec2, Vec2)]) -> Result<f64, OracleError> {
        self.count += 1;
        if self.count > self.budget {
            return Err(OracleError::Budget { partial: self.best, evaluations: self.count - 1 });
        }
        let mut total = 0.0;
        for &(bi, p, q) in pts {
            total += self.segment(bi, p, q);
            if !total.is_finite() {
                break;
            }
        }
        if total < self.best {
            self.best = total;
        }
        Ok(total)
    }
}

/// Parameter vector layout: one crossing parameter per crossing (n = 2),
/// then `depth` free vertices (two coordinates each) per branch piece.
struct Layout<'a> {
    c: &'a LepComplex,
    route: &'a Route,
    depth: usize,
    x: Vec2,
    y: Vec2,
    planar: bool,
}

impl Layout<'_> {
    fn n_cross(&self) -> usize {
        if self.planar { self.route.crossings.len() } else { 0 }
    }

    fn crossing_local(&self, k: usize, t: f64, bi: usize) -> Vec2 {
        let cr = self.route.crossings[k];
        let p = lerp3(cr.a, cr.b, t.clamp(0.0, 1.0));
        self.c.branches()[bi].frame.to_local(p)
    }

    /// Straight pieces `(branch, from, to)` of the polyline for a parameter vector.
    fn pieces(&self, params: &[f64]) -> Vec<(usize, Vec2, Vec2)> {
        let nb = self.route.branches.len();
        let mut out = Vec::new();
        let mut free = self.n_cross();
        for (k, &bi) in self.route.branches.iter().enumerate() {
            let start = if k == 0 {
                self.x
            } else {
                self.crossing_local(k - 1, if self.planar { params[k - 1] } else { 0.0 }, bi)
            };
            let end = if k + 1 == nb {
                self.y
            } else {
                self.crossing_local(k, if self.planar { params[k] } else { 0.0 }, bi)
            };
            let mut prev = start;
            if self.planar {
                for _ in 0..self.depth {
                    let v = [params[free], params[free + 1]];
                    free += 2;
                    out.push((bi, prev, v));
                    prev = v;
                }
            }
            out.push((bi, prev, end));
        }
        out
    }

    /// Free vertices evenly spaced on the straight piece between the ends.
    fn initial(&self, crossing: &[f64]) -> Vec<f64> {
        let mut params = crossing.to_vec();
        let nb = self.route.branches.len();
        if !self.planar {
            return params;
        }
        for (k, &bi) in self.route.branches.iter().enumerate() {
            let start = if k == 0 { self.x } else { self.crossing_local(k - 1, crossing[k - 1], bi) };
            let end = if k + 1 == nb { self.y } else { self.crossing_local(k, crossing[k], bi) };
            for i in 0..self.depth {
                let p = lerp2(start, end, (i + 1) as f64 / (self.depth + 1) as f64);
                params.extend(p);
            }
        }
        params
    }
}

fn search_route(ev: &mut Eval, layout: &Layout) -> Result<f64, OracleError> {
    let m = layout.n_cross();
    // exhaustive grid over the crossing parameters
    let per_axis: usize = match m {
        0 => 1,
        1 => 65,
        2 => 17,
        _ => 9,
    };
    let mut best_params = layout.initial(&vec![0.5; m]);
    let mut best = f64::INFINITY;
    let total = per_axis.pow(m as u32);
    for idx in 0..total {
        let mut cross = Vec::with_capacity(m);
        let mut rest = idx;
        for _ in 0..m {
            cross.push((rest % per_axis) as f64 / (per_axis - 1).max(1) as f64);
            rest /= per_axis;
        }
        let params = layout.initial(&cross);
        let v = ev.path(&layout.pieces(&params))?;
        if v < best {
            best = v;
            best_params = params;
        }
    }
    if best_params.is_empty() {
        return Ok(best);
    }

    // cyclic coordinate refinement with shrinking windows
    let diam = layout.c.diameter();
    let mut windows: Vec<f64> = (0..best_params.len())
        .map(|i| if i < m { 1.0 / (per_axis - 1).max(1) as f64 } else { 0.25 * diam })
        .collect();
    for _sweep in 0..40 {
        for i in 0..best_params.len() {
            let centre = best_params[i];
            for s in -4i32..=4 {
                if s == 0 {
                    continue;
                }
                let mut trial = best_params.clone();
                let mut v = centre + windows[i] * s as f64 / 4.0;
                if i < m {
                    v = v.clamp(0.0, 1.0);
                }
                trial[i] = v;
                let val = ev.path(&layout.pieces(&trial))?;
                if val < best {
                    best = val;
                    best_params = trial;
                }
            }
            windows[i] *= 0.6;
        }
    }
    Ok(best)
}

fn search(h: &HamiltonianFamily, x: &QueryPoint, y: &QueryPoint, depth: usize, ev: &mut Eval) -> Result<f64, OracleError> {
    let c = h.complex();
    let (bx, by) = (c.branch_idx(x.branch)?, c.branch_idx(y.branch)?);
    let planar = c.branch_dim() == 2;
    let mut best = f64::INFINITY;
    for route in routes(c, bx, by) {
        let layout = Layout { c, route: &route, depth, x: x.local, y: y.local, planar };
        best = best.min(search_route(ev, &layout)?);
    }
    Ok(best)
}

/// Upper bound on the action distance from `x` to `y`, non-increasing in `depth`.
pub fn brute_force_action(
    h: &HamiltonianFamily,
    x: &QueryPoint,
    y: &QueryPoint,
    depth: usize,
) -> Result<f64, OracleError> {
    brute_force_action_with_budget(h, x, y, depth, DEFAULT_BUDGET)
}

pub fn brute_force_action_with_budget(
    h: &HamiltonianFamily,
    x: &QueryPoint,
    y: &QueryPoint,
    depth: usize,
    budget: usize,
) -> Result<f64, OracleError> {
    let c = h.complex();
    if c.branches().len() > MAX_BRANCHES {
        return Err(OracleError::TooManyBranches(c.branches().len()));
    }
    c.check_point(x.branch, x.local)?;
    c.check_point(y.branch, y.local)?;
    if x.branch == y.branch && dist2(x.local, y.local) == 0.0 {
        return Ok(0.0);
    }
    let mut ev = Eval { h, c, count: 0, budget, best: f64::INFINITY };
    let mut best = f64::INFINITY;
    for d in 0..=depth {
        best = best.min(search(h, x, y, d, &mut ev)?);
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(OracleError::NoConnection)
    }
}
