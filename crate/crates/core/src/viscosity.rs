//! Numerical checks of the viscosity sub- and supersolution conditions,
//! the Lipschitz bound and the comparison principle on graph fields.
//!
//! Interior gradients come from weighted least squares over the ring-1 mesh
//! stencil (weights `1/|edge|`). The supersolution test also accepts the
//! steepest descent slope over the same-branch graph neighbours, which still
//! sees `|Du|` at ridges where the least-squares fit flattens. On the
//! ramification set every ordered pair of incident branches is unfolded into
//! one plane and the one-sided normal derivatives bound the normal slopes of
//! admissible test functions.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;

use crate::geometry::linalg::{add2, dist2, dist3, scale2, sub2, Point3, Vec2};
use crate::geometry::{BranchId, RamEdgeId, Unfolding};
use crate::metric::{MetricError, MetricGraph, NodeKind, SolutionField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Condition {
    InteriorSub,
    TransitionSub,
    InteriorSuper,
    TransitionSuper,
}

impl Condition {
    pub fn name(self) -> &'static str {
        match self {
            Condition::InteriorSub => "interior-sub",
            Condition::TransitionSub => "transition-sub",
            Condition::InteriorSuper => "interior-super",
            Condition::TransitionSuper => "transition-super",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SiteRecord {
    pub node: usize,
    pub ambient: Point3,
    pub branch: BranchId,
    /// Second branch of the unfolded pair on the ramification set.
    pub other: Option<BranchId>,
    pub edge: Option<RamEdgeId>,
    pub condition: Condition,
    pub residual: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub records: Vec<SiteRecord>,
    /// Largest residual per condition class.
    pub summary: BTreeMap<Condition, f64>,
    pub tol: f64,
    /// Set when transition supersolution verdicts only test the measured tangential slope.
    pub best_effort: bool,
    pub notes: Vec<String>,
}

impl CheckReport {
    fn new(records: Vec<SiteRecord>, tol: f64) -> Self {
        let mut summary = BTreeMap::new();
        for r in &records {
            let e = summary.entry(r.condition).or_insert(f64::NEG_INFINITY);
            *e = f64::max(*e, r.residual);
        }
        let best_effort = records.iter().any(|r| r.condition == Condition::TransitionSuper);
        CheckReport { records, summary, tol, best_effort, notes: Vec::new() }
    }

    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn pass(&self, c: Condition) -> bool {
        self.records.iter().filter(|r| r.condition == c).all(|r| r.pass)
    }

    pub fn max_residual(&self, c: Condition) -> Option<f64> {
        self.summary.get(&c).copied()
    }

    pub fn failures(&self) -> impl Iterator<Item = &SiteRecord> {
        self.records.iter().filter(|r| !r.pass)
    }

    pub fn count(&self, c: Condition) -> usize {
        self.records.iter().filter(|r| r.condition == c).count()
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.records {
            write!(
                f,
                "site node={} branch={} condition={} residual={:e} {}",
                r.node,
                r.branch,
                r.condition,
                r.residual,
                if r.pass { "PASS" } else { "FAIL" }
            )?;
            if let (Some(e), Some(k)) = (r.edge, r.other) {
                write!(f, " edge={e} pair={}:{k}", r.branch)?;
            }
            writeln!(f)?;
        }
        writeln!(f, "summary tol={:e}", self.tol)?;
        for (c, m) in &self.summary {
            let pass = self.pass(*c);
            write!(f, "  {c:<16} max={m:e} sites={} {}", self.count(*c), if pass { "PASS" } else { "FAIL" })?;
            if *c == Condition::TransitionSuper {
                write!(f, " (best-effort)")?;
            }
            writeln!(f)?;
        }
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        Ok(())
    }
}

/// Check settings.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckOptions {
    pub tol: f64,
    /// Skip sites within `exclude_radius` of these points (e.g. point sources).
    pub exclude: Vec<Point3>,
    pub exclude_radius: f64,
}

impl CheckOptions {
    /// `tol = 10 h (1 + C)` with `C` the sampled Lipschitz constant.
    pub fn auto(g: &MetricGraph) -> Self {
        let c = g.hamiltonian().lipschitz_constant();
        CheckOptions { tol: 10.0 * g.params().h * (1.0 + c), exclude: Vec::new(), exclude_radius: 0.0 }
    }

    pub fn with_tol(tol: f64) -> Self {
        CheckOptions { tol, exclude: Vec::new(), exclude_radius: 0.0 }
    }
}

/// Weighted least-squares gradient of `u` from `(offset, du)` samples.
fn lsq_gradient(samples: &[(Vec2, f64)], dims: usize) -> Option<Vec2> {
    let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(d, du) in samples {
        let l = (d[0] * d[0] + d[1] * d[1]).sqrt();
        if l == 0.0 {
            continue;
        }
        let w = 1.0 / l;
        a11 += w * d[0] * d[0];
        a12 += w * d[0] * d[1];
        a22 += w * d[1] * d[1];
        b1 += w * d[0] * du;
        b2 += w * d[1] * du;
    }
    if dims == 1 {
        return (a11 > 0.0).then(|| [b1 / a11, 0.0]);
    }
    let det = a11 * a22 - a12 * a12;
    let scale = (a11 + a22).powi(2);
    if !(det > 1e-10 * scale) {
        return None;
    }
    Some([(a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det])
}

/// One-sided slopes at a ramification node in the unfolded `(j, k)` plane.
#[derive(Clone, Copy, Debug)]
struct Slopes {
    /// Derivative along the inward normal of `j`.
    dj: f64,
    /// Derivative along the inward normal of `k`.
    dk: f64,
    /// Least-squares tangential slope.
    t: f64,
    /// Backward and forward difference quotients along the edge.
    t_minus: f64,
    t_plus: f64,
}

struct Ctx<'a> {
    g: &'a MetricGraph,
    u: &'a [f64],
    opts: &'a CheckOptions,
    corners: Vec<Point3>,
}

impl Ctx<'_> {
    fn dims(&self) -> usize {
        self.g.complex().branch_dim()
    }

    fn excluded(&self, p: Point3) -> bool {
        self.opts.exclude.iter().any(|&e| dist3(e, p) <= self.opts.exclude_radius)
    }

    fn near_corner(&self, p: Point3) -> bool {
        let r = 2.0 * self.g.params().h;
        self.corners.iter().any(|&c| dist3(c, p) < r)
    }

    /// Finite ring-1 neighbours of `i` inside branch `bi`: `(offset, du)`.
    fn ring1(&self, bi: usize, i: usize) -> Option<Vec<(Vec2, f64)>> {
        let x = self.g.nodes()[i].local_in(bi)?;
        let adj = self.g.meshes()[bi].adjacency.get(&i)?;
        let mut out = Vec::with_capacity(adj.len());
        for &k in adj {
            if !self.u[k].is_finite() {
                return None;
            }
            let y = self.g.nodes()[k].local_in(bi)?;
            out.push((sub2(y, x), self.u[k] - self.u[i]));
        }
        Some(out)
    }

    /// Steepest descent covector: `s = max (u_i - u_k)/|y_k - x|` over
    /// same-branch graph neighbours, returned as `-s` times that direction.
    fn descent(&self, bi: usize, i: usize) -> Option<Vec2> {
        let x = self.g.nodes()[i].local_in(bi)?;
        let mut best: Option<(f64, Vec2)> = None;
        for (k, _) in self.g.arcs_from(i) {
            let Some(y) = self.g.nodes()[k].local_in(bi) else { continue };
            if !self.u[k].is_finite() {
                continue;
            }
            let l = dist2(x, y);
            if l == 0.0 {
                continue;
            }
            let s = (self.u[i] - self.u[k]) / l;
            if best.is_none_or(|b| s > b.0) {
                best = Some((s, scale2(sub2(y, x), 1.0 / l)));
            }
        }
        let (s, dir) = best?;
        Some(scale2(dir, -s.max(0.0)))
    }

    /// Slope noise tolerated before an admissible interval counts as empty.
    fn slope_slack(&self) -> f64 {
        5.0 * self.g.params().h
    }

    fn h(&self, bi: usize, x: Vec2, p: Vec2) -> f64 {
        self.g.hamiltonian().h_idx(bi, x, p)
    }

    fn interior_sites(&self) -> Vec<usize> {
        (0..self.g.node_count())
            .filter(|&i| {
                let n = &self.g.nodes()[i];
                !n.boundary
                    && n.sigma.is_none()
                    && n.members.len() == 1
                    && self.u[i].is_finite()
                    && !self.excluded(n.ambient)
                    && !(self.dims() == 2 && matches!(n.kind, NodeKind::Vertex(_)))
            })
            .collect()
    }

    fn sigma_sites(&self) -> Vec<usize> {
        (0..self.g.node_count())
            .filter(|&i| {
                let n = &self.g.nodes()[i];
                !n.boundary
                    && n.sigma.is_some()
                    && self.u[i].is_finite()
                    && !self.excluded(n.ambient)
                    && (self.dims() == 1 || !self.near_corner(n.ambient))
            })
            .collect()
    }

    fn record(&self, i: usize, bi: usize, cond: Condition, residual: f64) -> SiteRecord {
        SiteRecord {
            node: i,
            ambient: self.g.nodes()[i].ambient,
            branch: self.g.complex().branches()[bi].id,
            other: None,
            edge: None,
            condition: cond,
            residual,
            pass: residual <= self.opts.tol,
        }
    }

    /// One-sided derivatives at a ramification node for the pair `(j, k)`.
    fn one_sided(&self, i: usize, unf: &Unfolding, bj: usize, bk: usize) -> Option<Slopes> {
        let dims = self.dims();
        let sigma = self.g.nodes()[i].sigma;
        let mut along: (Option<(f64, f64)>, Option<(f64, f64)>) = (None, None);
        let mut side = |bi: usize, branch: BranchId| -> Option<Vec2> {
            let x = self.g.nodes()[i].local_in(bi)?;
            let m0 = unf.forward(branch, x)?;
            let adj = self.g.meshes()[bi].adjacency.get(&i)?;
            let mut samples = Vec::with_capacity(adj.len());
            for (&k, (d, du)) in adj.iter().zip(self.ring1(bi, i)?) {
                let m = sub2(unf.forward(branch, add2(x, d)).expect("incident"), m0);
                if self.g.nodes()[k].sigma == sigma && m[1] != 0.0 {
                    let slot = if m[1] > 0.0 { &mut along.1 } else { &mut along.0 };
                    if slot.is_none_or(|s| m[1].abs() < s.0) {
                        *slot = Some((m[1].abs(), du / m[1]));
                    }
                }
                samples.push((m, du));
            }
            // segments unfold onto the first axis
            lsq_gradient(&samples, dims)
        };
        let c = self.g.complex();
        let gj = side(bj, c.branches()[bj].id)?;
        let gk = side(bk, c.branches()[bk].id)?;
        let t = 0.5 * (gj[1] + gk[1]);
        // x1 points into j and out of k
        Some(Slopes {
            dj: gj[0],
            dk: -gk[0],
            t,
            t_minus: along.0.map_or(t, |a| a.1),
            t_plus: along.1.map_or(t, |a| a.1),
        })
    }

    fn chart_h(&self, bi: usize, unf_map: &crate::geometry::ChartMap, x: Vec2, sigma: f64, t: f64) -> f64 {
        let p = add2(scale2(unf_map.normal, sigma), scale2(unf_map.tangent, t));
        self.h(bi, x, p)
    }

    /// Pairs `(j, k)` of incident branch indices with their unfolding.
    fn pairs(&self, i: usize) -> Vec<(usize, usize, Unfolding)> {
        let n = &self.g.nodes()[i];
        let c = self.g.complex();
        let e = &c.ram_edges()[n.sigma.expect("sigma site")];
        let mut out = Vec::new();
        for a in &e.incident {
            for b in &e.incident {
                if a.branch == b.branch {
                    continue;
                }
                let (Ok(bj), Ok(bk)) = (c.branch_idx(a.branch), c.branch_idx(b.branch)) else { continue };
                if n.local_in(bj).is_none() || n.local_in(bk).is_none() {
                    continue;
                }
                if let Ok(u) = c.unfold_pair(e.id, a.branch, b.branch) {
                    out.push((bj, bk, u));
                }
            }
        }
        out
    }
}

fn corners(g: &MetricGraph) -> Vec<Point3> {
    let c = g.complex();
    c.vertex_ids().iter().filter_map(|&v| c.vertex_position(v)).collect()
}

fn context<'a>(g: &'a MetricGraph, u: &'a SolutionField, opts: &'a CheckOptions) -> Result<Ctx<'a>, MetricError> {
    u.check(g)?;
    Ok(Ctx { g, u: &u.values, opts, corners: corners(g) })
}

/// Per-site lists of `(node, j, k, edge, residual)` for every ordered pair.
fn transition_pairs(cx: &Ctx) -> Vec<Vec<(usize, usize, usize, RamEdgeId, f64)>> {
    let g = cx.g;
    let slack = cx.slope_slack();
    cx.sigma_sites()
        .par_iter()
        .map(|&i| {
            let mut out = Vec::new();
            for (bj, bk, unf) in cx.pairs(i) {
                let Some(sl) = cx.one_sided(i, &unf, bj, bk) else { continue };
                // upper test functions have normal slope sigma with dj <= sigma <= -dk;
                // H is convex, so the endpoints carry the maximum
                let (lo, hi) = (sl.dj, -sl.dk);
                let x = g.nodes()[i].local_in(bj).expect("member");
                let r = if lo <= hi + slack {
                    let (a, b) = (lo.min(hi), lo.max(hi));
                    cx.chart_h(bj, &unf.j, x, a, sl.t).max(cx.chart_h(bj, &unf.j, x, b, sl.t))
                } else {
                    f64::NEG_INFINITY
                };
                out.push((i, bj, bk, unf.edge, r));
            }
            out
        })
        .collect()
}

/// Subsolution residual of every ordered branch pair at every checked
/// ramification-set node, as `(node, j, k, residual)`.
pub fn transition_residuals(
    g: &MetricGraph,
    u: &SolutionField,
    opts: &CheckOptions,
) -> Result<Vec<(usize, BranchId, BranchId, f64)>, MetricError> {
    let cx = context(g, u, opts)?;
    let ids = g.complex().branches();
    Ok(transition_pairs(&cx)
        .into_iter()
        .flatten()
        .map(|(i, bj, bk, _, r)| (i, ids[bj].id, ids[bk].id, r))
        .collect())
}

/// `H(x, Du) <= tol` at interior sites; on the ramification set the largest
/// `H^j` over normal slopes admissible for upper `(j, k)` test functions.
pub fn check_subsolution(g: &MetricGraph, u: &SolutionField, opts: &CheckOptions) -> Result<CheckReport, MetricError> {
    let cx = context(g, u, opts)?;
    let dims = cx.dims();
    let mut records: Vec<SiteRecord> = cx
        .interior_sites()
        .par_iter()
        .filter_map(|&i| {
            let (bi, x) = g.nodes()[i].primary();
            let grad = lsq_gradient(&cx.ring1(bi, i)?, dims)?;
            Some(cx.record(i, bi, Condition::InteriorSub, cx.h(bi, x, grad)))
        })
        .collect();
    let sigma: Vec<SiteRecord> = transition_pairs(&cx)
        .into_iter()
        .filter_map(|pairs| {
            let (i, bj, bk, e, r) = pairs.into_iter().reduce(|a, b| if b.4 > a.4 { b } else { a })?;
            let mut rec = cx.record(i, bj, Condition::TransitionSub, r);
            rec.other = Some(g.complex().branches()[bk].id);
            rec.edge = Some(e);
            Some(rec)
        })
        .collect();
    records.extend(sigma);
    Ok(CheckReport::new(records, opts.tol))
}

/// `-H(x, p) <= tol` at interior sites, with `p` the better of the
/// steepest-descent covector and the least-squares gradient;
/// on the ramification set, for every branch `j` some partner `k` must pass
/// the unfolded test at the measured tangential slope.
pub fn check_supersolution(
    g: &MetricGraph,
    u: &SolutionField,
    opts: &CheckOptions,
    include_sigma: bool,
) -> Result<CheckReport, MetricError> {
    let cx = context(g, u, opts)?;
    let slack = cx.slope_slack();
    let mut records: Vec<SiteRecord> = cx
        .interior_sites()
        .par_iter()
        .filter_map(|&i| {
            let (bi, x) = g.nodes()[i].primary();
            let p = cx.descent(bi, i)?;
            let mut hp = cx.h(bi, x, p);
            if let Some(grad) = lsq_gradient(&cx.ring1(bi, i)?, cx.dims()) {
                hp = hp.max(cx.h(bi, x, grad));
            }
            Some(cx.record(i, bi, Condition::InteriorSuper, -hp))
        })
        .collect();
    if include_sigma {
        let sigma: Vec<Vec<SiteRecord>> = cx
            .sigma_sites()
            .par_iter()
            .map(|&i| {
                let mut per_j: BTreeMap<usize, (f64, usize, RamEdgeId)> = BTreeMap::new();
                for (bj, bk, unf) in cx.pairs(i) {
                    let Some(sl) = cx.one_sided(i, &unf, bj, bk) else { continue };
                    // lower test functions have normal slope sigma with -dk <= sigma <= dj
                    // and tangential slope between the backward and forward quotients
                    let (lo, hi) = (-sl.dk, sl.dj);
                    let x = g.nodes()[i].local_in(bj).expect("member");
                    let r = if lo <= hi + slack && sl.t_minus <= sl.t_plus + slack {
                        let (a, b) = (lo.min(hi), lo.max(hi));
                        let mut m = f64::INFINITY;
                        for s in 0..=64 {
                            let sg = a + (b - a) * s as f64 / 64.0;
                            m = m.min(cx.chart_h(bj, &unf.j, x, sg, sl.t));
                        }
                        if a < 0.0 && b > 0.0 {
                            m = m.min(cx.chart_h(bj, &unf.j, x, 0.0, sl.t));
                        }
                        -m
                    } else {
                        f64::NEG_INFINITY
                    };
                    let e = per_j.entry(bj).or_insert((f64::INFINITY, bk, unf.edge));
                    if r < e.0 {
                        *e = (r, bk, unf.edge);
                    }
                }
                per_j
                    .into_iter()
                    .map(|(bj, (r, bk, e))| {
                        let mut rec = cx.record(i, bj, Condition::TransitionSuper, r);
                        rec.other = Some(g.complex().branches()[bk].id);
                        rec.edge = Some(e);
                        rec
                    })
                    .collect()
            })
            .collect();
        records.extend(sigma.into_iter().flatten());
    }
    let mut report = CheckReport::new(records, opts.tol);
    if report.best_effort {
        report
            .notes
            .push("transition supersolution verdicts test only the measured tangential slope".into());
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzReport {
    pub max_ratio: f64,
    pub edge: Option<(usize, usize)>,
    pub constant: f64,
    pub bound: f64,
    pub edges_checked: usize,
    pub pass: bool,
}

impl fmt::Display for LipschitzReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "lipschitz max_ratio={:e} C={:e} bound={:e} edges={} {}",
            self.max_ratio,
            self.constant,
            self.bound,
            self.edges_checked,
            if self.pass { "PASS" } else { "FAIL" }
        )?;
        if let (false, Some((a, b))) = (self.pass, self.edge) {
            write!(f, " at nodes {a}-{b}")?;
        }
        Ok(())
    }
}

/// `|u(x) - u(y)| <= C (1 + slack) |x - y|` over every mesh edge.
pub fn check_lipschitz(g: &MetricGraph, u: &SolutionField, constant: f64, slack: f64) -> Result<LipschitzReport, MetricError> {
    u.check(g)?;
    let mut worst = (0.0f64, None);
    let mut checked = 0;
    for (bi, m) in g.meshes().iter().enumerate() {
        let mut keys: Vec<&usize> = m.adjacency.keys().collect();
        keys.sort_unstable();
        for &a in keys {
            for &b in &m.adjacency[&a] {
                if b <= a || !u.values[a].is_finite() || !u.values[b].is_finite() {
                    continue;
                }
                let (Some(la), Some(lb)) = (g.nodes()[a].local_in(bi), g.nodes()[b].local_in(bi)) else { continue };
                let d = dist2(la, lb);
                if d == 0.0 {
                    continue;
                }
                checked += 1;
                let r = (u.values[a] - u.values[b]).abs() / d;
                if r > worst.0 {
                    worst = (r, Some((a, b)));
                }
            }
        }
    }
    let bound = constant * (1.0 + slack);
    Ok(LipschitzReport {
        max_ratio: worst.0,
        edge: worst.1,
        constant,
        bound,
        edges_checked: checked,
        pass: worst.0 <= bound,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    /// `u <= v + tol` on the boundary nodes.
    pub precondition_met: bool,
    /// `None` when the precondition fails.
    pub pass: Option<bool>,
    /// Largest `u - v`, and where.
    pub worst: f64,
    pub node: Option<usize>,
    pub tol: f64,
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.pass {
            None => write!(f, "compare precondition unmet: u > v on the boundary (max u - v = {:e})", self.worst),
            Some(p) => write!(f, "compare max(u - v)={:e} tol={:e} {}", self.worst, self.tol, if p { "PASS" } else { "FAIL" }),
        }
    }
}

/// `u <= v + tol` everywhere, given `u <= v + tol` on the boundary.
pub fn compare_fields(
    g: &MetricGraph,
    u: &SolutionField,
    v: &SolutionField,
    tol: f64,
) -> Result<ComparisonReport, MetricError> {
    u.check(g)?;
    v.check(g)?;
    let diff = |i: usize| {
        let (a, b) = (u.values[i], v.values[i]);
        if a == b {
            0.0
        } else {
            a - b
        }
    };
    let max_over = |it: &mut dyn Iterator<Item = usize>| {
        it.fold((f64::NEG_INFINITY, None), |w, i| {
            let d = diff(i);
            if d > w.0 {
                (d, Some(i))
            } else {
                w
            }
        })
    };
    let (bw, bn) = max_over(&mut g.boundary_nodes().into_iter());
    if bw > tol {
        return Ok(ComparisonReport { precondition_met: false, pass: None, worst: bw, node: bn, tol });
    }
    let (w, n) = max_over(&mut (0..g.node_count()));
    Ok(ComparisonReport { precondition_met: true, pass: Some(w <= tol), worst: w, node: n, tol })
}
