//! Arc construction, weights and point attachment.

use std::collections::HashMap;

use rayon::prelude::*;

use super::mesh;
use super::{Arcs, Attach, MeshParams, MetricError, MetricGraph, QueryPoint};
use crate::geometry::linalg::{dist2, lerp2, Vec2};
use crate::geometry::polygon::{self, PointClass};
use crate::geometry::{ChartMap, LepComplex};
use crate::hamiltonian::HamiltonianFamily;

/// Uniform bucket grid over branch-local coordinates.
#[derive(Clone, Debug, Default)]
pub(crate) struct Grid {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<(usize, Vec2)>>,
}

impl Grid {
    fn new(cell: f64) -> Self {
        Grid { cell, buckets: HashMap::new() }
    }

    fn key(&self, p: Vec2) -> (i64, i64) {
        ((p[0] / self.cell).floor() as i64, (p[1] / self.cell).floor() as i64)
    }

    fn insert(&mut self, id: usize, p: Vec2) {
        let k = self.key(p);
        self.buckets.entry(k).or_default().push((id, p));
    }

    /// Nodes within distance `r` of `p`, with their coordinates.
    pub fn near(&self, p: Vec2, r: f64) -> Vec<(usize, Vec2)> {
        let (lo, hi) = (self.key([p[0] - r, p[1] - r]), self.key([p[0] + r, p[1] + r]));
        let mut out = Vec::new();
        for i in lo.0..=hi.0 {
            for j in lo.1..=hi.1 {
                if let Some(b) = self.buckets.get(&(i, j)) {
                    out.extend(b.iter().filter(|(_, q)| dist2(p, *q) <= r).copied());
                }
            }
        }
        out.sort_by_key(|e| e.0);
        out
    }
}

/// Gauge integral along the straight piece `a -> b` of branch `bi`.
pub(crate) fn piece_weight(h: &HamiltonianFamily, bi: usize, a: Vec2, b: Vec2) -> Result<f64, MetricError> {
    let q = [(b[0] - a[0]) / 4.0, (b[1] - a[1]) / 4.0];
    if q == [0.0, 0.0] {
        return Ok(0.0);
    }
    let mut w = 0.0;
    for i in 0..4 {
        let x = lerp2(a, b, (i as f64 + 0.5) / 4.0);
        w += h.gauge_idx(bi, x, q)?;
    }
    Ok(w)
}

fn pair_weights(h: &HamiltonianFamily, bi: usize, a: Vec2, b: Vec2) -> Result<(f64, f64), MetricError> {
    let ab = piece_weight(h, bi, a, b)?;
    let ba = if h.is_eikonal() { ab } else { piece_weight(h, bi, b, a)? };
    Ok((ab, ba))
}

fn segment_inside(c: &LepComplex, bi: usize, a: Vec2, b: Vec2) -> bool {
    let br = &c.branches()[bi];
    br.contains_segment(a, b, c.tolerances().len.max(1e-12))
}

/// The two maps of an unfolded branch pair with the edge length.
#[derive(Clone, Debug)]
struct Pair {
    bj: usize,
    bk: usize,
    mj: ChartMap,
    mk: ChartMap,
    len: f64,
}

fn unfolded_pairs(c: &LepComplex) -> Result<Vec<Pair>, MetricError> {
    let mut out = Vec::new();
    if c.branch_dim() != 2 {
        return Ok(out);
    }
    for e in c.ram_edges() {
        let (Some(a), Some(b)) = (
            c.vertex_position(e.vertices[0]),
            e.vertices.get(1).and_then(|&v| c.vertex_position(v)),
        ) else {
            continue;
        };
        let len = crate::geometry::linalg::dist3(a, b);
        for x in 0..e.incident.len() {
            for y in (x + 1)..e.incident.len() {
                let (j, k) = (e.incident[x].branch, e.incident[y].branch);
                let u = c.unfold_pair(e.id, j, k)?;
                out.push(Pair {
                    bj: c.branch_idx(j)?,
                    bk: c.branch_idx(k)?,
                    mj: u.j,
                    mk: u.k,
                    len,
                });
            }
        }
    }
    Ok(out)
}

/// Straight unfolded connection from `a` (branch `bj`) to `b` (branch `bk`)
/// through the edge: returns the crossing point in both frames.
fn crossing(p: &Pair, a: Vec2, b: Vec2, tol: f64) -> Option<(Vec2, Vec2, f64)> {
    let ma = p.mj.forward(a);
    let mb = p.mk.forward(b);
    if ma[0] <= tol || mb[0] <= tol {
        return None;
    }
    let s = ma[0] / (ma[0] + mb[0]);
    let t = ma[1] + s * (mb[1] - ma[1]);
    if t < -tol || t > p.len + tol {
        return None;
    }
    let t = t.clamp(0.0, p.len);
    let len = ((ma[0] + mb[0]).powi(2) + (ma[1] - mb[1]).powi(2)).sqrt();
    Some((p.mj.inverse([0.0, t]), p.mk.inverse([0.0, t]), len))
}

/// Weights `a -> b` and `b -> a` of an unfolded crossing connection.
fn cross_weights(
    g: &HamiltonianFamily,
    c: &LepComplex,
    p: &Pair,
    a: Vec2,
    b: Vec2,
    radius: f64,
) -> Result<Option<(f64, f64)>, MetricError> {
    let tol = c.tolerances().len.max(1e-12);
    let Some((xj, xk, len)) = crossing(p, a, b, tol) else {
        return Ok(None);
    };
    if len > radius || !segment_inside(c, p.bj, a, xj) || !segment_inside(c, p.bk, xk, b) {
        return Ok(None);
    }
    let (a1, a2) = pair_weights(g, p.bj, a, xj)?;
    let (b1, b2) = pair_weights(g, p.bk, xk, b)?;
    Ok(Some((a1 + b1, b2 + a2)))
}

fn csr(n: usize, arcs: &[(usize, usize, f64)]) -> Arcs {
    let mut offsets = vec![0usize; n + 1];
    for &(u, _, _) in arcs {
        offsets[u + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let mut fill = offsets.clone();
    let mut targets = vec![0u32; arcs.len()];
    let mut weights = vec![0.0; arcs.len()];
    for &(u, v, w) in arcs {
        targets[fill[u]] = v as u32;
        weights[fill[u]] = w;
        fill[u] += 1;
    }
    Arcs { offsets, targets, weights }
}

pub(super) fn build(h: &HamiltonianFamily, params: MeshParams) -> Result<MetricGraph, MetricError> {
    params.check()?;
    let c = h.complex().clone();
    let placement = mesh::place(&c, &params)?;
    let nodes = placement.nodes;
    let meshes = placement.meshes;
    let radius = params.radius();
    let eps = 1e-12 * radius;

    let mut grids = Vec::with_capacity(meshes.len());
    for (bi, m) in meshes.iter().enumerate() {
        let mut grid = Grid::new(radius);
        for &id in &m.nodes {
            grid.insert(id, nodes[id].local_in(bi).expect("member of its branch"));
        }
        grids.push(grid);
    }

    // (u, v, w(u->v), w(v->u)) with u < v
    let mut edges: Vec<(usize, usize, f64, f64)> = Vec::new();
    for (bi, m) in meshes.iter().enumerate() {
        let grid = &grids[bi];
        let found: Vec<Vec<(usize, usize, f64, f64)>> = m
            .nodes
            .par_iter()
            .map(|&u| {
                let pu = nodes[u].local_in(bi).expect("member");
                let mut out = Vec::new();
                for (v, pv) in grid.near(pu, radius + eps) {
                    if v <= u || !segment_inside(&c, bi, pu, pv) {
                        continue;
                    }
                    let (w1, w2) = pair_weights(h, bi, pu, pv)?;
                    out.push((u, v, w1, w2));
                }
                Ok(out)
            })
            .collect::<Result<_, MetricError>>()?;
        edges.extend(found.into_iter().flatten());
    }

    for p in unfolded_pairs(&c)? {
        let side = |bi: usize, map: &ChartMap| -> Vec<(usize, Vec2)> {
            meshes[bi]
                .nodes
                .iter()
                .filter_map(|&id| {
                    let l = nodes[id].local_in(bi)?;
                    let m = map.forward(l);
                    (m[0] > 0.0 && m[0] <= radius && m[1] >= -radius && m[1] <= p.len + radius)
                        .then_some((id, l))
                })
                .collect()
        };
        let sj = side(p.bj, &p.mj);
        let sk = side(p.bk, &p.mk);
        let found: Vec<Vec<(usize, usize, f64, f64)>> = sj
            .par_iter()
            .map(|&(u, pu)| {
                let mut out = Vec::new();
                for &(v, pv) in &sk {
                    if let Some((w1, w2)) = cross_weights(h, &c, &p, pu, pv, radius + eps)? {
                        out.push(if u < v { (u, v, w1, w2) } else { (v, u, w2, w1) });
                    }
                }
                Ok(out)
            })
            .collect::<Result<_, MetricError>>()?;
        edges.extend(found.into_iter().flatten());
    }

    edges.sort_by_key(|e| (e.0, e.1));
    let mut merged: Vec<(usize, usize, f64, f64)> = Vec::with_capacity(edges.len());
    for e in edges {
        match merged.last_mut() {
            Some(last) if last.0 == e.0 && last.1 == e.1 => {
                last.2 = last.2.min(e.2);
                last.3 = last.3.min(e.3);
            }
            _ => merged.push(e),
        }
    }
    let mut fwd = Vec::with_capacity(2 * merged.len());
    let mut rev = Vec::with_capacity(2 * merged.len());
    for &(u, v, wuv, wvu) in &merged {
        fwd.push((u, v, wuv));
        fwd.push((v, u, wvu));
        rev.push((v, u, wuv));
        rev.push((u, v, wvu));
    }
    let n = nodes.len();
    Ok(MetricGraph {
        hamiltonian: h.clone(),
        params,
        arcs: csr(n, &fwd),
        reverse: csr(n, &rev),
        nodes,
        meshes,
        grids,
    })
}

fn in_triangle(p: Vec2, a: Vec2, b: Vec2, c: Vec2, tol: f64) -> bool {
    let d = polygon::signed_area(&[a, b, c]);
    if d == 0.0 {
        return false;
    }
    let s1 = polygon::signed_area(&[p, b, c]) / d;
    let s2 = polygon::signed_area(&[a, p, c]) / d;
    let s3 = 1.0 - s1 - s2;
    s1 >= -tol && s2 >= -tol && s3 >= -tol
}

pub(super) fn attach(g: &MetricGraph, q: &QueryPoint) -> Result<Attach, MetricError> {
    let c = g.complex();
    let bi = c.branch_idx(q.branch)?;
    let br = &c.branches()[bi];
    let tol = c.tolerances().len.max(1e-12);
    let p = q.local;
    let off_branch = MetricError::PointNotOnComplex { branch: q.branch, local: p };
    if !p[0].is_finite() || !p[1].is_finite() || br.classify(p, tol) == PointClass::Outside {
        return Err(off_branch);
    }
    let radius = g.params.radius();
    let near = g.grids[bi].near(p, radius * (1.0 + 1e-12));
    if let Some(&(id, _)) = near.iter().find(|(_, l)| dist2(*l, p) <= tol) {
        return Ok(Attach::Node(id));
    }

    let mesh = &g.meshes[bi];
    let mut cand: Vec<usize> = near.iter().map(|e| e.0).collect();
    let local = |id: usize| g.nodes[id].local_in(bi);
    if c.branch_dim() == 2 {
        let scale = 1e-9;
        if let Some(t) = mesh.triangles.iter().find(|t| {
            let (a, b, cc) = (local(t[0]), local(t[1]), local(t[2]));
            matches!((a, b, cc), (Some(a), Some(b), Some(cc)) if in_triangle(p, a, b, cc, scale))
        }) {
            for &v in t {
                cand.push(v);
                if let Some(adj) = mesh.adjacency.get(&v) {
                    cand.extend(adj.iter().copied());
                }
            }
        }
    } else {
        // bracketing nodes along the segment
        for w in mesh.nodes.windows(2) {
            let (a, b) = (local(w[0]), local(w[1]));
            if let (Some(a), Some(b)) = (a, b) {
                if (a[0] - p[0]) * (b[0] - p[0]) <= 0.0 {
                    cand.extend([w[0], w[1]]);
                }
            }
        }
    }
    cand.sort_unstable();
    cand.dedup();

    let h = g.hamiltonian();
    let mut links = Vec::new();
    for id in cand {
        let Some(l) = local(id) else { continue };
        if !segment_inside(c, bi, p, l) {
            continue;
        }
        let (w_out, w_in) = pair_weights(h, bi, p, l)?;
        links.push((id, w_out, w_in));
    }
    for pair in unfolded_pairs(c)? {
        let (this, other, map_this, map_other, flip) = if pair.bj == bi {
            (pair.bj, pair.bk, pair.mj, pair.mk, false)
        } else if pair.bk == bi {
            (pair.bk, pair.bj, pair.mk, pair.mj, true)
        } else {
            continue;
        };
        let m = map_this.forward(p);
        if m[0] <= tol || m[0] > radius {
            continue;
        }
        let oriented = if flip {
            Pair { bj: this, bk: other, mj: map_this, mk: map_other, len: pair.len }
        } else {
            pair.clone()
        };
        for &id in &g.meshes[other].nodes {
            let Some(l) = g.nodes[id].local_in(other) else { continue };
            let mo = map_other.forward(l);
            if mo[0] <= 0.0 || mo[0] > radius {
                continue;
            }
            if let Some((w_out, w_in)) = cross_weights(h, c, &oriented, p, l, radius * (1.0 + 1e-12))? {
                links.push((id, w_out, w_in));
            }
        }
    }
    if links.is_empty() {
        // nothing within reach: fall back to the closest node of the branch
        let best = mesh
            .nodes
            .iter()
            .filter_map(|&id| local(id).map(|l| (id, dist2(l, p))))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((id, _)) = best {
            let l = local(id).expect("member");
            let (w_out, w_in) = pair_weights(h, bi, p, l)?;
            links.push((id, w_out, w_in));
        }
    }
    Ok(Attach::Links { bi, local: p, links })
}

/// Weight of a direct link between two attached points, when they are
/// within reach of each other.
pub(super) fn direct_link(g: &MetricGraph, x: &Attach, y: &Attach) -> Result<Option<f64>, MetricError> {
    let (Attach::Links { bi: b1, local: p1, .. }, Attach::Links { bi: b2, local: p2, .. }) = (x, y) else {
        return Ok(None);
    };
    let c = g.complex();
    let h = g.hamiltonian();
    let radius = g.params.radius() * (1.0 + 1e-12);
    if b1 == b2 {
        if dist2(*p1, *p2) <= radius && segment_inside(c, *b1, *p1, *p2) {
            return Ok(Some(piece_weight(h, *b1, *p1, *p2)?));
        }
        return Ok(None);
    }
    let mut best: Option<f64> = None;
    for pair in unfolded_pairs(c)? {
        let w = if pair.bj == *b1 && pair.bk == *b2 {
            cross_weights(h, c, &pair, *p1, *p2, radius)?.map(|w| w.0)
        } else if pair.bj == *b2 && pair.bk == *b1 {
            cross_weights(h, c, &pair, *p2, *p1, radius)?.map(|w| w.1)
        } else {
            None
        };
        if let Some(w) = w {
            best = Some(best.map_or(w, |b| b.min(w)));
        }
    }
    Ok(best)
}
