//! Sampled checks of the structural hypotheses on a Hamiltonian family.

use std::fmt;

use super::HamiltonianFamily;
use crate::geometry::linalg::{add2, dist3, lerp3, scale2, Vec2};
use crate::geometry::{BranchId, ChartMap, RamEdgeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Hypothesis {
    /// Sampled modulus of continuity in `x`.
    Continuity,
    /// `H -> +inf` as `|p| -> inf`.
    Coercivity,
    /// Non-decreasing in the normal component for non-negative values, on the ramification set.
    NormalMonotonicity,
    /// All incident branches agree on the ramification set.
    CrossBranchEquality,
    /// Even in the normal component on the ramification set.
    NormalSymmetry,
}

impl Hypothesis {
    pub const ALL: [Hypothesis; 5] = [
        Hypothesis::Continuity,
        Hypothesis::Coercivity,
        Hypothesis::NormalMonotonicity,
        Hypothesis::CrossBranchEquality,
        Hypothesis::NormalSymmetry,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Hypothesis::Continuity => "continuity",
            Hypothesis::Coercivity => "coercivity",
            Hypothesis::NormalMonotonicity => "normal-monotonicity",
            Hypothesis::CrossBranchEquality => "cross-branch-equality",
            Hypothesis::NormalSymmetry => "normal-symmetry",
        }
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Where a worst violation was observed; `p` is in canonical chart
/// coordinates `(normal, tangential)` on the ramification set and
/// branch-local otherwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleSite {
    pub edge: Option<RamEdgeId>,
    pub branch: BranchId,
    pub x: Vec2,
    pub p: Vec2,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisVerdict {
    pub hypothesis: Hypothesis,
    pub pass: bool,
    pub worst: f64,
    pub site: Option<SampleSite>,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompatReport {
    pub verdicts: Vec<HypothesisVerdict>,
    pub tol: f64,
    pub notes: Vec<String>,
}

impl CompatReport {
    pub fn get(&self, h: Hypothesis) -> &HypothesisVerdict {
        self.verdicts
            .iter()
            .find(|v| v.hypothesis == h)
            .expect("every hypothesis has a verdict")
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

impl fmt::Display for CompatReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.verdicts {
            write!(
                f,
                "{:<22} {} worst={:e} samples={}",
                v.hypothesis.name(),
                if v.pass { "PASS" } else { "FAIL" },
                v.worst,
                v.samples
            )?;
            if let (false, Some(s)) = (v.pass, v.site) {
                write!(f, " at branch {} x=({}, {}) p=({}, {})", s.branch, s.x[0], s.x[1], s.p[0], s.p[1])?;
                if let Some(e) = s.edge {
                    write!(f, " edge {e}")?;
                }
            }
            writeln!(f)?;
        }
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        writeln!(f, "tol_H = {:e}", self.tol)
    }
}

struct Acc {
    worst: f64,
    site: Option<SampleSite>,
    samples: usize,
    failed_eval: bool,
}

impl Acc {
    fn new() -> Self {
        Acc { worst: 0.0, site: None, samples: 0, failed_eval: false }
    }

    fn add(&mut self, v: f64, site: SampleSite) {
        self.samples += 1;
        if !v.is_finite() {
            self.failed_eval = true;
            self.worst = f64::INFINITY;
            self.site = Some(site);
        } else if v > self.worst {
            self.worst = v;
            self.site = Some(site);
        }
    }
}

/// Covectors inside the sampling disk on a golden-angle spiral.
fn covectors(n: usize, radius: f64, dims: usize) -> Vec<Vec2> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let r = radius * ((i as f64 + 0.5) / n as f64).sqrt();
            if dims == 1 {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                [s * radius * (i as f64 + 0.5) / n as f64, 0.0]
            } else {
                let th = golden * i as f64;
                [r * th.cos(), r * th.sin()]
            }
        })
        .collect()
}

fn ring(radius: f64, dims: usize) -> Vec<Vec2> {
    if dims == 1 {
        return vec![[radius, 0.0], [-radius, 0.0]];
    }
    (0..16)
        .map(|k| {
            let th = std::f64::consts::TAU * k as f64 / 16.0;
            [radius * th.cos(), radius * th.sin()]
        })
        .collect()
}

/// Chart covector `(normal, tangential)` to branch-local coordinates.
fn to_local(m: &ChartMap, p: Vec2) -> Vec2 {
    add2(scale2(m.normal, p[0]), scale2(m.tangent, p[1]))
}

pub(super) fn check(h: &HamiltonianFamily, n_samples: usize) -> CompatReport {
    let n = n_samples.max(2);
    let c = h.complex().clone();
    let dims = c.branch_dim();
    let radius = h.radius();
    let cov = covectors(n, radius, dims);
    let mut scale: f64 = 0.0;
    let mut notes = Vec::new();

    let mut cont = Acc::new();
    let mut coer = Acc::new();
    let mut mono = Acc::new();
    let mut equal = Acc::new();
    let mut sym = Acc::new();

    let mut hval = |bi: usize, x: Vec2, p: Vec2| {
        let v = h.h_idx(bi, x, p);
        if v.is_finite() {
            scale = scale.max(v.abs());
        }
        v
    };

    // coercivity and continuity over every branch
    let delta = 1e-2 * c.diameter().max(1e-300);
    for (bi, b) in c.branches().iter().enumerate() {
        let tol = c.tolerances().len;
        for x in super::branch_samples(b, n) {
            let site = |p: Vec2| SampleSite { edge: None, branch: b.id, x, p };
            let inner = cov.iter().map(|&p| hval(bi, x, p)).fold(f64::NEG_INFINITY, f64::max);
            let m2 = ring(2.0 * radius, dims).into_iter().map(|p| hval(bi, x, p)).fold(f64::INFINITY, f64::min);
            let m4 = ring(4.0 * radius, dims).into_iter().map(|p| hval(bi, x, p)).fold(f64::INFINITY, f64::min);
            let v = 0f64.max(inner - m2).max(m2 - m4);
            let v = if inner.is_finite() && m2.is_finite() && m4.is_finite() { v } else { f64::NAN };
            coer.add(v, site([2.0 * radius, 0.0]));

            for dir in [[1.0, 0.0], [0.0, 1.0]] {
                if dims == 1 && dir[1] != 0.0 {
                    continue;
                }
                let far = add2(x, scale2(dir, delta));
                let near = add2(x, scale2(dir, 0.25 * delta));
                if !b.contains(far, tol) || !b.contains(near, tol) {
                    continue;
                }
                let (mut w_far, mut w_near): (f64, f64) = (0.0, 0.0);
                for &p in &cov {
                    let h0 = hval(bi, x, p);
                    w_far = w_far.max((hval(bi, far, p) - h0).abs());
                    w_near = w_near.max((hval(bi, near, p) - h0).abs());
                }
                cont.add((w_near - 0.5 * w_far).max(0.0), site(dir));
            }
        }
    }

    // ramification-set hypotheses in canonical chart coordinates
    for e in c.ram_edges() {
        let points: Vec<_> = if e.vertices.len() == 2 {
            let a = c.vertex_position(e.vertices[0]).unwrap_or_default();
            let b = c.vertex_position(e.vertices[1]).unwrap_or_default();
            if dist3(a, b) == 0.0 {
                continue;
            }
            (0..n).map(|i| lerp3(a, b, (i as f64 + 0.5) / n as f64)).collect()
        } else {
            vec![c.vertex_position(e.vertices[0]).unwrap_or_default()]
        };
        for x in points {
            let chart = match c.canonical_chart(x) {
                Ok(ch) => ch,
                Err(err) => {
                    notes.push(format!("edge {}: {err}", e.id));
                    continue;
                }
            };
            let maps = &chart.maps;
            let bidx: Vec<usize> = maps.iter().map(|m| c.branch_idx(m.branch).unwrap_or(0)).collect();
            for (mi, m) in maps.iter().enumerate() {
                let bi = bidx[mi];
                let xl = m.origin;
                for &p in &cov {
                    let site = SampleSite { edge: Some(e.id), branch: m.branch, x: xl, p };
                    // chart covectors use (normal, tangential); flip the normal part
                    let a = hval(bi, xl, to_local(m, p));
                    let b = hval(bi, xl, to_local(m, [-p[0], p[1]]));
                    sym.add((a - b).abs(), site);
                    for (mk, other) in maps.iter().enumerate().skip(mi + 1) {
                        let hk = hval(bidx[mk], other.origin, to_local(other, p));
                        equal.add((a - hk).abs(), site);
                    }
                }
                let tangentials: Vec<f64> = if dims == 1 {
                    vec![0.0]
                } else {
                    cov.iter().map(|p| p[1]).collect()
                };
                for pt in tangentials {
                    let steps = 8;
                    let mut prev = hval(bi, xl, to_local(m, [0.0, pt]));
                    for s in 1..=steps {
                        let pn = radius * s as f64 / steps as f64;
                        let cur = hval(bi, xl, to_local(m, [pn, pt]));
                        let site = SampleSite { edge: Some(e.id), branch: m.branch, x: xl, p: [pn, pt] };
                        mono.add((prev - cur).max(0.0), site);
                        prev = cur;
                    }
                }
            }
        }
    }

    let tol = 1e-8 * (1.0 + scale);
    let verdict = |hyp: Hypothesis, a: Acc| HypothesisVerdict {
        hypothesis: hyp,
        pass: !a.failed_eval && a.worst <= tol,
        worst: a.worst,
        site: a.site,
        samples: a.samples,
    };
    CompatReport {
        verdicts: vec![
            verdict(Hypothesis::Continuity, cont),
            verdict(Hypothesis::Coercivity, coer),
            verdict(Hypothesis::NormalMonotonicity, mono),
            verdict(Hypothesis::CrossBranchEquality, equal),
            verdict(Hypothesis::NormalSymmetry, sym),
        ],
        tol,
        notes,
    }
}
