//! Dirichlet problem on a complex, solved by the representation formula
//! `u(x) = min { g(y) + S(y, x) : y in the boundary }` on the metric graph.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::linalg::{dist3, Vec2};
use crate::geometry::{BranchId, FacetRef, LepComplex, VertexId};
use crate::hamiltonian::{branch_samples, Convexity, HamiltonianError, HamiltonianFamily, Kind};
use crate::metric::{MeshParams, MetricError, MetricGraph, NodeKind};

pub use crate::metric::SolutionField;

/// Boundary pairs checked exhaustively before switching to a random subsample.
pub const MAX_COMPAT_PAIRS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DirichletError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error("no boundary nodes: the excluded boundary is empty")]
    NoBoundary,
    #[error("no boundary value for facet {0}")]
    MissingBoundaryValue(FacetRef),
    #[error("no boundary sample for vertex {0}")]
    MissingSample(VertexId),
    #[error("non-finite boundary value {value} at node {node}")]
    NonFiniteBoundary { node: usize, value: f64 },
    #[error("Hamiltonian declared non-convex")]
    NotConvex,
    #[error("strict subsolution hypothesis not satisfied: {0}")]
    StrictSubsolution(String),
    #[error("boundary data incompatible: g(x) - g(y) - S(y, x) = {worst:e} exceeds {tol:e}")]
    BoundaryIncompatible { worst: f64, tol: f64 },
}

/// Value of `g` on one boundary facet.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryValue {
    Const(f64),
    /// Sum of `c * x^a * y^b * z^d` over `(c, a, b, d)` in ambient coordinates.
    Poly(Vec<(f64, u32, u32, u32)>),
    /// Linear interpolation of per-vertex samples.
    Samples,
}

/// Boundary data: a default, per-facet overrides and vertex samples.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundaryData {
    pub default: Option<BoundaryValue>,
    pub facets: BTreeMap<FacetRef, BoundaryValue>,
    pub samples: BTreeMap<VertexId, f64>,
}

impl BoundaryData {
    pub fn constant(c: f64) -> Self {
        BoundaryData { default: Some(BoundaryValue::Const(c)), ..Default::default() }
    }

    pub fn poly(terms: Vec<(f64, u32, u32, u32)>) -> Self {
        BoundaryData { default: Some(BoundaryValue::Poly(terms)), ..Default::default() }
    }

    fn spec_for(&self, f: Option<FacetRef>) -> Result<&BoundaryValue, DirichletError> {
        f.and_then(|f| self.facets.get(&f))
            .or(self.default.as_ref())
            .ok_or(DirichletError::MissingBoundaryValue(f.unwrap_or(FacetRef::new(0, 0))))
    }

    fn sample(&self, v: VertexId) -> Result<f64, DirichletError> {
        self.samples.get(&v).copied().ok_or(DirichletError::MissingSample(v))
    }

    /// `g` at every boundary node of a graph, as `(node, value)`.
    pub fn node_values(&self, g: &MetricGraph) -> Result<Vec<(usize, f64)>, DirichletError> {
        let c = g.complex();
        let mut out = Vec::new();
        for (i, node) in g.nodes().iter().enumerate() {
            if !node.boundary {
                continue;
            }
            let p = node.ambient;
            let value = match node.kind {
                NodeKind::Vertex(v) => {
                    let facet = boundary_facets(c).find(|(_, vs)| vs.contains(&v)).map(|(f, _)| f);
                    match self.spec_for(facet)? {
                        BoundaryValue::Samples => self.sample(v)?,
                        other => eval_closed(other, p),
                    }
                }
                NodeKind::Facet { a, b, .. } => {
                    let facet = boundary_facets(c)
                        .find(|(_, vs)| vs.contains(&a) && vs.contains(&b))
                        .map(|(f, _)| f);
                    match self.spec_for(facet)? {
                        BoundaryValue::Samples => {
                            let pa = c.vertex_position(a).expect("vertex");
                            let pb = c.vertex_position(b).expect("vertex");
                            let t = dist3(pa, p) / dist3(pa, pb);
                            (1.0 - t) * self.sample(a)? + t * self.sample(b)?
                        }
                        other => eval_closed(other, p),
                    }
                }
                NodeKind::Interior(_) => eval_closed(self.spec_for(None)?, p),
            };
            if !value.is_finite() {
                return Err(DirichletError::NonFiniteBoundary { node: i, value });
            }
            out.push((i, value));
        }
        Ok(out)
    }
}

fn eval_closed(v: &BoundaryValue, p: [f64; 3]) -> f64 {
    match v {
        BoundaryValue::Const(c) => *c,
        BoundaryValue::Poly(t) => t
            .iter()
            .map(|&(c, a, b, d)| c * p[0].powi(a as i32) * p[1].powi(b as i32) * p[2].powi(d as i32))
            .sum(),
        BoundaryValue::Samples => f64::NAN,
    }
}

fn boundary_facets(c: &LepComplex) -> impl Iterator<Item = (FacetRef, Vec<VertexId>)> + '_ {
    c.boundary_facets().iter().map(|f| {
        let vs = c.branch(f.branch).map(|b| b.facet_vertices(f.facet as usize)).unwrap_or_default();
        (*f, vs)
    })
}

/// Flags that let the solver run when a hypothesis check does not pass.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Overrides {
    pub strict_subsolution: bool,
    pub boundary_compat: bool,
}

#[derive(Clone, Debug)]
pub struct DirichletProblem {
    pub hamiltonian: HamiltonianFamily,
    pub g: BoundaryData,
    pub params: MeshParams,
    pub overrides: Overrides,
    /// Seed for subsampled checks.
    pub seed: u64,
}

impl DirichletProblem {
    pub fn new(hamiltonian: HamiltonianFamily, g: BoundaryData, params: MeshParams) -> Self {
        DirichletProblem { hamiltonian, g, params, overrides: Overrides::default(), seed: 0 }
    }

    pub fn complex(&self) -> &LepComplex {
        self.hamiltonian.complex()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

/// Outcome of the strict-subsolution check.
#[derive(Clone, Debug, PartialEq)]
pub struct StrictSubsolutionReport {
    pub verdict: Verdict,
    /// `min f` (eikonal) or `max H(x, 0)` (generic).
    pub worst: f64,
    pub location: Option<(BranchId, Vec2)>,
    pub message: String,
}

const SAMPLES_PER_BRANCH: usize = 256;

/// Existence of a strict subsolution, tested with constant functions.
pub fn check_strict_subsolution(problem: &DirichletProblem) -> StrictSubsolutionReport {
    let h = &problem.hamiltonian;
    let c = h.complex();
    match h.kind() {
        Kind::Eikonal { .. } => {
            let mut worst = (f64::INFINITY, None);
            for (bi, b) in c.branches().iter().enumerate() {
                for x in branch_samples(b, SAMPLES_PER_BRANCH) {
                    let f = h.weight_idx(bi, x);
                    if f < worst.0 {
                        worst = (f, Some((b.id, x)));
                    }
                }
            }
            let pass = worst.0 > 0.0;
            StrictSubsolutionReport {
                verdict: if pass { Verdict::Pass } else { Verdict::Fail },
                worst: worst.0,
                location: worst.1,
                message: if pass {
                    format!("min f = {:e} > 0", worst.0)
                } else {
                    let (b, x) = worst.1.expect("sampled");
                    format!("f = {:e} at branch {b} ({}, {})", worst.0, x[0], x[1])
                },
            }
        }
        Kind::Generic { .. } => {
            let r = h.radius();
            let mut worst = (f64::NEG_INFINITY, None);
            let mut blocked = None;
            for (bi, b) in c.branches().iter().enumerate() {
                for x in branch_samples(b, 64) {
                    let h0 = h.h_idx(bi, x, [0.0, 0.0]);
                    if h0 > worst.0 {
                        worst = (h0, Some((b.id, x)));
                    }
                    if h0 >= 0.0 && blocked.is_none() && min_over_disk(h, bi, x, r) >= 0.0 {
                        blocked = Some((b.id, x));
                    }
                }
            }
            let (verdict, message) = if worst.0 < 0.0 {
                (Verdict::Pass, format!("max H(x, 0) = {:e} < 0", worst.0))
            } else if let Some((b, x)) = blocked {
                (Verdict::Fail, format!("H(x, p) >= 0 for every sampled p at branch {b} ({}, {})", x[0], x[1]))
            } else {
                let (b, x) = worst.1.expect("sampled");
                (
                    Verdict::Inconclusive,
                    format!("H(x, 0) = {:e} at branch {b} ({}, {}); constant test functions do not certify", worst.0, x[0], x[1]),
                )
            };
            StrictSubsolutionReport { verdict, worst: worst.0, location: worst.1, message }
        }
    }
}

fn min_over_disk(h: &HamiltonianFamily, bi: usize, x: Vec2, r: f64) -> f64 {
    let dims = h.complex().branch_dim();
    let angles = if dims == 1 { 2 } else { 32 };
    let mut best = h.h_idx(bi, x, [0.0, 0.0]);
    for ring in 1..=16 {
        let rho = r * ring as f64 / 16.0;
        for k in 0..angles {
            let th = std::f64::consts::TAU * k as f64 / angles as f64;
            best = best.min(h.h_idx(bi, x, [rho * th.cos(), rho * th.sin()]));
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryCompatReport {
    pub pass: bool,
    /// Largest `g(x) - g(y) - S(y, x)` over checked pairs.
    pub worst: f64,
    /// `(x, y)` node pair attaining it.
    pub pair: Option<(usize, usize)>,
    pub tol: f64,
    pub pairs_checked: usize,
    pub subsampled: bool,
    pub warnings: Vec<String>,
}

/// Checks `g(x) - g(y) <= S(y, x)` over boundary node pairs.
pub fn check_boundary_compat(
    problem: &DirichletProblem,
    graph: &MetricGraph,
) -> Result<BoundaryCompatReport, DirichletError> {
    let values = problem.g.node_values(graph)?;
    if values.is_empty() {
        return Err(DirichletError::NoBoundary);
    }
    let tol = 1e-9 + graph.params().h * problem.hamiltonian.lipschitz_constant();
    let n = values.len();
    let mut sources: Vec<usize> = (0..n).collect();
    let subsampled = n * n > MAX_COMPAT_PAIRS;
    if subsampled {
        let mut rng = ChaCha8Rng::seed_from_u64(problem.seed);
        sources.shuffle(&mut rng);
        sources.truncate(MAX_COMPAT_PAIRS.div_ceil(n));
        sources.sort_unstable();
    }
    let per_source: Vec<(f64, Option<(usize, usize)>)> = sources
        .par_iter()
        .map(|&k| {
            let (y, gy) = values[k];
            let dist = graph.distances_from_node(y);
            let mut worst = (f64::NEG_INFINITY, None);
            for &(x, gx) in &values {
                if x == y {
                    continue;
                }
                let gap = gx - gy - dist[x];
                if gap > worst.0 {
                    worst = (gap, Some((x, y)));
                }
            }
            worst
        })
        .collect();
    let (worst, pair) = per_source
        .into_iter()
        .fold((f64::NEG_INFINITY, None), |a, b| if b.0 > a.0 { b } else { a });
    let worst = if pair.is_none() { 0.0 } else { worst };
    let mut warnings = Vec::new();
    if worst > 1e-9 && worst <= tol {
        warnings.push(format!("boundary compatibility violated by {worst:e}, within discretization slack {tol:e}"));
    }
    Ok(BoundaryCompatReport {
        pass: worst <= tol,
        worst,
        pair,
        tol,
        pairs_checked: sources.len() * n.saturating_sub(1),
        subsampled,
        warnings,
    })
}

/// Solver output with the graph it lives on and the hypothesis reports.
#[derive(Clone, Debug)]
pub struct DirichletSolution {
    pub graph: MetricGraph,
    pub field: SolutionField,
    pub strict: StrictSubsolutionReport,
    pub compat: BoundaryCompatReport,
    pub warnings: Vec<String>,
}

pub fn solve_dirichlet(problem: &DirichletProblem) -> Result<DirichletSolution, DirichletError> {
    let graph = MetricGraph::build(&problem.hamiltonian, problem.params)?;
    solve_on_graph(problem, graph)
}

/// Solves on a prebuilt graph, which must come from `problem.hamiltonian`.
pub fn solve_on_graph(problem: &DirichletProblem, graph: MetricGraph) -> Result<DirichletSolution, DirichletError> {
    let mut warnings = Vec::new();
    match problem.hamiltonian.convexity() {
        Convexity::None => return Err(DirichletError::NotConvex),
        Convexity::Weak => warnings.push("Hamiltonian is convex but not strictly convex".to_string()),
        Convexity::Strict => {}
    }
    let strict = check_strict_subsolution(problem);
    if strict.verdict != Verdict::Pass {
        if !problem.overrides.strict_subsolution {
            return Err(DirichletError::StrictSubsolution(strict.message.clone()));
        }
        warnings.push(format!("strict subsolution check {} overridden: {}", strict.verdict, strict.message));
    }
    let compat = check_boundary_compat(problem, &graph)?;
    warnings.extend(compat.warnings.iter().cloned());
    if !compat.pass {
        if !problem.overrides.boundary_compat {
            return Err(DirichletError::BoundaryIncompatible { worst: compat.worst, tol: compat.tol });
        }
        warnings.push(format!("boundary compatibility overridden: worst gap {:e}", compat.worst));
    }
    let seeds = problem.g.node_values(&graph)?;
    let mut field = graph.node_field(&seeds)?;
    field.provenance = crate::io::hash_hex(&format!(
        "{}|g={:?}|overrides={:?}",
        field.provenance, problem.g, problem.overrides
    ));
    let unreachable = field.values.iter().filter(|v| v.is_infinite()).count();
    if unreachable > 0 {
        warnings.push(format!("{unreachable} nodes are not connected to the boundary and hold +inf"));
    }
    Ok(DirichletSolution { graph, field, strict, compat, warnings })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geometry::ComplexBuilder;
    use crate::metric::QueryPoint;

    fn square() -> Arc<LepComplex> {
        Arc::new(crate::geometry::unit_square())
    }

    #[test]
    fn strict_subsolution_eikonal() {
        let h = HamiltonianFamily::eikonal_const(square(), 1.0).unwrap();
        let p = DirichletProblem::new(h, BoundaryData::constant(0.0), MeshParams::new(0.25, 1));
        assert_eq!(check_strict_subsolution(&p).verdict, Verdict::Pass);

        let mut fields = BTreeMap::new();
        fields.insert(BranchId(1), crate::hamiltonian::WeightField::VertexSamples(vec![0.0, 1.0, 1.0, 1.0]));
        let h = HamiltonianFamily::eikonal(square(), fields, None).unwrap();
        let p = DirichletProblem::new(h, BoundaryData::constant(0.0), MeshParams::new(0.25, 1));
        let r = check_strict_subsolution(&p);
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.location, Some((BranchId(1), [0.0, 0.0])));
    }

    #[test]
    fn strict_subsolution_generic() {
        let h = HamiltonianFamily::generic(square(), Convexity::Strict, "p2+1", |_, _, p| p[0] * p[0] + p[1] * p[1] + 1.0);
        let p = DirichletProblem::new(h, BoundaryData::constant(0.0), MeshParams::new(0.25, 1));
        assert_eq!(check_strict_subsolution(&p).verdict, Verdict::Fail);
        let h = HamiltonianFamily::generic(square(), Convexity::Strict, "shifted", |_, _, p| {
            (p[0] - 1.0).powi(2) + p[1] * p[1] - 0.5
        });
        let p = DirichletProblem::new(h, BoundaryData::constant(0.0), MeshParams::new(0.25, 1));
        assert_eq!(check_strict_subsolution(&p).verdict, Verdict::Inconclusive);
    }

    #[test]
    fn steep_boundary_data_rejected() {
        let h = HamiltonianFamily::eikonal_const(square(), 1.0).unwrap();
        let p = DirichletProblem::new(h, BoundaryData::poly(vec![(2.0, 1, 0, 0)]), MeshParams::new(0.125, 2));
        let g = MetricGraph::build(&p.hamiltonian, p.params).unwrap();
        let r = check_boundary_compat(&p, &g).unwrap();
        assert!(!r.pass);
        assert!((r.worst - 1.0).abs() < 0.05, "{}", r.worst);
        assert!(matches!(solve_dirichlet(&p), Err(DirichletError::BoundaryIncompatible { .. })));
    }

    #[test]
    fn boundary_values_are_kept() {
        let h = HamiltonianFamily::eikonal_const(square(), 1.0).unwrap();
        let p = DirichletProblem::new(h, BoundaryData::poly(vec![(0.5, 1, 0, 0)]), MeshParams::new(0.125, 2));
        let s = solve_dirichlet(&p).unwrap();
        for (n, v) in p.g.node_values(&s.graph).unwrap() {
            assert!((s.field.values[n] - v).abs() <= 1e-12);
        }
        let centre = s.graph.evaluate(&s.field, &QueryPoint::new(1, 0.5, 0.5)).unwrap();
        assert!(centre > 0.4 && centre < 0.75, "{centre}");
    }

    #[test]
    fn vertex_samples_on_segment() {
        let mut b = ComplexBuilder::new(2, 1);
        b.vertex(1, &[0.0, 0.0]).vertex(2, &[2.0, 0.0]).branch(1, &[1, 2]);
        b.boundary_facet(1, 0).boundary_facet(1, 1);
        let c = Arc::new(b.build().unwrap());
        let h = HamiltonianFamily::eikonal_const(c, 1.0).unwrap();
        let g = BoundaryData {
            default: Some(BoundaryValue::Samples),
            samples: BTreeMap::from([(VertexId(1), 0.0), (VertexId(2), 0.5)]),
            ..Default::default()
        };
        let p = DirichletProblem::new(h, g, MeshParams::new(0.1, 1));
        let s = solve_dirichlet(&p).unwrap();
        let mid = s.graph.evaluate(&s.field, &QueryPoint::new(1, 1.0, 0.0)).unwrap();
        assert!((mid - 1.0).abs() < 1e-9, "{mid}");
    }
}
