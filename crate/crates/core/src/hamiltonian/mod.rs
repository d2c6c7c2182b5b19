//! Per-branch Hamiltonians, their Legendre transforms and the induced gauge.
//!
//! Two kinds are supported. The weighted eikonal kind `H(x, p) = |p|^2 - f(x)`
//! has closed forms for everything. The generic kind wraps an arbitrary
//! evaluator and goes through the numerical transforms in [`legendre`].
//!
//! Points are branch-local coordinates; covectors are expressed in the same
//! frame. For segment branches only the first component is used.

mod compat;
pub mod legendre;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use compat::{CompatReport, Hypothesis, HypothesisVerdict, SampleSite};

use crate::geometry::linalg::{dot2, Vec2};
use crate::geometry::polygon::{self, mean_value_weights};
use crate::geometry::{Branch, BranchId, GeometryError, LepComplex};

/// Default radius of the covector sampling disk.
pub const DEFAULT_RADIUS: f64 = 16.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HamiltonianError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("Hamiltonian not coercive at x = ({}, {}) on branch {branch}", x[0], x[1])]
    NotCoercive { branch: BranchId, x: Vec2 },
    #[error("invalid weight field on branch {branch}: {reason}")]
    InvalidField { branch: BranchId, reason: String },
    #[error("no weight field given for branch {0}")]
    MissingField(BranchId),
}

/// Scalar weight `f` on one branch.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightField {
    Const(f64),
    /// Sum of `c * u^a * v^b` over terms `(c, a, b)` in branch-local `(u, v)`.
    Poly(Vec<(f64, u32, u32)>),
    /// Values at the branch corners in loop order, interpolated with mean
    /// value coordinates (linearly on segments).
    VertexSamples(Vec<f64>),
}

impl WeightField {
    fn eval(&self, b: &Branch, x: Vec2) -> f64 {
        match self {
            WeightField::Const(c) => *c,
            WeightField::Poly(terms) => terms
                .iter()
                .map(|&(c, a, e)| c * x[0].powi(a as i32) * x[1].powi(e as i32))
                .sum(),
            WeightField::VertexSamples(vals) => {
                if b.local.len() == 2 {
                    let len = b.length();
                    let t = if len > 0.0 { (x[0] / len).clamp(0.0, 1.0) } else { 0.0 };
                    (1.0 - t) * vals[0] + t * vals[1]
                } else {
                    let w = mean_value_weights(x, &b.local, 1e-12);
                    w.iter().zip(vals).map(|(w, v)| w * v).sum()
                }
            }
        }
    }
}

/// Convexity declared for a generic evaluator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Convexity {
    Strict,
    Weak,
    None,
}

/// `(branch, x_local, p) -> H`.
pub type Evaluator = Arc<dyn Fn(BranchId, Vec2, Vec2) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Kind {
    Eikonal {
        /// Indexed like `LepComplex::branches`.
        fields: Vec<WeightField>,
    },
    Generic {
        eval: Evaluator,
        convexity: Convexity,
        radius: f64,
        label: String,
    },
}

#[derive(Clone)]
pub struct HamiltonianFamily {
    complex: Arc<LepComplex>,
    kind: Kind,
}

impl fmt::Debug for HamiltonianFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianFamily")
            .field("kind", &self.describe())
            .finish()
    }
}

/// Points of a branch used for sampled checks: corners, facet midpoints,
/// the corner average (when inside) and an interior lattice of about `n` points.
pub(crate) fn branch_samples(b: &Branch, n: usize) -> Vec<Vec2> {
    let mut pts = b.local.clone();
    let m = b.local.len();
    if m == 2 {
        let len = b.length();
        let k = n.max(2);
        pts.extend((1..k).map(|i| [len * i as f64 / k as f64, 0.0]));
        return pts;
    }
    for i in 0..m {
        let (p, q) = (b.local[i], b.local[(i + 1) % m]);
        pts.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &b.local {
        lo = [lo[0].min(p[0]), lo[1].min(p[1])];
        hi = [hi[0].max(p[0]), hi[1].max(p[1])];
    }
    let k = (n as f64).sqrt().ceil().max(2.0) as usize;
    for i in 0..=k {
        for j in 0..=k {
            let p = [
                lo[0] + (hi[0] - lo[0]) * i as f64 / k as f64,
                lo[1] + (hi[1] - lo[1]) * j as f64 / k as f64,
            ];
            if polygon::classify_point(p, &b.local, 1e-12) != polygon::PointClass::Outside {
                pts.push(p);
            }
        }
    }
    pts
}

impl HamiltonianFamily {
    /// Eikonal family with the same constant weight on every branch.
    pub fn eikonal_const(complex: Arc<LepComplex>, f: f64) -> Result<Self, HamiltonianError> {
        let fields = BTreeMap::new();
        Self::eikonal(complex, fields, Some(WeightField::Const(f)))
    }

    /// Eikonal family from per-branch fields, falling back to `default`.
    pub fn eikonal(
        complex: Arc<LepComplex>,
        fields: BTreeMap<BranchId, WeightField>,
        default: Option<WeightField>,
    ) -> Result<Self, HamiltonianError> {
        let mut out = Vec::with_capacity(complex.branches().len());
        for b in complex.branches() {
            let field = fields
                .get(&b.id)
                .or(default.as_ref())
                .cloned()
                .ok_or(HamiltonianError::MissingField(b.id))?;
            let bad = |reason: String| HamiltonianError::InvalidField { branch: b.id, reason };
            if let WeightField::VertexSamples(v) = &field {
                if v.len() != b.local.len() {
                    return Err(bad(format!(
                        "{} samples for {} corners",
                        v.len(),
                        b.local.len()
                    )));
                }
            }
            for x in branch_samples(b, 64) {
                let f = field.eval(b, x);
                if !f.is_finite() || f < 0.0 {
                    return Err(bad(format!("weight {f} at ({}, {})", x[0], x[1])));
                }
            }
            out.push(field);
        }
        Ok(HamiltonianFamily {
            complex,
            kind: Kind::Eikonal { fields: out },
        })
    }

    /// Generic family from an evaluator `(branch, x_local, p) -> H`.
    pub fn generic<F>(complex: Arc<LepComplex>, convexity: Convexity, label: &str, eval: F) -> Self
    where
        F: Fn(BranchId, Vec2, Vec2) -> f64 + Send + Sync + 'static,
    {
        HamiltonianFamily {
            complex,
            kind: Kind::Generic {
                eval: Arc::new(eval),
                convexity,
                radius: DEFAULT_RADIUS,
                label: label.to_string(),
            },
        }
    }

    pub fn with_radius(mut self, r: f64) -> Self {
        if let Kind::Generic { radius, .. } = &mut self.kind {
            *radius = r;
        }
        self
    }

    /// Same Hamiltonian routed through the numerical transforms.
    pub fn to_generic(&self) -> Self {
        match &self.kind {
            Kind::Generic { .. } => self.clone(),
            Kind::Eikonal { fields } => {
                let fields = fields.clone();
                let complex = self.complex.clone();
                let eval = move |j: BranchId, x: Vec2, p: Vec2| {
                    let bi = complex.branch_idx(j).expect("branch of this complex");
                    dot2(p, p) - fields[bi].eval(&complex.branches()[bi], x)
                };
                HamiltonianFamily::generic(
                    self.complex.clone(),
                    Convexity::Strict,
                    "eikonal (numeric)",
                    eval,
                )
            }
        }
    }

    pub fn complex(&self) -> &Arc<LepComplex> {
        &self.complex
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    pub fn is_eikonal(&self) -> bool {
        matches!(self.kind, Kind::Eikonal { .. })
    }

    pub fn convexity(&self) -> Convexity {
        match &self.kind {
            Kind::Eikonal { .. } => Convexity::Strict,
            Kind::Generic { convexity, .. } => *convexity,
        }
    }

    pub fn radius(&self) -> f64 {
        match &self.kind {
            Kind::Eikonal { .. } => DEFAULT_RADIUS,
            Kind::Generic { radius, .. } => *radius,
        }
    }

    /// Short human-readable description, also used in provenance headers.
    pub fn describe(&self) -> String {
        match &self.kind {
            Kind::Eikonal { fields } => {
                let parts: Vec<String> = self
                    .complex
                    .branches()
                    .iter()
                    .zip(fields)
                    .map(|(b, f)| format!("{}={:?}", b.id, f))
                    .collect();
                format!("eikonal[{}]", parts.join(";"))
            }
            Kind::Generic {
                label, convexity, radius, ..
            } => format!("generic[{label};{convexity:?};R={radius:?}]"),
        }
    }

    fn dims(&self) -> usize {
        self.complex.branch_dim()
    }

    fn located(&self, j: BranchId, x: Vec2) -> Result<usize, HamiltonianError> {
        let bi = self.complex.branch_idx(j)?;
        self.complex.check_point(j, x)?;
        Ok(bi)
    }

    /// Weight `f` for the eikonal kind, `-H(x, 0)` for the generic kind.
    pub(crate) fn weight_idx(&self, bi: usize, x: Vec2) -> f64 {
        match &self.kind {
            Kind::Eikonal { fields } => fields[bi].eval(&self.complex.branches()[bi], x),
            Kind::Generic { eval, .. } => -eval(self.complex.branches()[bi].id, x, [0.0, 0.0]),
        }
    }

    pub(crate) fn h_idx(&self, bi: usize, x: Vec2, p: Vec2) -> f64 {
        let p = if self.dims() == 1 { [p[0], 0.0] } else { p };
        match &self.kind {
            Kind::Eikonal { fields } => {
                dot2(p, p) - fields[bi].eval(&self.complex.branches()[bi], x)
            }
            Kind::Generic { eval, .. } => eval(self.complex.branches()[bi].id, x, p),
        }
    }

    pub(crate) fn lagrangian_idx(&self, bi: usize, x: Vec2, q: Vec2) -> Result<f64, HamiltonianError> {
        let q = if self.dims() == 1 { [q[0], 0.0] } else { q };
        match &self.kind {
            Kind::Eikonal { fields } => {
                let f = fields[bi].eval(&self.complex.branches()[bi], x);
                Ok(dot2(q, q) / 4.0 + f)
            }
            Kind::Generic { radius, .. } => {
                legendre::legendre(|p| self.h_idx(bi, x, p), q, self.dims(), *radius).map_err(
                    |_| HamiltonianError::NotCoercive {
                        branch: self.complex.branches()[bi].id,
                        x,
                    },
                )
            }
        }
    }

    pub(crate) fn gauge_idx(&self, bi: usize, x: Vec2, q: Vec2) -> Result<f64, HamiltonianError> {
        let q = if self.dims() == 1 { [q[0], 0.0] } else { q };
        match &self.kind {
            Kind::Eikonal { fields } => {
                let f = fields[bi].eval(&self.complex.branches()[bi], x).max(0.0);
                Ok(f.sqrt() * dot2(q, q).sqrt())
            }
            Kind::Generic { radius, .. } => {
                let dims = self.dims();
                legendre::gauge(
                    |v| legendre::legendre(|p| self.h_idx(bi, x, p), v, dims, *radius),
                    q,
                )
                .map_err(|_| HamiltonianError::NotCoercive {
                    branch: self.complex.branches()[bi].id,
                    x,
                })
            }
        }
    }

    /// `H^j(x, p)`.
    pub fn eval(&self, j: BranchId, x: Vec2, p: Vec2) -> Result<f64, HamiltonianError> {
        let bi = self.located(j, x)?;
        Ok(self.h_idx(bi, x, p))
    }

    /// `L^j(x, q) = sup_p { p.q - H^j(x, p) }`.
    pub fn lagrangian(&self, j: BranchId, x: Vec2, q: Vec2) -> Result<f64, HamiltonianError> {
        let bi = self.located(j, x)?;
        self.lagrangian_idx(bi, x, q)
    }

    /// `inf_{T>0} T L^j(x, q/T)`, the line element of the action distance.
    pub fn gauge(&self, j: BranchId, x: Vec2, q: Vec2) -> Result<f64, HamiltonianError> {
        let bi = self.located(j, x)?;
        self.gauge_idx(bi, x, q)
    }

    /// Weight `f^j(x)` of the eikonal kind; `-H^j(x, 0)` otherwise.
    pub fn weight(&self, j: BranchId, x: Vec2) -> Result<f64, HamiltonianError> {
        let bi = self.located(j, x)?;
        Ok(self.weight_idx(bi, x))
    }

    /// Sampled Lipschitz constant for subsolutions: `max sqrt(f)` for the
    /// eikonal kind, the largest unit-direction gauge otherwise.
    pub fn lipschitz_constant(&self) -> f64 {
        let mut best: f64 = 0.0;
        for (bi, b) in self.complex.branches().iter().enumerate() {
            match &self.kind {
                Kind::Eikonal { fields } => {
                    let n = if matches!(fields[bi], WeightField::Const(_)) { 1 } else { 1024 };
                    for x in branch_samples(b, n) {
                        best = best.max(fields[bi].eval(b, x).max(0.0).sqrt());
                    }
                }
                Kind::Generic { .. } => {
                    let dirs = if self.dims() == 1 { 2 } else { 16 };
                    for x in branch_samples(b, 9) {
                        for k in 0..dirs {
                            let th = std::f64::consts::TAU * k as f64 / dirs as f64;
                            if let Ok(g) = self.gauge_idx(bi, x, [th.cos(), th.sin()]) {
                                best = best.max(g);
                            }
                        }
                    }
                }
            }
        }
        best
    }

    pub fn check_compatibility(&self, n_samples: usize) -> CompatReport {
        compat::check(self, n_samples)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ComplexBuilder;

    fn square() -> Arc<LepComplex> {
        let mut b = ComplexBuilder::new(3, 2);
        b.vertex(1, &[0.0, 0.0, 0.0])
            .vertex(2, &[1.0, 0.0, 0.0])
            .vertex(3, &[1.0, 1.0, 0.0])
            .vertex(4, &[0.0, 1.0, 0.0])
            .branch(1, &[1, 2, 3, 4]);
        for f in 0..4 {
            b.boundary_facet(1, f);
        }
        Arc::new(b.build().unwrap())
    }

    #[test]
    fn eikonal_values() {
        let j = BranchId(1);
        let h1 = HamiltonianFamily::eikonal_const(square(), 1.0).unwrap();
        assert_eq!(h1.eval(j, [0.5, 0.5], [1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(h1.eval(j, [0.5, 0.5], [0.0, 0.0]).unwrap(), -1.0);
        assert_eq!(h1.lagrangian(j, [0.5, 0.5], [0.0, 0.0]).unwrap(), 1.0);
        let h4 = HamiltonianFamily::eikonal_const(square(), 4.0).unwrap();
        assert_eq!(h4.eval(j, [0.5, 0.5], [2.0, 0.0]).unwrap(), 0.0);
        assert_eq!(h4.gauge(j, [0.5, 0.5], [0.6, 0.8]).unwrap(), 2.0);
        let h0 = HamiltonianFamily::eikonal_const(square(), 0.0).unwrap();
        assert_eq!(h0.lagrangian(j, [0.5, 0.5], [2.0, 0.0]).unwrap(), 1.0);
        assert!(matches!(
            h1.eval(j, [2.0, 0.5], [0.0, 0.0]),
            Err(HamiltonianError::Geometry(GeometryError::PointOutsideBranch(..)))
        ));
    }

    #[test]
    fn negative_weight_rejected() {
        let r = HamiltonianFamily::eikonal(
            square(),
            BTreeMap::from([(BranchId(1), WeightField::Poly(vec![(1.0, 0, 0), (-2.0, 1, 0)]))]),
            None,
        );
        assert!(matches!(r, Err(HamiltonianError::InvalidField { .. })));
    }

    #[test]
    fn vertex_samples_interpolate() {
        let h = HamiltonianFamily::eikonal(
            square(),
            BTreeMap::from([(BranchId(1), WeightField::VertexSamples(vec![1.0, 2.0, 3.0, 2.0]))]),
            None,
        )
        .unwrap();
        let w = h.weight(BranchId(1), [0.5, 0.0]).unwrap();
        assert!((w - 1.5).abs() < 1e-12);
        let w = h.weight(BranchId(1), [0.5, 0.5]).unwrap();
        assert!((w - 2.0).abs() < 1e-12);
        assert!((h.lipschitz_constant() - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn generic_route_matches_closed_form() {
        let h = HamiltonianFamily::eikonal(
            square(),
            BTreeMap::from([(BranchId(1), WeightField::Poly(vec![(1.0, 0, 0), (0.5, 1, 1)]))]),
            None,
        )
        .unwrap();
        let g = h.to_generic();
        let j = BranchId(1);
        for x in [[0.2, 0.3], [0.9, 0.9]] {
            for q in [[0.0, 0.0], [1.0, 2.0], [-3.0, 0.5]] {
                let a = h.lagrangian(j, x, q).unwrap();
                let b = g.lagrangian(j, x, q).unwrap();
                assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0), "{a} {b}");
                let a = h.gauge(j, x, q).unwrap();
                let b = g.gauge(j, x, q).unwrap();
                assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0), "{a} {b}");
            }
        }
    }
}
