//! Weighted Steiner graph on a complex and the action distance it realizes.
//!
//! Graph paths are polygonal connections: straight pieces inside one
//! branch, or two pieces meeting on a ramification edge after unfolding the
//! pair of branches they cross. Arc weights integrate the gauge with a
//! four-point midpoint rule, so for the eikonal kind an arc costs
//! `sum sqrt(f(x_i)) |q| / 4`.

mod build;
mod mesh;
mod oracle;
mod search;

use std::sync::Arc;

use thiserror::Error;

pub use mesh::BranchMesh;
pub use oracle::{brute_force_action, brute_force_action_with_budget, OracleError};

use crate::geometry::linalg::{Point3, Vec2};
use crate::geometry::{BranchId, GeometryError, LepComplex, VertexId};
use crate::hamiltonian::{HamiltonianError, HamiltonianFamily};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("invalid mesh parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error("meshing failed on branch {branch}: {reason}")]
    Meshing { branch: BranchId, reason: String },
    #[error("point ({}, {}) is not on branch {branch}", local[0], local[1])]
    PointNotOnComplex { branch: BranchId, local: Vec2 },
    #[error("empty source list")]
    EmptySources,
    #[error("non-finite source offset {0}")]
    NonFiniteOffset(f64),
    #[error("field does not match graph ({0} values for {1} nodes)")]
    FieldMismatch(usize, usize),
}

/// Discretization parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshParams {
    /// Target edge length.
    pub h: f64,
    /// Minimum number of intermediate nodes on every facet.
    pub steiner_per_edge: usize,
    /// Nodes are linked to every node within `ring * h`.
    pub ring: usize,
}

impl MeshParams {
    pub fn new(h: f64, ring: usize) -> Self {
        MeshParams {
            h,
            steiner_per_edge: 1,
            ring,
        }
    }

    pub fn check(&self) -> Result<(), MetricError> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(MetricError::InvalidParams(format!("h = {} must be positive", self.h)));
        }
        if self.steiner_per_edge < 1 {
            return Err(MetricError::InvalidParams("steiner_per_edge must be at least 1".into()));
        }
        if self.ring < 1 {
            return Err(MetricError::InvalidParams("ring must be at least 1".into()));
        }
        Ok(())
    }

    pub fn radius(&self) -> f64 {
        self.h * self.ring as f64
    }
}

impl Default for MeshParams {
    fn default() -> Self {
        MeshParams::new(1.0 / 32.0, 2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Vertex(VertexId),
    /// `index`-th intermediate node on the geometric edge `a -> b` (`a < b`).
    Facet { a: VertexId, b: VertexId, index: u32 },
    Interior(BranchId),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphNode {
    pub ambient: Point3,
    pub kind: NodeKind,
    /// `(branch index, branch-local coordinates)` for every branch holding the node.
    pub members: Vec<(usize, Vec2)>,
    /// Node lies in the excluded boundary.
    pub boundary: bool,
    /// Index of the ramification edge the node lies on.
    pub sigma: Option<usize>,
}

impl GraphNode {
    pub fn local_in(&self, bi: usize) -> Option<Vec2> {
        self.members.iter().find(|(b, _)| *b == bi).map(|(_, l)| *l)
    }

    /// First branch holding the node, with its local coordinates.
    pub fn primary(&self) -> (usize, Vec2) {
        self.members[0]
    }
}

/// A point addressed by branch and branch-local coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QueryPoint {
    pub branch: BranchId,
    pub local: Vec2,
}

impl QueryPoint {
    pub fn new(branch: u32, u: f64, v: f64) -> Self {
        QueryPoint {
            branch: BranchId(branch),
            local: [u, v],
        }
    }
}

/// Directed arcs in compressed row form.
#[derive(Clone, Debug, Default)]
pub(crate) struct Arcs {
    pub offsets: Vec<usize>,
    pub targets: Vec<u32>,
    pub weights: Vec<f64>,
}

impl Arcs {
    pub fn out(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[v]..self.offsets[v + 1];
        self.targets[r.clone()]
            .iter()
            .zip(&self.weights[r])
            .map(|(&t, &w)| (t as usize, w))
    }
}

/// Steiner graph realizing discrete connections of a complex.
#[derive(Clone, Debug)]
pub struct MetricGraph {
    hamiltonian: HamiltonianFamily,
    params: MeshParams,
    nodes: Vec<GraphNode>,
    meshes: Vec<BranchMesh>,
    arcs: Arcs,
    reverse: Arcs,
    /// Per-branch grid for neighbour lookup.
    grids: Vec<build::Grid>,
}

/// A point attached to the graph: either an existing node or a temporary
/// node with weighted links.
#[derive(Clone, Debug)]
pub(crate) enum Attach {
    Node(usize),
    Links {
        bi: usize,
        local: Vec2,
        /// `(node, weight point->node, weight node->point)`.
        links: Vec<(usize, f64, f64)>,
    },
}

impl MetricGraph {
    pub fn build(h: &HamiltonianFamily, params: MeshParams) -> Result<Self, MetricError> {
        build::build(h, params)
    }

    pub fn complex(&self) -> &Arc<LepComplex> {
        self.hamiltonian.complex()
    }

    pub fn hamiltonian(&self) -> &HamiltonianFamily {
        &self.hamiltonian
    }

    pub fn params(&self) -> MeshParams {
        self.params
    }

    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.targets.len()
    }

    /// Outgoing arcs `(target, weight)` of a node.
    pub fn arcs_from(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.arcs.out(v)
    }

    pub fn mesh(&self, branch: BranchId) -> Result<&BranchMesh, MetricError> {
        Ok(&self.meshes[self.complex().branch_idx(branch)?])
    }

    pub(crate) fn meshes(&self) -> &[BranchMesh] {
        &self.meshes
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].boundary).collect()
    }

    /// Node at a query point, if one lies within the length tolerance.
    pub fn node_at(&self, q: &QueryPoint) -> Result<Option<usize>, MetricError> {
        match self.attach(q)? {
            Attach::Node(n) => Ok(Some(n)),
            Attach::Links { .. } => Ok(None),
        }
    }

    pub(crate) fn attach(&self, q: &QueryPoint) -> Result<Attach, MetricError> {
        build::attach(self, q)
    }

    /// Approximate action distance `S(x, y)` between two points.
    pub fn distance(&self, x: &QueryPoint, y: &QueryPoint) -> Result<f64, MetricError> {
        let ax = self.attach(x)?;
        let ay = self.attach(y)?;
        if let (Attach::Node(a), Attach::Node(b)) = (&ax, &ay) {
            if a == b {
                return Ok(0.0);
            }
        }
        if let (Attach::Links { bi: b1, local: l1, .. }, Attach::Links { bi: b2, local: l2, .. }) = (&ax, &ay) {
            if b1 == b2 && l1 == l2 {
                return Ok(0.0);
            }
        }
        let direct = build::direct_link(self, &ax, &ay)?;
        let dist = search::run(self, &search::seeds(&ax, 0.0), false);
        let via = match &ay {
            Attach::Node(b) => dist[*b],
            Attach::Links { links, .. } => links
                .iter()
                .map(|&(n, _, w_in)| dist[n] + w_in)
                .fold(f64::INFINITY, f64::min),
        };
        Ok(via.min(direct.unwrap_or(f64::INFINITY)))
    }

    /// Distances from a node to every node (forward arcs).
    pub fn distances_from_node(&self, source: usize) -> Vec<f64> {
        search::run(self, &[(source, 0.0)], false)
    }

    /// Distances from every node to a node (reverse arcs).
    pub fn distances_to_node(&self, target: usize) -> Vec<f64> {
        search::run(self, &[(target, 0.0)], true)
    }

    /// `min_i { offset_i + S(source_i, node) }` at every node in one multi-source run.
    pub fn distance_field(&self, sources: &[(QueryPoint, f64)]) -> Result<SolutionField, MetricError> {
        if sources.is_empty() {
            return Err(MetricError::EmptySources);
        }
        let mut seeds = Vec::new();
        for (q, off) in sources {
            if !off.is_finite() {
                return Err(MetricError::NonFiniteOffset(*off));
            }
            seeds.extend(search::seeds(&self.attach(q)?, *off));
        }
        Ok(SolutionField::new(self, search::run(self, &seeds, false)))
    }

    /// Multi-source field seeded directly at nodes.
    pub fn node_field(&self, seeds: &[(usize, f64)]) -> Result<SolutionField, MetricError> {
        if seeds.is_empty() {
            return Err(MetricError::EmptySources);
        }
        if let Some(&(_, off)) = seeds.iter().find(|s| !s.1.is_finite()) {
            return Err(MetricError::NonFiniteOffset(off));
        }
        Ok(SolutionField::new(self, search::run(self, seeds, false)))
    }

    /// Value of a field at an arbitrary point: the minimum over links of
    /// `u(node) + S(node, point)`.
    pub fn evaluate(&self, field: &SolutionField, q: &QueryPoint) -> Result<f64, MetricError> {
        field.check(self)?;
        Ok(match self.attach(q)? {
            Attach::Node(n) => field.values[n],
            Attach::Links { links, .. } => links
                .iter()
                .map(|&(n, _, w_in)| field.values[n] + w_in)
                .fold(f64::INFINITY, f64::min),
        })
    }

    /// Content hash of the complex, Hamiltonian and parameters.
    pub fn provenance(&self) -> String {
        crate::io::hash_hex(&format!(
            "{}|{}|{:?}",
            crate::io::serialize_complex(self.complex()),
            self.hamiltonian.describe(),
            self.params
        ))
    }
}

/// Scalar values on the nodes of one graph.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionField {
    pub values: Vec<f64>,
    /// Graph size and provenance hash it was computed on.
    pub node_count: usize,
    pub provenance: String,
    pub h: f64,
    pub ring: usize,
    pub kind: String,
}

impl SolutionField {
    pub fn new(g: &MetricGraph, values: Vec<f64>) -> Self {
        SolutionField {
            node_count: g.node_count(),
            provenance: g.provenance(),
            h: g.params.h,
            ring: g.params.ring,
            kind: g.hamiltonian.describe(),
            values,
        }
    }

    /// Same metadata, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Self {
        SolutionField { values, ..self.clone() }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn check(&self, g: &MetricGraph) -> Result<(), MetricError> {
        if self.values.len() != g.node_count() || self.node_count != g.node_count() {
            return Err(MetricError::FieldMismatch(self.values.len(), g.node_count()));
        }
        Ok(())
    }
}
