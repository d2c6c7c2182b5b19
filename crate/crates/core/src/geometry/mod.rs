//! Locally elementary polygonal ramified spaces.
//!
//! A [`LepComplex`] is a finite collection of flat branches (segments for
//! `branch_dim = 1`, simple polygons for `branch_dim = 2`) living in distinct
//! hyperplanes of the ambient space and glued along whole facets. Glued facets
//! form the ramification set; every other facet belongs to the excluded
//! boundary.
//!
//! Each branch carries an orthonormal [`Frame`]: the origin is its first
//! corner, the first axis runs along its first facet and the second axis
//! completes a counterclockwise frame, so the polygon is positively oriented
//! in local coordinates.

mod chart;
pub mod linalg;
pub mod polygon;
mod validate;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

pub use chart::{Chart, ChartMap, Unfolding};
pub use validate::{Rule, ValidationReport, Violation};

use linalg::{
    add3, cross3, dot2, dot3, norm2, normalize3, scale3, sub2, sub3, Point3, Vec2,
};
use polygon::PointClass;

macro_rules! label {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

label!(
    /// Label of a vertex as written in the complex file.
    VertexId
);
label!(
    /// Label of a branch.
    BranchId
);
label!(
    /// Label of a ramification edge (a glue entry).
    RamEdgeId
);

/// A facet of a branch: polygon edge `i` runs from corner `i` to corner
/// `i + 1`; for segments facet 0 is the first endpoint and facet 1 the second.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FacetRef {
    pub branch: BranchId,
    pub facet: u32,
}

impl FacetRef {
    pub fn new(branch: u32, facet: u32) -> Self {
        FacetRef { branch: BranchId(branch), facet }
    }
}

impl fmt::Display for FacetRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.branch, self.facet)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StructureError {
    #[error("unsupported dimensions: ambient {ambient}, branch {branch}")]
    UnsupportedDimension { ambient: usize, branch: usize },
    #[error("duplicate vertex id {0}")]
    DuplicateVertex(VertexId),
    #[error("duplicate branch id {0}")]
    DuplicateBranch(BranchId),
    #[error("duplicate ramification edge id {0}")]
    DuplicateEdge(RamEdgeId),
    #[error("branch {branch} references unknown vertex {vertex}")]
    UnknownVertex { branch: BranchId, vertex: VertexId },
    #[error("boundary references unknown vertex {0}")]
    UnknownBoundaryVertex(VertexId),
    #[error("branch {branch} has {count} vertices, expected {expected}")]
    BadBranchSize {
        branch: BranchId,
        count: usize,
        expected: &'static str,
    },
    #[error("unknown branch {0}")]
    UnknownBranch(BranchId),
    #[error("facet {0} out of range")]
    FacetOutOfRange(FacetRef),
    #[error("vertex {0} has a non-finite coordinate")]
    NonFinite(VertexId),
    #[error("complex has no branches")]
    Empty,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("unknown branch {0}")]
    UnknownBranch(BranchId),
    #[error("unknown ramification edge {0}")]
    UnknownEdge(RamEdgeId),
    #[error("facet {0} is not a ramification edge")]
    NotRamificationEdge(FacetRef),
    #[error("facet {0} does not belong to its branch")]
    UnknownFacet(FacetRef),
    #[error("degenerate facet {0}")]
    DegenerateFacet(FacetRef),
    #[error("point is not on the ramification set")]
    NotOnRamificationSet,
    #[error("point lies within {0:e} of a corner of ramification edge {1}")]
    NearCorner(f64, RamEdgeId),
    #[error("branch {branch} is not incident to ramification edge {edge}")]
    NotIncident { branch: BranchId, edge: RamEdgeId },
    #[error("unfolding needs two distinct branches")]
    SameBranch,
    #[error("point ({0}, {1}) is not on branch {2}")]
    PointOutsideBranch(f64, f64, BranchId),
}

/// Relative geometric tolerances derived from the bounding-box diameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub planar: f64,
    pub len: f64,
    pub area: f64,
}

impl Tolerances {
    pub fn for_diameter(diameter: f64) -> Self {
        let d = if diameter > 0.0 { diameter } else { 1.0 };
        let len = 1e-9 * d;
        Tolerances {
            planar: 1e-9 * d,
            len,
            area: len * len,
        }
    }
}

/// Orthonormal frame of a branch hyperplane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame {
    pub origin: Point3,
    pub axes: [Point3; 2],
    /// Unit normal of the plane (zero for segments).
    pub normal: Point3,
}

impl Frame {
    pub fn to_local(&self, p: Point3) -> Vec2 {
        let d = sub3(p, self.origin);
        [dot3(d, self.axes[0]), dot3(d, self.axes[1])]
    }

    pub fn to_ambient(&self, l: Vec2) -> Point3 {
        add3(
            self.origin,
            add3(scale3(self.axes[0], l[0]), scale3(self.axes[1], l[1])),
        )
    }

    pub fn vector_to_local(&self, v: Point3) -> Vec2 {
        [dot3(v, self.axes[0]), dot3(v, self.axes[1])]
    }

    /// Distance of an ambient point from the frame's plane (or line).
    pub fn offset(&self, p: Point3) -> f64 {
        let back = self.to_ambient(self.to_local(p));
        linalg::dist3(p, back)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub id: BranchId,
    /// Polygon loop (n = 2) or endpoint pair (n = 1).
    pub vertex_ids: Vec<VertexId>,
    pub frame: Frame,
    /// Corner coordinates in the branch frame.
    pub local: Vec<Vec2>,
    pub(crate) vertex_idx: Vec<usize>,
    pub(crate) convex: bool,
}

impl Branch {
    pub fn facet_count(&self) -> usize {
        if self.vertex_ids.len() == 2 {
            2
        } else {
            self.vertex_ids.len()
        }
    }

    fn is_segment(&self) -> bool {
        self.local.len() == 2
    }

    /// Vertices of a facet: two for a polygon edge, one for a segment endpoint.
    pub fn facet_vertices(&self, facet: usize) -> Vec<VertexId> {
        if self.is_segment() {
            vec![self.vertex_ids[facet]]
        } else {
            let m = self.vertex_ids.len();
            vec![self.vertex_ids[facet], self.vertex_ids[(facet + 1) % m]]
        }
    }

    pub(crate) fn facet_local(&self, facet: usize) -> (Vec2, Vec2) {
        if self.is_segment() {
            (self.local[facet], self.local[facet])
        } else {
            let m = self.local.len();
            (self.local[facet], self.local[(facet + 1) % m])
        }
    }

    pub fn length(&self) -> f64 {
        linalg::dist2(self.local[0], self.local[1])
    }

    pub fn area(&self) -> f64 {
        if self.is_segment() {
            0.0
        } else {
            polygon::signed_area(&self.local)
        }
    }

    /// Position of a local point relative to the closed branch.
    pub fn classify(&self, p: Vec2, tol: f64) -> PointClass {
        if self.is_segment() {
            let len = self.length();
            if p[1].abs() > tol || p[0] < -tol || p[0] > len + tol {
                PointClass::Outside
            } else if p[0] <= tol || p[0] >= len - tol {
                PointClass::Boundary
            } else {
                PointClass::Inside
            }
        } else {
            polygon::classify_point(p, &self.local, tol)
        }
    }

    pub fn contains(&self, p: Vec2, tol: f64) -> bool {
        self.classify(p, tol) != PointClass::Outside
    }

    /// Whether the closed straight segment between two local points stays in the branch.
    pub fn contains_segment(&self, a: Vec2, b: Vec2, tol: f64) -> bool {
        if self.is_segment() || self.convex {
            self.contains(a, tol) && self.contains(b, tol)
        } else {
            polygon::segment_in_polygon(a, b, &self.local, tol)
        }
    }

    pub fn is_convex(&self) -> bool {
        self.convex
    }
}

/// One branch meeting a ramification edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Incidence {
    pub branch: BranchId,
    pub facet: u32,
    /// Inward unit normal in the branch frame.
    pub normal: Vec2,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RamEdge {
    pub id: RamEdgeId,
    /// Segment endpoints (n = 2) or the single ramification point (n = 1).
    pub vertices: Vec<VertexId>,
    pub incident: Vec<Incidence>,
}

impl RamEdge {
    pub fn order(&self) -> usize {
        self.incident.len()
    }
}

/// How a facet is classified by the glue and boundary sections.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FacetClass {
    Ramification(RamEdgeId),
    Boundary,
    Unclassified,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LepComplex {
    ambient_dim: usize,
    branch_dim: usize,
    vertex_ids: Vec<VertexId>,
    positions: Vec<Point3>,
    vertex_index: HashMap<VertexId, usize>,
    branches: Vec<Branch>,
    branch_index: HashMap<BranchId, usize>,
    ram_edges: Vec<RamEdge>,
    edge_index: HashMap<RamEdgeId, usize>,
    boundary_facets: BTreeSet<FacetRef>,
    boundary_vertices: BTreeSet<VertexId>,
    tol: Tolerances,
    diameter: f64,
}

/// Incremental construction of a [`LepComplex`]; only structural checks
/// happen here, the geometric axioms are checked by [`LepComplex::validate`].
#[derive(Clone, Debug, Default)]
pub struct ComplexBuilder {
    ambient_dim: usize,
    branch_dim: usize,
    vertices: Vec<(VertexId, Point3)>,
    branches: Vec<(BranchId, Vec<VertexId>)>,
    glue: Vec<(RamEdgeId, Vec<FacetRef>)>,
    boundary_facets: Vec<FacetRef>,
    boundary_vertices: Vec<VertexId>,
}

impl ComplexBuilder {
    pub fn new(ambient_dim: usize, branch_dim: usize) -> Self {
        ComplexBuilder {
            ambient_dim,
            branch_dim,
            ..Default::default()
        }
    }

    /// Missing trailing coordinates are zero.
    pub fn vertex(&mut self, id: u32, coords: &[f64]) -> &mut Self {
        let mut p = [0.0; 3];
        for (dst, &c) in p.iter_mut().zip(coords) {
            *dst = c;
        }
        self.vertices.push((VertexId(id), p));
        self
    }

    pub fn branch(&mut self, id: u32, vertices: &[u32]) -> &mut Self {
        self.branches
            .push((BranchId(id), vertices.iter().map(|&v| VertexId(v)).collect()));
        self
    }

    /// Glue entry; facets given as `(branch, facet)` pairs.
    pub fn glue(&mut self, id: u32, facets: &[(u32, u32)]) -> &mut Self {
        self.glue.push((
            RamEdgeId(id),
            facets.iter().map(|&(b, f)| FacetRef::new(b, f)).collect(),
        ));
        self
    }

    pub fn boundary_facet(&mut self, branch: u32, facet: u32) -> &mut Self {
        self.boundary_facets.push(FacetRef::new(branch, facet));
        self
    }

    pub fn boundary_vertex(&mut self, id: u32) -> &mut Self {
        self.boundary_vertices.push(VertexId(id));
        self
    }

    pub fn build(&self) -> Result<LepComplex, StructureError> {
        LepComplex::assemble(
            self.ambient_dim,
            self.branch_dim,
            &self.vertices,
            &self.branches,
            &self.glue,
            &self.boundary_facets,
            &self.boundary_vertices,
        )
    }
}

fn polygon_frame(points: &[Point3]) -> Frame {
    let m = points.len();
    let centroid = scale3(
        points.iter().fold([0.0; 3], |acc, &p| add3(acc, p)),
        1.0 / m as f64,
    );
    let mut newell = [0.0; 3];
    for i in 0..m {
        newell = add3(
            newell,
            cross3(sub3(points[i], centroid), sub3(points[(i + 1) % m], centroid)),
        );
    }
    let normal = normalize3(newell).unwrap_or([0.0, 0.0, 1.0]);
    let first_edge = (0..m)
        .map(|i| sub3(points[(i + 1) % m], points[i]))
        .find_map(|e| {
            let inplane = sub3(e, scale3(normal, dot3(e, normal)));
            normalize3(inplane)
        });
    let e1 = first_edge.unwrap_or_else(|| {
        // any unit vector orthogonal to the normal
        let trial = if normal[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        normalize3(cross3(normal, trial)).unwrap_or([1.0, 0.0, 0.0])
    });
    let e2 = cross3(normal, e1);
    Frame {
        origin: points[0],
        axes: [e1, e2],
        normal,
    }
}

fn segment_frame(a: Point3, b: Point3) -> Frame {
    Frame {
        origin: a,
        axes: [normalize3(sub3(b, a)).unwrap_or([1.0, 0.0, 0.0]), [0.0; 3]],
        normal: [0.0; 3],
    }
}

impl LepComplex {
    fn assemble(
        ambient_dim: usize,
        branch_dim: usize,
        vertices: &[(VertexId, Point3)],
        branches: &[(BranchId, Vec<VertexId>)],
        glue: &[(RamEdgeId, Vec<FacetRef>)],
        boundary_facets: &[FacetRef],
        boundary_vertices: &[VertexId],
    ) -> Result<Self, StructureError> {
        let supported = matches!((ambient_dim, branch_dim), (2, 1) | (3, 1) | (3, 2));
        if !supported {
            return Err(StructureError::UnsupportedDimension {
                ambient: ambient_dim,
                branch: branch_dim,
            });
        }
        if branches.is_empty() {
            return Err(StructureError::Empty);
        }
        let mut vertex_index = HashMap::new();
        let mut vertex_ids = Vec::with_capacity(vertices.len());
        let mut positions = Vec::with_capacity(vertices.len());
        for (i, &(id, p)) in vertices.iter().enumerate() {
            if vertex_index.insert(id, i).is_some() {
                return Err(StructureError::DuplicateVertex(id));
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(StructureError::NonFinite(id));
            }
            vertex_ids.push(id);
            positions.push(p);
        }

        let (lo, hi) = positions.iter().fold(
            ([f64::INFINITY; 3], [f64::NEG_INFINITY; 3]),
            |(lo, hi), p| {
                (
                    [lo[0].min(p[0]), lo[1].min(p[1]), lo[2].min(p[2])],
                    [hi[0].max(p[0]), hi[1].max(p[1]), hi[2].max(p[2])],
                )
            },
        );
        let diameter = if positions.is_empty() { 0.0 } else { linalg::dist3(lo, hi) };
        let tol = Tolerances::for_diameter(diameter);

        let mut branch_index = HashMap::new();
        let mut built = Vec::with_capacity(branches.len());
        for (i, (id, loop_ids)) in branches.iter().enumerate() {
            if branch_index.insert(*id, i).is_some() {
                return Err(StructureError::DuplicateBranch(*id));
            }
            let ok = if branch_dim == 1 { loop_ids.len() == 2 } else { loop_ids.len() >= 3 };
            if !ok {
                return Err(StructureError::BadBranchSize {
                    branch: *id,
                    count: loop_ids.len(),
                    expected: if branch_dim == 1 { "exactly 2" } else { "at least 3" },
                });
            }
            let mut idx = Vec::with_capacity(loop_ids.len());
            for v in loop_ids {
                let k = *vertex_index.get(v).ok_or(StructureError::UnknownVertex {
                    branch: *id,
                    vertex: *v,
                })?;
                idx.push(k);
            }
            let pts: Vec<Point3> = idx.iter().map(|&k| positions[k]).collect();
            let frame = if branch_dim == 1 {
                segment_frame(pts[0], pts[1])
            } else {
                polygon_frame(&pts)
            };
            let local: Vec<Vec2> = pts.iter().map(|&p| frame.to_local(p)).collect();
            let convex = branch_dim == 1 || polygon::is_convex(&local, tol.len);
            built.push(Branch {
                id: *id,
                vertex_ids: loop_ids.clone(),
                frame,
                local,
                vertex_idx: idx,
                convex,
            });
        }

        let check_facet = |f: &FacetRef| -> Result<(), StructureError> {
            let b = branch_index
                .get(&f.branch)
                .ok_or(StructureError::UnknownBranch(f.branch))?;
            if (f.facet as usize) < built[*b].facet_count() {
                Ok(())
            } else {
                Err(StructureError::FacetOutOfRange(*f))
            }
        };

        let mut edge_index = HashMap::new();
        let mut ram_edges = Vec::with_capacity(glue.len());
        for (i, (id, facets)) in glue.iter().enumerate() {
            if edge_index.insert(*id, i).is_some() {
                return Err(StructureError::DuplicateEdge(*id));
            }
            let mut incident = Vec::with_capacity(facets.len());
            for f in facets {
                check_facet(f)?;
                let b = &built[branch_index[&f.branch]];
                incident.push(Incidence {
                    branch: f.branch,
                    facet: f.facet,
                    normal: inward_normal(b, f.facet as usize).unwrap_or([0.0, 0.0]),
                });
            }
            let vertices = facets
                .first()
                .map(|f| built[branch_index[&f.branch]].facet_vertices(f.facet as usize))
                .unwrap_or_default();
            ram_edges.push(RamEdge {
                id: *id,
                vertices,
                incident,
            });
        }
        for f in boundary_facets {
            check_facet(f)?;
        }
        for v in boundary_vertices {
            if !vertex_index.contains_key(v) {
                return Err(StructureError::UnknownBoundaryVertex(*v));
            }
        }

        Ok(LepComplex {
            ambient_dim,
            branch_dim,
            vertex_ids,
            positions,
            vertex_index,
            branches: built,
            branch_index,
            ram_edges,
            edge_index,
            boundary_facets: boundary_facets.iter().copied().collect(),
            boundary_vertices: boundary_vertices.iter().copied().collect(),
            tol,
            diameter,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn branch_dim(&self) -> usize {
        self.branch_dim
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    /// Diameter of the bounding box of all vertices.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn vertex_ids(&self) -> &[VertexId] {
        &self.vertex_ids
    }

    pub fn vertex_position(&self, id: VertexId) -> Option<Point3> {
        self.vertex_index.get(&id).map(|&i| self.positions[i])
    }

    pub(crate) fn positions(&self) -> &[Point3] {
        &self.positions
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn branch(&self, id: BranchId) -> Result<&Branch, GeometryError> {
        self.branch_index
            .get(&id)
            .map(|&i| &self.branches[i])
            .ok_or(GeometryError::UnknownBranch(id))
    }

    pub(crate) fn branch_idx(&self, id: BranchId) -> Result<usize, GeometryError> {
        self.branch_index
            .get(&id)
            .copied()
            .ok_or(GeometryError::UnknownBranch(id))
    }

    pub fn ram_edges(&self) -> &[RamEdge] {
        &self.ram_edges
    }

    pub fn ram_edge(&self, id: RamEdgeId) -> Result<&RamEdge, GeometryError> {
        self.edge_index
            .get(&id)
            .map(|&i| &self.ram_edges[i])
            .ok_or(GeometryError::UnknownEdge(id))
    }

    pub fn boundary_facets(&self) -> &BTreeSet<FacetRef> {
        &self.boundary_facets
    }

    pub fn boundary_vertices(&self) -> &BTreeSet<VertexId> {
        &self.boundary_vertices
    }

    pub fn facet_class(&self, facet: FacetRef) -> FacetClass {
        if let Some(e) = self
            .ram_edges
            .iter()
            .find(|e| e.incident.iter().any(|i| i.branch == facet.branch && i.facet == facet.facet))
        {
            return FacetClass::Ramification(e.id);
        }
        if self.boundary_facets.contains(&facet) {
            FacetClass::Boundary
        } else {
            FacetClass::Unclassified
        }
    }

    /// A vertex is in the excluded boundary when it is marked explicitly or
    /// lies on a boundary facet.
    pub fn is_boundary_vertex(&self, id: VertexId) -> bool {
        if self.boundary_vertices.contains(&id) {
            return true;
        }
        self.boundary_facets.iter().any(|f| {
            self.branch(f.branch)
                .map(|b| b.facet_vertices(f.facet as usize).contains(&id))
                .unwrap_or(false)
        })
    }

    /// Branches incident to a ramification edge (the set `Inc_x` of its points).
    pub fn incidence(&self, edge: RamEdgeId) -> Result<BTreeSet<BranchId>, GeometryError> {
        Ok(self.ram_edge(edge)?.incident.iter().map(|i| i.branch).collect())
    }

    /// The ramification edge a facet is glued into.
    pub fn ramification_edge_of(&self, facet: FacetRef) -> Result<RamEdgeId, GeometryError> {
        let b = self.branch(facet.branch)?;
        if facet.facet as usize >= b.facet_count() {
            return Err(GeometryError::UnknownFacet(facet));
        }
        match self.facet_class(facet) {
            FacetClass::Ramification(e) => Ok(e),
            _ => Err(GeometryError::NotRamificationEdge(facet)),
        }
    }

    /// Inward unit normal of a facet in branch-local coordinates.
    pub fn normal_vector(&self, branch: BranchId, facet: u32) -> Result<Vec2, GeometryError> {
        let b = self.branch(branch)?;
        let fr = FacetRef { branch, facet };
        if facet as usize >= b.facet_count() {
            return Err(GeometryError::UnknownFacet(fr));
        }
        if b.is_segment() && b.length() <= self.tol.len {
            return Err(GeometryError::DegenerateFacet(fr));
        }
        inward_normal(b, facet as usize).ok_or(GeometryError::DegenerateFacet(fr))
    }

    pub fn validate(&self) -> ValidationReport {
        validate::validate(self)
    }

    /// Ambient position of a branch-local point.
    pub fn to_ambient(&self, branch: BranchId, local: Vec2) -> Result<Point3, GeometryError> {
        Ok(self.branch(branch)?.frame.to_ambient(local))
    }

    /// Checks that a branch-local point lies on the closed branch.
    pub fn check_point(&self, branch: BranchId, local: Vec2) -> Result<(), GeometryError> {
        let b = self.branch(branch)?;
        if b.contains(local, self.tol.len.max(1e-12)) {
            Ok(())
        } else {
            Err(GeometryError::PointOutsideBranch(local[0], local[1], branch))
        }
    }

    /// Ramification edges containing an ambient point, with the point's
    /// parameter along the edge (0 at the first vertex, 1 at the second).
    pub(crate) fn edges_containing(&self, p: Point3) -> Vec<(usize, f64)> {
        let tol = self.tol.len.max(1e-12);
        let mut out = Vec::new();
        for (i, e) in self.ram_edges.iter().enumerate() {
            let Some(a) = e.vertices.first().and_then(|&v| self.vertex_position(v)) else {
                continue;
            };
            if e.vertices.len() == 1 {
                if linalg::dist3(a, p) <= tol {
                    out.push((i, 0.0));
                }
                continue;
            }
            let b = self.vertex_position(e.vertices[1]).unwrap_or(a);
            let ab = sub3(b, a);
            let len2 = dot3(ab, ab);
            if len2 == 0.0 {
                continue;
            }
            let t = dot3(sub3(p, a), ab) / len2;
            let proj = linalg::lerp3(a, b, t.clamp(0.0, 1.0));
            if linalg::dist3(proj, p) <= tol {
                out.push((i, t.clamp(0.0, 1.0)));
            }
        }
        out
    }
}

fn inward_normal(b: &Branch, facet: usize) -> Option<Vec2> {
    if b.is_segment() {
        return Some(if facet == 0 { [1.0, 0.0] } else { [-1.0, 0.0] });
    }
    let (p, q) = b.facet_local(facet);
    let d = sub2(q, p);
    let len = norm2(d);
    if len == 0.0 || !len.is_finite() {
        return None;
    }
    // left normal points inside a counterclockwise loop
    let mut nu = [-d[1] / len, d[0] / len];
    if b.area() < 0.0 {
        nu = [-nu[0], -nu[1]];
    }
    debug_assert!((dot2(nu, nu) - 1.0).abs() < 1e-12);
    Some(nu)
}

#[cfg(test)]
pub(crate) fn unit_square() -> LepComplex {
    let mut b = ComplexBuilder::new(3, 2);
    b.vertex(1, &[0.0, 0.0, 0.0])
        .vertex(2, &[1.0, 0.0, 0.0])
        .vertex(3, &[1.0, 1.0, 0.0])
        .vertex(4, &[0.0, 1.0, 0.0])
        .branch(1, &[1, 2, 3, 4]);
    for f in 0..4 {
        b.boundary_facet(1, f);
    }
    b.build().unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;


    #[test]
    fn square_normals() {
        let c = unit_square();
        let n = c.normal_vector(BranchId(1), 0).unwrap();
        assert!((n[0] - 0.0).abs() < 1e-12 && (n[1] - 1.0).abs() < 1e-12);
        let n = c.normal_vector(BranchId(1), 1).unwrap();
        assert!((n[0] + 1.0).abs() < 1e-12 && n[1].abs() < 1e-12);
        assert!(matches!(
            c.normal_vector(BranchId(1), 9),
            Err(GeometryError::UnknownFacet(_))
        ));
    }

    #[test]
    fn zero_length_facet_is_degenerate() {
        let mut b = ComplexBuilder::new(3, 2);
        b.vertex(1, &[0.0, 0.0, 0.0])
            .vertex(2, &[1.0, 0.0, 0.0])
            .vertex(3, &[1.0, 1.0, 0.0])
            .branch(1, &[1, 2, 2, 3]);
        let c = b.build().unwrap();
        assert_eq!(
            c.normal_vector(BranchId(1), 1),
            Err(GeometryError::DegenerateFacet(FacetRef::new(1, 1)))
        );
    }

    #[test]
    fn frame_is_isometric_and_counterclockwise() {
        let c = unit_square();
        let b = c.branch(BranchId(1)).unwrap();
        assert!(b.area() > 0.0);
        assert!((b.area() - 1.0).abs() < 1e-12);
        for (&vid, l) in b.vertex_ids.iter().zip(&b.local) {
            let p = c.vertex_position(vid).unwrap();
            assert!(linalg::dist3(b.frame.to_ambient(*l), p) < 1e-12);
        }
    }

    #[test]
    fn structural_errors() {
        let mut b = ComplexBuilder::new(3, 2);
        b.vertex(1, &[0.0, 0.0, 0.0]).branch(1, &[1, 2, 3]);
        assert_eq!(
            b.build().unwrap_err(),
            StructureError::UnknownVertex {
                branch: BranchId(1),
                vertex: VertexId(2)
            }
        );
        let mut b = ComplexBuilder::new(2, 2);
        b.vertex(1, &[0.0, 0.0]);
        assert!(matches!(
            b.build(),
            Err(StructureError::UnsupportedDimension { .. })
        ));
    }
}
