//! Canonical charts at ramification points and two-branch unfoldings.

use super::linalg::{add2, dist2, dot2, dot3, normalize3, scale2, sub2, sub3, Point3, Vec2};
use super::{BranchId, GeometryError, LepComplex, RamEdge, RamEdgeId};

/// Isometry of one incident branch onto the model half-plane `{x1 >= 0}`.
///
/// Model coordinates of a branch-local point `y` are
/// `(nu . (y - o), t . (y - o))`: distance from the edge line, then position
/// along the edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChartMap {
    pub branch: BranchId,
    /// Position of the branch in the chart's index bijection (1-based).
    pub index: usize,
    /// Base point in branch-local coordinates.
    pub origin: Vec2,
    /// Inward unit normal (branch-local).
    pub normal: Vec2,
    /// Unit edge direction (branch-local).
    pub tangent: Vec2,
}

impl ChartMap {
    pub fn forward(&self, y: Vec2) -> Vec2 {
        let d = sub2(y, self.origin);
        [dot2(d, self.normal), dot2(d, self.tangent)]
    }

    pub fn inverse(&self, m: Vec2) -> Vec2 {
        add2(
            self.origin,
            add2(scale2(self.normal, m[0]), scale2(self.tangent, m[1])),
        )
    }
}

/// Canonical identification of a neighbourhood of a ramification point with
/// an elementary ramified space: every incident branch is sent to its own
/// copy of the half-plane, the base point to the origin and the edge to the
/// line `x1 = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    pub base: Point3,
    pub edge: RamEdgeId,
    pub maps: Vec<ChartMap>,
}

impl Chart {
    pub fn order(&self) -> usize {
        self.maps.len()
    }

    pub fn map(&self, branch: BranchId) -> Option<&ChartMap> {
        self.maps.iter().find(|m| m.branch == branch)
    }
}

/// Planar isometries sending two incident branches to opposite sides of the
/// edge line: branch `j` to `x1 >= 0`, branch `k` to `x1 <= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Unfolding {
    pub edge: RamEdgeId,
    pub j: ChartMap,
    pub k: ChartMap,
}

impl Unfolding {
    pub fn forward(&self, branch: BranchId, y: Vec2) -> Option<Vec2> {
        if branch == self.j.branch {
            Some(self.j.forward(y))
        } else if branch == self.k.branch {
            let m = self.k.forward(y);
            Some([-m[0], m[1]])
        } else {
            None
        }
    }

    /// Branch-local preimage of an unfolded point; the sign of the first
    /// coordinate selects the branch (zero belongs to both, `j` is returned).
    pub fn inverse(&self, m: Vec2) -> (BranchId, Vec2) {
        if m[0] >= 0.0 {
            (self.j.branch, self.j.inverse(m))
        } else {
            (self.k.branch, self.k.inverse([-m[0], m[1]]))
        }
    }
}

fn edge_frame(c: &LepComplex, e: &RamEdge) -> Result<(Point3, Option<Point3>), GeometryError> {
    let a = e
        .vertices
        .first()
        .and_then(|&v| c.vertex_position(v))
        .ok_or(GeometryError::UnknownEdge(e.id))?;
    let dir = match e.vertices.get(1).and_then(|&v| c.vertex_position(v)) {
        Some(b) => Some(normalize3(sub3(b, a)).ok_or(GeometryError::UnknownEdge(e.id))?),
        None => None,
    };
    Ok((a, dir))
}

fn chart_map(
    c: &LepComplex,
    e: &RamEdge,
    branch: BranchId,
    index: usize,
    base: Point3,
) -> Result<ChartMap, GeometryError> {
    let inc = e
        .incident
        .iter()
        .find(|i| i.branch == branch)
        .ok_or(GeometryError::NotIncident { branch, edge: e.id })?;
    let b = c.branch(branch)?;
    let (_, dir) = edge_frame(c, e)?;
    let tangent = match dir {
        Some(d) => b.frame.vector_to_local(d),
        None => [-inc.normal[1], inc.normal[0]],
    };
    Ok(ChartMap {
        branch,
        index,
        origin: b.frame.to_local(base),
        normal: inc.normal,
        tangent,
    })
}

impl LepComplex {
    /// Canonical chart at an ambient point of the ramification set.
    pub fn canonical_chart(&self, x: Point3) -> Result<Chart, GeometryError> {
        let hits = self.edges_containing(x);
        let &(ei, t) = hits.first().ok_or(GeometryError::NotOnRamificationSet)?;
        let e = &self.ram_edges()[ei];
        if e.vertices.len() == 2 {
            let (a, _) = edge_frame(self, e)?;
            let b = self.vertex_position(e.vertices[1]).unwrap_or(a);
            let len = super::linalg::dist3(a, b);
            let tol = self.tolerances().len;
            if t * len <= tol || (1.0 - t) * len <= tol {
                return Err(GeometryError::NearCorner(tol, e.id));
            }
        }
        let maps = e
            .incident
            .iter()
            .enumerate()
            .map(|(i, inc)| chart_map(self, e, inc.branch, i + 1, x))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Chart {
            base: x,
            edge: e.id,
            maps,
        })
    }

    /// Flattens branches `j` and `k` of a ramification edge into one plane.
    pub fn unfold_pair(
        &self,
        edge: RamEdgeId,
        j: BranchId,
        k: BranchId,
    ) -> Result<Unfolding, GeometryError> {
        let e = self.ram_edge(edge)?;
        if j == k {
            return Err(GeometryError::SameBranch);
        }
        let (a, _) = edge_frame(self, e)?;
        Ok(Unfolding {
            edge,
            j: chart_map(self, e, j, 1, a)?,
            k: chart_map(self, e, k, 2, a)?,
        })
    }

    /// Straight-line length between two points after unfolding their branches
    /// along a shared ramification edge (plain distance when `j == k`).
    pub fn unfolding_distance(
        &self,
        edge: RamEdgeId,
        j: BranchId,
        pj: Vec2,
        k: BranchId,
        pk: Vec2,
    ) -> Result<f64, GeometryError> {
        if j == k {
            self.branch(j)?;
            return Ok(dist2(pj, pk));
        }
        let u = self.unfold_pair(edge, j, k)?;
        let a = u.forward(j, pj).ok_or(GeometryError::NotIncident { branch: j, edge })?;
        let b = u.forward(k, pk).ok_or(GeometryError::NotIncident { branch: k, edge })?;
        Ok(dist2(a, b))
    }

    /// Ambient unit direction of a ramification edge (from its first vertex).
    pub fn edge_direction(&self, edge: RamEdgeId) -> Result<Option<Point3>, GeometryError> {
        let e = self.ram_edge(edge)?;
        Ok(edge_frame(self, e)?.1)
    }

    /// Signed position of an ambient point along an edge, measured from its first vertex.
    pub fn edge_coordinate(&self, edge: RamEdgeId, x: Point3) -> Result<f64, GeometryError> {
        let e = self.ram_edge(edge)?;
        let (a, dir) = edge_frame(self, e)?;
        Ok(dir.map(|d| dot3(sub3(x, a), d)).unwrap_or(0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::super::{ComplexBuilder, FacetRef};
    use super::*;

    /// Two unit squares meeting at a right angle along the x axis.
    fn dihedral() -> LepComplex {
        let mut b = ComplexBuilder::new(3, 2);
        b.vertex(1, &[0.0, 0.0, 0.0])
            .vertex(2, &[1.0, 0.0, 0.0])
            .vertex(3, &[1.0, 1.0, 0.0])
            .vertex(4, &[0.0, 1.0, 0.0])
            .vertex(5, &[1.0, 0.0, 1.0])
            .vertex(6, &[0.0, 0.0, 1.0])
            .branch(1, &[1, 2, 3, 4])
            .branch(2, &[2, 1, 6, 5])
            .glue(1, &[(1, 0), (2, 0)]);
        for f in 1..4 {
            b.boundary_facet(1, f).boundary_facet(2, f);
        }
        b.build().unwrap()
    }

    #[test]
    fn dihedral_unfolds_to_rectangle() {
        let c = dihedral();
        assert!(c.validate().valid, "{}", c.validate());
        let u = c.unfold_pair(RamEdgeId(1), BranchId(1), BranchId(2)).unwrap();
        let far1 = c.branch(BranchId(1)).unwrap().frame.to_local([0.0, 1.0, 0.0]);
        let far2 = c.branch(BranchId(2)).unwrap().frame.to_local([0.0, 0.0, 1.0]);
        let m1 = u.forward(BranchId(1), far1).unwrap();
        let m2 = u.forward(BranchId(2), far2).unwrap();
        assert!((m1[0] - 1.0).abs() < 1e-12 && (m2[0] + 1.0).abs() < 1e-12);
        assert!((m1[1] - m2[1]).abs() < 1e-12);
        assert_eq!(
            c.ramification_edge_of(FacetRef::new(1, 1)),
            Err(GeometryError::NotRamificationEdge(FacetRef::new(1, 1)))
        );
    }

    #[test]
    fn chart_errors() {
        let c = dihedral();
        assert_eq!(
            c.canonical_chart([0.5, 0.5, 0.0]),
            Err(GeometryError::NotOnRamificationSet)
        );
        assert!(matches!(
            c.canonical_chart([0.0, 0.0, 0.0]),
            Err(GeometryError::NearCorner(..))
        ));
        let ch = c.canonical_chart([0.25, 0.0, 0.0]).unwrap();
        assert_eq!(ch.order(), 2);
        for m in &ch.maps {
            let back = m.inverse(m.forward([0.3, 0.7]));
            assert!(dist2(back, [0.3, 0.7]) < 1e-12);
        }
    }
}
