//! Node placement and per-branch triangulation.

use std::collections::{BTreeMap, HashMap};

use spade::{ConstrainedDelaunayTriangulation, HasPosition, Point2, Triangulation};

use super::{GraphNode, MeshParams, MetricError, NodeKind};
use crate::geometry::linalg::{dist2, lerp2, lerp3, Vec2};
use crate::geometry::polygon::{self, PointClass};
use crate::geometry::{FacetClass, FacetRef, LepComplex, VertexId};

/// Per-branch mesh: node ids, triangles and ring-1 adjacency.
#[derive(Clone, Debug, Default)]
pub struct BranchMesh {
    pub nodes: Vec<usize>,
    pub triangles: Vec<[usize; 3]>,
    pub adjacency: HashMap<usize, Vec<usize>>,
}

impl BranchMesh {
    /// Consecutive node pairs of a segment branch.
    pub(crate) fn nodes_in_order(&self) -> Vec<(usize, usize)> {
        self.nodes.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

pub(crate) struct Placement {
    pub nodes: Vec<GraphNode>,
    pub meshes: Vec<BranchMesh>,
}

#[derive(Clone, Copy, Debug)]
struct Site {
    pos: Point2<f64>,
    id: usize,
}

impl HasPosition for Site {
    type Scalar = f64;
    fn position(&self) -> Point2<f64> {
        self.pos
    }
}

fn facet_key(a: VertexId, b: VertexId) -> (VertexId, VertexId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn segments_for(len: f64, p: &MeshParams) -> usize {
    let by_h = (len / p.h).ceil().max(1.0) as usize;
    by_h.max(p.steiner_per_edge + 1)
}

struct Builder<'a> {
    c: &'a LepComplex,
    nodes: Vec<GraphNode>,
    vertex_nodes: HashMap<VertexId, usize>,
    /// Intermediate nodes of each geometric edge, ordered from the smaller vertex id.
    facet_nodes: BTreeMap<(VertexId, VertexId), Vec<usize>>,
}

impl Builder<'_> {
    fn add(&mut self, node: GraphNode) -> usize {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    fn join(&mut self, id: usize, bi: usize, local: Vec2) {
        let m = &mut self.nodes[id].members;
        if !m.iter().any(|(b, _)| *b == bi) {
            m.push((bi, local));
        }
    }
}

pub(crate) fn place(c: &LepComplex, params: &MeshParams) -> Result<Placement, MetricError> {
    let mut b = Builder {
        c,
        nodes: Vec::new(),
        vertex_nodes: HashMap::new(),
        facet_nodes: BTreeMap::new(),
    };

    // vertex nodes, in file order of the vertices actually used
    let mut used: Vec<VertexId> = c
        .branches()
        .iter()
        .flat_map(|br| br.vertex_ids.iter().copied())
        .collect();
    used.sort();
    used.dedup();
    for v in c.vertex_ids().iter().filter(|v| used.binary_search(v).is_ok()) {
        let ambient = c.vertex_position(*v).expect("known vertex");
        let shared = c.branches().iter().filter(|br| br.vertex_ids.contains(v)).count();
        let boundary = c.is_boundary_vertex(*v);
        let sigma = if c.branch_dim() == 1 && !boundary && shared >= 2 {
            c.ram_edges().iter().position(|e| e.vertices == [*v])
        } else {
            None
        };
        let id = b.add(GraphNode {
            ambient,
            kind: NodeKind::Vertex(*v),
            members: Vec::new(),
            boundary,
            sigma,
        });
        b.vertex_nodes.insert(*v, id);
    }

    let mut meshes = Vec::with_capacity(c.branches().len());
    for (bi, br) in c.branches().iter().enumerate() {
        let mesh = if c.branch_dim() == 1 {
            segment_mesh(&mut b, bi, params)
        } else {
            polygon_mesh(&mut b, bi, params)?
        };
        meshes.push(mesh);
        let _ = br;
    }
    Ok(Placement { nodes: b.nodes, meshes })
}

fn segment_mesh(b: &mut Builder, bi: usize, params: &MeshParams) -> BranchMesh {
    let br = &b.c.branches()[bi];
    let (va, vb) = (br.vertex_ids[0], br.vertex_ids[1]);
    let (pa, pb) = (
        b.c.vertex_position(va).expect("vertex"),
        b.c.vertex_position(vb).expect("vertex"),
    );
    let len = br.length();
    let segs = segments_for(len, params);
    let mut ids = vec![b.vertex_nodes[&va]];
    for i in 1..segs {
        let t = i as f64 / segs as f64;
        let id = b.add(GraphNode {
            ambient: lerp3(pa, pb, t),
            kind: NodeKind::Interior(br.id),
            members: Vec::new(),
            boundary: false,
            sigma: None,
        });
        ids.push(id);
    }
    ids.push(b.vertex_nodes[&vb]);
    let n = ids.len();
    for (i, &id) in ids.iter().enumerate() {
        let t = i as f64 / (n - 1) as f64;
        b.join(id, bi, [t * len, 0.0]);
    }
    let mut adjacency: HashMap<usize, Vec<usize>> = HashMap::new();
    for w in ids.windows(2) {
        adjacency.entry(w[0]).or_default().push(w[1]);
        adjacency.entry(w[1]).or_default().push(w[0]);
    }
    BranchMesh {
        nodes: ids,
        triangles: Vec::new(),
        adjacency,
    }
}

/// Boundary loop of a polygon branch: corners and facet nodes in loop order.
fn boundary_loop(b: &mut Builder, bi: usize, params: &MeshParams) -> Vec<(usize, Vec2)> {
    let c = b.c;
    let br = &c.branches()[bi];
    let m = br.vertex_ids.len();
    let mut out = Vec::new();
    for i in 0..m {
        let (va, vb) = (br.vertex_ids[i], br.vertex_ids[(i + 1) % m]);
        let (la, lb) = (br.local[i], br.local[(i + 1) % m]);
        out.push((b.vertex_nodes[&va], la));
        let key = facet_key(va, vb);
        if !b.facet_nodes.contains_key(&key) {
            let (pa, pb) = (
                c.vertex_position(key.0).expect("vertex"),
                c.vertex_position(key.1).expect("vertex"),
            );
            let segs = segments_for(dist2(la, lb), params);
            let fr = FacetRef { branch: br.id, facet: i as u32 };
            let class = c.facet_class(fr);
            let boundary = class == FacetClass::Boundary;
            let sigma = match class {
                FacetClass::Ramification(e) => c.ram_edges().iter().position(|x| x.id == e),
                _ => None,
            };
            let mut ids = Vec::with_capacity(segs.saturating_sub(1));
            for s in 1..segs {
                let t = s as f64 / segs as f64;
                let id = b.add(GraphNode {
                    ambient: lerp3(pa, pb, t),
                    kind: NodeKind::Facet {
                        a: key.0,
                        b: key.1,
                        index: s as u32,
                    },
                    members: Vec::new(),
                    boundary,
                    sigma,
                });
                ids.push(id);
            }
            b.facet_nodes.insert(key, ids);
        }
        let ids = b.facet_nodes[&key].clone();
        let k = ids.len() + 1;
        let forward = va == key.0;
        for s in 1..k {
            let id = if forward { ids[s - 1] } else { ids[k - 1 - s] };
            out.push((id, lerp2(la, lb, s as f64 / k as f64)));
        }
    }
    for &(id, l) in &out {
        b.join(id, bi, l);
    }
    out
}

fn polygon_mesh(b: &mut Builder, bi: usize, params: &MeshParams) -> Result<BranchMesh, MetricError> {
    let ring = boundary_loop(b, bi, params);
    let br = &b.c.branches()[bi];
    let poly = br.local.clone();
    let bid = br.id;
    let h = params.h;
    let a = h / 1.5;

    let mut cdt: ConstrainedDelaunayTriangulation<Site> = ConstrainedDelaunayTriangulation::new();
    let fail = |reason: String| MetricError::Meshing { branch: bid, reason };
    let mut handles = Vec::with_capacity(ring.len());
    for &(id, l) in &ring {
        let hd = cdt
            .insert(Site { pos: Point2::new(l[0], l[1]), id })
            .map_err(|e| fail(format!("{e:?}")))?;
        handles.push(hd);
    }
    let n = handles.len();
    for i in 0..n {
        let (p, q) = (handles[i], handles[(i + 1) % n]);
        if p != q && !cdt.can_add_constraint(p, q) {
            return Err(fail("boundary constraints intersect".into()));
        }
        cdt.add_constraint(p, q);
    }

    // triangular lattice, anchored at the lower-left corner of the bounding box
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &poly {
        lo = [lo[0].min(p[0]), lo[1].min(p[1])];
        hi = [hi[0].max(p[0]), hi[1].max(p[1])];
    }
    let dy = a * 3f64.sqrt() / 2.0;
    let (x0, y0) = (lo[0] + 0.37 * a, lo[1] + 0.41 * a);
    let rows = ((hi[1] - y0) / dy).floor().max(0.0) as usize + 1;
    let cols = ((hi[0] - x0) / a).floor().max(0.0) as usize + 2;
    let tol = b.c.tolerances().len;
    let mut interior = Vec::new();
    for r in 0..rows {
        let y = y0 + r as f64 * dy;
        let shift = if r % 2 == 1 { 0.5 * a } else { 0.0 };
        for col in 0..cols {
            let p = [x0 + shift + col as f64 * a, y];
            if polygon::classify_point(p, &poly, tol) == PointClass::Inside
                && polygon::boundary_distance(p, &poly) >= 0.35 * a
            {
                interior.push(p);
            }
        }
    }
    for p in interior {
        add_interior(b, &mut cdt, bi, p)?;
    }

    // split long interior edges until every kept triangle edge is at most h
    for _ in 0..24 {
        let mut splits = Vec::new();
        for e in cdt.undirected_edges() {
            if e.is_constraint_edge() {
                continue;
            }
            let [p, q] = e.positions();
            let (p, q) = ([p.x, p.y], [q.x, q.y]);
            if dist2(p, q) <= h * (1.0 + 1e-9) {
                continue;
            }
            let de = e.as_directed();
            let inner = [de, de.rev()].iter().any(|d| {
                d.face().as_inner().is_some_and(|f| {
                    let ps = f.positions();
                    let cen = [(ps[0].x + ps[1].x + ps[2].x) / 3.0, (ps[0].y + ps[1].y + ps[2].y) / 3.0];
                    polygon::classify_point(cen, &poly, tol) == PointClass::Inside
                })
            });
            if inner {
                splits.push(lerp2(p, q, 0.5));
            }
        }
        if splits.is_empty() {
            break;
        }
        for p in splits {
            add_interior(b, &mut cdt, bi, p)?;
        }
    }

    let mut triangles = Vec::new();
    for f in cdt.inner_faces() {
        let ps = f.positions();
        let cen = [(ps[0].x + ps[1].x + ps[2].x) / 3.0, (ps[0].y + ps[1].y + ps[2].y) / 3.0];
        if polygon::classify_point(cen, &poly, tol) != PointClass::Inside {
            continue;
        }
        let vs = f.vertices();
        triangles.push([vs[0].data().id, vs[1].data().id, vs[2].data().id]);
    }
    let mut adjacency: HashMap<usize, Vec<usize>> = HashMap::new();
    for t in &triangles {
        for k in 0..3 {
            let (x, y) = (t[k], t[(k + 1) % 3]);
            adjacency.entry(x).or_default().push(y);
            adjacency.entry(y).or_default().push(x);
        }
    }
    for v in adjacency.values_mut() {
        v.sort_unstable();
        v.dedup();
    }
    let mut nodes: Vec<usize> = cdt.vertices().map(|v| v.data().id).collect();
    nodes.sort_unstable();
    Ok(BranchMesh {
        nodes,
        triangles,
        adjacency,
    })
}

fn add_interior(
    b: &mut Builder,
    cdt: &mut ConstrainedDelaunayTriangulation<Site>,
    bi: usize,
    p: Vec2,
) -> Result<(), MetricError> {
    let br = &b.c.branches()[bi];
    let id = b.nodes.len();
    if cdt.locate_vertex(Point2::new(p[0], p[1])).is_some() {
        return Ok(());
    }
    cdt.insert(Site { pos: Point2::new(p[0], p[1]), id })
        .map_err(|e| MetricError::Meshing { branch: br.id, reason: format!("{e:?}") })?;
    let node = GraphNode {
        ambient: br.frame.to_ambient(p),
        kind: NodeKind::Interior(br.id),
        members: vec![(bi, p)],
        boundary: false,
        sigma: None,
    };
    b.add(node);
    Ok(())
}
