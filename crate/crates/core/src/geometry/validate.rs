//! Axiom checks for [`LepComplex`].

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use super::linalg::{add3, cross3, dist3, dot3, norm3, scale3, sub3, Point3};
use super::polygon::{self, PointClass};
use super::{Branch, FacetRef, LepComplex, VertexId};

/// Named axiom of a valid complex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    NonPlanarBranch,
    DegenerateBranch,
    DegenerateFacet,
    NonSimplePolygon,
    HyperplanesNotDistinct,
    ClosuresOverlap,
    PartialEdgeContact,
    GlueMismatch,
    DanglingRamificationFacet,
    FacetClassifiedTwice,
    InconsistentEdgeClassification,
    CornerInRamificationSet,
    Disconnected,
}

impl Rule {
    pub fn reason(self) -> &'static str {
        match self {
            Rule::NonPlanarBranch => "branch not planar",
            Rule::DegenerateBranch => "degenerate branch",
            Rule::DegenerateFacet => "degenerate facet",
            Rule::NonSimplePolygon => "polygon not simple",
            Rule::HyperplanesNotDistinct => "hyperplanes not pairwise distinct",
            Rule::ClosuresOverlap => "branch closures meet outside their boundaries",
            Rule::PartialEdgeContact => "partial edge contact",
            Rule::GlueMismatch => "glued facets do not coincide",
            Rule::DanglingRamificationFacet => "dangling ramification facet",
            Rule::FacetClassifiedTwice => "facet classified twice",
            Rule::InconsistentEdgeClassification => "inconsistent edge classification",
            Rule::CornerInRamificationSet => "corner in ramification set",
            Rule::Disconnected => "disconnected complex",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.reason())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Violation {
    pub rule: Rule,
    /// Offending elements, e.g. `branch 2`, `facet 1:3`, `vertex 7`.
    pub elements: Vec<String>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.rule, self.elements.join(", "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn has(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }

    pub fn rules(&self) -> BTreeSet<Rule> {
        self.violations.iter().map(|v| v.rule).collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.valid {
            return writeln!(f, "valid");
        }
        writeln!(f, "invalid ({} violations)", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  {v}")?;
        }
        Ok(())
    }
}

struct Collector(BTreeSet<Violation>);

impl Collector {
    fn push(&mut self, rule: Rule, mut elements: Vec<String>) {
        elements.sort();
        elements.dedup();
        self.0.insert(Violation { rule, elements });
    }
}

fn branch_label(b: &Branch) -> String {
    format!("branch {}", b.id)
}

pub(super) fn validate(c: &LepComplex) -> ValidationReport {
    let mut out = Collector(BTreeSet::new());
    let tol = c.tolerances();

    for b in c.branches() {
        if c.branch_dim() == 2 {
            let off = b
                .vertex_idx
                .iter()
                .map(|&k| b.frame.offset(c.positions()[k]))
                .fold(0.0, f64::max);
            if off > tol.planar {
                out.push(Rule::NonPlanarBranch, vec![branch_label(b)]);
            }
            if b.area().abs() <= tol.area {
                out.push(Rule::DegenerateBranch, vec![branch_label(b)]);
            }
            for f in 0..b.facet_count() {
                let (p, q) = b.facet_local(f);
                if super::linalg::dist2(p, q) <= tol.len {
                    out.push(
                        Rule::DegenerateFacet,
                        vec![format!("facet {}", FacetRef { branch: b.id, facet: f as u32 })],
                    );
                }
            }
            if !polygon::is_simple(&b.local, tol.len) {
                out.push(Rule::NonSimplePolygon, vec![branch_label(b)]);
            }
        } else if b.length() <= tol.len {
            out.push(Rule::DegenerateBranch, vec![branch_label(b)]);
        }
    }

    check_glue(c, &mut out);
    check_pairs(c, &mut out);
    check_corners(c, &mut out);
    check_connected(c, &mut out);

    let violations: Vec<Violation> = out.0.into_iter().collect();
    ValidationReport {
        valid: violations.is_empty(),
        violations,
    }
}

fn facet_key(c: &LepComplex, f: FacetRef) -> Vec<VertexId> {
    let mut k = c
        .branch(f.branch)
        .map(|b| b.facet_vertices(f.facet as usize))
        .unwrap_or_default();
    k.sort();
    k
}

fn check_glue(c: &LepComplex, out: &mut Collector) {
    // classification count per facet
    let mut uses: BTreeMap<FacetRef, usize> = BTreeMap::new();
    for b in c.branches() {
        for f in 0..b.facet_count() {
            uses.insert(FacetRef { branch: b.id, facet: f as u32 }, 0);
        }
    }
    // facets grouped by their vertex set, with their classification tag
    let mut groups: BTreeMap<Vec<VertexId>, Vec<(FacetRef, Option<u32>)>> = BTreeMap::new();

    for e in c.ram_edges() {
        let label = format!("edge {}", e.id);
        if e.order() < 2 {
            let mut el = vec![label.clone()];
            el.extend(e.incident.iter().map(|i| format!("facet {}:{}", i.branch, i.facet)));
            out.push(Rule::DanglingRamificationFacet, el);
        }
        let keys: BTreeSet<Vec<VertexId>> = e
            .incident
            .iter()
            .map(|i| facet_key(c, FacetRef { branch: i.branch, facet: i.facet }))
            .collect();
        let branches: BTreeSet<_> = e.incident.iter().map(|i| i.branch).collect();
        if keys.len() > 1 || branches.len() != e.incident.len() {
            out.push(Rule::GlueMismatch, vec![label.clone()]);
        }
        for i in &e.incident {
            let fr = FacetRef { branch: i.branch, facet: i.facet };
            *uses.entry(fr).or_default() += 1;
            groups.entry(facet_key(c, fr)).or_default().push((fr, Some(e.id.0)));
        }
    }
    for &fr in c.boundary_facets() {
        *uses.entry(fr).or_default() += 1;
        groups.entry(facet_key(c, fr)).or_default().push((fr, None));
    }
    for (fr, n) in &uses {
        match n {
            0 => out.push(Rule::DanglingRamificationFacet, vec![format!("facet {fr}")]),
            1 => {}
            _ => out.push(Rule::FacetClassifiedTwice, vec![format!("facet {fr}")]),
        }
    }
    // unclassified facets sharing a vertex set with others
    for b in c.branches() {
        for f in 0..b.facet_count() {
            let fr = FacetRef { branch: b.id, facet: f as u32 };
            if uses[&fr] == 0 {
                groups.entry(facet_key(c, fr)).or_default().push((fr, Some(u32::MAX)));
            }
        }
    }
    for members in groups.values() {
        let tags: BTreeSet<Option<u32>> = members.iter().map(|m| m.1).collect();
        if members.len() > 1 && tags.len() > 1 {
            let el = members.iter().map(|m| format!("facet {}", m.0)).collect();
            out.push(Rule::InconsistentEdgeClassification, el);
        }
    }
}

/// Plane or line carrying a branch: a point and a unit normal (n = 2) or unit
/// direction (n = 1).
fn carrier(b: &Branch, dim: usize) -> (Point3, Point3) {
    if dim == 2 {
        (b.frame.origin, b.frame.normal)
    } else {
        (b.frame.origin, b.frame.axes[0])
    }
}

fn same_carrier(a: &Branch, b: &Branch, dim: usize, tol: f64) -> bool {
    let (pa, va) = carrier(a, dim);
    let (pb, vb) = carrier(b, dim);
    if norm3(cross3(va, vb)) > 1e-9 {
        return false;
    }
    let d = sub3(pb, pa);
    if dim == 2 {
        dot3(d, va).abs() <= tol
    } else {
        norm3(cross3(d, va)) <= tol
    }
}

fn check_pairs(c: &LepComplex, out: &mut Collector) {
    let tol = c.tolerances();
    let bs = c.branches();
    let dim = c.branch_dim();
    for i in 0..bs.len() {
        for j in (i + 1)..bs.len() {
            let (a, b) = (&bs[i], &bs[j]);
            if a.local.len() < 2 || b.local.len() < 2 {
                continue;
            }
            if same_carrier(a, b, dim, tol.planar) {
                out.push(Rule::HyperplanesNotDistinct, vec![branch_label(a), branch_label(b)]);
                continue;
            }
            if dim == 2 {
                polygon_contact(c, a, b, out);
            } else {
                segment_contact(c, a, b, out);
            }
        }
    }
}

fn corner_at(c: &LepComplex, b: &Branch, p: Point3, tol: f64) -> Option<VertexId> {
    b.vertex_ids
        .iter()
        .copied()
        .find(|&v| c.vertex_position(v).map(|q| dist3(p, q) <= tol).unwrap_or(false))
}

fn segment_contact(c: &LepComplex, a: &Branch, b: &Branch, out: &mut Collector) {
    let tol = c.tolerances().len;
    let pa = [c.positions()[a.vertex_idx[0]], c.positions()[a.vertex_idx[1]]];
    let pb = [c.positions()[b.vertex_idx[0]], c.positions()[b.vertex_idx[1]]];
    let (s, t) = closest_params(pa[0], pa[1], pb[0], pb[1]);
    let qa = super::linalg::lerp3(pa[0], pa[1], s);
    let qb = super::linalg::lerp3(pb[0], pb[1], t);
    if dist3(qa, qb) > tol {
        return;
    }
    let ca = corner_at(c, a, qa, tol);
    let cb = corner_at(c, b, qb, tol);
    match (ca, cb) {
        (Some(u), Some(v)) if u == v => {}
        (Some(_), Some(_)) => {
            out.push(Rule::PartialEdgeContact, vec![branch_label(a), branch_label(b)])
        }
        _ => out.push(Rule::ClosuresOverlap, vec![branch_label(a), branch_label(b)]),
    }
}

/// Parameters of the closest points between segments `p0 p1` and `q0 q1`.
fn closest_params(p0: Point3, p1: Point3, q0: Point3, q1: Point3) -> (f64, f64) {
    let d1 = sub3(p1, p0);
    let d2 = sub3(q1, q0);
    let r = sub3(p0, q0);
    let a = dot3(d1, d1);
    let e = dot3(d2, d2);
    let f = dot3(d2, r);
    let cc = dot3(d1, r);
    let b = dot3(d1, d2);
    let denom = a * e - b * b;
    let mut s = if denom > 1e-300 { ((b * f - cc * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
    let mut t = if e > 0.0 { (b * s + f) / e } else { 0.0 };
    if t < 0.0 {
        t = 0.0;
        s = if a > 0.0 { (-cc / a).clamp(0.0, 1.0) } else { 0.0 };
    } else if t > 1.0 {
        t = 1.0;
        s = if a > 0.0 { ((b - cc) / a).clamp(0.0, 1.0) } else { 0.0 };
    }
    (s, t)
}

/// Line where the two branch planes meet, as a point and unit direction.
fn plane_intersection(a: &Branch, b: &Branch) -> Option<(Point3, Point3)> {
    let (n1, n2) = (a.frame.normal, b.frame.normal);
    let d = cross3(n1, n2);
    let dd = dot3(d, d);
    if dd < 1e-18 {
        return None;
    }
    let h1 = dot3(n1, a.frame.origin);
    let h2 = dot3(n2, b.frame.origin);
    let p0 = scale3(add3(scale3(cross3(n2, d), h1), scale3(cross3(d, n1), h2)), 1.0 / dd);
    Some((p0, scale3(d, 1.0 / dd.sqrt())))
}

/// Line parameters where the polygon outline meets the line.
fn line_breaks(b: &Branch, p0: Point3, dir: Point3, out: &mut Vec<f64>) {
    let o = b.frame.to_local(p0);
    let v = b.frame.vector_to_local(dir);
    let m = b.local.len();
    for i in 0..m {
        let p = b.local[i];
        let q = b.local[(i + 1) % m];
        let s = [q[0] - p[0], q[1] - p[1]];
        let denom = v[0] * s[1] - v[1] * s[0];
        let w = [p[0] - o[0], p[1] - o[1]];
        // corners always count; a proper crossing adds its parameter
        out.push(w[0] * v[0] + w[1] * v[1]);
        if denom.abs() > 1e-14 {
            let t = (w[0] * s[1] - w[1] * s[0]) / denom;
            let u = (w[0] * v[1] - w[1] * v[0]) / denom;
            if (0.0..=1.0).contains(&u) {
                out.push(t);
            }
        }
    }
}

fn polygon_contact(c: &LepComplex, a: &Branch, b: &Branch, out: &mut Collector) {
    let tol = c.tolerances().len;
    let Some((p0, dir)) = plane_intersection(a, b) else {
        return;
    };
    let mut ts = Vec::new();
    line_breaks(a, p0, dir, &mut ts);
    line_breaks(b, p0, dir, &mut ts);
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|x, y| (*x - *y).abs() <= tol);

    let at = |t: f64| add3(p0, scale3(dir, t));
    let class = |br: &Branch, t: f64| br.classify(br.frame.to_local(at(t)), tol);
    let contact = |t: f64| {
        let (x, y) = (class(a, t), class(b, t));
        if x == PointClass::Outside || y == PointClass::Outside {
            None
        } else {
            Some(x == PointClass::Inside || y == PointClass::Inside)
        }
    };

    let pair = || vec![branch_label(a), branch_label(b)];
    let n = ts.len();
    let mut in_segment = vec![false; n];
    for k in 0..n.saturating_sub(1) {
        let mid = 0.5 * (ts[k] + ts[k + 1]);
        match contact(mid) {
            Some(true) => {
                out.push(Rule::ClosuresOverlap, pair());
                return;
            }
            Some(false) => {
                in_segment[k] = true;
                in_segment[k + 1] = true;
                let (pa, pb) = (at(ts[k]), at(ts[k + 1]));
                let fa = facet_spanning(c, a, pa, pb, tol);
                let fb = facet_spanning(c, b, pa, pb, tol);
                let ok = match (fa, fb) {
                    (Some(x), Some(y)) => {
                        facet_key(c, FacetRef { branch: a.id, facet: x })
                            == facet_key(c, FacetRef { branch: b.id, facet: y })
                    }
                    _ => false,
                };
                if !ok {
                    out.push(Rule::PartialEdgeContact, pair());
                }
            }
            None => {}
        }
    }
    for k in 0..n {
        match contact(ts[k]) {
            Some(true) => {
                out.push(Rule::ClosuresOverlap, pair());
                return;
            }
            Some(false) if !in_segment[k] => {
                let p = at(ts[k]);
                match (corner_at(c, a, p, tol), corner_at(c, b, p, tol)) {
                    (Some(u), Some(v)) if u == v => {}
                    _ => out.push(Rule::PartialEdgeContact, pair()),
                }
            }
            _ => {}
        }
    }
}

/// Facet of `b` whose endpoints coincide with `p` and `q` (in either order).
fn facet_spanning(c: &LepComplex, b: &Branch, p: Point3, q: Point3, tol: f64) -> Option<u32> {
    (0..b.facet_count()).find_map(|f| {
        let vs = b.facet_vertices(f);
        let x = c.vertex_position(vs[0])?;
        let y = c.vertex_position(vs[1])?;
        let hit = (dist3(x, p) <= tol && dist3(y, q) <= tol)
            || (dist3(x, q) <= tol && dist3(y, p) <= tol);
        hit.then_some(f as u32)
    })
}

fn check_corners(c: &LepComplex, out: &mut Collector) {
    if c.branch_dim() != 2 {
        return;
    }
    let mut owners: HashMap<VertexId, BTreeSet<u32>> = HashMap::new();
    for b in c.branches() {
        for &v in &b.vertex_ids {
            owners.entry(v).or_default().insert(b.id.0);
        }
    }
    for (v, bs) in owners {
        if bs.len() >= 2 && !c.is_boundary_vertex(v) {
            out.push(Rule::CornerInRamificationSet, vec![format!("vertex {v}")]);
        }
    }
}

fn check_connected(c: &LepComplex, out: &mut Collector) {
    let bs = c.branches();
    if bs.is_empty() {
        return;
    }
    let index: HashMap<_, _> = bs.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
    let mut adj = vec![Vec::new(); bs.len()];
    for e in c.ram_edges() {
        let members: Vec<usize> = e.incident.iter().filter_map(|i| index.get(&i.branch).copied()).collect();
        for &x in &members {
            for &y in &members {
                if x != y {
                    adj[x].push(y);
                }
            }
        }
    }
    let mut seen = vec![false; bs.len()];
    // Start from the smallest id so the report does not depend on list order.
    let start = (0..bs.len()).min_by_key(|&i| bs[i].id).unwrap_or(0);
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(x) = queue.pop_front() {
        for &y in &adj[x] {
            if !seen[y] {
                seen[y] = true;
                queue.push_back(y);
            }
        }
    }
    if seen.iter().any(|s| !s) {
        let el = bs
            .iter()
            .zip(&seen)
            .filter(|(_, s)| !**s)
            .map(|(b, _)| branch_label(b))
            .collect();
        out.push(Rule::Disconnected, el);
    }
}

#[cfg(test)]
mod tests {
    use super::super::ComplexBuilder;
    use super::*;

    fn square_builder() -> ComplexBuilder {
        let mut b = ComplexBuilder::new(3, 2);
        b.vertex(1, &[0.0, 0.0, 0.0])
            .vertex(2, &[1.0, 0.0, 0.0])
            .vertex(3, &[1.0, 1.0, 0.0])
            .vertex(4, &[0.0, 1.0, 0.0])
            .branch(1, &[1, 2, 3, 4]);
        b
    }

    #[test]
    fn single_square_is_valid() {
        let mut b = square_builder();
        for f in 0..4 {
            b.boundary_facet(1, f);
        }
        let r = b.build().unwrap().validate();
        assert!(r.valid, "{r}");
    }

    #[test]
    fn missing_boundary_facet_dangles() {
        let mut b = square_builder();
        for f in 0..3 {
            b.boundary_facet(1, f);
        }
        let r = b.build().unwrap().validate();
        assert_eq!(r.rules(), BTreeSet::from([Rule::DanglingRamificationFacet]));
        assert_eq!(r.violations[0].elements, vec!["facet 1:3".to_string()]);
    }

    #[test]
    fn crossing_squares_overlap() {
        let mut b = square_builder();
        b.vertex(5, &[0.5, 0.5, -0.5])
            .vertex(6, &[0.5, 0.5, 0.5])
            .vertex(7, &[0.5, 1.5, 0.5])
            .vertex(8, &[0.5, 1.5, -0.5])
            .branch(2, &[5, 6, 7, 8]);
        for f in 0..4 {
            b.boundary_facet(1, f).boundary_facet(2, f);
        }
        let r = b.build().unwrap().validate();
        assert!(r.has(Rule::ClosuresOverlap), "{r}");
        assert!(r.has(Rule::Disconnected));
    }

    #[test]
    fn half_edge_glue_is_partial_contact() {
        let mut b = square_builder();
        // vertical square standing on half of the bottom edge
        b.vertex(5, &[0.5, 0.0, 0.0])
            .vertex(6, &[0.5, 0.0, 1.0])
            .vertex(7, &[1.0, 0.0, 1.0])
            .branch(2, &[5, 2, 7, 6]);
        for f in 0..4 {
            b.boundary_facet(1, f).boundary_facet(2, f);
        }
        let r = b.build().unwrap().validate();
        assert!(r.has(Rule::PartialEdgeContact), "{r}");
    }
}
