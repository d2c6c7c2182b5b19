use std::collections::BTreeSet;

use proptest::prelude::*;

use lepspace::fixtures;
use lepspace::geometry::linalg::dist2;
use lepspace::geometry::{BranchId, FacetClass, FacetRef, GeometryError, LepComplex, Rule};
use lepspace::io::{parse_file, serialize_file};

fn load(name: &str) -> LepComplex {
    parse_file(fixtures::by_name(name).unwrap()).unwrap().complex
}

#[test]
fn every_fixture_round_trips() {
    for (name, text) in fixtures::VALID.iter().chain(fixtures::INVALID.iter()) {
        let a = parse_file(text).unwrap();
        let out = serialize_file(&a);
        let b = parse_file(&out).unwrap_or_else(|e| panic!("{name}: {e}\n{out}"));
        assert_eq!(a.complex, b.complex, "{name}");
        assert_eq!(a.weight, b.weight, "{name}");
        assert_eq!(a.boundary, b.boundary, "{name}");
        assert_eq!(serialize_file(&b), out, "{name}");
    }
}

#[test]
fn fixture_shapes() {
    let sq = load("square");
    assert_eq!(sq.branches().len(), 1);
    assert_eq!(sq.boundary_facets().len(), 4);
    let book = load("book3");
    assert_eq!(book.branches().len(), 3);
    assert_eq!(book.ram_edges().len(), 1);
    let inc = book.incidence(book.ram_edges()[0].id).unwrap();
    assert_eq!(inc, [1, 2, 3].into_iter().map(BranchId).collect());
    let cube = load("cube");
    assert_eq!(cube.ram_edges().len(), 12);
    for e in cube.ram_edges() {
        assert_eq!(cube.incidence(e.id).unwrap().len(), 2);
    }
}

#[test]
fn invalid_fixtures_name_their_rule() {
    let expected = [
        ("cube_no_corner_exclusion", Rule::CornerInRamificationSet),
        ("coplanar_glue", Rule::HyperplanesNotDistinct),
        ("disconnected", Rule::Disconnected),
        ("dangling_facet", Rule::DanglingRamificationFacet),
    ];
    for (name, rule) in expected {
        let r = load(name).validate();
        assert!(!r.valid && r.has(rule), "{name}: {:?}", r.violations);
    }
    for (name, _) in fixtures::VALID {
        assert!(load(name).validate().valid, "{name}");
    }
}

#[test]
fn facets_are_classified_once() {
    for (name, _) in fixtures::VALID {
        let c = load(name);
        for e in c.ram_edges() {
            assert!(e.incident.len() >= 2, "{name}");
        }
        for b in c.branches() {
            for f in 0..b.facet_count() as u32 {
                let fr = FacetRef::new(b.id.0, f);
                let ram = matches!(c.facet_class(fr), FacetClass::Ramification(_));
                let bnd = c.boundary_facets().contains(&fr);
                assert!(ram ^ bnd, "{name}: facet {fr:?}");
            }
        }
    }
}

#[test]
fn charts_on_the_spine_and_off_it() {
    let book = load("book3");
    let chart = book.canonical_chart([0.0, 0.5, 0.0]).unwrap();
    assert_eq!(chart.order(), 3);
    let cube = load("cube");
    assert_eq!(cube.canonical_chart([0.5, 0.0, 0.0]).unwrap().order(), 2);
    assert_eq!(book.canonical_chart([0.5, 0.5, 0.0]).unwrap_err(), GeometryError::NotOnRamificationSet);

    // Two points on the same edge give charts that differ by a shift along it.
    let other = book.canonical_chart([0.0, 0.8, 0.0]).unwrap();
    for (m, n) in chart.maps.iter().zip(&other.maps) {
        assert_eq!(m.normal, n.normal);
        assert_eq!(m.tangent, n.tangent);
        let y = [0.4, 0.3];
        let (a, b) = (m.forward(y), n.forward(y));
        assert!((a[0] - b[0]).abs() < 1e-12);
        assert!(((a[1] - b[1]).abs() - 0.3).abs() < 1e-12);
    }
}

#[test]
fn normals_of_the_square() {
    let sq = load("square");
    let n = |f| sq.normal_vector(BranchId(1), f).unwrap();
    let close = |a: [f64; 2], b: [f64; 2]| dist2(a, b) < 1e-12;
    assert!(close(n(0), [0.0, 1.0]));
    assert!(close(n(1), [-1.0, 0.0]));
}

#[test]
fn cube_neighbour_faces_unfold_to_unit_distance() {
    let c = load("cube");
    // Bottom face z = 0 and front face y = 0 share the edge y = z = 0.
    let (bottom, front) = (BranchId(1), BranchId(3));
    let edge = c
        .ram_edges()
        .iter()
        .find(|e| {
            let inc = c.incidence(e.id).unwrap();
            inc.contains(&bottom) && inc.contains(&front)
        })
        .unwrap();
    let local = |b: BranchId, p| c.branch(b).unwrap().frame.to_local(p);
    let d = c
        .unfolding_distance(edge.id, bottom, local(bottom, [0.5, 0.5, 0.0]), front, local(front, [0.5, 0.0, 0.5]))
        .unwrap();
    assert!((d - 1.0).abs() < 1e-12, "{d}");
}

fn shuffle_section(text: &str, section: &str, order: &[usize]) -> String {
    let lines: Vec<&str> = text.lines().collect();
    let start = lines.iter().position(|l| l.trim() == section).unwrap() + 1;
    let end = (start..lines.len()).find(|&i| lines[i].starts_with('[')).unwrap_or(lines.len());
    let body: Vec<&str> = lines[start..end].iter().copied().filter(|l| !l.trim().is_empty()).collect();
    let mut out: Vec<&str> = lines[..start].to_vec();
    out.extend(order.iter().filter(|&&i| i < body.len()).map(|&i| body[i]));
    out.extend((0..body.len()).filter(|i| !order.contains(i)).map(|i| body[i]));
    out.extend_from_slice(&lines[end..]);
    out.join("\n") + "\n"
}

fn verdict(text: &str) -> (bool, BTreeSet<(String, Vec<String>)>) {
    let r = parse_file(text).unwrap().complex.validate();
    let set = r
        .violations
        .iter()
        .map(|v| {
            let mut e = v.elements.clone();
            e.sort();
            (v.rule.reason().to_string(), e)
        })
        .collect();
    (r.valid, set)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn validation_ignores_list_order(
        which in 0usize..12,
        order in Just((0..12usize).collect::<Vec<_>>()).prop_shuffle(),
    ) {
        let (_, text) = fixtures::VALID.iter().chain(fixtures::INVALID.iter()).nth(which).unwrap();
        let permuted = shuffle_section(&shuffle_section(text, "[branches]", &order), "[vertices]", &order);
        prop_assert_eq!(verdict(text), verdict(&permuted));
    }

    #[test]
    fn unfolding_is_isometric(
        name in prop::sample::select(vec!["book3", "dihedral2", "cube"]),
        edge in 0usize..12,
        a in prop::array::uniform2(0.05f64..0.95),
        b in prop::array::uniform2(0.05f64..0.95),
        s in 0.05f64..0.95,
    ) {
        let c = load(name);
        let e = &c.ram_edges()[edge % c.ram_edges().len()];
        let (j, k) = (e.incident[0].branch, e.incident[1].branch);
        let u = c.unfold_pair(e.id, j, k).unwrap();
        // Points inside branch j, described in its own frame through the chart.
        let to_j = |p: [f64; 2]| u.j.inverse(p);
        let (pa, pb) = (to_j([a[0], a[1]]), to_j([b[0], b[1]]));
        let d = dist2(u.forward(j, pa).unwrap(), u.forward(j, pb).unwrap());
        prop_assert!((d - dist2(pa, pb)).abs() <= 1e-12);
        // A point on the shared edge lands in the same place from both sides.
        let ends: Vec<_> = e.vertices.iter().map(|v| c.vertex_position(*v).unwrap()).collect();
        let x = [0, 1, 2].map(|i| ends[0][i] + s * (ends[1][i] - ends[0][i]));
        let fj = u.forward(j, c.branch(j).unwrap().frame.to_local(x)).unwrap();
        let fk = u.forward(k, c.branch(k).unwrap().frame.to_local(x)).unwrap();
        prop_assert!(dist2(fj, fk) <= 1e-12);
    }
}
