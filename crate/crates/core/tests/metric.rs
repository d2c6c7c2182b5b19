use std::sync::Arc;

use proptest::prelude::*;

use lepspace::fixtures;
use lepspace::geometry::LepComplex;
use lepspace::hamiltonian::HamiltonianFamily;
use lepspace::io::parse_file;
use lepspace::metric::{brute_force_action, MeshParams, MetricGraph, QueryPoint};

const SEGMENT: &str = "lep 1\ndim 2 1\n[vertices]\n1 = 0 0\n2 = 1.5 0\n[branches]\n1 = 1 2\n[boundary]\nfacets = 1:0 1:1\n";

fn complex(text: &str) -> Arc<LepComplex> {
    Arc::new(parse_file(text).unwrap().complex)
}

fn family(name: &str) -> HamiltonianFamily {
    let file = parse_file(fixtures::by_name(name).unwrap()).unwrap();
    let c = Arc::new(file.complex);
    match file.weight {
        Some(w) => w.to_hamiltonian(c).unwrap(),
        None => HamiltonianFamily::eikonal_const(c, 1.0).unwrap(),
    }
}

fn graph(name: &str, h: f64) -> MetricGraph {
    MetricGraph::build(&family(name), MeshParams::new(h, 2)).unwrap()
}

fn q(b: u32, u: f64, v: f64) -> QueryPoint {
    QueryPoint::new(b, u, v)
}

#[test]
fn coarse_square_graph() {
    let h = HamiltonianFamily::eikonal_const(complex(fixtures::SQUARE), 1.0).unwrap();
    let g = MetricGraph::build(&h, MeshParams::new(0.25, 1)).unwrap();
    assert!((16..=64).contains(&g.node_count()), "{}", g.node_count());
    for v in 0..g.node_count() {
        for (_, w) in g.arcs_from(v) {
            assert!(w > 0.0 && w <= 0.5, "{w}");
        }
    }
}

#[test]
fn spine_nodes_reach_every_page() {
    let g = graph("book3", 0.125);
    let spine: Vec<usize> = (0..g.node_count()).filter(|&v| g.nodes()[v].members.len() == 3).collect();
    assert!(spine.len() >= 8);
    for v in spine {
        let mut pages = std::collections::BTreeSet::new();
        for (w, _) in g.arcs_from(v) {
            if g.nodes()[w].members.len() == 1 {
                pages.insert(g.nodes()[w].members[0].0);
            }
        }
        assert_eq!(pages.len(), 3, "node {v}");
    }
}

#[test]
fn single_segment_is_a_path() {
    let h = HamiltonianFamily::eikonal_const(complex(SEGMENT), 1.0).unwrap();
    let g = MetricGraph::build(&h, MeshParams::new(0.1, 1)).unwrap();
    let ends = (0..g.node_count()).filter(|&v| g.arcs_from(v).count() == 1).count();
    assert_eq!(ends, 2);
    assert!((0..g.node_count()).all(|v| g.arcs_from(v).count() <= 2));
    assert_eq!(g.arc_count(), 2 * (g.node_count() - 1));
    let d = g.distance(&q(1, 0.0, 0.0), &q(1, 1.5, 0.0)).unwrap();
    assert!((d - 1.5).abs() < 1e-12, "{d}");
}

#[test]
fn reference_distances() {
    let d = graph("square", 1.0 / 32.0).distance(&q(1, 0.0, 0.0), &q(1, 1.0, 1.0)).unwrap();
    assert!((d / 2f64.sqrt() - 1.0).abs() < 0.05, "{d}");
    let d = graph("book3", 1.0 / 32.0).distance(&q(1, 0.3, 0.4), &q(2, 0.5, 0.4)).unwrap();
    assert!((d / 0.8 - 1.0).abs() < 0.05, "{d}");
}

#[test]
fn distance_field_paths_agree() {
    let g = graph("dihedral2_poly", 1.0 / 16.0);
    let (a, b) = (q(1, 0.3, 0.4), q(2, 0.6, 0.2));
    let single = g.distance_field(&[(a, 0.0)]).unwrap();
    let n = g.node_count();
    for v in (0..n).step_by(37) {
        let l = g.nodes()[v].primary();
        let target = q(g.complex().branches()[l.0].id.0, l.1[0], l.1[1]);
        let d = g.distance(&a, &target).unwrap();
        assert!((single.values[v] - d).abs() <= 1e-12, "node {v}");
    }
    let both = g.distance_field(&[(a, 0.2), (b, 0.5)]).unwrap();
    let fb = g.distance_field(&[(b, 0.5)]).unwrap();
    for v in 0..n {
        let m = (single.values[v] + 0.2).min(fb.values[v]);
        assert!((both.values[v] - m).abs() <= 1e-12);
    }
    let shifted = g.distance_field(&[(a, 1.2), (b, 1.5)]).unwrap();
    for v in 0..n {
        assert!((shifted.values[v] - both.values[v] - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn swapping_dihedral_pages_is_an_isometry() {
    let g = graph("dihedral2", 1.0 / 16.0);
    let f = g.distance_field(&[(q(1, 0.3, 0.4), 0.0), (q(2, 0.3, 0.4), 0.0)]).unwrap();
    for (u, v) in [(0.1, 0.1), (0.5, 0.5), (0.9, 0.3), (0.0, 0.7)] {
        let a = g.evaluate(&f, &q(1, u, v)).unwrap();
        let b = g.evaluate(&f, &q(2, u, v)).unwrap();
        assert!((a - b).abs() <= 1e-12, "({u}, {v}): {a} vs {b}");
    }
}

#[test]
fn oracle_reference_values() {
    let seg = HamiltonianFamily::eikonal_const(complex(SEGMENT), 1.0).unwrap();
    let d = brute_force_action(&seg, &q(1, 0.0, 0.0), &q(1, 1.5, 0.0), 2).unwrap();
    assert!((d - 1.5).abs() < 1e-9, "{d}");

    let c = complex(fixtures::DIHEDRAL2);
    let (x, y) = (q(1, 0.4, 0.2), q(2, 0.3, 0.7));
    let unit = brute_force_action(&HamiltonianFamily::eikonal_const(c.clone(), 1.0).unwrap(), &x, &y, 2).unwrap();
    let exact = ((0.4f64 + 0.3).powi(2) + 0.5f64.powi(2)).sqrt();
    assert!((unit / exact - 1.0).abs() < 0.02, "{unit} vs {exact}");
    let four = brute_force_action(&HamiltonianFamily::eikonal_const(c, 4.0).unwrap(), &x, &y, 2).unwrap();
    assert!((four - 2.0 * unit).abs() <= 1e-12 * four, "{four} vs {unit}");
}

#[test]
fn widening_the_ring_never_lengthens_distances() {
    let pairs = [(q(1, 0.0, 0.0), q(1, 1.0, 1.0)), (q(1, 0.2, 0.9), q(2, 0.7, 0.1))];
    let exact = [2f64.sqrt(), (0.81f64 + 0.64).sqrt()];
    let h = family("book3");
    let mut last = [f64::INFINITY; 2];
    let mut first_err = 0.0;
    for ring in 1..=4 {
        let g = MetricGraph::build(&h, MeshParams::new(1.0 / 16.0, ring)).unwrap();
        for (i, (x, y)) in pairs.iter().enumerate() {
            let d = g.distance(x, y).unwrap();
            assert!(d <= last[i] + 1e-12, "ring {ring}: {d} > {}", last[i]);
            last[i] = d;
        }
        if ring == 2 {
            first_err = last[0] / exact[0] - 1.0;
        }
    }
    assert!(last[0] / exact[0] - 1.0 < first_err);
}

#[test]
fn refinement_stays_within_tolerance() {
    let pairs = [
        (q(1, 0.0, 0.0), q(1, 1.0, 1.0), 2f64.sqrt()),
        (q(1, 0.3, 0.4), q(2, 0.5, 0.4), 0.8),
        (q(1, 0.2, 0.9), q(3, 0.7, 0.1), (0.81f64 + 0.64).sqrt()),
    ];
    for h in [0.25, 0.125, 0.0625, 0.03125, 0.015625] {
        let g = graph("book3", h);
        for (x, y, exact) in &pairs {
            let d = g.distance(x, y).unwrap();
            assert!(d >= exact - 1e-12 && d / exact - 1.0 < 0.05, "h={h}: {d} vs {exact}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn graph_metric_axioms(
        name in prop::sample::select(vec!["book3", "dihedral2_poly", "cube", "y_network", "two_junction_network"]),
        picks in prop::array::uniform3(any::<prop::sample::Index>()),
    ) {
        let g = graph(name, 0.125);
        let [x, y, z] = picks.map(|i| i.index(g.node_count()));
        let (dx, dy) = (g.distances_from_node(x), g.distances_from_node(y));
        prop_assert_eq!(dx[x], 0.0);
        prop_assert!(dx[z] <= dx[y] + dy[z] + 1e-12);
        prop_assert!((dx[y] - dy[x]).abs() <= 1e-12);
        prop_assert!((g.distances_to_node(y)[x] - dx[y]).abs() <= 1e-12);
    }

    #[test]
    fn query_point_to_itself_is_zero(b in 1u32..=3, u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let g = graph("book3", 0.125);
        prop_assert_eq!(g.distance(&q(b, u, v), &q(b, u, v)).unwrap(), 0.0);
    }
}
