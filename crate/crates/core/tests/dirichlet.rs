use std::sync::Arc;

use proptest::prelude::*;

use lepspace::dirichlet::{
    check_boundary_compat, check_strict_subsolution, solve_dirichlet, solve_on_graph, BoundaryData, DirichletError,
    DirichletProblem, Verdict,
};
use lepspace::fixtures;
use lepspace::geometry::LepComplex;
use lepspace::hamiltonian::HamiltonianFamily;
use lepspace::io::parse_file;
use lepspace::metric::{MeshParams, MetricGraph, QueryPoint};
use lepspace::viscosity::{check_subsolution, CheckOptions};

fn complex(name: &str) -> Arc<LepComplex> {
    Arc::new(parse_file(fixtures::by_name(name).unwrap()).unwrap().complex)
}

fn problem(name: &str, f: f64, g: BoundaryData, h: f64) -> DirichletProblem {
    DirichletProblem::new(HamiltonianFamily::eikonal_const(complex(name), f).unwrap(), g, MeshParams::new(h, 2))
}

#[test]
fn weighted_square_centre() {
    let s = solve_dirichlet(&problem("square", 4.0, BoundaryData::constant(0.0), 1.0 / 32.0)).unwrap();
    let u = s.graph.evaluate(&s.field, &QueryPoint::new(1, 0.5, 0.5)).unwrap();
    assert!((u - 1.0).abs() < 0.05, "{u}");
}

#[test]
fn book_spine_is_shared() {
    let s = solve_dirichlet(&problem("book3", 1.0, BoundaryData::constant(0.0), 1.0 / 32.0)).unwrap();
    let vals: Vec<f64> = (1..=3)
        .map(|b| s.graph.evaluate(&s.field, &QueryPoint::new(b, 0.0, 0.5)).unwrap())
        .collect();
    assert!(vals.iter().all(|v| *v == vals[0]), "{vals:?}");
    assert!((vals[0] - 0.5).abs() < 0.025, "{}", vals[0]);
}

#[test]
fn strict_subsolution_verdicts() {
    assert_eq!(check_strict_subsolution(&problem("square", 1.0, BoundaryData::constant(0.0), 0.25)).verdict, Verdict::Pass);
    let generic = HamiltonianFamily::generic(complex("square"), lepspace::hamiltonian::Convexity::Strict, "shifted", |_, _, p| {
        p[0] * p[0] + p[1] * p[1] + 1.0
    });
    let p = DirichletProblem::new(generic, BoundaryData::constant(0.0), MeshParams::new(0.25, 2));
    assert_eq!(check_strict_subsolution(&p).verdict, Verdict::Fail);
    assert!(matches!(solve_dirichlet(&p), Err(DirichletError::StrictSubsolution(_))));
}

#[test]
fn boundary_compatibility_examples() {
    for g in [BoundaryData::constant(0.0), BoundaryData::constant(3.5)] {
        let p = problem("square", 1.0, g, 1.0 / 16.0);
        let graph = MetricGraph::build(&p.hamiltonian, p.params).unwrap();
        assert!(check_boundary_compat(&p, &graph).unwrap().pass);
    }
    let p = problem("square", 1.0, BoundaryData::poly(vec![(2.0, 1, 0, 0)]), 1.0 / 16.0);
    let graph = MetricGraph::build(&p.hamiltonian, p.params).unwrap();
    let r = check_boundary_compat(&p, &graph).unwrap();
    assert!(!r.pass && r.worst > 0.9, "{r:?}");
    let mut forced = p.clone();
    forced.overrides.boundary_compat = true;
    assert!(solve_dirichlet(&forced).unwrap().warnings.iter().any(|w| w.contains("boundary")));
}

#[test]
fn representation_matches_per_source_runs() {
    let p = problem("dihedral2", 1.0, BoundaryData::poly(vec![(0.1, 0, 1, 0), (0.05, 1, 0, 0)]), 0.125);
    let s = solve_dirichlet(&p).unwrap();
    let g = &s.graph;
    let mut best = vec![f64::INFINITY; g.node_count()];
    for (y, gy) in p.g.node_values(g).unwrap() {
        for (x, d) in g.distances_from_node(y).into_iter().enumerate() {
            best[x] = best[x].min(gy + d);
        }
    }
    for (a, b) in s.field.values.iter().zip(&best) {
        assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
    }
}

fn book_graph() -> (HamiltonianFamily, MetricGraph, MeshParams) {
    let h = HamiltonianFamily::eikonal_const(complex("book3"), 1.0).unwrap();
    let params = MeshParams::new(0.125, 2);
    let g = MetricGraph::build(&h, params).unwrap();
    (h, g, params)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn shift_and_monotonicity(c in -2.0f64..2.0, a in 0.0f64..0.3, b in -0.3f64..0.3, d in 0.0f64..0.3) {
        let (h, g, params) = book_graph();
        let solve = |bd: BoundaryData| solve_on_graph(&DirichletProblem::new(h.clone(), bd, params), g.clone()).unwrap().field;
        // Slopes below 0.5 keep the data compatible with the unit metric.
        let lo = vec![(a, 0, 0, 0), (b, 0, 1, 0)];
        let hi = vec![(a + d, 0, 0, 0), (b, 0, 1, 0)];
        let base = solve(BoundaryData::poly(lo.clone()));
        let up = solve(BoundaryData::poly(hi));
        prop_assert!(base.values.iter().zip(&up.values).all(|(x, y)| x <= y));
        let mut shifted = lo;
        shifted[0].0 += c;
        let moved = solve(BoundaryData::poly(shifted));
        for (x, y) in base.values.iter().zip(&moved.values) {
            prop_assert!((y - x - c).abs() <= 1e-12);
        }
    }

    #[test]
    fn weight_scaling(lambda in 0.2f64..5.0) {
        let params = MeshParams::new(0.125, 2);
        let solve = |f: f64| {
            solve_dirichlet(&DirichletProblem::new(
                HamiltonianFamily::eikonal_const(complex("dihedral2"), f).unwrap(),
                BoundaryData::constant(0.0),
                params,
            ))
            .unwrap()
            .field
        };
        let (u1, ul) = (solve(1.0), solve(lambda * lambda));
        for (a, b) in u1.values.iter().zip(&ul.values) {
            prop_assert!((lambda * a - b).abs() <= 1e-12 * (1.0 + b));
        }
    }

    #[test]
    fn scaled_solutions_stay_subsolutions(theta in 0.0f64..1.0) {
        let s = solve_dirichlet(&problem("book3", 1.0, BoundaryData::constant(0.0), 0.0625)).unwrap();
        let w = s.field.map(|v| theta * v);
        prop_assert!(w.values.iter().zip(&s.field.values).all(|(a, b)| a <= b));
        prop_assert!(check_subsolution(&s.graph, &w, &CheckOptions::auto(&s.graph)).unwrap().all_pass());
    }
}
