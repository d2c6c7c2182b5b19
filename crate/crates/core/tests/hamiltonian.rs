use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;

use lepspace::fixtures;
use lepspace::geometry::{BranchId, LepComplex};
use lepspace::hamiltonian::legendre::TOL_L;
use lepspace::hamiltonian::{Convexity, HamiltonianFamily, Hypothesis, WeightField};
use lepspace::io::parse_file;

const B1: BranchId = BranchId(1);

fn complex(name: &str) -> Arc<LepComplex> {
    Arc::new(parse_file(fixtures::by_name(name).unwrap()).unwrap().complex)
}

fn eik(f: f64) -> HamiltonianFamily {
    HamiltonianFamily::eikonal_const(complex("square"), f).unwrap()
}

fn poly() -> HamiltonianFamily {
    let file = parse_file(fixtures::DIHEDRAL2_POLY).unwrap();
    file.weight.unwrap().to_hamiltonian(Arc::new(file.complex)).unwrap()
}

#[test]
fn closed_form_values() {
    let x = [0.5, 0.5];
    assert_eq!(eik(1.0).eval(B1, x, [1.0, 0.0]).unwrap(), 0.0);
    assert_eq!(eik(1.0).eval(B1, x, [0.0, 0.0]).unwrap(), -1.0);
    assert_eq!(eik(4.0).eval(B1, x, [2.0, 0.0]).unwrap(), 0.0);
    assert_eq!(eik(1.0).lagrangian(B1, x, [0.0, 0.0]).unwrap(), 1.0);
    assert_eq!(eik(0.0).lagrangian(B1, x, [2.0, 0.0]).unwrap(), 1.0);
    assert_eq!(eik(4.0).gauge(B1, x, [0.6, 0.8]).unwrap(), 2.0);
    assert_eq!(eik(4.0).to_generic().gauge(B1, x, [0.0, 0.0]).unwrap(), 0.0);
}

#[test]
fn numeric_legendre_on_a_grid() {
    let exact = eik(1.0);
    let numeric = HamiltonianFamily::generic(complex("square"), Convexity::Strict, "quadratic", |_, _, p| {
        p[0] * p[0] + p[1] * p[1] - 1.0
    });
    for i in 0..10 {
        for k in 0..10 {
            let q = [-3.0 + 6.0 * i as f64 / 9.0, -3.0 + 6.0 * k as f64 / 9.0];
            let a = numeric.lagrangian(B1, [0.3, 0.3], q).unwrap();
            let b = exact.lagrangian(B1, [0.3, 0.3], q).unwrap();
            assert!((a - b).abs() <= TOL_L * (1.0 + b.abs()), "q={q:?}: {a} vs {b}");
        }
    }
}

#[test]
fn gauge_scales_by_three() {
    let h = poly().to_generic();
    let g1 = h.gauge(B1, [0.2, 0.7], [0.3, -0.4]).unwrap();
    let g3 = h.gauge(B1, [0.2, 0.7], [0.9, -1.2]).unwrap();
    assert!((g3 - 3.0 * g1).abs() <= 1e-9 * g3);
}

#[test]
fn mismatched_weights_break_cross_branch_equality() {
    let c = complex("dihedral2");
    let fields = BTreeMap::from([(BranchId(1), WeightField::Const(1.0)), (BranchId(2), WeightField::Const(2.0))]);
    let r = HamiltonianFamily::eikonal(c, fields, None).unwrap().check_compatibility(32);
    let v = r.get(Hypothesis::CrossBranchEquality);
    assert!(!v.pass);
    assert_eq!(v.worst, 1.0);
    assert!(v.site.unwrap().edge.is_some());
    assert!(r.get(Hypothesis::NormalSymmetry).pass);
}

#[test]
fn cubic_normal_term_breaks_symmetry() {
    let c = complex("dihedral2");
    let normals: BTreeMap<BranchId, [f64; 2]> = c.ram_edges()[0].incident.iter().map(|i| (i.branch, i.normal)).collect();
    let h = HamiltonianFamily::generic(c, Convexity::None, "cubic normal", move |j, _, p| {
        let n = normals[&j];
        let pn = p[0] * n[0] + p[1] * n[1];
        let pt = -p[0] * n[1] + p[1] * n[0];
        pn * pn * pn + pt * pt
    });
    let r = h.check_compatibility(32);
    assert!(!r.get(Hypothesis::NormalSymmetry).pass, "{r}");
}

#[test]
fn eikonal_fixtures_are_compatible() {
    for (name, text) in fixtures::VALID {
        let file = parse_file(text).unwrap();
        let c = Arc::new(file.complex);
        let h = match file.weight {
            Some(w) => w.to_hamiltonian(c).unwrap(),
            None => HamiltonianFamily::eikonal_const(c, 1.0).unwrap(),
        };
        let r = h.check_compatibility(32);
        assert!(r.all_pass(), "{name}\n{r}");
    }
}

fn point() -> impl Strategy<Value = (BranchId, [f64; 2])> {
    (1u32..=2, prop::array::uniform2(0.0f64..1.0)).prop_map(|(b, x)| (BranchId(b), x))
}

fn vec2(r: f64) -> impl Strategy<Value = [f64; 2]> {
    prop::array::uniform2(-r..r)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn fenchel_young((j, x) in point(), p in vec2(4.0), q in vec2(4.0)) {
        let h = poly().to_generic();
        let lhs = p[0] * q[0] + p[1] * q[1];
        let rhs = h.lagrangian(j, x, q).unwrap() + h.eval(j, x, p).unwrap();
        prop_assert!(lhs <= rhs + TOL_L * (1.0 + rhs.abs()));
    }

    #[test]
    fn lagrangian_is_midpoint_convex((j, x) in point(), a in vec2(4.0), b in vec2(4.0)) {
        let h = poly().to_generic();
        let l = |q| h.lagrangian(j, x, q).unwrap();
        let mid = l([(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]);
        let avg = (l(a) + l(b)) / 2.0;
        prop_assert!(mid <= avg + TOL_L * (1.0 + avg.abs()));
    }

    #[test]
    fn gauge_is_even_and_homogeneous((j, x) in point(), q in vec2(3.0), lam in 0.01f64..50.0) {
        let h = poly();
        let g = h.gauge(j, x, q).unwrap();
        prop_assert!((h.gauge(j, x, [-q[0], -q[1]]).unwrap() - g).abs() <= 1e-15 * (1.0 + g));
        let gl = h.gauge(j, x, [lam * q[0], lam * q[1]]).unwrap();
        prop_assert!((gl - lam * g).abs() <= 1e-12 * (1.0 + gl));
    }

    #[test]
    fn numeric_route_matches_closed_forms((j, x) in point(), q in vec2(4.0)) {
        let exact = poly();
        let numeric = exact.to_generic();
        let (a, b) = (numeric.lagrangian(j, x, q).unwrap(), exact.lagrangian(j, x, q).unwrap());
        prop_assert!((a - b).abs() <= TOL_L * (1.0 + b.abs()));
        let (a, b) = (numeric.gauge(j, x, q).unwrap(), exact.gauge(j, x, q).unwrap());
        prop_assert!((a - b).abs() <= 1e-6 * (1.0 + b));
    }
}
