//! Bundled example complexes.

pub const SQUARE: &str = include_str!("../fixtures/square.lep");
pub const BOOK3: &str = include_str!("../fixtures/book3.lep");
pub const DIHEDRAL2: &str = include_str!("../fixtures/dihedral2.lep");
pub const DIHEDRAL2_POLY: &str = include_str!("../fixtures/dihedral2_poly.lep");
pub const CUBE: &str = include_str!("../fixtures/cube.lep");
pub const Y_NETWORK: &str = include_str!("../fixtures/y_network.lep");
pub const TWO_JUNCTION_NETWORK: &str = include_str!("../fixtures/two_junction_network.lep");
pub const SQUARE_STEEP_G: &str = include_str!("../fixtures/square_steep_g.lep");

pub const CUBE_NO_CORNER_EXCLUSION: &str = include_str!("../fixtures/cube_no_corner_exclusion.lep");
pub const COPLANAR_GLUE: &str = include_str!("../fixtures/coplanar_glue.lep");
pub const DISCONNECTED: &str = include_str!("../fixtures/disconnected.lep");
pub const DANGLING_FACET: &str = include_str!("../fixtures/dangling_facet.lep");

/// `(name, text)` of every complex satisfying the axioms.
pub const VALID: [(&str, &str); 8] = [
    ("square", SQUARE),
    ("book3", BOOK3),
    ("dihedral2", DIHEDRAL2),
    ("dihedral2_poly", DIHEDRAL2_POLY),
    ("cube", CUBE),
    ("y_network", Y_NETWORK),
    ("two_junction_network", TWO_JUNCTION_NETWORK),
    ("square_steep_g", SQUARE_STEEP_G),
];

/// `(name, text)` of complexes that parse but violate an axiom.
pub const INVALID: [(&str, &str); 4] = [
    ("cube_no_corner_exclusion", CUBE_NO_CORNER_EXCLUSION),
    ("coplanar_glue", COPLANAR_GLUE),
    ("disconnected", DISCONNECTED),
    ("dangling_facet", DANGLING_FACET),
];

pub fn by_name(name: &str) -> Option<&'static str> {
    VALID.iter().chain(INVALID.iter()).find(|(n, _)| *n == name).map(|(_, t)| *t)
}
