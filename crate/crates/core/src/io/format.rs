//! The `.lep` text format.
//!
//! ```text
//! lep 1
//! dim 3 2                      # ambient dimension, branch dimension
//! [vertices]
//! 1 = 0 0 0                    # id = coordinates
//! [branches]
//! 1 = 1 2 3 4                  # id = polygon loop (or two endpoints)
//! [glue]
//! 1 = 1:0 2:0                  # edge id = branch:facet ...
//! [boundary]
//! facets = 1:1 1:2 1:3         # may repeat
//! vertices = 7                 # extra boundary vertices (corners)
//! [field f]
//! default = const 1            # const c | poly c:a:b ... | samples
//! 2 = poly 1:0:0 0.5:1:1       # c * u^a * v^b in branch-local (u, v)
//! [samples f]
//! 1 = 0.5                      # vertex id = weight
//! [field g]
//! default = const 0            # const c | poly c:a:b:d ... | samples
//! 1:2 = poly 2:1:0:0           # c * x^a * y^b * z^d in ambient coordinates
//! [samples g]
//! 3 = 1.0
//! ```
//!
//! Blank lines and text after `#` are ignored. Facet `i` of a polygon runs
//! from its `i`-th to its `(i+1)`-th corner; facets 0 and 1 of a segment are
//! its endpoints.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write};
use std::sync::Arc;

use thiserror::Error;

use crate::dirichlet::{BoundaryData, BoundaryValue};
use crate::geometry::{BranchId, ComplexBuilder, FacetRef, LepComplex, VertexId};
use crate::hamiltonian::{HamiltonianError, HamiltonianFamily, WeightField};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}, column {col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

/// Weight specification of one branch before it is bound to the complex.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldSpec {
    Const(f64),
    Poly(Vec<(f64, u32, u32)>),
    Samples,
}

/// The `field f` / `samples f` sections.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightSpec {
    pub default: Option<FieldSpec>,
    pub branches: BTreeMap<BranchId, FieldSpec>,
    pub samples: BTreeMap<VertexId, f64>,
}

impl WeightSpec {
    pub fn constant(c: f64) -> Self {
        WeightSpec { default: Some(FieldSpec::Const(c)), ..Default::default() }
    }

    /// Eikonal family on `complex` described by this spec.
    pub fn to_hamiltonian(&self, complex: Arc<LepComplex>) -> Result<HamiltonianFamily, HamiltonianError> {
        let mut fields = BTreeMap::new();
        for b in complex.branches() {
            let Some(spec) = self.branches.get(&b.id).or(self.default.as_ref()) else {
                return Err(HamiltonianError::MissingField(b.id));
            };
            let field = match spec {
                FieldSpec::Const(c) => WeightField::Const(*c),
                FieldSpec::Poly(t) => WeightField::Poly(t.clone()),
                FieldSpec::Samples => {
                    let mut vals = Vec::with_capacity(b.vertex_ids.len());
                    for v in &b.vertex_ids {
                        let val = self.samples.get(v).ok_or_else(|| HamiltonianError::InvalidField {
                            branch: b.id,
                            reason: format!("no weight sample for vertex {v}"),
                        })?;
                        vals.push(*val);
                    }
                    WeightField::VertexSamples(vals)
                }
            };
            fields.insert(b.id, field);
        }
        HamiltonianFamily::eikonal(complex, fields, None)
    }
}

/// A parsed file: geometry plus optional field sections.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexFile {
    pub complex: LepComplex,
    pub weight: Option<WeightSpec>,
    pub boundary: Option<BoundaryData>,
}

struct Cursor<'a> {
    line: usize,
    text: &'a str,
}

impl Cursor<'_> {
    fn err(&self, col: usize, message: impl Into<String>) -> ParseError {
        ParseError { line: self.line, col, message: message.into() }
    }

    /// Whitespace-separated tokens with 1-based columns.
    fn tokens(&self, from: usize) -> Vec<(usize, &str)> {
        let mut out = Vec::new();
        let s = &self.text[from..];
        let mut start = None;
        for (i, ch) in s.char_indices() {
            if ch.is_whitespace() {
                if let Some(st) = start.take() {
                    out.push((from + st + 1, &s[st..i]));
                }
            } else if start.is_none() {
                start = Some(i);
            }
        }
        if let Some(st) = start {
            out.push((from + st + 1, &s[st..]));
        }
        out
    }

    fn num<T: std::str::FromStr>(&self, col: usize, tok: &str, what: &str) -> Result<T, ParseError> {
        tok.parse::<T>().map_err(|_| self.err(col, format!("invalid {what} '{tok}'")))
    }

    fn finite(&self, col: usize, tok: &str) -> Result<f64, ParseError> {
        let v: f64 = self.num(col, tok, "number")?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.err(col, format!("non-finite number '{tok}'")))
        }
    }

    fn facet(&self, col: usize, tok: &str) -> Result<FacetRef, ParseError> {
        let (b, f) = tok
            .split_once(':')
            .ok_or_else(|| self.err(col, format!("expected branch:facet, found '{tok}'")))?;
        Ok(FacetRef { branch: BranchId(self.num(col, b, "branch id")?), facet: self.num(col, f, "facet index")? })
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Section {
    Header,
    Vertices,
    Branches,
    Glue,
    Boundary,
    FieldF,
    SamplesF,
    FieldG,
    SamplesG,
}

fn section_name(s: &str) -> Option<Section> {
    Some(match s {
        "vertices" => Section::Vertices,
        "branches" => Section::Branches,
        "glue" => Section::Glue,
        "boundary" => Section::Boundary,
        "field f" => Section::FieldF,
        "samples f" => Section::SamplesF,
        "field g" => Section::FieldG,
        "samples g" => Section::SamplesG,
        _ => return None,
    })
}

/// Location of a reference, checked once every section is read.
struct Ref {
    line: usize,
    col: usize,
}

pub fn parse_complex(text: &str) -> Result<LepComplex, ParseError> {
    parse_file(text).map(|f| f.complex)
}

pub fn parse_file(text: &str) -> Result<ComplexFile, ParseError> {
    let mut section = Section::Header;
    let mut version_seen = false;
    let mut dims: Option<(usize, usize)> = None;
    let mut vertices: Vec<(u32, Vec<f64>, Ref)> = Vec::new();
    let mut branches: Vec<(u32, Vec<(u32, Ref)>, Ref)> = Vec::new();
    let mut glue: Vec<(u32, Vec<(FacetRef, Ref)>, Ref)> = Vec::new();
    let mut bfacets: Vec<(FacetRef, Ref)> = Vec::new();
    let mut bverts: Vec<(u32, Ref)> = Vec::new();
    let mut weight: Option<WeightSpec> = None;
    let mut wrefs: Vec<(BranchId, Ref)> = Vec::new();
    let mut bdata: Option<BoundaryData> = None;
    let mut grefs: Vec<(FacetRef, Ref)> = Vec::new();
    let mut srefs: Vec<(u32, Ref)> = Vec::new();
    let mut last_line = 0;

    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        let cur = Cursor { line: no + 1, text: line };
        last_line = no + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = line.len() - line.trim_start().len();
        if trimmed.starts_with('[') {
            let inner = trimmed
                .strip_prefix('[')
                .and_then(|s| s.strip_suffix(']'))
                .ok_or_else(|| cur.err(indent + 1, "unterminated section header"))?;
            let inner = inner.split_whitespace().collect::<Vec<_>>().join(" ");
            section = section_name(&inner).ok_or_else(|| cur.err(indent + 1, format!("unknown section [{inner}]")))?;
            if !version_seen || dims.is_none() {
                return Err(cur.err(indent + 1, "expected 'lep 1' and 'dim' lines before sections"));
            }
            match section {
                Section::FieldF | Section::SamplesF => {
                    weight.get_or_insert_with(WeightSpec::default);
                }
                Section::FieldG | Section::SamplesG => {
                    bdata.get_or_insert_with(BoundaryData::default);
                }
                _ => {}
            }
            continue;
        }

        if section == Section::Header {
            let toks = cur.tokens(0);
            match toks[0].1 {
                "lep" => {
                    if toks.len() != 2 || toks[1].1 != "1" {
                        return Err(cur.err(toks[0].0, "unsupported format version, expected 'lep 1'"));
                    }
                    version_seen = true;
                }
                "dim" => {
                    if !version_seen {
                        return Err(cur.err(toks[0].0, "expected 'lep 1' first"));
                    }
                    if toks.len() != 3 {
                        return Err(cur.err(toks[0].0, "expected 'dim <ambient> <branch>'"));
                    }
                    let a: usize = cur.num(toks[1].0, toks[1].1, "dimension")?;
                    let b: usize = cur.num(toks[2].0, toks[2].1, "dimension")?;
                    if !matches!((a, b), (2, 1) | (3, 1) | (3, 2)) {
                        return Err(cur.err(toks[1].0, format!("unsupported dimensions {a} {b}")));
                    }
                    dims = Some((a, b));
                }
                other => return Err(cur.err(toks[0].0, format!("unknown key '{other}'"))),
            }
            continue;
        }

        let eq = line.find('=').ok_or_else(|| cur.err(indent + 1, "expected 'key = value'"))?;
        let key = line[..eq].trim();
        let key_col = indent + 1;
        let vals = cur.tokens(eq + 1);
        let r = |col| Ref { line: no + 1, col };
        let (ambient, _) = dims.expect("dims checked at section start");

        match section {
            Section::Header => unreachable!(),
            Section::Vertices => {
                let id: u32 = cur.num(key_col, key, "vertex id")?;
                if vals.len() != ambient {
                    return Err(cur.err(eq + 2, format!("vertex {id}: expected {ambient} coordinates, found {}", vals.len())));
                }
                let coords = vals.iter().map(|(c, t)| cur.finite(*c, t)).collect::<Result<Vec<_>, _>>()?;
                if vertices.iter().any(|v| v.0 == id) {
                    return Err(cur.err(key_col, format!("duplicate vertex id {id}")));
                }
                vertices.push((id, coords, r(key_col)));
            }
            Section::Branches => {
                let id: u32 = cur.num(key_col, key, "branch id")?;
                if branches.iter().any(|b| b.0 == id) {
                    return Err(cur.err(key_col, format!("duplicate branch id {id}")));
                }
                let vs = vals
                    .iter()
                    .map(|(c, t)| Ok((cur.num(*c, t, "vertex id")?, r(*c))))
                    .collect::<Result<Vec<_>, ParseError>>()?;
                branches.push((id, vs, r(key_col)));
            }
            Section::Glue => {
                let id: u32 = cur.num(key_col, key, "edge id")?;
                if glue.iter().any(|g| g.0 == id) {
                    return Err(cur.err(key_col, format!("duplicate ramification edge id {id}")));
                }
                let fs = vals
                    .iter()
                    .map(|(c, t)| Ok((cur.facet(*c, t)?, r(*c))))
                    .collect::<Result<Vec<_>, ParseError>>()?;
                glue.push((id, fs, r(key_col)));
            }
            Section::Boundary => match key {
                "facets" => {
                    for (c, t) in vals {
                        bfacets.push((cur.facet(c, t)?, r(c)));
                    }
                }
                "vertices" => {
                    for (c, t) in vals {
                        bverts.push((cur.num(c, t, "vertex id")?, r(c)));
                    }
                }
                other => return Err(cur.err(key_col, format!("unknown key '{other}' in [boundary]"))),
            },
            Section::FieldF => {
                let spec = parse_weight(&cur, &vals, eq)?;
                let w = weight.as_mut().expect("initialized");
                if key == "default" {
                    w.default = Some(spec);
                } else {
                    let id = BranchId(cur.num(key_col, key, "branch id")?);
                    if w.branches.insert(id, spec).is_some() {
                        return Err(cur.err(key_col, format!("duplicate field for branch {id}")));
                    }
                    wrefs.push((id, r(key_col)));
                }
            }
            Section::SamplesF | Section::SamplesG => {
                let id: u32 = cur.num(key_col, key, "vertex id")?;
                if vals.len() != 1 {
                    return Err(cur.err(eq + 2, "expected one value"));
                }
                let v = cur.finite(vals[0].0, vals[0].1)?;
                let dup = if section == Section::SamplesF {
                    weight.as_mut().expect("initialized").samples.insert(VertexId(id), v).is_some()
                } else {
                    bdata.as_mut().expect("initialized").samples.insert(VertexId(id), v).is_some()
                };
                if dup {
                    return Err(cur.err(key_col, format!("duplicate sample for vertex {id}")));
                }
                srefs.push((id, r(key_col)));
            }
            Section::FieldG => {
                let spec = parse_boundary_value(&cur, &vals, eq)?;
                let g = bdata.as_mut().expect("initialized");
                if key == "default" {
                    g.default = Some(spec);
                } else {
                    let f = cur.facet(key_col, key)?;
                    if g.facets.insert(f, spec).is_some() {
                        return Err(cur.err(key_col, format!("duplicate boundary value for facet {f}")));
                    }
                    grefs.push((f, r(key_col)));
                }
            }
        }
    }

    let (ambient, branch_dim) = match (version_seen, dims) {
        (true, Some(d)) => d,
        _ => return Err(ParseError { line: last_line.max(1), col: 1, message: "missing 'lep 1' / 'dim' header".into() }),
    };

    // references
    let at = |r: &Ref, message: String| ParseError { line: r.line, col: r.col, message };
    let vset: BTreeSet<u32> = vertices.iter().map(|v| v.0).collect();
    let mut sizes = BTreeMap::new();
    for (id, vs, _) in &branches {
        for (v, rr) in vs {
            if !vset.contains(v) {
                return Err(at(rr, format!("branch {id} references unknown vertex {v}")));
            }
        }
        let ok = if branch_dim == 1 { vs.len() == 2 } else { vs.len() >= 3 };
        if !ok {
            let rr = &branches.iter().find(|b| b.0 == *id).expect("present").2;
            return Err(at(rr, format!("branch {id} has {} vertices", vs.len())));
        }
        sizes.insert(*id, if branch_dim == 1 { 2 } else { vs.len() });
    }
    let check_facet = |f: &FacetRef, rr: &Ref| -> Result<(), ParseError> {
        match sizes.get(&f.branch.0) {
            None => Err(at(rr, format!("unknown branch {}", f.branch))),
            Some(&n) if f.facet as usize >= n => Err(at(rr, format!("facet {f} out of range"))),
            _ => Ok(()),
        }
    };
    for (_, fs, _) in &glue {
        for (f, rr) in fs {
            check_facet(f, rr)?;
        }
    }
    for (f, rr) in &bfacets {
        check_facet(f, rr)?;
    }
    for (f, rr) in &grefs {
        check_facet(f, rr)?;
    }
    for (v, rr) in bverts.iter().chain(&srefs) {
        if !vset.contains(v) {
            return Err(at(rr, format!("unknown vertex {v}")));
        }
    }
    for (b, rr) in &wrefs {
        if !sizes.contains_key(&b.0) {
            return Err(at(rr, format!("unknown branch {b}")));
        }
    }

    let mut builder = ComplexBuilder::new(ambient, branch_dim);
    for (id, coords, _) in &vertices {
        builder.vertex(*id, coords);
    }
    for (id, vs, _) in &branches {
        builder.branch(*id, &vs.iter().map(|v| v.0).collect::<Vec<_>>());
    }
    for (id, fs, _) in &glue {
        builder.glue(*id, &fs.iter().map(|(f, _)| (f.branch.0, f.facet)).collect::<Vec<_>>());
    }
    for (f, _) in &bfacets {
        builder.boundary_facet(f.branch.0, f.facet);
    }
    for (v, _) in &bverts {
        builder.boundary_vertex(*v);
    }
    let complex = builder
        .build()
        .map_err(|e| ParseError { line: last_line.max(1), col: 1, message: e.to_string() })?;
    Ok(ComplexFile { complex, weight, boundary: bdata })
}

fn parse_weight(cur: &Cursor, vals: &[(usize, &str)], eq: usize) -> Result<FieldSpec, ParseError> {
    let Some(&(col, kind)) = vals.first() else {
        return Err(cur.err(eq + 2, "expected const, poly or samples"));
    };
    match kind {
        "const" => {
            if vals.len() != 2 {
                return Err(cur.err(col, "expected 'const <value>'"));
            }
            Ok(FieldSpec::Const(cur.finite(vals[1].0, vals[1].1)?))
        }
        "poly" => {
            let mut terms = Vec::new();
            for &(c, t) in &vals[1..] {
                let parts: Vec<&str> = t.split(':').collect();
                if parts.len() != 3 {
                    return Err(cur.err(c, format!("expected c:a:b, found '{t}'")));
                }
                terms.push((cur.finite(c, parts[0])?, cur.num(c, parts[1], "exponent")?, cur.num(c, parts[2], "exponent")?));
            }
            if terms.is_empty() {
                return Err(cur.err(col, "poly needs at least one term"));
            }
            Ok(FieldSpec::Poly(terms))
        }
        "samples" if vals.len() == 1 => Ok(FieldSpec::Samples),
        other => Err(cur.err(col, format!("unknown field kind '{other}'"))),
    }
}

fn parse_boundary_value(cur: &Cursor, vals: &[(usize, &str)], eq: usize) -> Result<BoundaryValue, ParseError> {
    let Some(&(col, kind)) = vals.first() else {
        return Err(cur.err(eq + 2, "expected const, poly or samples"));
    };
    match kind {
        "const" => {
            if vals.len() != 2 {
                return Err(cur.err(col, "expected 'const <value>'"));
            }
            Ok(BoundaryValue::Const(cur.finite(vals[1].0, vals[1].1)?))
        }
        "poly" => {
            let mut terms = Vec::new();
            for &(c, t) in &vals[1..] {
                let parts: Vec<&str> = t.split(':').collect();
                if parts.len() != 4 {
                    return Err(cur.err(c, format!("expected c:a:b:d, found '{t}'")));
                }
                terms.push((
                    cur.finite(c, parts[0])?,
                    cur.num(c, parts[1], "exponent")?,
                    cur.num(c, parts[2], "exponent")?,
                    cur.num(c, parts[3], "exponent")?,
                ));
            }
            if terms.is_empty() {
                return Err(cur.err(col, "poly needs at least one term"));
            }
            Ok(BoundaryValue::Poly(terms))
        }
        "samples" if vals.len() == 1 => Ok(BoundaryValue::Samples),
        other => Err(cur.err(col, format!("unknown boundary value kind '{other}'"))),
    }
}

struct Num(f64);

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // shortest round-trip form
        write!(f, "{:?}", self.0)
    }
}

fn write_weight(out: &mut String, spec: &FieldSpec) {
    match spec {
        FieldSpec::Const(c) => write!(out, "const {}", Num(*c)),
        FieldSpec::Poly(t) => {
            out.push_str("poly");
            t.iter().try_for_each(|(c, a, b)| write!(out, " {}:{a}:{b}", Num(*c)))
        }
        FieldSpec::Samples => write!(out, "samples"),
    }
    .expect("write to string");
}

fn write_boundary_value(out: &mut String, v: &BoundaryValue) {
    match v {
        BoundaryValue::Const(c) => write!(out, "const {}", Num(*c)),
        BoundaryValue::Poly(t) => {
            out.push_str("poly");
            t.iter().try_for_each(|(c, a, b, d)| write!(out, " {}:{a}:{b}:{d}", Num(*c)))
        }
        BoundaryValue::Samples => write!(out, "samples"),
    }
    .expect("write to string");
}

/// Geometry sections only.
pub fn serialize_complex(c: &LepComplex) -> String {
    serialize_file(&ComplexFile { complex: c.clone(), weight: None, boundary: None })
}

pub fn serialize_file(file: &ComplexFile) -> String {
    let c = &file.complex;
    let mut s = String::new();
    let _ = writeln!(s, "lep 1\ndim {} {}", c.ambient_dim(), c.branch_dim());
    s.push_str("[vertices]\n");
    for &v in c.vertex_ids() {
        let p = c.vertex_position(v).expect("own vertex");
        let coords: Vec<String> = p[..c.ambient_dim()].iter().map(|x| Num(*x).to_string()).collect();
        let _ = writeln!(s, "{v} = {}", coords.join(" "));
    }
    s.push_str("[branches]\n");
    for b in c.branches() {
        let ids: Vec<String> = b.vertex_ids.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "{} = {}", b.id, ids.join(" "));
    }
    if !c.ram_edges().is_empty() {
        s.push_str("[glue]\n");
        for e in c.ram_edges() {
            let fs: Vec<String> = e.incident.iter().map(|i| format!("{}:{}", i.branch, i.facet)).collect();
            let _ = writeln!(s, "{} = {}", e.id, fs.join(" "));
        }
    }
    if !c.boundary_facets().is_empty() || !c.boundary_vertices().is_empty() {
        s.push_str("[boundary]\n");
        if !c.boundary_facets().is_empty() {
            let fs: Vec<String> = c.boundary_facets().iter().map(|f| f.to_string()).collect();
            let _ = writeln!(s, "facets = {}", fs.join(" "));
        }
        if !c.boundary_vertices().is_empty() {
            let vs: Vec<String> = c.boundary_vertices().iter().map(|v| v.to_string()).collect();
            let _ = writeln!(s, "vertices = {}", vs.join(" "));
        }
    }
    if let Some(w) = &file.weight {
        s.push_str("[field f]\n");
        if let Some(d) = &w.default {
            s.push_str("default = ");
            write_weight(&mut s, d);
            s.push('\n');
        }
        for (b, spec) in &w.branches {
            let _ = write!(s, "{b} = ");
            write_weight(&mut s, spec);
            s.push('\n');
        }
        if !w.samples.is_empty() {
            s.push_str("[samples f]\n");
            for (v, x) in &w.samples {
                let _ = writeln!(s, "{v} = {}", Num(*x));
            }
        }
    }
    if let Some(g) = &file.boundary {
        s.push_str("[field g]\n");
        if let Some(d) = &g.default {
            s.push_str("default = ");
            write_boundary_value(&mut s, d);
            s.push('\n');
        }
        for (f, v) in &g.facets {
            let _ = write!(s, "{f} = ");
            write_boundary_value(&mut s, v);
            s.push('\n');
        }
        if !g.samples.is_empty() {
            s.push_str("[samples g]\n");
            for (v, x) in &g.samples {
                let _ = writeln!(s, "{v} = {}", Num(*x));
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: &str = "lep 1\ndim 3 2\n[vertices]\n1 = 0 0 0\n2 = 1 0 0\n3 = 1 1 0\n4 = 0 1 0\n\
                          [branches]\n1 = 1 2 3 4\n[boundary]\nfacets = 1:0 1:1 1:2 1:3\n";

    #[test]
    fn parses_square() {
        let c = parse_complex(SQUARE).unwrap();
        assert_eq!(c.branches().len(), 1);
        assert_eq!(c.boundary_facets().len(), 4);
    }

    #[test]
    fn missing_vertex_is_named() {
        let bad = SQUARE.replace("1 = 1 2 3 4", "1 = 1 2 3 9");
        let e = parse_complex(&bad).unwrap_err();
        assert!(e.message.contains("unknown vertex 9"), "{e}");
        assert_eq!((e.line, e.col), (9, 11));
    }

    #[test]
    fn unknown_key_has_location() {
        let bad = SQUARE.replace("facets =", "edges =");
        let e = parse_complex(&bad).unwrap_err();
        assert_eq!(e.line, 11);
        assert!(e.message.contains("unknown key 'edges'"));
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let text = SQUARE.replace("3 = 1 1 0", "3 = 0.1 0.30000000000000004 1e-300");
        let a = parse_file(&text).unwrap();
        let b = parse_file(&serialize_file(&a)).unwrap();
        assert_eq!(a, b);
    }
}
