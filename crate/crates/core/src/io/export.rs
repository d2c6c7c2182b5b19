//! Field export as CSV and as an OBJ mesh with a parallel scalar file.

use std::fmt::Write;

use crate::metric::{MetricGraph, MetricError, SolutionField};

pub const CSV_COLUMNS: &str = "node,branch,u1,u2,x,y,z,value";

/// Provenance lines written at the top of every output file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Header {
    pub lines: Vec<String>,
}

impl Header {
    pub fn new(field: &SolutionField, input_hash: &str, seed: u64) -> Self {
        Header {
            lines: vec![
                format!("lep {}", env!("CARGO_PKG_VERSION")),
                format!("input sha256={input_hash}"),
                format!("params h={:?} ring={} seed={seed}", field.h, field.ring),
                format!("hamiltonian {}", field.kind),
                format!("provenance {}", field.provenance),
            ],
        }
    }

    fn write(&self, out: &mut String) {
        for l in &self.lines {
            let _ = writeln!(out, "# {l}");
        }
    }
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:?}")
    } else if v > 0.0 {
        "inf".into()
    } else if v < 0.0 {
        "-inf".into()
    } else {
        "nan".into()
    }
}

/// One row per graph node, in node order, located on the node's first branch.
pub fn write_field_csv(g: &MetricGraph, field: &SolutionField, header: &Header) -> Result<String, MetricError> {
    field.check(g)?;
    let mut s = String::new();
    header.write(&mut s);
    s.push_str(CSV_COLUMNS);
    s.push('\n');
    let branches = g.complex().branches();
    for (i, node) in g.nodes().iter().enumerate() {
        let (bi, l) = node.primary();
        let a = node.ambient;
        let _ = writeln!(
            s,
            "{i},{},{},{},{},{},{},{}",
            branches[bi].id,
            num(l[0]),
            num(l[1]),
            num(a[0]),
            num(a[1]),
            num(a[2]),
            num(field.values[i])
        );
    }
    Ok(s)
}

/// A parsed field CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldCsv {
    pub header: Vec<String>,
    pub values: Vec<f64>,
}

pub fn read_field_csv(text: &str) -> Result<FieldCsv, String> {
    let mut header = Vec::new();
    let mut values = Vec::new();
    let mut columns_seen = false;
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(h) = line.strip_prefix('#') {
            header.push(h.trim().to_string());
            continue;
        }
        if !columns_seen {
            if line != CSV_COLUMNS {
                return Err(format!("line {}: expected header '{CSV_COLUMNS}'", no + 1));
            }
            columns_seen = true;
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 8 {
            return Err(format!("line {}: expected 8 columns, found {}", no + 1, cells.len()));
        }
        let node: usize = cells[0].parse().map_err(|_| format!("line {}: bad node index", no + 1))?;
        if node != values.len() {
            return Err(format!("line {}: node {node} out of order", no + 1));
        }
        let v: f64 = cells[7].parse().map_err(|_| format!("line {}: bad value '{}'", no + 1, cells[7]))?;
        values.push(v);
    }
    if !columns_seen {
        return Err("missing column header".into());
    }
    Ok(FieldCsv { header, values })
}

/// OBJ geometry plus one scalar per exported vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshExport {
    pub obj: String,
    pub scalars: String,
    pub skipped: usize,
    pub warnings: Vec<String>,
}

/// Nodes with non-finite values are left out, with every face or line touching them.
pub fn write_mesh(g: &MetricGraph, field: &SolutionField, header: &Header) -> Result<MeshExport, MetricError> {
    field.check(g)?;
    let mut obj = String::new();
    let mut scalars = String::new();
    header.write(&mut obj);
    header.write(&mut scalars);
    let mut index = vec![0usize; g.node_count()];
    let mut next = 1;
    let mut skipped = 0;
    for (i, node) in g.nodes().iter().enumerate() {
        if !field.values[i].is_finite() {
            skipped += 1;
            continue;
        }
        index[i] = next;
        next += 1;
        let a = node.ambient;
        let _ = writeln!(obj, "v {} {} {}", num(a[0]), num(a[1]), num(a[2]));
        let _ = writeln!(scalars, "{}", num(field.values[i]));
    }
    for m in g.meshes() {
        if m.triangles.is_empty() {
            for (w0, w1) in m.nodes_in_order() {
                if index[w0] > 0 && index[w1] > 0 {
                    let _ = writeln!(obj, "l {} {}", index[w0], index[w1]);
                }
            }
        }
        for t in &m.triangles {
            if t.iter().all(|&v| index[v] > 0) {
                let _ = writeln!(obj, "f {} {} {}", index[t[0]], index[t[1]], index[t[2]]);
            }
        }
    }
    let warnings = if skipped > 0 {
        vec![format!("{skipped} nodes with non-finite values skipped in mesh export")]
    } else {
        Vec::new()
    };
    Ok(MeshExport { obj, scalars, skipped, warnings })
}
