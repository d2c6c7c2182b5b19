//! Command-line front end. Exit codes: 0 success, 1 failed verdict, 2 usage or input error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use crate::dirichlet::{solve_dirichlet, BoundaryData, BoundaryValue, DirichletProblem};
use crate::geometry::LepComplex;
use crate::hamiltonian::HamiltonianFamily;
use crate::io::{self, ComplexFile, FieldSpec, Header, RunConfig, WeightSpec};
use crate::metric::{brute_force_action, MetricGraph, QueryPoint, SolutionField};
use crate::viscosity::{check_lipschitz, check_subsolution, check_supersolution, compare_fields, CheckOptions};

#[derive(Parser, Debug)]
#[command(name = "lep", version, about = "Hamilton-Jacobi equations on polygonal ramified spaces")]
struct Cli {
    /// TOML run configuration (default: $LEP_CONFIG).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone)]
struct MeshArgs {
    /// Mesh size.
    #[arg(long)]
    h: Option<f64>,
    /// Link radius in multiples of h.
    #[arg(long)]
    ring: Option<usize>,
    /// Weight: const:C, poly:c:a:b[+c:a:b...], or file (the [field f] section).
    #[arg(long)]
    f: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a complex against the geometric axioms.
    Validate { complex: PathBuf },
    /// Action distance between two points given as "branch:u,v".
    Distance {
        #[arg(long)]
        complex: PathBuf,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[command(flatten)]
        mesh: MeshArgs,
    },
    /// Solve the Dirichlet problem and write the field.
    Solve {
        /// Complex file (positional or --complex).
        complex_pos: Option<PathBuf>,
        #[arg(long)]
        complex: Option<PathBuf>,
        /// Boundary data: const:C, poly:c:a:b:d[+...], or file (the [field g] section).
        #[arg(long)]
        g: Option<String>,
        #[command(flatten)]
        mesh: MeshArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Writes <prefix>.obj and <prefix>.scalars.
        #[arg(long)]
        mesh_out: Option<PathBuf>,
        #[arg(long)]
        override_strict_subsolution: bool,
        #[arg(long)]
        override_boundary_compat: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a field written by `solve`.
    Check {
        #[arg(long)]
        complex: PathBuf,
        #[arg(long)]
        u: PathBuf,
        /// Second field for `compare` (u <= v expected).
        #[arg(long)]
        v: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Mode,
        /// "auto" or a number.
        #[arg(long, default_value = "auto")]
        tol: String,
        /// Lipschitz constant (default: sampled from f).
        #[arg(long)]
        lipschitz: Option<f64>,
        #[command(flatten)]
        mesh: MeshArgs,
    },
    /// Re-export a field CSV as an OBJ mesh plus scalars.
    Export {
        #[arg(long)]
        complex: PathBuf,
        #[arg(long)]
        u: PathBuf,
        #[arg(long, value_enum, default_value = "mesh")]
        format: Format,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        mesh: MeshArgs,
    },
    /// Brute-force action and unfolding distance between two points.
    Oracle {
        #[arg(long)]
        complex: PathBuf,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        #[arg(long)]
        f: Option<String>,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Sub,
    Super,
    Lipschitz,
    Compare,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Mesh,
}

pub fn run_command(argv: &[String]) -> i32 {
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr().lock();
    run_with_output(argv, &mut out, &mut err)
}

pub fn run_with_output(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    match dispatch(cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            2
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let cfg = RunConfig::resolve(cli.config.as_deref())?;
    match cli.command {
        Command::Validate { complex } => {
            let (file, _) = load(&complex)?;
            let report = file.complex.validate();
            if report.valid {
                writeln!(out, "valid: {}", complex.display())?;
                Ok(0)
            } else {
                for v in &report.violations {
                    writeln!(out, "violation: {} [{}]", v.rule.reason(), v.elements.join(", "))?;
                }
                writeln!(out, "invalid: {} violation(s)", report.violations.len())?;
                Ok(1)
            }
        }
        Command::Distance { complex, from, to, mesh } => {
            let (file, _) = load(&complex)?;
            let cfg = apply_mesh(&cfg, &mesh)?;
            let h = hamiltonian(&file, mesh.f.as_deref())?;
            let g = MetricGraph::build(&h, cfg.mesh_params())?;
            let d = g.distance(&point(&from)?, &point(&to)?)?;
            writeln!(out, "{d:?}")?;
            Ok(0)
        }
        Command::Solve {
            complex_pos,
            complex,
            g,
            mesh,
            out: out_path,
            mesh_out,
            override_strict_subsolution,
            override_boundary_compat,
            seed,
        } => {
            let path = complex.or(complex_pos).ok_or_else(|| anyhow!("missing complex file"))?;
            let (file, text) = load(&path)?;
            let mut cfg = apply_mesh(&cfg, &mesh)?;
            cfg.override_strict_subsolution |= override_strict_subsolution;
            cfg.override_boundary_compat |= override_boundary_compat;
            cfg.seed = seed.unwrap_or(cfg.seed);
            let out_path = out_path.or(cfg.out.clone());
            let mesh_out = mesh_out.or(cfg.mesh_out.clone());
            let h = hamiltonian(&file, mesh.f.as_deref())?;
            let mut problem = DirichletProblem::new(h, boundary(&file, g.as_deref())?, cfg.mesh_params());
            problem.overrides = cfg.overrides();
            problem.seed = cfg.seed;
            let sol = match solve_dirichlet(&problem) {
                Ok(s) => s,
                Err(e @ (crate::dirichlet::DirichletError::StrictSubsolution(_)
                | crate::dirichlet::DirichletError::BoundaryIncompatible { .. })) => {
                    writeln!(err, "error: {e}")?;
                    return Ok(1);
                }
                Err(e) => return Err(e.into()),
            };
            for w in &sol.warnings {
                writeln!(err, "warning: {w}")?;
            }
            let header = Header::new(&sol.field, &io::hash_hex(&text), cfg.seed);
            let csv = io::write_field_csv(&sol.graph, &sol.field, &header)?;
            match out_path {
                Some(p) => fs::write(&p, csv).with_context(|| format!("writing {}", p.display()))?,
                None => out.write_all(csv.as_bytes())?,
            }
            if let Some(prefix) = mesh_out {
                write_mesh_files(&sol.graph, &sol.field, &header, &prefix, err)?;
            }
            Ok(0)
        }
        Command::Check { complex, u, v, mode, tol, lipschitz, mesh } => {
            let (file, _) = load(&complex)?;
            let (field_u, params) = read_field(&u)?;
            let cfg = apply_mesh(&apply_header(&cfg, &params)?, &mesh)?;
            let h = hamiltonian(&file, mesh.f.as_deref())?;
            let g = MetricGraph::build(&h, cfg.mesh_params())?;
            let fu = attach(&g, field_u)?;
            let mut opts = CheckOptions::auto(&g);
            if tol != "auto" {
                opts.tol = tol.parse().map_err(|_| anyhow!("--tol must be 'auto' or a number"))?;
            } else if let Some(t) = cfg.tol {
                opts.tol = t;
            }
            let pass = match mode {
                Mode::Sub => {
                    let r = check_subsolution(&g, &fu, &opts)?;
                    write!(out, "{r}")?;
                    r.all_pass()
                }
                Mode::Super => {
                    let r = check_supersolution(&g, &fu, &opts, true)?;
                    write!(out, "{r}")?;
                    r.all_pass()
                }
                Mode::Lipschitz => {
                    let c = lipschitz.unwrap_or_else(|| h.lipschitz_constant());
                    let r = check_lipschitz(&g, &fu, c, 10.0 * g.params().h)?;
                    writeln!(out, "{r}")?;
                    r.pass
                }
                Mode::Compare => {
                    let v = v.ok_or_else(|| anyhow!("--mode compare needs --v"))?;
                    let fv = attach(&g, read_field(&v)?.0)?;
                    let r = compare_fields(&g, &fu, &fv, 1e-9 + g.params().h * h.lipschitz_constant())?;
                    writeln!(out, "{r}")?;
                    r.pass == Some(true)
                }
            };
            Ok(if pass { 0 } else { 1 })
        }
        Command::Export { complex, u, format, out: out_path, mesh } => {
            let (file, text) = load(&complex)?;
            let (values, params) = read_field(&u)?;
            let cfg = apply_mesh(&apply_header(&cfg, &params)?, &mesh)?;
            let h = hamiltonian(&file, mesh.f.as_deref())?;
            let g = MetricGraph::build(&h, cfg.mesh_params())?;
            let field = attach(&g, values)?;
            let header = Header::new(&field, &io::hash_hex(&text), cfg.seed);
            match format {
                Format::Csv => fs::write(&out_path, io::write_field_csv(&g, &field, &header)?)?,
                Format::Mesh => write_mesh_files(&g, &field, &header, &out_path, err)?,
            }
            Ok(0)
        }
        Command::Oracle { complex, from, to, depth, f } => {
            let (file, _) = load(&complex)?;
            let h = hamiltonian(&file, f.as_deref())?;
            let (x, y) = (point(&from)?, point(&to)?);
            match brute_force_action(&h, &x, &y, depth) {
                Ok(v) => writeln!(out, "brute_force_action {v:?}")?,
                Err(e) => writeln!(out, "brute_force_action error: {e}")?,
            }
            let c = h.complex();
            if x.branch == y.branch {
                let d = crate::geometry::linalg::dist2(x.local, y.local);
                writeln!(out, "unfolding_distance {d:?}")?;
            }
            for e in c.ram_edges() {
                let inc = c.incidence(e.id)?;
                if x.branch != y.branch && inc.contains(&x.branch) && inc.contains(&y.branch) {
                    let d = c.unfolding_distance(e.id, x.branch, x.local, y.branch, y.local)?;
                    writeln!(out, "unfolding_distance edge={} {d:?}", e.id)?;
                }
            }
            Ok(0)
        }
    }
}

fn load(path: &Path) -> Result<(ComplexFile, String)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file = io::parse_file(&text).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    Ok((file, text))
}

fn apply_mesh(cfg: &RunConfig, m: &MeshArgs) -> Result<RunConfig> {
    let mut c = cfg.clone();
    if let Some(h) = m.h {
        c.h = h;
    }
    if let Some(r) = m.ring {
        c.ring = r;
    }
    c.check()?;
    Ok(c)
}

/// Takes `h` and `ring` from a field header's `params` line.
fn apply_header(cfg: &RunConfig, params: &[(String, String)]) -> Result<RunConfig> {
    let mut c = cfg.clone();
    for (k, v) in params {
        match k.as_str() {
            "h" => c.h = v.parse()?,
            "ring" => c.ring = v.parse()?,
            "seed" => c.seed = v.parse()?,
            _ => {}
        }
    }
    Ok(c)
}

fn read_field(path: &Path) -> Result<(Vec<f64>, Vec<(String, String)>)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let csv = io::read_field_csv(&text).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    let params = csv
        .header
        .iter()
        .filter_map(|l| l.strip_prefix("params "))
        .flat_map(|l| l.split_whitespace())
        .filter_map(|kv| kv.split_once('=').map(|(k, v)| (k.to_string(), v.to_string())))
        .collect();
    Ok((csv.values, params))
}

fn attach(g: &MetricGraph, values: Vec<f64>) -> Result<SolutionField> {
    if values.len() != g.node_count() {
        bail!("field has {} values but the graph has {} nodes; pass the --h and --ring used to solve", values.len(), g.node_count());
    }
    Ok(SolutionField::new(g, values))
}

fn write_mesh_files(g: &MetricGraph, f: &SolutionField, header: &Header, prefix: &Path, err: &mut dyn Write) -> Result<()> {
    let m = io::write_mesh(g, f, header)?;
    for w in &m.warnings {
        writeln!(err, "warning: {w}")?;
    }
    fs::write(prefix.with_extension("obj"), m.obj)?;
    fs::write(prefix.with_extension("scalars"), m.scalars)?;
    Ok(())
}

/// Parses "branch:u,v" (or "branch:u" on segments).
pub fn point(s: &str) -> Result<QueryPoint> {
    let (b, rest) = s.split_once(':').ok_or_else(|| anyhow!("point '{s}' must look like branch:u,v"))?;
    let b: u32 = b.trim().parse().map_err(|_| anyhow!("bad branch id in '{s}'"))?;
    let mut coords = rest.split(',').map(|t| t.trim().parse::<f64>());
    let u = coords.next().ok_or_else(|| anyhow!("missing coordinate in '{s}'"))??;
    let v = coords.next().transpose()?.unwrap_or(0.0);
    if coords.next().is_some() {
        bail!("too many coordinates in '{s}'");
    }
    Ok(QueryPoint::new(b, u, v))
}

fn terms<const N: usize>(s: &str) -> Result<Vec<[f64; N]>> {
    s.split('+')
        .map(|t| {
            let parts: Vec<f64> = t.split(':').map(|x| x.trim().parse::<f64>()).collect::<Result<_, _>>()?;
            <[f64; N]>::try_from(parts).map_err(|_| anyhow!("term '{t}' needs {N} fields"))
        })
        .collect()
}

fn weight_spec(spec: &str) -> Result<WeightSpec> {
    if let Some(c) = spec.strip_prefix("const:") {
        return Ok(WeightSpec::constant(c.parse()?));
    }
    if let Some(p) = spec.strip_prefix("poly:") {
        let t = terms::<3>(p)?.into_iter().map(|[c, a, b]| (c, a as u32, b as u32)).collect();
        return Ok(WeightSpec { default: Some(FieldSpec::Poly(t)), ..Default::default() });
    }
    bail!("weight '{spec}' must be const:C, poly:c:a:b[+...] or file")
}

/// Eikonal family from `--f`, else from the file, else `f = 1`.
fn hamiltonian(file: &ComplexFile, f: Option<&str>) -> Result<HamiltonianFamily> {
    let complex: Arc<LepComplex> = Arc::new(file.complex.clone());
    let spec = match f {
        None | Some("file") => match &file.weight {
            Some(w) => w.clone(),
            None if f.is_some() => bail!("the complex file has no [field f] section"),
            None => WeightSpec::constant(1.0),
        },
        Some(s) => weight_spec(s)?,
    };
    Ok(spec.to_hamiltonian(complex)?)
}

fn boundary(file: &ComplexFile, g: Option<&str>) -> Result<BoundaryData> {
    match g {
        None | Some("file") => match &file.boundary {
            Some(b) => Ok(b.clone()),
            None if g.is_some() => bail!("the complex file has no [field g] section"),
            None => Ok(BoundaryData::constant(0.0)),
        },
        Some(s) => {
            if let Some(c) = s.strip_prefix("const:") {
                return Ok(BoundaryData::constant(c.parse()?));
            }
            if let Some(p) = s.strip_prefix("poly:") {
                let t = terms::<4>(p)?
                    .into_iter()
                    .map(|[c, a, b, d]| (c, a as u32, b as u32, d as u32))
                    .collect();
                return Ok(BoundaryData { default: Some(BoundaryValue::Poly(t)), ..Default::default() });
            }
            bail!("boundary data '{s}' must be const:C, poly:c:a:b:d[+...] or file")
        }
    }
}

