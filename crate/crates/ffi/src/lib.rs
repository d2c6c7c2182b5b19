//! C ABI over the solver.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `_free` function. Every fallible call returns a [`LepStatus`];
//! on failure [`lep_last_error`] describes the cause for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use lepspace::dirichlet::{solve_dirichlet, BoundaryData, DirichletError, DirichletProblem, Overrides};
use lepspace::hamiltonian::HamiltonianFamily;
use lepspace::io::{parse_file, ComplexFile, WeightSpec};
use lepspace::metric::{MeshParams, MetricGraph, QueryPoint, SolutionField};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LepStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidArgument = 4,
    HypothesisFailed = 5,
    SolveError = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Parameters for [`lep_solve`] and [`lep_distance`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LepSolveOptions {
    pub h: f64,
    pub ring: u32,
    /// Constant weight used when `use_file_fields` is false or the file has none.
    pub f_const: f64,
    /// Constant boundary value used when `use_file_fields` is false or the file has none.
    pub g_const: f64,
    pub use_file_fields: bool,
    pub override_strict_subsolution: bool,
    pub override_boundary_compat: bool,
}

/// A parsed complex with its optional field sections.
pub struct LepComplex {
    file: ComplexFile,
}

/// A solved field together with its graph.
pub struct LepSolution {
    graph: MetricGraph,
    field: SolutionField,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn guard(f: impl FnOnce() -> Result<(), (LepStatus, String)>) -> LepStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            LepStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            LepStatus::Panic
        }
    }
}

fn null(what: &str) -> (LepStatus, String) {
    (LepStatus::NullPointer, format!("{what} is null"))
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn lep_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn lep_solve_options_default() -> LepSolveOptions {
    let p = MeshParams::default();
    LepSolveOptions {
        h: p.h,
        ring: p.ring as u32,
        f_const: 1.0,
        g_const: 0.0,
        use_file_fields: true,
        override_strict_subsolution: false,
        override_boundary_compat: false,
    }
}

/// Parses `.lep` text into a new handle stored in `*out`.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lep_complex_parse(text: *const c_char, out: *mut *mut LepComplex) -> LepStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let s = CStr::from_ptr(text)
            .to_str()
            .map_err(|e| (LepStatus::InvalidUtf8, e.to_string()))?;
        let file = parse_file(s).map_err(|e| (LepStatus::ParseError, e.to_string()))?;
        *out = Box::into_raw(Box::new(LepComplex { file }));
        Ok(())
    })
}

/// # Safety
/// `c` must be null or a handle from [`lep_complex_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lep_complex_free(c: *mut LepComplex) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Runs the axiom checks; `*violations` receives the number of violated rules.
///
/// # Safety
/// Pointers must be valid; `c` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lep_complex_validate(c: *const LepComplex, valid: *mut bool, violations: *mut usize) -> LepStatus {
    guard(|| {
        let c = c.as_ref().ok_or_else(|| null("complex"))?;
        if valid.is_null() || violations.is_null() {
            return Err(null("output"));
        }
        let r = c.file.complex.validate();
        *valid = r.valid;
        *violations = r.violations.len();
        if !r.valid {
            let msgs: Vec<String> = r
                .violations
                .iter()
                .map(|v| format!("{} [{}]", v.rule.reason(), v.elements.join(", ")))
                .collect();
            set_error(msgs.join("; "));
        }
        Ok(())
    })
}

/// # Safety
/// `c` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn lep_complex_branch_count(c: *const LepComplex, out: *mut usize) -> LepStatus {
    guard(|| {
        let c = c.as_ref().ok_or_else(|| null("complex"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = c.file.complex.branches().len();
        Ok(())
    })
}

fn family(c: &LepComplex, o: &LepSolveOptions) -> Result<HamiltonianFamily, (LepStatus, String)> {
    let complex = Arc::new(c.file.complex.clone());
    let spec = match (&c.file.weight, o.use_file_fields) {
        (Some(w), true) => w.clone(),
        _ => WeightSpec::constant(o.f_const),
    };
    spec.to_hamiltonian(complex).map_err(|e| (LepStatus::InvalidArgument, e.to_string()))
}

fn params(o: &LepSolveOptions) -> Result<MeshParams, (LepStatus, String)> {
    let p = MeshParams::new(o.h, o.ring as usize);
    p.check().map_err(|e| (LepStatus::InvalidArgument, e.to_string()))?;
    Ok(p)
}

/// Solves the Dirichlet problem; the new solution handle is stored in `*out`.
///
/// # Safety
/// `c` must be a live handle; `opts` null (defaults) or valid; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn lep_solve(
    c: *const LepComplex,
    opts: *const LepSolveOptions,
    out: *mut *mut LepSolution,
) -> LepStatus {
    guard(|| {
        let c = c.as_ref().ok_or_else(|| null("complex"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let o = opts.as_ref().copied().unwrap_or_else(|| lep_solve_options_default());
        let g = match (&c.file.boundary, o.use_file_fields) {
            (Some(b), true) => b.clone(),
            _ => BoundaryData::constant(o.g_const),
        };
        let mut problem = DirichletProblem::new(family(c, &o)?, g, params(&o)?);
        problem.overrides = Overrides {
            strict_subsolution: o.override_strict_subsolution,
            boundary_compat: o.override_boundary_compat,
        };
        let sol = solve_dirichlet(&problem).map_err(|e| match e {
            DirichletError::StrictSubsolution(_) | DirichletError::BoundaryIncompatible { .. } => {
                (LepStatus::HypothesisFailed, e.to_string())
            }
            _ => (LepStatus::SolveError, e.to_string()),
        })?;
        *out = Box::into_raw(Box::new(LepSolution { graph: sol.graph, field: sol.field }));
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a handle from [`lep_solve`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lep_solution_free(s: *mut LepSolution) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// # Safety
/// `s` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn lep_solution_node_count(s: *const LepSolution, out: *mut usize) -> LepStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("solution"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = s.field.values.len();
        Ok(())
    })
}

/// Copies the node values into `buf`, which must hold `len >= node count` doubles.
///
/// # Safety
/// `s` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn lep_solution_values(s: *const LepSolution, buf: *mut f64, len: usize) -> LepStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("solution"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let v = &s.field.values;
        if len < v.len() {
            return Err((LepStatus::BufferTooSmall, format!("need {} values, buffer holds {len}", v.len())));
        }
        ptr::copy_nonoverlapping(v.as_ptr(), buf, v.len());
        Ok(())
    })
}

/// Field value at a branch-local point.
///
/// # Safety
/// `s` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn lep_solution_value_at(
    s: *const LepSolution,
    branch: u32,
    u: f64,
    v: f64,
    out: *mut f64,
) -> LepStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("solution"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = s
            .graph
            .evaluate(&s.field, &QueryPoint::new(branch, u, v))
            .map_err(|e| (LepStatus::InvalidArgument, e.to_string()))?;
        Ok(())
    })
}

/// Action distance between two branch-local points.
///
/// # Safety
/// `c` must be a live handle; `opts` null (defaults) or valid; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn lep_distance(
    c: *const LepComplex,
    opts: *const LepSolveOptions,
    from_branch: u32,
    from_u: f64,
    from_v: f64,
    to_branch: u32,
    to_u: f64,
    to_v: f64,
    out: *mut f64,
) -> LepStatus {
    guard(|| {
        let c = c.as_ref().ok_or_else(|| null("complex"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let o = opts.as_ref().copied().unwrap_or_else(|| lep_solve_options_default());
        let g = MetricGraph::build(&family(c, &o)?, params(&o)?).map_err(|e| (LepStatus::SolveError, e.to_string()))?;
        *out = g
            .distance(&QueryPoint::new(from_branch, from_u, from_v), &QueryPoint::new(to_branch, to_u, to_v))
            .map_err(|e| (LepStatus::InvalidArgument, e.to_string()))?;
        Ok(())
    })
}
