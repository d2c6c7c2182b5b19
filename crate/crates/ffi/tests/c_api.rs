use std::ffi::{CStr, CString};
use std::ptr;

use lepspace::fixtures;
use lepspace_ffi::*;

fn parse(text: &str) -> *mut LepComplex {
    let c = CString::new(text).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { lep_complex_parse(c.as_ptr(), &mut out) }, LepStatus::Ok);
    assert!(!out.is_null());
    out
}

fn last_error() -> String {
    let p = lep_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn solve_square_and_read_back() {
    let c = parse(fixtures::SQUARE);
    let mut valid = false;
    let mut n_viol = 9;
    assert_eq!(unsafe { lep_complex_validate(c, &mut valid, &mut n_viol) }, LepStatus::Ok);
    assert!(valid);
    assert_eq!(n_viol, 0);

    let mut opts = lep_solve_options_default();
    opts.h = 0.125;
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { lep_solve(c, &opts, &mut s) }, LepStatus::Ok);
    let mut n = 0;
    assert_eq!(unsafe { lep_solution_node_count(s, &mut n) }, LepStatus::Ok);
    assert!(n > 0);

    let mut small = vec![0.0; n - 1];
    assert_eq!(unsafe { lep_solution_values(s, small.as_mut_ptr(), small.len()) }, LepStatus::BufferTooSmall);
    assert!(last_error().contains("buffer"));
    let mut buf = vec![f64::NAN; n];
    assert_eq!(unsafe { lep_solution_values(s, buf.as_mut_ptr(), n) }, LepStatus::Ok);
    assert!(buf.iter().all(|v| v.is_finite() && *v >= 0.0));

    let mut centre = 0.0;
    assert_eq!(unsafe { lep_solution_value_at(s, 1, 0.5, 0.5, &mut centre) }, LepStatus::Ok);
    assert!((centre - 0.5).abs() < 0.01, "{centre}");
    assert_eq!(unsafe { lep_solution_value_at(s, 99, 0.5, 0.5, &mut centre) }, LepStatus::InvalidArgument);

    unsafe {
        lep_solution_free(s);
        lep_complex_free(c);
    }
}

#[test]
fn distance_on_book() {
    let c = parse(fixtures::BOOK3);
    let mut d = 0.0;
    let st = unsafe { lep_distance(c, ptr::null(), 1, 0.3, 0.4, 2, 0.5, 0.4, &mut d) };
    assert_eq!(st, LepStatus::Ok);
    assert!((d - 0.8).abs() < 0.01, "{d}");
    unsafe { lep_complex_free(c) };
}

#[test]
fn errors_are_reported() {
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { lep_complex_parse(ptr::null(), &mut out) }, LepStatus::NullPointer);
    let bad = CString::new("lep 1\ndim 2 2\nbogus\n").unwrap();
    assert_eq!(unsafe { lep_complex_parse(bad.as_ptr(), &mut out) }, LepStatus::ParseError);
    assert!(last_error().contains("line"));

    let c = parse(fixtures::CUBE_NO_CORNER_EXCLUSION);
    let (mut valid, mut n) = (true, 0);
    assert_eq!(unsafe { lep_complex_validate(c, &mut valid, &mut n) }, LepStatus::Ok);
    assert!(!valid && n > 0);
    unsafe { lep_complex_free(c) };

    let c = parse(fixtures::SQUARE_STEEP_G);
    let mut opts = lep_solve_options_default();
    opts.h = 0.125;
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { lep_solve(c, &opts, &mut s) }, LepStatus::HypothesisFailed);
    assert!(s.is_null());
    opts.h = -1.0;
    assert_eq!(unsafe { lep_solve(c, &opts, &mut s) }, LepStatus::InvalidArgument);
    unsafe {
        lep_complex_free(c);
        lep_complex_free(ptr::null_mut());
        lep_solution_free(ptr::null_mut());
    }
}

#[test]
fn header_is_generated() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/lep.h")).unwrap();
    for name in ["lep_complex_parse", "lep_solve", "lep_last_error", "LEP_STATUS_HYPOTHESIS_FAILED", "typedef struct LepComplex LepComplex"] {
        assert!(h.contains(name), "{name}");
    }
}
