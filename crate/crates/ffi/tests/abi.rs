//! Exercises the C ABI from Rust: every call goes through the extern "C"
//! surface exactly as a foreign caller would.

use std::ffi::{CStr, CString};
use std::io::Write;
use std::ptr;

use carealloc_ffi::*;

const TINY: &str = r#"{
  "p": 1,
  "reward0": [80.0, 0.0],
  "reward1": [89.0, 0.0],
  "q0_logits": [[-0.5, 1.0]],
  "q1_logits": [[-1.5, 1.0]],
  "pd0": {"const": 0.05},
  "pd1": {"const": 0.02},
  "p0": 0.1,
  "inflow": [["1", 1.0]],
  "bases": [[0.0, 1.0]]
}"#;

fn spec_from(json: &str) -> *mut CaSpec {
    let c = CString::new(json).unwrap();
    let mut spec = ptr::null_mut();
    let status = unsafe { ca_spec_from_json(c.as_ptr(), &mut spec) };
    assert_eq!(status, CaStatus::Ok);
    assert!(!spec.is_null());
    spec
}

#[test]
fn version_is_non_empty() {
    let v = unsafe { CStr::from_ptr(ca_version()) };
    assert!(!v.to_str().unwrap().is_empty());
}

#[test]
fn load_from_json_and_file_agree() {
    let spec = spec_from(TINY);
    assert_eq!(unsafe { ca_spec_dim(spec) }, 1);
    unsafe { ca_spec_free(spec) };

    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(TINY.as_bytes()).unwrap();
    let path = CString::new(f.path().to_str().unwrap()).unwrap();
    let mut spec = ptr::null_mut();
    let status = unsafe { ca_spec_load(path.as_ptr(), &mut spec) };
    assert_eq!(status, CaStatus::Ok);
    assert_eq!(unsafe { ca_spec_dim(spec) }, 1);
    unsafe { ca_spec_free(spec) };
}

#[test]
fn parse_error_sets_message() {
    let bad = CString::new("{not json").unwrap();
    let mut spec = ptr::null_mut();
    let status = unsafe { ca_spec_from_json(bad.as_ptr(), &mut spec) };
    assert_eq!(status, CaStatus::ParseError);
    let msg = ca_last_error_message();
    assert!(!msg.is_null());
    assert!(!unsafe { CStr::from_ptr(msg) }.to_str().unwrap().is_empty());
}

#[test]
fn null_arguments_are_rejected() {
    let mut spec = ptr::null_mut();
    assert_eq!(
        unsafe { ca_spec_from_json(ptr::null(), &mut spec) },
        CaStatus::InvalidArgument
    );
    let c = CString::new(TINY).unwrap();
    assert_eq!(
        unsafe { ca_spec_from_json(c.as_ptr(), ptr::null_mut()) },
        CaStatus::InvalidArgument
    );
    assert_eq!(unsafe { ca_spec_dim(ptr::null()) }, 0);
    assert!(unsafe { ca_weights_lambda(ptr::null()) }.is_nan());
    unsafe {
        ca_spec_free(ptr::null_mut());
        ca_weights_free(ptr::null_mut());
    }
}

#[test]
fn generate_is_deterministic() {
    let mut a = ptr::null_mut();
    let mut b = ptr::null_mut();
    unsafe {
        assert_eq!(ca_spec_generate(7, 3, 2, &mut a), CaStatus::Ok);
        assert_eq!(ca_spec_generate(7, 3, 2, &mut b), CaStatus::Ok);
        assert_eq!(ca_spec_dim(a), 3);
        assert_eq!(ca_spec_dim(b), 3);
        ca_spec_free(a);
        ca_spec_free(b);
    }
    let mut bad = ptr::null_mut();
    assert_eq!(
        unsafe { ca_spec_generate(7, 0, 2, &mut bad) },
        CaStatus::InvalidArgument
    );
}

#[test]
fn solve_returns_finite_weights() {
    let spec = spec_from(TINY);
    let mut w = ptr::null_mut();
    let status = unsafe { ca_solve(spec, 0.1, 1e-7, &mut w) };
    assert_eq!(status, CaStatus::Ok);
    unsafe {
        assert_eq!(ca_weights_len(w), 1);
        let mut w0 = f64::NAN;
        assert_eq!(ca_weights_get(w, 0, &mut w0), CaStatus::Ok);
        assert!(w0.is_finite());
        assert_eq!(ca_weights_get(w, 1, &mut w0), CaStatus::InvalidArgument);
        assert!(ca_weights_lambda(w) >= 0.0);
        assert!(ca_weights_objective(w).is_finite());
        assert!((0.0..=1.0).contains(&ca_weights_delta_star(w)));
        assert!(ca_weights_zeta1(w) >= ca_weights_zeta0(w) - 1e-9);
        ca_weights_free(w);
        ca_spec_free(spec);
    }
}

#[test]
fn solve_rejects_bad_capacity() {
    let spec = spec_from(TINY);
    let mut w = ptr::null_mut();
    assert_eq!(
        unsafe { ca_solve(spec, 1.5, 1e-7, &mut w) },
        CaStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { ca_solve(spec, 0.1, 0.0, &mut w) },
        CaStatus::InvalidArgument
    );
    unsafe { ca_spec_free(spec) };
}

#[test]
fn compare_identical_policies_is_a_tie() {
    let spec = spec_from(TINY);
    let mut out = CaComparison {
        mean_a: f64::NAN,
        mean_b: f64::NAN,
        mean_diff: f64::NAN,
        t_statistic: f64::NAN,
        p_value: f64::NAN,
        annual_gain_per_1000: f64::NAN,
    };
    let status = unsafe {
        ca_compare(
            spec,
            50,
            5,
            4,
            8,
            11,
            CaPolicy::Myopic,
            CaPolicy::Myopic,
            &mut out,
        )
    };
    assert_eq!(status, CaStatus::Ok);
    assert_eq!(out.mean_a, out.mean_b);
    assert_eq!(out.mean_diff, 0.0);
    assert_eq!(out.annual_gain_per_1000, 0.0);
    unsafe { ca_spec_free(spec) };
}

#[test]
fn generated_header_declares_the_surface() {
    let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("include")
        .join("carealloc.h");
    let text = std::fs::read_to_string(header).expect("header generated at build time");
    for symbol in [
        "ca_spec_load",
        "ca_spec_from_json",
        "ca_spec_generate",
        "ca_spec_free",
        "ca_solve",
        "ca_weights_get",
        "ca_weights_free",
        "ca_compare",
        "ca_last_error_message",
        "ca_version",
        "CA_STATUS_OK",
    ] {
        assert!(text.contains(symbol), "missing {symbol} in header");
    }
}
