use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::ptr;

use harris_kinetics_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(hk_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn doeblin_handle_round_trip() {
    let mut b: *mut HkRateBound = ptr::null_mut();
    assert_eq!(unsafe { hk_doeblin_rate(0.5, 1.0, &mut b) }, HkStatus::Ok);
    let (mut c, mut l, mut v) = (0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(hk_rate_bound_c(b, &mut c), HkStatus::Ok);
        assert_eq!(hk_rate_bound_lambda(b, &mut l), HkStatus::Ok);
        assert_eq!(hk_rate_bound_eval(b, 2.0, &mut v), HkStatus::Ok);
        hk_rate_bound_free(b);
    }
    assert_eq!(c, 2.0);
    assert!((l - 2f64.ln()).abs() < 1e-15);
    assert!((v - 0.5).abs() < 1e-15);
}

#[test]
fn invalid_alpha_sets_code_and_message() {
    let mut b: *mut HkRateBound = ptr::null_mut();
    assert_eq!(unsafe { hk_doeblin_rate(1.5, 1.0, &mut b) }, HkStatus::InvalidInput);
    assert!(b.is_null());
    assert!(last_error().contains("alpha"), "{}", last_error());
}

#[test]
fn null_out_pointer_is_reported() {
    assert_eq!(unsafe { hk_doeblin_rate(0.5, 1.0, ptr::null_mut()) }, HkStatus::NullPointer);
}

#[test]
fn subgeometric_has_no_lambda() {
    let mut b: *mut HkRateBound = ptr::null_mut();
    let mut l = 0.0;
    unsafe {
        assert_eq!(hk_subgeometric_power(0.5, 1.0, 1.0, &mut b), HkStatus::Ok);
        assert_eq!(hk_rate_bound_lambda(b, &mut l), HkStatus::Unsupported);
        hk_rate_bound_free(b);
    }
}

#[test]
fn model_preset_json_round_trip() {
    let name = CString::new("knudsen_disk").unwrap();
    let mut m: *mut HkModel = ptr::null_mut();
    let mut d = 0usize;
    let mut s: *mut std::ffi::c_char = ptr::null_mut();
    unsafe {
        assert_eq!(hk_model_preset(name.as_ptr(), &mut m), HkStatus::Ok);
        assert_eq!(hk_model_dim(m, &mut d), HkStatus::Ok);
        assert_eq!(hk_model_to_json(m, &mut s), HkStatus::Ok);
        let mut m2: *mut HkModel = ptr::null_mut();
        assert_eq!(hk_model_from_json(s, &mut m2), HkStatus::Ok);
        let mut d2 = 0usize;
        assert_eq!(hk_model_dim(m2, &mut d2), HkStatus::Ok);
        assert_eq!(d, d2);
        hk_string_free(s);
        hk_model_free(m);
        hk_model_free(m2);
    }
    assert_eq!(d, 2);
    let bad = CString::new("no_such_model").unwrap();
    assert_eq!(unsafe { hk_model_preset(bad.as_ptr(), &mut m) }, HkStatus::InvalidInput);
    let junk = CString::new("{not json").unwrap();
    assert_eq!(unsafe { hk_model_from_json(junk.as_ptr(), &mut m) }, HkStatus::Json);
}

#[test]
fn steady_profiles_copy_out() {
    let mut st: *mut HkSteadyState = ptr::null_mut();
    let mut n = 0usize;
    unsafe {
        assert_eq!(hk_steady_solve(1.0, 4.0, 0.1, 32, 64, 1e-11, 100_000, &mut st), HkStatus::Ok);
        assert_eq!(hk_steady_len(st, &mut n), HkStatus::Ok);
    }
    let mut u = vec![1.0; n];
    let mut t = vec![0.0; n];
    unsafe {
        assert_eq!(hk_steady_profile(st, HkMoment::Velocity, u.as_mut_ptr(), n), HkStatus::Ok);
        assert_eq!(hk_steady_profile(st, HkMoment::Temperature, t.as_mut_ptr(), n), HkStatus::Ok);
        assert_eq!(hk_steady_profile(st, HkMoment::Density, u.as_mut_ptr(), n + 1), HkStatus::InvalidInput);
        hk_steady_free(st);
    }
    assert!(u.iter().all(|v| v.abs() < 1e-8));
    assert!(t.iter().all(|v| *v > 1.0 && *v < 4.0));
}

#[test]
fn steady_reports_non_convergence() {
    let mut st: *mut HkSteadyState = ptr::null_mut();
    assert_eq!(
        unsafe { hk_steady_solve(1.0, 4.0, 0.1, 32, 64, 1e-14, 3, &mut st) },
        HkStatus::NotConverged
    );
    assert!(st.is_null());
}

#[test]
fn run_json_rates_and_usage_error() {
    let cmd = CString::new("rates").unwrap();
    let cfg = CString::new(r#"{"rates": {"kind": "doeblin", "alpha": 0.5, "tau": 1.0}}"#).unwrap();
    let mut out: *mut std::ffi::c_char = ptr::null_mut();
    assert_eq!(unsafe { hk_run_json(cmd.as_ptr(), cfg.as_ptr(), &mut out) }, HkStatus::Ok);
    let doc: serde_json::Value = serde_json::from_str(unsafe { CStr::from_ptr(out) }.to_str().unwrap()).unwrap();
    unsafe { hk_string_free(out) };
    assert_eq!(doc["status"], "PASS");
    assert_eq!(doc["summary"]["C"], 2.0);

    let missing = CString::new(r#"{"rates": {"kind": "doeblin", "alpha": 0.5}}"#).unwrap();
    assert_eq!(unsafe { hk_run_json(cmd.as_ptr(), missing.as_ptr(), &mut out) }, HkStatus::Json);
    assert!(last_error().contains("tau"));
}

#[test]
fn version_is_static_string() {
    let v = unsafe { CStr::from_ptr(hk_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_api_and_compiles_as_c() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include/harris_kinetics.h");
    let text = std::fs::read_to_string(&header).expect("header generated by build script");
    for sym in ["hk_doeblin_rate", "hk_run_json", "hk_steady_profile", "HK_STATUS_NOT_CONVERGED", "typedef struct HkModel HkModel"] {
        assert!(text.contains(sym), "header lacks {sym}");
    }
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"harris_kinetics.h\"\nint main(void){ HkRateBound *b = 0; return hk_doeblin_rate(0.5, 1.0, &b) == HK_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let status = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(dir.join("include"))
        .arg(&src)
        .status();
    match status {
        Ok(s) => assert!(s.success(), "header does not compile as C99"),
        Err(e) => eprintln!("skipping C compile check: no C compiler ({e})"),
    }
}
