use std::ffi::{CStr, CString};
use std::ptr;

use smoothfix_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(sf_last_error()) }.to_string_lossy().into_owned()
}

fn polya(b: u32) -> *mut SfModel {
    let json = CString::new(format!(r#"{{"model": {{"type": "polya", "b": {b}}}}}"#)).unwrap();
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { sf_model_from_json(json.as_ptr(), &mut model) }, SfStatus::Ok);
    assert!(!model.is_null());
    model
}

#[test]
fn alpha_through_the_c_abi() {
    let model = polya(8);
    let (mut alpha, mut found) = (0.0, 0);
    let status = unsafe { sf_find_alpha(model, 10.0, 1000, 1, &mut alpha, &mut found) };
    assert_eq!(status, SfStatus::Ok);
    assert_eq!(found, 1);
    assert!((alpha - std::f64::consts::SQRT_2).abs() < 1e-9);

    let mut m = 0.0;
    assert_eq!(unsafe { sf_model_moment(model, 0.0, 10, 1, &mut m, ptr::null_mut()) }, SfStatus::Ok);
    assert_eq!(m, 2.0);
    unsafe { sf_model_free(model) };
}

#[test]
fn pool_round_trip_and_ecf() {
    let model = polya(8);
    let mut pool = ptr::null_mut();
    let init = SfComplex { re: 1.0, im: 0.0 };
    assert_eq!(unsafe { sf_popdyn_run(model, 500, 3, 42, init, &mut pool) }, SfStatus::Ok);
    let n = unsafe { sf_pool_len(pool) };
    assert_eq!(n, 500);

    let (mut re, mut im) = (vec![0.0; n], vec![0.0; n]);
    assert_eq!(unsafe { sf_pool_copy(pool, re.as_mut_ptr(), im.as_mut_ptr(), n) }, SfStatus::Ok);
    assert!(re.iter().chain(&im).all(|x| x.is_finite()));

    let mut copy = ptr::null_mut();
    assert_eq!(unsafe { sf_pool_from_samples(re.as_ptr(), im.as_ptr(), n, &mut copy) }, SfStatus::Ok);

    let xi = SfComplex { re: 0.7, im: -1.3 };
    let (mut a, mut b) = (SfComplex { re: 0.0, im: 0.0 }, SfComplex { re: 0.0, im: 0.0 });
    let mut se = 0.0;
    assert_eq!(unsafe { sf_ecf(pool, xi, &mut a, &mut se) }, SfStatus::Ok);
    assert_eq!(unsafe { sf_ecf(copy, xi, &mut b, ptr::null_mut()) }, SfStatus::Ok);
    assert_eq!(a, b);
    assert!(se > 0.0 && (a.re * a.re + a.im * a.im) <= 1.0);

    // Same seed, same pool.
    let mut again = ptr::null_mut();
    assert_eq!(unsafe { sf_popdyn_run(model, 500, 3, 42, init, &mut again) }, SfStatus::Ok);
    let (mut re2, mut im2) = (vec![0.0; n], vec![0.0; n]);
    assert_eq!(unsafe { sf_pool_copy(again, re2.as_mut_ptr(), im2.as_mut_ptr(), n) }, SfStatus::Ok);
    assert_eq!((re, im), (re2, im2));

    unsafe {
        sf_pool_free(pool);
        sf_pool_free(copy);
        sf_pool_free(again);
        sf_model_free(model);
    }
}

#[test]
fn errors_are_reported_with_codes_and_messages() {
    let mut model = ptr::null_mut();
    let bad = CString::new(r#"{"model": {"type": "polya", "b": 2}}"#).unwrap();
    assert_eq!(unsafe { sf_model_from_json(bad.as_ptr(), &mut model) }, SfStatus::InvalidArgument);
    assert!(model.is_null());
    assert!(last_error().contains('b'), "{}", last_error());

    assert_eq!(unsafe { sf_model_from_json(ptr::null(), &mut model) }, SfStatus::NullPointer);
    assert!(last_error().contains("null"));

    let model = polya(8);
    let mut alpha = 0.0;
    assert_eq!(unsafe { sf_find_alpha(model, 10.0, 10, 0, &mut alpha, ptr::null_mut()) }, SfStatus::NullPointer);

    let (mut re, mut im) = ([0.0; 2], [0.0; 2]);
    let mut pool = ptr::null_mut();
    let init = SfComplex { re: 1.0, im: 0.0 };
    assert_eq!(unsafe { sf_popdyn_run(model, 10, 0, 1, init, &mut pool) }, SfStatus::InvalidArgument);
    assert!(pool.is_null());
    assert_eq!(unsafe { sf_popdyn_run(model, 10, 1, 1, init, &mut pool) }, SfStatus::Ok);
    assert_eq!(unsafe { sf_pool_copy(pool, re.as_mut_ptr(), im.as_mut_ptr(), 2) }, SfStatus::InvalidArgument);
    assert_eq!(unsafe { sf_pool_len(ptr::null()) }, 0);

    // A successful call clears the message.
    let mut m = 0.0;
    assert_eq!(unsafe { sf_model_moment(model, 1.0, 10, 1, &mut m, ptr::null_mut()) }, SfStatus::Ok);
    assert_eq!(last_error(), "");

    unsafe {
        sf_pool_free(pool);
        sf_model_free(model);
        sf_model_free(ptr::null_mut());
        sf_string_free(ptr::null_mut());
    }
}

#[test]
fn analyze_returns_json() {
    let model = polya(8);
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { sf_analyze_json(model, 2000, 3, &mut json) }, SfStatus::Ok);
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!((value["alpha"].as_f64().unwrap() - std::f64::consts::SQRT_2).abs() < 1e-9);
    unsafe {
        sf_string_free(json);
        sf_model_free(model);
    }
}

#[test]
fn header_is_valid_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/smoothfix.h");
    let text = std::fs::read_to_string(header).unwrap();
    for name in ["sf_model_from_json", "sf_popdyn_run", "sf_pool_copy", "sf_ecf", "sf_last_error", "SF_STATUS_PANIC"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(status) =
        std::process::Command::new("cc").args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", header]).status()
    else {
        eprintln!("no C compiler; skipping syntax check");
        return;
    };
    assert!(status.success());
}
