use std::ffi::{CStr, CString};
use std::ptr;

use qma_ffi::*;

fn last_error() -> String {
    let p = qma_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn ket(names: &[&str], dims: &[usize], re: &[f64]) -> *mut QmaKet {
    let owned: Vec<CString> = names.iter().map(|n| CString::new(*n).unwrap()).collect();
    let ptrs: Vec<_> = owned.iter().map(|c| c.as_ptr()).collect();
    let mut out = ptr::null_mut();
    let st = unsafe { qma_ket_new(ptrs.as_ptr(), dims.as_ptr(), dims.len(), re.as_ptr(), ptr::null(), re.len(), &mut out) };
    assert_eq!(st, QmaStatus::Ok, "{}", if st == QmaStatus::Ok { String::new() } else { last_error() });
    out
}

#[test]
fn ket_roundtrip() {
    let h = 0.5f64.sqrt();
    let a = ket(&["s"], &[2], &[h, h]);
    let b = ket(&["m"], &[2], &[1.0, 0.0]);
    let mut t = ptr::null_mut();
    unsafe {
        assert_eq!(qma_ket_tensor(a, b, &mut t), QmaStatus::Ok);
        assert_eq!(qma_ket_dim(t), 4);
        assert!((qma_ket_norm(t) - 1.0).abs() < 1e-12);
        let (mut re, mut im) = (0.0, 0.0);
        assert_eq!(qma_ket_amplitude(t, 2, &mut re, &mut im), QmaStatus::Ok);
        assert!((re - h).abs() < 1e-12 && im == 0.0);
        assert_eq!(qma_ket_amplitude(t, 4, &mut re, &mut im), QmaStatus::OutOfRange);
        assert_eq!(qma_ket_inner(a, a, &mut re, &mut im), QmaStatus::Ok);
        assert!((re - 1.0).abs() < 1e-12);
        qma_ket_free(t);
        qma_ket_free(a);
        qma_ket_free(b);
    }
}

#[test]
fn shape_mismatch_reports_composition() {
    let names = [CString::new("s").unwrap()];
    let ptrs = [names[0].as_ptr()];
    let re = [1.0, 0.0, 0.0];
    let mut out = ptr::null_mut();
    let st = unsafe { qma_ket_new(ptrs.as_ptr(), [2usize].as_ptr(), 1, re.as_ptr(), ptr::null(), 3, &mut out) };
    assert_ne!(st, QmaStatus::Ok);
    assert!(out.is_null());
    assert!(!last_error().is_empty());

    let a = ket(&["s"], &[2], &[1.0, 0.0]);
    let b = ket(&["s"], &[2], &[0.0, 1.0]);
    let mut t = ptr::null_mut();
    unsafe {
        assert_eq!(qma_ket_tensor(a, b, &mut t), QmaStatus::Composition);
        qma_ket_free(a);
        qma_ket_free(b);
    }
}

#[test]
fn branches_of_an_entangled_pair() {
    // (|00> + 2|11>)/sqrt5 over s ⊗ m
    let n = 5f64.sqrt();
    let k = ket(&["s", "m"], &[2, 2], &[1.0 / n, 0.0, 0.0, 2.0 / n]);
    let m = CString::new("m").unwrap();
    let mut set = ptr::null_mut();
    unsafe {
        assert_eq!(qma_decompose(k, [m.as_ptr()].as_ptr(), 1, &mut set), QmaStatus::Ok);
        assert_eq!(qma_branchset_len(set), 2);
        assert_eq!(qma_branchset_label_len(set), 1);
        let mut w = [0.0; 2];
        let mut labels = [0usize; 2];
        for i in 0..2 {
            assert_eq!(qma_branchset_weight(set, i, &mut w[i]), QmaStatus::Ok);
            assert_eq!(qma_branchset_label(set, i, &mut labels[i], 1), QmaStatus::Ok);
        }
        let mut pairs: Vec<_> = labels.iter().copied().zip(w).collect();
        pairs.sort_by_key(|p| p.0);
        assert_eq!(pairs[0].0, 0);
        assert!((pairs[0].1 - 0.2).abs() < 1e-12);
        assert!((pairs[1].1 - 0.8).abs() < 1e-12);
        let mut none = 0usize;
        assert_eq!(qma_branchset_label(set, 0, &mut none, 0), QmaStatus::OutOfRange);
        qma_branchset_free(set);
        qma_ket_free(k);
    }
}

#[test]
fn experiment_report_json() {
    let name = CString::new("run_polarization").unwrap();
    let params = CString::new(r#"{"theta_deg": 60, "n_photons": 2000}"#).unwrap();
    let mut report = ptr::null_mut();
    unsafe {
        assert_eq!(qma_run_experiment(name.as_ptr(), params.as_ptr(), 7, 0.0, &mut report), QmaStatus::Ok);
        assert!(qma_report_all_pass(report));
        let mut s = ptr::null_mut();
        assert_eq!(qma_report_json(report, &mut s), QmaStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(CStr::from_ptr(s).to_str().unwrap()).unwrap();
        assert_eq!(v["name"], "run_polarization");
        qma_string_free(s);
        qma_report_free(report);
    }
}

#[test]
fn unknown_experiment_is_a_config_error() {
    let name = CString::new("run_nothing").unwrap();
    let mut report = ptr::null_mut();
    let st = unsafe { qma_run_experiment(name.as_ptr(), ptr::null(), 0, 0.0, &mut report) };
    assert_eq!(st, QmaStatus::Config);
    assert!(last_error().starts_with("name"));
    let bad = CString::new("[1,2]").unwrap();
    let pol = CString::new("run_polarization").unwrap();
    let st = unsafe { qma_run_experiment(pol.as_ptr(), bad.as_ptr(), 0, 0.0, &mut report) };
    assert_eq!(st, QmaStatus::Config);
}

#[test]
fn null_arguments() {
    unsafe {
        assert_eq!(qma_ket_dim(ptr::null()), 0);
        assert!(qma_ket_norm(ptr::null()).is_nan());
        assert!(!qma_report_all_pass(ptr::null()));
        qma_ket_free(ptr::null_mut());
        qma_string_free(ptr::null_mut());
        let mut t = ptr::null_mut();
        assert_eq!(qma_ket_tensor(ptr::null(), ptr::null(), &mut t), QmaStatus::NullPointer);
        assert_eq!(qma_run_experiment(ptr::null(), ptr::null(), 0, 0.0, ptr::null_mut()), QmaStatus::NullPointer);
    }
}

#[test]
fn listing_and_estimate() {
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(qma_list_experiments_json(&mut s), QmaStatus::Ok);
        let names: Vec<String> = serde_json::from_str(CStr::from_ptr(s).to_str().unwrap()).unwrap();
        qma_string_free(s);
        assert_eq!(names.len(), 11);
        assert!(names.iter().any(|n| n == "run_quantum_eraser"));
    }
    let est = qma_spread_estimate(3.0, 2.0, 1.0, 4.0);
    assert!((est - 5.0).abs() < 1e-12);
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/qma.h")).unwrap();
    for sym in ["qma_ket_new", "qma_decompose", "qma_run_experiment", "qma_string_free", "typedef struct QmaKet QmaKet"] {
        assert!(h.contains(sym), "{sym} missing from header");
    }
}
