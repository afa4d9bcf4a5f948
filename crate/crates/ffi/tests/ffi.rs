use std::ffi::{CStr, CString};
use std::ptr;

use dualpure_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = dp_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

fn bell() -> *mut DpCircuit {
    let mut c = ptr::null_mut();
    let text = cstr("QUBITS 2\nH 0\nCX 0 1\n");
    assert_eq!(unsafe { dp_circuit_parse(text.as_ptr(), &mut c) }, DpStatus::Ok);
    c
}

#[test]
fn bell_pair_estimates() {
    let c = bell();
    assert_eq!(unsafe { dp_circuit_num_qubits(c) }, 2);
    let mut out = DpEstimate {
        value: f64::NAN,
        p_tilde: 0.0,
        denominator: 0.0,
        cond_y_abs: 0.0,
        purity: 0.0,
    };
    for (obs, want) in [("ZI", 0.0), ("ZZ", 1.0), ("XX", 1.0), ("II", 1.0)] {
        let o = cstr(obs);
        let st = unsafe { dp_estimate(c, o.as_ptr(), ptr::null(), DpMethod::Dsp, ptr::null(), &mut out) };
        assert_eq!(st, DpStatus::Ok);
        assert!((out.value - want).abs() < 1e-12, "{obs}: {}", out.value);
    }
    let o = cstr("ZZ");
    unsafe { dp_estimate(c, o.as_ptr(), ptr::null(), DpMethod::Raw, ptr::null(), &mut out) };
    assert!(out.p_tilde.is_nan());
    unsafe { dp_circuit_free(c) };
}

#[test]
fn noisy_estimate_with_sampled_model() {
    let c = bell();
    let mut nm = ptr::null_mut();
    assert_eq!(unsafe { dp_noise_sample_appe(3, 0.05, 11, &mut nm) }, DpStatus::Ok);
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { dp_noise_to_json(nm, &mut json) }, DpStatus::Ok);
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    assert!(text.contains("\"appe\""));
    let mut again = ptr::null_mut();
    assert_eq!(unsafe { dp_noise_from_json(json, &mut again) }, DpStatus::Ok);
    unsafe { dp_string_free(json) };

    let o = cstr("ZZ");
    let mut opts = dp_estimate_options_default();
    opts.topology = DpTopology::Linear;
    let mut a = DpEstimate {
        value: 0.0,
        p_tilde: 0.0,
        denominator: 0.0,
        cond_y_abs: 0.0,
        purity: 0.0,
    };
    let mut b = a;
    unsafe {
        assert_eq!(
            dp_estimate(c, o.as_ptr(), nm, DpMethod::Tp, &opts, &mut a),
            DpStatus::Ok
        );
        assert_eq!(
            dp_estimate(c, o.as_ptr(), again, DpMethod::Tp, &opts, &mut b),
            DpStatus::Ok
        );
    }
    assert_eq!(a, b);
    assert!(a.value < 1.0 && a.value > 0.5);
    assert!(a.p_tilde > 0.5 && a.p_tilde <= 1.0);
    unsafe {
        dp_noise_free(nm);
        dp_noise_free(again);
        dp_circuit_free(c);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let mut c = ptr::null_mut();
    let bad = cstr("QUBITS 2\nFOO 1\n");
    assert_eq!(
        unsafe { dp_circuit_parse(bad.as_ptr(), &mut c) },
        DpStatus::InvalidInput
    );
    assert!(last_error().starts_with("parse-error"));
    assert!(c.is_null());

    assert_eq!(unsafe { dp_circuit_parse(ptr::null(), &mut c) }, DpStatus::NullPointer);
    assert!(last_error().contains("text"));

    let mut nm = ptr::null_mut();
    assert_eq!(
        unsafe { dp_noise_sample_appe(3, 2.0, 0, &mut nm) },
        DpStatus::InvalidInput
    );
    let junk = cstr("{not json");
    assert_eq!(
        unsafe { dp_noise_from_json(junk.as_ptr(), &mut nm) },
        DpStatus::InvalidInput
    );

    let c = bell();
    let o = cstr("ZZZ");
    let mut out = DpEstimate {
        value: 0.0,
        p_tilde: 0.0,
        denominator: 0.0,
        cond_y_abs: 0.0,
        purity: 0.0,
    };
    let st = unsafe { dp_estimate(c, o.as_ptr(), ptr::null(), DpMethod::Dsp, ptr::null(), &mut out) };
    assert_eq!(st, DpStatus::InvalidInput);
    let st = unsafe {
        dp_estimate(
            ptr::null(),
            o.as_ptr(),
            ptr::null(),
            DpMethod::Dsp,
            ptr::null(),
            &mut out,
        )
    };
    assert_eq!(st, DpStatus::NullPointer);
    unsafe { dp_circuit_free(c) };

    unsafe {
        dp_circuit_free(ptr::null_mut());
        dp_noise_free(ptr::null_mut());
        dp_string_free(ptr::null_mut());
    }
}

#[test]
fn compile_basis_returns_text_and_pivot() {
    let p = cstr("ZIZ");
    let mut text = ptr::null_mut();
    let mut pivot = usize::MAX;
    assert_eq!(
        unsafe { dp_compile_basis(p.as_ptr(), DpTopology::Linear, &mut text, &mut pivot) },
        DpStatus::Ok
    );
    let s = unsafe { CStr::from_ptr(text) }.to_str().unwrap().to_owned();
    unsafe { dp_string_free(text) };
    assert_eq!(s, "QUBITS 3\nCX 1 2\nCX 2 1\nCX 1 0\n");
    assert_eq!(pivot, 0);

    let p = cstr("III");
    assert_eq!(
        unsafe { dp_compile_basis(p.as_ptr(), DpTopology::AllToAll, &mut text, &mut pivot) },
        DpStatus::InvalidInput
    );
}

#[test]
fn version_and_header() {
    let v = unsafe { CStr::from_ptr(dp_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/dualpure.h")).unwrap();
    for f in [
        "dp_circuit_parse",
        "dp_estimate",
        "dp_last_error_message",
        "DP_STATUS_NUMERIC = 3",
        "typedef struct DpCircuit DpCircuit",
    ] {
        assert!(header.contains(f), "{f} missing from header");
    }
}
