//! C interface to the `dualpure` simulator.
//!
//! Circuits and noise models are opaque handles owned by the caller and
//! released with their `_free` function. Strings returned through out
//! parameters are released with `dp_string_free`. Every fallible call
//! returns a `DpStatus`; after a failure `dp_last_error_message` describes
//! it until the next failing call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, UnwindSafe};
use std::ptr;

use dualpure::basis::{compile, Topology};
use dualpure::harness::{estimate_observable, EstimateConfig, Estimator};
use dualpure::noise::{sample_model_appc, sample_model_appe};
use dualpure::{Circuit, Error, NoiseModel, PauliString};

/// Call outcome. The numeric values match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DpStatus {
    Ok = 0,
    /// Malformed text, bad rates or mismatched sizes.
    InvalidInput = 2,
    /// Post-selection starved, denominator collapse and similar.
    Numeric = 3,
    NullPointer = 4,
    /// A Rust panic was caught at the boundary.
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DpMethod {
    Ef = 0,
    Raw = 1,
    DspProjective = 2,
    Dsp = 3,
    Tp = 4,
    Analytic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DpTopology {
    AllToAll = 0,
    Linear = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpEstimateOptions {
    pub topology: DpTopology,
    /// 0 selects exact expectations.
    pub shots: u64,
    pub seed: u64,
    pub noisy_intermediate: bool,
}

/// Estimate and diagnostics; diagnostics a method does not produce are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpEstimate {
    pub value: f64,
    pub p_tilde: f64,
    pub denominator: f64,
    pub cond_y_abs: f64,
    pub purity: f64,
}

pub struct DpCircuit(Circuit);

pub struct DpNoiseModel(NoiseModel);

impl From<DpMethod> for Estimator {
    fn from(m: DpMethod) -> Self {
        match m {
            DpMethod::Ef => Estimator::Ef,
            DpMethod::Raw => Estimator::Raw,
            DpMethod::DspProjective => Estimator::DspProjective,
            DpMethod::Dsp => Estimator::Dsp,
            DpMethod::Tp => Estimator::Tp,
            DpMethod::Analytic => Estimator::Analytic,
        }
    }
}

impl From<DpTopology> for Topology {
    fn from(t: DpTopology) -> Self {
        match t {
            DpTopology::AllToAll => Topology::AllToAll,
            DpTopology::Linear => Topology::Linear,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

enum Failure {
    Core(Error),
    Null(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure> + UnwindSafe) -> DpStatus {
    match catch_unwind(f) {
        Ok(Ok(())) => DpStatus::Ok,
        Ok(Err(Failure::Core(e))) => {
            set_last_error(format!("{}: {e}", e.name()));
            if e.is_input_error() {
                DpStatus::InvalidInput
            } else {
                DpStatus::Numeric
            }
        }
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            DpStatus::NullPointer
        }
        Err(_) => {
            set_last_error("panic inside dualpure".into());
            DpStatus::Panic
        }
    }
}

/// # Safety
/// `p` is null or a NUL-terminated string valid for the call.
unsafe fn read_str<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Core(Error::InvalidInput(format!("{what} is not UTF-8"))))
}

fn check_out<T>(p: *mut T, what: &'static str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure::Null(what))
    } else {
        Ok(())
    }
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).expect("generated text has no NUL").into_raw()
}

/// Message of the last failure on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses circuit-file text into `*out`.
///
/// # Safety
/// `text` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn dp_circuit_parse(text: *const c_char, out: *mut *mut DpCircuit) -> DpStatus {
    guard(|| {
        check_out(out, "out")?;
        let c: Circuit = read_str(text, "text")?.parse()?;
        *out = Box::into_raw(Box::new(DpCircuit(c)));
        Ok(())
    })
}

/// Register size, 0 for NULL.
///
/// # Safety
/// `c` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dp_circuit_num_qubits(c: *const DpCircuit) -> usize {
    c.as_ref().map_or(0, |c| c.0.n_qubits())
}

/// # Safety
/// `c` is NULL or a handle from `dp_circuit_parse` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dp_circuit_free(c: *mut DpCircuit) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Parses and validates a noise-model JSON document.
///
/// # Safety
/// `json` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn dp_noise_from_json(json: *const c_char, out: *mut *mut DpNoiseModel) -> DpStatus {
    guard(|| {
        check_out(out, "out")?;
        let nm = NoiseModel::from_json(read_str(json, "json")?)?;
        *out = Box::into_raw(Box::new(DpNoiseModel(nm)));
        Ok(())
    })
}

/// Pauli-channel model on `n` qubits with total rate `eps_t` over `n_gates`.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn dp_noise_sample_appc(
    n: usize,
    n_gates: usize,
    eps_t: f64,
    seed: u64,
    out: *mut *mut DpNoiseModel,
) -> DpStatus {
    guard(|| {
        check_out(out, "out")?;
        let nm = sample_model_appc(n, n_gates, eps_t, seed)?;
        *out = Box::into_raw(Box::new(DpNoiseModel(nm)));
        Ok(())
    })
}

/// Depolarizing, dephasing and damping model on `n` qubits, scale `eps`.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn dp_noise_sample_appe(n: usize, eps: f64, seed: u64, out: *mut *mut DpNoiseModel) -> DpStatus {
    guard(|| {
        check_out(out, "out")?;
        let nm = sample_model_appe(n, eps, seed)?;
        *out = Box::into_raw(Box::new(DpNoiseModel(nm)));
        Ok(())
    })
}

/// Serializes a model; free the result with `dp_string_free`.
///
/// # Safety
/// `nm` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn dp_noise_to_json(nm: *const DpNoiseModel, out: *mut *mut c_char) -> DpStatus {
    guard(|| {
        check_out(out, "out")?;
        let nm = nm.as_ref().ok_or(Failure::Null("nm"))?;
        *out = into_c_string(nm.0.to_json());
        Ok(())
    })
}

/// # Safety
/// `nm` is NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dp_noise_free(nm: *mut DpNoiseModel) {
    if !nm.is_null() {
        drop(Box::from_raw(nm));
    }
}

/// # Safety
/// `s` is NULL or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Default options: all-to-all basis, exact mode, seed 0, noisy intermediate.
#[no_mangle]
pub extern "C" fn dp_estimate_options_default() -> DpEstimateOptions {
    DpEstimateOptions {
        topology: DpTopology::AllToAll,
        shots: 0,
        seed: 0,
        noisy_intermediate: true,
    }
}

/// `<observable>` after `circuit` under `nm` by `method`. A NULL `nm` is
/// noiseless; NULL `opts` uses the defaults.
///
/// # Safety
/// Handles are live, `observable` is NUL-terminated, `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn dp_estimate(
    circuit: *const DpCircuit,
    observable: *const c_char,
    nm: *const DpNoiseModel,
    method: DpMethod,
    opts: *const DpEstimateOptions,
    out: *mut DpEstimate,
) -> DpStatus {
    guard(|| {
        check_out(out, "out")?;
        let c = &circuit.as_ref().ok_or(Failure::Null("circuit"))?.0;
        let sigma: PauliString = read_str(observable, "observable")?.parse()?;
        let noiseless;
        let nm = match nm.as_ref() {
            Some(m) => &m.0,
            None => {
                noiseless = NoiseModel::noiseless(c.n_qubits() + 1);
                &noiseless
            }
        };
        let o = opts.as_ref().copied().unwrap_or_else(|| dp_estimate_options_default());
        let cfg = EstimateConfig {
            topology: o.topology.into(),
            shots: o.shots,
            seed: o.seed,
            noisy_intermediate: o.noisy_intermediate,
            ..EstimateConfig::default()
        };
        let e = estimate_observable(c, &sigma, nm, method.into(), &cfg)?;
        let d = e.diagnostics;
        *out = DpEstimate {
            value: e.value,
            p_tilde: d.p_tilde.unwrap_or(f64::NAN),
            denominator: d.denominator.unwrap_or(f64::NAN),
            cond_y_abs: d.cond_y_abs.unwrap_or(f64::NAN),
            purity: d.purity.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// Measurement-basis circuit for `pauli` as circuit-file text in
/// `*out_text` (free with `dp_string_free`) and its pivot qubit.
///
/// # Safety
/// `pauli` is NUL-terminated; the out pointers are writable.
#[no_mangle]
pub unsafe extern "C" fn dp_compile_basis(
    pauli: *const c_char,
    topology: DpTopology,
    out_text: *mut *mut c_char,
    out_pivot: *mut usize,
) -> DpStatus {
    guard(|| {
        check_out(out_text, "out_text")?;
        check_out(out_pivot, "out_pivot")?;
        let sigma: PauliString = read_str(pauli, "pauli")?.parse()?;
        let b = compile(&sigma, topology.into())?;
        *out_text = into_c_string(b.circuit.to_string());
        *out_pivot = b.pivot;
        Ok(())
    })
}
