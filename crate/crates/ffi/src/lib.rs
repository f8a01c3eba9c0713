//! C ABI over `mplab`.
//!
//! Objects cross the boundary as opaque heap handles released by their `_free`
//! function. Every fallible call returns an [`MplabStatus`]; the message of the
//! last failure on the calling thread is available from
//! [`mplab_last_error_message`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use mplab::channels::{gadget_probabilities, Axis, ChannelSpec, Convention};
use mplab::decoder::{channel_distance, optimize_fe_svd, NoisyCode, SvdOptions};
use mplab::ising::{ising_lowest, Boundary};
use mplab::qcore::{Pauli, StateVector};
use mplab::renyi::{pair_string, Method, RenyiEvaluator};
use mplab::shadows::{
    estimate_renyi2_observables, sample_snapshots, translation_sum, BasisScheme, Engine, ShadowDataset,
};
use mplab::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MplabStatus {
    Ok = 0,
    InvalidArgument = 1,
    ResourceLimit = 2,
    Numeric = 3,
    InvalidState = 4,
    FitFailed = 5,
    Schema = 6,
    Format = 7,
    Io = 8,
    NullPointer = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MplabAxis {
    I = 0,
    X = 1,
    Y = 2,
    Z = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MplabConvention {
    /// Flip probability `p/2`.
    Half = 0,
    /// Flip probability `p`.
    Full = 1,
}

/// Opaque pure state.
pub struct MplabState(StateVector);

/// Opaque Rényi correlator evaluator for one noisy state.
pub struct MplabRenyi(RenyiEvaluator);

/// Opaque snapshot dataset.
pub struct MplabShadows(ShadowDataset);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> MplabStatus {
    match e {
        Error::Argument(_) => MplabStatus::InvalidArgument,
        Error::Resource(_) => MplabStatus::ResourceLimit,
        Error::Numeric(_) => MplabStatus::Numeric,
        Error::Validity(_) => MplabStatus::InvalidState,
        Error::Fit { .. } => MplabStatus::FitFailed,
        Error::Schema(_) => MplabStatus::Schema,
        Error::Format(_) => MplabStatus::Format,
        Error::Io(_) => MplabStatus::Io,
    }
}

fn guard(f: impl FnOnce() -> Result<(), MplabStatus>) -> MplabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MplabStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            MplabStatus::Panic
        }
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, MplabStatus>;
}

impl<T> OrStatus<T> for mplab::Result<T> {
    fn or_status(self) -> Result<T, MplabStatus> {
        self.map_err(|e| {
            set_error(e.to_string());
            status_of(&e)
        })
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), MplabStatus> {
    if p.is_null() {
        set_error(format!("{what} is null"));
        return Err(MplabStatus::NullPointer);
    }
    Ok(())
}

impl From<MplabAxis> for Axis {
    fn from(a: MplabAxis) -> Self {
        match a {
            MplabAxis::I => Axis::I,
            MplabAxis::X => Axis::X,
            MplabAxis::Y => Axis::Y,
            MplabAxis::Z => Axis::Z,
        }
    }
}

impl From<MplabAxis> for Pauli {
    fn from(a: MplabAxis) -> Self {
        Axis::from(a).pauli()
    }
}

impl From<MplabConvention> for Convention {
    fn from(c: MplabConvention) -> Self {
        match c {
            MplabConvention::Half => Convention::Half,
            MplabConvention::Full => Convention::Full,
        }
    }
}

fn channel(axis: MplabAxis, p: f64, convention: MplabConvention) -> Result<ChannelSpec, MplabStatus> {
    ChannelSpec::new(axis.into(), p, convention.into()).or_status()
}

/// NUL-terminated library version; static storage.
#[no_mangle]
pub extern "C" fn mplab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (truncated, always
/// NUL-terminated) and returns the full message length in bytes.
#[no_mangle]
pub unsafe extern "C" fn mplab_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Caps dense allocations at `bytes`.
#[no_mangle]
pub extern "C" fn mplab_set_memory_cap(bytes: u64) {
    mplab::qcore::set_memory_cap(bytes);
}

/// Ground state of the critical transverse-field Ising chain.
#[no_mangle]
pub unsafe extern "C" fn mplab_ising_ground_state(l: usize, periodic: bool, out: *mut *mut MplabState) -> MplabStatus {
    guard(|| {
        non_null(out, "out")?;
        let boundary = if periodic { Boundary::Periodic } else { Boundary::Open };
        let psi = ising_lowest(l, boundary, 1).or_status()?.states.remove(0);
        *out = Box::into_raw(Box::new(MplabState(psi)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mplab_state_n_qubits(state: *const MplabState) -> usize {
    if state.is_null() {
        return 0;
    }
    (*state).0.n_qubits()
}

#[no_mangle]
pub unsafe extern "C" fn mplab_state_free(state: *mut MplabState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Rényi-`n` evaluator for the state after dephasing.
#[no_mangle]
pub unsafe extern "C" fn mplab_renyi_new(
    state: *const MplabState,
    axis: MplabAxis,
    p: f64,
    convention: MplabConvention,
    n: u32,
    out: *mut *mut MplabRenyi,
) -> MplabStatus {
    guard(|| {
        non_null(state, "state")?;
        non_null(out, "out")?;
        let method = if n <= 2 { Method::Doubled } else { Method::Dense };
        let ev = RenyiEvaluator::new(&(*state).0, &channel(axis, p, convention)?, n, method).or_status()?;
        *out = Box::into_raw(Box::new(MplabRenyi(ev)));
        Ok(())
    })
}

/// `tr(ρⁿ O₁[base] O₂[base+l]) / tr(ρⁿ)`.
#[no_mangle]
pub unsafe extern "C" fn mplab_renyi_correlator(
    ev: *const MplabRenyi,
    o1: MplabAxis,
    o2: MplabAxis,
    base: usize,
    l: usize,
    value: *mut f64,
) -> MplabStatus {
    guard(|| {
        non_null(ev, "evaluator")?;
        non_null(value, "value")?;
        let ev = &(*ev).0;
        let s = pair_string(ev.n_qubits(), base, o1.into(), o2.into(), l).or_status()?;
        *value = ev.value(&s).or_status()?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mplab_renyi_free(ev: *mut MplabRenyi) {
    if !ev.is_null() {
        drop(Box::from_raw(ev));
    }
}

/// Simulates `m` randomized single-qubit Pauli measurements of the dephased state.
#[no_mangle]
pub unsafe extern "C" fn mplab_shadows_simulate(
    state: *const MplabState,
    axis: MplabAxis,
    p: f64,
    convention: MplabConvention,
    m: usize,
    seed: u64,
    out: *mut *mut MplabShadows,
) -> MplabStatus {
    guard(|| {
        non_null(state, "state")?;
        non_null(out, "out")?;
        let ds = sample_snapshots(&(*state).0, &channel(axis, p, convention)?, m, seed, BasisScheme::default())
            .or_status()?;
        *out = Box::into_raw(Box::new(MplabShadows(ds)));
        Ok(())
    })
}

/// Translation-averaged Rényi-2 correlator estimate and its jackknife error
/// (`stderr` may be null; it receives NaN when unavailable).
#[no_mangle]
pub unsafe extern "C" fn mplab_shadows_renyi2(
    ds: *const MplabShadows,
    o1: MplabAxis,
    o2: MplabAxis,
    l: usize,
    value: *mut f64,
    stderr: *mut f64,
) -> MplabStatus {
    guard(|| {
        non_null(ds, "dataset")?;
        non_null(value, "value")?;
        let ds = &(*ds).0;
        let obs = translation_sum(ds.l(), o1.into(), o2.into(), l).or_status()?;
        let est = estimate_renyi2_observables(ds, &[obs], Engine::Auto).or_status()?.remove(0);
        *value = est.value;
        if !stderr.is_null() {
            *stderr = est.jackknife.map_or(f64::NAN, |j| j.stderr);
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mplab_shadows_free(ds: *mut MplabShadows) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// SVD-optimal entanglement fidelity of the two-state Ising code and the
/// channel distance; either output may be null.
#[no_mangle]
pub unsafe extern "C" fn mplab_decode_svd(
    l: usize,
    axis: MplabAxis,
    p: f64,
    convention: MplabConvention,
    seed: u64,
    fe: *mut f64,
    d_rho: *mut f64,
) -> MplabStatus {
    guard(|| {
        let spec = channel(axis, p, convention)?;
        let nc = NoisyCode::ising(l, &spec).or_status()?;
        if !fe.is_null() {
            let opts = SvdOptions { seed, ..SvdOptions::default() };
            *fe = optimize_fe_svd(&nc.rho, &nc.target, nc.n_reference, &opts).or_status()?.fe;
        }
        if !d_rho.is_null() {
            *d_rho = channel_distance(&nc.target, nc.n_reference, &spec).or_status()?.d_rho;
        }
        Ok(())
    })
}

/// Randomness-gadget angle and basis-selection probabilities `(p00, p01, p10, p11)`.
#[no_mangle]
pub unsafe extern "C" fn mplab_gadget(p: f64, theta: *mut f64, basis_probs: *mut f64) -> MplabStatus {
    guard(|| {
        non_null(theta, "theta")?;
        non_null(basis_probs, "basis_probs")?;
        let g = gadget_probabilities(p).or_status()?;
        *theta = g.theta;
        std::ptr::copy_nonoverlapping(g.basis_probs.as_ptr(), basis_probs, 4);
        Ok(())
    })
}

/// Reads a NUL-terminated experiment config file and runs it; `success`
/// receives whether every cell ran and every invariant held.
#[no_mangle]
pub unsafe extern "C" fn mplab_run_config(path: *const c_char, success: *mut bool) -> MplabStatus {
    guard(|| {
        non_null(path, "path")?;
        let p = CStr::from_ptr(path).to_str().map_err(|e| {
            set_error(format!("path is not UTF-8: {e}"));
            MplabStatus::InvalidArgument
        })?;
        let s = mplab::harness::run_file(std::path::Path::new(p)).or_status()?;
        if !success.is_null() {
            *success = s.success();
        }
        Ok(())
    })
}
