use std::ffi::{c_char, CStr};
use std::ptr;

use mplab_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    unsafe {
        mplab_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(mplab_version()) }.to_str().unwrap();
    assert_eq!(v, mplab::VERSION);
}

#[test]
fn renyi_correlator_round_trip() {
    unsafe {
        let mut psi = ptr::null_mut();
        assert_eq!(mplab_ising_ground_state(6, true, &mut psi), MplabStatus::Ok);
        assert_eq!(mplab_state_n_qubits(psi), 6);
        let mut ev = ptr::null_mut();
        assert_eq!(mplab_renyi_new(psi, MplabAxis::Z, 0.3, MplabConvention::Half, 2, &mut ev), MplabStatus::Ok);
        let mut v = f64::NAN;
        assert_eq!(mplab_renyi_correlator(ev, MplabAxis::X, MplabAxis::X, 0, 1, &mut v), MplabStatus::Ok);

        let rust_psi = mplab::ising::ising_lowest(6, mplab::ising::Boundary::Periodic, 1).unwrap().states.remove(0);
        let spec = mplab::channels::ChannelSpec::new(mplab::channels::Axis::Z, 0.3, Default::default()).unwrap();
        let rev = mplab::renyi::RenyiEvaluator::new(&rust_psi, &spec, 2, mplab::renyi::Method::Dense).unwrap();
        let s = mplab::renyi::pair_string(6, 0, mplab::qcore::Pauli::X, mplab::qcore::Pauli::X, 1).unwrap();
        assert!((v - rev.value(&s).unwrap()).abs() < 1e-10);

        mplab_renyi_free(ev);
        mplab_state_free(psi);
    }
}

#[test]
fn shadows_estimate_with_error_bar() {
    unsafe {
        let mut psi = ptr::null_mut();
        assert_eq!(mplab_ising_ground_state(4, true, &mut psi), MplabStatus::Ok);
        let mut ds = ptr::null_mut();
        assert_eq!(
            mplab_shadows_simulate(psi, MplabAxis::I, 0.0, MplabConvention::Half, 2000, 7, &mut ds),
            MplabStatus::Ok
        );
        let (mut v, mut e) = (f64::NAN, f64::NAN);
        assert_eq!(mplab_shadows_renyi2(ds, MplabAxis::X, MplabAxis::X, 1, &mut v, &mut e), MplabStatus::Ok);
        assert!(v.is_finite() && e > 0.0);
        mplab_shadows_free(ds);
        mplab_state_free(psi);
    }
}

#[test]
fn svd_decoder_is_perfect_without_noise() {
    let (mut fe, mut d) = (0.0, 1.0);
    let s = unsafe { mplab_decode_svd(3, MplabAxis::Z, 0.0, MplabConvention::Half, 0, &mut fe, &mut d) };
    assert_eq!(s, MplabStatus::Ok);
    assert!((fe - 1.0).abs() < 1e-9);
    assert!(d.abs() < 1e-6);
}

#[test]
fn gadget_probabilities_cross_the_boundary() {
    let mut theta = 0.0;
    let mut probs = [0.0; 4];
    assert_eq!(unsafe { mplab_gadget(0.5, &mut theta, probs.as_mut_ptr()) }, MplabStatus::Ok);
    assert!((theta - std::f64::consts::FRAC_PI_3).abs() < 1e-15);
    for (p, want) in probs.iter().zip([1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0]) {
        assert!((p - want).abs() < 1e-15);
    }
}

#[test]
fn errors_map_to_codes_and_messages() {
    unsafe {
        let mut psi = ptr::null_mut();
        assert_eq!(mplab_ising_ground_state(0, true, &mut psi), MplabStatus::InvalidArgument);
        assert!(psi.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(mplab_ising_ground_state(3, true, ptr::null_mut()), MplabStatus::NullPointer);
        assert!(last_error().contains("null"));

        let mut theta = 0.0;
        let mut probs = [0.0; 4];
        assert_eq!(mplab_gadget(1.5, &mut theta, probs.as_mut_ptr()), MplabStatus::InvalidArgument);
        assert!(last_error().contains("1.5"));

        mplab_state_free(ptr::null_mut());
        assert_eq!(mplab_state_n_qubits(ptr::null()), 0);
    }
}

#[test]
fn message_is_truncated_safely() {
    unsafe {
        let mut psi = ptr::null_mut();
        mplab_ising_ground_state(0, true, &mut psi);
        let mut buf = [1 as c_char; 4];
        let full = mplab_last_error_message(buf.as_mut_ptr(), buf.len());
        assert!(full > 3);
        assert_eq!(buf[3], 0);
        assert_eq!(CStr::from_ptr(buf.as_ptr()).to_bytes().len(), 3);
    }
}
