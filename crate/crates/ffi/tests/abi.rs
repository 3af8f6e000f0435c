use std::ffi::CStr;
use std::ptr;

use atomroute::analytic;
use atomroute::fock::FockState;
use atomroute::hamiltonian::ReducedParams;
use atomroute_ffi::*;

fn table(n: u32) -> AtParams {
    AtParams { u: 0.51, sigma: 1.56, j: 1.0, particles: n }
}

fn last_error() -> String {
    let p = at_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn basis_and_spectrum_round_trip() {
    unsafe {
        let mut b = ptr::null_mut();
        assert_eq!(at_basis_new(4, &mut b), AtStatus::Ok);
        let mut len = 0;
        assert_eq!(at_basis_len(b, &mut len), AtStatus::Ok);
        assert_eq!(len, 35);
        let mut occ = [0u32; 4];
        assert_eq!(at_basis_state(b, 0, occ.as_mut_ptr()), AtStatus::Ok);
        assert_eq!(occ.iter().sum::<u32>(), 4);
        assert_eq!(at_basis_state(b, 35, occ.as_mut_ptr()), AtStatus::InvalidArgument);

        let p = table(4);
        let mut s = ptr::null_mut();
        assert_eq!(at_spectrum_new(b, &p, ptr::null(), &mut s), AtStatus::Ok);
        let mut n = 0;
        assert_eq!(at_spectrum_eigenvalues(s, ptr::null_mut(), 0, &mut n), AtStatus::Ok);
        assert_eq!(n, 35);
        let mut e = vec![0.0; n];
        assert_eq!(at_spectrum_eigenvalues(s, e.as_mut_ptr(), n, &mut n), AtStatus::Ok);
        assert!(e.windows(2).all(|w| w[0] <= w[1]));
        at_spectrum_free(s);
        at_basis_free(b);
    }
}

#[test]
fn resonant_transfer_through_the_abi() {
    unsafe {
        let p = table(16);
        let mut period = 0.0;
        assert_eq!(at_resonant_period(&p, 0, &mut period), AtStatus::Ok);
        let mut jeff = 0.0;
        assert_eq!(at_jeff(&p, 0, &mut jeff), AtStatus::Ok);
        assert!((period - 2.0 * std::f64::consts::PI / (3.0 * jeff)).abs() < 1e-9);

        let mut b = ptr::null_mut();
        at_basis_new(16, &mut b);
        let mut s = ptr::null_mut();
        assert_eq!(at_spectrum_new(b, &p, ptr::null(), &mut s), AtStatus::Ok);
        let occ = [14u32, 2, 0, 0];
        let times = [0.0, period / 3.0];
        let mut pops = [0.0; 8];
        assert_eq!(at_populations_series(s, occ.as_ptr(), times.as_ptr(), 2, pops.as_mut_ptr()), AtStatus::Ok);
        assert!((pops[0] - 14.0).abs() < 1e-10);
        let ana = analytic::populations_resonant(
            &FockState(occ),
            &ReducedParams::new(0.51, 1.56, 1.0, 16).unwrap(),
            period / 3.0,
        )
        .unwrap();
        for (x, y) in pops[4..].iter().zip(ana.populations) {
            assert!((x - y).abs() < 0.05 * 16.0, "{pops:?} vs {ana:?}");
        }

        let mut psi = ptr::null_mut();
        assert_eq!(at_state_fock(b, occ.as_ptr(), &mut psi), AtStatus::Ok);
        let mut later = ptr::null_mut();
        assert_eq!(at_state_evolve(psi, s, period / 3.0, &mut later), AtStatus::Ok);
        let mut q = [0.0; 4];
        assert_eq!(at_state_populations(later, b, q.as_mut_ptr()), AtStatus::Ok);
        assert!((q[1] - pops[5]).abs() < 1e-10);
        let mut back = ptr::null_mut();
        at_state_evolve(later, s, -period / 3.0, &mut back);
        let mut ov = 0.0;
        assert_eq!(at_state_overlap(psi, back, &mut ov), AtStatus::Ok);
        assert!((ov - 1.0).abs() < 1e-10);
        for x in [psi, later, back] {
            at_state_free(x);
        }
        at_spectrum_free(s);
        at_basis_free(b);
    }
}

#[test]
fn field_quantities() {
    unsafe {
        let p = table(16);
        let f = AtField { nu: 1.05, target: 1 };
        let (mut zeta, mut tau) = (0.0, 0.0);
        assert_eq!(at_zeta(&p, &f, 0, &mut zeta), AtStatus::Ok);
        assert_eq!(at_tau(zeta, &mut tau), AtStatus::Ok);
        assert!(tau > 0.0 && tau.is_finite());
        let mut crit = 0.0;
        assert_eq!(at_sigma_crit(&p, &mut crit), AtStatus::Ok);
        assert!((crit - 2.0 * 0.51 * (1.0 - 16.0)).abs() < 1e-12);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    unsafe {
        let bad = AtParams { j: 0.0, ..table(4) };
        let mut v = 0.0;
        assert_eq!(at_jeff(&bad, 0, &mut v), AtStatus::InvalidArgument);
        assert!(!last_error().is_empty());

        let f = AtField { nu: 1.05, target: 7 };
        assert_eq!(at_zeta(&table(4), &f, 0, &mut v), AtStatus::InvalidArgument);

        assert_eq!(at_tau(0.0, &mut v), AtStatus::SingularParameter);
        assert_eq!(at_jeff(ptr::null(), 0, &mut v), AtStatus::NullPointer);
        assert!(last_error().contains("params"));

        let mut b = ptr::null_mut();
        at_basis_new(4, &mut b);
        let occ = [1u32, 1, 1, 0];
        let mut s = ptr::null_mut();
        assert_eq!(at_state_fock(b, occ.as_ptr(), &mut s), AtStatus::InvalidArgument);
        assert!(s.is_null());
        at_basis_free(b);

        assert_eq!(at_tau(1.0, &mut v), AtStatus::Ok);
        assert!(at_last_error().is_null());
    }
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(at_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_abi() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/atomroute.h")).unwrap();
    for sym in [
        "typedef struct AtBasis AtBasis",
        "AT_STATUS_NULL_POINTER",
        "at_spectrum_new",
        "at_populations_series",
        "at_last_error",
    ] {
        assert!(h.contains(sym), "{sym}");
    }
}
