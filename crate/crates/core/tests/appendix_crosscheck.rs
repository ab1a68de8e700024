//! The generated moment drift must reproduce the hand-transcribed reference
//! table entry by entry, for real and complex couplings, on and off
//! resonance.

mod common;

use num_complex::Complex64;
use omcool::moments::{build_matrices, MOMENT_DIM};
use omcool::params::SystemParams;

fn check(params: &SystemParams) {
    let generated = build_matrices(params).unwrap();
    let (m_ref, n_ref) = common::reference_drift(params);
    let tol = common::drift_tolerance(params);
    for r in 0..MOMENT_DIM {
        for c in 0..MOMENT_DIM {
            let diff = (generated.m[[r, c]] - m_ref[[r, c]]).norm();
            assert!(
                diff <= tol,
                "M[{r}][{c}]: generated {} vs reference {} (diff {diff:.3e})",
                generated.m[[r, c]],
                m_ref[[r, c]]
            );
        }
        let diff = (generated.n[r] - n_ref[r]).norm();
        assert!(
            diff <= tol,
            "N[{r}]: generated {} vs reference {} (diff {diff:.3e})",
            generated.n[r],
            n_ref[r]
        );
    }
}

#[test]
fn generated_drift_matches_reference_for_real_coupling() {
    let p = SystemParams::new(1.0, 0.01, 1e-5, -1.0, Complex64::new(0.1, 0.0), 1e3).unwrap();
    check(&p);
}

#[test]
fn generated_drift_matches_reference_for_complex_coupling() {
    let p = SystemParams::new(1.0, 0.04, 3e-4, -0.8, Complex64::new(0.21, -0.17), 12.5).unwrap();
    check(&p);
}

#[test]
fn generated_drift_matches_reference_off_resonance_and_detuned_blue() {
    let p = SystemParams::new(1.3, 0.02, 1e-4, 0.6, Complex64::new(-0.05, 0.3), 0.0).unwrap();
    check(&p);
}
