//! Shared reference data for integration tests: a hand-derived table of the
//! drift matrix and drive vector of the 10-moment system, worked out term by
//! term from the master-equation commutators. It is the independent
//! cross-check for the generated drift; it must never be produced by calling
//! into the code under test.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use omcool::params::SystemParams;

type C = Complex64;

/// Hand-derived M and N in the moment ordering
/// (N_a, N_b, <adag b>, <a bdag>, <a b>, <adag bdag>, <a^2>, <adag^2>,
/// <b^2>, <bdag^2>).
pub fn reference_drift(params: &SystemParams) -> (Array2<Complex64>, Array1<Complex64>) {
    let i = C::i();
    let o = C::new(0.0, 0.0);
    let g = params.g;
    let gc = g.conj();
    let kappa = C::new(params.kappa, 0.0);
    let gamma = C::new(params.gamma, 0.0);
    let dp = params.delta_prime;
    let wm = params.omega_m;
    let damp = C::new(-(params.kappa + params.gamma) / 2.0, 0.0);

    let rows: [[C; 10]; 10] = [
        // d<N_a>/dt
        [-kappa, o, -i * g, i * gc, i * gc, -i * g, o, o, o, o],
        // d<N_b>/dt
        [o, -gamma, i * g, -i * gc, i * gc, -i * g, o, o, o, o],
        // d<adag b>/dt
        [
            -i * gc,
            i * gc,
            damp - i * (dp + wm),
            o,
            o,
            o,
            o,
            -i * g,
            i * gc,
            o,
        ],
        // d<a bdag>/dt
        [
            i * g,
            -i * g,
            o,
            damp + i * (dp + wm),
            o,
            o,
            i * gc,
            o,
            o,
            -i * g,
        ],
        // d<a b>/dt
        [
            -i * g,
            -i * g,
            o,
            o,
            damp + i * (dp - wm),
            o,
            -i * gc,
            o,
            -i * g,
            o,
        ],
        // d<adag bdag>/dt
        [
            i * gc,
            i * gc,
            o,
            o,
            o,
            damp - i * (dp - wm),
            o,
            i * g,
            o,
            i * gc,
        ],
        // d<a^2>/dt
        [
            o,
            o,
            o,
            -i * 2.0 * g,
            -i * 2.0 * g,
            o,
            i * 2.0 * dp - kappa,
            o,
            o,
            o,
        ],
        // d<adag^2>/dt
        [
            o,
            o,
            i * 2.0 * gc,
            o,
            o,
            i * 2.0 * gc,
            o,
            -i * 2.0 * dp - kappa,
            o,
            o,
        ],
        // d<b^2>/dt
        [
            o,
            o,
            -i * 2.0 * g,
            o,
            -i * 2.0 * gc,
            o,
            o,
            o,
            -i * 2.0 * wm - gamma,
            o,
        ],
        // d<bdag^2>/dt
        [
            o,
            o,
            o,
            i * 2.0 * gc,
            o,
            i * 2.0 * g,
            o,
            o,
            o,
            i * 2.0 * wm - gamma,
        ],
    ];

    let mut m = Array2::zeros((10, 10));
    for (r, row) in rows.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            m[[r, c]] = *v;
        }
    }
    let mut n = Array1::zeros(10);
    n[1] = C::new(params.gamma * params.n_th, 0.0);
    n[4] = -i * g;
    n[5] = i * gc;
    (m, n)
}

/// Entry-by-entry comparison tolerance: the generated drift assembles a few
/// coefficients from sums of rate products, so allow ulp-level wobble scaled
/// by the largest rate.
pub fn drift_tolerance(params: &SystemParams) -> f64 {
    let scale = [
        params.omega_m,
        params.kappa,
        params.gamma * (params.n_th + 1.0),
        params.delta_prime.abs(),
        params.g.norm(),
    ]
    .into_iter()
    .fold(1.0_f64, f64::max);
    1e-14 * scale
}
