//! Second-order moment dynamics: the 10-component linear system
//! `V' = M V + N` and its exact propagation.
//!
//! The drift matrix is never transcribed from a fixed table. Each moment is
//! differentiated under the master equation with the normal-ordering algebra
//! of [`crate::algebra`]; a hand-derived copy of the table lives in the test
//! suite as an independent cross-check. Propagation is exact per segment via
//! the matrix exponential of the augmented 11x11 system (the constant drive
//! appended as an extra state), so there is no step-size tuning anywhere.

use std::collections::HashMap;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{moment_rate, Monomial, OperatorSum, ONE};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::params::SystemParams;

pub const MOMENT_DIM: usize = 10;

/// Ordered moment basis: `N_a, N_b, <adag b>, <a bdag>, <a b>, <adag bdag>,
/// <a^2>, <adag^2>, <b^2>, <bdag^2>` as monomials `adag^p a^q bdag^r b^s`.
pub const MOMENT_BASIS: [Monomial; MOMENT_DIM] = [
    (1, 1, 0, 0),
    (0, 0, 1, 1),
    (1, 0, 0, 1),
    (0, 1, 1, 0),
    (0, 1, 0, 1),
    (1, 0, 1, 0),
    (0, 2, 0, 0),
    (2, 0, 0, 0),
    (0, 0, 0, 2),
    (0, 0, 2, 0),
];

/// Column labels used in CSV export, in basis order.
pub const MOMENT_LABELS: [&str; MOMENT_DIM] = [
    "na", "nb", "adagb", "abdag", "ab", "adagbdag", "a2", "adag2", "b2", "bdag2",
];

/// Hermitian-conjugate pairs within the basis: `v[hi] = conj(v[lo])`.
pub const HERMITIAN_PAIRS: [(usize, usize); 4] = [(2, 3), (4, 5), (6, 7), (8, 9)];

/// The moment vector V.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentVector {
    pub v: [Complex64; MOMENT_DIM],
}

impl MomentVector {
    pub fn zero() -> Self {
        Self {
            v: [Complex64::new(0.0, 0.0); MOMENT_DIM],
        }
    }

    /// Mean photon number (real part of the first component).
    pub fn n_a(&self) -> f64 {
        self.v[0].re
    }

    /// Mean phonon number (real part of the second component).
    pub fn n_b(&self) -> f64 {
        self.v[1].re
    }

    /// Largest hermitian-pair violation, relative to `1 + |component|`.
    pub fn hermitian_residual(&self) -> f64 {
        HERMITIAN_PAIRS
            .iter()
            .map(|&(lo, hi)| (self.v[hi] - self.v[lo].conj()).norm() / (1.0 + self.v[lo].norm()))
            .fold(0.0, f64::max)
    }

    /// Largest imaginary part of the occupation components, relative to
    /// `1 + |N_b|`.
    pub fn realness_residual(&self) -> f64 {
        let scale = 1.0 + self.v[1].re.abs();
        self.v[0].im.abs().max(self.v[1].im.abs()) / scale
    }

    /// Verify realness, non-negativity and hermitian pairing to `tol_rel`
    /// (1e-9 in the contract).
    pub fn check(&self, tol_rel: f64) -> Result<()> {
        let scale = 1.0 + self.v[1].re.abs();
        if self.hermitian_residual() > tol_rel {
            return Err(Error::InvalidParams(format!(
                "hermitian-pair violation {:.3e}",
                self.hermitian_residual()
            )));
        }
        if self.realness_residual() > tol_rel {
            return Err(Error::InvalidParams(format!(
                "occupation imaginary part {:.3e}",
                self.realness_residual()
            )));
        }
        if self.v[0].re < -tol_rel * scale || self.v[1].re < -tol_rel * scale {
            return Err(Error::InvalidParams(format!(
                "negative occupation (N_a = {:.3e}, N_b = {:.3e})",
                self.v[0].re, self.v[1].re
            )));
        }
        Ok(())
    }
}

/// Initial condition: thermal mechanical occupation, everything else zero.
pub fn initial_vector(n_th: f64) -> Result<MomentVector> {
    if !n_th.is_finite() || n_th < 0.0 {
        return Err(Error::InvalidParams("n_th must be finite and >= 0".into()));
    }
    let mut v = MomentVector::zero();
    v.v[1] = Complex64::new(n_th, 0.0);
    Ok(v)
}

/// Drift matrix M and drive vector N of `V' = M V + N`.
#[derive(Debug, Clone)]
pub struct MomentMatrices {
    pub m: CMatrix,
    pub n: CVector,
}

fn hamiltonian_ops(
    omega_m: f64,
    delta_prime: f64,
    g: Complex64,
    counter_rotating: bool,
) -> OperatorSum {
    let mut h = OperatorSum::zero();
    h.add_term((1, 1, 0, 0), Complex64::new(-delta_prime, 0.0));
    h.add_term((0, 0, 1, 1), Complex64::new(omega_m, 0.0));
    // Beam-splitter part: G adag b + G* a bdag.
    h.add_term((1, 0, 0, 1), g);
    h.add_term((0, 1, 1, 0), g.conj());
    if counter_rotating {
        // Two-mode squeezing part: G adag bdag + G* a b.
        h.add_term((1, 0, 1, 0), g);
        h.add_term((0, 1, 0, 1), g.conj());
    }
    h
}

/// Differentiate every basis moment under the master equation and collect the
/// coefficients. Panics if the equations fail to close on the quadratic
/// basis, which would indicate a broken operator algebra.
pub(crate) fn drift_from_rates(
    omega_m: f64,
    kappa: f64,
    gamma: f64,
    delta_prime: f64,
    g: Complex64,
    n_th: f64,
    counter_rotating: bool,
) -> MomentMatrices {
    let h = hamiltonian_ops(omega_m, delta_prime, g, counter_rotating);
    let scale = [omega_m.abs(), kappa.abs(), delta_prime.abs(), g.norm()]
        .into_iter()
        .fold(1.0, f64::max)
        * (1.0 + gamma.abs() * (1.0 + n_th.abs()));

    let mut m = CMatrix::zeros((MOMENT_DIM, MOMENT_DIM));
    let mut n = CVector::zeros(MOMENT_DIM);
    for (i, &mono) in MOMENT_BASIS.iter().enumerate() {
        let o = OperatorSum::term(mono, Complex64::new(1.0, 0.0));
        let rate = moment_rate(&o, &h, kappa, gamma, n_th);
        for (&term, &coeff) in rate.iter() {
            if term == ONE {
                n[i] = coeff;
            } else if let Some(j) = MOMENT_BASIS.iter().position(|&b| b == term) {
                m[[i, j]] = coeff;
            } else {
                assert!(
                    coeff.norm() <= 1e-12 * scale,
                    "moment equations failed to close: residual {:?} on {term:?}",
                    coeff
                );
            }
        }
    }
    MomentMatrices { m, n }
}

/// Build M and N for the full (counter-rotating) dynamics.
pub fn build_matrices(params: &SystemParams) -> Result<MomentMatrices> {
    params.validate()?;
    Ok(drift_from_rates(
        params.omega_m,
        params.kappa,
        params.gamma,
        params.delta_prime,
        params.g,
        params.n_th,
        true,
    ))
}

/// Build M and N with the counter-rotating (two-mode-squeezing) part of the
/// interaction removed, i.e. the drift of the rotating-wave approximation on
/// the full 10-moment basis.
pub fn build_matrices_rwa(params: &SystemParams) -> Result<MomentMatrices> {
    params.validate()?;
    Ok(drift_from_rates(
        params.omega_m,
        params.kappa,
        params.gamma,
        params.delta_prime,
        params.g,
        params.n_th,
        false,
    ))
}

/// Sampled moment time series with derived occupation numbers.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<MomentVector>,
    pub n_b: Vec<f64>,
    pub n_a: Vec<f64>,
}

pub(crate) fn validate_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::InvalidParams("time grid is empty".into()));
    }
    if t_grid[0] != 0.0 {
        return Err(Error::InvalidParams("time grid must start at t = 0".into()));
    }
    for w in t_grid.windows(2) {
        if w[1] <= w[0] || !w[1].is_finite() {
            return Err(Error::InvalidParams(
                "time grid must be strictly increasing and finite".into(),
            ));
        }
    }
    Ok(())
}

const AUG_DIM: usize = MOMENT_DIM + 1;

/// Exact propagator for one constant-coefficient segment, caching the step
/// exponential per distinct dt.
pub struct Propagator {
    aug: CMatrix,
    steps: HashMap<u64, CMatrix>,
}

impl Propagator {
    pub fn new(mat: &MomentMatrices) -> Self {
        let mut aug = Array2::zeros((AUG_DIM, AUG_DIM));
        for i in 0..MOMENT_DIM {
            for j in 0..MOMENT_DIM {
                aug[[i, j]] = mat.m[[i, j]];
            }
            aug[[i, MOMENT_DIM]] = mat.n[i];
        }
        Self {
            aug,
            steps: HashMap::new(),
        }
    }

    fn step_matrix(&mut self, dt: f64) -> Result<&CMatrix> {
        let key = dt.to_bits();
        if !self.steps.contains_key(&key) {
            let e = linalg::expm(&self.aug.mapv(|z| z * dt))?;
            self.steps.insert(key, e);
        }
        Ok(&self.steps[&key])
    }

    /// Advance an augmented state (V, 1) by dt.
    pub fn advance(&mut self, state: &CVector, dt: f64) -> Result<CVector> {
        Ok(self.step_matrix(dt)?.dot(state))
    }
}

pub(crate) fn augment(v0: &MomentVector) -> CVector {
    let mut s = CVector::zeros(AUG_DIM);
    for i in 0..MOMENT_DIM {
        s[i] = v0.v[i];
    }
    s[MOMENT_DIM] = Complex64::new(1.0, 0.0);
    s
}

pub(crate) fn extract(state: &CVector) -> MomentVector {
    let mut v = MomentVector::zero();
    for i in 0..MOMENT_DIM {
        v.v[i] = state[i];
    }
    v
}

/// Propagate `V(t) = e^{Mt} V(0) + (int_0^t e^{Ms} ds) N` on a sample grid.
///
/// The grid must start at 0 and be strictly increasing. Exact to the
/// matrix-exponential tolerance; uniform grids cost a single exponential.
pub fn propagate(mat: &MomentMatrices, v0: &MomentVector, t_grid: &[f64]) -> Result<Trajectory> {
    validate_grid(t_grid)?;
    let mut prop = Propagator::new(mat);
    let mut state = augment(v0);
    let mut states = Vec::with_capacity(t_grid.len());
    states.push(*v0);
    for w in t_grid.windows(2) {
        state = prop.advance(&state, w[1] - w[0])?;
        states.push(extract(&state));
    }
    Ok(collect_trajectory(t_grid.to_vec(), states))
}

fn collect_trajectory(times: Vec<f64>, states: Vec<MomentVector>) -> Trajectory {
    let n_b = states.iter().map(|s| s.n_b()).collect();
    let n_a = states.iter().map(|s| s.n_a()).collect();
    Trajectory {
        times,
        states,
        n_b,
        n_a,
    }
}

/// Single-point evaluation of the same exact solution at an arbitrary
/// `t >= 0` (one matrix exponential).
pub fn moment_at(mat: &MomentMatrices, v0: &MomentVector, t: f64) -> Result<MomentVector> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidParams("t must be finite and >= 0".into()));
    }
    let mut prop = Propagator::new(mat);
    let state = prop.advance(&augment(v0), t)?;
    Ok(extract(&state))
}

/// One piecewise-constant segment of a cavity-decay modulation schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSegment {
    /// Time at which this kappa takes effect.
    pub t_start: f64,
    pub kappa: f64,
}

/// Piecewise-constant kappa(t). The last segment extends to infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaSchedule {
    pub segments: Vec<ScheduleSegment>,
}

impl KappaSchedule {
    pub fn constant(kappa: f64) -> Self {
        Self {
            segments: vec![ScheduleSegment {
                t_start: 0.0,
                kappa,
            }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::ScheduleGap("schedule has no segments".into()));
        }
        if self.segments[0].t_start != 0.0 {
            return Err(Error::ScheduleGap(format!(
                "schedule must start at t = 0 (first segment starts at {})",
                self.segments[0].t_start
            )));
        }
        for w in self.segments.windows(2) {
            if w[1].t_start <= w[0].t_start {
                return Err(Error::ScheduleGap(
                    "segment start times must be strictly increasing".into(),
                ));
            }
        }
        for s in &self.segments {
            if !s.kappa.is_finite() || s.kappa <= 0.0 || !s.t_start.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "schedule segment at t = {} must have finite kappa > 0",
                    s.t_start
                )));
            }
        }
        Ok(())
    }
}

/// Piecewise-exact propagator for a modulated cavity decay. Cumulative
/// transfer matrices up to each breakpoint are cached so arbitrary-time
/// evaluation stays cheap.
pub struct ModulatedPropagator {
    starts: Vec<f64>,
    props: Vec<Propagator>,
    /// cum[k] = transfer matrix from t = 0 to starts[k].
    cum: Vec<CMatrix>,
}

impl ModulatedPropagator {
    pub fn new(params: &SystemParams, schedule: &KappaSchedule) -> Result<Self> {
        params.validate()?;
        schedule.validate()?;
        let mut starts = Vec::new();
        let mut props = Vec::new();
        for seg in &schedule.segments {
            let mat = drift_from_rates(
                params.omega_m,
                seg.kappa,
                params.gamma,
                params.delta_prime,
                params.g,
                params.n_th,
                true,
            );
            starts.push(seg.t_start);
            props.push(Propagator::new(&mat));
        }
        Ok(Self {
            starts,
            props,
            cum: Vec::new(),
        })
    }

    fn segment_index(&self, t: f64) -> usize {
        match self.starts.binary_search_by(|s| s.partial_cmp(&t).unwrap()) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        }
    }

    fn cum_to(&mut self, k: usize) -> Result<CMatrix> {
        while self.cum.len() <= k {
            let j = self.cum.len();
            let next = if j == 0 {
                linalg::eye(AUG_DIM)
            } else {
                let dt = self.starts[j] - self.starts[j - 1];
                let step = self.props[j - 1].step_matrix(dt)?.clone();
                step.dot(&self.cum[j - 1])
            };
            self.cum.push(next);
        }
        Ok(self.cum[k].clone())
    }

    /// State at an arbitrary t >= 0.
    pub fn state_at(&mut self, v0: &MomentVector, t: f64) -> Result<MomentVector> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::InvalidParams("t must be finite and >= 0".into()));
        }
        let k = self.segment_index(t);
        let to_break = self.cum_to(k)?;
        let state = to_break.dot(&augment(v0));
        let state = self.props[k].advance(&state, t - self.starts[k])?;
        Ok(extract(&state))
    }

    /// Propagate along a sample grid, stepping exactly across breakpoints.
    pub fn propagate(&mut self, v0: &MomentVector, t_grid: &[f64]) -> Result<Trajectory> {
        validate_grid(t_grid)?;
        let mut states = Vec::with_capacity(t_grid.len());
        states.push(*v0);
        let mut state = augment(v0);
        let mut tc = 0.0;
        let mut seg = 0usize;
        for &t in &t_grid[1..] {
            loop {
                let next_break = self.starts.get(seg + 1).copied();
                match next_break {
                    Some(tb) if tb < t => {
                        state = self.props[seg].advance(&state, tb - tc)?;
                        tc = tb;
                        seg += 1;
                    }
                    _ => break,
                }
            }
            state = self.props[seg].advance(&state, t - tc)?;
            tc = t;
            states.push(extract(&state));
        }
        Ok(collect_trajectory(t_grid.to_vec(), states))
    }
}

/// Propagate with a time-dependent cavity decay kappa(t), rebuilding the
/// drift per segment; the state is continuous across breakpoints.
pub fn propagate_modulated(
    params: &SystemParams,
    schedule: &KappaSchedule,
    v0: &MomentVector,
    t_grid: &[f64],
) -> Result<Trajectory> {
    ModulatedPropagator::new(params, schedule)?.propagate(v0, t_grid)
}

// ---------------------------------------------------------------------------
// Stability and steady state
// ---------------------------------------------------------------------------

/// First-order drift of the mode vector (a, adag, b, bdag).
fn first_order_drift(params: &SystemParams) -> CMatrix {
    let i = Complex64::i();
    let g = params.g;
    let gc = g.conj();
    let mut a = CMatrix::zeros((4, 4));
    // a' = (i delta' - kappa/2) a - i G (b + bdag)
    a[[0, 0]] = Complex64::new(-params.kappa / 2.0, params.delta_prime);
    a[[0, 2]] = -i * g;
    a[[0, 3]] = -i * g;
    // adag' = conjugate with a <-> adag, b <-> bdag
    a[[1, 1]] = Complex64::new(-params.kappa / 2.0, -params.delta_prime);
    a[[1, 2]] = i * gc;
    a[[1, 3]] = i * gc;
    // b' = (-i omega_m - gamma/2) b - i (G* a + G adag)
    a[[2, 2]] = Complex64::new(-params.gamma / 2.0, -params.omega_m);
    a[[2, 0]] = -i * gc;
    a[[2, 1]] = -i * g;
    // bdag' = conjugate
    a[[3, 3]] = Complex64::new(-params.gamma / 2.0, params.omega_m);
    a[[3, 0]] = i * gc;
    a[[3, 1]] = i * g;
    a
}

/// Map the mode-vector drift to the (real) quadrature representation.
fn quadrature_drift(params: &SystemParams) -> [[f64; 4]; 4] {
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let i = Complex64::i();
    // x = T u with u = (a, adag, b, bdag)
    let t_rows: [[Complex64; 4]; 4] = [
        [s, s, 0.0.into(), 0.0.into()],
        [-i * s, i * s, 0.0.into(), 0.0.into()],
        [0.0.into(), 0.0.into(), s, s],
        [0.0.into(), 0.0.into(), -i * s, i * s],
    ];
    let t_inv: [[Complex64; 4]; 4] = [
        [s, i * s, 0.0.into(), 0.0.into()],
        [s, -i * s, 0.0.into(), 0.0.into()],
        [0.0.into(), 0.0.into(), s, i * s],
        [0.0.into(), 0.0.into(), s, -i * s],
    ];
    let a = first_order_drift(params);
    let mut r = [[0.0f64; 4]; 4];
    for row in 0..4 {
        for col in 0..4 {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..4 {
                for l in 0..4 {
                    acc += t_rows[row][k] * a[[k, l]] * t_inv[l][col];
                }
            }
            debug_assert!(
                acc.im.abs() < 1e-12 * (1.0 + acc.re.abs()),
                "quadrature drift not real: {acc}"
            );
            r[row][col] = acc.re;
        }
    }
    r
}

/// Characteristic polynomial s^4 + c[0] s^3 + c[1] s^2 + c[2] s + c[3] of a
/// real 4x4 matrix (Faddeev-LeVerrier).
fn charpoly4(a: &[[f64; 4]; 4]) -> [f64; 4] {
    let matmul = |x: &[[f64; 4]; 4], y: &[[f64; 4]; 4]| {
        let mut z = [[0.0f64; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                z[i][j] = (0..4).map(|k| x[i][k] * y[k][j]).sum();
            }
        }
        z
    };
    let trace = |x: &[[f64; 4]; 4]| (0..4).map(|i| x[i][i]).sum::<f64>();
    let add_diag = |mut x: [[f64; 4]; 4], d: f64| {
        for (i, row) in x.iter_mut().enumerate() {
            row[i] += d;
        }
        x
    };

    let mut coeffs = [0.0f64; 4];
    let mut b = *a;
    coeffs[0] = -trace(&b);
    for k in 2..=4 {
        b = matmul(a, &add_diag(b, coeffs[k - 2]));
        coeffs[k - 1] = -trace(&b) / k as f64;
    }
    coeffs
}

/// Strict Routh-Hurwitz test for the quartic s^4 + b1 s^3 + b2 s^2 + b3 s + b4.
fn routh_hurwitz_quartic(c: &[f64; 4]) -> bool {
    let (b1, b2, b3, b4) = (c[0], c[1], c[2], c[3]);
    b1 > 0.0 && b3 > 0.0 && b4 > 0.0 && b1 * b2 * b3 > b3 * b3 + b1 * b1 * b4
}

/// True iff every eigenvalue of the moment drift has a strictly negative real
/// part. The moment drift spectrum consists of pairwise sums of the
/// first-order mode spectrum, so the 4x4 quadrature drift decides stability.
pub fn drift_is_stable(params: &SystemParams) -> bool {
    routh_hurwitz_quartic(&charpoly4(&quadrature_drift(params)))
}

/// Stationary moments `V_ss = -M^{-1} N`.
///
/// Fails with `UnstableSystem` when any drift eigenvalue has a non-negative
/// real part (beyond the backaction divergence |G| >= omega_m/2, or an
/// exactly undamped mode).
pub fn steady_state_moments(params: &SystemParams) -> Result<MomentVector> {
    if !drift_is_stable(params) {
        return Err(Error::UnstableSystem(format!(
            "drift eigenvalue with non-negative real part at |G| = {:.4}, kappa = {:.4}, \
             gamma = {:.3e}, delta_prime = {:.4}",
            params.g_abs(),
            params.kappa,
            params.gamma,
            params.delta_prime
        )));
    }
    let mat = build_matrices(params)?;
    let rhs = mat.n.mapv(|z| -z);
    let x = linalg::solve_vec(&mat.m, &rhs)?;
    let mut v = MomentVector::zero();
    for i in 0..MOMENT_DIM {
        v.v[i] = x[i];
    }
    Ok(v)
}
