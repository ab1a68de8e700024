//! Brute-force verifier: integrates the full two-mode master equation on a
//! truncated Fock space and compares the resulting occupations against the
//! moment engine.
//!
//! The Hamiltonian is quadratic and every jump operator is linear, so the
//! second-order moments close exactly for any state; oracle and moment engine
//! must agree to integrator + truncation error. Any larger mismatch means a
//! bug on one side. The integrator is a fixed-step classical Runge-Kutta on
//! the vectorized density matrix, deliberately simple, with an optional
//! step-halving convergence measurement.
//!
//! The verifier is meant for desk-scale parameters (decay rates scaled up,
//! small thermal occupation): a bath of a thousand phonons does not fit a
//! tractable truncation, and millisecond-scale relaxation does not fit a
//! fixed-step integrator. Correctness is preferred over speed throughout.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{self, MomentVector};
use crate::params::SystemParams;

/// Truncation configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FockConfig {
    /// Photon-space dimension (levels 0 .. dim_a-1).
    pub dim_a: usize,
    /// Phonon-space dimension.
    pub dim_b: usize,
    /// Maximum admissible population in the top two levels of either mode.
    pub leak_tolerance: f64,
    /// Cap on dim_a * dim_b; the density matrix has (dim_a * dim_b)^2 entries.
    pub state_cap: usize,
}

impl FockConfig {
    pub fn new(dim_a: usize, dim_b: usize) -> Self {
        Self {
            dim_a,
            dim_b,
            leak_tolerance: 1e-2,
            state_cap: 400,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim_a < 2 || self.dim_b < 2 {
            return Err(Error::InvalidParams(
                "Fock truncation needs dim_a >= 2 and dim_b >= 2".into(),
            ));
        }
        if !self.leak_tolerance.is_finite() || self.leak_tolerance <= 0.0 {
            return Err(Error::InvalidParams("leak_tolerance must be > 0".into()));
        }
        let states = self.dim_a * self.dim_b;
        if states > self.state_cap {
            return Err(Error::CapExceeded {
                states,
                cap: self.state_cap,
            });
        }
        Ok(())
    }
}

/// Options for `evolve_master`.
#[derive(Debug, Clone, Copy, Default)]
pub struct EvolveOpts {
    /// Re-run at half the step size and record the maximum n_b difference.
    pub halving_check: bool,
}

/// Sampled oracle output.
#[derive(Debug, Clone)]
pub struct OracleRun {
    pub times: Vec<f64>,
    pub n_b: Vec<f64>,
    pub n_a: Vec<f64>,
    /// Max of the top-two-level populations of the two modes, per sample.
    pub leak: Vec<f64>,
    /// Trace of rho per sample (should stay at 1).
    pub trace: Vec<f64>,
    /// Thermal-tail mass lost to the truncation at t = 0 (before
    /// renormalization).
    pub renorm_deficit: f64,
    /// Step size actually used.
    pub step: f64,
    /// Max |n_b(h) - n_b(h/2)| when the halving check ran.
    pub halving_max_dev: Option<f64>,
}

struct FockOps {
    dim_a: usize,
    dim_b: usize,
    n: usize,
    /// CSR rows of H: (col, value) per row.
    h_rows: Vec<Vec<(usize, Complex64)>>,
    /// CSR rows of H^T (for right multiplication).
    ht_rows: Vec<Vec<(usize, Complex64)>>,
    /// Per-state diagonals.
    num_a: Vec<f64>,
    num_b: Vec<f64>,
    /// Diagonal of b b^dag in the truncated space: n_b + 1, except 0 at the
    /// top level (the truncated raising operator annihilates it).
    bbdag: Vec<f64>,
    kappa: f64,
    gamma_down: f64,
    gamma_up: f64,
    sqrt: Vec<f64>,
}

impl FockOps {
    fn new(params: &SystemParams, cfg: &FockConfig) -> Self {
        let (da, db) = (cfg.dim_a, cfg.dim_b);
        let n = da * db;
        let idx = |na: usize, nb: usize| na * db + nb;
        let sqrt: Vec<f64> = (0..=da.max(db)).map(|k| (k as f64).sqrt()).collect();

        let g = params.g;
        let gc = g.conj();
        let mut h_rows = vec![Vec::new(); n];
        for ma in 0..da {
            for mb in 0..db {
                let i = idx(ma, mb);
                let row = &mut h_rows[i];
                // Diagonal: -delta' n_a + omega_m n_b.
                row.push((
                    i,
                    Complex64::new(
                        -params.delta_prime * ma as f64 + params.omega_m * mb as f64,
                        0.0,
                    ),
                ));
                // adag b: <ma, mb| H |ma-1, mb+1> = G sqrt(ma (mb+1))
                if ma >= 1 && mb + 1 < db {
                    row.push((idx(ma - 1, mb + 1), g * (sqrt[ma] * sqrt[mb + 1])));
                }
                // adag bdag: <ma, mb| H |ma-1, mb-1> = G sqrt(ma mb)
                if ma >= 1 && mb >= 1 {
                    row.push((idx(ma - 1, mb - 1), g * (sqrt[ma] * sqrt[mb])));
                }
                // a b: <ma, mb| H |ma+1, mb+1> = G* sqrt((ma+1)(mb+1))
                if ma + 1 < da && mb + 1 < db {
                    row.push((idx(ma + 1, mb + 1), gc * (sqrt[ma + 1] * sqrt[mb + 1])));
                }
                // a bdag: <ma, mb| H |ma+1, mb-1> = G* sqrt((ma+1) mb)
                if ma + 1 < da && mb >= 1 {
                    row.push((idx(ma + 1, mb - 1), gc * (sqrt[ma + 1] * sqrt[mb])));
                }
            }
        }
        let mut ht_rows = vec![Vec::new(); n];
        for (i, row) in h_rows.iter().enumerate() {
            for &(j, v) in row {
                ht_rows[j].push((i, v));
            }
        }

        let mut num_a = vec![0.0; n];
        let mut num_b = vec![0.0; n];
        let mut bbdag = vec![0.0; n];
        for ma in 0..da {
            for mb in 0..db {
                let i = idx(ma, mb);
                num_a[i] = ma as f64;
                num_b[i] = mb as f64;
                bbdag[i] = if mb + 1 < db { (mb + 1) as f64 } else { 0.0 };
            }
        }

        Self {
            dim_a: da,
            dim_b: db,
            n,
            h_rows,
            ht_rows,
            num_a,
            num_b,
            bbdag,
            kappa: params.kappa,
            gamma_down: params.gamma * (params.n_th + 1.0),
            gamma_up: params.gamma * params.n_th,
            sqrt,
        }
    }

    /// out = -i [H, rho] + dissipators(rho). `out` is overwritten.
    fn rhs(&self, rho: &[Complex64], out: &mut [Complex64]) {
        let n = self.n;
        let i_unit = Complex64::i();
        out.fill(Complex64::new(0.0, 0.0));

        // -i H rho
        for (r, row) in self.h_rows.iter().enumerate() {
            let out_row = &mut out[r * n..(r + 1) * n];
            for &(k, v) in row {
                let coeff = -i_unit * v;
                let rho_row = &rho[k * n..(k + 1) * n];
                for (o, &x) in out_row.iter_mut().zip(rho_row) {
                    *o += coeff * x;
                }
            }
        }
        // +i rho H: (rho H)[r][c] = sum_k rho[r][k] H[k][c]
        for r in 0..n {
            let rho_row = &rho[r * n..(r + 1) * n];
            let out_row = &mut out[r * n..(r + 1) * n];
            for (c, col_entries) in self.ht_rows.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for &(k, v) in col_entries {
                    acc += rho_row[k] * v;
                }
                out_row[c] += i_unit * acc;
            }
        }

        let db = self.dim_b;
        // kappa channel: kappa (a rho adag) - kappa/2 {n_a, rho}
        if self.kappa != 0.0 {
            for ma in 0..self.dim_a - 1 {
                for mb in 0..db {
                    let r = ma * db + mb;
                    let rs = (ma + 1) * db + mb;
                    let fr = self.sqrt[ma + 1];
                    for na in 0..self.dim_a - 1 {
                        let f = self.kappa * fr * self.sqrt[na + 1];
                        for nb in 0..db {
                            let c = na * db + nb;
                            let cs = (na + 1) * db + nb;
                            out[r * n + c] += f * rho[rs * n + cs];
                        }
                    }
                }
            }
            for r in 0..n {
                for c in 0..n {
                    out[r * n + c] -=
                        0.5 * self.kappa * (self.num_a[r] + self.num_a[c]) * rho[r * n + c];
                }
            }
        }
        // gamma (n_th + 1) channel: b rho bdag - 1/2 {n_b, rho}
        if self.gamma_down != 0.0 {
            for r_base in 0..n {
                let mb = r_base % db;
                if mb + 1 >= db {
                    continue;
                }
                let fr = self.sqrt[mb + 1];
                let rs = r_base + 1;
                for c_base in 0..n {
                    let nb = c_base % db;
                    if nb + 1 >= db {
                        continue;
                    }
                    let f = self.gamma_down * fr * self.sqrt[nb + 1];
                    out[r_base * n + c_base] += f * rho[rs * n + c_base + 1];
                }
            }
            for r in 0..n {
                for c in 0..n {
                    out[r * n + c] -=
                        0.5 * self.gamma_down * (self.num_b[r] + self.num_b[c]) * rho[r * n + c];
                }
            }
        }
        // gamma n_th channel: bdag rho b - 1/2 {b bdag, rho}
        if self.gamma_up != 0.0 {
            for r_base in 0..n {
                let mb = r_base % db;
                if mb == 0 {
                    continue;
                }
                let fr = self.sqrt[mb];
                let rs = r_base - 1;
                for c_base in 0..n {
                    let nb = c_base % db;
                    if nb == 0 {
                        continue;
                    }
                    let f = self.gamma_up * fr * self.sqrt[nb];
                    out[r_base * n + c_base] += f * rho[rs * n + c_base - 1];
                }
            }
            for r in 0..n {
                for c in 0..n {
                    out[r * n + c] -=
                        0.5 * self.gamma_up * (self.bbdag[r] + self.bbdag[c]) * rho[r * n + c];
                }
            }
        }
    }
}

/// Thermal density matrix of the phonon mode on `dim_b` levels: truncated
/// geometric distribution, renormalized. Returns (diagonal, lost tail mass).
fn thermal_weights(n_th: f64, dim_b: usize) -> (Vec<f64>, f64) {
    let x = n_th / (n_th + 1.0);
    let mut w: Vec<f64> = Vec::with_capacity(dim_b);
    let mut p = 1.0 / (n_th + 1.0); // (1 - x) x^0
    for _ in 0..dim_b {
        w.push(p);
        p *= x;
    }
    let mass: f64 = w.iter().sum();
    for v in &mut w {
        *v /= mass;
    }
    (w, 1.0 - mass)
}

struct Samples {
    n_b: f64,
    n_a: f64,
    leak: f64,
    trace: f64,
}

fn measure(ops: &FockOps, rho: &[Complex64]) -> Samples {
    let n = ops.n;
    let db = ops.dim_b;
    let mut n_b = 0.0;
    let mut n_a = 0.0;
    let mut trace = 0.0;
    let mut leak_a = 0.0;
    let mut leak_b = 0.0;
    for i in 0..n {
        let p = rho[i * n + i].re;
        let (ma, mb) = (i / db, i % db);
        trace += p;
        n_a += ma as f64 * p;
        n_b += mb as f64 * p;
        if ma + 2 >= ops.dim_a {
            leak_a += p;
        }
        if mb + 2 >= db {
            leak_b += p;
        }
    }
    Samples {
        n_b,
        n_a,
        leak: leak_a.max(leak_b),
        trace,
    }
}

struct FixedStepRun {
    samples: Vec<Samples>,
    h_used: f64,
    /// Final density matrix; consumed by the piecewise verification tests.
    #[allow(dead_code)]
    rho_final: Vec<Complex64>,
}

fn run_fixed_step(
    ops: &FockOps,
    rho0: &[Complex64],
    t_grid: &[f64],
    h_max: f64,
) -> Result<FixedStepRun> {
    let n2 = ops.n * ops.n;
    let mut rho = rho0.to_vec();
    let mut k1 = vec![Complex64::new(0.0, 0.0); n2];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = k1.clone();

    let mut samples = Vec::with_capacity(t_grid.len());
    samples.push(measure(ops, &rho));
    let mut h_used: f64 = h_max;

    for w in t_grid.windows(2) {
        let span = w[1] - w[0];
        let steps = (span / h_max).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        h_used = h_used.min(h);
        for _ in 0..steps {
            ops.rhs(&rho, &mut k1);
            for i in 0..n2 {
                tmp[i] = rho[i] + k1[i] * (h / 2.0);
            }
            ops.rhs(&tmp, &mut k2);
            for i in 0..n2 {
                tmp[i] = rho[i] + k2[i] * (h / 2.0);
            }
            ops.rhs(&tmp, &mut k3);
            for i in 0..n2 {
                tmp[i] = rho[i] + k3[i] * h;
            }
            ops.rhs(&tmp, &mut k4);
            for i in 0..n2 {
                rho[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
            }
        }
        if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::SingularPropagation(
                "oracle state became non-finite (step too large?)".into(),
            ));
        }
        samples.push(measure(ops, &rho));
    }
    Ok(FixedStepRun {
        samples,
        h_used,
        rho_final: rho,
    })
}

/// Evolve `rho(0) = |0><0|_a (x) thermal(n_th)_b` under the master equation
/// and sample occupations, leak and trace on `t_grid`.
///
/// Step size: `h <= 0.01 / (omega_m + kappa + |G| max(dim_a, dim_b))`,
/// snapped down so every grid interval is an integer number of steps.
pub fn evolve_master(
    params: &SystemParams,
    cfg: &FockConfig,
    t_grid: &[f64],
    opts: EvolveOpts,
) -> Result<OracleRun> {
    params.validate()?;
    cfg.validate()?;
    moments::validate_grid(t_grid)?;

    let ops = FockOps::new(params, cfg);
    let n = ops.n;
    let (weights, deficit) = thermal_weights(params.n_th, cfg.dim_b);
    let mut rho0 = vec![Complex64::new(0.0, 0.0); n * n];
    for (nb, &wv) in weights.iter().enumerate() {
        let i = nb; // photon index 0
        rho0[i * n + i] = Complex64::new(wv, 0.0);
    }

    let dim = cfg.dim_a.max(cfg.dim_b) as f64;
    let h_max = 0.01 / (params.omega_m + params.kappa + params.g_abs() * dim);

    let run = run_fixed_step(&ops, &rho0, t_grid, h_max)?;
    let (samples, step) = (run.samples, run.h_used);
    let halving_max_dev = if opts.halving_check {
        let half = run_fixed_step(&ops, &rho0, t_grid, h_max / 2.0)?;
        Some(
            samples
                .iter()
                .zip(&half.samples)
                .map(|(a, b)| (a.n_b - b.n_b).abs())
                .fold(0.0, f64::max),
        )
    } else {
        None
    };

    for (s, &t) in samples.iter().zip(t_grid) {
        if s.leak > cfg.leak_tolerance {
            return Err(Error::TruncationLeak {
                leak: s.leak,
                tolerance: cfg.leak_tolerance,
                t,
            });
        }
    }

    Ok(OracleRun {
        times: t_grid.to_vec(),
        n_b: samples.iter().map(|s| s.n_b).collect(),
        n_a: samples.iter().map(|s| s.n_a).collect(),
        leak: samples.iter().map(|s| s.leak).collect(),
        trace: samples.iter().map(|s| s.trace).collect(),
        renorm_deficit: deficit,
        step,
        halving_max_dev,
    })
}

/// Comparison report between the oracle and the moment engine.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareReport {
    pub max_abs_dev: f64,
    pub tol: f64,
    pub pass: bool,
    pub leak_max: f64,
    pub trace_drift: f64,
    pub dims: (usize, usize),
    pub renorm_deficit: f64,
    pub params: SystemParams,
}

/// Run the oracle and the moment engine from the same initial second moments
/// and report the worst phonon-number deviation.
///
/// The moment engine is seeded with the oracle's actual truncated thermal
/// mean (not the untruncated n_th), so the comparison measures dynamics, not
/// the truncation of the initial state.
pub fn compare(
    params: &SystemParams,
    cfg: &FockConfig,
    t_grid: &[f64],
    tol_abs: f64,
) -> Result<CompareReport> {
    let oracle = evolve_master(params, cfg, t_grid, EvolveOpts::default())?;

    let mut v0 = MomentVector::zero();
    v0.v[1] = Complex64::new(oracle.n_b[0], 0.0);
    let mat = moments::build_matrices(params)?;
    let reference = moments::propagate(&mat, &v0, t_grid)?;

    let max_abs_dev = oracle
        .n_b
        .iter()
        .zip(&reference.n_b)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let leak_max = oracle.leak.iter().copied().fold(0.0, f64::max);
    let trace_drift = oracle
        .trace
        .iter()
        .map(|t| (t - 1.0).abs())
        .fold(0.0, f64::max);

    Ok(CompareReport {
        max_abs_dev,
        tol: tol_abs,
        pass: max_abs_dev < tol_abs,
        leak_max,
        trace_drift,
        dims: (cfg.dim_a, cfg.dim_b),
        renorm_deficit: oracle.renorm_deficit,
        params: *params,
    })
}
