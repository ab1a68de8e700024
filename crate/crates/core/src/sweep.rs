//! Parameter sweeps: (t, G) maps, windowed instantaneous-minimum extraction,
//! and cooling-limit curves versus G or kappa.
//!
//! Work is fanned out over grid rows as independent work units (one
//! parameter point each); results are assembled in index order, so output is
//! deterministic regardless of the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{self, initial_vector, KappaSchedule, ModulatedPropagator, Propagator};
use crate::params::SystemParams;
use crate::rwa::{self, RwaState};
use crate::spectrum;

/// Which propagator a sweep runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// Full 10-moment dynamics at the configured n_th.
    Full,
    /// Reduced rotating-wave 3-moment dynamics.
    Rwa,
    /// Full 10-moment dynamics with n_th forced to zero.
    ZeroTemp,
}

impl SweepMode {
    fn effective_params(&self, params: &SystemParams) -> SystemParams {
        match self {
            SweepMode::ZeroTemp => params.with_n_th(0.0),
            _ => *params,
        }
    }
}

/// Uniform coarse spacing for the minimum search.
const COARSE_DT: f64 = 0.01;
/// Golden-section refinement resolution in time.
const REFINE_DT: f64 = 1e-4;

/// Phonon-number evaluator for one parameter point. This is the work unit a
/// thread pool consumes: it owns everything needed to sample N_b(t).
pub struct WorkUnit {
    engine: Engine,
}

enum Engine {
    Moments(Propagator, moments::MomentVector),
    Rwa(SystemParams, RwaState),
    Modulated(ModulatedPropagator, moments::MomentVector),
}

impl WorkUnit {
    /// Build the evaluator for `params` under `mode`; a kappa schedule (full
    /// mode only) switches to piecewise propagation.
    pub fn new(
        params: &SystemParams,
        mode: SweepMode,
        schedule: Option<&KappaSchedule>,
    ) -> Result<Self> {
        params.validate()?;
        let p = mode.effective_params(params);
        let engine = match (mode, schedule) {
            (SweepMode::Rwa, None) => Engine::Rwa(p, RwaState::thermal(p.n_th)),
            (SweepMode::Rwa, Some(_)) => {
                return Err(Error::InvalidParams(
                    "kappa schedules apply to the full propagator, not the RWA mode".into(),
                ))
            }
            (_, None) => {
                let mat = moments::build_matrices(&p)?;
                Engine::Moments(Propagator::new(&mat), initial_vector(p.n_th)?)
            }
            (_, Some(s)) => {
                Engine::Modulated(ModulatedPropagator::new(&p, s)?, initial_vector(p.n_th)?)
            }
        };
        Ok(Self { engine })
    }

    /// N_b at a single time (one matrix exponential).
    pub fn nb_at(&mut self, t: f64) -> Result<f64> {
        match &mut self.engine {
            Engine::Moments(prop, v0) => {
                let state = prop.advance(&moments::augment(v0), t)?;
                Ok(moments::extract(&state).n_b())
            }
            Engine::Rwa(p, s0) => Ok(rwa::rwa_state_at(p, s0, t)?.n_b),
            Engine::Modulated(prop, v0) => Ok(prop.state_at(v0, t)?.n_b()),
        }
    }

    /// N_b sampled on a grid starting at 0 (single propagation).
    pub fn nb_on_grid(&mut self, t_grid: &[f64]) -> Result<Vec<f64>> {
        match &mut self.engine {
            Engine::Moments(prop, v0) => {
                moments::validate_grid(t_grid)?;
                let mut out = Vec::with_capacity(t_grid.len());
                let mut state = moments::augment(v0);
                out.push(v0.n_b());
                for w in t_grid.windows(2) {
                    state = prop.advance(&state, w[1] - w[0])?;
                    out.push(moments::extract(&state).n_b());
                }
                Ok(out)
            }
            Engine::Rwa(p, s0) => {
                let states = rwa::propagate_rwa(p, s0, t_grid)?;
                Ok(states.iter().map(|s| s.n_b).collect())
            }
            Engine::Modulated(prop, v0) => Ok(prop.propagate(v0, t_grid)?.n_b),
        }
    }
}

/// One named, sampled axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub name: String,
    pub values: Vec<f64>,
}

/// A filled 2-D map of N_b values; `values[i][j]` corresponds to
/// `(axis1.values[i], axis2.values[j])`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepGrid {
    pub axis1: AxisSpec,
    pub axis2: AxisSpec,
    pub values: Vec<Vec<f64>>,
}

impl SweepGrid {
    /// Strict local minima over the four-neighborhood (interior cells),
    /// row-major order.
    pub fn local_minima(&self) -> Vec<(usize, usize, f64)> {
        let rows = self.values.len();
        if rows < 3 {
            return Vec::new();
        }
        let cols = self.values[0].len();
        let mut out = Vec::new();
        for i in 1..rows - 1 {
            for j in 1..cols.saturating_sub(1) {
                let v = self.values[i][j];
                if v < self.values[i - 1][j]
                    && v < self.values[i + 1][j]
                    && v < self.values[i][j - 1]
                    && v < self.values[i][j + 1]
                {
                    out.push((i, j, v));
                }
            }
        }
        out
    }

    /// Location and value of the global minimum.
    pub fn global_minimum(&self) -> (usize, usize, f64) {
        let mut best = (0, 0, f64::INFINITY);
        for (i, row) in self.values.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v < best.2 {
                    best = (i, j, v);
                }
            }
        }
        best
    }
}

/// N_b over a (G, t) grid: one propagation per coupling value, fanned out in
/// parallel, assembled in index order. Any failing cell aborts the sweep with
/// the offending coupling in the error.
pub fn sweep_time_g(
    params_base: &SystemParams,
    g_values: &[f64],
    t_values: &[f64],
    mode: SweepMode,
) -> Result<SweepGrid> {
    if g_values.is_empty() || t_values.is_empty() {
        return Err(Error::InvalidParams("sweep axes must be non-empty".into()));
    }
    moments::validate_grid(t_values)?;
    let rows: Result<Vec<Vec<f64>>> = g_values
        .par_iter()
        .map(|&g| {
            let p = params_base.with_g_abs(g);
            let row = WorkUnit::new(&p, mode, None)
                .and_then(|mut unit| unit.nb_on_grid(t_values))
                .map_err(|e| Error::SingularPropagation(format!("at G = {g}: {e}")))?;
            if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::SingularPropagation(format!(
                    "non-finite N_b = {bad} at G = {g}"
                )));
            }
            Ok(row)
        })
        .collect();
    Ok(SweepGrid {
        axis1: AxisSpec {
            name: "G".into(),
            values: g_values.to_vec(),
        },
        axis2: AxisSpec {
            name: "t".into(),
            values: t_values.to_vec(),
        },
        values: rows?,
    })
}

/// Golden-section minimization on [a, b] to a fixed abscissa resolution.
fn golden_section<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    tol_x: f64,
) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while (b - a).abs() > tol_x {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 < f2 { (x1, f1) } else { (x2, f2) })
}

/// Default search window around the first half Rabi cycle:
/// `[0.5, 1.5] * pi/(omega_+ - omega_-)` (non-RWA) or `[0.5, 1.5] * pi/(2|G|)`
/// (RWA).
pub fn default_window(params: &SystemParams, mode: SweepMode) -> Result<(f64, f64)> {
    let g = params.g_abs();
    if g == 0.0 {
        return Err(Error::InvalidParams(
            "minimum search window undefined at G = 0".into(),
        ));
    }
    let t_half = match mode {
        SweepMode::Rwa => std::f64::consts::PI / (2.0 * g),
        _ => {
            let w = spectrum::eigenfrequencies(g, params.omega_m)?;
            std::f64::consts::PI / w.diff
        }
    };
    Ok((0.5 * t_half, 1.5 * t_half))
}

/// Windowed instantaneous minimum of N_b: coarse uniform scan (dt = 0.01)
/// followed by golden-section refinement of the bracketing interval down to
/// 1e-4. The refined value never exceeds the coarse minimum.
pub fn extract_n_ins(
    params: &SystemParams,
    mode: SweepMode,
    window: Option<(f64, f64)>,
    schedule: Option<&KappaSchedule>,
) -> Result<(f64, f64)> {
    let (lo, hi) = match window {
        Some(w) => w,
        None => default_window(params, mode)?,
    };
    if hi <= lo || !lo.is_finite() || !hi.is_finite() || lo < 0.0 {
        return Err(Error::WindowEmpty { lo, hi });
    }
    let mut unit = WorkUnit::new(params, mode, schedule)?;

    // Coarse grid over the window, anchored at t = 0 for the propagation.
    let n = ((hi - lo) / COARSE_DT).ceil() as usize + 1;
    let mut grid = Vec::with_capacity(n + 1);
    if lo > 0.0 {
        grid.push(0.0);
    }
    for k in 0..n {
        let t = lo + (hi - lo) * k as f64 / (n - 1) as f64;
        grid.push(t);
    }
    let offset = usize::from(lo > 0.0);
    let nb = unit.nb_on_grid(&grid)?;
    let (mut idx, mut coarse_min) = (offset, f64::INFINITY);
    for (k, &v) in nb.iter().enumerate().skip(offset) {
        if v < coarse_min {
            coarse_min = v;
            idx = k;
        }
    }

    let bracket_lo = grid[idx.saturating_sub(1).max(offset)];
    let bracket_hi = grid[(idx + 1).min(grid.len() - 1)];
    let (mut t_min, mut n_min) = (grid[idx], coarse_min);
    if bracket_hi > bracket_lo {
        let (t_ref, n_ref) = golden_section(|t| unit.nb_at(t), bracket_lo, bracket_hi, REFINE_DT)?;
        if n_ref < n_min {
            t_min = t_ref;
            n_min = n_ref;
        }
    }
    Ok((n_min, t_min))
}

/// Numeric minima with analytic references attached, against one abscissa.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitCurve {
    /// Abscissa name: "G" or "kappa".
    pub abscissa: AxisSpec,
    /// Windowed numeric instantaneous minimum per point.
    pub n_min: Vec<f64>,
    /// Time of the minimum per point.
    pub t_min: Vec<f64>,
    /// RWA instantaneous limit pi gamma n_th / (4|G|).
    pub limit_rwa: Vec<f64>,
    /// Zero-temperature matched limit pi kappa |G| / [8(omega_m^2-4|G|^2)].
    pub limit_zero_temp: Vec<f64>,
    /// Frequency-unmatched upper bound.
    pub limit_upper: Vec<f64>,
    /// Frequency-matched lower bound (sum of the first two).
    pub limit_lower: Vec<f64>,
}

fn limit_point(
    params: &SystemParams,
    mode: SweepMode,
    schedule: Option<&KappaSchedule>,
) -> Result<(f64, f64, [f64; 4])> {
    let (n_min, t_min) = extract_n_ins(params, mode, None, schedule)?;
    let (limit_rwa, _) = rwa::n_ins_rwa(params)?;
    let (limit_zt, _) = spectrum::n_ins_zero_temp(params)?;
    let bounds = spectrum::n_ins_bounds(params)?;
    Ok((
        n_min,
        t_min,
        [limit_rwa, limit_zt, bounds.upper, bounds.lower],
    ))
}

fn assemble_curve(name: &str, values: &[f64], points: Vec<(f64, f64, [f64; 4])>) -> LimitCurve {
    LimitCurve {
        abscissa: AxisSpec {
            name: name.into(),
            values: values.to_vec(),
        },
        n_min: points.iter().map(|p| p.0).collect(),
        t_min: points.iter().map(|p| p.1).collect(),
        limit_rwa: points.iter().map(|p| p.2[0]).collect(),
        limit_zero_temp: points.iter().map(|p| p.2[1]).collect(),
        limit_upper: points.iter().map(|p| p.2[2]).collect(),
        limit_lower: points.iter().map(|p| p.2[3]).collect(),
    }
}

/// Instantaneous-minimum curve versus coupling, with the four analytic
/// references attached. `schedule` switches the numeric propagation to the
/// modulated-kappa hook.
pub fn limit_curve_vs_g(
    params_base: &SystemParams,
    g_values: &[f64],
    mode: SweepMode,
    schedule: Option<&KappaSchedule>,
) -> Result<LimitCurve> {
    if g_values.is_empty() {
        return Err(Error::InvalidParams("empty G range".into()));
    }
    for &g in g_values {
        if !(g > 0.0 && g < spectrum::DIVERGENCE_GUARD * params_base.omega_m) {
            return Err(Error::InvalidParams(format!(
                "limit curves need 0 < G < {} omega_m (got {g})",
                spectrum::DIVERGENCE_GUARD
            )));
        }
    }
    let points: Result<Vec<_>> = g_values
        .par_iter()
        .map(|&g| limit_point(&params_base.with_g_abs(g), mode, schedule))
        .collect();
    Ok(assemble_curve("G", g_values, points?))
}

/// Instantaneous-minimum curve versus cavity decay at fixed coupling.
pub fn limit_curve_vs_kappa(
    params_base: &SystemParams,
    kappa_values: &[f64],
    mode: SweepMode,
) -> Result<LimitCurve> {
    if kappa_values.is_empty() {
        return Err(Error::InvalidParams("empty kappa range".into()));
    }
    for &k in kappa_values {
        if k <= 0.0 || !k.is_finite() {
            return Err(Error::InvalidParams(format!(
                "kappa values must be > 0 (got {k})"
            )));
        }
    }
    let points: Result<Vec<_>> = kappa_values
        .par_iter()
        .map(|&k| limit_point(&params_base.with_kappa(k), mode, None))
        .collect();
    Ok(assemble_curve("kappa", kappa_values, points?))
}
