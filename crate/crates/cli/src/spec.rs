//! Fully resolved run specifications and their execution.
//!
//! Every subcommand first resolves its arguments into a serializable spec;
//! the spec (not the argv) is what the manifest records, so replaying a
//! manifest reproduces the outputs byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use omcool::io;
use omcool::moments::{self, initial_vector, KappaSchedule};
use omcool::oracle::{compare, FockConfig};
use omcool::params::SystemParams;
use omcool::sweep::{self, SweepMode};
use omcool::{Error, Result};

/// Propagator selector exposed on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Full,
    Rwa,
    ZeroTemp,
}

impl From<Mode> for SweepMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Full => SweepMode::Full,
            Mode::Rwa => SweepMode::Rwa,
            Mode::ZeroTemp => SweepMode::ZeroTemp,
        }
    }
}

/// `start:stop:count` sampling of one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl RangeSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::InvalidParams(format!(
                "range `{text}` must be start:stop:count"
            )));
        }
        let start: f64 = parts[0]
            .parse()
            .map_err(|_| Error::InvalidParams(format!("bad range start `{}`", parts[0])))?;
        let stop: f64 = parts[1]
            .parse()
            .map_err(|_| Error::InvalidParams(format!("bad range stop `{}`", parts[1])))?;
        let count: usize = parts[2]
            .parse()
            .map_err(|_| Error::InvalidParams(format!("bad range count `{}`", parts[2])))?;
        let r = Self { start, stop, count };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidParams("range count must be >= 1".into()));
        }
        if !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::InvalidParams(
                "range endpoints must be finite".into(),
            ));
        }
        if self.count == 1 {
            if self.stop != self.start {
                return Err(Error::InvalidParams(
                    "single-point range needs stop == start".into(),
                ));
            }
        } else if self.stop <= self.start {
            return Err(Error::InvalidParams("range needs stop > start".into()));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        (0..self.count)
            .map(|k| self.start + (self.stop - self.start) * k as f64 / (self.count - 1) as f64)
            .collect()
    }
}

/// Time-series run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvolveSpec {
    pub params: SystemParams,
    pub mode: Mode,
    pub t_max: f64,
    /// Number of samples after t = 0 (the grid has samples + 1 points).
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<KappaSchedule>,
    /// Mechanical angular frequency in rad/s when SI output is requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub si_omega_m: Option<f64>,
    #[serde(default)]
    pub gnuplot: bool,
}

/// 2-D (G, t) map.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    pub params: SystemParams,
    pub mode: Mode,
    pub g: RangeSpec,
    pub t: RangeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub si_omega_m: Option<f64>,
    #[serde(default)]
    pub gnuplot: bool,
}

/// Which abscissa a limit curve runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum LimitAxis {
    G,
    Kappa,
}

/// Instantaneous-limit curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitsSpec {
    pub params: SystemParams,
    pub mode: Mode,
    pub vs: LimitAxis,
    pub range: RangeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<KappaSchedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub si_omega_m: Option<f64>,
    #[serde(default)]
    pub gnuplot: bool,
}

/// Frequency-matching catalog.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchSpec {
    pub p_max: u32,
}

/// Master-equation cross-check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleSpec {
    pub params: SystemParams,
    pub dim_a: usize,
    pub dim_b: usize,
    pub t_max: f64,
    pub samples: usize,
    pub tol_abs: f64,
    pub leak_tolerance: f64,
}

/// A fully resolved run of any subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "snake_case")]
pub enum RunSpec {
    Evolve(EvolveSpec),
    Sweep(SweepSpec),
    Limits(LimitsSpec),
    Match(MatchSpec),
    Oracle(OracleSpec),
}

/// Written next to every output; replaying it reproduces the outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    #[serde(flatten)]
    pub spec: RunSpec,
    pub outputs: Vec<String>,
    pub duration_seconds: f64,
}

fn time_grid(t_max: f64, samples: usize) -> Result<Vec<f64>> {
    if samples == 0 {
        return Err(Error::InvalidParams("samples must be >= 1".into()));
    }
    if t_max <= 0.0 || !t_max.is_finite() {
        return Err(Error::InvalidParams("t-max must be finite and > 0".into()));
    }
    Ok((0..=samples)
        .map(|k| t_max * k as f64 / samples as f64)
        .collect())
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<()> {
    fs::create_dir_all(dir)
        .map_err(|e| Error::InvalidParams(format!("cannot create {}: {e}", dir.display())))?;
    fs::write(dir.join(name), content).map_err(|e| {
        Error::SingularPropagation(format!("cannot write {}: {e}", dir.join(name).display()))
    })
}

fn scale_times(times: &mut [f64], si_omega_m: Option<f64>) {
    if let Some(w) = si_omega_m {
        for t in times {
            *t /= w;
        }
    }
}

/// rate (omega_m units) -> ordinary frequency in Hz.
fn rate_to_hz(values: &mut [f64], si_omega_m: Option<f64>) {
    if let Some(w) = si_omega_m {
        for v in values {
            *v *= w / std::f64::consts::TAU;
        }
    }
}

impl RunSpec {
    /// Execute into `out_dir`, returning the list of files written (manifest
    /// excluded).
    pub fn execute(&self, out_dir: &Path) -> Result<Vec<String>> {
        match self {
            RunSpec::Evolve(spec) => run_evolve(spec, out_dir),
            RunSpec::Sweep(spec) => run_sweep(spec, out_dir),
            RunSpec::Limits(spec) => run_limits(spec, out_dir),
            RunSpec::Match(spec) => run_match(spec, out_dir),
            RunSpec::Oracle(spec) => run_oracle(spec, out_dir),
        }
    }
}

fn run_evolve(spec: &EvolveSpec, out: &Path) -> Result<Vec<String>> {
    spec.params.validate()?;
    let grid = time_grid(spec.t_max, spec.samples)?;
    let v0 = initial_vector(match spec.mode {
        Mode::ZeroTemp => 0.0,
        _ => spec.params.n_th,
    })?;
    let mut traj = match (&spec.schedule, spec.mode) {
        (Some(_), Mode::Rwa) => {
            return Err(Error::InvalidParams(
                "kappa schedules apply to the full propagator, not the RWA mode".into(),
            ))
        }
        (Some(schedule), _) => {
            let p = match spec.mode {
                Mode::ZeroTemp => spec.params.with_n_th(0.0),
                _ => spec.params,
            };
            moments::propagate_modulated(&p, schedule, &v0, &grid)?
        }
        (None, Mode::Rwa) => {
            let mat = moments::build_matrices_rwa(&spec.params)?;
            moments::propagate(&mat, &v0, &grid)?
        }
        (None, Mode::Full) => {
            let mat = moments::build_matrices(&spec.params)?;
            moments::propagate(&mat, &v0, &grid)?
        }
        (None, Mode::ZeroTemp) => {
            let mat = moments::build_matrices(&spec.params.with_n_th(0.0))?;
            moments::propagate(&mat, &v0, &grid)?
        }
    };
    scale_times(&mut traj.times, spec.si_omega_m);
    write_file(out, "trajectory.csv", &io::trajectory_to_csv(&traj))?;
    let mut outputs = vec!["trajectory.csv".to_string()];
    if spec.gnuplot {
        let gp = "set datafile separator ','\nset logscale y\nset xlabel 't'\n\
                  set ylabel 'n_b'\nplot 'trajectory.csv' using 1:2 skip 1 with lines \
                  title 'n_b', '' using 1:3 skip 1 with lines title 'n_a'\n";
        write_file(out, "plot.gp", gp)?;
        outputs.push("plot.gp".to_string());
    }
    Ok(outputs)
}

fn run_sweep(spec: &SweepSpec, out: &Path) -> Result<Vec<String>> {
    spec.params.validate()?;
    spec.g.validate()?;
    spec.t.validate()?;
    let g_values = spec.g.values();
    let t_values = spec.t.values();
    let mut grid = sweep::sweep_time_g(&spec.params, &g_values, &t_values, spec.mode.into())?;
    scale_times(&mut grid.axis2.values, spec.si_omega_m);
    rate_to_hz(&mut grid.axis1.values, spec.si_omega_m);
    let sidecar = io::sweep_sidecar_json(
        &grid,
        spec.mode.into(),
        &spec.params,
        spec.si_omega_m.is_some(),
    )?;
    write_file(out, "grid.csv", &io::sweep_grid_to_csv(&grid))?;
    write_file(out, "grid_meta.json", &sidecar)?;
    let mut outputs = vec!["grid.csv".to_string(), "grid_meta.json".to_string()];
    if spec.gnuplot {
        let gp = "set datafile separator ','\nset view map\nset logscale cb\n\
                  splot 'grid.csv' matrix nonuniform with image\n";
        write_file(out, "plot.gp", gp)?;
        outputs.push("plot.gp".to_string());
    }
    Ok(outputs)
}

fn run_limits(spec: &LimitsSpec, out: &Path) -> Result<Vec<String>> {
    spec.params.validate()?;
    spec.range.validate()?;
    let values = spec.range.values();
    let mut curve = match spec.vs {
        LimitAxis::G => sweep::limit_curve_vs_g(
            &spec.params,
            &values,
            spec.mode.into(),
            spec.schedule.as_ref(),
        )?,
        LimitAxis::Kappa => {
            if spec.schedule.is_some() {
                return Err(Error::InvalidParams(
                    "kappa schedules conflict with a kappa abscissa".into(),
                ));
            }
            sweep::limit_curve_vs_kappa(&spec.params, &values, spec.mode.into())?
        }
    };
    rate_to_hz(&mut curve.abscissa.values, spec.si_omega_m);
    scale_times(&mut curve.t_min, spec.si_omega_m);
    write_file(out, "limits.csv", &io::limit_curve_to_csv(&curve))?;
    let mut outputs = vec!["limits.csv".to_string()];
    if spec.gnuplot {
        let gp = "set datafile separator ','\nset logscale y\nset xlabel 'abscissa'\n\
                  plot 'limits.csv' using 1:2 skip 1 with points title 'numeric', \
                  '' using 1:7 skip 1 with lines title 'matched bound'\n";
        write_file(out, "plot.gp", gp)?;
        outputs.push("plot.gp".to_string());
    }
    Ok(outputs)
}

fn run_match(spec: &MatchSpec, out: &Path) -> Result<Vec<String>> {
    let islands = omcool::spectrum::island_catalog(spec.p_max)?;
    write_file(out, "islands.json", &io::island_catalog_to_json(&islands)?)?;
    Ok(vec!["islands.json".to_string()])
}

fn run_oracle(spec: &OracleSpec, out: &Path) -> Result<Vec<String>> {
    spec.params.validate()?;
    let mut cfg = FockConfig::new(spec.dim_a, spec.dim_b);
    cfg.leak_tolerance = spec.leak_tolerance;
    let grid = time_grid(spec.t_max, spec.samples)?;
    let report = compare(&spec.params, &cfg, &grid, spec.tol_abs)?;
    write_file(out, "report.json", &io::compare_report_to_json(&report)?)?;
    Ok(vec!["report.json".to_string()])
}

/// Execute a spec and write the manifest next to the outputs.
pub fn execute_with_manifest(spec: &RunSpec, out_dir: &Path) -> Result<Manifest> {
    let started = std::time::Instant::now();
    let outputs = spec.execute(out_dir)?;
    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        spec: spec.clone(),
        outputs,
        duration_seconds: started.elapsed().as_secs_f64(),
    };
    let json =
        serde_json::to_string_pretty(&manifest).map_err(|e| Error::InvalidParams(e.to_string()))?;
    write_file(out_dir, "manifest.json", &json)?;
    Ok(manifest)
}

/// Load a manifest and re-run its spec into a fresh directory.
pub fn replay(manifest_path: &Path, out_dir: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(manifest_path).map_err(|e| {
        Error::InvalidParams(format!("cannot read {}: {e}", manifest_path.display()))
    })?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidParams(format!("bad manifest: {e}")))?;
    execute_with_manifest(&manifest.spec, out_dir)
}

/// Parse a kappa-schedule JSON file: `[{"t_start": ..., "kappa": ...}, ...]`.
pub fn load_schedule(path: &PathBuf) -> Result<KappaSchedule> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidParams(format!("cannot read {}: {e}", path.display())))?;
    let segments = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidParams(format!("bad schedule file: {e}")))?;
    let schedule = KappaSchedule { segments };
    schedule.validate()?;
    Ok(schedule)
}
