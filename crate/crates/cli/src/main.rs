//! Command-line front end: time evolutions, (t, G) sweeps, cooling-limit
//! curves, the frequency-matching catalog, and the master-equation oracle,
//! all emitted as CSV/JSON for external plotting.
//!
//! Exit codes: 0 on success, 2 for configuration/usage errors, 3 for runtime
//! (propagation) errors.

mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use omcool::params::{preset, ConfigFile, SystemParams, PRESET_NAMES};
use omcool::{Error, Result};

use spec::{
    execute_with_manifest, load_schedule, replay, EvolveSpec, LimitAxis, LimitsSpec, MatchSpec,
    Mode, OracleSpec, RangeSpec, RunSpec, SweepSpec,
};

#[derive(Parser)]
#[command(
    name = "omcool",
    version,
    about = "Cooling dynamics and cooling limits of a driven optomechanical system"
)]
struct Cli {
    /// Cap the worker threads used for sweeps (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

/// Where the system parameters come from.
#[derive(Args, Debug)]
struct ParamSource {
    /// Named preset: paper_fig1, microtoroid, membrane.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// JSON config file (see README for the schema).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the coupling magnitude |G| (omega_m units).
    #[arg(long)]
    g: Option<f64>,
    /// Override the bath occupancy n_th.
    #[arg(long)]
    n_th: Option<f64>,
    /// Emit SI axes (seconds, Hz) using the preset's absolute frequency.
    #[arg(long, default_value_t = false)]
    si: bool,
}

impl ParamSource {
    /// Resolve to parameters plus the SI scale when requested.
    fn resolve(&self) -> Result<(SystemParams, Option<f64>)> {
        let (mut params, si_scale) = match (&self.preset, &self.config) {
            (Some(name), None) => {
                let p = preset(name)?;
                (p.params, p.omega_m_si)
            }
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    Error::InvalidParams(format!("cannot read {}: {e}", path.display()))
                })?;
                let cfg: ConfigFile = serde_json::from_str(&text)
                    .map_err(|e| Error::InvalidParams(format!("bad config: {e}")))?;
                (cfg.resolve()?.params, None)
            }
            _ => {
                return Err(Error::InvalidParams(
                    "exactly one of --preset or --config is required".into(),
                ))
            }
        };
        if let Some(g) = self.g {
            if !g.is_finite() || g < 0.0 {
                return Err(Error::InvalidParams("--g must be finite and >= 0".into()));
            }
            params.g = Complex64::new(g, 0.0);
        }
        if let Some(n_th) = self.n_th {
            params.n_th = n_th;
        }
        params.validate()?;
        let si_omega_m = if self.si {
            Some(si_scale.ok_or_else(|| {
                Error::InvalidParams(
                    "--si needs a preset with an absolute frequency (microtoroid, membrane)".into(),
                )
            })?)
        } else {
            None
        };
        Ok((params, si_omega_m))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Propagate one trajectory and write trajectory.csv.
    Evolve {
        #[command(flatten)]
        source: ParamSource,
        #[arg(long, value_enum, default_value = "full")]
        mode: Mode,
        /// End of the time grid (1/omega_m units).
        #[arg(long, default_value_t = 200.0)]
        t_max: f64,
        /// Number of samples after t = 0.
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        /// Piecewise-constant kappa(t) schedule (JSON file).
        #[arg(long)]
        kappa_schedule: Option<PathBuf>,
        /// Also emit a gnuplot stub.
        #[arg(long, default_value_t = false)]
        gnuplot_stub: bool,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Fill a (G, t) map of N_b and write grid.csv + grid_meta.json.
    Sweep {
        #[command(flatten)]
        source: ParamSource,
        #[arg(long, value_enum, default_value = "full")]
        mode: Mode,
        /// Coupling axis as start:stop:count.
        #[arg(long, value_parser = RangeSpec::parse)]
        g_axis: RangeSpec,
        /// Time axis as start:stop:count (must start at 0).
        #[arg(long, value_parser = RangeSpec::parse)]
        t_axis: RangeSpec,
        #[arg(long, default_value_t = false)]
        gnuplot_stub: bool,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Instantaneous-minimum curve vs G or kappa, with analytic references.
    Limits {
        #[command(flatten)]
        source: ParamSource,
        #[arg(long, value_enum, default_value = "full")]
        mode: Mode,
        /// Abscissa of the curve.
        #[arg(long, value_enum)]
        vs: LimitAxis,
        /// Abscissa samples as start:stop:count.
        #[arg(long, value_parser = RangeSpec::parse)]
        range: RangeSpec,
        /// Piecewise-constant kappa(t) schedule (JSON file), G abscissa only.
        #[arg(long)]
        kappa_schedule: Option<PathBuf>,
        #[arg(long, default_value_t = false)]
        gnuplot_stub: bool,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Emit the frequency-matching island catalog as JSON.
    Match {
        /// Largest p to enumerate (>= 3).
        #[arg(long)]
        p_max: u32,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Cross-check the moment engine against the Fock-space master equation.
    Oracle {
        #[command(flatten)]
        source: ParamSource,
        /// Photon-space truncation.
        #[arg(long, default_value_t = 12)]
        dim_a: usize,
        /// Phonon-space truncation.
        #[arg(long, default_value_t = 12)]
        dim_b: usize,
        #[arg(long, default_value_t = 50.0)]
        t_max: f64,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Absolute agreement tolerance on n_b.
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        /// Abort threshold for top-level population.
        #[arg(long, default_value_t = 1e-2)]
        leak_tolerance: f64,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Print a named preset (or list them all).
    Preset {
        /// Preset name; omit to list.
        name: Option<String>,
    },
    /// Re-run a recorded manifest into a fresh output directory.
    Replay {
        /// Manifest written by a previous run.
        #[arg(long)]
        from_manifest: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Error::InvalidParams("--jobs must be >= 1".into()));
        }
        // Ignore the error when a pool already exists (e.g. repeated calls
        // in tests); sweeps stay deterministic regardless of worker count.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }

    match cli.command {
        Command::Evolve {
            source,
            mode,
            t_max,
            samples,
            kappa_schedule,
            gnuplot_stub,
            out,
        } => {
            let (params, si_omega_m) = source.resolve()?;
            let schedule = kappa_schedule.as_ref().map(load_schedule).transpose()?;
            let spec = RunSpec::Evolve(EvolveSpec {
                params,
                mode,
                t_max,
                samples,
                schedule,
                si_omega_m,
                gnuplot: gnuplot_stub,
            });
            let manifest = execute_with_manifest(&spec, &out)?;
            eprintln!(
                "wrote {} (+ manifest.json) in {:.2} s",
                manifest.outputs.join(", "),
                manifest.duration_seconds
            );
            Ok(())
        }
        Command::Sweep {
            source,
            mode,
            g_axis,
            t_axis,
            gnuplot_stub,
            out,
        } => {
            let (params, si_omega_m) = source.resolve()?;
            let spec = RunSpec::Sweep(SweepSpec {
                params,
                mode,
                g: g_axis,
                t: t_axis,
                si_omega_m,
                gnuplot: gnuplot_stub,
            });
            let manifest = execute_with_manifest(&spec, &out)?;
            eprintln!(
                "wrote {} (+ manifest.json) in {:.2} s",
                manifest.outputs.join(", "),
                manifest.duration_seconds
            );
            Ok(())
        }
        Command::Limits {
            source,
            mode,
            vs,
            range,
            kappa_schedule,
            gnuplot_stub,
            out,
        } => {
            let (params, si_omega_m) = source.resolve()?;
            let schedule = kappa_schedule.as_ref().map(load_schedule).transpose()?;
            let spec = RunSpec::Limits(LimitsSpec {
                params,
                mode,
                vs,
                range,
                schedule,
                si_omega_m,
                gnuplot: gnuplot_stub,
            });
            let manifest = execute_with_manifest(&spec, &out)?;
            eprintln!(
                "wrote {} (+ manifest.json) in {:.2} s",
                manifest.outputs.join(", "),
                manifest.duration_seconds
            );
            Ok(())
        }
        Command::Match { p_max, out } => {
            let spec = RunSpec::Match(MatchSpec { p_max });
            execute_with_manifest(&spec, &out)?;
            eprintln!("wrote islands.json (+ manifest.json)");
            Ok(())
        }
        Command::Oracle {
            source,
            dim_a,
            dim_b,
            t_max,
            samples,
            tol,
            leak_tolerance,
            out,
        } => {
            let (params, _) = source.resolve()?;
            let spec = RunSpec::Oracle(OracleSpec {
                params,
                dim_a,
                dim_b,
                t_max,
                samples,
                tol_abs: tol,
                leak_tolerance,
            });
            let manifest = execute_with_manifest(&spec, &out)?;
            eprintln!(
                "wrote report.json (+ manifest.json) in {:.2} s",
                manifest.duration_seconds
            );
            Ok(())
        }
        Command::Preset { name } => {
            match name {
                Some(name) => {
                    let p = preset(&name)?;
                    let doc = serde_json::json!({
                        "name": name,
                        "description": p.description,
                        "params": p.params,
                        "omega_m_si_rad_per_s": p.omega_m_si,
                    });
                    println!("{}", serde_json::to_string_pretty(&doc).unwrap());
                }
                None => {
                    for name in PRESET_NAMES {
                        let p = preset(name).unwrap();
                        println!("{name}: {}", p.description);
                    }
                }
            }
            Ok(())
        }
        Command::Replay { from_manifest, out } => {
            let manifest = replay(&from_manifest, &out)?;
            eprintln!(
                "replayed {} (+ manifest.json) in {:.2} s",
                manifest.outputs.join(", "),
                manifest.duration_seconds
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
