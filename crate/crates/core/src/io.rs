//! Deterministic CSV and JSON serialization of simulation products.
//!
//! Every float is written with 17 significant digits (`{:.16e}`), enough to
//! round-trip f64 exactly, so identical inputs produce byte-identical files.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::moments::Trajectory;
use crate::oracle::CompareReport;
use crate::params::SystemParams;
use crate::spectrum::IslandSpec;
use crate::sweep::{LimitCurve, SweepGrid, SweepMode};

/// Full round-trip decimal rendering of one f64.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// RFC-4180 quoting for the rare label that needs it.
fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Trajectory CSV: `t,n_b,n_a`, then the eight cross and squeezing moments
/// split into real and imaginary columns in the moment-vector order (the
/// occupations are real by invariant and appear once).
pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    let mut out = String::new();
    out.push_str("t,n_b,n_a");
    for label in &crate::moments::MOMENT_LABELS[2..] {
        out.push_str(&format!(",re_{label},im_{label}"));
    }
    out.push('\n');
    for (k, &t) in traj.times.iter().enumerate() {
        let s = &traj.states[k];
        out.push_str(&fmt17(t));
        out.push(',');
        out.push_str(&fmt17(traj.n_b[k]));
        out.push(',');
        out.push_str(&fmt17(traj.n_a[k]));
        for z in &s.v[2..] {
            out.push(',');
            out.push_str(&fmt17(z.re));
            out.push(',');
            out.push_str(&fmt17(z.im));
        }
        out.push('\n');
    }
    out
}

/// Grid CSV: first row is the axis-1 name followed by the axis-2 sample
/// values; each following row starts with its axis-1 value.
pub fn sweep_grid_to_csv(grid: &SweepGrid) -> String {
    let mut out = String::new();
    out.push_str(&csv_field(&grid.axis1.name));
    for v in &grid.axis2.values {
        out.push(',');
        out.push_str(&fmt17(*v));
    }
    out.push('\n');
    for (i, row) in grid.values.iter().enumerate() {
        out.push_str(&fmt17(grid.axis1.values[i]));
        for v in row {
            out.push(',');
            out.push_str(&fmt17(*v));
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct AxisMeta<'a> {
    name: &'a str,
    unit: &'a str,
    count: usize,
}

#[derive(Serialize)]
struct GridSidecar<'a> {
    axis1: AxisMeta<'a>,
    axis2: AxisMeta<'a>,
    mode: SweepMode,
    params_base: &'a SystemParams,
    global_min: (usize, usize, f64),
    min_cells: Vec<(usize, usize, f64)>,
}

fn axis_unit(name: &str, si: bool) -> &'static str {
    match (name == "t", si) {
        (true, false) => "1/omega_m",
        (true, true) => "s",
        (false, false) => "omega_m",
        (false, true) => "Hz",
    }
}

/// JSON sidecar for a grid export: axis metadata, the sweep mode, the base
/// parameters, the global minimum cell and all strict local minima. `si`
/// selects the unit labels matching an SI-scaled CSV.
pub fn sweep_sidecar_json(
    grid: &SweepGrid,
    mode: SweepMode,
    params_base: &SystemParams,
    si: bool,
) -> Result<String> {
    let sidecar = GridSidecar {
        axis1: AxisMeta {
            name: &grid.axis1.name,
            unit: axis_unit(&grid.axis1.name, si),
            count: grid.axis1.values.len(),
        },
        axis2: AxisMeta {
            name: &grid.axis2.name,
            unit: axis_unit(&grid.axis2.name, si),
            count: grid.axis2.values.len(),
        },
        mode,
        params_base,
        global_min: grid.global_minimum(),
        min_cells: grid.local_minima(),
    };
    serde_json::to_string_pretty(&sidecar).map_err(|e| Error::InvalidParams(e.to_string()))
}

/// Limit-curve CSV with the numeric minimum, its time, and the four analytic
/// reference limits per abscissa value.
pub fn limit_curve_to_csv(curve: &LimitCurve) -> String {
    let mut out = String::new();
    out.push_str(&csv_field(&curve.abscissa.name));
    out.push_str(",numeric_min,t_min,n_ins_rwa,n_ins_zero_temp,n_ins_upper,n_ins_lower\n");
    for (k, &x) in curve.abscissa.values.iter().enumerate() {
        for (i, v) in [
            x,
            curve.n_min[k],
            curve.t_min[k],
            curve.limit_rwa[k],
            curve.limit_zero_temp[k],
            curve.limit_upper[k],
            curve.limit_lower[k],
        ]
        .iter()
        .enumerate()
        {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&fmt17(*v));
        }
        out.push('\n');
    }
    out
}

/// Frequency-matching catalog as JSON.
pub fn island_catalog_to_json(islands: &[IslandSpec]) -> Result<String> {
    serde_json::to_string_pretty(islands).map_err(|e| Error::InvalidParams(e.to_string()))
}

/// Oracle comparison report as JSON.
pub fn compare_report_to_json(report: &CompareReport) -> Result<String> {
    serde_json::to_string_pretty(report).map_err(|e| Error::InvalidParams(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{build_matrices, initial_vector, propagate};
    use crate::params::preset;
    use crate::sweep::{sweep_time_g, AxisSpec};

    #[test]
    fn fmt17_round_trips() {
        for x in [
            0.0,
            1.0,
            -1.0,
            0.1,
            std::f64::consts::PI,
            1.2345678901234567e-12,
            9.87e300,
            -4.4e-300,
        ] {
            let s = fmt17(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, x, "{s}");
        }
    }

    #[test]
    fn trajectory_csv_shape_and_header() {
        let p = preset("paper_fig1").unwrap().params;
        let mat = build_matrices(&p).unwrap();
        let v0 = initial_vector(p.n_th).unwrap();
        let traj = propagate(&mat, &v0, &[0.0, 1.0, 2.0]).unwrap();
        let csv = trajectory_to_csv(&traj);
        let mut lines = csv.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("t,n_b,n_a,re_adagb,im_adagb,re_abdag,im_abdag"));
        assert_eq!(header.split(',').count(), 3 + 16);
        assert_eq!(lines.count(), 3);
        // First row: t = 0, n_b = 1000.
        let row0: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(row0[0].parse::<f64>().unwrap(), 0.0);
        assert_eq!(row0[1].parse::<f64>().unwrap(), 1000.0);
    }

    #[test]
    fn exports_are_deterministic() {
        let p = preset("paper_fig1").unwrap().params;
        let g_values = [0.1, 0.2];
        let t_values = [0.0, 0.5, 1.0];
        let a = sweep_time_g(&p, &g_values, &t_values, SweepMode::Full).unwrap();
        let b = sweep_time_g(&p, &g_values, &t_values, SweepMode::Full).unwrap();
        assert_eq!(sweep_grid_to_csv(&a), sweep_grid_to_csv(&b));
        assert_eq!(
            sweep_sidecar_json(&a, SweepMode::Full, &p, false).unwrap(),
            sweep_sidecar_json(&b, SweepMode::Full, &p, false).unwrap()
        );
    }

    #[test]
    fn grid_csv_layout() {
        let grid = SweepGrid {
            axis1: AxisSpec {
                name: "G".into(),
                values: vec![0.1, 0.2],
            },
            axis2: AxisSpec {
                name: "t".into(),
                values: vec![0.0, 1.0, 2.0],
            },
            values: vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]],
        };
        let csv = sweep_grid_to_csv(&grid);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("G,"));
        assert_eq!(lines[1].split(',').count(), 4);
        let corner: f64 = lines[1].split(',').next().unwrap().parse().unwrap();
        assert_eq!(corner, 0.1);
    }

    #[test]
    fn quoting_is_rfc4180() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("with,comma"), "\"with,comma\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    }
}
