//! Non-RWA eigenfrequency theory, the frequency-matching island catalog, the
//! zero-temperature analytic dynamics, and the instantaneous-state
//! cooling-limit formulas.
//!
//! On the red sideband the hybridized eigenmodes oscillate at
//! `omega_pm = sqrt(omega_m^2 ± 2|G| omega_m)`. The counter-rotating
//! interaction beats at `omega_+ + omega_-`, the rotating one at
//! `omega_+ - omega_-`; the deepest instantaneous minima occur when both
//! cosines in the carrier-envelope product hit ±1 with matching signs:
//! `(omega_+ + omega_-) t = p pi`, `(omega_+ - omega_-) t = q pi` with p, q
//! both odd or both even and p > q ("both odd integers or both even
//! integers"). Each island (p, q) has `|G| = pq/(p^2+q^2) omega_m` and
//! `t = sqrt(p^2+q^2) pi/(2 omega_m)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::rwa;

/// All cooling-limit formulas have denominators `omega_m^2 - 4|G|^2`; report
/// a divergence once |G| crosses this fraction of omega_m.
pub const DIVERGENCE_GUARD: f64 = 0.499;

/// Eigenfrequencies of the hybridized normal modes (resonant red sideband).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenFrequencies {
    pub omega_plus: f64,
    pub omega_minus: f64,
    /// Carrier frequency omega_+ + omega_- (counter-rotating beat).
    pub sum: f64,
    /// Envelope frequency omega_+ - omega_- (rotating beat).
    pub diff: f64,
}

/// `omega_pm = sqrt(omega_m^2 ± 2 g omega_m)` for `0 <= g < omega_m/2`.
pub fn eigenfrequencies(g_abs: f64, omega_m: f64) -> Result<EigenFrequencies> {
    if !g_abs.is_finite() || g_abs < 0.0 || !omega_m.is_finite() || omega_m <= 0.0 {
        return Err(Error::InvalidParams(
            "eigenfrequencies need finite |G| >= 0 and omega_m > 0".into(),
        ));
    }
    if g_abs >= omega_m / 2.0 {
        return Err(Error::BackactionDivergence {
            g: g_abs,
            half_omega_m: omega_m / 2.0,
        });
    }
    let plus = (omega_m * omega_m + 2.0 * g_abs * omega_m).sqrt();
    let minus = (omega_m * omega_m - 2.0 * g_abs * omega_m).sqrt();
    Ok(EigenFrequencies {
        omega_plus: plus,
        omega_minus: minus,
        sum: plus + minus,
        diff: plus - minus,
    })
}

fn guard_divergence(params: &SystemParams) -> Result<()> {
    let g = params.g_abs();
    if g >= DIVERGENCE_GUARD * params.omega_m {
        return Err(Error::BackactionDivergence {
            g,
            half_omega_m: params.omega_m / 2.0,
        });
    }
    Ok(())
}

fn require_resonance(params: &SystemParams) -> Result<()> {
    if !params.on_resonance() {
        return Err(Error::InvalidParams(format!(
            "zero-temperature closed form holds on resonance delta_prime = -omega_m \
             (got delta_prime = {})",
            params.delta_prime
        )));
    }
    Ok(())
}

/// Zero-temperature mean phonon number from quantum backaction:
///
/// `|G|^2 [1 - e^{-(kappa+gamma)t/2} cos((w+ + w-)t) cos((w+ - w-)t)]
///  / [2 (omega_m^2 - 4|G|^2)]`.
///
/// Independent of n_th: this population is created from vacuum by the
/// counter-rotating interaction.
pub fn nb_zero_temp_analytic(params: &SystemParams, t: f64) -> Result<f64> {
    params.validate()?;
    require_resonance(params)?;
    guard_divergence(params)?;
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidParams("t must be finite and >= 0".into()));
    }
    let g = params.g_abs();
    let w = eigenfrequencies(g, params.omega_m)?;
    let envelope = (-(params.kappa + params.gamma) * t / 2.0).exp();
    let mixing = (w.sum * t).cos() * (w.diff * t).cos();
    let denom = 2.0 * (params.omega_m * params.omega_m - 4.0 * g * g);
    Ok(g * g * (1.0 - envelope * mixing) / denom)
}

/// Steady-state backaction limit `|G|^2 / [2 (omega_m^2 - 4 |G|^2)]`.
pub fn nb_zero_temp_steady(params: &SystemParams) -> Result<f64> {
    params.validate()?;
    guard_divergence(params)?;
    let g = params.g_abs();
    Ok(g * g / (2.0 * (params.omega_m * params.omega_m - 4.0 * g * g)))
}

/// A frequency-matching island (p, q).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IslandSpec {
    pub p: u32,
    pub q: u32,
    /// Optimal coupling pq/(p^2+q^2) in omega_m units (exact rational-to-
    /// float conversion).
    pub g_opt: f64,
    /// Optimal time sqrt(p^2+q^2) pi / (2 omega_m).
    pub t_opt: f64,
    /// gcd(p, q) > 1: the (p, q) ratio reduces to a smaller island, so g_opt
    /// may duplicate an earlier entry while t_opt stays distinct.
    pub reducible: bool,
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Enumerate all islands with parity-matched p > q >= 1, p <= p_max, sorted
/// by t_opt ascending (ties broken by (p, q)). Reducible pairs are retained
/// and flagged: their optimal times are distinct even when their couplings
/// coincide.
pub fn island_catalog(p_max: u32) -> Result<Vec<IslandSpec>> {
    if p_max < 3 {
        return Err(Error::InvalidParams(
            "island catalog needs p_max >= 3".into(),
        ));
    }
    let mut islands = Vec::new();
    for p in 2..=p_max {
        for q in 1..p {
            if (p - q) % 2 != 0 {
                continue;
            }
            let norm = p * p + q * q;
            islands.push(IslandSpec {
                p,
                q,
                g_opt: (p * q) as f64 / norm as f64,
                t_opt: (norm as f64).sqrt() * std::f64::consts::PI / 2.0,
                reducible: gcd(p, q) > 1,
            });
        }
    }
    islands.sort_by_key(|i| (i.p * i.p + i.q * i.q, i.p, i.q));
    Ok(islands)
}

/// Zero-temperature instantaneous-state cooling limit at a q = 1 matched
/// coupling, and the time of the first minimum:
///
/// `(pi kappa |G| / [8 (omega_m^2 - 4|G|^2)], pi / (omega_+ - omega_-))`.
///
/// Terms carrying gamma are dropped (kappa >> gamma in practice).
pub fn n_ins_zero_temp(params: &SystemParams) -> Result<(f64, f64)> {
    params.validate()?;
    guard_divergence(params)?;
    let g = params.g_abs();
    if g == 0.0 {
        return Err(Error::InvalidParams(
            "instantaneous-state limit undefined at G = 0".into(),
        ));
    }
    let limit = std::f64::consts::PI * params.kappa * g
        / (8.0 * (params.omega_m * params.omega_m - 4.0 * g * g));
    let w = eigenfrequencies(g, params.omega_m)?;
    Ok((limit, std::f64::consts::PI / w.diff))
}

/// Upper (frequency-unmatched) and lower (matched) instantaneous-state
/// cooling-limit bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InsBounds {
    /// `pi gamma n_th/(4|G|) + pi^2 |G|^4 / [(omega_m^2-|G|^2)(omega_m^2-4|G|^2)]`
    pub upper: f64,
    /// `pi gamma n_th/(4|G|) + pi kappa |G| / [8 (omega_m^2-4|G|^2)]` — the
    /// exact sum of the RWA and zero-temperature limits.
    pub lower: f64,
}

/// Both bounds; `lower` is built as `n_ins_rwa + n_ins_zero_temp` so the
/// compositional identity holds to the last bit.
pub fn n_ins_bounds(params: &SystemParams) -> Result<InsBounds> {
    params.validate()?;
    guard_divergence(params)?;
    let g = params.g_abs();
    let (rwa_limit, _) = rwa::n_ins_rwa(params)?;
    let (zero_t_limit, _) = n_ins_zero_temp(params)?;
    let om2 = params.omega_m * params.omega_m;
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    let backaction_unmatched = pi2 * g.powi(4) / ((om2 - g * g) * (om2 - 4.0 * g * g));
    Ok(InsBounds {
        upper: rwa_limit + backaction_unmatched,
        lower: rwa_limit + zero_t_limit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::preset;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn fig1(g: f64) -> SystemParams {
        preset("paper_fig1").unwrap().params.with_g_abs(g)
    }

    #[test]
    fn eigenfrequencies_at_zero_coupling() {
        let w = eigenfrequencies(0.0, 1.0).unwrap();
        assert_eq!(w.omega_plus, 1.0);
        assert_eq!(w.omega_minus, 1.0);
        assert_eq!(w.sum, 2.0);
        assert_eq!(w.diff, 0.0);
    }

    #[test]
    fn eigenfrequencies_at_first_island() {
        let w = eigenfrequencies(0.3, 1.0).unwrap();
        assert_relative_eq!(w.omega_plus, 1.6f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(w.omega_minus, 0.4f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(w.omega_plus, 1.264911, max_relative = 1e-6);
        assert_relative_eq!(w.omega_minus, 0.632456, max_relative = 1e-6);
        // sqrt(1.6) = 2 sqrt(0.4), so sum/diff = 3 exactly.
        assert_relative_eq!(w.sum / w.diff, 3.0, max_relative = 1e-13);
    }

    #[test]
    fn eigenfrequencies_reduce_to_rwa_form_at_small_coupling() {
        let w = eigenfrequencies(0.05, 1.0).unwrap();
        assert!((w.omega_plus - 1.05).abs() < 2e-3);
        assert!((w.omega_minus - 0.95).abs() < 2e-3);
    }

    #[test]
    fn eigenfrequency_product_identity() {
        for g in [0.0, 0.1, 0.25, 0.3, 0.45, 0.499] {
            let w = eigenfrequencies(g, 1.0).unwrap();
            let want = (1.0f64 - 4.0 * g * g).sqrt();
            assert_abs_diff_eq!(w.omega_plus * w.omega_minus, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn eigenfrequencies_reject_divergence() {
        assert!(matches!(
            eigenfrequencies(0.5, 1.0),
            Err(Error::BackactionDivergence { .. })
        ));
        assert!(matches!(
            eigenfrequencies(-0.1, 1.0),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn zero_temp_curve_starts_at_zero_and_saturates() {
        let p = fig1(0.3).with_n_th(0.0);
        assert_abs_diff_eq!(
            nb_zero_temp_analytic(&p, 0.0).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        let late = nb_zero_temp_analytic(&p, 1e7).unwrap();
        assert_relative_eq!(late, 0.09 / 1.28, max_relative = 1e-9);
        assert_relative_eq!(late, 0.070313, max_relative = 1e-4);
        assert_relative_eq!(nb_zero_temp_steady(&p).unwrap(), late, max_relative = 1e-9);
    }

    #[test]
    fn zero_temp_minimum_at_matched_island_is_deep() {
        // Analytic curve near t_opt(3,1): the matched product cos*cos = +1
        // leaves |G|^2 (1 - envelope) / denom ~ 1.7e-3; the true minimum of
        // the analytic expression in a narrow window is at most that.
        let p = fig1(0.3);
        let t_opt = 10.0f64.sqrt() * std::f64::consts::PI / 2.0;
        let mut best = f64::INFINITY;
        for k in -200..=200 {
            let t = t_opt + k as f64 * 1e-3;
            best = best.min(nb_zero_temp_analytic(&p, t).unwrap());
        }
        let envelope = (-(p.kappa + p.gamma) * t_opt / 2.0).exp();
        let floor = 0.09 * (1.0 - envelope) / 1.28;
        assert_relative_eq!(best, floor, max_relative = 1e-3);
        assert!(best < 2e-3);
    }

    #[test]
    fn zero_temp_curve_respects_envelope_bound() {
        let p = fig1(0.25);
        let cap = |t: f64| {
            let e = (-(p.kappa + p.gamma) * t / 2.0).exp();
            0.0625 * (1.0 + e) / (2.0 * (1.0 - 4.0 * 0.0625))
        };
        for k in 0..=5000 {
            let t = k as f64 * 0.02;
            let v = nb_zero_temp_analytic(&p, t).unwrap();
            assert!(v <= cap(t) + 1e-12, "t={t}");
            assert!(v >= 0.0);
        }
    }

    #[test]
    fn island_catalog_reference_entries() {
        let islands = island_catalog(9).unwrap();
        // Shortest-time island first.
        assert_eq!((islands[0].p, islands[0].q), (3, 1));
        assert_eq!(islands[0].g_opt, 0.3);
        assert_relative_eq!(
            islands[0].t_opt,
            10.0f64.sqrt() * std::f64::consts::PI / 2.0,
            max_relative = 1e-15
        );

        // q = 1 series: 5/26, 7/50 = 0.14, 9/82.
        let q1: Vec<&IslandSpec> = islands.iter().filter(|i| i.q == 1).collect();
        let g: Vec<f64> = q1.iter().map(|i| i.g_opt).collect();
        assert_eq!(g, vec![0.3, 5.0 / 26.0, 0.14, 9.0 / 82.0]);
        assert_relative_eq!(g[1], 0.1923, max_relative = 1e-3);
        assert_relative_eq!(g[3], 0.1098, max_relative = 1e-3);

        // (6,2) duplicates (3,1)'s coupling and is flagged reducible.
        let i62 = islands.iter().find(|i| (i.p, i.q) == (6, 2)).unwrap();
        assert!(i62.reducible);
        assert_eq!(i62.g_opt, 0.3);
        assert!(i62.t_opt > islands[0].t_opt);

        // (4,2) is present and reducible even though (2,1) is parity-invalid.
        let catalog4 = island_catalog(4).unwrap();
        let i42 = catalog4.iter().find(|i| (i.p, i.q) == (4, 2)).unwrap();
        assert!(i42.reducible);
        assert_eq!(i42.g_opt, 0.4);

        assert!(island_catalog(2).is_err());
    }

    #[test]
    fn islands_satisfy_the_matching_condition_exactly() {
        // At g_opt, omega_pm = (p ± q)/sqrt(p^2+q^2), so sum*t = p pi and
        // diff*t = q pi; the mixing product is +1.
        for island in island_catalog(9).unwrap() {
            let w = eigenfrequencies(island.g_opt, 1.0).unwrap();
            let sum_phase = w.sum * island.t_opt;
            let diff_phase = w.diff * island.t_opt;
            assert_abs_diff_eq!(
                sum_phase,
                island.p as f64 * std::f64::consts::PI,
                epsilon = 1e-12
            );
            assert_abs_diff_eq!(
                diff_phase,
                island.q as f64 * std::f64::consts::PI,
                epsilon = 1e-12
            );
            let mixing = sum_phase.cos() * diff_phase.cos();
            assert_abs_diff_eq!(mixing, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn zero_temp_limit_reference_values() {
        let p = fig1(0.3);
        let (limit, t_min) = n_ins_zero_temp(&p).unwrap();
        // pi * 0.01 * 0.3 / (8 * 0.64)
        assert_relative_eq!(limit, 1.8408e-3, max_relative = 1e-4);
        let w = eigenfrequencies(0.3, 1.0).unwrap();
        assert_relative_eq!(t_min, std::f64::consts::PI / w.diff, max_relative = 1e-15);
        // Linear in kappa.
        let (limit_half, _) = n_ins_zero_temp(&p.with_kappa(0.005)).unwrap();
        assert_relative_eq!(limit, 2.0 * limit_half, max_relative = 1e-12);
    }

    #[test]
    fn bounds_compose_exactly_and_match_reference_values() {
        let p = fig1(0.3);
        let bounds = n_ins_bounds(&p).unwrap();
        let (rwa_limit, _) = rwa::n_ins_rwa(&p).unwrap();
        let (zt_limit, _) = n_ins_zero_temp(&p).unwrap();
        assert_eq!(bounds.lower, rwa_limit + zt_limit);
        assert_relative_eq!(bounds.lower, 0.028021, max_relative = 1e-4);
        // upper = 0.026180 + pi^2 * 0.0081 / (0.91 * 0.64)
        let unmatched = std::f64::consts::PI.powi(2) * 0.3f64.powi(4) / (0.91 * 0.64);
        assert_relative_eq!(bounds.upper, 0.0261799 + unmatched, max_relative = 1e-5);
        assert_relative_eq!(bounds.upper, 0.16342, max_relative = 1e-3);
        assert!(bounds.upper >= bounds.lower);
    }

    #[test]
    fn bounds_reduce_to_backaction_terms_in_the_cold_limit() {
        // gamma -> 0, n_th = 0: only the backaction pieces remain. gamma must
        // stay positive for parameter validity; use a negligible value.
        let p = SystemParams::new(
            1.0,
            0.01,
            1e-300,
            -1.0,
            num_complex::Complex64::new(0.3, 0.0),
            0.0,
        )
        .unwrap();
        let bounds = n_ins_bounds(&p).unwrap();
        let (zt_limit, _) = n_ins_zero_temp(&p).unwrap();
        assert_eq!(bounds.lower, zt_limit);
        let unmatched = std::f64::consts::PI.powi(2) * 0.3f64.powi(4) / (0.91 * 0.64);
        assert_relative_eq!(bounds.upper, unmatched, max_relative = 1e-12);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]

        /// Catalog structure holds for any p_max: parity-matched pairs,
        /// couplings strictly inside (0, 0.5), times sorted ascending, and
        /// the matching identity exact at every entry.
        #[test]
        fn island_catalog_structure(p_max in 3u32..40) {
            let islands = island_catalog(p_max).unwrap();
            proptest::prop_assert!(!islands.is_empty());
            for w in islands.windows(2) {
                proptest::prop_assert!(w[0].t_opt <= w[1].t_opt);
            }
            for island in &islands {
                proptest::prop_assert!(island.p > island.q && island.q >= 1);
                proptest::prop_assert_eq!((island.p - island.q) % 2, 0);
                proptest::prop_assert!(island.g_opt > 0.0 && island.g_opt <= 0.5);
                proptest::prop_assert_eq!(island.reducible, gcd(island.p, island.q) > 1);
                let w = eigenfrequencies(island.g_opt.min(0.499_999), 1.0).unwrap();
                if island.g_opt < 0.4999 {
                    let mix = (w.sum * island.t_opt).cos() * (w.diff * island.t_opt).cos();
                    proptest::prop_assert!((mix - 1.0).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn divergence_guard_fires_at_0499() {
        let p = fig1(0.4995);
        assert!(matches!(
            nb_zero_temp_analytic(&p, 1.0),
            Err(Error::BackactionDivergence { .. })
        ));
        assert!(matches!(
            n_ins_zero_temp(&p),
            Err(Error::BackactionDivergence { .. })
        ));
        assert!(matches!(
            n_ins_bounds(&p),
            Err(Error::BackactionDivergence { .. })
        ));
        assert!(n_ins_bounds(&fig1(0.498)).is_ok());
    }
}
