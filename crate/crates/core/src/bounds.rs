//! Analytic mixing and hitting bounds, and the safety classifier built on
//! them. Everything at `d = 100` scale runs in log space.

use serde::Serialize;

use crate::error::{check_probability, Error, Result};
use crate::lattice::count_constant_gap;

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "tolerance must lie in (0, 1), got {eps}"
        )))
    }
}

/// Coupling bound `⌈ln ε / ln(1 − p1^(ḡ+1))⌉ · (ḡ+1)` on `t_mix(ε)`.
pub fn mixing_upper_bound(p1: f64, max_gap: u32, eps: f64) -> Result<u64> {
    check_probability(p1)?;
    check_eps(eps)?;
    let span = f64::from(max_gap) + 1.0;
    let success = p1.powf(span);
    let blocks = (eps.ln() / (-success).ln_1p()).ceil();
    Ok((blocks.max(0.0) as u64).saturating_mul(u64::from(max_gap) + 1))
}

/// Smallest `p1` for which [`mixing_upper_bound`] stays within `horizon`
/// turns.
pub fn min_power_rapid_mixing(eps: f64, horizon: f64, max_gap: u32) -> Result<f64> {
    check_eps(eps)?;
    let span = f64::from(max_gap) + 1.0;
    if horizon.is_nan() || horizon <= span {
        return Err(Error::InvalidParameter(format!(
            "horizon {horizon} must exceed ḡ+1 = {span}"
        )));
    }
    let failure = -(span / (horizon - span) * eps.ln()).exp_m1();
    Ok(failure.powf(1.0 / span))
}

/// Largest `ḡ` whose mixing bound stays within `horizon` turns, scanning
/// upwards until the bound first exceeds it; 0 if none qualifies.
pub fn max_gap_rapid_mixing(eps: f64, horizon: f64, p1: f64) -> Result<u32> {
    check_probability(p1)?;
    check_eps(eps)?;
    let cap = horizon.clamp(1.0, 1e6) as u32;
    let mut best = 0;
    for g in 0..cap {
        if (mixing_upper_bound(p1, g, eps)? as f64) <= horizon {
            best = g;
        } else {
            break;
        }
    }
    Ok(best)
}

fn check_constant_gap(d: u32, g: u32, s: u32) -> Result<()> {
    if g == 0 || g > d || s > g {
        return Err(Error::InvalidParameter(format!(
            "need 1 ≤ g ≤ d and s ≤ g, got d={d}, g={g}, s={s}"
        )));
    }
    Ok(())
}

/// Natural logs of the interior path counts `N(0,0)` and `N(0,s)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogCounts {
    pub n00: f64,
    pub n0s: f64,
}

pub fn log_counts(d: u32, g: u32, s: u32) -> Result<LogCounts> {
    let (n00, n0s) = count_constant_gap(d, g, s)?;
    Ok(LogCounts {
        n00: n00.log_value,
        n0s: n0s.log_value,
    })
}

/// Bounds on the expected number of rounds before `(d,d)` is hit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RoundBounds {
    pub ln_lower: f64,
    pub ln_upper: f64,
}

impl RoundBounds {
    pub fn lower(&self) -> f64 {
        self.ln_lower.exp()
    }

    pub fn upper(&self) -> f64 {
        self.ln_upper.exp()
    }
}

pub fn expected_rounds_bounds(d: u32, g: u32, s: u32, p1: f64) -> Result<RoundBounds> {
    check_constant_gap(d, g, s)?;
    check_probability(p1)?;
    Ok(rounds_from_counts(log_counts(d, g, s)?, d, s, p1))
}

fn rounds_from_counts(n: LogCounts, d: u32, s: u32, p1: f64) -> RoundBounds {
    let (lp, lq) = (p1.ln(), (-p1).ln_1p());
    let (d, s) = (f64::from(d), f64::from(s));
    RoundBounds {
        ln_lower: n.n0s + 2.0 * s * lq - 2.0 * n.n00 - d * lp - d * lq,
        ln_upper: n.n00 - 2.0 * n.n0s - d * lp - (d + s) * lq,
    }
}

/// Log of the lower bound on expected rounds minimised over `p1`, attained
/// at `p1 = d / (2(d − s))`. Needs `2s < d`.
pub fn expected_rounds_minimax_lower(d: u32, g: u32, s: u32) -> Result<f64> {
    check_constant_gap(d, g, s)?;
    if 2 * s >= d {
        return Err(Error::InvalidParameter(format!(
            "minimax bound needs s < d/2, got d={d}, s={s}"
        )));
    }
    let n = log_counts(d, g, s)?;
    let (d, s) = (f64::from(d), f64::from(s));
    let xlnx = |x: f64| if x == 0.0 { 0.0 } else { x * x.ln() };
    Ok(n.n0s - 2.0 * n.n00 + (d - s) * 4f64.ln() + 2.0 * xlnx(d - s) - xlnx(d) - xlnx(d - 2.0 * s))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SafetyLabel {
    Safe,
    Unsafe,
    Undetermined,
}

impl std::fmt::Display for SafetyLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SafetyLabel::Safe => "Safe",
            SafetyLabel::Unsafe => "Unsafe",
            SafetyLabel::Undetermined => "Undetermined",
        })
    }
}

/// How the upper bound is compared with the horizon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SafetyCriterion {
    /// Unsafe when the upper bound on expected rounds is below the horizon.
    /// This matches the known unsafe onsets at depth 100.
    #[default]
    Rounds,
    /// Unsafe only when `2d` times that bound, an upper bound on the
    /// expected hitting time in turns, is below the horizon.
    Turns,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SafetyVerdict {
    pub d: u32,
    pub g: u32,
    pub s: u32,
    pub p1: f64,
    pub horizon: f64,
    pub ln_er_lower: f64,
    pub ln_er_upper: f64,
    /// Log bounds on the expected hitting time of `(d,d)`, in turns.
    pub ln_t_lower: f64,
    pub ln_t_upper: f64,
    pub criterion: SafetyCriterion,
    pub label: SafetyLabel,
}

/// Safe when the lower bound on expected rounds (hence on expected turns)
/// reaches the horizon; Unsafe per `criterion`; otherwise Undetermined.
pub fn classify_safety_with(
    d: u32,
    g: u32,
    s: u32,
    p1: f64,
    horizon: f64,
    criterion: SafetyCriterion,
) -> Result<SafetyVerdict> {
    check_constant_gap(d, g, s)?;
    check_probability(p1)?;
    Ok(verdict(
        log_counts(d, g, s)?,
        d,
        g,
        s,
        p1,
        horizon,
        criterion,
    ))
}

pub fn classify_safety(d: u32, g: u32, s: u32, p1: f64, horizon: f64) -> Result<SafetyVerdict> {
    classify_safety_with(d, g, s, p1, horizon, SafetyCriterion::default())
}

fn verdict(
    n: LogCounts,
    d: u32,
    g: u32,
    s: u32,
    p1: f64,
    horizon: f64,
    criterion: SafetyCriterion,
) -> SafetyVerdict {
    let b = rounds_from_counts(n, d, s, p1);
    let ln_t_upper = b.ln_upper + (2.0 * f64::from(d)).ln();
    let ln_h = horizon.ln();
    let unsafe_stat = match criterion {
        SafetyCriterion::Rounds => b.ln_upper,
        SafetyCriterion::Turns => ln_t_upper,
    };
    let label = if b.ln_lower >= ln_h {
        SafetyLabel::Safe
    } else if unsafe_stat < ln_h {
        SafetyLabel::Unsafe
    } else {
        SafetyLabel::Undetermined
    };
    SafetyVerdict {
        d,
        g,
        s,
        p1,
        horizon,
        ln_er_lower: b.ln_lower,
        ln_er_upper: b.ln_upper,
        ln_t_lower: b.ln_lower,
        ln_t_upper,
        criterion,
        label,
    }
}

/// Classifies every `(g, s, p1)` combination with `s ≤ g ≤ d`, reusing the
/// path counts across `p1`. Rows are ordered by `g`, then `s`, then `p1`.
pub fn safety_grid(
    d: u32,
    gs: &[u32],
    ss: &[u32],
    p1s: &[f64],
    horizon: f64,
    criterion: SafetyCriterion,
) -> Result<Vec<SafetyVerdict>> {
    use rayon::prelude::*;
    for &p in p1s {
        check_probability(p)?;
    }
    let pairs: Vec<(u32, u32)> = gs
        .iter()
        .flat_map(|&g| ss.iter().map(move |&s| (g, s)))
        .filter(|&(g, s)| s <= g)
        .collect();
    let rows: Result<Vec<Vec<SafetyVerdict>>> = pairs
        .par_iter()
        .map(|&(g, s)| {
            check_constant_gap(d, g, s)?;
            let n = log_counts(d, g, s)?;
            Ok(p1s
                .iter()
                .map(|&p| verdict(n, d, g, s, p, horizon, criterion))
                .collect())
        })
        .collect();
    Ok(rows?.into_iter().flatten().collect())
}

/// Which side of a power threshold a safety guarantee must cover.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerRange {
    AtMost,
    AtLeast,
}

/// For each `g` in `1..=d`, the largest `s_max` such that every `s ≤ s_max`
/// is Safe for all grid powers on the given side of `limit`. Gaps without
/// any safe restart are omitted.
pub fn safe_restart_frontier(
    d: u32,
    horizon: f64,
    range: PowerRange,
    limit: f64,
    grid: &[f64],
) -> Result<Vec<(u32, u32)>> {
    use rayon::prelude::*;
    let tol = 1e-12;
    let mut powers: Vec<f64> = grid
        .iter()
        .copied()
        .filter(|&p| match range {
            PowerRange::AtMost => p <= limit + tol,
            PowerRange::AtLeast => p >= limit - tol,
        })
        .collect();
    if limit > 0.0 && limit < 1.0 && !powers.iter().any(|&p| (p - limit).abs() <= tol) {
        powers.push(limit);
    }
    let rows: Result<Vec<Option<(u32, u32)>>> = (1..=d)
        .into_par_iter()
        .map(|g| {
            let mut best = None;
            for s in 0..=g {
                let n = log_counts(d, g, s)?;
                let all_safe = powers.iter().all(|&p| {
                    verdict(n, d, g, s, p, horizon, SafetyCriterion::Rounds).label
                        == SafetyLabel::Safe
                });
                if !all_safe {
                    break;
                }
                best = Some(s);
            }
            Ok(best.map(|s| (g, s)))
        })
        .collect();
    Ok(rows?.into_iter().flatten().collect())
}

/// Smallest `g ≥ max(1, s)` labelled Unsafe, if any.
pub fn unsafe_onset(
    d: u32,
    s: u32,
    p1: f64,
    horizon: f64,
    criterion: SafetyCriterion,
) -> Result<Option<u32>> {
    for g in s.max(1)..=d {
        if classify_safety_with(d, g, s, p1, horizon, criterion)?.label == SafetyLabel::Unsafe {
            return Ok(Some(g));
        }
    }
    Ok(None)
}

/// The 99-point power grid `0.01, 0.02, …, 0.99`.
pub fn percent_grid() -> Vec<f64> {
    (1..100).map(|i| f64::from(i) / 100.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn table_one_row() {
        // The formula gives 0.60789 at ḡ=9, which rounds to 0.608.
        let want = [
            0.037, 0.127, 0.229, 0.322, 0.401, 0.467, 0.522, 0.569, 0.608, 0.642,
        ];
        for (g, w) in (1..=10).zip(want) {
            let p = min_power_rapid_mixing(1e-3, 1e4, g).unwrap();
            assert!((p - w).abs() <= 5e-4, "ḡ={g}: {p}");
            assert!(mixing_upper_bound(p, g, 1e-3).unwrap() <= 10_000);
        }
    }

    #[test]
    fn bound_limits() {
        // Once ε ≥ 1 − p^(ḡ+1) one block of ḡ+1 turns suffices.
        assert_eq!(mixing_upper_bound(0.9, 2, 0.5).unwrap(), 3);
        // 0.037 is the threshold 0.03716 rounded down, so it lands just
        // above the horizon while the exact threshold stays within it.
        assert_eq!(mixing_upper_bound(0.037, 1, 1e-3).unwrap(), 10_086);
        let exact = min_power_rapid_mixing(1e-3, 1e4, 1).unwrap();
        assert!(mixing_upper_bound(exact, 1, 1e-3).unwrap() <= 10_000);
        assert!(mixing_upper_bound(1.0, 1, 1e-3).is_err());
        assert!(min_power_rapid_mixing(1e-3, 2.0, 1).is_err());
    }

    #[test]
    fn inverse_gap() {
        assert!(max_gap_rapid_mixing(1e-3, 1e4, 0.642).unwrap() >= 10);
        let g = max_gap_rapid_mixing(1e-3, 1e4, 0.3).unwrap();
        assert!(mixing_upper_bound(0.3, g, 1e-3).unwrap() <= 10_000);
        assert!(mixing_upper_bound(0.3, g + 1, 1e-3).unwrap() > 10_000);
        assert!(max_gap_rapid_mixing(1e-3, 1e4, 0.99).unwrap() > 100);
    }

    #[test]
    fn zero_restart_bounds_coincide() {
        let b = expected_rounds_bounds(10, 3, 0, 0.4).unwrap();
        assert_relative_eq!(b.ln_lower, b.ln_upper, epsilon = 1e-12);
        let (n00, _) = count_constant_gap(10, 3, 0).unwrap();
        let exact = -(n00.log_value + 10.0 * 0.4f64.ln() + 10.0 * 0.6f64.ln());
        assert_relative_eq!(b.ln_lower, exact, epsilon = 1e-12);
    }

    #[test]
    fn minimax_is_below_grid_minimum() {
        let mm = expected_rounds_minimax_lower(10, 3, 2).unwrap();
        let grid_min = (1..1000)
            .map(|i| {
                expected_rounds_bounds(10, 3, 2, f64::from(i) / 1000.0)
                    .unwrap()
                    .ln_lower
            })
            .fold(f64::INFINITY, f64::min);
        assert!(mm <= grid_min + 1e-12);
        assert!(grid_min - mm < 1e-3);
        let at = expected_rounds_bounds(10, 3, 2, 10.0 / 16.0)
            .unwrap()
            .ln_lower;
        assert_relative_eq!(mm, at, epsilon = 1e-10);
        // At s = 0 it collapses to 4^d / N(0,0).
        let (n00, _) = count_constant_gap(12, 4, 0).unwrap();
        assert_relative_eq!(
            expected_rounds_minimax_lower(12, 4, 0).unwrap(),
            12.0 * 4f64.ln() - n00.log_value,
            epsilon = 1e-10
        );
        assert!(expected_rounds_minimax_lower(10, 5, 5).is_err());
        assert!(expected_rounds_minimax_lower(100, 4, 4).unwrap() >= 1e8f64.ln());
    }

    #[test]
    fn known_spot_labels() {
        let safe = classify_safety(100, 5, 3, 0.45, 1e8).unwrap();
        assert_eq!(safe.label, SafetyLabel::Safe);
        assert!(safe.ln_er_lower >= 1e8f64.ln());
        assert_eq!(
            classify_safety(100, 13, 0, 0.5, 1e4).unwrap().label,
            SafetyLabel::Unsafe
        );
        assert_eq!(
            classify_safety(100, 15, 1, 0.5, 1e4).unwrap().label,
            SafetyLabel::Unsafe
        );
        assert_eq!(
            unsafe_onset(100, 0, 0.5, 1e4, SafetyCriterion::Rounds).unwrap(),
            Some(13)
        );
        assert_eq!(
            unsafe_onset(100, 1, 0.5, 1e4, SafetyCriterion::Rounds).unwrap(),
            Some(15)
        );
        // The turn-scaled rule never reaches a verdict of Unsafe here.
        assert_eq!(
            unsafe_onset(100, 0, 0.5, 1e4, SafetyCriterion::Turns).unwrap(),
            None
        );
    }

    #[test]
    fn small_gaps_are_always_safe() {
        let grid = percent_grid();
        let rows = safety_grid(
            100,
            &[1, 2, 3, 4],
            &[0, 1, 2, 3, 4],
            &grid,
            1e8,
            SafetyCriterion::Rounds,
        )
        .unwrap();
        assert_eq!(rows.len(), 14 * 99);
        assert!(rows.iter().all(|v| v.label == SafetyLabel::Safe));
    }

    #[test]
    fn table_two_frontier_rows() {
        let grid = percent_grid();
        let low = safe_restart_frontier(100, 1e8, PowerRange::AtMost, 0.45, &grid).unwrap();
        assert!(low.contains(&(5, 3)));
        let low = safe_restart_frontier(100, 1e8, PowerRange::AtMost, 0.40, &grid).unwrap();
        assert!(low.contains(&(5, 5)));
        let high = safe_restart_frontier(100, 1e8, PowerRange::AtLeast, 0.65, &grid).unwrap();
        assert!(high.contains(&(9, 1)));
    }

    proptest! {
        #[test]
        fn rapid_mixing_threshold_monotone(g in 0u32..20, t in 100.0f64..1e6) {
            let a = min_power_rapid_mixing(1e-3, t, g).unwrap();
            let b = min_power_rapid_mixing(1e-3, t, g + 1).unwrap();
            let c = min_power_rapid_mixing(1e-3, t * 2.0, g).unwrap();
            prop_assert!(b >= a);
            prop_assert!(c <= a);
        }

        #[test]
        fn raising_horizon_never_makes_unsafe_safe(
            g in 1u32..=20, s_frac in 0.0f64..=1.0, p in 0.05f64..0.95, t in 1.0f64..1e12
        ) {
            let s = (f64::from(g) * s_frac).floor() as u32;
            let a = classify_safety(40, g, s, p, t).unwrap();
            let b = classify_safety(40, g, s, p, t * 10.0).unwrap();
            prop_assert!(a.ln_er_lower <= a.ln_er_upper + 1e-9);
            if a.label == SafetyLabel::Unsafe {
                prop_assert!(b.label != SafetyLabel::Safe);
            }
        }
    }
}
