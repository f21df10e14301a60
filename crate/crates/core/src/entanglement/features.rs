//! Dynamical features of concurrence traces: sudden death, dark periods,
//! revivals, echo plateaus, and the revival threshold in `g`.

use std::f64::consts::PI;

use serde::Serialize;

use super::{concurrence, concurrence_trace, linspace, ConcurrenceTrace, EwlState, TimeAxis};
use crate::coherence::Protocol;
use crate::entanglement::critical_purity;
use crate::error::{Error, Result};
use crate::noise::RtnParams;

/// Largest grid spacing, in physical `γt`, accepted by [`detect_features`].
pub const MAX_SPACING: f64 = 0.01;
/// Minimum length, in physical `γt`, of a zero-concurrence stretch counted as
/// a dark period.
pub const DARK_MIN_LENGTH: f64 = 0.05;
/// Concurrence above which a point after a dark period counts as revived.
pub const REVIVAL_FLOOR: f64 = 1e-6;
/// Absolute tolerance of the bisection-refined sudden-death time.
pub const ESD_TOLERANCE: f64 = 1e-6;
/// Width of the plateau window in grid units.
pub const PLATEAU_WINDOW: f64 = 0.1;
/// Plateau slope bound as a fraction of `C(0)` per grid unit.
pub const PLATEAU_SLOPE_FRACTION: f64 = 0.02;
/// Revival search horizon in `γt` for the threshold predicate.
pub const THRESHOLD_HORIZON: f64 = 20.0;
/// Resolution in `g` of the threshold bisection.
pub const THRESHOLD_RESOLUTION: f64 = 1e-3;

const THRESHOLD_GRID_POINTS: usize = 4001;
const GRID_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Plateau {
    /// Window center in grid units.
    pub time: f64,
    pub level: f64,
    /// Ordinal of the plateau along the trace, starting at 1.
    pub k: u32,
}

/// Features of one trace, all times in the trace's grid units.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct FeatureReport {
    pub esd_time: Option<f64>,
    pub dark_periods: Vec<(f64, f64)>,
    pub revival_windows: Vec<(f64, f64)>,
    pub plateaus: Vec<Plateau>,
    pub has_revivals: bool,
}

/// Shrinks `[lo, hi]` until it is narrower than `tol`, keeping
/// `pred(lo) != pred(hi)`.
fn bisect<F>(mut lo: f64, mut hi: f64, tol: f64, mut pred: F) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<bool>,
{
    let at_lo = pred(lo)?;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if pred(mid)? == at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

/// Maximal runs of consecutive indices where `keep` holds.
fn runs(len: usize, mut keep: impl FnMut(usize) -> bool) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for i in 0..len {
        match (keep(i), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, len - 1));
    }
    out
}

pub fn detect_features(trace: &ConcurrenceTrace) -> Result<FeatureReport> {
    let grid = trace.grid();
    let values = trace.values();
    let scale = trace.axis().scale();

    let spacing = grid
        .windows(2)
        .map(|w| (w[1] - w[0]) * scale)
        .fold(0.0, f64::max);
    if spacing > MAX_SPACING * (1.0 + GRID_EPS) {
        return Err(Error::GridTooCoarse {
            spacing,
            max: MAX_SPACING,
        });
    }

    let esd_time = match (1..values.len()).find(|&i| values[i] == 0.0 && values[i - 1] > 0.0) {
        Some(i) => {
            let (lo, hi) = bisect(grid[i - 1], grid[i], ESD_TOLERANCE, |x| {
                Ok(trace.value_at(x)? > 0.0)
            })?;
            Some(0.5 * (lo + hi))
        }
        None => None,
    };

    let dark_periods: Vec<(f64, f64)> = runs(values.len(), |i| values[i] == 0.0)
        .into_iter()
        .filter(|&(s, e)| (grid[e] - grid[s]) * scale >= DARK_MIN_LENGTH * (1.0 - GRID_EPS))
        .map(|(s, e)| (grid[s], grid[e]))
        .collect();

    let revival_windows: Vec<(f64, f64)> = match dark_periods.first() {
        Some(&(_, dark_end)) => runs(values.len(), |i| {
            grid[i] > dark_end && values[i] > REVIVAL_FLOOR
        })
        .into_iter()
        .map(|(s, e)| (grid[s], grid[e]))
        .collect(),
        None => Vec::new(),
    };

    let plateaus = find_plateaus(trace)?;

    Ok(FeatureReport {
        esd_time,
        has_revivals: !revival_windows.is_empty(),
        dark_periods,
        revival_windows,
        plateaus,
    })
}

fn find_plateaus(trace: &ConcurrenceTrace) -> Result<Vec<Plateau>> {
    let grid = trace.grid();
    let values = trace.values();
    let n = grid.len();
    if n < 3 {
        return Ok(Vec::new());
    }
    let half = 0.5 * PLATEAU_WINDOW;
    let tol = PLATEAU_SLOPE_FRACTION * trace.state().initial_concurrence();

    let window = |i: usize| -> Option<(usize, usize)> {
        let x = grid[i];
        if x - half < grid[0] - GRID_EPS || x + half > grid[n - 1] + GRID_EPS {
            return None;
        }
        let lo = grid.partition_point(|&g| g < x - half - GRID_EPS);
        let hi = grid.partition_point(|&g| g <= x + half + GRID_EPS) - 1;
        Some((lo, hi))
    };

    let flat = |i: usize| -> bool {
        let Some((lo, hi)) = window(i) else {
            return false;
        };
        let w = &values[lo..=hi];
        let (min, max) = w
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &c| (a.min(c), b.max(c)));
        let monotone = (values[lo] - values[i]) * (values[i] - values[hi]) >= 0.0;
        min > REVIVAL_FLOOR && max - min < tol * (grid[hi] - grid[lo]) && monotone
    };

    // a plateau must give way to a steeper entangled stretch, which rules
    // out the slow tail ahead of sudden death and runs cut by the grid end
    let closed = |e: usize| -> bool {
        e + 1 < n
            && window(e + 1).is_some_and(|(lo, hi)| {
                values[lo..=hi].iter().all(|&c| c > REVIVAL_FLOOR)
            })
    };

    // a smooth extremum is not a plateau: C must keep its direction across
    // the run and one window width on either side
    let one_way = |s: usize, e: usize| -> bool {
        let lo = grid.partition_point(|&g| g < grid[s] - PLATEAU_WINDOW - GRID_EPS);
        let hi = grid.partition_point(|&g| g <= grid[e] + PLATEAU_WINDOW + GRID_EPS) - 1;
        let steps = values[lo..=hi].windows(2).map(|w| w[1] - w[0]);
        let (mut up, mut down) = (false, false);
        for d in steps {
            up |= d > 0.0;
            down |= d < 0.0;
        }
        !(up && down)
    };

    let first_admissible = (0..n).find(|&i| window(i).is_some());
    let mut plateaus = Vec::new();
    for (s, e) in runs(n, flat) {
        // the stationary start near t = 0 is not a plateau
        if Some(s) == first_admissible || !closed(e) || !one_way(s, e) {
            continue;
        }
        let time = 0.5 * (grid[s] + grid[e]);
        plateaus.push(Plateau {
            time,
            level: trace.value_at(time)?,
            k: plateaus.len() as u32 + 1,
        });
    }
    Ok(plateaus)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub g_bar: f64,
    /// Final bisection bracket.
    pub bracket: (f64, f64),
    /// Bracket the search started from.
    pub search: (f64, f64),
    pub resolution: f64,
    pub horizon_gamma_t: f64,
}

fn has_free_revivals(state: &EwlState, g: f64) -> Result<bool> {
    let channel = RtnParams::from_g(g, 1.0, 0.0)?;
    let trace = concurrence_trace(
        state,
        &channel,
        &channel,
        Protocol::Free,
        TimeAxis::GammaT,
        linspace(0.0, THRESHOLD_HORIZON, THRESHOLD_GRID_POINTS),
    )?;
    Ok(detect_features(&trace)?.has_revivals)
}

/// Coupling ratio at which free evolution of identical channels (`δp0 = 0`)
/// starts to show entanglement revivals within `γt ≤ 20`.
pub fn threshold_g(state: &EwlState, g_lo: f64, g_hi: f64) -> Result<ThresholdReport> {
    if !state.is_entangled() {
        return Err(Error::NeverEntangled {
            r: state.r(),
            r_star: critical_purity(state.a_mag()),
        });
    }
    let (g_lo, g_hi) = (g_lo.min(g_hi), g_lo.max(g_hi));
    let at_lo = has_free_revivals(state, g_lo)?;
    let at_hi = has_free_revivals(state, g_hi)?;
    if at_lo == at_hi {
        return Err(Error::BracketInvalid {
            g_lo,
            g_hi,
            value: at_lo,
        });
    }
    let (lo, hi) = bisect(g_lo, g_hi, THRESHOLD_RESOLUTION, |g| {
        has_free_revivals(state, g)
    })?;
    Ok(ThresholdReport {
        g_bar: 0.5 * (lo + hi),
        bracket: (lo, hi),
        search: (g_lo, g_hi),
        resolution: THRESHOLD_RESOLUTION,
        horizon_gamma_t: THRESHOLD_HORIZON,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlateauPrediction {
    pub gamma_delta_t: f64,
    pub level: f64,
}

/// Large-`g` location `γΔt = 2πk/g` of the k-th echo plateau for identical
/// channels, and the concurrence there with `q_e ≈ e^{-2πk/g}`.
pub fn plateau_prediction(state: &EwlState, g: f64, k: u32) -> Result<PlateauPrediction> {
    if !(g > 0.0 && g.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "g",
            value: g,
            reason: "must be positive and finite",
        });
    }
    if k == 0 {
        return Err(Error::InvalidParameter {
            name: "k",
            value: 0.0,
            reason: "plateau index starts at 1",
        });
    }
    let gamma_delta_t = 2.0 * PI * f64::from(k) / g;
    let q = (-gamma_delta_t).exp();
    Ok(PlateauPrediction {
        gamma_delta_t,
        level: concurrence(state, q, q)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entanglement::Family;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn state(r: f64) -> EwlState {
        EwlState::new(r, FRAC_1_SQRT_2, Family::OneExcitation).unwrap()
    }

    fn trace(r: f64, g_a: f64, g_b: f64, protocol: Protocol) -> ConcurrenceTrace {
        trace_to(r, g_a, g_b, protocol, 3.0)
    }

    fn trace_to(r: f64, g_a: f64, g_b: f64, protocol: Protocol, stop: f64) -> ConcurrenceTrace {
        let a = RtnParams::from_g(g_a, 1.0, 0.0).unwrap();
        let b = RtnParams::from_g(g_b, 1.0, 0.0).unwrap();
        concurrence_trace(
            &state(r),
            &a,
            &b,
            protocol,
            TimeAxis::GammaDeltaT,
            linspace(0.0, stop, (stop * 200.0) as usize + 1),
        )
        .unwrap()
    }

    #[test]
    fn runs_cover_edges() {
        let v = [true, true, false, true, false, true];
        assert_eq!(runs(v.len(), |i| v[i]), vec![(0, 1), (3, 3), (5, 5)]);
        assert!(runs(0, |_| true).is_empty());
    }

    #[test]
    fn bisect_brackets_switch() {
        let (lo, hi) = bisect(0.0, 1.0, 1e-9, |x| Ok(x > 0.3)).unwrap();
        assert!(hi - lo <= 1e-9 && lo <= 0.3 && hi >= 0.3);
    }

    #[test]
    fn weak_coupling_free_has_sudden_death_only() {
        let f = detect_features(&trace_to(0.91, 0.7, 0.7, Protocol::Free, 8.0)).unwrap();
        assert!(f.esd_time.is_some());
        assert!(!f.has_revivals);
    }

    #[test]
    fn strong_coupling_free_revives() {
        let f = detect_features(&trace(0.91, 7.0, 7.0, Protocol::Free)).unwrap();
        assert!(f.has_revivals);
        let esd = f.esd_time.unwrap();
        let mut prev_end = esd;
        for &(s, e) in &f.revival_windows {
            assert!(s > prev_end && e >= s);
            prev_end = e;
        }
    }

    #[test]
    fn esd_time_is_refined() {
        let t = trace_to(0.91, 0.7, 0.7, Protocol::Free, 8.0);
        let esd = detect_features(&t).unwrap().esd_time.unwrap();
        assert!(t.value_at(esd - ESD_TOLERANCE).unwrap() > 0.0);
        assert_eq!(t.value_at(esd + ESD_TOLERANCE).unwrap(), 0.0);
    }

    #[test]
    fn echo_plateau_near_two_pi_over_g() {
        let f = detect_features(&trace(0.91, 7.0, 7.0, Protocol::Echo)).unwrap();
        assert!(!f.has_revivals);
        let p = f.plateaus.first().expect("plateau");
        assert_eq!(p.k, 1);
        assert!((p.time - 2.0 * PI / 7.0).abs() < 0.05, "{}", p.time);
    }

    #[test]
    fn coarse_grid_rejected() {
        let a = RtnParams::from_g(7.0, 1.0, 0.0).unwrap();
        let t = concurrence_trace(
            &state(0.91),
            &a,
            &a,
            Protocol::Free,
            TimeAxis::GammaT,
            linspace(0.0, 3.0, 31),
        )
        .unwrap();
        assert!(matches!(
            detect_features(&t),
            Err(Error::GridTooCoarse { .. })
        ));
        // γΔt spacing 0.005 is 0.01 in γt
        let t = concurrence_trace(
            &state(0.91),
            &a,
            &a,
            Protocol::Echo,
            TimeAxis::GammaDeltaT,
            linspace(0.0, 3.0, 501),
        )
        .unwrap();
        assert!(detect_features(&t).is_err());
    }

    #[test]
    fn threshold_errors() {
        assert!(matches!(
            threshold_g(&state(0.3), 1.0, 10.0),
            Err(Error::NeverEntangled { .. })
        ));
        assert!(matches!(
            threshold_g(&state(0.91), 5.0, 10.0),
            Err(Error::BracketInvalid { value: true, .. })
        ));
        // pure states touch zero only at isolated instants
        assert!(matches!(
            threshold_g(&state(1.0), 1.0, 10.0),
            Err(Error::BracketInvalid { value: false, .. })
        ));
    }

    #[test]
    fn plateau_prediction_examples() {
        let s = state(0.91);
        let p = plateau_prediction(&s, 7.0, 1).unwrap();
        assert!((p.gamma_delta_t - 0.8976).abs() < 1e-4);
        let expected = 2.0 * (0.91 * 0.5 * (-4.0 * PI / 7.0).exp() - 0.0225);
        assert!((p.level - expected).abs() < 1e-12);
        let far = plateau_prediction(&s, 1e12, 1).unwrap();
        assert!((far.level - s.initial_concurrence()).abs() < 1e-9);
        assert!(plateau_prediction(&s, 7.0, 0).is_err());
        assert!(plateau_prediction(&s, 0.0, 1).is_err());
    }
}
