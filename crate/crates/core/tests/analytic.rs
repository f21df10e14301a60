//! Physical invariants of the closed-form coherences and concurrence traces.

use rtn_echo_lab::coherence::{coherence, free_coherence, free_coherence_large_g, Protocol};
use rtn_echo_lab::entanglement::{
    concurrence_trace, detect_features, linspace, plateau_prediction, EwlState, Family, TimeAxis,
};
use rtn_echo_lab::noise::RtnParams;
use std::f64::consts::FRAC_1_SQRT_2;

fn state(r: f64) -> EwlState {
    EwlState::new(r, FRAC_1_SQRT_2, Family::OneExcitation).unwrap()
}

fn trace(r: f64, g: f64, protocol: Protocol, stop: f64) -> rtn_echo_lab::ConcurrenceTrace {
    let p = RtnParams::from_g(g, 1.0, 0.0).unwrap();
    let n = (stop * 200.0) as usize + 1;
    concurrence_trace(&state(r), &p, &p, protocol, TimeAxis::GammaDeltaT, linspace(0.0, stop, n)).unwrap()
}

#[test]
fn weak_coupling_follows_golden_rule() {
    let g = 0.1;
    let p = RtnParams::from_g(g, 1.0, 0.0).unwrap();
    for gt in [5.0, 10.0, 20.0] {
        let q = free_coherence(&p, gt).unwrap().magnitude();
        let ratio = q / (-g * g * gt / 4.0).exp();
        assert!((ratio - 1.0).abs() < 0.01, "gt {gt}: ratio {ratio}");
    }
}

#[test]
fn echo_never_loses_to_free_evolution() {
    for g in [0.7, 7.0] {
        let free = trace(0.91, g, Protocol::Free, 4.0);
        let echo = trace(0.91, g, Protocol::Echo, 4.0);
        for ((x, f), e) in free.grid().iter().zip(free.values()).zip(echo.values()) {
            assert!(e + 1e-12 >= *f, "g {g} at {x}: echo {e} < free {f}");
        }
    }
}

#[test]
fn echo_delays_sudden_death_for_weak_coupling() {
    let free = detect_features(&trace(0.91, 0.7, Protocol::Free, 8.0)).unwrap();
    let echo = detect_features(&trace(0.91, 0.7, Protocol::Echo, 8.0)).unwrap();
    assert!(echo.esd_time.unwrap() > free.esd_time.unwrap());
    assert!(!free.has_revivals && !echo.has_revivals);
}

#[test]
fn echo_removes_dark_periods_for_strong_coupling() {
    let free = detect_features(&trace(0.91, 7.0, Protocol::Free, 3.0)).unwrap();
    let echo = detect_features(&trace(0.91, 7.0, Protocol::Echo, 3.0)).unwrap();
    assert!(free.has_revivals && !free.dark_periods.is_empty());
    assert!(!echo.has_revivals);
    assert!(echo.dark_periods.iter().all(|&(s, _)| s >= echo.esd_time.unwrap() - 0.01));
}

#[test]
fn detected_plateaus_match_prediction() {
    let report = detect_features(&trace(1.0, 7.0, Protocol::Echo, 3.0)).unwrap();
    for k in [1, 2] {
        let predicted = plateau_prediction(&state(1.0), 7.0, k).unwrap();
        let found = report.plateaus.iter().find(|p| p.k == k).unwrap();
        assert!((found.time - predicted.gamma_delta_t).abs() < 0.05, "k {k}: {found:?} vs {predicted:?}");
        assert!((found.level - predicted.level).abs() < 0.03, "k {k}: {found:?} vs {predicted:?}");
    }
}

#[test]
fn mixed_couplings_keep_echo_plateau_only() {
    let a = RtnParams::from_g(0.3, 1.0, 0.0).unwrap();
    let b = RtnParams::from_g(4.0, 1.0, 0.0).unwrap();
    let grid = linspace(0.0, 4.0, 801);
    let echo = concurrence_trace(&state(0.91), &a, &b, Protocol::Echo, TimeAxis::GammaDeltaT, grid.clone()).unwrap();
    let free = concurrence_trace(&state(0.91), &a, &b, Protocol::Free, TimeAxis::GammaDeltaT, grid).unwrap();
    let echo = detect_features(&echo).unwrap();
    let free = detect_features(&free).unwrap();
    assert!(!echo.plateaus.is_empty());
    assert!(free.plateaus.is_empty());
    assert!(free.has_revivals && !echo.has_revivals);
}

#[test]
fn free_large_g_stays_within_derived_bound() {
    for g in [7.0, 20.0] {
        let p = RtnParams::from_g(g, 1.0, 0.0).unwrap();
        let m = p.mu().norm();
        for gt in linspace(0.0, 3.0, 301) {
            let exact = coherence(&p, Protocol::Free, gt).unwrap().magnitude();
            let approx = free_coherence_large_g(&p, gt).unwrap().magnitude();
            let bound = (-gt / 2.0).exp() * ((g - m).abs() * gt / 2.0 + 1.0 / m);
            assert!((exact - approx).abs() <= bound + 1e-12, "g {g} gt {gt}");
            if g == 20.0 {
                assert!((exact - approx).abs() < 0.05);
            }
        }
    }
}
