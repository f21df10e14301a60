//! Statistical checks of the telegraph sampler and the trajectory averages.

use num_complex::Complex64;
use rtn_echo_lab::coherence::{echo_coherence, free_coherence};
use rtn_echo_lab::entanglement::{concurrence, EwlState, Family};
use rtn_echo_lab::montecarlo::{
    mc_concurrence, mc_echo_coherence, mc_free_coherence, trajectory_rng, ChannelTag,
};
use rtn_echo_lab::noise::{autocorrelation, sample_trajectory, RtnParams};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

const N_MC: usize = 200_000;

fn trajectories(params: &RtnParams, horizon: f64, n: usize, seed: u64) -> Vec<rtn_echo_lab::Trajectory> {
    (0..n as u64)
        .map(|i| {
            let mut rng = trajectory_rng(seed, ChannelTag::SINGLE, i);
            sample_trajectory(params, horizon, &mut rng).unwrap()
        })
        .collect()
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn switch_count_matches_dwell_rate() {
    let p = RtnParams::new(1.0, 1.0, 0.0).unwrap();
    let counts: Vec<f64> = trajectories(&p, 10.0, 20_000, 1)
        .iter()
        .map(|t| t.switch_times().len() as f64)
        .collect();
    let (mean, se) = mean_and_se(&counts);
    assert!((mean - 5.0).abs() < 3.0 * se, "mean {mean} se {se}");
}

#[test]
fn initial_level_follows_population_bias() {
    let p = RtnParams::new(1.0, 1.0, 0.4).unwrap();
    let ups: Vec<f64> = trajectories(&p, 1.0, 20_000, 2)
        .iter()
        .map(|t| t.initial_level() as u8 as f64)
        .collect();
    let (mean, se) = mean_and_se(&ups);
    assert!((mean - 0.7).abs() < 3.0 * se, "mean {mean} se {se}");
}

#[test]
fn autocorrelation_is_exponential() {
    let p = RtnParams::new(2.0, 1.5, 0.0).unwrap();
    let n = 100_000;
    let trajs = trajectories(&p, 3.0, n, 3);
    let scale = 0.25 * p.v() * p.v();
    for tau in [0.0, 0.25, 0.5, 1.0, 2.0, 3.0] {
        let products: Vec<f64> = trajs
            .iter()
            .map(|t| {
                let s = |b: bool| if b { 0.5 * p.v() } else { -0.5 * p.v() };
                s(t.level_at(0.0)) * s(t.level_at(tau))
            })
            .collect();
        let (mean, _) = mean_and_se(&products);
        let exact = autocorrelation(&p, tau);
        assert!((mean - exact).abs() < 5.0 * scale / (n as f64).sqrt(), "tau {tau}: {mean} vs {exact}");
    }
}

#[test]
fn first_dwell_time_passes_ks_test() {
    let p = RtnParams::new(1.0, 2.0, 0.0).unwrap();
    let rate = 0.5 * p.gamma();
    let mut first: Vec<f64> = trajectories(&p, 1e3, 10_000, 4)
        .iter()
        .map(|t| t.switch_times()[0])
        .collect();
    first.sort_by(f64::total_cmp);
    let n = first.len() as f64;
    let d = first
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = 1.0 - (-rate * x).exp();
            (cdf - i as f64 / n).abs().max(((i + 1) as f64 / n - cdf).abs())
        })
        .fold(0.0, f64::max);
    assert!(d < 1.628 / n.sqrt(), "KS statistic {d}");
}

#[test]
fn free_average_matches_closed_form() {
    let p = RtnParams::from_g(0.7, 1.0, 0.0).unwrap();
    for (i, t) in [0.5, 1.0, 2.0, 4.0].into_iter().enumerate() {
        let est = mc_free_coherence(&p, t, N_MC, 100 + i as u64).unwrap();
        let z = est.z_score(free_coherence(&p, t).unwrap().value);
        assert!(z.abs() <= 4.0, "t {t}: z {z}");
    }
}

#[test]
fn echo_average_matches_closed_form() {
    let p = RtnParams::from_g(7.0, 1.0, 0.0).unwrap();
    for (i, dt) in [0.3, 0.9, 1.5].into_iter().enumerate() {
        let est = mc_echo_coherence(&p, dt, N_MC, 200 + i as u64).unwrap();
        let z = est.z_score(echo_coherence(&p, dt).unwrap().value);
        assert!(z.abs() <= 4.0, "dt {dt}: z {z}");
        assert!(est.mean.im.abs() <= 4.0 * est.std_error.im, "im {}", est.mean.im);
    }
}

#[test]
fn short_pulse_echo_is_nearly_perfect() {
    let p = RtnParams::from_g(2.0, 1.0, 0.0).unwrap();
    let est = mc_echo_coherence(&p, 1e-3, 20_000, 5).unwrap();
    let exact = echo_coherence(&p, 1e-3).unwrap().value;
    assert!((1.0 - exact.re) < 1e-8);
    assert!((est.mean - Complex64::new(1.0, 0.0)).norm() < 1e-6);
}

#[test]
fn population_bias_sign_is_calibrated() {
    for dp in [1.0, -1.0] {
        let p = RtnParams::from_g(2.0, 1.0, dp).unwrap();
        let flipped = RtnParams::from_g(2.0, 1.0, -dp).unwrap();
        let est = mc_free_coherence(&p, 1.0, N_MC, 6).unwrap();
        let z = est.z_score(free_coherence(&p, 1.0).unwrap().value);
        let z_flipped = est.z_score(free_coherence(&flipped, 1.0).unwrap().value);
        assert!(z.abs() <= 4.0, "dp {dp}: z {z}");
        assert!(z_flipped.abs() > 10.0, "dp {dp}: flipped z {z_flipped}");
    }
}

#[test]
fn standard_error_scales_as_inverse_root_n() {
    let p = RtnParams::from_g(1.5, 1.0, 0.0).unwrap();
    let small = mc_free_coherence(&p, 1.0, 4_000, 7).unwrap();
    let large = mc_free_coherence(&p, 1.0, 64_000, 7).unwrap();
    let ratio = small.std_error.re / large.std_error.re;
    assert!((ratio / 4.0 - 1.0).abs() < 0.2, "ratio {ratio}");
}

#[test]
fn estimates_do_not_depend_on_thread_count() {
    let p = RtnParams::from_g(3.0, 1.0, 0.3).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                (
                    mc_free_coherence(&p, 1.3, 10_000, 11).unwrap(),
                    mc_echo_coherence(&p, 0.7, 10_000, 11).unwrap(),
                )
            })
    };
    let (a, b) = (run(1), run(4));
    assert_eq!(a.0.mean.re.to_bits(), b.0.mean.re.to_bits());
    assert_eq!(a.0.mean.im.to_bits(), b.0.mean.im.to_bits());
    assert_eq!(a.1.mean.re.to_bits(), b.1.mean.re.to_bits());
    assert_eq!(a.0.std_error, b.0.std_error);
}

fn reference_state() -> EwlState {
    EwlState::new(0.91, FRAC_1_SQRT_2, Family::OneExcitation).unwrap()
}

#[test]
fn mc_concurrence_matches_at_first_plateau() {
    let p = RtnParams::from_g(7.0, 1.0, 0.0).unwrap();
    let dt = 2.0 * PI / 7.0;
    let q = echo_coherence(&p, dt).unwrap().magnitude();
    let exact = concurrence(&reference_state(), q, q).unwrap();
    assert!((exact - 0.1034).abs() < 1e-3);
    let est = mc_concurrence(&reference_state(), &p, &p, rtn_echo_lab::Protocol::Echo, 2.0 * dt, N_MC, 12).unwrap();
    assert!((est.value - exact).abs() <= 4.0 * est.std_error, "{} vs {exact}", est.value);
}

#[test]
fn mc_concurrence_mixed_couplings() {
    let a = RtnParams::from_g(0.3, 1.0, 0.0).unwrap();
    let b = RtnParams::from_g(4.0, 1.0, 0.0).unwrap();
    for (protocol, t) in [(rtn_echo_lab::Protocol::Echo, 2.0), (rtn_echo_lab::Protocol::Free, 0.5)] {
        let qa = rtn_echo_lab::coherence::coherence(&a, protocol, t).unwrap().magnitude();
        let qb = rtn_echo_lab::coherence::coherence(&b, protocol, t).unwrap().magnitude();
        let exact = concurrence(&reference_state(), qa, qb).unwrap();
        let est = mc_concurrence(&reference_state(), &a, &b, protocol, t, N_MC, 13).unwrap();
        assert!(exact > 0.05);
        assert!((est.value - exact).abs() <= 4.0 * est.std_error, "{protocol}: {} vs {exact}", est.value);
    }
}
