//! Brute-force coherence estimates from sampled telegraph trajectories.
//!
//! Each trajectory contributes the exact phase factor `exp(−i v Φ)`, where
//! `Φ = ∫₀ᵗ ξ` for free evolution and `Φ = ∫₀^{Δt} ξ − ∫_{Δt}^{2Δt} ξ` with an
//! echo. The integrals are taken segment-wise from the switch times, so the
//! only error is statistical.
//!
//! Trajectory `i` of channel `c` draws from a ChaCha8 stream keyed by
//! `(master_seed, c)` with stream id `i`. Trajectories are summed in fixed
//! blocks and the block partials are combined in index order, so results are
//! bit-identical for any number of worker threads.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::coherence::Protocol;
use crate::entanglement::{concurrence, EwlState};
use crate::error::{check_nonnegative, Error, Result};
use crate::noise::{sample_trajectory, RtnParams};

pub const MIN_TRAJECTORIES: usize = 1000;

const BLOCK: usize = 1024;

/// Seed-stream tag separating independent uses of one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChannelTag(pub u64);

impl ChannelTag {
    pub const SINGLE: ChannelTag = ChannelTag(0);
    pub const QUBIT_A: ChannelTag = ChannelTag(1);
    pub const QUBIT_B: ChannelTag = ChannelTag(2);

    /// Tag for grid point `point` of a sweep, keeping streams of different
    /// points disjoint.
    pub fn at_point(self, point: u64) -> ChannelTag {
        ChannelTag(self.0 | (point << 8))
    }
}

/// Generator for trajectory `index` of `channel` under `master_seed`.
pub fn trajectory_rng(master_seed: u64, channel: ChannelTag, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&channel.0.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Standard errors of the real and imaginary parts of a mean.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ComponentError {
    pub re: f64,
    pub im: f64,
}

impl ComponentError {
    /// Standard error of `|mean|` to first order.
    pub fn of_modulus(&self, mean: Complex64) -> f64 {
        let norm = mean.norm();
        if norm == 0.0 {
            return (0.5 * (self.re * self.re + self.im * self.im)).sqrt();
        }
        let (c, s) = (mean.re / norm, mean.im / norm);
        ((c * self.re).powi(2) + (s * self.im).powi(2)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    #[serde(serialize_with = "serialize_complex")]
    pub mean: Complex64,
    pub std_error: ComponentError,
    pub n_traj: usize,
    pub master_seed: u64,
}

fn serialize_complex<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeStruct;
    let mut st = s.serialize_struct("Complex", 2)?;
    st.serialize_field("re", &z.re)?;
    st.serialize_field("im", &z.im)?;
    st.end()
}

impl McEstimate {
    /// Signed z-score of the component with the larger deviation from
    /// `reference`; zero when the estimate matches exactly.
    pub fn z_score(&self, reference: Complex64) -> f64 {
        let z = |d: f64, se: f64| {
            if d == 0.0 {
                0.0
            } else if se == 0.0 {
                d.signum() * f64::INFINITY
            } else {
                d / se
            }
        };
        let z_re = z(self.mean.re - reference.re, self.std_error.re);
        let z_im = z(self.mean.im - reference.im, self.std_error.im);
        if z_im.abs() > z_re.abs() {
            z_im
        } else {
            z_re
        }
    }
}

#[derive(Clone, Copy, Default)]
struct Moments {
    re: f64,
    im: f64,
    re2: f64,
    im2: f64,
}

impl Moments {
    fn push(&mut self, z: Complex64) {
        self.re += z.re;
        self.im += z.im;
        self.re2 += z.re * z.re;
        self.im2 += z.im * z.im;
    }

    fn merge(self, other: Moments) -> Moments {
        Moments {
            re: self.re + other.re,
            im: self.im + other.im,
            re2: self.re2 + other.re2,
            im2: self.im2 + other.im2,
        }
    }
}

fn standard_error(sum: f64, sum2: f64, n: f64) -> f64 {
    let mean = sum / n;
    let var = ((sum2 / n - mean * mean) * n / (n - 1.0)).max(0.0);
    (var / n).sqrt()
}

/// Averages `phase(trajectory)` over `n_traj` trajectories of length `horizon`.
fn average<F>(
    params: &RtnParams,
    horizon: f64,
    n_traj: usize,
    master_seed: u64,
    channel: ChannelTag,
    phase: F,
) -> Result<McEstimate>
where
    F: Fn(&crate::noise::Trajectory) -> f64 + Sync,
{
    if n_traj < MIN_TRAJECTORIES {
        return Err(Error::InsufficientSamples {
            n: n_traj,
            min: MIN_TRAJECTORIES,
        });
    }
    let v = params.v();
    let blocks = n_traj.div_ceil(BLOCK);
    let partials = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = Moments::default();
            for i in b * BLOCK..((b + 1) * BLOCK).min(n_traj) {
                let mut rng = trajectory_rng(master_seed, channel, i as u64);
                let traj = sample_trajectory(params, horizon, &mut rng)?;
                acc.push(Complex64::from_polar(1.0, -v * phase(&traj)));
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let total = partials.into_iter().fold(Moments::default(), Moments::merge);
    let n = n_traj as f64;
    Ok(McEstimate {
        mean: Complex64::new(total.re / n, total.im / n),
        std_error: ComponentError {
            re: standard_error(total.re, total.re2, n),
            im: standard_error(total.im, total.im2, n),
        },
        n_traj,
        master_seed,
    })
}

pub fn mc_free_coherence_tagged(
    params: &RtnParams,
    t: f64,
    n_traj: usize,
    master_seed: u64,
    channel: ChannelTag,
) -> Result<McEstimate> {
    check_nonnegative("t", t)?;
    average(params, t, n_traj, master_seed, channel, |traj| {
        traj.occupation(0.0, t)
    })
}

pub fn mc_echo_coherence_tagged(
    params: &RtnParams,
    delta_t: f64,
    n_traj: usize,
    master_seed: u64,
    channel: ChannelTag,
) -> Result<McEstimate> {
    check_nonnegative("delta_t", delta_t)?;
    let horizon = 2.0 * delta_t;
    average(params, horizon, n_traj, master_seed, channel, |traj| {
        traj.occupation(0.0, delta_t) - traj.occupation(delta_t, horizon)
    })
}

/// Free-evolution coherence at `t` estimated from `n_traj` trajectories.
pub fn mc_free_coherence(
    params: &RtnParams,
    t: f64,
    n_traj: usize,
    master_seed: u64,
) -> Result<McEstimate> {
    mc_free_coherence_tagged(params, t, n_traj, master_seed, ChannelTag::SINGLE)
}

/// Echo coherence at `2Δt` estimated from `n_traj` trajectories.
pub fn mc_echo_coherence(
    params: &RtnParams,
    delta_t: f64,
    n_traj: usize,
    master_seed: u64,
) -> Result<McEstimate> {
    mc_echo_coherence_tagged(params, delta_t, n_traj, master_seed, ChannelTag::SINGLE)
}

/// Monte-Carlo coherence for `protocol` at total time `t`.
pub fn mc_coherence(
    params: &RtnParams,
    protocol: Protocol,
    t: f64,
    n_traj: usize,
    master_seed: u64,
    channel: ChannelTag,
) -> Result<McEstimate> {
    match protocol {
        Protocol::Free => mc_free_coherence_tagged(params, t, n_traj, master_seed, channel),
        Protocol::Echo => mc_echo_coherence_tagged(params, 0.5 * t, n_traj, master_seed, channel),
        other => Err(Error::NoEstimator(other.name())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McConcurrence {
    pub value: f64,
    /// First-order propagated error; only indicative where the concurrence is
    /// clamped at zero.
    pub std_error: f64,
    pub q_a: McEstimate,
    pub q_b: McEstimate,
}

/// Concurrence from independently estimated coherences of both qubits at
/// total time `t`.
pub fn mc_concurrence(
    state: &EwlState,
    params_a: &RtnParams,
    params_b: &RtnParams,
    protocol: Protocol,
    t: f64,
    n_traj: usize,
    master_seed: u64,
) -> Result<McConcurrence> {
    mc_concurrence_at(state, params_a, params_b, protocol, t, n_traj, master_seed, 0)
}

/// [`mc_concurrence`] drawing from the streams reserved for sweep point `point`.
#[allow(clippy::too_many_arguments)]
pub fn mc_concurrence_at(
    state: &EwlState,
    params_a: &RtnParams,
    params_b: &RtnParams,
    protocol: Protocol,
    t: f64,
    n_traj: usize,
    master_seed: u64,
    point: u64,
) -> Result<McConcurrence> {
    let tag_a = ChannelTag::QUBIT_A.at_point(point);
    let tag_b = ChannelTag::QUBIT_B.at_point(point);
    let q_a = mc_coherence(params_a, protocol, t, n_traj, master_seed, tag_a)?;
    let q_b = mc_coherence(params_b, protocol, t, n_traj, master_seed, tag_b)?;
    let (m_a, m_b) = (q_a.mean.norm(), q_b.mean.norm());
    let (s_a, s_b) = (q_a.std_error.of_modulus(q_a.mean), q_b.std_error.of_modulus(q_b.mean));
    let value = concurrence(state, m_a, m_b)?;
    let std_error = 2.0 * state.r() * state.ab() * ((m_b * s_a).powi(2) + (m_a * s_b).powi(2)).sqrt();
    Ok(McConcurrence {
        value,
        std_error,
        q_a,
        q_b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn zero_time_is_exact() {
        let p = RtnParams::from_g(3.0, 1.0, 0.2).unwrap();
        for est in [
            mc_free_coherence(&p, 0.0, 2000, 5).unwrap(),
            mc_echo_coherence(&p, 0.0, 2000, 5).unwrap(),
        ] {
            assert_eq!(est.mean, Complex64::new(1.0, 0.0));
            assert_eq!(est.std_error, ComponentError { re: 0.0, im: 0.0 });
            assert_eq!(est.z_score(Complex64::new(1.0, 0.0)), 0.0);
        }
    }

    #[test]
    fn no_coupling_no_phase() {
        let p = RtnParams::new(0.0, 1.0, 0.0).unwrap();
        let est = mc_free_coherence(&p, 3.0, 1000, 9).unwrap();
        assert_eq!(est.mean, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn too_few_samples() {
        let p = RtnParams::from_g(1.0, 1.0, 0.0).unwrap();
        assert_eq!(
            mc_free_coherence(&p, 1.0, 999, 0).unwrap_err(),
            Error::InsufficientSamples { n: 999, min: 1000 }
        );
    }

    #[test]
    fn streams_are_distinct_and_reproducible() {
        let mut a = trajectory_rng(1, ChannelTag::QUBIT_A, 0);
        let mut a2 = trajectory_rng(1, ChannelTag::QUBIT_A, 0);
        let mut b = trajectory_rng(1, ChannelTag::QUBIT_B, 0);
        let mut c = trajectory_rng(1, ChannelTag::QUBIT_A, 1);
        let x: u64 = a.random();
        assert_eq!(x, a2.random::<u64>());
        assert_ne!(x, b.random::<u64>());
        assert_ne!(x, c.random::<u64>());
    }

    #[test]
    fn concurrence_at_zero_time() {
        use crate::entanglement::Family;
        let s = EwlState::new(0.91, std::f64::consts::FRAC_1_SQRT_2, Family::OneExcitation).unwrap();
        let p = RtnParams::from_g(7.0, 1.0, 0.0).unwrap();
        let c = mc_concurrence(&s, &p, &p, Protocol::Echo, 0.0, 1000, 3).unwrap();
        assert_eq!(c.value, s.initial_concurrence());
        assert_eq!(c.std_error, 0.0);
    }

    #[test]
    fn modulus_error_projection() {
        let e = ComponentError { re: 0.1, im: 0.2 };
        assert!((e.of_modulus(Complex64::new(1.0, 0.0)) - 0.1).abs() < 1e-15);
        assert!((e.of_modulus(Complex64::new(0.0, -2.0)) - 0.2).abs() < 1e-15);
    }
}
