//! Random telegraph fluctuator coupled longitudinally to a qubit.
//!
//! The fluctuator variable `ξ(t)` takes the values 0 and 1 and the qubit sees
//! the energy shift `v ξ(t)`. Dwell times in each level are exponential with
//! rate `γ/2`, so the autocorrelation of `v ξ(t)` is `(v²/4) e^{-γ|τ|}` and the
//! power spectrum is the Lorentzian `v²γ / (2(γ² + ω²))`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::Serialize;

use crate::error::{check_finite, check_nonnegative, Error, Result};

/// Parameters of one fluctuator-qubit channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RtnParams {
    v: f64,
    gamma: f64,
    delta_p0: f64,
}

impl RtnParams {
    /// `v` is the coupling (angular frequency), `gamma` the switching rate and
    /// `delta_p0 = P(ξ(0)=1) − P(ξ(0)=0)` the initial population difference.
    pub fn new(v: f64, gamma: f64, delta_p0: f64) -> Result<Self> {
        check_nonnegative("v", v)?;
        check_finite("gamma", gamma)?;
        if gamma <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "gamma",
                value: gamma,
                reason: "must be positive",
            });
        }
        check_finite("delta_p0", delta_p0)?;
        if delta_p0.abs() > 1.0 {
            return Err(Error::InvalidParameter {
                name: "delta_p0",
                value: delta_p0,
                reason: "must lie in [-1, 1]",
            });
        }
        Ok(Self { v, gamma, delta_p0 })
    }

    /// Builds the channel from the dimensionless ratio `g = v/γ`.
    pub fn from_g(g: f64, gamma: f64, delta_p0: f64) -> Result<Self> {
        check_nonnegative("g", g)?;
        Self::new(g * gamma, gamma, delta_p0)
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn delta_p0(&self) -> f64 {
        self.delta_p0
    }

    pub fn g(&self) -> f64 {
        derived_g(self)
    }

    /// Principal square root of `1 − g²`: real in `[0, 1]` for `g ≤ 1`,
    /// positive imaginary for `g > 1`.
    pub fn mu(&self) -> Complex64 {
        let g = self.g();
        Complex64::new(1.0 - g * g, 0.0).sqrt()
    }

    /// Probability that the fluctuator starts in the level `ξ = 1`.
    pub fn p_up(&self) -> f64 {
        0.5 * (1.0 + self.delta_p0)
    }
}

pub fn derived_g(params: &RtnParams) -> f64 {
    params.v / params.gamma
}

/// Lorentzian power spectrum of `v ξ(t)` at angular frequency `omega`.
pub fn spectrum(params: &RtnParams, omega: f64) -> f64 {
    let RtnParams { v, gamma, .. } = *params;
    v * v * gamma / (2.0 * (gamma * gamma + omega * omega))
}

/// Stationary autocorrelation of `v ξ(t)` at lag `tau`; the Fourier pair of
/// [`spectrum`].
pub fn autocorrelation(params: &RtnParams, tau: f64) -> f64 {
    0.25 * params.v * params.v * (-params.gamma * tau.abs()).exp()
}

/// One realization of the telegraph process on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    initial_level: bool,
    switch_times: Vec<f64>,
    horizon: f64,
}

impl Trajectory {
    pub fn new(initial_level: bool, switch_times: Vec<f64>, horizon: f64) -> Result<Self> {
        check_nonnegative("horizon", horizon)?;
        let mut prev = 0.0;
        for (i, &t) in switch_times.iter().enumerate() {
            if !(t > prev && t <= horizon) {
                return Err(Error::InvalidGrid(i));
            }
            prev = t;
        }
        Ok(Self {
            initial_level,
            switch_times,
            horizon,
        })
    }

    pub fn initial_level(&self) -> bool {
        self.initial_level
    }

    pub fn switch_times(&self) -> &[f64] {
        &self.switch_times
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Level `ξ(t)`; at a switch time the new level is reported.
    pub fn level_at(&self, t: f64) -> bool {
        let flips = self.switch_times.partition_point(|&s| s <= t);
        self.initial_level ^ (flips % 2 == 1)
    }

    /// Exact `∫_a^b ξ(t) dt` for `0 ≤ a ≤ b ≤ horizon`, summed over segments.
    pub fn occupation(&self, a: f64, b: f64) -> f64 {
        debug_assert!(a <= b);
        let mut level = self.initial_level;
        let mut seg_start = 0.0_f64;
        let mut total = 0.0;
        for &s in self.switch_times.iter().chain(std::iter::once(&self.horizon)) {
            if level {
                let lo = seg_start.max(a);
                let hi = s.min(b);
                if hi > lo {
                    total += hi - lo;
                }
            }
            if s >= b {
                break;
            }
            seg_start = s;
            level = !level;
        }
        total
    }
}

/// Draws a trajectory on `[0, horizon]` from the given generator.
///
/// The initial level is 1 with probability `(1 + δp0)/2`; each dwell time is
/// `Exponential(γ/2)`.
pub fn sample_trajectory<R: Rng + ?Sized>(
    params: &RtnParams,
    horizon: f64,
    rng: &mut R,
) -> Result<Trajectory> {
    check_nonnegative("horizon", horizon)?;
    let mut initial_level = rng.random::<f64>() < params.p_up();
    let dwell = Exp::new(0.5 * params.gamma).expect("gamma validated positive");
    let mut switch_times = Vec::new();
    let mut t = 0.0;
    loop {
        t += dwell.sample(rng);
        if t > horizon {
            break;
        }
        // coincident flips cancel; keeps switch times strictly increasing
        match switch_times.last() {
            _ if t <= 0.0 => initial_level = !initial_level,
            Some(&last) if t <= last => {
                switch_times.pop();
            }
            _ => switch_times.push(t),
        }
    }
    Ok(Trajectory {
        initial_level,
        switch_times,
        horizon,
    })
}
