//! Closed-form single-qubit coherence `q(t)/q(0)` under telegraph dephasing.
//!
//! All values are in the frame rotating at the qubit splitting: the
//! deterministic `e^{-iΩt}` factor is dropped since only `|q|` enters the
//! concurrence.
//!
//! With `x = γt/2` (free) or `x = γΔt` (echo) and `μ = √(1 − g²)`:
//!
//! * free: `e^{-ivt/2} [A e^{-(1−μ)x} + (1−A) e^{-(1+μ)x}]`,
//!   `A = (1 + μ − i g δp0) / (2μ)`;
//! * echo at `2Δt`: `e^{-x}/μ² [(1+μ)/2 e^{μx} + (1−μ)/2 e^{-μx} − (1 − μ²)]`.
//!
//! Both are analytic in `μ²`, so the `g = 1` branch point is removable. Within
//! [`BRANCH_TOLERANCE`] of it the μ → 0 limits are used instead.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_nonnegative, Result};
use crate::noise::RtnParams;

/// `|1 − g²|` below which the μ → 0 limit expressions are evaluated.
pub const BRANCH_TOLERANCE: f64 = 1e-8;

/// Rounding slack allowed above unit magnitude.
pub const MAGNITUDE_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Free,
    Echo,
    FreeLargeG,
    EchoLargeG,
}

impl Protocol {
    pub fn is_echo(self) -> bool {
        matches!(self, Protocol::Echo | Protocol::EchoLargeG)
    }

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Free => "free",
            Protocol::Echo => "echo",
            Protocol::FreeLargeG => "free_large_g",
            Protocol::EchoLargeG => "echo_large_g",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A coherence ratio together with the protocol and total elapsed time
/// (`2Δt` for echo protocols).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceValue {
    pub value: Complex64,
    pub protocol: Protocol,
    pub time: f64,
}

impl CoherenceValue {
    pub fn magnitude(&self) -> f64 {
        self.value.norm()
    }
}

/// Free-evolution coherence at time `t`.
pub fn free_coherence(params: &RtnParams, t: f64) -> Result<CoherenceValue> {
    check_nonnegative("t", t)?;
    let value = if t == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        let g = params.g();
        let x = 0.5 * params.gamma() * t;
        let skew = Complex64::new(1.0, -g * params.delta_p0());
        let envelope = if (1.0 - g * g).abs() < BRANCH_TOLERANCE {
            (1.0 + skew * x) * (-x).exp()
        } else {
            let mu = params.mu();
            let a = (mu + skew) / (2.0 * mu);
            a * (-(1.0 - mu) * x).exp() + (1.0 - a) * (-(1.0 + mu) * x).exp()
        };
        Complex64::from_polar(1.0, -0.5 * params.v() * t) * envelope
    };
    Ok(CoherenceValue {
        value,
        protocol: Protocol::Free,
        time: t,
    })
}

/// Echo coherence at `2Δt` for two π pulses separated by `delta_t`.
///
/// The result is real; the imaginary part of the complex evaluation is kept
/// so callers can check it.
pub fn echo_coherence(params: &RtnParams, delta_t: f64) -> Result<CoherenceValue> {
    check_nonnegative("delta_t", delta_t)?;
    let x = params.gamma() * delta_t;
    let g = params.g();
    let m = 1.0 - g * g;
    let value = if x == 0.0 {
        Complex64::new(1.0, 0.0)
    } else if m.abs() < BRANCH_TOLERANCE {
        Complex64::new((-x).exp() * (1.0 + x + 0.5 * x * x), 0.0)
    } else if use_echo_series(x, m) {
        Complex64::new(1.0 - echo_deficit_series(x, m), 0.0)
    } else {
        let mu = params.mu();
        let bracket = 0.5 * (1.0 + mu) * (-(1.0 - mu) * x).exp()
            + 0.5 * (1.0 - mu) * (-(1.0 + mu) * x).exp()
            - (1.0 - mu * mu) * (-x).exp();
        bracket / (mu * mu)
    };
    Ok(CoherenceValue {
        value,
        protocol: Protocol::Echo,
        time: 2.0 * delta_t,
    })
}

/// `1 − q_e(2Δt)` without the cancellation of subtracting from one at short
/// pulse separations.
pub fn echo_deficit(params: &RtnParams, delta_t: f64) -> Result<f64> {
    check_nonnegative("delta_t", delta_t)?;
    let x = params.gamma() * delta_t;
    let g = params.g();
    let m = 1.0 - g * g;
    if x < SERIES_MAX_X {
        // the μ → 0 limit is the m = 0 case of the same series
        let m = if m.abs() < BRANCH_TOLERANCE { 0.0 } else { m };
        if x * x * m.abs() < SERIES_MAX_PHASE {
            return Ok(echo_deficit_series(x, m));
        }
    }
    Ok(1.0 - echo_coherence(params, delta_t)?.value.re)
}

const SERIES_MAX_X: f64 = 0.05;
const SERIES_MAX_PHASE: f64 = 0.25;

fn use_echo_series(x: f64, m: f64) -> bool {
    x < SERIES_MAX_X && x * x * m.abs() < SERIES_MAX_PHASE
}

/// `1 − q_e = e^{-x} Σ_{k≥3} c_k x^k / k!` with `c_{2n+1} = 1 − m^n` and
/// `c_{2n} = 1 − m^{n−1}`, `m = μ²`.
fn echo_deficit_series(x: f64, m: f64) -> f64 {
    let mut power = x * x * x / 6.0;
    let mut sum = 0.0;
    for k in 3..64u32 {
        let n = (k / 2) as i32;
        let c = if k % 2 == 1 {
            1.0 - m.powi(n)
        } else {
            1.0 - m.powi(n - 1)
        };
        let term = c * power;
        sum += term;
        if k > 6 && term.abs() <= 1e-18 * sum.abs() {
            break;
        }
        power *= x / f64::from(k + 1);
    }
    (-x).exp() * sum
}

/// Large-`g` form of the echo coherence, `e^{-γΔt}[1 + sin(gγΔt)/g]`.
pub fn echo_coherence_large_g(params: &RtnParams, delta_t: f64) -> Result<CoherenceValue> {
    check_nonnegative("delta_t", delta_t)?;
    let x = params.gamma() * delta_t;
    let g = params.g();
    let ripple = if g == 0.0 { x } else { (g * x).sin() / g };
    Ok(CoherenceValue {
        value: Complex64::new((-x).exp() * (1.0 + ripple), 0.0),
        protocol: Protocol::EchoLargeG,
        time: 2.0 * delta_t,
    })
}

/// Large-`g` magnitude of the free coherence, `e^{-γt/2}|cos(gγt/2)|`
/// (valid for `δp0 = 0`).
pub fn free_coherence_large_g(params: &RtnParams, t: f64) -> Result<CoherenceValue> {
    check_nonnegative("t", t)?;
    let x = 0.5 * params.gamma() * t;
    Ok(CoherenceValue {
        value: Complex64::new((-x).exp() * (params.g() * x).cos().abs(), 0.0),
        protocol: Protocol::FreeLargeG,
        time: t,
    })
}

/// Evaluates `protocol` at total elapsed time `t` (so `Δt = t/2` for echo).
pub fn coherence(params: &RtnParams, protocol: Protocol, t: f64) -> Result<CoherenceValue> {
    match protocol {
        Protocol::Free => free_coherence(params, t),
        Protocol::FreeLargeG => free_coherence_large_g(params, t),
        Protocol::Echo => echo_coherence(params, 0.5 * t),
        Protocol::EchoLargeG => echo_coherence_large_g(params, 0.5 * t),
    }
}
