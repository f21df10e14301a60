//! Concurrence of extended Werner-like (EWL) states whose qubits dephase
//! independently.
//!
//! For both EWL families the state keeps its X form and
//! `C(t) = 2 max{0, r|a|√(1−|a|²) |q_A(t) q_B(t)| − (1−r)/4}`.

mod features;

pub use features::{
    detect_features, plateau_prediction, threshold_g, FeatureReport, Plateau, PlateauPrediction,
    ThresholdReport, DARK_MIN_LENGTH, ESD_TOLERANCE, MAX_SPACING, PLATEAU_SLOPE_FRACTION,
    PLATEAU_WINDOW, REVIVAL_FLOOR, THRESHOLD_HORIZON, THRESHOLD_RESOLUTION,
};

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coherence::{coherence, Protocol, MAGNITUDE_SLACK};
use crate::error::{check_finite, Error, Result};
use crate::noise::RtnParams;

/// Pure part of the EWL state: `a|01⟩ + b|10⟩` or `a|00⟩ + b|11⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    OneExcitation,
    TwoExcitation,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::OneExcitation => "one_excitation",
            Family::TwoExcitation => "two_excitation",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `ρ = r |ψ_a⟩⟨ψ_a| + (1 − r)/4 · 𝟙`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EwlState {
    r: f64,
    a_mag: f64,
    family: Family,
}

impl EwlState {
    pub fn new(r: f64, a_mag: f64, family: Family) -> Result<Self> {
        unit_interval("r", r)?;
        unit_interval("a_mag", a_mag)?;
        Ok(Self { r, a_mag, family })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn a_mag(&self) -> f64 {
        self.a_mag
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// `|a||b|` with `|b| = √(1 − |a|²)`.
    pub fn ab(&self) -> f64 {
        self.a_mag * (1.0 - self.a_mag * self.a_mag).max(0.0).sqrt()
    }

    pub fn purity(&self) -> f64 {
        purity(self.r)
    }

    pub fn initial_concurrence(&self) -> f64 {
        initial_concurrence(self)
    }

    pub fn is_entangled(&self) -> bool {
        self.initial_concurrence() > 0.0
    }
}

fn unit_interval(name: &'static str, value: f64) -> Result<f64> {
    check_finite(name, value)?;
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must lie in [0, 1]",
        })
    }
}

pub fn initial_concurrence(state: &EwlState) -> f64 {
    2.0 * (state.r * state.ab() - 0.25 * (1.0 - state.r)).max(0.0)
}

/// Smallest `r` above which the state is entangled, `1/(1 + 4|ab|)`.
pub fn critical_purity(a_mag: f64) -> f64 {
    let ab = a_mag * (1.0 - a_mag * a_mag).max(0.0).sqrt();
    1.0 / (1.0 + 4.0 * ab)
}

/// Purity `Tr ρ² = (1 + 3r²)/4`.
pub fn purity(r: f64) -> f64 {
    0.25 * (1.0 + 3.0 * r * r)
}

/// Concurrence for single-qubit coherence magnitudes `q_a` and `q_b`.
pub fn concurrence(state: &EwlState, q_a: f64, q_b: f64) -> Result<f64> {
    let q_a = coherence_magnitude(q_a)?;
    let q_b = coherence_magnitude(q_b)?;
    Ok(2.0 * (state.r * state.ab() * q_a * q_b - 0.25 * (1.0 - state.r)).max(0.0))
}

fn coherence_magnitude(q: f64) -> Result<f64> {
    if (0.0..=1.0 + MAGNITUDE_SLACK).contains(&q) {
        Ok(q.min(1.0))
    } else {
        Err(Error::CoherenceOutOfRange(q))
    }
}

/// Dimensionless time variable of a trace grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeAxis {
    /// `x = γt`.
    GammaT,
    /// `x = γΔt`, total time `2Δt`.
    GammaDeltaT,
}

impl TimeAxis {
    /// Physical `γt` per unit of `x`.
    pub fn scale(self) -> f64 {
        match self {
            TimeAxis::GammaT => 1.0,
            TimeAxis::GammaDeltaT => 2.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TimeAxis::GammaT => "gamma_t",
            TimeAxis::GammaDeltaT => "gamma_delta_t",
        }
    }

    /// The axis a protocol is plotted against by default.
    pub fn for_protocol(protocol: Protocol) -> Self {
        if protocol.is_echo() {
            TimeAxis::GammaDeltaT
        } else {
            TimeAxis::GammaT
        }
    }
}

impl fmt::Display for TimeAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Concurrence sampled on a dimensionless time grid. The grid is measured in
/// units of channel A's switching rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcurrenceTrace {
    state: EwlState,
    params_a: RtnParams,
    params_b: RtnParams,
    protocol: Protocol,
    axis: TimeAxis,
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl ConcurrenceTrace {
    pub fn state(&self) -> &EwlState {
        &self.state
    }

    pub fn channels(&self) -> (&RtnParams, &RtnParams) {
        (&self.params_a, &self.params_b)
    }

    pub fn protocol(&self) -> Protocol {
        self.protocol
    }

    pub fn axis(&self) -> TimeAxis {
        self.axis
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Evaluates the underlying closed form at an arbitrary grid coordinate.
    pub fn value_at(&self, x: f64) -> Result<f64> {
        evaluate(
            &self.state,
            &self.params_a,
            &self.params_b,
            self.protocol,
            self.axis,
            x,
        )
    }
}

fn evaluate(
    state: &EwlState,
    params_a: &RtnParams,
    params_b: &RtnParams,
    protocol: Protocol,
    axis: TimeAxis,
    x: f64,
) -> Result<f64> {
    let t = x * axis.scale() / params_a.gamma();
    let q_a = coherence(params_a, protocol, t)?.magnitude();
    let q_b = coherence(params_b, protocol, t)?.magnitude();
    concurrence(state, q_a, q_b)
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    let mut prev = f64::NEG_INFINITY;
    for (i, &x) in grid.iter().enumerate() {
        if !x.is_finite() || x < 0.0 || x <= prev {
            return Err(Error::InvalidGrid(i));
        }
        prev = x;
    }
    Ok(())
}

/// Evaluates the concurrence pointwise on `grid`.
pub fn concurrence_trace(
    state: &EwlState,
    params_a: &RtnParams,
    params_b: &RtnParams,
    protocol: Protocol,
    axis: TimeAxis,
    grid: Vec<f64>,
) -> Result<ConcurrenceTrace> {
    check_grid(&grid)?;
    let values = grid
        .par_iter()
        .map(|&x| evaluate(state, params_a, params_b, protocol, axis, x))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConcurrenceTrace {
        state: *state,
        params_a: *params_a,
        params_b: *params_b,
        protocol,
        axis,
        grid,
        values,
    })
}

/// `count` evenly spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (count - 1) as f64;
            (0..count)
                .map(|i| if i + 1 == count { stop } else { start + step * i as f64 })
                .collect()
        }
    }
}
