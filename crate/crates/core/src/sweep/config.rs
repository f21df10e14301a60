use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::Serialize;

use super::SweepError;
use crate::coherence::Protocol;
use crate::entanglement::{EwlState, Family, TimeAxis};
use crate::noise::RtnParams;

/// Protocols requested for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolSelection {
    Free,
    Echo,
    Both,
}

impl ProtocolSelection {
    pub fn protocols(self) -> &'static [Protocol] {
        match self {
            ProtocolSelection::Free => &[Protocol::Free],
            ProtocolSelection::Echo => &[Protocol::Echo],
            ProtocolSelection::Both => &[Protocol::Free, Protocol::Echo],
        }
    }

    pub fn has_echo(self) -> bool {
        self != ProtocolSelection::Free
    }

    /// Time axis of a time sweep: `γΔt` whenever an echo curve is present.
    pub fn axis(self) -> TimeAxis {
        if self.has_echo() {
            TimeAxis::GammaDeltaT
        } else {
            TimeAxis::GammaT
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ProtocolSelection::Free => "free",
            ProtocolSelection::Echo => "echo",
            ProtocolSelection::Both => "both",
        }
    }
}

impl FromStr for ProtocolSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "free" => Ok(ProtocolSelection::Free),
            "echo" => Ok(ProtocolSelection::Echo),
            "both" => Ok(ProtocolSelection::Both),
            _ => Err(format!("unknown protocol `{s}` (expected free, echo or both)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GridVariable {
    GammaT,
    GammaDeltaT,
    G,
}

impl GridVariable {
    pub fn name(self) -> &'static str {
        match self {
            GridVariable::GammaT => "gamma_t",
            GridVariable::GammaDeltaT => "gamma_delta_t",
            GridVariable::G => "g",
        }
    }

    pub fn time_axis(self) -> Option<TimeAxis> {
        match self {
            GridVariable::GammaT => Some(TimeAxis::GammaT),
            GridVariable::GammaDeltaT => Some(TimeAxis::GammaDeltaT),
            GridVariable::G => None,
        }
    }
}

impl From<TimeAxis> for GridVariable {
    fn from(axis: TimeAxis) -> Self {
        match axis {
            TimeAxis::GammaT => GridVariable::GammaT,
            TimeAxis::GammaDeltaT => GridVariable::GammaDeltaT,
        }
    }
}

impl FromStr for GridVariable {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gamma_t" => Ok(GridVariable::GammaT),
            "gamma_delta_t" => Ok(GridVariable::GammaDeltaT),
            "g" => Ok(GridVariable::G),
            _ => Err(format!("unknown grid variable `{s}`")),
        }
    }
}

/// `count` evenly spaced values of `variable` from `start` to `stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub variable: GridVariable,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl GridSpec {
    /// Parses `start:stop:count`.
    pub fn parse(variable: GridVariable, text: &str) -> Result<Self, SweepError> {
        let bad = |message: String| SweepError::Config {
            field: "grid",
            message,
        };
        let parts: Vec<&str> = text.split(':').collect();
        let [start, stop, count] = parts[..] else {
            return Err(bad(format!("expected start:stop:count, got `{text}`")));
        };
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| bad(format!("`{s}` is not a number")))
        };
        let count = count
            .trim()
            .parse::<usize>()
            .map_err(|_| bad(format!("`{count}` is not a point count")))?;
        let spec = GridSpec {
            variable,
            start: num(start)?,
            stop: num(stop)?,
            count,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        let bad = |message: String| SweepError::Config {
            field: "grid",
            message,
        };
        if self.count < 2 {
            return Err(bad(format!("count must be at least 2, got {}", self.count)));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(bad("bounds must be finite".into()));
        }
        if self.start < 0.0 {
            return Err(bad(format!("start must be nonnegative, got {}", self.start)));
        }
        if self.start >= self.stop {
            return Err(bad(format!(
                "start {} must be below stop {}",
                self.start, self.stop
            )));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        crate::entanglement::linspace(self.start, self.stop, self.count)
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}:{}",
            self.variable.name(),
            self.start,
            self.stop,
            self.count
        )
    }
}

/// Fluctuator settings for both qubits; couplings are given as `g = v/γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Channels {
    pub g_a: f64,
    pub g_b: f64,
    pub gamma: f64,
    pub delta_p0: f64,
}

impl Channels {
    pub fn identical(g: f64) -> Self {
        Channels {
            g_a: g,
            g_b: g,
            gamma: 1.0,
            delta_p0: 0.0,
        }
    }

    pub fn params(&self) -> Result<(RtnParams, RtnParams), SweepError> {
        let a = RtnParams::from_g(self.g_a, self.gamma, self.delta_p0).map_err(|e| field_error("g_a", e))?;
        let b = RtnParams::from_g(self.g_b, self.gamma, self.delta_p0).map_err(|e| field_error("g_b", e))?;
        Ok((a, b))
    }

    /// Both qubits with coupling `g` and this channel's `γ` and `δp0`.
    pub fn with_g(&self, g: f64) -> Result<RtnParams, SweepError> {
        RtnParams::from_g(g, self.gamma, self.delta_p0).map_err(|e| field_error("g", e))
    }
}

fn field_error(field: &'static str, e: crate::Error) -> SweepError {
    SweepError::Config {
        field,
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct McSettings {
    pub n_traj: usize,
    pub seed: u64,
}

/// Inputs shared by the coherence, sweep, g-sweep and mc-validate runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepConfig {
    pub state: EwlState,
    pub channels: Channels,
    pub protocol: ProtocolSelection,
    pub grid: GridSpec,
    /// Fixed pulse separation of a g-sweep.
    pub gamma_delta_t: Option<f64>,
    pub large_g: bool,
    pub mc: Option<McSettings>,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), SweepError> {
        self.grid.validate()?;
        self.channels.params()?;
        if let Some(x) = self.gamma_delta_t {
            if !(x.is_finite() && x >= 0.0) {
                return Err(SweepError::Config {
                    field: "gamma_delta_t",
                    message: format!("must be finite and nonnegative, got {x}"),
                });
            }
        }
        if let Some(mc) = self.mc {
            if mc.n_traj < crate::montecarlo::MIN_TRAJECTORIES {
                return Err(SweepError::Config {
                    field: "n_traj",
                    message: format!(
                        "at least {} trajectories required, got {}",
                        crate::montecarlo::MIN_TRAJECTORIES,
                        mc.n_traj
                    ),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Fig1a,
    Fig1b,
    Fig2,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig1a => "fig1a",
            Preset::Fig1b => "fig1b",
            Preset::Fig2 => "fig2",
        }
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fig1a" => Ok(Preset::Fig1a),
            "fig1b" => Ok(Preset::Fig1b),
            "fig2" => Ok(Preset::Fig2),
            _ => Err(format!("unknown preset `{s}` (expected fig1a, fig1b or fig2)")),
        }
    }
}

/// A fully resolved invocation. Its record form is embedded in every output
/// file and parses back to the same run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunSpec {
    Coherence(SweepConfig),
    Sweep(SweepConfig),
    GSweep(SweepConfig),
    McValidate(SweepConfig),
    Threshold { state: EwlState, g_lo: f64, g_hi: f64 },
    Reproduce { preset: Preset },
}

impl RunSpec {
    pub fn command(&self) -> &'static str {
        match self {
            RunSpec::Coherence(_) => "coherence",
            RunSpec::Sweep(_) => "sweep",
            RunSpec::GSweep(_) => "g-sweep",
            RunSpec::McValidate(_) => "mc-validate",
            RunSpec::Threshold { .. } => "threshold",
            RunSpec::Reproduce { .. } => "reproduce",
        }
    }

    /// Single-line `{key=value, ...}` record.
    pub fn to_record(&self) -> String {
        let mut fields: Vec<(&str, String)> = vec![("command", self.command().to_string())];
        let push_state = |fields: &mut Vec<(&str, String)>, s: &EwlState| {
            fields.push(("r", s.r().to_string()));
            fields.push(("a_mag", s.a_mag().to_string()));
            fields.push(("family", s.family().name().to_string()));
        };
        match self {
            RunSpec::Coherence(c) | RunSpec::Sweep(c) | RunSpec::GSweep(c) | RunSpec::McValidate(c) => {
                push_state(&mut fields, &c.state);
                fields.push(("g_a", c.channels.g_a.to_string()));
                fields.push(("g_b", c.channels.g_b.to_string()));
                fields.push(("gamma", c.channels.gamma.to_string()));
                fields.push(("delta_p0", c.channels.delta_p0.to_string()));
                fields.push(("protocol", c.protocol.name().to_string()));
                fields.push(("grid", c.grid.to_string()));
                if let Some(x) = c.gamma_delta_t {
                    fields.push(("gamma_delta_t", x.to_string()));
                }
                fields.push(("large_g", c.large_g.to_string()));
                if let Some(mc) = c.mc {
                    fields.push(("n_traj", mc.n_traj.to_string()));
                    fields.push(("seed", mc.seed.to_string()));
                }
            }
            RunSpec::Threshold { state, g_lo, g_hi } => {
                push_state(&mut fields, state);
                fields.push(("g_lo", g_lo.to_string()));
                fields.push(("g_hi", g_hi.to_string()));
            }
            RunSpec::Reproduce { preset } => {
                fields.push(("preset", preset.name().to_string()));
            }
        }
        let mut out = String::from("{");
        for (i, (k, v)) in fields.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            let _ = write!(out, "{k}={v}");
        }
        out.push('}');
        out
    }

    pub fn from_record(record: &str) -> Result<Self, SweepError> {
        let bad = |field: &'static str, message: String| SweepError::Config { field, message };
        let body = record
            .trim()
            .strip_prefix('{')
            .and_then(|s| s.strip_suffix('}'))
            .ok_or_else(|| bad("config", format!("not a record: `{record}`")))?;
        let mut map = BTreeMap::new();
        for pair in body.split(", ").filter(|p| !p.is_empty()) {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| bad("config", format!("malformed field `{pair}`")))?;
            map.insert(k.to_string(), v.to_string());
        }
        let get = |field: &'static str| {
            map.get(field)
                .map(String::as_str)
                .ok_or_else(|| bad(field, "missing".into()))
        };
        let num = |field: &'static str| -> Result<f64, SweepError> {
            get(field)?
                .parse::<f64>()
                .map_err(|_| bad(field, "not a number".into()))
        };
        let state = || -> Result<EwlState, SweepError> {
            let family = match get("family")? {
                "one_excitation" => Family::OneExcitation,
                "two_excitation" => Family::TwoExcitation,
                other => return Err(bad("family", format!("unknown family `{other}`"))),
            };
            EwlState::new(num("r")?, num("a_mag")?, family).map_err(|e| bad("r", e.to_string()))
        };
        let sweep = || -> Result<SweepConfig, SweepError> {
            let grid_text = get("grid")?;
            let (variable, rest) = grid_text
                .split_once(':')
                .ok_or_else(|| bad("grid", format!("malformed grid `{grid_text}`")))?;
            let variable = variable.parse().map_err(|m| bad("grid", m))?;
            let mc = match (map.get("n_traj"), map.get("seed")) {
                (Some(n), Some(s)) => Some(McSettings {
                    n_traj: n.parse().map_err(|_| bad("n_traj", "not a count".into()))?,
                    seed: s.parse().map_err(|_| bad("seed", "not an integer".into()))?,
                }),
                _ => None,
            };
            let config = SweepConfig {
                state: state()?,
                channels: Channels {
                    g_a: num("g_a")?,
                    g_b: num("g_b")?,
                    gamma: num("gamma")?,
                    delta_p0: num("delta_p0")?,
                },
                protocol: get("protocol")?.parse().map_err(|m| bad("protocol", m))?,
                grid: GridSpec::parse(variable, rest)?,
                gamma_delta_t: map
                    .contains_key("gamma_delta_t")
                    .then(|| num("gamma_delta_t"))
                    .transpose()?,
                large_g: get("large_g")?
                    .parse()
                    .map_err(|_| bad("large_g", "not a boolean".into()))?,
                mc,
            };
            config.validate()?;
            Ok(config)
        };
        match get("command")? {
            "coherence" => Ok(RunSpec::Coherence(sweep()?)),
            "sweep" => Ok(RunSpec::Sweep(sweep()?)),
            "g-sweep" => Ok(RunSpec::GSweep(sweep()?)),
            "mc-validate" => Ok(RunSpec::McValidate(sweep()?)),
            "threshold" => Ok(RunSpec::Threshold {
                state: state()?,
                g_lo: num("g_lo")?,
                g_hi: num("g_hi")?,
            }),
            "reproduce" => Ok(RunSpec::Reproduce {
                preset: get("preset")?.parse().map_err(|m| bad("preset", m))?,
            }),
            other => Err(bad("command", format!("unknown command `{other}`"))),
        }
    }
}
