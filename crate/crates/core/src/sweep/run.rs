use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{Channels, GridSpec, GridVariable, Preset, ProtocolSelection, RunSpec, SweepConfig};
use super::SweepError;
use crate::coherence::{coherence, Protocol};
use crate::entanglement::{
    concurrence, concurrence_trace, detect_features, linspace, threshold_g, EwlState, Family,
    FeatureReport, ThresholdReport, TimeAxis,
};
use crate::montecarlo::{mc_coherence, mc_concurrence_at, ChannelTag};
use crate::noise::RtnParams;
use crate::Error;

/// mc-validate fails when any point exceeds this |z|.
pub const Z_FAIL: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Text(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Annotation {
    Features { curve: String, report: FeatureReport },
    Skipped { curve: String, reason: String },
    Threshold { report: ThresholdReport },
    ThresholdUnavailable { reason: String },
    Validation { points: usize, within_3: usize, max_abs_z: f64, passed: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    /// Resolved run in record form.
    pub config: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub annotations: Vec<Annotation>,
}

impl SweepResult {
    fn new(spec: &RunSpec, columns: Vec<String>) -> Self {
        SweepResult {
            config: spec.to_record(),
            columns,
            rows: Vec::new(),
            annotations: Vec::new(),
        }
    }

    /// Values of a numeric column.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        self.rows
            .iter()
            .map(|row| match row[j] {
                Cell::Num(x) => Some(x),
                Cell::Text(_) => None,
            })
            .collect()
    }

    pub fn features(&self, curve: &str) -> Option<&FeatureReport> {
        self.annotations.iter().find_map(|a| match a {
            Annotation::Features { curve: c, report } if c == curve => Some(report),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub result: SweepResult,
    pub points: usize,
    pub within_3: usize,
    pub max_abs_z: f64,
    pub passed: bool,
}

/// Result of any run, plus whether it counts as a validation failure.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub result: SweepResult,
    pub validation_failed: bool,
}

pub fn execute(spec: &RunSpec) -> Result<Outcome, SweepError> {
    let ok = |result| Outcome {
        result,
        validation_failed: false,
    };
    match spec {
        RunSpec::Coherence(c) => run_coherence(c).map(ok),
        RunSpec::Sweep(c) => run_concurrence_sweep(c).map(ok),
        RunSpec::GSweep(c) => run_g_sweep(c).map(ok),
        RunSpec::Threshold { state, g_lo, g_hi } => run_threshold(state, *g_lo, *g_hi).map(ok),
        RunSpec::Reproduce { preset } => reproduce(*preset).map(ok),
        RunSpec::McValidate(c) => run_mc_validate(c).map(|v| Outcome {
            validation_failed: !v.passed,
            result: v.result,
        }),
    }
}

fn config_error(field: &'static str, message: impl Into<String>) -> SweepError {
    SweepError::Config {
        field,
        message: message.into(),
    }
}

fn time_axis(config: &SweepConfig) -> Result<TimeAxis, SweepError> {
    let expected = config.protocol.axis();
    match config.grid.variable.time_axis() {
        Some(axis) if axis == expected => Ok(axis),
        _ => Err(config_error(
            "grid",
            format!(
                "protocol `{}` is swept over {}, not {}",
                config.protocol.name(),
                expected.name(),
                config.grid.variable.name()
            ),
        )),
    }
}

fn large_g(protocol: Protocol) -> Protocol {
    match protocol {
        Protocol::Free | Protocol::FreeLargeG => Protocol::FreeLargeG,
        Protocol::Echo | Protocol::EchoLargeG => Protocol::EchoLargeG,
    }
}

/// Exact protocols followed by their large-`g` forms when requested.
fn curve_protocols(selection: ProtocolSelection, with_large_g: bool) -> Vec<Protocol> {
    let mut out = selection.protocols().to_vec();
    if with_large_g {
        out.extend(selection.protocols().iter().map(|&p| large_g(p)));
    }
    out
}

struct TimeCurve {
    label: String,
    params_a: RtnParams,
    params_b: RtnParams,
    protocol: Protocol,
}

/// Evaluates each curve on `grid`; exact protocols also get a feature report.
fn time_curves(
    state: &EwlState,
    curves: &[TimeCurve],
    axis: TimeAxis,
    grid: &[f64],
) -> Result<(Vec<Vec<f64>>, Vec<Annotation>), SweepError> {
    let mut columns = Vec::with_capacity(curves.len());
    let mut annotations = Vec::new();
    for curve in curves {
        let trace = concurrence_trace(
            state,
            &curve.params_a,
            &curve.params_b,
            curve.protocol,
            axis,
            grid.to_vec(),
        )?;
        if matches!(curve.protocol, Protocol::Free | Protocol::Echo) {
            annotations.push(match detect_features(&trace) {
                Ok(report) => Annotation::Features {
                    curve: curve.label.clone(),
                    report,
                },
                Err(e @ Error::GridTooCoarse { .. }) => Annotation::Skipped {
                    curve: curve.label.clone(),
                    reason: e.to_string(),
                },
                Err(e) => return Err(e.into()),
            });
        }
        columns.push(trace.values().to_vec());
    }
    Ok((columns, annotations))
}

fn transpose(grid: &[f64], columns: &[Vec<f64>]) -> Vec<Vec<Cell>> {
    grid.iter()
        .enumerate()
        .map(|(i, &x)| {
            std::iter::once(Cell::Num(x))
                .chain(columns.iter().map(|c| Cell::Num(c[i])))
                .collect()
        })
        .collect()
}

fn mc_protocol(selection: ProtocolSelection) -> Protocol {
    if selection.has_echo() {
        Protocol::Echo
    } else {
        Protocol::Free
    }
}

/// Concurrence versus time for the selected protocols.
pub fn run_concurrence_sweep(config: &SweepConfig) -> Result<SweepResult, SweepError> {
    config.validate()?;
    let axis = time_axis(config)?;
    let (params_a, params_b) = config.channels.params()?;
    let curves: Vec<TimeCurve> = curve_protocols(config.protocol, config.large_g)
        .into_iter()
        .map(|protocol| TimeCurve {
            label: format!("C_{}", protocol.name()),
            params_a,
            params_b,
            protocol,
        })
        .collect();
    let grid = config.grid.points();
    let (mut values, annotations) = time_curves(&config.state, &curves, axis, &grid)?;
    let mut columns: Vec<String> = std::iter::once(axis.name().to_string())
        .chain(curves.iter().map(|c| c.label.clone()))
        .collect();
    if let Some(mc) = config.mc {
        let protocol = mc_protocol(config.protocol);
        let estimates = grid
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let t = x * axis.scale() / params_a.gamma();
                mc_concurrence_at(
                    &config.state,
                    &params_a,
                    &params_b,
                    protocol,
                    t,
                    mc.n_traj,
                    mc.seed,
                    i as u64,
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        values.push(estimates.iter().map(|e| e.value).collect());
        values.push(estimates.iter().map(|e| e.std_error).collect());
        columns.push("mc_mean".into());
        columns.push("mc_stderr".into());
    }
    let mut result = SweepResult::new(&RunSpec::Sweep(*config), columns);
    result.rows = transpose(&grid, &values);
    result.annotations = annotations;
    Ok(result)
}

/// Single-qubit coherence of channel A versus time.
pub fn run_coherence(config: &SweepConfig) -> Result<SweepResult, SweepError> {
    config.validate()?;
    let axis = time_axis(config)?;
    let (params, _) = config.channels.params()?;
    let grid = config.grid.points();
    let mut columns = vec![axis.name().to_string()];
    let mut values: Vec<Vec<f64>> = Vec::new();
    let physical = |x: f64| x * axis.scale() / params.gamma();
    for protocol in curve_protocols(config.protocol, config.large_g) {
        let q = grid
            .par_iter()
            .map(|&x| coherence(&params, protocol, physical(x)).map(|c| c.value))
            .collect::<Result<Vec<Complex64>, _>>()?;
        let name = protocol.name();
        columns.extend([format!("q_{name}_re"), format!("q_{name}_im"), format!("q_{name}_abs")]);
        values.push(q.iter().map(|z| z.re).collect());
        values.push(q.iter().map(|z| z.im).collect());
        values.push(q.iter().map(|z| z.norm()).collect());
    }
    if let Some(mc) = config.mc {
        let protocol = mc_protocol(config.protocol);
        let estimates = grid
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let tag = ChannelTag::QUBIT_A.at_point(i as u64);
                mc_coherence(&params, protocol, physical(x), mc.n_traj, mc.seed, tag)
            })
            .collect::<Result<Vec<_>, _>>()?;
        columns.extend(["mc_re", "mc_im", "mc_stderr_re", "mc_stderr_im"].map(String::from));
        values.push(estimates.iter().map(|e| e.mean.re).collect());
        values.push(estimates.iter().map(|e| e.mean.im).collect());
        values.push(estimates.iter().map(|e| e.std_error.re).collect());
        values.push(estimates.iter().map(|e| e.std_error.im).collect());
    }
    let mut result = SweepResult::new(&RunSpec::Coherence(*config), columns);
    result.rows = transpose(&grid, &values);
    Ok(result)
}

const DEFAULT_G_BRACKET: (f64, f64) = (1.0, 10.0);

fn threshold_annotation(state: &EwlState) -> Annotation {
    match threshold_g(state, DEFAULT_G_BRACKET.0, DEFAULT_G_BRACKET.1) {
        Ok(report) => Annotation::Threshold { report },
        Err(e) => Annotation::ThresholdUnavailable {
            reason: e.to_string(),
        },
    }
}

/// Concurrence of identical channels at fixed total time `t` versus `g`.
fn g_column(
    state: &EwlState,
    channels: &Channels,
    protocol: Protocol,
    t: f64,
    g_grid: &[f64],
) -> Result<Vec<f64>, SweepError> {
    g_grid
        .par_iter()
        .map(|&g| {
            let params = channels.with_g(g)?;
            let q = coherence(&params, protocol, t)?.magnitude();
            Ok(concurrence(state, q, q)?)
        })
        .collect()
}

/// Concurrence versus `g` at a fixed pulse separation; both qubits take the
/// swept coupling and free evolution is evaluated at `t = 2Δt`.
pub fn run_g_sweep(config: &SweepConfig) -> Result<SweepResult, SweepError> {
    config.validate()?;
    if config.grid.variable != GridVariable::G {
        return Err(config_error("grid", "a g-sweep grid must run over g"));
    }
    let gamma_delta_t = config
        .gamma_delta_t
        .ok_or_else(|| config_error("gamma_delta_t", "required for a g-sweep"))?;
    let t = 2.0 * gamma_delta_t / config.channels.gamma;
    let grid = config.grid.points();
    let protocols = curve_protocols(config.protocol, config.large_g);
    let mut columns = vec!["g".to_string()];
    let mut values = Vec::new();
    for &protocol in &protocols {
        columns.push(format!("C_{}", protocol.name()));
        values.push(g_column(&config.state, &config.channels, protocol, t, &grid)?);
    }
    if let Some(mc) = config.mc {
        let protocol = mc_protocol(config.protocol);
        let estimates = grid
            .iter()
            .enumerate()
            .map(|(i, &g)| {
                let params = config.channels.with_g(g)?;
                Ok(mc_concurrence_at(
                    &config.state,
                    &params,
                    &params,
                    protocol,
                    t,
                    mc.n_traj,
                    mc.seed,
                    i as u64,
                )?)
            })
            .collect::<Result<Vec<_>, SweepError>>()?;
        values.push(estimates.iter().map(|e| e.value).collect());
        values.push(estimates.iter().map(|e| e.std_error).collect());
        columns.push("mc_mean".into());
        columns.push("mc_stderr".into());
    }
    let mut result = SweepResult::new(&RunSpec::GSweep(*config), columns);
    result.rows = transpose(&grid, &values);
    result.annotations.push(threshold_annotation(&config.state));
    Ok(result)
}

/// Revival threshold `ḡ` as a one-row table.
pub fn run_threshold(state: &EwlState, g_lo: f64, g_hi: f64) -> Result<SweepResult, SweepError> {
    for (field, g) in [("g_lo", g_lo), ("g_hi", g_hi)] {
        if !(g.is_finite() && g >= 0.0) {
            return Err(config_error(field, format!("must be finite and nonnegative, got {g}")));
        }
    }
    let report = threshold_g(state, g_lo, g_hi)?;
    let spec = RunSpec::Threshold {
        state: *state,
        g_lo,
        g_hi,
    };
    let columns = ["g_bar", "bracket_lo", "bracket_hi", "resolution", "horizon_gamma_t"];
    let mut result = SweepResult::new(&spec, columns.map(String::from).to_vec());
    result.rows.push(
        [
            report.g_bar,
            report.bracket.0,
            report.bracket.1,
            report.resolution,
            report.horizon_gamma_t,
        ]
        .map(Cell::Num)
        .to_vec(),
    );
    Ok(result)
}

/// Compares trajectory averages with the closed forms point by point.
pub fn run_mc_validate(config: &SweepConfig) -> Result<ValidationReport, SweepError> {
    config.validate()?;
    let axis = time_axis(config)?;
    let mc = config
        .mc
        .ok_or_else(|| config_error("n_traj", "mc-validate needs trajectory settings"))?;
    let (params_a, params_b) = config.channels.params()?;
    let mut channels = vec![("A", params_a, ChannelTag::QUBIT_A)];
    if params_b != params_a {
        channels.push(("B", params_b, ChannelTag::QUBIT_B));
    }
    let columns = [
        axis.name(),
        "protocol",
        "channel",
        "analytic_re",
        "analytic_im",
        "mc_re",
        "mc_im",
        "mc_stderr_re",
        "mc_stderr_im",
        "z",
    ];
    let mut result = SweepResult::new(&RunSpec::McValidate(*config), columns.map(String::from).to_vec());
    let grid = config.grid.points();
    let (mut within_3, mut max_abs_z) = (0, 0.0_f64);
    for &protocol in config.protocol.protocols() {
        // Echo streams sit in a separate tag range from free ones.
        let protocol_bit = if protocol.is_echo() { 4 } else { 0 };
        for &(name, params, tag) in &channels {
            for (i, &x) in grid.iter().enumerate() {
                let t = x * axis.scale() / params.gamma();
                let analytic = coherence(&params, protocol, t)?.value;
                let tag = ChannelTag(tag.0 | protocol_bit).at_point(i as u64);
                let est = mc_coherence(&params, protocol, t, mc.n_traj, mc.seed, tag)?;
                let z = est.z_score(analytic);
                if z.abs() <= 3.0 {
                    within_3 += 1;
                }
                max_abs_z = max_abs_z.max(z.abs());
                result.rows.push(vec![
                    Cell::Num(x),
                    Cell::Text(protocol.name()),
                    Cell::Text(name),
                    Cell::Num(analytic.re),
                    Cell::Num(analytic.im),
                    Cell::Num(est.mean.re),
                    Cell::Num(est.mean.im),
                    Cell::Num(est.std_error.re),
                    Cell::Num(est.std_error.im),
                    Cell::Num(z),
                ]);
            }
        }
    }
    let points = result.rows.len();
    let passed = max_abs_z <= Z_FAIL;
    result.annotations.push(Annotation::Validation {
        points,
        within_3,
        max_abs_z,
        passed,
    });
    Ok(ValidationReport {
        result,
        points,
        within_3,
        max_abs_z,
        passed,
    })
}

const PRESET_R: f64 = 0.91;
const FIG1_GRID: (f64, f64, usize) = (0.0, 8.0, 1601);
const FIG2_GRID: (f64, f64, usize) = (0.0, 10.0, 1001);

fn preset_state() -> EwlState {
    EwlState::new(PRESET_R, std::f64::consts::FRAC_1_SQRT_2, Family::OneExcitation)
        .expect("preset state is valid")
}

/// Figure data with fixed parameters: r = 0.91, |a| = 1/√2, δp0 = 0, γ = 1.
pub fn reproduce(preset: Preset) -> Result<SweepResult, SweepError> {
    let state = preset_state();
    let spec = RunSpec::Reproduce { preset };
    let channel = |g: f64| RtnParams::from_g(g, 1.0, 0.0);
    match preset {
        Preset::Fig1a | Preset::Fig1b => {
            let pairs: &[(f64, f64, &str)] = match preset {
                Preset::Fig1a => &[(0.7, 0.7, "g=0.7"), (7.0, 7.0, "g=7")],
                _ => &[(0.3, 4.0, "g_a=0.3,g_b=4")],
            };
            let mut curves = Vec::new();
            for &(g_a, g_b, tag) in pairs {
                for protocol in [Protocol::Free, Protocol::Echo] {
                    curves.push(TimeCurve {
                        label: format!("C_{}[{tag}]", protocol.name()),
                        params_a: channel(g_a)?,
                        params_b: channel(g_b)?,
                        protocol,
                    });
                }
            }
            let axis = TimeAxis::GammaDeltaT;
            let grid = linspace(FIG1_GRID.0, FIG1_GRID.1, FIG1_GRID.2);
            let (values, annotations) = time_curves(&state, &curves, axis, &grid)?;
            let columns = std::iter::once(axis.name().to_string())
                .chain(curves.iter().map(|c| c.label.clone()))
                .collect();
            let mut result = SweepResult::new(&spec, columns);
            result.rows = transpose(&grid, &values);
            result.annotations = annotations;
            Ok(result)
        }
        Preset::Fig2 => {
            let channels = Channels::identical(0.0);
            let grid = GridSpec {
                variable: GridVariable::G,
                start: FIG2_GRID.0,
                stop: FIG2_GRID.1,
                count: FIG2_GRID.2,
            }
            .points();
            let mut columns = vec!["g".to_string()];
            let mut values = Vec::new();
            for gamma_delta_t in [0.1, 1.1] {
                for protocol in curve_protocols(ProtocolSelection::Both, true) {
                    columns.push(format!("C_{}[gamma_delta_t={gamma_delta_t}]", protocol.name()));
                    values.push(g_column(&state, &channels, protocol, 2.0 * gamma_delta_t, &grid)?);
                }
            }
            let mut result = SweepResult::new(&spec, columns);
            result.rows = transpose(&grid, &values);
            result.annotations.push(threshold_annotation(&state));
            Ok(result)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::McSettings;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn config(g: f64, protocol: ProtocolSelection, grid: (f64, f64, usize)) -> SweepConfig {
        SweepConfig {
            state: EwlState::new(0.91, FRAC_1_SQRT_2, Family::OneExcitation).unwrap(),
            channels: Channels::identical(g),
            protocol,
            grid: GridSpec {
                variable: protocol.axis().into(),
                start: grid.0,
                stop: grid.1,
                count: grid.2,
            },
            gamma_delta_t: None,
            large_g: false,
            mc: None,
        }
    }

    #[test]
    fn g7_echo_sweep_reports_plateau_near_0_9() {
        let r = run_concurrence_sweep(&config(7.0, ProtocolSelection::Echo, (0.0, 3.0, 601))).unwrap();
        assert_eq!(r.columns, ["gamma_delta_t", "C_echo"]);
        assert_eq!(r.rows.len(), 601);
        let f = r.features("C_echo").unwrap();
        assert!(f.plateaus.iter().any(|p| (p.time - 0.9).abs() < 0.05), "{f:?}");
    }

    #[test]
    fn weak_free_sweep_has_esd_without_revivals() {
        let r = run_concurrence_sweep(&config(0.7, ProtocolSelection::Free, (0.0, 12.0, 1201))).unwrap();
        let f = r.features("C_free").unwrap();
        assert!(f.esd_time.is_some());
        assert!(!f.has_revivals);
    }

    #[test]
    fn trivial_grid_first_row_is_initial_concurrence() {
        let r = run_concurrence_sweep(&config(2.0, ProtocolSelection::Both, (0.0, 1e-9, 2))).unwrap();
        let free = r.column("C_free").unwrap();
        assert!((free[0] - 0.865).abs() < 1e-12);
        assert!((r.column("C_echo").unwrap()[0] - 0.865).abs() < 1e-12);
    }

    #[test]
    fn coarse_grid_skips_features() {
        let r = run_concurrence_sweep(&config(2.0, ProtocolSelection::Echo, (0.0, 3.0, 11))).unwrap();
        assert!(matches!(r.annotations[0], Annotation::Skipped { .. }));
    }

    #[test]
    fn axis_mismatch_is_config_error() {
        let mut c = config(2.0, ProtocolSelection::Echo, (0.0, 3.0, 11));
        c.grid.variable = GridVariable::GammaT;
        assert!(matches!(run_concurrence_sweep(&c), Err(SweepError::Config { field: "grid", .. })));
    }

    #[test]
    fn g_sweep_zero_row_equals_initial_concurrence() {
        let mut c = config(0.0, ProtocolSelection::Both, (0.0, 1.0, 2));
        c.grid = GridSpec {
            variable: GridVariable::G,
            start: 0.0,
            stop: 10.0,
            count: 101,
        };
        c.gamma_delta_t = Some(0.1);
        let r = run_g_sweep(&c).unwrap();
        let (free, echo) = (r.column("C_free").unwrap(), r.column("C_echo").unwrap());
        assert!((free[0] - 0.865).abs() < 1e-12 && (echo[0] - 0.865).abs() < 1e-12);
        assert!(free.iter().zip(&echo).skip(1).all(|(f, e)| e > f));
        assert!(matches!(r.annotations[0], Annotation::Threshold { .. }));
    }

    #[test]
    fn g_sweep_requires_gamma_delta_t() {
        let mut c = config(0.0, ProtocolSelection::Both, (0.0, 1.0, 2));
        c.grid.variable = GridVariable::G;
        assert!(matches!(run_g_sweep(&c), Err(SweepError::Config { field: "gamma_delta_t", .. })));
    }

    #[test]
    fn threshold_table_and_never_entangled() {
        let state = EwlState::new(0.91, FRAC_1_SQRT_2, Family::OneExcitation).unwrap();
        let r = run_threshold(&state, 1.0, 10.0).unwrap();
        let g_bar = r.column("g_bar").unwrap()[0];
        assert!((2.2..=2.4).contains(&g_bar), "{g_bar}");
        let dead = EwlState::new(0.3, FRAC_1_SQRT_2, Family::OneExcitation).unwrap();
        assert!(matches!(
            run_threshold(&dead, 1.0, 10.0),
            Err(SweepError::Domain(Error::NeverEntangled { .. }))
        ));
    }

    #[test]
    fn mc_validate_zero_time_row_has_zero_z() {
        let mut c = config(0.7, ProtocolSelection::Free, (0.0, 2.0, 3));
        c.mc = Some(McSettings { n_traj: 4000, seed: 9 });
        let v = run_mc_validate(&c).unwrap();
        assert_eq!(v.points, 3);
        assert_eq!(v.result.rows[0][9], Cell::Num(0.0));
    }

    #[test]
    fn presets_have_expected_curve_counts() {
        assert_eq!(reproduce(Preset::Fig1a).unwrap().columns.len(), 5);
        assert_eq!(reproduce(Preset::Fig1b).unwrap().columns.len(), 3);
        assert_eq!(reproduce(Preset::Fig2).unwrap().columns.len(), 9);
    }
}
