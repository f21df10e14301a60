//! Command-line front end.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::entanglement::{EwlState, Family};
use crate::sweep::{
    execute, render_csv, render_json, Channels, Format, GridSpec, GridVariable, McSettings,
    Preset, ProtocolSelection, RunSpec, SweepConfig, SweepError,
};

#[derive(Parser, Debug)]
#[command(name = "rtn-echo-lab", version, about = "Two-qubit entanglement under telegraph noise, with and without spin echo")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Single-qubit coherence of qubit A versus time.
    Coherence(TimeArgs),
    /// Concurrence versus time with feature annotations.
    Sweep(TimeArgs),
    /// Concurrence versus g at fixed pulse separation.
    GSweep(GSweepArgs),
    /// Revival threshold of free evolution.
    Threshold(ThresholdArgs),
    /// Monte-Carlo versus closed-form coherences.
    McValidate(TimeArgs),
    /// Data behind a figure preset.
    Reproduce(ReproduceArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FamilyArg {
    One,
    Two,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ProtocolArg {
    Free,
    Echo,
    Both,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PresetArg {
    Fig1a,
    Fig1b,
    Fig2,
}

#[derive(Args, Debug)]
struct StateArgs {
    /// Weight of the pure component.
    #[arg(long, default_value_t = 0.91)]
    r: f64,
    /// Amplitude |a| of the pure component.
    #[arg(long, default_value_t = std::f64::consts::FRAC_1_SQRT_2)]
    a_mag: f64,
    #[arg(long, value_enum, default_value = "one")]
    family: FamilyArg,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct ChannelArgs {
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    delta_p0: f64,
    #[arg(long, value_enum, default_value = "both")]
    protocol: ProtocolArg,
    /// Add large-g approximation columns.
    #[arg(long)]
    large_g: bool,
    /// Trajectories per point; enables Monte-Carlo columns.
    #[arg(long)]
    n_traj: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct TimeArgs {
    #[command(flatten)]
    state: StateArgs,
    /// Coupling g = v/γ of qubit A.
    #[arg(long)]
    g_a: f64,
    /// Coupling of qubit B; defaults to qubit A's.
    #[arg(long)]
    g_b: Option<f64>,
    #[command(flatten)]
    channel: ChannelArgs,
    /// start:stop:count in γt (free) or γΔt (echo, both).
    #[arg(long, default_value = "0:3:601")]
    grid: String,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct GSweepArgs {
    #[command(flatten)]
    state: StateArgs,
    #[command(flatten)]
    channel: ChannelArgs,
    #[arg(long)]
    gamma_delta_t: f64,
    /// start:stop:count in g.
    #[arg(long, default_value = "0:10:1001")]
    grid: String,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct ThresholdArgs {
    #[command(flatten)]
    state: StateArgs,
    #[arg(long, default_value_t = 1.0)]
    g_lo: f64,
    #[arg(long, default_value_t = 10.0)]
    g_hi: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct ReproduceArgs {
    #[arg(value_enum)]
    preset: PresetArg,
    #[command(flatten)]
    output: OutputArgs,
}

fn state(args: &StateArgs) -> Result<EwlState, SweepError> {
    let family = match args.family {
        FamilyArg::One => Family::OneExcitation,
        FamilyArg::Two => Family::TwoExcitation,
    };
    EwlState::new(args.r, args.a_mag, family).map_err(|e| SweepError::Config {
        field: "state",
        message: e.to_string(),
    })
}

fn protocol(arg: ProtocolArg) -> ProtocolSelection {
    match arg {
        ProtocolArg::Free => ProtocolSelection::Free,
        ProtocolArg::Echo => ProtocolSelection::Echo,
        ProtocolArg::Both => ProtocolSelection::Both,
    }
}

fn mc(args: &ChannelArgs) -> Option<McSettings> {
    args.n_traj.map(|n_traj| McSettings {
        n_traj,
        seed: args.seed,
    })
}

fn time_config(args: &TimeArgs) -> Result<SweepConfig, SweepError> {
    let selection = protocol(args.channel.protocol);
    let config = SweepConfig {
        state: state(&args.state)?,
        channels: Channels {
            g_a: args.g_a,
            g_b: args.g_b.unwrap_or(args.g_a),
            gamma: args.channel.gamma,
            delta_p0: args.channel.delta_p0,
        },
        protocol: selection,
        grid: GridSpec::parse(GridVariable::from(selection.axis()), &args.grid)?,
        gamma_delta_t: None,
        large_g: args.channel.large_g,
        mc: mc(&args.channel),
    };
    config.validate()?;
    Ok(config)
}

fn resolve(command: &Command) -> Result<(RunSpec, &OutputArgs), SweepError> {
    Ok(match command {
        Command::Coherence(a) => (RunSpec::Coherence(time_config(a)?), &a.output),
        Command::Sweep(a) => (RunSpec::Sweep(time_config(a)?), &a.output),
        Command::McValidate(a) => {
            let config = time_config(a)?;
            if config.mc.is_none() {
                return Err(SweepError::Config {
                    field: "n_traj",
                    message: "mc-validate requires --n-traj".into(),
                });
            }
            (RunSpec::McValidate(config), &a.output)
        }
        Command::GSweep(a) => {
            let config = SweepConfig {
                state: state(&a.state)?,
                channels: Channels {
                    gamma: a.channel.gamma,
                    delta_p0: a.channel.delta_p0,
                    ..Channels::identical(0.0)
                },
                protocol: protocol(a.channel.protocol),
                grid: GridSpec::parse(GridVariable::G, &a.grid)?,
                gamma_delta_t: Some(a.gamma_delta_t),
                large_g: a.channel.large_g,
                mc: mc(&a.channel),
            };
            config.validate()?;
            (RunSpec::GSweep(config), &a.output)
        }
        Command::Threshold(a) => (
            RunSpec::Threshold {
                state: state(&a.state)?,
                g_lo: a.g_lo,
                g_hi: a.g_hi,
            },
            &a.output,
        ),
        Command::Reproduce(a) => {
            let preset = match a.preset {
                PresetArg::Fig1a => Preset::Fig1a,
                PresetArg::Fig1b => Preset::Fig1b,
                PresetArg::Fig2 => Preset::Fig2,
            };
            (RunSpec::Reproduce { preset }, &a.output)
        }
    })
}

/// Runs `cli` and returns the process exit status.
pub fn run(cli: Cli) -> i32 {
    match try_run(&cli) {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!("error: validation failed, |z| exceeded {}", crate::sweep::Z_FAIL);
            3
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn try_run(cli: &Cli) -> Result<bool, SweepError> {
    let (spec, output) = resolve(&cli.command)?;
    let work = || execute(&spec);
    let outcome = match output.threads {
        Some(0) => {
            return Err(SweepError::Config {
                field: "threads",
                message: "must be at least 1".into(),
            })
        }
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| SweepError::Config {
                field: "threads",
                message: e.to_string(),
            })?
            .install(work)?,
        None => work()?,
    };
    let format = match output.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    let text = match format {
        Format::Csv => render_csv(&outcome.result),
        Format::Json => render_json(&outcome.result),
    };
    match &output.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(!outcome.validation_failed)
}
