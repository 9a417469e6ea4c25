//! `er-repeater`: scenario runner and batch evaluator for the repeater models.
//!
//! Exit status is 0 on success, 2 when results carry validity warnings and
//! 1 on any error. Nothing is written when the arguments or overrides are
//! rejected.

mod commands;
mod eval;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context as _, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use er_repeater::presets::{er167_yso_document, PresetDocument};
use er_repeater::Preset;

use crate::output::{sha256_hex, write_manifest, write_tables, RunManifest, Table};

#[derive(Parser, Debug)]
#[command(name = "er-repeater", version, about = "Single-ion quantum repeater models")]
struct Cli {
    /// Parameter file (JSON) or the name of a bundled preset.
    #[arg(long, global = true, value_name = "FILE")]
    preset: Option<String>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Monte Carlo trials.
    #[arg(long, global = true)]
    trials: Option<usize>,

    /// Parameter override `section.key=value`, e.g. `ion.gamma_star=2pi*32 Hz`.
    #[arg(long = "set", short = 's', global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Every derived rate and headline figure of merit for the preset.
    DeriveParams,
    /// Evaluate one operation for every row of a CSV table.
    Eval(EvalArgs),
    /// One simulated gate at a single detuning.
    SimulateGate(SimulateArgs),
    /// Entanglement fidelity against Purcell factor.
    Fig3(Fig3Args),
    /// Simulated gate fidelity against cavity detuning.
    Fig4(Fig4Args),
    /// Dipole-gate fidelity against ion separation.
    Fig5Dipole(Fig5Args),
    /// Readout fidelity for every pulse count at a fixed total time.
    ReadoutScan(ReadoutArgs),
    /// End-to-end fidelity against number of links.
    Fig6(Fig6Args),
    /// Distribution rate against distance.
    Fig7(Fig7Args),
    /// Monte Carlo waiting times against the closed forms.
    McRate(McArgs),
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Input table.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub op: eval::Operation,
    /// Output file name inside --out; defaults to `eval_<op>.csv`.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum InputKind {
    Uniform,
    BasisAverage,
}

#[derive(Args, Debug, Clone)]
pub struct GateArgs {
    #[arg(long, default_value_t = 0.1)]
    pub g_over_kappa: f64,
    #[arg(long, default_value_t = 9e4)]
    pub cooperativity: f64,
    /// γ★/γ.
    #[arg(long, default_value_t = 2.3)]
    pub gamma_star_ratio: f64,
    /// δ_eg/κ; defaults to the preset's value.
    #[arg(long)]
    pub delta_eg_over_kappa: Option<f64>,
    #[arg(long, default_value_t = 2)]
    pub n_max: usize,
    #[arg(long, value_enum, default_value = "uniform")]
    pub input: InputKind,
    /// Multiplier on the pure-dephasing rate in the master equation.
    #[arg(long, default_value_t = 1.0)]
    pub dephasing_factor: f64,
    /// Take γ, γ★ and δ_eg from the preset instead of --cooperativity and
    /// --gamma-star-ratio.
    #[arg(long)]
    pub preset_rates: bool,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Cavity detuning Δ/κ.
    #[arg(long)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub p_eta_d: f64,
    /// Evolution time in units of 1/κ; defaults to πΔ/g².
    #[arg(long)]
    pub gate_time: Option<f64>,
    #[command(flatten)]
    pub gate: GateArgs,
}

#[derive(Args, Debug)]
pub struct Fig3Args {
    #[arg(long, default_value_t = 1.0)]
    pub purcell_min: f64,
    #[arg(long, default_value_t = 1e6)]
    pub purcell_max: f64,
    #[arg(long, default_value_t = 121)]
    pub points: usize,
}

#[derive(Args, Debug)]
pub struct Fig4Args {
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 1.0])]
    pub p_eta_d: Vec<f64>,
    #[arg(long, default_value_t = 5.0)]
    pub delta_min: f64,
    #[arg(long, default_value_t = 200.0)]
    pub delta_max: f64,
    #[arg(long, default_value_t = 30)]
    pub points: usize,
    /// Continue from the checkpoint left in --out by an interrupted run.
    #[arg(long)]
    pub resume: bool,
    /// Stop after this many newly computed grid points, keeping the
    /// checkpoint.
    #[arg(long)]
    pub max_new_points: Option<usize>,
    #[command(flatten)]
    pub gate: GateArgs,
}

#[derive(Args, Debug)]
pub struct Fig5Args {
    #[arg(long, default_value_t = 2.0)]
    pub r_min_nm: f64,
    #[arg(long, default_value_t = 12.0)]
    pub r_max_nm: f64,
    #[arg(long, default_value_t = 41)]
    pub points: usize,
}

#[derive(Args, Debug)]
pub struct ReadoutArgs {
    /// Total readout time N·T_p in seconds; defaults to the preset's.
    #[arg(long)]
    pub total_time: Option<f64>,
    #[arg(long, default_value_t = 30)]
    pub max_pulses: u32,
}

#[derive(Args, Debug)]
pub struct Fig6Args {
    #[arg(long, value_delimiter = ',', default_values_t = vec![2, 4, 8, 16, 32, 64, 128])]
    pub links: Vec<u32>,
    #[arg(long, default_value_t = 4.5e5)]
    pub purcell_high: f64,
    #[arg(long, default_value_t = 5e3)]
    pub purcell_low: f64,
    /// Cavity monitoring efficiency for the post-selected gate; defaults to
    /// the readout pη_d.
    #[arg(long)]
    pub gate_p_eta_d: Option<f64>,
    /// Gate fidelity of the Er–Eu scheme; curve D is drawn only when given.
    #[arg(long)]
    pub er_eu_gate: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub er_eu_p_gate: f64,
}

#[derive(Args, Debug)]
pub struct Fig7Args {
    #[arg(long, default_value_t = 8)]
    pub links: u32,
    #[arg(long, default_value_t = 10.0)]
    pub l_min: f64,
    #[arg(long, default_value_t = 1000.0)]
    pub l_max: f64,
    #[arg(long, default_value_t = 100)]
    pub points: usize,
    #[arg(long, default_value_t = 4.5e5)]
    pub purcell_high: f64,
    #[arg(long, default_value_t = 5e3)]
    pub purcell_low: f64,
    /// Success probability of the post-selected gate (curve C).
    #[arg(long, default_value_t = 0.93)]
    pub p_gate: f64,
    /// Swap success probability of the Er–Eu scheme; curve B is drawn only
    /// when given.
    #[arg(long)]
    pub er_eu_p_gate: Option<f64>,
    #[arg(long, default_value_t = 1e9)]
    pub source_rate: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SchedulingArg {
    Parallel,
    Sequential,
}

#[derive(Args, Debug)]
pub struct McArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec![2, 4, 8, 16])]
    pub links: Vec<u32>,
    /// Elementary link length in km; defaults to the preset's.
    #[arg(long, conflicts_with = "distance")]
    pub l0: Option<f64>,
    /// Total distance in km, split evenly over the links.
    #[arg(long)]
    pub distance: Option<f64>,
    /// Swap success probability.
    #[arg(long, default_value_t = 1.0)]
    pub p_gate: f64,
    #[arg(long, value_enum, default_value = "parallel")]
    pub scheduling: SchedulingArg,
}

/// What a command produced.
#[derive(Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub warnings: Vec<String>,
    pub summary: serde_json::Map<String, serde_json::Value>,
    /// The command stopped early; no tables or manifest are written.
    pub incomplete: bool,
}

pub struct Context {
    pub preset: Preset,
    pub document: PresetDocument,
    pub preset_sha256: String,
    pub seed: u64,
    pub trials: Option<usize>,
    pub out: PathBuf,
}

fn load_document(arg: Option<&str>) -> Result<PresetDocument> {
    match arg {
        None | Some("er167_yso") | Some("er167-yso") => Ok(er167_yso_document()),
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading preset {path}"))?;
            PresetDocument::from_json(&text).map_err(|e| anyhow!("preset {path}: {e}"))
        }
    }
}

fn apply_overrides(doc: &mut PresetDocument, overrides: &[String]) -> Result<()> {
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| anyhow!("override `{o}` is not of the form key=value"))?;
        doc.set(k.trim(), v.trim()).map_err(|e| anyhow!("override `{o}`: {e}"))?;
    }
    Ok(())
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::DeriveParams => "derive-params",
        Command::Eval(_) => "eval",
        Command::SimulateGate(_) => "simulate-gate",
        Command::Fig3(_) => "fig3",
        Command::Fig4(_) => "fig4",
        Command::Fig5Dipole(_) => "fig5-dipole",
        Command::ReadoutScan(_) => "readout-scan",
        Command::Fig6(_) => "fig6",
        Command::Fig7(_) => "fig7",
        Command::McRate(_) => "mc-rate",
    }
}

fn run(cli: Cli, arguments: Vec<String>) -> Result<ExitCode> {
    let started = chrono::Utc::now();
    let mut document = load_document(cli.preset.as_deref())?;
    apply_overrides(&mut document, &cli.set)?;
    let preset = document.resolve().map_err(|e| anyhow!("preset: {e}"))?;
    let preset_json = document.to_json();
    if let Some(t) = cli.trials {
        if t < 1000 {
            bail!("--trials must be at least 1000, got {t}");
        }
    }
    let ctx = Context {
        preset,
        preset_sha256: sha256_hex(preset_json.as_bytes()),
        document,
        seed: cli.seed,
        trials: cli.trials,
        out: cli.out.clone(),
    };

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            bail!("--jobs must be at least 1");
        }
        pool = pool.num_threads(j);
    }
    let pool = pool.build()?;
    let name = command_name(&cli.command);
    let outcome = pool.install(|| match &cli.command {
        Command::DeriveParams => commands::derive_params(&ctx),
        Command::Eval(a) => eval::run(&ctx, a),
        Command::SimulateGate(a) => commands::simulate_gate(&ctx, a),
        Command::Fig3(a) => commands::fig3(&ctx, a),
        Command::Fig4(a) => commands::fig4(&ctx, a),
        Command::Fig5Dipole(a) => commands::fig5_dipole(&ctx, a),
        Command::ReadoutScan(a) => commands::readout_scan(&ctx, a),
        Command::Fig6(a) => commands::fig6(&ctx, a),
        Command::Fig7(a) => commands::fig7(&ctx, a),
        Command::McRate(a) => commands::mc_rate(&ctx, a),
    })?;

    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    if outcome.incomplete {
        return Ok(ExitCode::from(2));
    }

    let header = vec![
        ("tool".to_owned(), format!("er-repeater {}", env!("CARGO_PKG_VERSION"))),
        ("command".to_owned(), name.to_owned()),
        ("preset".to_owned(), format!("{} sha256={}", ctx.document.name, ctx.preset_sha256)),
        ("numbers".to_owned(), format!("{} significant digits", output::SIGNIFICANT_DIGITS)),
    ];
    let outputs = write_tables(&cli.out, &outcome.tables, &header)?;
    let manifest = RunManifest {
        tool: "er-repeater".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: name.into(),
        arguments,
        overrides: cli.set.clone(),
        preset: serde_json::from_str(&preset_json)?,
        preset_sha256: ctx.preset_sha256.clone(),
        seed: cli.seed,
        trials: cli.trials,
        started_at: started.to_rfc3339(),
        finished_at: chrono::Utc::now().to_rfc3339(),
        outputs,
        warnings: outcome.warnings.clone(),
        summary: serde_json::Value::Object(outcome.summary),
    };
    write_manifest(&cli.out, &manifest)?;
    for o in &manifest.outputs {
        println!("{}", cli.out.join(&o.file).display());
    }
    Ok(if manifest.warnings.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn main() -> ExitCode {
    let arguments: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::FAILURE,
            };
        }
    };
    match run(cli, arguments) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
