use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pinsim::checkpoint::{self, load_model, load_resistances};
use pinsim::config::RunConfig;
use pinsim::device_curve::{measure_curve, write_curve_csv};
use pinsim::experiment::{
    create_run_dir, evaluate_hardware, evaluate_software, load_datasets, map_model, run_experiment, train_model,
    write_json, write_records_csv, Stages,
};
use pinsim::sweep::{run_sweep, SweepParam, SweepSpec};
use pinsim::Result;

/// Probabilistic inference network simulator.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// Run configuration (JSON). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration value, e.g. `--set mapping.delta_r_w=100`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Evaluate the whole test split instead of the first `data.test_samples`.
    #[arg(long, global = true)]
    full_test: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a DBN and save the model checkpoint.
    Train,
    /// Map a model to resistances (trains first without `--model`).
    Map(ModelArg),
    /// Software (ideal sigmoid) evaluation.
    EvalSw(ModelArg),
    /// Hardware evaluation of mapped resistances.
    EvalHw(HardwareArgs),
    /// Train, map and evaluate in both modes.
    Run(ModelArg),
    /// Sweep one parameter.
    Sweep(SweepArgs),
    /// Device-mode transfer curve and its sigmoid fit.
    DeviceCurve(CurveArgs),
}

#[derive(Args)]
struct ModelArg {
    /// Model checkpoint from an earlier `train`.
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Args)]
struct HardwareArgs {
    #[arg(long, conflicts_with = "resistances")]
    model: Option<PathBuf>,
    /// Resistance checkpoint from an earlier `map`.
    #[arg(long)]
    resistances: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// topology, train_num, delta_r_w, Q, variation_sigma or input_noise_sigma.
    #[arg(long)]
    param: String,
    /// Comma-separated values; `none` for an unquantized Q point.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<String>,
    #[arg(long, default_value_t = 1)]
    replications: usize,
    /// Skip the software evaluation on every row.
    #[arg(long)]
    hardware_only: bool,
    /// Also write an SVG (needs the `plot` feature).
    #[arg(long)]
    plot: bool,
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long, default_value_t = 17)]
    points: usize,
    /// Clock windows averaged per voltage.
    #[arg(long, default_value_t = 1000)]
    windows: usize,
    #[arg(long)]
    plot: bool,
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let base = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let mut cfg = base.with_overrides(&cli.overrides)?.resolved();
    cfg.data.full_test |= cli.full_test;
    cfg.validate()?;
    Ok(cfg)
}

fn model_or_train(cfg: &RunConfig, path: Option<&Path>) -> Result<pinsim_core::rbm::DbnModel> {
    match path {
        Some(p) => load_model(p),
        None => train_model(cfg, &load_datasets(cfg)?.train),
    }
}

#[cfg(feature = "plot")]
fn maybe_plot(requested: bool, draw: impl FnOnce() -> Result<()>) -> Result<()> {
    if requested {
        draw()?;
    }
    Ok(())
}

#[cfg(not(feature = "plot"))]
fn maybe_plot(requested: bool, _draw: impl FnOnce() -> Result<()>) -> Result<()> {
    if requested {
        log::warn!("built without the `plot` feature; only CSV written");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli)?;
    match cli.command {
        Command::Train => {
            let data = load_datasets(&cfg)?;
            let dir = create_run_dir(&cfg.output_dir, "train")?;
            write_json(&dir.join("config.json"), &cfg)?;
            let model = train_model(&cfg, &data.train)?;
            checkpoint::save_model(&dir.join("model.json"), &model, cfg.seed, &cfg)?;
            println!("{}", dir.join("model.json").display());
        }
        Command::Map(args) => {
            let model = model_or_train(&cfg, args.model.as_deref())?;
            let dir = create_run_dir(&cfg.output_dir, "map")?;
            write_json(&dir.join("config.json"), &cfg)?;
            let rdbn = map_model(&cfg, &model)?;
            checkpoint::save_resistances(&dir.join("resistances.json"), &rdbn, cfg.seed, &cfg)?;
            checkpoint::export_resistance_csv(&dir.join("resistances"), &rdbn)?;
            println!("{}", dir.display());
        }
        Command::EvalSw(args) => {
            let data = load_datasets(&cfg)?;
            let model = match &args.model {
                Some(p) => load_model(p)?,
                None => train_model(&cfg, &data.train)?,
            };
            let dir = create_run_dir(&cfg.output_dir, "eval-sw")?;
            write_json(&dir.join("config.json"), &cfg)?;
            let eval = evaluate_software(&cfg, &model, &data.test)?;
            write_records_csv(&dir.join("software.csv"), &eval.records, "p")?;
            write_json(&dir.join("summary.json"), &eval.report)?;
            println!(
                "software ERR {:.4} RMSE {:.4} ({})",
                eval.report.err,
                eval.report.rmse,
                dir.display()
            );
        }
        Command::EvalHw(args) => {
            let data = load_datasets(&cfg)?;
            let rdbn = match (&args.resistances, &args.model) {
                (Some(r), _) => load_resistances(r)?,
                (None, Some(m)) => map_model(&cfg, &load_model(m)?)?,
                (None, None) => map_model(&cfg, &train_model(&cfg, &data.train)?)?,
            };
            let dir = create_run_dir(&cfg.output_dir, "eval-hw")?;
            write_json(&dir.join("config.json"), &cfg)?;
            let eval = evaluate_hardware(&cfg, &rdbn, &data.test)?;
            write_records_csv(&dir.join("hardware.csv"), &eval.records, "v")?;
            checkpoint::save_artifact(
                &dir.join("report.json"),
                checkpoint::ArtifactKind::EvalReport,
                &eval.report,
                Some(cfg.seed),
                Some(&cfg),
            )?;
            let r = &eval.report;
            println!(
                "hardware ERR {:.4} RMSE {:.4} power {:.4e} W (neuron {:.1}%) energy {:.4e} J cycles {} ({})",
                r.err,
                r.rmse,
                r.total_power,
                100.0 * r.neuron_power_share(),
                r.energy,
                r.cycles,
                dir.display()
            );
        }
        Command::Run(args) => {
            let model = args.model.as_deref().map(load_model).transpose()?;
            let out = run_experiment(&cfg, model, Stages::default(), "run")?;
            if let (Some(sw), Some(hw)) = (&out.summary.software, &out.summary.hardware) {
                println!(
                    "software ERR {:.4}  hardware ERR {:.4} ({})",
                    sw.err,
                    hw.err,
                    out.dir.display()
                );
            }
        }
        Command::Sweep(args) => {
            let parameter: SweepParam = args.param.parse()?;
            let spec = SweepSpec {
                parameter,
                values: args.values,
                replications: args.replications,
                base: cfg,
                software: !args.hardware_only,
            };
            let out = run_sweep(&spec, true)?;
            let dir = out.dir.expect("sweep writes a run directory");
            maybe_plot(args.plot, || {
                #[cfg(feature = "plot")]
                pinsim::plot::sweep_svg(&dir.join("points.svg"), &out.points)?;
                Ok(())
            })?;
            for p in &out.points {
                println!("{}={}  hardware ERR {:.4}", parameter, p.value, p.hardware_err_mean);
            }
            println!("{}", dir.display());
        }
        Command::DeviceCurve(args) => {
            let sim = cfg.neuron_simulator()?;
            let curve = measure_curve(&sim, args.points, args.windows, cfg.seed)?;
            let dir = create_run_dir(&cfg.output_dir, "device-curve")?;
            write_json(&dir.join("config.json"), &cfg)?;
            write_curve_csv(&dir.join("curve.csv"), &curve)?;
            maybe_plot(args.plot, || {
                #[cfg(feature = "plot")]
                pinsim::plot::transfer_curve_svg(&dir.join("curve.svg"), &curve)?;
                Ok(())
            })?;
            println!(
                "v0 {:.4} V  lambda {:.2} /V  max residual {:.4} ({})",
                curve.fit.neuron.v0,
                curve.fit.neuron.lambda,
                curve.fit.max_residual,
                dir.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
