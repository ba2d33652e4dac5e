//! The `workbench` command line.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;

use workbench_core::active_learning::StrategyName;
use workbench_core::experiments::{
    logo_dataset, logo_images, run_active_learning, stratified_split, AlConfig, AlStop,
    LogoDatasetConfig,
};
use workbench_core::forecasting::write_demand_jsonl;
use workbench_core::forecasting::{
    backtest, classify_demand, evaluate_with, read_demand_jsonl, train_batch, BatchConfig,
    DemandMethod, SpecParams, TwofoldConfig,
};
use workbench_core::intention::ImuFrame;
use workbench_core::security::verify_file;
use workbench_core::simulation::{generate_demand, generate_imu_sequence, Activity, DemandProfile};
use workbench_core::Exec;

use crate::config::{Config, CONFIG_ENV};
use crate::state::AppState;

#[derive(Debug, Parser)]
#[command(
    name = "workbench",
    version,
    about = "Human-in-the-loop industrial AI workbench"
)]
pub struct Cli {
    /// Config file; falls back to $WORKBENCH_CONFIG, then built-in defaults.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    /// Run every data-parallel loop on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP service.
    Serve {
        /// Overrides `server.bind`.
        #[arg(long)]
        bind: Option<String>,
    },
    /// Print synthetic data as JSON lines.
    #[command(subcommand)]
    Simulate(Simulate),
    /// Run pool-based active learning on the synthetic inspection dataset.
    AlRun(AlRunArgs),
    /// Forecast every product in a demand file.
    Forecast(ForecastArgs),
    /// Cross-validate the batch classifier on the synthetic inspection dataset.
    Eval(EvalArgs),
    /// Audit log tools.
    #[command(subcommand)]
    Audit(AuditCmd),
}

#[derive(Debug, Subcommand)]
pub enum Simulate {
    /// Rendered logo images, ready to post to `/v1/samples`.
    Quality {
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0.05)]
        defect_rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Emit unlabeled real samples for the annotation pool instead of
        /// labeled synthetic ones.
        #[arg(long)]
        unlabeled: bool,
    },
    /// Intermittent demand records `{product_id, period, quantity}`.
    Demand {
        #[arg(long, default_value_t = 5)]
        products: usize,
        #[arg(long, default_value_t = 52)]
        periods: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// IMU frames `{ts, values}` at 20 Hz for one activity.
    Imu {
        #[arg(long, default_value = "walk")]
        activity: String,
        #[arg(long, default_value_t = 2.0)]
        seconds: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
pub struct AlRunArgs {
    #[arg(long, default_value = "entropy")]
    pub strategy: String,
    /// Stop after this many labels.
    #[arg(long, default_value_t = 200)]
    pub budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Croston,
    Sba,
    Twofold,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::Sba)]
    pub method: MethodArg,
    /// Demand JSON lines; `-` reads standard input.
    #[arg(long, default_value = "-")]
    pub input: String,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    /// Also report a rolling-origin backtest after this many warmup periods.
    #[arg(long)]
    pub backtest: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum AuditCmd {
    /// Check the hash chain of an audit file. Exits 1 when it is broken.
    Verify { path: PathBuf },
}

type CliResult = Result<i32, Box<dyn std::error::Error>>;

fn line(out: &mut impl Write, value: &serde_json::Value) -> std::io::Result<()> {
    writeln!(out, "{value}")
}

fn method(arg: MethodArg, alpha: f64) -> DemandMethod {
    match arg {
        MethodArg::Croston => DemandMethod::Croston { alpha },
        MethodArg::Sba => DemandMethod::Sba { alpha },
        MethodArg::Twofold => DemandMethod::Twofold(TwofoldConfig::default()),
    }
}

/// Runs a parsed command and returns the process exit code.
pub async fn run(cli: Cli) -> CliResult {
    let exec = if cli.sequential {
        Exec::Sequential
    } else {
        Exec::default()
    };
    let mut out = std::io::stdout().lock();
    match cli.command {
        Command::Serve { bind } => {
            drop(out);
            let mut config = Config::resolve(cli.config.as_deref())?;
            if let Some(b) = bind {
                config.server.bind = b;
            }
            let addr = config.server.bind.clone();
            let state = tokio::task::spawn_blocking(move || AppState::build(config)).await??;
            crate::serve(state, &addr).await?;
        }
        Command::Simulate(Simulate::Quality {
            count,
            defect_rate,
            seed,
            unlabeled,
        }) => {
            let config = LogoDatasetConfig {
                n: count,
                defect_rate,
                ..LogoDatasetConfig::default()
            };
            for (i, (defect, image)) in logo_images(&config, seed, exec)?.into_iter().enumerate() {
                let mut sample = json!({
                    "id": format!("img-{seed}-{i:05}"),
                    "kind": "image",
                    "image": image,
                    "provenance": if unlabeled { "real" } else { "synthetic" },
                });
                if !unlabeled {
                    sample["label"] = json!(defect.as_str());
                }
                line(&mut out, &sample)?;
            }
        }
        Command::Simulate(Simulate::Demand {
            products,
            periods,
            seed,
        }) => {
            let profile = DemandProfile {
                periods,
                ..DemandProfile::default()
            };
            let series = (0..products)
                .map(|i| {
                    generate_demand(
                        &format!("P{:03}", i + 1),
                        &profile,
                        seed.wrapping_add(i as u64),
                    )
                })
                .collect::<Result<Vec<_>, _>>()?;
            write_demand_jsonl(&mut out, &series)?;
        }
        Command::Simulate(Simulate::Imu {
            activity,
            seconds,
            seed,
        }) => {
            let activity: Activity = activity.parse()?;
            let window = generate_imu_sequence(activity, seconds, seed)?;
            for (i, values) in window.frames().into_iter().enumerate() {
                let frame = ImuFrame {
                    ts: i as i64 * 50,
                    values,
                };
                line(&mut out, &serde_json::to_value(frame)?)?;
            }
        }
        Command::AlRun(args) => {
            let strategy: StrategyName = args.strategy.parse()?;
            let config = AlConfig::default();
            let ds = logo_dataset(&config.dataset, args.seed, exec)?;
            let (train, test) =
                stratified_split(&ds.data, config.test_fraction, args.seed ^ 0xA5A5);
            let stop = AlStop {
                target_auc: None,
                budget: Some(args.budget),
            };
            let curve =
                run_active_learning(&train, &test, strategy, &config, stop, args.seed, exec)?;
            line(&mut out, &serde_json::to_value(curve)?)?;
        }
        Command::Forecast(args) => {
            let reader: Box<dyn BufRead> = if args.input == "-" {
                Box::new(BufReader::new(std::io::stdin()))
            } else {
                Box::new(BufReader::new(std::fs::File::open(&args.input)?))
            };
            let m = method(args.method, args.alpha);
            for s in read_demand_jsonl(reader)? {
                let (point, occurrence) = m.forecast_next(s.quantities())?;
                let mut row = json!({
                    "product_id": s.product_id,
                    "method": m.name(),
                    "point": point,
                    "occurrence_probability": occurrence,
                    "demand_class": classify_demand(s.quantities())?,
                });
                if let Some(warmup) = args.backtest {
                    row["backtest"] = serde_json::to_value(backtest(
                        s.quantities(),
                        &m,
                        warmup,
                        SpecParams::default(),
                    )?)?;
                }
                line(&mut out, &row)?;
            }
        }
        Command::Eval(args) => {
            let config = AlConfig::default();
            let dataset = LogoDatasetConfig {
                n: args.count,
                ..config.dataset.clone()
            };
            let ds = logo_dataset(&dataset, args.seed, exec)?;
            let batch = BatchConfig {
                mlp: config.mlp.clone(),
                ..BatchConfig::default()
            };
            let metrics = evaluate_with(
                exec,
                |d| train_batch(d, &batch),
                &ds.data,
                args.folds,
                args.seed,
            )?;
            line(
                &mut out,
                &json!({ "samples": ds.data.len(), "folds": args.folds, "metrics": metrics }),
            )?;
        }
        Command::Audit(AuditCmd::Verify { path }) => {
            let report = verify_file(&path)?;
            line(&mut out, &serde_json::to_value(&report)?)?;
            return Ok(if report.valid { 0 } else { 1 });
        }
    }
    Ok(0)
}
