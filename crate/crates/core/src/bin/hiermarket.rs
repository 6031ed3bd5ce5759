use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hiermarket::bubble::{BubbleConfig, Level};
use hiermarket::harness::{self, ExperimentConfig, RunRecord};
use hiermarket::stylized::StylizedConfig;
use hiermarket::{EchoConfig, EchoMode, Error, PumpDumpConfig, Scenario};

/// Hierarchical agent-based market simulator.
///
/// Exit status: 0 on success, 1 for configuration errors, 2 for runtime
/// failures. The worker count defaults to HIERMARKET_THREADS, then the
/// number of cores.
#[derive(Parser)]
#[command(name = "hiermarket", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunOpts {
    /// Experiment manifest (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides master_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a manifest.
    Run(RunOpts),
    /// Run a manifest with its sweep block replaced.
    Sweep {
        #[command(flatten)]
        run: RunOpts,
        /// Parameter name or alias, e.g. b, phi, alpha2.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Stylized facts and bubble tests for a price series in CSV.
    Analyze {
        #[arg(long)]
        series: PathBuf,
        /// Significance level of the bubble tests.
        #[arg(long, default_value = "90")]
        level: LevelArg,
        /// Steps between samples for return-based metrics.
        #[arg(long, default_value_t = 1)]
        sample_interval: usize,
        /// Steps between samples for the bubble tests.
        #[arg(long, default_value_t = 1)]
        stride: usize,
    },
    /// Run a manifest with a scenario overlay.
    #[command(subcommand)]
    Scenario(ScenarioCmd),
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    #[value(name = "90")]
    P90,
    #[value(name = "95")]
    P95,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Asymmetric,
    Symmetric,
}

#[derive(Subcommand)]
enum ScenarioCmd {
    /// Echo-chamber amplification of conforming traders.
    Echo {
        #[command(flatten)]
        run: RunOpts,
        #[arg(long)]
        mode: ModeArg,
        /// Echo multiplier.
        #[arg(long = "E")]
        multiplier: f64,
    },
    /// Pump-and-dump corruption of one community.
    Pnd {
        #[command(flatten)]
        run: RunOpts,
        /// Corrupted community (level order, root = 0).
        #[arg(long)]
        target: usize,
        #[arg(long = "T0")]
        start: usize,
        #[arg(long = "T1")]
        end: usize,
        /// Signal strength.
        #[arg(long = "S")]
        signal: f64,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config_error() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.4}"))
}

fn print_summary(record: &RunRecord) {
    println!("{:>6} {:>12} {:>10} {:>10} {:>10} {:>8}", "point", "value", "volat.", "F_sigma", "explosive", "pnd");
    for g in &record.groups {
        let a = &g.aggregate;
        println!(
            "{:>6} {:>12} {:>10} {:>10} {:>10} {:>8}",
            g.point,
            g.value.map_or_else(|| "-".into(), |v| v.to_string()),
            fmt_opt(a.volatility_mean),
            fmt_opt(a.fundamental_deviation_mean),
            fmt_opt(a.explosive_fraction),
            fmt_opt(a.pnd_success_rate),
        );
    }
}

fn load(opts: &RunOpts) -> Result<ExperimentConfig, Failure> {
    let mut cfg = harness::load_config(&opts.config).map_err(|e| match e {
        Error::Io { .. } => Failure::Config(e.to_string()),
        other => other.into(),
    })?;
    if let Some(seed) = opts.seed {
        cfg.master_seed = seed;
    }
    if let Some(out) = &opts.out {
        cfg.output.dir = out.clone();
    }
    Ok(cfg)
}

fn execute(cfg: ExperimentConfig, threads: Option<usize>) -> Result<(), Failure> {
    cfg.validate()?;
    let record = harness::run_experiment(&cfg, threads)?;
    let files = harness::export(&record, &cfg.output.dir)?;
    print_summary(&record);
    for f in files.iter().filter(|f| !f.starts_with(cfg.output.dir.join("series"))) {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run(opts) => execute(load(&opts)?, opts.threads),
        Command::Sweep { run, param, values } => {
            let cfg = load(&run)?.with_sweep(&param, values)?;
            execute(cfg, run.threads)
        }
        Command::Analyze {
            series,
            level,
            sample_interval,
            stride,
        } => {
            let table = harness::read_price_csv(&series)?;
            let stylized = StylizedConfig {
                sample_interval,
                ..Default::default()
            };
            let bubble = BubbleConfig {
                stride,
                level: match level {
                    LevelArg::P90 => Level::P90,
                    LevelArg::P95 => Level::P95,
                },
                ..Default::default()
            };
            if sample_interval == 0 || stride == 0 {
                return Err(Failure::Config("--sample-interval and --stride must be at least 1".into()));
            }
            let report = harness::analyze_prices(&table, &stylized, &bubble)?;
            let text = serde_json::to_string_pretty(&report).map_err(|e| Failure::Runtime(e.to_string()))?;
            println!("{text}");
            Ok(())
        }
        Command::Scenario(ScenarioCmd::Echo { run, mode, multiplier }) => {
            let mut cfg = load(&run)?;
            let mode = match mode {
                ModeArg::Asymmetric => EchoMode::Asymmetric,
                ModeArg::Symmetric => EchoMode::Symmetric,
            };
            cfg.scenario = Scenario::Echo(EchoConfig::new(mode, multiplier));
            execute(cfg, run.threads)
        }
        Command::Scenario(ScenarioCmd::Pnd {
            run,
            target,
            start,
            end,
            signal,
        }) => {
            let mut cfg = load(&run)?;
            cfg.scenario = Scenario::PumpDump(PumpDumpConfig {
                target,
                start,
                end,
                signal,
            });
            execute(cfg, run.threads)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
