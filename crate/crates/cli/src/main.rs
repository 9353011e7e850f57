use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wban_core::sim::{self, ExperimentConfig, SimError};

#[derive(Parser)]
#[command(name = "wban", version, about = "Two-tier body sensor telemetry simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the filtered pipeline and write every artifact.
    Run(Overrides),
    /// Run with the sensor filter bypassed.
    Baseline(Overrides),
    /// Sweep the change threshold and write sweep.csv.
    SweepEpsilon {
        #[command(flatten)]
        overrides: Overrides,
        /// Comma-separated thresholds; defaults to 0.05..=1.0 in steps of 0.05.
        #[arg(long, value_delimiter = ',')]
        grid: Vec<f64>,
    },
    /// Plant anomalies in the input and write injected.csv and labels.csv.
    Inject(Overrides),
    /// Print a summary of an earlier run.
    Report {
        /// A report.json file or the directory holding it.
        path: PathBuf,
    },
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Length of the synthetic stream when no input is given.
    #[arg(long)]
    steps: Option<usize>,
}

impl Overrides {
    fn resolve(&self) -> Result<ExperimentConfig, SimError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(input) = &self.input {
            cfg.input = Some(input.clone());
        }
        if let Some(e) = self.epsilon {
            cfg.filter.epsilon = e;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        if let Some(steps) = self.steps {
            cfg.synthetic.steps = steps;
        }
        Ok(cfg)
    }
}

fn execute(command: Command) -> Result<(), SimError> {
    match command {
        Command::Run(o) => {
            let cfg = o.resolve()?;
            let report = sim::run_experiment(&cfg)?;
            print!("{}", report.summary());
            println!("wrote {} in {:.2}s", cfg.out.display(), report.wall_clock_s);
        }
        Command::Baseline(o) => {
            let cfg = o.resolve()?;
            let report = sim::baseline_run(&cfg)?;
            print!("{}", report.summary());
            println!("wrote {} in {:.2}s", cfg.out.display(), report.wall_clock_s);
        }
        Command::SweepEpsilon { overrides, grid } => {
            let cfg = overrides.resolve()?;
            let rows = sim::sweep_epsilon(&cfg, &grid)?;
            println!("{:>8} {:>10} {:>12}", "epsilon", "discard%", "nmse");
            for r in &rows {
                println!("{:>8.3} {:>10.2} {:>12.4e}", r.epsilon, r.discard_pct, r.nmse);
            }
            println!("wrote {}", cfg.out.join("sweep.csv").display());
        }
        Command::Inject(o) => {
            let cfg = o.resolve()?;
            let (ds, labels) = sim::inject_only(&cfg)?;
            println!(
                "{} of {} steps corrupted; wrote {}",
                labels.iter().filter(|&&l| l).count(),
                ds.steps(),
                cfg.out.display()
            );
        }
        Command::Report { path } => {
            let file = if path.is_dir() { path.join("report.json") } else { path };
            print!("{}", sim::read_report(&file)?.summary());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
