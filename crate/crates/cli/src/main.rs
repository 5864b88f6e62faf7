use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fleet_core::harness::{self, ExperimentSpec, OracleMode, Scenario};
use fleet_core::sizing::DEFAULT_EPSILON;
use fleet_core::stats::{certify, CERTIFICATION_THRESHOLD};
use fleet_core::{Error, SizingRule};

/// Spare-fleet sizing and Monte Carlo mission experiments.
#[derive(Debug, Parser)]
#[command(name = "fleetsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the spare count of every sizing rule.
    Size(SizeArgs),
    /// Run Monte Carlo trials and write summary.csv, trials.csv, manifest.json.
    Run(RunArgs),
    /// Repeat a run across wind variability levels and write sweep.csv.
    Sweep(SweepArgs),
    /// Tabulate the compounding reference (1 - eps)^h.
    Reference(ReferenceArgs),
    /// Replay the phase-aligned or staggered occupancy oracle.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
struct SizeArgs {
    /// Derive m and R from this scenario file instead of --m/--r.
    #[arg(long, conflicts_with_all = ["m", "r"])]
    scenario: Option<PathBuf>,
    #[arg(long, required_unless_present = "scenario")]
    m: Option<u32>,
    #[arg(long, required_unless_present = "scenario")]
    r: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
}

#[derive(Debug, Args)]
struct CommonRun {
    /// Scenario file; repeat for several.
    #[arg(long, required = true)]
    scenario: Vec<PathBuf>,
    /// Comma-separated subset of naive,duty-cycle,erlang-b,proposed.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "naive,duty-cycle,erlang-b,proposed"
    )]
    methods: Vec<SizingRule>,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

impl CommonRun {
    fn spec(&self) -> ExperimentSpec {
        ExperimentSpec {
            methods: self.methods.clone(),
            n_trials: self.trials,
            base_seed: self.seed,
            epsilon: self.epsilon,
            jobs: self.jobs,
            ..ExperimentSpec::new(self.scenario.clone(), self.out.clone())
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonRun,
    /// Also write the site layout of trial 0.
    #[arg(long)]
    dump_sites: bool,
    /// Also write the event log of trial 0 for each method.
    #[arg(long)]
    event_log: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonRun,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0,0.05,0.1,0.15,0.2,0.25,0.3"
    )]
    cv_list: Vec<f64>,
}

#[derive(Debug, Args)]
struct ReferenceArgs {
    #[arg(long, value_delimiter = ',', default_value = "0.01")]
    epsilon: Vec<f64>,
    /// Largest handover count tabulated (1..=h-max).
    #[arg(long, default_value_t = 100)]
    h_max: u32,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[arg(long)]
    m: u32,
    #[arg(long)]
    r: f64,
    #[arg(long)]
    k: u32,
    /// worst_case or staggered
    #[arg(long, default_value = "worst_case")]
    mode: OracleMode,
    #[arg(long, default_value_t = 10)]
    waves: u32,
}

fn print_summary(report: &harness::RunReport) {
    println!(
        "{:<12} {:<11} {:>4} {:>7} {:>8} {:>8}  certified",
        "scenario", "method", "k", "success", "wilson", "burst"
    );
    for s in &report.summaries {
        println!(
            "{:<12} {:<11} {:>4} {:>7.3} {:>8.3} {:>8}  {}",
            s.scenario,
            s.method.as_str(),
            s.plan.k,
            s.stats.success_rate,
            s.stats.wilson_lb,
            s.stats
                .burst_concentration
                .map(|b| format!("{:.3}", b))
                .unwrap_or_else(|| "--".into()),
            if certify(&s.stats, CERTIFICATION_THRESHOLD) {
                "yes"
            } else {
                "no"
            }
        );
    }
}

fn execute(cmd: Command) -> fleet_core::Result<()> {
    match cmd {
        Command::Size(a) => {
            let (m, r) = match &a.scenario {
                Some(path) => {
                    let s = Scenario::load(path)?;
                    (s.mission.m, s.mission.r)
                }
                None => (a.m.unwrap_or_default(), a.r.unwrap_or_default()),
            };
            println!("m = {m}, R = {r}, epsilon = {}", a.epsilon);
            print!(
                "{}",
                harness::format_size_table(&harness::cmd_size(m, r, a.epsilon)?)
            );
        }
        Command::Run(a) => {
            let spec = ExperimentSpec {
                dump_sites: a.dump_sites,
                event_log: a.event_log,
                ..a.common.spec()
            };
            let report = harness::cmd_run(&spec)?;
            print_summary(&report);
            println!("wrote {}", spec.output_dir.display());
        }
        Command::Sweep(a) => {
            let spec = ExperimentSpec {
                cv_sweep: Some(a.cv_list.clone()),
                ..a.common.spec()
            };
            for row in harness::cmd_sweep(&spec)? {
                println!(
                    "cv={:<5} {:<11} success={:.3} wilson={:.3}",
                    row.cv,
                    row.method.as_str(),
                    row.success_rate,
                    row.wilson_lb
                );
            }
            println!("wrote {}", spec.output_dir.join("sweep.csv").display());
        }
        Command::Reference(a) => {
            let hs: Vec<f64> = (1..=a.h_max).map(f64::from).collect();
            let rows = harness::cmd_reference(&a.epsilon, &hs)?;
            match a.out {
                Some(path) => {
                    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                        fs::create_dir_all(dir)?;
                    }
                    harness::write_reference_csv(fs::File::create(path)?, &rows)?;
                }
                None => harness::write_reference_csv(std::io::stdout().lock(), &rows)?,
            }
        }
        Command::Oracle(a) => {
            let trace = harness::cmd_oracle(a.m, a.r, a.k, a.mode, a.waves)?;
            print!("{}", harness::format_oracle(&trace));
        }
    }
    Ok(())
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
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Invariant(_)) => {
            eprintln!("fleetsim: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("fleetsim: {e}");
            ExitCode::from(1)
        }
    }
}
