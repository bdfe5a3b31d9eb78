use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use relest::harness::{
    cmd_example1, cmd_lae_vs_em, cmd_robustness, cmd_run, cmd_sweep, load_json, write_json,
    write_trace_csv, LaeVsEmSpec, RobustnessMode, RobustnessSpec, RunConfig, SweepParam, SweepSpec,
};
use relest::{Error, Result};

/// Estimation from relative measurements under mixture noise.
#[derive(Parser)]
#[command(name = "relest", version)]
struct Cli {
    /// Worker threads for concurrent trials (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Root seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Trials per grid point, overriding the config.
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every estimator on the five-node example and check the published values.
    Example1 {
        /// Also write example1.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One configured run: writes trace.csv and result.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parameter sweep: writes sweep.csv and sweep.json.
    Sweep {
        /// Swept parameter when no config is given.
        #[arg(long, value_parser = ["p_edge", "p", "beta_ratio"])]
        param: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Distributed LS-EM under mis-specified noise scales.
    Robustness {
        #[arg(long, value_enum)]
        mode: Option<RobustnessMode>,
        #[command(flatten)]
        common: Common,
    },
    /// Averaged NQE curves of distributed LS-EM and subgradient LAE.
    LaeVsEm {
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot start {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn prepare(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(Error::from)
}

fn dispatch(command: Command) -> Result<bool> {
    match command {
        Command::Example1 { out } => {
            let report = cmd_example1()?;
            print!("{report}");
            if let Some(out) = out {
                prepare(&out)?;
                write_json(&out.join("example1.json"), &report)?;
            }
            Ok(report.passed())
        }
        Command::Run { config, out, seed } => {
            let mut cfg: RunConfig = load_json(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let report = cmd_run(&cfg)?;
            prepare(&out)?;
            write_trace_csv(&out.join("trace.csv"), &report.result.trace)?;
            write_json(&out.join("result.json"), &report)?;
            let nqe = report
                .nqe_percent
                .map(|v| format!("{v:.6}%"))
                .unwrap_or_else(|| "n/a".into());
            println!(
                "{}: {} iterations, converged {}, nqe {nqe}",
                report.estimator, report.result.iterations, report.result.converged
            );
            Ok(true)
        }
        Command::Sweep { param, common } => {
            let mut spec: SweepSpec = match (&common.config, param.as_deref()) {
                (Some(path), _) => load_json(path)?,
                (None, Some("p_edge")) => SweepSpec::new(SweepParam::PEdge),
                (None, Some("p")) => SweepSpec::new(SweepParam::P),
                (None, Some(_)) => SweepSpec::new(SweepParam::BetaRatio),
                (None, None) => {
                    return Err(Error::Config("sweep needs --config or --param".into()))
                }
            };
            if let Some(s) = common.seed {
                spec.seed = s;
            }
            if let Some(t) = common.trials {
                spec.trials = t;
            }
            let report = cmd_sweep(&spec)?;
            prepare(&common.out)?;
            report.write_csv(&common.out.join("sweep.csv"))?;
            write_json(&common.out.join("sweep.json"), &report)?;
            for p in &report.points {
                let means: Vec<String> = p
                    .cells
                    .iter()
                    .map(|c| format!("{} {:.4}", c.estimator, c.summary.mean))
                    .collect();
                println!("{} = {}: {}", report.swept, p.value, means.join(", "));
            }
            Ok(true)
        }
        Command::Robustness { mode, common } => {
            let mut spec: RobustnessSpec = match (&common.config, mode) {
                (Some(path), _) => load_json(path)?,
                (None, Some(m)) => RobustnessSpec::new(m),
                (None, None) => {
                    return Err(Error::Config("robustness needs --config or --mode".into()))
                }
            };
            if let Some(s) = common.seed {
                spec.seed = s;
            }
            if let Some(t) = common.trials {
                spec.trials = t;
            }
            let report = cmd_robustness(&spec)?;
            prepare(&common.out)?;
            let stem = format!("robustness_{}", spec.mode.name());
            report.write_csv(&common.out.join(format!("{stem}.csv")))?;
            write_json(&common.out.join(format!("{stem}.json")), &report)?;
            for p in &report.points {
                let s = &p.cells[0].summary;
                println!(
                    "{} = {}: median {:.4} q25 {:.4} q75 {:.4}",
                    report.swept, p.value, s.median, s.q25, s.q75
                );
            }
            Ok(true)
        }
        Command::LaeVsEm { common } => {
            let mut spec: LaeVsEmSpec = match &common.config {
                Some(path) => load_json(path)?,
                None => LaeVsEmSpec::default(),
            };
            if let Some(s) = common.seed {
                spec.seed = s;
            }
            if let Some(t) = common.trials {
                spec.trials = t;
            }
            let report = cmd_lae_vs_em(&spec)?;
            prepare(&common.out)?;
            report.write_csv(&common.out.join("lae_vs_em.csv"))?;
            write_json(&common.out.join("lae_vs_em.json"), &report)?;
            let show =
                |v: Option<usize>| v.map(|i| i.to_string()).unwrap_or_else(|| "never".into());
            for p in &report.points {
                println!(
                    "p_edge = {}: dist_ls_em below {}% at {}, lae_subgradient at {}",
                    p.p_edge,
                    report.threshold_percent,
                    show(p.em.first_below),
                    show(p.lae.first_below)
                );
            }
            Ok(true)
        }
    }
}
