use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use grac_cli::commands::{self, potential_table, EXIT_AUDIT, EXIT_CONFIG};
use grac_cli::{Experiment, ExperimentConfig, Failure};
use grac_core::adaptivity::EstimatorKind;

#[derive(Parser)]
#[command(
    name = "grac",
    version,
    about = "Adaptive atomistic/continuum coupling experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the adaptive loop and write records.csv
    Run(Common),
    /// Second-derivative ratios and sign table for EAM, Morse and LJ
    CheckPotential(Common),
    /// Audit the efficiency lower bounds at every iteration; writes audit.json
    Audit {
        #[command(flatten)]
        common: Common,
        /// Perturb each coupled solution by this amplitude (in units of ε) before a second audit
        #[arg(long, value_name = "AMP")]
        corrupt_noise: Option<f64>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML experiment file
    #[arg(long, required_unless_present = "builtin", conflicts_with = "builtin")]
    config: Option<PathBuf>,
    /// Embedded experiment (paper6)
    #[arg(long)]
    builtin: Option<String>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Write mesh and estimator JSON for every iteration
    #[arg(long)]
    dump_meshes: bool,
    #[arg(long, value_parser = ["residual", "hybrid"])]
    estimator: Option<String>,
    #[arg(long)]
    max_dof: Option<usize>,
    #[arg(long)]
    theta: Option<f64>,
}

impl Common {
    fn experiment(&self) -> Result<(Experiment, PathBuf), Failure> {
        let mut cfg = match (&self.config, &self.builtin) {
            (Some(p), _) => ExperimentConfig::load(p)?,
            (None, Some(b)) => ExperimentConfig::builtin(b)?,
            (None, None) => unreachable!("clap enforces a source"),
        };
        if let Some(e) = &self.estimator {
            cfg.adapt.estimator = e.parse::<EstimatorKind>()?;
        }
        if let Some(m) = self.max_dof {
            cfg.adapt.max_dof = m;
        }
        if let Some(t) = self.theta {
            cfg.adapt.theta = t;
        }
        if self.dump_meshes {
            cfg.output.dump_meshes = true;
        }
        if let Some(d) = &self.out_dir {
            cfg.output.dir = d.clone();
        }
        let out = cfg.output.dir.clone();
        Ok((cfg.build()?, out))
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run(c) => {
            let (exp, out) = c.experiment()?;
            let o = commands::cmd_run(&exp, &out, exp.config.output.dump_meshes)?;
            let last = o.run.records.last().expect("at least one iteration");
            println!(
                "{} iterations ({:?}), dof {}, true error {:.4e}, bound {:.4e} -> {}",
                o.run.records.len(),
                o.run.stop,
                last.dof,
                last.true_error,
                last.total_bound,
                o.records_path.display()
            );
        }
        Command::CheckPotential(c) => {
            let (exp, out) = c.experiment()?;
            let checks = commands::cmd_check_potential(&exp, &out)?;
            print!("{}", potential_table(&checks));
        }
        Command::Audit {
            common,
            corrupt_noise,
        } => {
            let (exp, out) = common.experiment()?;
            let a = commands::cmd_audit(&exp, &out, corrupt_noise)?;
            println!(
                "{} iterations, {} violations ({} on corrupted states), worst relative margin {:.3e}",
                a.iterations.len(),
                a.violations,
                a.corrupted_violations,
                a.worst_relative_margin
            );
            if !a.ok {
                return Err(Failure {
                    code: EXIT_AUDIT,
                    message: "efficiency audit violated".into(),
                });
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("grac: {f}");
            ExitCode::from(f.code as u8)
        }
    }
}
