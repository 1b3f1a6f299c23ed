//! `hofv`: solve, convergence and stability studies from a JSON config.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hofv::config::{Problem, ProblemConfig};
use hofv::study::{run_convergence, run_solve, run_stability, Metadata};
use hofv::Error;

const DEFAULT_CONVERGENCE_N: [usize; 4] = [4, 8, 16, 32];
const DEFAULT_STABILITY_N: [usize; 3] = [2, 4, 8];

#[derive(Parser)]
#[command(
    name = "hofv",
    version,
    about = "Arbitrary-order vertex-centered finite volume solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve on the configured mesh and write the solution as JSON.
    Solve(Common),
    /// Refine uniformly and write errors and observed orders as CSV.
    Convergence {
        #[command(flatten)]
        common: Common,
        /// Mesh sizes, e.g. "4,8,16,32".
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
    },
    /// Measure coercivity, boundedness and the inf-sup constant, as JSON.
    Stability {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
        /// Random probes per level.
        #[arg(long, default_value_t = 100)]
        probes: usize,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    quiet: bool,
}

impl Common {
    fn problem(&self) -> hofv::Result<Problem> {
        let mut config = ProblemConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        Problem::new(config)
    }

    /// Write `data` to `--out` or stdout, and the summary to whichever
    /// stream the data did not take.
    fn emit(&self, data: &str, summary: &str) -> hofv::Result<()> {
        match &self.out {
            Some(path) => {
                std::fs::write(path, data)?;
                if !self.quiet {
                    print!("{summary}");
                }
            }
            None => {
                std::io::stdout().write_all(data.as_bytes())?;
                if !self.quiet {
                    eprint!("{summary}");
                }
            }
        }
        Ok(())
    }
}

fn metadata(problem: &Problem) -> Metadata {
    Metadata::new(
        problem,
        chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
    )
}

fn sidecar(out: &Path) -> PathBuf {
    out.with_extension("meta.json")
}

fn run(cli: Cli) -> hofv::Result<()> {
    match cli.command {
        Command::Solve(common) => {
            let problem = common.problem()?;
            let out = run_solve(&problem, metadata(&problem))?;
            let summary = match &out.error_report {
                Some(e) => format!(
                    "dofs {}  err_h1 {:.4e}  err_l2 {:.4e}  err_sc {:.4e}\n",
                    out.dofs, e.err_h1, e.err_l2, e.err_supercloseness
                ),
                None => format!("dofs {}  residual {:.3e}\n", out.dofs, out.residual),
            };
            common.emit(&out.to_json(), &summary)
        }
        Command::Convergence { common, n_list } => {
            let problem = common.problem()?;
            let n_list = n_list.unwrap_or(DEFAULT_CONVERGENCE_N.to_vec());
            let study = run_convergence(&problem, &n_list, metadata(&problem))?;
            common.emit(&study.to_csv()?, &study.summary_table())?;
            if let Some(path) = &common.out {
                std::fs::write(sidecar(path), study.to_json())?;
            }
            Ok(())
        }
        Command::Stability {
            common,
            n_list,
            probes,
        } => {
            let problem = common.problem()?;
            let n_list = n_list.unwrap_or(DEFAULT_STABILITY_N.to_vec());
            let study = run_stability(&problem, &n_list, probes, metadata(&problem))?;
            common.emit(&study.to_json(), &study.summary_table())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hofv: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> ExitCode {
    if e.is_numeric() {
        ExitCode::from(1)
    } else {
        ExitCode::from(2)
    }
}
