use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use lexichoice_cli::commands::{self, Input};
use lexichoice_cli::{repro, Format, InputError, Report};

#[derive(Parser, Debug)]
#[command(name = "lexichoice", version, about = "Check, identify and run capacity-constrained lexicographic choice rules")]
struct Cli {
    /// Report format.
    #[arg(long, value_enum, default_value_t = FormatArg::Json, global = true)]
    format: FormatArg,
    /// Worker threads for the parallel checkers.
    #[arg(long, env = "LEXICHOICE_JOBS", global = true)]
    jobs: Option<usize>,
    /// Seed for sampled mechanism spaces.
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Print elapsed time to stderr.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Json,
    Text,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run axiom checks on a rule, or property checks on a choice structure.
    Check {
        file: PathBuf,
        /// Comma-separated axiom or property names, or `all`.
        #[arg(long, value_delimiter = ',')]
        axioms: Option<Vec<String>>,
        /// Re-validate the witnesses of an earlier report instead of checking.
        #[arg(long, value_name = "REPORT")]
        replay_witness: Option<PathBuf>,
    },
    /// Recover a priority profile from a rule.
    Extract { file: PathBuf },
    /// Run deferred acceptance.
    Da {
        structure: PathBuf,
        problem: PathBuf,
        /// Include round-by-round proposals and holds.
        #[arg(long)]
        trace: bool,
    },
    /// Compare the four Boston rules built from two orderings.
    BostonReport { w_file: PathBuf, o_file: PathBuf, n: usize },
    /// Replay a worked example by id, or `all`.
    Repro { case: String },
}

fn read(path: &Path) -> Result<(String, Vec<u8>), InputError> {
    let bytes = std::fs::read(path).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    Ok((path.display().to_string(), bytes))
}

fn run(cli: &Cli) -> Result<Report, InputError> {
    match &cli.command {
        Command::Check {
            file,
            axioms,
            replay_witness,
        } => {
            let (name, bytes) = read(file)?;
            let input = Input::new(&name, &bytes);
            match replay_witness {
                Some(report) => {
                    let (rname, rbytes) = read(report)?;
                    commands::replay(input, Input::new(&rname, &rbytes))
                }
                None => commands::check(input, axioms.as_deref(), cli.seed),
            }
        }
        Command::Extract { file } => {
            let (name, bytes) = read(file)?;
            commands::extract(Input::new(&name, &bytes))
        }
        Command::Da { structure, problem, trace } => {
            let (sname, sbytes) = read(structure)?;
            let (pname, pbytes) = read(problem)?;
            commands::da(Input::new(&sname, &sbytes), Input::new(&pname, &pbytes), *trace)
        }
        Command::BostonReport { w_file, o_file, n } => {
            let (wname, wbytes) = read(w_file)?;
            let (oname, obytes) = read(o_file)?;
            commands::boston_report(Input::new(&wname, &wbytes), Input::new(&oname, &obytes), *n)
        }
        Command::Repro { case } => repro::repro(case),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs.filter(|&j| j > 0) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("lexichoice: cannot start {jobs} workers: {e}");
            return ExitCode::from(2);
        }
    }
    let format = match cli.format {
        FormatArg::Json => Format::Json,
        FormatArg::Text => Format::Text,
    };
    let start = Instant::now();
    let result = run(&cli);
    if cli.timing {
        eprintln!("elapsed: {:.3}s", start.elapsed().as_secs_f64());
    }
    match result {
        Ok(report) => {
            let out = report.render(format);
            match &cli.output {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, out) {
                        eprintln!("lexichoice: {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                }
                None => print!("{out}"),
            }
            ExitCode::from(report.code)
        }
        Err(e) => {
            eprintln!("lexichoice: {e}");
            ExitCode::from(2)
        }
    }
}
