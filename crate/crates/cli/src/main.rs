use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qcdi_cli::run::{execute, resolve_out_dir, OUT_DIR_ENV};
use qcdi_cli::spec::{Mode, ParsedSpec};
use qcdi_cli::{demo_spec, read_spec};

const EXIT_BREACH: u8 = 1;
const EXIT_SPEC: u8 = 2;

#[derive(Parser)]
#[command(name = "qcdi", version, about = "Run quantum computation by dynamic invariants experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a run spec and write CSV reports plus summary.json.
    Run {
        spec: PathBuf,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Parse and check a run spec without running it.
    Validate {
        spec: PathBuf,
        #[command(flatten)]
        mode: ModeOpts,
    },
    /// Run a built-in demonstration.
    Demo {
        #[arg(value_enum)]
        which: DemoName,
        #[command(flatten)]
        opts: RunOpts,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DemoName {
    Dj,
    Grover,
}

#[derive(Args)]
struct ModeOpts {
    /// Reject unknown keys (default).
    #[arg(long, conflicts_with = "lenient")]
    strict: bool,
    /// Warn about unknown keys instead of failing.
    #[arg(long)]
    lenient: bool,
}

impl ModeOpts {
    fn mode(&self) -> Mode {
        if self.lenient {
            Mode::Lenient
        } else {
            Mode::Strict
        }
    }
}

#[derive(Args)]
struct RunOpts {
    /// Output directory [default: spec `out`, then $QCDI_OUT_DIR, then ./qcdi-out]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sample points on [0, 1] for residual, spectrum and phase reports.
    #[arg(long)]
    grid: Option<usize>,
    /// Propagator steps.
    #[arg(long)]
    steps: Option<usize>,
    #[command(flatten)]
    mode: ModeOpts,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { spec, mode } => match load(&spec, mode.mode()) {
            Ok(parsed) => {
                println!("{}: ok, {} run(s)", spec.display(), parsed.spec.jobs().len());
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Command::Run { spec, opts } => match load(&spec, opts.mode.mode()) {
            Ok(parsed) => run(parsed, &opts),
            Err(code) => code,
        },
        Command::Demo { which, opts } => {
            let name = match which {
                DemoName::Dj => "dj",
                DemoName::Grover => "grover",
            };
            run(demo_spec(name).expect("demo exists"), &opts)
        }
    }
}

fn load(path: &std::path::Path, mode: Mode) -> Result<ParsedSpec, ExitCode> {
    match read_spec(path, mode) {
        Ok(Ok(parsed)) => {
            for w in &parsed.warnings {
                eprintln!("warning: {w}");
            }
            Ok(parsed)
        }
        Ok(Err(e)) => {
            eprintln!("error: {}: {e}", path.display());
            Err(ExitCode::from(EXIT_SPEC))
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            Err(ExitCode::from(EXIT_SPEC))
        }
    }
}

fn run(parsed: ParsedSpec, opts: &RunOpts) -> ExitCode {
    let mut spec = parsed.spec;
    if let Some(grid) = opts.grid {
        spec.grid = grid;
    }
    if let Some(steps) = opts.steps {
        spec.steps = steps;
    }
    if let Err(e) = spec.revalidate() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_SPEC);
    }
    let out_dir = resolve_out_dir(opts.out.as_deref(), &spec);
    let summary = match execute(&spec, &out_dir, &parsed.warnings) {
        Ok(summary) => summary,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_SPEC);
        }
    };
    for r in &summary.runs {
        let status = if r.passed() { "ok  " } else { "FAIL" };
        println!(
            "{status} run{:03} T={} {} -> {}",
            r.index,
            r.total_time,
            r.variant,
            r.outcome.as_deref().unwrap_or("-")
        );
        if let Some(e) = &r.error {
            println!("     error: {e}");
        }
        for b in &r.breaches {
            println!("     {b}");
        }
    }
    println!("reports in {} ({OUT_DIR_ENV} sets the default)", out_dir.display());
    if summary.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_BREACH)
    }
}
