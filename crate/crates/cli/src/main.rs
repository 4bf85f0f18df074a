use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use qpath_core::harness::config::{InstanceKind, OutputFormat, RunConfig};
use qpath_core::harness::report::emit_report;
use qpath_core::harness::{execute, generate_instance, validate, RunMode};
use qpath_core::pathway::GraphFile;
use qpath_core::Error;

const EXIT_INVARIANT: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "qpath", version, about = "Target-state determination and pathway recovery for simulated variational circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the linear parameter model and compute the target parameters.
    DetermineState(RunArgs),
    /// Recover the per-edge objective pathway by pre-image iteration.
    Pathway(RunArgs),
    /// Both stages plus the local-linearity ratio test.
    Full(RunArgs),
    /// Run the invariant suite and print a pass/fail table.
    Validate(RunArgs),
    /// Write the instance graph as a graph file.
    GenInstance(RunArgs),
}

#[derive(Parser, Clone)]
struct RunArgs {
    /// JSON run config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Replaces every seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    quiet: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Both,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
            Format::Both => OutputFormat::Both,
        }
    }
}

fn load(args: &RunArgs) -> Result<RunConfig, Error> {
    let mut config = match &args.config {
        Some(path) => RunConfig::read(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.override_seeds(seed);
    }
    if let Some(out) = &args.out {
        config.output.dir = out.clone();
    }
    if let Some(f) = args.format {
        config.output.format = f.into();
    }
    config.validate()?;
    Ok(config)
}

fn exit_for(err: &Error) -> u8 {
    if err.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_CONFIG
    }
}

fn run(args: &RunArgs, mode: RunMode) -> Result<u8, Error> {
    let config = load(args)?;
    let (report, timings) = execute(&config, mode)?;
    let written = emit_report(&report, Some(&timings), &config.output.dir, config.output.format)?;
    if !args.quiet {
        let s = &report.state;
        println!("f0 = {}  f* = {}  f_sim(θ*) = {}  gap = {:.3e}", s.f0, s.f_star, s.f_sim, s.gap);
        if let Some(t) = &s.ratio_test {
            println!("ratio test spread = {:.3}", t.spread);
        }
        if let Some(p) = &report.pathway {
            println!(
                "pre-image {:?} after {} iterations ({} restarts), C* = {}, max |Ω* − Ω_sim| = {:.3e}",
                p.preimage.termination, p.preimage.iterations_used, p.preimage.restarts, p.decoded.total, p.max_deviation
            );
        }
        for path in &written {
            println!("wrote {}", path.display());
        }
        eprintln!("elapsed {:.3} s", timings.total_s);
    }
    if let Some(t) = report.numerical_failure() {
        eprintln!("error: pre-image iteration ended with {t:?}");
        return Ok(EXIT_NUMERICAL);
    }
    Ok(0)
}

fn run_validate(args: &RunArgs) -> Result<u8, Error> {
    let config = load(args)?;
    let report = validate(&config)?;
    if !args.quiet || !report.passed() {
        print!("{}", report.transcript());
    }
    Ok(if report.passed() { 0 } else { EXIT_INVARIANT })
}

fn gen_instance(args: &RunArgs) -> Result<u8, Error> {
    let config = load(args)?;
    if config.instance.kind == InstanceKind::File {
        return Err(Error::Config("gen-instance needs a generated instance kind".into()));
    }
    let instance = generate_instance(&config.instance, &config.circuit)?;
    let file = GraphFile::from_objective(&instance.objective)?;
    std::fs::create_dir_all(&config.output.dir)?;
    let path = config.output.dir.join("graph.json");
    std::fs::write(&path, serde_json::to_string_pretty(&file)? + "\n")?;
    if !args.quiet {
        println!(
            "{} vertices, {} edges, {} gates, {} parameters",
            instance.graph().vertex_count(),
            instance.graph().edge_count(),
            instance.circuit.len(),
            instance.circuit.parameter_count()
        );
        println!("wrote {}", path.display());
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::DetermineState(a) => run(a, RunMode::DetermineState),
        Command::Pathway(a) => run(a, RunMode::Pathway),
        Command::Full(a) => run(a, RunMode::Full),
        Command::Validate(a) => run_validate(a),
        Command::GenInstance(a) => gen_instance(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_for(&err))
        }
    }
}
