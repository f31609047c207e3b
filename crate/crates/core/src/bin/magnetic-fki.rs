use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use magnetic_fki::experiment::{
    run, ExperimentConfig, FkiMode, FunctionSpec, GraphSource, OutputFormat, RunError, SubsetSpec,
    Task, VerifyKind, VerifyParams, EXIT_IO, WORKERS_ENV,
};
use magnetic_fki::graph::{BallMetric, GeneratorSpec};

#[derive(Parser, Debug)]
#[command(name = "magnetic-fki", version, about = "Magnetic Schrödinger semigroups on weighted graphs: exact kernels and path-integral Monte Carlo")]
struct Cli {
    /// Worker threads for Monte Carlo tasks (results do not depend on it).
    #[arg(long, global = true, env = WORKERS_ENV)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct GraphArgs {
    /// Graph JSON file.
    #[arg(long, conflicts_with = "generator")]
    graph: Option<PathBuf>,
    /// Fixture as JSON, e.g. '{"family":"path","n":5,"theta":0.5}'.
    #[arg(long)]
    generator: Option<String>,
    /// Potential override for a generator, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "generator")]
    potential: Option<Vec<f64>>,
}

impl GraphArgs {
    fn source(&self) -> Result<GraphSource, RunError> {
        match (&self.graph, &self.generator) {
            (Some(file), _) => Ok(GraphSource::File { file: file.clone() }),
            (None, Some(text)) => {
                let generator: GeneratorSpec = serde_json::from_str(text)
                    .map_err(|e| RunError::ConfigInvalid(format!("--generator: {e}")))?;
                Ok(GraphSource::Generator {
                    generator,
                    v: self.potential.clone(),
                })
            }
            (None, None) => Err(RunError::ConfigInvalid(
                "one of --graph or --generator is required".into(),
            )),
        }
    }
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    /// Output file (written atomically); standard output when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_parser = parse_format, default_value = "json")]
    format: OutputFormat,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    match s {
        "json" => Ok(OutputFormat::Json),
        "csv" => Ok(OutputFormat::Csv),
        other => Err(format!("unknown format `{other}` (json or csv)")),
    }
}

fn parse_metric(s: &str) -> Result<BallMetric, String> {
    match s {
        "combinatorial" => Ok(BallMetric::Combinatorial),
        "intrinsic" => Ok(BallMetric::Intrinsic),
        other => Err(format!("unknown metric `{other}`")),
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the output path of the config.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Exact semigroup kernel e^{-tL^(U)}.
    Expm {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value = "all")]
        subset: SubsetSpec,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Spectrum of L^(U).
    Spectrum {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, default_value = "all")]
        subset: SubsetSpec,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Sample trajectories of the jump process.
    Simulate {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        x: usize,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 10)]
        n_samples: u64,
        #[arg(long, default_value_t = 10_000)]
        max_jumps: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Monte Carlo estimates via the Feynman-Kac-Itô formula.
    Fki {
        #[command(subcommand)]
        mode: FkiCommand,
    },
    /// Numerical checks; exits nonzero iff a check fails.
    Verify {
        #[command(subcommand)]
        check: VerifyCommand,
    },
    /// Default intrinsic metric and its slack.
    Metric {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Partial sums of the essential self-adjointness path criterion.
    #[command(name = "esssa-pathsum")]
    EssSaPathSum {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, value_delimiter = ',')]
        path: Vec<usize>,
        #[arg(long)]
        n_terms: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Args, Debug, Clone)]
struct FkiArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long)]
    t: f64,
    #[arg(long, default_value_t = 0)]
    x: usize,
    #[arg(long, default_value_t = 10_000)]
    n_samples: u64,
    #[arg(long, default_value_t = 10_000)]
    max_jumps: usize,
    /// Skip the exact comparison value.
    #[arg(long)]
    no_oracle: bool,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Subcommand, Debug)]
enum FkiCommand {
    Semigroup {
        #[command(flatten)]
        common: FkiArgs,
        #[arg(long, default_value = "constant:1")]
        f: FunctionSpec,
    },
    Kernel {
        #[command(flatten)]
        common: FkiArgs,
        #[arg(long, default_value_t = 0)]
        y: usize,
    },
    Trace {
        #[command(flatten)]
        common: FkiArgs,
        #[arg(long, default_value = "all")]
        subset: SubsetSpec,
    },
    Dirichlet {
        #[command(flatten)]
        common: FkiArgs,
        #[arg(long, default_value = "constant:1")]
        f: FunctionSpec,
        #[arg(long)]
        subset: SubsetSpec,
    },
}

#[derive(Args, Debug, Clone)]
struct VerifyArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Comparison potential (defaults to the graph potential).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    v2: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    times: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    shifts: Vec<f64>,
    #[arg(long, default_value = "all")]
    subset: SubsetSpec,
    #[arg(long, default_value = "constant:1")]
    f: FunctionSpec,
    #[arg(long, default_value_t = 0)]
    x: usize,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, value_delimiter = ',')]
    radii: Vec<f64>,
    #[arg(long, value_parser = parse_metric, default_value = "combinatorial")]
    ball_metric: BallMetric,
    #[arg(long, value_delimiter = ',', default_value = "1,10,100")]
    cutoffs: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-3,1e-4,1e-5")]
    generator_times: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1e-1,1e-2,1e-3")]
    tail_times: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long)]
    eigenpair: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    n_samples: u64,
    #[arg(long, default_value_t = 10_000)]
    max_jumps: usize,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Subcommand, Debug)]
enum VerifyCommand {
    Kato(VerifyArgs),
    Gt(VerifyArgs),
    Exhaustion(VerifyArgs),
    Generator(VerifyArgs),
    Groundstate(VerifyArgs),
    Formsum(VerifyArgs),
    Intrinsic(VerifyArgs),
    Identities(VerifyArgs),
}

fn config(graph: &GraphArgs, task: Task, out: &OutputArgs) -> Result<ExperimentConfig, RunError> {
    let mut cfg = ExperimentConfig::new(graph.source()?, task);
    cfg.output = out.output.clone();
    cfg.format = out.format;
    cfg.seed = out.seed;
    Ok(cfg)
}

fn fki_config(
    c: &FkiArgs,
    mode: FkiMode,
    f: FunctionSpec,
    y: usize,
    subset: SubsetSpec,
) -> Result<ExperimentConfig, RunError> {
    let task = Task::Fki {
        mode,
        t: c.t,
        x: c.x,
        y,
        f,
        subset,
        n_samples: c.n_samples,
        max_jumps: c.max_jumps,
        oracle: !c.no_oracle,
    };
    config(&c.graph, task, &c.out)
}

fn verify_config(kind: VerifyKind, a: &VerifyArgs) -> Result<ExperimentConfig, RunError> {
    let params = VerifyParams {
        v2: a.v2.clone(),
        times: a.times.clone(),
        shifts: a.shifts.clone(),
        subset: a.subset.clone(),
        f: a.f.clone(),
        x: a.x,
        t: a.t,
        radii: a.radii.clone(),
        ball_metric: a.ball_metric,
        cutoffs: a.cutoffs.clone(),
        generator_times: a.generator_times.clone(),
        tail_times: a.tail_times.clone(),
        trials: a.trials,
        eigenpair: a.eigenpair,
        n_samples: a.n_samples,
        max_jumps: a.max_jumps,
    };
    config(&a.graph, Task::Verify { check: kind, params }, &a.out)
}

fn build(command: Command) -> Result<ExperimentConfig, RunError> {
    match command {
        Command::Run { config, output } => {
            let text = std::fs::read_to_string(&config).map_err(|source| {
                RunError::Io(magnetic_fki::io::IoError::Io {
                    path: config.clone(),
                    source,
                })
            })?;
            let mut cfg = ExperimentConfig::from_json(&text)?;
            if output.is_some() {
                cfg.output = output;
            }
            Ok(cfg)
        }
        Command::Expm {
            graph,
            t,
            subset,
            out,
        } => config(&graph, Task::Expm { t, subset }, &out),
        Command::Spectrum { graph, subset, out } => config(&graph, Task::Spectrum { subset }, &out),
        Command::Simulate {
            graph,
            x,
            t,
            n_samples,
            max_jumps,
            out,
        } => config(
            &graph,
            Task::Simulate {
                x,
                t,
                n_samples,
                max_jumps,
            },
            &out,
        ),
        Command::Fki { mode } => match mode {
            FkiCommand::Semigroup { common, f } => {
                fki_config(&common, FkiMode::Semigroup, f, 0, SubsetSpec::All)
            }
            FkiCommand::Kernel { common, y } => {
                fki_config(&common, FkiMode::Kernel, FunctionSpec::default(), y, SubsetSpec::All)
            }
            FkiCommand::Trace { common, subset } => {
                fki_config(&common, FkiMode::Trace, FunctionSpec::default(), 0, subset)
            }
            FkiCommand::Dirichlet { common, f, subset } => {
                fki_config(&common, FkiMode::Dirichlet, f, 0, subset)
            }
        },
        Command::Verify { check } => match check {
            VerifyCommand::Kato(a) => verify_config(VerifyKind::Kato, &a),
            VerifyCommand::Gt(a) => verify_config(VerifyKind::Gt, &a),
            VerifyCommand::Exhaustion(a) => verify_config(VerifyKind::Exhaustion, &a),
            VerifyCommand::Generator(a) => verify_config(VerifyKind::Generator, &a),
            VerifyCommand::Groundstate(a) => verify_config(VerifyKind::Groundstate, &a),
            VerifyCommand::Formsum(a) => verify_config(VerifyKind::Formsum, &a),
            VerifyCommand::Intrinsic(a) => verify_config(VerifyKind::Intrinsic, &a),
            VerifyCommand::Identities(a) => verify_config(VerifyKind::Identities, &a),
        },
        Command::Metric { graph, out } => config(&graph, Task::Metric, &out),
        Command::EssSaPathSum {
            graph,
            alpha,
            path,
            n_terms,
            out,
        } => config(
            &graph,
            Task::EssSaPathSum {
                alpha,
                path,
                n_terms,
            },
            &out,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = build(cli.command).and_then(|mut cfg| {
        cfg.workers = cli.workers;
        run(&cfg).map(|out| (cfg, out))
    });
    match outcome {
        Ok((cfg, out)) => {
            if cfg.output.is_none() {
                let mut stdout = std::io::stdout().lock();
                if stdout.write_all(&out.bytes).and_then(|_| stdout.flush()).is_err() {
                    return ExitCode::from(EXIT_IO as u8);
                }
            }
            ExitCode::from(out.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
