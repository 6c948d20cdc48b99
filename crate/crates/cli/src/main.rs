mod args;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ratobs::inverse::{find_observability_index, IndexConfig};
use ratobs::lie::build_s_chain;
use ratobs::observer::{GainSpec, GridSpec};
use ratobs::parser::{parse, RationalSystem};
use ratobs::pipeline::{run_examples, synthesize, PipelineError, SynthOptions, SynthesisReport, EXAMPLES, MICHAELIS};
use ratobs::realization::realize;
use ratobs::simulate::{write_csv, SimConfig};

/// Rational and polynomial observer synthesis.
#[derive(Parser, Debug)]
#[command(name = "ratobs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a system file and print a summary.
    Check { file: PathBuf },
    /// Print the chain of output derivatives s_1..s_{m m_y}.
    Lie {
        file: PathBuf,
        /// Number of derivative blocks.
        #[arg(long, default_value_t = 3)]
        max_order: usize,
    },
    /// Find the observability index and the inverse of s.
    Observability {
        file: PathBuf,
        #[command(flatten)]
        index: IndexArgs,
    },
    /// Print the output-based realization.
    Realize {
        file: PathBuf,
        #[command(flatten)]
        index: IndexArgs,
    },
    /// Run the full synthesis and print a JSON report.
    Synth {
        file: PathBuf,
        #[command(flatten)]
        index: IndexArgs,
        #[command(flatten)]
        gain: GainArgs,
        #[command(flatten)]
        sim: SimArgs,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the mismatched-start trajectory as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Record wall-clock seconds per stage in the report.
        #[arg(long)]
        timings: bool,
    },
    /// Simulate the performance system and write the trajectory as CSV.
    Simulate {
        file: PathBuf,
        /// Take the constant gain from a report written by `synth`.
        #[arg(long, conflicts_with_all = ["gain", "poles", "grid"])]
        report: Option<PathBuf>,
        #[command(flatten)]
        index: IndexArgs,
        #[command(flatten)]
        gain: GainArgs,
        #[command(flatten)]
        sim: SimArgs,
        /// CSV destination; standard output if absent.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the pipeline on the built-in reference systems.
    #[command(name = "paper-examples")]
    Examples {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args, Debug)]
struct IndexArgs {
    /// Largest number of derivative blocks tried.
    #[arg(long)]
    max_order: Option<usize>,
    /// Seed for parameter instantiation.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl IndexArgs {
    fn config(&self) -> IndexConfig {
        IndexConfig {
            m_max: self.max_order,
            seed: self.seed,
            ..IndexConfig::default()
        }
    }
}

#[derive(Args, Debug)]
#[group(multiple = false)]
struct GainArgs {
    /// Constant gain, row-major, e.g. `11/4,5/8`.
    #[arg(long, value_parser = args::gains, allow_hyphen_values = true)]
    gain: Option<args::Gains>,
    /// Pole placement, e.g. `-1,-2` or `-2+1i,-2-1i`.
    #[arg(long, value_parser = args::poles, allow_hyphen_values = true)]
    poles: Option<args::Poles>,
    /// Grid search over `lo:hi:step`; `-4:4:1` without a value.
    #[arg(long, value_parser = args::grid, num_args = 0..=1, default_missing_value = "-4:4:1")]
    grid: Option<GridSpec>,
}

impl GainArgs {
    fn spec(&self) -> GainSpec {
        if let Some(g) = &self.gain {
            GainSpec::Explicit(g.0.clone())
        } else if let Some(p) = &self.poles {
            GainSpec::Poles(p.0.clone())
        } else if let Some(g) = &self.grid {
            GainSpec::Grid(g.clone())
        } else {
            GainSpec::Auto
        }
    }
}

#[derive(Args, Debug)]
struct SimArgs {
    /// Integration step in seconds.
    #[arg(long, value_parser = args::positive)]
    step: Option<f64>,
    /// Simulation horizon in seconds.
    #[arg(long, value_parser = args::positive)]
    horizon: Option<f64>,
    /// Observer start minus s(x0), comma-separated.
    #[arg(long, value_parser = args::numbers, allow_hyphen_values = true)]
    xo_offset: Option<args::Numbers>,
}

impl SimArgs {
    fn config(&self, record: bool) -> SimConfig {
        let base = SimConfig::default();
        SimConfig {
            step: self.step.unwrap_or(base.step),
            horizon: self.horizon.unwrap_or(base.horizon),
            record_every: usize::from(record),
            ..base
        }
    }
}

/// Exit code with a message for standard error.
struct Failure {
    code: u8,
    message: String,
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Self {
            code: e.exit_code() as u8,
            message: e.to_string(),
        }
    }
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

fn io_fail(path: &Path, e: io::Error) -> Failure {
    fail(1, format!("{}: {e}", path.display()))
}

/// File contents, or a built-in system when `path` names one and no such
/// file exists.
fn load(path: &Path) -> Result<String, Failure> {
    match fs::read_to_string(path) {
        Ok(text) => Ok(text),
        Err(e) if e.kind() == io::ErrorKind::NotFound => {
            let name = path.to_str().unwrap_or_default();
            EXAMPLES
                .iter()
                .find(|ex| ex.name == name)
                .map(|ex| ex.source.to_string())
                .or_else(|| (name == "michaelis").then(|| MICHAELIS.to_string()))
                .ok_or_else(|| io_fail(path, e))
        }
        Err(e) => Err(io_fail(path, e)),
    }
}

fn load_system(path: &Path) -> Result<RationalSystem, Failure> {
    let text = load(path)?;
    parse(&text).map_err(|e| fail(1, format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| io_fail(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn lines(items: impl IntoIterator<Item = String>) -> String {
    items.into_iter().map(|l| l + "\n").collect()
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Check { file } => {
            let sys = load_system(&file)?;
            let mut out = vec![sys.summary()];
            out.extend(sys.render().lines().map(str::to_string));
            emit(None, &lines(out))
        }
        Command::Lie { file, max_order } => {
            let sys = load_system(&file)?;
            let chain = build_s_chain(&sys, max_order)
                .map_err(|e| PipelineError::from(ratobs::inverse::InverseError::from(e)))?;
            emit(None, &lines(chain.render(&sys, max_order)))
        }
        Command::Observability { file, index } => {
            let sys = load_system(&file)?;
            let obs = find_observability_index(&sys, &index.config()).map_err(PipelineError::from)?;
            let mut out: Vec<String> = obs
                .attempts
                .iter()
                .map(|a| format!("m = {}: {} {}", a.m, a.method, a.outcome))
                .collect();
            out.push(format!("m_o = {}, n_o = {}", obs.m_o, obs.n_o()));
            out.extend(obs.inverse.render());
            out.extend(
                obs.inverse
                    .render_side_conditions()
                    .into_iter()
                    .map(|c| format!("assume {c}")),
            );
            emit(None, &lines(out))
        }
        Command::Realize { file, index } => {
            let sys = load_system(&file)?;
            let obs = find_observability_index(&sys, &index.config()).map_err(PipelineError::from)?;
            let real = realize(&sys, &obs).map_err(PipelineError::from)?;
            let mut out = real.render_f();
            out.extend(
                real.render_b()
                    .into_iter()
                    .enumerate()
                    .map(|(k, b)| format!("b_o{} = {b}", k + 1)),
            );
            out.extend(
                real.render_x0()
                    .into_iter()
                    .enumerate()
                    .map(|(k, x)| format!("xo{}(0) = {x}", k + 1)),
            );
            emit(None, &lines(out))
        }
        Command::Synth {
            file,
            index,
            gain,
            sim,
            out,
            csv,
            timings,
        } => {
            let sys = load_system(&file)?;
            let opts = SynthOptions {
                index: index.config(),
                gain: gain.spec(),
                sim: sim.config(csv.is_some()),
                xo_offset: sim.xo_offset.clone().map(|o| o.0),
                simulate: true,
                timings,
            };
            let syn = synthesize(&sys, &opts)?;
            let json = serde_json::to_string_pretty(&syn.report).map_err(|e| fail(1, e.to_string()))?;
            emit(out.as_deref(), &(json + "\n"))?;
            if let (Some(path), Some(run)) = (&csv, &syn.mismatched) {
                let f = fs::File::create(path).map_err(|e| io_fail(path, e))?;
                write_csv(run, sys.n(), syn.observer.n_o, syn.observer.m_y, io::BufWriter::new(f))
                    .map_err(|e| io_fail(path, e))?;
            }
            sim_status(&syn.report)
        }
        Command::Simulate {
            file,
            report,
            index,
            gain,
            sim,
            csv,
        } => {
            let sys = load_system(&file)?;
            let spec = match &report {
                Some(path) => {
                    let text = fs::read_to_string(path).map_err(|e| io_fail(path, e))?;
                    let r: SynthesisReport =
                        serde_json::from_str(&text).map_err(|e| fail(1, format!("{}: {e}", path.display())))?;
                    GainSpec::Explicit(r.gain()?.into_iter().flatten().collect())
                }
                None => gain.spec(),
            };
            let opts = SynthOptions {
                index: index.config(),
                gain: spec,
                sim: sim.config(true),
                xo_offset: sim.xo_offset.clone().map(|o| o.0),
                simulate: true,
                timings: false,
            };
            let syn = synthesize(&sys, &opts)?;
            let run = syn
                .mismatched
                .as_ref()
                .ok_or_else(|| fail(1, "system has unbound parameters; bind them to simulate"))?;
            let mut buf = Vec::new();
            write_csv(run, sys.n(), syn.observer.n_o, syn.observer.m_y, &mut buf)
                .map_err(|e| fail(1, e.to_string()))?;
            emit(csv.as_deref(), &String::from_utf8_lossy(&buf))?;
            sim_status(&syn.report)
        }
        Command::Examples { seed } => {
            let outcomes = run_examples(seed);
            let mut out = Vec::new();
            for o in &outcomes {
                let checks: Vec<String> = o
                    .checks
                    .iter()
                    .map(|(name, ok)| format!("{name}={}", if *ok { "ok" } else { "FAIL" }))
                    .collect();
                let dims = match (o.m_o, o.n_o) {
                    (Some(m), Some(n)) => format!("m_o={m} n_o={n}"),
                    _ => "m_o=- n_o=-".into(),
                };
                let tail = o.tail_error.map_or("-".into(), |t| format!("{t:.3e}"));
                let verdict = if o.pass { "PASS" } else { "FAIL" };
                let detail = o.error.as_deref().map_or(String::new(), |e| format!(" error: {e}"));
                out.push(format!(
                    "{verdict} {:<13} {dims} tail={tail} {}{detail}",
                    o.name,
                    checks.join(" ")
                ));
            }
            let passed = outcomes.iter().filter(|o| o.pass).count();
            out.push(format!("{passed}/{} pipelines pass", outcomes.len()));
            emit(None, &lines(out))?;
            if passed == outcomes.len() {
                Ok(())
            } else {
                Err(fail(4, "some reference examples failed"))
            }
        }
    }
}

/// Exit 4 when the mismatched-start run failed; the output is already written.
fn sim_status(report: &SynthesisReport) -> Result<(), Failure> {
    match report.simulation.as_ref().and_then(|s| s.status.error()) {
        Some(e) => Err(fail(4, format!("simulation: {e}"))),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RATOBS_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse_from(args::join_grid(std::env::args())) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => {
            let _ = io::stdout().flush();
            ExitCode::SUCCESS
        }
        Err(f) => {
            let _ = io::stdout().flush();
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
