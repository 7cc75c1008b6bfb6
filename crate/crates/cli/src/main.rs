use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use promisekit::commands::{self, parse_range};
use promisekit::composition::ChainSpec;
use promisekit::dynamics::Mode;
use promisekit::model::{self, emit};
use promisekit::report::Report;

#[derive(Parser)]
#[command(name = "promisekit", version, about = "Check, simulate and compose promise models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Det,
    Stoch,
}

#[derive(Args)]
struct Output {
    /// Report format.
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Static analysis of a model document.
    Check {
        model: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Run the model's channels and summarize trust and delivery.
    Simulate {
        model: PathBuf,
        #[arg(long)]
        horizon: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value = "det")]
        mode: ModeArg,
        /// Write the tab-separated event log here.
        #[arg(long)]
        log: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Generate and audit an N-proxy delivery chain.
    Proxy {
        #[arg(long)]
        n: usize,
        /// Fit cost growth over chain sizes A..B.
        #[arg(long)]
        range: Option<String>,
        #[arg(long)]
        direct_trust: bool,
        /// Write the generated chain as a model document.
        #[arg(long)]
        emit: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Translate a body between two vocabularies of a model.
    Translate {
        model: PathBuf,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        /// Source words, comma separated; repeats count.
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        body: Vec<String>,
        #[command(flatten)]
        output: Output,
    },
    /// Fixed points and convergence of a model operator.
    Converge {
        model: PathBuf,
        #[arg(long)]
        operator: String,
        #[command(flatten)]
        output: Output,
    },
}

fn write_to(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn deliver(report: &Report, output: &Output) -> Result<u8> {
    let text = match output.format {
        Format::Text => report.to_text(),
        Format::Json => report.to_json(),
    };
    match &output.out {
        Some(path) => write_to(path, &text)?,
        None => print!("{text}"),
    }
    Ok(report.exit_code() as u8)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Check { model, output } => {
            let doc = model::load(&model)?;
            deliver(&commands::check(&doc)?, &output)
        }
        Command::Simulate {
            model,
            horizon,
            seed,
            mode,
            log,
            output,
        } => {
            let doc = model::load(&model)?;
            let mode = match mode {
                ModeArg::Det => Mode::Deterministic,
                ModeArg::Stoch => Mode::Stochastic,
            };
            let (report, events) = commands::simulate(&doc, horizon, seed, mode)?;
            if let Some(path) = log {
                write_to(&path, &events.to_tsv())?;
            }
            deliver(&report, &output)
        }
        Command::Proxy {
            n,
            range,
            direct_trust,
            emit: emit_path,
            output,
        } => {
            let range = range.as_deref().map(parse_range).transpose()?;
            let spec = ChainSpec {
                n_proxies: n,
                direct_trust,
            };
            let (report, doc) = commands::proxy(spec, range)?;
            if let Some(path) = emit_path {
                write_to(&path, &emit(&doc))?;
            }
            deliver(&report, &output)
        }
        Command::Translate {
            model,
            from,
            to,
            body,
            output,
        } => {
            let doc = model::load(&model)?;
            let words: Vec<String> = body.iter().map(|w| w.trim().to_string()).filter(|w| !w.is_empty()).collect();
            deliver(&commands::translate(&doc, &from, &to, &words)?, &output)
        }
        Command::Converge { model, operator, output } => {
            let doc = model::load(&model)?;
            deliver(&commands::converge(&doc, &operator)?, &output)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
