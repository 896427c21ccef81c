use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use faltertide::commands::{
    cmd_agreement, cmd_denote, cmd_equiv, cmd_eval_cont, cmd_eval_disc, cmd_hol_check,
    cmd_invariance, cmd_parse, CmdResult, Semantics,
};
use faltertide::formats::InputError;
use faltertide::report::Report;
use faltertide::{resolve_flex_bound, resolve_seed};

/// Evaluate temporal formulas over lasso traces in discrete or continuous
/// time, test stuttering laws, and check HOL derivations.
///
/// Exit codes: 0 = established, 1 = refuted (witness emitted),
/// 2 = established only within the flexible-quantifier bound,
/// 3 = malformed input.
#[derive(Parser)]
#[command(name = "faltertide", version, max_term_width = 100)]
struct Cli {
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the report to this file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a formula and print its canonical form.
    Parse {
        /// Model file declaring the symbols and flexible variables.
        #[arg(long)]
        model: PathBuf,
        /// Inline formula text.
        #[arg(long)]
        formula: Option<String>,
        /// File containing the formula.
        #[arg(long)]
        formula_file: Option<PathBuf>,
    },
    /// Evaluate a formula on a discrete lasso trace.
    EvalDisc {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        formula: Option<String>,
        #[arg(long)]
        formula_file: Option<PathBuf>,
        /// Discrete trace file (steps without durations).
        #[arg(long)]
        trace: PathBuf,
        /// Stutter-expansion bound for flexible quantifiers
        /// (default from FALTERTIDE_FLEX_BOUND, then 1).
        #[arg(long)]
        flex_bound: Option<usize>,
    },
    /// Evaluate a formula at time zero of a continuous trace.
    EvalCont {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        formula: Option<String>,
        #[arg(long)]
        formula_file: Option<PathBuf>,
        /// Continuous trace file (every step carries a duration).
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        flex_bound: Option<usize>,
    },
    /// Print the time set a formula denotes on a continuous trace.
    Denote {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        formula: Option<String>,
        #[arg(long)]
        formula_file: Option<PathBuf>,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        flex_bound: Option<usize>,
    },
    /// Decide stuttering equivalence of two traces.
    Equiv {
        /// First trace file.
        a: PathBuf,
        /// Second trace file.
        b: PathBuf,
        /// Which semantics the traces use.
        #[arg(long, value_enum, default_value_t = Semantics::Disc)]
        mode: Semantics,
    },
    /// Run randomized stutter-invariance trials on a formula and trace.
    Invariance {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        formula: Option<String>,
        #[arg(long)]
        formula_file: Option<PathBuf>,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, value_enum, default_value_t = Semantics::Disc)]
        semantics: Semantics,
        /// Number of randomized trials.
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// RNG seed (default from FALTERTIDE_SEED, then a fixed constant).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        flex_bound: Option<usize>,
    },
    /// Cross-check discrete and continuous validity on a formula corpus.
    Agreement {
        #[arg(long)]
        model: PathBuf,
        /// Corpus file: formulas plus discrete traces.
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Check HOL derivations from an S-expression file.
    HolCheck {
        /// File of derivation S-expressions.
        file: PathBuf,
    },
}

fn run(cli: &Cli) -> Result<CmdResult, InputError> {
    match &cli.cmd {
        Cmd::Parse { model, formula, formula_file } => cmd_parse(model, formula, formula_file),
        Cmd::EvalDisc { model, formula, formula_file, trace, flex_bound } => {
            cmd_eval_disc(model, formula, formula_file, trace, resolve_flex_bound(*flex_bound)?)
        }
        Cmd::EvalCont { model, formula, formula_file, trace, flex_bound } => {
            cmd_eval_cont(model, formula, formula_file, trace, resolve_flex_bound(*flex_bound)?)
        }
        Cmd::Denote { model, formula, formula_file, trace, flex_bound } => {
            cmd_denote(model, formula, formula_file, trace, resolve_flex_bound(*flex_bound)?)
        }
        Cmd::Equiv { a, b, mode } => cmd_equiv(a, b, *mode),
        Cmd::Invariance { model, formula, formula_file, trace, semantics, trials, seed, flex_bound } => {
            cmd_invariance(
                model,
                formula,
                formula_file,
                trace,
                *semantics,
                *trials,
                resolve_seed(*seed)?,
                resolve_flex_bound(*flex_bound)?,
            )
        }
        Cmd::Agreement { model, corpus } => cmd_agreement(model, corpus),
        Cmd::HolCheck { file } => cmd_hol_check(file),
    }
}

fn command_name(cmd: &Cmd) -> &'static str {
    match cmd {
        Cmd::Parse { .. } => "parse",
        Cmd::EvalDisc { .. } => "eval-disc",
        Cmd::EvalCont { .. } => "eval-cont",
        Cmd::Denote { .. } => "denote",
        Cmd::Equiv { .. } => "equiv",
        Cmd::Invariance { .. } => "invariance",
        Cmd::Agreement { .. } => "agreement",
        Cmd::HolCheck { .. } => "hol-check",
    }
}

fn emit(cli: &Cli, report: &Report) -> std::io::Result<()> {
    let rendered = match cli.format {
        Format::Json => report.to_json() + "\n",
        Format::Text => report.to_text(),
    };
    match &cli.output {
        Some(path) => std::fs::write(path, rendered),
        None => {
            print!("{rendered}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    // Route usage errors to the input-error exit code; `--help` and
    // `--version` keep exit 0.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (exit, report) = match run(&cli) {
        Ok(out) => (out.exit, out.report),
        Err(e) => {
            let mut report = Report::new(command_name(&cli.cmd));
            report.error = Some(e.to_string());
            eprintln!("error: {e}");
            (3, report)
        }
    };
    if let Err(e) = emit(&cli, &report) {
        eprintln!("error: failed to write report: {e}");
        return ExitCode::from(3);
    }
    ExitCode::from(exit as u8)
}
