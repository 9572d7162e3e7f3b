// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};
use fsdfi_core::ir::SiteCatalog;
use fsdfi_core::runtime::{diagnose, interpret, Mode, NoObserver, RunConfig, DEFAULT_BUDGET};
use fsdfi_core::vfa::{analyze, TablesArtifact, SCHEMA_VERSION};
use fsdfi_harness::{
    compile_file, emit_report, render_report, run_corpus, ReportFormat, TOOL_VERSION,
};

const USAGE: u8 = 2;
const FAILURE: u8 = 1;

#[derive(Parser)]
#[command(
    name = "fsdfi",
    about = "Field-sensitive data-flow integrity for MiniC"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute legal-def tables for a program.
    Analyze {
        file: PathBuf,
        /// Write the tables here instead of stdout.
        #[arg(long, value_name = "FILE")]
        emit: Option<PathBuf>,
        /// Leave the initial def out of every legal set.
        #[arg(long)]
        strict_init: bool,
    },
    /// Run a program under one enforcement mode.
    Run {
        file: PathBuf,
        #[arg(long, default_value = "protected")]
        mode: Mode,
        #[arg(long)]
        strict_init: bool,
        /// Record violations and keep running.
        #[arg(long)]
        log_continue: bool,
        /// Instruction budget; overrides FSDFI_BUDGET.
        #[arg(long, value_name = "N")]
        budget: Option<u64>,
        /// Tables from `fsdfi analyze` instead of analyzing again.
        #[arg(long, value_name = "FILE")]
        tables: Option<PathBuf>,
        /// Write the execution report as JSON.
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,
        /// Values bound to main's parameters.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        input: Vec<i64>,
    },
    /// Run every case of a corpus directory and check its expectations.
    Corpus {
        dir: PathBuf,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "protected,field-insensitive,baseline"
        )]
        modes: Vec<Mode>,
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,
        #[arg(long, default_value = "json")]
        format: ReportFormat,
        #[arg(long, value_name = "N")]
        budget: Option<u64>,
    },
}

fn main() -> ExitCode {
    let version: &'static str =
        Box::leak(format!("{TOOL_VERSION} (table schema {SCHEMA_VERSION})").into_boxed_str());
    let matches = Cli::command().version(version).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err((code, message)) => {
            eprintln!("fsdfi: {message}");
            ExitCode::from(code)
        }
    }
}

type Exit = Result<u8, (u8, String)>;

fn budget(flag: Option<u64>) -> Result<u64, (u8, String)> {
    if let Some(b) = flag {
        return Ok(b);
    }
    match std::env::var("FSDFI_BUDGET") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| (USAGE, format!("FSDFI_BUDGET is not a count: `{v}`"))),
        Err(_) => Ok(DEFAULT_BUDGET),
    }
}

fn write(path: &Path, text: &str) -> Result<(), (u8, String)> {
    std::fs::write(path, text).map_err(|e| (FAILURE, format!("{}: {e}", path.display())))
}

fn execute(command: Command) -> Exit {
    match command {
        Command::Analyze {
            file,
            emit,
            strict_init,
        } => {
            let prog = compile_file(&file).map_err(|e| (FAILURE, e.to_string()))?;
            let artifact = analyze(&prog.ir).artifact(strict_init);
            match emit {
                Some(path) => {
                    write(&path, &artifact.to_json())?;
                    let s = &artifact.stats;
                    println!(
                        "{}: {} uses, {} defs, {} distinct legal sets",
                        file.display(),
                        s.uses,
                        s.defs,
                        s.distinct_sets
                    );
                }
                None => print!("{}", artifact.to_json()),
            }
            Ok(0)
        }
        Command::Run {
            file,
            mode,
            strict_init,
            log_continue,
            budget: flag,
            tables,
            report,
            input,
        } => {
            let prog = compile_file(&file).map_err(|e| (FAILURE, e.to_string()))?;
            let mut config = RunConfig::new(mode);
            config.strict_init = strict_init;
            config.log_continue = log_continue;
            config.budget = budget(flag)?;
            let (table, catalog): (_, SiteCatalog) = match tables {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| (USAGE, format!("{}: {e}", path.display())))?;
                    let art = TablesArtifact::from_json(&text)
                        .map_err(|e| (USAGE, format!("{}: {e}", path.display())))?;
                    if art.schema_version != SCHEMA_VERSION {
                        return Err((
                            USAGE,
                            format!(
                                "{}: table schema {} is not {SCHEMA_VERSION}",
                                path.display(),
                                art.schema_version
                            ),
                        ));
                    }
                    let table = match mode {
                        Mode::Baseline => None,
                        Mode::Protected => Some(art.compressed),
                        Mode::FieldInsensitive => Some(art.field_insensitive),
                    };
                    let table = table.map(|t| {
                        if strict_init && !t.strict_init {
                            t.without_initial()
                        } else {
                            t
                        }
                    });
                    (table, art.sites)
                }
                None => {
                    let analysis = analyze(&prog.ir);
                    let table = fsdfi_core::runtime::tables_for(&analysis, mode, strict_init);
                    (table, analysis.catalog)
                }
            };
            let result = interpret(&prog.ir, table.as_ref(), &config, &input, &mut NoObserver)
                .map_err(|e| (USAGE, e.to_string()))?;
            for v in &result.output {
                println!("{v}");
            }
            for v in &result.violations {
                eprintln!("fsdfi: violation: {}", diagnose(v, &catalog).message);
            }
            if let Some(f) = &result.fault {
                eprintln!("fsdfi: memory fault in {}: {}", f.function, f.message);
            }
            if let Some(l) = &result.limit {
                eprintln!("fsdfi: resource limit: {l}");
            }
            if let Some(path) = report {
                write(&path, &result.to_json())?;
            }
            Ok(result.outcome.exit_code() as u8)
        }
        Command::Corpus {
            dir,
            modes,
            report,
            format,
            budget: flag,
        } => {
            let mut config = RunConfig::new(Mode::Protected);
            config.budget = budget(flag)?;
            let result = run_corpus(&dir, &modes, &config).map_err(|e| (FAILURE, e.to_string()))?;
            print!("{}", render_report(&result, ReportFormat::TextTable));
            if let Some(path) = report {
                emit_report(&result, format, &path)
                    .map_err(|e| (FAILURE, format!("{}: {e}", path.display())))?;
            }
            for m in &result.mismatches {
                eprintln!(
                    "fsdfi: mismatch: {} [{}]: expected {}, got {}",
                    m.case,
                    m.mode,
                    m.expected.name(),
                    m.actual.name()
                );
            }
            Ok(if result.all_matched() { 0 } else { FAILURE })
        }
    }
}
