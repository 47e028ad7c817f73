mod audit;
mod commands;
mod failure;

use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::{Ctx, Outcome};

#[derive(Debug, Parser)]
#[command(name = "foced", version, about = "Object-centric event data pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Xes,
    Ocel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportTarget {
    Cypher,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QueryName {
    Paths,
    ActivityFrequency,
    EventSequence,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ingest an XES or OCEL 1.0 log and write a store snapshot.
    Parse {
        input: PathBuf,
        /// Input format; inferred from the file extension when omitted.
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Snapshot to write.
        #[arg(long)]
        out: PathBuf,
        /// Skip bad records instead of failing.
        #[arg(long)]
        lenient: bool,
    },
    /// Check a store against a constraint file or the builtin pack.
    Validate {
        store: PathBuf,
        #[arg(long, required_unless_present = "builtin_pack")]
        constraints: Option<PathBuf>,
        /// Use the builtin incident-management pack.
        #[arg(long, conflicts_with = "constraints")]
        builtin_pack: bool,
        /// Bind this signature before checking.
        #[arg(long)]
        signature: Option<PathBuf>,
        #[arg(long, value_enum)]
        report: Option<ReportFormat>,
    },
    /// Bounded assertion check or instance search over a signature.
    Verify {
        signature: PathBuf,
        #[arg(long)]
        scope: usize,
        /// Assertion to check: `MaxObserveProperty` or a rule from --facts.
        #[arg(long = "assert", default_value = foced_core::verifier::MAX_OBSERVE_PROPERTY)]
        assertion: String,
        /// Search for an instance satisfying the facts instead.
        #[arg(long, conflicts_with = "assertion")]
        find: bool,
        /// Extra facts (and assertions) in constraint-file syntax.
        #[arg(long)]
        facts: Option<PathBuf>,
        /// Drop the store-construction facts.
        #[arg(long)]
        no_builder_constraints: bool,
        /// Write the witness instance as a snapshot.
        #[arg(long)]
        witness_out: Option<PathBuf>,
        #[arg(long, value_enum)]
        report: Option<ReportFormat>,
    },
    /// Project a store into a property graph and write import files.
    Export {
        store: PathBuf,
        #[arg(long, value_enum)]
        to: ExportTarget,
        /// Script file for cypher, directory for csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one of the analysis queries and print JSON lines.
    Query {
        store: PathBuf,
        #[arg(long, value_enum)]
        name: QueryName,
    },
    /// Copy a snapshot and the audit log into a new backup directory.
    Backup { store: PathBuf },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Parse { .. } => "parse",
            Command::Validate { .. } => "validate",
            Command::Verify { .. } => "verify",
            Command::Export { .. } => "export",
            Command::Query { .. } => "query",
            Command::Backup { .. } => "backup",
        }
    }
}

fn default_report() -> ReportFormat {
    if std::io::stdout().is_terminal() {
        ReportFormat::Text
    } else {
        ReportFormat::Json
    }
}

fn record(command: &str, inputs_digest: &str, outcome: &str) -> bool {
    match audit::append(&audit::home(), command, inputs_digest, outcome) {
        Ok(_) => true,
        Err(e) => {
            eprintln!("error[AuditLog]: cannot append to the audit log: {e}");
            false
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            let outcome = if code == 0 { "ok".to_string() } else { "error(Usage)".to_string() };
            record("usage", &audit::combined_digest(&[]), &outcome);
            return ExitCode::from(code);
        }
    };

    let name = cli.command.name();
    let mut ctx = Ctx::new(default_report());
    let result = commands::run(&mut ctx, cli.command);
    let digest = audit::combined_digest(&ctx.inputs);
    let (code, outcome) = match &result {
        Ok(Outcome::Clean) => (0, "ok".to_string()),
        Ok(Outcome::Findings(n)) => (1, format!("violations({n})")),
        Err(f) => {
            eprintln!("error[{}]: {}", f.kind, f.message);
            if ctx.report == ReportFormat::Json {
                let body = serde_json::json!({
                    "tool": "foced",
                    "version": env!("CARGO_PKG_VERSION"),
                    "error": { "kind": f.kind, "message": f.message },
                });
                println!("{body}");
            }
            (2, format!("error({})", f.kind))
        }
    };
    if !record(name, &digest, &outcome) {
        return ExitCode::from(2);
    }
    ExitCode::from(code)
}
