use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dlie_cli::corpus_files::{corpus_json, corpus_workspaces};
use dlie_cli::{load_workspace, render_human, render_json, run, CliError, Command, Options};

/// Exact checks for Lie–Rinehart algebras, D-Lie algebras and connections.
///
/// Exit status: 0 when every check passes, 1 when a mathematical check
/// fails (the report carries a witness), 2 on malformed input.
#[derive(Debug, Parser)]
#[command(name = "dlie", version)]
struct Args {
    #[arg(value_enum)]
    command: Option<Command>,
    /// Workspace file (JSON).
    #[arg(long, short)]
    workspace: Option<PathBuf>,
    /// Object names, in the order the command expects.
    #[arg(long = "name", short)]
    names: Vec<String>,
    /// Restrict validation output to one workspace section (e.g. `cocycles`).
    #[arg(long)]
    section: Option<String>,
    /// Emit JSON instead of text.
    #[arg(long)]
    json: bool,
    /// For classify-map on functor-built algebras: also test class equality
    /// in all of H²(L, A), not only on pulled-back cochains.
    #[arg(long)]
    widen_class_test: bool,
    /// Write the corpus workspaces into this directory and exit.
    #[arg(long, value_name = "DIR", conflicts_with = "command")]
    write_corpus: Option<PathBuf>,
}

const SECTIONS: [&str; 7] = ["algebras", "lie_rinehart", "modules", "cocycles", "dlie", "lpsi_connections", "connections"];

fn write_corpus(dir: &PathBuf) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))?;
    for (name, raw) in corpus_workspaces()? {
        let path = dir.join(format!("{name}.json"));
        std::fs::write(&path, corpus_json(&raw))
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
        println!("{}", path.display());
    }
    Ok(())
}

fn execute(args: &Args) -> Result<bool, CliError> {
    if let Some(dir) = &args.write_corpus {
        write_corpus(dir)?;
        return Ok(true);
    }
    let command = args.command.ok_or_else(|| CliError::Usage("a command is required (see --help)".into()))?;
    let path = args.workspace.as_ref().ok_or_else(|| CliError::Usage("--workspace is required".into()))?;
    if let Some(s) = &args.section {
        if !SECTIONS.contains(&s.as_str()) {
            return Err(CliError::Usage(format!("unknown section {s:?}; expected one of {}", SECTIONS.join(", "))));
        }
    }
    let ws = load_workspace(path)?;
    let opts = Options { widen_class_test: args.widen_class_test };
    let invalid: Vec<&str> = ws.reports.iter().filter(|(_, r)| !r.is_valid()).map(|(k, _)| k.as_str()).collect();
    let outcomes = if !invalid.is_empty() && command != Command::Validate {
        eprintln!("workspace objects fail validation: {}", invalid.join(", "));
        run(&ws, Command::Validate, &[], opts)?
    } else {
        run(&ws, command, &args.names, opts)?
    };
    let outcomes: Vec<_> = match &args.section {
        Some(s) => {
            let prefix = format!("{s}.");
            outcomes.into_iter().filter(|o| o.command != "validate" || o.subject.starts_with(&prefix)).collect()
        }
        None => outcomes,
    };
    let text = if args.json { render_json(&outcomes) } else { render_human(&outcomes) };
    print!("{text}");
    Ok(if command == Command::Suite {
        outcomes.iter().all(|o| o.reports_valid())
    } else {
        outcomes.iter().all(|o| o.passed)
    })
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
