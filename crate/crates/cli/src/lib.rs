//! Workspace parsing, subcommand dispatch and report rendering for `dlie`.

pub mod commands;
pub mod corpus_files;
pub mod outcome;
pub mod poly;
pub mod rational;
pub mod workspace;

pub use commands::{run, CliError, Command, Options};
pub use outcome::{render_human, render_json, Outcome};
pub use workspace::{load_workspace, parse_workspace, Workspace, WorkspaceError};
