//! memcross: compile fuzzy membership functions into memristor targets,
//! program a simulated crossbar, and read grades back out.

use clap::{Parser, Subcommand};
use memcross_cli::commands;

#[derive(Parser, Debug)]
#[command(
    name = "memcross",
    version,
    about = "Memristor-crossbar fuzzy membership storage, as a simulation",
    after_help = "Exit codes: 0 success, 2 parse error, 3 validation error, \
                  4 programming non-convergence, 5 out-of-domain query, 6 I/O error."
)]
struct Cli {
    /// Reserved; the pipeline is deterministic and ignores it
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compile membership specs into a target-memristance CSV
    Compile(commands::CompileArgs),
    /// Program an array to a compiled spec; writes snapshot and report
    Program(commands::ProgramArgs),
    /// Read grades for one input (singleton --x or fuzzy --input)
    Query(commands::QueryArgs),
    /// Read every set's grade at every grid point
    Sweep(commands::SweepArgs),
    /// Reprogram one stored membership value in place
    Evolve(commands::EvolveArgs),
    /// Dump raw cell states as CSV
    Export(commands::ExportArgs),
    /// Validate a snapshot file and print its summary
    ImportCheck(commands::ImportCheckArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Compile(args) => commands::cmd_compile(args),
        Command::Program(args) => commands::cmd_program(args),
        Command::Query(args) => commands::cmd_query(args),
        Command::Sweep(args) => commands::cmd_sweep(args),
        Command::Evolve(args) => commands::cmd_evolve(args),
        Command::Export(args) => commands::cmd_export(args),
        Command::ImportCheck(args) => commands::cmd_import_check(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
