use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stsq_cli::corpus::{self, CorpusFile};
use stsq_cli::{exit, parse_hours_range, parse_point, parse_radius, parse_window, render};
use stsq_core::analytics::{active_times, find_conflicts, find_gaps};
use stsq_core::ingest::{export_csv, import_csv};
use stsq_core::{dsl, wire, Dataset, FrequencyBand, GeoPoint, HoursOfOperation};
use stsq_service::{Config, ServiceError};

/// Spatial-temporal-spectral queries over transmitter records.
///
/// Exit codes: 0 success, 1 task failure or server error, 2 usage or parse
/// error, 3 data error.
#[derive(Parser)]
#[command(name = "stsq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a DSL query and print the matching rows and the emitted SQL.
    Query {
        #[arg(long)]
        data: PathBuf,
        /// Print the same JSON body as POST /api/query.
        #[arg(long, conflicts_with = "sql_only")]
        json: bool,
        /// Print only the SQL statement and its parameters.
        #[arg(long)]
        sql_only: bool,
        /// e.g. 'active 01:00..04:00 and not freq 90MHz..100MHz'
        dsl: String,
    },
    /// List unoccupied sub-bands of a window during a time interval.
    Gaps {
        #[arg(long)]
        data: PathBuf,
        /// Frequency window, e.g. 25MHz..35MHz.
        #[arg(long, value_parser = window_arg)]
        window: FrequencyBand,
        /// Time interval, e.g. 03:00..08:00.
        #[arg(long, value_parser = hours_arg)]
        hours: HoursOfOperation,
        #[arg(long)]
        json: bool,
    },
    /// List pairs that overlap in band and hours and sit within a radius.
    Conflicts {
        #[arg(long)]
        data: PathBuf,
        /// Kilometres.
        #[arg(long, value_parser = parse_radius)]
        radius: f64,
        #[arg(long)]
        json: bool,
    },
    /// Show when anything within a radius of a point is on air.
    Times {
        #[arg(long)]
        data: PathBuf,
        /// LAT,LON in decimal degrees.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        at: GeoPoint,
        /// Kilometres.
        #[arg(long, value_parser = parse_radius)]
        radius: f64,
        #[arg(long)]
        json: bool,
    },
    /// Task corpus commands.
    Tasks {
        #[command(subcommand)]
        command: TasksCommand,
    },
    /// Start the HTTP service. Flags override STSQ_PORT, STSQ_DATA and
    /// STSQ_CORS_ORIGIN.
    Serve {
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        cors_origin: Option<String>,
    },
    /// Validate a CSV file and write its canonical form.
    Import {
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write a dataset as canonical CSV.
    Export {
        #[arg(long)]
        data: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum TasksCommand {
    /// Check every task in a corpus against a dataset.
    Run {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
    },
}

fn window_arg(s: &str) -> Result<FrequencyBand, String> {
    parse_window(s).map_err(|e| e.to_string())
}

fn hours_arg(s: &str) -> Result<HoursOfOperation, String> {
    parse_hours_range(s).map_err(|e| e.to_string())
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

fn read(path: &Path, code: u8) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| fail(code, format!("cannot read {}: {e}", path.display())))
}

/// Imports a data file, refusing it if any row is rejected.
fn load(path: &Path) -> Result<Dataset, Failure> {
    let text = read(path, exit::DATA)?;
    let (dataset, report) =
        import_csv(&text).map_err(|e| fail(exit::DATA, format!("{}: {e}", path.display())))?;
    if report.is_clean() {
        return Ok(dataset);
    }
    let mut message = format!("{}: {} row(s) rejected", path.display(), report.errors.len());
    for e in &report.errors {
        message.push_str(&format!("\n  row {} ({}): {}", e.row, e.field, e.message));
    }
    Err(fail(exit::DATA, message))
}

fn write_out(text: &str, output: Option<&Path>) -> Result<(), Failure> {
    match output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| fail(exit::FAILURE, format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| fail(exit::FAILURE, format!("cannot write output: {e}")))
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Query {
            data,
            json,
            sql_only,
            dsl: text,
        } => {
            let query = dsl::parse(&text).map_err(|e| {
                let caret: String = " ".repeat(e.offset);
                fail(exit::USAGE, format!("{e}\n  {text}\n  {caret}^"))
            })?;
            let d = load(&data)?;
            let result = wire::run_query(&query, &d);
            let out = if json {
                wire::to_json(&result)
            } else if sql_only {
                render::sql(&result.sql)
            } else {
                format!("{}\n{}", render::transmitters(&result.matches), render::sql(&result.sql))
            };
            write_out(&out, None)?;
        }
        Command::Gaps {
            data,
            window,
            hours,
            json,
        } => {
            let report = find_gaps(&load(&data)?, window, hours);
            let out = if json {
                wire::gaps_json(&report)
            } else {
                render::gaps(&report, &hours)
            };
            write_out(&out, None)?;
        }
        Command::Conflicts { data, radius, json } => {
            let report = find_conflicts(&load(&data)?, radius).map_err(|e| fail(exit::USAGE, e.to_string()))?;
            let out = if json {
                wire::conflicts_json(&report)
            } else {
                render::conflicts(&report, radius)
            };
            write_out(&out, None)?;
        }
        Command::Times {
            data,
            at,
            radius,
            json,
        } => {
            let coverage = active_times(&load(&data)?, at, radius).map_err(|e| fail(exit::USAGE, e.to_string()))?;
            let out = if json {
                wire::coverage_json(&coverage)
            } else {
                render::coverage(&coverage)
            };
            write_out(&out, None)?;
        }
        Command::Tasks {
            command: TasksCommand::Run { data, corpus: path },
        } => {
            let text = read(&path, exit::USAGE)?;
            let tasks = CorpusFile::from_json(&text)
                .and_then(|file| file.validate())
                .map_err(|e| fail(exit::USAGE, format!("{}: {e}", path.display())))?;
            let d = load(&data)?;
            let outcomes = corpus::run(&tasks, &d);
            write_out(&corpus::report(&outcomes), None)?;
            if outcomes.iter().any(|o| !o.passed) {
                return Ok(exit::FAILURE);
            }
        }
        Command::Serve { port, data, cors_origin } => {
            let mut config = Config::from_env().map_err(|e| fail(exit::USAGE, e.to_string()))?;
            if let Some(port) = port {
                config.port = port;
            }
            if data.is_some() {
                config.data = data;
            }
            if cors_origin.is_some() {
                config.cors_origin = cors_origin;
            }
            let runtime = tokio::runtime::Runtime::new().map_err(|e| fail(exit::FAILURE, e.to_string()))?;
            runtime.block_on(stsq_service::serve(config)).map_err(|e| {
                let code = match e {
                    ServiceError::ReadData { .. } | ServiceError::BadData { .. } => exit::DATA,
                    ServiceError::Config(_) => exit::USAGE,
                    ServiceError::Bind { .. } | ServiceError::Io(_) => exit::FAILURE,
                };
                fail(code, e.to_string())
            })?;
        }
        Command::Import { file, output } => {
            let text = read(&file, exit::DATA)?;
            let (dataset, report) =
                import_csv(&text).map_err(|e| fail(exit::DATA, format!("{}: {e}", file.display())))?;
            write_out(&export_csv(&dataset), output.as_deref())?;
            eprintln!("imported {} row(s), rejected {}", report.imported, report.errors.len());
            for e in &report.errors {
                eprintln!("  row {} ({}): {}", e.row, e.field, e.message);
            }
            if !report.is_clean() {
                return Ok(exit::DATA);
            }
        }
        Command::Export { data, output } => {
            write_out(&export_csv(&load(&data)?), output.as_deref())?;
        }
    }
    Ok(exit::OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("stsq: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
