//! `annotium`: manage collections, run pipelines, query annotations,
//! scaffold components and launch the HTTP service.

mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "annotium", version, about = "Standoff annotation store and pipeline runner")]
pub struct Cli {
    /// Emit machine-readable JSON.
    #[arg(long, global = true)]
    pub json: bool,
    /// Directory holding collections; bare collection names resolve here.
    #[arg(long, global = true, env = "ANNOTIUM_ROOT")]
    pub root: Option<PathBuf>,
    /// Extra component descriptors (*.json) to register.
    #[arg(long, global = true, env = "ANNOTIUM_COMPONENTS")]
    pub components_dir: Option<PathBuf>,
    /// Seconds a wrapper component may run per document.
    #[arg(long, global = true, default_value_t = 60.0)]
    pub wrapper_timeout: f64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Create or list collections.
    #[command(subcommand)]
    Collection(CollectionCmd),
    /// Add, show, list or remove documents.
    #[command(subcommand)]
    Doc(DocCmd),
    /// Run a pipeline over every document of a collection.
    Run(RunArgs),
    /// Check a pipeline against a collection without running it.
    Validate(RunArgs),
    /// Query the annotations of a document.
    Query(QueryArgs),
    /// Write a document in the interchange format.
    Export {
        collection: String,
        document: String,
        /// Write here instead of standard output.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Add an interchange-format document to a collection.
    Import {
        collection: String,
        file: PathBuf,
        /// Store under this id instead of the one in the file.
        #[arg(long)]
        id: Option<String>,
    },
    /// Generate a descriptor and stub for a new component.
    Scaffold(ScaffoldArgs),
    /// Serve the collections under the root over HTTP.
    Serve(ServeArgs),
    /// Run the execution helper on standard streams.
    #[command(hide = true)]
    Broker,
}

#[derive(Subcommand, Debug)]
pub enum CollectionCmd {
    Create {
        path: String,
        #[arg(long)]
        name: Option<String>,
    },
    List,
}

#[derive(Subcommand, Debug)]
pub enum DocCmd {
    Add {
        collection: String,
        file: PathBuf,
        #[arg(long, default_value = "UTF-8")]
        encoding: String,
        /// Defaults to the file name without its extension.
        #[arg(long)]
        id: Option<String>,
    },
    Get {
        collection: String,
        document: String,
    },
    Rm {
        collection: String,
        document: String,
    },
    List {
        collection: String,
    },
}

#[derive(Args, Debug)]
pub struct RunArgs {
    pub collection: String,
    /// Comma-separated component names, in order.
    #[arg(long, value_delimiter = ',', conflicts_with = "system", required_unless_present = "system")]
    pub components: Vec<String>,
    /// A named system (see `GET /api/v1/systems`).
    #[arg(long)]
    pub system: Option<String>,
    /// Parameter binding: component.name=value. Repeatable.
    #[arg(long = "param")]
    pub params: Vec<String>,
    /// Write the run report as JSON to this file.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Stop at the first failing document.
    #[arg(long)]
    pub stop_on_error: bool,
    /// Fail a component whose declared postconditions are not delivered.
    #[arg(long)]
    pub strict_postconditions: bool,
}

#[derive(Args, Debug)]
pub struct QueryArgs {
    pub collection: String,
    pub document: String,
    /// Only annotations of this type.
    #[arg(long = "type")]
    pub annotation_type: Option<String>,
    /// Character range start; needs --end.
    #[arg(long)]
    pub start: Option<usize>,
    /// Character range end (exclusive); `--start p --end p` is a point query.
    #[arg(long)]
    pub end: Option<usize>,
    /// Only annotations carrying this attribute.
    #[arg(long)]
    pub attr: Option<String>,
    /// ...with this string value.
    #[arg(long, requires = "attr")]
    pub value: Option<String>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Kind {
    Native,
    Wrapper,
}

#[derive(Args, Debug)]
pub struct ScaffoldArgs {
    pub name: String,
    #[arg(long, value_enum, default_value = "native")]
    pub kind: Kind,
    /// Precondition TYPE or TYPE:ATTRIBUTE. Repeatable.
    #[arg(long = "pre")]
    pub pre: Vec<String>,
    /// Postcondition TYPE or TYPE:ATTRIBUTE. Repeatable.
    #[arg(long = "post")]
    pub post: Vec<String>,
    /// Parameter NAME:KIND[:required], KIND one of STRING, PATH, INTEGER,
    /// BOOLEAN or ENUM(a|b). Repeatable.
    #[arg(long = "param")]
    pub params: Vec<String>,
    /// Output directory; defaults to the components directory, else `.`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    /// Address to listen on.
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: std::net::IpAddr,
    /// Port; 0 picks a free one.
    #[arg(long, default_value_t = annotium_server::DEFAULT_PORT)]
    pub port: u16,
    /// Serve a built annotator UI from this directory.
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
    /// Largest accepted request body, in bytes.
    #[arg(long, default_value_t = annotium_server::DEFAULT_MAX_UPLOAD)]
    pub max_upload: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    let json = cli.json;
    match commands::dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(&e, json);
            ExitCode::from(e.code() as u8)
        }
    }
}

fn report_error(e: &CliError, json: bool) {
    if json {
        let body = serde_json::json!({ "error": e.message, "detail": e.detail, "exit": e.code() });
        eprintln!("{body}");
    } else {
        eprintln!("annotium: {}", e.message);
        if let Some(serde_json::Value::Array(items)) = &e.detail {
            for item in items {
                eprintln!("  {item}");
            }
        }
    }
}
