use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde_json::{json, Value};

use annotium::builtin::{builtin_registry, STANDARD_SYSTEM};
use annotium::component::{
    scaffold_component, Condition, ParamKind, ParameterSpec, Registry, ScaffoldKind,
    ScaffoldRequest, System,
};
use annotium::engine::{Engine, RunOptions, RunReport, Status};
use annotium::storage::{
    annotations_to_json, check_document_id, export_document, import_document, import_interchange,
    load_collection, save_collection, save_document, CollectionManifest, EncodingId, MANIFEST_FILE,
};
use annotium::wrapper::{serve_broker, Broker, BrokerConfig};
use annotium::{Collection, Document, Query};

use crate::error::{CliError, CliResult};
use crate::{Cli, CollectionCmd, Command, DocCmd, Kind, QueryArgs, RunArgs, ScaffoldArgs, ServeArgs};

struct Ctx {
    json: bool,
    root: Option<PathBuf>,
    components_dir: Option<PathBuf>,
    wrapper_timeout: Duration,
}

pub fn dispatch(cli: Cli) -> CliResult {
    if !(cli.wrapper_timeout.is_finite() && cli.wrapper_timeout > 0.0) {
        return Err(CliError::user("--wrapper-timeout must be positive"));
    }
    let ctx = Ctx {
        json: cli.json,
        root: cli.root,
        components_dir: cli.components_dir,
        wrapper_timeout: Duration::from_secs_f64(cli.wrapper_timeout),
    };
    match cli.command {
        Command::Collection(CollectionCmd::Create { path, name }) => ctx.collection_create(&path, name),
        Command::Collection(CollectionCmd::List) => ctx.collection_list(),
        Command::Doc(DocCmd::Add { collection, file, encoding, id }) => {
            ctx.doc_add(&collection, &file, &encoding, id)
        }
        Command::Doc(DocCmd::Get { collection, document }) => ctx.doc_get(&collection, &document),
        Command::Doc(DocCmd::Rm { collection, document }) => ctx.doc_rm(&collection, &document),
        Command::Doc(DocCmd::List { collection }) => ctx.doc_list(&collection),
        Command::Run(args) => ctx.run(args, false),
        Command::Validate(args) => ctx.run(args, true),
        Command::Query(args) => ctx.query(args),
        Command::Export { collection, document, output } => ctx.export(&collection, &document, output),
        Command::Import { collection, file, id } => ctx.import(&collection, &file, id),
        Command::Scaffold(args) => ctx.scaffold(args),
        Command::Serve(args) => ctx.serve(args),
        Command::Broker => {
            let stdin = std::io::stdin().lock();
            let stdout = std::io::stdout().lock();
            serve_broker(stdin, stdout).map_err(|e| CliError::io(e.to_string()))
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::io(format!("{}: {e}", path.display()))
}

fn print_json(v: &Value) {
    println!("{v}");
}

fn write_stdout(bytes: &[u8]) -> CliResult {
    let mut out = std::io::stdout().lock();
    out.write_all(bytes)
        .and_then(|_| out.write_all(b"\n"))
        .and_then(|_| out.flush())
        .map_err(|e| CliError::io(format!("stdout: {e}")))
}

impl Ctx {
    /// A collection argument is a path if it looks like one or exists;
    /// otherwise it names a collection under the root.
    fn resolve(&self, arg: &str) -> PathBuf {
        let p = PathBuf::from(arg);
        let looks_like_path = p.is_absolute() || arg.starts_with('.') || arg.contains('/');
        match &self.root {
            Some(root) if !looks_like_path && !p.exists() => root.join(p),
            _ => p,
        }
    }

    fn open(&self, arg: &str) -> CliResult<(PathBuf, Collection)> {
        let dir = self.resolve(arg);
        if !dir.join(MANIFEST_FILE).is_file() {
            return Err(CliError::user(format!("{} is not a collection", dir.display())));
        }
        let col = load_collection(&dir)?;
        Ok((dir, col))
    }

    fn registry(&self) -> CliResult<Registry> {
        let mut r = builtin_registry();
        if let Some(dir) = &self.components_dir {
            r.load_dir(dir)?;
        }
        Ok(r)
    }

    fn engine(&self) -> CliResult<Engine> {
        let exe = std::env::current_exe().map_err(|e| CliError::io(e.to_string()))?;
        // The helper is this same binary; it only starts on first use.
        let broker = Broker::new(BrokerConfig::new(exe).with_args(["broker"]));
        Ok(Engine::new(Arc::new(self.registry()?))
            .with_broker(Arc::new(broker))
            .with_wrapper_timeout(self.wrapper_timeout))
    }

    fn collection_create(&self, path: &str, name: Option<String>) -> CliResult {
        let dir = self.resolve(path);
        if dir.join(MANIFEST_FILE).exists() {
            return Err(CliError::user(format!("{} already holds a collection", dir.display())));
        }
        let name = match name {
            Some(n) => n,
            None => dir
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .ok_or_else(|| CliError::user("cannot derive a collection name; pass --name"))?,
        };
        save_collection(&Collection::new(&name), &dir)?;
        if self.json {
            print_json(&json!({ "name": name, "path": dir }));
        } else {
            println!("created collection {name} at {}", dir.display());
        }
        Ok(())
    }

    fn collection_list(&self) -> CliResult {
        let root = self.root.clone().unwrap_or_else(|| PathBuf::from("."));
        let mut found = Vec::new();
        let entries = std::fs::read_dir(&root).map_err(io_err(&root))?;
        let mut dirs: Vec<_> = entries.filter_map(Result::ok).map(|e| e.path()).collect();
        dirs.sort();
        for dir in dirs {
            if dir.join(MANIFEST_FILE).is_file() {
                let m = CollectionManifest::read(&dir)?;
                found.push(json!({ "name": m.name, "path": dir, "documents": m.documents.len() }));
            }
        }
        if self.json {
            print_json(&Value::Array(found));
        } else {
            for c in found {
                println!("{}\t{} documents\t{}", c["name"].as_str().unwrap_or(""), c["documents"], c["path"].as_str().unwrap_or(""));
            }
        }
        Ok(())
    }

    fn store_new(&self, dir: &Path, col: &mut Collection, doc: Document) -> CliResult<String> {
        check_document_id(doc.id())?;
        let id = doc.id().to_owned();
        if col.document(&id).is_some() {
            return Err(CliError::user(format!("document {id} already exists")));
        }
        let violations = doc.validate();
        if !violations.is_empty() {
            return Err(annotium::storage::StorageError::ValidationFailed(violations).into());
        }
        save_document(dir, &doc)?;
        col.add_document(doc)?;
        CollectionManifest::for_collection(col).write(dir)?;
        Ok(id)
    }

    fn doc_add(&self, collection: &str, file: &Path, encoding: &str, id: Option<String>) -> CliResult {
        let (dir, mut col) = self.open(collection)?;
        let encoding: EncodingId = encoding
            .parse()
            .map_err(|e: annotium::storage::UnknownEncoding| CliError::user(e.to_string()))?;
        let id = match id {
            Some(id) => id,
            None => file
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .ok_or_else(|| CliError::user("cannot derive a document id; pass --id"))?,
        };
        check_document_id(&id)?;
        let bytes = std::fs::read(file).map_err(io_err(file))?;
        let doc = import_document(&bytes, encoding, &id)?;
        let chars = doc.len_chars();
        let id = self.store_new(&dir, &mut col, doc)?;
        if self.json {
            print_json(&json!({ "id": id, "chars": chars }));
        } else {
            println!("added {id} ({chars} characters)");
        }
        Ok(())
    }

    fn document<'c>(&self, col: &'c Collection, id: &str) -> CliResult<&'c Document> {
        col.document(id)
            .ok_or_else(|| CliError::user(format!("no document {id} in collection {}", col.name())))
    }

    fn doc_get(&self, collection: &str, id: &str) -> CliResult {
        let (_, col) = self.open(collection)?;
        let doc = self.document(&col, id)?;
        if self.json {
            return write_stdout(&export_document(doc)?);
        }
        println!("id: {}", doc.id());
        println!("characters: {}", doc.len_chars());
        for t in doc.annotation_types() {
            println!("{t}: {}", doc.select_by_type(t).len());
        }
        println!();
        println!("{}", doc.text());
        Ok(())
    }

    fn doc_rm(&self, collection: &str, id: &str) -> CliResult {
        let (dir, mut col) = self.open(collection)?;
        self.document(&col, id)?;
        col.remove_document(id);
        CollectionManifest::for_collection(&col).write(&dir)?;
        let path = annotium::storage::document_path(&dir, id);
        std::fs::remove_file(&path).map_err(io_err(&path))?;
        if self.json {
            print_json(&json!({ "removed": id }));
        } else {
            println!("removed {id}");
        }
        Ok(())
    }

    fn doc_list(&self, collection: &str) -> CliResult {
        let (_, col) = self.open(collection)?;
        if self.json {
            let list: Vec<_> = col
                .documents()
                .map(|d| json!({ "id": d.id(), "chars": d.len_chars(), "annotations": d.annotation_count() }))
                .collect();
            print_json(&Value::Array(list));
        } else {
            for d in col.documents() {
                println!("{}\t{} chars\t{} annotations", d.id(), d.len_chars(), d.annotation_count());
            }
        }
        Ok(())
    }

    fn system(&self, args: &RunArgs) -> CliResult<System> {
        let mut system = match &args.system {
            Some(name) if name == STANDARD_SYSTEM => annotium::builtin::standard_system(None),
            Some(name) => return Err(CliError::user(format!("unknown system {name:?}"))),
            None => System::new("adhoc", args.components.iter().map(|s| s.trim().to_owned())),
        };
        for p in &args.params {
            let (key, value) = p
                .split_once('=')
                .ok_or_else(|| CliError::user(format!("--param {p:?}: expected component.name=value")))?;
            let (component, name) = key
                .split_once('.')
                .filter(|(c, n)| !c.is_empty() && !n.is_empty())
                .ok_or_else(|| CliError::user(format!("--param {p:?}: expected component.name=value")))?;
            system = system.with_param(component, name, value);
        }
        Ok(system)
    }

    fn run(&self, args: RunArgs, dry_run: bool) -> CliResult {
        let (dir, mut col) = self.open(&args.collection)?;
        let system = self.system(&args)?;
        let options = RunOptions {
            continue_on_error: !args.stop_on_error,
            strict_postconditions: args.strict_postconditions,
            dry_run,
        };
        let engine = self.engine()?;
        if !self.json && !dry_run {
            eprintln!("running {} over {} documents", system.components.join(" → "), col.len());
        }
        let report = engine.run_system(&system, &mut col, &options)?;
        if let Some(path) = &args.report {
            std::fs::write(path, report.to_json_pretty() + "\n").map_err(io_err(path))?;
        }
        if !dry_run {
            save_collection(&col, &dir)?;
        }
        self.print_report(&report, dry_run);
        let bad = report.totals.failed + report.totals.skipped;
        if bad > 0 || report.aborted {
            return Err(CliError::processing(format!(
                "{} failed, {} skipped",
                report.totals.failed, report.totals.skipped
            )));
        }
        Ok(())
    }

    fn print_report(&self, report: &RunReport, dry_run: bool) {
        if self.json {
            print_json(&serde_json::to_value(report).unwrap_or_default());
            return;
        }
        if dry_run {
            println!("system is valid for every document");
            return;
        }
        for d in &report.documents {
            let status = match d.status {
                Status::Ok => "OK",
                Status::Skipped => "SKIPPED",
                Status::Failed => "FAILED",
            };
            let added: Vec<_> = d.added.iter().map(|(t, n)| format!("{t}={n}")).collect();
            println!("{}\t{status}\t{}", d.id, added.join(" "));
            if let Some(e) = &d.error {
                println!("\t{e}");
            }
            for v in &d.violations {
                println!("\tmissing {v}");
            }
            for w in &d.warnings {
                println!("\twarning: {w}");
            }
        }
        println!(
            "ok {}, skipped {}, failed {}",
            report.totals.ok, report.totals.skipped, report.totals.failed
        );
    }

    fn query(&self, args: QueryArgs) -> CliResult {
        let (_, col) = self.open(&args.collection)?;
        let doc = self.document(&col, &args.document)?;
        let q = Query::from_parts(args.annotation_type, args.start, args.end, args.attr, args.value)?;
        let found = q.run(doc)?;
        if self.json {
            return write_stdout(&annotations_to_json(&found));
        }
        for a in found {
            let spans: Vec<_> = a.spans().iter().map(ToString::to_string).collect();
            let attrs: Vec<_> = a.attributes().iter().map(|(n, v)| format!("{n}={v}")).collect();
            let text: Vec<_> = doc.annotated_text(a.id())?.into_iter().collect();
            println!(
                "{}\t{}\t{}\t{:?}\t{}",
                a.id(),
                a.annotation_type(),
                spans.join(" "),
                text.join("…"),
                attrs.join(" ")
            );
        }
        Ok(())
    }

    fn export(&self, collection: &str, id: &str, output: Option<PathBuf>) -> CliResult {
        let (_, col) = self.open(collection)?;
        let bytes = export_document(self.document(&col, id)?)?;
        match output {
            Some(path) => std::fs::write(&path, &bytes).map_err(io_err(&path)),
            None => write_stdout(&bytes),
        }
    }

    fn import(&self, collection: &str, file: &Path, id: Option<String>) -> CliResult {
        let (dir, mut col) = self.open(collection)?;
        let bytes = std::fs::read(file).map_err(io_err(file))?;
        let mut doc = import_interchange(&bytes)?;
        if let Some(id) = id {
            doc.set_id(id);
        }
        let n = doc.annotation_count();
        let id = self.store_new(&dir, &mut col, doc)?;
        if self.json {
            print_json(&json!({ "id": id, "annotations": n }));
        } else {
            println!("imported {id} ({n} annotations)");
        }
        Ok(())
    }

    fn scaffold(&self, args: ScaffoldArgs) -> CliResult {
        let conditions = |items: &[String]| -> CliResult<BTreeSet<Condition>> {
            items
                .iter()
                .map(|s| s.parse::<Condition>().map_err(|e| CliError::user(e.to_string())))
                .collect()
        };
        let req = ScaffoldRequest {
            name: args.name,
            kind: match args.kind {
                Kind::Native => ScaffoldKind::Native,
                Kind::Wrapper => ScaffoldKind::Wrapper,
            },
            preconditions: conditions(&args.pre)?,
            postconditions: conditions(&args.post)?,
            parameters: args.params.iter().map(|p| parse_param_spec(p)).collect::<CliResult<_>>()?,
        };
        let out = args
            .out
            .or_else(|| self.components_dir.clone())
            .unwrap_or_else(|| PathBuf::from("."));
        let registry = self.registry()?;
        let s = scaffold_component(&req, &out, Some(&registry))?;
        if self.json {
            print_json(&json!({
                "descriptor": s.descriptor_file,
                "stub": s.stub_file,
                "component": s.descriptor.to_json(),
            }));
        } else {
            println!("wrote {}", s.descriptor_file.display());
            println!("wrote {}", s.stub_file.display());
        }
        Ok(())
    }

    fn serve(&self, args: ServeArgs) -> CliResult {
        let _ = tracing_subscriber::fmt().with_writer(std::io::stderr).try_init();
        let root = self.root.clone().unwrap_or_else(|| PathBuf::from("."));
        let config = annotium_server::ServerConfig {
            bind: args.bind,
            port: args.port,
            root,
            max_upload: args.max_upload,
            static_dir: args.static_dir,
        };
        let engine = self.engine()?;
        let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::io(e.to_string()))?;
        rt.block_on(async {
            let handle = annotium_server::serve(config, engine).await.map_err(|e| match e {
                annotium_server::ServeError::Bind { .. } | annotium_server::ServeError::Io(_) => {
                    CliError::io(e.to_string())
                }
                _ => CliError::user(e.to_string()),
            })?;
            if self.json {
                print_json(&json!({ "listening": handle.addr.to_string() }));
            } else {
                println!("listening on http://{}", handle.addr);
            }
            let _ = std::io::stdout().flush();
            let _ = tokio::signal::ctrl_c().await;
            handle.shutdown().await.map_err(|e| CliError::io(e.to_string()))
        })
    }
}

/// `name:KIND[:required]`, KIND one of STRING, PATH, INTEGER, BOOLEAN or
/// `ENUM(a|b|c)`.
fn parse_param_spec(s: &str) -> CliResult<ParameterSpec> {
    let bad = || CliError::user(format!("--param {s:?}: expected NAME:KIND[:required]"));
    let (name, rest) = s.split_once(':').ok_or_else(bad)?;
    let (kind, required) = match rest.rsplit_once(':') {
        Some((k, "required")) => (k, true),
        Some(_) => return Err(bad()),
        None => (rest, false),
    };
    let kind = match kind.to_ascii_uppercase().as_str() {
        "STRING" => ParamKind::String,
        "PATH" => ParamKind::Path,
        "INTEGER" => ParamKind::Integer,
        "BOOLEAN" => ParamKind::Boolean,
        k if k.starts_with("ENUM(") && k.ends_with(')') => {
            let inner = &kind[5..kind.len() - 1];
            ParamKind::Enum(inner.split('|').map(str::to_owned).collect())
        }
        _ => return Err(bad()),
    };
    Ok(if required {
        ParameterSpec::required(name, kind)
    } else {
        ParameterSpec::optional(name, kind, None)
    })
}
