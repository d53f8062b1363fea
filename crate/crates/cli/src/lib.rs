//! Command-line front end: `validate`, `query`, `ask` and `explain`.
//!
//! Exit codes: 0 success, 1 usage, input or syntax error, 2 schema
//! violations (`validate`), 3 evaluation error (defeasibility cycles,
//! unresolvable conditions, query binding limit).

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use olgpp::defeasibility::{resolve, DeonticTrigger, Ruling};
use olgpp::ingest::{load_graph, parse_context, ContextFile};
use olgpp::query::{execute_with, parse_query, ExecOptions, QueryError, ResultTable, DEFAULT_MAX_BINDINGS};
use olgpp::{PropertyGraph, TypeSchema, Violation};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VIOLATIONS: i32 = 2;
pub const EXIT_EVAL: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "olgpp", version, about = "Validate, query and resolve legal rule graphs")]
struct Cli {
    /// Schema file replacing the built-in vocabulary.
    #[arg(long, global = true, env = "OLGPP_SCHEMA")]
    schema: Option<PathBuf>,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a rule document against the schema.
    Validate { doc: PathBuf },
    /// Run a pattern query; the query is read from stdin unless a file is given.
    Query {
        doc: PathBuf,
        /// Query file, or `-` for stdin.
        #[arg(long = "query-file", short = 'q')]
        query_file: Option<PathBuf>,
        /// Fail once more than this many bindings are produced.
        #[arg(long = "max-bindings", default_value_t = DEFAULT_MAX_BINDINGS)]
        max_bindings: usize,
    },
    /// Print the winning triggers for a context.
    Ask {
        doc: PathBuf,
        #[arg(long)]
        context: PathBuf,
    },
    /// Print the full resolution trace for a context.
    Explain {
        doc: PathBuf,
        #[arg(long)]
        context: PathBuf,
    },
}

/// A failure with its exit code; the message goes to stderr.
struct Failure(i32, String);

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure(EXIT_USAGE, msg.into())
    }
}

type Outcome = Result<i32, Failure>;

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn load_schema(path: Option<&Path>) -> Result<Arc<TypeSchema>, Failure> {
    match path {
        None => Ok(Arc::new(TypeSchema::builtin())),
        Some(p) => TypeSchema::load(p)
            .map(Arc::new)
            .map_err(|e| Failure::usage(format!("{}: {e}", p.display()))),
    }
}

fn load_doc(path: &Path, schema: Arc<TypeSchema>) -> Result<(PropertyGraph, Vec<Violation>), Failure> {
    let text = read_file(path)?;
    load_graph(&text, schema).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

/// Violations do not stop `query`, `ask` or `explain`; they are reported.
fn warn_violations(doc: &Path, violations: &[Violation], err: &mut dyn Write) {
    if !violations.is_empty() {
        let _ = writeln!(
            err,
            "warning: {} has {} schema violation(s); run `olgpp validate` for details",
            doc.display(),
            violations.len()
        );
    }
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes())
        .map_err(|e| Failure(EXIT_USAGE, format!("write failed: {e}")))
}

fn validate(doc: &Path, schema: Arc<TypeSchema>, format: Format, out: &mut dyn Write) -> Outcome {
    let (_, violations) = load_doc(doc, schema)?;
    let text = match format {
        Format::Text => {
            let mut s = String::new();
            for v in &violations {
                s.push_str(&format!("{v}\n"));
            }
            let n = violations.len();
            s.push_str(&format!("{n} violation{}\n", if n == 1 { "" } else { "s" }));
            s
        }
        Format::Json => {
            let items: Vec<_> = violations
                .iter()
                .map(|v| serde_json::json!({"kind": v.kind.to_string(), "subject": v.subject, "message": v.message}))
                .collect();
            format!("{:#}\n", serde_json::json!({ "violations": items }))
        }
        Format::Csv => return Err(Failure::usage("--format csv applies to `query` only")),
    };
    write_out(out, &text)?;
    Ok(if violations.is_empty() { EXIT_OK } else { EXIT_VIOLATIONS })
}

fn table_csv(t: &ResultTable) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| Failure(EXIT_USAGE, format!("csv: {e}"));
    w.write_record(&t.columns).map_err(fail)?;
    for r in &t.rows {
        w.write_record(r.iter().map(ResultTable::cell)).map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure(EXIT_USAGE, format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn query(
    doc: &Path,
    query_file: Option<&Path>,
    max_bindings: usize,
    schema: Arc<TypeSchema>,
    format: Format,
    io: &mut Io<'_>,
) -> Outcome {
    let (graph, violations) = load_doc(doc, schema)?;
    warn_violations(doc, &violations, io.err);
    let text = match query_file {
        Some(p) if p != Path::new("-") => read_file(p)?,
        _ => {
            let mut s = String::new();
            io.stdin
                .read_to_string(&mut s)
                .map_err(|e| Failure::usage(format!("stdin: {e}")))?;
            s
        }
    };
    let q = parse_query(&text).map_err(|e| Failure::usage(e.to_string()))?;
    let table = execute_with(&q, &graph, ExecOptions { max_bindings }).map_err(|e| match e {
        QueryError::BindingLimit(_) => Failure(EXIT_EVAL, e.to_string()),
        other => Failure::usage(other.to_string()),
    })?;
    let rendered = match format {
        Format::Text => format!("{table}\n"),
        Format::Csv => table_csv(&table)?,
        Format::Json => format!("{:#}\n", table.to_json()),
    };
    write_out(io.out, &rendered)?;
    Ok(EXIT_OK)
}

fn rule(
    doc: &Path,
    context: &Path,
    schema: Arc<TypeSchema>,
    err: &mut dyn Write,
) -> Result<(PropertyGraph, Ruling), Failure> {
    let (graph, violations) = load_doc(doc, schema)?;
    warn_violations(doc, &violations, err);
    let ContextFile { ctx, scope } =
        parse_context(&read_file(context)?).map_err(|e| Failure::usage(format!("{}: {e}", context.display())))?;
    let ruling = resolve(&graph, &ctx, scope.as_deref()).map_err(|e| Failure(EXIT_EVAL, e.to_string()))?;
    Ok((graph, ruling))
}

fn ask(doc: &Path, context: &Path, schema: Arc<TypeSchema>, format: Format, io: &mut Io<'_>) -> Outcome {
    let (graph, ruling) = rule(doc, context, schema, io.err)?;
    let mut winners = Vec::new();
    for w in &ruling.winners {
        let t = DeonticTrigger::extract(&graph, w.as_str()).map_err(|e| Failure(EXIT_EVAL, e.to_string()))?;
        let label = graph.node(w.as_str()).map(|n| n.label.clone()).unwrap_or_default();
        winners.push((w.to_string(), label, t.modality));
    }
    let text = match format {
        Format::Text => {
            let mut s = String::new();
            for (id, label, modality) in &winners {
                let m = modality.map_or("unspecified".to_string(), |m| m.to_string());
                if label.is_empty() {
                    s.push_str(&format!("{id} ({m})\n"));
                } else {
                    s.push_str(&format!("{id}: {label} ({m})\n"));
                }
            }
            for c in &ruling.conflicts {
                s.push_str(&format!("conflict: {} ({}) and {} ({})\n", c.a, c.modalities.0, c.b, c.modalities.1));
            }
            if winners.is_empty() {
                s.push_str("no applicable triggers\n");
            }
            s
        }
        Format::Json => {
            let items: Vec<_> = winners
                .iter()
                .map(|(id, label, m)| serde_json::json!({"id": id, "label": label, "modality": m}))
                .collect();
            let conflicts = serde_json::to_value(&ruling.conflicts).expect("conflicts serialize");
            format!("{:#}\n", serde_json::json!({"winners": items, "conflicts": conflicts}))
        }
        Format::Csv => return Err(Failure::usage("--format csv applies to `query` only")),
    };
    write_out(io.out, &text)?;
    Ok(EXIT_OK)
}

fn explain(doc: &Path, context: &Path, schema: Arc<TypeSchema>, format: Format, io: &mut Io<'_>) -> Outcome {
    let (_, ruling) = rule(doc, context, schema, io.err)?;
    let text = match format {
        Format::Text => ruling.trace.iter().map(|l| format!("{l}\n")).collect(),
        Format::Json => format!("{:#}\n", serde_json::to_value(&ruling).expect("ruling serializes")),
        Format::Csv => return Err(Failure::usage("--format csv applies to `query` only")),
    };
    write_out(io.out, &text)?;
    Ok(EXIT_OK)
}

struct Io<'a> {
    stdin: &'a mut dyn Read,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

/// Runs the command line `args` (including the program name) and returns
/// the exit code.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(rendered.as_bytes())
            } else {
                err.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    let mut io = Io { stdin, out, err };
    let result = load_schema(cli.schema.as_deref()).and_then(|schema| match &cli.command {
        Command::Validate { doc } => validate(doc, schema, cli.format, io.out),
        Command::Query {
            doc,
            query_file,
            max_bindings,
        } => query(doc, query_file.as_deref(), *max_bindings, schema, cli.format, &mut io),
        Command::Ask { doc, context } => ask(doc, context, schema, cli.format, &mut io),
        Command::Explain { doc, context } => explain(doc, context, schema, cli.format, &mut io),
    });
    match result {
        Ok(code) => code,
        Err(Failure(code, msg)) => {
            let _ = writeln!(io.err, "error: {msg}");
            code
        }
    }
}
