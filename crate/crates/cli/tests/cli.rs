use std::path::{Path, PathBuf};
use std::process::Command;

use olgpp_cli::{run, EXIT_EVAL, EXIT_OK, EXIT_USAGE, EXIT_VIOLATIONS};

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

/// A scratch file unique to this test process.
fn scratch(name: &str, contents: &str) -> String {
    let dir: PathBuf = std::env::temp_dir().join(format!("olgpp-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p.to_string_lossy().into_owned()
}

struct Output {
    code: i32,
    out: String,
    err: String,
}

fn cli_with_stdin(args: &[&str], stdin: &str) -> Output {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("olgpp").chain(args.iter().copied());
    let code = run(argv, &mut stdin.as_bytes(), &mut out, &mut err);
    Output {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn cli(args: &[&str]) -> Output {
    cli_with_stdin(args, "")
}

const CYCLE_DOC: &str = r#"document {version: "1"}
node p party
node a obligation_trigger {label: "A"}
node b obligation_trigger {label: "B"}
edge ma performed_by a -> p {type: "obligation"}
edge mb performed_by b -> p {type: "prohibition"}
edge xab EXCEPTS a -> b
edge xba EXCEPTS b -> a
"#;

#[test]
fn validate_clean_document_exits_zero() {
    let o = cli(&["validate", &fixture("heights.olg")]);
    assert_eq!(o.code, EXIT_OK, "{}", o.err);
    assert_eq!(o.out, "0 violations\n");
}

#[test]
fn validate_reports_violations_with_exit_two() {
    let o = cli(&["validate", &fixture("q1.olg")]);
    assert_eq!(o.code, EXIT_VIOLATIONS);
    let lines: Vec<&str> = o.out.lines().collect();
    assert_eq!(lines.len(), 13);
    assert_eq!(lines[12], "12 violations");
    assert!(lines[0].starts_with("BadEndpoint pm1:"), "{}", lines[0]);
}

#[test]
fn validate_json_lists_each_violation() {
    let o = cli(&["validate", &fixture("q1.olg"), "--format", "json"]);
    assert_eq!(o.code, EXIT_VIOLATIONS);
    let v: serde_json::Value = serde_json::from_str(&o.out).unwrap();
    let items = v["violations"].as_array().unwrap();
    assert_eq!(items.len(), 12);
    assert_eq!(items[11]["subject"], "ex1");
}

#[test]
fn missing_document_is_a_usage_error() {
    let o = cli(&["validate", "/nonexistent/doc.olg"]);
    assert_eq!(o.code, EXIT_USAGE);
    assert!(o.err.starts_with("error: /nonexistent/doc.olg"), "{}", o.err);
}

#[test]
fn malformed_document_is_a_syntax_error() {
    let doc = scratch("broken.olg", "document {version: \"1\"}\nnode a obligation_trigger {label: \n");
    let o = cli(&["validate", &doc]);
    assert_eq!(o.code, EXIT_USAGE);
    assert!(o.err.contains("broken.olg"), "{}", o.err);
}

#[test]
fn unknown_subcommand_and_missing_args_are_usage_errors() {
    assert_eq!(cli(&["bogus"]).code, EXIT_USAGE);
    assert_eq!(cli(&[]).code, EXIT_USAGE);
    assert_eq!(cli(&["ask", &fixture("heights.olg")]).code, EXIT_USAGE);
    assert_eq!(cli(&["validate", "x", "--format", "yaml"]).code, EXIT_USAGE);
}

#[test]
fn help_exits_zero_on_stdout() {
    let o = cli(&["--help"]);
    assert_eq!(o.code, EXIT_OK);
    assert!(o.out.contains("validate"));
    assert!(o.err.is_empty());
}

#[test]
fn csv_format_is_rejected_outside_query() {
    let o = cli(&["ask", &fixture("heights.olg"), "--context", &fixture("heights-theatre.ctx"), "--format", "csv"]);
    assert_eq!(o.code, EXIT_USAGE);
    assert!(o.out.is_empty());
}

#[test]
fn query_q1_as_csv() {
    let o = cli(&["query", &fixture("q1.olg"), "--query-file", &fixture("q1.cq"), "--format", "csv"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.err);
    assert_eq!(
        o.out,
        "Location,Latitude,Longitude,TimeFrame,ParkingRules\n\
         Harbor Drive lot,32.7203,-117.1745,lunch hours,Curbside parking up to 2 hours\n"
    );
    // The document has endpoint violations; they are reported, not fatal.
    assert!(o.err.contains("12 schema violation(s)"), "{}", o.err);
}

#[test]
fn query_q2_as_text_table() {
    let o = cli(&["query", &fixture("q2.olg"), "-q", &fixture("q2.cq")]);
    assert_eq!(o.code, EXIT_OK, "{}", o.err);
    assert!(o.err.is_empty());
    let lines: Vec<&str> = o.out.lines().collect();
    assert!(lines[0].starts_with("Jurisdiction"), "{}", lines[0]);
    assert!(lines[1].chars().all(|c| c == '-' || c == '+'));
    assert!(lines[2].starts_with("San Diego"));
    assert!(lines[3].starts_with("Tijuana"));
    assert_eq!(lines[4], "(2 rows)");
}

#[test]
fn query_reads_stdin() {
    let q = "MATCH (t:obligation_trigger) RETURN t.id AS id ORDER BY id";
    let a = cli_with_stdin(&["query", &fixture("cbd.olg"), "--format", "json"], q);
    let b = cli_with_stdin(&["query", &fixture("cbd.olg"), "-q", "-", "--format", "json"], q);
    assert_eq!(a.code, EXIT_OK, "{}", a.err);
    assert_eq!(a.out, b.out);
    let v: serde_json::Value = serde_json::from_str(&a.out).unwrap();
    assert_eq!(v["columns"], serde_json::json!(["id"]));
    assert_eq!(
        v["rows"],
        serde_json::json!([{"id": "lighting"}, {"id": "marquee"}, {"id": "setback"}])
    );
}

#[test]
fn query_syntax_error_exits_one_with_position() {
    let o = cli_with_stdin(&["query", &fixture("cbd.olg")], "MATCH (a RETURN a");
    assert_eq!(o.code, EXIT_USAGE);
    assert!(o.err.contains("syntax error at 1:10"), "{}", o.err);
    assert!(o.out.is_empty());
}

#[test]
fn query_unbound_variable_exits_one() {
    let o = cli_with_stdin(&["query", &fixture("cbd.olg")], "MATCH (a) RETURN b.x");
    assert_eq!(o.code, EXIT_USAGE);
    assert!(o.err.contains("unbound variable `b`"), "{}", o.err);
}

#[test]
fn query_binding_limit_exits_three() {
    let o = cli(&["query", &fixture("q2.olg"), "-q", &fixture("q2.cq"), "--max-bindings", "1"]);
    assert_eq!(o.code, EXIT_EVAL);
    assert!(o.err.contains("more than 1 bindings"), "{}", o.err);
    assert!(o.out.is_empty());
}

#[test]
fn ask_heights_in_each_district() {
    for (ctx, want) in [
        ("heights-theatre.ctx", "o3: At most 8 stories (obligation)\n"),
        ("heights-business.ctx", "o2: At most 10 stories (obligation)\n"),
        ("heights-elsewhere.ctx", "o1: At most 15 stories (obligation)\n"),
    ] {
        let o = cli(&["ask", &fixture("heights.olg"), "--context", &fixture(ctx)]);
        assert_eq!(o.code, EXIT_OK, "{ctx}: {}", o.err);
        assert_eq!(o.out, want, "{ctx}");
    }
}

#[test]
fn ask_is_byte_identical_across_runs() {
    let args = ["ask", &fixture("heights.olg"), "--context", &fixture("heights-theatre.ctx")];
    let first = cli(&args).out;
    for _ in 0..5 {
        assert_eq!(cli(&args).out, first);
    }
    let json_args = [&args[..], &["--format", "json"]].concat();
    let j = cli(&json_args).out;
    assert_eq!(cli(&json_args).out, j);
}

#[test]
fn ask_json_reports_winners() {
    let o = cli(&[
        "ask",
        &fixture("overrides.olg"),
        "--context",
        &fixture("overrides-permit.ctx"),
        "--format",
        "json",
    ]);
    assert_eq!(o.code, EXIT_OK, "{}", o.err);
    let v: serde_json::Value = serde_json::from_str(&o.out).unwrap();
    assert_eq!(
        v["winners"],
        serde_json::json!([{"id": "ob2", "label": "Vending allowed with a permit", "modality": "permission"}])
    );
}

#[test]
fn explain_prints_the_trace_with_edge_ids() {
    let o = cli(&["explain", &fixture("heights.olg"), "--context", &fixture("heights-theatre.ctx")]);
    assert_eq!(o.code, EXIT_OK, "{}", o.err);
    assert_eq!(
        o.out,
        "EVAL o1 applicable\n\
         EVAL o2 applicable\n\
         EVAL o3 applicable\n\
         DEFEAT o1 excepted by o2 via x21\n\
         DEFEAT o1 excepted by o3 via x32 -> x21\n\
         DEFEAT o2 excepted by o3 via x32\n\
         WINNER o3 (At most 8 stories) [obligation]\n"
    );
}

#[test]
fn explain_json_serializes_the_ruling() {
    let o = cli(&[
        "explain",
        &fixture("heights.olg"),
        "--context",
        &fixture("heights-elsewhere.ctx"),
        "--format",
        "json",
    ]);
    assert_eq!(o.code, EXIT_OK, "{}", o.err);
    let v: serde_json::Value = serde_json::from_str(&o.out).unwrap();
    assert_eq!(v["winners"], serde_json::json!(["o1"]));
    assert!(v["trace"].as_array().unwrap().len() >= 3);
}

#[test]
fn exception_cycle_exits_three() {
    let doc = scratch("cycle.olg", CYCLE_DOC);
    let ctx = scratch("facts.ctx", "fact unrelated true\n");
    for cmd in ["ask", "explain"] {
        let o = cli(&[cmd, &doc, "--context", &ctx]);
        assert_eq!(o.code, EXIT_EVAL, "{cmd}: {}", o.err);
        assert!(o.err.contains("cycle"), "{}", o.err);
        assert!(o.out.is_empty());
    }
}

#[test]
fn missing_context_is_a_usage_error() {
    let o = cli(&["ask", &fixture("heights.olg"), "--context", "/nonexistent.ctx"]);
    assert_eq!(o.code, EXIT_USAGE);
}

#[test]
fn malformed_context_is_a_usage_error() {
    let ctx = scratch("bad.ctx", "position point(1, \n");
    let o = cli(&["ask", &fixture("heights.olg"), "--context", &ctx]);
    assert_eq!(o.code, EXIT_USAGE, "{}", o.err);
}

#[test]
fn schema_flag_replaces_the_builtin_vocabulary() {
    let tiny = scratch("tiny.schema", "schema {name: \"tiny\", version: \"1\"}\nnode_type party {}\n");
    let o = cli(&["--schema", &tiny, "validate", &fixture("heights.olg")]);
    assert_eq!(o.code, EXIT_VIOLATIONS);
    assert!(o.out.contains("UnknownType"), "{}", o.out);

    let builtin = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/schema/olgpp.schema");
    let o = cli(&["validate", &fixture("heights.olg"), "--schema", builtin.to_str().unwrap()]);
    assert_eq!(o.code, EXIT_OK, "{}", o.out);
}

#[test]
fn malformed_schema_is_a_usage_error() {
    let bad = scratch("bad.schema", "node_type party {}\n");
    let o = cli(&["--schema", &bad, "validate", &fixture("heights.olg")]);
    assert_eq!(o.code, EXIT_USAGE);
    assert!(o.err.contains("bad.schema"), "{}", o.err);
}

fn binary() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_olgpp"));
    c.env_remove("OLGPP_SCHEMA");
    c
}

#[test]
fn binary_exit_codes_match_the_library() {
    let ok = binary().args(["validate", &fixture("heights.olg")]).output().unwrap();
    assert_eq!(ok.status.code(), Some(EXIT_OK));
    let bad = binary().args(["validate", &fixture("q1.olg")]).output().unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_VIOLATIONS));
    let usage = binary().arg("bogus").output().unwrap();
    assert_eq!(usage.status.code(), Some(EXIT_USAGE));
    let doc = scratch("cycle-bin.olg", CYCLE_DOC);
    let ctx = scratch("facts-bin.ctx", "fact unrelated true\n");
    let cycle = binary().args(["ask", &doc, "--context", &ctx]).output().unwrap();
    assert_eq!(cycle.status.code(), Some(EXIT_EVAL));
}

#[test]
fn binary_ask_is_byte_identical_across_processes() {
    let run = || {
        binary()
            .args(["ask", &fixture("heights.olg"), "--context", &fixture("heights-theatre.ctx")])
            .output()
            .unwrap()
            .stdout
    };
    let first = run();
    assert_eq!(first, b"o3: At most 8 stories (obligation)\n");
    assert_eq!(run(), first);
}

#[test]
fn schema_env_var_is_a_fallback_for_the_flag() {
    let tiny = scratch("env.schema", "schema {name: \"tiny\", version: \"1\"}\nnode_type party {}\n");
    let o = binary()
        .env("OLGPP_SCHEMA", &tiny)
        .args(["validate", &fixture("heights.olg")])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(EXIT_VIOLATIONS));

    // An explicit flag wins over the variable.
    let builtin = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/schema/olgpp.schema");
    let o = binary()
        .env("OLGPP_SCHEMA", &tiny)
        .args(["--schema", builtin.to_str().unwrap(), "validate", &fixture("heights.olg")])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(EXIT_OK));
}
