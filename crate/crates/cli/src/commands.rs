use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::Utc;
use serde::Serialize;
use serde_json::{json, Map, Value as Json};

use foced_core::constraints::{builtin_bpic13_pack, check_store, parse_constraints, Constraint, ViolationReport};
use foced_core::graph::{
    emit_csv, emit_cypher, project, query_activity_frequency, query_case_event_paths, query_event_sequence,
};
use foced_core::ingest::{parse_ocel, parse_xes, IngestMode};
use foced_core::snapshot::{read_snapshot, snapshot_string, write_snapshot};
use foced_core::verifier::{
    builder_facts, check_assertion, find_instance, max_observe_property, Scope, Verdict, VerdictKind,
    MAX_OBSERVE_PROPERTY,
};
use foced_core::{OcedStore, Signature};

use crate::audit::{self, sha256_hex};
use crate::failure::Failure;
use crate::{Command, ExportTarget, Format, QueryName, ReportFormat};

pub enum Outcome {
    Clean,
    Findings(usize),
}

pub struct Ctx {
    pub report: ReportFormat,
    /// (path, sha256) of every input file read, in order.
    pub inputs: Vec<(String, String)>,
}

impl Ctx {
    pub fn new(report: ReportFormat) -> Self {
        Ctx { report, inputs: Vec::new() }
    }

    fn read(&mut self, path: &Path) -> Result<Vec<u8>, Failure> {
        let shown = path.display().to_string();
        let bytes = fs::read(path).map_err(|e| Failure::io(&shown, e))?;
        self.inputs.push((shown, sha256_hex(&bytes)));
        Ok(bytes)
    }

    fn read_text(&mut self, path: &Path) -> Result<String, Failure> {
        let bytes = self.read(path)?;
        String::from_utf8(bytes).map_err(|e| Failure::new("Encoding", format!("{}: {e}", path.display())))
    }

    fn load_store(&mut self, path: &Path) -> Result<OcedStore, Failure> {
        let bytes = self.read(path)?;
        Ok(read_snapshot(&bytes[..])?)
    }

    /// Report header shared by every JSON report.
    fn header(&self) -> Map<String, Json> {
        let mut m = Map::new();
        m.insert("tool".into(), json!("foced"));
        m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        let inputs: Map<String, Json> = self.inputs.iter().map(|(p, d)| (p.clone(), json!(d))).collect();
        m.insert("inputs".into(), Json::Object(inputs));
        m
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    let shown = path.display().to_string();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::io(&shown, e))?;
    }
    fs::write(path, contents).map_err(|e| Failure::io(&shown, e))
}

fn merge(mut header: Map<String, Json>, body: impl Serialize) -> Json {
    if let Json::Object(fields) = serde_json::to_value(body).expect("report serializes") {
        header.extend(fields);
    }
    Json::Object(header)
}

pub fn run(ctx: &mut Ctx, command: Command) -> Result<Outcome, Failure> {
    match command {
        Command::Parse { input, format, out, lenient } => parse(ctx, &input, format, &out, lenient),
        Command::Validate { store, constraints, builtin_pack, signature, report } => {
            if let Some(r) = report {
                ctx.report = r;
            }
            validate(ctx, &store, constraints.as_deref(), builtin_pack, signature.as_deref())
        }
        Command::Verify { signature, scope, assertion, find, facts, no_builder_constraints, witness_out, report } => {
            if let Some(r) = report {
                ctx.report = r;
            }
            let request = VerifyRequest {
                scope,
                assertion: (!find).then_some(assertion),
                facts,
                builder: !no_builder_constraints,
                witness_out,
            };
            verify(ctx, &signature, request)
        }
        Command::Export { store, to, out } => export(ctx, &store, to, &out),
        Command::Query { store, name } => query(ctx, &store, name),
        Command::Backup { store } => backup(ctx, &store),
    }
}

fn infer_format(path: &Path) -> Result<Format, Failure> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    match ext.as_str() {
        "xes" | "xml" => Ok(Format::Xes),
        "json" | "jsonocel" => Ok(Format::Ocel),
        _ => Err(Failure::new("UnknownFormat", format!("cannot infer the format of {}; pass --format", path.display()))),
    }
}

fn parse(ctx: &mut Ctx, input: &Path, format: Option<Format>, out: &Path, lenient: bool) -> Result<Outcome, Failure> {
    let format = match format {
        Some(f) => f,
        None => infer_format(input)?,
    };
    let bytes = ctx.read(input)?;
    let mode = if lenient { IngestMode::Lenient } else { IngestMode::Strict };
    let (store, report) = match format {
        Format::Xes => parse_xes(&bytes[..], mode)?,
        Format::Ocel => parse_ocel(&bytes[..], mode)?,
    };
    let mut snapshot = Vec::new();
    write_snapshot(&store, &mut snapshot).map_err(|e| Failure::io(&out.display().to_string(), e))?;
    write_file(out, &snapshot)?;
    let mut header = ctx.header();
    header.insert("snapshot".into(), json!(out.display().to_string()));
    println!("{}", merge(header, &report));
    Ok(Outcome::Clean)
}

fn validate(
    ctx: &mut Ctx,
    store_path: &Path,
    constraints: Option<&Path>,
    builtin: bool,
    signature: Option<&Path>,
) -> Result<Outcome, Failure> {
    let mut store = ctx.load_store(store_path)?;
    let rules = match constraints {
        Some(path) => parse_constraints(&ctx.read_text(path)?)?,
        None if builtin => builtin_bpic13_pack(),
        None => return Err(Failure::new("Usage", "pass --constraints FILE or --builtin-pack")),
    };
    let mut schema = Vec::new();
    if let Some(path) = signature {
        let sig = Signature::from_toml(&ctx.read_text(path)?)?;
        schema = store.bind_signature(sig);
    }
    let report = check_store(&store, &rules)?;
    let findings = report.violations.len() + schema.len();
    match ctx.report {
        ReportFormat::Json => {
            let mut header = ctx.header();
            if signature.is_some() {
                header.insert("schema_violations".into(), serde_json::to_value(&schema).expect("serializes"));
            }
            println!("{}", merge(header, &report));
        }
        ReportFormat::Text => print_text_report(&report, &schema),
    }
    Ok(if findings == 0 { Outcome::Clean } else { Outcome::Findings(findings) })
}

fn print_text_report(report: &ViolationReport, schema: &[foced_core::SchemaViolation]) {
    for s in schema {
        println!("SCHEMA {} {}: {}", s.entity, s.id, s.error);
    }
    for v in &report.violations {
        println!("FAIL {} [{}] {}: {}", v.constraint, v.family.keyword(), v.scope, v.message);
    }
    println!("checked {}, passed {}, failed {}", report.checked, report.passed, report.failed);
}

struct VerifyRequest {
    scope: usize,
    assertion: Option<String>,
    facts: Option<PathBuf>,
    builder: bool,
    witness_out: Option<PathBuf>,
}

fn verify(ctx: &mut Ctx, signature: &Path, req: VerifyRequest) -> Result<Outcome, Failure> {
    let sig = Signature::from_toml(&ctx.read_text(signature)?)?;
    let scope = Scope::uniform(req.scope)?;
    let mut extra: Vec<Constraint> = match &req.facts {
        Some(path) => parse_constraints(&ctx.read_text(path)?)?,
        None => Vec::new(),
    };
    let assertion = match req.assertion.as_deref() {
        None => None,
        Some(name) => match extra.iter().position(|c| c.name == name) {
            Some(i) => Some(extra.remove(i)),
            None if name == MAX_OBSERVE_PROPERTY => Some(max_observe_property()),
            None => return Err(Failure::new("UnknownAssertion", format!("no assertion named `{name}`"))),
        },
    };
    let mut facts = if req.builder { builder_facts() } else { Vec::new() };
    facts.extend(extra);

    let verdict = match &assertion {
        Some(a) => check_assertion(&sig, &facts, a, scope)?,
        None => find_instance(&sig, &facts, scope)?,
    };
    let message = verdict_message(&verdict, assertion.as_ref(), req.scope);
    let witness = verdict.kind.instance();
    if let (Some(store), Some(path)) = (witness, &req.witness_out) {
        write_file(path, snapshot_string(store).as_bytes())?;
    }

    match ctx.report {
        ReportFormat::Json => {
            let mut m = ctx.header();
            m.insert("verdict".into(), json!(verdict.kind.label()));
            m.insert("message".into(), json!(message));
            m.insert("assertion".into(), json!(assertion.as_ref().map(|a| a.name.clone())));
            m.insert("scope".into(), serde_json::to_value(scope).expect("serializes"));
            m.insert("facts".into(), json!(facts.iter().map(|f| f.name.clone()).collect::<Vec<_>>()));
            m.insert("stats".into(), serde_json::to_value(verdict.stats).expect("serializes"));
            let records: Option<Vec<Json>> = witness.map(|s| {
                snapshot_string(s)
                    .lines()
                    .map(|l| serde_json::from_str(l).expect("snapshot lines are JSON"))
                    .collect()
            });
            m.insert("witness".into(), json!(records));
            if let Some(p) = &req.witness_out {
                m.insert("witness_out".into(), json!(p.display().to_string()));
            }
            println!("{}", Json::Object(m));
        }
        ReportFormat::Text => {
            println!("{}: {message}", verdict.kind.label());
            if let Some(s) = witness {
                print!("{}", snapshot_string(s));
            }
            println!(
                "candidates {}, pruned {}, {:.1} ms",
                verdict.stats.candidates, verdict.stats.pruned, verdict.stats.wall_time_ms
            );
        }
    }
    Ok(match verdict.kind {
        VerdictKind::Valid | VerdictKind::InstanceFound(_) => Outcome::Clean,
        VerdictKind::Counterexample(_) | VerdictKind::Unsat => Outcome::Findings(1),
    })
}

fn verdict_message(verdict: &Verdict, assertion: Option<&Constraint>, scope: usize) -> String {
    let name = assertion.map(|a| a.name.as_str()).unwrap_or("");
    let size = |s: &OcedStore| format!("{} object(s), {} event(s)", s.objects().len(), s.events().len());
    match &verdict.kind {
        VerdictKind::Valid => {
            format!("no counterexample found for `{name}` within scope {scope} (bounded check, not a proof)")
        }
        VerdictKind::Counterexample(s) => {
            format!("counterexample to `{name}` within scope {scope}: {}", size(s))
        }
        VerdictKind::InstanceFound(s) => format!("instance found within scope {scope}: {}", size(s)),
        VerdictKind::Unsat => format!("no instance satisfies the facts within scope {scope}"),
    }
}

fn export(ctx: &mut Ctx, store_path: &Path, to: ExportTarget, out: &Path) -> Result<Outcome, Failure> {
    let store = ctx.load_store(store_path)?;
    let graph = project(&store);
    let mut written = Vec::new();
    match to {
        ExportTarget::Cypher => {
            write_file(out, emit_cypher(&graph).as_bytes())?;
            written.push(out.display().to_string());
        }
        ExportTarget::Csv => {
            for f in emit_csv(&graph) {
                let path = out.join(&f.name);
                write_file(&path, f.contents.as_bytes())?;
                written.push(path.display().to_string());
            }
        }
    }
    let mut m = ctx.header();
    m.insert("nodes".into(), json!(graph.nodes.len()));
    m.insert("edges".into(), json!(graph.edges.len()));
    m.insert("written".into(), json!(written));
    println!("{}", Json::Object(m));
    Ok(Outcome::Clean)
}

fn json_lines<T: Serialize>(rows: &[T]) -> Vec<String> {
    rows.iter().map(|r| serde_json::to_string(r).expect("row serializes")).collect()
}

/// The JSON lines `foced query` prints for a store.
fn query_lines(store: &OcedStore, name: QueryName) -> Vec<String> {
    let graph = project(store);
    match name {
        QueryName::Paths => {
            let result = query_case_event_paths(&graph);
            let mut lines = json_lines(&result.rows);
            lines.extend(
                result
                    .disconnected_events
                    .iter()
                    .map(|e| json!({ "case": null, "event": e, "disconnected": true }).to_string()),
            );
            lines
        }
        QueryName::ActivityFrequency => json_lines(&query_activity_frequency(&graph)),
        QueryName::EventSequence => json_lines(&query_event_sequence(&graph)),
    }
}

fn query(ctx: &mut Ctx, store_path: &Path, name: QueryName) -> Result<Outcome, Failure> {
    let store = ctx.load_store(store_path)?;
    let mut out = std::io::stdout().lock();
    for l in query_lines(&store, name) {
        writeln!(out, "{l}").map_err(|e| Failure::io("stdout", e))?;
    }
    Ok(Outcome::Clean)
}

fn copy_verified(from: &Path, to: &Path, expected: &str) -> Result<(), Failure> {
    let shown = to.display().to_string();
    fs::copy(from, to).map_err(|e| Failure::io(&shown, e))?;
    let copied = fs::read(to).map_err(|e| Failure::io(&shown, e))?;
    if sha256_hex(&copied) != expected {
        return Err(Failure::new("BackupMismatch", format!("{shown} differs from its source after copying")));
    }
    Ok(())
}

fn backup(ctx: &mut Ctx, store_path: &Path) -> Result<Outcome, Failure> {
    let bytes = ctx.read(store_path)?;
    read_snapshot(&bytes[..])?;
    let home = audit::home();
    let root = home.join("backups");
    let stamp = Utc::now().format("%Y%m%dT%H%M%S%.6fZ").to_string();
    let mut dir = root.join(&stamp);
    let mut n = 1;
    while dir.exists() {
        n += 1;
        dir = root.join(format!("{stamp}-{n}"));
    }
    fs::create_dir_all(&dir).map_err(|e| Failure::io(&dir.display().to_string(), e))?;

    let mut manifest = Map::new();
    let store_name = store_path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or("store.jsonl".into());
    let store_digest = sha256_hex(&bytes);
    copy_verified(store_path, &dir.join(&store_name), &store_digest)?;
    manifest.insert(store_name, json!(store_digest));

    let audit_path = home.join(audit::AUDIT_FILE);
    if audit_path.exists() {
        let log = {
            let f = fs::File::open(&audit_path).map_err(|e| Failure::io("audit log", e))?;
            f.lock_shared().map_err(|e| Failure::io("audit log", e))?;
            let log = fs::read(&audit_path).map_err(|e| Failure::io("audit log", e));
            f.unlock().map_err(|e| Failure::io("audit log", e))?;
            log?
        };
        let digest = sha256_hex(&log);
        let target = dir.join(audit::AUDIT_FILE);
        write_file(&target, &log)?;
        if sha256_hex(&fs::read(&target).map_err(|e| Failure::io("audit copy", e))?) != digest {
            return Err(Failure::new("BackupMismatch", "audit log copy differs from its source"));
        }
        manifest.insert(audit::AUDIT_FILE.into(), json!(digest));
    }

    let body = json!({ "created": Utc::now().to_rfc3339(), "source": store_path.display().to_string(), "files": manifest });
    let text = serde_json::to_string_pretty(&body).expect("manifest serializes");
    write_file(&dir.join("manifest.json"), text.as_bytes())?;

    let mut m = ctx.header();
    m.insert("backup".into(), json!(dir.display().to_string()));
    m.insert("files".into(), body["files"].clone());
    println!("{}", Json::Object(m));
    Ok(Outcome::Clean)
}
