//! Text and SARIF rendering of findings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::engine::{Finding, Location};

pub const TOOL_NAME: &str = "ktaint";
pub const SARIF_VERSION: &str = "2.1.0";
pub const SARIF_SCHEMA: &str = "https://json.schemastore.org/sarif-2.1.0.json";

pub fn to_text(findings: &[Finding]) -> String {
    let mut out = String::new();
    for f in findings {
        let _ = writeln!(out, "[{}] {}", f.query, f.message);
        let _ = writeln!(out, "  source {}  ({})", f.source, f.source.method);
        let _ = writeln!(out, "  sink   {}  ({})", f.sink, f.sink.method);
        if f.witness.len() > 2 {
            let _ = writeln!(out, "  path:");
            for step in &f.witness {
                let _ = writeln!(out, "    {step}");
            }
        }
        out.push('\n');
    }
    let n = findings.len();
    let _ = writeln!(out, "{n} finding{}", if n == 1 { "" } else { "s" });
    out
}

#[derive(Serialize)]
struct SarifLog<'a> {
    #[serde(rename = "$schema")]
    schema: &'a str,
    version: &'a str,
    runs: Vec<Run<'a>>,
}

#[derive(Serialize)]
struct Run<'a> {
    tool: Tool<'a>,
    results: Vec<SarifResult>,
}

#[derive(Serialize)]
struct Tool<'a> {
    driver: Driver<'a>,
}

#[derive(Serialize)]
struct Driver<'a> {
    name: &'a str,
    version: &'a str,
    rules: Vec<Rule>,
}

#[derive(Serialize)]
struct Rule {
    id: String,
    #[serde(rename = "shortDescription")]
    short_description: Message,
}

#[derive(Serialize)]
struct Message {
    text: String,
}

#[derive(Serialize)]
struct SarifResult {
    #[serde(rename = "ruleId")]
    rule_id: String,
    level: &'static str,
    message: Message,
    locations: Vec<SarifLocation>,
    #[serde(rename = "codeFlows")]
    code_flows: Vec<CodeFlow>,
}

#[derive(Serialize)]
struct SarifLocation {
    #[serde(rename = "physicalLocation")]
    physical_location: PhysicalLocation,
}

#[derive(Serialize)]
struct PhysicalLocation {
    #[serde(rename = "artifactLocation")]
    artifact_location: ArtifactLocation,
    region: Region,
}

#[derive(Serialize)]
struct ArtifactLocation {
    uri: String,
}

#[derive(Serialize)]
struct Region {
    #[serde(rename = "startLine")]
    start_line: usize,
}

#[derive(Serialize)]
struct CodeFlow {
    #[serde(rename = "threadFlows")]
    thread_flows: Vec<ThreadFlow>,
}

#[derive(Serialize)]
struct ThreadFlow {
    locations: Vec<ThreadFlowLocation>,
}

#[derive(Serialize)]
struct ThreadFlowLocation {
    location: SarifLocation,
}

fn sarif_location(loc: &Location) -> SarifLocation {
    SarifLocation {
        physical_location: PhysicalLocation {
            artifact_location: ArtifactLocation { uri: loc.uri() },
            region: Region { start_line: loc.line },
        },
    }
}

/// One run; rules are the distinct query ids among the findings.
pub fn to_sarif(findings: &[Finding], tool_version: &str) -> String {
    let mut rules: BTreeMap<&str, &str> = BTreeMap::new();
    for f in findings {
        rules.entry(&f.query).or_insert(&f.message);
    }
    let log = SarifLog {
        schema: SARIF_SCHEMA,
        version: SARIF_VERSION,
        runs: vec![Run {
            tool: Tool {
                driver: Driver {
                    name: TOOL_NAME,
                    version: tool_version,
                    rules: rules
                        .into_iter()
                        .map(|(id, msg)| Rule {
                            id: id.to_string(),
                            short_description: Message { text: msg.to_string() },
                        })
                        .collect(),
                },
            },
            results: findings
                .iter()
                .map(|f| SarifResult {
                    rule_id: f.query.clone(),
                    level: "error",
                    message: Message {
                        text: format!("{}: tainted data from {} reaches {}", f.message, f.source, f.sink),
                    },
                    locations: vec![sarif_location(&f.sink)],
                    code_flows: vec![CodeFlow {
                        thread_flows: vec![ThreadFlow {
                            locations: f
                                .witness
                                .iter()
                                .map(|l| ThreadFlowLocation { location: sarif_location(l) })
                                .collect(),
                        }],
                    }],
                })
                .collect(),
        }],
    };
    let mut text = serde_json::to_string_pretty(&log).expect("SARIF structures always serialize");
    text.push('\n');
    text
}

fn require<'v>(v: &'v Value, key: &str, path: &str, errors: &mut Vec<String>) -> Option<&'v Value> {
    let found = v.get(key);
    if found.is_none() {
        errors.push(format!("{path}: missing `{key}`"));
    }
    found
}

fn require_str<'v>(v: &'v Value, key: &str, path: &str, errors: &mut Vec<String>) -> Option<&'v str> {
    let s = require(v, key, path, errors)?.as_str();
    if s.is_none() {
        errors.push(format!("{path}.{key}: expected a string"));
    }
    s
}

fn require_array<'v>(v: &'v Value, key: &str, path: &str, errors: &mut Vec<String>) -> &'v [Value] {
    match require(v, key, path, errors).map(Value::as_array) {
        Some(Some(a)) => a,
        Some(None) => {
            errors.push(format!("{path}.{key}: expected an array"));
            &[]
        }
        None => &[],
    }
}

fn check_location(loc: &Value, path: &str, errors: &mut Vec<String>) {
    let Some(phys) = require(loc, "physicalLocation", path, errors) else {
        return;
    };
    let p = format!("{path}.physicalLocation");
    if let Some(art) = require(phys, "artifactLocation", &p, errors) {
        if let Some(uri) = require_str(art, "uri", &format!("{p}.artifactLocation"), errors) {
            if uri.contains('\\') {
                errors.push(format!("{p}.artifactLocation.uri: backslash in `{uri}`"));
            }
        }
    }
    if let Some(region) = require(phys, "region", &p, errors) {
        match require(region, "startLine", &format!("{p}.region"), errors).map(Value::as_u64) {
            Some(Some(n)) if n >= 1 => {}
            Some(_) => errors.push(format!("{p}.region.startLine: expected a positive integer")),
            None => {}
        }
    }
}

/// Checks the subset of SARIF 2.1.0 this tool emits: version, one or more
/// runs with `tool.driver.{name,version,rules[]}`, and results whose
/// `ruleId` names a declared rule.
pub fn validate_sarif(doc: &Value) -> Result<(), Vec<String>> {
    let mut errors = Vec::new();
    if !doc.is_object() {
        return Err(vec!["$: expected an object".into()]);
    }
    match require_str(doc, "version", "$", &mut errors) {
        Some(SARIF_VERSION) | None => {}
        Some(other) => errors.push(format!("$.version: expected `{SARIF_VERSION}`, found `{other}`")),
    }
    let runs = require_array(doc, "runs", "$", &mut errors);
    if runs.is_empty() && doc.get("runs").is_some_and(Value::is_array) {
        errors.push("$.runs: expected at least one run".into());
    }
    for (ri, run) in runs.iter().enumerate() {
        let rp = format!("$.runs[{ri}]");
        let mut rule_ids = Vec::new();
        if let Some(driver) = require(run, "tool", &rp, &mut errors).and_then(|t| require(t, "driver", &format!("{rp}.tool"), &mut errors)) {
            let dp = format!("{rp}.tool.driver");
            require_str(driver, "name", &dp, &mut errors);
            require_str(driver, "version", &dp, &mut errors);
            for (i, rule) in require_array(driver, "rules", &dp, &mut errors).iter().enumerate() {
                if let Some(id) = require_str(rule, "id", &format!("{dp}.rules[{i}]"), &mut errors) {
                    rule_ids.push(id.to_string());
                }
            }
        }
        for (i, res) in require_array(run, "results", &rp, &mut errors).iter().enumerate() {
            let p = format!("{rp}.results[{i}]");
            if let Some(id) = require_str(res, "ruleId", &p, &mut errors) {
                if !rule_ids.iter().any(|r| r == id) {
                    errors.push(format!("{p}.ruleId: `{id}` is not a declared rule"));
                }
            }
            if let Some(msg) = require(res, "message", &p, &mut errors) {
                require_str(msg, "text", &format!("{p}.message"), &mut errors);
            }
            for (li, loc) in require_array(res, "locations", &p, &mut errors).iter().enumerate() {
                check_location(loc, &format!("{p}.locations[{li}]"), &mut errors);
            }
            if let Some(flows) = res.get("codeFlows") {
                let Some(flows) = flows.as_array() else {
                    errors.push(format!("{p}.codeFlows: expected an array"));
                    continue;
                };
                for (fi, flow) in flows.iter().enumerate() {
                    let fp = format!("{p}.codeFlows[{fi}]");
                    for (ti, tf) in require_array(flow, "threadFlows", &fp, &mut errors).iter().enumerate() {
                        let tp = format!("{fp}.threadFlows[{ti}]");
                        for (li, l) in require_array(tf, "locations", &tp, &mut errors).iter().enumerate() {
                            let lp = format!("{tp}.locations[{li}]");
                            if let Some(inner) = require(l, "location", &lp, &mut errors) {
                                check_location(inner, &format!("{lp}.location"), &mut errors);
                            }
                        }
                    }
                }
            }
        }
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}
