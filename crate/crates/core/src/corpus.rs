//! Golden-fixture corpus: `<dir>/<case>/{case.ir, case.spec, expected.findings}`.
//!
//! `expected.findings` holds sorted `query source_line sink_line` triples,
//! `#` comments, and directives:
//!
//! * `@ablation <flag>` — with this flag the case must report nothing;
//! * `@expected-miss` — the listed flows are real but out of reach of the
//!   analysis; the case passes when nothing is reported;
//! * `@option <flag>` — run the case with an extra engine flag.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

use crate::engine::{analyze, AnalysisOptions, Finding};
use crate::ir::{parse_ir, validate, IrProgram, Severity};
use crate::report::{to_sarif, validate_sarif};
use crate::spec_dsl::{normalize_spec, parse_spec, Spec};

pub const IR_FILE: &str = "case.ir";
pub const SPEC_FILE: &str = "case.spec";
pub const MANIFEST_FILE: &str = "expected.findings";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExpectedFlow {
    pub query: String,
    pub source_line: usize,
    pub sink_line: usize,
}

impl fmt::Display for ExpectedFlow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.query, self.source_line, self.sink_line)
    }
}

impl From<&Finding> for ExpectedFlow {
    fn from(f: &Finding) -> Self {
        ExpectedFlow {
            query: f.query.clone(),
            source_line: f.source.line,
            sink_line: f.sink.line,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    pub flows: Vec<ExpectedFlow>,
    pub ablations: Vec<String>,
    pub options: Vec<String>,
    pub expected_miss: bool,
}

pub fn parse_manifest(text: &str) -> Result<Manifest> {
    let mut m = Manifest::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let check_flag = |flag: &str| {
            AnalysisOptions::default()
                .with_flag(flag)
                .map(|_| ())
                .map_err(|e| anyhow!("manifest line {}: {e}", i + 1))
        };
        match parts.as_slice() {
            ["@expected-miss"] => m.expected_miss = true,
            ["@ablation", flag] => {
                check_flag(flag)?;
                m.ablations.push(flag.to_string());
            }
            ["@option", flag] => {
                check_flag(flag)?;
                m.options.push(flag.to_string());
            }
            [query, src, sink] if !query.starts_with('@') => {
                let num = |s: &str| {
                    s.parse::<usize>()
                        .with_context(|| format!("manifest line {}: `{s}` is not a line number", i + 1))
                };
                m.flows.push(ExpectedFlow {
                    query: query.to_string(),
                    source_line: num(src)?,
                    sink_line: num(sink)?,
                });
            }
            _ => bail!("manifest line {}: cannot parse `{line}`", i + 1),
        }
    }
    let mut sorted = m.flows.clone();
    sorted.sort();
    if sorted != m.flows {
        bail!("manifest flows must be sorted");
    }
    Ok(m)
}

#[derive(Debug, Clone)]
pub struct Case {
    pub name: String,
    pub dir: PathBuf,
    pub spec: Spec,
    pub program: IrProgram,
    pub manifest: Manifest,
}

impl Case {
    pub fn load(dir: &Path) -> Result<Case> {
        let read = |f: &str| {
            let p = dir.join(f);
            fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))
        };
        let spec = parse_spec(&read(SPEC_FILE)?).with_context(|| format!("{}/{SPEC_FILE}", dir.display()))?;
        let program = parse_ir(&read(IR_FILE)?).with_context(|| format!("{}/{IR_FILE}", dir.display()))?;
        let errors: Vec<String> = validate(&program)
            .into_iter()
            .filter(|d| d.severity == Severity::Error)
            .map(|d| d.to_string())
            .collect();
        if !errors.is_empty() {
            bail!("{}/{IR_FILE}: {}", dir.display(), errors.join("; "));
        }
        let manifest = parse_manifest(&read(MANIFEST_FILE)?).with_context(|| format!("{}/{MANIFEST_FILE}", dir.display()))?;
        Ok(Case {
            name: dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
            dir: dir.to_path_buf(),
            spec,
            program,
            manifest,
        })
    }

    /// The case's own options plus `extra` flags.
    pub fn options(&self, extra: &[&str]) -> Result<AnalysisOptions> {
        let mut opts = AnalysisOptions::default();
        for f in self.manifest.options.iter().map(String::as_str).chain(extra.iter().copied()) {
            opts.set_flag(f).map_err(|e| anyhow!(e))?;
        }
        Ok(opts)
    }

    pub fn run(&self, options: &AnalysisOptions) -> Result<Vec<Finding>> {
        let queries = normalize_spec(&self.spec, options)?;
        Ok(analyze(&self.program, &queries, options))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Pass,
    ExpectedMiss,
    Fail {
        missing: Vec<ExpectedFlow>,
        unexpected: Vec<ExpectedFlow>,
        notes: Vec<String>,
    },
}

#[derive(Debug, Clone)]
pub struct CaseOutcome {
    pub name: String,
    pub status: Status,
    pub findings: Vec<Finding>,
    pub sarif: String,
}

impl CaseOutcome {
    pub fn passed(&self) -> bool {
        !matches!(self.status, Status::Fail { .. })
    }
}

impl fmt::Display for CaseOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.status {
            Status::Pass => write!(f, "PASS {} ({} findings)", self.name, self.findings.len()),
            Status::ExpectedMiss => write!(f, "EXPECTED-MISS {}", self.name),
            Status::Fail {
                missing,
                unexpected,
                notes,
            } => {
                write!(f, "FAIL {}", self.name)?;
                for m in missing {
                    write!(f, "\n  missing    {m}")?;
                }
                for u in unexpected {
                    write!(f, "\n  unexpected {u}")?;
                }
                for n in notes {
                    write!(f, "\n  {n}")?;
                }
                Ok(())
            }
        }
    }
}

/// Runs one case with its manifest options and compares exactly.
pub fn run_case(case: &Case) -> Result<CaseOutcome> {
    let findings = case.run(&case.options(&[])?)?;
    let sarif = to_sarif(&findings, env!("CARGO_PKG_VERSION"));
    let mut notes = Vec::new();
    match serde_json::from_str(&sarif) {
        Ok(doc) => {
            if let Err(errs) = validate_sarif(&doc) {
                notes.extend(errs.into_iter().map(|e| format!("sarif: {e}")));
            }
        }
        Err(e) => notes.push(format!("sarif: {e}")),
    }
    let mut actual: Vec<ExpectedFlow> = findings.iter().map(ExpectedFlow::from).collect();
    actual.sort();
    let status = if case.manifest.expected_miss {
        if actual.is_empty() && notes.is_empty() {
            Status::ExpectedMiss
        } else {
            Status::Fail {
                missing: Vec::new(),
                unexpected: actual,
                notes,
            }
        }
    } else {
        let missing: Vec<_> = case.manifest.flows.iter().filter(|e| !actual.contains(e)).cloned().collect();
        let unexpected: Vec<_> = actual.iter().filter(|a| !case.manifest.flows.contains(a)).cloned().collect();
        if missing.is_empty() && unexpected.is_empty() && notes.is_empty() {
            Status::Pass
        } else {
            Status::Fail {
                missing,
                unexpected,
                notes,
            }
        }
    };
    Ok(CaseOutcome {
        name: case.name.clone(),
        status,
        findings,
        sarif,
    })
}

/// Case directories under `root`, in path order.
pub fn case_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)
        .with_context(|| format!("reading {}", root.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(MANIFEST_FILE).is_file())
        .collect();
    dirs.sort();
    Ok(dirs)
}

pub fn run_corpus(root: &Path) -> Result<Vec<CaseOutcome>> {
    case_dirs(root)?
        .iter()
        .map(|d| Case::load(d).and_then(|c| run_case(&c)))
        .collect()
}
