//! Command-line front end. Reports go to stdout, diagnostics to stderr.
//!
//! Exit codes: 0 no findings, 1 findings (or failing corpus cases), 2 bad input.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::corpus::run_corpus;
use crate::engine::{analyze, AnalysisOptions};
use crate::ir::{parse_ir, validate, IrProgram, Severity};
use crate::kotlin_types::{parse_kotlin_type, resolve_alias, map_type, TypeAliasTable};
use crate::report::{to_sarif, to_text};
use crate::sig_synth::classify_generated_name;
use crate::spec_dsl::{dump_normalized, normalize_spec, parse_alias_file, parse_spec, Spec};

pub const EXIT_CLEAN: u8 = 0;
pub const EXIT_FINDINGS: u8 = 1;
pub const EXIT_INPUT: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "ktaint", version, about = "Kotlin-aware taint analysis over a Jimple-like IR")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Analyze IR files against a taint specification.
    Check {
        spec: PathBuf,
        #[arg(required = true)]
        ir: Vec<PathBuf>,
        /// Also write a SARIF report to this path.
        #[arg(long, value_name = "PATH")]
        sarif: Option<PathBuf>,
        /// Print wall-clock analysis time to stderr.
        #[arg(long)]
        time: bool,
        #[command(flatten)]
        engine: EngineFlags,
    },
    /// Print the bytecode-level signatures a specification compiles to.
    TransformSpec {
        spec: PathBuf,
        #[command(flatten)]
        engine: EngineFlags,
    },
    /// Map a Kotlin type to its JVM type.
    MapType {
        #[arg(value_name = "TYPE")]
        ty: String,
        #[arg(long, value_name = "PATH")]
        alias_file: Option<PathBuf>,
    },
    /// Classify a compiler-generated method or class name.
    Classify { name: String },
    /// Run every fixture case under a directory.
    Corpus { dir: PathBuf },
}

#[derive(Args, Debug, Default)]
struct EngineFlags {
    /// Unmatched opaque calls propagate argument taint to their result.
    #[arg(long)]
    implicit_propagation: bool,
    #[arg(long)]
    no_default_args: bool,
    #[arg(long)]
    no_type_mapping: bool,
    #[arg(long)]
    no_alias_resolution: bool,
    #[arg(long)]
    no_extension_handling: bool,
    #[arg(long)]
    no_construct_synthesis: bool,
    /// Extra type aliases (`aliases { A = b }`), merged under the spec's own.
    #[arg(long, value_name = "PATH")]
    alias_file: Option<PathBuf>,
}

impl EngineFlags {
    fn options(&self) -> AnalysisOptions {
        AnalysisOptions {
            implicit_propagation: self.implicit_propagation,
            no_default_expansion: self.no_default_args,
            no_type_mapping: self.no_type_mapping,
            no_alias_resolution: self.no_alias_resolution,
            no_extension_handling: self.no_extension_handling,
            no_construct_synthesis: self.no_construct_synthesis,
        }
    }
}

/// Failures that map to exit code 2.
struct InputError(anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.into())
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_aliases(path: &Path) -> Result<TypeAliasTable> {
    parse_alias_file(&read(path)?).with_context(|| path.display().to_string())
}

fn load_spec(path: &Path, alias_file: Option<&Path>) -> Result<Spec> {
    let mut spec = parse_spec(&read(path)?).with_context(|| path.display().to_string())?;
    if let Some(a) = alias_file {
        spec.aliases = spec.aliases.merged(&load_aliases(a)?)?;
    }
    Ok(spec)
}

fn load_program(paths: &[PathBuf], err: &mut dyn Write) -> Result<IrProgram, InputError> {
    let mut programs = Vec::new();
    for p in paths {
        programs.push(parse_ir(&read(p)?).with_context(|| p.display().to_string())?);
    }
    let program = IrProgram::merge(programs)?;
    let mut errors = 0;
    for d in validate(&program) {
        if d.severity == Severity::Error {
            errors += 1;
        }
        let _ = writeln!(err, "{d}");
    }
    if errors > 0 {
        return Err(InputError(anyhow::anyhow!("{errors} IR error(s)")));
    }
    Ok(program)
}

fn cmd_check(
    spec: &Path,
    ir: &[PathBuf],
    sarif: Option<&Path>,
    time: bool,
    flags: &EngineFlags,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<u8, InputError> {
    let options = flags.options();
    let spec = load_spec(spec, flags.alias_file.as_deref())?;
    let queries = normalize_spec(&spec, &options)?;
    for q in &queries {
        for w in &q.warnings {
            let _ = writeln!(err, "warning: query `{}`: {w}", q.id);
        }
    }
    let program = load_program(ir, err)?;
    let started = Instant::now();
    let findings = analyze(&program, &queries, &options);
    let elapsed = started.elapsed();
    write!(out, "{}", to_text(&findings))?;
    if let Some(path) = sarif {
        fs::write(path, to_sarif(&findings, env!("CARGO_PKG_VERSION")))
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    if time {
        let _ = writeln!(err, "analysis time: {:.3}s", elapsed.as_secs_f64());
    }
    Ok(if findings.is_empty() { EXIT_CLEAN } else { EXIT_FINDINGS })
}

fn cmd_transform_spec(spec: &Path, flags: &EngineFlags, out: &mut dyn Write) -> Result<u8, InputError> {
    let spec = load_spec(spec, flags.alias_file.as_deref())?;
    let queries = normalize_spec(&spec, &flags.options())?;
    write!(out, "{}", dump_normalized(&queries))?;
    Ok(EXIT_CLEAN)
}

fn cmd_map_type(ty: &str, alias_file: Option<&Path>, out: &mut dyn Write) -> Result<u8, InputError> {
    let aliases = match alias_file {
        Some(p) => load_aliases(p)?,
        None => TypeAliasTable::new(),
    };
    let expr = parse_kotlin_type(ty)?;
    writeln!(out, "{}", map_type(&resolve_alias(&aliases, &expr)))?;
    Ok(EXIT_CLEAN)
}

fn cmd_corpus(dir: &Path, out: &mut dyn Write) -> Result<u8, InputError> {
    let outcomes = run_corpus(dir)?;
    let mut failed = 0;
    for o in &outcomes {
        writeln!(out, "{o}")?;
        if !o.passed() {
            failed += 1;
        }
    }
    writeln!(out, "{} cases, {failed} failed", outcomes.len())?;
    Ok(if failed == 0 { EXIT_CLEAN } else { EXIT_FINDINGS })
}

pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_CLEAN };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{rendered}")
            } else {
                write!(out, "{rendered}")
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Check {
            spec,
            ir,
            sarif,
            time,
            engine,
        } => cmd_check(spec, ir, sarif.as_deref(), *time, engine, out, err),
        Command::TransformSpec { spec, engine } => cmd_transform_spec(spec, engine, out),
        Command::MapType { ty, alias_file } => cmd_map_type(ty, alias_file.as_deref(), out),
        Command::Classify { name } => writeln!(out, "{}", classify_generated_name(name))
            .map(|_| EXIT_CLEAN)
            .map_err(InputError::from),
        Command::Corpus { dir } => cmd_corpus(dir, out),
    };
    match result {
        Ok(code) => code,
        Err(InputError(e)) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_INPUT
        }
    }
}
