//! A small Jimple-like three-address IR.
//!
//! ```text
//! class com.acme.Api file "src/main/kotlin/Api.kt" {
//!   method "com.acme.Api: void handle(java.lang.String)" {
//!     l0 = this
//!     l1 = param 0
//!     l2 = call "com.acme.Db: void run(java.lang.String)" on l0 (l1) line 42
//!     return
//!   }
//! }
//! ```
//!
//! Statements are one per line; `;` starts a comment.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::sig_synth::MethodSignature;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct IrError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FieldBase {
    Local(String),
    /// Static field of a class.
    Class(String),
}

impl fmt::Display for FieldBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldBase::Local(l) | FieldBase::Class(l) => f.write_str(l),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    IdentityParam {
        local: String,
        index: usize,
    },
    IdentityThis {
        local: String,
    },
    Const {
        local: String,
        value: String,
    },
    Copy {
        dst: String,
        src: String,
    },
    Invoke {
        callee: MethodSignature,
        receiver: Option<String>,
        args: Vec<String>,
        result: Option<String>,
    },
    FieldStore {
        base: FieldBase,
        field: String,
        src: String,
    },
    FieldLoad {
        dst: String,
        base: FieldBase,
        field: String,
    },
    Return(Option<String>),
}

impl StmtKind {
    pub fn is_static_invoke(&self) -> bool {
        matches!(self, StmtKind::Invoke { receiver: None, .. })
    }

    /// Locals read by the statement.
    pub fn uses(&self) -> Vec<&str> {
        match self {
            StmtKind::IdentityParam { .. } | StmtKind::IdentityThis { .. } | StmtKind::Const { .. } => vec![],
            StmtKind::Copy { src, .. } => vec![src],
            StmtKind::Invoke { receiver, args, .. } => {
                receiver.iter().chain(args).map(String::as_str).collect()
            }
            StmtKind::FieldStore { base, src, .. } => {
                let mut v = vec![src.as_str()];
                if let FieldBase::Local(b) = base {
                    v.insert(0, b);
                }
                v
            }
            StmtKind::FieldLoad { base, .. } => match base {
                FieldBase::Local(b) => vec![b],
                FieldBase::Class(_) => vec![],
            },
            StmtKind::Return(l) => l.iter().map(String::as_str).collect(),
        }
    }

    /// The local written by the statement, if any.
    pub fn def(&self) -> Option<&str> {
        match self {
            StmtKind::IdentityParam { local, .. }
            | StmtKind::IdentityThis { local }
            | StmtKind::Const { local, .. } => Some(local),
            StmtKind::Copy { dst, .. } | StmtKind::FieldLoad { dst, .. } => Some(dst),
            StmtKind::Invoke { result, .. } => result.as_deref(),
            StmtKind::FieldStore { .. } | StmtKind::Return(_) => None,
        }
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

impl fmt::Display for StmtKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StmtKind::IdentityParam { local, index } => write!(f, "{local} = param {index}"),
            StmtKind::IdentityThis { local } => write!(f, "{local} = this"),
            StmtKind::Const { local, value } => write!(f, "{local} = const {}", quote(value)),
            StmtKind::Copy { dst, src } => write!(f, "{dst} = {src}"),
            StmtKind::Invoke {
                callee,
                receiver,
                args,
                result,
            } => {
                if let Some(r) = result {
                    write!(f, "{r} = ")?;
                }
                write!(f, "call {}", quote(&callee.to_string()))?;
                if let Some(r) = receiver {
                    write!(f, " on {r}")?;
                }
                write!(f, " ({})", args.join(", "))
            }
            StmtKind::FieldStore { base, field, src } => write!(f, "{base}.{field} = {src}"),
            StmtKind::FieldLoad { dst, base, field } => write!(f, "{dst} = {base}.{field}"),
            StmtKind::Return(None) => f.write_str("return"),
            StmtKind::Return(Some(l)) => write!(f, "return {l}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrStatement {
    pub kind: StmtKind,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrMethod {
    pub signature: MethodSignature,
    pub statements: Vec<IrStatement>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrClass {
    pub name: String,
    pub source_file: Option<String>,
    pub super_name: Option<String>,
    pub methods: Vec<IrMethod>,
}

impl IrClass {
    /// Report path: the declared source file, else the class file path.
    pub fn report_uri(&self) -> String {
        class_uri(&self.name, self.source_file.as_deref())
    }
}

pub fn class_uri(class: &str, source_file: Option<&str>) -> String {
    match source_file {
        Some(f) => f.replace('\\', "/"),
        None => format!("{}.class", class.replace('.', "/")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MethodId {
    pub class: usize,
    pub method: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IrProgram {
    pub classes: Vec<IrClass>,
    index: BTreeMap<MethodSignature, MethodId>,
}

impl IrProgram {
    pub fn from_classes(classes: Vec<IrClass>) -> Result<Self, IrError> {
        let mut index = BTreeMap::new();
        for (ci, class) in classes.iter().enumerate() {
            for (mi, m) in class.methods.iter().enumerate() {
                let id = MethodId { class: ci, method: mi };
                if index.insert(m.signature.clone(), id).is_some() {
                    return Err(IrError {
                        line: m.statements.first().map_or(0, |s| s.line),
                        message: format!("duplicate method `{}`", m.signature),
                    });
                }
            }
        }
        Ok(IrProgram { classes, index })
    }

    /// Concatenates programs, rejecting methods defined more than once.
    pub fn merge(programs: Vec<IrProgram>) -> Result<Self, IrError> {
        Self::from_classes(programs.into_iter().flat_map(|p| p.classes).collect())
    }

    pub fn lookup(&self, sig: &MethodSignature) -> Option<MethodId> {
        self.index.get(sig).copied()
    }

    pub fn method(&self, id: MethodId) -> &IrMethod {
        &self.classes[id.class].methods[id.method]
    }

    pub fn class_of(&self, id: MethodId) -> &IrClass {
        &self.classes[id.class]
    }

    pub fn method_ids(&self) -> impl Iterator<Item = MethodId> + '_ {
        self.index.values().copied()
    }

    pub fn method_count(&self) -> usize {
        self.index.len()
    }

    pub fn class_named(&self, name: &str) -> Option<&IrClass> {
        self.classes.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for IrProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut printer = Printer { out: f, line: 1 };
        for class in &self.classes {
            printer.class(class)?;
        }
        Ok(())
    }
}

/// Writes IR, adding `line N` only where a statement's line differs from
/// the physical line it lands on.
struct Printer<'a, 'b> {
    out: &'a mut fmt::Formatter<'b>,
    line: usize,
}

impl Printer<'_, '_> {
    fn emit(&mut self, text: fmt::Arguments<'_>) -> fmt::Result {
        writeln!(self.out, "{text}")?;
        self.line += 1;
        Ok(())
    }

    fn class(&mut self, class: &IrClass) -> fmt::Result {
        let mut header = format!("class {}", class.name);
        if let Some(file) = &class.source_file {
            header.push_str(&format!(" file {}", quote(file)));
        }
        if let Some(sup) = &class.super_name {
            header.push_str(&format!(" extends {sup}"));
        }
        self.emit(format_args!("{header} {{"))?;
        for m in &class.methods {
            let stat = if m.signature.is_static { " static" } else { "" };
            self.emit(format_args!("  method {}{stat} {{", quote(&m.signature.to_string())))?;
            for s in &m.statements {
                if s.line == self.line {
                    self.emit(format_args!("    {}", s.kind))?;
                } else {
                    self.emit(format_args!("    {} line {}", s.kind, s.line))?;
                }
            }
            self.emit(format_args!("  }}"))?;
        }
        self.emit(format_args!("}}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    Str(String),
    Punct(char),
}

fn tokenize_line(text: &str, line: usize) -> Result<Vec<Tok>, IrError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == ';' {
            break;
        } else if c == '"' {
            let mut s = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None => {
                        return Err(IrError {
                            line,
                            message: "unterminated string".into(),
                        })
                    }
                    Some('"') => {
                        i += 1;
                        break;
                    }
                    Some('\\') => {
                        match chars.get(i + 1) {
                            Some(&e @ ('"' | '\\')) => s.push(e),
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            _ => {
                                return Err(IrError {
                                    line,
                                    message: "invalid escape in string".into(),
                                })
                            }
                        }
                        i += 2;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                    }
                }
            }
            out.push(Tok::Str(s));
        } else if matches!(c, '{' | '}' | '(' | ')' | ',' | '=') {
            out.push(Tok::Punct(c));
            i += 1;
        } else if c.is_alphanumeric() || matches!(c, '_' | '$' | '.' | '-') {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || matches!(chars[i], '_' | '$' | '.' | '-')) {
                i += 1;
            }
            out.push(Tok::Word(chars[start..i].iter().collect()));
        } else {
            return Err(IrError {
                line,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

const KEYWORDS: &[&str] = &[
    "class", "method", "static", "file", "extends", "param", "this", "const", "call", "on", "return", "line",
];

fn is_local(w: &str) -> bool {
    let mut chars = w.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_' || c == '$')
        && w.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '$')
        && !KEYWORDS.contains(&w)
}

fn is_qual_name(w: &str) -> bool {
    !w.is_empty()
        && !w.starts_with('.')
        && !w.ends_with('.')
        && !w.contains("..")
        && w.split('.').all(|seg| seg.chars().all(|c| c.is_alphanumeric() || matches!(c, '_' | '$' | '-')))
}

/// `base.field` where base is a local or a qualified class name.
fn split_field(w: &str) -> Option<(FieldBase, String)> {
    let (base, field) = w.rsplit_once('.')?;
    if !is_local(field) || base.is_empty() {
        return None;
    }
    if is_local(base) {
        Some((FieldBase::Local(base.to_string()), field.to_string()))
    } else if is_qual_name(base) {
        Some((FieldBase::Class(base.to_string()), field.to_string()))
    } else {
        None
    }
}

struct LineCursor<'a> {
    toks: &'a [Tok],
    pos: usize,
    line: usize,
}

impl<'a> LineCursor<'a> {
    fn err(&self, message: impl Into<String>) -> IrError {
        IrError {
            line: self.line,
            message: message.into(),
        }
    }

    fn next(&mut self) -> Option<&'a Tok> {
        let t = self.toks.get(self.pos);
        self.pos += 1;
        t
    }

    fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn word(&mut self) -> Result<&'a str, IrError> {
        match self.next() {
            Some(Tok::Word(w)) => Ok(w),
            other => Err(self.err(format!("expected a name, found {}", describe(other)))),
        }
    }

    fn local(&mut self) -> Result<String, IrError> {
        let w = self.word()?;
        if is_local(w) {
            Ok(w.to_string())
        } else {
            Err(self.err(format!("`{w}` is not a valid local name")))
        }
    }

    fn string(&mut self) -> Result<&'a str, IrError> {
        match self.next() {
            Some(Tok::Str(s)) => Ok(s),
            other => Err(self.err(format!("expected a string, found {}", describe(other)))),
        }
    }

    fn punct(&mut self, c: char) -> Result<(), IrError> {
        match self.next() {
            Some(Tok::Punct(p)) if *p == c => Ok(()),
            other => Err(self.err(format!("expected `{c}`, found {}", describe(other)))),
        }
    }

    fn eat_word(&mut self, w: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Word(x)) if x == w) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn finish(&self) -> Result<(), IrError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.err(format!("unexpected {}", describe(self.peek()))))
        }
    }
}

fn describe(t: Option<&Tok>) -> String {
    match t {
        None => "end of line".into(),
        Some(Tok::Word(w)) => format!("`{w}`"),
        Some(Tok::Str(s)) => format!("string \"{s}\""),
        Some(Tok::Punct(c)) => format!("`{c}`"),
    }
}

fn parse_statement(toks: &[Tok], physical_line: usize) -> Result<IrStatement, IrError> {
    let mut toks = toks;
    let mut line = physical_line;
    if toks.len() >= 2 {
        if let (Tok::Word(kw), Tok::Word(n)) = (&toks[toks.len() - 2], &toks[toks.len() - 1]) {
            if kw == "line" {
                line = n
                    .parse::<usize>()
                    .ok()
                    .filter(|n| *n > 0)
                    .ok_or_else(|| IrError {
                        line: physical_line,
                        message: format!("invalid line number `{n}`"),
                    })?;
                toks = &toks[..toks.len() - 2];
            }
        }
    }
    let mut c = LineCursor {
        toks,
        pos: 0,
        line: physical_line,
    };
    let kind = if c.eat_word("return") {
        let l = if c.at_end() { None } else { Some(c.local()?) };
        StmtKind::Return(l)
    } else if c.eat_word("call") {
        parse_call(&mut c, None)?
    } else {
        let lhs = c.word()?;
        c.punct('=')?;
        if let Some((base, field)) = split_field(lhs) {
            let src = c.local()?;
            StmtKind::FieldStore { base, field, src }
        } else if is_local(lhs) {
            let dst = lhs.to_string();
            match c.peek() {
                Some(Tok::Word(w)) if w == "param" => {
                    c.pos += 1;
                    let n = c.word()?;
                    let index = n
                        .parse::<usize>()
                        .map_err(|_| c.err(format!("invalid parameter index `{n}`")))?;
                    StmtKind::IdentityParam { local: dst, index }
                }
                Some(Tok::Word(w)) if w == "this" => {
                    c.pos += 1;
                    StmtKind::IdentityThis { local: dst }
                }
                Some(Tok::Word(w)) if w == "const" => {
                    c.pos += 1;
                    StmtKind::Const {
                        local: dst,
                        value: c.string()?.to_string(),
                    }
                }
                Some(Tok::Word(w)) if w == "call" => {
                    c.pos += 1;
                    parse_call(&mut c, Some(dst))?
                }
                Some(Tok::Word(w)) => {
                    let w = w.clone();
                    c.pos += 1;
                    if is_local(&w) {
                        StmtKind::Copy { dst, src: w }
                    } else if let Some((base, field)) = split_field(&w) {
                        StmtKind::FieldLoad { dst, base, field }
                    } else {
                        return Err(c.err(format!("`{w}` is neither a local nor a field access")));
                    }
                }
                other => return Err(c.err(format!("unexpected {}", describe(other)))),
            }
        } else {
            return Err(c.err(format!("`{lhs}` is not a valid assignment target")));
        }
    };
    c.finish()?;
    Ok(IrStatement { kind, line })
}

fn parse_call(c: &mut LineCursor<'_>, result: Option<String>) -> Result<StmtKind, IrError> {
    let text = c.string()?;
    let callee = MethodSignature::parse(text).map_err(|e| c.err(e.to_string()))?;
    let receiver = if c.eat_word("on") { Some(c.local()?) } else { None };
    c.punct('(')?;
    let mut args = Vec::new();
    if !matches!(c.peek(), Some(Tok::Punct(')'))) {
        loop {
            args.push(c.local()?);
            if matches!(c.peek(), Some(Tok::Punct(','))) {
                c.pos += 1;
                continue;
            }
            break;
        }
    }
    c.punct(')')?;
    if args.len() != callee.arity() {
        return Err(c.err(format!(
            "call to `{callee}` passes {} argument(s) but the signature has {}",
            args.len(),
            callee.arity()
        )));
    }
    Ok(StmtKind::Invoke {
        callee,
        receiver,
        args,
        result,
    })
}

enum State {
    Top,
    Class(IrClass),
    Method(IrClass, IrMethod),
}

pub fn parse_ir(text: &str) -> Result<IrProgram, IrError> {
    let mut classes = Vec::new();
    let mut state = State::Top;
    let mut seen = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let toks = tokenize_line(raw, line)?;
        if toks.is_empty() {
            continue;
        }
        let mut c = LineCursor {
            toks: &toks,
            pos: 0,
            line,
        };
        state = match state {
            State::Top => {
                if !c.eat_word("class") {
                    return Err(c.err(format!("expected `class`, found {}", describe(c.peek()))));
                }
                let name = c.word()?;
                if !is_qual_name(name) {
                    return Err(c.err(format!("invalid class name `{name}`")));
                }
                let mut class = IrClass {
                    name: name.to_string(),
                    source_file: None,
                    super_name: None,
                    methods: Vec::new(),
                };
                if c.eat_word("file") {
                    class.source_file = Some(c.string()?.to_string());
                }
                if c.eat_word("extends") {
                    class.super_name = Some(c.word()?.to_string());
                }
                c.punct('{')?;
                if matches!(c.peek(), Some(Tok::Punct('}'))) {
                    c.pos += 1;
                    c.finish()?;
                    classes.push(class);
                    State::Top
                } else {
                    c.finish()?;
                    State::Class(class)
                }
            }
            State::Class(class) => {
                if matches!(c.peek(), Some(Tok::Punct('}'))) {
                    c.pos += 1;
                    c.finish()?;
                    classes.push(class);
                    State::Top
                } else {
                    if !c.eat_word("method") {
                        return Err(c.err(format!("expected `method` or `}}`, found {}", describe(c.peek()))));
                    }
                    let text = c.string()?;
                    let mut signature = MethodSignature::parse(text).map_err(|e| c.err(e.to_string()))?;
                    if signature.declaring_class != class.name {
                        return Err(c.err(format!(
                            "method `{signature}` is declared in class `{}`",
                            class.name
                        )));
                    }
                    if c.eat_word("static") {
                        signature.is_static = true;
                    }
                    if !seen.insert(signature.clone()) {
                        return Err(c.err(format!("duplicate method `{signature}`")));
                    }
                    c.punct('{')?;
                    let method = IrMethod {
                        signature,
                        statements: Vec::new(),
                    };
                    if matches!(c.peek(), Some(Tok::Punct('}'))) {
                        c.pos += 1;
                        c.finish()?;
                        let mut class = class;
                        class.methods.push(method);
                        State::Class(class)
                    } else {
                        c.finish()?;
                        State::Method(class, method)
                    }
                }
            }
            State::Method(mut class, mut method) => {
                if toks == [Tok::Punct('}')] {
                    class.methods.push(method);
                    State::Class(class)
                } else {
                    method.statements.push(parse_statement(&toks, line)?);
                    State::Method(class, method)
                }
            }
        };
    }
    match state {
        State::Top => IrProgram::from_classes(classes),
        _ => Err(IrError {
            line: text.lines().count(),
            message: "unexpected end of input: missing `}`".into(),
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Note,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub method: String,
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Note => "note",
        };
        write!(f, "{sev}: line {}: {} (in `{}`)", self.line, self.message, self.method)
    }
}

/// Structural checks that parsing does not enforce. Opaque calls are legal,
/// so calls to undefined methods of in-program classes are notes only.
pub fn validate(program: &IrProgram) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let class_names: BTreeSet<&str> = program.classes.iter().map(|c| c.name.as_str()).collect();
    for class in &program.classes {
        for m in &class.methods {
            let mut diag = |severity, line, message: String| {
                out.push(Diagnostic {
                    severity,
                    method: m.signature.to_string(),
                    line,
                    message,
                })
            };
            let mut defined: BTreeSet<&str> = BTreeSet::new();
            let mut params_seen = BTreeSet::new();
            let mut this_seen = false;
            for s in &m.statements {
                for u in s.kind.uses() {
                    if !defined.contains(u) {
                        diag(Severity::Error, s.line, format!("local `{u}` is used before definition"));
                    }
                }
                match &s.kind {
                    StmtKind::IdentityParam { index, .. } => {
                        if !params_seen.insert(*index) {
                            diag(Severity::Error, s.line, format!("duplicate identity for param {index}"));
                        }
                        if *index >= m.signature.arity() {
                            diag(
                                Severity::Error,
                                s.line,
                                format!("param {index} is out of range for arity {}", m.signature.arity()),
                            );
                        }
                    }
                    StmtKind::IdentityThis { .. } => {
                        if this_seen {
                            diag(Severity::Error, s.line, "duplicate identity for this".into());
                        }
                        this_seen = true;
                        if m.signature.is_static {
                            diag(Severity::Error, s.line, "static method has no `this`".into());
                        }
                    }
                    StmtKind::Invoke { callee, .. } => {
                        if class_names.contains(callee.declaring_class.as_str()) && program.lookup(callee).is_none() {
                            diag(
                                Severity::Note,
                                s.line,
                                format!("call to `{callee}`, which is not defined in the program; treated as opaque"),
                            );
                        }
                    }
                    _ => {}
                }
                if let Some(d) = s.kind.def() {
                    defined.insert(d);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"; sample
class com.acme.Api file "src/Api.kt" {
  method "com.acme.Api: java.lang.String handle(java.lang.String)" {
    l0 = this
    l1 = param 0
    l2 = call "com.acme.Io: java.lang.String read()" ()
    l3 = call "com.acme.Db: void run(java.lang.String)" on l0 (l2) line 42
    l0.f = l2
    l4 = l0.f
    com.acme.Cfg.secret = l4
    l5 = com.acme.Cfg.secret
    l6 = const "x \"y\""
    l7 = l6
    return l7
  }
  method "com.acme.Api: void <init>()" {
    return
  }
}
class com.acme.Empty {
}
"#;

    #[test]
    fn parses_sample() {
        let p = parse_ir(SAMPLE).unwrap();
        assert_eq!(p.classes.len(), 2);
        let m = &p.classes[0].methods[0];
        assert_eq!(m.statements.len(), 11);
        assert_eq!(m.statements[0].line, 4);
        assert_eq!(m.statements[3].line, 42);
        match &m.statements[2].kind {
            StmtKind::Invoke { result, args, receiver, .. } => {
                assert_eq!(result.as_deref(), Some("l2"));
                assert!(args.is_empty());
                assert!(receiver.is_none());
            }
            other => panic!("{other:?}"),
        }
        assert!(m.statements[2].kind.is_static_invoke());
        assert_eq!(
            m.statements[7].kind,
            StmtKind::FieldLoad {
                dst: "l5".into(),
                base: FieldBase::Class("com.acme.Cfg".into()),
                field: "secret".into()
            }
        );
        assert!(validate(&p).is_empty());
    }

    #[test]
    fn round_trip() {
        let p = parse_ir(SAMPLE).unwrap();
        let printed = p.to_string();
        let again = parse_ir(&printed).unwrap();
        assert_eq!(p, again);
        assert_eq!(printed, again.to_string());
    }

    #[test]
    fn arity_mismatch() {
        let text = "class A {\n method \"A: void f()\" {\n  call \"B: void g(int)\" ()\n }\n}\n";
        let err = parse_ir(text).unwrap_err();
        assert_eq!(err.line, 3);
        assert!(err.message.contains("argument"));
    }

    #[test]
    fn duplicate_and_wrong_class() {
        let dup = "class A {\n method \"A: void f()\" {\n }\n method \"A: void f()\" {\n }\n}\n";
        assert!(parse_ir(dup).unwrap_err().message.contains("duplicate"));
        let wrong = "class A {\n method \"B: void f()\" {\n }\n}\n";
        assert!(parse_ir(wrong).is_err());
        assert!(parse_ir("class A {\n").is_err());
    }

    #[test]
    fn diagnostics() {
        let text = "class A {\n method \"A: void f(int)\" {\n  l1 = l0\n  l2 = param 0\n  l3 = param 0\n  call \"A: void g()\" ()\n }\n}\n";
        let p = parse_ir(text).unwrap();
        let d = validate(&p);
        assert_eq!(d.iter().filter(|d| d.severity == Severity::Error).count(), 2);
        assert_eq!(d.iter().filter(|d| d.severity == Severity::Note).count(), 1);
    }

    #[test]
    fn uri_fallback() {
        assert_eq!(class_uri("com.acme.B", None), "com/acme/B.class");
        assert_eq!(class_uri("com.acme.B", Some("x/y.kt")), "x/y.kt");
    }
}
