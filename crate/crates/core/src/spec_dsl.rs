//! The taint specification language and its normalization into bytecode-level
//! match sets.
//!
//! ```text
//! aliases { ArrayList = java.util.ArrayList }
//!
//! query "sqli" {
//!   message "user input reaches a SQL statement"
//!   source { property getter class "com.acme.Req" name "query" type "String" out return }
//!   sink   { method "com.acme.Db: void run(java.lang.String)" in param1 }
//! }
//! ```

use std::fmt;
use std::fmt::Write as _;

use thiserror::Error;

use crate::engine::AnalysisOptions;
use crate::kotlin_types::{parse_kotlin_type, KotlinTypeExpr, TypeAliasTable};
use crate::sig_synth::{
    companion_wrapper, default_variants, extension_property_getter, extension_signature,
    infix_signature, internal_mangle, operator_signature, property_accessors, sealed_ctor_variant,
    split_signature, top_level_class, AccessorKind, DefaultKind, MethodSignature, Receiver,
    SignatureVariant, SlotRef, SynthError, TypeLowering,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct SpecError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("query `{query}`, rule at line {line}: {kind}")]
pub struct NormalizeError {
    pub query: String,
    pub line: usize,
    pub kind: NormalizeErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NormalizeErrorKind {
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("slot {slot} is out of range for `{signature}`")]
    SlotOutOfRange { slot: SlotRef, signature: String },
    #[error("top-level members have no `this`")]
    ThisOnStatic,
    #[error("`sealed` applies only to constructors")]
    SealedNonConstructor,
    #[error("`internal` does not apply to top-level members")]
    InternalTopLevel,
    #[error("default-argument variants of extension functions are not supported")]
    ExtensionDefaults,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Source,
    Sink,
    Sanitizer,
    Propagator,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Source => "source",
            Role::Sink => "sink",
            Role::Sanitizer => "sanitizer",
            Role::Propagator => "propagator",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Descriptor {
    Method {
        signature: String,
    },
    Property {
        setter: bool,
        class: String,
        name: String,
        ty: String,
    },
    TopLevel {
        package: String,
        file: String,
        method: String,
    },
    ExtensionFunction {
        at: String,
        receiver: String,
        name: String,
        params: Vec<String>,
        returns: String,
    },
    ExtensionProperty {
        at: String,
        receiver: String,
        name: String,
        ty: String,
        setter: bool,
    },
    CompanionExtension {
        class: String,
        companion: Option<String>,
        at: String,
        name: String,
        params: Vec<String>,
        returns: String,
    },
    Infix {
        receiver: String,
        name: String,
        params: Vec<String>,
        returns: String,
    },
    Operator {
        symbol: String,
        receiver: String,
        operands: Vec<String>,
        returns: String,
    },
}

impl Descriptor {
    pub fn is_extension(&self) -> bool {
        matches!(
            self,
            Descriptor::ExtensionFunction { .. }
                | Descriptor::ExtensionProperty { .. }
                | Descriptor::CompanionExtension { .. }
        )
    }

    /// Kotlin constructs beyond plain signatures, types, aliases, defaults
    /// and extensions.
    fn is_synthesized_construct(&self) -> bool {
        matches!(
            self,
            Descriptor::Property { .. }
                | Descriptor::TopLevel { .. }
                | Descriptor::Infix { .. }
                | Descriptor::Operator { .. }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DefaultsAttr {
    Kind(DefaultKind),
    Disabled,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodRule {
    pub role: Role,
    pub descriptor: Descriptor,
    pub defaults: Option<DefaultsAttr>,
    pub sealed: bool,
    pub internal: Option<String>,
    pub in_slots: Vec<SlotRef>,
    pub out_slots: Vec<SlotRef>,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaintQuery {
    pub id: String,
    pub message: String,
    /// Rules in the order written; `rules_with_role` filters.
    pub rules: Vec<MethodRule>,
    pub line: usize,
}

impl TaintQuery {
    pub fn rules_with_role(&self, role: Role) -> impl Iterator<Item = &MethodRule> {
        self.rules.iter().filter(move |r| r.role == role)
    }

    pub fn sources(&self) -> impl Iterator<Item = &MethodRule> {
        self.rules_with_role(Role::Source)
    }

    pub fn sinks(&self) -> impl Iterator<Item = &MethodRule> {
        self.rules_with_role(Role::Sink)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Spec {
    pub aliases: TypeAliasTable,
    pub queries: Vec<TaintQuery>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    Str(String),
    Punct(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '$' | '.' | '-' | '[' | ']' | '*')
}

fn tokenize(text: &str) -> Result<Vec<Token>, SpecError> {
    let mut out = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let chars: Vec<char> = raw_line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let column = i + 1;
            if c.is_whitespace() {
                i += 1;
            } else if c == '#' {
                break;
            } else if c == '"' {
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => {
                            return Err(SpecError {
                                line,
                                column,
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
                                    return Err(SpecError {
                                        line,
                                        column: i + 1,
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
                out.push(Token {
                    tok: Tok::Str(s),
                    line,
                    column,
                });
            } else if matches!(c, '{' | '}' | '(' | ')' | ',' | '=') {
                out.push(Token {
                    tok: Tok::Punct(c),
                    line,
                    column,
                });
                i += 1;
            } else if is_word_char(c) {
                let start = i;
                while i < chars.len() && is_word_char(chars[i]) {
                    i += 1;
                }
                out.push(Token {
                    tok: Tok::Word(chars[start..i].iter().collect()),
                    line,
                    column,
                });
            } else {
                return Err(SpecError {
                    line,
                    column,
                    message: format!("unexpected character `{c}`"),
                });
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    eof: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn here(&self) -> (usize, usize) {
        self.peek().map(|t| (t.line, t.column)).unwrap_or(self.eof)
    }

    fn error_here(&self, message: impl Into<String>) -> SpecError {
        let (line, column) = self.here();
        SpecError {
            line,
            column,
            message: message.into(),
        }
    }

    fn describe_next(&self) -> String {
        match self.peek().map(|t| &t.tok) {
            None => "end of input".into(),
            Some(Tok::Word(w)) => format!("`{w}`"),
            Some(Tok::Str(s)) => format!("string \"{s}\""),
            Some(Tok::Punct(c)) => format!("`{c}`"),
        }
    }

    fn peek_word(&self) -> Option<&str> {
        match self.peek().map(|t| &t.tok) {
            Some(Tok::Word(w)) => Some(w),
            _ => None,
        }
    }

    fn peek_punct(&self, c: char) -> bool {
        matches!(self.peek().map(|t| &t.tok), Some(Tok::Punct(p)) if *p == c)
    }

    fn eat_word(&mut self, w: &str) -> bool {
        if self.peek_word() == Some(w) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_punct(&mut self, c: char) -> bool {
        if self.peek_punct(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_word(&mut self, w: &str) -> Result<(), SpecError> {
        if self.eat_word(w) {
            Ok(())
        } else {
            Err(self.error_here(format!("expected `{w}`, found {}", self.describe_next())))
        }
    }

    fn expect_punct(&mut self, c: char) -> Result<(), SpecError> {
        if self.eat_punct(c) {
            Ok(())
        } else {
            Err(self.error_here(format!("expected `{c}`, found {}", self.describe_next())))
        }
    }

    fn any_word(&mut self) -> Result<String, SpecError> {
        match self.peek_word() {
            Some(w) => {
                let w = w.to_string();
                self.pos += 1;
                Ok(w)
            }
            None => Err(self.error_here(format!("expected a name, found {}", self.describe_next()))),
        }
    }

    fn string(&mut self) -> Result<String, SpecError> {
        match self.peek().map(|t| &t.tok) {
            Some(Tok::Str(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error_here(format!("expected a string, found {}", self.describe_next()))),
        }
    }

    fn keyword_string(&mut self, kw: &str) -> Result<String, SpecError> {
        self.expect_word(kw)?;
        self.string()
    }

    /// `( STRING ("," STRING)* )`, possibly empty.
    fn string_list(&mut self) -> Result<Vec<String>, SpecError> {
        self.expect_punct('(')?;
        let mut out = Vec::new();
        if self.eat_punct(')') {
            return Ok(out);
        }
        loop {
            out.push(self.string()?);
            if self.eat_punct(',') {
                continue;
            }
            self.expect_punct(')')?;
            return Ok(out);
        }
    }

    fn check_type(&self, text: &str, at: (usize, usize)) -> Result<(), SpecError> {
        parse_kotlin_type(text).map(|_| ()).map_err(|e| SpecError {
            line: at.0,
            column: at.1,
            message: e.to_string(),
        })
    }

    fn spec(&mut self) -> Result<Spec, SpecError> {
        let mut spec = Spec::default();
        let mut saw_aliases = false;
        while let Some(tok) = self.peek() {
            let (line, column) = (tok.line, tok.column);
            match self.peek_word() {
                Some("aliases") if !saw_aliases && spec.queries.is_empty() => {
                    saw_aliases = true;
                    self.pos += 1;
                    spec.aliases = self.alias_block(line, column)?;
                }
                Some("query") => {
                    self.pos += 1;
                    let q = self.query(line)?;
                    if spec.queries.iter().any(|other| other.id == q.id) {
                        return Err(SpecError {
                            line,
                            column,
                            message: format!("duplicate query id `{}`", q.id),
                        });
                    }
                    spec.queries.push(q);
                }
                _ => {
                    return Err(self.error_here(format!(
                        "expected `aliases` or `query`, found {}",
                        self.describe_next()
                    )))
                }
            }
        }
        Ok(spec)
    }

    fn alias_block(&mut self, line: usize, column: usize) -> Result<TypeAliasTable, SpecError> {
        self.expect_punct('{')?;
        let mut pairs: Vec<(String, String)> = Vec::new();
        while !self.eat_punct('}') {
            let at = self.here();
            let name = self.any_word()?;
            self.expect_punct('=')?;
            let target = match self.peek().map(|t| &t.tok) {
                Some(Tok::Str(_)) => self.string()?,
                _ => self.any_word()?,
            };
            if pairs.iter().any(|(n, _)| *n == name) {
                return Err(SpecError {
                    line: at.0,
                    column: at.1,
                    message: format!("type alias `{name}` is defined twice"),
                });
            }
            pairs.push((name, target));
        }
        TypeAliasTable::from_pairs(pairs).map_err(|e| SpecError {
            line,
            column,
            message: e.to_string(),
        })
    }

    fn query(&mut self, line: usize) -> Result<TaintQuery, SpecError> {
        let id = self.string()?;
        self.expect_punct('{')?;
        let mut query = TaintQuery {
            id,
            message: String::new(),
            rules: Vec::new(),
            line,
        };
        loop {
            if self.eat_punct('}') {
                break;
            }
            let (rline, _) = self.here();
            let role = match self.peek_word() {
                Some("message") => {
                    self.pos += 1;
                    query.message = self.string()?;
                    continue;
                }
                Some("source") => Role::Source,
                Some("sink") => Role::Sink,
                Some("sanitizer") => Role::Sanitizer,
                Some("propagator") => Role::Propagator,
                _ => {
                    return Err(self.error_here(format!(
                        "expected a rule role (source, sink, sanitizer, propagator) or `}}`, found {}",
                        self.describe_next()
                    )))
                }
            };
            self.pos += 1;
            query.rules.push(self.rule(role, rline)?);
        }
        if query.sources().next().is_none() {
            return Err(SpecError {
                line,
                column: 1,
                message: format!("query {} has no source", query.id),
            });
        }
        if query.sinks().next().is_none() {
            return Err(SpecError {
                line,
                column: 1,
                message: format!("query {} has no sink", query.id),
            });
        }
        if query.message.is_empty() {
            query.message = query.id.clone();
        }
        Ok(query)
    }

    fn descriptor(&mut self) -> Result<Descriptor, SpecError> {
        let at = self.here();
        let kw = self.any_word()?;
        let d = match kw.as_str() {
            "method" => Descriptor::Method {
                signature: self.string()?,
            },
            "property" => {
                let setter = if self.eat_word("getter") {
                    false
                } else if self.eat_word("setter") {
                    true
                } else {
                    return Err(self.error_here("expected `getter` or `setter`"));
                };
                Descriptor::Property {
                    setter,
                    class: self.keyword_string("class")?,
                    name: self.keyword_string("name")?,
                    ty: self.keyword_string("type")?,
                }
            }
            "topLevel" => Descriptor::TopLevel {
                package: self.keyword_string("package")?,
                file: self.keyword_string("file")?,
                method: self.keyword_string("method")?,
            },
            "extensionFunction" => {
                let at = self.keyword_string("at")?;
                let receiver = self.keyword_string("receiver")?;
                let name = self.keyword_string("name")?;
                self.expect_word("params")?;
                let params = self.string_list()?;
                let returns = self.keyword_string("returns")?;
                Descriptor::ExtensionFunction {
                    at,
                    receiver,
                    name,
                    params,
                    returns,
                }
            }
            "extensionProperty" => {
                let at = self.keyword_string("at")?;
                let receiver = self.keyword_string("receiver")?;
                let name = self.keyword_string("name")?;
                let ty = self.keyword_string("type")?;
                let setter = if self.eat_word("getter") {
                    false
                } else {
                    self.eat_word("setter")
                };
                Descriptor::ExtensionProperty {
                    at,
                    receiver,
                    name,
                    ty,
                    setter,
                }
            }
            "companionExtension" => {
                let class = self.keyword_string("class")?;
                let companion = if self.eat_word("companion") {
                    Some(self.string()?)
                } else {
                    None
                };
                let at = self.keyword_string("at")?;
                let name = self.keyword_string("name")?;
                self.expect_word("params")?;
                let params = self.string_list()?;
                let returns = self.keyword_string("returns")?;
                Descriptor::CompanionExtension {
                    class,
                    companion,
                    at,
                    name,
                    params,
                    returns,
                }
            }
            "infix" => {
                let receiver = self.keyword_string("receiver")?;
                let name = self.keyword_string("name")?;
                self.expect_word("param")?;
                let mut params = vec![self.string()?];
                while self.eat_punct(',') {
                    params.push(self.string()?);
                }
                let returns = self.keyword_string("returns")?;
                Descriptor::Infix {
                    receiver,
                    name,
                    params,
                    returns,
                }
            }
            "operator" => {
                let symbol = self.string()?;
                let receiver = self.keyword_string("receiver")?;
                let operands = if self.eat_word("operands") {
                    self.string_list()?
                } else {
                    Vec::new()
                };
                let returns = self.keyword_string("returns")?;
                Descriptor::Operator {
                    symbol,
                    receiver,
                    operands,
                    returns,
                }
            }
            other => {
                return Err(SpecError {
                    line: at.0,
                    column: at.1,
                    message: format!("unknown descriptor `{other}`"),
                })
            }
        };
        self.check_descriptor_types(&d, at)?;
        Ok(d)
    }

    fn check_descriptor_types(&self, d: &Descriptor, at: (usize, usize)) -> Result<(), SpecError> {
        let sig_error = |e: crate::sig_synth::SignatureParseError| SpecError {
            line: at.0,
            column: at.1,
            message: e.to_string(),
        };
        let mut types: Vec<&str> = Vec::new();
        let owned;
        match d {
            Descriptor::Method { signature } => {
                owned = split_signature(signature, true).map_err(sig_error)?;
                types.push(&owned.return_type);
                types.extend(owned.params.iter().map(String::as_str));
            }
            Descriptor::TopLevel { method, .. } => {
                owned = split_signature(method, false).map_err(sig_error)?;
                types.push(&owned.return_type);
                types.extend(owned.params.iter().map(String::as_str));
            }
            Descriptor::Property { ty, .. } => types.push(ty),
            Descriptor::ExtensionFunction {
                receiver,
                params,
                returns,
                ..
            } => {
                types.push(receiver);
                types.push(returns);
                types.extend(params.iter().map(String::as_str));
            }
            Descriptor::ExtensionProperty { receiver, ty, .. } => {
                types.push(receiver);
                types.push(ty);
            }
            Descriptor::CompanionExtension {
                params, returns, ..
            } => {
                types.push(returns);
                types.extend(params.iter().map(String::as_str));
            }
            Descriptor::Infix {
                receiver,
                params,
                returns,
                ..
            } => {
                types.push(receiver);
                types.push(returns);
                types.extend(params.iter().map(String::as_str));
            }
            Descriptor::Operator {
                receiver,
                operands,
                returns,
                ..
            } => {
                types.push(receiver);
                types.push(returns);
                types.extend(operands.iter().map(String::as_str));
            }
        }
        for t in types {
            self.check_type(t, at)?;
        }
        Ok(())
    }

    fn slot(&mut self) -> Result<SlotRef, SpecError> {
        let at = self.here();
        let word = self.any_word()?;
        let err = |message: String| SpecError {
            line: at.0,
            column: at.1,
            message,
        };
        let one_based = |n: &str| -> Result<usize, SpecError> {
            match n.parse::<usize>() {
                Ok(0) => Err(err("parameter numbers start at 1".into())),
                Ok(k) => Ok(k - 1),
                Err(_) => Err(err(format!("invalid parameter number `{n}`"))),
            }
        };
        match word.as_str() {
            "return" => Ok(SlotRef::Return),
            "this" => Ok(SlotRef::This(None)),
            "this[dispatch]" => Ok(SlotRef::This(Some(Receiver::Dispatch))),
            "this[extension]" => Ok(SlotRef::This(Some(Receiver::Extension))),
            "param" => {
                let n = self.any_word()?;
                Ok(SlotRef::Param(one_based(&n)?))
            }
            w if w.starts_with("param") => Ok(SlotRef::Param(one_based(&w["param".len()..])?)),
            other => Err(err(format!("unknown slot `{other}`"))),
        }
    }

    fn rule(&mut self, role: Role, line: usize) -> Result<MethodRule, SpecError> {
        self.expect_punct('{')?;
        let descriptor = self.descriptor()?;
        let mut rule = MethodRule {
            role,
            descriptor,
            defaults: None,
            sealed: false,
            internal: None,
            in_slots: Vec::new(),
            out_slots: Vec::new(),
            line,
        };
        loop {
            if self.eat_punct('}') {
                break;
            }
            let at = self.here();
            let kw = self.any_word()?;
            match kw.as_str() {
                "defaults" => {
                    let kind = match self.any_word()?.as_str() {
                        "member" => DefaultKind::Member,
                        "topLevel" => DefaultKind::TopLevel,
                        "constructor" => DefaultKind::Constructor,
                        other => {
                            return Err(SpecError {
                                line: at.0,
                                column: at.1,
                                message: format!(
                                    "unknown defaults kind `{other}` (expected member, topLevel, constructor)"
                                ),
                            })
                        }
                    };
                    rule.defaults = Some(DefaultsAttr::Kind(kind));
                }
                "no-defaults" => rule.defaults = Some(DefaultsAttr::Disabled),
                "sealed" => rule.sealed = true,
                "internal" => rule.internal = Some(self.string()?),
                "in" | "out" => {
                    let mut slots = vec![self.slot()?];
                    while self.eat_punct(',') {
                        slots.push(self.slot()?);
                    }
                    if kw == "in" {
                        rule.in_slots.extend(slots);
                    } else {
                        rule.out_slots.extend(slots);
                    }
                }
                other => {
                    return Err(SpecError {
                        line: at.0,
                        column: at.1,
                        message: format!("unknown keyword `{other}`"),
                    })
                }
            }
        }
        let fail = |message: String| SpecError {
            line,
            column: 1,
            message,
        };
        match role {
            Role::Source if rule.out_slots.is_empty() => {
                return Err(fail("source rule needs an `out` slot".into()))
            }
            Role::Sink | Role::Sanitizer if rule.in_slots.is_empty() => {
                return Err(fail(format!("{role} rule needs an `in` slot")))
            }
            Role::Propagator if rule.in_slots.is_empty() || rule.out_slots.is_empty() => {
                return Err(fail("propagator rule needs both `in` and `out` slots".into()))
            }
            _ => {}
        }
        if !rule.descriptor.is_extension()
            && rule
                .in_slots
                .iter()
                .chain(&rule.out_slots)
                .any(|s| matches!(s, SlotRef::This(Some(_))))
        {
            return Err(fail(
                "qualified `this[...]` slots are only allowed on extension descriptors".into(),
            ));
        }
        Ok(rule)
    }
}

pub fn parse_spec(text: &str) -> Result<Spec, SpecError> {
    let tokens = tokenize(text)?;
    let eof_line = text.lines().count().max(1);
    let mut parser = Parser {
        tokens,
        pos: 0,
        eof: (eof_line, 1),
    };
    parser.spec()
}

/// Parses a standalone alias file (`aliases { ... }`).
pub fn parse_alias_file(text: &str) -> Result<TypeAliasTable, SpecError> {
    let spec_text_ok = parse_spec(text);
    match spec_text_ok {
        Ok(spec) if spec.queries.is_empty() => Ok(spec.aliases),
        Ok(_) => Err(SpecError {
            line: 1,
            column: 1,
            message: "alias files may not contain queries".into(),
        }),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedVariant {
    pub variant: SignatureVariant,
    pub in_slots: Vec<SlotRef>,
    pub out_slots: Vec<SlotRef>,
}

impl NormalizedVariant {
    pub fn signature(&self) -> &MethodSignature {
        &self.variant.signature
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedRule {
    pub role: Role,
    /// Position of the rule within its query, counting all roles.
    pub index: usize,
    pub line: usize,
    pub variants: Vec<NormalizedVariant>,
}

impl NormalizedRule {
    /// First variant whose signature matches the call; the base variant
    /// comes first.
    pub fn match_call(&self, callee: &MethodSignature) -> Option<&NormalizedVariant> {
        self.variants.iter().find(|v| v.signature().matches(callee))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedQuery {
    pub id: String,
    pub message: String,
    pub rules: Vec<NormalizedRule>,
    pub warnings: Vec<String>,
}

pub fn normalize(query: &TaintQuery, aliases: &TypeAliasTable) -> Result<NormalizedQuery, NormalizeError> {
    normalize_with(query, aliases, &AnalysisOptions::default())
}

pub fn normalize_with(
    query: &TaintQuery,
    aliases: &TypeAliasTable,
    options: &AnalysisOptions,
) -> Result<NormalizedQuery, NormalizeError> {
    let lowering = TypeLowering {
        aliases: (!options.no_alias_resolution).then_some(aliases),
        map_types: !options.no_type_mapping,
    };
    let mut out = NormalizedQuery {
        id: query.id.clone(),
        message: query.message.clone(),
        rules: Vec::new(),
        warnings: Vec::new(),
    };
    for (index, rule) in query.rules.iter().enumerate() {
        let wrap = |kind: NormalizeErrorKind| NormalizeError {
            query: query.id.clone(),
            line: rule.line,
            kind,
        };
        let variants = normalize_rule(rule, &lowering, options, &mut out.warnings).map_err(wrap)?;
        out.rules.push(NormalizedRule {
            role: rule.role,
            index,
            line: rule.line,
            variants,
        });
    }
    Ok(out)
}

pub fn normalize_spec(spec: &Spec, options: &AnalysisOptions) -> Result<Vec<NormalizedQuery>, NormalizeError> {
    spec.queries
        .iter()
        .map(|q| normalize_with(q, &spec.aliases, options))
        .collect()
}

fn ty(text: &str) -> Result<KotlinTypeExpr, NormalizeErrorKind> {
    parse_kotlin_type(text).map_err(|e| NormalizeErrorKind::Synth(e.into()))
}

fn types(texts: &[String]) -> Result<Vec<KotlinTypeExpr>, NormalizeErrorKind> {
    texts.iter().map(|t| ty(t)).collect()
}

fn normalize_rule(
    rule: &MethodRule,
    lowering: &TypeLowering<'_>,
    options: &AnalysisOptions,
    warnings: &mut Vec<String>,
) -> Result<Vec<NormalizedVariant>, NormalizeErrorKind> {
    if options.no_construct_synthesis && rule.descriptor.is_synthesized_construct() {
        return Ok(Vec::new());
    }
    let handle_extension = rule.descriptor.is_extension() && !options.no_extension_handling;
    let mut inferred_kind = DefaultKind::Member;

    let base = match &rule.descriptor {
        Descriptor::Method { signature } => lowering.lower_signature(signature)?,
        Descriptor::Property {
            setter,
            class,
            name,
            ty: t,
        } => {
            let want = if *setter { AccessorKind::Setter } else { AccessorKind::Getter };
            property_accessors(class, name, &ty(t)?, want, lowering)?.remove(0)
        }
        Descriptor::TopLevel {
            package,
            file,
            method,
        } => {
            inferred_kind = DefaultKind::TopLevel;
            let parts = split_signature(method, false).map_err(SynthError::from)?;
            lowering
                .lower_parts(
                    top_level_class(package, file),
                    &parts.return_type,
                    &parts.name,
                    &parts.params,
                )?
                .into_static()
        }
        Descriptor::ExtensionFunction {
            at,
            receiver,
            name,
            params,
            returns,
        } => {
            if handle_extension {
                extension_signature(at, &ty(receiver)?, name, &types(params)?, &ty(returns)?, lowering)
            } else {
                plain_member(at, name, &types(params)?, &ty(returns)?, lowering)
            }
        }
        Descriptor::ExtensionProperty {
            at,
            receiver,
            name,
            ty: t,
            setter,
        } => {
            if *setter {
                return Err(SynthError::ExtensionSetter.into());
            }
            if handle_extension {
                extension_property_getter(at, &ty(receiver)?, name, &ty(t)?, lowering)?
            } else {
                property_accessors(at, name, &ty(t)?, AccessorKind::Getter, lowering)?.remove(0)
            }
        }
        Descriptor::CompanionExtension {
            class,
            companion,
            at,
            name,
            params,
            returns,
        } => {
            if handle_extension {
                let wrapper = KotlinTypeExpr::simple(companion_wrapper(class, companion.as_deref()));
                extension_signature(at, &wrapper, name, &types(params)?, &ty(returns)?, lowering)
            } else {
                plain_member(at, name, &types(params)?, &ty(returns)?, lowering)
            }
        }
        Descriptor::Infix {
            receiver,
            name,
            params,
            returns,
        } => infix_signature(&ty(receiver)?, name, &types(params)?, &ty(returns)?, lowering)?,
        Descriptor::Operator {
            symbol,
            receiver,
            operands,
            returns,
        } => operator_signature(symbol, &ty(receiver)?, &types(operands)?, &ty(returns)?, lowering)?,
    };
    if base.is_constructor {
        inferred_kind = DefaultKind::Constructor;
    }

    let resolve = |slot: SlotRef| -> SlotRef {
        if handle_extension {
            match slot {
                SlotRef::This(None) | SlotRef::This(Some(Receiver::Extension)) => SlotRef::Param(0),
                SlotRef::This(Some(Receiver::Dispatch)) => SlotRef::THIS,
                SlotRef::Param(i) => SlotRef::Param(i + 1),
                SlotRef::Return => SlotRef::Return,
            }
        } else {
            slot.plain()
        }
    };
    let in_slots: Vec<SlotRef> = rule.in_slots.iter().map(|s| resolve(*s)).collect();
    let out_slots: Vec<SlotRef> = rule.out_slots.iter().map(|s| resolve(*s)).collect();
    for slot in in_slots.iter().chain(&out_slots) {
        match slot {
            SlotRef::Param(i) if *i >= base.arity() => {
                return Err(NormalizeErrorKind::SlotOutOfRange {
                    slot: *slot,
                    signature: base.to_string(),
                })
            }
            SlotRef::This(_) if base.is_static => return Err(NormalizeErrorKind::ThisOnStatic),
            _ => {}
        }
    }

    let mut variants = vec![SignatureVariant::base(base.clone())];
    let default_kind = match rule.defaults {
        Some(DefaultsAttr::Disabled) => None,
        Some(DefaultsAttr::Kind(_)) if rule.descriptor.is_extension() => {
            return Err(NormalizeErrorKind::ExtensionDefaults)
        }
        Some(DefaultsAttr::Kind(k)) => Some(k),
        // Extension functions never get a default variant (see crate docs).
        None if rule.descriptor.is_extension() => None,
        None => Some(inferred_kind),
    };
    if let Some(kind) = default_kind {
        if !options.no_default_expansion {
            variants.extend(default_variants(&base, kind).into_iter().skip(1));
        }
    }
    if rule.sealed {
        if !base.is_constructor {
            return Err(NormalizeErrorKind::SealedNonConstructor);
        }
        variants.push(sealed_ctor_variant(&base)?);
    }
    if let Some(module) = &rule.internal {
        if matches!(rule.descriptor, Descriptor::TopLevel { .. }) {
            return Err(NormalizeErrorKind::InternalTopLevel);
        }
        let (variant, warning) = internal_mangle(&base, module);
        warnings.extend(warning);
        variants.push(variant);
    }

    variants
        .into_iter()
        .map(|variant| {
            let remap = |slots: &[SlotRef]| -> Result<Vec<SlotRef>, NormalizeErrorKind> {
                slots
                    .iter()
                    .map(|s| {
                        variant
                            .slot_map
                            .apply(*s)
                            .ok_or_else(|| NormalizeErrorKind::SlotOutOfRange {
                                slot: *s,
                                signature: variant.signature.to_string(),
                            })
                    })
                    .collect()
            };
            Ok(NormalizedVariant {
                in_slots: remap(&in_slots)?,
                out_slots: remap(&out_slots)?,
                variant,
            })
        })
        .collect()
}

/// An extension lowered as if it were an ordinary member of `container`,
/// which is what a Kotlin-unaware specification would describe.
fn plain_member(
    container: &str,
    name: &str,
    params: &[KotlinTypeExpr],
    ret: &KotlinTypeExpr,
    lowering: &TypeLowering<'_>,
) -> MethodSignature {
    MethodSignature::new(
        container,
        lowering.lower(ret),
        name,
        params.iter().map(|p| lowering.lower(p)).collect(),
    )
}

fn slot_list(slots: &[SlotRef]) -> String {
    slots.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

/// Deterministic text rendering of normalized queries, sorted by query id.
pub fn dump_normalized(queries: &[NormalizedQuery]) -> String {
    let mut sorted: Vec<&NormalizedQuery> = queries.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let mut out = String::new();
    for q in sorted {
        let _ = writeln!(out, "query {}", q.id);
        let mut rules: Vec<&NormalizedRule> = q.rules.iter().collect();
        rules.sort_by_key(|r| (r.role, r.index));
        for r in rules {
            let _ = writeln!(out, "  {} #{} (line {})", r.role, r.index, r.line);
            if r.variants.is_empty() {
                let _ = writeln!(out, "    (no variants)");
            }
            for v in &r.variants {
                let _ = writeln!(
                    out,
                    "    [{}] {}  in={} out={}",
                    v.variant.origin,
                    v.variant.signature,
                    slot_list(&v.in_slots),
                    slot_list(&v.out_slots)
                );
            }
        }
        for w in &q.warnings {
            let _ = writeln!(out, "  warning: {w}");
        }
    }
    out
}
