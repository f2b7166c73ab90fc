//! Kotlin source-level types and their bytecode-level names.
//!
//! Users write types the way they appear in Kotlin source (`Int?`,
//! `MutableList<String>`, `(Int, Int) -> Int`). The compiler erases many of
//! them to different JVM names; [`map_type`] performs that erasure so that
//! a specification written against source code matches the bytecode.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Base name used for function types such as `(Int) -> Unit`.
pub const FUNCTION_TYPE_MARKER: &str = "->";

/// Highest arity with a dedicated `FunctionK` interface.
pub const MAX_FIXED_FUNCTION_ARITY: usize = 22;

/// `(kotlin name, non-null bytecode name, nullable bytecode name)`.
pub const BASIC_TYPES: &[(&str, &str, &str)] = &[
    ("Byte", "byte", "java.lang.Byte"),
    ("Short", "short", "java.lang.Short"),
    ("Int", "int", "java.lang.Integer"),
    ("Long", "long", "java.lang.Long"),
    ("Char", "char", "java.lang.Character"),
    ("Float", "float", "java.lang.Float"),
    ("Double", "double", "java.lang.Double"),
    ("Boolean", "boolean", "java.lang.Boolean"),
];

pub const BUILTIN_CLASSES: &[(&str, &str)] = &[
    ("Any", "java.lang.Object"),
    ("Cloneable", "java.lang.Cloneable"),
    ("Comparable", "java.lang.Comparable"),
    ("Enum", "java.lang.Enum"),
    ("Annotation", "java.lang.Annotation"),
    ("CharSequence", "java.lang.CharSequence"),
    ("String", "java.lang.String"),
    ("Number", "java.lang.Number"),
    ("Throwable", "java.lang.Throwable"),
];

pub const PRIMITIVE_ARRAYS: &[(&str, &str)] = &[
    ("ByteArray", "byte[]"),
    ("ShortArray", "short[]"),
    ("IntArray", "int[]"),
    ("LongArray", "long[]"),
    ("CharArray", "char[]"),
    ("FloatArray", "float[]"),
    ("DoubleArray", "double[]"),
    ("BooleanArray", "boolean[]"),
];

/// Read-only and mutable collection interfaces, keyed by Kotlin name.
pub const COLLECTIONS: &[(&str, &str)] = &[
    ("Collection", "java.util.Collection"),
    ("List", "java.util.List"),
    ("Set", "java.util.Set"),
    ("Map", "java.util.Map"),
    ("Map.Entry", "java.util.Map.Entry"),
    ("Iterator", "java.util.Iterator"),
    ("Iterable", "java.lang.Iterable"),
    ("ListIterator", "java.util.ListIterator"),
    ("MutableCollection", "java.util.Collection"),
    ("MutableList", "java.util.List"),
    ("MutableSet", "java.util.Set"),
    ("MutableMap", "java.util.Map"),
    ("MutableMap.Entry", "java.util.Map.Entry"),
    ("MutableIterator", "java.util.Iterator"),
    ("MutableIterable", "java.lang.Iterable"),
    ("MutableListIterator", "java.util.ListIterator"),
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid type `{text}` at column {position}: {message}")]
pub struct TypeParseError {
    pub text: String,
    pub position: usize,
    pub message: String,
}

/// A parsed Kotlin type expression.
///
/// For function types `base` is [`FUNCTION_TYPE_MARKER`], `fn_arity` holds the
/// parameter count and `type_args` holds the parameter types followed by the
/// return type. Equality ignores `raw`.
#[derive(Debug, Clone)]
pub struct KotlinTypeExpr {
    pub raw: String,
    pub base: String,
    pub nullable: bool,
    pub type_args: Vec<KotlinTypeExpr>,
    pub fn_arity: Option<usize>,
}

impl PartialEq for KotlinTypeExpr {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base
            && self.nullable == other.nullable
            && self.fn_arity == other.fn_arity
            && self.type_args == other.type_args
    }
}

impl Eq for KotlinTypeExpr {}

impl KotlinTypeExpr {
    pub fn simple(base: impl Into<String>) -> Self {
        let base = base.into();
        let mut expr = KotlinTypeExpr {
            raw: String::new(),
            base,
            nullable: false,
            type_args: Vec::new(),
            fn_arity: None,
        };
        expr.raw = expr.to_string();
        expr
    }

    pub fn is_function(&self) -> bool {
        self.fn_arity.is_some()
    }

    /// Parameter types of a function type; empty for other types.
    pub fn fn_params(&self) -> &[KotlinTypeExpr] {
        match self.fn_arity {
            Some(n) => &self.type_args[..n],
            None => &[],
        }
    }

    pub fn fn_return(&self) -> Option<&KotlinTypeExpr> {
        self.fn_arity.map(|n| &self.type_args[n])
    }

    /// `_`, `*` and single uppercase letters (generic type variables) match any type.
    pub fn is_wildcard(&self) -> bool {
        is_wildcard_name(&self.base)
    }

    fn with_nullable(&self, nullable: bool) -> Self {
        let mut expr = self.clone();
        expr.nullable = nullable;
        expr
    }

    fn refresh_raw(&mut self) {
        self.raw = self.to_string();
    }
}

impl fmt::Display for KotlinTypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(n) = self.fn_arity {
            if self.nullable {
                f.write_str("(")?;
            }
            f.write_str("(")?;
            for (i, p) in self.type_args[..n].iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{p}")?;
            }
            write!(f, ") -> {}", self.type_args[n])?;
            if self.nullable {
                f.write_str(")?")?;
            }
            return Ok(());
        }
        f.write_str(&self.base)?;
        if !self.type_args.is_empty() {
            f.write_str("<")?;
            for (i, a) in self.type_args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(">")?;
        }
        if self.nullable {
            f.write_str("?")?;
        }
        Ok(())
    }
}

pub fn is_wildcard_name(name: &str) -> bool {
    let name = name.trim_end_matches("[]");
    name == "_" || name == "*" || is_type_variable(name)
}

fn is_type_variable(name: &str) -> bool {
    let mut chars = name.chars();
    matches!((chars.next(), chars.next()), (Some(c), None) if c.is_ascii_uppercase())
}

struct TypeParser<'a> {
    text: &'a str,
    chars: Vec<(usize, char)>,
    pos: usize,
}

impl<'a> TypeParser<'a> {
    fn new(text: &'a str) -> Self {
        TypeParser {
            text,
            chars: text.char_indices().collect(),
            pos: 0,
        }
    }

    fn error(&self, message: impl Into<String>) -> TypeParseError {
        TypeParseError {
            text: self.text.to_string(),
            position: self.pos + 1,
            message: message.into(),
        }
    }

    fn byte_offset(&self) -> usize {
        self.chars
            .get(self.pos)
            .map(|(i, _)| *i)
            .unwrap_or(self.text.len())
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|(_, c)| *c)
    }

    fn peek_at(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.pos + ahead).map(|(_, c)| *c)
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), TypeParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{c}`")))
        }
    }

    fn eat_arrow(&mut self) -> bool {
        self.skip_ws();
        if self.peek() == Some('-') && self.peek_at(1) == Some('>') {
            self.pos += 2;
            true
        } else {
            false
        }
    }

    fn parse_type(&mut self, in_function: bool) -> Result<KotlinTypeExpr, TypeParseError> {
        self.skip_ws();
        let start = self.byte_offset();
        let mut expr = match self.peek() {
            Some('(') => self.parse_parenthesized(in_function)?,
            Some(c) if is_ident_start(c) => self.parse_named(in_function)?,
            Some(c) => return Err(self.error(format!("unexpected `{c}`"))),
            None => return Err(self.error("unexpected end of type")),
        };
        let end = self.byte_offset();
        expr.raw = self.text[start..end].trim().to_string();
        Ok(expr)
    }

    fn parse_named(&mut self, in_function: bool) -> Result<KotlinTypeExpr, TypeParseError> {
        let mut base = String::new();
        if self.peek() == Some('*') {
            base.push('*');
            self.pos += 1;
        } else {
            while let Some(c) = self.peek() {
                if is_ident_char(c) {
                    base.push(c);
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        if base.ends_with('.') || base.starts_with('.') || base.contains("..") {
            return Err(self.error(format!("malformed qualified name `{base}`")));
        }
        while self.peek() == Some('[') {
            if self.peek_at(1) != Some(']') {
                self.pos += 1;
                return Err(self.error("unbalanced `[`"));
            }
            base.push_str("[]");
            self.pos += 2;
        }
        let mut type_args = Vec::new();
        if self.eat('<') {
            loop {
                type_args.push(self.parse_type(in_function)?);
                if self.eat(',') {
                    continue;
                }
                if self.eat('>') {
                    break;
                }
                return Err(self.error("expected `,` or `>` in type arguments"));
            }
        }
        let nullable = self.eat('?');
        Ok(KotlinTypeExpr {
            raw: String::new(),
            base,
            nullable,
            type_args,
            fn_arity: None,
        })
    }

    fn parse_parenthesized(&mut self, in_function: bool) -> Result<KotlinTypeExpr, TypeParseError> {
        self.expect('(')?;
        let mut items = Vec::new();
        self.skip_ws();
        if self.peek() != Some(')') {
            loop {
                items.push(self.parse_type(in_function)?);
                if self.eat(',') {
                    continue;
                }
                break;
            }
        }
        if !self.eat(')') {
            return Err(self.error("unbalanced `(`"));
        }
        if self.eat_arrow() {
            if in_function {
                return Err(self.error(
                    "nested function types are not supported; use a wildcard form such as `(_) -> _`",
                ));
            }
            if items.iter().any(KotlinTypeExpr::is_function) {
                return Err(self.error(
                    "function-typed parameters are not supported; use a wildcard form such as `(_) -> _`",
                ));
            }
            let ret = self.parse_type(true)?;
            let arity = items.len();
            items.push(ret);
            return Ok(KotlinTypeExpr {
                raw: String::new(),
                base: FUNCTION_TYPE_MARKER.to_string(),
                nullable: false,
                type_args: items,
                fn_arity: Some(arity),
            });
        }
        // Grouping parentheses, e.g. `((Int) -> Unit)?`.
        if items.len() != 1 {
            return Err(self.error("expected `->` after parameter list"));
        }
        let mut inner = items.pop().unwrap();
        if in_function && inner.is_function() {
            return Err(self.error(
                "nested function types are not supported; use a wildcard form such as `(_) -> _`",
            ));
        }
        if self.eat('?') {
            inner.nullable = true;
        }
        Ok(inner)
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$' || c == '*'
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$' || c == '.'
}

/// Parses a Kotlin type expression such as `Map<String, Int?>` or `(Int) -> Unit`.
pub fn parse_kotlin_type(text: &str) -> Result<KotlinTypeExpr, TypeParseError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(TypeParseError {
            text: text.to_string(),
            position: 1,
            message: "empty type".into(),
        });
    }
    let mut parser = TypeParser::new(trimmed);
    let expr = parser.parse_type(false)?;
    parser.skip_ws();
    if let Some(c) = parser.peek() {
        let msg = match c {
            ')' => "unbalanced `)`".to_string(),
            '>' => "unbalanced `>`".to_string(),
            _ => format!("unexpected trailing `{c}`"),
        };
        return Err(parser.error(msg));
    }
    Ok(expr)
}

/// A fully-qualified bytecode-level type name such as `java.lang.Integer` or `int[]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JvmTypeName(String);

impl JvmTypeName {
    /// Wraps text that is already in bytecode form. A trailing `?` is dropped.
    pub fn new(name: impl Into<String>) -> Self {
        let name: String = name.into();
        JvmTypeName(name.replace('?', ""))
    }

    pub fn void() -> Self {
        JvmTypeName("void".into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Structural comparison where wildcards and type variables on either side
    /// match anything, and a missing type-argument list matches any list.
    pub fn matches(&self, actual: &JvmTypeName) -> bool {
        if self.0 == actual.0 {
            return true;
        }
        match (parse_kotlin_type(&self.0), parse_kotlin_type(&actual.0)) {
            (Ok(p), Ok(a)) => shape_matches(&p, &a),
            _ => false,
        }
    }
}

impl fmt::Display for JvmTypeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn split_dims(base: &str) -> (&str, usize) {
    let mut b = base;
    let mut dims = 0;
    while let Some(stripped) = b.strip_suffix("[]") {
        b = stripped;
        dims += 1;
    }
    (b, dims)
}

fn shape_matches(pattern: &KotlinTypeExpr, actual: &KotlinTypeExpr) -> bool {
    let (pb, pd) = split_dims(&pattern.base);
    let (ab, ad) = split_dims(&actual.base);
    if is_wildcard_name(pb) {
        return ad >= pd;
    }
    if is_type_variable(ab) {
        return pd >= ad;
    }
    if pb != ab || pd != ad || pattern.fn_arity != actual.fn_arity {
        return false;
    }
    if pattern.type_args.is_empty() || actual.type_args.is_empty() {
        return true;
    }
    pattern.type_args.len() == actual.type_args.len()
        && pattern
            .type_args
            .iter()
            .zip(&actual.type_args)
            .all(|(p, a)| shape_matches(p, a))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AliasError {
    #[error("type alias `{alias}` has an invalid target: {source}")]
    BadTarget {
        alias: String,
        #[source]
        source: TypeParseError,
    },
    #[error("type alias cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("type alias `{0}` is defined twice")]
    Duplicate(String),
}

/// Alias name to canonical Kotlin type text. Always cycle-free.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypeAliasTable {
    entries: BTreeMap<String, KotlinTypeExpr>,
}

impl TypeAliasTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I, A, B>(pairs: I) -> Result<Self, AliasError>
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<String>,
        B: AsRef<str>,
    {
        let mut entries = BTreeMap::new();
        for (alias, target) in pairs {
            let alias = alias.into();
            let parsed = parse_kotlin_type(target.as_ref()).map_err(|source| AliasError::BadTarget {
                alias: alias.clone(),
                source,
            })?;
            if entries.insert(alias.clone(), parsed).is_some() {
                return Err(AliasError::Duplicate(alias));
            }
        }
        let table = TypeAliasTable { entries };
        table.check_acyclic()?;
        Ok(table)
    }

    /// Adds every entry of `other`, keeping existing definitions on conflict.
    pub fn merged(&self, other: &TypeAliasTable) -> Result<Self, AliasError> {
        let mut entries = self.entries.clone();
        for (k, v) in &other.entries {
            entries.entry(k.clone()).or_insert_with(|| v.clone());
        }
        let table = TypeAliasTable { entries };
        table.check_acyclic()?;
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, alias: &str) -> Option<&KotlinTypeExpr> {
        self.entries.get(alias)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &KotlinTypeExpr)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    fn check_acyclic(&self) -> Result<(), AliasError> {
        fn names(expr: &KotlinTypeExpr, out: &mut Vec<String>) {
            if !expr.is_function() {
                out.push(expr.base.clone());
            }
            for a in &expr.type_args {
                names(a, out);
            }
        }
        fn visit(
            table: &TypeAliasTable,
            alias: &str,
            stack: &mut Vec<String>,
            done: &mut BTreeSet<String>,
        ) -> Result<(), AliasError> {
            if done.contains(alias) {
                return Ok(());
            }
            if let Some(i) = stack.iter().position(|s| s == alias) {
                let mut cycle = stack[i..].to_vec();
                cycle.push(alias.to_string());
                return Err(AliasError::Cycle(cycle));
            }
            let Some(target) = table.entries.get(alias) else {
                return Ok(());
            };
            stack.push(alias.to_string());
            let mut refs = Vec::new();
            names(target, &mut refs);
            for r in refs {
                visit(table, &r, stack, done)?;
            }
            stack.pop();
            done.insert(alias.to_string());
            Ok(())
        }
        let mut done = BTreeSet::new();
        for alias in self.entries.keys() {
            visit(self, alias, &mut Vec::new(), &mut done)?;
        }
        Ok(())
    }
}

/// Replaces every alias occurrence, including inside type arguments and
/// function parameter lists. Unknown names are left alone.
pub fn resolve_alias(table: &TypeAliasTable, expr: &KotlinTypeExpr) -> KotlinTypeExpr {
    let mut out = expr.clone();
    out.type_args = expr
        .type_args
        .iter()
        .map(|a| resolve_alias(table, a))
        .collect();
    if !out.is_function() {
        if let Some(target) = table.get(&out.base) {
            let mut resolved = resolve_alias(table, target);
            resolved.nullable |= out.nullable;
            if resolved.type_args.is_empty() && !resolved.is_function() {
                resolved.type_args = out.type_args;
            }
            out = resolved;
        }
    }
    out.refresh_raw();
    out
}

fn strip_kotlin_package(base: &str) -> &str {
    for prefix in ["kotlin.collections.", "kotlin."] {
        if let Some(rest) = base.strip_prefix(prefix) {
            if is_table_name(rest) {
                return rest;
            }
        }
    }
    base
}

fn is_table_name(name: &str) -> bool {
    matches!(name, "Unit" | "Nothing" | "Array")
        || BASIC_TYPES.iter().any(|(k, _, _)| *k == name)
        || BUILTIN_CLASSES.iter().any(|(k, _)| *k == name)
        || PRIMITIVE_ARRAYS.iter().any(|(k, _)| *k == name)
        || COLLECTIONS.iter().any(|(k, _)| *k == name)
}

/// Maps an alias-resolved Kotlin type to the name the compiler emits in bytecode.
pub fn map_type(expr: &KotlinTypeExpr) -> JvmTypeName {
    JvmTypeName(map_to_string(expr))
}

fn map_to_string(expr: &KotlinTypeExpr) -> String {
    if let Some(arity) = expr.fn_arity {
        return if arity <= MAX_FIXED_FUNCTION_ARITY {
            format!("kotlin.jvm.functions.Function{arity}")
        } else {
            "kotlin.jvm.functions.FunctionN".to_string()
        };
    }
    let base = strip_kotlin_package(&expr.base);
    match base {
        "Unit" if expr.nullable => return "Unit".into(),
        "Unit" => return "void".into(),
        "Nothing" => return "java.lang.Void".into(),
        "Array" => {
            return match expr.type_args.first() {
                Some(elem) if elem.base == "*" && !elem.is_function() => "*[]".into(),
                // Array descriptors carry erased element types.
                Some(elem) => format!("{}[]", erase_type_args(&map_to_string(&elem.with_nullable(true)))),
                None => "java.lang.Object[]".into(),
            };
        }
        _ => {}
    }
    if let Some((_, prim, boxed)) = BASIC_TYPES.iter().find(|(k, _, _)| *k == base) {
        return if expr.nullable { boxed } else { prim }.to_string();
    }
    if let Some((_, arr)) = PRIMITIVE_ARRAYS.iter().find(|(k, _)| *k == base) {
        return arr.to_string();
    }
    let mapped_base = BUILTIN_CLASSES
        .iter()
        .chain(COLLECTIONS)
        .find(|(k, _)| *k == base)
        .map(|(_, j)| j.to_string())
        .unwrap_or_else(|| expr.base.clone());
    if expr.type_args.is_empty() {
        return mapped_base;
    }
    let args: Vec<String> = expr
        .type_args
        .iter()
        .map(|a| map_to_string(&a.with_nullable(true)))
        .collect();
    format!("{mapped_base}<{}>", args.join(", "))
}

fn erase_type_args(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    let mut depth = 0usize;
    for c in name.chars() {
        match c {
            '<' => depth += 1,
            '>' => depth = depth.saturating_sub(1),
            _ if depth == 0 => out.push(c),
            _ => {}
        }
    }
    out
}

/// Renders the type verbatim without erasure, the way a Kotlin-unaware tool
/// would read it. Used for ablation runs.
pub fn literal_type(expr: &KotlinTypeExpr) -> JvmTypeName {
    JvmTypeName::new(expr.to_string())
}
