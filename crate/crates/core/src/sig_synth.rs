//! Bytecode-level method signatures synthesized from Kotlin constructs, and
//! the compiler-generated variants of those signatures.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};

use thiserror::Error;

use crate::kotlin_types::{
    literal_type, map_type, parse_kotlin_type, resolve_alias, JvmTypeName, KotlinTypeExpr,
    TypeAliasTable, TypeParseError,
};

pub const CONSTRUCTOR_NAME: &str = "<init>";
pub const DEFAULT_SUFFIX: &str = "$default";
pub const DEFAULT_CONSTRUCTOR_MARKER: &str = "kotlin.jvm.internal.DefaultConstructorMarker";
pub const DEFAULT_COMPANION_NAME: &str = "Companion";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignatureParseError {
    #[error("signature `{0}` is missing the `<class>: ` prefix")]
    MissingClass(String),
    #[error("signature `{0}` has no parameter list")]
    MissingParams(String),
    #[error("signature `{0}` has unbalanced parentheses")]
    Unbalanced(String),
    #[error("signature `{0}` has no return type or method name")]
    MissingName(String),
    #[error("signature `{0}` has an empty parameter")]
    EmptyParam(String),
    #[error("constructor signature `{0}` must return void")]
    ConstructorReturn(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthError {
    #[error(transparent)]
    Signature(#[from] SignatureParseError),
    #[error(transparent)]
    Type(#[from] TypeParseError),
    #[error("infix functions take exactly one parameter, got {0}")]
    InfixArity(usize),
    #[error("unknown operator `{symbol}`; supported operators: {}", supported_operator_list())]
    UnknownOperator { symbol: String },
    #[error("operator `{symbol}` expects {expected} operand(s), got {got}")]
    OperatorArity {
        symbol: String,
        expected: &'static str,
        got: usize,
    },
    #[error("`{0}` is not a constructor")]
    NotAConstructor(String),
    #[error("extension properties have no setter")]
    ExtensionSetter,
    #[error("property name must not be empty")]
    EmptyPropertyName,
}

/// Textual pieces of a canonical signature before any type interpretation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignatureParts {
    pub class: Option<String>,
    pub return_type: String,
    pub name: String,
    pub params: Vec<String>,
}

/// Splits `<class>: <return> <name>(<p1>,<p2>)`. With `with_class` false the
/// `<class>: ` prefix must be absent.
pub fn split_signature(text: &str, with_class: bool) -> Result<SignatureParts, SignatureParseError> {
    let text = text.trim();
    let (class, rest) = if with_class {
        let (class, rest) = text
            .split_once(':')
            .ok_or_else(|| SignatureParseError::MissingClass(text.to_string()))?;
        let class = class.trim();
        if class.is_empty() || class.contains(char::is_whitespace) {
            return Err(SignatureParseError::MissingClass(text.to_string()));
        }
        (Some(class.to_string()), rest.trim())
    } else {
        (None, text)
    };
    if !rest.ends_with(')') {
        return Err(SignatureParseError::MissingParams(text.to_string()));
    }
    let bytes = rest.as_bytes();
    let mut depth = 0i32;
    let mut open = None;
    for i in (0..bytes.len()).rev() {
        match bytes[i] {
            b')' => depth += 1,
            b'(' => {
                depth -= 1;
                if depth == 0 {
                    open = Some(i);
                    break;
                }
            }
            _ => {}
        }
    }
    let open = open.ok_or_else(|| SignatureParseError::Unbalanced(text.to_string()))?;
    let head = rest[..open].trim_end();
    let name_start = head
        .rfind(char::is_whitespace)
        .map(|i| i + 1)
        .ok_or_else(|| SignatureParseError::MissingName(text.to_string()))?;
    let name = head[name_start..].to_string();
    let return_type = head[..name_start].trim().to_string();
    if name.is_empty() || return_type.is_empty() {
        return Err(SignatureParseError::MissingName(text.to_string()));
    }
    let params = split_top_level(&rest[open + 1..rest.len() - 1])
        .ok_or_else(|| SignatureParseError::Unbalanced(text.to_string()))?;
    if params.iter().any(|p| p.is_empty()) {
        return Err(SignatureParseError::EmptyParam(text.to_string()));
    }
    Ok(SignatureParts {
        class,
        return_type,
        name,
        params,
    })
}

/// Splits on commas outside `()` and `<>`; `->` is not a closing bracket.
fn split_top_level(text: &str) -> Option<Vec<String>> {
    if text.trim().is_empty() {
        return Some(Vec::new());
    }
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut current = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '-' if chars.peek() == Some(&'>') => {
                current.push(c);
                current.push(chars.next().unwrap());
                continue;
            }
            '(' | '<' => depth += 1,
            ')' | '>' => {
                depth -= 1;
                if depth < 0 {
                    return None;
                }
            }
            ',' if depth == 0 => {
                out.push(current.trim().to_string());
                current.clear();
                continue;
            }
            _ => {}
        }
        current.push(c);
    }
    if depth != 0 {
        return None;
    }
    out.push(current.trim().to_string());
    Some(out)
}

/// A bytecode-level method identity.
///
/// Identity (equality, ordering, hashing) is the canonical text; `is_static`
/// is carried alongside because the text format does not encode it.
#[derive(Debug, Clone)]
pub struct MethodSignature {
    pub declaring_class: String,
    pub return_type: JvmTypeName,
    pub name: String,
    pub params: Vec<JvmTypeName>,
    pub is_static: bool,
    pub is_constructor: bool,
}

impl MethodSignature {
    pub fn new(
        declaring_class: impl Into<String>,
        return_type: JvmTypeName,
        name: impl Into<String>,
        params: Vec<JvmTypeName>,
    ) -> Self {
        let name = name.into();
        let is_constructor = name == CONSTRUCTOR_NAME;
        MethodSignature {
            declaring_class: declaring_class.into(),
            return_type: if is_constructor { JvmTypeName::void() } else { return_type },
            name,
            params,
            is_static: false,
            is_constructor,
        }
    }

    pub fn constructor(declaring_class: impl Into<String>, params: Vec<JvmTypeName>) -> Self {
        Self::new(declaring_class, JvmTypeName::void(), CONSTRUCTOR_NAME, params)
    }

    pub fn into_static(mut self) -> Self {
        self.is_static = true;
        self
    }

    pub fn arity(&self) -> usize {
        self.params.len()
    }

    /// Parses canonical text whose types are already bytecode names.
    pub fn parse(text: &str) -> Result<Self, SignatureParseError> {
        let parts = split_signature(text, true)?;
        let is_constructor = parts.name == CONSTRUCTOR_NAME;
        if is_constructor && parts.return_type != "void" {
            return Err(SignatureParseError::ConstructorReturn(text.trim().to_string()));
        }
        Ok(MethodSignature::new(
            parts.class.unwrap(),
            JvmTypeName::new(parts.return_type),
            parts.name,
            parts.params.into_iter().map(JvmTypeName::new).collect(),
        ))
    }

    /// Canonical text: `<class>: <return> <name>(<p1>,<p2>,...)`.
    pub fn canonical(&self) -> String {
        self.to_string()
    }

    /// Compares against `actual` treating wildcard types in `self` as holes.
    pub fn matches(&self, actual: &MethodSignature) -> bool {
        self.declaring_class == actual.declaring_class
            && self.name == actual.name
            && self.params.len() == actual.params.len()
            && self.return_type.matches(&actual.return_type)
            && self
                .params
                .iter()
                .zip(&actual.params)
                .all(|(p, a)| p.matches(a))
    }

    fn identity(&self) -> (&str, &JvmTypeName, &str, &[JvmTypeName]) {
        (
            &self.declaring_class,
            &self.return_type,
            &self.name,
            &self.params,
        )
    }
}

impl PartialEq for MethodSignature {
    fn eq(&self, other: &Self) -> bool {
        self.identity() == other.identity()
    }
}

impl Eq for MethodSignature {}

impl Hash for MethodSignature {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.identity().hash(state);
    }
}

impl PartialOrd for MethodSignature {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MethodSignature {
    fn cmp(&self, other: &Self) -> Ordering {
        self.identity().cmp(&other.identity())
    }
}

impl fmt::Display for MethodSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} {}(", self.declaring_class, self.return_type, self.name)?;
        for (i, p) in self.params.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Receiver {
    Dispatch,
    Extension,
}

/// A taint position at a method boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SlotRef {
    This(Option<Receiver>),
    /// 0-based parameter index.
    Param(usize),
    Return,
}

impl SlotRef {
    pub const THIS: SlotRef = SlotRef::This(None);

    /// Drops any receiver qualifier.
    pub fn plain(self) -> SlotRef {
        match self {
            SlotRef::This(_) => SlotRef::THIS,
            other => other,
        }
    }
}

impl fmt::Display for SlotRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlotRef::This(None) => f.write_str("this"),
            SlotRef::This(Some(Receiver::Dispatch)) => f.write_str("this[dispatch]"),
            SlotRef::This(Some(Receiver::Extension)) => f.write_str("this[extension]"),
            SlotRef::Param(i) => write!(f, "param({i})"),
            SlotRef::Return => f.write_str("return"),
        }
    }
}

/// Total map from the slots of a base signature to the slots of a variant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotMap {
    this: SlotRef,
    params: Vec<SlotRef>,
    ret: SlotRef,
}

impl SlotMap {
    pub fn identity(arity: usize) -> Self {
        SlotMap {
            this: SlotRef::THIS,
            params: (0..arity).map(SlotRef::Param).collect(),
            ret: SlotRef::Return,
        }
    }

    /// `this` moves to the first parameter and every parameter shifts right.
    pub fn receiver_as_first_param(arity: usize) -> Self {
        SlotMap {
            this: SlotRef::Param(0),
            params: (0..arity).map(|i| SlotRef::Param(i + 1)).collect(),
            ret: SlotRef::Return,
        }
    }

    pub fn base_arity(&self) -> usize {
        self.params.len()
    }

    /// `None` for a parameter index outside the base arity.
    pub fn apply(&self, slot: SlotRef) -> Option<SlotRef> {
        match slot {
            SlotRef::This(_) => Some(self.this),
            SlotRef::Param(i) => self.params.get(i).copied(),
            SlotRef::Return => Some(self.ret),
        }
    }

    pub fn domain(&self) -> Vec<SlotRef> {
        let mut d = vec![SlotRef::THIS];
        d.extend((0..self.params.len()).map(SlotRef::Param));
        d.push(SlotRef::Return);
        d
    }

    pub fn is_injective(&self) -> bool {
        let images: BTreeSet<SlotRef> = self
            .domain()
            .into_iter()
            .filter_map(|s| self.apply(s))
            .collect();
        images.len() == self.params.len() + 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VariantOrigin {
    Base,
    DefaultArgs,
    SealedCtor,
    InternalMangled,
}

impl fmt::Display for VariantOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VariantOrigin::Base => "base",
            VariantOrigin::DefaultArgs => "default_args",
            VariantOrigin::SealedCtor => "sealed_ctor",
            VariantOrigin::InternalMangled => "internal_mangled",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignatureVariant {
    pub signature: MethodSignature,
    pub slot_map: SlotMap,
    pub origin: VariantOrigin,
}

impl SignatureVariant {
    pub fn base(signature: MethodSignature) -> Self {
        let slot_map = SlotMap::identity(signature.arity());
        SignatureVariant {
            signature,
            slot_map,
            origin: VariantOrigin::Base,
        }
    }
}

/// How Kotlin-level types become bytecode types while synthesizing.
///
/// The standard lowering resolves aliases and then erases types; the
/// switches exist so that ablation runs can turn either step off.
#[derive(Debug, Clone, Copy)]
pub struct TypeLowering<'a> {
    pub aliases: Option<&'a TypeAliasTable>,
    pub map_types: bool,
}

impl<'a> TypeLowering<'a> {
    pub fn standard(aliases: &'a TypeAliasTable) -> Self {
        TypeLowering {
            aliases: Some(aliases),
            map_types: true,
        }
    }

    pub fn mapping_only() -> Self {
        TypeLowering {
            aliases: None,
            map_types: true,
        }
    }

    pub fn lower(&self, expr: &KotlinTypeExpr) -> JvmTypeName {
        let resolved = match self.aliases {
            Some(table) => resolve_alias(table, expr),
            None => expr.clone(),
        };
        if self.map_types {
            map_type(&resolved)
        } else {
            literal_type(&resolved)
        }
    }

    pub fn lower_text(&self, text: &str) -> Result<JvmTypeName, TypeParseError> {
        Ok(self.lower(&parse_kotlin_type(text)?))
    }

    /// Parses a signature written with Kotlin types and lowers every type.
    pub fn lower_signature(&self, text: &str) -> Result<MethodSignature, SynthError> {
        let parts = split_signature(text, true)?;
        self.lower_parts(parts.class.unwrap(), &parts.return_type, &parts.name, &parts.params)
    }

    pub fn lower_parts(
        &self,
        class: String,
        ret: &str,
        name: &str,
        params: &[String],
    ) -> Result<MethodSignature, SynthError> {
        let ret = self.lower_text(ret)?;
        let params = params
            .iter()
            .map(|p| self.lower_text(p))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(MethodSignature::new(class, ret, name, params))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessorKind {
    Getter,
    Setter,
    Both,
}

fn capitalize_first(name: &str) -> String {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

pub fn getter_name(prop_name: &str) -> String {
    format!("get{}", capitalize_first(prop_name))
}

pub fn setter_name(prop_name: &str) -> String {
    format!("set{}", capitalize_first(prop_name))
}

/// Getter `<class>: <type> get<Name>()` and/or setter `<class>: void set<Name>(<type>)`.
pub fn property_accessors(
    class: &str,
    prop_name: &str,
    prop_type: &KotlinTypeExpr,
    want: AccessorKind,
    lowering: &TypeLowering<'_>,
) -> Result<Vec<MethodSignature>, SynthError> {
    if prop_name.is_empty() {
        return Err(SynthError::EmptyPropertyName);
    }
    let ty = lowering.lower(prop_type);
    let mut out = Vec::new();
    if matches!(want, AccessorKind::Getter | AccessorKind::Both) {
        out.push(MethodSignature::new(class, ty.clone(), getter_name(prop_name), vec![]));
    }
    if matches!(want, AccessorKind::Setter | AccessorKind::Both) {
        out.push(MethodSignature::new(
            class,
            JvmTypeName::void(),
            setter_name(prop_name),
            vec![ty],
        ));
    }
    Ok(out)
}

/// The facade class that holds top-level members of a file.
pub fn top_level_class(package: &str, file_name: &str) -> String {
    let base = file_name.strip_suffix(".kt").unwrap_or(file_name);
    let base = base.rsplit(['/', '\\']).next().unwrap_or(base);
    if package.is_empty() {
        format!("{base}Kt")
    } else {
        format!("{package}.{base}Kt")
    }
}

/// The receiver becomes the first bytecode parameter.
pub fn extension_signature(
    container: &str,
    receiver: &KotlinTypeExpr,
    name: &str,
    params: &[KotlinTypeExpr],
    ret: &KotlinTypeExpr,
    lowering: &TypeLowering<'_>,
) -> MethodSignature {
    let mut lowered = vec![lowering.lower(receiver)];
    lowered.extend(params.iter().map(|p| lowering.lower(p)));
    MethodSignature::new(container, lowering.lower(ret), name, lowered)
}

/// Getter of an extension property; extension properties never have setters.
pub fn extension_property_getter(
    container: &str,
    receiver: &KotlinTypeExpr,
    prop_name: &str,
    prop_type: &KotlinTypeExpr,
    lowering: &TypeLowering<'_>,
) -> Result<MethodSignature, SynthError> {
    if prop_name.is_empty() {
        return Err(SynthError::EmptyPropertyName);
    }
    Ok(extension_signature(
        container,
        receiver,
        &getter_name(prop_name),
        &[],
        prop_type,
        lowering,
    ))
}

pub fn companion_wrapper(class: &str, companion_name: Option<&str>) -> String {
    format!("{class}${}", companion_name.unwrap_or(DEFAULT_COMPANION_NAME))
}

pub fn infix_signature(
    receiver: &KotlinTypeExpr,
    name: &str,
    params: &[KotlinTypeExpr],
    ret: &KotlinTypeExpr,
    lowering: &TypeLowering<'_>,
) -> Result<MethodSignature, SynthError> {
    if params.len() != 1 {
        return Err(SynthError::InfixArity(params.len()));
    }
    let class = lowering.lower(receiver).to_string();
    Ok(MethodSignature::new(
        class,
        lowering.lower(ret),
        name,
        vec![lowering.lower(&params[0])],
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperandArity {
    Exactly(usize),
    AtLeast(usize),
}

impl OperandArity {
    fn accepts(self, n: usize) -> bool {
        match self {
            OperandArity::Exactly(k) => n == k,
            OperandArity::AtLeast(k) => n >= k,
        }
    }

    fn describe(self) -> &'static str {
        match self {
            OperandArity::Exactly(0) => "0",
            OperandArity::Exactly(1) => "1",
            OperandArity::AtLeast(0) => "any number of",
            OperandArity::AtLeast(1) => "at least 1",
            OperandArity::AtLeast(2) => "at least 2",
            _ => "a different number of",
        }
    }
}

/// Operator symbol, the function it compiles to, and how many operands it takes.
pub const OPERATORS: &[(&str, &str, OperandArity)] = &[
    ("unary+", "unaryPlus", OperandArity::Exactly(0)),
    ("unary-", "unaryMinus", OperandArity::Exactly(0)),
    ("!", "not", OperandArity::Exactly(0)),
    ("++", "inc", OperandArity::Exactly(0)),
    ("--", "dec", OperandArity::Exactly(0)),
    ("+", "plus", OperandArity::Exactly(1)),
    ("-", "minus", OperandArity::Exactly(1)),
    ("*", "times", OperandArity::Exactly(1)),
    ("/", "div", OperandArity::Exactly(1)),
    ("%", "rem", OperandArity::Exactly(1)),
    ("..", "rangeTo", OperandArity::Exactly(1)),
    ("+=", "plusAssign", OperandArity::Exactly(1)),
    ("-=", "minusAssign", OperandArity::Exactly(1)),
    ("*=", "timesAssign", OperandArity::Exactly(1)),
    ("/=", "divAssign", OperandArity::Exactly(1)),
    ("%=", "remAssign", OperandArity::Exactly(1)),
    ("==", "equals", OperandArity::Exactly(1)),
    ("!=", "equals", OperandArity::Exactly(1)),
    ("in", "contains", OperandArity::Exactly(1)),
    ("!in", "contains", OperandArity::Exactly(1)),
    ("[]", "get", OperandArity::AtLeast(1)),
    ("[]=", "set", OperandArity::AtLeast(2)),
    ("()", "invoke", OperandArity::AtLeast(0)),
    (">", "compareTo", OperandArity::Exactly(1)),
    ("<", "compareTo", OperandArity::Exactly(1)),
    (">=", "compareTo", OperandArity::Exactly(1)),
    ("<=", "compareTo", OperandArity::Exactly(1)),
];

fn supported_operator_list() -> String {
    OPERATORS
        .iter()
        .map(|(s, _, _)| format!("`{s}`"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Resolves an operator symbol to its function name. `+` and `-` without
/// operands mean the unary forms.
pub fn operator_function(symbol: &str, operand_count: usize) -> Result<&'static str, SynthError> {
    let symbol = match (symbol, operand_count) {
        ("+", 0) => "unary+",
        ("-", 0) => "unary-",
        (s, _) => s,
    };
    let (_, function, arity) = OPERATORS
        .iter()
        .find(|(s, _, _)| *s == symbol)
        .ok_or_else(|| SynthError::UnknownOperator {
            symbol: symbol.to_string(),
        })?;
    if !arity.accepts(operand_count) {
        return Err(SynthError::OperatorArity {
            symbol: symbol.to_string(),
            expected: arity.describe(),
            got: operand_count,
        });
    }
    Ok(function)
}

/// For index assignment the assigned value is the last operand.
pub fn operator_signature(
    symbol: &str,
    receiver: &KotlinTypeExpr,
    operands: &[KotlinTypeExpr],
    ret: &KotlinTypeExpr,
    lowering: &TypeLowering<'_>,
) -> Result<MethodSignature, SynthError> {
    let function = operator_function(symbol, operands.len())?;
    Ok(MethodSignature::new(
        lowering.lower(receiver).to_string(),
        lowering.lower(ret),
        function,
        operands.iter().map(|o| lowering.lower(o)).collect(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DefaultKind {
    Constructor,
    TopLevel,
    Member,
}

impl fmt::Display for DefaultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DefaultKind::Constructor => "constructor",
            DefaultKind::TopLevel => "topLevel",
            DefaultKind::Member => "member",
        })
    }
}

/// The base signature plus the single default-arguments implementation.
pub fn default_variants(sig: &MethodSignature, kind: DefaultKind) -> Vec<SignatureVariant> {
    let base = SignatureVariant::base(sig.clone());
    let arity = sig.arity();
    let variant = match kind {
        DefaultKind::Constructor => {
            let mut params = sig.params.clone();
            params.push(JvmTypeName::new("int"));
            params.push(JvmTypeName::new(DEFAULT_CONSTRUCTOR_MARKER));
            SignatureVariant {
                signature: MethodSignature::constructor(sig.declaring_class.clone(), params),
                slot_map: SlotMap::identity(arity),
                origin: VariantOrigin::DefaultArgs,
            }
        }
        DefaultKind::TopLevel => {
            let mut params = sig.params.clone();
            params.push(JvmTypeName::new("int"));
            params.push(JvmTypeName::new("java.lang.Object"));
            SignatureVariant {
                signature: MethodSignature::new(
                    sig.declaring_class.clone(),
                    sig.return_type.clone(),
                    format!("{}{DEFAULT_SUFFIX}", sig.name),
                    params,
                )
                .into_static(),
                slot_map: SlotMap::identity(arity),
                origin: VariantOrigin::DefaultArgs,
            }
        }
        DefaultKind::Member => {
            let mut params = vec![JvmTypeName::new(sig.declaring_class.clone())];
            params.extend(sig.params.iter().cloned());
            params.push(JvmTypeName::new("int"));
            params.push(JvmTypeName::new("java.lang.Object"));
            SignatureVariant {
                signature: MethodSignature::new(
                    sig.declaring_class.clone(),
                    sig.return_type.clone(),
                    format!("{}{DEFAULT_SUFFIX}", sig.name),
                    params,
                )
                .into_static(),
                slot_map: SlotMap::receiver_as_first_param(arity),
                origin: VariantOrigin::DefaultArgs,
            }
        }
    };
    vec![base, variant]
}

/// Sealed-class constructors gain a trailing marker parameter.
pub fn sealed_ctor_variant(sig: &MethodSignature) -> Result<SignatureVariant, SynthError> {
    if !sig.is_constructor {
        return Err(SynthError::NotAConstructor(sig.to_string()));
    }
    let mut params = sig.params.clone();
    params.push(JvmTypeName::new(DEFAULT_CONSTRUCTOR_MARKER));
    Ok(SignatureVariant {
        signature: MethodSignature::constructor(sig.declaring_class.clone(), params),
        slot_map: SlotMap::identity(sig.arity()),
        origin: VariantOrigin::SealedCtor,
    })
}

/// `internal` members get `-<module>` appended, with `-` in the module name
/// replaced by `_`. Returns a warning when the module name is empty.
pub fn internal_mangle(sig: &MethodSignature, module_name: &str) -> (SignatureVariant, Option<String>) {
    let mut signature = sig.clone();
    signature.name = format!("{}-{}", sig.name, module_name.replace('-', "_"));
    let warning = module_name
        .is_empty()
        .then(|| format!("empty module name for internal member `{}`", sig.name));
    (
        SignatureVariant {
            slot_map: SlotMap::identity(sig.arity()),
            signature,
            origin: VariantOrigin::InternalMangled,
        },
        warning,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SyntheticNameKind {
    DefaultVariant,
    CompanionWrapper,
    CompanionAccessBridge,
    LocalFunction,
    LambdaWrapper,
    InlineImpl,
    InlineBox,
    InlineUnbox,
    InternalMangled,
    Plain,
}

impl SyntheticNameKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SyntheticNameKind::DefaultVariant => "default_variant",
            SyntheticNameKind::CompanionWrapper => "companion_wrapper",
            SyntheticNameKind::CompanionAccessBridge => "companion_access_bridge",
            SyntheticNameKind::LocalFunction => "local_function",
            SyntheticNameKind::LambdaWrapper => "lambda_wrapper",
            SyntheticNameKind::InlineImpl => "inline_impl",
            SyntheticNameKind::InlineBox => "inline_box",
            SyntheticNameKind::InlineUnbox => "inline_unbox",
            SyntheticNameKind::InternalMangled => "internal_mangled",
            SyntheticNameKind::Plain => "plain",
        }
    }
}

impl fmt::Display for SyntheticNameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Classifies a compiler-generated method or class name. Diagnostic only.
pub fn classify_generated_name(name: &str) -> SyntheticNameKind {
    let name = name.trim();
    // Only the simple name matters for method names given with their class.
    let simple = name.rsplit('.').next().unwrap_or(name);
    let segments: Vec<&str> = simple.split('$').collect();
    let last = segments.last().copied().unwrap_or("");

    if simple.ends_with(DEFAULT_SUFFIX) && simple.len() > DEFAULT_SUFFIX.len() {
        SyntheticNameKind::DefaultVariant
    } else if simple == "box-impl" {
        SyntheticNameKind::InlineBox
    } else if simple == "unbox-impl" {
        SyntheticNameKind::InlineUnbox
    } else if simple.ends_with("-impl") {
        SyntheticNameKind::InlineImpl
    } else if simple.starts_with("access$") && simple.len() > "access$".len() {
        SyntheticNameKind::CompanionAccessBridge
    } else if segments.len() > 1 && last == DEFAULT_COMPANION_NAME && !segments[0].is_empty() {
        SyntheticNameKind::CompanionWrapper
    } else if segments.len() > 1
        && !segments[0].is_empty()
        && !last.is_empty()
        && last.chars().all(|c| c.is_ascii_digit())
    {
        SyntheticNameKind::LambdaWrapper
    } else if segments.len() > 1 && segments.iter().all(|s| !s.is_empty()) {
        SyntheticNameKind::LocalFunction
    } else if simple
        .split_once('-')
        .is_some_and(|(a, b)| !a.is_empty() && !b.is_empty())
    {
        SyntheticNameKind::InternalMangled
    } else {
        SyntheticNameKind::Plain
    }
}
