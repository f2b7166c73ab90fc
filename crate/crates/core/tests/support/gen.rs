//! Random non-recursive IR programs over a fixed library of rule-bearing
//! external calls.
//!
//! Methods are assigned a level in 0..=3 and may only call methods of a
//! strictly higher level, so call chains are at most three calls deep.

use std::fmt::Write as _;

use proptest::prelude::*;

/// Rules for the generated programs, written with Kotlin constructs so the
/// ablation flags have something to switch off. Sanitizers use plain JVM
/// signatures so that no ablation can disable them.
pub const GEN_SPEC: &str = r#"
aliases { Text = String }

query "gen-a" {
  message "generated flow"
  source { topLevel package "ext" file "Src.kt" method "Text read()" out return }
  source { method "ext.Src: Unit fill(java.lang.StringBuilder)" out param1 }
  propagator { infix receiver "ext.Prop" name "wrap" param "String" returns "String" in param1 out return }
  propagator { method "ext.Buf: Unit put(String)" in param1 out this }
  sanitizer { method "ext.San: java.lang.String clean(java.lang.String)" no-defaults in param1 out return }
  sink { extensionFunction at "ext.SnkKt" receiver "ext.Out" name "write" params ("String") returns "Unit" in param1 }
  sink { operator "()" receiver "ext.Cmd" returns "Unit" in this }
  sink { method "ext.Log: Unit log(String, String)" in param2 }
}

query "gen-b" {
  source { topLevel package "ext" file "Src.kt" method "Text read()" out return }
  sink { method "ext.Opaque: java.lang.String noise(java.lang.String)" no-defaults in param1 }
}
"#;

const READ: &str = "ext.SrcKt: java.lang.String read()";
const FILL: &str = "ext.Src: void fill(java.lang.StringBuilder)";
const WRITE: &str = "ext.SnkKt: void write(ext.Out,java.lang.String)";
const INVOKE: &str = "ext.Cmd: void invoke()";
const LOG: &str = "ext.Log: void log(java.lang.String,java.lang.String)";
const LOG_DEFAULT: &str = "ext.Log: void log$default(ext.Log,java.lang.String,java.lang.String,int,java.lang.Object)";
const WRAP: &str = "ext.Prop: java.lang.String wrap(java.lang.String)";
const PUT: &str = "ext.Buf: void put(java.lang.String)";
const CLEAN: &str = "ext.San: java.lang.String clean(java.lang.String)";
const NOISE: &str = "ext.Opaque: java.lang.String noise(java.lang.String)";

/// Op kinds for root methods: mostly calls, loads and sinks.
const ROOT_KINDS: &[u8] = &[
    0, 1, 2, 2, 2, 2, 3, 4, 4, 4, 5, 6, 7, 8, 9, 10, 11, 12, 12, 12, 12, 12, 13, 14, 14, 15, 16, 16, 17,
];
/// Op kinds for callees: mostly sources and writes that escape the method
/// (fields, receiver, parameters, return value).
const CALLEE_KINDS: &[u8] = &[
    0, 1, 1, 1, 2, 2, 2, 2, 3, 3, 4, 5, 6, 7, 8, 9, 9, 10, 11, 12, 12, 13, 13, 13, 14, 15, 15, 16, 17, 17,
];
const LOCALS: u8 = 6;

#[derive(Debug, Clone)]
pub struct GenMethod {
    pub level: u8,
    pub is_static: bool,
    pub arity: usize,
    pub returns: bool,
    /// (kind, a, b, c): the kind selects from a level-dependent table;
    /// operands are reduced modulo whatever is in scope.
    pub ops: Vec<(u8, u8, u8, u8)>,
}

#[derive(Debug, Clone)]
pub struct GenProgram {
    pub methods: Vec<GenMethod>,
}

fn method_strategy() -> impl Strategy<Value = GenMethod> {
    (
        0u8..4,
        any::<bool>(),
        0usize..=2,
        any::<bool>(),
        prop::collection::vec((any::<u8>(), any::<u8>(), any::<u8>(), any::<u8>()), 2..=6),
    )
        .prop_map(|(level, is_static, arity, returns, ops)| GenMethod {
            level,
            is_static,
            arity,
            returns,
            ops,
        })
}

/// At most five methods of at most ten statements each.
pub fn program_strategy() -> impl Strategy<Value = GenProgram> {
    // Capping method i's level at i keeps early methods near the root, so
    // most programs have somewhere to call.
    prop::collection::vec(method_strategy(), 1..=5).prop_map(|mut methods| {
        for (i, m) in methods.iter_mut().enumerate() {
            m.level = m.level.min(i as u8);
        }
        GenProgram { methods }
    })
}

fn class_of(i: usize) -> &'static str {
    if i % 2 == 0 {
        "gen.A"
    } else {
        "gen.B"
    }
}

impl GenProgram {
    pub fn signature(&self, i: usize) -> String {
        let m = &self.methods[i];
        let ret = if m.returns { "java.lang.String" } else { "void" };
        let params = vec!["java.lang.String"; m.arity].join(",");
        format!("{}: {ret} m{i}({params})", class_of(i))
    }

    pub fn to_ir(&self) -> String {
        let mut out = String::new();
        for (class, file) in [("gen.A", Some("src/gen/Alpha.kt")), ("gen.B", None)] {
            let members: Vec<usize> = (0..self.methods.len()).filter(|i| class_of(*i) == class).collect();
            if members.is_empty() {
                continue;
            }
            match file {
                Some(f) => writeln!(out, "class {class} file \"{f}\" {{").unwrap(),
                None => writeln!(out, "class {class} {{").unwrap(),
            }
            for i in members {
                self.method_ir(i, &mut out);
            }
            out.push_str("}\n");
        }
        out
    }

    fn method_ir(&self, i: usize, out: &mut String) {
        let m = &self.methods[i];
        let stat = if m.is_static { " static" } else { "" };
        writeln!(out, "  method \"{}\"{stat} {{", self.signature(i)).unwrap();
        let mut body = Body::default();
        let mut next = 0u8;
        if !m.is_static {
            body.def(format!("l{next} = this"), next);
            next += 1;
        }
        for p in 0..m.arity {
            body.def(format!("l{next} = param {p}"), next);
            next += 1;
        }
        if body.defined.is_empty() {
            body.def("l0 = const \"seed\"".into(), 0);
        }
        let callees: Vec<usize> = (0..self.methods.len()).filter(|j| self.methods[*j].level > m.level).collect();
        let kinds = if m.level == 0 { ROOT_KINDS } else { CALLEE_KINDS };
        for &(raw, a, b, c) in &m.ops {
            let kind = kinds[raw as usize % kinds.len()];
            let src = body.pick(a);
            let other = body.pick(b);
            let dst = c % LOCALS;
            match kind {
                0 => body.def(format!("l{dst} = const \"k{b}\""), dst),
                1 => body.def(format!("l{dst} = {src}"), dst),
                2 => body.def(format!("l{dst} = call \"{READ}\" ()"), dst),
                3 => body.push(format!("call \"{FILL}\" ({src})")),
                4 => body.push(format!("call \"{WRITE}\" ({other}, {src})")),
                5 => body.push(format!("call \"{INVOKE}\" on {src} ()")),
                6 => body.push(format!("call \"{LOG}\" on {other} ({other}, {src})")),
                7 => body.push(format!("call \"{LOG_DEFAULT}\" ({other}, {src}, {other}, {other}, {src})")),
                8 => body.def(format!("l{dst} = call \"{WRAP}\" on {other} ({src})"), dst),
                9 => body.push(format!("call \"{PUT}\" on {other} ({src})")),
                10 => body.def(format!("l{dst} = call \"{CLEAN}\" ({src})"), dst),
                11 => body.def(format!("l{dst} = call \"{NOISE}\" ({src})"), dst),
                12 if !callees.is_empty() => {
                    let j = callees[b as usize % callees.len()];
                    let callee = &self.methods[j];
                    let args: Vec<String> = (0..callee.arity).map(|k| body.pick(a.wrapping_add(k as u8 * 7))).collect();
                    let recv = if callee.is_static { String::new() } else { format!(" on {other}") };
                    let call = format!("call \"{}\"{recv} ({})", self.signature(j), args.join(", "));
                    if callee.returns {
                        body.def(format!("l{dst} = {call}"), dst);
                    } else {
                        body.push(call);
                    }
                }
                12 => body.def(format!("l{dst} = const \"leaf\""), dst),
                13 => body.push(format!("{other}.{} = {src}", field(c))),
                14 => body.def(format!("l{dst} = {other}.{}", field(b)), dst),
                15 => body.push(format!("gen.G.{} = {src}", field(c))),
                16 => body.def(format!("l{dst} = gen.G.{}", field(b)), dst),
                _ => body.push(if m.returns { format!("return {src}") } else { "return".into() }),
            }
        }
        if m.returns {
            let r = body.pick(0);
            body.push(format!("return {r}"));
        } else {
            body.push("return".into());
        }
        for line in body.lines {
            writeln!(out, "    {line}").unwrap();
        }
        out.push_str("  }\n");
    }
}

/// Mostly `f`, so that stores and loads meet often.
fn field(n: u8) -> &'static str {
    if n % 4 == 3 {
        "g"
    } else {
        "f"
    }
}

#[derive(Default)]
struct Body {
    lines: Vec<String>,
    defined: Vec<u8>,
    last: u8,
}

impl Body {
    fn def(&mut self, line: String, local: u8) {
        self.lines.push(line);
        if !self.defined.contains(&local) {
            self.defined.push(local);
        }
        self.last = local;
    }

    fn push(&mut self, line: String) {
        self.lines.push(line);
    }

    /// Half the time the most recent definition, which chains operations
    /// into longer flows; otherwise any defined local.
    fn pick(&self, n: u8) -> String {
        if n % 2 == 0 {
            format!("l{}", self.last)
        } else {
            format!("l{}", self.defined[(n / 2) as usize % self.defined.len()])
        }
    }
}
