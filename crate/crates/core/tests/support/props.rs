//! Property checks shared by the property-test target and the acceptance
//! target. Each runs `cases` generated inputs on a deterministic RNG.

use std::collections::BTreeSet;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

use ktaint::engine::{analyze, AnalysisOptions, Finding};
use ktaint::ir::{parse_ir, IrProgram};
use ktaint::kotlin_types::{parse_kotlin_type, JvmTypeName};
use ktaint::report::to_sarif;
use ktaint::sig_synth::{
    default_variants, internal_mangle, sealed_ctor_variant, DefaultKind, MethodSignature, SignatureVariant, SlotRef,
};
use ktaint::spec_dsl::{dump_normalized, normalize_spec, parse_spec, NormalizedQuery};

use super::gen::{program_strategy, GEN_SPEC};
use super::oracle::inline_analyze;

pub type PropResult = Result<(), String>;

pub fn run<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> PropResult {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

// ---- generators ------------------------------------------------------------

const LEAVES: &[&str] = &[
    "Int", "Long", "Char", "Boolean", "Double", "String", "Any", "Number", "Nothing", "CharSequence", "IntArray",
    "ByteArray", "Throwable", "com.acme.User", "com.acme.Outer.Inner", "T", "_",
];
const GENERICS: &[&str] = &["List", "MutableList", "Set", "Map", "Map.Entry", "Array", "Iterable", "com.acme.Box"];

fn leaf_type() -> impl Strategy<Value = String> {
    (prop::sample::select(LEAVES), any::<bool>()).prop_map(|(n, q)| if q { format!("{n}?") } else { n.to_string() })
}

/// Non-function types: leaves and (nested) generics.
fn value_type() -> impl Strategy<Value = String> {
    leaf_type().prop_recursive(3, 16, 3, |inner| {
        (
            prop::sample::select(GENERICS),
            prop::collection::vec(prop_oneof![4 => inner, 1 => Just("*".to_string())], 1..=2),
            any::<bool>(),
        )
            .prop_map(|(g, args, q)| format!("{g}<{}>{}", args.join(", "), if q { "?" } else { "" }))
    })
}

/// Any type the parser accepts at top level, including function types.
pub fn kotlin_type() -> impl Strategy<Value = String> {
    let function = (prop::collection::vec(value_type(), 0..=3), value_type(), any::<bool>()).prop_map(|(ps, r, q)| {
        let f = format!("({}) -> {r}", ps.join(", "));
        if q {
            format!("({f})?")
        } else {
            f
        }
    });
    prop_oneof![3 => value_type(), 1 => function]
}

const JVM_TYPES: &[&str] = &[
    "int",
    "boolean",
    "java.lang.String",
    "java.lang.Object",
    "java.util.List<java.lang.String>",
    "java.util.Map<K, V>",
    "int[]",
    "java.lang.String[]",
    "kotlin.jvm.functions.Function2",
    "com.acme.User",
];

pub fn method_signature() -> impl Strategy<Value = MethodSignature> {
    (
        prop::sample::select(&["com.acme.Db", "com.acme.web.Request", "a.B$Companion", "Top"][..]),
        prop::sample::select(&["run", "get", "<init>", "plus", "exec$impl"][..]),
        prop::sample::select(JVM_TYPES),
        prop::collection::vec(prop::sample::select(JVM_TYPES), 0..=4),
        any::<bool>(),
    )
        .prop_map(|(class, name, ret, params, is_static)| {
            let params = params.into_iter().map(JvmTypeName::new).collect();
            if name == "<init>" {
                MethodSignature::constructor(class, params)
            } else {
                let sig = MethodSignature::new(class, JvmTypeName::new(ret), name, params);
                if is_static {
                    sig.into_static()
                } else {
                    sig
                }
            }
        })
}

// ---- properties ------------------------------------------------------------

fn check_variant(v: &SignatureVariant) -> Result<(), TestCaseError> {
    prop_assert!(v.slot_map.is_injective(), "{} is not injective", v.signature);
    let arity = v.signature.arity();
    for slot in v.slot_map.domain() {
        match v.slot_map.apply(slot) {
            Some(SlotRef::Param(i)) => prop_assert!(i < arity, "{slot} -> param({i}) out of range in {}", v.signature),
            Some(_) => {}
            None => return Err(TestCaseError::fail(format!("{slot} unmapped in {}", v.signature))),
        }
    }
    Ok(())
}

pub fn slot_map_injectivity(cases: u32) -> PropResult {
    run(cases, (method_signature(), "[a-z-]{0,8}"), |(sig, module)| {
        let kinds = if sig.is_constructor {
            vec![DefaultKind::Constructor]
        } else {
            vec![DefaultKind::Member, DefaultKind::TopLevel]
        };
        for kind in kinds {
            for v in default_variants(&sig, kind) {
                check_variant(&v)?;
            }
        }
        if sig.is_constructor {
            check_variant(&sealed_ctor_variant(&sig).map_err(|e| TestCaseError::fail(e.to_string()))?)?;
        }
        check_variant(&internal_mangle(&sig, &module).0)?;
        Ok(())
    })
}

fn spec_for(descriptor: &str, slots: &str) -> String {
    format!("query \"q\" {{\n  source {{ {descriptor} {slots} }}\n  sink {{ method \"x.S: void s(int)\" in param1 }}\n}}\n")
}

fn normalize_text(text: &str) -> Result<Vec<NormalizedQuery>, TestCaseError> {
    let spec = parse_spec(text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
    normalize_spec(&spec, &AnalysisOptions::default()).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))
}

/// Normalizing the normalized base signature again (with default expansion
/// off) reproduces it unchanged, and normalization itself is repeatable.
pub fn normalization_idempotence(cases: u32) -> PropResult {
    // `Unit?` lowers to the class name `Unit`, which as Kotlin text means
    // `void`; it is the one type whose lowering is not a fixed point.
    let ty = || kotlin_type().prop_filter("Unit? is not idempotent", |t| !t.contains("Unit?"));
    run(
        cases,
        (ty(), prop::collection::vec(ty(), 0..=3), any::<bool>()),
        |(ret, params, member)| {
            let kotlin = format!("com.acme.Api: {ret} call({})", params.join(", "));
            let slots = if params.is_empty() { "out return".to_string() } else { format!("in param{} out return", params.len()) };
            let text = spec_for(&format!("method \"{kotlin}\"{}", if member { "" } else { " no-defaults" }), &slots);
            let first = normalize_text(&text)?;
            prop_assert_eq!(&first, &normalize_text(&text)?);
            let base = &first[0].rules[0].variants[0];
            let again = spec_for(&format!("method \"{}\" no-defaults", base.signature()), &slots);
            let second = normalize_text(&again)?;
            let rule = &second[0].rules[0];
            prop_assert_eq!(rule.variants.len(), 1);
            prop_assert_eq!(&rule.variants[0].variant, &base.variant);
            prop_assert_eq!(rule.variants[0].signature().is_static, base.signature().is_static);
            prop_assert_eq!(&rule.variants[0].in_slots, &base.in_slots);
            prop_assert_eq!(dump_normalized(&second), dump_normalized(&normalize_text(&again)?));
            Ok(())
        },
    )
}

pub fn type_round_trip(cases: u32) -> PropResult {
    run(cases, kotlin_type(), |text| {
        let parsed = parse_kotlin_type(&text).map_err(|e| TestCaseError::fail(format!("{text}: {e}")))?;
        let printed = parsed.to_string();
        let reparsed = parse_kotlin_type(&printed).map_err(|e| TestCaseError::fail(format!("{printed}: {e}")))?;
        prop_assert_eq!(&reparsed, &parsed);
        prop_assert_eq!(reparsed.to_string(), printed);
        Ok(())
    })
}

pub fn signature_round_trip(cases: u32) -> PropResult {
    run(cases, method_signature(), |sig| {
        let printed = sig.to_string();
        let parsed = MethodSignature::parse(&printed).map_err(|e| TestCaseError::fail(format!("{printed}: {e}")))?;
        prop_assert_eq!(&parsed, &sig);
        prop_assert_eq!(parsed.canonical(), sig.canonical());
        prop_assert_eq!(parsed.to_string(), printed);
        Ok(())
    })
}

fn parse(text: &str) -> Result<IrProgram, TestCaseError> {
    parse_ir(text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))
}

/// Generated programs, optionally with `line N` overrides on every statement.
pub fn ir_round_trip(cases: u32) -> PropResult {
    run(cases, (program_strategy(), prop::collection::vec(1usize..400, 0..64)), |(gen, lines)| {
        let mut program = parse(&gen.to_ir())?;
        if !lines.is_empty() {
            let mut classes = program.classes.clone();
            let mut k = 0;
            for s in classes.iter_mut().flat_map(|c| c.methods.iter_mut()).flat_map(|m| m.statements.iter_mut()) {
                s.line = lines[k % lines.len()];
                k += 1;
            }
            program = IrProgram::from_classes(classes).map_err(|e| TestCaseError::fail(e.to_string()))?;
        }
        let printed = program.to_string();
        let reparsed = parse(&printed)?;
        prop_assert_eq!(&reparsed, &program);
        prop_assert_eq!(reparsed.to_string(), printed);
        Ok(())
    })
}

fn gen_queries(options: &AnalysisOptions) -> Vec<NormalizedQuery> {
    normalize_spec(&parse_spec(GEN_SPEC).expect("generator spec parses"), options).expect("generator spec normalizes")
}

/// Two runs, and a run on the re-printed program, give byte-identical SARIF.
pub fn determinism(cases: u32) -> PropResult {
    let queries = gen_queries(&AnalysisOptions::default());
    run(cases, program_strategy(), |gen| {
        let program = parse(&gen.to_ir())?;
        let reprinted = parse(&program.to_string())?;
        let options = AnalysisOptions::default();
        let a = to_sarif(&analyze(&program, &queries, &options), "0");
        let b = to_sarif(&analyze(&program, &queries, &options), "0");
        let c = to_sarif(&analyze(&reprinted, &queries, &options), "0");
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(&a, &c);
        Ok(())
    })
}

fn flow_set(findings: &[Finding]) -> BTreeSet<(String, String, usize, String, usize)> {
    findings
        .iter()
        .map(|f| (f.query.clone(), f.source.method.clone(), f.source.line, f.sink.method.clone(), f.sink.line))
        .collect()
}

/// Switching off any Kotlin-specific handling never adds a finding
/// (with implicit propagation off; sanitizers are written in JVM form).
pub fn ablation_monotonicity(cases: u32) -> PropResult {
    let full = AnalysisOptions::default();
    let base_queries = gen_queries(&full);
    let ablations: Vec<(&str, AnalysisOptions, Vec<NormalizedQuery>)> = AnalysisOptions::FLAGS
        .iter()
        .filter(|f| **f != "implicit-propagation")
        .map(|f| {
            let opts = full.clone().with_flag(f).unwrap();
            let qs = gen_queries(&opts);
            (*f, opts, qs)
        })
        .collect();
    run(cases, program_strategy(), |gen| {
        let program = parse(&gen.to_ir())?;
        let all = flow_set(&analyze(&program, &base_queries, &full));
        for (flag, opts, qs) in &ablations {
            let fewer = flow_set(&analyze(&program, qs, opts));
            prop_assert!(fewer.is_subset(&all), "--{flag} added {:?}", fewer.difference(&all).collect::<Vec<_>>());
        }
        Ok(())
    })
}

/// Summary-based results equal the depth-3 inliner exactly, witnesses included.
pub fn oracle_equivalence(cases: u32) -> PropResult {
    let plain = gen_queries(&AnalysisOptions::default());
    run(cases, (program_strategy(), any::<bool>()), |(gen, implicit)| {
        let program = parse(&gen.to_ir())?;
        let options = AnalysisOptions {
            implicit_propagation: implicit,
            ..AnalysisOptions::default()
        };
        let engine = analyze(&program, &plain, &options);
        let oracle = inline_analyze(&program, &plain, implicit, 3);
        prop_assert_eq!(engine, oracle, "program:\n{}", gen.to_ir());
        Ok(())
    })
}

pub const PROPERTY_SUITE: &[(&str, fn(u32) -> PropResult)] = &[
    ("slot-map injectivity", slot_map_injectivity),
    ("normalization idempotence", normalization_idempotence),
    ("type round trip", type_round_trip),
    ("signature round trip", signature_round_trip),
    ("IR round trip", ir_round_trip),
    ("determinism", determinism),
    ("ablation monotonicity", ablation_monotonicity),
];
