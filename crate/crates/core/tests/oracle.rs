mod support;

use std::cell::Cell;

use ktaint::engine::{analyze, AnalysisOptions};
use ktaint::ir::parse_ir;
use ktaint::spec_dsl::{normalize_spec, parse_spec};
use proptest::prelude::*;

use support::gen::{program_strategy, GEN_SPEC};
use support::oracle::inline_analyze;
use support::props::{oracle_equivalence, run};

/// The random programs must actually exercise flows, including ones that
/// cross calls; otherwise the equivalence check says little.
#[test]
fn generated_programs_exercise_interprocedural_flows() {
    let queries = normalize_spec(&parse_spec(GEN_SPEC).unwrap(), &AnalysisOptions::default()).unwrap();
    let with_findings = Cell::new(0u32);
    let crossing = Cell::new(0u32);
    let sanitized_calls = Cell::new(0u32);
    run(200, program_strategy(), |gen| {
        let text = gen.to_ir();
        let program = parse_ir(&text).unwrap();
        let findings = analyze(&program, &queries, &AnalysisOptions::default());
        if !findings.is_empty() {
            with_findings.set(with_findings.get() + 1);
        }
        if findings.iter().any(|f| f.witness.len() > 2 || f.source.method != f.sink.method) {
            crossing.set(crossing.get() + 1);
        }
        if text.contains("clean(") {
            sanitized_calls.set(sanitized_calls.get() + 1);
        }
        Ok(())
    })
    .unwrap();
    eprintln!(
        "programs with findings: {}, crossing calls: {}, with sanitizers: {}",
        with_findings.get(),
        crossing.get(),
        sanitized_calls.get()
    );
    assert!(with_findings.get() >= 50, "only {} of 200 programs had findings", with_findings.get());
    assert!(crossing.get() >= 10, "only {} programs had interprocedural findings", crossing.get());
}

#[test]
fn summaries_match_inliner_on_200_programs() {
    oracle_equivalence(200).unwrap();
}

/// Flows through callee field writes need a specific four-step chain, which
/// only a few hundredths of a percent of programs contain.
#[test]
fn summaries_match_inliner_on_2000_programs() {
    oracle_equivalence(2000).unwrap();
}

fn both(spec: &str, ir: &str) -> Vec<ktaint::Finding> {
    let queries = normalize_spec(&parse_spec(spec).unwrap(), &AnalysisOptions::default()).unwrap();
    let program = parse_ir(ir).unwrap();
    let engine = analyze(&program, &queries, &AnalysisOptions::default());
    assert_eq!(engine, inline_analyze(&program, &queries, false, 3));
    engine
}

const SRC_SINK: &str = r#"query "q" {
  source { method "x.Src: java.lang.String get()" out return }
  sink { method "x.Snk: void put(java.lang.String)" in param1 }
  sink { method "x.Snk: void run()" in this }
}"#;

#[test]
fn callee_field_and_receiver_writes_reach_the_caller() {
    let findings = both(
        SRC_SINK,
        r#"class a.Main {
  method "a.Main: void main(x.Snk)" {
    l0 = this
    l1 = param 0
    call "a.Main: void fill(x.Snk)" on l0 (l1)
    l2 = l0.f
    call "x.Snk: void put(java.lang.String)" (l2)
    call "x.Snk: void run()" on l1 ()
    l3 = gen.G.s
    call "x.Snk: void put(java.lang.String)" (l3)
    return
  }
  method "a.Main: void fill(x.Snk)" {
    l0 = this
    l1 = param 0
    l2 = call "x.Src: java.lang.String get()" ()
    l0.f = l2
    gen.G.s = l2
    l1 = l2
    return
  }
}
"#,
    );
    let sinks: Vec<usize> = findings.iter().map(|f| f.sink.line).collect();
    assert_eq!(sinks, vec![7, 8, 10]);
}

#[test]
fn oracle_agrees_on_a_hand_written_program() {
    let spec = parse_spec(
        r#"query "q" {
  source { method "x.Src: java.lang.String get()" out return }
  sanitizer { method "x.San: java.lang.String clean(java.lang.String)" in param1 out return }
  sink { method "x.Snk: void put(java.lang.String)" in param1 }
}"#,
    )
    .unwrap();
    let program = parse_ir(
        r#"class a.Main {
  method "a.Main: void main()" static {
    l0 = call "x.Src: java.lang.String get()" ()
    l1 = call "a.Main: java.lang.String id(java.lang.String)" (l0)
    call "a.Main: void leak(java.lang.String)" (l1)
    l2 = call "x.San: java.lang.String clean(java.lang.String)" (l1)
    call "a.Main: void leak(java.lang.String)" (l2)
    return
  }
  method "a.Main: java.lang.String id(java.lang.String)" static {
    l0 = param 0
    return l0
  }
  method "a.Main: void leak(java.lang.String)" static {
    l0 = param 0
    call "x.Snk: void put(java.lang.String)" (l0)
    return
  }
}
"#,
    )
    .unwrap();
    let queries = normalize_spec(&spec, &AnalysisOptions::default()).unwrap();
    let engine = analyze(&program, &queries, &AnalysisOptions::default());
    assert_eq!(engine, inline_analyze(&program, &queries, false, 3));
    assert_eq!(engine.len(), 1);
    let lines: Vec<usize> = engine[0].witness.iter().map(|l| l.line).collect();
    assert_eq!(lines, vec![3, 5, 16]);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    /// Extra depth never changes the oracle on these programs: three levels
    /// of inlining are already exhaustive.
    #[test]
    fn depth_three_is_exhaustive(gen in program_strategy()) {
        let queries = normalize_spec(&parse_spec(GEN_SPEC).unwrap(), &AnalysisOptions::default()).unwrap();
        let program = parse_ir(&gen.to_ir()).unwrap();
        prop_assert_eq!(inline_analyze(&program, &queries, false, 3), inline_analyze(&program, &queries, false, 8));
    }
}
