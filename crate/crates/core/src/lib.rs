//! Kotlin-aware taint analysis.
//!
//! Taint specifications are written against Kotlin source constructs
//! (properties, top-level functions, extensions, operators, ...) and compiled
//! down to the JVM-level method signatures the Kotlin compiler actually
//! emits. A small forward taint engine then runs those rules over a textual
//! three-address IR.

pub mod cli;
pub mod corpus;
pub mod engine;
pub mod ir;
pub mod kotlin_types;
pub mod report;
pub mod sig_synth;
pub mod spec_dsl;

pub use engine::{analyze, AnalysisOptions, Finding, Location};
pub use ir::{parse_ir, IrProgram};
pub use kotlin_types::{map_type, parse_kotlin_type, JvmTypeName, KotlinTypeExpr, TypeAliasTable};
pub use sig_synth::{MethodSignature, SignatureVariant, SlotRef};
pub use spec_dsl::{normalize, parse_spec, NormalizedQuery, TaintQuery};
