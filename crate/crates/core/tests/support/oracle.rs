//! Brute-force reference analysis: every in-program call is inlined (up to
//! a fixed depth) with concrete taint, instead of going through summaries.
//! Rule semantics are shared with the engine through `role_effect`, so the
//! two can only disagree on interprocedural bookkeeping.

use std::collections::BTreeMap;

use ktaint::engine::{
    assemble_findings, role_effect, CallSlots, FieldKey, Finding, Origin, RawFlow, SiteId, Taint,
};
use ktaint::ir::{IrProgram, MethodId, StmtKind};
use ktaint::sig_synth::SlotRef;
use ktaint::spec_dsl::NormalizedQuery;

pub struct Inliner<'a> {
    program: &'a IrProgram,
    query: &'a NormalizedQuery,
    query_index: usize,
    implicit_propagation: bool,
    max_depth: usize,
    flows: Vec<RawFlow>,
}

struct Exit {
    ret: Taint,
    this: Taint,
    params: BTreeMap<usize, Taint>,
}

type Fields = BTreeMap<FieldKey, Taint>;

impl Inliner<'_> {
    fn run_method(&mut self, mid: MethodId, this_in: &Taint, args_in: &[Taint], fields: &mut Fields, stack: &mut Vec<SiteId>) -> Exit {
        let method = self.program.method(mid);
        let mut locals: BTreeMap<String, Taint> = BTreeMap::new();
        let get = |locals: &BTreeMap<String, Taint>, l: &str| locals.get(l).cloned().unwrap_or_default();
        let mut ret = Taint::new();
        let mut this_local: Option<String> = None;
        let mut param_locals: BTreeMap<usize, String> = BTreeMap::new();

        for (idx, stmt) in method.statements.iter().enumerate() {
            let site = SiteId { method: mid, stmt: idx };
            match &stmt.kind {
                StmtKind::IdentityParam { local, index } => {
                    param_locals.entry(*index).or_insert_with(|| local.clone());
                    locals.insert(local.clone(), args_in.get(*index).cloned().unwrap_or_default());
                }
                StmtKind::IdentityThis { local } => {
                    this_local.get_or_insert_with(|| local.clone());
                    locals.insert(local.clone(), this_in.clone());
                }
                StmtKind::Const { local, .. } => {
                    locals.insert(local.clone(), Taint::new());
                }
                StmtKind::Copy { dst, src } => {
                    let t = get(&locals, src);
                    locals.insert(dst.clone(), t);
                }
                StmtKind::FieldStore { base, field, src } => {
                    let t = get(&locals, src);
                    if !t.is_empty() {
                        fields.entry(FieldKey::from_base(base, field)).or_default().extend(t);
                    }
                }
                StmtKind::FieldLoad { dst, base, field } => {
                    let t = fields.get(&FieldKey::from_base(base, field)).cloned().unwrap_or_default();
                    locals.insert(dst.clone(), t);
                }
                StmtKind::Return(l) => {
                    if let Some(l) = l {
                        ret.extend(get(&locals, l));
                    }
                }
                StmtKind::Invoke {
                    callee,
                    receiver,
                    args,
                    result,
                } => {
                    let slots = CallSlots {
                        receiver: receiver.as_ref().map(|r| get(&locals, r)),
                        args: args.iter().map(|a| get(&locals, a)).collect(),
                    };
                    let effect = role_effect(self.query, callee, site, &slots);
                    if let Some(cleared) = &effect.sanitized {
                        if let Some(r) = result {
                            locals.insert(r.clone(), Taint::new());
                        }
                        for slot in cleared {
                            let target = match slot {
                                SlotRef::This(_) => receiver.as_ref(),
                                SlotRef::Param(i) => args.get(*i),
                                SlotRef::Return => None,
                            };
                            if let Some(l) = target {
                                locals.insert(l.clone(), Taint::new());
                            }
                        }
                        continue;
                    }
                    for origin in &effect.sink_origins {
                        if let Origin::Source { site: source, .. } = origin {
                            self.flows.push(RawFlow {
                                query: self.query_index,
                                source: *source,
                                sink: site,
                                path: stack.clone(),
                            });
                        }
                    }
                    let mut result_taint = effect.result.clone();
                    let mut receiver_add = effect.receiver.clone();
                    let mut arg_add = effect.args.clone();
                    match self.program.lookup(callee) {
                        Some(target) if stack.len() < self.max_depth => {
                            stack.push(site);
                            let exit = self.run_method(
                                target,
                                slots.receiver.as_ref().unwrap_or(&Taint::new()),
                                &slots.args,
                                fields,
                                stack,
                            );
                            stack.pop();
                            result_taint.extend(exit.ret);
                            if receiver.is_some() {
                                receiver_add.extend(exit.this);
                            }
                            for (i, t) in exit.params {
                                arg_add.entry(i).or_default().extend(t);
                            }
                        }
                        Some(_) => {}
                        None => {
                            if self.implicit_propagation && !effect.any_rule_matched {
                                for t in slots.args.iter().chain(slots.receiver.iter()) {
                                    result_taint.extend(t.iter().cloned());
                                }
                            }
                        }
                    }
                    if let Some(r) = result {
                        locals.insert(r.clone(), result_taint);
                    }
                    if let Some(r) = receiver {
                        locals.entry(r.clone()).or_default().extend(receiver_add);
                    }
                    for (i, t) in arg_add {
                        if let Some(a) = args.get(i) {
                            locals.entry(a.clone()).or_default().extend(t);
                        }
                    }
                }
            }
        }
        Exit {
            ret,
            this: this_local.map(|l| get(&locals, &l)).unwrap_or_default(),
            params: param_locals.into_iter().map(|(i, l)| (i, get(&locals, &l))).collect(),
        }
    }
}

/// Every method is a root; callees are inlined up to `max_depth` nested calls.
pub fn inline_analyze(program: &IrProgram, queries: &[NormalizedQuery], implicit_propagation: bool, max_depth: usize) -> Vec<Finding> {
    let mut flows = Vec::new();
    for (qi, query) in queries.iter().enumerate() {
        let mut inliner = Inliner {
            program,
            query,
            query_index: qi,
            implicit_propagation,
            max_depth,
            flows: Vec::new(),
        };
        for mid in program.method_ids() {
            let mut fields = Fields::new();
            inliner.run_method(mid, &Taint::new(), &[], &mut fields, &mut Vec::new());
        }
        flows.extend(inliner.flows);
    }
    assemble_findings(program, queries, flows)
}
