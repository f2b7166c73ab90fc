//! Forward interprocedural taint propagation.
//!
//! Each method is summarized per set of tainted entry slots. Taint that
//! entered through a slot is carried symbolically (`Origin::Entry`) and
//! replaced by the caller's concrete origins when the summary is applied,
//! so a single summary serves every call site with the same tainted slots.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::ir::{class_uri, FieldBase, IrProgram, MethodId, StmtKind};
use crate::sig_synth::{MethodSignature, SlotRef};
use crate::spec_dsl::{NormalizedQuery, NormalizedRule, NormalizedVariant, Role};

/// Engine switches. All but `implicit_propagation` turn off one piece of
/// Kotlin-specific handling and exist to show what an unaware analysis misses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AnalysisOptions {
    /// Opaque calls without any matching rule pass argument taint to their result.
    pub implicit_propagation: bool,
    pub no_default_expansion: bool,
    pub no_type_mapping: bool,
    pub no_alias_resolution: bool,
    pub no_extension_handling: bool,
    /// Properties, top-level members, infix functions and operators are not
    /// translated; such rules match nothing.
    pub no_construct_synthesis: bool,
}

impl AnalysisOptions {
    /// Command-line spellings of the switches, as used by `--<flag>` and
    /// corpus manifests.
    pub const FLAGS: &'static [&'static str] = &[
        "implicit-propagation",
        "no-default-args",
        "no-type-mapping",
        "no-alias-resolution",
        "no-extension-handling",
        "no-construct-synthesis",
    ];

    pub fn set_flag(&mut self, flag: &str) -> Result<(), String> {
        match flag {
            "implicit-propagation" => self.implicit_propagation = true,
            "no-default-args" => self.no_default_expansion = true,
            "no-type-mapping" => self.no_type_mapping = true,
            "no-alias-resolution" => self.no_alias_resolution = true,
            "no-extension-handling" => self.no_extension_handling = true,
            "no-construct-synthesis" => self.no_construct_synthesis = true,
            other => {
                return Err(format!(
                    "unknown flag `{other}` (expected one of: {})",
                    Self::FLAGS.join(", ")
                ))
            }
        }
        Ok(())
    }

    pub fn with_flag(mut self, flag: &str) -> Result<Self, String> {
        self.set_flag(flag)?;
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldKey {
    /// `None` for instance fields, which are merged across all objects.
    pub owner: Option<String>,
    pub name: String,
}

impl FieldKey {
    pub fn from_base(base: &FieldBase, name: &str) -> Self {
        FieldKey {
            owner: match base {
                FieldBase::Local(_) => None,
                FieldBase::Class(c) => Some(c.clone()),
            },
            name: name.to_string(),
        }
    }
}

impl fmt::Display for FieldKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.owner {
            Some(o) => write!(f, "{o}.{}", self.name),
            None => write!(f, "*.{}", self.name),
        }
    }
}

/// A statement position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SiteId {
    pub method: MethodId,
    pub stmt: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntrySlot {
    This,
    Param(usize),
    Field(FieldKey),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Origin {
    /// Whatever taint the caller had in this slot.
    Entry(EntrySlot),
    Source { rule: usize, site: SiteId },
}

pub type Taint = BTreeSet<Origin>;

/// Call sites from the summarized method down to the sink.
pub type DescentPath = Vec<SiteId>;

fn better_path(candidate: &DescentPath, current: &DescentPath) -> bool {
    (candidate.len(), candidate) < (current.len(), current)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Summary {
    pub ret: Taint,
    pub this: Taint,
    pub params: BTreeMap<usize, Taint>,
    pub fields: BTreeMap<FieldKey, Taint>,
    /// Best descent path per (origin reaching a sink, sink site).
    pub hits: BTreeMap<(Origin, SiteId), DescentPath>,
}

impl Summary {
    /// Union with `other`; hit paths keep the shorter one. Returns whether
    /// anything changed.
    fn absorb(&mut self, other: &Summary) -> bool {
        let mut changed = union_into(&mut self.ret, &other.ret);
        changed |= union_into(&mut self.this, &other.this);
        for (k, t) in &other.params {
            changed |= union_into(self.params.entry(*k).or_default(), t);
        }
        for (k, t) in &other.fields {
            changed |= union_into(self.fields.entry(k.clone()).or_default(), t);
        }
        for (k, p) in &other.hits {
            changed |= merge_hit(&mut self.hits, k.clone(), p.clone());
        }
        changed
    }
}

fn union_into(dst: &mut Taint, src: &Taint) -> bool {
    let before = dst.len();
    dst.extend(src.iter().cloned());
    dst.len() != before
}

fn merge_hit(hits: &mut BTreeMap<(Origin, SiteId), DescentPath>, key: (Origin, SiteId), path: DescentPath) -> bool {
    match hits.get_mut(&key) {
        Some(existing) if better_path(&path, existing) => {
            *existing = path;
            true
        }
        Some(_) => false,
        None => {
            hits.insert(key, path);
            true
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Location {
    pub class: String,
    pub file: Option<String>,
    pub method: String,
    pub line: usize,
}

impl Location {
    pub fn at(program: &IrProgram, site: SiteId) -> Self {
        let class = program.class_of(site.method);
        let method = program.method(site.method);
        Location {
            class: class.name.clone(),
            file: class.source_file.clone(),
            method: method.signature.to_string(),
            line: method.statements[site.stmt].line,
        }
    }

    pub fn uri(&self) -> String {
        class_uri(&self.class, self.file.as_deref())
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.uri(), self.line)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub query: String,
    pub message: String,
    pub source: Location,
    pub sink: Location,
    /// Source, then the call sites descending to the sink, then the sink.
    pub witness: Vec<Location>,
}

/// A raw source-to-sink hit before deduplication.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RawFlow {
    pub query: usize,
    pub source: SiteId,
    pub sink: SiteId,
    pub path: DescentPath,
}

/// Deduplicates by (query, source, sink), keeping the shortest witness, and
/// sorts by query id, source file, source line, sink line.
pub fn assemble_findings(program: &IrProgram, queries: &[NormalizedQuery], flows: Vec<RawFlow>) -> Vec<Finding> {
    let mut best: BTreeMap<(usize, SiteId, SiteId), DescentPath> = BTreeMap::new();
    for f in flows {
        let key = (f.query, f.source, f.sink);
        match best.get(&key) {
            Some(existing) if !better_path(&f.path, existing) => {}
            _ => {
                best.insert(key, f.path);
            }
        }
    }
    let mut findings: Vec<Finding> = best
        .into_iter()
        .map(|((q, src, sink), path)| {
            let source = Location::at(program, src);
            let sink_loc = Location::at(program, sink);
            let mut witness = vec![source.clone()];
            witness.extend(path.iter().map(|s| Location::at(program, *s)));
            witness.push(sink_loc.clone());
            Finding {
                query: queries[q].id.clone(),
                message: queries[q].message.clone(),
                source,
                sink: sink_loc,
                witness,
            }
        })
        .collect();
    findings.sort_by(|a, b| {
        (&a.query, a.source.uri(), a.source.line, a.sink.line, a.sink.uri(), &a.source.method, &a.sink.method)
            .cmp(&(&b.query, b.source.uri(), b.source.line, b.sink.line, b.sink.uri(), &b.source.method, &b.sink.method))
    });
    findings
}

/// Taint of each slot of a call, evaluated before the call.
#[derive(Debug, Clone, Default)]
pub struct CallSlots {
    pub receiver: Option<Taint>,
    pub args: Vec<Taint>,
}

impl CallSlots {
    pub fn slot(&self, slot: SlotRef) -> Option<&Taint> {
        match slot {
            SlotRef::This(_) => self.receiver.as_ref(),
            SlotRef::Param(i) => self.args.get(i),
            SlotRef::Return => None,
        }
    }

    fn tainted(&self, slot: SlotRef) -> bool {
        self.slot(slot).is_some_and(|t| !t.is_empty())
    }

    fn union_of(&self, slots: &[SlotRef]) -> Taint {
        slots.iter().filter_map(|s| self.slot(*s)).flatten().cloned().collect()
    }
}

/// Effect of the matching rules of one query at a call.
#[derive(Debug, Clone, Default)]
pub struct RoleEffect {
    /// A sanitizer fired: these slots are cleared and nothing else applies.
    pub sanitized: Option<Vec<SlotRef>>,
    pub result: Taint,
    pub receiver: Taint,
    pub args: BTreeMap<usize, Taint>,
    /// (origin, sink rule) pairs that reached a sink at this call.
    pub sink_origins: Taint,
    pub any_rule_matched: bool,
}

impl RoleEffect {
    fn add_out(&mut self, slot: SlotRef, taint: &Taint) {
        match slot {
            SlotRef::Return => {
                self.result.extend(taint.iter().cloned());
            }
            SlotRef::This(_) => {
                self.receiver.extend(taint.iter().cloned());
            }
            SlotRef::Param(i) => {
                self.args.entry(i).or_default().extend(taint.iter().cloned());
            }
        }
    }
}

fn matches_of<'q>(query: &'q NormalizedQuery, role: Role, callee: &MethodSignature) -> Vec<(&'q NormalizedRule, &'q NormalizedVariant)> {
    query
        .rules
        .iter()
        .filter(|r| r.role == role)
        .filter_map(|r| r.match_call(callee).map(|v| (r, v)))
        .collect()
}

/// Rule semantics at a call. Sanitizers take precedence over every other
/// role; propagators, sources and sinks otherwise all apply, each reading
/// the pre-call taint.
pub fn role_effect(query: &NormalizedQuery, callee: &MethodSignature, site: SiteId, slots: &CallSlots) -> RoleEffect {
    let mut effect = RoleEffect::default();
    let sanitizers = matches_of(query, Role::Sanitizer, callee);
    let propagators = matches_of(query, Role::Propagator, callee);
    let sources = matches_of(query, Role::Source, callee);
    let sinks = matches_of(query, Role::Sink, callee);
    effect.any_rule_matched = !(sanitizers.is_empty() && propagators.is_empty() && sources.is_empty() && sinks.is_empty());

    for (_, v) in &sanitizers {
        if v.in_slots.iter().any(|s| slots.tainted(*s)) {
            let cleared = effect.sanitized.get_or_insert_with(Vec::new);
            cleared.extend(v.in_slots.iter().copied());
        }
    }
    if effect.sanitized.is_some() {
        return effect;
    }
    for (_, v) in &propagators {
        if v.in_slots.iter().any(|s| slots.tainted(*s)) {
            let incoming = slots.union_of(&v.in_slots);
            for out in &v.out_slots {
                effect.add_out(*out, &incoming);
            }
        }
    }
    for (r, v) in &sources {
        let produced: Taint = [Origin::Source { rule: r.index, site }].into();
        for out in &v.out_slots {
            effect.add_out(*out, &produced);
        }
    }
    for (_, v) in &sinks {
        effect.sink_origins.extend(slots.union_of(&v.in_slots));
    }
    effect
}

#[derive(Debug, Clone, Default)]
struct State {
    locals: BTreeMap<String, Taint>,
    fields: BTreeMap<FieldKey, Taint>,
}

impl State {
    fn local(&self, name: &str) -> Taint {
        self.locals.get(name).cloned().unwrap_or_default()
    }

    fn set(&mut self, name: &str, taint: Taint) {
        if taint.is_empty() {
            self.locals.remove(name);
        } else {
            self.locals.insert(name.to_string(), taint);
        }
    }

    fn add(&mut self, name: &str, taint: &Taint) {
        if !taint.is_empty() {
            self.locals.entry(name.to_string()).or_default().extend(taint.iter().cloned());
        }
    }
}

type SummaryKey = (MethodId, BTreeSet<EntrySlot>);

struct QueryAnalysis<'a> {
    program: &'a IrProgram,
    query: &'a NormalizedQuery,
    options: &'a AnalysisOptions,
    table: BTreeMap<SummaryKey, Summary>,
    changed: bool,
}

impl<'a> QueryAnalysis<'a> {
    fn summary(&mut self, key: &SummaryKey) -> Summary {
        if let Some(s) = self.table.get(key) {
            return s.clone();
        }
        // Recursive uses see the empty summary until the outer loop iterates.
        self.table.insert(key.clone(), Summary::default());
        self.changed = true;
        let computed = self.compute(key);
        let entry = self.table.get_mut(key).expect("summary inserted above");
        entry.absorb(&computed);
        entry.clone()
    }

    fn refresh(&mut self, key: &SummaryKey) {
        let computed = self.compute(key);
        let entry = self.table.get_mut(key).expect("known summary");
        if entry.absorb(&computed) {
            self.changed = true;
        }
    }

    fn compute(&mut self, key: &SummaryKey) -> Summary {
        let (mid, entry) = key;
        let method = self.program.method(*mid);
        let mut st = State::default();
        for slot in entry {
            if let EntrySlot::Field(k) = slot {
                st.fields.insert(k.clone(), [Origin::Entry(slot.clone())].into());
            }
        }
        let mut out = Summary::default();
        let mut this_local: Option<&str> = None;
        let mut param_locals: BTreeMap<usize, &str> = BTreeMap::new();

        for (idx, stmt) in method.statements.iter().enumerate() {
            let site = SiteId { method: *mid, stmt: idx };
            match &stmt.kind {
                StmtKind::IdentityParam { local, index } => {
                    param_locals.entry(*index).or_insert(local);
                    let slot = EntrySlot::Param(*index);
                    let t = if entry.contains(&slot) { [Origin::Entry(slot)].into() } else { Taint::new() };
                    st.set(local, t);
                }
                StmtKind::IdentityThis { local } => {
                    this_local.get_or_insert(local);
                    let t = if entry.contains(&EntrySlot::This) {
                        [Origin::Entry(EntrySlot::This)].into()
                    } else {
                        Taint::new()
                    };
                    st.set(local, t);
                }
                StmtKind::Const { local, .. } => st.set(local, Taint::new()),
                StmtKind::Copy { dst, src } => {
                    let t = st.local(src);
                    st.set(dst, t);
                }
                StmtKind::FieldStore { base, field, src } => {
                    let t = st.local(src);
                    if !t.is_empty() {
                        st.fields.entry(FieldKey::from_base(base, field)).or_default().extend(t);
                    }
                }
                StmtKind::FieldLoad { dst, base, field } => {
                    let t = st.fields.get(&FieldKey::from_base(base, field)).cloned().unwrap_or_default();
                    st.set(dst, t);
                }
                StmtKind::Return(local) => {
                    if let Some(l) = local {
                        out.ret.extend(st.local(l));
                    }
                }
                StmtKind::Invoke {
                    callee,
                    receiver,
                    args,
                    result,
                } => {
                    self.call(&mut st, &mut out, site, callee, receiver.as_deref(), args, result.as_deref());
                }
            }
        }
        if let Some(l) = this_local {
            out.this = st.local(l);
        }
        for (i, l) in param_locals {
            let t = st.local(l);
            if !t.is_empty() {
                out.params.insert(i, t);
            }
        }
        out.fields = st.fields;
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn call(
        &mut self,
        st: &mut State,
        out: &mut Summary,
        site: SiteId,
        callee: &MethodSignature,
        receiver: Option<&str>,
        args: &[String],
        result: Option<&str>,
    ) {
        let slots = CallSlots {
            receiver: receiver.map(|r| st.local(r)),
            args: args.iter().map(|a| st.local(a)).collect(),
        };
        let effect = role_effect(self.query, callee, site, &slots);

        if let Some(cleared) = &effect.sanitized {
            if let Some(r) = result {
                st.set(r, Taint::new());
            }
            for slot in cleared {
                match slot {
                    SlotRef::This(_) => {
                        if let Some(r) = receiver {
                            st.set(r, Taint::new());
                        }
                    }
                    SlotRef::Param(i) => {
                        if let Some(a) = args.get(*i) {
                            st.set(a, Taint::new());
                        }
                    }
                    SlotRef::Return => {}
                }
            }
            return;
        }

        for origin in &effect.sink_origins {
            merge_hit(&mut out.hits, (origin.clone(), site), Vec::new());
        }
        let mut result_taint = effect.result.clone();
        let mut receiver_add = effect.receiver.clone();
        let mut arg_add = effect.args.clone();

        match self.program.lookup(callee) {
            Some(target) => {
                let mut entry = BTreeSet::new();
                if slots.receiver.as_ref().is_some_and(|t| !t.is_empty()) {
                    entry.insert(EntrySlot::This);
                }
                for (i, t) in slots.args.iter().enumerate() {
                    if !t.is_empty() {
                        entry.insert(EntrySlot::Param(i));
                    }
                }
                for k in st.fields.keys() {
                    entry.insert(EntrySlot::Field(k.clone()));
                }
                let summary = self.summary(&(target, entry));
                let subst = |t: &Taint| -> Taint {
                    let mut r = Taint::new();
                    for o in t {
                        match o {
                            Origin::Entry(EntrySlot::This) => r.extend(slots.receiver.clone().unwrap_or_default()),
                            Origin::Entry(EntrySlot::Param(i)) => r.extend(slots.args.get(*i).cloned().unwrap_or_default()),
                            Origin::Entry(EntrySlot::Field(k)) => r.extend(st.fields.get(k).cloned().unwrap_or_default()),
                            src @ Origin::Source { .. } => {
                                r.insert(src.clone());
                            }
                        }
                    }
                    r
                };
                result_taint.extend(subst(&summary.ret));
                if receiver.is_some() {
                    receiver_add.extend(subst(&summary.this));
                }
                for (i, t) in &summary.params {
                    arg_add.entry(*i).or_default().extend(subst(t));
                }
                let mut new_fields = st.fields.clone();
                for (k, t) in &summary.fields {
                    let s = subst(t);
                    if !s.is_empty() {
                        new_fields.entry(k.clone()).or_default().extend(s);
                    }
                }
                for ((origin, sink), path) in &summary.hits {
                    let mut full = vec![site];
                    full.extend(path.iter().copied());
                    for o in subst(&[origin.clone()].into()) {
                        merge_hit(&mut out.hits, (o, *sink), full.clone());
                    }
                }
                st.fields = new_fields;
            }
            None => {
                if self.options.implicit_propagation && !effect.any_rule_matched {
                    for t in slots.args.iter().chain(slots.receiver.iter()) {
                        result_taint.extend(t.iter().cloned());
                    }
                }
            }
        }

        if let Some(r) = result {
            st.set(r, result_taint);
        }
        if let Some(r) = receiver {
            st.add(r, &receiver_add);
        }
        for (i, t) in &arg_add {
            if let Some(a) = args.get(*i) {
                st.add(a, t);
            }
        }
    }

    fn run(&mut self) -> Vec<RawFlow> {
        let entries: Vec<SummaryKey> = self.program.method_ids().map(|m| (m, BTreeSet::new())).collect();
        // Lattice height bound: every summary can only grow, and hit paths
        // only shrink; this cap is never reached on finite inputs.
        let mut rounds = 0usize;
        loop {
            self.changed = false;
            for key in &entries {
                self.summary(key);
            }
            let keys: Vec<SummaryKey> = self.table.keys().cloned().collect();
            for key in &keys {
                self.refresh(key);
            }
            rounds += 1;
            if !self.changed {
                break;
            }
            assert!(rounds < 10_000, "taint fixpoint failed to converge");
        }
        let mut flows = Vec::new();
        for key in &entries {
            for ((origin, sink), path) in &self.table[key].hits {
                if let Origin::Source { site, .. } = origin {
                    flows.push(RawFlow {
                        query: 0,
                        source: *site,
                        sink: *sink,
                        path: path.clone(),
                    });
                }
            }
        }
        flows
    }
}

pub fn analyze(program: &IrProgram, queries: &[NormalizedQuery], options: &AnalysisOptions) -> Vec<Finding> {
    let mut flows = Vec::new();
    for (qi, query) in queries.iter().enumerate() {
        let mut qa = QueryAnalysis {
            program,
            query,
            options,
            table: BTreeMap::new(),
            changed: false,
        };
        flows.extend(qa.run().into_iter().map(|f| RawFlow { query: qi, ..f }));
    }
    assemble_findings(program, queries, flows)
}
