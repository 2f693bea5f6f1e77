//! The V5 point machine: PS, AS, PQ, TC, registers and the run loop.

pub mod links;
pub mod ltt;
pub mod reduce;

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::core::{
    eval_contextual, eval_isa_all, expand_context, format_binding, format_point, format_ref, isa_closure, time_blocked, Context, EvalError,
    PointId, PointRef, Role, Store, Variant,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    Actx,
    Addpq,
    Bind,
    Clrpq,
    Eval,
    Incctp,
    Inct,
    Isatoas,
    Lasm,
    Lujoin,
    Lulink,
    Luparse,
    Lwm1,
    New,
    Newsur,
    Newt,
    Outpq,
    Psisas,
    Ras,
    Rasm,
    Rctx,
    State,
    Surisa,
    Twisa,
    Twval,
    Val,
}

impl Op {
    pub const ALL: [Op; 26] = [
        Op::Actx,
        Op::Addpq,
        Op::Bind,
        Op::Clrpq,
        Op::Eval,
        Op::Incctp,
        Op::Inct,
        Op::Isatoas,
        Op::Lasm,
        Op::Lujoin,
        Op::Lulink,
        Op::Luparse,
        Op::Lwm1,
        Op::New,
        Op::Newsur,
        Op::Newt,
        Op::Outpq,
        Op::Psisas,
        Op::Ras,
        Op::Rasm,
        Op::Rctx,
        Op::State,
        Op::Surisa,
        Op::Twisa,
        Op::Twval,
        Op::Val,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Op::Actx => "opACTX",
            Op::Addpq => "opADDPQ",
            Op::Bind => "opBIND",
            Op::Clrpq => "opCLRPQ",
            Op::Eval => "opEVAL",
            Op::Incctp => "opINCCTP",
            Op::Inct => "opINCT",
            Op::Isatoas => "opISATOAS",
            Op::Lasm => "opLASM",
            Op::Lujoin => "opLUJOIN",
            Op::Lulink => "opLULINK",
            Op::Luparse => "opLUPARSE",
            Op::Lwm1 => "opLWM1",
            Op::New => "opNEW",
            Op::Newsur => "opNEWSUR",
            Op::Newt => "opNEWT",
            Op::Outpq => "opOUTPQ",
            Op::Psisas => "opPSISAS",
            Op::Ras => "opRAS",
            Op::Rasm => "opRASM",
            Op::Rctx => "opRCTX",
            Op::State => "opSTATE",
            Op::Surisa => "opSURISA",
            Op::Twisa => "opTWISA",
            Op::Twval => "opTWVAL",
            Op::Val => "opVAL",
        }
    }

    /// Parses an opcode label; the flag is set for the tracing `...t` form.
    pub fn parse(label: &str) -> Option<(Op, bool)> {
        if label == "opLW1" {
            return Some((Op::Lwm1, false));
        }
        if let Some(op) = Op::ALL.iter().find(|o| o.name() == label) {
            return Some((*op, false));
        }
        let base = label.strip_suffix('t')?;
        Op::ALL.iter().find(|o| o.name() == base).map(|o| (*o, true))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Reg {
    Ctp,
    New,
    Eval,
    Tctx,
    T,
    Wm1,
}

impl Reg {
    pub const ALL: [Reg; 6] = [Reg::Ctp, Reg::New, Reg::Eval, Reg::Tctx, Reg::T, Reg::Wm1];

    pub fn name(self) -> &'static str {
        match self {
            Reg::Ctp => "rCTP",
            Reg::New => "rNEW",
            Reg::Eval => "rEVAL",
            Reg::Tctx => "rTCTX",
            Reg::T => "rT",
            Reg::Wm1 => "rWM1",
        }
    }

    pub fn number(self) -> u32 {
        match self {
            Reg::Ctp => 501,
            Reg::New => 502,
            Reg::Eval => 503,
            Reg::Tctx => 504,
            Reg::T => 505,
            Reg::Wm1 => 507,
        }
    }
}

/// Predefined points every engine starts with.
#[derive(Clone, Copy, Debug)]
pub struct Reserved {
    pub as_ph: PointId,
    pub eoa: PointId,
    pub grounded: PointId,
    pub determiner: PointId,
    pub sur_action: PointId,
    pub null: PointId,
    pub eval_fail: PointId,
    pub ras_fail: PointId,
    pub parse: PointId,
    pub letter: PointId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PsEntry {
    pub r: PointRef,
    pub quiesced: bool,
    /// Set by opPSISAS: `show ps` prints the entry's is-a closure.
    pub annotate: bool,
}

impl PsEntry {
    pub fn new(r: PointRef) -> Self {
        PsEntry { r, quiesced: false, annotate: false }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Trace {
    pub ops: HashSet<Op>,
    pub bind: bool,
    pub twine: bool,
    pub eval: bool,
    pub reduce: bool,
    pub sequence: Option<String>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("{0} needs more points than the PS holds")]
    StackUnderflow(&'static str),
    #[error("run exceeded {0} steps")]
    RunawayGuard(u64),
}

pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000;

#[derive(Clone, Debug)]
pub struct Engine {
    pub store: Store,
    pub ps: Vec<PsEntry>,
    pub aggset: Vec<PointId>,
    pub pq: Vec<PointRef>,
    pub tc: Vec<PointId>,
    pub clock: u64,
    pub tctp: u64,
    pub trace: Trace,
    pub reserved: Reserved,
    pub step_budget: u64,
    pub op_counts: HashMap<Op, u64>,
    /// Thought points in creation order.
    pub thoughts: Vec<PointId>,
    regs: HashMap<Reg, PointRef>,
    ops: HashMap<PointId, (Op, bool)>,
    op_points: HashMap<Op, PointId>,
    reg_points: HashMap<PointId, Reg>,
    last_op: Option<Op>,
    /// Depth of reductions started from inside a reduction.
    pub(crate) reduce_depth: u32,
    out: Vec<String>,
}

impl Default for Engine {
    fn default() -> Self {
        Self::new()
    }
}

impl Engine {
    pub fn new() -> Self {
        let mut store = Store::new();
        let mut ops = HashMap::new();
        let mut op_points = HashMap::new();
        for op in Op::ALL {
            let plain = store.new_point(Some(op.name()), crate::core::Kind::Control, Role::Opcode).expect("fresh store");
            let traced = store.new_point(Some(&format!("{}t", op.name())), crate::core::Kind::Control, Role::Opcode).expect("fresh store");
            ops.insert(plain, (op, false));
            ops.insert(traced, (op, true));
            op_points.insert(op, plain);
        }
        let alias = store.new_point(Some("opLW1"), crate::core::Kind::Control, Role::Opcode).expect("fresh store");
        ops.insert(alias, (Op::Lwm1, false));
        let mut reg_points = HashMap::new();
        for reg in Reg::ALL {
            let p = store.new_point(Some(reg.name()), crate::core::Kind::Internal, Role::Register).expect("fresh store");
            reg_points.insert(p, reg);
        }
        let mut d = |l: &str| store.define(l);
        let reserved = Reserved {
            as_ph: d("asPH"),
            eoa: d("eoa"),
            grounded: d("grounded"),
            determiner: d("determiner"),
            sur_action: d("surAction"),
            null: d("null"),
            eval_fail: d("evalFail"),
            ras_fail: d("rasFail"),
            parse: d("parse"),
            letter: d("letter"),
        };
        for c in 'a'..='z' {
            let l = store.define(&format!("\"{c}\""));
            store.bind(vec![PointRef::isa(l)], vec![PointRef::base(reserved.letter)], 0, false).expect("non-empty key");
        }
        store.bind(vec![PointRef::value(reserved.eval_fail)], vec![PointRef::base(reserved.null)], 0, false).expect("non-empty key");
        store.set_next_ref(32);
        let t1 = store.anonymous(Role::Thought(1));
        let mut regs = HashMap::new();
        regs.insert(Reg::T, PointRef::base(t1));
        Engine {
            store,
            ps: Vec::new(),
            aggset: Vec::new(),
            pq: Vec::new(),
            tc: Vec::new(),
            clock: 1,
            tctp: 1,
            trace: Trace::default(),
            reserved,
            step_budget: DEFAULT_STEP_BUDGET,
            op_counts: HashMap::new(),
            thoughts: vec![t1],
            regs,
            ops,
            op_points,
            reg_points,
            last_op: None,
            reduce_depth: 0,
            out: Vec::new(),
        }
    }

    pub fn op_of(&self, p: PointId) -> Option<(Op, bool)> {
        self.ops.get(&p).copied()
    }

    pub fn reg_of(&self, p: PointId) -> Option<Reg> {
        self.reg_points.get(&p).copied()
    }

    pub fn op_point(&self, op: Op) -> PointId {
        self.op_points[&op]
    }

    pub fn op_point_traced(&self, op: Op) -> PointId {
        self.store.lookup(&format!("{}t", op.name())).expect("traced opcode points are predefined")
    }

    pub fn emit(&mut self, line: impl Into<String>) {
        self.out.push(line.into());
    }

    pub fn take_output(&mut self) -> Vec<String> {
        std::mem::take(&mut self.out)
    }

    /// Current register contents; rCTP and rTCTX are derived from the clocks.
    pub fn register(&mut self, reg: Reg) -> Option<PointRef> {
        match reg {
            Reg::Ctp => Some(PointRef::base(self.store.time_point(self.clock))),
            Reg::Tctx => Some(PointRef::base(self.store.time_point(self.tctp))),
            _ => self.regs.get(&reg).copied(),
        }
    }

    pub fn set_register(&mut self, reg: Reg, v: PointRef) {
        self.regs.insert(reg, v);
    }

    pub fn thought(&self) -> PointId {
        self.regs[&Reg::T].point
    }

    pub fn new_thought(&mut self) -> PointId {
        let n = self.thoughts.len() as u32 + 1;
        let t = self.store.anonymous(Role::Thought(n));
        self.thoughts.push(t);
        self.regs.insert(Reg::T, PointRef::base(t));
        t
    }

    /// PS points that take part in the context.
    pub fn explicit_points(&self) -> Vec<PointId> {
        self.ps
            .iter()
            .filter(|e| e.r.is_base() && !e.r.quoted)
            .map(|e| e.r.point)
            .filter(|&p| self.op_of(p).is_none() && self.reg_of(p).is_none())
            .collect()
    }

    pub fn context(&self) -> Context {
        expand_context(&self.store, &self.explicit_points(), self.clock)
    }

    fn dedupe_exempt(&self, r: &PointRef) -> bool {
        r.is_base() && (self.op_of(r.point).is_some() || self.reg_of(r.point).is_some() || r.point == self.reserved.eoa)
    }

    /// Pushes onto the PS top; an equal entry further down is removed.
    pub fn push(&mut self, r: PointRef) {
        let r = PointRef { remove: false, ..r };
        if !self.dedupe_exempt(&r) {
            self.ps.retain(|e| e.r != r);
        }
        self.ps.insert(0, PsEntry::new(r));
    }

    /// Pushes a value list so that its first point ends up on top.
    pub fn push_values(&mut self, values: &[PointRef]) {
        for v in values.iter().rev() {
            self.push(*v);
        }
    }

    /// True when an `eoa` lies above position `i`: the entry is an operand
    /// of a pending opcode and keeps its slot.
    fn is_operand(&self, i: usize) -> bool {
        self.ps[..i].iter().any(|e| e.r.is_base() && e.r.point == self.reserved.eoa)
    }

    /// Inserts values at position `i`, first value uppermost, removing
    /// equal entries elsewhere.
    fn insert_values(&mut self, i: usize, values: &[PointRef]) {
        let mut at = i;
        for v in values {
            let r = PointRef { remove: false, ..*v };
            if !self.dedupe_exempt(&r) {
                let before = self.ps[..at].iter().filter(|e| e.r == r).count();
                self.ps.retain(|e| e.r != r);
                at -= before;
            }
            self.ps.insert(at, PsEntry::new(r));
            at += 1;
        }
    }

    pub fn pop(&mut self, op: Op) -> Result<PointRef, EngineError> {
        if self.ps.is_empty() {
            return Err(EngineError::StackUnderflow(op.name()));
        }
        Ok(self.ps.remove(0).r.plain())
    }

    /// Pops points up to and including `eoa`, returning them in pop order.
    pub fn pop_until_eoa(&mut self, op: Op) -> Result<Vec<PointRef>, EngineError> {
        let Some(end) = self.ps.iter().position(|e| e.r.is_base() && e.r.point == self.reserved.eoa) else {
            return Err(EngineError::StackUnderflow(op.name()));
        };
        let taken: Vec<PointRef> = self.ps.drain(..=end).map(|e| e.r.plain()).collect();
        Ok(taken[..end].to_vec())
    }

    pub fn bind(&mut self, key: Vec<PointRef>, values: Vec<PointRef>, bonus: u32, ordered: bool) -> usize {
        let idx = self.store.bind(key, values, bonus, ordered).expect("callers never pass an empty key");
        if self.trace.bind {
            let line = format!("bind: {}", format_binding(&self.store, self.store.binding(idx)));
            self.emit(line);
        } else if self.trace.twine && self.store.binding(idx).is_twine() {
            let line = format!("twine: {}", format_binding(&self.store, self.store.binding(idx)));
            self.emit(line);
        }
        idx
    }

    /// [p.v] against the PS: a context point that is directly an instance of
    /// `p` is the answer; otherwise a normal contextual evaluation.
    pub fn eval_value_variant(&self, ctx: &Context, p: PointId) -> Result<Vec<PointRef>, EvalError> {
        for x in ctx.points() {
            if eval_isa_all(&self.store, ctx, x).contains(&p) {
                return Ok(vec![PointRef::base(x)]);
            }
        }
        eval_contextual(&self.store, ctx, &[PointRef::value(p)]).map(|o| o.values)
    }

    fn changed(&mut self) {
        for e in &mut self.ps {
            e.quiesced = false;
        }
    }

    fn is_lone_null(&self, vals: &[PointRef]) -> bool {
        vals.len() == 1 && vals[0].is_base() && vals[0].point == self.reserved.null
    }

    /// One action on the topmost actionable PS entry. Returns false when
    /// nothing in the PS could act.
    pub fn step(&mut self) -> Result<bool, EngineError> {
        let ctx = self.context();
        let mut i = 0;
        while i < self.ps.len() {
            let e = self.ps[i];
            if e.quiesced || e.r.quoted {
                i += 1;
                continue;
            }
            let p = e.r.point;
            match e.r.variant {
                Variant::Base => {
                    if let Some((op, traced)) = self.op_of(p) {
                        self.ps.remove(i);
                        self.exec(op, traced)?;
                        self.changed();
                        return Ok(true);
                    }
                    if let Some(reg) = self.reg_of(p) {
                        match self.register(reg) {
                            Some(v) => self.ps[i] = PsEntry::new(v),
                            None => {
                                self.ps.remove(i);
                                let line = format!("? Internal register (op={}) has no value", reg.number());
                                self.emit(line);
                            }
                        }
                        self.changed();
                        return Ok(true);
                    }
                }
                Variant::Value => {
                    let result = self.eval_value_variant(&ctx, p);
                    self.trace_sequence(p, &result);
                    match result {
                        Ok(vals) => {
                            self.ps.remove(i);
                            if self.is_lone_null(&vals) {
                            } else if self.is_operand(i) {
                                self.insert_values(i, &vals);
                            } else {
                                self.push_values(&vals);
                            }
                            self.changed();
                            return Ok(true);
                        }
                        Err(_) => self.ps[i].quiesced = true,
                    }
                }
                Variant::Isa => {}
            }
            i += 1;
        }
        Ok(false)
    }

    fn trace_sequence(&mut self, p: PointId, result: &Result<Vec<PointRef>, EvalError>) {
        let label = format_point(&self.store, p);
        let wanted = self.trace.eval || self.trace.sequence.as_deref().is_some_and(|pre| label.starts_with(pre));
        if !wanted {
            return;
        }
        let line = match result {
            Ok(vals) => format!("eval: [{label}.v] => {}", self.fmt_refs(vals, ", ")),
            Err(_) => format!("eval: [{label}.v] failed"),
        };
        self.emit(line);
    }

    /// Runs until the PS is quiescent. When every pending variant is waiting
    /// on a future time point, the clock jumps to the next time point that
    /// exists in the store.
    pub fn run(&mut self) -> Result<u64, EngineError> {
        let mut steps = 0u64;
        loop {
            if steps >= self.step_budget {
                return Err(EngineError::RunawayGuard(self.step_budget));
            }
            if self.step()? {
                steps += 1;
                continue;
            }
            let ctx = self.context();
            let blocked = self
                .ps
                .iter()
                .any(|e| e.quiesced && e.r.variant == Variant::Value && time_blocked(&self.store, &ctx, &[PointRef::value(e.r.point)]));
            match self.store.next_time_after(self.clock) {
                Some(t) if blocked => {
                    self.clock = t;
                    self.changed();
                    steps += 1;
                }
                _ => return Ok(steps),
            }
        }
    }

    pub fn exec(&mut self, op: Op, traced: bool) -> Result<(), EngineError> {
        *self.op_counts.entry(op).or_insert(0) += 1;
        let traced = traced || self.trace.ops.contains(&op);
        let prev = self.last_op.replace(op);
        match op {
            Op::Actx => {
                let p = self.pop(op)?;
                if !self.tc.contains(&p.point) {
                    self.tc.push(p.point);
                }
            }
            Op::Addpq => {
                let p = self.pop(op)?;
                self.pq.push(p);
            }
            Op::Bind => {
                let key = self.pop_until_eoa(op)?;
                let value = self.pop(op)?;
                if key.is_empty() {
                    self.emit("? opBIND: empty key set");
                } else {
                    let idx = self.bind(key, vec![value], 0, false);
                    if traced {
                        let line = format!("opBIND: {}", format_binding(&self.store, self.store.binding(idx)));
                        self.emit(line);
                    }
                }
            }
            Op::Clrpq => self.pq.clear(),
            Op::Eval => self.op_eval(traced)?,
            Op::Incctp => self.clock += 1,
            Op::Inct => {
                if prev == Some(Op::Inct) {
                    self.tctp += 1;
                } else {
                    self.tctp = self.clock + 1;
                }
            }
            Op::Isatoas => {
                let p = self.pop(op)?;
                let ctx = self.context();
                let isa = eval_isa_all(&self.store, &ctx, p.point);
                self.aggset.extend(isa);
                self.aggset.push(self.reserved.as_ph);
            }
            Op::Lasm => {
                let pts = self.pop_until_eoa(op)?;
                self.aggset.extend(pts.iter().map(|r| r.point));
            }
            Op::Lujoin | Op::Lulink => self.emit(format!("? {} is only valid within opLUPARSE", op.name())),
            Op::Luparse => ltt::ltt_parse(self)?,
            Op::Lwm1 => {
                let p = self.pop(op)?;
                self.regs.insert(Reg::Wm1, p);
            }
            Op::New => {
                let p = self.store.anonymous(Role::Plain);
                self.regs.insert(Reg::New, PointRef::base(p));
            }
            Op::Newsur => {
                let p = self.store.anonymous(Role::Surrogate);
                self.regs.insert(Reg::New, PointRef::base(p));
            }
            Op::Newt => {
                self.new_thought();
            }
            Op::Outpq => {
                let line = format!("PQ({}): {}", self.clock, self.fmt_refs(&self.pq.clone(), " "));
                self.emit(line);
            }
            Op::Psisas => {
                for e in &mut self.ps {
                    e.annotate = true;
                }
            }
            Op::Ras => reduce::reduce_as(self, false)?,
            Op::Rasm => reduce::reduce_as(self, true)?,
            Op::Rctx => self.tc.clear(),
            Op::State => self.op_state(),
            Op::Surisa => {
                let pts = self.pop_until_eoa(op)?;
                let sur = self.store.anonymous(Role::Surrogate);
                for p in pts {
                    self.bind(vec![PointRef::isa(sur)], vec![PointRef::base(p.point)], 0, false);
                }
                let t = self.thought();
                self.bind(vec![PointRef::isa(t)], vec![PointRef::base(sur)], 0, false);
            }
            Op::Twisa => {
                let v = self.pop(op)?;
                let p = self.pop(op)?;
                let idx = self.twine_with_tc(PointRef::isa(p.point), v);
                if traced {
                    let line = format!("opTWISA: {}", format_binding(&self.store, self.store.binding(idx)));
                    self.emit(line);
                }
            }
            Op::Twval => {
                let x = self.pop(op)?;
                let y = self.pop(op)?;
                let idx = self.twine_with_tc(PointRef::value(x.point), y);
                if traced {
                    let line = format!("opTWVAL: {}", format_binding(&self.store, self.store.binding(idx)));
                    self.emit(line);
                }
            }
            Op::Val => {
                let p = self.pop(op)?;
                self.push(PointRef::value(p.point));
            }
        }
        Ok(())
    }

    /// Twine keyed on the TC points, the variant and the twine time point.
    fn twine_with_tc(&mut self, variant: PointRef, value: PointRef) -> usize {
        let mut key: Vec<PointRef> = self.tc.iter().map(|&p| PointRef::base(p)).collect();
        key.push(variant);
        key.push(PointRef::base(self.store.time_point(self.tctp)));
        self.bind(key, vec![value], 0, false)
    }

    fn op_eval(&mut self, traced: bool) -> Result<(), EngineError> {
        let key = self.pop_until_eoa(Op::Eval)?;
        let ctx = self.context();
        let shown = self.fmt_refs(&key, " ");
        match eval_contextual(&self.store, &ctx, &key) {
            Ok(o) => {
                let v = o.values.first().copied().unwrap_or(PointRef::base(self.reserved.null));
                self.regs.insert(Reg::Eval, v);
                if traced {
                    let b = format_binding(&self.store, self.store.binding(o.matched.expect("successful eval has a match")));
                    self.emit(format!("opEVAL: [{shown}] => {b}"));
                }
            }
            Err(_) => {
                if traced {
                    let ps = self.fmt_ps();
                    self.emit(format!("opEVAL: [{shown}] failed, ps: {ps}"));
                }
                self.regs.insert(Reg::Eval, PointRef::base(self.reserved.null));
                self.push(PointRef::base(self.reserved.eval_fail));
            }
        }
        Ok(())
    }

    fn op_state(&mut self) {
        let mut lines = vec![format!("state: ps: {}", self.fmt_ps())];
        if !self.aggset.is_empty() {
            lines.push(format!("aggset: {}", self.fmt_points(&self.aggset)));
        }
        let pq = if self.pq.is_empty() { "*empty*".to_string() } else { self.fmt_refs(&self.pq, " ") };
        lines.push(format!("  pq: {pq}"));
        let reg = |e: &Self, r: Reg| e.regs.get(&r).map(|v| format_ref(&e.store, v)).unwrap_or_else(|| "*none*".into());
        lines.push(format!("  prNEW: {}", reg(self, Reg::New)));
        lines.push(format!("  prEVAL: {}", reg(self, Reg::Eval)));
        let tc = if self.tc.is_empty() { "*empty*".to_string() } else { self.fmt_points(&self.tc) };
        lines.push(format!("  tCTX: {tc}"));
        lines.push(format!("  ctp: *CTP*({})", self.clock));
        lines.push(format!("  tCTP: *CTP*({})", self.tctp));
        self.out.extend(lines);
    }

    pub fn fmt_refs(&self, refs: &[PointRef], sep: &str) -> String {
        refs.iter().map(|r| format_ref(&self.store, r)).collect::<Vec<_>>().join(sep)
    }

    pub fn fmt_points(&self, pts: &[PointId]) -> String {
        pts.iter().map(|&p| format_point(&self.store, p)).collect::<Vec<_>>().join(", ")
    }

    /// PS contents, top first; entries marked by opPSISAS show their is-a closure.
    pub fn fmt_ps(&self) -> String {
        if self.ps.is_empty() {
            return "*empty*".into();
        }
        let ctx = self.context();
        self.ps
            .iter()
            .map(|e| {
                let mut s = format_ref(&self.store, &e.r);
                if e.annotate && e.r.is_base() && self.op_of(e.r.point).is_none() {
                    let closure = isa_closure(&self.store, &ctx, e.r.point);
                    if !closure.is_empty() {
                        s.push_str(&format!("+<{}>", closure.iter().map(|&p| format_point(&self.store, p)).collect::<Vec<_>>().join(",")));
                    }
                }
                s
            })
            .collect::<Vec<_>>()
            .join(", ")
    }

    /// Replaces the PS with `refs`, top first, exactly as given.
    pub fn set_ps(&mut self, refs: &[PointRef]) {
        self.ps = refs.iter().map(|r| PsEntry::new(PointRef { remove: false, ..*r })).collect();
    }

    /// True when no point id occurs twice among the PS data points.
    pub fn ps_is_unique(&self) -> bool {
        let mut seen = HashSet::new();
        self.ps.iter().filter(|e| !self.dedupe_exempt(&e.r)).all(|e| seen.insert(e.r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn engine_with(labels: &[&str]) -> (Engine, Vec<PointId>) {
        let mut e = Engine::new();
        let ids = labels.iter().map(|l| e.store.define(l)).collect();
        (e, ids)
    }

    fn ps_labels(e: &Engine) -> Vec<String> {
        e.ps.iter().map(|x| format_ref(&e.store, &x.r)).collect()
    }

    #[test]
    fn opcode_labels_parse() {
        assert_eq!(Op::parse("opTWVAL"), Some((Op::Twval, false)));
        assert_eq!(Op::parse("opTWVALt"), Some((Op::Twval, true)));
        assert_eq!(Op::parse("opINCT"), Some((Op::Inct, false)));
        assert_eq!(Op::parse("opINCTt"), Some((Op::Inct, true)));
        assert_eq!(Op::parse("opLW1"), Some((Op::Lwm1, false)));
        assert_eq!(Op::parse("opNOPE"), None);
    }

    #[test]
    fn book_sequence_leaves_single_o() {
        let (mut e, p) = engine_with(&["sb1", "sb2", "sb3", "sb4"]);
        let (b, o, k) = (e.store.define("\"b\""), e.store.define("\"o\""), e.store.define("\"k\""));
        let v = PointRef::value;
        e.bind(vec![v(p[0])], vec![PointRef::base(b), v(p[1])], 0, false);
        e.bind(vec![v(p[1])], vec![PointRef::base(o), v(p[2])], 0, false);
        e.bind(vec![v(p[2])], vec![PointRef::base(o), v(p[3])], 0, false);
        e.bind(vec![v(p[3])], vec![PointRef::base(k)], 0, false);
        e.set_ps(&[v(p[0])]);
        e.run().unwrap();
        assert_eq!(ps_labels(&e), vec!["\"k\"", "\"o\"", "\"b\""]);
    }

    #[test]
    fn opbind_then_opeval() {
        let (mut e, p) = engine_with(&["a", "b", "c", "d"]);
        let bind = e.op_point(Op::Bind);
        let eoa = e.reserved.eoa;
        let b = PointRef::base;
        e.set_ps(&[b(p[0]), b(p[1]), b(p[2]), b(eoa), b(p[3]), b(bind)]);
        e.trace.bind = true;
        e.run().unwrap();
        assert_eq!(e.take_output(), vec!["bind: #32: [a b c] = d"]);
        let eval = e.op_point_traced(Op::Eval);
        e.set_ps(&[b(p[0]), b(p[1]), b(eoa), b(eval)]);
        e.run().unwrap();
        assert_eq!(e.take_output(), vec!["opEVAL: [a b] failed, ps: *empty*"]);
        assert_eq!(ps_labels(&e), vec!["evalFail"]);
        e.set_ps(&[b(p[0]), b(p[1]), b(p[2]), b(eoa), b(eval)]);
        e.run().unwrap();
        assert_eq!(e.take_output(), vec!["opEVAL: [a b c] => #32: [a b c] = d"]);
        assert!(e.ps.is_empty());
    }

    #[test]
    fn opval_null_pushes_nothing() {
        let (mut e, p) = engine_with(&["a", "b"]);
        let null = e.reserved.null;
        e.bind(vec![PointRef::value(p[0])], vec![PointRef::base(p[1])], 0, false);
        e.bind(vec![PointRef::value(p[1])], vec![PointRef::base(null)], 0, false);
        let val = e.op_point(Op::Val);
        e.set_ps(&[PointRef::base(p[0]), PointRef::base(val)]);
        e.run().unwrap();
        assert_eq!(ps_labels(&e), vec!["b"]);
        e.set_ps(&[PointRef::base(p[1]), PointRef::base(val)]);
        e.run().unwrap();
        assert!(e.ps.is_empty());
    }

    #[test]
    fn opnewt_advances_thought_register() {
        let mut e = Engine::new();
        let t = e.register(Reg::T).unwrap();
        assert_eq!(format_ref(&e.store, &t), "*T*(1)");
        e.exec(Op::Newt, false).unwrap();
        let t = e.register(Reg::T).unwrap();
        assert_eq!(format_ref(&e.store, &t), "*T*(2)");
    }

    #[test]
    fn underflow_is_reported() {
        let mut e = Engine::new();
        assert_eq!(e.exec(Op::Addpq, false), Err(EngineError::StackUnderflow("opADDPQ")));
        assert_eq!(e.exec(Op::Bind, false), Err(EngineError::StackUnderflow("opBIND")));
    }

    #[test]
    fn future_twine_waits_for_clock() {
        let (mut e, p) = engine_with(&["w", "done"]);
        let t = e.store.time_point(7);
        e.bind(vec![PointRef::value(p[0]), PointRef::base(t)], vec![PointRef::base(p[1])], 0, false);
        e.set_ps(&[PointRef::value(p[0])]);
        e.run().unwrap();
        assert_eq!(e.clock, 7);
        assert_eq!(ps_labels(&e), vec!["done"]);
    }

    #[test]
    fn runaway_guard_trips() {
        let (mut e, p) = engine_with(&["loop"]);
        e.bind(vec![PointRef::value(p[0])], vec![PointRef::value(p[0])], 0, false);
        e.step_budget = 100;
        e.set_ps(&[PointRef::value(p[0])]);
        assert_eq!(e.run(), Err(EngineError::RunawayGuard(100)));
    }
}
