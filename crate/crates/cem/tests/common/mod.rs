//! Randomized property suites shared by the proptest file and the
//! acceptance summary.

#![allow(dead_code)]

use std::collections::HashSet;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use cem::core::{eval_contextual, eval_isa_all, eval_simple, expand_context, Context, PointId, PointRef, Store, Variant};
use cem::engine::{Engine, Op};

pub const CASES: u32 = 1000;

/// A random store: `n` points and bindings over point indices.
#[derive(Clone, Debug)]
pub struct StoreShape {
    pub n: usize,
    pub bindings: Vec<(Vec<(usize, u8)>, usize)>,
}

fn variant(v: u8) -> Variant {
    match v {
        0 => Variant::Isa,
        1 => Variant::Value,
        _ => Variant::Base,
    }
}

pub fn store_shape() -> impl Strategy<Value = StoreShape> {
    (3usize..12).prop_flat_map(|n| {
        let key = prop::collection::vec((0..n, 0u8..6), 1..4);
        let binding = (key, 0..n);
        prop::collection::vec(binding, 0..25).prop_map(move |bindings| StoreShape { n, bindings })
    })
}

pub fn build_store(shape: &StoreShape) -> (Store, Vec<PointId>) {
    let mut store = Store::new();
    let pts: Vec<PointId> = (0..shape.n).map(|i| store.define(&format!("p{i}"))).collect();
    for (key, value) in &shape.bindings {
        let key: Vec<PointRef> = key.iter().map(|&(p, v)| PointRef::new(pts[p], variant(v))).collect();
        store.bind(key, vec![PointRef::base(pts[*value])], 0, false).expect("non-empty key");
    }
    (store, pts)
}

fn outcome(r: Result<cem::core::EvalOutcome, cem::core::EvalError>) -> Option<(Option<usize>, Vec<PointRef>)> {
    r.ok().map(|o| (o.matched, o.values))
}

pub fn query() -> impl Strategy<Value = (Vec<(usize, u8)>, Vec<usize>, Vec<usize>)> {
    (
        prop::collection::vec((0usize..12, 1u8..6), 1..5),
        prop::collection::vec(0usize..12, 0..5),
        prop::collection::vec(any::<prop::sample::Index>().prop_map(|i| i.index(1000)), 5),
    )
}

/// Evaluation does not depend on the order of the query key.
pub fn permutation_invariance(shape: &StoreShape, q: &[(usize, u8)], ctx: &[usize], perm: &[usize]) -> Result<(), TestCaseError> {
    let (store, pts) = build_store(shape);
    let key: Vec<PointRef> = q.iter().map(|&(p, v)| PointRef::new(pts[p % shape.n], variant(v))).collect();
    let mut shuffled = key.clone();
    for (i, &j) in perm.iter().enumerate() {
        let a = i % shuffled.len();
        let b = j % shuffled.len();
        shuffled.swap(a, b);
    }
    let explicit: Vec<PointId> = ctx.iter().map(|&p| pts[p % shape.n]).collect();
    let c = expand_context(&store, &explicit, 1);
    prop_assert_eq!(outcome(eval_contextual(&store, &c, &key)), outcome(eval_contextual(&store, &c, &shuffled)));
    prop_assert_eq!(outcome(eval_simple(&store, &key)), outcome(eval_simple(&store, &shuffled)));
    Ok(())
}

/// Identical stores answer identical queries identically, every time.
pub fn eval_determinism(shape: &StoreShape, q: &[(usize, u8)], ctx: &[usize]) -> Result<(), TestCaseError> {
    let (a, pa) = build_store(shape);
    let (b, pb) = build_store(shape);
    prop_assert_eq!(&pa, &pb);
    let key: Vec<PointRef> = q.iter().map(|&(p, v)| PointRef::new(pa[p % shape.n], variant(v))).collect();
    let explicit: Vec<PointId> = ctx.iter().map(|&p| pa[p % shape.n]).collect();
    let (ca, cb) = (expand_context(&a, &explicit, 1), expand_context(&b, &explicit, 1));
    prop_assert_eq!(&ca, &cb);
    let first = outcome(eval_contextual(&a, &ca, &key));
    prop_assert_eq!(&first, &outcome(eval_contextual(&b, &cb, &key)));
    prop_assert_eq!(&first, &outcome(eval_contextual(&a, &ca, &key)));
    Ok(())
}

/// Naive fixed point of the implicit closure, recomputed from scratch.
fn closure_oracle(store: &Store, explicit: &[PointId]) -> HashSet<PointId> {
    let mut members: HashSet<PointId> = explicit.iter().copied().collect();
    loop {
        let mut ctx = Context::empty(1);
        for &p in &members {
            ctx.insert_implicit(p, p);
        }
        let mut grown = members.clone();
        for &p in &members {
            grown.extend(eval_isa_all(store, &ctx, p));
        }
        if grown == members {
            return members;
        }
        members = grown;
    }
}

/// Removing an explicit point removes exactly what only it implied.
pub fn removal_cascade(shape: &StoreShape, ctx: &[usize], victim: usize) -> Result<(), TestCaseError> {
    let (store, pts) = build_store(shape);
    let explicit: Vec<PointId> = ctx.iter().map(|&p| pts[p % shape.n]).collect();
    if explicit.is_empty() {
        return Ok(());
    }
    let mut c = expand_context(&store, &explicit, 1);
    let before: HashSet<PointId> = c.points().collect();
    prop_assert_eq!(&before, &closure_oracle(&store, &explicit));
    let p = explicit[victim % explicit.len()];
    c.remove_explicit(&store, p);
    let rest: Vec<PointId> = explicit.iter().copied().filter(|&x| x != p).collect();
    let after: HashSet<PointId> = c.points().collect();
    prop_assert_eq!(&after, &closure_oracle(&store, &rest));
    prop_assert!(after.is_subset(&before));
    prop_assert!(!c.explicit.contains(&p));
    Ok(())
}

/// A random engine program: bindings over plain points plus a PS mixing
/// plain, value-variant and opcode points.
#[derive(Clone, Debug)]
pub struct Program {
    pub store: StoreShape,
    pub ps: Vec<(usize, u8)>,
}

pub fn program() -> impl Strategy<Value = Program> {
    (store_shape(), prop::collection::vec((0usize..64, 0u8..4), 1..12)).prop_map(|(store, ps)| Program { store, ps })
}

pub fn build_engine(prog: &Program) -> Engine {
    let mut e = Engine::new();
    let pts: Vec<PointId> = (0..prog.store.n).map(|i| e.store.define(&format!("p{i}"))).collect();
    for (key, value) in &prog.store.bindings {
        let key: Vec<PointRef> = key.iter().map(|&(p, v)| PointRef::new(pts[p], variant(v))).collect();
        e.bind(key, vec![PointRef::base(pts[*value])], 0, false);
    }
    let mut refs = Vec::new();
    for &(x, kind) in &prog.ps {
        let r = match kind {
            0 => PointRef::base(e.op_point(Op::ALL[x % Op::ALL.len()])),
            1 => PointRef::value(pts[x % pts.len()]),
            2 => PointRef::base(e.reserved.eoa),
            _ => PointRef::base(pts[x % pts.len()]),
        };
        if !refs.contains(&r) {
            refs.push(r);
        }
    }
    e.set_ps(&refs);
    e.step_budget = 300;
    e
}

/// The PS never holds a data point twice after any opcode.
pub fn ps_uniqueness(prog: &Program) -> Result<(), TestCaseError> {
    let mut e = build_engine(prog);
    prop_assert!(e.ps_is_unique());
    for _ in 0..200 {
        match e.step() {
            Ok(true) => prop_assert!(e.ps_is_unique(), "duplicate in PS: {}", e.fmt_ps()),
            _ => break,
        }
    }
    Ok(())
}

fn snapshot(e: &Engine) -> (String, Vec<PointRef>, Vec<PointId>, usize, u64, Vec<PointId>) {
    (e.fmt_ps(), e.pq.clone(), e.aggset.clone(), e.store.bindings().len(), e.clock, e.tc.clone())
}

/// Running an engine that has already halted changes nothing.
pub fn run_idempotence(prog: &Program) -> Result<(), TestCaseError> {
    let mut e = build_engine(prog);
    if e.run().is_err() {
        return Ok(());
    }
    let _ = e.take_output();
    let before = snapshot(&e);
    let again = e.run();
    prop_assert_eq!(again, Ok(0));
    prop_assert_eq!(before, snapshot(&e));
    prop_assert!(e.take_output().is_empty());
    Ok(())
}

fn runner() -> TestRunner {
    TestRunner::new(Config { cases: CASES, failure_persistence: None, ..Config::default() })
}

fn report<T: std::fmt::Debug>(r: Result<(), proptest::test_runner::TestError<T>>) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

pub fn suite_permutation() -> Result<(), String> {
    report(runner().run(&(store_shape(), query()), |(s, (q, c, perm))| permutation_invariance(&s, &q, &c, &perm)))
}

pub fn suite_ps_uniqueness() -> Result<(), String> {
    report(runner().run(&program(), |p| ps_uniqueness(&p)))
}

pub fn suite_determinism() -> Result<(), String> {
    report(runner().run(&(store_shape(), query()), |(s, (q, c, _))| eval_determinism(&s, &q, &c)))
}

pub fn suite_removal() -> Result<(), String> {
    report(runner().run(&(store_shape(), prop::collection::vec(0usize..12, 0..6), 0usize..6), |(s, c, v)| removal_cascade(&s, &c, v)))
}

pub fn suite_idempotence() -> Result<(), String> {
    report(runner().run(&program(), |p| run_idempotence(&p)))
}

/// The five suites by name.
pub type Suite = fn() -> Result<(), String>;

pub fn suites() -> Vec<(&'static str, Suite)> {
    vec![
        ("key-set permutation invariance", suite_permutation as Suite),
        ("PS uniqueness after every opcode", suite_ps_uniqueness),
        ("eval determinism", suite_determinism),
        ("context-removal cascade", suite_removal),
        ("run idempotence on halted states", suite_idempotence),
    ]
}
