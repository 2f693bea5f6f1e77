//! Aggregate set reduction (opRAS, opRASM).

use std::collections::HashSet;

use crate::core::{binding_weight, expand_context, format_binding, format_point, isa_closure, Context, PointId, PointRef, Variant, Weight};

use super::{Engine, EngineError};

/// Upper bound on opRASM cycles, on top of the repeated-state check and the
/// engine step budget.
const MAX_CYCLES: u64 = 100_000;

/// Reductions may start further reductions through their values.
const MAX_DEPTH: u32 = 16;

struct Match {
    site: usize,
    binding: usize,
    weight: Weight,
    ctx: Context,
    left: Vec<PointId>,
    right: Vec<PointId>,
}

fn side(engine: &Engine, ctx: &Context, p: PointId) -> Vec<PointId> {
    let mut s = vec![p];
    s.extend(isa_closure(&engine.store, ctx, p));
    s
}

/// The heaviest binding matching the AS pair at `i`, i+1.
fn match_pair(engine: &Engine, explicit: &[PointId], i: usize) -> Option<Match> {
    let (l, r) = (engine.aggset[i], engine.aggset[i + 1]);
    let mut pts = explicit.to_vec();
    pts.extend([l, r]);
    let ctx = expand_context(&engine.store, &pts, engine.clock);
    let left = side(engine, &ctx, l);
    let right = side(engine, &ctx, r);
    let in_l: HashSet<PointId> = left.iter().copied().collect();
    let in_r: HashSet<PointId> = right.iter().copied().collect();
    let store = &engine.store;
    let mut cands: Vec<usize> = left.iter().flat_map(|&x| store.with_ref((x, Variant::Base)).iter().copied()).collect();
    cands.sort_unstable();
    cands.dedup();
    let best = cands
        .into_iter()
        .filter(|&b| {
            let b = store.binding(b);
            if b.is_twine() || !b.key.iter().all(|k| in_l.contains(&k.point) || in_r.contains(&k.point)) {
                return false;
            }
            if b.ordered && b.key.len() == 2 {
                in_l.contains(&b.key[0].point) && in_r.contains(&b.key[1].point)
            } else {
                b.key.iter().any(|k| in_l.contains(&k.point)) && b.key.iter().any(|k| in_r.contains(&k.point))
            }
        })
        .max_by_key(|&b| binding_weight(store.binding(b)))?;
    Some(Match { site: i, binding: best, weight: binding_weight(store.binding(best)), ctx, left, right })
}

/// Picks the match to apply: heaviest by (points + bonus, time), leftmost on ties.
fn select(engine: &Engine) -> Option<Match> {
    let explicit = engine.explicit_points();
    let mut best: Option<Match> = None;
    for i in 0..engine.aggset.len().saturating_sub(1) {
        if let Some(m) = match_pair(engine, &explicit, i) {
            let better = best.as_ref().is_none_or(|b| (m.weight.0, m.weight.1) > (b.weight.0, b.weight.1));
            if better {
                best = Some(m);
            }
        }
    }
    best
}

/// Resolves a value variant met while executing a reduction binding.
fn resolve_value(engine: &Engine, m: &Match, snapshot: &[PointId], p: PointId) -> Vec<PointRef> {
    if m.left.contains(&p) {
        return vec![PointRef::base(snapshot[m.site])];
    }
    if m.right.contains(&p) {
        return vec![PointRef::base(snapshot[m.site + 1])];
    }
    for (j, &x) in snapshot.iter().enumerate() {
        if j != m.site && j != m.site + 1 && side(engine, &m.ctx, x).contains(&p) {
            return vec![PointRef::base(x)];
        }
    }
    engine.eval_value_variant(&engine.context(), p).unwrap_or_default()
}

fn apply(engine: &mut Engine, m: Match) -> Result<(), EngineError> {
    let snapshot = engine.aggset.clone();
    let (l, r) = (snapshot[m.site], snapshot[m.site + 1]);
    let b = engine.store.binding(m.binding).clone();
    if engine.trace.reduce {
        let line = format!(
            "reduce: {} {} => {}",
            format_point(&engine.store, l),
            format_point(&engine.store, r),
            format_binding(&engine.store, &b)
        );
        engine.emit(line);
    }
    let (mut drop_l, mut drop_r) = (false, false);
    for (idx, k) in b.key.iter().enumerate() {
        if !k.remove {
            continue;
        }
        let is_left = if b.ordered && b.key.len() == 2 { idx == 0 } else { m.left.contains(&k.point) };
        if is_left {
            drop_l = true;
        } else {
            drop_r = true;
        }
    }
    if drop_r {
        engine.aggset.remove(m.site + 1);
    }
    if drop_l {
        engine.aggset.remove(m.site);
    }
    let site = if drop_l { m.site } else { m.site + 1 };

    for v in &b.values {
        if v.quoted {
            engine.push(*v);
            continue;
        }
        if v.is_base() {
            if let Some((op, traced)) = engine.op_of(v.point) {
                engine.exec(op, traced)?;
                continue;
            }
            if let Some(reg) = engine.reg_of(v.point) {
                match engine.register(reg) {
                    Some(x) => engine.push(x),
                    None => engine.emit(format!("? Internal register (op={}) has no value", reg.number())),
                }
                continue;
            }
            engine.push(*v);
            continue;
        }
        if v.variant == Variant::Value {
            let vals = resolve_value(engine, &m, &snapshot, v.point);
            engine.push_values(&vals);
            continue;
        }
        engine.push(*v);
    }

    if !engine.ps.is_empty() {
        let top = engine.ps.remove(0).r.plain();
        if !(top.is_base() && top.point == engine.reserved.null) {
            let site = site.min(engine.aggset.len());
            engine.aggset.insert(site, top.point);
        }
    }
    Ok(())
}

/// Runs one reduction cycle. Returns false when no contiguous pair matched.
pub fn reduce_cycle(engine: &mut Engine) -> Result<bool, EngineError> {
    match select(engine) {
        Some(m) => {
            apply(engine, m)?;
            Ok(true)
        }
        None => Ok(false),
    }
}

/// opRAS when `repeat` is false, opRASM otherwise. rasFail is pushed when
/// the first cycle finds nothing to reduce.
pub fn reduce_as(engine: &mut Engine, repeat: bool) -> Result<(), EngineError> {
    if engine.reduce_depth >= MAX_DEPTH {
        return Err(EngineError::RunawayGuard(MAX_DEPTH as u64));
    }
    engine.reduce_depth += 1;
    let result = reduce_inner(engine, repeat);
    engine.reduce_depth -= 1;
    result
}

fn reduce_inner(engine: &mut Engine, repeat: bool) -> Result<(), EngineError> {
    if !reduce_cycle(engine)? {
        engine.push(PointRef::base(engine.reserved.ras_fail));
        return Ok(());
    }
    if !repeat {
        return Ok(());
    }
    let limit = MAX_CYCLES.min(engine.step_budget);
    let mut seen = HashSet::new();
    seen.insert(engine.aggset.clone());
    let mut cycles = 0;
    while reduce_cycle(engine)? && seen.insert(engine.aggset.clone()) {
        cycles += 1;
        if cycles >= limit {
            return Err(EngineError::RunawayGuard(limit));
        }
    }
    if engine.aggset.len() == 1 && engine.aggset[0] == engine.reserved.as_ph {
        engine.aggset.clear();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::format_ref;

    #[test]
    fn ordered_pair_respects_direction() {
        let mut e = Engine::new();
        let (a, b, c) = (e.store.define("a"), e.store.define("b"), e.store.define("c"));
        let key = vec![PointRef { remove: true, ..PointRef::base(a) }, PointRef { remove: true, ..PointRef::base(b) }];
        e.bind(key, vec![PointRef::base(c)], 0, true);
        e.aggset = vec![b, a];
        reduce_as(&mut e, true).unwrap();
        assert_eq!(e.aggset, vec![b, a]);
        assert_eq!(e.ps.iter().map(|x| format_ref(&e.store, &x.r)).collect::<Vec<_>>(), vec!["rasFail"]);
        e.ps.clear();
        e.aggset = vec![a, b];
        reduce_as(&mut e, true).unwrap();
        assert_eq!(e.aggset, vec![c]);
        assert!(e.ps.is_empty());
    }

    #[test]
    fn heavier_pair_wins_over_leftmost() {
        let mut e = Engine::new();
        let p: Vec<PointId> = ["x", "y", "z", "xy", "yz"].iter().map(|l| e.store.define(l)).collect();
        let rm = |q| PointRef { remove: true, ..PointRef::base(q) };
        e.bind(vec![rm(p[0]), rm(p[1])], vec![PointRef::base(p[3])], 0, true);
        e.bind(vec![rm(p[1]), rm(p[2])], vec![PointRef::base(p[4])], 1, true);
        e.aggset = vec![p[0], p[1], p[2]];
        reduce_as(&mut e, false).unwrap();
        assert_eq!(e.aggset, vec![p[0], p[4]]);
    }

    #[test]
    fn growing_reduction_hits_the_guard() {
        let mut e = Engine::new();
        let (a, b) = (e.store.define("a"), e.store.define("b"));
        e.bind(vec![PointRef::base(a), PointRef::base(b)], vec![PointRef::base(a)], 0, false);
        e.aggset = vec![a, b];
        e.step_budget = 50;
        assert_eq!(reduce_as(&mut e, true), Err(EngineError::RunawayGuard(50)));
        assert_eq!(e.reduce_depth, 0);
    }
}
