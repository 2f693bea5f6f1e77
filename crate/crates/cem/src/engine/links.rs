//! Cause/effect links between thoughts, consequence learning and surrogate
//! resolution.

use crate::core::{eval_isa_all, eval_simple, expand_context, format_point, isa_closure, PointId, PointRef, Role};
use crate::patterns::{learn_patterns, PatternParams};

use super::ltt::is_chiral_label;
use super::{Engine, Op};

fn is_chiral(engine: &Engine, p: PointId) -> bool {
    is_chiral_label(&format_point(&engine.store, p))
}

/// Is-a points of `p` with parse-tagged twines visible.
fn parse_isa(engine: &Engine, p: PointId) -> Vec<PointId> {
    let ctx = expand_context(&engine.store, &[engine.reserved.parse], engine.clock);
    eval_isa_all(&engine.store, &ctx, p)
}

fn surrogates_of(engine: &Engine, t: PointId) -> Vec<PointId> {
    parse_isa(engine, t)
}

fn descriptive(engine: &Engine, s: PointId) -> Vec<PointId> {
    let mut d: Vec<PointId> = parse_isa(engine, s).into_iter().filter(|&p| !is_chiral(engine, p)).collect();
    d.sort_unstable();
    d
}

/// The link point for `key`, reusing an existing binding with the same key.
/// New links get `cause`/`effect` twines naming their two sides.
fn link_for(engine: &mut Engine, key: &[PointId], cause: &[PointId], effect: &[PointId]) -> PointId {
    let refs: Vec<PointRef> = key.iter().map(|&p| PointRef::base(p)).collect();
    if let Ok(found) = eval_simple(&engine.store, &refs) {
        if let Some(v) = found.values.first() {
            return v.point;
        }
    }
    let link = engine.store.anonymous(Role::Plain);
    engine.bind(refs, vec![PointRef::base(link)], 0, false);
    let (cause_pt, effect_pt) = (engine.store.define("cause"), engine.store.define("effect"));
    for &c in cause {
        engine.bind(vec![PointRef::isa(link), PointRef::base(cause_pt)], vec![PointRef::base(c)], 0, false);
    }
    for &e in effect {
        engine.bind(vec![PointRef::isa(link), PointRef::base(effect_pt)], vec![PointRef::base(e)], 0, false);
    }
    link
}

/// Links relating the surrogates of an earlier and a later thought. Matched
/// surrogate pairs (equal non-chiral is-a sets) link their chiral points;
/// unmatched surrogates link their whole is-a set as cause or effect.
pub fn derive_links(engine: &mut Engine, before: PointId, after: PointId) -> Vec<PointId> {
    let before_surs = surrogates_of(engine, before);
    let after_surs = surrogates_of(engine, after);
    let mut used = vec![false; before_surs.len()];
    let mut links = Vec::new();
    let mut unmatched_after = Vec::new();
    for &a in &after_surs {
        let da = descriptive(engine, a);
        let hit = before_surs.iter().enumerate().find(|&(i, &b)| !used[i] && descriptive(engine, b) == da);
        match hit {
            Some((i, &b)) => {
                used[i] = true;
                let cause: Vec<PointId> = parse_isa(engine, b).into_iter().filter(|&p| is_chiral(engine, p)).collect();
                let effect: Vec<PointId> = parse_isa(engine, a).into_iter().filter(|&p| is_chiral(engine, p)).collect();
                let key: Vec<PointId> = cause.iter().chain(&effect).copied().collect();
                links.push(link_for(engine, &key, &cause, &effect));
            }
            None => unmatched_after.push(a),
        }
    }
    for (i, &b) in before_surs.iter().enumerate() {
        if !used[i] {
            let all = parse_isa(engine, b);
            links.push(link_for(engine, &all, &all, &[]));
        }
    }
    for a in unmatched_after {
        let all = parse_isa(engine, a);
        links.push(link_for(engine, &all, &[], &all));
    }
    links
}

/// Learns consequence twines from link-set samples. Each pattern becomes
/// [cons.v causes…] = a sequence that rebuilds the effect surrogates with
/// opSURISA. Returns the created binding indices.
pub fn learn_consequences(engine: &mut Engine, samples: &[Vec<PointId>], params: &PatternParams) -> Vec<usize> {
    let learned = learn_patterns(samples, params);
    let cons = engine.store.define("cons");
    let (cause_pt, effect_pt) = (engine.store.define("cause"), engine.store.define("effect"));
    let cause_ctx = expand_context(&engine.store, &[cause_pt], engine.clock);
    let effect_ctx = expand_context(&engine.store, &[effect_pt], engine.clock);
    let eoa = PointRef::base(engine.reserved.eoa);
    let surisa = PointRef::base(engine.op_point(Op::Surisa));
    let mut out = Vec::new();
    for pattern in learned.patterns {
        let mut links = pattern.key.clone();
        links.sort_unstable();
        let mut context: Vec<PointId> = Vec::new();
        let mut values: Vec<PointRef> = Vec::new();
        for link in links {
            let causes: Vec<PointId> =
                eval_isa_all(&engine.store, &cause_ctx, link).into_iter().filter(|&p| p != effect_pt && p != cause_pt).collect();
            let effects: Vec<PointId> =
                eval_isa_all(&engine.store, &effect_ctx, link).into_iter().filter(|&p| p != effect_pt && p != cause_pt).collect();
            for &c in &causes {
                if !context.contains(&c) {
                    context.push(c);
                }
            }
            if effects.is_empty() {
                continue;
            }
            values.extend(causes.iter().map(|&c| PointRef::value(c)));
            values.extend(effects.iter().map(|&e| PointRef::base(e)));
            values.push(eoa);
            values.push(surisa);
        }
        if values.is_empty() {
            continue;
        }
        let mut key = vec![PointRef::value(cons)];
        key.extend(context.iter().map(|&c| PointRef::base(c)));
        out.push(engine.bind(key, values, 0, false));
    }
    out
}

/// Resolves surrogate `s` to the most recent earlier-thought point whose
/// is-a closure covers the surrogate's descriptive (non-chiral) is-a points.
pub fn resolve_surrogate(engine: &Engine, s: PointId) -> Option<PointId> {
    let wanted = descriptive(engine, s);
    if wanted.is_empty() {
        return None;
    }
    let own = engine.thoughts.iter().rev().find(|&&t| surrogates_of(engine, t).contains(&s)).copied();
    for &t in engine.thoughts.iter().rev() {
        if Some(t) == own {
            continue;
        }
        let ctx = expand_context(&engine.store, &[engine.reserved.parse, t], engine.clock);
        let mut queue = eval_isa_all(&engine.store, &ctx, t);
        let mut seen = Vec::new();
        while let Some(p) = queue.pop() {
            if p == s || seen.contains(&p) {
                continue;
            }
            seen.push(p);
            let closure = isa_closure(&engine.store, &ctx, p);
            if wanted.iter().all(|w| closure.contains(w)) {
                return Some(p);
            }
            if engine.store.point(p).is_surrogate() {
                queue.extend(eval_isa_all(&engine.store, &ctx, p));
            }
        }
    }
    None
}
