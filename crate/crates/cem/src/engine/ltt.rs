//! Language to thought: opLUPARSE turns a word sequence into surrogates
//! is-a twined to the current thought.

use std::collections::HashMap;

use crate::core::{eval_contextual, eval_isa_all, expand_context, format_point, isa_closure, Context, PointId, PointRef, Role};

use super::{Engine, EngineError, Op};

#[derive(Clone, Debug, Default)]
struct Sur {
    members: Vec<PointId>,
    chirals: Vec<PointId>,
    children: Vec<PointId>,
    had_l: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Hand {
    Left,
    Right,
}

struct Parse {
    surs: HashMap<PointId, Sur>,
    chirals: HashMap<PointId, Hand>,
}

impl Parse {
    fn is_sur(&self, p: PointId) -> bool {
        self.surs.contains_key(&p)
    }

    fn hand(&self, p: PointId) -> Option<Hand> {
        self.chirals.get(&p).copied()
    }
}

/// Left and right chiral points for a non-grounded word.
pub fn chiral_pair(engine: &mut Engine, word: PointId) -> (PointId, PointId) {
    let label = format_point(&engine.store, word);
    (engine.store.define(&format!("{label}_L")), engine.store.define(&format!("{label}_R")))
}

/// True for points labelled as left or right chiral halves.
pub fn is_chiral_label(label: &str) -> bool {
    label.ends_with("_L") || label.ends_with("_R")
}

fn pair_context(engine: &Engine, parse: &Parse, l: PointId, r: PointId) -> Context {
    let mut pts = engine.explicit_points();
    for s in [l, r] {
        let sur = &parse.surs[&s];
        pts.extend(&sur.members);
        pts.extend(&sur.chirals);
    }
    expand_context(&engine.store, &pts, engine.clock)
}

/// One sweep over contiguous surrogate pairs. Returns true if anything changed.
fn combine_pass(engine: &mut Engine, parse: &mut Parse) -> bool {
    let mut changed = false;
    let mut i = 0;
    while i + 1 < engine.aggset.len() {
        let (l, r) = (engine.aggset[i], engine.aggset[i + 1]);
        if !(parse.is_sur(l) && parse.is_sur(r)) {
            i += 1;
            continue;
        }
        let ctx = pair_context(engine, parse, l, r);
        let action = eval_contextual(&engine.store, &ctx, &[PointRef::base(engine.reserved.sur_action)])
            .ok()
            .and_then(|o| o.values.first().copied())
            .and_then(|v| engine.op_of(v.point))
            .map(|(op, _)| op);
        match action {
            Some(Op::Lujoin) if parse.surs[&l].chirals.is_empty() && parse.surs[&r].chirals.is_empty() => {
                let right = parse.surs.remove(&r).expect("pair is surrogates");
                let left = parse.surs.get_mut(&l).expect("pair is surrogates");
                left.members.extend(right.members);
                left.children.extend(right.children);
                engine.aggset.remove(i + 1);
                changed = true;
            }
            Some(Op::Lulink) => {
                let right_chirals = parse.surs[&r].chirals.clone();
                let consumed: Vec<PointId> = right_chirals
                    .iter()
                    .filter(|&&c| parse.hand(c) == Some(Hand::Right))
                    .filter_map(|&c| {
                        let label = format_point(&engine.store, c);
                        engine.store.lookup(&format!("{}_L", label.strip_suffix("_R")?))
                    })
                    .collect();
                let left = parse.surs.get_mut(&l).expect("pair is surrogates");
                left.chirals.retain(|c| !consumed.contains(c));
                left.children.push(r);
                engine.aggset.remove(i + 1);
                changed = true;
            }
            _ => i += 1,
        }
    }
    changed
}

/// Attaches chiral points to neighbouring surrogates. Returns true if
/// anything changed.
fn attach_pass(engine: &mut Engine, parse: &mut Parse) -> bool {
    let snapshot = engine.aggset.clone();
    let had_l: HashMap<PointId, bool> = parse.surs.iter().map(|(&p, s)| (p, s.had_l)).collect();
    let mut drop = vec![false; snapshot.len()];
    for j in 0..snapshot.len().saturating_sub(1) {
        let (a, b) = (snapshot[j], snapshot[j + 1]);
        match (parse.hand(a), parse.hand(b)) {
            (Some(Hand::Right), Some(Hand::Left)) => drop[j + 1] = true,
            (Some(Hand::Right), None) if parse.is_sur(b) && !had_l[&b] && !drop[j] => {
                parse.surs.get_mut(&b).expect("checked").chirals.push(a);
                drop[j] = true;
            }
            (None, Some(Hand::Left)) if parse.is_sur(a) && !drop[j + 1] => {
                let s = parse.surs.get_mut(&a).expect("checked");
                s.chirals.push(b);
                s.had_l = true;
                drop[j + 1] = true;
            }
            _ => {}
        }
    }
    let changed = drop.iter().any(|&d| d);
    engine.aggset = snapshot.into_iter().zip(drop).filter(|(_, d)| !d).map(|(p, _)| p).collect();
    changed
}

/// opLUPARSE.
pub fn ltt_parse(engine: &mut Engine) -> Result<(), EngineError> {
    let words = engine.pop_until_eoa(Op::Luparse)?;
    let mut parse = Parse { surs: HashMap::new(), chirals: HashMap::new() };
    engine.aggset.clear();
    let ctx = engine.context();
    for w in words {
        let closure = isa_closure(&engine.store, &ctx, w.point);
        if closure.contains(&engine.reserved.determiner) {
            continue;
        }
        if closure.contains(&engine.reserved.grounded) {
            let s = engine.store.anonymous(Role::Surrogate);
            parse.surs.insert(s, Sur { members: vec![w.point], ..Default::default() });
            engine.aggset.push(s);
        } else {
            let (l, r) = chiral_pair(engine, w.point);
            parse.chirals.insert(l, Hand::Left);
            parse.chirals.insert(r, Hand::Right);
            engine.aggset.extend([l, r]);
        }
    }

    loop {
        let mut changed = false;
        while combine_pass(engine, &mut parse) {
            changed = true;
        }
        changed |= attach_pass(engine, &mut parse);
        if !changed {
            break;
        }
    }
    engine.aggset.retain(|p| !parse.chirals.contains_key(p));
    combine_pass(engine, &mut parse);

    let t = engine.thought();
    let tag = engine.reserved.parse;
    let mut order: Vec<PointId> = Vec::new();
    let mut stack: Vec<PointId> = engine.aggset.iter().rev().copied().collect();
    while let Some(s) = stack.pop() {
        order.push(s);
        stack.extend(parse.surs[&s].children.iter().rev());
    }
    for s in order {
        let sur = parse.surs[&s].clone();
        for p in sur.members.iter().chain(&sur.chirals) {
            engine.bind(vec![PointRef::isa(s), PointRef::base(tag)], vec![PointRef::base(*p)], 0, false);
        }
        for c in &sur.children {
            engine.bind(vec![PointRef::isa(s), PointRef::base(tag)], vec![PointRef::base(*c)], 0, false);
        }
    }
    for s in engine.aggset.clone() {
        engine.bind(vec![PointRef::isa(t)], vec![PointRef::base(s)], 0, false);
    }
    engine.aggset.clear();
    Ok(())
}

/// A thought rendered as a tree of labels, surrogates expanded recursively.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tree {
    pub point: PointId,
    pub children: Vec<Tree>,
}

impl Tree {
    pub fn leaf(point: PointId) -> Self {
        Tree { point, children: Vec::new() }
    }

    /// Indented rendering, two spaces per level.
    pub fn render(&self, engine: &Engine) -> Vec<String> {
        let mut out = Vec::new();
        self.render_into(engine, 0, &mut out);
        out
    }

    fn render_into(&self, engine: &Engine, depth: usize, out: &mut Vec<String>) {
        out.push(format!("{}{}", "  ".repeat(depth), format_point(&engine.store, self.point)));
        for c in &self.children {
            c.render_into(engine, depth + 1, out);
        }
    }
}

/// Tree rooted at thought `t`: its is-a points, with each surrogate's
/// parse-tagged is-a points below it.
pub fn thought_tree(engine: &Engine, t: PointId) -> Tree {
    let ctx = expand_context(&engine.store, &[engine.reserved.parse], engine.clock);
    fn walk(engine: &Engine, ctx: &Context, p: PointId, depth: usize) -> Tree {
        let expand = depth == 0 || engine.store.point(p).is_surrogate();
        let children = if expand && depth < 64 {
            eval_isa_all(&engine.store, ctx, p).into_iter().map(|c| walk(engine, ctx, c, depth + 1)).collect()
        } else {
            Vec::new()
        };
        Tree { point: p, children }
    }
    walk(engine, &ctx, t, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(e: &mut Engine) {
        let b = PointRef::base;
        let grounded = e.reserved.grounded;
        for w in ["boy", "ball", "John", "little", "red", "big", "table"] {
            let p = e.store.define(w);
            e.bind(vec![PointRef::isa(p)], vec![b(grounded)], 0, false);
        }
        let isa = |e: &mut Engine, child: &str, parent: &str| {
            let (c, p) = (e.store.define(child), e.store.define(parent));
            e.bind(vec![PointRef::isa(c)], vec![b(p)], 0, false);
        };
        for w in ["boy", "ball", "John", "objSurface"] {
            isa(e, w, "obj");
        }
        for w in ["little", "red", "big"] {
            isa(e, w, "adjObj");
        }
        isa(e, "table", "objSurface");
        isa(e, "the", "determiner");
        let sa = e.reserved.sur_action;
        let (adj, obj, surf) = (e.store.define("adjObj"), e.store.define("obj"), e.store.define("objSurface"));
        let on_r = e.store.define("on_R");
        let join = e.op_point(Op::Lujoin);
        let link = e.op_point(Op::Lulink);
        e.bind(vec![b(sa), b(adj), b(obj)], vec![b(join)], 0, false);
        e.bind(vec![b(sa), b(obj), b(surf), b(on_r)], vec![b(link)], 0, false);
    }

    fn parse(e: &mut Engine, sentence: &str) -> Vec<String> {
        let mut refs: Vec<PointRef> = sentence.split(' ').map(|w| PointRef::base(e.store.define(w))).collect();
        refs.push(PointRef::base(e.reserved.eoa));
        refs.push(PointRef::base(e.op_point(Op::Luparse)));
        e.set_ps(&refs);
        e.run().unwrap();
        let t = e.thought();
        let tree = thought_tree(e, t);
        tree.children
            .iter()
            .map(|s| {
                s.children
                    .iter()
                    .map(|c| {
                        if c.children.is_empty() {
                            format_point(&e.store, c.point)
                        } else {
                            let inner: Vec<String> = c.children.iter().map(|g| format_point(&e.store, g.point)).collect();
                            format!("({})", inner.join(" "))
                        }
                    })
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect()
    }

    #[test]
    fn little_boy_threw_ball() {
        let mut e = Engine::new();
        setup(&mut e);
        assert_eq!(parse(&mut e, "little boy threw ball"), vec!["little boy threw_L", "ball threw_R"]);
    }

    #[test]
    fn nested_prepositional_phrase() {
        let mut e = Engine::new();
        setup(&mut e);
        let got = parse(&mut e, "the little boy threw the big red ball on the table to John");
        assert_eq!(got, vec!["little boy threw_L", "big red ball threw_R (table on_R to_L)", "John to_R"]);
    }

    #[test]
    fn single_grounded_word() {
        let mut e = Engine::new();
        setup(&mut e);
        assert_eq!(parse(&mut e, "ball"), vec!["ball"]);
    }
}
