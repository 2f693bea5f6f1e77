//! Points, key sets, bindings and contextual evaluation.

use std::collections::{HashMap, HashSet, VecDeque};

use thiserror::Error;

pub type PointId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    Internal,
    Sensory,
    Control,
}

/// The special role a point plays. A point has at most one role, so the
/// opcode/register/surrogate/thought/time flags can never overlap.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Plain,
    Opcode,
    Register,
    Surrogate,
    Thought(u32),
    Time(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Valence {
    #[default]
    Neutral,
    Plus,
    Minus,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Point {
    pub id: PointId,
    pub label: Option<String>,
    pub kind: Kind,
    pub role: Role,
    pub valence: Valence,
}

impl Point {
    pub fn time(&self) -> Option<u64> {
        match self.role {
            Role::Time(t) => Some(t),
            _ => None,
        }
    }

    pub fn is_opcode(&self) -> bool {
        self.role == Role::Opcode
    }

    pub fn is_register(&self) -> bool {
        self.role == Role::Register
    }

    pub fn is_surrogate(&self) -> bool {
        self.role == Role::Surrogate
    }

    pub fn is_thought(&self) -> bool {
        matches!(self.role, Role::Thought(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Base,
    Isa,
    Value,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PointRef {
    pub point: PointId,
    pub variant: Variant,
    /// `@` prefix: pushed as inert data.
    pub quoted: bool,
    /// `-` prefix: the matched AS point is removed.
    pub remove: bool,
}

impl PointRef {
    pub fn new(point: PointId, variant: Variant) -> Self {
        PointRef { point, variant, quoted: false, remove: false }
    }

    pub fn base(point: PointId) -> Self {
        Self::new(point, Variant::Base)
    }

    pub fn isa(point: PointId) -> Self {
        Self::new(point, Variant::Isa)
    }

    pub fn value(point: PointId) -> Self {
        Self::new(point, Variant::Value)
    }

    pub fn quote(mut self) -> Self {
        self.quoted = true;
        self
    }

    /// Identity used for key matching; the interpreter flags do not count.
    pub fn key(&self) -> (PointId, Variant) {
        (self.point, self.variant)
    }

    /// The same reference with both prefix flags cleared.
    pub fn plain(&self) -> Self {
        Self::new(self.point, self.variant)
    }

    pub fn is_base(&self) -> bool {
        self.variant == Variant::Base
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Binding {
    pub key: Vec<PointRef>,
    pub values: Vec<PointRef>,
    pub bonus: u32,
    pub ordered: bool,
    pub serial: u64,
    pub ref_number: u32,
    /// Largest time magnitude among the key points, 0 when there is none.
    pub time: u64,
}

impl Binding {
    pub fn is_twine(&self) -> bool {
        self.key.iter().any(|r| !r.is_base())
    }

    pub fn has_key(&self, k: (PointId, Variant)) -> bool {
        self.key.iter().any(|r| r.key() == k)
    }

    pub fn value(&self) -> Option<PointRef> {
        self.values.first().copied()
    }
}

/// (point count + bonus, time magnitude, creation serial), compared lexicographically.
pub type Weight = (u32, u64, u64);

pub fn binding_weight(b: &Binding) -> Weight {
    (b.key.len() as u32 + b.bonus, b.time, b.serial)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StoreError {
    #[error("label `{0}` is already defined")]
    Duplicate(String),
    #[error("binding key is empty")]
    EmptyKey,
}

#[derive(Clone, Debug, Default)]
pub struct Store {
    points: Vec<Point>,
    labels: HashMap<String, PointId>,
    times: HashMap<u64, PointId>,
    bindings: Vec<Binding>,
    by_ref: HashMap<(PointId, Variant), Vec<usize>>,
    exact: HashMap<Vec<(PointId, Variant)>, Vec<usize>>,
    next_ref: u32,
}

fn canonical(key: &[PointRef]) -> Vec<(PointId, Variant)> {
    let mut k: Vec<_> = key.iter().map(PointRef::key).collect();
    k.sort();
    k.dedup();
    k
}

impl Store {
    pub fn new() -> Self {
        Store { next_ref: 1, ..Default::default() }
    }

    pub fn new_point(&mut self, label: Option<&str>, kind: Kind, role: Role) -> Result<PointId, StoreError> {
        if let Some(l) = label {
            if self.labels.contains_key(l) {
                return Err(StoreError::Duplicate(l.to_string()));
            }
        }
        let id = self.points.len() as PointId;
        self.points.push(Point { id, label: label.map(str::to_string), kind, role, valence: Valence::Neutral });
        if let Some(l) = label {
            self.labels.insert(l.to_string(), id);
        }
        Ok(id)
    }

    /// Returns the point with `label`, creating a plain internal point if needed.
    pub fn define(&mut self, label: &str) -> PointId {
        match self.labels.get(label) {
            Some(&id) => id,
            None => self.new_point(Some(label), Kind::Internal, Role::Plain).expect("label checked"),
        }
    }

    pub fn anonymous(&mut self, role: Role) -> PointId {
        self.new_point(None, Kind::Internal, role).expect("unlabeled point")
    }

    pub fn lookup(&self, label: &str) -> Option<PointId> {
        self.labels.get(label).copied()
    }

    pub fn time_point(&mut self, magnitude: u64) -> PointId {
        if let Some(&id) = self.times.get(&magnitude) {
            return id;
        }
        let id = self.anonymous(Role::Time(magnitude));
        self.times.insert(magnitude, id);
        id
    }

    pub fn point(&self, id: PointId) -> &Point {
        &self.points[id as usize]
    }

    pub fn point_mut(&mut self, id: PointId) -> &mut Point {
        &mut self.points[id as usize]
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn time_of(&self, id: PointId) -> Option<u64> {
        self.point(id).time()
    }

    /// Sets the display number the next binding receives.
    pub fn set_next_ref(&mut self, n: u32) {
        self.next_ref = n;
    }

    pub fn bind(&mut self, key: Vec<PointRef>, values: Vec<PointRef>, bonus: u32, ordered: bool) -> Result<usize, StoreError> {
        let mut seen = HashSet::new();
        let key: Vec<PointRef> = key.into_iter().filter(|r| seen.insert(r.key())).collect();
        if key.is_empty() {
            return Err(StoreError::EmptyKey);
        }
        let time = key.iter().filter(|r| r.is_base()).filter_map(|r| self.time_of(r.point)).max().unwrap_or(0);
        let idx = self.bindings.len();
        for r in &key {
            self.by_ref.entry(r.key()).or_default().push(idx);
        }
        self.exact.entry(canonical(&key)).or_default().push(idx);
        let ref_number = self.next_ref;
        self.next_ref += 1;
        self.bindings.push(Binding { key, values, bonus, ordered, serial: idx as u64, ref_number, time });
        Ok(idx)
    }

    pub fn binding(&self, idx: usize) -> &Binding {
        &self.bindings[idx]
    }

    pub fn bindings(&self) -> &[Binding] {
        &self.bindings
    }

    /// Bindings whose key contains `r`, in creation order.
    pub fn with_ref(&self, r: (PointId, Variant)) -> &[usize] {
        self.by_ref.get(&r).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Smallest time point magnitude greater than `t`, if any exists.
    pub fn next_time_after(&self, t: u64) -> Option<u64> {
        self.times.keys().copied().filter(|&m| m > t).min()
    }

    fn exact_matches(&self, key: &[PointRef]) -> &[usize] {
        self.exact.get(&canonical(key)).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Explicit points (in PS order) plus their implicit is-a closure.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Context {
    pub explicit: Vec<PointId>,
    /// (point, origin) pairs in discovery order.
    pub implicit: Vec<(PointId, PointId)>,
    pub time: u64,
    members: HashSet<PointId>,
}

impl Context {
    pub fn empty(time: u64) -> Self {
        Context { time, ..Default::default() }
    }

    pub fn contains(&self, p: PointId) -> bool {
        self.members.contains(&p)
    }

    /// Explicit points first, then implicit ones.
    pub fn points(&self) -> impl Iterator<Item = PointId> + '_ {
        self.explicit.iter().copied().chain(self.implicit.iter().map(|&(p, _)| p))
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Adds a point without expanding it.
    pub fn insert_implicit(&mut self, p: PointId, origin: PointId) {
        if self.members.insert(p) {
            self.implicit.push((p, origin));
        }
    }

    /// Drops an explicit point together with everything only it implied.
    pub fn remove_explicit(&mut self, store: &Store, p: PointId) {
        let explicit: Vec<PointId> = self.explicit.iter().copied().filter(|&x| x != p).collect();
        *self = expand_context(store, &explicit, self.time);
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("no result found")]
    NotFound,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalOutcome {
    pub matched: Option<usize>,
    pub values: Vec<PointRef>,
    /// The matched key equals the query key exactly.
    pub complete: bool,
}

impl EvalOutcome {
    fn of(store: &Store, idx: usize, query: &[PointRef]) -> Self {
        let b = store.binding(idx);
        EvalOutcome { matched: Some(idx), values: b.values.clone(), complete: canonical(&b.key) == canonical(query) }
    }
}

pub fn eval_simple(store: &Store, k: &[PointRef]) -> Result<EvalOutcome, EvalError> {
    store
        .exact_matches(k)
        .iter()
        .copied()
        .max_by_key(|&i| binding_weight(store.binding(i)))
        .map(|i| EvalOutcome::of(store, i, k))
        .ok_or(EvalError::NotFound)
}

fn time_ok(store: &Store, p: PointId, now: u64) -> Option<bool> {
    store.time_of(p).map(|t| t <= now)
}

/// Contextual evaluation. A binding qualifies when every query point is
/// covered by its key (directly or through one of the query point's is-a
/// ancestors) and every key point is available from the query, the query's
/// is-a closure, the context, or an elapsed time point.
pub fn eval_contextual(store: &Store, ctx: &Context, k: &[PointRef]) -> Result<EvalOutcome, EvalError> {
    best_contextual(store, ctx, k, true).map(|i| EvalOutcome::of(store, i, k)).ok_or(EvalError::NotFound)
}

/// True when `k` would evaluate if time constraints were ignored. Used to
/// decide whether advancing the clock can unblock a waiting variant.
pub fn time_blocked(store: &Store, ctx: &Context, k: &[PointRef]) -> bool {
    best_contextual(store, ctx, k, true).is_none() && best_contextual(store, ctx, k, false).is_some()
}

fn best_contextual(store: &Store, ctx: &Context, k: &[PointRef], timed: bool) -> Option<usize> {
    let query: Vec<(PointId, Variant)> = canonical(k);
    let qset: HashSet<(PointId, Variant)> = query.iter().copied().collect();
    let ancestors: HashMap<PointId, Vec<PointId>> =
        query.iter().filter(|(_, v)| *v == Variant::Base).map(|&(p, _)| (p, isa_closure(store, ctx, p))).collect();
    let closure: HashSet<PointId> = ancestors.values().flatten().copied().collect();

    let mut cands: Vec<usize> = if let Some(&r) = query.iter().find(|(_, v)| *v != Variant::Base) {
        store.with_ref(r).to_vec()
    } else if let Some(&(p, _)) = query.first() {
        std::iter::once(p).chain(ancestors[&p].iter().copied()).flat_map(|x| store.with_ref((x, Variant::Base)).iter().copied()).collect()
    } else {
        ctx.points().flat_map(|x| store.with_ref((x, Variant::Base)).iter().copied()).collect()
    };
    cands.sort_unstable();
    cands.dedup();

    let available = |p: PointId| -> bool {
        match time_ok(store, p, ctx.time) {
            Some(ok) => ok || !timed || qset.contains(&(p, Variant::Base)),
            None => qset.contains(&(p, Variant::Base)) || closure.contains(&p) || ctx.contains(p),
        }
    };

    cands
        .into_iter()
        .filter(|&i| {
            let b = store.binding(i);
            let keys_ok = b.key.iter().all(|r| if r.is_base() { available(r.point) } else { qset.contains(&r.key()) });
            keys_ok
                && query.iter().all(|&(p, v)| {
                    b.has_key((p, v)) || (v == Variant::Base && ancestors[&p].iter().any(|&a| b.has_key((a, Variant::Base))))
                })
        })
        .max_by_key(|&i| binding_weight(store.binding(i)))
}

/// All is-a points of `p` valid in `ctx`, in binding creation order. Among
/// timed twines that differ only in their time point, only those carrying the
/// latest time survive.
pub fn eval_isa_all(store: &Store, ctx: &Context, p: PointId) -> Vec<PointId> {
    let qualifying: Vec<usize> = store
        .with_ref((p, Variant::Isa))
        .iter()
        .copied()
        .filter(|&i| {
            store.binding(i).key.iter().all(|r| {
                if r.key() == (p, Variant::Isa) {
                    return true;
                }
                if !r.is_base() {
                    return false;
                }
                match time_ok(store, r.point, ctx.time) {
                    Some(ok) => ok,
                    None => ctx.contains(r.point),
                }
            })
        })
        .collect();

    let untimed = |i: usize| -> Vec<(PointId, Variant)> {
        let mut k: Vec<_> =
            store.binding(i).key.iter().filter(|r| !(r.is_base() && store.time_of(r.point).is_some())).map(PointRef::key).collect();
        k.sort();
        k
    };
    let mut latest: HashMap<Vec<(PointId, Variant)>, u64> = HashMap::new();
    for &i in &qualifying {
        let b = store.binding(i);
        if b.time > 0 {
            let e = latest.entry(untimed(i)).or_insert(0);
            *e = (*e).max(b.time);
        }
    }

    let mut out = Vec::new();
    for i in qualifying {
        let b = store.binding(i);
        if b.time > 0 && latest[&untimed(i)] != b.time {
            continue;
        }
        for v in &b.values {
            if v.is_base() && !out.contains(&v.point) {
                out.push(v.point);
            }
        }
    }
    out
}

/// Breadth-first is-a closure of `p`, excluding `p` itself.
pub fn isa_closure(store: &Store, ctx: &Context, p: PointId) -> Vec<PointId> {
    let mut seen = HashSet::from([p]);
    let mut out = Vec::new();
    let mut queue = VecDeque::from([p]);
    while let Some(x) = queue.pop_front() {
        for y in eval_isa_all(store, ctx, x) {
            if seen.insert(y) {
                out.push(y);
                queue.push_back(y);
            }
        }
    }
    out
}

/// Builds the full context: explicit points plus the is-a fixed point,
/// expanded breadth-first starting from the first explicit point.
pub fn expand_context(store: &Store, explicit: &[PointId], time: u64) -> Context {
    let mut ctx = Context::empty(time);
    for &p in explicit {
        if ctx.members.insert(p) {
            ctx.explicit.push(p);
        }
    }
    let mut queue: VecDeque<(PointId, PointId)> = ctx.explicit.iter().map(|&p| (p, p)).collect();
    loop {
        while let Some((x, origin)) = queue.pop_front() {
            for y in eval_isa_all(store, &ctx, x) {
                if ctx.members.insert(y) {
                    ctx.implicit.push((y, origin));
                    queue.push_back((y, origin));
                }
            }
        }
        // Twines conditioned on later discoveries need another pass.
        let all: Vec<(PointId, PointId)> = ctx.explicit.iter().map(|&p| (p, p)).chain(ctx.implicit.iter().copied()).collect();
        for (x, origin) in all {
            for y in eval_isa_all(store, &ctx, x) {
                if !ctx.members.contains(&y) {
                    queue.push_back((x, origin));
                    break;
                }
            }
        }
        if queue.is_empty() {
            return ctx;
        }
    }
}

/// Display form of a point: label, `#hex`, `#hex?`, `*T*(n)` or `rCTP(n)`.
pub fn format_point(store: &Store, id: PointId) -> String {
    let p = store.point(id);
    match (&p.label, p.role) {
        (Some(l), _) => l.clone(),
        (None, Role::Time(t)) => format!("rCTP({t})"),
        (None, Role::Thought(n)) => format!("*T*({n})"),
        (None, Role::Surrogate) => format!("#{:x}?", display_number(id)),
        (None, _) => format!("#{:x}", display_number(id)),
    }
}

/// Unlabeled points print as hex numbers spaced four apart.
pub fn display_number(id: PointId) -> u32 {
    id * 4
}

pub fn format_ref(store: &Store, r: &PointRef) -> String {
    let mut s = String::new();
    if r.remove {
        s.push('-');
    }
    if r.quoted {
        s.push('@');
    }
    s.push_str(&format_point(store, r.point));
    match r.variant {
        Variant::Base => {}
        Variant::Isa => s.push_str(".i"),
        Variant::Value => s.push_str(".v"),
    }
    s
}

pub fn format_binding(store: &Store, b: &Binding) -> String {
    let sep = if b.ordered { "/" } else { " " };
    let key: Vec<String> = b.key.iter().map(|r| format_ref(store, &r.plain())).collect();
    let vals: Vec<String> = b.values.iter().map(|r| format_ref(store, r)).collect();
    format!("#{}: [{}] = {}", b.ref_number, key.join(sep), vals.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(store: &mut Store, labels: &[&str]) -> Vec<PointId> {
        labels.iter().map(|l| store.define(l)).collect()
    }

    fn label(store: &Store, r: &PointRef) -> String {
        format_ref(store, r)
    }

    #[test]
    fn weight_counts_key_points_then_time_then_serial() {
        let mut s = Store::new();
        let p = pts(&mut s, &["chocolate", "tastes", "good", "johnThinks", "bad", "a"]);
        let b1 = s.bind(vec![PointRef::base(p[0]), PointRef::base(p[1])], vec![PointRef::base(p[2])], 0, false).unwrap();
        let b2 =
            s.bind(vec![PointRef::base(p[3]), PointRef::base(p[0]), PointRef::base(p[1])], vec![PointRef::base(p[4])], 0, false).unwrap();
        assert!(binding_weight(s.binding(b2)) > binding_weight(s.binding(b1)));
        let b3 = s.bind(vec![PointRef::base(p[5])], vec![PointRef::base(p[2])], 0, false).unwrap();
        assert_eq!(binding_weight(s.binding(b3)), (1, 0, b3 as u64));
        let t300 = s.time_point(300);
        let t400 = s.time_point(400);
        let x = s.bind(vec![PointRef::base(p[5]), PointRef::base(t300)], vec![], 0, false).unwrap();
        let y = s.bind(vec![PointRef::base(p[5]), PointRef::base(t400)], vec![], 0, false).unwrap();
        let (wx, wy) = (binding_weight(s.binding(x)), binding_weight(s.binding(y)));
        assert_eq!(wx.0, wy.0);
        assert!(wy > wx);
    }

    #[test]
    fn simple_eval_is_order_independent() {
        let mut s = Store::new();
        let p = pts(&mut s, &["factorial", "5", "120"]);
        s.bind(vec![PointRef::base(p[0]), PointRef::base(p[1])], vec![PointRef::base(p[2])], 0, false).unwrap();
        let r = eval_simple(&s, &[PointRef::base(p[1]), PointRef::base(p[0])]).unwrap();
        assert_eq!(r.values, vec![PointRef::base(p[2])]);
        assert!(r.complete);
        assert_eq!(eval_simple(&Store::new(), &[PointRef::base(0)]), Err(EvalError::NotFound));
    }

    #[test]
    fn context_selects_heavier_binding() {
        let mut s = Store::new();
        let p = pts(&mut s, &["chocolate", "tastes", "good", "johnThinks", "bad"]);
        s.bind(vec![PointRef::base(p[0]), PointRef::base(p[1])], vec![PointRef::base(p[2])], 0, false).unwrap();
        s.bind(vec![PointRef::base(p[3]), PointRef::base(p[0]), PointRef::base(p[1])], vec![PointRef::base(p[4])], 0, false).unwrap();
        let k = [PointRef::base(p[0]), PointRef::base(p[1])];
        let none = expand_context(&s, &[], 0);
        assert_eq!(label(&s, &eval_contextual(&s, &none, &k).unwrap().values[0]), "good");
        let john = expand_context(&s, &[p[3]], 0);
        let out = eval_contextual(&s, &john, &k).unwrap();
        assert_eq!(label(&s, &out.values[0]), "bad");
        assert!(!out.complete);
    }

    #[test]
    fn fido_incomplete_beats_complete() {
        let mut s = Store::new();
        let p = pts(&mut s, &["whatIs", "Fido", "dog", "profKnowItAll", "beagle", "biologyLecture", "CanisLupusFamiliaris"]);
        let b = PointRef::base;
        s.bind(vec![b(p[0]), b(p[1])], vec![b(p[2])], 0, false).unwrap();
        s.bind(vec![b(p[0]), b(p[1]), b(p[3])], vec![b(p[4])], 0, false).unwrap();
        s.bind(vec![b(p[0]), b(p[1]), b(p[3]), b(p[5])], vec![b(p[6])], 0, false).unwrap();
        let k = [b(p[0]), b(p[1])];
        let run = |ctx: &[PointId]| label(&s, &eval_contextual(&s, &expand_context(&s, ctx, 0), &k).unwrap().values[0]);
        assert_eq!(run(&[]), "dog");
        assert_eq!(run(&[p[3]]), "beagle");
        assert_eq!(run(&[p[3], p[5]]), "CanisLupusFamiliaris");
    }

    #[test]
    fn marital_status_follows_time() {
        let mut s = Store::new();
        let p = pts(&mut s, &["maritalStatus", "John", "single", "married", "divorced", "remarried"]);
        for (i, t) in [100u64, 200, 300, 400].iter().enumerate() {
            let tp = s.time_point(*t);
            s.bind(vec![PointRef::value(p[0]), PointRef::base(p[1]), PointRef::base(tp)], vec![PointRef::base(p[2 + i])], 0, false)
                .unwrap();
        }
        let k = [PointRef::value(p[0]), PointRef::base(p[1])];
        let at = |t| label(&s, &eval_contextual(&s, &expand_context(&s, &[], t), &k).unwrap().values[0]);
        assert_eq!(at(1000), "remarried");
        assert_eq!(at(350), "divorced");
        assert_eq!(eval_contextual(&s, &expand_context(&s, &[], 50), &k), Err(EvalError::NotFound));
    }

    #[test]
    fn horse_example_through_isa_coverage() {
        let mut s = Store::new();
        let p = pts(&mut s, &["horse", "Pegasus", "MrEd", "Seabiscuit", "canTalk", "canFly", "yes", "no"]);
        let (b, v, i) = (PointRef::base, PointRef::value, PointRef::isa);
        for h in &p[1..4] {
            s.bind(vec![i(*h)], vec![b(p[0])], 0, false).unwrap();
        }
        s.bind(vec![v(p[4]), b(p[0])], vec![b(p[7])], 0, false).unwrap();
        s.bind(vec![v(p[5]), b(p[0])], vec![b(p[7])], 0, false).unwrap();
        s.bind(vec![v(p[4]), b(p[2]), b(p[0])], vec![b(p[6])], 0, false).unwrap();
        s.bind(vec![v(p[5]), b(p[1]), b(p[0])], vec![b(p[6])], 0, false).unwrap();
        let ctx = expand_context(&s, &[], 1);
        let ask = |q: PointId, h: PointId| label(&s, &eval_contextual(&s, &ctx, &[v(q), b(h)]).unwrap().values[0]);
        assert_eq!(ask(p[5], p[3]), "no");
        assert_eq!(ask(p[4], p[2]), "yes");
        assert_eq!(ask(p[5], p[1]), "yes");
        assert_eq!(ask(p[4], p[1]), "no");
    }

    #[test]
    fn harry_context_expansion() {
        let mut s = Store::new();
        let p = pts(&mut s, &["Harry", "man", "human", "married", "single", "father"]);
        let (b, i) = (PointRef::base, PointRef::isa);
        let t100 = s.time_point(100);
        let t50 = s.time_point(50);
        s.bind(vec![i(p[0])], vec![b(p[1])], 0, false).unwrap();
        s.bind(vec![i(p[1])], vec![b(p[2])], 0, false).unwrap();
        s.bind(vec![i(p[0]), b(t100)], vec![b(p[3])], 0, false).unwrap();
        s.bind(vec![i(p[0]), b(t50)], vec![b(p[4])], 0, false).unwrap();
        s.bind(vec![i(p[0])], vec![b(p[5])], 0, false).unwrap();
        let ctx = expand_context(&s, &[p[0]], 1000);
        assert_eq!(eval_isa_all(&s, &ctx, p[0]), vec![p[1], p[3], p[5]]);
        let mut all: Vec<PointId> = ctx.points().collect();
        all.sort();
        assert_eq!(all, vec![p[0], p[1], p[2], p[3], p[5]]);
    }

    #[test]
    fn contextual_isa_alternatives() {
        let mut s = Store::new();
        let p = pts(&mut s, &["a", "a2", "b", "c"]);
        let (b, i) = (PointRef::base, PointRef::isa);
        s.bind(vec![i(p[2])], vec![b(p[0])], 0, false).unwrap();
        s.bind(vec![i(p[2]), b(p[3])], vec![b(p[1])], 0, false).unwrap();
        assert_eq!(eval_isa_all(&s, &expand_context(&s, &[p[3]], 0), p[2]), vec![p[0], p[1]]);
        assert_eq!(eval_isa_all(&s, &expand_context(&s, &[], 0), p[2]), vec![p[0]]);
        assert!(eval_isa_all(&s, &expand_context(&s, &[], 0), p[3]).is_empty());
    }

    #[test]
    fn isa_cycle_terminates() {
        let mut s = Store::new();
        let p = pts(&mut s, &["a", "b"]);
        s.bind(vec![PointRef::isa(p[0])], vec![PointRef::base(p[1])], 0, false).unwrap();
        s.bind(vec![PointRef::isa(p[1])], vec![PointRef::base(p[0])], 0, false).unwrap();
        let ctx = expand_context(&s, &[p[0]], 0);
        assert_eq!(ctx.len(), 2);
    }

    #[test]
    fn removing_explicit_point_cascades() {
        let mut s = Store::new();
        let p = pts(&mut s, &["x", "y", "z", "w"]);
        s.bind(vec![PointRef::isa(p[0])], vec![PointRef::base(p[1])], 0, false).unwrap();
        s.bind(vec![PointRef::isa(p[1])], vec![PointRef::base(p[2])], 0, false).unwrap();
        let mut ctx = expand_context(&s, &[p[0], p[3]], 0);
        assert!(ctx.contains(p[2]));
        ctx.remove_explicit(&s, p[0]);
        assert!(!ctx.contains(p[1]) && !ctx.contains(p[2]) && ctx.contains(p[3]));
    }

    #[test]
    fn adjective_label_does_not_leak_to_noun() {
        let mut s = Store::new();
        let p = pts(&mut s, &["label", "adjBig", "nounJohn", "big", "John"]);
        let (b, v) = (PointRef::base, PointRef::value);
        s.bind(vec![v(p[0]), b(p[1])], vec![b(p[3])], 0, false).unwrap();
        s.bind(vec![v(p[0]), b(p[2])], vec![b(p[4])], 0, false).unwrap();
        let ctx = expand_context(&s, &[p[1], p[2]], 0);
        let out = eval_contextual(&s, &ctx, &[v(p[0]), b(p[2])]).unwrap();
        assert_eq!(label(&s, &out.values[0]), "John");
    }
}
