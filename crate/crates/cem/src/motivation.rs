//! Valence accounting and the two motivation simulations: a seeker homing on
//! a target with plus points, and a roamer learning to avoid a painful pen.

use std::io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use crate::core::Valence;

fn valence_value(v: Valence) -> i64 {
    match v {
        Valence::Plus => 1,
        Valence::Minus => -1,
        Valence::Neutral => 0,
    }
}

/// Running sum, smoothed sum and their difference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValenceTally {
    pub sigma: i64,
    pub sigma_bar: f64,
    pub delta: f64,
    pub s: f64,
}

impl ValenceTally {
    pub fn new(s: f64) -> Self {
        assert!((0.0..=1.0).contains(&s), "smoothing factor must lie in [0, 1]");
        ValenceTally { sigma: 0, sigma_bar: 0.0, delta: 0.0, s }
    }

    /// Recomputes the tally from the valences of the points now in the PS.
    pub fn update(&mut self, ps: impl IntoIterator<Item = Valence>) {
        self.sigma = ps.into_iter().map(valence_value).sum();
        self.sigma_bar = self.s * self.sigma as f64 + (1.0 - self.s) * self.sigma_bar;
        self.delta = self.sigma as f64 - self.sigma_bar;
    }
}

/// Scan period multiplier: base * 2^(sigma/k). Good states slow the clock.
pub fn clock_period(sigma: i64, base: f64, k: f64) -> f64 {
    base * (sigma as f64 / k).exp2()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    Left,
    Straight,
    Right,
}

impl Action {
    fn turn(self, theta: f64) -> f64 {
        match self {
            Action::Left => theta,
            Action::Straight => 0.0,
            Action::Right => -theta,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Action::Left => "left",
            Action::Straight => "straight",
            Action::Right => "right",
        }
    }
}

/// The undirected choice: left 0.5, right 0.25, straight 0.25.
pub fn biased_action(rng: &mut impl Rng) -> Action {
    let r: f64 = rng.gen();
    if r < 0.5 {
        Action::Left
    } else if r < 0.75 {
        Action::Right
    } else {
        Action::Straight
    }
}

/// Chooses the next seeker action from delta and the prior action.
pub fn choose_action(delta: f64, prior: Action, rng: &mut impl Rng) -> Action {
    if delta < -5.0 {
        match prior {
            Action::Left => Action::Right,
            Action::Right => Action::Left,
            Action::Straight => {
                if rng.gen_bool(0.5) {
                    Action::Left
                } else {
                    Action::Right
                }
            }
        }
    } else if delta > 5.0 {
        prior
    } else {
        biased_action(rng)
    }
}

/// Sensor bearing offsets in degrees and how many sensors share each; the
/// mirror offsets carry the same count.
pub const SENSOR_LAYOUT: &[(f64, usize)] =
    &[(0.0, 20), (1.0, 12), (2.5, 8), (4.0, 6), (5.0, 6), (7.5, 4), (10.0, 3), (15.0, 2), (20.0, 2), (25.0, 1), (35.0, 1)];

/// One entry per sensor.
pub fn sensor_offsets() -> Vec<f64> {
    let mut out = Vec::new();
    for &(o, n) in SENSOR_LAYOUT {
        out.extend(std::iter::repeat_n(o, n));
        if o != 0.0 {
            out.extend(std::iter::repeat_n(-o, n));
        }
    }
    out
}

fn wrap_degrees(a: f64) -> f64 {
    (a + 180.0).rem_euclid(360.0) - 180.0
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub step: usize,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub sigma: i64,
    pub sigma_bar: f64,
    pub delta: f64,
    pub event: String,
}

pub const CSV_HEADER: &str = "step,x,y,heading,sigma,sigma_bar,delta,event";

pub fn write_csv(rows: &[Row], out: &mut impl io::Write) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{},{:.4},{:.4},{:.2},{},{:.6},{:.6},{}", r.step, r.x, r.y, r.heading, r.sigma, r.sigma_bar, r.delta, r.event)?;
    }
    Ok(())
}

pub fn csv_string(rows: &[Row]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii")
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeekerConfig {
    pub seed: u64,
    pub steps: usize,
    pub theta: f64,
    pub s: f64,
    /// Target position; drawn from the seed when absent.
    pub target: Option<(f64, f64)>,
}

impl SeekerConfig {
    pub fn new(seed: u64, steps: usize) -> Self {
        SeekerConfig { seed, steps, theta: 10.0, s: 0.3, target: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeekerState {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub prior: Action,
    pub theta: f64,
    pub sensors: Vec<f64>,
}

impl SeekerState {
    pub fn new(theta: f64) -> Self {
        SeekerState { x: 0.0, y: 0.0, heading: 0.0, prior: Action::Straight, theta, sensors: sensor_offsets() }
    }

    /// Plus points: sensors pointing within 1 degree of the target.
    pub fn plus_points(&self, target: (f64, f64)) -> usize {
        let bearing = (target.1 - self.y).atan2(target.0 - self.x).to_degrees();
        let rel = wrap_degrees(bearing - self.heading);
        self.sensors.iter().filter(|&&o| (o - rel).abs() <= 1.0).count()
    }
}

/// Senses, updates the tally, turns and advances one unit.
pub fn step_seeker(state: &mut SeekerState, tally: &mut ValenceTally, target: (f64, f64), rng: &mut impl Rng) -> Action {
    let plus = state.plus_points(target);
    tally.update(std::iter::repeat_n(Valence::Plus, plus));
    let action = choose_action(tally.delta, state.prior, rng);
    state.heading = (state.heading + action.turn(state.theta)).rem_euclid(360.0);
    state.prior = action;
    let h = state.heading.to_radians();
    state.x += h.cos();
    state.y += h.sin();
    action
}

pub fn seeker_target(cfg: &SeekerConfig, rng: &mut impl Rng) -> (f64, f64) {
    cfg.target.unwrap_or_else(|| {
        let bearing: f64 = rng.gen_range(0.0..360.0f64).to_radians();
        let dist: f64 = rng.gen_range(10.0..30.0);
        (dist * bearing.cos(), dist * bearing.sin())
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeekerRun {
    pub target: (f64, f64),
    pub rows: Vec<Row>,
    /// Step at which the seeker came within one unit of the target.
    pub reached: Option<usize>,
}

/// Runs the seeker until it is within one unit of the target or the step
/// budget runs out.
pub fn run_seeker(cfg: &SeekerConfig) -> SeekerRun {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let target = seeker_target(cfg, &mut rng);
    let mut state = SeekerState::new(cfg.theta);
    let mut tally = ValenceTally::new(cfg.s);
    let mut rows = Vec::with_capacity(cfg.steps);
    let mut reached = None;
    for step in 1..=cfg.steps {
        let action = step_seeker(&mut state, &mut tally, target, &mut rng);
        let close = (target.0 - state.x).hypot(target.1 - state.y) < 1.0;
        rows.push(Row {
            step,
            x: state.x,
            y: state.y,
            heading: state.heading,
            sigma: tally.sigma,
            sigma_bar: tally.sigma_bar,
            delta: tally.delta,
            event: if close { "target".into() } else { action.name().into() },
        });
        if close {
            reached = Some(step);
            break;
        }
    }
    SeekerRun { target, rows, reached }
}

/// Proximity sensors, one per side of the pen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    North,
    South,
    East,
    West,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PenConfig {
    pub seed: u64,
    pub steps: usize,
    pub theta: f64,
    pub s: f64,
    pub size: f64,
    pub proximity: f64,
    pub learning: bool,
}

impl PenConfig {
    pub fn new(seed: u64, steps: usize, learning: bool) -> Self {
        PenConfig { seed, steps, theta: 10.0, s: 0.1, size: 40.0, proximity: 3.0, learning }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PenState {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub size: f64,
    pub proximity: f64,
    /// Learned bindings: sets of proximity points bound to a pain point.
    pub learned: Vec<Vec<Side>>,
    pub learning: bool,
    pub hits: usize,
}

impl PenState {
    pub fn new(cfg: &PenConfig) -> Self {
        PenState {
            x: cfg.size / 2.0,
            y: cfg.size / 2.0,
            heading: 90.0,
            size: cfg.size,
            proximity: cfg.proximity,
            learned: Vec::new(),
            learning: cfg.learning,
            hits: 0,
        }
    }

    /// Neutral proximity points for the sides within range that the roamer
    /// is heading toward.
    pub fn near(&self) -> Vec<Side> {
        let h = self.heading.to_radians();
        let (dx, dy) = (h.cos(), h.sin());
        let eps = 1e-9;
        let mut out = Vec::new();
        if self.size - self.y <= self.proximity && dy > eps {
            out.push(Side::North);
        }
        if self.y <= self.proximity && dy < -eps {
            out.push(Side::South);
        }
        if self.size - self.x <= self.proximity && dx > eps {
            out.push(Side::East);
        }
        if self.x <= self.proximity && dx < -eps {
            out.push(Side::West);
        }
        out
    }

    /// Evaluates the null key set: any learned binding whose key is covered
    /// by the proximity points yields its pain point.
    fn recalled_pain(&self, near: &[Side]) -> usize {
        self.learned.iter().filter(|k| k.iter().all(|s| near.contains(s))).count().min(1)
    }
}

/// One pen step: roam, sense walls and pain, reverse on negative sigma and
/// learn when both sigma and delta are negative. Returns the event label.
pub fn step_pen(state: &mut PenState, tally: &mut ValenceTally, theta: f64, rng: &mut impl Rng) -> String {
    let mut events = Vec::new();
    let turn = match rng.gen_range(0..3) {
        0 => theta,
        1 => -theta,
        _ => 0.0,
    };
    state.heading = (state.heading + turn).rem_euclid(360.0);
    let h = state.heading.to_radians();
    let (nx, ny) = (state.x + h.cos(), state.y + h.sin());
    let hit = !(0.0..=state.size).contains(&nx) || !(0.0..=state.size).contains(&ny);
    if hit {
        state.hits += 1;
        state.x = nx.clamp(0.0, state.size);
        state.y = ny.clamp(0.0, state.size);
        events.push("hit");
    } else {
        state.x = nx;
        state.y = ny;
    }
    let near = state.near();
    let recalled = state.recalled_pain(&near);
    let mut ps: Vec<Valence> = near.iter().map(|_| Valence::Neutral).collect();
    if hit {
        ps.push(Valence::Minus);
    }
    ps.extend(std::iter::repeat_n(Valence::Minus, recalled));
    tally.update(ps);
    if recalled > 0 && !hit {
        events.push("recall");
    }
    if tally.sigma < 0 {
        state.heading = (state.heading + 180.0).rem_euclid(360.0);
        events.push("reverse");
    }
    if state.learning && tally.sigma < 0 && tally.delta < 0.0 && !near.is_empty() {
        let mut key = near.clone();
        key.sort();
        if !state.learned.contains(&key) {
            state.learned.push(key);
            events.push("learn");
        }
    }
    events.join("+")
}

#[derive(Clone, Debug, PartialEq)]
pub struct PenRun {
    pub rows: Vec<Row>,
    pub hits: usize,
}

pub fn run_pen(cfg: &PenConfig) -> PenRun {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = PenState::new(cfg);
    let mut tally = ValenceTally::new(cfg.s);
    let mut rows = Vec::with_capacity(cfg.steps);
    for step in 1..=cfg.steps {
        let event = step_pen(&mut state, &mut tally, cfg.theta, &mut rng);
        rows.push(Row {
            step,
            x: state.x,
            y: state.y,
            heading: state.heading,
            sigma: tally.sigma,
            sigma_bar: tally.sigma_bar,
            delta: tally.delta,
            event,
        });
    }
    PenRun { rows, hits: state.hits }
}

/// Empirical left/right/straight frequencies of the undirected choice.
pub fn rule3_frequencies(seed: u64, draws: usize) -> (f64, f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = [0usize; 3];
    for _ in 0..draws {
        let i = match biased_action(&mut rng) {
            Action::Left => 0,
            Action::Right => 1,
            Action::Straight => 2,
        };
        counts[i] += 1;
    }
    let n = draws as f64;
    (counts[0] as f64 / n, counts[1] as f64 / n, counts[2] as f64 / n)
}
