//! Pattern learning over sample sets, embedded patterns, recognition and the
//! spectral frame encoder used by the voice matching experiment.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::core::{eval_contextual, PointId, PointRef, Role};
use crate::engine::Engine;

pub type Sample = Vec<u32>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PatternParams {
    pub min_points: usize,
    pub min_occurs: usize,
    /// Rounds of re-intersecting the intersected sets.
    pub max_iterations: usize,
}

impl PatternParams {
    pub fn new(min_points: usize, min_occurs: usize) -> Self {
        PatternParams { min_points, min_occurs, max_iterations: 32 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LearnedPattern {
    /// Sorted key points.
    pub key: Vec<u32>,
    /// Number of original samples containing the key.
    pub support: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Learned {
    /// Sorted by key.
    pub patterns: Vec<LearnedPattern>,
    /// First-pass pairwise intersections with at least `min_points` points,
    /// with how often each occurred, most frequent first.
    pub tally: Vec<(Vec<u32>, usize)>,
}

impl Learned {
    pub fn tally_of(&self, key: &[u32]) -> usize {
        self.tally.iter().find(|(k, _)| k == key).map_or(0, |(_, n)| *n)
    }
}

fn canonical(s: &[u32]) -> Vec<u32> {
    let mut v = s.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

fn intersect(a: &[u32], b: &[u32]) -> Vec<u32> {
    let (mut i, mut j, mut out) = (0, 0, Vec::new());
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

fn is_subset(a: &[u32], b: &[u32]) -> bool {
    intersect(a, b).len() == a.len()
}

/// Number of samples containing `key` (both sorted).
pub fn support(samples: &[Vec<u32>], key: &[u32]) -> usize {
    samples.iter().filter(|s| is_subset(key, s)).count()
}

/// Learns patterns: sets of at least `min_points` points contained in at
/// least `min_occurs` samples. Candidates are pairwise intersections of the
/// samples, re-intersected until no new set appears; each candidate's support
/// is recounted directly against the samples.
pub fn learn_patterns(samples: &[Sample], params: &PatternParams) -> Learned {
    let samples: Vec<Vec<u32>> = samples.iter().map(|s| canonical(s)).collect();
    let mut tally: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
    let mut all: BTreeSet<Vec<u32>> = BTreeSet::new();
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            let x = intersect(&samples[i], &samples[j]);
            if x.len() >= params.min_points.max(1) {
                *tally.entry(x.clone()).or_insert(0) += 1;
                all.insert(x);
            }
        }
    }
    let mut frontier: Vec<Vec<u32>> = all.iter().cloned().collect();
    for _ in 1..params.max_iterations {
        if frontier.is_empty() {
            break;
        }
        let known: Vec<Vec<u32>> = all.iter().cloned().collect();
        let mut next = Vec::new();
        for f in &frontier {
            for k in &known {
                let x = intersect(f, k);
                if x.len() >= params.min_points.max(1) && !all.contains(&x) && !next.contains(&x) {
                    next.push(x);
                }
            }
        }
        all.extend(next.iter().cloned());
        frontier = next;
    }
    let patterns = all
        .into_iter()
        .filter_map(|key| {
            let n = support(&samples, &key);
            (n >= params.min_occurs).then_some(LearnedPattern { key, support: n })
        })
        .collect();
    let mut tally: Vec<(Vec<u32>, usize)> = tally.into_iter().collect();
    tally.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Learned { patterns, tally }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SampleParseError {
    #[error("line {line}: bad token `{token}`")]
    BadToken { line: usize, token: String },
}

/// One sample per non-empty line; numbers separated by whitespace or commas,
/// optionally wrapped in braces.
pub fn parse_samples(text: &str) -> Result<Vec<Sample>, SampleParseError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let cleaned = line.replace(['{', '}', ','], " ");
        if cleaned.trim().is_empty() {
            continue;
        }
        let mut sample = Vec::new();
        for tok in cleaned.split_whitespace() {
            let v = tok.parse::<u32>().map_err(|_| SampleParseError::BadToken { line: n + 1, token: tok.to_string() })?;
            sample.push(v);
        }
        out.push(sample);
    }
    Ok(out)
}

/// Creates a binding [key points] = new point for each pattern, mapping
/// sample numbers to points labelled with the number.
pub fn bind_patterns(engine: &mut Engine, learned: &Learned) -> Vec<(Vec<PointId>, PointId)> {
    let mut out = Vec::new();
    for p in &learned.patterns {
        let key: Vec<PointId> = p.key.iter().map(|n| engine.store.define(&n.to_string())).collect();
        let value = engine.store.anonymous(Role::Plain);
        engine.bind(key.iter().map(|&k| PointRef::base(k)).collect(), vec![PointRef::base(value)], 0, false);
        out.push((key, value));
    }
    out
}

/// Double twines `sub:main` for every pattern whose key is strictly inside
/// another's. Returns the (sub, main) pairs twined.
pub fn detect_embedded(engine: &mut Engine, patterns: &[(Vec<PointId>, PointId)]) -> Vec<(PointId, PointId)> {
    let mut out = Vec::new();
    for (sub_key, sub) in patterns {
        let sub_sorted = canonical(sub_key);
        for (main_key, main) in patterns {
            let main_sorted = canonical(main_key);
            if sub_sorted.len() < main_sorted.len() && is_subset(&sub_sorted, &main_sorted) {
                engine.bind(vec![PointRef::value(*sub)], vec![PointRef::base(*main)], 0, false);
                engine.bind(vec![PointRef::isa(*main)], vec![PointRef::base(*sub)], 0, false);
                out.push((*sub, *main));
            }
        }
    }
    out
}

/// Evaluates the null key set against the PS context. On a match the
/// recognised point's value variant is pushed and the point returned.
pub fn recognize(engine: &mut Engine) -> Option<PointId> {
    let ctx = engine.context();
    let found = eval_contextual(&engine.store, &ctx, &[]).ok()?;
    let v = found.values.first()?.point;
    engine.push(PointRef::value(v));
    Some(v)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodeError {
    #[error("all magnitudes are zero")]
    EmptyFrame,
}

/// Encodes one spectrum as a set of four digit codes `f*100 + m`, reading the
/// frame encoding equation as
///   f_code = floor(10 * (ln f - 5) + 0.5)
///   m_code = floor(ln(1000 * mag / sum(mag)) + 0.05)
/// with both parts clamped to 0..=99. Bins with zero magnitude are skipped.
pub fn encode_fft_frame(bins: &[(f64, f64)]) -> Result<Vec<u16>, EncodeError> {
    let total: f64 = bins.iter().map(|&(_, m)| m.max(0.0)).sum();
    if total <= 0.0 {
        return Err(EncodeError::EmptyFrame);
    }
    let mut codes = BTreeSet::new();
    for &(f, mag) in bins {
        if mag <= 0.0 || f <= 0.0 {
            continue;
        }
        let fc = (10.0 * (f.ln() - 5.0) + 0.5).floor().clamp(0.0, 99.0) as u16;
        let mc = ((1000.0 * mag / total).ln() + 0.05).floor().clamp(0.0, 99.0) as u16;
        codes.insert(fc * 100 + mc);
    }
    Ok(codes.into_iter().collect())
}

/// Splits a code into its frequency and magnitude parts.
pub fn decode(code: u16) -> (u16, u16) {
    (code / 100, code % 100)
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FftFile {
    pub source: String,
    pub frames: Vec<Vec<u16>>,
}

/// Reads the fft text format: `!<source>` then one frame of comma separated
/// codes per line, with indented lines continuing the previous frame.
pub fn parse_fft(text: &str) -> Result<FftFile, SampleParseError> {
    let mut file = FftFile::default();
    let mut logical: Vec<(usize, String)> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if let Some(src) = line.strip_prefix('!') {
            file.source = src.trim().to_string();
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let continues = line.starts_with([' ', '\t']) || logical.last().is_some_and(|(_, l)| l.trim_end().ends_with(','));
        match logical.last_mut() {
            Some((_, prev)) if continues => {
                prev.push(',');
                prev.push_str(line.trim());
            }
            _ => logical.push((n + 1, line.trim().to_string())),
        }
    }
    for (n, line) in logical {
        let mut frame = Vec::new();
        for tok in line.split([',', ' ', '\t']).filter(|t| !t.is_empty()) {
            frame.push(tok.parse::<u16>().map_err(|_| SampleParseError::BadToken { line: n, token: tok.to_string() })?);
        }
        file.frames.push(frame);
    }
    Ok(file)
}

pub fn format_fft(file: &FftFile) -> String {
    let mut out = format!("!{}\n", file.source);
    for f in &file.frames {
        let codes: Vec<String> = f.iter().map(|c| format!("{c:04}")).collect();
        out.push_str(&codes.join(","));
        out.push('\n');
    }
    out
}

/// Drops codes that occur only once across all frames.
pub fn drop_singletons(frames: &[Vec<u16>]) -> Vec<Vec<u16>> {
    let mut counts: HashMap<u16, usize> = HashMap::new();
    for f in frames {
        for &c in f {
            *counts.entry(c).or_insert(0) += 1;
        }
    }
    frames.iter().map(|f| f.iter().copied().filter(|c| counts[c] > 1).collect()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MatchReport {
    pub matches: usize,
    pub frames: usize,
}

impl MatchReport {
    pub fn percent(&self) -> usize {
        (self.matches * 100).checked_div(self.frames).unwrap_or(0)
    }
}

impl fmt::Display for MatchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} matches ({}%)", self.matches, self.percent())
    }
}

/// Learns patterns from the training frames, then counts the test frames
/// that trigger a recognition.
pub fn match_rate(train: &[Vec<u16>], test: &[Vec<u16>], params: &PatternParams) -> MatchReport {
    let samples: Vec<Sample> = train.iter().map(|f| f.iter().map(|&c| c as u32).collect()).collect();
    let learned = learn_patterns(&samples, params);
    let mut engine = Engine::new();
    bind_patterns(&mut engine, &learned);
    let mut matches = 0;
    for frame in test {
        let refs: Vec<PointRef> = frame.iter().filter_map(|c| engine.store.lookup(&c.to_string())).map(PointRef::base).collect();
        engine.set_ps(&refs);
        if recognize(&mut engine).is_some() {
            matches += 1;
        }
    }
    MatchReport { matches, frames: test.len() }
}

/// A synthetic speaker: formant bins that carry most of the energy.
#[derive(Clone, Debug, PartialEq)]
pub struct Voice {
    pub formants: Vec<u16>,
}

/// Frequency whose encoded frequency part is exactly `k`.
pub fn bin_frequency(k: u16) -> f64 {
    (5.0 + k as f64 / 10.0).exp()
}

/// Synthetic spectra for `voice`: strong formant bins with small jitter plus
/// a few weak random noise bins per frame.
pub fn synthetic_frames(voice: &Voice, frames: usize, seed: u64) -> Vec<Vec<(f64, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..frames)
        .map(|_| {
            let mut bins: Vec<(f64, f64)> = voice.formants.iter().map(|&k| (bin_frequency(k), rng.gen_range(95.0..105.0))).collect();
            for _ in 0..12 {
                let k = rng.gen_range(0..70u16);
                if !voice.formants.contains(&k) {
                    bins.push((bin_frequency(k), rng.gen_range(1.0..4.0)));
                }
            }
            bins
        })
        .collect()
}

/// Reads spectra text: one frame per line of whitespace separated
/// `freq:magnitude` bins, `#` starting a comment.
pub fn parse_spectra(text: &str) -> Result<Vec<Vec<(f64, f64)>>, SampleParseError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut frame = Vec::new();
        for tok in line.split_whitespace() {
            let bad = || SampleParseError::BadToken { line: n + 1, token: tok.to_string() };
            let (f, m) = tok.split_once(':').ok_or_else(bad)?;
            frame.push((f.parse().map_err(|_| bad())?, m.parse().map_err(|_| bad())?));
        }
        out.push(frame);
    }
    Ok(out)
}

pub fn encode_frames(spectra: &[Vec<(f64, f64)>]) -> Vec<Vec<u16>> {
    spectra.iter().filter_map(|s| encode_fft_frame(s).ok()).collect()
}
