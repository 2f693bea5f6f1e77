//! Golden transcripts for the corpus scripts: normalization, comparison and
//! the directory runner.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::interpreter::{ScriptError, Session};

/// Cases the corpus must contain, by script stem relative to the corpus root.
pub const REQUIRED_CASES: &[&str] = &[
    "horse",
    "book_residue",
    "book_pq",
    "spell",
    "spell_plural",
    "song",
    "maze",
    "turing",
    "ttl",
    "ltt_little_boy",
    "ltt_table",
    "cons_keychain",
    "cons_rock",
    "parse_google_question",
    "parse_going_to_google",
    "parse_tuxedo",
    "opcodes/opactx",
    "opcodes/opbind",
    "opcodes/opeval",
    "opcodes/opisatoas",
    "opcodes/oplasm",
    "opcodes/oplwm1",
    "opcodes/opnew",
    "opcodes/opnewt",
    "opcodes/opoutpq",
    "opcodes/oppsisas",
    "opcodes/opstate",
    "opcodes/opsurisa",
    "opcodes/optwval",
    "opcodes/opval",
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GoldenCase {
    pub name: String,
    pub script: PathBuf,
    pub golden: PathBuf,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Script(#[from] ScriptError),
}

/// First divergence between a golden and an actual transcript, 1-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GoldenDiff {
    pub line: usize,
    pub expected: Option<String>,
    pub actual: Option<String>,
}

impl fmt::Display for GoldenDiff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |s: &Option<String>| s.clone().unwrap_or_else(|| "<end of transcript>".into());
        write!(f, "line {}: expected `{}`, got `{}`", self.line, show(&self.expected), show(&self.actual))
    }
}

#[derive(Default)]
struct Renamer {
    points: HashMap<String, usize>,
    thoughts: HashMap<String, usize>,
    first_stamp: Option<i64>,
}

impl Renamer {
    fn point(&mut self, raw: &str) -> String {
        let n = self.points.len() + 1;
        let id = *self.points.entry(raw.trim_end_matches('?').to_string()).or_insert(n);
        format!("#P{id}{}", if raw.ends_with('?') { "?" } else { "" })
    }

    fn thought(&mut self, raw: &str) -> String {
        let n = self.thoughts.len() + 1;
        let id = *self.thoughts.entry(raw.to_string()).or_insert(n);
        format!("*T*(t{id})")
    }

    fn stamp(&mut self, n: i64) -> String {
        let first = *self.first_stamp.get_or_insert(n);
        format!("PQ(+{})", n - first)
    }
}

fn take_while_from(s: &str, start: usize, pred: impl Fn(char) -> bool) -> usize {
    s[start..].find(|c: char| !pred(c)).map_or(s.len(), |i| start + i)
}

fn normalize_line(line: &str, r: &mut Renamer) -> String {
    let mut out = String::with_capacity(line.len());
    let mut i = 0;
    while i < line.len() {
        let rest = &line[i..];
        if rest.starts_with('#') {
            let end = take_while_from(line, i + 1, |c| c.is_ascii_hexdigit());
            if end > i + 1 {
                let is_binding = line[end..].starts_with(':');
                if is_binding {
                    out.push_str(&line[i..end]);
                    i = end;
                } else {
                    let end = if line[end..].starts_with('?') { end + 1 } else { end };
                    out.push_str(&r.point(&line[i..end]));
                    i = end;
                }
                continue;
            }
        } else if let Some(body) = rest.strip_prefix("*T*(") {
            if let Some(close) = body.find(')') {
                out.push_str(&r.thought(&body[..close]));
                i += 4 + close + 1;
                continue;
            }
        } else if let Some(body) = rest.strip_prefix("PQ(") {
            if let Some(close) = body.find(')') {
                if let Ok(n) = body[..close].parse::<i64>() {
                    out.push_str(&r.stamp(n));
                    i += 3 + close + 1;
                    continue;
                }
            }
        }
        let c = rest.chars().next().expect("non-empty");
        out.push(c);
        i += c.len_utf8();
    }
    out
}

/// Renames point ids and thought numbers in order of first appearance and
/// rewrites print queue stamps relative to the first stamp. The renaming is a
/// bijection per transcript.
pub fn normalize(lines: &[String]) -> Vec<String> {
    let mut r = Renamer::default();
    lines.iter().map(|l| normalize_line(l.trim_end(), &mut r)).collect()
}

/// Compares two transcripts after normalization.
pub fn compare(expected: &[String], actual: &[String]) -> Result<(), GoldenDiff> {
    let (e, a) = (normalize(expected), normalize(actual));
    for i in 0..e.len().max(a.len()) {
        if e.get(i) != a.get(i) {
            return Err(GoldenDiff { line: i + 1, expected: e.get(i).cloned(), actual: a.get(i).cloned() });
        }
    }
    Ok(())
}

fn read(path: &Path) -> Result<String, CorpusError> {
    std::fs::read_to_string(path).map_err(|source| CorpusError::Io { path: path.display().to_string(), source })
}

/// Runs a script in a fresh session and returns its transcript.
pub fn transcript(script: &Path) -> Result<Vec<String>, CorpusError> {
    Ok(Session::new().run_script(script)?)
}

pub fn run_golden(case: &GoldenCase) -> Result<Result<(), GoldenDiff>, CorpusError> {
    let actual = transcript(&case.script)?;
    let expected: Vec<String> = read(&case.golden)?.lines().map(str::to_string).collect();
    Ok(compare(&expected, &actual))
}

/// Every `.v5` script under `root`, paired with its `.golden` file.
pub fn discover(root: &Path) -> Result<Vec<GoldenCase>, CorpusError> {
    let mut cases = Vec::new();
    let mut dirs = vec![root.to_path_buf()];
    while let Some(dir) = dirs.pop() {
        let entries = std::fs::read_dir(&dir).map_err(|source| CorpusError::Io { path: dir.display().to_string(), source })?;
        for entry in entries {
            let path = entry.map_err(|source| CorpusError::Io { path: dir.display().to_string(), source })?.path();
            if path.is_dir() {
                dirs.push(path);
            } else if path.extension().is_some_and(|e| e == "v5") {
                let rel = path.strip_prefix(root).unwrap_or(&path).with_extension("");
                let name = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
                cases.push(GoldenCase { name, golden: path.with_extension("golden"), script: path });
            }
        }
    }
    cases.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(cases)
}

/// Outcome of one case in a directory run.
#[derive(Debug)]
pub enum CaseResult {
    Pass,
    Fail(GoldenDiff),
    Missing,
    Error(String),
}

/// Runs every case under `root` and reports required cases that are absent.
pub fn run_dir(root: &Path) -> Result<Vec<(String, CaseResult)>, CorpusError> {
    let cases = discover(root)?;
    let mut out = Vec::new();
    for name in REQUIRED_CASES {
        if !cases.iter().any(|c| c.name == *name) {
            out.push((name.to_string(), CaseResult::Missing));
        }
    }
    for case in &cases {
        let result = if !case.golden.exists() {
            CaseResult::Missing
        } else {
            match run_golden(case) {
                Ok(Ok(())) => CaseResult::Pass,
                Ok(Err(d)) => CaseResult::Fail(d),
                Err(e) => CaseResult::Error(e.to_string()),
            }
        };
        out.push((case.name.clone(), result));
    }
    Ok(out)
}

/// Writes the current transcript of every case as its golden file.
pub fn bless(root: &Path) -> Result<usize, CorpusError> {
    let cases = discover(root)?;
    for case in &cases {
        let mut text = transcript(&case.script)?.join("\n");
        text.push('\n');
        std::fs::write(&case.golden, text).map_err(|source| CorpusError::Io { path: case.golden.display().to_string(), source })?;
    }
    Ok(cases.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lines(s: &[&str]) -> Vec<String> {
        s.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn ids_are_renamed_by_first_appearance() {
        let a = lines(&["bind: #32: [#2b4?.i] = Helen", "bind: #34: [*T*(2).i] = #2b4?", "x #270 #274"]);
        let b = lines(&["bind: #32: [#1c4?.i] = Helen", "bind: #34: [*T*(5).i] = #1c4?", "x #180 #184"]);
        assert_eq!(compare(&a, &b), Ok(()));
        assert_eq!(normalize(&a)[2], "x #P2 #P3");
    }

    #[test]
    fn renaming_is_a_bijection() {
        let a = lines(&["#10 #14"]);
        let b = lines(&["#10 #10"]);
        assert!(compare(&a, &b).is_err());
    }

    #[test]
    fn stamps_keep_their_differences() {
        let a = lines(&["PQ(2): Mar b1", "PQ(8): ee a1"]);
        let b = lines(&["PQ(7): Mar b1", "PQ(13): ee a1"]);
        let c = lines(&["PQ(7): Mar b1", "PQ(14): ee a1"]);
        assert_eq!(compare(&a, &b), Ok(()));
        assert_eq!(compare(&a, &c).unwrap_err().line, 2);
    }

    #[test]
    fn binding_numbers_are_kept() {
        assert!(compare(&lines(&["bind: #32: [a] = b"]), &lines(&["bind: #33: [a] = b"])).is_err());
    }
}
