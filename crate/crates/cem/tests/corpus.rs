use std::path::{Path, PathBuf};

use cem::corpus::{discover, run_dir, transcript, CaseResult, REQUIRED_CASES};
use cem::interpreter::{logical_lines, parse_command, Command};
use cem::motivation::{csv_string, run_seeker, SeekerConfig};

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

#[test]
fn every_case_matches_its_golden() {
    let results = run_dir(&corpus()).unwrap();
    let bad: Vec<String> = results.iter().filter(|(_, r)| !matches!(r, CaseResult::Pass)).map(|(n, r)| format!("{n}: {r:?}")).collect();
    assert!(bad.is_empty(), "{bad:#?}");
    assert_eq!(results.len(), REQUIRED_CASES.len());
}

#[test]
fn commands_round_trip_through_display() {
    let mut count = 0;
    for case in discover(&corpus()).unwrap() {
        let text = std::fs::read_to_string(&case.script).unwrap();
        for line in logical_lines(&text) {
            let cmd = parse_command(&line).unwrap_or_else(|e| panic!("{}: `{line}`: {e}", case.name));
            if cmd == Command::Empty {
                continue;
            }
            let shown = cmd.to_string();
            assert_eq!(parse_command(&shown).unwrap(), cmd, "{}: `{line}` shown as `{shown}`", case.name);
            count += 1;
        }
    }
    assert!(count > 300, "only {count} commands");
}

#[test]
fn transcripts_are_deterministic() {
    for case in discover(&corpus()).unwrap() {
        assert_eq!(transcript(&case.script).unwrap(), transcript(&case.script).unwrap(), "{}", case.name);
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

#[test]
fn committed_seeker_trajectory_is_pinned() {
    let run = run_seeker(&SeekerConfig::new(0, 5000));
    let last = run.rows.last().unwrap();
    assert!((run.target.0 - last.x).hypot(run.target.1 - last.y) < 1.0);
    assert_eq!(fnv1a(csv_string(&run.rows).as_bytes()), 10517840376732015573);
}
