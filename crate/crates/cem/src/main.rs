use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cem::corpus::{self, CaseResult};
use cem::interpreter::Session;
use cem::motivation::{self, PenConfig, SeekerConfig};
use cem::patterns::{self, FftFile, PatternParams};

#[derive(Parser)]
#[command(name = "cem", version, about = "Contextual evaluation model and the V5 point machine")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Interactive V5 prompt.
    Repl,
    /// Run a script and print the transcript.
    Run {
        script: PathBuf,
        /// Abort on the first syntax error.
        #[arg(long)]
        strict: bool,
    },
    /// Run every corpus script under a directory against its golden file.
    Golden {
        dir: PathBuf,
        /// Rewrite the golden files from the current transcripts.
        #[arg(long)]
        bless: bool,
    },
    /// Learn patterns from a file of samples, one sample per line.
    LearnPatterns {
        file: PathBuf,
        #[arg(long, default_value_t = 2)]
        min_points: usize,
        #[arg(long, default_value_t = 2)]
        min_occurs: usize,
    },
    /// Run a motivation simulation and write its trajectory as CSV.
    Sim {
        #[arg(value_enum)]
        world: World,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5000)]
        steps: usize,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Turn increment in degrees.
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        pen_size: Option<f64>,
        #[arg(long)]
        learning: bool,
    },
    /// Encode spectra (one frame per line of `freq:magnitude` pairs) as frame codes.
    FftEncode { spectra: PathBuf },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum World {
    Seeker,
    Pen,
}

fn repl() -> ExitCode {
    let mut session = Session::new();
    let stdin = io::stdin();
    let mut pending = String::new();
    loop {
        print!("{}", if pending.is_empty() { "V5> " } else { "...> " });
        let _ = io::stdout().flush();
        let mut line = String::new();
        match stdin.lock().read_line(&mut line) {
            Ok(0) | Err(_) => return ExitCode::SUCCESS,
            Ok(_) => {}
        }
        let line = line.trim_end();
        if let Some(body) = line.strip_suffix('\\') {
            pending.push_str(body);
            pending.push(' ');
            continue;
        }
        pending.push_str(line);
        let text = std::mem::take(&mut pending);
        let cmd = text.trim();
        if cmd == "quit" || cmd == "exit" {
            return ExitCode::SUCCESS;
        }
        match session.run_text(&text) {
            Ok(lines) => lines.iter().skip(1).for_each(|l| println!("{l}")),
            Err(e) => println!("? {e}"),
        }
    }
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn golden(dir: &Path, bless: bool) -> Result<bool, String> {
    if bless {
        let n = corpus::bless(dir).map_err(|e| e.to_string())?;
        println!("blessed {n} cases");
        return Ok(true);
    }
    let results = corpus::run_dir(dir).map_err(|e| e.to_string())?;
    let mut ok = true;
    for (name, r) in &results {
        match r {
            CaseResult::Pass => println!("PASS {name}"),
            CaseResult::Fail(d) => {
                ok = false;
                println!("FAIL {name}: {d}");
            }
            CaseResult::Missing => {
                ok = false;
                println!("MISSING {name}");
            }
            CaseResult::Error(e) => {
                ok = false;
                println!("ERROR {name}: {e}");
            }
        }
    }
    Ok(ok)
}

fn learn(file: &Path, min_points: usize, min_occurs: usize) -> Result<(), String> {
    let samples = patterns::parse_samples(&read(file)?).map_err(|e| e.to_string())?;
    let learned = patterns::learn_patterns(&samples, &PatternParams::new(min_points, min_occurs));
    for p in &learned.patterns {
        let key: Vec<String> = p.key.iter().map(u32::to_string).collect();
        println!("{{{}}} support {} tally {}", key.join(","), p.support, learned.tally_of(&p.key));
    }
    Ok(())
}

fn fft_encode(path: &Path) -> Result<(), String> {
    let spectra = patterns::parse_spectra(&read(path)?).map_err(|e| e.to_string())?;
    let mut frames = Vec::new();
    for (i, s) in spectra.iter().enumerate() {
        frames.push(patterns::encode_fft_frame(s).map_err(|e| format!("frame {}: {e}", i + 1))?);
    }
    let source = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    print!("{}", patterns::format_fft(&FftFile { source, frames }));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn sim(
    world: World,
    seed: u64,
    steps: usize,
    out: Option<PathBuf>,
    theta: Option<f64>,
    pen_size: Option<f64>,
    learning: bool,
) -> Result<(), String> {
    let rows = match world {
        World::Seeker => {
            let mut cfg = SeekerConfig::new(seed, steps);
            cfg.theta = theta.unwrap_or(cfg.theta);
            let run = motivation::run_seeker(&cfg);
            match run.reached {
                Some(n) => eprintln!("target ({:.2}, {:.2}) reached at step {n}", run.target.0, run.target.1),
                None => eprintln!("target ({:.2}, {:.2}) not reached", run.target.0, run.target.1),
            }
            run.rows
        }
        World::Pen => {
            let mut cfg = PenConfig::new(seed, steps, learning);
            cfg.theta = theta.unwrap_or(cfg.theta);
            cfg.size = pen_size.unwrap_or(cfg.size);
            let run = motivation::run_pen(&cfg);
            eprintln!("{} wall hits", run.hits);
            run.rows
        }
    };
    match out {
        Some(path) => {
            let mut f = std::fs::File::create(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            motivation::write_csv(&rows, &mut f).map_err(|e| e.to_string())
        }
        None => motivation::write_csv(&rows, &mut io::stdout().lock()).map_err(|e| e.to_string()),
    }
}

fn report(r: Result<(), String>) -> ExitCode {
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Cmd::Repl => repl(),
        Cmd::Run { script, strict } => {
            let mut session = Session::new();
            session.strict = strict;
            match session.run_script(&script) {
                Ok(lines) => {
                    for l in lines {
                        println!("{l}");
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
        Cmd::Golden { dir, bless } => match golden(&dir, bless) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::FAILURE,
            Err(e) => report(Err(e)),
        },
        Cmd::LearnPatterns { file, min_points, min_occurs } => report(learn(&file, min_points, min_occurs)),
        Cmd::Sim { world, seed, steps, out, theta, pen_size, learning } => report(sim(world, seed, steps, out, theta, pen_size, learning)),
        Cmd::FftEncode { spectra } => report(fft_encode(&spectra)),
    }
}
