use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use difflog::datalog::parse::{format_rules, RULES_FILE};
use difflog::datalog::{parse_problem, parse_problem_with_rules, write_problem, Problem, Rule};
use difflog::optimizer::{SearchConfig, TraceRow};
use difflog::portfolio::{run_portfolio, PortfolioConfig, RunReport};
use difflog::rulegen::{emit_rules, generate, GenConfig, DEFAULT_CAP};
use difflog::testkit::{encode_3cnf, Cnf};
use difflog::viterbi::{dump_tsv, GroundProgram, WeightVector};
use difflog::Exec;

/// Exit status when no run finds a solution.
const UNSOLVED: u8 = 2;

#[derive(Parser)]
#[command(name = "difflog", version, about = "Learn Datalog programs from input/output examples")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for a subset of the candidate rules that fits the labels.
    Synth(SynthArgs),
    /// Evaluate the candidates at fixed weights and print tuple values.
    Eval(EvalArgs),
    /// Generate candidate rules from chain seeds and k edits.
    GenRules(GenArgs),
    /// Encode a DIMACS 3-CNF formula as a rule-selection problem.
    #[command(name = "encode-3cnf")]
    Encode3Cnf(EncodeArgs),
    /// Run synth on every problem listed in a manifest and print a table.
    Bench(BenchArgs),
}

#[derive(Args, Clone)]
struct SearchArgs {
    /// Number of independent searches.
    #[arg(long)]
    seeds: Option<usize>,
    /// Wall-clock budget in seconds for all searches together.
    #[arg(long, default_value_t = 3600.0)]
    timeout: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iters: u64,
    #[arg(long, default_value_t = 30)]
    mcmc_period: u64,
    /// Base seed; search i uses seed + i.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run every search to completion and omit wall times from report.tsv.
    #[arg(long)]
    reproducible: bool,
    /// Run searches one after another on the calling thread.
    #[arg(long)]
    sequential: bool,
}

impl SearchArgs {
    fn portfolio(&self, keep_traces: bool) -> Result<PortfolioConfig> {
        if !(self.timeout >= 0.0 && self.timeout.is_finite()) {
            bail!("--timeout must be a non-negative number of seconds");
        }
        let mut cfg = PortfolioConfig {
            base_seed: self.seed,
            reproducible: self.reproducible,
            keep_traces,
            exec: if self.sequential { Exec::Sequential } else { Exec::default() },
            search: SearchConfig {
                max_iters: self.max_iters,
                mcmc_period: self.mcmc_period,
                timeout: Some(Duration::from_secs_f64(self.timeout)),
                ..SearchConfig::default()
            },
            ..PortfolioConfig::default()
        };
        if let Some(n) = self.seeds {
            if n == 0 {
                bail!("--seeds must be at least 1");
            }
            cfg.seeds = n;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Problem directory.
    dir: PathBuf,
    #[command(flatten)]
    search: SearchArgs,
    /// Read candidate rules from this file instead of DIR/rules.dl.
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Where to write report.tsv and solution.dl (default: DIR).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write one trace-<seed>.tsv per search.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct EvalArgs {
    dir: PathBuf,
    /// Lines of `rule-id <tab> weight`; unlisted rules get 0. Without this
    /// file every weight is 1.
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    rules: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long)]
    max_body_len: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: usize,
    /// Only input relations may appear in rule bodies.
    #[arg(long)]
    no_recursion: bool,
    /// Output file (default: PROBLEM/rules.dl).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EncodeArgs {
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// File listing one problem directory per line, relative to the file.
    manifest: PathBuf,
    #[command(flatten)]
    search: SearchArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Eval(a) => eval(a).map(|_| ExitCode::SUCCESS),
        Command::GenRules(a) => gen_rules(a).map(|_| ExitCode::SUCCESS),
        Command::Encode3Cnf(a) => encode(a).map(|_| ExitCode::SUCCESS),
        Command::Bench(a) => bench(a).map(|_| ExitCode::SUCCESS),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load(dir: &Path, rules: Option<&Path>) -> Result<Problem> {
    let problem = parse_problem_with_rules(dir, rules)?;
    problem.validate()?;
    Ok(problem)
}

fn solution_text(problem: &Problem, report: &RunReport) -> Option<String> {
    let chosen = report.solution()?;
    let run = &report.runs[report.winner?];
    let rules: Vec<&Rule> = problem.rules.subset(chosen.iter().copied());
    let header = format!(
        "solution from seed {} after {} iterations ({} samplings)",
        run.seed, run.outcome.iterations, run.outcome.samplings
    );
    Some(format_rules(&problem.schema, &problem.symbols, &rules, &header))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn synth(args: SynthArgs) -> Result<ExitCode> {
    let problem = load(&args.dir, args.rules.as_deref())?;
    let config = args.search.portfolio(args.trace)?;
    let report = run_portfolio(&problem, &config)?;

    let out = args.out.unwrap_or_else(|| args.dir.clone());
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    write_file(&out.join("report.tsv"), &report.to_tsv())?;
    if args.trace {
        for run in &report.runs {
            let mut text = String::from(TraceRow::HEADER);
            text.push('\n');
            for row in &run.trace {
                text.push_str(&row.to_tsv());
                text.push('\n');
            }
            write_file(&out.join(format!("trace-{}.tsv", run.seed)), &text)?;
        }
    }

    let solution = out.join("solution.dl");
    match solution_text(&problem, &report) {
        Some(text) => {
            write_file(&solution, &text)?;
            print!("{text}");
            if !config.reproducible {
                if let Some(t) = report.time_to_solution {
                    eprintln!("solved in {:.3}s", t.as_secs_f64());
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        None => {
            if solution.exists() {
                fs::remove_file(&solution).with_context(|| format!("removing stale {}", solution.display()))?;
            }
            eprintln!(
                "no solution: {} of {} searches timed out",
                report.timeout_count(),
                report.runs.len()
            );
            Ok(ExitCode::from(UNSOLVED))
        }
    }
}

fn parse_weights(text: &str, file: &Path, problem: &Problem) -> Result<WeightVector> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [id, w] = fields[..] else {
            bail!("{}:{}: expected `rule-id weight`", file.display(), i + 1);
        };
        let w: f64 = w
            .parse()
            .with_context(|| format!("{}:{}: invalid weight `{w}`", file.display(), i + 1))?;
        pairs.push((id.to_owned(), w));
    }
    let named = pairs.iter().map(|(id, w)| (id.as_str(), *w));
    Ok(WeightVector::from_named(&problem.rules, named, 0.0)?)
}

fn eval(args: EvalArgs) -> Result<()> {
    let problem = load(&args.dir, args.rules.as_deref())?;
    let w = match &args.weights {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_weights(&text, path, &problem)?
        }
        None => WeightVector::uniform(problem.rules.len(), 1.0),
    };
    let exec = Exec::default();
    let program = std::sync::Arc::new(GroundProgram::build(&problem.rules, &problem.input, exec));
    let result = program.evaluate(&w, exec);
    print!("{}", dump_tsv(&result, &problem.rules, &problem.schema, &problem.symbols));
    Ok(())
}

fn gen_rules(args: GenArgs) -> Result<()> {
    let problem = parse_problem(&args.problem)?;
    let config = GenConfig {
        max_body_len: args.max_body_len,
        k: args.k,
        allow_recursion: !args.no_recursion,
        cap: args.cap,
        exec: Exec::default(),
    };
    let rules = generate(&problem.schema, &config)?;
    let out = args.out.unwrap_or_else(|| args.problem.join(RULES_FILE));
    emit_rules(&out, &problem.schema, &problem.symbols, &rules)?;
    eprintln!("wrote {} rules to {}", rules.len(), out.display());
    Ok(())
}

fn encode(args: EncodeArgs) -> Result<()> {
    let text = fs::read_to_string(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let cnf = Cnf::parse_dimacs(&text)?;
    let problem = encode_3cnf(&cnf)?;
    write_problem(&args.out, &problem)?;
    eprintln!(
        "wrote {} candidate rules and {} labels to {}",
        problem.rules.len(),
        problem.labels.len(),
        args.out.display()
    );
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let text = fs::read_to_string(&args.manifest).with_context(|| format!("reading {}", args.manifest.display()))?;
    let base = args.manifest.parent().unwrap_or(Path::new("."));
    let config = args.search.portfolio(false)?;

    let mut table = String::from("Benchmark\tRel\tExp\tCnd\tIn\tOut\tIter\tSmpl\tTime\n");
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let dir = base.join(line);
        let name = dir
            .file_name()
            .map_or_else(|| line.to_owned(), |n| n.to_string_lossy().into_owned());
        let row = bench_row(&dir, &config).unwrap_or_else(|e| {
            eprintln!("{name}: {e:#}");
            ["-", "-", "-", "-", "-", "-", "-", "failed"].map(String::from).to_vec()
        });
        let _ = writeln!(table, "{name}\t{}", row.join("\t"));
    }
    print!("{table}");
    Ok(())
}

fn bench_row(dir: &Path, config: &PortfolioConfig) -> Result<Vec<String>> {
    let problem = load(dir, None)?;
    let expected = dir.join("expected.dl");
    let exp = if expected.exists() {
        parse_problem_with_rules(dir, Some(&expected))?.rules.len().to_string()
    } else {
        "-".into()
    };
    let report = run_portfolio(&problem, config)?;
    let (iter, smpl, time) = match report.winner {
        Some(i) => {
            let o = &report.runs[i].outcome;
            let time = report.time_to_solution.unwrap_or(o.wall_time);
            (o.iterations.to_string(), o.samplings.to_string(), format!("{:.2}", time.as_secs_f64()))
        }
        None => ("-".into(), "-".into(), "timeout".into()),
    };
    Ok(vec![
        problem.schema.len().to_string(),
        exp,
        problem.rules.len().to_string(),
        problem.input.len().to_string(),
        problem.labels.len().to_string(),
        iter,
        smpl,
        time,
    ])
}
