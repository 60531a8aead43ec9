//! Independent seeded searches run side by side; the first solution cancels
//! the rest.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::datalog::Problem;
use crate::error::Result;
use crate::exec::Exec;
use crate::optimizer::{SearchConfig, SearchOutcome, SearchStatus, Searcher, TraceRow};
use crate::viterbi::GroundProgram;

#[derive(Debug, Clone)]
pub struct PortfolioConfig {
    pub seeds: usize,
    /// Run `i` uses seed `base_seed + i`.
    pub base_seed: u64,
    /// Shared by every run; `rng_seed` is overwritten per run and `timeout`
    /// is a deadline for the whole portfolio.
    pub search: SearchConfig,
    /// Disables cross-run cancellation and omits wall-clock columns from the
    /// report so that it is byte-for-byte reproducible.
    pub reproducible: bool,
    pub keep_traces: bool,
    pub exec: Exec,
}

impl Default for PortfolioConfig {
    fn default() -> Self {
        Self {
            seeds: std::thread::available_parallelism().map_or(4, |n| n.get()),
            base_seed: 0,
            search: SearchConfig::default(),
            reproducible: false,
            keep_traces: false,
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub seed: u64,
    pub outcome: SearchOutcome,
    pub trace: Vec<TraceRow>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    /// One record per seed, in seed order.
    pub runs: Vec<RunRecord>,
    /// Index into `runs` of the reported solution.
    pub winner: Option<usize>,
    pub reproducible: bool,
    /// Wall time from launch until the winner finished.
    pub time_to_solution: Option<Duration>,
}

impl RunReport {
    pub fn solution(&self) -> Option<&BTreeSet<usize>> {
        self.winner.and_then(|i| self.runs[i].outcome.rules.as_ref())
    }

    pub fn is_solved(&self) -> bool {
        self.winner.is_some()
    }

    fn solved_times(&self) -> Vec<Duration> {
        let mut t: Vec<Duration> = self
            .runs
            .iter()
            .filter(|r| r.outcome.is_solved())
            .map(|r| r.outcome.wall_time)
            .collect();
        t.sort();
        t
    }

    /// Fastest solved run.
    pub fn best_time(&self) -> Option<Duration> {
        self.solved_times().first().copied()
    }

    /// Median over solved runs (lower median for even counts).
    pub fn median_time(&self) -> Option<Duration> {
        let t = self.solved_times();
        (!t.is_empty()).then(|| t[(t.len() - 1) / 2])
    }

    pub fn timeout_count(&self) -> usize {
        self.runs
            .iter()
            .filter(|r| r.outcome.status == SearchStatus::Timeout)
            .count()
    }

    /// `seed, status, iterations, samplings, wall_ms`, with a header row.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("seed\tstatus\titerations\tsamplings\twall_ms\n");
        for r in &self.runs {
            let wall = if self.reproducible {
                "-".to_owned()
            } else {
                r.outcome.wall_time.as_millis().to_string()
            };
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                r.seed, r.outcome.status, r.outcome.iterations, r.outcome.samplings, wall
            );
        }
        out
    }
}

/// Grounds the problem once and runs `config.seeds` searches over it.
pub fn run_portfolio(problem: &Problem, config: &PortfolioConfig) -> Result<RunReport> {
    config.search.validate()?;
    let launched = Instant::now();
    let deadline = config.search.timeout.map(|t| launched + t);
    let program = Arc::new(GroundProgram::build(&problem.rules, &problem.input, config.exec));

    let parallel_runs = config.exec.is_parallel() && config.seeds > 1;
    let inner_exec = if parallel_runs { Exec::Sequential } else { config.exec };

    let cancel = AtomicBool::new(false);
    const NONE: usize = usize::MAX;
    let first = AtomicUsize::new(NONE);

    let run_one = |i: usize| -> Result<RunRecord> {
        let seed = config.base_seed.wrapping_add(i as u64);
        let mut search = config.search.clone();
        search.rng_seed = seed;
        search.exec = inner_exec;
        search.timeout = deadline.map(|d| d.saturating_duration_since(Instant::now()));
        let searcher = Searcher::new(problem, Arc::clone(&program), search)?;
        let mut trace = Vec::new();
        let cancel_flag = (!config.reproducible).then_some(&cancel);
        let outcome = searcher.run(cancel_flag, |row| {
            if config.keep_traces {
                trace.push(*row);
            }
        })?;
        if outcome.is_solved() && !config.reproducible {
            let _ = first.compare_exchange(NONE, i, Ordering::SeqCst, Ordering::SeqCst);
            cancel.store(true, Ordering::Relaxed);
        }
        Ok(RunRecord {
            seed,
            outcome,
            trace,
        })
    };

    // One OS thread per seed rather than pool tasks: with fewer cores than
    // seeds a pool would run seeds back to back against a shared deadline.
    let runs = if parallel_runs {
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..config.seeds)
                .map(|i| {
                    let run_one = &run_one;
                    s.spawn(move || run_one(i))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("search thread panicked"))
                .collect::<Vec<_>>()
        })
    } else {
        (0..config.seeds).map(run_one).collect()
    };
    let runs: Vec<RunRecord> = runs.into_iter().collect::<Result<_>>()?;

    let winner = if config.reproducible {
        runs.iter()
            .enumerate()
            .filter(|(_, r)| r.outcome.is_solved())
            .min_by_key(|(i, r)| (r.outcome.iterations, *i))
            .map(|(i, _)| i)
    } else {
        Some(first.load(Ordering::SeqCst)).filter(|&i| i != NONE)
    };
    let time_to_solution = winner.map(|i| runs[i].outcome.wall_time);

    Ok(RunReport {
        runs,
        winner,
        reproducible: config.reproducible,
        time_to_solution,
    })
}
