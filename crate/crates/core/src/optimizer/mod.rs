//! Hybrid search over rule weights.
//!
//! Newton root-finding on the L2 loss, with a simulated-annealing move every
//! `mcmc_period`-th iteration (or immediately when the gradient vanishes).
//! After every weight update the provenance of the labeled tuples is checked
//! for separation, with rules on the clamp floor treated as weight zero; a
//! separated positive rule set is re-verified with the Boolean evaluator
//! before it is reported as a solution.

mod ops;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use ops::{
    loss, loss_gradient, mcmc_accept, mcmc_propose, newton_step, propose_weight,
    separation_check, temperature, Separation, ZeroGradient,
};

use crate::datalog::{check_solution, Problem};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::viterbi::{support, EvaluationResult, GroundProgram, WeightVector, WEIGHT_EPSILON};

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub max_iters: u64,
    pub mcmc_period: u64,
    /// The `C` of the annealing schedule `T = 1 / (C ln(5 + iter))`.
    pub annealing_c: f64,
    pub init_low: f64,
    pub init_high: f64,
    /// Threshold for [`SearchOutcome::support`].
    pub support_threshold: f64,
    pub rng_seed: u64,
    pub timeout: Option<Duration>,
    pub exec: Exec,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            mcmc_period: 30,
            annealing_c: 1e-4,
            init_low: 0.25,
            init_high: 0.75,
            support_threshold: 0.0,
            rng_seed: 0,
            timeout: None,
            exec: Exec::default(),
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.init_low && self.init_low < self.init_high && self.init_high <= 1.0) {
            return Err(Error::Config(format!(
                "initial weight range [{}, {}] must satisfy 0 <= low < high <= 1",
                self.init_low, self.init_high
            )));
        }
        if self.mcmc_period == 0 {
            return Err(Error::Config("mcmc_period must be at least 1".into()));
        }
        if !(self.annealing_c > 0.0) {
            return Err(Error::Config("annealing C must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.support_threshold) {
            return Err(Error::Config("support threshold must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SearchStatus {
    Solved,
    Timeout,
    Exhausted,
    Cancelled,
}

impl fmt::Display for SearchStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SearchStatus::Solved => "solved",
            SearchStatus::Timeout => "timeout",
            SearchStatus::Exhausted => "exhausted",
            SearchStatus::Cancelled => "cancelled",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub status: SearchStatus,
    /// Indices of the recovered rules when solved.
    pub rules: Option<BTreeSet<usize>>,
    /// Weight updates performed, Newton and annealing alike.
    pub iterations: u64,
    /// Annealing moves among `iterations`.
    pub samplings: u64,
    pub wall_time: Duration,
    pub final_loss: f64,
    /// Rules whose unclamped final weight exceeds the support threshold.
    pub support: BTreeSet<usize>,
}

impl SearchOutcome {
    pub fn is_solved(&self) -> bool {
        self.status == SearchStatus::Solved
    }
}

#[derive(Debug, Clone)]
pub struct SearchState {
    pub iter: u64,
    /// Unclamped weights; evaluation uses their interior clamp.
    pub w: WeightVector,
    pub loss: f64,
    pub temperature: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    Newton,
    McmcAccept,
    McmcReject,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Event::Newton => "newton",
            Event::McmcAccept => "mcmc-accept",
            Event::McmcReject => "mcmc-reject",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: u64,
    pub loss: f64,
    pub event: Event,
    pub temperature: f64,
}

impl TraceRow {
    pub const HEADER: &'static str = "iter\tloss\tevent\ttemperature";

    pub fn to_tsv(&self) -> String {
        format!("{}\t{}\t{}\t{}", self.iter, self.loss, self.event, self.temperature)
    }
}

/// Rules pushed onto the clamp floor count as switched off when reading a
/// program off the weights. `None` when no weight is at the floor.
fn snap_floor(w: &WeightVector) -> Option<WeightVector> {
    let at_floor = |x: f64| x <= WEIGHT_EPSILON;
    if !w.as_slice().iter().any(|&x| at_floor(x)) {
        return None;
    }
    let snapped = w
        .interior()
        .as_slice()
        .iter()
        .map(|&x| if at_floor(x) { 0.0 } else { x })
        .collect();
    Some(WeightVector::from_vec_unchecked(snapped))
}

/// Grounds the problem and runs one search.
pub fn search(problem: &Problem, config: &SearchConfig) -> Result<SearchOutcome> {
    let program = Arc::new(GroundProgram::build(&problem.rules, &problem.input, config.exec));
    Searcher::new(problem, program, config.clone())?.run(None, |_| {})
}

/// One search instance over a shared, pre-grounded program.
pub struct Searcher<'a> {
    problem: &'a Problem,
    program: Arc<GroundProgram>,
    config: SearchConfig,
}

impl<'a> Searcher<'a> {
    pub fn new(problem: &'a Problem, program: Arc<GroundProgram>, config: SearchConfig) -> Result<Self> {
        config.validate()?;
        assert_eq!(program.rule_count(), problem.rules.len());
        Ok(Self {
            problem,
            program,
            config,
        })
    }

    fn evaluate(&self, w: &WeightVector) -> (EvaluationResult, f64) {
        let result = self.program.evaluate(&w.interior(), self.config.exec);
        let l = loss(&result, &self.problem.labels);
        (result, l)
    }

    /// Initial weights, uniform in `[init_low, init_high]`.
    pub fn initial_weights(&self, rng: &mut impl Rng) -> WeightVector {
        let (lo, hi) = (self.config.init_low, self.config.init_high);
        let w = (0..self.problem.rules.len())
            .map(|_| lo + (hi - lo) * rng.gen::<f64>())
            .collect();
        WeightVector::from_vec_unchecked(w)
    }

    /// Runs until solved, out of iterations, out of time, or `cancel` is set.
    /// `trace` sees one row per weight update.
    pub fn run(
        &self,
        cancel: Option<&AtomicBool>,
        mut trace: impl FnMut(&TraceRow),
    ) -> Result<SearchOutcome> {
        let start = Instant::now();
        let cfg = &self.config;
        let labels = &self.problem.labels;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);

        let w0 = self.initial_weights(&mut rng);
        let (result, loss0) = self.evaluate(&w0);
        let mut state = SearchState {
            iter: 0,
            w: w0,
            loss: loss0,
            temperature: temperature(0, cfg.annealing_c),
        };
        let mut result = result;
        let mut samplings = 0;
        let mut last_rejected: Option<BTreeSet<usize>> = None;

        let finish = |status, rules, state: &SearchState, samplings| SearchOutcome {
            status,
            rules,
            iterations: state.iter,
            samplings,
            wall_time: start.elapsed(),
            final_loss: state.loss,
            support: support(&state.w, cfg.support_threshold),
        };

        loop {
            if cancel.is_some_and(|c| c.load(Ordering::Relaxed)) {
                return Ok(finish(SearchStatus::Cancelled, None, &state, samplings));
            }
            if cfg.timeout.is_some_and(|t| start.elapsed() >= t) {
                return Ok(finish(SearchStatus::Timeout, None, &state, samplings));
            }
            if state.iter >= cfg.max_iters {
                return Ok(finish(SearchStatus::Exhausted, None, &state, samplings));
            }

            state.temperature = temperature(state.iter, cfg.annealing_c);
            let mcmc_due = (state.iter + 1) % cfg.mcmc_period == 0;
            let newton = if mcmc_due {
                None
            } else {
                let grad = loss_gradient(&result, labels);
                newton_step(&state.w.interior(), state.loss, &grad).ok()
            };

            let event = match newton {
                Some(w) => {
                    let (r, l) = self.evaluate(&w);
                    state.w = w;
                    state.loss = l;
                    result = r;
                    Event::Newton
                }
                None => {
                    samplings += 1;
                    let proposal = mcmc_propose(&state.w, &mut rng);
                    let (r, l) = self.evaluate(&proposal);
                    if mcmc_accept(state.loss, l, state.temperature, &mut rng) {
                        state.w = proposal;
                        state.loss = l;
                        result = r;
                        Event::McmcAccept
                    } else {
                        Event::McmcReject
                    }
                }
            };
            state.iter += 1;
            trace(&TraceRow {
                iter: state.iter,
                loss: state.loss,
                event,
                temperature: state.temperature,
            });

            if event == Event::McmcReject {
                continue;
            }
            let snapped = snap_floor(&state.w);
            let separation = match &snapped {
                Some(w) => separation_check(&self.program.evaluate(w, cfg.exec), labels),
                None => separation_check(&result, labels),
            };
            if let Separation::Separated(plus) = separation {
                if last_rejected.as_ref() == Some(&plus) {
                    continue;
                }
                let rules = self.problem.rules.subset(plus.iter().copied());
                if check_solution(rules, &self.problem.input, labels).is_accepted() {
                    return Ok(finish(SearchStatus::Solved, Some(plus), &state, samplings));
                }
                last_rejected = Some(plus);
            }
        }
    }
}
