//! Constructions of the topiary: the maximizer of the aesthetic objective
//! over probability measures on a finite candidate set.
//!
//! * [`solve_greedy`]: conditional-gradient ascent with exact line search.
//! * [`solve_second_greedy`]: the same, pruning disadvantageous atoms after
//!   every step.
//! * [`solve_exchange`]: active-set exchange that keeps margins equal on the
//!   support and trades mass toward the best new point.
//! * [`oracle_solve`]: exhaustive search over supports, for ground truth.
//!
//! Around them sit the algebraic tools: [`hedge`], [`grow_set`],
//! [`prune_set`], [`is_topiaric_index`] and [`construction_ordering`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::kernel::Kernel;
use crate::measure::{AtomicMeasure, WEIGHT_TOL};
use crate::objective::{Psi, MARGIN_TOL};

mod exchange;
mod greedy;
mod hedge;
mod index;
mod oracle;
mod state;

pub use exchange::{exchange_add, solve_exchange, ExchangeOutcome};
pub use greedy::{solve_greedy, solve_second_greedy};
pub use hedge::{grow_set, hedge, prune_set, Hedge};
pub use index::{construction_ordering, is_topiaric_index, DECONSTRUCT_CAP};
pub use oracle::{oracle_solve, ORACLE_CAP};
pub use state::{SolverState, StepInfo};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Greedy,
    SecondGreedy,
    Exchange,
    Oracle,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Greedy => "greedy",
            Algorithm::SecondGreedy => "second-greedy",
            Algorithm::Exchange => "exchange",
            Algorithm::Oracle => "oracle",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(Algorithm::Greedy),
            "second-greedy" => Ok(Algorithm::SecondGreedy),
            "exchange" => Ok(Algorithm::Exchange),
            "oracle" => Ok(Algorithm::Oracle),
            _ => Err(Error::InvalidInput(format!("unknown algorithm {s:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub algorithm: Algorithm,
    /// Convergence threshold on the score, relative to `Kernel::scale`.
    pub margin_tol: f64,
    pub weight_tol: f64,
    pub max_iter: usize,
    pub trace: bool,
    pub seed_point: Option<usize>,
    pub exec: Exec,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            algorithm: Algorithm::SecondGreedy,
            margin_tol: MARGIN_TOL,
            weight_tol: WEIGHT_TOL,
            max_iter: 100_000,
            trace: false,
            seed_point: None,
            exec: Exec::default(),
        }
    }
}

impl SolveConfig {
    pub fn with_algorithm(algorithm: Algorithm) -> Self {
        SolveConfig { algorithm, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.margin_tol > 0.0) || !(self.weight_tol > 0.0) {
            return Err(Error::InvalidInput("tolerances must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidInput("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub iteration: usize,
    pub objective: f64,
    pub score: f64,
    pub support_size: usize,
    pub added: Option<usize>,
    pub dropped: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopiaryResult {
    pub measure: AtomicMeasure,
    pub objective: f64,
    pub rate: f64,
    pub score: f64,
    /// Candidates with `|margin| <= tolerance`.
    pub index: Vec<usize>,
    pub iterations: usize,
    pub algorithm: Algorithm,
    /// Absolute margin tolerance the result was certified against.
    pub tolerance: f64,
    pub trace: Option<Vec<TraceStep>>,
}

impl TopiaryResult {
    /// Point ids with positive weight.
    pub fn support(&self) -> Vec<usize> {
        self.measure.support()
    }
}

/// A kernel paired with a materialized reward.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub kernel: &'a Kernel,
    pub psi: &'a Psi,
}

impl<'a> Problem<'a> {
    pub fn new(kernel: &'a Kernel, psi: &'a Psi) -> Result<Self> {
        if kernel.len() != psi.len() {
            return Err(Error::InvalidInput(format!("psi has {} values for {} points", psi.len(), kernel.len())));
        }
        Ok(Problem { kernel, psi })
    }

    /// Every ground-set point.
    pub fn all(&self) -> Vec<usize> {
        (0..self.kernel.len()).collect()
    }

    pub fn scale(&self) -> f64 {
        self.kernel.scale()
    }

    /// Objective of the single atom `delta_x`.
    pub fn singleton_objective(&self, x: usize) -> f64 {
        self.psi.at(x) - self.kernel.diag(x) / 2.0
    }

    /// Best singleton: argmax of `psi(x) - k(x,x)/2`, lowest id on ties.
    pub fn best_singleton(&self, candidates: &[usize]) -> Option<usize> {
        candidates.iter().copied().fold(None, |best: Option<usize>, x| match best {
            Some(b) if self.singleton_objective(b) > self.singleton_objective(x) => Some(b),
            Some(b) if self.singleton_objective(b) == self.singleton_objective(x) && b < x => Some(b),
            _ => Some(x),
        })
    }

    /// Validates, sorts and deduplicates a candidate list. Points sharing an
    /// embedding collapse onto the one with the highest psi (lowest id on ties).
    pub fn prepare_candidates(&self, candidates: &[usize]) -> Result<Vec<usize>> {
        if candidates.is_empty() {
            return Err(Error::InvalidInput("empty candidate set".into()));
        }
        let mut c = candidates.to_vec();
        for &x in &c {
            self.kernel.check_id(x)?;
        }
        c.sort_unstable();
        c.dedup();
        let mut keep: Vec<usize> = Vec::with_capacity(c.len());
        'outer: for &x in &c {
            for k in keep.iter_mut() {
                if self.kernel.same_embedding(*k, x) {
                    if self.psi.at(x) > self.psi.at(*k) {
                        *k = x;
                    }
                    continue 'outer;
                }
            }
            keep.push(x);
        }
        keep.sort_unstable();
        Ok(keep)
    }
}

/// Runs the algorithm selected in `config` over `candidates`.
pub fn solve(problem: Problem<'_>, candidates: &[usize], config: &SolveConfig) -> Result<TopiaryResult> {
    match config.algorithm {
        Algorithm::Greedy => solve_greedy(problem, candidates, config),
        Algorithm::SecondGreedy => solve_second_greedy(problem, candidates, config),
        Algorithm::Exchange => solve_exchange(problem, candidates, config),
        Algorithm::Oracle => oracle_solve(problem, candidates),
    }
}

/// Packages a measure as a result, certifying margins over `candidates`.
pub(crate) fn finish(
    problem: Problem<'_>,
    candidates: &[usize],
    measure: AtomicMeasure,
    iterations: usize,
    algorithm: Algorithm,
    tolerance: f64,
    trace: Option<Vec<TraceStep>>,
) -> TopiaryResult {
    let k = problem.kernel;
    let psi = problem.psi;
    let norm_sq = measure.norm_sq(k);
    let lin = psi.integrate(&measure);
    let rate = lin - norm_sq;
    let mut index = Vec::new();
    let mut score = f64::NEG_INFINITY;
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    for &x in &sorted {
        let m = psi.at(x) - measure.eval(k, x) - rate;
        score = score.max(m);
        if m.abs() <= tolerance {
            index.push(x);
        }
    }
    TopiaryResult { measure, objective: lin - norm_sq / 2.0, rate, score, index, iterations, algorithm, tolerance, trace }
}

/// Re-certifies a stored measure over `candidates` at the relative tolerance
/// `margin_tol`.
pub fn evaluate_measure(
    problem: Problem<'_>,
    candidates: &[usize],
    measure: AtomicMeasure,
    algorithm: Algorithm,
    margin_tol: f64,
) -> Result<TopiaryResult> {
    for a in measure.atoms() {
        problem.kernel.check_id(a.point)?;
    }
    let candidates = problem.prepare_candidates(candidates)?;
    Ok(finish(problem, &candidates, measure, 0, algorithm, margin_tol * problem.scale(), None))
}

/// Allowed objective decrease per step before monotonicity counts as broken.
pub(crate) fn monotone_slack(objective: f64, scale: f64) -> f64 {
    1e-12 * (scale + objective.abs())
}
