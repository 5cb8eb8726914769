use super::state::SolverState;
use super::{finish, monotone_slack, Algorithm, Problem, SolveConfig, TopiaryResult, TraceStep};
use crate::error::{Error, Result};
use crate::measure::AtomicMeasure;

/// Prepared candidates plus the starting singleton.
pub(crate) fn seeded_state<'a>(
    problem: Problem<'a>,
    candidates: &[usize],
    config: &SolveConfig,
) -> Result<SolverState<'a>> {
    config.validate()?;
    let cands = problem.prepare_candidates(candidates)?;
    let seed = match config.seed_point {
        Some(s) => {
            if !candidates.contains(&s) {
                return Err(Error::InvalidInput(format!("seed point {s} is not a candidate")));
            }
            // a duplicate seed maps onto its representative
            *cands.iter().find(|&&c| c == s || problem.kernel.same_embedding(c, s)).expect("seed representative")
        }
        None => problem.best_singleton(&cands).expect("non-empty candidates"),
    };
    SolverState::new(problem, cands, &AtomicMeasure::dirac(seed))
}

pub(crate) fn check_monotone(before: f64, after: f64, scale: f64, what: &str) -> Result<()> {
    if after < before - monotone_slack(before, scale) {
        return Err(Error::Invariant(format!("{what}: objective decreased from {before} to {after}")));
    }
    Ok(())
}

fn record(trace: &mut Option<Vec<TraceStep>>, state: &SolverState<'_>, config: &SolveConfig, it: usize, added: Option<usize>, dropped: Vec<usize>) {
    if let Some(t) = trace.as_mut() {
        t.push(TraceStep {
            iteration: it,
            objective: state.objective(),
            score: state.score(config.exec),
            support_size: state.support_size(),
            added,
            dropped,
        });
    }
}

fn run(problem: Problem<'_>, candidates: &[usize], config: &SolveConfig, prune: bool) -> Result<TopiaryResult> {
    let algorithm = if prune { Algorithm::SecondGreedy } else { Algorithm::Greedy };
    let mut state = seeded_state(problem, candidates, config)?;
    let scale = state.scale();
    let tol = config.margin_tol * scale;
    let mut trace = config.trace.then(Vec::new);
    record(&mut trace, &state, config, 0, None, Vec::new());
    let mut it = 0;
    loop {
        let score = state.score(config.exec);
        if score <= tol {
            break;
        }
        if it >= config.max_iter {
            let partial = finish(problem, candidates, state.measure(), it, algorithm, tol, trace);
            return Err(Error::MaxIterExceeded { iterations: it, score, partial: Box::new(partial) });
        }
        let before = state.objective();
        let step = state.greedy_step(config)?;
        check_monotone(before, state.objective(), scale, "greedy step")?;
        let dropped = if prune {
            let mid = state.objective();
            let d = state.prune();
            check_monotone(mid, state.objective(), scale, "prune")?;
            d
        } else {
            Vec::new()
        };
        it += 1;
        record(&mut trace, &state, config, it, Some(step.point), dropped);
    }
    Ok(finish(problem, candidates, state.measure(), it, algorithm, tol, trace))
}

/// Greedy ascent from the best singleton (or `config.seed_point`) until the
/// score drops to `margin_tol` (relative to the kernel scale).
pub fn solve_greedy(problem: Problem<'_>, candidates: &[usize], config: &SolveConfig) -> Result<TopiaryResult> {
    run(problem, candidates, config, false)
}

/// Greedy ascent interleaved with pruning of disadvantageous atoms.
pub fn solve_second_greedy(problem: Problem<'_>, candidates: &[usize], config: &SolveConfig) -> Result<TopiaryResult> {
    run(problem, candidates, config, true)
}
