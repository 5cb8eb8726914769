//! Active-set exchange.
//!
//! The state keeps the margin constant on its support. To bring in a point
//! `x` with positive margin, mass is moved along `delta_x - nu`, where `nu`
//! is the mass-one signed measure on the support `S` with
//! `nu(z) = k(x, z) - c` for every `z` in `S`. Along that ray every embedded
//! value on `S` shifts by the same constant, so support margins stay equal
//! while the margin at `x` falls linearly in the step. The step stops at the
//! first of: an atom of `S` reaching zero (it is dropped and the loop
//! repeats on the smaller support), or the margin at `x` reaching zero.

use std::collections::HashSet;

use log::debug;

use super::greedy::{check_monotone, seeded_state};
use super::state::SolverState;
use super::{finish, Algorithm, Problem, SolveConfig, TopiaryResult, TraceStep};
use crate::error::{Error, Result};
use crate::linalg::solve_bordered;

const MIN_STEP: f64 = 1e-14;

/// What one call to [`exchange_add`] did.
#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeOutcome {
    pub added: usize,
    /// Atoms driven to zero, in drop order. None of them is re-added.
    pub dropped: Vec<usize>,
    /// Inner ray steps taken.
    pub steps: usize,
    pub gain: f64,
}

/// Smallest positive root of `(a - t)(d - t e)`, i.e. of the margin at `x`
/// along the ray, where `a` is the mass left on the base and `d`, `e` the
/// margin gap and squared direction length.
fn first_margin_root(a: f64, d: f64, e: f64) -> f64 {
    let mut r = f64::INFINITY;
    if a > 0.0 {
        r = a;
    }
    if e > 0.0 && d / e > 0.0 {
        r = r.min(d / e);
    }
    r
}

/// Moves mass onto candidate point `x` while keeping support margins equal.
///
/// Requires the support margins to vanish (within `margin_tol`) and the
/// margin at `x` to be positive. Fails with `NotPrunable` when the support's
/// bordered system is singular and with `NoProgress` when no positive step
/// exists.
pub fn exchange_add(state: &mut SolverState<'_>, x: usize, config: &SolveConfig) -> Result<ExchangeOutcome> {
    let problem = state.problem();
    let (k, psi) = (problem.kernel, problem.psi);
    let scale = state.scale();
    let tol = config.margin_tol * scale;
    let xl = state.local(x).ok_or_else(|| Error::InvalidInput(format!("point {x} is not a candidate")))?;
    if state.margin_local(xl) <= tol {
        return Err(Error::Precondition(format!("margin at {x} is {:e}, not positive", state.margin_local(xl))));
    }
    let spread = state.support_margin_spread();
    if spread > tol {
        return Err(Error::Precondition(format!("support margins not level (max |margin| {spread:e})")));
    }

    let start = state.objective();
    let mut dropped: Vec<usize> = Vec::new();
    let mut steps = 0;
    loop {
        let base: Vec<usize> = state.support_local().into_iter().filter(|&j| j != xl).collect();
        if base.is_empty() {
            break;
        }
        let ids: Vec<usize> = base.iter().map(|&j| state.point(j)).collect();
        let rhs: Vec<f64> = ids.iter().map(|&y| k.eval(x, y)).collect();
        let sol = solve_bordered(k, &ids, &rhs)?;
        let v = &sol.weights;

        let nu_x: f64 = ids.iter().zip(v).map(|(&y, vy)| vy * k.eval(y, x)).sum();
        let nu_sq: f64 = ids
            .iter()
            .zip(v)
            .map(|(&y, vy)| vy * ids.iter().zip(v).map(|(&z, vz)| vz * k.eval(y, z)).sum::<f64>())
            .sum();
        let dir_sq = (k.diag(x) - 2.0 * nu_x + nu_sq).max(0.0);

        let gap = |j: usize| psi.at(state.point(j)) - state.mu_local(j);
        let base_mass: f64 = base.iter().map(|&j| state.weight_local(j)).sum();
        let base_gap = base.iter().map(|&j| state.weight_local(j) * gap(j)).sum::<f64>() / base_mass;
        let d = gap(xl) - base_gap;
        if d <= tol {
            break;
        }

        let t_obj = if dir_sq > MIN_STEP * scale { d / dir_sq } else { f64::INFINITY };
        let t_zero = first_margin_root(base_mass, d, dir_sq);
        let t_pos = base
            .iter()
            .zip(v)
            .filter(|(_, &vy)| vy > 0.0)
            .map(|(&j, &vy)| state.weight_local(j) / vy)
            .fold(f64::INFINITY, f64::min);
        let t = t_pos.min(t_zero).min(t_obj);
        if !t.is_finite() || t <= MIN_STEP {
            return Err(Error::NoProgress { point: x, step: t });
        }

        let mut w = state.weights().to_vec();
        w[xl] += t;
        for (&j, &vy) in base.iter().zip(v) {
            w[j] -= t * vy;
        }
        let before = state.objective();
        let newly = state.set_weights(w, config.weight_tol);
        check_monotone(before, state.objective(), scale, "exchange step")?;
        if newly.contains(&x) {
            return Err(Error::Invariant(format!("exchange dropped the point {x} it was adding")));
        }
        dropped.extend(newly);
        steps += 1;
        if t < t_pos {
            break;
        }
        if steps > state.candidates().len() + 1 {
            return Err(Error::NoProgress { point: x, step: t });
        }
    }
    let gain = state.objective() - start;
    if gain <= 0.0 {
        return Err(Error::NoProgress { point: x, step: 0.0 });
    }
    Ok(ExchangeOutcome { added: x, dropped, steps, gain })
}

/// Moves the state to the maximizer over its own support: repeatedly steps
/// toward the hedge of the support, dropping atoms that hit zero.
pub(crate) fn level_support(state: &mut SolverState<'_>, config: &SolveConfig) -> Result<Vec<usize>> {
    let problem = state.problem();
    let scale = state.scale();
    let mut dropped = Vec::new();
    loop {
        let support = state.support_local();
        if support.len() <= 1 || state.support_margin_spread() <= 1e-3 * config.margin_tol * scale {
            return Ok(dropped);
        }
        let ids: Vec<usize> = support.iter().map(|&j| state.point(j)).collect();
        let rhs: Vec<f64> = ids.iter().map(|&y| problem.psi.at(y)).collect();
        let h = solve_bordered(problem.kernel, &ids, &rhs)?.weights;
        let lambda = support
            .iter()
            .zip(&h)
            .filter(|(_, &hy)| hy < 0.0)
            .map(|(&j, &hy)| state.weight_local(j) / (state.weight_local(j) - hy))
            .fold(1.0_f64, f64::min);
        let mut w = state.weights().to_vec();
        for (&j, &hy) in support.iter().zip(&h) {
            w[j] += lambda * (hy - w[j]);
        }
        let before = state.objective();
        let newly = state.set_weights(w, config.weight_tol);
        check_monotone(before, state.objective(), scale, "support leveling")?;
        let done = lambda >= 1.0;
        dropped.extend(newly);
        if done {
            return Ok(dropped);
        }
    }
}

/// Exchange solver: from the best singleton, repeatedly exchange in the
/// global margin maximizer until the score is within tolerance.
///
/// When the support's bordered system is singular, one greedy step is taken
/// instead and the support is re-leveled before exchanging resumes.
pub fn solve_exchange(problem: Problem<'_>, candidates: &[usize], config: &SolveConfig) -> Result<TopiaryResult> {
    let mut state = seeded_state(problem, candidates, config)?;
    let scale = state.scale();
    let tol = config.margin_tol * scale;
    let mut trace = config.trace.then(Vec::new);
    let push = |trace: &mut Option<Vec<TraceStep>>, s: &SolverState<'_>, it, added, dropped| {
        if let Some(t) = trace.as_mut() {
            t.push(TraceStep {
                iteration: it,
                objective: s.objective(),
                score: s.score(config.exec),
                support_size: s.support_size(),
                added,
                dropped,
            });
        }
    };
    push(&mut trace, &state, 0, None, Vec::new());
    let mut seen: HashSet<(Vec<usize>, i64)> = HashSet::new();
    let mut it = 0;
    loop {
        let best = state.best(config.exec);
        if best.margin <= tol {
            break;
        }
        if it >= config.max_iter {
            let partial = finish(problem, candidates, state.measure(), it, Algorithm::Exchange, tol, trace);
            return Err(Error::MaxIterExceeded { iterations: it, score: best.margin, partial: Box::new(partial) });
        }
        let x = state.point(best.point);
        let before = state.objective();
        let (added, dropped) = match exchange_add(&mut state, x, config) {
            Ok(out) => (out.added, out.dropped),
            Err(e @ (Error::NotPrunable { .. } | Error::NoProgress { .. } | Error::Precondition(_))) => {
                debug!("exchange at {x} failed ({e}); greedy fallback");
                let step = state.greedy_step(config)?;
                let dropped = match level_support(&mut state, config) {
                    Ok(d) => d,
                    Err(Error::NotPrunable { .. }) => Vec::new(),
                    Err(e) => return Err(e),
                };
                (step.point, dropped)
            }
            Err(e) => return Err(e),
        };
        check_monotone(before, state.objective(), scale, "exchange")?;
        it += 1;
        let key_obj = (state.objective() / (1e-12 * scale)).round() as i64;
        let mut support: Vec<usize> = state.measure().support();
        support.sort_unstable();
        if !seen.insert((support, key_obj)) {
            let partial = finish(problem, candidates, state.measure(), it, Algorithm::Exchange, tol, trace);
            return Err(Error::CycleDetected { iterations: it, partial: Box::new(partial) });
        }
        push(&mut trace, &state, it, Some(added), dropped);
    }
    Ok(finish(problem, candidates, state.measure(), it, Algorithm::Exchange, tol, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Kernel;
    use crate::measure::AtomicMeasure;
    use crate::objective::Psi;

    fn zigzag() -> (Kernel, Psi) {
        (Kernel::euclidean(vec![vec![-3.0, 1.0], vec![0.0, 2.0], vec![2.0, 1.0]]).unwrap(), Psi::zeros(3))
    }

    #[test]
    fn margin_root() {
        assert_eq!(first_margin_root(0.7, 2.0, 10.0), 0.2);
        assert_eq!(first_margin_root(0.1, 2.0, 10.0), 0.1);
        assert_eq!(first_margin_root(0.5, 2.0, 0.0), 0.5);
    }

    #[test]
    fn zigzag_two_exchanges() {
        let (k, psi) = zigzag();
        let p = Problem::new(&k, &psi).unwrap();
        let cfg = SolveConfig::default();
        let mut s = SolverState::new(p, vec![0, 1, 2], &AtomicMeasure::dirac(1)).unwrap();
        let out = exchange_add(&mut s, 2, &cfg).unwrap();
        assert!(out.dropped.is_empty());
        let m = s.measure();
        assert!((m.weight(1) - 0.6).abs() < 1e-12 && (m.weight(2) - 0.4).abs() < 1e-12);

        let out = exchange_add(&mut s, 0, &cfg).unwrap();
        assert_eq!(out.dropped, vec![1]);
        let m = s.measure();
        assert_eq!(m.support(), vec![0, 2]);
        assert!((m.weight(0) - 0.4).abs() < 1e-12 && (m.weight(2) - 0.6).abs() < 1e-12);
        assert!(crate::objective::margin(&k, &psi, &m, 0).abs() < 1e-12);

        assert!(matches!(exchange_add(&mut s, 1, &cfg), Err(Error::Precondition(_))));
    }

    #[test]
    fn solve_zigzag() {
        let (k, psi) = zigzag();
        let r = solve_exchange(Problem::new(&k, &psi).unwrap(), &[0, 1, 2], &SolveConfig::default()).unwrap();
        assert_eq!(r.support(), vec![0, 2]);
        assert!(r.iterations <= 3);
        assert!((r.objective + 0.5).abs() < 1e-12);
        assert_eq!(r.index, vec![0, 2]);
    }

    #[test]
    fn identity_uniform() {
        let n = 4;
        let k = Kernel::from_gram(
            (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect(),
            None,
            Default::default(),
        )
        .unwrap();
        let psi = Psi::zeros(n);
        let r = solve_exchange(Problem::new(&k, &psi).unwrap(), &[0, 1, 2, 3], &SolveConfig::default()).unwrap();
        for x in 0..n {
            assert!((r.measure.weight(x) - 0.25).abs() < 1e-12);
        }
        assert_eq!(r.index, vec![0, 1, 2, 3]);
    }
}
