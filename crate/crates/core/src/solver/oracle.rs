use super::{finish, Algorithm, Problem, TopiaryResult};
use crate::error::{Error, Result};
use crate::linalg::solve_bordered;
use crate::measure::{Atom, AtomicMeasure};
use crate::objective::MARGIN_TOL;

/// Largest candidate set [`oracle_solve`] will enumerate.
pub const ORACLE_CAP: usize = 12;

const NEG_WEIGHT_TOL: f64 = 1e-12;
const OUTSIDE_MARGIN_TOL: f64 = 1e-9;

/// Exhaustive ground truth: solves the hedge system on every non-empty
/// subset, keeps those with nonnegative weights and nonpositive margins
/// elsewhere, and returns the one with the largest objective.
pub fn oracle_solve(problem: Problem<'_>, candidates: &[usize]) -> Result<TopiaryResult> {
    let k = problem.kernel;
    let psi = problem.psi;
    let mut cands = candidates.to_vec();
    for &x in &cands {
        k.check_id(x)?;
    }
    cands.sort_unstable();
    cands.dedup();
    let n = cands.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty candidate set".into()));
    }
    if n > ORACLE_CAP {
        return Err(Error::TooLarge { size: n, cap: ORACLE_CAP });
    }
    let scale = problem.scale();
    let mut best: Option<(f64, Vec<(usize, f64)>)> = None;
    let mut examined = 0;
    for mask in 1u32..(1 << n) {
        let set: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| cands[i]).collect();
        let rhs: Vec<f64> = set.iter().map(|&x| psi.at(x)).collect();
        let Ok(sol) = solve_bordered(k, &set, &rhs) else { continue };
        examined += 1;
        if sol.weights.iter().any(|&w| w < -NEG_WEIGHT_TOL) {
            continue;
        }
        let eval = |x: usize| set.iter().zip(&sol.weights).map(|(&y, w)| w * k.eval(y, x)).sum::<f64>();
        let feasible = cands
            .iter()
            .filter(|x| !set.contains(x))
            .all(|&x| psi.at(x) - eval(x) - sol.shift <= OUTSIDE_MARGIN_TOL * scale);
        if !feasible {
            continue;
        }
        let lin: f64 = set.iter().zip(&sol.weights).map(|(&x, w)| w * psi.at(x)).sum();
        let norm_sq: f64 = set.iter().zip(&sol.weights).map(|(&x, w)| w * eval(x)).sum();
        let obj = lin - norm_sq / 2.0;
        if best.as_ref().is_none_or(|(b, _)| obj > *b) {
            best = Some((obj, set.iter().copied().zip(sol.weights.iter().copied()).collect()));
        }
    }
    let (_, atoms) = best.ok_or_else(|| Error::Invariant("no feasible support found".into()))?;
    let atoms: Vec<Atom> = atoms.into_iter().map(|(point, w)| Atom { point, weight: w.max(0.0) }).filter(|a| a.weight > 0.0).collect();
    let measure = AtomicMeasure::normalized(atoms)?;
    Ok(finish(problem, &cands, measure, examined, Algorithm::Oracle, MARGIN_TOL * scale, None))
}
