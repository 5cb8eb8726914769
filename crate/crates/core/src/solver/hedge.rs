use super::{solve_exchange, Problem, SolveConfig};
use crate::error::{Error, Result};
use crate::linalg::solve_bordered;
use crate::measure::{Atom, AtomicMeasure};

/// A mass-one signed measure on a set together with its rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Hedge {
    pub measure: AtomicMeasure,
    pub rate: f64,
}

/// The signed measure of total mass one whose margin vanishes identically on
/// `set`: solves `sum_j w_j k(x_j, x_i) + c = psi(x_i)` on the set with
/// `sum_j w_j = 1`. The shift `c` is the rate of the returned measure.
pub fn hedge(problem: Problem<'_>, set: &[usize]) -> Result<Hedge> {
    if set.is_empty() {
        return Err(Error::InvalidInput("hedge of an empty set".into()));
    }
    let mut s = set.to_vec();
    s.sort_unstable();
    s.dedup();
    for &x in &s {
        problem.kernel.check_id(x)?;
    }
    let rhs: Vec<f64> = s.iter().map(|&x| problem.psi.at(x)).collect();
    let sol = solve_bordered(problem.kernel, &s, &rhs)?;
    let atoms = s.iter().zip(&sol.weights).map(|(&p, &w)| Atom { point: p, weight: w }).collect();
    Ok(Hedge { measure: AtomicMeasure::signed(atoms)?, rate: sol.shift })
}

/// Candidates outside `set` with positive margin under the topiary of `set`.
pub fn grow_set(problem: Problem<'_>, set: &[usize], candidates: &[usize], config: &SolveConfig) -> Result<Vec<usize>> {
    let top = solve_exchange(problem, set, config)?;
    let tol = config.margin_tol * problem.scale();
    let mut out: Vec<usize> = candidates
        .iter()
        .copied()
        .filter(|x| !set.contains(x))
        .filter(|&x| problem.psi.at(x) - top.measure.eval(problem.kernel, x) - top.rate > tol)
        .collect();
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Support of the negative part of the hedge of `set`.
pub fn prune_set(problem: Problem<'_>, set: &[usize], weight_tol: f64) -> Result<Vec<usize>> {
    let h = hedge(problem, set)?;
    Ok(h.measure.atoms().iter().filter(|a| a.weight < -weight_tol).map(|a| a.point).collect())
}
