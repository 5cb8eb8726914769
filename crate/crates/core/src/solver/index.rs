use super::{solve_exchange, Problem, SolveConfig};
use crate::error::{Error, Result};

/// Default cap on the size of a set handed to [`construction_ordering`].
pub const DECONSTRUCT_CAP: usize = 16;

fn sorted_set(problem: Problem<'_>, set: &[usize]) -> Result<Vec<usize>> {
    if set.is_empty() {
        return Err(Error::InvalidInput("empty point set".into()));
    }
    for &x in set {
        problem.kernel.check_id(x)?;
    }
    let mut s = set.to_vec();
    s.sort_unstable();
    s.dedup();
    Ok(s)
}

/// Margins of the topiary of `set` at each of its points.
fn own_margins(problem: Problem<'_>, set: &[usize], config: &SolveConfig) -> Result<Vec<(usize, f64)>> {
    let top = solve_exchange(problem, set, config)?;
    Ok(set
        .iter()
        .map(|&x| (x, problem.psi.at(x) - top.measure.eval(problem.kernel, x) - top.rate))
        .collect())
}

/// Whether the margin of the topiary of `set` vanishes on all of `set`.
pub fn is_topiaric_index(problem: Problem<'_>, set: &[usize], config: &SolveConfig) -> Result<bool> {
    let s = sorted_set(problem, set)?;
    let tol = config.margin_tol * problem.scale();
    Ok(own_margins(problem, &s, config)?.iter().all(|(_, m)| m.abs() <= tol))
}

/// An ordering of the topiaric index `set` in which every initial segment is
/// itself a topiaric index.
///
/// Points are peeled off one at a time, trying the highest id first, and the
/// removal order is returned reversed. `cap` bounds `|set|`.
pub fn construction_ordering(problem: Problem<'_>, set: &[usize], config: &SolveConfig, cap: usize) -> Result<Vec<usize>> {
    let mut rest = sorted_set(problem, set)?;
    if rest.len() > cap {
        return Err(Error::TooLarge { size: rest.len(), cap });
    }
    let tol = config.margin_tol * problem.scale();
    let margins = own_margins(problem, &rest, config)?;
    let worst = margins.iter().map(|(_, m)| m.abs()).fold(0.0, f64::max);
    if worst > tol {
        return Err(Error::NotAnIndex { max_abs_margin: worst });
    }
    let mut removed = Vec::with_capacity(rest.len());
    while rest.len() > 1 {
        let mut evidence = Vec::with_capacity(rest.len());
        let mut found = None;
        for pos in (0..rest.len()).rev() {
            let mut trial = rest.clone();
            let x = trial.remove(pos);
            let m = own_margins(problem, &trial, config)?;
            let w = m.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);
            if w <= tol {
                found = Some(pos);
                break;
            }
            evidence.push((x, w));
        }
        match found {
            Some(pos) => removed.push(rest.remove(pos)),
            None => return Err(Error::AccessibilityFailure { size: rest.len(), margins: evidence }),
        }
    }
    removed.push(rest[0]);
    removed.reverse();
    Ok(removed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Kernel;
    use crate::objective::Psi;

    fn zigzag() -> (Kernel, Psi) {
        (Kernel::euclidean(vec![vec![-3.0, 1.0], vec![0.0, 2.0], vec![2.0, 1.0]]).unwrap(), Psi::zeros(3))
    }

    #[test]
    fn index_examples() {
        let (k, psi) = zigzag();
        let p = Problem::new(&k, &psi).unwrap();
        let cfg = SolveConfig::default();
        for x in 0..3 {
            assert!(is_topiaric_index(p, &[x], &cfg).unwrap());
        }
        assert!(!is_topiaric_index(p, &[0, 1, 2], &cfg).unwrap());
        assert!(is_topiaric_index(p, &[0, 2], &cfg).unwrap());
    }

    #[test]
    fn orderings() {
        let (k, psi) = zigzag();
        let p = Problem::new(&k, &psi).unwrap();
        let cfg = SolveConfig::default();
        assert_eq!(construction_ordering(p, &[1], &cfg, DECONSTRUCT_CAP).unwrap(), vec![1]);
        assert_eq!(construction_ordering(p, &[2, 0], &cfg, DECONSTRUCT_CAP).unwrap(), vec![0, 2]);
        assert!(matches!(construction_ordering(p, &[0, 1, 2], &cfg, DECONSTRUCT_CAP), Err(Error::NotAnIndex { .. })));
        assert!(matches!(construction_ordering(p, &[0, 1, 2], &cfg, 2), Err(Error::TooLarge { .. })));

        let id = Kernel::from_gram(
            (0..3).map(|i| (0..3).map(|j| f64::from(u8::from(i == j))).collect()).collect(),
            None,
            Default::default(),
        )
        .unwrap();
        let z = Psi::zeros(3);
        let q = Problem::new(&id, &z).unwrap();
        assert_eq!(construction_ordering(q, &[0, 1, 2], &cfg, DECONSTRUCT_CAP).unwrap(), vec![0, 1, 2]);
    }
}
