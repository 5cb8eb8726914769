//! Bordered (augmented) linear systems
//!
//! ```text
//! [ G  1 ] [w]   [b]
//! [ 1' 0 ] [c] = [1]
//! ```
//!
//! which appear in every hedge-type solve: weights `w` of total mass one whose
//! embedding, shifted by the constant `c`, matches `b` on the set.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::Kernel;

/// Pivot-to-max-entry ratio below which a system counts as singular.
pub const SINGULAR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Bordered {
    pub weights: Vec<f64>,
    pub shift: f64,
}

/// Solves the bordered system for the sub-Gram of `kernel` on `set`.
pub fn solve_bordered(kernel: &Kernel, set: &[usize], rhs: &[f64]) -> Result<Bordered> {
    let m = set.len();
    debug_assert_eq!(rhs.len(), m);
    let mut a = DMatrix::<f64>::zeros(m + 1, m + 1);
    for (r, &i) in set.iter().enumerate() {
        for (c, &j) in set.iter().enumerate() {
            a[(r, c)] = kernel.eval(i, j);
        }
        a[(r, m)] = 1.0;
        a[(m, r)] = 1.0;
    }
    let b = DVector::from_iterator(m + 1, rhs.iter().copied().chain(std::iter::once(1.0)));
    let x = lu_solve(a, b)?;
    Ok(Bordered { weights: x.as_slice()[..m].to_vec(), shift: x[m] })
}

/// Gaussian elimination with partial pivoting; refuses near-singular systems.
fn lu_solve(mut a: DMatrix<f64>, mut b: DVector<f64>) -> Result<DVector<f64>> {
    let n = a.nrows();
    let max_abs = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if max_abs == 0.0 {
        return Err(Error::NotPrunable { pivot_ratio: 0.0 });
    }
    let mut min_ratio = f64::INFINITY;
    for k in 0..n {
        let (p, pv) = (k..n).map(|r| (r, a[(r, k)].abs())).fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        min_ratio = min_ratio.min(pv / max_abs);
        if pv / max_abs < SINGULAR_TOL {
            return Err(Error::NotPrunable { pivot_ratio: pv / max_abs });
        }
        if p != k {
            a.swap_rows(p, k);
            b.swap_rows(p, k);
        }
        let piv = a[(k, k)];
        for r in k + 1..n {
            let f = a[(r, k)] / piv;
            if f == 0.0 {
                continue;
            }
            for c in k..n {
                a[(r, c)] -= f * a[(k, c)];
            }
            b[r] -= f * b[k];
        }
    }
    let mut x = DVector::zeros(n);
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|c| a[(k, c)] * x[c]).sum();
        x[k] = (b[k] - s) / a[(k, k)];
    }
    log::trace!("bordered solve n={n} min pivot ratio {min_ratio:e}");
    Ok(x)
}
