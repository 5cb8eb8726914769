//! The aesthetic objective and the quantities derived from it.
//!
//! For a probability measure `mu` and a reward `psi` on the ground set:
//!
//! ```text
//! objective  O(mu)    = sum w_i psi(x_i) - ||mu||^2 / 2
//! rate       r(mu)    = sum w_i (psi(x_i) - mu(x_i))
//! margin     i_mu(x)  = psi(x) - mu(x) - r(mu)
//! score      S(mu)    = max over candidates of i_mu
//! beta       b(x)     = mu(x) / ||mu||^2
//! alpha      a(x)     = psi(x) - r - b(x) (sum w psi - r)
//! ```
//!
//! The margin is the directional derivative of `O` toward `delta_x`; an
//! optimal measure has zero margin on its support and nonpositive margin on
//! every candidate. Alpha equals the margin identically, since
//! `sum w psi - r = ||mu||^2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::kernel::Kernel;
use crate::measure::AtomicMeasure;

/// Norm below which a measure counts as riskless (beta undefined).
pub const ZERO_NORM_SQ: f64 = 1e-14;

/// Default convergence / index-membership threshold, relative to `Kernel::scale`.
pub const MARGIN_TOL: f64 = 1e-8;

/// Reward values, one per ground-set point.
#[derive(Debug, Clone, PartialEq)]
pub struct Psi(Vec<f64>);

impl Psi {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("psi[{i}] is not finite")));
        }
        Ok(Psi(values))
    }

    pub fn zeros(n: usize) -> Self {
        Psi(vec![0.0; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn at(&self, i: usize) -> f64 {
        self.0[i]
    }

    /// Integral of psi against `mu`.
    pub fn integrate(&self, mu: &AtomicMeasure) -> f64 {
        mu.atoms().iter().map(|a| a.weight * self.0[a.point]).sum()
    }
}

/// How psi is specified before being materialized on the ground set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum PsiSpec {
    Table { values: Vec<f64> },
    Zero,
    /// psi is the embedded function of a measure.
    Embedded { measure: AtomicMeasure },
    /// psi = k(alpha, .) for a domain point alpha.
    PointKernel { coords: Vec<f64> },
}

impl PsiSpec {
    pub fn materialize(&self, kernel: &Kernel) -> Result<Psi> {
        let n = kernel.len();
        match self {
            PsiSpec::Table { values } => {
                if values.len() != n {
                    return Err(Error::InvalidInput(format!("psi has {} values for {n} points", values.len())));
                }
                Psi::new(values.clone())
            }
            PsiSpec::Zero => Ok(Psi::zeros(n)),
            PsiSpec::Embedded { measure } => {
                measure.check_points(kernel)?;
                Psi::new((0..n).map(|x| measure.eval(kernel, x)).collect())
            }
            PsiSpec::PointKernel { coords } => {
                Psi::new((0..n).map(|x| kernel.eval_point_coords(x, coords)).collect::<Result<_>>()?)
            }
        }
    }

    /// `||psi||` in the kernel space, when psi is known to live there.
    pub fn embedded_norm(&self, kernel: &Kernel) -> Option<f64> {
        match self {
            PsiSpec::Zero => Some(0.0),
            PsiSpec::Embedded { measure } => Some(measure.norm_sq(kernel).sqrt()),
            PsiSpec::PointKernel { coords } => kernel.eval_coords(coords, coords).ok().map(|v| v.max(0.0).sqrt()),
            PsiSpec::Table { .. } => None,
        }
    }
}

pub fn aesthetic_objective(kernel: &Kernel, psi: &Psi, mu: &AtomicMeasure) -> f64 {
    psi.integrate(mu) - mu.norm_sq(kernel) / 2.0
}

pub fn topiaric_rate(kernel: &Kernel, psi: &Psi, mu: &AtomicMeasure) -> f64 {
    mu.atoms().iter().map(|a| a.weight * (psi.at(a.point) - mu.eval(kernel, a.point))).sum()
}

pub fn margin(kernel: &Kernel, psi: &Psi, mu: &AtomicMeasure, x: usize) -> f64 {
    psi.at(x) - mu.eval(kernel, x) - topiaric_rate(kernel, psi, mu)
}

/// Objective gain of the best step from `mu` toward `delta_x`, when the
/// optimal step is interior: `margin^2 / (2 ||k_x - mu||^2)`.
pub fn step_gain(margin: f64, dist_sq: f64) -> f64 {
    if margin <= 0.0 {
        0.0
    } else if dist_sq <= 0.0 {
        f64::INFINITY
    } else {
        margin * margin / (2.0 * dist_sq)
    }
}

/// A scanned candidate: its margin and `||k_x - mu||^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scanned {
    pub point: usize,
    pub margin: f64,
    pub dist_sq: f64,
}

/// Deterministic argmax of the margin: largest margin; among margins within
/// `tie_tol` of the largest, largest step gain; then lowest point id.
pub fn select_ascent(scanned: &[Scanned], tie_tol: f64) -> Option<Scanned> {
    let best = scanned.iter().map(|s| s.margin).fold(f64::NEG_INFINITY, f64::max);
    if !best.is_finite() {
        return None;
    }
    let mut pick: Option<(Scanned, f64)> = None;
    for s in scanned.iter().filter(|s| s.margin >= best - tie_tol) {
        let g = step_gain(s.margin, s.dist_sq);
        pick = match pick {
            None => Some((*s, g)),
            Some((p, pg)) => {
                if g > pg || (g == pg && s.point < p.point) {
                    Some((*s, g))
                } else {
                    Some((p, pg))
                }
            }
        };
    }
    pick.map(|(s, _)| s)
}

/// Highest margin over `candidates` and its maximizer (gain tie-break).
pub fn score(kernel: &Kernel, psi: &Psi, mu: &AtomicMeasure, candidates: &[usize]) -> Result<(f64, usize)> {
    if candidates.is_empty() {
        return Err(Error::InvalidInput("score over an empty candidate set".into()));
    }
    let rate = topiaric_rate(kernel, psi, mu);
    let norm_sq = mu.norm_sq(kernel);
    let scanned: Vec<Scanned> = candidates
        .iter()
        .map(|&x| {
            let mx = mu.eval(kernel, x);
            Scanned { point: x, margin: psi.at(x) - mx - rate, dist_sq: kernel.diag(x) - 2.0 * mx + norm_sq }
        })
        .collect();
    let s = select_ascent(&scanned, 1e-12 * kernel.scale()).expect("non-empty scan");
    Ok((s.margin, s.point))
}

pub fn beta(kernel: &Kernel, mu: &AtomicMeasure, x: usize) -> Result<f64> {
    let n = mu.norm_sq(kernel);
    if n <= ZERO_NORM_SQ {
        return Err(Error::ZeroPortfolio);
    }
    Ok(mu.eval(kernel, x) / n)
}

pub fn alpha(kernel: &Kernel, psi: &Psi, mu: &AtomicMeasure, x: usize) -> Result<f64> {
    let b = beta(kernel, mu, x)?;
    let r = topiaric_rate(kernel, psi, mu);
    Ok(psi.at(x) - r - b * (psi.integrate(mu) - r))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginRow {
    pub point: usize,
    pub label: Option<String>,
    pub psi: f64,
    pub mu: f64,
    pub margin: f64,
    pub beta: Option<f64>,
    pub alpha: Option<f64>,
}

/// Margins, betas and alphas of `mu` over a candidate set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginTable {
    pub objective: f64,
    pub rate: f64,
    pub score: f64,
    pub norm_sq: f64,
    pub rows: Vec<MarginRow>,
}

impl MarginTable {
    pub fn build(kernel: &Kernel, psi: &Psi, mu: &AtomicMeasure, candidates: &[usize]) -> Result<Self> {
        let rate = topiaric_rate(kernel, psi, mu);
        let norm_sq = mu.norm_sq(kernel);
        let lin = psi.integrate(mu);
        let riskless = norm_sq <= ZERO_NORM_SQ;
        let mut ids = candidates.to_vec();
        ids.sort_unstable();
        let rows: Vec<MarginRow> = ids
            .iter()
            .map(|&x| {
                let m = mu.eval(kernel, x);
                let beta = (!riskless).then(|| m / norm_sq);
                MarginRow {
                    point: x,
                    label: kernel.point(x).label.clone(),
                    psi: psi.at(x),
                    mu: m,
                    margin: psi.at(x) - m - rate,
                    beta,
                    alpha: beta.map(|b| psi.at(x) - rate - b * (lin - rate)),
                }
            })
            .collect();
        let score = score(kernel, psi, mu, &ids)?.0;
        Ok(MarginTable { objective: lin - norm_sq / 2.0, rate, score, norm_sq, rows })
    }

    /// Recomputes the rate from the rows on the support of `mu`.
    pub fn rate_from_rows(&self, mu: &AtomicMeasure) -> f64 {
        mu.atoms()
            .iter()
            .map(|a| {
                let r = self.rows.iter().find(|r| r.point == a.point).expect("support row");
                a.weight * (r.psi - r.mu)
            })
            .sum()
    }

    /// CSV with header `id,label,psi,mu,margin,beta,alpha`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("id,label,psi,mu,margin,beta,alpha\n");
        for r in &self.rows {
            let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_else(|| "undefined".into());
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.point,
                r.label.as_deref().unwrap_or(""),
                fmt_f64(r.psi),
                fmt_f64(r.mu),
                fmt_f64(r.margin),
                opt(r.beta),
                opt(r.alpha)
            ));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Atom;

    fn zigzag() -> Kernel {
        Kernel::euclidean(vec![vec![-3.0, 1.0], vec![0.0, 2.0], vec![2.0, 1.0]]).unwrap()
    }

    fn topiary() -> AtomicMeasure {
        AtomicMeasure::probability(vec![Atom { point: 0, weight: 0.4 }, Atom { point: 2, weight: 0.6 }]).unwrap()
    }

    fn identity(n: usize) -> Kernel {
        Kernel::from_gram(
            (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect(),
            None,
            Default::default(),
        )
        .unwrap()
    }

    #[test]
    fn objective_examples() {
        let k = zigzag();
        let psi = Psi::zeros(3);
        assert!((aesthetic_objective(&k, &psi, &topiary()) + 0.5).abs() < 1e-14);
        assert_eq!(aesthetic_objective(&k, &psi, &AtomicMeasure::dirac(1)), -2.0);
        let single = Kernel::from_gram(vec![vec![0.09]], None, Default::default()).unwrap();
        let p = Psi::new(vec![0.2]).unwrap();
        let d = AtomicMeasure::dirac(0);
        assert!((aesthetic_objective(&single, &p, &d) - (0.2 - 0.045)).abs() < 1e-15);
        assert!((topiaric_rate(&single, &p, &d) - (0.2 - 0.09)).abs() < 1e-15);
    }

    #[test]
    fn rate_and_margin_examples() {
        let k = zigzag();
        let psi = Psi::zeros(3);
        assert!((topiaric_rate(&k, &psi, &topiary()) + 1.0).abs() < 1e-14);
        assert_eq!(margin(&k, &psi, &AtomicMeasure::dirac(1), 2), 2.0);
        let t = topiary();
        assert!(margin(&k, &psi, &t, 0).abs() < 1e-14);
        assert!(margin(&k, &psi, &t, 2).abs() < 1e-14);
        assert!((margin(&k, &psi, &t, 1) + 1.0).abs() < 1e-14);
        let id = identity(4);
        let u = AtomicMeasure::uniform(&[0, 1, 2, 3]).unwrap();
        for x in 0..4 {
            assert!(margin(&id, &Psi::zeros(4), &u, x).abs() < 1e-15);
        }
    }

    #[test]
    fn score_gain_tie_break() {
        let k = zigzag();
        let (s, x) = score(&k, &Psi::zeros(3), &AtomicMeasure::dirac(1), &[0, 1, 2]).unwrap();
        assert_eq!(s, 2.0);
        assert_eq!(x, 2);
        let (s, _) = score(&k, &Psi::zeros(3), &topiary(), &[0, 1, 2]).unwrap();
        assert!(s <= 1e-12);
    }

    #[test]
    fn beta_alpha_examples() {
        let k = zigzag();
        let t = topiary();
        assert!((beta(&k, &t, 1).unwrap() - 2.0).abs() < 1e-13);
        // beta of the portfolio against itself
        let self_beta = t.atoms().iter().map(|a| a.weight * beta(&k, &t, a.point).unwrap()).sum::<f64>();
        assert!((self_beta - 1.0).abs() < 1e-13);
        let psi = Psi::zeros(3);
        for x in 0..3 {
            let a = alpha(&k, &psi, &t, x).unwrap();
            assert!((a - margin(&k, &psi, &t, x)).abs() < 1e-12);
        }
        let zero = Kernel::from_gram(vec![vec![1.0, -1.0], vec![-1.0, 1.0]], None, Default::default()).unwrap();
        let coins = AtomicMeasure::uniform(&[0, 1]).unwrap();
        assert!(matches!(beta(&zero, &coins, 0), Err(Error::ZeroPortfolio)));
    }

    #[test]
    fn materialize_forms() {
        let k = zigzag();
        let nu = AtomicMeasure::dirac(2);
        let p = PsiSpec::Embedded { measure: nu.clone() }.materialize(&k).unwrap();
        assert_eq!(p.values(), &[-5.0, 2.0, 5.0]);
        let q = PsiSpec::PointKernel { coords: vec![2.0, 1.0] }.materialize(&k).unwrap();
        assert_eq!(p, q);
        assert!(PsiSpec::Table { values: vec![1.0] }.materialize(&k).is_err());
        assert_eq!(PsiSpec::Embedded { measure: nu }.embedded_norm(&k), Some(5.0_f64.sqrt()));
        assert_eq!(PsiSpec::Table { values: vec![0.0; 3] }.embedded_norm(&k), None);
    }

    #[test]
    fn margin_table_csv() {
        let k = zigzag();
        let t = topiary();
        let table = MarginTable::build(&k, &Psi::zeros(3), &t, &[2, 0, 1]).unwrap();
        assert_eq!(table.rows.iter().map(|r| r.point).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert!((table.rate_from_rows(&t) - table.rate).abs() < 1e-10);
        let csv = table.to_csv();
        assert!(csv.starts_with("id,label,psi,mu,margin,beta,alpha\n"));
        assert_eq!(csv.lines().count(), 4);
    }
}
