//! Ground sets and reproducing-kernel pairings.
//!
//! A [`Kernel`] owns an ordered ground set of points together with the
//! materialized Gram matrix `G[i][j] = k(x_i, x_j)`. The Gram is computed
//! once, validated to be symmetric positive semidefinite, and then only read.
//!
//! Four pairings are built in:
//!
//! * explicit Gram: the caller supplies `G` directly;
//! * Euclidean: `k(x, y) = <x, y>` on real vectors;
//! * real Fock: `k(z, w) = Re exp(z * conj(w))` on the complex plane;
//! * real Hardy: `k(z, w) = Re (1 + z conj(w)) / (1 - z conj(w))` on the unit disk.

use log::warn;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;

/// Largest admissible `|z * conj(w)|` for the Fock exponential.
pub const FOCK_EXPONENT_LIMIT: f64 = 700.0;

/// Relative tolerance for treating two Gram rows as the same embedded point.
pub const DUPLICATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coords: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl Point {
    pub fn new(id: usize, coords: Vec<f64>) -> Self {
        Point { id, coords, label: None }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    /// Display name: the label if present, else the id.
    pub fn name(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.id.to_string())
    }

    pub fn complex(&self) -> Option<Complex64> {
        match self.coords.as_slice() {
            [a, b] => Some(Complex64::new(*a, *b)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Gram,
    Euclidean,
    Fock,
    Hardy,
}

impl KernelKind {
    pub fn is_analytic(self) -> bool {
        matches!(self, KernelKind::Fock | KernelKind::Hardy)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KernelOptions {
    /// PSD tolerance relative to the largest diagonal entry.
    pub psd_tol: f64,
    /// Explicit diagonal loading added to every `G[i][i]`. Zero by default;
    /// nothing is ever added silently.
    pub diagonal_loading: f64,
    /// Skip the eigenvalue check. Only for built-in kernels whose PSD-ness is
    /// structural and whose ground sets are too large for an eigen-decomposition.
    pub skip_psd_check: bool,
    pub exec: Exec,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions { psd_tol: 1e-9, diagonal_loading: 0.0, skip_psd_check: false, exec: Exec::default() }
    }
}

/// A ground set with its validated Gram matrix. Immutable once built.
#[derive(Debug, Clone)]
pub struct Kernel {
    kind: KernelKind,
    points: Vec<Point>,
    gram: Vec<f64>,
    max_diag: f64,
    min_eigenvalue: Option<f64>,
}

/// `Re` and `Im` of `exp(z * conj(w))`, with the exponent overflow guard.
pub fn fock_exp(z: Complex64, w: Complex64) -> Result<Complex64> {
    let p = z * w.conj();
    if p.norm() > FOCK_EXPONENT_LIMIT {
        return Err(Error::Domain(format!(
            "|z conj(w)| = {:.3} exceeds the Fock exponent limit {FOCK_EXPONENT_LIMIT}",
            p.norm()
        )));
    }
    let m = p.re.exp();
    Ok(Complex64::new(m * p.im.cos(), m * p.im.sin()))
}

/// `(1 + z conj(w)) / (1 - z conj(w))`, defined for `|z|, |w| < 1`.
pub fn hardy_cauchy(z: Complex64, w: Complex64) -> Result<Complex64> {
    for p in [z, w] {
        if p.norm() >= 1.0 {
            return Err(Error::Domain(format!("Hardy kernel needs |z| < 1, got |z| = {}", p.norm())));
        }
    }
    let p = z * w.conj();
    Ok((1.0 + p) / (1.0 - p))
}

fn eval_pair(kind: KernelKind, a: &[f64], b: &[f64]) -> Result<f64> {
    match kind {
        KernelKind::Gram => Err(Error::Domain("explicit Gram kernels have no off-set evaluation".into())),
        KernelKind::Euclidean => {
            if a.len() != b.len() {
                return Err(Error::Domain(format!("dimension mismatch {} vs {}", a.len(), b.len())));
            }
            Ok(a.iter().zip(b).map(|(x, y)| x * y).sum())
        }
        KernelKind::Fock | KernelKind::Hardy => {
            let (z, w) = (as_complex(a)?, as_complex(b)?);
            if kind == KernelKind::Fock {
                Ok(fock_exp(z, w)?.re)
            } else {
                Ok(hardy_cauchy(z, w)?.re)
            }
        }
    }
}

fn as_complex(c: &[f64]) -> Result<Complex64> {
    match c {
        [a, b] => Ok(Complex64::new(*a, *b)),
        _ => Err(Error::Domain(format!("analytic kernels need a coordinate pair, got {} values", c.len()))),
    }
}

impl Kernel {
    /// Kernel given by an explicit Gram matrix.
    pub fn from_gram(gram: Vec<Vec<f64>>, labels: Option<Vec<String>>, opts: KernelOptions) -> Result<Self> {
        let n = gram.len();
        if n == 0 {
            return Err(Error::InvalidInput("empty Gram matrix".into()));
        }
        if let Some((i, row)) = gram.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::InvalidInput(format!("Gram row {i} has {} entries, expected {n}", row.len())));
        }
        if gram.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("Gram matrix has non-finite entries".into()));
        }
        let scale = gram.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
        for i in 0..n {
            for j in 0..i {
                if (gram[i][j] - gram[j][i]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidInput(format!("Gram matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        let points = make_points(n, labels, |_| Vec::new())?;
        let mut flat = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                flat[i * n + j] = 0.5 * (gram[i][j] + gram[j][i]);
            }
        }
        Self::finish(KernelKind::Gram, points, flat, opts)
    }

    /// Kernel of a built-in variant over coordinate points.
    pub fn with_points(kind: KernelKind, points: Vec<Point>, opts: KernelOptions) -> Result<Self> {
        if kind == KernelKind::Gram {
            return Err(Error::InvalidInput("use Kernel::from_gram for explicit Gram kernels".into()));
        }
        if points.is_empty() {
            return Err(Error::InvalidInput("empty ground set".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if p.id != i {
                return Err(Error::InvalidInput(format!("point ids must be 0..n in order; position {i} has id {}", p.id)));
            }
            if kind.is_analytic() {
                let z = as_complex(&p.coords)?;
                if kind == KernelKind::Hardy && z.norm() >= 1.0 {
                    return Err(Error::Domain(format!("point {} has |z| = {} >= 1", p.id, z.norm())));
                }
            }
        }
        if kind == KernelKind::Euclidean {
            let d = points[0].coords.len();
            if points.iter().any(|p| p.coords.len() != d) {
                return Err(Error::InvalidInput("Euclidean points must share one dimension".into()));
            }
        }
        let n = points.len();
        let rows: Vec<Result<Vec<f64>>> = opts.exec.map_coarse(n, |i| {
            (0..n).map(|j| eval_pair(kind, &points[i].coords, &points[j].coords)).collect()
        });
        let mut flat = Vec::with_capacity(n * n);
        for r in rows {
            flat.extend(r?);
        }
        Self::finish(kind, points, flat, opts)
    }

    pub fn euclidean(coords: Vec<Vec<f64>>) -> Result<Self> {
        let pts = coords.into_iter().enumerate().map(|(i, c)| Point::new(i, c)).collect();
        Self::with_points(KernelKind::Euclidean, pts, KernelOptions::default())
    }

    pub fn fock(coords: &[[f64; 2]]) -> Result<Self> {
        let pts = coords.iter().enumerate().map(|(i, c)| Point::new(i, c.to_vec())).collect();
        Self::with_points(KernelKind::Fock, pts, KernelOptions::default())
    }

    pub fn hardy(coords: &[[f64; 2]]) -> Result<Self> {
        let pts = coords.iter().enumerate().map(|(i, c)| Point::new(i, c.to_vec())).collect();
        Self::with_points(KernelKind::Hardy, pts, KernelOptions::default())
    }

    fn finish(kind: KernelKind, points: Vec<Point>, mut gram: Vec<f64>, opts: KernelOptions) -> Result<Self> {
        let n = points.len();
        if opts.diagonal_loading != 0.0 {
            for i in 0..n {
                gram[i * n + i] += opts.diagonal_loading;
            }
        }
        let max_diag = (0..n).map(|i| gram[i * n + i]).fold(0.0_f64, f64::max);
        let min_eigenvalue = if opts.skip_psd_check {
            None
        } else {
            let m = DMatrix::from_row_slice(n, n, &gram);
            let ev = m.symmetric_eigenvalues();
            let min = ev.iter().copied().fold(f64::INFINITY, f64::min);
            let threshold = opts.psd_tol * max_diag;
            if min < -threshold {
                return Err(Error::NonPsd { eigenvalue: min, threshold });
            }
            Some(min)
        };
        let k = Kernel { kind, points, gram, max_diag, min_eigenvalue };
        let dups = k.duplicate_pairs();
        if !dups.is_empty() {
            warn!("{} duplicate point pair(s) in ground set, e.g. ids {:?}", dups.len(), dups[0]);
        }
        Ok(k)
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &Point {
        &self.points[i]
    }

    /// Checks that `id` names a ground-set point. Ids are positions.
    pub fn check_id(&self, id: usize) -> Result<usize> {
        if id < self.points.len() {
            Ok(id)
        } else {
            Err(Error::InvalidInput(format!("point id {id} out of range (ground set has {})", self.points.len())))
        }
    }

    /// `k(x_i, x_j)` for ground-set indices.
    #[inline]
    pub fn eval(&self, i: usize, j: usize) -> f64 {
        self.gram[i * self.points.len() + j]
    }

    /// Row `i` of the Gram matrix.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.points.len();
        &self.gram[i * n..(i + 1) * n]
    }

    #[inline]
    pub fn diag(&self, i: usize) -> f64 {
        self.eval(i, i)
    }

    /// `k(a, b)` at arbitrary coordinates in the kernel domain.
    pub fn eval_coords(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        eval_pair(self.kind, a, b)
    }

    /// `k(x_i, z)` for a ground point and an arbitrary domain point.
    pub fn eval_point_coords(&self, i: usize, z: &[f64]) -> Result<f64> {
        eval_pair(self.kind, &self.points[i].coords, z)
    }

    /// The Gram matrix as nested rows.
    pub fn gram(&self) -> Vec<Vec<f64>> {
        self.gram.chunks(self.points.len()).map(|r| r.to_vec()).collect()
    }

    pub fn max_diag(&self) -> f64 {
        self.max_diag
    }

    /// Scale used to make tolerances relative: the largest diagonal entry,
    /// or 1 when every point embeds to zero.
    pub fn scale(&self) -> f64 {
        if self.max_diag > 0.0 {
            self.max_diag
        } else {
            1.0
        }
    }

    /// Smallest Gram eigenvalue found during validation, if it was checked.
    pub fn min_eigenvalue(&self) -> Option<f64> {
        self.min_eigenvalue
    }

    /// `||k_x - k_y||`, clamped at zero against negative round-off.
    pub fn embed_distance(&self, i: usize, j: usize) -> f64 {
        self.embed_distance_sq(i, j).sqrt()
    }

    pub fn embed_distance_sq(&self, i: usize, j: usize) -> f64 {
        (self.eval(i, i) - 2.0 * self.eval(i, j) + self.eval(j, j)).max(0.0)
    }

    /// True when rows `i` and `j` of the Gram agree within the duplicate tolerance.
    pub fn same_embedding(&self, i: usize, j: usize) -> bool {
        let tol = DUPLICATE_TOL * self.scale();
        if self.embed_distance_sq(i, j) > tol {
            return false;
        }
        self.row(i).iter().zip(self.row(j)).all(|(a, b)| (a - b).abs() <= tol)
    }

    /// All pairs `(i, j)`, `i < j`, with identical embeddings.
    pub fn duplicate_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if self.same_embedding(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

}

fn make_points(n: usize, labels: Option<Vec<String>>, coords: impl Fn(usize) -> Vec<f64>) -> Result<Vec<Point>> {
    if let Some(l) = &labels {
        if l.len() != n {
            return Err(Error::InvalidInput(format!("{} labels for {n} points", l.len())));
        }
    }
    Ok((0..n)
        .map(|i| Point { id: i, coords: coords(i), label: labels.as_ref().map(|l| l[i].clone()) })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zigzag() -> Kernel {
        Kernel::euclidean(vec![vec![-3.0, 1.0], vec![0.0, 2.0], vec![2.0, 1.0]]).unwrap()
    }

    #[test]
    fn euclidean_zigzag_gram() {
        let k = zigzag();
        assert_eq!(k.gram(), vec![vec![10.0, 2.0, -5.0], vec![2.0, 4.0, 2.0], vec![-5.0, 2.0, 5.0]]);
    }

    #[test]
    fn fock_and_hardy_small_grams() {
        let f = Kernel::fock(&[[0.0, 0.0]]).unwrap();
        assert_eq!(f.gram(), vec![vec![1.0]]);
        let h = Kernel::hardy(&[[0.0, 0.0], [0.5, 0.0]]).unwrap();
        let g = h.gram();
        assert!((g[0][0] - 1.0).abs() < 1e-15 && (g[0][1] - 1.0).abs() < 1e-15);
        assert!((g[1][1] - 5.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn fock_eval_values() {
        let k = Kernel::fock(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!((k.eval(0, 0) - std::f64::consts::E).abs() < 1e-12);
        // Re exp(1 * conj(i)) = Re exp(-i) = cos 1
        assert!((k.eval(0, 1) - 1.0_f64.cos()).abs() < 1e-12);
        assert!((k.eval(0, 1) - 0.540302305868).abs() < 1e-9);
    }

    #[test]
    fn hardy_at_origin_is_one() {
        let k = Kernel::hardy(&[[0.0, 0.0]]).unwrap();
        for w in [[0.3, -0.2], [0.0, 0.99], [-0.7, 0.1]] {
            assert!((k.eval_point_coords(0, &w).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn hardy_rejects_outside_disk() {
        assert!(matches!(Kernel::hardy(&[[1.0, 0.0]]), Err(Error::Domain(_))));
        let k = Kernel::hardy(&[[0.1, 0.0]]).unwrap();
        assert!(matches!(k.eval_point_coords(0, &[0.0, 1.2]), Err(Error::Domain(_))));
    }

    #[test]
    fn fock_overflow_guard() {
        let z = Complex64::new(30.0, 0.0);
        assert!(matches!(fock_exp(z, z), Err(Error::Domain(_))));
        assert!(fock_exp(Complex64::new(20.0, 0.0), Complex64::new(20.0, 0.0)).is_ok());
    }

    #[test]
    fn embed_distances() {
        let k = zigzag();
        assert_eq!(k.embed_distance(1, 1), 0.0);
        assert!((k.embed_distance(1, 2) - 5.0_f64.sqrt()).abs() < 1e-15);
        let g = Kernel::from_gram(
            vec![vec![2.0, 2.0, 1.0], vec![2.0, 2.0, 1.0], vec![1.0, 1.0, 3.0]],
            None,
            KernelOptions::default(),
        )
        .unwrap();
        assert_eq!(g.embed_distance(0, 1), 0.0);
        assert_eq!(g.duplicate_pairs(), vec![(0, 1)]);
    }

    #[test]
    fn non_psd_reports_eigenvalue() {
        let err = Kernel::from_gram(vec![vec![1.0, 2.0], vec![2.0, 1.0]], None, KernelOptions::default()).unwrap_err();
        match err {
            Error::NonPsd { eigenvalue, .. } => assert!((eigenvalue + 1.0).abs() < 1e-12),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn diagonal_loading_is_explicit() {
        let opts = KernelOptions { diagonal_loading: 1.5, ..Default::default() };
        let k = Kernel::from_gram(vec![vec![1.0, 2.0], vec![2.0, 1.0]], None, opts).unwrap();
        assert_eq!(k.eval(0, 0), 2.5);
    }

    #[test]
    fn asymmetric_gram_rejected() {
        let r = Kernel::from_gram(vec![vec![1.0, 0.5], vec![0.4, 1.0]], None, KernelOptions::default());
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }
}
