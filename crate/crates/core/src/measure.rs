//! Finitely supported measures and their kernel embeddings.
//!
//! Atoms reference ground-set points by id and are kept sorted by id with no
//! repeats. A measure embeds into the kernel space as
//! `mu(x) = sum_i w_i k(x_i, x)`.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::Kernel;

/// Default weight below which an atom counts as absent.
pub const WEIGHT_TOL: f64 = 1e-10;

const MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub point: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    Probability,
    Signed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicMeasure {
    atoms: Vec<Atom>,
    kind: MeasureKind,
}

impl AtomicMeasure {
    /// A probability measure. Weights must be nonnegative and sum to one.
    pub fn probability(atoms: Vec<Atom>) -> Result<Self> {
        let m = Self::canonical(atoms, MeasureKind::Probability)?;
        if let Some(a) = m.atoms.iter().find(|a| a.weight < 0.0) {
            return Err(Error::InvalidInput(format!("negative weight {} at point {}", a.weight, a.point)));
        }
        let mass = m.total_mass();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidInput(format!("probability weights sum to {mass}")));
        }
        Ok(m)
    }

    /// Probability measure from unnormalized nonnegative weights.
    pub fn normalized(atoms: Vec<Atom>) -> Result<Self> {
        let mass: f64 = atoms.iter().map(|a| a.weight).sum();
        if mass <= 0.0 || !mass.is_finite() {
            return Err(Error::InvalidInput(format!("cannot normalize total mass {mass}")));
        }
        let scaled = atoms.into_iter().map(|a| Atom { point: a.point, weight: a.weight / mass }).collect();
        let mut m = Self::canonical(scaled, MeasureKind::Probability)?;
        m.renormalize();
        if m.atoms.iter().any(|a| a.weight < 0.0) {
            return Err(Error::InvalidInput("negative weight in probability measure".into()));
        }
        Ok(m)
    }

    /// A finite signed measure.
    pub fn signed(atoms: Vec<Atom>) -> Result<Self> {
        Self::canonical(atoms, MeasureKind::Signed)
    }

    pub fn dirac(point: usize) -> Self {
        AtomicMeasure { atoms: vec![Atom { point, weight: 1.0 }], kind: MeasureKind::Probability }
    }

    /// The zero measure.
    pub fn empty() -> Self {
        AtomicMeasure { atoms: Vec::new(), kind: MeasureKind::Signed }
    }

    /// Uniform probability measure on `points`.
    pub fn uniform(points: &[usize]) -> Result<Self> {
        let w = 1.0 / points.len() as f64;
        Self::normalized(points.iter().map(|&p| Atom { point: p, weight: w }).collect())
    }

    fn canonical(mut atoms: Vec<Atom>, kind: MeasureKind) -> Result<Self> {
        if atoms.iter().any(|a| !a.weight.is_finite()) {
            return Err(Error::InvalidInput("non-finite weight".into()));
        }
        atoms.sort_by_key(|a| a.point);
        if let Some(w) = atoms.windows(2).find(|w| w[0].point == w[1].point) {
            return Err(Error::InvalidInput(format!("two atoms share point {}", w[0].point)));
        }
        Ok(AtomicMeasure { atoms, kind })
    }

    fn renormalize(&mut self) {
        let mass = self.total_mass();
        if mass > 0.0 {
            for a in &mut self.atoms {
                a.weight /= mass;
            }
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn kind(&self) -> MeasureKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    pub fn weight(&self, point: usize) -> f64 {
        self.atoms.binary_search_by_key(&point, |a| a.point).map(|i| self.atoms[i].weight).unwrap_or(0.0)
    }

    /// Point ids carrying nonzero weight.
    pub fn support(&self) -> Vec<usize> {
        self.atoms.iter().filter(|a| a.weight != 0.0).map(|a| a.point).collect()
    }

    /// Checks every atom names a point of `kernel`.
    pub fn check_points(&self, kernel: &Kernel) -> Result<()> {
        for a in &self.atoms {
            kernel.check_id(a.point)?;
        }
        Ok(())
    }

    /// Embedded value `mu(x)` at ground point `x`.
    pub fn eval(&self, kernel: &Kernel, x: usize) -> f64 {
        self.atoms.iter().map(|a| a.weight * kernel.eval(a.point, x)).sum()
    }

    /// Embedded value at an arbitrary domain point.
    pub fn eval_coords(&self, kernel: &Kernel, z: &[f64]) -> Result<f64> {
        self.atoms.iter().try_fold(0.0, |s, a| Ok(s + a.weight * kernel.eval_point_coords(a.point, z)?))
    }

    /// `||mu||^2`, clamped at zero.
    pub fn norm_sq(&self, kernel: &Kernel) -> f64 {
        self.inner(kernel, self).max(0.0)
    }

    pub fn inner(&self, kernel: &Kernel, other: &AtomicMeasure) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.weight * other.eval(kernel, a.point))
            .sum()
    }

    /// `||self - other||` in the kernel space.
    pub fn distance(&self, kernel: &Kernel, other: &AtomicMeasure) -> f64 {
        self.combine(1.0, other, -1.0).norm_sq(kernel).sqrt()
    }

    /// `a * self + b * other` as a signed measure.
    pub fn combine(&self, a: f64, other: &AtomicMeasure, b: f64) -> AtomicMeasure {
        let mut atoms: Vec<Atom> = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.atoms.len() || j < other.atoms.len() {
            let (p, w) = match (self.atoms.get(i), other.atoms.get(j)) {
                (Some(x), Some(y)) if x.point == y.point => {
                    i += 1;
                    j += 1;
                    (x.point, a * x.weight + b * y.weight)
                }
                (Some(x), Some(y)) if x.point < y.point => {
                    i += 1;
                    (x.point, a * x.weight)
                }
                (Some(x), None) => {
                    i += 1;
                    (x.point, a * x.weight)
                }
                (_, Some(y)) => {
                    j += 1;
                    (y.point, b * y.weight)
                }
                (None, None) => unreachable!(),
            };
            atoms.push(Atom { point: p, weight: w });
        }
        AtomicMeasure { atoms, kind: MeasureKind::Signed }
    }

    /// `(1 - t) mu + t delta_x`, merging if `x` is already an atom.
    pub fn convex_combine(&self, x: usize, t: f64) -> Result<AtomicMeasure> {
        if !(0.0..=1.0).contains(&t) || t.is_nan() {
            return Err(Error::TOutOfRange(t));
        }
        if self.kind != MeasureKind::Probability {
            return Err(Error::Precondition("convex_combine needs a probability measure".into()));
        }
        let mut atoms: Vec<Atom> = self
            .atoms
            .iter()
            .map(|a| Atom { point: a.point, weight: (1.0 - t) * a.weight })
            .filter(|a| a.weight != 0.0)
            .collect();
        match atoms.binary_search_by_key(&x, |a| a.point) {
            Ok(i) => atoms[i].weight += t,
            Err(i) if t > 0.0 => atoms.insert(i, Atom { point: x, weight: t }),
            Err(_) => {}
        }
        let mut m = AtomicMeasure { atoms, kind: MeasureKind::Probability };
        m.renormalize();
        Ok(m)
    }

    /// Removes atoms lighter than `weight_tol` and rescales the rest to mass one.
    ///
    /// When every atom is below the tolerance the input is returned unchanged
    /// and the second value is `true`.
    pub fn drop_small_atoms(&self, weight_tol: f64) -> (AtomicMeasure, bool) {
        let kept: Vec<Atom> = self.atoms.iter().copied().filter(|a| a.weight >= weight_tol).collect();
        if kept.is_empty() {
            warn!("all {} atoms below weight tolerance {weight_tol:e}; measure left unchanged", self.len());
            return (self.clone(), true);
        }
        let mut m = AtomicMeasure { atoms: kept, kind: self.kind };
        m.renormalize();
        (m, false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zigzag() -> Kernel {
        Kernel::euclidean(vec![vec![-3.0, 1.0], vec![0.0, 2.0], vec![2.0, 1.0]]).unwrap()
    }

    fn at(p: usize, w: f64) -> Atom {
        Atom { point: p, weight: w }
    }

    #[test]
    fn eval_examples() {
        let k = zigzag();
        let d = AtomicMeasure::dirac(0);
        for y in 0..3 {
            assert_eq!(d.eval(&k, y), k.eval(0, y));
        }
        let mu = AtomicMeasure::probability(vec![at(1, 0.6), at(2, 0.4)]).unwrap();
        assert!((mu.eval(&k, 2) - 3.2).abs() < 1e-14);
        assert_eq!(AtomicMeasure::empty().eval(&k, 1), 0.0);
    }

    #[test]
    fn norm_examples() {
        let k = zigzag();
        assert_eq!(AtomicMeasure::dirac(1).norm_sq(&k), 4.0);
        let top = AtomicMeasure::probability(vec![at(0, 0.4), at(2, 0.6)]).unwrap();
        assert!((top.norm_sq(&k) - 1.0).abs() < 1e-14);
        let id = Kernel::from_gram(
            (0..5).map(|i| (0..5).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect(),
            None,
            Default::default(),
        )
        .unwrap();
        let u = AtomicMeasure::uniform(&[0, 1, 2, 3, 4]).unwrap();
        assert!((u.norm_sq(&id) - 0.2).abs() < 1e-15);
        let a = AtomicMeasure::uniform(&[0, 1]).unwrap();
        let b = AtomicMeasure::uniform(&[2, 3]).unwrap();
        assert_eq!(a.inner(&id, &b), 0.0);
        assert_eq!(AtomicMeasure::dirac(0).inner(&k, &AtomicMeasure::dirac(2)), -5.0);
    }

    #[test]
    fn convex_combine_examples() {
        let k = zigzag();
        let mu = AtomicMeasure::dirac(1);
        assert_eq!(mu.convex_combine(2, 0.0).unwrap(), mu);
        assert_eq!(mu.convex_combine(2, 1.0).unwrap(), AtomicMeasure::dirac(2));
        let bad1 = mu.convex_combine(2, 0.4).unwrap();
        assert!((bad1.weight(1) - 0.6).abs() < 1e-15);
        assert!((bad1.weight(2) - 0.4).abs() < 1e-15);
        // embedding (4/5, 8/5): values against the two coordinate-revealing points
        let x = 0.6 * 0.0 + 0.4 * 2.0;
        let y = 0.6 * 2.0 + 0.4 * 1.0;
        assert!((x - 0.8_f64).abs() < 1e-15 && (y - 1.6_f64).abs() < 1e-15);
        assert!((bad1.norm_sq(&k) - (0.64 + 2.56)).abs() < 1e-13);
        assert!(matches!(mu.convex_combine(2, 1.5), Err(Error::TOutOfRange(_))));
        assert!(matches!(mu.convex_combine(2, -0.1), Err(Error::TOutOfRange(_))));
    }

    #[test]
    fn drop_small_atoms_examples() {
        let u = AtomicMeasure::uniform(&[0, 1, 2]).unwrap();
        assert_eq!(u.drop_small_atoms(0.0).0, u);
        let d = AtomicMeasure::dirac(3);
        assert_eq!(d.drop_small_atoms(1e-10).0, d);
        let m = AtomicMeasure::signed(vec![at(0, 0.9999999999), at(1, 1e-10)]).unwrap();
        let m = AtomicMeasure { kind: MeasureKind::Probability, ..m };
        let (r, warned) = m.drop_small_atoms(1e-9);
        assert!(!warned);
        assert_eq!(r.atoms(), &[at(0, 1.0)]);
        let tiny = AtomicMeasure::signed(vec![at(0, 1e-12)]).unwrap();
        let (r, warned) = tiny.drop_small_atoms(1e-9);
        assert!(warned);
        assert_eq!(r, tiny);
    }

    #[test]
    fn probability_validation() {
        assert!(AtomicMeasure::probability(vec![at(0, 0.5), at(1, 0.4)]).is_err());
        assert!(AtomicMeasure::probability(vec![at(0, 1.5), at(1, -0.5)]).is_err());
        assert!(AtomicMeasure::probability(vec![at(0, 0.5), at(0, 0.5)]).is_err());
    }

    #[test]
    fn combine_merges_supports() {
        let a = AtomicMeasure::probability(vec![at(0, 0.5), at(2, 0.5)]).unwrap();
        let b = AtomicMeasure::probability(vec![at(1, 0.5), at(2, 0.5)]).unwrap();
        let c = a.combine(2.0, &b, -1.0);
        assert_eq!(c.atoms(), &[at(0, 1.0), at(1, -0.5), at(2, 0.5)]);
        assert!((c.total_mass() - 1.0).abs() < 1e-15);
    }
}
