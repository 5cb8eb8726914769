use log::warn;

use super::{Problem, SolveConfig};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::measure::{Atom, AtomicMeasure};
use crate::objective::{select_ascent, Scanned};

/// Full recomputation interval for the incremental caches.
const REFRESH_EVERY: usize = 256;
const DRIFT_TOL: f64 = 1e-9;

/// Mutable solver state over a fixed candidate list.
///
/// Weights are stored densely per candidate together with the cached
/// embedded values `mu(x_j)` for every candidate, the squared norm and the
/// linear term `sum w psi`. Convex steps update the caches in O(n).
#[derive(Debug, Clone)]
pub struct SolverState<'a> {
    problem: Problem<'a>,
    cands: Vec<usize>,
    weights: Vec<f64>,
    mu: Vec<f64>,
    norm_sq: f64,
    lin: f64,
    since_refresh: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    /// Point id moved toward.
    pub point: usize,
    pub margin: f64,
    pub t: f64,
    /// Predicted gain `margin^2 / (2 ||k_x - mu||^2)` (infinite when the
    /// direction has zero length).
    pub predicted_gain: f64,
    pub realized_gain: f64,
}

impl<'a> SolverState<'a> {
    /// State over `candidates` (already prepared) starting from `initial`.
    pub fn new(problem: Problem<'a>, candidates: Vec<usize>, initial: &AtomicMeasure) -> Result<Self> {
        let mut weights = vec![0.0; candidates.len()];
        for a in initial.atoms() {
            let j = candidates
                .binary_search(&a.point)
                .map_err(|_| Error::InvalidInput(format!("initial atom {} is not a candidate", a.point)))?;
            weights[j] = a.weight;
        }
        let mut s = SolverState {
            problem,
            mu: vec![0.0; candidates.len()],
            cands: candidates,
            weights,
            norm_sq: 0.0,
            lin: 0.0,
            since_refresh: 0,
        };
        s.recompute();
        Ok(s)
    }

    pub fn problem(&self) -> Problem<'a> {
        self.problem
    }

    pub fn candidates(&self) -> &[usize] {
        &self.cands
    }

    pub fn measure(&self) -> AtomicMeasure {
        let atoms: Vec<Atom> = self
            .cands
            .iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(&p, &w)| Atom { point: p, weight: w })
            .collect();
        AtomicMeasure::normalized(atoms).expect("solver weights form a probability measure")
    }

    pub fn objective(&self) -> f64 {
        self.lin - self.norm_sq / 2.0
    }

    pub fn rate(&self) -> f64 {
        self.lin - self.norm_sq
    }

    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    pub fn scale(&self) -> f64 {
        self.problem.scale()
    }

    pub(crate) fn local(&self, point: usize) -> Option<usize> {
        self.cands.binary_search(&point).ok()
    }

    pub(crate) fn weight_local(&self, j: usize) -> f64 {
        self.weights[j]
    }

    pub(crate) fn mu_local(&self, j: usize) -> f64 {
        self.mu[j]
    }

    pub(crate) fn point(&self, j: usize) -> usize {
        self.cands[j]
    }

    /// Local indices of atoms with positive weight.
    pub(crate) fn support_local(&self) -> Vec<usize> {
        (0..self.cands.len()).filter(|&j| self.weights[j] > 0.0).collect()
    }

    pub fn support_size(&self) -> usize {
        self.weights.iter().filter(|&&w| w > 0.0).count()
    }

    pub(crate) fn margin_local(&self, j: usize) -> f64 {
        self.problem.psi.at(self.cands[j]) - self.mu[j] - self.rate()
    }

    /// Margins and step lengths for every candidate (local order).
    pub(crate) fn scan(&self, exec: Exec) -> Vec<Scanned> {
        let rate = self.rate();
        let psi = self.problem.psi;
        let k = self.problem.kernel;
        exec.map(self.cands.len(), |j| {
            let x = self.cands[j];
            Scanned { point: j, margin: psi.at(x) - self.mu[j] - rate, dist_sq: k.diag(x) - 2.0 * self.mu[j] + self.norm_sq }
        })
    }

    /// The ascent candidate (local index in `point`) per the deterministic rule.
    pub(crate) fn best(&self, exec: Exec) -> Scanned {
        let scanned = self.scan(exec);
        select_ascent(&scanned, 1e-12 * self.scale()).expect("non-empty candidate set")
    }

    /// Current score: largest margin over the candidates.
    pub fn score(&self, exec: Exec) -> f64 {
        self.best(exec).margin
    }

    /// Largest `|margin|` over the current support.
    pub fn support_margin_spread(&self) -> f64 {
        self.support_local().into_iter().map(|j| self.margin_local(j).abs()).fold(0.0, f64::max)
    }

    /// Rebuilds every cache from the weights.
    pub(crate) fn recompute(&mut self) {
        let k = self.problem.kernel;
        let support: Vec<usize> = self.support_local();
        for (j, &x) in self.cands.iter().enumerate() {
            self.mu[j] = support.iter().map(|&i| self.weights[i] * k.eval(self.cands[i], x)).sum();
        }
        self.norm_sq = support.iter().map(|&i| self.weights[i] * self.mu[i]).sum::<f64>().max(0.0);
        self.lin = support.iter().map(|&i| self.weights[i] * self.problem.psi.at(self.cands[i])).sum();
        self.since_refresh = 0;
    }

    fn tick(&mut self) {
        self.since_refresh += 1;
        if self.since_refresh >= REFRESH_EVERY {
            let (mu, n, l) = (self.mu.clone(), self.norm_sq, self.lin);
            self.recompute();
            let drift = mu.iter().zip(&self.mu).map(|(a, b)| (a - b).abs()).fold((n - self.norm_sq).abs(), f64::max);
            let drift = drift.max((l - self.lin).abs());
            if drift > DRIFT_TOL * self.scale() {
                warn!("incremental cache drift {drift:e} exceeded guard; caches rebuilt");
            }
        }
    }

    /// `(1 - t) mu + t delta_{x_j}` with O(n) cache updates.
    pub(crate) fn convex_step(&mut self, j: usize, t: f64) {
        let k = self.problem.kernel;
        let x = self.cands[j];
        let s = 1.0 - t;
        let mj = self.mu[j];
        for w in &mut self.weights {
            *w *= s;
        }
        self.weights[j] += t;
        let row = k.row(x);
        for (m, &c) in self.mu.iter_mut().zip(&self.cands) {
            *m = s * *m + t * row[c];
        }
        self.norm_sq = (s * s * self.norm_sq + 2.0 * t * s * mj + t * t * k.diag(x)).max(0.0);
        self.lin = s * self.lin + t * self.problem.psi.at(x);
        self.tick();
    }

    /// Removes atom `j` and rescales the rest proportionally.
    pub(crate) fn remove_atom(&mut self, j: usize) {
        let k = self.problem.kernel;
        let w = self.weights[j];
        debug_assert!(w < 1.0);
        let x = self.cands[j];
        let s = 1.0 / (1.0 - w);
        let row = k.row(x);
        let mj = self.mu[j];
        for (m, &c) in self.mu.iter_mut().zip(&self.cands) {
            *m = (*m - w * row[c]) * s;
        }
        self.norm_sq = ((self.norm_sq - 2.0 * w * mj + w * w * k.diag(x)) * s * s).max(0.0);
        self.lin = (self.lin - w * self.problem.psi.at(x)) * s;
        self.weights[j] = 0.0;
        for v in &mut self.weights {
            *v *= s;
        }
        self.tick();
    }

    /// Objective after removing atom `j` and rescaling, without applying it.
    pub(crate) fn objective_without(&self, j: usize) -> f64 {
        let k = self.problem.kernel;
        let w = self.weights[j];
        let x = self.cands[j];
        let s = 1.0 / (1.0 - w);
        let n = (self.norm_sq - 2.0 * w * self.mu[j] + w * w * k.diag(x)) * s * s;
        let l = (self.lin - w * self.problem.psi.at(x)) * s;
        l - n.max(0.0) / 2.0
    }

    /// Replaces all weights (local order) and rebuilds caches. Weights at or
    /// below `drop_tol` are zeroed and the remainder renormalized.
    pub(crate) fn set_weights(&mut self, mut weights: Vec<f64>, drop_tol: f64) -> Vec<usize> {
        let mut dropped = Vec::new();
        for (j, w) in weights.iter_mut().enumerate() {
            if *w <= drop_tol {
                if self.weights[j] > 0.0 {
                    dropped.push(self.cands[j]);
                }
                *w = 0.0;
            }
        }
        let mass: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= mass;
        }
        self.weights = weights;
        self.recompute();
        dropped
    }

    pub(crate) fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// One conditional-gradient step toward the best candidate with exact
    /// line search. Refused when the score is already within tolerance.
    pub fn greedy_step(&mut self, config: &SolveConfig) -> Result<StepInfo> {
        let scale = self.scale();
        let best = self.best(config.exec);
        if best.margin <= config.margin_tol * scale {
            return Err(Error::Precondition(format!("score {:e} already within tolerance", best.margin)));
        }
        let j = best.point;
        let x = self.cands[j];
        let d = best.dist_sq;
        if d < -1e-9 * scale {
            return Err(Error::DegenerateDirection { point: x, dist_sq: d });
        }
        // a zero-length direction with positive margin is a pure linear gain: go all the way
        let t = if d <= 1e-14 * scale { 1.0 } else { (best.margin / d).clamp(0.0, 1.0) };
        let before = self.objective();
        self.convex_step(j, t);
        Ok(StepInfo {
            point: x,
            margin: best.margin,
            t,
            predicted_gain: crate::objective::step_gain(best.margin, d),
            realized_gain: self.objective() - before,
        })
    }

    /// Removes disadvantageous atoms one at a time: at each pass the atom whose
    /// removal (with proportional rescale) raises the objective the most,
    /// lowest id on ties, while any removal raises it. Returns removed ids.
    pub fn prune(&mut self) -> Vec<usize> {
        let mut removed = Vec::new();
        loop {
            let support = self.support_local();
            if support.len() < 2 {
                break;
            }
            let cur = self.objective();
            let eps = 1e-14 * (self.scale() + cur.abs());
            let mut best: Option<(usize, f64)> = None;
            for &j in &support {
                let gain = self.objective_without(j) - cur;
                if gain > eps && best.is_none_or(|(_, g)| gain > g) {
                    best = Some((j, gain));
                }
            }
            match best {
                Some((j, _)) => {
                    removed.push(self.cands[j]);
                    self.remove_atom(j);
                }
                None => break,
            }
        }
        removed
    }
}
