//! Long-only portfolio selection: means become psi, the covariance becomes
//! the Gram matrix, and the topiary is the optimal allocation.

use std::io::Read;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{ResultFile, FORMAT_VERSION};
use crate::kernel::{Kernel, KernelOptions};
use crate::measure::AtomicMeasure;
use crate::objective::Psi;
use crate::solver::{solve, Problem, SolveConfig, TopiaryResult};

pub const RISK_FREE_LABEL: &str = "risk-free";

/// Slack on the go-all-in trigger so that the boundary case counts.
const TRIGGER_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioSpec {
    pub assets: Vec<String>,
    pub mean: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    #[serde(default)]
    pub risk_free_rate: Option<f64>,
    #[serde(default)]
    pub mean_shrink: f64,
    #[serde(default)]
    pub var_inflate: f64,
    #[serde(default)]
    pub annualize_factor: Option<u32>,
    #[serde(default)]
    pub reference: Option<AtomicMeasure>,
}

impl PortfolioSpec {
    pub fn new(assets: Vec<String>, mean: Vec<f64>, covariance: Vec<Vec<f64>>) -> Self {
        PortfolioSpec {
            assets,
            mean,
            covariance,
            risk_free_rate: None,
            mean_shrink: 0.0,
            var_inflate: 0.0,
            annualize_factor: None,
            reference: None,
        }
    }

    pub fn from_returns(table: &ReturnsTable) -> Result<Self> {
        let (mean, covariance) = ingest_returns(table)?;
        Ok(PortfolioSpec::new(table.labels.clone(), mean, covariance))
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.assets.len();
        if n == 0 {
            return Err(Error::InvalidInput("portfolio has no assets".into()));
        }
        if self.mean.len() != n || self.covariance.len() != n || self.covariance.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput(format!("portfolio dimensions disagree with {n} assets")));
        }
        if !(0.0..=1.0).contains(&self.mean_shrink) {
            return Err(Error::InvalidInput(format!("mean_shrink {} outside [0, 1]", self.mean_shrink)));
        }
        if !(self.var_inflate >= 0.0) {
            return Err(Error::InvalidInput(format!("var_inflate {} is negative", self.var_inflate)));
        }
        if self.annualize_factor == Some(0) {
            return Err(Error::InvalidInput("annualize factor must be positive".into()));
        }
        Ok(())
    }

    /// Applies the annualization factor to both moments and clears it.
    pub fn annualized(&self) -> Self {
        let mut s = self.clone();
        if let Some(f) = s.annualize_factor.take() {
            let f = f64::from(f);
            s.mean.iter_mut().for_each(|m| *m *= f);
            s.covariance.iter_mut().flatten().for_each(|c| *c *= f);
        }
        s
    }

    fn variance(&self, i: usize) -> f64 {
        self.covariance[i][i]
    }
}

/// Per-period simple returns, one column per asset.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnsTable {
    pub labels: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl ReturnsTable {
    /// Parses a CSV with a header row of labels. Row numbers in errors are
    /// file line numbers; columns are 1-based.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(reader);
        let labels: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            if rec.len() != labels.len() {
                return Err(Error::RaggedRow { row: line, found: rec.len(), expected: labels.len() });
            }
            let row = rec
                .iter()
                .enumerate()
                .map(|(c, text)| match text.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(Error::NonNumericCell { row: line, column: c + 1, text: text.to_string() }),
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        if rows.len() < 2 {
            return Err(Error::TooFewRows(rows.len()));
        }
        Ok(ReturnsTable { labels, rows })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }
}

/// Double-word accumulator: products and sums are kept error-free, so the
/// result is rounded once at the end.
#[derive(Default)]
struct Accumulator {
    hi: f64,
    lo: f64,
}

impl Accumulator {
    fn add(&mut self, v: f64) {
        let s = self.hi + v;
        let bp = s - self.hi;
        self.lo += (self.hi - (s - bp)) + (v - bp);
        self.hi = s;
    }

    fn add_product(&mut self, a: f64, b: f64) {
        let p = a * b;
        self.add(p);
        self.lo += a.mul_add(b, -p);
    }

    fn divided(&self, d: f64) -> f64 {
        let q = self.hi / d;
        q + ((-q).mul_add(d, self.hi) + self.lo) / d
    }
}

/// Sample means and the sample covariance with denominator `rows - 1`.
pub fn ingest_returns(table: &ReturnsTable) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let t = table.rows.len();
    if t < 2 {
        return Err(Error::TooFewRows(t));
    }
    let n = table.labels.len();
    let mean: Vec<f64> = (0..n)
        .map(|j| {
            let mut acc = Accumulator::default();
            table.rows.iter().for_each(|r| acc.add(r[j]));
            acc.divided(t as f64)
        })
        .collect();
    let mut cov = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let mut acc = Accumulator::default();
            table.rows.iter().for_each(|r| acc.add_product(r[i] - mean[i], r[j] - mean[j]));
            let c = acc.divided((t - 1) as f64);
            cov[i][j] = c;
            cov[j][i] = c;
        }
    }
    Ok((mean, cov))
}

/// Shrinks means toward the risk-free rate and inflates variances.
/// Returns the corrected spec and the assets still tripping the go-all-in
/// trigger `psi - sigma^2 >= r`.
pub fn apply_risk_belief(spec: &PortfolioSpec) -> (PortfolioSpec, Vec<usize>) {
    let r = spec.risk_free_rate.unwrap_or(0.0);
    let s = spec.mean_shrink;
    let lambda = spec.var_inflate;
    let mut out = spec.clone();
    for m in &mut out.mean {
        *m = r + (1.0 - s) * (*m - r);
    }
    for i in 0..out.covariance.len() {
        out.covariance[i][i] += lambda * spec.covariance[i][i];
    }
    let flagged = (0..out.mean.len()).filter(|&i| out.mean[i] - out.variance(i) >= r - TRIGGER_SLACK).collect();
    (out, flagged)
}

/// Appends a risk-free asset with mean `r` and zero covariance.
pub fn add_risk_free(spec: &PortfolioSpec, rate: f64) -> PortfolioSpec {
    let mut out = spec.clone();
    out.assets.push(RISK_FREE_LABEL.to_string());
    out.mean.push(rate);
    for row in &mut out.covariance {
        row.push(0.0);
    }
    out.covariance.push(vec![0.0; out.assets.len()]);
    out
}

/// Folds a reference measure into psi: `psi'(x) = psi(x) + nu(x)`. The
/// returned constant `-||nu||^2 / 2` restores the adaptive objective.
pub fn reduce_adaptive(kernel: &Kernel, psi: &Psi, reference: &AtomicMeasure) -> Result<(Psi, f64)> {
    for a in reference.atoms() {
        if a.point >= kernel.len() {
            return Err(Error::UnknownReferencePoint(a.point));
        }
    }
    let values = (0..kernel.len()).map(|x| psi.at(x) + reference.eval(kernel, x)).collect();
    Ok((Psi::new(values)?, -reference.norm_sq(kernel) / 2.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Corrections {
    pub mean_shrink: f64,
    pub var_inflate: f64,
    pub annualize_factor: Option<u32>,
    pub covariance_denominator: &'static str,
    pub returns: &'static str,
    pub go_all_in_flagged: Vec<String>,
    pub adaptive_constant: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PortfolioOutcome {
    /// The spec actually solved (after corrections and risk-free append).
    pub spec: PortfolioSpec,
    pub kernel: Kernel,
    pub psi: Psi,
    pub result: TopiaryResult,
    pub risk_free_index: Option<usize>,
    pub flagged: Vec<usize>,
    pub adaptive_constant: Option<f64>,
    input: PortfolioSpec,
}

impl PortfolioOutcome {
    /// `(asset, weight)` over the support, heaviest first, then by id.
    pub fn allocation(&self) -> Vec<(usize, f64)> {
        let mut v: Vec<(usize, f64)> = self.result.measure.atoms().iter().map(|a| (a.point, a.weight)).collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        v
    }

    /// Variance of the optimal portfolio.
    pub fn variance(&self) -> f64 {
        self.result.measure.norm_sq(&self.kernel)
    }

    pub fn report(&self) -> PortfolioReport {
        PortfolioReport {
            format_version: FORMAT_VERSION,
            allocation: self
                .allocation()
                .into_iter()
                .map(|(p, w)| AllocationEntry { point: p, asset: self.spec.assets[p].clone(), weight: w })
                .collect(),
            variance: self.variance(),
            risk_free_rate: self.input.risk_free_rate,
            result: ResultFile::new(&self.result, &self.kernel),
            spec: self.input.clone(),
            corrections: Corrections {
                mean_shrink: self.input.mean_shrink,
                var_inflate: self.input.var_inflate,
                annualize_factor: self.input.annualize_factor,
                covariance_denominator: "n-1",
                returns: "simple",
                go_all_in_flagged: self.flagged.iter().map(|&i| self.spec.assets[i].clone()).collect(),
                adaptive_constant: self.adaptive_constant,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationEntry {
    pub point: usize,
    pub asset: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortfolioReport {
    pub format_version: u32,
    pub allocation: Vec<AllocationEntry>,
    pub variance: f64,
    pub risk_free_rate: Option<f64>,
    pub result: ResultFile,
    pub spec: PortfolioSpec,
    pub corrections: Corrections,
}

/// Annualize, apply the risk belief, append the risk-free asset, fold in the
/// reference and solve.
pub fn optimize_portfolio(spec: &PortfolioSpec, config: &SolveConfig) -> Result<PortfolioOutcome> {
    spec.validate()?;
    let (corrected, flagged) = apply_risk_belief(&spec.annualized());
    if spec.risk_free_rate.is_some() {
        for &i in &flagged {
            warn!("asset {} satisfies the go-all-in trigger", corrected.assets[i]);
        }
    }
    let (solved_spec, rf) = match spec.risk_free_rate {
        Some(r) => (add_risk_free(&corrected, r), Some(corrected.assets.len())),
        None => (corrected, None),
    };
    let kernel = Kernel::from_gram(solved_spec.covariance.clone(), Some(solved_spec.assets.clone()), KernelOptions::default())?;
    let base = Psi::new(solved_spec.mean.clone())?;
    let (psi, constant) = match &spec.reference {
        Some(nu) => {
            let (p, c) = reduce_adaptive(&kernel, &base, nu)?;
            (p, Some(c))
        }
        None => (base, None),
    };
    let problem = Problem::new(&kernel, &psi)?;
    let result = solve(problem, &problem.all(), config)?;
    Ok(PortfolioOutcome {
        spec: solved_spec,
        kernel,
        psi,
        result,
        risk_free_index: rf,
        flagged,
        adaptive_constant: constant,
        input: spec.clone(),
    })
}
