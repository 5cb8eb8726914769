//! Reports around a solved topiary: CAPM rows, Julia-Carathéodory slopes,
//! security-market-line scatter data, invisible-index residuals and
//! convergence-rate summaries.
//!
//! Every report is sorted by point id so its CSV form is diff-stable.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::{fmt_f64, FORMAT_VERSION};
use crate::kernel::Kernel;
use crate::measure::AtomicMeasure;
use crate::objective::{MarginTable, Psi};
use crate::solver::{TopiaryResult, TraceStep};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapmRow {
    pub point: usize,
    pub label: Option<String>,
    pub psi: f64,
    pub mu: f64,
    /// `None` when the portfolio is riskless.
    pub beta: Option<f64>,
    pub alpha: Option<f64>,
    pub margin: f64,
    pub in_index: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapmReport {
    pub rate: f64,
    pub norm: f64,
    pub objective: f64,
    pub tolerance: f64,
    pub rows: Vec<CapmRow>,
}

impl CapmReport {
    pub fn is_riskless(&self) -> bool {
        self.rows.iter().any(|r| r.beta.is_none())
    }

    /// Points where `psi - r <= beta (E psi - r)` fails by more than the
    /// tolerance. With beta undefined the equivalent margin form is checked.
    pub fn violations(&self) -> Vec<usize> {
        self.rows
            .iter()
            .filter(|r| r.alpha.unwrap_or(r.margin) > self.tolerance)
            .map(|r| r.point)
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("id,label,psi,mu,beta,alpha,in_index\n");
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_else(|| "undefined".into());
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.point,
                r.label.as_deref().unwrap_or(""),
                fmt_f64(r.psi),
                fmt_f64(r.mu),
                opt(r.beta),
                opt(r.alpha),
                r.in_index
            ));
        }
        s
    }
}

/// One CAPM row per point of `points`. Beta and alpha are left undefined
/// for a riskless optimum.
pub fn capm_report(result: &TopiaryResult, kernel: &Kernel, psi: &Psi, points: &[usize]) -> Result<CapmReport> {
    for &x in points {
        kernel.check_id(x)?;
    }
    let table = MarginTable::build(kernel, psi, &result.measure, points)?;
    let tol = result.tolerance;
    let rows = table
        .rows
        .into_iter()
        .map(|r| CapmRow {
            point: r.point,
            label: r.label,
            psi: r.psi,
            mu: r.mu,
            beta: r.beta,
            alpha: r.alpha,
            margin: r.margin,
            in_index: r.margin.abs() <= tol,
        })
        .collect();
    Ok(CapmReport { rate: table.rate, norm: table.norm_sq.sqrt(), objective: table.objective, tolerance: tol, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JcRow {
    pub x: usize,
    pub y: usize,
    pub d: f64,
    pub psi_slope: f64,
    pub mu_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JcReport {
    pub mu_norm: f64,
    /// Known only when psi is an embedded function.
    pub psi_norm: Option<f64>,
    pub rows: Vec<JcRow>,
    /// Human-readable descriptions of failed inequalities.
    pub violations: Vec<String>,
}

impl JcReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,d,psi_slope,mu_slope\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{},{},{}\n", r.x, r.y, fmt_f64(r.d), fmt_f64(r.psi_slope), fmt_f64(r.mu_slope)));
        }
        s
    }
}

const JC_MIN_DISTANCE: f64 = 1e-12;

/// Slope quotients from each base point `x` (which must lie in the index of
/// `result`) to every `y` in `points` at positive embedded distance.
///
/// Checks `-||psi|| <= psi_slope <= mu_slope <= ||mu||`; the lower bound only
/// when `psi_norm` is supplied. The middle inequality is compared on
/// numerators, where the margin tolerance applies.
pub fn jc_report(
    result: &TopiaryResult,
    kernel: &Kernel,
    psi: &Psi,
    points: &[usize],
    base: &[usize],
    psi_norm: Option<f64>,
) -> Result<JcReport> {
    let mu = &result.measure;
    let tol = result.tolerance;
    for &x in base {
        kernel.check_id(x)?;
        if !result.index.contains(&x) {
            return Err(Error::BaseNotInIndex(x));
        }
    }
    let mut xs = base.to_vec();
    xs.sort_unstable();
    xs.dedup();
    let mut ys = points.to_vec();
    for &y in &ys {
        kernel.check_id(y)?;
    }
    ys.sort_unstable();
    ys.dedup();
    let mu_norm = mu.norm_sq(kernel).sqrt();
    let mu_at: Vec<f64> = (0..kernel.len()).map(|i| mu.eval(kernel, i)).collect();
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for &x in &xs {
        for &y in &ys {
            let d = kernel.embed_distance(x, y);
            if d <= JC_MIN_DISTANCE {
                continue;
            }
            let dpsi = psi.at(y) - psi.at(x);
            let dmu = mu_at[y] - mu_at[x];
            let row = JcRow { x, y, d, psi_slope: dpsi / d, mu_slope: dmu / d };
            if dpsi - dmu > 2.0 * tol {
                violations.push(format!("({x},{y}): psi slope {} exceeds mu slope {}", row.psi_slope, row.mu_slope));
            }
            if row.mu_slope > mu_norm + tol {
                violations.push(format!("({x},{y}): mu slope {} exceeds ||mu|| = {mu_norm}", row.mu_slope));
            }
            if let Some(pn) = psi_norm {
                if row.psi_slope < -pn - tol {
                    violations.push(format!("({x},{y}): psi slope {} below -||psi|| = {}", row.psi_slope, -pn));
                }
            }
            rows.push(row);
        }
    }
    Ok(JcReport { mu_norm, psi_norm, rows, violations })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmlClass {
    Index,
    InteriorOfK,
    OutsideK,
}

impl SmlClass {
    pub fn as_str(self) -> &'static str {
        match self {
            SmlClass::Index => "index",
            SmlClass::InteriorOfK => "interior-of-K",
            SmlClass::OutsideK => "outside-K",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmlPoint {
    pub point: usize,
    pub mu: f64,
    pub psi: f64,
    pub class: SmlClass,
}

/// Scatter of `(mu(y), psi(y))` with the line `psi = mu + r_K`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmlReport {
    pub slope: f64,
    pub intercept: f64,
    pub points: Vec<SmlPoint>,
}

impl SmlReport {
    /// Height of each point above the line.
    pub fn offset(&self, p: &SmlPoint) -> f64 {
        p.psi - self.slope * p.mu - self.intercept
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("id,mu,psi,class\n");
        for p in &self.points {
            s.push_str(&format!("{},{},{},{}\n", p.point, fmt_f64(p.mu), fmt_f64(p.psi), p.class.as_str()));
        }
        s
    }
}

pub fn sml_points(result: &TopiaryResult, kernel: &Kernel, psi: &Psi, points: &[usize], extras: &[usize]) -> Result<SmlReport> {
    let mu = &result.measure;
    let mut out = Vec::new();
    for &y in points.iter().chain(extras) {
        kernel.check_id(y)?;
    }
    let mut ks = points.to_vec();
    ks.sort_unstable();
    ks.dedup();
    for &y in &ks {
        let m = mu.eval(kernel, y);
        let class = if (psi.at(y) - m - result.rate).abs() <= result.tolerance { SmlClass::Index } else { SmlClass::InteriorOfK };
        out.push(SmlPoint { point: y, mu: m, psi: psi.at(y), class });
    }
    let mut ex: Vec<usize> = extras.iter().copied().filter(|e| ks.binary_search(e).is_err()).collect();
    ex.sort_unstable();
    ex.dedup();
    for y in ex {
        out.push(SmlPoint { point: y, mu: mu.eval(kernel, y), psi: psi.at(y), class: SmlClass::OutsideK });
    }
    out.sort_by_key(|p| p.point);
    Ok(SmlReport { slope: 1.0, intercept: result.rate, points: out })
}

/// Embedded distance between two solutions.
pub fn invisible_residual(kernel: &Kernel, first: &AtomicMeasure, second: &AtomicMeasure) -> f64 {
    first.distance(kernel, second)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapRow {
    pub iteration: usize,
    pub gap: f64,
    pub scaled_gap: f64,
    pub running_sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceSummary {
    pub rows: Vec<GapRow>,
    pub final_gap: f64,
    /// `n * gap_n` rose monotonically by more than a factor two over the
    /// last half of the trace.
    pub violation: bool,
}

/// Objective gaps against a known optimum along a solver trace.
pub fn convergence_summary(trace: &[TraceStep], oracle_objective: Option<f64>) -> Result<ConvergenceSummary> {
    let opt = oracle_objective.ok_or(Error::RequiresOracle)?;
    let mut rows = Vec::with_capacity(trace.len());
    let mut sup = f64::NEG_INFINITY;
    for t in trace.iter().filter(|t| t.iteration > 0) {
        let gap = opt - t.objective;
        let scaled = t.iteration as f64 * gap;
        sup = sup.max(scaled);
        rows.push(GapRow { iteration: t.iteration, gap, scaled_gap: scaled, running_sup: sup });
    }
    let final_gap = trace.last().map_or(f64::NAN, |t| opt - t.objective);
    let half = &rows[rows.len() / 2..];
    let violation = half.len() >= 2
        && half.windows(2).all(|w| w[1].scaled_gap >= w[0].scaled_gap)
        && half[0].scaled_gap > 0.0
        && half[half.len() - 1].scaled_gap > 2.0 * half[0].scaled_gap;
    Ok(ConvergenceSummary { rows, final_gap, violation })
}

/// Header written next to the CSV reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportHeader {
    pub format_version: u32,
    pub rate: f64,
    pub norm: f64,
    pub objective: f64,
    pub score: f64,
    pub tolerance: f64,
    pub riskless: bool,
}

impl ReportHeader {
    pub fn new(result: &TopiaryResult, kernel: &Kernel) -> Self {
        let norm = result.measure.norm_sq(kernel).sqrt();
        ReportHeader {
            format_version: FORMAT_VERSION,
            rate: result.rate,
            norm,
            objective: result.objective,
            score: result.score,
            tolerance: result.tolerance,
            riskless: norm * norm <= 1e-14,
        }
    }
}
