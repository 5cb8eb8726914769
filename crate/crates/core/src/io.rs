//! File formats: problem and result JSON, trace CSV, and atomic writes.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{Kernel, KernelKind, KernelOptions, Point};
use crate::measure::{Atom, AtomicMeasure};
use crate::objective::{Psi, PsiSpec};
use crate::solver::{Algorithm, TopiaryResult, TraceStep};

pub const FORMAT_VERSION: u32 = 1;

/// Fixed float formatting for text outputs: 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    #[serde(rename = "type")]
    pub kind: KernelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gram: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagonal_loading: Option<f64>,
}

impl KernelSpec {
    pub fn build(&self, mut opts: KernelOptions) -> Result<Kernel> {
        if let Some(l) = self.diagonal_loading {
            opts.diagonal_loading = l;
        }
        match self.kind {
            KernelKind::Gram => {
                let g = self.gram.clone().ok_or_else(|| Error::InvalidInput("gram kernel needs a \"gram\" matrix".into()))?;
                Kernel::from_gram(g, self.labels.clone(), opts)
            }
            kind => {
                let pts = self.points.as_ref().ok_or_else(|| Error::InvalidInput(format!("{kind:?} kernel needs \"points\"")))?;
                if let Some(l) = &self.labels {
                    if l.len() != pts.len() {
                        return Err(Error::InvalidInput(format!("{} labels for {} points", l.len(), pts.len())));
                    }
                }
                let points = pts
                    .iter()
                    .enumerate()
                    .map(|(i, c)| {
                        let p = Point::new(i, c.clone());
                        match &self.labels {
                            Some(l) => p.with_label(l[i].clone()),
                            None => p,
                        }
                    })
                    .collect();
                Kernel::with_points(kind, points, opts)
            }
        }
    }
}

/// `psi` given either as a plain value list or as a tagged specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PsiInput {
    Values(Vec<f64>),
    Spec(PsiSpec),
}

impl PsiInput {
    pub fn spec(&self) -> PsiSpec {
        match self {
            PsiInput::Values(v) => PsiSpec::Table { values: v.clone() },
            PsiInput::Spec(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub kernel: KernelSpec,
    pub psi: PsiInput,
}

impl ProblemFile {
    pub fn build(&self, opts: KernelOptions) -> Result<(Kernel, Psi)> {
        let kernel = self.kernel.build(opts)?;
        let psi = self.psi.spec().materialize(&kernel)?;
        Ok((kernel, psi))
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn load_problem(path: &Path, opts: KernelOptions) -> Result<(Kernel, Psi)> {
    read_json::<ProblemFile>(path)?.build(opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightEntry {
    pub point: usize,
    pub label: Option<String>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub format_version: u32,
    pub weights: Vec<WeightEntry>,
    pub objective: f64,
    pub rate: f64,
    pub score: f64,
    pub index: Vec<usize>,
    pub iterations: usize,
    pub algorithm: Algorithm,
}

impl ResultFile {
    pub fn new(result: &TopiaryResult, kernel: &Kernel) -> Self {
        ResultFile {
            format_version: FORMAT_VERSION,
            weights: result
                .measure
                .atoms()
                .iter()
                .map(|a| WeightEntry { point: a.point, label: kernel.point(a.point).label.clone(), weight: a.weight })
                .collect(),
            objective: result.objective,
            rate: result.rate,
            score: result.score,
            index: result.index.clone(),
            iterations: result.iterations,
            algorithm: result.algorithm,
        }
    }

    pub fn measure(&self) -> Result<AtomicMeasure> {
        AtomicMeasure::normalized(self.weights.iter().map(|w| Atom { point: w.point, weight: w.weight }).collect())
    }
}

pub fn trace_csv(steps: &[TraceStep]) -> String {
    let mut s = String::from("iteration,objective,score,support_size,added_point,dropped_points\n");
    for t in steps {
        let dropped: Vec<String> = t.dropped.iter().map(usize::to_string).collect();
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            t.iteration,
            fmt_f64(t.objective),
            fmt_f64(t.score),
            t.support_size,
            t.added.map(|a| a.to_string()).unwrap_or_default(),
            dropped.join(";")
        ));
    }
    s
}

/// Writes `bytes` to a temporary sibling of `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| Error::InvalidInput(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, to_json_string(value)?.as_bytes())
}
