//! Harmonic maze solving in the real Fock space.
//!
//! Obstacle cells of a raster mask become candidate points. The topiary of
//! that set under `k(z, w) = Re exp(z conj(w))` (with `psi = 0`, or
//! `psi = k(alpha, .)` for a target `alpha`) has a margin that is the real
//! part of an entire function. It is nonpositive on the obstacles and
//! positive at the origin when the obstacles do not wind around it, so
//! ascending it from the origin leads out of the maze.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::io::{fmt_f64, FORMAT_VERSION};
use crate::kernel::{fock_exp, Kernel, KernelKind, KernelOptions, Point};
use crate::measure::AtomicMeasure;
use crate::objective::{Psi, PsiSpec};
use crate::solver::{finish, solve, Algorithm, Problem, SolveConfig, TopiaryResult};

/// Obstacle coordinates are scaled down to at most this modulus before solving.
pub const MAX_SCALED_RADIUS: f64 = 3.0;
pub const MAZE_MARGIN_TOL: f64 = 1e-6;
const STALL_GRADIENT: f64 = 1e-12;
const SUBSTEPS: usize = 4;

/// Boolean raster, `true` = obstacle. Row 0 is the top row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    cells: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, cells: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 || cells.len() != width * height {
            return Err(Error::InvalidInput(format!("mask {width}x{height} with {} cells", cells.len())));
        }
        Ok(Mask { width, height, cells })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Result<Self> {
        let cells = (0..height).flat_map(|r| (0..width).map(move |c| (r, c))).map(|(r, c)| f(r, c)).collect();
        Self::new(width, height, cells)
    }

    /// Square annulus mask of side `size` cells. Radii are in cells from the
    /// grid center; `gap` is the half-angle (radians) of an opening centred on
    /// the positive real axis.
    pub fn annulus(size: usize, inner: f64, outer: f64, gap: Option<f64>) -> Result<Self> {
        let h = size as f64 / 2.0;
        Self::from_fn(size, size, |r, c| {
            let x = c as f64 + 0.5 - h;
            let y = h - r as f64 - 0.5;
            let rad = x.hypot(y);
            let in_ring = rad >= inner && rad <= outer;
            in_ring && gap.is_none_or(|g| y.atan2(x).abs() > g)
        })
    }

    /// Text grid: `#` obstacle, `.` free, one row per line.
    pub fn parse_text(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().map(|l| l.trim_end_matches('\r')).collect();
        let end = lines.iter().rposition(|l| !l.trim().is_empty()).map_or(0, |i| i + 1);
        let lines = &lines[..end];
        if lines.is_empty() {
            return Err(Error::EmptyMask);
        }
        let width = lines[0].chars().count();
        let mut cells = Vec::with_capacity(width * lines.len());
        for (r, line) in lines.iter().enumerate() {
            if line.chars().count() != width {
                return Err(Error::InvalidInput(format!("mask row {} has {} cells, expected {width}", r + 1, line.chars().count())));
            }
            for (c, ch) in line.chars().enumerate() {
                cells.push(match ch {
                    '#' => true,
                    '.' => false,
                    other => return Err(Error::InvalidInput(format!("mask row {} column {}: unexpected {other:?}", r + 1, c + 1))),
                });
            }
        }
        Self::new(width, lines.len(), cells)
    }

    /// Plain PBM (`P1`); `1` is an obstacle.
    pub fn parse_pbm(text: &str) -> Result<Self> {
        let body: String = text.lines().map(|l| l.split('#').next().unwrap_or("")).collect::<Vec<_>>().join("\n");
        let mut rest = body.as_str();
        let mut header = Vec::new();
        while header.len() < 3 {
            rest = rest.trim_start();
            let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
            if end == 0 {
                return Err(Error::InvalidInput("truncated PBM header".into()));
            }
            header.push(&rest[..end]);
            rest = &rest[end..];
        }
        if header[0] != "P1" {
            return Err(Error::InvalidInput(format!("expected plain PBM magic P1, got {}", header[0])));
        }
        let dim = |s: &str| s.parse::<usize>().map_err(|_| Error::InvalidInput(format!("bad PBM dimension {s:?}")));
        let (width, height) = (dim(header[1])?, dim(header[2])?);
        let cells: Vec<bool> = rest
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '1' => Ok(true),
                '0' => Ok(false),
                other => Err(Error::InvalidInput(format!("unexpected PBM pixel {other:?}"))),
            })
            .collect::<Result<_>>()?;
        if cells.len() != width * height {
            return Err(Error::InvalidInput(format!("PBM has {} pixels, header says {}", cells.len(), width * height)));
        }
        Self::new(width, height, cells)
    }

    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with("P1") {
            Self::parse_pbm(text)
        } else {
            Self::parse_text(text)
        }
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.cells[r * self.width + c]
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&b| b).count()
    }

    /// An obstacle cell with a free 4-neighbour or on the grid edge.
    pub fn is_boundary(&self, r: usize, c: usize) -> bool {
        if !self.get(r, c) {
            return false;
        }
        if r == 0 || c == 0 || r + 1 == self.height || c + 1 == self.width {
            return true;
        }
        !(self.get(r - 1, c) && self.get(r + 1, c) && self.get(r, c - 1) && self.get(r, c + 1))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity((self.width + 1) * self.height);
        for r in 0..self.height {
            s.extend((0..self.width).map(|c| if self.get(r, c) { '#' } else { '.' }));
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MazeSpec {
    pub mask: Mask,
    pub cell_size: f64,
    /// Where the grid center lands in the complex plane.
    pub origin_offset: [f64; 2],
    pub target: Option<[f64; 2]>,
    /// `None` selects the automatic rule.
    pub escape_radius: Option<f64>,
}

impl MazeSpec {
    pub fn new(mask: Mask, cell_size: f64) -> Self {
        MazeSpec { mask, cell_size, origin_offset: [0.0, 0.0], target: None, escape_radius: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cell_size > 0.0 && self.cell_size.is_finite()) {
            return Err(Error::InvalidInput(format!("cell size {} must be positive", self.cell_size)));
        }
        if let Some(r) = self.escape_radius {
            if !(r > 0.0) {
                return Err(Error::InvalidInput(format!("escape radius {r} must be positive")));
            }
        }
        if self.mask.count() == 0 {
            return Err(Error::EmptyMask);
        }
        Ok(())
    }

    /// Solver defaults for maze runs: exchange with a looser margin tolerance.
    pub fn default_config() -> SolveConfig {
        SolveConfig { algorithm: Algorithm::Exchange, margin_tol: MAZE_MARGIN_TOL, ..Default::default() }
    }

    /// Center of cell `(r, c)` in the plane.
    pub fn cell_center(&self, r: usize, c: usize) -> [f64; 2] {
        let h = self.cell_size;
        [
            (c as f64 + 0.5 - self.mask.width as f64 / 2.0) * h + self.origin_offset[0],
            (self.mask.height as f64 / 2.0 - r as f64 - 0.5) * h + self.origin_offset[1],
        ]
    }

    /// The cell containing `z`, if inside the grid.
    pub fn cell_at(&self, z: [f64; 2]) -> Option<(usize, usize)> {
        let c = ((z[0] - self.origin_offset[0]) / self.cell_size + self.mask.width as f64 / 2.0).floor();
        let r = (self.mask.height as f64 / 2.0 - (z[1] - self.origin_offset[1]) / self.cell_size).floor();
        (c >= 0.0 && r >= 0.0 && (c as usize) < self.mask.width && (r as usize) < self.mask.height).then(|| (r as usize, c as usize))
    }

    pub fn is_obstacle(&self, z: [f64; 2]) -> bool {
        self.cell_at(z).is_some_and(|(r, c)| self.mask.get(r, c))
    }

    /// Lower-left and upper-right corners of the grid.
    pub fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        let hw = self.mask.width as f64 * self.cell_size / 2.0;
        let hh = self.mask.height as f64 * self.cell_size / 2.0;
        let o = self.origin_offset;
        ([o[0] - hw, o[1] - hh], [o[0] + hw, o[1] + hh])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
    pub center: [f64; 2],
}

/// One point per obstacle cell, at its center, row-major.
pub fn rasterize(spec: &MazeSpec) -> Result<Vec<Cell>> {
    let m = &spec.mask;
    let cells: Vec<Cell> = (0..m.height)
        .flat_map(|r| (0..m.width).map(move |c| (r, c)))
        .filter(|&(r, c)| m.get(r, c))
        .map(|(r, c)| Cell { row: r, col: c, center: spec.cell_center(r, c) })
        .collect();
    if cells.is_empty() {
        return Err(Error::EmptyMask);
    }
    Ok(cells)
}

/// A solved maze. The kernel lives on rescaled coordinates `s * z`.
#[derive(Debug, Clone)]
pub struct MazeSolution {
    pub spec: MazeSpec,
    pub cells: Vec<Cell>,
    pub kernel: Kernel,
    pub psi: Psi,
    pub result: TopiaryResult,
    /// Factor `s` mapping plane coordinates to kernel coordinates.
    pub rescale: f64,
    pub escape_radius: f64,
    /// The origin (or target) lay inside an obstacle cell.
    pub trichotomy: bool,
    exec: Exec,
}

fn modulus(z: [f64; 2]) -> f64 {
    z[0].hypot(z[1])
}

pub fn solve_maze(spec: &MazeSpec, config: &SolveConfig) -> Result<MazeSolution> {
    spec.validate()?;
    let cells = rasterize(spec)?;
    let max_r = cells.iter().map(|c| modulus(c.center)).fold(0.0, f64::max);
    let rescale = if max_r > MAX_SCALED_RADIUS { MAX_SCALED_RADIUS / max_r } else { 1.0 };
    let escape_radius = spec.escape_radius.unwrap_or(1.5 * max_r);
    let points: Vec<Point> = cells
        .iter()
        .enumerate()
        .map(|(i, c)| Point::new(i, vec![rescale * c.center[0], rescale * c.center[1]]).with_label(format!("{},{}", c.row, c.col)))
        .collect();
    // Fock Gram matrices are PSD by construction and too large for a dense eigen-check here
    let opts = KernelOptions { skip_psd_check: true, exec: config.exec, ..Default::default() };
    let kernel = Kernel::with_points(KernelKind::Fock, points, opts)?;
    let psi_spec = match spec.target {
        Some(a) => {
            let limit = 700.0 / MAX_SCALED_RADIUS / rescale;
            if modulus(a) > limit {
                return Err(Error::Domain(format!("target modulus {} exceeds the admissible radius {limit}", modulus(a))));
            }
            PsiSpec::PointKernel { coords: vec![rescale * a[0], rescale * a[1]] }
        }
        None => PsiSpec::Zero,
    };
    let psi = psi_spec.materialize(&kernel)?;
    let problem = Problem::new(&kernel, &psi)?;
    let all = problem.all();
    let anchor = spec.target.unwrap_or([0.0, 0.0]);
    let inside = spec.cell_at(anchor).filter(|&(r, c)| spec.mask.get(r, c));
    let (result, trichotomy) = match inside {
        Some((r, c)) => {
            let i = cells.iter().position(|cell| cell.row == r && cell.col == c).expect("obstacle cell is rasterized");
            let tol = config.margin_tol * problem.scale();
            (finish(problem, &all, AtomicMeasure::dirac(i), 0, config.algorithm, tol, None), true)
        }
        None => (solve(problem, &all, config)?, false),
    };
    Ok(MazeSolution { spec: spec.clone(), cells, kernel, psi, result, rescale, escape_radius, trichotomy, exec: config.exec })
}

impl MazeSolution {
    fn scaled(&self, z: [f64; 2]) -> Complex64 {
        Complex64::new(self.rescale * z[0], self.rescale * z[1])
    }

    fn target_scaled(&self) -> Option<Complex64> {
        self.spec.target.map(|a| self.scaled(a))
    }

    /// The analytic function `F` with `margin = Re F - rate`, and `F'`, at
    /// kernel coordinate `u`.
    fn analytic(&self, u: Complex64) -> Result<(Complex64, Complex64)> {
        let mut f = Complex64::new(0.0, 0.0);
        let mut df = Complex64::new(0.0, 0.0);
        for a in self.result.measure.atoms() {
            let p = self.kernel.point(a.point).complex().expect("maze points are complex");
            let e = fock_exp(u, p)?;
            f -= a.weight * e;
            df -= a.weight * p.conj() * e;
        }
        if let Some(al) = self.target_scaled() {
            let e = fock_exp(u, al)?;
            f += e;
            df += al.conj() * e;
        }
        Ok((f, df))
    }

    /// Margin of the topiary at plane point `z`.
    pub fn margin_at(&self, z: [f64; 2]) -> Result<f64> {
        Ok(self.analytic(self.scaled(z))?.0.re - self.result.rate)
    }

    /// Gradient of the margin with respect to plane coordinates.
    pub fn gradient_at(&self, z: [f64; 2]) -> Result<[f64; 2]> {
        let g = self.analytic(self.scaled(z))?.1.conj() * self.rescale;
        Ok([g.re, g.im])
    }

    /// Harmonic conjugate of the margin (up to a constant) at `z`.
    pub fn conjugate_at(&self, z: [f64; 2]) -> Result<f64> {
        Ok(self.analytic(self.scaled(z))?.0.im)
    }

    /// Grid covering the mask.
    pub fn default_grid(&self, res: usize) -> FieldGrid {
        let (min, max) = self.spec.bounds();
        FieldGrid { res, min, max }
    }

    pub fn support_cells(&self) -> Vec<Cell> {
        self.result.support().into_iter().map(|i| self.cells[i]).collect()
    }

    pub fn meta(&self, path: Option<&PathTrace>) -> MazeMeta {
        MazeMeta {
            format_version: FORMAT_VERSION,
            rescale: self.rescale,
            escape_radius: self.escape_radius,
            points: self.cells.len(),
            support_size: self.result.measure.len(),
            objective: self.result.objective,
            rate: self.result.rate,
            score: self.result.score,
            iterations: self.result.iterations,
            trichotomy: self.trichotomy,
            status: path.map(|p| p.status),
            clearance: path.map(|p| p.clearance),
            steps: path.map(|p| p.points.len().saturating_sub(1)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MazeMeta {
    pub format_version: u32,
    pub rescale: f64,
    pub escape_radius: f64,
    pub points: usize,
    pub support_size: usize,
    pub objective: f64,
    pub rate: f64,
    pub score: f64,
    pub iterations: usize,
    pub trichotomy: bool,
    pub status: Option<PathStatus>,
    pub clearance: Option<f64>,
    pub steps: Option<usize>,
}

/// A `res x res` sampling grid over a rectangle of the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldGrid {
    pub res: usize,
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl FieldGrid {
    /// Center of pixel `(row, col)`; row 0 is the top.
    pub fn pixel(&self, row: usize, col: usize) -> [f64; 2] {
        let dx = (self.max[0] - self.min[0]) / self.res as f64;
        let dy = (self.max[1] - self.min[1]) / self.res as f64;
        [self.min[0] + (col as f64 + 0.5) * dx, self.max[1] - (row as f64 + 0.5) * dy]
    }
}

/// Row-major raster of samples, top row first.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl Field {
    fn sample(grid: &FieldGrid, exec: Exec, f: impl Fn([f64; 2]) -> Result<f64> + Sync + Send) -> Result<Self> {
        if grid.res == 0 {
            return Err(Error::InvalidInput("field resolution must be positive".into()));
        }
        let n = grid.res;
        let values = exec.map(n * n, |i| f(grid.pixel(i / n, i % n))).into_iter().collect::<Result<Vec<f64>>>()?;
        Ok(Field { width: n, height: n, values })
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    /// Min-max normalization to `0..=255`.
    pub fn to_u8(&self) -> Vec<u8> {
        let (lo, hi) = self.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        self.values
            .iter()
            .map(|&v| if hi > lo { (255.0 * (v - lo) / (hi - lo)).round() as u8 } else { 0 })
            .collect()
    }

    /// Plain PGM, maxval 255.
    pub fn to_pgm(&self) -> String {
        let px = self.to_u8();
        let mut s = format!("P2\n{} {}\n255\n", self.width, self.height);
        for row in px.chunks(self.width) {
            let line: Vec<String> = row.iter().map(u8::to_string).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }
}

/// Margin of the topiary sampled over `grid`.
pub fn potential_field(sol: &MazeSolution, grid: &FieldGrid) -> Result<Field> {
    Field::sample(grid, sol.exec, |z| sol.margin_at(z))
}

/// `|conj(z) - conj(0)|` for the harmonic conjugate of the margin.
pub fn conjugate_field(sol: &MazeSolution, grid: &FieldGrid) -> Result<Field> {
    if !sol.kernel.kind().is_analytic() {
        return Err(Error::KernelNotAnalytic);
    }
    let at0 = sol.conjugate_at([0.0, 0.0])?;
    Field::sample(grid, sol.exec, |z| Ok((sol.conjugate_at(z)? - at0).abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathStatus {
    Escaped,
    MaxSteps,
    Stalled,
}

impl PathStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            PathStatus::Escaped => "escaped",
            PathStatus::MaxSteps => "max-steps",
            PathStatus::Stalled => "stalled",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathTrace {
    pub points: Vec<[f64; 2]>,
    pub status: PathStatus,
    /// Smallest distance from a path vertex to an obstacle cell (0 if one
    /// was entered).
    pub clearance: f64,
}

impl PathTrace {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y\n");
        for p in &self.points {
            s.push_str(&format!("{},{}\n", fmt_f64(p[0]), fmt_f64(p[1])));
        }
        s
    }
}

/// Distance from `z` to the union of obstacle cell squares.
pub fn obstacle_clearance(spec: &MazeSpec, cells: &[Cell], z: [f64; 2]) -> f64 {
    let h = spec.cell_size / 2.0;
    cells
        .iter()
        .map(|c| {
            let dx = ((z[0] - c.center[0]).abs() - h).max(0.0);
            let dy = ((z[1] - c.center[1]).abs() - h).max(0.0);
            dx.hypot(dy)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Follows the normalized margin gradient from the origin with fixed-length
/// steps, each split into midpoint sub-steps.
pub fn trace_path(sol: &MazeSolution, step: f64, max_steps: usize) -> Result<PathTrace> {
    if !(step > 0.0) {
        return Err(Error::InvalidInput(format!("step size {step} must be positive")));
    }
    let start = [0.0, 0.0];
    if sol.spec.is_obstacle(start) {
        return Err(Error::StartInsideObstacle);
    }
    let dir = |z: [f64; 2]| -> Result<Option<[f64; 2]>> {
        let g = sol.gradient_at(z)?;
        let n = g[0].hypot(g[1]);
        Ok((n >= STALL_GRADIENT).then(|| [g[0] / n, g[1] / n]))
    };
    let h = step / SUBSTEPS as f64;
    let mut z = start;
    let mut points = vec![z];
    let mut clearance = obstacle_clearance(&sol.spec, &sol.cells, z);
    let mut status = PathStatus::MaxSteps;
    'outer: for _ in 0..max_steps {
        for _ in 0..SUBSTEPS {
            let Some(k1) = dir(z)? else {
                status = PathStatus::Stalled;
                break 'outer;
            };
            let mid = [z[0] + 0.5 * h * k1[0], z[1] + 0.5 * h * k1[1]];
            let k2 = dir(mid)?.unwrap_or(k1);
            z = [z[0] + h * k2[0], z[1] + h * k2[1]];
            clearance = clearance.min(obstacle_clearance(&sol.spec, &sol.cells, z));
        }
        points.push(z);
        if modulus(z) >= sol.escape_radius {
            status = PathStatus::Escaped;
            break;
        }
    }
    Ok(PathTrace { points, status, clearance })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(offset: [f64; 2]) -> MazeSpec {
        let mut s = MazeSpec::new(Mask::parse_text("#").unwrap(), 1.0);
        s.origin_offset = offset;
        s
    }

    #[test]
    fn parsing() {
        let m = Mask::parse_text("#.#\n...\n").unwrap();
        assert_eq!((m.width(), m.height(), m.count()), (3, 2, 2));
        assert!(Mask::parse_text("#x\n").is_err());
        assert!(Mask::parse_text("##\n#\n").is_err());
        let p = Mask::parse("P1\n# comment\n3 2\n1 0 1\n000\n").unwrap();
        assert_eq!(p, m);
        assert!(Mask::parse_pbm("P1\n2 2\n1 0 1\n").is_err());
        assert_eq!(Mask::parse_text(&m.to_text()).unwrap(), m);
    }

    #[test]
    fn rasterize_examples() {
        let c = rasterize(&single([1.0, 0.0])).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].center, [1.0, 0.0]);
        let ring = MazeSpec::new(Mask::parse_text("###\n#.#\n###\n").unwrap(), 1.0);
        assert_eq!(rasterize(&ring).unwrap().len(), 8);
        let empty = MazeSpec::new(Mask::parse_text("...\n").unwrap(), 1.0);
        assert!(matches!(rasterize(&empty), Err(Error::EmptyMask)));
        assert!(matches!(solve_maze(&empty, &MazeSpec::default_config()), Err(Error::EmptyMask)));
    }

    #[test]
    fn cell_lookup_round_trips() {
        let s = MazeSpec { origin_offset: [0.3, -0.2], ..MazeSpec::new(Mask::annulus(8, 1.0, 3.5, None).unwrap(), 0.1) };
        for r in 0..8 {
            for c in 0..8 {
                assert_eq!(s.cell_at(s.cell_center(r, c)), Some((r, c)));
            }
        }
    }

    #[test]
    fn single_point_maze() {
        let sol = solve_maze(&single([1.0, 0.0]), &MazeSpec::default_config()).unwrap();
        assert_eq!(sol.result.measure, AtomicMeasure::dirac(0));
        let g = sol.gradient_at([0.0, 0.0]).unwrap();
        assert!((g[0] + 1.0).abs() < 1e-12 && g[1].abs() < 1e-12);
        let path = trace_path(&sol, 0.25, 100).unwrap();
        assert_eq!(path.status, PathStatus::Escaped);
        assert!(path.points.iter().all(|p| p[1].abs() < 1e-12));
        assert!(path.points.windows(2).all(|w| modulus([w[1][0] - w[0][0], w[1][1] - w[0][1]]) <= 0.25 * 1.01));
        assert!(path.points.last().unwrap()[0] < 0.0);
    }

    #[test]
    fn origin_inside_obstacle() {
        let spec = MazeSpec::new(Mask::parse_text("###\n###\n###\n").unwrap(), 1.0);
        let sol = solve_maze(&spec, &MazeSpec::default_config()).unwrap();
        assert!(sol.trichotomy);
        assert_eq!(sol.result.iterations, 0);
        assert_eq!(sol.result.support(), vec![4]);
        assert!(matches!(trace_path(&sol, 0.1, 10), Err(Error::StartInsideObstacle)));
    }

    #[test]
    fn fields() {
        let sol = solve_maze(&single([1.0, 0.0]), &MazeSpec::default_config()).unwrap();
        let grid = FieldGrid { res: 8, min: [-2.0, -2.0], max: [2.0, 2.0] };
        let f = potential_field(&sol, &grid).unwrap();
        assert_eq!(f.values.len(), 64);
        assert!(sol.margin_at([1.0, 0.0]).unwrap().abs() < 1e-12);
        assert!(sol.margin_at([0.0, 0.0]).unwrap() > 0.0);
        let pgm = f.to_pgm();
        assert!(pgm.starts_with("P2\n8 8\n255\n"));
        let c = conjugate_field(&sol, &grid).unwrap();
        // the conjugate vanishes on the real axis for a real atom
        assert!(sol.conjugate_at([0.7, 0.0]).unwrap().abs() < 1e-15);
        assert!(c.values.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn pgm_of_constant_field() {
        let f = Field { width: 2, height: 1, values: vec![3.0, 3.0] };
        assert_eq!(f.to_pgm(), "P2\n2 1\n255\n0 0\n");
    }
}
