//! Sparse optimal probability measures over kernel-embedded candidate sets.
//!
//! The central problem: over probability measures `mu` supported on a finite
//! candidate set `K` of a reproducing-kernel space, maximize
//!
//! ```text
//! O(mu) = sum_i w_i psi(x_i) - ||mu||^2 / 2
//! ```
//!
//! The maximizer (the *topiary* of `K`) is unique as an embedded element and is
//! typically sparse. This crate provides several constructions of it (greedy
//! ascent, greedy with pruning, active-set exchange, exhaustive oracle), the
//! margin/beta/alpha diagnostics around it, and two applications: long-only
//! portfolio selection and harmonic maze solving in the real Fock space.

pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod io;
pub mod kernel;
mod linalg;
pub mod maze;
pub mod measure;
pub mod objective;
pub mod portfolio;
pub mod solver;

pub use error::{Error, ErrorClass, Result};
pub use exec::Exec;
pub use kernel::{Kernel, KernelKind, KernelOptions, Point};
pub use measure::{Atom, AtomicMeasure, MeasureKind};
pub use objective::{Psi, PsiSpec};
pub use solver::{Algorithm, Problem, SolveConfig, TopiaryResult};
