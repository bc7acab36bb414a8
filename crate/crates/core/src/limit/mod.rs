//! Hydrodynamic limit of the ranking process on tensor grids.
//!
//! The limit is described by two families of characteristic curves: `f(y0, t)`
//! starting from initial points `(y0, 0)` and `g(t0, t)` starting from
//! boundary points `(0, t0)`. Both are fixed points of integral maps and are
//! computed by Picard iteration. From them follow the boundary injection
//! density `eta`, the measure-valued solution `U(a, y, t)` and the velocity
//! `V(h, y, t)`.

mod export;
mod field;
mod grid;
mod picard;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Exec;
use crate::model::ModelSpec;

pub use export::{write_eta_csv, write_f_csv, write_g_csv, FieldManifest};
pub use field::{CharacteristicField, Diagnostics};
pub use grid::Grid;
pub use picard::IterationLog;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("{stage} iteration is not contracting (iteration {iteration}, difference {diff:e}); refine the grid or check the model")]
    NonContraction {
        stage: &'static str,
        iteration: usize,
        diff: f64,
    },
    #[error("query out of domain: {0}")]
    OutOfDomain(String),
    #[error("grid needs M, K >= 2 and a positive horizon (got M={m}, K={k})")]
    InvalidGrid { m: usize, k: usize },
}

/// A starting point of a characteristic: an initial point `(y0, 0)` or a
/// boundary point `(0, t0)`. The corner `(0, 0)` belongs to both and is
/// represented as an initial point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gamma {
    Initial { y0: f64 },
    Boundary { t0: f64 },
}

impl Gamma {
    pub fn from_point(y0: f64, t0: f64, horizon: f64) -> Result<Gamma, SolveError> {
        if t0 == 0.0 && (0.0..=1.0).contains(&y0) {
            Ok(Gamma::Initial { y0 })
        } else if y0 == 0.0 && t0 > 0.0 && t0 <= horizon {
            Ok(Gamma::Boundary { t0 })
        } else {
            Err(SolveError::OutOfDomain(format!("({y0}, {t0}) is not a point of Gamma")))
        }
    }

    /// `(y0, t0)`.
    pub fn point(&self) -> (f64, f64) {
        match *self {
            Gamma::Initial { y0 } => (y0, 0.0),
            Gamma::Boundary { t0 } => (0.0, t0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub m: usize,
    pub k: usize,
    pub f_tol: f64,
    pub g_tol: f64,
    pub eta_tol: f64,
    pub max_iter: usize,
    /// Consecutive non-decreasing differences tolerated before giving up.
    pub stall_limit: usize,
    pub exec: Exec,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            m: 400,
            k: 400,
            f_tol: 1e-12,
            g_tol: 1e-10,
            eta_tol: 1e-10,
            max_iter: 80,
            stall_limit: 5,
            exec: Exec::default(),
        }
    }
}

impl SolveOptions {
    pub fn with_grid(m: usize, k: usize) -> SolveOptions {
        SolveOptions {
            m,
            k,
            ..SolveOptions::default()
        }
    }
}

/// Solves `f`, then `(g, eta)`, and tabulates `U` and `V` on the grid.
pub fn solve(model: &ModelSpec, opts: &SolveOptions) -> Result<CharacteristicField, SolveError> {
    if opts.m < 2 || opts.k < 2 || !(model.horizon > 0.0) {
        return Err(SolveError::InvalidGrid { m: opts.m, k: opts.k });
    }
    let grid = Grid::new(opts.m, opts.k, model.horizon);
    let fs = picard::solve_f(model, &grid, opts)?;
    let gs = picard::solve_g_eta(model, &grid, &fs, opts)?;
    let diagnostics = Diagnostics {
        f: fs.log,
        g: gs.g_log,
        eta: gs.eta_logs,
        identity_defect: gs.identity_defect,
    };
    Ok(CharacteristicField::assemble(
        grid,
        model.clone(),
        fs.f,
        gs.g,
        gs.eta,
        fs.phi_i,
        gs.phi_b,
        diagnostics,
        opts.exec,
    ))
}

#[cfg(test)]
mod tests;
