use serde::{Deserialize, Serialize};

use super::grid::{lerp, locate, Grid};
use super::picard::IterationLog;
use super::{Gamma, SolveError};
use crate::model::ModelSpec;

/// Domain slack for query points, absorbing rounding in callers.
const SLACK: f64 = 1e-12;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub f: IterationLog,
    pub g: IterationLog,
    /// One log per type per outer `g` iteration, in order.
    pub eta: Vec<IterationLog>,
    /// Per type, sup over `t` of the discrete defect of
    /// `int_0^t eta G du = 1 + int rho' E dz`.
    pub identity_defect: Vec<f64>,
}

/// Solved limit objects on a grid, immutable and cheap to query.
#[derive(Clone, Debug)]
pub struct CharacteristicField {
    pub grid: Grid,
    model: ModelSpec,
    /// `f(y_j, t_k)` at `j * (K+1) + k`.
    pub f: Vec<f64>,
    /// `g(s_i, t_k)` at `i * (K+1) + k`, zero for `s_i >= t_k`.
    pub g: Vec<f64>,
    /// `eta_a(t_k)`.
    pub eta: Vec<Vec<f64>>,
    phi_i: Vec<Vec<f64>>,
    phi_b: Vec<Vec<f64>>,
    /// `U_a(y_j, t_k)`.
    u_nodes: Vec<Vec<f64>>,
    /// `(dw_a/dy) U_a` at nodes.
    flux: Vec<Vec<f64>>,
    /// `int_{y_j}^1 (dw_a/dz) U_a dz` at `t_k`.
    tail: Vec<Vec<f64>>,
    pub diagnostics: Diagnostics,
}

impl CharacteristicField {
    pub(crate) fn assemble(
        grid: Grid,
        model: ModelSpec,
        f: Vec<f64>,
        g: Vec<f64>,
        eta: Vec<Vec<f64>>,
        phi_i: Vec<Vec<f64>>,
        phi_b: Vec<Vec<f64>>,
        diagnostics: Diagnostics,
        exec: crate::Exec,
    ) -> CharacteristicField {
        let na = model.num_types();
        let (mp, kp) = (grid.mp(), grid.kp());
        let mut field = CharacteristicField {
            grid,
            model,
            f,
            g,
            eta,
            phi_i,
            phi_b,
            u_nodes: Vec::new(),
            flux: Vec::new(),
            tail: Vec::new(),
            diagnostics,
        };
        // U and the tail integral of V, column by column
        let cols: Vec<Vec<f64>> = exec.map(kp, |k| {
            let t = grid.t(k);
            let mut out = vec![0.0; 3 * na * mp];
            for j in 0..mp {
                let gamma = field.invert_unchecked(grid.y(j), t);
                for a in 0..na {
                    let u = field.phi_unchecked(a, gamma, t);
                    out[a * mp + j] = u;
                    out[(na + a) * mp + j] = field.model.types[a].rate_dy.value(grid.y(j), t) * u;
                }
            }
            for a in 0..na {
                let base = (2 * na + a) * mp;
                for j in (0..mp - 1).rev() {
                    let h = &out[(na + a) * mp..(na + a + 1) * mp];
                    let add = 0.5 * grid.dy() * (h[j] + h[j + 1]);
                    out[base + j] = out[base + j + 1] + add;
                }
            }
            out
        });
        let mut u_nodes = vec![vec![0.0; mp * kp]; na];
        let mut flux = vec![vec![0.0; mp * kp]; na];
        let mut tail = vec![vec![0.0; mp * kp]; na];
        for (k, col) in cols.iter().enumerate() {
            for a in 0..na {
                for j in 0..mp {
                    u_nodes[a][j * kp + k] = col[a * mp + j];
                    flux[a][j * kp + k] = col[(na + a) * mp + j];
                    tail[a][j * kp + k] = col[(2 * na + a) * mp + j];
                }
            }
        }
        field.u_nodes = u_nodes;
        field.flux = flux;
        field.tail = tail;
        field
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn num_types(&self) -> usize {
        self.model.num_types()
    }

    pub fn horizon(&self) -> f64 {
        self.grid.horizon
    }

    fn check_y(&self, y: f64) -> Result<f64, SolveError> {
        if (-SLACK..=1.0 + SLACK).contains(&y) {
            Ok(y.clamp(0.0, 1.0))
        } else {
            Err(SolveError::OutOfDomain(format!("y = {y} is outside [0, 1]")))
        }
    }

    fn check_t(&self, t: f64) -> Result<f64, SolveError> {
        let horizon = self.grid.horizon;
        if (-SLACK..=horizon + SLACK * horizon.max(1.0)).contains(&t) {
            Ok(t.clamp(0.0, horizon))
        } else {
            Err(SolveError::OutOfDomain(format!("t = {t} is outside [0, {horizon}]")))
        }
    }

    /// Bilinear interpolation of a row-major `(rows) x (K+1)` array at
    /// fractional row `x` and time `t`.
    #[inline]
    fn bilinear(&self, arr: &[f64], x: f64, row_cells: usize, t: f64) -> f64 {
        let kp = self.grid.kp();
        let (r, th_r) = locate(x, row_cells);
        let (k, th_t) = self.grid.locate_t(t);
        let at = |r: usize| lerp(arr[r * kp + k], arr[r * kp + k + 1], th_t);
        lerp(at(r), at(r + 1), th_r)
    }

    /// `f(y, t)`, bilinear between nodes.
    pub fn f_at(&self, y: f64, t: f64) -> Result<f64, SolveError> {
        let (y, t) = (self.check_y(y)?, self.check_t(t)?);
        Ok(self.bilinear(&self.f, y * self.grid.m as f64, self.grid.m, t))
    }

    /// `g(s, t)` for `s <= t`.
    pub fn g_at(&self, s: f64, t: f64) -> Result<f64, SolveError> {
        let (s, t) = (self.check_t(s)?, self.check_t(t)?);
        if s > t {
            return Err(SolveError::OutOfDomain(format!("g({s}, {t}) needs s <= t")));
        }
        Ok(self.g_unchecked(s, t))
    }

    fn g_unchecked(&self, s: f64, t: f64) -> f64 {
        self.bilinear(&self.g, s / self.grid.dt(), self.grid.k, t)
    }

    pub fn eta_at(&self, a: usize, t: f64) -> Result<f64, SolveError> {
        let t = self.check_t(t)?;
        let (k, th) = self.grid.locate_t(t);
        Ok(lerp(self.eta[a][k], self.eta[a][k + 1], th))
    }

    /// The characteristic curve through `gamma`, evaluated at `t >= t0`.
    pub fn y_c(&self, gamma: Gamma, t: f64) -> Result<f64, SolveError> {
        let t = self.check_t(t)?;
        match gamma {
            Gamma::Initial { y0 } => self.f_at(y0, t),
            Gamma::Boundary { t0 } => {
                if t0 > t {
                    return Err(SolveError::OutOfDomain(format!("t = {t} is before t0 = {t0}")));
                }
                self.g_at(t0, t)
            }
        }
    }

    /// The point of `Gamma` whose characteristic passes through `(y, t)`.
    /// On the boundary branch this is the left-most `s` with `g(s, t) = y`.
    pub fn invert(&self, y: f64, t: f64) -> Result<Gamma, SolveError> {
        let (y, t) = (self.check_y(y)?, self.check_t(t)?);
        Ok(self.invert_unchecked(y, t))
    }

    fn invert_unchecked(&self, y: f64, t: f64) -> Gamma {
        let kp = self.grid.kp();
        let (k, th) = self.grid.locate_t(t);
        let fcol = |j: usize| lerp(self.f[j * kp + k], self.f[j * kp + k + 1], th);
        if y >= fcol(0) {
            // largest j with f(y_j) <= y, by bisection on the increasing column
            let (mut lo, mut hi) = (0, self.grid.m);
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if fcol(mid) <= y {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let (a, b) = (fcol(lo), fcol(lo + 1));
            let frac = if b > a {
                ((y - a) / (b - a)).clamp(0.0, 1.0)
            } else {
                0.0
            };
            return Gamma::Initial {
                y0: ((lo as f64 + frac) * self.grid.dy()).min(1.0),
            };
        }
        if y <= 0.0 {
            return Gamma::Boundary { t0: t };
        }
        // first cell [s_i, s_{i+1}] whose right end has dropped to y
        let gcol = |i: usize| lerp(self.g[i * kp + k], self.g[i * kp + k + 1], th);
        let (mut lo, mut hi) = (0, self.grid.k);
        // invariant: gcol(lo) > y >= gcol(hi)
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if gcol(mid) > y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (a, b) = (gcol(lo), gcol(hi));
        let frac = if a > b {
            ((a - y) / (a - b)).clamp(0.0, 1.0)
        } else {
            0.0
        };
        Gamma::Boundary {
            t0: ((lo as f64 + frac) * self.grid.dt()).min(t),
        }
    }

    /// `phi_a(gamma, t)`: mass of type `a` at or behind the characteristic.
    pub fn phi(&self, a: usize, gamma: Gamma, t: f64) -> Result<f64, SolveError> {
        let t = self.check_t(t)?;
        match gamma {
            Gamma::Initial { y0 } => {
                self.check_y(y0)?;
            }
            Gamma::Boundary { t0 } => {
                self.check_t(t0)?;
            }
        }
        Ok(self.phi_unchecked(a, gamma, t))
    }

    fn phi_unchecked(&self, a: usize, gamma: Gamma, t: f64) -> f64 {
        match gamma {
            Gamma::Initial { y0 } => self.bilinear(&self.phi_i[a], y0 * self.grid.m as f64, self.grid.m, t),
            Gamma::Boundary { t0 } => self.bilinear(&self.phi_b[a], t0 / self.grid.dt(), self.grid.k, t),
        }
    }

    /// `U_a(y, t) = phi_a(gamma_hat(y, t), t)`.
    pub fn u(&self, a: usize, y: f64, t: f64) -> Result<f64, SolveError> {
        let gamma = self.invert(y, t)?;
        Ok(self.phi_unchecked(a, gamma, self.check_t(t)?))
    }

    /// All components of `U(., y, t)`.
    pub fn u_all(&self, y: f64, t: f64) -> Result<Vec<f64>, SolveError> {
        let gamma = self.invert(y, t)?;
        let t = self.check_t(t)?;
        Ok((0..self.num_types()).map(|a| self.phi_unchecked(a, gamma, t)).collect())
    }

    /// `U_a(y_j, t_k)` as stored at grid nodes.
    pub fn u_node(&self, a: usize, j: usize, k: usize) -> f64 {
        self.u_nodes[a][j * self.grid.kp() + k]
    }

    /// `V(h, y, t) = sum_a h_a w_a U_a + int_y^1 sum_a h_a (dw_a/dz) U_a dz`.
    pub fn v(&self, h: &[f64], y: f64, t: f64) -> Result<f64, SolveError> {
        let (y, t) = (self.check_y(y)?, self.check_t(t)?);
        Ok(self.v_unchecked(h, y, t))
    }

    pub(crate) fn v_unchecked(&self, h: &[f64], y: f64, t: f64) -> f64 {
        let gamma = self.invert_unchecked(y, t);
        let (k, th_t) = self.grid.locate_t(t);
        let (j, th_y) = self.grid.locate_y(y);
        let kp = self.grid.kp();
        let mut v = 0.0;
        for (a, &ha) in h.iter().enumerate() {
            if ha == 0.0 {
                continue;
            }
            let ty = &self.model.types[a];
            let local = ty.rate.value(y, t) * self.phi_unchecked(a, gamma, t);
            // tail integral on the two neighbouring columns, with the
            // partial cell [y, y_{j+1}] by the trapezoid rule
            let column = |kk: usize| {
                let tk = self.grid.t(kk);
                let node = (j + 1) * kp + kk;
                let u_y = lerp(self.u_nodes[a][j * kp + kk], self.u_nodes[a][node], th_y);
                let flux_y = ty.rate_dy.value(y, tk) * u_y;
                self.tail[a][node] + 0.5 * (self.grid.y(j + 1) - y) * (flux_y + self.flux[a][node])
            };
            let tail = if th_t > 0.0 {
                lerp(column(k), column(k + 1), th_t)
            } else {
                column(k)
            };
            v += ha * (local + tail);
        }
        v
    }

    /// `max |sum_a U_a(y_j, t_k) - (1 - y_j)|` over grid nodes.
    pub fn solidity_defect(&self) -> f64 {
        let kp = self.grid.kp();
        let mut worst = 0.0f64;
        for j in 0..self.grid.mp() {
            for k in 0..kp {
                let total: f64 = self.u_nodes.iter().map(|u| u[j * kp + k]).sum();
                worst = worst.max((total - (1.0 - self.grid.y(j))).abs());
            }
        }
        worst
    }
}
