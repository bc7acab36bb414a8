//! Fixed-point iterations for `f`, and for the coupled pair `(g, eta)`.
//!
//! All arrays are row-major with stride `K + 1`: `f[j * (K+1) + k]` is
//! `f(y_j, t_k)` and `g[i * (K+1) + k]` is `g(s_i, t_k)`. Integrals against
//! `d rho` use the product rule `sum_j (rho(y_{j+1}) - rho(y_j)) * avg(h)`,
//! which is exact at `t = 0`; time integrals are cumulative trapezoid sums.

use serde::{Deserialize, Serialize};

use super::grid::Grid;
use super::{SolveError, SolveOptions};
use crate::model::ModelSpec;

/// Convergence record of one Picard iteration.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    /// Sup-norm difference between consecutive iterates.
    pub diffs: Vec<f64>,
    pub converged: bool,
}

impl IterationLog {
    /// Largest `diffs[k] / diffs[k-1]` for `k >= from`, ignoring steps once
    /// the differences are at rounding level.
    pub fn worst_ratio(&self, from: usize, floor: f64) -> Option<f64> {
        (from.max(1)..self.diffs.len())
            .filter(|&k| self.diffs[k - 1] > floor)
            .map(|k| self.diffs[k] / self.diffs[k - 1])
            .reduce(f64::max)
    }
}

/// Stalls after `limit` consecutive non-decreasing differences.
struct Watch {
    stage: &'static str,
    limit: usize,
    streak: usize,
}

impl Watch {
    fn push(&mut self, log: &mut IterationLog, diff: f64) -> Result<(), SolveError> {
        if let Some(&prev) = log.diffs.last() {
            if diff >= prev {
                self.streak += 1;
            } else {
                self.streak = 0;
            }
        }
        log.diffs.push(diff);
        if self.streak >= self.limit || !diff.is_finite() {
            return Err(SolveError::NonContraction {
                stage: self.stage,
                iteration: log.diffs.len(),
                diff,
            });
        }
        Ok(())
    }
}

pub(crate) struct FSolution {
    pub f: Vec<f64>,
    /// `phi_i[a][j*(K+1)+k] = -r_a * int_{y_j}^1 rho_a' E_a dz`.
    pub phi_i: Vec<Vec<f64>>,
    /// `E_a(y_j, t_k) = exp(-int_0^t w_a(f(y_j,s), s) ds)` from the last sweep.
    pub e: Vec<Vec<f64>>,
    pub log: IterationLog,
}

fn profile_steps(m: &ModelSpec, grid: &Grid) -> Vec<Vec<f64>> {
    m.types
        .iter()
        .map(|ty| {
            let rho: Vec<f64> = (0..grid.mp()).map(|j| ty.profile.value(grid.y(j), 0.0)).collect();
            rho.windows(2).map(|w| w[1] - w[0]).collect()
        })
        .collect()
}

/// `f_{n+1}(y,t) = 1 + sum_a r_a int_y^1 rho_a'(z) exp(-int_0^t w_a(f_n(z,s),s) ds) dz`,
/// started from `f_0(y,t) = y`.
pub(crate) fn solve_f(m: &ModelSpec, grid: &Grid, opts: &SolveOptions) -> Result<FSolution, SolveError> {
    let (mp, kp) = (grid.mp(), grid.kp());
    let na = m.num_types();
    let dt = grid.dt();
    let steps = profile_steps(m, grid);
    let weights = m.weights();

    let mut prev: Vec<f64> = (0..mp * kp).map(|idx| grid.y(idx / kp)).collect();
    let mut log = IterationLog::default();
    let mut watch = Watch {
        stage: "f",
        limit: opts.stall_limit,
        streak: 0,
    };
    loop {
        // E rows, one task per y node
        let rows: Vec<Vec<f64>> = opts.exec.map(mp, |j| {
            let mut out = vec![0.0; na * kp];
            for (a, ty) in m.types.iter().enumerate() {
                let row = &prev[j * kp..(j + 1) * kp];
                let mut integral = 0.0;
                let mut w_prev = ty.rate.value(row[0], 0.0);
                out[a * kp] = 1.0;
                for k in 1..kp {
                    let w = ty.rate.value(row[k], grid.t(k));
                    integral += 0.5 * dt * (w_prev + w);
                    w_prev = w;
                    out[a * kp + k] = (-integral).exp();
                }
            }
            out
        });
        let mut e = vec![vec![0.0; mp * kp]; na];
        for (j, row) in rows.iter().enumerate() {
            for a in 0..na {
                e[a][j * kp..(j + 1) * kp].copy_from_slice(&row[a * kp..(a + 1) * kp]);
            }
        }
        drop(rows);

        let mut phi_i = vec![vec![0.0; mp * kp]; na];
        for a in 0..na {
            let (phi, ea) = (&mut phi_i[a], &e[a]);
            for j in (0..mp - 1).rev() {
                let c = -0.5 * weights[a] * steps[a][j];
                for k in 0..kp {
                    phi[j * kp + k] = phi[(j + 1) * kp + k] + c * (ea[j * kp + k] + ea[(j + 1) * kp + k]);
                }
            }
        }
        let mut next = vec![1.0; mp * kp];
        for phi in &phi_i {
            for (x, p) in next.iter_mut().zip(phi) {
                *x -= p;
            }
        }
        for j in 0..mp {
            next[j * kp] = grid.y(j);
        }

        let diff = next.iter().zip(&prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        watch.push(&mut log, diff)?;
        prev = next;
        if diff < opts.f_tol || log.diffs.len() >= opts.max_iter {
            log.converged = diff < opts.f_tol;
            return Ok(FSolution { f: prev, phi_i, e, log });
        }
    }
}

pub(crate) struct GSolution {
    /// `(K+1)^2`, zero on and below the diagonal `s >= t`.
    pub g: Vec<f64>,
    /// `phi_a((0, s_i), t_k)`; `1 - sum_a phi_b` is `g` before the diagonal
    /// is pinned to zero.
    pub phi_b: Vec<Vec<f64>>,
    pub eta: Vec<Vec<f64>>,
    pub g_log: IterationLog,
    pub eta_logs: Vec<IterationLog>,
    /// Per type, `max_k |int_0^t eta G du - (1 + int rho' E dz)|`.
    pub identity_defect: Vec<f64>,
}

/// Alternating iteration: for the current `g`, iterate
/// `eta_{n+1}(t) = int_0^t eta_n(u) w(g(u,t),t) G(u,t) du + Q(t)` to
/// convergence, then set `g(s,t) = f(0,t) - sum_a r_a int_0^s eta_a G_a du`.
pub(crate) fn solve_g_eta(
    m: &ModelSpec,
    grid: &Grid,
    fs: &FSolution,
    opts: &SolveOptions,
) -> Result<GSolution, SolveError> {
    let (mp, kp) = (grid.mp(), grid.kp());
    let na = m.num_types();
    let dt = grid.dt();
    let steps = profile_steps(m, grid);
    let weights = m.weights();

    // Q_a(t) = -int_0^1 rho_a'(z) w_a(f(z,t),t) E_a(z,t) dz
    let q: Vec<Vec<f64>> = m
        .types
        .iter()
        .enumerate()
        .map(|(a, ty)| {
            let h = |j: usize, k: usize| ty.rate.value(fs.f[j * kp + k], grid.t(k)) * fs.e[a][j * kp + k];
            (0..kp)
                .map(|k| {
                    let mut h_lo = h(0, k);
                    let mut acc = 0.0;
                    for j in 0..mp - 1 {
                        let h_hi = h(j + 1, k);
                        acc -= steps[a][j] * 0.5 * (h_lo + h_hi);
                        h_lo = h_hi;
                    }
                    acc
                })
                .collect()
        })
        .collect();
    // right side of the identity, 1 + int rho' E dz = 1 - phi_i(0,t) / r_a
    let target: Vec<Vec<f64>> = (0..na)
        .map(|a| (0..kp).map(|k| 1.0 - fs.phi_i[a][k] / weights[a]).collect())
        .collect();
    let f0: Vec<f64> = (0..kp).map(|k| fs.f[k]).collect();

    let mut g = vec![0.0; kp * kp];
    for i in 0..kp {
        for k in i + 1..kp {
            g[i * kp + k] = 1.0;
        }
    }
    let mut g_log = IterationLog::default();
    let mut eta_logs = Vec::new();
    let mut g_watch = Watch {
        stage: "g",
        limit: opts.stall_limit,
        streak: 0,
    };
    loop {
        // Transposed layout, index k*(K+1)+i for u_i <= t_k:
        // gt = G(u_i, t_k), kt = w(g(u_i,t_k), t_k) G(u_i, t_k).
        let rows: Vec<Vec<f64>> = opts.exec.map(kp, |i| {
            let len = kp - i;
            let mut out = vec![0.0; 2 * na * len];
            for (a, ty) in m.types.iter().enumerate() {
                let mut integral = 0.0;
                let mut w_prev = ty.rate.value(g[i * kp + i], grid.t(i));
                for k in i..kp {
                    let w = if k == i {
                        w_prev
                    } else {
                        ty.rate.value(g[i * kp + k], grid.t(k))
                    };
                    if k > i {
                        integral += 0.5 * dt * (w_prev + w);
                    }
                    w_prev = w;
                    let big_g = (-integral).exp();
                    out[(2 * a) * len + (k - i)] = big_g;
                    out[(2 * a + 1) * len + (k - i)] = w * big_g;
                }
            }
            out
        });
        let mut gt = vec![vec![0.0; kp * kp]; na];
        let mut kt = vec![vec![0.0; kp * kp]; na];
        for (i, row) in rows.iter().enumerate() {
            let len = kp - i;
            for a in 0..na {
                for k in i..kp {
                    gt[a][k * kp + i] = row[(2 * a) * len + (k - i)];
                    kt[a][k * kp + i] = row[(2 * a + 1) * len + (k - i)];
                }
            }
        }
        drop(rows);

        let mut eta = Vec::with_capacity(na);
        for a in 0..na {
            let (e, log) = solve_eta(&kt[a], &q[a], dt, kp, opts)?;
            eta.push(e);
            eta_logs.push(log);
        }

        // C_a(s_i, t_k) = int_0^{s_i} eta_a(u) G_a(u, t_k) du
        let cols: Vec<Vec<f64>> = opts.exec.map(kp, |k| {
            let mut out = vec![0.0; na * (k + 1)];
            for a in 0..na {
                let gk = &gt[a][k * kp..k * kp + k + 1];
                let mut acc = 0.0;
                for i in 1..=k {
                    acc += 0.5 * dt * (eta[a][i - 1] * gk[i - 1] + eta[a][i] * gk[i]);
                    out[a * (k + 1) + i] = acc;
                }
            }
            out
        });
        let mut next = vec![0.0; kp * kp];
        let mut phi_b = vec![vec![0.0; kp * kp]; na];
        let mut identity_defect = vec![0.0f64; na];
        for (k, col) in cols.iter().enumerate() {
            for i in 0..=k {
                let mut val = f0[k];
                for a in 0..na {
                    let c = col[a * (k + 1) + i];
                    val -= weights[a] * c;
                    phi_b[a][i * kp + k] = fs.phi_i[a][k] + weights[a] * c;
                }
                if i < k {
                    next[i * kp + k] = val;
                }
            }
            for a in 0..na {
                let d = (col[a * (k + 1) + k] - target[a][k]).abs();
                identity_defect[a] = identity_defect[a].max(d);
                // beyond the diagonal phi_b keeps its diagonal value
                let diag = phi_b[a][k * kp + k];
                for i in k + 1..kp {
                    phi_b[a][i * kp + k] = diag;
                }
            }
        }

        let diff = next.iter().zip(&g).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        g_watch.push(&mut g_log, diff)?;
        g = next;
        if diff < opts.g_tol || g_log.diffs.len() >= opts.max_iter {
            g_log.converged = diff < opts.g_tol;
            return Ok(GSolution {
                g,
                phi_b,
                eta,
                g_log,
                eta_logs,
                identity_defect,
            });
        }
    }
}

/// Picard iteration for one type's `eta`, from `eta_0 = 0`. `kt` is the
/// transposed kernel `w G`; the integral is a trapezoid sum over `u_0..u_k`.
fn solve_eta(
    kt: &[f64],
    q: &[f64],
    dt: f64,
    kp: usize,
    opts: &SolveOptions,
) -> Result<(Vec<f64>, IterationLog), SolveError> {
    let mut eta = vec![0.0; kp];
    let mut log = IterationLog::default();
    let mut watch = Watch {
        stage: "eta",
        limit: opts.stall_limit,
        streak: 0,
    };
    loop {
        let next: Vec<f64> = opts.exec.map(kp, |k| {
            if k == 0 {
                return q[0];
            }
            let col = &kt[k * kp..k * kp + k + 1];
            let mut acc = 0.5 * (eta[0] * col[0] + eta[k] * col[k]);
            for i in 1..k {
                acc += eta[i] * col[i];
            }
            dt * acc + q[k]
        });
        let diff = next.iter().zip(&eta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        watch.push(&mut log, diff)?;
        eta = next;
        if diff < opts.eta_tol || log.diffs.len() >= opts.max_iter {
            log.converged = diff < opts.eta_tol;
            return Ok((eta, log));
        }
    }
}
