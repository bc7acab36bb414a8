use serde::{Deserialize, Serialize};

use super::ModelSpec;
use crate::exec::Exec;
use crate::ratelang::{ExprError, RateExpr};

/// Points per axis of the certification grid.
pub const BOUND_GRID: usize = 1001;

/// How a rate bound was obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateBoundDetail {
    /// Certified `R`.
    pub bound: f64,
    /// Largest `max(w, |dw/dy|)` seen at a grid node.
    pub grid_sup: f64,
    /// Worst-case excess of the function over its bilinear interpolant.
    pub padding: f64,
    pub argmax_type: usize,
    pub argmax_y: f64,
    pub argmax_t: f64,
}

/// Grid maxima of one function `F` and of `|F_yy|`, `|F_tt|`.
#[derive(Clone, Copy, Debug)]
struct Scan {
    sup: f64,
    y: f64,
    t: f64,
    curv_y: f64,
    curv_t: f64,
}

/// Maximum of `sign * F` over the grid, plus curvature maxima. Rows are
/// scanned in parallel and merged in index order.
fn scan(f: &RateExpr, fyy: &RateExpr, ftt: &RateExpr, sign: f64, horizon: f64) -> Result<Scan, ExprError> {
    let n = BOUND_GRID;
    let rows = Exec::default().map(n, |i| -> Result<Scan, ExprError> {
        let y = i as f64 / (n - 1) as f64;
        let mut s = Scan {
            sup: f64::NEG_INFINITY,
            y,
            t: 0.0,
            curv_y: 0.0,
            curv_t: 0.0,
        };
        for j in 0..n {
            let t = horizon * j as f64 / (n - 1) as f64;
            let v = sign * f.eval(y, t)?;
            if v > s.sup {
                s.sup = v;
                s.t = t;
            }
            s.curv_y = s.curv_y.max(fyy.eval(y, t)?.abs());
            s.curv_t = s.curv_t.max(ftt.eval(y, t)?.abs());
        }
        Ok(s)
    });
    let mut best: Option<Scan> = None;
    for row in rows {
        let row = row?;
        best = Some(match best {
            None => row,
            Some(b) => Scan {
                sup: if row.sup > b.sup { row.sup } else { b.sup },
                y: if row.sup > b.sup { row.y } else { b.y },
                t: if row.sup > b.sup { row.t } else { b.t },
                curv_y: b.curv_y.max(row.curv_y),
                curv_t: b.curv_t.max(row.curv_t),
            },
        });
    }
    Ok(best.expect("grid is non-empty"))
}

/// `R >= sup_a sup max(w_a, |dw_a/dy|)` over `[0,1] x [0,T]`.
///
/// The grid maximum is padded by the bilinear interpolation error bound
/// `(h_y^2 |F_yy| + h_t^2 |F_tt|) / 8`, with the second partials estimated
/// by their own grid maxima. Functions linear in each variable get no
/// padding at all.
pub fn rate_bound(m: &ModelSpec) -> Result<RateBoundDetail, ExprError> {
    let hy = 1.0 / (BOUND_GRID - 1) as f64;
    let ht = m.horizon / (BOUND_GRID - 1) as f64;
    let pad = |s: &Scan| (hy * hy * s.curv_y + ht * ht * s.curv_t) / 8.0;

    let mut out = RateBoundDetail {
        bound: 0.0,
        grid_sup: 0.0,
        padding: 0.0,
        argmax_type: 0,
        argmax_y: 0.0,
        argmax_t: 0.0,
    };
    for (a, ty) in m.types.iter().enumerate() {
        let w = &ty.rate;
        let wy = &ty.rate_dy;
        let wyy = wy.diff_y()?;
        let wtt = w.diff_t()?.diff_t()?;
        let wyyy = wyy.diff_y()?;
        let wytt = wy.diff_t()?.diff_t()?;
        let candidates = [
            scan(w, &wyy, &wtt, 1.0, m.horizon)?,
            scan(wy, &wyyy, &wytt, 1.0, m.horizon)?,
            scan(wy, &wyyy, &wytt, -1.0, m.horizon)?,
        ];
        for s in candidates {
            let padded = s.sup + pad(&s);
            if padded > out.bound {
                out = RateBoundDetail {
                    bound: padded,
                    grid_sup: s.sup,
                    padding: pad(&s),
                    argmax_type: a,
                    argmax_y: s.y,
                    argmax_t: s.t,
                };
            }
        }
    }
    Ok(out)
}
