use serde::{Deserialize, Serialize};

/// Uniform tensor grid: `M + 1` points on `[0,1]` in `y` (and `s`), `K + 1`
/// points on `[0,T]` in `t`. The boundary-time axis `s` shares the `t` grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub m: usize,
    pub k: usize,
    pub horizon: f64,
}

impl Grid {
    pub fn new(m: usize, k: usize, horizon: f64) -> Grid {
        Grid { m, k, horizon }
    }

    #[inline]
    pub fn dy(&self) -> f64 {
        1.0 / self.m as f64
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.horizon / self.k as f64
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        j as f64 / self.m as f64
    }

    #[inline]
    pub fn t(&self, k: usize) -> f64 {
        self.horizon * k as f64 / self.k as f64
    }

    /// Number of `t` nodes, also the row stride of every field array.
    #[inline]
    pub fn kp(&self) -> usize {
        self.k + 1
    }

    #[inline]
    pub fn mp(&self) -> usize {
        self.m + 1
    }

    /// Cell index and fraction for `t`; `t = T` lands in the last cell at 1.
    #[inline]
    pub fn locate_t(&self, t: f64) -> (usize, f64) {
        locate(t / self.dt(), self.k)
    }

    #[inline]
    pub fn locate_y(&self, y: f64) -> (usize, f64) {
        locate(y * self.m as f64, self.m)
    }
}

#[inline]
pub(crate) fn locate(p: f64, cells: usize) -> (usize, f64) {
    let c = (p.floor().max(0.0) as usize).min(cells - 1);
    (c, (p - c as f64).clamp(0.0, 1.0))
}

#[inline]
pub(crate) fn lerp(a: f64, b: f64, theta: f64) -> f64 {
    a + theta * (b - a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn locate_clamps_to_last_cell() {
        let g = Grid::new(4, 10, 2.0);
        assert_eq!(g.locate_t(2.0), (9, 1.0));
        assert_eq!(g.locate_t(0.0), (0, 0.0));
        let (c, th) = g.locate_t(0.5);
        assert_eq!(c, 2);
        assert!((th - 0.5).abs() < 1e-12);
        assert_eq!(g.locate_y(1.0), (3, 1.0));
        assert_eq!(g.locate_y(0.375), (1, 0.5));
    }
}
