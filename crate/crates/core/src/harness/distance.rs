//! Distances between the N-particle system and its limit.

use crate::exec::Exec;
use crate::limit::{CharacteristicField, SolveError};
use crate::sim::{AnchorTrace, EmpiricalSnapshot, TaggedTrace};
use crate::tagged::TaggedPath;

/// Limit tail masses `U_a(k / N, t)` at the breakpoints `k = 0..=N`.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitProfile {
    pub n: usize,
    pub time: f64,
    /// `values[a][k]`.
    pub values: Vec<Vec<f64>>,
}

impl LimitProfile {
    pub fn from_field(field: &CharacteristicField, n: usize, t: f64, exec: Exec) -> Result<LimitProfile, SolveError> {
        let rows = exec.map(n + 1, |k| field.u_all(k as f64 / n as f64, t));
        let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_rows(n, t, field.num_types(), rows))
    }

    /// Tabulates `u(y)` (one entry per type) at the breakpoints.
    pub fn from_fn(n: usize, t: f64, num_types: usize, u: impl Fn(f64) -> Vec<f64>) -> LimitProfile {
        let rows = (0..=n).map(|k| u(k as f64 / n as f64)).collect();
        Self::from_rows(n, t, num_types, rows)
    }

    fn from_rows(n: usize, time: f64, num_types: usize, rows: Vec<Vec<f64>>) -> LimitProfile {
        let mut values = vec![Vec::with_capacity(n + 1); num_types];
        for row in rows {
            for (a, v) in row.into_iter().enumerate() {
                values[a].push(v);
            }
        }
        LimitProfile { n, time, values }
    }
}

/// Sup over `y in [0,1]` of `sum_a |U^N_a(y) - U_a(y)|`, certified off the
/// breakpoints.
///
/// On the cell `((k-1)/N, k/N]` the step function is the constant
/// `tails[a][k] / N` while the non-increasing `U_a` stays between its values
/// at the cell ends, so the worse of the two end differences bounds the
/// cell. The result is an upper bound that is exact up to the modulus of
/// `U` over one cell.
pub fn sup_distance_monotone(step: &EmpiricalSnapshot, limit: &LimitProfile) -> f64 {
    assert_eq!(step.n, limit.n, "snapshot and limit profile use different N");
    let n = step.n as f64;
    let mut worst = (0..limit.values.len())
        .map(|a| (step.tails[a][0] as f64 / n - limit.values[a][0]).abs())
        .sum::<f64>();
    for k in 1..=step.n {
        let cell: f64 = limit
            .values
            .iter()
            .zip(&step.tails)
            .map(|(u, tail)| {
                let c = tail[k] as f64 / n;
                (c - u[k - 1]).abs().max((c - u[k]).abs())
            })
            .sum();
        worst = worst.max(cell);
    }
    worst
}

/// Max over the breakpoints only; never larger than
/// [`sup_distance_monotone`].
pub fn grid_max_distance(step: &EmpiricalSnapshot, limit: &LimitProfile) -> f64 {
    assert_eq!(step.n, limit.n, "snapshot and limit profile use different N");
    let n = step.n as f64;
    (0..=step.n)
        .map(|k| {
            limit
                .values
                .iter()
                .zip(&step.tails)
                .map(|(u, tail)| (tail[k] as f64 / n - u[k]).abs())
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// Max of `|Y^N_C(t) - y_C(t)|` over the given times at or after the anchor
/// time.
pub fn characteristic_distance(
    trace: &AnchorTrace,
    times: &[f64],
    y_c: impl Fn(f64) -> Result<f64, SolveError>,
) -> Result<f64, SolveError> {
    let mut worst = 0.0f64;
    for &t in times.iter().filter(|&&t| t >= trace.anchor.t0) {
        // value_at only fails before t0, which is filtered out
        let yn = trace.value_at(t).expect("time after anchor");
        worst = worst.max((yn - y_c(t)?).abs());
    }
    Ok(worst)
}

/// `sup_{t <= T} |Y^N_i(t) - Y_i(t)|` for a piecewise-constant discrete path
/// and a piecewise-linear limit path. The difference is linear between the
/// union of their breakpoints, so the one-sided limits at those points give
/// the exact sup.
pub fn tagged_distance(discrete: &TaggedTrace, limit: &TaggedPath, horizon: f64) -> f64 {
    let mut times: Vec<f64> = discrete
        .path
        .iter()
        .map(|p| p.0)
        .chain(limit.samples.iter().map(|p| p.0))
        .filter(|&t| t <= horizon)
        .collect();
    times.push(horizon);
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut worst = 0.0f64;
    for &t in &times {
        worst = worst.max((discrete.value_at(t) - limit.value_at(t)).abs());
        if t > 0.0 {
            worst = worst.max((step_before(discrete, t) - linear_before(limit, t)).abs());
        }
    }
    worst
}

fn step_before(path: &TaggedTrace, t: f64) -> f64 {
    let k = path.path.partition_point(|&(s, _)| s < t);
    path.path[k.max(1) - 1].1
}

fn linear_before(path: &TaggedPath, t: f64) -> f64 {
    let samples = &path.samples;
    let i = samples.partition_point(|&(s, _)| s < t);
    match (i.checked_sub(1).map(|j| samples[j]), samples.get(i)) {
        (_, Some(&(s1, y1))) if s1 == t => y1,
        (Some((s0, y0)), Some(&(s1, y1))) => y0 + (y1 - y0) * (t - s0) / (s1 - s0),
        (Some((_, y0)), None) => y0,
        (None, _) => samples[0].1,
    }
}
