//! Limiting motion of a tagged particle.
//!
//! Between jumps the particle drifts with velocity `V(1, Y, t)` (it rides a
//! characteristic); at the accepted times of its own candidate clock it is
//! reset to 0. The clock is drawn from the same stream, in the same order, as
//! the tagged particle of the N-particle simulator, which couples the two.

use serde::{Deserialize, Serialize};

use crate::limit::{CharacteristicField, SolveError};
use crate::rng::Stream;

/// Escape beyond `[0,1]` larger than this is an error rather than rounding.
const DOMAIN_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaggedPath {
    pub type_index: usize,
    pub y0: f64,
    pub seed: u64,
    pub stream: u64,
    /// `(time, position just before the jump)`.
    pub jumps: Vec<(f64, f64)>,
    /// `(time, Y(time))` on the integration grid plus both sides of each jump.
    pub samples: Vec<(f64, f64)>,
}

impl TaggedPath {
    /// Right-continuous value, linear between samples.
    pub fn value_at(&self, t: f64) -> f64 {
        let i = self.samples.partition_point(|&(s, _)| s <= t);
        if i == 0 {
            return self.samples[0].1;
        }
        let (s0, y0) = self.samples[i - 1];
        match self.samples.get(i) {
            Some(&(s1, y1)) if s1 > s0 => y0 + (y1 - y0) * (t - s0) / (s1 - s0),
            _ => y0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaggedOptions {
    /// RK4 steps over `[0, T]`.
    pub steps: usize,
}

impl Default for TaggedOptions {
    fn default() -> Self {
        TaggedOptions { steps: 2000 }
    }
}

/// Integrates `dY = V(1, Y, s) ds` with resets to 0 at accepted candidates of
/// stream `(seed, stream)`, from `Y(0) = y0` up to `horizon`.
pub fn simulate_tagged_limit(
    field: &CharacteristicField,
    type_index: usize,
    y0: f64,
    horizon: f64,
    seed: u64,
    stream: u64,
    opts: TaggedOptions,
) -> Result<TaggedPath, SolveError> {
    let model = field.model();
    let r = model
        .rate_bound
        .ok_or_else(|| SolveError::OutOfDomain("model has no rate bound".into()))?;
    if !(0.0..=1.0).contains(&y0) {
        return Err(SolveError::OutOfDomain(format!(
            "initial position {y0} is outside [0, 1]"
        )));
    }
    if !(horizon > 0.0 && horizon <= field.horizon()) {
        return Err(SolveError::OutOfDomain(format!(
            "horizon {horizon} exceeds the solved range"
        )));
    }
    let rate = &model.types[type_index].rate;
    let ones = vec![1.0; field.num_types()];
    let drift = |y: f64, t: f64| field.v_unchecked(&ones, y.clamp(0.0, 1.0), t.min(horizon));
    let step = |y: f64, t: f64, h: f64| -> Result<f64, SolveError> {
        let k1 = drift(y, t);
        let k2 = drift(y + 0.5 * h * k1, t + 0.5 * h);
        let k3 = drift(y + 0.5 * h * k2, t + 0.5 * h);
        let k4 = drift(y + h * k3, t + h);
        let next = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !(-DOMAIN_TOL..=1.0 + DOMAIN_TOL).contains(&next) {
            return Err(SolveError::OutOfDomain(format!(
                "tagged particle left [0,1]: Y({}) = {next}",
                t + h
            )));
        }
        Ok(next.clamp(0.0, 1.0))
    };

    let mut clock = Stream::new(seed, stream);
    let mut candidate = clock.exp_gap(r);
    let h = horizon / opts.steps as f64;
    let mut t = 0.0;
    let mut y = y0;
    let mut next_node = 1;
    let mut jumps = Vec::new();
    let mut samples = vec![(0.0, y0)];
    while next_node <= opts.steps {
        let node_time = if next_node == opts.steps {
            horizon
        } else {
            next_node as f64 * h
        };
        if candidate <= node_time {
            y = step(y, t, candidate - t)?;
            t = candidate;
            let u = clock.uniform();
            if u * r < rate.value(y, t) {
                jumps.push((t, y));
                samples.push((t, y));
                y = 0.0;
                samples.push((t, 0.0));
            }
            candidate = t + clock.exp_gap(r);
            continue;
        }
        y = step(y, t, node_time - t)?;
        t = node_time;
        samples.push((t, y));
        next_node += 1;
    }
    Ok(TaggedPath {
        type_index,
        y0,
        seed,
        stream,
        jumps,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limit::{solve, Gamma, SolveOptions};
    use crate::model::{presets, ModelSpec};
    use crate::rng::tagged_stream;

    fn field(file: crate::model::ModelFile, n: usize) -> CharacteristicField {
        let m = ModelSpec::load(&file).unwrap();
        solve(&m, &SolveOptions::with_grid(n, n)).unwrap()
    }

    #[test]
    fn zero_rate_rides_its_characteristic() {
        let f = field(presets::with_zero_rate(1.0), 400);
        for y0 in [0.1, 0.5, 0.9] {
            let p = simulate_tagged_limit(&f, 0, y0, 1.0, 7, tagged_stream(0), TaggedOptions::default()).unwrap();
            assert!(p.jumps.is_empty());
            let worst = p
                .samples
                .iter()
                .map(|&(t, y)| (y - f.y_c(Gamma::Initial { y0 }, t).unwrap()).abs())
                .fold(0.0, f64::max);
            assert!(worst < 1e-6, "y0={y0}: {worst}");
        }
    }

    #[test]
    fn constant_rate_drift_before_first_jump() {
        let f = field(presets::constant(1.0), 400);
        // find a seed whose clock has no accepted candidate before ln 2;
        // with w = R = 1 every candidate is accepted
        let seed = (0..1000u64)
            .find(|&s| Stream::new(s, tagged_stream(0)).exp_gap(1.0) > std::f64::consts::LN_2)
            .unwrap();
        let p = simulate_tagged_limit(&f, 0, 0.0, 1.0, seed, tagged_stream(0), TaggedOptions::default()).unwrap();
        let y = p.value_at(std::f64::consts::LN_2);
        assert!((y - 0.5).abs() < 1e-3, "{y}");
    }

    #[test]
    fn resets_follow_boundary_characteristics() {
        let f = field(presets::two_type_space_time(1.0), 200);
        let p = simulate_tagged_limit(&f, 1, 0.3, 1.0, 3, tagged_stream(2), TaggedOptions::default()).unwrap();
        assert!(!p.jumps.is_empty());
        for (n, &(s1, _)) in p.jumps.iter().enumerate() {
            let s2 = p.jumps.get(n + 1).map_or(1.0, |j| j.0);
            for &(t, y) in p.samples.iter().filter(|&&(t, _)| t > s1 && t < s2) {
                let yc = f.y_c(Gamma::Boundary { t0: s1 }, t).unwrap();
                assert!((y - yc).abs() < 1e-3, "after jump at {s1}: Y({t}) = {y}, y_C = {yc}");
            }
        }
        let again = simulate_tagged_limit(&f, 1, 0.3, 1.0, 3, tagged_stream(2), TaggedOptions::default()).unwrap();
        assert_eq!(p, again);
        assert!(p.samples.iter().all(|&(_, y)| (0.0..=1.0).contains(&y)));
    }

    #[test]
    fn jump_gaps_are_exponential() {
        // with a constant rate the accepted gaps are Exp(w) whatever the field
        let f = field(presets::two_constant(4.0), 40);
        // first gaps only: later gaps of a path are length-biased by the horizon
        let mut gaps = Vec::new();
        for seed in 0..1000 {
            let p =
                simulate_tagged_limit(&f, 1, 0.5, 4.0, seed, tagged_stream(0), TaggedOptions { steps: 20 }).unwrap();
            gaps.extend(p.jumps.first().map(|j| j.0));
        }
        gaps.sort_by(f64::total_cmp);
        let n = gaps.len() as f64;
        let ks = gaps
            .iter()
            .enumerate()
            .map(|(i, &g)| {
                let cdf = 1.0 - (-2.0 * g).exp();
                (cdf - i as f64 / n).abs().max((cdf - (i + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max);
        // P(first gap > 4) = e^{-8} is negligible; 1.63 / sqrt(n) is the 1%
        // critical value
        assert!(ks < 1.63 / n.sqrt(), "KS {ks} with {n} gaps");
    }
}
