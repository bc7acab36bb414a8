use serde::{Deserialize, Serialize};

use super::{ModelError, ModelSpec};
use crate::rng::{Stream, ASSIGNMENT_STREAM};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssignMode {
    /// Deterministic rounding of the tail counts.
    #[default]
    Quantile,
    /// Independent types with a rank-dependent law.
    Iid,
}

/// Types and initial ranks of `N` particles. Particle `i` starts at rank
/// `initial_rank[i]` (1-based).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeAssignment {
    pub n: usize,
    pub num_types: usize,
    pub type_of: Vec<usize>,
    pub initial_rank: Vec<usize>,
}

impl TypeAssignment {
    /// Type of the particle that starts at `rank`.
    pub fn type_at_rank(&self, rank: usize) -> usize {
        // ranks are the identity permutation by construction
        debug_assert_eq!(self.initial_rank[rank - 1], rank);
        self.type_of[rank - 1]
    }

    /// `tails[a][k]` = number of type-`a` particles with initial rank `>= k + 1`,
    /// for `k = 0..=N`.
    pub fn initial_tails(&self) -> Vec<Vec<usize>> {
        let mut by_rank = vec![0; self.n];
        for (i, &r) in self.initial_rank.iter().enumerate() {
            by_rank[r - 1] = self.type_of[i];
        }
        let mut tails = vec![vec![0usize; self.n + 1]; self.num_types];
        for k in (0..self.n).rev() {
            for (a, tail) in tails.iter_mut().enumerate() {
                tail[k] = tail[k + 1] + usize::from(by_rank[k] == a);
            }
        }
        tails
    }

    /// `sup_y sum_a |U^N(a,y,0) - r_a rho_a(y)|`, evaluated at the breakpoints
    /// `y = k/N` and their left limits, where the sup of a step function
    /// minus a monotone function is attained.
    pub fn initial_deviation(&self, m: &ModelSpec) -> f64 {
        let n = self.n as f64;
        let tails = self.initial_tails();
        let mut worst = 0.0f64;
        for k in 0..=self.n {
            // on ((k-1)/N, k/N] the tail set is {rank >= k+1}
            let ys = [k as f64 / n, (k as f64 - 1.0).max(0.0) / n];
            for y in ys {
                let dev: f64 = m
                    .types
                    .iter()
                    .enumerate()
                    .map(|(a, ty)| (tails[a][k] as f64 / n - ty.weight * ty.profile.value(y, 0.0)).abs())
                    .sum();
                worst = worst.max(dev);
            }
        }
        worst
    }
}

pub fn make_assignment(m: &ModelSpec, n: usize, mode: AssignMode, seed: u64) -> Result<TypeAssignment, ModelError> {
    if n == 0 {
        return Err(ModelError::Invalid("particle count must be positive".into()));
    }
    let type_of = match mode {
        AssignMode::Quantile => quantile(m, n)?,
        AssignMode::Iid => iid(m, n, seed),
    };
    Ok(TypeAssignment {
        n,
        num_types: m.num_types(),
        type_of,
        initial_rank: (1..=n).collect(),
    })
}

/// Fills ranks from the back. After placing rank `k`, the tail `{rank >= k}`
/// should hold `N r_a rho_a((k-1)/N)` particles of type `a`; each rank goes to
/// the type furthest below its target (ties to the higher index).
fn quantile(m: &ModelSpec, n: usize) -> Result<Vec<usize>, ModelError> {
    let a_count = m.num_types();
    let nf = n as f64;
    let mut counts = vec![0usize; a_count];
    let mut type_of = vec![0usize; n];
    for k in (1..=n).rev() {
        let y = (k - 1) as f64 / nf;
        let targets: Vec<f64> = m
            .types
            .iter()
            .map(|ty| nf * ty.weight * ty.profile.value(y, 0.0))
            .collect();
        let mut pick = 0;
        let mut best = f64::NEG_INFINITY;
        for a in 0..a_count {
            let deficit = targets[a] - counts[a] as f64;
            if deficit >= best {
                best = deficit;
                pick = a;
            }
        }
        counts[pick] += 1;
        type_of[k - 1] = pick;
        let deviation = (0..a_count)
            .map(|a| (counts[a] as f64 - targets[a]).abs())
            .fold(0.0, f64::max);
        let limit = a_count as f64;
        if deviation > limit {
            return Err(ModelError::InfeasibleAssignment { y, deviation, limit });
        }
    }
    Ok(type_of)
}

/// Rank `k` draws type `a` with probability `-r_a rho_a'` at the cell midpoint.
fn iid(m: &ModelSpec, n: usize, seed: u64) -> Vec<usize> {
    let mut stream = Stream::new(seed, ASSIGNMENT_STREAM);
    let nf = n as f64;
    (1..=n)
        .map(|k| {
            let y = (k as f64 - 0.5) / nf;
            let probs: Vec<f64> = m
                .types
                .iter()
                .map(|ty| (-ty.weight * ty.profile_dy.value(y, 0.0)).max(0.0))
                .collect();
            let total: f64 = probs.iter().sum();
            let mut u = stream.uniform() * total;
            for (a, p) in probs.iter().enumerate() {
                if u < *p {
                    return a;
                }
                u -= p;
            }
            probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{presets, ModelFile, TypeEntry};

    fn spec(f: ModelFile) -> ModelSpec {
        ModelSpec::from_file(&f).unwrap()
    }

    #[test]
    fn single_type_is_trivial() {
        let m = spec(presets::constant(1.0));
        for n in [1, 2, 17] {
            let asg = make_assignment(&m, n, AssignMode::Quantile, 0).unwrap();
            assert!(asg.type_of.iter().all(|&a| a == 0));
            assert_eq!(asg.initial_rank, (1..=n).collect::<Vec<_>>());
        }
    }

    /// Sup deviation of a rank-ordered type vector, for the brute-force search.
    fn deviation(m: &ModelSpec, by_rank: &[usize]) -> f64 {
        let asg = TypeAssignment {
            n: by_rank.len(),
            num_types: m.num_types(),
            type_of: by_rank.to_vec(),
            initial_rank: (1..=by_rank.len()).collect(),
        };
        asg.initial_deviation(m)
    }

    #[test]
    fn four_particles_interleave() {
        let m = spec(presets::two_constant(1.0));
        let asg = make_assignment(&m, 4, AssignMode::Quantile, 0).unwrap();
        assert_eq!(asg.type_of, vec![0, 1, 0, 1]);
        // enumerate the 6 balanced assignments and compare with the best one
        let mut best = f64::INFINITY;
        for mask in 0u32..16 {
            if mask.count_ones() != 2 {
                continue;
            }
            let v: Vec<usize> = (0..4).map(|i| ((mask >> i) & 1) as usize).collect();
            best = best.min(deviation(&m, &v));
        }
        assert!((asg.initial_deviation(&m) - best).abs() < 1e-12);
    }

    #[test]
    fn quantile_deviation_is_small() {
        let m = spec(presets::two_type_space_time(1.0));
        let asg = make_assignment(&m, 1000, AssignMode::Quantile, 0).unwrap();
        let tails = asg.initial_tails();
        let mut sup = 0.0f64;
        for k in 0..=1000 {
            let y = k as f64 / 1000.0;
            for (a, ty) in m.types.iter().enumerate() {
                let diff = (tails[a][k] as f64 / 1000.0 - ty.weight * ty.profile.value(y, 0.0)).abs();
                sup = sup.max(diff);
            }
        }
        assert!(sup <= 2.0 / 1000.0, "{sup}");
        assert!(asg.initial_deviation(&m) <= 4.0 / 1000.0);
    }

    #[test]
    fn iid_mode_is_seeded_and_follows_the_profile() {
        let m = spec(ModelFile {
            types: vec![
                TypeEntry {
                    rate: "1".into(),
                    profile: "(1-y)*(1-y)".into(),
                    weight: 0.5,
                },
                TypeEntry {
                    rate: "1".into(),
                    profile: "2*(1-y)-(1-y)*(1-y)".into(),
                    weight: 0.5,
                },
            ],
            horizon: 1.0,
        });
        let a = make_assignment(&m, 20_000, AssignMode::Iid, 5).unwrap();
        let b = make_assignment(&m, 20_000, AssignMode::Iid, 5).unwrap();
        let c = make_assignment(&m, 20_000, AssignMode::Iid, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        // type 0 density is (1-y), so it is concentrated at small ranks
        let front = a.type_of[..10_000].iter().filter(|&&t| t == 0).count();
        assert!((front as f64 / 10_000.0 - 0.75).abs() < 0.03, "{front}");
        assert!(a.initial_deviation(&m) < 0.03);
    }
}
