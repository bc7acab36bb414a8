//! Order-statistics list of particles with move-to-front.
//!
//! Particles occupy slots of a larger array; a Fenwick tree over slot
//! occupancy turns "rank of particle i" into a prefix count. A jump frees
//! the particle's slot and claims the next free slot in front of the
//! current first one. When the front runs out the list is compacted to the
//! back of the array, which happens once every `max(N, 64)` jumps.

use serde::{Deserialize, Serialize};

use crate::model::TypeAssignment;

struct Fenwick {
    tree: Vec<u32>,
}

impl Fenwick {
    fn from_bits(bits: &[bool]) -> Fenwick {
        let n = bits.len();
        let mut tree = vec![0u32; n + 1];
        for (i, &b) in bits.iter().enumerate() {
            tree[i + 1] += u32::from(b);
            let parent = (i + 1) + ((i + 1) & (i + 1).wrapping_neg());
            if parent <= n {
                tree[parent] += tree[i + 1];
            }
        }
        Fenwick { tree }
    }

    #[inline]
    fn add(&mut self, slot: usize, delta: i32) {
        let mut i = slot + 1;
        while i < self.tree.len() {
            self.tree[i] = self.tree[i].wrapping_add_signed(delta);
            i += i & i.wrapping_neg();
        }
    }

    /// Number of occupied slots in `0..=slot`.
    #[inline]
    fn prefix(&self, slot: usize) -> u32 {
        let mut i = slot + 1;
        let mut s = 0;
        while i > 0 {
            s += self.tree[i];
            i &= i - 1;
        }
        s
    }
}

/// Per-type tail counts at one instant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSnapshot {
    pub time: f64,
    pub n: usize,
    /// `tails[a][k]` = number of type-`a` particles with rank `>= k + 1`.
    pub tails: Vec<Vec<u32>>,
}

impl EmpiricalSnapshot {
    /// Index `k` of the tail `{rank >= N y + 1}`.
    #[inline]
    pub fn tail_index(&self, y: f64) -> usize {
        let k = (self.n as f64 * y - 1e-9).ceil();
        k.clamp(0.0, self.n as f64) as usize
    }

    /// `U^N(a, y)` for every type.
    pub fn u(&self, y: f64) -> Vec<f64> {
        let k = self.tail_index(y);
        self.tails.iter().map(|t| t[k] as f64 / self.n as f64).collect()
    }

    pub fn u_type(&self, a: usize, y: f64) -> f64 {
        self.tails[a][self.tail_index(y)] as f64 / self.n as f64
    }
}

pub struct ParticleState {
    n: usize,
    type_of: Vec<usize>,
    num_types: usize,
    slot_of: Vec<usize>,
    /// Particle at each slot, `usize::MAX` when empty.
    slots: Vec<usize>,
    fenwick: Fenwick,
    /// Next slot to hand out is `front - 1`.
    front: usize,
    pub now: f64,
    pub jump_count: Vec<u32>,
}

const EMPTY: usize = usize::MAX;

impl ParticleState {
    pub fn new(asg: &TypeAssignment) -> ParticleState {
        let n = asg.n;
        let cap = n + n.max(64);
        let base = cap - n;
        let mut slots = vec![EMPTY; cap];
        let mut slot_of = vec![0; n];
        for (i, &r) in asg.initial_rank.iter().enumerate() {
            slot_of[i] = base + r - 1;
            slots[base + r - 1] = i;
        }
        let bits: Vec<bool> = slots.iter().map(|&p| p != EMPTY).collect();
        ParticleState {
            n,
            type_of: asg.type_of.clone(),
            num_types: asg.num_types,
            slot_of,
            slots,
            fenwick: Fenwick::from_bits(&bits),
            front: base,
            now: 0.0,
            jump_count: vec![0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn type_of(&self, i: usize) -> usize {
        self.type_of[i]
    }

    /// 1-based rank of particle `i`.
    #[inline]
    pub fn rank(&self, i: usize) -> usize {
        self.fenwick.prefix(self.slot_of[i]) as usize
    }

    /// Moves `i` to rank 1 and returns its previous rank.
    pub fn move_to_front(&mut self, i: usize) -> usize {
        let old = self.rank(i);
        if old == 1 {
            self.jump_count[i] += 1;
            return 1;
        }
        if self.front == 0 {
            self.compact();
        }
        let s = self.slot_of[i];
        self.slots[s] = EMPTY;
        self.fenwick.add(s, -1);
        self.front -= 1;
        self.slots[self.front] = i;
        self.slot_of[i] = self.front;
        self.fenwick.add(self.front, 1);
        self.jump_count[i] += 1;
        debug_assert_eq!(self.rank(i), 1);
        debug_assert!(self.slots[self.slot_of[i]] == i);
        old
    }

    fn compact(&mut self) {
        let cap = self.slots.len();
        let order: Vec<usize> = self.slots.iter().copied().filter(|&p| p != EMPTY).collect();
        debug_assert_eq!(order.len(), self.n);
        let base = cap - self.n;
        self.slots.fill(EMPTY);
        for (k, &p) in order.iter().enumerate() {
            self.slots[base + k] = p;
            self.slot_of[p] = base + k;
        }
        let bits: Vec<bool> = self.slots.iter().map(|&p| p != EMPTY).collect();
        self.fenwick = Fenwick::from_bits(&bits);
        self.front = base;
    }

    /// Particle ids front to back.
    pub fn order(&self) -> Vec<usize> {
        self.slots[self.front..]
            .iter()
            .copied()
            .filter(|&p| p != EMPTY)
            .collect()
    }

    /// Verifies that ranks form a permutation of `1..=N`.
    pub fn check_permutation(&self) -> Result<(), String> {
        let order = self.order();
        if order.len() != self.n {
            return Err(format!("{} particles in the list, expected {}", order.len(), self.n));
        }
        let mut seen = vec![false; self.n];
        for (k, &p) in order.iter().enumerate() {
            if p >= self.n || seen[p] {
                return Err(format!("particle {p} repeated or out of range"));
            }
            seen[p] = true;
            if self.rank(p) != k + 1 {
                return Err(format!(
                    "particle {p} at position {} reports rank {}",
                    k + 1,
                    self.rank(p)
                ));
            }
        }
        Ok(())
    }

    pub fn snapshot(&self, time: f64) -> EmpiricalSnapshot {
        let mut tails = vec![vec![0u32; self.n + 1]; self.num_types];
        let order = self.order();
        for k in (0..self.n).rev() {
            let a = self.type_of[order[k]];
            for (b, tail) in tails.iter_mut().enumerate() {
                tail[k] = tail[k + 1] + u32::from(a == b);
            }
        }
        EmpiricalSnapshot { time, n: self.n, tails }
    }

    /// `U^N(a, y)` at the current time.
    pub fn empirical_u(&self, y: f64) -> Vec<f64> {
        self.snapshot(self.now).u(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn asg(types: &[usize], a: usize) -> TypeAssignment {
        TypeAssignment {
            n: types.len(),
            num_types: a,
            type_of: types.to_vec(),
            initial_rank: (1..=types.len()).collect(),
        }
    }

    #[test]
    fn moves_match_a_naive_list() {
        let n = 10;
        let mut st = ParticleState::new(&asg(&vec![0; n], 1));
        let mut naive: Vec<usize> = (0..n).collect();
        let mut x: u64 = 12345;
        for _ in 0..500 {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let i = (x >> 33) as usize % n;
            let pos = naive.iter().position(|&p| p == i).unwrap();
            naive.remove(pos);
            naive.insert(0, i);
            assert_eq!(st.move_to_front(i), pos + 1);
            assert_eq!(st.order(), naive);
        }
        st.check_permutation().unwrap();
        assert_eq!(st.jump_count.iter().sum::<u32>(), 500);
    }

    #[test]
    fn empirical_u_examples() {
        // type 1 at ranks 2 and 4
        let st = ParticleState::new(&asg(&[0, 1, 0, 1], 2));
        assert_eq!(st.empirical_u(0.0), vec![0.5, 0.5]);
        assert_eq!(st.empirical_u(1.0), vec![0.0, 0.0]);
        assert_eq!(st.empirical_u(0.5)[1], 0.25);
        let snap = st.snapshot(0.0);
        for k in 0..=4 {
            let y = k as f64 / 4.0;
            let total: f64 = snap.u(y).iter().sum();
            assert_eq!(total, (4.0 * (1.0 - y)).floor() / 4.0);
        }
    }

    #[test]
    fn single_particle_stays_in_front() {
        let mut st = ParticleState::new(&asg(&[0], 1));
        for _ in 0..200 {
            assert_eq!(st.move_to_front(0), 1);
        }
        assert_eq!(st.rank(0), 1);
    }
}
