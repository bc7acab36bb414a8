//! Exact event-driven simulation of the N-particle ranking process.
//!
//! Candidate jump times come from Poisson clocks at the certified rate
//! bound `R`. Untagged particles share one merged clock of rate `(N - L) R`
//! that picks a uniform untagged particle; each of the `L` tagged particles
//! owns a clock of rate `R` on its own random stream, so its randomness is
//! the same for every `N`. A candidate of particle `i` at time `s` is
//! accepted with probability `w_{a(i)}(Y_i(s-), s) / R`, in which case `i`
//! moves to the front.

mod io;
mod state;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelSpec, TypeAssignment};
use crate::rng::{tagged_stream, Stream, StreamCounter, MERGED_STREAM};

pub use io::{write_snapshots_csv, write_tagged_csv, SimManifest};
pub use state::{EmpiricalSnapshot, ParticleState};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("anchor ({y0}, {t0}) is neither an initial point (t0 = 0) nor a boundary point (y0 = 0) in range")]
    InvalidAnchor { y0: f64, t0: f64 },
    #[error("anchor ({y0}, {t0}) was not registered")]
    UnknownAnchor { y0: f64, t0: f64 },
    #[error("time {t} is before anchor time {t0}")]
    BeforeAnchor { t: f64, t0: f64 },
    #[error("snapshot time {0} is outside [0, horizon]")]
    InvalidSnapshotTime(f64),
    #[error("horizon {horizon} must be positive and at most the model horizon {model}")]
    InvalidHorizon { horizon: f64, model: f64 },
    #[error("model has no rate bound")]
    MissingBound,
    #[error("assignment has {got} types, model has {expected}")]
    AssignmentMismatch { got: usize, expected: usize },
    #[error("tagged particle {0} does not exist or is tagged twice")]
    BadTag(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub y0: f64,
    pub t0: f64,
}

impl Anchor {
    pub fn new(y0: f64, t0: f64) -> Anchor {
        Anchor { y0, t0 }
    }

    /// Initial points `[0,1] x {0}` and boundary points `{0} x [0,T]`.
    pub fn validate(&self, horizon: f64) -> Result<(), SimError> {
        let initial = self.t0 == 0.0 && (0.0..=1.0).contains(&self.y0);
        let boundary = self.y0 == 0.0 && (0.0..=horizon).contains(&self.t0);
        if initial || boundary {
            Ok(())
        } else {
            Err(SimError::InvalidAnchor {
                y0: self.y0,
                t0: self.t0,
            })
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub horizon: f64,
    pub seed: u64,
    pub snap_times: Vec<f64>,
    pub anchors: Vec<Anchor>,
    /// Particle ids whose paths are recorded; entry `j` uses stream `1 + j`.
    pub tagged: Vec<usize>,
}

/// The discrete characteristic `Y^N_C` of one anchor: particles at ranks
/// `>= N y0 + 1` at time `t0`, and the times at which each of them first
/// jumps after `t0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnchorTrace {
    pub anchor: Anchor,
    pub n: usize,
    pub eligible: usize,
    /// Sorted first-jump times.
    pub first_jumps: Vec<f64>,
}

impl AnchorTrace {
    pub fn value_at(&self, t: f64) -> Result<f64, SimError> {
        if t < self.anchor.t0 {
            return Err(SimError::BeforeAnchor { t, t0: self.anchor.t0 });
        }
        let count = self.first_jumps.partition_point(|&s| s <= t);
        Ok(self.anchor.y0 + count as f64 / self.n as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaggedTrace {
    pub particle: usize,
    pub type_index: usize,
    pub stream: u64,
    /// `(time, Y_i(time))` at time 0 and after every change.
    pub path: Vec<(f64, f64)>,
    /// Candidate times of this particle's clock that were accepted.
    pub jumps: Vec<f64>,
}

impl TaggedTrace {
    pub fn value_at(&self, t: f64) -> f64 {
        let k = self.path.partition_point(|&(s, _)| s <= t);
        self.path[k.max(1) - 1].1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimOutput {
    pub n: usize,
    pub seed: u64,
    pub horizon: f64,
    pub rate_bound: f64,
    pub snapshots: Vec<EmpiricalSnapshot>,
    pub anchors: Vec<AnchorTrace>,
    pub tagged: Vec<TaggedTrace>,
    pub jump_count: Vec<u32>,
    pub candidates: u64,
    pub accepted: u64,
    pub counters: Vec<StreamCounter>,
    /// Initial ranks of particles in final order, front first.
    pub final_order: Vec<usize>,
}

impl SimOutput {
    pub fn track_yc(&self, anchor: Anchor, t: f64) -> Result<f64, SimError> {
        self.anchors
            .iter()
            .find(|a| a.anchor == anchor)
            .ok_or(SimError::UnknownAnchor {
                y0: anchor.y0,
                t0: anchor.t0,
            })?
            .value_at(t)
    }

    pub fn snapshot_at(&self, time: f64) -> Option<&EmpiricalSnapshot> {
        self.snapshots.iter().find(|s| s.time == time)
    }
}

const NOT_ELIGIBLE: u8 = 0;
const WAITING: u8 = 1;
const JUMPED: u8 = 2;

struct AnchorState {
    trace: AnchorTrace,
    marks: Vec<u8>,
    active: bool,
}

/// Pending bookkeeping at fixed times, processed before any candidate at a
/// later or equal time.
#[derive(Clone, Copy)]
enum Mark {
    Anchor(usize),
    Snapshot(usize),
}

pub fn simulate(m: &ModelSpec, asg: &TypeAssignment, cfg: &SimConfig) -> Result<SimOutput, SimError> {
    let r = m.rate_bound.ok_or(SimError::MissingBound)?;
    let horizon = cfg.horizon;
    if !(horizon > 0.0 && horizon <= m.horizon) {
        return Err(SimError::InvalidHorizon {
            horizon,
            model: m.horizon,
        });
    }
    if asg.num_types != m.num_types() {
        return Err(SimError::AssignmentMismatch {
            got: asg.num_types,
            expected: m.num_types(),
        });
    }
    for &t in &cfg.snap_times {
        if !(0.0..=horizon).contains(&t) {
            return Err(SimError::InvalidSnapshotTime(t));
        }
    }
    for a in &cfg.anchors {
        a.validate(horizon)?;
    }
    let n = asg.n;
    let mut is_tagged = vec![false; n];
    for &p in &cfg.tagged {
        if p >= n || is_tagged[p] {
            return Err(SimError::BadTag(p));
        }
        is_tagged[p] = true;
    }
    let untagged: Vec<usize> = (0..n).filter(|&i| !is_tagged[i]).collect();
    let nf = n as f64;

    let mut state = ParticleState::new(asg);
    let rates: Vec<_> = m.types.iter().map(|t| t.rate.clone()).collect();

    let mut marks: Vec<(f64, Mark)> = cfg
        .anchors
        .iter()
        .enumerate()
        .map(|(i, a)| (a.t0, Mark::Anchor(i)))
        .chain(cfg.snap_times.iter().enumerate().map(|(i, &t)| (t, Mark::Snapshot(i))))
        .collect();
    // stable: anchors before snapshots at equal times
    marks.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut next_mark = 0;

    let mut anchors: Vec<AnchorState> = cfg
        .anchors
        .iter()
        .map(|&anchor| AnchorState {
            trace: AnchorTrace {
                anchor,
                n,
                eligible: 0,
                first_jumps: Vec::new(),
            },
            marks: Vec::new(),
            active: false,
        })
        .collect();
    let mut snapshots: Vec<Option<EmpiricalSnapshot>> = vec![None; cfg.snap_times.len()];

    let mut tagged: Vec<TaggedTrace> = cfg
        .tagged
        .iter()
        .enumerate()
        .map(|(j, &p)| TaggedTrace {
            particle: p,
            type_index: asg.type_of[p],
            stream: tagged_stream(j),
            path: vec![(0.0, (state.rank(p) - 1) as f64 / nf)],
            jumps: Vec::new(),
        })
        .collect();
    let mut tag_rank: Vec<usize> = cfg.tagged.iter().map(|&p| state.rank(p)).collect();

    let merged_rate = untagged.len() as f64 * r;
    let mut merged = Stream::new(cfg.seed, MERGED_STREAM);
    let mut next_merged = merged.exp_gap(merged_rate);
    let mut tag_streams: Vec<Stream> = (0..cfg.tagged.len())
        .map(|j| Stream::new(cfg.seed, tagged_stream(j)))
        .collect();
    let mut next_tag: Vec<f64> = tag_streams.iter_mut().map(|s| s.exp_gap(r)).collect();

    let mut candidates = 0u64;
    let mut accepted = 0u64;

    loop {
        // earliest clock; ties go to the merged clock, then tag order
        let mut s = next_merged;
        let mut who: Option<usize> = None;
        for (j, &t) in next_tag.iter().enumerate() {
            if t < s {
                s = t;
                who = Some(j);
            }
        }
        let stop = s > horizon;
        let limit = if stop { horizon } else { s };
        while next_mark < marks.len() && marks[next_mark].0 <= limit {
            let (t, mark) = marks[next_mark];
            state.now = t;
            match mark {
                Mark::Anchor(i) => {
                    let a = &mut anchors[i];
                    let min_rank = (nf * a.trace.anchor.y0 - 1e-9).ceil().max(0.0) as usize + 1;
                    a.marks = (0..n)
                        .map(|p| {
                            if state.rank(p) >= min_rank {
                                WAITING
                            } else {
                                NOT_ELIGIBLE
                            }
                        })
                        .collect();
                    a.trace.eligible = n + 1 - min_rank.min(n + 1);
                    a.active = true;
                }
                Mark::Snapshot(i) => {
                    if let Err(e) = state.check_permutation() {
                        panic!("recency list corrupted at t={t}: {e}");
                    }
                    snapshots[i] = Some(state.snapshot(t));
                }
            }
            next_mark += 1;
        }
        if stop {
            break;
        }
        state.now = s;
        candidates += 1;

        let (particle, u) = match who {
            None => {
                let p = untagged[merged.index(untagged.len())];
                let u = merged.uniform();
                next_merged = s + merged.exp_gap(merged_rate);
                (p, u)
            }
            Some(j) => {
                let u = tag_streams[j].uniform();
                next_tag[j] = s + tag_streams[j].exp_gap(r);
                (cfg.tagged[j], u)
            }
        };
        let rank = state.rank(particle);
        let y = (rank - 1) as f64 / nf;
        let w = rates[asg.type_of[particle]].value(y, s);
        if u * r >= w {
            continue;
        }
        accepted += 1;
        let old = state.move_to_front(particle);
        debug_assert_eq!(old, rank);
        for a in anchors.iter_mut().filter(|a| a.active) {
            if a.marks[particle] == WAITING {
                a.marks[particle] = JUMPED;
                a.trace.first_jumps.push(s);
            }
        }
        for (j, tr) in tagged.iter_mut().enumerate() {
            if tr.particle == particle {
                tag_rank[j] = 1;
                tr.jumps.push(s);
                tr.path.push((s, 0.0));
            } else if tag_rank[j] < old {
                tag_rank[j] += 1;
                tr.path.push((s, (tag_rank[j] - 1) as f64 / nf));
            }
        }
    }

    let mut counters = vec![merged.counter()];
    counters.extend(tag_streams.iter().map(|s| s.counter()));
    let order = state.order();
    Ok(SimOutput {
        n,
        seed: cfg.seed,
        horizon,
        rate_bound: r,
        snapshots: snapshots
            .into_iter()
            .map(|s| s.expect("every snapshot time is reached"))
            .collect(),
        anchors: anchors.into_iter().map(|a| a.trace).collect(),
        tagged,
        jump_count: state.jump_count.clone(),
        candidates,
        accepted,
        counters,
        final_order: order.iter().map(|&p| asg.initial_rank[p]).collect(),
    })
}
