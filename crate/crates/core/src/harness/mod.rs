//! Experiment configuration, convergence studies and report output.

mod config;
mod distance;
mod report;

use std::time::Instant;

use thiserror::Error;

use crate::exec::Exec;
use crate::limit::{solve, CharacteristicField, Gamma, SolveError, SolveOptions};
use crate::model::{make_assignment, AssignMode, ModelError, ModelSpec, TypeAssignment};
use crate::rng::tagged_stream;
use crate::sim::{simulate, Anchor, SimConfig, SimError};
use crate::tagged::{simulate_tagged_limit, TaggedOptions, TaggedPath};

pub use config::{
    default_anchors, default_snap_times, default_tags, ExperimentConfig, SimulateSection, StudySection, TagSpec,
};
pub use distance::{characteristic_distance, grid_max_distance, sup_distance_monotone, tagged_distance, LimitProfile};
pub use report::{
    median, write_distances_csv, write_report_json, ConvergenceReport, MedianDistances, RunDistances, RunTiming,
    StudyTiming,
};

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("model: {0}")]
    Model(#[from] ModelError),
    #[error("limit solve: {0}")]
    Solve(#[from] SolveError),
    #[error("simulation N={n} seed={seed}: {source}")]
    Sim {
        n: usize,
        seed: u64,
        #[source]
        source: SimError,
    },
    #[error("invalid study: {0}")]
    Config(String),
}

/// A fully resolved convergence study.
#[derive(Clone, Debug)]
pub struct StudyConfig {
    pub model: ModelSpec,
    pub solve: SolveOptions,
    pub n_list: Vec<usize>,
    pub seeds: Vec<u64>,
    pub assign: AssignMode,
    pub snap_times: Vec<f64>,
    pub anchors: Vec<Anchor>,
    pub tags: Vec<TagSpec>,
    pub tagged: TaggedOptions,
    /// Pool for the `(N, seed)` runs.
    pub exec: Exec,
}

impl StudyConfig {
    /// Study over `n_list x seeds` with the default times, anchors and tags.
    pub fn new(model: ModelSpec, n_list: Vec<usize>, seeds: Vec<u64>) -> StudyConfig {
        let horizon = model.horizon;
        StudyConfig {
            model,
            solve: SolveOptions::default(),
            n_list,
            seeds,
            assign: AssignMode::Quantile,
            snap_times: default_snap_times(horizon),
            anchors: default_anchors(horizon),
            tags: default_tags(),
            tagged: TaggedOptions::default(),
            exec: Exec::default(),
        }
    }

    fn check(&self) -> Result<(), StudyError> {
        let bad = |msg: String| Err(StudyError::Config(msg));
        if self.n_list.is_empty() || self.seeds.is_empty() {
            return bad("N list and seed list must be non-empty".into());
        }
        if let Some(&n) = self.n_list.iter().find(|&&n| n == 0) {
            return bad(format!("N = {n}"));
        }
        let horizon = self.model.horizon;
        if let Some(t) = self.snap_times.iter().find(|t| !(0.0..=horizon).contains(*t)) {
            return bad(format!("snapshot time {t} outside [0, {horizon}]"));
        }
        for a in &self.anchors {
            a.validate(horizon).map_err(|e| StudyError::Config(e.to_string()))?;
        }
        for tag in &self.tags {
            if tag.type_index >= self.model.num_types() || !(0.0..=1.0).contains(&tag.y) {
                return bad(format!("tag at y={} of type {} is out of range", tag.y, tag.type_index));
            }
        }
        Ok(())
    }
}

/// Report plus wall-clock timings, kept apart so the report is reproducible.
#[derive(Clone, Debug)]
pub struct StudyOutcome {
    pub report: ConvergenceReport,
    pub timing: StudyTiming,
}

/// Particle of type `tag.type_index` whose initial position `(rank - 1) / N`
/// is closest to `tag.y`; lower ranks win ties and each particle is used once.
pub fn pick_tagged(asg: &TypeAssignment, tags: &[TagSpec]) -> Result<Vec<usize>, StudyError> {
    let n = asg.n as f64;
    let mut chosen: Vec<usize> = Vec::with_capacity(tags.len());
    for tag in tags {
        let best = (0..asg.n)
            .filter(|&i| asg.type_of[i] == tag.type_index && !chosen.contains(&i))
            .min_by(|&i, &j| {
                let d = |p: usize| ((asg.initial_rank[p] - 1) as f64 / n - tag.y).abs();
                d(i).total_cmp(&d(j))
                    .then(asg.initial_rank[i].cmp(&asg.initial_rank[j]))
            })
            .ok_or_else(|| {
                StudyError::Config(format!("no free particle of type {} for N = {}", tag.type_index, asg.n))
            })?;
        chosen.push(best);
    }
    Ok(chosen)
}

/// Solves the limit once, runs every `(N, seed)` simulation and measures the
/// distances to the limit.
pub fn run_convergence_study(cfg: &StudyConfig) -> Result<StudyOutcome, StudyError> {
    cfg.check()?;
    let model = &cfg.model;
    model.bound()?;
    let start = Instant::now();
    let field = solve(model, &cfg.solve)?;
    let solve_secs = start.elapsed().as_secs_f64();
    run_study_with_field(cfg, &field, solve_secs)
}

/// [`run_convergence_study`] against an already solved field.
pub fn run_study_with_field(
    cfg: &StudyConfig,
    field: &CharacteristicField,
    solve_secs: f64,
) -> Result<StudyOutcome, StudyError> {
    cfg.check()?;
    let model = &cfg.model;
    let horizon = model.horizon;
    let started = Instant::now();

    let mut n_list = cfg.n_list.clone();
    n_list.sort_unstable();
    n_list.dedup();

    // limit objects shared by every run
    let profiles: Vec<Vec<LimitProfile>> = n_list
        .iter()
        .map(|&n| {
            cfg.snap_times
                .iter()
                .map(|&t| LimitProfile::from_field(field, n, t, cfg.exec))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let gammas = cfg
        .anchors
        .iter()
        .map(|a| Gamma::from_point(a.y0, a.t0, horizon))
        .collect::<Result<Vec<_>, _>>()?;
    let limit_paths: Vec<Vec<TaggedPath>> = cfg
        .exec
        .map(cfg.seeds.len(), |s| {
            cfg.tags
                .iter()
                .enumerate()
                .map(|(j, tag)| {
                    simulate_tagged_limit(
                        field,
                        tag.type_index,
                        tag.y,
                        horizon,
                        cfg.seeds[s],
                        tagged_stream(j),
                        cfg.tagged,
                    )
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .into_iter()
        .collect::<Result<_, _>>()?;
    let limit_secs = started.elapsed().as_secs_f64();

    let pairs: Vec<(usize, usize)> = (0..n_list.len())
        .flat_map(|i| (0..cfg.seeds.len()).map(move |s| (i, s)))
        .collect();
    let runs = cfg.exec.map(pairs.len(), |p| {
        let (i, s) = pairs[p];
        let t0 = Instant::now();
        let run = run_one(
            cfg,
            field,
            n_list[i],
            cfg.seeds[s],
            &profiles[i],
            &gammas,
            &limit_paths[s],
        );
        run.map(|r| (r, t0.elapsed().as_secs_f64()))
    });
    let mut records = Vec::with_capacity(runs.len());
    let mut timings = Vec::with_capacity(runs.len());
    for run in runs {
        let (r, secs) = run?;
        timings.push(RunTiming {
            n: r.n,
            seed: r.seed,
            secs,
        });
        records.push(r);
    }

    let report = ConvergenceReport::assemble(cfg, field, n_list, records);
    let timing = StudyTiming {
        solve_secs,
        limit_secs,
        runs: timings,
        total_secs: solve_secs + started.elapsed().as_secs_f64(),
    };
    Ok(StudyOutcome { report, timing })
}

fn run_one(
    cfg: &StudyConfig,
    field: &CharacteristicField,
    n: usize,
    seed: u64,
    profiles: &[LimitProfile],
    gammas: &[Gamma],
    limit_paths: &[TaggedPath],
) -> Result<RunDistances, StudyError> {
    let model = &cfg.model;
    let sim_err = |source| StudyError::Sim { n, seed, source };
    let asg = make_assignment(model, n, cfg.assign, seed)?;
    let tagged = pick_tagged(&asg, &cfg.tags)?;
    let sim_cfg = SimConfig {
        horizon: model.horizon,
        seed,
        snap_times: cfg.snap_times.clone(),
        anchors: cfg.anchors.clone(),
        tagged: tagged.clone(),
    };
    let out = simulate(model, &asg, &sim_cfg).map_err(sim_err)?;

    let mut d_u = 0.0f64;
    let mut d_u_grid = 0.0f64;
    for profile in profiles {
        let snap = out
            .snapshot_at(profile.time)
            .ok_or_else(|| StudyError::Config(format!("no snapshot at {}", profile.time)))?;
        d_u = d_u.max(sup_distance_monotone(snap, profile));
        d_u_grid = d_u_grid.max(grid_max_distance(snap, profile));
    }

    let mut d_yc_initial: Option<f64> = None;
    let mut d_yc_boundary: Option<f64> = None;
    for (trace, &gamma) in out.anchors.iter().zip(gammas) {
        let d = characteristic_distance(trace, &cfg.snap_times, |t| field.y_c(gamma, t))?;
        let slot = match gamma {
            Gamma::Initial { .. } => &mut d_yc_initial,
            Gamma::Boundary { .. } => &mut d_yc_boundary,
        };
        *slot = Some(slot.map_or(d, |w| w.max(d)));
    }

    let d_tag = out
        .tagged
        .iter()
        .zip(limit_paths)
        .map(|(trace, path)| tagged_distance(trace, path, model.horizon))
        .collect();

    Ok(RunDistances {
        n,
        seed,
        d_u,
        d_u_grid,
        d_yc_initial,
        d_yc_boundary,
        d_tag,
        tagged_particles: tagged,
        candidates: out.candidates,
        accepted: out.accepted,
    })
}
