use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::limit::{CharacteristicField, Grid};
use crate::sim::Anchor;

use super::{StudyConfig, TagSpec};

/// Distances of one `(N, seed)` run. `None` means no anchor of that kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunDistances {
    pub n: usize,
    pub seed: u64,
    /// Certified `sup_{t, y} ||U^N - U||_var` over the snapshot times.
    pub d_u: f64,
    /// Same, breakpoints only.
    pub d_u_grid: f64,
    pub d_yc_initial: Option<f64>,
    pub d_yc_boundary: Option<f64>,
    /// One entry per tag.
    pub d_tag: Vec<f64>,
    pub tagged_particles: Vec<usize>,
    pub candidates: u64,
    pub accepted: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MedianDistances {
    pub n: usize,
    pub d_u: f64,
    pub d_u_grid: f64,
    pub d_yc_initial: Option<f64>,
    pub d_yc_boundary: Option<f64>,
    pub d_tag: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub model_hash: String,
    pub rate_bound: Option<f64>,
    pub horizon: f64,
    pub grid: Grid,
    pub solidity_defect: f64,
    pub n_list: Vec<usize>,
    pub seeds: Vec<u64>,
    pub snap_times: Vec<f64>,
    pub anchors: Vec<Anchor>,
    pub tags: Vec<TagSpec>,
    /// Ordered by `N`, then by position in the seed list.
    pub runs: Vec<RunDistances>,
    pub medians: Vec<MedianDistances>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTiming {
    pub n: usize,
    pub seed: u64,
    pub secs: f64,
}

/// Wall-clock times. Written separately from the report, which must not
/// change between identical runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyTiming {
    pub solve_secs: f64,
    pub limit_secs: f64,
    pub runs: Vec<RunTiming>,
    pub total_secs: f64,
}

/// Median, averaging the middle pair for even counts.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of nothing");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

impl ConvergenceReport {
    pub(super) fn assemble(
        cfg: &StudyConfig,
        field: &CharacteristicField,
        n_list: Vec<usize>,
        runs: Vec<RunDistances>,
    ) -> ConvergenceReport {
        let medians = n_list
            .iter()
            .map(|&n| {
                let rs: Vec<&RunDistances> = runs.iter().filter(|r| r.n == n).collect();
                let med = |f: &dyn Fn(&RunDistances) -> f64| median(&rs.iter().map(|r| f(r)).collect::<Vec<_>>());
                let med_opt = |f: &dyn Fn(&RunDistances) -> Option<f64>| {
                    let v: Option<Vec<f64>> = rs.iter().map(|r| f(r)).collect();
                    v.map(|v| median(&v))
                };
                MedianDistances {
                    n,
                    d_u: med(&|r| r.d_u),
                    d_u_grid: med(&|r| r.d_u_grid),
                    d_yc_initial: med_opt(&|r| r.d_yc_initial),
                    d_yc_boundary: med_opt(&|r| r.d_yc_boundary),
                    d_tag: (0..cfg.tags.len()).map(|j| med(&|r| r.d_tag[j])).collect(),
                }
            })
            .collect();
        ConvergenceReport {
            model_hash: cfg.model.hash(),
            rate_bound: cfg.model.rate_bound,
            horizon: cfg.model.horizon,
            grid: field.grid,
            solidity_defect: field.solidity_defect(),
            n_list,
            seeds: cfg.seeds.clone(),
            snap_times: cfg.snap_times.clone(),
            anchors: cfg.anchors.clone(),
            tags: cfg.tags.clone(),
            runs,
            medians,
        }
    }

    pub fn median_for(&self, n: usize) -> Option<&MedianDistances> {
        self.medians.iter().find(|m| m.n == n)
    }
}

pub fn write_report_json<W: Write>(report: &ConvergenceReport, mut w: W) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut w, report)?;
    writeln!(w)
}

/// One row per run: `n,seed,d_u,d_u_grid,d_yc_initial,d_yc_boundary,d_tag_0,...`.
/// Missing anchor kinds are left empty.
pub fn write_distances_csv<W: Write>(report: &ConvergenceReport, mut w: W) -> io::Result<()> {
    write!(w, "n,seed,d_u,d_u_grid,d_yc_initial,d_yc_boundary")?;
    for j in 0..report.tags.len() {
        write!(w, ",d_tag_{j}")?;
    }
    writeln!(w)?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    for r in &report.runs {
        write!(
            w,
            "{},{},{},{},{},{}",
            r.n,
            r.seed,
            r.d_u,
            r.d_u_grid,
            opt(r.d_yc_initial),
            opt(r.d_yc_boundary)
        )?;
        for d in &r.d_tag {
            write!(w, ",{d}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}
