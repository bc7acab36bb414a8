use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use rankflow::harness::{
    pick_tagged, run_convergence_study, write_distances_csv, write_report_json, ExperimentConfig, StudyError,
};
use rankflow::limit::{write_eta_csv, write_f_csv, write_g_csv, CharacteristicField, FieldManifest, Grid, SolveError};
use rankflow::model::{make_assignment, rate_bound, validate_model, ModelError, RateBoundDetail, Violation};
use rankflow::rng::{tagged_stream, GENERATOR};
use rankflow::sim::{write_snapshots_csv, write_tagged_csv, SimConfig, SimError, SimManifest};
use rankflow::tagged::{simulate_tagged_limit, TaggedOptions, TaggedPath};
use rankflow::{Exec, ModelSpec};

use crate::Common;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("model rejected:\n{0}")]
    Rejected(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Study(#[from] StudyError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 4,
            CliError::Solve(_) | CliError::Study(StudyError::Solve(_)) => 3,
            _ => 2,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `dir/name` through `body`, creating parent directories.
fn emit(dir: &Path, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<(), CliError> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let file = File::create(&path).map_err(io_err(&path))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(io_err(&path))
}

fn emit_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    emit(dir, name, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })
}

struct Setup {
    cfg: ExperimentConfig,
    exec: Exec,
}

fn setup(c: &Common) -> Result<Setup, CliError> {
    let text = fs::read_to_string(&c.config).map_err(io_err(&c.config))?;
    let mut cfg = ExperimentConfig::from_json(&text).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some((m, k)) = c.grid {
        cfg.solve.m = m;
        cfg.solve.k = k;
    }
    if let Some(seed) = c.seed {
        cfg.simulate.seed = seed;
        cfg.study.seeds = vec![seed];
    }
    let exec = match c.threads {
        Some(0) => return Err(CliError::Config("--threads must be at least 1".into())),
        Some(1) => Exec::Sequential,
        Some(_n) => {
            #[cfg(feature = "parallel")]
            rayon::ThreadPoolBuilder::new()
                .num_threads(_n)
                .build_global()
                .map_err(|e| CliError::Config(e.to_string()))?;
            cfg.solve.exec
        }
        None => cfg.solve.exec,
    };
    cfg.solve.exec = exec;
    Ok(Setup { cfg, exec })
}

fn load_model(cfg: &ExperimentConfig) -> Result<ModelSpec, CliError> {
    let model = ModelSpec::from_file(&cfg.model)?;
    let report = validate_model(&model);
    if !report.is_accepted() {
        return Err(CliError::Rejected(report.summary()));
    }
    Ok(ModelSpec::load(&cfg.model)?)
}

#[derive(Serialize)]
struct ValidationOutput {
    accepted: bool,
    model_hash: String,
    violations: Vec<Violation>,
    rate_bound: Option<RateBoundDetail>,
}

pub fn validate(c: &Common) -> Result<(), CliError> {
    let Setup { cfg, .. } = setup(c)?;
    let model = ModelSpec::from_file(&cfg.model)?;
    let report = validate_model(&model);
    let bound = if report.is_accepted() {
        Some(rate_bound(&model).map_err(|source| ModelError::Expr {
            index: 0,
            field: "rate",
            source,
        })?)
    } else {
        None
    };
    let out = ValidationOutput {
        accepted: report.is_accepted(),
        model_hash: model.hash(),
        violations: report.violations.clone(),
        rate_bound: bound.clone(),
    };
    emit_json(&c.out, "validation.json", &out)?;
    match bound {
        Some(b) => {
            println!("model accepted; rate bound R = {}", b.bound);
            Ok(())
        }
        None => Err(CliError::Rejected(report.summary())),
    }
}

#[derive(Serialize)]
struct SimulateManifest {
    #[serde(flatten)]
    sim: SimManifest,
    tagged_particles: Vec<usize>,
    initial_deviation: f64,
}

pub fn simulate(c: &Common) -> Result<(), CliError> {
    let Setup { cfg, .. } = setup(c)?;
    let model = load_model(&cfg)?;
    let s = &cfg.simulate;
    let (horizon, snap_times, anchors, tags) = cfg.simulate_plan();
    let asg = make_assignment(&model, s.n, s.assign, s.seed)?;
    let tagged = pick_tagged(&asg, &tags)?;
    let sim_cfg = SimConfig {
        horizon,
        seed: s.seed,
        snap_times,
        anchors,
        tagged: tagged.clone(),
    };
    let out = rankflow::simulate(&model, &asg, &sim_cfg)?;
    emit(&c.out, "snapshots/empirical.csv", |w| write_snapshots_csv(&out, w))?;
    emit(&c.out, "tagged.csv", |w| write_tagged_csv(&out, w))?;
    emit(&c.out, "anchors.csv", |w| {
        writeln!(w, "y0,t0,time,value")?;
        for tr in &out.anchors {
            for &t in sim_cfg.snap_times.iter().filter(|&&t| t >= tr.anchor.t0) {
                let v = tr.value_at(t).expect("time after anchor");
                writeln!(w, "{},{},{},{}", tr.anchor.y0, tr.anchor.t0, t, v)?;
            }
        }
        Ok(())
    })?;
    let manifest = SimulateManifest {
        sim: SimManifest::new(&out, &model.hash()),
        tagged_particles: tagged,
        initial_deviation: asg.initial_deviation(&model),
    };
    emit_json(&c.out, "manifest.json", &manifest)?;
    println!(
        "N={} seed={}: {} candidates, {} accepted",
        out.n, out.seed, out.candidates, out.accepted
    );
    Ok(())
}

fn write_fields(dir: &Path, field: &CharacteristicField) -> Result<(), CliError> {
    emit(dir, "fields/f.csv", |w| write_f_csv(field, w))?;
    emit(dir, "fields/g.csv", |w| write_g_csv(field, w))?;
    emit(dir, "fields/eta.csv", |w| write_eta_csv(field, w))?;
    emit(dir, "fields/u.csv", |w| {
        let grid = field.grid;
        writeln!(w, "y,t,type,u")?;
        for j in 0..grid.mp() {
            for k in 0..grid.kp() {
                for a in 0..field.num_types() {
                    writeln!(w, "{},{},{},{}", grid.y(j), grid.t(k), a, field.u_node(a, j, k))?;
                }
            }
        }
        Ok(())
    })
}

pub fn solve(c: &Common) -> Result<(), CliError> {
    let Setup { cfg, .. } = setup(c)?;
    let model = load_model(&cfg)?;
    let field = rankflow::solve(&model, &cfg.solve)?;
    write_fields(&c.out, &field)?;
    emit_json(&c.out, "manifest.json", &FieldManifest::new(&field))?;
    println!(
        "solved on {}x{} grid; solidity defect {:e}",
        field.grid.m,
        field.grid.k,
        field.solidity_defect()
    );
    Ok(())
}

#[derive(Serialize)]
struct TaggedManifest {
    model_hash: String,
    grid: Grid,
    seed: u64,
    generator: &'static str,
    steps: usize,
    paths: Vec<TaggedSummary>,
}

#[derive(Serialize)]
struct TaggedSummary {
    type_index: usize,
    y0: f64,
    stream: u64,
    jumps: Vec<(f64, f64)>,
}

pub fn tagged(c: &Common) -> Result<(), CliError> {
    let Setup { cfg, exec } = setup(c)?;
    let model = load_model(&cfg)?;
    let field = rankflow::solve(&model, &cfg.solve)?;
    let (horizon, _, _, tags) = cfg.simulate_plan();
    let seed = cfg.simulate.seed;
    let opts = TaggedOptions {
        steps: cfg.simulate.tagged_steps,
    };
    let paths = exec
        .map(tags.len(), |j| {
            let tag = tags[j];
            if tag.type_index >= model.num_types() {
                return Err(CliError::Config(format!("tag {j} has unknown type {}", tag.type_index)));
            }
            Ok(simulate_tagged_limit(
                &field,
                tag.type_index,
                tag.y,
                horizon,
                seed,
                tagged_stream(j),
                opts,
            )?)
        })
        .into_iter()
        .collect::<Result<Vec<TaggedPath>, _>>()?;
    emit(&c.out, "tagged_limit.csv", |w| {
        writeln!(w, "tag,time,y")?;
        for (j, p) in paths.iter().enumerate() {
            for &(t, y) in &p.samples {
                writeln!(w, "{j},{t},{y}")?;
            }
        }
        Ok(())
    })?;
    let manifest = TaggedManifest {
        model_hash: model.hash(),
        grid: field.grid,
        seed,
        generator: GENERATOR,
        steps: opts.steps,
        paths: paths
            .into_iter()
            .map(|p| TaggedSummary {
                type_index: p.type_index,
                y0: p.y0,
                stream: p.stream,
                jumps: p.jumps,
            })
            .collect(),
    };
    emit_json(&c.out, "manifest.json", &manifest)?;
    println!("{} tagged paths on stream seed {seed}", manifest.paths.len());
    Ok(())
}

pub fn study(c: &Common) -> Result<(), CliError> {
    let Setup { cfg, exec } = setup(c)?;
    let model = load_model(&cfg)?;
    let mut study = cfg.study_config(model);
    study.exec = exec;
    let outcome = run_convergence_study(&study)?;
    let report = &outcome.report;
    emit(&c.out, "report.json", |w| write_report_json(report, w))?;
    emit(&c.out, "distances.csv", |w| write_distances_csv(report, w))?;
    emit_json(&c.out, "timing.json", &outcome.timing)?;
    for m in &report.medians {
        println!("N={:>7}  median D_U = {:.5}", m.n, m.d_u);
    }
    Ok(())
}
