use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::SimOutput;
use crate::rng::{StreamCounter, GENERATOR};

/// Rows `time,y,type,value` with `y = k/N` at every breakpoint.
pub fn write_snapshots_csv<W: Write>(out: &SimOutput, mut w: W) -> io::Result<()> {
    writeln!(w, "time,y,type,value")?;
    let n = out.n as f64;
    for snap in &out.snapshots {
        for k in 0..=out.n {
            let y = k as f64 / n;
            for (a, tail) in snap.tails.iter().enumerate() {
                writeln!(w, "{},{},{},{}", snap.time, y, a, tail[k] as f64 / n)?;
            }
        }
    }
    Ok(())
}

/// Rows `time,particle,y`, one per position change.
pub fn write_tagged_csv<W: Write>(out: &SimOutput, mut w: W) -> io::Result<()> {
    writeln!(w, "time,particle,y")?;
    for tr in &out.tagged {
        for &(t, y) in &tr.path {
            writeln!(w, "{},{},{}", t, tr.particle, y)?;
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimManifest {
    pub seed: u64,
    pub n: usize,
    pub model_hash: String,
    pub rate_bound: f64,
    pub horizon: f64,
    pub generator: String,
    pub candidates: u64,
    pub accepted: u64,
    pub streams: Vec<StreamCounter>,
}

impl SimManifest {
    pub fn new(out: &SimOutput, model_hash: &str) -> SimManifest {
        SimManifest {
            seed: out.seed,
            n: out.n,
            model_hash: model_hash.to_string(),
            rate_bound: out.rate_bound,
            horizon: out.horizon,
            generator: GENERATOR.to_string(),
            candidates: out.candidates,
            accepted: out.accepted,
            streams: out.counters.clone(),
        }
    }
}
