use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::{CharacteristicField, Diagnostics, Grid};

/// Rows `y,t,f` over the whole grid.
pub fn write_f_csv<W: Write>(field: &CharacteristicField, mut w: W) -> io::Result<()> {
    let grid = field.grid;
    writeln!(w, "y,t,f")?;
    for j in 0..grid.mp() {
        for k in 0..grid.kp() {
            writeln!(w, "{},{},{}", grid.y(j), grid.t(k), field.f[j * grid.kp() + k])?;
        }
    }
    Ok(())
}

/// Rows `s,t,g` for `s <= t`.
pub fn write_g_csv<W: Write>(field: &CharacteristicField, mut w: W) -> io::Result<()> {
    let grid = field.grid;
    writeln!(w, "s,t,g")?;
    for i in 0..grid.kp() {
        for k in i..grid.kp() {
            writeln!(w, "{},{},{}", grid.t(i), grid.t(k), field.g[i * grid.kp() + k])?;
        }
    }
    Ok(())
}

/// Rows `t,type,eta`.
pub fn write_eta_csv<W: Write>(field: &CharacteristicField, mut w: W) -> io::Result<()> {
    let grid = field.grid;
    writeln!(w, "t,type,eta")?;
    for k in 0..grid.kp() {
        for (a, eta) in field.eta.iter().enumerate() {
            writeln!(w, "{},{},{}", grid.t(k), a, eta[k])?;
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldManifest {
    pub grid: Grid,
    pub model_hash: String,
    pub rate_bound: Option<f64>,
    pub solidity_defect: f64,
    pub diagnostics: Diagnostics,
}

impl FieldManifest {
    pub fn new(field: &CharacteristicField) -> FieldManifest {
        FieldManifest {
            grid: field.grid,
            model_hash: field.model().hash(),
            rate_bound: field.model().rate_bound,
            solidity_defect: field.solidity_defect(),
            diagnostics: field.diagnostics.clone(),
        }
    }
}
