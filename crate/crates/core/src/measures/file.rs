//! JSON measure files.
//!
//! ```json
//! {"components": 3, "ac": "drift.bin", "atoms": [{"x": [..], "w": [..]}],
//!  "surface": [{"x": [..], "w": [..]}], "real": true}
//! ```
//!
//! Weight entries are numbers or `[re, im]` pairs. `ac` names a binary
//! field dump relative to the JSON file.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Atom, Measure};
use crate::error::{Error, Result};
use crate::field::C64;
use crate::fieldio;
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Weight {
    Real(f64),
    Complex([f64; 2]),
}

impl Weight {
    fn value(self) -> C64 {
        match self {
            Weight::Real(x) => C64::new(x, 0.0),
            Weight::Complex([a, b]) => C64::new(a, b),
        }
    }

    fn from_value(z: C64) -> Self {
        if z.im == 0.0 {
            Weight::Real(z.re)
        } else {
            Weight::Complex([z.re, z.im])
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomRecord {
    pub x: Vec<f64>,
    pub w: Vec<Weight>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureFile {
    pub components: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ac: Option<String>,
    #[serde(default)]
    pub atoms: Vec<AtomRecord>,
    #[serde(default)]
    pub surface: Vec<AtomRecord>,
    pub real: bool,
}

fn to_atoms(recs: &[AtomRecord]) -> Vec<Atom> {
    recs.iter()
        .map(|r| Atom::new(r.x.clone(), r.w.iter().map(|w| w.value()).collect()))
        .collect()
}

/// Loads, validates and centers a measure.
///
/// `grid` is required when the file has no density; when both are present
/// they must agree.
pub fn load_measure(path: &Path, grid: Option<Grid>) -> Result<Measure> {
    let spec: MeasureFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    let ac = match &spec.ac {
        Some(rel) => {
            let base = path.parent().unwrap_or_else(|| Path::new("."));
            Some(fieldio::read_vecfield(&base.join(rel))?)
        }
        None => None,
    };
    let grid = match (&ac, grid) {
        (Some(a), Some(g)) => {
            a.grid().check_same(&g, "measure density vs scenario grid")?;
            g
        }
        (Some(a), None) => *a.grid(),
        (None, Some(g)) => g,
        (None, None) => {
            return Err(Error::Metadata("measure without density needs a grid".into()));
        }
    };
    let m = Measure::new(grid, spec.components, ac, to_atoms(&spec.atoms), to_atoms(&spec.surface))?;
    if spec.real != m.is_real() {
        return Err(Error::Metadata(format!(
            "real flag is {} but the data is {}",
            spec.real,
            if m.is_real() { "real" } else { "complex" }
        )));
    }
    let tv = m.total_variation();
    if !tv.is_finite() {
        return Err(Error::NonFinite("measure total variation"));
    }
    Ok(m.centered())
}

/// Writes `m` as `<path>` plus, when it has a density, `<stem>_ac.bin`.
pub fn save_measure(path: &Path, m: &Measure) -> Result<()> {
    let ac = match m.ac() {
        Some(a) => {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("measure");
            let name = format!("{stem}_ac.bin");
            fieldio::write_vecfield(&path.with_file_name(&name), a)?;
            Some(name)
        }
        None => None,
    };
    let rec = |p: &Atom| AtomRecord { x: p.x.clone(), w: p.w.iter().map(|&z| Weight::from_value(z)).collect() };
    let spec = MeasureFile {
        components: m.components(),
        ac,
        atoms: m.atoms().iter().map(rec).collect(),
        surface: m.surface().iter().map(rec).collect(),
        real: m.is_real(),
    };
    fs::write(path, serde_json::to_string_pretty(&spec)?)?;
    Ok(())
}
