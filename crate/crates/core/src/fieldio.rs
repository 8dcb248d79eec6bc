//! Binary field dumps.
//!
//! Data is raw little-endian `f64` pairs `(re, im)` in row-major site order,
//! components concatenated. A sidecar `<name>.json` carries the header.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, VecField, C64};
use crate::grid::Grid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldHeader {
    pub d: usize,
    pub n: usize,
    #[serde(rename = "L")]
    pub len: f64,
    pub components: usize,
    pub dtype: String,
}

/// Sidecar path for a binary dump: same stem, `.json` extension.
pub fn sidecar_path(bin: &Path) -> PathBuf {
    bin.with_extension("json")
}

pub fn encode(v: &VecField) -> Vec<u8> {
    let mut out = Vec::with_capacity(v.components() * v.grid().sites() * 16);
    for c in v.comps() {
        for z in c.values() {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    out
}

pub fn decode(header: &FieldHeader, bytes: &[u8]) -> Result<VecField> {
    if header.dtype != "c128" {
        return Err(Error::Metadata(format!("unsupported dtype {}", header.dtype)));
    }
    let grid = Grid::new(header.d, header.n, header.len)?;
    let per = grid.sites() * 16;
    if header.components == 0 || bytes.len() != per * header.components {
        return Err(Error::Metadata(format!(
            "{} bytes for {} components of {} sites",
            bytes.len(),
            header.components,
            grid.sites()
        )));
    }
    let comps = bytes
        .chunks_exact(per)
        .map(|chunk| {
            let vals = chunk
                .chunks_exact(16)
                .map(|b| {
                    let re = f64::from_le_bytes(b[..8].try_into().unwrap());
                    let im = f64::from_le_bytes(b[8..].try_into().unwrap());
                    C64::new(re, im)
                })
                .collect();
            Field::from_values(grid, vals)
        })
        .collect::<Result<Vec<_>>>()?;
    VecField::new(comps)
}

pub fn header_for(v: &VecField) -> FieldHeader {
    let g = v.grid();
    FieldHeader {
        d: g.dim(),
        n: g.n(),
        len: g.len(),
        components: v.components(),
        dtype: "c128".into(),
    }
}

/// Writes `bin` and its sidecar header.
pub fn write_vecfield(bin: &Path, v: &VecField) -> Result<()> {
    fs::write(bin, encode(v))?;
    fs::write(sidecar_path(bin), serde_json::to_string_pretty(&header_for(v))?)?;
    Ok(())
}

pub fn write_field(bin: &Path, f: &Field) -> Result<()> {
    write_vecfield(bin, &VecField::from_scalar(f.clone()))
}

pub fn read_vecfield(bin: &Path) -> Result<VecField> {
    let header: FieldHeader = serde_json::from_str(&fs::read_to_string(sidecar_path(bin))?)?;
    decode(&header, &fs::read(bin)?)
}

pub fn read_field(bin: &Path) -> Result<Field> {
    read_vecfield(bin)?.into_scalar()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_bitexact() {
        let g = Grid::new(2, 8, 1.25).unwrap();
        let a = Field::from_fn(g, |x| C64::new(x[0].sin(), 1.0 / (1.0 + x[1])));
        let b = Field::from_real_fn(g, |x| x[0] * x[1] - 0.1);
        let v = VecField::new(vec![a, b]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.bin");
        write_vecfield(&p, &v).unwrap();
        let back = read_vecfield(&p).unwrap();
        assert_eq!(back, v);
        assert_eq!(std::fs::read(&p).unwrap().len(), 2 * 64 * 16);
        let h: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(sidecar_path(&p)).unwrap()).unwrap();
        assert_eq!(h["dtype"], "c128");
        assert_eq!(h["components"], 2);
    }

    #[test]
    fn rejects_truncated() {
        let h = FieldHeader { d: 1, n: 8, len: 1.0, components: 1, dtype: "c128".into() };
        assert!(matches!(decode(&h, &[0u8; 100]), Err(Error::Metadata(_))));
    }
}
