//! Euler–Maruyama sampling of `dX = −v(X) dt + √2 dW` on the torus.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, VecField, C64};
use crate::grid::{site_budget, Grid, MAX_DIM};
use crate::spectral::upsample;

use super::KernelSlice;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McOptions {
    pub t: f64,
    pub h: f64,
    pub paths: usize,
    pub seed: u64,
    /// Multiplies the Brownian increment; `0` gives the deterministic flow.
    #[serde(default = "one")]
    pub noise: f64,
    /// Refinement of the drift table before multilinear lookup (1, 2, 4 or 8).
    #[serde(default)]
    pub upsample: Option<usize>,
}

fn one() -> f64 {
    1.0
}

impl McOptions {
    pub fn new(t: f64, h: f64, paths: usize, seed: u64) -> Self {
        Self { t, h, paths, seed, noise: 1.0, upsample: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub grid: Grid,
    pub t: f64,
    pub x0: Vec<f64>,
    /// Visit counts divided by `paths · cell_volume`.
    pub values: Field,
    pub paths: usize,
    pub steps: usize,
    /// `h · sup|v|` exceeded the grid spacing.
    pub cfl_warning: bool,
}

impl Histogram {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("cell,density\n");
        for (i, z) in self.values.values().iter().enumerate() {
            s.push_str(&format!("{i},{}\n", z.re));
        }
        s
    }
}

/// Drift table on a refined grid with periodic multilinear lookup.
struct DriftTable {
    grid: Grid,
    comps: Vec<Vec<f64>>,
}

impl DriftTable {
    fn new(v: &VecField, factor: Option<usize>) -> Result<Self> {
        let g = *v.grid();
        let d = g.dim();
        let factor = match factor {
            Some(f) if [1, 2, 4, 8].contains(&f) => f,
            Some(f) => return Err(Error::Domain(format!("upsampling factor {f} not in 1, 2, 4, 8"))),
            None => {
                let mut f = 8;
                while f > 1 && (g.n() * f).pow(d as u32) * d > site_budget() {
                    f /= 2;
                }
                f
            }
        };
        let mut comps = Vec::with_capacity(d);
        let mut fine = g;
        for c in v.comps() {
            let u = upsample(c, factor)?;
            fine = *u.grid();
            comps.push(u.re());
        }
        Ok(Self { grid: fine, comps })
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let g = &self.grid;
        let d = g.dim();
        let n = g.n();
        let h = g.spacing();
        let mut base = [0usize; MAX_DIM];
        let mut frac = [0.0; MAX_DIM];
        for a in 0..d {
            let s = x[a] / h;
            let fl = s.floor();
            frac[a] = s - fl;
            base[a] = (fl as i64).rem_euclid(n as i64) as usize;
        }
        out.iter_mut().for_each(|o| *o = 0.0);
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut idx = 0usize;
            for a in 0..d {
                let bit = corner >> a & 1;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
                idx = idx * n + (base[a] + bit) % n;
            }
            if w == 0.0 {
                continue;
            }
            for (o, c) in out.iter_mut().zip(&self.comps) {
                *o += w * c[idx];
            }
        }
    }
}

/// `opts.paths` independent paths from `x0`; path `i` draws from the ChaCha8
/// stream `i` of `opts.seed`, so the result does not depend on the thread
/// count.
pub fn mc_sample(v: &VecField, x0: &[f64], opts: &McOptions) -> Result<Histogram> {
    let g = *v.grid();
    let d = g.dim();
    if v.components() != d || x0.len() != d {
        return Err(Error::Domain("drift and start point need d components".into()));
    }
    if !(opts.t > 0.0 && opts.h > 0.0 && opts.h <= opts.t) || opts.paths == 0 {
        return Err(Error::Domain(format!(
            "need 0 < h <= t and paths >= 1, got h = {}, t = {}, paths = {}",
            opts.h, opts.t, opts.paths
        )));
    }
    let steps = (opts.t / opts.h - 1e-9).ceil().max(1.0) as usize;
    let h = opts.t / steps as f64;
    let vsup = v.sup();
    let table = if vsup > 0.0 { Some(DriftTable::new(v, opts.upsample)?) } else { None };
    let len = g.len();
    let sigma = (2.0 * h).sqrt() * opts.noise;

    const CHUNK: usize = 4096;
    let chunks = opts.paths.div_ceil(CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .fold(
            || vec![0u64; g.sites()],
            |mut acc, c| {
                let mut x = [0.0; MAX_DIM];
                let mut b = [0.0; MAX_DIM];
                for path in c * CHUNK..((c + 1) * CHUNK).min(opts.paths) {
                    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                    rng.set_stream(path as u64);
                    x[..d].copy_from_slice(x0);
                    for _ in 0..steps {
                        if let Some(t) = &table {
                            t.eval(&x[..d], &mut b[..d]);
                        }
                        for a in 0..d {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            x[a] = (x[a] - b[a] * h + sigma * z).rem_euclid(len);
                        }
                    }
                    acc[g.nearest_site(&x[..d])] += 1;
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; g.sites()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let scale = 1.0 / (opts.paths as f64 * g.cell_volume());
    let values = Field::from_values(g, counts.iter().map(|&c| C64::new(c as f64 * scale, 0.0)).collect())?;
    Ok(Histogram {
        grid: g,
        t: opts.t,
        x0: x0.to_vec(),
        values,
        paths: opts.paths,
        steps,
        cfl_warning: h * vsup > g.spacing(),
    })
}

/// `½ · cell_volume · Σ |hist − max(slice, 0)|`.
pub fn compare_tv(hist: &Histogram, slice: &KernelSlice) -> Result<f64> {
    hist.grid.check_same(&slice.grid, "histogram and kernel")?;
    if (hist.t - slice.t).abs() > 1e-12 * hist.t.abs().max(1.0) {
        return Err(Error::Metadata(format!("times differ: {} vs {}", hist.t, slice.t)));
    }
    if hist.grid.distance(&hist.x0, &slice.x0) > 1e-9 * hist.grid.spacing() {
        return Err(Error::Metadata("source points differ".into()));
    }
    let s: f64 = hist
        .values
        .values()
        .iter()
        .zip(slice.values.values())
        .map(|(a, b)| (a.re - b.re.max(0.0)).abs())
        .sum();
    Ok(0.5 * hist.grid.cell_volume() * s)
}
