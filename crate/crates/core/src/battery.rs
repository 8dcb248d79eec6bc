//! Seeded test fields defined in the continuum, so the same function can be
//! sampled on grids of different resolution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{Field, C64};
use crate::grid::Grid;
use crate::spectral::from_spectrum;

/// Real trigonometric polynomial `mean + Σ a_m cos(ξ_m·x + φ_m)` with modes
/// `0 < |m|_∞ ≤ max_mode` and random amplitudes normalised so that
/// `Σ |a_m| = amp`.
pub fn smooth_field(grid: Grid, seed: u64, max_mode: i64, mean: f64, amp: f64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = grid.dim();
    let terms = 2 * d + 2;
    let mut modes = Vec::with_capacity(terms);
    while modes.len() < terms {
        let m: Vec<i64> = (0..d).map(|_| rng.random_range(-max_mode..=max_mode)).collect();
        if m.iter().all(|&x| x == 0) {
            continue;
        }
        modes.push((m, rng.random::<f64>() + 0.1, rng.random::<f64>() * std::f64::consts::TAU));
    }
    let total: f64 = modes.iter().map(|(_, a, _)| a).sum();
    let n = grid.n() as i64;
    if 2 * max_mode < n {
        // Every mode is resolved: place the coefficients and invert once.
        let mut spec = vec![C64::new(0.0, 0.0); grid.sites()];
        let sites = grid.sites() as f64;
        spec[0] += mean * sites;
        for (m, a, ph) in &modes {
            let c = C64::from_polar(0.5 * amp * a / total * sites, *ph);
            let pos: Vec<usize> = m.iter().map(|&x| x.rem_euclid(n) as usize).collect();
            let neg: Vec<usize> = m.iter().map(|&x| (-x).rem_euclid(n) as usize).collect();
            spec[grid.ravel(&pos)] += c;
            spec[grid.ravel(&neg)] += c.conj();
        }
        let f = from_spectrum(grid, spec);
        return f.map(|z| C64::new(z.re, 0.0));
    }
    let k0 = grid.k0();
    Field::from_fn(grid, |x| {
        let mut v = mean;
        for (m, a, ph) in &modes {
            let phase: f64 = x.iter().zip(m).map(|(xi, &mi)| k0 * mi as f64 * xi).sum();
            v += amp * a / total * (phase + ph).cos();
        }
        C64::new(v, 0.0)
    })
}

/// `count` smooth fields `1 + 0.3·(low-mode perturbation)`.
pub fn smooth_battery(grid: Grid, count: usize, seed: u64) -> Vec<Field> {
    (0..count)
        .map(|i| smooth_field(grid, seed.wrapping_mul(1_000_003).wrapping_add(i as u64), 2, 1.0, 0.3))
        .collect()
}

/// Random `±1` field, constant on each cell of a `blocks^d` lattice.
pub fn rough_field(grid: Grid, blocks: usize, seed: u64) -> Result<Field> {
    if blocks == 0 || grid.n() % blocks != 0 {
        return Err(Error::Domain(format!("{blocks} blocks do not divide n = {}", grid.n())));
    }
    let d = grid.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let signs: Vec<f64> = (0..blocks.pow(d as u32))
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    let per = grid.n() / blocks;
    let vals = (0..grid.sites())
        .map(|i| {
            let ix = grid.unravel(i);
            let b = (0..d).fold(0, |acc, j| acc * blocks + ix[j] / per);
            signs[b]
        })
        .collect();
    Field::from_real(grid, vals)
}
