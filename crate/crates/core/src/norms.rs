//! Discrete Lebesgue, sup and Hölder norms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::MAX_DIM;

/// Default number of sampled site pairs for the Hölder seminorm.
pub const DEFAULT_PAIR_BUDGET: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormMode {
    Lp(f64),
    Sup,
    Holder { gamma: f64, pair_budget: usize, seed: u64 },
}

pub fn norm(f: &Field, mode: NormMode) -> Result<f64> {
    match mode {
        NormMode::Lp(p) => lp(f, p),
        NormMode::Sup => Ok(sup(f)),
        NormMode::Holder { gamma, pair_budget, seed } => holder(f, gamma, pair_budget, seed),
    }
}

/// `(cell_volume · Σ|f|^p)^{1/p}`; `p = ∞` gives the sup norm.
pub fn lp(f: &Field, p: f64) -> Result<f64> {
    if p == f64::INFINITY {
        return Ok(sup(f));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Domain(format!("Lebesgue exponent p = {p} outside [1, inf)")));
    }
    let dv = f.grid().cell_volume();
    let s: f64 = if p == 2.0 {
        f.values().iter().map(|z| z.norm_sqr()).sum()
    } else if p == 1.0 {
        f.values().iter().map(|z| z.norm()).sum()
    } else {
        f.values().iter().map(|z| z.norm().powf(p)).sum()
    };
    Ok((dv * s).powf(1.0 / p))
}

pub fn sup(f: &Field) -> f64 {
    f.sup()
}

/// Sampled Hölder seminorm `max |f(x) − f(y)| / dist(x, y)^γ`.
///
/// Pairs are drawn from a seeded stream with lattice offsets restricted to
/// `h ≤ dist ≤ L/4` on the torus.
pub fn holder(f: &Field, gamma: f64, pair_budget: usize, seed: u64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Domain(format!("Hölder exponent {gamma} outside (0, 1)")));
    }
    if pair_budget == 0 {
        return Err(Error::Domain("Hölder seminorm needs at least one pair".into()));
    }
    let g = f.grid();
    let d = g.dim();
    let n = g.n() as i64;
    let h = g.spacing();
    let quarter = g.len() / 4.0;
    let reach = (n / 4).max(1);
    let vals = f.values();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    let mut accepted = 0usize;
    let mut tries = 0usize;
    while accepted < pair_budget {
        tries += 1;
        if tries > 64 * pair_budget {
            break;
        }
        let x = rng.random_range(0..g.sites());
        let mut off = [0i64; MAX_DIM];
        for o in off.iter_mut().take(d) {
            *o = rng.random_range(-reach..=reach);
        }
        let dist = off[..d].iter().map(|&o| (o * o) as f64).sum::<f64>().sqrt() * h;
        if dist < h * (1.0 - 1e-12) || dist > quarter * (1.0 + 1e-12) {
            continue;
        }
        let ix = g.unravel(x);
        let mut iy = [0usize; MAX_DIM];
        for a in 0..d {
            iy[a] = (ix[a] as i64 + off[a]).rem_euclid(n) as usize;
        }
        let y = g.ravel(&iy[..d]);
        accepted += 1;
        let q = (vals[x] - vals[y]).norm() / dist.powf(gamma);
        best = best.max(q);
    }
    if accepted == 0 {
        return Err(Error::Domain("no admissible Hölder pairs".into()));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::C64;
    use crate::grid::Grid;

    #[test]
    fn constant_fields() {
        let g = Grid::new(2, 16, 3.0).unwrap();
        let f = Field::constant(g, C64::new(2.0, 0.0));
        for p in [1.0, 1.5, 2.0, 4.0] {
            let expect = 2.0 * 3.0f64.powf(2.0 / p);
            assert!((lp(&f, p).unwrap() - expect).abs() < 1e-12 * expect);
        }
        assert_eq!(sup(&f), 2.0);
        assert_eq!(holder(&f, 0.5, 1000, 1).unwrap(), 0.0);
        assert!(holder(&f, 0.5, 0, 1).is_err());
        assert!(lp(&f, 0.5).is_err());
    }

    #[test]
    fn single_cell_indicator() {
        let g = Grid::new(3, 8, 1.0).unwrap();
        let mut f = Field::zeros(g);
        f.values_mut()[17] = C64::new(1.0, 0.0);
        assert_eq!(sup(&f), 1.0);
    }

    #[test]
    fn holder_of_power_distance() {
        let gamma = 0.4;
        let mut last = 0.0;
        for n in [32, 64, 128] {
            let g = Grid::new(2, n, 1.0).unwrap();
            let z = [0.0; 2];
            let f = Field::from_real_fn(g, |x| g.distance(x, &z).powf(gamma));
            let s = holder(&f, gamma, DEFAULT_PAIR_BUDGET, 7).unwrap();
            assert!(s > 0.9 && s <= 1.0 + 1e-12, "n = {n}: {s}");
            last = s;
        }
        assert!((last - 1.0).abs() < 0.1);
    }

    #[test]
    fn holder_is_seeded() {
        let g = Grid::new(2, 32, 1.0).unwrap();
        let f = Field::from_real_fn(g, |x| (6.0 * x[0]).sin() * x[1]);
        assert_eq!(holder(&f, 0.3, 5000, 3).unwrap(), holder(&f, 0.3, 5000, 3).unwrap());
    }
}
