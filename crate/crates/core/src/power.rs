//! Power iteration for the top eigenvalue of a positive semidefinite
//! self-adjoint operator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerOpts {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for PowerOpts {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 10_000, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerResult {
    pub value: f64,
    pub iterations: usize,
    pub gap: f64,
    pub vector: Vec<C64>,
}

/// Positive random vector from a seeded stream.
pub fn positive_start(len: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| C64::new(0.5 + rng.random::<f64>(), 0.0)).collect()
}

/// Complex Gaussian-ish random vector from a seeded stream.
pub fn random_start(len: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect()
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Iterates `v ← A v / ‖A v‖` and returns the Rayleigh quotient once two
/// successive values agree to `tol` relative.
pub fn power_iterate(
    apply: impl Fn(&[C64]) -> Result<Vec<C64>>,
    start: Vec<C64>,
    opts: &PowerOpts,
) -> Result<PowerResult> {
    let mut v = start;
    let n0 = norm(&v);
    if n0 == 0.0 {
        return Err(Error::Domain("power iteration start vector is zero".into()));
    }
    v.iter_mut().for_each(|z| *z /= n0);
    let mut last = f64::NAN;
    let mut gap = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let w = apply(&v)?;
        let rq: f64 = v.iter().zip(&w).map(|(a, b)| (a.conj() * b).re).sum();
        let nw = norm(&w);
        if nw == 0.0 {
            return Ok(PowerResult { value: 0.0, iterations: it, gap: 0.0, vector: v });
        }
        if !nw.is_finite() {
            return Err(Error::NonFinite("power iteration"));
        }
        gap = (rq - last).abs();
        if gap <= opts.tol * rq.abs() {
            return Ok(PowerResult { value: rq, iterations: it, gap, vector: w });
        }
        last = rq;
        v = w;
        v.iter_mut().for_each(|z| *z /= nw);
    }
    Err(Error::PowerIteration { iterations: opts.max_iter, gap })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_operator() {
        let d = [0.2, 3.0, 1.0, 2.5];
        let r = power_iterate(
            |v| Ok(v.iter().zip(&d).map(|(z, &x)| z * x).collect()),
            positive_start(4, 9),
            &PowerOpts::default(),
        )
        .unwrap();
        assert!((r.value - 3.0).abs() < 1e-7);
    }

    #[test]
    fn zero_operator_and_cap() {
        let r = power_iterate(|v| Ok(vec![C64::new(0.0, 0.0); v.len()]), positive_start(3, 1), &PowerOpts::default())
            .unwrap();
        assert_eq!(r.value, 0.0);
        let opts = PowerOpts { tol: 1e-15, max_iter: 3, seed: 1 };
        let d = [1.0, 0.999999];
        let e = power_iterate(|v| Ok(v.iter().zip(&d).map(|(z, &x)| z * x).collect()), vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)], &opts);
        assert!(matches!(e, Err(Error::PowerIteration { iterations: 3, .. })));
    }
}
