//! Periodic lattice descriptor.
//!
//! A [`Grid`] is the torus `[0, L)^d` sampled at `n` points per axis. Sites are
//! stored in row-major order (last axis fastest) and frequencies in standard
//! FFT order, so the site index and the frequency index share one layout.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on `n^d` when `SDL_SITE_BUDGET` is unset.
pub const DEFAULT_SITE_BUDGET: usize = 1 << 22;

/// Maximum supported dimension.
pub const MAX_DIM: usize = 4;

/// Reads the site budget from `SDL_SITE_BUDGET`, falling back to
/// [`DEFAULT_SITE_BUDGET`].
pub fn site_budget() -> usize {
    std::env::var("SDL_SITE_BUDGET")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_SITE_BUDGET)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    d: usize,
    n: usize,
    #[serde(rename = "L")]
    len: f64,
}

impl Grid {
    /// Builds a grid under the environment site budget.
    pub fn new(d: usize, n: usize, len: f64) -> Result<Self> {
        Self::with_budget(d, n, len, site_budget())
    }

    pub fn with_budget(d: usize, n: usize, len: f64, budget: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&d) {
            return Err(Error::Grid(format!("dimension d = {d} outside 1..={MAX_DIM}")));
        }
        if n < 8 {
            return Err(Error::Grid(format!("n = {n} below the minimum of 8")));
        }
        if !n.is_power_of_two() {
            return Err(Error::Grid(format!("n = {n} is not a power of two")));
        }
        if !(len > 0.0 && len.is_finite()) {
            return Err(Error::Grid(format!("box length L = {len} must be positive")));
        }
        let sites = n
            .checked_pow(d as u32)
            .ok_or(Error::Budget { sites: usize::MAX, budget })?;
        if sites > budget {
            return Err(Error::Budget { sites, budget });
        }
        Ok(Self { d, n, len })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> f64 {
        self.len
    }

    pub fn sites(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn spacing(&self) -> f64 {
        self.len / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.d as i32)
    }

    pub fn volume(&self) -> f64 {
        self.len.powi(self.d as i32)
    }

    /// Fundamental frequency `2π/L`.
    pub fn k0(&self) -> f64 {
        2.0 * PI / self.len
    }

    /// Largest frequency magnitude per axis, `(2π/L)·n/2`.
    pub fn k_max(&self) -> f64 {
        self.k0() * (self.n / 2) as f64
    }

    /// Signed integer frequency for FFT-ordered position `i` on one axis,
    /// in `-n/2..n/2`.
    #[inline]
    pub fn signed_mode(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Splits a flat index into per-axis indices (row-major).
    #[inline]
    pub fn unravel(&self, mut idx: usize) -> [usize; MAX_DIM] {
        let mut out = [0usize; MAX_DIM];
        for axis in (0..self.d).rev() {
            out[axis] = idx % self.n;
            idx /= self.n;
        }
        out
    }

    #[inline]
    pub fn ravel(&self, ix: &[usize]) -> usize {
        ix.iter().take(self.d).fold(0, |acc, &i| acc * self.n + i)
    }

    /// Frequency vector ξ for flat FFT-ordered index `idx`.
    #[inline]
    pub fn wavevector(&self, idx: usize) -> [f64; MAX_DIM] {
        let ix = self.unravel(idx);
        let k0 = self.k0();
        let mut xi = [0.0; MAX_DIM];
        for axis in 0..self.d {
            xi[axis] = k0 * self.signed_mode(ix[axis]) as f64;
        }
        xi
    }

    /// `|ξ|²` for flat index `idx`.
    #[inline]
    pub fn wavenumber_sq(&self, idx: usize) -> f64 {
        let xi = self.wavevector(idx);
        xi[..self.d].iter().map(|x| x * x).sum()
    }

    /// Whether axis index `i` is the unpaired Nyquist mode `-n/2`.
    #[inline]
    pub fn is_nyquist(&self, i: usize) -> bool {
        i == self.n / 2
    }

    /// Physical coordinates of site `idx`.
    #[inline]
    pub fn position(&self, idx: usize) -> [f64; MAX_DIM] {
        let ix = self.unravel(idx);
        let h = self.spacing();
        let mut x = [0.0; MAX_DIM];
        for axis in 0..self.d {
            x[axis] = ix[axis] as f64 * h;
        }
        x
    }

    /// Box center `(L/2, …, L/2)`.
    pub fn center(&self) -> [f64; MAX_DIM] {
        let mut c = [0.0; MAX_DIM];
        for v in c.iter_mut().take(self.d) {
            *v = self.len / 2.0;
        }
        c
    }

    /// Flat index of the site closest to the box center.
    pub fn center_index(&self) -> usize {
        let ix = [self.n / 2; MAX_DIM];
        self.ravel(&ix[..self.d])
    }

    /// Minimum-image displacement `x - y` on the torus, per axis.
    #[inline]
    pub fn displacement(&self, x: &[f64], y: &[f64]) -> [f64; MAX_DIM] {
        let mut out = [0.0; MAX_DIM];
        for axis in 0..self.d {
            let mut r = (x[axis] - y[axis]) % self.len;
            if r >= self.len / 2.0 {
                r -= self.len;
            } else if r < -self.len / 2.0 {
                r += self.len;
            }
            out[axis] = r;
        }
        out
    }

    /// Toroidal distance between two points.
    #[inline]
    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        let r = self.displacement(x, y);
        r[..self.d].iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Index of the site nearest to `x` (coordinates wrapped into the box).
    pub fn nearest_site(&self, x: &[f64]) -> usize {
        let h = self.spacing();
        let mut ix = [0usize; MAX_DIM];
        for axis in 0..self.d {
            let w = x[axis].rem_euclid(self.len);
            ix[axis] = ((w / h).round() as usize) % self.n;
        }
        self.ravel(&ix[..self.d])
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.d == other.d && self.n == other.n && self.len == other.len
    }

    pub(crate) fn check_same(&self, other: &Grid, what: &str) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{what}: (d={}, n={}, L={}) vs (d={}, n={}, L={})",
                self.d, self.n, self.len, other.d, other.n, other.len
            )))
        }
    }
}
