//! Whole-space quadrature estimate of `m_d`.
//!
//! `G^s_ζ(r) = Γ(s)^{-1} ∫₀^∞ t^{s−1} e^{−ζt} (4πt)^{−d/2} e^{−r²/4t} dt`. The
//! estimate is `min_κ sup_{r, ζ} |∂_r G¹_ζ(r)| / G^{1/2}_{Re ζ/κ}(r)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::C64;
use crate::quad::integrate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MdQuad {
    pub r_min: f64,
    pub r_max: f64,
    pub r_points: usize,
    pub zeta_re_min: f64,
    pub zeta_re_max: f64,
    pub zeta_points: usize,
    /// Arguments of `ζ` (radians, `|θ| < π/2`); `0` is the real ray.
    pub angles: Vec<f64>,
    pub rel_tol: f64,
    pub max_intervals: usize,
    /// Largest accepted relative error estimate.
    pub err_limit: f64,
}

impl Default for MdQuad {
    fn default() -> Self {
        Self {
            r_min: 1e-3,
            r_max: 1e2,
            r_points: 61,
            zeta_re_min: 1.0,
            zeta_re_max: 100.0,
            zeta_points: 5,
            angles: vec![0.0],
            rel_tol: 1e-10,
            max_intervals: 500,
            err_limit: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdKappaRow {
    pub kappa: f64,
    pub sup: f64,
    pub r_at: f64,
    pub zeta_re_at: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdEstimate {
    pub m_est: f64,
    pub kappa_best: f64,
    pub rows: Vec<MdKappaRow>,
    /// Whether `sup(κ)` has a single minimum over the sorted sweep.
    pub quasi_convex: bool,
}

/// `∫₀^∞ t^{ν−1} e^{−a t − b/t} dt = e^{scale} · value`.
fn log_integral(nu: f64, a: C64, b: f64, q: &MdQuad, r: f64) -> Result<(f64, C64)> {
    let ar = a.re;
    let phi = |u: f64| nu * u - ar * u.exp() - b * (-u).exp();
    let disc = (nu * nu + 4.0 * ar * b).sqrt();
    let peak = if nu >= 0.0 { (nu + disc) / (2.0 * ar) } else { 2.0 * b / (disc - nu) };
    let us = peak.ln();
    let top = phi(us);
    let mut lo = us - 1.0;
    while phi(lo) - top > -50.0 {
        lo -= 1.0;
    }
    let mut hi = us + 1.0;
    while phi(hi) - top > -50.0 {
        hi += 1.0;
    }
    let f = |u: f64| {
        let e = u.exp();
        C64::from_polar((phi(u) - top).exp(), -a.im * e)
    };
    let left = integrate(f, lo, us, q.rel_tol, q.max_intervals);
    let right = integrate(f, us, hi, q.rel_tol, q.max_intervals);
    let value = left.value + right.value;
    let err = (left.err + right.err) / value.norm();
    if !(err <= q.err_limit) {
        return Err(Error::Quadrature { r, zeta: a.norm(), err });
    }
    Ok((top, value))
}

/// `|∂_r G¹_ζ(r)|` in log form.
fn numerator(d: usize, r: f64, zeta: C64, q: &MdQuad) -> Result<(f64, f64)> {
    let (s, v) = log_integral(-(d as f64) / 2.0, zeta, r * r / 4.0, q, r)?;
    Ok((s, v.norm()))
}

/// `Γ(1/2) · G^{1/2}_μ(r)` up to the common `(4π)^{−d/2}` factor, in log form.
fn denominator(d: usize, r: f64, mu: f64, q: &MdQuad) -> Result<(f64, f64)> {
    let (s, v) = log_integral(0.5 - d as f64 / 2.0, C64::new(mu, 0.0), r * r / 4.0, q, r)?;
    Ok((s, v.re))
}

/// `|∂_r G¹_ζ(r)| / G^{1/2}_{Re ζ/κ}(r)` at one point.
pub fn ratio_at(d: usize, kappa: f64, r: f64, zeta: C64, q: &MdQuad) -> Result<f64> {
    let (sn, vn) = numerator(d, r, zeta, q)?;
    let (sd, vd) = denominator(d, r, zeta.re / kappa, q)?;
    Ok(0.5 * r * std::f64::consts::PI.sqrt() * (sn - sd).exp() * vn / vd)
}

/// `κ = 1, 1.25, …, 4`.
pub fn default_kappa_grid() -> Vec<f64> {
    (0..13).map(|i| 1.0 + 0.25 * i as f64).collect()
}

fn log_space(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![a];
    }
    (0..n)
        .map(|i| (a.ln() + (b.ln() - a.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

pub fn estimate_m_d(d: usize, kappa_grid: &[f64], q: &MdQuad) -> Result<MdEstimate> {
    if d < 2 {
        return Err(Error::Domain(format!("m_d needs d >= 2, got {d}")));
    }
    if kappa_grid.is_empty() || kappa_grid.iter().any(|&k| !(k > 0.0)) {
        return Err(Error::Domain("kappa grid must be nonempty and positive".into()));
    }
    if q.angles.iter().any(|a| a.abs() >= std::f64::consts::FRAC_PI_2) {
        return Err(Error::Domain("zeta angles must satisfy |theta| < pi/2".into()));
    }
    let rs = log_space(q.r_min, q.r_max, q.r_points);
    let res = log_space(q.zeta_re_min, q.zeta_re_max, q.zeta_points);
    let mut points = Vec::new();
    for &r in &rs {
        for &x in &res {
            for &th in &q.angles {
                points.push((r, C64::new(x, x * th.tan())));
            }
        }
    }
    let nums = points
        .par_iter()
        .map(|&(r, z)| numerator(d, r, z, q))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = kappa_grid
        .par_iter()
        .map(|&kappa| {
            let mut best = MdKappaRow { kappa, sup: 0.0, r_at: f64::NAN, zeta_re_at: f64::NAN };
            for (&(r, z), &(sn, vn)) in points.iter().zip(&nums) {
                let (sd, vd) = denominator(d, r, z.re / kappa, q)?;
                let v = 0.5 * r * std::f64::consts::PI.sqrt() * (sn - sd).exp() * vn / vd;
                if v > best.sup {
                    best = MdKappaRow { kappa, sup: v, r_at: r, zeta_re_at: z.re };
                }
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.kappa.total_cmp(&b.kappa));
    let best = rows
        .iter()
        .min_by(|a, b| a.sup.total_cmp(&b.sup))
        .expect("nonempty");
    let (m_est, kappa_best) = (best.sup, best.kappa);
    let sups: Vec<f64> = rows.iter().map(|r| r.sup).collect();
    let quasi_convex = {
        let argmin = sups.iter().position(|&s| s == m_est).unwrap();
        let tol = 1e-9 * m_est;
        sups[..=argmin].windows(2).all(|w| w[1] <= w[0] + tol)
            && sups[argmin..].windows(2).all(|w| w[1] + tol >= w[0])
    };
    Ok(MdEstimate { m_est, kappa_best, rows, quasi_convex })
}
