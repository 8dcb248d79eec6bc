//! The factored resolvent of `−Δ + σ·∇`.
//!
//! With `M_s = (ζ + (−Δ)^{α/2})^{-s}`:
//!
//! * `Z = M_{1/4} σ·∇ M_{3/4}`
//! * `Ω = M_{(1/2)(1/2−1/q)} (1+Z)^{-1} M_{(1/2)(1/2−1/r′)}`
//! * `Θ = M_{1/2+1/(2q)} Ω M_{1/(2r′)}`
//!
//! `1/r′ = 1 − 1/r`, so `r = 1` makes the trailing factor the identity.

mod alt;
mod dense;
mod extra;

pub use alt::{alt_omega_full, apply_alt_omega, apply_t, apply_t_adjoint, t_norm_estimate, AltParts, PNormEstimate};
pub use dense::{assemble, dense_oracle, DenseMode, DenseOracle, Perturbation, DENSE_SITE_BUDGET};
pub use extra::{
    apply_generator, apply_generator_adjoint, kato_ponce_ratio, KatoPonce, operator_norm, sandwich_norm_estimate,
    schrodinger_theta, schrodinger_theta_density, smoothing_proxy, z_norm_estimate,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::field::{Field, VecField, C64};
use crate::grid::Grid;
use crate::measures::Measure;
use crate::spectral::{derivative_wavenumber, resolvent_power};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolventParams {
    pub zeta: C64,
    pub p: f64,
    /// `f64::INFINITY` allowed.
    pub q: f64,
    pub r: f64,
    pub alpha: f64,
    pub neumann_tol: f64,
    pub neumann_max: usize,
    /// Lower edge `κ_d·λ` of the admissible half-plane `Re ζ ≥ κ_d λ`.
    pub re_min: f64,
}

impl ResolventParams {
    /// `p = 2`, `q = ∞`, `r = 1`, `α = 2`, tolerance `1e-12`, edge 0.
    pub fn new(zeta: C64) -> Self {
        Self {
            zeta,
            p: 2.0,
            q: f64::INFINITY,
            r: 1.0,
            alpha: 2.0,
            neumann_tol: 1e-12,
            neumann_max: 2000,
            re_min: 0.0,
        }
    }

    pub fn with_zeta(&self, zeta: C64) -> Self {
        Self { zeta, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let (p, q, r) = (self.p, self.q, self.r);
        if !(r >= 1.0 && r < p.min(2.0) && p.max(2.0) < q) {
            return Err(Error::Domain(format!(
                "exponents need 1 <= r < min(2, p) <= max(2, p) < q; got p = {p}, q = {q}, r = {r}"
            )));
        }
        if !(self.alpha > 1.0 && self.alpha <= 2.0) {
            return Err(Error::Domain(format!("alpha = {} outside (1, 2]", self.alpha)));
        }
        if !(self.zeta.re > 0.0) || self.zeta.re < self.re_min {
            return Err(Error::Domain(format!(
                "zeta = {} outside the half-plane Re zeta >= {}",
                self.zeta, self.re_min
            )));
        }
        if !(self.neumann_tol > 0.0) || self.neumann_max == 0 {
            return Err(Error::Domain("Neumann tolerance and cap must be positive".into()));
        }
        Ok(())
    }

    pub fn inv_q(&self) -> f64 {
        1.0 / self.q
    }

    /// `1/r′ = 1 − 1/r`.
    pub fn inv_r_prime(&self) -> f64 {
        1.0 - 1.0 / self.r
    }

    pub fn exponents(&self) -> Exponents {
        let iq = self.inv_q();
        let irp = self.inv_r_prime();
        Exponents {
            theta_left: 0.5 + iq / 2.0,
            omega_left: 0.5 * (0.5 - iq),
            omega_right: 0.5 * (0.5 - irp),
            theta_right: irp / 2.0,
        }
    }
}

/// Resolvent powers in the factorization, applied left to right.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub theta_left: f64,
    pub omega_left: f64,
    pub omega_right: f64,
    pub theta_right: f64,
}

impl Exponents {
    pub fn total(&self) -> f64 {
        self.theta_left + self.omega_left + self.omega_right + self.theta_right
    }
}

/// Rasterized drift density, the form in which `σ` enters every operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Drift {
    density: VecField,
    singular: bool,
}

impl Drift {
    pub fn from_measure(sigma: &Measure) -> Result<Self> {
        if sigma.components() != sigma.grid().dim() {
            return Err(Error::Domain(format!(
                "drift needs d = {} components, got {}",
                sigma.grid().dim(),
                sigma.components()
            )));
        }
        Ok(Self { density: sigma.density(), singular: sigma.has_singular_part() })
    }

    /// A smooth drift field such as a mollification output.
    pub fn from_field(v: VecField) -> Result<Self> {
        if v.components() != v.grid().dim() {
            return Err(Error::Domain(format!(
                "drift needs d = {} components, got {}",
                v.grid().dim(),
                v.components()
            )));
        }
        Ok(Self { density: v, singular: false })
    }

    pub fn zero(grid: Grid) -> Self {
        Self { density: VecField::zeros(grid, grid.dim()), singular: false }
    }

    pub fn density(&self) -> &VecField {
        &self.density
    }

    pub fn grid(&self) -> &Grid {
        self.density.grid()
    }

    pub fn has_singular_part(&self) -> bool {
        self.singular
    }

    pub fn is_zero(&self) -> bool {
        self.density.sup() == 0.0
    }

    /// `sup |v|` (Euclidean).
    pub fn sup(&self) -> f64 {
        self.density.sup()
    }
}

/// Resolvent-power symbol table `(ζ + |ξ|^α)^{-s}`.
pub(crate) fn symbol(g: &Grid, zeta: C64, s: f64, alpha: f64) -> Vec<C64> {
    (0..g.sites()).map(|i| resolvent_power(zeta, g.wavenumber_sq(i), s, alpha)).collect()
}

pub(crate) fn mul_in_place(a: &mut [C64], b: &[C64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x *= y;
    }
}

/// `M_s f` for the parameters' `ζ` and `α` (conjugated `ζ` when `adjoint`).
pub(crate) fn bessel(params: &ResolventParams, f: &Field, s: f64, adjoint: bool) -> Field {
    if s == 0.0 {
        return f.clone();
    }
    let g = *f.grid();
    let zeta = if adjoint { params.zeta.conj() } else { params.zeta };
    let mut v = f.values().to_vec();
    fft::forward(&g, &mut v);
    mul_in_place(&mut v, &symbol(&g, zeta, s, params.alpha));
    fft::inverse(&g, &mut v);
    Field::from_values(g, v).expect("finite")
}

/// `Σ_j ρ_j ∂_j` applied to a spectrum, returning a real-space field.
pub(crate) fn drift_dot_grad_hat(rho: &VecField, uhat: &[C64]) -> Vec<C64> {
    let g = *rho.grid();
    let mut acc = vec![C64::new(0.0, 0.0); g.sites()];
    for (axis, rj) in rho.comps().iter().enumerate() {
        let mut w: Vec<C64> = uhat
            .iter()
            .enumerate()
            .map(|(i, z)| z * C64::new(0.0, derivative_wavenumber(&g, i, axis)))
            .collect();
        fft::inverse(&g, &mut w);
        for ((a, x), r) in acc.iter_mut().zip(&w).zip(rj.values()) {
            *a += x * r;
        }
    }
    acc
}

/// Spectrum of `−Σ_j ∂_j (c_j w)` for a real-space `w`.
pub(crate) fn neg_div_hat(c: &VecField, w: &[C64], conjugate: bool) -> Vec<C64> {
    let g = *c.grid();
    let mut acc = vec![C64::new(0.0, 0.0); g.sites()];
    for (axis, cj) in c.comps().iter().enumerate() {
        let mut t: Vec<C64> = w
            .iter()
            .zip(cj.values())
            .map(|(x, r)| x * if conjugate { r.conj() } else { *r })
            .collect();
        fft::forward(&g, &mut t);
        for (i, (a, z)) in acc.iter_mut().zip(t).enumerate() {
            *a -= z * C64::new(0.0, derivative_wavenumber(&g, i, axis));
        }
    }
    acc
}

fn check_drift(drift: &Drift, f: &Field) -> Result<()> {
    drift.grid().check_same(f.grid(), "drift and field")
}

/// `Z h = M_{1/4} σ·∇ M_{3/4} h`.
pub fn apply_z(params: &ResolventParams, drift: &Drift, h: &Field) -> Result<Field> {
    params.validate()?;
    check_drift(drift, h)?;
    Ok(z_unchecked(params, drift, h))
}

fn z_unchecked(params: &ResolventParams, drift: &Drift, h: &Field) -> Field {
    let g = *h.grid();
    let a = params.alpha;
    let mut hh = h.values().to_vec();
    fft::forward(&g, &mut hh);
    mul_in_place(&mut hh, &symbol(&g, params.zeta, 0.75, a));
    let mut w = drift_dot_grad_hat(drift.density(), &hh);
    fft::forward(&g, &mut w);
    mul_in_place(&mut w, &symbol(&g, params.zeta, 0.25, a));
    fft::inverse(&g, &mut w);
    Field::from_values(g, w).expect("finite")
}

/// `Z* h = M*_{3/4} (−∇·)(σ̄ M*_{1/4} h)`.
pub fn apply_z_adjoint(params: &ResolventParams, drift: &Drift, h: &Field) -> Result<Field> {
    params.validate()?;
    check_drift(drift, h)?;
    Ok(z_adjoint_unchecked(params, drift, h))
}

fn z_adjoint_unchecked(params: &ResolventParams, drift: &Drift, h: &Field) -> Field {
    let g = *h.grid();
    let a = params.alpha;
    let zc = params.zeta.conj();
    let mut w = h.values().to_vec();
    fft::forward(&g, &mut w);
    mul_in_place(&mut w, &symbol(&g, zc, 0.25, a));
    fft::inverse(&g, &mut w);
    let mut acc = neg_div_hat(drift.density(), &w, true);
    mul_in_place(&mut acc, &symbol(&g, zc, 0.75, a));
    fft::inverse(&g, &mut acc);
    Field::from_values(g, acc).expect("finite")
}

/// Outcome of a Neumann inversion.
#[derive(Debug, Clone, PartialEq)]
pub struct NeumannOutcome {
    pub u: Field,
    /// Number of applications of the operator in the series.
    pub iterations: usize,
    /// `‖(1+Z)u − f‖₂ / ‖f‖₂`.
    pub residual: f64,
    /// Last observed ratio `‖term_{j+1}‖ / ‖term_j‖`.
    pub ratio: f64,
}

/// `(1+Z)^{-1} f = Σ_j (−Z)^j f`, stopping once `‖term‖₂ ≤ tol·‖f‖₂`.
///
/// Five consecutive growing terms is reported as divergence.
pub fn neumann_inverse(
    apply_z: impl Fn(&Field) -> Result<Field>,
    f: &Field,
    tol: f64,
    maxit: usize,
) -> Result<NeumannOutcome> {
    let fnorm = f.norm2();
    if fnorm == 0.0 {
        return Ok(NeumannOutcome { u: f.clone(), iterations: 0, residual: 0.0, ratio: 0.0 });
    }
    let mut u = f.clone();
    let mut term = f.clone();
    let mut tnorm = fnorm;
    let mut growing = 0usize;
    let mut ratio = 0.0;
    let mut it = 0usize;
    loop {
        if it >= maxit {
            return Err(Error::NeumannStalled { ratio, iterations: it });
        }
        let next = apply_z(&term)?.scale_real(-1.0);
        it += 1;
        let nnorm = next.norm2();
        if !nnorm.is_finite() {
            return Err(Error::NeumannDivergence { ratio: f64::INFINITY, iterations: it });
        }
        ratio = nnorm / tnorm;
        growing = if nnorm > tnorm { growing + 1 } else { 0 };
        if growing >= 5 {
            return Err(Error::NeumannDivergence { ratio, iterations: it });
        }
        if nnorm <= tol * fnorm {
            break;
        }
        u.axpy(C64::new(1.0, 0.0), &next);
        term = next;
        tnorm = nnorm;
    }
    let residual = u.add(&apply_z(&u)?).sub(f).norm2() / fnorm;
    Ok(NeumannOutcome { u, iterations: it, residual, ratio })
}

/// Diagnostics of one `Θ` or `Ω` application.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplyReport {
    pub iterations: usize,
    pub residual: f64,
    pub exponents: Exponents,
}

fn omega_inner(params: &ResolventParams, drift: &Drift, f: &Field, adjoint: bool) -> Result<(Field, ApplyReport)> {
    params.validate()?;
    check_drift(drift, f)?;
    let e = params.exponents();
    let (first, last) = if adjoint { (e.omega_left, e.omega_right) } else { (e.omega_right, e.omega_left) };
    let x = bessel(params, f, first, adjoint);
    let out = if drift.is_zero() {
        NeumannOutcome { u: x, iterations: 0, residual: 0.0, ratio: 0.0 }
    } else if adjoint {
        neumann_inverse(|h| Ok(z_adjoint_unchecked(params, drift, h)), &x, params.neumann_tol, params.neumann_max)?
    } else {
        neumann_inverse(|h| Ok(z_unchecked(params, drift, h)), &x, params.neumann_tol, params.neumann_max)?
    };
    let y = bessel(params, &out.u, last, adjoint);
    Ok((y, ApplyReport { iterations: out.iterations, residual: out.residual, exponents: e }))
}

/// `Ω f`.
pub fn apply_omega(params: &ResolventParams, drift: &Drift, f: &Field) -> Result<Field> {
    Ok(omega_inner(params, drift, f, false)?.0)
}

pub fn apply_omega_report(params: &ResolventParams, drift: &Drift, f: &Field) -> Result<(Field, ApplyReport)> {
    omega_inner(params, drift, f, false)
}

/// `Θ f`, the approximate resolvent `(ζ + Λ(σ))^{-1} f`.
pub fn apply_theta(params: &ResolventParams, drift: &Drift, f: &Field) -> Result<Field> {
    Ok(apply_theta_report(params, drift, f)?.0)
}

pub fn apply_theta_report(params: &ResolventParams, drift: &Drift, f: &Field) -> Result<(Field, ApplyReport)> {
    params.validate()?;
    let e = params.exponents();
    let x = bessel(params, f, e.theta_right, false);
    let (y, rep) = omega_inner(params, drift, &x, false)?;
    Ok((bessel(params, &y, e.theta_left, false), rep))
}

/// `Θ* f`: factors in reverse order with `ζ̄` and `Z*` in the middle.
pub fn apply_theta_adjoint(params: &ResolventParams, drift: &Drift, f: &Field) -> Result<Field> {
    Ok(apply_theta_adjoint_report(params, drift, f)?.0)
}

pub fn apply_theta_adjoint_report(
    params: &ResolventParams,
    drift: &Drift,
    f: &Field,
) -> Result<(Field, ApplyReport)> {
    params.validate()?;
    let e = params.exponents();
    let x = bessel(params, f, e.theta_left, true);
    let (y, rep) = omega_inner(params, drift, &x, true)?;
    Ok((bessel(params, &y, e.theta_right, true), rep))
}

/// `Θ` for a measure drift.
pub fn apply_theta_measure(params: &ResolventParams, sigma: &Measure, f: &Field) -> Result<Field> {
    apply_theta(params, &Drift::from_measure(sigma)?, f)
}
