//! The representation `Ω̃ = Q (1+T)^{-1} G` for absolutely continuous drifts.
//!
//! With `v^{1/p} = |v|^{1/p−1} v`:
//! `Q = M_{1/(2q′)} |v|^{1/p′}`, `T = v^{1/p}·∇ M_1 |v|^{1/p′}`,
//! `G = v^{1/p}·∇ M_{1/2+1/(2r)}`.

use crate::error::{Error, Result};
use crate::fft;
use crate::field::{Field, VecField, C64};
use crate::norms::lp;
use crate::power::random_start;

use super::{bessel, drift_dot_grad_hat, mul_in_place, neg_div_hat, neumann_inverse, symbol, ApplyReport, Drift, ResolventParams};

/// Pointwise weights `|v|^{1/p′}` and `v^{1/p}` for one exponent.
#[derive(Debug, Clone)]
pub struct AltParts {
    pub p: f64,
    pub left: Field,
    pub right: VecField,
}

impl AltParts {
    pub fn new(drift: &Drift, p: f64) -> Result<Self> {
        if drift.has_singular_part() {
            return Err(Error::Representation(
                "the factored representation needs an absolutely continuous drift".into(),
            ));
        }
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::Domain(format!("p = {p} outside (1, inf)")));
        }
        let v = drift.density();
        let mag = v.magnitude();
        let inv_pp = 1.0 - 1.0 / p;
        let left = mag.map(|m| C64::new(if m.re > 0.0 { m.re.powf(inv_pp) } else { 0.0 }, 0.0));
        let scale: Vec<f64> = mag
            .values()
            .iter()
            .map(|m| if m.re > 0.0 { m.re.powf(1.0 / p - 1.0) } else { 0.0 })
            .collect();
        let s = Field::from_real(*v.grid(), scale)?;
        Ok(Self { p, left, right: v.mul_scalar_field(&s) })
    }
}

/// `v^{1/p}·∇ (M_s w)`.
fn weighted_grad(params: &ResolventParams, parts: &AltParts, w: &Field, s: f64) -> Field {
    let g = *w.grid();
    let mut h = w.values().to_vec();
    fft::forward(&g, &mut h);
    mul_in_place(&mut h, &symbol(&g, params.zeta, s, params.alpha));
    Field::from_values(g, drift_dot_grad_hat(&parts.right, &h)).expect("finite")
}

fn t_unchecked(params: &ResolventParams, parts: &AltParts, h: &Field) -> Field {
    weighted_grad(params, parts, &h.mul(&parts.left), 1.0)
}

/// `T* h = |v|^{1/p′} M*_1 (−∇·)(conj(v^{1/p}) h)`.
fn t_adjoint_unchecked(params: &ResolventParams, parts: &AltParts, h: &Field) -> Field {
    let g = *h.grid();
    let mut acc = neg_div_hat(&parts.right, h.values(), true);
    mul_in_place(&mut acc, &symbol(&g, params.zeta.conj(), 1.0, params.alpha));
    fft::inverse(&g, &mut acc);
    Field::from_values(g, acc).expect("finite").mul(&parts.left)
}

pub fn apply_t(params: &ResolventParams, drift: &Drift, h: &Field) -> Result<Field> {
    params.validate()?;
    drift.grid().check_same(h.grid(), "drift and field")?;
    Ok(t_unchecked(params, &AltParts::new(drift, params.p)?, h))
}

pub fn apply_t_adjoint(params: &ResolventParams, drift: &Drift, h: &Field) -> Result<Field> {
    params.validate()?;
    drift.grid().check_same(h.grid(), "drift and field")?;
    Ok(t_adjoint_unchecked(params, &AltParts::new(drift, params.p)?, h))
}

/// `Ω̃ f`. Zero when `v = 0`.
pub fn apply_alt_omega(params: &ResolventParams, drift: &Drift, f: &Field) -> Result<(Field, ApplyReport)> {
    params.validate()?;
    drift.grid().check_same(f.grid(), "drift and field")?;
    let parts = AltParts::new(drift, params.p)?;
    let e = params.exponents();
    let gf = weighted_grad(params, &parts, f, 0.5 + 0.5 / params.r);
    let out = neumann_inverse(|h| Ok(t_unchecked(params, &parts, h)), &gf, params.neumann_tol, params.neumann_max)?;
    let q_prime_inv = 1.0 - params.inv_q();
    let u = bessel(params, &out.u.mul(&parts.left), q_prime_inv / 2.0, false);
    Ok((u, ApplyReport { iterations: out.iterations, residual: out.residual, exponents: e }))
}

/// `Ω` through the representation: `M_{ω_l+ω_r} f − Ω̃ f`.
pub fn alt_omega_full(params: &ResolventParams, drift: &Drift, f: &Field) -> Result<Field> {
    let (pert, _) = apply_alt_omega(params, drift, f)?;
    let e = params.exponents();
    Ok(bessel(params, f, e.omega_left + e.omega_right, false).sub(&pert))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PNormEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `|y|^{p−1} sgn(y) / ‖y‖_p^{p−1}`, the norming functional of `y` in `L^{p′}`.
fn dual(y: &Field, p: f64) -> Result<Field> {
    let n = lp(y, p)?;
    if n == 0.0 {
        return Ok(y.clone());
    }
    Ok(y.map(|z| {
        let a = z.norm();
        if a == 0.0 {
            C64::new(0.0, 0.0)
        } else {
            z * (a.powf(p - 2.0) / n.powf(p - 1.0))
        }
    }))
}

/// Lower estimate of `‖T‖_{p→p}` by the nonlinear power method
/// `x ← dual_{p′}(T* dual_p(T x))`.
pub fn t_norm_estimate(params: &ResolventParams, drift: &Drift, tol: f64, max_iter: usize, seed: u64) -> Result<PNormEstimate> {
    params.validate()?;
    let parts = AltParts::new(drift, params.p)?;
    let p = params.p;
    let pp = p / (p - 1.0);
    let g = *drift.grid();
    let mut x = Field::from_values(g, random_start(g.sites(), seed))?;
    // A smooth positive component keeps the start away from the kernel of T.
    x = x.add(&Field::from_real_fn(g, |y| 1.0 + (g.k0() * y[0]).sin()));
    let nx = lp(&x, p)?;
    x = x.scale_real(1.0 / nx);
    let mut last = 0.0;
    for it in 1..=max_iter {
        let y = t_unchecked(params, &parts, &x);
        let est = lp(&y, p)?;
        if est == 0.0 {
            return Ok(PNormEstimate { value: 0.0, iterations: it, converged: true });
        }
        if (est - last).abs() <= tol * est {
            return Ok(PNormEstimate { value: est, iterations: it, converged: true });
        }
        last = est;
        let z = t_adjoint_unchecked(params, &parts, &dual(&y, p)?);
        x = dual(&z, pp)?;
        let nx = lp(&x, p)?;
        if nx == 0.0 {
            return Ok(PNormEstimate { value: est, iterations: it, converged: true });
        }
        x = x.scale_real(1.0 / nx);
    }
    Ok(PNormEstimate { value: last, iterations: max_iter, converged: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::resolvent::apply_omega;

    fn drift(g: Grid, amp: f64) -> Drift {
        let k = g.k0();
        let v = VecField::new(vec![
            Field::from_real_fn(g, |x| amp * (1.0 + (k * x[0]).sin())),
            Field::from_real_fn(g, |x| amp * (k * x[1]).cos()),
        ])
        .unwrap();
        Drift::from_field(v).unwrap()
    }

    #[test]
    fn zero_drift_gives_zero() {
        let g = Grid::new(2, 16, 2.0).unwrap();
        let f = Field::from_real_fn(g, |x| x[0].cos());
        let p = ResolventParams::new(C64::new(1.0, 0.0));
        let (u, _) = apply_alt_omega(&p, &Drift::zero(g), &f).unwrap();
        assert_eq!(u.sup(), 0.0);
    }

    #[test]
    fn agrees_with_direct_omega() {
        let g = Grid::new(2, 16, 2.0).unwrap();
        let d = drift(g, 0.4);
        let f = Field::from_real_fn(g, |x| (g.k0() * x[0]).cos() + 0.3 * (2.0 * g.k0() * x[1]).sin());
        for (pp, q, r) in [(2.0, f64::INFINITY, 1.0), (2.5, 4.0, 1.5)] {
            let p = ResolventParams { p: pp, q, r, ..ResolventParams::new(C64::new(3.0, 1.0)) };
            let a = alt_omega_full(&p, &d, &f).unwrap();
            let b = apply_omega(&p, &d, &f).unwrap();
            assert!(a.rel_l2(&b) < 1e-9, "{}", a.rel_l2(&b));
        }
    }

    #[test]
    fn t_adjoint_pairing_and_two_norm() {
        let g = Grid::new(2, 16, 2.0).unwrap();
        let d = drift(g, 0.4);
        let p = ResolventParams::new(C64::new(2.0, 0.5));
        let f = Field::from_real_fn(g, |x| (g.k0() * x[0]).sin());
        let h = Field::from_real_fn(g, |x| (g.k0() * (x[0] + x[1])).cos());
        let lhs = apply_t(&p, &d, &f).unwrap().inner(&h);
        let rhs = f.inner(&apply_t_adjoint(&p, &d, &h).unwrap());
        assert!((lhs - rhs).norm() < 1e-12 * lhs.norm().max(1e-3));
        let est = t_norm_estimate(&p, &d, 1e-10, 500, 3).unwrap();
        let ratio = apply_t(&p, &d, &f).unwrap().norm2() / f.norm2();
        assert!(est.converged && est.value >= ratio * (1.0 - 1e-9));
    }

    #[test]
    fn singular_drift_rejected() {
        let g = Grid::new(2, 8, 2.0).unwrap();
        let m = crate::measures::atom(g, None, &[0.1, 0.0]).unwrap();
        let d = Drift::from_measure(&m).unwrap();
        let p = ResolventParams::new(C64::new(1.0, 0.0));
        assert!(matches!(apply_alt_omega(&p, &d, &Field::zeros(g)), Err(Error::Representation(_))));
    }
}
