//! Generator, Schrödinger resolvent, norm estimates and diagnostics.

use crate::error::{Error, Result};
use crate::field::{Field, VecField, C64};
use crate::grid::Grid;
use crate::measures::Measure;
use crate::norms::{lp, sup};
use crate::power::{power_iterate, random_start, PowerOpts, PowerResult};
use crate::spectral::{apply_multiplier, bessel_apply, divergence, fractional_laplacian, gradient, MultiplierSymbol};

use super::{apply_z, apply_z_adjoint, bessel, neumann_inverse, ApplyReport, Drift, ResolventParams};

/// `(−Δ)^{α/2} f + v·∇f`.
pub fn apply_generator(v: &VecField, f: &Field, alpha: f64) -> Result<Field> {
    v.grid().check_same(f.grid(), "drift and field")?;
    Ok(fractional_laplacian(f, alpha).add(&v.dot(&gradient(f))))
}

/// `(−Δ)^{α/2} f − ∇·(v̄ f)`.
pub fn apply_generator_adjoint(v: &VecField, f: &Field, alpha: f64) -> Result<Field> {
    v.grid().check_same(f.grid(), "drift and field")?;
    let flux = VecField::new(v.comps().iter().map(|c| c.map(|z| z.conj()).mul(f)).collect())?;
    Ok(fractional_laplacian(f, alpha).sub(&divergence(&flux)?))
}

/// `(ζ + (−Δ)^{α/2} + V)^{-1} f` for a potential measure `Ψ`, as
/// `M_{1/2+ε} (1 + M_{1/2−ε} V M_{1/2+ε})^{-1} M_{1/2−ε}` with `ε = 1/(2q)`.
pub fn schrodinger_theta(params: &ResolventParams, psi: &Measure, f: &Field) -> Result<(Field, ApplyReport)> {
    if psi.components() != 1 {
        return Err(Error::Domain(format!("potential needs 1 component, got {}", psi.components())));
    }
    psi.grid().check_same(f.grid(), "potential and field")?;
    schrodinger_theta_density(params, &psi.density().into_comps().remove(0), f)
}

pub fn schrodinger_theta_density(params: &ResolventParams, v: &Field, f: &Field) -> Result<(Field, ApplyReport)> {
    params.validate()?;
    v.grid().check_same(f.grid(), "potential and field")?;
    let eps = params.inv_q() / 2.0;
    let (a, b) = (0.5 + eps, 0.5 - eps);
    let x = bessel(params, f, b, false);
    let out = if v.sup() == 0.0 {
        super::NeumannOutcome { u: x, iterations: 0, residual: 0.0, ratio: 0.0 }
    } else {
        neumann_inverse(
            |h| Ok(bessel(params, &bessel(params, h, a, false).mul(v), b, false)),
            &x,
            params.neumann_tol,
            params.neumann_max,
        )?
    };
    Ok((bessel(params, &out.u, a, false), ApplyReport { iterations: out.iterations, residual: out.residual, exponents: params.exponents() }))
}

/// `‖A‖₂` from power iteration on `A*A`.
pub fn operator_norm(
    grid: crate::grid::Grid,
    apply: impl Fn(&Field) -> Result<Field>,
    apply_adj: impl Fn(&Field) -> Result<Field>,
    opts: &PowerOpts,
) -> Result<PowerResult> {
    let r = power_iterate(
        |x| {
            let f = Field::from_values(grid, x.to_vec())?;
            Ok(apply_adj(&apply(&f)?)?.into_values())
        },
        random_start(grid.sites(), opts.seed),
        opts,
    )?;
    Ok(PowerResult { value: r.value.max(0.0).sqrt(), ..r })
}

/// `‖Z(ζ, σ)‖_{2→2}`.
pub fn z_norm_estimate(params: &ResolventParams, drift: &Drift, opts: &PowerOpts) -> Result<PowerResult> {
    operator_norm(
        *drift.grid(),
        |h| apply_z(params, drift, h),
        |h| apply_z_adjoint(params, drift, h),
        opts,
    )
}

/// `‖M_{1/4} |v| M_{1/4}‖_{2→2}` with `|v|` Euclidean.
pub fn sandwich_norm_estimate(params: &ResolventParams, drift: &Drift, opts: &PowerOpts) -> Result<PowerResult> {
    params.validate()?;
    let mag = drift.density().magnitude();
    let s = (params.alpha - 1.0) / 4.0;
    operator_norm(
        *drift.grid(),
        |h| Ok(bessel(params, &bessel(params, h, s, false).mul(&mag), s, false)),
        |h| Ok(bessel(params, &bessel(params, h, s, true).mul(&mag), s, true)),
        opts,
    )
}

/// `(λ−Δ)^{1/4}` tabulated on one grid, for repeated Kato–Ponce ratios.
pub struct KatoPonce {
    grid: Grid,
    table: MultiplierSymbol,
}

impl KatoPonce {
    pub fn new(grid: Grid, lambda: f64) -> Result<Self> {
        let m = MultiplierSymbol::resolvent(C64::new(lambda, 0.0), -0.25, 2.0);
        m.validate(&grid)?;
        let table = MultiplierSymbol::Custom((0..grid.sites()).map(|i| m.eval(&grid, i)).collect());
        Ok(Self { grid, table })
    }

    /// `‖(λ−Δ)^{1/4}(fg)‖₂ / (‖f‖_∞ ‖(λ−Δ)^{1/4} g‖₂ + ‖(λ−Δ)^{1/4} f‖_∞ ‖g‖₂)`.
    pub fn ratio(&self, f: &Field, g: &Field) -> Result<f64> {
        self.grid.check_same(f.grid(), "Kato-Ponce field")?;
        f.grid().check_same(g.grid(), "Kato-Ponce pair")?;
        let t = &self.table;
        let num = apply_multiplier(&f.mul(g), t)?.norm2();
        let den = sup(f) * apply_multiplier(g, t)?.norm2() + sup(&apply_multiplier(f, t)?) * g.norm2();
        if !(den > 0.0) {
            return Err(Error::Domain("Kato-Ponce denominator vanishes".into()));
        }
        Ok(num / den)
    }
}

/// One-off [`KatoPonce::ratio`].
pub fn kato_ponce_ratio(f: &Field, g: &Field, lambda: f64) -> Result<f64> {
    KatoPonce::new(*f.grid(), lambda)?.ratio(f, g)
}

/// `‖(1−Δ)^{(1+1/q)/2} u‖_p`.
pub fn smoothing_proxy(u: &Field, q: f64, p: f64) -> Result<f64> {
    let s = (1.0 + 1.0 / q) / 2.0;
    lp(&bessel_apply(u, C64::new(1.0, 0.0), -s, 2.0)?, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn generator_basics() {
        let g = Grid::new(2, 16, 2.0).unwrap();
        let v = VecField::new(vec![
            Field::from_real_fn(g, |x| x[0].sin()),
            Field::from_real_fn(g, |x| x[1].cos()),
        ])
        .unwrap();
        let c = Field::constant(g, C64::new(2.0, 0.0));
        assert!(apply_generator(&v, &c, 2.0).unwrap().sup() < 1e-12);
        let w = Field::plane_wave(g, &[1, 2]);
        let k2 = g.k0() * g.k0() * 5.0;
        for a in [2.0, 1.5] {
            let out = apply_generator(&VecField::zeros(g, 2), &w, a).unwrap();
            assert!(out.rel_l2(&w.scale_real(k2.powf(a / 2.0))) < 1e-12);
        }
        let f = Field::from_real_fn(g, |x| (g.k0() * x[0]).cos());
        let h = Field::from_real_fn(g, |x| (g.k0() * x[1]).sin() + 1.0);
        let lhs = apply_generator(&v, &f, 2.0).unwrap().inner(&h);
        let rhs = f.inner(&apply_generator_adjoint(&v, &h, 2.0).unwrap());
        assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn uniform_potential_commutes() {
        let g = Grid::new(1, 32, 4.0).unwrap();
        let c = 0.4;
        let psi = Measure::from_scalar_density(Field::constant(g, C64::new(c, 0.0)));
        let f = Field::from_real_fn(g, |x| (g.k0() * x[0]).sin() + 0.5 * (3.0 * g.k0() * x[0]).cos());
        let zeta = C64::new(1.0, 0.5);
        for q in [f64::INFINITY, 4.0] {
            let p = ResolventParams { q, ..ResolventParams::new(zeta) };
            let (u, _) = schrodinger_theta(&p, &psi, &f).unwrap();
            let exact = bessel_apply(&f, zeta + c, 1.0, 2.0).unwrap();
            assert!(u.rel_l2(&exact) < 1e-11);
        }
    }

    #[test]
    fn kato_ponce_constant_and_waves() {
        let g = Grid::new(1, 32, 4.0).unwrap();
        let lam = 1.0;
        let one = Field::constant(g, C64::new(1.0, 0.0));
        let w = Field::plane_wave(g, &[3]);
        let r = kato_ponce_ratio(&one, &w, lam).unwrap();
        let a = (lam + (3.0 * g.k0()).powi(2)).powf(0.25);
        assert!((r - a / (a + lam.powf(0.25))).abs() < 1e-12);
        let v = Field::plane_wave(g, &[2]);
        let r = kato_ponce_ratio(&v, &w, lam).unwrap();
        let s = |m: f64| (lam + (m * g.k0()).powi(2)).powf(0.25);
        assert!((r - s(5.0) / (s(3.0) + s(2.0))).abs() < 1e-12);
        assert!(kato_ponce_ratio(&Field::zeros(g), &w, lam).is_err());
    }

    #[test]
    fn zero_drift_norms() {
        let g = Grid::new(1, 16, 2.0).unwrap();
        let p = ResolventParams::new(C64::new(1.0, 0.0));
        let r = z_norm_estimate(&p, &Drift::zero(g), &PowerOpts::default()).unwrap();
        assert_eq!(r.value, 0.0);
    }
}
