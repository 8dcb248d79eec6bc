//! Membership constants for the drift and potential classes, the constant
//! `m_d` and the admissible exponent intervals `𝒥` and `ℐ`.

mod md;

pub use md::{default_kappa_grid, estimate_m_d, ratio_at, MdEstimate, MdKappaRow, MdQuad};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::field::{Field, C64};
use crate::grid::Grid;
use crate::measures::Measure;
use crate::power::{positive_start, power_iterate, PowerOpts, PowerResult};
use crate::spectral::{self, resolvent_power};

/// Serde helper writing non-finite floats as the strings `"inf"`, `"-inf"`
/// or `"nan"`.
pub mod ext_float {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        F(f64),
        S(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::F(x) => Ok(x),
            Repr::S(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                _ => Err(serde::de::Error::custom(format!("bad float {s}"))),
            },
        }
    }
}

/// Open interval `(lo, hi)`; `hi` may be `+∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    #[serde(with = "ext_float")]
    pub lo: f64,
    #[serde(with = "ext_float")]
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, p: f64) -> bool {
        self.lo < p && p < self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Which {
    J,
    I,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalReport {
    pub which: Which,
    pub interval: Option<Interval>,
    /// `𝒥` only: some admissible `p` exceeds `d − 1`.
    pub has_p_above_d_minus_1: Option<bool>,
    /// `𝒥` only: `m·δ < (2d−5)/(d−2)²`.
    pub strong_feller_hypothesis: Option<bool>,
}

/// `𝒥` or `ℐ` for a given `δ` and `m`. Empty when `m·δ ≥ 1`.
pub fn admissible_interval(delta: f64, d: usize, which: Which, m: f64) -> IntervalReport {
    let md = m * delta;
    let interval = if md >= 1.0 || !(md >= 0.0) {
        None
    } else {
        let s = (1.0 - md).sqrt();
        Some(match which {
            Which::J => Interval { lo: (2.0 + s) / (1.0 + s), hi: (2.0 - s) / (1.0 - s) },
            Which::I => Interval { lo: 2.0 / (1.0 + s), hi: 2.0 / (1.0 - s) },
        })
    };
    let (above, hyp) = match which {
        Which::J => {
            let above = interval.is_some_and(|iv| iv.hi > d as f64 - 1.0);
            let dd = d as f64 - 2.0;
            let hyp = md < (2.0 * d as f64 - 5.0) / (dd * dd);
            (Some(above), Some(hyp))
        }
        Which::I => (None, None),
    };
    IntervalReport { which, interval, has_p_above_d_minus_1: above, strong_feller_hypothesis: hyp }
}

/// Closed-form upper bound `π^{1/2}(2e)^{-1/2} d^{d/2} (d−1)^{(1−d)/2}`.
pub fn m_d_bound(d: usize) -> f64 {
    let df = d as f64;
    std::f64::consts::PI.sqrt() / (2.0 * std::f64::consts::E).sqrt()
        * df.powf(df / 2.0)
        * (df - 1.0).powf((1.0 - df) / 2.0)
}

fn nonnegative_density(mu: &Measure, what: &str) -> Result<Field> {
    if mu.components() != 1 {
        return Err(Error::Domain(format!(
            "{what} needs a scalar measure; apply variation first"
        )));
    }
    let rho = mu.density().into_scalar()?;
    check_nonnegative(&rho, what)?;
    Ok(rho)
}

fn check_nonnegative(rho: &Field, what: &str) -> Result<()> {
    let scale = rho.sup();
    let tol = 1e-12 * scale;
    if rho.values().iter().any(|z| z.re < -tol || z.im.abs() > tol) {
        return Err(Error::Domain(format!(
            "{what} needs a nonnegative measure; apply variation first"
        )));
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("shift lambda = {lambda} must be positive")));
    }
    Ok(())
}

/// `sup_x (λ−Δ)^{-1/2}|μ|(x)` for a nonnegative scalar measure.
pub fn kato_delta(mu: &Measure, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let rho = nonnegative_density(mu, "kato_delta")?;
    kato_delta_density(&rho, lambda)
}

pub fn kato_delta_density(rho: &Field, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    check_nonnegative(rho, "kato_delta")?;
    let u = spectral::bessel_apply(rho, C64::new(lambda, 0.0), 0.5, 2.0)?;
    Ok(u.values().iter().map(|z| z.re).fold(0.0, f64::max))
}

/// Top eigenvalue of `(λ−Δ)^{-s} μ (λ−Δ)^{-s}`.
pub fn weak_form_delta(mu: &Measure, lambda: f64, s: f64) -> Result<f64> {
    let rho = nonnegative_density(mu, "weak_form_delta")?;
    Ok(weak_form_power(&rho, lambda, s, &PowerOpts::default())?.value)
}

/// [`weak_form_delta`] on a density, exposing the iteration record.
pub fn weak_form_power(rho: &Field, lambda: f64, s: f64, opts: &PowerOpts) -> Result<PowerResult> {
    check_lambda(lambda)?;
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::Domain(format!("weak form power s = {s} outside (0, 1]")));
    }
    check_nonnegative(rho, "weak_form_delta")?;
    let g = *rho.grid();
    if rho.sup() == 0.0 {
        return Ok(PowerResult { value: 0.0, iterations: 0, gap: 0.0, vector: vec![] });
    }
    let sym: Vec<f64> = (0..g.sites())
        .map(|i| resolvent_power(C64::new(lambda, 0.0), g.wavenumber_sq(i), s, 2.0).re)
        .collect();
    let dens: Vec<f64> = rho.values().iter().map(|z| z.re).collect();
    let mut start = positive_start(g.sites(), opts.seed);
    fft::forward(&g, &mut start);
    // The iterate lives in Fourier space: one inverse and one forward
    // transform per step.
    power_iterate(
        |v| {
            let mut w: Vec<C64> = v.iter().zip(&sym).map(|(z, m)| z * m).collect();
            fft::inverse(&g, &mut w);
            for (z, r) in w.iter_mut().zip(&dens) {
                *z *= r;
            }
            fft::forward(&g, &mut w);
            for (z, m) in w.iter_mut().zip(&sym) {
                *z *= m;
            }
            Ok(w)
        },
        start,
        opts,
    )
}

/// `Σ_j |b_j|²` of a density, as a scalar field.
fn squared_magnitude(mu: &Measure) -> Option<Field> {
    mu.ac().map(|a| a.magnitude().map(|z| C64::new(z.re * z.re, 0.0)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub lambda: f64,
    pub d: usize,
    /// Form bound of the density part, `‖b(λ−Δ)^{-1/2}‖²`.
    pub delta_f: Option<f64>,
    pub delta_k: f64,
    pub delta_weak: f64,
    pub delta_pot: Option<f64>,
    /// Power `s` used for `delta_weak`.
    pub weak_power: f64,
    pub m_d: f64,
    pub interval_j: Option<Interval>,
    pub interval_i: Option<Interval>,
    /// `m_d · δ < 1`.
    pub hyp_md_delta: bool,
    /// `m_d · δ < (2d−5)/(d−2)²`.
    pub hyp_strong_feller: bool,
    pub has_p_above_d_minus_1: bool,
    /// `d < 3`: outside the dimension range of the theory.
    pub diagnostic_only: bool,
}

impl ClassReport {
    fn from_parts(
        d: usize,
        lambda: f64,
        delta_f: Option<f64>,
        delta_k: f64,
        delta_weak: f64,
        delta_pot: Option<f64>,
        weak_power: f64,
    ) -> Self {
        let m_d = m_d_bound(d);
        let j = admissible_interval(delta_weak, d, Which::J, m_d);
        let i = admissible_interval(delta_weak, d, Which::I, m_d);
        Self {
            lambda,
            d,
            delta_f,
            delta_k,
            delta_weak,
            delta_pot,
            weak_power,
            m_d,
            interval_j: j.interval,
            interval_i: i.interval,
            hyp_md_delta: m_d * delta_weak < 1.0,
            hyp_strong_feller: j.strong_feller_hypothesis.unwrap_or(false),
            has_p_above_d_minus_1: j.has_p_above_d_minus_1.unwrap_or(false),
            diagnostic_only: d < 3,
        }
    }
}

/// All class constants of a drift at shift `λ` for generator order `α`.
pub fn classify(sigma: &Measure, lambda: f64, alpha: f64) -> Result<ClassReport> {
    check_lambda(lambda)?;
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(Error::Domain(format!("alpha = {alpha} outside (1, 2]")));
    }
    let g: Grid = *sigma.grid();
    let var = sigma.variation();
    let delta_k = kato_delta(&var, lambda)?;
    let s = (alpha - 1.0) / 4.0;
    let delta_weak = weak_form_delta(&var, lambda, s)?;
    let delta_f = match squared_magnitude(sigma) {
        Some(b2) => Some(weak_form_power(&b2, lambda, 0.5, &PowerOpts::default())?.value),
        None if sigma.is_zero() => Some(0.0),
        None => None,
    };
    Ok(ClassReport::from_parts(g.dim(), lambda, delta_f, delta_k, delta_weak, None, s))
}

/// Class constants of a scalar potential; `delta_pot` is the `s = 1/2` bound.
pub fn classify_potential(psi: &Measure, lambda: f64) -> Result<ClassReport> {
    check_lambda(lambda)?;
    let var = psi.variation();
    let delta_k = kato_delta(&var, lambda)?;
    let delta_weak = weak_form_delta(&var, lambda, 0.25)?;
    let delta_pot = weak_form_delta(&var, lambda, 0.5)?;
    Ok(ClassReport::from_parts(psi.grid().dim(), lambda, None, delta_k, delta_weak, Some(delta_pot), 0.25))
}
