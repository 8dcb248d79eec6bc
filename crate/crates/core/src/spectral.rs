//! Fourier multiplier calculus on the periodic lattice.
//!
//! Every constant-coefficient operator in the crate is a diagonal symbol in
//! frequency space: `(ζ + |ξ|^α)^{-s}`, `e^{-t|ξ|²}` and `iξ_j`. Symbols are
//! evaluated lazily per frequency; only [`MultiplierSymbol::Custom`] is
//! tabulated.
//!
//! The first-derivative symbol is set to zero on the unpaired Nyquist mode
//! `m_j = -n/2` so that derivatives of real fields stay real. It is still
//! exactly skew-adjoint, and `|ξ̃_j| ≤ |ξ_j|`.

use crate::error::{Error, Result};
use crate::fft;
use crate::field::{Field, VecField, C64};
use crate::grid::Grid;

/// Closed set of multiplier symbols.
#[derive(Debug, Clone, PartialEq)]
pub enum MultiplierSymbol {
    /// `(ζ + |ξ|^α)^{-s}` on the principal branch.
    ResolventPower { zeta: C64, s: f64, alpha: f64 },
    /// `e^{-t|ξ|²}`.
    Heat { t: f64 },
    /// `iξ_j` (zero on the Nyquist mode of axis `j`).
    Gradient { axis: usize },
    /// Tabulated values in FFT order.
    Custom(Vec<C64>),
}

impl MultiplierSymbol {
    pub fn resolvent(zeta: C64, s: f64, alpha: f64) -> Self {
        Self::ResolventPower { zeta, s, alpha }
    }

    /// Checks that the symbol is finite on every frequency of `grid`.
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        match self {
            Self::ResolventPower { zeta, s, alpha } => {
                // At ξ = 0 the base is ζ itself.
                if zeta.re <= 0.0 && *s != 0.0 {
                    return Err(Error::SingularSymbol {
                        index: 0,
                        detail: format!("resolvent power with zeta = {zeta} needs Re zeta > 0"),
                    });
                }
                if !(*alpha > 0.0) {
                    return Err(Error::Domain(format!("symbol order alpha = {alpha} must be positive")));
                }
                Ok(())
            }
            Self::Heat { t } => {
                if *t < 0.0 {
                    Err(Error::Domain(format!("heat time t = {t} must be nonnegative")))
                } else {
                    Ok(())
                }
            }
            Self::Gradient { axis } => {
                if *axis >= grid.dim() {
                    Err(Error::Domain(format!("gradient axis {axis} >= d = {}", grid.dim())))
                } else {
                    Ok(())
                }
            }
            Self::Custom(v) => {
                if v.len() != grid.sites() {
                    return Err(Error::GridMismatch(format!(
                        "custom symbol has {} entries for {} frequencies",
                        v.len(),
                        grid.sites()
                    )));
                }
                match v.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    Some(index) => Err(Error::SingularSymbol {
                        index,
                        detail: "non-finite tabulated value".into(),
                    }),
                    None => Ok(()),
                }
            }
        }
    }

    /// Symbol value at flat frequency index `idx`.
    #[inline]
    pub fn eval(&self, grid: &Grid, idx: usize) -> C64 {
        match self {
            Self::ResolventPower { zeta, s, alpha } => {
                resolvent_power(*zeta, grid.wavenumber_sq(idx), *s, *alpha)
            }
            Self::Heat { t } => C64::new((-t * grid.wavenumber_sq(idx)).exp(), 0.0),
            Self::Gradient { axis } => C64::new(0.0, derivative_wavenumber(grid, idx, *axis)),
            Self::Custom(v) => v[idx],
        }
    }
}

/// `(ζ + k^α)^{-s}` with `k² = ksq`.
#[inline]
pub fn resolvent_power(zeta: C64, ksq: f64, s: f64, alpha: f64) -> C64 {
    if s == 0.0 {
        return C64::new(1.0, 0.0);
    }
    let ka = if alpha == 2.0 { ksq } else { ksq.powf(alpha / 2.0) };
    let base = zeta + ka;
    if base.im == 0.0 && base.re > 0.0 {
        C64::new(base.re.powf(-s), 0.0)
    } else {
        base.powf(-s)
    }
}

/// `ξ_j` as used by the derivative symbol (0 on the Nyquist mode).
#[inline]
pub fn derivative_wavenumber(grid: &Grid, idx: usize, axis: usize) -> f64 {
    let ix = grid.unravel(idx);
    if grid.is_nyquist(ix[axis]) {
        0.0
    } else {
        grid.k0() * grid.signed_mode(ix[axis]) as f64
    }
}

/// Forward transform of a field.
pub fn spectrum(f: &Field) -> Vec<C64> {
    let mut v = f.values().to_vec();
    fft::forward(f.grid(), &mut v);
    v
}

/// Inverse transform of a spectrum into a field.
pub fn from_spectrum(grid: Grid, mut spec: Vec<C64>) -> Field {
    fft::inverse(&grid, &mut spec);
    Field::from_values(grid, spec).expect("finite inverse transform")
}

/// Multiplies a spectrum in place by a symbol.
pub fn scale_spectrum(grid: &Grid, spec: &mut [C64], m: &MultiplierSymbol) {
    for (i, z) in spec.iter_mut().enumerate() {
        *z *= m.eval(grid, i);
    }
}

/// Inverse transform of `m(ξ)·f̂(ξ)`.
pub fn apply_multiplier(f: &Field, m: &MultiplierSymbol) -> Result<Field> {
    m.validate(f.grid())?;
    let grid = *f.grid();
    let mut spec = spectrum(f);
    scale_spectrum(&grid, &mut spec, m);
    Ok(from_spectrum(grid, spec))
}

fn check_bessel(zeta: C64, s: f64, alpha: f64) -> Result<()> {
    if !(-1.0..=2.0).contains(&s) {
        return Err(Error::Domain(format!("Bessel exponent s = {s} outside [-1, 2]")));
    }
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(Error::Domain(format!("generator order alpha = {alpha} outside (1, 2]")));
    }
    if zeta.re <= 0.0 {
        return Err(Error::SingularSymbol {
            index: 0,
            detail: format!("Bessel power needs Re zeta > 0, got {zeta}"),
        });
    }
    Ok(())
}

/// `(ζ + (−Δ)^{α/2})^{-s} f`.
pub fn bessel_apply(f: &Field, zeta: C64, s: f64, alpha: f64) -> Result<Field> {
    check_bessel(zeta, s, alpha)?;
    apply_multiplier(f, &MultiplierSymbol::resolvent(zeta, s, alpha))
}

/// Spectral gradient, one component per axis.
pub fn gradient(f: &Field) -> VecField {
    let grid = *f.grid();
    let spec = spectrum(f);
    let comps = (0..grid.dim())
        .map(|axis| {
            let mut s = spec.clone();
            for (i, z) in s.iter_mut().enumerate() {
                *z *= C64::new(0.0, derivative_wavenumber(&grid, i, axis));
            }
            from_spectrum(grid, s)
        })
        .collect();
    VecField::new(comps).expect("components share the grid")
}

/// Spectral divergence `Σ_j ∂_j v_j`; the negative adjoint of [`gradient`].
pub fn divergence(v: &VecField) -> Result<Field> {
    let grid = *v.grid();
    if v.components() != grid.dim() {
        return Err(Error::Domain(format!(
            "divergence needs {} components, got {}",
            grid.dim(),
            v.components()
        )));
    }
    let mut acc = vec![C64::new(0.0, 0.0); grid.sites()];
    for (axis, c) in v.comps().iter().enumerate() {
        let s = spectrum(c);
        for (i, (a, z)) in acc.iter_mut().zip(s).enumerate() {
            *a += z * C64::new(0.0, derivative_wavenumber(&grid, i, axis));
        }
    }
    Ok(from_spectrum(grid, acc))
}

/// Heat semigroup `e^{tΔ} f`.
pub fn heat(f: &Field, t: f64) -> Result<Field> {
    if t < 0.0 {
        return Err(Error::Domain(format!("heat time t = {t} must be nonnegative")));
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    apply_multiplier(f, &MultiplierSymbol::Heat { t })
}

/// Samples the trigonometric interpolant of `f` on the grid refined by
/// a power-of-two `factor` (spectral zero padding; Nyquist modes split
/// evenly between `±n/2`).
pub fn upsample(f: &Field, factor: usize) -> Result<Field> {
    let g = *f.grid();
    if factor == 0 {
        return Err(Error::Domain("upsampling factor must be positive".into()));
    }
    if factor == 1 {
        return Ok(f.clone());
    }
    let fine = Grid::with_budget(g.dim(), g.n() * factor, g.len(), usize::MAX)?;
    let d = g.dim();
    let nf = fine.n() as i64;
    let spec = spectrum(f);
    let mut out = vec![C64::new(0.0, 0.0); fine.sites()];
    let scale = fine.sites() as f64 / g.sites() as f64;
    for (idx, c) in spec.iter().enumerate() {
        let ix = g.unravel(idx);
        let nyq: Vec<usize> = (0..d).filter(|&a| g.is_nyquist(ix[a])).collect();
        let w = *c * scale / (1u64 << nyq.len()) as f64;
        for mask in 0..(1usize << nyq.len()) {
            let mut fi = [0usize; crate::grid::MAX_DIM];
            for a in 0..d {
                let mut m = g.signed_mode(ix[a]);
                if let Some(b) = nyq.iter().position(|&x| x == a) {
                    m = if mask >> b & 1 == 1 { (g.n() / 2) as i64 } else { -((g.n() / 2) as i64) };
                }
                fi[a] = m.rem_euclid(nf) as usize;
            }
            out[fine.ravel(&fi[..d])] += w;
        }
    }
    Ok(from_spectrum(fine, out))
}

/// `(−Δ)^{α/2} f`.
pub fn fractional_laplacian(f: &Field, alpha: f64) -> Field {
    let grid = *f.grid();
    let mut spec = spectrum(f);
    for (i, z) in spec.iter_mut().enumerate() {
        let ksq = grid.wavenumber_sq(i);
        *z *= if alpha == 2.0 { ksq } else { ksq.powf(alpha / 2.0) };
    }
    from_spectrum(grid, spec)
}

/// Evaluates the trigonometric interpolant of `f` at an arbitrary point.
///
/// The Nyquist coefficient is split evenly between `±n/2` so real fields
/// interpolate to real values.
pub struct TrigInterpolant {
    grid: Grid,
    coeffs: Vec<C64>,
}

impl TrigInterpolant {
    pub fn new(f: &Field) -> Self {
        let grid = *f.grid();
        let mut coeffs = spectrum(f);
        let inv_n = 1.0 / grid.sites() as f64;
        for z in coeffs.iter_mut() {
            *z *= inv_n;
        }
        Self { grid, coeffs }
    }

    pub fn eval(&self, x: &[f64]) -> C64 {
        let g = &self.grid;
        let d = g.dim();
        let n = g.n();
        let k0 = g.k0();
        // Per-axis phase tables: e^{i k0 m x_a} for every FFT position, with the
        // Nyquist position replaced by cos(k0 n/2 x_a).
        let mut tables: Vec<Vec<C64>> = Vec::with_capacity(d);
        for &xa in x.iter().take(d) {
            let t: Vec<C64> = (0..n)
                .map(|i| {
                    if g.is_nyquist(i) {
                        C64::new((k0 * (n / 2) as f64 * xa).cos(), 0.0)
                    } else {
                        C64::from_polar(1.0, k0 * g.signed_mode(i) as f64 * xa)
                    }
                })
                .collect();
            tables.push(t);
        }
        let mut acc = C64::new(0.0, 0.0);
        for (idx, c) in self.coeffs.iter().enumerate() {
            let ix = g.unravel(idx);
            let mut ph = C64::new(1.0, 0.0);
            for a in 0..d {
                ph *= tables[a][ix[a]];
            }
            acc += c * ph;
        }
        acc
    }
}
