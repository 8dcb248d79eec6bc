//! Grid functions.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;

pub type C64 = Complex64;

/// Complex scalar grid function.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<C64>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![C64::new(0.0, 0.0); grid.sites()],
        }
    }

    pub fn constant(grid: Grid, c: C64) -> Self {
        Self {
            grid,
            values: vec![c; grid.sites()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.sites() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} sites",
                values.len(),
                grid.sites()
            )));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("field values"));
        }
        Ok(Self { grid, values })
    }

    pub fn from_real(grid: Grid, values: Vec<f64>) -> Result<Self> {
        Self::from_values(grid, values.into_iter().map(|x| C64::new(x, 0.0)).collect())
    }

    /// Samples a function of position at every site.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> C64) -> Self {
        let d = grid.dim();
        let values = (0..grid.sites())
            .map(|i| {
                let x = grid.position(i);
                f(&x[..d])
            })
            .collect();
        Self { grid, values }
    }

    pub fn from_real_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        Self::from_fn(grid, |x| C64::new(f(x), 0.0))
    }

    /// Plane wave `exp(i ξ·x)` with integer mode vector `m` (ξ = 2π m / L).
    pub fn plane_wave(grid: Grid, m: &[i64]) -> Self {
        let k0 = grid.k0();
        Self::from_fn(grid, |x| {
            let phase: f64 = x.iter().zip(m).map(|(xi, &mi)| k0 * mi as f64 * xi).sum();
            C64::from_polar(1.0, phase)
        })
    }

    /// Discrete delta with unit mass at site `idx` (value `1/cell_volume`).
    pub fn delta(grid: Grid, idx: usize) -> Self {
        let mut f = Self::zeros(grid);
        f.values[idx] = C64::new(1.0 / grid.cell_volume(), 0.0);
        f
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(C64, C64) -> C64) -> Self {
        debug_assert!(self.grid.same_as(&other.grid));
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        self.map(|z| z * c)
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.map(|z| z * c)
    }

    pub fn add(&self, other: &Field) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Field) -> Self {
        self.zip_map(other, |a, b| a * b)
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: C64, other: &Field) {
        debug_assert!(self.grid.same_as(&other.grid));
        for (a, &b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
    }

    /// Discrete `L²` inner product `cell_volume · Σ u v̄`.
    pub fn inner(&self, other: &Field) -> C64 {
        let s: C64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum();
        s * self.grid.cell_volume()
    }

    /// `cell_volume · Σ u` (integral against Lebesgue measure).
    pub fn integral(&self) -> C64 {
        self.values.iter().sum::<C64>() * self.grid.cell_volume()
    }

    pub fn norm2(&self) -> f64 {
        (self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn re(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }

    pub fn abs(&self) -> Self {
        self.map(|z| C64::new(z.norm(), 0.0))
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// Relative `L²` distance `‖self − other‖₂ / ‖other‖₂`.
    pub fn rel_l2(&self, other: &Field) -> f64 {
        let den = other.norm2();
        let num = self.sub(other).norm2();
        if den == 0.0 {
            num
        } else {
            num / den
        }
    }
}

/// `d`-component (or, for scalar measures, one-component) grid vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct VecField {
    comps: Vec<Field>,
}

impl VecField {
    pub fn new(comps: Vec<Field>) -> Result<Self> {
        let first = comps
            .first()
            .ok_or_else(|| Error::Domain("vector field needs at least one component".into()))?;
        for c in &comps[1..] {
            first.grid().check_same(c.grid(), "vector field components")?;
        }
        Ok(Self { comps })
    }

    pub fn zeros(grid: Grid, components: usize) -> Self {
        Self {
            comps: (0..components).map(|_| Field::zeros(grid)).collect(),
        }
    }

    pub fn from_scalar(f: Field) -> Self {
        Self { comps: vec![f] }
    }

    pub fn grid(&self) -> &Grid {
        self.comps[0].grid()
    }

    pub fn components(&self) -> usize {
        self.comps.len()
    }

    pub fn comps(&self) -> &[Field] {
        &self.comps
    }

    pub fn comp(&self, j: usize) -> &Field {
        &self.comps[j]
    }

    pub fn comps_mut(&mut self) -> &mut [Field] {
        &mut self.comps
    }

    pub fn into_comps(self) -> Vec<Field> {
        self.comps
    }

    /// The single component of a one-component field.
    pub fn into_scalar(self) -> Result<Field> {
        if self.comps.len() != 1 {
            return Err(Error::Domain(format!(
                "expected a scalar field, got {} components",
                self.comps.len()
            )));
        }
        Ok(self.comps.into_iter().next().unwrap())
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(Field::is_finite)
    }

    pub fn scale_real(&self, c: f64) -> Self {
        Self {
            comps: self.comps.iter().map(|f| f.scale_real(c)).collect(),
        }
    }

    pub fn add(&self, other: &VecField) -> Self {
        Self {
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a.add(b)).collect(),
        }
    }

    pub fn sub(&self, other: &VecField) -> Self {
        Self {
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a.sub(b)).collect(),
        }
    }

    /// Multiplies every component pointwise by a scalar field.
    pub fn mul_scalar_field(&self, s: &Field) -> Self {
        Self {
            comps: self.comps.iter().map(|f| f.mul(s)).collect(),
        }
    }

    /// `Σ_j ⟨u_j, v_j⟩`.
    pub fn inner(&self, other: &VecField) -> C64 {
        self.comps.iter().zip(&other.comps).map(|(a, b)| a.inner(b)).sum()
    }

    pub fn norm2(&self) -> f64 {
        self.comps
            .iter()
            .map(|f| f.norm2().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Pointwise Euclidean magnitude `(Σ_j |v_j|²)^{1/2}`.
    pub fn magnitude(&self) -> Field {
        let grid = *self.grid();
        let values = (0..grid.sites())
            .map(|i| {
                let s: f64 = self.comps.iter().map(|f| f.values()[i].norm_sqr()).sum();
                C64::new(s.sqrt(), 0.0)
            })
            .collect();
        Field::from_values(grid, values).expect("finite magnitudes")
    }

    /// Pointwise `ℓ¹` magnitude `Σ_j |v_j|`, the variation density.
    pub fn l1_magnitude(&self) -> Field {
        let grid = *self.grid();
        let values = (0..grid.sites())
            .map(|i| {
                let s: f64 = self.comps.iter().map(|f| f.values()[i].norm()).sum();
                C64::new(s, 0.0)
            })
            .collect();
        Field::from_values(grid, values).expect("finite magnitudes")
    }

    /// `Σ_j v_j · w_j` pointwise (no conjugation).
    pub fn dot(&self, other: &VecField) -> Field {
        let mut out = Field::zeros(*self.grid());
        for (a, b) in self.comps.iter().zip(&other.comps) {
            for ((o, x), y) in out.values_mut().iter_mut().zip(a.values()).zip(b.values()) {
                *o += x * y;
            }
        }
        out
    }

    pub fn sup(&self) -> f64 {
        self.magnitude().sup()
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.comps.iter().all(|f| f.max_imag() <= tol)
    }
}
