//! Dense matrix oracles for tiny grids.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::field::{Field, VecField, C64};
use crate::grid::Grid;

use super::apply_generator;

pub const DENSE_SITE_BUDGET: usize = 4096;

#[derive(Debug, Clone)]
pub enum Perturbation {
    None,
    Drift(VecField),
    Potential(Field),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DenseMode {
    /// `(ζ + A)^{-1} f`.
    Resolvent(C64),
    /// `e^{−tA} f`.
    Expm(f64),
}

/// The matrix of `A = (−Δ)^{α/2} + v·∇` (or `+ V`), built column by column
/// from the spectral operators.
pub fn assemble(grid: Grid, pert: &Perturbation, alpha: f64) -> Result<DMatrix<C64>> {
    let n = grid.sites();
    if n > DENSE_SITE_BUDGET {
        return Err(Error::Budget { sites: n, budget: DENSE_SITE_BUDGET });
    }
    let zero_v = VecField::zeros(grid, grid.dim());
    let v = match pert {
        Perturbation::Drift(v) => {
            v.grid().check_same(&grid, "dense drift")?;
            v
        }
        _ => &zero_v,
    };
    let mut a = DMatrix::<C64>::zeros(n, n);
    for j in 0..n {
        let mut e = Field::zeros(grid);
        e.values_mut()[j] = C64::new(1.0, 0.0);
        let col = apply_generator(v, &e, alpha)?;
        for (i, z) in col.values().iter().enumerate() {
            a[(i, j)] = *z;
        }
    }
    if let Perturbation::Potential(p) = pert {
        p.grid().check_same(&grid, "dense potential")?;
        for (i, z) in p.values().iter().enumerate() {
            a[(i, i)] += z;
        }
    }
    Ok(a)
}

#[derive(Debug, Clone)]
pub struct DenseOracle {
    grid: Grid,
    a: DMatrix<C64>,
}

impl DenseOracle {
    pub fn new(grid: Grid, pert: &Perturbation, alpha: f64) -> Result<Self> {
        Ok(Self { grid, a: assemble(grid, pert, alpha)? })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.a
    }

    fn shifted(&self, zeta: C64) -> DMatrix<C64> {
        let mut m = self.a.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += zeta;
        }
        m
    }

    /// `(ζ + A)^{-1}` as a matrix.
    pub fn resolvent_matrix(&self, zeta: C64) -> Result<DMatrix<C64>> {
        self.shifted(zeta)
            .try_inverse()
            .ok_or_else(|| Error::SingularSymbol { index: 0, detail: format!("zeta + A singular at zeta = {zeta}") })
    }

    pub fn resolvent(&self, zeta: C64, f: &Field) -> Result<Field> {
        self.grid.check_same(f.grid(), "dense oracle")?;
        let b = DVector::from_column_slice(f.values());
        let u = self
            .shifted(zeta)
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::SingularSymbol { index: 0, detail: format!("zeta + A singular at zeta = {zeta}") })?;
        Field::from_values(self.grid, u.as_slice().to_vec())
    }

    /// `e^{−tA}` by scaling and squaring.
    pub fn expm_matrix(&self, t: f64) -> DMatrix<C64> {
        (&self.a * C64::new(-t, 0.0)).exp()
    }

    pub fn expm(&self, t: f64, f: &Field) -> Result<Field> {
        self.grid.check_same(f.grid(), "dense oracle")?;
        let u = self.expm_matrix(t) * DVector::from_column_slice(f.values());
        Field::from_values(self.grid, u.as_slice().to_vec())
    }

    pub fn apply(&self, mode: DenseMode, f: &Field) -> Result<Field> {
        match mode {
            DenseMode::Resolvent(z) => self.resolvent(z, f),
            DenseMode::Expm(t) => self.expm(t, f),
        }
    }
}

/// One-shot dense application.
pub fn dense_oracle(grid: Grid, pert: &Perturbation, alpha: f64, mode: DenseMode, f: &Field) -> Result<Field> {
    DenseOracle::new(grid, pert, alpha)?.apply(mode, f)
}
