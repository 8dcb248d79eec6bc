//! Vector- and scalar-valued Borel measures on the torus.
//!
//! A [`Measure`] has three parts: an absolutely continuous density, a list of
//! atoms and a weighted surface point cloud. Drifts `σ` have `d` components;
//! potentials and variations have one.

mod builtin;
mod file;
mod mollify;

pub use builtin::{atom, delta_shell, hardy, hardy_prefactor, hyperplane_surface, slab_kato, sphere_atoms};
pub use file::{load_measure, save_measure, AtomRecord, MeasureFile, Weight};
pub use mollify::{
    convex_combine, cutoff_profile, default_eps_ladder, mazur_select, mollify, mollify_ladder, required_n, MazurStep,
};

use crate::error::{Error, Result};
use crate::field::{Field, VecField, C64};
use crate::grid::Grid;
use crate::spectral::TrigInterpolant;

/// A point mass with a (vector or scalar) weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub x: Vec<f64>,
    pub w: Vec<C64>,
}

impl Atom {
    pub fn new(x: Vec<f64>, w: Vec<C64>) -> Self {
        Self { x, w }
    }

    pub fn real(x: Vec<f64>, w: &[f64]) -> Self {
        Self { x, w: w.iter().map(|&a| C64::new(a, 0.0)).collect() }
    }

    fn variation(&self) -> f64 {
        self.w.iter().map(|z| z.norm()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    grid: Grid,
    components: usize,
    ac: Option<VecField>,
    atoms: Vec<Atom>,
    surface: Vec<Atom>,
    real: bool,
}

pub type DriftMeasure = Measure;
pub type ScalarMeasure = Measure;

/// Per-cell masses (not densities), one array per component.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMasses {
    pub grid: Grid,
    pub masses: Vec<Vec<C64>>,
}

impl CellMasses {
    /// Mass divided by cell volume.
    pub fn density(&self) -> VecField {
        let inv = 1.0 / self.grid.cell_volume();
        let comps = self
            .masses
            .iter()
            .map(|m| {
                Field::from_values(self.grid, m.iter().map(|z| z * inv).collect())
                    .expect("finite masses")
            })
            .collect();
        VecField::new(comps).expect("shared grid")
    }

    pub fn total_variation(&self) -> f64 {
        self.masses.iter().flatten().map(|z| z.norm()).sum()
    }

    pub fn totals(&self) -> Vec<C64> {
        self.masses.iter().map(|m| m.iter().sum()).collect()
    }
}

impl Measure {
    pub fn new(
        grid: Grid,
        components: usize,
        ac: Option<VecField>,
        atoms: Vec<Atom>,
        surface: Vec<Atom>,
    ) -> Result<Self> {
        if components == 0 {
            return Err(Error::Domain("a measure needs at least one component".into()));
        }
        if let Some(a) = &ac {
            grid.check_same(a.grid(), "measure density")?;
            if a.components() != components {
                return Err(Error::Domain(format!(
                    "density has {} components, measure has {components}",
                    a.components()
                )));
            }
            if !a.is_finite() {
                return Err(Error::NonFinite("measure density"));
            }
        }
        for p in atoms.iter().chain(&surface) {
            if p.x.len() != grid.dim() {
                return Err(Error::Domain(format!(
                    "point location has {} coordinates in d = {}",
                    p.x.len(),
                    grid.dim()
                )));
            }
            if p.w.len() != components {
                return Err(Error::Domain(format!(
                    "point weight has {} components, measure has {components}",
                    p.w.len()
                )));
            }
            if p.x.iter().any(|&c| !(0.0..grid.len()).contains(&c)) {
                return Err(Error::Domain(format!("point {:?} outside [0, L)^d", p.x)));
            }
            if p.w.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::NonFinite("point weight"));
            }
        }
        let real = ac.as_ref().is_none_or(|a| a.is_real(0.0))
            && atoms.iter().chain(&surface).all(|p| p.w.iter().all(|z| z.im == 0.0));
        Ok(Self { grid, components, ac, atoms, surface, real })
    }

    pub fn zero(grid: Grid, components: usize) -> Self {
        Self { grid, components, ac: None, atoms: vec![], surface: vec![], real: true }
    }

    pub fn from_density(ac: VecField) -> Self {
        let grid = *ac.grid();
        let components = ac.components();
        Self::new(grid, components, Some(ac), vec![], vec![]).expect("valid density")
    }

    pub fn from_scalar_density(f: Field) -> Self {
        Self::from_density(VecField::from_scalar(f))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn ac(&self) -> Option<&VecField> {
        self.ac.as_ref()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn surface(&self) -> &[Atom] {
        &self.surface
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    /// Whether the measure has atoms or surface points.
    pub fn has_singular_part(&self) -> bool {
        !(self.atoms.is_empty() && self.surface.is_empty())
    }

    pub fn is_zero(&self) -> bool {
        !self.has_singular_part() && self.ac.as_ref().is_none_or(|a| a.sup() == 0.0)
    }

    /// `ε·μ`.
    pub fn scaled(&self, eps: f64) -> Self {
        let sc = |p: &Atom| Atom { x: p.x.clone(), w: p.w.iter().map(|z| z * eps).collect() };
        Self {
            grid: self.grid,
            components: self.components,
            ac: self.ac.as_ref().map(|a| a.scale_real(eps)),
            atoms: self.atoms.iter().map(sc).collect(),
            surface: self.surface.iter().map(sc).collect(),
            real: self.real,
        }
    }

    /// Sum of two measures on the same grid.
    pub fn plus(&self, other: &Measure) -> Result<Self> {
        self.grid.check_same(&other.grid, "measure sum")?;
        if self.components != other.components {
            return Err(Error::Domain("measure sum: component mismatch".into()));
        }
        let ac = match (&self.ac, &other.ac) {
            (Some(a), Some(b)) => Some(a.add(b)),
            (Some(a), None) | (None, Some(a)) => Some(a.clone()),
            (None, None) => None,
        };
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        let mut surface = self.surface.clone();
        surface.extend(other.surface.iter().cloned());
        Self::new(self.grid, self.components, ac, atoms, surface)
    }

    /// The absolutely continuous part alone.
    pub fn ac_part(&self) -> Self {
        Self { atoms: vec![], surface: vec![], ..self.clone() }
    }

    /// The singular part alone.
    pub fn singular_part(&self) -> Self {
        Self { ac: None, ..self.clone() }
    }

    /// Total variation `|μ|(T^d)`.
    pub fn total_variation(&self) -> f64 {
        let ac = self
            .ac
            .as_ref()
            .map(|a| a.l1_magnitude().integral().re)
            .unwrap_or(0.0);
        ac + self.atoms.iter().chain(&self.surface).map(Atom::variation).sum::<f64>()
    }

    /// Nearest-cell deposition of every part.
    pub fn rasterize(&self) -> CellMasses {
        let g = self.grid;
        let dv = g.cell_volume();
        let mut masses: Vec<Vec<C64>> = match &self.ac {
            Some(a) => a.comps().iter().map(|f| f.values().iter().map(|z| z * dv).collect()).collect(),
            None => vec![vec![C64::new(0.0, 0.0); g.sites()]; self.components],
        };
        for p in self.atoms.iter().chain(&self.surface) {
            let idx = g.nearest_site(&p.x);
            for (m, w) in masses.iter_mut().zip(&p.w) {
                m[idx] += w;
            }
        }
        CellMasses { grid: g, masses }
    }

    /// Rasterized density (masses over cell volume).
    pub fn density(&self) -> VecField {
        self.rasterize().density()
    }

    /// Variation measure `|μ| = |μ₁| + … + |μ_d|`.
    pub fn variation(&self) -> ScalarMeasure {
        let ac = self.ac.as_ref().map(|a| VecField::from_scalar(a.l1_magnitude()));
        let var = |p: &Atom| Atom { x: p.x.clone(), w: vec![C64::new(p.variation(), 0.0)] };
        Self {
            grid: self.grid,
            components: 1,
            ac,
            atoms: self.atoms.iter().map(var).collect(),
            surface: self.surface.iter().map(var).collect(),
            real: true,
        }
    }

    /// `∫ f · dμ` without conjugation, with off-grid values taken from the
    /// trigonometric interpolant.
    pub fn weak_pairing(&self, f: &VecField) -> Result<C64> {
        self.grid.check_same(f.grid(), "weak pairing")?;
        if f.components() != self.components {
            return Err(Error::Domain(format!(
                "pairing a {}-component measure with a {}-component field",
                self.components,
                f.components()
            )));
        }
        let dv = self.grid.cell_volume();
        let mut acc = C64::new(0.0, 0.0);
        if let Some(a) = &self.ac {
            for (b, g) in a.comps().iter().zip(f.comps()) {
                acc += b.values().iter().zip(g.values()).map(|(x, y)| x * y).sum::<C64>() * dv;
            }
        }
        if self.has_singular_part() {
            let interps: Vec<TrigInterpolant> = f.comps().iter().map(TrigInterpolant::new).collect();
            for p in self.atoms.iter().chain(&self.surface) {
                for (w, it) in p.w.iter().zip(&interps) {
                    acc += w * it.eval(&p.x);
                }
            }
        }
        Ok(acc)
    }

    /// Pairing of a scalar measure with a scalar field.
    pub fn weak_pairing_scalar(&self, f: &Field) -> Result<C64> {
        self.weak_pairing(&VecField::from_scalar(f.clone()))
    }

    /// Translates by a whole number of cells so the linear barycenter of the
    /// variation sits on the box center site.
    pub fn centered(&self) -> Self {
        let g = self.grid;
        let d = g.dim();
        let var = self.variation().rasterize();
        let total: f64 = var.masses[0].iter().map(|z| z.re).sum();
        if total == 0.0 {
            return self.clone();
        }
        let mut bary = [0.0; 4];
        for (i, m) in var.masses[0].iter().enumerate() {
            let x = g.position(i);
            for a in 0..d {
                bary[a] += m.re * x[a];
            }
        }
        let h = g.spacing();
        let c = g.center();
        let mut shift = [0i64; 4];
        for a in 0..d {
            shift[a] = ((c[a] - bary[a] / total) / h).round() as i64;
        }
        self.translated_cells(&shift[..d])
    }

    /// Periodic translation by integer cell offsets.
    pub fn translated_cells(&self, shift: &[i64]) -> Self {
        let g = self.grid;
        let d = g.dim();
        let n = g.n() as i64;
        let h = g.spacing();
        let ac = self.ac.as_ref().map(|a| {
            let comps = a
                .comps()
                .iter()
                .map(|f| {
                    let mut out = Field::zeros(g);
                    for i in 0..g.sites() {
                        let ix = g.unravel(i);
                        let mut jx = [0usize; 4];
                        for k in 0..d {
                            jx[k] = (ix[k] as i64 + shift[k]).rem_euclid(n) as usize;
                        }
                        out.values_mut()[g.ravel(&jx[..d])] = f.values()[i];
                    }
                    out
                })
                .collect();
            VecField::new(comps).expect("shared grid")
        });
        let mv = |p: &Atom| Atom {
            x: p.x
                .iter()
                .zip(shift)
                .map(|(&x, &s)| (x + s as f64 * h).rem_euclid(g.len()))
                .map(|x| if x >= g.len() { 0.0 } else { x })
                .collect(),
            w: p.w.clone(),
        };
        Self {
            ac,
            atoms: self.atoms.iter().map(mv).collect(),
            surface: self.surface.iter().map(mv).collect(),
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g2() -> Grid {
        Grid::new(2, 16, 2.0).unwrap()
    }

    #[test]
    fn variation_of_parts() {
        let g = g2();
        assert!(Measure::zero(g, 2).variation().is_zero());
        let m = Measure::new(g, 2, None, vec![Atom::real(vec![1.0, 1.0], &[3.0, -4.0])], vec![]).unwrap();
        let v = m.variation();
        assert_eq!(v.atoms()[0].w, vec![C64::new(7.0, 0.0)]);

        let b = VecField::new(vec![
            Field::from_real_fn(g, |x| x[0].sin()),
            Field::from_real_fn(g, |x| x[0].cos()),
        ])
        .unwrap();
        let v = Measure::from_density(b).variation();
        let dens = v.ac().unwrap().comp(0);
        for i in [0, 5, 77] {
            let x = g.position(i);
            assert!((dens.values()[i].re - x[0].sin().abs() - x[0].cos().abs()).abs() < 1e-14, "{}", x[0]);
        }
    }

    #[test]
    fn rasterize_conserves_mass() {
        let g = g2();
        let m = Measure::new(
            g,
            1,
            Some(VecField::from_scalar(Field::constant(g, C64::new(0.5, 0.0)))),
            vec![Atom::real(vec![0.31, 1.2], &[2.0])],
            vec![Atom::real(vec![1.9, 0.01], &[-0.25]), Atom::real(vec![0.0, 0.0], &[1.0])],
        )
        .unwrap();
        let r = m.rasterize();
        let one = Field::constant(g, C64::new(1.0, 0.0));
        let pair = m.weak_pairing_scalar(&one).unwrap();
        assert!((r.totals()[0] - pair).norm() < 1e-12);
        assert!((r.totals()[0].re - (0.5 * 4.0 + 2.0 - 0.25 + 1.0)).abs() < 1e-12);

        let a = Measure::new(g, 1, None, vec![Atom::real(vec![0.5, 0.5], &[1.5])], vec![]).unwrap();
        let r = a.rasterize();
        assert_eq!(r.masses[0].iter().filter(|z| z.norm() > 0.0).count(), 1);
        assert!((r.total_variation() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn atom_pairing_uses_interpolant() {
        let g = g2();
        let k = g.k0();
        let f = Field::from_real_fn(g, |x| (k * x[0]).cos() * (k * x[1]).sin());
        let p = [0.37, 1.41];
        let m = Measure::new(g, 1, None, vec![Atom::real(p.to_vec(), &[2.0])], vec![]).unwrap();
        let z = m.weak_pairing_scalar(&f).unwrap();
        assert!((z.re - 2.0 * (k * p[0]).cos() * (k * p[1]).sin()).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_points() {
        let g = g2();
        assert!(Measure::new(g, 1, None, vec![Atom::real(vec![2.0, 0.0], &[1.0])], vec![]).is_err());
        assert!(Measure::new(g, 2, None, vec![Atom::real(vec![1.0, 0.0], &[1.0])], vec![]).is_err());
    }

    #[test]
    fn centering_moves_atom_to_center() {
        let g = g2();
        let m = Measure::new(g, 1, None, vec![Atom::real(vec![0.25, 0.5], &[1.0])], vec![]).unwrap();
        let c = m.centered();
        assert_eq!(g.nearest_site(&c.atoms()[0].x), g.center_index());
    }
}
