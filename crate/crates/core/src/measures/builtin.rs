//! Built-in drift and potential generators, all centered on the box center.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::function::gamma::gamma;

use super::{Atom, Measure};
use crate::error::{Error, Result};
use crate::field::{Field, VecField, C64};
use crate::grid::Grid;

/// The Hardy constant `(d−2)/2`, replaced by `1/2` when `d < 3` so the
/// low-dimensional diagnostic drift is not identically zero.
pub fn hardy_prefactor(d: usize) -> f64 {
    if d >= 3 {
        (d as f64 - 2.0) / 2.0
    } else {
        0.5
    }
}

/// `b(x) = √δ₀ · c_d · x|x|^{-2}` about the center; the singular cell holds
/// the cell average of `b`, which vanishes by symmetry.
pub fn hardy(grid: Grid, delta0: f64) -> Result<Measure> {
    if !(delta0 >= 0.0) {
        return Err(Error::Domain(format!("Hardy strength {delta0} must be nonnegative")));
    }
    let d = grid.dim();
    let amp = delta0.sqrt() * hardy_prefactor(d);
    let c = grid.center();
    let ci = grid.center_index();
    let comps = (0..d)
        .map(|axis| {
            let mut f = Field::from_real_fn(grid, |x| {
                let r = grid.displacement(x, &c[..d]);
                let r2: f64 = r[..d].iter().map(|v| v * v).sum();
                if r2 == 0.0 {
                    0.0
                } else {
                    amp * r[axis] / r2
                }
            });
            f.values_mut()[ci] = C64::new(0.0, 0.0);
            f
        })
        .collect();
    Measure::new(grid, d, Some(VecField::new(comps)?), vec![], vec![])
}

/// `amp · 1_{|x₁|<1} |x₁|^{s−1} e₁` with `x₁` measured from the center plane;
/// cells on the singular plane hold the cell average `(h/2)^{s−1}/s`.
pub fn slab_kato(grid: Grid, s: f64, amp: f64) -> Result<Measure> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::Domain(format!("slab exponent s = {s} outside (0, 1]")));
    }
    if grid.len() / 2.0 <= 1.0 {
        return Err(Error::Domain("slab of half-width 1 does not fit in the box".into()));
    }
    let d = grid.dim();
    let c = grid.center();
    let h = grid.spacing();
    let plane = amp * (h / 2.0).powf(s - 1.0) / s;
    let mut comps = vec![Field::zeros(grid); d];
    comps[0] = Field::from_real_fn(grid, |x| {
        let t = grid.displacement(x, &c[..d])[0].abs();
        if t == 0.0 {
            plane
        } else if t < 1.0 {
            amp * t.powf(s - 1.0)
        } else {
            0.0
        }
    });
    Measure::new(grid, d, Some(VecField::new(comps)?), vec![], vec![])
}

/// Unit vectors roughly uniformly covering the sphere `S^{d−1}`.
fn sphere_directions(d: usize, count: usize) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                    let rho = (1.0 - z * z).sqrt();
                    let a = golden * i as f64;
                    vec![rho * a.cos(), rho * a.sin(), z]
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
            (0..count)
                .map(|_| {
                    let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
                    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    v.into_iter().map(|x| x / n).collect()
                })
                .collect()
        }
    }
}

/// Surface area of the radius-`r` sphere in `ℝ^d`.
pub fn sphere_area(d: usize, r: f64) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0) * r.powi(d as i32 - 1)
}

/// Default point count: spacing about half a cell on the sphere.
fn default_count(grid: &Grid, r: f64) -> usize {
    let d = grid.dim();
    if d == 1 {
        return 2;
    }
    let area = sphere_area(d, r);
    ((area / (grid.spacing() / 2.0).powi(d as i32 - 1)).ceil() as usize).max(8)
}

fn sphere_points(grid: &Grid, r: f64, count: Option<usize>) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let d = grid.dim();
    if !(r > 0.0) || r >= grid.len() / 2.0 {
        return Err(Error::Domain(format!("sphere radius {r} must lie in (0, L/2)")));
    }
    let count = count.unwrap_or_else(|| default_count(grid, r));
    if count == 0 {
        return Err(Error::Domain("sphere needs at least one point".into()));
    }
    let c = grid.center();
    Ok(sphere_directions(d, count)
        .into_iter()
        .map(|n| {
            let x = (0..d).map(|a| c[a] + r * n[a]).collect();
            (x, n)
        })
        .collect())
}

/// Sphere of radius `r` carrying total quadrature mass `m`, directed along
/// the outward normal.
pub fn sphere_atoms(grid: Grid, r: f64, m: f64, count: Option<usize>) -> Result<Measure> {
    let pts = sphere_points(&grid, r, count)?;
    let w = m / pts.len() as f64;
    let surface = pts
        .into_iter()
        .map(|(x, n)| Atom::real(x, &n.iter().map(|v| v * w).collect::<Vec<_>>()))
        .collect();
    Measure::new(grid, grid.dim(), None, vec![], surface)
}

/// Hyperplane `x₁ = center` with surface density `c`, direction `e₁`; one
/// point per grid site of the plane.
pub fn hyperplane_surface(grid: Grid, c: f64) -> Result<Measure> {
    let d = grid.dim();
    let n = grid.n();
    let h = grid.spacing();
    let w = c * h.powi(d as i32 - 1);
    let x1 = grid.center()[0];
    let count = n.pow(d as u32 - 1);
    let surface = (0..count)
        .map(|k| {
            let mut x = vec![x1];
            let mut rest = k;
            let mut tail = vec![0.0; d - 1];
            for a in (0..d - 1).rev() {
                tail[a] = (rest % n) as f64 * h;
                rest /= n;
            }
            x.extend(tail);
            let mut wv = vec![0.0; d];
            wv[0] = w;
            Atom::real(x, &wv)
        })
        .collect();
    Measure::new(grid, d, None, vec![], surface)
}

/// Scalar potential `c · δ_{|x|=r}` (surface density `c`).
pub fn delta_shell(grid: Grid, r: f64, c: f64, count: Option<usize>) -> Result<Measure> {
    let pts = sphere_points(&grid, r, count)?;
    let w = c * sphere_area(grid.dim(), r) / pts.len() as f64;
    let surface = pts.into_iter().map(|(x, _)| Atom::real(x, &[w])).collect();
    Measure::new(grid, 1, None, vec![], surface)
}

/// A single atom; `x = None` places it at the box center.
pub fn atom(grid: Grid, x: Option<Vec<f64>>, w: &[f64]) -> Result<Measure> {
    let x = x.unwrap_or_else(|| grid.center()[..grid.dim()].to_vec());
    Measure::new(grid, w.len(), None, vec![Atom::real(x, w)], vec![])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hardy_formula_and_excision() {
        let g = Grid::new(3, 16, 4.0).unwrap();
        let m = hardy(g, 0.25).unwrap();
        let b = m.ac().unwrap();
        let c = g.center();
        let i = g.center_index() + 3;
        let x = g.position(i);
        let r = g.displacement(&x[..3], &c[..3]);
        let r2: f64 = r[..3].iter().map(|v| v * v).sum();
        assert!((b.comp(2).values()[i].re - 0.5 * 0.5 * r[2] / r2).abs() < 1e-14);
        assert_eq!(b.magnitude().values()[g.center_index()].re, 0.0);
    }

    #[test]
    fn slab_profile() {
        let g = Grid::new(2, 32, 4.0).unwrap();
        let m = slab_kato(g, 0.5, 1.0).unwrap();
        let b = m.ac().unwrap();
        let c = g.center();
        for i in 0..g.sites() {
            let x = g.position(i);
            let t = (x[0] - c[0]).abs();
            let v = b.comp(0).values()[i].re;
            if t > 0.0 && t < 1.0 {
                assert!((v - t.powf(-0.5)).abs() < 1e-12);
            } else if t >= 1.0 {
                assert_eq!(v, 0.0);
            }
            assert_eq!(b.comp(1).values()[i].re, 0.0);
        }
    }

    #[test]
    fn sphere_weights_sum_to_mass() {
        let g = Grid::new(3, 16, 4.0).unwrap();
        let m = sphere_atoms(g, 1.0, 0.3, Some(200)).unwrap();
        assert_eq!(m.surface().len(), 200);
        let quad: f64 = m
            .surface()
            .iter()
            .map(|p| p.w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            .sum();
        assert!((quad - 0.3).abs() < 1e-12);
        let c = g.center();
        for p in m.surface() {
            assert!((g.distance(&p.x, &c[..3]) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn shell_and_plane_totals() {
        let g = Grid::new(2, 32, 4.0).unwrap();
        let s = delta_shell(g, 1.0, 0.5, None).unwrap();
        let tot: f64 = s.surface().iter().map(|p| p.w[0].re).sum();
        assert!((tot - 0.5 * 2.0 * PI).abs() < 1e-12);
        let p = hyperplane_surface(g, 2.0).unwrap();
        assert!((p.total_variation() - 2.0 * 4.0).abs() < 1e-12);
        assert!((sphere_area(3, 2.0) - 16.0 * PI).abs() < 1e-10);
    }
}
