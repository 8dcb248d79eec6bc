use rayon::prelude::*;

use super::Measure;
use crate::error::{Error, Result};
use crate::field::{Field, VecField, C64};
use crate::grid::Grid;
use crate::spectral;

/// `e^{-1/t}` for `t > 0`, else 0.
fn psi(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Smooth step: 0 for `t ≤ 0`, 1 for `t ≥ 1`, `C^∞` in between.
fn smooth_step(t: f64) -> f64 {
    let a = psi(t);
    let b = psi(1.0 - t);
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

/// Radial cutoff centered at the box center: 1 on `|x| ≤ k`, 0 on `|x| ≥ k+1`.
///
/// `k = ∞` gives the constant 1.
pub fn cutoff_profile(k: f64, grid: Grid) -> Result<Field> {
    if k == f64::INFINITY {
        return Ok(Field::constant(grid, C64::new(1.0, 0.0)));
    }
    if !(k > 0.0) || k + 1.0 > grid.len() / 2.0 {
        return Err(Error::Domain(format!(
            "cutoff radius k = {k} needs 0 < k and k + 1 <= L/2 = {}",
            grid.len() / 2.0
        )));
    }
    let c = grid.center();
    Ok(Field::from_real_fn(grid, |x| {
        let r = grid.distance(x, &c[..grid.dim()]);
        smooth_step(k + 1.0 - r)
    }))
}

/// Smallest power-of-two `n` with `L/n ≤ √ε`.
pub fn required_n(len: f64, eps: f64) -> usize {
    let mut n = 8usize;
    while len / n as f64 > eps.sqrt() {
        n *= 2;
    }
    n
}

/// `ρ_k e^{εΔ} μ` as a smooth field (one component per measure component).
pub fn mollify(mu: &Measure, eps: f64, k: f64) -> Result<VecField> {
    let g = *mu.grid();
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("mollification scale eps = {eps} must be positive")));
    }
    if g.spacing() > eps.sqrt() {
        return Err(Error::Resolution {
            eps,
            spacing: g.spacing(),
            required_n: required_n(g.len(), eps),
        });
    }
    let rho = cutoff_profile(k, g)?;
    let dens = mu.density();
    let comps = dens
        .comps()
        .iter()
        .map(|f| spectral::heat(f, eps).map(|h| h.mul(&rho)))
        .collect::<Result<Vec<_>>>()?;
    let mut out = VecField::new(comps)?;
    if mu.is_real() {
        for c in out.comps_mut() {
            for z in c.values_mut() {
                z.im = 0.0;
            }
        }
    }
    Ok(out)
}

/// `ε_k = 4^{-k}`, `k = 1..=5`, keeping the scales the grid resolves.
pub fn default_eps_ladder(grid: &Grid) -> Vec<f64> {
    (1..=5)
        .map(|k| 4f64.powi(-k))
        .filter(|&e| grid.spacing() <= e.sqrt())
        .collect()
}

/// Mollifies along a ladder of scales with one cutoff.
pub fn mollify_ladder(mu: &Measure, eps: &[f64], k: f64) -> Result<Vec<VecField>> {
    eps.iter().map(|&e| mollify(mu, e, k)).collect()
}

/// `Σ w_i f_i` with nonnegative weights summing to 1.
pub fn convex_combine(fs: &[VecField], w: &[f64]) -> Result<VecField> {
    if fs.is_empty() {
        return Err(Error::Weights("empty family".into()));
    }
    if fs.len() != w.len() {
        return Err(Error::Weights(format!("{} weights for {} fields", w.len(), fs.len())));
    }
    if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::Weights("weights must be finite and nonnegative".into()));
    }
    let s: f64 = w.iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        return Err(Error::Weights(format!("weights sum to {s}, not 1")));
    }
    for f in &fs[1..] {
        fs[0].grid().check_same(f.grid(), "convex combination")?;
        if f.components() != fs[0].components() {
            return Err(Error::Weights("component mismatch".into()));
        }
    }
    Ok(combine_unchecked(fs, w))
}

fn combine_unchecked(fs: &[VecField], w: &[f64]) -> VecField {
    let mut acc = VecField::zeros(*fs[0].grid(), fs[0].components());
    for (f, &wi) in fs.iter().zip(w) {
        if wi == 0.0 {
            continue;
        }
        for (a, b) in acc.comps_mut().iter_mut().zip(f.comps()) {
            a.axpy(C64::new(wi, 0.0), b);
        }
    }
    acc
}

/// One recorded output of [`mazur_select`].
#[derive(Debug, Clone, PartialEq)]
pub struct MazurStep {
    pub weights: Vec<f64>,
    pub residual: f64,
}

/// Greedy convex-combination search driving `residual` down.
///
/// Round `n` only uses indices `≥ n`. Candidates are the tail averages of
/// `seq[j..j+m]` followed by blends of the incumbent with single elements at
/// weights 1/4, 1/2 and 3/4. A round whose best candidate would raise the
/// recorded residual ends the search, as does reaching `target`.
pub fn mazur_select<R>(
    seq: &[VecField],
    residual: R,
    target: f64,
    max_rounds: usize,
) -> Result<Vec<MazurStep>>
where
    R: Fn(&VecField) -> Result<f64> + Sync,
{
    let len = seq.len();
    if len == 0 {
        return Err(Error::Weights("mazur_select needs a nonempty sequence".into()));
    }
    let eval = |w: &Vec<f64>| -> Result<f64> {
        let r = residual(&combine_unchecked(seq, w))?;
        if !(r >= 0.0) {
            return Err(Error::Domain(format!("residual returned {r}")));
        }
        Ok(r)
    };
    let best_of = |cands: Vec<Vec<f64>>| -> Result<Option<(Vec<f64>, f64)>> {
        let scored = cands
            .into_par_iter()
            .map(|w| eval(&w).map(|r| (w, r)))
            .collect::<Result<Vec<_>>>()?;
        // Deterministic: first minimum in candidate order.
        Ok(scored.into_iter().fold(None, |acc: Option<(Vec<f64>, f64)>, (w, r)| match acc {
            Some((bw, br)) if br <= r => Some((bw, br)),
            _ => Some((w, r)),
        }))
    };

    let mut out: Vec<MazurStep> = Vec::new();
    for round in 0..max_rounds.min(len) {
        let mut tails = Vec::new();
        for j in round..len {
            for m in 1..=(len - j) {
                let mut w = vec![0.0; len];
                for wi in &mut w[j..j + m] {
                    *wi = 1.0 / m as f64;
                }
                tails.push(w);
            }
        }
        let (mut bw, mut br) = best_of(tails)?.expect("nonempty candidate set");
        for _pass in 0..3 {
            let mut blends = Vec::new();
            for j in round..len {
                for t in [0.25, 0.5, 0.75] {
                    let mut w: Vec<f64> = bw.iter().map(|x| x * (1.0 - t)).collect();
                    w[j] += t;
                    blends.push(w);
                }
            }
            match best_of(blends)? {
                Some((w, r)) if r < br => {
                    bw = w;
                    br = r;
                }
                _ => break,
            }
        }
        if let Some(last) = out.last() {
            if br > last.residual {
                break;
            }
        }
        let done = br <= target;
        out.push(MazurStep { weights: bw, residual: br });
        if done {
            break;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Atom;

    #[test]
    fn cutoff_plateau_support_monotone() {
        let g = Grid::new(2, 64, 8.0).unwrap();
        let rho = cutoff_profile(1.5, g).unwrap();
        let c = g.center();
        let mut pts: Vec<(f64, f64)> = (0..g.sites())
            .map(|i| (g.distance(&g.position(i)[..2], &c[..2]), rho.values()[i].re))
            .collect();
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for w in pts.windows(2) {
            assert!(w[1].1 <= w[0].1 + 1e-15);
        }
        for (r, v) in pts {
            assert!((0.0..=1.0).contains(&v));
            if r <= 1.5 {
                assert_eq!(v, 1.0);
            }
            if r >= 2.5 {
                assert_eq!(v, 0.0);
            }
        }
        assert!(cutoff_profile(3.5, g).is_err());
    }

    #[test]
    fn mollify_errors_and_zero() {
        let g = Grid::new(2, 16, 4.0).unwrap();
        let z = Measure::zero(g, 2);
        assert_eq!(mollify(&z, 0.1, 1.0).unwrap().sup(), 0.0);
        match mollify(&z, 0.01, 1.0) {
            Err(Error::Resolution { required_n, .. }) => assert_eq!(required_n, 64),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn atom_mollifies_to_scaled_gaussian() {
        let g = Grid::new(2, 64, 8.0).unwrap();
        let c = g.center();
        let m = 0.7;
        let mu = Measure::new(g, 1, None, vec![Atom::real(c[..2].to_vec(), &[m])], vec![]).unwrap();
        let eps = 0.05;
        let out = mollify(&mu, eps, f64::INFINITY).unwrap();
        let f = out.comp(0);
        for i in [g.center_index(), g.center_index() + 3, g.center_index() + 2 * 64 + 1] {
            let x = g.position(i);
            let r2 = g.distance(&x[..2], &c[..2]).powi(2);
            let exact = m * (-r2 / (4.0 * eps)).exp() / (4.0 * std::f64::consts::PI * eps);
            assert!((f.values()[i].re - exact).abs() < 1e-9 * exact.max(1.0));
        }
    }

    #[test]
    fn convex_combine_checks() {
        let g = Grid::new(1, 8, 1.0).unwrap();
        let a = VecField::from_scalar(Field::constant(g, C64::new(1.0, 0.0)));
        let b = VecField::from_scalar(Field::constant(g, C64::new(3.0, 0.0)));
        assert_eq!(convex_combine(&[a.clone()], &[1.0]).unwrap(), a);
        let m = convex_combine(&[a.clone(), b.clone()], &[0.5, 0.5]).unwrap();
        assert!((m.comp(0).values()[0].re - 2.0).abs() < 1e-15);
        assert!(convex_combine(&[a.clone(), b.clone()], &[0.7, 0.7]).is_err());
        assert!(convex_combine(&[a.clone(), b], &[1.5, -0.5]).is_err());
        assert!(convex_combine(&[], &[]).is_err());
    }

    #[test]
    fn mazur_alternating_mean() {
        let g = Grid::new(1, 8, 1.0).unwrap();
        let a = VecField::from_scalar(Field::from_real_fn(g, |x| x[0]));
        let b = VecField::from_scalar(Field::from_real_fn(g, |x| 1.0 - x[0] * x[0]));
        let mean = convex_combine(&[a.clone(), b.clone()], &[0.5, 0.5]).unwrap();
        let seq: Vec<VecField> = (0..6).map(|i| if i % 2 == 0 { a.clone() } else { b.clone() }).collect();
        let steps = mazur_select(&seq, |v| Ok(v.sub(&mean).norm2()), 1e-12, 10).unwrap();
        assert!(steps[0].residual < 1e-14);
        for s in &steps {
            assert!((s.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        let steps = mazur_select(&[a.clone(), a.clone(), a.clone()], |v| Ok(v.norm2()), 0.0, 5).unwrap();
        assert!((steps[0].residual - a.norm2()).abs() < 1e-14);
        for w in steps.windows(2) {
            assert!(w[1].residual <= w[0].residual);
        }
        for (n, s) in steps.iter().enumerate() {
            assert!(s.weights[..n].iter().all(|&x| x == 0.0));
        }
    }
}
