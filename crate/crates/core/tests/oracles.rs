//! Operators checked against matrices built directly from the Fourier basis,
//! with no FFT and no shared code path.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use sdl_core::battery::smooth_field;
use sdl_core::classes::weak_form_delta;
use sdl_core::measures::{convex_combine, mazur_select, Measure};
use sdl_core::resolvent::{
    apply_generator, apply_theta, apply_theta_adjoint, schrodinger_theta_density, Drift, ResolventParams,
};
use sdl_core::semigroup::{evolve, Method};
use sdl_core::{Field, Grid, VecField, C64};

fn grid1(n: usize, len: f64) -> Grid {
    Grid::new(1, n, len).unwrap()
}

/// Dense `(−Δ)` and `∂ₓ` on the 1D torus, summed mode by mode. The Nyquist
/// mode keeps its Laplacian symbol and has zero derivative.
fn fourier_matrices(g: &Grid) -> (DMatrix<C64>, DMatrix<C64>) {
    let n = g.n();
    let k0 = 2.0 * PI / g.len();
    let mut lap = DMatrix::zeros(n, n);
    let mut dx = DMatrix::zeros(n, n);
    for j in 0..n {
        for l in 0..n {
            let mut a = C64::new(0.0, 0.0);
            let mut b = C64::new(0.0, 0.0);
            for m in 0..n {
                let s = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
                let k = k0 * s;
                let ph = C64::from_polar(1.0, 2.0 * PI * (m as f64) * (j as f64 - l as f64) / n as f64);
                a += ph * (k * k);
                if m != n / 2 {
                    b += ph * C64::new(0.0, k);
                }
            }
            lap[(j, l)] = a / n as f64;
            dx[(j, l)] = b / n as f64;
        }
    }
    (lap, dx)
}

fn solve(a: DMatrix<C64>, f: &Field) -> Field {
    let u = a.lu().solve(&DVector::from_column_slice(f.values())).expect("nonsingular");
    Field::from_values(*f.grid(), u.as_slice().to_vec()).unwrap()
}

fn drift_field(g: Grid, seed: u64, amp: f64) -> VecField {
    VecField::from_scalar(smooth_field(g, seed, 3, 0.0, amp))
}

#[test]
fn theta_matches_fourier_resolvent() {
    let g = grid1(32, 2.0 * PI);
    let v = drift_field(g, 4, 0.8);
    let (lap, dx) = fourier_matrices(&g);
    let diag = DMatrix::from_diagonal(&DVector::from_column_slice(v.comp(0).values()));
    let delta = weak_form_delta(&Measure::from_scalar_density(v.l1_magnitude()), 1.0, 0.25).unwrap();
    let drift = Drift::from_field(v).unwrap();
    assert!(delta > 0.3 && delta < 0.9, "weak delta {delta}");
    let f = smooth_field(g, 11, 4, 0.5, 1.0);
    for zeta in [C64::new(4.0, 0.0), C64::new(4.0, 3.0), C64::new(20.0, -1.0)] {
        for (q, r) in [(f64::INFINITY, 1.0), (6.0, 1.5)] {
            let p = ResolventParams { q, r, p: 2.5, ..ResolventParams::new(zeta) };
            let a = DMatrix::<C64>::identity(g.n(), g.n()) * zeta + &lap + &diag * &dx;
            let want = solve(a, &f);
            let got = apply_theta(&p, &drift, &f).unwrap();
            assert!(got.rel_l2(&want) < 1e-9, "zeta {zeta}, q {q}: {}", got.rel_l2(&want));
        }
    }
}

#[test]
fn schrodinger_matches_dense_potential() {
    let g = grid1(32, 3.0);
    let (lap, _) = fourier_matrices(&g);
    let v = smooth_field(g, 8, 3, 0.4, 0.3);
    let f = smooth_field(g, 9, 4, 0.0, 1.0);
    let zeta = C64::new(2.0, 1.0);
    let a = DMatrix::<C64>::identity(g.n(), g.n()) * zeta
        + lap
        + DMatrix::from_diagonal(&DVector::from_column_slice(v.values()));
    let want = solve(a, &f);
    for q in [f64::INFINITY, 3.0] {
        let p = ResolventParams { q, ..ResolventParams::new(zeta) };
        let (got, rep) = schrodinger_theta_density(&p, &v, &f).unwrap();
        assert!(got.rel_l2(&want) < 1e-10, "q {q}: {}", got.rel_l2(&want));
        assert!(rep.iterations > 0);
    }
}

#[test]
fn resolvent_identity_and_generator_residual() {
    let g = Grid::new(2, 32, 4.0).unwrap();
    let v = VecField::new(vec![smooth_field(g, 1, 3, 0.1, 0.5), smooth_field(g, 2, 3, -0.1, 0.5)]).unwrap();
    let drift = Drift::from_field(v.clone()).unwrap();
    let f = smooth_field(g, 3, 4, 0.2, 1.0);
    let (z1, z2) = (C64::new(4.0, 0.0), C64::new(6.0, 2.0));
    let p1 = ResolventParams::new(z1);
    let p2 = p1.with_zeta(z2);
    let a = apply_theta(&p1, &drift, &f).unwrap();
    let b = apply_theta(&p2, &drift, &f).unwrap();
    let ab = apply_theta(&p1, &drift, &b).unwrap();
    let lhs = a.sub(&b);
    let rhs = ab.scale(z2 - z1);
    assert!(lhs.rel_l2(&rhs) < 1e-10);
    let res = apply_generator(&v, &a, 2.0).unwrap().add(&a.scale(z1)).sub(&f);
    assert!(res.norm2() / f.norm2() <= 1e-6);
}

#[test]
fn theta_adjoint_pairing() {
    let g = Grid::new(2, 16, 3.0).unwrap();
    let v = VecField::new(vec![smooth_field(g, 5, 2, 0.0, 0.4), smooth_field(g, 6, 2, 0.0, 0.4)]).unwrap();
    let drift = Drift::from_field(v).unwrap();
    let f = smooth_field(g, 7, 3, 0.0, 1.0);
    let h = smooth_field(g, 8, 3, 1.0, 1.0);
    let p = ResolventParams { q: 5.0, r: 1.25, p: 3.0, ..ResolventParams::new(C64::new(3.0, -2.0)) };
    let lhs = apply_theta(&p, &drift, &f).unwrap().inner(&h);
    let rhs = f.inner(&apply_theta_adjoint(&p, &drift, &h).unwrap());
    assert!((lhs - rhs).norm() < 1e-11 * lhs.norm().max(1.0));
}

#[test]
fn splitting_tracks_the_matrix_exponential() {
    let g = grid1(32, 2.0 * PI);
    let v = drift_field(g, 12, 0.5);
    let (lap, dx) = fourier_matrices(&g);
    let diag = DMatrix::from_diagonal(&DVector::from_column_slice(v.comp(0).values()));
    let a = lap + diag * dx;
    let f = smooth_field(g, 13, 3, 1.0, 0.5);
    let t = 0.2;
    let want = Field::from_values(
        g,
        ((a * C64::new(-t, 0.0)).exp() * DVector::from_column_slice(f.values())).as_slice().to_vec(),
    )
    .unwrap();
    let drift = Drift::from_field(v).unwrap();
    let p = ResolventParams::new(C64::new(1.0, 0.0));
    let errs: Vec<f64> = [20, 40]
        .iter()
        .map(|&s| evolve(&drift, &p, t, s, &f, Method::Splitting).unwrap().rel_l2(&want))
        .collect();
    // The explicit drift substep makes the scheme first order once v ≠ 0.
    assert!(errs[1] < 1e-4, "{errs:?}");
    assert!((errs[0] / errs[1] - 2.0).abs() < 0.3, "first order expected: {errs:?}");
    let be: Vec<f64> = [20, 40]
        .iter()
        .map(|&s| evolve(&drift, &p, t, s, &f, Method::BackwardEuler).unwrap().rel_l2(&want))
        .collect();
    assert!((be[0] / be[1] - 2.0).abs() < 0.3, "first order expected: {be:?}");
}

#[test]
fn mazur_never_raises_the_residual() {
    let g = grid1(16, 1.0);
    let target = smooth_field(g, 1, 2, 0.0, 1.0);
    let seq: Vec<VecField> = (0..8)
        .map(|j| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let wobble = smooth_field(g, 100 + j, 2, 0.0, 1.0).scale_real(sign * 0.5);
            VecField::from_scalar(target.add(&wobble))
        })
        .collect();
    let t = VecField::from_scalar(target);
    let resid = |v: &VecField| Ok(v.sub(&t).norm2());
    let steps = mazur_select(&seq, resid, 1e-8, 6).unwrap();
    assert!(!steps.is_empty());
    for w in steps.windows(2) {
        assert!(w[1].residual <= w[0].residual);
    }
    let first = resid(&seq[0]).unwrap();
    let last = steps.last().unwrap();
    assert!(last.residual < first);
    let rebuilt = convex_combine(&seq, &last.weights).unwrap();
    assert!((resid(&rebuilt).unwrap() - last.residual).abs() < 1e-12);
}
