//! The semigroup `e^{−tΛ}`, `Λ = −Δ + σ·∇`, its transition kernel, and the
//! numerical checks built on them.
//!
//! Sign convention: `e^{−tΛ}` is the transition semigroup of
//! `dX = −b(X) dt + √2 dW`.

mod feller;
mod mc;
mod trotter;

pub use feller::{
    feller_diagnostics, log_slope, strong_feller_refinement, ContractionRow, FellerConfig, FellerReport,
    HolderCheck, IdentityRow, SlopeFit,
};
pub use mc::{compare_tv, mc_sample, Histogram, McOptions};
pub use trotter::{trotter_convergence, ConvergenceRow, ConvergenceTable, TrotterConfig};

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, VecField, C64};
use crate::fieldio;
use crate::grid::Grid;
use crate::resolvent::{apply_theta, apply_theta_adjoint, Drift, ResolventParams};
use crate::spectral::{divergence, gradient, heat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// `u ← h⁻¹ Θ(h⁻¹) u`; works for measure drifts.
    BackwardEuler,
    /// Strang splitting of heat and explicit drift; smooth drifts only.
    Splitting,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::BackwardEuler => "backward_euler",
            Method::Splitting => "splitting",
        }
    }
}

fn check_split(drift: &Drift, params: &ResolventParams, h: f64) -> Result<()> {
    if drift.has_singular_part() {
        return Err(Error::Domain("splitting needs a mollified drift".into()));
    }
    if params.alpha != 2.0 {
        return Err(Error::Domain("splitting is implemented for alpha = 2 only".into()));
    }
    let g = drift.grid();
    let courant = h * drift.sup() * (g.dim() as f64).sqrt() * g.k_max();
    if courant >= 1.0 {
        return Err(Error::Cfl(format!("h sup|v| max|xi| = {courant} >= 1")));
    }
    Ok(())
}

fn step_size(t: f64, steps: usize) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) || steps == 0 {
        return Err(Error::Domain(format!("need t > 0 and steps >= 1, got t = {t}, steps = {steps}")));
    }
    Ok(t / steps as f64)
}

fn run(drift: &Drift, params: &ResolventParams, t: f64, steps: usize, f: &Field, method: Method, adjoint: bool) -> Result<Field> {
    drift.grid().check_same(f.grid(), "drift and field")?;
    let h = step_size(t, steps)?;
    let mut u = f.clone();
    match method {
        Method::BackwardEuler => {
            let p = params.with_zeta(C64::new(1.0 / h, 0.0));
            p.validate()?;
            for _ in 0..steps {
                let next = if adjoint { apply_theta_adjoint(&p, drift, &u)? } else { apply_theta(&p, drift, &u)? };
                u = next.scale_real(1.0 / h);
            }
        }
        Method::Splitting => {
            check_split(drift, params, h)?;
            let v = drift.density();
            let conj = VecField::new(v.comps().iter().map(|c| c.map(|z| z.conj())).collect())?;
            for _ in 0..steps {
                u = heat(&u, h / 2.0)?;
                let du = if adjoint {
                    divergence(&conj.mul_scalar_field(&u))?.scale_real(-1.0)
                } else {
                    v.dot(&gradient(&u))
                };
                u.axpy(C64::new(-h, 0.0), &du);
                u = heat(&u, h / 2.0)?;
            }
        }
    }
    if !u.is_finite() {
        return Err(Error::NonFinite("evolve"));
    }
    Ok(u)
}

/// `e^{−tΛ(σ)} f` with `steps` steps of `method`.
pub fn evolve(drift: &Drift, params: &ResolventParams, t: f64, steps: usize, f: &Field, method: Method) -> Result<Field> {
    run(drift, params, t, steps, f, method, false)
}

/// The adjoint semigroup, generated by `−Δ − ∇·(σ̄ ·)`.
pub fn evolve_adjoint(
    drift: &Drift,
    params: &ResolventParams,
    t: f64,
    steps: usize,
    f: &Field,
    method: Method,
) -> Result<Field> {
    run(drift, params, t, steps, f, method, true)
}

/// `y ↦ e^{−tΛ}(x₀, y)` in density units.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSlice {
    pub grid: Grid,
    pub t: f64,
    pub x0: Vec<f64>,
    pub x0_index: usize,
    pub values: Field,
    pub mass_defect: f64,
    pub min_value: f64,
    pub sup_value: f64,
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelMeta {
    pub t: f64,
    pub x0: Vec<f64>,
    pub method: Method,
    pub mass_defect: f64,
    pub min_value: f64,
}

/// The adjoint semigroup applied to the unit-mass delta at site `x0_index`.
pub fn transition_kernel(
    drift: &Drift,
    params: &ResolventParams,
    t: f64,
    x0_index: usize,
    steps: usize,
    method: Method,
) -> Result<KernelSlice> {
    let g = *drift.grid();
    if x0_index >= g.sites() {
        return Err(Error::Domain(format!("source site {x0_index} outside the grid")));
    }
    let u = evolve_adjoint(drift, params, t, steps, &Field::delta(g, x0_index), method)?;
    let values = u.map(|z| C64::new(z.re, 0.0));
    let mass = values.integral().re;
    let re = values.re();
    let min_value = re.iter().cloned().fold(f64::INFINITY, f64::min);
    let sup_value = re.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(KernelSlice {
        grid: g,
        t,
        x0: g.position(x0_index)[..g.dim()].to_vec(),
        x0_index,
        values,
        mass_defect: (mass - 1.0).abs(),
        min_value,
        sup_value,
        method,
    })
}

/// Metadata path next to a kernel dump: `<stem>.kernel.json`.
pub fn kernel_meta_path(bin: &Path) -> PathBuf {
    let stem = bin.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    bin.with_file_name(format!("{stem}.kernel.json"))
}

pub fn write_kernel(bin: &Path, k: &KernelSlice) -> Result<()> {
    fieldio::write_field(bin, &k.values)?;
    let meta = KernelMeta {
        t: k.t,
        x0: k.x0.clone(),
        method: k.method,
        mass_defect: k.mass_defect,
        min_value: k.min_value,
    };
    std::fs::write(kernel_meta_path(bin), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

pub fn read_kernel(bin: &Path) -> Result<KernelSlice> {
    let values = fieldio::read_field(bin)?;
    let meta: KernelMeta = serde_json::from_str(&std::fs::read_to_string(kernel_meta_path(bin))?)?;
    let g = *values.grid();
    if meta.x0.len() != g.dim() {
        return Err(Error::Metadata("kernel source point has the wrong dimension".into()));
    }
    let x0_index = g.nearest_site(&meta.x0);
    let sup_value = values.re().into_iter().fold(f64::NEG_INFINITY, f64::max);
    Ok(KernelSlice {
        grid: g,
        t: meta.t,
        x0: meta.x0,
        x0_index,
        values,
        mass_defect: meta.mass_defect,
        min_value: meta.min_value,
        sup_value,
        method: meta.method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::battery::smooth_field;

    fn smooth_drift(g: Grid, amp: f64) -> Drift {
        let comps = (0..g.dim()).map(|j| smooth_field(g, 10 + j as u64, 2, 0.0, amp)).collect();
        Drift::from_field(VecField::new(comps).unwrap()).unwrap()
    }

    #[test]
    fn free_evolution_orders() {
        let g = Grid::new(1, 32, 4.0).unwrap();
        let f = smooth_field(g, 1, 3, 0.5, 1.0);
        let t = 0.2;
        let exact = heat(&f, t).unwrap();
        let p = ResolventParams::new(C64::new(1.0, 0.0));
        let d = Drift::zero(g);
        let e = |s| evolve(&d, &p, t, s, &f, Method::BackwardEuler).unwrap().sub(&exact).norm2();
        let (e1, e2) = (e(20), e(40));
        assert!((e1 / e2 - 2.0).abs() < 0.15, "{}", e1 / e2);
        let s = evolve(&d, &p, t, 3, &f, Method::Splitting).unwrap();
        assert!(s.rel_l2(&exact) < 1e-13);
    }

    #[test]
    fn semigroup_property_and_constants() {
        let g = Grid::new(2, 16, 4.0).unwrap();
        let d = smooth_drift(g, 0.5);
        let p = ResolventParams::new(C64::new(1.0, 0.0));
        let f = smooth_field(g, 3, 2, 1.0, 0.5);
        for m in [Method::BackwardEuler, Method::Splitting] {
            let a = evolve(&d, &p, 0.3, 30, &f, m).unwrap();
            let b = evolve(&d, &p, 0.2, 20, &evolve(&d, &p, 0.1, 10, &f, m).unwrap(), m).unwrap();
            assert!(a.rel_l2(&b) < 1e-12);
            let one = Field::constant(g, C64::new(1.0, 0.0));
            let u = evolve(&d, &p, 0.3, 30, &one, m).unwrap();
            assert!(u.sub(&one).sup() < 1e-10);
        }
    }

    #[test]
    fn cfl_and_domain() {
        let g = Grid::new(1, 32, 1.0).unwrap();
        let d = smooth_drift(g, 50.0);
        let p = ResolventParams::new(C64::new(1.0, 0.0));
        let f = Field::constant(g, C64::new(1.0, 0.0));
        assert!(matches!(evolve(&d, &p, 0.1, 1, &f, Method::Splitting), Err(Error::Cfl(_))));
        let strict = ResolventParams { re_min: 100.0, ..p };
        assert!(evolve(&d, &strict, 0.1, 2, &f, Method::BackwardEuler).is_err());
        assert!(evolve(&d, &p, 0.0, 2, &f, Method::BackwardEuler).is_err());
    }

    #[test]
    fn free_kernel_is_lattice_gaussian() {
        let g = Grid::new(1, 64, 4.0).unwrap();
        let p = ResolventParams::new(C64::new(1.0, 0.0));
        let t = 0.05;
        let k = transition_kernel(&Drift::zero(g), &p, t, 10, 1, Method::Splitting).unwrap();
        assert!(k.mass_defect < 1e-10);
        let x0 = g.position(10)[0];
        for i in [10, 14, 30] {
            let y = g.position(i)[0];
            let mut s = 0.0;
            for w in -5..=5 {
                let r = y - x0 + w as f64 * 4.0;
                s += (-r * r / (4.0 * t)).exp() / (4.0 * std::f64::consts::PI * t).sqrt();
            }
            assert!((k.values.values()[i].re - s).abs() < 1e-10 * s.max(1.0));
        }
    }

    #[test]
    fn kernel_dump_round_trip() {
        let g = Grid::new(2, 8, 2.0).unwrap();
        let p = ResolventParams::new(C64::new(1.0, 0.0));
        let k = transition_kernel(&smooth_drift(g, 0.3), &p, 0.1, 5, 10, Method::BackwardEuler).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("k.bin");
        write_kernel(&path, &k).unwrap();
        let back = read_kernel(&path).unwrap();
        assert_eq!(back.values, k.values);
        assert_eq!((back.t, back.x0_index, back.method), (k.t, k.x0_index, k.method));
    }
}
