//! Convergence of resolvents and semigroups along a mollification ladder.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, VecField, C64};
use crate::norms::lp;
use crate::resolvent::{apply_theta, apply_z, Drift, ResolventParams};

use super::{evolve, Method};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrotterConfig {
    pub zeta: C64,
    pub p: f64,
    /// Shift for the `μΘ(μ)f − f` column.
    pub mu: f64,
    /// `(t, steps, method)`; the semigroup columns are skipped when absent.
    pub evolve: Option<(f64, usize, Method)>,
    /// Labels of the rungs (mollification scales), recorded as-is.
    pub eps: Vec<f64>,
}

/// One rung. Cauchy columns compare rung `k` with rung `k+1` and are
/// absent on the last rung. All residuals are maxima over the battery,
/// relative to the norm of the input field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub k: usize,
    pub eps: Option<f64>,
    pub theta_cauchy_l2: Option<f64>,
    pub theta_cauchy_lp: Option<f64>,
    pub evolve_cauchy_lp: Option<f64>,
    pub evolve_cauchy_sup: Option<f64>,
    pub theta_vs_measure_l2: f64,
    pub z_pairing_l2: f64,
    pub identity_sup: f64,
    /// `‖g‖_p^p ≤ ‖g‖_{2(p−1)}^{p−1} ‖g‖₂` on the resolvent differences.
    pub interpolation_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Rungs after which `theta_cauchy_l2` fails to decrease.
    pub non_monotone: Vec<usize>,
}

const COLUMNS: [&str; 10] = [
    "k",
    "eps",
    "theta_cauchy_l2",
    "theta_cauchy_lp",
    "evolve_cauchy_lp",
    "evolve_cauchy_sup",
    "theta_vs_measure_l2",
    "z_pairing_l2",
    "identity_sup",
    "interpolation_ok",
];

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl ConvergenceTable {
    pub fn strictly_decreasing_theta(&self) -> bool {
        let v: Vec<f64> = self.rows.iter().filter_map(|r| r.theta_cauchy_l2).collect();
        v.windows(2).all(|w| w[1] < w[0])
    }

    pub fn to_csv(&self) -> String {
        let mut s = COLUMNS.join(",");
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                r.k,
                opt(r.eps),
                opt(r.theta_cauchy_l2),
                opt(r.theta_cauchy_lp),
                opt(r.evolve_cauchy_lp),
                opt(r.evolve_cauchy_sup),
                r.theta_vs_measure_l2,
                r.z_pairing_l2,
                r.identity_sup,
                r.interpolation_ok
            );
        }
        s
    }
}

fn interpolation_holds(g: &Field, p: f64) -> Result<bool> {
    let lhs = lp(g, p)?.powf(p);
    let rhs = lp(g, 2.0 * (p - 1.0))?.powf(p - 1.0) * g.norm2();
    Ok(lhs <= rhs * (1.0 + 1e-9) + 1e-300)
}

struct Rung {
    theta: Vec<Field>,
    semi: Option<Vec<Field>>,
    vs_measure: f64,
    pairing: f64,
    identity: f64,
}

pub fn trotter_convergence(
    ladder: &[VecField],
    sigma: &Drift,
    params: &ResolventParams,
    battery: &[Field],
    cfg: &TrotterConfig,
) -> Result<ConvergenceTable> {
    if ladder.is_empty() || battery.is_empty() {
        return Err(Error::Domain("trotter_convergence needs a nonempty ladder and battery".into()));
    }
    let p = params.with_zeta(cfg.zeta);
    let pm = params.with_zeta(C64::new(cfg.mu, 0.0));
    let direct = battery.par_iter().map(|f| apply_theta(&p, sigma, f)).collect::<Result<Vec<_>>>()?;
    let z_direct = battery.par_iter().map(|f| apply_z(&p, sigma, f)).collect::<Result<Vec<_>>>()?;
    let norms: Vec<f64> = battery.iter().map(|f| f.norm2()).collect();
    let sups: Vec<f64> = battery.iter().map(|f| f.sup()).collect();

    let rungs = ladder
        .iter()
        .map(|v| {
            let drift = Drift::from_field(v.clone())?;
            let per = battery
                .par_iter()
                .enumerate()
                .map(|(i, f)| {
                    let th = apply_theta(&p, &drift, f)?;
                    let vs = th.sub(&direct[i]).norm2() / norms[i];
                    let zp = apply_z(&p, &drift, f)?.sub(&z_direct[i]).norm2() / norms[i];
                    let id = apply_theta(&pm, &drift, f)?.scale_real(cfg.mu).sub(f).sup() / sups[i];
                    let se = match cfg.evolve {
                        Some((t, steps, m)) => Some(evolve(&drift, params, t, steps, f, m)?),
                        None => None,
                    };
                    Ok((th, se, vs, zp, id))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut r = Rung { theta: vec![], semi: cfg.evolve.map(|_| vec![]), vs_measure: 0.0, pairing: 0.0, identity: 0.0 };
            for (th, se, vs, zp, id) in per {
                r.theta.push(th);
                if let (Some(s), Some(x)) = (r.semi.as_mut(), se) {
                    s.push(x);
                }
                r.vs_measure = r.vs_measure.max(vs);
                r.pairing = r.pairing.max(zp);
                r.identity = r.identity.max(id);
            }
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(rungs.len());
    for (k, r) in rungs.iter().enumerate() {
        let mut row = ConvergenceRow {
            k,
            eps: cfg.eps.get(k).copied(),
            theta_cauchy_l2: None,
            theta_cauchy_lp: None,
            evolve_cauchy_lp: None,
            evolve_cauchy_sup: None,
            theta_vs_measure_l2: r.vs_measure,
            z_pairing_l2: r.pairing,
            identity_sup: r.identity,
            interpolation_ok: true,
        };
        if let Some(next) = rungs.get(k + 1) {
            let (mut c2, mut cp) = (0.0f64, 0.0f64);
            for (i, (a, b)) in r.theta.iter().zip(&next.theta).enumerate() {
                let g = a.sub(b);
                c2 = c2.max(g.norm2() / norms[i]);
                cp = cp.max(lp(&g, cfg.p)? / lp(&battery[i], cfg.p)?);
                row.interpolation_ok &= interpolation_holds(&g, cfg.p)?;
            }
            row.theta_cauchy_l2 = Some(c2);
            row.theta_cauchy_lp = Some(cp);
            if let (Some(sa), Some(sb)) = (&r.semi, &next.semi) {
                let (mut ep, mut es) = (0.0f64, 0.0f64);
                for (i, (a, b)) in sa.iter().zip(sb).enumerate() {
                    let g = a.sub(b);
                    ep = ep.max(lp(&g, cfg.p)? / lp(&battery[i], cfg.p)?);
                    es = es.max(g.sup() / sups[i]);
                }
                row.evolve_cauchy_lp = Some(ep);
                row.evolve_cauchy_sup = Some(es);
            }
        }
        rows.push(row);
    }
    let non_monotone = rows
        .windows(2)
        .filter_map(|w| match (w[0].theta_cauchy_l2, w[1].theta_cauchy_l2) {
            (Some(a), Some(b)) if b >= a => Some(w[1].k),
            _ => None,
        })
        .collect();
    Ok(ConvergenceTable { rows, non_monotone })
}
