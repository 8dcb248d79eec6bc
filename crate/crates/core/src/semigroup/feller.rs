//! Feller and strong Feller diagnostics of the resolvent `Θ`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::battery::rough_field;
use crate::error::{Error, Result};
use crate::field::{Field, C64};
use crate::norms::{holder, lp};
use crate::resolvent::{apply_theta, Drift, ResolventParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FellerConfig {
    pub mu_ladder: Vec<f64>,
    pub zeta_ladder: Vec<C64>,
    pub gamma: f64,
    /// Lebesgue exponent for the decay fit.
    pub p: f64,
    /// Largest accepted `‖μΘf − f‖_∞ / ‖f‖_∞` at the top of the μ ladder.
    pub identity_tol: f64,
    pub contraction_tol: f64,
    pub slope_max: f64,
}

impl FellerConfig {
    pub fn validate(&self, d: usize) -> Result<()> {
        let p = self.p;
        if !(p > (d as f64 - 1.0)) {
            return Err(Error::Domain(format!("strong Feller needs p > d - 1, got p = {p}, d = {d}")));
        }
        let bound = 1.0 - (d as f64 - 1.0) / p;
        if !(self.gamma > 0.0 && self.gamma < bound) {
            return Err(Error::Domain(format!("gamma = {} outside (0, 1 - (d-1)/p) = (0, {bound})", self.gamma)));
        }
        if self.mu_ladder.is_empty() || self.zeta_ladder.len() < 2 {
            return Err(Error::Domain("need a nonempty mu ladder and at least two zeta values".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionRow {
    pub mu: f64,
    /// Max over the ladder and battery of `‖μΘ(μ)f‖_∞ / ‖f‖_∞`.
    pub max_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityRow {
    pub mu: f64,
    /// Max over the ladder and battery of `‖μΘ(μ)f − f‖_∞ / ‖f‖_∞`.
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    /// Largest fitted slope of `log‖Θ(ζ)f‖_p` against `log|ζ|`.
    pub max_slope: f64,
    pub slopes: Vec<f64>,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderCheck {
    pub coarse: f64,
    pub fine: f64,
    pub ratio: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FellerReport {
    pub contraction: Vec<ContractionRow>,
    pub contraction_ok: bool,
    pub identity: Vec<IdentityRow>,
    pub identity_decreasing: bool,
    pub identity_ok: bool,
    pub slope: SlopeFit,
    pub holder: Option<HolderCheck>,
}

/// Least-squares slope of `y` against `x`.
pub fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Checks (a) sup contraction, (b) approach to the identity and (d) the
/// `|ζ|^{-1}` decay over a ladder of drifts and a battery of fields.
pub fn feller_diagnostics(
    ladder: &[Drift],
    params: &ResolventParams,
    battery: &[Field],
    cfg: &FellerConfig,
) -> Result<FellerReport> {
    let d = ladder.first().map(|x| x.grid().dim()).ok_or_else(|| Error::Domain("empty drift ladder".into()))?;
    cfg.validate(d)?;
    if battery.is_empty() {
        return Err(Error::Domain("empty test battery".into()));
    }
    let pairs: Vec<(&Drift, &Field)> = ladder.iter().flat_map(|v| battery.iter().map(move |f| (v, f))).collect();

    let mut contraction = Vec::new();
    let mut identity = Vec::new();
    for &mu in &cfg.mu_ladder {
        let p = params.with_zeta(C64::new(mu, 0.0));
        let stats = pairs
            .par_iter()
            .map(|(v, f)| {
                let u = apply_theta(&p, v, f)?.scale_real(mu);
                let fs = f.sup();
                Ok((u.sup() / fs, u.sub(f).sup() / fs))
            })
            .collect::<Result<Vec<_>>>()?;
        contraction.push(ContractionRow { mu, max_ratio: stats.iter().map(|s| s.0).fold(0.0, f64::max) });
        identity.push(IdentityRow { mu, max_residual: stats.iter().map(|s| s.1).fold(0.0, f64::max) });
    }
    let contraction_ok = contraction.iter().all(|r| r.max_ratio <= 1.0 + cfg.contraction_tol);
    let identity_decreasing = identity.windows(2).all(|w| w[1].max_residual <= w[0].max_residual);
    let identity_ok = identity_decreasing && identity.last().is_some_and(|r| r.max_residual <= cfg.identity_tol);

    let lx: Vec<f64> = cfg.zeta_ladder.iter().map(|z| z.norm().ln()).collect();
    let slopes = pairs
        .par_iter()
        .map(|(v, f)| {
            let ly = cfg
                .zeta_ladder
                .iter()
                .map(|&z| Ok(lp(&apply_theta(&params.with_zeta(z), v, f)?, cfg.p)?.ln()))
                .collect::<Result<Vec<f64>>>()?;
            Ok(log_slope(&lx, &ly))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_slope = slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let slope = SlopeFit { max_slope, ok: max_slope <= cfg.slope_max, slopes };
    Ok(FellerReport { contraction, contraction_ok, identity, identity_decreasing, identity_ok, slope, holder: None })
}

/// Hölder(γ) seminorm of `Θ(μ) g` for the same rough `±1` field `g` on two
/// grids; passes when the ratio lies in `[0.5, 2]`.
#[allow(clippy::too_many_arguments)]
pub fn strong_feller_refinement(
    coarse: &Drift,
    fine: &Drift,
    params: &ResolventParams,
    mu: f64,
    gamma: f64,
    blocks: usize,
    seed: u64,
    pair_budget: usize,
) -> Result<HolderCheck> {
    let p = params.with_zeta(C64::new(mu, 0.0));
    let semi = |v: &Drift| -> Result<f64> {
        let g = rough_field(*v.grid(), blocks, seed)?;
        holder(&apply_theta(&p, v, &g)?, gamma, pair_budget, seed)
    };
    let (a, b) = (semi(coarse)?, semi(fine)?);
    let ratio = b / a;
    Ok(HolderCheck { coarse: a, fine: b, ratio, ok: (0.5..=2.0).contains(&ratio) && a.is_finite() && b.is_finite() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::battery::smooth_battery;
    use crate::grid::Grid;

    #[test]
    fn slope_of_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 1.5 * v).collect();
        assert!((log_slope(&x, &y) + 1.5).abs() < 1e-14);
    }

    #[test]
    fn free_resolvent_diagnostics() {
        let g = Grid::new(2, 16, 4.0).unwrap();
        let battery = smooth_battery(g, 3, 1);
        let cfg = FellerConfig {
            mu_ladder: vec![1.0, 100.0, 1000.0],
            zeta_ladder: (0..5).map(|i| C64::new(10f64.powf(i as f64 / 2.0), 0.0)).collect(),
            gamma: 0.3,
            p: 2.0,
            identity_tol: 1e-1,
            contraction_tol: 1e-6,
            slope_max: -0.95,
        };
        let p = ResolventParams::new(C64::new(1.0, 0.0));
        let r = feller_diagnostics(&[Drift::zero(g)], &p, &battery, &cfg).unwrap();
        assert!(r.contraction_ok && r.identity_ok && r.slope.ok, "{r:?}");
        // O(1/μ) approach.
        let (a, b) = (r.identity[1].max_residual, r.identity[2].max_residual);
        assert!(a / b > 8.0 && a / b < 10.5, "{}", a / b);
        let bad = FellerConfig { gamma: 0.9, p: 2.0, ..cfg };
        assert!(feller_diagnostics(&[Drift::zero(Grid::new(3, 8, 1.0).unwrap())], &p, &battery, &bad).is_err());
    }
}
