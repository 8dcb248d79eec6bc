//! The five pipeline stages. Each returns its checks and artifact names;
//! errors are recorded by the caller.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, ensure, Context as _, Result};
use rayon::prelude::*;
use serde::Serialize;

use sdl_core::battery::smooth_battery;
use sdl_core::classes::{classify, classify_potential, default_kappa_grid, estimate_m_d, ClassReport, MdQuad};
use sdl_core::measures::{mollify, Measure};
use sdl_core::norms::lp;
use sdl_core::power::PowerOpts;
use sdl_core::resolvent::{
    apply_generator, apply_theta, apply_theta_report, schrodinger_theta, z_norm_estimate, Drift, ResolventParams,
};
use sdl_core::semigroup::{
    compare_tv, evolve, feller_diagnostics, log_slope, mc_sample, strong_feller_refinement, transition_kernel,
    trotter_convergence, FellerConfig, McOptions, Method, TrotterConfig,
};
use sdl_core::{Field, Grid, VecField, C64};

use crate::artifacts::{num, Artifacts};
use crate::scenario::{DeltaQuantity, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub limit: f64,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl Check {
    fn le(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), pass: value <= limit, value, limit, detail: String::new() }
    }

    fn flag(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            value: if pass { 1.0 } else { 0.0 },
            limit: 1.0,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Default)]
pub struct StageOutput {
    /// Reason the stage does not apply to this scenario.
    pub skipped: Option<String>,
    pub checks: Vec<Check>,
    pub artifacts: Vec<String>,
    pub warnings: Vec<String>,
}

/// Everything the stages share, built once per run.
pub struct Context {
    pub scenario: Scenario,
    pub grid: Grid,
    pub drift: Measure,
    pub potential: Option<Measure>,
    pub ladder: Vec<VecField>,
    pub battery: Vec<Field>,
    pub kappa: f64,
    pub lambda0: f64,
}

impl Context {
    pub fn build(scenario: Scenario, base: &Path) -> Result<Self> {
        scenario.check_files(base)?;
        let grid = scenario.grid.build()?;
        let d = grid.dim();
        let drift = scenario.drift.build(grid, d, base).context("building the drift")?;
        let potential = match &scenario.potential {
            Some(p) => Some(p.build(grid, 1, base).context("building the potential")?),
            None => None,
        };
        let ladder = scenario
            .mollify
            .rungs()
            .iter()
            .map(|&(eps, k)| mollify(&drift, eps, k))
            .collect::<sdl_core::Result<Vec<_>>>()
            .context("mollifying the drift")?;
        let battery = smooth_battery(grid, scenario.battery, scenario.battery_seed);
        let kappa = estimate_m_d(d, &default_kappa_grid(), &MdQuad::default())
            .context("estimating m_d")?
            .kappa_best;
        let lambda0 = scenario.lambda[0];
        Ok(Self { scenario, grid, drift, potential, ladder, battery, kappa, lambda0 })
    }

    pub fn half_plane(&self) -> f64 {
        self.kappa * self.lambda0
    }

    pub fn params(&self, zeta: C64) -> ResolventParams {
        let r = &self.scenario.resolvent;
        ResolventParams {
            zeta,
            p: r.p,
            q: r.q,
            r: r.r,
            alpha: r.alpha,
            neumann_tol: r.neumann_tol,
            neumann_max: r.neumann_max,
            re_min: self.half_plane(),
        }
    }

    pub fn zetas(&self) -> Vec<C64> {
        self.scenario.zeta.iter().map(|z| z * self.half_plane()).collect()
    }

    /// Finest mollification rung.
    fn finest(&self) -> &VecField {
        self.ladder.last().expect("nonempty ladder")
    }
}

const CLASS_COLUMNS: &str = "kind,lambda,eps,k,delta_f,delta_k,delta_weak,delta_pot,m_d,j_lo,j_hi,i_lo,i_hi,hyp_md_delta,hyp_strong_feller,diagnostic_only";

fn class_row(out: &mut String, kind: &str, eps: Option<f64>, k: Option<f64>, r: &ClassReport) {
    let iv = |i: Option<sdl_core::classes::Interval>| match i {
        Some(i) => (Some(i.lo), Some(i.hi)),
        None => (None, None),
    };
    let (jl, jh) = iv(r.interval_j);
    let (il, ih) = iv(r.interval_i);
    let _ = writeln!(
        out,
        "{kind},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.lambda,
        num(eps),
        num(k),
        num(r.delta_f),
        r.delta_k,
        r.delta_weak,
        num(r.delta_pot),
        r.m_d,
        num(jl),
        num(jh),
        num(il),
        num(ih),
        r.hyp_md_delta,
        r.hyp_strong_feller,
        r.diagnostic_only
    );
}

fn quantity(r: &ClassReport, q: DeltaQuantity) -> Option<f64> {
    match q {
        DeltaQuantity::DeltaF => r.delta_f,
        DeltaQuantity::DeltaK => Some(r.delta_k),
        DeltaQuantity::DeltaWeak => Some(r.delta_weak),
        DeltaQuantity::DeltaPot => r.delta_pot,
    }
}

pub fn classify_stage(cx: &Context, art: &Artifacts) -> Result<StageOutput> {
    let s = &cx.scenario;
    let alpha = s.resolvent.alpha;
    let mut out = StageOutput::default();
    if cx.grid.dim() < 3 {
        out.warnings.push("d < 3: class constants are diagnostic only".into());
    }
    let one = |mu: &Measure, scalar: bool, l: f64| -> sdl_core::Result<ClassReport> {
        if scalar {
            classify_potential(mu, l)
        } else {
            classify(mu, l, alpha)
        }
    };
    let mut subjects: Vec<(&str, &Measure, bool)> = vec![("drift", &cx.drift, false)];
    if let Some(p) = &cx.potential {
        subjects.push(("potential", p, true));
    }
    let mut csv = format!("{CLASS_COLUMNS}\n");
    for (kind, mu, scalar) in &subjects {
        let rows = s
            .lambda
            .par_iter()
            .map(|&l| one(mu, *scalar, l))
            .collect::<sdl_core::Result<Vec<_>>>()?;
        for r in &rows {
            class_row(&mut csv, kind, None, None, r);
        }
        for t in &s.delta_targets {
            // `delta_pot` targets the potential, everything else the drift.
            if (t.quantity == DeltaQuantity::DeltaPot) != *scalar {
                continue;
            }
            let Some(r) = rows.iter().find(|r| (r.lambda - t.lambda).abs() <= 1e-12 * t.lambda) else {
                bail!("delta target at lambda = {} is not on the ladder", t.lambda);
            };
            let got = quantity(r, t.quantity).unwrap_or(f64::NAN);
            let rel = (got - t.value).abs() / t.value.abs();
            out.checks.push(Check {
                name: format!("{kind} {:?} at lambda {} within {} of {}", t.quantity, t.lambda, t.rel_tol, t.value),
                pass: rel <= t.rel_tol,
                value: rel,
                limit: t.rel_tol,
                detail: format!("estimate {got}"),
            });
        }

        // Mollification must not raise the class constants beyond discretization slack.
        let orig = &rows[0];
        let l0 = orig.lambda;
        let mut worst: f64 = 0.0;
        for (i, &(eps, k)) in s.mollify.rungs().iter().enumerate() {
            let m = if *scalar {
                Measure::from_scalar_density(mollify(mu, eps, k)?.comp(0).clone())
            } else if i < cx.ladder.len() && kind == &"drift" {
                Measure::from_density(cx.ladder[i].clone())
            } else {
                Measure::from_density(mollify(mu, eps, k)?)
            };
            let r = one(&m, *scalar, l0)?;
            class_row(&mut csv, &format!("{kind}_mollified"), Some(eps), Some(k), &r);
            let pairs = [(r.delta_k, orig.delta_k), (r.delta_weak, orig.delta_weak)];
            for (a, b) in pairs.iter().chain(r.delta_pot.zip(orig.delta_pot).iter()) {
                if *b > 0.0 {
                    worst = worst.max(a / b);
                } else if *a > 0.0 {
                    worst = f64::INFINITY;
                }
            }
        }
        out.checks.push(Check::le(format!("{kind} mollified / original delta"), worst, 1.05));
    }
    out.artifacts.push(art.csv("classify.csv", &csv)?);
    Ok(out)
}

pub fn resolvent_stage(cx: &Context, art: &Artifacts) -> Result<StageOutput> {
    let s = &cx.scenario;
    let mut out = StageOutput::default();
    let zetas = cx.zetas();
    let p = s.resolvent.p;
    let drift = Drift::from_measure(&cx.drift)?;
    let mut csv = String::from("zeta_re,zeta_im,field,operator,iterations,neumann_residual,norm_l2,norm_p\n");
    let mut lnorms = vec![Vec::new(); cx.battery.len()];
    for &z in &zetas {
        let params = cx.params(z);
        let rows = cx
            .battery
            .par_iter()
            .map(|f| -> Result<(Field, usize, f64)> {
                let (u, rep) = match &cx.potential {
                    Some(psi) if drift.is_zero() => schrodinger_theta(&params, psi, f)?,
                    Some(_) => bail!("drift and potential together are not supported"),
                    None => apply_theta_report(&params, &drift, f)?,
                };
                Ok((u, rep.iterations, rep.residual))
            })
            .collect::<Result<Vec<_>>>()?;
        let op = if cx.potential.is_some() { "theta_potential" } else { "theta" };
        for (i, (u, it, res)) in rows.iter().enumerate() {
            let np = lp(u, p)?;
            lnorms[i].push(np.ln());
            let _ = writeln!(csv, "{},{},{i},{op},{it},{res},{},{np}", z.re, z.im, u.norm2());
        }
    }
    out.artifacts.push(art.csv("resolvent.csv", &csv)?);

    let lx: Vec<f64> = zetas.iter().map(|z| z.norm().ln()).collect();
    let distinct = lx.windows(2).any(|w| (w[1] - w[0]).abs() > 1e-9);
    if distinct {
        let slope = lnorms.iter().map(|y| log_slope(&lx, y)).fold(f64::NEG_INFINITY, f64::max);
        out.checks.push(Check::le(format!("log-log slope of ||Theta f||_{p} in |zeta|"), slope, -0.95));
    } else {
        out.warnings.push("zeta ladder has a single modulus; slope fit skipped".into());
    }

    if cx.potential.is_none() && !drift.is_zero() {
        let dweak = sdl_core::classes::weak_form_delta(&cx.drift.variation(), cx.lambda0, 0.25)?;
        let opts = PowerOpts { tol: 1e-7, ..Default::default() };
        let mut zs = String::from("zeta_re,zeta_im,z_norm,delta_weak\n");
        let mut worst: f64 = 0.0;
        for &z in &zetas {
            let zn = z_norm_estimate(&cx.params(z), &drift, &opts)?.value;
            worst = worst.max(zn / dweak);
            let _ = writeln!(zs, "{},{},{zn},{dweak}", z.re, z.im);
        }
        out.artifacts.push(art.csv("z_norm.csv", &zs)?);
        out.checks.push(Check::le("||Z|| / delta_weak", worst, 1.05));

        let v = cx.finest();
        let vd = Drift::from_field(v.clone())?;
        let z = zetas[0];
        let worst = cx
            .battery
            .par_iter()
            .map(|f| -> Result<f64> {
                let u = apply_theta(&cx.params(z), &vd, f)?;
                let mut r = apply_generator(v, &u, s.resolvent.alpha)?;
                r.axpy(z, &u);
                Ok(r.sub(f).norm2() / f.norm2())
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        out.checks.push(Check::le("generator residual on the finest rung", worst, 1e-6));
    }
    Ok(out)
}

fn skip_potential(cx: &Context) -> Option<StageOutput> {
    cx.potential.as_ref().map(|_| StageOutput {
        skipped: Some("implemented for drifts only".into()),
        ..Default::default()
    })
}

pub fn semigroup_stage(cx: &Context, art: &Artifacts) -> Result<StageOutput> {
    if let Some(o) = skip_potential(cx) {
        return Ok(o);
    }
    ensure!(cx.drift.is_real(), "the semigroup stage needs a real drift");
    let s = &cx.scenario;
    let ev = &s.evolution;
    let mut out = StageOutput::default();
    let params = cx.params(C64::new(cx.half_plane(), 0.0));
    let src = cx.grid.center_index();
    let mut csv = String::from("rung,eps,k,method,mass_defect,min_over_sup,sup_growth\n");
    let (mut mass, mut neg, mut growth) = (0.0f64, 0.0f64, f64::NEG_INFINITY);
    for (i, (v, (eps, k))) in cx.ladder.iter().zip(s.mollify.rungs()).enumerate() {
        let drift = Drift::from_field(v.clone())?;
        let kern = transition_kernel(&drift, &params, ev.t, src, ev.steps, ev.method)?;
        let g = cx
            .battery
            .par_iter()
            .map(|f| Ok(evolve(&drift, &params, ev.t, ev.steps, f, ev.method)?.sup() / f.sup() - 1.0))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        let mos = -kern.min_value / kern.sup_value;
        let _ = writeln!(csv, "{i},{eps},{k},{},{},{mos},{g}", ev.method.as_str(), kern.mass_defect);
        mass = mass.max(kern.mass_defect);
        neg = neg.max(mos);
        growth = growth.max(g);
        if i + 1 == cx.ladder.len() {
            out.artifacts.extend(art.kernel("kernel.bin", &kern)?);
        }
    }
    out.artifacts.push(art.csv("semigroup.csv", &csv)?);
    out.checks.push(Check::le("kernel -min/sup", neg, 1e-8));
    out.checks.push(Check::le("kernel mass defect", mass, 1e-8));
    out.checks.push(Check::le("sup-norm growth", growth, 1e-6));

    let measure_kernel = transition_kernel(&Drift::from_measure(&cx.drift)?, &params, ev.t, src, ev.steps, Method::BackwardEuler)?;
    out.artifacts.extend(art.kernel("kernel_measure.bin", &measure_kernel)?);

    match &s.feller {
        None => out.warnings.push("no feller block: Feller diagnostics skipped".into()),
        Some(fs) => {
            let kl = cx.half_plane();
            let cfg = FellerConfig {
                mu_ladder: s.mu.iter().map(|m| m * kl).collect(),
                zeta_ladder: cx.zetas(),
                gamma: fs.gamma,
                p: fs.p,
                identity_tol: fs.identity_tol,
                contraction_tol: 1e-6,
                slope_max: -0.95,
            };
            let drifts = cx.ladder.iter().map(|v| Drift::from_field(v.clone())).collect::<sdl_core::Result<Vec<_>>>()?;
            let mut rep = feller_diagnostics(&drifts, &params, &cx.battery, &cfg)?;
            out.checks.push(Check::flag("sup contraction of mu Theta(mu)", rep.contraction_ok, ""));
            out.checks.push(Check::flag("mu Theta(mu) f -> f", rep.identity_ok, ""));
            out.checks.push(Check::le("Feller decay slope", rep.slope.max_slope, cfg.slope_max));
            if let Some(blocks) = fs.holder_blocks {
                let g = &s.grid;
                let fine_grid = Grid::new(g.d, 2 * g.n, g.len)?;
                let (eps, k) = *s.mollify.rungs().last().expect("nonempty ladder");
                let fine = Drift::from_field(mollify(&s.drift.build(fine_grid, g.d, Path::new("."))?, eps, k)?)?;
                let pf = ResolventParams { p: fs.p, ..params };
                let h = strong_feller_refinement(&drifts[drifts.len() - 1], &fine, &pf, kl, fs.gamma, blocks, s.battery_seed, 100_000)?;
                out.checks.push(Check {
                    name: "Holder seminorm ratio under refinement".into(),
                    pass: h.ok,
                    value: h.ratio,
                    limit: 2.0,
                    detail: format!("coarse {}, fine {}, accepted range [0.5, 2]", h.coarse, h.fine),
                });
                rep.holder = Some(h);
            }
            out.artifacts.push(art.json("feller.json", &rep)?);
        }
    }
    Ok(out)
}

pub fn converge_stage(cx: &Context, art: &Artifacts) -> Result<StageOutput> {
    if let Some(o) = skip_potential(cx) {
        return Ok(o);
    }
    let s = &cx.scenario;
    let mut out = StageOutput::default();
    if cx.ladder.len() < 2 {
        out.warnings.push("a single rung has no Cauchy residuals".into());
    }
    let kl = cx.half_plane();
    let zeta = cx.zetas()[0];
    let ev = &s.evolution;
    let cfg = TrotterConfig {
        zeta,
        p: s.resolvent.p.max(2.0),
        mu: s.mu.last().copied().unwrap_or(1.0) * kl,
        evolve: Some((ev.t, ev.steps, ev.method)),
        eps: s.mollify.eps.clone(),
    };
    let sigma = Drift::from_measure(&cx.drift)?;
    let table = trotter_convergence(&cx.ladder, &sigma, &cx.params(zeta), &cx.battery, &cfg)?;
    out.artifacts.push(art.csv("converge.csv", &table.to_csv())?);
    out.checks.push(Check::flag(
        "theta Cauchy residuals strictly decreasing",
        table.strictly_decreasing_theta(),
        format!("non-monotone after rungs {:?}", table.non_monotone),
    ));
    out.checks.push(Check::flag(
        "interpolation inequality on every rung",
        table.rows.iter().all(|r| r.interpolation_ok),
        "",
    ));
    let ident = table.rows.iter().map(|r| r.identity_sup).fold(0.0, f64::max);
    let tol = s.feller.as_ref().map(|f| f.identity_tol).unwrap_or(1e-2);
    out.checks.push(Check::le("mu Theta(mu) f - f on every rung", ident, tol));
    Ok(out)
}

pub fn mc_stage(cx: &Context, art: &Artifacts) -> Result<StageOutput> {
    if let Some(o) = skip_potential(cx) {
        return Ok(o);
    }
    ensure!(cx.drift.is_real(), "Monte Carlo needs a real drift");
    let s = &cx.scenario;
    let mut out = StageOutput::default();
    let v = cx.finest();
    let params = cx.params(C64::new(cx.half_plane(), 0.0));
    let kern = transition_kernel(
        &Drift::from_field(v.clone())?,
        &params,
        s.evolution.t,
        cx.grid.center_index(),
        s.evolution.steps,
        s.evolution.method,
    )?;
    let opts = McOptions::new(s.evolution.t, s.mc.h, s.mc.paths, s.mc.seed);
    let hist = mc_sample(v, &kern.x0, &opts)?;
    if hist.cfl_warning {
        out.warnings.push("h sup|v| exceeds the grid spacing".into());
    }
    let tv = compare_tv(&hist, &kern)?;
    out.artifacts.push(art.csv("histogram.csv", &hist.to_csv())?);
    out.artifacts.push(art.field_csv("kernel_slice.csv", &kern.values)?);
    #[derive(Serialize)]
    struct McReport {
        tv: f64,
        paths: usize,
        steps: usize,
        seed: u64,
        cfl_warning: bool,
    }
    let rep = McReport { tv, paths: hist.paths, steps: hist.steps, seed: s.mc.seed, cfl_warning: hist.cfl_warning };
    out.artifacts.push(art.json("mc.json", &rep)?);
    out.checks.push(Check::le("total variation to the kernel", tv, s.mc.tv_limit));
    Ok(out)
}
