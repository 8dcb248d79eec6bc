//! Scenario configuration: JSON with unknown keys rejected.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use sdl_core::classes::ext_float;
use sdl_core::measures::{
    atom, delta_shell, hardy, hyperplane_surface, load_measure, slab_kato, sphere_atoms, Measure,
};
use sdl_core::semigroup::Method;
use sdl_core::{Grid, C64};

pub const BUILTIN_NAMES: [&str; 5] = ["hardy", "slab_kato", "sphere_atoms", "hyperplane_surface", "delta_shell_potential"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Classify,
    Resolvent,
    Semigroup,
    Converge,
    Mc,
}

impl Stage {
    pub const ORDER: [Stage; 5] = [Stage::Classify, Stage::Resolvent, Stage::Semigroup, Stage::Converge, Stage::Mc];

    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::Classify => "classify",
            Stage::Resolvent => "resolvent",
            Stage::Semigroup => "semigroup",
            Stage::Converge => "converge",
            Stage::Mc => "mc",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub d: usize,
    pub n: usize,
    pub len: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Ok(Grid::new(self.d, self.n, self.len)?)
    }
}

/// A drift or potential. Positions are in box coordinates; builtins are
/// centered on the box center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    Zero,
    Hardy { delta0: f64 },
    SlabKato { s: f64, amp: f64 },
    SphereAtoms { r: f64, m: f64, count: Option<usize> },
    HyperplaneSurface { c: f64 },
    DeltaShell { r: f64, c: f64, count: Option<usize> },
    Atom { x: Option<Vec<f64>>, w: Vec<f64> },
    /// Measure file, relative to the scenario file.
    File { path: PathBuf },
}

impl MeasureSpec {
    pub fn build(&self, grid: Grid, components: usize, base: &Path) -> Result<Measure> {
        let m = match self {
            MeasureSpec::Zero => Measure::zero(grid, components),
            MeasureSpec::Hardy { delta0 } => hardy(grid, *delta0)?,
            MeasureSpec::SlabKato { s, amp } => slab_kato(grid, *s, *amp)?,
            MeasureSpec::SphereAtoms { r, m, count } => sphere_atoms(grid, *r, *m, *count)?,
            MeasureSpec::HyperplaneSurface { c } => hyperplane_surface(grid, *c)?,
            MeasureSpec::DeltaShell { r, c, count } => delta_shell(grid, *r, *c, *count)?,
            MeasureSpec::Atom { x, w } => atom(grid, x.clone(), w)?,
            MeasureSpec::File { path } => {
                let p = base.join(path);
                load_measure(&p, Some(grid)).with_context(|| format!("loading {}", p.display()))?
            }
        };
        ensure!(
            m.components() == components,
            "{} needs {components} component(s), got {}",
            self.label(),
            m.components()
        );
        Ok(m)
    }

    pub fn label(&self) -> &'static str {
        match self {
            MeasureSpec::Zero => "zero",
            MeasureSpec::Hardy { .. } => "hardy",
            MeasureSpec::SlabKato { .. } => "slab_kato",
            MeasureSpec::SphereAtoms { .. } => "sphere_atoms",
            MeasureSpec::HyperplaneSurface { .. } => "hyperplane_surface",
            MeasureSpec::DeltaShell { .. } => "delta_shell",
            MeasureSpec::Atom { .. } => "atom",
            MeasureSpec::File { .. } => "file",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaQuantity {
    DeltaF,
    DeltaK,
    DeltaWeak,
    DeltaPot,
}

/// Expected class constant at one `λ` of the ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaTarget {
    pub quantity: DeltaQuantity,
    pub lambda: f64,
    pub value: f64,
    pub rel_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MollifySpec {
    pub eps: Vec<f64>,
    /// Cutoff radii, one per rung or a single value for all; `null` is no
    /// cutoff.
    pub k: Vec<Option<f64>>,
}

impl MollifySpec {
    pub fn rungs(&self) -> Vec<(f64, f64)> {
        self.eps
            .iter()
            .enumerate()
            .map(|(i, &e)| {
                let k = if self.k.len() == 1 { self.k[0] } else { self.k[i] };
                (e, k.unwrap_or(f64::INFINITY))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolventSpec {
    #[serde(default = "two")]
    pub p: f64,
    /// `"inf"` is accepted.
    #[serde(default = "infinite", with = "ext_float")]
    pub q: f64,
    #[serde(default = "one")]
    pub r: f64,
    #[serde(default = "two")]
    pub alpha: f64,
    #[serde(default = "tol")]
    pub neumann_tol: f64,
    #[serde(default = "maxit")]
    pub neumann_max: usize,
}

fn two() -> f64 {
    2.0
}
fn one() -> f64 {
    1.0
}
fn infinite() -> f64 {
    f64::INFINITY
}
fn tol() -> f64 {
    1e-12
}
fn maxit() -> usize {
    2000
}

impl Default for ResolventSpec {
    fn default() -> Self {
        Self { p: 2.0, q: f64::INFINITY, r: 1.0, alpha: 2.0, neumann_tol: tol(), neumann_max: maxit() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSpec {
    pub t: f64,
    pub steps: usize,
    pub method: Method,
}

/// Feller diagnostics; `p > d − 1` and `0 < γ < 1 − (d−1)/p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FellerSpec {
    pub p: f64,
    pub gamma: f64,
    pub identity_tol: f64,
    /// Hölder check between `n` and `2n`, with this many sign blocks per axis.
    #[serde(default)]
    pub holder_blocks: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSpec {
    pub paths: usize,
    pub h: f64,
    pub seed: u64,
    pub tv_limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub stages: Vec<Stage>,
    pub grid: GridSpec,
    pub drift: MeasureSpec,
    #[serde(default)]
    pub potential: Option<MeasureSpec>,
    pub lambda: Vec<f64>,
    #[serde(default)]
    pub delta_targets: Vec<DeltaTarget>,
    /// Shifts, as `[re, im]`, as multiples of `κ λ` with `λ` the first
    /// ladder entry.
    pub zeta: Vec<C64>,
    /// Shifts for the approach to the identity, as multiples of `κ λ`.
    pub mu: Vec<f64>,
    pub mollify: MollifySpec,
    #[serde(default)]
    pub resolvent: ResolventSpec,
    pub evolution: EvolutionSpec,
    #[serde(default)]
    pub feller: Option<FellerSpec>,
    pub mc: McSpec,
    /// Number of smooth test fields.
    #[serde(default = "battery_size")]
    pub battery: usize,
    #[serde(default)]
    pub battery_seed: u64,
    pub output: PathBuf,
}

fn battery_size() -> usize {
    5
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(!self.stages.is_empty(), "no stages requested");
        ensure!(!self.lambda.is_empty(), "lambda ladder is empty");
        ensure!(self.lambda.iter().all(|&l| l > 0.0 && l.is_finite()), "lambda entries must be positive");
        ensure!(!self.zeta.is_empty() && !self.mu.is_empty(), "zeta and mu ladders must be nonempty");
        ensure!(self.zeta.iter().all(|z| z.re >= 1.0), "zeta multiples need Re >= 1 to stay in the half-plane");
        ensure!(self.mu.iter().all(|&m| m >= 1.0), "mu multiples must be >= 1");
        ensure!(!self.mollify.eps.is_empty(), "mollification ladder is empty");
        let k = self.mollify.k.len();
        ensure!(k == 1 || k == self.mollify.eps.len(), "k ladder must have one entry or one per eps");
        ensure!(self.battery > 0, "battery must be nonempty");
        let r = &self.resolvent;
        let probe = sdl_core::resolvent::ResolventParams {
            p: r.p,
            q: r.q,
            r: r.r,
            alpha: r.alpha,
            neumann_tol: r.neumann_tol,
            neumann_max: r.neumann_max,
            ..sdl_core::resolvent::ResolventParams::new(C64::new(1.0, 0.0))
        };
        probe.validate()?;
        Ok(())
    }

    /// Referenced measure files exist relative to `base`.
    pub fn check_files(&self, base: &Path) -> Result<()> {
        for m in std::iter::once(&self.drift).chain(self.potential.as_ref()) {
            if let MeasureSpec::File { path } = m {
                let p = base.join(path);
                ensure!(p.is_file(), "measure file {} does not exist", p.display());
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_string(self).expect("scenario serializes");
        hex::encode(Sha256::digest(canon.as_bytes()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

fn base(name: &str, d: usize, n: usize, drift: MeasureSpec) -> Scenario {
    Scenario {
        name: name.into(),
        stages: Stage::ORDER.to_vec(),
        grid: GridSpec { d, n, len: 4.0 },
        drift,
        potential: None,
        lambda: vec![0.25, 0.5, 1.0, 2.0, 4.0],
        delta_targets: vec![],
        zeta: vec![C64::new(1.0, 0.0), C64::new(1.0, 1.0), C64::new(10.0, 0.0)],
        mu: vec![1.0, 10.0, 100.0],
        mollify: MollifySpec { eps: vec![0.25, 0.0625, 0.015625], k: vec![None] },
        resolvent: ResolventSpec::default(),
        evolution: EvolutionSpec { t: 0.1, steps: 100, method: Method::BackwardEuler },
        feller: Some(FellerSpec { p: 2.5, gamma: 0.15, identity_tol: 0.05, holder_blocks: Some(8) }),
        mc: McSpec { paths: 100_000, h: 1e-3, seed: 1, tv_limit: 0.05 },
        battery: 5,
        battery_seed: 0,
        output: PathBuf::from(format!("out/{name}")),
    }
}

/// A documented default scenario for each builtin drift or potential.
pub fn builtin_scenario(name: &str) -> Result<Scenario> {
    Ok(match name {
        "hardy" => {
            let mut s = base("hardy", 3, 64, MeasureSpec::Hardy { delta0: 0.25 });
            s.delta_targets =
                vec![DeltaTarget { quantity: DeltaQuantity::DeltaF, lambda: 0.25, value: 0.25, rel_tol: 0.15 }];
            s.stages = vec![Stage::Classify, Stage::Resolvent];
            s
        }
        "slab_kato" => base("slab_kato", 3, 32, MeasureSpec::SlabKato { s: 0.5, amp: 0.1 }),
        "sphere_atoms" => base("sphere_atoms", 3, 32, MeasureSpec::SphereAtoms { r: 1.0, m: 0.5, count: None }),
        "hyperplane_surface" => base("hyperplane_surface", 2, 64, MeasureSpec::HyperplaneSurface { c: 0.1 }),
        "delta_shell_potential" => {
            let mut s = base("delta_shell_potential", 2, 64, MeasureSpec::Zero);
            s.potential = Some(MeasureSpec::DeltaShell { r: 1.0, c: 0.1, count: None });
            s.stages = vec![Stage::Classify, Stage::Resolvent];
            s
        }
        other => bail!("unknown builtin scenario {other:?}; known: {}", BUILTIN_NAMES.join(", ")),
    })
}
