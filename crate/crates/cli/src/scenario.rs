//! Scenario files: a JSON document naming a system, a domain, a target and
//! the stages to run. Every tolerance has a default that is filled in on
//! load, so the resolved scenario echoed into the run report lists exactly
//! the values that were used.

use std::fmt;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};

use mintime::analysis::{HolderOptions, RefinementOptions};
use mintime::eikonal::SolveOptions;
use mintime::extremals::{ShootOptions, DEFAULT_DT};
use mintime::fields::{DEFAULT_MAX_DEPTH, DEFAULT_RANK_TOL};
use mintime::geometry::{FanOptions, Region, DEFAULT_EPS_CHAR_H};
use mintime::hamiltonian::{DEFAULT_CHAR_TOL, DEFAULT_SYMPLECTIC_TOL};
use mintime::systems::registry_lookup;
use mintime::{ControlSystem, PolyVectorField, TargetSet, UniformGrid};

/// A registry key or an inline list of polynomial fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemSpec {
    Registry(String),
    Inline { fields: Vec<PolyVectorField> },
}

impl SystemSpec {
    pub fn resolve(&self) -> mintime::Result<ControlSystem> {
        match self {
            SystemSpec::Registry(name) => registry_lookup(name),
            SystemSpec::Inline { fields } => ControlSystem::new(fields.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// Pipeline stages, declared in dependency order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Hormander,
    Solve,
    CrossCheck,
    Reachable,
    Char,
    Petrov,
    Extremals,
    SymplecticScan,
    Lipschitz,
    Refinement,
    Holder,
}

impl Stage {
    pub fn needs_value_field(self) -> bool {
        matches!(
            self,
            Stage::CrossCheck | Stage::Reachable | Stage::Char | Stage::Petrov | Stage::Lipschitz
        )
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("stage serializes");
        f.write_str(s.as_str().unwrap_or("?"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub solver: SolveOptions,
    pub fans: FanOptions,
    /// Characteristic threshold for grid normals, in units of `h`.
    pub eps_char_h: f64,
    /// Membership tolerance for exact cotangent points.
    pub tol_char: f64,
    pub symplectic_tol: f64,
    /// Scheme cross-check bound in units of `h`, on cells with `T ≤ cross_check_t_max`.
    pub cross_check_h: f64,
    pub cross_check_t_max: f64,
    pub max_depth: usize,
    pub rank_tol: f64,
    /// Lipschitz quotient radius in units of `h`.
    pub lipschitz_radius_h: f64,
    pub shoot: ShootOptions,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            solver: SolveOptions::default(),
            fans: FanOptions::default(),
            eps_char_h: DEFAULT_EPS_CHAR_H,
            tol_char: DEFAULT_CHAR_TOL,
            symplectic_tol: DEFAULT_SYMPLECTIC_TOL,
            cross_check_h: 3.0,
            cross_check_t_max: 1.0,
            max_depth: DEFAULT_MAX_DEPTH,
            rank_tol: DEFAULT_RANK_TOL,
            lipschitz_radius_h: 2.0,
            shoot: ShootOptions::default(),
        }
    }
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExtremalJob {
    Normal {
        x0: Vec<f64>,
        p0: Vec<f64>,
        duration: f64,
        #[serde(default = "default_dt")]
        dt: f64,
    },
    Singular {
        x0: Vec<f64>,
        p0: Vec<f64>,
        duration: f64,
        #[serde(default = "default_dt")]
        dt: f64,
    },
    /// Carnot–Carathéodory distance by shooting normal extremals.
    Shoot { start: Vec<f64>, goal: Vec<f64> },
}

/// Random points of `Char` over a box of base points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymplecticScan {
    pub samples: usize,
    /// Base-point box; the domain when omitted.
    #[serde(default)]
    pub lo: Option<Vec<f64>>,
    #[serde(default)]
    pub hi: Option<Vec<f64>>,
    /// Per-coordinate pins (`null` = sampled), for systems whose
    /// characteristic fibre is nontrivial only on a hypersurface.
    #[serde(default)]
    pub fixed: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefinementSpec {
    /// Spacing of the coarsest of the three grids.
    pub base_h: f64,
    #[serde(default)]
    pub options: RefinementOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolderSpec {
    pub center: Vec<f64>,
    #[serde(default)]
    pub options: HolderOptions,
}

/// Checks evaluated after the stages ran; the run passes iff all hold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Assertion {
    /// The Lax–Friedrichs solve converged.
    Converged,
    /// The two schemes agree within `cross_check_h · h`.
    CrossCheckAgrees,
    /// No characteristic records at any τ.
    CharRecordsEmpty,
    /// Every characteristic record lies in `|x_axis − center| ≤ half_width_h · h`.
    CharRecordsInSlab {
        axis: usize,
        center: f64,
        half_width_h: f64,
    },
    /// Every Petrov margin is at least `min`.
    PetrovAtLeast { min: f64 },
    /// Every extremal job completed (shooting jobs: reached the goal).
    ExtremalsCompleted,
    /// Every completed extremal conserves `H` to within `max`.
    ConservationBelow { max: f64 },
    /// Every sampled Char point received this verdict.
    SymplecticVerdictsAll { verdict: mintime::hamiltonian::Verdict },
    /// The bracket-generating step is at most `step` at every probe point.
    HormanderStepAtMost { step: usize },
    /// Flagged share of eligible coarse nodes below `max`.
    FlaggedFractionBelow { max: f64 },
    /// Every flagged node lies in `|x_axis − center| ≤ half_width_h · h_coarse`.
    FlaggedInSlab {
        axis: usize,
        center: f64,
        half_width_h: f64,
    },
    /// Flagged volume fraction decreases over the refinement steps.
    FlaggedFractionDecreasing,
    /// Every fitted direction has exponent at least `min`.
    HolderAlphaAtLeast { min: f64 },
}

impl Assertion {
    /// The stage whose output the assertion inspects.
    pub fn stage(&self) -> Stage {
        match self {
            Assertion::Converged => Stage::Solve,
            Assertion::CrossCheckAgrees => Stage::CrossCheck,
            Assertion::CharRecordsEmpty | Assertion::CharRecordsInSlab { .. } => Stage::Char,
            Assertion::PetrovAtLeast { .. } => Stage::Petrov,
            Assertion::ExtremalsCompleted | Assertion::ConservationBelow { .. } => Stage::Extremals,
            Assertion::SymplecticVerdictsAll { .. } => Stage::SymplecticScan,
            Assertion::HormanderStepAtMost { .. } => Stage::Hormander,
            Assertion::FlaggedFractionBelow { .. }
            | Assertion::FlaggedInSlab { .. }
            | Assertion::FlaggedFractionDecreasing => Stage::Refinement,
            Assertion::HolderAlphaAtLeast { .. } => Stage::Holder,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub system: SystemSpec,
    pub domain: Domain,
    pub h: f64,
    pub target: TargetSet,
    #[serde(default)]
    pub taus: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    pub stages: Vec<Stage>,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Regions for Petrov margins; the whole grid when empty.
    #[serde(default)]
    pub petrov_regions: Vec<Region>,
    #[serde(default)]
    pub extremals: Vec<ExtremalJob>,
    #[serde(default)]
    pub symplectic_scan: Option<SymplecticScan>,
    /// Probe points for the bracket-generating step.
    #[serde(default)]
    pub hormander_points: Vec<Vec<f64>>,
    #[serde(default)]
    pub refinement: Option<RefinementSpec>,
    #[serde(default)]
    pub holder: Option<HolderSpec>,
    #[serde(default)]
    pub assertions: Vec<Assertion>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let mut s: Scenario = serde_json::from_str(text).context("malformed scenario")?;
        s.stages.sort();
        s.stages.dedup();
        s.tolerances.shoot.seed = s.seed;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text)
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.tolerances.shoot.seed = seed;
    }

    pub fn grid(&self) -> mintime::Result<UniformGrid> {
        UniformGrid::from_box(&self.domain.lo, &self.domain.hi, self.h)
    }

    /// Structural checks that do not require solving anything.
    pub fn validate(&self) -> Result<ControlSystem> {
        ensure!(
            !self.name.is_empty()
                && self
                    .name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)),
            "scenario name must be a non-empty [A-Za-z0-9._-] string, got {:?}",
            self.name
        );
        ensure!(
            self.h > 0.0 && self.h.is_finite(),
            "grid spacing h must be positive, got {}",
            self.h
        );
        let system = self.system.resolve()?;
        let n = system.dim();
        ensure!(
            self.domain.lo.len() == n && self.domain.hi.len() == n,
            "domain dimension does not match the system dimension {n}"
        );
        ensure!(
            self.domain.lo.iter().zip(&self.domain.hi).all(|(a, b)| a < b),
            "domain lower corner must be below the upper corner"
        );
        self.grid()?;
        self.target.level_function(n)?;
        for tau in &self.taus {
            ensure!(*tau > 0.0 && tau.is_finite(), "tau values must be positive, got {tau}");
        }
        ensure!(!self.stages.is_empty(), "no stages requested");
        if self.stages.iter().any(|s| s.needs_value_field()) {
            ensure!(
                self.stages.contains(&Stage::Solve),
                "requested stages need the solve stage"
            );
        }
        for stage in [Stage::Reachable, Stage::Char, Stage::Petrov] {
            if self.stages.contains(&stage) {
                ensure!(!self.taus.is_empty(), "stage {stage} needs at least one tau");
            }
        }
        if self.stages.contains(&Stage::Refinement) {
            let spec = self
                .refinement
                .as_ref()
                .context("refinement stage needs a refinement block")?;
            UniformGrid::from_box(&self.domain.lo, &self.domain.hi, spec.base_h)?;
        }
        if self.stages.contains(&Stage::Holder) {
            let spec = self.holder.as_ref().context("holder stage needs a holder block")?;
            ensure!(spec.center.len() == n, "holder center has the wrong dimension");
        }
        if self.stages.contains(&Stage::SymplecticScan) {
            let scan = self
                .symplectic_scan
                .as_ref()
                .context("symplectic_scan stage needs a symplectic_scan block")?;
            ensure!(scan.samples > 0, "symplectic scan needs at least one sample");
            for corner in [&scan.lo, &scan.hi].into_iter().flatten() {
                ensure!(corner.len() == n, "symplectic scan box has the wrong dimension");
            }
            ensure!(scan.fixed.len() <= n, "symplectic scan pins exceed the dimension");
        }
        if self.stages.contains(&Stage::Hormander) {
            ensure!(
                !self.hormander_points.is_empty(),
                "hormander stage needs hormander_points"
            );
            for x in &self.hormander_points {
                ensure!(x.len() == n, "hormander point has the wrong dimension");
            }
        }
        if self.stages.contains(&Stage::Extremals) {
            ensure!(!self.extremals.is_empty(), "extremals stage needs extremal jobs");
            for job in &self.extremals {
                let dims: Vec<usize> = match job {
                    ExtremalJob::Normal { x0, p0, duration, dt } | ExtremalJob::Singular { x0, p0, duration, dt } => {
                        ensure!(
                            *duration > 0.0 && *dt > 0.0,
                            "extremal duration and dt must be positive"
                        );
                        vec![x0.len(), p0.len()]
                    }
                    ExtremalJob::Shoot { start, goal } => vec![start.len(), goal.len()],
                };
                ensure!(dims.iter().all(|d| *d == n), "extremal job has the wrong dimension");
            }
        }
        for a in &self.assertions {
            if !self.stages.contains(&a.stage()) {
                bail!("assertion {a:?} inspects stage {} which is not requested", a.stage());
            }
        }
        Ok(system)
    }
}
