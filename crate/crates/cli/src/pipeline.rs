//! Stage execution and the run report.
//!
//! Stages run sequentially in dependency order; a failed stage is recorded
//! and the stages depending on its output are skipped, while everything
//! already written stays on disk.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context as _, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use mintime::analysis::{
    holder_fit, lipschitz_field, point_target_field, refinement_study, HolderFit, RefinementReport,
};
use mintime::eikonal::{reachable_mask, solve_min_time, solve_semilagrangian, ValueField};
use mintime::extremals::{
    conservation_residual, integrate_normal_extremal, integrate_singular_extremal, shoot_cc_distance, Extremal,
    ShootingResult,
};
use mintime::fields::{hormander_rank, HormanderReport};
use mintime::geometry::{detect_characteristic_points, petrov_margin, CharRecord, PetrovReport, Region};
use mintime::hamiltonian::{char_fiber, char_point, symplectic_test_with, SymplecticReport};
use mintime::io::{write_extremal, write_json, write_lipschitz_field, write_value_field, MaskFile};
use mintime::{ControlSystem, CotangentPoint, UniformGrid};

use crate::scenario::{Assertion, ExtremalJob, Scenario, Stage};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum StageStatus {
    Ok,
    Failed { error: String },
    Skipped { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: Stage,
    pub status: StageStatus,
    /// Files written by the stage, relative to the output directory.
    pub outputs: Vec<String>,
    pub summary: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssertionResult {
    pub assertion: Assertion,
    pub passed: bool,
    pub detail: String,
}

/// Wall-clock data, kept apart so that the rest of the report is
/// reproducible bit for bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub started_unix: f64,
    pub total_seconds: f64,
    pub stage_seconds: BTreeMap<Stage, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// The resolved scenario, with every default filled in.
    pub scenario: Scenario,
    pub config_hash: String,
    /// Directory name under the output root.
    pub output_dir: String,
    pub stages: Vec<StageReport>,
    pub assertions: Vec<AssertionResult>,
    pub passed: bool,
    pub timing: Timing,
}

impl RunReport {
    pub fn stage(&self, stage: Stage) -> Option<&StageReport> {
        self.stages.iter().find(|s| s.stage == stage)
    }
}

/// SHA-256 of the resolved scenario's canonical JSON, in hex.
pub fn config_hash(scenario: &Scenario) -> String {
    let bytes = serde_json::to_vec(scenario).expect("scenario serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Default)]
struct Context {
    value: Option<ValueField>,
    cross_check: Option<(f64, f64)>,
    records: Option<Vec<CharRecord>>,
    petrov: Option<Vec<(f64, PetrovReport)>>,
    extremals: Option<Vec<JobOutcome>>,
    symplectic: Option<Vec<SymplecticReport>>,
    hormander: Option<Vec<HormanderReport>>,
    refinement: Option<RefinementReport>,
    holder: Option<HolderFit>,
}

enum JobOutcome {
    Extremal(Extremal),
    Shot(ShootingResult),
    Error(String),
}

struct Runner<'a> {
    scenario: &'a Scenario,
    system: ControlSystem,
    grid: UniformGrid,
    dir: PathBuf,
    ctx: Context,
}

type StageOutput = (Vec<String>, Value);

fn tau_tag(tau: f64) -> String {
    format!("{tau:.4}")
}

impl Runner<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn value(&self) -> Result<&ValueField> {
        self.ctx.value.as_ref().context("no value field")
    }

    fn horizon_check(&self, vf: &ValueField) -> Result<()> {
        let horizon = vf.values.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
        for tau in &self.scenario.taus {
            anyhow::ensure!(*tau < horizon, "tau = {tau} is not below the solver horizon {horizon}");
        }
        Ok(())
    }

    fn run_stage(&mut self, stage: Stage) -> Result<StageOutput> {
        let s = self.scenario;
        let tol = &s.tolerances;
        let h = self.grid.h;
        match stage {
            Stage::Hormander => {
                let reports = s
                    .hormander_points
                    .iter()
                    .map(|x| hormander_rank(&self.system, x, tol.max_depth, tol.rank_tol))
                    .collect::<mintime::Result<Vec<_>>>()?;
                write_json(&self.path("hormander.json"), &reports)?;
                let steps: Vec<Option<usize>> = reports.iter().map(|r| r.step).collect();
                self.ctx.hormander = Some(reports);
                Ok((vec!["hormander.json".into()], json!({ "steps": steps })))
            }
            Stage::Solve => {
                let vf = solve_min_time(&self.system, &s.target, &self.grid, &tol.solver)?;
                write_value_field(&self.path("value-lf"), &vf, &s.target, &tol.solver)?;
                let summary = json!({
                    "converged": vf.converged,
                    "iterations": vf.iterations,
                    "residual": vf.residual,
                    "max_finite_value": vf.values.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max),
                    "warnings": vf.warnings,
                });
                self.ctx.value = Some(vf);
                Ok((vec!["value-lf.csv".into(), "value-lf.json".into()], summary))
            }
            Stage::CrossCheck => {
                let sl = solve_semilagrangian(&self.system, &s.target, &self.grid, &tol.solver)?;
                write_value_field(&self.path("value-sl"), &sl, &s.target, &tol.solver)?;
                let lf = self.value()?;
                let t_max = tol.cross_check_t_max;
                let mut sup: f64 = 0.0;
                let mut cells = 0usize;
                for (a, b) in lf.values.iter().zip(&sl.values) {
                    if *a <= t_max || *b <= t_max {
                        sup = sup.max((a - b).abs());
                        cells += 1;
                    }
                }
                let bound = tol.cross_check_h * h;
                self.ctx.cross_check = Some((sup, bound));
                Ok((
                    vec!["value-sl.csv".into(), "value-sl.json".into()],
                    json!({ "sup_difference": sup, "bound": bound, "cells": cells, "sl_converged": sl.converged }),
                ))
            }
            Stage::Reachable => {
                let vf = self.value()?;
                self.horizon_check(vf)?;
                let mut outputs = Vec::new();
                let mut counts = Vec::new();
                for tau in &s.taus {
                    let mask = reachable_mask(vf, *tau)?;
                    let name = format!("reachable-tau{}.json", tau_tag(*tau));
                    write_json(&self.path(&name), &MaskFile::new(&vf.grid, &mask))?;
                    counts.push(json!({ "tau": tau, "cells": mask.iter().filter(|b| **b).count() }));
                    outputs.push(name);
                }
                Ok((outputs, json!({ "reachable": counts })))
            }
            Stage::Char => {
                let vf = self.value()?;
                self.horizon_check(vf)?;
                let eps = tol.eps_char_h * h;
                let mut outputs = Vec::new();
                let mut counts = Vec::new();
                let mut all = Vec::new();
                for tau in &s.taus {
                    let recs = detect_characteristic_points(&self.system, vf, *tau, eps, &tol.fans)?;
                    let name = format!("char-tau{}.json", tau_tag(*tau));
                    write_json(&self.path(&name), &recs)?;
                    counts.push(json!({ "tau": tau, "records": recs.len() }));
                    outputs.push(name);
                    all.extend(recs);
                }
                self.ctx.records = Some(all);
                Ok((outputs, json!({ "eps_char": eps, "records": counts })))
            }
            Stage::Petrov => {
                let vf = self.value()?;
                self.horizon_check(vf)?;
                let regions = if s.petrov_regions.is_empty() {
                    vec![Region::All]
                } else {
                    s.petrov_regions.clone()
                };
                let mut reports = Vec::new();
                for tau in &s.taus {
                    for region in &regions {
                        reports.push((*tau, petrov_margin(&self.system, vf, *tau, region, &tol.fans)?));
                    }
                }
                let rows: Vec<Value> = reports
                    .iter()
                    .map(|(tau, r)| json!({ "tau": tau, "report": r }))
                    .collect();
                write_json(&self.path("petrov.json"), &rows)?;
                let mus: Vec<Value> = reports
                    .iter()
                    .map(|(tau, r)| json!({ "tau": tau, "region": r.region, "mu": r.mu, "cells": r.cells }))
                    .collect();
                self.ctx.petrov = Some(reports);
                Ok((vec!["petrov.json".into()], json!({ "margins": mus })))
            }
            Stage::Extremals => {
                let mut outputs = Vec::new();
                let mut rows = Vec::new();
                let mut outcomes = Vec::new();
                for (i, job) in s.extremals.iter().enumerate() {
                    let outcome = match job {
                        ExtremalJob::Normal { x0, p0, duration, dt } => {
                            integrate_normal_extremal(&self.system, x0, p0, *duration, *dt).map(JobOutcome::Extremal)
                        }
                        ExtremalJob::Singular { x0, p0, duration, dt } => integrate_singular_extremal(
                            &self.system,
                            &CotangentPoint::new(x0.clone(), p0.clone()),
                            *duration,
                            *dt,
                        )
                        .map(JobOutcome::Extremal),
                        ExtremalJob::Shoot { start, goal } => {
                            shoot_cc_distance(&self.system, start, goal, &tol.shoot).map(JobOutcome::Shot)
                        }
                    }
                    .unwrap_or_else(|e| JobOutcome::Error(e.to_string()));
                    let row = match &outcome {
                        JobOutcome::Extremal(ext) => {
                            let name = format!("extremal-{i:02}.csv");
                            write_extremal(&self.path(&name), ext)?;
                            outputs.push(name.clone());
                            json!({
                                "job": i,
                                "kind": ext.kind,
                                "status": ext.status,
                                "samples": ext.samples.len(),
                                "conservation_residual": conservation_residual(ext).ok(),
                                "file": name,
                            })
                        }
                        JobOutcome::Shot(r) => {
                            let name = format!("shoot-{i:02}.json");
                            write_json(&self.path(&name), r)?;
                            outputs.push(name.clone());
                            json!({
                                "job": i, "kind": "shoot", "time": r.time,
                                "endpoint_gap": r.endpoint_gap, "success": r.success, "file": name,
                            })
                        }
                        JobOutcome::Error(e) => json!({ "job": i, "error": e }),
                    };
                    rows.push(row);
                    outcomes.push(outcome);
                }
                let failed: Vec<String> = outcomes
                    .iter()
                    .enumerate()
                    .filter_map(|(i, o)| match o {
                        JobOutcome::Error(e) => Some(format!("job {i}: {e}")),
                        _ => None,
                    })
                    .collect();
                self.ctx.extremals = Some(outcomes);
                anyhow::ensure!(failed.is_empty(), "{}", failed.join("; "));
                Ok((outputs, json!({ "jobs": rows })))
            }
            Stage::SymplecticScan => {
                let scan = s.symplectic_scan.as_ref().context("no symplectic scan block")?;
                let n = self.system.dim();
                let lo = scan.lo.clone().unwrap_or_else(|| s.domain.lo.clone());
                let hi = scan.hi.clone().unwrap_or_else(|| s.domain.hi.clone());
                let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
                let mut reports = Vec::new();
                let mut trivial = 0usize;
                let attempts = 20 * scan.samples;
                for _ in 0..attempts {
                    if reports.len() == scan.samples {
                        break;
                    }
                    let x: Vec<f64> = (0..n)
                        .map(|i| match scan.fixed.get(i).copied().flatten() {
                            Some(v) => v,
                            None => rng.random_range(lo[i]..=hi[i]),
                        })
                        .collect();
                    let k = char_fiber(&self.system, &x)?.len();
                    let coeffs: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..=1.0)).collect();
                    match char_point(&self.system, &x, &coeffs)? {
                        Some(rho) => reports.push(symplectic_test_with(
                            &self.system,
                            &rho,
                            tol.symplectic_tol,
                            tol.tol_char,
                        )?),
                        None => trivial += 1,
                    }
                }
                write_json(&self.path("symplectic.json"), &reports)?;
                let mut verdicts: BTreeMap<String, usize> = BTreeMap::new();
                for r in &reports {
                    *verdicts
                        .entry(json!(r.verdict).as_str().unwrap_or("?").to_string())
                        .or_default() += 1;
                }
                self.ctx.symplectic = Some(reports);
                Ok((
                    vec!["symplectic.json".into()],
                    json!({ "verdicts": verdicts, "trivial_fibres": trivial }),
                ))
            }
            Stage::Lipschitz => {
                let field = lipschitz_field(self.value()?, tol.lipschitz_radius_h * h)?;
                write_lipschitz_field(&self.path("lipschitz.csv"), &field)?;
                let max = field.max();
                Ok((
                    vec!["lipschitz.csv".into()],
                    json!({ "radius": field.radius, "max_quotient": max }),
                ))
            }
            Stage::Refinement => {
                let spec = s.refinement.as_ref().context("no refinement block")?;
                let base = UniformGrid::from_box(&s.domain.lo, &s.domain.hi, spec.base_h)?;
                let rep = refinement_study(&self.system, &s.target, &base, &tol.solver, &spec.options)?;
                write_json(&self.path("refinement.json"), &rep)?;
                write_json(
                    &self.path("refinement-flagged.json"),
                    &MaskFile::new(&rep.coarse_grid, &rep.flagged),
                )?;
                let summary = json!({
                    "spacings": rep.spacings,
                    "flagged_count": rep.flagged_count,
                    "eligible_count": rep.eligible_count,
                    "flagged_fraction": rep.flagged_fraction,
                    "step_fractions": rep.step_fractions,
                    "cauchy_fraction": rep.cauchy_fraction,
                    "flagged_points": rep.flagged_points(),
                });
                self.ctx.refinement = Some(rep);
                Ok((
                    vec!["refinement.json".into(), "refinement-flagged.json".into()],
                    summary,
                ))
            }
            Stage::Holder => {
                let spec = s.holder.as_ref().context("no holder block")?;
                let dist = point_target_field(&self.system, &self.grid, &spec.center, &tol.solver)?;
                let fit = holder_fit(&dist, &spec.center, &spec.options)?;
                write_json(&self.path("holder.json"), &fit)?;
                let summary = json!({
                    "alpha": fit.alpha,
                    "c1": fit.c1,
                    "c2": fit.c2,
                    "balls_bounded": fit.balls.iter().all(|b| b.bounded),
                });
                self.ctx.holder = Some(fit);
                Ok((vec!["holder.json".into()], summary))
            }
        }
    }

    fn check(&self, a: &Assertion) -> (bool, String) {
        let h = self.grid.h;
        let missing = (false, format!("stage {} produced no output", a.stage()));
        match a {
            Assertion::Converged => match &self.ctx.value {
                Some(vf) => (
                    vf.converged,
                    format!("residual {:.3e} after {} sweeps", vf.residual, vf.iterations),
                ),
                None => missing,
            },
            Assertion::CrossCheckAgrees => match self.ctx.cross_check {
                Some((sup, bound)) => (sup <= bound, format!("sup difference {sup:.4e}, bound {bound:.4e}")),
                None => missing,
            },
            Assertion::CharRecordsEmpty => match &self.ctx.records {
                Some(r) => (r.is_empty(), format!("{} records", r.len())),
                None => missing,
            },
            Assertion::CharRecordsInSlab {
                axis,
                center,
                half_width_h,
            } => match &self.ctx.records {
                Some(r) => {
                    let w = half_width_h * h;
                    let worst = r.iter().map(|c| (c.x[*axis] - center).abs()).fold(0.0, f64::max);
                    (
                        worst <= w + 1e-12,
                        format!("{} records, max offset {worst:.4e}, slab {w:.4e}", r.len()),
                    )
                }
                None => missing,
            },
            Assertion::PetrovAtLeast { min } => match &self.ctx.petrov {
                Some(p) => {
                    let mu = p.iter().map(|(_, r)| r.mu).fold(f64::INFINITY, f64::min);
                    (mu >= *min, format!("smallest margin {mu:.4e}"))
                }
                None => missing,
            },
            Assertion::ExtremalsCompleted => match &self.ctx.extremals {
                Some(o) => {
                    let bad: Vec<usize> = o
                        .iter()
                        .enumerate()
                        .filter(|(_, o)| match o {
                            JobOutcome::Extremal(e) => !e.is_completed(),
                            JobOutcome::Shot(r) => !r.success,
                            JobOutcome::Error(_) => true,
                        })
                        .map(|(i, _)| i)
                        .collect();
                    (bad.is_empty(), format!("incomplete jobs {bad:?}"))
                }
                None => missing,
            },
            Assertion::ConservationBelow { max } => match &self.ctx.extremals {
                Some(o) => {
                    let worst = o
                        .iter()
                        .filter_map(|o| match o {
                            JobOutcome::Extremal(e) => conservation_residual(e).ok(),
                            _ => None,
                        })
                        .fold(0.0, f64::max);
                    (worst <= *max, format!("largest residual {worst:.3e}"))
                }
                None => missing,
            },
            Assertion::SymplecticVerdictsAll { verdict } => match &self.ctx.symplectic {
                Some(r) => {
                    let off = r.iter().filter(|r| r.verdict != *verdict).count();
                    (
                        !r.is_empty() && off == 0,
                        format!("{} samples, {off} with another verdict", r.len()),
                    )
                }
                None => missing,
            },
            Assertion::HormanderStepAtMost { step } => match &self.ctx.hormander {
                Some(r) => {
                    let steps: Vec<Option<usize>> = r.iter().map(|r| r.step).collect();
                    let ok = steps.iter().all(|s| s.is_some_and(|s| s <= *step));
                    (ok, format!("steps {steps:?}"))
                }
                None => missing,
            },
            Assertion::FlaggedFractionBelow { max } => match &self.ctx.refinement {
                Some(r) => (
                    r.flagged_fraction < *max,
                    format!("flagged fraction {:.4e}", r.flagged_fraction),
                ),
                None => missing,
            },
            Assertion::FlaggedInSlab {
                axis,
                center,
                half_width_h,
            } => match &self.ctx.refinement {
                Some(r) => {
                    let w = half_width_h * r.spacings[0];
                    let pts = r.flagged_points();
                    let worst = pts.iter().map(|x| (x[*axis] - center).abs()).fold(0.0, f64::max);
                    (
                        worst <= w + 1e-12,
                        format!("{} flagged, max offset {worst:.4e}, slab {w:.4e}", pts.len()),
                    )
                }
                None => missing,
            },
            Assertion::FlaggedFractionDecreasing => match &self.ctx.refinement {
                Some(r) => {
                    let [a, b] = r.step_fractions;
                    (
                        b < a || (a == 0.0 && b == 0.0),
                        format!("step fractions {a:.4e} → {b:.4e}"),
                    )
                }
                None => missing,
            },
            Assertion::HolderAlphaAtLeast { min } => match &self.ctx.holder {
                Some(f) => (f.alpha >= *min, format!("alpha {:.4}", f.alpha)),
                None => missing,
            },
        }
    }
}

fn now_unix() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Validates the scenario; `Err` means the configuration itself is unusable.
pub fn prepare(scenario: &Scenario) -> Result<(ControlSystem, UniformGrid)> {
    let system = scenario.validate()?;
    Ok((system, scenario.grid()?))
}

/// Runs every stage of a validated scenario under `out_root` and writes
/// `report.json` into the scenario's output directory.
pub fn run_scenario(scenario: &Scenario, out_root: &Path) -> Result<(RunReport, PathBuf)> {
    let (system, grid) = prepare(scenario)?;
    let hash = config_hash(scenario);
    let dir_name = format!("{}-{}", scenario.name, &hash[..12]);
    let dir = out_root.join(&dir_name);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;

    let started = now_unix();
    let clock = Instant::now();
    let mut runner = Runner {
        scenario,
        system,
        grid,
        dir: dir.clone(),
        ctx: Context::default(),
    };
    let mut stages = Vec::new();
    let mut stage_seconds = BTreeMap::new();
    let mut solve_ok = true;
    for &stage in &scenario.stages {
        let t0 = Instant::now();
        let (status, outputs, summary) = if stage.needs_value_field() && !solve_ok {
            (
                StageStatus::Skipped {
                    reason: "solve stage failed".into(),
                },
                Vec::new(),
                Value::Null,
            )
        } else {
            match runner.run_stage(stage) {
                Ok((outputs, summary)) => (StageStatus::Ok, outputs, summary),
                Err(e) => {
                    if stage == Stage::Solve {
                        solve_ok = false;
                    }
                    (
                        StageStatus::Failed {
                            error: format!("{e:#}"),
                        },
                        Vec::new(),
                        Value::Null,
                    )
                }
            }
        };
        stage_seconds.insert(stage, t0.elapsed().as_secs_f64());
        stages.push(StageReport {
            stage,
            status,
            outputs,
            summary,
        });
    }
    let assertions: Vec<AssertionResult> = scenario
        .assertions
        .iter()
        .map(|a| {
            let (passed, detail) = runner.check(a);
            AssertionResult {
                assertion: a.clone(),
                passed,
                detail,
            }
        })
        .collect();
    let passed = stages.iter().all(|s| s.status == StageStatus::Ok) && assertions.iter().all(|a| a.passed);
    let report = RunReport {
        scenario: scenario.clone(),
        config_hash: hash,
        output_dir: dir_name,
        stages,
        assertions,
        passed,
        timing: Timing {
            started_unix: started,
            total_seconds: clock.elapsed().as_secs_f64(),
            stage_seconds,
        },
    };
    write_json(&dir.join("report.json"), &report)?;
    Ok((report, dir))
}
