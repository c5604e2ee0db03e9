//! Pontryagin extremals of the time-optimal problem.
//!
//! Along an extremal the state and costate follow the broken Hamiltonian
//! system
//!
//! ```text
//! y' = Σ u_j f_j(y),    p' = −Σ u_j Df_j(y)ᵀ p.
//! ```
//!
//! *Normal* extremals use the maximizing control `u = (f_j·p)_j / H`, which
//! keeps `H` constant. *Singular* extremals live in the characteristic set
//! (`H ≡ 0`); there the control must keep every symbol at zero, which to first
//! order means `u ∈ ker B` with `B_ij = [f_i,f_j]·p`. When `B` vanishes
//! identically the second-order rows `[f_j,[f_i,f_k]]·p` decide.
//!
//! All integrators are fixed-step classical RK4, so that conservation
//! residuals scale cleanly with `dt⁴`.

use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};
use crate::fields::ControlSystem;
use crate::grid::TargetSet;
use crate::hamiltonian::{constraint_jacobian, hamiltonian_raw, poisson_raw, symbols_raw, CotangentPoint};
use crate::linalg::{self, dist, dot, matrix_from_rows, norm};

/// Threshold separating normal from characteristic covectors.
pub const EPS_H: f64 = 1e-8;
pub const DEFAULT_DT: f64 = 1e-3;
/// Singular arcs are pulled back onto the characteristic set this often.
pub const REPROJECT_EVERY: usize = 50;
pub const REPROJECT_TOL: f64 = 1e-12;
/// Controls may exceed the unit ball by this much before being rejected.
pub const CONTROL_SLACK: f64 = 1e-12;
/// Absolute singular-value cutoff when computing admissible singular controls
/// (covectors are unit length at the seed).
pub const KERNEL_TOL: f64 = 1e-8;

pub const TRIVIAL_KERNEL: &str = "trivial kernel — symplectic point";
pub const NOT_CLEAN: &str = "non-clean constraint Jacobian";
pub const KERNEL_UNDETERMINED: &str = "singular control undetermined at second order";
pub const LEFT_CHAR: &str = "left the characteristic set";
pub const REACHED_CHAR: &str = "Hamiltonian fell below the normal threshold";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub y: Vec<f64>,
    pub p: Vec<f64>,
    pub u: Vec<f64>,
    /// `H(y, p)` at this sample.
    pub h: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremalKind {
    Normal,
    Singular,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "state")]
pub enum Status {
    Completed,
    Aborted { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extremal {
    pub kind: ExtremalKind,
    pub h0: f64,
    pub max_h_drift: f64,
    pub status: Status,
    pub samples: Vec<Sample>,
}

impl Extremal {
    fn new(kind: ExtremalKind, h0: f64) -> Self {
        Self {
            kind,
            h0,
            max_h_drift: 0.0,
            status: Status::Completed,
            samples: Vec::new(),
        }
    }

    fn push(&mut self, sample: Sample) {
        self.max_h_drift = self.max_h_drift.max((sample.h - self.h0).abs());
        self.samples.push(sample);
    }

    fn abort(mut self, reason: &str) -> Self {
        self.status = Status::Aborted {
            reason: reason.to_string(),
        };
        self
    }

    pub fn is_completed(&self) -> bool {
        self.status == Status::Completed
    }

    pub fn abort_reason(&self) -> Option<&str> {
        match &self.status {
            Status::Aborted { reason } => Some(reason),
            Status::Completed => None,
        }
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }
}

/// Step count and final step length covering `[0, duration]` with step `dt`.
fn schedule(duration: f64, dt: f64) -> Result<(usize, f64)> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid!("time step must be positive, got {dt}"));
    }
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(invalid!("duration must be nonnegative, got {duration}"));
    }
    let steps = (duration / dt - 1e-9).ceil().max(0.0) as usize;
    if steps > 100_000_000 {
        return Err(invalid!("step underflow: {steps} steps of {dt}"));
    }
    let last = if steps == 0 {
        0.0
    } else {
        duration - (steps - 1) as f64 * dt
    };
    Ok((steps, last))
}

/// One classical RK4 step of `z' = rhs(z)`; the right-hand side may refuse
/// a stage by returning an abort reason.
fn rk4<F>(z: &[f64], dt: f64, mut rhs: F) -> std::result::Result<Vec<f64>, &'static str>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> std::result::Result<(), &'static str>,
{
    let d = z.len();
    let mut k1 = vec![0.0; d];
    let mut k2 = vec![0.0; d];
    let mut k3 = vec![0.0; d];
    let mut k4 = vec![0.0; d];
    let mut tmp = vec![0.0; d];
    rhs(0.0, z, &mut k1)?;
    for i in 0..d {
        tmp[i] = z[i] + 0.5 * dt * k1[i];
    }
    rhs(0.5 * dt, &tmp, &mut k2)?;
    for i in 0..d {
        tmp[i] = z[i] + 0.5 * dt * k2[i];
    }
    rhs(0.5 * dt, &tmp, &mut k3)?;
    for i in 0..d {
        tmp[i] = z[i] + dt * k3[i];
    }
    rhs(dt, &tmp, &mut k4)?;
    Ok((0..d)
        .map(|i| z[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Right-hand side of the broken Hamiltonian system for a fixed control.
fn hamiltonian_flow(system: &ControlSystem, z: &[f64], u: &[f64], out: &mut [f64]) {
    let n = system.dim();
    let (y, p) = z.split_at(n);
    let (dy, dp) = out.split_at_mut(n);
    dy.fill(0.0);
    dp.fill(0.0);
    let mut f = vec![0.0; n];
    let mut jtp = vec![0.0; n];
    for (field, &uj) in system.fields().iter().zip(u) {
        if uj == 0.0 {
            continue;
        }
        field.eval_into(y, &mut f);
        field.jacobian_t_dot(y, p, &mut jtp);
        for k in 0..n {
            dy[k] += uj * f[k];
            dp[k] -= uj * jtp[k];
        }
    }
}

// ---------------------------------------------------------------------------
// Trajectories

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// First time the path enters the target, when one was supplied and hit.
    pub hit_time: Option<f64>,
}

/// Simulates `y' = f(y) u(t)` from `x0` with RK4. With a target, integration
/// stops at the first hit, located by bisection inside the offending step.
pub fn integrate_trajectory<F>(
    system: &ControlSystem,
    x0: &[f64],
    control: F,
    duration: f64,
    dt: f64,
    target: Option<&TargetSet>,
) -> Result<Trajectory>
where
    F: Fn(f64) -> Vec<f64>,
{
    let n = system.dim();
    let m = system.num_fields();
    check_dim(n, x0.len())?;
    let (steps, last) = schedule(duration, dt)?;
    let level = target.map(|t| t.level_function(n)).transpose()?;

    let control_at = |t: f64| -> Result<Vec<f64>> {
        let u = control(t);
        check_dim(m, u.len())?;
        let nu = norm(&u);
        if !(nu <= 1.0 + CONTROL_SLACK) {
            return Err(Error::ControlOutOfBall(nu));
        }
        Ok(u)
    };
    let step = |t: f64, y: &[f64], h: f64| -> Result<Vec<f64>> {
        let mut err = None;
        let out = rk4(y, h, |s, z, out| {
            match control_at(t + s) {
                Ok(u) => system.velocity_into(z, &u, out),
                Err(e) => {
                    err.get_or_insert(e);
                    out.fill(0.0);
                }
            }
            Ok(())
        })
        .expect("trajectory stages never abort");
        match err {
            Some(e) => Err(e),
            None => Ok(out),
        }
    };

    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![x0.to_vec()],
        hit_time: None,
    };
    if let Some(l) = &level {
        if l.contains(x0) {
            traj.hit_time = Some(0.0);
            return Ok(traj);
        }
    }
    let mut t = 0.0;
    let mut y = x0.to_vec();
    for k in 0..steps {
        let h = if k + 1 == steps { last } else { dt };
        let next = step(t, &y, h)?;
        if let Some(l) = &level {
            if l.contains(&next) {
                // Smallest sub-step that lands inside the target.
                let (mut lo, mut hi) = (0.0, h);
                let mut inside = next;
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    let z = step(t, &y, mid)?;
                    if l.contains(&z) {
                        hi = mid;
                        inside = z;
                    } else {
                        lo = mid;
                    }
                }
                traj.times.push(t + hi);
                traj.states.push(inside);
                traj.hit_time = Some(t + hi);
                return Ok(traj);
            }
        }
        t = if k + 1 == steps { duration } else { t + h };
        y = next;
        traj.times.push(t);
        traj.states.push(y.clone());
    }
    Ok(traj)
}

// ---------------------------------------------------------------------------
// Normal extremals

fn normal_control(
    system: &ControlSystem,
    y: &[f64],
    p: &[f64],
    u: &mut [f64],
) -> std::result::Result<f64, &'static str> {
    symbols_raw(system, y, p, u);
    let h = norm(u);
    if !(h >= EPS_H) {
        return Err(REACHED_CHAR);
    }
    u.iter_mut().for_each(|v| *v /= h);
    Ok(h)
}

/// Integrates the normal extremal through `(x0, p0)` for `duration`.
pub fn integrate_normal_extremal(
    system: &ControlSystem,
    x0: &[f64],
    p0: &[f64],
    duration: f64,
    dt: f64,
) -> Result<Extremal> {
    let n = system.dim();
    let m = system.num_fields();
    check_dim(n, x0.len())?;
    check_dim(n, p0.len())?;
    let (steps, last) = schedule(duration, dt)?;
    let h0 = hamiltonian_raw(system, x0, p0);
    if !(h0 > EPS_H) {
        return Err(Error::CharacteristicPoint(h0));
    }

    let mut ext = Extremal::new(ExtremalKind::Normal, h0);
    let mut z: Vec<f64> = x0.iter().chain(p0).copied().collect();
    let mut u = vec![0.0; m];
    let mut t = 0.0;
    let h = normal_control(system, x0, p0, &mut u).expect("checked above");
    ext.push(Sample {
        t,
        y: x0.to_vec(),
        p: p0.to_vec(),
        u: u.clone(),
        h,
    });
    let mut stage_u = vec![0.0; m];
    for k in 0..steps {
        let dt_k = if k + 1 == steps { last } else { dt };
        let next = rk4(&z, dt_k, |_, zz, out| {
            normal_control(system, &zz[..n], &zz[n..], &mut stage_u)?;
            hamiltonian_flow(system, zz, &stage_u, out);
            Ok(())
        });
        z = match next {
            Ok(z) => z,
            Err(reason) => return Ok(ext.abort(reason)),
        };
        t = if k + 1 == steps { duration } else { t + dt_k };
        let h = match normal_control(system, &z[..n], &z[n..], &mut u) {
            Ok(h) => h,
            Err(reason) => return Ok(ext.abort(reason)),
        };
        ext.push(Sample {
            t,
            y: z[..n].to_vec(),
            p: z[n..].to_vec(),
            u: u.clone(),
            h,
        });
    }
    Ok(ext)
}

// ---------------------------------------------------------------------------
// Singular extremals

/// Picks a unit vector of the span of `basis`, as close as possible to
/// `reference`; without a usable reference the largest component is made
/// positive.
fn pick_direction(basis: &[Vec<f64>], reference: Option<&[f64]>) -> Vec<f64> {
    if let Some(r) = reference {
        let mut proj = vec![0.0; r.len()];
        for b in basis {
            let c = dot(b, r);
            proj.iter_mut().zip(b).for_each(|(v, bi)| *v += c * bi);
        }
        let np = norm(&proj);
        if np > 1e-6 {
            return proj.into_iter().map(|v| v / np).collect();
        }
    }
    let mut v = basis[0].clone();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let lead = v
        .iter()
        .copied()
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap_or(0.0);
    if lead < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v
}

/// Unit control keeping all symbols at zero along the flow, or the reason
/// none exists at `(y, p)`.
pub(crate) fn singular_control(
    system: &ControlSystem,
    y: &[f64],
    p: &[f64],
    reference: Option<&[f64]>,
) -> std::result::Result<Vec<f64>, &'static str> {
    let m = system.num_fields();
    let cutoff = KERNEL_TOL * norm(p).max(f64::MIN_POSITIVE);
    let b = poisson_raw(system, y, p);
    let bmat = matrix_from_rows(&b, m);
    let kernel = linalg::kernel_below(&bmat, cutoff);
    if kernel.is_empty() {
        return Err(TRIVIAL_KERNEL);
    }
    if kernel.len() < m {
        return Ok(pick_direction(&kernel, reference));
    }
    // B vanishes: the derivative of every bracket [f_i,f_k]·p along the flow
    // is Σ_j u_j [f_j,[f_i,f_k]]·p, which must vanish too.
    let n = system.dim();
    let mut v = vec![0.0; n];
    let mut rows = Vec::new();
    for i in 0..m {
        for k in (i + 1)..m {
            let row: Vec<f64> = (0..m)
                .map(|j| {
                    system.bracket2(j, i, k).eval_into(y, &mut v);
                    dot(&v, p)
                })
                .collect();
            rows.push(row);
        }
    }
    if rows.iter().flatten().all(|c| c.abs() <= cutoff) {
        return Err(KERNEL_UNDETERMINED);
    }
    let kernel = linalg::kernel_below(&matrix_from_rows(&rows, m), cutoff);
    if kernel.is_empty() {
        return Err(TRIVIAL_KERNEL);
    }
    Ok(pick_direction(&kernel, reference))
}

fn is_clean(system: &ControlSystem, y: &[f64], p: &[f64]) -> bool {
    let rows = constraint_jacobian(system, y, p);
    let a = matrix_from_rows(&rows, 2 * system.dim());
    linalg::numerical_rank(&a, 1e-9) == system.num_fields()
}

/// Newton steps in `p` on `F(y) p = 0` (minimum-norm corrections).
fn project_onto_char(system: &ControlSystem, y: &[f64], p: &mut [f64]) -> f64 {
    let n = system.dim();
    let m = system.num_fields();
    let mut s = vec![0.0; m];
    symbols_raw(system, y, p, &mut s);
    let mut res = norm(&s);
    for _ in 0..5 {
        if res <= REPROJECT_TOL {
            break;
        }
        let frame = system.frame(y).expect("dimension checked");
        let rows: Vec<Vec<f64>> = frame.chunks(n).map(<[f64]>::to_vec).collect();
        let dp = linalg::least_squares(&matrix_from_rows(&rows, n), &s, 1e-12);
        p.iter_mut().zip(&dp).for_each(|(v, d)| *v -= d);
        symbols_raw(system, y, p, &mut s);
        res = norm(&s);
    }
    res
}

/// Integrates a singular extremal from a characteristic seed `ρ0`, whose
/// covector is normalized to unit length first.
///
/// The result is aborted (not an error) when the admissible control set
/// becomes empty — in particular, with [`TRIVIAL_KERNEL`] from any seed at
/// which the characteristic set is symplectic.
pub fn integrate_singular_extremal(
    system: &ControlSystem,
    rho0: &CotangentPoint,
    duration: f64,
    dt: f64,
) -> Result<Extremal> {
    let n = system.dim();
    check_dim(n, rho0.x.len())?;
    check_dim(n, rho0.p.len())?;
    let (steps, last) = schedule(duration, dt)?;
    let rho = rho0.normalized()?;
    let h_seed = hamiltonian_raw(system, &rho.x, &rho.p);
    if !(h_seed < EPS_H) {
        return Err(Error::NotInChar(h_seed));
    }

    let mut ext = Extremal::new(ExtremalKind::Singular, 0.0);
    let (mut y, mut p) = (rho.x.clone(), rho.p.clone());
    let first = Sample {
        t: 0.0,
        y: y.clone(),
        p: p.clone(),
        u: vec![0.0; system.num_fields()],
        h: h_seed,
    };
    if !is_clean(system, &y, &p) {
        ext.push(first);
        return Ok(ext.abort(NOT_CLEAN));
    }
    let mut u = match singular_control(system, &y, &p, None) {
        Ok(u) => u,
        Err(reason) => {
            ext.push(first);
            return Ok(ext.abort(reason));
        }
    };
    ext.push(Sample { u: u.clone(), ..first });

    let mut t = 0.0;
    for k in 0..steps {
        let dt_k = if k + 1 == steps { last } else { dt };
        let z: Vec<f64> = y.iter().chain(&p).copied().collect();
        let reference = u.clone();
        let next = rk4(&z, dt_k, |_, zz, out| {
            let us = singular_control(system, &zz[..n], &zz[n..], Some(&reference))?;
            hamiltonian_flow(system, zz, &us, out);
            Ok(())
        });
        let z = match next {
            Ok(z) => z,
            Err(reason) => return Ok(ext.abort(reason)),
        };
        y.copy_from_slice(&z[..n]);
        p.copy_from_slice(&z[n..]);
        t = if k + 1 == steps { duration } else { t + dt_k };

        let mut h = hamiltonian_raw(system, &y, &p);
        if (k + 1) % REPROJECT_EVERY == 0 || h >= 0.1 * EPS_H {
            h = project_onto_char(system, &y, &mut p);
            if !is_clean(system, &y, &p) {
                return Ok(ext.abort(NOT_CLEAN));
            }
        }
        if !(h < EPS_H) {
            return Ok(ext.abort(LEFT_CHAR));
        }
        u = match singular_control(system, &y, &p, Some(&u)) {
            Ok(u) => u,
            Err(reason) => return Ok(ext.abort(reason)),
        };
        ext.push(Sample {
            t,
            y: y.clone(),
            p: p.clone(),
            u: u.clone(),
            h,
        });
    }
    Ok(ext)
}

/// `max_t |H(y(t),p(t)) − H0|` over a completed extremal.
pub fn conservation_residual(extremal: &Extremal) -> Result<f64> {
    if !extremal.is_completed() {
        return Err(invalid!(
            "conservation residual needs a completed extremal ({})",
            extremal.abort_reason().unwrap_or_default()
        ));
    }
    Ok(extremal
        .samples
        .iter()
        .map(|s| (s.h - extremal.h0).abs())
        .fold(0.0, f64::max))
}

// ---------------------------------------------------------------------------
// Shooting

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShootOptions {
    /// Number of quasi-uniform initial covector directions.
    pub restarts: usize,
    pub t_max: f64,
    /// RK4 step of the shooting integrations; closest approaches are refined
    /// along chords, so this can be coarser than [`DEFAULT_DT`].
    pub dt: f64,
    pub gap_tol: f64,
    /// Nelder–Mead iterations per restart.
    pub max_iters: u64,
    pub seed: u64,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self {
            restarts: 24,
            t_max: 3.0,
            dt: 4e-3,
            gap_tol: 1e-3,
            max_iters: 100,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShootingResult {
    pub start: Vec<f64>,
    pub goal: Vec<f64>,
    /// Initial covector, normalized so that `H(start, best_p0) = 1`.
    pub best_p0: Vec<f64>,
    pub time: f64,
    pub endpoint_gap: f64,
    pub restarts_used: usize,
    /// Whether `endpoint_gap ≤ gap_tol`.
    pub success: bool,
}

/// Unit vector from spherical angles: `(cos a, sin a)` in the plane,
/// `(cos a cos b, sin a cos b, sin b)` in space.
fn direction(n: usize, angles: &[f64]) -> Vec<f64> {
    match n {
        2 => vec![angles[0].cos(), angles[0].sin()],
        _ => {
            let (a, b) = (angles[0], angles[1]);
            vec![a.cos() * b.cos(), a.sin() * b.cos(), b.sin()]
        }
    }
}

/// Closest approach of the normal extremal to `goal`: `(gap, time)`.
fn closest_approach(
    system: &ControlSystem,
    start: &[f64],
    p0: &[f64],
    goal: &[f64],
    opts: &ShootOptions,
) -> (f64, f64) {
    let n = system.dim();
    let m = system.num_fields();
    let (steps, last) = schedule(opts.t_max, opts.dt).expect("validated options");
    let mut z: Vec<f64> = start.iter().chain(p0).copied().collect();
    let mut stage_u = vec![0.0; m];
    let mut best = (dist(start, goal), 0.0);
    let mut t = 0.0;
    for k in 0..steps {
        let h = if k + 1 == steps { last } else { opts.dt };
        let next = match rk4(&z, h, |_, zz, out| {
            normal_control(system, &zz[..n], &zz[n..], &mut stage_u)?;
            hamiltonian_flow(system, zz, &stage_u, out);
            Ok(())
        }) {
            Ok(next) => next,
            Err(_) => break,
        };
        // Closest point of the chord between consecutive samples.
        let (a, b) = (&z[..n], &next[..n]);
        let d: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
        let w: Vec<f64> = goal.iter().zip(a).map(|(x, y)| x - y).collect();
        let dd = dot(&d, &d);
        let s = if dd > 0.0 {
            (dot(&w, &d) / dd).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let gap = w
            .iter()
            .zip(&d)
            .map(|(wi, di)| (wi - s * di).powi(2))
            .sum::<f64>()
            .sqrt();
        if gap < best.0 {
            best = (gap, t + s * h);
        }
        z = next;
        t += h;
    }
    best
}

struct GapCost<'a> {
    system: &'a ControlSystem,
    start: &'a [f64],
    goal: &'a [f64],
    opts: &'a ShootOptions,
}

impl GapCost<'_> {
    /// `(gap, time, p0)` for the given angles.
    fn evaluate(&self, angles: &[f64]) -> (f64, f64, Vec<f64>) {
        let q = direction(self.system.dim(), angles);
        let h = hamiltonian_raw(self.system, self.start, &q);
        if !(h > EPS_H) {
            return (f64::INFINITY, 0.0, q);
        }
        let p0: Vec<f64> = q.iter().map(|v| v / h).collect();
        let (gap, time) = closest_approach(self.system, self.start, &p0, self.goal, self.opts);
        (gap, time, p0)
    }
}

impl CostFunction for GapCost<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, angles: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        let gap = self.evaluate(angles).0;
        Ok(if gap.is_finite() { gap } else { 1e6 })
    }
}

/// Quasi-uniform initial angles, rotated by a seeded random offset.
fn seed_angles(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset: f64 = rng.random::<f64>();
    let tau = std::f64::consts::TAU;
    match n {
        2 => (0..count)
            .map(|k| vec![tau * (k as f64 + offset) / count as f64])
            .collect(),
        _ => {
            let golden = (1.0 + 5f64.sqrt()) / 2.0;
            (0..count)
                .map(|k| {
                    let zc = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                    let a = tau * ((k as f64 / golden + offset).fract());
                    vec![a, zc.clamp(-1.0, 1.0).asin()]
                })
                .collect()
        }
    }
}

/// Multi-start shooting for the sub-Riemannian distance `d(start, goal)`.
///
/// Each restart refines its initial direction with Nelder–Mead on the
/// closest-approach gap. Among restarts that meet `gap_tol` the shortest time
/// wins; otherwise the smallest gap is reported with `success = false`.
pub fn shoot_cc_distance(
    system: &ControlSystem,
    start: &[f64],
    goal: &[f64],
    opts: &ShootOptions,
) -> Result<ShootingResult> {
    let n = system.dim();
    check_dim(n, start.len())?;
    check_dim(n, goal.len())?;
    if !(2..=3).contains(&n) {
        return Err(invalid!("shooting supports n = 2 or 3, got {n}"));
    }
    if dist(start, goal) == 0.0 {
        return Err(invalid!("start and goal coincide"));
    }
    if opts.restarts == 0 || !(opts.gap_tol > 0.0) || !(opts.t_max > 0.0) {
        return Err(invalid!("shooting needs restarts ≥ 1, gap_tol > 0 and t_max > 0"));
    }
    schedule(opts.t_max, opts.dt)?;

    let seeds = seed_angles(n, opts.restarts, opts.seed);
    let candidates: Vec<(f64, f64, Vec<f64>)> = seeds
        .par_iter()
        .map(|a0| {
            let cost = GapCost {
                system,
                start,
                goal,
                opts,
            };
            let mut simplex = vec![a0.clone()];
            for d in 0..a0.len() {
                let mut v = a0.clone();
                v[d] += 0.15;
                simplex.push(v);
            }
            let refined = NelderMead::new(simplex)
                .with_sd_tolerance(1e-10)
                .ok()
                .and_then(|solver| {
                    Executor::new(
                        GapCost {
                            system,
                            start,
                            goal,
                            opts,
                        },
                        solver,
                    )
                    .configure(|state| state.max_iters(opts.max_iters))
                    .run()
                    .ok()
                })
                .and_then(|res| res.state.best_param.clone())
                .unwrap_or_else(|| a0.clone());
            let (g0, t0, p0) = cost.evaluate(a0);
            let (g1, t1, p1) = cost.evaluate(&refined);
            if g1 <= g0 {
                (g1, t1, p1)
            } else {
                (g0, t0, p0)
            }
        })
        .collect();

    let better = |a: &(f64, f64, Vec<f64>), b: &(f64, f64, Vec<f64>)| -> bool {
        let (sa, sb) = (a.0 <= opts.gap_tol, b.0 <= opts.gap_tol);
        match (sa, sb) {
            (true, true) => a.1 < b.1,
            (true, false) => true,
            (false, true) => false,
            (false, false) => a.0 < b.0,
        }
    };
    let mut best = &candidates[0];
    for c in &candidates[1..] {
        if better(c, best) {
            best = c;
        }
    }
    Ok(ShootingResult {
        start: start.to_vec(),
        goal: goal.to_vec(),
        best_p0: best.2.clone(),
        time: best.1,
        endpoint_gap: best.0,
        restarts_used: candidates.len(),
        success: best.0 <= opts.gap_tol,
    })
}
