//! Grid solvers for the minimum time function `T_K`, the viscosity solution
//! of `Σ_i (∇v·f_i)² = 1` outside `K` with `v = 0` on `K`.
//!
//! Two independent discretizations are provided:
//!
//! * [`solve_min_time`]: Lax–Friedrichs fast sweeping. Gauss–Seidel passes
//!   over all `2ⁿ` axis orderings with a local artificial viscosity bounding
//!   `|∂H/∂p_j|`, monotone (non-increasing) updates, and a constant closure
//!   on the domain faces.
//! * [`solve_semilagrangian`]: dynamic-programming value iteration
//!   `T(x) = min_u {Δ + T(x + Δ f(x)u)}` over a discretized unit sphere of
//!   controls, with multilinear interpolation and the local step `Δ` chosen
//!   so that the foot point lies exactly one cell away.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};
use crate::fields::{hormander_rank, ControlSystem, DEFAULT_MAX_DEPTH, DEFAULT_RANK_TOL};
use crate::grid::{GridSet, TargetSet, UniformGrid};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    /// Sweeps stop once the largest update of a sweep falls below this.
    pub tol_converge: f64,
    pub max_sweeps: usize,
    /// Floor of the Lax–Friedrichs viscosity coefficients.
    pub c_min: f64,
    /// Number of control directions for the semi-Lagrangian scheme.
    pub n_controls: usize,
    /// Fail instead of returning an unconverged field.
    pub require_convergence: bool,
    pub viscosity: Viscosity,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol_converge: 1e-9,
            max_sweeps: 20_000,
            c_min: 0.05,
            n_controls: 32,
            require_convergence: false,
            viscosity: Viscosity::Local,
        }
    }
}

/// How the Lax–Friedrichs coefficients `σ_j ≥ |∂H/∂p_j|` are bounded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Viscosity {
    /// `σ_j = max |f_·j|` over the cell and its face neighbors: a bound valid
    /// for every covector, hence unconditionally monotone but diffusive where
    /// a field has a large component that the actual gradient does not see.
    Field,
    /// After converging with [`Viscosity::Field`], continue sweeping with
    /// `σ_j = max |∂H/∂p_j(y, p)|` over the cell and its face neighbors `y`,
    /// at the centered-difference gradient `p` of the cell. Much less
    /// diffusive across valleys of `T` in directions the gradient barely
    /// moves along (e.g. the vertical direction of the Heisenberg group).
    Local,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    LaxFriedrichs,
    SemiLagrangian,
}

/// Minimum-time values on a grid.
#[derive(Clone, Debug)]
pub struct ValueField {
    pub grid: UniformGrid,
    pub values: Vec<f64>,
    pub target: Vec<bool>,
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
    pub scheme: Scheme,
    pub warnings: Vec<String>,
}

impl ValueField {
    /// Multilinear interpolation of the values at `x`.
    pub fn value_at(&self, x: &[f64]) -> f64 {
        self.grid.interpolate(&self.values, x)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// The reachable set `{T ≤ τ}` with its sub-cell level function `T − τ`.
    pub fn sublevel(&self, tau: f64) -> GridSet {
        let level = self.values.iter().map(|v| v - tau).collect();
        GridSet::from_level(self.grid.clone(), level)
    }

    /// Value of `T` on the common nodes of a coarser grid covering the same box.
    pub fn restrict_to(&self, coarse: &UniformGrid) -> Result<Vec<f64>> {
        let ratio = coarse.h / self.grid.h;
        let r = ratio.round();
        if (ratio - r).abs() > 1e-9 || r < 1.0 || coarse.origin != self.grid.origin {
            return Err(invalid!("grid is not a refinement of the coarse grid"));
        }
        let r = r as usize;
        Ok((0..coarse.len())
            .map(|i| {
                let c = coarse.coords(i);
                let mut f = [0; 3];
                for a in 0..coarse.dim() {
                    f[a] = c[a] * r;
                }
                self.values[self.grid.index(&f)]
            })
            .collect())
    }
}

/// `{T ≤ τ}` as a boolean mask.
pub fn reachable_mask(vf: &ValueField, tau: f64) -> Result<Vec<bool>> {
    if !vf.converged {
        return Err(invalid!("value field did not converge"));
    }
    if !(tau >= 0.0) {
        return Err(invalid!("τ must be nonnegative, got {tau}"));
    }
    Ok(vf.values.iter().zip(&vf.target).map(|(v, t)| *t || *v <= tau).collect())
}

/// Per-cell data shared by both schemes.
struct Setup {
    n: usize,
    m: usize,
    /// Row-major `m × n` frame per cell.
    frame: Vec<f64>,
    values: Vec<f64>,
    target: Vec<bool>,
    sentinel: f64,
    warnings: Vec<String>,
}

fn setup(system: &ControlSystem, target: &GridSet, opts: &SolveOptions) -> Result<Setup> {
    let grid = &target.grid;
    check_dim(grid.dim(), system.dim())?;
    if !(opts.c_min > 0.0) {
        return Err(invalid!("c_min must be positive"));
    }
    if !(opts.tol_converge > 0.0) {
        return Err(invalid!("tol_converge must be positive"));
    }
    if target.count() == 0 {
        return Err(Error::EmptyTarget);
    }
    let n = grid.dim();
    let m = system.num_fields();
    let mut frame = vec![0.0; grid.len() * m * n];
    for (i, chunk) in frame.chunks_mut(m * n).enumerate() {
        system.frame_into(&grid.point(i), chunk);
    }

    let mut warnings = Vec::new();
    let samples = [0.0, 0.5, 1.0];
    for s in samples.iter().flat_map(|a| samples.iter().map(move |b| (*a, *b))) {
        let mut c = [0; 3];
        for a in 0..n {
            let t = if a == 0 { s.0 } else { s.1 };
            c[a] = ((grid.cells[a] - 1) as f64 * t) as usize;
        }
        let x = grid.point_of(&c);
        let rep = hormander_rank(system, &x, DEFAULT_MAX_DEPTH, DEFAULT_RANK_TOL)?;
        if rep.rank < n {
            warnings.push(format!(
                "bracket generating condition fails at {x:?} (rank {} < {n})",
                rep.rank
            ));
        }
    }

    let sentinel = 10.0 * grid.diameter() / opts.c_min;
    let values = target.inside.iter().map(|&t| if t { 0.0 } else { sentinel }).collect();
    Ok(Setup {
        n,
        m,
        frame,
        values,
        target: target.inside.clone(),
        sentinel,
        warnings,
    })
}

/// Sweep index at which each node last decreased; `NEVER` if it has not.
const NEVER: usize = usize::MAX;

fn changed_since(stamp: usize, sweep: usize) -> bool {
    stamp != NEVER && stamp + 1 >= sweep
}

/// Whether any node in the `3ⁿ` box around `i` changed during the current
/// or the previous sweep. A node whose dependencies are all older than its
/// own last update would recompute (nearly) the same value, so it can be
/// skipped; decreases below the convergence tolerance are not recorded.
fn box_changed(grid: &UniformGrid, stamps: &[usize], i: usize, sweep: usize) -> bool {
    let n = grid.dim();
    let c = grid.coords(i);
    let s = grid.strides();
    let range = |a: usize| {
        let lo = if c[a] > 0 { -1i64 } else { 0 };
        let hi = if c[a] + 1 < grid.cells[a] { 1i64 } else { 0 };
        lo..=hi
    };
    let r2 = if n == 3 { range(2) } else { 0..=0 };
    for d0 in range(0) {
        for d1 in range(1) {
            for d2 in r2.clone() {
                let off = d0 * s[0] as i64 + d1 * s[1] as i64 + d2 * s[2] as i64;
                if changed_since(stamps[(i as i64 + off) as usize], sweep) {
                    return true;
                }
            }
        }
    }
    false
}

/// Visits every node in the axis ordering encoded by `bits` (bit `a` set
/// means axis `a` runs backwards).
fn for_each_ordered(grid: &UniformGrid, bits: usize, mut f: impl FnMut(usize)) {
    let n = grid.dim();
    let c = &grid.cells;
    let (c0, c1, c2) = (c[0], c[1], if n == 3 { c[2] } else { 1 });
    let flip = |b: usize, i: usize, len: usize| if bits >> b & 1 == 1 { len - 1 - i } else { i };
    for i0 in 0..c0 {
        let j0 = flip(0, i0, c0);
        for i1 in 0..c1 {
            let j1 = flip(1, i1, c1);
            for i2 in 0..c2 {
                let j2 = if n == 3 { flip(2, i2, c2) } else { 0 };
                f((j0 * c1 + j1) * c2 + j2);
            }
        }
    }
}

pub fn solve_min_time(
    system: &ControlSystem,
    target: &TargetSet,
    grid: &UniformGrid,
    opts: &SolveOptions,
) -> Result<ValueField> {
    solve_min_time_on(system, &target.realize(grid)?, opts)
}

/// Lax–Friedrichs fast sweeping for a target given as a grid set.
pub fn solve_min_time_on(system: &ControlSystem, target: &GridSet, opts: &SolveOptions) -> Result<ValueField> {
    let grid = &target.grid;
    let Setup {
        n,
        m,
        frame,
        mut values,
        target: tmask,
        warnings,
        ..
    } = setup(system, target, opts)?;
    let h = grid.h;
    let s = grid.strides();
    let len = grid.len();

    // |∂H/∂p_j| ≤ (Σ_i f_ij²)^{1/2}; take the max over the cell and its face
    // neighbors, floored at c_min.
    let mut col_norm = vec![0.0; len * n];
    for i in 0..len {
        let f = &frame[i * m * n..(i + 1) * m * n];
        for j in 0..n {
            col_norm[i * n + j] = (0..m).map(|k| f[k * n + j].powi(2)).sum::<f64>().sqrt();
        }
    }
    let mut sigma = vec![0.0; len * n];
    for i in 0..len {
        for j in 0..n {
            let mut c = col_norm[i * n + j];
            for nb in grid.face_neighbors(i) {
                c = c.max(col_norm[nb * n + j]);
            }
            sigma[i * n + j] = c.max(opts.c_min);
        }
    }
    drop(col_norm);

    // Domain-face nodes have no exterior neighbor and copy the smallest inward
    // neighbor value. Linear extrapolation is more accurate right at the face
    // but decreases in the second inward value, which breaks monotonicity of
    // the scheme (and with it the comparison principle); the interior values
    // are unaffected either way. Nodes are grouped by how many faces they
    // touch, so that edges and corners copy already-updated face values.
    let mut boundary: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 0..len {
        if tmask[i] {
            continue;
        }
        let c = grid.coords(i);
        let mut inward = Vec::new();
        for a in 0..n {
            if c[a] == 0 {
                inward.push(i + s[a]);
            } else if c[a] + 1 == grid.cells[a] {
                inward.push(i - s[a]);
            }
        }
        if !inward.is_empty() {
            boundary.push((i, inward));
        }
    }
    boundary.sort_by_key(|(_, v)| v.len());
    let interior: Vec<bool> = (0..len)
        .map(|i| !tmask[i] && !grid.on_boundary(&grid.coords(i)))
        .collect();

    // Phase one uses the field bound, which makes every update monotone in
    // its neighbors, so the sentinel-initialized iteration cannot undershoot.
    // Phase two restarts the sweeps from that converged field with the
    // tighter local bound.
    let mut sweeps = 0;
    let mut residual = f64::INFINITY;
    let mut sym = vec![0.0; m];
    let mut local = false;
    let mut stamps: Vec<usize> = tmask.iter().map(|&t| if t { 0 } else { NEVER }).collect();
    while sweeps < opts.max_sweeps {
        let bits = sweeps % (1 << n);
        sweeps += 1;
        let mut change: f64 = 0.0;
        for_each_ordered(grid, bits, |i| {
            if !interior[i]
                || !(changed_since(stamps[i], sweeps)
                    || grid.face_neighbors(i).any(|nb| changed_since(stamps[nb], sweeps)))
            {
                return;
            }
            let f = &frame[i * m * n..(i + 1) * m * n];
            let mut p = [0.0; 3];
            for a in 0..n {
                p[a] = (values[i + s[a]] - values[i - s[a]]) / (2.0 * h);
            }
            let mut sg = [0.0; 3];
            sg[..n].copy_from_slice(&sigma[i * n..(i + 1) * n]);
            if local {
                local_viscosity(grid, &frame, i, m, &p[..n], opts.c_min, &mut sg);
            }
            let mut visc = 0.0;
            let mut wsum = 0.0;
            for a in 0..n {
                visc += sg[a] * (values[i + s[a]] + values[i - s[a]]) / (2.0 * h);
                wsum += sg[a] / h;
            }
            for (k, sk) in sym.iter_mut().enumerate() {
                *sk = (0..n).map(|j| f[k * n + j] * p[j]).sum();
            }
            let ham = sym.iter().map(|v| v * v).sum::<f64>().sqrt();
            let candidate = ((1.0 - ham + visc) / wsum).max(0.0);
            let old = values[i];
            if candidate < old {
                values[i] = candidate;
                if old - candidate > opts.tol_converge {
                    stamps[i] = sweeps;
                }
                change = change.max(old - candidate);
            }
        });
        for (i, inward) in &boundary {
            let cand = inward.iter().map(|&a| values[a]).fold(f64::INFINITY, f64::min);
            let old = values[*i];
            if cand < old {
                values[*i] = cand;
                if old - cand > opts.tol_converge {
                    stamps[*i] = sweeps;
                }
                change = change.max(old - cand);
            }
        }
        residual = change;
        if change < opts.tol_converge {
            if local || opts.viscosity == Viscosity::Field {
                break;
            }
            local = true;
            residual = f64::INFINITY;
            // The update rule changed, so every node must be revisited.
            stamps.fill(sweeps + 1);
        }
    }
    finish(
        grid,
        values,
        tmask,
        residual,
        sweeps,
        opts,
        Scheme::LaxFriedrichs,
        warnings,
    )
}

/// Tightens `sg` (on entry the field bound) to the largest `|∂H/∂p_j|` at
/// the covector `p` over the cell and its face neighbors, floored at `c_min`.
fn local_viscosity(grid: &UniformGrid, frame: &[f64], i: usize, m: usize, p: &[f64], c_min: f64, sg: &mut [f64; 3]) {
    let n = grid.dim();
    let pn = p.iter().map(|v| v * v).sum::<f64>().sqrt();
    if pn == 0.0 {
        return;
    }
    let mut best = [0.0f64; 3];
    let mut sym = [0.0; 8];
    for k in std::iter::once(i).chain(grid.face_neighbors(i)) {
        let f = &frame[k * m * n..(k + 1) * m * n];
        let mut hh = 0.0;
        for (r, sr) in sym.iter_mut().enumerate().take(m) {
            *sr = (0..n).map(|j| f[r * n + j] * p[j]).sum();
            hh += *sr * *sr;
        }
        let hh = hh.sqrt();
        if hh <= 1e-9 * pn {
            // ∂H/∂p is undefined on the characteristic cone; keep the field
            // bound.
            return;
        }
        for a in 0..n {
            let d = (0..m).map(|r| f[r * n + a] * sym[r]).sum::<f64>().abs() / hh;
            best[a] = best[a].max(d);
        }
    }
    for a in 0..n {
        sg[a] = sg[a].min(best[a].max(c_min));
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    grid: &UniformGrid,
    values: Vec<f64>,
    target: Vec<bool>,
    residual: f64,
    sweeps: usize,
    opts: &SolveOptions,
    scheme: Scheme,
    warnings: Vec<String>,
) -> Result<ValueField> {
    let converged = residual < opts.tol_converge;
    if !converged && opts.require_convergence {
        return Err(Error::NotConverged { sweeps, residual });
    }
    Ok(ValueField {
        grid: grid.clone(),
        values,
        target,
        converged,
        iterations: sweeps,
        residual,
        scheme,
        warnings,
    })
}

/// Quasi-uniform unit vectors in ℝᵐ.
pub fn control_directions(m: usize, count: usize) -> Vec<Vec<f64>> {
    match m {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        3 => {
            // Fibonacci sphere.
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let th = golden * k as f64;
                    vec![r * th.cos(), r * th.sin(), z]
                })
                .collect()
        }
        _ => {
            // Coordinate directions plus an R_m low-discrepancy fill of the
            // cube, kept when inside the unit ball and projected to the sphere.
            let mut dirs = Vec::with_capacity(count.max(2 * m));
            for i in 0..m {
                for sgn in [1.0, -1.0] {
                    let mut e = vec![0.0; m];
                    e[i] = sgn;
                    dirs.push(e);
                }
            }
            // Generalized golden ratio: the positive root of φ^{m+1} = φ + 1.
            let mut phi = 2.0f64;
            for _ in 0..64 {
                phi = (1.0 + phi).powf(1.0 / (m as f64 + 1.0));
            }
            let alpha: Vec<f64> = (1..=m).map(|i| phi.powi(-(i as i32))).collect();
            let mut k = 0u64;
            while dirs.len() < count {
                k += 1;
                let v: Vec<f64> = alpha.iter().map(|a| 2.0 * (0.5 + a * k as f64).fract() - 1.0).collect();
                let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if nv > 1e-3 && nv <= 1.0 {
                    dirs.push(v.iter().map(|x| x / nv).collect());
                }
            }
            dirs
        }
    }
}

pub fn solve_semilagrangian(
    system: &ControlSystem,
    target: &TargetSet,
    grid: &UniformGrid,
    opts: &SolveOptions,
) -> Result<ValueField> {
    solve_semilagrangian_on(system, &target.realize(grid)?, opts)
}

/// Semi-Lagrangian value iteration for a target given as a grid set.
pub fn solve_semilagrangian_on(system: &ControlSystem, target: &GridSet, opts: &SolveOptions) -> Result<ValueField> {
    if opts.n_controls < 8 {
        return Err(invalid!(
            "control discretization too coarse: n_controls = {} < 8",
            opts.n_controls
        ));
    }
    let grid = &target.grid;
    let Setup {
        n,
        m,
        frame,
        mut values,
        target: tmask,
        sentinel,
        warnings,
    } = setup(system, target, opts)?;
    let h = grid.h;
    let controls = control_directions(m, opts.n_controls);
    let upper = grid.upper();
    let eps = 1e-12 * h;

    let mut stamps: Vec<usize> = tmask.iter().map(|&t| if t { 0 } else { NEVER }).collect();
    let mut sweeps = 0;
    let mut residual = f64::INFINITY;
    let mut x = [0.0; 3];
    let mut foot = [0.0; 3];
    let mut v = [0.0; 3];
    while sweeps < opts.max_sweeps {
        let bits = sweeps % (1 << n);
        sweeps += 1;
        let mut change: f64 = 0.0;
        for_each_ordered(grid, bits, |i| {
            if tmask[i] {
                return;
            }
            if grid.face_neighbors(i).all(|nb| values[nb] >= sentinel) || !box_changed(grid, &stamps, i, sweeps) {
                return;
            }
            let c = grid.coords(i);
            for a in 0..n {
                x[a] = grid.origin[a] + c[a] as f64 * h;
            }
            let f = &frame[i * m * n..(i + 1) * m * n];
            let old = values[i];
            let mut best = old;
            'controls: for u in &controls {
                for a in 0..n {
                    v[a] = (0..m).map(|k| u[k] * f[k * n + a]).sum();
                }
                let speed = v[..n].iter().map(|t| t * t).sum::<f64>().sqrt();
                if speed < 1e-12 {
                    continue;
                }
                let dt = h / speed;
                if dt >= best {
                    continue;
                }
                for a in 0..n {
                    foot[a] = x[a] + v[a] * dt;
                    if foot[a] < grid.origin[a] - eps || foot[a] > upper[a] + eps {
                        continue 'controls;
                    }
                }
                let cand = dt + grid.interpolate(&values, &foot[..n]);
                if cand < best {
                    best = cand;
                }
            }
            if best < old {
                values[i] = best;
                if old - best > opts.tol_converge {
                    stamps[i] = sweeps;
                }
                change = change.max(old - best);
            }
        });
        residual = change;
        if change < opts.tol_converge {
            break;
        }
    }
    finish(
        grid,
        values,
        tmask,
        residual,
        sweeps,
        opts,
        Scheme::SemiLagrangian,
        warnings,
    )
}
