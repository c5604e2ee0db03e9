//! Regularity diagnostics for computed minimum time functions.
//!
//! A function is locally Lipschitz near `x` exactly when its difference
//! quotients stay bounded as the sampling scale shrinks. On a grid this is
//! tested by *growth under refinement*: a node whose difference quotient over
//! a fixed physical radius keeps growing by a factor `≥ γ` each time `h` is
//! halved is flagged as a candidate point of the Lipschitz singular support.
//!
//! The module also fits Hölder exponents `T(x) ≈ C|x − c|^α` of point-target
//! distance fields, the numerical counterpart of the ball–box estimate
//! `C₁|x − y| ≤ d(x, y) ≤ C₂|x − y|^α`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eikonal::{solve_min_time, solve_semilagrangian_on, SolveOptions, ValueField};
use crate::error::{check_dim, invalid, Result};
use crate::fields::ControlSystem;
use crate::geometry::Region;
use crate::grid::{mask_to_runs, Coords, GridSet, TargetSet, UniformGrid};
use crate::linalg::{dist, norm};

pub const DEFAULT_GAMMA: f64 = 1.4;
/// Hölder fits ignore radii below this many grid spacings.
pub const HOLDER_MIN_RADIUS_H: f64 = 5.0;

/// Integer offsets `o ≠ 0` with `|o| h ≤ r`.
fn ball_offsets(n: usize, cells: f64) -> Vec<([i64; 3], f64)> {
    let k = (cells + 1e-9).floor() as i64;
    let mut out = Vec::new();
    let range = |active: bool| if active { -k..=k } else { 0..=0 };
    for a in range(true) {
        for b in range(n >= 2) {
            for c in range(n >= 3) {
                let len = ((a * a + b * b + c * c) as f64).sqrt();
                if len > 0.0 && len <= cells + 1e-9 {
                    out.push(([a, b, c], len));
                }
            }
        }
    }
    out
}

fn shifted(grid: &UniformGrid, c: &Coords, o: &[i64; 3]) -> Option<usize> {
    let mut d = [0usize; 3];
    for a in 0..grid.dim() {
        let v = c[a] as i64 + o[a];
        if v < 0 || v >= grid.cells[a] as i64 {
            return None;
        }
        d[a] = v as usize;
    }
    Some(grid.index(&d))
}

/// Max difference quotient of `values` at node `c` over the offsets.
fn quotient_at(grid: &UniformGrid, values: &[f64], c: &Coords, offsets: &[([i64; 3], f64)]) -> f64 {
    let i = grid.index(c);
    let mut best: f64 = 0.0;
    for (o, len) in offsets {
        if let Some(j) = shifted(grid, c, o) {
            best = best.max((values[j] - values[i]).abs() / (len * grid.h));
        }
    }
    best
}

/// Target nodes whose face neighbors all belong to the target.
fn target_interior(vf: &ValueField) -> Vec<bool> {
    (0..vf.grid.len())
        .map(|i| vf.target[i] && vf.grid.face_neighbors(i).all(|j| vf.target[j]))
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LipschitzField {
    pub grid: UniformGrid,
    pub radius: f64,
    /// `None` on target-interior nodes.
    pub quotients: Vec<Option<f64>>,
}

impl LipschitzField {
    pub fn max(&self) -> f64 {
        self.quotients.iter().flatten().copied().fold(0.0, f64::max)
    }

    /// Largest quotient over nodes inside `region`.
    pub fn max_in(&self, region: &Region) -> f64 {
        self.quotients
            .iter()
            .enumerate()
            .filter_map(|(i, q)| q.filter(|_| region.contains(&self.grid.point(i))))
            .fold(0.0, f64::max)
    }
}

fn check_converged(vf: &ValueField) -> Result<()> {
    if vf.converged {
        Ok(())
    } else {
        Err(invalid!("value field did not converge (residual {:e})", vf.residual))
    }
}

/// Per-node difference quotients `max_{0<|y−x|≤r} |T(y) − T(x)| / |y − x|`.
pub fn lipschitz_field(vf: &ValueField, r: f64) -> Result<LipschitzField> {
    check_converged(vf)?;
    let h = vf.grid.h;
    if !(r >= 2.0 * h * (1.0 - 1e-12)) {
        return Err(invalid!("radius {r} is below 2h = {}", 2.0 * h));
    }
    let offsets = ball_offsets(vf.grid.dim(), r / h);
    let omit = target_interior(vf);
    let quotients = (0..vf.grid.len())
        .into_par_iter()
        .map(|i| (!omit[i]).then(|| quotient_at(&vf.grid, &vf.values, &vf.grid.coords(i), &offsets)))
        .collect();
    Ok(LipschitzField {
        grid: vf.grid.clone(),
        radius: r,
        quotients,
    })
}

// ---------------------------------------------------------------------------
// Refinement study

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefinementOptions {
    /// Growth threshold per halving of `h`.
    pub gamma: f64,
    /// Quotient radius in units of the coarse spacing (at least 2).
    pub radius_h: f64,
    /// Optional band whose inside/outside flag counts are reported.
    pub band: Option<Region>,
}

impl Default for RefinementOptions {
    fn default() -> Self {
        Self {
            gamma: DEFAULT_GAMMA,
            radius_h: 2.0,
            band: None,
        }
    }
}

/// Growth of the quotients at one node across the two refinements.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Growth {
    pub first: f64,
    pub second: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BandStats {
    pub band: Region,
    pub flagged_inside: usize,
    pub flagged_outside: usize,
    pub eligible_inside: usize,
    pub eligible_outside: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RefinementReport {
    /// `[h, h/2, h/4]`.
    pub spacings: [f64; 3],
    pub coarse_grid: UniformGrid,
    pub radius: f64,
    pub gamma: f64,
    /// Quotient growth per coarse node; `None` on target-interior nodes and
    /// on the domain faces, whose values come from the solver's closure
    /// rather than from `T_K`.
    pub growth: Vec<Option<Growth>>,
    /// Coarse nodes whose quotient grows by at least `gamma` at both steps.
    pub flagged: Vec<bool>,
    pub flagged_count: usize,
    pub eligible_count: usize,
    /// Flagged share of the eligible coarse nodes.
    pub flagged_fraction: f64,
    /// Flagged volume fraction of each refinement step measured on the
    /// coarser grid of the step with radius `radius_h` times its own spacing:
    /// `[h → h/2, h/2 → h/4]`.
    pub step_fractions: [f64; 2],
    /// Largest quotient at each level over eligible coarse nodes.
    pub max_quotients: [f64; 3],
    /// Share of sampled unflagged nodes whose centered-difference gradients
    /// at `h` and `h/2` agree within 10%.
    pub cauchy_fraction: f64,
    pub cauchy_samples: usize,
    pub band: Option<BandStats>,
    pub iterations: [usize; 3],
}

impl RefinementReport {
    /// The flagged mask for another threshold, from the stored growth factors.
    pub fn flagged_at(&self, gamma: f64) -> Vec<bool> {
        self.growth
            .iter()
            .map(|g| g.is_some_and(|g| g.first >= gamma && g.second >= gamma))
            .collect()
    }

    pub fn flagged_runs(&self) -> Vec<[usize; 2]> {
        mask_to_runs(&self.flagged)
    }

    pub fn flagged_points(&self) -> Vec<Vec<f64>> {
        self.flagged
            .iter()
            .enumerate()
            .filter(|(_, f)| **f)
            .map(|(i, _)| self.coarse_grid.point(i))
            .collect()
    }
}

fn growth_ratio(fine: f64, coarse: f64) -> f64 {
    const TINY: f64 = 1e-12;
    if coarse > TINY {
        fine / coarse
    } else if fine > TINY {
        f64::INFINITY
    } else {
        1.0
    }
}

/// Coordinates on a refined grid of the coarse node `c` (`ratio = 2^k`).
fn embed(c: &Coords, ratio: usize) -> Coords {
    [c[0] * ratio, c[1] * ratio, c[2] * ratio]
}

/// Fraction of eligible nodes of `coarse` whose quotient (radius
/// `radius_h · h_coarse`) grows by `≥ gamma` on `fine`.
fn step_fraction(coarse: &ValueField, fine: &ValueField, radius_h: f64, gamma: f64) -> f64 {
    let omit_c = target_interior(coarse);
    let omit_f = target_interior(fine);
    let off_c = ball_offsets(coarse.grid.dim(), radius_h);
    let off_f = ball_offsets(coarse.grid.dim(), 2.0 * radius_h);
    let (flagged, eligible) = (0..coarse.grid.len())
        .into_par_iter()
        .filter_map(|i| {
            let c = coarse.grid.coords(i);
            let fc = embed(&c, 2);
            let fi = fine.grid.index(&fc);
            if omit_c[i] || omit_f[fi] || coarse.grid.on_boundary(&c) {
                return None;
            }
            let lc = quotient_at(&coarse.grid, &coarse.values, &c, &off_c);
            let lf = quotient_at(&fine.grid, &fine.values, &fc, &off_f);
            Some(usize::from(growth_ratio(lf, lc) >= gamma))
        })
        .fold(|| (0, 0), |(f, e), x| (f + x, e + 1))
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    if eligible == 0 {
        0.0
    } else {
        flagged as f64 / eligible as f64
    }
}

/// Centered-difference gradient at `c` with step `k` cells.
fn centered_gradient(grid: &UniformGrid, values: &[f64], c: &Coords, k: usize) -> Option<Vec<f64>> {
    let s = grid.strides();
    let i = grid.index(c);
    (0..grid.dim())
        .map(|a| {
            (c[a] >= k && c[a] + k < grid.cells[a])
                .then(|| (values[i + k * s[a]] - values[i - k * s[a]]) / (2.0 * k as f64 * grid.h))
        })
        .collect()
}

/// Solves on `base`, `base/2`, `base/4` and flags coarse nodes whose
/// difference quotients keep growing under refinement.
pub fn refinement_study(
    system: &ControlSystem,
    target: &TargetSet,
    base: &UniformGrid,
    solve: &SolveOptions,
    opts: &RefinementOptions,
) -> Result<RefinementReport> {
    if !(opts.gamma > 1.0) {
        return Err(invalid!("growth threshold must exceed 1, got {}", opts.gamma));
    }
    if !(opts.radius_h >= 2.0) {
        return Err(invalid!("quotient radius must be at least 2h, got {}h", opts.radius_h));
    }
    let grids = [base.clone(), base.refined(), base.refined().refined()];
    let mut fields = Vec::with_capacity(3);
    for g in &grids {
        let mut o = solve.clone();
        o.require_convergence = true;
        fields.push(solve_min_time(system, target, g, &o)?);
    }
    let radius = opts.radius_h * base.h;
    let n = base.dim();
    let omit: Vec<Vec<bool>> = fields.iter().map(target_interior).collect();
    let offsets: Vec<_> = (0..3)
        .map(|k| ball_offsets(n, opts.radius_h * (1 << k) as f64))
        .collect();

    let per_node: Vec<Option<([f64; 3], Growth)>> = (0..base.len())
        .into_par_iter()
        .map(|i| {
            let c = base.coords(i);
            if base.on_boundary(&c) {
                return None;
            }
            let mut q = [0.0; 3];
            for k in 0..3 {
                let fc = embed(&c, 1 << k);
                if omit[k][grids[k].index(&fc)] {
                    return None;
                }
                q[k] = quotient_at(&grids[k], &fields[k].values, &fc, &offsets[k]);
            }
            Some((
                q,
                Growth {
                    first: growth_ratio(q[1], q[0]),
                    second: growth_ratio(q[2], q[1]),
                },
            ))
        })
        .collect();

    let growth: Vec<Option<Growth>> = per_node.iter().map(|v| v.map(|(_, g)| g)).collect();
    let flagged: Vec<bool> = growth
        .iter()
        .map(|g| g.is_some_and(|g| g.first >= opts.gamma && g.second >= opts.gamma))
        .collect();
    let eligible_count = growth.iter().filter(|g| g.is_some()).count();
    let flagged_count = flagged.iter().filter(|f| **f).count();
    let mut max_quotients = [0.0f64; 3];
    for (q, _) in per_node.iter().flatten() {
        for k in 0..3 {
            max_quotients[k] = max_quotients[k].max(q[k]);
        }
    }

    let step_fractions = [
        step_fraction(&fields[0], &fields[1], opts.radius_h, opts.gamma),
        step_fraction(&fields[1], &fields[2], opts.radius_h, opts.gamma),
    ];

    // Differentiability shadow: away from the target, the domain faces and the
    // flagged set, centered gradients at h and h/2 should agree. Nodes near
    // the faces are skipped because values there reflect the truncated
    // domain rather than `T_K`.
    let near_target = |i: usize| {
        let c = base.coords(i);
        ball_offsets(n, 2.0)
            .iter()
            .any(|(o, _)| shifted(base, &c, o).is_some_and(|j| fields[0].target[j]))
            || fields[0].target[i]
    };
    let (agree, sampled) = (0..base.len())
        .into_par_iter()
        .filter(|&i| {
            growth[i].is_some() && !flagged[i] && !near_target(i) && base.cells_from_boundary(&base.coords(i)) > 2
        })
        .filter_map(|i| {
            let c = base.coords(i);
            let g0 = centered_gradient(&grids[0], &fields[0].values, &c, 1)?;
            let fc = embed(&c, 2);
            let g1 = centered_gradient(&grids[1], &fields[1].values, &fc, 1)?;
            let diff = dist(&g0, &g1);
            Some(usize::from(diff <= 0.1 * norm(&g0).max(norm(&g1))))
        })
        .fold(|| (0, 0), |(a, s), x| (a + x, s + 1))
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));

    let band = opts.band.as_ref().map(|band| {
        let mut stats = BandStats {
            band: band.clone(),
            flagged_inside: 0,
            flagged_outside: 0,
            eligible_inside: 0,
            eligible_outside: 0,
        };
        for i in 0..base.len() {
            if growth[i].is_none() {
                continue;
            }
            let inside = band.contains(&base.point(i));
            match (inside, flagged[i]) {
                (true, f) => {
                    stats.eligible_inside += 1;
                    stats.flagged_inside += usize::from(f);
                }
                (false, f) => {
                    stats.eligible_outside += 1;
                    stats.flagged_outside += usize::from(f);
                }
            }
        }
        stats
    });

    Ok(RefinementReport {
        spacings: [grids[0].h, grids[1].h, grids[2].h],
        coarse_grid: base.clone(),
        radius,
        gamma: opts.gamma,
        growth,
        flagged,
        flagged_count,
        eligible_count,
        flagged_fraction: if eligible_count == 0 {
            0.0
        } else {
            flagged_count as f64 / eligible_count as f64
        },
        step_fractions,
        max_quotients,
        cauchy_fraction: if sampled == 0 {
            1.0
        } else {
            agree as f64 / sampled as f64
        },
        cauchy_samples: sampled,
        band,
        iterations: [fields[0].iterations, fields[1].iterations, fields[2].iterations],
    })
}

// ---------------------------------------------------------------------------
// Hölder fits

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HolderOptions {
    /// Unit (or not) probe directions from the center.
    pub directions: Vec<Vec<f64>>,
    /// Largest trusted radius; beyond it domain truncation may contaminate `T`.
    pub trust_radius: f64,
    /// Smallest radius in grid spacings.
    pub min_radius_h: f64,
    /// Radii sampled per direction (log-spaced).
    pub samples: usize,
    /// CC-ball radii whose masks are emitted.
    pub ball_radii: Vec<f64>,
}

impl Default for HolderOptions {
    fn default() -> Self {
        Self {
            directions: Vec::new(),
            trust_radius: 0.5,
            min_radius_h: HOLDER_MIN_RADIUS_H,
            samples: 12,
            ball_radii: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionFit {
    pub direction: Vec<f64>,
    /// `(|x − c|, T(x))` pairs used by the regression.
    pub samples: Vec<(f64, f64)>,
    pub alpha: f64,
    /// `C` in `T ≈ C r^α`.
    pub coefficient: f64,
    /// RMS residual of the log–log regression.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CcBall {
    pub radius: f64,
    pub cells: usize,
    /// Members all of whose face neighbors are members.
    pub interior_cells: usize,
    /// Whether the ball stays away from the domain faces.
    pub bounded: bool,
    pub runs: Vec<[usize; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderFit {
    pub center: Vec<f64>,
    pub directions: Vec<DirectionFit>,
    /// Smallest fitted exponent.
    pub alpha: f64,
    /// `min T / r` over all samples.
    pub c1: f64,
    /// `max T / r^α` over all samples.
    pub c2: f64,
    pub balls: Vec<CcBall>,
}

/// Least squares line `y = a + b x`, returning `(a, b, rms)`.
fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let rms = (xs.iter().zip(ys).map(|(x, y)| (y - a - b * x).powi(2)).sum::<f64>() / k).sqrt();
    (a, b, rms)
}

/// The distance `d(center, ·)` on `grid`, with the target snapped to the grid
/// node nearest to `center`.
///
/// This uses the semi-Lagrangian scheme: the Lax–Friedrichs viscosity spreads
/// a one-node source over a few cells, which overestimates `T` by several `h`
/// near the center and visibly biases log–log slopes at small radii.
pub fn point_target_field(
    system: &ControlSystem,
    grid: &UniformGrid,
    center: &[f64],
    opts: &SolveOptions,
) -> Result<ValueField> {
    check_dim(grid.dim(), center.len())?;
    if !grid.contains(center) {
        return Err(invalid!("center {center:?} lies outside the grid"));
    }
    let mut inside = vec![false; grid.len()];
    inside[grid.nearest(center)] = true;
    solve_semilagrangian_on(system, &GridSet::from_mask(grid.clone(), inside), opts)
}

/// The sublevel `{T ≤ R}` of a point-target field as a CC-ball mask.
pub fn cc_ball(vf: &ValueField, radius: f64) -> CcBall {
    let inside: Vec<bool> = vf.values.iter().map(|v| *v <= radius).collect();
    let grid = &vf.grid;
    let interior_cells = (0..grid.len())
        .filter(|&i| inside[i] && grid.face_neighbors(i).all(|j| inside[j]))
        .count();
    let bounded = (0..grid.len()).all(|i| !inside[i] || !grid.on_boundary(&grid.coords(i)));
    CcBall {
        radius,
        cells: inside.iter().filter(|v| **v).count(),
        interior_cells,
        bounded,
        runs: mask_to_runs(&inside),
    }
}

/// Log–log regression of a point-target field along probe directions.
///
/// Radii run log-spaced from `min_radius_h · h` to `trust_radius`; probes
/// leaving the grid are dropped. Each direction needs at least three radii.
pub fn holder_fit(vf: &ValueField, center: &[f64], opts: &HolderOptions) -> Result<HolderFit> {
    check_converged(vf)?;
    let n = vf.grid.dim();
    check_dim(n, center.len())?;
    if opts.directions.is_empty() {
        return Err(invalid!("no probe directions"));
    }
    let r_min = opts.min_radius_h * vf.grid.h;
    if !(opts.trust_radius > r_min) || opts.samples < 3 {
        return Err(invalid!(
            "insufficient radii in the trust region: need trust_radius > {r_min} and ≥ 3 samples"
        ));
    }
    let mut fits = Vec::new();
    for d in &opts.directions {
        check_dim(n, d.len())?;
        let nd = norm(d);
        if nd == 0.0 {
            return Err(invalid!("zero probe direction"));
        }
        let u: Vec<f64> = d.iter().map(|v| v / nd).collect();
        let ratio = (opts.trust_radius / r_min).powf(1.0 / (opts.samples - 1) as f64);
        let samples: Vec<(f64, f64)> = (0..opts.samples)
            .map(|k| r_min * ratio.powi(k as i32))
            .filter_map(|r| {
                let x: Vec<f64> = center.iter().zip(&u).map(|(c, ui)| c + r * ui).collect();
                vf.grid.contains(&x).then(|| (r, vf.value_at(&x)))
            })
            .filter(|(_, t)| *t > 0.0)
            .collect();
        if samples.len() < 3 {
            return Err(invalid!("insufficient radii in the trust region along {u:?}"));
        }
        let xs: Vec<f64> = samples.iter().map(|(r, _)| r.ln()).collect();
        let ys: Vec<f64> = samples.iter().map(|(_, t)| t.ln()).collect();
        let (a, b, rms) = fit_line(&xs, &ys);
        fits.push(DirectionFit {
            direction: u,
            samples,
            alpha: b,
            coefficient: a.exp(),
            residual: rms,
        });
    }
    let alpha = fits.iter().map(|f| f.alpha).fold(f64::INFINITY, f64::min);
    let all = fits.iter().flat_map(|f| f.samples.iter());
    let c1 = all.clone().map(|(r, t)| t / r).fold(f64::INFINITY, f64::min);
    let c2 = all.map(|(r, t)| t / r.powf(alpha)).fold(0.0, f64::max);
    let balls = opts.ball_radii.iter().map(|&r| cc_ball(vf, r)).collect();
    Ok(HolderFit {
        center: center.to_vec(),
        directions: fits,
        alpha,
        c1,
        c2,
        balls,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eikonal::Scheme;

    fn field(grid: UniformGrid, values: Vec<f64>, target: Vec<bool>) -> ValueField {
        ValueField {
            grid,
            values,
            target,
            converged: true,
            iterations: 1,
            residual: 0.0,
            scheme: Scheme::LaxFriedrichs,
            warnings: Vec::new(),
        }
    }

    #[test]
    fn offsets_respect_radius() {
        let o = ball_offsets(2, 2.0);
        assert_eq!(o.len(), 12);
        assert!(o.iter().all(|(_, l)| *l <= 2.0 + 1e-12));
        assert_eq!(ball_offsets(3, 1.0).len(), 6);
    }

    #[test]
    fn linear_function_has_exact_quotient() {
        let g = UniformGrid::cube(2, -1.0, 1.0, 21).unwrap();
        let values: Vec<f64> = (0..g.len()).map(|i| 3.0 * g.point(i)[0] + 1.0).collect();
        let vf = field(g.clone(), values, vec![false; g.len()]);
        let l = lipschitz_field(&vf, 2.0 * g.h).unwrap();
        assert!((l.max() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn small_radius_rejected_and_target_interior_omitted() {
        let g = UniformGrid::cube(2, -1.0, 1.0, 11).unwrap();
        let mut target = vec![false; g.len()];
        for i in 0..g.len() {
            target[i] = g.point(i)[0] <= 0.0;
        }
        let values: Vec<f64> = (0..g.len()).map(|i| g.point(i)[0].max(0.0)).collect();
        let vf = field(g.clone(), values, target);
        assert!(lipschitz_field(&vf, 1.5 * g.h).is_err());
        let l = lipschitz_field(&vf, 2.0 * g.h).unwrap();
        assert!(l.quotients[g.nearest(&[-0.6, 0.0])].is_none());
        assert!(l.quotients[g.nearest(&[0.0, 0.0])].is_some());
    }

    #[test]
    fn regression_recovers_power_law() {
        let xs: Vec<f64> = (1..10).map(|k| (k as f64 * 0.1).ln()).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2f64.ln() + 0.5 * x).collect();
        let (a, b, rms) = fit_line(&xs, &ys);
        assert!((b - 0.5).abs() < 1e-12 && (a.exp() - 2.0).abs() < 1e-12 && rms < 1e-12);
    }

    #[test]
    fn growth_ratio_edge_cases() {
        assert_eq!(growth_ratio(0.0, 0.0), 1.0);
        assert!(growth_ratio(1.0, 0.0).is_infinite());
        assert_eq!(growth_ratio(2.0, 1.0), 2.0);
    }
}
