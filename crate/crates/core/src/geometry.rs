//! Boundaries of grid sets, discrete proximal and limiting normal fans,
//! characteristic points of reachable sets, and Petrov margins.
//!
//! A proximal normal to a closed set `C` at `x` is realized by nearest-point
//! directions: if `x` is the point of `C` closest to an exterior `z`, then
//! `(z − x)/|z − x|` is a proximal normal at `x`. Nearest grid nodes would
//! only produce a handful of lattice directions, so the nearest point is
//! taken on a piecewise-linear reconstruction of the interface `{φ = 0}` of
//! the set's level function (Kuhn triangulation of each grid cube), and the
//! direction is attributed to the boundary cell closest to that point.
//!
//! Limiting fans aggregate the proximal fans of all boundary cells within a
//! radius `r_L`. Characteristic points are boundary cells carrying a
//! limiting normal `η` with `H(x, η) < ε_char`; the Petrov margin of a region
//! is the smallest `H(x, η)` over its boundary cells and fan normals.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eikonal::ValueField;
use crate::error::{check_dim, invalid, Error, Result};
use crate::fields::ControlSystem;
use crate::grid::{Coords, GridSet, UniformGrid};
use crate::hamiltonian::hamiltonian_raw;
use crate::linalg;

/// Fan construction parameters. Lengths are in units of the grid spacing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FanOptions {
    /// Exterior nodes within this distance of the set contribute directions.
    pub band_width_h: f64,
    /// Radius of the neighborhood aggregated into a limiting fan.
    pub r_l_h: f64,
    /// Directions closer than this angle (degrees) are merged.
    pub dedup_deg: f64,
}

impl Default for FanOptions {
    fn default() -> Self {
        Self {
            band_width_h: 6.0,
            r_l_h: 3.0,
            dedup_deg: 5.0,
        }
    }
}

/// Default characteristic threshold `ε_char`, in units of `h`.
pub const DEFAULT_EPS_CHAR_H: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FanSource {
    Proximal,
    Limiting,
}

/// Unit normal directions at a boundary cell, with multiplicities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalFan {
    pub cell: usize,
    pub point: Vec<f64>,
    pub normals: Vec<Vec<f64>>,
    pub weights: Vec<usize>,
    pub source: FanSource,
}

impl NormalFan {
    fn new(grid: &UniformGrid, cell: usize, source: FanSource) -> Self {
        Self {
            cell,
            point: grid.point(cell),
            normals: Vec::new(),
            weights: Vec::new(),
            source,
        }
    }

    /// Adds `v` (unit) unless a stored direction lies within the angle whose
    /// cosine is `cos_tol`, in which case that direction's weight grows.
    fn insert(&mut self, v: &[f64], weight: usize, cos_tol: f64) {
        for (k, w) in self.normals.iter().enumerate() {
            if linalg::dot(w, v) >= cos_tol {
                self.weights[k] += weight;
                return;
            }
        }
        self.normals.push(v.to_vec());
        self.weights.push(weight);
    }

    pub fn is_empty(&self) -> bool {
        self.normals.is_empty()
    }
}

/// A point of `E(τ)`: a boundary cell of the reachable set with a limiting
/// normal nearly annihilated by every field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharRecord {
    pub cell: usize,
    pub x: Vec<f64>,
    pub eta: Vec<f64>,
    pub tau: f64,
    pub residual: f64,
}

/// Cells over which a Petrov margin is taken.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    All,
    /// `|x_axis − center| ≤ half_width`.
    Slab {
        axis: usize,
        center: f64,
        half_width: f64,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
}

impl Region {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::All => true,
            Region::Slab {
                axis,
                center,
                half_width,
            } => x.get(*axis).is_some_and(|v| (v - center).abs() <= *half_width),
            Region::Ball { center, radius } => linalg::dist(x, center) <= *radius,
            Region::Box { lo, hi } => x.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| *a <= *v && *v <= *b),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PetrovReport {
    pub region: Region,
    /// Boundary cells of the reachable set inside the region that carry at
    /// least one normal.
    pub cells: usize,
    pub mu: f64,
    pub argmin_x: Vec<f64>,
    pub argmin_eta: Vec<f64>,
}

/// Member cells with at least one face neighbor outside the set, in
/// increasing index order.
pub fn extract_boundary(set: &GridSet) -> Result<Vec<usize>> {
    let count = set.count();
    if count == 0 {
        return Err(Error::DegenerateMask("empty"));
    }
    if count == set.grid.len() {
        return Err(Error::DegenerateMask("full"));
    }
    let g = &set.grid;
    Ok((0..g.len())
        .filter(|&i| set.inside[i] && g.face_neighbors(i).any(|nb| !set.inside[nb]))
        .collect())
}

/// A piece of the reconstructed interface: a segment in 2D, a triangle in
/// 3D (unused vertices are zero).
#[derive(Clone, Copy, Debug)]
struct Piece {
    verts: [[f64; 3]; 3],
    /// Grid cube (by base node) containing the piece.
    cube: usize,
}

/// Interface pieces grouped by the base node of their cube.
struct Interface {
    /// CSR offsets into `pieces`, one slot per node (only cube base nodes
    /// are populated).
    offsets: Vec<u32>,
    pieces: Vec<Piece>,
}

impl Interface {
    fn build(set: &GridSet) -> Self {
        let g = &set.grid;
        let n = g.dim();
        let s = g.strides();
        let eps = 1e-9 * g.h;
        let inside = |v: f64| v <= eps;
        let perms: &[&[usize]] = if n == 2 {
            &[&[0, 1], &[1, 0]]
        } else {
            &[&[0, 1, 2], &[0, 2, 1], &[1, 0, 2], &[1, 2, 0], &[2, 0, 1], &[2, 1, 0]]
        };
        let mut offsets = vec![0u32; g.len() + 1];
        let mut pieces = Vec::new();
        for base in 0..g.len() {
            offsets[base] = pieces.len() as u32;
            let c = g.coords(base);
            if (0..n).any(|a| c[a] + 1 >= g.cells[a]) {
                continue;
            }
            // Quick reject: all corners on one side.
            let mut n_in = 0;
            for corner in 0..1usize << n {
                let off: usize = (0..n).filter(|a| corner >> a & 1 == 1).map(|a| s[a]).sum();
                n_in += inside(set.level[base + off]) as usize;
            }
            if n_in == 0 || n_in == 1 << n {
                continue;
            }
            let x0 = g.point(base);
            for perm in perms {
                // Simplex vertices: base, then one unit step per axis of perm.
                let mut vc: Vec<([f64; 3], f64)> = Vec::with_capacity(n + 1);
                let mut off = 0;
                let mut pos = [0.0; 3];
                pos[..n].copy_from_slice(&x0);
                vc.push((pos, set.level[base]));
                for &a in perm.iter() {
                    off += s[a];
                    pos[a] += g.h;
                    vc.push((pos, set.level[base + off]));
                }
                let ins: Vec<usize> = (0..=n).filter(|&k| inside(vc[k].1)).collect();
                let outs: Vec<usize> = (0..=n).filter(|&k| !inside(vc[k].1)).collect();
                if ins.is_empty() || outs.is_empty() {
                    continue;
                }
                let cross = |a: usize, b: usize| -> [f64; 3] {
                    let (pa, la) = vc[a];
                    let (pb, lb) = vc[b];
                    let t = if (la - lb).abs() > 0.0 {
                        (la / (la - lb)).clamp(0.0, 1.0)
                    } else {
                        0.5
                    };
                    let mut p = [0.0; 3];
                    for d in 0..3 {
                        p[d] = pa[d] + t * (pb[d] - pa[d]);
                    }
                    p
                };
                if n == 2 {
                    // One vertex separated from the other two.
                    let (lone, pair) = if ins.len() == 1 {
                        (ins[0], &outs)
                    } else {
                        (outs[0], &ins)
                    };
                    pieces.push(Piece {
                        verts: [cross(lone, pair[0]), cross(lone, pair[1]), [0.0; 3]],
                        cube: base,
                    });
                } else if ins.len() == 2 {
                    let (a, b) = (ins[0], ins[1]);
                    let (c2, d) = (outs[0], outs[1]);
                    let q = [cross(a, c2), cross(a, d), cross(b, d), cross(b, c2)];
                    pieces.push(Piece {
                        verts: [q[0], q[1], q[2]],
                        cube: base,
                    });
                    pieces.push(Piece {
                        verts: [q[0], q[2], q[3]],
                        cube: base,
                    });
                } else {
                    let (lone, rest) = if ins.len() == 1 {
                        (ins[0], &outs)
                    } else {
                        (outs[0], &ins)
                    };
                    pieces.push(Piece {
                        verts: [cross(lone, rest[0]), cross(lone, rest[1]), cross(lone, rest[2])],
                        cube: base,
                    });
                }
            }
        }
        offsets[g.len()] = pieces.len() as u32;
        Self { offsets, pieces }
    }

    fn in_cube(&self, base: usize) -> &[Piece] {
        &self.pieces[self.offsets[base] as usize..self.offsets[base + 1] as usize]
    }
}

fn sub3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn lerp3(a: &[f64; 3], d: &[f64; 3], t: f64) -> [f64; 3] {
    [a[0] + t * d[0], a[1] + t * d[1], a[2] + t * d[2]]
}

fn closest_on_segment(p: &[f64; 3], a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    let ab = sub3(b, a);
    let l2 = dot3(&ab, &ab);
    if l2 == 0.0 {
        return *a;
    }
    let t = (dot3(&sub3(p, a), &ab) / l2).clamp(0.0, 1.0);
    lerp3(a, &ab, t)
}

/// Closest point of triangle `abc` to `p` (Voronoi-region walk).
fn closest_on_triangle(p: &[f64; 3], a: &[f64; 3], b: &[f64; 3], c: &[f64; 3]) -> [f64; 3] {
    let ab = sub3(b, a);
    let ac = sub3(c, a);
    let ap = sub3(p, a);
    let d1 = dot3(&ab, &ap);
    let d2 = dot3(&ac, &ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = sub3(p, b);
    let d3 = dot3(&ab, &bp);
    let d4 = dot3(&ac, &bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return lerp3(a, &ab, d1 / (d1 - d3));
    }
    let cp = sub3(p, c);
    let d5 = dot3(&ab, &cp);
    let d6 = dot3(&ac, &cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return lerp3(a, &ac, d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let bc = sub3(c, b);
        return lerp3(b, &bc, (d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = va + vb + vc;
    if denom == 0.0 {
        // Degenerate (collinear) triangle.
        let e1 = closest_on_segment(p, a, b);
        let e2 = closest_on_segment(p, a, c);
        return if dot3(&sub3(p, &e1), &sub3(p, &e1)) <= dot3(&sub3(p, &e2), &sub3(p, &e2)) {
            e1
        } else {
            e2
        };
    }
    let v = vb / denom;
    let w = vc / denom;
    [
        a[0] + ab[0] * v + ac[0] * w,
        a[1] + ab[1] * v + ac[1] * w,
        a[2] + ab[2] * v + ac[2] * w,
    ]
}

/// Indices of nodes whose coordinates differ from `c` by at most `k` along
/// every axis.
fn chebyshev_ball(g: &UniformGrid, c: &Coords, k: usize, mut f: impl FnMut(usize)) {
    let n = g.dim();
    let lo = |a: usize| c[a].saturating_sub(k);
    let hi = |a: usize| (c[a] + k).min(g.cells[a] - 1);
    let (r2lo, r2hi) = if n == 3 { (lo(2), hi(2)) } else { (0, 0) };
    let mut q = [0; 3];
    for i0 in lo(0)..=hi(0) {
        q[0] = i0;
        for i1 in lo(1)..=hi(1) {
            q[1] = i1;
            for i2 in r2lo..=r2hi {
                q[2] = i2;
                f(g.index(&q));
            }
        }
    }
}

/// Proximal normal fans of `set` at its boundary cells (in increasing index
/// order; a fan may be empty where no exterior point projects nearby, e.g.
/// at reentrant corners).
pub fn proximal_normal_fan(set: &GridSet, band_width: f64, dedup_deg: f64) -> Result<Vec<NormalFan>> {
    let g = &set.grid;
    if !(band_width >= 2.0 * g.h - 1e-12) {
        return Err(invalid!(
            "band width {band_width} is below two grid spacings ({})",
            2.0 * g.h
        ));
    }
    let boundary = extract_boundary(set)?;
    let n = g.dim();
    let mut slot = vec![usize::MAX; g.len()];
    for (k, &b) in boundary.iter().enumerate() {
        slot[b] = k;
    }
    let iface = Interface::build(set);
    let k = (band_width / g.h).ceil() as usize;

    // Exterior nodes within Chebyshev distance k of the boundary.
    let mut candidate = vec![false; g.len()];
    for &b in &boundary {
        chebyshev_ball(g, &g.coords(b), k, |j| {
            if !set.inside[j] {
                candidate[j] = true;
            }
        });
    }
    let candidates: Vec<usize> = (0..g.len()).filter(|&j| candidate[j]).collect();

    // For each candidate, its nearest interface point and the boundary cell
    // that point is attributed to.
    let hits: Vec<Option<(usize, [f64; 3])>> = candidates
        .par_iter()
        .map(|&z| {
            let zc = g.coords(z);
            let mut zp = [0.0; 3];
            zp[..n].copy_from_slice(&g.point(z));
            let mut best: Option<(f64, [f64; 3], usize)> = None;
            chebyshev_ball(g, &zc, k + 1, |cube| {
                for piece in iface.in_cube(cube) {
                    let [a, b, c] = &piece.verts;
                    let q = if n == 2 {
                        closest_on_segment(&zp, a, b)
                    } else {
                        closest_on_triangle(&zp, a, b, c)
                    };
                    let d = sub3(&zp, &q);
                    let d2 = dot3(&d, &d);
                    if best.is_none_or(|(bd, _, _)| d2 < bd) {
                        best = Some((d2, q, piece.cube));
                    }
                }
            });
            let (d2, q, cube) = best?;
            let d = d2.sqrt();
            if d > band_width || d < 1e-12 * g.h {
                return None;
            }
            // Nearest boundary cell among the corners of the interface cube;
            // such a corner exists since the cube straddles the interface.
            let s = g.strides();
            let mut owner = None;
            let mut owner_d = f64::INFINITY;
            for corner in 0..1usize << n {
                let off: usize = (0..n).filter(|a| corner >> a & 1 == 1).map(|a| s[a]).sum();
                let j = cube + off;
                if slot[j] == usize::MAX {
                    continue;
                }
                let p = g.point(j);
                let dj: f64 = (0..n).map(|a| (p[a] - q[a]).powi(2)).sum();
                if dj < owner_d {
                    owner_d = dj;
                    owner = Some(j);
                }
            }
            let owner = owner?;
            let mut dir = [0.0; 3];
            for a in 0..n {
                dir[a] = (zp[a] - q[a]) / d;
            }
            Some((owner, dir))
        })
        .collect();

    let cos_tol = dedup_deg.to_radians().cos();
    let mut fans: Vec<NormalFan> = boundary
        .iter()
        .map(|&b| NormalFan::new(g, b, FanSource::Proximal))
        .collect();
    for (owner, dir) in hits.into_iter().flatten() {
        fans[slot[owner]].insert(&dir[..n], 1, cos_tol);
    }
    Ok(fans)
}

/// Limiting fans: at each boundary cell, the union of the proximal fans of
/// all boundary cells within Euclidean distance `r_l`. The cell's own
/// proximal directions are kept verbatim, so proximal ⊆ limiting exactly.
pub fn limiting_normal_fan(grid: &UniformGrid, fans: &[NormalFan], r_l: f64, dedup_deg: f64) -> Result<Vec<NormalFan>> {
    if !(r_l >= 0.0) {
        return Err(invalid!("r_L must be nonnegative, got {r_l}"));
    }
    let mut slot = vec![usize::MAX; grid.len()];
    for (k, f) in fans.iter().enumerate() {
        if f.source != FanSource::Proximal {
            return Err(invalid!("limiting fans are built from proximal fans"));
        }
        slot[f.cell] = k;
    }
    let k = (r_l / grid.h + 1e-9).floor() as usize;
    let cos_tol = dedup_deg.to_radians().cos();
    Ok(fans
        .par_iter()
        .map(|f| {
            let mut out = NormalFan::new(grid, f.cell, FanSource::Limiting);
            out.normals = f.normals.clone();
            out.weights = f.weights.clone();
            let mut near = Vec::new();
            chebyshev_ball(grid, &grid.coords(f.cell), k, |j| {
                if j != f.cell && slot[j] != usize::MAX && linalg::dist(&grid.point(j), &f.point) <= r_l + 1e-9 * grid.h
                {
                    near.push(slot[j]);
                }
            });
            for j in near {
                for (v, w) in fans[j].normals.iter().zip(&fans[j].weights) {
                    out.insert(v, *w, cos_tol);
                }
            }
            out
        })
        .collect())
}

fn check_level(vf: &ValueField, tau: f64) -> Result<()> {
    if !vf.converged {
        return Err(invalid!("value field did not converge"));
    }
    let top = vf.max_value();
    if !(tau > 0.0 && tau < top) {
        return Err(invalid!(
            "τ = {tau} must lie strictly between 0 and the largest value {top}"
        ));
    }
    Ok(())
}

/// Limiting normal fans of the reachable set `R(τ) = {T ≤ τ}`.
pub fn reachable_fans(vf: &ValueField, tau: f64, opts: &FanOptions) -> Result<Vec<NormalFan>> {
    check_level(vf, tau)?;
    let set = vf.sublevel(tau);
    let h = vf.grid.h;
    let prox = proximal_normal_fan(&set, opts.band_width_h * h, opts.dedup_deg)?;
    limiting_normal_fan(&vf.grid, &prox, opts.r_l_h * h, opts.dedup_deg)
}

/// Records of `E(τ)`: every boundary cell of `R(τ)` and limiting normal `η`
/// with `H(x, η) < eps_char`, ordered by cell index.
pub fn detect_characteristic_points(
    system: &ControlSystem,
    vf: &ValueField,
    tau: f64,
    eps_char: f64,
    opts: &FanOptions,
) -> Result<Vec<CharRecord>> {
    let fans = reachable_fans(vf, tau, opts)?;
    characteristic_records(system, &fans, tau, eps_char)
}

/// Characteristic records from precomputed limiting fans.
pub fn characteristic_records(
    system: &ControlSystem,
    fans: &[NormalFan],
    tau: f64,
    eps_char: f64,
) -> Result<Vec<CharRecord>> {
    let mut out = Vec::new();
    for f in fans {
        check_dim(system.dim(), f.point.len())?;
        for eta in &f.normals {
            let r = hamiltonian_raw(system, &f.point, eta);
            if r < eps_char {
                out.push(CharRecord {
                    cell: f.cell,
                    x: f.point.clone(),
                    eta: eta.clone(),
                    tau,
                    residual: r,
                });
            }
        }
    }
    Ok(out)
}

/// Smallest `H(x, η)` over boundary cells of `R(τ)` in `region` and their
/// limiting normals.
pub fn petrov_margin(
    system: &ControlSystem,
    vf: &ValueField,
    tau: f64,
    region: &Region,
    opts: &FanOptions,
) -> Result<PetrovReport> {
    let fans = reachable_fans(vf, tau, opts)?;
    petrov_margin_on(system, &fans, region)
}

/// Petrov margin from precomputed limiting fans.
pub fn petrov_margin_on(system: &ControlSystem, fans: &[NormalFan], region: &Region) -> Result<PetrovReport> {
    let mut rep = PetrovReport {
        region: region.clone(),
        cells: 0,
        mu: f64::INFINITY,
        argmin_x: Vec::new(),
        argmin_eta: Vec::new(),
    };
    for f in fans.iter().filter(|f| !f.is_empty() && region.contains(&f.point)) {
        check_dim(system.dim(), f.point.len())?;
        rep.cells += 1;
        for eta in &f.normals {
            let v = hamiltonian_raw(system, &f.point, eta);
            if v < rep.mu {
                rep.mu = v;
                rep.argmin_x = f.point.clone();
                rep.argmin_eta = eta.clone();
            }
        }
    }
    if rep.cells == 0 {
        return Err(invalid!("region does not meet the boundary of the reachable set"));
    }
    Ok(rep)
}
