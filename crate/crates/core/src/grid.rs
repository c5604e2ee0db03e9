//! Uniform isotropic grids in two and three dimensions, target set
//! descriptions, and grid sets (boolean masks carrying a sub-cell level
//! function).

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};
use crate::fields::MonomialSpec;
use crate::linalg;
use crate::poly::{parse_rational, CompiledPoly, Polynomial};

/// Nodes `origin + i·h` for `i` in `0..cells[axis]` along each axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub origin: Vec<f64>,
    pub h: f64,
    pub cells: Vec<usize>,
}

pub type Coords = [usize; 3];

impl UniformGrid {
    pub fn new(origin: Vec<f64>, h: f64, cells: Vec<usize>) -> Result<Self> {
        let n = origin.len();
        if !(n == 2 || n == 3) {
            return Err(invalid!("grids must be 2- or 3-dimensional, got n = {n}"));
        }
        check_dim(n, cells.len())?;
        if !(h > 0.0) || !h.is_finite() {
            return Err(invalid!("grid spacing must be positive, got {h}"));
        }
        if cells.iter().any(|&c| c < 3) {
            return Err(invalid!("each axis needs at least 3 cells, got {cells:?}"));
        }
        Ok(Self { origin, h, cells })
    }

    /// Grid covering `[lo, hi]` with the given spacing. Each extent must be
    /// an integer multiple of `h`.
    pub fn from_box(lo: &[f64], hi: &[f64], h: f64) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        if !(h > 0.0) {
            return Err(invalid!("grid spacing must be positive, got {h}"));
        }
        let mut cells = Vec::with_capacity(lo.len());
        for (a, b) in lo.iter().zip(hi) {
            let steps = (b - a) / h;
            let r = steps.round();
            if !(r >= 2.0) || (steps - r).abs() > 1e-6 * r.max(1.0) {
                return Err(invalid!("extent {} is not a multiple of h = {h} (or too small)", b - a));
            }
            cells.push(r as usize + 1);
        }
        Self::new(lo.to_vec(), h, cells)
    }

    /// Cube `[lo, hi]ⁿ` with `per_axis` nodes along every axis.
    pub fn cube(n: usize, lo: f64, hi: f64, per_axis: usize) -> Result<Self> {
        if per_axis < 3 || !(hi > lo) {
            return Err(invalid!("invalid cube [{lo}, {hi}] with {per_axis} cells"));
        }
        let h = (hi - lo) / (per_axis - 1) as f64;
        Self::new(vec![lo; n], h, vec![per_axis; n])
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    pub fn len(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn upper(&self) -> Vec<f64> {
        self.origin
            .iter()
            .zip(&self.cells)
            .map(|(o, c)| o + (*c - 1) as f64 * self.h)
            .collect()
    }

    pub fn diameter(&self) -> f64 {
        linalg::dist(&self.origin, &self.upper())
    }

    /// Linear-index stride of each axis (last axis fastest).
    pub fn strides(&self) -> Coords {
        let mut s = [0; 3];
        let n = self.dim();
        let mut acc = 1;
        for a in (0..n).rev() {
            s[a] = acc;
            acc *= self.cells[a];
        }
        s
    }

    #[inline]
    pub fn coords(&self, mut idx: usize) -> Coords {
        let n = self.dim();
        let mut c = [0; 3];
        for a in (0..n).rev() {
            c[a] = idx % self.cells[a];
            idx /= self.cells[a];
        }
        c
    }

    #[inline]
    pub fn index(&self, c: &Coords) -> usize {
        let n = self.dim();
        let mut idx = 0;
        for a in 0..n {
            idx = idx * self.cells[a] + c[a];
        }
        idx
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        let c = self.coords(idx);
        self.point_of(&c)
    }

    #[inline]
    pub fn point_of(&self, c: &Coords) -> Vec<f64> {
        (0..self.dim()).map(|a| self.origin[a] + c[a] as f64 * self.h).collect()
    }

    /// Index of the node closest to `x`, clamped into the grid.
    pub fn nearest(&self, x: &[f64]) -> usize {
        let mut c = [0; 3];
        for a in 0..self.dim() {
            let t = ((x[a] - self.origin[a]) / self.h).round();
            c[a] = t.clamp(0.0, (self.cells[a] - 1) as f64) as usize;
        }
        self.index(&c)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let up = self.upper();
        let eps = 1e-9 * self.h;
        x.iter()
            .zip(self.origin.iter().zip(&up))
            .all(|(v, (lo, hi))| *v >= lo - eps && *v <= hi + eps)
    }

    /// Whether the node touches the domain boundary.
    pub fn on_boundary(&self, c: &Coords) -> bool {
        (0..self.dim()).any(|a| c[a] == 0 || c[a] + 1 == self.cells[a])
    }

    /// Distance (in cells) from a node to the nearest domain face.
    pub fn cells_from_boundary(&self, c: &Coords) -> usize {
        (0..self.dim())
            .map(|a| c[a].min(self.cells[a] - 1 - c[a]))
            .min()
            .unwrap_or(0)
    }

    /// Face neighbors of a node.
    pub fn face_neighbors(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let c = self.coords(idx);
        let s = self.strides();
        (0..self.dim()).flat_map(move |a| {
            let lo = (c[a] > 0).then(|| idx - s[a]);
            let hi = (c[a] + 1 < self.cells[a]).then(|| idx + s[a]);
            lo.into_iter().chain(hi)
        })
    }

    /// Grid with half the spacing over the same box.
    pub fn refined(&self) -> Self {
        Self {
            origin: self.origin.clone(),
            h: self.h / 2.0,
            cells: self.cells.iter().map(|c| 2 * c - 1).collect(),
        }
    }

    /// Multilinear interpolation of nodal values at `x` (clamped to the box).
    pub fn interpolate(&self, values: &[f64], x: &[f64]) -> f64 {
        let n = self.dim();
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..n {
            let t = ((x[a] - self.origin[a]) / self.h).clamp(0.0, (self.cells[a] - 1) as f64);
            let i = (t.floor() as usize).min(self.cells[a] - 2);
            base[a] = i;
            frac[a] = t - i as f64;
        }
        let s = self.strides();
        let b = self.index(&base);
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut off = 0;
            for a in 0..n {
                if corner >> a & 1 == 1 {
                    w *= frac[a];
                    off += s[a];
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            if w != 0.0 {
                acc += w * values[b + off];
            }
        }
        acc
    }
}

/// Closed target sets, described analytically and realized on grids as
/// sublevel sets `{φ ≤ 0}` of a level function `φ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetSet {
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    ComplementOfBall {
        center: Vec<f64>,
        radius: f64,
    },
    Union(Vec<TargetSet>),
    /// `{x : g(x) ≤ 0}` for an inline polynomial `g`.
    Sublevel {
        g: Vec<MonomialSpec>,
    },
}

impl TargetSet {
    pub fn ball(center: &[f64], radius: f64) -> Self {
        TargetSet::Ball {
            center: center.to_vec(),
            radius,
        }
    }

    /// The analytic level function of the target in `n` dimensions.
    pub fn level_function(&self, n: usize) -> Result<TargetLevel> {
        self.compile(n).map(TargetLevel)
    }

    fn compile(&self, n: usize) -> Result<CompiledTarget> {
        Ok(match self {
            TargetSet::Ball { center, radius } | TargetSet::ComplementOfBall { center, radius } => {
                check_dim(n, center.len())?;
                if !(*radius >= 0.0) {
                    return Err(invalid!("ball radius must be nonnegative, got {radius}"));
                }
                let sign = if matches!(self, TargetSet::Ball { .. }) {
                    1.0
                } else {
                    -1.0
                };
                CompiledTarget::Ball {
                    center: center.clone(),
                    radius: *radius,
                    sign,
                }
            }
            TargetSet::Box { lo, hi } => {
                check_dim(n, lo.len())?;
                check_dim(n, hi.len())?;
                if lo.iter().zip(hi).any(|(a, b)| a > b) {
                    return Err(invalid!("box with lo > hi"));
                }
                CompiledTarget::Box {
                    lo: lo.clone(),
                    hi: hi.clone(),
                }
            }
            TargetSet::Union(parts) => {
                if parts.is_empty() {
                    return Err(Error::EmptyTarget);
                }
                CompiledTarget::Union(parts.iter().map(|p| p.compile(n)).collect::<Result<Vec<_>>>()?)
            }
            TargetSet::Sublevel { g } => {
                let terms = g
                    .iter()
                    .map(|m| parse_rational(&m.coeff).map(|c| (c, m.powers.clone())))
                    .collect::<Result<Vec<_>>>()?;
                CompiledTarget::Poly(Polynomial::from_terms(n, terms)?.compile())
            }
        })
    }

    /// Level function sampled on the grid together with the induced mask.
    pub fn realize(&self, grid: &UniformGrid) -> Result<GridSet> {
        let t = self.compile(grid.dim())?;
        let level: Vec<f64> = (0..grid.len()).map(|i| t.level(&grid.point(i))).collect();
        let set = GridSet::from_level(grid.clone(), level);
        if set.count() == 0 {
            return Err(Error::EmptyTarget);
        }
        Ok(set)
    }
}

/// A compiled target: `level(x) ≤ 0` exactly on the target.
pub struct TargetLevel(CompiledTarget);

impl TargetLevel {
    pub fn level(&self, x: &[f64]) -> f64 {
        self.0.level(x)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.0.level(x) <= 0.0
    }
}

enum CompiledTarget {
    Ball { center: Vec<f64>, radius: f64, sign: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Union(Vec<CompiledTarget>),
    Poly(CompiledPoly),
}

impl CompiledTarget {
    fn level(&self, x: &[f64]) -> f64 {
        match self {
            CompiledTarget::Ball { center, radius, sign } => sign * (linalg::dist(x, center) - radius),
            CompiledTarget::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (a, b))| (a - v).max(v - b))
                .fold(f64::NEG_INFINITY, f64::max),
            CompiledTarget::Union(parts) => parts.iter().map(|p| p.level(x)).fold(f64::INFINITY, f64::min),
            CompiledTarget::Poly(g) => g.eval(x),
        }
    }
}

/// A set of grid nodes together with a level function whose nonpositive
/// values mark the members. The level function carries the sub-cell
/// position of the set's boundary.
#[derive(Clone, Debug)]
pub struct GridSet {
    pub grid: UniformGrid,
    pub inside: Vec<bool>,
    pub level: Vec<f64>,
}

impl GridSet {
    pub fn from_level(grid: UniformGrid, level: Vec<f64>) -> Self {
        let eps = 1e-9 * grid.h;
        let inside = level.iter().map(|&v| v <= eps).collect();
        Self { grid, inside, level }
    }

    /// Plain boolean mask; the boundary is placed halfway between member and
    /// non-member nodes.
    pub fn from_mask(grid: UniformGrid, inside: Vec<bool>) -> Self {
        let half = grid.h / 2.0;
        let level = inside.iter().map(|&b| if b { -half } else { half }).collect();
        Self { grid, inside, level }
    }

    pub fn count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn contains_set(&self, other: &GridSet) -> bool {
        self.inside.iter().zip(&other.inside).all(|(a, b)| *a || !*b)
    }
}

/// Run-length encoding `[[start, len], …]` of the member indices of a mask.
pub fn mask_to_runs(mask: &[bool]) -> Vec<[usize; 2]> {
    let mut runs = Vec::new();
    let mut i = 0;
    while i < mask.len() {
        if mask[i] {
            let start = i;
            while i < mask.len() && mask[i] {
                i += 1;
            }
            runs.push([start, i - start]);
        } else {
            i += 1;
        }
    }
    runs
}

pub fn runs_to_mask(runs: &[[usize; 2]], len: usize) -> Result<Vec<bool>> {
    let mut mask = vec![false; len];
    for &[start, n] in runs {
        if start + n > len {
            return Err(invalid!("run [{start}, {n}] exceeds mask length {len}"));
        }
        mask[start..start + n].fill(true);
    }
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn box_grid_geometry() {
        let g = UniformGrid::from_box(&[-1.0, -1.0], &[1.0, 1.0], 0.01).unwrap();
        assert_eq!(g.cells, vec![201, 201]);
        assert_eq!(g.len(), 201 * 201);
        let i = g.nearest(&[0.7, 0.0]);
        let p = g.point(i);
        assert!((p[0] - 0.7).abs() < 1e-12 && p[1].abs() < 1e-12);
        assert!(UniformGrid::from_box(&[0.0, 0.0], &[1.0, 1.0], 0.3).is_err());
        assert!(UniformGrid::new(vec![0.0], 0.1, vec![5]).is_err());
        assert!(UniformGrid::new(vec![0.0, 0.0], -0.1, vec![5, 5]).is_err());
    }

    #[test]
    fn refinement_keeps_nodes() {
        let g = UniformGrid::cube(3, -1.0, 1.0, 21).unwrap();
        let f = g.refined();
        assert_eq!(f.cells, vec![41; 3]);
        assert!((f.h - 0.05).abs() < 1e-15);
    }

    #[test]
    fn interpolation_is_exact_for_multilinear() {
        let g = UniformGrid::cube(3, 0.0, 1.0, 5).unwrap();
        let f = |x: &[f64]| 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[2];
        let vals: Vec<f64> = (0..g.len()).map(|i| f(&g.point(i))).collect();
        for x in [[0.1, 0.2, 0.3], [0.99, 0.01, 0.5], [1.0, 1.0, 1.0]] {
            assert!((g.interpolate(&vals, &x) - f(&x)).abs() < 1e-12);
        }
    }

    #[test]
    fn target_masks() {
        let g = UniformGrid::from_box(&[-1.0, -1.0], &[1.0, 1.0], 0.1).unwrap();
        let ball = TargetSet::ball(&[0.0, 0.0], 0.25).realize(&g).unwrap();
        assert_eq!(ball.count(), 21); // lattice points with i² + j² ≤ 6.25
        let comp = TargetSet::ComplementOfBall {
            center: vec![0.0, 0.0],
            radius: 0.25,
        }
        .realize(&g)
        .unwrap();
        assert_eq!(comp.count() + ball.count(), g.len());
        let empty = TargetSet::ball(&[5.0, 5.0], 0.1).realize(&g);
        assert!(matches!(empty, Err(Error::EmptyTarget)));
    }

    #[test]
    fn sublevel_target_matches_ball() {
        let g = UniformGrid::from_box(&[-1.0, -1.0], &[1.0, 1.0], 0.1).unwrap();
        let mono = |c: &str, p: [u32; 2]| MonomialSpec {
            coeff: c.into(),
            powers: p.to_vec(),
        };
        let disc = TargetSet::Sublevel {
            g: vec![mono("1", [2, 0]), mono("1", [0, 2]), mono("-1/4", [0, 0])],
        };
        let a = disc.realize(&g).unwrap();
        let b = TargetSet::ball(&[0.0, 0.0], 0.5).realize(&g).unwrap();
        assert_eq!(a.inside, b.inside);
    }

    proptest! {
        #[test]
        fn rle_roundtrip(mask in proptest::collection::vec(any::<bool>(), 0..200)) {
            let runs = mask_to_runs(&mask);
            prop_assert_eq!(runs_to_mask(&runs, mask.len()).unwrap(), mask);
        }
    }

    #[test]
    fn coords_index_roundtrip() {
        let g = UniformGrid::new(vec![0.0; 3], 1.0, vec![4, 5, 6]).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.index(&g.coords(i)), i);
        }
        assert_eq!(g.strides(), [30, 6, 1]);
    }
}
