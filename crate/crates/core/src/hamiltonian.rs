//! Symbols of the fields on the cotangent bundle, the Hamiltonian
//! `H(x,p) = |(f_i(x)·p)_i|`, and the symplectic test for the characteristic
//! set `Char = {(x,p) : p ≠ 0, f_i(x)·p = 0 ∀i}`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::fields::ControlSystem;
use crate::linalg::{self, dot, norm};

/// Membership tolerance for exact cotangent queries.
pub const DEFAULT_CHAR_TOL: f64 = 1e-8;
/// Relative nondegeneracy threshold for the restricted symplectic form.
pub const DEFAULT_SYMPLECTIC_TOL: f64 = 1e-6;
/// Relative rank tolerance for the constraint Jacobian.
const CONSTRAINT_RANK_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CotangentPoint {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

impl CotangentPoint {
    pub fn new(x: Vec<f64>, p: Vec<f64>) -> Self {
        Self { x, p }
    }

    /// Same base point with `p / |p|`.
    pub fn normalized(&self) -> Result<Self> {
        let np = norm(&self.p);
        if np == 0.0 {
            return Err(Error::ZeroCovector);
        }
        Ok(Self {
            x: self.x.clone(),
            p: self.p.iter().map(|v| v / np).collect(),
        })
    }

    fn check(&self, system: &ControlSystem) -> Result<()> {
        check_dim(system.dim(), self.x.len())?;
        check_dim(system.dim(), self.p.len())
    }
}

/// `(f_1(x)·p, …, f_m(x)·p)` without dimension checks.
pub(crate) fn symbols_raw(system: &ControlSystem, x: &[f64], p: &[f64], out: &mut [f64]) {
    let n = system.dim();
    let mut fx = vec![0.0; n];
    for (o, f) in out.iter_mut().zip(system.fields()) {
        f.eval_into(x, &mut fx);
        *o = dot(&fx, p);
    }
}

pub(crate) fn hamiltonian_raw(system: &ControlSystem, x: &[f64], p: &[f64]) -> f64 {
    let mut s = vec![0.0; system.num_fields()];
    symbols_raw(system, x, p, &mut s);
    norm(&s)
}

pub fn symbols(system: &ControlSystem, rho: &CotangentPoint) -> Result<Vec<f64>> {
    rho.check(system)?;
    let mut s = vec![0.0; system.num_fields()];
    symbols_raw(system, &rho.x, &rho.p, &mut s);
    Ok(s)
}

pub fn hamiltonian(system: &ControlSystem, rho: &CotangentPoint) -> Result<f64> {
    Ok(norm(&symbols(system, rho)?))
}

/// The maximizer `u* = symbols / H` of `u ↦ f(x)u·p` over the unit ball.
pub fn optimal_control(system: &ControlSystem, rho: &CotangentPoint) -> Result<Vec<f64>> {
    let s = symbols(system, rho)?;
    let h = norm(&s);
    if h == 0.0 {
        return Err(Error::CharacteristicPoint(h));
    }
    Ok(s.iter().map(|v| v / h).collect())
}

/// `H(x, p/|p|)`; zero exactly on the characteristic set.
pub fn char_residual(system: &ControlSystem, rho: &CotangentPoint) -> Result<f64> {
    rho.check(system)?;
    hamiltonian(system, &rho.normalized()?)
}

/// `B_ij = [f_i, f_j](x)·p`, the Poisson brackets of the symbols.
pub fn poisson_bracket_matrix(system: &ControlSystem, rho: &CotangentPoint) -> Result<Vec<Vec<f64>>> {
    rho.check(system)?;
    Ok(poisson_raw(system, &rho.x, &rho.p))
}

pub(crate) fn poisson_raw(system: &ControlSystem, x: &[f64], p: &[f64]) -> Vec<Vec<f64>> {
    let m = system.num_fields();
    let n = system.dim();
    let mut b = vec![vec![0.0; m]; m];
    let mut v = vec![0.0; n];
    for i in 0..m {
        for j in (i + 1)..m {
            system.bracket(i, j).eval_into(x, &mut v);
            let val = dot(&v, p);
            b[i][j] = val;
            b[j][i] = -val;
        }
    }
    b
}

/// Constraint Jacobian `DΦ(x,p)` of `Φ = (f_i(x)·p)_i`, rows `[Df_iᵀp | f_i(x)]`.
pub(crate) fn constraint_jacobian(system: &ControlSystem, x: &[f64], p: &[f64]) -> Vec<Vec<f64>> {
    let n = system.dim();
    system
        .fields()
        .iter()
        .map(|f| {
            let mut row = vec![0.0; 2 * n];
            f.jacobian_t_dot(x, p, &mut row[..n]);
            f.eval_into(x, &mut row[n..]);
            row
        })
        .collect()
}

/// Orthonormal basis of the fibre `Char_x = {p : fᵢ(x)·p = 0 ∀i}`, the
/// annihilator of the span of the frame at `x`. Empty when the frame spans.
pub fn char_fiber(system: &ControlSystem, x: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = system.dim();
    let frame = system.frame(x)?;
    let rows: Vec<Vec<f64>> = frame.chunks(n).map(<[f64]>::to_vec).collect();
    let (_, basis) = linalg::null_space(&linalg::matrix_from_rows(&rows, n), CONSTRAINT_RANK_TOL, 1.0);
    Ok(basis)
}

/// Unit covector in `Char_x` with coefficients `coeffs` over [`char_fiber`];
/// `None` when the fibre is trivial or the combination vanishes.
pub fn char_point(system: &ControlSystem, x: &[f64], coeffs: &[f64]) -> Result<Option<CotangentPoint>> {
    let basis = char_fiber(system, x)?;
    let mut p = vec![0.0; system.dim()];
    for (b, c) in basis.iter().zip(coeffs) {
        for (pi, bi) in p.iter_mut().zip(b) {
            *pi += c * bi;
        }
    }
    let r = norm(&p);
    if basis.is_empty() || r == 0.0 {
        return Ok(None);
    }
    p.iter_mut().for_each(|v| *v /= r);
    Ok(Some(CotangentPoint::new(x.to_vec(), p)))
}

#[derive(Clone, Debug)]
pub struct TangentBasis {
    pub clean: bool,
    pub constraint_rank: usize,
    /// Orthonormal vectors `(δx, δp)` of length `2n`.
    pub basis: Vec<Vec<f64>>,
}

/// Orthonormal basis of `ker DΦ(ρ)`, the tangent space to `Char` at a clean point.
pub fn char_tangent_basis(system: &ControlSystem, rho: &CotangentPoint, tol_char: f64) -> Result<TangentBasis> {
    let r = char_residual(system, rho)?;
    if !(r < tol_char) {
        return Err(Error::NotInChar(r));
    }
    let n = system.dim();
    let m = system.num_fields();
    let jac = constraint_jacobian(system, &rho.x, &rho.p);
    let a = linalg::matrix_from_rows(&jac, 2 * n);
    let (rank, basis) = linalg::null_space(&a, CONSTRAINT_RANK_TOL, 1.0);
    Ok(TangentBasis {
        clean: rank == m,
        constraint_rank: rank,
        basis,
    })
}

/// `σ((δx,δp),(δx',δp')) = δp·δx' − δp'·δx`.
pub fn symplectic_form(v: &[f64], w: &[f64]) -> f64 {
    let n = v.len() / 2;
    dot(&v[n..], &w[..n]) - dot(&w[n..], &v[..n])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Symplectic,
    Degenerate,
    NotClean,
    NotInChar,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SymplecticReport {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub clean: bool,
    pub tangent_dim: usize,
    #[serde(rename = "gram_sv")]
    pub gram_singular_values: Vec<f64>,
    pub verdict: Verdict,
}

/// Restricts `σ` to `T_ρ Char` and checks nondegeneracy of the Gram matrix.
pub fn symplectic_test(system: &ControlSystem, rho: &CotangentPoint, tol: f64) -> Result<SymplecticReport> {
    symplectic_test_with(system, rho, tol, DEFAULT_CHAR_TOL)
}

pub fn symplectic_test_with(
    system: &ControlSystem,
    rho: &CotangentPoint,
    tol: f64,
    tol_char: f64,
) -> Result<SymplecticReport> {
    rho.check(system)?;
    let report = |clean, tangent_dim, sv, verdict| SymplecticReport {
        x: rho.x.clone(),
        p: rho.p.clone(),
        clean,
        tangent_dim,
        gram_singular_values: sv,
        verdict,
    };
    let tb = match char_tangent_basis(system, rho, tol_char) {
        Ok(tb) => tb,
        Err(Error::NotInChar(_)) | Err(Error::ZeroCovector) => {
            return Ok(report(false, 0, Vec::new(), Verdict::NotInChar))
        }
        Err(e) => return Err(e),
    };
    let k = tb.basis.len();
    let rows: Vec<Vec<f64>> = tb
        .basis
        .iter()
        .map(|a| tb.basis.iter().map(|b| symplectic_form(a, b)).collect())
        .collect();
    let sv = if k == 0 {
        Vec::new()
    } else {
        linalg::singular_values(&linalg::matrix_from_rows(&rows, k))
    };
    if !tb.clean {
        return Ok(report(false, k, sv, Verdict::NotClean));
    }
    let smax = sv.first().copied().unwrap_or(0.0);
    let smin = sv.last().copied().unwrap_or(0.0);
    let verdict = if k > 0 && smax > 0.0 && smin > tol * smax {
        Verdict::Symplectic
    } else {
        Verdict::Degenerate
    };
    Ok(report(true, k, sv, verdict))
}
