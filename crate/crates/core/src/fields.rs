//! Polynomial vector fields, their Lie brackets, and the bracket generating
//! (Hörmander) rank test.

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg;
use crate::poly::{format_rational, parse_rational, CompiledPoly, Polynomial};

/// A vector field on ℝⁿ with polynomial components.
#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<MonomialSpec>>", into = "Vec<Vec<MonomialSpec>>")]
pub struct PolyVectorField {
    components: Vec<Polynomial>,
    compiled: Vec<CompiledPoly>,
    jacobian: Vec<Vec<CompiledPoly>>,
}

impl PolyVectorField {
    pub fn new(components: Vec<Polynomial>) -> Result<Self> {
        let n = components.len();
        if n == 0 {
            return Err(invalid!("vector field needs at least one component"));
        }
        for c in &components {
            check_dim(n, c.nvars())?;
        }
        let compiled = components.iter().map(Polynomial::compile).collect();
        let jacobian = components
            .iter()
            .map(|c| (0..n).map(|j| c.derivative(j).compile()).collect())
            .collect();
        Ok(Self {
            components,
            compiled,
            jacobian,
        })
    }

    pub fn zero(n: usize) -> Self {
        Self::new(vec![Polynomial::zero(n); n]).expect("consistent dimensions")
    }

    /// The coordinate field ∂/∂x_i.
    pub fn coordinate(n: usize, i: usize) -> Self {
        let comps = (0..n)
            .map(|k| {
                if k == i {
                    Polynomial::one(n)
                } else {
                    Polynomial::zero(n)
                }
            })
            .collect();
        Self::new(comps).expect("consistent dimensions")
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Polynomial::is_zero)
    }

    pub fn neg(&self) -> Self {
        Self::new(self.components.iter().map(|c| -c).collect()).expect("same shape")
    }

    /// Unchecked evaluation into `out`.
    #[inline]
    pub(crate) fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.compiled) {
            *o = c.eval(x);
        }
    }

    /// Unchecked row-major Jacobian, entry `(i, j)` at `out[i * n + j]`.
    #[inline]
    pub(crate) fn jacobian_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for (i, row) in self.jacobian.iter().enumerate() {
            for (j, d) in row.iter().enumerate() {
                out[i * n + j] = d.eval(x);
            }
        }
    }

    /// `Df(x)ᵀ p`, the covector pullback used by the adjoint equation.
    #[inline]
    pub(crate) fn jacobian_t_dot(&self, x: &[f64], p: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = self
                .jacobian
                .iter()
                .zip(p)
                .map(|(row, pi)| if row[j].is_zero() { 0.0 } else { row[j].eval(x) * pi })
                .sum();
        }
    }
}

impl PartialEq for PolyVectorField {
    fn eq(&self, other: &Self) -> bool {
        self.components == other.components
    }
}

impl Eq for PolyVectorField {}

impl fmt::Debug for PolyVectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for PolyVectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.components.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// One monomial of the inline field format: `{"coeff": "p/q", "powers": [..]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonomialSpec {
    pub coeff: String,
    pub powers: Vec<u32>,
}

impl TryFrom<Vec<Vec<MonomialSpec>>> for PolyVectorField {
    type Error = Error;

    fn try_from(spec: Vec<Vec<MonomialSpec>>) -> Result<Self> {
        let n = spec.len();
        let comps = spec
            .into_iter()
            .map(|monos| {
                let terms = monos
                    .into_iter()
                    .map(|m| parse_rational(&m.coeff).map(|c| (c, m.powers)))
                    .collect::<Result<Vec<_>>>()?;
                Polynomial::from_terms(n, terms)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(comps)
    }
}

impl From<PolyVectorField> for Vec<Vec<MonomialSpec>> {
    fn from(f: PolyVectorField) -> Self {
        f.components
            .iter()
            .map(|c| {
                c.terms()
                    .map(|(e, q)| MonomialSpec {
                        coeff: format_rational(q),
                        powers: e.clone(),
                    })
                    .collect()
            })
            .collect()
    }
}

/// Exact polynomial evaluation of a field at `x`.
pub fn eval_field(field: &PolyVectorField, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(field.dim(), x.len())?;
    let mut out = vec![0.0; field.dim()];
    field.eval_into(x, &mut out);
    Ok(out)
}

/// Jacobian `∂f_i/∂x_j` at `x`, obtained from the symbolic derivatives.
pub fn eval_jacobian(field: &PolyVectorField, x: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = field.dim();
    check_dim(n, x.len())?;
    let mut flat = vec![0.0; n * n];
    field.jacobian_into(x, &mut flat);
    Ok(flat.chunks(n).map(<[f64]>::to_vec).collect())
}

/// The commutator `[f, g] = Dg·f − Df·g`, computed symbolically.
pub fn lie_bracket(f: &PolyVectorField, g: &PolyVectorField) -> Result<PolyVectorField> {
    let n = f.dim();
    check_dim(n, g.dim())?;
    let comps = (0..n)
        .map(|k| {
            let mut acc = Polynomial::zero(n);
            for j in 0..n {
                let a = &g.components[k].derivative(j) * &f.components[j];
                let b = &f.components[k].derivative(j) * &g.components[j];
                acc = &acc + &(&a - &b);
            }
            acc
        })
        .collect();
    PolyVectorField::new(comps)
}

/// A driftless control system `y' = Σ f_i(y) u_i`.
#[derive(Clone)]
pub struct ControlSystem {
    n: usize,
    fields: Vec<PolyVectorField>,
    brackets: OnceLock<Brackets>,
}

/// First- and second-order brackets, cached on first use.
#[derive(Clone)]
struct Brackets {
    /// `[f_i, f_j]`, indexed `i * m + j`.
    first: Vec<PolyVectorField>,
    /// `[f_k, [f_i, f_j]]`, indexed `(k * m + i) * m + j`.
    second: Vec<PolyVectorField>,
}

impl ControlSystem {
    pub fn new(fields: Vec<PolyVectorField>) -> Result<Self> {
        let n = fields
            .first()
            .map(PolyVectorField::dim)
            .ok_or_else(|| invalid!("a control system needs at least one field"))?;
        for f in &fields {
            check_dim(n, f.dim())?;
        }
        Ok(Self {
            n,
            fields,
            brackets: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn num_fields(&self) -> usize {
        self.fields.len()
    }

    pub fn fields(&self) -> &[PolyVectorField] {
        &self.fields
    }

    /// Field values at `x`, row `i` holding `f_i(x)` (row-major `m × n`).
    #[inline]
    pub(crate) fn frame_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n;
        for (i, f) in self.fields.iter().enumerate() {
            f.eval_into(x, &mut out[i * n..(i + 1) * n]);
        }
    }

    pub fn frame(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n, x.len())?;
        let mut out = vec![0.0; self.n * self.fields.len()];
        self.frame_into(x, &mut out);
        Ok(out)
    }

    /// Velocity `f(x)u`.
    pub(crate) fn velocity_into(&self, x: &[f64], u: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let mut tmp = vec![0.0; self.n];
        for (f, ui) in self.fields.iter().zip(u) {
            if *ui == 0.0 {
                continue;
            }
            f.eval_into(x, &mut tmp);
            for (o, t) in out.iter_mut().zip(&tmp) {
                *o += ui * t;
            }
        }
    }

    fn brackets(&self) -> &Brackets {
        self.brackets.get_or_init(|| {
            let m = self.fields.len();
            let mut first = Vec::with_capacity(m * m);
            for i in 0..m {
                for j in 0..m {
                    first.push(lie_bracket(&self.fields[i], &self.fields[j]).expect("same dimension"));
                }
            }
            let mut second = Vec::with_capacity(m * m * m);
            for k in 0..m {
                for ij in &first {
                    second.push(lie_bracket(&self.fields[k], ij).expect("same dimension"));
                }
            }
            Brackets { first, second }
        })
    }

    /// `[f_i, f_j]`.
    pub fn bracket(&self, i: usize, j: usize) -> &PolyVectorField {
        let m = self.fields.len();
        &self.brackets().first[i * m + j]
    }

    /// `[f_k, [f_i, f_j]]`.
    pub fn bracket2(&self, k: usize, i: usize, j: usize) -> &PolyVectorField {
        let m = self.fields.len();
        &self.brackets().second[(k * m + i) * m + j]
    }
}

impl fmt::Debug for ControlSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ControlSystem")
            .field("n", &self.n)
            .field("fields", &self.fields)
            .finish()
    }
}

impl PartialEq for ControlSystem {
    fn eq(&self, other: &Self) -> bool {
        self.fields == other.fields
    }
}

/// A left-normed bracket word in the generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BracketWord {
    Gen(usize),
    Bracket(Box<BracketWord>, Box<BracketWord>),
}

impl BracketWord {
    pub fn depth(&self) -> usize {
        match self {
            BracketWord::Gen(_) => 1,
            BracketWord::Bracket(a, b) => a.depth() + b.depth(),
        }
    }
}

impl fmt::Display for BracketWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BracketWord::Gen(i) => write!(f, "f{}", i + 1),
            BracketWord::Bracket(a, b) => write!(f, "[{a},{b}]"),
        }
    }
}

impl Serialize for BracketWord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HormanderReport {
    pub point: Vec<f64>,
    pub rank: usize,
    /// Smallest depth at which the brackets span ℝⁿ; `None` when not reached
    /// within `max_depth`.
    pub step: Option<usize>,
    pub max_depth: usize,
    pub basis: Vec<(BracketWord, Vec<f64>)>,
}

pub const DEFAULT_MAX_DEPTH: usize = 6;
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// All left-normed bracket words up to `max_depth`, with symbolically zero
/// fields and duplicates (up to sign) pruned.
pub fn bracket_words(system: &ControlSystem, max_depth: usize) -> Vec<(BracketWord, PolyVectorField)> {
    let mut all: Vec<(BracketWord, PolyVectorField)> = Vec::new();
    let known = |f: &PolyVectorField, all: &[(BracketWord, PolyVectorField)]| {
        f.is_zero() || all.iter().any(|(_, g)| g == f || g == &f.neg())
    };
    let mut frontier = Vec::new();
    for (i, f) in system.fields().iter().enumerate() {
        if !known(f, &all) {
            all.push((BracketWord::Gen(i), f.clone()));
            frontier.push(all.len() - 1);
        }
    }
    for _ in 2..=max_depth {
        let mut next = Vec::new();
        for (i, g) in system.fields().iter().enumerate() {
            for &w in &frontier {
                let br = lie_bracket(g, &all[w].1).expect("same dimension");
                if known(&br, &all) {
                    continue;
                }
                let word = BracketWord::Bracket(Box::new(BracketWord::Gen(i)), Box::new(all[w].0.clone()));
                all.push((word, br));
                next.push(all.len() - 1);
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    all
}

/// Rank of the Lie algebra generated by the system's fields at `x`.
pub fn hormander_rank(system: &ControlSystem, x: &[f64], max_depth: usize, tol: f64) -> Result<HormanderReport> {
    if max_depth < 1 {
        return Err(invalid!("max_depth must be at least 1"));
    }
    let n = system.dim();
    check_dim(n, x.len())?;
    let words = bracket_words(system, max_depth);
    let values: Vec<Vec<f64>> = words
        .iter()
        .map(|(_, f)| eval_field(f, x).expect("dimension checked"))
        .collect();

    let rank_upto = |depth: usize| -> usize {
        let rows: Vec<Vec<f64>> = words
            .iter()
            .zip(&values)
            .filter(|((w, _), _)| w.depth() <= depth)
            .map(|(_, v)| v.clone())
            .collect();
        if rows.is_empty() {
            return 0;
        }
        linalg::numerical_rank(&linalg::matrix_from_rows(&rows, n), tol)
    };

    let step = (1..=max_depth).find(|&d| rank_upto(d) == n);
    let rank = rank_upto(max_depth);

    // Greedy independent subset, in depth order.
    let mut basis: Vec<(BracketWord, Vec<f64>)> = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for ((w, _), v) in words.iter().zip(&values) {
        if basis.len() == rank {
            break;
        }
        rows.push(v.clone());
        if linalg::numerical_rank(&linalg::matrix_from_rows(&rows, n), tol) > basis.len() {
            basis.push((w.clone(), v.clone()));
        } else {
            rows.pop();
        }
    }

    Ok(HormanderReport {
        point: x.to_vec(),
        rank,
        step,
        max_depth,
        basis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems;

    fn grushin_f2() -> PolyVectorField {
        systems::grushin().fields()[1].clone()
    }

    #[test]
    fn grushin_field_value() {
        assert_eq!(eval_field(&grushin_f2(), &[2.0, 5.0]).unwrap(), vec![0.0, 2.0]);
    }

    #[test]
    fn field_without_constants_vanishes_at_origin() {
        assert_eq!(eval_field(&grushin_f2(), &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn acs3_second_field_value() {
        let sys = systems::acs3();
        let f2 = &sys.fields()[1];
        assert_eq!(eval_field(f2, &[1.0, 0.0, 0.0]).unwrap(), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn eval_rejects_wrong_dimension() {
        assert!(matches!(
            eval_field(&grushin_f2(), &[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
        assert!(eval_jacobian(&grushin_f2(), &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn jacobians() {
        let j = eval_jacobian(&grushin_f2(), &[0.3, -7.0]).unwrap();
        assert_eq!(j, vec![vec![0.0, 0.0], vec![1.0, 0.0]]);
        let c = PolyVectorField::coordinate(3, 1);
        assert_eq!(eval_jacobian(&c, &[1.0, 2.0, 3.0]).unwrap(), vec![vec![0.0; 3]; 3]);
        let sys = systems::heisenberg();
        let h1 = &sys.fields()[0];
        let j = eval_jacobian(h1, &[0.0, 0.0, 0.0]).unwrap();
        for (i, row) in j.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                let expected = if (i, k) == (2, 1) { -0.5 } else { 0.0 };
                assert_eq!(*v, expected);
            }
        }
    }

    #[test]
    fn brackets_by_hand() {
        let g = systems::grushin();
        let br = lie_bracket(&g.fields()[0], &g.fields()[1]).unwrap();
        assert_eq!(br, PolyVectorField::coordinate(2, 1));

        let f = &g.fields()[1];
        assert!(lie_bracket(f, f).unwrap().is_zero());

        let a = systems::acs3();
        let br = lie_bracket(&a.fields()[0], &a.fields()[1]).unwrap();
        // (0, -1, 2 x1)
        assert_eq!(eval_field(&br, &[0.25, 9.0, -3.0]).unwrap(), vec![0.0, -1.0, 0.5]);
        assert_eq!(br.components()[1].to_string(), "-1");
        assert_eq!(br.components()[2].to_string(), "2*x1");
    }

    #[test]
    fn bracket_dimension_mismatch() {
        let a = PolyVectorField::coordinate(2, 0);
        let b = PolyVectorField::coordinate(3, 0);
        assert!(lie_bracket(&a, &b).is_err());
        assert!(ControlSystem::new(vec![a, b]).is_err());
    }

    #[test]
    fn hormander_steps() {
        let e = systems::euclidean2();
        let r = hormander_rank(&e, &[0.3, -0.2], 6, DEFAULT_RANK_TOL).unwrap();
        assert_eq!((r.rank, r.step), (2, Some(1)));

        let g = systems::grushin();
        let r = hormander_rank(&g, &[0.0, 0.0], 6, DEFAULT_RANK_TOL).unwrap();
        assert_eq!((r.rank, r.step), (2, Some(2)));
        assert_eq!(r.basis[1].0.to_string(), "[f1,f2]");
        let r = hormander_rank(&g, &[1.0, 0.0], 6, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(r.step, Some(1));

        let mt = systems::martinet();
        let r = hormander_rank(&mt, &[0.0, 0.0, 0.0], 6, DEFAULT_RANK_TOL).unwrap();
        assert_eq!((r.rank, r.step), (3, Some(3)));
        assert_eq!(r.basis.len(), 3);
        assert_eq!(r.basis[2].0.to_string(), "[f1,[f1,f2]]");
    }

    #[test]
    fn hormander_reports_non_attainment() {
        let sys = ControlSystem::new(vec![PolyVectorField::coordinate(3, 0)]).unwrap();
        let r = hormander_rank(&sys, &[0.0; 3], 4, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(r.rank, 1);
        assert_eq!(r.step, None);
        assert!(hormander_rank(&sys, &[0.0; 3], 0, DEFAULT_RANK_TOL).is_err());
    }

    #[test]
    fn field_json_format() {
        let json = r#"[[{"coeff":"1","powers":[0,0]}],[{"coeff":"1/2","powers":[2,0]}]]"#;
        let f: PolyVectorField = serde_json::from_str(json).unwrap();
        assert_eq!(eval_field(&f, &[2.0, 0.0]).unwrap(), vec![1.0, 2.0]);
        let back = serde_json::to_string(&f).unwrap();
        assert_eq!(back, json);
        let bad = r#"[[{"coeff":"x","powers":[0,0]}],[]]"#;
        assert!(serde_json::from_str::<PolyVectorField>(bad).is_err());
    }
}
