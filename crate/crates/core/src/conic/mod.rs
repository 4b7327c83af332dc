//! A small modelling layer for semidefinite programs over Hermitian
//! matrices, and the programs behind every cost measure.
//!
//! Problems are written with [`AffineExpr`]s in Hermitian and scalar
//! variables and compiled to a [`RealConicProblem`]: each Hermitian variable
//! of side `n` becomes `n²` real coordinates, and each Hermitian constraint
//! of side `d` becomes a real symmetric block of side `2d` via
//! `H ↦ [[Re H, −Im H], [Im H, Re H]]`, which is PSD exactly when `H` is.

pub mod builders;
mod expr;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;

use expr::{dense_to_entries, merge, Entries, Term};
pub use expr::{embed_hermitian, AffineExpr, AffineMap, AffineOp, VarValue};

use crate::error::{Error, Result};
use crate::solver::{
    ConicSolver, LinearEquality, LmiBlock, RealConicProblem, SolveReport, SolveStatus,
    SparseSymmetric,
};
use crate::tensor::{hermitian_deviation, CMatrix, HermitianOperator, SystemLayout, C64};

/// Handle to a variable of a [`ConicProblem`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum VarKind {
    Hermitian(SystemLayout),
    Scalar,
}

#[derive(Clone, Debug, PartialEq)]
struct VarInfo {
    name: String,
    kind: VarKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintKind {
    /// The expression is positive semidefinite.
    Psd,
    /// The expression is zero.
    Zero,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub kind: ConstraintKind,
    pub expr: AffineExpr,
}

/// Hermiticity tolerance for compiled coefficient matrices.
const HERMITIAN_TOL: f64 = 1e-10;
/// Coefficients below this magnitude are dropped on compilation.
const DROP_TOL: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct ConicProblem {
    vars: Vec<VarInfo>,
    sense: Sense,
    objective: AffineExpr,
    constraints: Vec<Constraint>,
}

impl Default for ConicProblem {
    fn default() -> Self {
        Self::new()
    }
}

impl ConicProblem {
    pub fn new() -> Self {
        Self {
            vars: Vec::new(),
            sense: Sense::Minimize,
            objective: AffineExpr::real(0.0),
            constraints: Vec::new(),
        }
    }

    fn add_var(&mut self, name: &str, kind: VarKind) -> Result<Var> {
        if self.find_var(name).is_some() {
            return Err(Error::MalformedProblem(format!(
                "duplicate variable `{name}`"
            )));
        }
        self.vars.push(VarInfo {
            name: name.to_string(),
            kind,
        });
        Ok(Var(self.vars.len() - 1))
    }

    /// A Hermitian matrix variable on `layout`.
    pub fn hermitian(&mut self, name: &str, layout: SystemLayout) -> Result<Var> {
        self.add_var(name, VarKind::Hermitian(layout))
    }

    /// A real scalar variable.
    pub fn scalar(&mut self, name: &str) -> Result<Var> {
        self.add_var(name, VarKind::Scalar)
    }

    pub fn find_var(&self, name: &str) -> Option<Var> {
        self.vars.iter().position(|v| v.name == name).map(Var)
    }

    pub fn var_name(&self, var: Var) -> &str {
        &self.vars[var.0].name
    }

    pub fn var_kind(&self, var: Var) -> &VarKind {
        &self.vars[var.0].kind
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    /// The variable as an expression (1×1 on the empty layout for scalars).
    pub fn expr(&self, var: Var) -> AffineExpr {
        match &self.vars[var.0].kind {
            VarKind::Hermitian(layout) => AffineExpr::matrix_var(var, layout.clone()),
            VarKind::Scalar => AffineExpr::scalar_var(var),
        }
    }

    fn set_objective(&mut self, sense: Sense, expr: AffineExpr) -> Result<()> {
        if expr.layout().total_dim() != 1 {
            return Err(Error::DimensionMismatch(format!(
                "objective must be a scalar, found an expression on {}",
                expr.layout()
            )));
        }
        self.sense = sense;
        self.objective = expr;
        Ok(())
    }

    pub fn minimize(&mut self, expr: AffineExpr) -> Result<()> {
        self.set_objective(Sense::Minimize, expr)
    }

    pub fn maximize(&mut self, expr: AffineExpr) -> Result<()> {
        self.set_objective(Sense::Maximize, expr)
    }

    fn add_constraint(
        &mut self,
        name: &str,
        kind: ConstraintKind,
        expr: AffineExpr,
    ) -> Result<usize> {
        if self.constraints.iter().any(|c| c.name == name) {
            return Err(Error::MalformedProblem(format!(
                "duplicate constraint `{name}`"
            )));
        }
        self.constraints.push(Constraint {
            name: name.to_string(),
            kind,
            expr,
        });
        Ok(self.constraints.len() - 1)
    }

    /// `expr ⪰ 0`; returns the constraint index.
    pub fn add_psd(&mut self, name: &str, expr: AffineExpr) -> Result<usize> {
        self.add_constraint(name, ConstraintKind::Psd, expr)
    }

    /// `expr = 0`; returns the constraint index.
    pub fn add_eq(&mut self, name: &str, expr: AffineExpr) -> Result<usize> {
        self.add_constraint(name, ConstraintKind::Zero, expr)
    }

    /// `tr_traced(var) = rhs`.
    pub fn constrain_marginal_equals(
        &mut self,
        name: &str,
        var: Var,
        traced: &[&str],
        rhs: AffineExpr,
    ) -> Result<usize> {
        let lhs = self.expr(var).partial_trace(traced)?;
        self.add_eq(name, lhs.sub(rhs)?)
    }

    fn var_offsets(&self) -> (Vec<usize>, usize) {
        let mut offsets = Vec::with_capacity(self.vars.len());
        let mut n = 0;
        for v in &self.vars {
            offsets.push(n);
            n += match &v.kind {
                VarKind::Hermitian(l) => l.total_dim() * l.total_dim(),
                VarKind::Scalar => 1,
            };
        }
        (offsets, n)
    }

    /// Images of every real coordinate under the linear part of `expr`,
    /// keyed by coordinate index.
    fn coordinate_images(
        &self,
        expr: &AffineExpr,
        offsets: &[usize],
    ) -> Result<BTreeMap<usize, Entries>> {
        let mut images: BTreeMap<usize, Entries> = BTreeMap::new();
        let i = C64::new(0.0, 1.0);
        for term in expr.terms() {
            match term {
                Term::Scalar { var, coeff } => {
                    images
                        .entry(offsets[var.0])
                        .or_default()
                        .extend(dense_to_entries(coeff));
                }
                Term::Matrix { var, map } => {
                    let n = map.input().total_dim();
                    let base = offsets[var.0];
                    let unit =
                        |a: usize, b: usize| map.apply_sparse(vec![(a, b, C64::new(1.0, 0.0))]);
                    for a in 0..n {
                        images
                            .entry(base + a * n + a)
                            .or_default()
                            .extend(unit(a, a));
                        for b in a + 1..n {
                            let ab = unit(a, b);
                            let ba = unit(b, a);
                            let re = images.entry(base + a * n + b).or_default();
                            re.extend(ab.iter().copied());
                            re.extend(ba.iter().copied());
                            let im = images.entry(base + b * n + a).or_default();
                            im.extend(ab.iter().map(|&(r, c, v)| (r, c, v * i)));
                            im.extend(ba.iter().map(|&(r, c, v)| (r, c, -v * i)));
                        }
                    }
                }
            }
        }
        let mut out = BTreeMap::new();
        for (k, e) in images {
            let e: Entries = merge(e)
                .into_iter()
                .filter(|&(_, _, v)| v.norm() > DROP_TOL)
                .collect();
            if e.is_empty() {
                continue;
            }
            check_hermitian_entries(&e)?;
            out.insert(k, e);
        }
        Ok(out)
    }

    /// Lowers the problem to real symmetric form.
    pub fn compile(&self) -> Result<CompiledProblem> {
        let (offsets, n_vars) = self.var_offsets();
        if n_vars == 0 {
            return Err(Error::MalformedProblem("problem has no variables".into()));
        }
        let sign = match self.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut objective = vec![0.0; n_vars];
        for (k, e) in self.coordinate_images(&self.objective, &offsets)? {
            objective[k] = sign * e.iter().map(|&(_, _, v)| v.re).sum::<f64>();
        }
        let objective_constant = sign * self.objective.constant_matrix()[(0, 0)].re;

        let mut equalities = Vec::new();
        let mut blocks = Vec::new();
        let mut block_of = Vec::with_capacity(self.constraints.len());
        for con in &self.constraints {
            let constant = con.expr.constant_matrix();
            if hermitian_deviation(constant) > HERMITIAN_TOL * (1.0 + constant.norm()) {
                return Err(Error::MalformedProblem(format!(
                    "constant part of `{}` is not Hermitian",
                    con.name
                )));
            }
            let images = self.coordinate_images(&con.expr, &offsets)?;
            match con.kind {
                ConstraintKind::Psd => {
                    let d = constant.nrows();
                    let mut terms = Vec::with_capacity(images.len());
                    for (k, e) in images {
                        terms.push((k, embed_sparse(&e, d)));
                    }
                    block_of.push(Some(blocks.len()));
                    blocks.push(LmiBlock {
                        side: 2 * d,
                        constant: embed_hermitian(constant),
                        terms,
                    });
                }
                ConstraintKind::Zero => {
                    block_of.push(None);
                    // One real row per Hermitian coordinate (r <= c).
                    let mut rows: BTreeMap<(usize, usize, bool), Vec<(usize, f64)>> =
                        BTreeMap::new();
                    for (k, e) in images {
                        for &(r, c, v) in &e {
                            if r == c {
                                rows.entry((r, c, false)).or_default().push((k, v.re));
                            } else if r < c {
                                rows.entry((r, c, false)).or_default().push((k, v.re));
                                rows.entry((r, c, true)).or_default().push((k, v.im));
                            }
                        }
                    }
                    let d = constant.nrows();
                    for c in 0..d {
                        for r in 0..=c {
                            let v = constant[(r, c)];
                            for imag in [false, true] {
                                if imag && r == c {
                                    continue;
                                }
                                let rhs = -if imag { v.im } else { v.re };
                                let coeffs: Vec<(usize, f64)> = rows
                                    .remove(&(r, c, imag))
                                    .unwrap_or_default()
                                    .into_iter()
                                    .filter(|&(_, a)| a.abs() > DROP_TOL)
                                    .collect();
                                if coeffs.is_empty() && rhs.abs() <= DROP_TOL {
                                    continue;
                                }
                                equalities.push(LinearEquality { coeffs, rhs });
                            }
                        }
                    }
                }
            }
        }
        Ok(CompiledProblem {
            real: RealConicProblem {
                n_vars,
                objective,
                objective_constant,
                equalities,
                blocks,
            },
            offsets,
            vars: self.vars.clone(),
            block_of,
            sense: self.sense,
        })
    }

    /// Compiles and solves with `solver`.
    pub fn solve(&self, solver: &dyn ConicSolver) -> Result<ConicSolution> {
        let compiled = self.compile()?;
        let report = solver.solve(&compiled.real)?;
        Ok(ConicSolution { compiled, report })
    }

    /// Human-readable summary of variables and constraints.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:?}", self.sense);
        for v in &self.vars {
            match &v.kind {
                VarKind::Hermitian(l) => {
                    let _ = writeln!(s, "var {} hermitian {l}", v.name);
                }
                VarKind::Scalar => {
                    let _ = writeln!(s, "var {} scalar", v.name);
                }
            }
        }
        for c in &self.constraints {
            let kind = match c.kind {
                ConstraintKind::Psd => ">= 0",
                ConstraintKind::Zero => "== 0",
            };
            let _ = writeln!(
                s,
                "{} {kind} on {} ({} terms)",
                c.name,
                c.expr.layout(),
                c.expr.terms().len()
            );
        }
        s
    }
}

fn check_hermitian_entries(e: &Entries) -> Result<()> {
    let lookup: BTreeMap<(usize, usize), C64> = e.iter().map(|&(r, c, v)| ((r, c), v)).collect();
    let scale = e.iter().map(|&(_, _, v)| v.norm()).fold(0.0, f64::max);
    for (&(r, c), &v) in &lookup {
        let mirror = lookup.get(&(c, r)).copied().unwrap_or_default();
        if (v - mirror.conj()).norm() > HERMITIAN_TOL * (1.0 + scale) {
            return Err(Error::MalformedProblem(
                "affine map does not preserve Hermiticity".into(),
            ));
        }
    }
    Ok(())
}

/// Upper triangle of the real embedding of a Hermitian matrix of side `d`
/// given by its entries.
fn embed_sparse(e: &Entries, d: usize) -> SparseSymmetric {
    let mut out = SparseSymmetric::new(2 * d);
    let mut push = |i: usize, j: usize, v: f64| {
        if i <= j && v != 0.0 {
            out.entries.push((i, j, v));
        }
    };
    for &(r, c, v) in e {
        push(r, c, v.re);
        push(r, c + d, -v.im);
        push(r + d, c, v.im);
        push(r + d, c + d, v.re);
    }
    out
}

/// A [`ConicProblem`] lowered to real form, with the bookkeeping to map
/// solutions back.
#[derive(Clone, Debug)]
pub struct CompiledProblem {
    pub real: RealConicProblem,
    offsets: Vec<usize>,
    vars: Vec<VarInfo>,
    block_of: Vec<Option<usize>>,
    sense: Sense,
}

impl CompiledProblem {
    /// Reassembles the value of `var` from real coordinates `z`.
    pub fn value(&self, var: Var, z: &[f64]) -> VarValue {
        let base = self.offsets[var.0];
        match &self.vars[var.0].kind {
            VarKind::Scalar => VarValue::Scalar(z[base]),
            VarKind::Hermitian(l) => {
                let n = l.total_dim();
                VarValue::Matrix(CMatrix::from_fn(n, n, |r, c| {
                    use std::cmp::Ordering::*;
                    match r.cmp(&c) {
                        Equal => C64::new(z[base + r * n + r], 0.0),
                        Less => C64::new(z[base + r * n + c], z[base + c * n + r]),
                        Greater => C64::new(z[base + c * n + r], -z[base + r * n + c]),
                    }
                }))
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConicSolution {
    pub compiled: CompiledProblem,
    pub report: SolveReport,
}

impl ConicSolution {
    pub fn status(&self) -> SolveStatus {
        self.report.status
    }

    fn sign(&self) -> f64 {
        match self.compiled.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        }
    }

    /// Objective at the returned point, in the problem's own sense.
    pub fn objective_value(&self) -> f64 {
        self.sign() * self.report.primal_value
    }

    /// Lagrange dual bound, in the problem's own sense.
    pub fn dual_bound(&self) -> f64 {
        self.sign() * self.report.dual_value
    }

    pub fn matrix(&self, var: Var) -> Result<HermitianOperator> {
        match (
            &self.compiled.vars[var.0].kind,
            self.compiled.value(var, &self.report.primal_solution),
        ) {
            (VarKind::Hermitian(l), VarValue::Matrix(m)) => HermitianOperator::new(l.clone(), m),
            _ => Err(Error::MalformedProblem(format!(
                "`{}` is not a matrix variable",
                self.compiled.vars[var.0].name
            ))),
        }
    }

    pub fn scalar(&self, var: Var) -> Result<f64> {
        match self.compiled.value(var, &self.report.primal_solution) {
            VarValue::Scalar(s) => Ok(s),
            VarValue::Matrix(_) => Err(Error::MalformedProblem(format!(
                "`{}` is not a scalar variable",
                self.compiled.vars[var.0].name
            ))),
        }
    }

    /// Evaluates an expression of the problem at the returned point.
    pub fn evaluate(&self, expr: &AffineExpr) -> CMatrix {
        expr.evaluate(|v| self.compiled.value(v, &self.report.primal_solution))
    }

    /// Complex PSD multiplier `Z` of constraint `index`, normalised so that
    /// `tr(Z H)` equals the real pairing with the embedded block.
    pub fn psd_multiplier(&self, index: usize) -> Option<CMatrix> {
        let b = (*self.compiled.block_of.get(index)?)?;
        let s: &DMatrix<f64> = &self.report.dual_solution[b];
        let d = s.nrows() / 2;
        Some(CMatrix::from_fn(d, d, |r, c| {
            C64::new(s[(r, c)] + s[(r + d, c + d)], s[(r + d, c)] - s[(r, c + d)])
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::InteriorPointSolver;
    use crate::tensor::SystemLayout;

    fn lay(spec: &[(&str, usize)]) -> SystemLayout {
        SystemLayout::new(spec.iter().copied()).unwrap()
    }

    fn pauli_y() -> CMatrix {
        let i = C64::new(0.0, 1.0);
        CMatrix::from_row_slice(2, 2, &[C64::default(), -i, i, C64::default()])
    }

    #[test]
    fn embedding_of_identity_and_pauli_y() {
        let e = embed_hermitian(&CMatrix::identity(2, 2));
        assert_eq!(e, DMatrix::identity(4, 4));
        let mut ev: Vec<f64> = embed_hermitian(&pauli_y())
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn coordinates_round_trip() {
        let mut p = ConicProblem::new();
        let x = p.hermitian("X", lay(&[("A", 2)])).unwrap();
        p.minimize(p.expr(x).partial_trace(&["A"]).unwrap())
            .unwrap();
        let compiled = p.compile().unwrap();
        let z = [1.0, 0.3, -0.7, 2.0];
        match compiled.value(x, &z) {
            VarValue::Matrix(m) => {
                assert_eq!(m[(0, 1)], C64::new(0.3, -0.7));
                assert_eq!(m[(1, 0)], C64::new(0.3, 0.7));
                assert_eq!(m[(1, 1)], C64::new(2.0, 0.0));
            }
            other => panic!("unexpected {other:?}"),
        }
        // trace objective touches only the diagonal coordinates
        assert_eq!(compiled.real.objective, vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn max_eigenvalue_of_complex_matrix() {
        // min t s.t. tI - σ_y ⪰ 0 has value 1.
        let mut p = ConicProblem::new();
        let t = p.scalar("t").unwrap();
        let l = lay(&[("A", 2)]);
        let sy = HermitianOperator::new(l.clone(), pauli_y()).unwrap();
        let lhs = p
            .expr(t)
            .tensor_right(&HermitianOperator::identity(l))
            .unwrap()
            .sub_constant(&sy)
            .unwrap();
        let idx = p.add_psd("dominate", lhs).unwrap();
        p.minimize(p.expr(t)).unwrap();
        let sol = p.solve(&InteriorPointSolver::default()).unwrap();
        assert!(sol.status().is_usable());
        assert!((sol.objective_value() - 1.0).abs() < 1e-7);
        // The multiplier is the projector onto the top eigenvector of σ_y.
        let z = sol.psd_multiplier(idx).unwrap();
        let pairing = (z.clone() * pauli_y()).trace().re;
        assert!((pairing - 1.0).abs() < 1e-6, "{pairing}");
        assert!((z.trace().re - 1.0).abs() < 1e-6);
    }

    #[test]
    fn marginal_constraint_fixes_partial_trace() {
        // max tr(ρ P) over states ρ_AB with ρ_A = diag(0.75, 0.25), P = |00><00|.
        let l = lay(&[("A", 2), ("B", 2)]);
        let mut p = ConicProblem::new();
        let rho = p.hermitian("rho", l.clone()).unwrap();
        p.add_psd("positive", p.expr(rho)).unwrap();
        let target =
            HermitianOperator::from_real_diagonal(lay(&[("A", 2)]), &[0.75, 0.25]).unwrap();
        p.constrain_marginal_equals("marginal", rho, &["B"], AffineExpr::constant(&target))
            .unwrap();
        let proj = HermitianOperator::from_real_diagonal(l, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        // X ↦ P·X is not Hermitian-preserving: compilation must reject it.
        let mut bad = p.clone();
        let one_sided = p
            .expr(rho)
            .multiply(Some(proj.matrix().clone()), None)
            .unwrap();
        bad.add_psd("one-sided", one_sided).unwrap();
        assert!(matches!(bad.compile(), Err(Error::MalformedProblem(_))));
        // Use the Hermitian form P ρ P instead.
        let obj = p
            .expr(rho)
            .multiply(Some(proj.matrix().clone()), Some(proj.matrix().clone()))
            .unwrap()
            .partial_trace(&["A", "B"])
            .unwrap();
        p.maximize(obj).unwrap();
        let sol = p.solve(&InteriorPointSolver::default()).unwrap();
        assert!((sol.objective_value() - 0.75).abs() < 1e-7);
        let r = sol.matrix(rho).unwrap();
        assert!(
            r.partial_trace(&["B"])
                .unwrap()
                .max_abs_diff(&target)
                .unwrap()
                < 1e-7
        );
    }

    #[test]
    fn mismatched_layouts_are_rejected() {
        let mut p = ConicProblem::new();
        let x = p.hermitian("X", lay(&[("A", 2)])).unwrap();
        let y = p.hermitian("Y", lay(&[("B", 2)])).unwrap();
        assert!(matches!(
            p.expr(x).add(p.expr(y)),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(p.minimize(p.expr(x)).is_err());
        assert!(p.hermitian("X", lay(&[("C", 2)])).is_err());
    }

    #[test]
    fn expressions_align_by_label() {
        let mut p = ConicProblem::new();
        let l = lay(&[("A", 2), ("B", 3)]);
        let x = p.hermitian("X", l.clone()).unwrap();
        let swapped = p.expr(x).permute(&["B", "A"]).unwrap();
        let sum = p.expr(x).add(swapped).unwrap();
        assert_eq!(sum.layout(), &l);
        let m = CMatrix::from_fn(6, 6, |r, c| C64::new((r + c) as f64, r as f64 - c as f64));
        let v = sum.evaluate(|_| VarValue::Matrix(m.clone()));
        assert!((v - m * C64::new(2.0, 0.0)).norm() < 1e-12);
    }
}
