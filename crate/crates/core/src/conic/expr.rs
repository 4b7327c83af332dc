//! Affine matrix expressions over Hermitian and scalar variables.

use nalgebra::DMatrix;

use super::Var;
use crate::error::{Error, Result};
use crate::tensor::{
    partial_trace_raw, permutation_index_map, permute_raw, split_index_map, CMatrix,
    HermitianOperator, SystemLayout, C64,
};

/// Sparse complex matrix entries `(row, col, value)`.
pub(crate) type Entries = Vec<(usize, usize, C64)>;

/// One linear step of an [`AffineMap`].
#[derive(Clone, Debug, PartialEq)]
pub enum AffineOp {
    /// `X ↦ s·X`.
    Scale(f64),
    /// `X ↦ tr_labels X`.
    PartialTrace(Vec<String>),
    /// `X ↦ C ⊗ X`.
    TensorLeft(HermitianOperator),
    /// `X ↦ X ⊗ C`.
    TensorRight(HermitianOperator),
    /// Reorders the subsystems to the given label order.
    Permute(Vec<String>),
    /// `X ↦ L·X·R`; a missing factor is the identity. Only the complete map
    /// needs to preserve Hermiticity (checked at compile time).
    Multiply {
        left: Option<CMatrix>,
        right: Option<CMatrix>,
    },
    /// `X ↦ M·X·M†` for a possibly rectangular `M` whose rows index the
    /// given output layout.
    Congruence { map: CMatrix, output: SystemLayout },
}

fn labels(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

impl AffineOp {
    /// Layout of the image of an operator on `input`.
    pub fn output_layout(&self, input: &SystemLayout) -> Result<SystemLayout> {
        match self {
            AffineOp::Scale(_) => Ok(input.clone()),
            AffineOp::PartialTrace(l) => {
                input.mask(&labels(l))?;
                input.without(&labels(l))
            }
            AffineOp::TensorLeft(c) => c.layout().concat(input),
            AffineOp::TensorRight(c) => input.concat(c.layout()),
            AffineOp::Permute(order) => input.reordered(&labels(order)),
            AffineOp::Multiply { left, right } => {
                let d = input.total_dim();
                for m in [left, right].into_iter().flatten() {
                    if m.nrows() != d || m.ncols() != d {
                        return Err(Error::DimensionMismatch(format!(
                            "{}x{} factor for an operator on {input}",
                            m.nrows(),
                            m.ncols()
                        )));
                    }
                }
                Ok(input.clone())
            }
            AffineOp::Congruence { map, output } => {
                if map.ncols() != input.total_dim() || map.nrows() != output.total_dim() {
                    return Err(Error::DimensionMismatch(format!(
                        "{}x{} congruence from {input} to {output}",
                        map.nrows(),
                        map.ncols()
                    )));
                }
                Ok(output.clone())
            }
        }
    }

    pub(crate) fn apply_dense(&self, input: &SystemLayout, m: &CMatrix) -> CMatrix {
        match self {
            AffineOp::Scale(s) => m * C64::new(*s, 0.0),
            AffineOp::PartialTrace(l) => {
                let mask = input.mask(&labels(l)).expect("validated");
                partial_trace_raw(m, &input.dims(), &mask)
            }
            AffineOp::TensorLeft(c) => c.matrix().kronecker(m),
            AffineOp::TensorRight(c) => m.kronecker(c.matrix()),
            AffineOp::Permute(order) => {
                let perm = input.permutation_to(&labels(order)).expect("validated");
                permute_raw(m, &input.dims(), &perm)
            }
            AffineOp::Multiply { left, right } => {
                let mut out = m.clone();
                if let Some(l) = left {
                    out = l * out;
                }
                if let Some(r) = right {
                    out *= r;
                }
                out
            }
            AffineOp::Congruence { map, .. } => map * m * map.adjoint(),
        }
    }

    /// Same as [`AffineOp::apply_dense`] on sparse entries (duplicates merged).
    pub(crate) fn apply_sparse(&self, input: &SystemLayout, m: &Entries) -> Entries {
        let out: Entries = match self {
            AffineOp::Scale(s) => m.iter().map(|&(r, c, v)| (r, c, v * *s)).collect(),
            AffineOp::PartialTrace(l) => {
                let mask = input.mask(&labels(l)).expect("validated");
                let split = split_index_map(&input.dims(), &mask);
                m.iter()
                    .filter_map(|&(r, c, v)| {
                        let (kr, tr) = split[r];
                        let (kc, tc) = split[c];
                        (tr == tc).then_some((kr, kc, v))
                    })
                    .collect()
            }
            AffineOp::TensorLeft(cop) => {
                let cm = cop.matrix();
                let n = input.total_dim();
                let mut out = Vec::new();
                for j in 0..cm.ncols() {
                    for i in 0..cm.nrows() {
                        let cij = cm[(i, j)];
                        if cij != C64::new(0.0, 0.0) {
                            out.extend(m.iter().map(|&(r, c, v)| (i * n + r, j * n + c, cij * v)));
                        }
                    }
                }
                out
            }
            AffineOp::TensorRight(cop) => {
                let cm = cop.matrix();
                let k = cm.nrows();
                let mut out = Vec::new();
                for &(r, c, v) in m {
                    for j in 0..k {
                        for i in 0..k {
                            let cij = cm[(i, j)];
                            if cij != C64::new(0.0, 0.0) {
                                out.push((r * k + i, c * k + j, v * cij));
                            }
                        }
                    }
                }
                out
            }
            AffineOp::Permute(order) => {
                let perm = input.permutation_to(&labels(order)).expect("validated");
                let map = permutation_index_map(&input.dims(), &perm);
                let mut inv = vec![0usize; map.len()];
                for (new, &old) in map.iter().enumerate() {
                    inv[old] = new;
                }
                m.iter().map(|&(r, c, v)| (inv[r], inv[c], v)).collect()
            }
            AffineOp::Multiply { left, right } => {
                let mut cur = m.clone();
                if let Some(l) = left {
                    let mut next = Vec::new();
                    for &(r, c, v) in &cur {
                        for i in 0..l.nrows() {
                            let lir = l[(i, r)];
                            if lir != C64::new(0.0, 0.0) {
                                next.push((i, c, lir * v));
                            }
                        }
                    }
                    cur = merge(next);
                }
                if let Some(rm) = right {
                    let mut next = Vec::new();
                    for &(r, c, v) in &cur {
                        for j in 0..rm.ncols() {
                            let rcj = rm[(c, j)];
                            if rcj != C64::new(0.0, 0.0) {
                                next.push((r, j, v * rcj));
                            }
                        }
                    }
                    cur = next;
                }
                cur
            }
            AffineOp::Congruence { map, .. } => {
                let mut out = Vec::new();
                for &(r, c, v) in m {
                    for j in 0..map.nrows() {
                        let mjc = map[(j, c)].conj() * v;
                        if mjc == C64::new(0.0, 0.0) {
                            continue;
                        }
                        for i in 0..map.nrows() {
                            let mir = map[(i, r)];
                            if mir != C64::new(0.0, 0.0) {
                                out.push((i, j, mir * mjc));
                            }
                        }
                    }
                }
                out
            }
        };
        merge(out)
    }

    /// Hilbert–Schmidt adjoint applied to `y` (an operator on the output layout).
    pub(crate) fn adjoint_dense(&self, input: &SystemLayout, y: &CMatrix) -> CMatrix {
        match self {
            AffineOp::Scale(s) => y * C64::new(*s, 0.0),
            AffineOp::PartialTrace(l) => {
                let kept = input.without(&labels(l)).expect("validated");
                let traced = input.only(&labels(l)).expect("validated");
                let widened =
                    y.kronecker(&CMatrix::identity(traced.total_dim(), traced.total_dim()));
                let joint = kept.concat(&traced).expect("disjoint");
                let perm = joint.permutation_to(&input.labels()).expect("same labels");
                permute_raw(&widened, &joint.dims(), &perm)
            }
            AffineOp::TensorLeft(c) => {
                let k = c.dim();
                let n = input.total_dim();
                let prod = c.matrix().kronecker(&CMatrix::identity(n, n)) * y;
                let mut mask = vec![true];
                mask.extend(std::iter::repeat_n(false, 1));
                partial_trace_raw(&prod, &[k, n], &mask)
            }
            AffineOp::TensorRight(c) => {
                let k = c.dim();
                let n = input.total_dim();
                let prod = CMatrix::identity(n, n).kronecker(c.matrix()) * y;
                partial_trace_raw(&prod, &[n, k], &[false, true])
            }
            AffineOp::Permute(order) => {
                let out_layout = input.reordered(&labels(order)).expect("validated");
                let back = out_layout
                    .permutation_to(&input.labels())
                    .expect("same labels");
                permute_raw(y, &out_layout.dims(), &back)
            }
            AffineOp::Multiply { left, right } => {
                let mut out = y.clone();
                if let Some(l) = left {
                    out = l.adjoint() * out;
                }
                if let Some(r) = right {
                    out *= r.adjoint();
                }
                out
            }
            AffineOp::Congruence { map, .. } => map.adjoint() * y * map,
        }
    }
}

/// Sorts entries and sums duplicates, dropping exact zeros.
pub(crate) fn merge(mut e: Entries) -> Entries {
    e.sort_unstable_by_key(|&(r, c, _)| (c, r));
    let mut out: Entries = Vec::with_capacity(e.len());
    for (r, c, v) in e {
        match out.last_mut() {
            Some(last) if last.0 == r && last.1 == c => last.2 += v,
            _ => out.push((r, c, v)),
        }
    }
    out.retain(|&(_, _, v)| v != C64::new(0.0, 0.0));
    out
}

pub(crate) fn dense_to_entries(m: &CMatrix) -> Entries {
    let mut out = Vec::new();
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            let v = m[(r, c)];
            if v != C64::new(0.0, 0.0) {
                out.push((r, c, v));
            }
        }
    }
    out
}

/// A composable linear map between operators on labelled spaces.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    input: SystemLayout,
    /// Each op together with the layout it acts on.
    steps: Vec<(AffineOp, SystemLayout)>,
    output: SystemLayout,
}

impl AffineMap {
    pub fn identity(layout: SystemLayout) -> Self {
        Self {
            input: layout.clone(),
            steps: Vec::new(),
            output: layout,
        }
    }

    pub fn then(mut self, op: AffineOp) -> Result<Self> {
        let out = op.output_layout(&self.output)?;
        let input = std::mem::replace(&mut self.output, out);
        self.steps.push((op, input));
        Ok(self)
    }

    pub fn input(&self) -> &SystemLayout {
        &self.input
    }

    pub fn output(&self) -> &SystemLayout {
        &self.output
    }

    pub fn ops(&self) -> impl Iterator<Item = &AffineOp> {
        self.steps.iter().map(|(op, _)| op)
    }

    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        self.steps
            .iter()
            .fold(x.clone(), |acc, (op, layout)| op.apply_dense(layout, &acc))
    }

    pub(crate) fn apply_sparse(&self, x: Entries) -> Entries {
        self.steps
            .iter()
            .fold(x, |acc, (op, layout)| op.apply_sparse(layout, &acc))
    }

    /// Hilbert–Schmidt adjoint: `tr(Y† A(X)) = tr(A*(Y)† X)`.
    pub fn adjoint(&self, y: &CMatrix) -> CMatrix {
        self.steps
            .iter()
            .rev()
            .fold(y.clone(), |acc, (op, layout)| {
                op.adjoint_dense(layout, &acc)
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Term {
    /// `map(var)` for a Hermitian variable.
    Matrix { var: Var, map: AffineMap },
    /// `var · coeff` for a scalar variable.
    Scalar { var: Var, coeff: CMatrix },
}

/// `constant + Σ terms`, an affine function of the problem variables with
/// values in the operators on `layout`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineExpr {
    layout: SystemLayout,
    constant: CMatrix,
    terms: Vec<Term>,
}

impl AffineExpr {
    pub(crate) fn matrix_var(var: Var, layout: SystemLayout) -> Self {
        let d = layout.total_dim();
        Self {
            layout: layout.clone(),
            constant: CMatrix::zeros(d, d),
            terms: vec![Term::Matrix {
                var,
                map: AffineMap::identity(layout),
            }],
        }
    }

    /// A scalar variable as a 1×1 expression on the empty layout.
    pub(crate) fn scalar_var(var: Var) -> Self {
        Self {
            layout: SystemLayout::empty(),
            constant: CMatrix::zeros(1, 1),
            terms: vec![Term::Scalar {
                var,
                coeff: CMatrix::identity(1, 1),
            }],
        }
    }

    pub fn constant(op: &HermitianOperator) -> Self {
        Self {
            layout: op.layout().clone(),
            constant: op.matrix().clone(),
            terms: Vec::new(),
        }
    }

    /// The real constant `v` as a 1×1 expression.
    pub fn real(v: f64) -> Self {
        Self {
            layout: SystemLayout::empty(),
            constant: CMatrix::from_element(1, 1, C64::new(v, 0.0)),
            terms: Vec::new(),
        }
    }

    pub fn zeros(layout: SystemLayout) -> Self {
        let d = layout.total_dim();
        Self {
            layout,
            constant: CMatrix::zeros(d, d),
            terms: Vec::new(),
        }
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub(crate) fn constant_matrix(&self) -> &CMatrix {
        &self.constant
    }

    pub(crate) fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn apply(mut self, op: AffineOp) -> Result<Self> {
        let out = op.output_layout(&self.layout)?;
        self.constant = op.apply_dense(&self.layout, &self.constant);
        for term in &mut self.terms {
            match term {
                Term::Matrix { map, .. } => {
                    *map = std::mem::replace(map, AffineMap::identity(SystemLayout::empty()))
                        .then(op.clone())?;
                }
                Term::Scalar { coeff, .. } => *coeff = op.apply_dense(&self.layout, coeff),
            }
        }
        self.layout = out;
        Ok(self)
    }

    pub fn scale(self, s: f64) -> Self {
        self.apply(AffineOp::Scale(s))
            .expect("scaling preserves the layout")
    }

    pub fn partial_trace(self, traced: &[&str]) -> Result<Self> {
        if traced.is_empty() {
            return Ok(self);
        }
        self.apply(AffineOp::PartialTrace(
            traced.iter().map(|s| s.to_string()).collect(),
        ))
    }

    /// `c ⊗ self`.
    pub fn tensor_left(self, c: &HermitianOperator) -> Result<Self> {
        self.apply(AffineOp::TensorLeft(c.clone()))
    }

    /// `self ⊗ c`.
    pub fn tensor_right(self, c: &HermitianOperator) -> Result<Self> {
        self.apply(AffineOp::TensorRight(c.clone()))
    }

    pub fn permute(self, order: &[&str]) -> Result<Self> {
        if self.layout.labels() == order {
            return Ok(self);
        }
        self.apply(AffineOp::Permute(
            order.iter().map(|s| s.to_string()).collect(),
        ))
    }

    /// `left · self · right`.
    pub fn multiply(self, left: Option<CMatrix>, right: Option<CMatrix>) -> Result<Self> {
        self.apply(AffineOp::Multiply { left, right })
    }

    /// `M · self · M†` with the rows of `M` indexing `output`.
    pub fn congruence(self, map: CMatrix, output: SystemLayout) -> Result<Self> {
        self.apply(AffineOp::Congruence { map, output })
    }

    /// Reorders to the label order of `layout`, which must hold the same
    /// labelled subsystems.
    pub fn align_to(self, layout: &SystemLayout) -> Result<Self> {
        if &self.layout == layout {
            return Ok(self);
        }
        if !self.layout.same_label_set(layout) {
            return Err(Error::DimensionMismatch(format!(
                "expression on {} cannot be combined with one on {layout}",
                self.layout
            )));
        }
        self.permute(&layout.labels())
    }

    #[allow(clippy::should_implement_trait)] // fallible, so not `std::ops::Add`
    pub fn add(mut self, other: AffineExpr) -> Result<Self> {
        let other = other.align_to(&self.layout)?;
        self.constant += other.constant;
        self.terms.extend(other.terms);
        Ok(self)
    }

    #[allow(clippy::should_implement_trait)] // fallible, so not `std::ops::Sub`
    pub fn sub(self, other: AffineExpr) -> Result<Self> {
        self.add(other.scale(-1.0))
    }

    pub fn add_constant(self, op: &HermitianOperator) -> Result<Self> {
        self.add(AffineExpr::constant(op))
    }

    pub fn sub_constant(self, op: &HermitianOperator) -> Result<Self> {
        self.sub(AffineExpr::constant(op))
    }

    /// Evaluates with the given variable values.
    pub fn evaluate(&self, value_of: impl Fn(Var) -> VarValue) -> CMatrix {
        let mut out = self.constant.clone();
        for term in &self.terms {
            match term {
                Term::Matrix { var, map } => match value_of(*var) {
                    VarValue::Matrix(m) => out += map.apply(&m),
                    VarValue::Scalar(_) => panic!("matrix term bound to a scalar value"),
                },
                Term::Scalar { var, coeff } => match value_of(*var) {
                    VarValue::Scalar(s) => out += coeff * C64::new(s, 0.0),
                    VarValue::Matrix(_) => panic!("scalar term bound to a matrix value"),
                },
            }
        }
        out
    }
}

/// The value of a variable in a solution.
#[derive(Clone, Debug, PartialEq)]
pub enum VarValue {
    Scalar(f64),
    Matrix(CMatrix),
}

/// Real symmetric embedding `[[Re H, −Im H], [Im H, Re H]]` of a complex matrix.
pub fn embed_hermitian(h: &CMatrix) -> DMatrix<f64> {
    let n = h.nrows();
    DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let v = h[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => v.re,
            (true, false) => -v.im,
            (false, true) => v.im,
        }
    })
}
