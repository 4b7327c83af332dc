//! Dense complex linear algebra over labeled tensor-product spaces.
//!
//! Composite basis states are ordered row-major: the index of `|i_1 ... i_k>`
//! is the mixed-radix number `i_1 i_2 ... i_k` over the subsystem dimensions
//! in layout order, so the last subsystem varies fastest.

use std::fmt;

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Hermiticity tolerance applied when wrapping a matrix.
pub const TOL_HERM: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Subsystem {
    pub label: String,
    pub dim: usize,
}

/// Ordered list of labeled subsystems. An empty layout is the trivial
/// one-dimensional space (scalars).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SystemLayout {
    systems: Vec<Subsystem>,
}

impl SystemLayout {
    pub fn new<S: Into<String>>(systems: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let systems: Vec<Subsystem> = systems
            .into_iter()
            .map(|(label, dim)| Subsystem {
                label: label.into(),
                dim,
            })
            .collect();
        for (i, s) in systems.iter().enumerate() {
            if s.dim == 0 {
                return Err(Error::InvalidLayout(format!(
                    "subsystem `{}` has dimension 0",
                    s.label
                )));
            }
            if systems[..i].iter().any(|t| t.label == s.label) {
                return Err(Error::InvalidLayout(format!(
                    "duplicate label `{}`",
                    s.label
                )));
            }
        }
        Ok(Self { systems })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn systems(&self) -> &[Subsystem] {
        &self.systems
    }

    pub fn len(&self) -> usize {
        self.systems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.systems.is_empty()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.systems.iter().map(|s| s.label.as_str()).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.systems.iter().map(|s| s.dim).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.systems.iter().map(|s| s.dim).product()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.systems.iter().position(|s| s.label == label)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.position(label).is_some()
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        self.position(label)
            .map(|p| self.systems[p].dim)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Concatenation `self ⊗ other`; labels must be disjoint.
    pub fn concat(&self, other: &SystemLayout) -> Result<Self> {
        if let Some(s) = other.systems.iter().find(|s| self.contains(&s.label)) {
            return Err(Error::LabelCollision(s.label.clone()));
        }
        let mut systems = self.systems.clone();
        systems.extend(other.systems.iter().cloned());
        Ok(Self { systems })
    }

    /// Sub-layout with the given labels removed, remaining order preserved.
    pub fn without(&self, labels: &[&str]) -> Result<Self> {
        self.check_labels(labels)?;
        Ok(Self {
            systems: self
                .systems
                .iter()
                .filter(|s| !labels.contains(&s.label.as_str()))
                .cloned()
                .collect(),
        })
    }

    /// Sub-layout keeping only the given labels, in layout order.
    pub fn only(&self, labels: &[&str]) -> Result<Self> {
        self.check_labels(labels)?;
        Ok(Self {
            systems: self
                .systems
                .iter()
                .filter(|s| labels.contains(&s.label.as_str()))
                .cloned()
                .collect(),
        })
    }

    /// The layout reordered to `order`, which must be a permutation of the labels.
    pub fn reordered(&self, order: &[&str]) -> Result<Self> {
        let perm = self.permutation_to(order)?;
        Ok(Self {
            systems: perm.iter().map(|&p| self.systems[p].clone()).collect(),
        })
    }

    /// Renames labels according to `(from, to)` pairs; dims are kept.
    pub fn relabeled(&self, renames: &[(&str, &str)]) -> Result<Self> {
        for (from, _) in renames {
            if !self.contains(from) {
                return Err(Error::UnknownLabel(from.to_string()));
            }
        }
        Self::new(self.systems.iter().map(|s| {
            let label = renames
                .iter()
                .find(|(from, _)| *from == s.label)
                .map(|(_, to)| to.to_string())
                .unwrap_or_else(|| s.label.clone());
            (label, s.dim)
        }))
    }

    pub fn same_label_set(&self, other: &SystemLayout) -> bool {
        self.len() == other.len() && self.systems.iter().all(|s| other.systems.contains(s))
    }

    /// `perm[new_position] = old_position` for the reordering to `order`.
    pub(crate) fn permutation_to(&self, order: &[&str]) -> Result<Vec<usize>> {
        let not_perm = || Error::NotPermutation(order.iter().map(|s| s.to_string()).collect());
        if order.len() != self.len() {
            return Err(not_perm());
        }
        let mut perm = Vec::with_capacity(order.len());
        for label in order {
            let p = self.position(label).ok_or_else(not_perm)?;
            if perm.contains(&p) {
                return Err(not_perm());
            }
            perm.push(p);
        }
        Ok(perm)
    }

    pub(crate) fn mask(&self, labels: &[&str]) -> Result<Vec<bool>> {
        self.check_labels(labels)?;
        Ok(self
            .systems
            .iter()
            .map(|s| labels.contains(&s.label.as_str()))
            .collect())
    }

    fn check_labels(&self, labels: &[&str]) -> Result<()> {
        match labels.iter().find(|l| !self.contains(l)) {
            Some(l) => Err(Error::UnknownLabel(l.to_string())),
            None => Ok(()),
        }
    }
}

impl fmt::Display for SystemLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, s) in self.systems.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}:{}", s.label, s.dim)?;
        }
        write!(f, ")")
    }
}

fn digits(mut index: usize, dims: &[usize], out: &mut [usize]) {
    for k in (0..dims.len()).rev() {
        out[k] = index % dims[k];
        index /= dims[k];
    }
}

fn compose_index(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&d, &n)| acc * n + d)
}

/// Partial trace of a general square matrix over the subsystems flagged in `traced`.
pub fn partial_trace_raw(m: &CMatrix, dims: &[usize], traced: &[bool]) -> CMatrix {
    let keep_dims: Vec<usize> = dims
        .iter()
        .zip(traced)
        .filter(|(_, &t)| !t)
        .map(|(&d, _)| d)
        .collect();
    let tr_dims: Vec<usize> = dims
        .iter()
        .zip(traced)
        .filter(|(_, &t)| t)
        .map(|(&d, _)| d)
        .collect();
    let dk: usize = keep_dims.iter().product();
    let dt: usize = tr_dims.iter().product();

    // full[t * dk + k] is the composite index of (kept = k, traced = t)
    let mut full = vec![0usize; dk * dt];
    let mut kd = vec![0usize; keep_dims.len()];
    let mut td = vec![0usize; tr_dims.len()];
    let mut all = vec![0usize; dims.len()];
    for t in 0..dt {
        digits(t, &tr_dims, &mut td);
        for k in 0..dk {
            digits(k, &keep_dims, &mut kd);
            let (mut ik, mut it) = (0, 0);
            for (pos, &is_traced) in traced.iter().enumerate() {
                if is_traced {
                    all[pos] = td[it];
                    it += 1;
                } else {
                    all[pos] = kd[ik];
                    ik += 1;
                }
            }
            full[t * dk + k] = compose_index(&all, dims);
        }
    }

    let mut out = CMatrix::zeros(dk, dk);
    for t in 0..dt {
        let rows = &full[t * dk..(t + 1) * dk];
        for (j, &cj) in rows.iter().enumerate() {
            for (i, &ri) in rows.iter().enumerate() {
                out[(i, j)] += m[(ri, cj)];
            }
        }
    }
    out
}

/// For every composite index, its `(kept, traced)` index pair when the
/// subsystems flagged in `traced` are split off.
pub fn split_index_map(dims: &[usize], traced: &[bool]) -> Vec<(usize, usize)> {
    let total: usize = dims.iter().product();
    let mut d = vec![0usize; dims.len()];
    (0..total)
        .map(|idx| {
            digits(idx, dims, &mut d);
            let (mut kept, mut tr) = (0, 0);
            for ((&digit, &dim), &t) in d.iter().zip(dims).zip(traced) {
                if t {
                    tr = tr * dim + digit;
                } else {
                    kept = kept * dim + digit;
                }
            }
            (kept, tr)
        })
        .collect()
}

/// Index map for a subsystem permutation: `map[new_index] = old_index`,
/// where `perm[new_position] = old_position`.
pub fn permutation_index_map(dims: &[usize], perm: &[usize]) -> Vec<usize> {
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let total: usize = dims.iter().product();
    let mut nd = vec![0usize; dims.len()];
    let mut od = vec![0usize; dims.len()];
    (0..total)
        .map(|n| {
            digits(n, &new_dims, &mut nd);
            for (new_pos, &old_pos) in perm.iter().enumerate() {
                od[old_pos] = nd[new_pos];
            }
            compose_index(&od, dims)
        })
        .collect()
}

pub fn permute_raw(m: &CMatrix, dims: &[usize], perm: &[usize]) -> CMatrix {
    let map = permutation_index_map(dims, perm);
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(map[i], map[j])])
}

/// Transpose on the flagged subsystems only.
pub fn partial_transpose_raw(m: &CMatrix, dims: &[usize], mask: &[bool]) -> CMatrix {
    let n = m.nrows();
    let mut di = vec![0usize; dims.len()];
    let mut dj = vec![0usize; dims.len()];
    let mut out = CMatrix::zeros(n, n);
    for i in 0..n {
        digits(i, dims, &mut di);
        for j in 0..n {
            digits(j, dims, &mut dj);
            for (k, &t) in mask.iter().enumerate() {
                if t {
                    std::mem::swap(&mut di[k], &mut dj[k]);
                }
            }
            out[(compose_index(&di, dims), compose_index(&dj, dims))] = m[(i, j)];
            // restore the digits swapped above
            for (k, &t) in mask.iter().enumerate() {
                if t {
                    std::mem::swap(&mut di[k], &mut dj[k]);
                }
            }
        }
    }
    out
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn hermitian_min_eigenvalue(m: &CMatrix) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix is not square",
            m.nrows(),
            m.ncols()
        )));
    }
    let deviation = hermitian_deviation(m);
    if deviation > TOL_HERM * max_abs(m).max(1.0) {
        return Err(Error::NotHermitian { deviation });
    }
    if m.nrows() == 0 {
        return Ok(f64::INFINITY);
    }
    Ok(m.clone().symmetric_eigenvalues().min())
}

/// Dense Hermitian operator tagged with its subsystem layout.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    layout: SystemLayout,
    matrix: CMatrix,
}

impl HermitianOperator {
    /// Validates Hermiticity within [`TOL_HERM`] (relative to the largest entry)
    /// and symmetrizes.
    pub fn new(layout: SystemLayout, matrix: CMatrix) -> Result<Self> {
        Self::with_tolerance(layout, matrix, TOL_HERM)
    }

    pub fn with_tolerance(layout: SystemLayout, matrix: CMatrix, tol: f64) -> Result<Self> {
        let d = layout.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix for layout {layout} of dimension {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let deviation = hermitian_deviation(&matrix);
        if deviation > tol * max_abs(&matrix).max(1.0) {
            return Err(Error::NotHermitian { deviation });
        }
        let matrix = (&matrix + matrix.adjoint()) * C64::new(0.5, 0.0);
        Ok(Self { layout, matrix })
    }

    pub fn zeros(layout: SystemLayout) -> Self {
        let d = layout.total_dim();
        Self {
            layout,
            matrix: CMatrix::zeros(d, d),
        }
    }

    pub fn identity(layout: SystemLayout) -> Self {
        let d = layout.total_dim();
        Self {
            layout,
            matrix: CMatrix::identity(d, d),
        }
    }

    pub fn maximally_mixed(layout: SystemLayout) -> Self {
        let d = layout.total_dim();
        Self::identity(layout).scale(1.0 / d as f64)
    }

    pub fn from_real_diagonal(layout: SystemLayout, diag: &[f64]) -> Result<Self> {
        let d = layout.total_dim();
        if diag.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "{} diagonal entries for dimension {d}",
                diag.len()
            )));
        }
        let mut matrix = CMatrix::zeros(d, d);
        for (i, &v) in diag.iter().enumerate() {
            matrix[(i, i)] = C64::new(v, 0.0);
        }
        Ok(Self { layout, matrix })
    }

    /// `|v><v|` for a vector on the layout.
    pub fn projector(layout: SystemLayout, v: &DVector<C64>) -> Result<Self> {
        if v.len() != layout.total_dim() {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} on layout {layout}",
                v.len()
            )));
        }
        let matrix = v * v.adjoint();
        Ok(Self { layout, matrix })
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn scale(mut self, factor: f64) -> Self {
        self.matrix *= C64::new(factor, 0.0);
        self
    }

    fn aligned(&self, other: &HermitianOperator) -> Result<CMatrix> {
        if self.layout == other.layout {
            return Ok(other.matrix.clone());
        }
        if !self.layout.same_label_set(&other.layout) {
            return Err(Error::DimensionMismatch(format!(
                "layouts {} and {} differ",
                self.layout, other.layout
            )));
        }
        Ok(other.permute_systems(&self.layout.labels())?.matrix)
    }

    /// Sum, with `other` permuted into this operator's system order if needed.
    pub fn add(&self, other: &HermitianOperator) -> Result<Self> {
        let m = self.aligned(other)?;
        Ok(Self {
            layout: self.layout.clone(),
            matrix: &self.matrix + m,
        })
    }

    pub fn sub(&self, other: &HermitianOperator) -> Result<Self> {
        let m = self.aligned(other)?;
        Ok(Self {
            layout: self.layout.clone(),
            matrix: &self.matrix - m,
        })
    }

    /// Largest entrywise absolute difference after aligning system order.
    pub fn max_abs_diff(&self, other: &HermitianOperator) -> Result<f64> {
        let m = self.aligned(other)?;
        Ok(max_abs(&(&self.matrix - m)))
    }

    /// Kronecker product `self ⊗ other` with concatenated layout.
    pub fn tensor(&self, other: &HermitianOperator) -> Result<Self> {
        let layout = self.layout.concat(&other.layout)?;
        Ok(Self {
            layout,
            matrix: self.matrix.kronecker(&other.matrix),
        })
    }

    pub fn partial_trace(&self, traced: &[&str]) -> Result<Self> {
        let mask = self.layout.mask(traced)?;
        let layout = self.layout.without(traced)?;
        let matrix = partial_trace_raw(&self.matrix, &self.layout.dims(), &mask);
        Ok(Self { layout, matrix })
    }

    /// Reduced operator on `keep` (the complement is traced out).
    pub fn marginal(&self, keep: &[&str]) -> Result<Self> {
        let keep_layout = self.layout.only(keep)?;
        let traced: Vec<&str> = self
            .layout
            .labels()
            .into_iter()
            .filter(|l| !keep_layout.contains(l))
            .collect();
        self.partial_trace(&traced)
    }

    pub fn permute_systems(&self, order: &[&str]) -> Result<Self> {
        let perm = self.layout.permutation_to(order)?;
        let layout = self.layout.reordered(order)?;
        let matrix = permute_raw(&self.matrix, &self.layout.dims(), &perm);
        Ok(Self { layout, matrix })
    }

    pub fn partial_transpose(&self, labels: &[&str]) -> Result<Self> {
        let mask = self.layout.mask(labels)?;
        Ok(Self {
            layout: self.layout.clone(),
            matrix: partial_transpose_raw(&self.matrix, &self.layout.dims(), &mask),
        })
    }

    pub fn relabeled(&self, renames: &[(&str, &str)]) -> Result<Self> {
        Ok(Self {
            layout: self.layout.relabeled(renames)?,
            matrix: self.matrix.clone(),
        })
    }

    /// Link product over the labels shared by both operators. The result lives
    /// on this operator's private systems followed by `other`'s private systems.
    pub fn link_product(&self, other: &HermitianOperator) -> Result<Self> {
        let shared: Vec<&str> = self
            .layout
            .labels()
            .into_iter()
            .filter(|l| other.layout.contains(l))
            .collect();
        for l in &shared {
            if self.layout.dim_of(l)? != other.layout.dim_of(l)? {
                return Err(Error::DimensionMismatch(format!(
                    "shared subsystem `{l}` has different dimensions"
                )));
            }
        }
        let a_private = self.layout.without(&shared)?;
        let b_private = other.layout.without(&shared)?;
        let union = self.layout.concat(&b_private)?;

        let a_ext = self.tensor(&Self::identity(b_private.clone()))?;
        let b_ext = Self::identity(a_private.clone())
            .tensor(other)?
            .permute_systems(&union.labels())?;
        let a_pt = partial_transpose_raw(&a_ext.matrix, &union.dims(), &union.mask(&shared)?);
        let product = a_pt * &b_ext.matrix;
        let reduced = partial_trace_raw(&product, &union.dims(), &union.mask(&shared)?);
        Self::with_tolerance(a_private.concat(&b_private)?, reduced, 1e-8)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.dim() == 0 {
            return Vec::new();
        }
        let mut ev: Vec<f64> = self
            .matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// Orthonormal basis (as columns) of the eigenspaces whose eigenvalues
    /// exceed `rel_tol` times the largest eigenvalue magnitude.
    pub fn support_isometry(&self, rel_tol: f64) -> CMatrix {
        let eig = self.matrix.clone().symmetric_eigen();
        let scale = eig
            .eigenvalues
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        let keep: Vec<usize> = (0..self.dim())
            .filter(|&i| eig.eigenvalues[i] > rel_tol * scale)
            .collect();
        CMatrix::from_fn(self.dim(), keep.len(), |r, c| {
            eig.eigenvectors[(r, keep[c])]
        })
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(f64::INFINITY)
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol
    }
}

/// Unnormalized maximally entangled vector `Σ_i |i>|i>` on two isomorphic subsystems.
#[derive(Clone, Debug)]
pub struct MaxEntangledVector {
    layout: SystemLayout,
    entries: DVector<C64>,
}

impl MaxEntangledVector {
    pub fn new(first: &str, second: &str, dim: usize) -> Result<Self> {
        let layout = SystemLayout::new([(first, dim), (second, dim)])?;
        let mut entries = DVector::zeros(dim * dim);
        for i in 0..dim {
            entries[i * dim + i] = C64::new(1.0, 0.0);
        }
        Ok(Self { layout, entries })
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn entries(&self) -> &DVector<C64> {
        &self.entries
    }

    pub fn norm_squared(&self) -> f64 {
        self.entries.norm_squared()
    }

    pub fn projector(&self) -> HermitianOperator {
        HermitianOperator {
            layout: self.layout.clone(),
            matrix: &self.entries * self.entries.adjoint(),
        }
    }
}
