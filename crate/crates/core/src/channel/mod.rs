//! Bipartite channels in Choi form and the non-signalling predicates.
//!
//! Every Choi operator is stored on the system order `(A0, A1, B0, B1)`:
//! Alice's input and output, then Bob's input and output. Point-to-point
//! channels `A0 -> B1` are the special case `d_A1 = d_B0 = 1`.

mod builders;
pub mod file;

pub use builders::*;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{CMatrix, HermitianOperator, SystemLayout};

pub const A0: &str = "A0";
pub const A1: &str = "A1";
pub const B0: &str = "B0";
pub const B1: &str = "B1";

/// Tolerance for the complete-positivity check on construction.
pub const TOL_PSD: f64 = 1e-9;
/// Tolerance for the trace-preservation check on construction.
pub const TOL_TP: f64 = 1e-9;
/// Default max-norm tolerance of the non-signalling predicates.
pub const TOL_NS: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChannelDims {
    pub a0: usize,
    pub a1: usize,
    pub b0: usize,
    pub b1: usize,
}

impl ChannelDims {
    pub const fn new(a0: usize, a1: usize, b0: usize, b1: usize) -> Self {
        Self { a0, a1, b0, b1 }
    }

    pub const fn uniform(d: usize) -> Self {
        Self::new(d, d, d, d)
    }

    /// Point-to-point channel `A0 -> B1` embedded with trivial `A1`, `B0`.
    pub const fn point_to_point(d_in: usize, d_out: usize) -> Self {
        Self::new(d_in, 1, 1, d_out)
    }

    pub fn layout(&self) -> SystemLayout {
        SystemLayout::new([(A0, self.a0), (A1, self.a1), (B0, self.b0), (B1, self.b1)])
            .expect("channel dims are validated positive")
    }

    pub fn input_dim(&self) -> usize {
        self.a0 * self.b0
    }

    pub fn output_dim(&self) -> usize {
        self.a1 * self.b1
    }

    pub fn choi_dim(&self) -> usize {
        self.input_dim() * self.output_dim()
    }

    pub fn is_point_to_point(&self) -> bool {
        self.a1 == 1 && self.b0 == 1
    }

    pub fn as_array(&self) -> [usize; 4] {
        [self.a0, self.a1, self.b0, self.b1]
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.as_array().contains(&0) {
            return Err(Error::InvalidLayout(format!(
                "channel dimensions must be positive, got {:?}",
                self.as_array()
            )));
        }
        Ok(())
    }
}

/// A completely positive, trace-preserving bipartite channel `A0 B0 -> A1 B1`.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteChannel {
    choi: HermitianOperator,
    dims: ChannelDims,
}

impl BipartiteChannel {
    /// Wraps a Choi matrix on `(A0, A1, B0, B1)`, checking CP and TP within
    /// [`TOL_PSD`] and [`TOL_TP`].
    pub fn from_choi(dims: ChannelDims, matrix: CMatrix) -> Result<Self> {
        Self::from_choi_with_tolerance(dims, matrix, TOL_PSD)
    }

    pub fn from_choi_with_tolerance(dims: ChannelDims, matrix: CMatrix, tol: f64) -> Result<Self> {
        dims.validate()?;
        let choi = HermitianOperator::new(dims.layout(), matrix)?;
        Self::from_operator_with_tolerance(choi, tol)
    }

    /// Accepts an operator on the labels `A0, A1, B0, B1` in any order.
    pub fn from_operator(choi: HermitianOperator) -> Result<Self> {
        Self::from_operator_with_tolerance(choi, TOL_PSD)
    }

    pub fn from_operator_with_tolerance(choi: HermitianOperator, tol: f64) -> Result<Self> {
        let layout = choi.layout();
        let dims = ChannelDims::new(
            layout.dim_of(A0)?,
            layout.dim_of(A1)?,
            layout.dim_of(B0)?,
            layout.dim_of(B1)?,
        );
        if layout.len() != 4 {
            return Err(Error::InvalidLayout(format!(
                "Choi operator must live on (A0, A1, B0, B1), got {layout}"
            )));
        }
        let choi = if layout.labels() == [A0, A1, B0, B1] {
            choi
        } else {
            choi.permute_systems(&[A0, A1, B0, B1])?
        };
        let min_eig = choi.min_eigenvalue();
        if min_eig < -tol {
            return Err(Error::NotCptp(format!(
                "Choi operator has eigenvalue {min_eig:.3e} (not completely positive)"
            )));
        }
        let marginal = choi.partial_trace(&[A1, B1])?;
        let identity = HermitianOperator::identity(marginal.layout().clone());
        let tp_dev = marginal.max_abs_diff(&identity)?;
        if tp_dev > tol {
            return Err(Error::NotCptp(format!(
                "input marginal deviates from identity by {tp_dev:.3e} (not trace preserving)"
            )));
        }
        Ok(Self { choi, dims })
    }

    pub fn choi(&self) -> &HermitianOperator {
        &self.choi
    }

    pub fn dims(&self) -> ChannelDims {
        self.dims
    }

    /// Parallel composition. Alice's systems of both channels merge into
    /// Alice's systems of the product (and likewise for Bob), first factor
    /// more significant.
    pub fn tensor(&self, other: &BipartiteChannel) -> Result<Self> {
        let second = other
            .choi
            .relabeled(&[(A0, "A0'"), (A1, "A1'"), (B0, "B0'"), (B1, "B1'")])?;
        let joint = self
            .choi
            .tensor(&second)?
            .permute_systems(&[A0, "A0'", A1, "A1'", B0, "B0'", B1, "B1'"])?;
        let (d1, d2) = (self.dims, other.dims);
        let dims = ChannelDims::new(d1.a0 * d2.a0, d1.a1 * d2.a1, d1.b0 * d2.b0, d1.b1 * d2.b1);
        let choi = HermitianOperator::new(dims.layout(), joint.into_matrix())?;
        Ok(Self { choi, dims })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NsFlags {
    pub a_to_b: bool,
    pub b_to_a: bool,
    pub tolerance_used: f64,
}

impl NsFlags {
    pub fn is_ns(&self) -> bool {
        self.a_to_b && self.b_to_a
    }
}

/// Max-norm deviation of `J_{A0B0B1}` from `π_{A0} ⊗ J_{B0B1}`.
pub fn signalling_a_to_b(ch: &BipartiteChannel) -> f64 {
    let j = ch.choi();
    let lhs = j.partial_trace(&[A1]).expect("fixed layout");
    let rest = j.partial_trace(&[A0, A1]).expect("fixed layout");
    let pi =
        HermitianOperator::maximally_mixed(ch.dims().layout().only(&[A0]).expect("fixed layout"));
    let rhs = pi.tensor(&rest).expect("disjoint labels");
    lhs.max_abs_diff(&rhs).expect("same label set")
}

/// Max-norm deviation of `J_{A0A1B0}` from `π_{B0} ⊗ J_{A0A1}`.
pub fn signalling_b_to_a(ch: &BipartiteChannel) -> f64 {
    let j = ch.choi();
    let lhs = j.partial_trace(&[B1]).expect("fixed layout");
    let rest = j.partial_trace(&[B0, B1]).expect("fixed layout");
    let pi =
        HermitianOperator::maximally_mixed(ch.dims().layout().only(&[B0]).expect("fixed layout"));
    let rhs = pi.tensor(&rest).expect("disjoint labels");
    lhs.max_abs_diff(&rhs).expect("same label set")
}

pub fn is_ns_a_to_b(ch: &BipartiteChannel, tol: f64) -> bool {
    signalling_a_to_b(ch) <= tol
}

pub fn is_ns_b_to_a(ch: &BipartiteChannel, tol: f64) -> bool {
    signalling_b_to_a(ch) <= tol
}

pub fn ns_flags(ch: &BipartiteChannel, tol: f64) -> NsFlags {
    NsFlags {
        a_to_b: is_ns_a_to_b(ch, tol),
        b_to_a: is_ns_b_to_a(ch, tol),
        tolerance_used: tol,
    }
}

/// `second ∘ first` via the link product of the Choi operators.
pub fn compose(first: &BipartiteChannel, second: &BipartiteChannel) -> Result<BipartiteChannel> {
    let (d1, d2) = (first.dims(), second.dims());
    if d1.a1 != d2.a0 || d1.b1 != d2.b0 {
        return Err(Error::DimensionMismatch(format!(
            "output dims ({}, {}) do not match input dims ({}, {})",
            d1.a1, d1.b1, d2.a0, d2.b0
        )));
    }
    let j1 = first.choi().relabeled(&[(A1, "MA"), (B1, "MB")])?;
    let j2 = second.choi().relabeled(&[(A0, "MA"), (B0, "MB")])?;
    let linked = j1.link_product(&j2)?.permute_systems(&[A0, A1, B0, B1])?;
    let dims = ChannelDims::new(d1.a0, d2.a1, d1.b0, d2.b1);
    let choi = HermitianOperator::new(dims.layout(), linked.into_matrix())?;
    BipartiteChannel::from_operator(choi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{MaxEntangledVector, C64};

    #[test]
    fn rejects_non_trace_preserving() {
        let dims = ChannelDims::uniform(1);
        let err =
            BipartiteChannel::from_choi(dims, CMatrix::from_element(1, 1, C64::new(2.0, 0.0)));
        assert!(matches!(err, Err(Error::NotCptp(_))));
    }

    #[test]
    fn rejects_non_positive() {
        let dims = ChannelDims::point_to_point(2, 1);
        let mut m = CMatrix::identity(2, 2);
        m[(0, 1)] = C64::new(2.0, 0.0);
        m[(1, 0)] = C64::new(2.0, 0.0);
        assert!(matches!(
            BipartiteChannel::from_choi(dims, m),
            Err(Error::NotCptp(_))
        ));
    }

    #[test]
    fn identity_unitary_has_product_of_gamma_choi() {
        let ch = choi_from_unitary(&CMatrix::identity(4, 4), ChannelDims::uniform(2)).unwrap();
        let ga = MaxEntangledVector::new(A0, A1, 2).unwrap().projector();
        let gb = MaxEntangledVector::new(B0, B1, 2).unwrap().projector();
        let expected = ga.tensor(&gb).unwrap();
        assert!(ch.choi().max_abs_diff(&expected).unwrap() < 1e-14);
    }

    #[test]
    fn swap_choi_invariants() {
        let ch = choi_from_unitary(&swap_alpha_unitary(1.0), ChannelDims::uniform(2)).unwrap();
        assert!((ch.choi().trace() - 4.0).abs() < 1e-12);
        let ev = ch.choi().eigenvalues();
        assert_eq!(ev.iter().filter(|&&e| e.abs() > 1e-9).count(), 1);
        let marg = ch.choi().partial_trace(&[A1, B1]).unwrap();
        assert!((marg.matrix() - CMatrix::identity(4, 4)).norm() < 1e-12);
    }

    #[test]
    fn swap_alpha_zero_is_identity_channel() {
        let ch = choi_from_unitary(&swap_alpha_unitary(0.0), ChannelDims::uniform(2)).unwrap();
        let id = identity_channel(2, 2).unwrap();
        assert!(ch.choi().max_abs_diff(id.choi()).unwrap() < 1e-14);
    }

    #[test]
    fn product_channels_are_ns_and_swap_is_not() {
        let ea = random_local_choi(&mut seeded_rng(1), 2, 2, 2);
        let eb = random_local_choi(&mut seeded_rng(2), 2, 2, 2);
        let prod = local_product(&ea, &eb, ChannelDims::uniform(2)).unwrap();
        assert!(is_ns_a_to_b(&prod, TOL_NS));
        assert!(is_ns_b_to_a(&prod, TOL_NS));

        let swap = swap_channel();
        assert!(!is_ns_a_to_b(&swap, TOL_NS));
        assert!(!is_ns_b_to_a(&swap, TOL_NS));
    }

    #[test]
    fn replacement_channel_is_ns() {
        let ch = depolarize_global(&swap_channel(), 1.0).unwrap();
        assert!(ns_flags(&ch, TOL_NS).is_ns());
    }

    #[test]
    fn one_way_channel_signals_in_one_direction_only() {
        // classical bit from Alice to Bob, trivial in the other direction
        let ch = classical_one_way(2).unwrap();
        assert!(!is_ns_a_to_b(&ch, TOL_NS));
        assert!(is_ns_b_to_a(&ch, TOL_NS));
    }

    #[test]
    fn ns_flags_invariant_under_consistent_permutation() {
        let ch = depolarize_global(
            &choi_from_unitary(&swap_alpha_unitary(0.3), ChannelDims::uniform(2)).unwrap(),
            0.2,
        )
        .unwrap();
        let permuted = ch.choi().permute_systems(&[B1, A0, B0, A1]).unwrap();
        let back = BipartiteChannel::from_operator(permuted).unwrap();
        assert_eq!(ns_flags(&ch, TOL_NS), ns_flags(&back, TOL_NS));
        assert!((signalling_a_to_b(&ch) - signalling_a_to_b(&back)).abs() < 1e-14);
    }

    #[test]
    fn compose_with_identity() {
        let ch = random_channel(7, ChannelDims::uniform(2), 2).unwrap();
        let id = identity_channel(2, 2).unwrap();
        let left = compose(&id, &ch).unwrap();
        let right = compose(&ch, &id).unwrap();
        assert!(left.choi().max_abs_diff(ch.choi()).unwrap() < 1e-10);
        assert!(right.choi().max_abs_diff(ch.choi()).unwrap() < 1e-10);
    }

    #[test]
    fn swap_squared_is_identity() {
        let s = swap_channel();
        let ss = compose(&s, &s).unwrap();
        let id = identity_channel(2, 2).unwrap();
        assert!(ss.choi().max_abs_diff(id.choi()).unwrap() < 1e-12);
    }

    #[test]
    fn compose_checks_dims() {
        let a = random_channel(1, ChannelDims::new(2, 3, 2, 2), 1).unwrap();
        let b = random_channel(2, ChannelDims::uniform(2), 1).unwrap();
        assert!(matches!(compose(&a, &b), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn compose_is_sequential_application() {
        // U2 ∘ U1 for unitaries must equal the Choi of U2 U1
        let u1 = swap_alpha_unitary(0.37);
        let u2 = partial_swap_unitary(0.61).unwrap();
        let dims = ChannelDims::uniform(2);
        let c = compose(
            &choi_from_unitary(&u1, dims).unwrap(),
            &choi_from_unitary(&u2, dims).unwrap(),
        )
        .unwrap();
        let direct = choi_from_unitary(&(&u2 * &u1), dims).unwrap();
        assert!(c.choi().max_abs_diff(direct.choi()).unwrap() < 1e-12);
    }

    #[test]
    fn tensor_of_channels_is_cptp_and_merges_parties() {
        let a = random_channel(3, ChannelDims::new(2, 1, 1, 2), 2).unwrap();
        let b = random_channel(4, ChannelDims::new(1, 2, 2, 1), 2).unwrap();
        let ab = a.tensor(&b).unwrap();
        assert_eq!(ab.dims(), ChannelDims::uniform(2));
        // a signals A -> B, b signals B -> A
        assert!(!is_ns_a_to_b(&ab, TOL_NS));
        assert!(!is_ns_b_to_a(&ab, TOL_NS));
    }
}
