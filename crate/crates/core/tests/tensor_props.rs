//! Algebraic identities of the labelled tensor operations, checked against
//! the defining formulas on random Hermitian operators.

use nalgebra::DMatrix;
use nscost::conic::embed_hermitian;
use nscost::tensor::{CMatrix, HermitianOperator, SystemLayout, C64};
use proptest::prelude::*;

const TOL: f64 = 1e-10;

fn hermitian_from(values: &[f64], d: usize) -> CMatrix {
    let mut m = CMatrix::from_fn(d, d, |r, c| {
        C64::new(values[2 * (r * d + c)], values[2 * (r * d + c) + 1])
    });
    m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    m
}

/// A random Hermitian operator on the given `(label, dim)` systems.
fn operator(systems: Vec<(&'static str, usize)>) -> impl Strategy<Value = HermitianOperator> {
    let layout = SystemLayout::new(systems).unwrap();
    let d = layout.total_dim();
    prop::collection::vec(-1.0f64..1.0, 2 * d * d)
        .prop_map(move |v| HermitianOperator::new(layout.clone(), hermitian_from(&v, d)).unwrap())
}

fn dims() -> impl Strategy<Value = (usize, usize, usize)> {
    (1usize..=3, 1usize..=3, 1usize..=3)
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partial_trace_of_product_scales_by_trace(
        (x, y) in (1usize..=3, 1usize..=3).prop_flat_map(|(a, b)| (operator(vec![("A", a)]), operator(vec![("B", b)])))
    ) {
        let joint = x.tensor(&y).unwrap();
        let reduced = joint.partial_trace(&["B"]).unwrap();
        let expected = x.clone().scale(y.trace());
        prop_assert!(reduced.max_abs_diff(&expected).unwrap() < TOL);
        let other = joint.partial_trace(&["A"]).unwrap();
        prop_assert!(other.max_abs_diff(&y.clone().scale(x.trace())).unwrap() < TOL);
    }

    #[test]
    fn partial_trace_matches_index_formula(
        z in dims().prop_flat_map(|(a, b, c)| operator(vec![("A", a), ("B", b), ("C", c)]))
    ) {
        // (tr_B Z)_{(i,k),(j,l)} = Σ_s Z_{(i,s,k),(j,s,l)}
        let [a, b, c] = [z.layout().dim_of("A").unwrap(), z.layout().dim_of("B").unwrap(), z.layout().dim_of("C").unwrap()];
        let expected = CMatrix::from_fn(a * c, a * c, |r, col| {
            let (i, k) = (r / c, r % c);
            let (j, l) = (col / c, col % c);
            (0..b).map(|s| z.matrix()[((i * b + s) * c + k, (j * b + s) * c + l)]).sum()
        });
        let got = z.partial_trace(&["B"]).unwrap();
        prop_assert!(max_abs(&(got.matrix() - expected)) < TOL);
        prop_assert!((got.trace() - z.trace()).abs() < TOL);
    }

    #[test]
    fn permutation_round_trips_and_swaps_kronecker_factors(
        (x, y) in (1usize..=3, 1usize..=3).prop_flat_map(|(a, b)| (operator(vec![("A", a)]), operator(vec![("B", b)])))
    ) {
        let xy = x.tensor(&y).unwrap();
        let yx = xy.permute_systems(&["B", "A"]).unwrap();
        prop_assert!(max_abs(&(yx.matrix() - y.matrix().kronecker(x.matrix()))) < TOL);
        let back = yx.permute_systems(&["A", "B"]).unwrap();
        prop_assert!(max_abs(&(back.matrix() - xy.matrix())) < TOL);
        // aligned arithmetic ignores the system order
        prop_assert!(xy.max_abs_diff(&yx).unwrap() < TOL);
    }

    #[test]
    fn partial_transpose_of_product_transposes_one_factor(
        (x, y) in (1usize..=3, 1usize..=3).prop_flat_map(|(a, b)| (operator(vec![("A", a)]), operator(vec![("B", b)])))
    ) {
        let xy = x.tensor(&y).unwrap();
        let pt = xy.partial_transpose(&["B"]).unwrap();
        prop_assert!(max_abs(&(pt.matrix() - x.matrix().kronecker(&y.matrix().transpose()))) < TOL);
        let twice = pt.partial_transpose(&["B"]).unwrap();
        prop_assert!(max_abs(&(twice.matrix() - xy.matrix())) < TOL);
    }

    #[test]
    fn real_embedding_doubles_the_spectrum(
        h in (1usize..=4).prop_flat_map(|d| operator(vec![("A", d)]))
    ) {
        let mut complex_ev = h.eigenvalues();
        let real: DMatrix<f64> = embed_hermitian(h.matrix());
        prop_assert!((&real - real.transpose()).amax() < TOL);
        let mut real_ev: Vec<f64> = real.symmetric_eigenvalues().iter().copied().collect();
        real_ev.sort_by(f64::total_cmp);
        let mut doubled: Vec<f64> = complex_ev.drain(..).flat_map(|e| [e, e]).collect();
        doubled.sort_by(f64::total_cmp);
        for (a, b) in real_ev.iter().zip(&doubled) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn link_with_identity_choi_transports_the_operator(
        rho in (1usize..=3).prop_flat_map(|d| operator(vec![("X", d)]))
    ) {
        // Choi of the identity X -> Y is Σ |i><j| ⊗ |i><j|; linking over X
        // maps an operator on X to the same operator on Y.
        let d = rho.dim();
        let layout = SystemLayout::new([("X", d), ("Y", d)]).unwrap();
        let choi = CMatrix::from_fn(d * d, d * d, |r, c| {
            let hit = r / d == r % d && c / d == c % d;
            C64::new(if hit { 1.0 } else { 0.0 }, 0.0)
        });
        let id = HermitianOperator::new(layout, choi).unwrap();
        let moved = rho.link_product(&id).unwrap();
        prop_assert_eq!(moved.layout().labels(), vec!["Y"]);
        prop_assert!(max_abs(&(moved.matrix() - rho.matrix())) < 1e-9);
    }
}

#[test]
fn layout_rejects_duplicates_and_zero_dimensions() {
    assert!(SystemLayout::new([("A", 2), ("A", 3)]).is_err());
    assert!(SystemLayout::new([("A", 0)]).is_err());
    let l = SystemLayout::new([("A", 2), ("B", 3)]).unwrap();
    assert_eq!(l.total_dim(), 6);
    assert!(l.only(&["C"]).is_err());
}
