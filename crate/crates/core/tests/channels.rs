//! Channel construction, composition and the no-signalling predicates.

use nscost::channel::file::parse_channel;
use nscost::channel::{
    choi_from_unitary, classical_noiseless, compose, depolarize_global, identity_channel,
    is_ns_a_to_b, is_ns_b_to_a, local_product, ns_flags, random_channel, random_local_choi,
    random_ns_channel, replacement_channel, seeded_rng, signalling_a_to_b, signalling_b_to_a,
    swap_alpha_unitary, swap_channel, BipartiteChannel, ChannelDims, A0, A1, B0, B1, TOL_NS,
};
use nscost::tensor::HermitianOperator;
use nscost::Error;
use proptest::prelude::*;

/// The same channel with the roles of Alice and Bob exchanged.
fn exchange_parties(ch: &BipartiteChannel) -> BipartiteChannel {
    let renamed = ch
        .choi()
        .relabeled(&[(A0, "b0"), (A1, "b1"), (B0, "a0"), (B1, "a1")])
        .unwrap()
        .relabeled(&[("a0", A0), ("a1", A1), ("b0", B0), ("b1", B1)])
        .unwrap()
        .permute_systems(&[A0, A1, B0, B1])
        .unwrap();
    BipartiteChannel::from_operator(renamed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn random_ns_channels_are_ns_and_deterministic(seed in any::<u64>()) {
        let ch = random_ns_channel(seed, ChannelDims::uniform(2)).unwrap();
        prop_assert!(ns_flags(&ch, 1e-9).is_ns());
        let again = random_ns_channel(seed, ChannelDims::uniform(2)).unwrap();
        prop_assert_eq!(ch.choi(), again.choi());
    }

    #[test]
    fn composition_of_ns_channels_is_ns(s1 in any::<u64>(), s2 in any::<u64>()) {
        let first = random_ns_channel(s1, ChannelDims::uniform(2)).unwrap();
        let second = random_ns_channel(s2, ChannelDims::uniform(2)).unwrap();
        let composed = compose(&first, &second).unwrap();
        prop_assert!(ns_flags(&composed, 1e-8).is_ns());
    }

    #[test]
    fn mixtures_of_products_are_ns(seed in any::<u64>(), w in 0.0f64..=1.0) {
        let mut rng = seeded_rng(seed);
        let dims = ChannelDims::new(2, 3, 3, 2);
        let mut product = || {
            let a = random_local_choi(&mut rng, 2, 3, 2);
            let b = random_local_choi(&mut rng, 3, 2, 2);
            local_product(&a, &b, dims).unwrap()
        };
        let (e, f) = (product(), product());
        let mix = e.choi().clone().scale(w).add(&f.choi().clone().scale(1.0 - w)).unwrap();
        let ch = BipartiteChannel::from_operator(mix).unwrap();
        prop_assert!(ns_flags(&ch, 1e-9).is_ns());
    }

    #[test]
    fn exchanging_parties_exchanges_signalling_directions(seed in any::<u64>(), rank in 1usize..=4) {
        let ch = random_channel(seed, ChannelDims::new(2, 3, 3, 2), rank).unwrap();
        let swapped = exchange_parties(&ch);
        prop_assert!((signalling_a_to_b(&ch) - signalling_b_to_a(&swapped)).abs() < 1e-12);
        prop_assert!((signalling_b_to_a(&ch) - signalling_a_to_b(&swapped)).abs() < 1e-12);
    }

    #[test]
    fn composing_with_identity_changes_nothing(seed in any::<u64>()) {
        let ch = random_channel(seed, ChannelDims::uniform(2), 2).unwrap();
        let id = identity_channel(2, 2).unwrap();
        let before = compose(&id, &ch).unwrap();
        let after = compose(&ch, &id).unwrap();
        prop_assert!(before.choi().max_abs_diff(ch.choi()).unwrap() < 1e-10);
        prop_assert!(after.choi().max_abs_diff(ch.choi()).unwrap() < 1e-10);
    }

    #[test]
    fn global_depolarizing_interpolates_to_the_replacement_channel(alpha in 0.0f64..=1.0, p in 0.0f64..=1.0) {
        let u = choi_from_unitary(&swap_alpha_unitary(alpha), ChannelDims::uniform(2)).unwrap();
        let noisy = depolarize_global(&u, p).unwrap();
        let replacement = replacement_channel(ChannelDims::uniform(2)).unwrap();
        let expected = u.choi().clone().scale(1.0 - p).add(&replacement.choi().clone().scale(p)).unwrap();
        prop_assert!(noisy.choi().max_abs_diff(&expected).unwrap() < 1e-12);
    }
}

#[test]
fn swap_squared_is_the_identity() {
    let swap = swap_channel();
    let twice = compose(&swap, &swap).unwrap();
    let id = identity_channel(2, 2).unwrap();
    assert!(twice.choi().max_abs_diff(id.choi()).unwrap() < 1e-10);
}

#[test]
fn swap_signals_both_ways_and_products_do_not() {
    let swap = swap_channel();
    assert!(!is_ns_a_to_b(&swap, TOL_NS));
    assert!(!is_ns_b_to_a(&swap, TOL_NS));
    let mut rng = seeded_rng(5);
    let a = random_local_choi(&mut rng, 2, 2, 3);
    let b = random_local_choi(&mut rng, 2, 2, 3);
    let product = local_product(&a, &b, ChannelDims::uniform(2)).unwrap();
    assert!(ns_flags(&product, TOL_NS).is_ns());
    let fully_noisy = depolarize_global(&swap, 1.0).unwrap();
    assert!(ns_flags(&fully_noisy, TOL_NS).is_ns());
}

#[test]
fn classical_noiseless_channel_marginals() {
    for m in 1..=4 {
        let ch = classical_noiseless(m).unwrap();
        let input = ch.choi().partial_trace(&[A1, B1]).unwrap();
        let id = HermitianOperator::identity(input.layout().clone());
        assert!(input.max_abs_diff(&id).unwrap() < 1e-14);
        assert_eq!(ns_flags(&ch, TOL_NS).is_ns(), m == 1, "m={m}");
    }
}

#[test]
fn construction_rejects_non_channels() {
    let swap = swap_channel();
    let not_tp = swap.choi().clone().scale(1.1);
    assert!(matches!(
        BipartiteChannel::from_operator(not_tp),
        Err(Error::NotCptp(_))
    ));
    // 2R − J is trace preserving but has eigenvalue 1/2 − 4 < 0
    let replacement = replacement_channel(ChannelDims::uniform(2)).unwrap();
    let not_cp = replacement
        .choi()
        .clone()
        .scale(2.0)
        .sub(swap.choi())
        .unwrap();
    assert!(matches!(
        BipartiteChannel::from_operator(not_cp),
        Err(Error::NotCptp(_))
    ));
    assert!(matches!(
        compose(&swap, &classical_noiseless(3).unwrap()),
        Err(Error::DimensionMismatch(_))
    ));
}

#[test]
fn channel_files_build_and_diagnose() {
    let swap = parse_channel("kind = \"swap_alpha\"\n[params]\nalpha = 1.0\n").unwrap();
    assert!(swap.choi().max_abs_diff(swap_channel().choi()).unwrap() < 1e-12);

    let noisy = parse_channel(
        "kind = \"partial_swap\"\ndims = [2, 2, 2, 2]\n[params]\na = 0.25\np = 1.0\n",
    )
    .unwrap();
    assert!(ns_flags(&noisy, TOL_NS).is_ns());

    let classical = parse_channel("kind = \"classical_noiseless\"\n[params]\nm = 3\n").unwrap();
    assert_eq!(classical.dims(), ChannelDims::uniform(3));

    // a dense 1x1 channel (all subsystems trivial)
    let trivial =
        parse_channel("kind = \"dense\"\ndims = [1, 1, 1, 1]\nchoi = [[1.0, 0.0]]\n").unwrap();
    assert_eq!(trivial.dims().choi_dim(), 1);

    let cases = [
        (
            "kind = \"swap_alpha\"\n[params]\nalpha = 1.0\nbeta = 2.0\n",
            "line 4",
        ),
        ("kind = \"dense\"\n", "`dims`"),
        (
            "kind = \"dense\"\ndims = [1, 1, 1, 1]\nchoi = [[2.0, 0.0]]\n",
            "`choi`",
        ),
        (
            "kind = \"swap_alpha\"\ndims = [3, 3, 3, 3]\n[params]\nalpha = 1.0\n",
            "`dims`",
        ),
        ("kind = \"partial_swap\"\n[params]\na = 1.5\n", "`params.a`"),
        (
            "kind = \"swap_alpha\"\n[params]\nalpha = 1.0\np = -0.1\n",
            "`params.p`",
        ),
        ("kind = \"teleport\"\n", "line 1"),
    ];
    for (text, needle) in cases {
        match parse_channel(text) {
            Err(e @ Error::ChannelFile { .. }) => {
                assert!(e.to_string().contains(needle), "{text:?}: {e}")
            }
            other => panic!("{text:?}: expected a channel-file error, got {other:?}"),
        }
    }
}
