//! Seeded channel corpora for the property suite.

use nscost::channel::{
    choi_from_unitary, classical_noiseless, depolarize_global, partial_swap_unitary,
    random_channel, random_ns_channel, swap_alpha_unitary, swap_channel, BipartiteChannel,
    ChannelDims,
};
use nscost::tensor::C64;
use nscost::Result;

/// A corpus channel with a short human-readable name.
#[derive(Clone, Debug)]
pub struct NamedChannel {
    pub name: String,
    pub channel: BipartiteChannel,
}

impl NamedChannel {
    fn new(name: impl Into<String>, channel: BipartiteChannel) -> Self {
        Self {
            name: name.into(),
            channel,
        }
    }
}

fn qubits() -> ChannelDims {
    ChannelDims::uniform(2)
}

/// Point-to-point dimensions `A0 -> B1` for qubits.
pub fn p2p_qubit_dims() -> ChannelDims {
    ChannelDims::new(2, 1, 1, 2)
}

/// Derives the seed of the `index`-th random member from the corpus seed.
pub fn member_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index as u64)
}

/// The first `n` channels of the corpus for `seed`: a fixed set of
/// structured two-qubit channels followed by seeded random channels of
/// several kinds (all with Choi side at most 16).
pub fn corpus(seed: u64, n: usize) -> Result<Vec<NamedChannel>> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        out.push(member(seed, i)?);
    }
    Ok(out)
}

fn member(seed: u64, i: usize) -> Result<NamedChannel> {
    let s = member_seed(seed, i);
    Ok(match i {
        0 => NamedChannel::new("swap", swap_channel()),
        1 => NamedChannel::new("classical_noiseless(2)", classical_noiseless(2)?),
        2 => {
            let base = choi_from_unitary(&swap_alpha_unitary(0.5), qubits())?;
            NamedChannel::new("swap_alpha(0.5) p=0.2", depolarize_global(&base, 0.2)?)
        }
        3 => {
            let base = choi_from_unitary(&partial_swap_unitary(0.3)?, qubits())?;
            NamedChannel::new("partial_swap(0.3) p=0.1", depolarize_global(&base, 0.1)?)
        }
        _ => match (i - 4) % 5 {
            0 => NamedChannel::new(format!("random_ns #{i}"), random_ns_channel(s, qubits())?),
            1 => NamedChannel::new(
                format!("random rank-1 #{i}"),
                random_channel(s, qubits(), 1)?,
            ),
            2 => NamedChannel::new(
                format!("random rank-2 #{i}"),
                random_channel(s, qubits(), 2)?,
            ),
            3 => NamedChannel::new(
                format!("random rank-4 #{i}"),
                random_channel(s, qubits(), 4)?,
            ),
            _ => NamedChannel::new(
                format!("random p2p #{i}"),
                random_channel(s, p2p_qubit_dims(), 2)?,
            ),
        },
    })
}

/// Re-validates every corpus Choi after adding `delta` to its first diagonal
/// entry, which breaks trace preservation. Returns the names and errors of
/// the members that were rejected (all of them for `delta` well above the
/// validation tolerance).
pub fn perturbed_validation_failures(corpus: &[NamedChannel], delta: f64) -> Vec<(String, String)> {
    corpus
        .iter()
        .filter_map(|nc| {
            let mut m = nc.channel.choi().matrix().clone();
            m[(0, 0)] += C64::new(delta, 0.0);
            BipartiteChannel::from_choi(nc.channel.dims(), m)
                .err()
                .map(|e| (nc.name.clone(), e.to_string()))
        })
        .collect()
}

/// Seeded random qubit point-to-point channels `A0 -> B1`.
pub fn random_p2p_channels(seed: u64, n: usize) -> Result<Vec<BipartiteChannel>> {
    (0..n)
        .map(|i| {
            random_channel(
                member_seed(seed ^ 0x5032_5000, i),
                p2p_qubit_dims(),
                1 + i % 4,
            )
        })
        .collect()
}

/// Seeded pairs of random two-qubit channels (mixing signalling and NS ones).
pub fn random_qubit_pairs(
    seed: u64,
    n: usize,
) -> Result<Vec<(BipartiteChannel, BipartiteChannel)>> {
    (0..n)
        .map(|i| {
            let s = member_seed(seed ^ 0x4841_4444, 2 * i);
            let t = member_seed(seed ^ 0x4841_4444, 2 * i + 1);
            let first = random_channel(s, qubits(), 1 + i % 3)?;
            let second = if i % 4 == 3 {
                random_ns_channel(t, qubits())?
            } else {
                random_channel(t, qubits(), 1 + (i + 1) % 3)?
            };
            Ok((first, second))
        })
        .collect()
}

/// Seeded pairs of small channels whose tensor product has Choi side 16:
/// one-way qubit channels in either direction.
pub fn random_small_pairs(
    seed: u64,
    n: usize,
) -> Result<Vec<(BipartiteChannel, BipartiteChannel)>> {
    let a_to_b = ChannelDims::new(2, 1, 1, 2);
    let b_to_a = ChannelDims::new(1, 2, 2, 1);
    (0..n)
        .map(|i| {
            let s = member_seed(seed ^ 0x5355_4241, 2 * i);
            let t = member_seed(seed ^ 0x5355_4241, 2 * i + 1);
            let second_dims = if i % 2 == 0 { a_to_b } else { b_to_a };
            Ok((
                random_channel(s, a_to_b, 1 + i % 2)?,
                random_channel(t, second_dims, 1 + (i / 2) % 2)?,
            ))
        })
        .collect()
}

/// Seeded pairs of composable random NS channels with qubit subsystems.
pub fn random_ns_pairs(seed: u64, n: usize) -> Result<Vec<(BipartiteChannel, BipartiteChannel)>> {
    (0..n)
        .map(|i| {
            let s = member_seed(seed ^ 0x4E53_4E53, 2 * i);
            let t = member_seed(seed ^ 0x4E53_4E53, 2 * i + 1);
            Ok((
                random_ns_channel(s, qubits())?,
                random_ns_channel(t, qubits())?,
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_deterministic_and_valid() {
        let a = corpus(7, 12).unwrap();
        let b = corpus(7, 12).unwrap();
        assert_eq!(a.len(), 12);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.name, y.name);
            assert_eq!(x.channel.choi(), y.channel.choi());
        }
        let c = corpus(8, 12).unwrap();
        assert_ne!(a[5].channel.choi(), c[5].channel.choi());
    }

    #[test]
    fn perturbation_is_detected() {
        let c = corpus(1, 6).unwrap();
        assert_eq!(perturbed_validation_failures(&c, 1e-3).len(), 6);
        assert!(perturbed_validation_failures(&c, 0.0).is_empty());
    }
}
