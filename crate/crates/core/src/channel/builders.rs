use std::f64::consts::PI;

use nalgebra::DVector;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{BipartiteChannel, ChannelDims, A0, A1, B0, B1};
use crate::error::{Error, Result};
use crate::tensor::{CMatrix, HermitianOperator, SystemLayout, C64};

const TOL_UNITARY: f64 = 1e-10;

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Choi matrix of a single-party map on `(in, out)` order from its Kraus operators.
fn choi_from_kraus_raw(kraus: &[CMatrix], d_in: usize, d_out: usize) -> CMatrix {
    let mut j = CMatrix::zeros(d_in * d_out, d_in * d_out);
    for k in kraus {
        // |K>> = Σ_i |i> ⊗ K|i>
        let v = DVector::from_fn(d_in * d_out, |idx, _| k[(idx % d_out, idx / d_out)]);
        j += &v * v.adjoint();
    }
    j
}

/// Choi operator of a bipartite channel given by Kraus operators acting
/// `A0 ⊗ B0 -> A1 ⊗ B1`.
pub fn choi_from_kraus(kraus: &[CMatrix], dims: ChannelDims) -> Result<BipartiteChannel> {
    dims.validate()?;
    for k in kraus {
        if k.nrows() != dims.output_dim() || k.ncols() != dims.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "Kraus operator is {}x{}, expected {}x{}",
                k.nrows(),
                k.ncols(),
                dims.output_dim(),
                dims.input_dim()
            )));
        }
    }
    let raw = choi_from_kraus_raw(kraus, dims.input_dim(), dims.output_dim());
    let layout = SystemLayout::new([(A0, dims.a0), (B0, dims.b0), (A1, dims.a1), (B1, dims.b1)])?;
    let choi = HermitianOperator::new(layout, raw)?.permute_systems(&[A0, A1, B0, B1])?;
    BipartiteChannel::from_operator(choi)
}

pub fn choi_from_unitary(u: &CMatrix, dims: ChannelDims) -> Result<BipartiteChannel> {
    dims.validate()?;
    if !u.is_square() || u.nrows() != dims.input_dim() || dims.input_dim() != dims.output_dim() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix for a {}-dimensional input and {}-dimensional output",
            u.nrows(),
            u.ncols(),
            dims.input_dim(),
            dims.output_dim()
        )));
    }
    let n = u.nrows();
    let deviation = (u.adjoint() * u - CMatrix::identity(n, n)).norm();
    if deviation > TOL_UNITARY {
        return Err(Error::NotUnitary { deviation });
    }
    choi_from_kraus(std::slice::from_ref(u), dims)
}

/// The SWAP^α gate on two qubits.
pub fn swap_alpha_unitary(alpha: f64) -> CMatrix {
    let phase = C64::from_polar(1.0, PI * alpha);
    let one = C64::new(1.0, 0.0);
    let plus = (one + phase) * 0.5;
    let minus = (one - phase) * 0.5;
    let mut u = CMatrix::zeros(4, 4);
    u[(0, 0)] = one;
    u[(3, 3)] = one;
    u[(1, 1)] = plus;
    u[(2, 2)] = plus;
    u[(1, 2)] = minus;
    u[(2, 1)] = minus;
    u
}

/// The qubit partial swap `√a·1 + i√(1-a)·S`.
pub fn partial_swap_unitary(a: f64) -> Result<CMatrix> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::ParameterOutOfRange {
            name: "a",
            value: a,
            range: "[0, 1]",
        });
    }
    let s = swap_alpha_unitary(1.0);
    Ok(CMatrix::identity(4, 4) * C64::new(a.sqrt(), 0.0) + s * C64::new(0.0, (1.0 - a).sqrt()))
}

pub fn swap_channel() -> BipartiteChannel {
    choi_from_unitary(&swap_alpha_unitary(1.0), ChannelDims::uniform(2)).expect("SWAP is unitary")
}

pub fn identity_channel(d_a: usize, d_b: usize) -> Result<BipartiteChannel> {
    choi_from_unitary(
        &CMatrix::identity(d_a * d_b, d_a * d_b),
        ChannelDims::new(d_a, d_a, d_b, d_b),
    )
}

/// Global depolarizing noise on the output: `(1-p)·N(ρ) + p·tr(ρ)·1/d_out`.
pub fn depolarize_global(ch: &BipartiteChannel, p: f64) -> Result<BipartiteChannel> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ParameterOutOfRange {
            name: "p",
            value: p,
            range: "[0, 1]",
        });
    }
    let dims = ch.dims();
    let d = dims.choi_dim();
    let noise = CMatrix::identity(d, d) * C64::new(p / dims.output_dim() as f64, 0.0);
    let m = ch.choi().matrix() * C64::new(1.0 - p, 0.0) + noise;
    BipartiteChannel::from_choi(dims, m)
}

/// Replacement channel that discards the input and outputs the maximally mixed state.
pub fn replacement_channel(dims: ChannelDims) -> Result<BipartiteChannel> {
    dims.validate()?;
    let d = dims.choi_dim();
    let m = CMatrix::identity(d, d) * C64::new(1.0 / dims.output_dim() as f64, 0.0);
    BipartiteChannel::from_choi(dims, m)
}

/// The bidirectional noiseless classical channel exchanging one of `m`
/// messages in each direction: `|k><k|_A0 ⊗ |l><l|_B0 -> |l><l|_A1 ⊗ |k><k|_B1`.
pub fn classical_noiseless(m: usize) -> Result<BipartiteChannel> {
    if m < 1 {
        return Err(Error::ParameterOutOfRange {
            name: "m",
            value: m as f64,
            range: "m >= 1",
        });
    }
    let dims = ChannelDims::uniform(m);
    let d = dims.choi_dim();
    let mut diag = vec![0.0; d];
    for a0 in 0..m {
        for a1 in 0..m {
            // B0 = A1 and B1 = A0
            diag[((a0 * m + a1) * m + a1) * m + a0] = 1.0;
        }
    }
    let choi = HermitianOperator::from_real_diagonal(dims.layout(), &diag)?;
    BipartiteChannel::from_operator(choi)
}

/// Noiseless classical channel of `m` messages from Alice (`A0`) to Bob (`B1`).
pub fn classical_one_way(m: usize) -> Result<BipartiteChannel> {
    if m < 1 {
        return Err(Error::ParameterOutOfRange {
            name: "m",
            value: m as f64,
            range: "m >= 1",
        });
    }
    let dims = ChannelDims::point_to_point(m, m);
    let diag: Vec<f64> = (0..m * m)
        .map(|i| if i / m == i % m { 1.0 } else { 0.0 })
        .collect();
    let choi = HermitianOperator::from_real_diagonal(dims.layout(), &diag)?;
    BipartiteChannel::from_operator(choi)
}

/// Embeds a point-to-point Choi matrix on `(A0, B1)` as a bipartite channel
/// with trivial `A1` and `B0`.
pub fn point_to_point(choi_a0_b1: CMatrix, d_in: usize, d_out: usize) -> Result<BipartiteChannel> {
    BipartiteChannel::from_choi(ChannelDims::point_to_point(d_in, d_out), choi_a0_b1)
}

/// Noiseless quantum channel of dimension `d` from Alice (`A0`) to Bob (`B1`).
pub fn quantum_wire(d: usize) -> Result<BipartiteChannel> {
    if d < 1 {
        return Err(Error::ParameterOutOfRange {
            name: "d",
            value: d as f64,
            range: "d >= 1",
        });
    }
    let choi = CMatrix::from_fn(d * d, d * d, |r, c| {
        let hit = r / d == r % d && c / d == c % d;
        C64::new(if hit { 1.0 } else { 0.0 }, 0.0)
    });
    point_to_point(choi, d, d)
}

/// `E_A ⊗ E_B` from local Choi matrices on `(A0, A1)` and `(B0, B1)`.
pub fn local_product(
    choi_a: &CMatrix,
    choi_b: &CMatrix,
    dims: ChannelDims,
) -> Result<BipartiteChannel> {
    dims.validate()?;
    if choi_a.nrows() != dims.a0 * dims.a1 || choi_b.nrows() != dims.b0 * dims.b1 {
        return Err(Error::DimensionMismatch(
            "local Choi matrices do not match channel dims".into(),
        ));
    }
    BipartiteChannel::from_choi(dims, choi_a.kronecker(choi_b))
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Choi matrix on `(in, out)` of a random channel obtained from a Haar-style
/// Stinespring isometry `C^{d_in} -> C^{d_out} ⊗ C^{rank}`.
pub fn random_local_choi(rng: &mut ChaCha8Rng, d_in: usize, d_out: usize, rank: usize) -> CMatrix {
    let rank = rank.max(1);
    let rows = d_out * rank;
    let g = CMatrix::from_fn(rows, d_in.max(rows), |_, _| complex_gaussian(rng));
    // orthonormal columns from the QR factor of a square Gaussian matrix
    let q = g.qr().q();
    let v = q.columns(0, d_in).into_owned();
    let kraus: Vec<CMatrix> = (0..rank)
        .map(|e| CMatrix::from_fn(d_out, d_in, |o, i| v[(o * rank + e, i)]))
        .collect();
    choi_from_kraus_raw(&kraus, d_in, d_out)
}

/// Seeded random non-signalling channel: a convex mixture of products of
/// random local channels.
pub fn random_ns_channel(seed: u64, dims: ChannelDims) -> Result<BipartiteChannel> {
    dims.validate()?;
    let mut rng = seeded_rng(seed);
    let terms = 3;
    let weights: Vec<f64> = (0..terms).map(|_| rng.random::<f64>() + 0.1).collect();
    let total: f64 = weights.iter().sum();
    let d = dims.choi_dim();
    let mut m = CMatrix::zeros(d, d);
    for w in weights {
        let ea = random_local_choi(&mut rng, dims.a0, dims.a1, 2);
        let eb = random_local_choi(&mut rng, dims.b0, dims.b1, 2);
        m += ea.kronecker(&eb) * C64::new(w / total, 0.0);
    }
    BipartiteChannel::from_choi(dims, m)
}

/// Seeded random (generally signalling) channel with the given Kraus rank.
pub fn random_channel(seed: u64, dims: ChannelDims, kraus_rank: usize) -> Result<BipartiteChannel> {
    dims.validate()?;
    let mut rng = seeded_rng(seed);
    let local = random_local_choi(&mut rng, dims.input_dim(), dims.output_dim(), kraus_rank);
    let layout = SystemLayout::new([(A0, dims.a0), (B0, dims.b0), (A1, dims.a1), (B1, dims.b1)])?;
    let choi = HermitianOperator::new(layout, local)?.permute_systems(&[A0, A1, B0, B1])?;
    BipartiteChannel::from_operator(choi)
}
