//! Explicit feasible points of the max-relative-entropy and min-entropy
//! programs, checked without any solver.
//!
//! A primal point bounds the optimal value from above and a dual point from
//! below; when both are feasible and their objectives coincide the optimum
//! is known exactly. The constructors below give such matching pairs for the
//! classical noiseless channel, and [`DmaxPrimalPoint::violation`] and
//! friends measure how far any candidate point is from feasibility.

use crate::channel::{classical_noiseless, BipartiteChannel, ChannelDims, A0, A1, B0, B1};
use crate::error::Result;
use crate::tensor::{HermitianOperator, MaxEntangledVector, SystemLayout};

/// Largest of `(−λ_min)⁺` over the given operators.
fn negativity(ops: &[&HermitianOperator]) -> f64 {
    ops.iter()
        .map(|op| (-op.min_eigenvalue()).max(0.0))
        .fold(0.0, f64::max)
}

/// Max-norm deviations of the two no-signalling conditions of `y`.
fn signalling(y: &HermitianOperator) -> Result<f64> {
    let pi = |label: &str| -> Result<HermitianOperator> {
        Ok(HermitianOperator::maximally_mixed(
            y.layout().only(&[label])?,
        ))
    };
    let ab = y
        .partial_trace(&[A1])?
        .max_abs_diff(&pi(A0)?.tensor(&y.partial_trace(&[A0, A1])?)?)?;
    let ba = y
        .partial_trace(&[B1])?
        .max_abs_diff(&pi(B0)?.tensor(&y.partial_trace(&[B0, B1])?)?)?;
    Ok(ab.max(ba))
}

/// Candidate `(λ, Y)` for `min λ s.t. Y ⪰ J, Y_{A0B0} = λ I, Y NS`.
#[derive(Clone, Debug)]
pub struct DmaxPrimalPoint {
    pub lambda: f64,
    pub y: HermitianOperator,
}

impl DmaxPrimalPoint {
    /// Largest constraint violation at this point for channel `ch`.
    pub fn violation(&self, ch: &BipartiteChannel) -> Result<f64> {
        let j = ch.choi();
        let dominance = negativity(&[&self.y.sub(j)?]);
        let marginal = self.y.partial_trace(&[A1, B1])?;
        let normalisation = marginal.max_abs_diff(
            &HermitianOperator::identity(marginal.layout().clone()).scale(self.lambda),
        )?;
        Ok(dominance.max(normalisation).max(signalling(&self.y)?))
    }
}

/// Candidate `(M, N, P, Q)` for the dual
/// `max tr(M J) s.t. tr N = 1, tr_{A0} P = 0, tr_{B0} Q = 0, M ⪰ 0,
///  N ⊗ I_{A1B1} + P ⊗ I_{A1} + Q ⊗ I_{B1} ⪰ M`.
#[derive(Clone, Debug)]
pub struct DmaxDualPoint {
    /// On `(A0, A1, B0, B1)`.
    pub m: HermitianOperator,
    /// On `(A0, B0)`.
    pub n: HermitianOperator,
    /// On `(A0, B0, B1)`.
    pub p: HermitianOperator,
    /// On `(A0, A1, B0)`.
    pub q: HermitianOperator,
}

impl DmaxDualPoint {
    /// Dual objective `tr(M J)`, a lower bound on the optimal `λ` when the
    /// point is feasible.
    pub fn objective(&self, ch: &BipartiteChannel) -> Result<f64> {
        inner(&self.m, ch.choi())
    }

    pub fn violation(&self) -> Result<f64> {
        let layout = self.m.layout();
        let id = |labels: &[&str]| -> Result<HermitianOperator> {
            Ok(HermitianOperator::identity(layout.only(labels)?))
        };
        let bound = self
            .n
            .tensor(&id(&[A1, B1])?)?
            .add(&self.p.tensor(&id(&[A1])?)?)?
            .add(&self.q.tensor(&id(&[B1])?)?)?;
        let slack = bound.sub(&self.m)?.permute_systems(&layout.labels())?;
        let traces = (self.n.trace() - 1.0)
            .abs()
            .max(max_abs(&self.p.partial_trace(&[A0])?))
            .max(max_abs(&self.q.partial_trace(&[B0])?));
        Ok(traces.max(negativity(&[&self.m, &slack])))
    }
}

/// Candidate `(m, X)` for `min m s.t. I_{A0} ⊗ X_{B0B1} ⪰ J_{A0B0B1}, X_{B0} = m I`.
#[derive(Clone, Debug)]
pub struct HminPrimalPoint {
    pub m: f64,
    /// On `(B0, B1)`.
    pub x: HermitianOperator,
}

impl HminPrimalPoint {
    pub fn violation(&self, ch: &BipartiteChannel) -> Result<f64> {
        let marginal = ch.choi().partial_trace(&[A1])?;
        let lifted = HermitianOperator::identity(marginal.layout().only(&[A0])?).tensor(&self.x)?;
        let dominance = negativity(&[&lifted.sub(&marginal)?]);
        let x_b0 = self.x.partial_trace(&[B1])?;
        let normalisation =
            x_b0.max_abs_diff(&HermitianOperator::identity(x_b0.layout().clone()).scale(self.m))?;
        Ok(dominance.max(normalisation))
    }
}

/// Candidate `(M, N)` for the dual
/// `max tr(M J_{A0B0B1}) s.t. tr N = 1, M ⪰ 0, N ⊗ I_{B1} ⪰ tr_{A0} M`.
#[derive(Clone, Debug)]
pub struct HminDualPoint {
    /// On `(A0, B0, B1)`.
    pub m: HermitianOperator,
    /// On `(B0)`.
    pub n: HermitianOperator,
}

impl HminDualPoint {
    pub fn objective(&self, ch: &BipartiteChannel) -> Result<f64> {
        inner(&self.m, &ch.choi().partial_trace(&[A1])?)
    }

    pub fn violation(&self) -> Result<f64> {
        let id_b1 = HermitianOperator::identity(self.m.layout().only(&[B1])?);
        let slack = self.n.tensor(&id_b1)?.sub(&self.m.partial_trace(&[A0])?)?;
        Ok((self.n.trace() - 1.0)
            .abs()
            .max(negativity(&[&self.m, &slack])))
    }
}

fn inner(a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
    let b = b.permute_systems(&a.layout().labels())?;
    Ok((a.matrix() * b.matrix()).trace().re)
}

fn max_abs(op: &HermitianOperator) -> f64 {
    op.matrix().iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

fn basis_projector(
    layout: SystemLayout,
    index: impl Fn(usize) -> bool,
) -> Result<HermitianOperator> {
    let diag: Vec<f64> = (0..layout.total_dim())
        .map(|i| if index(i) { 1.0 } else { 0.0 })
        .collect();
    HermitianOperator::from_real_diagonal(layout, &diag)
}

/// `λ = m` point for the `m`-symbol classical noiseless channel: `m` times
/// the NS box that outputs a uniform `r` to Alice and `r − b + a (mod m)` to
/// Bob on inputs `a`, `b`, which reproduces the exchange with probability
/// `1/m`.
pub fn classical_dmax_primal(m: usize) -> Result<DmaxPrimalPoint> {
    let layout = ChannelDims::uniform(m).layout();
    let y = basis_projector(layout, |i| {
        let (a, r, b, out) = (i / (m * m * m), (i / (m * m)) % m, (i / m) % m, i % m);
        out == (r + m - b + a) % m
    })?;
    Ok(DmaxPrimalPoint {
        lambda: m as f64,
        y,
    })
}

/// Dual point with objective `m` for the classical noiseless channel:
/// `M = Φ_{A0B1}/m ⊗ D_{A1B0}` with `D` the classical correlation
/// `Σ_j |jj><jj|`, `N = I/m²`, `P = (Φ_{A0B1} − I/m) ⊗ I_{B0} / m`, `Q = 0`.
pub fn classical_dmax_dual(m: usize) -> Result<DmaxDualPoint> {
    let layout = ChannelDims::uniform(m).layout();
    let phi = MaxEntangledVector::new(A0, B1, m)?.projector();
    let corr = basis_projector(layout.only(&[A1, B0])?, |i| i / m == i % m)?;
    let mm = phi
        .tensor(&corr)?
        .scale(1.0 / m as f64)
        .permute_systems(&[A0, A1, B0, B1])?;
    let n = HermitianOperator::identity(layout.only(&[A0, B0])?).scale(1.0 / (m * m) as f64);
    let id_ab1 = HermitianOperator::identity(layout.only(&[A0, B1])?);
    let p = phi
        .sub(&id_ab1.scale(1.0 / m as f64))?
        .tensor(&HermitianOperator::identity(layout.only(&[B0])?))?
        .scale(1.0 / m as f64)
        .permute_systems(&[A0, B0, B1])?;
    let q = HermitianOperator::zeros(layout.only(&[A0, A1, B0])?);
    Ok(DmaxDualPoint { m: mm, n, p, q })
}

/// `m`-valued point for `H_min(A|B)` of the classical noiseless channel:
/// `X = I_{B0B1}`, which dominates the 0/1-diagonal `J_{A0B0B1}` and has
/// `B0` marginal `m I`.
pub fn classical_hmin_primal(m: usize) -> Result<HminPrimalPoint> {
    let layout = ChannelDims::uniform(m).layout();
    let x = HermitianOperator::identity(layout.only(&[B0, B1])?);
    Ok(HminPrimalPoint { m: m as f64, x })
}

/// Dual point with objective `m` for `H_min(A|B)` of the classical noiseless
/// channel: `M = I_{B0} ⊗ Φ_{A0B1} / m`, `N = I/m`.
pub fn classical_hmin_dual(m: usize) -> Result<HminDualPoint> {
    let layout = ChannelDims::uniform(m).layout();
    let phi = MaxEntangledVector::new(A0, B1, m)?.projector();
    let mm = HermitianOperator::identity(layout.only(&[B0])?)
        .tensor(&phi)?
        .scale(1.0 / m as f64)
        .permute_systems(&[A0, B0, B1])?;
    let n = HermitianOperator::identity(layout.only(&[B0])?).scale(1.0 / m as f64);
    Ok(HminDualPoint { m: mm, n })
}

/// The classical noiseless channel together with its matching certificates.
pub struct ClassicalCertificates {
    pub channel: BipartiteChannel,
    pub dmax_primal: DmaxPrimalPoint,
    pub dmax_dual: DmaxDualPoint,
    pub hmin_primal: HminPrimalPoint,
    pub hmin_dual: HminDualPoint,
}

pub fn classical_certificates(m: usize) -> Result<ClassicalCertificates> {
    Ok(ClassicalCertificates {
        channel: classical_noiseless(m)?,
        dmax_primal: classical_dmax_primal(m)?,
        dmax_dual: classical_dmax_dual(m)?,
        hmin_primal: classical_hmin_primal(m)?,
        hmin_dual: classical_hmin_dual(m)?,
    })
}
