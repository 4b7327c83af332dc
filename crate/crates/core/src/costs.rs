//! User-facing cost measures, in bits.
//!
//! Every quantity is computed by building the matching program from
//! [`crate::conic::builders`], solving it, and converting the optimal scalar
//! (`λ`, `m`, `μ`) into the reported value. The raw scalar is always kept in
//! the [`CostReport`] for ceilings and cross-checks.

use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::channel::{ns_flags, BipartiteChannel, TOL_NS};
use crate::conic::builders::{
    build_diamond_distance, build_dmax, build_dmax_dual, build_exact_cost, build_hmin,
    build_hmin_dual, build_min_sim_error, build_ns_superchannel_sim, build_p2p_cost,
    build_smooth_dmax, HminDirection, NsDirection,
};
use crate::conic::ConicProblem;
use crate::error::{Error, Result};
use crate::solver::{ConicSolver, InteriorPointSolver, SolveReport, SolveStatus, SolverConfig};

/// Slack subtracted before rounding a relaxed message count up.
pub const CEILING_SLACK: f64 = 1e-6;
/// Largest superchannel Choi side accepted by [`Estimator::general_sim_error`].
pub const SUPERCHANNEL_MAX_SIDE: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Quantity {
    OneShotCost,
    LowerBound,
    Dmax,
    DmaxDual,
    DmaxOneWay,
    Robustness,
    SmoothDmax,
    HminAB,
    HminBA,
    HminABDual,
    HminBADual,
    P2pCost,
    MinSimError,
    DiamondDistance,
    GeneralSimError,
}

impl Quantity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Quantity::OneShotCost => "one_shot_cost",
            Quantity::LowerBound => "lower_bound",
            Quantity::Dmax => "dmax",
            Quantity::DmaxDual => "dmax_dual",
            Quantity::DmaxOneWay => "dmax_oneway",
            Quantity::Robustness => "robustness",
            Quantity::SmoothDmax => "smooth_dmax",
            Quantity::HminAB => "hmin_ab",
            Quantity::HminBA => "hmin_ba",
            Quantity::HminABDual => "hmin_ab_dual",
            Quantity::HminBADual => "hmin_ba_dual",
            Quantity::P2pCost => "p2p_cost",
            Quantity::MinSimError => "min_sim_error",
            Quantity::DiamondDistance => "diamond_distance",
            Quantity::GeneralSimError => "general_sim_error",
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Unit {
    Bits,
    Probability,
    Ratio,
}

impl Unit {
    pub fn as_str(&self) -> &'static str {
        match self {
            Unit::Bits => "bits",
            Unit::Probability => "probability",
            Unit::Ratio => "ratio",
        }
    }
}

/// The outcome of one cost computation.
#[derive(Clone, Debug, PartialEq)]
pub struct CostReport {
    pub quantity: Quantity,
    /// The reported value (after ceilings and clamping), in `unit`.
    pub value: f64,
    pub unit: Unit,
    /// The value before ceilings and clamping, in `unit`.
    pub raw_value: f64,
    /// Optimal value of the underlying program (`λ`, `m` or `μ`).
    pub raw_scalar: f64,
    pub status: SolveStatus,
    /// The solver run behind the value; `None` when it was derived analytically
    /// or combined from several runs.
    pub certificate: Option<SolveReport>,
    /// Lagrange dual bound on `raw_scalar` from the same run.
    pub dual_scalar: Option<f64>,
    /// `[d_A0, d_A1, d_B0, d_B1]` of the (target) channel.
    pub channel_dims: [usize; 4],
    pub m: Option<usize>,
    pub eps: Option<f64>,
    pub elapsed: Duration,
}

impl CostReport {
    /// `value` in bits; `None` for probabilities and ratios.
    pub fn value_bits(&self) -> Option<f64> {
        (self.unit == Unit::Bits).then_some(self.value)
    }
}

impl fmt::Display for CostReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:.6} {}", self.value, self.unit.as_str())?;
        writeln!(f, "quantity: {}", self.quantity)?;
        if self.quantity == Quantity::LowerBound {
            writeln!(
                f,
                "note: lower bound on the asymptotic exact cost, not the cost itself"
            )?;
        }
        writeln!(f, "raw_value: {:.10}", self.raw_value)?;
        writeln!(f, "raw_scalar: {:.10}", self.raw_scalar)?;
        if let Some(d) = self.dual_scalar {
            writeln!(f, "dual_scalar: {d:.10}")?;
        }
        writeln!(f, "status: {}", self.status)?;
        if let Some(cert) = &self.certificate {
            writeln!(f, "iterations: {}", cert.iterations)?;
            writeln!(f, "gap: {:.3e}", cert.gap)?;
        }
        let [a0, a1, b0, b1] = self.channel_dims;
        writeln!(f, "channel: d_A0={a0} d_A1={a1} d_B0={b0} d_B1={b1}")?;
        if let Some(m) = self.m {
            writeln!(f, "m: {m}")?;
        }
        if let Some(eps) = self.eps {
            writeln!(f, "eps: {eps}")?;
        }
        write!(f, "solve_ms: {}", self.elapsed.as_millis())
    }
}

/// The result of one program solve.
struct Solved {
    scalar: f64,
    dual: f64,
    report: SolveReport,
    elapsed: Duration,
}

fn log2_ceiling(m: f64) -> f64 {
    (m - CEILING_SLACK).ceil().max(1.0).log2()
}

/// Computes cost measures with a given conic solver.
#[derive(Clone)]
pub struct Estimator {
    solver: Arc<dyn ConicSolver>,
}

impl Default for Estimator {
    fn default() -> Self {
        Self::new(SolverConfig::default())
    }
}

impl fmt::Debug for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Estimator")
    }
}

impl Estimator {
    /// An estimator backed by the built-in interior-point solver.
    pub fn new(config: SolverConfig) -> Self {
        Self::with_solver(Arc::new(InteriorPointSolver::new(config)))
    }

    pub fn with_solver(solver: Arc<dyn ConicSolver>) -> Self {
        Self { solver }
    }

    fn solve(&self, problem: Result<ConicProblem>, quantity: Quantity) -> Result<Solved> {
        let problem = problem?;
        let start = Instant::now();
        let sol = problem.solve(self.solver.as_ref())?;
        let elapsed = start.elapsed();
        if !sol.status().is_usable() {
            return Err(Error::Solver {
                status: sol.status(),
                quantity: quantity.as_str().to_string(),
            });
        }
        Ok(Solved {
            scalar: sol.objective_value(),
            dual: sol.dual_bound(),
            report: sol.report,
            elapsed,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn report(
        &self,
        quantity: Quantity,
        ch: &BipartiteChannel,
        solved: Solved,
        unit: Unit,
        value: f64,
        raw_value: f64,
    ) -> CostReport {
        CostReport {
            quantity,
            value,
            unit,
            raw_value,
            raw_scalar: solved.scalar,
            status: solved.report.status,
            dual_scalar: Some(solved.dual),
            certificate: Some(solved.report),
            channel_dims: ch.dims().as_array(),
            m: None,
            eps: None,
            elapsed: solved.elapsed,
        }
    }

    fn dmax_like(
        &self,
        ch: &BipartiteChannel,
        quantity: Quantity,
        problem: Result<ConicProblem>,
    ) -> Result<CostReport> {
        let solved = self.solve(problem, quantity)?;
        let bits = solved.scalar.log2();
        Ok(self.report(quantity, ch, solved, Unit::Bits, bits, bits))
    }

    /// Max-relative entropy to the non-signalling set, in bits.
    pub fn dmax(&self, ch: &BipartiteChannel) -> Result<CostReport> {
        self.dmax_like(ch, Quantity::Dmax, build_dmax(ch, NsDirection::Both))
    }

    /// [`Estimator::dmax`] computed from the dual program.
    pub fn dmax_dual(&self, ch: &BipartiteChannel) -> Result<CostReport> {
        self.dmax_like(ch, Quantity::DmaxDual, build_dmax_dual(ch))
    }

    /// Max-relative entropy to the channels that do not signal from Alice to
    /// Bob, in bits; never exceeds [`Estimator::dmax`].
    pub fn dmax_oneway(&self, ch: &BipartiteChannel) -> Result<CostReport> {
        self.dmax_like(ch, Quantity::DmaxOneWay, build_dmax(ch, NsDirection::AToB))
    }

    /// Non-signalling robustness `2^dmax − 1`.
    pub fn robustness(&self, ch: &BipartiteChannel) -> Result<CostReport> {
        let solved = self.solve(build_dmax(ch, NsDirection::Both), Quantity::Robustness)?;
        let r = solved.scalar - 1.0;
        Ok(self.report(Quantity::Robustness, ch, solved, Unit::Ratio, r, r))
    }

    /// ε-smoothed max-relative entropy, in bits; equal to [`Estimator::dmax`]
    /// at `eps = 0`.
    pub fn smooth_dmax(&self, ch: &BipartiteChannel, eps: f64) -> Result<CostReport> {
        let problem = if eps == 0.0 {
            build_dmax(ch, NsDirection::Both)
        } else {
            build_smooth_dmax(ch, eps)
        };
        let mut r = self.dmax_like(ch, Quantity::SmoothDmax, problem)?;
        r.eps = Some(eps);
        Ok(r)
    }

    fn hmin_like(
        &self,
        ch: &BipartiteChannel,
        quantity: Quantity,
        problem: Result<ConicProblem>,
    ) -> Result<CostReport> {
        let solved = self.solve(problem, quantity)?;
        let bits = -solved.scalar.log2();
        Ok(self.report(quantity, ch, solved, Unit::Bits, bits, bits))
    }

    /// Bipartite conditional min-entropy, in bits.
    pub fn hmin(&self, ch: &BipartiteChannel, direction: HminDirection) -> Result<CostReport> {
        let q = match direction {
            HminDirection::AGivenB => Quantity::HminAB,
            HminDirection::BGivenA => Quantity::HminBA,
        };
        self.hmin_like(ch, q, build_hmin(ch, direction))
    }

    /// [`Estimator::hmin`] computed from the dual program.
    pub fn hmin_dual(&self, ch: &BipartiteChannel, direction: HminDirection) -> Result<CostReport> {
        let q = match direction {
            HminDirection::AGivenB => Quantity::HminABDual,
            HminDirection::BGivenA => Quantity::HminBADual,
        };
        self.hmin_like(ch, q, build_hmin_dual(ch, direction))
    }

    /// Lower bound `−min{H_min(A|B), H_min(B|A)}` on the asymptotic exact
    /// cost, clamped at 0; `raw_value` keeps the unclamped bound and
    /// `raw_scalar` the larger of the two optimal `m`.
    pub fn asymptotic_lower_bound(&self, ch: &BipartiteChannel) -> Result<CostReport> {
        let ab = self.hmin(ch, HminDirection::AGivenB)?;
        let ba = self.hmin(ch, HminDirection::BGivenA)?;
        let binding = if ab.value <= ba.value {
            ab.clone()
        } else {
            ba.clone()
        };
        let raw = -binding.value;
        let status = if ab.status == SolveStatus::Optimal && ba.status == SolveStatus::Optimal {
            SolveStatus::Optimal
        } else {
            SolveStatus::NearOptimal
        };
        Ok(CostReport {
            quantity: Quantity::LowerBound,
            value: raw.max(0.0),
            raw_value: raw,
            status,
            elapsed: ab.elapsed + ba.elapsed,
            ..binding
        })
    }

    /// One-shot exact bidirectional cost `log2 ⌈m*⌉`; the relaxed optimum
    /// `m*` is `raw_scalar` and `log2 m*` is `raw_value`. Channels that are
    /// already non-signalling cost 0 bits.
    pub fn one_shot_cost(&self, ch: &BipartiteChannel) -> Result<CostReport> {
        let solved = self.solve(build_exact_cost(ch), Quantity::OneShotCost)?;
        let raw = solved.scalar.log2();
        let value = if ns_flags(ch, TOL_NS).is_ns() {
            0.0
        } else {
            log2_ceiling(solved.scalar)
        };
        Ok(self.report(Quantity::OneShotCost, ch, solved, Unit::Bits, value, raw))
    }

    /// Exact cost of a point-to-point channel `A0 -> B1` from the reduced
    /// program `min tr X` (`log2 ⌈m*⌉`).
    pub fn p2p_cost(&self, ch: &BipartiteChannel) -> Result<CostReport> {
        let solved = self.solve(build_p2p_cost(ch), Quantity::P2pCost)?;
        let raw = solved.scalar.log2();
        let value = log2_ceiling(solved.scalar);
        Ok(self.report(Quantity::P2pCost, ch, solved, Unit::Bits, value, raw))
    }

    /// Least simulation error with `m` messages each way; non-increasing in `m`.
    pub fn min_sim_error(&self, ch: &BipartiteChannel, m: usize) -> Result<CostReport> {
        let solved = self.solve(build_min_sim_error(ch, m), Quantity::MinSimError)?;
        let raw = solved.scalar;
        let mut r = self.report(
            Quantity::MinSimError,
            ch,
            solved,
            Unit::Probability,
            raw.clamp(0.0, 1.0),
            raw,
        );
        r.m = Some(m);
        Ok(r)
    }

    /// Half the diamond norm of the difference of two channels.
    pub fn diamond_distance(
        &self,
        first: &BipartiteChannel,
        second: &BipartiteChannel,
    ) -> Result<CostReport> {
        let solved = self.solve(
            build_diamond_distance(first, second),
            Quantity::DiamondDistance,
        )?;
        let raw = solved.scalar;
        Ok(self.report(
            Quantity::DiamondDistance,
            first,
            solved,
            Unit::Probability,
            raw.clamp(0.0, 1.0),
            raw,
        ))
    }

    /// Least error with which an NS superchannel turns `source` into
    /// `target`. Limited to superchannels of Choi side at most
    /// [`SUPERCHANNEL_MAX_SIDE`].
    pub fn general_sim_error(
        &self,
        source: &BipartiteChannel,
        target: &BipartiteChannel,
    ) -> Result<CostReport> {
        let side = source.dims().choi_dim() * target.dims().choi_dim();
        if side > SUPERCHANNEL_MAX_SIDE {
            return Err(Error::DimensionMismatch(format!(
                "superchannel Choi side {side} exceeds the supported {SUPERCHANNEL_MAX_SIDE}"
            )));
        }
        let solved = self.solve(
            build_ns_superchannel_sim(source, target),
            Quantity::GeneralSimError,
        )?;
        let raw = solved.scalar;
        Ok(self.report(
            Quantity::GeneralSimError,
            target,
            solved,
            Unit::Probability,
            raw.clamp(0.0, 1.0),
            raw,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{
        classical_noiseless, classical_one_way, depolarize_global, quantum_wire, random_ns_channel,
        swap_channel, ChannelDims,
    };

    #[test]
    fn ceiling_has_slack() {
        assert_eq!(log2_ceiling(4.0000004), 2.0);
        assert_eq!(log2_ceiling(3.99), 2.0);
        assert!((log2_ceiling(2.5) - 3f64.log2()).abs() < 1e-15);
        assert_eq!(log2_ceiling(0.9999), 0.0);
    }

    #[test]
    fn classical_channel_calibration() {
        let est = Estimator::default();
        let ch = classical_noiseless(2).unwrap();
        assert!((est.dmax(&ch).unwrap().value - 1.0).abs() < 1e-5);
        assert!((est.robustness(&ch).unwrap().value - 1.0).abs() < 1e-5);
        assert!((est.hmin(&ch, HminDirection::AGivenB).unwrap().value + 1.0).abs() < 1e-5);
        let lb = est.asymptotic_lower_bound(&ch).unwrap();
        assert!((lb.value - 1.0).abs() < 1e-5);
    }

    #[test]
    fn ns_channels_cost_nothing() {
        let est = Estimator::default();
        let ch = random_ns_channel(3, ChannelDims::uniform(2)).unwrap();
        let cost = est.one_shot_cost(&ch).unwrap();
        assert_eq!(cost.value, 0.0);
        assert!(cost.raw_scalar <= 1.0 + 1e-6);
        assert!(est.dmax(&ch).unwrap().value.abs() < 1e-6);
        let lb = est.asymptotic_lower_bound(&ch).unwrap();
        assert!(lb.value >= 0.0 && lb.value < 1e-6);
        assert!(lb.raw_value <= 1e-6);
        assert!(est.min_sim_error(&ch, 1).unwrap().value < 1e-6);
    }

    #[test]
    fn replacement_swap_is_free() {
        let est = Estimator::default();
        let ch = depolarize_global(&swap_channel(), 1.0).unwrap();
        assert!(est.dmax(&ch).unwrap().value.abs() < 1e-6);
        assert_eq!(est.one_shot_cost(&ch).unwrap().value, 0.0);
    }

    #[test]
    fn p2p_examples() {
        let est = Estimator::default();
        assert!((est.p2p_cost(&quantum_wire(2).unwrap()).unwrap().value - 2.0).abs() < 1e-12);
        let dep = depolarize_global(&quantum_wire(2).unwrap(), 1.0).unwrap();
        assert_eq!(est.p2p_cost(&dep).unwrap().value, 0.0);
        assert!(
            (est.hmin(&quantum_wire(2).unwrap(), HminDirection::AGivenB)
                .unwrap()
                .value
                + 2.0)
                .abs()
                < 1e-6
        );
        assert!(est.p2p_cost(&swap_channel()).is_err());
    }

    #[test]
    fn oneway_channel_is_free_for_oneway_dmax() {
        // A classical wire from Alice to Bob does not signal from Bob to
        // Alice, but it does signal from Alice to Bob.
        let est = Estimator::default();
        let ch = classical_one_way(2).unwrap();
        let one = est.dmax_oneway(&ch).unwrap().value;
        let two = est.dmax(&ch).unwrap().value;
        assert!(one <= two + 1e-6);
        assert!(two > 0.5);
    }

    #[test]
    fn superchannel_cap() {
        let est = Estimator::default();
        let err = est
            .general_sim_error(&swap_channel(), &swap_channel())
            .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
        let wire = classical_one_way(2).unwrap();
        assert!(est.general_sim_error(&wire, &wire).unwrap().value < 1e-6);
    }

    #[test]
    fn report_display_starts_with_value() {
        let est = Estimator::default();
        let r = est.dmax(&classical_noiseless(2).unwrap()).unwrap();
        let text = r.to_string();
        assert!(text.starts_with("1.000000 bits\n"), "{text}");
        assert!(text.contains("quantity: dmax"));
    }
}
