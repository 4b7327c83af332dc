//! The property suite behind `nscost verify`.
//!
//! Each check runs over seeded channels and reports its failing cases;
//! solver errors count as failures of the check that hit them.

use std::fmt;

use nscost::channel::{compose, ns_flags, BipartiteChannel};
use nscost::conic::builders::HminDirection;
use nscost::costs::{Estimator, CEILING_SLACK};
use nscost::Result;
use rayon::prelude::*;

use crate::corpus::{
    corpus, perturbed_validation_failures, random_ns_pairs, random_p2p_channels,
    random_qubit_pairs, random_small_pairs, NamedChannel,
};

/// Largest primal/dual disagreement of the programs with explicit duals.
pub const TOL_DUALITY: f64 = 1e-6;
/// Tolerance of the inequality chain and tensor-product identities, in bits.
pub const TOL_BITS: f64 = 1e-5;
/// Tolerance of the one-way inclusion, in bits.
pub const TOL_INCLUSION: f64 = 1e-6;
/// No-signalling tolerance for composed channels.
pub const TOL_CLOSURE: f64 = 1e-8;
/// Slack of the monotonicity of the simulation error in `m`.
pub const TOL_MONOTONE: f64 = 1e-7;
/// Simulation error regarded as exact.
pub const TOL_EXACT: f64 = 1e-6;
/// Diamond distance of a channel to itself and asymmetry of the distance.
pub const TOL_DIAMOND: f64 = 1e-7;
/// Amount added to a Choi diagonal entry by the perturbation option.
pub const PERTURBATION: f64 = 1e-3;

/// Result of one property over all its cases.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub cases: usize,
    /// Largest observed violation margin (0 when every case holds strictly).
    pub worst: f64,
    pub failures: Vec<String>,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn collect(name: &'static str, results: Vec<std::result::Result<f64, String>>) -> Self {
        let cases = results.len();
        let mut worst = 0.0f64;
        let mut failures = Vec::new();
        for r in results {
            match r {
                Ok(excess) => worst = worst.max(excess),
                Err(msg) => failures.push(msg),
            }
        }
        Self {
            name,
            cases,
            worst,
            failures,
        }
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        write!(
            f,
            "{verdict} {} ({} cases, worst deviation {:.2e})",
            self.name, self.cases, self.worst
        )?;
        for msg in &self.failures {
            write!(f, "\n    {msg}")?;
        }
        Ok(())
    }
}

/// `Ok(deviation)` when `deviation ≤ tol`, otherwise a failure message.
fn within(label: &str, deviation: f64, tol: f64) -> std::result::Result<f64, String> {
    if deviation <= tol {
        Ok(deviation.max(0.0))
    } else if deviation.is_nan() {
        Err(format!("{label}: NaN"))
    } else {
        Err(format!(
            "{label}: deviation {deviation:.3e} exceeds {tol:.0e}"
        ))
    }
}

fn err_msg(label: &str, e: nscost::Error) -> String {
    format!("{label}: {e}")
}

/// Every corpus member passes the channel validation again.
pub fn check_validity(corpus: &[NamedChannel]) -> CheckOutcome {
    let results = corpus
        .iter()
        .map(|nc| {
            BipartiteChannel::from_choi(nc.channel.dims(), nc.channel.choi().matrix().clone())
                .map(|_| 0.0)
                .map_err(|e| err_msg(&nc.name, e))
        })
        .collect();
    CheckOutcome::collect("channel validity", results)
}

/// Validation of the corpus after breaking trace preservation of every
/// member; each rejection is reported as a failure.
pub fn check_perturbed_validity(corpus: &[NamedChannel]) -> CheckOutcome {
    let rejected = perturbed_validation_failures(corpus, PERTURBATION);
    CheckOutcome {
        name: "perturbed channel validity",
        cases: corpus.len(),
        worst: 0.0,
        failures: rejected
            .into_iter()
            .map(|(name, e)| format!("{name} (perturbed): {e}"))
            .collect(),
    }
}

/// Primal and dual programs of the max-relative entropy agree.
pub fn check_dmax_duality(est: &Estimator, corpus: &[NamedChannel]) -> CheckOutcome {
    let results = corpus
        .par_iter()
        .map(|nc| {
            let primal = est.dmax(&nc.channel).map_err(|e| err_msg(&nc.name, e))?;
            let dual = est
                .dmax_dual(&nc.channel)
                .map_err(|e| err_msg(&nc.name, e))?;
            within(
                &nc.name,
                (primal.raw_scalar - dual.raw_scalar).abs(),
                TOL_DUALITY,
            )
        })
        .collect();
    CheckOutcome::collect("dmax primal/dual agreement", results)
}

/// Primal and dual programs of both min-entropies agree.
pub fn check_hmin_duality(est: &Estimator, corpus: &[NamedChannel]) -> CheckOutcome {
    let results = corpus
        .par_iter()
        .map(|nc| {
            let mut worst = 0.0f64;
            for dir in [HminDirection::AGivenB, HminDirection::BGivenA] {
                let label = format!("{} {dir:?}", nc.name);
                let primal = est.hmin(&nc.channel, dir).map_err(|e| err_msg(&label, e))?;
                let dual = est
                    .hmin_dual(&nc.channel, dir)
                    .map_err(|e| err_msg(&label, e))?;
                worst = worst.max(within(
                    &label,
                    (primal.raw_scalar - dual.raw_scalar).abs(),
                    TOL_DUALITY,
                )?);
            }
            Ok(worst)
        })
        .collect();
    CheckOutcome::collect("hmin primal/dual agreement", results)
}

/// `−min H_min ≤ D_max ≤ log2 m*` (unceiled).
pub fn check_sandwich(est: &Estimator, corpus: &[NamedChannel]) -> CheckOutcome {
    let results = corpus
        .par_iter()
        .map(|nc| {
            let lb = est
                .asymptotic_lower_bound(&nc.channel)
                .map_err(|e| err_msg(&nc.name, e))?;
            let dmax = est.dmax(&nc.channel).map_err(|e| err_msg(&nc.name, e))?;
            let cost = est
                .one_shot_cost(&nc.channel)
                .map_err(|e| err_msg(&nc.name, e))?;
            let lower = within(
                &format!("{} lower bound vs dmax", nc.name),
                lb.raw_value - dmax.raw_value,
                TOL_BITS,
            )?;
            let upper = within(
                &format!("{} dmax vs one-shot", nc.name),
                dmax.raw_value - cost.raw_value,
                TOL_BITS,
            )?;
            Ok(lower.max(upper))
        })
        .collect();
    CheckOutcome::collect("lower bound <= dmax <= one-shot cost", results)
}

/// One-way divergence never exceeds the two-way one.
pub fn check_oneway_inclusion(est: &Estimator, corpus: &[NamedChannel]) -> CheckOutcome {
    let results = corpus
        .par_iter()
        .map(|nc| {
            let one = est
                .dmax_oneway(&nc.channel)
                .map_err(|e| err_msg(&nc.name, e))?;
            let two = est.dmax(&nc.channel).map_err(|e| err_msg(&nc.name, e))?;
            within(&nc.name, one.raw_value - two.raw_value, TOL_INCLUSION)
        })
        .collect();
    CheckOutcome::collect("dmax one-way <= dmax", results)
}

/// Compositions of NS channels are NS.
pub fn check_ns_closure(pairs: &[(BipartiteChannel, BipartiteChannel)]) -> CheckOutcome {
    let results = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (first, second))| {
            let label = format!("pair {i}");
            let composed = compose(first, second).map_err(|e| err_msg(&label, e))?;
            let flags = ns_flags(&composed, TOL_CLOSURE);
            if flags.is_ns() {
                Ok(0.0)
            } else {
                Err(format!("{label}: composition signals ({flags:?})"))
            }
        })
        .collect();
    CheckOutcome::collect("NS closure under composition", results)
}

/// Both min-entropies are additive under tensor products.
pub fn check_hmin_additivity(
    est: &Estimator,
    pairs: &[(BipartiteChannel, BipartiteChannel)],
) -> CheckOutcome {
    let results = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (first, second))| {
            let label = format!("pair {i}");
            let joint = first.tensor(second).map_err(|e| err_msg(&label, e))?;
            let mut worst = 0.0f64;
            for dir in [HminDirection::AGivenB, HminDirection::BGivenA] {
                let l = format!("{label} {dir:?}");
                let h = |ch: &BipartiteChannel| {
                    est.hmin(ch, dir)
                        .map(|r| r.value)
                        .map_err(|e| err_msg(&l, e))
                };
                let deviation = (h(&joint)? - h(first)? - h(second)?).abs();
                worst = worst.max(within(&l, deviation, TOL_BITS)?);
            }
            Ok(worst)
        })
        .collect();
    CheckOutcome::collect("hmin additivity", results)
}

/// The max-relative entropy is subadditive under tensor products.
pub fn check_dmax_subadditivity(
    est: &Estimator,
    pairs: &[(BipartiteChannel, BipartiteChannel)],
) -> CheckOutcome {
    let results = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (first, second))| {
            let label = format!("pair {i}");
            let joint = first.tensor(second).map_err(|e| err_msg(&label, e))?;
            let d = |ch: &BipartiteChannel| {
                est.dmax(ch)
                    .map(|r| r.value)
                    .map_err(|e| err_msg(&label, e))
            };
            within(&label, d(&joint)? - d(first)? - d(second)?, TOL_BITS)
        })
        .collect();
    CheckOutcome::collect("dmax subadditivity", results)
}

/// For point-to-point channels the bipartite exact cost equals the
/// point-to-point one: same ceiled value, raw optima within [`TOL_BITS`].
pub fn check_p2p_reduction(est: &Estimator, channels: &[BipartiteChannel]) -> CheckOutcome {
    let results = channels
        .par_iter()
        .enumerate()
        .map(|(i, ch)| {
            let label = format!("channel {i}");
            let bipartite = est.one_shot_cost(ch).map_err(|e| err_msg(&label, e))?;
            let p2p = est.p2p_cost(ch).map_err(|e| err_msg(&label, e))?;
            if bipartite.value != p2p.value {
                return Err(format!(
                    "{label}: ceiled costs differ ({} vs {} bits)",
                    bipartite.value, p2p.value
                ));
            }
            within(
                &label,
                (bipartite.raw_scalar - p2p.raw_scalar).abs(),
                TOL_BITS,
            )
        })
        .collect();
    CheckOutcome::collect("point-to-point reduction", results)
}

/// The least simulation error does not increase with the message count.
pub fn check_sim_error_monotone(
    est: &Estimator,
    corpus: &[NamedChannel],
    max_m: usize,
) -> CheckOutcome {
    let results = corpus
        .par_iter()
        .map(|nc| {
            let errors = (1..=max_m)
                .map(|m| est.min_sim_error(&nc.channel, m).map(|r| r.raw_value))
                .collect::<Result<Vec<f64>>>()
                .map_err(|e| err_msg(&nc.name, e))?;
            let worst = errors
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(0.0f64, f64::max);
            within(&nc.name, worst, TOL_MONOTONE)
        })
        .collect();
    CheckOutcome::collect("simulation error non-increasing in m", results)
}

/// The exact-cost optimum `m*` and the simulation-error program agree:
/// `⌈m*⌉` messages simulate exactly and one message fewer does not.
pub fn check_cost_error_consistency(est: &Estimator, corpus: &[NamedChannel]) -> CheckOutcome {
    let results = corpus
        .par_iter()
        .map(|nc| {
            let cost = est
                .one_shot_cost(&nc.channel)
                .map_err(|e| err_msg(&nc.name, e))?;
            let m_star = cost.raw_scalar;
            let ceil = ((m_star - CEILING_SLACK).ceil().max(1.0)) as usize;
            let at_ceil = est
                .min_sim_error(&nc.channel, ceil)
                .map_err(|e| err_msg(&nc.name, e))?;
            let excess = within(
                &format!("{} error at m={ceil}", nc.name),
                at_ceil.raw_value,
                TOL_EXACT,
            )?;
            let floor = (m_star - CEILING_SLACK).floor() as usize;
            if floor >= 1 && floor < ceil {
                let below = est
                    .min_sim_error(&nc.channel, floor)
                    .map_err(|e| err_msg(&nc.name, e))?;
                if below.raw_value <= TOL_EXACT {
                    return Err(format!(
                        "{}: m={floor} < m*={m_star:.6} already simulates exactly (error {:.3e})",
                        nc.name, below.raw_value
                    ));
                }
            }
            Ok(excess)
        })
        .collect();
    CheckOutcome::collect("exact cost consistent with simulation error", results)
}

/// The diamond distance vanishes on equal arguments and is symmetric.
pub fn check_diamond(est: &Estimator, corpus: &[NamedChannel]) -> CheckOutcome {
    let results = corpus
        .par_iter()
        .enumerate()
        .map(|(i, nc)| {
            let self_distance = est
                .diamond_distance(&nc.channel, &nc.channel)
                .map_err(|e| err_msg(&nc.name, e))?;
            let mut worst = within(
                &format!("{} to itself", nc.name),
                self_distance.raw_value.abs(),
                TOL_DIAMOND,
            )?;
            // pair with the next member of the same dimensions, if any
            if let Some(other) = corpus[i + 1..]
                .iter()
                .find(|o| o.channel.dims() == nc.channel.dims())
            {
                let label = format!("{} vs {}", nc.name, other.name);
                let ab = est
                    .diamond_distance(&nc.channel, &other.channel)
                    .map_err(|e| err_msg(&label, e))?;
                let ba = est
                    .diamond_distance(&other.channel, &nc.channel)
                    .map_err(|e| err_msg(&label, e))?;
                worst = worst.max(within(
                    &label,
                    (ab.raw_value - ba.raw_value).abs(),
                    TOL_DIAMOND,
                )?);
            }
            Ok(worst)
        })
        .collect();
    CheckOutcome::collect("diamond distance identity and symmetry", results)
}

/// Options of [`run_verify`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Number of channels (or channel pairs) per check; 0 passes vacuously.
    pub cases: usize,
    /// Breaks trace preservation of every corpus Choi before validation.
    pub perturb: bool,
}

/// Runs every check on the corpus of `opts.seed` and returns the outcomes in
/// a fixed order.
pub fn run_verify(est: &Estimator, opts: VerifyOptions) -> Result<Vec<CheckOutcome>> {
    let n = opts.cases;
    let corpus = corpus(opts.seed, n)?;
    let validity = if opts.perturb {
        check_perturbed_validity(&corpus)
    } else {
        check_validity(&corpus)
    };
    Ok(vec![
        validity,
        check_dmax_duality(est, &corpus),
        check_hmin_duality(est, &corpus),
        check_sandwich(est, &corpus),
        check_oneway_inclusion(est, &corpus),
        check_ns_closure(&random_ns_pairs(opts.seed, n)?),
        check_hmin_additivity(est, &random_qubit_pairs(opts.seed, n)?),
        check_dmax_subadditivity(est, &random_small_pairs(opts.seed, n)?),
        check_p2p_reduction(est, &random_p2p_channels(opts.seed, n)?),
        check_sim_error_monotone(est, &corpus, 4),
        check_cost_error_consistency(est, &corpus),
        check_diamond(est, &corpus),
    ])
}
