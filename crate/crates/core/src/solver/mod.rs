//! Primal-dual interior-point solver for real symmetric linear matrix
//! inequality problems.
//!
//! The solver accepts a [`RealConicProblem`]:
//!
//! ```text
//! minimize    cᵀz + κ
//! subject to  Σ_k a_ik z_k = r_i              (linear equalities)
//!             F0_b + Σ_k z_k F_kb ⪰ 0         (one LMI per block b)
//! ```
//!
//! Equalities are eliminated exactly before the interior-point iterations, so
//! every returned point satisfies them to rounding accuracy.

mod ipm;
mod presolve;

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest LMI block side accepted by [`InteriorPointSolver`].
pub const MAX_BLOCK_SIDE: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub tol_gap: f64,
    pub tol_feas: f64,
    pub step_fraction: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 200,
            tol_gap: 1e-8,
            tol_feas: 1e-8,
            step_fraction: 0.98,
        }
    }
}

impl SolverConfig {
    /// Defaults overridden by `NSCOST_TOL_GAP` and `NSCOST_MAX_ITERS` when set.
    pub fn from_env() -> Result<Self> {
        let mut config = Self::default();
        if let Ok(v) = std::env::var("NSCOST_TOL_GAP") {
            config.tol_gap = v.trim().parse().map_err(|_| {
                Error::MalformedProblem(format!("NSCOST_TOL_GAP=`{v}` is not a number"))
            })?;
        }
        if let Ok(v) = std::env::var("NSCOST_MAX_ITERS") {
            config.max_iters = v.trim().parse().map_err(|_| {
                Error::MalformedProblem(format!("NSCOST_MAX_ITERS=`{v}` is not an integer"))
            })?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol_gap > 0.0 && self.tol_feas > 0.0) {
            return Err(Error::MalformedProblem(
                "solver tolerances must be positive".into(),
            ));
        }
        if !(self.step_fraction > 0.0 && self.step_fraction < 1.0) {
            return Err(Error::MalformedProblem(
                "step_fraction must lie in (0, 1)".into(),
            ));
        }
        if self.max_iters == 0 {
            return Err(Error::MalformedProblem(
                "max_iters must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    NearOptimal,
    Infeasible,
    IterationLimit,
    NumericalFailure,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::NearOptimal => "near_optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::IterationLimit => "iteration_limit",
            SolveStatus::NumericalFailure => "numerical_failure",
        }
    }

    /// Whether the reported values can be used as the optimum.
    pub fn is_usable(&self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::NearOptimal)
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Relative tolerances at which a non-converged run is still reported as
/// [`SolveStatus::NearOptimal`].
pub const NEAR_OPTIMAL_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub status: SolveStatus,
    /// Objective at the returned point (an upper bound when feasible).
    pub primal_value: f64,
    /// Value of the Lagrange dual at the returned multipliers (a lower bound
    /// when they are feasible).
    pub dual_value: f64,
    /// `primal_value - dual_value`.
    pub gap: f64,
    /// Relative violation of the LMIs at the returned point.
    pub primal_infeasibility: f64,
    /// Relative violation of the dual equality constraints.
    pub dual_infeasibility: f64,
    /// Value of every variable of the problem.
    pub primal_solution: Vec<f64>,
    /// PSD multiplier of every LMI block.
    pub dual_solution: Vec<DMatrix<f64>>,
    pub iterations: usize,
}

/// `(row, col, value)` entries of a sparse matrix.
pub(crate) type Triplets = Vec<(usize, usize, f64)>;

/// Symmetric matrix given by its upper triangle `(i, j, v)` with `i <= j`;
/// off-diagonal entries stand for both `(i, j)` and `(j, i)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseSymmetric {
    pub side: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseSymmetric {
    pub fn new(side: usize) -> Self {
        Self {
            side,
            entries: Vec::new(),
        }
    }

    /// Collects the upper triangle of a dense symmetric matrix, dropping
    /// entries with magnitude at most `drop_tol`.
    pub fn from_dense(m: &DMatrix<f64>, drop_tol: f64) -> Self {
        let side = m.nrows();
        let mut entries = Vec::new();
        for j in 0..side {
            for i in 0..=j {
                let v = m[(i, j)];
                if v.abs() > drop_tol {
                    entries.push((i, j, v));
                }
            }
        }
        Self { side, entries }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.side, self.side);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
            if i != j {
                m[(j, i)] += v;
            }
        }
        m
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }
}

/// `F0 + Σ_k z_k F_k ⪰ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct LmiBlock {
    pub side: usize,
    pub constant: DMatrix<f64>,
    pub terms: Vec<(usize, SparseSymmetric)>,
}

/// `Σ_k a_k z_k = rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearEquality {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RealConicProblem {
    pub n_vars: usize,
    pub objective: Vec<f64>,
    pub objective_constant: f64,
    pub equalities: Vec<LinearEquality>,
    pub blocks: Vec<LmiBlock>,
}

impl RealConicProblem {
    pub fn validate(&self) -> Result<()> {
        if self.n_vars == 0 {
            return Err(Error::MalformedProblem("problem has no variables".into()));
        }
        if self.objective.len() != self.n_vars {
            return Err(Error::MalformedProblem(format!(
                "objective has {} coefficients for {} variables",
                self.objective.len(),
                self.n_vars
            )));
        }
        let finite = |v: f64, what: &str| -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::MalformedProblem(format!("non-finite {what}")))
            }
        };
        for &c in &self.objective {
            finite(c, "objective coefficient")?;
        }
        finite(self.objective_constant, "objective constant")?;
        for eq in &self.equalities {
            finite(eq.rhs, "equality right-hand side")?;
            for &(k, a) in &eq.coeffs {
                if k >= self.n_vars {
                    return Err(Error::MalformedProblem(format!(
                        "equality references variable {k}"
                    )));
                }
                finite(a, "equality coefficient")?;
            }
        }
        for (b, block) in self.blocks.iter().enumerate() {
            if block.side == 0 || block.side > MAX_BLOCK_SIDE {
                return Err(Error::MalformedProblem(format!(
                    "block {b} has side {} (allowed 1..={MAX_BLOCK_SIDE})",
                    block.side
                )));
            }
            if block.constant.nrows() != block.side || block.constant.ncols() != block.side {
                return Err(Error::MalformedProblem(format!(
                    "block {b} constant has wrong shape"
                )));
            }
            if (&block.constant - block.constant.transpose()).amax()
                > 1e-9 * (1.0 + block.constant.amax())
            {
                return Err(Error::MalformedProblem(format!(
                    "block {b} constant is not symmetric"
                )));
            }
            for v in block.constant.iter() {
                finite(*v, "block constant entry")?;
            }
            for (k, f) in &block.terms {
                if *k >= self.n_vars {
                    return Err(Error::MalformedProblem(format!(
                        "block {b} references variable {k}"
                    )));
                }
                if f.side != block.side {
                    return Err(Error::MalformedProblem(format!(
                        "block {b} coefficient has wrong side"
                    )));
                }
                for &(i, j, v) in &f.entries {
                    if i > j || j >= block.side {
                        return Err(Error::MalformedProblem(format!(
                            "block {b} coefficient entry ({i}, {j}) is not in the upper triangle"
                        )));
                    }
                    finite(v, "block coefficient entry")?;
                }
            }
        }
        Ok(())
    }

    /// Objective value at `z`.
    pub fn objective_at(&self, z: &[f64]) -> f64 {
        self.objective_constant
            + self
                .objective
                .iter()
                .zip(z)
                .map(|(c, v)| c * v)
                .sum::<f64>()
    }

    /// Dense matrix `F0 + Σ z_k F_k` of block `b`.
    pub fn block_value(&self, b: usize, z: &[f64]) -> DMatrix<f64> {
        let block = &self.blocks[b];
        let mut m = block.constant.clone();
        for (k, f) in &block.terms {
            for &(i, j, v) in &f.entries {
                m[(i, j)] += z[*k] * v;
                if i != j {
                    m[(j, i)] += z[*k] * v;
                }
            }
        }
        m
    }

    /// Largest absolute equality residual at `z`.
    pub fn equality_residual(&self, z: &[f64]) -> f64 {
        self.equalities
            .iter()
            .map(|eq| (eq.coeffs.iter().map(|&(k, a)| a * z[k]).sum::<f64>() - eq.rhs).abs())
            .fold(0.0, f64::max)
    }
}

/// Backend seam: anything that can solve a [`RealConicProblem`].
pub trait ConicSolver: Send + Sync {
    /// Returns `Err` only for malformed input; solver outcomes such as
    /// infeasibility are reported through [`SolveReport::status`].
    fn solve(&self, problem: &RealConicProblem) -> Result<SolveReport>;
}

/// The reference dense interior-point method (Nesterov–Todd scaling,
/// Mehrotra predictor-corrector).
#[derive(Clone, Debug, Default)]
pub struct InteriorPointSolver {
    pub config: SolverConfig,
}

impl InteriorPointSolver {
    pub fn new(config: SolverConfig) -> Self {
        Self { config }
    }
}

impl ConicSolver for InteriorPointSolver {
    fn solve(&self, problem: &RealConicProblem) -> Result<SolveReport> {
        self.config.validate()?;
        problem.validate()?;
        solve_lmi(problem, &self.config)
    }
}

fn solve_lmi(problem: &RealConicProblem, config: &SolverConfig) -> Result<SolveReport> {
    let reduced = match presolve::reduce(problem) {
        Ok(r) => r,
        Err(presolve::Infeasible) => {
            return Ok(SolveReport {
                status: SolveStatus::Infeasible,
                primal_value: f64::INFINITY,
                dual_value: f64::INFINITY,
                gap: f64::NAN,
                primal_infeasibility: f64::INFINITY,
                dual_infeasibility: 0.0,
                primal_solution: vec![0.0; problem.n_vars],
                dual_solution: problem
                    .blocks
                    .iter()
                    .map(|b| DMatrix::zeros(b.side, b.side))
                    .collect(),
                iterations: 0,
            })
        }
    };
    let outcome = ipm::run(&reduced.sdp, config);
    let z = reduced.expand(&outcome.y);
    let primal_value = problem.objective_at(&z);
    let dual_value = reduced.objective_constant - outcome.primal_objective;
    Ok(SolveReport {
        status: outcome.status,
        primal_value,
        dual_value,
        gap: primal_value - dual_value,
        primal_infeasibility: outcome.lmi_infeasibility,
        dual_infeasibility: outcome.multiplier_infeasibility,
        primal_solution: z,
        dual_solution: reduced.expand_multipliers(outcome.x, problem),
        iterations: outcome.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_block(side: usize, constant: &[f64], terms: Vec<(usize, Triplets)>) -> LmiBlock {
        LmiBlock {
            side,
            constant: DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(constant)),
            terms: terms
                .into_iter()
                .map(|(k, entries)| (k, SparseSymmetric { side, entries }))
                .collect(),
        }
    }

    fn solve(p: &RealConicProblem) -> SolveReport {
        InteriorPointSolver::default().solve(p).unwrap()
    }

    #[test]
    fn max_eigenvalue_bound() {
        // min t  s.t.  t·I − diag(1, 2) ⪰ 0
        let p = RealConicProblem {
            n_vars: 1,
            objective: vec![1.0],
            objective_constant: 0.0,
            equalities: vec![],
            blocks: vec![diag_block(
                2,
                &[-1.0, -2.0],
                vec![(0, vec![(0, 0, 1.0), (1, 1, 1.0)])],
            )],
        };
        let r = solve(&p);
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.primal_value - 2.0).abs() < 1e-7, "{r:?}");
        assert!(r.gap.abs() < 1e-6);
    }

    #[test]
    fn rank_one_domination() {
        // min tr X  s.t.  X − |Γ><Γ| ⪰ 0 with X symmetric 4×4 (10 variables)
        let side = 4;
        let mut terms = Vec::new();
        let mut objective = Vec::new();
        let mut k = 0;
        for j in 0..side {
            for i in 0..=j {
                terms.push((k, vec![(i, j, 1.0)]));
                objective.push(if i == j { 1.0 } else { 0.0 });
                k += 1;
            }
        }
        let mut gamma = DMatrix::zeros(side, side);
        for &a in &[0, 3] {
            for &b in &[0, 3] {
                gamma[(a, b)] = -1.0;
            }
        }
        let p = RealConicProblem {
            n_vars: k,
            objective,
            objective_constant: 0.0,
            equalities: vec![],
            blocks: vec![LmiBlock {
                side,
                constant: gamma,
                terms: terms
                    .into_iter()
                    .map(|(k, e)| (k, SparseSymmetric { side, entries: e }))
                    .collect(),
            }],
        };
        let r = solve(&p);
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.primal_value - 2.0).abs() < 1e-7);
    }

    #[test]
    fn equalities_are_eliminated_exactly() {
        // min x + y  s.t.  x − y = 1, x ≥ 0, y ≥ 0  → x = 1, y = 0
        let p = RealConicProblem {
            n_vars: 2,
            objective: vec![1.0, 1.0],
            objective_constant: 0.5,
            equalities: vec![LinearEquality {
                coeffs: vec![(0, 1.0), (1, -1.0)],
                rhs: 1.0,
            }],
            blocks: vec![diag_block(
                2,
                &[0.0, 0.0],
                vec![(0, vec![(0, 0, 1.0)]), (1, vec![(1, 1, 1.0)])],
            )],
        };
        let r = solve(&p);
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.primal_value - 1.5).abs() < 1e-7);
        assert!(p.equality_residual(&r.primal_solution) < 1e-12);
    }

    #[test]
    fn redundant_equalities_are_tolerated() {
        let eq = |s: f64| LinearEquality {
            coeffs: vec![(0, s), (1, -s)],
            rhs: s,
        };
        let p = RealConicProblem {
            n_vars: 2,
            objective: vec![1.0, 1.0],
            objective_constant: 0.0,
            equalities: vec![eq(1.0), eq(2.0), eq(-3.0)],
            blocks: vec![diag_block(
                2,
                &[0.0, 0.0],
                vec![(0, vec![(0, 0, 1.0)]), (1, vec![(1, 1, 1.0)])],
            )],
        };
        let r = solve(&p);
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.primal_value - 1.0).abs() < 1e-7);
    }

    #[test]
    fn inconsistent_equalities_are_infeasible() {
        let p = RealConicProblem {
            n_vars: 1,
            objective: vec![1.0],
            objective_constant: 0.0,
            equalities: vec![
                LinearEquality {
                    coeffs: vec![(0, 1.0)],
                    rhs: 1.0,
                },
                LinearEquality {
                    coeffs: vec![(0, 1.0)],
                    rhs: 2.0,
                },
            ],
            blocks: vec![diag_block(1, &[0.0], vec![(0, vec![(0, 0, 1.0)])])],
        };
        assert_eq!(solve(&p).status, SolveStatus::Infeasible);
    }

    #[test]
    fn infeasible_lmi_detected() {
        // x ≥ 1 and −x ≥ 0
        let p = RealConicProblem {
            n_vars: 1,
            objective: vec![1.0],
            objective_constant: 0.0,
            equalities: vec![],
            blocks: vec![diag_block(
                2,
                &[-1.0, 0.0],
                vec![(0, vec![(0, 0, 1.0), (1, 1, -1.0)])],
            )],
        };
        assert_eq!(solve(&p).status, SolveStatus::Infeasible);
    }

    #[test]
    fn unbounded_reported_as_infeasible_dual() {
        // min −x  s.t. x ≥ 0
        let p = RealConicProblem {
            n_vars: 1,
            objective: vec![-1.0],
            objective_constant: 0.0,
            equalities: vec![],
            blocks: vec![diag_block(1, &[0.0], vec![(0, vec![(0, 0, 1.0)])])],
        };
        assert_eq!(solve(&p).status, SolveStatus::Infeasible);
    }

    #[test]
    fn malformed_problems_rejected() {
        let mut p = RealConicProblem {
            n_vars: 1,
            objective: vec![1.0],
            objective_constant: 0.0,
            equalities: vec![],
            blocks: vec![diag_block(1, &[0.0], vec![(3, vec![(0, 0, 1.0)])])],
        };
        assert!(matches!(
            InteriorPointSolver::default().solve(&p),
            Err(Error::MalformedProblem(_))
        ));
        p.n_vars = 0;
        p.objective.clear();
        assert!(InteriorPointSolver::default().solve(&p).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = SolverConfig {
            step_fraction: 1.0,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn deterministic() {
        let p = RealConicProblem {
            n_vars: 1,
            objective: vec![1.0],
            objective_constant: 0.0,
            equalities: vec![],
            blocks: vec![diag_block(
                3,
                &[-1.0, -2.0, 0.5],
                vec![(0, vec![(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)])],
            )],
        };
        let a = solve(&p);
        let b = solve(&p);
        assert_eq!(a, b);
    }
}
