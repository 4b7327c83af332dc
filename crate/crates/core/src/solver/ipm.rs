//! Infeasible-start primal-dual path following with Nesterov–Todd scaling and
//! Mehrotra's predictor-corrector, on the standard pair
//!
//! ```text
//! (P)  min ⟨C, X⟩  s.t.  ⟨A_k, X⟩ = b_k,  X ⪰ 0
//! (D)  max bᵀy     s.t.  Σ_k y_k A_k + Z = C,  Z ⪰ 0
//! ```
//!
//! An LMI problem `min cᵀy s.t. F0 + Σ y_k F_k ⪰ 0` is (D) with `C = F0`,
//! `A_k = −F_k` and `b = −c`.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use super::{SolveStatus, SolverConfig, Triplets, NEAR_OPTIMAL_TOL};

pub(crate) struct SdpBlock {
    side: usize,
    c: DMatrix<f64>,
    /// `(k, entries of A_k)` with both triangles listed.
    terms: Vec<(usize, Triplets)>,
}

impl SdpBlock {
    pub(crate) fn new(side: usize, c: DMatrix<f64>, terms: Vec<(usize, Triplets)>) -> Self {
        Self { side, c, terms }
    }
}

pub(crate) struct Sdp {
    pub b: DVector<f64>,
    pub blocks: Vec<SdpBlock>,
}

pub(crate) struct Outcome {
    pub status: SolveStatus,
    pub y: Vec<f64>,
    pub x: Vec<DMatrix<f64>>,
    /// `⟨C, X⟩`.
    pub primal_objective: f64,
    pub lmi_infeasibility: f64,
    pub multiplier_infeasibility: f64,
    pub iterations: usize,
}

/// Norm beyond which a diverging iterate is read as an infeasibility ray.
const RAY_NORM: f64 = 1e8;
const RAY_RATIO: f64 = 1e-7;
const MIN_STEP: f64 = 1e-10;
/// Iterations without improving on the best iterate before giving up.
const STALL_ITERS: usize = 6;
/// Growth of the error measure that counts as divergence.
const DIVERGENCE_FACTOR: f64 = 1e3;

/// The most accurate iterate seen so far.
struct Best {
    score: f64,
    iteration: usize,
    x: Vec<DMatrix<f64>>,
    y: DVector<f64>,
    pinf: f64,
    dinf: f64,
}

fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

impl Sdp {
    fn n(&self) -> usize {
        self.b.len()
    }

    /// `(⟨A_k, X⟩)_k`.
    fn a_op(&self, x: &[DMatrix<f64>]) -> DVector<f64> {
        let mut out = DVector::zeros(self.n());
        for (block, xb) in self.blocks.iter().zip(x) {
            for (k, entries) in &block.terms {
                out[*k] += entries.iter().map(|&(i, j, v)| v * xb[(i, j)]).sum::<f64>();
            }
        }
        out
    }

    /// `Σ_k y_k A_k` per block.
    fn at_op(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        self.blocks
            .iter()
            .map(|block| {
                let mut m = DMatrix::zeros(block.side, block.side);
                for (k, entries) in &block.terms {
                    let yk = y[*k];
                    if yk != 0.0 {
                        for &(i, j, v) in entries {
                            m[(i, j)] += yk * v;
                        }
                    }
                }
                m
            })
            .collect()
    }
}

/// Nesterov–Todd scaling of one block: `RᵀZR = R⁻¹XR⁻ᵀ = Λ`, `W = RRᵀ`.
struct Scaling {
    r: DMatrix<f64>,
    w: DMatrix<f64>,
    lambda: DVector<f64>,
}

fn nt_scaling(x: &DMatrix<f64>, z: &DMatrix<f64>) -> Option<Scaling> {
    let lx = Cholesky::new(x.clone())?.unpack();
    let lz = Cholesky::new(z.clone())?.unpack();
    let svd = (lz.transpose() * &lx).svd(true, true);
    let v = svd.v_t?.transpose();
    let lambda = svd.singular_values;
    if lambda.iter().any(|&l| !l.is_finite() || l <= 0.0) {
        return None;
    }
    let mut r = lx * v;
    for (j, l) in lambda.iter().enumerate() {
        let s = 1.0 / l.sqrt();
        r.column_mut(j).scale_mut(s);
    }
    let w = &r * r.transpose();
    Some(Scaling { r, w, lambda })
}

/// Largest α ≤ `cap` with `I + α·Λ^{-1/2} D Λ^{-1/2} ⪰ 0` over all blocks.
fn max_step(lambdas: &[DVector<f64>], dirs: &[DMatrix<f64>], cap: f64) -> f64 {
    let mut alpha = cap;
    for (lambda, d) in lambdas.iter().zip(dirs) {
        let n = lambda.len();
        let inv_sqrt: Vec<f64> = lambda.iter().map(|l| 1.0 / l.sqrt()).collect();
        let m = DMatrix::from_fn(n, n, |i, j| d[(i, j)] * inv_sqrt[i] * inv_sqrt[j]);
        let min_eig = SymmetricEigen::new(sym(m)).eigenvalues.min();
        if min_eig < 0.0 {
            alpha = alpha.min(-1.0 / min_eig);
        }
    }
    alpha
}

/// Schur complement `M_ij = Σ_b tr(A_i W A_j W)`.
fn schur(sdp: &Sdp, scalings: &[Scaling]) -> DMatrix<f64> {
    let n = sdp.n();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for (block, sc) in sdp.blocks.iter().zip(scalings) {
        let s = block.side;
        let w = &sc.w;
        let terms = &block.terms;
        let mut prefix_nnz = 0usize;
        for (jdx, (kj, ej)) in terms.iter().enumerate() {
            prefix_nnz += ej.len();
            let nnz_j = ej.len();
            let g_cost = (nnz_j * s * s).min(2 * s * s * s + s * s);
            let dense_cost = g_cost + prefix_nnz;
            let sparse_cost = nnz_j * prefix_nnz;
            if sparse_cost <= dense_cost {
                for (ki, ei) in &terms[..=jdx] {
                    let mut acc = 0.0;
                    for &(a, b, v) in ei {
                        for &(c, d, u) in ej {
                            acc += v * u * w[(b, c)] * w[(d, a)];
                        }
                    }
                    m[(*ki.min(kj), *ki.max(kj))] += acc;
                }
            } else {
                let g = if nnz_j * s * s <= 2 * s * s * s + s * s {
                    let mut g = DMatrix::<f64>::zeros(s, s);
                    for &(c, d, u) in ej {
                        // u · W e_c e_dᵀ W
                        let wc = w.column(c);
                        let wd = w.column(d);
                        g.ger(u, &wc, &wd, 1.0);
                    }
                    g
                } else {
                    let mut a = DMatrix::<f64>::zeros(s, s);
                    for &(c, d, u) in ej {
                        a[(c, d)] += u;
                    }
                    w * a * w
                };
                for (ki, ei) in &terms[..=jdx] {
                    let acc: f64 = ei.iter().map(|&(a, b, v)| v * g[(b, a)]).sum();
                    m[(*ki.min(kj), *ki.max(kj))] += acc;
                }
            }
        }
    }
    // each unordered pair was accumulated once, in the upper triangle
    for j in 0..n {
        for i in 0..j {
            m[(j, i)] = m[(i, j)];
        }
    }
    m
}

fn factor(m: DMatrix<f64>) -> Option<Cholesky<f64, nalgebra::Dyn>> {
    let max_diag = m.diagonal().amax().max(1e-300);
    if let Some(c) = Cholesky::new(m.clone()) {
        return Some(c);
    }
    let mut shift = 1e-14 * max_diag;
    while shift <= 1e-8 * max_diag {
        let mut shifted = m.clone();
        for i in 0..shifted.nrows() {
            shifted[(i, i)] += shift;
        }
        if let Some(c) = Cholesky::new(shifted) {
            return Some(c);
        }
        shift *= 100.0;
    }
    None
}

struct Direction {
    dx: Vec<DMatrix<f64>>,
    dy: DVector<f64>,
    dz: Vec<DMatrix<f64>>,
    /// Scaled directions `R⁻¹ΔXR⁻ᵀ` and `RᵀΔZR`.
    dx_scaled: Vec<DMatrix<f64>>,
    dz_scaled: Vec<DMatrix<f64>>,
}

/// Solves the Newton system for the scaled complementarity right-hand side
/// `rc` (one matrix per block, in the Λ-basis).
fn direction(
    sdp: &Sdp,
    schur_matrix: &DMatrix<f64>,
    chol: &Cholesky<f64, nalgebra::Dyn>,
    scalings: &[Scaling],
    rp: &DVector<f64>,
    rd: &[DMatrix<f64>],
    rc: &[DMatrix<f64>],
) -> Direction {
    let u: Vec<DMatrix<f64>> = scalings
        .iter()
        .zip(rc)
        .map(|(sc, rcb)| {
            let l = &sc.lambda;
            DMatrix::from_fn(l.len(), l.len(), |i, j| 2.0 * rcb[(i, j)] / (l[i] + l[j]))
        })
        .collect();
    let rur: Vec<DMatrix<f64>> = scalings
        .iter()
        .zip(&u)
        .map(|(sc, ub)| &sc.r * ub * sc.r.transpose())
        .collect();
    let wrw: Vec<DMatrix<f64>> = scalings
        .iter()
        .zip(rd)
        .map(|(sc, r)| &sc.w * r * &sc.w)
        .collect();
    let rhs = rp - sdp.a_op(&rur) + sdp.a_op(&wrw);
    let mut dy = chol.solve(&rhs);
    // iterative refinement against the unshifted Schur complement
    for _ in 0..2 {
        let residual = &rhs - schur_matrix * &dy;
        if residual.norm() <= 1e-15 * rhs.norm() {
            break;
        }
        dy += chol.solve(&residual);
    }
    let aty = sdp.at_op(&dy);
    let dz: Vec<DMatrix<f64>> = rd.iter().zip(&aty).map(|(r, a)| sym(r - a)).collect();
    let mut dx = Vec::with_capacity(dz.len());
    let mut dx_scaled = Vec::with_capacity(dz.len());
    let mut dz_scaled = Vec::with_capacity(dz.len());
    for ((sc, dzb), (ub, rurb)) in scalings.iter().zip(&dz).zip(u.iter().zip(rur)) {
        dx.push(sym(rurb - &sc.w * dzb * &sc.w));
        let dzs = sym(sc.r.transpose() * dzb * &sc.r);
        dx_scaled.push(sym(ub - &dzs));
        dz_scaled.push(dzs);
    }
    Direction {
        dx,
        dy,
        dz,
        dx_scaled,
        dz_scaled,
    }
}

fn initial_point(sdp: &Sdp) -> (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
    let mut xs = Vec::new();
    let mut zs = Vec::new();
    for block in &sdp.blocks {
        let s = block.side as f64;
        let mut xi: f64 = 10.0_f64.max(s.sqrt());
        let mut eta: f64 = 10.0_f64.max(s.sqrt()).max(block.c.norm());
        for (k, entries) in &block.terms {
            let norm = entries.iter().map(|(_, _, v)| v * v).sum::<f64>().sqrt();
            xi = xi.max(s * (1.0 + sdp.b[*k].abs()) / (1.0 + norm));
            eta = eta.max(norm);
        }
        xs.push(DMatrix::identity(block.side, block.side) * xi);
        zs.push(DMatrix::identity(block.side, block.side) * eta);
    }
    (xs, zs)
}

pub(crate) fn run(sdp: &Sdp, config: &SolverConfig) -> Outcome {
    let n_total: usize = sdp.blocks.iter().map(|b| b.side).sum();
    let (mut x, mut z) = initial_point(sdp);
    let mut y = DVector::<f64>::zeros(sdp.n());
    let b_norm = sdp.b.norm();
    let c_norm = sdp
        .blocks
        .iter()
        .map(|b| b.c.norm_squared())
        .sum::<f64>()
        .sqrt();

    let mut status;
    let mut iterations = 0;
    let mut pinf;
    let mut dinf;
    let mut stalled = 0;
    let trace = std::env::var_os("NSCOST_TRACE").is_some();
    let mut best: Option<Best> = None;

    loop {
        let ax = sdp.a_op(&x);
        let rp = &sdp.b - &ax;
        let aty = sdp.at_op(&y);
        let rd: Vec<DMatrix<f64>> = sdp
            .blocks
            .iter()
            .zip(&z)
            .zip(&aty)
            .map(|((blk, zb), ab)| &blk.c - zb - ab)
            .collect();
        let pobj: f64 = sdp
            .blocks
            .iter()
            .zip(&x)
            .map(|(blk, xb)| inner(&blk.c, xb))
            .sum();
        let dobj = sdp.b.dot(&y);
        let rd_norm = rd.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt();
        pinf = rp.norm() / (1.0 + b_norm);
        dinf = rd_norm / (1.0 + c_norm);
        let rel_gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        let xz: f64 = x.iter().zip(&z).map(|(a, b)| inner(a, b)).sum();
        let rel_compl = xz / (1.0 + pobj.abs() + dobj.abs());

        if trace {
            eprintln!(
                "iter {iterations:3} pobj {pobj:+.10e} dobj {dobj:+.10e} gap {rel_gap:.2e} compl {rel_compl:.2e} pinf {pinf:.2e} dinf {dinf:.2e}"
            );
        }
        let converged = |tol_gap: f64, tol_feas: f64| {
            rel_gap <= tol_gap && rel_compl <= tol_gap && pinf <= tol_feas && dinf <= tol_feas
        };
        if converged(config.tol_gap, config.tol_feas) {
            status = SolveStatus::Optimal;
            break;
        }
        let score = rel_gap.max(rel_compl).max(pinf).max(dinf);
        match &best {
            Some(b) if b.score <= score => {
                // Past the attainable accuracy the iterates only degrade.
                if b.score <= NEAR_OPTIMAL_TOL
                    && (iterations >= b.iteration + STALL_ITERS
                        || score > DIVERGENCE_FACTOR * b.score)
                {
                    status = SolveStatus::NearOptimal;
                    break;
                }
            }
            _ => {
                best = Some(Best {
                    score,
                    iteration: iterations,
                    x: x.clone(),
                    y: y.clone(),
                    pinf,
                    dinf,
                })
            }
        }

        // divergence along an infeasibility ray
        let x_norm = x.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt();
        if pobj < 0.0 && x_norm > RAY_NORM && ax.norm() <= RAY_RATIO * -pobj {
            status = SolveStatus::Infeasible;
            break;
        }
        let y_norm = y.norm();
        if dobj > 0.0 && y_norm > RAY_NORM {
            let ray_res = aty
                .iter()
                .zip(&z)
                .map(|(a, zb)| (a + zb).norm_squared())
                .sum::<f64>()
                .sqrt();
            if ray_res <= RAY_RATIO * dobj {
                status = SolveStatus::Infeasible;
                break;
            }
        }

        if iterations >= config.max_iters {
            status = if converged(NEAR_OPTIMAL_TOL, NEAR_OPTIMAL_TOL) {
                SolveStatus::NearOptimal
            } else {
                SolveStatus::IterationLimit
            };
            break;
        }
        iterations += 1;

        let failure = |conv: bool| {
            if conv {
                SolveStatus::NearOptimal
            } else {
                SolveStatus::NumericalFailure
            }
        };
        let scalings: Option<Vec<Scaling>> = x
            .iter()
            .zip(&z)
            .map(|(xb, zb)| nt_scaling(xb, zb))
            .collect();
        let Some(scalings) = scalings else {
            status = failure(converged(NEAR_OPTIMAL_TOL, NEAR_OPTIMAL_TOL));
            break;
        };
        let schur_matrix = schur(sdp, &scalings);
        let Some(chol) = factor(schur_matrix.clone()) else {
            status = failure(converged(NEAR_OPTIMAL_TOL, NEAR_OPTIMAL_TOL));
            break;
        };
        let mu = xz / n_total as f64;
        let lambdas: Vec<DVector<f64>> = scalings.iter().map(|s| s.lambda.clone()).collect();

        // predictor
        let rc_aff: Vec<DMatrix<f64>> = lambdas
            .iter()
            .map(|l| DMatrix::from_diagonal(&l.map(|v| -v * v)))
            .collect();
        let aff = direction(sdp, &schur_matrix, &chol, &scalings, &rp, &rd, &rc_aff);
        let ap = max_step(&lambdas, &aff.dx_scaled, 1.0);
        let ad = max_step(&lambdas, &aff.dz_scaled, 1.0);
        let mu_aff: f64 = x
            .iter()
            .zip(&z)
            .zip(aff.dx.iter().zip(&aff.dz))
            .map(|((xb, zb), (dxb, dzb))| inner(&(xb + dxb * ap), &(zb + dzb * ad)))
            .sum::<f64>()
            / n_total as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // corrector
        let rc: Vec<DMatrix<f64>> = lambdas
            .iter()
            .zip(aff.dx_scaled.iter().zip(&aff.dz_scaled))
            .map(|(l, (dxs, dzs))| {
                let second = sym(dxs * dzs);
                let mut m = -second;
                for i in 0..l.len() {
                    m[(i, i)] += sigma * mu - l[i] * l[i];
                }
                m
            })
            .collect();
        let dir = direction(sdp, &schur_matrix, &chol, &scalings, &rp, &rd, &rc);
        let ap = (config.step_fraction * max_step(&lambdas, &dir.dx_scaled, 1e12)).min(1.0);
        let ad = (config.step_fraction * max_step(&lambdas, &dir.dz_scaled, 1e12)).min(1.0);

        if trace {
            eprintln!(
                "      n {} sigma {sigma:.2e} ap {ap:.3e} ad {ad:.3e}",
                sdp.n()
            );
        }
        if ap < MIN_STEP && ad < MIN_STEP {
            stalled += 1;
            if stalled >= 3 {
                status = failure(converged(NEAR_OPTIMAL_TOL, NEAR_OPTIMAL_TOL));
                break;
            }
        } else {
            stalled = 0;
        }

        for (xb, dxb) in x.iter_mut().zip(&dir.dx) {
            *xb += dxb * ap;
        }
        y += &dir.dy * ad;
        for (zb, dzb) in z.iter_mut().zip(&dir.dz) {
            *zb += dzb * ad;
        }
    }

    if status != SolveStatus::Optimal && status != SolveStatus::Infeasible {
        if let Some(b) = best.filter(|b| b.score <= NEAR_OPTIMAL_TOL) {
            status = SolveStatus::NearOptimal;
            x = b.x;
            y = b.y;
            pinf = b.pinf;
            dinf = b.dinf;
        }
    }
    let primal_objective: f64 = sdp
        .blocks
        .iter()
        .zip(&x)
        .map(|(blk, xb)| inner(&blk.c, xb))
        .sum();
    Outcome {
        status,
        y: y.iter().copied().collect(),
        x,
        primal_objective,
        lmi_infeasibility: dinf,
        multiplier_infeasibility: pinf,
        iterations,
    }
}
