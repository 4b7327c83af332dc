//! Exact elimination of linear equalities and of linearly dependent LMI
//! coefficient directions.
//!
//! Equalities are brought to reduced row echelon form with sparse
//! Gauss–Jordan elimination; every pivot variable is then expressed through
//! the remaining (free) variables and substituted into the objective and the
//! LMIs. Free variables whose LMI coefficient matrices are linearly dependent
//! on the others are fixed at zero so the interior-point Schur complement
//! stays positive definite.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::ipm::{Sdp, SdpBlock};
use super::RealConicProblem;

/// Per-variable sparse coefficients of one LMI block.
type BlockTerms = BTreeMap<usize, BTreeMap<(usize, usize), f64>>;

/// The equalities are inconsistent, or the objective decreases along a
/// direction that leaves every LMI unchanged.
#[derive(Debug)]
pub(super) struct Infeasible;

/// Relative magnitude below which eliminated coefficients are dropped.
const DROP_TOL: f64 = 1e-13;
/// Relative tolerance for a redundant equality to count as consistent.
const CONSISTENCY_TOL: f64 = 1e-9;
/// Relative pivot threshold of the dependent-column detection.
const RANK_TOL: f64 = 1e-11;

struct PivotRow {
    var: usize,
    /// Sorted by variable, never containing a pivot variable.
    coeffs: Vec<(usize, f64)>,
    rhs: f64,
}

pub(super) struct Reduced {
    pub sdp: Sdp,
    /// Objective constant after substitution.
    pub objective_constant: f64,
    n_vars: usize,
    /// Original index of every variable of `sdp`.
    kept: Vec<usize>,
    /// `z_var = rhs − Σ c·z_f` over free variables.
    pivots: Vec<PivotRow>,
}

impl Reduced {
    /// Maps a point of the reduced problem back to all original variables.
    pub fn expand(&self, y: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.n_vars];
        for (&var, &v) in self.kept.iter().zip(y) {
            z[var] = v;
        }
        for row in &self.pivots {
            z[row.var] = row.rhs - row.coeffs.iter().map(|&(f, c)| c * z[f]).sum::<f64>();
        }
        z
    }

    pub fn expand_multipliers(
        &self,
        x: Vec<DMatrix<f64>>,
        problem: &RealConicProblem,
    ) -> Vec<DMatrix<f64>> {
        debug_assert_eq!(x.len(), problem.blocks.len());
        x
    }
}

/// Block coefficient count of every variable; used to prefer eliminating
/// variables that cause little fill-in.
fn block_weights(problem: &RealConicProblem) -> Vec<usize> {
    let mut w = vec![0; problem.n_vars];
    for block in &problem.blocks {
        for (k, f) in &block.terms {
            w[*k] += f.nnz();
        }
    }
    w
}

fn eliminate(problem: &RealConicProblem) -> Result<Vec<PivotRow>, Infeasible> {
    let n = problem.n_vars;
    let weights = block_weights(problem);
    let mut rows: Vec<PivotRow> = Vec::new();
    let mut pivot_of: Vec<Option<usize>> = vec![None; n];
    // rows that may contain a given variable (stale entries are skipped)
    let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); n];

    let mut acc = vec![0.0; n];
    let mut touched_mark = vec![false; n];
    let mut touched: Vec<usize> = Vec::new();

    for eq in &problem.equalities {
        let scale = eq.coeffs.iter().map(|(_, a)| a.abs()).fold(0.0, f64::max);
        let mut rhs = eq.rhs;
        for &(k, a) in &eq.coeffs {
            if !touched_mark[k] {
                touched_mark[k] = true;
                touched.push(k);
            }
            acc[k] += a;
        }
        // substitute existing pivots; pivot rows hold only free variables,
        // so a single pass over the original support suffices
        let support: Vec<usize> = touched.clone();
        for k in support {
            if let Some(r) = pivot_of[k] {
                let a = acc[k];
                if a != 0.0 {
                    let row = &rows[r];
                    for &(q, c) in &row.coeffs {
                        if !touched_mark[q] {
                            touched_mark[q] = true;
                            touched.push(q);
                        }
                        acc[q] -= a * c;
                    }
                    rhs -= a * row.rhs;
                }
                acc[k] = 0.0;
            }
        }
        touched.sort_unstable();
        let mut entries: Vec<(usize, f64)> = Vec::new();
        for &k in &touched {
            let v = acc[k];
            if v.abs() > DROP_TOL * scale.max(1.0) {
                entries.push((k, v));
            }
            acc[k] = 0.0;
            touched_mark[k] = false;
        }
        touched.clear();

        if entries.is_empty() {
            if rhs.abs() > CONSISTENCY_TOL * (1.0 + eq.rhs.abs()) {
                return Err(Infeasible);
            }
            continue;
        }

        let vmax = entries.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);
        let &(pvar, pval) = entries
            .iter()
            .filter(|(_, v)| v.abs() >= 0.5 * vmax)
            .min_by_key(|(k, _)| (weights[*k], *k))
            .expect("nonempty");
        let coeffs: Vec<(usize, f64)> = entries
            .iter()
            .filter(|(k, _)| *k != pvar)
            .map(|&(k, v)| (k, v / pval))
            .collect();
        let new_rhs = rhs / pval;

        // Gauss–Jordan: remove the new pivot from earlier rows
        let owners = std::mem::take(&mut col_rows[pvar]);
        for r in owners {
            let pos = match rows[r].coeffs.binary_search_by_key(&pvar, |(k, _)| *k) {
                Ok(pos) => pos,
                Err(_) => continue,
            };
            let a = rows[r].coeffs[pos].1;
            let old = std::mem::take(&mut rows[r].coeffs);
            let merged = merge_scaled(&old, &coeffs, -a, pvar);
            for &(q, _) in &merged {
                if old.binary_search_by_key(&q, |(k, _)| *k).is_err() {
                    col_rows[q].push(r);
                }
            }
            rows[r].coeffs = merged;
            rows[r].rhs -= a * new_rhs;
        }

        let idx = rows.len();
        for &(q, _) in &coeffs {
            col_rows[q].push(idx);
        }
        pivot_of[pvar] = Some(idx);
        rows.push(PivotRow {
            var: pvar,
            coeffs,
            rhs: new_rhs,
        });
    }
    Ok(rows)
}

/// `a + s·b` over sorted sparse vectors, omitting `skip` and tiny results.
fn merge_scaled(a: &[(usize, f64)], b: &[(usize, f64)], s: f64, skip: usize) -> Vec<(usize, f64)> {
    let scale = a
        .iter()
        .map(|(_, v)| v.abs())
        .chain(b.iter().map(|(_, v)| (s * v).abs()))
        .fold(0.0, f64::max);
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let (k, v) = if j >= b.len() || (i < a.len() && a[i].0 < b[j].0) {
            i += 1;
            a[i - 1]
        } else if i >= a.len() || b[j].0 < a[i].0 {
            j += 1;
            (b[j - 1].0, s * b[j - 1].1)
        } else {
            i += 1;
            j += 1;
            (a[i - 1].0, a[i - 1].1 + s * b[j - 1].1)
        };
        if k != skip && v.abs() > DROP_TOL * scale {
            out.push((k, v));
        }
    }
    out
}

/// Indices (into `cols`) of a maximal linearly independent subset of the
/// Gram matrix columns, found by diagonally pivoted Cholesky.
fn independent_columns(gram: DMatrix<f64>) -> Vec<usize> {
    let n = gram.nrows();
    let mut a = gram;
    let mut perm: Vec<usize> = (0..n).collect();
    let max_diag = (0..n).map(|i| a[(i, i)]).fold(0.0, f64::max);
    let mut rank = 0;
    for k in 0..n {
        let (p, d) = (k..n)
            .map(|i| (i, a[(i, i)]))
            .fold((k, f64::NEG_INFINITY), |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            });
        if d <= RANK_TOL * max_diag {
            break;
        }
        if p != k {
            a.swap_rows(k, p);
            a.swap_columns(k, p);
            perm.swap(k, p);
        }
        let l = d.sqrt();
        a[(k, k)] = l;
        for i in k + 1..n {
            a[(i, k)] /= l;
        }
        for j in k + 1..n {
            let ljk = a[(j, k)];
            if ljk == 0.0 {
                continue;
            }
            for i in j..n {
                let lik = a[(i, k)];
                a[(i, j)] -= lik * ljk;
            }
            // keep the upper triangle in sync for the row swaps above
            for i in k + 1..j {
                a[(i, j)] = a[(j, i)];
            }
        }
        rank += 1;
    }
    let mut keep: Vec<usize> = perm[..rank].to_vec();
    keep.sort_unstable();
    keep
}

pub(super) fn reduce(problem: &RealConicProblem) -> Result<Reduced, Infeasible> {
    let n = problem.n_vars;
    let pivots = eliminate(problem)?;
    let mut is_pivot = vec![false; n];
    for row in &pivots {
        is_pivot[row.var] = true;
    }
    let free: Vec<usize> = (0..n).filter(|&k| !is_pivot[k]).collect();
    let mut free_index = vec![usize::MAX; n];
    for (i, &k) in free.iter().enumerate() {
        free_index[k] = i;
    }
    let pivot_row: BTreeMap<usize, &PivotRow> = pivots.iter().map(|r| (r.var, r)).collect();

    // objective
    let mut objective_constant = problem.objective_constant;
    let mut c: Vec<f64> = free.iter().map(|&k| problem.objective[k]).collect();
    for row in &pivots {
        let cp = problem.objective[row.var];
        if cp != 0.0 {
            objective_constant += cp * row.rhs;
            for &(f, a) in &row.coeffs {
                c[free_index[f]] -= cp * a;
            }
        }
    }

    // LMI blocks over free variables
    let mut constants = Vec::with_capacity(problem.blocks.len());
    let mut block_terms: Vec<BlockTerms> = Vec::new();
    for block in &problem.blocks {
        let mut constant = block.constant.clone();
        let mut terms: BlockTerms = BTreeMap::new();
        for (k, f) in &block.terms {
            if let Some(row) = pivot_row.get(k) {
                for &(i, j, v) in &f.entries {
                    constant[(i, j)] += row.rhs * v;
                    if i != j {
                        constant[(j, i)] += row.rhs * v;
                    }
                }
                for &(fv, a) in &row.coeffs {
                    let t = terms.entry(free_index[fv]).or_default();
                    for &(i, j, v) in &f.entries {
                        *t.entry((i, j)).or_insert(0.0) -= a * v;
                    }
                }
            } else {
                let t = terms.entry(free_index[*k]).or_default();
                for &(i, j, v) in &f.entries {
                    *t.entry((i, j)).or_insert(0.0) += v;
                }
            }
        }
        for t in terms.values_mut() {
            let scale = t.values().map(|v| v.abs()).fold(0.0, f64::max);
            t.retain(|_, v| v.abs() > DROP_TOL * scale.max(1e-300));
        }
        terms.retain(|_, t| !t.is_empty());
        constants.push(constant);
        block_terms.push(terms);
    }

    // Gram matrix of the LMI directions (trace inner product)
    let nf = free.len();
    let mut gram = DMatrix::<f64>::zeros(nf, nf);
    for terms in &block_terms {
        let mut by_position: BTreeMap<(usize, usize), Vec<(usize, f64)>> = BTreeMap::new();
        for (&f, t) in terms {
            for (&pos, &v) in t {
                by_position.entry(pos).or_default().push((f, v));
            }
        }
        for ((i, j), list) in by_position {
            let w = if i == j { 1.0 } else { 2.0 };
            for &(f, vf) in &list {
                for &(g, vg) in &list {
                    gram[(f, g)] += w * vf * vg;
                }
            }
        }
    }
    let c_scale = c.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
    for f in 0..nf {
        if gram[(f, f)] == 0.0 && c[f].abs() > 1e-12 * c_scale {
            // the objective is unbounded along a direction invisible to every LMI
            return Err(Infeasible);
        }
    }
    let keep_local = independent_columns(gram);
    let mut new_index = vec![usize::MAX; nf];
    for (i, &f) in keep_local.iter().enumerate() {
        new_index[f] = i;
    }

    let blocks = problem
        .blocks
        .iter()
        .zip(constants)
        .zip(block_terms)
        .map(|((block, constant), terms)| {
            let terms = terms
                .into_iter()
                .filter(|(f, _)| new_index[*f] != usize::MAX)
                .map(|(f, t)| {
                    let mut full = Vec::with_capacity(2 * t.len());
                    for ((i, j), v) in t {
                        // the interior-point method works with A_k = −F_k
                        full.push((i, j, -v));
                        if i != j {
                            full.push((j, i, -v));
                        }
                    }
                    (new_index[f], full)
                })
                .collect();
            let constant = (&constant + constant.transpose()) * 0.5;
            SdpBlock::new(block.side, constant, terms)
        })
        .collect();

    let b = DVector::from_iterator(keep_local.len(), keep_local.iter().map(|&f| -c[f]));
    Ok(Reduced {
        sdp: Sdp { b, blocks },
        objective_constant,
        n_vars: n,
        kept: keep_local.iter().map(|&f| free[f]).collect(),
        pivots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{LinearEquality, LmiBlock, SparseSymmetric};

    fn problem_with_equalities(n: usize, eqs: Vec<LinearEquality>) -> RealConicProblem {
        RealConicProblem {
            n_vars: n,
            objective: vec![1.0; n],
            objective_constant: 0.0,
            equalities: eqs,
            blocks: vec![LmiBlock {
                side: n,
                constant: DMatrix::zeros(n, n),
                terms: (0..n)
                    .map(|k| {
                        (
                            k,
                            SparseSymmetric {
                                side: n,
                                entries: vec![(k, k, 1.0)],
                            },
                        )
                    })
                    .collect(),
            }],
        }
    }

    #[test]
    fn elimination_solves_linear_system() {
        // x0 + x1 + x2 = 3, x0 − x2 = 0, 2x1 = 2 (x0 = x2 = 1, x1 = 1)
        let eqs = vec![
            LinearEquality {
                coeffs: vec![(0, 1.0), (1, 1.0), (2, 1.0)],
                rhs: 3.0,
            },
            LinearEquality {
                coeffs: vec![(0, 1.0), (2, -1.0)],
                rhs: 0.0,
            },
            LinearEquality {
                coeffs: vec![(1, 2.0)],
                rhs: 2.0,
            },
        ];
        let p = problem_with_equalities(3, eqs);
        let r = reduce(&p).unwrap();
        assert_eq!(r.kept.len() + r.pivots.len(), 3);
        // any free value reproduces a solution of the equalities
        let y: Vec<f64> = (0..r.kept.len()).map(|i| 0.3 + i as f64).collect();
        let z = r.expand(&y);
        assert!(p.equality_residual(&z) < 1e-12);
    }

    #[test]
    fn merge_cancels_and_skips() {
        let a = [(0, 1.0), (2, 1.0), (5, 3.0)];
        let b = [(2, 1.0), (3, 2.0)];
        assert_eq!(merge_scaled(&a, &b, -1.0, 5), vec![(0, 1.0), (3, -2.0)]);
    }

    #[test]
    fn dependent_columns_detected() {
        // columns: e1, e2, e1 + e2, 2 e1
        let g = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.0, 1.0, 2.0, //
                0.0, 1.0, 1.0, 0.0, //
                1.0, 1.0, 2.0, 2.0, //
                2.0, 0.0, 2.0, 4.0,
            ],
        );
        assert_eq!(independent_columns(g).len(), 2);
    }
}
