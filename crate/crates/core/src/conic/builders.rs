//! The semidefinite programs behind the cost measures.
//!
//! Every builder takes channels in Choi form on `(A0, A1, B0, B1)` and
//! returns an unsolved [`ConicProblem`]. Notation in the docs: `J` is the
//! Choi operator, `X_S` the marginal of `X` on the systems `S`, `π_S` the
//! maximally mixed state on `S`, and "NS" the non-signalling equalities
//! `X_{A0B0B1} = π_{A0} ⊗ X_{B0B1}` (no signalling from Alice to Bob) and
//! `X_{A0A1B0} = π_{B0} ⊗ X_{A0A1}` (no signalling from Bob to Alice).

use crate::channel::{BipartiteChannel, A0, A1, B0, B1};
use crate::conic::{AffineExpr, ConicProblem};
use crate::error::{Error, Result};
use crate::tensor::{permutation_index_map, CMatrix, HermitianOperator, SystemLayout};

/// Which no-signalling constraints an assisting correlation must satisfy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NsDirection {
    /// No signalling in either direction.
    Both,
    /// No signalling from Alice to Bob only.
    AToB,
}

/// Conditioning direction of the min-entropy program.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HminDirection {
    /// `H_min(A|B)`: Alice's systems conditioned on Bob's.
    AGivenB,
    /// `H_min(B|A)`: Bob's systems conditioned on Alice's.
    BGivenA,
}

const ALL: [&str; 4] = [A0, A1, B0, B1];

fn single(label: &str, dim: usize) -> Result<SystemLayout> {
    SystemLayout::new([(label, dim)])
}

fn identity_on(layout: &SystemLayout, labels: &[&str]) -> Result<HermitianOperator> {
    Ok(HermitianOperator::identity(layout.only(labels)?))
}

/// `expr_{rest} = π_input ⊗ expr_{rest without input}` where `rest` are the
/// systems left after tracing `traced`.
fn add_no_signalling(
    p: &mut ConicProblem,
    name: &str,
    expr: &AffineExpr,
    traced: &[&str],
    input: &str,
) -> Result<()> {
    let pi = HermitianOperator::maximally_mixed(single(input, expr.layout().dim_of(input)?)?);
    let lhs = expr.clone().partial_trace(traced)?;
    let mut both = traced.to_vec();
    both.push(input);
    let rhs = expr.clone().partial_trace(&both)?.tensor_left(&pi)?;
    p.add_eq(name, lhs.sub(rhs)?)?;
    Ok(())
}

fn add_channel_ns(
    p: &mut ConicProblem,
    prefix: &str,
    expr: &AffineExpr,
    direction: NsDirection,
) -> Result<()> {
    add_no_signalling(
        p,
        &format!("{prefix}: no signalling A to B"),
        expr,
        &[A1],
        A0,
    )?;
    if direction == NsDirection::Both {
        add_no_signalling(
            p,
            &format!("{prefix}: no signalling B to A"),
            expr,
            &[B1],
            B0,
        )?;
    }
    Ok(())
}

/// `scalar · I_labels` as an expression on `labels` of `layout`.
fn scalar_times_identity(
    p: &ConicProblem,
    var: crate::conic::Var,
    id: &HermitianOperator,
) -> Result<AffineExpr> {
    p.expr(var).tensor_right(id)
}

/// `tr(expr · c)` as a 1×1 expression.
pub fn inner_product(expr: AffineExpr, c: &HermitianOperator) -> Result<AffineExpr> {
    let labels: Vec<String> = expr
        .layout()
        .labels()
        .iter()
        .map(|s| s.to_string())
        .collect();
    let labels: Vec<&str> = labels.iter().map(String::as_str).collect();
    let aligned = c.permute_systems(&labels)?;
    expr.multiply(None, Some(aligned.into_matrix()))?
        .partial_trace(&labels)
}

/// Max-relative-entropy program; optimal value `λ` with the divergence
/// `log2 λ`:
///
/// `min λ  s.t.  Y ⪰ J,  Y_{A0B0} = λ I,  Y is NS (per `direction`)`.
pub fn build_dmax(ch: &BipartiteChannel, direction: NsDirection) -> Result<ConicProblem> {
    let j = ch.choi();
    let layout = j.layout().clone();
    let mut p = ConicProblem::new();
    let lambda = p.scalar("lambda")?;
    let y = p.hermitian("Y", layout.clone())?;
    let ye = p.expr(y);
    p.add_psd("Y dominates J", ye.clone().sub_constant(j)?)?;
    let rhs = scalar_times_identity(&p, lambda, &identity_on(&layout, &[A0, B0])?)?;
    p.constrain_marginal_equals("normalisation", y, &[A1, B1], rhs)?;
    add_channel_ns(&mut p, "Y", &ye, direction)?;
    p.minimize(p.expr(lambda))?;
    Ok(p)
}

/// Lagrange dual of [`build_dmax`] with both NS constraints; same optimal
/// value `λ`:
///
/// `max tr(M J)  s.t.  tr N = 1,  tr_{A0} P = 0,  tr_{B0} Q = 0,  M ⪰ 0,
///  N_{A0B0} ⊗ I_{A1B1} + P_{A0B0B1} ⊗ I_{A1} + Q_{A0A1B0} ⊗ I_{B1} ⪰ M`.
pub fn build_dmax_dual(ch: &BipartiteChannel) -> Result<ConicProblem> {
    let j = ch.choi();
    let layout = j.layout().clone();
    let mut p = ConicProblem::new();
    let m = p.hermitian("M", layout.clone())?;
    let n = p.hermitian("N", layout.only(&[A0, B0])?)?;
    let pv = p.hermitian("P", layout.only(&[A0, B0, B1])?)?;
    let q = p.hermitian("Q", layout.only(&[A0, A1, B0])?)?;
    p.add_psd("M", p.expr(m))?;
    let tr_n = p.expr(n).partial_trace(&[A0, B0])?;
    p.add_eq("N normalised", tr_n.sub(AffineExpr::real(1.0))?)?;
    p.add_eq("P traceless on A0", p.expr(pv).partial_trace(&[A0])?)?;
    p.add_eq("Q traceless on B0", p.expr(q).partial_trace(&[B0])?)?;
    let bound = p
        .expr(n)
        .tensor_right(&identity_on(&layout, &[A1, B1])?)?
        .add(p.expr(pv).tensor_right(&identity_on(&layout, &[A1])?)?)?
        .add(p.expr(q).tensor_right(&identity_on(&layout, &[B1])?)?)?
        .align_to(&layout)?
        .sub(p.expr(m))?;
    p.add_psd("dominance", bound)?;
    p.maximize(inner_product(p.expr(m), j)?)?;
    Ok(p)
}

/// Min-entropy program; optimal value `m` with `H_min = −log2 m`.
///
/// `A|B`: `min m  s.t.  I_{A0} ⊗ X_{B0B1} ⪰ J_{A0B0B1},  X_{B0} = m I`.
/// `B|A`: `min m  s.t.  I_{B0} ⊗ X_{A0A1} ⪰ J_{A0A1B0},  X_{A0} = m I`.
pub fn build_hmin(ch: &BipartiteChannel, direction: HminDirection) -> Result<ConicProblem> {
    let (cond_in, cond_out, other_in, other_out) = match direction {
        HminDirection::AGivenB => (B0, B1, A0, A1),
        HminDirection::BGivenA => (A0, A1, B0, B1),
    };
    let j = ch.choi();
    let layout = j.layout().clone();
    let marginal = j.partial_trace(&[other_out])?;
    let mut p = ConicProblem::new();
    let m = p.scalar("m")?;
    let x = p.hermitian("X", layout.only(&[cond_in, cond_out])?)?;
    let lifted = p.expr(x).tensor_left(&identity_on(&layout, &[other_in])?)?;
    p.add_psd(
        "X dominates J",
        lifted
            .align_to(marginal.layout())?
            .sub_constant(&marginal)?,
    )?;
    let rhs = scalar_times_identity(&p, m, &identity_on(&layout, &[cond_in])?)?;
    p.constrain_marginal_equals("normalisation", x, &[cond_out], rhs)?;
    p.minimize(p.expr(m))?;
    Ok(p)
}

/// Lagrange dual of [`build_hmin`]; same optimal value `m`.
///
/// `A|B`: `max tr(M J_{A0B0B1})  s.t.  tr N_{B0} = 1,  M ⪰ 0,  N ⊗ I_{B1} ⪰ tr_{A0} M`.
pub fn build_hmin_dual(ch: &BipartiteChannel, direction: HminDirection) -> Result<ConicProblem> {
    let (cond_in, cond_out, other_in, other_out) = match direction {
        HminDirection::AGivenB => (B0, B1, A0, A1),
        HminDirection::BGivenA => (A0, A1, B0, B1),
    };
    let j = ch.choi();
    let layout = j.layout().clone();
    let marginal = j.partial_trace(&[other_out])?;
    let mut p = ConicProblem::new();
    let m = p.hermitian("M", marginal.layout().clone())?;
    let n = p.hermitian("N", layout.only(&[cond_in])?)?;
    p.add_psd("M", p.expr(m))?;
    let tr_n = p.expr(n).partial_trace(&[cond_in])?;
    p.add_eq("N normalised", tr_n.sub(AffineExpr::real(1.0))?)?;
    let bound = p
        .expr(n)
        .tensor_right(&identity_on(&layout, &[cond_out])?)?
        .sub(p.expr(m).partial_trace(&[other_in])?)?;
    p.add_psd("dominance", bound)?;
    p.maximize(inner_product(p.expr(m), &marginal)?)?;
    Ok(p)
}

/// Relative eigenvalue threshold below which a marginal of `J` counts as
/// singular.
const SUPPORT_TOL: f64 = 1e-10;

/// The NS-simulation constraints shared by the error and exact-cost
/// programs: `X ⪰ Q`, `X` is NS, and the marginal equalities tying `V`, `W`,
/// `X` to `m Q` (`mq` is the expression `m Q`). The caller supplies `V` and
/// `W` together with their own dominance constraints.
fn add_simulation_constraints(
    p: &mut ConicProblem,
    q: &AffineExpr,
    mq: &AffineExpr,
    v: &AffineExpr,
    w: &AffineExpr,
) -> Result<()> {
    let x = p.hermitian("X", q.layout().clone())?;
    let x = p.expr(x);
    p.add_psd("X dominates", x.clone().sub(q.clone())?)?;
    add_channel_ns(p, "X", &x, NsDirection::Both)?;
    let tr = |e: &AffineExpr, l: &str| e.clone().partial_trace(&[l]);
    p.add_eq("W matches on A0B0B1", tr(mq, A1)?.sub(tr(w, A1)?)?)?;
    p.add_eq("V matches X on A0B0B1", tr(&x, A1)?.sub(tr(v, A1)?)?)?;
    p.add_eq("V matches on A0A1B0", tr(mq, B1)?.sub(tr(v, B1)?)?)?;
    p.add_eq("W matches X on A0A1B0", tr(&x, B1)?.sub(tr(w, B1)?)?)?;
    Ok(())
}

/// A variable `Z ⪰ J` whose marginal after tracing `traced` is pinned to a
/// multiple of the same marginal of `J`. A PSD `Z − J` is then supported on
/// `supp(J_rest) ⊗ H_traced`; when that support is proper, `Z` is
/// parameterised on it directly so that the program keeps a strictly
/// feasible point (interior-point methods stall without one).
fn dominating_var(
    p: &mut ConicProblem,
    name: &str,
    j: &HermitianOperator,
    traced: &str,
) -> Result<AffineExpr> {
    let layout = j.layout().clone();
    let marginal = j.partial_trace(&[traced])?;
    let support = marginal.support_isometry(SUPPORT_TOL);
    if support.ncols() == marginal.dim() {
        let z = p.hermitian(name, layout)?;
        let ze = p.expr(z);
        p.add_psd(&format!("{name} dominates"), ze.clone().sub_constant(j)?)?;
        return Ok(ze);
    }
    let dt = layout.dim_of(traced)?;
    let lifted = support.kronecker(&CMatrix::identity(dt, dt));
    let joint = marginal.layout().concat(&layout.only(&[traced])?)?;
    let perm = joint.permutation_to(&layout.labels())?;
    let rows = permutation_index_map(&joint.dims(), &perm);
    let u = CMatrix::from_fn(lifted.nrows(), lifted.ncols(), |r, c| lifted[(rows[r], c)]);
    let reduced = single(&format!("{name}_support"), u.ncols())?;
    let j_reduced = HermitianOperator::new(reduced.clone(), u.adjoint() * j.matrix() * &u)?;
    let z = p.hermitian(name, reduced)?;
    p.add_psd(
        &format!("{name} dominates"),
        p.expr(z).sub_constant(&j_reduced)?,
    )?;
    p.expr(z).congruence(u, layout)
}

/// Least simulation error (half diamond norm) of `ch` by an NS-assisted
/// protocol using an `m`-symbol classical noiseless channel in each
/// direction; optimal value `μ`.
pub fn build_min_sim_error(ch: &BipartiteChannel, m: usize) -> Result<ConicProblem> {
    if m == 0 {
        return Err(Error::ParameterOutOfRange {
            name: "m",
            value: 0.0,
            range: "m >= 1",
        });
    }
    let j = ch.choi();
    let layout = j.layout().clone();
    let mut p = ConicProblem::new();
    let mu = p.scalar("mu")?;
    let y = p.hermitian("Y", layout.clone())?;
    let q = p.hermitian("Q", layout.clone())?;
    let (ye, qe) = (p.expr(y), p.expr(q));
    let id_in = identity_on(&layout, &[A0, B0])?;
    let err = scalar_times_identity(&p, mu, &id_in)?.sub(ye.clone().partial_trace(&[A1, B1])?)?;
    p.add_psd("error bound", err)?;
    p.add_psd("Y", ye.clone())?;
    p.add_psd("Y dominates Q - J", ye.sub(qe.clone())?.add_constant(j)?)?;
    p.add_psd("Q", qe.clone())?;
    p.constrain_marginal_equals(
        "Q trace preserving",
        q,
        &[A1, B1],
        AffineExpr::constant(&id_in),
    )?;
    if m == 1 {
        // A PSD difference with vanishing marginal is zero, so one message
        // forces V = W = X = Q: the simulating channel is Q itself and must
        // be NS. Substituting keeps a strictly feasible point.
        add_channel_ns(&mut p, "Q", &qe, NsDirection::Both)?;
    } else {
        let v = p.hermitian("V", layout.clone())?;
        let w = p.hermitian("W", layout)?;
        let (v, w) = (p.expr(v), p.expr(w));
        p.add_psd("V dominates", v.clone().sub(qe.clone())?)?;
        p.add_psd("W dominates", w.clone().sub(qe.clone())?)?;
        add_simulation_constraints(&mut p, &qe, &qe.clone().scale(m as f64), &v, &w)?;
    }
    p.minimize(p.expr(mu))?;
    Ok(p)
}

/// Smallest `m` (relaxed to a real) for which `ch` is simulated exactly;
/// the one-shot cost is `log2 ⌈m⌉`.
pub fn build_exact_cost(ch: &BipartiteChannel) -> Result<ConicProblem> {
    let j = ch.choi();
    let mut p = ConicProblem::new();
    let m = p.scalar("m")?;
    let mj = scalar_times_identity(&p, m, j)?;
    let v = dominating_var(&mut p, "V", j, B1)?;
    let w = dominating_var(&mut p, "W", j, A1)?;
    add_simulation_constraints(&mut p, &AffineExpr::constant(j), &mj, &v, &w)?;
    p.minimize(p.expr(m))?;
    Ok(p)
}

/// Half the diamond norm of `J1 − J2`:
/// `min μ  s.t.  μ I ⪰ Y_{A0B0},  Y ⪰ 0,  Y ⪰ J1 − J2`.
pub fn build_diamond_distance(
    first: &BipartiteChannel,
    second: &BipartiteChannel,
) -> Result<ConicProblem> {
    if first.dims() != second.dims() {
        return Err(Error::DimensionMismatch(format!(
            "channels with dimensions {:?} and {:?}",
            first.dims().as_array(),
            second.dims().as_array()
        )));
    }
    let diff = first.choi().sub(second.choi())?;
    let mut p = ConicProblem::new();
    let mu = p.scalar("mu")?;
    let y = p.hermitian("Y", diff.layout().clone())?;
    let ye = p.expr(y);
    add_diamond_bound(&mut p, mu, ye, AffineExpr::constant(&diff))?;
    p.minimize(p.expr(mu))?;
    Ok(p)
}

/// `μ I ⪰ Y_{A0B0}, Y ⪰ 0, Y ⪰ diff` for a variable `Y` (given as `y`).
fn add_diamond_bound(
    p: &mut ConicProblem,
    mu: crate::conic::Var,
    y: AffineExpr,
    diff: AffineExpr,
) -> Result<()> {
    let id_in = identity_on(y.layout(), &[A0, B0])?;
    let err = scalar_times_identity(p, mu, &id_in)?.sub(y.clone().partial_trace(&[A1, B1])?)?;
    p.add_psd("error bound", err)?;
    p.add_psd("Y", y.clone())?;
    p.add_psd("Y dominates difference", y.sub(diff)?)?;
    Ok(())
}

/// Smoothed max-relative-entropy program: the least `λ` over channels `M`
/// within half-diamond distance `eps` of `ch` such that some NS `Y` with
/// `Y_{A0B0} = λ I` dominates `M`.
pub fn build_smooth_dmax(ch: &BipartiteChannel, eps: f64) -> Result<ConicProblem> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::ParameterOutOfRange {
            name: "eps",
            value: eps,
            range: "[0, 1]",
        });
    }
    let j = ch.choi();
    let layout = j.layout().clone();
    let id_in = identity_on(&layout, &[A0, B0])?;
    let mut p = ConicProblem::new();
    let lambda = p.scalar("lambda")?;
    let y = p.hermitian("Y", layout.clone())?;
    let jm = p.hermitian("JM", layout.clone())?;
    let z = p.hermitian("Z", layout.clone())?;
    let (ye, jme, ze) = (p.expr(y), p.expr(jm), p.expr(z));
    p.add_psd("JM", jme.clone())?;
    p.constrain_marginal_equals(
        "JM trace preserving",
        jm,
        &[A1, B1],
        AffineExpr::constant(&id_in),
    )?;
    p.add_psd("Y dominates JM", ye.clone().sub(jme.clone())?)?;
    let rhs = scalar_times_identity(&p, lambda, &id_in)?;
    p.constrain_marginal_equals("normalisation", y, &[A1, B1], rhs)?;
    add_channel_ns(&mut p, "Y", &ye, NsDirection::Both)?;
    p.add_psd("Z", ze.clone())?;
    p.add_psd("Z dominates JM - J", ze.clone().sub(jme)?.add_constant(j)?)?;
    let radius =
        AffineExpr::constant(&id_in.clone().scale(eps)).sub(ze.partial_trace(&[A1, B1])?)?;
    p.add_psd("distance", radius)?;
    p.minimize(p.expr(lambda))?;
    Ok(p)
}

/// Labels of the superchannel program, in the order of its variable:
/// Alice's outer input, the source's inputs and outputs on her side, her
/// outer output, then the same for Bob.
pub const SUPERCHANNEL_ORDER: [&str; 8] = ["A0", "Ab0", "Ab1", "A1", "B0", "Bb0", "Bb1", "B1"];

/// The source-channel systems of a superchannel Choi operator.
const SUPERCHANNEL_BAR: [&str; 4] = ["Ab0", "Ab1", "Bb0", "Bb1"];

/// `I_{A0A1B0B1} ⊗ J_source^T` on the superchannel layout, with the source
/// systems renamed to the barred labels.
fn lifted_source(layout: &SystemLayout, source: &BipartiteChannel) -> Result<HermitianOperator> {
    let source_t = source.choi().partial_transpose(&ALL)?.relabeled(&[
        (A0, "Ab0"),
        (A1, "Ab1"),
        (B0, "Bb0"),
        (B1, "Bb1"),
    ])?;
    HermitianOperator::identity(layout.only(&ALL)?)
        .tensor(&source_t)?
        .permute_systems(&SUPERCHANNEL_ORDER)
}

/// Choi operator on `(A0, A1, B0, B1)` of the channel that the superchannel
/// with Choi operator `t` (on [`SUPERCHANNEL_ORDER`]) makes out of `source`.
pub fn apply_superchannel(
    t: &HermitianOperator,
    source: &BipartiteChannel,
) -> Result<HermitianOperator> {
    let t = t.permute_systems(&SUPERCHANNEL_ORDER)?;
    let s = source.dims();
    for (label, dim) in [("Ab0", s.a0), ("Ab1", s.a1), ("Bb0", s.b0), ("Bb1", s.b1)] {
        if t.layout().dim_of(label)? != dim {
            return Err(Error::DimensionMismatch(format!(
                "superchannel system {label} has dimension {}, source needs {dim}",
                t.layout().dim_of(label)?
            )));
        }
    }
    let lifted = lifted_source(t.layout(), source)?;
    let product = t.matrix() * lifted.matrix();
    let traced = crate::tensor::partial_trace_raw(
        &product,
        &t.layout().dims(),
        &t.layout().mask(&SUPERCHANNEL_BAR)?,
    );
    HermitianOperator::with_tolerance(t.layout().without(&SUPERCHANNEL_BAR)?, traced, 1e-8)?
        .permute_systems(&ALL)
}

/// Least half-diamond error with which an NS superchannel turns `source`
/// into `target`; optimal value `μ`.
///
/// The superchannel's Choi operator `T` lives on [`SUPERCHANNEL_ORDER`]. It
/// is PSD, trace preserving from `(A0, Ab1, B0, Bb1)`, each party's part is
/// causally ordered, and the parties do not signal to each other. The
/// simulated channel is the link product `tr_bar[T (J_source^T ⊗ I)]`.
pub fn build_ns_superchannel_sim(
    source: &BipartiteChannel,
    target: &BipartiteChannel,
) -> Result<ConicProblem> {
    let s = source.dims();
    let t = target.dims();
    let layout = SystemLayout::new([
        ("A0", t.a0),
        ("Ab0", s.a0),
        ("Ab1", s.a1),
        ("A1", t.a1),
        ("B0", t.b0),
        ("Bb0", s.b0),
        ("Bb1", s.b1),
        ("B1", t.b1),
    ])?;
    let lifted = lifted_source(&layout, source)?;

    let mut p = ConicProblem::new();
    let tv = p.hermitian("T", layout.clone())?;
    let te = p.expr(tv);
    p.add_psd("T", te.clone())?;
    let id_inputs = HermitianOperator::identity(layout.only(&["A0", "Ab1", "B0", "Bb1"])?);
    p.constrain_marginal_equals(
        "T trace preserving",
        tv,
        &["Ab0", "A1", "Bb0", "B1"],
        AffineExpr::constant(&id_inputs),
    )?;
    add_no_signalling(
        &mut p,
        "T: Alice's input is not seen by Bob",
        &te,
        &["Ab0", "A1"],
        "A0",
    )?;
    add_no_signalling(&mut p, "T: Alice's post-processing", &te, &["A1"], "Ab1")?;
    add_no_signalling(
        &mut p,
        "T: Bob's input is not seen by Alice",
        &te,
        &["Bb0", "B1"],
        "B0",
    )?;
    add_no_signalling(&mut p, "T: Bob's post-processing", &te, &["B1"], "Bb1")?;

    let simulated = te
        .multiply(None, Some(lifted.into_matrix()))?
        .partial_trace(&SUPERCHANNEL_BAR)?
        .align_to(target.choi().layout())?;
    let mu = p.scalar("mu")?;
    let y = p.hermitian("Y", target.choi().layout().clone())?;
    let diff = simulated.sub_constant(target.choi())?;
    let ye = p.expr(y);
    add_diamond_bound(&mut p, mu, ye, diff)?;
    p.minimize(p.expr(mu))?;
    Ok(p)
}

/// Point-to-point NS cost program for a channel with `d_A1 = d_B0 = 1`:
/// `min tr X  s.t.  I_{A0} ⊗ X_{B1} ⪰ J_{A0B1}`; the cost is `log2 ⌈m⌉`.
pub fn build_p2p_cost(ch: &BipartiteChannel) -> Result<ConicProblem> {
    if !ch.dims().is_point_to_point() {
        return Err(Error::DimensionMismatch(format!(
            "point-to-point program needs d_A1 = d_B0 = 1, found {:?}",
            ch.dims().as_array()
        )));
    }
    let j = ch.choi().partial_trace(&[A1, B0])?;
    let mut p = ConicProblem::new();
    let x = p.hermitian("X", j.layout().only(&[B1])?)?;
    let lifted = p.expr(x).tensor_left(&identity_on(j.layout(), &[A0])?)?;
    p.add_psd("X dominates J", lifted.sub_constant(&j)?)?;
    p.minimize(p.expr(x).partial_trace(&[B1])?)?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{
        classical_noiseless, classical_one_way, depolarize_global, identity_channel, quantum_wire,
        random_channel, replacement_channel, swap_channel, ChannelDims,
    };
    use crate::solver::InteriorPointSolver;

    fn solve(p: &ConicProblem) -> f64 {
        let sol = p.solve(&InteriorPointSolver::default()).unwrap();
        assert!(sol.status().is_usable(), "{:?}", sol.status());
        sol.objective_value()
    }

    #[test]
    fn dmax_of_classical_channel_is_message_count() {
        let ch = classical_noiseless(2).unwrap();
        let lambda = solve(&build_dmax(&ch, NsDirection::Both).unwrap());
        assert!((lambda - 2.0).abs() < 1e-6, "{lambda}");
    }

    #[test]
    fn dmax_primal_and_dual_agree() {
        let ch = random_channel(11, ChannelDims::new(2, 2, 1, 2), 2).unwrap();
        let primal = solve(&build_dmax(&ch, NsDirection::Both).unwrap());
        let dual = solve(&build_dmax_dual(&ch).unwrap());
        assert!((primal - dual).abs() < 1e-6, "{primal} vs {dual}");
    }

    #[test]
    fn hmin_primal_and_dual_agree() {
        let ch = random_channel(5, ChannelDims::new(2, 1, 2, 2), 3).unwrap();
        for dir in [HminDirection::AGivenB, HminDirection::BGivenA] {
            let primal = solve(&build_hmin(&ch, dir).unwrap());
            let dual = solve(&build_hmin_dual(&ch, dir).unwrap());
            assert!((primal - dual).abs() < 1e-6, "{dir:?}: {primal} vs {dual}");
        }
    }

    #[test]
    fn identity_has_trivial_cost_and_zero_dmax() {
        // The identity channel needs no communication and is itself NS.
        let ch = identity_channel(2, 2).unwrap();
        let lambda = solve(&build_dmax(&ch, NsDirection::Both).unwrap());
        assert!((lambda - 1.0).abs() < 1e-6, "{lambda}");
        let err = solve(&build_min_sim_error(&ch, 1).unwrap());
        assert!(err.abs() < 1e-6, "{err}");
    }

    #[test]
    fn swap_needs_four_messages() {
        let ch = swap_channel();
        let m = solve(&build_exact_cost(&ch).unwrap());
        assert!((m - 4.0).abs() < 1e-4, "{m}");
        let err = solve(&build_min_sim_error(&ch, 4).unwrap());
        assert!(err.abs() < 1e-6, "{err}");
        let err = solve(&build_min_sim_error(&ch, 1).unwrap());
        assert!(err > 0.1, "{err}");
    }

    #[test]
    fn diamond_distance_to_full_depolarizer() {
        // Half diamond distance between the qubit identity and the fully
        // depolarizing channel is 1 - 1/d^2 = 3/4; partial noise scales it.
        let id = identity_channel(2, 1).unwrap();
        for p in [1.0, 0.4] {
            let noisy = depolarize_global(&id, p).unwrap();
            let dist = solve(&build_diamond_distance(&id, &noisy).unwrap());
            assert!((dist - 0.75 * p).abs() < 1e-6, "{p}: {dist}");
        }
    }

    #[test]
    fn smoothing_lowers_dmax() {
        let ch = swap_channel();
        let exact = solve(&build_dmax(&ch, NsDirection::Both).unwrap());
        let zero = solve(&build_smooth_dmax(&ch, 0.0).unwrap());
        assert!((exact - zero).abs() < 1e-5, "{exact} vs {zero}");
        let smooth = solve(&build_smooth_dmax(&ch, 0.2).unwrap());
        assert!(smooth < exact - 1e-3);
        // At full radius the replacement channel (λ = 1) is allowed.
        let full = solve(&build_smooth_dmax(&ch, 1.0).unwrap());
        assert!((full - 1.0).abs() < 1e-5, "{full}");
    }

    #[test]
    fn p2p_cost_of_wires() {
        // A classical wire of d symbols costs d messages; a quantum wire of
        // dimension d costs d^2 (teleportation).
        let m = solve(&build_p2p_cost(&classical_one_way(3).unwrap()).unwrap());
        assert!((m - 3.0).abs() < 1e-6, "{m}");
        let m = solve(&build_p2p_cost(&quantum_wire(3).unwrap()).unwrap());
        assert!((m - 9.0).abs() < 1e-6, "{m}");
        assert!(build_p2p_cost(&swap_channel()).is_err());
    }

    #[test]
    fn superchannel_reproduces_source_and_replaces_it() {
        // A qubit wire from Alice to Bob simulates itself exactly, and any
        // channel can be turned into the replacement channel.
        let wire = quantum_wire(2).unwrap();
        let err = solve(&build_ns_superchannel_sim(&wire, &wire).unwrap());
        assert!(err.abs() < 1e-6, "{err}");
        let target = replacement_channel(wire.dims()).unwrap();
        let err = solve(&build_ns_superchannel_sim(&wire, &target).unwrap());
        assert!(err.abs() < 1e-6, "{err}");
    }

    #[test]
    fn superchannel_cannot_create_communication() {
        // From the replacement channel, the qubit wire is only reachable up
        // to the error of the best NS strategy; it must be positive.
        let wire = quantum_wire(2).unwrap();
        let source = replacement_channel(wire.dims()).unwrap();
        let err = solve(&build_ns_superchannel_sim(&source, &wire).unwrap());
        assert!(err > 0.1, "{err}");
    }
}
