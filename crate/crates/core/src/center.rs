//! Central series of the algebra and their classical shadows: quantum
//! immanants and determinants, operator-valued central series on the
//! completed algebra, the binomial trace families with their depth grading
//! and classical limits, loop-algebra generators built from step-operator
//! traces, and the invariance, commutativity and independence checks that
//! tie the quantum and classical sides together.

use std::collections::BTreeMap;
use std::sync::Arc;

use num::traits::Zero;

use crate::coeff::Coeff;
use crate::diffop::{
    full_trace, loop_step_matrix, matrix_times_step, power_trace, projected_trace, ShiftOp,
    StepRule,
};
use crate::error::Result;
use crate::fusion::{antisymmetrizer, fusion_idempotent, symmetrizer, StandardTableau};
use crate::loopalg::{LoopElement, LoopWord};
use crate::rat::{binom, rat, rat_i, Rat};
use crate::series::{Expand, LinForm, TruncSeries, VarOrder};
use crate::tensor::{geometric_inverse, TensorOp};
use crate::yangian::{
    element_zero_above_trust, elements_agree_above_trust, shift_matrix_arg, t_matrix,
    tplus_matrix, AlgebraElement, CtxEl, DyCtx, GenIndex, VacuumState,
};

pub fn u_order() -> VarOrder {
    VarOrder::of(&[("u", Expand::AtInfinity)])
}

pub fn one_series(ctx: &Arc<DyCtx>) -> TruncSeries<CtxEl> {
    TruncSeries::constant(&u_order(), CtxEl::constant(ctx, rat_i(1)))
}

fn lift_projector(
    ctx: &Arc<DyCtx>,
    proj: &TensorOp<Rat>,
    order: &VarOrder,
) -> TensorOp<TruncSeries<CtxEl>> {
    proj.map_coeffs(|r| TruncSeries::constant(order, CtxEl::constant(ctx, r.clone())))
}

/// T⁺₁(u+s₁)⋯T⁺_p(u+s_p) with the a-th factor embedded on leg a.
pub fn tplus_train(
    ctx: &Arc<DyCtx>,
    order: &VarOrder,
    uvar: usize,
    r_depth: i32,
    shifts: &[Rat],
) -> Result<TensorOp<TruncSeries<CtxEl>>> {
    let base = tplus_matrix(ctx, order, uvar, r_depth);
    let legs = shifts.len();
    let mut acc: Option<TensorOp<TruncSeries<CtxEl>>> = None;
    for (a, s) in shifts.iter().enumerate() {
        let shifted = shift_matrix_arg(&base, uvar, &LinForm::constant(s.clone()))?;
        let emb = shifted.leg_embed(&[a], legs);
        acc = Some(match acc {
            None => emb,
            Some(p) => p.compose(&emb),
        });
    }
    Ok(acc.expect("empty factor list"))
}

/// tr_{1..m} E_U T⁺₁(u+c₁)⋯T⁺_m(u+c_m) with cₐ the content of the box
/// holding a in the tableau.
pub fn quantum_immanant(
    ctx: &Arc<DyCtx>,
    tab: &StandardTableau,
    r_depth: i32,
) -> Result<TruncSeries<CtxEl>> {
    let order = u_order();
    let proj = fusion_idempotent(tab, ctx.n() as usize)?;
    let shifts: Vec<Rat> = tab.contents().iter().map(|&c| rat_i(c)).collect();
    let train = tplus_train(ctx, &order, 0, r_depth, &shifts)?;
    let lifted = lift_projector(ctx, &proj, &order);
    Ok(full_trace(&lifted.compose(&train), &one_series(ctx)))
}

/// The signed sum over permutations of column-ordered entry products,
/// with the k-th column evaluated at u + arg_shift − k + 1.
pub fn qdet_series(
    ctx: &Arc<DyCtx>,
    dual: bool,
    depth: i32,
    arg_shift: &Rat,
) -> Result<TruncSeries<CtxEl>> {
    let order = u_order();
    let n = ctx.n() as usize;
    let base = if dual {
        tplus_matrix(ctx, &order, 0, depth)
    } else {
        t_matrix(ctx, &order, 0, depth)
    };
    let mut shifted = Vec::with_capacity(n);
    for k in 0..n {
        let form = LinForm::constant(arg_shift - &rat_i(k as i64));
        shifted.push(shift_matrix_arg(&base, 0, &form)?);
    }
    let one = one_series(ctx);
    let mut acc = one.czero_like();
    for perm in permutations(n) {
        let mut prod = one.clone();
        let mut vanished = false;
        for (col, mat) in shifted.iter().enumerate() {
            match mat.get(&[perm[col] as u8], &[col as u8]) {
                Some(e) => prod = prod.mul(e),
                None => {
                    vanished = true;
                    break;
                }
            }
        }
        if !vanished {
            acc = acc.add(&prod.scale(&perm_sign(&perm)));
        }
    }
    Ok(acc)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for mut tail in permutations(n - 1) {
        for pos in 0..=tail.len() {
            let mut p = tail.clone();
            p.insert(pos, n - 1);
            out.push(p);
        }
        tail.clear();
    }
    out
}

fn perm_sign(perm: &[usize]) -> Rat {
    let mut inv = 0usize;
    for i in 0..perm.len() {
        for j in (i + 1)..perm.len() {
            if perm[i] > perm[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        rat_i(1)
    } else {
        rat_i(-1)
    }
}

/// Whether A^(N) T⁺₁(u)⋯T⁺_N(u−N+1) equals A^(N) times the determinant
/// series, entry by entry.
pub fn rmatdet_check(ctx: &Arc<DyCtx>, r_depth: i32) -> Result<bool> {
    let order = u_order();
    let n = ctx.n() as usize;
    let shifts: Vec<Rat> = (0..n).map(|k| rat_i(-(k as i64))).collect();
    let train = tplus_train(ctx, &order, 0, r_depth, &shifts)?;
    let proj = lift_projector(ctx, &antisymmetrizer(n, n), &order);
    let lhs = proj.compose(&train);
    let q = qdet_series(ctx, true, r_depth, &rat_i(0))?;
    let rhs = proj.map_coeffs(|s| s.mul(&q));
    Ok(crate::yangian::ops_agree_on_common(&lhs, &rhs))
}

/// Every t_ij^(s) with 1 ≤ s ≤ s_max kills the state, judged on the
/// exactly-tracked part of each result.
pub fn invariant_up_to(ctx: &DyCtx, el: &AlgebraElement, s_max: i32) -> Result<bool> {
    let state = VacuumState::from_element(el.clone());
    for i in 1..=ctx.n() {
        for j in 1..=ctx.n() {
            for s in 1..=s_max {
                let res = state.act_generator(ctx, GenIndex::yang(i, j, s))?;
                if !element_zero_above_trust(res.element()) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// The u^e coefficient, or a zero element when the series is known to
/// vanish there; None when e lies beyond the tracked window.
pub fn series_coefficient(
    ctx: &Arc<DyCtx>,
    series: &TruncSeries<CtxEl>,
    e: i32,
) -> Option<CtxEl> {
    match series.coeff_known(&[e]) {
        Ok(Some(c)) => Some(c.clone()),
        Ok(None) => Some(CtxEl::constant(ctx, rat_i(0))),
        Err(_) => None,
    }
}

/// Invariance of the u^e coefficients for 0 ≤ e ≤ e_max under all
/// t_ij^(s), 1 ≤ s ≤ s_max.
pub fn series_invariant(
    ctx: &Arc<DyCtx>,
    series: &TruncSeries<CtxEl>,
    s_max: i32,
    e_max: i32,
) -> Result<bool> {
    for e in 0..=e_max {
        if let Some(c) = series_coefficient(ctx, series, e) {
            if !invariant_up_to(ctx, c.element(), s_max)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// tr E_U T⁺₁(u+c₁)⋯T⁺_m(u+c_m) T_m(u+c_m−N/2)⁻¹⋯T₁(u+c₁−N/2)⁻¹, the
/// operator-valued central series of the completed algebra at the
/// critical level.
pub fn ttilde_series(
    ctx: &Arc<DyCtx>,
    tab: &StandardTableau,
    r_depth: i32,
    t_depth: i32,
) -> Result<TruncSeries<CtxEl>> {
    assert_eq!(
        *ctx.level(),
        rat_i(-(ctx.n() as i64)),
        "the construction needs the critical level"
    );
    let order = u_order();
    let n = ctx.n() as usize;
    let m = tab.shape().boxes();
    let one = one_series(ctx);
    let contents = tab.contents();
    let half_n = rat(ctx.n() as i64, 2);

    let tp = tplus_matrix(ctx, &order, 0, r_depth);
    let tm = t_matrix(ctx, &order, 0, t_depth);
    let tinv = geometric_inverse(&tm, one.clone(), t_depth as usize + 1)?;

    let mut acc = lift_projector(ctx, &fusion_idempotent(tab, n)?, &order);
    for (a, &c) in contents.iter().enumerate() {
        let sh = shift_matrix_arg(&tp, 0, &LinForm::constant(rat_i(c)))?;
        acc = acc.compose(&sh.leg_embed(&[a], m));
    }
    for (a, &c) in contents.iter().enumerate().rev() {
        let sh = shift_matrix_arg(&tinv, 0, &LinForm::constant(&rat_i(c) - &half_n))?;
        acc = acc.compose(&sh.leg_embed(&[a], m));
    }
    Ok(full_trace(&acc, &one))
}

/// The three binomial trace families over the dual half, in their
/// prefactor-free bracketed form.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FamilyKind {
    AntiSym,
    Sym,
    Plain,
}

pub fn family_series(
    ctx: &Arc<DyCtx>,
    kind: FamilyKind,
    m: usize,
    r_depth: i32,
) -> Result<TruncSeries<CtxEl>> {
    let n = ctx.n() as usize;
    assert!(m >= 1);
    if kind != FamilyKind::Plain {
        assert!(m <= n, "projector families need m within the rank");
    }
    let order = u_order();
    let one = one_series(ctx);
    let tp = tplus_matrix(ctx, &order, 0, r_depth);
    let mut acc = one.scale(&match kind {
        FamilyKind::Plain => rat_i(n as i64),
        FamilyKind::AntiSym => binom(n as i64, m as u32),
        FamilyKind::Sym => binom((n + m - 1) as i64, m as u32),
    });
    for k in 1..=m {
        let sign = if k % 2 == 0 { rat_i(1) } else { rat_i(-1) };
        let (coef, term) = match kind {
            FamilyKind::AntiSym => {
                let shifts: Vec<Rat> = (0..k).map(|a| rat_i(-(a as i64))).collect();
                let train = tplus_train(ctx, &order, 0, r_depth, &shifts)?;
                let proj = lift_projector(ctx, &antisymmetrizer(k, n), &order);
                (
                    binom((n - k) as i64, (m - k) as u32),
                    full_trace(&proj.compose(&train), &one),
                )
            }
            FamilyKind::Sym => {
                let shifts: Vec<Rat> = (0..k).map(|a| rat_i(-((k - 1 - a) as i64))).collect();
                let train = tplus_train(ctx, &order, 0, r_depth, &shifts)?;
                let proj = lift_projector(ctx, &symmetrizer(k, n), &order);
                (
                    binom((n + m - 1) as i64, (m - k) as u32),
                    full_trace(&proj.compose(&train), &one),
                )
            }
            FamilyKind::Plain => {
                let mut prod = tp.clone();
                for a in 1..k {
                    prod = prod.compose(&shift_matrix_arg(
                        &tp,
                        0,
                        &LinForm::constant(rat_i(-(a as i64))),
                    )?);
                }
                (binom(m as i64, k as u32), full_trace(&prod, &one))
            }
        };
        acc = acc.add(&term.scale(&(&sign * &coef)));
    }
    Ok(acc)
}

fn word_depth(w: &[GenIndex]) -> i64 {
    w.iter()
        .map(|g| {
            debug_assert!(g.r < 0, "depth is defined on dual words");
            (-g.r) as i64
        })
        .sum()
}

/// Every word in the u^r coefficient has dual depth at least r + m; this
/// is the depth shadow of the m-th order divisibility of the family.
pub fn depth_divisibility(series: &TruncSeries<CtxEl>, m: usize) -> bool {
    for (e, c) in series.terms() {
        let need = e[0] as i64 + m as i64;
        for (w, _) in c.element().terms() {
            if word_depth(w) < need {
                return false;
            }
        }
    }
    true
}

/// The depth-(r+m) layer of the u^r coefficient, mapped into the loop
/// algebra generator by generator.
pub fn family_classical_limit(
    series: &TruncSeries<CtxEl>,
    m: usize,
    r: i32,
    n: u8,
) -> LoopElement {
    let mut out = LoopElement::zero(n);
    let coeff = match series.coeff_known(&[r]) {
        Ok(Some(c)) => c.clone(),
        _ => return out,
    };
    let need = r as i64 + m as i64;
    for (w, c) in coeff.element().terms() {
        if word_depth(w) == need {
            let mut prod = LoopElement::constant(n, c.clone());
            for g in w {
                prod = prod.mul(&LoopElement::gen(n, g.i, g.j, g.r));
            }
            out = out.add(&prod);
        }
    }
    out
}

/// The step-free coefficient series of the projected traces of
/// (∂ + E₊(u))₁⋯(∂ + E₊(u))_m over the loop algebra.
pub fn ff_generator(kind: FamilyKind, m: usize, n: u8, r_depth: i32) -> TruncSeries<LoopElement> {
    let (mat, one) = loop_step_matrix(n, r_depth);
    let op = match kind {
        FamilyKind::AntiSym => projected_trace(&antisymmetrizer(m, n as usize), &mat, &one),
        FamilyKind::Sym => projected_trace(&symmetrizer(m, n as usize), &mat, &one),
        FamilyKind::Plain => power_trace(&mat, m as u32, &one),
    };
    op.power(0)
        .cloned()
        .unwrap_or_else(|| one.unit_series().czero_like())
}

/// Rank equals count under exact Gaussian elimination on the word basis.
pub fn linearly_independent(els: &[LoopElement]) -> bool {
    let mut col_ix: BTreeMap<LoopWord, usize> = BTreeMap::new();
    for el in els {
        for (w, _) in el.terms() {
            let next = col_ix.len();
            col_ix.entry(w.clone()).or_insert(next);
        }
    }
    let ncols = col_ix.len();
    let mut rows: Vec<Vec<Rat>> = els
        .iter()
        .map(|el| {
            let mut row = vec![rat_i(0); ncols];
            for (w, c) in el.terms() {
                row[col_ix[w]] = c.clone();
            }
            row
        })
        .collect();
    let mut rank = 0usize;
    for col in 0..ncols {
        if rank == rows.len() {
            break;
        }
        let Some(pivot) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, pivot);
        let lead = rows[rank][col].clone();
        for r in (rank + 1)..rows.len() {
            if rows[r][col].is_zero() {
                continue;
            }
            let f = &rows[r][col] / &lead;
            for c in col..ncols {
                let sub = &f * &rows[rank][c];
                rows[r][c] = &rows[r][c] - &sub;
            }
        }
        rank += 1;
    }
    rank == els.len()
}

/// Top-filtration-degree image of a dual-only element in the loop algebra.
pub fn classical_limit_top(el: &AlgebraElement, n: u8) -> LoopElement {
    let mut out = LoopElement::zero(n);
    let Some(top) = el.max_degree() else {
        return out;
    };
    for (w, c) in el.terms() {
        if crate::yangian::monomial_degree(w) == top {
            let mut prod = LoopElement::constant(n, c.clone());
            for g in w {
                assert!(g.r < 0, "classical limit is defined on dual words");
                prod = prod.mul(&LoopElement::gen(n, g.i, g.j, g.r));
            }
            out = out.add(&prod);
        }
    }
    out
}

/// d_r = [u^r](1 − qdet T⁺(u)) for r = 0..=r_max.
pub fn noncritical_generators(
    ctx: &Arc<DyCtx>,
    depth: i32,
    r_max: i32,
) -> Result<Vec<AlgebraElement>> {
    let q = qdet_series(ctx, true, depth, &rat_i(0))?;
    let mut out = Vec::new();
    for r in 0..=r_max {
        let mut el = if r == 0 {
            ctx.el_one()
        } else {
            ctx.el_zero()
        };
        if let Some(c) = series_coefficient(ctx, &q, r) {
            el = el.sub(c.element());
        }
        out.push(el);
    }
    Ok(out)
}

/// The alternating binomial resummation: tr A^(m)(1−M₁)⋯(1−M_m) equals
/// Σ_k (−1)^k C(N−k, m−k) tr A^(k) M₁⋯M_k for M = T⁺(u)σ.
pub fn parteq_check(ctx: &Arc<DyCtx>, m: usize, r_depth: i32) -> Result<bool> {
    let order = u_order();
    let n = ctx.n() as usize;
    let one_s = one_series(ctx);
    let tp = tplus_matrix(ctx, &order, 0, r_depth);
    let step = matrix_times_step(&tp, StepRule::Shift(rat_i(1)), 0, &one_s, 1);
    let one_op: ShiftOp<CtxEl> =
        ShiftOp::zero(StepRule::Shift(rat_i(1)), 0, one_s.clone()).cone_like();

    let id = TensorOp::identity(n, m, one_op.clone());
    let mut prod = id.clone();
    for a in 0..m {
        prod = prod.compose(&id.sub(&step.leg_embed(&[a], m)));
    }
    let proj = antisymmetrizer(m, n).map_coeffs(|r| one_op.scale(r));
    let lhs = full_trace(&proj.compose(&prod), &one_op);

    let mut rhs = one_op.scale(&binom(n as i64, m as u32));
    for k in 1..=m {
        let sign = if k % 2 == 0 { rat_i(1) } else { rat_i(-1) };
        let coef = binom((n - k) as i64, (m - k) as u32);
        let term = projected_trace(&antisymmetrizer(k, n), &step, &one_op);
        rhs = rhs.add(&term.scale(&(&sign * &coef)));
    }
    Ok(lhs.agrees(&rhs))
}
