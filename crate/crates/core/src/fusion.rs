//! Young diagrams, standard tableaux, and the fusion construction of the
//! primitive idempotents E_U acting on (C^N)^⊗m.
//!
//! The fusion product Π_{a<b} R_{ab}(u_a−u_b) is evaluated consecutively at
//! u_a = c_a (the content of the box holding a). Evaluation is realized by
//! substituting u_a = c_a + ε_a and expanding in the iterated-Laurent ring
//! whose variable order is (ε_m, …, ε_1): ε_1 is the smallest infinitesimal,
//! matching "set u_1 = c_1 first". Negative ε-powers must cancel; the code
//! asserts that they do and then reads off the ε-free term.

use crate::error::{Error, Result};
use crate::poly::{Poly, RatFunc};
use crate::rat::{binom, perm_sign, rat, rat_i, rat_pow, Rat};
use crate::series::{compute_g, inv_linear, Expand, LinForm, TruncSeries, VarOrder, VarSpec};
use crate::tensor::{permutation_op, rbar_series, yang_r_ratfunc, TensorOp};
use itertools::Itertools;
use num::traits::One;

/// Integer contents c_a = col − row of the box holding a, indexed by a−1.
pub type ContentVector = Vec<i64>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct YoungDiagram {
    parts: Vec<usize>,
}

impl YoungDiagram {
    pub fn new(parts: &[usize]) -> Self {
        assert!(!parts.is_empty(), "diagram needs at least one row");
        for w in parts.windows(2) {
            assert!(w[0] >= w[1], "row lengths must weakly decrease");
        }
        assert!(*parts.last().unwrap() > 0, "row lengths must be positive");
        YoungDiagram {
            parts: parts.to_vec(),
        }
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn rows(&self) -> usize {
        self.parts.len()
    }

    /// Total number of boxes m.
    pub fn boxes(&self) -> usize {
        self.parts.iter().sum()
    }

    pub fn col_len(&self, j: usize) -> usize {
        self.parts.iter().filter(|&&p| p > j).count()
    }

    /// Boxes in row-major order as (row, col), both 0-based.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.boxes());
        for (i, &p) in self.parts.iter().enumerate() {
            for j in 0..p {
                out.push((i, j));
            }
        }
        out
    }

    /// Product of all hook lengths h(μ).
    pub fn hook_product(&self) -> i64 {
        let mut h = 1i64;
        for (i, j) in self.cells() {
            let arm = self.parts[i] - 1 - j;
            let leg = self.col_len(j) - 1 - i;
            h *= (arm + leg + 1) as i64;
        }
        h
    }

    /// All diagrams with m boxes, in descending lexicographic order.
    pub fn all_with_boxes(m: usize) -> Vec<YoungDiagram> {
        fn rec(rem: usize, max_part: usize, cur: &mut Vec<usize>, out: &mut Vec<YoungDiagram>) {
            if rem == 0 {
                out.push(YoungDiagram::new(cur));
                return;
            }
            for p in (1..=rem.min(max_part)).rev() {
                cur.push(p);
                rec(rem - p, p, cur, out);
                cur.pop();
            }
        }
        assert!(m > 0);
        let mut out = Vec::new();
        rec(m, m, &mut Vec::new(), &mut out);
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StandardTableau {
    shape: YoungDiagram,
    rows: Vec<Vec<usize>>,
}

impl StandardTableau {
    pub fn shape(&self) -> &YoungDiagram {
        &self.shape
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    /// Concatenation of the rows, top to bottom.
    pub fn row_word(&self) -> Vec<usize> {
        self.rows.iter().flatten().copied().collect()
    }

    pub fn contents(&self) -> ContentVector {
        let m = self.shape.boxes();
        let mut c = vec![0i64; m];
        for (i, row) in self.rows.iter().enumerate() {
            for (j, &entry) in row.iter().enumerate() {
                c[entry - 1] = j as i64 - i as i64;
            }
        }
        c
    }
}

/// All standard fillings of the shape, sorted by row-reading word.
pub fn standard_tableaux(shape: &YoungDiagram) -> Vec<StandardTableau> {
    let m = shape.boxes();
    let parts = shape.parts().to_vec();
    let mut rows: Vec<Vec<usize>> = parts.iter().map(|&p| Vec::with_capacity(p)).collect();
    let mut out = Vec::new();
    fn rec(
        entry: usize,
        m: usize,
        parts: &[usize],
        rows: &mut Vec<Vec<usize>>,
        shape: &YoungDiagram,
        out: &mut Vec<StandardTableau>,
    ) {
        if entry > m {
            out.push(StandardTableau {
                shape: shape.clone(),
                rows: rows.clone(),
            });
            return;
        }
        for i in 0..parts.len() {
            let filled = rows[i].len();
            if filled < parts[i] && (i == 0 || rows[i - 1].len() > filled) {
                rows[i].push(entry);
                rec(entry + 1, m, parts, rows, shape, out);
                rows[i].pop();
            }
        }
    }
    rec(1, m, &parts, &mut rows, shape, &mut out);
    out.sort_by_key(|t| t.row_word());
    out
}

/// Operator permuting the tensor legs: e_c ↦ e_r with r[perm[k]] = c[k].
pub fn perm_action(n: usize, perm: &[usize]) -> TensorOp<Rat> {
    let m = perm.len();
    let mut op = TensorOp::zero(n, m);
    let mut col = vec![0u8; m];
    loop {
        let mut row = vec![0u8; m];
        for k in 0..m {
            row[perm[k]] = col[k];
        }
        op.set(row, col.clone(), Rat::one());
        let mut k = 0;
        loop {
            if k == m {
                return op;
            }
            col[k] += 1;
            if (col[k] as usize) < n {
                break;
            }
            col[k] = 0;
            k += 1;
        }
    }
}

fn young_average(m: usize, n: usize, signed: bool) -> TensorOp<Rat> {
    let mut acc = TensorOp::zero(n, m);
    let mut count = 0i64;
    for perm in (0..m).permutations(m) {
        let op = perm_action(n, &perm);
        let signed_op = if signed && perm_sign(&perm) < 0 {
            op.neg()
        } else {
            op
        };
        acc = acc.add(&signed_op);
        count += 1;
    }
    acc.scale(&rat(1, count))
}

/// H^(m): the normalized full symmetrizer on m legs.
pub fn symmetrizer(m: usize, n: usize) -> TensorOp<Rat> {
    young_average(m, n, false)
}

/// A^(m): the normalized full antisymmetrizer on m legs.
pub fn antisymmetrizer(m: usize, n: usize) -> TensorOp<Rat> {
    young_average(m, n, true)
}

/// Jucys–Murphy eigenprojection: Lagrange interpolation of the commuting
/// operators X_k = Σ_{a<k} P_{ak} onto the joint eigenspace with eigenvalues
/// given by the content vector. Interpolates over the full integer spectrum
/// {−(k−1),…,k−1}; absent eigenvalues contribute scalar factors that cancel.
pub fn jm_oracle_idempotent(tab: &StandardTableau, n: usize) -> TensorOp<Rat> {
    let m = tab.shape().boxes();
    assert!(tab.shape().rows() <= n, "shape has more than N rows");
    let c = tab.contents();
    let one = Rat::one();
    let mut acc = TensorOp::identity(n, m, one.clone());
    for k in 2..=m {
        let mut x_k = TensorOp::zero(n, m);
        for a in 1..k {
            x_k = x_k.add(&permutation_op(n, m, a - 1, k - 1, one.clone()));
        }
        let kk = k as i64;
        for d in -(kk - 1)..=(kk - 1) {
            if d == c[k - 1] {
                continue;
            }
            let factor = x_k
                .sub(&TensorOp::identity(n, m, rat_i(d)))
                .scale(&rat(1, c[k - 1] - d));
            acc = acc.compose(&factor);
        }
    }
    acc
}

/// `(d + ε_a − ε_b)⁻¹` for d ≠ 0, expanded to depth w in both infinitesimals.
fn taylor_inverse(order: &VarOrder, va: usize, vb: usize, d: i64, w: i32) -> TruncSeries<Rat> {
    let mut win: Vec<(i32, i32)> = (0..order.len()).map(|_| (0, i32::MAX)).collect();
    win[va] = (0, w);
    win[vb] = (0, w);
    let mut s = TruncSeries::zero(order, &win);
    let base = rat_i(d);
    for i in 0..=w {
        for j in 0..=w {
            let mut coeff =
                rat_pow(&base, -(1 + i as i64 + j as i64)) * binom((i + j) as i64, i as u32);
            if i % 2 == 1 {
                coeff = -coeff;
            }
            let mut exps = vec![0i32; order.len()];
            exps[va] = i;
            exps[vb] = j;
            s.add_term(&exps, coeff);
        }
    }
    s
}

/// `(ε_a − ε_b)⁻¹` where ε_a is the smaller infinitesimal (a < b):
/// −Σ_k ε_a^k ε_b^{−k−1}. The stored rectangle is exact: inside it the only
/// nonzero coefficients sit on the diagonal k, −k−1 with k ≤ w−1.
fn crossed_inverse(order: &VarOrder, va: usize, vb: usize, w: i32) -> TruncSeries<Rat> {
    debug_assert!(va > vb, "ε_a must be later in the order than ε_b");
    let mut win: Vec<(i32, i32)> = (0..order.len()).map(|_| (0, i32::MAX)).collect();
    win[va] = (0, i32::MAX);
    win[vb] = (-w, w);
    let mut s = TruncSeries::zero(order, &win);
    for k in 0..w {
        let mut exps = vec![0i32; order.len()];
        exps[va] = k;
        exps[vb] = -k - 1;
        s.add_term(&exps, -Rat::one());
    }
    s
}

fn fusion_attempt(tab: &StandardTableau, n: usize, w: i32) -> Result<TensorOp<Rat>> {
    let m = tab.shape().boxes();
    let c = tab.contents();
    let order = VarOrder::new(
        (0..m)
            .map(|k| VarSpec {
                name: format!("e{}", m - k),
                expand: Expand::AtZero,
            })
            .collect(),
    );
    let idx = |a: usize| m - a;
    let one = TruncSeries::constant(&order, Rat::one());
    let mut prod = TensorOp::identity(n, m, one.clone());
    for a in 1..m {
        for b in (a + 1)..=m {
            let d = c[a - 1] - c[b - 1];
            let inv = if d != 0 {
                taylor_inverse(&order, idx(a), idx(b), d, w)
            } else {
                crossed_inverse(&order, idx(a), idx(b), w)
            };
            let factor = TensorOp::identity(n, m, one.clone())
                .sub(&permutation_op(n, m, a - 1, b - 1, one.clone()).mul_coeff(&inv));
            prod = prod.compose(&factor);
        }
    }
    for a in 1..=m {
        let v = idx(a);
        for (_, s) in prod.entries() {
            for (exps, _) in s.terms() {
                if exps[v] < 0 {
                    return Err(Error::CancellationFailure {
                        context: "fusion idempotent".into(),
                        detail: format!(
                            "negative power of ε_{a} survives consecutive evaluation"
                        ),
                    });
                }
            }
        }
        let mut next = TensorOp::zero(n, m);
        for ((r, col), s) in prod.entries() {
            let sliced = s.coefficient_in(v, 0)?;
            if !sliced.is_zero_within() {
                next.set(r.clone(), col.clone(), sliced);
            }
        }
        prod = next;
    }
    let zero_exps = vec![0i32; m];
    let mut out = TensorOp::zero(n, m);
    for ((r, col), s) in prod.entries() {
        if let Some(v) = s.coeff_known(&zero_exps)? {
            out.set(r.clone(), col.clone(), v.clone());
        }
    }
    Ok(out.scale(&rat(1, tab.shape().hook_product())))
}

/// The primitive idempotent E_U = (1/h(μ)) Π_{a<b} R_{ab}(u_a−u_b) evaluated
/// consecutively at u_a = c_a. A surviving negative ε-power is reported as a
/// cancellation failure; an expansion window that proves too small is retried
/// at double the depth before giving up.
pub fn fusion_idempotent(tab: &StandardTableau, n: usize) -> Result<TensorOp<Rat>> {
    let m = tab.shape().boxes();
    assert!(tab.shape().rows() <= n, "shape has more than N rows");
    if m == 1 {
        return Ok(TensorOp::identity(n, 1, Rat::one()));
    }
    let mut w = m as i32;
    loop {
        match fusion_attempt(tab, n, w) {
            Err(Error::UnknownCoefficient { .. }) | Err(Error::WindowUnderflow { .. })
                if w < 8 * m as i32 =>
            {
                w *= 2;
            }
            other => return other,
        }
    }
}

/// Checks E_U · R̄₀m(u−c_m)⋯R̄₀₁(u−c_1) = R̄₀₁(u−c_1)⋯R̄₀m(u−c_m) · E_U on
/// legs (0, 1, …, m), as series in u⁻¹ to the given depth.
pub fn intertwining_check(tab: &StandardTableau, n: usize, depth: i32) -> Result<bool> {
    let m = tab.shape().boxes();
    let c = tab.contents();
    let order = VarOrder::of(&[("u", Expand::AtInfinity)]);
    let g = compute_g(n as u32, depth as u32);
    let legs = m + 1;
    let body: Vec<usize> = (1..=m).collect();
    let e_big = fusion_idempotent(tab, n)?
        .map_coeffs(|r| TruncSeries::constant(&order, r.clone()))
        .leg_embed(&body, legs);
    let rb = |a: usize| -> Result<TensorOp<TruncSeries<Rat>>> {
        let ca = rat_i(c[a - 1]);
        let gs = g.shift(0, &LinForm::constant(-ca.clone()))?;
        let inv = inv_linear(&order, 0, &(-ca), depth);
        Ok(rbar_series(n, &gs, &inv).leg_embed(&[0, a], legs))
    };
    let mut lhs = e_big.clone();
    for a in (1..=m).rev() {
        lhs = lhs.compose(&rb(a)?);
    }
    let mut rhs = rb(1)?;
    for a in 2..=m {
        rhs = rhs.compose(&rb(a)?);
    }
    rhs = rhs.compose(&e_big);
    Ok(lhs.sub(&rhs).entries().all(|(_, s)| s.is_zero_within()))
}

/// Exact rational-function identity
/// A^(N) · R₀N(v+N−1)⋯R₀₁(v) = A^(N) · (1 − v⁻¹) on legs (0, 1, …, N).
pub fn column_relation_check(n: usize) -> bool {
    let legs = n + 1;
    let body: Vec<usize> = (1..=n).collect();
    let a_op = antisymmetrizer(n, n)
        .map_coeffs(|r| RatFunc::constant(r.clone()))
        .leg_embed(&body, legs);
    let mut lhs = a_op.clone();
    for a in (1..=n).rev() {
        lhs = lhs.compose(&yang_r_ratfunc(n, rat_i(a as i64 - 1)).leg_embed(&[0, a], legs));
    }
    let rhs = a_op.mul_coeff(&RatFunc::new(Poly::x_plus(rat_i(-1)), Poly::x()));
    lhs.sub(&rhs).is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(m: usize) -> i64 {
        (1..=m as i64).product()
    }

    fn ops_equal(a: &TensorOp<Rat>, b: &TensorOp<Rat>) -> bool {
        a.sub(b).is_zero()
    }

    #[test]
    fn tableau_counts_match_hook_length_formula() {
        for parts in [
            vec![2],
            vec![1, 1],
            vec![3],
            vec![2, 1],
            vec![1, 1, 1],
            vec![4],
            vec![2, 2],
            vec![3, 1],
            vec![2, 1, 1],
            vec![1, 1, 1, 1],
        ] {
            let shape = YoungDiagram::new(&parts);
            let expected = factorial(shape.boxes()) / shape.hook_product();
            assert_eq!(
                standard_tableaux(&shape).len() as i64,
                expected,
                "shape {parts:?}"
            );
        }
    }

    #[test]
    fn hook_products_of_small_shapes() {
        assert_eq!(YoungDiagram::new(&[2]).hook_product(), 2);
        assert_eq!(YoungDiagram::new(&[1, 1]).hook_product(), 2);
        assert_eq!(YoungDiagram::new(&[2, 1]).hook_product(), 3);
        assert_eq!(YoungDiagram::new(&[2, 2]).hook_product(), 12);
        assert_eq!(YoungDiagram::new(&[3, 1]).hook_product(), 8);
    }

    #[test]
    fn two_one_tableaux_enumerate_in_reading_order() {
        let tabs = standard_tableaux(&YoungDiagram::new(&[2, 1]));
        assert_eq!(tabs.len(), 2);
        assert_eq!(tabs[0].row_word(), vec![1, 2, 3]);
        assert_eq!(tabs[1].row_word(), vec![1, 3, 2]);
        assert_eq!(tabs[0].contents(), vec![0, 1, -1]);
        assert_eq!(tabs[1].contents(), vec![0, -1, 1]);
    }

    #[test]
    fn diagram_enumeration_is_descending_lex() {
        let shapes = YoungDiagram::all_with_boxes(4);
        let parts: Vec<&[usize]> = shapes.iter().map(|s| s.parts()).collect();
        assert_eq!(
            parts,
            vec![
                &[4][..],
                &[3, 1][..],
                &[2, 2][..],
                &[2, 1, 1][..],
                &[1, 1, 1, 1][..]
            ]
        );
    }

    #[test]
    fn two_box_idempotents_are_spectral_projectors() {
        for n in [2usize, 3] {
            let row = &standard_tableaux(&YoungDiagram::new(&[2]))[0];
            let col = &standard_tableaux(&YoungDiagram::new(&[1, 1]))[0];
            let h2 = symmetrizer(2, n);
            let a2 = antisymmetrizer(2, n);
            assert!(ops_equal(&fusion_idempotent(row, n).unwrap(), &h2));
            assert!(ops_equal(&fusion_idempotent(col, n).unwrap(), &a2));
            assert!(ops_equal(&jm_oracle_idempotent(row, n), &h2));
            assert!(ops_equal(&jm_oracle_idempotent(col, n), &a2));
        }
    }

    #[test]
    fn fusion_matches_oracle_and_is_idempotent_for_three_boxes() {
        for n in [2usize, 3] {
            for shape in YoungDiagram::all_with_boxes(3) {
                if shape.rows() > n {
                    continue;
                }
                for tab in standard_tableaux(&shape) {
                    let e = fusion_idempotent(&tab, n).unwrap();
                    assert!(ops_equal(&e.compose(&e), &e), "idempotency for {tab:?}");
                    assert!(
                        ops_equal(&e, &jm_oracle_idempotent(&tab, n)),
                        "oracle mismatch for {tab:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn equal_content_boxes_cancel_in_fusion() {
        let shape = YoungDiagram::new(&[2, 2]);
        for tab in standard_tableaux(&shape) {
            let c = tab.contents();
            assert_eq!(c.iter().filter(|&&x| x == 0).count(), 2);
            let e = fusion_idempotent(&tab, 2).unwrap();
            assert!(ops_equal(&e.compose(&e), &e));
            assert!(ops_equal(&e, &jm_oracle_idempotent(&tab, 2)));
        }
    }

    #[test]
    fn same_shape_idempotents_are_orthogonal() {
        for parts in [vec![2, 1], vec![2, 2]] {
            let tabs = standard_tableaux(&YoungDiagram::new(&parts));
            let e0 = fusion_idempotent(&tabs[0], 2).unwrap();
            let e1 = fusion_idempotent(&tabs[1], 2).unwrap();
            assert!(e0.compose(&e1).is_zero());
            assert!(e1.compose(&e0).is_zero());
        }
    }

    #[test]
    fn oracle_idempotents_resolve_identity() {
        for (m, n) in [(2usize, 2usize), (3, 2), (3, 3)] {
            let mut sum = TensorOp::zero(n, m);
            for shape in YoungDiagram::all_with_boxes(m) {
                if shape.rows() > n {
                    continue;
                }
                for tab in standard_tableaux(&shape) {
                    sum = sum.add(&jm_oracle_idempotent(&tab, n));
                }
            }
            assert!(ops_equal(&sum, &TensorOp::identity(n, m, Rat::one())));
        }
    }

    #[test]
    fn antisymmetrizer_vanishes_beyond_dimension() {
        assert!(antisymmetrizer(3, 2).is_zero());
        assert_eq!(symmetrizer(1, 2), TensorOp::identity(2, 1, Rat::one()));
        assert_eq!(antisymmetrizer(1, 2), TensorOp::identity(2, 1, Rat::one()));
    }

    #[test]
    fn row_and_column_tableaux_reproduce_symmetrizers() {
        for n in [2usize, 3] {
            let row = &standard_tableaux(&YoungDiagram::new(&[3]))[0];
            assert!(ops_equal(
                &fusion_idempotent(row, n).unwrap(),
                &symmetrizer(3, n)
            ));
        }
        let col = &standard_tableaux(&YoungDiagram::new(&[1, 1, 1]))[0];
        assert!(ops_equal(
            &fusion_idempotent(col, 3).unwrap(),
            &antisymmetrizer(3, 3)
        ));
    }

    #[test]
    fn idempotents_intertwine_r_trains() {
        let tabs = standard_tableaux(&YoungDiagram::new(&[2, 1]));
        assert!(intertwining_check(&tabs[0], 2, 6).unwrap());
        assert!(intertwining_check(&tabs[1], 2, 6).unwrap());
        let row = &standard_tableaux(&YoungDiagram::new(&[2]))[0];
        assert!(intertwining_check(row, 3, 6).unwrap());
    }

    #[test]
    fn column_antisymmetrizer_collapses_r_train() {
        assert!(column_relation_check(2));
        assert!(column_relation_check(3));
    }
}
