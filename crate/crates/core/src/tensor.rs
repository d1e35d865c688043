//! Sparse exact operators on the m-fold tensor power of C^N.
//!
//! Entries live in any coefficient ring (rationals, rational functions,
//! truncated series, algebra elements); multi-indices are 0-based. An
//! operator with zero legs is a scalar of the entry ring.

use crate::coeff::Coeff;
use crate::poly::RatFunc;
use crate::rat::Rat;
use crate::series::TruncSeries;
use itertools::Itertools;
use std::collections::BTreeMap;

type Idx = Vec<u8>;

#[derive(Clone, PartialEq, Debug)]
pub struct TensorOp<C: Coeff> {
    n: usize,
    m: usize,
    entries: BTreeMap<(Idx, Idx), C>,
}

fn all_indices(n: usize, m: usize) -> Vec<Idx> {
    if m == 0 {
        return vec![vec![]];
    }
    (0..m)
        .map(|_| 0..n as u8)
        .multi_cartesian_product()
        .collect()
}

impl<C: Coeff> TensorOp<C> {
    pub fn zero(n: usize, m: usize) -> Self {
        TensorOp {
            n,
            m,
            entries: BTreeMap::new(),
        }
    }

    pub fn identity(n: usize, m: usize, one: C) -> Self {
        let mut op = TensorOp::zero(n, m);
        for idx in all_indices(n, m) {
            op.entries.insert((idx.clone(), idx), one.clone());
        }
        op
    }

    /// Single-leg matrix unit e_ij (row i, column j), scaled.
    pub fn matrix_unit(n: usize, i: u8, j: u8, c: C) -> Self {
        let mut op = TensorOp::zero(n, 1);
        op.set(vec![i], vec![j], c);
        op
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn legs(&self) -> usize {
        self.m
    }

    pub fn set(&mut self, row: Idx, col: Idx, c: C) {
        assert_eq!(row.len(), self.m);
        assert_eq!(col.len(), self.m);
        assert!(row.iter().chain(col.iter()).all(|&i| (i as usize) < self.n));
        if c.is_czero() {
            self.entries.remove(&(row, col));
        } else {
            self.entries.insert((row, col), c);
        }
    }

    pub fn get(&self, row: &[u8], col: &[u8]) -> Option<&C> {
        self.entries.get(&(row.to_vec(), col.to_vec()))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(Idx, Idx), &C)> {
        self.entries.iter()
    }

    pub fn num_entries(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    fn accum(map: &mut BTreeMap<(Idx, Idx), C>, key: (Idx, Idx), c: C) {
        if c.is_czero() {
            return;
        }
        match map.get_mut(&key) {
            Some(v) => {
                let s = v.cadd(&c);
                if s.is_czero() {
                    map.remove(&key);
                } else {
                    *v = s;
                }
            }
            None => {
                map.insert(key, c);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.n, self.m), (other.n, other.m));
        let mut out = self.clone();
        for ((r, c), v) in other.entries.iter() {
            Self::accum(&mut out.entries, (r.clone(), c.clone()), v.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for v in out.entries.values_mut() {
            *v = v.cneg();
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, r: &Rat) -> Self {
        let mut out = TensorOp::zero(self.n, self.m);
        for ((row, col), v) in self.entries.iter() {
            let s = v.cscale(r);
            if !s.is_czero() {
                out.entries.insert((row.clone(), col.clone()), s);
            }
        }
        out
    }

    pub fn mul_coeff(&self, c: &C) -> Self {
        let mut out = TensorOp::zero(self.n, self.m);
        for ((row, col), v) in self.entries.iter() {
            let s = v.cmul(c);
            if !s.is_czero() {
                out.entries.insert((row.clone(), col.clone()), s);
            }
        }
        out
    }

    /// Operator composition (`self` acting after `other` in matrix
    /// convention: entry coefficients of `self` multiply on the left).
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!((self.n, self.m), (other.n, other.m));
        let mut by_row: BTreeMap<&Idx, Vec<(&Idx, &C)>> = BTreeMap::new();
        for ((r, c), v) in other.entries.iter() {
            by_row.entry(r).or_default().push((c, v));
        }
        let mut out = TensorOp::zero(self.n, self.m);
        for ((r1, c1), v1) in self.entries.iter() {
            if let Some(cols) = by_row.get(c1) {
                for (c2, v2) in cols {
                    Self::accum(
                        &mut out.entries,
                        (r1.clone(), (*c2).clone()),
                        v1.cmul(v2),
                    );
                }
            }
        }
        out
    }

    /// Tensor product; the other operator's legs are appended.
    pub fn kron(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = TensorOp::zero(self.n, self.m + other.m);
        for ((r1, c1), v1) in self.entries.iter() {
            for ((r2, c2), v2) in other.entries.iter() {
                let mut r = r1.clone();
                r.extend_from_slice(r2);
                let mut c = c1.clone();
                c.extend_from_slice(c2);
                Self::accum(&mut out.entries, (r, c), v1.cmul(v2));
            }
        }
        out
    }

    /// Embed into `m` legs, acting on `target_legs` (0-based, distinct) and
    /// as the identity elsewhere.
    pub fn leg_embed(&self, target_legs: &[usize], m: usize) -> Self {
        assert_eq!(target_legs.len(), self.m);
        assert!(target_legs.iter().all(|&l| l < m));
        assert!(
            target_legs.iter().combinations(2).all(|p| p[0] != p[1]),
            "repeated leg label"
        );
        let mut out = TensorOp::zero(self.n, m);
        if self.entries.is_empty() {
            return out;
        }
        let rest: Vec<usize> = (0..m).filter(|l| !target_legs.contains(l)).collect();
        let fillers = all_indices(self.n, rest.len());
        for ((r0, c0), v) in self.entries.iter() {
            for fill in fillers.iter() {
                let mut r = vec![0u8; m];
                let mut c = vec![0u8; m];
                for (k, &l) in target_legs.iter().enumerate() {
                    r[l] = r0[k];
                    c[l] = c0[k];
                }
                for (k, &l) in rest.iter().enumerate() {
                    r[l] = fill[k];
                    c[l] = fill[k];
                }
                out.entries.insert((r, c), v.clone());
            }
        }
        out
    }

    /// Transpose on a single leg; involutive.
    pub fn partial_transpose(&self, leg: usize) -> Self {
        assert!(leg < self.m);
        let mut out = TensorOp::zero(self.n, self.m);
        for ((r, c), v) in self.entries.iter() {
            let mut r2 = r.clone();
            let mut c2 = c.clone();
            std::mem::swap(&mut r2[leg], &mut c2[leg]);
            out.entries.insert((r2, c2), v.clone());
        }
        out
    }

    /// Trace out the named legs; the rest keep their relative order.
    pub fn partial_trace(&self, legs: &[usize]) -> Self {
        assert!(legs.iter().all(|&l| l < self.m));
        let keep: Vec<usize> = (0..self.m).filter(|l| !legs.contains(l)).collect();
        let mut out = TensorOp::zero(self.n, keep.len());
        for ((r, c), v) in self.entries.iter() {
            if legs.iter().any(|&l| r[l] != c[l]) {
                continue;
            }
            let r2: Idx = keep.iter().map(|&l| r[l]).collect();
            let c2: Idx = keep.iter().map(|&l| c[l]).collect();
            Self::accum(&mut out.entries, (r2, c2), v.clone());
        }
        out
    }

    /// Full trace as a ring element; `None` for an (exactly) zero trace.
    pub fn trace(&self) -> Option<C> {
        let t = self.partial_trace(&(0..self.m).collect::<Vec<_>>());
        t.entries.into_values().next()
    }

    pub fn map_coeffs<D: Coeff, F: Fn(&C) -> D>(&self, f: F) -> TensorOp<D> {
        let mut out = TensorOp::zero(self.n, self.m);
        for ((r, c), v) in self.entries.iter() {
            let d = f(v);
            if !d.is_czero() {
                out.entries.insert((r.clone(), c.clone()), d);
            }
        }
        out
    }

    /// Apply the operator to a ket given as a sparse column (index → coeff),
    /// returning the resulting column. Coefficients multiply on the left.
    pub fn apply_column(&self, ket: &BTreeMap<Idx, C>) -> BTreeMap<Idx, C> {
        let mut out: BTreeMap<Idx, C> = BTreeMap::new();
        for ((r, c), v) in self.entries.iter() {
            if let Some(x) = ket.get(c) {
                let p = v.cmul(x);
                if p.is_czero() {
                    continue;
                }
                match out.get_mut(r) {
                    Some(acc) => {
                        let s = acc.cadd(&p);
                        if s.is_czero() {
                            out.remove(r);
                        } else {
                            *acc = s;
                        }
                    }
                    None => {
                        out.insert(r.clone(), p);
                    }
                }
            }
        }
        out
    }
}

/// Permutation operator P swapping two legs of an m-fold product.
pub fn permutation_op<C: Coeff>(n: usize, m: usize, a: usize, b: usize, one: C) -> TensorOp<C> {
    assert!(a != b, "permutation needs two distinct legs");
    let mut op = TensorOp::identity(n, m, one);
    let mut entries = BTreeMap::new();
    for ((r, c), v) in op.entries.iter() {
        let mut c2 = c.clone();
        c2.swap(a, b);
        entries.insert((r.clone(), c2), v.clone());
    }
    op.entries = entries;
    op
}

/// Yang R-matrix `1 − P·q` on two legs, where `q` is the (already expanded
/// or exact) reciprocal of the spectral argument.
pub fn yang_r_with<C: Coeff>(n: usize, q: &C) -> TensorOp<C> {
    let one = q.cone_like();
    let id = TensorOp::identity(n, 2, one.clone());
    let p = permutation_op(n, 2, 0, 1, one);
    id.sub(&p.mul_coeff(q))
}

/// R(x + a) over univariate rational functions.
pub fn yang_r_ratfunc(n: usize, a: Rat) -> TensorOp<RatFunc> {
    yang_r_with(n, &RatFunc::inv_x_plus(a))
}

/// R(expr) over series: `inv_arg` must be the series expansion of the
/// reciprocal spectral argument.
pub fn yang_r_series(n: usize, inv_arg: &TruncSeries<Rat>) -> TensorOp<TruncSeries<Rat>> {
    yang_r_with(n, inv_arg)
}

/// Normalized R-matrix `g(expr)·R(expr)` over series: `g_at` is the
/// normalization series evaluated at the argument, `inv_arg` its reciprocal.
pub fn rbar_series(
    n: usize,
    g_at: &TruncSeries<Rat>,
    inv_arg: &TruncSeries<Rat>,
) -> TensorOp<TruncSeries<Rat>> {
    yang_r_series(n, inv_arg).map_coeffs(|c| g_at.mul(c))
}

/// Inverse of `1 + X` by the geometric series, where `op = 1 + X` and every
/// power of `X` must eventually vanish within its truncation windows.
pub fn geometric_inverse<C: Coeff>(
    op: &TensorOp<C>,
    one: C,
    max_pow: usize,
) -> crate::error::Result<TensorOp<C>> {
    let id = TensorOp::identity(op.n(), op.legs(), one);
    let x = op.sub(&id);
    let mut acc = id.clone();
    let mut pow = id;
    for _ in 0..max_pow {
        pow = pow.compose(&x).neg();
        if pow.is_zero() {
            return Ok(acc);
        }
        acc = acc.add(&pow);
    }
    Err(crate::error::Error::FiltrationExhausted {
        context: "matrix geometric inverse".into(),
        detail: format!("no termination within {max_pow} powers"),
    })
}
