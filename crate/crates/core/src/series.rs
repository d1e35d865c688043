//! Truncated iterated-Laurent series over an exact coefficient ring.
//!
//! A series lives over an ordered variable list; each later variable is
//! infinitesimally smaller than all earlier ones, so monomials are compared
//! lexicographically from the last variable backwards. Every variable
//! declares the side it expands on: `AtZero` variables are small (Taylor
//! side, positive exponents shallow) and `AtInfinity` variables are large
//! (expansions descend in negative powers).
//!
//! Truncation is tracked per variable by a depth window. Depth normalizes
//! the two orientations: for an `AtZero` variable depth equals the exponent,
//! for an `AtInfinity` variable depth is minus the exponent, so "deeper"
//! always means "smaller correction". A window `[dlo, dhi]` asserts that
//! all depths below `dlo` are identically zero, depths in `[dlo, dhi]` are
//! exactly the stored coefficients, and depths above `dhi` are unknown.
//! `dhi = DEPTH_INF` marks a variable the series is exact in. Operations
//! propagate windows pessimistically and never zero-fill unknowns;
//! anything that would need an unknown coefficient reports an error.

use crate::coeff::Coeff;
use crate::error::{Error, Result};
use crate::rat::{binom, rat_pow, Rat};
use num::traits::One;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

pub const DEPTH_INF: i32 = i32::MAX;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Expand {
    AtZero,
    AtInfinity,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct VarSpec {
    pub name: String,
    pub expand: Expand,
}

/// Ordered variable list shared by all series of one computation.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct VarOrder {
    vars: Arc<Vec<VarSpec>>,
}

impl VarOrder {
    pub fn new(vars: Vec<VarSpec>) -> Self {
        for i in 0..vars.len() {
            for j in i + 1..vars.len() {
                assert!(vars[i].name != vars[j].name, "duplicate variable name");
            }
        }
        assert!(!vars.is_empty(), "empty variable order");
        VarOrder {
            vars: Arc::new(vars),
        }
    }

    pub fn of(specs: &[(&str, Expand)]) -> Self {
        VarOrder::new(
            specs
                .iter()
                .map(|(n, e)| VarSpec {
                    name: n.to_string(),
                    expand: *e,
                })
                .collect(),
        )
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn spec(&self, i: usize) -> &VarSpec {
        &self.vars[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn names(&self) -> Vec<String> {
        self.vars.iter().map(|v| v.name.clone()).collect()
    }
}

fn depth(expand: Expand, exp: i32) -> i32 {
    match expand {
        Expand::AtZero => exp,
        Expand::AtInfinity => -exp,
    }
}

fn dmin(a: i32, b: i32) -> i32 {
    a.min(b)
}

/// `dhi + dlo` with the exactness sentinel absorbing.
fn dadd_hi(hi: i32, lo: i32) -> i32 {
    if hi == DEPTH_INF {
        DEPTH_INF
    } else {
        hi + lo
    }
}

/// Linear shift data: a constant plus multiples of strictly smaller
/// variables.
#[derive(Clone, Debug)]
pub struct LinForm {
    pub constant: Rat,
    pub terms: Vec<(usize, Rat)>,
}

impl LinForm {
    pub fn constant(c: Rat) -> Self {
        LinForm {
            constant: c,
            terms: vec![],
        }
    }

    pub fn var(idx: usize, coeff: Rat) -> Self {
        LinForm {
            constant: Rat::from_integer(0.into()),
            terms: vec![(idx, coeff)],
        }
    }

    pub fn plus_var(mut self, idx: usize, coeff: Rat) -> Self {
        self.terms.push((idx, coeff));
        self
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct TruncSeries<C: Coeff> {
    order: VarOrder,
    dlo: Vec<i32>,
    dhi: Vec<i32>,
    coeffs: BTreeMap<Vec<i32>, C>,
}

impl<C: Coeff> TruncSeries<C> {
    /// Empty series over an exponent window. `i32::MIN`/`i32::MAX` on the
    /// exact side of a variable mean "unbounded" (the series is exact there).
    pub fn zero(order: &VarOrder, exp_window: &[(i32, i32)]) -> Self {
        assert_eq!(exp_window.len(), order.len(), "window arity mismatch");
        let mut dlo = Vec::new();
        let mut dhi = Vec::new();
        for (i, &(lo, hi)) in exp_window.iter().enumerate() {
            match order.spec(i).expand {
                Expand::AtZero => {
                    assert!(lo > i32::MIN, "at-zero variable needs a finite lower bound");
                    dlo.push(lo);
                    dhi.push(if hi == i32::MAX { DEPTH_INF } else { hi });
                }
                Expand::AtInfinity => {
                    assert!(
                        hi < i32::MAX,
                        "at-infinity variable needs a finite upper bound"
                    );
                    dlo.push(-hi);
                    dhi.push(if lo == i32::MIN { DEPTH_INF } else { -lo });
                }
            }
        }
        TruncSeries {
            order: order.clone(),
            dlo,
            dhi,
            coeffs: BTreeMap::new(),
        }
    }

    /// Exact scalar: window `[0, ∞)` in every variable.
    pub fn constant(order: &VarOrder, c: C) -> Self {
        let mut s = TruncSeries {
            order: order.clone(),
            dlo: vec![0; order.len()],
            dhi: vec![DEPTH_INF; order.len()],
            coeffs: BTreeMap::new(),
        };
        if !c.is_czero() {
            s.coeffs.insert(vec![0; order.len()], c);
        }
        s
    }

    /// Exact monomial `c · Π var_i^{exps_i}`.
    pub fn monomial(order: &VarOrder, exps: &[i32], c: C) -> Self {
        assert_eq!(exps.len(), order.len());
        let dl: Vec<i32> = exps
            .iter()
            .enumerate()
            .map(|(i, &e)| depth(order.spec(i).expand, e))
            .collect();
        let mut s = TruncSeries {
            order: order.clone(),
            dlo: dl,
            dhi: vec![DEPTH_INF; order.len()],
            coeffs: BTreeMap::new(),
        };
        if !c.is_czero() {
            s.coeffs.insert(exps.to_vec(), c);
        }
        s
    }

    pub fn order(&self) -> &VarOrder {
        &self.order
    }

    /// Depth window of one variable.
    pub fn window(&self, var: usize) -> (i32, i32) {
        (self.dlo[var], self.dhi[var])
    }

    /// Exponent-coordinate window for display; `None` on the unbounded side.
    pub fn window_exponents(&self, var: usize) -> (Option<i32>, Option<i32>) {
        match self.order.spec(var).expand {
            Expand::AtZero => (
                Some(self.dlo[var]),
                if self.dhi[var] == DEPTH_INF {
                    None
                } else {
                    Some(self.dhi[var])
                },
            ),
            Expand::AtInfinity => (
                if self.dhi[var] == DEPTH_INF {
                    None
                } else {
                    Some(-self.dhi[var])
                },
                Some(-self.dlo[var]),
            ),
        }
    }

    fn in_window(&self, exps: &[i32]) -> bool {
        exps.iter().enumerate().all(|(i, &e)| {
            let d = depth(self.order.spec(i).expand, e);
            d >= self.dlo[i] && (self.dhi[i] == DEPTH_INF || d <= self.dhi[i])
        })
    }

    /// Insert (accumulating) a term. Panics outside the window: storing an
    /// unknown-region coefficient is a logic error, not a data condition.
    pub fn add_term(&mut self, exps: &[i32], c: C) {
        assert!(self.in_window(exps), "term outside declared window");
        if c.is_czero() {
            return;
        }
        match self.coeffs.get_mut(exps) {
            Some(v) => {
                let s = v.cadd(&c);
                if s.is_czero() {
                    self.coeffs.remove(exps);
                } else {
                    *v = s;
                }
            }
            None => {
                self.coeffs.insert(exps.to_vec(), c);
            }
        }
    }

    pub fn with_term(mut self, exps: &[i32], c: C) -> Self {
        self.add_term(exps, c);
        self
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i32>, &C)> {
        self.coeffs.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    /// No nonzero coefficient inside the window. Says nothing beyond it.
    pub fn is_zero_within(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Stored coefficient if the exponent is inside the window:
    /// `Ok(None)` means exactly zero there, `Err` means unknown.
    pub fn coeff_known(&self, exps: &[i32]) -> Result<Option<&C>> {
        for (i, &e) in exps.iter().enumerate() {
            let d = depth(self.order.spec(i).expand, e);
            if self.dhi[i] != DEPTH_INF && d > self.dhi[i] {
                return Err(Error::UnknownCoefficient {
                    context: "coefficient lookup".into(),
                    var: self.order.spec(i).name.clone(),
                    exponent: e as i64,
                    lo: self.dlo[i] as i64,
                    hi: self.dhi[i] as i64,
                });
            }
        }
        Ok(self.coeffs.get(exps))
    }

    fn assert_same_order(&self, other: &Self) {
        assert!(
            self.order == other.order,
            "mixed variable orders: {:?} vs {:?}",
            self.order.names(),
            other.order.names()
        );
    }

    fn prune_to_window(&mut self) {
        let order = self.order.clone();
        let dlo = self.dlo.clone();
        let dhi = self.dhi.clone();
        self.coeffs.retain(|exps, c| {
            !c.is_czero()
                && exps.iter().enumerate().all(|(i, &e)| {
                    let d = depth(order.spec(i).expand, e);
                    d >= dlo[i] && (dhi[i] == DEPTH_INF || d <= dhi[i])
                })
        });
    }

    pub fn add(&self, other: &Self) -> Self {
        self.assert_same_order(other);
        let n = self.order.len();
        let mut out = TruncSeries {
            order: self.order.clone(),
            dlo: (0..n).map(|i| dmin(self.dlo[i], other.dlo[i])).collect(),
            dhi: (0..n).map(|i| dmin(self.dhi[i], other.dhi[i])).collect(),
            coeffs: self.coeffs.clone(),
        };
        for (e, c) in other.coeffs.iter() {
            match out.coeffs.get_mut(e) {
                Some(v) => {
                    let s = v.cadd(c);
                    if s.is_czero() {
                        out.coeffs.remove(e);
                    } else {
                        *v = s;
                    }
                }
                None => {
                    out.coeffs.insert(e.clone(), c.clone());
                }
            }
        }
        out.prune_to_window();
        out
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for v in out.coeffs.values_mut() {
            *v = v.cneg();
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.assert_same_order(other);
        let n = self.order.len();
        let dlo: Vec<i32> = (0..n).map(|i| self.dlo[i] + other.dlo[i]).collect();
        let dhi: Vec<i32> = (0..n)
            .map(|i| {
                dmin(
                    dadd_hi(self.dhi[i], other.dlo[i]),
                    dadd_hi(other.dhi[i], self.dlo[i]),
                )
            })
            .collect();
        let mut out: TruncSeries<C> = TruncSeries {
            order: self.order.clone(),
            dlo,
            dhi,
            coeffs: BTreeMap::new(),
        };
        let mut exps = vec![0i32; n];
        for (ea, ca) in self.coeffs.iter() {
            for (eb, cb) in other.coeffs.iter() {
                let mut inside = true;
                for i in 0..n {
                    exps[i] = ea[i] + eb[i];
                    let d = depth(out.order.spec(i).expand, exps[i]);
                    if out.dhi[i] != DEPTH_INF && d > out.dhi[i] {
                        inside = false;
                        break;
                    }
                }
                if !inside {
                    continue;
                }
                let c = ca.cmul(cb);
                if c.is_czero() {
                    continue;
                }
                match out.coeffs.get_mut(exps.as_slice()) {
                    Some(v) => {
                        let s = v.cadd(&c);
                        if s.is_czero() {
                            out.coeffs.remove(exps.as_slice());
                        } else {
                            *v = s;
                        }
                    }
                    None => {
                        out.coeffs.insert(exps.clone(), c);
                    }
                }
            }
        }
        out
    }

    pub fn scale(&self, r: &Rat) -> Self {
        let mut out = self.clone();
        if r.is_czero() {
            out.coeffs.clear();
            return out;
        }
        for v in out.coeffs.values_mut() {
            *v = v.cscale(r);
        }
        out
    }

    /// Left-multiply every coefficient by a ring element (treated as an
    /// exact constant in all variables).
    pub fn mul_coeff_left(&self, c: &C) -> Self {
        let mut out = self.clone();
        out.coeffs = out
            .coeffs
            .into_iter()
            .filter_map(|(e, v)| {
                let p = c.cmul(&v);
                if p.is_czero() {
                    None
                } else {
                    Some((e, p))
                }
            })
            .collect();
        out
    }

    pub fn mul_coeff_right(&self, c: &C) -> Self {
        let mut out = self.clone();
        out.coeffs = out
            .coeffs
            .into_iter()
            .filter_map(|(e, v)| {
                let p = v.cmul(c);
                if p.is_czero() {
                    None
                } else {
                    Some((e, p))
                }
            })
            .collect();
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc: Option<Self> = None;
        for _ in 0..k {
            acc = Some(match acc {
                None => self.clone(),
                Some(a) => a.mul(self),
            });
        }
        acc.unwrap_or_else(|| self.one_like_window())
    }

    fn one_like_window(&self) -> Self {
        let c = self
            .coeffs
            .values()
            .next()
            .expect("cannot synthesize a unit from an empty series")
            .cone_like();
        TruncSeries::constant(&self.order, c)
    }

    /// Intersect this series' window with another's (content untouched,
    /// then re-pruned).
    pub fn restrict_to_common(&self, other: &Self) -> Self {
        self.assert_same_order(other);
        let mut out = self.clone();
        for i in 0..self.order.len() {
            out.dlo[i] = dmin(out.dlo[i], other.dlo[i]);
            out.dhi[i] = dmin(out.dhi[i], other.dhi[i]);
        }
        out.prune_to_window();
        out
    }

    /// Equal where both windows are defined.
    pub fn eq_on_common(&self, other: &Self) -> bool {
        self.assert_same_order(other);
        let inside = |s: &Self, exps: &[i32]| -> bool {
            exps.iter().enumerate().all(|(i, &e)| {
                let d = depth(s.order.spec(i).expand, e);
                d >= s.dlo[i].min(other.dlo[i])
                    && (s.dhi[i] == DEPTH_INF || d <= s.dhi[i])
            })
        };
        for (e, c) in self.coeffs.iter() {
            if inside(other, e) && inside(self, e) {
                match other.coeffs.get(e) {
                    Some(d) => {
                        if c != d {
                            return false;
                        }
                    }
                    None => {
                        if !c.is_czero() {
                            return false;
                        }
                    }
                }
            }
        }
        for (e, d) in other.coeffs.iter() {
            if inside(self, e) && inside(other, e) && !self.coeffs.contains_key(e) && !d.is_czero()
            {
                return false;
            }
        }
        true
    }

    /// Leading term under the iterated-Laurent order (compare depth of the
    /// last variable first). `None` when nothing is stored.
    pub fn leading_term(&self) -> Option<(Vec<i32>, &C)> {
        self.coeffs
            .iter()
            .min_by(|(ea, _), (eb, _)| {
                let ka: Vec<i32> = ea
                    .iter()
                    .enumerate()
                    .rev()
                    .map(|(i, &e)| depth(self.order.spec(i).expand, e))
                    .collect();
                let kb: Vec<i32> = eb
                    .iter()
                    .enumerate()
                    .rev()
                    .map(|(i, &e)| depth(self.order.spec(i).expand, e))
                    .collect();
                ka.cmp(&kb)
            })
            .map(|(e, c)| (e.clone(), c))
    }

    /// Multiplicative inverse by a geometric series around the leading term.
    ///
    /// Requires: the leading coefficient invertible; every other term at
    /// componentwise greater-or-equal depth than the leading one; and each
    /// correction term carrying positive depth in at least one variable with
    /// a finite window (otherwise the expansion never truncates).
    pub fn invert(&self) -> Result<Self> {
        let (mu, lead) = self.leading_term().ok_or_else(|| {
            Error::SingularSeries("no known leading term to invert around".into())
        })?;
        let lead_inv = lead.cinv().ok_or_else(|| {
            Error::SingularSeries("leading coefficient is not invertible".into())
        })?;
        let n = self.order.len();
        let mud: Vec<i32> = (0..n)
            .map(|i| depth(self.order.spec(i).expand, mu[i]))
            .collect();
        for (e, _) in self.coeffs.iter() {
            for i in 0..n {
                if depth(self.order.spec(i).expand, e[i]) < mud[i] {
                    return Err(Error::SingularSeries(
                        "terms descend below the leading term in some variable".into(),
                    ));
                }
            }
        }
        let neg_mu: Vec<i32> = mu.iter().map(|&e| -e).collect();
        let mono_inv = TruncSeries::monomial(&self.order, &neg_mu, lead_inv);
        let mut g = mono_inv.mul(self);
        let one = g.one_like_window();
        g = g.sub(&one);
        for (e, _) in g.coeffs.iter() {
            let mut budgeted = 0i64;
            for i in 0..n {
                if g.dhi[i] != DEPTH_INF {
                    budgeted += depth(self.order.spec(i).expand, e[i]) as i64;
                }
            }
            if budgeted < 1 {
                return Err(Error::WindowUnderflow {
                    context: "series inversion".into(),
                    detail: "a correction term has no depth in any finite window; the \
                             expansion would not truncate"
                        .into(),
                });
            }
        }
        let mut acc = one.restrict_to_common(&g);
        let mut cur = g.clone();
        let mut negate = true;
        let mut steps = 0u32;
        while !cur.is_zero_within() {
            acc = acc.add(&if negate { cur.neg() } else { cur.clone() });
            cur = cur.mul(&g);
            negate = !negate;
            steps += 1;
            if steps > 200_000 {
                return Err(Error::WindowUnderflow {
                    context: "series inversion".into(),
                    detail: "expansion failed to truncate".into(),
                });
            }
        }
        Ok(acc.mul(&mono_inv))
    }

    /// Replace a variable by its negative.
    pub fn negate_var(&self, var: usize) -> Self {
        let mut out = self.clone();
        out.coeffs = out
            .coeffs
            .into_iter()
            .map(|(e, c)| {
                let c = if e[var].rem_euclid(2) == 1 { c.cneg() } else { c };
                (e, c)
            })
            .collect();
        out
    }

    /// d/d(var).
    pub fn derivative(&self, var: usize) -> Self {
        let mut out = TruncSeries {
            order: self.order.clone(),
            dlo: self.dlo.clone(),
            dhi: self.dhi.clone(),
            coeffs: BTreeMap::new(),
        };
        match self.order.spec(var).expand {
            Expand::AtZero => {
                out.dlo[var] = self.dlo[var] - 1;
                out.dhi[var] = dadd_hi(self.dhi[var], -1);
            }
            Expand::AtInfinity => {
                out.dlo[var] = self.dlo[var] + 1;
                out.dhi[var] = dadd_hi(self.dhi[var], 1);
            }
        }
        for (e, c) in self.coeffs.iter() {
            if e[var] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[var] -= 1;
            out.add_term(&e2, c.cscale(&Rat::from_integer(e[var].into())));
        }
        out
    }

    /// Extract the coefficient of `var^exp` as a series constant in `var`.
    pub fn coefficient_in(&self, var: usize, exp: i32) -> Result<Self> {
        let d = depth(self.order.spec(var).expand, exp);
        if self.dhi[var] != DEPTH_INF && d > self.dhi[var] {
            return Err(Error::UnknownCoefficient {
                context: "coefficient extraction".into(),
                var: self.order.spec(var).name.clone(),
                exponent: exp as i64,
                lo: self.dlo[var] as i64,
                hi: self.dhi[var] as i64,
            });
        }
        let mut out = TruncSeries {
            order: self.order.clone(),
            dlo: self.dlo.clone(),
            dhi: self.dhi.clone(),
            coeffs: BTreeMap::new(),
        };
        out.dlo[var] = 0;
        out.dhi[var] = DEPTH_INF;
        for (e, c) in self.coeffs.iter() {
            if e[var] == exp {
                let mut e2 = e.clone();
                e2[var] = 0;
                out.coeffs.insert(e2, c.clone());
            }
        }
        Ok(out)
    }

    /// Transplant into a larger variable order. Every present variable must
    /// map (optionally renamed) to a target variable of the same orientation,
    /// in the same relative order; absent target variables get the exact
    /// window.
    pub fn embed(&self, target: &VarOrder, rename: &[(&str, &str)]) -> TruncSeries<C> {
        let mut map = Vec::with_capacity(self.order.len());
        for i in 0..self.order.len() {
            let src = &self.order.spec(i).name;
            let dst_name = rename
                .iter()
                .find(|(f, _)| f == src)
                .map(|(_, t)| t.to_string())
                .unwrap_or_else(|| src.clone());
            let j = target
                .index_of(&dst_name)
                .unwrap_or_else(|| panic!("target order lacks variable {dst_name}"));
            assert_eq!(
                self.order.spec(i).expand,
                target.spec(j).expand,
                "orientation mismatch embedding {src} as {dst_name}"
            );
            if let Some(&prev) = map.last() {
                assert!(prev < j, "embedding must preserve relative variable order");
            }
            map.push(j);
        }
        let mut out = TruncSeries {
            order: target.clone(),
            dlo: vec![0; target.len()],
            dhi: vec![DEPTH_INF; target.len()],
            coeffs: BTreeMap::new(),
        };
        for (i, &j) in map.iter().enumerate() {
            out.dlo[j] = self.dlo[i];
            out.dhi[j] = self.dhi[i];
        }
        for (e, c) in self.coeffs.iter() {
            let mut e2 = vec![0i32; target.len()];
            for (i, &j) in map.iter().enumerate() {
                e2[j] = e[i];
            }
            out.coeffs.insert(e2, c.clone());
        }
        out
    }

    /// Substitute `var -> var + constant + Σ cᵢ·varᵢ` where every `varᵢ`
    /// is strictly smaller (later in the order) and expands at zero.
    ///
    /// Soundness cases:
    /// - at-infinity variable: always sound, window preserved;
    /// - at-zero variable, pure-variable offset: sound, window slides down
    ///   by the offset's total budget;
    /// - at-zero variable with a constant offset: only when the series is
    ///   exact in that variable with no negative powers (otherwise the
    ///   re-expansion needs unknown coefficients).
    pub fn shift(&self, var: usize, form: &LinForm) -> Result<Self> {
        let n = self.order.len();
        for &(b, _) in form.terms.iter() {
            assert!(b > var, "shift offset must use strictly smaller variables");
            assert!(
                self.order.spec(b).expand == Expand::AtZero,
                "shift offsets must expand at zero"
            );
        }
        let has_const = !num::traits::Zero::is_zero(&form.constant);
        let var_exp = self.order.spec(var).expand;
        let at_zero = var_exp == Expand::AtZero;

        // Build the offset as a series over the same order; its windows in
        // the offset variables mirror the input's so powers prune correctly.
        let mut beta = TruncSeries::<Rat>::zero(
            &self.order,
            &(0..n)
                .map(|i| match self.order.spec(i).expand {
                    Expand::AtZero => (
                        self.dlo[i].min(0),
                        if self.dhi[i] == DEPTH_INF {
                            i32::MAX
                        } else {
                            self.dhi[i]
                        },
                    ),
                    Expand::AtInfinity => (
                        if self.dhi[i] == DEPTH_INF {
                            i32::MIN
                        } else {
                            -self.dhi[i]
                        },
                        -self.dlo[i].min(0),
                    ),
                })
                .collect::<Vec<_>>(),
        );
        if has_const {
            beta.add_term(&vec![0; n], form.constant.clone());
        }
        for &(b, ref c) in form.terms.iter() {
            let mut e = vec![0i32; n];
            e[b] = 1;
            beta.add_term(&e, c.clone());
        }

        if at_zero && has_const {
            let all_nonneg = self.coeffs.keys().all(|e| e[var] >= 0);
            if self.dhi[var] != DEPTH_INF || !all_nonneg {
                return Err(Error::WindowUnderflow {
                    context: "series shift".into(),
                    detail: format!(
                        "constant shift of small variable {} needs the series exact and \
                         polynomial in it",
                        self.order.spec(var).name
                    ),
                });
            }
        }

        // The expansion only truncates when something stops it: either the
        // shifted variable's own at-infinity window, or every offset term
        // burning budget in some finitely windowed variable.
        let has_negative = self.coeffs.keys().any(|e| e[var] < 0);
        let v_caps = !at_zero && self.dhi[var] != DEPTH_INF;
        let beta_burns_budget = beta.terms().all(|(e, _)| {
            (0..n)
                .filter(|&i| beta.dhi[i] != DEPTH_INF)
                .map(|i| depth(self.order.spec(i).expand, e[i]) as i64)
                .sum::<i64>()
                >= 1
        });
        let needs_burn = (has_negative && !v_caps)
            || (at_zero && !has_const && self.dhi[var] != DEPTH_INF && !beta.is_zero_within());
        if needs_burn && !beta_burns_budget {
            return Err(Error::WindowUnderflow {
                context: "series shift".into(),
                detail: "re-expansion has no finite window to stop against".into(),
            });
        }

        // Offset powers are shared across terms; `death` is the first power
        // that prunes to nothing, bounding how far anything (including the
        // unknown region) can slide.
        let mut beta_pows: Vec<TruncSeries<Rat>> =
            vec![TruncSeries::constant(&self.order, Rat::one())];
        let mut death: Option<usize> = None;
        let ensure_pow = |pows: &mut Vec<TruncSeries<Rat>>,
                          death: &mut Option<usize>,
                          j: usize|
         -> bool {
            while pows.len() <= j {
                if death.is_some() {
                    return false;
                }
                let nxt = pows.last().unwrap().mul(&beta);
                if nxt.is_zero_within() {
                    *death = Some(pows.len());
                    return false;
                }
                pows.push(nxt);
            }
            true
        };

        let mut raw: BTreeMap<Vec<i32>, C> = BTreeMap::new();
        let mut max_j_used = 0usize;
        for (e, c) in self.coeffs.iter() {
            let ex = e[var];
            let mut j: usize = 0;
            loop {
                if ex >= 0 && j as i64 > ex as i64 {
                    break;
                }
                if v_caps {
                    // at infinity the shifted power descends; stop past the window
                    let out_depth = j as i64 - ex as i64;
                    if out_depth > self.dhi[var] as i64 {
                        break;
                    }
                }
                if !ensure_pow(&mut beta_pows, &mut death, j) {
                    break;
                }
                max_j_used = max_j_used.max(j);
                let factor = binom(ex as i64, j as u32);
                if !num::traits::Zero::is_zero(&factor) {
                    for (be, bc) in beta_pows[j].terms() {
                        let mut oe = e.clone();
                        for i in 0..n {
                            if i != var {
                                oe[i] += be[i];
                            }
                        }
                        oe[var] = ex - j as i32;
                        let contrib = c.cscale(&(&factor * bc));
                        if contrib.is_czero() {
                            continue;
                        }
                        match raw.get_mut(oe.as_slice()) {
                            Some(v) => {
                                let s = v.cadd(&contrib);
                                if s.is_czero() {
                                    raw.remove(oe.as_slice());
                                } else {
                                    *v = s;
                                }
                            }
                            None => {
                                raw.insert(oe, contrib);
                            }
                        }
                    }
                }
                j += 1;
                if j > 1_000_000 {
                    return Err(Error::WindowUnderflow {
                        context: "series shift".into(),
                        detail: "shift expansion failed to truncate".into(),
                    });
                }
            }
        }

        let mut out = TruncSeries {
            order: self.order.clone(),
            dlo: self.dlo.clone(),
            dhi: self.dhi.clone(),
            coeffs: BTreeMap::new(),
        };
        if at_zero && !has_const {
            // unknown input terms can slide down by at most the offset budget
            let slide = if self.dhi[var] == DEPTH_INF {
                max_j_used as i32
            } else {
                while death.is_none() {
                    let j = beta_pows.len();
                    if j > 1_000_000 {
                        return Err(Error::WindowUnderflow {
                            context: "series shift".into(),
                            detail: "cannot bound how far unknown coefficients slide".into(),
                        });
                    }
                    ensure_pow(&mut beta_pows, &mut death, j);
                }
                (death.unwrap() - 1) as i32
            };
            out.dlo[var] = self.dlo[var] - slide;
            out.dhi[var] = dadd_hi(self.dhi[var], -slide);
        } else if at_zero && has_const {
            out.dlo[var] = self.dlo[var].min(0);
        }
        for (e, c) in raw {
            // at-infinity outputs past the window are unknown-region; drop
            let d = depth(var_exp, e[var]);
            if out.dhi[var] != DEPTH_INF && d > out.dhi[var] {
                continue;
            }
            out.dlo[var] = out.dlo[var].min(d);
            let mut ok = true;
            for i in 0..n {
                if i == var {
                    continue;
                }
                let di = depth(self.order.spec(i).expand, e[i]);
                if out.dhi[i] != DEPTH_INF && di > out.dhi[i] {
                    ok = false;
                    break;
                }
            }
            if ok {
                out.coeffs.insert(e, c);
            }
        }
        Ok(out)
    }

    /// Map coefficients into another ring.
    pub fn map<D: Coeff, F: Fn(&C) -> D>(&self, f: F) -> TruncSeries<D> {
        let mut coeffs = BTreeMap::new();
        for (e, c) in self.coeffs.iter() {
            let d = f(c);
            if !d.is_czero() {
                coeffs.insert(e.clone(), d);
            }
        }
        TruncSeries {
            order: self.order.clone(),
            dlo: self.dlo.clone(),
            dhi: self.dhi.clone(),
            coeffs,
        }
    }
}

impl<C: Coeff> Coeff for TruncSeries<C> {
    fn is_czero(&self) -> bool {
        self.coeffs.is_empty()
    }
    fn cadd(&self, other: &Self) -> Self {
        self.add(other)
    }
    fn cneg(&self) -> Self {
        self.neg()
    }
    fn cmul(&self, other: &Self) -> Self {
        self.mul(other)
    }
    fn cscale(&self, r: &Rat) -> Self {
        self.scale(r)
    }
    fn czero_like(&self) -> Self {
        TruncSeries {
            order: self.order.clone(),
            dlo: vec![0; self.order.len()],
            dhi: vec![DEPTH_INF; self.order.len()],
            coeffs: BTreeMap::new(),
        }
    }
    fn cone_like(&self) -> Self {
        self.one_like_window()
    }
    fn cinv(&self) -> Option<Self> {
        self.invert().ok()
    }
}

impl<C: Coeff + fmt::Display> fmt::Display for TruncSeries<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.coeffs.iter() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})")?;
            for (i, &k) in e.iter().enumerate() {
                if k != 0 {
                    write!(f, "*{}^{}", self.order.spec(i).name, k)?;
                }
            }
        }
        Ok(())
    }
}

/// `(var + a)⁻¹` expanded to the given depth, exact in all other variables.
pub fn inv_linear(order: &VarOrder, var: usize, a: &Rat, depth_hi: i32) -> TruncSeries<Rat> {
    let mut exps = vec![0i32; order.len()];
    exps[var] = 1;
    let mut window: Vec<(i32, i32)> = (0..order.len())
        .map(|i| match order.spec(i).expand {
            Expand::AtZero => (0, i32::MAX),
            Expand::AtInfinity => (i32::MIN, 0),
        })
        .collect();
    window[var] = match order.spec(var).expand {
        Expand::AtZero => (-1, depth_hi),
        Expand::AtInfinity => (-depth_hi, 1),
    };
    let s = TruncSeries::monomial(order, &exps, Rat::one())
        .with_term(&vec![0; order.len()], a.clone())
        .restrict_to_common(&TruncSeries::zero(order, &window));
    s.invert().expect("a linear polynomial in one variable always inverts")
}

/// The normalization series `g(u) = 1 + g₁u⁻¹ + …` fixed by
/// `g(u+N) = g(u)(1 − u⁻²)`, to the requested order.
pub fn compute_g(n: u32, k_order: u32) -> TruncSeries<Rat> {
    assert!(n >= 1 && k_order >= 1);
    let coeffs = g_coefficients(n, k_order);
    let order = VarOrder::of(&[("u", Expand::AtInfinity)]);
    let mut s = TruncSeries::zero(&order, &[(-(k_order as i32), 0)]);
    for (i, g) in coeffs.into_iter().enumerate() {
        s.add_term(&[-(i as i32)], g);
    }
    s
}

/// Coefficients `g₀=1, g₁, …, g_K` of the normalization series.
pub fn g_coefficients(n: u32, k_order: u32) -> Vec<Rat> {
    let big_n = Rat::from_integer((n as i64).into());
    let mut g: Vec<Rat> = vec![Rat::one()];
    for k in 2..=(k_order as i64 + 1) {
        // u^{-k} coefficient of g(u+N) = g(u)(1-u^{-2}), solved for g_{k-1}
        let mut acc = if k >= 2 && (k - 2) < g.len() as i64 {
            g[(k - 2) as usize].clone()
        } else {
            Rat::from_integer(0.into())
        };
        for i in 0..=(k - 2) {
            let b = binom(-i, (k - i) as u32);
            acc += &g[i as usize] * b * rat_pow(&big_n, k - i);
        }
        let denom = Rat::from_integer((k - 1).into()) * &big_n;
        g.push(acc / denom);
    }
    g.truncate(k_order as usize + 1);
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, rat_i};
    use proptest::prelude::*;

    fn uinf() -> VarOrder {
        VarOrder::of(&[("u", Expand::AtInfinity)])
    }

    fn uzero() -> VarOrder {
        VarOrder::of(&[("u", Expand::AtZero)])
    }

    #[test]
    fn polynomial_product() {
        let o = uzero();
        let a = TruncSeries::zero(&o, &[(0, 4)])
            .with_term(&[0], rat_i(1))
            .with_term(&[1], rat_i(1));
        let b = TruncSeries::zero(&o, &[(0, 4)])
            .with_term(&[0], rat_i(1))
            .with_term(&[1], rat_i(-1));
        let p = a.mul(&b);
        assert_eq!(p.coeff_known(&[0]).unwrap(), Some(&rat_i(1)));
        assert_eq!(p.coeff_known(&[1]).unwrap(), None);
        assert_eq!(p.coeff_known(&[2]).unwrap(), Some(&rat_i(-1)));
        assert_eq!(p.window(0), (0, 4));
    }

    #[test]
    fn geometric_inverse() {
        let o = uinf();
        let a = TruncSeries::zero(&o, &[(-4, 0)])
            .with_term(&[0], rat_i(1))
            .with_term(&[-1], rat_i(-1));
        let inv = a.invert().unwrap();
        for k in 0..=4 {
            assert_eq!(inv.coeff_known(&[-k]).unwrap(), Some(&rat_i(1)));
        }
        let back = a.mul(&inv);
        assert_eq!(back.coeff_known(&[0]).unwrap(), Some(&rat_i(1)));
        for k in 1..=4 {
            assert_eq!(back.coeff_known(&[-k]).unwrap(), None);
        }
    }

    #[test]
    fn laurent_expansion_of_difference_inverse() {
        let o = VarOrder::of(&[("z", Expand::AtInfinity), ("w", Expand::AtZero)]);
        let s = TruncSeries::zero(&o, &[(-3, 1), (0, 2)])
            .with_term(&[1, 0], rat_i(1))
            .with_term(&[0, 1], rat_i(-1));
        let inv = s.invert().unwrap();
        assert_eq!(inv.coeff_known(&[-1, 0]).unwrap(), Some(&rat_i(1)));
        assert_eq!(inv.coeff_known(&[-2, 1]).unwrap(), Some(&rat_i(1)));
        assert_eq!(inv.coeff_known(&[-3, 2]).unwrap(), Some(&rat_i(1)));
        assert_eq!(inv.coeff_known(&[-2, 0]).unwrap(), None);
        assert!(inv.coeff_known(&[-4, 3]).is_err());
    }

    #[test]
    fn shift_of_inverse_power() {
        let o = uinf();
        let a = TruncSeries::zero(&o, &[(-3, 0)]).with_term(&[-1], rat_i(1));
        let sh = a.shift(0, &LinForm::constant(rat_i(1))).unwrap();
        assert_eq!(sh.coeff_known(&[-1]).unwrap(), Some(&rat_i(1)));
        assert_eq!(sh.coeff_known(&[-2]).unwrap(), Some(&rat_i(-1)));
        assert_eq!(sh.coeff_known(&[-3]).unwrap(), Some(&rat_i(1)));
        let id = a.shift(0, &LinForm::constant(rat_i(0))).unwrap();
        assert!(id.eq_on_common(&a));
    }

    #[test]
    fn shift_at_infinity_by_smaller_variable() {
        let o = VarOrder::of(&[("z", Expand::AtInfinity), ("w", Expand::AtZero)]);
        let a = TruncSeries::zero(&o, &[(-3, 0), (0, 2)]).with_term(&[-1, 0], rat_i(1));
        // z^{-1} at z -> z - w reproduces the iterated-Laurent expansion of (z-w)^{-1}
        let sh = a.shift(0, &LinForm::var(1, rat_i(-1))).unwrap();
        assert_eq!(sh.coeff_known(&[-1, 0]).unwrap(), Some(&rat_i(1)));
        assert_eq!(sh.coeff_known(&[-2, 1]).unwrap(), Some(&rat_i(1)));
        assert_eq!(sh.coeff_known(&[-3, 2]).unwrap(), Some(&rat_i(1)));
    }

    #[test]
    fn constant_shift_of_small_variable_requires_exactness() {
        let o = uzero();
        let trunc = TruncSeries::zero(&o, &[(0, 5)]).with_term(&[2], rat_i(1));
        assert!(trunc.shift(0, &LinForm::constant(rat_i(1))).is_err());
        let exact = TruncSeries::zero(&o, &[(0, i32::MAX)]).with_term(&[2], rat_i(1));
        let sh = exact.shift(0, &LinForm::constant(rat_i(1))).unwrap();
        assert_eq!(sh.coeff_known(&[0]).unwrap(), Some(&rat_i(1)));
        assert_eq!(sh.coeff_known(&[1]).unwrap(), Some(&rat_i(2)));
        assert_eq!(sh.coeff_known(&[2]).unwrap(), Some(&rat_i(1)));
    }

    #[test]
    fn g_series_frozen_values() {
        let g2 = g_coefficients(2, 3);
        assert_eq!(g2[1], rat(1, 2));
        assert_eq!(g2[2], rat(5, 8));
        assert_eq!(g2[3], rat(11, 16));
        let g1 = g_coefficients(1, 4);
        for k in 0..=4 {
            assert_eq!(g1[k], rat_i(1));
        }
        let g3 = g_coefficients(3, 3);
        assert_eq!(g3[1], rat(1, 3));
        assert_eq!(g3[2], rat(10, 18));
        assert_eq!(g3[3], rat(81 + 36 + 1, 6 * 27));
    }

    #[test]
    fn g_recurrence_identity() {
        for n in 1..=5u32 {
            let k = 10;
            let g = compute_g(n, k);
            let lhs = g.shift(0, &LinForm::constant(rat_i(n as i64))).unwrap();
            let corr = TruncSeries::zero(g.order(), &[(-(k as i32), 0)])
                .with_term(&[0], rat_i(1))
                .with_term(&[-2], rat_i(-1));
            let rhs = g.mul(&corr);
            assert!(lhs.eq_on_common(&rhs), "recurrence fails for N={n}");
        }
    }

    #[test]
    fn g_product_telescope() {
        for n in 1..=5u32 {
            let k = 10;
            let g = compute_g(n, k);
            let mut prod = g.clone();
            for j in 1..n {
                prod = prod.mul(&g.shift(0, &LinForm::constant(rat_i(j as i64))).unwrap());
            }
            let target = TruncSeries::zero(g.order(), &[(-(k as i32), 0)])
                .with_term(&[0], rat_i(1))
                .with_term(&[-1], rat_i(-1));
            let inv = target.invert().unwrap();
            assert!(prod.eq_on_common(&inv), "product identity fails for N={n}");
        }
    }

    #[test]
    fn g_unitarity() {
        for n in 1..=5u32 {
            let k = 10;
            let g = compute_g(n, k);
            let gm = g.negate_var(0);
            let corr = TruncSeries::zero(g.order(), &[(-(k as i32), 0)])
                .with_term(&[0], rat_i(1))
                .with_term(&[-2], rat_i(-1));
            let prod = g.mul(&gm).mul(&corr);
            let one = TruncSeries::constant(g.order(), rat_i(1));
            assert!(prod.eq_on_common(&one), "unitarity fails for N={n}");
        }
    }

    #[test]
    fn derivative_and_coefficient_extraction() {
        let o = uinf();
        let a = TruncSeries::zero(&o, &[(-4, 0)])
            .with_term(&[0], rat_i(3))
            .with_term(&[-2], rat(1, 2));
        let d = a.derivative(0);
        assert_eq!(d.coeff_known(&[-3]).unwrap(), Some(&rat_i(-1)));
        let c = a.coefficient_in(0, -2).unwrap();
        assert_eq!(c.coeff_known(&[0]).unwrap(), Some(&rat(1, 2)));
        assert!(a.coefficient_in(0, -5).is_err());
    }

    fn arb_series(win: i32) -> impl Strategy<Value = TruncSeries<Rat>> {
        let o = VarOrder::of(&[("z", Expand::AtInfinity), ("w", Expand::AtZero)]);
        proptest::collection::vec(((-3..=1i32), (0..=3i32), (-4..=4i64)), 0..6).prop_map(
            move |terms| {
                let mut s = TruncSeries::zero(&o, &[(-win, 1), (0, win)]);
                for (ez, ew, c) in terms {
                    s.add_term(&[ez, ew], rat_i(c));
                }
                s
            },
        )
    }

    proptest! {
        #[test]
        fn ring_laws(a in arb_series(4), b in arb_series(4), c in arb_series(4)) {
            let ab_c = a.mul(&b).mul(&c);
            let a_bc = a.mul(&b.mul(&c));
            prop_assert!(ab_c.eq_on_common(&a_bc));
            let dist = a.mul(&b.add(&c));
            let expand = a.mul(&b).add(&a.mul(&c));
            prop_assert!(dist.eq_on_common(&expand));
            prop_assert!(a.mul(&b).eq_on_common(&b.mul(&a)));
        }

        #[test]
        fn shift_is_multiplicative(a in arb_series(4), b in arb_series(4), k in -2..=2i64) {
            let f = LinForm::constant(rat_i(k));
            let sa = a.shift(0, &f).unwrap();
            let sb = b.shift(0, &f).unwrap();
            let sab = a.mul(&b).shift(0, &f).unwrap();
            prop_assert!(sab.eq_on_common(&sa.mul(&sb)));
        }

        #[test]
        fn shift_by_smaller_variable_is_multiplicative(a in arb_series(3), b in arb_series(3)) {
            let f = LinForm::var(1, rat_i(-1));
            let sa = a.shift(0, &f).unwrap();
            let sb = b.shift(0, &f).unwrap();
            let sab = a.mul(&b).shift(0, &f).unwrap();
            prop_assert!(sab.eq_on_common(&sa.mul(&sb)));
        }
    }
}
