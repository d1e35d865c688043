//! The negative half of the affine Lie algebra of gl_N and its vacuum
//! module at a fixed central charge.
//!
//! Elements live in the enveloping algebra of gl_N[t⁻¹]t⁻¹, spanned by
//! normal-ordered words in the loop generators E_ij[−r] with r ≥ 1.
//! Brackets of negative modes never meet the central element, so products
//! here are exact and finite. The central charge only enters through the
//! left action of nonnegative modes on the vacuum module.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use num::traits::{One, Zero};

use crate::coeff::Coeff;
use crate::rat::{fmt_rat, rat_i, Rat};

/// One loop generator E_ij[m]; words only store m ≤ −1.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct LoopGen {
    pub i: u8,
    pub j: u8,
    pub m: i32,
}

impl LoopGen {
    pub fn new(i: u8, j: u8, m: i32) -> Self {
        assert!(i >= 1 && j >= 1, "matrix indices start at 1");
        LoopGen { i, j, m }
    }

    fn sort_key(self) -> (i32, u8, u8) {
        (self.m, self.i, self.j)
    }
}

impl PartialOrd for LoopGen {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LoopGen {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl fmt::Display for LoopGen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "E[{},{}]({})", self.i, self.j, self.m)
    }
}

pub type LoopWord = Vec<LoopGen>;

/// Sum of the modes; the action of a mode-m generator shifts it by m.
pub fn loop_degree(word: &[LoopGen]) -> i64 {
    word.iter().map(|g| g.m as i64).sum()
}

fn accum<K: Ord>(acc: &mut BTreeMap<K, Rat>, key: K, c: Rat) {
    if c.is_zero() {
        return;
    }
    match acc.entry(key) {
        Entry::Occupied(mut e) => {
            let s = &*e.get() + &c;
            if s.is_zero() {
                e.remove();
            } else {
                *e.get_mut() = s;
            }
        }
        Entry::Vacant(v) => {
            v.insert(c);
        }
    }
}

/// A finite linear combination of normal-ordered words in the generators
/// E_ij[−r], r ≥ 1, ordered by ascending (mode, i, j). All arithmetic is
/// exact.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopElement {
    n: u8,
    terms: BTreeMap<LoopWord, Rat>,
}

impl LoopElement {
    pub fn zero(n: u8) -> Self {
        assert!(n >= 1);
        LoopElement {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: u8, c: Rat) -> Self {
        let mut out = Self::zero(n);
        out.add_term(vec![], c);
        out
    }

    pub fn one(n: u8) -> Self {
        Self::constant(n, Rat::one())
    }

    pub fn gen(n: u8, i: u8, j: u8, m: i32) -> Self {
        assert!(m <= -1, "basis generators carry negative modes");
        assert!(i >= 1 && j >= 1 && i <= n && j <= n, "index out of range");
        let mut out = Self::zero(n);
        out.add_term(vec![LoopGen::new(i, j, m)], Rat::one());
        out
    }

    pub fn n(&self) -> u8 {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&LoopWord, &Rat)> {
        self.terms.iter()
    }

    pub fn coeff(&self, word: &[LoopGen]) -> Rat {
        self.terms.get(word).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn add_term(&mut self, word: LoopWord, c: Rat) {
        accum(&mut self.terms, word, c);
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "rank mismatch");
        let mut out = self.clone();
        for (w, c) in other.terms.iter() {
            out.add_term(w.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v = -&*v;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, r: &Rat) -> Self {
        if r.is_zero() {
            return Self::zero(self.n);
        }
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v = &*v * r;
        }
        out
    }

    /// Exact product: concatenate and straighten into normal order with
    /// [E_ij[p], E_kl[q]] = δ_kj E_il[p+q] − δ_il E_kj[p+q] (negative
    /// modes never produce a central term).
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "rank mismatch");
        let mut pending: BTreeMap<LoopWord, Rat> = BTreeMap::new();
        for (wx, cx) in self.terms.iter() {
            for (wy, cy) in other.terms.iter() {
                let w: LoopWord = wx.iter().chain(wy.iter()).copied().collect();
                accum(&mut pending, w, cx * cy);
            }
        }
        let mut out = Self::zero(self.n);
        while let Some((word, coeff)) = pending.pop_first() {
            match word.windows(2).position(|p| p[0] > p[1]) {
                None => out.add_term(word, coeff),
                Some(pos) => {
                    let (a, b) = (word[pos], word[pos + 1]);
                    let mut swapped = word.clone();
                    swapped.swap(pos, pos + 1);
                    accum(&mut pending, swapped, coeff.clone());
                    for (g, s) in bracket_gens(a, b) {
                        let mut w = Vec::with_capacity(word.len() - 1);
                        w.extend_from_slice(&word[..pos]);
                        w.push(g);
                        w.extend_from_slice(&word[pos + 2..]);
                        accum(&mut pending, w, &coeff * &rat_i(s));
                    }
                }
            }
        }
        out
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    /// Largest word length, the PBW filtration degree.
    pub fn top_length(&self) -> usize {
        self.terms.keys().map(|w| w.len()).max().unwrap_or(0)
    }
}

/// [a, b] for two negative-mode generators, as (generator, sign) pairs.
fn bracket_gens(a: LoopGen, b: LoopGen) -> Vec<(LoopGen, i64)> {
    let mut out = Vec::new();
    let m = a.m + b.m;
    if b.i == a.j {
        out.push((LoopGen::new(a.i, b.j, m), 1));
    }
    if a.i == b.j {
        out.push((LoopGen::new(b.i, a.j, m), -1));
    }
    out
}

impl fmt::Display for LoopElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (w, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({})", fmt_rat(c))?;
            for g in w {
                write!(f, "*{g}")?;
            }
        }
        Ok(())
    }
}

impl Coeff for LoopElement {
    fn is_czero(&self) -> bool {
        self.is_zero()
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
        Self::zero(self.n)
    }
    fn cone_like(&self) -> Self {
        Self::one(self.n)
    }
    fn cinv(&self) -> Option<Self> {
        if self.terms.len() != 1 {
            return None;
        }
        let (w, c) = self.terms.iter().next()?;
        if !w.is_empty() {
            return None;
        }
        Some(Self::constant(self.n, c.recip()))
    }
}

/// Left action of E_ij[m] with m ≥ 0 on a vacuum-module vector at central
/// charge `charge`: commute past each factor, with nonnegative modes
/// annihilating the vacuum and the central element acting as the charge.
pub fn affine_act(
    charge: &Rat,
    i: u8,
    j: u8,
    m: i32,
    state: &LoopElement,
) -> LoopElement {
    assert!(m >= 0, "the module action is by nonnegative modes");
    let n = state.n();
    let mut out = LoopElement::zero(n);
    for (word, c) in state.terms() {
        out = out.add(&act_word(charge, n, i, j, m, word).scale(c));
    }
    out
}

fn act_word(charge: &Rat, n: u8, i: u8, j: u8, m: i32, word: &[LoopGen]) -> LoopElement {
    if word.is_empty() {
        return LoopElement::zero(n);
    }
    let x = word[0];
    let rest = &word[1..];
    let mut rest_el = LoopElement::zero(n);
    rest_el.add_term(rest.to_vec(), Rat::one());

    let mut out = LoopElement::zero(n);
    let mode = m + x.m;
    let push = |a: u8, b: u8, sign: i64, out: &mut LoopElement| {
        if mode >= 0 {
            *out = out.add(&act_word(charge, n, a, b, mode, rest).scale(&rat_i(sign)));
        } else {
            let g = LoopElement::gen(n, a, b, mode);
            *out = out.add(&g.mul(&rest_el).scale(&rat_i(sign)));
        }
    };
    if x.i == j {
        push(i, x.j, 1, &mut out);
    }
    if i == x.j {
        push(x.i, j, -1, &mut out);
    }
    if m == -x.m && m != 0 {
        let mut c = Rat::zero();
        if x.i == j && i == x.j {
            c = &c + &rat_i(1);
        }
        if i == j && x.i == x.j {
            c = &c - &(Rat::one() / rat_i(n as i64));
        }
        if !c.is_zero() {
            let central = &(&rat_i(m as i64) * charge) * &c;
            out = out.add(&rest_el.scale(&central));
        }
    }
    let tail = act_word(charge, n, i, j, m, rest);
    let mut x_el = LoopElement::zero(n);
    x_el.add_term(vec![x], Rat::one());
    out.add(&x_el.mul(&tail))
}

/// True when every E_ij[m] with 0 ≤ m ≤ m_max kills the state.
pub fn annihilated_up_to(charge: &Rat, state: &LoopElement, m_max: i32) -> bool {
    let n = state.n();
    for i in 1..=n {
        for j in 1..=n {
            for m in 0..=m_max {
                if !affine_act(charge, i, j, m, state).is_zero() {
                    return false;
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn rand_element(rng: &mut StdRng, n: u8, max_len: usize) -> LoopElement {
        let mut out = LoopElement::zero(n);
        for _ in 0..rng.gen_range(1..=3) {
            let len = rng.gen_range(0..=max_len);
            let word: LoopWord = (0..len)
                .map(|_| {
                    LoopGen::new(
                        rng.gen_range(1..=n),
                        rng.gen_range(1..=n),
                        -rng.gen_range(1..=3),
                    )
                })
                .collect();
            out = out.add(&LoopElement::zero(n).mul_word_unchecked(word, rat_i(rng.gen_range(-4..=4))));
        }
        out
    }

    impl LoopElement {
        fn mul_word_unchecked(mut self, word: LoopWord, c: Rat) -> LoopElement {
            let mut el = LoopElement::zero(self.n);
            el.add_term(vec![], c);
            for g in word {
                let mut f = LoopElement::zero(self.n);
                f.add_term(vec![g], Rat::one());
                el = el.mul(&f);
            }
            self = self.add(&el);
            self
        }
    }

    #[test]
    fn brackets_of_negative_modes_close_without_a_central_term() {
        let n = 3;
        for (i, j, k, l) in [(1u8, 2u8, 2u8, 1u8), (1, 1, 2, 2), (2, 3, 3, 1)] {
            for (r, s) in [(1, 1), (1, 2), (2, 3)] {
                let a = LoopElement::gen(n, i, j, -r);
                let b = LoopElement::gen(n, k, l, -s);
                let mut expect = LoopElement::zero(n);
                if k == j {
                    expect = expect.add(&LoopElement::gen(n, i, l, -r - s));
                }
                if i == l {
                    expect = expect.sub(&LoopElement::gen(n, k, j, -r - s));
                }
                assert_eq!(a.commutator(&b), expect, "i{i} j{j} k{k} l{l} r{r} s{s}");
            }
        }
    }

    #[test]
    fn straightened_products_associate() {
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..40 {
            let n = rng.gen_range(1..=3);
            let a = rand_element(&mut rng, n, 2);
            let b = rand_element(&mut rng, n, 2);
            let c = rand_element(&mut rng, n, 2);
            assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        }
    }

    #[test]
    fn straightening_preserves_the_loop_degree() {
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..20 {
            let n = rng.gen_range(2..=3);
            let a = rand_element(&mut rng, n, 3);
            let b = rand_element(&mut rng, n, 3);
            let lo = |e: &LoopElement| e.terms().map(|(w, _)| loop_degree(w)).min();
            let hi = |e: &LoopElement| e.terms().map(|(w, _)| loop_degree(w)).max();
            let p = a.mul(&b);
            if let (Some(la), Some(lb), Some(lp)) = (lo(&a), lo(&b), lo(&p)) {
                assert!(lp >= la + lb);
            }
            if let (Some(ha), Some(hb), Some(hp)) = (hi(&a), hi(&b), hi(&p)) {
                assert!(hp <= ha + hb);
            }
        }
    }

    #[test]
    fn nonnegative_modes_annihilate_the_vacuum() {
        let charge = rat(7, 2);
        let vac = LoopElement::one(2);
        assert!(annihilated_up_to(&charge, &vac, 4));
    }

    #[test]
    fn the_central_pairing_appears_between_opposite_modes() {
        let n = 2;
        let charge = rat(-3, 1);
        for (i, j, k, l) in [(1u8, 2u8, 2u8, 1u8), (1, 1, 1, 1), (1, 2, 1, 2), (2, 2, 1, 1)] {
            for r in 1..=3 {
                let state = LoopElement::gen(n, k, l, -r);
                let got = affine_act(&charge, i, j, r, &state);
                let mut expect = LoopElement::zero(n);
                let mut c = Rat::zero();
                if k == j && i == l {
                    c = &c + &Rat::one();
                }
                if i == j && k == l {
                    c = &c - &rat(1, n as i64);
                }
                expect = expect.add(&LoopElement::constant(n, &(&rat_i(r as i64) * &charge) * &c));
                assert_eq!(got, expect, "i{i} j{j} k{k} l{l} r{r}");
            }
        }
    }

    #[test]
    fn the_module_action_respects_the_bracket() {
        let mut rng = StdRng::seed_from_u64(91);
        let charge = rat(5, 3);
        for _ in 0..25 {
            let n = rng.gen_range(2..=3);
            let state = rand_element(&mut rng, n, 3);
            let (i, j, r) = (rng.gen_range(1..=n), rng.gen_range(1..=n), rng.gen_range(0..=2));
            let (k, l, s) = (rng.gen_range(1..=n), rng.gen_range(1..=n), rng.gen_range(0..=2));
            let lhs = affine_act(&charge, i, j, r, &affine_act(&charge, k, l, s, &state))
                .sub(&affine_act(&charge, k, l, s, &affine_act(&charge, i, j, r, &state)));
            let mut rhs = LoopElement::zero(n);
            if k == j {
                rhs = rhs.add(&affine_act(&charge, i, l, r + s, &state));
            }
            if i == l {
                rhs = rhs.sub(&affine_act(&charge, k, j, r + s, &state));
            }
            assert_eq!(lhs, rhs, "i{i} j{j} r{r} k{k} l{l} s{s}");
        }
    }

    #[test]
    fn acting_shifts_the_loop_degree_by_the_mode() {
        let charge = rat(2, 1);
        let n = 2;
        let state = LoopElement::gen(n, 1, 2, -3).mul(&LoopElement::gen(n, 2, 1, -1));
        for m in 0..=3 {
            let acted = affine_act(&charge, 2, 2, m, &state);
            for (w, _) in acted.terms() {
                assert_eq!(loop_degree(w), -4 + m as i64);
            }
        }
    }
}
