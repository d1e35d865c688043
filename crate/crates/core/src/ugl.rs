//! A small PBW calculator for U(gl_N): normal ordering of products of the
//! basis elements E_ij against [E_ij, E_kl] = δ_kj E_il − δ_il E_kj, with
//! monomials sorted lexicographically by (i, j). Serves as an independent
//! oracle for the evaluation homomorphisms.

use crate::rat::Rat;
use std::collections::BTreeMap;

pub type EIdx = (u8, u8);

/// Element of U(gl_N): a finite sum of normally ordered E-monomials.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UglElement {
    terms: BTreeMap<Vec<EIdx>, Rat>,
}

impl UglElement {
    pub fn zero() -> Self {
        UglElement {
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(c: Rat) -> Self {
        let mut out = UglElement::zero();
        out.add_term(vec![], c);
        out
    }

    pub fn gen(i: u8, j: u8) -> Self {
        let mut out = UglElement::zero();
        out.add_term(vec![(i, j)], Rat::from_integer(1.into()));
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<EIdx>, &Rat)> {
        self.terms.iter()
    }

    fn add_term(&mut self, mono: Vec<EIdx>, c: Rat) {
        use num::traits::Zero;
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(mono);
        match entry {
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get() + &c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in other.terms.iter() {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in other.terms.iter() {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn scale(&self, r: &Rat) -> Self {
        use num::traits::Zero;
        if r.is_zero() {
            return UglElement::zero();
        }
        let mut out = UglElement::zero();
        for (m, c) in self.terms.iter() {
            out.add_term(m.clone(), c * r);
        }
        out
    }

    /// Product, straightened to the normal form. Each swap of an adjacent
    /// out-of-order pair spawns a strictly shorter correction, so the
    /// rewriting terminates unconditionally.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = UglElement::zero();
        for (ma, ca) in self.terms.iter() {
            for (mb, cb) in other.terms.iter() {
                let mut word = ma.clone();
                word.extend_from_slice(mb);
                straighten(word, ca * cb, &mut out);
            }
        }
        out
    }
}

fn straighten(word: Vec<EIdx>, coeff: Rat, out: &mut UglElement) {
    let mut stack = vec![(word, coeff)];
    while let Some((word, coeff)) = stack.pop() {
        match word.windows(2).position(|w| w[0] > w[1]) {
            None => out.add_term(word, coeff),
            Some(p) => {
                let (i, j) = word[p];
                let (k, l) = word[p + 1];
                let mut swapped = word.clone();
                swapped.swap(p, p + 1);
                stack.push((swapped, coeff.clone()));
                // commutator corrections: δ_kj E_il − δ_il E_kj
                if k == j {
                    let mut w = word[..p].to_vec();
                    w.push((i, l));
                    w.extend_from_slice(&word[p + 2..]);
                    stack.push((w, coeff.clone()));
                }
                if i == l {
                    let mut w = word[..p].to_vec();
                    w.push((k, j));
                    w.extend_from_slice(&word[p + 2..]);
                    stack.push((w, -coeff.clone()));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat_i;

    fn e(i: u8, j: u8) -> UglElement {
        UglElement::gen(i, j)
    }

    #[test]
    fn commutator_matches_bracket() {
        // [E_12, E_21] = E_11 − E_22
        let lhs = e(1, 2).mul(&e(2, 1)).sub(&e(2, 1).mul(&e(1, 2)));
        let rhs = e(1, 1).sub(&e(2, 2));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn associativity_on_words() {
        let a = e(1, 2).add(&e(2, 2).scale(&rat_i(3)));
        let b = e(2, 1);
        let c = e(1, 1).sub(&UglElement::constant(rat_i(2)));
        let left = a.mul(&b).mul(&c);
        let right = a.mul(&b.mul(&c));
        assert_eq!(left, right);
    }

    #[test]
    fn casimir_is_central_for_gl2() {
        // E_11 + E_22 and E_11² + E_22² + ... use the quadratic Casimir:
        // Ω = Σ_ij E_ij E_ji commutes with every E_kl.
        let mut omega = UglElement::zero();
        for i in 1..=2u8 {
            for j in 1..=2u8 {
                omega = omega.add(&e(i, j).mul(&e(j, i)));
            }
        }
        for k in 1..=2u8 {
            for l in 1..=2u8 {
                let diff = omega.mul(&e(k, l)).sub(&e(k, l).mul(&omega));
                assert!(diff.is_zero(), "Ω fails to commute with E_{k}{l}");
            }
        }
    }
}
