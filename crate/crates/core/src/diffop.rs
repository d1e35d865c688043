//! Finite sums Σ aₖ(u)·σᵏ of series coefficients times powers of a step
//! symbol, with two commutation flavors: σ a difference step acting as
//! σ·a(u) = a(u − step)·σ, or a derivation acting as ∂·a(u) = a(u)∂ + a′(u).
//! On top of the operator arithmetic sit column determinants,
//! antisymmetrized and symmetrized trace expansions, and the Newton and
//! MacMahon identity checks for matrices with operator entries.

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;

use crate::coeff::Coeff;
use crate::error::Result;
use crate::fusion::{antisymmetrizer, symmetrizer};
use crate::rat::{binom, rat_i, Rat};
use crate::series::{LinForm, TruncSeries};
use crate::tensor::TensorOp;

/// How the step symbol moves past a coefficient.
#[derive(Clone, PartialEq, Debug)]
pub enum StepRule {
    /// σ·a(u) = a(u − step)·σ.
    Shift(Rat),
    /// ∂·a(u) = a(u)·∂ + a′(u).
    Derivation,
}

/// Σ aₖ(u)·σᵏ with truncated-series coefficients over one distinguished
/// variable. The unit series fixes the ring witness for zeros and ones.
#[derive(Clone, PartialEq, Debug)]
pub struct ShiftOp<C: Coeff> {
    rule: StepRule,
    uvar: usize,
    unit: TruncSeries<C>,
    terms: BTreeMap<u32, TruncSeries<C>>,
}

impl<C: Coeff> ShiftOp<C> {
    /// The zero operator; `unit` must be an exact constant-one series.
    pub fn zero(rule: StepRule, uvar: usize, unit: TruncSeries<C>) -> Self {
        assert!(uvar < unit.order().len());
        ShiftOp {
            rule,
            uvar,
            unit,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_series(rule: StepRule, uvar: usize, unit: TruncSeries<C>, s: TruncSeries<C>) -> Self {
        Self::zero(rule, uvar, unit).with_power(0, s)
    }

    /// The bare step symbol σ.
    pub fn step(rule: StepRule, uvar: usize, unit: TruncSeries<C>) -> Self {
        let one = unit.clone();
        Self::zero(rule, uvar, unit).with_power(1, one)
    }

    pub fn with_power(mut self, k: u32, s: TruncSeries<C>) -> Self {
        self.add_power(k, s);
        self
    }

    pub fn add_power(&mut self, k: u32, s: TruncSeries<C>) {
        match self.terms.remove(&k) {
            None => {
                self.terms.insert(k, s);
            }
            Some(prev) => {
                self.terms.insert(k, prev.add(&s));
            }
        }
    }

    pub fn rule(&self) -> &StepRule {
        &self.rule
    }

    pub fn uvar(&self) -> usize {
        self.uvar
    }

    pub fn unit_series(&self) -> &TruncSeries<C> {
        &self.unit
    }

    pub fn power(&self, k: u32) -> Option<&TruncSeries<C>> {
        self.terms.get(&k)
    }

    pub fn powers(&self) -> impl Iterator<Item = (&u32, &TruncSeries<C>)> {
        self.terms.iter()
    }

    pub fn max_power(&self) -> u32 {
        self.terms
            .iter()
            .filter(|(_, s)| !s.is_zero_within())
            .map(|(&k, _)| k)
            .max()
            .unwrap_or(0)
    }

    pub fn is_zero_within(&self) -> bool {
        self.terms.values().all(|s| s.is_zero_within())
    }

    fn assert_compatible(&self, other: &Self) {
        assert_eq!(self.rule, other.rule, "mixed step rules");
        assert_eq!(self.uvar, other.uvar, "mixed step variables");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.assert_compatible(other);
        let mut out = self.clone();
        for (&k, s) in other.terms.iter() {
            out.add_power(k, s.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for s in out.terms.values_mut() {
            *s = s.neg();
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, r: &Rat) -> Self {
        let mut out = self.clone();
        for s in out.terms.values_mut() {
            *s = s.scale(r);
        }
        out
    }

    /// Operator product with all step powers normal-ordered to the right.
    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.assert_compatible(other);
        let mut out = Self::zero(self.rule.clone(), self.uvar, self.unit.clone());
        for (&a, sa) in self.terms.iter() {
            for (&b, sb) in other.terms.iter() {
                match &self.rule {
                    StepRule::Shift(step) => {
                        let moved = if a == 0 {
                            sb.clone()
                        } else {
                            let delta = -(step * &rat_i(a as i64));
                            sb.shift(self.uvar, &LinForm::constant(delta))?
                        };
                        out.add_power(a + b, sa.mul(&moved));
                    }
                    StepRule::Derivation => {
                        let mut der = sb.clone();
                        for t in 0..=a {
                            if t > 0 {
                                der = der.derivative(self.uvar);
                            }
                            let c = binom(a as i64, t);
                            out.add_power(a + b - t, sa.mul(&der).scale(&c));
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.try_mul(other)
            .expect("step-rule shift left the tracked window")
    }

    /// Equality on the shared known region, power by power.
    pub fn agrees(&self, other: &Self) -> bool {
        self.agrees_up_to_exp(other, i32::MAX)
    }

    /// Equality on the shared known region, ignoring exponents of the step
    /// variable above the cap (where a source-series cutoff may bite).
    pub fn agrees_up_to_exp(&self, other: &Self, max_exp: i32) -> bool {
        self.assert_compatible(other);
        let ks: BTreeSet<u32> = self.terms.keys().chain(other.terms.keys()).copied().collect();
        let zero = self.unit.czero_like();
        for k in ks {
            let a = self.terms.get(&k).unwrap_or(&zero);
            let b = other.terms.get(&k).unwrap_or(&zero);
            if !series_agree_up_to(a, b, self.uvar, max_exp) {
                return false;
            }
        }
        true
    }
}

impl<C: Coeff> Coeff for ShiftOp<C> {
    fn is_czero(&self) -> bool {
        self.terms.values().all(|s| s.is_zero_within())
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
        Self::zero(self.rule.clone(), self.uvar, self.unit.clone())
    }
    fn cone_like(&self) -> Self {
        let one = self.unit.clone();
        Self::zero(self.rule.clone(), self.uvar, self.unit.clone()).with_power(0, one)
    }
    fn cinv(&self) -> Option<Self> {
        if self.terms.iter().any(|(&k, s)| k > 0 && !s.is_zero_within()) {
            return None;
        }
        let inv = self.terms.get(&0)?.invert().ok()?;
        Some(Self::zero(self.rule.clone(), self.uvar, self.unit.clone()).with_power(0, inv))
    }
}

/// Coefficient-wise equality of two series in the known region shared by
/// both, capped at a top exponent of the distinguished variable.
pub fn series_agree_up_to<C: Coeff>(
    a: &TruncSeries<C>,
    b: &TruncSeries<C>,
    var: usize,
    max_exp: i32,
) -> bool {
    let mut keys: BTreeSet<Vec<i32>> = BTreeSet::new();
    for (e, _) in a.terms().chain(b.terms()) {
        if max_exp == i32::MAX || e[var] <= max_exp {
            keys.insert(e.clone());
        }
    }
    for e in keys {
        let ca = match a.coeff_known(&e) {
            Ok(c) => c,
            Err(_) => continue,
        };
        let cb = match b.coeff_known(&e) {
            Ok(c) => c,
            Err(_) => continue,
        };
        let equal = match (ca, cb) {
            (None, None) => true,
            (Some(x), None) => x.is_czero(),
            (None, Some(y)) => y.is_czero(),
            (Some(x), Some(y)) => x == y,
        };
        if !equal {
            return false;
        }
    }
    true
}

/// A square matrix with shift-operator entries, stored as a one-leg tensor
/// operator.
pub type OpMatrix<C> = TensorOp<ShiftOp<C>>;

/// Wrap every entry of a series-valued matrix as the coefficient of σ^power.
pub fn matrix_times_step<C: Coeff>(
    m: &TensorOp<TruncSeries<C>>,
    rule: StepRule,
    uvar: usize,
    unit: &TruncSeries<C>,
    power: u32,
) -> OpMatrix<C> {
    m.map_coeffs(|s| ShiftOp::zero(rule.clone(), uvar, unit.clone()).with_power(power, s.clone()))
}

/// Sum of the diagonal entries.
pub fn full_trace<C: Coeff>(op: &TensorOp<C>, witness: &C) -> C {
    let mut out = witness.czero_like();
    for ((r, c), v) in op.entries() {
        if r == c {
            out = out.cadd(v);
        }
    }
    out
}

/// M₁⋯M_legs with Mₐ the matrix embedded on leg a, composed left to right.
fn leg_train<C: Coeff>(m: &OpMatrix<C>, legs: usize) -> OpMatrix<C> {
    let mut acc = m.leg_embed(&[0], legs);
    for a in 1..legs {
        acc = acc.compose(&m.leg_embed(&[a], legs));
    }
    acc
}

/// tr_{1..m} P·M₁⋯M_m for a rational projector P on m legs.
pub fn projected_trace<C: Coeff>(
    proj: &TensorOp<Rat>,
    m: &OpMatrix<C>,
    one: &ShiftOp<C>,
) -> ShiftOp<C> {
    let legs = proj.legs();
    let lifted = proj.map_coeffs(|r| one.scale(r));
    let train = leg_train(m, legs);
    full_trace(&lifted.compose(&train), one)
}

/// tr M^k as a power of the one-leg matrix.
pub fn power_trace<C: Coeff>(m: &OpMatrix<C>, k: u32, one: &ShiftOp<C>) -> ShiftOp<C> {
    assert!(k >= 1);
    let mut acc = m.clone();
    for _ in 1..k {
        acc = acc.compose(m);
    }
    full_trace(&acc, one)
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

/// A polynomial in a central variable z with shift-operator coefficients.
#[derive(Clone, Debug)]
pub struct ZPoly<C: Coeff> {
    pub coeffs: Vec<ShiftOp<C>>,
}

impl<C: Coeff> ZPoly<C> {
    pub fn get(&self, k: usize, one: &ShiftOp<C>) -> ShiftOp<C> {
        self.coeffs.get(k).cloned().unwrap_or_else(|| one.czero_like())
    }

    pub fn mul(&self, other: &Self, one: &ShiftOp<C>, max_deg: usize) -> Self {
        let mut coeffs = vec![one.czero_like(); max_deg + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                if i + j <= max_deg {
                    coeffs[i + j] = coeffs[i + j].add(&a.mul(b));
                }
            }
        }
        ZPoly { coeffs }
    }

    pub fn derivative_z(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c.scale(&rat_i(k as i64)))
            .collect();
        ZPoly { coeffs }
    }

    pub fn negate_z(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| if k % 2 == 1 { c.neg() } else { c.clone() })
            .collect();
        ZPoly { coeffs }
    }

    /// Power-series inverse up to z^order; the constant term must be the
    /// identity operator.
    pub fn inverse_to(&self, order: usize, one: &ShiftOp<C>) -> Self {
        let mut q: Vec<ShiftOp<C>> = vec![one.cone_like()];
        for j in 1..=order {
            let mut acc = one.czero_like();
            for i in 1..=j.min(self.coeffs.len().saturating_sub(1)) {
                acc = acc.add(&self.coeffs[i].mul(&q[j - i]));
            }
            q.push(acc.neg());
        }
        ZPoly { coeffs: q }
    }
}

/// cdet(1 + zM) by direct column expansion: the z^m coefficient is the sum
/// over size-m principal minors of the column determinant, each expanded as
/// a signed sum of ordered entry products.
pub fn cdet_one_plus_zm_direct<C: Coeff>(m: &OpMatrix<C>, one: &ShiftOp<C>) -> ZPoly<C> {
    let n = m.n();
    let mut coeffs: Vec<ShiftOp<C>> = vec![one.czero_like(); n + 1];
    coeffs[0] = one.cone_like();
    for size in 1..=n {
        let mut acc = one.czero_like();
        for cols in (0..n).combinations(size) {
            for rows in cols.iter().copied().permutations(size) {
                // sign of the bijection cols -> rows as a permutation of positions
                let pos: Vec<usize> = rows
                    .iter()
                    .map(|r| cols.iter().position(|c| c == r).unwrap())
                    .collect();
                let sign = perm_sign(&pos);
                let mut prod = one.cone_like();
                let mut vanished = false;
                for (t, &col) in cols.iter().enumerate() {
                    match m.get(&[rows[t] as u8], &[col as u8]) {
                        Some(e) => prod = prod.mul(e),
                        None => {
                            vanished = true;
                            break;
                        }
                    }
                }
                if !vanished {
                    acc = acc.add(&prod.scale(&sign));
                }
            }
        }
        coeffs[size] = acc;
    }
    ZPoly { coeffs }
}

/// cdet(1 + zM) through the antisymmetrized traces: the z^m coefficient is
/// tr A^(m) M₁⋯M_m.
pub fn cdet_one_plus_zm_traces<C: Coeff>(m: &OpMatrix<C>, one: &ShiftOp<C>) -> ZPoly<C> {
    let n = m.n();
    let mut coeffs: Vec<ShiftOp<C>> = vec![one.cone_like()];
    for size in 1..=n {
        let proj = antisymmetrizer(size, n);
        coeffs.push(projected_trace(&proj, m, one));
    }
    ZPoly { coeffs }
}

/// Σ_{k=0}^{order} z^k tr H^(k) M₁⋯M_k, the symmetrized trace expansion.
pub fn symmetric_trace_series<C: Coeff>(
    m: &OpMatrix<C>,
    order: usize,
    one: &ShiftOp<C>,
) -> ZPoly<C> {
    let n = m.n();
    let mut coeffs: Vec<ShiftOp<C>> = vec![one.cone_like()];
    for size in 1..=order {
        let proj = symmetrizer(size, n);
        coeffs.push(projected_trace(&proj, m, one));
    }
    ZPoly { coeffs }
}

/// ∂_z cdet(1+zM) against cdet(1+zM)·Σ_m (−z)^m tr M^{m+1}, compared
/// through z^m_max; exponents of the step variable above the cap are
/// ignored.
pub fn newton_check<C: Coeff>(
    m: &OpMatrix<C>,
    m_max: usize,
    one: &ShiftOp<C>,
    exp_cap: i32,
) -> std::result::Result<(), String> {
    let cdet = cdet_one_plus_zm_traces(m, one);
    let lhs = cdet.derivative_z();
    let mut tr_series = ZPoly {
        coeffs: Vec::with_capacity(m_max + 1),
    };
    for k in 0..=m_max {
        let sign = if k % 2 == 0 { rat_i(1) } else { rat_i(-1) };
        tr_series
            .coeffs
            .push(power_trace(m, k as u32 + 1, one).scale(&sign));
    }
    let rhs = cdet.mul(&tr_series, one, m_max);
    for k in 0..=m_max {
        if !lhs.get(k, one).agrees_up_to_exp(&rhs.get(k, one), exp_cap) {
            return Err(format!("first mismatch at the z^{k} coefficient"));
        }
    }
    Ok(())
}

/// [cdet(1−zM)]⁻¹ against Σ_m z^m tr H^(m) M₁⋯M_m through z^m_max.
pub fn macmahon_check<C: Coeff>(
    m: &OpMatrix<C>,
    m_max: usize,
    one: &ShiftOp<C>,
    exp_cap: i32,
) -> std::result::Result<(), String> {
    let cdet_neg = cdet_one_plus_zm_traces(m, one).negate_z();
    let lhs = cdet_neg.inverse_to(m_max, one);
    let rhs = symmetric_trace_series(m, m_max, one);
    for k in 0..=m_max {
        if !lhs.get(k, one).agrees_up_to_exp(&rhs.get(k, one), exp_cap) {
            return Err(format!("first mismatch at the z^{k} coefficient"));
        }
    }
    Ok(())
}

/// ∂ + E₊(u) over the loop algebra: diagonal derivation step plus the
/// generating matrix Σ_r E[−r] u^{r−1} truncated at r_depth, with the
/// matching identity operator.
pub fn loop_step_matrix(
    n: u8,
    r_depth: i32,
) -> (OpMatrix<crate::loopalg::LoopElement>, ShiftOp<crate::loopalg::LoopElement>) {
    use crate::loopalg::LoopElement;
    let order = crate::series::VarOrder::of(&[("u", crate::series::Expand::AtInfinity)]);
    let unit = TruncSeries::constant(&order, LoopElement::one(n));
    let mut m = TensorOp::zero(n as usize, 1);
    for i in 1..=n {
        for j in 1..=n {
            let mut s = TruncSeries::zero(&order, &[(i32::MIN, r_depth - 1)]);
            for r in 1..=r_depth {
                s.add_term(&[r - 1], LoopElement::gen(n, i, j, -r));
            }
            let mut op = ShiftOp::zero(StepRule::Derivation, 0, unit.clone()).with_power(0, s);
            if i == j {
                op.add_power(1, unit.clone());
            }
            m.set(vec![i - 1], vec![j - 1], op);
        }
    }
    let one = ShiftOp::zero(StepRule::Derivation, 0, unit).cone_like();
    (m, one)
}

/// [M_ij, M_kl] = [M_kj, M_il] for every index quadruple, on the shared
/// known region capped at the given exponent.
pub fn manin_witness<C: Coeff>(
    m: &OpMatrix<C>,
    one: &ShiftOp<C>,
    exp_cap: i32,
) -> std::result::Result<(), String> {
    let n = m.n() as u8;
    let zero = one.czero_like();
    let entry = |i: u8, j: u8| m.get(&[i], &[j]).cloned().unwrap_or_else(|| zero.clone());
    let comm = |a: &ShiftOp<C>, b: &ShiftOp<C>| a.mul(b).sub(&b.mul(a));
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let lhs = comm(&entry(i, j), &entry(k, l));
                    let rhs = comm(&entry(k, j), &entry(i, l));
                    if !lhs.agrees_up_to_exp(&rhs, exp_cap) {
                        return Err(format!(
                            "commutation pattern fails at ({},{}),({},{})",
                            i + 1,
                            j + 1,
                            k + 1,
                            l + 1
                        ));
                    }
                }
            }
        }
    }
    Ok(())
}
