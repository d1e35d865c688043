//! Ring-of-coefficients abstraction shared by series and tensor containers.
//!
//! Some coefficient rings (algebra elements) cannot produce constants out
//! of thin air, so zero and one are witness-based: `czero_like` / `cone_like`
//! build constants in the same ring as an existing element. Every ring here
//! is an algebra over the rationals, hence `cscale`.

use crate::poly::RatFunc;
use crate::rat::Rat;
use num::traits::{One, Zero};

pub trait Coeff: Clone + PartialEq + std::fmt::Debug + Send + Sync + 'static {
    fn is_czero(&self) -> bool;
    fn cadd(&self, other: &Self) -> Self;
    fn cneg(&self) -> Self;
    fn cmul(&self, other: &Self) -> Self;
    /// Multiply by a rational scalar.
    fn cscale(&self, r: &Rat) -> Self;
    fn czero_like(&self) -> Self;
    fn cone_like(&self) -> Self;
    /// Two-sided inverse if the element is invertible in its ring.
    fn cinv(&self) -> Option<Self>;
}

impl Coeff for Rat {
    fn is_czero(&self) -> bool {
        self.is_zero()
    }
    fn cadd(&self, other: &Self) -> Self {
        self + other
    }
    fn cneg(&self) -> Self {
        -self
    }
    fn cmul(&self, other: &Self) -> Self {
        self * other
    }
    fn cscale(&self, r: &Rat) -> Self {
        self * r
    }
    fn czero_like(&self) -> Self {
        Rat::zero()
    }
    fn cone_like(&self) -> Self {
        Rat::one()
    }
    fn cinv(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(self.recip())
        }
    }
}

impl Coeff for RatFunc {
    fn is_czero(&self) -> bool {
        self.is_zero()
    }
    fn cadd(&self, other: &Self) -> Self {
        self + other
    }
    fn cneg(&self) -> Self {
        -self
    }
    fn cmul(&self, other: &Self) -> Self {
        self * other
    }
    fn cscale(&self, r: &Rat) -> Self {
        self.scale(r)
    }
    fn czero_like(&self) -> Self {
        RatFunc::zero()
    }
    fn cone_like(&self) -> Self {
        RatFunc::one()
    }
    fn cinv(&self) -> Option<Self> {
        self.recip().ok()
    }
}
