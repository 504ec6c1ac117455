//! Thin wrapper over binary arbitrary-precision floats.

use dashu_float::ops::{Abs, EstimatedLog2};
use dashu_float::round::mode::HalfEven;
use dashu_float::{Context, FBig};

pub(crate) type Big = FBig<HalfEven, 2>;

/// Working precision plus a cheap 64-bit context for magnitude bookkeeping.
#[derive(Clone, Copy)]
pub(crate) struct Hp {
    ctx: Context<HalfEven>,
    rough: Context<HalfEven>,
    bits: usize,
}

pub(crate) const START_BITS: usize = 192;
pub(crate) const MAX_BITS: usize = 1 << 17;
/// Bits that must survive cancellation for a result to count as accurate.
pub(crate) const KEEP_BITS: f64 = 80.0;

impl Hp {
    pub fn new(bits: usize) -> Self {
        Self { ctx: Context::new(bits), rough: Context::new(64), bits }
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn from_f64(x: f64) -> Big {
        Big::try_from(x).expect("finite input")
    }

    pub fn from_i64(k: i64) -> Big {
        Big::from(k)
    }

    pub fn add(&self, a: &Big, b: &Big) -> Big {
        self.ctx.add(a.repr(), b.repr()).value()
    }

    pub fn mul(&self, a: &Big, b: &Big) -> Big {
        self.ctx.mul(a.repr(), b.repr()).value()
    }

    pub fn div(&self, a: &Big, b: &Big) -> Big {
        self.ctx.div(a.repr(), b.repr()).value()
    }

    /// `acc + a * b` at working precision.
    pub fn fma(&self, acc: &Big, a: &Big, b: &Big) -> Big {
        self.add(acc, &self.mul(a, b))
    }

    /// `acc + |a| * |b|` at 64 bits, for error bookkeeping.
    pub fn abs_fma(&self, acc: &Big, a: &Big, b: &Big) -> Big {
        let p = self.rough.mul(a.repr(), b.repr()).value();
        self.rough.add(acc.repr(), abs(&p).repr()).value()
    }
}

pub(crate) fn abs(x: &Big) -> Big {
    x.clone().abs()
}

pub(crate) fn to_f64(x: &Big) -> f64 {
    x.to_f64().value()
}

/// Approximate `log2 |x|`, `-inf` for zero.
pub(crate) fn log2_abs(x: &Big) -> f64 {
    if x.repr().is_zero() {
        f64::NEG_INFINITY
    } else {
        x.log2_est() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_round_trip() {
        let hp = Hp::new(256);
        let a = Hp::from_f64(1.5);
        let b = Hp::from_i64(-3);
        assert_eq!(to_f64(&hp.mul(&a, &b)), -4.5);
        assert_eq!(to_f64(&hp.div(&a, &b)), -0.5);
        assert_eq!(to_f64(&hp.fma(&a, &a, &b)), -3.0);
        assert_eq!(to_f64(&hp.abs_fma(&Big::ZERO, &a, &b)), 4.5);
        assert!((log2_abs(&Hp::from_f64(1024.0)) - 10.0).abs() < 0.01);
        assert_eq!(log2_abs(&Big::ZERO), f64::NEG_INFINITY);
    }

    #[test]
    fn cancellation_survives() {
        let hp = Hp::new(256);
        let big = Hp::from_f64(2f64.powi(100));
        let one = Big::ONE;
        let s = hp.add(&hp.add(&big, &one), &(-big));
        assert_eq!(to_f64(&s), 1.0);
    }
}
