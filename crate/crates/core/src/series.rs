//! Power series of products of exponential and binomial factors, extended on
//! demand, and Laurent coefficients of `P(z) M(1/z)`.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::hp::{self, Big, Hp, KEEP_BITS, MAX_BITS, START_BITS};

/// Runs `f` at increasing precision until the bits it reports as lost to
/// cancellation leave at least `KEEP_BITS` intact.
pub(crate) fn adaptive<T>(mut f: impl FnMut(Hp) -> Result<(T, f64)>) -> Result<T> {
    let mut bits = START_BITS;
    loop {
        let hp = Hp::new(bits);
        let (out, lost) = f(hp)?;
        if lost + KEEP_BITS <= bits as f64 {
            return Ok(out);
        }
        if bits >= MAX_BITS {
            return Err(Error::Convergence {
                what: "high-precision evaluation",
                estimate: lost,
                tolerance: bits as f64 - KEEP_BITS,
            });
        }
        let want = (lost + KEEP_BITS + 64.0) as usize;
        bits = (2 * bits).max(want).min(MAX_BITS);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Factor {
    /// `exp(a w)`
    Exp(f64),
    /// `(1 + gamma w)^power`
    Binomial { gamma: f64, power: i64 },
}

impl Factor {
    pub fn inverse(self) -> Self {
        match self {
            Factor::Exp(a) => Factor::Exp(-a),
            Factor::Binomial { gamma, power } => Factor::Binomial { gamma, power: -power },
        }
    }

    /// Polynomial degree, `None` for an infinite series.
    pub fn degree(self) -> Option<usize> {
        match self {
            Factor::Exp(a) => (a == 0.0).then_some(0),
            Factor::Binomial { gamma, power } => {
                if gamma == 0.0 || power == 0 {
                    Some(0)
                } else if power > 0 {
                    Some(power as usize)
                } else {
                    None
                }
            }
        }
    }

    /// Value at a complex point.
    pub fn eval(self, w: num_complex::Complex64) -> num_complex::Complex64 {
        match self {
            Factor::Exp(a) => (w * a).exp(),
            Factor::Binomial { gamma, power } => (w * gamma + 1.0).powi(power as i32),
        }
    }
}

pub(crate) struct Series {
    factors: Vec<Factor>,
    own: Vec<Vec<Big>>,
    // prod[j] holds the coefficients of factors[j] * factors[j+1] * ...
    prod: Vec<Vec<Big>>,
    prod_abs: Vec<Vec<Big>>,
    degree: Option<usize>,
    hp: Hp,
}

impl Series {
    pub fn new(factors: Vec<Factor>, hp: Hp) -> Self {
        let degree = factors
            .iter()
            .try_fold(0usize, |acc, f| f.degree().map(|d| acc + d));
        let n = factors.len();
        Self {
            factors,
            own: (0..n).map(|_| Vec::new()).collect(),
            prod: (0..n).map(|_| Vec::new()).collect(),
            prod_abs: (0..n).map(|_| Vec::new()).collect(),
            degree,
            hp,
        }
    }

    pub fn degree(&self) -> Option<usize> {
        self.degree
    }

    fn extend_own(&mut self, j: usize, len: usize) {
        let f = self.factors[j];
        let len = match f.degree() {
            Some(d) => len.min(d + 1),
            None => len,
        };
        let hp = self.hp;
        let own = &mut self.own[j];
        if own.is_empty() && len > 0 {
            own.push(Big::ONE);
        }
        while own.len() < len {
            let k = own.len() as i64;
            let prev = &own[own.len() - 1];
            let next = match f {
                Factor::Exp(a) => hp.div(&hp.mul(prev, &Hp::from_f64(a)), &Hp::from_i64(k)),
                Factor::Binomial { gamma, power } => {
                    let t = hp.mul(prev, &Hp::from_f64(gamma));
                    hp.div(&hp.mul(&t, &Hp::from_i64(power - k + 1)), &Hp::from_i64(k))
                }
            };
            own.push(next);
        }
    }

    /// Makes coefficients `0..len` available.
    pub fn ensure(&mut self, len: usize) {
        let n = self.factors.len();
        let len = match self.degree {
            Some(d) => len.min(d + 1),
            None => len,
        };
        for j in (0..n).rev() {
            self.extend_own(j, len);
            let have = self.prod[j].len();
            if have >= len {
                continue;
            }
            let own_deg = self.own[j].len();
            if j + 1 == n {
                // Extend to the factor's own support only.
                let top = len.min(own_deg);
                for k in have..top {
                    let v = self.own[j][k].clone();
                    self.prod_abs[j].push(hp::abs(&v));
                    self.prod[j].push(v);
                }
                continue;
            }
            let (head, tail) = self.prod.split_at_mut(j + 1);
            let (head_abs, tail_abs) = self.prod_abs.split_at_mut(j + 1);
            let rest = &tail[0];
            let rest_abs = &tail_abs[0];
            let own = &self.own[j];
            let mut top = len;
            if let (Some(d1), true) = (self.factors[j].degree(), rest.len() < len) {
                // The rest is a polynomial exhausted at rest.len().
                top = top.min(d1 + rest.len());
            }
            for k in have..top {
                let mut acc = Big::ZERO;
                let mut acc_abs = Big::ZERO;
                let i_lo = k.saturating_sub(rest.len().saturating_sub(1));
                let i_hi = k.min(own.len().saturating_sub(1));
                for i in i_lo..=i_hi {
                    if k - i >= rest.len() {
                        continue;
                    }
                    acc = self.hp.fma(&acc, &own[i], &rest[k - i]);
                    acc_abs = self.hp.abs_fma(&acc_abs, &own[i], &rest_abs[k - i]);
                }
                head[j].push(acc);
                head_abs[j].push(acc_abs);
            }
        }
    }

    /// Coefficient and its absolute majorant; zeros past the support.
    pub fn get(&mut self, k: usize) -> (Big, Big) {
        if self.factors.is_empty() {
            return if k == 0 { (Big::ONE, Big::ONE) } else { (Big::ZERO, Big::ZERO) };
        }
        self.ensure(k + 1);
        match self.prod[0].get(k) {
            Some(v) => (v.clone(), self.prod_abs[0][k].clone()),
            None => (Big::ZERO, Big::ZERO),
        }
    }

    fn get_ref(&mut self, k: usize) -> Option<(&Big, &Big)> {
        if self.factors.is_empty() {
            return None;
        }
        self.ensure(k + 1);
        let v = self.prod[0].get(k)?;
        Some((v, &self.prod_abs[0][k]))
    }
}

/// One Laurent coefficient with its bookkeeping.
pub(crate) struct HpCoeff {
    pub value: Big,
    /// Sum of absolute values of the contributing products.
    pub abs: Big,
    /// `log2` of the estimated truncation tail, `-inf` for exact sums.
    pub tail_log2: f64,
}

impl HpCoeff {
    /// Bits lost to cancellation relative to `floor_log2`.
    pub fn lost_bits(&self, floor_log2: f64) -> f64 {
        let a = hp::log2_abs(&self.abs);
        if a == f64::NEG_INFINITY {
            return 0.0;
        }
        (a - hp::log2_abs(&self.value).max(floor_log2)).max(0.0)
    }
}

/// Coefficients of `P(z) M(1/z)` where `P` and `M` are power series.
pub(crate) struct Laurent {
    pub plus: Series,
    pub minus: Series,
    hp: Hp,
}

const MAX_TERMS: usize = 2_000_000;
const CHUNK: usize = 64;

impl Laurent {
    pub fn new(plus: Vec<Factor>, minus: Vec<Factor>, hp: Hp) -> Self {
        Self { plus: Series::new(plus, hp), minus: Series::new(minus, hp), hp }
    }

    /// Coefficient of `z^k`: `sum_q P_{k+q} M_q` over `q >= max(0, -k)`.
    pub fn coeff(&mut self, k: i64) -> Result<HpCoeff> {
        let q0 = if k < 0 { (-k) as usize } else { 0 };
        let mut q_end: Option<usize> = self.minus.degree();
        if let Some(dp) = self.plus.degree() {
            let lim = dp as i64 - k;
            if lim < 0 {
                return Ok(HpCoeff { value: Big::ZERO, abs: Big::ZERO, tail_log2: f64::NEG_INFINITY });
            }
            q_end = Some(q_end.map_or(lim as usize, |e| e.min(lim as usize)));
        }
        let hp = self.hp;
        let mut value = Big::ZERO;
        let mut abs = Big::ZERO;
        if let Some(end) = q_end {
            if end < q0 {
                return Ok(HpCoeff { value, abs, tail_log2: f64::NEG_INFINITY });
            }
            self.plus.ensure((k + end as i64) as usize + 1);
            self.minus.ensure(end + 1);
            for q in q0..=end {
                let p_idx = (k + q as i64) as usize;
                let Some((p, pa)) = self.plus.get_ref(p_idx).map(|(a, b)| (a.clone(), b.clone())) else {
                    continue;
                };
                let Some((m, ma)) = self.minus.get_ref(q) else { continue };
                value = hp.fma(&value, &p, m);
                abs = hp.abs_fma(&abs, &pa, ma);
            }
            return Ok(HpCoeff { value, abs, tail_log2: f64::NEG_INFINITY });
        }
        // Infinite sum: stop once the terms decay geometrically below the
        // working precision relative to the largest term.
        let margin = hp.bits() as f64 + 16.0;
        let mut max_log2 = f64::NEG_INFINITY;
        let mut prev_log2 = f64::INFINITY;
        let mut run = 0usize;
        let mut q = q0;
        loop {
            if q - q0 > MAX_TERMS {
                return Err(Error::Convergence {
                    what: "Laurent coefficient series",
                    estimate: f64::INFINITY,
                    tolerance: 0.0,
                });
            }
            let p_idx = (k + q as i64) as usize;
            self.plus.ensure(p_idx + CHUNK);
            self.minus.ensure(q + CHUNK);
            let (p, pa) = self.plus.get(p_idx);
            let (m, ma) = self.minus.get(q);
            let term_abs = hp.abs_fma(&Big::ZERO, &pa, &ma);
            let t_log2 = hp::log2_abs(&term_abs);
            value = hp.fma(&value, &p, &m);
            abs = hp.abs_fma(&abs, &pa, &ma);
            max_log2 = max_log2.max(t_log2);
            if t_log2 < prev_log2 && t_log2 < max_log2 - margin {
                run += 1;
            } else {
                run = 0;
            }
            if run >= 8 {
                let ratio = if prev_log2.is_finite() && t_log2.is_finite() {
                    (t_log2 - prev_log2).exp2().min(0.999)
                } else {
                    0.0
                };
                let tail_log2 = if ratio == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    t_log2 + (ratio / (1.0 - ratio)).log2()
                };
                return Ok(HpCoeff { value, abs, tail_log2 });
            }
            prev_log2 = t_log2;
            q += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(x: &Big) -> f64 {
        hp::to_f64(x)
    }

    #[test]
    fn binomial_series() {
        let mut s = Series::new(alloc::vec![Factor::Binomial { gamma: 1.0, power: 4 }], Hp::new(128));
        let got: Vec<f64> = (0..7).map(|k| f(&s.get(k).0)).collect();
        assert_eq!(got, [1.0, 4.0, 6.0, 4.0, 1.0, 0.0, 0.0]);
        let mut s = Series::new(alloc::vec![Factor::Binomial { gamma: -0.5, power: -2 }], Hp::new(128));
        // (1 - w/2)^-2 = sum (k+1) (w/2)^k
        for k in 0..10 {
            assert!((f(&s.get(k).0) - (k as f64 + 1.0) * 0.5f64.powi(k as i32)).abs() < 1e-15);
        }
    }

    #[test]
    fn product_of_factors() {
        // (1+w)^2 (1-w)^-1 = 1 + 3w + 4w^2 + 4w^3 + ...
        let mut s = Series::new(
            alloc::vec![
                Factor::Binomial { gamma: 1.0, power: 2 },
                Factor::Binomial { gamma: -1.0, power: -1 }
            ],
            Hp::new(128),
        );
        let got: Vec<f64> = (0..6).map(|k| f(&s.get(k).0)).collect();
        assert_eq!(got, [1.0, 3.0, 4.0, 4.0, 4.0, 4.0]);
        // (1+w)(1+2w) has degree 2.
        let mut s = Series::new(
            alloc::vec![
                Factor::Binomial { gamma: 1.0, power: 1 },
                Factor::Binomial { gamma: 2.0, power: 1 }
            ],
            Hp::new(128),
        );
        let got: Vec<f64> = (0..5).map(|k| f(&s.get(k).0)).collect();
        assert_eq!(got, [1.0, 3.0, 2.0, 0.0, 0.0]);
        // abs majorant of (1+w)(1-w) = 1 - w^2 counts both products at w^1.
        let mut s = Series::new(
            alloc::vec![
                Factor::Binomial { gamma: 1.0, power: 1 },
                Factor::Binomial { gamma: -1.0, power: 1 }
            ],
            Hp::new(128),
        );
        let (v, a) = s.get(1);
        assert_eq!((f(&v), f(&a)), (0.0, 2.0));
    }

    #[test]
    fn exponential_series() {
        let mut s = Series::new(alloc::vec![Factor::Exp(2.0)], Hp::new(128));
        let mut fact = 1.0;
        for k in 0..15 {
            if k > 0 {
                fact *= k as f64;
            }
            assert!((f(&s.get(k).0) - 2f64.powi(k as i32) / fact).abs() < 1e-12);
        }
    }

    #[test]
    fn laurent_polynomial_and_series() {
        // (1+z)^2 (1 - 1/(2z)): coefficient of z^0 is 1 - 1 = 0.
        let mut l = Laurent::new(
            alloc::vec![Factor::Binomial { gamma: 1.0, power: 2 }],
            alloc::vec![Factor::Binomial { gamma: -0.5, power: 1 }],
            Hp::new(128),
        );
        assert_eq!(f(&l.coeff(0).unwrap().value), 0.0);
        assert_eq!(f(&l.coeff(2).unwrap().value), 1.0);
        assert_eq!(f(&l.coeff(-1).unwrap().value), -0.5);
        assert_eq!(f(&l.coeff(-2).unwrap().value), 0.0);
        assert_eq!(f(&l.coeff(3).unwrap().value), 0.0);
        // 1/((1-z/2)(1-1/(3z))): coefficient of z^0 is sum (1/6)^q = 6/5.
        let mut l = Laurent::new(
            alloc::vec![Factor::Binomial { gamma: -0.5, power: -1 }],
            alloc::vec![Factor::Binomial { gamma: -1.0 / 3.0, power: -1 }],
            Hp::new(128),
        );
        let c = l.coeff(0).unwrap();
        assert!((f(&c.value) - 1.2).abs() < 1e-15);
        assert!(c.tail_log2 < -100.0);
        let c = l.coeff(-2).unwrap();
        assert!((f(&c.value) - 1.2 / 9.0).abs() < 1e-15);
    }
}
