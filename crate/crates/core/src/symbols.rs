//! Wiener-Hopf symbol pairs and the Laurent coefficients of their ratios.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::hp::{self};
use crate::series::{self, Factor, Laurent};
use crate::specfun;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Family {
    Exponential,
    Growth,
    Johansson,
    ConjectureProduct,
}

/// Raw family parameters, validated by [`SymbolSpec::new`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "snake_case"))]
pub enum FamilyParams {
    /// `phi+ = exp(-t z)`, `phi- = exp(-t / z)`.
    Exponential { t: f64 },
    /// `phi+ = (1 + z)^n`, `phi- = (1 - r / z)^-m`.
    Growth { n: u32, m: u32, r: f64 },
    /// `phi+ = (1 + t z)^m`, `phi- = (1 + t / z)^n`.
    Johansson { m: u32, n: u32, t: f64 },
    /// `phi+ = prod (1 + r_i z)`, `phi- = prod (1 - s_j / z)^-1`.
    ConjectureProduct { rs: Vec<f64>, ss: Vec<f64> },
}

/// A validated symbol pair whose ratios are analytic on a common annulus.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "FamilyParams", into = "FamilyParams"))]
pub struct SymbolSpec {
    params: FamilyParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Ratio {
    /// `phi- / phi+`
    MinusOverPlus,
    /// `phi+ / phi-`
    PlusOverMinus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum CoeffMethod {
    ClosedForm,
    SeriesConvolution,
    CircleQuadrature,
}

/// Coefficients of one ratio on `index_lo..=index_hi`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoeffTable {
    pub ratio: Ratio,
    pub index_lo: i64,
    pub index_hi: i64,
    pub values: Vec<f64>,
    /// Estimated absolute truncation error of any entry.
    pub tail_bound: f64,
    pub method: CoeffMethod,
}

impl CoeffTable {
    pub fn get(&self, k: i64) -> Option<f64> {
        if k < self.index_lo || k > self.index_hi {
            return None;
        }
        self.values.get((k - self.index_lo) as usize).copied()
    }

    pub fn indices(&self) -> core::ops::RangeInclusive<i64> {
        self.index_lo..=self.index_hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoeffOptions {
    /// `None` picks the closed form when one exists, else series convolution.
    pub method: Option<CoeffMethod>,
    /// Allowed tail bound relative to `max(1, max |coefficient|)`.
    pub tol: f64,
}

impl Default for CoeffOptions {
    fn default() -> Self {
        Self { method: None, tol: 1e-13 }
    }
}

fn check(ok: bool, msg: impl FnOnce() -> alloc::string::String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}

impl SymbolSpec {
    pub fn new(params: FamilyParams) -> Result<Self> {
        match &params {
            FamilyParams::Exponential { t } => {
                check(t.is_finite() && *t >= 0.0, || format!("t must be finite and >= 0, got {t}"))?;
            }
            FamilyParams::Growth { n, m, r } => {
                check(*n >= 1 && *m >= 1, || format!("n and m must be positive, got n={n} m={m}"))?;
                check(r.is_finite() && *r >= 0.0, || format!("r must be >= 0, got {r}"))?;
                if *r >= 1.0 {
                    return Err(Error::NoAnnulus { inner: *r, outer: 1.0 });
                }
            }
            FamilyParams::Johansson { m, n, t } => {
                check(*m >= 1 && *n >= 1, || format!("m and n must be positive, got m={m} n={n}"))?;
                check(t.is_finite() && *t >= 0.0, || format!("t must be finite and >= 0, got {t}"))?;
                if *t >= 1.0 {
                    return Err(Error::NoAnnulus { inner: *t, outer: 1.0 / *t });
                }
            }
            FamilyParams::ConjectureProduct { rs, ss } => {
                check(rs.iter().all(|r| r.is_finite() && *r >= 0.0), || format!("every r_i must be >= 0, got {rs:?}"))?;
                check(ss.iter().all(|s| s.is_finite() && *s >= 0.0), || format!("every s_j must be >= 0, got {ss:?}"))?;
                check(ss.iter().all(|s| *s < 1.0), || format!("every s_j must be < 1, got {ss:?}"))?;
            }
        }
        let spec = Self { params };
        let (inner, outer) = spec.annulus();
        if inner >= outer {
            return Err(Error::NoAnnulus { inner, outer });
        }
        Ok(spec)
    }

    pub fn exponential(t: f64) -> Result<Self> {
        Self::new(FamilyParams::Exponential { t })
    }

    pub fn growth(n: u32, m: u32, r: f64) -> Result<Self> {
        Self::new(FamilyParams::Growth { n, m, r })
    }

    pub fn johansson(m: u32, n: u32, t: f64) -> Result<Self> {
        Self::new(FamilyParams::Johansson { m, n, t })
    }

    pub fn conjecture(rs: Vec<f64>, ss: Vec<f64>) -> Result<Self> {
        Self::new(FamilyParams::ConjectureProduct { rs, ss })
    }

    pub fn family(&self) -> Family {
        match self.params {
            FamilyParams::Exponential { .. } => Family::Exponential,
            FamilyParams::Growth { .. } => Family::Growth,
            FamilyParams::Johansson { .. } => Family::Johansson,
            FamilyParams::ConjectureProduct { .. } => Family::ConjectureProduct,
        }
    }

    pub fn params(&self) -> &FamilyParams {
        &self.params
    }

    /// Factors of `phi+` as a series in `z`.
    pub(crate) fn plus_factors(&self) -> Vec<Factor> {
        match &self.params {
            FamilyParams::Exponential { t } => vec![Factor::Exp(-t)],
            FamilyParams::Growth { n, .. } => vec![Factor::Binomial { gamma: 1.0, power: *n as i64 }],
            FamilyParams::Johansson { m, t, .. } => vec![Factor::Binomial { gamma: *t, power: *m as i64 }],
            FamilyParams::ConjectureProduct { rs, .. } => {
                rs.iter().map(|&r| Factor::Binomial { gamma: r, power: 1 }).collect()
            }
        }
    }

    /// Factors of `phi-` as a series in `w = 1/z`.
    pub(crate) fn minus_factors(&self) -> Vec<Factor> {
        match &self.params {
            FamilyParams::Exponential { t } => vec![Factor::Exp(-t)],
            FamilyParams::Growth { m, r, .. } => vec![Factor::Binomial { gamma: -r, power: -(*m as i64) }],
            FamilyParams::Johansson { n, t, .. } => vec![Factor::Binomial { gamma: *t, power: *n as i64 }],
            FamilyParams::ConjectureProduct { ss, .. } => {
                ss.iter().map(|&s| Factor::Binomial { gamma: -s, power: -1 }).collect()
            }
        }
    }

    /// Open annulus `inner < |z| < outer` on which both ratios are analytic.
    pub fn annulus(&self) -> (f64, f64) {
        let inner = self
            .minus_factors()
            .into_iter()
            .filter_map(|f| match f {
                Factor::Binomial { gamma, power } if power != 0 => Some(gamma.abs()),
                _ => None,
            })
            .fold(0.0, f64::max);
        let outer = self
            .plus_factors()
            .into_iter()
            .filter_map(|f| match f {
                Factor::Binomial { gamma, power } if power != 0 && gamma != 0.0 => Some(1.0 / gamma.abs()),
                _ => None,
            })
            .fold(f64::INFINITY, f64::min);
        (inner, outer)
    }

    fn ratio_factors(&self, ratio: Ratio) -> (Vec<Factor>, Vec<Factor>) {
        let (p, m) = (self.plus_factors(), self.minus_factors());
        match ratio {
            Ratio::MinusOverPlus => (p.into_iter().map(Factor::inverse).collect(), m),
            Ratio::PlusOverMinus => (p, m.into_iter().map(Factor::inverse).collect()),
        }
    }

    pub(crate) fn laurent(&self, ratio: Ratio, hp: hp::Hp) -> Laurent {
        let (p, m) = self.ratio_factors(ratio);
        Laurent::new(p, m, hp)
    }

    /// Lowest power of `z` in the ratio when it is bounded below.
    pub fn lowest_power(&self, ratio: Ratio) -> Option<i64> {
        let (_, m) = self.ratio_factors(ratio);
        m.iter()
            .try_fold(0usize, |acc, f| f.degree().map(|d| acc + d))
            .map(|d| -(d as i64))
    }

    /// Highest power of `z` in the ratio when it is bounded above.
    pub fn highest_power(&self, ratio: Ratio) -> Option<i64> {
        let (p, _) = self.ratio_factors(ratio);
        p.iter()
            .try_fold(0usize, |acc, f| f.degree().map(|d| acc + d))
            .map(|d| d as i64)
    }

    /// The ratio evaluated at a point of the annulus.
    pub fn ratio_at(&self, ratio: Ratio, z: Complex64) -> Complex64 {
        let (p, m) = self.ratio_factors(ratio);
        let w = z.inv();
        let mut v = Complex64::new(1.0, 0.0);
        for f in p {
            v *= f.eval(z);
        }
        for f in m {
            v *= f.eval(w);
        }
        v
    }
}

impl TryFrom<FamilyParams> for SymbolSpec {
    type Error = Error;
    fn try_from(p: FamilyParams) -> Result<Self> {
        Self::new(p)
    }
}

impl From<SymbolSpec> for FamilyParams {
    fn from(s: SymbolSpec) -> Self {
        s.params
    }
}

/// Validates parameters into a [`SymbolSpec`].
pub fn make_symbol(params: FamilyParams) -> Result<SymbolSpec> {
    SymbolSpec::new(params)
}

pub fn laurent_coeffs(sym: &SymbolSpec, ratio: Ratio, index_lo: i64, index_hi: i64) -> Result<CoeffTable> {
    laurent_coeffs_with(sym, ratio, index_lo, index_hi, &CoeffOptions::default())
}

const MAX_WINDOW: i64 = 10_000_000;

pub fn laurent_coeffs_with(
    sym: &SymbolSpec,
    ratio: Ratio,
    index_lo: i64,
    index_hi: i64,
    opts: &CoeffOptions,
) -> Result<CoeffTable> {
    if index_lo > index_hi {
        return Err(Error::InvalidParameter(format!("empty window {index_lo}..={index_hi}")));
    }
    if index_hi - index_lo > MAX_WINDOW {
        return Err(Error::InvalidParameter(format!("window wider than {MAX_WINDOW}")));
    }
    let method = opts.method.unwrap_or(match sym.family() {
        Family::Exponential => CoeffMethod::ClosedForm,
        _ => CoeffMethod::SeriesConvolution,
    });
    let (values, tail_bound) = match method {
        CoeffMethod::ClosedForm => closed_form(sym, ratio, index_lo, index_hi)?,
        CoeffMethod::SeriesConvolution => series_coeffs(sym, ratio, index_lo, index_hi)?,
        CoeffMethod::CircleQuadrature => circle_coeffs(sym, ratio, index_lo, index_hi, opts.tol)?,
    };
    let scale = values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    if !(tail_bound <= opts.tol * scale) {
        return Err(Error::Convergence {
            what: "Laurent coefficients",
            estimate: tail_bound,
            tolerance: opts.tol * scale,
        });
    }
    Ok(CoeffTable { ratio, index_lo, index_hi, values, tail_bound, method })
}

fn closed_form(sym: &SymbolSpec, ratio: Ratio, lo: i64, hi: i64) -> Result<(Vec<f64>, f64)> {
    let FamilyParams::Exponential { t } = sym.params else {
        return Err(Error::InvalidParameter(format!(
            "no closed form for the {:?} family",
            sym.family()
        )));
    };
    let top = lo.unsigned_abs().max(hi.unsigned_abs()) as usize;
    let j = specfun::bessel_j_seq(top, 2.0 * t);
    let values = (lo..=hi)
        .map(|k| {
            // The minus-over-plus ratio is exp(t (z - 1/z)), whose coefficients are J_k(2t).
            let k = match ratio {
                Ratio::MinusOverPlus => k,
                Ratio::PlusOverMinus => -k,
            };
            let v = j[k.unsigned_abs() as usize];
            if k < 0 && k % 2 != 0 {
                -v
            } else {
                v
            }
        })
        .collect();
    Ok((values, 0.0))
}

fn series_coeffs(sym: &SymbolSpec, ratio: Ratio, lo: i64, hi: i64) -> Result<(Vec<f64>, f64)> {
    series::adaptive(|hp| {
        let mut l = sym.laurent(ratio, hp);
        let coeffs = (lo..=hi).map(|k| l.coeff(k)).collect::<Result<Vec<_>>>()?;
        let top = coeffs
            .iter()
            .map(|c| hp::log2_abs(&c.value))
            .fold(f64::NEG_INFINITY, f64::max);
        let lost = coeffs
            .iter()
            .map(|c| c.lost_bits(top - 60.0))
            .fold(0.0, f64::max);
        let tail = coeffs.iter().map(|c| c.tail_log2).fold(f64::NEG_INFINITY, f64::max);
        let values = coeffs.iter().map(|c| hp::to_f64(&c.value)).collect();
        Ok(((values, tail.exp2()), lost))
    })
}

/// A radius inside the annulus, the geometric mean of its (finite) edges.
pub(crate) fn quadrature_radius(sym: &SymbolSpec) -> f64 {
    let (inner, outer) = sym.annulus();
    let a = if inner > 0.0 { inner } else { 0.25 * outer.min(1.0) };
    let b = if outer.is_finite() { outer } else { 4.0 * inner.max(1.0) };
    (a * b).sqrt()
}

const MAX_CIRCLE_NODES: usize = 1 << 20;

fn circle_coeffs(sym: &SymbolSpec, ratio: Ratio, lo: i64, hi: i64, tol: f64) -> Result<(Vec<f64>, f64)> {
    let rho = quadrature_radius(sym);
    let reach = lo.unsigned_abs().max(hi.unsigned_abs()) as usize;
    let mut nodes = (4 * reach + 64).next_power_of_two();
    let mut prev: Option<Vec<f64>> = None;
    loop {
        let vals: Vec<Complex64> = (0..nodes)
            .map(|j| {
                let z = Complex64::from_polar(rho, 2.0 * PI * j as f64 / nodes as f64);
                sym.ratio_at(ratio, z)
            })
            .collect();
        let coeffs: Vec<f64> = (lo..=hi)
            .map(|k| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, v) in vals.iter().enumerate() {
                    let theta = -2.0 * PI * ((k * j as i64).rem_euclid(nodes as i64)) as f64 / nodes as f64;
                    acc += v * Complex64::from_polar(1.0, theta);
                }
                (acc / nodes as f64).re * rho.powi(-(k as i32))
            })
            .collect();
        if let Some(p) = &prev {
            let delta = p.iter().zip(&coeffs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let scale = coeffs.iter().fold(1.0f64, |a, v| a.max(v.abs()));
            if delta <= tol * scale || nodes >= MAX_CIRCLE_NODES {
                return Ok((coeffs, delta));
            }
        }
        prev = Some(coeffs);
        nodes *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(SymbolSpec::exponential(0.0).is_ok());
        assert!(SymbolSpec::exponential(-1.0).is_err());
        assert!(matches!(SymbolSpec::growth(4, 4, 1.2), Err(Error::NoAnnulus { .. })));
        assert!(SymbolSpec::growth(0, 4, 0.2).is_err());
        assert!(SymbolSpec::conjecture(vec![1.0, 0.5], vec![0.3]).is_ok());
        assert!(SymbolSpec::conjecture(vec![-1.0], vec![0.3]).is_err());
        assert!(SymbolSpec::conjecture(vec![1.0], vec![1.0]).is_err());
        assert!(matches!(SymbolSpec::conjecture(vec![5.0], vec![0.5]), Err(Error::NoAnnulus { .. })));
        assert!(matches!(SymbolSpec::johansson(3, 3, 1.0), Err(Error::NoAnnulus { .. })));
        assert_eq!(SymbolSpec::growth(2, 3, 0.4).unwrap().annulus(), (0.4, 1.0));
    }

    #[test]
    fn exponential_zero_is_impulse() {
        let s = SymbolSpec::exponential(0.0).unwrap();
        for ratio in [Ratio::MinusOverPlus, Ratio::PlusOverMinus] {
            for method in [CoeffMethod::ClosedForm, CoeffMethod::SeriesConvolution] {
                let opts = CoeffOptions { method: Some(method), ..Default::default() };
                let c = laurent_coeffs_with(&s, ratio, -5, 5, &opts).unwrap();
                for k in -5..=5 {
                    assert_eq!(c.get(k).unwrap(), if k == 0 { 1.0 } else { 0.0 });
                }
            }
        }
    }

    #[test]
    fn spec_examples() {
        let s = SymbolSpec::exponential(1.0).unwrap();
        let c = laurent_coeffs(&s, Ratio::MinusOverPlus, 1, 1).unwrap();
        assert!((c.values[0] - 0.576_724_807_8).abs() < 1e-10);
        assert_eq!(c.method, CoeffMethod::ClosedForm);
        let g = SymbolSpec::growth(2, 1, 0.5).unwrap();
        let c = laurent_coeffs(&g, Ratio::PlusOverMinus, -2, 3).unwrap();
        // (1+z)^2 (1 - 1/(2z)) = -1/(2z) + 0 + (3/2) z + z^2
        assert_eq!(c.values, vec![0.0, -0.5, 0.0, 1.5, 1.0, 0.0]);
        assert_eq!(c.tail_bound, 0.0);
        let g0 = SymbolSpec::growth(3, 2, 0.0).unwrap();
        let c = laurent_coeffs(&g0, Ratio::MinusOverPlus, -6, -1).unwrap();
        assert!(c.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn exponential_series_matches_closed_form() {
        let s = SymbolSpec::exponential(3.5).unwrap();
        for ratio in [Ratio::MinusOverPlus, Ratio::PlusOverMinus] {
            let a = laurent_coeffs(&s, ratio, -20, 20).unwrap();
            let opts = CoeffOptions { method: Some(CoeffMethod::SeriesConvolution), ..Default::default() };
            let b = laurent_coeffs_with(&s, ratio, -20, 20, &opts).unwrap();
            for (x, y) in a.values.iter().zip(&b.values) {
                assert!((x - y).abs() < 1e-13, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn circle_matches_series() {
        let syms = [
            SymbolSpec::growth(5, 4, 0.3).unwrap(),
            SymbolSpec::johansson(3, 4, 0.4).unwrap(),
            SymbolSpec::conjecture(vec![0.8, 0.3], vec![0.5, 0.2]).unwrap(),
            SymbolSpec::exponential(2.0).unwrap(),
        ];
        for s in &syms {
            for ratio in [Ratio::MinusOverPlus, Ratio::PlusOverMinus] {
                let opts = CoeffOptions { method: Some(CoeffMethod::SeriesConvolution), ..Default::default() };
                let a = laurent_coeffs_with(s, ratio, -12, 12, &opts).unwrap();
                let opts = CoeffOptions { method: Some(CoeffMethod::CircleQuadrature), tol: 1e-12 };
                let b = laurent_coeffs_with(s, ratio, -12, 12, &opts).unwrap();
                for (k, (x, y)) in a.indices().zip(a.values.iter().zip(&b.values)) {
                    assert!((x - y).abs() < 1e-10, "{:?} {ratio:?} k={k}: {x} vs {y}", s.family());
                }
            }
        }
    }

    #[test]
    fn growth_coefficients_cancel_correctly() {
        // A reference value of the coefficient of z^30 in (1 - 0.3/z)^-40 (1+z)^-40,
        // from an exact rational evaluation.
        let g = SymbolSpec::growth(40, 40, 0.3).unwrap();
        let c = laurent_coeffs(&g, Ratio::MinusOverPlus, 30, 30).unwrap();
        let want = GROWTH_40_40_COEFF_30;
        assert!(((c.values[0] - want) / want).abs() < 1e-12, "{}", c.values[0]);
    }

    const GROWTH_40_40_COEFF_30: f64 = 102_493_385.950_436_07;
}
