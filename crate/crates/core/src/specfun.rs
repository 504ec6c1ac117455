//! Bessel functions of integer order, the Airy function and the map used
//! by the uniform Bessel asymptotics.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_4, PI};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::quad;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum BesselMethod {
    MillerRecurrence,
    PowerSeries,
}

/// One evaluation of `J_k(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BesselEval {
    pub order: u32,
    pub argument: f64,
    pub value: f64,
    pub method: BesselMethod,
    /// The value is zero only because it is below the double-precision range.
    pub underflow: bool,
}

const SERIES_MAX_ARG: f64 = 8.0;
const SERIES_MAX_ORDER: u32 = 30;
const RESCALE_AT: f64 = 1e250;

fn bessel_series(k: u32, x: f64) -> f64 {
    let h = 0.5 * x;
    let mut term = 1.0;
    for i in 1..=k {
        term *= h / i as f64;
    }
    let mut sum = term;
    let q = h * h;
    for m in 1..400u32 {
        term *= -q / (m as f64 * (m + k) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() && m as f64 > h {
            break;
        }
    }
    sum
}

/// Starting order for the backward recurrence. The additive `x^(1/3)` term
/// covers the transition region when `x` is large and the order is small.
fn miller_start(kmax: usize, x: f64) -> usize {
    let base = kmax.max(x.ceil() as usize);
    let s = base + 40 + (15.0 * x.cbrt()).ceil() as usize;
    s + (s & 1)
}

/// `J_0(x), ..., J_kmax(x)` for `x >= 0` by Miller's backward recurrence,
/// normalized with `J_0 + 2 sum J_2j = 1`.
pub fn bessel_j_seq(kmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let start = miller_start(kmax, x);
    // scale_at_store[k] counts rescalings applied before out[k] was stored.
    let mut scale_at_store = vec![0u32; kmax + 1];
    let mut rescales = 0u32;
    let mut next = 0.0;
    let mut cur = 1e-30;
    let mut sum = 0.0;
    for k in (1..=start).rev() {
        if k <= kmax {
            out[k] = cur;
            scale_at_store[k] = rescales;
        }
        if k % 2 == 0 {
            sum += 2.0 * cur;
        }
        let prev = (2.0 * k as f64 / x) * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > RESCALE_AT {
            cur /= RESCALE_AT;
            next /= RESCALE_AT;
            sum /= RESCALE_AT;
            rescales += 1;
        }
    }
    out[0] = cur;
    scale_at_store[0] = rescales;
    sum += cur;
    for (v, &s) in out.iter_mut().zip(&scale_at_store) {
        let mut val = *v / sum;
        for _ in s..rescales {
            if val == 0.0 {
                break;
            }
            val /= RESCALE_AT;
        }
        *v = val;
    }
    out
}

/// `J_k(x)` with its evaluation metadata. Negative `x` uses `J_k(-x) = (-1)^k J_k(x)`.
pub fn bessel_j_eval(k: u32, x: f64) -> BesselEval {
    let sign = if x < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
    let ax = x.abs();
    let (value, method) = if ax == 0.0 {
        (if k == 0 { 1.0 } else { 0.0 }, BesselMethod::PowerSeries)
    } else if ax <= SERIES_MAX_ARG && k <= SERIES_MAX_ORDER {
        (bessel_series(k, ax), BesselMethod::PowerSeries)
    } else {
        (bessel_j_seq(k as usize, ax)[k as usize], BesselMethod::MillerRecurrence)
    };
    BesselEval {
        order: k,
        argument: x,
        value: sign * value,
        method,
        underflow: value == 0.0 && ax > 0.0,
    }
}

pub fn bessel_j(k: u32, x: f64) -> f64 {
    bessel_j_eval(k, x).value
}

/// `J_k(x)` for any integer order, using `J_{-k} = (-1)^k J_k`.
pub fn bessel_j_int(k: i64, x: f64) -> f64 {
    let v = bessel_j(k.unsigned_abs() as u32, x);
    if k < 0 && k % 2 != 0 {
        -v
    } else {
        v
    }
}

const AI0: f64 = 0.355_028_053_887_817_24;
const AIP0: f64 = 0.258_819_403_792_806_8;
const AIRY_SERIES_LO: f64 = -8.0;
const AIRY_SERIES_HI: f64 = 6.0;

fn airy_maclaurin(x: f64) -> (f64, f64) {
    let x3 = x * x * x;
    let (mut f, mut g) = (1.0, x);
    let (mut a, mut b) = (1.0, x);
    let (mut fp, mut gp) = (0.0, 1.0);
    let (mut d, mut e) = (0.5 * x * x, 1.0);
    fp += d;
    for k in 0..200 {
        let kf = k as f64;
        a *= x3 / ((3.0 * kf + 2.0) * (3.0 * kf + 3.0));
        b *= x3 / ((3.0 * kf + 3.0) * (3.0 * kf + 4.0));
        f += a;
        g += b;
        d *= x3 / ((3.0 * kf + 3.0) * (3.0 * kf + 5.0));
        e *= x3 / ((3.0 * kf + 1.0) * (3.0 * kf + 3.0));
        fp += d;
        gp += e;
        let tiny = 1e-18 * (1.0 + f.abs() + g.abs() + fp.abs() + gp.abs());
        if a.abs() + b.abs() + d.abs() + e.abs() < tiny {
            break;
        }
    }
    (AI0 * f - AIP0 * g, AI0 * fp - AIP0 * gp)
}

/// Coefficients `u_k` and `v_k` of the Airy asymptotic expansions.
fn airy_asymptotic_coeffs(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut u = vec![1.0; n];
    let mut v = vec![1.0; n];
    for k in 1..n {
        let kf = k as f64;
        u[k] = u[k - 1] * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0)
            / ((2.0 * kf - 1.0) * 216.0 * kf);
        v[k] = -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * u[k];
    }
    (u, v)
}

/// Sums `sum_k sign_k c_k / zeta^k` over the given indices, stopping at the
/// smallest term.
fn asymptotic_sum(c: &[f64], zeta: f64, indices: impl Iterator<Item = usize>, alternate: bool) -> f64 {
    let mut sum = 0.0;
    let mut last = f64::INFINITY;
    for (j, k) in indices.enumerate() {
        if k >= c.len() {
            break;
        }
        let sign = if alternate && j % 2 == 1 { -1.0 } else { 1.0 };
        let term = sign * c[k] / zeta.powi(k as i32);
        if term.abs() > last {
            break;
        }
        sum += term;
        last = term.abs();
        if last < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn airy_asymptotic(x: f64) -> (f64, f64) {
    let (u, v) = airy_asymptotic_coeffs(40);
    let sqrt_pi = PI.sqrt();
    if x > 0.0 {
        let zeta = 2.0 / 3.0 * x.powf(1.5);
        let su = asymptotic_sum(&u, -zeta, 0..40, false);
        let sv = asymptotic_sum(&v, -zeta, 0..40, false);
        let e = (-zeta).exp() / (2.0 * sqrt_pi);
        (e * su / x.powf(0.25), -e * sv * x.powf(0.25))
    } else {
        let z = -x;
        let zeta = 2.0 / 3.0 * z.powf(1.5);
        let p = asymptotic_sum(&u, zeta, (0..40).step_by(2), true);
        let q = asymptotic_sum(&u, zeta, (1..40).step_by(2), true);
        let r = asymptotic_sum(&v, zeta, (0..40).step_by(2), true);
        let s = asymptotic_sum(&v, zeta, (1..40).step_by(2), true);
        let (sn, cs) = (zeta + FRAC_PI_4).sin_cos();
        let ai = (sn * p - cs * q) / (sqrt_pi * z.powf(0.25));
        let aip = -z.powf(0.25) * (cs * r + sn * s) / sqrt_pi;
        (ai, aip)
    }
}

/// `(Ai(x), Ai'(x))`.
pub fn airy_pair(x: f64) -> (f64, f64) {
    if (AIRY_SERIES_LO..=AIRY_SERIES_HI).contains(&x) {
        airy_maclaurin(x)
    } else {
        airy_asymptotic(x)
    }
}

pub fn airy_ai(x: f64) -> f64 {
    airy_pair(x).0
}

pub fn airy_ai_prime(x: f64) -> f64 {
    airy_pair(x).1
}

/// `psi(u)` with `(2/3) psi^(3/2) = int_1^u sqrt(1 - t^-2) dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PsiMap {
    pub u: f64,
    pub psi: f64,
}

impl PsiMap {
    pub fn at(u: f64) -> Result<Self> {
        if !(u > 1.0) || !u.is_finite() {
            return Err(Error::InvalidParameter(alloc::format!("psi map needs u > 1, got {u}")));
        }
        let integral = psi_integral(u)?;
        Ok(Self { u, psi: (1.5 * integral).powf(2.0 / 3.0) })
    }

    /// `psi'(u) = sqrt(1 - u^-2) / sqrt(psi(u))`.
    pub fn derivative(&self) -> f64 {
        (1.0 - 1.0 / (self.u * self.u)).sqrt() / self.psi.sqrt()
    }

    /// `(2/3) psi^(3/2)`, the integral itself.
    pub fn phase_per_order(&self) -> f64 {
        2.0 / 3.0 * self.psi.powf(1.5)
    }
}

// With t = 1 + w^2 the integrand becomes 2 w^2 sqrt(2 + w^2) / (1 + w^2),
// which is smooth at the lower endpoint.
fn psi_integral(u: f64) -> Result<f64> {
    let top = (u - 1.0).sqrt();
    let r = quad::integrate(
        |w| {
            let w2 = w * w;
            2.0 * w2 * (2.0 + w2).sqrt() / (1.0 + w2)
        },
        0.0,
        top,
        1e-15,
        1e-13,
    )?;
    Ok(r.value)
}

pub fn psi_map(u: f64) -> Result<f64> {
    PsiMap::at(u).map(|p| p.psi)
}

/// Smallest allowed distance of `k (2/3) psi^(3/2)` from `-pi/4 + pi Z`.
pub const PHASE_MARGIN: f64 = 0.2;

/// Uniform approximation of `J_k(k u)` for `u > 1` through the Airy function.
pub fn bessel_uniform_approx(k: u32, u: f64) -> Result<f64> {
    if k < 10 {
        return Err(Error::InvalidParameter(alloc::format!(
            "uniform approximation needs k >= 10, got {k}"
        )));
    }
    let p = PsiMap::at(u)?;
    let kf = k as f64;
    let phase = kf * p.phase_per_order();
    let d = (phase + FRAC_PI_4) % PI;
    let d = if d < 0.0 { d + PI } else { d };
    let distance = d.min(PI - d);
    if distance < PHASE_MARGIN {
        return Err(Error::PhaseProximity { phase, distance });
    }
    let k23 = kf.powf(2.0 / 3.0);
    let prefactor = (0.5 * k23 * u * p.derivative()).powf(-0.5);
    Ok(prefactor * airy_ai(-k23 * p.psi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn trivial_values() {
        assert_eq!(bessel_j(0, 0.0), 1.0);
        assert_eq!(bessel_j(3, 0.0), 0.0);
        assert!(close(bessel_j(1, 2.0), 0.576_724_807_756_873_4, 1e-15));
    }

    #[test]
    fn reference_values() {
        // Reference digits from an arbitrary-precision evaluation.
        let cases = [
            (0u32, 100000.0, -0.001_719_201_116_235_972_2),
            (5, 100000.0, 0.001_846_551_245_452_295),
            (1000, 1200.0, 0.003_582_667_437_882_888_4),
            (100, 100.0, 0.096_366_673_295_861_56),
            (200, 1000.0, 0.004_183_531_525_022_075_6),
            (0, 20.0, 0.167_024_664_340_583_15),
            (3, 12.0, 0.195_136_939_531_092_68),
            (30, 8.0, 2.583_099_782_566_307_5e-15),
            (10, 8.5, 0.089_432_858_880_587_37),
            (0, 1e-5, 0.999_999_999_975),
            (50000, 50000.0, 0.012_141_788_564_359_953),
            (99990, 100000.0, 0.011_508_822_578_621_68),
        ];
        for (k, x, want) in cases {
            let got = bessel_j(k, x);
            assert!(close(got, want, 1e-12), "J_{k}({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn series_and_recurrence_agree() {
        for k in 0..=30u32 {
            for &x in &[0.3, 1.0, 4.0, 7.9] {
                let s = bessel_series(k, x);
                let m = bessel_j_seq(30, x)[k as usize];
                assert!(close(s, m, 1e-13), "k={k} x={x}: {s} vs {m}");
            }
        }
    }

    #[test]
    fn underflow_is_flagged() {
        let e = bessel_j_eval(5000, 1.0);
        assert_eq!(e.value, 0.0);
        assert!(e.underflow);
        assert_eq!(e.method, BesselMethod::MillerRecurrence);
        assert!(!bessel_j_eval(3, 0.0).underflow);
    }

    #[test]
    fn negative_orders_and_arguments() {
        assert!(close(bessel_j_int(-3, 2.5), -bessel_j(3, 2.5), 0.0));
        assert!(close(bessel_j_int(-4, 2.5), bessel_j(4, 2.5), 0.0));
        assert!(close(bessel_j(3, -2.5), -bessel_j(3, 2.5), 0.0));
    }

    #[test]
    fn airy_values() {
        assert!(close(airy_ai(0.0), 0.355_028_053_9, 1e-10));
        assert!(airy_ai(10.0) < 1e-9 && airy_ai(10.0) > 0.0);
        assert!(airy_ai(-2.338_107_410_459_767).abs() < 1e-10);
        let cases = [
            (-7.0, 0.184_280_835_250_505_64, -0.771_008_168_410_126_5),
            (5.0, 0.000_108_344_428_136_074_42, -0.000_247_413_890_868_462_48),
            (-15.5, -0.166_447_954_090_419_77, 0.904_937_935_430_212_2),
        ];
        for (x, ai, aip) in cases {
            let (a, b) = airy_pair(x);
            assert!(close(a, ai, 1e-10), "Ai({x}) = {a}");
            assert!(close(b, aip, 1e-9), "Ai'({x}) = {b}");
        }
        assert!(close(airy_ai(2.5), 0.015_725_923_380_470_49, 1e-12));
    }

    #[test]
    fn airy_branches_overlap() {
        for &x in &[-8.5, -8.0, -7.5, 5.5, 6.0, 6.5] {
            let (a1, d1) = airy_maclaurin(x);
            let (a2, d2) = airy_asymptotic(x);
            assert!(close(a1, a2, 1e-10), "Ai overlap at {x}: {a1} vs {a2}");
            assert!(close(d1, d2, 1e-9), "Ai' overlap at {x}: {d1} vs {d2}");
        }
    }

    #[test]
    fn psi_matches_closed_form() {
        for &u in &[1.0001, 1.2, 2.0, 3.0, 10.0, 50.0] {
            let closed = (u * u - 1.0).sqrt() - (1.0 / u).acos();
            let want = (1.5 * closed).powf(2.0 / 3.0);
            let got = psi_map(u).unwrap();
            assert!(close(got, want, 1e-12 * want.max(1.0)), "u={u}");
        }
        assert!(psi_map(1.0).is_err());
        assert!(psi_map(0.5).is_err());
        assert!(psi_map(1.0 + 1e-12).unwrap() < 1e-7);
    }

    #[test]
    fn psi_derivative_matches_difference() {
        for &u in &[1.3, 2.0, 7.0] {
            let h = 1e-5;
            let fd = (psi_map(u + h).unwrap() - psi_map(u - h).unwrap()) / (2.0 * h);
            let p = PsiMap::at(u).unwrap();
            assert!(close(p.derivative(), fd, 1e-8), "u={u}");
        }
    }

    #[test]
    fn uniform_approximation_accuracy() {
        let u = 1.2;
        let e100 = {
            let exact = bessel_j(100, 100.0 * u);
            ((bessel_uniform_approx(100, u).unwrap() - exact) / exact).abs()
        };
        let e200 = {
            let exact = bessel_j(200, 200.0 * u);
            ((bessel_uniform_approx(200, u).unwrap() - exact) / exact).abs()
        };
        assert!(e100 <= 5.0 / 100.0, "{e100}");
        assert!(e200 < e100, "{e200} vs {e100}");
    }

    #[test]
    fn phase_proximity_is_rejected() {
        // Solve k * I(u) = 3 pi - pi/4 for u, then ask there.
        let k = 50u32;
        let target = (3.0 * PI - FRAC_PI_4) / k as f64;
        let (mut lo, mut hi) = (1.0 + 1e-9, 3.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if PsiMap::at(mid).unwrap().phase_per_order() < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!(matches!(bessel_uniform_approx(k, lo), Err(Error::PhaseProximity { .. })));
        assert!(bessel_uniform_approx(5, 1.5).is_err());
    }
}
