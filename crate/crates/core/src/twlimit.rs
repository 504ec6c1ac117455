//! `F2(x) = det(I - K_Airy)` on `L2(x, inf)` by Nystrom discretization, and scans
//! comparing discrete determinants with it under edge scaling.

use alloc::format;
use alloc::vec::Vec;
use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::growth::{time_constant, GrowthParams};
use crate::kernels;
use crate::mc::FROZEN_OFFSET;
use crate::quad::gauss_legendre;
use crate::spectral;
use crate::specfun::airy_pair;
use crate::symbols::SymbolSpec;

/// Scale of the map `u = x - SCALE ln(1 - s)` from `s in (0, 1)` onto `(x, inf)`.
const MAP_SCALE: f64 = 3.0;
pub const DEFAULT_ORDER: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AiryDet {
    pub x: f64,
    pub order: usize,
    pub value: f64,
    /// `|value(order) - value(order / 2)|`.
    pub convergence_delta: f64,
}

fn nystrom(x: f64, order: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(order);
    let mut u = Vec::with_capacity(order);
    let mut sw = Vec::with_capacity(order);
    let mut ai = Vec::with_capacity(order);
    for (xi, wi) in nodes.iter().zip(&weights) {
        let one_minus = 0.5 * (1.0 - xi);
        let uk = x - MAP_SCALE * one_minus.ln();
        u.push(uk);
        sw.push((0.5 * wi * MAP_SCALE / one_minus).sqrt());
        ai.push(airy_pair(uk));
    }
    let a = DMatrix::from_fn(order, order, |i, j| {
        let (ai_u, dai_u) = ai[i];
        let (ai_v, dai_v) = ai[j];
        let k = if i == j {
            dai_u * dai_u - u[i] * ai_u * ai_u
        } else {
            (ai_u * dai_v - dai_u * ai_v) / (u[i] - u[j])
        };
        let delta = if i == j { 1.0 } else { 0.0 };
        delta - sw[i] * k * sw[j]
    });
    a.lu().determinant()
}

pub fn airy_kernel_det(x: f64, order: usize) -> Result<AiryDet> {
    if order < 8 {
        return Err(Error::InvalidParameter(format!("order must be at least 8, got {order}")));
    }
    if !x.is_finite() {
        return Err(Error::InvalidParameter(format!("x must be finite, got {x}")));
    }
    let value = nystrom(x, order);
    let coarse = nystrom(x, order / 2);
    Ok(AiryDet { x, order, value, convergence_delta: (value - coarse).abs() })
}

/// `F2(x)` at the default order.
pub fn tw_cdf(x: f64) -> Result<f64> {
    Ok(airy_kernel_det(x, DEFAULT_ORDER)?.value)
}

/// Median of `F2`, by bisection.
pub fn tw_median() -> Result<f64> {
    let (mut lo, mut hi) = (-4.0, 0.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if tw_cdf(mid)? < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PlancherelLimitRow {
    pub t: f64,
    /// `2t + x t^{1/3}` before rounding.
    pub n_exact: f64,
    /// Nearest integer to `n_exact`.
    pub n: i64,
    pub det: f64,
    pub det_delta: f64,
    pub f2: f64,
    pub deviation: f64,
}

/// `|P(lambda_1 <= n) - F2(x)|` with `n = round(2t + x t^{1/3})`, the
/// probability taken as `det(I - K)` on `l2({n + FROZEN_OFFSET, ...})`.
pub fn plancherel_limit_scan(x: f64, t_list: &[f64]) -> Result<Vec<PlancherelLimitRow>> {
    let f2 = tw_cdf(x)?;
    t_list
        .iter()
        .map(|&t| {
            let sym = SymbolSpec::exponential(t)?;
            let n_exact = 2.0 * t + x * t.cbrt();
            let n = n_exact.round() as i64;
            let rep = spectral::fredholm_det_checked(&sym, n + FROZEN_OFFSET, None, 1.0, 1e-10)?;
            Ok(PlancherelLimitRow {
                t,
                n_exact,
                n,
                det: rep.value,
                det_delta: rep.delta,
                f2,
                deviation: (rep.value - f2).abs(),
            })
        })
        .collect()
}

/// `det(I - K_h)` for the growth symbol with `n = alpha m`.
pub fn growth_det_at(alpha: f64, r: f64, m: u32, h: i64) -> Result<f64> {
    let n = (alpha * m as f64).round() as u32;
    let sym = SymbolSpec::growth(n, m, r)?;
    Ok(kernels::fredholm_det_hp(&sym, h, kernels::default_size(&sym, h), 1.0)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GrowthLimitRow {
    pub m: u32,
    /// `c m + x m^{1/3}` before rounding.
    pub h_exact: f64,
    pub h: i64,
    pub det: f64,
    pub f2: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GrowthLimitScan {
    pub x: f64,
    /// Fitted fluctuation scale: the median displacement at the largest `m`
    /// divided by the median of `F2`. Not a derived constant.
    pub sigma_g: f64,
    pub median_displacement: f64,
    pub rows: Vec<GrowthLimitRow>,
}

/// Real `h` where `det(I - K_h)` crosses 1/2, by linear interpolation in `h`.
fn median_height(alpha: f64, r: f64, m: u32) -> Result<f64> {
    let c = time_constant(alpha, r);
    let mut h = (c * m as f64).round() as i64;
    let mut d = growth_det_at(alpha, r, m, h)?;
    let step = if d < 0.5 { 1 } else { -1 };
    for _ in 0..m {
        let h2 = h + step;
        let d2 = growth_det_at(alpha, r, m, h2)?;
        if (d - 0.5) * (d2 - 0.5) <= 0.0 {
            let (ha, da, hb, db) = if step > 0 { (h, d, h2, d2) } else { (h2, d2, h, d) };
            return Ok(ha as f64 + (0.5 - da) / (db - da) * (hb - ha) as f64);
        }
        h = h2;
        d = d2;
    }
    Err(Error::Convergence { what: "growth median", estimate: d, tolerance: 0.5 })
}

pub fn growth_limit_scan(x: f64, alpha: f64, r: f64, m_list: &[u32]) -> Result<GrowthLimitScan> {
    let m_top = *m_list
        .iter()
        .max()
        .ok_or_else(|| Error::InvalidParameter("empty m list".into()))?;
    // Validates alpha and r against the admissible regime.
    GrowthParams::new(alpha, r, m_top, 0.0)?;
    let c = time_constant(alpha, r);
    let h_med = median_height(alpha, r, m_top)?;
    let median_displacement = (h_med - c * m_top as f64) / (m_top as f64).cbrt();
    let sigma_g = median_displacement / tw_median()?;
    if !(sigma_g > 0.0) {
        return Err(Error::Precondition(format!(
            "median displacement {median_displacement} has the wrong sign for a scale fit"
        )));
    }
    let f2 = tw_cdf(x / sigma_g)?;
    let rows = m_list
        .iter()
        .map(|&m| {
            GrowthParams::new(alpha, r, m, 0.0)?;
            let h_exact = c * m as f64 + x * (m as f64).cbrt();
            let h = h_exact.round() as i64;
            let det = growth_det_at(alpha, r, m, h)?;
            Ok(GrowthLimitRow { m, h_exact, h, det, f2, deviation: (det - f2).abs() })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GrowthLimitScan { x, sigma_g, median_displacement, rows })
}

/// Largest `delta` with `ln det <= -delta s^{3/2}` at every point.
pub fn decay_constant(points: &[(f64, f64)]) -> Option<f64> {
    points
        .iter()
        .filter(|(s, _)| *s > 0.0)
        .map(|&(s, d)| if d > 0.0 { -d.ln() / s.powf(1.5) } else { f64::INFINITY })
        .reduce(f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        // F2 at -1, 0, 1 from an independent high-order evaluation.
        for (x, want) in [(-1.0, 0.8072142419992787), (0.0, 0.9693728283552613), (1.0, 0.9975054381493891)] {
            let d = airy_kernel_det(x, 80).unwrap();
            assert!((d.value - want).abs() < 1e-10, "{x} {}", d.value);
        }
    }

    #[test]
    fn self_convergence_and_shape() {
        for x in [-4.0, -2.0, 0.0, 2.0] {
            let d = airy_kernel_det(x, 80).unwrap();
            assert!(d.convergence_delta < 1e-8, "{x} {}", d.convergence_delta);
        }
        assert!(tw_cdf(8.0).unwrap() >= 1.0 - 1e-6);
        let mut prev = 0.0;
        for k in 0..=16 {
            let v = tw_cdf(-5.0 + 0.5 * k as f64).unwrap();
            assert!(v > prev && (0.0..=1.0).contains(&v));
            prev = v;
        }
        assert!(airy_kernel_det(0.0, 4).is_err());
    }

    #[test]
    fn median() {
        let m = tw_median().unwrap();
        assert!((tw_cdf(m).unwrap() - 0.5).abs() < 1e-12);
        assert!(m < -1.7 && m > -1.9);
    }

    #[test]
    fn decay_fit() {
        let pts = [(1.0, (-0.5f64).exp()), (4.0, (-8.0f64).exp())];
        assert!((decay_constant(&pts).unwrap() - 0.5).abs() < 1e-12);
    }
}
