//! Traces, Fredholm determinants, spectra and v-derivatives of truncated kernels,
//! plus the determinant bound `det(I - vK) <= exp(-v tr K)` and the
//! Bessel-sum trace experiment.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::kernels::{self, KernelMatrix, Symmetrizer};
use crate::specfun::{self, PsiMap, PHASE_MARGIN};
use crate::symbols::SymbolSpec;

/// Eigenvalues within this distance of the real axis or of `[0, 1]` count as inside.
pub const SPECTRUM_TOL: f64 = 1e-8;
/// Symmetrizer residual, relative to the largest entry, below which the
/// symmetric eigensolver is used.
pub const SYMMETRIC_RESIDUAL: f64 = 1e-8;
pub const DET_BOUND_SLACK: f64 = 1e-12;

pub fn trace(km: &KernelMatrix) -> f64 {
    km.entries.trace()
}

/// `sum_{k>=1} k J_{n+k}(2t)^2` and an error estimate.
pub fn bessel_trace(t: f64, n: i64) -> (f64, f64) {
    kernels::bessel_trace_sum(t, n)
}

/// The active block, balanced by the symmetrizer when one exists.
struct Prepared {
    block: DMatrix<f64>,
    dropped: usize,
    symmetrizer: Option<Symmetrizer>,
    symmetric: bool,
}

fn prepare(km: &KernelMatrix) -> Prepared {
    let active = kernels::active_indices(&km.entries);
    let n = active.len();
    let scale = km.max_abs();
    let sym = kernels::find_symmetrizer(km).ok();
    let symmetric = sym.as_ref().is_some_and(|s| s.residual <= SYMMETRIC_RESIDUAL * scale);
    let d: Vec<f64> = match &sym {
        Some(s) if symmetric => active.iter().map(|&i| s.d[i]).collect(),
        _ => vec![1.0; n],
    };
    let block = DMatrix::from_fn(n, n, |p, q| d[p] * km.entries[(active[p], active[q])] / d[q]);
    Prepared { block, dropped: km.size - n, symmetrizer: sym, symmetric }
}

fn det_of(block: &DMatrix<f64>, v: f64) -> f64 {
    if block.nrows() == 0 || v == 0.0 {
        return 1.0;
    }
    let n = block.nrows();
    let a = DMatrix::identity(n, n) - block * v;
    a.lu().determinant()
}

/// `det(I - vK_N)` by LU factorization of the deflated, balanced block.
pub fn fredholm_det(km: &KernelMatrix, v: f64) -> f64 {
    det_of(&prepare(km).block, v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DetReport {
    pub value: f64,
    /// `|det_N - det_{N+20}|`.
    pub delta: f64,
    pub size: usize,
    pub entry_error: f64,
}

/// Determinant at the default (or given) size, checked against the size grown by 20.
pub fn fredholm_det_checked(
    sym: &SymbolSpec,
    offset: i64,
    size: Option<usize>,
    v: f64,
    tol: f64,
) -> Result<DetReport> {
    let size = size.unwrap_or_else(|| kernels::default_size(sym, offset));
    let entry_tol = 1e-15;
    let a = kernels::build_kernel(sym, offset, size, entry_tol)?;
    let value = fredholm_det(&a, v);
    let delta = if kernels::is_finite_rank(sym) && kernels::active_size(sym, offset).is_some_and(|s| s <= size) {
        0.0
    } else {
        let b = kernels::build_kernel(sym, offset, size + 20, entry_tol)?;
        (fredholm_det(&b, v) - value).abs()
    };
    if !(delta <= tol) {
        return Err(Error::Convergence { what: "determinant truncation", estimate: delta, tolerance: tol });
    }
    Ok(DetReport { value, delta, size, entry_error: a.entry_error })
}

/// All eigenvalues of the truncation, sorted by real part descending.
/// Deflated structural zeros are included.
pub fn eigenvalues(km: &KernelMatrix) -> Vec<Complex64> {
    eigen_of(&prepare(km))
}

/// Entries this far below the largest one are flushed before eigensolving: the
/// solvers lose accuracy (or return NaN) on matrices spanning hundreds of decades,
/// and the perturbation is far under their own rounding error.
const EIGEN_FLUSH: f64 = 1e-30;

fn eigen_of(p: &Prepared) -> Vec<Complex64> {
    let floor = p.block.amax() * EIGEN_FLUSH;
    let block = p.block.map(|x| if x.abs() < floor { 0.0 } else { x });
    let mut out: Vec<Complex64> = if block.nrows() == 0 {
        Vec::new()
    } else if p.symmetric {
        let s = (&block + block.transpose()) * 0.5;
        s.symmetric_eigenvalues().iter().map(|&x| Complex64::new(x, 0.0)).collect()
    } else {
        block.complex_eigenvalues().iter().copied().collect()
    };
    out.extend(core::iter::repeat(Complex64::new(0.0, 0.0)).take(p.dropped));
    out.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Suspicion {
    ComplexEigenvalue { re: f64, im: f64 },
    AboveOne { value: f64 },
    Negative { value: f64 },
}

/// Everything needed to rerun a suspicious spectrum at a larger size.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Candidate {
    pub sym: SymbolSpec,
    pub offset: i64,
    pub size: usize,
    pub reasons: Vec<Suspicion>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumOptions {
    pub v_grid: Vec<f64>,
    pub k_max: usize,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self { v_grid: vec![0.0, 0.25, 0.5, 0.75, 1.0], k_max: 4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpectrumReport {
    pub eigenvalues: Vec<Complex64>,
    pub max_imag: f64,
    /// `(v, det(I - vK))` pairs.
    pub det_at_v: Vec<(f64, f64)>,
    pub trace: f64,
    /// `d^k/dv^k det(I - vK)` at `v = 1`; empty when some eigenvalue reaches 1.
    pub derivs: Vec<f64>,
    /// Whether the exponential determinant bound held wherever it applies.
    pub det_bound_holds: bool,
    pub det_bound_applicable: bool,
    pub in_unit_interval: bool,
    pub symmetrized: bool,
    pub symmetrizer_residual: Option<f64>,
    pub candidate: Option<Candidate>,
}

pub fn spectrum(km: &KernelMatrix) -> SpectrumReport {
    spectrum_with(km, &SpectrumOptions::default())
}

pub fn spectrum_with(km: &KernelMatrix, opts: &SpectrumOptions) -> SpectrumReport {
    let p = prepare(km);
    let eig = eigen_of(&p);
    let tr = trace(km);
    let max_imag = eig.iter().fold(0.0f64, |a, z| a.max(z.im.abs()));
    let det_at_v: Vec<(f64, f64)> = opts.v_grid.iter().map(|&v| (v, det_of(&p.block, v))).collect();
    let det1 = det_of(&p.block, 1.0);
    let real = max_imag <= SPECTRUM_TOL;
    let top = eig.first().map_or(0.0, |z| z.re);
    let derivs = if real && top < 1.0 { derivs_from(&eig, det1, opts.k_max) } else { Vec::new() };
    let mut det_bound_applicable = real;
    let mut det_bound_holds = true;
    for &(v, d) in &det_at_v {
        if !(0.0..=1.0).contains(&v) || v * top > 1.0 {
            continue;
        }
        if real {
            det_bound_holds &= d <= (-v * tr).exp() + DET_BOUND_SLACK;
        }
    }
    if !real {
        det_bound_holds = false;
        det_bound_applicable = false;
    }
    let mut reasons = Vec::new();
    for z in &eig {
        if z.im.abs() > SPECTRUM_TOL {
            reasons.push(Suspicion::ComplexEigenvalue { re: z.re, im: z.im });
        } else if z.re > 1.0 + SPECTRUM_TOL {
            reasons.push(Suspicion::AboveOne { value: z.re });
        } else if z.re < -SPECTRUM_TOL {
            reasons.push(Suspicion::Negative { value: z.re });
        }
    }
    let in_unit_interval = reasons.is_empty();
    let candidate = (!reasons.is_empty()).then(|| Candidate {
        sym: km.sym.clone(),
        offset: km.offset,
        size: km.size,
        reasons,
    });
    SpectrumReport {
        eigenvalues: eig,
        max_imag,
        det_at_v,
        trace: tr,
        derivs,
        det_bound_holds,
        det_bound_applicable,
        in_unit_interval,
        symmetrized: p.symmetric,
        symmetrizer_residual: p.symmetrizer.map(|s| s.residual),
        candidate,
    }
}

fn derivs_from(eig: &[Complex64], det1: f64, k_max: usize) -> Vec<f64> {
    // det(I - vK) = det(I - K) * prod(1 - (v-1) mu_i), mu = lambda / (1 - lambda)
    let mut e = vec![0.0; k_max + 1];
    e[0] = 1.0;
    for z in eig {
        let mu = z.re / (1.0 - z.re);
        for k in (1..=k_max).rev() {
            e[k] += mu * e[k - 1];
        }
    }
    let mut fact = 1.0;
    (0..=k_max)
        .map(|k| {
            if k > 0 {
                fact *= k as f64;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            det1 * sign * fact * e[k]
        })
        .collect()
}

/// `d^k/dv^k det(I - vK)` at `v = 1` for `k = 0..=k_max`.
pub fn det_v_derivatives(km: &KernelMatrix, k_max: usize) -> Result<Vec<f64>> {
    let p = prepare(km);
    let eig = eigen_of(&p);
    if let Some(z) = eig.iter().find(|z| z.im.abs() > SPECTRUM_TOL) {
        return Err(Error::Precondition(format!(
            "eigenvalue {} + {}i is not real; derivatives at v = 1 are not defined by this route",
            z.re, z.im
        )));
    }
    if let Some(z) = eig.iter().find(|z| z.re >= 1.0) {
        return Err(Error::Precondition(format!("eigenvalue {} is not below 1", z.re)));
    }
    Ok(derivs_from(&eig, det_of(&p.block, 1.0), k_max))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DetBoundReport {
    pub v: f64,
    pub det: f64,
    pub exp_bound: f64,
    pub holds: bool,
}

/// Checks `det(I - vK) <= exp(-v tr K)` after verifying the spectrum is real
/// with `v * lambda <= 1`.
pub fn lemma1_check(km: &KernelMatrix, v: f64) -> Result<DetBoundReport> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidParameter(format!("v must lie in [0, 1], got {v}")));
    }
    let p = prepare(km);
    let eig = eigen_of(&p);
    if let Some(z) = eig.iter().find(|z| z.im.abs() > SPECTRUM_TOL) {
        return Err(Error::Precondition(format!("eigenvalue {} + {}i is not real", z.re, z.im)));
    }
    if let Some(z) = eig.iter().find(|z| v * z.re > 1.0 + SPECTRUM_TOL) {
        return Err(Error::Precondition(format!("v * lambda = {} exceeds 1", v * z.re)));
    }
    let det = det_of(&p.block, v);
    let exp_bound = (-v * trace(km)).exp();
    Ok(DetBoundReport { v, det, exp_bound, holds: det <= exp_bound + DET_BOUND_SLACK })
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

pub fn loglog_fit(points: &[(f64, f64)]) -> Option<LineFit> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    line_fit(&pts)
}

pub fn line_fit(pts: &[(f64, f64)]) -> Option<LineFit> {
    let n = pts.len();
    if n < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some(LineFit { slope, intercept: my - slope * mx, points: n })
}

/// Band `alpha1 s n^{1/3} <= k <= alpha2 s n^{1/3}` where the Bessel terms are
/// bounded below, scaled by the predicted decay.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BandDiagnostic {
    pub alpha1: f64,
    pub alpha2: f64,
    pub k_lo: i64,
    pub k_hi: i64,
    /// `|J_{n+k}(2t)|` divided by `s^{-3/4}` (or `n^{-1/6} s^{-1/2}` when `s >= n^{2/3}`),
    /// minimized over band indices whose Airy phase keeps away from the zeros.
    pub scaled_min: Option<f64>,
    pub scaled_median: Option<f64>,
    /// Fraction of band indices whose phase is at least the margin from `-pi/4 + pi Z`.
    pub good_phase_fraction: f64,
    /// Share of the trace carried by the band.
    pub band_share: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EdgeTraceRow {
    pub n: i64,
    pub s: f64,
    pub t: f64,
    pub trace: f64,
    pub trace_error: f64,
    pub band: BandDiagnostic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EdgeTraceFit {
    pub n: i64,
    pub s_lo: f64,
    pub s_hi: f64,
    pub fit: LineFit,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EdgeTraceTable {
    pub rows: Vec<EdgeTraceRow>,
    pub fits: Vec<EdgeTraceFit>,
}

pub const BAND_ALPHA1: f64 = 0.5;
pub const BAND_ALPHA2: f64 = 0.9;

/// `t` with `2t = n + s n^{1/3}`.
pub fn edge_time(n: i64, s: f64) -> f64 {
    0.5 * (n as f64 + s * (n as f64).cbrt())
}

pub fn edge_trace_row(n: i64, s: f64) -> Result<EdgeTraceRow> {
    if n < 1 {
        return Err(Error::InvalidParameter(format!("n must be positive, got {n}")));
    }
    if !(s >= 0.0) {
        return Err(Error::InvalidParameter(format!("s must be nonnegative, got {s}")));
    }
    let t = edge_time(n, s);
    let (trace, trace_error) = bessel_trace(t, n);
    let band = band_diagnostic(n, s, t, trace);
    Ok(EdgeTraceRow { n, s, t, trace, trace_error, band })
}

fn band_diagnostic(n: i64, s: f64, t: f64, trace: f64) -> BandDiagnostic {
    let nf = n as f64;
    let width = s * nf.cbrt();
    let k_lo = (BAND_ALPHA1 * width).ceil() as i64;
    let k_hi = (BAND_ALPHA2 * width).floor() as i64;
    let mut out = BandDiagnostic {
        alpha1: BAND_ALPHA1,
        alpha2: BAND_ALPHA2,
        k_lo,
        k_hi,
        scaled_min: None,
        scaled_median: None,
        good_phase_fraction: 0.0,
        band_share: 0.0,
    };
    if k_hi < k_lo.max(1) {
        return out;
    }
    let k_lo = k_lo.max(1);
    let x = 2.0 * t;
    let seq = specfun::bessel_j_seq((n + k_hi) as usize, x);
    let scale = if s <= nf.powf(2.0 / 3.0) { s.powf(-0.75) } else { nf.powf(-1.0 / 6.0) / s.sqrt() };
    let mut scaled = Vec::new();
    let mut good = 0usize;
    let mut mass = 0.0;
    for k in k_lo..=k_hi {
        let order = n + k;
        let j = seq[order as usize];
        mass += k as f64 * j * j;
        let u = x / order as f64;
        let ok = u > 1.0
            && PsiMap::at(u).is_ok_and(|p| {
                let phase = order as f64 * p.phase_per_order();
                let shifted = phase + core::f64::consts::FRAC_PI_4;
                let pi = core::f64::consts::PI;
                let dist = (shifted - pi * (shifted / pi).round()).abs();
                dist >= PHASE_MARGIN
            });
        if ok {
            good += 1;
            scaled.push(j.abs() / scale);
        }
    }
    let count = (k_hi - k_lo + 1) as f64;
    out.good_phase_fraction = good as f64 / count;
    out.band_share = if trace > 0.0 { mass / trace } else { 0.0 };
    if !scaled.is_empty() {
        scaled.sort_by(f64::total_cmp);
        out.scaled_min = Some(scaled[0]);
        out.scaled_median = Some(scaled[scaled.len() / 2]);
    }
    out
}

/// Trace rows for every `(n, s)` and, per `n`, a log-log slope over
/// `s in [s_min, min(s_max, n^{2/3})]`.
pub fn prop1_experiment(n_list: &[i64], s_list: &[f64]) -> Result<EdgeTraceTable> {
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for &n in n_list {
        let mut pts = Vec::new();
        let cap = (n as f64).powf(2.0 / 3.0);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &s in s_list {
            let row = edge_trace_row(n, s)?;
            if s > 0.0 && s <= cap {
                pts.push((s, row.trace));
                lo = lo.min(s);
                hi = hi.max(s);
            }
            rows.push(row);
        }
        if let Some(fit) = loglog_fit(&pts) {
            fits.push(EdgeTraceFit { n, s_lo: lo, s_hi: hi, fit });
        }
    }
    Ok(EdgeTraceTable { rows, fits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{apply_weight, build_kernel, default_size, WeightKind};

    fn exp_kernel(t: f64, n: i64) -> KernelMatrix {
        let s = SymbolSpec::exponential(t).unwrap();
        build_kernel(&s, n, default_size(&s, n), 1e-15).unwrap()
    }

    fn zero_kernel() -> KernelMatrix {
        exp_kernel(0.0, 0)
    }

    #[test]
    fn zero_kernel_basics() {
        let k = zero_kernel();
        assert_eq!(trace(&k), 0.0);
        assert_eq!(fredholm_det(&k, 0.7), 1.0);
        let r = spectrum(&k);
        assert!(r.eigenvalues.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
        assert_eq!(r.derivs, vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        let l = lemma1_check(&k, 1.0).unwrap();
        assert_eq!((l.det, l.exp_bound, l.holds), (1.0, 1.0, true));
    }

    #[test]
    fn trace_matches_bessel_sum() {
        let k = exp_kernel(6.0, 10);
        let (b, _) = bessel_trace(6.0, 10);
        assert!((trace(&k) - b).abs() <= 1e-10);
        let w = apply_weight(&k, WeightKind::Geometric(0.5)).unwrap();
        assert!((trace(&w) - trace(&k)).abs() <= 1e-15);
    }

    #[test]
    fn det_matches_eigen_product() {
        let k = exp_kernel(3.0, 2);
        let eig = eigenvalues(&k);
        for v in [0.0, 0.3, 1.0] {
            let prod: f64 = eig.iter().map(|z| 1.0 - v * z.re).product();
            let d = fredholm_det(&k, v);
            assert!((prod - d).abs() <= 1e-8 * d.abs(), "{prod} {d}");
        }
        assert_eq!(fredholm_det(&k, 0.0), 1.0);
    }

    #[test]
    fn plancherel_det_is_monotone_in_offset() {
        let mut prev = 0.0;
        for n in 0..20 {
            let d = fredholm_det(&exp_kernel(4.0, n), 1.0);
            assert!(d >= prev - 1e-12);
            prev = d;
        }
        assert!(prev > 0.99);
    }

    #[test]
    fn derivatives_rank_one_and_finite_difference() {
        let lam = 0.3;
        let e = DMatrix::from_row_slice(2, 2, &[lam, 0.0, 0.0, 0.0]);
        let k = KernelMatrix::from_entries(SymbolSpec::exponential(0.0).unwrap(), 0, e).unwrap();
        let d = det_v_derivatives(&k, 3).unwrap();
        let want = [1.0 - lam, -lam, 0.0, 0.0];
        for (a, b) in d.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        let k = exp_kernel(3.0, 3);
        let d = det_v_derivatives(&k, 2).unwrap();
        let h = 1e-4;
        let (fp, f0, fm) = (fredholm_det(&k, 1.0 + h), fredholm_det(&k, 1.0), fredholm_det(&k, 1.0 - h));
        let d1 = (fp - fm) / (2.0 * h);
        let d2 = (fp - 2.0 * f0 + fm) / (h * h);
        assert!((d[1] - d1).abs() <= 1e-5 * d1.abs(), "{} {}", d[1], d1);
        assert!((d[2] - d2).abs() <= 1e-5 * d2.abs(), "{} {}", d[2], d2);
    }

    #[test]
    fn derivative_precondition() {
        let e = DMatrix::from_row_slice(1, 1, &[1.0]);
        let k = KernelMatrix::from_entries(SymbolSpec::exponential(0.0).unwrap(), 0, e).unwrap();
        assert!(matches!(det_v_derivatives(&k, 2), Err(Error::Precondition(_))));
    }

    #[test]
    fn growth_spectrum_is_real_below_one() {
        let g = SymbolSpec::growth(6, 6, 0.4).unwrap();
        let k = build_kernel(&g, 0, 60, 1e-14).unwrap();
        let r = spectrum(&k);
        assert!(r.symmetrized);
        assert!(r.max_imag <= 1e-9);
        assert!(r.eigenvalues.iter().all(|z| z.re >= -1e-9 && z.re < 1.0));
        assert!(r.in_unit_interval && r.candidate.is_none());
        assert!(r.det_bound_holds);
    }

    #[test]
    fn product_spectrum_in_unit_interval() {
        let c = SymbolSpec::conjecture(vec![0.8, 0.3], vec![0.5, 0.2]).unwrap();
        let k = build_kernel(&c, 3, 80, 1e-14).unwrap();
        let r = spectrum(&k);
        assert!(r.in_unit_interval);
        let k0 = build_kernel(&c, 0, 80, 1e-14).unwrap();
        let r0 = spectrum(&k0);
        assert!(r0.in_unit_interval, "{:?}", r0.eigenvalues);
        assert!((r0.trace - r0.eigenvalues.iter().map(|z| z.re).sum::<f64>()).abs() <= 1e-9 * r0.trace.abs().max(1e-300));
    }

    #[test]
    fn det_bound_examples() {
        let r = lemma1_check(&exp_kernel(7.0, 10), 0.9).unwrap();
        assert!(r.holds && r.det < r.exp_bound);
        assert!(lemma1_check(&exp_kernel(7.0, 10), 1.5).is_err());
    }

    #[test]
    fn weighted_spectrum_agrees() {
        let k = exp_kernel(2.5, 1);
        let w = apply_weight(&k, WeightKind::Geometric(0.5)).unwrap();
        let (a, b) = (eigenvalues(&k), eigenvalues(&w));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() <= 1e-9);
        }
    }

    #[test]
    fn checked_determinant() {
        let s = SymbolSpec::exponential(5.0).unwrap();
        let d = fredholm_det_checked(&s, 8, None, 1.0, 1e-10).unwrap();
        assert!(d.delta <= 1e-12);
        let g = SymbolSpec::growth(10, 10, 0.3).unwrap();
        assert_eq!(fredholm_det_checked(&g, 5, None, 1.0, 1e-10).unwrap().delta, 0.0);
    }

    #[test]
    fn prop1_rows() {
        let r = edge_trace_row(50, 0.0).unwrap();
        assert!(r.trace > 0.0);
        let want: f64 = (1..400).map(|k| k as f64 * specfun::bessel_j(50 + k, 50.0).powi(2)).sum();
        assert!((r.trace - want).abs() < 1e-12);
        let tab = prop1_experiment(&[2000], &[2.0, 4.0, 8.0]).unwrap();
        assert_eq!(tab.rows.len(), 3);
        let slope = tab.fits[0].fit.slope;
        assert!(slope > 1.2 && slope < 1.8, "{slope}");
    }

    #[test]
    fn line_fit_exact() {
        let f = loglog_fit(&[(1.0, 2.0), (2.0, 2.0 * 2f64.powf(1.5)), (4.0, 16.0)]).unwrap();
        assert!((f.slope - 1.5).abs() < 1e-12);
        assert!(loglog_fit(&[(1.0, 1.0)]).is_none());
    }
}
