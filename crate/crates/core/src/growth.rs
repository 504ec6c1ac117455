//! Height fluctuations of the growth model with symbol
//! `(1+z)^n (1 - r/z)^m`: time constant, saddle points of
//! `sigma(z) = alpha log(1+z) + log(r-z) + (c'-1) log(-z)`, the leading-order
//! trace and the exact trace as a double contour integral.

use alloc::format;
use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::kernels::{self, diagonal_trace, HpDet};
use crate::quad;
use crate::spectral::{self, LineFit};
use crate::symbols::SymbolSpec;

/// `c = ((1-alpha) r + 2 sqrt(alpha r)) / (1+r)`.
pub fn time_constant(alpha: f64, r: f64) -> f64 {
    ((1.0 - alpha) * r + 2.0 * (alpha * r).sqrt()) / (1.0 + r)
}

/// Lower end of the interval of `c'` with complex saddle points.
pub fn lower_edge(alpha: f64, r: f64) -> f64 {
    ((1.0 - alpha) * r - 2.0 * (alpha * r).sqrt()) / (1.0 + r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GrowthParams {
    pub alpha: f64,
    pub r: f64,
    pub m: u32,
    pub s: f64,
    /// `n = alpha m`.
    pub n: u32,
    pub c: f64,
    /// `c - s m^{-2/3}`.
    pub c_prime: f64,
    /// `floor(c' m)`.
    pub h: i64,
    /// `c' m - h`, the part dropped by rounding down.
    pub h_rounding: f64,
}

impl GrowthParams {
    pub fn new(alpha: f64, r: f64, m: u32, s: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::InvalidParameter(format!("r must lie in (0, 1), got {r}")));
        }
        if alpha * r >= 1.0 {
            return Err(Error::InvalidParameter(format!("alpha * r = {} must be below 1", alpha * r)));
        }
        if m == 0 {
            return Err(Error::InvalidParameter("m must be positive".into()));
        }
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::InvalidParameter(format!("s must be nonnegative, got {s}")));
        }
        let nf = alpha * m as f64;
        let n = nf.round();
        if (nf - n).abs() > 1e-9 * nf.max(1.0) || n < 1.0 {
            return Err(Error::InvalidParameter(format!("alpha * m = {nf} is not a positive integer")));
        }
        let c = time_constant(alpha, r);
        let c_prime = c - s * (m as f64).powf(-2.0 / 3.0);
        if c_prime <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "c' = {c_prime} is not positive; s is too large for m = {m}"
            )));
        }
        let hm = c_prime * m as f64;
        let h = hm.floor();
        Ok(Self { alpha, r, m, s, n: n as u32, c, c_prime, h: h as i64, h_rounding: hm - h })
    }

    pub fn symbol(&self) -> Result<SymbolSpec> {
        SymbolSpec::growth(self.n, self.m, self.r)
    }

    /// `((1+r)c' + (alpha-1) r)^2 - 4 alpha r`.
    pub fn discriminant(&self) -> f64 {
        discriminant_at(self.alpha, self.r, self.c_prime)
    }

    fn with_c_prime(&self, c_prime: f64) -> Self {
        Self { c_prime, ..*self }
    }
}

fn discriminant_at(alpha: f64, r: f64, cp: f64) -> f64 {
    let b = (1.0 + r) * cp + (alpha - 1.0) * r;
    b * b - 4.0 * alpha * r
}

/// Saddle points of `sigma`, roots of
/// `(alpha+c') z^2 + ((1-r)c' + (1-alpha) r) z - (c'-1) r = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CriticalPoints {
    pub u_plus: Complex64,
    pub u_minus: Complex64,
    pub discriminant: f64,
}

/// Discriminants this close to zero are treated as a double root.
const DOUBLE_ROOT: f64 = 1e-14;

pub fn quadratic(gp: &GrowthParams) -> (f64, f64, f64) {
    let cp = gp.c_prime;
    (gp.alpha + cp, (1.0 - gp.r) * cp + (1.0 - gp.alpha) * gp.r, -(cp - 1.0) * gp.r)
}

pub fn critical_points(gp: &GrowthParams) -> Result<CriticalPoints> {
    let (a, b, _) = quadratic(gp);
    if a == 0.0 {
        return Err(Error::InvalidParameter("alpha + c' vanishes".into()));
    }
    let d = gp.discriminant();
    if d > DOUBLE_ROOT {
        return Err(Error::RealCriticalPoints { discriminant: d, c_prime: gp.c_prime });
    }
    let re = -b / (2.0 * a);
    let im = if d < 0.0 { (-d).sqrt() / (2.0 * a) } else { 0.0 };
    Ok(CriticalPoints {
        u_plus: Complex64::new(re, im),
        u_minus: Complex64::new(re, -im),
        discriminant: d,
    })
}

/// Cut set of `sigma`: `(-inf, -1]` and `[0, inf)` on the real axis.
fn on_cut(z: Complex64) -> bool {
    z.im.abs() <= 1e-15 * z.re.abs().max(1.0) && (z.re <= -1.0 || z.re >= 0.0)
}

/// `sigma(z)` with principal logarithms, whose cuts are the rays left of -1,
/// right of r and along the positive axis from 0.
pub fn sigma(z: Complex64, gp: &GrowthParams) -> Result<Complex64> {
    if on_cut(z) {
        return Err(Error::BranchCut { re: z.re, im: z.im });
    }
    let one = Complex64::new(1.0, 0.0);
    Ok((one + z).ln() * gp.alpha + (Complex64::new(gp.r, 0.0) - z).ln() + (-z).ln() * (gp.c_prime - 1.0))
}

/// `d sigma / dz`.
pub fn sigma_prime(z: Complex64, gp: &GrowthParams) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    gp.alpha / (one + z) - one / (Complex64::new(gp.r, 0.0) - z) + (gp.c_prime - 1.0) / z
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LeadingTrace {
    /// `(m/pi) * integral_{c'}^{c} theta(gamma) d gamma`, `theta = -arg(-u_plus(gamma))`.
    pub value: f64,
    pub quad_error: f64,
    /// `(m / 2pi) Im[sigma(u+) - sigma(u-)]` from the endpoint values.
    pub endpoint_value: f64,
}

/// Leading-order trace from the saddle-point difference of `sigma`.
pub fn leading_trace(gp: &GrowthParams) -> Result<LeadingTrace> {
    let cps = critical_points(gp)?;
    let m = gp.m as f64;
    let width = gp.c - gp.c_prime;
    if width <= 0.0 {
        return Ok(LeadingTrace { value: 0.0, quad_error: 0.0, endpoint_value: 0.0 });
    }
    // gamma = c - tau^2 removes the square-root behaviour at gamma = c.
    let mut failure = None;
    let q = quad::integrate(
        |tau| {
            let g = gp.with_c_prime(gp.c - tau * tau);
            match critical_points(&g) {
                Ok(cp) => 2.0 * tau * -(-cp.u_plus).arg(),
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        },
        0.0,
        width.sqrt(),
        0.0,
        1e-13,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let sp = sigma(cps.u_plus, gp)?;
    let sm = sigma(cps.u_minus, gp)?;
    let endpoint_value = m / (2.0 * core::f64::consts::PI) * (sp - sm).im;
    Ok(LeadingTrace {
        value: m / core::f64::consts::PI * q.value,
        quad_error: m / core::f64::consts::PI * q.error,
        endpoint_value,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ContourTrace {
    pub value: f64,
    /// Imaginary part of the quadrature sum, pure rounding noise.
    pub imag_residue: f64,
    pub rho_outer: f64,
    pub rho_inner: f64,
    pub nodes: usize,
    /// `|T_N - T_{N/2}|`.
    pub delta: f64,
    /// `log10` of the largest summand over the result, the digits lost to cancellation.
    pub cancellation_digits: f64,
}

const CONTOUR_START: usize = 64;
const CONTOUR_MAX: usize = 4096;
const CONTOUR_REL: f64 = 1e-10;

fn log_psi(z: Complex64, n: f64, m: f64, h: f64, r: f64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    (one + z).ln() * n + (one - r / z).ln() * m + z.ln() * h
}

fn circle_max(rho: f64, sign: f64, n: f64, m: f64, h: f64, r: f64) -> f64 {
    // max over the circle of sign * log|psi|
    const SAMPLES: usize = 512;
    (0..SAMPLES)
        .map(|k| {
            let z = Complex64::from_polar(rho, 2.0 * core::f64::consts::PI * (k as f64 + 0.5) / SAMPLES as f64);
            sign * log_psi(z, n, m, h, r).re
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Radii `r < rho_outer < 1` and `0 < rho_inner < rho_outer` minimizing the
/// largest summand `max|z/psi| max|psi w| / (rho_outer - rho_inner)^2`.
fn choose_radii(n: f64, m: f64, h: f64, r: f64) -> (f64, f64, f64) {
    const GRID: usize = 48;
    let outer: Vec<(f64, f64)> = (1..GRID)
        .map(|k| {
            let rho = r + (1.0 - r) * k as f64 / GRID as f64;
            (rho, circle_max(rho, -1.0, n, m, h, r) + rho.ln())
        })
        .collect();
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for &(ro, a) in &outer {
        for k in 1..GRID {
            let ri = ro * k as f64 / GRID as f64;
            let b = circle_max(ri, 1.0, n, m, h, r) + ri.ln();
            let cost = a + b - 2.0 * (ro - ri).ln();
            if cost < best.0 {
                best = (cost, ro, ri);
            }
        }
    }
    best
}

fn contour_sum(nodes: usize, ro: f64, ri: f64, n: f64, m: f64, h: f64, r: f64) -> (Complex64, f64) {
    let tau = 2.0 * core::f64::consts::PI / nodes as f64;
    let mut zs = Vec::with_capacity(nodes);
    let mut ws = Vec::with_capacity(nodes);
    for k in 0..nodes {
        // Half-node shift keeps both grids off the real axis.
        let z = Complex64::from_polar(ro, tau * (k as f64 + 0.5));
        let w = Complex64::from_polar(ri, tau * (k as f64 + 0.25));
        zs.push((z, z * (-log_psi(z, n, m, h, r)).exp()));
        ws.push((w, w * log_psi(w, n, m, h, r).exp()));
    }
    let mut total = Complex64::new(0.0, 0.0);
    let mut largest: f64 = 0.0;
    for &(z, a) in &zs {
        let mut row = Complex64::new(0.0, 0.0);
        for &(w, b) in &ws {
            let d = z - w;
            let term = b / (d * d);
            row += term;
        }
        let row = a * row;
        largest = largest.max(row.norm());
        total += row;
    }
    let scale = 1.0 / (nodes as f64 * nodes as f64);
    (total * scale, largest / nodes as f64)
}

/// Trace of `K_h` as `(1/4pi^2) double integral (z/psi(z)) (psi(w) w) / (z-w)^2`
/// over nested circles, `psi(z) = (1+z)^n (1-r/z)^m z^h`.
pub fn trace_contour(gp: &GrowthParams) -> Result<ContourTrace> {
    trace_contour_at(gp.n, gp.m, gp.r, gp.h)
}

pub fn trace_contour_at(n: u32, m: u32, r: f64, h: i64) -> Result<ContourTrace> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidParameter(format!("r must lie in (0, 1), got {r}")));
    }
    let (nf, mf, hf) = (n as f64, m as f64, h as f64);
    let (_, ro, ri) = choose_radii(nf, mf, hf, r);
    let mut nodes = CONTOUR_START;
    let (mut prev, _) = contour_sum(nodes, ro, ri, nf, mf, hf, r);
    loop {
        nodes *= 2;
        let (cur, largest) = contour_sum(nodes, ro, ri, nf, mf, hf, r);
        let delta = (cur.re - prev.re).abs();
        let digits = if cur.re != 0.0 { (largest / cur.re.abs()).log10().max(0.0) } else { f64::INFINITY };
        if delta <= CONTOUR_REL * cur.re.abs() || (cur.re.abs() < 1e-300 && delta < 1e-300) {
            return Ok(ContourTrace {
                value: cur.re,
                imag_residue: cur.im,
                rho_outer: ro,
                rho_inner: ri,
                nodes,
                delta,
                cancellation_digits: digits,
            });
        }
        if nodes >= CONTOUR_MAX {
            return Err(Error::Convergence {
                what: "contour trace",
                estimate: delta / cur.re.abs(),
                tolerance: CONTOUR_REL,
            });
        }
        prev = cur;
    }
}

/// Every quantity computed for one `(alpha, r, m, s)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GrowthAnalysis {
    pub params: GrowthParams,
    pub critical: CriticalPoints,
    pub sigma_plus: Complex64,
    pub sigma_minus: Complex64,
    pub matrix_trace: f64,
    pub matrix_trace_error: f64,
    pub contour: Option<ContourTrace>,
    pub leading: LeadingTrace,
    /// `det(I - K_h)`, absent when only traces were requested.
    pub det: Option<f64>,
    /// `ln det(I - K_h)`, meaningful when `det` underflows.
    pub ln_det: Option<f64>,
    pub exp_bound: f64,
    pub det_bound_holds: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub contour: bool,
    pub det: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self { contour: true, det: true }
    }
}

/// `det(I - K_h)` from the exact finite-rank kernel, in arbitrary precision
/// because it falls far below the size of the entries as `s` grows.
pub fn growth_det(gp: &GrowthParams) -> Result<HpDet> {
    let sym = gp.symbol()?;
    kernels::fredholm_det_hp(&sym, gp.h, kernels::default_size(&sym, gp.h), 1.0)
}

pub fn analyze(gp: &GrowthParams, opts: AnalysisOptions) -> Result<GrowthAnalysis> {
    let critical = critical_points(gp)?;
    let sym = gp.symbol()?;
    let dt = diagonal_trace(&sym, gp.h)?;
    let contour = if opts.contour { Some(trace_contour(gp)?) } else { None };
    let leading = leading_trace(gp)?;
    let exp_bound = (-dt.value).exp();
    let (det, ln_det, det_bound_holds) = if opts.det {
        // The double-precision kernel certifies the spectrum is real and below 1.
        let size = kernels::default_size(&sym, gp.h);
        let km = kernels::build_kernel(&sym, gp.h, size, 1e-14)?;
        spectral::lemma1_check(&km, 1.0)?;
        let d = growth_det(gp)?;
        let holds = d.value <= exp_bound + spectral::DET_BOUND_SLACK;
        (Some(d.value), Some(d.ln_abs), Some(holds))
    } else {
        (None, None, None)
    };
    Ok(GrowthAnalysis {
        params: *gp,
        critical,
        sigma_plus: sigma(critical.u_plus, gp)?,
        sigma_minus: sigma(critical.u_minus, gp)?,
        matrix_trace: dt.value,
        matrix_trace_error: dt.error,
        contour,
        leading,
        det,
        ln_det,
        exp_bound,
        det_bound_holds,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GrowthSweepSummary {
    pub m: u32,
    /// Determinants never increase along the given `s` order.
    pub det_nonincreasing: Option<bool>,
    /// Every row satisfied `det <= exp(-trace)`.
    pub det_bound_all: Option<bool>,
    /// Log-log fit of the matrix trace against `s > 0`.
    pub trace_slope: Option<LineFit>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GrowthSweepTable {
    pub rows: Vec<GrowthAnalysis>,
    pub summaries: Vec<GrowthSweepSummary>,
}

pub fn lemma3_experiment(
    alpha: f64,
    r: f64,
    m_list: &[u32],
    s_list: &[f64],
    opts: AnalysisOptions,
) -> Result<GrowthSweepTable> {
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for &m in m_list {
        let start = rows.len();
        for &s in s_list {
            let gp = GrowthParams::new(alpha, r, m, s)?;
            rows.push(analyze(&gp, opts)?);
        }
        let block = &rows[start..];
        let dets: Vec<f64> = block.iter().filter_map(|a| a.ln_det).collect();
        let det_nonincreasing =
            (opts.det && !dets.is_empty()).then(|| dets.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        let det_bound_all = opts.det.then(|| block.iter().all(|a| a.det_bound_holds == Some(true)));
        let pts: Vec<(f64, f64)> = block
            .iter()
            .filter(|a| a.params.s > 0.0)
            .map(|a| (a.params.s, a.matrix_trace))
            .collect();
        summaries.push(GrowthSweepSummary {
            m,
            det_nonincreasing,
            det_bound_all,
            trace_slope: spectral::loglog_fit(&pts),
        });
    }
    Ok(GrowthSweepTable { rows, summaries })
}
