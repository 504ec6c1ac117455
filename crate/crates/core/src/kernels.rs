//! Finite truncations of `K(i,j) = sum_{k>=1} (phi-/phi+)_{i+k} (phi+/phi-)_{-k-j}`
//! on `l2({n, n+1, ...})` and diagonal symmetrizers.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::hp::{self, Big, Hp};
use crate::series;
use crate::specfun;
use crate::symbols::{Family, FamilyParams, Ratio, SymbolSpec};

/// Geometric weight `w(i) = base^(i - offset)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Weight {
    pub base: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum WeightKind {
    None,
    Geometric(f64),
}

/// A truncated kernel. Row and column `p` stand for the lattice index `offset + p`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub sym: SymbolSpec,
    pub offset: i64,
    pub size: usize,
    /// Largest inner-sum index used.
    pub ksum_cut: usize,
    /// Stored entries, `w(i) K(i,j) / w(j)` when weighted.
    pub entries: DMatrix<f64>,
    /// Bound on the truncation and rounding error of any unweighted entry.
    pub entry_error: f64,
    pub weight: Option<Weight>,
}

impl KernelMatrix {
    /// Wraps arbitrary entries, for experiments on hand-made matrices.
    pub fn from_entries(sym: SymbolSpec, offset: i64, entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::InvalidParameter(format!(
                "kernel must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(Self {
            sym,
            offset,
            size: entries.nrows(),
            ksum_cut: 0,
            entries,
            entry_error: 0.0,
            weight: None,
        })
    }

    pub fn index(&self, p: usize) -> i64 {
        self.offset + p as i64
    }

    pub fn weights(&self) -> Option<Vec<f64>> {
        self.weight.map(|w| (0..self.size).map(|p| w.base.powi(p as i32)).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// `max_j |K(N-1, j)|`, the decay diagnostic for the truncation.
    pub fn last_row_max(&self) -> f64 {
        if self.size == 0 {
            return 0.0;
        }
        self.entries.row(self.size - 1).iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Size that captures the kernel: the exact active block for finite-rank
/// families, otherwise a window reaching past the spectral edge.
pub fn default_size(sym: &SymbolSpec, offset: i64) -> usize {
    if let Some(lp) = sym.lowest_power(Ratio::PlusOverMinus) {
        return ((-lp) - offset).max(1) as usize;
    }
    match sym.params() {
        FamilyParams::Exponential { t } => {
            let x = 2.0 * t;
            let reach = (x + 10.0 * x.cbrt() + 20.0).ceil() as i64;
            (reach - offset).max(48) as usize
        }
        FamilyParams::Johansson { m, n, t } => {
            let decay = if *t > 0.0 { (40.0 / -t.log10()).ceil() as i64 } else { 0 };
            (decay + (*m + *n) as i64 - offset).max(48) as usize
        }
        _ => 48,
    }
}

/// Number of leading columns that can be nonzero, when finite.
pub fn active_size(sym: &SymbolSpec, offset: i64) -> Option<usize> {
    sym.lowest_power(Ratio::PlusOverMinus)
        .map(|lp| ((-lp) - offset).max(0) as usize)
}

pub fn build_kernel(sym: &SymbolSpec, offset: i64, size: usize, tol: f64) -> Result<KernelMatrix> {
    build_kernel_weighted(sym, offset, size, tol, WeightKind::None)
}

/// Builds the truncation with the weight applied before rounding to double
/// precision, so that strongly graded kernels stay representable.
pub fn build_kernel_weighted(
    sym: &SymbolSpec,
    offset: i64,
    size: usize,
    tol: f64,
    weight: WeightKind,
) -> Result<KernelMatrix> {
    if size == 0 {
        return Err(Error::InvalidParameter("kernel size must be at least 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let base = match weight {
        WeightKind::None => None,
        WeightKind::Geometric(b) if b > 0.0 && b.is_finite() => Some(b),
        WeightKind::Geometric(b) => {
            return Err(Error::InvalidParameter(format!("weight base must be positive, got {b}")))
        }
    };
    let (entries, ksum_cut, entry_error) = match sym.params() {
        FamilyParams::Exponential { t } => {
            let (mut e, cut, err) = bessel_entries(*t, offset, size, tol)?;
            if let Some(b) = base {
                conjugate(&mut e, b);
            }
            (e, cut, err)
        }
        _ => series_entries(sym, offset, size, tol, base)?,
    };
    Ok(KernelMatrix {
        sym: sym.clone(),
        offset,
        size,
        ksum_cut,
        entries,
        entry_error,
        weight: base.map(|base| Weight { base }),
    })
}

fn conjugate(e: &mut DMatrix<f64>, base: f64) {
    let n = e.nrows();
    for i in 0..n {
        for j in 0..n {
            e[(i, j)] *= base.powi(i as i32 - j as i32);
        }
    }
}

/// Conjugates by `diag(w)`; the spectrum is unchanged.
pub fn apply_weight(km: &KernelMatrix, kind: WeightKind) -> Result<KernelMatrix> {
    let base = match kind {
        WeightKind::None => return Ok(km.clone()),
        WeightKind::Geometric(b) if b > 0.0 && b.is_finite() => b,
        WeightKind::Geometric(b) => {
            return Err(Error::InvalidParameter(format!("weight base must be positive, got {b}")))
        }
    };
    let mut out = km.clone();
    conjugate(&mut out.entries, base);
    let total = km.weight.map_or(base, |w| w.base * base);
    out.weight = if total == 1.0 { None } else { Some(Weight { base: total }) };
    Ok(out)
}

/// `J_l(x)` for `l` in `lo..=hi`, any sign.
fn bessel_window(x: f64, lo: i64, hi: i64) -> Vec<f64> {
    let top = lo.unsigned_abs().max(hi.unsigned_abs()) as usize;
    let seq = specfun::bessel_j_seq(top, x);
    (lo..=hi)
        .map(|l| {
            let v = seq[l.unsigned_abs() as usize];
            if l < 0 && l % 2 != 0 {
                -v
            } else {
                v
            }
        })
        .collect()
}

/// Index past which `J_l(x)` is negligible in double precision.
fn bessel_reach(x: f64, from: i64) -> i64 {
    from.max(x.ceil() as i64) + 60 + (20.0 * x.cbrt()).ceil() as i64
}

fn bessel_entries(t: f64, offset: i64, size: usize, tol: f64) -> Result<(DMatrix<f64>, usize, f64)> {
    let n = size;
    if t == 0.0 {
        // J_l(0) vanishes for l != 0; only indices i+k, j+k = 0 could contribute.
        let mut e = DMatrix::zeros(n, n);
        for p in 0..n {
            let i = offset + p as i64;
            if i < 0 {
                e[(p, p)] = 1.0;
            }
        }
        let cut = if offset < 0 { (-offset) as usize } else { 0 };
        return Ok((e, cut, 0.0));
    }
    let x = 2.0 * t;
    let lo = offset + 1;
    let hi = bessel_reach(x, offset + n as i64);
    let j = bessel_window(x, lo, hi);
    // suffix[q] = sum of J_l^2 for l >= lo + q
    let mut suffix = vec![0.0; j.len() + 1];
    for q in (0..j.len()).rev() {
        suffix[q] = suffix[q + 1] + j[q] * j[q];
    }
    // Cauchy-Schwarz: the tail past k > cut is at most sum_{l > offset + cut} J_l^2.
    let mut cut = 0usize;
    while cut + n < j.len() && suffix[cut] > tol {
        cut += 1;
    }
    if suffix[cut] > tol {
        return Err(Error::Convergence { what: "kernel inner sum", estimate: suffix[cut], tolerance: tol });
    }
    let mut e = DMatrix::zeros(n, n);
    for p in 0..n {
        for q in p..n {
            let mut s = 0.0;
            for k in 1..=cut {
                s += j[p + k - 1] * j[q + k - 1];
            }
            e[(p, q)] = s;
            e[(q, p)] = s;
        }
    }
    let err = suffix[cut] + 4.0 * f64::EPSILON * (cut as f64).max(1.0);
    Ok((e, cut, err))
}

/// Picks the inner-sum cutoff for families whose `phi+/phi-` has infinitely
/// many negative powers, from Cauchy-Schwarz tail bounds on both sequences.
fn infinite_cut(sym: &SymbolSpec, offset: i64, size: usize, tol: f64) -> Result<usize> {
    let hp = Hp::new(128);
    let mut f = sym.laurent(Ratio::MinusOverPlus, hp);
    let mut g = sym.laurent(Ratio::PlusOverMinus, hp);
    let mut fa: Vec<f64> = Vec::new();
    let mut ga: Vec<f64> = Vec::new();
    const CAP: usize = 200_000;
    loop {
        let have = fa.len();
        let want = (2 * have).max(size + 64);
        for q in have..want {
            let l = offset + 1 + q as i64;
            fa.push(hp::to_f64(&f.coeff(l)?.value).abs());
            ga.push(hp::to_f64(&g.coeff(-l)?.value).abs());
        }
        let tail = |a: &[f64]| -> f64 {
            let n = a.len();
            let rho = if a[n - 2] > 0.0 { a[n - 1] / a[n - 2] } else { 0.0 };
            if rho >= 1.0 {
                f64::INFINITY
            } else {
                a[n - 1] * a[n - 1] * rho * rho / (1.0 - rho * rho)
            }
        };
        let (tf, tg) = (tail(&fa), tail(&ga));
        let mut sf = vec![tf; fa.len() + 1];
        let mut sg = vec![tg; ga.len() + 1];
        for q in (0..fa.len()).rev() {
            sf[q] = sf[q + 1] + fa[q] * fa[q];
            sg[q] = sg[q + 1] + ga[q] * ga[q];
        }
        if let Some(cut) = (0..fa.len()).find(|&c| (sf[c] * sg[c]).sqrt() <= tol) {
            if cut + size <= fa.len() {
                return Ok(cut);
            }
        }
        if fa.len() >= CAP {
            return Err(Error::Convergence {
                what: "kernel inner sum",
                estimate: (sf[fa.len()] * sg[ga.len()]).sqrt(),
                tolerance: tol,
            });
        }
    }
}

/// Index layout of an arbitrary-precision assembly.
struct Plan {
    offset: i64,
    n: usize,
    cut: usize,
    lowest: Option<i64>,
    /// Columns past this are structurally zero.
    col_cap: usize,
}

impl Plan {
    fn new(sym: &SymbolSpec, offset: i64, size: usize, tol: f64) -> Result<Self> {
        let lowest = sym.lowest_power(Ratio::PlusOverMinus);
        let cut = match lowest {
            Some(lp) => ((-lp) - offset).max(0) as usize,
            None => infinite_cut(sym, offset, size, tol)?,
        };
        let col_cap = match lowest {
            Some(lp) => ((-lp) - offset).clamp(0, size as i64) as usize,
            None => size,
        };
        Ok(Self { offset, n: size, cut, lowest, col_cap })
    }
}

/// Rows `0..n`, columns `0..col_cap` of the weighted kernel with absolute
/// majorants, and the bits lost relative to each row's largest entry.
fn hp_rows(sym: &SymbolSpec, plan: &Plan, base: Option<f64>, hp: Hp) -> Result<(Vec<Vec<(Big, Big)>>, f64)> {
    let Plan { offset, n, cut, lowest, col_cap } = *plan;
    let mut f = sym.laurent(Ratio::MinusOverPlus, hp);
    let mut g = sym.laurent(Ratio::PlusOverMinus, hp);
    let span = n + cut;
    let mut fv = Vec::with_capacity(span);
    let mut gv = Vec::with_capacity(span);
    let mut lost: f64 = 0.0;
    for q in 0..span {
        let l = offset + 1 + q as i64;
        fv.push(f.coeff(l)?);
        gv.push(g.coeff(-l)?);
    }
    let powers: Vec<Big> = match base {
        None => Vec::new(),
        Some(b) => {
            // powers[d + n - 1] = b^d for d in -(n-1)..=(n-1)
            let bb = Hp::from_f64(b);
            let inv = hp.div(&Big::ONE, &bb);
            let mut pos = vec![Big::ONE];
            let mut neg = vec![Big::ONE];
            for _ in 1..n {
                pos.push(hp.mul(pos.last().unwrap(), &bb));
                neg.push(hp.mul(neg.last().unwrap(), &inv));
            }
            neg.into_iter().rev().chain(pos.into_iter().skip(1)).collect()
        }
    };
    let mut rows = Vec::with_capacity(n);
    for p in 0..n {
        let mut row: Vec<(Big, Big)> = Vec::with_capacity(col_cap);
        for qc in 0..col_cap {
            let kmax = match lowest {
                Some(lp) => ((-lp) - offset - qc as i64).clamp(0, cut as i64) as usize,
                None => cut,
            };
            let mut acc = Big::ZERO;
            let mut acc_abs = Big::ZERO;
            for k in 1..=kmax {
                let a = &fv[p + k - 1];
                let b = &gv[qc + k - 1];
                acc = hp.fma(&acc, &a.value, &b.value);
                acc_abs = hp.abs_fma(&acc_abs, &a.abs, &b.abs);
            }
            if base.is_some() {
                let w = &powers[p + n - 1 - qc];
                acc = hp.mul(&acc, w);
                acc_abs = hp.mul(&acc_abs, w);
            }
            row.push((acc, acc_abs));
        }
        let top = row.iter().map(|(v, _)| hp::log2_abs(v)).fold(f64::NEG_INFINITY, f64::max);
        for (v, a) in &row {
            let la = hp::log2_abs(a);
            if la.is_finite() {
                lost = lost.max(la - hp::log2_abs(v).max(top - 60.0));
            }
        }
        rows.push(row);
    }
    Ok((rows, lost))
}

fn series_entries(
    sym: &SymbolSpec,
    offset: i64,
    size: usize,
    tol: f64,
    base: Option<f64>,
) -> Result<(DMatrix<f64>, usize, f64)> {
    let plan = Plan::new(sym, offset, size, tol)?;
    let rows = series::adaptive(|hp| hp_rows(sym, &plan, base, hp))?;
    let mut e = DMatrix::zeros(size, size);
    for (p, row) in rows.iter().enumerate() {
        for (q, (v, _)) in row.iter().enumerate() {
            e[(p, q)] = hp::to_f64(v);
        }
    }
    if e.iter().any(|x| !x.is_finite()) {
        return Err(Error::Precondition(
            "kernel entries exceed the double range; build with a geometric weight".into(),
        ));
    }
    let scale = e.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let trunc = if plan.lowest.is_some() { 0.0 } else { tol };
    Ok((e, plan.cut, trunc + 2.0 * f64::EPSILON * scale))
}

/// `det(I - vK)` carried out entirely in arbitrary precision, for determinants
/// far below the size of the entries.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HpDet {
    /// Zero when the value underflows; see `ln_abs`.
    pub value: f64,
    pub ln_abs: f64,
    pub sign: i8,
    pub bits: usize,
}

/// Agreement, in bits, required between two successive precisions.
const DET_AGREE_BITS: f64 = 60.0;

pub fn fredholm_det_hp(sym: &SymbolSpec, offset: i64, size: usize, v: f64) -> Result<HpDet> {
    if size == 0 {
        return Err(Error::InvalidParameter("kernel size must be at least 1".into()));
    }
    let plan = Plan::new(sym, offset, size, 1e-16)?;
    let mut bits = hp::START_BITS;
    let mut prev: Option<Big> = None;
    loop {
        let hp = Hp::new(bits);
        let (rows, lost) = hp_rows(sym, &plan, None, hp)?;
        if lost + hp::KEEP_BITS <= bits as f64 {
            let det = eliminate(rows, plan.col_cap, v, hp);
            if let Some(p) = &prev {
                let diff = hp.add(&det, &-p.clone());
                let close = diff.repr().is_zero()
                    || hp::log2_abs(&diff) <= hp::log2_abs(&det) - DET_AGREE_BITS;
                if close {
                    return Ok(summarize(&det, bits));
                }
            }
            prev = Some(det);
        }
        if bits >= hp::MAX_BITS {
            return Err(Error::Convergence {
                what: "high-precision determinant",
                estimate: bits as f64,
                tolerance: DET_AGREE_BITS,
            });
        }
        bits = (2 * bits).min(hp::MAX_BITS);
    }
}

/// Gaussian elimination with partial pivoting on `I - v E`, restricted to the
/// leading `k` columns (the rest are identity columns).
fn eliminate(rows: Vec<Vec<(Big, Big)>>, k: usize, v: f64, hp: Hp) -> Big {
    let vb = Hp::from_f64(-v);
    let mut a: Vec<Vec<Big>> = rows
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(p, row)| {
            row.into_iter()
                .enumerate()
                .map(|(q, (x, _))| {
                    let y = hp.mul(&x, &vb);
                    if p == q {
                        hp.add(&y, &Big::ONE)
                    } else {
                        y
                    }
                })
                .collect()
        })
        .collect();
    let mut det = Big::ONE;
    for c in 0..k {
        let piv = (c..k)
            .max_by(|&i, &j| hp::log2_abs(&a[i][c]).total_cmp(&hp::log2_abs(&a[j][c])))
            .unwrap();
        if a[piv][c].repr().is_zero() {
            return Big::ZERO;
        }
        if piv != c {
            a.swap(piv, c);
            det = -det;
        }
        let pivot = a[c][c].clone();
        det = hp.mul(&det, &pivot);
        let (upper, lower) = a.split_at_mut(c + 1);
        let prow = &upper[c];
        for row in lower.iter_mut() {
            if row[c].repr().is_zero() {
                continue;
            }
            let factor = -hp.div(&row[c], &pivot);
            for q in c + 1..k {
                row[q] = hp.fma(&row[q], &factor, &prow[q]);
            }
        }
    }
    det
}

fn summarize(det: &Big, bits: usize) -> HpDet {
    if det.repr().is_zero() {
        return HpDet { value: 0.0, ln_abs: f64::NEG_INFINITY, sign: 0, bits };
    }
    let sign = if *det > Big::ZERO { 1 } else { -1 };
    // Scale by an exact power of two into the double range before taking the log.
    let e = hp::log2_abs(det).round() as i64;
    let mut y = hp::abs(det);
    let mut k = e;
    let hp = Hp::new(bits);
    while k != 0 {
        let step = k.clamp(-1000, 1000);
        y = hp.mul(&y, &Hp::from_f64(2f64.powi(-step as i32)));
        k -= step;
    }
    let ln_abs = hp::to_f64(&y).ln() + e as f64 * core::f64::consts::LN_2;
    HpDet { value: hp::to_f64(det), ln_abs, sign, bits }
}

/// `sum_{i >= offset} K(i,i) = sum_{l > offset} (l - offset) f_l g_{-l}`
/// evaluated without forming the matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiagonalTrace {
    pub value: f64,
    pub error: f64,
    /// Working precision of the final pass, 53 for double precision.
    pub bits: usize,
}

pub fn diagonal_trace(sym: &SymbolSpec, offset: i64) -> Result<DiagonalTrace> {
    if let FamilyParams::Exponential { t } = sym.params() {
        let (value, error) = bessel_trace_sum(*t, offset);
        return Ok(DiagonalTrace { value, error, bits: 53 });
    }
    let lowest = sym.lowest_power(Ratio::PlusOverMinus);
    series::adaptive(|hp| {
        let mut f = sym.laurent(Ratio::MinusOverPlus, hp);
        let mut g = sym.laurent(Ratio::PlusOverMinus, hp);
        let mut acc = Big::ZERO;
        let mut acc_abs = Big::ZERO;
        let mut run = 0usize;
        let mut prev = f64::INFINITY;
        let mut l = offset + 1;
        loop {
            if let Some(lp) = lowest {
                if l > -lp {
                    break;
                }
            }
            let w = Hp::from_i64(l - offset);
            let a = f.coeff(l)?;
            let b = g.coeff(-l)?;
            let term = hp.mul(&hp.mul(&a.value, &b.value), &w);
            let term_abs = hp.abs_fma(&Big::ZERO, &hp.mul(&a.abs, &w), &b.abs);
            acc = hp.add(&acc, &term);
            acc_abs = hp.abs_fma(&acc_abs, &term_abs, &Big::ONE);
            if lowest.is_none() {
                let lt = hp::log2_abs(&term_abs);
                if lt < prev && lt < hp::log2_abs(&acc_abs) - 70.0 {
                    run += 1;
                } else {
                    run = 0;
                }
                prev = lt;
                if run >= 8 {
                    break;
                }
                if l - offset > 200_000 {
                    return Err(Error::Convergence {
                        what: "diagonal trace",
                        estimate: lt.exp2(),
                        tolerance: 0.0,
                    });
                }
            }
            l += 1;
        }
        let la = hp::log2_abs(&acc_abs);
        // A sum buried below the working precision is assumed to be at least
        // 2^-40 for the next attempt, but never retried at the same precision.
        let floor = la - hp.bits() as f64 + 8.0;
        let lv = hp::log2_abs(&acc);
        let lost = if !la.is_finite() {
            0.0
        } else if lv < floor {
            (la + 40.0).max(hp.bits() as f64)
        } else {
            (la - lv).max(0.0)
        };
        let value = hp::to_f64(&acc);
        let error = (la - hp.bits() as f64 + 4.0).exp2() + f64::EPSILON * value.abs();
        Ok((DiagonalTrace { value, error, bits: hp.bits() }, lost))
    })
}

/// `sum_{k>=1} k J_{n+k}(2t)^2` with an error estimate.
pub fn bessel_trace_sum(t: f64, n: i64) -> (f64, f64) {
    if t == 0.0 {
        // Only l = 0 contributes J_0(0)^2 = 1, with weight -n when n < 0.
        return (if n < 0 { (-n) as f64 } else { 0.0 }, 0.0);
    }
    let x = 2.0 * t;
    let lo = n + 1;
    let hi = bessel_reach(x, n + 1);
    let j = bessel_window(x, lo, hi);
    let mut s = 0.0;
    let mut c = 0.0;
    for (q, v) in j.iter().enumerate() {
        // Compensated summation keeps the rounding far below the tail.
        let y = (q as f64 + 1.0) * v * v - c;
        let tsum = s + y;
        c = (tsum - s) - y;
        s = tsum;
    }
    let last = j.len() as f64 * j[j.len() - 1] * j[j.len() - 1];
    (s, last + 4.0 * f64::EPSILON * s.abs())
}

/// Positive diagonal `d` with `D K D^-1` as symmetric as the chain allows.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Symmetrizer {
    pub d: Vec<f64>,
    /// `max |S(i,j) - S(j,i)|` over the active indices, `S = D K D^-1`.
    pub residual: f64,
    /// Number of independently normalized chain blocks.
    pub blocks: usize,
    /// Indices left after removing structurally zero rows and columns.
    pub active: Vec<usize>,
}

const CHAIN_FLOOR: f64 = 1e-300;

/// Indices that survive repeated removal of all-zero rows and columns. The
/// removed indices each contribute an eigenvalue 0.
pub fn active_indices(e: &DMatrix<f64>) -> Vec<usize> {
    let mut active: Vec<usize> = (0..e.nrows()).collect();
    loop {
        let before = active.len();
        let snapshot = active.clone();
        active.retain(|&j| {
            let col = snapshot.iter().any(|&i| e[(i, j)] != 0.0);
            let row = snapshot.iter().any(|&i| e[(j, i)] != 0.0);
            col && row
        });
        if active.len() == before {
            return active;
        }
    }
}

pub fn find_symmetrizer(km: &KernelMatrix) -> Result<Symmetrizer> {
    let e = &km.entries;
    let active = active_indices(e);
    let scale = km.max_abs();
    let noise = CHAIN_FLOOR.max(64.0 * f64::EPSILON * scale);
    for (a, &i) in active.iter().enumerate() {
        for &j in &active[a + 1..] {
            let (x, y) = (e[(i, j)], e[(j, i)]);
            if x.abs() > noise && y.abs() > noise && x * y < 0.0 {
                return Err(Error::NotSymmetrizable { row: i, col: j });
            }
        }
    }
    let mut d = vec![1.0; km.size];
    let mut blocks = usize::from(!active.is_empty());
    for w in active.windows(2) {
        let (i, j) = (w[0], w[1]);
        let (up, down) = (e[(i, j)], e[(j, i)]);
        if up.abs() > CHAIN_FLOOR && down.abs() > CHAIN_FLOOR && up * down > 0.0 {
            d[j] = d[i] * (up / down).sqrt();
        } else {
            d[j] = 1.0;
            blocks += 1;
        }
    }
    let mut residual: f64 = 0.0;
    for (a, &i) in active.iter().enumerate() {
        for &j in &active[a + 1..] {
            let sij = d[i] * e[(i, j)] / d[j];
            let sji = d[j] * e[(j, i)] / d[i];
            residual = residual.max((sij - sji).abs());
        }
    }
    Ok(Symmetrizer { d, residual, blocks, active })
}

/// True when the family makes the kernel exactly finite rank.
pub fn is_finite_rank(sym: &SymbolSpec) -> bool {
    matches!(sym.family(), Family::Growth | Family::ConjectureProduct)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_sym(t: f64) -> SymbolSpec {
        SymbolSpec::exponential(t).unwrap()
    }

    #[test]
    fn trivial_kernels_vanish() {
        let k = build_kernel(&exp_sym(0.0), 0, 10, 1e-14).unwrap();
        assert!(k.entries.iter().all(|&v| v == 0.0));
        let g = SymbolSpec::growth(4, 3, 0.0).unwrap();
        let k = build_kernel(&g, 0, 10, 1e-14).unwrap();
        assert!(k.entries.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn exponential_entry_matches_bessel_sum() {
        let k = build_kernel(&exp_sym(2.0), 5, 30, 1e-15).unwrap();
        let direct: f64 = (1..200).map(|k| specfun::bessel_j(5 + k, 4.0).powi(2)).sum();
        assert!((k.entries[(0, 0)] - direct).abs() < 1e-15);
        let off: f64 = (1..200)
            .map(|k| specfun::bessel_j(5 + k, 4.0) * specfun::bessel_j(7 + k, 4.0))
            .sum();
        assert!((k.entries[(0, 2)] - off).abs() < 1e-15);
    }

    #[test]
    fn series_path_matches_bessel_path() {
        // The generic path run on the exponential family via a hand-built Laurent pair.
        let s = exp_sym(1.5);
        let hp = Hp::new(192);
        let mut f = s.laurent(Ratio::MinusOverPlus, hp);
        let mut g = s.laurent(Ratio::PlusOverMinus, hp);
        let k = build_kernel(&s, 2, 6, 1e-15).unwrap();
        for p in 0..6 {
            for q in 0..6 {
                let mut acc = 0.0;
                for kk in 1..60i64 {
                    let i = 2 + p as i64 + kk;
                    let j = 2 + q as i64 + kk;
                    acc += hp::to_f64(&f.coeff(i).unwrap().value) * hp::to_f64(&g.coeff(-j).unwrap().value);
                }
                assert!((acc - k.entries[(p, q)]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn growth_kernel_is_finite_rank() {
        let g = SymbolSpec::growth(4, 4, 0.3).unwrap();
        assert_eq!(default_size(&g, 0), 4);
        let k = build_kernel(&g, 0, 40, 1e-14).unwrap();
        for p in 0..40 {
            for q in 4..40 {
                assert_eq!(k.entries[(p, q)], 0.0);
            }
        }
        assert_eq!(active_indices(&k.entries), vec![0, 1, 2, 3]);
        let sym = find_symmetrizer(&k).unwrap();
        assert!(sym.residual <= 1e-8 * k.max_abs().max(1.0), "{}", sym.residual);
    }

    #[test]
    fn growth_entries_match_exact_reference() {
        // K(0,0) for n = m = 3, r = 1/2, offset 0, from exact rational arithmetic:
        // f_1 g_-1 + f_2 g_-2 + f_3 g_-3.
        let g = SymbolSpec::growth(3, 3, 0.5).unwrap();
        let k = build_kernel(&g, 0, 3, 1e-14).unwrap();
        let hp = Hp::new(256);
        let mut f = g.laurent(Ratio::MinusOverPlus, hp);
        let mut gg = g.laurent(Ratio::PlusOverMinus, hp);
        let want: f64 = (1..=3)
            .map(|l| hp::to_f64(&f.coeff(l).unwrap().value) * hp::to_f64(&gg.coeff(-l).unwrap().value))
            .sum();
        assert!((k.entries[(0, 0)] - want).abs() < 1e-14);
        // g_{-3} = (-r)^3 and g_{-l} = 0 beyond.
        assert_eq!(hp::to_f64(&gg.coeff(-3).unwrap().value), -0.125);
        assert_eq!(hp::to_f64(&gg.coeff(-4).unwrap().value), 0.0);
    }

    #[test]
    fn symmetric_input_gives_identity() {
        let k = build_kernel(&exp_sym(3.0), 2, 20, 1e-15).unwrap();
        let s = find_symmetrizer(&k).unwrap();
        assert!(s.d.iter().all(|&v| v == 1.0));
        assert_eq!(s.residual, 0.0);
    }

    #[test]
    fn rank_one_symmetrizer() {
        let a = [1.0, 2.0, 0.5, 3.0];
        let b = [0.7, 0.2, 1.5, 0.4];
        let e = DMatrix::from_fn(4, 4, |i, j| a[i] * b[j]);
        let k = KernelMatrix::from_entries(exp_sym(0.0), 0, e).unwrap();
        let s = find_symmetrizer(&k).unwrap();
        assert!(s.residual <= 1e-14, "{}", s.residual);
        for i in 0..4 {
            let want = (b[i] / a[i]).sqrt() / (b[0] / a[0]).sqrt();
            assert!((s.d[i] - want).abs() < 1e-14);
        }
    }

    #[test]
    fn sign_conflict_is_reported() {
        let e = DMatrix::from_row_slice(2, 2, &[0.5, 1.0, -1.0, 0.5]);
        let k = KernelMatrix::from_entries(exp_sym(0.0), 0, e).unwrap();
        assert!(matches!(find_symmetrizer(&k), Err(Error::NotSymmetrizable { .. })));
    }

    #[test]
    fn weighting() {
        let k = build_kernel(&exp_sym(2.0), 0, 12, 1e-15).unwrap();
        assert_eq!(apply_weight(&k, WeightKind::Geometric(1.0)).unwrap().entries, k.entries);
        let w = apply_weight(&k, WeightKind::Geometric(0.5)).unwrap();
        assert_eq!(w.weight, Some(Weight { base: 0.5 }));
        assert!((w.entries.trace() - k.entries.trace()).abs() < 1e-15);
        assert!((w.entries[(3, 1)] - 0.25 * k.entries[(3, 1)]).abs() < 1e-17);
        assert!(apply_weight(&k, WeightKind::Geometric(-1.0)).is_err());
        let back = apply_weight(&w, WeightKind::Geometric(2.0)).unwrap();
        assert_eq!(back.weight, None);
        // Weighted build agrees with weighting after the fact.
        let g = SymbolSpec::growth(6, 6, 0.4).unwrap();
        let plain = build_kernel(&g, 1, 5, 1e-14).unwrap();
        let built = build_kernel_weighted(&g, 1, 5, 1e-14, WeightKind::Geometric(0.5)).unwrap();
        let after = apply_weight(&plain, WeightKind::Geometric(0.5)).unwrap();
        for (x, y) in built.entries.iter().zip(after.entries.iter()) {
            assert!((x - y).abs() <= 1e-13 * x.abs().max(1e-300));
        }
    }

    #[test]
    fn diagonal_trace_matches_matrix_trace() {
        let g = SymbolSpec::growth(20, 20, 0.3).unwrap();
        let k = build_kernel(&g, 14, default_size(&g, 14), 1e-14).unwrap();
        let d = diagonal_trace(&g, 14).unwrap();
        assert!((k.entries.trace() - d.value).abs() < 1e-12 * d.value);
        // Exact value from rational arithmetic.
        assert!((d.value - 0.576_843_353_075_807).abs() < 1e-13);
        let c = SymbolSpec::conjecture(vec![0.8, 0.3], vec![0.5, 0.2]).unwrap();
        let k = build_kernel(&c, 0, 2, 1e-14).unwrap();
        let d = diagonal_trace(&c, 0).unwrap();
        assert!((k.entries.trace() - d.value).abs() < 1e-14);
        let s = exp_sym(3.0);
        let k = build_kernel(&s, 4, default_size(&s, 4), 1e-15).unwrap();
        assert!((k.entries.trace() - diagonal_trace(&s, 4).unwrap().value).abs() < 1e-13);
    }

    #[test]
    fn hp_determinant() {
        let g = SymbolSpec::growth(10, 10, 0.3).unwrap();
        let k = build_kernel(&g, 3, default_size(&g, 3), 1e-14).unwrap();
        let f = crate::spectral::fredholm_det(&k, 0.7);
        let h = fredholm_det_hp(&g, 3, default_size(&g, 3), 0.7).unwrap();
        assert!((f - h.value).abs() < 1e-12, "{f} {h:?}");
        assert!((h.ln_abs - h.value.abs().ln()).abs() < 1e-12);
        assert_eq!(h.sign, 1);
        // Far below the double range of the entries.
        let g = SymbolSpec::growth(40, 40, 0.3).unwrap();
        let h = fredholm_det_hp(&g, 6, 34, 1.0).unwrap();
        assert_eq!(h.sign, 1);
        assert!(h.ln_abs < -150.0 && h.ln_abs > -250.0, "{h:?}");
        let z = SymbolSpec::growth(4, 4, 0.0).unwrap();
        assert_eq!(fredholm_det_hp(&z, 0, 4, 1.0).unwrap().value, 1.0);
    }

    #[test]
    fn johansson_kernel_converges() {
        let s = SymbolSpec::johansson(3, 4, 0.5).unwrap();
        let k = build_kernel(&s, 0, 30, 1e-13).unwrap();
        let d = diagonal_trace(&s, 0).unwrap();
        assert!((k.entries.trace() - d.value).abs() < 1e-10, "{} {}", k.entries.trace(), d.value);
        assert!(k.last_row_max() < 1e-6);
    }
}
