//! Monte Carlo sampling of Poissonized Plancherel measure through uniform
//! random permutations, and comparison with `det(I - K)`.
//!
//! Streams are ChaCha8 seeded with `seed_from_u64(seed)` and `set_stream(block)`,
//! one stream per block of [`BLOCK`] samples, so results do not depend on how
//! blocks are scheduled.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::spectral;
use crate::symbols::SymbolSpec;

pub const BLOCK: u64 = 2048;

/// Shift `d` with `P(lambda_1 <= n) = det(I - K)` on `l2({n + d, ...})`, pinned by
/// [`compare_with_det`] against sampling.
pub const FROZEN_OFFSET: i64 = 0;

fn check_permutation(perm: &[u32]) -> Result<()> {
    let n = perm.len();
    let mut seen = vec![false; n];
    for &v in perm {
        let i = v as usize;
        if i == 0 || i > n || seen[i - 1] {
            return Err(Error::NotPermutation(format!("value {v} in a sequence of length {n}")));
        }
        seen[i - 1] = true;
    }
    Ok(())
}

fn lis_unchecked(perm: &[u32]) -> usize {
    let mut tops: Vec<u32> = Vec::new();
    for &x in perm {
        let p = tops.partition_point(|&y| y < x);
        if p == tops.len() {
            tops.push(x);
        } else {
            tops[p] = x;
        }
    }
    tops.len()
}

/// Longest strictly increasing subsequence of a permutation of `1..=N`.
pub fn patience_lis(perm: &[u32]) -> Result<usize> {
    check_permutation(perm)?;
    Ok(lis_unchecked(perm))
}

fn two_rows_unchecked(perm: &[u32]) -> (usize, usize) {
    let mut first: Vec<u32> = Vec::new();
    let mut second: Vec<u32> = Vec::new();
    for &x in perm {
        let p = first.partition_point(|&y| y < x);
        if p == first.len() {
            first.push(x);
            continue;
        }
        let bumped = core::mem::replace(&mut first[p], x);
        let q = second.partition_point(|&y| y < bumped);
        if q == second.len() {
            second.push(bumped);
        } else {
            second[q] = bumped;
        }
    }
    (first.len(), second.len())
}

/// Lengths of the first two rows of the RSK shape.
pub fn rsk_two_rows(perm: &[u32]) -> Result<(usize, usize)> {
    check_permutation(perm)?;
    Ok(two_rows_unchecked(perm))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PermutationSample {
    pub size: usize,
    pub lis: usize,
    pub second_row: usize,
}

/// Histograms of sampled shapes. Merging is associative and commutative.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ShapeCounts {
    pub samples: u64,
    /// `lis[k]` counts samples with `lambda_1 = k`.
    pub lis: Vec<u64>,
    pub second_row: Vec<u64>,
    pub size_sum: u64,
    pub size_sq_sum: u64,
}

fn bump(h: &mut Vec<u64>, k: usize) {
    if h.len() <= k {
        h.resize(k + 1, 0);
    }
    h[k] += 1;
}

impl ShapeCounts {
    pub fn push(&mut self, s: PermutationSample) {
        self.samples += 1;
        bump(&mut self.lis, s.lis);
        bump(&mut self.second_row, s.second_row);
        self.size_sum += s.size as u64;
        self.size_sq_sum += (s.size as u64) * (s.size as u64);
    }

    pub fn merge(&mut self, other: &ShapeCounts) {
        self.samples += other.samples;
        for (k, &c) in other.lis.iter().enumerate() {
            if c > 0 {
                if self.lis.len() <= k {
                    self.lis.resize(k + 1, 0);
                }
                self.lis[k] += c;
            }
        }
        for (k, &c) in other.second_row.iter().enumerate() {
            if c > 0 {
                if self.second_row.len() <= k {
                    self.second_row.resize(k + 1, 0);
                }
                self.second_row[k] += c;
            }
        }
        self.size_sum += other.size_sum;
        self.size_sq_sum += other.size_sq_sum;
    }

    /// Empirical `P(lambda_1 <= n)`.
    pub fn cdf(&self, n: i64) -> f64 {
        if n < 0 || self.samples == 0 {
            return 0.0;
        }
        let top = (n as usize + 1).min(self.lis.len());
        self.lis[..top].iter().sum::<u64>() as f64 / self.samples as f64
    }

    pub fn mean_size(&self) -> f64 {
        self.size_sum as f64 / self.samples as f64
    }
}

/// One sample: `N ~ Poisson(t^2)`, a uniform permutation of size `N`, its two top rows.
pub fn draw<R: Rng>(rng: &mut R, poisson: Option<&Poisson<f64>>, buf: &mut Vec<u32>) -> PermutationSample {
    let size = poisson.map_or(0, |p| p.sample(rng) as usize);
    buf.clear();
    buf.extend(1..=size as u32);
    buf.shuffle(rng);
    let (lis, second_row) = two_rows_unchecked(buf);
    PermutationSample { size, lis, second_row }
}

fn poisson_for(t: f64) -> Result<Option<Poisson<f64>>> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("t must be nonnegative, got {t}")));
    }
    if t == 0.0 {
        return Ok(None);
    }
    Poisson::new(t * t)
        .map(Some)
        .map_err(|e| Error::InvalidParameter(format!("Poisson mean {}: {e}", t * t)))
}

/// Samples `count` shapes from stream `block`.
pub fn sample_block(t: f64, seed: u64, block: u64, count: u64) -> Result<ShapeCounts> {
    let poisson = poisson_for(t)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    let mut buf = Vec::new();
    let mut out = ShapeCounts::default();
    for _ in 0..count {
        out.push(draw(&mut rng, poisson.as_ref(), &mut buf));
    }
    Ok(out)
}

/// Block layout `(block index, count)` covering `samples`.
pub fn blocks(samples: u64) -> Vec<(u64, u64)> {
    (0..samples.div_ceil(BLOCK))
        .map(|b| (b, BLOCK.min(samples - b * BLOCK)))
        .collect()
}

pub fn sample_poissonized(t: f64, samples: u64, seed: u64) -> Result<ShapeCounts> {
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be at least 1".into()));
    }
    let mut out = ShapeCounts::default();
    for (b, count) in blocks(samples) {
        out.merge(&sample_block(t, seed, b, count)?);
    }
    Ok(out)
}

/// Offsets compared against the empirical distribution, as shifts of `n`.
pub const CANDIDATE_SHIFTS: [i64; 3] = [-1, 0, 1];
/// Agreement radius in standard errors.
pub const AGREEMENT_SE: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct McRow {
    pub n: i64,
    pub p_hat: f64,
    /// `sqrt(p_hat (1 - p_hat) / samples)`.
    pub std_error: f64,
    /// `det(I - K)` on `l2({n + shift, ...})` for each shift in `shifts`.
    pub det: Vec<f64>,
    pub det_delta: Vec<f64>,
    pub agrees: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct McReport {
    pub t: f64,
    pub samples: u64,
    pub seed: u64,
    pub shifts: Vec<i64>,
    pub rows: Vec<McRow>,
    /// Shifts that agree on every row of the window.
    pub consistent: Vec<i64>,
    /// The single consistent shift, when exactly one exists.
    pub offset: Option<i64>,
    pub max_deviation: Vec<f64>,
}

/// Agreement test. The radius uses the larger of the empirical and the
/// predicted binomial standard error, so rows where `p_hat` is exactly 0 or 1
/// still carry a nonzero tolerance.
pub fn agrees(p_hat: f64, det: f64, samples: u64) -> bool {
    let var = (p_hat * (1.0 - p_hat)).max(det.clamp(0.0, 1.0) * (1.0 - det.clamp(0.0, 1.0)));
    (p_hat - det).abs() <= AGREEMENT_SE * (var / samples as f64).sqrt() + 1e-12
}

pub fn compare_shifts(
    t: f64,
    window: core::ops::RangeInclusive<i64>,
    counts: &ShapeCounts,
    seed: u64,
    shifts: &[i64],
) -> Result<McReport> {
    let sym = SymbolSpec::exponential(t)?;
    let samples = counts.samples;
    let mut rows = Vec::new();
    for n in window {
        let p_hat = counts.cdf(n);
        let std_error = (p_hat * (1.0 - p_hat) / samples as f64).sqrt();
        let mut det = Vec::new();
        let mut det_delta = Vec::new();
        let mut ok = Vec::new();
        for &d in shifts {
            let rep = spectral::fredholm_det_checked(&sym, n + d, None, 1.0, 1e-10)?;
            ok.push(agrees(p_hat, rep.value, samples));
            det.push(rep.value);
            det_delta.push(rep.delta);
        }
        rows.push(McRow { n, p_hat, std_error, det, det_delta, agrees: ok });
    }
    let consistent: Vec<i64> = shifts
        .iter()
        .enumerate()
        .filter(|(k, _)| rows.iter().all(|r| r.agrees[*k]))
        .map(|(_, &d)| d)
        .collect();
    let max_deviation = (0..shifts.len())
        .map(|k| rows.iter().map(|r| (r.p_hat - r.det[k]).abs()).fold(0.0, f64::max))
        .collect();
    let offset = (consistent.len() == 1).then(|| consistent[0]);
    Ok(McReport {
        t,
        samples,
        seed,
        shifts: shifts.to_vec(),
        rows,
        consistent,
        offset,
        max_deviation,
    })
}

/// Samples and compares the empirical `P(lambda_1 <= n)` with the determinant
/// for each candidate shift. No consistent shift is a hard error.
pub fn compare_with_det(
    t: f64,
    window: core::ops::RangeInclusive<i64>,
    samples: u64,
    seed: u64,
) -> Result<McReport> {
    let counts = sample_poissonized(t, samples, seed)?;
    let rep = compare_shifts(t, window, &counts, seed, &CANDIDATE_SHIFTS)?;
    if rep.consistent.is_empty() {
        return Err(Error::NoConsistentOffset);
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn permutations(n: u32) -> Vec<Vec<u32>> {
        let mut out = Vec::new();
        let mut p: Vec<u32> = (1..=n).collect();
        heap(&mut p, n as usize, &mut out);
        out
    }

    fn heap(p: &mut Vec<u32>, k: usize, out: &mut Vec<Vec<u32>>) {
        if k <= 1 {
            out.push(p.clone());
            return;
        }
        for i in 0..k {
            heap(p, k - 1, out);
            if k % 2 == 0 {
                p.swap(i, k - 1);
            } else {
                p.swap(0, k - 1);
            }
        }
    }

    #[test]
    fn small_examples() {
        assert_eq!(patience_lis(&[1, 2, 3, 4, 5]).unwrap(), 5);
        assert_eq!(patience_lis(&[5, 4, 3, 2, 1]).unwrap(), 1);
        assert_eq!(patience_lis(&[2, 1, 3]).unwrap(), 2);
        assert_eq!(patience_lis(&[]).unwrap(), 0);
        assert_eq!(rsk_two_rows(&[1, 2, 3, 4]).unwrap(), (4, 0));
        assert_eq!(rsk_two_rows(&[4, 3, 2, 1]).unwrap(), (1, 1));
        assert_eq!(rsk_two_rows(&[2, 1, 3]).unwrap(), (2, 1));
        assert!(matches!(patience_lis(&[1, 1]), Err(Error::NotPermutation(_))));
        assert!(rsk_two_rows(&[0, 1]).is_err());
    }

    #[test]
    fn lis_distribution_for_three() {
        let mut h = [0; 4];
        for p in permutations(3) {
            h[patience_lis(&p).unwrap()] += 1;
        }
        assert_eq!(h, [0, 1, 4, 1]);
    }

    #[test]
    fn zero_time() {
        let c = sample_poissonized(0.0, 100, 1).unwrap();
        assert_eq!(c.lis, vec![100]);
        assert_eq!(c.cdf(0), 1.0);
        let r = compare_with_det(0.0, 0..=2, 100, 1).unwrap();
        assert!(r.rows.iter().all(|row| row.det[1] == 1.0 && row.agrees[1]));
    }

    #[test]
    fn reproducible_and_split_invariant() {
        let a = sample_poissonized(1.5, 5000, 9).unwrap();
        let b = sample_poissonized(1.5, 5000, 9).unwrap();
        assert_eq!(a, b);
        let mut c = ShapeCounts::default();
        for (blk, n) in blocks(5000).into_iter().rev() {
            c.merge(&sample_block(1.5, 9, blk, n).unwrap());
        }
        assert_eq!(a, c);
        assert_ne!(a, sample_poissonized(1.5, 5000, 10).unwrap());
    }

    #[test]
    fn poisson_mean() {
        let t = 2.0;
        let c = sample_poissonized(t, 100_000, 3).unwrap();
        let se = (t * t / c.samples as f64).sqrt();
        assert!((c.mean_size() - t * t).abs() < 4.0 * se);
        for w in 0..10 {
            assert!(c.cdf(w) <= c.cdf(w + 1));
        }
    }

    #[test]
    fn agreement_radius() {
        assert!(agrees(0.5, 0.5 + 3.9 * (0.25f64 / 1e4).sqrt(), 10_000));
        assert!(!agrees(0.5, 0.5 + 4.1 * (0.25f64 / 1e4).sqrt(), 10_000));
        assert!(agrees(1.0, 1.0, 10));
    }
}
